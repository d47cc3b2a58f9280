use std::collections::BTreeSet;

use nudge_core::cohort::{
    build_cohort, build_cohort_with, percentile_threshold, ActivityCap, CohortConfig,
    ResolvedFilter, Stage, UserProfile,
};
use nudge_core::UserId;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sorted_rank(values: &[u64], p: f64) -> u64 {
    let mut v = values.to_vec();
    v.sort();
    let rank = (p / 100.0 * v.len() as f64).ceil() as usize;
    v[rank.max(1) - 1]
}

#[test]
fn percentile_matches_sort_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let values: Vec<u64> = (0..1000).map(|_| rng.gen_range(0..500)).collect();
    for p in [0.1, 1.0, 10.0, 25.0, 50.0, 90.0, 99.9, 100.0] {
        assert_eq!(
            percentile_threshold(&values, p).unwrap(),
            sorted_rank(&values, p),
            "p={p}"
        );
    }
    assert_eq!(
        percentile_threshold(&(1..=10).collect::<Vec<_>>(), 90.0).unwrap(),
        9
    );
    assert_eq!(percentile_threshold(&[5, 5, 5], 37.0).unwrap(), 5);
}

fn clean(id: u64) -> UserProfile {
    UserProfile {
        user_id: UserId(id),
        us_based: true,
        english: true,
        verified: false,
        username: format!("person{id}"),
        followers: 500,
        following: 600,
        statuses: 3000,
        favorites: 4000,
        listed: 2,
        bot_score: 0.2,
        weekly_keyword_tweets: 4,
        reply_only: false,
    }
}

/// Plants zero or more violations on each candidate.
fn planted_table(n: u64, seed: u64) -> Vec<UserProfile> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let mut u = clean(i);
            u.weekly_keyword_tweets = rng.gen_range(2..9);
            u.followers = rng.gen_range(79..=16_500);
            u.following = rng.gen_range(127..=4_500);
            u.bot_score = rng.gen_range(0.0..0.6);
            for _ in 0..rng.gen_range(0..3) {
                match rng.gen_range(0..12) {
                    0 => u.us_based = false,
                    1 => u.english = false,
                    2 => u.verified = true,
                    3 => {
                        u.username = ["NewsBot", "botany_fan", "x_BOT"]
                            .choose(&mut rng)
                            .unwrap()
                            .to_string()
                    }
                    4 => u.reply_only = true,
                    5 => u.weekly_keyword_tweets = rng.gen_range(0..2),
                    6 => u.weekly_keyword_tweets = rng.gen_range(9..60),
                    7 => u.followers = *[0, 78, 16_501, 90_000].choose(&mut rng).unwrap(),
                    8 => u.following = *[0, 126, 4_501, 20_000].choose(&mut rng).unwrap(),
                    9 => u.bot_score = rng.gen_range(0.6..=1.0),
                    _ => {}
                }
            }
            u
        })
        .collect()
}

/// Each predicate written out independently, then intersected.
fn oracle(c: &[UserProfile], cfg: &CohortConfig, cap: u64) -> BTreeSet<UserId> {
    let p1: BTreeSet<UserId> = c
        .iter()
        .filter(|u| u.us_based && u.english)
        .map(|u| u.user_id)
        .collect();
    let p2: BTreeSet<UserId> = c
        .iter()
        .filter(|u| {
            !u.verified && !u.username.to_ascii_lowercase().contains("bot") && !u.reply_only
        })
        .map(|u| u.user_id)
        .collect();
    let p3: BTreeSet<UserId> = c
        .iter()
        .filter(|u| u.weekly_keyword_tweets >= cfg.min_weekly_keyword_tweets)
        .map(|u| u.user_id)
        .collect();
    let p4: BTreeSet<UserId> = c
        .iter()
        .filter(|u| u.weekly_keyword_tweets <= cap)
        .map(|u| u.user_id)
        .collect();
    let p5: BTreeSet<UserId> = c
        .iter()
        .filter(|u| {
            u.followers >= cfg.followers_min
                && u.followers <= cfg.followers_max
                && u.following >= cfg.following_min
                && u.following <= cfg.following_max
        })
        .map(|u| u.user_id)
        .collect();
    let p6: BTreeSet<UserId> = c
        .iter()
        .filter(|u| u.bot_score < cfg.bot_score_max)
        .map(|u| u.user_id)
        .collect();
    [p2, p3, p4, p5, p6]
        .into_iter()
        .fold(p1, |acc, s| acc.intersection(&s).copied().collect())
}

#[test]
fn planted_table_matches_predicate_oracle() {
    let table = planted_table(1000, 3);
    for cap in [
        ActivityCap::ABSOLUTE_10,
        ActivityCap::ABSOLUTE_20,
        ActivityCap::P90,
    ] {
        let cfg = CohortConfig {
            activity_cap: cap,
            ..Default::default()
        };
        let report = build_cohort(&table, &cfg).unwrap();
        let expected_cap = match cap {
            ActivityCap::Absolute(c) => c,
            ActivityCap::Percentile(p) => {
                let pool: Vec<u64> = table
                    .iter()
                    .filter(|u| {
                        u.us_based
                            && u.english
                            && !u.verified
                            && !u.username.to_ascii_lowercase().contains("bot")
                            && !u.reply_only
                            && u.weekly_keyword_tweets >= 2
                    })
                    .map(|u| u.weekly_keyword_tweets)
                    .collect();
                sorted_rank(&pool, p)
            }
        };
        assert_eq!(report.activity_cap, expected_cap);
        let want = oracle(&table, &cfg, expected_cap);
        assert_eq!(report.final_ids, want);
        assert!(want.len() > 100 && want.len() < 1000);
        for (id, stage) in &report.exclusions {
            let u = table.iter().find(|u| u.user_id == *id).unwrap();
            let filter = ResolvedFilter::resolve(&table, &cfg).unwrap();
            assert!(!filter.passes(u, *stage));
            assert_eq!(filter.violations(u).first(), Some(stage));
        }
        assert_eq!(
            report.exclusions.len() + report.final_ids.len(),
            table.len()
        );
    }
}

#[test]
fn documented_boundaries() {
    let mut u = clean(1);
    u.bot_score = 0.6;
    let r = build_cohort(&[u], &CohortConfig::default()).unwrap();
    assert_eq!(r.exclusions[&UserId(1)], Stage::BotScore);
    let mut u = clean(2);
    u.followers = 79;
    u.following = 127;
    let r = build_cohort(&[u], &CohortConfig::default()).unwrap();
    assert!(r.final_ids.contains(&UserId(2)));
}

fn profile_strategy() -> impl Strategy<Value = UserProfile> {
    (
        any::<[bool; 5]>(),
        0u64..30,
        0u64..20_000,
        0u64..6_000,
        0.0f64..=1.0,
        prop::sample::select(vec!["alice", "robot", "Bob", "BOTS4U", "carol"]),
    )
        .prop_map(|(flags, wk, fo, fi, bot, name)| UserProfile {
            user_id: UserId(0),
            us_based: flags[0],
            english: flags[1],
            verified: flags[2],
            username: name.to_string(),
            followers: fo,
            following: fi,
            statuses: 10,
            favorites: 10,
            listed: 0,
            bot_score: bot,
            weekly_keyword_tweets: wk,
            reply_only: flags[3] && flags[4],
        })
}

fn table_strategy() -> impl Strategy<Value = Vec<UserProfile>> {
    prop::collection::vec(profile_strategy(), 1..60).prop_map(|mut v| {
        for (i, u) in v.iter_mut().enumerate() {
            u.user_id = UserId(i as u64);
        }
        v
    })
}

/// Survivor sets after each stage, replayed from the exclusion map.
fn survivor_sets(
    table: &[UserProfile],
    order: &[Stage],
    cfg: &CohortConfig,
) -> Vec<BTreeSet<UserId>> {
    let filter = ResolvedFilter::resolve(table, cfg).unwrap();
    let mut alive: BTreeSet<UserId> = table.iter().map(|u| u.user_id).collect();
    let mut out = Vec::new();
    for s in order {
        alive = table
            .iter()
            .filter(|u| alive.contains(&u.user_id) && filter.passes(u, *s))
            .map(|u| u.user_id)
            .collect();
        out.push(alive.clone());
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn stages_are_subset_monotone(table in table_strategy()) {
        let cfg = CohortConfig::default();
        let report = build_cohort(&table, &cfg).unwrap();
        let sets = survivor_sets(&table, &Stage::ALL, &cfg);
        for w in sets.windows(2) {
            prop_assert!(w[1].is_subset(&w[0]));
        }
        let counts: Vec<usize> = sets.iter().map(|s| s.len()).collect();
        prop_assert_eq!(&report.stage_counts, &counts);
        prop_assert_eq!(report.final_ids.len(), *counts.last().unwrap());
        for w in report.stage_counts.windows(2) {
            prop_assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn final_set_ignores_stage_order(table in table_strategy(), seed in any::<u64>()) {
        let cfg = CohortConfig::default();
        let filter = ResolvedFilter::resolve(&table, &cfg).unwrap();
        let base = build_cohort_with(&table, &filter, &Stage::ALL).unwrap();
        let mut order = Stage::ALL.to_vec();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let other = build_cohort_with(&table, &filter, &order).unwrap();
        prop_assert_eq!(base.final_ids, other.final_ids);
    }

    #[test]
    fn every_exclusion_is_named(table in table_strategy()) {
        let cfg = CohortConfig::default();
        let filter = ResolvedFilter::resolve(&table, &cfg).unwrap();
        let report = build_cohort(&table, &cfg).unwrap();
        for u in &table {
            match report.exclusions.get(&u.user_id) {
                Some(stage) => prop_assert!(filter.violations(u).contains(stage)),
                None => prop_assert!(filter.violations(u).is_empty()),
            }
        }
    }

    #[test]
    fn percentile_matches_oracle(values in prop::collection::vec(0u64..1000, 1..200), p in 0.01f64..=100.0) {
        prop_assert_eq!(percentile_threshold(&values, p).unwrap(), sorted_rank(&values, p));
    }
}
