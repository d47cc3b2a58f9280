//! Candidate selection funnel.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::UserId;

#[derive(Debug, Error)]
pub enum CohortError {
    #[error("percentile of an empty list")]
    EmptyValues,
    #[error("percentile {0} outside (0, 100]")]
    BadPercentile(f64),
    #[error("no candidates")]
    NoCandidates,
    #[error("invalid band for {name}: min {min} > max {max}")]
    ContradictoryBand {
        name: &'static str,
        min: u64,
        max: u64,
    },
    #[error("bot score threshold {0} outside (0, 1]")]
    BadBotThreshold(f64),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("row {row}: {msg}")]
    InvalidProfile { row: usize, msg: String },
}

/// One platform account as seen by the selection funnel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserProfile {
    pub user_id: UserId,
    pub us_based: bool,
    pub english: bool,
    pub verified: bool,
    pub username: String,
    pub followers: u64,
    pub following: u64,
    pub statuses: u64,
    pub favorites: u64,
    pub listed: u64,
    pub bot_score: f64,
    pub weekly_keyword_tweets: u64,
    pub reply_only: bool,
}

/// Nearest-rank percentile: the value at rank `ceil(p/100 · n)` of the sorted list.
pub fn percentile_threshold(values: &[u64], p: f64) -> Result<u64, CohortError> {
    if values.is_empty() {
        return Err(CohortError::EmptyValues);
    }
    if !(p > 0.0 && p <= 100.0) {
        return Err(CohortError::BadPercentile(p));
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let n = sorted.len();
    let rank = ((p / 100.0) * n as f64).ceil() as usize;
    Ok(sorted[rank.clamp(1, n) - 1])
}

/// Upper bound on weekly keyword tweets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum ActivityCap {
    /// Keep users up to and including this nearest-rank percentile of the
    /// stage-3 survivors.
    Percentile(f64),
    /// Keep users at or below this absolute count.
    Absolute(u64),
}

impl ActivityCap {
    /// 90th percentile of frequent tweeters (10 tweets/week at paper scale).
    pub const P90: ActivityCap = ActivityCap::Percentile(90.0);
    /// Absolute cap of 10 weekly keyword tweets.
    pub const ABSOLUTE_10: ActivityCap = ActivityCap::Absolute(10);
    /// Absolute cap of 20 weekly keyword tweets.
    pub const ABSOLUTE_20: ActivityCap = ActivityCap::Absolute(20);
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CohortConfig {
    pub min_weekly_keyword_tweets: u64,
    pub activity_cap: ActivityCap,
    pub followers_min: u64,
    pub followers_max: u64,
    pub following_min: u64,
    pub following_max: u64,
    /// Users at or above this score are removed.
    pub bot_score_max: f64,
}

impl Default for CohortConfig {
    fn default() -> Self {
        CohortConfig {
            min_weekly_keyword_tweets: 2,
            activity_cap: ActivityCap::P90,
            followers_min: 79,
            followers_max: 16_500,
            following_min: 127,
            following_max: 4_500,
            bot_score_max: 0.6,
        }
    }
}

impl CohortConfig {
    pub fn validate(&self) -> Result<(), CohortError> {
        if self.followers_min > self.followers_max {
            return Err(CohortError::ContradictoryBand {
                name: "followers",
                min: self.followers_min,
                max: self.followers_max,
            });
        }
        if self.following_min > self.following_max {
            return Err(CohortError::ContradictoryBand {
                name: "following",
                min: self.following_min,
                max: self.following_max,
            });
        }
        if let ActivityCap::Absolute(cap) = self.activity_cap {
            if self.min_weekly_keyword_tweets > cap {
                return Err(CohortError::ContradictoryBand {
                    name: "weekly_keyword_tweets",
                    min: self.min_weekly_keyword_tweets,
                    max: cap,
                });
            }
        }
        if let ActivityCap::Percentile(p) = self.activity_cap {
            if !(p > 0.0 && p <= 100.0) {
                return Err(CohortError::BadPercentile(p));
            }
        }
        if !(self.bot_score_max > 0.0 && self.bot_score_max <= 1.0) {
            return Err(CohortError::BadBotThreshold(self.bot_score_max));
        }
        Ok(())
    }
}

/// Funnel stages in application order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    LocationLanguage,
    AccountType,
    MinActivity,
    ActivityCap,
    FollowBands,
    BotScore,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::LocationLanguage,
        Stage::AccountType,
        Stage::MinActivity,
        Stage::ActivityCap,
        Stage::FollowBands,
        Stage::BotScore,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::LocationLanguage => "us_english",
            Stage::AccountType => "personal_account",
            Stage::MinActivity => "min_keyword_activity",
            Stage::ActivityCap => "keyword_activity_cap",
            Stage::FollowBands => "follow_bands",
            Stage::BotScore => "bot_score",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Funnel predicates with every population-dependent threshold resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedFilter {
    pub config: CohortConfig,
    pub activity_cap: u64,
}

impl ResolvedFilter {
    /// Resolves the activity cap. A percentile cap is taken over users who
    /// pass the first three stages.
    pub fn resolve(candidates: &[UserProfile], config: &CohortConfig) -> Result<Self, CohortError> {
        config.validate()?;
        let activity_cap = match config.activity_cap {
            ActivityCap::Absolute(c) => c,
            ActivityCap::Percentile(p) => {
                let partial = ResolvedFilter {
                    config: config.clone(),
                    activity_cap: u64::MAX,
                };
                let pool: Vec<u64> = candidates
                    .iter()
                    .filter(|u| {
                        [
                            Stage::LocationLanguage,
                            Stage::AccountType,
                            Stage::MinActivity,
                        ]
                        .iter()
                        .all(|s| partial.passes(u, *s))
                    })
                    .map(|u| u.weekly_keyword_tweets)
                    .collect();
                if pool.is_empty() {
                    0
                } else {
                    percentile_threshold(&pool, p)?
                }
            }
        };
        Ok(ResolvedFilter {
            config: config.clone(),
            activity_cap,
        })
    }

    pub fn passes(&self, u: &UserProfile, stage: Stage) -> bool {
        let c = &self.config;
        match stage {
            Stage::LocationLanguage => u.us_based && u.english,
            Stage::AccountType => {
                !u.verified && !u.username.to_lowercase().contains("bot") && !u.reply_only
            }
            Stage::MinActivity => u.weekly_keyword_tweets >= c.min_weekly_keyword_tweets,
            Stage::ActivityCap => u.weekly_keyword_tweets <= self.activity_cap,
            Stage::FollowBands => {
                (c.followers_min..=c.followers_max).contains(&u.followers)
                    && (c.following_min..=c.following_max).contains(&u.following)
            }
            Stage::BotScore => u.bot_score < c.bot_score_max,
        }
    }

    /// Every stage `u` fails, in funnel order.
    pub fn violations(&self, u: &UserProfile) -> Vec<Stage> {
        Stage::ALL
            .iter()
            .copied()
            .filter(|s| !self.passes(u, *s))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortReport {
    pub candidate_count: usize,
    pub stage_names: Vec<String>,
    pub stage_counts: Vec<usize>,
    pub activity_cap: u64,
    pub final_ids: BTreeSet<UserId>,
    /// First stage that removed each excluded user.
    pub exclusions: BTreeMap<UserId, Stage>,
}

/// Runs the six-stage funnel over `candidates`.
pub fn build_cohort(
    candidates: &[UserProfile],
    config: &CohortConfig,
) -> Result<CohortReport, CohortError> {
    if candidates.is_empty() {
        return Err(CohortError::NoCandidates);
    }
    let filter = ResolvedFilter::resolve(candidates, config)?;
    build_cohort_with(candidates, &filter, &Stage::ALL)
}

/// Runs the funnel with already-resolved thresholds and a caller-chosen stage order.
pub fn build_cohort_with(
    candidates: &[UserProfile],
    filter: &ResolvedFilter,
    order: &[Stage],
) -> Result<CohortReport, CohortError> {
    if candidates.is_empty() {
        return Err(CohortError::NoCandidates);
    }
    let mut alive: Vec<&UserProfile> = candidates.iter().collect();
    let mut exclusions = BTreeMap::new();
    let mut counts = Vec::with_capacity(order.len());
    for stage in order {
        alive.retain(|u| {
            let ok = filter.passes(u, *stage);
            if !ok {
                exclusions.insert(u.user_id, *stage);
            }
            ok
        });
        counts.push(alive.len());
    }
    Ok(CohortReport {
        candidate_count: candidates.len(),
        stage_names: order.iter().map(|s| s.name().to_string()).collect(),
        stage_counts: counts,
        activity_cap: filter.activity_cap,
        final_ids: alive.iter().map(|u| u.user_id).collect(),
        exclusions,
    })
}

pub fn read_profiles<R: Read>(reader: R) -> Result<Vec<UserProfile>, CohortError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for (i, rec) in rdr.deserialize::<UserProfile>().enumerate() {
        let p = rec?;
        if !(0.0..=1.0).contains(&p.bot_score) {
            return Err(CohortError::InvalidProfile {
                row: i + 1,
                msg: format!("bot_score {} outside [0, 1]", p.bot_score),
            });
        }
        out.push(p);
    }
    Ok(out)
}

pub fn write_profiles<W: Write>(writer: W, profiles: &[UserProfile]) -> Result<(), CohortError> {
    let mut w = csv::Writer::from_writer(writer);
    for p in profiles {
        w.serialize(p)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn ok_user(id: u64) -> UserProfile {
        UserProfile {
            user_id: UserId(id),
            us_based: true,
            english: true,
            verified: false,
            username: format!("user{id}"),
            followers: 500,
            following: 600,
            statuses: 5000,
            favorites: 8000,
            listed: 3,
            bot_score: 0.1,
            weekly_keyword_tweets: 4,
            reply_only: false,
        }
    }

    #[test]
    fn nearest_rank() {
        let v: Vec<u64> = (1..=10).collect();
        assert_eq!(percentile_threshold(&v, 90.0).unwrap(), 9);
        assert_eq!(percentile_threshold(&[5, 5, 5], 1.0).unwrap(), 5);
        assert_eq!(percentile_threshold(&[5, 5, 5], 99.9).unwrap(), 5);
        assert_eq!(percentile_threshold(&[7], 50.0).unwrap(), 7);
        assert!(matches!(
            percentile_threshold(&[], 50.0),
            Err(CohortError::EmptyValues)
        ));
    }

    #[test]
    fn bot_score_boundary_excluded() {
        let mut u = ok_user(1);
        u.bot_score = 0.6;
        let r = build_cohort(&[u.clone(), ok_user(2)], &CohortConfig::default()).unwrap();
        assert_eq!(r.exclusions.get(&UserId(1)), Some(&Stage::BotScore));
        u.bot_score = 0.5999;
        let r = build_cohort(&[u], &CohortConfig::default()).unwrap();
        assert!(r.final_ids.contains(&UserId(1)));
    }

    #[test]
    fn follow_band_inclusive() {
        let mut u = ok_user(1);
        u.followers = 79;
        u.following = 127;
        let mut v = ok_user(2);
        v.followers = 16_500;
        v.following = 4_500;
        let mut w = ok_user(3);
        w.followers = 78;
        let r = build_cohort(&[u, v, w], &CohortConfig::default()).unwrap();
        assert_eq!(
            r.final_ids.iter().copied().collect::<Vec<_>>(),
            vec![UserId(1), UserId(2)]
        );
        assert_eq!(r.exclusions[&UserId(3)], Stage::FollowBands);
    }

    #[test]
    fn bot_username_case_insensitive() {
        let mut u = ok_user(1);
        u.username = "NewsBOTx".into();
        let r = build_cohort(&[u], &CohortConfig::default()).unwrap();
        assert_eq!(r.exclusions[&UserId(1)], Stage::AccountType);
    }

    #[test]
    fn contradictory_band_rejected() {
        let cfg = CohortConfig {
            followers_min: 10_000,
            followers_max: 100,
            ..CohortConfig::default()
        };
        assert!(matches!(
            build_cohort(&[ok_user(1)], &cfg),
            Err(CohortError::ContradictoryBand { .. })
        ));
    }

    #[test]
    fn percentile_cap_uses_stage3_survivors() {
        let mut users: Vec<UserProfile> = (1..=10)
            .map(|i| {
                let mut u = ok_user(i);
                u.weekly_keyword_tweets = i + 1; // 2..=11
                u
            })
            .collect();
        // A non-US heavy tweeter must not move the percentile.
        let mut heavy = ok_user(99);
        heavy.us_based = false;
        heavy.weekly_keyword_tweets = 1000;
        users.push(heavy);
        let r = build_cohort(&users, &CohortConfig::default()).unwrap();
        assert_eq!(r.activity_cap, 10);
        assert_eq!(r.final_ids.len(), 9);
    }

    #[test]
    fn stage_counts_non_increasing() {
        let mut users: Vec<UserProfile> = (0..20).map(ok_user).collect();
        users[0].english = false;
        users[1].verified = true;
        users[2].weekly_keyword_tweets = 1;
        users[3].bot_score = 0.9;
        let r = build_cohort(&users, &CohortConfig::default()).unwrap();
        assert!(r.stage_counts.windows(2).all(|w| w[0] >= w[1]));
        assert_eq!(*r.stage_counts.last().unwrap(), r.final_ids.len());
        assert_eq!(r.exclusions.len() + r.final_ids.len(), users.len());
    }

    #[test]
    fn csv_round_trip() {
        let users = vec![ok_user(1), ok_user(2)];
        let mut buf = Vec::new();
        write_profiles(&mut buf, &users).unwrap();
        assert_eq!(read_profiles(buf.as_slice()).unwrap(), users);
    }
}
