use std::collections::BTreeMap;

use nudge_core::assignment::{anova_balance, arm_sizes, assign_arms};
use nudge_core::stats::{f_sf, one_way_anova};
use nudge_core::{Arm, UserId};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on P_n.
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (1..=n)
        .map(|i| {
            let mut x = (std::f64::consts::PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// Composite 20-point Gauss-Legendre over 64 panels.
fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    const PANELS: usize = 64;
    let rule = gauss_legendre(20);
    let h = (b - a) / PANELS as f64;
    (0..PANELS)
        .map(|i| {
            let mid = a + (i as f64 + 0.5) * h;
            rule.iter()
                .map(|(x, w)| w * f(mid + 0.5 * h * x))
                .sum::<f64>()
                * 0.5
                * h
        })
        .sum()
}

/// Upper tail of F(d1, d2) by quadrature. With Y = d1 F / (d1 F + d2) ~
/// Beta(d1/2, d2/2) and Y = sin²θ the density becomes sin^(d1-1) cos^(d2-1),
/// which is smooth on [0, π/2].
fn f_tail_oracle(f: f64, d1: usize, d2: usize) -> f64 {
    let g = |t: f64| t.sin().powi(d1 as i32 - 1) * t.cos().powi(d2 as i32 - 1);
    let y0 = d1 as f64 * f / (d1 as f64 * f + d2 as f64);
    let t0 = y0.sqrt().asin();
    let half_pi = std::f64::consts::FRAC_PI_2;
    let total = integrate(g, 0.0, half_pi);
    // Integrate whichever side is smaller so its relative error stays small.
    let lower = integrate(g, 0.0, t0);
    if lower < 0.5 * total {
        1.0 - lower / total
    } else {
        integrate(g, t0, half_pi) / total
    }
}

fn f_oracle(groups: &[Vec<f64>]) -> (f64, usize, usize) {
    let all: Vec<f64> = groups.iter().flatten().copied().collect();
    let grand = all.iter().sum::<f64>() / all.len() as f64;
    let mut between = 0.0;
    let mut within = 0.0;
    for g in groups {
        let m = g.iter().sum::<f64>() / g.len() as f64;
        between += g.len() as f64 * (m - grand) * (m - grand);
        for x in g {
            within += (x - m) * (x - m);
        }
    }
    let (d1, d2) = (groups.len() - 1, all.len() - groups.len());
    ((between / d1 as f64) / (within / d2 as f64), d1, d2)
}

#[test]
fn fifty_small_instances_match_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    for case in 0..50 {
        let k = rng.gen_range(2..6);
        let groups: Vec<Vec<f64>> = (0..k)
            .map(|j| {
                let n = rng.gen_range(2..9);
                (0..n)
                    .map(|_| rng.gen_range(-3.0..3.0) + 0.4 * j as f64)
                    .collect()
            })
            .collect();
        let slices: Vec<&[f64]> = groups.iter().map(|g| g.as_slice()).collect();
        let got = one_way_anova(&slices);
        let (f, d1, d2) = f_oracle(&groups);
        let p = f_tail_oracle(f, d1, d2);
        assert!(
            (got.f_stat - f).abs() <= 1e-8 * f.max(1.0),
            "case {case}: F {} vs {f}",
            got.f_stat
        );
        assert!(
            (got.p_value - p).abs() <= 1e-8,
            "case {case}: p {} vs {p} (F={f}, df={d1},{d2})",
            got.p_value
        );
    }
}

#[test]
fn tail_function_matches_quadrature_over_grid() {
    for d1 in [1, 2, 3, 5, 10] {
        for d2 in [1, 2, 4, 7, 30, 200] {
            for f in [0.01, 0.3, 1.0, 2.5, 7.0, 40.0] {
                let (got, want) = (f_sf(f, d1 as f64, d2 as f64), f_tail_oracle(f, d1, d2));
                assert!(
                    (got - want).abs() < 1e-9,
                    "F({d1},{d2}) at {f}: {got} vs {want}"
                );
            }
        }
    }
}

#[test]
fn identical_groups_give_zero_and_one() {
    let g = [2.0, 4.0, 9.0];
    let a = one_way_anova(&[&g, &g, &g]);
    assert_eq!((a.f_stat, a.p_value), (0.0, 1.0));
    let c = [5.0, 5.0];
    let a = one_way_anova(&[&c, &c]);
    assert_eq!((a.f_stat, a.p_value), (0.0, 1.0));
}

#[test]
fn zero_within_variance_is_flagged() {
    let mut groups = BTreeMap::new();
    groups.insert(Arm::Control, vec![1.0, 1.0]);
    groups.insert(Arm::MaleBot, vec![2.0, 2.0]);
    let r = anova_balance("x", &groups).unwrap();
    assert!(r.degenerate);
    assert_eq!(r.p_value, 0.0);
}

fn ids(n: u64) -> Vec<UserId> {
    (0..n).map(|i| UserId(i * 7 + 3)).collect()
}

proptest! {
    #[test]
    fn arm_sizes_within_one_of_share(n in 1usize..5000, a in 0.1f64..5.0, b in 0.1f64..5.0, c in 0.1f64..5.0) {
        let sizes = arm_sizes(n, [a, b, c]).unwrap();
        prop_assert_eq!(sizes.iter().sum::<usize>(), n);
        let total = a + b + c;
        for (s, p) in sizes.iter().zip([a, b, c]) {
            prop_assert!((*s as f64 - p / total * n as f64).abs() < 1.0 + 1e-9);
        }
    }

    #[test]
    fn assignment_ignores_input_order(n in 3u64..300, seed in any::<u64>(), shuffle_seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let base = ids(n);
        let mut shuffled = base.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle_seed));
        let a = assign_arms(&base, seed, [1.0; 3]).unwrap();
        let b = assign_arms(&shuffled, seed, [1.0; 3]).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.len(), n as usize);
    }
}

#[test]
fn equal_thirds_are_balanced_in_expectation() {
    // Over many seeds each user lands in each arm about a third of the time.
    let users = ids(30);
    let mut counts: BTreeMap<(UserId, Arm), usize> = BTreeMap::new();
    let reps = 3000;
    for seed in 0..reps {
        for (u, a) in assign_arms(&users, seed, [1.0; 3]).unwrap() {
            *counts.entry((u, a)).or_default() += 1;
        }
    }
    for c in counts.values() {
        let share = *c as f64 / reps as f64;
        assert!((share - 1.0 / 3.0).abs() < 0.04, "{share}");
    }
}
