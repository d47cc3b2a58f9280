//! Three-arm randomization and covariate balance checks.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stats;
use crate::UserId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arm {
    Control,
    MaleBot,
    FemaleBot,
}

impl Arm {
    pub const ALL: [Arm; 3] = [Arm::Control, Arm::MaleBot, Arm::FemaleBot];
    pub const TREATMENTS: [Arm; 2] = [Arm::FemaleBot, Arm::MaleBot];

    pub fn as_str(self) -> &'static str {
        match self {
            Arm::Control => "control",
            Arm::MaleBot => "male_bot",
            Arm::FemaleBot => "female_bot",
        }
    }

    /// Row label used in report tables.
    pub fn label(self) -> &'static str {
        match self {
            Arm::Control => "Control",
            Arm::MaleBot => "Male",
            Arm::FemaleBot => "Female",
        }
    }

    pub fn is_treatment(self) -> bool {
        self != Arm::Control
    }
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Arm {
    type Err = AssignmentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "control" => Ok(Arm::Control),
            "male_bot" | "male" => Ok(Arm::MaleBot),
            "female_bot" | "female" => Ok(Arm::FemaleBot),
            other => Err(AssignmentError::UnknownArm(other.to_string())),
        }
    }
}

#[derive(Debug, Error)]
pub enum AssignmentError {
    #[error("cannot randomize an empty id set")]
    Empty,
    #[error("arm proportions must be positive and finite, got {0:?}")]
    BadProportions([f64; 3]),
    #[error("unknown arm {0:?}")]
    UnknownArm(String),
    #[error("group {0} needs at least 2 observations")]
    GroupTooSmall(String),
    #[error("need at least 2 groups")]
    TooFewGroups,
}

/// Arm sizes for `n` users split by `proportions` (control, male, female),
/// by largest remainder. Every size is within 1 of its exact share.
pub fn arm_sizes(n: usize, proportions: [f64; 3]) -> Result<[usize; 3], AssignmentError> {
    if proportions.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
        return Err(AssignmentError::BadProportions(proportions));
    }
    let total: f64 = proportions.iter().sum();
    let exact: Vec<f64> = proportions.iter().map(|p| p / total * n as f64).collect();
    let mut sizes = [0usize; 3];
    for i in 0..3 {
        sizes[i] = exact[i].floor() as usize;
    }
    let mut left = n - sizes.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..3).collect();
    // Stable: larger remainder first, then arm order.
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    for i in order {
        if left == 0 {
            break;
        }
        sizes[i] += 1;
        left -= 1;
    }
    Ok(sizes)
}

/// Seeded assignment of `user_ids` to arms.
///
/// Ids are sorted, shuffled with a ChaCha8 stream seeded by `seed`, and sliced
/// contiguously into control, male-bot and female-bot blocks. The result does
/// not depend on input order.
pub fn assign_arms(
    user_ids: &[UserId],
    seed: u64,
    proportions: [f64; 3],
) -> Result<BTreeMap<UserId, Arm>, AssignmentError> {
    if user_ids.is_empty() {
        return Err(AssignmentError::Empty);
    }
    let mut ids = user_ids.to_vec();
    ids.sort_unstable();
    ids.dedup();
    let sizes = arm_sizes(ids.len(), proportions)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);
    let mut out = BTreeMap::new();
    let mut cursor = 0;
    for (arm, size) in Arm::ALL.iter().zip(sizes) {
        for id in &ids[cursor..cursor + size] {
            out.insert(*id, *arm);
        }
        cursor += size;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub metric_name: String,
    pub group_means: BTreeMap<Arm, f64>,
    pub f_stat: f64,
    pub p_value: f64,
    /// Set when within-group variance is zero but group means differ.
    pub degenerate: bool,
}

/// One-way ANOVA of a pre-treatment metric across arms.
pub fn anova_balance(
    metric_name: &str,
    groups: &BTreeMap<Arm, Vec<f64>>,
) -> Result<BalanceReport, AssignmentError> {
    if groups.len() < 2 {
        return Err(AssignmentError::TooFewGroups);
    }
    for (arm, g) in groups {
        if g.len() < 2 {
            return Err(AssignmentError::GroupTooSmall(arm.to_string()));
        }
    }
    let slices: Vec<&[f64]> = groups.values().map(|g| g.as_slice()).collect();
    let a = stats::one_way_anova(&slices);
    Ok(BalanceReport {
        metric_name: metric_name.to_string(),
        group_means: groups
            .iter()
            .map(|(arm, g)| (*arm, g.iter().sum::<f64>() / g.len() as f64))
            .collect(),
        f_stat: a.f_stat,
        p_value: a.p_value,
        degenerate: a.degenerate,
    })
}

/// Writes balance reports as a table: one row per arm with group means, then
/// an `ANOVA` row holding each metric's p-value.
pub fn write_balance_table<W: Write>(
    mut w: W,
    reports: &[BalanceReport],
    decimals: usize,
) -> std::io::Result<()> {
    let mut header = vec!["Treatment".to_string()];
    header.extend(reports.iter().map(|r| r.metric_name.clone()));
    writeln!(w, "{}", header.join(","))?;
    for arm in Arm::ALL {
        let mut row = vec![arm.label().to_string()];
        for r in reports {
            row.push(match r.group_means.get(&arm) {
                Some(m) => format!("{m:.decimals$}"),
                None => String::new(),
            });
        }
        writeln!(w, "{}", row.join(","))?;
    }
    let mut row = vec!["ANOVA".to_string()];
    row.extend(reports.iter().map(|r| format!("{:.3}", r.p_value)));
    writeln!(w, "{}", row.join(","))
}
