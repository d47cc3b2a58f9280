//! Engine for running and analyzing social-media news-nudge field experiments.
//!
//! The crate is split along the experiment's lifecycle:
//!
//! - [`lexicon`]: topic keyword lists, whole-token trigger matching, user topic labels.
//! - [`cohort`]: the candidate selection funnel.
//! - [`assignment`]: three-arm randomization and ANOVA balance checks.
//! - [`outlets`]: the news outlet registry and per-reply outlet selection.
//! - [`replygen`]: input cleaning, pluggable draft generation, quality gates,
//!   template fallback, reply composition and response audits.
//! - [`simulator`]: a deterministic discrete-event stand-in for the platform.
//! - [`metrics`]: pre/post engagement snapshots, deltas and follow-change exclusions.
//! - [`causal`]: entropy balancing, G-computation with robust errors, subgroup splits.

pub mod assignment;
pub mod causal;
pub mod cohort;
pub mod lexicon;
pub mod metrics;
pub mod outlets;
pub mod replygen;
pub mod simulator;
pub mod stats;
pub mod text;

pub use assignment::Arm;
pub use lexicon::{Lexicon, Topic};
pub use metrics::Outcome;

use serde::{Deserialize, Serialize};

/// Opaque platform account id.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct UserId(pub u64);

impl std::fmt::Display for UserId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}
