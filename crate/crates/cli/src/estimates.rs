use nudge_core::causal::{
    adjusted_mean_diff, balance_comparison, estimate_table, subgroup_estimates, CovariateMatrix,
    EffectEstimate, Estimand, EstimationConfig, SubgroupSplit, TargetMoments, TreatmentGroup,
    WeightVector,
};
use nudge_core::metrics::{AccountCovariates, DeltaRecord};
use nudge_core::Outcome;
use serde::{Deserialize, Serialize};

use crate::config::AnalysisSection;

/// Standardized covariate imbalance for one comparison, before and after weighting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjustedBalance {
    pub estimand: Estimand,
    pub treatment: TreatmentGroup,
    pub covariate: String,
    pub raw: Option<f64>,
    pub adjusted: Option<f64>,
    pub note: Option<String>,
}

/// Following-outcome estimates under one absolute-cap variant of the follow policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExclusionVariant {
    pub label: String,
    pub cap: Option<u64>,
    pub estimates: Vec<EffectEstimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgroupTable {
    pub split: SubgroupSplit,
    pub estimates: Vec<EffectEstimate>,
}

/// Everything the estimate stage persists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateOutput {
    pub effects: Vec<EffectEstimate>,
    pub adjusted_balance: Vec<AdjustedBalance>,
    pub exclusion_variants: Vec<ExclusionVariant>,
    pub subgroups: Vec<SubgroupTable>,
}

pub const EXCLUSION_CAPS: [(&str, Option<u64>); 3] =
    [("200", Some(200)), ("500", Some(500)), ("none", None)];

pub fn adjusted_balance(
    records: &[DeltaRecord],
    estimand: Estimand,
    cfg: &EstimationConfig,
) -> Vec<AdjustedBalance> {
    let refs: Vec<&DeltaRecord> = records.iter().collect();
    let mut out = Vec::new();
    for group in TreatmentGroup::ALL {
        let row = |j: usize, raw: Option<f64>, adjusted: Option<f64>, note: Option<String>| {
            AdjustedBalance {
                estimand,
                treatment: group,
                covariate: AccountCovariates::NAMES[j].to_string(),
                raw,
                adjusted,
                note,
            }
        };
        match balance_comparison(&refs, group, estimand, cfg) {
            Ok(cmp) => {
                let rows = |idx: &[usize]| {
                    let r: Vec<[f64; 4]> = idx
                        .iter()
                        .map(|&i| refs[i].covariates().to_array())
                        .collect();
                    CovariateMatrix::from_rows(&r)
                };
                let raw = match (rows(&cmp.control), rows(&cmp.treatment)) {
                    (Ok(c), Ok(t)) => adjusted_mean_diff(
                        &WeightVector::uniform(t.rows()),
                        &t,
                        &TargetMoments::of(&c),
                    ),
                    _ => vec![f64::NAN; 4],
                };
                for (j, adj) in cmp.adjusted_mean_diffs.iter().enumerate() {
                    out.push(row(
                        j,
                        Some(raw[j]).filter(|x| x.is_finite()),
                        Some(*adj),
                        None,
                    ));
                }
            }
            Err(e) => {
                for j in 0..AccountCovariates::NAMES.len() {
                    out.push(row(j, None, None, Some(e.to_string())));
                }
            }
        }
    }
    out
}

pub fn run_estimates(
    records: &[DeltaRecord],
    cfg: &EstimationConfig,
    analysis: &AnalysisSection,
) -> EstimateOutput {
    let mut out = EstimateOutput {
        effects: Vec::new(),
        adjusted_balance: Vec::new(),
        exclusion_variants: Vec::new(),
        subgroups: Vec::new(),
    };
    for &estimand in &analysis.estimands {
        out.effects.extend(estimate_table(records, estimand, cfg));
        out.adjusted_balance
            .extend(adjusted_balance(records, estimand, cfg));
    }
    for (label, cap) in EXCLUSION_CAPS {
        let mut c = cfg.clone();
        c.follow_policy = cfg.follow_policy.with_cap(cap);
        let mut estimates = Vec::new();
        for &estimand in &analysis.estimands {
            for group in [TreatmentGroup::Female, TreatmentGroup::Male] {
                estimates.push(nudge_core::causal::estimate_effect(
                    records,
                    Outcome::Following,
                    group,
                    estimand,
                    &c,
                ));
            }
        }
        out.exclusion_variants.push(ExclusionVariant {
            label: label.to_string(),
            cap,
            estimates,
        });
    }
    for &split in &analysis.subgroups {
        let mut estimates = Vec::new();
        for &estimand in &analysis.estimands {
            estimates.extend(subgroup_estimates(
                records,
                split,
                &[TreatmentGroup::Female, TreatmentGroup::Male],
                estimand,
                cfg,
            ));
        }
        out.subgroups.push(SubgroupTable { split, estimates });
    }
    out
}
