//! Treatment effect estimation: entropy balancing, pairwise G-computation
//! with heteroskedasticity-consistent errors, and subgroup splits.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assignment::Arm;
use crate::lexicon::Topic;
use crate::metrics::{
    follow_exclusion, DeltaRecord, FollowExclusion, FollowExclusionPolicy, Outcome,
};
use crate::stats;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CausalError {
    #[error("need at least two distinct values to standardize")]
    ZeroVariance,
    #[error("covariate matrix is empty or ragged")]
    BadMatrix,
    #[error("target has {got} moments, matrix has {expected} columns")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("target moments lie outside the source hull (max violation {max_violation:.3e})")]
    Infeasible { max_violation: f64 },
    #[error("entropy balancing did not converge in {iterations} iterations (max violation {max_violation:.3e})")]
    MaxIterations {
        iterations: usize,
        max_violation: f64,
    },
    #[error("singular design matrix")]
    SingularDesign,
    #[error("estimation needs both groups non-empty")]
    EmptyGroup,
    #[error("robust standard error is zero")]
    ZeroStandardError,
}

/// Row-major users × covariates table.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariateMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CovariateMatrix {
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, CausalError> {
        let cols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        if rows.is_empty() || cols == 0 || rows.iter().any(|r| r.as_ref().len() != cols) {
            return Err(CausalError::BadMatrix);
        }
        let data: Vec<f64> = rows
            .iter()
            .flat_map(|r| r.as_ref().iter().copied())
            .collect();
        if data.iter().any(|v| !v.is_finite()) {
            return Err(CausalError::BadMatrix);
        }
        Ok(CovariateMatrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows)
            .map(|i| self.data[i * self.cols + j])
            .collect()
    }

    pub fn means(&self) -> Vec<f64> {
        self.weighted_means(&vec![1.0 / self.rows as f64; self.rows])
    }

    pub fn weighted_means(&self, w: &[f64]) -> Vec<f64> {
        let total: f64 = w.iter().sum();
        (0..self.cols)
            .map(|j| {
                (0..self.rows)
                    .map(|i| w[i] * self.data[i * self.cols + j])
                    .sum::<f64>()
                    / total
            })
            .collect()
    }

    /// Sample standard deviations (n − 1); zero for a single row.
    pub fn sds(&self) -> Vec<f64> {
        (0..self.cols)
            .map(|j| {
                if self.rows < 2 {
                    0.0
                } else {
                    stats::mean_sd(&self.column(j)).1
                }
            })
            .collect()
    }
}

/// Means and standard deviations of the reference group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetMoments {
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

impl TargetMoments {
    pub fn of(m: &CovariateMatrix) -> Self {
        TargetMoments {
            means: m.means(),
            sds: m.sds(),
        }
    }
}

/// Non-negative unit weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn uniform(n: usize) -> Self {
        WeightVector(vec![1.0 / n as f64; n])
    }

    /// Normalizes positive weights to sum to one.
    pub fn normalized(mut w: Vec<f64>) -> Self {
        let s: f64 = w.iter().sum();
        for x in &mut w {
            *x /= s;
        }
        WeightVector(w)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Kish effective sample size.
    pub fn effective_size(&self) -> f64 {
        1.0 / self.0.iter().map(|w| w * w).sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardized {
    pub values: Vec<f64>,
    pub mean: f64,
    pub sd: f64,
}

/// `(x − mean) / sd` with the sample standard deviation.
pub fn standardize(values: &[f64]) -> Result<Standardized, CausalError> {
    if values.len() < 2 {
        return Err(CausalError::ZeroVariance);
    }
    let (mean, sd) = stats::mean_sd(values);
    if !sd.is_finite() || sd <= 0.0 {
        return Err(CausalError::ZeroVariance);
    }
    Ok(Standardized {
        values: values.iter().map(|x| (x - mean) / sd).collect(),
        mean,
        sd,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BalanceOptions {
    /// Largest allowed moment violation, on internally standardized covariates.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for BalanceOptions {
    fn default() -> Self {
        BalanceOptions {
            tol: 1e-8,
            max_iter: 200,
        }
    }
}

/// Log-partition dual objective, weights and moment residuals at `lambda`.
fn dual_state(
    z: &DMatrix<f64>,
    t: &DVector<f64>,
    lambda: &DVector<f64>,
) -> (f64, DVector<f64>, DVector<f64>) {
    let s = z * lambda;
    let max = s.max();
    let e: DVector<f64> = s.map(|v| (v - max).exp());
    let total = e.sum();
    let w = e / total;
    let objective = max + total.ln() - lambda.dot(t);
    let resid = z.transpose() * &w - t;
    (objective, w, resid)
}

/// Reweights `source` so its weighted covariate means equal `target`.
///
/// Minimizes KL divergence from uniform weights under the mean constraints by
/// damped Newton on the dual, starting from uniform weights. Covariates are
/// centered and scaled by the source moments before solving.
pub fn entropy_balance(
    source: &CovariateMatrix,
    target: &[f64],
    opts: &BalanceOptions,
) -> Result<WeightVector, CausalError> {
    if target.len() != source.cols {
        return Err(CausalError::DimensionMismatch {
            got: target.len(),
            expected: source.cols,
        });
    }
    let n = source.rows;
    let means = source.means();
    let sds = source.sds();
    // Constant columns carry no information unless the target disagrees.
    let mut keep = Vec::new();
    for j in 0..source.cols {
        let col = source.column(j);
        let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let scale = sds[j].max(means[j].abs()).max(1.0);
        if target[j] < lo - 1e-12 * scale || target[j] > hi + 1e-12 * scale {
            let v = if target[j] < lo {
                lo - target[j]
            } else {
                target[j] - hi
            };
            return Err(CausalError::Infeasible {
                max_violation: v / sds[j].max(f64::MIN_POSITIVE),
            });
        }
        if sds[j] > 0.0 && hi > lo {
            keep.push(j);
        }
    }
    if keep.is_empty() {
        return Ok(WeightVector::uniform(n));
    }
    let k = keep.len();
    let z = DMatrix::from_fn(n, k, |i, c| {
        let j = keep[c];
        (source.data[i * source.cols + j] - means[j]) / sds[j]
    });
    let t = DVector::from_fn(k, |c, _| (target[keep[c]] - means[keep[c]]) / sds[keep[c]]);

    let mut lambda = DVector::zeros(k);
    let (mut obj, mut w, mut resid) = dual_state(&z, &t, &lambda);
    for _ in 0..opts.max_iter {
        let viol = resid.amax();
        if viol <= opts.tol {
            return Ok(WeightVector(w.iter().copied().collect()));
        }
        let zbar = z.transpose() * &w;
        let mut h = DMatrix::zeros(k, k);
        for i in 0..n {
            let d = z.row(i).transpose() - &zbar;
            h += w[i] * &d * d.transpose();
        }
        let step = match solve_spd(&h, &resid) {
            Some(s) => -s,
            None => {
                return Err(CausalError::Infeasible {
                    max_violation: viol,
                })
            }
        };
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let cand = &lambda + alpha * &step;
            let (o2, w2, r2) = dual_state(&z, &t, &cand);
            if o2.is_finite()
                && (o2 < obj || (o2 <= obj + 1e-15 * obj.abs().max(1.0) && r2.amax() < viol))
            {
                lambda = cand;
                obj = o2;
                w = w2;
                resid = r2;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            return Err(CausalError::Infeasible {
                max_violation: viol,
            });
        }
    }
    let viol = resid.amax();
    if viol <= opts.tol {
        return Ok(WeightVector(w.iter().copied().collect()));
    }
    Err(CausalError::MaxIterations {
        iterations: opts.max_iter,
        max_violation: viol,
    })
}

/// Cholesky solve with a small ridge retry for near-singular systems.
fn solve_spd(h: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    if let Some(c) = h.clone().cholesky() {
        return Some(c.solve(b));
    }
    let ridge = 1e-10 * (1.0 + h.trace().abs());
    let hr = h + DMatrix::identity(h.nrows(), h.ncols()) * ridge;
    hr.cholesky().map(|c| c.solve(b))
}

/// Per-covariate |weighted source mean − target mean| / pooled sd, where the
/// pooled sd combines the unweighted source and target variances.
pub fn adjusted_mean_diff(
    weights: &WeightVector,
    source: &CovariateMatrix,
    target: &TargetMoments,
) -> Vec<f64> {
    let wm = source.weighted_means(&weights.0);
    let src_sd = source.sds();
    (0..source.cols)
        .map(|j| {
            let pooled = ((src_sd[j].powi(2) + target.sds[j].powi(2)) / 2.0).sqrt();
            let diff = (wm[j] - target.means[j]).abs();
            if pooled > 0.0 {
                diff / pooled
            } else {
                diff
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum HcType {
    #[default]
    HC0,
    HC1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PValueMethod {
    #[default]
    Normal,
    StudentT,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectFit {
    pub coef: f64,
    pub se: f64,
    pub p_value: f64,
    pub n: usize,
}

impl EffectFit {
    /// Normal-approximation 95% interval.
    pub fn ci95(&self) -> (f64, f64) {
        const Z: f64 = 1.959_963_984_540_054;
        (self.coef - Z * self.se, self.coef + Z * self.se)
    }
}

/// Weighted least squares of `outcome` on intercept + treatment indicator
/// (+ `covariates`), then the G-computation contrast: the mean over all units
/// of the prediction under treatment minus the prediction under control.
/// Standard errors use the sandwich estimator on the weighted fit.
pub fn g_compute_effect(
    outcome: &[f64],
    treated: &[bool],
    weights: &[f64],
    covariates: Option<&CovariateMatrix>,
    hc: HcType,
    p_method: PValueMethod,
) -> Result<EffectFit, CausalError> {
    let n = outcome.len();
    if treated.len() != n || weights.len() != n || covariates.is_some_and(|c| c.rows != n) {
        return Err(CausalError::BadMatrix);
    }
    if !treated.iter().any(|t| *t) || treated.iter().all(|t| *t) {
        return Err(CausalError::EmptyGroup);
    }
    let extra = covariates.map_or(0, |c| c.cols);
    let p = 2 + extra;
    let design = |i: usize, arm: Option<bool>| -> DVector<f64> {
        let mut x = DVector::zeros(p);
        x[0] = 1.0;
        x[1] = if arm.unwrap_or(treated[i]) { 1.0 } else { 0.0 };
        if let Some(c) = covariates {
            for (j, v) in c.row(i).iter().enumerate() {
                x[2 + j] = *v;
            }
        }
        x
    };
    let mut xtwx = DMatrix::zeros(p, p);
    let mut xtwy = DVector::zeros(p);
    for i in 0..n {
        let x = design(i, None);
        xtwx += weights[i] * &x * x.transpose();
        xtwy += weights[i] * outcome[i] * &x;
    }
    let bread = xtwx
        .clone()
        .try_inverse()
        .ok_or(CausalError::SingularDesign)?;
    if !bread.iter().all(|v| v.is_finite()) {
        return Err(CausalError::SingularDesign);
    }
    let beta = &bread * &xtwy;
    let mut meat = DMatrix::zeros(p, p);
    let mut contrast = DVector::zeros(p);
    let total_w: f64 = weights.iter().sum();
    let mut ate = 0.0;
    for i in 0..n {
        let x = design(i, None);
        let e = outcome[i] - x.dot(&beta);
        meat += (weights[i] * e).powi(2) * &x * x.transpose();
        let diff = design(i, Some(true)) - design(i, Some(false));
        ate += weights[i] * diff.dot(&beta);
        contrast += weights[i] * diff;
    }
    ate /= total_w;
    contrast /= total_w;
    let mut vcov = &bread * meat * &bread;
    if hc == HcType::HC1 {
        vcov *= n as f64 / (n - p) as f64;
    }
    let var = (contrast.transpose() * &vcov * &contrast)[(0, 0)];
    let se = var.max(0.0).sqrt();
    if se.is_nan() || se <= 0.0 {
        return Err(CausalError::ZeroStandardError);
    }
    let z = ate / se;
    let p_value = match p_method {
        PValueMethod::Normal => stats::normal_two_sided_p(z),
        PValueMethod::StudentT => stats::t_two_sided_p(z, (n - p) as f64),
    };
    Ok(EffectFit {
        coef: ate,
        se,
        p_value,
        n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Estimand {
    /// All assigned users, uniform weights.
    ITT,
    /// Users who received at least one reply, reweighted to control moments.
    Treated,
}

impl fmt::Display for Estimand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Estimand::ITT => "ITT",
            Estimand::Treated => "Treated",
        })
    }
}

/// Treatment side of a pairwise comparison against control.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TreatmentGroup {
    Female,
    Male,
    /// Both treatment arms pooled before balancing.
    Combined,
}

impl TreatmentGroup {
    pub const ALL: [TreatmentGroup; 3] = [
        TreatmentGroup::Female,
        TreatmentGroup::Male,
        TreatmentGroup::Combined,
    ];

    pub fn includes(self, arm: Arm) -> bool {
        match self {
            TreatmentGroup::Female => arm == Arm::FemaleBot,
            TreatmentGroup::Male => arm == Arm::MaleBot,
            TreatmentGroup::Combined => arm.is_treatment(),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            TreatmentGroup::Female => "Female",
            TreatmentGroup::Male => "Male",
            TreatmentGroup::Combined => "Combined",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimationConfig {
    pub hc: HcType,
    pub p_value: PValueMethod,
    pub balance: BalanceOptions,
    /// Smallest group (each side) an estimate is attempted for.
    pub min_group_size: usize,
    /// Add the balance covariates to the outcome model.
    pub outcome_covariates: bool,
    /// Follow-change exclusion applied to the Following outcome.
    pub follow_policy: FollowExclusionPolicy,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        EstimationConfig {
            hc: HcType::HC0,
            p_value: PValueMethod::Normal,
            balance: BalanceOptions::default(),
            min_group_size: 5,
            outcome_covariates: false,
            follow_policy: FollowExclusionPolicy::default(),
        }
    }
}

/// One cell of an effect table; `fit` is absent when the estimate could not
/// be computed, with the reason in `unavailable`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectEstimate {
    pub outcome: Outcome,
    pub treatment: TreatmentGroup,
    pub estimand: Estimand,
    pub subgroup: Option<String>,
    pub fit: Option<EffectFit>,
    pub unavailable: Option<String>,
    pub n_control: usize,
    pub n_treatment: usize,
    /// Standard deviation used to standardize the outcome deltas; zero when
    /// the outcome could not be standardized.
    pub outcome_sd: f64,
    /// Largest post-weighting adjusted mean difference across covariates.
    pub max_adjusted_mean_diff: Option<f64>,
}

/// Standardized deltas for one outcome over the analysis sample, with the
/// Following outcome restricted by the follow-change policy.
pub struct OutcomeSample<'a> {
    pub records: Vec<&'a DeltaRecord>,
    pub values: Vec<f64>,
    pub standardization: Standardized,
}

pub fn outcome_sample<'a>(
    records: &'a [DeltaRecord],
    outcome: Outcome,
    policy: &FollowExclusionPolicy,
) -> Result<OutcomeSample<'a>, CausalError> {
    let mut kept = Vec::new();
    let mut raw = Vec::new();
    for r in records {
        let Some(d) = r.delta(outcome) else { continue };
        if outcome == Outcome::Following
            && follow_exclusion(r.follow_total_pre, r.follow_total_post, policy)
                != FollowExclusion::Kept
        {
            continue;
        }
        kept.push(r);
        raw.push(d);
    }
    let s = standardize(&raw)?;
    Ok(OutcomeSample {
        records: kept,
        values: s.values.clone(),
        standardization: s,
    })
}

fn covariate_matrix(records: &[&DeltaRecord]) -> Result<CovariateMatrix, CausalError> {
    let rows: Vec<[f64; 4]> = records.iter().map(|r| r.covariates().to_array()).collect();
    CovariateMatrix::from_rows(&rows)
}

/// Balancing weights and diagnostics for one comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct BalancedComparison {
    /// Indices into the sample, control first then treatment.
    pub control: Vec<usize>,
    pub treatment: Vec<usize>,
    pub treatment_weights: WeightVector,
    pub adjusted_mean_diffs: Vec<f64>,
}

/// Splits a sample into control and treatment sides for `group`/`estimand`,
/// then entropy-balances the treatment side to the control means.
pub fn balance_comparison(
    records: &[&DeltaRecord],
    group: TreatmentGroup,
    estimand: Estimand,
    cfg: &EstimationConfig,
) -> Result<BalancedComparison, CausalError> {
    let control: Vec<usize> = (0..records.len())
        .filter(|&i| records[i].arm == Arm::Control)
        .collect();
    let treatment: Vec<usize> = (0..records.len())
        .filter(|&i| {
            let r = records[i];
            group.includes(r.arm) && (estimand == Estimand::ITT || r.treated)
        })
        .collect();
    if control.len() < cfg.min_group_size.max(2) || treatment.len() < cfg.min_group_size.max(2) {
        return Err(CausalError::EmptyGroup);
    }
    let cm = covariate_matrix(&control.iter().map(|&i| records[i]).collect::<Vec<_>>())?;
    let tm = covariate_matrix(&treatment.iter().map(|&i| records[i]).collect::<Vec<_>>())?;
    let target = TargetMoments::of(&cm);
    let weights = entropy_balance(&tm, &target.means, &cfg.balance)?;
    let diffs = adjusted_mean_diff(&weights, &tm, &target);
    Ok(BalancedComparison {
        control,
        treatment,
        treatment_weights: weights,
        adjusted_mean_diffs: diffs,
    })
}

fn fit_sample(
    sample: &OutcomeSample<'_>,
    keep: &[usize],
    outcome: Outcome,
    group: TreatmentGroup,
    estimand: Estimand,
    subgroup: Option<&str>,
    cfg: &EstimationConfig,
) -> EffectEstimate {
    let recs: Vec<&DeltaRecord> = keep.iter().map(|&i| sample.records[i]).collect();
    let vals: Vec<f64> = keep.iter().map(|&i| sample.values[i]).collect();
    let mut est = EffectEstimate {
        outcome,
        treatment: group,
        estimand,
        subgroup: subgroup.map(str::to_string),
        fit: None,
        unavailable: None,
        n_control: 0,
        n_treatment: 0,
        outcome_sd: sample.standardization.sd,
        max_adjusted_mean_diff: None,
    };
    let cmp = match balance_comparison(&recs, group, estimand, cfg) {
        Ok(c) => c,
        Err(e) => {
            est.unavailable = Some(format!("balancing: {e}"));
            return est;
        }
    };
    est.n_control = cmp.control.len();
    est.n_treatment = cmp.treatment.len();
    est.max_adjusted_mean_diff = cmp.adjusted_mean_diffs.iter().copied().reduce(f64::max);
    // Each side's weights average one; ITT keeps the treatment side uniform.
    let nt = cmp.treatment.len() as f64;
    let tw: Vec<f64> = match estimand {
        Estimand::ITT => vec![1.0; cmp.treatment.len()],
        Estimand::Treated => cmp
            .treatment_weights
            .as_slice()
            .iter()
            .map(|w| w * nt)
            .collect(),
    };
    let idx: Vec<usize> = cmp.control.iter().chain(&cmp.treatment).copied().collect();
    let y: Vec<f64> = idx.iter().map(|&i| vals[i]).collect();
    let t: Vec<bool> = (0..idx.len()).map(|k| k >= cmp.control.len()).collect();
    let w: Vec<f64> = std::iter::repeat_n(1.0, cmp.control.len())
        .chain(tw)
        .collect();
    let covs = if cfg.outcome_covariates {
        let rows: Vec<[f64; 4]> = idx
            .iter()
            .map(|&i| recs[i].covariates().to_array())
            .collect();
        CovariateMatrix::from_rows(&rows).ok()
    } else {
        None
    };
    match g_compute_effect(&y, &t, &w, covs.as_ref(), cfg.hc, cfg.p_value) {
        Ok(f) => est.fit = Some(f),
        Err(e) => est.unavailable = Some(format!("fit: {e}")),
    }
    est
}

fn unavailable(
    outcome: Outcome,
    group: TreatmentGroup,
    estimand: Estimand,
    subgroup: Option<&str>,
    why: String,
) -> EffectEstimate {
    EffectEstimate {
        outcome,
        treatment: group,
        estimand,
        subgroup: subgroup.map(str::to_string),
        fit: None,
        unavailable: Some(why),
        n_control: 0,
        n_treatment: 0,
        outcome_sd: 0.0,
        max_adjusted_mean_diff: None,
    }
}

/// Effect of one treatment group on one outcome over all records.
pub fn estimate_effect(
    records: &[DeltaRecord],
    outcome: Outcome,
    group: TreatmentGroup,
    estimand: Estimand,
    cfg: &EstimationConfig,
) -> EffectEstimate {
    match outcome_sample(records, outcome, &cfg.follow_policy) {
        Ok(s) => {
            let all: Vec<usize> = (0..s.records.len()).collect();
            fit_sample(&s, &all, outcome, group, estimand, None, cfg)
        }
        Err(e) => unavailable(outcome, group, estimand, None, format!("outcome: {e}")),
    }
}

/// Full table: every treatment group × outcome.
pub fn estimate_table(
    records: &[DeltaRecord],
    estimand: Estimand,
    cfg: &EstimationConfig,
) -> Vec<EffectEstimate> {
    let mut out = Vec::new();
    for group in TreatmentGroup::ALL {
        for outcome in Outcome::ALL {
            out.push(estimate_effect(records, outcome, group, estimand, cfg));
        }
    }
    out
}

/// More than this many political (re)tweets in the pre window is high engagement.
pub const HIGH_POLITICAL_THRESHOLD: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubgroupSplit {
    PoliticalEngagement,
    Topic,
}

fn subgroup_label(r: &DeltaRecord, split: SubgroupSplit) -> String {
    match split {
        SubgroupSplit::PoliticalEngagement => {
            if r.pre_political_tweets > HIGH_POLITICAL_THRESHOLD {
                "high".into()
            } else {
                "low".into()
            }
        }
        SubgroupSplit::Topic => r
            .topic
            .map_or("unclassified".into(), |t: Topic| t.to_string()),
    }
}

pub fn subgroup_labels(split: SubgroupSplit) -> Vec<String> {
    match split {
        SubgroupSplit::PoliticalEngagement => vec!["high".into(), "low".into()],
        SubgroupSplit::Topic => Topic::ALL.iter().map(|t| t.to_string()).collect(),
    }
}

/// Reruns balancing and G-computation within each partition. Outcomes are
/// standardized once over the full sample so subgroup effects share a scale.
pub fn subgroup_estimates(
    records: &[DeltaRecord],
    split: SubgroupSplit,
    groups: &[TreatmentGroup],
    estimand: Estimand,
    cfg: &EstimationConfig,
) -> Vec<EffectEstimate> {
    let labels = subgroup_labels(split);
    let mut out = Vec::new();
    for outcome in Outcome::ALL {
        let sample = outcome_sample(records, outcome, &cfg.follow_policy);
        for label in &labels {
            for &group in groups {
                let est = match &sample {
                    Ok(s) => {
                        let keep: Vec<usize> = (0..s.records.len())
                            .filter(|&i| &subgroup_label(s.records[i], split) == label)
                            .collect();
                        if keep.is_empty() {
                            unavailable(
                                outcome,
                                group,
                                estimand,
                                Some(label),
                                "empty partition".into(),
                            )
                        } else {
                            fit_sample(s, &keep, outcome, group, estimand, Some(label), cfg)
                        }
                    }
                    Err(e) => unavailable(
                        outcome,
                        group,
                        estimand,
                        Some(label),
                        format!("outcome: {e}"),
                    ),
                };
                out.push(est);
            }
        }
    }
    out
}
