use std::collections::BTreeMap;
use std::fmt::Write as _;

use nudge_core::assignment::{anova_balance, BalanceReport};
use nudge_core::causal::{EffectEstimate, Estimand, TreatmentGroup};
use nudge_core::cohort::CohortReport;
use nudge_core::metrics::EngagementSnapshot;
use nudge_core::replygen::{AuditTally, BotGender, Sentiment, SentimentTable};
use nudge_core::simulator::{Event, EventLog, SimUserOutcome, SuppressReason};
use nudge_core::{Arm, Outcome, UserId};
use serde::{Deserialize, Serialize};

use crate::estimates::{AdjustedBalance, EstimateOutput, ExclusionVariant, SubgroupTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
    Text,
}

impl Format {
    pub const ALL: [Format; 3] = [Format::Csv, Format::Json, Format::Text];

    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Text => "txt",
        }
    }
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "text" | "txt" => Ok(Format::Text),
            other => Err(format!("unknown format {other:?} (csv, json, text)")),
        }
    }
}

/// A rendered report table. Cells are preformatted strings; the JSON form is
/// this struct as-is.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub title: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, title: &str, columns: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            title: title.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len(), "{}", self.name);
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => serde_json::to_string_pretty(self).expect("table serializes") + "\n",
            Format::Text => self.to_text(),
        }
    }

    fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
    }

    fn to_text(&self) -> String {
        let mut widths: Vec<usize> = self.columns.iter().map(|c| c.chars().count()).collect();
        for r in &self.rows {
            for (w, c) in widths.iter_mut().zip(r) {
                *w = (*w).max(c.chars().count());
            }
        }
        let line = |cells: &[String]| {
            let mut s = String::new();
            for (i, (c, w)) in cells.iter().zip(&widths).enumerate() {
                if i > 0 {
                    s.push_str("  ");
                }
                let pad = w - c.chars().count();
                if i == 0 {
                    s.push_str(c);
                    s.extend(std::iter::repeat_n(' ', pad));
                } else {
                    s.extend(std::iter::repeat_n(' ', pad));
                    s.push_str(c);
                }
            }
            s.trim_end().to_string()
        };
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.title);
        let _ = writeln!(out);
        let _ = writeln!(out, "{}", line(&self.columns));
        let total: usize = widths.iter().sum::<usize>() + 2 * widths.len().saturating_sub(1);
        let _ = writeln!(out, "{}", "-".repeat(total));
        for r in &self.rows {
            let _ = writeln!(out, "{}", line(r));
        }
        out
    }
}

pub fn num(x: f64, decimals: usize) -> String {
    format!("{x:.decimals$}")
}

fn opt_num(x: Option<f64>, decimals: usize) -> String {
    x.map_or_else(String::new, |v| num(v, decimals))
}

const ARM_COLUMNS: [Arm; 3] = [Arm::Control, Arm::FemaleBot, Arm::MaleBot];

pub fn funnel_table(r: &CohortReport) -> Table {
    let mut t = Table::new(
        "funnel",
        "Cohort selection funnel",
        &["Stage", "Remaining", "Removed"],
    );
    t.push(vec![
        "candidates".into(),
        r.candidate_count.to_string(),
        String::new(),
    ]);
    let mut prev = r.candidate_count;
    for (name, n) in r.stage_names.iter().zip(&r.stage_counts) {
        t.push(vec![name.clone(), n.to_string(), (prev - n).to_string()]);
        prev = *n;
    }
    t.push(vec![
        "activity_cap_value".into(),
        r.activity_cap.to_string(),
        String::new(),
    ]);
    t
}

/// Rows = arms, columns = metrics, final row = ANOVA p-values.
pub fn balance_table(name: &str, title: &str, reports: &[BalanceReport], decimals: usize) -> Table {
    let mut cols = vec!["Treatment"];
    cols.extend(reports.iter().map(|r| r.metric_name.as_str()));
    let mut t = Table::new(name, title, &cols);
    for arm in Arm::ALL {
        let mut row = vec![arm.label().to_string()];
        row.extend(
            reports
                .iter()
                .map(|r| opt_num(r.group_means.get(&arm).copied(), decimals)),
        );
        t.push(row);
    }
    let mut row = vec!["ANOVA".to_string()];
    row.extend(reports.iter().map(|r| {
        let p = num(r.p_value, 3);
        if r.degenerate {
            format!("{p}*")
        } else {
            p
        }
    }));
    t.push(row);
    t
}

const SNAPSHOT_METRICS: [(Outcome, &str, bool); 5] = [
    (Outcome::Following, "Followed Accounts", false),
    (Outcome::NewsLikes, "News Likes", true),
    (Outcome::NewsRetweets, "News (Re)tweets", true),
    (Outcome::PoliticalLikes, "Political Likes", true),
    (Outcome::PoliticalTweets, "Political Tweets", true),
];

fn arm_values(
    snaps: &[EngagementSnapshot],
    arms: &BTreeMap<UserId, Arm>,
    o: Outcome,
) -> BTreeMap<Arm, Vec<f64>> {
    let mut by: BTreeMap<Arm, Vec<f64>> = BTreeMap::new();
    for s in snaps {
        if let (Some(arm), Some(v)) = (arms.get(&s.user_id), s.value(o)) {
            by.entry(*arm).or_default().push(v);
        }
    }
    by
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Pre-treatment engagement ANOVA per outcome; outcomes with too few values are skipped.
pub fn activity_balance(
    pre: &[EngagementSnapshot],
    arms: &BTreeMap<UserId, Arm>,
) -> Vec<BalanceReport> {
    SNAPSHOT_METRICS
        .iter()
        .filter_map(|(o, name, _)| anova_balance(name, &arm_values(pre, arms, *o)).ok())
        .collect()
}

/// Group means per arm before and after, one row per (timing, metric).
pub fn pre_post_table(
    pre: &[EngagementSnapshot],
    post: &[EngagementSnapshot],
    arms: &BTreeMap<UserId, Arm>,
    decimals: usize,
) -> Table {
    let mut t = Table::new(
        "pre_post_means",
        "Mean metrics for the pre- and post-experiment collections",
        &["Timing", "Metric", "Control", "Female", "Male"],
    );
    for (timing, snaps) in [("Pre-Experiment", pre), ("Post-Experiment", post)] {
        for (o, name, pct) in SNAPSHOT_METRICS {
            let by = arm_values(snaps, arms, o);
            let mut row = vec![timing.to_string(), name.to_string()];
            for arm in ARM_COLUMNS {
                row.push(match by.get(&arm).and_then(|v| mean(v)) {
                    Some(m) if pct => format!("{}%", num(m, decimals)),
                    Some(m) => num(m, decimals),
                    None => String::new(),
                });
            }
            t.push(row);
        }
    }
    t
}

pub fn simulation_summary(
    events: &EventLog,
    outcomes: &[SimUserOutcome],
    decimals: usize,
) -> Table {
    let mut t = Table::new(
        "simulation_summary",
        "Simulated deployment summary",
        &["Metric", "Value"],
    );
    let mut posts = 0usize;
    let mut keyword = 0usize;
    let mut likes = 0usize;
    let mut follows = 0usize;
    let mut suppressed: BTreeMap<&'static str, usize> = BTreeMap::new();
    for e in &events.events {
        match e {
            Event::Post { keywords, .. } => {
                posts += 1;
                keyword += usize::from(!keywords.is_empty());
            }
            Event::Like { .. } => likes += 1,
            Event::Follow { .. } => follows += 1,
            Event::ReplySuppressed { reason, .. } => {
                let key = match reason {
                    SuppressReason::ControlArm => "control_arm",
                    SuppressReason::Cooldown => "cooldown",
                    SuppressReason::NoOutlet => "no_outlet",
                    SuppressReason::GenerationFailed => "generation_failed",
                    SuppressReason::ComposeFailed => "compose_failed",
                };
                *suppressed.entry(key).or_default() += 1;
            }
            _ => {}
        }
    }
    let mut push = |k: String, v: String| t.push(vec![k, v]);
    push("users".into(), outcomes.len().to_string());
    push("posts".into(), posts.to_string());
    push("keyword_posts".into(), keyword.to_string());
    let share = if posts > 0 {
        keyword as f64 / posts as f64
    } else {
        0.0
    };
    push("keyword_share".into(), num(share, decimals));
    let replies: usize = outcomes.iter().map(|o| o.replies).sum();
    push("replies_sent".into(), replies.to_string());
    for arm in Arm::TREATMENTS {
        let members: Vec<&SimUserOutcome> = outcomes.iter().filter(|o| o.arm == arm).collect();
        let treated = members.iter().filter(|o| o.treated).count();
        push(
            format!("{}_assigned", arm.as_str()),
            members.len().to_string(),
        );
        push(format!("{}_treated", arm.as_str()), treated.to_string());
        push(
            format!("{}_replies", arm.as_str()),
            members.iter().map(|o| o.replies).sum::<usize>().to_string(),
        );
    }
    for (k, v) in suppressed {
        push(format!("suppressed_{k}"), v.to_string());
    }
    push("reply_likes".into(), likes.to_string());
    push("follow_events".into(), follows.to_string());
    t
}

pub fn adjusted_balance_table(rows: &[AdjustedBalance], decimals: usize) -> Table {
    let mut t = Table::new(
        "adjusted_balance",
        "Standardized mean differences before and after entropy balancing",
        &[
            "Estimand",
            "Treatment",
            "Covariate",
            "Raw",
            "Adjusted",
            "Note",
        ],
    );
    for r in rows {
        t.push(vec![
            r.estimand.to_string(),
            r.treatment.label().to_string(),
            r.covariate.clone(),
            opt_num(r.raw, decimals),
            opt_num(r.adjusted, decimals),
            r.note.clone().unwrap_or_default(),
        ]);
    }
    t
}

fn stars(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}

/// `"0.0702* (0.0312)"`, or `"n/a"` when the estimate is unavailable.
pub fn coef_cell(e: &EffectEstimate, decimals: usize) -> String {
    match &e.fit {
        Some(f) => format!(
            "{}{} ({})",
            num(f.coef, decimals),
            stars(f.p_value),
            num(f.se, decimals)
        ),
        None => "n/a".into(),
    }
}

/// Treatment rows × outcome columns for one estimand.
pub fn effects_wide(estimates: &[EffectEstimate], estimand: Estimand, decimals: usize) -> Table {
    let key = match estimand {
        Estimand::ITT => "itt",
        Estimand::Treated => "treated",
    };
    let mut cols = vec!["Treatment"];
    cols.extend(Outcome::ALL.iter().map(|o| o.label()));
    let mut t = Table::new(
        &format!("effects_{key}"),
        &format!("{estimand} effects, standardized outcome deltas: coef (robust se)"),
        &cols,
    );
    for group in TreatmentGroup::ALL {
        let mut row = vec![group.label().to_string()];
        for o in Outcome::ALL {
            let cell = estimates
                .iter()
                .find(|e| {
                    e.estimand == estimand
                        && e.treatment == group
                        && e.outcome == o
                        && e.subgroup.is_none()
                })
                .map_or_else(String::new, |e| coef_cell(e, decimals));
            row.push(cell);
        }
        t.push(row);
    }
    t
}

const LONG_COLUMNS: [&str; 13] = [
    "Estimand",
    "Treatment",
    "Outcome",
    "coef",
    "se",
    "p",
    "ci_low",
    "ci_high",
    "n",
    "n_control",
    "n_treatment",
    "outcome_sd",
    "note",
];

fn long_cells(e: &EffectEstimate, decimals: usize) -> Vec<String> {
    let mut row = vec![
        e.estimand.to_string(),
        e.treatment.label().to_string(),
        e.outcome.label().to_string(),
    ];
    match &e.fit {
        Some(f) => {
            let (lo, hi) = f.ci95();
            row.extend([
                num(f.coef, decimals),
                num(f.se, decimals),
                num(f.p_value, decimals),
                num(lo, decimals),
                num(hi, decimals),
                f.n.to_string(),
            ]);
        }
        None => row.extend(std::iter::repeat_n(String::new(), 6)),
    }
    row.extend([
        e.n_control.to_string(),
        e.n_treatment.to_string(),
        num(e.outcome_sd, decimals),
        e.unavailable.clone().unwrap_or_default(),
    ]);
    row
}

pub fn effects_long(estimates: &[EffectEstimate], decimals: usize) -> Table {
    let mut t = Table::new(
        "effects_long",
        "Effect estimates with 95% intervals",
        &LONG_COLUMNS,
    );
    for e in estimates {
        t.push(long_cells(e, decimals));
    }
    t
}

/// Following effects under the 200 / 500 / no-cap follow exclusion variants.
pub fn exclusion_table(variants: &[ExclusionVariant], decimals: usize) -> Table {
    let mut cols = vec!["Estimand", "Treatment"];
    cols.extend(variants.iter().map(|v| v.label.as_str()));
    let mut t = Table::new(
        "exclusion_variants",
        "Following effects by follow-change exclusion cap: coef (robust se)",
        &cols,
    );
    let Some(first) = variants.first() else {
        return t;
    };
    for proto in &first.estimates {
        let mut row = vec![
            proto.estimand.to_string(),
            proto.treatment.label().to_string(),
        ];
        for v in variants {
            let cell = v
                .estimates
                .iter()
                .find(|e| e.estimand == proto.estimand && e.treatment == proto.treatment)
                .map_or_else(String::new, |e| coef_cell(e, decimals));
            row.push(cell);
        }
        t.push(row);
    }
    t
}

pub fn subgroup_table(tables: &[SubgroupTable], decimals: usize) -> Table {
    let mut cols = vec!["Split", "Subgroup"];
    cols.extend(LONG_COLUMNS);
    let mut t = Table::new("subgroups", "Effect estimates within subgroups", &cols);
    for st in tables {
        let split = serde_json::to_value(st.split)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default();
        for e in &st.estimates {
            let mut row = vec![split.clone(), e.subgroup.clone().unwrap_or_default()];
            row.extend(long_cells(e, decimals));
            t.push(row);
        }
    }
    t
}

pub fn audit_table(tally: &AuditTally) -> Table {
    let mut t = Table::new(
        "audit",
        "Reply quality audit by annotator majority vote",
        &["Satisfactory", "Unsatisfactory", "Rate"],
    );
    t.push(vec![
        tally.satisfactory.to_string(),
        tally.unsatisfactory.to_string(),
        format!("{}%", num(100.0 * tally.rate, 1)),
    ]);
    t
}

/// Sentiment rows × bot-gender columns, cells `"count (pct%)"`, then totals.
pub fn sentiment_table(s: &SentimentTable) -> Table {
    let mut t = Table::new(
        "sentiment",
        "Sentiment of responses to bot replies",
        &["Sentiment", "Male Bot Replies", "Female Bot Replies"],
    );
    for sentiment in Sentiment::ALL {
        let mut row = vec![sentiment.label().to_string()];
        for g in [BotGender::Male, BotGender::Female] {
            row.push(s.get(g, sentiment).map_or_else(String::new, |r| r.cell()));
        }
        t.push(row);
    }
    let total = |g| s.totals.get(&g).copied().unwrap_or(0).to_string();
    t.push(vec![
        "Totals".into(),
        total(BotGender::Male),
        total(BotGender::Female),
    ]);
    t
}

/// Every report table for a completed estimate stage, in emission order.
pub struct ReportInputs<'a> {
    pub cohort: &'a CohortReport,
    pub account_balance: &'a [BalanceReport],
    pub pre: &'a [EngagementSnapshot],
    pub post: &'a [EngagementSnapshot],
    pub arms: &'a BTreeMap<UserId, Arm>,
    pub events: &'a EventLog,
    pub outcomes: &'a [SimUserOutcome],
    pub estimates: &'a EstimateOutput,
    pub estimands: &'a [Estimand],
    pub audit: Option<&'a AuditTally>,
    pub sentiment: Option<&'a SentimentTable>,
}

pub fn build_tables(inp: &ReportInputs<'_>, decimals: usize) -> Vec<Table> {
    let mut tables = vec![
        funnel_table(inp.cohort),
        balance_table(
            "balance_account",
            "Account-level measure balance across treatments",
            inp.account_balance,
            decimals,
        ),
        balance_table(
            "balance_activity",
            "Pre-treatment engagement balance across treatments",
            &activity_balance(inp.pre, inp.arms),
            decimals,
        ),
        pre_post_table(inp.pre, inp.post, inp.arms, decimals),
        simulation_summary(inp.events, inp.outcomes, decimals),
        adjusted_balance_table(&inp.estimates.adjusted_balance, decimals),
    ];
    for &e in inp.estimands {
        tables.push(effects_wide(&inp.estimates.effects, e, decimals));
    }
    tables.push(effects_long(&inp.estimates.effects, decimals));
    tables.push(exclusion_table(&inp.estimates.exclusion_variants, decimals));
    tables.push(subgroup_table(&inp.estimates.subgroups, decimals));
    if let Some(a) = inp.audit {
        tables.push(audit_table(a));
    }
    if let Some(s) = inp.sentiment {
        tables.push(sentiment_table(s));
    }
    tables
}
