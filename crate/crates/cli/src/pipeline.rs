use std::collections::BTreeMap;
use std::error::Error;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use nudge_core::assignment::{anova_balance, assign_arms, BalanceReport};
use nudge_core::cohort::{build_cohort, read_profiles, write_profiles, CohortReport, UserProfile};
use nudge_core::lexicon::load_lexicon;
use nudge_core::metrics::{
    read_delta_records, read_snapshots, write_delta_records, write_snapshots, AccountCovariates,
    KeywordPoliticalClassifier, MemoClassifier, NewsHandleList,
};
use nudge_core::outlets::{filter_eligible, load_outlets};
use nudge_core::replygen::{
    aggregate_sentiment, audit_majority_vote, load_templates, read_sentiment_labels,
    AnnotationMatrix, AuditTally, GateLexicons, SentimentTable,
};
use nudge_core::simulator::{
    measure, run_simulation, synthetic_candidates, ActivityArchive, EventLog, ReplyBundle, SimUser,
    SimUserOutcome,
};
use nudge_core::{Arm, UserId};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::estimates::{run_estimates, EstimateOutput};
use crate::manifest::{file_sha256, sha256_hex, OutputFile, RunLock, RunManifest, StageRecord};
use crate::report::{build_tables, ReportInputs};
use crate::{CliError, StageName};

type StageResult<T> = Result<T, Box<dyn Error>>;

const CANDIDATES: &str = "cohort/candidates.csv";
const COHORT: &str = "cohort/cohort.csv";
const FUNNEL: &str = "cohort/funnel.json";
const ASSIGNMENT: &str = "assign/assignment.csv";
const ACCOUNT_BALANCE: &str = "assign/balance.json";
const EVENTS: &str = "simulate/events.jsonl";
const OUTCOMES: &str = "simulate/outcomes.csv";
const ARCHIVE: &str = "simulate/archive.json";
const PRE: &str = "measure/pre.csv";
const POST: &str = "measure/post.csv";
const RECORDS: &str = "measure/records.csv";
const ESTIMATES: &str = "estimate/estimates.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssignmentRow {
    pub user_id: UserId,
    pub arm: Arm,
}

/// What a stage reads: upstream outputs, external input files and config parameters.
struct StageInputs {
    upstream: Vec<(StageName, &'static str)>,
    files: Vec<PathBuf>,
    params: serde_json::Value,
}

fn read_csv<T: DeserializeOwned>(path: &Path) -> StageResult<Vec<T>> {
    let mut rdr = csv::Reader::from_path(path)?;
    Ok(rdr.deserialize().collect::<Result<Vec<T>, _>>()?)
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> StageResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn read_json<T: DeserializeOwned>(path: &Path) -> StageResult<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> StageResult<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn load_arms(path: &Path) -> StageResult<BTreeMap<UserId, Arm>> {
    Ok(read_csv::<AssignmentRow>(path)?
        .into_iter()
        .map(|r| (r.user_id, r.arm))
        .collect())
}

/// Audit tables from the configured fixtures, when present.
pub fn load_audit(
    cfg: &ExperimentConfig,
) -> Result<(Option<AuditTally>, Option<SentimentTable>), Box<dyn Error>> {
    let audit = match &cfg.paths.annotations {
        Some(p) => Some(audit_majority_vote(&AnnotationMatrix::read_csv(
            File::open(p)?,
        )?)),
        None => None,
    };
    let sentiment = match &cfg.paths.sentiment_labels {
        Some(p) => Some(aggregate_sentiment(&read_sentiment_labels(File::open(p)?)?)),
        None => None,
    };
    Ok((audit, sentiment))
}

/// A run directory bound to one config. Holds the directory lock while alive.
pub struct Pipeline {
    cfg: ExperimentConfig,
    out: PathBuf,
    force: bool,
    manifest: RunManifest,
    _lock: RunLock,
}

impl Pipeline {
    pub fn open(cfg: ExperimentConfig, out: &Path, force: bool) -> Result<Self, CliError> {
        cfg.validate()?;
        fs::create_dir_all(out)?;
        let lock = RunLock::acquire(out)?;
        let config_hash = sha256_hex(
            serde_json::to_string(&cfg)
                .expect("config serializes")
                .as_bytes(),
        );
        let manifest = match RunManifest::load(out)? {
            Some(mut m) => {
                m.config_hash = config_hash;
                m.tool_version = env!("CARGO_PKG_VERSION").to_string();
                m
            }
            None => RunManifest::new(config_hash),
        };
        Ok(Pipeline {
            cfg,
            out: out.to_path_buf(),
            force,
            manifest,
            _lock: lock,
        })
    }

    pub fn manifest(&self) -> &RunManifest {
        &self.manifest
    }

    pub fn out_dir(&self) -> &Path {
        &self.out
    }

    /// Runs `stages` in canonical order, whatever order they were given in.
    pub fn run(&mut self, stages: &[StageName]) -> Result<&RunManifest, CliError> {
        for stage in StageName::ALL {
            if stages.contains(&stage) {
                self.run_stage(stage)?;
            }
        }
        Ok(&self.manifest)
    }

    fn inputs(&self, stage: StageName) -> StageInputs {
        let c = &self.cfg;
        let p = &c.paths;
        let sim_files = vec![
            p.lexicon.clone(),
            p.outlets.clone(),
            p.news_handles.clone(),
            p.templates.clone(),
            p.profanity.clone(),
            p.platform_terms.clone(),
            p.generic_responses.clone(),
        ];
        match stage {
            StageName::Cohort => StageInputs {
                upstream: vec![],
                files: match c.candidates.synthetic {
                    Some(_) => vec![],
                    None => p.candidates.iter().cloned().collect(),
                },
                params: json!({
                    "candidates": c.candidates,
                    "cohort": c.cohort,
                    "seed": c.candidate_seed(),
                }),
            },
            StageName::Assign => StageInputs {
                upstream: vec![(StageName::Cohort, COHORT)],
                files: vec![],
                params: json!({ "proportions": c.assignment.proportions, "seed": c.assignment_seed() }),
            },
            StageName::Simulate => StageInputs {
                upstream: vec![(StageName::Cohort, COHORT), (StageName::Assign, ASSIGNMENT)],
                files: sim_files,
                params: json!({
                    "simulation": c.simulation,
                    "calibration": c.calibration,
                    "generator": c.generator,
                    "seed": c.simulation_seed(),
                    "activity_seed": c.activity_seed(),
                }),
            },
            StageName::Measure => StageInputs {
                upstream: vec![
                    (StageName::Cohort, COHORT),
                    (StageName::Simulate, EVENTS),
                    (StageName::Simulate, OUTCOMES),
                    (StageName::Simulate, ARCHIVE),
                ],
                files: vec![p.lexicon.clone(), p.news_handles.clone()],
                params: json!({ "follow_policy": c.estimation.follow_policy }),
            },
            StageName::Estimate => StageInputs {
                upstream: vec![(StageName::Measure, RECORDS)],
                files: vec![],
                params: json!({ "estimation": c.estimation, "analysis": c.analysis }),
            },
            StageName::Report => StageInputs {
                upstream: vec![
                    (StageName::Cohort, FUNNEL),
                    (StageName::Assign, ASSIGNMENT),
                    (StageName::Assign, ACCOUNT_BALANCE),
                    (StageName::Simulate, EVENTS),
                    (StageName::Simulate, OUTCOMES),
                    (StageName::Measure, PRE),
                    (StageName::Measure, POST),
                    (StageName::Estimate, ESTIMATES),
                ],
                files: [&p.annotations, &p.sentiment_labels]
                    .into_iter()
                    .flatten()
                    .cloned()
                    .collect(),
                params: json!({ "report": c.report, "estimands": c.analysis.estimands }),
            },
        }
    }

    fn input_hash(&self, stage: StageName, inputs: &StageInputs) -> Result<String, CliError> {
        let mut upstream = Vec::new();
        for (up, rel) in &inputs.upstream {
            let path = self.out.join(rel);
            if !path.is_file() {
                return Err(CliError::MissingUpstream {
                    stage,
                    upstream: *up,
                    path,
                });
            }
            upstream.push((rel.to_string(), file_sha256(&path)?));
        }
        let mut files = Vec::new();
        for f in &inputs.files {
            let digest = file_sha256(f)
                .map_err(|e| CliError::stage(stage, format!("{}: {e}", f.display())))?;
            files.push(digest);
        }
        let doc = json!({
            "stage": stage,
            "params": inputs.params,
            "upstream": upstream,
            "files": files,
        });
        Ok(sha256_hex(doc.to_string().as_bytes()))
    }

    fn run_stage(&mut self, stage: StageName) -> Result<(), CliError> {
        let inputs = self.inputs(stage);
        let input_hash = self.input_hash(stage, &inputs)?;
        if !self.force && self.manifest.is_fresh(&self.out, stage, &input_hash) {
            if let Some(r) = self.manifest.stages.get_mut(&stage) {
                r.skipped = true;
            }
            return self.manifest.save(&self.out);
        }
        let started = Instant::now();
        let dir = self.out.join(stage.as_str());
        if dir.exists() {
            fs::remove_dir_all(&dir)?;
        }
        fs::create_dir_all(&dir)?;
        let written = match stage {
            StageName::Cohort => self.cohort(),
            StageName::Assign => self.assign(),
            StageName::Simulate => self.simulate(),
            StageName::Measure => self.measure(),
            StageName::Estimate => self.estimate(),
            StageName::Report => self.report(),
        }
        .map_err(|e| CliError::stage(stage, e))?;
        let mut outputs = Vec::with_capacity(written.len());
        for rel in written {
            let sha256 = file_sha256(&self.out.join(&rel))?;
            outputs.push(OutputFile { path: rel, sha256 });
        }
        self.manifest.stages.insert(
            stage,
            StageRecord {
                input_hash,
                outputs,
                wall_ms: started.elapsed().as_millis() as u64,
                skipped: false,
            },
        );
        self.manifest.save(&self.out)
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.out.join(rel)
    }

    fn cohort(&self) -> StageResult<Vec<String>> {
        let c = &self.cfg;
        let candidates = match (c.candidates.synthetic, &c.paths.candidates) {
            (Some(n), _) => synthetic_candidates(n, c.candidate_seed()),
            (None, Some(p)) => read_profiles(File::open(p)?)?,
            (None, None) => return Err("no candidate source".into()),
        };
        let report = build_cohort(&candidates, &c.cohort)?;
        let members: Vec<UserProfile> = candidates
            .iter()
            .filter(|u| report.final_ids.contains(&u.user_id))
            .cloned()
            .collect();
        if members.is_empty() {
            return Err("the funnel removed every candidate".into());
        }
        write_profiles(File::create(self.path(CANDIDATES))?, &candidates)?;
        write_profiles(File::create(self.path(COHORT))?, &members)?;
        write_json(&self.path(FUNNEL), &report)?;
        Ok(vec![CANDIDATES.into(), COHORT.into(), FUNNEL.into()])
    }

    fn assign(&self) -> StageResult<Vec<String>> {
        let members = read_profiles(File::open(self.path(COHORT))?)?;
        let ids: Vec<UserId> = members.iter().map(|u| u.user_id).collect();
        let arms = assign_arms(
            &ids,
            self.cfg.assignment_seed(),
            self.cfg.assignment.proportions,
        )?;
        let rows: Vec<AssignmentRow> = arms
            .iter()
            .map(|(u, a)| AssignmentRow {
                user_id: *u,
                arm: *a,
            })
            .collect();
        write_csv(&self.path(ASSIGNMENT), &rows)?;
        let mut reports: Vec<BalanceReport> = Vec::new();
        for (j, name) in AccountCovariates::NAMES.iter().enumerate() {
            let mut groups: BTreeMap<Arm, Vec<f64>> = BTreeMap::new();
            for u in &members {
                let cov = AccountCovariates {
                    favorites: u.favorites as f64,
                    statuses: u.statuses as f64,
                    followers: u.followers as f64,
                    following: u.following as f64,
                };
                groups
                    .entry(arms[&u.user_id])
                    .or_default()
                    .push(cov.to_array()[j]);
            }
            reports.push(anova_balance(name, &groups)?);
        }
        write_json(&self.path(ACCOUNT_BALANCE), &reports)?;
        Ok(vec![ASSIGNMENT.into(), ACCOUNT_BALANCE.into()])
    }

    fn simulate(&self) -> StageResult<Vec<String>> {
        let c = &self.cfg;
        let p = &c.paths;
        let members = read_profiles(File::open(self.path(COHORT))?)?;
        let arms = load_arms(&self.path(ASSIGNMENT))?;
        let mut users = Vec::with_capacity(members.len());
        for m in &members {
            let arm = arms
                .get(&m.user_id)
                .ok_or_else(|| format!("user {} has no assignment", m.user_id))?;
            users.push(SimUser::from_profile(
                m,
                *arm,
                &c.calibration,
                c.activity_seed(),
            ));
        }
        let lexicon = load_lexicon(&p.lexicon)?;
        let outlets = filter_eligible(&load_outlets(&p.outlets)?);
        let news = NewsHandleList::load(&p.news_handles)?;
        let gates = GateLexicons::load(&p.profanity, &p.platform_terms, &p.generic_responses)?;
        let templates = load_templates(&p.templates)?;
        let generator = c.generator.build();
        let bundle = ReplyBundle {
            generator: generator.as_ref(),
            gates: &gates,
            templates: &templates,
        };
        let mut sim = c.simulation.clone();
        sim.seed = c.simulation_seed();
        let out = run_simulation(&users, &lexicon, &outlets, &news, &bundle, &sim)?;
        out.events
            .write_jsonl(BufWriter::new(File::create(self.path(EVENTS))?))?;
        write_csv(&self.path(OUTCOMES), &out.users)?;
        out.archive
            .write_json(BufWriter::new(File::create(self.path(ARCHIVE))?))?;
        Ok(vec![EVENTS.into(), OUTCOMES.into(), ARCHIVE.into()])
    }

    fn measure(&self) -> StageResult<Vec<String>> {
        let p = &self.cfg.paths;
        let members = read_profiles(File::open(self.path(COHORT))?)?;
        let events = EventLog::read_jsonl(BufReader::new(File::open(self.path(EVENTS))?))?;
        let outcomes: Vec<SimUserOutcome> = read_csv(&self.path(OUTCOMES))?;
        let archive = ActivityArchive::read_json(BufReader::new(File::open(self.path(ARCHIVE))?))?;
        let lexicon = load_lexicon(&p.lexicon)?;
        let news = NewsHandleList::load(&p.news_handles)?;
        let base = KeywordPoliticalClassifier::default();
        let political = MemoClassifier::new(&base);
        let m = measure(
            &members,
            &outcomes,
            &archive,
            &events,
            &lexicon,
            &news,
            &political,
            &self.cfg.estimation.follow_policy,
        )?;
        write_snapshots(File::create(self.path(PRE))?, &m.pre)?;
        write_snapshots(File::create(self.path(POST))?, &m.post)?;
        write_delta_records(File::create(self.path(RECORDS))?, &m.records)?;
        Ok(vec![PRE.into(), POST.into(), RECORDS.into()])
    }

    fn estimate(&self) -> StageResult<Vec<String>> {
        let records = read_delta_records(File::open(self.path(RECORDS))?)?;
        let out = run_estimates(&records, &self.cfg.estimation, &self.cfg.analysis);
        write_json(&self.path(ESTIMATES), &out)?;
        Ok(vec![ESTIMATES.into()])
    }

    fn report(&self) -> StageResult<Vec<String>> {
        let cohort: CohortReport = read_json(&self.path(FUNNEL))?;
        let account_balance: Vec<BalanceReport> = read_json(&self.path(ACCOUNT_BALANCE))?;
        let arms = load_arms(&self.path(ASSIGNMENT))?;
        let events = EventLog::read_jsonl(BufReader::new(File::open(self.path(EVENTS))?))?;
        let outcomes: Vec<SimUserOutcome> = read_csv(&self.path(OUTCOMES))?;
        let pre = read_snapshots(File::open(self.path(PRE))?)?;
        let post = read_snapshots(File::open(self.path(POST))?)?;
        let estimates: EstimateOutput = read_json(&self.path(ESTIMATES))?;
        let (audit, sentiment) = load_audit(&self.cfg)?;
        let inputs = ReportInputs {
            cohort: &cohort,
            account_balance: &account_balance,
            pre: &pre,
            post: &post,
            arms: &arms,
            events: &events,
            outcomes: &outcomes,
            estimates: &estimates,
            estimands: &self.cfg.analysis.estimands,
            audit: audit.as_ref(),
            sentiment: sentiment.as_ref(),
        };
        let tables = build_tables(&inputs, self.cfg.report.decimals);
        let mut written = Vec::new();
        for format in &self.cfg.report.formats {
            for t in &tables {
                let rel = format!("report/{}.{}", t.name, format.extension());
                fs::write(self.path(&rel), t.render(*format))?;
                written.push(rel);
            }
        }
        Ok(written)
    }
}

/// Opens `out` for `cfg`, runs `stages` and returns the manifest.
pub fn run_pipeline(
    cfg: ExperimentConfig,
    out: &Path,
    stages: &[StageName],
    force: bool,
) -> Result<RunManifest, CliError> {
    let mut p = Pipeline::open(cfg, out, force)?;
    p.run(stages)?;
    Ok(p.manifest.clone())
}
