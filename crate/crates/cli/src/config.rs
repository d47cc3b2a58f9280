use std::path::{Path, PathBuf};
use std::time::Duration;

use nudge_core::causal::{Estimand, EstimationConfig, SubgroupSplit};
use nudge_core::cohort::CohortConfig;
use nudge_core::replygen::{Generator, HttpGenerator, ReferenceGenerator};
use nudge_core::simulator::{mix_seed, Calibration, SimConfig};
use serde::{Deserialize, Serialize};

use crate::report::Format;
use crate::CliError;

/// Input files. Relative paths resolve against the config file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Candidate profile table; ignored when synthetic candidates are requested.
    pub candidates: Option<PathBuf>,
    pub lexicon: PathBuf,
    pub outlets: PathBuf,
    pub news_handles: PathBuf,
    pub templates: PathBuf,
    pub profanity: PathBuf,
    pub platform_terms: PathBuf,
    pub generic_responses: PathBuf,
    pub annotations: Option<PathBuf>,
    pub sentiment_labels: Option<PathBuf>,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            candidates: None,
            lexicon: "lexicon.csv".into(),
            outlets: "outlets.csv".into(),
            news_handles: "news_handles.csv".into(),
            templates: "templates.txt".into(),
            profanity: "profanity.txt".into(),
            platform_terms: "platform_terms.txt".into(),
            generic_responses: "generic_responses.txt".into(),
            annotations: None,
            sentiment_labels: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct CandidateSource {
    /// Generate this many synthetic candidates instead of reading a table.
    pub synthetic: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssignmentSection {
    /// Control, male bot, female bot.
    pub proportions: [f64; 3],
}

impl Default for AssignmentSection {
    fn default() -> Self {
        AssignmentSection {
            proportions: [1.0 / 3.0; 3],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorConfig {
    #[default]
    Reference,
    Http {
        endpoint: String,
        timeout_secs: u64,
    },
}

impl GeneratorConfig {
    pub fn build(&self) -> Box<dyn Generator> {
        match self {
            GeneratorConfig::Reference => Box::new(ReferenceGenerator),
            GeneratorConfig::Http {
                endpoint,
                timeout_secs,
            } => Box::new(HttpGenerator::new(
                endpoint.clone(),
                Duration::from_secs(*timeout_secs),
            )),
        }
    }
}

/// Which effect tables the estimate stage produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    pub estimands: Vec<Estimand>,
    pub subgroups: Vec<SubgroupSplit>,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        AnalysisSection {
            estimands: vec![Estimand::Treated, Estimand::ITT],
            subgroups: vec![SubgroupSplit::PoliticalEngagement, SubgroupSplit::Topic],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSection {
    pub formats: Vec<Format>,
    /// Digits after the decimal point in report tables.
    pub decimals: usize,
}

impl Default for ReportSection {
    fn default() -> Self {
        ReportSection {
            formats: vec![Format::Csv, Format::Json, Format::Text],
            decimals: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed; every stage derives its own stream from it.
    pub seed: u64,
    pub paths: Paths,
    pub candidates: CandidateSource,
    pub cohort: CohortConfig,
    pub assignment: AssignmentSection,
    pub calibration: Calibration,
    pub simulation: SimConfig,
    pub generator: GeneratorConfig,
    pub estimation: EstimationConfig,
    pub analysis: AnalysisSection,
    pub report: ReportSection,
}

const ASSIGN_STREAM: u64 = 100;
const SIMULATE_STREAM: u64 = 101;
const ACTIVITY_STREAM: u64 = 102;
const CANDIDATE_STREAM: u64 = 103;

impl ExperimentConfig {
    pub fn from_toml(s: &str) -> Result<Self, CliError> {
        toml::from_str(s).map_err(|e| CliError::config(e.to_string()))
    }

    /// Reads a config file and resolves its relative paths.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let mut cfg = ExperimentConfig::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        cfg.validate()?;
        cfg.check_files()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let p = &mut self.paths;
        let fix = |x: &mut PathBuf| {
            if x.is_relative() {
                *x = base.join(&*x);
            }
        };
        for x in [
            &mut p.lexicon,
            &mut p.outlets,
            &mut p.news_handles,
            &mut p.templates,
            &mut p.profanity,
            &mut p.platform_terms,
            &mut p.generic_responses,
        ] {
            fix(x);
        }
        for x in [
            &mut p.candidates,
            &mut p.annotations,
            &mut p.sentiment_labels,
        ]
        .into_iter()
        .flatten()
        {
            fix(x);
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.cohort
            .validate()
            .map_err(|e| CliError::config(e.to_string()))?;
        self.simulation
            .validate()
            .map_err(|e| CliError::config(e.to_string()))?;
        if self.candidates.synthetic.is_none() && self.paths.candidates.is_none() {
            return Err(CliError::config(
                "set paths.candidates or candidates.synthetic",
            ));
        }
        if self.report.formats.is_empty() {
            return Err(CliError::config("report.formats is empty"));
        }
        if self.analysis.estimands.is_empty() {
            return Err(CliError::config("analysis.estimands is empty"));
        }
        let p = self.assignment.proportions;
        if p.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(CliError::config(format!(
                "assignment.proportions must be positive, got {p:?}"
            )));
        }
        Ok(())
    }

    /// Fails on the first referenced input file that does not exist.
    pub fn check_files(&self) -> Result<(), CliError> {
        let p = &self.paths;
        let mut files = vec![
            &p.lexicon,
            &p.outlets,
            &p.news_handles,
            &p.templates,
            &p.profanity,
            &p.platform_terms,
            &p.generic_responses,
        ];
        files.extend([&p.annotations, &p.sentiment_labels].into_iter().flatten());
        if self.candidates.synthetic.is_none() {
            files.extend(p.candidates.as_ref());
        }
        match files.into_iter().find(|f| !f.is_file()) {
            Some(f) => Err(CliError::config(format!("{} does not exist", f.display()))),
            None => Ok(()),
        }
    }

    pub fn assignment_seed(&self) -> u64 {
        mix_seed(self.seed, ASSIGN_STREAM, 0)
    }

    pub fn simulation_seed(&self) -> u64 {
        mix_seed(self.seed, SIMULATE_STREAM, 0)
    }

    pub fn activity_seed(&self) -> u64 {
        mix_seed(self.seed, ACTIVITY_STREAM, 0)
    }

    pub fn candidate_seed(&self) -> u64 {
        mix_seed(self.seed, CANDIDATE_STREAM, 0)
    }
}
