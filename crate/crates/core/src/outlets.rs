//! Registry of news outlets linked from bot replies.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexicon::Topic;

/// Outlets must score strictly above this reliability value.
pub const MIN_CREDIBILITY: f64 = 40.0;
/// Inclusive absolute bias bound.
pub const MAX_ABS_BIAS: f64 = 18.0;

#[derive(Debug, Error)]
pub enum OutletError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("row {row} ({name}): {msg}")]
    Invalid {
        row: usize,
        name: String,
        msg: String,
    },
    #[error("no eligible outlet has a {0} section")]
    NoSection(Topic),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutletRecord {
    pub name: String,
    pub credibility: f64,
    pub bias: f64,
    pub handle: String,
    pub sections: BTreeMap<Topic, String>,
}

impl OutletRecord {
    pub fn section(&self, topic: Topic) -> Option<&str> {
        self.sections.get(&topic).map(String::as_str)
    }

    fn validate(&self, row: usize) -> Result<(), OutletError> {
        let bad = |msg: &str| OutletError::Invalid {
            row,
            name: self.name.clone(),
            msg: msg.to_string(),
        };
        if !self.handle.starts_with('@') || self.handle.len() < 2 {
            return Err(bad("handle must be non-empty and start with '@'"));
        }
        if self.sections.is_empty() {
            return Err(bad("at least one section URL required"));
        }
        if !self.credibility.is_finite() || !self.bias.is_finite() {
            return Err(bad("scores must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Deserialize, Serialize)]
struct OutletRow {
    name: String,
    credibility: f64,
    bias: f64,
    handle: String,
    entertainment_url: Option<String>,
    lifestyle_url: Option<String>,
    sports_url: Option<String>,
}

pub fn read_outlets<R: Read>(reader: R) -> Result<Vec<OutletRecord>, OutletError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<OutletRow>().enumerate() {
        let row = row?;
        let mut sections = BTreeMap::new();
        for (topic, url) in [
            (Topic::Entertainment, row.entertainment_url),
            (Topic::Lifestyle, row.lifestyle_url),
            (Topic::Sports, row.sports_url),
        ] {
            if let Some(u) = url.filter(|u| !u.trim().is_empty()) {
                sections.insert(topic, u.trim().to_string());
            }
        }
        let rec = OutletRecord {
            name: row.name,
            credibility: row.credibility,
            bias: row.bias,
            handle: row.handle,
            sections,
        };
        rec.validate(i + 1)?;
        out.push(rec);
    }
    Ok(out)
}

pub fn load_outlets(path: impl AsRef<Path>) -> Result<Vec<OutletRecord>, OutletError> {
    read_outlets(std::fs::File::open(path)?)
}

pub fn write_outlets<W: Write>(writer: W, records: &[OutletRecord]) -> Result<(), OutletError> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(OutletRow {
            name: r.name.clone(),
            credibility: r.credibility,
            bias: r.bias,
            handle: r.handle.clone(),
            entertainment_url: r.sections.get(&Topic::Entertainment).cloned(),
            lifestyle_url: r.sections.get(&Topic::Lifestyle).cloned(),
            sports_url: r.sections.get(&Topic::Sports).cloned(),
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn is_eligible(r: &OutletRecord) -> bool {
    r.credibility > MIN_CREDIBILITY && (-MAX_ABS_BIAS..=MAX_ABS_BIAS).contains(&r.bias)
}

/// Keeps reliable, ideologically balanced outlets.
pub fn filter_eligible(records: &[OutletRecord]) -> Vec<OutletRecord> {
    records.iter().filter(|r| is_eligible(r)).cloned().collect()
}

/// Draws one outlet uniformly among those carrying a `topic` section and
/// returns it with that section's URL.
pub fn select_outlet<'a, R: Rng + ?Sized>(
    topic: Topic,
    records: &'a [OutletRecord],
    rng: &mut R,
) -> Result<(&'a OutletRecord, &'a str), OutletError> {
    let candidates: Vec<(&OutletRecord, &str)> = records
        .iter()
        .filter_map(|r| r.section(topic).map(|u| (r, u)))
        .collect();
    if candidates.is_empty() {
        return Err(OutletError::NoSection(topic));
    }
    Ok(candidates[rng.gen_range(0..candidates.len())])
}
