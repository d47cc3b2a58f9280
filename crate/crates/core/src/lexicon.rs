//! Topic keyword lists, whole-token trigger detection and user topic labels.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text;

/// Interest topic a keyword (and a user) belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topic {
    Sports,
    Entertainment,
    Lifestyle,
}

impl Topic {
    /// All topics, in classification tie-break priority order.
    pub const ALL: [Topic; 3] = [Topic::Sports, Topic::Entertainment, Topic::Lifestyle];

    pub fn as_str(self) -> &'static str {
        match self {
            Topic::Sports => "sports",
            Topic::Entertainment => "entertainment",
            Topic::Lifestyle => "lifestyle",
        }
    }
}

impl fmt::Display for Topic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Topic {
    type Err = LexiconError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "sports" => Ok(Topic::Sports),
            "entertainment" => Ok(Topic::Entertainment),
            "lifestyle" => Ok(Topic::Lifestyle),
            other => Err(LexiconError::UnknownTopic {
                row: 0,
                topic: other.to_string(),
            }),
        }
    }
}

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("row {row}: unknown topic {topic:?}")]
    UnknownTopic { row: usize, topic: String },
    #[error("keyword {keyword:?} appears on rows {first} and {second}")]
    Duplicate {
        keyword: String,
        first: usize,
        second: usize,
    },
    #[error("row {row}: empty keyword")]
    EmptyKeyword { row: usize },
    #[error("missing `keyword,topic` header")]
    BadHeader,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordEntry {
    pub keyword: String,
    pub topic: Topic,
}

/// Immutable keyword list. Keywords are lowercase and unique.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    entries: Vec<KeywordEntry>,
    by_keyword: HashMap<String, Topic>,
    /// Keywords indexed by their first token, each stored as a token sequence.
    by_first_token: HashMap<String, Vec<(Vec<String>, usize)>>,
}

impl Lexicon {
    /// Builds a lexicon from entries, normalizing keywords and rejecting duplicates.
    ///
    /// Row numbers in errors are 1-based data rows (the header is row 0).
    pub fn from_entries<I>(entries: I) -> Result<Self, LexiconError>
    where
        I: IntoIterator<Item = KeywordEntry>,
    {
        let mut lex = Lexicon::default();
        let mut rows: HashMap<String, usize> = HashMap::new();
        for (i, e) in entries.into_iter().enumerate() {
            let row = i + 1;
            let keyword = e.keyword.trim().to_lowercase();
            let toks = text::tokens(&keyword);
            if keyword.is_empty() || toks.is_empty() {
                return Err(LexiconError::EmptyKeyword { row });
            }
            if let Some(&first) = rows.get(&keyword) {
                return Err(LexiconError::Duplicate {
                    keyword,
                    first,
                    second: row,
                });
            }
            rows.insert(keyword.clone(), row);
            let idx = lex.entries.len();
            lex.by_first_token
                .entry(toks[0].clone())
                .or_default()
                .push((toks, idx));
            lex.by_keyword.insert(keyword.clone(), e.topic);
            lex.entries.push(KeywordEntry {
                keyword,
                topic: e.topic,
            });
        }
        // Longest sequences first so overlapping multi-word keywords are all seen.
        for v in lex.by_first_token.values_mut() {
            v.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then(a.1.cmp(&b.1)));
        }
        Ok(lex)
    }

    pub fn entries(&self) -> &[KeywordEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn topic_of(&self, keyword: &str) -> Option<Topic> {
        self.by_keyword.get(&keyword.to_lowercase()).copied()
    }

    pub fn counts_by_topic(&self) -> BTreeMap<Topic, usize> {
        let mut counts: BTreeMap<Topic, usize> = Topic::ALL.iter().map(|t| (*t, 0)).collect();
        for e in &self.entries {
            *counts.entry(e.topic).or_default() += 1;
        }
        counts
    }

    /// Keywords of one topic, in file order.
    pub fn keywords_for(&self, topic: Topic) -> impl Iterator<Item = &str> {
        self.entries
            .iter()
            .filter(move |e| e.topic == topic)
            .map(|e| e.keyword.as_str())
    }

    /// Writes the normalized `keyword,topic` CSV.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(b"keyword,topic\n")?;
        for e in &self.entries {
            let kw = if e.keyword.contains([',', '"', '\n']) {
                format!("\"{}\"", e.keyword.replace('"', "\"\""))
            } else {
                e.keyword.clone()
            };
            writeln!(w, "{},{}", kw, e.topic)?;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), LexiconError> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))?;
        Ok(())
    }
}

/// Reads a `keyword,topic` CSV with header.
pub fn read_lexicon<R: Read>(reader: R) -> Result<Lexicon, LexiconError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.len() < 2 || &headers[0] != "keyword" || &headers[1] != "topic" {
        return Err(LexiconError::BadHeader);
    }
    let mut entries = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let topic = rec.get(1).unwrap_or("");
        let topic = topic
            .parse::<Topic>()
            .map_err(|_| LexiconError::UnknownTopic {
                row,
                topic: topic.to_string(),
            })?;
        entries.push(KeywordEntry {
            keyword: rec.get(0).unwrap_or("").to_string(),
            topic,
        });
    }
    Lexicon::from_entries(entries)
}

pub fn load_lexicon(path: impl AsRef<Path>) -> Result<Lexicon, LexiconError> {
    read_lexicon(std::fs::File::open(path)?)
}

/// A keyword found in a text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordMatch {
    pub keyword: String,
    pub topic: Topic,
}

/// Every lexicon keyword present in `text` as a whole, case-insensitive token
/// sequence. Each keyword is reported once, ordered by first occurrence.
pub fn match_keywords(text: &str, lexicon: &Lexicon) -> Vec<KeywordMatch> {
    let toks = text::tokens(text);
    let mut seen: HashSet<usize> = HashSet::new();
    let mut out = Vec::new();
    for start in 0..toks.len() {
        let Some(cands) = lexicon.by_first_token.get(&toks[start]) else {
            continue;
        };
        for (seq, idx) in cands {
            let end = start + seq.len();
            if end <= toks.len() && toks[start..end] == seq[..] && seen.insert(*idx) {
                let e = &lexicon.entries[*idx];
                out.push(KeywordMatch {
                    keyword: e.keyword.clone(),
                    topic: e.topic,
                });
            }
        }
    }
    out
}

/// Labels a user by the topic with the most keyword-bearing posts.
///
/// Ties go to more total keyword hits, then to sports > entertainment >
/// lifestyle. `None` means no post matched any keyword.
pub fn classify_user_topic<S: AsRef<str>>(posts: &[S], lexicon: &Lexicon) -> Option<Topic> {
    let mut post_votes: BTreeMap<Topic, usize> = BTreeMap::new();
    let mut hits: BTreeMap<Topic, usize> = BTreeMap::new();
    for p in posts {
        let matches = match_keywords(p.as_ref(), lexicon);
        let mut topics_here: HashSet<Topic> = HashSet::new();
        for m in &matches {
            *hits.entry(m.topic).or_default() += 1;
            topics_here.insert(m.topic);
        }
        for t in topics_here {
            *post_votes.entry(t).or_default() += 1;
        }
    }
    Topic::ALL
        .iter()
        .copied()
        .filter(|t| post_votes.get(t).copied().unwrap_or(0) > 0)
        // max_by_key keeps the last maximum; iterate in reverse priority.
        .rev()
        .max_by_key(|t| (post_votes[t], hits.get(t).copied().unwrap_or(0)))
}
