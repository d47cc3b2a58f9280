use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::text;

use super::ReplyError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Annotation {
    Satisfactory,
    Unsatisfactory,
}

impl FromStr for Annotation {
    type Err = ReplyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "satisfactory" | "s" | "1" => Ok(Annotation::Satisfactory),
            "unsatisfactory" | "u" | "0" => Ok(Annotation::Unsatisfactory),
            other => Err(ReplyError::UnknownLabel(other.to_string())),
        }
    }
}

/// Responses × annotators label grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationMatrix {
    rows: Vec<Vec<Annotation>>,
    annotators: usize,
}

impl AnnotationMatrix {
    pub fn new(rows: Vec<Vec<Annotation>>) -> Result<Self, ReplyError> {
        let annotators = rows.first().map(Vec::len).unwrap_or(0);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != annotators {
                return Err(ReplyError::Ragged {
                    row: i + 1,
                    got: r.len(),
                    expected: annotators,
                });
            }
        }
        if annotators < 3 {
            return Err(ReplyError::TooFewAnnotators(annotators));
        }
        Ok(AnnotationMatrix { rows, annotators })
    }

    /// Reads `id,a1,...,ak` CSV with header. The id column is ignored.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self, ReplyError> {
        let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            rows.push(
                rec.iter()
                    .skip(1)
                    .map(str::parse)
                    .collect::<Result<Vec<Annotation>, _>>()?,
            );
        }
        AnnotationMatrix::new(rows)
    }

    pub fn rows(&self) -> &[Vec<Annotation>] {
        &self.rows
    }

    pub fn annotators(&self) -> usize {
        self.annotators
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditTally {
    pub satisfactory: usize,
    pub unsatisfactory: usize,
    pub rate: f64,
}

/// Majority vote per response: satisfactory when at least `ceil((k+1)/2)`
/// of the `k` annotators said so (3 of 5).
pub fn audit_majority_vote(matrix: &AnnotationMatrix) -> AuditTally {
    let k = matrix.annotators;
    let needed = (k + 2) / 2;
    let satisfactory = matrix
        .rows
        .iter()
        .filter(|r| r.iter().filter(|a| **a == Annotation::Satisfactory).count() >= needed)
        .count();
    let n = matrix.rows.len();
    AuditTally {
        satisfactory,
        unsatisfactory: n - satisfactory,
        rate: if n == 0 {
            0.0
        } else {
            satisfactory as f64 / n as f64
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BotGender {
    Male,
    Female,
}

impl FromStr for BotGender {
    type Err = ReplyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "male" | "male_bot" => Ok(BotGender::Male),
            "female" | "female_bot" => Ok(BotGender::Female),
            other => Err(ReplyError::UnknownLabel(other.to_string())),
        }
    }
}

impl fmt::Display for BotGender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BotGender::Male => "male",
            BotGender::Female => "female",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sentiment {
    Positive,
    Negative,
    Neutral,
}

impl Sentiment {
    pub const ALL: [Sentiment; 3] = [Sentiment::Positive, Sentiment::Negative, Sentiment::Neutral];

    pub fn label(self) -> &'static str {
        match self {
            Sentiment::Positive => "Positive",
            Sentiment::Negative => "Negative",
            Sentiment::Neutral => "Neutral",
        }
    }
}

impl FromStr for Sentiment {
    type Err = ReplyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "positive" => Ok(Sentiment::Positive),
            "negative" => Ok(Sentiment::Negative),
            "neutral" => Ok(Sentiment::Neutral),
            other => Err(ReplyError::UnknownLabel(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentimentRow {
    pub gender: BotGender,
    pub sentiment: Sentiment,
    pub count: usize,
    /// Share of the gender's replies, in percent.
    pub percent: f64,
}

impl SentimentRow {
    /// `"18 (18.18%)"`
    pub fn cell(&self) -> String {
        format!("{} ({:.2}%)", self.count, self.percent)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SentimentTable {
    pub rows: Vec<SentimentRow>,
    pub totals: BTreeMap<BotGender, usize>,
}

impl SentimentTable {
    pub fn get(&self, gender: BotGender, sentiment: Sentiment) -> Option<&SentimentRow> {
        self.rows
            .iter()
            .find(|r| r.gender == gender && r.sentiment == sentiment)
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Counts labels per (bot gender, sentiment) with within-gender percentages.
pub fn aggregate_sentiment(labels: &[(BotGender, Sentiment)]) -> SentimentTable {
    let mut counts: BTreeMap<(BotGender, Sentiment), usize> = BTreeMap::new();
    let mut totals: BTreeMap<BotGender, usize> = BTreeMap::new();
    for (g, s) in labels {
        *counts.entry((*g, *s)).or_default() += 1;
        *totals.entry(*g).or_default() += 1;
    }
    let mut rows = Vec::new();
    for (g, total) in &totals {
        for s in Sentiment::ALL {
            let count = counts.get(&(*g, s)).copied().unwrap_or(0);
            rows.push(SentimentRow {
                gender: *g,
                sentiment: s,
                count,
                percent: 100.0 * count as f64 / *total as f64,
            });
        }
    }
    SentimentTable { rows, totals }
}

/// Reads `id,bot_gender,sentiment` CSV with header.
pub fn read_sentiment_labels<R: Read>(
    reader: R,
) -> Result<Vec<(BotGender, Sentiment)>, ReplyError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() < 3 {
            return Err(ReplyError::Ragged {
                row: i + 1,
                got: rec.len(),
                expected: 3,
            });
        }
        out.push((rec[1].parse()?, rec[2].parse()?));
    }
    Ok(out)
}

/// Labels the sentiment of a reply text.
pub trait SentimentClassifier {
    fn classify(&self, text: &str) -> Sentiment;
}

const POSITIVE: &[&str] = &[
    "amazing",
    "appreciate",
    "awesome",
    "best",
    "cool",
    "enjoy",
    "excellent",
    "fantastic",
    "glad",
    "good",
    "great",
    "happy",
    "helpful",
    "interesting",
    "love",
    "nice",
    "thank",
    "thanks",
    "wonderful",
    "yes",
];

const NEGATIVE: &[&str] = &[
    "annoying", "awful", "bad", "block", "blocked", "bot", "dumb", "fake", "hate", "leave", "no",
    "reported", "scam", "spam", "stop", "stupid", "terrible", "ugh", "worst", "wrong",
];

/// Word-valence scorer: positive minus negative word hits decides the label.
#[derive(Debug, Clone)]
pub struct ValenceClassifier {
    positive: HashSet<String>,
    negative: HashSet<String>,
}

impl Default for ValenceClassifier {
    fn default() -> Self {
        ValenceClassifier {
            positive: POSITIVE.iter().map(|s| s.to_string()).collect(),
            negative: NEGATIVE.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl SentimentClassifier for ValenceClassifier {
    fn classify(&self, text: &str) -> Sentiment {
        let score: i64 = text::tokens(text)
            .iter()
            .map(|t| i64::from(self.positive.contains(t)) - i64::from(self.negative.contains(t)))
            .sum();
        match score.signum() {
            1 => Sentiment::Positive,
            -1 => Sentiment::Negative,
            _ => Sentiment::Neutral,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(g: BotGender, p: usize, n: usize, u: usize) -> Vec<(BotGender, Sentiment)> {
        let mut v = vec![(g, Sentiment::Positive); p];
        v.extend(vec![(g, Sentiment::Negative); n]);
        v.extend(vec![(g, Sentiment::Neutral); u]);
        v
    }

    #[test]
    fn all_satisfactory() {
        let m = AnnotationMatrix::new(vec![vec![Annotation::Satisfactory; 5]; 10]).unwrap();
        let t = audit_majority_vote(&m);
        assert_eq!((t.satisfactory, t.unsatisfactory, t.rate), (10, 0, 1.0));
    }

    #[test]
    fn three_of_five_is_majority() {
        use Annotation::*;
        let m = AnnotationMatrix::new(vec![
            vec![
                Satisfactory,
                Satisfactory,
                Satisfactory,
                Unsatisfactory,
                Unsatisfactory,
            ],
            vec![
                Satisfactory,
                Satisfactory,
                Unsatisfactory,
                Unsatisfactory,
                Unsatisfactory,
            ],
        ])
        .unwrap();
        let t = audit_majority_vote(&m);
        assert_eq!((t.satisfactory, t.unsatisfactory), (1, 1));
    }

    #[test]
    fn ragged_and_narrow_rejected() {
        use Annotation::*;
        assert!(matches!(
            AnnotationMatrix::new(vec![vec![Satisfactory; 5], vec![Satisfactory; 4]]),
            Err(ReplyError::Ragged { row: 2, .. })
        ));
        assert!(matches!(
            AnnotationMatrix::new(vec![vec![Satisfactory; 2]]),
            Err(ReplyError::TooFewAnnotators(2))
        ));
    }

    #[test]
    fn csv_reader() {
        let csv = "id,a1,a2,a3\n1,satisfactory,satisfactory,unsatisfactory\n2,u,u,s\n";
        let m = AnnotationMatrix::read_csv(csv.as_bytes()).unwrap();
        assert_eq!(audit_majority_vote(&m).satisfactory, 1);
    }

    #[test]
    fn sentiment_male_shares() {
        let t = aggregate_sentiment(&labels(BotGender::Male, 18, 49, 32));
        let pos = t.get(BotGender::Male, Sentiment::Positive).unwrap();
        assert_eq!(pos.count, 18);
        assert_eq!(format!("{:.2}", pos.percent), "18.18");
        assert_eq!(pos.cell(), "18 (18.18%)");
        assert_eq!(t.totals[&BotGender::Male], 99);
    }

    #[test]
    fn sentiment_csv() {
        let csv = "id,bot_gender,sentiment\n1,male,positive\n2,female,neutral\n";
        let v = read_sentiment_labels(csv.as_bytes()).unwrap();
        assert_eq!(
            v,
            vec![
                (BotGender::Male, Sentiment::Positive),
                (BotGender::Female, Sentiment::Neutral)
            ]
        );
        assert!(read_sentiment_labels("id,g,s\n1,robot,positive\n".as_bytes()).is_err());
    }

    #[test]
    fn empty_sentiment_table() {
        assert!(aggregate_sentiment(&[]).is_empty());
    }

    #[test]
    fn valence_classifier() {
        let c = ValenceClassifier::default();
        assert_eq!(c.classify("Thanks, great link!"), Sentiment::Positive);
        assert_eq!(c.classify("stop spamming me bot"), Sentiment::Negative);
        assert_eq!(c.classify("ok"), Sentiment::Neutral);
    }
}
