//! Bot reply production: input cleaning, pluggable draft generation, quality
//! gates with template fallback, message composition, and audit utilities for
//! response quality and sentiment.

mod audit;
mod compose;
mod gates;
mod generator;
mod sanitize;

pub use audit::{
    aggregate_sentiment, audit_majority_vote, read_sentiment_labels, Annotation, AnnotationMatrix,
    AuditTally, BotGender, Sentiment, SentimentClassifier, SentimentRow, SentimentTable,
    ValenceClassifier,
};
pub use compose::{compose_reply, parse_reply, ComposedReply, PLATFORM_CHAR_CAP};
pub use gates::{apply_quality_gates, trigram_jaccard, FailedGate, GateLexicons, GateVerdict};
pub use generator::{
    generate_reply, load_templates, parse_templates, GenerateError, GeneratedReply, Generator,
    HttpGenerator, Provenance, ReferenceGenerator,
};
pub use sanitize::sanitize_input;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReplyError {
    #[error("nothing left to respond to after cleaning")]
    EmptyInput,
    #[error("generation failed and no fallback templates are available: {0}")]
    NoFallback(GenerateError),
    #[error("contextual text is empty")]
    EmptyContextual,
    #[error("url and fixed message scaffold alone need {needed} characters, cap is {cap}")]
    ScaffoldTooLong { needed: usize, cap: usize },
    #[error("not a composed reply: {0}")]
    Unparseable(String),
    #[error("annotation matrix needs at least 3 annotators, got {0}")]
    TooFewAnnotators(usize),
    #[error("annotation row {row} has {got} cells, expected {expected}")]
    Ragged {
        row: usize,
        got: usize,
        expected: usize,
    },
    #[error("unknown label {0:?}")]
    UnknownLabel(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}
