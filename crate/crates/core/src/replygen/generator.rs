use std::path::Path;
use std::time::Duration;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text;

use super::gates::{apply_quality_gates, read_lines, FailedGate, GateLexicons};
use super::sanitize::sanitize_input;
use super::ReplyError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenerateError {
    #[error("generator returned an empty draft")]
    EmptyDraft,
    #[error("generator request failed: {0}")]
    Transport(String),
    #[error("generator response malformed: {0}")]
    BadResponse(String),
    #[error("{0}")]
    Other(String),
}

/// Produces a draft reply for a cleaned input post.
///
/// Implementations return non-empty text or an error; never an empty string.
pub trait Generator {
    fn generate(&self, input: &str) -> Result<String, GenerateError>;
}

impl<G: Generator + ?Sized> Generator for &G {
    fn generate(&self, input: &str) -> Result<String, GenerateError> {
        (**self).generate(input)
    }
}

impl<G: Generator + ?Sized> Generator for Box<G> {
    fn generate(&self, input: &str) -> Result<String, GenerateError> {
        (**self).generate(input)
    }
}

const STOPWORDS: &[&str] = &[
    "about", "after", "again", "also", "anybody", "been", "being", "cant", "could", "does",
    "doesnt", "dont", "even", "every", "from", "have", "just", "know", "like", "made", "make",
    "more", "much", "need", "needs", "only", "other", "pretty", "really", "said", "says", "should",
    "some", "still", "than", "that", "their", "them", "then", "there", "these", "they", "this",
    "those", "through", "today", "very", "want", "were", "what", "when", "where", "which", "while",
    "with", "would", "your", "youre",
];

const PATTERNS: &[&str] = &[
    "Honestly, {} has been on my mind all week.",
    "I think {} is better than people give it credit for.",
    "Can't argue with that, {} never gets old.",
    "Good point about {}, I was thinking the same thing.",
    "Not going to lie, {} always keeps things interesting.",
    "Fair take. I could talk about {} all day.",
];

/// Deterministic stand-in for a neural text generator: picks the most salient
/// word of the input and drops it into one of a few conversational patterns,
/// chosen by a hash of the input.
#[derive(Debug, Clone, Default)]
pub struct ReferenceGenerator;

impl Generator for ReferenceGenerator {
    fn generate(&self, input: &str) -> Result<String, GenerateError> {
        let toks = text::tokens(input);
        let subject = toks
            .iter()
            .filter(|t| t.len() >= 4 && t.chars().all(char::is_alphabetic))
            .filter(|t| !STOPWORDS.contains(&t.as_str()))
            .max_by(|a, b| a.len().cmp(&b.len()).then(b.cmp(a)))
            .map(String::as_str)
            .unwrap_or("this");
        let pattern = PATTERNS[(text::fnv1a(input.as_bytes()) % PATTERNS.len() as u64) as usize];
        Ok(pattern.replace("{}", subject))
    }
}

#[derive(Serialize)]
struct GenerateRequest<'a> {
    input: &'a str,
}

#[derive(Deserialize)]
struct GenerateResponse {
    draft: String,
}

/// Client for an external text-generation service.
///
/// Sends `POST <endpoint>` with `{"input": ...}` and expects `{"draft": ...}`.
/// Each call is independent; the client holds only connection configuration.
#[derive(Debug, Clone)]
pub struct HttpGenerator {
    endpoint: String,
    agent: ureq::Agent,
}

impl HttpGenerator {
    pub fn new(endpoint: impl Into<String>, timeout: Duration) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        HttpGenerator {
            endpoint: endpoint.into(),
            agent,
        }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }
}

impl Generator for HttpGenerator {
    fn generate(&self, input: &str) -> Result<String, GenerateError> {
        let resp = self
            .agent
            .post(&self.endpoint)
            .send_json(GenerateRequest { input })
            .map_err(|e| GenerateError::Transport(e.to_string()))?;
        let body: GenerateResponse = resp
            .into_body()
            .read_json()
            .map_err(|e| GenerateError::BadResponse(e.to_string()))?;
        if body.draft.trim().is_empty() {
            return Err(GenerateError::EmptyDraft);
        }
        Ok(body.draft)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Generated,
    Template,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedReply {
    pub text: String,
    pub provenance: Provenance,
    /// Gate that rejected the draft, when a template replaced it.
    pub rejected_by: Option<FailedGate>,
}

/// Clean, generate, gate; fall back to a uniformly drawn template on any
/// failure. The rng is only consumed on fallback.
pub fn generate_reply<G, R>(
    input: &str,
    generator: &G,
    lexicons: &GateLexicons,
    templates: &[String],
    rng: &mut R,
) -> Result<GeneratedReply, ReplyError>
where
    G: Generator + ?Sized,
    R: Rng + ?Sized,
{
    let attempt = sanitize_input(input)
        .map_err(|_| GenerateError::Other("input empty after cleaning".into()))
        .and_then(|clean| {
            let draft = generator.generate(&clean)?;
            if draft.trim().is_empty() {
                return Err(GenerateError::EmptyDraft);
            }
            Ok((clean, draft.trim().to_string()))
        });
    let failure = match attempt {
        Ok((clean, draft)) => {
            let verdict = apply_quality_gates(&draft, &clean, lexicons);
            if verdict.passed {
                return Ok(GeneratedReply {
                    text: draft,
                    provenance: Provenance::Generated,
                    rejected_by: None,
                });
            }
            Err(verdict.failed_gate)
        }
        Err(e) => Ok(e),
    };
    if templates.is_empty() {
        let err = match failure {
            Ok(e) => e,
            Err(g) => GenerateError::Other(format!("draft rejected by {g:?} gate")),
        };
        return Err(ReplyError::NoFallback(err));
    }
    let t = &templates[rng.gen_range(0..templates.len())];
    Ok(GeneratedReply {
        text: t.clone(),
        provenance: Provenance::Template,
        rejected_by: failure.err().flatten(),
    })
}

/// Template bank: one template per line; blank lines and `#` comments skipped.
pub fn parse_templates(s: &str) -> Vec<String> {
    read_lines(s)
}

pub fn load_templates(path: impl AsRef<Path>) -> Result<Vec<String>, ReplyError> {
    Ok(parse_templates(&std::fs::read_to_string(path)?))
}
