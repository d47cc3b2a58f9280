use std::collections::HashSet;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::text;

use super::ReplyError;

/// Drafts at or above this character-trigram Jaccard similarity to the input
/// are treated as echoes.
pub const ECHO_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailedGate {
    Echo,
    Generic,
    Profanity,
    PlatformTerms,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateVerdict {
    pub passed: bool,
    pub failed_gate: Option<FailedGate>,
}

impl GateVerdict {
    pub const PASS: GateVerdict = GateVerdict {
        passed: true,
        failed_gate: None,
    };

    fn fail(g: FailedGate) -> Self {
        GateVerdict {
            passed: false,
            failed_gate: Some(g),
        }
    }
}

/// Word lists backing the generic, profanity and platform-term gates.
#[derive(Debug, Clone, Default)]
pub struct GateLexicons {
    profanity: HashSet<String>,
    platform_terms: HashSet<String>,
    generic: HashSet<String>,
}

impl GateLexicons {
    pub fn new<I, J, K>(profanity: I, platform_terms: J, generic_responses: K) -> Self
    where
        I: IntoIterator,
        I::Item: AsRef<str>,
        J: IntoIterator,
        J::Item: AsRef<str>,
        K: IntoIterator,
        K::Item: AsRef<str>,
    {
        let words = |it: &mut dyn Iterator<Item = String>| -> HashSet<String> {
            it.map(|w| w.trim().to_lowercase())
                .filter(|w| !w.is_empty())
                .collect()
        };
        GateLexicons {
            profanity: words(&mut profanity.into_iter().map(|s| s.as_ref().to_string())),
            platform_terms: words(&mut platform_terms.into_iter().map(|s| s.as_ref().to_string())),
            generic: generic_responses
                .into_iter()
                .map(|s| text::normalize_whitespace_case(s.as_ref()))
                .filter(|s| !s.is_empty())
                .collect(),
        }
    }

    /// Loads three one-entry-per-line files. Blank lines and `#` comments are skipped.
    pub fn load(
        profanity: impl AsRef<Path>,
        platform_terms: impl AsRef<Path>,
        generic_responses: impl AsRef<Path>,
    ) -> Result<Self, ReplyError> {
        let read = |p: &Path| -> Result<Vec<String>, ReplyError> {
            let mut s = String::new();
            std::fs::File::open(p)?.read_to_string(&mut s)?;
            Ok(read_lines(&s))
        };
        Ok(GateLexicons::new(
            read(profanity.as_ref())?,
            read(platform_terms.as_ref())?,
            read(generic_responses.as_ref())?,
        ))
    }

    pub fn is_generic(&self, draft: &str) -> bool {
        self.generic
            .contains(&text::normalize_whitespace_case(draft))
    }
}

pub(crate) fn read_lines(s: &str) -> Vec<String> {
    s.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

fn normalize_for_echo(s: &str) -> Vec<char> {
    text::tokens(s).join(" ").chars().collect()
}

fn trigrams(chars: &[char]) -> HashSet<&[char]> {
    chars.windows(3).collect()
}

/// Jaccard similarity of the character-trigram sets of two texts, after
/// lowercasing and reducing both to space-separated alphanumeric tokens.
/// Texts shorter than three characters compare by equality.
pub fn trigram_jaccard(a: &str, b: &str) -> f64 {
    let (na, nb) = (normalize_for_echo(a), normalize_for_echo(b));
    if na.len() < 3 || nb.len() < 3 {
        return if na == nb { 1.0 } else { 0.0 };
    }
    let (ta, tb) = (trigrams(&na), trigrams(&nb));
    let inter = ta.intersection(&tb).count();
    let union = ta.len() + tb.len() - inter;
    inter as f64 / union as f64
}

/// Runs the gates in order echo, generic, profanity, platform terms and
/// reports the first failure.
pub fn apply_quality_gates(draft: &str, input: &str, lexicons: &GateLexicons) -> GateVerdict {
    if trigram_jaccard(draft, input) >= ECHO_THRESHOLD {
        return GateVerdict::fail(FailedGate::Echo);
    }
    if lexicons.is_generic(draft) {
        return GateVerdict::fail(FailedGate::Generic);
    }
    let toks = text::tokens(draft);
    if toks.iter().any(|t| lexicons.profanity.contains(t)) {
        return GateVerdict::fail(FailedGate::Profanity);
    }
    if toks.iter().any(|t| lexicons.platform_terms.contains(t)) {
        return GateVerdict::fail(FailedGate::PlatformTerms);
    }
    GateVerdict::PASS
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lex() -> GateLexicons {
        GateLexicons::new(
            ["damn", "crap"],
            ["subreddit", "upvoting", "downvoting"],
            ["I am not sure if you're serious or not, but I'm going with the latter"],
        )
    }

    #[test]
    fn verbatim_is_echo() {
        let input = "The Yankees pitcher was unreal tonight";
        let v = apply_quality_gates(input, input, &lex());
        assert_eq!(v.failed_gate, Some(FailedGate::Echo));
        assert!(!v.passed);
    }

    #[test]
    fn platform_term_caught() {
        let v = apply_quality_gates(
            "Post this in the subreddit for more",
            "great pitching tonight",
            &lex(),
        );
        assert_eq!(v.failed_gate, Some(FailedGate::PlatformTerms));
    }

    #[test]
    fn on_topic_reply_passes() {
        let v = apply_quality_gates(
            "He's the best player in the league",
            "That pitcher threw a no-hitter against Boston last night",
            &lex(),
        );
        assert_eq!(v, GateVerdict::PASS);
    }

    #[test]
    fn generic_is_case_and_space_insensitive() {
        let v = apply_quality_gates(
            "i am not sure if you're  serious or not, but I'm going with the LATTER",
            "new album drops friday",
            &lex(),
        );
        assert_eq!(v.failed_gate, Some(FailedGate::Generic));
    }

    #[test]
    fn profanity_is_whole_token() {
        assert_eq!(
            apply_quality_gates("well damn that was close", "close game", &lex()).failed_gate,
            Some(FailedGate::Profanity)
        );
        assert!(apply_quality_gates("crapshoot of a season", "season recap", &lex()).passed);
    }

    #[test]
    fn gate_order_is_fixed() {
        // Echo wins over profanity when both apply.
        let input = "damn that subreddit";
        assert_eq!(
            apply_quality_gates(input, input, &lex()).failed_gate,
            Some(FailedGate::Echo)
        );
        assert_eq!(
            apply_quality_gates("damn that subreddit is wild", "nba finals", &lex()).failed_gate,
            Some(FailedGate::Profanity)
        );
    }

    #[test]
    fn jaccard_bounds() {
        assert_eq!(trigram_jaccard("abc def", "ABC  def!"), 1.0);
        assert_eq!(trigram_jaccard("abcdef", "uvwxyz"), 0.0);
        assert_eq!(trigram_jaccard("ok", "ok"), 1.0);
        let j = trigram_jaccard("the game tonight", "the game last night");
        assert!(j > 0.0 && j < 1.0);
    }
}
