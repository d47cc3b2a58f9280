use serde::{Deserialize, Serialize};

use crate::lexicon::Topic;
use crate::outlets::OutletRecord;

use super::ReplyError;

/// Maximum message length in characters.
pub const PLATFORM_CHAR_CAP: usize = 280;

const LEARN_MORE: &str = " To learn more about ";
const CLICK: &str = " click ";
const AND_FOLLOW: &str = " and follow ";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComposedReply {
    pub contextual: String,
    pub topic: Topic,
    pub outlet_handle: String,
    pub url: String,
    pub full_text: String,
}

fn scaffold(topic: Topic, url: &str, handle: &str) -> String {
    format!("{LEARN_MORE}{topic}{CLICK}{url}{AND_FOLLOW}{handle}.")
}

/// Longest prefix of `s` ending at a word boundary that fits in `budget`
/// characters. Falls back to a hard cut when even the first word is too long.
fn truncate_words(s: &str, budget: usize) -> String {
    if s.chars().count() <= budget {
        return s.to_string();
    }
    let mut out = String::new();
    for word in s.split_whitespace() {
        let extra = word.chars().count() + usize::from(!out.is_empty());
        if out.chars().count() + extra > budget {
            break;
        }
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    if out.is_empty() {
        out = s.chars().take(budget).collect();
    }
    out
}

/// Builds the final message: contextual text, then the topic link and the
/// outlet handle. Only the contextual part is ever shortened to fit the cap.
pub fn compose_reply(
    contextual: &str,
    topic: Topic,
    outlet: &OutletRecord,
    url: &str,
) -> Result<ComposedReply, ReplyError> {
    let contextual = contextual.trim();
    if contextual.is_empty() {
        return Err(ReplyError::EmptyContextual);
    }
    let tail = scaffold(topic, url, &outlet.handle);
    let tail_len = tail.chars().count();
    // Leave room for at least one character of contextual text.
    if tail_len + 1 > PLATFORM_CHAR_CAP {
        return Err(ReplyError::ScaffoldTooLong {
            needed: tail_len,
            cap: PLATFORM_CHAR_CAP,
        });
    }
    let contextual = truncate_words(contextual, PLATFORM_CHAR_CAP - tail_len);
    let full_text = format!("{contextual}{tail}");
    Ok(ComposedReply {
        contextual,
        topic,
        outlet_handle: outlet.handle.clone(),
        url: url.to_string(),
        full_text,
    })
}

/// Splits a composed message back into its parts.
pub fn parse_reply(full_text: &str) -> Result<ComposedReply, ReplyError> {
    let bad = || ReplyError::Unparseable(full_text.to_string());
    let i = full_text.rfind(LEARN_MORE).ok_or_else(bad)?;
    let contextual = &full_text[..i];
    let rest = &full_text[i + LEARN_MORE.len()..];
    let (topic, rest) = rest.split_once(CLICK).ok_or_else(bad)?;
    let j = rest.rfind(AND_FOLLOW).ok_or_else(bad)?;
    let url = &rest[..j];
    let handle = rest[j + AND_FOLLOW.len()..]
        .strip_suffix('.')
        .ok_or_else(bad)?;
    let topic: Topic = topic.parse().map_err(|_| bad())?;
    if contextual.is_empty() || url.is_empty() || url.contains(' ') || !handle.starts_with('@') {
        return Err(bad());
    }
    Ok(ComposedReply {
        contextual: contextual.to_string(),
        topic,
        outlet_handle: handle.to_string(),
        url: url.to_string(),
        full_text: full_text.to_string(),
    })
}
