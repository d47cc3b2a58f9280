use crate::text::{is_basic_punctuation, is_url_token};

use super::ReplyError;

/// Cleans a raw post before it is given to a generator.
///
/// Links (with or without scheme) are dropped, @-mentions are kept, and any
/// character that is not a letter, digit, basic punctuation (`.,!?'"-`) or
/// whitespace is removed. Whitespace is collapsed to single spaces.
pub fn sanitize_input(text: &str) -> Result<String, ReplyError> {
    let mut out: Vec<String> = Vec::new();
    for tok in text.split_whitespace() {
        if is_url_token(tok) {
            continue;
        }
        let is_mention = tok.len() > 1
            && tok.starts_with('@')
            && tok[1..].starts_with(|c: char| c.is_alphanumeric() || c == '_');
        let cleaned: String = if is_mention {
            std::iter::once('@')
                .chain(
                    tok[1..]
                        .chars()
                        .filter(|c| c.is_alphanumeric() || *c == '_' || is_basic_punctuation(*c)),
                )
                .collect()
        } else {
            tok.chars()
                .filter(|c| c.is_alphanumeric() || is_basic_punctuation(*c))
                .collect()
        };
        if !cleaned.is_empty() {
            out.push(cleaned);
        }
    }
    if out.is_empty() {
        return Err(ReplyError::EmptyInput);
    }
    Ok(out.join(" "))
}
