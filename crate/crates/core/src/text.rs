//! Tokenization and URL helpers shared by keyword matching, reply cleaning and
//! the political-content classifier.

/// Splits `text` on non-alphanumeric characters and lowercases every token.
///
/// Each token comes with the byte offset where it starts in `text`.
pub fn tokens_with_offsets(text: &str) -> Vec<(usize, String)> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, c) in text.char_indices() {
        if c.is_alphanumeric() {
            if start.is_none() {
                start = Some(i);
            }
        } else if let Some(s) = start.take() {
            out.push((s, text[s..i].to_lowercase()));
        }
    }
    if let Some(s) = start {
        out.push((s, text[s..].to_lowercase()));
    }
    out
}

/// Lowercased alphanumeric tokens of `text`.
pub fn tokens(text: &str) -> Vec<String> {
    tokens_with_offsets(text)
        .into_iter()
        .map(|(_, t)| t)
        .collect()
}

/// True if a whitespace-delimited token looks like a link: it carries a
/// scheme (`http://`, `https://`, ...), starts with `www.`, or is a bare
/// domain such as `t.co/x` or `nytimes.com`.
pub fn is_url_token(token: &str) -> bool {
    let t = token.trim_matches(|c: char| !c.is_alphanumeric() && c != '/');
    if t.is_empty() {
        return false;
    }
    let lower = t.to_ascii_lowercase();
    if lower.contains("://") || lower.starts_with("www.") {
        return true;
    }
    let host = lower.split('/').next().unwrap_or("");
    if !host.contains('.') {
        return false;
    }
    let labels: Vec<&str> = host.split('.').collect();
    if labels
        .iter()
        .any(|l| l.is_empty() || !l.chars().all(|c| c.is_ascii_alphanumeric() || c == '-'))
    {
        return false;
    }
    let tld = labels[labels.len() - 1];
    tld.len() >= 2 && tld.chars().all(|c| c.is_ascii_alphabetic())
}

/// Removes link tokens and every character that is neither alphanumeric,
/// basic punctuation nor whitespace, then collapses whitespace. Emoji and
/// pictographs disappear; words and punctuation stay.
pub fn strip_urls_and_symbols(text: &str) -> String {
    let mut kept: Vec<String> = Vec::new();
    for raw in text.split_whitespace() {
        if is_url_token(raw) {
            continue;
        }
        let cleaned: String = raw
            .chars()
            .filter(|c| c.is_alphanumeric() || is_basic_punctuation(*c))
            .collect();
        if !cleaned.is_empty() {
            kept.push(cleaned);
        }
    }
    kept.join(" ")
}

/// The punctuation allowed to survive input cleaning.
pub fn is_basic_punctuation(c: char) -> bool {
    matches!(c, '.' | ',' | '!' | '?' | '\'' | '"' | '-')
}

/// Lowercase, trim and collapse internal whitespace.
pub fn normalize_whitespace_case(text: &str) -> String {
    text.split_whitespace()
        .map(|w| w.to_lowercase())
        .collect::<Vec<_>>()
        .join(" ")
}

/// 64-bit FNV-1a. Used where a stable, seed-free hash of text is needed.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}
