/// Normalize one token: lowercase, drop punctuation, replace digits with `0`.
///
/// May return an empty string (e.g. for `"--"`); callers skip empties.
pub fn normalize_token(token: &str) -> String {
    let mut out = String::with_capacity(token.len());
    for c in token.chars() {
        if c.is_ascii_digit() {
            out.push('0');
        } else if !(c.is_whitespace() || is_punctuation(c)) {
            out.extend(c.to_lowercase());
        }
    }
    out
}

fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '\u{2010}'
                ..='\u{2027}'
                    | '\u{00a1}'
                    | '\u{00a7}'
                    | '\u{00ab}'
                    | '\u{00b6}'
                    | '\u{00b7}'
                    | '\u{00bb}'
                    | '\u{00bf}'
        )
}

/// Split free text into raw words at whitespace and punctuation.
pub fn split_words(text: &str) -> impl Iterator<Item = &str> {
    text.split(|c: char| c.is_whitespace() || is_punctuation(c))
        .filter(|w| !w.is_empty())
}

/// Split and normalize free text, dropping tokens that normalize to nothing.
pub fn normalized_words(text: &str) -> Vec<String> {
    split_words(text)
        .map(normalize_token)
        .filter(|w| !w.is_empty())
        .collect()
}
