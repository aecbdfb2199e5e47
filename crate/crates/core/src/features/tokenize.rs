use crate::corpus::Citation;

/// Lowercased alphanumeric runs; everything else separates tokens. No stemming.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            cur.extend(ch.to_lowercase());
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// Title and abstract tokens as separate segments; n-grams never span them.
pub fn citation_segments(c: &Citation) -> [Vec<String>; 2] {
    [tokenize(&c.title), tokenize(&c.abstract_text)]
}

pub fn citation_tokens(c: &Citation) -> Vec<String> {
    let [mut t, a] = citation_segments(c);
    t.extend(a);
    t
}
