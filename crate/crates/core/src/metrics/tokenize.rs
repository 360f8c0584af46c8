use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

/// Tokenizer variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Lowercase, ASCII punctuation split into standalone tokens.
    Simple,
    /// Unicode-aware: symbols are always split off; punctuation (including
    /// `_`) is split off unless it sits between digits.
    Intl,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSequence {
    pub tokens: Vec<String>,
    pub scheme: Scheme,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn as_slice(&self) -> &[String] {
        &self.tokens
    }
}

fn unicode_class() -> &'static (Regex, Regex) {
    static RE: OnceLock<(Regex, Regex)> = OnceLock::new();
    RE.get_or_init(|| {
        (Regex::new(r"^\p{P}$").expect("valid regex"), Regex::new(r"^\p{S}$").expect("valid regex"))
    })
}

fn is_simple_punct(c: char) -> bool {
    c.is_ascii_punctuation() && c != '_'
}

/// Unicode general category P (punctuation) and S (symbol).
fn intl_class(c: char) -> (bool, bool) {
    if c.is_ascii() {
        let symbol = matches!(c, '$' | '+' | '<' | '=' | '>' | '^' | '`' | '|' | '~');
        return (c.is_ascii_punctuation() && !symbol, symbol);
    }
    let mut buf = [0u8; 4];
    let s = c.encode_utf8(&mut buf);
    let (p, sym) = unicode_class();
    (p.is_match(s), sym.is_match(s))
}

/// Symbols always split; punctuation splits unless every neighbour that
/// exists is numeric, so `3.5`, `25-30` and `1,000` stay whole.
fn intl_split(chars: &[char], i: usize) -> bool {
    let (punct, symbol) = intl_class(chars[i]);
    if symbol {
        return true;
    }
    if !punct {
        return false;
    }
    let non_numeric = |c: &char| !c.is_numeric();
    (i > 0 && non_numeric(&chars[i - 1])) || chars.get(i + 1).is_some_and(non_numeric)
}

pub fn tokenize(text: &str, scheme: Scheme) -> TokenSequence {
    let lowered = text.to_lowercase();
    let chars: Vec<char> = lowered.chars().collect();
    let mut tokens = Vec::new();
    let mut current = String::new();
    for (i, &c) in chars.iter().enumerate() {
        if c.is_whitespace() {
            if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
            continue;
        }
        let split = match scheme {
            Scheme::Simple => is_simple_punct(c),
            Scheme::Intl => intl_split(&chars, i),
        };
        if split {
            if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
            tokens.push(c.to_string());
        } else {
            current.push(c);
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    TokenSequence { tokens, scheme }
}
