use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Lowercases and collapses runs of whitespace to a single space.
pub fn normalize(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    for word in raw.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.extend(word.chars().flat_map(char::to_lowercase));
    }
    out
}

/// How a normalized attribute value is cut into tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Tokenizer {
    /// Whitespace-separated words.
    #[default]
    Word,
    /// Runs of `n` consecutive words.
    WordNgram(usize),
    /// Runs of `q` consecutive characters.
    CharQgram(usize),
}

impl Tokenizer {
    /// Appends the tokens of an already normalized value to `out`. A value
    /// shorter than one full n-gram yields itself as the only token.
    pub fn tokenize_into(&self, normalized: &str, out: &mut Vec<String>) {
        if normalized.is_empty() {
            return;
        }
        match *self {
            Tokenizer::Word => out.extend(normalized.split(' ').map(str::to_string)),
            Tokenizer::WordNgram(n) => {
                let words: Vec<&str> = normalized.split(' ').collect();
                if words.len() <= n {
                    out.push(normalized.to_string());
                } else {
                    out.extend(words.windows(n).map(|w| w.join(" ")));
                }
            }
            Tokenizer::CharQgram(q) => {
                let chars: Vec<char> = normalized.chars().collect();
                if chars.len() <= q {
                    out.push(normalized.to_string());
                } else {
                    out.extend(chars.windows(q).map(|w| w.iter().collect::<String>()));
                }
            }
        }
    }

    pub fn tokenize(&self, normalized: &str) -> Vec<String> {
        let mut out = Vec::new();
        self.tokenize_into(normalized, &mut out);
        out
    }
}

impl fmt::Display for Tokenizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tokenizer::Word => write!(f, "word"),
            Tokenizer::WordNgram(n) => write!(f, "word-ngram:{n}"),
            Tokenizer::CharQgram(q) => write!(f, "char-qgram:{q}"),
        }
    }
}

impl FromStr for Tokenizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let bad = || Error::Config(format!("unknown tokenizer {s:?}; expected word, word-ngram:N or char-qgram:Q"));
        let (name, arg) = match s.split_once(':') {
            Some((name, arg)) => (name, Some(arg.parse::<usize>().map_err(|_| bad())?)),
            None => (s, None),
        };
        let tok = match (name, arg) {
            ("word", None) => Tokenizer::Word,
            ("word-ngram", Some(n)) => Tokenizer::WordNgram(n),
            ("char-qgram", Some(q)) => Tokenizer::CharQgram(q),
            _ => return Err(bad()),
        };
        if matches!(tok, Tokenizer::WordNgram(0) | Tokenizer::CharQgram(0)) {
            return Err(Error::Config(format!("tokenizer {s:?} needs a positive size")));
        }
        Ok(tok)
    }
}

impl TryFrom<String> for Tokenizer {
    type Error = Error;

    fn try_from(s: String) -> Result<Self, Error> {
        s.parse()
    }
}

impl From<Tokenizer> for String {
    fn from(t: Tokenizer) -> String {
        t.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize("  Foo   BAR "), "foo bar");
        assert_eq!(normalize(""), "");
        assert_eq!(normalize("Laurence  FISHBURNE"), "laurence fishburne");
        assert_eq!(normalize("\tÉCOLE\nnormale"), "école normale");
    }

    #[test]
    fn word_tokens() {
        assert_eq!(Tokenizer::Word.tokenize("foo bar foo"), vec!["foo", "bar", "foo"]);
        assert!(Tokenizer::Word.tokenize("").is_empty());
    }

    #[test]
    fn ngram_tokens() {
        assert_eq!(Tokenizer::WordNgram(2).tokenize("a b c"), vec!["a b", "b c"]);
        assert_eq!(Tokenizer::WordNgram(3).tokenize("a b"), vec!["a b"]);
        assert_eq!(Tokenizer::CharQgram(3).tokenize("abcd"), vec!["abc", "bcd"]);
        assert_eq!(Tokenizer::CharQgram(3).tokenize("ab"), vec!["ab"]);
    }

    #[test]
    fn tokenizer_names_round_trip() {
        for t in [Tokenizer::Word, Tokenizer::WordNgram(2), Tokenizer::CharQgram(4)] {
            assert_eq!(t.to_string().parse::<Tokenizer>().unwrap(), t);
        }
        assert!("char-qgram:0".parse::<Tokenizer>().is_err());
        assert!("shingle".parse::<Tokenizer>().is_err());
        assert!("word:2".parse::<Tokenizer>().is_err());
    }
}
