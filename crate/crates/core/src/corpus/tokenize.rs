use std::collections::{HashMap, HashSet};
use std::path::Path;

use crate::corpus::record::TweetRecord;
use crate::error::{Error, Result};

const BUNDLED_STOPWORDS: &str = include_str!("../../data/stopwords_en.txt");

/// A stopword list. Entries are normalised the same way tokens are.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stopwords(HashSet<String>);

impl Stopwords {
    /// The bundled English list.
    pub fn english() -> Self {
        Self::parse(BUNDLED_STOPWORDS)
    }

    pub fn none() -> Self {
        Self::default()
    }

    /// One word per line; blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Self {
        Self(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(normalise_word)
                .filter(|w| !w.is_empty())
                .collect(),
        )
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&text))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn normalise_word(raw: &str) -> String {
    raw.to_lowercase().chars().filter(|c| !is_apostrophe(*c)).collect()
}

fn is_apostrophe(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}')
}

/// Short-text tokenizer.
///
/// Lowercases, drops `http(s)://` links, `@mentions` and a leading `rt`
/// marker, strips `#` from hashtags, splits on anything that is not
/// alphanumeric (apostrophes are deleted first) and removes stopwords.
#[derive(Debug, Clone)]
pub struct Tokenizer {
    stopwords: Stopwords,
}

impl Default for Tokenizer {
    fn default() -> Self {
        Self::new(Stopwords::english())
    }
}

impl Tokenizer {
    pub fn new(stopwords: Stopwords) -> Self {
        Self { stopwords }
    }

    pub fn terms(&self, text: &str) -> Vec<String> {
        let mut out = Vec::new();
        for (pos, raw) in text.split_whitespace().enumerate() {
            let lower = raw.to_lowercase();
            if lower.starts_with("http://") || lower.starts_with("https://") || lower.starts_with('@') {
                continue;
            }
            if pos == 0 && lower.trim_end_matches(':') == "rt" {
                continue;
            }
            let cleaned: String = lower.chars().filter(|c| !is_apostrophe(*c)).collect();
            out.extend(
                cleaned
                    .split(|c: char| !c.is_alphanumeric())
                    .filter(|piece| !piece.is_empty() && !self.stopwords.contains(piece))
                    .map(str::to_string),
            );
        }
        out
    }
}

/// Term-to-index map. Unknown terms are appended until the vocabulary is
/// frozen; afterwards they are dropped.
#[derive(Debug, Clone, Default)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
    frozen: bool,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    /// A frozen vocabulary over `terms`, in the given order.
    pub fn from_terms<I, S>(terms: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut vocab = Self::new();
        for t in terms {
            vocab.intern(&t.into());
        }
        vocab.freeze();
        vocab
    }

    pub fn intern(&mut self, term: &str) -> Option<usize> {
        if let Some(&i) = self.index.get(term) {
            return Some(i);
        }
        if self.frozen {
            return None;
        }
        let i = self.terms.len();
        self.terms.push(term.to_string());
        self.index.insert(term.to_string(), i);
        Some(i)
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn get(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, index: usize) -> &str {
        &self.terms[index]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// A tweet's tokens as vocabulary indices, in text order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedDoc {
    pub tweet_id: String,
    pub tokens: Vec<usize>,
}

pub fn tokenize(record: &TweetRecord, tokenizer: &Tokenizer, vocab: &mut Vocabulary) -> TokenizedDoc {
    TokenizedDoc {
        tweet_id: record.tweet_id.clone(),
        tokens: tokenizer
            .terms(&record.text)
            .iter()
            .filter_map(|t| vocab.intern(t))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn terms(text: &str) -> Vec<String> {
        Tokenizer::default().terms(text)
    }

    #[test]
    fn strips_retweet_marker_mentions_and_links() {
        assert_eq!(
            terms("RT @bob Buy CODEINE online http://x.co"),
            ["buy", "codeine", "online"]
        );
    }

    #[test]
    fn empty_text() {
        assert!(terms("").is_empty());
    }

    #[test]
    fn hashtags_lose_their_symbol() {
        assert_eq!(terms("#codeine #codeine"), ["codeine", "codeine"]);
    }

    #[test]
    fn rt_only_dropped_when_leading() {
        assert_eq!(terms("rt: art rt"), ["art", "rt"]);
    }

    #[test]
    fn apostrophes_and_punctuation() {
        assert_eq!(
            terms("Don't mix Percocet, lean & codeine..."),
            ["mix", "percocet", "lean", "codeine"]
        );
        assert_eq!(terms("HTTPS://Y.co/abc pills!!"), ["pills"]);
    }

    #[test]
    fn bundled_stopwords_load() {
        let sw = Stopwords::english();
        assert!(sw.len() > 140);
        assert!(sw.contains("dont"));
        assert!(sw.contains("the"));
        assert!(!sw.contains("codeine"));
    }

    #[test]
    fn frozen_vocabulary_drops_unknown_terms() {
        let mut v = Vocabulary::from_terms(["buy", "codeine"]);
        let rec = crate::corpus::testing::record_with_text("1", "buy cheap codeine");
        let doc = tokenize(&rec, &Tokenizer::default(), &mut v);
        assert_eq!(doc.tokens, vec![0, 1]);
        assert_eq!(v.len(), 2);
    }
}
