use std::collections::{BTreeMap, BTreeSet};

use crate::corpus::record::TweetRecord;
use crate::error::{Error, Result};

/// The opioid names tracked during collection.
pub const DEFAULT_DRUGS: [&str; 7] = [
    "percocet",
    "codeine",
    "oxycodone",
    "oxycontin",
    "hydrocodone",
    "vicodin",
    "fentanyl",
];

/// A validated, nonempty set of lowercase drug names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordSet {
    drug_names: BTreeSet<String>,
}

impl Default for KeywordSet {
    fn default() -> Self {
        Self {
            drug_names: DEFAULT_DRUGS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl KeywordSet {
    pub fn new<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut drug_names = BTreeSet::new();
        for name in names {
            let name = name.into();
            if name.is_empty() || name.trim() != name || name.to_lowercase() != name {
                return Err(Error::InvalidArgument(format!(
                    "keyword `{name}` must be lowercase without surrounding whitespace"
                )));
            }
            drug_names.insert(name);
        }
        if drug_names.is_empty() {
            return Err(Error::InvalidArgument("keyword set is empty".into()));
        }
        Ok(Self { drug_names })
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.drug_names.iter().map(String::as_str)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.drug_names.contains(word)
    }

    pub fn len(&self) -> usize {
        self.drug_names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.drug_names.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MatchMode {
    /// The keyword must equal a whole alphanumeric token of the text.
    #[default]
    Token,
    /// The keyword may appear anywhere in the lowercased text.
    Substring,
}

/// Keywords of `keywords` found in `text` under `mode`.
pub fn match_keywords(text: &str, keywords: &KeywordSet, mode: MatchMode) -> BTreeSet<String> {
    let lower = text.to_lowercase();
    match mode {
        MatchMode::Token => lower
            .split(|c: char| !c.is_alphanumeric())
            .filter(|tok| keywords.contains(tok))
            .map(str::to_string)
            .collect(),
        MatchMode::Substring => keywords
            .iter()
            .filter(|k| lower.contains(k))
            .map(str::to_string)
            .collect(),
    }
}

/// Keeps the records mentioning at least one keyword and records which ones.
pub fn keyword_filter(records: &[TweetRecord], keywords: &KeywordSet, mode: MatchMode) -> Vec<TweetRecord> {
    records
        .iter()
        .filter_map(|r| {
            let matched = match_keywords(&r.text, keywords, mode);
            (!matched.is_empty()).then(|| TweetRecord {
                matched_keywords: matched,
                ..r.clone()
            })
        })
        .collect()
}

/// Collection volume per drug after filtering.
///
/// A kept tweet is attributed to its drug when it matched exactly one
/// keyword; tweets naming several drugs are counted under `other`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct VolumeReport {
    pub per_drug: BTreeMap<String, usize>,
    pub other: usize,
    pub dropped: usize,
}

impl VolumeReport {
    pub fn tally(total_input: usize, kept: &[TweetRecord], keywords: &KeywordSet) -> Self {
        let mut per_drug: BTreeMap<String, usize> = keywords.iter().map(|k| (k.to_string(), 0)).collect();
        let mut other = 0;
        for r in kept {
            match r.single_keyword() {
                Some(k) => *per_drug.entry(k.to_string()).or_default() += 1,
                None => other += 1,
            }
        }
        Self {
            per_drug,
            other,
            dropped: total_input - kept.len(),
        }
    }

    pub fn kept(&self) -> usize {
        self.per_drug.values().sum::<usize>() + self.other
    }
}
