use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::Error;

/// An annotator's judgement of a topic's top words.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TopicLabel {
    Relevant,
    Irrelevant,
    NeedsInvestigation,
}

impl TopicLabel {
    pub const ALLOWED: [&'static str; 3] = ["Relevant", "Irrelevant", "NeedsInvestigation"];

    pub fn as_str(self) -> &'static str {
        match self {
            TopicLabel::Relevant => "Relevant",
            TopicLabel::Irrelevant => "Irrelevant",
            TopicLabel::NeedsInvestigation => "NeedsInvestigation",
        }
    }
}

/// Whether a tweet markets an illicit pharmacy. Also the class label of the
/// feature vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ClassLabel {
    Rogue,
    NonRogue,
}

impl ClassLabel {
    pub const ALLOWED: [&'static str; 2] = ["Rogue", "NonRogue"];

    pub fn as_str(self) -> &'static str {
        match self {
            ClassLabel::Rogue => "Rogue",
            ClassLabel::NonRogue => "NonRogue",
        }
    }

    pub fn is_rogue(self) -> bool {
        self == ClassLabel::Rogue
    }

    /// 1.0 for rogue, 0.0 otherwise.
    pub fn as_target(self) -> f64 {
        if self.is_rogue() {
            1.0
        } else {
            0.0
        }
    }
}

impl FromStr for TopicLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "Relevant" => Ok(TopicLabel::Relevant),
            "Irrelevant" => Ok(TopicLabel::Irrelevant),
            "NeedsInvestigation" => Ok(TopicLabel::NeedsInvestigation),
            _ => Err(Error::InvalidLabel {
                given: s.to_string(),
                allowed: Self::ALLOWED.to_vec(),
            }),
        }
    }
}

impl FromStr for ClassLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "Rogue" => Ok(ClassLabel::Rogue),
            "NonRogue" => Ok(ClassLabel::NonRogue),
            _ => Err(Error::InvalidLabel {
                given: s.to_string(),
                allowed: Self::ALLOWED.to_vec(),
            }),
        }
    }
}

impl fmt::Display for TopicLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopicAnnotation {
    pub topic_id: usize,
    pub label: TopicLabel,
    pub annotator_id: String,
    pub timestamp: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TweetAnnotation {
    pub tweet_id: String,
    pub label: ClassLabel,
    pub annotator_id: String,
    pub timestamp: DateTime<Utc>,
}
