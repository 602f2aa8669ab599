use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::btm::DocTopicDist;
use crate::corpus::TweetRecord;
use crate::error::{Error, Result};
use crate::screening::labels::{ClassLabel, TopicAnnotation, TopicLabel, TweetAnnotation};

/// Tweets whose dominant topic is one of `rogue_topics`, in input order.
/// Degenerate (biterm-less) documents are never isolated.
pub fn isolate_rogue(dists: &[DocTopicDist], rogue_topics: &BTreeSet<usize>) -> Result<Vec<String>> {
    if rogue_topics.is_empty() {
        return Err(Error::InvalidArgument("no rogue topics given".into()));
    }
    if let Some(k) = dists.first().map(|d| d.proportions.len()) {
        if let Some(&bad) = rogue_topics.iter().find(|&&t| t >= k) {
            return Err(Error::InvalidArgument(format!(
                "rogue topic {bad} out of range for k={k}"
            )));
        }
    }
    Ok(dists
        .iter()
        .filter(|d| !d.degenerate && rogue_topics.contains(&d.dominant_topic))
        .map(|d| d.tweet_id.clone())
        .collect())
}

/// Fraction of aligned positions where both label lists agree.
pub fn agreement<T: PartialEq>(a: &[T], b: &[T]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::Alignment {
            left: a.len(),
            right: b.len(),
        });
    }
    let same = a.iter().zip(b).filter(|(x, y)| x == y).count();
    Ok(same as f64 / a.len() as f64)
}

/// Percent agreement pooled over every pair of annotators and every item
/// both of them labelled. `None` when no two annotators share an item.
pub fn pairwise_agreement<L: PartialEq>(labels: &[(String, String, L)]) -> Option<f64> {
    let mut by_annotator: BTreeMap<&str, BTreeMap<&str, &L>> = BTreeMap::new();
    for (item, annotator, label) in labels {
        by_annotator.entry(annotator).or_default().insert(item, label);
    }
    let annotators: Vec<_> = by_annotator.values().collect();
    let (mut same, mut total) = (0usize, 0usize);
    for (i, a) in annotators.iter().enumerate() {
        for b in &annotators[i + 1..] {
            for (item, la) in a.iter() {
                if let Some(lb) = b.get(item) {
                    total += 1;
                    same += usize::from(la == lb);
                }
            }
        }
    }
    (total > 0).then(|| same as f64 / total as f64)
}

/// Majority tweet label per tweet; ties resolve to non-rogue.
pub fn majority_labels(annotations: &[TweetAnnotation]) -> HashMap<&str, ClassLabel> {
    let mut votes: HashMap<&str, (usize, usize)> = HashMap::new();
    for a in annotations {
        let v = votes.entry(a.tweet_id.as_str()).or_default();
        match a.label {
            ClassLabel::Rogue => v.0 += 1,
            ClassLabel::NonRogue => v.1 += 1,
        }
    }
    votes
        .into_iter()
        .map(|(id, (rogue, non))| {
            (
                id,
                if rogue > non {
                    ClassLabel::Rogue
                } else {
                    ClassLabel::NonRogue
                },
            )
        })
        .collect()
}

/// Fraction of isolated tweets whose majority annotation is rogue.
pub fn rogue_precision(isolated: &[String], annotations: &[TweetAnnotation]) -> Result<f64> {
    if isolated.is_empty() {
        return Err(Error::InvalidArgument("no isolated tweets".into()));
    }
    let majority = majority_labels(annotations);
    let missing: Vec<String> = isolated
        .iter()
        .filter(|id| !majority.contains_key(id.as_str()))
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(Error::Coverage {
            kind: "tweets",
            ids: missing,
        });
    }
    let rogue = isolated
        .iter()
        .filter(|id| majority[id.as_str()] == ClassLabel::Rogue)
        .count();
    Ok(rogue as f64 / isolated.len() as f64)
}

/// Consensus over the current topic annotations.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TopicConsensus {
    pub labels: BTreeMap<usize, TopicLabel>,
}

impl TopicConsensus {
    /// Resolves each topic to its plurality label. A tie for the plurality
    /// resolves to `NeedsInvestigation`. Every topic below `k` must carry at
    /// least one annotation.
    pub fn resolve(annotations: &[TopicAnnotation], k: usize) -> Result<Self> {
        if let Some(a) = annotations.iter().find(|a| a.topic_id >= k) {
            return Err(Error::InvalidArgument(format!(
                "annotation for topic {} but k={k}",
                a.topic_id
            )));
        }
        let consensus = Self::partial(annotations);
        let missing: Vec<String> = (0..k)
            .filter(|t| !consensus.labels.contains_key(t))
            .map(|t| t.to_string())
            .collect();
        if !missing.is_empty() {
            return Err(Error::Coverage {
                kind: "topics",
                ids: missing,
            });
        }
        Ok(consensus)
    }

    /// Like [`TopicConsensus::resolve`] but over whichever topics have been
    /// annotated so far.
    pub fn partial(annotations: &[TopicAnnotation]) -> Self {
        let mut votes: BTreeMap<usize, BTreeMap<TopicLabel, usize>> = BTreeMap::new();
        for a in annotations {
            *votes.entry(a.topic_id).or_default().entry(a.label).or_default() += 1;
        }
        let labels = votes
            .into_iter()
            .map(|(topic, counts)| {
                let top = counts.values().copied().max().unwrap_or(0);
                let winners: Vec<TopicLabel> = counts.iter().filter(|(_, &c)| c == top).map(|(l, _)| *l).collect();
                let label = if winners.len() == 1 {
                    winners[0]
                } else {
                    TopicLabel::NeedsInvestigation
                };
                (topic, label)
            })
            .collect();
        Self { labels }
    }

    pub fn with_label(&self, label: TopicLabel) -> BTreeSet<usize> {
        self.labels
            .iter()
            .filter(|(_, &l)| l == label)
            .map(|(&t, _)| t)
            .collect()
    }

    pub fn relevant(&self) -> BTreeSet<usize> {
        self.with_label(TopicLabel::Relevant)
    }

    /// Topics awaiting a second annotation pass.
    pub fn needs_investigation(&self) -> BTreeSet<usize> {
        self.with_label(TopicLabel::NeedsInvestigation)
    }
}

/// Rogue/non-rogue label for every record, in record order.
///
/// A tweet is rogue only when its dominant topic resolves to `Relevant` and
/// its majority tweet annotation is rogue.
pub fn label_dataset(
    records: &[TweetRecord],
    dists: &[DocTopicDist],
    topic_annotations: &[TopicAnnotation],
    tweet_annotations: &[TweetAnnotation],
) -> Result<Vec<(String, ClassLabel)>> {
    let Some(k) = dists.first().map(|d| d.proportions.len()) else {
        return Ok(records
            .iter()
            .map(|r| (r.tweet_id.clone(), ClassLabel::NonRogue))
            .collect());
    };
    let relevant = TopicConsensus::resolve(topic_annotations, k)?.relevant();
    let dist_by_id: HashMap<&str, &DocTopicDist> = dists.iter().map(|d| (d.tweet_id.as_str(), d)).collect();
    let majority = majority_labels(tweet_annotations);

    Ok(records
        .iter()
        .map(|r| {
            let id = r.tweet_id.as_str();
            let isolated = dist_by_id
                .get(id)
                .is_some_and(|d| !d.degenerate && relevant.contains(&d.dominant_topic));
            let rogue = isolated && majority.get(id) == Some(&ClassLabel::Rogue);
            let label = if rogue { ClassLabel::Rogue } else { ClassLabel::NonRogue };
            (r.tweet_id.clone(), label)
        })
        .collect())
}

pub fn write_labels_csv(writer: impl std::io::Write, labels: &[(String, ClassLabel)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["tweet_id", "label"])?;
    for (id, label) in labels {
        w.write_record([id.as_str(), label.as_str()])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn read_labels_csv(reader: impl std::io::Read) -> Result<Vec<(String, ClassLabel)>> {
    let mut r = csv::Reader::from_reader(reader);
    r.records()
        .map(|row| {
            let row = row?;
            let label = row.get(1).unwrap_or_default().parse()?;
            Ok((row.get(0).unwrap_or_default().to_string(), label))
        })
        .collect()
}
