use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::screening::labels::{ClassLabel, TopicAnnotation, TopicLabel, TweetAnnotation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ItemKind {
    Topic,
    Tweet,
}

/// One line of the append-only annotation log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationEvent {
    pub kind: ItemKind,
    pub item_id: String,
    pub label: String,
    pub annotator_id: String,
    pub timestamp: DateTime<Utc>,
    /// Client token identifying a submission; a resubmission with the same
    /// nonce, item, annotator and label is not recorded twice.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonce: Option<String>,
}

impl AnnotationEvent {
    pub fn topic(topic_id: usize, label: TopicLabel, annotator_id: &str, timestamp: DateTime<Utc>) -> Self {
        Self {
            kind: ItemKind::Topic,
            item_id: topic_id.to_string(),
            label: label.to_string(),
            annotator_id: annotator_id.to_string(),
            timestamp,
            nonce: None,
        }
    }

    pub fn tweet(tweet_id: &str, label: ClassLabel, annotator_id: &str, timestamp: DateTime<Utc>) -> Self {
        Self {
            kind: ItemKind::Tweet,
            item_id: tweet_id.to_string(),
            label: label.to_string(),
            annotator_id: annotator_id.to_string(),
            timestamp,
            nonce: None,
        }
    }

    pub fn with_nonce(mut self, nonce: impl Into<String>) -> Self {
        self.nonce = Some(nonce.into());
        self
    }

    fn validate(&self) -> Result<()> {
        if self.annotator_id.trim().is_empty() {
            return Err(Error::InvalidArgument("annotator_id must be nonempty".into()));
        }
        match self.kind {
            ItemKind::Topic => {
                self.item_id
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidArgument(format!("topic id `{}` is not an index", self.item_id)))?;
                self.label.parse::<TopicLabel>()?;
            }
            ItemKind::Tweet => {
                if self.item_id.is_empty() {
                    return Err(Error::InvalidArgument("tweet id must be nonempty".into()));
                }
                self.label.parse::<ClassLabel>()?;
            }
        }
        Ok(())
    }

    fn same_submission(&self, other: &AnnotationEvent) -> bool {
        self.nonce.is_some()
            && self.nonce == other.nonce
            && self.kind == other.kind
            && self.item_id == other.item_id
            && self.annotator_id == other.annotator_id
            && self.label == other.label
    }
}

type Key = (ItemKind, String, String);

#[derive(Debug, Default)]
struct Inner {
    log: Option<File>,
    history: Vec<AnnotationEvent>,
    /// Index into `history` of the latest event per (kind, item, annotator).
    current: BTreeMap<Key, usize>,
}

impl Inner {
    fn apply(&mut self, event: AnnotationEvent) {
        let key = (event.kind, event.item_id.clone(), event.annotator_id.clone());
        self.history.push(event);
        self.current.insert(key, self.history.len() - 1);
    }
}

/// Append-only annotation store.
///
/// Every accepted event is written and synced to the log before it becomes
/// visible. Reopening the log replays it into the same state. The latest
/// event per (item, annotator) is that annotator's current label.
#[derive(Debug)]
pub struct AnnotationStore {
    path: Option<PathBuf>,
    inner: Mutex<Inner>,
}

/// Outcome of [`AnnotationStore::append`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Appended {
    New(AnnotationEvent),
    /// An identical submission (same nonce) was already recorded.
    Duplicate(AnnotationEvent),
}

impl Appended {
    pub fn event(&self) -> &AnnotationEvent {
        match self {
            Appended::New(e) | Appended::Duplicate(e) => e,
        }
    }
}

impl AnnotationStore {
    /// A store that keeps events in memory only.
    pub fn in_memory() -> Self {
        Self {
            path: None,
            inner: Mutex::new(Inner::default()),
        }
    }

    /// Opens (creating if needed) the log at `path` and replays it.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut inner = Inner::default();
        if path.exists() {
            for event in read_log(path)? {
                inner.apply(event);
            }
        }
        let log = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        inner.log = Some(log);
        Ok(Self {
            path: Some(path.to_path_buf()),
            inner: Mutex::new(inner),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn append(&self, event: AnnotationEvent) -> Result<Appended> {
        event.validate()?;
        let mut inner = self.inner.lock().expect("annotation store poisoned");
        if let Some(prev) = inner.history.iter().rev().find(|e| e.same_submission(&event)) {
            return Ok(Appended::Duplicate(prev.clone()));
        }
        if let Some(log) = inner.log.as_mut() {
            let path = self.path.as_deref().unwrap_or(Path::new("<log>"));
            let mut line = serde_json::to_vec(&event)?;
            line.push(b'\n');
            log.write_all(&line).map_err(|e| Error::io(path, e))?;
            log.sync_data().map_err(|e| Error::io(path, e))?;
        }
        inner.apply(event.clone());
        Ok(Appended::New(event))
    }

    /// Every event ever appended, in order.
    pub fn history(&self) -> Vec<AnnotationEvent> {
        self.inner.lock().expect("annotation store poisoned").history.clone()
    }

    /// The current event per (item, annotator), ordered by kind, item and
    /// annotator.
    pub fn current(&self) -> Vec<AnnotationEvent> {
        let inner = self.inner.lock().expect("annotation store poisoned");
        inner.current.values().map(|&i| inner.history[i].clone()).collect()
    }

    pub fn topic_annotations(&self) -> Vec<TopicAnnotation> {
        self.current()
            .into_iter()
            .filter(|e| e.kind == ItemKind::Topic)
            .map(|e| TopicAnnotation {
                topic_id: e.item_id.parse().expect("validated on append"),
                label: e.label.parse().expect("validated on append"),
                annotator_id: e.annotator_id,
                timestamp: e.timestamp,
            })
            .collect()
    }

    pub fn tweet_annotations(&self) -> Vec<TweetAnnotation> {
        self.current()
            .into_iter()
            .filter(|e| e.kind == ItemKind::Tweet)
            .map(|e| TweetAnnotation {
                tweet_id: e.item_id,
                label: e.label.parse().expect("validated on append"),
                annotator_id: e.annotator_id,
                timestamp: e.timestamp,
            })
            .collect()
    }
}

/// Reads and validates every event of a log file.
pub fn read_log(path: &Path) -> Result<Vec<AnnotationEvent>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut events = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |reason: String| Error::Format {
            what: "annotation log",
            line: i + 1,
            reason,
        };
        let event: AnnotationEvent = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        event.validate().map_err(|e| bad(e.to_string()))?;
        events.push(event);
    }
    Ok(events)
}

#[cfg(test)]
mod tests {
    use chrono::TimeZone;

    use super::*;

    fn ts(sec: u32) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2016, 1, 1, 0, 0, sec).unwrap()
    }

    #[test]
    fn latest_label_per_annotator_wins() {
        let store = AnnotationStore::in_memory();
        store
            .append(AnnotationEvent::topic(0, TopicLabel::Irrelevant, "a", ts(0)))
            .unwrap();
        store
            .append(AnnotationEvent::topic(0, TopicLabel::Relevant, "a", ts(1)))
            .unwrap();
        store
            .append(AnnotationEvent::topic(0, TopicLabel::Irrelevant, "b", ts(2)))
            .unwrap();
        let current = store.topic_annotations();
        assert_eq!(current.len(), 2);
        assert_eq!(current[0].label, TopicLabel::Relevant);
        assert_eq!(store.history().len(), 3);
    }

    #[test]
    fn invalid_events_rejected() {
        let store = AnnotationStore::in_memory();
        let mut e = AnnotationEvent::topic(1, TopicLabel::Relevant, "a", ts(0));
        e.label = "Maybe".into();
        assert!(matches!(store.append(e), Err(Error::InvalidLabel { .. })));
        let e = AnnotationEvent::tweet("t", ClassLabel::Rogue, " ", ts(0));
        assert!(store.append(e).is_err());
        assert!(store.history().is_empty());
    }

    #[test]
    fn nonce_deduplicates_retries() {
        let store = AnnotationStore::in_memory();
        let e = AnnotationEvent::tweet("t1", ClassLabel::Rogue, "a", ts(0)).with_nonce("n1");
        assert!(matches!(store.append(e.clone()).unwrap(), Appended::New(_)));
        let retry = AnnotationEvent {
            timestamp: ts(5),
            ..e.clone()
        };
        assert!(matches!(store.append(retry).unwrap(), Appended::Duplicate(_)));
        // a different label under the same nonce is a new decision
        let changed = AnnotationEvent::tweet("t1", ClassLabel::NonRogue, "a", ts(6)).with_nonce("n1");
        assert!(matches!(store.append(changed).unwrap(), Appended::New(_)));
        assert_eq!(store.history().len(), 2);
    }

    #[test]
    fn reopening_replays_log() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("annotations.jsonl");
        {
            let store = AnnotationStore::open(&path).unwrap();
            store
                .append(AnnotationEvent::topic(2, TopicLabel::Relevant, "a", ts(0)))
                .unwrap();
            store
                .append(AnnotationEvent::tweet("x", ClassLabel::Rogue, "a", ts(1)))
                .unwrap();
            store
                .append(AnnotationEvent::tweet("x", ClassLabel::NonRogue, "a", ts(2)))
                .unwrap();
        }
        let store = AnnotationStore::open(&path).unwrap();
        assert_eq!(store.history().len(), 3);
        assert_eq!(store.tweet_annotations()[0].label, ClassLabel::NonRogue);
        store
            .append(AnnotationEvent::topic(3, TopicLabel::Irrelevant, "a", ts(3)))
            .unwrap();
        assert_eq!(read_log(&path).unwrap().len(), 4);
    }

    #[test]
    fn corrupt_log_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        std::fs::write(
            &path,
            "{\"kind\":\"topic\",\"item_id\":\"0\",\"label\":\"Relevant\",\"annotator_id\":\"a\",\"timestamp\":\"2016-01-01T00:00:00Z\"}\n{\"kind\":\"topic\",\"item_id\":\"0\",\"label\":\"Nope\",\"annotator_id\":\"a\",\"timestamp\":\"2016-01-01T00:00:00Z\"}\n",
        )
        .unwrap();
        match AnnotationStore::open(&path) {
            Err(Error::Format { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
