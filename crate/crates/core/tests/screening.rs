use std::collections::BTreeSet;

use chrono::{TimeZone, Utc};
use pharmwatch::btm::DocTopicDist;
use pharmwatch::corpus::{ingest_jsonl, SchemaMode, TweetRecord};
use pharmwatch::screening::*;

fn at(minute: u32) -> chrono::DateTime<Utc> {
    Utc.with_ymd_and_hms(2015, 9, 1, 12, minute, 0).unwrap()
}

fn dist(id: usize, topic: usize) -> DocTopicDist {
    let mut p = vec![0.1; 3];
    p[topic] = 0.8;
    DocTopicDist::new(id.to_string(), p, false)
}

#[test]
fn isolation_precision_from_annotation_log() {
    // 60 tweets land in rogue topics; annotators call 57 of them rogue
    let dists: Vec<DocTopicDist> = (0..100).map(|i| dist(i, if i < 60 { i % 2 } else { 2 })).collect();
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("annotations.jsonl");
    {
        let store = AnnotationStore::open(&log).unwrap();
        for i in 0..60 {
            let label = if i % 20 == 7 {
                ClassLabel::NonRogue
            } else {
                ClassLabel::Rogue
            };
            store
                .append(AnnotationEvent::tweet(&i.to_string(), label, "ann-1", at(0)))
                .unwrap();
        }
    }
    let store = AnnotationStore::open(&log).unwrap();
    let isolated = isolate_rogue(&dists, &BTreeSet::from([0, 1])).unwrap();
    assert_eq!(isolated.len(), 60);
    let precision = rogue_precision(&isolated, &store.tweet_annotations()).unwrap();
    assert_eq!(precision, 0.95);
}

#[test]
fn labels_for_twenty_tweets() {
    let records: Vec<TweetRecord> = {
        let lines: Vec<String> = (0..20)
            .map(|i| {
                format!(
                    r#"{{"id_str":"{i}","created_at":"2015-07-01T00:00:00Z","text":"t","user":{{"id_str":"u","created_at":"2012-01-01T00:00:00Z"}}}}"#
                )
            })
            .collect();
        pharmwatch::corpus::read_jsonl(lines.join("\n").as_bytes(), SchemaMode::Lenient).unwrap()
    };
    // topics 0 and 1 are rogue by plurality, topic 2 is split
    let dists: Vec<DocTopicDist> = (0..20).map(|i| dist(i, i % 3)).collect();
    let store = AnnotationStore::in_memory();
    for (topic, labels) in [
        (0, [TopicLabel::Relevant, TopicLabel::Relevant, TopicLabel::Irrelevant]),
        (
            1,
            [
                TopicLabel::Relevant,
                TopicLabel::NeedsInvestigation,
                TopicLabel::Relevant,
            ],
        ),
        (
            2,
            [
                TopicLabel::Relevant,
                TopicLabel::Irrelevant,
                TopicLabel::NeedsInvestigation,
            ],
        ),
    ] {
        for (a, label) in labels.into_iter().enumerate() {
            store
                .append(AnnotationEvent::topic(topic, label, &format!("a{a}"), at(1)))
                .unwrap();
        }
    }
    for i in (0..20).filter(|i| i % 3 != 2) {
        let label = if i == 4 {
            ClassLabel::NonRogue
        } else {
            ClassLabel::Rogue
        };
        store
            .append(AnnotationEvent::tweet(&i.to_string(), label, "a0", at(2)))
            .unwrap();
    }
    // tweet 2 sits in the split topic, so its rogue annotation does not count
    store
        .append(AnnotationEvent::tweet("2", ClassLabel::Rogue, "a0", at(2)))
        .unwrap();

    let labels = label_dataset(&records, &dists, &store.topic_annotations(), &store.tweet_annotations()).unwrap();
    let rogue: Vec<usize> = labels
        .iter()
        .filter(|(_, l)| *l == ClassLabel::Rogue)
        .map(|(id, _)| id.parse().unwrap())
        .collect();
    assert_eq!(rogue, [0, 1, 3, 6, 7, 9, 10, 12, 13, 15, 16, 18, 19]);
    let consensus = TopicConsensus::resolve(&store.topic_annotations(), 3).unwrap();
    assert_eq!(consensus.needs_investigation(), BTreeSet::from([2]));

    let mut buf = Vec::new();
    write_labels_csv(&mut buf, &labels).unwrap();
    assert_eq!(read_labels_csv(buf.as_slice()).unwrap(), labels);
}

#[test]
fn ingest_fixture_and_annotate() {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/three_tweets.jsonl");
    let records = ingest_jsonl(path, SchemaMode::Strict).unwrap();
    let store = AnnotationStore::in_memory();
    for r in &records {
        store
            .append(AnnotationEvent::tweet(&r.tweet_id, ClassLabel::NonRogue, "a", at(0)))
            .unwrap();
    }
    store
        .append(AnnotationEvent::tweet("601", ClassLabel::Rogue, "a", at(5)))
        .unwrap();
    let current = store.tweet_annotations();
    assert_eq!(current.len(), 3);
    assert_eq!(store.history().len(), 4);
    let majority = majority_labels(&current);
    assert_eq!(majority["601"], ClassLabel::Rogue);
}
