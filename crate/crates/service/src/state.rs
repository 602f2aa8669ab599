use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::path::PathBuf;

use chrono::{DateTime, Utc};
use pharmwatch::btm::{load_model, read_doc_topics, BtmModel, DocTopicDist, TOP_WORDS};
use pharmwatch::corpus::{ingest_jsonl, SchemaMode, TweetRecord};
use pharmwatch::screening::{
    majority_labels, pairwise_agreement, AnnotationEvent, AnnotationStore, ClassLabel, ItemKind, TopicConsensus,
};
use pharmwatch::{Error, Result};
use serde::Serialize;

/// Sample tweets shown on each topic card.
pub const DEFAULT_SAMPLES: usize = 20;

/// Files the service is started from.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub model: PathBuf,
    pub corpus: PathBuf,
    pub doc_topics: PathBuf,
    pub store: PathBuf,
}

/// Everything the handlers read. The model and corpus are immutable; the
/// store serializes writes internally.
#[derive(Debug)]
pub struct AppState {
    model: BtmModel,
    records: Vec<TweetRecord>,
    by_id: HashMap<String, usize>,
    dists: HashMap<String, DocTopicDist>,
    /// Tweet ids per dominant topic, highest dominant proportion first.
    topic_tweets: Vec<Vec<String>>,
    store: AnnotationStore,
    samples: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct WordWeight {
    pub word: String,
    pub probability: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnnotationView {
    pub annotator_id: String,
    pub label: String,
    pub timestamp: DateTime<Utc>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TweetView {
    pub tweet_id: String,
    pub text: String,
    pub created_at: DateTime<Utc>,
    pub dominant_topic: Option<usize>,
    pub dominant_proportion: Option<f64>,
    pub has_url: bool,
    pub url_count: u64,
    pub hashtag_count: u64,
    pub retweet_count: u64,
    pub favorite_count: u64,
    pub user_id: String,
    pub user_verified: bool,
    pub user_friends_count: u64,
    pub user_followers_count: u64,
    pub user_statuses_count: u64,
    pub annotations: Vec<AnnotationView>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TopicCard {
    pub topic_id: usize,
    pub theta: f64,
    pub words: Vec<WordWeight>,
    pub tweet_count: usize,
    pub sample_tweets: Vec<TweetView>,
    pub annotations: Vec<AnnotationView>,
    /// Plurality label over the current annotations, if any.
    pub consensus: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TweetPage {
    pub total: usize,
    pub offset: usize,
    pub limit: usize,
    pub tweets: Vec<TweetView>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CandidatePage {
    pub rogue_topics: Vec<usize>,
    #[serde(flatten)]
    pub page: TweetPage,
}

#[derive(Debug, Clone, Serialize)]
pub struct PassProgress {
    pub total: usize,
    pub annotated: usize,
    pub remaining: usize,
    /// Items labelled per annotator.
    pub annotators: BTreeMap<String, usize>,
    /// Pooled pairwise percent agreement; null until two annotators share
    /// an item.
    pub agreement: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Progress {
    pub topics: PassProgress,
    pub relevant_topics: Vec<usize>,
    pub tweets: PassProgress,
    pub rogue: usize,
    /// Share of annotated candidates whose majority label is rogue.
    pub precision: Option<f64>,
}

fn views(events: &[AnnotationEvent], kind: ItemKind, item: &str) -> Vec<AnnotationView> {
    events
        .iter()
        .filter(|e| e.kind == kind && e.item_id == item)
        .map(|e| AnnotationView {
            annotator_id: e.annotator_id.clone(),
            label: e.label.clone(),
            timestamp: e.timestamp,
        })
        .collect()
}

fn pass_progress(events: &[&AnnotationEvent], total: usize, in_scope: impl Fn(&str) -> bool) -> PassProgress {
    let scoped: Vec<&AnnotationEvent> = events.iter().copied().filter(|e| in_scope(&e.item_id)).collect();
    let mut annotators = BTreeMap::new();
    let mut items = std::collections::BTreeSet::new();
    for e in &scoped {
        *annotators.entry(e.annotator_id.clone()).or_insert(0) += 1;
        items.insert(e.item_id.as_str());
    }
    let triples: Vec<(String, String, String)> = scoped
        .iter()
        .map(|e| (e.item_id.clone(), e.annotator_id.clone(), e.label.clone()))
        .collect();
    PassProgress {
        total,
        annotated: items.len(),
        remaining: total.saturating_sub(items.len()),
        annotators,
        agreement: pairwise_agreement(&triples),
    }
}

impl AppState {
    pub fn new(
        model: BtmModel,
        records: Vec<TweetRecord>,
        dists: Vec<DocTopicDist>,
        store: AnnotationStore,
    ) -> Result<Self> {
        if let Some(d) = dists.iter().find(|d| d.proportions.len() != model.k) {
            return Err(Error::InvalidArgument(format!(
                "tweet {} has {} topic proportions but the model has k={}",
                d.tweet_id,
                d.proportions.len(),
                model.k
            )));
        }
        let by_id: HashMap<String, usize> = records
            .iter()
            .enumerate()
            .map(|(i, r)| (r.tweet_id.clone(), i))
            .collect();
        let mut topic_tweets = vec![Vec::new(); model.k];
        for d in dists
            .iter()
            .filter(|d| !d.degenerate && by_id.contains_key(&d.tweet_id))
        {
            topic_tweets[d.dominant_topic].push(d);
        }
        let topic_tweets = topic_tweets
            .into_iter()
            .map(|mut ds| {
                ds.sort_by(|a, b| {
                    b.dominant_proportion()
                        .total_cmp(&a.dominant_proportion())
                        .then_with(|| a.tweet_id.cmp(&b.tweet_id))
                });
                ds.into_iter().map(|d| d.tweet_id.clone()).collect()
            })
            .collect();
        Ok(Self {
            dists: dists.into_iter().map(|d| (d.tweet_id.clone(), d)).collect(),
            model,
            records,
            by_id,
            topic_tweets,
            store,
            samples: DEFAULT_SAMPLES,
        })
    }

    pub fn load(artifacts: &Artifacts) -> Result<Self> {
        let model = load_model(&artifacts.model)?;
        let records = ingest_jsonl(&artifacts.corpus, SchemaMode::Strict)?;
        let file = File::open(&artifacts.doc_topics).map_err(|e| Error::Io {
            path: artifacts.doc_topics.clone(),
            source: e,
        })?;
        let dists = read_doc_topics(file)?;
        let store = AnnotationStore::open(&artifacts.store)?;
        Self::new(model, records, dists, store)
    }

    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }

    pub fn store(&self) -> &AnnotationStore {
        &self.store
    }

    pub fn topic_count(&self) -> usize {
        self.model.k
    }

    pub fn has_tweet(&self, tweet_id: &str) -> bool {
        self.by_id.contains_key(tweet_id)
    }

    fn tweet_view(&self, tweet_id: &str, events: &[AnnotationEvent]) -> Option<TweetView> {
        let r = &self.records[*self.by_id.get(tweet_id)?];
        let dist = self.dists.get(tweet_id).filter(|d| !d.degenerate);
        Some(TweetView {
            tweet_id: r.tweet_id.clone(),
            text: r.text.clone(),
            created_at: r.created_at,
            dominant_topic: dist.map(|d| d.dominant_topic),
            dominant_proportion: dist.map(|d| d.dominant_proportion()),
            has_url: r.url_entity_count > 0,
            url_count: r.url_entity_count,
            hashtag_count: r.hashtag_entity_count,
            retweet_count: r.retweet_count,
            favorite_count: r.favorite_count,
            user_id: r.user_id.clone(),
            user_verified: r.user_verified,
            user_friends_count: r.user_friends_count,
            user_followers_count: r.user_followers_count,
            user_statuses_count: r.user_statuses_count,
            annotations: views(events, ItemKind::Tweet, tweet_id),
        })
    }

    fn page(&self, ids: &[String], offset: usize, limit: usize, events: &[AnnotationEvent]) -> TweetPage {
        TweetPage {
            total: ids.len(),
            offset,
            limit,
            tweets: ids
                .iter()
                .skip(offset)
                .take(limit)
                .filter_map(|id| self.tweet_view(id, events))
                .collect(),
        }
    }

    pub fn topics(&self) -> Vec<TopicCard> {
        let events = self.store.current();
        let consensus = TopicConsensus::partial(&self.store.topic_annotations());
        (0..self.model.k)
            .map(|z| {
                let ids = &self.topic_tweets[z];
                TopicCard {
                    topic_id: z,
                    theta: self.model.theta[z],
                    words: self
                        .model
                        .top_words(z, TOP_WORDS)
                        .into_iter()
                        .map(|(word, probability)| WordWeight { word, probability })
                        .collect(),
                    tweet_count: ids.len(),
                    sample_tweets: self.page(ids, 0, self.samples, &events).tweets,
                    annotations: views(&events, ItemKind::Topic, &z.to_string()),
                    consensus: consensus.labels.get(&z).map(|l| l.to_string()),
                }
            })
            .collect()
    }

    /// `None` for an unknown topic.
    pub fn topic_tweets(&self, topic: usize, offset: usize, limit: usize) -> Option<TweetPage> {
        let ids = self.topic_tweets.get(topic)?;
        Some(self.page(ids, offset, limit, &self.store.current()))
    }

    fn candidate_ids(&self) -> (Vec<usize>, Vec<String>) {
        let relevant = TopicConsensus::partial(&self.store.topic_annotations()).relevant();
        let ids = relevant
            .iter()
            .flat_map(|&z| self.topic_tweets[z].iter().cloned())
            .collect();
        (relevant.into_iter().collect(), ids)
    }

    /// Tweets whose dominant topic currently resolves to `Relevant`.
    pub fn rogue_candidates(&self, offset: usize, limit: usize) -> CandidatePage {
        let (rogue_topics, ids) = self.candidate_ids();
        CandidatePage {
            rogue_topics,
            page: self.page(&ids, offset, limit, &self.store.current()),
        }
    }

    pub fn progress(&self) -> Progress {
        let events = self.store.current();
        let topic_events: Vec<&AnnotationEvent> = events.iter().filter(|e| e.kind == ItemKind::Topic).collect();
        let tweet_events: Vec<&AnnotationEvent> = events.iter().filter(|e| e.kind == ItemKind::Tweet).collect();
        let (relevant_topics, candidates) = self.candidate_ids();
        let candidate_set: std::collections::HashSet<&str> = candidates.iter().map(String::as_str).collect();

        let tweet_annotations: Vec<_> = self
            .store
            .tweet_annotations()
            .into_iter()
            .filter(|a| candidate_set.contains(a.tweet_id.as_str()))
            .collect();
        let majority = majority_labels(&tweet_annotations);
        let rogue = majority.values().filter(|&&l| l == ClassLabel::Rogue).count();

        Progress {
            topics: pass_progress(&topic_events, self.model.k, |_| true),
            relevant_topics,
            tweets: pass_progress(&tweet_events, candidates.len(), |id| candidate_set.contains(id)),
            rogue,
            precision: (!majority.is_empty()).then(|| rogue as f64 / majority.len() as f64),
        }
    }
}
