//! One function per subcommand. Each reads its upstream artifacts from the
//! output directory, writes its own, records a manifest and returns a short
//! human summary.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use pharmwatch::btm::{
    choose_k, extract_biterms, fit, infer_corpus, load_model, read_doc_topics, save_model, topic_summary,
    write_doc_topics, DocTopicDist, TOP_WORDS,
};
use pharmwatch::classifier::{
    eval_table_text, evaluate, save_logreg, train, write_eval_runs, write_eval_table, EvalReport, TrainConfig,
};
use pharmwatch::corpus::{
    ingest_jsonl, ingest_many, keyword_filter, prepare, save_jsonl, SchemaMode, TweetRecord, VolumeReport,
};
use pharmwatch::features::{
    drug_stats, extract_features, read_features_csv, stats_report, write_features_csv, write_stats_csv, FeatureVector,
};
use pharmwatch::screening::{
    isolate_rogue, majority_labels, read_labels_csv, write_labels_csv, AnnotationStore, ClassLabel, TopicConsensus,
    TopicLabel,
};
use pharmwatch::Error;
use pharmwatch_service::{AppState, Artifacts};

use crate::config::Config;
use crate::error::CliError;
use crate::manifest::write_manifest;

/// File names inside the output directory.
#[derive(Debug, Clone)]
pub struct Layout {
    root: PathBuf,
}

impl Layout {
    pub fn new(config: &Config) -> Self {
        Self {
            root: config.output.dir.clone(),
        }
    }

    fn file(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn corpus(&self) -> PathBuf {
        self.file("corpus.jsonl")
    }
    pub fn filtered(&self) -> PathBuf {
        self.file("filtered.jsonl")
    }
    pub fn volume(&self) -> PathBuf {
        self.file("volume.csv")
    }
    pub fn model(&self) -> PathBuf {
        self.file("btm_model.txt")
    }
    pub fn doc_topics(&self) -> PathBuf {
        self.file("doc_topics.csv")
    }
    pub fn topic_words(&self) -> PathBuf {
        self.file("topic_words.csv")
    }
    pub fn topic_summary(&self) -> PathBuf {
        self.file("topics.txt")
    }
    pub fn rogue_topics(&self) -> PathBuf {
        self.file("rogue_topics.csv")
    }
    pub fn candidates(&self) -> PathBuf {
        self.file("candidates.csv")
    }
    pub fn labels(&self) -> PathBuf {
        self.file("labels.csv")
    }
    pub fn features(&self) -> PathBuf {
        self.file("features.csv")
    }
    pub fn stats(&self) -> PathBuf {
        self.file("stats.csv")
    }
    pub fn stats_text(&self) -> PathBuf {
        self.file("stats.txt")
    }
    pub fn classifier(&self, drug: &str) -> PathBuf {
        self.root.join("models").join(format!("{drug}.logreg"))
    }
    pub fn eval(&self) -> PathBuf {
        self.file("eval.csv")
    }
    pub fn eval_runs(&self) -> PathBuf {
        self.file("eval_runs.csv")
    }
    pub fn eval_text(&self) -> PathBuf {
        self.file("eval.txt")
    }
}

fn require(path: &Path, producer: &str) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Gate(format!(
            "missing {}; run `pharmwatch {producer}` first",
            path.display()
        )))
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let file = File::create(path).map_err(|e| CliError::DataMessage(format!("{}: {e}", path.display())))?;
    Ok(BufWriter::new(file))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}

fn open(path: &Path) -> Result<File, CliError> {
    File::open(path).map_err(|e| CliError::DataMessage(format!("{}: {e}", path.display())))
}

fn load_doc_topics(path: &Path) -> Result<Vec<DocTopicDist>, CliError> {
    Ok(read_doc_topics(open(path)?)?)
}

pub fn ingest(config: &Config) -> Result<String, CliError> {
    config.validate_inputs()?;
    let layout = Layout::new(config);
    let records = ingest_many(&config.input.paths, config.schema_mode())?;
    std::fs::create_dir_all(&config.output.dir)?;
    save_jsonl(layout.corpus(), &records)?;
    write_manifest(config, "ingest", &config.input.paths, &[layout.corpus()], &[])?;
    Ok(format!(
        "ingested {} tweets from {} file(s) into {}\n",
        records.len(),
        config.input.paths.len(),
        layout.corpus().display()
    ))
}

fn write_volume(path: &Path, report: &VolumeReport) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["drug", "tweets"]).map_err(Error::from)?;
    for (drug, n) in &report.per_drug {
        w.write_record([drug.as_str(), &n.to_string()]).map_err(Error::from)?;
    }
    w.write_record(["other", &report.other.to_string()])
        .map_err(Error::from)?;
    w.write_record(["dropped", &report.dropped.to_string()])
        .map_err(Error::from)?;
    w.flush()?;
    Ok(())
}

pub fn filter(config: &Config) -> Result<String, CliError> {
    let layout = Layout::new(config);
    require(&layout.corpus(), "ingest")?;
    let records = ingest_jsonl(layout.corpus(), SchemaMode::Strict)?;
    let keywords = config.keyword_set();
    let kept = keyword_filter(&records, &keywords, config.match_mode());
    let report = VolumeReport::tally(records.len(), &kept, &keywords);
    save_jsonl(layout.filtered(), &kept)?;
    write_volume(&layout.volume(), &report)?;
    write_manifest(
        config,
        "filter",
        &[layout.corpus()],
        &[layout.filtered(), layout.volume()],
        &[],
    )?;

    let mut out = format!("kept {} of {} tweets\n", kept.len(), records.len());
    for (drug, n) in &report.per_drug {
        writeln!(out, "  {drug:<12} {n}").unwrap();
    }
    writeln!(out, "  {:<12} {}", "other", report.other).unwrap();
    writeln!(out, "  {:<12} {}", "dropped", report.dropped).unwrap();
    Ok(out)
}

fn write_topic_words(path: &Path, model: &pharmwatch::btm::BtmModel) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["topic", "rank", "word", "probability"])
        .map_err(Error::from)?;
    for z in 0..model.k {
        for (rank, (word, p)) in model.top_words(z, TOP_WORDS).into_iter().enumerate() {
            w.write_record([z.to_string(), (rank + 1).to_string(), word, p.to_string()])
                .map_err(Error::from)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn topics(config: &Config) -> Result<String, CliError> {
    let layout = Layout::new(config);
    require(&layout.filtered(), "filter")?;
    let records = ingest_jsonl(layout.filtered(), SchemaMode::Strict)?;
    let stats = prepare(&records, &config.tokenizer()?)?;
    let k = config.btm.k.unwrap_or_else(|| choose_k(&stats, Some(config.btm.k_cap)));
    let window = config.window();
    let biterms = extract_biterms(&stats.docs, window);
    let model = fit(&biterms.all, &stats.vocabulary, &config.btm_config(k))?;
    let dists = infer_corpus(&model, &stats.docs, window);

    save_model(layout.model(), &model)?;
    let mut w = create(&layout.doc_topics())?;
    write_doc_topics(&mut w, &dists)?;
    w.flush()?;
    write_topic_words(&layout.topic_words(), &model)?;
    let summary = topic_summary(&model, TOP_WORDS);
    write_text(&layout.topic_summary(), &summary)?;
    write_manifest(
        config,
        "topics",
        &[layout.filtered()],
        &[
            layout.model(),
            layout.doc_topics(),
            layout.topic_words(),
            layout.topic_summary(),
        ],
        &[("btm", config.btm.seed)],
    )?;

    let degenerate = dists.iter().filter(|d| d.degenerate).count();
    Ok(format!(
        "{} tweets, {} terms, sparsity {:.4}, k = {k}{}, {} biterms, {} tweets without biterms\n\n{summary}",
        stats.doc_count(),
        stats.vocab_size(),
        stats.sparsity,
        if config.btm.k.is_some() {
            " (configured)"
        } else {
            " (from sparsity)"
        },
        biterms.all.len(),
        degenerate,
    ))
}

pub fn serve(config: &Config) -> Result<String, CliError> {
    let layout = Layout::new(config);
    require(&layout.filtered(), "filter")?;
    require(&layout.model(), "topics")?;
    require(&layout.doc_topics(), "topics")?;
    let artifacts = Artifacts {
        model: layout.model(),
        corpus: layout.filtered(),
        doc_topics: layout.doc_topics(),
        store: config.annotations_path(),
    };
    if let Some(dir) = artifacts.store.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let state = AppState::load(&artifacts)?.with_samples(config.service.samples);
    let addr = config.service.bind.parse().expect("validated");
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(pharmwatch_service::serve(
        Arc::new(state),
        addr,
        config.service.assets.clone(),
    ))?;
    Ok(String::new())
}

/// Rogue topics and the label of every topic, from the config override or
/// from the annotation log.
fn rogue_topics(config: &Config, k: usize) -> Result<(Vec<usize>, BTreeMap<usize, String>), CliError> {
    if let Some(topics) = &config.isolation.rogue_topics {
        if let Some(t) = topics.iter().find(|&&t| t >= k) {
            return Err(CliError::Config(format!(
                "isolation.rogue_topics: topic {t} but k = {k}"
            )));
        }
        let labels = (0..k)
            .map(|z| {
                let l = if topics.contains(&z) {
                    TopicLabel::Relevant
                } else {
                    TopicLabel::Irrelevant
                };
                (z, l.to_string())
            })
            .collect();
        let mut topics = topics.clone();
        topics.sort_unstable();
        topics.dedup();
        return Ok((topics, labels));
    }
    let path = config.annotations_path();
    if !path.is_file() {
        return Err(CliError::Gate(format!(
            "no topic annotations at {}; label every topic with `pharmwatch serve` (or set isolation.rogue_topics)",
            path.display()
        )));
    }
    let store = AnnotationStore::open(&path)?;
    let consensus = match TopicConsensus::resolve(&store.topic_annotations(), k) {
        Ok(c) => c,
        Err(Error::Coverage { ids, .. }) => {
            return Err(CliError::Gate(format!(
                "topic annotations incomplete: topics {} have no label in {}; finish labelling with `pharmwatch serve`",
                ids.join(", "),
                path.display()
            )))
        }
        Err(e) => return Err(e.into()),
    };
    let pending = consensus.needs_investigation();
    if !pending.is_empty() {
        log::warn!("topics {pending:?} resolve to NeedsInvestigation and are treated as not rogue");
    }
    let labels = consensus.labels.iter().map(|(&z, l)| (z, l.to_string())).collect();
    Ok((consensus.relevant().into_iter().collect(), labels))
}

pub fn isolate(config: &Config) -> Result<String, CliError> {
    let layout = Layout::new(config);
    require(&layout.model(), "topics")?;
    require(&layout.doc_topics(), "topics")?;
    let model = load_model(layout.model())?;
    let dists = load_doc_topics(&layout.doc_topics())?;
    let (rogue, labels) = rogue_topics(config, model.k)?;
    if rogue.is_empty() {
        return Err(CliError::DataMessage(
            "no topic resolved to Relevant, so there is nothing to isolate".into(),
        ));
    }
    let isolated = isolate_rogue(&dists, &rogue.iter().copied().collect())?;
    let by_id: HashMap<&str, &DocTopicDist> = dists.iter().map(|d| (d.tweet_id.as_str(), d)).collect();

    let mut w = csv::Writer::from_writer(create(&layout.rogue_topics())?);
    w.write_record(["topic", "label"]).map_err(Error::from)?;
    for (z, l) in &labels {
        w.write_record([z.to_string(), l.clone()]).map_err(Error::from)?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_writer(create(&layout.candidates())?);
    w.write_record(["tweet_id", "dominant_topic", "dominant_proportion"])
        .map_err(Error::from)?;
    for id in &isolated {
        let d = by_id[id.as_str()];
        w.write_record([
            id.clone(),
            d.dominant_topic.to_string(),
            d.dominant_proportion().to_string(),
        ])
        .map_err(Error::from)?;
    }
    w.flush()?;

    let mut inputs = vec![layout.model(), layout.doc_topics()];
    if config.isolation.rogue_topics.is_none() {
        inputs.push(config.annotations_path());
    }
    write_manifest(
        config,
        "isolate",
        &inputs,
        &[layout.rogue_topics(), layout.candidates()],
        &[],
    )?;
    Ok(format!(
        "rogue topics {rogue:?}: {} of {} tweets isolated for the tweet annotation pass\n",
        isolated.len(),
        dists.len()
    ))
}

fn read_candidates(path: &Path) -> Result<Vec<String>, CliError> {
    let mut r = csv::Reader::from_reader(open(path)?);
    r.records()
        .map(|row| {
            let row = row.map_err(Error::from)?;
            Ok(row.get(0).unwrap_or_default().to_string())
        })
        .collect()
}

pub fn features(config: &Config) -> Result<String, CliError> {
    let layout = Layout::new(config);
    require(&layout.filtered(), "filter")?;
    require(&layout.candidates(), "isolate")?;
    let records = ingest_jsonl(layout.filtered(), SchemaMode::Strict)?;
    let candidates = read_candidates(&layout.candidates())?;

    let path = config.annotations_path();
    let store = if path.is_file() {
        AnnotationStore::open(&path)?
    } else {
        AnnotationStore::in_memory()
    };
    let tweet_annotations = store.tweet_annotations();
    let majority = majority_labels(&tweet_annotations);
    let missing: Vec<&str> = candidates
        .iter()
        .map(String::as_str)
        .filter(|id| !majority.contains_key(id))
        .collect();
    if !missing.is_empty() {
        let shown: Vec<&str> = missing.iter().take(5).copied().collect();
        return Err(CliError::Gate(format!(
            "{} of {} isolated tweets have no tweet annotation in {} (first: {}); label them with `pharmwatch serve`",
            missing.len(),
            candidates.len(),
            path.display(),
            shown.join(", ")
        )));
    }
    let rogue: HashSet<&str> = candidates
        .iter()
        .map(String::as_str)
        .filter(|id| majority[id] == ClassLabel::Rogue)
        .collect();

    let entity_mode = config.entity_mode();
    let labels: Vec<(String, ClassLabel)> = records
        .iter()
        .map(|r| {
            let l = if rogue.contains(r.tweet_id.as_str()) {
                ClassLabel::Rogue
            } else {
                ClassLabel::NonRogue
            };
            (r.tweet_id.clone(), l)
        })
        .collect();
    let vectors: Vec<FeatureVector> = records
        .iter()
        .zip(&labels)
        .map(|(r, (_, l))| extract_features(r, entity_mode).with_label(*l))
        .collect();

    let mut w = create(&layout.labels())?;
    write_labels_csv(&mut w, &labels)?;
    w.flush()?;
    let mut w = create(&layout.features())?;
    write_features_csv(&mut w, &vectors)?;
    w.flush()?;
    write_manifest(
        config,
        "features",
        &[layout.filtered(), layout.candidates(), path],
        &[layout.labels(), layout.features()],
        &[],
    )?;
    let precision = if candidates.is_empty() {
        0.0
    } else {
        rogue.len() as f64 / candidates.len() as f64
    };
    Ok(format!(
        "{} tweets: {} rogue, {} non-rogue; isolation precision {:.4} ({} of {} isolated tweets annotated rogue)\n",
        vectors.len(),
        rogue.len(),
        vectors.len() - rogue.len(),
        precision,
        rogue.len(),
        candidates.len()
    ))
}

/// Labelled vectors and records grouped by drug, in keyword order. A tweet
/// naming several drugs belongs to each of them.
struct DrugData {
    drug: String,
    vectors: Vec<FeatureVector>,
    records: Vec<TweetRecord>,
}

fn by_drug(config: &Config) -> Result<(Vec<DrugData>, Vec<PathBuf>), CliError> {
    let layout = Layout::new(config);
    require(&layout.filtered(), "filter")?;
    require(&layout.features(), "features")?;
    let records = ingest_jsonl(layout.filtered(), SchemaMode::Strict)?;
    let vectors = read_features_csv(open(&layout.features())?)?;
    let by_id: HashMap<&str, &FeatureVector> = vectors.iter().map(|v| (v.tweet_id.as_str(), v)).collect();
    let mut groups = Vec::new();
    for drug in &config.keywords.drugs {
        let mut g = DrugData {
            drug: drug.clone(),
            vectors: Vec::new(),
            records: Vec::new(),
        };
        for r in records.iter().filter(|r| r.matched_keywords.contains(drug)) {
            let v = by_id.get(r.tweet_id.as_str()).ok_or_else(|| {
                CliError::Gate(format!(
                    "tweet {} has no feature vector; rerun `pharmwatch features`",
                    r.tweet_id
                ))
            })?;
            g.vectors.push((*v).clone());
            g.records.push(r.clone());
        }
        groups.push(g);
    }
    Ok((groups, vec![layout.filtered(), layout.features()]))
}

fn class_counts(vectors: &[FeatureVector]) -> (usize, usize) {
    let rogue = vectors.iter().filter(|v| v.label == Some(ClassLabel::Rogue)).count();
    (rogue, vectors.len() - rogue)
}

pub fn stats(config: &Config) -> Result<String, CliError> {
    let layout = Layout::new(config);
    let (groups, inputs) = by_drug(config)?;
    let mut all = Vec::new();
    for g in &groups {
        let rogue_records: Vec<TweetRecord> = g
            .records
            .iter()
            .zip(&g.vectors)
            .filter(|(_, v)| v.label == Some(ClassLabel::Rogue))
            .map(|(r, _)| r.clone())
            .collect();
        match drug_stats(&g.drug, &g.vectors, &rogue_records) {
            Ok(s) => all.push(s),
            Err(Error::DegenerateGroup(reason)) => {
                log::warn!("skipping {} in stats: {reason}", g.drug)
            }
            Err(e) => return Err(e.into()),
        }
    }
    if all.is_empty() {
        return Err(CliError::DataMessage(
            "no drug has both rogue and non-rogue tweets".into(),
        ));
    }
    let mut w = create(&layout.stats())?;
    write_stats_csv(&mut w, &all)?;
    w.flush()?;
    let report = stats_report(&all);
    write_text(&layout.stats_text(), &report)?;
    write_manifest(config, "stats", &inputs, &[layout.stats(), layout.stats_text()], &[])?;
    Ok(report)
}

fn trainable(g: &DrugData) -> bool {
    let (rogue, non) = class_counts(&g.vectors);
    if rogue == 0 || non == 0 {
        log::warn!("skipping {}: {rogue} rogue and {non} non-rogue tweets", g.drug);
        return false;
    }
    true
}

pub fn train_models(config: &Config) -> Result<String, CliError> {
    let layout = Layout::new(config);
    let (groups, inputs) = by_drug(config)?;
    let mut outputs = Vec::new();
    let mut out = String::new();
    for g in groups.iter().filter(|g| trainable(g)) {
        let model = train(
            &g.vectors,
            &TrainConfig {
                l2_lambda: config.classifier.l2_lambda,
                seed: config.classifier.seed,
                ..TrainConfig::default()
            },
        )?;
        let path = layout.classifier(&g.drug);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        save_logreg(&path, &model)?;
        let (rogue, non) = class_counts(&g.vectors);
        writeln!(
            out,
            "{}: trained on {rogue} rogue and {non} non-rogue tweets -> {}",
            g.drug,
            path.display()
        )
        .unwrap();
        outputs.push(path);
    }
    if outputs.is_empty() {
        return Err(CliError::DataMessage(
            "no drug has both rogue and non-rogue tweets".into(),
        ));
    }
    write_manifest(
        config,
        "train",
        &inputs,
        &outputs,
        &[("classifier", config.classifier.seed)],
    )?;
    Ok(out)
}

pub fn evaluate_models(config: &Config) -> Result<String, CliError> {
    let layout = Layout::new(config);
    let (groups, inputs) = by_drug(config)?;
    let eval_config = config.eval_config();
    let mut reports: Vec<(String, EvalReport)> = Vec::new();
    for g in groups.iter().filter(|g| trainable(g)) {
        match evaluate(&g.vectors, &eval_config) {
            Ok(r) => reports.push((g.drug.clone(), r)),
            Err(e @ (Error::Evaluation(_) | Error::DegenerateTraining(_))) => {
                log::warn!("skipping {} in evaluation: {e}", g.drug)
            }
            Err(e) => return Err(e.into()),
        }
    }
    if reports.is_empty() {
        return Err(CliError::DataMessage("no drug could be evaluated".into()));
    }
    let mut w = create(&layout.eval())?;
    write_eval_table(&mut w, &reports)?;
    w.flush()?;
    let mut w = create(&layout.eval_runs())?;
    write_eval_runs(&mut w, &reports)?;
    w.flush()?;
    let text = eval_table_text(&reports);
    write_text(&layout.eval_text(), &text)?;
    write_manifest(
        config,
        "evaluate",
        &inputs,
        &[layout.eval(), layout.eval_runs(), layout.eval_text()],
        &[("classifier", config.classifier.seed)],
    )?;
    Ok(text)
}

type Step = fn(&Config) -> Result<String, CliError>;

/// Everything from ingestion to evaluation. Stops with a gate error when a
/// human annotation pass is still outstanding; rerun after annotating.
pub fn pipeline(config: &Config) -> Result<String, CliError> {
    let mut out = String::new();
    let steps: [(&str, Step); 9] = [
        ("ingest", ingest),
        ("filter", filter),
        ("topics", topics),
        ("isolate", isolate),
        ("features", features),
        ("stats", stats),
        ("train", train_models),
        ("evaluate", evaluate_models),
        ("labels", check_labels),
    ];
    for (name, step) in steps {
        match step(config) {
            Ok(summary) => {
                if !summary.is_empty() {
                    writeln!(out, "== {name}\n{summary}").unwrap();
                }
            }
            Err(CliError::Gate(msg)) => {
                print!("{out}");
                return Err(CliError::Gate(format!(
                    "pipeline paused before `{name}`: {msg}; then rerun `pharmwatch pipeline`"
                )));
            }
            Err(e) => {
                print!("{out}");
                return Err(e);
            }
        }
    }
    Ok(out)
}

/// Confirms that the label file and the feature file agree.
fn check_labels(config: &Config) -> Result<String, CliError> {
    let layout = Layout::new(config);
    let labels = read_labels_csv(open(&layout.labels())?)?;
    let vectors = read_features_csv(open(&layout.features())?)?;
    let agree = labels.len() == vectors.len()
        && labels
            .iter()
            .zip(&vectors)
            .all(|((id, l), v)| *id == v.tweet_id && Some(*l) == v.label);
    if !agree {
        return Err(CliError::DataMessage(format!(
            "{} and {} disagree",
            layout.labels().display(),
            layout.features().display()
        )));
    }
    Ok(String::new())
}
