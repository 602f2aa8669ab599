//! Plain-text model file and the human-readable topic summary.
//!
//! ```text
//! pharmwatch-btm 1
//! k 2
//! alpha 25
//! beta 0.01
//! vocab_size 3
//! seed 42
//! iterations 1000
//! n_z 10 12
//! words
//! buy 4 0
//! codeine 9 11
//! online 7 13
//! ```
//!
//! Each line after `words` holds a term followed by its `k` topic counts.
//! Terms never contain whitespace because the tokenizer splits on it.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::btm::model::{BtmModel, DocTopicDist};
use crate::error::{Error, Result};

const MAGIC: &str = "pharmwatch-btm";
const VERSION: u32 = 1;

pub fn model_to_string(model: &BtmModel) -> String {
    let mut out = String::new();
    let join = |v: &[u64]| v.iter().map(u64::to_string).collect::<Vec<_>>().join(" ");
    writeln!(out, "{MAGIC} {VERSION}").unwrap();
    writeln!(out, "k {}", model.k).unwrap();
    writeln!(out, "alpha {}", model.alpha).unwrap();
    writeln!(out, "beta {}", model.beta).unwrap();
    writeln!(out, "vocab_size {}", model.vocab_size()).unwrap();
    writeln!(out, "seed {}", model.seed).unwrap();
    writeln!(out, "iterations {}", model.iterations).unwrap();
    writeln!(out, "n_z {}", join(&model.n_z)).unwrap();
    writeln!(out, "words").unwrap();
    for (w, term) in model.vocabulary.iter().enumerate() {
        writeln!(out, "{term} {}", join(&model.n_wz[w * model.k..(w + 1) * model.k])).unwrap();
    }
    out
}

pub fn model_from_str(text: &str) -> Result<BtmModel> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let bad = |line: usize, reason: String| Error::Format {
        what: "topic model",
        line,
        reason,
    };

    let (n, header) = lines.next().ok_or_else(|| bad(1, "empty file".into()))?;
    match header.split_once(' ') {
        Some((MAGIC, v)) if v.trim() == VERSION.to_string() => {}
        _ => return Err(bad(n, format!("expected `{MAGIC} {VERSION}` header"))),
    }

    let mut field = |name: &str| -> Result<(usize, String)> {
        let (n, line) = lines.next().ok_or_else(|| bad(0, format!("missing `{name}`")))?;
        match line.split_once(' ') {
            Some((key, rest)) if key == name => Ok((n, rest.trim().to_string())),
            _ => Err(bad(n, format!("expected `{name}`"))),
        }
    };
    fn num<T: std::str::FromStr>(n: usize, raw: &str) -> Result<T> {
        raw.parse().map_err(|_| Error::Format {
            what: "topic model",
            line: n,
            reason: format!("bad number `{raw}`"),
        })
    }

    let (ln, raw) = field("k")?;
    let k: usize = num(ln, &raw)?;
    let (ln, raw) = field("alpha")?;
    let alpha: f64 = num(ln, &raw)?;
    let (ln, raw) = field("beta")?;
    let beta: f64 = num(ln, &raw)?;
    let (ln, raw) = field("vocab_size")?;
    let vocab_size: usize = num(ln, &raw)?;
    let (ln, raw) = field("seed")?;
    let seed: u64 = num(ln, &raw)?;
    let (ln, raw) = field("iterations")?;
    let iterations: usize = num(ln, &raw)?;
    let (ln, raw) = field("n_z")?;
    let n_z = raw
        .split_whitespace()
        .map(|t| num(ln, t))
        .collect::<Result<Vec<u64>>>()?;
    if n_z.len() != k {
        return Err(bad(ln, format!("n_z has {} entries, expected {k}", n_z.len())));
    }

    match lines.next() {
        Some((_, "words")) => {}
        Some((n, _)) => return Err(bad(n, "expected `words`".into())),
        None => return Err(bad(0, "missing `words`".into())),
    }
    let mut vocabulary = Vec::with_capacity(vocab_size);
    let mut n_wz = Vec::with_capacity(vocab_size * k);
    for (n, line) in lines {
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let term = parts.next().ok_or_else(|| bad(n, "missing term".into()))?;
        let counts = parts.map(|t| num(n, t)).collect::<Result<Vec<u64>>>()?;
        if counts.len() != k {
            return Err(bad(
                n,
                format!("term `{term}` has {} counts, expected {k}", counts.len()),
            ));
        }
        vocabulary.push(term.to_string());
        n_wz.extend(counts);
    }
    if vocabulary.len() != vocab_size {
        return Err(bad(
            0,
            format!("{} terms listed, header says {vocab_size}", vocabulary.len()),
        ));
    }
    BtmModel::from_counts(vocabulary, alpha, beta, n_z, n_wz, seed, iterations)
}

pub fn save_model(path: impl AsRef<Path>, model: &BtmModel) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, model_to_string(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<BtmModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_str(&text)
}

/// One block per topic listing its top words, the artifact annotators read.
pub fn topic_summary(model: &BtmModel, n: usize) -> String {
    let mut out = String::new();
    for z in 0..model.k {
        writeln!(out, "Topic {z}  (theta = {:.4})", model.theta[z]).unwrap();
        for (word, p) in model.top_words(z, n) {
            writeln!(out, "  {word:<20} {p:.6}").unwrap();
        }
        out.push('\n');
    }
    out
}

/// CSV of document mixtures: `tweet_id,dominant_topic,degenerate,p0..p{k-1}`.
pub fn write_doc_topics(writer: impl std::io::Write, dists: &[DocTopicDist]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let k = dists.first().map_or(0, |d| d.proportions.len());
    let mut header = vec!["tweet_id".to_string(), "dominant_topic".into(), "degenerate".into()];
    header.extend((0..k).map(|z| format!("p{z}")));
    w.write_record(&header)?;
    for d in dists {
        let mut row = vec![
            d.tweet_id.clone(),
            d.dominant_topic.to_string(),
            d.degenerate.to_string(),
        ];
        row.extend(d.proportions.iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn read_doc_topics(reader: impl std::io::Read) -> Result<Vec<DocTopicDist>> {
    let mut r = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for (i, row) in r.records().enumerate() {
        let row = row?;
        let line = i + 2;
        let bad = |reason: &str| Error::Format {
            what: "document topics",
            line,
            reason: reason.to_string(),
        };
        if row.len() < 5 {
            return Err(bad("too few columns"));
        }
        let degenerate: bool = row[2].parse().map_err(|_| bad("bad degenerate flag"))?;
        let proportions = row
            .iter()
            .skip(3)
            .map(|v| v.parse::<f64>().map_err(|_| bad("bad proportion")))
            .collect::<Result<Vec<_>>>()?;
        let dist = DocTopicDist::new(&row[0], proportions, degenerate);
        if row[1].parse::<usize>().ok() != Some(dist.dominant_topic) {
            return Err(bad("dominant topic disagrees with proportions"));
        }
        out.push(dist);
    }
    Ok(out)
}
