use std::cmp::Ordering;

use crate::btm::biterm::Biterm;
use crate::corpus::DocTermStats;
use crate::error::{Error, Result};

/// A fitted biterm topic model.
///
/// Counts are the sampler's final state; `phi` and `theta` are derived
/// from them and recomputed whenever a model is loaded.
#[derive(Debug, Clone, PartialEq)]
pub struct BtmModel {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub vocabulary: Vec<String>,
    /// Biterms assigned to each topic.
    pub n_z: Vec<u64>,
    /// Row-major `W × k` word-topic counts.
    pub n_wz: Vec<u64>,
    /// `k × W` topic-word distributions.
    pub phi: Vec<Vec<f64>>,
    /// Corpus-level topic proportions.
    pub theta: Vec<f64>,
    pub seed: u64,
    pub iterations: usize,
}

impl BtmModel {
    pub fn from_counts(
        vocabulary: Vec<String>,
        alpha: f64,
        beta: f64,
        n_z: Vec<u64>,
        n_wz: Vec<u64>,
        seed: u64,
        iterations: usize,
    ) -> Result<Self> {
        let k = n_z.len();
        let w = vocabulary.len();
        if k < 2 || w == 0 {
            return Err(Error::InvalidArgument(format!(
                "need k >= 2 and a vocabulary, got k={k} W={w}"
            )));
        }
        if n_wz.len() != w * k {
            return Err(Error::InvalidArgument(format!(
                "word-topic table has {} cells, expected {}",
                n_wz.len(),
                w * k
            )));
        }
        for z in 0..k {
            let words: u64 = (0..w).map(|v| n_wz[v * k + z]).sum();
            if words != 2 * n_z[z] {
                return Err(Error::InvalidArgument(format!(
                    "topic {z} holds {words} words but {} biterms",
                    n_z[z]
                )));
            }
        }

        let w_beta = w as f64 * beta;
        let phi = (0..k)
            .map(|z| {
                let denom = 2.0 * n_z[z] as f64 + w_beta;
                (0..w).map(|v| (n_wz[v * k + z] as f64 + beta) / denom).collect()
            })
            .collect();
        let total: u64 = n_z.iter().sum();
        let denom = total as f64 + k as f64 * alpha;
        let theta = n_z.iter().map(|&n| (n as f64 + alpha) / denom).collect();

        Ok(Self {
            k,
            alpha,
            beta,
            vocabulary,
            n_z,
            n_wz,
            phi,
            theta,
            seed,
            iterations,
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn biterm_count(&self) -> u64 {
        self.n_z.iter().sum()
    }

    /// Unnormalised `P(z | b) ∝ θ_z φ_{w1|z} φ_{w2|z}`.
    fn biterm_weights(&self, b: Biterm, out: &mut [f64]) {
        for (z, slot) in out.iter_mut().enumerate() {
            *slot = self.theta[z] * self.phi[z][b.w1] * self.phi[z][b.w2];
        }
    }

    /// Topic mixture of one document from its biterms.
    ///
    /// Averages `P(z | b)` over the document's biterm occurrences, which is
    /// the sum over distinct biterms weighted by their empirical frequency.
    /// A document without biterms gets the uniform mixture and is marked
    /// degenerate.
    pub fn infer_doc(&self, tweet_id: &str, doc_biterms: &[Biterm]) -> DocTopicDist {
        let mut proportions = vec![0.0; self.k];
        if doc_biterms.is_empty() {
            proportions.fill(1.0 / self.k as f64);
            return DocTopicDist::new(tweet_id, proportions, true);
        }
        let mut buf = vec![0.0; self.k];
        let share = 1.0 / doc_biterms.len() as f64;
        for &b in doc_biterms {
            self.biterm_weights(b, &mut buf);
            let norm: f64 = buf.iter().sum();
            for (p, w) in proportions.iter_mut().zip(&buf) {
                *p += share * w / norm;
            }
        }
        let total: f64 = proportions.iter().sum();
        proportions.iter_mut().for_each(|p| *p /= total);
        DocTopicDist::new(tweet_id, proportions, false)
    }

    /// The `n` most probable words of `topic`, ties broken by term.
    pub fn top_words(&self, topic: usize, n: usize) -> Vec<(String, f64)> {
        assert!(topic < self.k, "topic {topic} out of range for k={}", self.k);
        let row = &self.phi[topic];
        let mut order: Vec<usize> = (0..row.len()).collect();
        order.sort_by(|&a, &b| {
            row[b]
                .partial_cmp(&row[a])
                .unwrap_or(Ordering::Equal)
                .then_with(|| self.vocabulary[a].cmp(&self.vocabulary[b]))
        });
        order
            .into_iter()
            .take(n)
            .map(|w| (self.vocabulary[w].clone(), row[w]))
            .collect()
    }
}

/// A document's inferred topic mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct DocTopicDist {
    pub tweet_id: String,
    pub proportions: Vec<f64>,
    pub dominant_topic: usize,
    /// The document produced no biterms and fell back to uniform.
    pub degenerate: bool,
}

impl DocTopicDist {
    pub fn new(tweet_id: impl Into<String>, proportions: Vec<f64>, degenerate: bool) -> Self {
        let dominant_topic = argmax(&proportions);
        Self {
            tweet_id: tweet_id.into(),
            proportions,
            dominant_topic,
            degenerate,
        }
    }

    pub fn dominant_proportion(&self) -> f64 {
        self.proportions[self.dominant_topic]
    }
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Topic count from the reciprocal of the documents-by-terms sparsity,
/// rounded and clamped to `[2, cap]`.
pub fn choose_k(stats: &DocTermStats, cap: Option<usize>) -> usize {
    choose_k_for_sparsity(stats.sparsity, cap)
}

pub fn choose_k_for_sparsity(sparsity: f64, cap: Option<usize>) -> usize {
    assert!(sparsity > 0.0 && sparsity <= 1.0, "sparsity {sparsity} outside (0, 1]");
    let k = ((1.0 / sparsity).round() as usize).max(2);
    match cap {
        Some(cap) => k.min(cap.max(2)),
        None => k,
    }
}
