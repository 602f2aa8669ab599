use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::btm::biterm::Biterm;
use crate::btm::model::BtmModel;
use crate::error::{Error, Result};

/// Hyperparameters for one sampler run.
#[derive(Debug, Clone, PartialEq)]
pub struct BtmConfig {
    pub k: usize,
    /// Topic smoothing. `None` means `50 / k`.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl BtmConfig {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            alpha: None,
            beta: 0.01,
            iterations: 1000,
            seed: 0,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(50.0 / self.k as f64)
    }

    fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InvalidArgument(format!("k must be at least 2, got {}", self.k)));
        }
        if self.iterations < 1 {
            return Err(Error::InvalidArgument("iterations must be at least 1".into()));
        }
        let alpha = self.alpha();
        if !(alpha > 0.0 && alpha.is_finite()) || !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "priors must be positive, got alpha={alpha} beta={}",
                self.beta
            )));
        }
        Ok(())
    }
}

/// Collapsed Gibbs sampler over corpus-level biterms.
///
/// Each biterm carries one topic. A sweep visits biterms in input order,
/// removes the biterm's counts and redraws its topic from the full
/// conditional given every other assignment.
#[derive(Debug, Clone)]
pub struct GibbsSampler<'a> {
    biterms: &'a [Biterm],
    vocab_size: usize,
    k: usize,
    alpha: f64,
    beta: f64,
    assignments: Vec<usize>,
    n_z: Vec<u64>,
    /// Row-major `vocab_size × k`.
    n_wz: Vec<u64>,
    weights: Vec<f64>,
    rng: ChaCha8Rng,
    sweeps: usize,
}

impl<'a> GibbsSampler<'a> {
    /// Draws the initial assignments uniformly at random.
    pub fn new(biterms: &'a [Biterm], vocab_size: usize, config: &BtmConfig) -> Result<Self> {
        config.validate()?;
        if biterms.is_empty() {
            return Err(Error::DegenerateCorpus("no biterms to fit".into()));
        }
        if let Some(b) = biterms.iter().find(|b| b.w2 >= vocab_size) {
            return Err(Error::InvalidArgument(format!(
                "biterm ({}, {}) outside vocabulary of size {vocab_size}",
                b.w1, b.w2
            )));
        }
        let k = config.k;
        let mut sampler = Self {
            biterms,
            vocab_size,
            k,
            alpha: config.alpha(),
            beta: config.beta,
            assignments: Vec::with_capacity(biterms.len()),
            n_z: vec![0; k],
            n_wz: vec![0; vocab_size * k],
            weights: vec![0.0; k],
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            sweeps: 0,
        };
        for i in 0..biterms.len() {
            let z = sampler.rng.random_range(0..k);
            sampler.assignments.push(z);
            sampler.add(i, z);
        }
        Ok(sampler)
    }

    fn add(&mut self, i: usize, z: usize) {
        let b = self.biterms[i];
        self.n_z[z] += 1;
        self.n_wz[b.w1 * self.k + z] += 1;
        self.n_wz[b.w2 * self.k + z] += 1;
    }

    fn remove(&mut self, i: usize, z: usize) {
        let b = self.biterms[i];
        self.n_z[z] -= 1;
        self.n_wz[b.w1 * self.k + z] -= 1;
        self.n_wz[b.w2 * self.k + z] -= 1;
    }

    /// Unnormalised full conditional of biterm `b` for every topic, given
    /// counts that exclude `b`.
    ///
    /// A biterm places two words into its topic's urn, so the denominator
    /// is the rising product over two draws. When both words are the same
    /// term the second draw sees the first one already in the urn.
    fn conditional(&mut self, b: Biterm) {
        let w_beta = self.vocab_size as f64 * self.beta;
        for z in 0..self.k {
            let nz = self.n_z[z] as f64;
            let words = 2.0 * nz;
            let n1 = self.n_wz[b.w1 * self.k + z] as f64;
            let n2 = if b.w1 == b.w2 {
                n1 + 1.0
            } else {
                self.n_wz[b.w2 * self.k + z] as f64
            };
            self.weights[z] =
                (nz + self.alpha) * (n1 + self.beta) * (n2 + self.beta) / ((words + w_beta) * (words + 1.0 + w_beta));
        }
    }

    fn draw(&mut self) -> usize {
        let total: f64 = self.weights.iter().sum();
        let mut u = self.rng.random::<f64>() * total;
        for (z, &w) in self.weights.iter().enumerate() {
            if u < w {
                return z;
            }
            u -= w;
        }
        self.k - 1
    }

    pub fn sweep(&mut self) {
        for i in 0..self.biterms.len() {
            let old = self.assignments[i];
            self.remove(i, old);
            self.conditional(self.biterms[i]);
            let new = self.draw();
            self.assignments[i] = new;
            self.add(i, new);
        }
        self.sweeps += 1;
    }

    pub fn run(&mut self, sweeps: usize) {
        for _ in 0..sweeps {
            self.sweep();
        }
    }

    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    pub fn topic_counts(&self) -> &[u64] {
        &self.n_z
    }

    /// Count of word `w` assigned to topic `z`.
    pub fn word_topic_count(&self, w: usize, z: usize) -> u64 {
        self.n_wz[w * self.k + z]
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn biterm_count(&self) -> usize {
        self.biterms.len()
    }

    /// Checks `Σ n_z = |B|` and `Σ_w n_wz[w][z] = 2 n_z[z]`.
    pub fn counts_conserved(&self) -> bool {
        let total: u64 = self.n_z.iter().sum();
        if total != self.biterms.len() as u64 {
            return false;
        }
        (0..self.k).all(|z| {
            let words: u64 = (0..self.vocab_size).map(|w| self.word_topic_count(w, z)).sum();
            words == 2 * self.n_z[z]
        })
    }

    pub fn into_model(self, vocabulary: Vec<String>, config: &BtmConfig) -> BtmModel {
        assert_eq!(vocabulary.len(), self.vocab_size, "vocabulary size mismatch");
        BtmModel::from_counts(
            vocabulary,
            self.alpha,
            self.beta,
            self.n_z,
            self.n_wz,
            config.seed,
            self.sweeps,
        )
        .expect("sampler counts are consistent")
    }
}

/// Fits a topic model to the aggregated corpus biterms.
pub fn fit(biterms: &[Biterm], vocabulary: &[String], config: &BtmConfig) -> Result<BtmModel> {
    let mut sampler = GibbsSampler::new(biterms, vocabulary.len(), config)?;
    sampler.run(config.iterations);
    Ok(sampler.into_model(vocabulary.to_vec(), config))
}
