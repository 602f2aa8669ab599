use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::features::{FeatureName, FeatureVector, FEATURE_COUNT};

/// Per-feature centring and scaling fitted on training data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scale {
    pub mean: f64,
    /// Population standard deviation; 1.0 for features that were constant
    /// in training, which are centred but not scaled.
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub scales: [Scale; FEATURE_COUNT],
}

impl Standardizer {
    pub fn fit(rows: &[[f64; FEATURE_COUNT]]) -> Self {
        let n = rows.len() as f64;
        let scales = std::array::from_fn(|j| {
            let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n;
            let var = rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
            let std = var.sqrt();
            Scale {
                mean,
                std: if std > 0.0 && std.is_finite() { std } else { 1.0 },
            }
        });
        Self { scales }
    }

    pub fn identity() -> Self {
        Self {
            scales: [Scale { mean: 0.0, std: 1.0 }; FEATURE_COUNT],
        }
    }

    pub fn apply(&self, x: &[f64; FEATURE_COUNT]) -> [f64; FEATURE_COUNT] {
        std::array::from_fn(|j| (x[j] - self.scales[j].mean) / self.scales[j].std)
    }
}

/// A trained binary logistic-regression model. Rogue is the positive class.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRegModel {
    pub weights: [f64; FEATURE_COUNT],
    pub bias: f64,
    pub standardizer: Standardizer,
    pub l2_lambda: f64,
    pub seed: u64,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

impl LogRegModel {
    pub fn decision(&self, x: &[f64; FEATURE_COUNT]) -> f64 {
        let xs = self.standardizer.apply(x);
        self.weights.iter().zip(&xs).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }

    /// Probability that `x` is rogue.
    pub fn predict_proba(&self, x: &FeatureVector) -> f64 {
        sigmoid(self.decision(&x.values))
    }

    pub fn predict_is_rogue(&self, x: &FeatureVector) -> bool {
        self.predict_proba(x) >= 0.5
    }
}

/// Mean negative log-likelihood plus `(λ/2)‖w‖²` over standardised rows.
/// Parameters are laid out as the thirteen weights followed by the bias,
/// which is not regularised.
#[derive(Debug, Clone)]
pub struct Objective<'a> {
    pub rows: &'a [[f64; FEATURE_COUNT]],
    pub targets: &'a [f64],
    pub l2_lambda: f64,
}

pub const PARAM_COUNT: usize = FEATURE_COUNT + 1;

impl Objective<'_> {
    fn margin(params: &[f64; PARAM_COUNT], row: &[f64; FEATURE_COUNT]) -> f64 {
        row.iter().zip(params).map(|(x, w)| x * w).sum::<f64>() + params[FEATURE_COUNT]
    }

    pub fn value(&self, params: &[f64; PARAM_COUNT]) -> f64 {
        let n = self.rows.len() as f64;
        let nll: f64 = self
            .rows
            .iter()
            .zip(self.targets)
            .map(|(row, &y)| {
                let z = Self::margin(params, row);
                softplus(z) - y * z
            })
            .sum();
        let penalty: f64 = params[..FEATURE_COUNT].iter().map(|w| w * w).sum();
        nll / n + 0.5 * self.l2_lambda * penalty
    }

    pub fn gradient(&self, params: &[f64; PARAM_COUNT]) -> [f64; PARAM_COUNT] {
        let n = self.rows.len() as f64;
        let mut g = [0.0; PARAM_COUNT];
        for (row, &y) in self.rows.iter().zip(self.targets) {
            let r = sigmoid(Self::margin(params, row)) - y;
            for (gj, x) in g.iter_mut().zip(row) {
                *gj += r * x;
            }
            g[FEATURE_COUNT] += r;
        }
        for (j, gj) in g.iter_mut().enumerate() {
            *gj /= n;
            if j < FEATURE_COUNT {
                *gj += self.l2_lambda * params[j];
            }
        }
        g
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub l2_lambda: f64,
    pub seed: u64,
    pub max_iterations: usize,
    /// Stop once the gradient's largest absolute entry falls below this.
    pub tolerance: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            l2_lambda: 1.0,
            seed: 0,
            max_iterations: 10_000,
            tolerance: 1e-8,
        }
    }
}

/// What happened during gradient descent.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainTrace {
    /// Objective value before the first step and after every accepted step.
    pub losses: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

pub fn train(data: &[FeatureVector], config: &TrainConfig) -> Result<LogRegModel> {
    train_traced(data, config).map(|(m, _)| m)
}

/// Full-batch gradient descent with Armijo backtracking from zero weights.
pub fn train_traced(data: &[FeatureVector], config: &TrainConfig) -> Result<(LogRegModel, TrainTrace)> {
    if !(config.l2_lambda >= 0.0 && config.l2_lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "l2 lambda must be nonnegative, got {}",
            config.l2_lambda
        )));
    }
    let mut targets = Vec::with_capacity(data.len());
    for v in data {
        let label = v
            .label
            .ok_or_else(|| Error::InvalidArgument(format!("training vector {} has no label", v.tweet_id)))?;
        targets.push(label.as_target());
    }
    let positives = targets.iter().filter(|&&y| y == 1.0).count();
    if data.len() < 2 || positives == 0 || positives == data.len() {
        return Err(Error::DegenerateTraining(format!(
            "{} examples with {positives} rogue; both classes are required",
            data.len()
        )));
    }

    let raw: Vec<[f64; FEATURE_COUNT]> = data.iter().map(|v| v.values).collect();
    let standardizer = Standardizer::fit(&raw);
    let rows: Vec<[f64; FEATURE_COUNT]> = raw.iter().map(|r| standardizer.apply(r)).collect();
    let objective = Objective {
        rows: &rows,
        targets: &targets,
        l2_lambda: config.l2_lambda,
    };

    let (params, trace) = descend(&objective, config.max_iterations, config.tolerance);
    let mut weights = [0.0; FEATURE_COUNT];
    weights.copy_from_slice(&params[..FEATURE_COUNT]);
    let model = LogRegModel {
        weights,
        bias: params[FEATURE_COUNT],
        standardizer,
        l2_lambda: config.l2_lambda,
        seed: config.seed,
    };
    Ok((model, trace))
}

fn descend(objective: &Objective<'_>, max_iterations: usize, tolerance: f64) -> ([f64; PARAM_COUNT], TrainTrace) {
    const ARMIJO: f64 = 1e-4;
    const MIN_STEP: f64 = 1e-20;

    let mut params = [0.0; PARAM_COUNT];
    let mut loss = objective.value(&params);
    let mut losses = vec![loss];
    let mut step: f64 = 1.0;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < max_iterations {
        let grad = objective.gradient(&params);
        if grad.iter().all(|g| g.abs() < tolerance) {
            converged = true;
            break;
        }
        let sq_norm: f64 = grad.iter().map(|g| g * g).sum();
        // try a slightly longer step than last time, then backtrack
        step = (step * 2.0).min(1e3);
        let accepted = loop {
            let candidate: [f64; PARAM_COUNT] = std::array::from_fn(|j| params[j] - step * grad[j]);
            let value = objective.value(&candidate);
            if value <= loss - ARMIJO * step * sq_norm {
                break Some((candidate, value));
            }
            step *= 0.5;
            if step < MIN_STEP {
                break None;
            }
        };
        let Some((candidate, value)) = accepted else {
            break;
        };
        params = candidate;
        loss = value;
        losses.push(loss);
        iterations += 1;
    }
    if !converged {
        converged = objective.gradient(&params).iter().all(|g| g.abs() < tolerance);
    }
    (
        params,
        TrainTrace {
            losses,
            iterations,
            converged,
        },
    )
}

const MAGIC: &str = "pharmwatch-logreg";
const VERSION: u32 = 1;

pub fn logreg_to_string(model: &LogRegModel) -> String {
    let mut out = String::new();
    writeln!(out, "{MAGIC} {VERSION}").unwrap();
    writeln!(out, "lambda {}", model.l2_lambda).unwrap();
    writeln!(out, "seed {}", model.seed).unwrap();
    writeln!(out, "bias {}", model.bias).unwrap();
    for f in FeatureName::ALL {
        let s = model.standardizer.scales[f.index()];
        writeln!(out, "feature {} {} {} {}", f, model.weights[f.index()], s.mean, s.std).unwrap();
    }
    out
}

pub fn logreg_from_str(text: &str) -> Result<LogRegModel> {
    let bad = |line: usize, reason: &str| Error::Format {
        what: "classifier model",
        line,
        reason: reason.to_string(),
    };
    let lines: Vec<&str> = text.lines().collect();
    if lines.first() != Some(&format!("{MAGIC} {VERSION}").as_str()) {
        return Err(bad(1, "bad header"));
    }
    let scalar = |i: usize, key: &str| -> Result<String> {
        match lines.get(i).and_then(|l| l.split_once(' ')) {
            Some((k, v)) if k == key => Ok(v.to_string()),
            _ => Err(bad(i + 1, &format!("expected `{key}`"))),
        }
    };
    let parse_f = |i: usize, raw: &str| raw.parse::<f64>().map_err(|_| bad(i + 1, "bad number"));
    let l2_lambda = parse_f(1, &scalar(1, "lambda")?)?;
    let seed = scalar(2, "seed")?.parse::<u64>().map_err(|_| bad(3, "bad seed"))?;
    let bias = parse_f(3, &scalar(3, "bias")?)?;

    let mut weights = [0.0; FEATURE_COUNT];
    let mut scales = [Scale { mean: 0.0, std: 1.0 }; FEATURE_COUNT];
    for (j, f) in FeatureName::ALL.iter().enumerate() {
        let i = 4 + j;
        let parts: Vec<&str> = lines.get(i).map(|l| l.split_whitespace().collect()).unwrap_or_default();
        if parts.len() != 5 || parts[0] != "feature" || parts[1] != f.as_str() {
            return Err(bad(i + 1, &format!("expected feature `{f}`")));
        }
        weights[j] = parse_f(i, parts[2])?;
        scales[j] = Scale {
            mean: parse_f(i, parts[3])?,
            std: parse_f(i, parts[4])?,
        };
        if scales[j].std.is_nan() || scales[j].std <= 0.0 {
            return Err(bad(i + 1, "standard deviation must be positive"));
        }
    }
    Ok(LogRegModel {
        weights,
        bias,
        standardizer: Standardizer { scales },
        l2_lambda,
        seed,
    })
}

pub fn save_logreg(path: impl AsRef<Path>, model: &LogRegModel) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, logreg_to_string(model)).map_err(|e| Error::io(path, e))
}

pub fn load_logreg(path: impl AsRef<Path>) -> Result<LogRegModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    logreg_from_str(&text)
}
