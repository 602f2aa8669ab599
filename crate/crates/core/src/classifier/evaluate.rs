use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::classifier::logreg::{train, TrainConfig};
use crate::classifier::metrics::{compute_metrics, Metrics};
use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::screening::ClassLabel;

/// Redraws allowed per run when a split misses a class.
pub const MAX_REDRAWS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    /// Share of examples used for training.
    pub split_fraction: f64,
    pub runs: usize,
    pub seed: u64,
    pub l2_lambda: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            split_fraction: 0.7,
            runs: 10,
            seed: 0,
            l2_lambda: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub run: usize,
    /// Splits discarded because a side lacked one class.
    pub redraws: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanMetrics {
    pub accuracy: f64,
    pub average_precision: f64,
    pub f1_score: f64,
    pub precision: f64,
    pub recall: f64,
    pub zero_one_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub runs: Vec<RunResult>,
    pub mean: MeanMetrics,
    pub run_count: usize,
    pub split_fraction: f64,
}

impl EvalReport {
    /// Metric names and means, in reporting order.
    pub fn mean_rows(&self) -> [(&'static str, f64); 6] {
        let m = &self.mean;
        [
            ("accuracy", m.accuracy),
            ("average_precision", m.average_precision),
            ("f1_score", m.f1_score),
            ("precision", m.precision),
            ("recall", m.recall),
            ("zero_one_loss", m.zero_one_loss),
        ]
    }
}

fn mean_of(runs: &[RunResult], f: impl Fn(&Metrics) -> f64) -> f64 {
    runs.iter().map(|r| f(&r.metrics)).sum::<f64>() / runs.len() as f64
}

fn has_both(data: &[FeatureVector], idx: &[usize]) -> bool {
    let rogue = idx
        .iter()
        .filter(|&&i| data[i].label == Some(ClassLabel::Rogue))
        .count();
    rogue > 0 && rogue < idx.len()
}

/// Repeated random train/test evaluation.
///
/// Run `r` draws its split from a ChaCha stream selected by `r` under the
/// master seed, so runs are independent of each other and of run order.
pub fn evaluate(data: &[FeatureVector], config: &EvalConfig) -> Result<EvalReport> {
    if !(config.split_fraction > 0.0 && config.split_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "split fraction must lie in (0, 1), got {}",
            config.split_fraction
        )));
    }
    if config.runs == 0 {
        return Err(Error::InvalidArgument("at least one run is required".into()));
    }
    if data.iter().any(|v| v.label.is_none()) {
        return Err(Error::InvalidArgument("every vector needs a label".into()));
    }
    let n = data.len();
    if n < 4 {
        return Err(Error::DegenerateTraining(format!("{n} examples are too few to split")));
    }
    let n_train = ((config.split_fraction * n as f64).round() as usize).clamp(2, n - 2);

    let mut runs = Vec::with_capacity(config.runs);
    for run in 0..config.runs {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(run as u64);
        let mut indices: Vec<usize> = (0..n).collect();
        let mut redraws = 0;
        loop {
            indices.shuffle(&mut rng);
            let (tr, te) = indices.split_at(n_train);
            if has_both(data, tr) && has_both(data, te) {
                break;
            }
            redraws += 1;
            if redraws > MAX_REDRAWS {
                return Err(Error::Evaluation(format!(
                    "run {run}: no split with both classes on each side after {MAX_REDRAWS} redraws"
                )));
            }
        }
        let (tr, te) = indices.split_at(n_train);
        let train_set: Vec<FeatureVector> = tr.iter().map(|&i| data[i].clone()).collect();
        let model = train(
            &train_set,
            &TrainConfig {
                l2_lambda: config.l2_lambda,
                seed: config.seed,
                ..TrainConfig::default()
            },
        )?;
        let truth: Vec<bool> = te.iter().map(|&i| data[i].label == Some(ClassLabel::Rogue)).collect();
        let scores: Vec<f64> = te.iter().map(|&i| model.predict_proba(&data[i])).collect();
        runs.push(RunResult {
            run,
            redraws,
            train_size: tr.len(),
            test_size: te.len(),
            metrics: compute_metrics(&truth, &scores),
        });
    }

    let mean = MeanMetrics {
        accuracy: mean_of(&runs, |m| m.accuracy),
        average_precision: mean_of(&runs, |m| m.average_precision),
        f1_score: mean_of(&runs, |m| m.f1_score),
        precision: mean_of(&runs, |m| m.precision),
        recall: mean_of(&runs, |m| m.recall),
        zero_one_loss: mean_of(&runs, |m| m.zero_one_loss),
    };
    Ok(EvalReport {
        run_count: runs.len(),
        runs,
        mean,
        split_fraction: config.split_fraction,
    })
}

/// Metric rows by drug columns.
pub fn write_eval_table(writer: impl std::io::Write, reports: &[(String, EvalReport)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["metric".to_string()];
    header.extend(reports.iter().map(|(d, _)| d.clone()));
    w.write_record(&header)?;
    for row in 0..6 {
        let mut record = vec![reports.first().map_or("", |(_, r)| r.mean_rows()[row].0).to_string()];
        record.extend(reports.iter().map(|(_, r)| r.mean_rows()[row].1.to_string()));
        w.write_record(&record)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// Every run of every drug, including the undefined-metric flags.
pub fn write_eval_runs(writer: impl std::io::Write, reports: &[(String, EvalReport)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "drug",
        "run",
        "redraws",
        "train_size",
        "test_size",
        "accuracy",
        "average_precision",
        "f1_score",
        "precision",
        "recall",
        "zero_one_loss",
        "precision_undefined",
        "recall_undefined",
        "f1_undefined",
    ])?;
    for (drug, report) in reports {
        for r in &report.runs {
            let m = &r.metrics;
            w.write_record([
                drug.clone(),
                r.run.to_string(),
                r.redraws.to_string(),
                r.train_size.to_string(),
                r.test_size.to_string(),
                m.accuracy.to_string(),
                m.average_precision.to_string(),
                m.f1_score.to_string(),
                m.precision.to_string(),
                m.recall.to_string(),
                m.zero_one_loss.to_string(),
                m.precision_undefined.to_string(),
                m.recall_undefined.to_string(),
                m.f1_undefined.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn eval_table_text(reports: &[(String, EvalReport)]) -> String {
    let mut out = String::new();
    write!(out, "{:<20}", "metric").unwrap();
    for (drug, _) in reports {
        write!(out, " {drug:>12}").unwrap();
    }
    out.push('\n');
    for row in 0..6 {
        let name = reports.first().map_or("", |(_, r)| r.mean_rows()[row].0);
        write!(out, "{name:<20}").unwrap();
        for (_, r) in reports {
            write!(out, " {:>12.4}", r.mean_rows()[row].1).unwrap();
        }
        out.push('\n');
    }
    out
}
