/// Threshold on the rogue probability for the thresholded metrics.
pub const DECISION_THRESHOLD: f64 = 0.5;

/// The six evaluation metrics of one test split. Rogue is the positive
/// class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub accuracy: f64,
    pub average_precision: f64,
    pub f1_score: f64,
    pub precision: f64,
    pub recall: f64,
    pub zero_one_loss: f64,
    /// No tweet was predicted rogue; `precision` is reported as 0.
    pub precision_undefined: bool,
    /// The split holds no rogue tweet; `recall` is reported as 0.
    pub recall_undefined: bool,
    /// Precision and recall are both 0; `f1_score` is reported as 0.
    pub f1_undefined: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn from_predictions(truth: &[bool], predicted: &[bool]) -> Self {
        let mut c = Confusion::default();
        for (&t, &p) in truth.iter().zip(predicted) {
            match (t, p) {
                (true, true) => c.tp += 1,
                (false, true) => c.fp += 1,
                (false, false) => c.tn += 1,
                (true, false) => c.fn_ += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Average precision as a step sum over the ranking by descending score,
/// `Σ (R_n − R_{n−1}) P_n`. Tied scores form one threshold, so the value does
/// not depend on the order of the input.
pub fn average_precision(truth: &[bool], scores: &[f64]) -> f64 {
    let positives = truth.iter().filter(|&&t| t).count();
    if positives == 0 {
        return 0.0;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let (mut tp, mut seen) = (0usize, 0usize);
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    let mut i = 0;
    while i < order.len() {
        let score = scores[order[i]];
        while i < order.len() && scores[order[i]] == score {
            tp += usize::from(truth[order[i]]);
            seen += 1;
            i += 1;
        }
        let recall = tp as f64 / positives as f64;
        let precision = tp as f64 / seen as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    ap
}

/// All six metrics from true classes and rogue probabilities.
pub fn compute_metrics(truth: &[bool], scores: &[f64]) -> Metrics {
    assert_eq!(truth.len(), scores.len(), "truth and scores must align");
    assert!(!truth.is_empty(), "no test examples");
    let predicted: Vec<bool> = scores.iter().map(|&s| s >= DECISION_THRESHOLD).collect();
    let c = Confusion::from_predictions(truth, &predicted);

    let accuracy = (c.tp + c.tn) as f64 / c.total() as f64;
    let precision_undefined = c.tp + c.fp == 0;
    let recall_undefined = c.tp + c.fn_ == 0;
    let precision = if precision_undefined {
        0.0
    } else {
        c.tp as f64 / (c.tp + c.fp) as f64
    };
    let recall = if recall_undefined {
        0.0
    } else {
        c.tp as f64 / (c.tp + c.fn_) as f64
    };
    let f1_undefined = precision + recall == 0.0;
    let f1_score = if f1_undefined {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };

    Metrics {
        accuracy,
        average_precision: average_precision(truth, scores),
        f1_score,
        precision,
        recall,
        zero_one_loss: 1.0 - accuracy,
        precision_undefined,
        recall_undefined,
        f1_undefined,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_classifier() {
        let truth = [true, false, true, false];
        let scores = [0.9, 0.1, 0.8, 0.3];
        let m = compute_metrics(&truth, &scores);
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.zero_one_loss, 0.0);
        assert_eq!(m.f1_score, 1.0);
        assert_eq!(m.average_precision, 1.0);
    }

    #[test]
    fn constant_negative_predictor() {
        let truth = [true, false, true, false];
        let m = compute_metrics(&truth, &[0.1; 4]);
        assert_eq!(m.accuracy, 0.5);
        assert_eq!(m.recall, 0.0);
        assert_eq!(m.precision, 0.0);
        assert!(m.precision_undefined);
        assert!(!m.recall_undefined);
        assert!(m.f1_undefined);
        // one tied threshold covering everything: precision 0.5 at recall 1
        assert_eq!(m.average_precision, 0.5);
    }

    #[test]
    fn hand_computed_average_precision() {
        // ranking: +, -, +, -, +
        let truth = [true, false, true, false, true];
        let scores = [0.9, 0.8, 0.7, 0.6, 0.5];
        let expected = (1.0 / 3.0) * 1.0 + (1.0 / 3.0) * (2.0 / 3.0) + (1.0 / 3.0) * (3.0 / 5.0);
        assert!((average_precision(&truth, &scores) - expected).abs() < 1e-15);
    }

    #[test]
    fn thresholded_counts() {
        let truth = [true, true, true, false, false];
        let scores = [0.9, 0.4, 0.6, 0.7, 0.2];
        let m = compute_metrics(&truth, &scores);
        assert_eq!(m.precision, 2.0 / 3.0);
        assert_eq!(m.recall, 2.0 / 3.0);
        assert_eq!(m.accuracy, 0.6);
        assert!((m.f1_score - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.zero_one_loss + m.accuracy, 1.0);
    }

    #[test]
    fn threshold_is_inclusive() {
        let m = compute_metrics(&[true, false], &[0.5, 0.49]);
        assert_eq!(m.accuracy, 1.0);
    }
}
