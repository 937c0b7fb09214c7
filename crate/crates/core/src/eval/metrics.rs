use std::ops::AddAssign;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Counts for the 30-day task; positive means readmitted within 30 days.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn record(&mut self, actual: bool, predicted: bool) {
        match (actual, predicted) {
            (true, true) => self.tp += 1,
            (false, true) => self.fp += 1,
            (false, false) => self.tn += 1,
            (true, false) => self.fn_ += 1,
        }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (bool, bool)>) -> Self {
        let mut m = ConfusionMatrix::default();
        for (a, p) in pairs {
            m.record(a, p);
        }
        m
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn positives(&self) -> u64 {
        self.tp + self.fn_
    }

    pub fn negatives(&self) -> u64 {
        self.fp + self.tn
    }

    pub fn scaled(&self, by: u64) -> Self {
        ConfusionMatrix {
            tp: self.tp * by,
            fp: self.fp * by,
            tn: self.tn * by,
            fn_: self.fn_ * by,
        }
    }

    pub fn metrics(&self) -> Metrics {
        metrics(self)
    }
}

impl AddAssign for ConfusionMatrix {
    fn add_assign(&mut self, other: Self) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.tn += other.tn;
        self.fn_ += other.fn_;
    }
}

/// Derived rates. A rate whose denominator is zero is `None`, not zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub recall: Option<f64>,
    pub precision: Option<f64>,
    pub accuracy: Option<f64>,
    pub specificity: Option<f64>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn metrics(m: &ConfusionMatrix) -> Metrics {
    Metrics {
        recall: ratio(m.tp, m.tp + m.fn_),
        precision: ratio(m.tp, m.tp + m.fp),
        accuracy: ratio(m.tp + m.tn, m.total()),
        specificity: ratio(m.tn, m.tn + m.fp),
    }
}

/// Majority count over minority count. A problem counts as imbalanced
/// above 2.
pub fn imbalance_ratio(majority: usize, minority: usize) -> Result<f64> {
    if minority == 0 {
        return Err(Error::Data("imbalance ratio needs a non-empty minority class".into()));
    }
    Ok(majority as f64 / minority as f64)
}

pub fn is_imbalanced(ratio: f64) -> bool {
    ratio > 2.0
}
