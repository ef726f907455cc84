use crate::error::{Error, Result};

/// `counts[true][predicted]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub class_names: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn n_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_sum(&self, class: usize) -> u64 {
        self.counts[class].iter().sum()
    }

    pub fn col_sum(&self, class: usize) -> u64 {
        self.counts.iter().map(|r| r[class]).sum()
    }

    pub fn diagonal(&self) -> u64 {
        (0..self.n_classes()).map(|i| self.counts[i][i]).sum()
    }

    /// Overall fraction on the diagonal; `None` when empty.
    pub fn accuracy(&self) -> Option<f64> {
        ratio(self.diagonal(), self.total())
    }

    /// Fraction of class `c` samples predicted as `c`.
    pub fn class_recall(&self, c: usize) -> Option<f64> {
        ratio(self.counts[c][c], self.row_sum(c))
    }

    pub fn with_names(mut self, names: &[String]) -> Result<Self> {
        if names.len() != self.n_classes() {
            return Err(Error::dim(format!(
                "{} names for {} classes",
                names.len(),
                self.n_classes()
            )));
        }
        self.class_names = names.to_vec();
        Ok(self)
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn confusion(trues: &[usize], preds: &[usize], n_classes: usize) -> Result<ConfusionMatrix> {
    if trues.len() != preds.len() {
        return Err(Error::dim(format!(
            "{} truths vs {} predictions",
            trues.len(),
            preds.len()
        )));
    }
    if n_classes == 0 {
        return Err(Error::param("confusion matrix needs at least one class"));
    }
    let mut counts = vec![vec![0u64; n_classes]; n_classes];
    for (&t, &p) in trues.iter().zip(preds) {
        if t >= n_classes || p >= n_classes {
            return Err(Error::Data(format!(
                "label pair ({t}, {p}) outside {n_classes} classes"
            )));
        }
        counts[t][p] += 1;
    }
    Ok(ConfusionMatrix {
        class_names: (0..n_classes).map(|i| format!("class{i}")).collect(),
        counts,
    })
}

/// One-vs-rest counts and the ratios derived from them. Ratios with a zero
/// denominator are `None`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassMetrics {
    pub name: String,
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub specificity: Option<f64>,
    pub f1: Option<f64>,
    pub npv: Option<f64>,
}

impl ClassMetrics {
    pub fn from_counts(name: &str, tp: u64, tn: u64, fp: u64, fn_: u64) -> Self {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = match (precision, recall) {
            (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
            _ => None,
        };
        Self {
            name: name.to_string(),
            tp,
            tn,
            fp,
            fn_,
            accuracy: ratio(tp + tn, tp + tn + fp + fn_),
            precision,
            recall,
            specificity: ratio(tn, tn + fp),
            f1,
            npv: ratio(tn, tn + fn_),
        }
    }

    pub fn ppv(&self) -> Option<f64> {
        self.precision
    }

    pub fn sensitivity(&self) -> Option<f64> {
        self.recall
    }
}

pub fn class_metrics(cm: &ConfusionMatrix) -> Result<Vec<ClassMetrics>> {
    if cm.n_classes() == 0 || cm.counts.iter().any(|r| r.len() != cm.n_classes()) {
        return Err(Error::dim("confusion matrix must be square and non-empty"));
    }
    let total = cm.total();
    Ok((0..cm.n_classes())
        .map(|c| {
            let tp = cm.counts[c][c];
            let fn_ = cm.row_sum(c) - tp;
            let fp = cm.col_sum(c) - tp;
            let tn = total - tp - fn_ - fp;
            ClassMetrics::from_counts(&cm.class_names[c], tp, tn, fp, fn_)
        })
        .collect())
}
