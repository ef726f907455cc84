use crate::error::{Error, Result};

/// One-vs-rest ROC of a single class.
#[derive(Clone, Debug, PartialEq)]
pub struct RocCurve {
    pub class: usize,
    /// `(fpr, tpr)` from `(0, 0)` to `(1, 1)`, non-decreasing in both.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

/// Threshold sweep over the distinct scores of one class, highest first.
/// Tied scores enter together, which draws the diagonal segment a tie implies.
pub fn roc_binary(scores: &[f64], positive: &[bool]) -> Result<(Vec<(f64, f64)>, f64)> {
    if scores.len() != positive.len() {
        return Err(Error::dim("scores and truths differ in length"));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Numeric("non-finite score".into()));
    }
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::DegenerateCurve(format!(
            "{n_pos} positives and {n_neg} negatives"
        )));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if positive[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / n_neg as f64, tp as f64 / n_pos as f64));
    }
    let auc = points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum();
    Ok((points, auc))
}

/// Per-class one-vs-rest curves from probability rows.
pub fn roc_auc(scores: &[Vec<f32>], trues: &[usize]) -> Result<Vec<RocCurve>> {
    if scores.len() != trues.len() {
        return Err(Error::dim(format!(
            "{} score rows vs {} truths",
            scores.len(),
            trues.len()
        )));
    }
    let k = scores.first().map_or(0, Vec::len);
    if k < 2 {
        return Err(Error::DegenerateCurve("need at least two classes".into()));
    }
    for row in scores {
        if row.len() != k {
            return Err(Error::dim("ragged score rows"));
        }
        let s: f64 = row.iter().map(|&v| v as f64).sum();
        if row.iter().any(|v| !(0.0..=1.0).contains(v)) || (s - 1.0).abs() > 1e-3 {
            return Err(Error::Numeric(format!("not a probability vector: {row:?}")));
        }
    }
    if let Some(&t) = trues.iter().find(|&&t| t >= k) {
        return Err(Error::Data(format!("label {t} outside {k} classes")));
    }
    (0..k)
        .map(|c| {
            let s: Vec<f64> = scores.iter().map(|r| r[c] as f64).collect();
            let pos: Vec<bool> = trues.iter().map(|&t| t == c).collect();
            let (points, auc) = roc_binary(&s, &pos)?;
            Ok(RocCurve { class: c, points, auc })
        })
        .collect()
}
