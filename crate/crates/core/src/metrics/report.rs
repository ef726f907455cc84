//! CSV emitters for evaluation outputs. Absent ratios become empty cells.

use std::path::Path;

use crate::error::Result;
use crate::metrics::{ClassMetrics, ConfusionMatrix, RocCurve, SnrReport};

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

pub fn write_confusion_csv(path: &Path, cm: &ConfusionMatrix) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["true\\pred".to_string()];
    header.extend(cm.class_names.iter().cloned());
    w.write_record(&header)?;
    for (name, row) in cm.class_names.iter().zip(&cm.counts) {
        let mut rec = vec![name.clone()];
        rec.extend(row.iter().map(u64::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_metrics_csv(path: &Path, metrics: &[ClassMetrics]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "class",
        "tp",
        "tn",
        "fp",
        "fn",
        "accuracy",
        "precision",
        "recall",
        "specificity",
        "f1",
        "ppv",
        "npv",
    ])?;
    for m in metrics {
        w.write_record([
            m.name.clone(),
            m.tp.to_string(),
            m.tn.to_string(),
            m.fp.to_string(),
            m.fn_.to_string(),
            cell(m.accuracy),
            cell(m.precision),
            cell(m.recall),
            cell(m.specificity),
            cell(m.f1),
            cell(m.ppv()),
            cell(m.npv),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Long format: one row per curve point, AUC repeated on each row.
pub fn write_roc_csv(path: &Path, names: &[String], curves: &[RocCurve]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["class", "fpr", "tpr", "auc"])?;
    for c in curves {
        let name = names.get(c.class).cloned().unwrap_or_else(|| c.class.to_string());
        for &(fpr, tpr) in &c.points {
            w.write_record([
                name.clone(),
                format!("{fpr:.6}"),
                format!("{tpr:.6}"),
                format!("{:.6}", c.auc),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_snr_csv(path: &Path, report: &SnrReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["sample", "snr_in_db", "snr_out_db", "snr_imp_db", "exact_recovery"])?;
    for (i, s) in report.samples.iter().enumerate() {
        w.write_record([
            i.to_string(),
            format!("{:.6}", s.snr_in),
            format!("{:.6}", s.snr_out),
            format!("{:.6}", s.snr_imp),
            s.exact_recovery.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
