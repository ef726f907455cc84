//! Evaluation: SNR improvement, confusion-derived metrics, ROC/AUC and
//! CSV emitters. Grad-CAM and saliency live in [`crate::cnn::explain`] next
//! to the network they differentiate.

mod confusion;
mod report;
mod roc;
mod snr;

pub use confusion::{class_metrics, confusion, ClassMetrics, ConfusionMatrix};
pub use report::{write_confusion_csv, write_metrics_csv, write_roc_csv, write_snr_csv};
pub use roc::{roc_auc, roc_binary, RocCurve};
pub use snr::{snr_imp, snr_sample, SnrReport, SnrSample, SNR_CAP_DB};
