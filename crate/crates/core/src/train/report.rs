use std::io::Write;

use super::experiments::csv_err;
use super::fit::EpochRecord;
use super::metrics::{ConfusionMatrix, RocPoint};
use crate::error::{Error, Result};

fn finish<W: Write>(mut w: csv::Writer<W>) -> Result<()> {
    w.flush().map_err(|e| Error::io("<csv>", e))
}

/// `epoch,loss,accuracy`, full precision so runs can be compared bitwise.
pub fn write_history_csv<W: Write>(history: &[EpochRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["epoch", "loss", "accuracy"]).map_err(csv_err)?;
    for r in history {
        w.write_record([r.epoch.to_string(), format!("{:e}", r.loss), format!("{:e}", r.accuracy)])
            .map_err(csv_err)?;
    }
    finish(w)
}

/// Header `actual\predicted,<class names...>`, one row per actual class.
pub fn write_confusion_csv<W: Write>(m: &ConfusionMatrix, class_names: &[String], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["actual\\predicted".to_string()];
    header.extend(class_names.iter().cloned());
    w.write_record(&header).map_err(csv_err)?;
    for (c, row) in m.rows().iter().enumerate() {
        let mut rec = vec![class_names.get(c).cloned().unwrap_or_else(|| c.to_string())];
        rec.extend(row.iter().map(u64::to_string));
        w.write_record(&rec).map_err(csv_err)?;
    }
    finish(w)
}

/// `fpr,tpr,threshold`.
pub fn write_roc_csv<W: Write>(points: &[RocPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["fpr", "tpr", "threshold"]).map_err(csv_err)?;
    for p in points {
        w.write_record([format!("{:e}", p.fpr), format!("{:e}", p.tpr), format!("{:e}", p.threshold)])
            .map_err(csv_err)?;
    }
    finish(w)
}
