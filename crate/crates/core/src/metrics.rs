//! Error metrics and run artifacts: training history CSV, JSON report, and the
//! helpers the CLI uses to inspect a finished run directory.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::loss::LossBreakdown;
use crate::{Error, Result};

/// ||pred - exact||_2 / ||exact||_2 over matched samples. A zero reference
/// with a nonzero prediction reports infinity rather than dividing by zero.
pub fn relative_l2(pred: &[f64], exact: &[f64]) -> f64 {
    assert_eq!(pred.len(), exact.len(), "metric length mismatch");
    let mut num = 0.0;
    let mut den = 0.0;
    for (p, e) in pred.iter().zip(exact) {
        num += (p - e) * (p - e);
        den += e * e;
    }
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (num / den).sqrt()
    }
}

pub fn l_inf(pred: &[f64], exact: &[f64]) -> f64 {
    assert_eq!(pred.len(), exact.len(), "metric length mismatch");
    pred.iter().zip(exact).map(|(p, e)| (p - e).abs()).fold(0.0, f64::max)
}

/// One sampled row of the training trajectory.
#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
pub struct HistoryRecord {
    pub iter: usize,
    pub time_s: f64,
    pub loss_total: f64,
    pub loss_f: f64,
    pub loss_b: f64,
    pub loss_i: f64,
    pub rel_l2: f64,
    pub l_inf: f64,
}

pub const HISTORY_HEADER: &str = "iter,time_s,loss_total,loss_F,loss_B,loss_I,rel_l2,l_inf";

pub fn write_history_csv(path: &Path, records: &[HistoryRecord]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{HISTORY_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.iter, r.time_s, r.loss_total, r.loss_f, r.loss_b, r.loss_i, r.rel_l2, r.l_inf
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Iteration numbers must strictly increase and timestamps must not go back.
pub fn validate_history(records: &[HistoryRecord]) -> Result<()> {
    for w in records.windows(2) {
        if w[1].iter <= w[0].iter {
            return Err(Error::Format(format!(
                "history iterations not increasing: {} then {}",
                w[0].iter, w[1].iter
            )));
        }
        if w[1].time_s < w[0].time_s {
            return Err(Error::Format(format!(
                "history time went backwards: {} then {}",
                w[0].time_s, w[1].time_s
            )));
        }
    }
    Ok(())
}

/// Everything a finished training run leaves behind, minus the big arrays:
/// those live in history.csv and checkpoint.bin next to the report.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct RunReport {
    /// Echo of the resolved run configuration.
    pub config: serde_json::Value,
    pub problem: String,
    pub constraint_mode: String,
    pub activation: String,
    pub width: usize,
    pub seed: u64,
    pub parameter_count: usize,
    pub prng: String,
    pub final_loss: LossBreakdown,
    pub rel_l2: f64,
    pub l_inf: f64,
    pub wall_time_s: f64,
    pub history_len: usize,
    pub checkpoint_file: String,
    pub history_file: String,
}

pub fn write_report_json(path: &Path, report: &RunReport) -> Result<()> {
    let text = serde_json::to_string_pretty(report)
        .map_err(|e| Error::Format(format!("report serialization failed: {e}")))?;
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_report_json(path: &Path) -> Result<RunReport> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Format(format!("report parse failed: {e}")))
}
