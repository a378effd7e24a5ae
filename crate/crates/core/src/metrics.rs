//! Tracking and feeding-efficiency metrics over daily weight series.

use std::io::Write;

use crate::error::{Error, Result};
use crate::format::sig6;

fn check_pair(w: &[f64], w_d: &[f64]) -> Result<()> {
    if w.is_empty() {
        return Err(Error::invalid("series", "must not be empty"));
    }
    if w.len() != w_d.len() {
        return Err(Error::invalid(
            "series",
            format!("length mismatch: {} vs {}", w.len(), w_d.len()),
        ));
    }
    Ok(())
}

/// Feed conversion ratio: feed mass over weight gain.
pub fn fcr(total_feed: f64, final_w: f64, initial_w: f64) -> Result<f64> {
    if !(final_w > initial_w) {
        return Err(Error::invalid(
            "final_w",
            format!("FCR undefined without weight gain ({initial_w} -> {final_w})"),
        ));
    }
    Ok(total_feed / (final_w - initial_w))
}

/// Mean absolute percentage error, in percent.
///
/// The denominator is the achieved weight `w(i)`, not the reference.
pub fn mape(w: &[f64], w_d: &[f64]) -> Result<f64> {
    check_pair(w, w_d)?;
    if w.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::invalid("w", "achieved weights must be positive"));
    }
    let sum: f64 = w.iter().zip(w_d).map(|(a, d)| (a - d).abs() / a).sum();
    Ok(100.0 * sum / w.len() as f64)
}

pub fn mae(w: &[f64], w_d: &[f64]) -> Result<f64> {
    check_pair(w, w_d)?;
    let sum: f64 = w.iter().zip(w_d).map(|(a, d)| (a - d).abs()).sum();
    Ok(sum / w.len() as f64)
}

pub fn rmse(w: &[f64], w_d: &[f64]) -> Result<f64> {
    check_pair(w, w_d)?;
    let sum: f64 = w.iter().zip(w_d).map(|(a, d)| (a - d) * (a - d)).sum();
    Ok((sum / w.len() as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalReport {
    /// `None` when the fish did not gain weight.
    pub fcr: Option<f64>,
    /// percent
    pub mape: f64,
    /// grams
    pub mae: f64,
    /// grams
    pub rmse: f64,
    pub total_feed: f64,
    pub final_weight: f64,
    pub episodes_to_converge: usize,
    pub converged: bool,
}

impl EvalReport {
    pub const CSV_HEADER: &'static str =
        "training_episodes,mape_pct,mae_g,rmse_g,total_feed_g,final_weight_g,fcr,converged";

    /// Compares daily `w` against `w_d`; the first entry is the stocking day.
    pub fn from_series(
        w: &[f64],
        w_d: &[f64],
        total_feed: f64,
        episodes_to_converge: usize,
        converged: bool,
    ) -> Result<Self> {
        check_pair(w, w_d)?;
        // Day 0 is the shared stocking weight; compare culture days only.
        let (cw, cd) = if w.len() > 1 {
            (&w[1..], &w_d[1..])
        } else {
            (w, w_d)
        };
        let initial = w[0];
        let final_weight = *w.last().expect("non-empty");
        Ok(Self {
            fcr: fcr(total_feed, final_weight, initial).ok(),
            mape: mape(cw, cd)?,
            mae: mae(cw, cd)?,
            rmse: rmse(cw, cd)?,
            total_feed,
            final_weight,
            episodes_to_converge,
            converged,
        })
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.episodes_to_converge,
            sig6(self.mape),
            sig6(self.mae),
            sig6(self.rmse),
            sig6(self.total_feed),
            sig6(self.final_weight),
            self.fcr.map_or_else(|| "NA".to_string(), sig6),
            self.converged
        )
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", Self::CSV_HEADER)?;
        writeln!(out, "{}", self.csv_row())
    }

    /// Field-wise mean; FCR averages over the reports that define it.
    pub fn mean(reports: &[EvalReport]) -> Option<EvalReport> {
        if reports.is_empty() {
            return None;
        }
        let n = reports.len() as f64;
        let avg = |f: fn(&EvalReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
        let fcrs: Vec<f64> = reports.iter().filter_map(|r| r.fcr).collect();
        Some(EvalReport {
            fcr: (!fcrs.is_empty()).then(|| fcrs.iter().sum::<f64>() / fcrs.len() as f64),
            mape: avg(|r| r.mape),
            mae: avg(|r| r.mae),
            rmse: avg(|r| r.rmse),
            total_feed: avg(|r| r.total_feed),
            final_weight: avg(|r| r.final_weight),
            episodes_to_converge: (avg(|r| r.episodes_to_converge as f64)).round() as usize,
            converged: reports.iter().all(|r| r.converged),
        })
    }
}
