//! Degree of emergence across a checkpoint series.
//!
//! `E = (w(t) / w(0)) * ln(alpha0(0) / alpha0(t))`: the relative change in
//! spectrum width times the log-ratio of the baseline and current `alpha0`.
//! Natural logarithms throughout.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: u64,
    pub alpha0: f64,
    pub width: f64,
    pub alpha0_var: Option<f64>,
    pub width_var: Option<f64>,
}

impl EpochRecord {
    pub fn new(epoch: u64, alpha0: f64, width: f64) -> Self {
        EpochRecord {
            epoch,
            alpha0,
            width,
            alpha0_var: None,
            width_var: None,
        }
    }
}

pub fn degree_of_emergence(baseline: &EpochRecord, current: &EpochRecord) -> Result<f64> {
    if !(baseline.width > 0.0) {
        return Err(Error::Domain(format!(
            "baseline width must be positive, got {} at epoch {}",
            baseline.width, baseline.epoch
        )));
    }
    for r in [baseline, current] {
        if !(r.alpha0 > 0.0) {
            return Err(Error::Domain(format!(
                "alpha0 must be positive, got {} at epoch {}",
                r.alpha0, r.epoch
            )));
        }
    }
    if baseline == current {
        return Ok(0.0);
    }
    Ok(current.width / baseline.width * (baseline.alpha0 / current.alpha0).ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Baseline {
    #[default]
    Earliest,
    Epoch(u64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmergencePoint {
    pub record: EpochRecord,
    pub emergence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmergenceSeries {
    pub baseline: EpochRecord,
    pub points: Vec<EmergencePoint>,
}

/// Computes `E` for every record against the selected baseline.
///
/// Records must already be in strictly ascending epoch order.
pub fn emergence_series(records: &[EpochRecord], baseline: Baseline) -> Result<EmergenceSeries> {
    if records.is_empty() {
        return Err(Error::Degenerate("emergence series needs at least one record".into()));
    }
    if let Some(w) = records.windows(2).find(|w| w[0].epoch >= w[1].epoch) {
        return Err(Error::Ordering(format!(
            "epochs must be strictly ascending, found {} before {}",
            w[0].epoch, w[1].epoch
        )));
    }
    let base = match baseline {
        Baseline::Earliest => records[0],
        Baseline::Epoch(t) => *records
            .iter()
            .find(|r| r.epoch == t)
            .ok_or_else(|| Error::Data(format!("baseline epoch {t} is not in the series")))?,
    };
    let points = records
        .iter()
        .map(|r| {
            Ok(EmergencePoint {
                record: *r,
                emergence: degree_of_emergence(&base, r)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(EmergenceSeries {
        baseline: base,
        points,
    })
}
