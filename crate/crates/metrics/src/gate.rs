//! The sample quality gate: pass iff the metric report clears the
//! configured thresholds; on pass, retain the samples scoring at or above
//! the median discriminator score.

use serde::{Deserialize, Serialize};

use crate::error::{MetricError, Result};
use crate::report::MetricReport;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GateThresholds {
    pub fid_max: f64,
    pub precision_min: f64,
}

impl Default for GateThresholds {
    fn default() -> Self {
        // Permissive defaults: the gate is a policy knob, not a tuned claim.
        GateThresholds { fid_max: f64::INFINITY, precision_min: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum GateOutcome {
    /// Indices of retained samples (score >= median), ascending.
    Pass { retained: Vec<usize> },
    /// The loop should continue refining the generator.
    Fail { fid: f64, precision: f64 },
}

/// Interpolated median (mean of the two middle order statistics for even
/// counts), so distinct scores retain exactly `ceil(n/2)` samples.
pub fn median(scores: &[f64]) -> f64 {
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

pub fn quality_gate(
    scores: &[f64],
    report: &MetricReport,
    thresholds: &GateThresholds,
) -> Result<GateOutcome> {
    if scores.is_empty() {
        return Err(MetricError::Invalid("quality gate needs at least one sample score".into()));
    }
    if !thresholds.precision_min.is_finite() && thresholds.precision_min != 0.0 {
        return Err(MetricError::Invalid("precision_min must be finite".into()));
    }
    let pass = report.fid <= thresholds.fid_max && report.precision >= thresholds.precision_min;
    if !pass {
        return Ok(GateOutcome::Fail { fid: report.fid, precision: report.precision });
    }
    let med = median(scores);
    let retained = scores
        .iter()
        .enumerate()
        .filter_map(|(i, &s)| (s >= med).then_some(i))
        .collect();
    Ok(GateOutcome::Pass { retained })
}
