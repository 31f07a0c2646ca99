//! Instantaneous thrust over one flap cycle.
//!
//! Cycle phase 0 is the wing passing horizontal on the way up (position
//! A·sin(2π·phase)). The upstroke completes at phase 0.25 (+A) and the
//! downstroke at 0.75 (−A). Thrust peaks shortly after the downstroke
//! completes and dips slightly negative after the upstroke completes.
//!
//! Each lobe is a squared raised-cosine bump. Its spectrum decays fast
//! enough that uniform sampling at stand rates reproduces the cycle mean
//! to better than 1e-6.

use super::{FlapSetting, ThrustDataset, WingSpec};
use crate::error::Result;

pub const UPSTROKE_END_PHASE: f64 = 0.25;
pub const DOWNSTROKE_END_PHASE: f64 = 0.75;

const LAG: f64 = 0.10;
const PEAK_HALF_WIDTH: f64 = 0.30;
const TROUGH_HALF_WIDTH: f64 = 0.15;
/// Trough height relative to the peak.
const TROUGH_DEPTH: f64 = 0.15;
/// ∫ bump over one cycle = 3/4 · half-width.
const SHAPE_MEAN: f64 = 0.75 * (PEAK_HALF_WIDTH - TROUGH_DEPTH * TROUGH_HALF_WIDTH);

/// Periodic thrust shape scaled so that its cycle average is `mean_gf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThrustWaveform {
    mean_gf: f64,
}

impl ThrustWaveform {
    pub fn new(mean_gf: f64) -> Self {
        Self { mean_gf }
    }

    pub fn mean_gf(&self) -> f64 {
        self.mean_gf
    }

    /// Thrust at cycle phase `phase` (any real; wrapped into [0, 1)).
    pub fn at_phase(&self, phase: f64) -> f64 {
        let phase = phase.rem_euclid(1.0);
        let peak = bump(phase, DOWNSTROKE_END_PHASE + LAG, PEAK_HALF_WIDTH);
        let trough = bump(phase, UPSTROKE_END_PHASE + LAG, TROUGH_HALF_WIDTH);
        self.mean_gf / SHAPE_MEAN * (peak - TROUGH_DEPTH * trough)
    }

    /// Thrust at time `t_s` for a wing flapping at `frequency_hz` from phase 0.
    pub fn at_time(&self, t_s: f64, frequency_hz: f64) -> f64 {
        self.at_phase(t_s * frequency_hz)
    }

    /// Phase of the thrust maximum (for positive mean thrust).
    pub fn peak_phase() -> f64 {
        DOWNSTROKE_END_PHASE + LAG
    }
}

/// Instantaneous thrust of `wing` at `setting`, `t_s` seconds into flapping.
pub fn thrust_waveform(
    wing: &WingSpec,
    setting: &FlapSetting,
    t_s: f64,
    dataset: &ThrustDataset,
) -> Result<f64> {
    let mean = dataset.mean_thrust(wing, setting)?;
    Ok(ThrustWaveform::new(mean).at_time(t_s, setting.frequency_hz()))
}

fn bump(phase: f64, center: f64, half_width: f64) -> f64 {
    // shortest signed distance on the unit circle
    let d = (phase - center + 0.5).rem_euclid(1.0) - 0.5;
    if d.abs() >= half_width {
        return 0.0;
    }
    let c = 0.5 * (1.0 + (std::f64::consts::PI * d / half_width).cos());
    c * c
}
