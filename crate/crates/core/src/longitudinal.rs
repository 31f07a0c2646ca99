//! Longitudinal pitch balance of the two-balloon hull with a pivoting tail.
//!
//! Moments are taken about the buoyancy centre O (where the balloons join).
//! Lengths are normalised by the balloon diameter D and masses by the body
//! mass M, so a residual R is a moment in units of M·g·D. R > 0 is a net
//! nose-up moment; θ > 0 is nose-up and β > 0 swings the tail up.
//!
//! R(θ, β, V) = σ(cos θ + x_T cos(β − θ)) + sin β · F_D(V)/(M g) · x_T
//!              − (x_B cos θ + y_B sin θ)
//!
//! The tail drag term treats the tail as a flat plate whose frontal area is
//! projected by sin|β| and whose moment sign follows the deflection, which
//! gives the ±x_T sin θ balance at β = ±90° exactly.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::roots::{bisect, sign_changes};

pub const STANDARD_GRAVITY: f64 = 9.81;
pub const SEA_LEVEL_AIR_DENSITY: f64 = 1.225;

/// Search interval for equilibrium pitch, degrees.
pub const PITCH_SEARCH_LIMIT_DEG: f64 = 89.0;
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;
const ANGLE_TOLERANCE_DEG: f64 = 1e-12;
const MAX_BISECTION_STEPS: usize = 200;
const SCAN_STEPS: usize = 356;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LongitudinalParams {
    /// Body CG ahead of O, normalised by D.
    pub x_b: f64,
    /// Body CG below O, normalised by D.
    pub y_b: f64,
    /// Tail CG behind O, normalised by D.
    pub x_t: f64,
    /// Tail-to-body mass ratio m/M.
    pub sigma: f64,
    pub diameter_m: f64,
    /// Mass M of everything except the tail. Not reported for the vehicle;
    /// a configuration default.
    pub body_mass_kg: f64,
    /// Not reported for the vehicle; a configuration default.
    pub tail_width_m: f64,
    pub drag_coefficient: f64,
    pub air_density: f64,
    pub gravity: f64,
}

impl Default for LongitudinalParams {
    fn default() -> Self {
        let (sigma, x_t) = (0.05, 0.5);
        Self {
            // 0.075 up to rounding; computed so the level trim residual is exactly zero
            x_b: balance_offset(sigma, x_t),
            y_b: 0.2,
            x_t,
            sigma,
            diameter_m: 0.914,
            body_mass_kg: 0.30,
            tail_width_m: 0.15,
            drag_coefficient: 1.5,
            air_density: SEA_LEVEL_AIR_DENSITY,
            gravity: STANDARD_GRAVITY,
        }
    }
}

impl LongitudinalParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("x_t", self.x_t),
            ("diameter_m", self.diameter_m),
            ("body_mass_kg", self.body_mass_kg),
            ("tail_width_m", self.tail_width_m),
            ("drag_coefficient", self.drag_coefficient),
            ("air_density", self.air_density),
            ("gravity", self.gravity),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(
                    "longitudinal parameter",
                    format!("{name} = {v} must be > 0"),
                ));
            }
        }
        if !(self.sigma > 0.0 && self.sigma < 1.0) {
            return Err(invalid(
                "longitudinal parameter",
                format!("sigma = {} not in (0, 1)", self.sigma),
            ));
        }
        if !(self.x_b.is_finite() && self.y_b.is_finite()) {
            return Err(invalid(
                "longitudinal parameter",
                "x_b and y_b must be finite",
            ));
        }
        Ok(())
    }

    /// Tail mass m = σM.
    pub fn tail_mass_kg(&self) -> f64 {
        self.sigma * self.body_mass_kg
    }

    /// Flat-plate tail area A = w_T · 2X_T.
    pub fn tail_area_m2(&self) -> f64 {
        self.tail_width_m * 2.0 * self.x_t * self.diameter_m
    }

    /// Scale that turns a normalised residual into N·m.
    pub fn moment_scale_nm(&self) -> f64 {
        self.body_mass_kg * self.gravity * self.diameter_m
    }

    /// Forward speed at which F_D / (M g) equals `ratio`.
    pub fn speed_for_drag_ratio(&self, ratio: f64) -> f64 {
        (2.0 * ratio * self.body_mass_kg * self.gravity
            / (self.drag_coefficient * self.tail_area_m2() * self.air_density))
            .sqrt()
    }
}

/// Body CG offset that trims the vehicle level with the tail straight:
/// x_B = σ(1 + x_T).
pub fn balance_offset(sigma: f64, x_t: f64) -> f64 {
    sigma * (1.0 + x_t)
}

/// Flat-plate tail drag F_D = C_d·A·ρ·V²/2, newtons.
pub fn drag_force(speed_mps: f64, params: &LongitudinalParams) -> f64 {
    params.drag_coefficient * params.tail_area_m2() * params.air_density * speed_mps * speed_mps
        / 2.0
}

/// Normalised moment residual; zero at pitch equilibrium.
pub fn moment_residual(
    theta_deg: f64,
    beta_deg: f64,
    speed_mps: f64,
    params: &LongitudinalParams,
) -> f64 {
    residual_with_tail_arm(theta_deg, beta_deg, params.x_t, speed_mps, params)
}

/// Residual with the tail's gravity arm replaced by `tail_arm` (normalised).
/// The drag arm stays x_T.
pub(crate) fn residual_with_tail_arm(
    theta_deg: f64,
    beta_deg: f64,
    tail_arm: f64,
    speed_mps: f64,
    p: &LongitudinalParams,
) -> f64 {
    let theta = theta_deg.to_radians();
    let beta = beta_deg.to_radians();
    let (sin_t, cos_t) = theta.sin_cos();
    let tail = p.sigma * (cos_t + tail_arm * (beta - theta).cos());
    let drag = if speed_mps == 0.0 || beta_deg == 0.0 {
        0.0
    } else {
        beta.sin() * drag_force(speed_mps, p) / (p.body_mass_kg * p.gravity) * p.x_t
    };
    let body = p.x_b * cos_t + p.y_b * sin_t;
    tail + drag - body
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PitchSolution {
    pub theta_deg: f64,
    pub residual: f64,
    /// Scan interval (degrees) that bracketed the root.
    pub bracket: (f64, f64),
}

/// Equilibrium pitch for tail angle `beta_deg` at forward speed `speed_mps`.
///
/// Scans θ over (−89°, 89°) for sign changes of the residual, refines each by
/// bisection, and returns the root nearest level.
pub fn equilibrium_pitch(
    beta_deg: f64,
    speed_mps: f64,
    params: &LongitudinalParams,
) -> Result<PitchSolution> {
    if !(beta_deg.abs() <= 90.0) {
        return Err(invalid(
            "tail angle",
            format!("{beta_deg} deg not in [-90, 90]"),
        ));
    }
    if !(speed_mps >= 0.0 && speed_mps.is_finite()) {
        return Err(invalid(
            "forward speed",
            format!("{speed_mps} m/s must be >= 0"),
        ));
    }
    let r = |theta: f64| moment_residual(theta, beta_deg, speed_mps, params);
    let lim = PITCH_SEARCH_LIMIT_DEG;

    let mut best: Option<PitchSolution> = None;
    for (lo, hi) in sign_changes(r, -lim, lim, SCAN_STEPS) {
        let (theta, residual) = bisect(
            r,
            lo,
            hi,
            RESIDUAL_TOLERANCE,
            ANGLE_TOLERANCE_DEG,
            MAX_BISECTION_STEPS,
        )?;
        if theta.abs() >= lim {
            continue;
        }
        let candidate = PitchSolution {
            theta_deg: theta,
            residual,
            bracket: (lo, hi),
        };
        if best.is_none_or(|b| theta.abs() < b.theta_deg.abs()) {
            best = Some(candidate);
        }
    }
    best.ok_or(Error::NoEquilibrium {
        beta_deg,
        speed_mps,
    })
}

/// One row of a pitch or speed sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub beta_deg: f64,
    pub v_mps: f64,
    /// NaN when no equilibrium was found.
    pub theta_deg: f64,
    pub converged: bool,
}

impl CurvePoint {
    fn solve(beta_deg: f64, v_mps: f64, params: &LongitudinalParams) -> Self {
        let solution = equilibrium_pitch(beta_deg, v_mps, params).ok();
        Self {
            beta_deg,
            v_mps,
            theta_deg: solution.map_or(f64::NAN, |s| s.theta_deg),
            converged: solution.is_some(),
        }
    }
}

/// Equilibrium pitch against tail angle at a fixed speed.
pub fn pitch_curve(
    betas_deg: &[f64],
    speed_mps: f64,
    params: &LongitudinalParams,
) -> Vec<CurvePoint> {
    betas_deg
        .iter()
        .map(|&b| CurvePoint::solve(b, speed_mps, params))
        .collect()
}

/// Equilibrium pitch against forward speed at a fixed tail angle.
pub fn speed_curve(
    beta_deg: f64,
    speeds_mps: &[f64],
    params: &LongitudinalParams,
) -> Vec<CurvePoint> {
    speeds_mps
        .iter()
        .map(|&v| CurvePoint::solve(beta_deg, v, params))
        .collect()
}

/// Inclusive range `start, start + step, ..., end` without float drift.
pub fn linspace_step(start: f64, end: f64, step: f64) -> Vec<f64> {
    let n = ((end - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| start + i as f64 * step).collect()
}

pub fn write_curve_csv(points: &[CurvePoint], writer: impl Write) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["beta_deg", "v_mps", "theta_deg", "converged"])?;
    for p in points {
        wtr.write_record([
            p.beta_deg.to_string(),
            p.v_mps.to_string(),
            if p.converged {
                format!("{:.6}", p.theta_deg)
            } else {
                "nan".into()
            },
            p.converged.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}
