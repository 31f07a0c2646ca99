//! Endurance and range of the flapping vehicle and its propeller-driven twin.
//!
//! Flapping endurance is speed independent. Propeller endurance follows
//! E(V) = C / (P0 + k·V³): an idle draw plus an aerodynamic cubic, with P0
//! and k fitted to the measured (speed, endurance) anchors.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// 2s LiPo, 300 mAh at 7.4 V nominal (7.4 × 0.3 × 3600).
pub const DEFAULT_BATTERY_J: f64 = 7992.0;
pub const FLAPPING_ENDURANCE_S: f64 = 2200.0;
pub const FLAPPING_MAX_SPEED_MPS: f64 = 1.1;
/// Not measured; the propeller vehicle is only known to be much faster.
pub const PROPELLER_MAX_SPEED_MPS: f64 = 2.4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PowerKind {
    Flapping,
    Propeller,
}

impl std::fmt::Display for PowerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PowerKind::Flapping => "flapping",
            PowerKind::Propeller => "propeller",
        })
    }
}

/// A measured (speed, endurance) point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub speed_mps: f64,
    pub endurance_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerModel {
    pub kind: PowerKind,
    pub battery_j: f64,
    pub max_speed_mps: f64,
    /// Flapping: endurance at any speed.
    pub flapping_endurance_s: f64,
    /// Propeller: points the power law is fitted through.
    pub anchors: Vec<Anchor>,
}

/// Fitted propeller power law, watts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerLaw {
    pub idle_w: f64,
    pub cubic_w_per_m3s3: f64,
}

impl PowerLaw {
    pub fn power_w(&self, speed_mps: f64) -> f64 {
        self.idle_w + self.cubic_w_per_m3s3 * speed_mps.powi(3)
    }

    /// Speed of maximum range, where d(V / P(V))/dV = 0.
    pub fn best_range_speed(&self) -> f64 {
        (self.idle_w / (2.0 * self.cubic_w_per_m3s3)).cbrt()
    }
}

impl PowerModel {
    pub fn flapping() -> Self {
        Self {
            kind: PowerKind::Flapping,
            battery_j: DEFAULT_BATTERY_J,
            max_speed_mps: FLAPPING_MAX_SPEED_MPS,
            flapping_endurance_s: FLAPPING_ENDURANCE_S,
            anchors: vec![Anchor {
                speed_mps: FLAPPING_MAX_SPEED_MPS,
                endurance_s: FLAPPING_ENDURANCE_S,
            }],
        }
    }

    /// Propeller twin: 2400 s at 0.6 m/s and 162 s at full speed.
    pub fn propeller() -> Self {
        Self::propeller_with_max_speed(PROPELLER_MAX_SPEED_MPS)
    }

    pub fn propeller_with_max_speed(max_speed_mps: f64) -> Self {
        Self {
            kind: PowerKind::Propeller,
            battery_j: DEFAULT_BATTERY_J,
            max_speed_mps,
            flapping_endurance_s: FLAPPING_ENDURANCE_S,
            anchors: vec![
                Anchor {
                    speed_mps: 0.6,
                    endurance_s: 2400.0,
                },
                Anchor {
                    speed_mps: max_speed_mps,
                    endurance_s: 162.0,
                },
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.battery_j > 0.0 && self.max_speed_mps > 0.0) {
            return Err(invalid("power model", "battery and max speed must be > 0"));
        }
        match self.kind {
            PowerKind::Flapping => {
                if !(self.flapping_endurance_s > 0.0) {
                    return Err(invalid("power model", "flapping endurance must be > 0"));
                }
            }
            PowerKind::Propeller => {
                if self.anchors.len() < 2 {
                    return Err(invalid(
                        "power model",
                        "propeller needs at least two anchors",
                    ));
                }
                if self
                    .anchors
                    .iter()
                    .any(|a| !(a.endurance_s > 0.0 && a.speed_mps > 0.0))
                {
                    return Err(invalid(
                        "power model",
                        "anchor speeds and endurances must be > 0",
                    ));
                }
                if self
                    .anchors
                    .windows(2)
                    .any(|w| w[1].speed_mps <= w[0].speed_mps)
                {
                    return Err(invalid(
                        "power model",
                        "anchor speeds must be strictly increasing",
                    ));
                }
                let law = self.fit_power_law()?;
                if !(law.idle_w >= 0.0 && law.cubic_w_per_m3s3 > 0.0) {
                    return Err(invalid(
                        "power model",
                        format!("anchors give non-physical power law {law:?}"),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Least-squares fit of P = P0 + k·V³ to the anchors' mean power
    /// C / E. Exact when there are two anchors.
    pub fn fit_power_law(&self) -> Result<PowerLaw> {
        let n = self.anchors.len();
        if n < 2 {
            return Err(invalid("power model", "need at least two anchors to fit"));
        }
        let xs: Vec<f64> = self.anchors.iter().map(|a| a.speed_mps.powi(3)).collect();
        let ys: Vec<f64> = self
            .anchors
            .iter()
            .map(|a| self.battery_j / a.endurance_s)
            .collect();
        let mean_x = xs.iter().sum::<f64>() / n as f64;
        let mean_y = ys.iter().sum::<f64>() / n as f64;
        let sxy: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (x - mean_x) * (y - mean_y))
            .sum();
        let sxx: f64 = xs.iter().map(|x| (x - mean_x).powi(2)).sum();
        if sxx == 0.0 {
            return Err(invalid("power model", "anchor speeds must differ"));
        }
        let k = sxy / sxx;
        Ok(PowerLaw {
            idle_w: mean_y - k * mean_x,
            cubic_w_per_m3s3: k,
        })
    }

    /// Operating time on a full battery at `speed_mps`, seconds.
    pub fn endurance(&self, speed_mps: f64) -> Result<f64> {
        if !(speed_mps > 0.0 && speed_mps <= self.max_speed_mps + 1e-12) {
            return Err(Error::OutOfRange {
                what: "speed_mps",
                value: speed_mps,
                low: 0.0,
                high: self.max_speed_mps,
            });
        }
        match self.kind {
            PowerKind::Flapping => Ok(self.flapping_endurance_s),
            PowerKind::Propeller => {
                let law = self.fit_power_law()?;
                Ok(self.battery_j / law.power_w(speed_mps))
            }
        }
    }

    /// Speeds at which this vehicle was actually flown.
    pub fn tested_speeds(&self) -> Vec<f64> {
        self.anchors.iter().map(|a| a.speed_mps).collect()
    }
}

/// Range = endurance × speed.
pub fn range(endurance_s: f64, speed_mps: f64) -> Result<f64> {
    if !(endurance_s >= 0.0 && speed_mps >= 0.0) {
        return Err(invalid(
            "range inputs",
            format!("endurance {endurance_s} s and speed {speed_mps} m/s must be >= 0"),
        ));
    }
    Ok(endurance_s * speed_mps)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RangeRow {
    pub speed_mps: f64,
    /// NaN when the speed is outside the model's domain.
    pub endurance_s: f64,
    pub range_m: f64,
    pub kind: PowerKind,
    pub in_domain: bool,
}

pub fn range_curve(model: &PowerModel, speeds_mps: &[f64]) -> Vec<RangeRow> {
    speeds_mps
        .iter()
        .map(|&v| match model.endurance(v) {
            Ok(e) => RangeRow {
                speed_mps: v,
                endurance_s: e,
                range_m: e * v,
                kind: model.kind,
                in_domain: true,
            },
            Err(_) => RangeRow {
                speed_mps: v,
                endurance_s: f64::NAN,
                range_m: f64::NAN,
                kind: model.kind,
                in_domain: false,
            },
        })
        .collect()
}

/// Best in-domain row by range; earliest wins ties.
pub fn max_range(rows: &[RangeRow]) -> Option<RangeRow> {
    rows.iter()
        .filter(|r| r.in_domain)
        .fold(None, |best: Option<RangeRow>, r| match best {
            Some(b) if b.range_m >= r.range_m => Some(b),
            _ => Some(*r),
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RangeComparison {
    pub flapping: RangeRow,
    pub propeller: RangeRow,
    /// flapping / propeller maximum range.
    pub ratio: f64,
}

/// Compares maximum range over the speeds each vehicle was flown at.
pub fn compare_tested(flapping: &PowerModel, propeller: &PowerModel) -> Result<RangeComparison> {
    let f = max_range(&range_curve(flapping, &flapping.tested_speeds()))
        .ok_or_else(|| Error::InsufficientData("flapping model has no tested speeds".into()))?;
    let p = max_range(&range_curve(propeller, &propeller.tested_speeds()))
        .ok_or_else(|| Error::InsufficientData("propeller model has no tested speeds".into()))?;
    Ok(RangeComparison {
        flapping: f,
        propeller: p,
        ratio: f.range_m / p.range_m,
    })
}

pub fn write_range_csv(rows: &[RangeRow], writer: impl Write) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["speed_mps", "endurance_s", "range_m", "model"])?;
    for r in rows {
        wtr.write_record([
            r.speed_mps.to_string(),
            fmt_or_nan(r.endurance_s),
            fmt_or_nan(r.range_m),
            r.kind.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

fn fmt_or_nan(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{:.3}", v)
    }
}
