//! Regenerates `data/thrust_dataset.csv`.
//!
//! Only the optimal wing's (90 deg, 1.25 Hz) cell is a measured number. Every
//! other row comes from a smooth trend model shaped to match the stand
//! observations: Stiff wings are at least as strong as Flexible ones except at
//! the narrowest width, heavy sweep back (gamma = 0.75) hurts Flexible wings,
//! the best frequency drops from 1.5 Hz at 37 cm width to 0.75 Hz at 61 cm,
//! and the best amplitude is 75 or 90 deg.
//!
//! cargo run -p flappy-core --example gen_dataset > crates/core/data/thrust_dataset.csv

use flappy_core::wing::{write_rows, Provenance, Stiffness, ThrustRow, TrailingEdge, WingSpec};

const LENGTH_CM: f64 = 53.0;
const AMPLITUDES: [f64; 5] = [0.0, 45.0, 60.0, 75.0, 90.0];
const FREQ_SPREAD_HZ: f64 = 0.6;

/// (stiffness, trailing edge, width cm, gamma, best-cell thrust gf)
const FAMILIES: &[(Stiffness, TrailingEdge, f64, f64, f64)] = {
    use Stiffness::*;
    use TrailingEdge::*;
    &[
        // sweep-back series, AR 1.0
        (Stiff, Concave, 53.0, 0.0, 15.2),
        (Stiff, Concave, 53.0, 0.25, 17.3),
        (Stiff, Concave, 53.0, 0.5, 16.4),
        (Stiff, Concave, 53.0, 0.75, 15.6),
        (Stiff, Straight, 53.0, 0.0, 15.8),
        (Stiff, Straight, 53.0, 0.25, 15.5),
        (Stiff, Straight, 53.0, 0.5, 15.4),
        (Stiff, Straight, 53.0, 0.75, 15.0),
        (Flexible, Concave, 53.0, 0.0, 14.1),
        (Flexible, Concave, 53.0, 0.25, 14.6),
        (Flexible, Concave, 53.0, 0.5, 14.0),
        (Flexible, Concave, 53.0, 0.75, 11.2),
        (Flexible, Straight, 53.0, 0.0, 13.8),
        (Flexible, Straight, 53.0, 0.25, 14.2),
        (Flexible, Straight, 53.0, 0.5, 13.5),
        (Flexible, Straight, 53.0, 0.75, 10.6),
        // aspect-ratio series, gamma 0.5 (AR 1.0 rows are above)
        (Stiff, Concave, 37.0, 0.5, 15.0),
        (Stiff, Concave, 45.0, 0.5, 15.9),
        (Stiff, Concave, 61.0, 0.5, 16.0),
        (Stiff, Straight, 37.0, 0.5, 14.6),
        (Stiff, Straight, 45.0, 0.5, 15.1),
        (Stiff, Straight, 61.0, 0.5, 15.2),
        (Flexible, Concave, 37.0, 0.5, 15.8),
        (Flexible, Concave, 45.0, 0.5, 15.0),
        (Flexible, Concave, 61.0, 0.5, 12.1),
        (Flexible, Straight, 37.0, 0.5, 15.5),
        (Flexible, Straight, 45.0, 0.5, 14.6),
        (Flexible, Straight, 61.0, 0.5, 11.6),
    ]
};

fn best_frequency_hz(width_cm: f64) -> f64 {
    match width_cm as i64 {
        37 => 1.50,
        45 | 53 => 1.25,
        _ => 0.75,
    }
}

/// Relative amplitude response; wide wings load the servo enough that 75 deg
/// beats 90 deg.
fn amplitude_gain(amplitude_deg: f64, width_cm: f64) -> f64 {
    let slope_above_75 = if width_cm > 60.0 { -0.03 } else { 0.08 };
    if amplitude_deg <= 75.0 {
        (amplitude_deg / 75.0).powf(1.5)
    } else {
        1.0 + slope_above_75 * (amplitude_deg - 75.0) / 15.0
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let frequencies: Vec<f64> = (1..=8).map(|i| i as f64 * 0.25).collect();
    let mut rows = Vec::new();
    for &(stiffness, edge, width_cm, gamma, best_gf) in FAMILIES {
        let wing = WingSpec::from_cm(width_cm, LENGTH_CM, gamma, stiffness, edge)?;
        let f_best = best_frequency_hz(width_cm);
        let gain_max = AMPLITUDES
            .iter()
            .map(|&a| amplitude_gain(a, width_cm))
            .fold(f64::MIN, f64::max);
        for &a in &AMPLITUDES {
            for &f in &frequencies {
                let shape = amplitude_gain(a, width_cm) / gain_max
                    * (-((f - f_best) / FREQ_SPREAD_HZ).powi(2)).exp();
                let thrust = (best_gf * shape * 100.0).round() / 100.0;
                let measured = wing == WingSpec::optimal() && a == 90.0 && f == 1.25;
                rows.push(ThrustRow {
                    wing,
                    amplitude_deg: a,
                    frequency_hz: f,
                    mean_thrust_gf: if measured { 17.3 } else { thrust },
                    provenance: if measured {
                        Provenance::Anchored
                    } else {
                        Provenance::Synthetic
                    },
                });
            }
        }
    }
    write_rows(rows, std::io::stdout().lock())?;
    Ok(())
}
