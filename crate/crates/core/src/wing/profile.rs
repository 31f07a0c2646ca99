use serde::Serialize;

use super::FlapSetting;
use crate::error::{invalid, Result};

/// Servo position update interval (50 Hz).
pub const SERVO_TICK_S: f64 = 0.02;
/// Slew limit assumed for a 9 g-class hobby servo.
pub const DEFAULT_SERVO_RATE_LIMIT_DPS: f64 = 600.0;

/// Discretised servo position trajectory for one flap setting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlapProfile {
    pub setting: FlapSetting,
    pub tick_s: f64,
    /// Positions the servo actually reaches, after slew limiting.
    pub positions_deg: Vec<f64>,
    /// Ideal sinusoidal targets before slew limiting.
    pub commanded_deg: Vec<f64>,
    /// The sine's peak speed A·2πf is within the servo slew limit.
    pub achievable: bool,
    /// Number of ticks whose increment was cut to the slew limit.
    pub clamped_ticks: usize,
}

impl FlapProfile {
    /// Ticks per flap cycle, round(1 / (f · tick)).
    pub fn period_ticks(&self) -> usize {
        (1.0 / (self.setting.frequency_hz() * self.tick_s)).round() as usize
    }

    pub fn peak_speed_dps(&self) -> f64 {
        self.setting.peak_speed_dps()
    }

    /// Per-tick increments of the reached positions.
    pub fn increments_deg(&self) -> impl Iterator<Item = f64> + '_ {
        self.positions_deg.windows(2).map(|w| w[1] - w[0])
    }
}

/// Servo trajectory with the default 20 ms tick.
pub fn generate_profile(
    setting: FlapSetting,
    phase_deg: f64,
    n_ticks: usize,
    servo_rate_limit_dps: f64,
) -> Result<FlapProfile> {
    generate_profile_with_tick(
        setting,
        phase_deg,
        n_ticks,
        servo_rate_limit_dps,
        SERVO_TICK_S,
    )
}

/// The servo only accepts positions, so the sinusoidal velocity profile is
/// produced incrementally: every tick the target A·sin(2πf·k·tick + phase) is
/// sent, and the servo moves toward it by at most `rate_limit · tick`.
pub fn generate_profile_with_tick(
    setting: FlapSetting,
    phase_deg: f64,
    n_ticks: usize,
    servo_rate_limit_dps: f64,
    tick_s: f64,
) -> Result<FlapProfile> {
    if n_ticks == 0 {
        return Err(invalid("profile length", "n_ticks must be >= 1"));
    }
    if !(servo_rate_limit_dps > 0.0 && servo_rate_limit_dps.is_finite()) {
        return Err(invalid(
            "servo rate limit",
            format!("{servo_rate_limit_dps} deg/s must be > 0"),
        ));
    }
    if !(tick_s > 0.0 && tick_s.is_finite()) {
        return Err(invalid("servo tick", format!("{tick_s} s must be > 0")));
    }
    if !phase_deg.is_finite() {
        return Err(invalid("phase", "must be finite"));
    }

    let amplitude = setting.amplitude_deg();
    let omega = std::f64::consts::TAU * setting.frequency_hz();
    let phase = phase_deg.to_radians();
    let max_step = servo_rate_limit_dps * tick_s;

    let commanded_deg: Vec<f64> = (0..n_ticks)
        .map(|k| amplitude * (omega * k as f64 * tick_s + phase).sin())
        .collect();

    let mut positions_deg = Vec::with_capacity(n_ticks);
    let mut clamped_ticks = 0;
    let mut current = commanded_deg[0];
    positions_deg.push(current);
    for &target in &commanded_deg[1..] {
        let step = target - current;
        if step.abs() > max_step {
            clamped_ticks += 1;
            current += max_step.copysign(step);
        } else {
            current = target;
        }
        positions_deg.push(current);
    }

    Ok(FlapProfile {
        setting,
        tick_s,
        positions_deg,
        commanded_deg,
        achievable: setting.peak_speed_dps() <= servo_rate_limit_dps,
        clamped_ticks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quarter_period_reaches_amplitude() {
        let s = FlapSetting::new(90.0, 1.25).unwrap();
        let p = generate_profile(s, 0.0, 80, 1.0e6).unwrap();
        assert_eq!(p.period_ticks(), 40);
        assert!((p.commanded_deg[10] - 90.0).abs() < 1e-12);
        assert!((p.positions_deg[10] - 90.0).abs() < 1e-12);
        assert!(p.achievable);
        assert_eq!(p.clamped_ticks, 0);
    }

    #[test]
    fn over_speed_setting_is_clamped_not_rejected() {
        let s = FlapSetting::new(90.0, 1.25).unwrap();
        let p = generate_profile(s, 0.0, 200, DEFAULT_SERVO_RATE_LIMIT_DPS).unwrap();
        assert!(!p.achievable);
        assert!(p.clamped_ticks > 0);
        let max_step = DEFAULT_SERVO_RATE_LIMIT_DPS * SERVO_TICK_S;
        assert!(p.increments_deg().all(|d| d.abs() <= max_step + 1e-12));
        assert!(p.positions_deg.iter().all(|x| x.abs() <= 90.0));
    }

    #[test]
    fn slow_setting_is_achievable() {
        let s = FlapSetting::new(45.0, 1.5).unwrap();
        let p = generate_profile(s, 30.0, 100, DEFAULT_SERVO_RATE_LIMIT_DPS).unwrap();
        // 45 * 2π * 1.5 ≈ 424 deg/s
        assert!(p.achievable);
        assert_eq!(p.positions_deg, p.commanded_deg);
    }

    #[test]
    fn near_zero_frequency_holds_phase_position() {
        let s = FlapSetting::new(90.0, 1e-9).unwrap();
        let p = generate_profile(s, 30.0, 50, DEFAULT_SERVO_RATE_LIMIT_DPS).unwrap();
        let expected = 90.0 * 30f64.to_radians().sin();
        assert!(p.positions_deg.iter().all(|x| (x - expected).abs() < 1e-6));
    }

    #[test]
    fn rejects_bad_inputs() {
        let s = FlapSetting::new(90.0, 1.0).unwrap();
        assert!(generate_profile(s, 0.0, 0, 600.0).is_err());
        assert!(generate_profile(s, 0.0, 10, 0.0).is_err());
        assert!(generate_profile(s, 0.0, 10, -5.0).is_err());
        assert!(FlapSetting::new(90.0, 0.0).is_err());
    }
}
