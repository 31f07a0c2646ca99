//! Pilot stick commands to actuator settings.
//!
//! Throttle trades amplitude for frequency at low speed, yaw uses the thrust
//! differential of the two wings, and the tail acts as rudder or elevator
//! depending on how its servo is mounted.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::wing::{FlapSetting, MAX_AMPLITUDE_DEG, MAX_FREQUENCY_HZ};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TailMode {
    /// Tail servo swings about the yaw axis.
    Rudder,
    /// Tail servo swings about the pitch axis.
    #[default]
    Elevator,
}

/// Stick positions. Axes are clamped on construction; NaN reads as centred.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PilotCommand {
    throttle: f64,
    /// Positive turns right.
    yaw: f64,
    /// Positive is nose up.
    pitch: f64,
    tail_mode: TailMode,
}

impl Default for PilotCommand {
    fn default() -> Self {
        Self::new(0.0, 0.0, 0.0, TailMode::default())
    }
}

impl PilotCommand {
    pub fn new(throttle: f64, yaw: f64, pitch: f64, tail_mode: TailMode) -> Self {
        Self {
            throttle: clamp_axis(throttle, 0.0, 1.0),
            yaw: clamp_axis(yaw, -1.0, 1.0),
            pitch: clamp_axis(pitch, -1.0, 1.0),
            tail_mode,
        }
    }

    pub fn throttle(&self) -> f64 {
        self.throttle
    }

    pub fn yaw(&self) -> f64 {
        self.yaw
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn tail_mode(&self) -> TailMode {
        self.tail_mode
    }

    pub fn with_throttle(self, throttle: f64) -> Self {
        Self::new(throttle, self.yaw, self.pitch, self.tail_mode)
    }

    pub fn with_yaw(self, yaw: f64) -> Self {
        Self::new(self.throttle, yaw, self.pitch, self.tail_mode)
    }

    pub fn with_pitch(self, pitch: f64) -> Self {
        Self::new(self.throttle, self.yaw, pitch, self.tail_mode)
    }

    pub fn with_tail_mode(self, tail_mode: TailMode) -> Self {
        Self { tail_mode, ..self }
    }
}

fn clamp_axis(v: f64, lo: f64, hi: f64) -> f64 {
    if v.is_nan() {
        0.0f64.clamp(lo, hi)
    } else {
        v.clamp(lo, hi)
    }
}

/// Tunable coefficients of the stick mappings. None of these were measured;
/// they only encode the direction of each adjustment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlGains {
    /// Setting used at full throttle.
    pub full_amplitude_deg: f64,
    pub full_frequency_hz: f64,
    /// Amplitude never drops below this fraction of full amplitude.
    pub amplitude_floor: f64,
    /// Frequency at zero throttle is (1 + boost) times the full-throttle value.
    pub frequency_boost: f64,
    pub yaw_deadband: f64,
    pub yaw_amplitude_scale: f64,
    pub yaw_frequency_scale: f64,
}

impl Default for ControlGains {
    fn default() -> Self {
        Self {
            full_amplitude_deg: 90.0,
            full_frequency_hz: 1.25,
            amplitude_floor: 0.2,
            frequency_boost: 0.4,
            yaw_deadband: 0.1,
            yaw_amplitude_scale: 0.6,
            yaw_frequency_scale: 1.5,
        }
    }
}

impl ControlGains {
    pub fn validate(&self) -> Result<()> {
        FlapSetting::new(self.full_amplitude_deg, self.full_frequency_hz)?;
        let unit = [
            ("amplitude_floor", self.amplitude_floor),
            ("yaw_amplitude_scale", self.yaw_amplitude_scale),
        ];
        for (name, v) in unit {
            if !(v > 0.0 && v <= 1.0) {
                return Err(invalid(
                    "control gain",
                    format!("{name} = {v} not in (0, 1]"),
                ));
            }
        }
        if !(self.frequency_boost >= 0.0 && self.yaw_frequency_scale >= 1.0) {
            return Err(invalid(
                "control gain",
                "frequency gains must not reduce frequency",
            ));
        }
        if !(0.0..1.0).contains(&self.yaw_deadband) {
            return Err(invalid("control gain", "yaw_deadband must be in [0, 1)"));
        }
        Ok(())
    }
}

/// One wing's command; a disabled wing holds still and makes no thrust.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WingCommand {
    pub setting: FlapSetting,
    pub enabled: bool,
}

impl WingCommand {
    pub fn flapping(setting: FlapSetting) -> Self {
        Self {
            setting,
            enabled: true,
        }
    }

    pub fn idle(setting: FlapSetting) -> Self {
        Self {
            setting,
            enabled: false,
        }
    }

    /// The setting if the wing is flapping.
    pub fn active(&self) -> Option<FlapSetting> {
        self.enabled.then_some(self.setting)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActuatorState {
    pub left: WingCommand,
    pub right: WingCommand,
    /// Tail servo angle β, degrees in [−90, 90].
    pub tail_deg: f64,
}

impl ActuatorState {
    /// Both wings idle, tail centred.
    pub fn idle() -> Self {
        let parked = FlapSetting::new(MAX_AMPLITUDE_DEG, 1.25).expect("constant setting is valid");
        Self {
            left: WingCommand::idle(parked),
            right: WingCommand::idle(parked),
            tail_deg: 0.0,
        }
    }

    /// Both wings flapping at `setting`.
    pub fn symmetric(setting: FlapSetting, tail_deg: f64) -> Self {
        Self {
            left: WingCommand::flapping(setting),
            right: WingCommand::flapping(setting),
            tail_deg,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tail_deg.abs() <= 90.0) {
            return Err(invalid(
                "tail angle",
                format!("{} deg not in [-90, 90]", self.tail_deg),
            ));
        }
        Ok(())
    }
}

impl Default for ActuatorState {
    fn default() -> Self {
        Self::idle()
    }
}

/// Throttle to flap setting; `None` at zero throttle (wings idle).
///
/// Full throttle is the best stand setting. Below it the amplitude shrinks
/// (down to a floor) while the frequency rises, capped at 2 Hz.
pub fn map_speed(throttle: f64, gains: &ControlGains) -> Option<FlapSetting> {
    let t = clamp_axis(throttle, 0.0, 1.0);
    if t <= 0.0 {
        return None;
    }
    let amplitude =
        (gains.full_amplitude_deg * t.max(gains.amplitude_floor)).min(MAX_AMPLITUDE_DEG);
    let frequency =
        (gains.full_frequency_hz * (1.0 + gains.frequency_boost * (1.0 - t))).min(MAX_FREQUENCY_HZ);
    FlapSetting::new(amplitude, frequency).ok()
}

/// Wing commands for a yaw request on top of the throttle setting `base`.
///
/// Outside the deadband the wing on the inside of the turn idles and the
/// outer wing flaps at reduced amplitude and raised frequency. Returns
/// `(left, right)`.
pub fn map_yaw(
    cmd: &PilotCommand,
    base: Option<FlapSetting>,
    gains: &ControlGains,
) -> (WingCommand, WingCommand) {
    let parked = base.unwrap_or_else(|| ActuatorState::idle().left.setting);
    if cmd.yaw().abs() <= gains.yaw_deadband {
        return match base {
            Some(s) => (WingCommand::flapping(s), WingCommand::flapping(s)),
            None => (WingCommand::idle(parked), WingCommand::idle(parked)),
        };
    }
    // Turning from a standstill uses the full-throttle setting as the base.
    let base = base.or_else(|| map_speed(1.0, gains)).unwrap_or(parked);
    let turn = FlapSetting::new(
        base.amplitude_deg() * gains.yaw_amplitude_scale,
        (base.frequency_hz() * gains.yaw_frequency_scale).min(MAX_FREQUENCY_HZ),
    )
    .unwrap_or(base);
    if cmd.yaw() > 0.0 {
        (WingCommand::flapping(turn), WingCommand::idle(turn))
    } else {
        (WingCommand::idle(turn), WingCommand::flapping(turn))
    }
}

/// Tail angle: follows yaw in rudder mode, pitch in elevator mode.
pub fn map_tail(cmd: &PilotCommand) -> f64 {
    match cmd.tail_mode() {
        TailMode::Rudder => 90.0 * cmd.yaw(),
        TailMode::Elevator => 90.0 * cmd.pitch(),
    }
}

/// Full stick-to-actuator mapping.
pub fn command_to_actuators(cmd: &PilotCommand, gains: &ControlGains) -> ActuatorState {
    let base = map_speed(cmd.throttle(), gains);
    let (left, right) = map_yaw(cmd, base, gains);
    ActuatorState {
        left,
        right,
        tail_deg: map_tail(cmd),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gains() -> ControlGains {
        ControlGains::default()
    }

    #[test]
    fn speed_endpoints() {
        let full = map_speed(1.0, &gains()).unwrap();
        assert_eq!((full.amplitude_deg(), full.frequency_hz()), (90.0, 1.25));
        assert!(map_speed(0.0, &gains()).is_none());
        let half = map_speed(0.5, &gains()).unwrap();
        assert!((half.amplitude_deg() - 45.0).abs() < 1e-12);
        assert!((half.frequency_hz() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn speed_floor() {
        let low = map_speed(0.05, &gains()).unwrap();
        assert!((low.amplitude_deg() - 18.0).abs() < 1e-12);
        assert!(low.frequency_hz() <= 2.0);
    }

    #[test]
    fn yaw_right_flaps_left_wing() {
        let cmd = PilotCommand::new(1.0, 1.0, 0.0, TailMode::Elevator);
        let (l, r) = map_yaw(&cmd, map_speed(1.0, &gains()), &gains());
        assert!(l.enabled && !r.enabled);
        assert!((l.setting.amplitude_deg() - 54.0).abs() < 1e-12);
        assert!((l.setting.frequency_hz() - 1.875).abs() < 1e-12);
    }

    #[test]
    fn yaw_inside_deadband_is_symmetric() {
        let cmd = PilotCommand::new(1.0, 0.05, 0.0, TailMode::Elevator);
        let base = map_speed(1.0, &gains());
        let (l, r) = map_yaw(&cmd, base, &gains());
        assert_eq!(l, r);
        assert_eq!(l.active(), base);
    }

    #[test]
    fn yaw_from_standstill_still_turns() {
        let cmd = PilotCommand::new(0.0, -1.0, 0.0, TailMode::Elevator);
        let (l, r) = map_yaw(&cmd, None, &gains());
        assert!(!l.enabled && r.enabled);
    }

    #[test]
    fn tail_modes() {
        assert_eq!(
            map_tail(&PilotCommand::new(0.0, 0.0, 1.0, TailMode::Elevator)),
            90.0
        );
        assert_eq!(
            map_tail(&PilotCommand::new(0.0, 0.5, 0.0, TailMode::Rudder)),
            45.0
        );
        let cmd = PilotCommand::new(1.0, 0.8, 0.0, TailMode::Elevator);
        let act = command_to_actuators(&cmd, &gains());
        assert_eq!(act.tail_deg, 0.0);
        assert!(act.left.enabled && !act.right.enabled);
    }

    #[test]
    fn axes_are_clamped() {
        let c = PilotCommand::new(3.0, -7.0, f64::NAN, TailMode::Rudder);
        assert_eq!((c.throttle(), c.yaw(), c.pitch()), (1.0, -1.0, 0.0));
    }

    #[test]
    fn gains_validate() {
        assert!(gains().validate().is_ok());
        let bad = ControlGains {
            yaw_frequency_scale: 0.5,
            ..gains()
        };
        assert!(bad.validate().is_err());
    }
}
