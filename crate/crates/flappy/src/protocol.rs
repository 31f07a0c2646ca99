//! Wire format shared by the TCP and WebSocket endpoints: one JSON document
//! per line (per message on WebSocket), field names in snake_case.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use flappy_core::control::{ActuatorState, TailMode, WingCommand};
use flappy_core::dynamics::{SimState, VehicleParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    SetThrottle,
    SetYaw,
    SetPitch,
    SetTailMode,
    Reset,
    Pause,
    Resume,
}

/// A command as received, e.g. `{"kind":"set_throttle","value":0.8,"seq":12}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommandMessage {
    pub kind: CommandKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<Value>,
    pub seq: u64,
}

/// Validated command payload.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Command {
    Throttle(f64),
    Yaw(f64),
    Pitch(f64),
    TailMode(TailMode),
    Reset,
    Pause,
    Resume,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReply {
    pub error: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seq: Option<u64>,
}

impl ErrorReply {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("error reply serializes")
    }
}

impl CommandMessage {
    pub fn new(kind: CommandKind, value: Option<Value>, seq: u64) -> Self {
        Self { kind, value, seq }
    }

    /// Checks the value against the kind. Axis values only need to be
    /// finite numbers; range clamping happens in the control mapping.
    pub fn command(&self) -> Result<Command, String> {
        let axis = || match self.value.as_ref().and_then(Value::as_f64) {
            Some(v) if v.is_finite() => Ok(v),
            _ => Err(format!("{:?} needs a numeric value", self.kind)),
        };
        Ok(match self.kind {
            CommandKind::SetThrottle => Command::Throttle(axis()?),
            CommandKind::SetYaw => Command::Yaw(axis()?),
            CommandKind::SetPitch => Command::Pitch(axis()?),
            CommandKind::SetTailMode => {
                let v = self
                    .value
                    .clone()
                    .ok_or("set_tail_mode needs \"rudder\" or \"elevator\"")?;
                Command::TailMode(
                    serde_json::from_value(v)
                        .map_err(|_| "tail mode must be \"rudder\" or \"elevator\"".to_owned())?,
                )
            }
            CommandKind::Reset => Command::Reset,
            CommandKind::Pause => Command::Pause,
            CommandKind::Resume => Command::Resume,
        })
    }
}

/// Parses one line. On failure the reply carries the sequence number when
/// it could be read.
pub fn parse_command(line: &str) -> Result<(u64, Command), ErrorReply> {
    let msg: CommandMessage = serde_json::from_str(line).map_err(|e| ErrorReply {
        error: format!("malformed command: {e}"),
        seq: serde_json::from_str::<Value>(line)
            .ok()
            .and_then(|v| v.get("seq").and_then(Value::as_u64)),
    })?;
    msg.command()
        .map(|c| (msg.seq, c))
        .map_err(|error| ErrorReply {
            error,
            seq: Some(msg.seq),
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WingEcho {
    pub amplitude_deg: f64,
    pub frequency_hz: f64,
    pub enabled: bool,
}

impl From<WingCommand> for WingEcho {
    fn from(w: WingCommand) -> Self {
        Self {
            amplitude_deg: w.setting.amplitude_deg(),
            frequency_hz: w.setting.frequency_hz(),
            enabled: w.enabled,
        }
    }
}

/// Snapshot sent to every client at the telemetry rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetryFrame {
    pub t_s: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// Heading, degrees clockwise from north.
    pub psi: f64,
    /// Pitch, degrees nose up.
    pub theta: f64,
    pub u: f64,
    pub w: f64,
    /// Yaw rate, degrees per second.
    pub r: f64,
    /// Pitch rate, degrees per second.
    pub q: f64,
    pub left_wing: WingEcho,
    pub right_wing: WingEcho,
    pub tail_deg: f64,
    pub tail_mode: TailMode,
    /// Remaining battery, 0..1.
    pub battery: f64,
    /// Flapping time left on the remaining charge.
    pub endurance_s: f64,
    /// Distance that time covers at the current surge speed.
    pub range_m: f64,
    pub left_phase: f64,
    pub right_phase: f64,
    pub paused: bool,
    /// Loop ticks that ran late by more than a full tick so far.
    pub lag: u64,
}

impl TelemetryFrame {
    pub fn new(
        state: &SimState,
        act: &ActuatorState,
        tail_mode: TailMode,
        params: &VehicleParams,
        paused: bool,
        lag: u64,
    ) -> Self {
        let endurance_s = if params.flapping_power_w > 0.0 {
            state.battery_j / params.flapping_power_w
        } else {
            f64::INFINITY
        };
        Self {
            t_s: state.t_s,
            x: state.x,
            y: state.y,
            z: state.z,
            psi: state.heading_deg,
            theta: state.pitch_deg,
            u: state.surge_mps,
            w: state.heave_mps,
            r: state.yaw_rate_dps,
            q: state.pitch_rate_dps,
            left_wing: act.left.into(),
            right_wing: act.right.into(),
            tail_deg: act.tail_deg,
            tail_mode,
            battery: state.battery_fraction(params),
            endurance_s,
            range_m: endurance_s * state.surge_mps.abs(),
            left_phase: state.left_phase,
            right_phase: state.right_phase,
            paused,
            lag,
        }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("telemetry serializes")
    }
}
