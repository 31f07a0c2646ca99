use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{step, SimState, VehicleParams, DEFAULT_DT_S, MAX_DT_S};
use crate::control::{ActuatorState, TailMode, WingCommand};
use crate::error::{invalid, Error, Result};
use crate::wing::{FlapSetting, ThrustDataset, WingSpec};

pub const TRAJECTORY_HEADER: &str = "t,x,y,z,psi,theta,u,w,r,q,battery_j";

/// Actuator change taking effect at `t_s`. Amplitude and frequency may be
/// left out for a wing that stays idle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioEvent {
    pub t_s: f64,
    #[serde(default)]
    pub left_amplitude: Option<f64>,
    #[serde(default)]
    pub left_freq: Option<f64>,
    #[serde(default)]
    pub left_enabled: bool,
    #[serde(default)]
    pub right_amplitude: Option<f64>,
    #[serde(default)]
    pub right_freq: Option<f64>,
    #[serde(default)]
    pub right_enabled: bool,
    #[serde(default)]
    pub tail_deg: f64,
}

impl ScenarioEvent {
    pub fn from_actuators(t_s: f64, act: &ActuatorState) -> Self {
        Self {
            t_s,
            left_amplitude: Some(act.left.setting.amplitude_deg()),
            left_freq: Some(act.left.setting.frequency_hz()),
            left_enabled: act.left.enabled,
            right_amplitude: Some(act.right.setting.amplitude_deg()),
            right_freq: Some(act.right.setting.frequency_hz()),
            right_enabled: act.right.enabled,
            tail_deg: act.tail_deg,
        }
    }

    pub fn actuators(&self) -> Result<ActuatorState> {
        let parked = ActuatorState::idle().left.setting;
        let wing = |amp: Option<f64>, freq: Option<f64>, enabled: bool| -> Result<WingCommand> {
            let setting = match (amp, freq) {
                (Some(a), Some(f)) => FlapSetting::new(a, f)?,
                (None, None) if !enabled => parked,
                _ => {
                    return Err(invalid(
                        "scenario event",
                        format!(
                            "t = {} s: enabled wing needs amplitude and frequency",
                            self.t_s
                        ),
                    ))
                }
            };
            Ok(WingCommand { setting, enabled })
        };
        let act = ActuatorState {
            left: wing(self.left_amplitude, self.left_freq, self.left_enabled)?,
            right: wing(self.right_amplitude, self.right_freq, self.right_enabled)?,
            tail_deg: self.tail_deg,
        };
        act.validate()?;
        Ok(act)
    }
}

/// A timed actuator schedule, stored as TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub duration_s: f64,
    #[serde(default = "default_dt")]
    pub dt_s: f64,
    /// Overrides the vehicle's tail mounting for this run.
    #[serde(default)]
    pub tail_mode: Option<TailMode>,
    #[serde(default)]
    pub events: Vec<ScenarioEvent>,
}

fn default_dt() -> f64 {
    DEFAULT_DT_S
}

impl Scenario {
    pub fn new(duration_s: f64, dt_s: f64) -> Self {
        Self {
            duration_s,
            dt_s,
            tail_mode: None,
            events: Vec::new(),
        }
    }

    pub fn with_event(mut self, t_s: f64, act: &ActuatorState) -> Self {
        self.events.push(ScenarioEvent::from_actuators(t_s, act));
        self
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration_s >= 0.0 && self.duration_s.is_finite()) {
            return Err(invalid("scenario", "duration_s must be >= 0"));
        }
        if !(self.dt_s > 0.0 && self.dt_s <= MAX_DT_S) {
            return Err(invalid(
                "scenario",
                format!("dt_s = {} not in (0, {MAX_DT_S}]", self.dt_s),
            ));
        }
        if self.events.windows(2).any(|w| w[1].t_s < w[0].t_s) {
            return Err(invalid("scenario", "event times must be non-decreasing"));
        }
        for e in &self.events {
            e.actuators()?;
        }
        Ok(())
    }

    pub fn ticks(&self) -> usize {
        (self.duration_s / self.dt_s).round() as usize
    }
}

/// Runs `scenario` from rest. The trajectory holds the initial state and one
/// state per tick.
pub fn run_scenario(
    scenario: &Scenario,
    params: &VehicleParams,
    wing: &WingSpec,
    dataset: &ThrustDataset,
) -> Result<Vec<SimState>> {
    scenario.validate()?;
    let params = VehicleParams {
        tail_mode: scenario.tail_mode.unwrap_or(params.tail_mode),
        ..*params
    };
    let schedule = scenario
        .events
        .iter()
        .map(|e| Ok((e.t_s, e.actuators()?)))
        .collect::<Result<Vec<_>>>()?;
    simulate(
        SimState::at_rest(&params),
        &schedule,
        &params,
        wing,
        dataset,
        scenario.ticks(),
        scenario.dt_s,
    )
}

/// Steps `ticks` times from `initial`. The actuator state at time t is the
/// last schedule entry with time <= t (idle before the first).
pub fn simulate(
    initial: SimState,
    schedule: &[(f64, ActuatorState)],
    params: &VehicleParams,
    wing: &WingSpec,
    dataset: &ThrustDataset,
    ticks: usize,
    dt_s: f64,
) -> Result<Vec<SimState>> {
    params.validate()?;
    let mut trajectory = Vec::with_capacity(ticks + 1);
    trajectory.push(initial);
    let mut state = initial;
    let mut act = ActuatorState::idle();
    let mut next_event = 0;
    for tick in 0..ticks {
        // time from the tick index so schedules line up without float drift
        let t = initial.t_s + tick as f64 * dt_s;
        while next_event < schedule.len() && schedule[next_event].0 <= t + 1e-9 {
            act = schedule[next_event].1;
            next_event += 1;
        }
        state = step(&state, &act, params, wing, dataset, dt_s).map_err(|e| match e {
            Error::Diverged { .. } => e,
            other => Error::AtTime {
                t_s: t,
                source: Box::new(other),
            },
        })?;
        trajectory.push(state);
    }
    Ok(trajectory)
}

pub fn write_trajectory_csv(trajectory: &[SimState], writer: impl Write) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(TRAJECTORY_HEADER.split(','))?;
    for s in trajectory {
        wtr.write_record(
            [
                s.t_s,
                s.x,
                s.y,
                s.z,
                s.heading_deg,
                s.pitch_deg,
                s.surge_mps,
                s.heave_mps,
                s.yaw_rate_dps,
                s.pitch_rate_dps,
                s.battery_j,
            ]
            .map(|v| format!("{v:.6}")),
        )?;
    }
    wtr.flush()?;
    Ok(())
}
