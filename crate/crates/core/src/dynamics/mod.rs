//! Reduced flight dynamics: surge, heave, yaw and pitch (roll ignored).
//!
//! World frame: x north, y east, z up. Heading ψ is measured clockwise from
//! x, so a positive yaw rate is a right turn. Surge `u` is horizontal speed
//! along the heading and heave `w` is vertical speed. The hull is neutrally
//! buoyant, so gravity only enters through the pitch balance.
//!
//! Integration is semi-implicit Euler: rates are updated from the forces at
//! the current state, then positions and angles from the updated rates.

mod scenario;

use serde::{Deserialize, Serialize};

use crate::control::{ActuatorState, TailMode, WingCommand};
use crate::energy::{DEFAULT_BATTERY_J, FLAPPING_ENDURANCE_S};
use crate::error::{invalid, Error, Result};
use crate::longitudinal::{
    drag_force, residual_with_tail_arm, LongitudinalParams, STANDARD_GRAVITY,
};
use crate::wing::{ThrustDataset, ThrustWaveform, WingSpec};

pub use scenario::{
    run_scenario, simulate, write_trajectory_csv, Scenario, ScenarioEvent, TRAJECTORY_HEADER,
};

/// Integration step matching the 50 Hz servo update.
pub const DEFAULT_DT_S: f64 = 0.02;
pub const MAX_DT_S: f64 = 0.1;

/// Grams-force to newtons.
pub fn gf_to_newtons(gf: f64) -> f64 {
    gf * STANDARD_GRAVITY / 1000.0
}

/// Hull drag area that makes `max_thrust_gf` the drag at `target_speed_mps`:
/// C_d·A = 2T / (ρV²).
pub fn calibrate_hull_drag(max_thrust_gf: f64, target_speed_mps: f64, rho: f64) -> Result<f64> {
    if !(max_thrust_gf > 0.0 && target_speed_mps > 0.0 && rho > 0.0) {
        return Err(invalid("hull drag calibration", "inputs must be > 0"));
    }
    Ok(2.0 * gf_to_newtons(max_thrust_gf) / (rho * target_speed_mps * target_speed_mps))
}

/// Steady speed where thrust balances hull drag, √(2T / (ρ·C_d·A)).
pub fn terminal_speed(thrust_gf: f64, hull_cda_m2: f64, rho: f64) -> f64 {
    (2.0 * gf_to_newtons(thrust_gf) / (rho * hull_cda_m2)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThrustModel {
    /// Flap-cycle waveform at each wing's current phase.
    #[default]
    Instantaneous,
    /// Cycle-averaged thrust only.
    CycleMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VehicleParams {
    pub lift_per_balloon_gf: f64,
    pub balloon_count: u32,
    /// Lateral distance from the centreline to each wing root.
    pub wing_offset_m: f64,
    /// Hull drag area C_d·A, used for both surge and heave.
    pub hull_cda_m2: f64,
    pub longitudinal: LongitudinalParams,
    pub pitch_inertia: f64,
    /// N·m·s/rad
    pub pitch_damping: f64,
    pub yaw_inertia: f64,
    /// N·m·s/rad
    pub yaw_damping: f64,
    pub tail_mode: TailMode,
    pub battery_j: f64,
    /// Draw while at least one wing flaps; defaults to a full battery over
    /// the measured flapping endurance.
    pub flapping_power_w: f64,
    /// Fraction of the tail's longitudinal arm lost at full rudder deflection
    /// (the tail CG swings forward as it turns).
    pub rudder_cg_shift: f64,
    pub thrust_model: ThrustModel,
    /// Share of the stand-measured thrust each wing delivers when mounted.
    /// At 0.5 the pair delivers one stand reading, the thrust the hull drag
    /// area is calibrated against.
    pub installed_thrust_fraction: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            lift_per_balloon_gf: 68.0,
            balloon_count: 2,
            wing_offset_m: 0.30,
            hull_cda_m2: 0.229,
            longitudinal: LongitudinalParams::default(),
            pitch_inertia: 0.05,
            pitch_damping: 0.5,
            yaw_inertia: 0.05,
            yaw_damping: 0.05,
            tail_mode: TailMode::Elevator,
            battery_j: DEFAULT_BATTERY_J,
            flapping_power_w: DEFAULT_BATTERY_J / FLAPPING_ENDURANCE_S,
            rudder_cg_shift: 0.3,
            thrust_model: ThrustModel::Instantaneous,
            installed_thrust_fraction: 0.5,
        }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<()> {
        self.longitudinal.validate()?;
        let positive = [
            ("lift_per_balloon_gf", self.lift_per_balloon_gf),
            ("wing_offset_m", self.wing_offset_m),
            ("hull_cda_m2", self.hull_cda_m2),
            ("pitch_inertia", self.pitch_inertia),
            ("pitch_damping", self.pitch_damping),
            ("yaw_inertia", self.yaw_inertia),
            ("yaw_damping", self.yaw_damping),
            ("battery_j", self.battery_j),
            ("installed_thrust_fraction", self.installed_thrust_fraction),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(
                    "vehicle parameter",
                    format!("{name} = {v} must be > 0"),
                ));
            }
        }
        if self.balloon_count == 0 {
            return Err(invalid("vehicle parameter", "balloon_count must be > 0"));
        }
        if !(self.flapping_power_w >= 0.0) {
            return Err(invalid(
                "vehicle parameter",
                "flapping_power_w must be >= 0",
            ));
        }
        if !(0.0..=1.0).contains(&self.rudder_cg_shift) {
            return Err(invalid(
                "vehicle parameter",
                "rudder_cg_shift must be in [0, 1]",
            ));
        }
        Ok(())
    }

    pub fn balloon_diameter_m(&self) -> f64 {
        self.longitudinal.diameter_m
    }

    /// Total buoyant lift available for payload.
    pub fn payload_gf(&self) -> f64 {
        self.lift_per_balloon_gf * self.balloon_count as f64
    }

    /// Body plus tail, M(1 + σ).
    pub fn total_mass_kg(&self) -> f64 {
        self.longitudinal.body_mass_kg * (1.0 + self.longitudinal.sigma)
    }

    /// Flight time on a full battery while flapping.
    pub fn flapping_endurance_s(&self) -> f64 {
        self.battery_j / self.flapping_power_w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub heading_deg: f64,
    pub pitch_deg: f64,
    pub surge_mps: f64,
    pub heave_mps: f64,
    pub yaw_rate_dps: f64,
    pub pitch_rate_dps: f64,
    pub left_phase: f64,
    pub right_phase: f64,
    pub battery_j: f64,
    pub t_s: f64,
}

impl SimState {
    /// Level and motionless at the origin with a full battery.
    pub fn at_rest(params: &VehicleParams) -> Self {
        Self {
            x: 0.0,
            y: 0.0,
            z: 0.0,
            heading_deg: 0.0,
            pitch_deg: 0.0,
            surge_mps: 0.0,
            heave_mps: 0.0,
            yaw_rate_dps: 0.0,
            pitch_rate_dps: 0.0,
            left_phase: 0.0,
            right_phase: 0.0,
            battery_j: params.battery_j,
            t_s: 0.0,
        }
    }

    pub fn battery_fraction(&self, params: &VehicleParams) -> f64 {
        self.battery_j / params.battery_j
    }

    fn check(&self) -> Result<()> {
        let values = [
            self.x,
            self.y,
            self.z,
            self.heading_deg,
            self.pitch_deg,
            self.surge_mps,
            self.heave_mps,
            self.yaw_rate_dps,
            self.pitch_rate_dps,
            self.battery_j,
        ];
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged {
                t_s: self.t_s,
                detail: "non-finite state".into(),
            });
        }
        if self.pitch_deg.abs() >= 90.0 {
            return Err(Error::Diverged {
                t_s: self.t_s,
                detail: format!("pitch {} deg reached vertical", self.pitch_deg),
            });
        }
        Ok(())
    }
}

/// Forces and moments acting at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Loads {
    pub left_thrust_n: f64,
    pub right_thrust_n: f64,
    pub surge_force_n: f64,
    pub heave_force_n: f64,
    pub yaw_moment_nm: f64,
    pub pitch_moment_nm: f64,
}

fn wing_thrust_n(
    cmd: &WingCommand,
    phase: f64,
    powered: bool,
    params: &VehicleParams,
    wing: &WingSpec,
    dataset: &ThrustDataset,
) -> Result<f64> {
    let Some(setting) = cmd.active().filter(|_| powered) else {
        return Ok(0.0);
    };
    let mean = dataset.mean_thrust(wing, &setting)? * params.installed_thrust_fraction;
    let gf = match params.thrust_model {
        ThrustModel::Instantaneous => ThrustWaveform::new(mean).at_phase(phase),
        ThrustModel::CycleMean => mean,
    };
    Ok(gf_to_newtons(gf))
}

/// Forces and moments for `state` under `act`.
pub fn loads(
    state: &SimState,
    act: &ActuatorState,
    params: &VehicleParams,
    wing: &WingSpec,
    dataset: &ThrustDataset,
) -> Result<Loads> {
    let lon = &params.longitudinal;
    let powered = state.battery_j > 0.0;
    let left = wing_thrust_n(&act.left, state.left_phase, powered, params, wing, dataset)?;
    let right = wing_thrust_n(
        &act.right,
        state.right_phase,
        powered,
        params,
        wing,
        dataset,
    )?;
    let thrust = left + right;

    let u = state.surge_mps;
    let w = state.heave_mps;
    let theta = state.pitch_deg.to_radians();
    let beta = act.tail_deg;
    let half_rho_cda = 0.5 * lon.air_density * params.hull_cda_m2;

    let tail_plate_n = drag_force(u.abs(), lon) * beta.to_radians().sin().abs();
    let surge = thrust * theta.cos() - half_rho_cda * u * u.abs() - tail_plate_n * u.signum();
    let heave = thrust * theta.sin() - half_rho_cda * w * w.abs();

    let (residual, rudder_nm) = match params.tail_mode {
        TailMode::Elevator => (
            residual_with_tail_arm(state.pitch_deg, beta, lon.x_t, u.abs(), lon),
            0.0,
        ),
        TailMode::Rudder => {
            let arm = lon.x_t * (1.0 - params.rudder_cg_shift * beta.to_radians().sin().abs());
            let yaw = beta.to_radians().sin() * drag_force(u.abs(), lon) * lon.x_t * lon.diameter_m;
            (
                residual_with_tail_arm(state.pitch_deg, 0.0, arm, u.abs(), lon),
                yaw,
            )
        }
    };

    let yaw_rate = state.yaw_rate_dps.to_radians();
    let pitch_rate = state.pitch_rate_dps.to_radians();
    Ok(Loads {
        left_thrust_n: left,
        right_thrust_n: right,
        surge_force_n: surge,
        heave_force_n: heave,
        yaw_moment_nm: (left - right) * params.wing_offset_m + rudder_nm
            - params.yaw_damping * yaw_rate,
        pitch_moment_nm: lon.moment_scale_nm() * residual - params.pitch_damping * pitch_rate,
    })
}

/// Advances `state` by `dt_s`. Pure: identical inputs give identical output.
pub fn step(
    state: &SimState,
    act: &ActuatorState,
    params: &VehicleParams,
    wing: &WingSpec,
    dataset: &ThrustDataset,
    dt_s: f64,
) -> Result<SimState> {
    if !(dt_s > 0.0 && dt_s <= MAX_DT_S) {
        return Err(invalid(
            "time step",
            format!("{dt_s} s not in (0, {MAX_DT_S}]"),
        ));
    }
    act.validate()?;
    let f = loads(state, act, params, wing, dataset)?;
    let mass = params.total_mass_kg();

    let surge = state.surge_mps + f.surge_force_n / mass * dt_s;
    let heave = state.heave_mps + f.heave_force_n / mass * dt_s;
    let yaw_rate = state.yaw_rate_dps + (f.yaw_moment_nm / params.yaw_inertia).to_degrees() * dt_s;
    let pitch_rate =
        state.pitch_rate_dps + (f.pitch_moment_nm / params.pitch_inertia).to_degrees() * dt_s;

    let heading = (state.heading_deg + yaw_rate * dt_s).rem_euclid(360.0);
    let pitch = state.pitch_deg + pitch_rate * dt_s;
    let (sin_h, cos_h) = heading.to_radians().sin_cos();

    let powered = state.battery_j > 0.0;
    let advance = |phase: f64, cmd: &WingCommand| match cmd.active().filter(|_| powered) {
        Some(s) => (phase + s.frequency_hz() * dt_s).rem_euclid(1.0),
        None => phase,
    };
    let flapping = powered && (act.left.enabled || act.right.enabled);
    let drain = if flapping {
        params.flapping_power_w * dt_s
    } else {
        0.0
    };

    let next = SimState {
        x: state.x + surge * cos_h * dt_s,
        y: state.y + surge * sin_h * dt_s,
        z: state.z + heave * dt_s,
        heading_deg: heading,
        pitch_deg: pitch,
        surge_mps: surge,
        heave_mps: heave,
        yaw_rate_dps: yaw_rate,
        pitch_rate_dps: pitch_rate,
        left_phase: advance(state.left_phase, &act.left),
        right_phase: advance(state.right_phase, &act.right),
        battery_j: (state.battery_j - drain).clamp(0.0, params.battery_j),
        t_s: state.t_s + dt_s,
    };
    next.check()?;
    Ok(next)
}
