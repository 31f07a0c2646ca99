//! The simulation loop's state, independent of any clock or socket.

use flappy_core::control::{command_to_actuators, ActuatorState, ControlGains, PilotCommand};
use flappy_core::dynamics::{step, SimState, VehicleParams, DEFAULT_DT_S};
use flappy_core::wing::{ThrustDataset, WingSpec};

use crate::protocol::{Command, TelemetryFrame};

/// Simulation ticks per telemetry frame: 50 Hz loop, 10 Hz telemetry.
pub const TELEMETRY_DIVISOR: u64 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Slot {
    Throttle,
    Yaw,
    Pitch,
    TailMode,
}

pub struct Session {
    params: VehicleParams,
    gains: ControlGains,
    wing: WingSpec,
    dataset: ThrustDataset,
    initial: SimState,
    state: SimState,
    pilot: PilotCommand,
    paused: bool,
    sim_ticks: u64,
    lag: u64,
    pending: Vec<(u64, Command)>,
    trajectory: Option<Vec<SimState>>,
}

impl Session {
    pub fn new(
        params: VehicleParams,
        gains: ControlGains,
        wing: WingSpec,
        dataset: ThrustDataset,
    ) -> Self {
        let initial = SimState::at_rest(&params);
        Self {
            pilot: PilotCommand::new(0.0, 0.0, 0.0, params.tail_mode),
            params,
            gains,
            wing,
            dataset,
            initial,
            state: initial,
            paused: false,
            sim_ticks: 0,
            lag: 0,
            pending: Vec::new(),
            trajectory: None,
        }
    }

    /// Keep every simulated state for a trajectory dump.
    pub fn record(mut self) -> Self {
        self.trajectory = Some(vec![self.state]);
        self
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn pilot(&self) -> &PilotCommand {
        &self.pilot
    }

    pub fn paused(&self) -> bool {
        self.paused
    }

    pub fn actuators(&self) -> ActuatorState {
        command_to_actuators(&self.pilot, &self.gains)
    }

    pub fn trajectory(&self) -> Option<&[SimState]> {
        self.trajectory.as_deref()
    }

    pub fn note_lag(&mut self) {
        self.lag += 1;
    }

    /// Queues a command for the next tick.
    pub fn submit(&mut self, seq: u64, cmd: Command) {
        self.pending.push((seq, cmd));
    }

    /// Applies queued commands and advances one tick unless paused. Returns
    /// a frame on every telemetry tick.
    pub fn tick(&mut self) -> Option<TelemetryFrame> {
        self.apply_pending();
        if self.paused {
            return None;
        }
        let act = self.actuators();
        let params = VehicleParams {
            tail_mode: self.pilot.tail_mode(),
            ..self.params
        };
        match step(
            &self.state,
            &act,
            &params,
            &self.wing,
            &self.dataset,
            DEFAULT_DT_S,
        ) {
            Ok(next) => self.state = next,
            Err(e) => {
                log::warn!("simulation stopped ({e}); restarting from rest");
                self.state = self.initial;
            }
        }
        if let Some(traj) = &mut self.trajectory {
            traj.push(self.state);
        }
        self.sim_ticks += 1;
        self.sim_ticks.is_multiple_of(TELEMETRY_DIVISOR).then(|| self.frame())
    }

    pub fn frame(&self) -> TelemetryFrame {
        let params = VehicleParams {
            tail_mode: self.pilot.tail_mode(),
            ..self.params
        };
        TelemetryFrame::new(
            &self.state,
            &self.actuators(),
            self.pilot.tail_mode(),
            &params,
            self.paused,
            self.lag,
        )
    }

    /// Commands apply in seq order, and within one tick each axis keeps only
    /// its highest-seq value. A reset discards axis values queued before it.
    fn apply_pending(&mut self) {
        if self.pending.is_empty() {
            return;
        }
        let mut pending = std::mem::take(&mut self.pending);
        // stable: equal seqs keep arrival order, so the later arrival wins
        pending.sort_by_key(|(seq, _)| *seq);
        let mut latest: Vec<(Slot, Command)> = Vec::new();
        for (_, cmd) in pending {
            let slot = match cmd {
                Command::Throttle(_) => Slot::Throttle,
                Command::Yaw(_) => Slot::Yaw,
                Command::Pitch(_) => Slot::Pitch,
                Command::TailMode(_) => Slot::TailMode,
                Command::Reset => {
                    self.state = self.initial;
                    self.pilot = PilotCommand::new(0.0, 0.0, 0.0, self.params.tail_mode);
                    latest.clear();
                    if let Some(traj) = &mut self.trajectory {
                        traj.push(self.state);
                    }
                    continue;
                }
                Command::Pause => {
                    self.paused = true;
                    continue;
                }
                Command::Resume => {
                    self.paused = false;
                    continue;
                }
            };
            latest.retain(|(s, _)| *s != slot);
            latest.push((slot, cmd));
        }
        for (_, cmd) in latest {
            self.pilot = match cmd {
                Command::Throttle(v) => self.pilot.with_throttle(v),
                Command::Yaw(v) => self.pilot.with_yaw(v),
                Command::Pitch(v) => self.pilot.with_pitch(v),
                Command::TailMode(m) => self.pilot.with_tail_mode(m),
                _ => self.pilot,
            };
        }
    }
}
