//! Whole-workbench configuration, loaded from TOML. Every section and key is
//! optional; missing values take the library defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::control::ControlGains;
use crate::dynamics::VehicleParams;
use crate::energy::{
    Anchor, PowerKind, PowerModel, DEFAULT_BATTERY_J, FLAPPING_ENDURANCE_S, FLAPPING_MAX_SPEED_MPS,
    PROPELLER_MAX_SPEED_MPS,
};
use crate::error::{invalid, Error, Result};
use crate::wing::{ThrustDataset, WingSpec, DEFAULT_SERVO_RATE_LIMIT_DPS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyConfig {
    pub battery_j: f64,
    pub flapping_endurance_s: f64,
    pub flapping_max_speed_mps: f64,
    pub propeller_max_speed_mps: f64,
    /// Propeller (speed, endurance) anchors. Empty means the two default
    /// anchors: 2400 s at 0.6 m/s and 162 s at the propeller max speed.
    pub propeller_anchors: Vec<Anchor>,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        Self {
            battery_j: DEFAULT_BATTERY_J,
            flapping_endurance_s: FLAPPING_ENDURANCE_S,
            flapping_max_speed_mps: FLAPPING_MAX_SPEED_MPS,
            propeller_max_speed_mps: PROPELLER_MAX_SPEED_MPS,
            propeller_anchors: Vec::new(),
        }
    }
}

impl EnergyConfig {
    pub fn flapping_model(&self) -> PowerModel {
        PowerModel {
            kind: PowerKind::Flapping,
            battery_j: self.battery_j,
            max_speed_mps: self.flapping_max_speed_mps,
            flapping_endurance_s: self.flapping_endurance_s,
            anchors: vec![Anchor {
                speed_mps: self.flapping_max_speed_mps,
                endurance_s: self.flapping_endurance_s,
            }],
        }
    }

    pub fn propeller_model(&self) -> PowerModel {
        let mut model = PowerModel::propeller_with_max_speed(self.propeller_max_speed_mps);
        model.battery_j = self.battery_j;
        if !self.propeller_anchors.is_empty() {
            model.anchors = self.propeller_anchors.clone();
        }
        model
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub servo_rate_limit_dps: f64,
    /// Thrust table to use instead of the bundled one. Relative paths are
    /// resolved against the config file's directory.
    pub dataset: Option<PathBuf>,
    /// Wing mounted on the vehicle.
    pub wing: WingSpec,
    pub vehicle: VehicleParams,
    pub control: ControlGains,
    pub energy: EnergyConfig,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            servo_rate_limit_dps: DEFAULT_SERVO_RATE_LIMIT_DPS,
            dataset: None,
            wing: WingSpec::optimal(),
            vehicle: VehicleParams::default(),
            control: ControlGains::default(),
            energy: EnergyConfig::default(),
        }
    }
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_toml_str(&text).map_err(|e| match e {
            Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        if let (Some(ds), Some(dir)) = (&cfg.dataset, path.parent()) {
            if ds.is_relative() {
                cfg.dataset = Some(dir.join(ds));
            }
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.servo_rate_limit_dps > 0.0 && self.servo_rate_limit_dps.is_finite()) {
            return Err(invalid("servo_rate_limit_dps", "must be > 0"));
        }
        self.vehicle.validate()?;
        self.control.validate()?;
        self.energy.flapping_model().validate()?;
        self.energy.propeller_model().validate()
    }

    pub fn load_dataset(&self) -> Result<ThrustDataset> {
        match &self.dataset {
            Some(path) => ThrustDataset::load(path),
            None => Ok(ThrustDataset::bundled()),
        }
    }
}
