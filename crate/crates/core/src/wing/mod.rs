//! Parametric wing model, servo flapping profiles and the thrust lookup
//! built on thrust-stand averages.
//!
//! Wing geometry follows the stand convention: `width_m` is the lateral
//! extent of the wing arm, `length_m` the longitudinal extent, and `gamma`
//! the longitudinal position of the wing tip as a fraction of the length
//! (0 = straight leading edge, larger = more sweep back).

mod dataset;
mod profile;
mod waveform;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub use dataset::{select_best, write_rows, Provenance, ThrustDataset, ThrustRow, DATASET_HEADER};
pub use profile::{
    generate_profile, generate_profile_with_tick, FlapProfile, DEFAULT_SERVO_RATE_LIMIT_DPS,
    SERVO_TICK_S,
};
pub use waveform::{thrust_waveform, ThrustWaveform, DOWNSTROKE_END_PHASE, UPSTROKE_END_PHASE};

/// Highest flap frequency the 9 g servo can follow at useful amplitudes.
pub const MAX_FREQUENCY_HZ: f64 = 2.0;
/// Servo travel limit on either side of horizontal.
pub const MAX_AMPLITUDE_DEG: f64 = 90.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stiffness {
    /// 1.0 mm rod from the root section to the tip.
    Flexible,
    /// 1.5 mm rod all the way to the tip.
    Stiff,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrailingEdge {
    Straight,
    Concave,
}

impl fmt::Display for Stiffness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stiffness::Flexible => "flexible",
            Stiffness::Stiff => "stiff",
        })
    }
}

impl FromStr for Stiffness {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "flexible" => Ok(Stiffness::Flexible),
            "stiff" => Ok(Stiffness::Stiff),
            other => Err(Error::Parse(format!("unknown stiffness '{other}'"))),
        }
    }
}

impl fmt::Display for TrailingEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrailingEdge::Straight => "straight",
            TrailingEdge::Concave => "concave",
        })
    }
}

impl FromStr for TrailingEdge {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "straight" => Ok(TrailingEdge::Straight),
            "concave" => Ok(TrailingEdge::Concave),
            other => Err(Error::Parse(format!("unknown trailing edge '{other}'"))),
        }
    }
}

/// Shape and structure of one wing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WingSpecRaw", into = "WingSpecRaw")]
pub struct WingSpec {
    width_m: f64,
    length_m: f64,
    gamma: f64,
    stiffness: Stiffness,
    trailing_edge: TrailingEdge,
}

impl WingSpec {
    pub fn new(
        width_m: f64,
        length_m: f64,
        gamma: f64,
        stiffness: Stiffness,
        trailing_edge: TrailingEdge,
    ) -> Result<Self> {
        if !(width_m.is_finite() && width_m > 0.0) {
            return Err(invalid("wing width", format!("{width_m} m must be > 0")));
        }
        if !(length_m.is_finite() && length_m > 0.0) {
            return Err(invalid("wing length", format!("{length_m} m must be > 0")));
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(invalid(
                "sweep-back ratio",
                format!("{gamma} not in [0, 1]"),
            ));
        }
        Ok(Self {
            width_m,
            length_m,
            gamma,
            stiffness,
            trailing_edge,
        })
    }

    /// Convenience constructor from centimetres, the unit used on the stand.
    pub fn from_cm(
        width_cm: f64,
        length_cm: f64,
        gamma: f64,
        stiffness: Stiffness,
        trailing_edge: TrailingEdge,
    ) -> Result<Self> {
        Self::new(
            width_cm / 100.0,
            length_cm / 100.0,
            gamma,
            stiffness,
            trailing_edge,
        )
    }

    /// Best wing found on the stand: Stiff, AR 1.0 (53 x 53 cm), gamma 0.25,
    /// concave trailing edge.
    pub fn optimal() -> Self {
        Self::from_cm(53.0, 53.0, 0.25, Stiffness::Stiff, TrailingEdge::Concave)
            .expect("constant wing is valid")
    }

    pub fn width_m(&self) -> f64 {
        self.width_m
    }

    pub fn length_m(&self) -> f64 {
        self.length_m
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn stiffness(&self) -> Stiffness {
        self.stiffness
    }

    pub fn trailing_edge(&self) -> TrailingEdge {
        self.trailing_edge
    }

    /// AR = W / L.
    pub fn aspect_ratio(&self) -> f64 {
        self.width_m / self.length_m
    }

    pub(crate) fn key(&self) -> WingKey {
        WingKey {
            stiffness: self.stiffness,
            trailing_edge: self.trailing_edge,
            width_mm: (self.width_m * 1000.0).round() as i64,
            length_mm: (self.length_m * 1000.0).round() as i64,
            gamma_milli: (self.gamma * 1000.0).round() as i64,
        }
    }
}

impl fmt::Display for WingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},width_cm={},length_cm={},gamma={}",
            self.stiffness,
            self.trailing_edge,
            round6(self.width_m * 100.0),
            round6(self.length_m * 100.0),
            self.gamma
        )
    }
}

impl FromStr for WingSpec {
    type Err = Error;

    /// Parses the `Display` form, e.g. `stiff,concave,width_cm=53,length_cm=53,gamma=0.25`.
    fn from_str(s: &str) -> Result<Self> {
        let mut stiffness = None;
        let mut trailing_edge = None;
        let mut width_cm = None;
        let mut length_cm = None;
        let mut gamma = None;
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part.split_once('=') {
                None => {
                    if let Ok(st) = part.parse::<Stiffness>() {
                        stiffness = Some(st);
                    } else {
                        trailing_edge = Some(part.parse::<TrailingEdge>()?);
                    }
                }
                Some((key, value)) => {
                    let key = key.trim();
                    let value = value.trim();
                    match key {
                        "stiffness" => stiffness = Some(value.parse()?),
                        "trailing_edge" => trailing_edge = Some(value.parse()?),
                        "width_cm" => width_cm = Some(parse_f64(key, value)?),
                        "length_cm" => length_cm = Some(parse_f64(key, value)?),
                        "gamma" => gamma = Some(parse_f64(key, value)?),
                        _ => return Err(Error::Parse(format!("unknown wing field '{key}'"))),
                    }
                }
            }
        }
        let missing = |name: &str| Error::Parse(format!("wing spec '{s}' is missing {name}"));
        Self::from_cm(
            width_cm.ok_or_else(|| missing("width_cm"))?,
            length_cm.ok_or_else(|| missing("length_cm"))?,
            gamma.ok_or_else(|| missing("gamma"))?,
            stiffness.ok_or_else(|| missing("stiffness"))?,
            trailing_edge.ok_or_else(|| missing("trailing edge"))?,
        )
    }
}

#[derive(Serialize, Deserialize)]
struct WingSpecRaw {
    width_m: f64,
    length_m: f64,
    gamma: f64,
    stiffness: Stiffness,
    trailing_edge: TrailingEdge,
}

impl TryFrom<WingSpecRaw> for WingSpec {
    type Error = Error;

    fn try_from(raw: WingSpecRaw) -> Result<Self> {
        WingSpec::new(
            raw.width_m,
            raw.length_m,
            raw.gamma,
            raw.stiffness,
            raw.trailing_edge,
        )
    }
}

impl From<WingSpec> for WingSpecRaw {
    fn from(w: WingSpec) -> Self {
        Self {
            width_m: w.width_m,
            length_m: w.length_m,
            gamma: w.gamma,
            stiffness: w.stiffness,
            trailing_edge: w.trailing_edge,
        }
    }
}

/// Dataset family identity. Geometry is quantised to millimetres and
/// thousandths of gamma so that values parsed from text compare equal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) struct WingKey {
    stiffness: Stiffness,
    trailing_edge: TrailingEdge,
    width_mm: i64,
    length_mm: i64,
    gamma_milli: i64,
}

/// Amplitude and frequency command for one wing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FlapSettingRaw", into = "FlapSettingRaw")]
pub struct FlapSetting {
    amplitude_deg: f64,
    frequency_hz: f64,
}

impl FlapSetting {
    pub fn new(amplitude_deg: f64, frequency_hz: f64) -> Result<Self> {
        if !(amplitude_deg > 0.0 && amplitude_deg <= MAX_AMPLITUDE_DEG) {
            return Err(invalid(
                "flap amplitude",
                format!("{amplitude_deg} deg not in (0, {MAX_AMPLITUDE_DEG}]"),
            ));
        }
        if !(frequency_hz > 0.0 && frequency_hz <= MAX_FREQUENCY_HZ) {
            return Err(invalid(
                "flap frequency",
                format!("{frequency_hz} Hz not in (0, {MAX_FREQUENCY_HZ}]"),
            ));
        }
        Ok(Self {
            amplitude_deg,
            frequency_hz,
        })
    }

    pub fn amplitude_deg(&self) -> f64 {
        self.amplitude_deg
    }

    pub fn frequency_hz(&self) -> f64 {
        self.frequency_hz
    }

    pub fn period_s(&self) -> f64 {
        1.0 / self.frequency_hz
    }

    /// Peak angular speed of A·sin(2πft), i.e. A·2πf in deg/s.
    pub fn peak_speed_dps(&self) -> f64 {
        self.amplitude_deg * std::f64::consts::TAU * self.frequency_hz
    }

    pub(crate) fn grid_key(&self) -> GridKey {
        GridKey::new(self.amplitude_deg, self.frequency_hz)
    }
}

impl fmt::Display for FlapSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} deg @ {} Hz", self.amplitude_deg, self.frequency_hz)
    }
}

#[derive(Serialize, Deserialize)]
struct FlapSettingRaw {
    amplitude_deg: f64,
    frequency_hz: f64,
}

impl TryFrom<FlapSettingRaw> for FlapSetting {
    type Error = Error;

    fn try_from(raw: FlapSettingRaw) -> Result<Self> {
        FlapSetting::new(raw.amplitude_deg, raw.frequency_hz)
    }
}

impl From<FlapSetting> for FlapSettingRaw {
    fn from(s: FlapSetting) -> Self {
        Self {
            amplitude_deg: s.amplitude_deg,
            frequency_hz: s.frequency_hz,
        }
    }
}

/// Grid cell identity in millidegrees and millihertz.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) struct GridKey {
    pub(crate) amplitude_mdeg: i64,
    pub(crate) frequency_mhz: i64,
}

impl GridKey {
    pub(crate) fn new(amplitude_deg: f64, frequency_hz: f64) -> Self {
        Self {
            amplitude_mdeg: (amplitude_deg * 1000.0).round() as i64,
            frequency_mhz: (frequency_hz * 1000.0).round() as i64,
        }
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .map_err(|e| Error::Parse(format!("{key}='{value}': {e}")))
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aspect_ratio_is_derived() {
        let w = WingSpec::from_cm(37.0, 53.0, 0.5, Stiffness::Flexible, TrailingEdge::Straight)
            .unwrap();
        assert!((w.aspect_ratio() - 37.0 / 53.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(WingSpec::new(0.0, 0.5, 0.2, Stiffness::Stiff, TrailingEdge::Concave).is_err());
        assert!(WingSpec::new(0.5, -1.0, 0.2, Stiffness::Stiff, TrailingEdge::Concave).is_err());
        assert!(WingSpec::new(0.5, 0.5, 1.2, Stiffness::Stiff, TrailingEdge::Concave).is_err());
        assert!(WingSpec::new(0.5, 0.5, -0.1, Stiffness::Stiff, TrailingEdge::Concave).is_err());
    }

    #[test]
    fn flap_setting_bounds() {
        assert!(FlapSetting::new(90.0, 2.0).is_ok());
        assert!(FlapSetting::new(90.0, 0.0).is_err());
        assert!(FlapSetting::new(0.0, 1.0).is_err());
        assert!(FlapSetting::new(91.0, 1.0).is_err());
        assert!(FlapSetting::new(45.0, 2.01).is_err());
        assert!(FlapSetting::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn wing_spec_text_form() {
        let w = WingSpec::optimal();
        let text = w.to_string();
        assert_eq!(text, "stiff,concave,width_cm=53,length_cm=53,gamma=0.25");
        let back: WingSpec = text.parse().unwrap();
        assert_eq!(back.key(), w.key());
        let keyed: WingSpec =
            "stiffness=flexible, trailing_edge=straight, width_cm=61, length_cm=53, gamma=0.5"
                .parse()
                .unwrap();
        assert_eq!(keyed.stiffness(), Stiffness::Flexible);
        assert!("stiff,width_cm=53,length_cm=53"
            .parse::<WingSpec>()
            .is_err());
    }

    #[test]
    fn peak_speed() {
        let s = FlapSetting::new(90.0, 1.25).unwrap();
        assert!((s.peak_speed_dps() - 706.858_347_057_703_4).abs() < 1e-9);
    }
}
