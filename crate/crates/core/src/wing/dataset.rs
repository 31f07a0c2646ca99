use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{FlapSetting, GridKey, Stiffness, TrailingEdge, WingKey, WingSpec};
use crate::error::{invalid, Error, Result};

pub const DATASET_HEADER: &str =
    "stiffness,ar,gamma,trailing_edge,width_cm,length_cm,amplitude_deg,frequency_hz,mean_thrust_gf,provenance";

const BUNDLED_CSV: &str = include_str!("../../data/thrust_dataset.csv");

/// Where a thrust value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Provenance {
    /// Number reported for a measured stand run.
    #[serde(rename = "anchored")]
    Anchored,
    /// Generated to follow reported trends; not a measurement.
    #[serde(rename = "synthetic")]
    Synthetic,
    /// Reduced from stand recordings by `standlab`.
    #[serde(rename = "measured")]
    Measured,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Anchored => "anchored",
            Provenance::Synthetic => "synthetic",
            Provenance::Measured => "measured",
        })
    }
}

impl FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "anchored" => Ok(Provenance::Anchored),
            "synthetic" => Ok(Provenance::Synthetic),
            "measured" => Ok(Provenance::Measured),
            other => Err(Error::Parse(format!("unknown provenance '{other}'"))),
        }
    }
}

/// One cycle-averaged thrust value for a wing at a flap setting.
///
/// Amplitude may be zero here (the "no motion" row), unlike [`FlapSetting`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThrustRow {
    pub wing: WingSpec,
    pub amplitude_deg: f64,
    pub frequency_hz: f64,
    pub mean_thrust_gf: f64,
    pub provenance: Provenance,
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    stiffness: Stiffness,
    ar: f64,
    gamma: f64,
    trailing_edge: TrailingEdge,
    width_cm: f64,
    length_cm: f64,
    amplitude_deg: f64,
    frequency_hz: f64,
    mean_thrust_gf: f64,
    provenance: Provenance,
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    amplitude_deg: f64,
    frequency_hz: f64,
    thrust_gf: f64,
    provenance: Provenance,
}

#[derive(Debug, Clone)]
struct Family {
    wing: WingSpec,
    cells: BTreeMap<GridKey, Cell>,
}

impl Family {
    fn axis(&self, pick: impl Fn(&Cell) -> f64) -> Vec<f64> {
        let mut values: Vec<f64> = self.cells.values().map(pick).collect();
        values.sort_by(f64::total_cmp);
        values.dedup_by(|a, b| (*a - *b).abs() < 5e-4);
        values
    }

    fn cell(&self, amplitude_deg: f64, frequency_hz: f64) -> Result<f64> {
        self.cells
            .get(&GridKey::new(amplitude_deg, frequency_hz))
            .map(|c| c.thrust_gf)
            .ok_or_else(|| {
                Error::NotFound(format!(
                    "{} has no grid cell at ({amplitude_deg} deg, {frequency_hz} Hz)",
                    self.wing
                ))
            })
    }
}

/// Thrust-stand averages grouped into wing families, each an
/// amplitude x frequency grid.
#[derive(Debug, Clone, Default)]
pub struct ThrustDataset {
    families: BTreeMap<WingKey, Family>,
}

impl ThrustDataset {
    pub fn new() -> Self {
        Self::default()
    }

    /// Dataset shipped with the crate: the measured optimum plus synthetic
    /// trend-following rows for every tested wing shape.
    pub fn bundled() -> Self {
        Self::from_csv_reader(BUNDLED_CSV.as_bytes()).expect("bundled thrust dataset is valid")
    }

    pub fn from_rows(rows: impl IntoIterator<Item = ThrustRow>) -> Result<Self> {
        let mut ds = Self::new();
        for row in rows {
            ds.insert(row)?;
        }
        Ok(ds)
    }

    /// Adds a row; a second row for the same (wing, setting) is an error.
    pub fn insert(&mut self, row: ThrustRow) -> Result<()> {
        if !row.mean_thrust_gf.is_finite() {
            return Err(invalid(
                "mean thrust",
                format!("{} is not finite", row.mean_thrust_gf),
            ));
        }
        if !(row.amplitude_deg >= 0.0 && row.amplitude_deg <= super::MAX_AMPLITUDE_DEG) {
            return Err(invalid(
                "row amplitude",
                format!("{} deg", row.amplitude_deg),
            ));
        }
        if !(row.frequency_hz > 0.0 && row.frequency_hz <= super::MAX_FREQUENCY_HZ) {
            return Err(invalid("row frequency", format!("{} Hz", row.frequency_hz)));
        }
        let family = self
            .families
            .entry(row.wing.key())
            .or_insert_with(|| Family {
                wing: row.wing,
                cells: BTreeMap::new(),
            });
        match family
            .cells
            .entry(GridKey::new(row.amplitude_deg, row.frequency_hz))
        {
            Entry::Occupied(_) => Err(invalid(
                "dataset row",
                format!(
                    "duplicate key {} at ({} deg, {} Hz)",
                    row.wing, row.amplitude_deg, row.frequency_hz
                ),
            )),
            Entry::Vacant(slot) => {
                slot.insert(Cell {
                    amplitude_deg: row.amplitude_deg,
                    frequency_hz: row.frequency_hz,
                    thrust_gf: row.mean_thrust_gf,
                    provenance: row.provenance,
                });
                Ok(())
            }
        }
    }

    pub fn len(&self) -> usize {
        self.families.values().map(|f| f.cells.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn wings(&self) -> impl Iterator<Item = &WingSpec> {
        self.families.values().map(|f| &f.wing)
    }

    /// Rows in deterministic order: by wing family, then amplitude, then frequency.
    pub fn rows(&self) -> impl Iterator<Item = ThrustRow> + '_ {
        self.families.values().flat_map(|f| {
            f.cells.values().map(move |c| ThrustRow {
                wing: f.wing,
                amplitude_deg: c.amplitude_deg,
                frequency_hz: c.frequency_hz,
                mean_thrust_gf: c.thrust_gf,
                provenance: c.provenance,
            })
        })
    }

    pub fn family_rows<'a>(
        &'a self,
        wing: &WingSpec,
    ) -> Result<impl Iterator<Item = ThrustRow> + 'a> {
        let family = self.family(wing)?;
        Ok(family.cells.values().map(move |c| ThrustRow {
            wing: family.wing,
            amplitude_deg: c.amplitude_deg,
            frequency_hz: c.frequency_hz,
            mean_thrust_gf: c.thrust_gf,
            provenance: c.provenance,
        }))
    }

    fn family(&self, wing: &WingSpec) -> Result<&Family> {
        self.families
            .get(&wing.key())
            .ok_or_else(|| Error::NotFound(wing.to_string()))
    }

    /// Cycle-averaged thrust for `wing` flapping at `setting`, in grams-force.
    ///
    /// Exact on grid points, bilinear in (amplitude, frequency) between them.
    /// Categorical and shape parameters are never interpolated; queries
    /// outside the family's grid are rejected.
    pub fn mean_thrust(&self, wing: &WingSpec, setting: &FlapSetting) -> Result<f64> {
        let family = self.family(wing)?;
        let amplitudes = family.axis(|c| c.amplitude_deg);
        let frequencies = family.axis(|c| c.frequency_hz);
        let (a0, a1, ta) = bracket("amplitude_deg", &amplitudes, setting.amplitude_deg())?;
        let (f0, f1, tf) = bracket("frequency_hz", &frequencies, setting.frequency_hz())?;

        let v00 = family.cell(a0, f0)?;
        let v01 = family.cell(a0, f1)?;
        let v10 = family.cell(a1, f0)?;
        let v11 = family.cell(a1, f1)?;
        let low_amp = lerp(v00, v01, tf);
        let high_amp = lerp(v10, v11, tf);
        Ok(lerp(low_amp, high_amp, ta))
    }

    /// Grid setting with the greatest mean thrust for `wing`.
    ///
    /// Ties go to the lower frequency, then the lower amplitude.
    pub fn optimal_setting(&self, wing: &WingSpec) -> Result<(FlapSetting, f64)> {
        let family = self.family(wing)?;
        select_best(family.cells.values().filter_map(|c| {
            FlapSetting::new(c.amplitude_deg, c.frequency_hz)
                .ok()
                .map(|s| (s, c.thrust_gf))
        }))
        .ok_or_else(|| Error::NotFound(format!("{} has no flapping rows", family.wing)))
    }

    pub fn from_csv_reader(reader: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
        if header.join(",") != DATASET_HEADER {
            return Err(Error::Parse(format!(
                "unexpected dataset header '{}'",
                header.join(",")
            )));
        }
        let mut ds = Self::new();
        for (line, record) in rdr.deserialize::<CsvRow>().enumerate() {
            let r = record?;
            let wing = WingSpec::from_cm(
                r.width_cm,
                r.length_cm,
                r.gamma,
                r.stiffness,
                r.trailing_edge,
            )?;
            if (wing.aspect_ratio() - r.ar).abs() > 5e-3 {
                return Err(Error::Parse(format!(
                    "row {}: ar {} disagrees with width/length {}",
                    line + 2,
                    r.ar,
                    wing.aspect_ratio()
                )));
            }
            ds.insert(ThrustRow {
                wing,
                amplitude_deg: r.amplitude_deg,
                frequency_hz: r.frequency_hz,
                mean_thrust_gf: r.mean_thrust_gf,
                provenance: r.provenance,
            })?;
        }
        Ok(ds)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }

    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        write_rows(self.rows(), writer)
    }
}

/// Writes rows in the dataset CSV schema.
pub fn write_rows(rows: impl IntoIterator<Item = ThrustRow>, writer: impl Write) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(writer);
    wtr.write_record(DATASET_HEADER.split(','))?;
    for row in rows {
        wtr.serialize(CsvRow {
            stiffness: row.wing.stiffness(),
            ar: (row.wing.aspect_ratio() * 1000.0).round() / 1000.0,
            gamma: row.wing.gamma(),
            trailing_edge: row.wing.trailing_edge(),
            width_cm: (row.wing.width_m() * 100.0 * 1e6).round() / 1e6,
            length_cm: (row.wing.length_m() * 100.0 * 1e6).round() / 1e6,
            amplitude_deg: row.amplitude_deg,
            frequency_hz: row.frequency_hz,
            mean_thrust_gf: row.mean_thrust_gf,
            provenance: row.provenance,
        })?;
    }
    wtr.flush()?;
    Ok(())
}

/// Argmax over settings with the dataset tie-break (lower frequency, then
/// lower amplitude). Independent of input order.
pub fn select_best(
    candidates: impl IntoIterator<Item = (FlapSetting, f64)>,
) -> Option<(FlapSetting, f64)> {
    candidates
        .into_iter()
        .fold(None, |best, (setting, thrust)| match best {
            None => Some((setting, thrust)),
            Some((b, bt)) => {
                let better = thrust > bt
                    || (thrust == bt
                        && (setting.frequency_hz(), setting.amplitude_deg())
                            < (b.frequency_hz(), b.amplitude_deg()));
                Some(if better { (setting, thrust) } else { (b, bt) })
            }
        })
}

fn lerp(a: f64, b: f64, t: f64) -> f64 {
    if t == 0.0 {
        a
    } else if t == 1.0 {
        b
    } else {
        a + (b - a) * t
    }
}

/// Finds grid neighbours `lo <= x <= hi` and the fractional position of `x`.
fn bracket(what: &'static str, axis: &[f64], x: f64) -> Result<(f64, f64, f64)> {
    const SNAP: f64 = 1e-9;
    let (low, high) = match (axis.first(), axis.last()) {
        (Some(&l), Some(&h)) => (l, h),
        _ => return Err(Error::NotFound(format!("empty {what} axis"))),
    };
    if !(x >= low - SNAP && x <= high + SNAP) {
        return Err(Error::OutOfRange {
            what,
            value: x,
            low,
            high,
        });
    }
    if let Some(&exact) = axis.iter().find(|&&v| (v - x).abs() <= SNAP) {
        return Ok((exact, exact, 0.0));
    }
    let i = axis.partition_point(|&v| v < x);
    let (lo, hi) = (axis[i - 1], axis[i]);
    Ok((lo, hi, (x - lo) / (hi - lo)))
}
