//! Thrust-stand log reduction.
//!
//! The stand arm rests on a front and a back load cell. Forward thrust
//! loads the two cells together while the flap oscillation rocks the arm
//! between them, so the total thrust is their sum. Each run starts with the
//! wing held level for a tare window; the flapping that follows is averaged
//! over whole flap cycles, with cycle boundaries taken from the commanded
//! frequency.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::wing::{select_best, FlapSetting, GridKey, Provenance, ThrustRow, WingSpec};

pub const RECORDING_HEADER: &str = "t_s,front_gf,back_gf";
pub const DEFAULT_TARE_WINDOW_S: f64 = 2.0;
pub const DEFAULT_SAMPLE_RATE_HZ: f64 = 80.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RecordingMeta {
    pub wing: WingSpec,
    pub setting: FlapSetting,
    pub tare_window_s: f64,
    /// Lever-arm correction from cell reading to thrust at the wing.
    pub arm_gain: f64,
}

impl RecordingMeta {
    pub fn new(wing: WingSpec, setting: FlapSetting) -> Self {
        Self {
            wing,
            setting,
            tare_window_s: DEFAULT_TARE_WINDOW_S,
            arm_gain: 1.0,
        }
    }
}

/// Two-channel load-cell log in grams-force. Readings may be negative.
#[derive(Debug, Clone, PartialEq)]
pub struct StandRecording {
    pub sample_rate_hz: f64,
    pub front_gf: Vec<f64>,
    pub back_gf: Vec<f64>,
    pub meta: RecordingMeta,
}

impl StandRecording {
    pub fn new(
        sample_rate_hz: f64,
        front_gf: Vec<f64>,
        back_gf: Vec<f64>,
        meta: RecordingMeta,
    ) -> Result<Self> {
        let rec = Self {
            sample_rate_hz,
            front_gf,
            back_gf,
            meta,
        };
        rec.validate()?;
        Ok(rec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate_hz > 0.0 && self.sample_rate_hz.is_finite()) {
            return Err(invalid(
                "sample rate",
                format!("{} Hz must be > 0", self.sample_rate_hz),
            ));
        }
        if self.front_gf.len() != self.back_gf.len() {
            return Err(invalid(
                "recording",
                format!(
                    "front has {} samples, back {}",
                    self.front_gf.len(),
                    self.back_gf.len()
                ),
            ));
        }
        if !(self.meta.tare_window_s >= 0.0 && self.meta.arm_gain.is_finite()) {
            return Err(invalid(
                "recording metadata",
                "tare window must be >= 0 and arm gain finite",
            ));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.front_gf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.front_gf.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.len() as f64 / self.sample_rate_hz
    }

    fn tare_samples(&self) -> usize {
        (self.meta.tare_window_s * self.sample_rate_hz).round() as usize
    }

    /// Samples recorded after the tare window.
    pub fn flapping_range(&self) -> std::ops::Range<usize> {
        self.tare_samples().min(self.len())..self.len()
    }

    pub fn parse(reader: impl Read) -> Result<Self> {
        let mut meta: BTreeMap<String, String> = BTreeMap::new();
        let mut body = String::new();
        for line in BufReader::new(reader).lines() {
            let line = line?;
            let trimmed = line.trim();
            if let Some(comment) = trimmed.strip_prefix('#') {
                if let Some((k, v)) = comment.split_once('=') {
                    meta.insert(k.trim().to_owned(), v.trim().to_owned());
                }
            } else if !trimmed.is_empty() {
                body.push_str(trimmed);
                body.push('\n');
            }
        }
        let field = |key: &str| {
            meta.get(key)
                .ok_or_else(|| Error::Parse(format!("recording is missing '# {key}='")))
        };
        let number = |key: &str| -> Result<f64> {
            let v = field(key)?;
            v.parse()
                .map_err(|e| Error::Parse(format!("{key}='{v}': {e}")))
        };
        let wing: WingSpec = field("wing")?.parse()?;
        let setting = FlapSetting::new(number("amplitude_deg")?, number("frequency_hz")?)?;
        let sample_rate_hz = number("sample_rate_hz")?;
        let tare_window_s = if meta.contains_key("tare_window_s") {
            number("tare_window_s")?
        } else {
            DEFAULT_TARE_WINDOW_S
        };
        let arm_gain = if meta.contains_key("arm_gain") {
            number("arm_gain")?
        } else {
            1.0
        };

        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(body.as_bytes());
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
        if header.join(",") != RECORDING_HEADER {
            return Err(Error::Parse(format!(
                "unexpected recording header '{}'",
                header.join(",")
            )));
        }
        let mut front = Vec::new();
        let mut back = Vec::new();
        let mut last_t = f64::NEG_INFINITY;
        for record in rdr.deserialize::<(f64, f64, f64)>() {
            let (t, f, b) = record?;
            if t <= last_t {
                return Err(Error::Parse(format!(
                    "timestamps not increasing at t = {t}"
                )));
            }
            last_t = t;
            front.push(f);
            back.push(b);
        }
        Self::new(
            sample_rate_hz,
            front,
            back,
            RecordingMeta {
                wing,
                setting,
                tare_window_s,
                arm_gain,
            },
        )
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(std::fs::File::open(path)?).map_err(|e| match e {
            Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn write(&self, mut writer: impl Write) -> Result<()> {
        writeln!(writer, "# wing={}", self.meta.wing)?;
        writeln!(
            writer,
            "# amplitude_deg={}",
            self.meta.setting.amplitude_deg()
        )?;
        writeln!(
            writer,
            "# frequency_hz={}",
            self.meta.setting.frequency_hz()
        )?;
        writeln!(writer, "# sample_rate_hz={}", self.sample_rate_hz)?;
        writeln!(writer, "# tare_window_s={}", self.meta.tare_window_s)?;
        writeln!(writer, "# arm_gain={}", self.meta.arm_gain)?;
        writeln!(writer, "{RECORDING_HEADER}")?;
        for (i, (f, b)) in self.front_gf.iter().zip(&self.back_gf).enumerate() {
            writeln!(
                writer,
                "{:.4},{f:.6},{b:.6}",
                i as f64 / self.sample_rate_hz
            )?;
        }
        Ok(())
    }
}

/// Removes each channel's mean over the tare window from the whole channel.
pub fn tare(rec: &StandRecording) -> Result<StandRecording> {
    rec.validate()?;
    let n = rec.tare_samples();
    if n == 0 || n > rec.len() {
        return Err(Error::InsufficientData(format!(
            "tare window of {} s needs {n} samples, recording has {}",
            rec.meta.tare_window_s,
            rec.len()
        )));
    }
    let zero = |ch: &[f64]| -> Vec<f64> {
        let offset = ch[..n].iter().sum::<f64>() / n as f64;
        ch.iter().map(|v| v - offset).collect()
    };
    Ok(StandRecording {
        front_gf: zero(&rec.front_gf),
        back_gf: zero(&rec.back_gf),
        ..rec.clone()
    })
}

/// (front + back) × arm gain, sample by sample.
pub fn total_thrust(rec: &StandRecording) -> Result<Vec<f64>> {
    rec.validate()?;
    Ok(rec
        .front_gf
        .iter()
        .zip(&rec.back_gf)
        .map(|(f, b)| (f + b) * rec.meta.arm_gain)
        .collect())
}

/// Mean over the largest whole number of flap cycles; a trailing partial
/// cycle is dropped.
pub fn average_thrust(series: &[f64], frequency_hz: f64, sample_rate_hz: f64) -> Result<f64> {
    if !(frequency_hz > 0.0 && sample_rate_hz > 0.0) {
        return Err(invalid(
            "averaging rates",
            "frequency and sample rate must be > 0",
        ));
    }
    let per_cycle = sample_rate_hz / frequency_hz;
    let cycles = (series.len() as f64 / per_cycle + 1e-9).floor();
    if cycles < 2.0 {
        return Err(Error::InsufficientData(format!(
            "{} samples cover {:.2} flap cycles, need at least 2",
            series.len(),
            series.len() as f64 / per_cycle
        )));
    }
    let n = ((cycles * per_cycle).round() as usize).min(series.len());
    Ok(series[..n].iter().sum::<f64>() / n as f64)
}

/// Tare, sum channels, then cycle-average the flapping part of a run.
pub fn reduce(rec: &StandRecording) -> Result<f64> {
    let tared = tare(rec)?;
    let total = total_thrust(&tared)?;
    average_thrust(
        &total[rec.flapping_range()],
        rec.meta.setting.frequency_hz(),
        rec.sample_rate_hz,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepCell {
    pub setting: FlapSetting,
    pub mean_thrust_gf: f64,
}

/// Amplitude × frequency table of mean thrust for one wing.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub wing: WingSpec,
    cells: BTreeMap<GridKey, SweepCell>,
    /// Notes about overwritten duplicate cells.
    pub warnings: Vec<String>,
}

impl SweepGrid {
    pub fn cells(&self) -> impl Iterator<Item = &SweepCell> {
        self.cells.values()
    }

    pub fn get(&self, setting: &FlapSetting) -> Option<f64> {
        self.cells
            .get(&setting.grid_key())
            .map(|c| c.mean_thrust_gf)
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Rows in the thrust-dataset schema.
    pub fn to_rows(&self) -> Vec<ThrustRow> {
        self.cells
            .values()
            .map(|c| ThrustRow {
                wing: self.wing,
                amplitude_deg: c.setting.amplitude_deg(),
                frequency_hz: c.setting.frequency_hz(),
                mean_thrust_gf: c.mean_thrust_gf,
                provenance: Provenance::Measured,
            })
            .collect()
    }

    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        crate::wing::write_rows(self.to_rows(), writer)
    }
}

/// Builds the sweep table from reduced `(meta, mean thrust)` pairs. All runs
/// must share a wing; a repeated setting keeps the later run.
pub fn assemble_sweep(results: &[(RecordingMeta, f64)]) -> Result<SweepGrid> {
    let first = results
        .first()
        .ok_or_else(|| Error::InsufficientData("no recordings".into()))?;
    let wing = first.0.wing;
    let mut cells = BTreeMap::new();
    let mut warnings = Vec::new();
    for (meta, mean) in results {
        if meta.wing.key() != wing.key() {
            return Err(invalid(
                "sweep",
                format!("recordings mix wings {wing} and {}", meta.wing),
            ));
        }
        let cell = SweepCell {
            setting: meta.setting,
            mean_thrust_gf: *mean,
        };
        match cells.entry(meta.setting.grid_key()) {
            Entry::Vacant(slot) => {
                slot.insert(cell);
            }
            Entry::Occupied(mut slot) => {
                warnings.push(format!(
                    "duplicate cell {}: {:.3} gf replaced by {:.3} gf",
                    meta.setting,
                    slot.get().mean_thrust_gf,
                    mean
                ));
                slot.insert(cell);
            }
        }
    }
    Ok(SweepGrid {
        wing,
        cells,
        warnings,
    })
}

/// Reduces every recording (in parallel) and assembles the sweep in input order.
pub fn sweep_table(recordings: &[StandRecording]) -> Result<SweepGrid> {
    let results = recordings
        .par_iter()
        .map(|r| reduce(r).map(|m| (r.meta, m)))
        .collect::<Result<Vec<_>>>()?;
    assemble_sweep(&results)
}

/// Highest-thrust cell, with the dataset tie-break.
pub fn best_setting(grid: &SweepGrid) -> Option<(FlapSetting, f64)> {
    select_best(grid.cells().map(|c| (c.setting, c.mean_thrust_gf)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta(a: f64, f: f64) -> RecordingMeta {
        RecordingMeta::new(WingSpec::optimal(), FlapSetting::new(a, f).unwrap())
    }

    fn constant(front: f64, back: f64, n: usize) -> StandRecording {
        StandRecording::new(80.0, vec![front; n], vec![back; n], meta(90.0, 1.0)).unwrap()
    }

    #[test]
    fn tare_removes_offsets() {
        let t = tare(&constant(2.0, -1.0, 400)).unwrap();
        assert!(t.front_gf.iter().chain(&t.back_gf).all(|v| *v == 0.0));
        let again = tare(&t).unwrap();
        assert_eq!(again, t);
    }

    #[test]
    fn tare_window_longer_than_run() {
        let err = tare(&constant(1.0, 1.0, 100)).unwrap_err();
        assert!(matches!(err, Error::InsufficientData(_)));
    }

    #[test]
    fn total_sums_channels() {
        let rec = constant(1.0, 1.0, 10);
        assert!(total_thrust(&rec).unwrap().iter().all(|v| *v == 2.0));
        let mut half = rec.clone();
        half.meta.arm_gain = 0.5;
        assert!(total_thrust(&half).unwrap().iter().all(|v| *v == 1.0));
        let seesaw =
            StandRecording::new(80.0, vec![3.0, -2.0], vec![-3.0, 2.0], meta(90.0, 1.0)).unwrap();
        assert_eq!(total_thrust(&seesaw).unwrap(), vec![0.0, 0.0]);
        let mut broken = rec;
        broken.back_gf.pop();
        assert!(total_thrust(&broken).is_err());
    }

    #[test]
    fn averaging() {
        assert_eq!(average_thrust(&[5.0; 200], 1.0, 80.0).unwrap(), 5.0);
        let series: Vec<f64> = (0..320)
            .map(|i| 3.0 + 4.0 * (std::f64::consts::TAU * i as f64 / 80.0).sin())
            .collect();
        assert!((average_thrust(&series, 1.0, 80.0).unwrap() - 3.0).abs() < 1e-12);
        let mut longer = series.clone();
        longer.extend_from_slice(&[100.0; 30]);
        assert_eq!(
            average_thrust(&longer, 1.0, 80.0).unwrap(),
            average_thrust(&series, 1.0, 80.0).unwrap()
        );
        assert!(matches!(
            average_thrust(&[1.0; 100], 1.0, 80.0),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn sweep_rules() {
        let planted = [
            (75.0, 1.0, 12.0),
            (90.0, 1.0, 11.0),
            (75.0, 1.5, 9.0),
            (90.0, 1.5, 10.5),
        ];
        let results: Vec<_> = planted.iter().map(|&(a, f, t)| (meta(a, f), t)).collect();
        let grid = assemble_sweep(&results).unwrap();
        let (s, t) = best_setting(&grid).unwrap();
        assert_eq!((s.amplitude_deg(), s.frequency_hz(), t), (75.0, 1.0, 12.0));

        let dup = vec![(meta(90.0, 1.0), 1.0), (meta(90.0, 1.0), 2.0)];
        let grid = assemble_sweep(&dup).unwrap();
        assert_eq!(grid.len(), 1);
        assert_eq!(grid.get(&FlapSetting::new(90.0, 1.0).unwrap()), Some(2.0));
        assert_eq!(grid.warnings.len(), 1);

        let other = WingSpec::from_cm(
            37.0,
            53.0,
            0.5,
            crate::wing::Stiffness::Flexible,
            crate::wing::TrailingEdge::Straight,
        )
        .unwrap();
        let mixed = vec![
            (meta(90.0, 1.0), 1.0),
            (
                RecordingMeta::new(other, FlapSetting::new(90.0, 1.0).unwrap()),
                2.0,
            ),
        ];
        assert!(assemble_sweep(&mixed).is_err());
        assert!(assemble_sweep(&[]).is_err());
    }

    #[test]
    fn file_round_trip() {
        let mut rec = constant(2.0, -1.0, 400);
        rec.front_gf[300] = 7.25;
        rec.meta.arm_gain = 1.5;
        let mut buf = Vec::new();
        rec.write(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# wing=stiff,concave,width_cm=53,length_cm=53,gamma=0.25\n"));
        let back = StandRecording::parse(text.as_bytes()).unwrap();
        assert_eq!(back, rec);
    }

    #[test]
    fn parse_errors() {
        assert!(StandRecording::parse("t_s,front_gf,back_gf\n0,1,1\n".as_bytes()).is_err());
        let bad_header = "# wing=stiff,concave,width_cm=53,length_cm=53,gamma=0.25\n# amplitude_deg=90\n# frequency_hz=1\n# sample_rate_hz=80\nt,a,b\n0,1,1\n";
        assert!(StandRecording::parse(bad_header.as_bytes()).is_err());
    }
}
