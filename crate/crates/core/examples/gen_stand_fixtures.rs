//! Writes synthetic thrust-stand logs for the mounted wing into a directory.
//!
//!     cargo run -p flappy-core --example gen_stand_fixtures -- fixtures/stand
//!
//! Each log has a tare window with the wing held level, constant cell
//! offsets, and an arm seesaw at the flap frequency that cancels in the sum.

use std::f64::consts::TAU;
use std::fs::File;
use std::path::PathBuf;

use flappy_core::standlab::{
    RecordingMeta, StandRecording, DEFAULT_SAMPLE_RATE_HZ, DEFAULT_TARE_WINDOW_S,
};
use flappy_core::wing::{FlapSetting, ThrustDataset, ThrustWaveform, WingSpec};

const AMPLITUDES: [f64; 3] = [60.0, 75.0, 90.0];
const FREQUENCIES: [f64; 5] = [0.75, 1.0, 1.25, 1.5, 1.75];
const CYCLES: f64 = 8.0;
const FRONT_OFFSET_GF: f64 = 2.4;
const BACK_OFFSET_GF: f64 = -1.3;
const FRONT_SHARE: f64 = 0.55;

fn main() -> flappy_core::Result<()> {
    let dir = PathBuf::from(
        std::env::args()
            .nth(1)
            .unwrap_or_else(|| "fixtures/stand".into()),
    );
    std::fs::create_dir_all(&dir)?;
    let ds = ThrustDataset::bundled();
    let wing = WingSpec::optimal();
    let fs = DEFAULT_SAMPLE_RATE_HZ;
    for a in AMPLITUDES {
        for f in FREQUENCIES {
            let setting = FlapSetting::new(a, f)?;
            let wave = ThrustWaveform::new(ds.mean_thrust(&wing, &setting)?);
            let seesaw = 4.0 * a / 90.0;
            let tare_n = (DEFAULT_TARE_WINDOW_S * fs).round() as usize;
            let n = tare_n + (CYCLES / f * fs).ceil() as usize;
            let (mut front, mut back) = (Vec::with_capacity(n), Vec::with_capacity(n));
            for i in 0..n {
                let (thrust, rock) = if i < tare_n {
                    (0.0, 0.0)
                } else {
                    let t = (i - tare_n) as f64 / fs;
                    (wave.at_time(t, f), seesaw * (TAU * f * t).sin())
                };
                front.push(FRONT_OFFSET_GF + FRONT_SHARE * thrust + rock);
                back.push(BACK_OFFSET_GF + (1.0 - FRONT_SHARE) * thrust - rock);
            }
            let rec = StandRecording::new(fs, front, back, RecordingMeta::new(wing, setting))?;
            let name = format!("a{:03}_f{:03}.csv", a as u32, (f * 100.0).round() as u32);
            rec.write(File::create(dir.join(name))?)?;
        }
    }
    Ok(())
}
