use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use flappy_core::config::Config;
use flappy_core::dynamics::{run_scenario, write_trajectory_csv, Scenario, ThrustModel};
use flappy_core::energy::{compare_tested, max_range, range_curve, write_range_csv};
use flappy_core::longitudinal::{linspace_step, pitch_curve, speed_curve, write_curve_csv};
use flappy_core::standlab::{best_setting, sweep_table, StandRecording};
use flappy_core::wing::WingSpec;

use crate::server::{serve, ServeOptions};
use crate::session::Session;

#[derive(Debug, Parser)]
#[command(name = "flappy", version, about = "Flapping-wing blimp workbench")]
pub struct Cli {
    /// TOML configuration (see config/flappy.toml); defaults apply otherwise.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Amplitude x frequency thrust table for one wing.
    Sweep {
        /// e.g. "stiff,concave,width_cm=53,length_cm=53,gamma=0.25"; defaults to the configured wing.
        #[arg(long)]
        wing: Option<WingSpec>,
        #[command(flatten)]
        out: Output,
    },
    /// Trim pitch against tail angle (stationary) or speed (moving).
    Equilibrium {
        #[arg(long, conflicts_with = "moving", required_unless_present = "moving")]
        stationary: bool,
        #[arg(long)]
        moving: bool,
        /// Tail-angle step for the stationary sweep, degrees.
        #[arg(long, default_value_t = 1.0)]
        beta_step: f64,
        /// Tail angles for the moving sweep, degrees.
        #[arg(long, value_delimiter = ',', default_values_t = [90.0, -90.0])]
        beta: Vec<f64>,
        /// Speed grid for the moving sweep, start:end:step in m/s.
        #[arg(long, default_value = "0:2:0.05")]
        speeds: Range,
        #[command(flatten)]
        out: Output,
    },
    /// Run a scenario file and write the trajectory CSV.
    Simulate {
        scenario: PathBuf,
        /// Use cycle-mean thrust instead of the flap-cycle waveform.
        #[arg(long)]
        cycle_mean: bool,
        #[command(flatten)]
        out: Output,
    },
    /// Endurance and range against speed for the flapping and propeller models.
    Range {
        /// Print the range comparison at the tested speeds instead of the curves.
        #[arg(long)]
        compare: bool,
        /// Speed grid start:end:step in m/s.
        #[arg(long, default_value = "0.1:2.4:0.1")]
        speeds: Range,
        #[command(flatten)]
        out: Output,
    },
    /// Reduce thrust-stand recordings to a sweep table and its best setting.
    Stand {
        /// Recording files, or directories of *.csv recordings.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        out: Output,
    },
    /// Start the live telemetry and command service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8765")]
        bind: SocketAddr,
        /// Write the simulated trajectory here on shutdown.
        #[arg(long, value_name = "PATH")]
        record: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct Output {
    /// Write to a file instead of stdout.
    #[arg(short, long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

impl Output {
    fn open(&self) -> anyhow::Result<Box<dyn Write>> {
        Ok(match &self.output {
            Some(p) => Box::new(BufWriter::new(
                File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
            )),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

impl std::str::FromStr for Range {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<f64> = s
            .split(':')
            .map(|p| p.trim().parse::<f64>().map_err(|e| format!("'{p}': {e}")))
            .collect::<Result<_, _>>()?;
        match parts[..] {
            [start, end, step] if step > 0.0 && end >= start => Ok(Self { start, end, step }),
            _ => Err("expected start:end:step with step > 0 and end >= start".into()),
        }
    }
}

impl Range {
    fn values(&self) -> Vec<f64> {
        linspace_step(self.start, self.end, self.step)
    }
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    let config = match &cli.config {
        Some(p) => Config::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => Config::default(),
    };
    match cli.command {
        Cmd::Sweep { wing, out } => sweep(&config, wing.unwrap_or(config.wing), &out),
        Cmd::Equilibrium {
            stationary,
            beta_step,
            beta,
            speeds,
            out,
            ..
        } => {
            let lon = &config.vehicle.longitudinal;
            let points = if stationary {
                if !(beta_step > 0.0) {
                    bail!("--beta-step must be > 0");
                }
                pitch_curve(&linspace_step(-90.0, 90.0, beta_step), 0.0, lon)
            } else {
                beta.iter()
                    .flat_map(|&b| speed_curve(b, &speeds.values(), lon))
                    .collect()
            };
            let mut w = out.open()?;
            write_curve_csv(&points, &mut w)?;
            w.flush()?;
            Ok(())
        }
        Cmd::Simulate {
            scenario,
            cycle_mean,
            out,
        } => {
            let sc = Scenario::load(&scenario)
                .with_context(|| format!("loading {}", scenario.display()))?;
            let mut params = config.vehicle;
            if cycle_mean {
                params.thrust_model = ThrustModel::CycleMean;
            }
            let traj = run_scenario(&sc, &params, &config.wing, &config.load_dataset()?)?;
            let mut w = out.open()?;
            write_trajectory_csv(&traj, &mut w)?;
            w.flush()?;
            Ok(())
        }
        Cmd::Range {
            compare,
            speeds,
            out,
        } => {
            let flap = config.energy.flapping_model();
            let prop = config.energy.propeller_model();
            let mut w = out.open()?;
            if compare {
                let c = compare_tested(&flap, &prop)?;
                for row in [c.flapping, c.propeller] {
                    writeln!(
                        w,
                        "{}: {:.1} m at {:.2} m/s ({:.0} s)",
                        row.kind, row.range_m, row.speed_mps, row.endurance_s
                    )?;
                }
                writeln!(w, "range ratio: {:.3}", c.ratio)?;
                let curve = range_curve(&prop, &speeds.values());
                if let Some(peak) = max_range(&curve) {
                    writeln!(
                        w,
                        "propeller curve maximum: {:.1} m at {:.2} m/s",
                        peak.range_m, peak.speed_mps
                    )?;
                }
            } else {
                let mut rows = range_curve(&flap, &speeds.values());
                rows.extend(range_curve(&prop, &speeds.values()));
                write_range_csv(&rows, &mut w)?;
            }
            w.flush()?;
            Ok(())
        }
        Cmd::Stand { inputs, out } => stand(&inputs, &out),
        Cmd::Serve { bind, record } => {
            let session = Session::new(
                config.vehicle,
                config.control,
                config.wing,
                config.load_dataset()?,
            );
            let session = if record.is_some() {
                session.record()
            } else {
                session
            };
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async {
                let listener = tokio::net::TcpListener::bind(bind)
                    .await
                    .with_context(|| format!("cannot bind {bind}"))?;
                eprintln!(
                    "serving on {} (tcp and websocket); ctrl-c to stop",
                    listener.local_addr()?
                );
                let shutdown = async {
                    let _ = tokio::signal::ctrl_c().await;
                };
                serve(listener, session, ServeOptions { record }, shutdown).await?;
                Ok(())
            })
        }
    }
}

fn sweep(config: &Config, wing: WingSpec, out: &Output) -> anyhow::Result<()> {
    let ds = config.load_dataset()?;
    let mut table: BTreeMap<(u64, u64), f64> = BTreeMap::new();
    let key = |v: f64| (v * 1000.0).round() as u64;
    for row in ds.family_rows(&wing)? {
        table.insert(
            (key(row.amplitude_deg), key(row.frequency_hz)),
            row.mean_thrust_gf,
        );
    }
    let mut freqs: Vec<u64> = table.keys().map(|k| k.1).collect();
    freqs.sort_unstable();
    freqs.dedup();
    let mut amps: Vec<u64> = table.keys().map(|k| k.0).collect();
    amps.dedup();

    let mut w = out.open()?;
    writeln!(w, "# {wing}")?;
    write!(w, "amplitude_deg")?;
    for f in &freqs {
        write!(w, ",{}", *f as f64 / 1000.0)?;
    }
    writeln!(w)?;
    for a in &amps {
        write!(w, "{}", *a as f64 / 1000.0)?;
        for f in &freqs {
            match table.get(&(*a, *f)) {
                Some(t) => write!(w, ",{t:.2}")?,
                None => write!(w, ",")?,
            }
        }
        writeln!(w)?;
    }
    let (best, thrust) = ds.optimal_setting(&wing)?;
    writeln!(w, "# best: {best} = {thrust} gf")?;
    if best.peak_speed_dps() > config.servo_rate_limit_dps {
        writeln!(
            w,
            "# best setting needs {:.0} deg/s, above the {} deg/s servo limit",
            best.peak_speed_dps(),
            config.servo_rate_limit_dps
        )?;
    }
    w.flush()?;
    Ok(())
}

fn collect_recordings(inputs: &[PathBuf]) -> anyhow::Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(input)
                .with_context(|| format!("reading {}", input.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "csv"))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(input.clone());
        }
    }
    if files.is_empty() {
        bail!("no recordings found");
    }
    Ok(files)
}

fn stand(inputs: &[PathBuf], out: &Output) -> anyhow::Result<()> {
    let recordings = collect_recordings(inputs)?
        .iter()
        .map(|p: &PathBuf| {
            StandRecording::load(p as &Path).with_context(|| format!("loading {}", p.display()))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let grid = sweep_table(&recordings)?;
    for warning in &grid.warnings {
        log::warn!("{warning}");
        eprintln!("warning: {warning}");
    }
    let mut w = out.open()?;
    grid.write_csv(&mut w)?;
    w.flush()?;
    let (best, thrust) = best_setting(&grid).context("empty sweep")?;
    eprintln!(
        "best: {best} = {thrust:.3} gf ({} recordings)",
        recordings.len()
    );
    Ok(())
}
