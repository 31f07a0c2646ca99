use std::sync::OnceLock;

use proptest::prelude::*;

use flappy_core::control::{command_to_actuators, map_speed, ControlGains, PilotCommand, TailMode};
use flappy_core::energy::{range, PowerModel};
use flappy_core::longitudinal::{equilibrium_pitch, moment_residual, LongitudinalParams};
use flappy_core::standlab::{
    assemble_sweep, average_thrust, best_setting, reduce, RecordingMeta, StandRecording,
};
use flappy_core::wing::{
    generate_profile, FlapSetting, ThrustDataset, ThrustRow, ThrustWaveform, WingSpec,
};

fn dataset() -> &'static ThrustDataset {
    static DS: OnceLock<ThrustDataset> = OnceLock::new();
    DS.get_or_init(ThrustDataset::bundled)
}

fn setting() -> impl Strategy<Value = FlapSetting> {
    (1.0..=90.0f64, 0.05..=2.0f64).prop_map(|(a, f)| FlapSetting::new(a, f).unwrap())
}

fn grid_setting() -> impl Strategy<Value = FlapSetting> {
    (1usize..=4, 1usize..=8)
        .prop_map(|(a, f)| FlapSetting::new(30.0 + 15.0 * a as f64, 0.25 * f as f64).unwrap())
}

proptest! {
    #[test]
    fn profile_antisymmetric_when_unclamped(s in setting(), phase in -180.0..180.0f64) {
        // 50 Hz ticks: a half period of m ticks needs f = 25 / m
        let m = ((25.0 / s.frequency_hz()).round() as usize).clamp(13, 500);
        let s = FlapSetting::new(s.amplitude_deg(), 25.0 / m as f64).unwrap();
        let p = generate_profile(s, phase, 4 * m, 1e9).unwrap();
        prop_assert_eq!(p.clamped_ticks, 0);
        for k in 0..2 * m {
            let (a, b) = (p.positions_deg[k], p.positions_deg[k + m]);
            prop_assert!((a + b).abs() < 1e-9 * s.amplitude_deg().max(1.0), "k={} {} {}", k, a, b);
        }
        prop_assert!(p.positions_deg.iter().all(|x| x.abs() <= s.amplitude_deg()));
    }

    #[test]
    fn clamped_profile_is_rate_limited(s in setting(), limit in 50.0..800.0f64) {
        let p = generate_profile(s, 0.0, 200, limit).unwrap();
        let bound = limit * p.tick_s * (1.0 + 1e-12);
        prop_assert!(p.increments_deg().all(|d| d.abs() <= bound));
        prop_assert!(p.positions_deg.iter().all(|x| x.abs() <= s.amplitude_deg() + 1e-9));
    }

    #[test]
    fn interpolation_stays_between_corners(a in 0.5..=90.0f64, f in 0.25..=2.0f64) {
        let ds = dataset();
        let w = WingSpec::optimal();
        let t = ds.mean_thrust(&w, &FlapSetting::new(a, f).unwrap()).unwrap();
        let amps = [0.0, 45.0, 60.0, 75.0, 90.0];
        let a0 = *amps.iter().rev().find(|&&x| x <= a).unwrap();
        let a1 = *amps.iter().find(|&&x| x >= a).unwrap();
        let f0 = (f / 0.25).floor() * 0.25;
        let f1 = (f / 0.25).ceil() * 0.25;
        let corner = |a: f64, f: f64| {
            ds.family_rows(&w)
                .unwrap()
                .find(|r| r.amplitude_deg == a && (r.frequency_hz - f).abs() < 1e-9)
                .unwrap()
                .mean_thrust_gf
        };
        let c = [corner(a0, f0), corner(a0, f1), corner(a1, f0), corner(a1, f1)];
        let lo = c.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = c.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(t >= lo - 1e-9 && t <= hi + 1e-9, "{} not in [{}, {}]", t, lo, hi);
    }

    #[test]
    fn argmax_is_scale_invariant(scale in 1e-3..1e3f64) {
        let ds = dataset();
        for w in ds.wings() {
            let (s, t) = ds.optimal_setting(w).unwrap();
            let scaled = ThrustDataset::from_rows(ds.family_rows(w).unwrap().map(|r| ThrustRow {
                mean_thrust_gf: r.mean_thrust_gf * scale,
                ..r
            }))
            .unwrap();
            let (s2, t2) = scaled.optimal_setting(w).unwrap();
            prop_assert_eq!(s, s2);
            prop_assert!((t2 - t * scale).abs() <= 1e-12 * t2.abs().max(1.0));
        }
    }

    #[test]
    fn waveform_quadrature(s in grid_setting()) {
        let ds = dataset();
        let w = WingSpec::optimal();
        let mean = ds.mean_thrust(&w, &s).unwrap();
        let wave = ThrustWaveform::new(mean);
        let n = 4000;
        let avg = (0..n).map(|i| wave.at_phase(i as f64 / n as f64)).sum::<f64>() / n as f64;
        prop_assert!((avg - mean).abs() <= 1e-6 * mean.abs().max(1e-12));
    }

    #[test]
    fn stationary_residual_ignores_dimensional_params(
        theta in -80.0..80.0f64,
        beta in -90.0..90.0f64,
        mass in 0.05..2.0f64,
        width in 0.01..0.5f64,
        cd in 0.1..3.0f64,
        rho in 0.5..1.5f64,
    ) {
        let base = LongitudinalParams::default();
        let other = LongitudinalParams {
            body_mass_kg: mass,
            tail_width_m: width,
            drag_coefficient: cd,
            air_density: rho,
            ..base
        };
        prop_assert_eq!(moment_residual(theta, beta, 0.0, &base), moment_residual(theta, beta, 0.0, &other));
    }

    #[test]
    fn roots_confirmed_by_dense_scan(beta in -90.0..=90.0f64, v in 0.0..2.0f64) {
        let p = LongitudinalParams::default();
        let sol = equilibrium_pitch(beta, v, &p).unwrap();
        let r = |th: f64| moment_residual(th, beta, v, &p);
        let lo = (sol.theta_deg / 0.1).floor() * 0.1;
        let (a, b) = (r(lo - 0.1), r(lo + 0.2));
        prop_assert!(a * b <= 0.0, "no sign change around {}", sol.theta_deg);
    }

    #[test]
    fn trim_closes(sigma in 0.0..0.3f64, x_t in 0.0..1.0f64, y_b in 0.01..0.5f64) {
        let p = LongitudinalParams {
            sigma,
            x_t,
            y_b,
            x_b: flappy_core::longitudinal::balance_offset(sigma, x_t),
            ..LongitudinalParams::default()
        };
        prop_assert!(equilibrium_pitch(0.0, 0.0, &p).unwrap().theta_deg.abs() < 1e-8);
    }

    #[test]
    fn stationary_pitch_is_never_up(beta in -90.0..=90.0f64) {
        let th = equilibrium_pitch(beta, 0.0, &LongitudinalParams::default()).unwrap().theta_deg;
        prop_assert!(th <= 1e-9);
        if beta.abs() > 1e-3 {
            prop_assert!(th < 0.0);
        }
    }

    #[test]
    fn speed_map_bounded_and_monotone(t1 in 0.0..=1.0f64, t2 in 0.0..=1.0f64) {
        let g = ControlGains::default();
        let ds = dataset();
        let w = WingSpec::optimal();
        let thrust = |t: f64| map_speed(t, &g).map_or(0.0, |s| {
            assert!(s.frequency_hz() <= 2.0 && s.amplitude_deg() <= 90.0);
            ds.mean_thrust(&w, &s).unwrap()
        });
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        prop_assert!(thrust(lo) <= thrust(hi) + 1e-12);
    }

    #[test]
    fn yaw_mapping_mirrors(t in 0.0..=1.0f64, yaw in -1.0..=1.0f64, pitch in -1.0..=1.0f64, rudder in any::<bool>()) {
        let g = ControlGains::default();
        let mode = if rudder { TailMode::Rudder } else { TailMode::Elevator };
        let a = command_to_actuators(&PilotCommand::new(t, yaw, pitch, mode), &g);
        let b = command_to_actuators(&PilotCommand::new(t, -yaw, pitch, mode), &g);
        prop_assert_eq!(a.left, b.right);
        prop_assert_eq!(a.right, b.left);
        if rudder {
            prop_assert_eq!(a.tail_deg, -b.tail_deg);
        }
        prop_assert!(a.validate().is_ok());
    }

    #[test]
    fn actuators_always_valid(t in -5.0..5.0f64, yaw in -5.0..5.0f64, pitch in -5.0..5.0f64) {
        let act = command_to_actuators(&PilotCommand::new(t, yaw, pitch, TailMode::Elevator), &ControlGains::default());
        prop_assert!(act.validate().is_ok());
    }

    #[test]
    fn energy_shapes(v1 in 0.01..1.1f64, v2 in 0.01..1.1f64, p1 in 0.6..2.4f64, p2 in 0.6..2.4f64) {
        let flap = PowerModel::flapping();
        let prop_model = PowerModel::propeller();
        let (lo, hi) = if v1 <= v2 { (v1, v2) } else { (v2, v1) };
        let r = |v: f64| range(flap.endurance(v).unwrap(), v).unwrap();
        prop_assert!(r(lo) <= r(hi));
        prop_assert!((r(hi) - 2200.0 * hi).abs() < 1e-9);
        let (plo, phi) = if p1 < p2 { (p1, p2) } else { (p2, p1) };
        prop_assume!(phi - plo > 1e-9);
        prop_assert!(prop_model.endurance(phi).unwrap() < prop_model.endurance(plo).unwrap());
    }

    #[test]
    fn stand_pipeline_is_linear(c in 0.01..100.0f64, s in grid_setting()) {
        let rec = synth(s, 10.0, 2.0, -1.0);
        let scaled = StandRecording {
            front_gf: rec.front_gf.iter().map(|v| v * c).collect(),
            back_gf: rec.back_gf.iter().map(|v| v * c).collect(),
            ..rec.clone()
        };
        let (m, mc) = (reduce(&rec).unwrap(), reduce(&scaled).unwrap());
        prop_assert!((mc - c * m).abs() <= 1e-9 * (c * m).abs().max(1e-9));
    }

    #[test]
    fn best_setting_ignores_order(seed in any::<u64>()) {
        let mut cells: Vec<(RecordingMeta, f64)> = Vec::new();
        for (i, a) in [60.0, 75.0, 90.0].iter().enumerate() {
            for (j, f) in [0.75, 1.0, 1.25].iter().enumerate() {
                let m = RecordingMeta::new(WingSpec::optimal(), FlapSetting::new(*a, *f).unwrap());
                cells.push((m, ((i * 3 + j) % 4) as f64));
            }
        }
        let reference = best_setting(&assemble_sweep(&cells).unwrap());
        let mut state = seed;
        for i in (1..cells.len()).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            cells.swap(i, (state >> 33) as usize % (i + 1));
        }
        prop_assert_eq!(best_setting(&assemble_sweep(&cells).unwrap()), reference);
    }

    #[test]
    fn cycle_windows_agree(k in 2usize..20, per in 4usize..200, offset in -5.0..5.0f64) {
        let fs = 100.0;
        let f = fs / per as f64;
        let wave = ThrustWaveform::new(3.0);
        let series = |cycles: usize| -> Vec<f64> {
            (0..cycles * per).map(|i| offset + wave.at_phase((i % per) as f64 / per as f64)).collect()
        };
        let a = average_thrust(&series(k), f, fs).unwrap();
        let b = average_thrust(&series(k + 1), f, fs).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }
}

/// Two-channel stand log of the mounted wing at `s`: a tare window then
/// `cycles` of waveform thrust split across the cells, plus a seesaw.
fn synth(s: FlapSetting, cycles: f64, front_offset: f64, back_offset: f64) -> StandRecording {
    let fs = 80.0;
    let mean = dataset().mean_thrust(&WingSpec::optimal(), &s).unwrap();
    let wave = ThrustWaveform::new(mean);
    let tare = 160;
    let n = tare + (cycles / s.frequency_hz() * fs).ceil() as usize;
    let mut front = Vec::new();
    let mut back = Vec::new();
    for i in 0..n {
        let t = i.saturating_sub(tare) as f64 / fs;
        let (thrust, rock) = if i < tare {
            (0.0, 0.0)
        } else {
            (
                wave.at_time(t, s.frequency_hz()),
                2.0 * (std::f64::consts::TAU * s.frequency_hz() * t).sin(),
            )
        };
        front.push(front_offset + 0.6 * thrust + rock);
        back.push(back_offset + 0.4 * thrust - rock);
    }
    StandRecording::new(fs, front, back, RecordingMeta::new(WingSpec::optimal(), s)).unwrap()
}
