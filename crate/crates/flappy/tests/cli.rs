use std::path::PathBuf;
use std::process::{Command, Output};

fn flappy(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flappy"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn repo(rel: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .join(rel)
        .to_string_lossy()
        .into_owned()
}

#[test]
fn stationary_curve_has_level_row() {
    let o = flappy(&["equilibrium", "--stationary"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("beta_deg,v_mps,theta_deg,converged\n"));
    assert!(text.lines().any(|l| l == "0,0,0.000000,true"), "{text}");
    assert_eq!(text.lines().count(), 182);
}

#[test]
fn moving_curve_covers_both_tail_extremes() {
    let o = flappy(&["equilibrium", "--moving", "--speeds", "0:1:0.5"]);
    assert!(o.status.success());
    let rows: Vec<String> = stdout(&o).lines().skip(1).map(str::to_owned).collect();
    assert_eq!(rows.len(), 6);
    assert!(rows[0].starts_with("90,0,-8.13"));
    assert!(rows[3].starts_with("-90,0,-6.34"));
}

#[test]
fn range_compare_reports_ratio() {
    let o = flappy(&["range", "--compare"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let ratio: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("range ratio: "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((1.67..=1.69).contains(&ratio), "{ratio}");
    assert!(text.contains("2420.0 m") && text.contains("1440.0 m"));
}

#[test]
fn range_curves_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("range.csv");
    let o = flappy(&["range", "-o", out.to_str().unwrap()]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(out).unwrap();
    assert!(text.starts_with("speed_mps,endurance_s,range_m,model\n"));
    assert!(text.contains("\n1.1,2200.000,2420.000,flapping\n"));
}

#[test]
fn stand_fixtures_reproduce_optimum() {
    let o = flappy(&["stand", &repo("fixtures/stand")]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("best: 90 deg @ 1.25 Hz = 17.300 gf"), "{err}");
    assert_eq!(stdout(&o).lines().count(), 16);
}

#[test]
fn sweep_table_marks_best() {
    let o = flappy(&["sweep"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("# best: 90 deg @ 1.25 Hz = 17.3 gf"));
    let row = text.lines().find(|l| l.starts_with("90,")).unwrap();
    assert_eq!(row.split(',').count(), 9);
}

#[test]
fn simulate_scenario_file() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("s.toml");
    std::fs::write(
        &scenario,
        "duration_s = 2.0\n\n[[events]]\nt_s = 0.0\nleft_amplitude = 90.0\nleft_freq = 1.25\nleft_enabled = true\n\
         right_amplitude = 90.0\nright_freq = 1.25\nright_enabled = true\ntail_deg = 0.0\n",
    )
    .unwrap();
    let o = flappy(&["simulate", scenario.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("t,x,y,z,psi,theta,u,w,r,q,battery_j\n"));
    assert_eq!(text.lines().count(), 102);

    let o = flappy(&["simulate", &repo("config/scenario.toml")]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 3002);
}

#[test]
fn config_file_is_honoured() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "[energy]\nflapping_endurance_s = 1100.0\n").unwrap();
    let o = flappy(&["--config", cfg.to_str().unwrap(), "range", "--compare"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("1210.0 m"));
    let o = flappy(&[
        "--config",
        &repo("config/flappy.toml"),
        "range",
        "--compare",
    ]);
    assert!(stdout(&o).contains("2420.0 m"));
}

#[test]
fn exit_codes() {
    assert_eq!(flappy(&["fly"]).status.code(), Some(2));
    assert_eq!(flappy(&["equilibrium"]).status.code(), Some(2));
    assert_eq!(
        flappy(&["range", "--speeds", "1:0:1"]).status.code(),
        Some(2)
    );
    let o = flappy(&["simulate", "/does/not/exist.toml"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[vehicle]\nhull_cda_m2 = -1\n").unwrap();
    assert_eq!(
        flappy(&["--config", bad.to_str().unwrap(), "sweep"])
            .status
            .code(),
        Some(1)
    );
}
