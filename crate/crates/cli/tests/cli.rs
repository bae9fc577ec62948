use std::fs;
use std::path::Path;
use std::process::{Command as Process, Output};

use gaussinv_cli::commands::{build_protocol, verify_report};
use gaussinv_cli::output::{protocol_rows, read_protocol_csv};
use gaussinv_cli::{run, Command, Options, RunConfig};
use tempfile::TempDir;

fn bin(args: &[&str]) -> Output {
    Process::new(env!("CARGO_BIN_EXE_gaussinv")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, json: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, json).unwrap();
    path.to_str().unwrap().to_string()
}

fn opts(dir: &Path, config: Option<&str>, steps: usize) -> Options {
    Options {
        config: config.map(Into::into),
        out: Some(dir.join("out")),
        steps: Some(steps),
        formats: vec![],
    }
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let mut out = vec![r.headers().unwrap().iter().map(String::from).collect()];
    out.extend(r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()));
    out
}

const STATIC_1D: &str = r#"{"scenario": {"kind": "custom", "duration": 2.0, "mass": 1.0,
    "shape": [[[0.8]]], "path": [[0.5]],
    "initial": {"curvature": [[2.44140625]], "center": [0.5]},
    "target": {"curvature": [[2.44140625]], "center": [0.5]}}}"#;

#[test]
fn design_writes_the_default_corner() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let o = bin(&["design", "--out", out.to_str().unwrap(), "--quiet"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    let table = csv_rows(&out.join("protocol.csv"));
    assert_eq!(table[0].join(","), "t,M11,M12,M22,F1,F2,C1,C2,L1,L2");
    assert_eq!(table.len(), 1 + 4097);
    let rows = read_protocol_csv(&out.join("protocol.csv")).unwrap();
    let (first, last) = (&rows[0], rows.last().unwrap());
    assert_eq!(last.t, 3.0);
    for (m, want) in [(&first.curvature, [1.0, 0.0, 100.0]), (&last.curvature, [100.0, 0.0, 1.0])] {
        assert!((m[(0, 0)] - want[0]).abs() < 1e-10 && m[(0, 1)].abs() < 1e-10 && (m[(1, 1)] - want[2]).abs() < 1e-10);
    }
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("protocol.json")).unwrap()).unwrap();
    let points = json["points"].as_array().unwrap();
    assert_eq!(points.len(), 4097);
    assert_eq!(points[0]["gamma"].as_array().unwrap().len(), 4);
    assert_eq!(points[0]["w"].as_array().unwrap().len(), 4);
    assert!(points[0]["theta"].is_f64());
}

#[test]
fn protocol_csv_round_trips_exactly() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), r#"{"scenario": {"kind": "corner", "ratio": 2.0, "duration": 5.0}}"#);
    let o = opts(tmp.path(), Some(&cfg), 300);
    run(Command::Design, &o).unwrap();
    let reread = read_protocol_csv(&tmp.path().join("out/protocol.csv")).unwrap();
    let (_, p) = build_protocol(&o.resolve().unwrap()).unwrap();
    assert_eq!(reread, protocol_rows(&p));
}

#[test]
fn one_dimensional_columns_collapse() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), STATIC_1D);
    run(Command::Design, &opts(tmp.path(), Some(&cfg), 64)).unwrap();
    let table = csv_rows(&tmp.path().join("out/protocol.csv"));
    assert_eq!(table[0].join(","), "t,M,F,C,L");
    assert_eq!(table.len(), 66);
}

#[test]
fn losing_positivity_is_a_validation_failure() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"scenario": {"kind": "corner", "ratio": 2.0, "bump": [[-100.0, 0.0], [0.0, -100.0]]}}"#,
    );
    let o = bin(&["design", "--config", &cfg, "--out", tmp.path().to_str().unwrap(), "--steps", "64"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("R not positive definite at t="), "{err}");
}

#[test]
fn config_errors_name_the_key() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), r#"{"grid": {"steps": 64, "stpes": 2}}"#);
    let o = bin(&["design", "--config", &cfg, "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("grid") && err.contains("stpes"), "{err}");

    let o = bin(&["design", "--config", tmp.path().join("absent.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn figure_without_protocol_is_an_io_failure() {
    let tmp = TempDir::new().unwrap();
    let o = bin(&["figure", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("protocol.csv"));
}

#[test]
fn identical_configs_give_identical_bytes() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"scenario": {"kind": "corner", "ratio": 2.0, "duration": 5.0}, "sweep": {"ratios": [2.0, 10.0], "durations": [3.0, 5.0]}}"#,
    );
    let mut dirs = vec![];
    for name in ["a", "b"] {
        let out = tmp.path().join(name);
        for cmd in ["all", "sweep"] {
            let o = bin(&[cmd, "--config", &cfg, "--out", out.to_str().unwrap(), "--steps", "512", "-q"]);
            assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        }
        dirs.push(out);
    }
    let mut names: Vec<_> = fs::read_dir(&dirs[0]).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 5, "{names:?}");
    for n in names {
        assert_eq!(fs::read(dirs[0].join(&n)).unwrap(), fs::read(dirs[1].join(&n)).unwrap(), "{n:?} differs");
    }
}

#[test]
fn verify_meets_the_transfer_bound_and_converges() {
    let corner = RunConfig::from_json(r#"{"scenario": {"kind": "corner", "ratio": 2.0, "duration": 5.0}}"#).unwrap();
    let fine = verify_report(&RunConfig { grid: gaussinv_cli::config::GridConfig { steps: 4096, ..Default::default() }, ..corner.clone() }).unwrap();
    assert!(fine.final_match.covariance_rel_error <= 1e-6, "{}", fine.summary());
    assert!(fine.final_match.pass && fine.boundary_pass);
    assert!(fine.trajectory_residual < 1e-8 && fine.covariance_consistency < 1e-6);
    assert_eq!(fine.jdot.ordering, "M R^2 - R^2 M");

    let coarse = verify_report(&RunConfig { grid: gaussinv_cli::config::GridConfig { steps: 1024, ..Default::default() }, ..corner }).unwrap();
    let ratio = coarse.invariance.max_quadratic / fine.invariance.max_quadratic;
    assert!((12.0..20.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn static_scenario_verifies_to_roundoff() {
    let mut cfg = RunConfig::from_json(STATIC_1D).unwrap();
    cfg.grid.steps = 200;
    let r = verify_report(&cfg).unwrap();
    for v in [
        r.invariance.max_quadratic,
        r.invariance.max_linear,
        r.invariance.max_scalar,
        r.commutation_initial.quadratic,
        r.commutation_final.linear,
        r.final_match.covariance_rel_error,
        r.final_match.mean_offset_widths,
        r.trajectory_residual,
        r.covariance_consistency,
    ] {
        assert!(v <= 1e-12, "{}", r.summary());
    }
}

#[test]
fn sweep_rows_follow_the_input_order() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), r#"{"sweep": {"ratios": [10.0, 2.0], "durations": [3.0, 5.0, 10.0, 50.0]}}"#);
    run(Command::Sweep, &opts(tmp.path(), Some(&cfg), 2048)).unwrap();
    let table = csv_rows(&tmp.path().join("out/sweep.csv"));
    assert_eq!(table.len(), 1 + 8);
    let col = |name: &str| table[0].iter().position(|h| h == name).unwrap();
    let (ratio, duration, field, dev, status) =
        (col("ratio"), col("duration"), col("max_field_v_per_m"), col("max_center_deviation"), col("status"));
    for (block, want_ratio) in table[1..].chunks(4).zip([10.0, 2.0]) {
        let durations: Vec<f64> = block.iter().map(|r| r[duration].parse().unwrap()).collect();
        assert_eq!(durations, [3.0, 5.0, 10.0, 50.0]);
        assert!(block.iter().all(|r| r[ratio].parse::<f64>().unwrap() == want_ratio && r[status] == "ok"));
        let fields: Vec<f64> = block.iter().map(|r| r[field].parse().unwrap()).collect();
        assert!(fields.iter().all(|f| (f - fields[0]).abs() <= 1e-9 * fields[0]), "{fields:?}");
        let devs: Vec<f64> = block.iter().map(|r| r[dev].parse().unwrap()).collect();
        assert!(devs.windows(2).all(|w| w[1] < w[0]), "{devs:?}");
    }
}

#[test]
fn sweep_edge_cases() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), r#"{"sweep": {"ratios": [], "durations": [3.0]}}"#);
    run(Command::Sweep, &opts(tmp.path(), Some(&cfg), 64)).unwrap();
    let text = fs::read_to_string(tmp.path().join("out/sweep.csv")).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("ratio,duration,"));

    let cfg = write_config(tmp.path(), r#"{"sweep": {"ratios": [-1.0, 2.0], "durations": [3.0]}}"#);
    run(Command::Sweep, &opts(tmp.path(), Some(&cfg), 64)).unwrap();
    let table = csv_rows(&tmp.path().join("out/sweep.csv"));
    let status = table[0].len() - 1;
    assert!(table[1][status].starts_with("error: "), "{:?}", table[1]);
    assert_eq!(table[2][status], "ok");
}

fn annotated_deviation(svg: &str) -> f64 {
    let at = svg.find("max |C - L| = ").unwrap() + "max |C - L| = ".len();
    svg[at..].split_whitespace().next().unwrap().parse().unwrap()
}

#[test]
fn figures_for_all_six_scenarios() {
    let tmp = TempDir::new().unwrap();
    for ratio in [10.0, 2.0] {
        for duration in [3.0, 5.0, 10.0] {
            let cfg = write_config(
                tmp.path(),
                &format!(r#"{{"scenario": {{"kind": "corner", "ratio": {ratio}, "duration": {duration}}}}}"#),
            );
            let o = opts(tmp.path(), Some(&cfg), 1024);
            run(Command::Design, &o).unwrap();
            run(Command::Figure, &o).unwrap();
            let svg = fs::read_to_string(tmp.path().join("out/figure.svg")).unwrap();
            assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
            assert_eq!(svg.matches("<ellipse").count(), 9);
            assert_eq!(svg.matches(r#"class="ion-path""#).count(), 1);
            assert!(svg.contains(r#"class="trap-center""#));
            let dev = annotated_deviation(&svg);
            if duration == 3.0 {
                assert!(dev > 0.1, "ratio {ratio}: {dev}");
            }
            if duration == 10.0 {
                assert!(dev < 0.1, "ratio {ratio}: {dev}");
            }
        }
    }
}

#[test]
fn figure_rejects_one_dimensional_tables() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), STATIC_1D);
    let o = opts(tmp.path(), Some(&cfg), 32);
    run(Command::Design, &o).unwrap();
    let err = run(Command::Figure, &o).unwrap_err();
    assert_eq!(err.exit_code(), 1);
}

#[test]
fn oracle_reports_high_fidelity() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"scenario": {"kind": "corner", "ratio": 2.0, "duration": 5.0},
            "grid": {"oracle": true, "oracle_points": 128, "oracle_steps": 1000, "oracle_samples": 20, "snapshot": true}}"#,
    );
    let summary = run(Command::Oracle, &opts(tmp.path(), Some(&cfg), 256)).unwrap();
    let out = tmp.path().join("out");
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("oracle.json")).unwrap()).unwrap();
    assert!(json["fidelity"].as_f64().unwrap() >= 0.999, "{summary}");
    assert!(json["max_norm_error"].as_f64().unwrap() < 1e-10);
    assert_eq!(json["samples"].as_array().unwrap().len(), 21);
    let bytes = fs::read(out.join("psi_final.bin")).unwrap();
    assert_eq!(&bytes[..4], b"PSI2");
    assert_eq!(bytes.len(), 4 + 12 + 40 + 128 * 128 * 8);
}

#[test]
fn oracle_needs_the_corner_scenario() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), STATIC_1D);
    let err = run(Command::Oracle, &opts(tmp.path(), Some(&cfg), 32)).unwrap_err();
    assert_eq!(err.exit_code(), 1);
}
