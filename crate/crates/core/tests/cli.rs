use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use crowdsweep::cli::{read_cloud_file, serialize_scenario};
use crowdsweep::scenarios::Scenario;
use crowdsweep::transport::w2;

fn crowdsweep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crowdsweep"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn csv_rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path)
        .unwrap()
        .records()
        .map(|r| r.unwrap())
        .collect()
}

#[test]
fn run_writes_all_artifact_kinds() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = crowdsweep(&[
        "run",
        "--scenario",
        "braess_moving",
        "--seed",
        "7",
        "--frames-every",
        "500",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    for file in ["trajectory.csv", "diagnostics.csv", "manifest.json"] {
        assert!(out.join(file).is_file(), "missing {file}");
    }
    let frames = fs::read_dir(out.join("frames")).unwrap().count();
    // 2000 mesh steps, every 500th including the final time
    assert_eq!(frames, 5);

    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["finalized"], true);
    assert_eq!(manifest["scenario"]["seed"], 7);
    assert!(manifest["failed_invariant"].is_null());

    let traj = csv_rows(&out.join("trajectory.csv"));
    assert_eq!(traj.len(), 2001 * 300);
    // no velocity after the last mesh time
    assert_eq!(&traj.last().unwrap()[4], "");
}

#[test]
fn all_checks_pass_on_half_space() {
    let dir = tempfile::tempdir().unwrap();
    let o = crowdsweep(&[
        "run",
        "--scenario",
        "half_space",
        "--check",
        "all",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(&dir.path().join("diagnostics.csv"));
    let names: std::collections::BTreeSet<&str> = rows.iter().map(|r| r.get(1).unwrap()).collect();
    for name in ["support_inclusion", "speed_bound", "normal_cone_residual", "noflux_residual", "stability_slack"] {
        assert!(names.contains(name), "no {name} rows");
    }
    assert!(rows.iter().all(|r| &r[4] == "true"));
}

#[test]
fn identical_runs_are_bitwise_identical() {
    let dir = tempfile::tempdir().unwrap();
    let dump = |name: &str| {
        let out = dir.path().join(name);
        let o = crowdsweep(&["run", "--scenario", "congestion", "--tau", "0.02", "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
        fs::read(out.join("trajectory.csv")).unwrap()
    };
    assert_eq!(dump("a"), dump("b"));
}

#[test]
fn malformed_scenario_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "name = \"x\"\nseed = [\n").unwrap();
    let o = crowdsweep(&["check", "--scenario", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    assert!(msg.contains("bad.toml:"), "{msg}");
}

#[test]
fn understated_speed_is_refused_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = Scenario::preset("half_space").unwrap();
    s.viability.speed = 0.5;
    let path = dir.path().join("slow.toml");
    fs::write(&path, serialize_scenario(&s)).unwrap();
    let out = dir.path().join("out");
    let o = crowdsweep(&["run", "--scenario", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("speed"), "{}", stderr(&o));
    assert!(!out.join("trajectory.csv").exists());
}

#[test]
fn check_accepts_every_preset() {
    for name in crowdsweep::scenarios::preset_names() {
        let o = crowdsweep(&["check", "--scenario", name]);
        assert!(o.status.success(), "{name}: {}", stderr(&o));
        assert!(String::from_utf8_lossy(&o.stdout).starts_with(&format!("{name}: ok")));
    }
}

#[test]
fn w2_between_cloud_files() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    fs::write(&a, "x1,x2\n0,0\n1,0\n").unwrap();
    fs::write(&b, "x1,x2\n1,3\n0,4\n").unwrap();
    let o = crowdsweep(&["w2", a.to_str().unwrap(), b.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let d: f64 = String::from_utf8_lossy(&o.stdout).trim().parse().unwrap();
    // matching straight up moves each point by (0, 3) and (0, 4)
    assert!((d - 12.5f64.sqrt()).abs() < 1e-12);
    let (ca, cb) = (read_cloud_file(&a).unwrap(), read_cloud_file(&b).unwrap());
    assert_eq!(d, w2(&ca, &cb).unwrap().0);

    let bad = dir.path().join("c.csv");
    fs::write(&bad, "x1,x2\n0,0\n").unwrap();
    assert_eq!(crowdsweep(&["w2", a.to_str().unwrap(), bad.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn optimize_writes_sorted_table() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = Scenario::preset("braess_moving").unwrap();
    s.run.particles = 40;
    s.run.horizon = 2.0;
    let scenario = dir.path().join("short.toml");
    fs::write(&scenario, serialize_scenario(&s)).unwrap();
    let grid = dir.path().join("grid.txt");
    fs::write(
        &grid,
        "# c1 c2 a1 a2 omega\n1.1 0 0.9 0.1 1\n1.1 0 0.9 0.16 0\n\n4 0 1.9 3.9 0\n100 100 0.9 0.16 0\n",
    )
    .unwrap();
    let out = dir.path().join("opt.csv");
    let o = crowdsweep(&[
        "optimize",
        "--scenario",
        scenario.to_str().unwrap(),
        "--grid",
        grid.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 4);
    // the obstacle covering the initial box is rejected and listed last
    assert_eq!(&rows[3][0], "4");
    assert_eq!(&rows[3][5], "");
    assert_eq!(&rows[3][7], "overlaps initial cloud");
    let objectives: Vec<f64> = rows[..3].iter().map(|r| r[5].parse().unwrap()).collect();
    assert!(objectives.windows(2).all(|w| w[0] <= w[1]), "{objectives:?}");
}

#[test]
fn braess_table_has_one_row_per_seed() {
    let o = crowdsweep(&["braess", "--seed", "3", "--seeds", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8_lossy(&o.stdout);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("seed,none,stationary,moving,ordered"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "3");
    for v in &row[1..4] {
        let m: f64 = v.parse().unwrap();
        assert!((0.0..=1.0).contains(&m));
    }
    assert_eq!(lines.next(), None);
}
