use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use proptest::prelude::*;
use semiprop::Complex64;
use semiprop_cli::{compare, Config, WaveTable};

fn scenario_path(file: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(file)
}

fn semiprop(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_semiprop"));
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn run(config: &Path, out: &Path, envs: &[(&str, &str)]) -> Output {
    let o = semiprop(&["run", config.to_str().unwrap(), "--out", out.to_str().unwrap()], envs);
    assert!(o.status.success(), "run failed: {}", String::from_utf8_lossy(&o.stderr));
    o
}

#[test]
fn run_writes_tables_config_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("wall");
    let o = run(&scenario_path("wall.cfg"), &out, &[]);
    for t in ["2", "5", "8"] {
        for f in ["ct", "qp", "xfq", "xfp", "exact"] {
            assert!(out.join(format!("psi_{f}_T{t}.csv")).is_file(), "missing {f} at T = {t}");
        }
    }
    let report = fs::read_to_string(out.join("report.csv")).unwrap();
    assert!(report.starts_with("# reference: EXACT"));
    assert_eq!(report.lines().count(), 2 + 4 * 3);
    assert!(stdout(&o).contains("wrote"));

    let echoed = Config::load(&out.join("config.cfg")).unwrap();
    assert_eq!(echoed.get("state.q"), Some("10"));
    assert_eq!(echoed.get("potential.wall"), Some("true"));
    assert!(echoed.get("search.caustic_radius").is_some(), "defaults are echoed too");

    let table = WaveTable::load(&out.join("psi_xfq_T5.csv")).unwrap();
    assert_eq!(table.len(), 1000);
}

#[test]
fn runs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run(&scenario_path("free.cfg"), &a, &[]);
    run(&scenario_path("free.cfg"), &b, &[]);
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() > 10);
    for name in names {
        assert_eq!(fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap(), "{name:?} differs");
    }
}

#[test]
fn compare_command() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("free");
    run(&scenario_path("free.cfg"), &out, &[]);
    let file = |name: &str| out.join(name).to_str().unwrap().to_string();

    let same = semiprop(&["compare", &file("psi_ct_T2.csv"), &file("psi_ct_T2.csv")], &[]);
    assert!(same.status.success());
    let text = stdout(&same);
    let values: Vec<f64> = text.lines().nth(1).unwrap().split(',').take(3).map(|v| v.parse().unwrap()).collect();
    assert_eq!(values, vec![0.0, 0.0, 0.0]);

    let vs_exact = semiprop(&["compare", &file("psi_ct_T2.csv"), &file("psi_exact_T2.csv")], &[]);
    let l2: f64 = stdout(&vs_exact).lines().nth(1).unwrap().split(',').next().unwrap().parse().unwrap();
    assert!(l2 < 1e-8, "CT vs exact L2 {l2}");

    let short = dir.path().join("short.csv");
    let lines: Vec<String> = fs::read_to_string(file("psi_ct_T2.csv")).unwrap().lines().take(50).map(String::from).collect();
    fs::write(&short, lines.join("\n")).unwrap();
    let mismatch = semiprop(&["compare", short.to_str().unwrap(), &file("psi_ct_T2.csv")], &[]);
    assert!(!mismatch.status.success());
    assert!(String::from_utf8_lossy(&mismatch.stderr).contains("grids differ"));
}

#[test]
fn invalid_configs_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let bad = [
        ("unknown.cfg", "name = x\npotential.kind = free\nstate.q = 0\nstate.p = 0\nstate.b = 1\ntimes = 1\ngrid.x_min = -1\ngrid.x_max = 1\ngrid.step = 0.1\nformulas = CT\nstate.colour = red\n"),
        ("width.cfg", "name = x\npotential.kind = free\nstate.q = 0\nstate.p = 0\nstate.b = -1\ntimes = 1\ngrid.x_min = -1\ngrid.x_max = 1\ngrid.step = 0.1\nformulas = CT\n"),
        ("syntax.cfg", "name x\n"),
    ];
    for (name, text) in bad {
        let path = dir.path().join(name);
        fs::write(&path, text).unwrap();
        let o = semiprop(&["run", path.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()], &[]);
        assert!(!o.status.success(), "{name} was accepted");
        assert!(!o.stderr.is_empty());
    }
    let missing = semiprop(&["run", dir.path().join("nope.cfg").to_str().unwrap()], &[]);
    assert!(!missing.status.success());
}

#[test]
fn environment_overrides_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("env");
    run(&scenario_path("free.cfg"), &out, &[("SEMIPROP_STATE__Q", "0.25"), ("SEMIPROP_TIMES", "1")]);
    let echoed = Config::load(&out.join("config.cfg")).unwrap();
    assert_eq!(echoed.get("state.q"), Some("0.25"));
    assert!(out.join("psi_ct_T1.csv").is_file());
    assert!(!out.join("psi_ct_T2.csv").exists());
}

#[test]
fn map_of_the_free_particle_has_one_family_and_no_caustics() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("map");
    let o = semiprop(&["map", scenario_path("free.cfg").to_str().unwrap(), "--time", "2", "--out", out.to_str().unwrap()], &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("0 caustics, 1 families"));
    let caustics = fs::read_to_string(out.join("caustics_T2.csv")).unwrap();
    assert_eq!(caustics.lines().count(), 1);
    let families = fs::read_to_string(out.join("families_T2.csv")).unwrap();
    assert!(families.lines().skip(1).all(|l| l.starts_with("main,")));
    assert!(out.join("scan_T2.csv").is_file());
    assert!(out.join("cuts_T2.csv").is_file());
    assert!(out.join("config.cfg").is_file());
}

fn complex() -> impl Strategy<Value = Complex64> {
    (-5.0..5.0f64, -5.0..5.0f64).prop_map(|(re, im)| Complex64::new(re, im))
}

proptest! {
    #[test]
    fn config_survives_display_and_parse(
        entries in prop::collection::btree_map("[a-z]{1,6}(\\.[a-z_]{1,8})?", "[A-Za-z0-9.,+ -]{1,12}", 0..8),
    ) {
        let mut c = Config::default();
        for (k, v) in &entries {
            c.set(k, v.trim());
        }
        prop_assume!(entries.values().all(|v| !v.trim().is_empty()));
        let back = Config::parse(&c.to_string()).unwrap();
        prop_assert_eq!(back, c);
    }

    #[test]
    fn comparison_is_symmetric_and_metric(
        values in prop::collection::vec((complex(), complex(), complex()), 2..40),
    ) {
        let x: Vec<f64> = (0..values.len()).map(|k| 0.1 * k as f64).collect();
        let a: Vec<Complex64> = values.iter().map(|v| v.0).collect();
        let b: Vec<Complex64> = values.iter().map(|v| v.1).collect();
        let c: Vec<Complex64> = values.iter().map(|v| v.2).collect();
        let ab = compare(&x, &a, &x, &b, 0.0).unwrap();
        let ba = compare(&x, &b, &x, &a, 0.0).unwrap();
        prop_assert!((ab.l2 - ba.l2).abs() <= 1e-12 * (1.0 + ab.l2));
        prop_assert!((ab.max_density_deviation - ba.max_density_deviation).abs() <= 1e-12 * (1.0 + ab.max_density_deviation));
        let ac = compare(&x, &a, &x, &c, 0.0).unwrap().l2;
        let cb = compare(&x, &c, &x, &b, 0.0).unwrap().l2;
        prop_assert!(ab.l2 <= ac + cb + 1e-9);
        prop_assert_eq!(compare(&x, &a, &x, &a, 0.0).unwrap().l2, 0.0);
    }
}
