use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_open-boson"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn steady_default_row() {
    let o = run(&["steady"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().next().unwrap(), "n_e,n_c,n_s,T_sys,I_s,eta_s,eta_c,E_s");
    let r = &rows(&text)[0];
    assert!((r[5] - 0.6224593312018546).abs() < 1e-12);
    assert_eq!(r[6], 0.5);
    // 17 significant digits per field.
    assert!(text
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .all(|f| f.split('e').next().unwrap().len() == 18));
}

#[test]
fn steady_equal_baths_and_unit_current() {
    let r = &rows(&stdout(&run(&["--temp-c", "2", "steady"])))[0];
    assert_eq!(r[4], 0.0);
    assert_eq!(r[5], 0.0);
    // n̄_e = 3, n̄_c = 1 gives I_s = 1 and E_s = ħω_s.
    let te = (1.0f64 / (4.0f64 / 3.0).ln()).to_string();
    let tc = (1.0f64 / 2.0f64.ln()).to_string();
    let r = &rows(&stdout(&run(&["--temp-e", &te, "--temp-c", &tc, "steady"])))[0];
    assert!((r[4] - 1.0).abs() < 1e-12);
    assert!((r[7] - 1.0).abs() < 1e-12);
}

#[test]
fn sweep_adds_leading_column() {
    let text = stdout(&run(&["steady", "--sweep", "gamma_e:0.5:2:4"]));
    assert!(text.starts_with("gamma_e,n_e,"));
    let r = rows(&text);
    assert_eq!(r.len(), 4);
    assert_eq!(r[3][0], 2.0);
}

#[test]
fn output_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["fig1", "--emitter-temps", "1,2,4"],
        vec!["fig2"],
        vec!["evolve", "--n0", "2", "--t-end", "1"],
        vec!["transport", "--sweep", "temp_c:0.5:1.5:3"],
    ] {
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        for p in [&a, &b] {
            let mut full: Vec<&str> = args.clone();
            full.extend(["--out", p.to_str().unwrap()]);
            assert!(run(&full).status.success(), "{args:?}");
        }
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap(), "{args:?}");
    }
}

#[test]
fn fig1_curves_and_bounds() {
    let r = rows(&stdout(&run(&["fig1", "--emitter-temps", "1,3"])));
    assert_eq!(r.len(), 198);
    for curve in r.chunks(99) {
        assert!(curve.windows(2).all(|w| w[1][2] < w[0][2] || w[1][2] == 1.0));
        assert!(curve.iter().all(|row| row[2] >= row[3]));
    }
    let bad = run(&["fig1", "--emitter-temps", "2", "--sweep", "temp_c:0.1:2:5"]);
    assert_eq!(bad.status.code(), Some(2));
    let ok = run(&["fig1", "--emitter-temps", "2", "--sweep", "temp_c:0.1:1.9:5"]);
    assert!(ok.status.success());
}

#[test]
fn fig2_locus_saturates() {
    let r = rows(&stdout(&run(&["fig2", "--sweep", "temp_e:0.5:8:16"])));
    assert_eq!(r.len(), 16);
    assert!(r.iter().all(|row| row[2] == 1.0));
    let inc: Vec<f64> = r.windows(2).map(|w| w[1][1] - w[0][1]).collect();
    assert!(inc.iter().all(|d| *d >= 0.0));
    assert!(inc.windows(2).all(|w| w[1] < w[0]));
    // Closed form at fraction one half: T_c = 1/ln(2e^{1/T_e} − 1).
    let t_e = r[0][0];
    assert!((r[0][1] - 1.0 / (2.0 * (1.0 / t_e).exp() - 1.0).ln()).abs() < 1e-8);
}

#[test]
fn evolve_reports_dim_and_tracks_analytic() {
    let text = stdout(&run(&["evolve", "--n0", "3", "--t-end", "2"]));
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# dim="));
    assert_eq!(lines.next().unwrap(), "t,mean_n,current,trace_defect,min_eig");
    // Default baths: n̄_e = 1/(e^{1/2} − 1), n̄_c = 1/(e − 1), γ = 2.
    let n_e = 1.0 / 0.5f64.exp_m1();
    let n_c = 1.0 / 1.0f64.exp_m1();
    let n_s = 0.5 * (n_e + n_c);
    let r = rows(&text);
    assert_eq!(r.last().unwrap()[0], 2.0);
    for row in r {
        let n = n_s + (3.0 - n_s) * (-2.0 * row[0]).exp();
        assert!((row[1] - n).abs() < 1e-6);
        assert!((row[2] - 0.5 * (n_e - n_c)).abs() < 1e-12);
        assert!(row[3] < 1e-8 && row[4] > -1e-8);
    }
    assert_eq!(run(&["evolve", "--n0", "1.5"]).status.code(), Some(2));
    assert_eq!(run(&["evolve", "--dt", "1.0"]).status.code(), Some(2));
}

#[test]
fn fp_snapshots_to_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("snap.csv");
    let o = run(&[
        "fp",
        "--times",
        "0.5,2",
        "--points",
        "512",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for k in 0..2 {
        let text = std::fs::read_to_string(dir.path().join(format!("snap-{k}.csv"))).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("# t="));
        assert!(lines.next().unwrap().starts_with("# params="));
        assert!(lines.next().unwrap().starts_with("# force_coefficient="));
        assert_eq!(lines.next().unwrap(), "x,value");
        assert_eq!(lines.count(), 512);
    }
    assert!(!Path::new(&out).exists());
    let analytic = run(&["fp", "--times", "1", "--points", "64", "--source", "analytic"]);
    assert!(analytic.status.success());
    assert_eq!(
        run(&["fp", "--times", "0", "--source", "analytic"]).status.code(),
        Some(2)
    );
}

#[test]
fn config_file_and_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"temp_e": 2.0, "temp_c": 2.0}"#).unwrap();
    let from_file = rows(&stdout(&run(&["--config", cfg.to_str().unwrap(), "steady"])));
    assert_eq!(from_file[0][5], 0.0);
    let overridden = rows(&stdout(&run(&[
        "--config",
        cfg.to_str().unwrap(),
        "--temp-c",
        "1",
        "steady",
    ])));
    assert!((overridden[0][5] - 0.6224593312018546).abs() < 1e-12);
    std::fs::write(&cfg, r#"{"unknown": 1}"#).unwrap();
    assert_eq!(
        run(&["--config", cfg.to_str().unwrap(), "steady"]).status.code(),
        Some(2)
    );
    let help = stdout(&run(&["--help"]));
    assert!(help.contains("precedence"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["steady", "--temp-c", "-1"]).status.code(), Some(2));
    assert_eq!(run(&["steady", "--sweep", "temp_c:1:2:1"]).status.code(), Some(2));
    assert_eq!(run(&["nonsense"]).status.code(), Some(2));
    assert_eq!(run(&["fig2", "--fraction", "1.5"]).status.code(), Some(2));
}

#[test]
fn unwritable_output_is_reported() {
    let o = run(&["steady", "--out", "/nonexistent-dir/x.csv"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
}

#[test]
fn validate_passes_and_corrupted_fails() {
    let o = run(&["validate", "--samples", "20000", "--fp-points", "512"]);
    let text = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{text}");
    assert!(text.lines().filter(|l| l.starts_with("PASS")).count() >= 10);
    assert!(text.contains("dim=") && text.contains("dt="));
    let bad = bin()
        .args([
            "validate",
            "--samples",
            "20000",
            "--fp-points",
            "512",
            "--corrupt-tolerance",
        ])
        .env("OPEN_BOSON_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
    assert!(stdout(&bad).contains("FAIL"));
}
