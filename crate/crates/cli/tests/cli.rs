use std::process::{Command, Output};

use irrper_cli::report::{Details, Report};

fn irrper(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_irrper"))
        .args(args)
        .env_remove("IRRPER_PRECISION")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn period_report_is_deterministic() {
    let args = ["period", "--lambda", "2", "--no-timings"];
    let a = irrper(&args);
    let b = irrper(&args);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn sequential_and_parallel_agree_bytewise() {
    let a = irrper(&["approx", "--lambda", "2", "--m", "10,20,30,40", "--no-timings"]);
    let b = irrper(&["approx", "--lambda", "2", "--m", "10,20,30,40", "--no-timings", "--sequential"]);
    let strip = |o: &Output| stdout(o).lines().filter(|l| !l.contains("\"execution\"")).collect::<Vec<_>>().join("\n");
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn json_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = irrper(&["exceptional", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let report = Report::from_json(&text).unwrap();
    assert_eq!(report.to_json(), text);
    assert!(report.timings.is_some());
    assert!(matches!(report.details, Details::Exceptional { .. }));
    assert!(report.branch.is_some());
}

#[test]
fn approx_csv_has_one_row_per_m_plus_limit() {
    let o = irrper(&["approx", "--lambda", "2", "--m", "10,20,30", "--format", "csv", "--no-timings"]);
    let text = stdout(&o);
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let headers = rd.headers().unwrap().clone();
    assert_eq!(&headers[0], "m");
    assert_eq!(headers.len(), 16);
    let rows: Vec<csv::StringRecord> = rd.records().map(Result::unwrap).collect();
    let first: Vec<&str> = rows.iter().map(|r| &r[0]).collect();
    assert_eq!(first, ["10", "20", "30", "limit"]);
    for r in &rows[..3] {
        let p_im: f64 = r[2].parse().unwrap();
        assert!(p_im.is_finite());
    }
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        &["period", "--lambda", "banana"][..],
        &["period", "--lambda", "0"],
        &["approx", "--lambda", "2"],
        &["period", "--m", "20,10"],
        &["period", "--tol", "0.5"],
        &["exceptional", "--lambda", "2"],
        &["period", "--lambda", "0.5+0.8660254037844386i"],
        &["--frobnicate"],
    ] {
        let o = irrper(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(o.stdout.is_empty());
    }
}

#[test]
fn failed_check_exits_three() {
    // three terms are too few for the extrapolation to reach its target
    let o = irrper(&["approx", "--lambda", "2", "--m", "10,20,30", "--no-timings"]);
    assert_eq!(o.status.code(), Some(3));
    let report = Report::from_json(&stdout(&o)).unwrap();
    assert!(!report.all_passed());
}

#[test]
fn config_file_and_env() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "mode = approx\nlambda = 3\nm = 10,20,30,40,50,60\ntimings = false\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_irrper"))
        .args(["--config", cfg.to_str().unwrap(), "--lambda", "-1"])
        .env("IRRPER_PRECISION", "extended")
        .output()
        .unwrap();
    let report = Report::from_json(&stdout(&o)).unwrap();
    assert_eq!(report.config.lambda_input, "-1");
    assert_eq!(report.config.m_list, [10, 20, 30, 40, 50, 60]);
    assert!(report.timings.is_none());
    let json = stdout(&o);
    assert!(json.contains("\"precision\": \"extended\""));
}
