use std::fs;
use std::process::{Command, Output};

use nhse_core::sweep::{read_json, Payload};

fn nhse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nhse"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn spectrum_to_stdout() {
    let o = nhse(&["spectrum", "--g", "0.25", "--alpha", "2,inf", "-L", "4:6:2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "j_left_re,j_left_im,j_right_re,j_right_im,g,alpha,L,status,k,E_re,E_im,is_complex"
    );
    // (4 + 6) eigenvalues for each of the two exponents
    assert_eq!(lines.count(), 20);
    assert!(stderr(&o).contains("4 points, 0 failed"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scan.cfg");
    fs::write(
        &cfg,
        "# threshold scan\ntask = transition\ng = 0.25\nalpha = 1\nL = 2:40:1\n",
    )
    .unwrap();
    let out = dir.path().join("scan.csv");
    let o = nhse(&[
        "transition",
        "--config",
        cfg.to_str().unwrap(),
        "--alpha",
        "1,2",
        "-o",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).is_empty());
    let main = fs::read_to_string(&out).unwrap();
    assert_eq!(main.lines().count(), 1 + 2 * 39);
    let critical = fs::read_to_string(dir.path().join("scan.critical.csv")).unwrap();
    assert_eq!(critical.lines().count(), 3);
}

#[test]
fn json_records_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("loc.json");
    let o = nhse(&[
        "localization",
        "--g",
        "0.25",
        "--alpha",
        "0",
        "-L",
        "20,30",
        "--fraction",
        "0.5",
        "--format",
        "json",
        "-o",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let records = read_json(fs::File::open(&out).unwrap()).unwrap();
    assert_eq!(records.len(), 2);
    for r in &records {
        let Some(Payload::Localization { modes }) = &r.payload else {
            panic!("{r:?}")
        };
        let expected = 2.0 * r.point.size as f64;
        assert!((modes[0].xi - expected).abs() / expected < 0.02);
    }
}

#[test]
fn bad_input_exits_with_usage_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(
        &cfg,
        "g = 0.1\nalpha = 1\nL = 10\nworkers = 1\nworkers = 2\n",
    )
    .unwrap();
    let o = nhse(&["spectrum", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 5"), "{}", stderr(&o));

    let o = nhse(&["entanglement", "--g", "0.3", "--alpha", "0", "-L", "7"]);
    assert_eq!(o.status.code(), Some(2));
    let o = nhse(&["figure", "fig9"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn failed_points_are_recorded() {
    let o = nhse(&[
        "entanglement",
        "--g",
        "0.3",
        "--alpha",
        "3",
        "-L",
        "4,60",
        "--half-only",
        "--timeout",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.lines().any(|l| l.contains(",4,ok,")));
    assert!(text
        .lines()
        .any(|l| l.contains(",60,error: grid point timed out")));
}

#[test]
fn repeated_runs_are_identical() {
    let args = [
        "dynamics", "--g", "0.3", "--alpha", "1,inf", "-L", "6,8", "--t-max", "5",
    ];
    let a = nhse(&[&args[..], &["--workers", "1"]].concat());
    let b = nhse(&[&args[..], &["--workers", "3"]].concat());
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
}
