use std::path::Path;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use calabi_lab::report::CSV_HEADER;

fn lab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_calabi-lab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("spawn calabi-lab")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn header() -> String {
    CSV_HEADER.join(",")
}

/// Rows without the trailing `wall_ms` column.
fn rows_without_wall(csv: &str) -> Vec<String> {
    csv.lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head).to_string())
        .collect()
}

#[test]
fn chart_check_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab(&["chart-check"], dir.path());
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("PASS chart symplecticity residual"));
}

#[test]
fn zero_fixture_passes_fast() {
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let o = lab(&["verify", "--fixture", "zero"], dir.path());
    let elapsed = start.elapsed();
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(elapsed < Duration::from_secs(1), "{elapsed:?}");
    assert!(!stdout(&o).contains("FAIL"));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("verify.json")).unwrap()).unwrap();
    assert_eq!(doc["passed"], true);
}

#[test]
fn corrupt_chart_fails_and_skips_the_rest() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab(&["verify", "--fixture", "corrupt-chart"], dir.path());
    assert_eq!(code(&o), 1);
    let text = stdout(&o);
    let first = text.lines().next().unwrap();
    assert!(first.starts_with("FAIL chart_symplecticity"), "{first}");
    assert!(first.contains("measured") && first.contains("tolerance 1e-10"));
    assert!(text.lines().skip(1).all(|l| l.starts_with("SKIP ")));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("verify.json")).unwrap()).unwrap();
    assert_eq!(doc["passed"], false);
    assert_eq!(doc["failures"], 1);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad_file = dir.path().join("bad.conf");
    std::fs::write(&bad_file, "steps = 100\nwarp = 9\n").unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["--steps", "many", "chart-check"],
        vec!["--lambda", "polar", "chart-check"],
        vec!["--config", bad_file.to_str().unwrap(), "chart-check"],
        vec!["cal", "--hamiltonian", "spiral"],
        vec!["verify", "--fixture", "broken"],
        vec!["grid", "--kmin", "4", "--kmax", "2"],
        vec!["frobnicate"],
    ];
    for args in cases {
        let o = lab(&args, dir.path());
        assert_eq!(code(&o), 2, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("lab.conf");
    std::fs::write(&file, "# desk settings\nsteps = 50\nquad = 16\nlambda = radial\n").unwrap();
    let o = lab(&["--config", file.to_str().unwrap(), "--steps", "60", "cal", "--hamiltonian", "bump"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let echo = std::fs::read_to_string(dir.path().join("cal.config")).unwrap();
    assert!(echo.lines().any(|l| l == "steps = 60"), "{echo}");
    assert!(echo.lines().any(|l| l == "quad = 16"), "{echo}");
    let csv = std::fs::read_to_string(dir.path().join("cal.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), header());
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row.len(), CSV_HEADER.len());
    assert!(!row[3].is_empty(), "radial value present");
    assert!(row[4].is_empty(), "xdy not requested");
    assert!(lines.next().is_none());
}

#[test]
fn empty_schedule_gives_header_only_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab(&["seq", "--eps", ""], dir.path());
    assert_eq!(code(&o), 0);
    let csv = std::fs::read_to_string(dir.path().join("seq.csv")).unwrap();
    assert_eq!(csv, header() + "\n");
}

#[test]
fn zero_epsilon_gives_an_all_zero_record() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab(&["seq", "--eps", "0"], dir.path());
    assert_eq!(code(&o), 0);
    let csv = std::fs::read_to_string(dir.path().join("seq.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "seq");
    for v in &row[2..9] {
        assert_eq!(v.parse::<f64>().unwrap(), 0.0);
    }
    assert_eq!(row[9], "true");
}

#[test]
fn svg_output_is_an_svg_document() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab(&["--svg", "--quad", "16", "seq", "--eps", "0.05,0.025"], dir.path());
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let svg = std::fs::read_to_string(dir.path().join("seq.svg")).unwrap();
    assert!(svg.starts_with("<?xml"));
    assert!(svg.contains(r#"xmlns="http://www.w3.org/2000/svg""#));
    assert!(svg.contains("<desc>") && svg.contains("eps = 0.05,0.025"));
    assert!(svg.trim_end().ends_with("</svg>"));
}

#[test]
fn repeated_runs_match_except_wall_time() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["--quad", "16", "cal", "--hamiltonian", "concat:pulsed+dipole"];
    assert_eq!(code(&lab(&args, a.path())), 0);
    assert_eq!(code(&lab(&args, b.path())), 0);
    let read = |d: &Path| std::fs::read_to_string(d.join("cal.csv")).unwrap();
    assert_eq!(rows_without_wall(&read(a.path())), rows_without_wall(&read(b.path())));
}

#[test]
fn help_exits_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab(&["--help"], dir.path());
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("chart-check"));
}
