use std::path::Path;
use std::process::{Command, Output};

fn lsolab(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lsolab"))
        .args(args)
        .current_dir(cwd)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = Vec::new();
    for threads in ["1", "8"] {
        let out = format!("run{threads}");
        let o = lsolab(&["--trials", "1000", "--threads", threads, "--out", &out, "wegner"], dir.path());
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        csv.push(std::fs::read(dir.path().join(out).join("results.csv")).unwrap());
    }
    assert_eq!(csv[0], csv[1]);
}

#[test]
fn report_flags_a_violated_row() {
    let dir = tempfile::tempdir().unwrap();
    let o = lsolab(&["--trials", "500", "--out", "run", "wegner"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let path = dir.path().join("run/results.csv");
    let o = lsolab(&["report", path.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0));

    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    lines[1] = lines[1].replace(",holds,", ",violated,");
    assert!(lines[1].contains(",violated,"));
    std::fs::write(&path, lines.join("\n") + "\n").unwrap();
    let o = lsolab(&["report", path.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stdout).contains("violated"));
}

#[test]
fn bad_config_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), "{\"seed\": 1}").unwrap();
    let o = lsolab(&["--config", "bad.json", "wegner"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));

    let o = lsolab(&["--trials", "5", "--out", "run", "wegner"], dir.path());
    assert_eq!(o.status.code(), Some(1));

    // a gaussian config handed to the wegner subcommand
    let o = lsolab(&["default-config", "gaussian"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    std::fs::write(dir.path().join("g.json"), &o.stdout).unwrap();
    let o = lsolab(&["--config", "g.json", "wegner"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}
