use std::path::PathBuf;
use std::process::{Command, Output};

fn ubp(args: &[&str], threads: Option<&str>) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ubp"));
    c.args(args);
    match threads {
        Some(t) => c.env("UBP_THREADS", t),
        None => c.env_remove("UBP_THREADS"),
    };
    c.output().unwrap()
}

fn rules(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../rules").join(format!("{name}.json")).display().to_string()
}

fn scratch(name: &str, text: &str) -> String {
    let p = std::env::temp_dir().join(format!("ubp-cli-test-{}-{name}", std::process::id()));
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn classify_duarte() {
    let o = ubp(&["classify", "--rules", &rules("duarte")], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = stdout(&o);
    for want in ["kind: critical", "alpha: 1", "unbalanced", "drift: yes", "u*: (0, 1)"] {
        assert!(s.contains(want), "missing {want:?} in\n{s}");
    }
    assert!(stderr(&o).starts_with("config: {"));
}

#[test]
fn classify_three_of_four_is_subcritical() {
    let o = ubp(&["classify", "--rules", &rules("r3")], None);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("kind: subcritical"));
}

#[test]
fn malformed_rule_file_is_a_usage_error_with_position() {
    let p = scratch("bad.json", "{\"name\": \"x\",\n \"rules\": [[[1, 0]],, ]}");
    let o = ubp(&["classify", "--rules", &p], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2, column"), "{}", stderr(&o));
    let o = ubp(&["classify", "--window"], None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn expected_mismatch_fails() {
    let p = scratch("wrong.json", "{\"name\": \"two\", \"rules\": [[[1, 0], [0, 1]], [[-1, 0], [0, 1]], [[1, 0], [0, -1]], [[-1, 0], [0, -1]], [[1, 0], [-1, 0]], [[0, 1], [0, -1]]], \"expected\": {\"kind\": \"subcritical\"}}");
    let o = ubp(&["classify", "--rules", &p], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("mismatch: kind"));
}

#[test]
fn verify_span_passes() {
    let o = ubp(&["verify", "--suite", "span", "--trials", "30", "--seed", "7"], None);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let s = stdout(&o);
    assert!(s.lines().all(|l| l.starts_with("PASS") || l.starts_with("    ")));
    assert!(s.contains("duarte/span dual path"));
    assert!(stderr(&o).contains("constants duarte"));
}

#[test]
fn verify_with_no_trials_is_an_empty_pass() {
    let o = ubp(&["verify", "--suite", "cover", "--trials", "0", "--format", "json"], None);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["checks"].as_array().unwrap().len(), 0);
}

#[test]
fn monte_carlo_output_ignores_thread_count() {
    let args = ["closure", "--n", "32", "--p", "0.05,0.07", "--trials", "40", "--seed", "3"];
    let a = ubp(&args, Some("1"));
    let b = ubp(&args, Some("3"));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let s = stdout(&a);
    assert!(s.starts_with("family,n,p,trials,statistic,ci_low,ci_high,seed\n"), "{s}");
    assert_eq!(s.lines().count(), 3);
    assert_eq!(ubp(&args, Some("zero")).status.code(), Some(2));
}

#[test]
fn demo_growth_writes_frames() {
    let o = ubp(&["demo-growth", "--n", "24", "--p", "0.1", "--seed", "2"], None);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    let mut lines = s.lines();
    assert_eq!(lines.next(), Some("frame,x,y"));
    let frames: Vec<u32> = lines.map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert!(!frames.is_empty());
    assert!(frames.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn difficulty_reports_witnesses() {
    let o = ubp(&["difficulty", "--rules", "duarte", "--dir", "0,-1"], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = stdout(&o);
    assert!(s.contains("α+ = inf") && s.contains("α- = 1"), "{s}");
}
