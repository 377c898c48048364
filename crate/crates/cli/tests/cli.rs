use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};
use tempfile::TempDir;

fn extspec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_extspec"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn extspec_stdin(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_extspec"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn csv_values(text: &str) -> Vec<(f64, usize)> {
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("eigenvalue,multiplicity"));
    lines
        .map(|l| {
            let (v, m) = l.split_once(',').unwrap();
            (v.parse().unwrap(), m.parse().unwrap())
        })
        .collect()
}

const PI_DIRICHLET: &str =
    r#"{"kind":"graph","lengths":[3.14159265358979],"extension":{"type":"dirichlet"}}"#;

#[test]
fn spectrum_of_pi_interval() {
    let dir = TempDir::new().unwrap();
    let f = write(dir.path(), "d.json", PI_DIRICHLET);
    let o = extspec(&["spectrum", "-i", &f, "--emax", "10"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = csv_values(&stdout(&o));
    assert_eq!(rows.len(), 3);
    for (row, want) in rows.iter().zip([1.0, 4.0, 9.0]) {
        assert!((row.0 - want).abs() < 1e-9, "{row:?}");
        assert_eq!(row.1, 1);
    }
}

#[test]
fn stdin_input_and_negative_count() {
    let o = extspec_stdin(&["count", "-i", "-", "--at", "-5"], PI_DIRICHLET);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "0");
    let o = extspec_stdin(&["count", "-i", "-", "--at", "5"], PI_DIRICHLET);
    assert_eq!(stdout(&o).trim(), "2");
}

#[test]
fn interlace_dirichlet_neumann() {
    let dir = TempDir::new().unwrap();
    let d = write(
        dir.path(),
        "d.json",
        r#"{"kind":"graph","lengths":[1.0,2.5],"extension":{"type":"dirichlet"}}"#,
    );
    let n = write(
        dir.path(),
        "n.json",
        r#"{"kind":"graph","lengths":[1.0,2.5],"extension":{"type":"neumann"}}"#,
    );
    let o = extspec(&["interlace", "-i", &d, "-i", &n, "-d", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["interlaced"], true);
    assert_eq!(v["counting_bound_satisfied"], true);
}

#[test]
fn exit_codes_for_good_violating_and_malformed_input() {
    let dir = TempDir::new().unwrap();
    let d = write(
        dir.path(),
        "d.json",
        r#"{"kind":"graph","lengths":[1.0,2.5],"extension":{"type":"dirichlet"}}"#,
    );
    let n = write(
        dir.path(),
        "n.json",
        r#"{"kind":"graph","lengths":[1.0,2.5],"extension":{"type":"neumann"}}"#,
    );
    // N_N - N_D reaches K = 2, so a declared d = 1 is violated.
    let o = extspec(&["interlace", "-i", &d, "-i", &n, "-d", "1"]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["counting_bound_satisfied"], false);

    let bad = write(
        dir.path(),
        "bad.json",
        r#"{"kind":"graph","lengths":[1.0,-2.0],"extension":{"type":"dirichlet"}}"#,
    );
    let o = extspec(&["spectrum", "-i", &bad, "--emax", "10"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(String::from_utf8_lossy(&o.stderr).lines().count(), 1);

    let garbled = write(dir.path(), "g.json", "{\"kind\":\"graph\",");
    assert_eq!(extspec(&["spectrum", "-i", &garbled, "--emax", "10"]).status.code(), Some(2));

    let wrong_size = write(
        dir.path(),
        "w.json",
        r#"{"kind":"graph","lengths":[1.0],"extension":{"type":"unitary","matrix":[[[1,0]]]}}"#,
    );
    assert_eq!(extspec(&["spectrum", "-i", &wrong_size, "--emax", "10"]).status.code(), Some(2));

    let good = extspec(&["spectrum", "-i", &d, "--emax", "10"]);
    assert_eq!(good.status.code(), Some(0));
}

#[test]
fn random_extension_round_trip_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    let frag = extspec(&["random-extension", "-K", "2", "--seed", "42"]);
    assert_eq!(frag.status.code(), Some(0));
    let frag = stdout(&frag);
    let from_file = write(
        dir.path(),
        "u.json",
        &format!(r#"{{"kind":"graph","lengths":[1.0,1.7],"extension":{}}}"#, frag.trim()),
    );
    let from_seed = write(
        dir.path(),
        "r.json",
        r#"{"kind":"graph","lengths":[1.0,1.7],"extension":{"type":"random","seed":42}}"#,
    );
    let a = extspec(&["spectrum", "-i", &from_file, "--emax", "60"]);
    let b = extspec(&["spectrum", "-i", &from_seed, "--emax", "60"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert!(csv_values(&stdout(&a)).len() > 3);
}

#[test]
fn weyl_sweep_reports_bound() {
    let o = extspec_stdin(
        &["weyl-sweep", "-i", "-", "--emax", "200", "--grid", "200"],
        r#"{"kind":"graph","lengths":[0.7,1.3,2.0],"extension":{"type":"random","seed":9}}"#,
    );
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["bound"], 9.0);
    assert_eq!(v["satisfied"], true);
    assert!(v["argmax_E"].is_number());
}

#[test]
fn oracles_agree() {
    let o = extspec_stdin(
        &["oracle-fd", "-i", "-", "--count", "5"],
        r#"{"kind":"graph","lengths":[1.0,1.5,2.0],"extension":{"type":"kirchhoff","edges":[[0,1],[1,2],[1,3]],"vertices":4}}"#,
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["agree"], true);

    let o = extspec_stdin(&["oracle-minmax", "-i", "-"], r#"{"kind":"minmax","N":20,"d":3,"seed":5}"#);
    assert_eq!(o.status.code(), Some(0));
    let o = extspec_stdin(&["oracle-minmax", "-i", "-"], r#"{"kind":"minmax","N":3,"d":3,"seed":5}"#);
    assert_eq!(o.status.code(), Some(2));
    let o = extspec_stdin(&["oracle-fd", "-i", "-"], PI_DIRICHLET.replace("dirichlet", "random\",\"seed\":\"1").as_str());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn seba_prints_spectrum_and_verdict() {
    let o = extspec_stdin(
        &["seba", "-i", "-", "--emax", "150"],
        r#"{"kind":"seba","sides":[1.0,1.618033988749895],"point":[0.31,0.52],"coupling":-0.2,"truncation_ratio":1e6}"#,
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let (csv, verdict) = text.trim_end().rsplit_once('\n').unwrap();
    assert!(!csv_values(csv).is_empty());
    let v: serde_json::Value = serde_json::from_str(verdict).unwrap();
    assert_eq!(v["satisfied"], true);
    assert_eq!(v["gap_violations"], 0);
}
