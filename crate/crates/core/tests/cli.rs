use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_bkscert");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&[]).status.code(), Some(2));
    assert_eq!(run(&["generate", "--seed-axis", "4"]).status.code(), Some(2));
    assert_eq!(run(&["generate", "--target", "1, 2"]).status.code(), Some(2));
    assert_eq!(run(&["color", "x.json", "--mode", "fast"]).status.code(), Some(2));
    // target on the seed axis has no offset
    assert_eq!(run(&["generate", "--seed-axis", "1", "--target", "(2, 0, 0)"]).status.code(), Some(2));
}

#[test]
fn missing_file_fails() {
    let o = run(&["verify", "/nonexistent/cert.json"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn repro_table() {
    let o = run(&["repro"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("minimal n          5"), "{text}");
    assert!(text.contains("chain length       7"), "{text}");
    assert!(text.contains("[125.264"), "{text}");
}

#[test]
fn single_seed_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    let p = path.to_str().unwrap();
    let o = run(&["generate", "--seed-axis", "2", "--target", "(1, 1, 1)", "--out", p]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(&["verify", "--quiet", p]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).contains("certificate: pass"));

    // the one seed can be pinned without naming the sub-instance
    let o = run(&["color", p, "--pin", "seed=1", "--sub-instance", "0"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("verdict: uncolorable"));
    let o = run(&["color", p, "--sub-instance", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("verdict: colorable"));
    let o = run(&["color", p, "--pin", "seed=0", "--sub-instance", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(run(&["color", p, "--sub-instance", "5"]).status.code(), Some(2));
    assert_eq!(run(&["color", p, "--pin", "v99999=1"]).status.code(), Some(2));

    // a flipped sign in one vector coordinate
    let text = std::fs::read_to_string(&path).unwrap();
    let i = text.find("\"vectors\"").unwrap();
    let j = i + text[i..].find("\"1\"").unwrap();
    let bad = format!("{}\"-1\"{}", &text[..j], &text[j + 3..]);
    std::fs::write(&path, bad).unwrap();
    assert_eq!(run(&["verify", "--quiet", p]).status.code(), Some(1));
}
