use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SMALL_DISK: &str = r#"
name = "small"
horizon = 0.5
record_step = 0.1

[grid]
half_width = 2.0
spacing = 0.04

[datum]
shape = "disk"
radius = 0.8
floor = -0.3

[model]
kind = "constant"
speed = 1.0

[[checks]]
name = "finite_speed"

[[checks]]
name = "lipschitz_bound"

[[checks]]
name = "minimal_time"
"#;

const SMALL_DISLOCATION: &str = r#"
name = "dislocation"
horizon = 0.3

[grid]
half_width = 2.0
spacing = 0.04

[datum]
shape = "disk"
radius = 0.8
floor = -0.3

[model]
kind = "dislocation"
kernel_radius = 1.0
kernel_scale = 0.25
c1 = 1.0

[solver]
picard = true
frames = 15

[[checks]]
name = "sandwich"

[[checks]]
name = "comparison"
pairs = 2
"#;

fn frontprop(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_frontprop"))
        .args(args)
        .current_dir(dir)
        .env_remove("FRONTPROP_OUT")
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn small_scenario_passes_and_writes_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "s.toml", SMALL_DISK);
    let o = frontprop(&["run", "s.toml", "--out", "out"], tmp.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert_eq!(stdout.matches(" PASS ").count(), 3, "{stdout}");
    let dir = tmp.path().join("out/small");
    for f in ["u_initial.fpf1", "u_final.fpf1", "arrival.fpf1", "report.csv", "summary.csv", "front_final.csv"] {
        assert!(dir.join(f).exists(), "{f}");
    }
    let summary = std::fs::read_to_string(dir.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 4);
    assert!(summary.lines().skip(1).all(|l| l.contains(",true,")));
}

#[test]
fn dump_info_reads_a_written_field() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "s.toml", SMALL_DISK);
    assert_eq!(code(&frontprop(&["run", "s.toml", "--out", "out"], tmp.path())), 0);
    let o = frontprop(&["dump-info", "out/small/arrival.fpf1"], tmp.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("extents: 101 x 101"), "{text}");
    assert!(text.contains("spacing: 0.04"));
    assert!(text.contains("sentinel:"));
    assert_eq!(code(&frontprop(&["dump-info", "missing.fpf1"], tmp.path())), 1);
}

#[test]
fn h3_violation_is_a_validation_error() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "bad.toml", &SMALL_DISLOCATION.replace("c1 = 1.0", "c1 = 0.5"));
    let o = frontprop(&["run", "bad.toml", "--out", "out"], tmp.path());
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("H3Violation"), "{}", stderr(&o));
}

#[test]
fn oversized_horizon_is_a_validation_error() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "big.toml", &SMALL_DISK.replace("horizon = 0.5", "horizon = 2.0"));
    let o = frontprop(&["run", "big.toml", "--out", "out"], tmp.path());
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("DomainTooSmall"), "{}", stderr(&o));
}

#[test]
fn malformed_files_are_parse_errors() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "typo.toml", &SMALL_DISK.replace("spacing", "spaceing"));
    write(tmp.path(), "broken.toml", "name = ");
    write(tmp.path(), "check.toml", &format!("{SMALL_DISK}\n[[checks]]\nname = \"no_such_check\"\n"));
    for f in ["typo.toml", "broken.toml", "check.toml", "absent.toml"] {
        assert_eq!(code(&frontprop(&["run", f], tmp.path())), 2, "{f}");
    }
    assert_eq!(code(&frontprop(&["launch", "typo.toml"], tmp.path())), 2);
}

#[test]
fn empty_suite_succeeds() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "suite.toml", "scenarios = []\n");
    let o = frontprop(&["verify", "suite.toml", "--out", "out"], tmp.path());
    assert_eq!(code(&o), 0);
    let summary = std::fs::read_to_string(tmp.path().join("out/summary.csv")).unwrap();
    assert_eq!(summary, "scenario,check_name,time,lhs,rhs,slack,pass\n");
}

#[test]
fn failing_check_fails_the_suite() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "ok.toml", SMALL_DISK);
    // a disk has perimeter / area = 2 / radius > 1
    let strict = SMALL_DISK.replace("name = \"small\"", "name = \"strict\"")
        + "\n[[checks]]\nname = \"perimeter_bound\"\nball_radius = 0.2\nlambda_hat = 1.0\n";
    write(tmp.path(), "strict.toml", &strict);
    write(tmp.path(), "suite.toml", "scenarios = [\"ok.toml\", \"strict.toml\"]\n");
    let o = frontprop(&["verify", "suite.toml", "--out", "out"], tmp.path());
    assert_eq!(code(&o), 4, "{}", stderr(&o));
    let summary = std::fs::read_to_string(tmp.path().join("out/summary.csv")).unwrap();
    assert!(summary.lines().any(|l| l.starts_with("strict,perimeter_bound,") && l.ends_with(",false")));
    assert!(summary.lines().filter(|l| l.starts_with("small,")).all(|l| l.ends_with(",true")));
}

#[test]
fn check_without_its_prerequisite_fails() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "s.toml", &format!("{SMALL_DISK}\n[[checks]]\nname = \"sandwich\"\n"));
    let o = frontprop(&["run", "s.toml", "--out", "out"], tmp.path());
    assert_eq!(code(&o), 4);
    assert!(String::from_utf8(o.stdout).unwrap().contains("sandwich"));
}

#[test]
fn output_directory_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "s.toml", &format!("output = \"own\"\n{SMALL_DISK}"));
    let run = |extra: &[&str], env: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_frontprop"));
        c.current_dir(tmp.path()).env_remove("FRONTPROP_OUT").arg("run").arg("s.toml").args(extra);
        if let Some(e) = env {
            c.env("FRONTPROP_OUT", e);
        }
        assert!(c.status().unwrap().success());
    };
    run(&[], None);
    assert!(tmp.path().join("own/small/report.csv").exists());
    run(&[], Some("from_env"));
    assert!(tmp.path().join("from_env/small/report.csv").exists());
    run(&["--out", "from_flag"], Some("from_env2"));
    assert!(tmp.path().join("from_flag/small/report.csv").exists());
    assert!(!tmp.path().join("from_env2").exists());
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "d.toml", SMALL_DISLOCATION);
    for (threads, out) in [("1", "one"), ("4", "four")] {
        let o = frontprop(&["run", "d.toml", "--threads", threads, "--seed", "3", "--out", out], tmp.path());
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let files: Vec<_> = std::fs::read_dir(tmp.path().join("one/dislocation")).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert!(files.len() >= 6);
    for f in files {
        let a = std::fs::read(tmp.path().join("one/dislocation").join(&f)).unwrap();
        let b = std::fs::read(tmp.path().join("four/dislocation").join(&f)).unwrap();
        assert!(a == b, "{f:?} differs");
    }
}
