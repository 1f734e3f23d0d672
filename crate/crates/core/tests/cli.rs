use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SMALL: &str = r#"
[environment]
rates = [[-1.0, 1.0], [2.0, -2.0]]
initial_state = 1

[components]
arrival_rates = [[0.45, 1.8], [0.45, 1.8]]
premiums = [1.0, 1.0]

[claims]
default = { kind = "exponential", mean = 1.0 }

[query]
reserves = [4.0, 4.0]
horizons = [5.0, 10.0]
mode = "all"
methods = ["mc", "diffusion", "single-switch", "independence"]

[mc]
paths = 5000
seed = 11
"#;

fn ruinlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ruinlab"))
        .args(args)
        .env_remove("RUINLAB_THREADS")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

#[test]
fn compare_csv_is_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let csv = dir.path().join(format!("out{threads}.csv"));
        let out = ruinlab(&[
            "compare",
            "--model",
            cfg.to_str().unwrap(),
            "--threads",
            threads,
            "--out",
            csv.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        outputs.push(std::fs::read(&csv).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);

    let text = String::from_utf8(outputs.remove(0)).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "T,mc,mc_ci_low,mc_ci_high,diffusion,single_switch,independence,state,mode"
    );
    for line in lines {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells.len(), 9);
        let p: Vec<f64> = cells[1..7].iter().map(|c| c.parse().unwrap()).collect();
        assert!(p.iter().all(|x| (0.0..=1.0).contains(x)));
        assert!(p[1] <= p[0] && p[0] <= p[2]);
        assert_eq!(&cells[7..], &["1", "all"]);
    }
}

#[test]
fn environment_variable_sets_threads() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_ruinlab"))
            .args(["estimate", "--model", cfg.to_str().unwrap(), "--T", "10"])
            .env("RUINLAB_THREADS", threads)
            .output()
            .unwrap()
    };
    let (a, b) = (run("1"), run("2"));
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn single_horizon_commands() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let path = cfg.to_str().unwrap();
    for cmd in ["approx-diffusion", "approx-switch"] {
        let out = ruinlab(&[cmd, "--model", path, "--T", "8"]);
        assert_eq!(code(&out), 0, "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8_lossy(&out.stdout).contains("T = 8"));
    }
}

#[test]
fn invalid_model_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = SMALL.replace("[2.0, -2.0]", "[2.0, -1.5]");
    let cfg = write(dir.path(), "bad.toml", &bad);
    let out = ruinlab(&["compare", "--model", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("row"));

    let unknown = ruinlab(&["reproduce", "example9"]);
    assert_eq!(code(&unknown), 2);
    let missing = ruinlab(&["compare", "--model", "/nonexistent/model.toml"]);
    assert_eq!(code(&missing), 2);
}

#[test]
fn estimator_failure_exits_with_3_naming_method_and_horizon() {
    let dir = tempfile::tempdir().unwrap();
    let law = SMALL
        .replace("initial_state = 1", "initial_law = [0.5, 0.5]")
        .replace(r#"methods = ["mc", "diffusion", "single-switch", "independence"]"#, r#"methods = ["single-switch"]"#);
    let cfg = write(dir.path(), "law.toml", &law);
    let out = ruinlab(&["compare", "--model", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 3);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("single-switch") && err.contains('5'), "{err}");
}
