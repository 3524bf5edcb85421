use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

fn oaspmdp(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oaspmdp"))
        .args(args)
        .current_dir(cwd)
        .env_remove("OASPMDP_OUT")
        .output()
        .unwrap()
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

#[test]
fn smoke_run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let out = oaspmdp(
        &[
            "--scenario",
            "walls",
            "--episodes",
            "5",
            "--trials",
            "1",
            "--out",
            "res",
        ],
        dir.path(),
    );
    assert!(start.elapsed() < Duration::from_secs(5));
    assert!(out.status.success(), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    assert!(
        stdout.contains("baseline") && stdout.contains("oasp"),
        "{stdout}"
    );

    let scenario = dir.path().join("res/walls");
    let csv = fs::read_to_string(scenario.join("curves.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "episode,agent,rmsd,return,steps,pairs,ref_steps,ref_return"
    );
    assert_eq!(lines.len(), 1 + 2 * 5);
    assert!(lines[1].starts_with("0,baseline,"));
    assert!(lines[2].starts_with("0,oasp,"));
    assert!(!csv.contains('\r'));
    for k in 0..3 {
        let grid = fs::read_to_string(scenario.join(format!("grid_phase{k}.txt"))).unwrap();
        assert_eq!(grid.lines().count(), 10);
    }
    assert!(scenario.join("qtable.csv").is_file());
    assert!(fs::read_dir(scenario.join("programs")).unwrap().count() > 0);
}

#[test]
fn same_seed_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let run = |out: &str, extra: &[&str]| {
        let mut args = vec![
            "--scenario",
            "probs",
            "--episodes",
            "40",
            "--trials",
            "3",
            "--seed",
            "7",
            "--changes",
            "10,25",
            "--out",
            out,
        ];
        args.extend_from_slice(extra);
        let o = oaspmdp(&args, dir.path());
        assert!(o.status.success(), "{}", text(&o.stderr));
        fs::read(dir.path().join(out).join("probs/curves.csv")).unwrap()
    };
    let a = run("a", &[]);
    let b = run("b", &[]);
    let c = run("c", &["--sequential"]);
    assert_eq!(a, b);
    assert_eq!(a, c);
    let d = {
        let o = oaspmdp(
            &[
                "--scenario",
                "probs",
                "--episodes",
                "40",
                "--trials",
                "3",
                "--seed",
                "8",
                "--changes",
                "10,25",
                "--out",
                "d",
            ],
            dir.path(),
        );
        assert!(o.status.success());
        fs::read(dir.path().join("d/probs/curves.csv")).unwrap()
    };
    assert_ne!(a, d);
}

#[test]
fn bad_values_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = oaspmdp(&["--epsilon", "1.5"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(
        text(&out.stderr).contains("epsilon"),
        "{}",
        text(&out.stderr)
    );

    for args in [
        &["--scenario", "maze"][..],
        &["--trials", "0"],
        &["--grid", "ten"],
        &["--no-such-flag"],
        &["--wall-ratios", "0.1,0.2"],
    ] {
        let out = oaspmdp(args, dir.path());
        assert_eq!(out.status.code(), Some(1), "{args:?}");
    }
    assert!(!dir.path().join("out").exists());
}

#[test]
fn help_exits_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = oaspmdp(&["--help"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(text(&out.stdout).contains("--wall-ratios"));
}

#[test]
fn unwritable_output_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("blocker"), "").unwrap();
    let out = oaspmdp(
        &["--episodes", "2", "--trials", "1", "--out", "blocker"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2), "{}", text(&out.stderr));
}

#[test]
fn config_file_and_environment() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("run.conf"),
        "scenario = probs\nepisodes = 3\ntrials = 1\nout = from_file\n",
    )
    .unwrap();

    let out = oaspmdp(&["--config", "run.conf", "--scenario", "walls"], dir.path());
    assert!(out.status.success(), "{}", text(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("from_file/walls/curves.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 3);

    let out = Command::new(env!("CARGO_BIN_EXE_oaspmdp"))
        .args(["--episodes", "2", "--trials", "1"])
        .current_dir(dir.path())
        .env("OASPMDP_OUT", "from_env")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", text(&out.stderr));
    assert!(dir.path().join("from_env/walls/curves.csv").is_file());
}
