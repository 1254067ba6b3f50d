use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn negosi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_negosi")).args(args).output().unwrap()
}

fn ok(out: Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn pretrain_source_train_report_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(negosi(&[
        "pretrain",
        "--map",
        "isr",
        "--episodes",
        "500",
        "--out",
        s(&d.join("pre")),
    ]));
    ok(negosi(&[
        "source-task",
        "--agents",
        "2",
        "--steps",
        "50000",
        "--out",
        s(&d.join("s2.txt")),
    ]));
    let train = |out: &str, jobs: &str| {
        ok(negosi(&[
            "train",
            "--map",
            "isr",
            "--algo",
            "negosi",
            "--episodes",
            "60",
            "--runs",
            "3",
            "--pretrain",
            s(&d.join("pre")),
            "--source",
            s(&d.join("s2.txt")),
            "--jobs",
            jobs,
            "--out",
            s(&d.join(out)),
        ]))
    };
    let stdout = train("a", "1");
    assert!(stdout.contains("final SEE"), "{stdout}");
    train("b", "2");
    for f in [
        "episodes.csv",
        "summary.csv",
        "final.csv",
        "rollout.csv",
        "runtime.csv",
        "charts/see.svg",
    ] {
        assert!(d.join("a").join(f).exists(), "{f}");
    }
    let a = fs::read(d.join("a/episodes.csv")).unwrap();
    assert_eq!(a, fs::read(d.join("b/episodes.csv")).unwrap());

    let before = fs::read(d.join("a/summary.csv")).unwrap();
    fs::remove_file(d.join("a/summary.csv")).unwrap();
    ok(negosi(&["report", "--in", s(&d.join("a"))]));
    assert_eq!(fs::read(d.join("a/summary.csv")).unwrap(), before);
}

#[test]
fn config_file_and_flag_override() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(negosi(&[
        "pretrain",
        "--map",
        "open2",
        "--episodes",
        "200",
        "--out",
        s(&d.join("pre")),
    ]));
    let cfg = d.join("run.cfg");
    fs::write(
        &cfg,
        format!(
            "# baseline run\nmap = open2\nalgo = ilvft\nepisodes = 500\nruns = 1\npretrain = {}\n",
            s(&d.join("pre"))
        ),
    )
    .unwrap();
    ok(negosi(&[
        "train",
        "--config",
        s(&cfg),
        "--episodes",
        "5",
        "--out",
        s(&d.join("o")),
    ]));
    let csv = fs::read_to_string(d.join("o/episodes.csv")).unwrap();
    assert!(csv.starts_with("# algo=ilvft map=OPEN2 episodes=5 "), "{csv}");
}

#[test]
fn bad_inputs_fail_with_messages() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let out = negosi(&[
        "train",
        "--map",
        "isr",
        "--algo",
        "negosi",
        "--pretrain",
        s(&d.join("none")),
        "--out",
        s(&d.join("o")),
    ]);
    assert!(!out.status.success());
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
    assert!(!d.join("o").exists());

    let out = negosi(&["pretrain", "--map", "no-such-map", "--out", s(&d.join("p"))]);
    assert!(!out.status.success());

    let out = negosi(&["source-task", "--agents", "4", "--out", s(&d.join("s.txt"))]);
    assert!(!out.status.success());

    let out = negosi(&["train", "--map", "isr", "--algo", "nash"]);
    assert!(!out.status.success());
}
