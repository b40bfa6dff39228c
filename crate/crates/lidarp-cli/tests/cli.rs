use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn workdir(test: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli").join(test);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn lidarp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lidarp")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn gen(dir: &PathBuf, seed: u64, requests: usize) -> String {
    let path = dir.join(format!("inst{seed}.txt"));
    let p = path.to_str().unwrap();
    let out = lidarp(&["gen", "--requests", &requests.to_string(), "--horizon", "90", "--seed", &seed.to_string(), "--out", p]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    p.to_owned()
}

#[test]
fn gen_is_seeded() {
    let dir = workdir("gen");
    let a = fs::read_to_string(gen(&dir, 5, 4)).unwrap();
    let b = stdout(&lidarp(&["gen", "--requests", "4", "--horizon", "90", "--seed", "5"]));
    assert_eq!(a, b);
    assert!(a.starts_with("LIDARP"));
}

#[test]
fn solve_then_validate_round_trip() {
    let dir = workdir("solve");
    let inst = gen(&dir, 1, 4);
    let plan = dir.join("plan.txt");
    let vals = dir.join("values.txt");
    let out = lidarp(&[
        "solve", "--instance", &inst, "--exact", "--out", plan.to_str().unwrap(), "--write-solution", vals.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let out = lidarp(&["validate", "--instance", &inst, "--plan", plan.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "");

    let first = stdout(&lidarp(&["metrics", "--instance", &inst, "--plan", plan.to_str().unwrap()]));
    assert!(first.contains("direction_violation_count=0"));

    let out = lidarp(&["solve", "--instance", &inst, "--solver", "external", "--solution", vals.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), fs::read_to_string(&plan).unwrap());
}

#[test]
fn every_formulation_reaches_the_same_objective() {
    let dir = workdir("forms");
    let inst = gen(&dir, 2, 2);
    let objective = |f: &str| {
        let out = lidarp(&["solve", "--instance", &inst, "--formulation", f, "--exact"]);
        assert_eq!(out.status.code(), Some(0), "{f}");
        let err = String::from_utf8(out.stderr).unwrap();
        err.split_whitespace().find_map(|t| t.strip_prefix("objective=")).unwrap().to_owned()
    };
    let event = objective("event");
    assert_eq!(objective("location"), event);
    assert_eq!(objective("subline"), event);
}

#[test]
fn broken_plan_fails_validation() {
    let dir = workdir("broken");
    let inst = gen(&dir, 3, 3);
    let plan = dir.join("plan.txt");
    // one request accepted but never visited
    fs::write(&plan, "ACCEPTED 1\nREJECTED 2,3\n").unwrap();
    let out = lidarp(&["validate", "--instance", &inst, "--plan", plan.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!stdout(&out).is_empty());
}

#[test]
fn darp_with_location_model_is_an_error() {
    let dir = workdir("darp");
    let inst = gen(&dir, 0, 2);
    let out = lidarp(&["solve", "--instance", &inst, "--mode", "darp", "--formulation", "location"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("event"));
}

#[test]
fn export_writes_lp_sections() {
    let dir = workdir("export");
    let inst = gen(&dir, 4, 3);
    let text = stdout(&lidarp(&["export", "--instance", &inst, "--formulation", "location"]));
    for section in ["Maximize", "Subject To", "Binaries", "End"] {
        assert!(text.contains(section), "{section}");
    }
}

#[test]
fn bench_names_follow_the_suite_convention() {
    let out = lidarp(&["bench", "--kappa", "1", "--requests", "2,3", "--formulation", "event"]);
    assert!(out.status.success());
    let names: Vec<String> = stdout(&out).lines().skip(1).map(|l| l.split(',').next().unwrap().to_owned()).collect();
    assert_eq!(names, ["w1-2", "w1-3"]);
}

#[test]
fn reports_without_timing_are_byte_identical() {
    let run = |workers: &str| {
        let args = ["bench", "--kappa", "1", "--requests", "2,3", "--count", "2", "--solve", "--no-timing", "--horizon", "90",
            "--formulation", "event", "--formulation", "location", "--workers", workers,
        ];
        stdout(&lidarp(&args))
    };
    let first = run("1");
    assert_eq!(first.lines().count(), 1 + 2 * 2 * 2);
    assert_eq!(first, run("1"));
    assert_eq!(first, run("3"));
}

#[test]
fn sweep_lists_one_row_per_weight_pair() {
    let dir = workdir("sweep");
    let inst = gen(&dir, 6, 3);
    let text = stdout(&lidarp(&["sweep", "--instance", &inst, "--no-timing", "--weights", "1:0,0:1"]));
    let weights: Vec<&str> = text.lines().skip(1).map(|l| l.splitn(6, ',').nth(3).unwrap()).collect();
    assert_eq!(weights, ["1", "0"]);
}

#[test]
fn compare_prints_rows_then_deltas() {
    let dir = workdir("compare");
    let inst = gen(&dir, 7, 3);
    let text = stdout(&lidarp(&["compare", "--instance", &inst, "--no-timing"]));
    let blocks: Vec<&str> = text.split("\n\n").collect();
    assert_eq!(blocks.len(), 2);
    assert_eq!(blocks[0].lines().count(), 3);
    assert!(blocks[1].starts_with("objective_delta,"));
}
