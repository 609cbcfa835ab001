use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn fmbench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fmbench"))
        .args(args)
        .env_remove("FM_ENDPOINT_URL")
        .env_remove("FM_MODEL_ID")
        .output()
        .unwrap()
}

fn text(out: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn plan_astar_writes_refined_path() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("traj.csv");
    let s1 = root().join("scenarios/s1.json");
    let out = fmbench(&["plan", "--scenario", path(&s1), "--planner", "astar", "--out", path(&csv)]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out));
    assert!(text(&out).contains("refined PL:"));
    let body = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(body.lines().next(), Some("x,y,z"));
    assert_eq!(body.lines().nth(1), Some("0.0000,6.0000,0.5000"));
    assert_eq!(body.lines().last(), Some("0.0000,-7.0000,0.5000"));
}

#[test]
fn trapped_greedy_is_a_planning_failure() {
    let trap = root().join("scenarios/u_trap.json");
    let out = fmbench(&["plan", "--scenario", path(&trap), "--planner", "greedy"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out).contains("goal not reached within K_max"), "{}", text(&out));
}

#[test]
fn input_problems_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{ \"name\": ").unwrap();
    for scenario in [&missing, &broken] {
        let out = fmbench(&["plan", "--scenario", path(scenario), "--planner", "astar"]);
        assert_eq!(out.status.code(), Some(3), "{}", text(&out));
    }
    let s1 = root().join("scenarios/s1.json");
    assert_eq!(fmbench(&["plan", "--scenario", path(&s1), "--planner", "dijkstra"]).status.code(), Some(3));
    assert_eq!(fmbench(&["plan", "--scenario", path(&s1), "--planner", "llm"]).status.code(), Some(3));
    assert_eq!(fmbench(&["plan", "--bogus"]).status.code(), Some(3));
}

#[test]
fn llm_plan_from_fixture() {
    let s1 = root().join("scenarios/s1.json");
    let fixture = root().join("fixtures/mock/llama.json");
    let out = fmbench(&["plan", "--scenario", path(&s1), "--planner", "llm", "--fixture", path(&fixture)]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out));
    assert!(text(&out).contains("model latency: 2.60 s"));
}

#[test]
fn ingest_builds_a_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let cam = dir.path().join("camera.json");
    std::fs::write(&cam, r#"{"fx": 600, "fy": 600, "cx": 320, "cy": 240}"#).unwrap();
    let det = dir.path().join("det.jsonl");
    let mut lines = String::new();
    for (u, depth) in [(320.0, 2.0), (440.0, 3.0), (200.0, 4.0), (320.0, 5.0)] {
        lines.push_str(&format!(
            "{{\"class\":\"box\",\"bbox\":[{},230,{},250],\"depth_m\":{depth},\"conf\":0.9}}\n",
            u - 10.0,
            u + 10.0
        ));
    }
    lines.push_str("{\"class\":\"box\",\"bbox\":[0,0,10,10],\"depth_m\":2.0,\"conf\":0.1}\n");
    std::fs::write(&det, lines).unwrap();
    let scenario = dir.path().join("seen.json");
    let template = root().join("scenarios/s1.json");
    let out = fmbench(&[
        "ingest",
        "--detections",
        path(&det),
        "--camera",
        path(&cam),
        "--scenario-template",
        path(&template),
        "--out",
        path(&scenario),
        "--fixed-altitude",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&scenario).unwrap()).unwrap();
    assert_eq!(json["name"], "seen");
    assert_eq!(json["obstacles"].as_array().unwrap().len(), 4);

    std::fs::write(&cam, r#"{"fx": 0, "fy": 600"#).unwrap();
    let out = fmbench(&[
        "ingest",
        "--detections",
        path(&det),
        "--camera",
        path(&cam),
        "--scenario-template",
        path(&template),
        "--out",
        path(&scenario),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn ingest_reports_malformed_line() {
    let dir = tempfile::tempdir().unwrap();
    let cam = dir.path().join("camera.json");
    std::fs::write(&cam, r#"{"fx": 600, "fy": 600, "cx": 320, "cy": 240}"#).unwrap();
    let det = dir.path().join("det.jsonl");
    std::fs::write(&det, "{\"class\":\"box\",\"bbox\":[0,0,10,10],\"depth_m\":2.0,\"conf\":0.9}\nnot json\n").unwrap();
    let template = root().join("scenarios/s1.json");
    let out = fmbench(&[
        "ingest",
        "--detections",
        path(&det),
        "--camera",
        path(&cam),
        "--scenario-template",
        path(&template),
        "--out",
        path(&dir.path().join("x.json")),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(text(&out).contains('2'), "{}", text(&out));
}

#[test]
fn dataset_writes_jsonl() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("data.jsonl");
    let out = fmbench(&["dataset", "--count", "3", "--seed", "7", "--out", path(&file)]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out));
    let body = std::fs::read_to_string(&file).unwrap();
    assert_eq!(body.lines().count(), 3);
    for line in body.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v.is_object());
    }
    assert_eq!(fmbench(&["dataset", "--count", "0", "--out", path(&file)]).status.code(), Some(3));
}

#[test]
fn bench_runs_mock_suite_and_reports_bad_rate_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let suite = root().join("suites/mock_llm.json");
    let out = fmbench(&["bench", "--suite", path(&suite), "--trials", "2", "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("Llama (mock)"), "{stdout}");
    assert!(stdout.contains("DeepSeek-R1 (mock)"), "{stdout}");
    let run = std::fs::read_dir(dir.path().join("mock_llm")).unwrap().next().unwrap().unwrap().path();
    assert!(run.join("cells.json").exists());
    assert!(run.join("table.md").exists());

    let rates = root().join("suites/rate_sweep.json");
    let out = fmbench(&["bench", "--suite", path(&rates), "--rate", "50,60", "--report", "csv", "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out));
    let run = std::fs::read_dir(dir.path().join("rate_sweep")).unwrap().next().unwrap().unwrap().path();
    let cells = std::fs::read_to_string(run.join("cells.json")).unwrap();
    assert!(cells.contains("60"), "{cells}");
    assert!(run.join("table.csv").exists());
}
