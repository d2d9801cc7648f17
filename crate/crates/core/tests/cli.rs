use assert_cmd::Command;
use serde_json::Value;
use tempfile::TempDir;

fn chaosrand() -> Command {
    let mut cmd = Command::cargo_bin("chaosrand").unwrap();
    cmd.env_remove("CHAOSRAND_CONFIG");
    cmd
}

fn stdout_of(cmd: &mut Command) -> Vec<u8> {
    cmd.assert().success().get_output().stdout.clone()
}

#[test]
fn gen_multi_lfsr_hex_with_seed_file() {
    let dir = TempDir::new().unwrap();
    let seed = dir.path().join("s.json");
    std::fs::write(
        &seed,
        r#"{"banks":[{"width":31,"seed":1},{"width":29,"seed":2},{"width":23,"seed":3}]}"#,
    )
    .unwrap();
    let run = || {
        stdout_of(
            chaosrand()
                .args([
                    "gen",
                    "--generator",
                    "multi-lfsr",
                    "--count",
                    "16",
                    "--format",
                    "hex",
                    "--seed-file",
                ])
                .arg(&seed),
        )
    };
    let out = run();
    let text = String::from_utf8(out.clone()).unwrap();
    assert_eq!(text.lines().count(), 16);
    assert!(text
        .lines()
        .all(|l| l.len() == 8 && u32::from_str_radix(l, 16).is_ok()));
    assert_eq!(out, run());

    let unseeded =
        stdout_of(chaosrand().args(["gen", "--generator", "multi-lfsr", "--count", "16"]));
    assert_ne!(out, unseeded);
}

#[test]
fn gen_rejects_zero_count_and_bad_seed() {
    chaosrand().args(["gen", "--count", "0"]).assert().code(2);
    chaosrand()
        .args(["gen", "--generator", "mersenne"])
        .assert()
        .code(2);
    let dir = TempDir::new().unwrap();
    let seed = dir.path().join("s.json");
    std::fs::write(&seed, r#"{"x0": 1.5}"#).unwrap();
    chaosrand()
        .args(["gen", "--seed-file"])
        .arg(&seed)
        .assert()
        .code(2);
    chaosrand()
        .args(["gen", "--seed-file", "/nonexistent/seed.json"])
        .assert()
        .code(3);
    chaosrand()
        .args(["gen", "--count", "4", "-o", "/nonexistent/dir/out.bin"])
        .assert()
        .code(3);
}

#[test]
fn recorded_config_reproduces_stream() {
    let dir = TempDir::new().unwrap();
    let record = dir.path().join("run.json");
    let original = stdout_of(
        chaosrand()
            .args([
                "gen",
                "--generator",
                "pendulum",
                "--count",
                "300",
                "--format",
                "raw",
                "--record",
            ])
            .arg(&record),
    );
    assert_eq!(original.len(), 600);
    let replay = stdout_of(chaosrand().arg("--config").arg(&record).arg("gen"));
    assert_eq!(original, replay);

    let via_env = stdout_of(chaosrand().env("CHAOSRAND_CONFIG", &record).arg("gen"));
    assert_eq!(original, via_env);

    let overridden = stdout_of(
        chaosrand()
            .arg("--config")
            .arg(&record)
            .args(["gen", "--count", "10"]),
    );
    assert_eq!(overridden, original[..20]);
}

#[test]
fn gen_formats() {
    let csv = String::from_utf8(stdout_of(
        chaosrand().args(["gen", "--count", "3", "--format", "csv"]),
    ))
    .unwrap();
    assert_eq!(csv.lines().next(), Some("index,value"));
    assert_eq!(csv.lines().count(), 4);
    let json: Vec<u64> = serde_json::from_slice(&stdout_of(
        chaosrand().args(["gen", "--count", "5", "--format", "json"]),
    ))
    .unwrap();
    assert_eq!(json.len(), 5);
    assert!(json.iter().all(|&v| v < 256));
}

#[test]
fn test_command_exit_codes() {
    let dir = TempDir::new().unwrap();
    let zeros = dir.path().join("zeros.bin");
    std::fs::write(&zeros, vec![0u8; 1 << 20]).unwrap();
    let out = chaosrand()
        .arg("test")
        .arg(&zeros)
        .assert()
        .code(1)
        .get_output()
        .stdout
        .clone();
    let reports: Vec<Value> = serde_json::from_slice(&out).unwrap();
    assert_eq!(reports[0]["test"], "monobit");
    assert_eq!(reports[0]["verdict"], "fail");
    assert_eq!(reports[1]["verdict"], "not-applicable");

    chaosrand()
        .args(["test", "--tests", "monobit,spectral"])
        .arg(&zeros)
        .assert()
        .code(2);
    chaosrand()
        .args(["test", "/nonexistent/stream.bin"])
        .assert()
        .code(3);
}

#[test]
fn default_logistic_stream_passes() {
    let stream = stdout_of(chaosrand().args([
        "gen",
        "--generator",
        "logistic",
        "--count",
        "125000",
        "--format",
        "raw",
    ]));
    assert_eq!(stream.len(), 125_000);
    let out = chaosrand()
        .args(["test", "-"])
        .write_stdin(stream)
        .assert()
        .code(0)
        .get_output()
        .stdout
        .clone();
    let reports: Vec<Value> = serde_json::from_slice(&out).unwrap();
    assert_eq!(reports.len(), 4);
    assert!(reports
        .iter()
        .all(|r| r["verdict"] == "pass" && r["n"].as_u64().unwrap() > 0));
}

#[test]
fn bench_emits_json_array() {
    let out = stdout_of(chaosrand().args([
        "bench",
        "--count",
        "10000",
        "--generator",
        "multi-lfsr,logistic",
    ]));
    let reports: Vec<Value> = serde_json::from_slice(&out).unwrap();
    assert_eq!(reports.len(), 2);
    assert_eq!(reports[0]["generator"], "multi-lfsr");
    assert_eq!(reports[0]["modeled_cycles"], 20_000);
    assert_eq!(reports[1]["modeled_cycles"], 100_000);
    chaosrand()
        .args(["bench", "--count", "10", "--generator", "logistic"])
        .assert()
        .code(2);
    chaosrand()
        .args(["bench", "--count", "10000", "--generator", "lfsr"])
        .assert()
        .code(2);
}

#[test]
fn compare_markdown_and_json_agree() {
    let md =
        String::from_utf8(stdout_of(chaosrand().args(["compare", "--count", "10000"]))).unwrap();
    assert!(
        md.contains("| Power | n/a (hardware-only) | n/a (hardware-only) | n/a (hardware-only) |")
    );
    assert!(md.contains("| Latency | Medium | High | Low |"));

    let json: Value = serde_json::from_slice(&stdout_of(
        chaosrand().args(["compare", "--count", "10000", "--format", "json"]),
    ))
    .unwrap();
    let randomness_row = md
        .lines()
        .find(|l| l.starts_with("| Randomness |"))
        .unwrap();
    for column in json["columns"].as_array().unwrap() {
        let rating = column["randomness"].as_str().unwrap();
        let passed = column["tests"]
            .as_array()
            .unwrap()
            .iter()
            .filter(|t| t["verdict"] == "pass")
            .count();
        assert!(
            randomness_row.contains(&format!("{rating} ({passed}/4 pass)")),
            "{randomness_row}"
        );
    }
    chaosrand()
        .args(["compare", "--bits", "1000"])
        .assert()
        .code(2);
}

#[test]
fn entropy_inspect_sources() {
    let out: Value = serde_json::from_slice(&stdout_of(
        chaosrand().args(["entropy", "inspect", "--count", "4"]),
    ))
    .unwrap();
    assert_eq!(out["source"], "simulated-sensor");
    assert_eq!(out["words"].as_array().unwrap().len(), 4);
    assert_eq!(out["health"]["status"], "pass");

    let dir = TempDir::new().unwrap();
    let replay = dir.path().join("words.bin");
    std::fs::write(&replay, [1u8, 0, 0, 0, 2, 0, 0, 0]).unwrap();
    let out = chaosrand()
        .args([
            "entropy", "inspect", "--source", "replay", "--count", "3", "--path",
        ])
        .arg(&replay)
        .assert()
        .code(1)
        .get_output()
        .stdout
        .clone();
    let out: Value = serde_json::from_slice(&out).unwrap();
    assert_eq!(out["words"], serde_json::json!([1, 2]));
    assert!(out["error"].as_str().unwrap().contains("exhausted"));
    chaosrand()
        .args(["entropy", "inspect", "--source", "replay"])
        .assert()
        .code(2);
}
