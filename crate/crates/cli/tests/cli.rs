use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gmwm"))
}

fn repo() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn fixture(name: &str) -> PathBuf {
    repo().join("crates/core/tests/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn run_ok(args: &[&str]) -> Vec<u8> {
    let out = run(args);
    assert!(
        out.status.success(),
        "gmwm {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

fn run_stdin(args: &[&str], input: &[u8]) -> Output {
    let mut child = bin()
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input).unwrap();
    child.wait_with_output().unwrap()
}

fn check_schema(kind: &str, doc: &Value) {
    let path = repo().join(format!("docs/schemas/{kind}.v1.json"));
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let v = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = v.iter_errors(doc).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    assert!(errors.is_empty(), "{kind} document violates its schema: {errors:?}");
}

fn json_of(bytes: &[u8]) -> Value {
    serde_json::from_slice(bytes).expect("valid JSON")
}

fn simulated(dir: &Path, model: &str, len: usize, seed: u64) -> PathBuf {
    let p = dir.join(format!("sim_{seed}.csv"));
    let data = run_ok(&["simulate", "--model", model, "-T", &len.to_string(), "--seed", &seed.to_string()]);
    std::fs::write(&p, data).unwrap();
    p
}

#[test]
fn simulate_pipes_into_wvar() {
    let sim = run_ok(&["simulate", "--model", "WN(sigma2=1)", "-T", "1024", "--seed", "7"]);
    let out = run_stdin(&["wvar", "--levels", "8"], &sim);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 9);
    assert_eq!(lines[0], "scale,estimate,ci_lo,ci_hi,n");
    let first: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
    assert!((first - 0.5).abs() < 0.1);
}

#[test]
fn exit_codes_and_error_json() {
    let out = run(&["wvar", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["fit", "--model", "FOO()", "-i", fixture("six_channel.csv").to_str().unwrap(), "--json"]);
    assert_eq!(out.status.code(), Some(1));
    let err = json_of(&out.stderr);
    check_schema("error", &err);
    assert_eq!(err["error"]["class"], "usage");

    let out = run(&["wvar", "-i", "/definitely/missing.csv", "--json"]);
    assert_eq!(out.status.code(), Some(2));
    check_schema("error", &json_of(&out.stderr));

    let out = run_stdin(&["wvar"], b"1,2\n3\n");
    assert_eq!(out.status.code(), Some(2));
    let out = run_stdin(&["wvar", "--json", "--bogus"], b"");
    assert_eq!(out.status.code(), Some(1));
    check_schema("error", &json_of(&out.stderr));
    // a constant signal cannot be fitted
    let out = run_stdin(&["fit", "--model", "WN()"], "1\n".repeat(64).as_bytes());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn json_documents_follow_their_schemas() {
    let dir = tempfile::tempdir().unwrap();
    let sim = simulated(dir.path(), "AR1(phi=0.9,sigma2=0.1)+WN(sigma2=1)", 4096, 3);
    let s = sim.to_str().unwrap();
    check_schema("wv", &json_of(&run_ok(&["wvar", "-i", s, "--json", "--robust"])));
    check_schema("cluster", &json_of(&run_ok(&["avar", "-i", s, "--json"])));
    check_schema("cluster", &json_of(&run_ok(&["hvar", "-i", s, "--json", "--overlapping"])));
    check_schema("compare", &json_of(&run_ok(&["compare", "-i", s, "--json"])));
    check_schema("fit", &json_of(&run_ok(&["fit", "-i", s, "-m", "AR1()+WN()", "--bootstrap", "20", "--guesses", "100"])));
    check_schema(
        "ranking",
        &json_of(&run_ok(&["rank", "-i", s, "-m", "WN()", "-m", "AR1()+WN()", "--bootstrap", "20", "--guesses", "100", "--json"])),
    );
    check_schema(
        "auto",
        &json_of(&run_ok(&["auto", "-i", s, "-m", "AR1()+WN()", "--bootstrap", "20", "--guesses", "100", "--json"])),
    );
    check_schema("simulation", &json_of(&run_ok(&["simulate", "-m", "RW(gamma2=1)", "-T", "16", "--json"])));
    check_schema("dataset", &json_of(&run_ok(&["import", "-i", fixture("six_channel.csv").to_str().unwrap(), "--json"])));
}

#[test]
fn outputs_are_reproducible_and_thread_independent() {
    let dir = tempfile::tempdir().unwrap();
    let sim = simulated(dir.path(), "AR1(phi=0.95,sigma2=0.01)+WN(sigma2=1)", 8192, 11);
    let s = sim.to_str().unwrap();
    let args = ["fit", "-i", s, "-m", "AR1()+WN()", "--bootstrap", "30", "--guesses", "200", "--seed", "5"];
    let a = run_ok(&args);
    let b = run_ok(&[&args[..], &["--threads", "1"]].concat());
    let c = run_ok(&[&args[..], &["--threads", "3"]].concat());
    assert_eq!(a, b);
    assert_eq!(a, c);
    let rank = ["rank", "-i", s, "-m", "WN()", "-m", "AR1()+WN()", "--bootstrap", "20", "--guesses", "100"];
    assert_eq!(run_ok(&rank), run_ok(&[&rank[..], &["--threads", "2"]].concat()));
    let other = run_ok(&["fit", "-i", s, "-m", "AR1()+WN()", "--bootstrap", "30", "--guesses", "200", "--seed", "6"]);
    assert_ne!(a, other);
}

#[test]
fn plots_redraw_from_their_csv() {
    let dir = tempfile::tempdir().unwrap();
    let sim = simulated(dir.path(), "GM(beta=0.1,sigma2_gm=1)+WN(sigma2=0.5)", 4096, 2);
    let s = sim.to_str().unwrap();
    let cases: [(&[&str], &str); 4] = [
        (&["wvar", "-i", s], "wv"),
        (&["compare", "-i", s], "wv_compare"),
        (&["fit", "-i", s, "-m", "GM()+WN()", "--bootstrap", "20", "--guesses", "100"], "fit_overlay"),
        (&["fit", "-i", s, "-m", "GM()+WN()", "--bootstrap", "20", "--guesses", "100", "--decomposition"], "fit_decomposition"),
    ];
    for (i, (args, kind)) in cases.iter().enumerate() {
        let svg = dir.path().join(format!("p{i}.svg"));
        let twin = svg.with_extension("csv");
        let redrawn = dir.path().join(format!("r{i}.svg"));
        run_ok(&[args, &["--plot", svg.to_str().unwrap(), "--title", "T", "-o", dir.path().join("out").to_str().unwrap()][..]].concat());
        run_ok(&["plot", "--data", twin.to_str().unwrap(), "--kind", kind, "--title", "T", "-o", redrawn.to_str().unwrap()]);
        let a = std::fs::read(&svg).unwrap();
        assert_eq!(a, std::fs::read(&redrawn).unwrap(), "{kind} plot differs after redraw");
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with("<svg"));
        if kind.starts_with("fit") {
            assert!(text.contains("stroke-dasharray=\"7 4\""), "implied WV is dashed");
        }
        assert!(text.contains("<polygon"), "interval ribbon drawn");
    }
}

#[test]
fn config_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let sim = simulated(dir.path(), "WN(sigma2=1)", 2048, 1);
    let cfg = dir.path().join("gmwm.toml");
    std::fs::write(&cfg, "levels = 4\nrobust = true\neff = 0.8\n").unwrap();
    let s = sim.to_str().unwrap();
    let c = cfg.to_str().unwrap();
    let doc = json_of(&run_ok(&["wvar", "-i", s, "--config", c, "--json"]));
    assert_eq!(doc["data"]["wv"]["levels"].as_array().unwrap().len(), 4);
    assert_eq!(doc["data"]["wv"]["robust"], true);
    assert_eq!(doc["data"]["wv"]["efficiency"], 0.8);
    let doc = json_of(&run_ok(&["wvar", "-i", s, "--config", c, "--json", "--levels", "6", "--eff", "0.9"]));
    assert_eq!(doc["data"]["wv"]["levels"].as_array().unwrap().len(), 6);
    assert_eq!(doc["data"]["wv"]["efficiency"], 0.9);
    std::fs::write(&cfg, "colour = 3\n").unwrap();
    assert_eq!(run(&["wvar", "-i", s, "--config", c]).status.code(), Some(1));
}

#[test]
fn channels_by_label_or_index() {
    let f = fixture("six_channel.csv");
    let f = f.to_str().unwrap();
    let by_label = run_ok(&["wvar", "-i", f, "--channel", "accel:y"]);
    let by_index = run_ok(&["wvar", "-i", f, "--channel", "5"]);
    assert_eq!(by_label, by_index);
    assert_ne!(by_label, run_ok(&["wvar", "-i", f, "--channel", "gyro:Y"]));
    let golden = std::fs::read(fixture("six_channel_wv_gyro_y.csv")).unwrap();
    assert_eq!(run_ok(&["wvar", "-i", f, "--channel", "gyro:Y", "--levels", "6"]), golden);
    assert_eq!(run(&["wvar", "-i", f, "--channel", "gyro:W"]).status.code(), Some(1));
    assert_eq!(run(&["wvar", "-i", f, "--channel", "9"]).status.code(), Some(2));
}

#[test]
fn binary_logs_import() {
    let f = fixture("IMAR.imu");
    let out = String::from_utf8(run_ok(&["import", "-i", f.to_str().unwrap(), "--imu-type", "imar"])).unwrap();
    let header = out.lines().next().unwrap();
    assert_eq!(header, "time,gyro:X,gyro:Y,gyro:Z,accel:X,accel:Y,accel:Z");
    assert_eq!(out.lines().count(), 65);
    let doc = json_of(&run_ok(&["import", "-i", f.to_str().unwrap(), "--imu-type", "IMAR", "--json"]));
    assert!((doc["data"]["freq"].as_f64().unwrap() - 250.0).abs() < 1e-6);
    let doc = json_of(&run_ok(&["import", "-i", f.to_str().unwrap(), "--imu-type", "IMAR", "--json", "--freq", "100"]));
    assert_eq!(doc["data"]["freq"], 100.0);
    assert_eq!(run(&["import", "-i", f.to_str().unwrap(), "--imu-type", "KVH"]).status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let schemas = dir.path().join("schemas.json");
    std::fs::write(&schemas, r#"{"schemas": [{"name": "IMAR", "encoding": {"type": "f32", "endian": "little"}}]}"#).unwrap();
    // 64 records of 28 bytes do not fit the 56-byte IMAR file exactly: twice as many records
    let doc = json_of(&run_ok(&["import", "-i", f.to_str().unwrap(), "--imu-type", "IMAR", "--schemas", schemas.to_str().unwrap(), "--json", "--freq", "1"]));
    assert_eq!(doc["data"]["channels"][0]["samples"].as_array().unwrap().len(), 128);
}

#[test]
fn fit_example_reports_nine_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("gyro_y.csv");
    let data = run_ok(&[
        "simulate",
        "--freq",
        "250",
        "--model",
        "GM(beta=2,sigma2_gm=1e-4)+GM(beta=20,sigma2_gm=4e-4)+GM(beta=0.2,sigma2_gm=2e-5)+WN(sigma2=1e-3)+QN(q2=1e-5)+RW(gamma2=1e-9)",
        "-T",
        "32768",
        "--seed",
        "4",
    ]);
    std::fs::write(&p, data).unwrap();
    let doc = json_of(&run_ok(&[
        "fit",
        "--model",
        "3*GM()+WN()+QN()+RW()",
        "--input",
        p.to_str().unwrap(),
        "--freq",
        "250",
        "--guesses",
        "200",
        "--bootstrap",
        "30",
    ]));
    check_schema("fit", &doc);
    let fit = &doc["data"]["fit"];
    assert_eq!(fit["estimates"].as_array().unwrap().len(), 9);
    assert_eq!(fit["model"]["freq"], 250.0);
    assert!(fit["gof"].is_object());
    let summary = String::from_utf8(run_ok(&[
        "fit",
        "--model",
        "3*GM()+WN()+QN()+RW()",
        "--input",
        p.to_str().unwrap(),
        "--freq",
        "250",
        "--guesses",
        "200",
        "--bootstrap",
        "30",
        "--summary",
    ]))
    .unwrap();
    assert!(summary.contains("Goodness of fit"));
    assert!(summary.contains("RW.gamma2"));
}

#[test]
fn auto_example_ranks_every_channel() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid.svg");
    let out = String::from_utf8(run_ok(&[
        "auto",
        "--model",
        "4*AR1()+WN()+RW()",
        "--input",
        fixture("six_channel.csv").to_str().unwrap(),
        "--plot",
        grid.to_str().unwrap(),
    ]))
    .unwrap();
    let mut rdr = csv::Reader::from_reader(out.as_bytes());
    assert_eq!(rdr.headers().unwrap().get(0), Some("channel"));
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 6 * 19);
    for label in ["gyro:X", "gyro:Y", "gyro:Z", "accel:X", "accel:Y", "accel:Z"] {
        let first = rows.iter().find(|r| &r[0] == label).unwrap();
        assert_eq!(&first[1], "1");
    }
    let svg = std::fs::read_to_string(&grid).unwrap();
    assert_eq!(svg.matches("<g>").count(), 6);
    assert!(grid.with_extension("csv").exists());
}
