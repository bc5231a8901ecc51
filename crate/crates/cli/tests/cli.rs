use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use physioedge::recon::OrthoDct;
use physioedge::signal::write_signal;
use physioedge::{Channel, Signal};
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_physioedge"));
    c.env_remove("PHYSIOEDGE_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn tone_wav(dir: &TempDir, name: &str, n: usize) -> PathBuf {
    let samples: Vec<f64> = (0..n)
        .map(|i| 0.4 * (2.0 * std::f64::consts::PI * 220.0 * i as f64 / 8000.0).sin())
        .collect();
    let path = dir.path().join(name);
    write_signal(&path, &Signal::new(samples, 8000, Channel::Respiratory).unwrap(), 16).unwrap();
    path
}

fn sparse_wav(dir: &TempDir, name: &str) -> PathBuf {
    let n = 1024;
    let mut c = vec![0.0; n];
    for (k, a) in [(5, 0.9), (40, -0.6), (97, 0.5), (300, 0.4), (511, -0.3), (700, 0.25)] {
        c[k] = a;
    }
    let x = OrthoDct::new(n).inverse(&c);
    let path = dir.path().join(name);
    write_signal(&path, &Signal::new(x, 8000, Channel::Generic).unwrap(), 32).unwrap();
    path
}

fn value_after<'a>(text: &'a str, key: &str) -> &'a str {
    let start = text.find(key).unwrap_or_else(|| panic!("{key} missing in {text}")) + key.len();
    text[start..].split_whitespace().next().unwrap()
}

#[test]
fn compress_reports_achieved_ratio() {
    let dir = TempDir::new().unwrap();
    let wav = tone_wav(&dir, "in.wav", 80_000);
    let out = dir.path().join("out.pecs");
    let o = run(&["compress", p(&wav), p(&out), "--cr", "10", "--seed", "42"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let cr: f64 = value_after(&text, "achieved_cr=").parse().unwrap();
    assert!((cr - 10.0).abs() < 0.5, "{cr}");
    assert!(text.contains("effective_rate="));
    assert!(fs::read(&out).unwrap().starts_with(b"PECS"));
}

#[test]
fn compress_missing_input() {
    let dir = TempDir::new().unwrap();
    let o = run(&["compress", "does-not-exist.wav", p(&dir.path().join("o.pecs"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("input not found"));
}

#[test]
fn compress_zero_seed() {
    let dir = TempDir::new().unwrap();
    let wav = tone_wav(&dir, "in.wav", 1000);
    let out = dir.path().join("o.pecs");
    let o = run(&["compress", p(&wav), p(&out), "--seed", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("seed must be nonzero"));
    assert!(!out.exists());
}

#[test]
fn seed_env_fallback_and_flag_precedence() {
    let dir = TempDir::new().unwrap();
    let wav = tone_wav(&dir, "in.wav", 5000);
    let (a, b, c) = (dir.path().join("a.pecs"), dir.path().join("b.pecs"), dir.path().join("c.pecs"));
    assert!(run(&["compress", p(&wav), p(&a), "--seed", "77"]).status.success());
    let o = bin().env("PHYSIOEDGE_SEED", "77").args(["compress", p(&wav), p(&b)]).output().unwrap();
    assert!(o.status.success());
    let o = bin()
        .env("PHYSIOEDGE_SEED", "5")
        .args(["compress", p(&wav), p(&c), "--seed", "77"])
        .output()
        .unwrap();
    assert!(o.status.success());
    let bytes = fs::read(&a).unwrap();
    assert_eq!(bytes, fs::read(&b).unwrap());
    assert_eq!(bytes, fs::read(&c).unwrap());
    assert_eq!(&bytes[8..12], &77u32.to_le_bytes());
}

#[test]
fn compress_is_byte_reproducible_and_streaming_matches() {
    let dir = TempDir::new().unwrap();
    let wav = tone_wav(&dir, "in.wav", 20_000);
    let (a, b, c) = (dir.path().join("a.pecs"), dir.path().join("b.pecs"), dir.path().join("c.pecs"));
    for out in [&a, &b] {
        assert!(run(&["compress", p(&wav), p(out), "--cr", "6"]).status.success());
    }
    assert!(run(&["compress", p(&wav), p(&c), "--cr", "6", "--chunk-len", "333"]).status.success());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn exact_sparse_round_trip_through_files() {
    let dir = TempDir::new().unwrap();
    let wav = sparse_wav(&dir, "ref.wav");
    let pecs = dir.path().join("r.pecs");
    let est = dir.path().join("est.wav");
    let csv = dir.path().join("metrics.csv");
    assert!(run(&["compress", p(&wav), p(&pecs), "--cr", "4", "--seed", "9"]).status.success());
    let o = run(&[
        "reconstruct",
        p(&pecs),
        p(&est),
        "--k",
        "8",
        "--frame-len",
        "0",
        "--bits",
        "32",
        "--metrics-against",
        p(&wav),
        "--metrics-out",
        p(&csv),
        "--signal-id",
        "sparse",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let written = fs::read_to_string(&csv).unwrap();
    let mut lines = written.lines();
    assert_eq!(lines.next(), Some("signal_id,cr,rrmse,cc"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "sparse");
    let rrmse: f64 = row[2].parse().unwrap();
    let cc: f64 = row[3].parse().unwrap();
    assert!(rrmse < 1e-6, "rrmse {rrmse}");
    assert!(cc > 0.999_999);
    assert!(stdout(&o).contains("signal_id,cr,rrmse,cc"));
    assert!(est.exists());
}

#[test]
fn metrics_length_mismatch_is_named() {
    let dir = TempDir::new().unwrap();
    let wav = tone_wav(&dir, "a.wav", 4000);
    let other = tone_wav(&dir, "b.wav", 3000);
    let pecs = dir.path().join("a.pecs");
    assert!(run(&["compress", p(&wav), p(&pecs), "--cr", "4"]).status.success());
    let o = run(&[
        "reconstruct",
        p(&pecs),
        p(&dir.path().join("e.wav")),
        "--k",
        "16",
        "--metrics-against",
        p(&other),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("length mismatch"), "{}", stderr(&o));
}

#[test]
fn external_algorithm_hands_off_embeddings() {
    let dir = TempDir::new().unwrap();
    let wav = tone_wav(&dir, "a.wav", 8000);
    let pecs = dir.path().join("a.pecs");
    let csv = dir.path().join("emb.csv");
    assert!(run(&["compress", p(&wav), p(&pecs), "--cr", "4"]).status.success());
    let o = run(&[
        "reconstruct",
        p(&pecs),
        p(&csv),
        "--algo",
        "external",
        "--embeddings",
        "3",
        "--grid-len",
        "500",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("handoff"));
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("emb0,emb1,emb2"));
    assert_eq!(lines.count(), 500);
}

#[test]
fn corrupted_record_is_a_data_error() {
    let dir = TempDir::new().unwrap();
    let wav = tone_wav(&dir, "a.wav", 4000);
    let pecs = dir.path().join("a.pecs");
    assert!(run(&["compress", p(&wav), p(&pecs)]).status.success());
    let mut bytes = fs::read(&pecs).unwrap();
    bytes[30] ^= 0xff;
    fs::write(&pecs, bytes).unwrap();
    let o = run(&["reconstruct", p(&pecs), p(&dir.path().join("e.wav"))]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("checksum"));
}

#[test]
fn ill_posed_sparsity_is_usage_error() {
    let dir = TempDir::new().unwrap();
    let wav = tone_wav(&dir, "a.wav", 200);
    let pecs = dir.path().join("a.pecs");
    assert!(run(&["compress", p(&wav), p(&pecs), "--cr", "10"]).status.success());
    let o = run(&["reconstruct", p(&pecs), p(&dir.path().join("e.wav")), "--k", "64"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("ill-posed"));
}

#[test]
fn evaluate_scores_two_files() {
    let dir = TempDir::new().unwrap();
    let wav = tone_wav(&dir, "a.wav", 4000);
    let o = run(&["evaluate", p(&wav), p(&wav), "--cr", "4", "--signal-id", "same"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("same,4.000000,0.000000000,1.000000000"));
}

fn read_summary(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn syncsim_calibrated_run() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("trace.csv");
    let o = run(&["syncsim", p(&csv), "--jitter", "gaussian:2.65,2.06", "--minutes", "10", "--seed", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = read_summary(&dir.path().join("trace.json"));
    let max = s["summary"]["max_response_diff_s"].as_f64().unwrap();
    assert!((5e-6..=20e-6).contains(&max), "max {max}");
    assert_eq!(s["summary"]["single_sample_pass"], serde_json::Value::Bool(true));
    let svg = fs::read_to_string(dir.path().join("trace.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    let header = fs::read_to_string(&csv).unwrap();
    assert!(header.starts_with("event_index,true_time,node,corrected_ts,pairwise_err\n"));
}

#[test]
fn syncsim_zero_everything() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("t.csv");
    let o = run(&["syncsim", p(&csv), "--ppm", "0", "--jitter", "none", "--minutes", "2"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("max_pairwise_err_us=0.000"));
    let s = read_summary(&dir.path().join("t.json"));
    assert_eq!(s["summary"]["max_pairwise_err_s"].as_f64(), Some(0.0));
    assert!(s["summary"]["max_fs_hz"].is_null());
}

#[test]
fn syncsim_drift_bound() {
    let dir = TempDir::new().unwrap();
    let o = run(&[
        "syncsim",
        p(&dir.path().join("t.csv")),
        "--ppm",
        "10,-10",
        "--jitter",
        "none",
        "--minutes",
        "1",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: f64 = value_after(&stdout(&o), "max_pairwise_err_us=").parse().unwrap();
    assert!((v - 100.0).abs() <= 1.0, "{v}");
}

#[test]
fn syncsim_duration_shorter_than_interval() {
    let dir = TempDir::new().unwrap();
    let o = run(&["syncsim", p(&dir.path().join("t.csv")), "--minutes", "0.05"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("shorter than the sync interval"));
}

#[test]
fn syncsim_outputs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let mut outputs = Vec::new();
    for name in ["a", "b"] {
        let csv = dir.path().join(format!("{name}.csv"));
        let o = run(&["syncsim", p(&csv), "--nodes", "3", "--ppm", "3,-2,7", "--minutes", "3", "--seed", "11"]);
        assert!(o.status.success(), "{}", stderr(&o));
        outputs.push(
            ["csv", "json", "svg"].map(|ext| fs::read(dir.path().join(format!("{name}.{ext}"))).unwrap()),
        );
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn budget_table_rows() {
    let o = run(&["budget", "--transport", "bluetooth", "--cr", "30"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("4.9 mW (measured)"));
    assert!(stdout(&o).contains("33.3 kbps"));
    let o = run(&["budget", "--transport", "wifi", "--cr", "1"]);
    assert!(stdout(&o).contains("25.0 mW"));
    let o = run(&["budget", "--transport", "bluetooth", "--cr", "1"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("unavailable"));
    let o = run(&["budget", "--cr", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_defaults_and_overrides() {
    let dir = TempDir::new().unwrap();
    let wav = tone_wav(&dir, "in.wav", 60_000);
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# compression defaults\ncr = 30\nseed = 5\npolicy = literal_eq1\n").unwrap();
    let out = dir.path().join("o.pecs");

    let o = run(&["--config", p(&cfg), "compress", p(&wav), p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let bytes = fs::read(&out).unwrap();
    assert_eq!(bytes[5], 0);
    assert_eq!(&bytes[6..8], &30u16.to_le_bytes());
    assert_eq!(&bytes[8..12], &5u32.to_le_bytes());

    let o = run(&["--config", p(&cfg), "compress", p(&wav), p(&out), "--cr", "4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let bytes = fs::read(&out).unwrap();
    assert_eq!(&bytes[6..8], &4u16.to_le_bytes());
    assert_eq!(&bytes[8..12], &5u32.to_le_bytes());
}

#[test]
fn unknown_config_key_is_usage_error() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "colour = blue\n").unwrap();
    let o = run(&["--config", p(&cfg), "budget"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&["compress"]).status.code(), Some(2));
    assert_eq!(run(&["budget", "--transport", "zigbee"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}
