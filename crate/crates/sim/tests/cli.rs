use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn dopplerfi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dopplerfi")).args(args).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("exp.toml");
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

const SMALL: &str = "payload_bits = 16\nsnr_db = [inf]\n[hops]\nchannels = [3, 5]\n[legacy]\npackets = 20\n";

#[test]
fn every_subcommand_writes_its_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    let out_s = out.to_str().unwrap();
    let cases: [(&str, &[&str]); 4] = [
        ("run", &["trials.csv", "emitted_log.csv", "run.csv"]),
        ("sweep", &["sweep.csv", "plot_sweep.gp"]),
        ("legacy-impact", &["legacy_impact.csv"]),
        ("trace", &["demod_trace_bit0.csv", "csi_bit0.csv", "w2b_capture.cf32", "w2b_capture.cf32.hdr", "golden_h1511.txt"]),
    ];
    for (sub, files) in cases {
        let o = dopplerfi(&[sub, "--config", &cfg, "--seed", "5", "--trials", "2", "--out", out_s]);
        assert!(o.status.success(), "{sub}: {}", String::from_utf8_lossy(&o.stderr));
        for f in files {
            assert!(out.join(f).exists(), "{sub} did not write {f}");
        }
    }
    let trials = fs::read_to_string(out.join("trials.csv")).unwrap();
    assert_eq!(trials.lines().count(), 3);
}

#[test]
fn seed_flag_changes_and_repeats_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "payload_bits = 16\nsnr_db = [6.0]\n[hops]\nchannels = [3, 5]\n");
    let run = |seed: &str, name: &str| {
        let out = dir.path().join(name);
        let o = dopplerfi(&["run", "--config", &cfg, "--seed", seed, "--trials", "3", "--out", out.to_str().unwrap()]);
        assert!(o.status.success());
        fs::read(out.join("trials.csv")).unwrap()
    };
    assert_eq!(run("1", "a"), run("1", "b"));
    assert_ne!(run("1", "a"), run("2", "c"));
}

#[test]
fn bad_config_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "trials = 0\n");
    let o = dopplerfi(&["run", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("trials"));
    let o = dopplerfi(&["run", "--config", "/nonexistent/exp.toml"]);
    assert!(!o.status.success());
}
