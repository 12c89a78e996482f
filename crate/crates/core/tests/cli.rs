//! End-to-end checks of the `crisim` binary and its file formats.

use std::path::Path;
use std::process::{Command, Output};

fn crisim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crisim"))
        .args(args)
        .env_remove("CRISIM_OUT")
        .output()
        .expect("binary runs")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

const SMALL: &str = r#"
name = "small"
m = 4
c = 4.0
snr_grid_db = [-40.0, -35.0]
schemes = ["CRIS-RS", "CRIS-MRC", "DNNR-RS", "DNNRD-MRC"]
seed = 3
min_bit_errors = 100
max_bits = 20000

[[relays]]
d_sr = 0.2
n_reflectors = 4

[[relays]]
d_sr = 0.6
theta_deg = 120.0
n_reflectors = 4

[training]
relay_samples = 2000
relay_hidden = [16, 16]
destination_samples = 2000
destination_hidden = [16]
confusion_samples = 500

[training.relay]
iterations = 40
batch_size = 64

[training.destination]
iterations = 40
batch_size = 64
"#;

fn write_config(dir: &Path) -> String {
    let p = dir.join("small.toml");
    std::fs::write(&p, SMALL).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn complexity_table_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("complexity.toml");
    std::fs::write(
        &cfg,
        r#"
[[scenarios]]
name = "S1"
l = 4
m = 4
n = 16

[[scenarios]]
name = "S2"
l = 6
m = 8
n = 32

[[scenarios]]
name = "S3"
l = 24
m = 16
n = 128

[[profiles]]
name = "DNN-1"
inputs = 2
hidden = [256, 256, 256, 256]
outputs = 4

[[profiles]]
name = "DNN-2"
inputs = 2
hidden = [16, 16]
outputs = 4

[[profiles]]
name = "DNN-3"
inputs = 2
hidden = [8, 8]
outputs = 4
"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = crisim(&["complexity", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let csv = std::fs::read_to_string(out.join("complexity.csv")).unwrap();
    assert_eq!(csv, text(&o.stdout));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "scheme,scenario,parameters,count");
    assert_eq!(lines.len(), 13);
    let counts: Vec<u64> = lines[1..].iter().map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(counts, vec![32, 84, 320, 64, 230, 1344, 192, 3160, 39936, 198144, 352, 112]);
}

#[test]
fn default_complexity_matches_configured_reference() {
    let dir = tempfile::tempdir().unwrap();
    let o = crisim(&["complexity", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(text(&o.stdout).lines().count(), 13);
}

#[test]
fn missing_config_names_the_path() {
    let o = crisim(&["ber", "--config", "/definitely/missing.toml", "--out", "/tmp"]);
    assert!(!o.status.success());
    assert!(text(&o.stderr).contains("/definitely/missing.toml"));
}

#[test]
fn unknown_arguments_print_usage() {
    for args in [&["bogus"][..], &["ber", "--frobnicate"][..], &[][..]] {
        let o = crisim(args);
        assert!(!o.status.success(), "{args:?}");
        assert!(text(&o.stderr).to_lowercase().contains("usage"), "{args:?}: {}", text(&o.stderr));
    }
}

#[test]
fn geometry_lists_every_relay() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let o = crisim(&["geometry", "--config", &cfg]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let out = text(&o.stdout);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "relay,d_sr,theta_deg,d_rd,g_sr,g_rd,amplitude_gain,n_reflectors");
    assert_eq!(lines.len(), 3);
    // d_rd = sqrt(1 - 0.2^2) at a right angle
    assert!(lines[1].starts_with("R1,0.2,90,0.979796,"));
    assert!(lines[2].starts_with("R2,0.6,120,"));
}

#[test]
fn gen_data_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out = dir.path().join("data");
    let o = crisim(&["gen-data", "relay", "--samples", "50", "--relay", "2", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let csv = std::fs::read_to_string(out.join("relay_2_data.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "h_re,h_im,g_re,g_im,cos_phi,sin_phi");
    assert_eq!(csv.lines().count(), 51);

    let o = crisim(&[
        "gen-data", "destination", "--samples", "40", "--mode", "mrc", "--ideal-phases", "--config", &cfg, "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let csv = std::fs::read_to_string(out.join("destination_mrc_data.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "y_re,y_im,class");
    assert_eq!(csv.lines().count(), 41);
    let o = crisim(&["gen-data", "relay", "--relay", "3", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(!o.status.success());
}

#[test]
fn train_then_ber_with_saved_models_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = crisim(&["train", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", text(&o.stderr));
    }
    let files = [
        "relay_1.json",
        "relay_2.json",
        "destination_mrc.json",
        "relay_1_history.csv",
        "destination_mrc_history.csv",
        "destination_mrc_confusion.csv",
    ];
    for f in files {
        let x = std::fs::read(a.join("models").join(f)).unwrap();
        let y = std::fs::read(b.join("models").join(f)).unwrap();
        assert_eq!(x, y, "{f}");
    }
    assert!(!a.join("models/destination_branch.json").exists());
    let history = std::fs::read_to_string(a.join("models/relay_1_history.csv")).unwrap();
    assert_eq!(history.lines().next().unwrap(), "iteration,loss,rmse,validation_loss,validation_rmse");
    assert_eq!(history.lines().count(), 41);

    let models = a.join("models");
    let o = crisim(&["ber", "--config", &cfg, "--models", models.to_str().unwrap(), "--out", a.to_str().unwrap()]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let from_saved = std::fs::read_to_string(a.join("small_ber.csv")).unwrap();
    let o = crisim(&["ber", "--config", &cfg, "--threads", "3", "--out", b.to_str().unwrap()]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let retrained = std::fs::read_to_string(b.join("small_ber.csv")).unwrap();
    assert_eq!(from_saved, retrained);
    let lines: Vec<&str> = from_saved.lines().collect();
    assert_eq!(lines[0], "m,snr_db,scheme,relay,ber,bits_simulated,bit_errors,censored");
    assert_eq!(lines.len(), 1 + 4 * 2);

    let o = crisim(&["ber", "--config", &cfg, "--seed", "4", "--out", b.to_str().unwrap()]);
    assert!(o.status.success());
    assert_ne!(std::fs::read_to_string(b.join("small_ber.csv")).unwrap(), retrained);
}

#[test]
fn ber_with_missing_models_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let empty = dir.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    let o = crisim(&["ber", "--config", &cfg, "--models", empty.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(text(&o.stderr).contains("model"), "{}", text(&o.stderr));
}

#[test]
fn reproduce_complexity_figure_uses_environment_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_crisim"))
        .args(["reproduce", "fig5"])
        .env("CRISIM_OUT", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", text(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("fig5.csv")).unwrap();
    assert_eq!(csv.lines().count(), 13);
}
