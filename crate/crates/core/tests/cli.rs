use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use otfs_gsvd::config::parse_config;
use otfs_gsvd::output::{RunManifest, CSV_HEADER};

const CONFIG: &str = r#"
scheme = ["gsvd", "bd_mmse"]
c = 3
g = 2
snr_db = [0.0, 10.0]
frames = 3
seed = 5

[frame]
m = 4
n = 2
delta_f = 15000.0
fc = 4.0e9

[channel]
delays = [0, 1, 2]
powers_db = [0.0, -1.5, -1.4]
v_max_kmh = 500.0
"#;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_otfs-gsvd")).args(args).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.cfg");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn run_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let out = dir.path().join("out");
    let res = run(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let csv = fs::read_to_string(out.join("ber.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), CSV_HEADER);
    assert!(!out.join("ber.svg").exists());

    let manifest: RunManifest = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.outputs, vec!["ber.csv"]);
    assert_eq!(manifest.seed, 5);
    assert_eq!(manifest.echoed_config().unwrap(), parse_config(CONFIG).unwrap());
    assert!(manifest.finished_unix >= manifest.started_unix);
}

#[test]
fn plot_flag_adds_svg() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let out = dir.path().join("out");
    let res = run(&["run", "--config", &cfg, "--out", out.to_str().unwrap(), "--plot"]);
    assert!(res.status.success());
    assert!(fs::read_to_string(out.join("ber.svg")).unwrap().starts_with("<svg"));
}

#[test]
fn flags_override_config_and_reruns_match() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let common = ["run", "--config", &cfg, "--scheme", "gsvd", "--snr", "0:10:20", "--frames", "2", "--seed", "9"];
    let mut args_a = common.to_vec();
    args_a.extend(["--out", a.to_str().unwrap(), "--threads", "1"]);
    let mut args_b = common.to_vec();
    args_b.extend(["--out", b.to_str().unwrap(), "--threads", "2"]);
    assert!(run(&args_a).status.success());
    assert!(run(&args_b).status.success());
    let csv_a = fs::read(a.join("ber.csv")).unwrap();
    assert_eq!(csv_a, fs::read(b.join("ber.csv")).unwrap());
    let text = String::from_utf8(csv_a).unwrap();
    assert!(text.lines().skip(1).all(|l| l.starts_with("gsvd,")));
    let mut snrs: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').nth(4).unwrap()).collect();
    snrs.sort();
    snrs.dedup();
    assert_eq!(snrs, vec!["0", "10", "20"]);
    let manifest: RunManifest = serde_json::from_str(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    let echoed = manifest.echoed_config().unwrap();
    assert_eq!((echoed.frames, echoed.seed, echoed.snr_db.len()), (2, 9, 3));
}

#[test]
fn csi_sweep_writes_one_csv_per_rho() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &CONFIG.replace("seed = 5", "seed = 5\ncsi_rho = [1.0, 0.9]"));
    let out = dir.path().join("out");
    assert!(run(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]).status.success());
    assert!(out.join("ber_rho1.csv").exists());
    assert!(out.join("ber_rho0.9.csv").exists());
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &CONFIG.replace("seed = 5", "seed = 5\ncsi_rho = 1.5"));
    let res = run(&["run", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("csi_rho"));

    let cfg = write_config(dir.path(), &CONFIG.replace("c = 3", "c = 3\n").replace("g = 2", "g = 4"));
    let res = run(&["run", "--config", &cfg]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("bd_mmse"));

    let res = run(&["run", "--config", &cfg, "--scheme", "nope"]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn io_errors_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let res = run(&["run", "--config", dir.path().join("missing.cfg").to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(3));

    let cfg = write_config(dir.path(), CONFIG);
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let res = run(&["run", "--config", &cfg, "--frames", "1", "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(3));
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    for (name, c, g) in [("scenario1.cfg", 4, 3), ("scenario2.cfg", 3, 4), ("scenario3.cfg", 5, 2), ("estimation_error.cfg", 2, 2)] {
        let cfg = otfs_gsvd::config::load_config(&dir.join(name)).unwrap();
        assert_eq!((cfg.c, cfg.g), (c, g), "{name}");
        assert_eq!((cfg.frame.m, cfg.frame.n, cfg.frame.delta_f, cfg.frame.fc), (16, 8, 15e3, 4e9));
        assert_eq!(cfg.channel.v_max_kmh, 500.0);
    }
}
