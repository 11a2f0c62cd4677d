use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const TINY: &str = r#"{
  "schema_version": 1,
  "name": "tiny",
  "venues": 2,
  "market": { "grid_halfwidth": 12 },
  "dt": 0.01,
  "n_paths": 200,
  "surface_time_stride": 50
}"#;

fn feegame(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_feegame"))
        .args(args)
        .env("FEEGAME_OUT_DIR", out)
        .output()
        .unwrap()
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn list_shows_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let out = feegame(&["list"], dir.path());
    assert!(out.status.success());
    let stdout = text(&out.stdout);
    for id in ["table1", "table4", "fees-vs-inventory", "revenue-per-player"] {
        assert!(stdout.contains(id), "{id} missing from:\n{stdout}");
    }
}

#[test]
fn malformed_config_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "{\n \"name\": \"x\",\n \"venues\": ,\n}");
    let out = feegame(&["solve", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let stderr = text(&out.stderr);
    assert!(stderr.contains("config.json") && stderr.contains("line 3"), "{stderr}");
}

#[test]
fn unknown_field_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"schema_version": 1, "name": "x", "venues": 2, "sead": 3}"#);
    let out = feegame(&["table", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("sead"));
}

#[test]
fn missing_config_file_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    let out = feegame(&["solve", "--config", missing.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn solve_writes_surfaces_under_the_env_directory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TINY);
    let out_root = dir.path().join("from_env");
    let out = feegame(&["solve", "--config", &cfg], &out_root);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let run = out_root.join("tiny");
    assert!(run.join("manifest.json").exists());
    assert!(run.join("surfaces/player_1/t_00000.csv").exists());
    assert!(run.join("surfaces/player_2/t_00100.csv").exists());
}

#[test]
fn out_dir_flag_overrides_the_env() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TINY);
    let flag = dir.path().join("flag");
    let out = feegame(
        &["--out-dir", flag.to_str().unwrap(), "table", "--config", &cfg, "--paths", "50", "--seed", "9"],
        &dir.path().join("env"),
    );
    assert!(out.status.success(), "{}", text(&out.stderr));
    let table = fs::read_to_string(flag.join("tiny/table.csv")).unwrap();
    assert!(table.contains("n_paths: 50"));
    assert!(table.contains("seed: 9"));
    assert!(!dir.path().join("env").exists());
    assert!(text(&out.stdout).contains("Monopoly"));
}

#[test]
fn simulate_with_trades_and_thread_counts_agree() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TINY);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for (root, threads) in [(&a, "1"), (&b, "2")] {
        let out = feegame(
            &["--threads", threads, "--out-dir", root.to_str().unwrap(), "simulate", "--config", &cfg, "--trades", "--paths", "30"],
            dir.path(),
        );
        assert!(out.status.success(), "{}", text(&out.stderr));
    }
    for name in ["simulate.csv", "trades_equilibrium.csv"] {
        let x = fs::read(a.join("tiny").join(name)).unwrap();
        let y = fs::read(b.join("tiny").join(name)).unwrap();
        assert_eq!(x, y, "{name}");
    }
}

#[test]
fn figure_data_rejects_unknown_ids() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TINY);
    let out = feegame(&["figure-data", "--config", &cfg, "--id", "fees-4d"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("fees-vs-inventory"));
    let ok = feegame(&["figure-data", "--config", &cfg, "--id", "fees-vs-time"], dir.path());
    assert!(ok.status.success(), "{}", text(&ok.stderr));
    assert!(dir.path().join("tiny/figures/fees-vs-time.csv").exists());
}

#[test]
fn bad_dt_override_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TINY);
    let out = feegame(&["solve", "--config", &cfg, "--dt", "0.3"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}
