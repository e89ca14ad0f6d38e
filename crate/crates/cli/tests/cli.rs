use std::path::Path;
use std::process::{Command, Output};

fn rsv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rsv")).args(args).output().expect("spawn rsv")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn tiny_config(dir: &Path) -> String {
    let work = dir.join("work");
    let text = format!(
        r#"[general]
work_dir = "{}"
[corpus.backend]
speakers = 6
utterances_per_speaker = 3
min_duration_s = 1.0
max_duration_s = 1.5
[corpus.eval]
speakers = 4
utterances_per_speaker = 3
min_duration_s = 1.0
max_duration_s = 1.5
[corpus.autoencoder]
speakers = 2
utterances_per_speaker = 2
min_duration_s = 1.0
max_duration_s = 1.5
[pools]
noises = [3, 1, 2]
rooms = [3, 0, 2]
noise_duration_s = 3.0
babble_talkers = 2
babble_pool = 3
max_order = 3
[autoencoder.train]
epochs = 1
hidden_dims = [16]
[backend]
ubm_components = 4
ubm_iters = 5
ivector_dim = 6
tv_iters = 3
lda_dim = 3
plda_iters = 5
[regimes]
systems = ["baseline"]
"#,
        work.display()
    );
    let path = dir.join("tiny.toml");
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn print_config_emits_loadable_defaults() {
    let out = rsv(&["--print-config"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let cfg = rsv_core::experiment::ExperimentConfig::from_toml(&text).unwrap();
    assert_eq!(cfg, rsv_core::experiment::ExperimentConfig::default());
}

#[test]
fn overrides_show_in_printed_config() {
    let out = rsv(&["--print-config", "--seed", "77", "--regime", "AE+MC(N+AR)", "--regime", "baseline"]);
    assert_eq!(code(&out), 0);
    let cfg = rsv_core::experiment::ExperimentConfig::from_toml(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(cfg.general.seed, 77);
    assert_eq!(cfg.regimes.systems, ["AE+MC(N+AR)", "baseline"]);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[backend]\nlda_dim = 0\n").unwrap();
    assert_eq!(code(&rsv(&["--config", bad.to_str().unwrap(), "eer"])), 2);
    assert_eq!(code(&rsv(&["--config", "/no/such/file.toml", "eer"])), 2);
    assert_eq!(code(&rsv(&["--regime", "AE(X)", "eer"])), 2);
    assert_eq!(code(&rsv(&[])), 2);
}

#[test]
fn missing_upstream_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let out = rsv(&["--config", &cfg, "features"]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn run_experiment_is_idempotent_and_detects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let first = rsv(&["--config", &cfg, "--jobs", "1", "run-experiment"]);
    assert_eq!(code(&first), 0, "{}", String::from_utf8_lossy(&first.stderr));
    let table = String::from_utf8(first.stdout.clone()).unwrap();
    let header: Vec<&str> = table.lines().next().unwrap().split_whitespace().collect();
    assert_eq!(header, ["condition", "baseline"]);
    assert_eq!(table.lines().count(), 9);

    let second = rsv(&["--config", &cfg, "run-experiment"]);
    assert_eq!(code(&second), 0);
    assert_eq!(second.stdout, first.stdout);
    let log = String::from_utf8(second.stderr).unwrap();
    assert_eq!(log.matches("up to date").count(), 9, "{log}");

    // a changed feature archive is a stale input for the back end
    let work = dir.path().join("work");
    let ark = work.join("features/raw/backend.ark");
    let mut bytes = std::fs::read(&ark).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 1;
    std::fs::write(&ark, bytes).unwrap();
    let out = rsv(&["--config", &cfg, "train-backend"]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn stage_flag_stops_early() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let out = rsv(&["--config", &cfg, "--stage", "corrupt", "run-experiment"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let work = dir.path().join("work");
    assert!(work.join("corrupt/manifest.json").exists());
    assert!(!work.join("ae").exists());
    assert!(out.stdout.is_empty());
}
