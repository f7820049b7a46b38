use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn chaoslab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chaoslab"))
        .args(args)
        .env("CHAOSLAB_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn write_cfg(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn fb_config(out: &Path, id: &str) -> String {
    format!(
        "experiment-id = {id}\nkind = fb-moments\ndimension = 1\nbeta = 0.5\nn-modes = 64\nmc-samples = 400\nmaster-seed = 99\nchains = 4\noutput-dir = {}\n",
        out.display()
    )
}

#[test]
fn validate_accepts_a_good_config() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_cfg(tmp.path(), "ok.cfg", &fb_config(tmp.path(), "ok"));
    let out = chaoslab(&["validate", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!tmp.path().join("ok").exists(), "validate must not write artifacts");
}

#[test]
fn out_of_range_beta_exits_with_config_code() {
    let tmp = TempDir::new().unwrap();
    let body = fb_config(tmp.path(), "bad").replace("beta = 0.5", "beta = 1.2");
    let cfg = write_cfg(tmp.path(), "bad.cfg", &body);
    for cmd in ["validate", "run"] {
        let out = chaoslab(&[cmd, &cfg]);
        assert_eq!(out.status.code(), Some(2));
        assert!(String::from_utf8_lossy(&out.stderr).contains("beta"));
    }
}

#[test]
fn unknown_key_and_bad_syntax_exit_with_config_code() {
    let tmp = TempDir::new().unwrap();
    let unknown = write_cfg(tmp.path(), "u.cfg", &format!("{}colour = blue\n", fb_config(tmp.path(), "u")));
    let out = chaoslab(&["validate", &unknown]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
    let syntax = write_cfg(tmp.path(), "s.cfg", "experiment-id\n");
    assert_eq!(chaoslab(&["validate", &syntax]).status.code(), Some(2));
    assert_eq!(chaoslab(&["validate", "/nonexistent/file.cfg"]).status.code(), Some(2));
}

#[test]
fn unwritable_output_dir_exits_with_config_code() {
    let tmp = TempDir::new().unwrap();
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "not a directory").unwrap();
    let cfg = write_cfg(tmp.path(), "w.cfg", &fb_config(&blocker, "w"));
    let out = chaoslab(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not writable"));
}

#[test]
fn bad_thread_count_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_cfg(tmp.path(), "t.cfg", &fb_config(tmp.path(), "t"));
    let out = Command::new(env!("CARGO_BIN_EXE_chaoslab"))
        .args(["validate", &cfg])
        .env("CHAOSLAB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn rerun_reproduces_data_files_bit_for_bit() {
    let tmp = TempDir::new().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for d in [&a, &b] {
        let cfg = write_cfg(tmp.path(), "r.cfg", &fb_config(d, "rerun"));
        let out = chaoslab(&["run", &cfg]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("rerun/manifest.json")).unwrap()).unwrap();
    let files = manifest["data-files"].as_array().unwrap();
    assert!(!files.is_empty());
    for f in files {
        let name = f.as_str().unwrap();
        let x = fs::read(a.join("rerun").join(name)).unwrap();
        let y = fs::read(b.join("rerun").join(name)).unwrap();
        assert_eq!(x, y, "{name} differs");
        let text = String::from_utf8(x).unwrap();
        assert!(text.contains("master-seed"), "{name} lacks the master seed");
    }
    assert_eq!(manifest["master-seed"], 99);
    assert!(manifest["wall-time-seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn plot_with_missing_columns_exits_with_runtime_code() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("moments.csv"), "# experiment-id=x master-seed=1\nbeta,z\n0.5,0.1\n").unwrap();
    let dir = tmp.path().to_string_lossy().into_owned();
    let out = chaoslab(&["plot", &dir, "--kind", "moments"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing column"));
}

#[test]
fn plot_kind_without_inputs_is_a_data_error() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().to_string_lossy().into_owned();
    assert_eq!(chaoslab(&["plot", &dir, "--kind", "scan"]).status.code(), Some(3));
    assert_eq!(chaoslab(&["plot", &dir]).status.code(), Some(0));
}
