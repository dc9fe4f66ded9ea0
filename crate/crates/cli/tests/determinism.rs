//! The output contract: identical configuration produces byte-identical CSV.

use std::path::PathBuf;
use std::process::Command;

fn bsa() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bsa"))
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("bsa-determinism-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn identical_config_gives_byte_identical_output() {
    let config = tmp_dir("cfg").join("run.toml");
    std::fs::write(
        &config,
        r#"
[sweep]
eta_d_min = 0.7
eta_d_max = 1.0
eta_d_steps = 4
eta_a = [1.0]
models = ["pnrd", "slow-bd"]
"#,
    )
    .unwrap();
    let mut outputs = Vec::new();
    for (tag, workers) in [("a", "1"), ("b", "4")] {
        let dir = tmp_dir(tag);
        let status = bsa()
            .args(["sweep", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&dir)
            .args(["--workers", workers])
            .status()
            .unwrap();
        assert!(status.success());
        outputs.push(std::fs::read(dir.join("sweep.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1], "worker count changed the bytes");

    let dir = tmp_dir("c");
    let status = bsa()
        .arg("table1")
        .arg("--out")
        .arg(&dir)
        .status()
        .unwrap();
    assert!(status.success());
    let first = std::fs::read(dir.join("table1.csv")).unwrap();
    let status = bsa().arg("table1").arg("--out").arg(&dir).status().unwrap();
    assert!(status.success());
    assert_eq!(first, std::fs::read(dir.join("table1.csv")).unwrap());
}

#[test]
fn bad_config_exits_with_code_two() {
    let config = tmp_dir("bad").join("run.toml");
    std::fs::write(&config, "[sweep]\neta_i = 1.5\n").unwrap();
    let out = bsa()
        .args(["sweep", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(tmp_dir("bad-out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn resource_ceiling_exits_with_code_three() {
    let config = tmp_dir("big").join("run.toml");
    std::fs::write(
        &config,
        r#"
[arrays]
n_values = [8]
exact_max_enhanced = 8
exact_max_standard = 1
models = ["bd"]
xi = [1e-5]
"#,
    )
    .unwrap();
    let out = bsa()
        .args(["arrays", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(tmp_dir("big-out"))
        .output()
        .unwrap();
    // The enhanced N=8 exact point exceeds the dimension ceiling.
    assert_eq!(
        out.status.code(),
        Some(3),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}
