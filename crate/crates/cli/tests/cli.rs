use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const CONFIG: &str = r#"{
  "hologram": { "extent_x": 9.6, "extent_z": 9.6, "nx": 16, "nz": 16 },
  "sensor": { "extent_x": 7.2, "extent_z": 7.2, "nx": 12, "nz": 12 },
  "medium": {
    "extent_x": 12.0, "extent_z": 12.0, "depth": 9.0,
    "gx": 4, "gy": 3, "gz": 4,
    "tau_min": -11.0, "tau_max": -3.0,
    "standoff_hologram": 20.0, "standoff_sensor": 20.0, "jitter": 0.5
  },
  "protocol": {
    "epsilon_rel": 1e-5,
    "reference": { "tilt_x": 0.625, "tilt_z": 0.625 },
    "band_fraction": 0.35
  }
}"#;

fn cli(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scatter-crypt"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .env("SCATTER_CRYPT_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = cli(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Server with users 1..=3 registered and one ciphertext for user 2.
fn provisioned() -> tempfile::TempDir {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    fs::write(d.join("small.json"), CONFIG).unwrap();
    fs::write(d.join("seed"), "22\n").unwrap();
    ok(
        d,
        &[
            "gen-medium",
            "--config",
            "small.json",
            "--seed-medium",
            "7",
            "--out",
            "srv",
        ],
    );
    ok(d, &["compute-sm", "--store", "srv"]);
    for u in ["1", "2", "3"] {
        ok(
            d,
            &[
                "register",
                "--store",
                "srv",
                "--user",
                u,
                "--credential",
                &format!("pw{u}"),
            ],
        );
    }
    ok(
        d,
        &[
            "synth-image",
            "--size",
            "12",
            "--seed",
            "3",
            "--out",
            "plain.pgm",
        ],
    );
    ok(
        d,
        &[
            "encrypt",
            "--store",
            "srv",
            "--server-seed-file",
            "seed",
            "--image",
            "plain.pgm",
            "--sender",
            "1",
            "--recipient",
            "2",
            "--out",
            "ct.json",
        ],
    );
    tmp
}

fn decrypt_args<'a>(credential: &'a str, out: &'a str) -> Vec<&'a str> {
    vec![
        "decrypt",
        "--store",
        "srv",
        "--server-seed-file",
        "seed",
        "--ciphertext",
        "ct.json",
        "--credential",
        credential,
        "--out",
        out,
        "--reference",
        "plain.pgm",
    ]
}

#[test]
fn encrypt_then_decrypt_reports_ssim() {
    let tmp = provisioned();
    let d = tmp.path();
    let stdout = ok(d, &decrypt_args("pw2", "out.pgm"));
    assert!(stdout.contains("ssim "), "{stdout}");
    assert!(d.join("out.pgm").exists());
    assert!(d.join("out.manifest.json").exists());
    assert!(d.join("ct.manifest.json").exists());
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        for secret in ["users.json", "keys.json"] {
            let mode = fs::metadata(d.join("srv").join(secret))
                .unwrap()
                .permissions()
                .mode();
            assert_eq!(mode & 0o777, 0o600, "{secret}");
        }
    }
}

#[test]
fn wrong_credential_exits_5_without_output() {
    let tmp = provisioned();
    let d = tmp.path();
    let out = cli(d, &decrypt_args("pw1", "stolen.pgm"));
    assert_eq!(out.status.code(), Some(5));
    assert!(!d.join("stolen.pgm").exists());
    assert!(!d.join("stolen.manifest.json").exists());
}

#[test]
fn manifests_never_hold_credentials_or_the_seed() {
    let tmp = provisioned();
    let d = tmp.path();
    ok(d, &decrypt_args("pw2", "out.pgm"));
    let manifests: Vec<PathBuf> = [d.to_path_buf(), d.join("srv")]
        .iter()
        .flat_map(|dir| fs::read_dir(dir).unwrap())
        .map(|e| e.unwrap().path())
        .filter(|p| p.to_string_lossy().contains("manifest"))
        .collect();
    assert!(manifests.len() >= 5);
    for m in manifests {
        let text = fs::read_to_string(&m).unwrap();
        assert!(!text.contains("pw"), "{}", m.display());
        assert!(!text.contains("\"22\""), "{}", m.display());
    }
}

#[test]
fn gen_medium_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    fs::write(d.join("small.json"), CONFIG).unwrap();
    for out in ["a", "b"] {
        ok(
            d,
            &[
                "gen-medium",
                "--config",
                "small.json",
                "--seed-medium",
                "7",
                "--out",
                out,
            ],
        );
    }
    ok(
        d,
        &[
            "gen-medium",
            "--config",
            "small.json",
            "--seed-medium",
            "8",
            "--out",
            "c",
        ],
    );
    let states = |s: &str| fs::read(d.join(s).join("states.json")).unwrap();
    assert_eq!(states("a"), states("b"));
    assert_ne!(states("a"), states("c"));
}

#[test]
fn attacks_and_report() {
    let tmp = provisioned();
    let d = tmp.path();
    for u in ["1", "3"] {
        ok(
            d,
            &[
                "synth-image",
                "--size",
                "12",
                "--seed",
                u,
                "--out",
                &format!("p{u}.pgm"),
            ],
        );
        ok(
            d,
            &[
                "encrypt",
                "--store",
                "srv",
                "--server-seed-file",
                "seed",
                "--image",
                &format!("p{u}.pgm"),
                "--sender",
                u,
                "--recipient",
                u,
                "--out",
                &format!("ct{u}.json"),
            ],
        );
    }
    let server = ["--store", "srv", "--server-seed-file", "seed"];
    let mut random = vec!["attack", "random"];
    random.extend(server);
    random.extend([
        "--ciphertext",
        "ct.json",
        "--plaintext",
        "plain.pgm",
        "--trials",
        "4",
        "--out",
        "ar",
    ]);
    assert!(ok(d, &random).contains("random_key: 4 trials"));
    let mut cross = vec!["attack", "cross"];
    cross.extend(server);
    cross.extend([
        "--ciphertext",
        "ct1.json",
        "--ciphertext",
        "ct.json",
        "--ciphertext",
        "ct3.json",
        "--plaintext",
        "p1.pgm",
        "--plaintext",
        "plain.pgm",
        "--plaintext",
        "p3.pgm",
        "--out",
        "ac",
    ]);
    assert!(ok(d, &cross).contains("cross_user: 6 trials"));
    let csv = fs::read_to_string(d.join("ar/report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);

    ok(
        d,
        &[
            "report",
            "--attack",
            "ar",
            "--attack",
            "ac",
            "--columns",
            "4",
            "--out",
            "rep",
        ],
    );
    let summary = fs::read_to_string(d.join("rep/summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3);
    // one row for the random victim, three for the cross victims; 4 tiles of 12 px
    let panel = fs::read(d.join("rep/panel.pgm")).unwrap();
    let header = String::from_utf8_lossy(&panel[..16]).into_owned();
    assert!(header.starts_with("P5\n51 51\n"), "{header:?}");
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    assert_eq!(cli(d, &["--help"]).status.code(), Some(0));
    assert_eq!(cli(d, &["encrypt"]).status.code(), Some(1));
    assert_eq!(
        cli(d, &["compute-sm", "--store", "missing"]).status.code(),
        Some(4)
    );
    ok(d, &["gen-medium", "--out", "srv"]);
    let out = cli(
        d,
        &[
            "register",
            "--store",
            "srv",
            "--user",
            "9",
            "--credential",
            "x",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    fs::write(d.join("bad.json"), r#"{"hologram": 1}"#).unwrap();
    let out = cli(d, &["gen-medium", "--config", "bad.json", "--out", "x"]);
    assert_eq!(out.status.code(), Some(2));
}
