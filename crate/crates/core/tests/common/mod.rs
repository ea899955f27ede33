#![allow(dead_code)]

use rand::Rng;
use scatter_crypt::scene::{MediumSpec, PlaneSpec, Scene};
use scatter_crypt::{seed, CMat, C64};

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn random_matrix(rows: usize, cols: usize, seed_value: u64) -> CMat {
    let mut rng = seed::rng(seed_value);
    CMat::from_fn(rows, cols, |_, _| {
        c(
            rng.random::<f64>() * 2.0 - 1.0,
            rng.random::<f64>() * 2.0 - 1.0,
        )
    })
}

pub fn random_vector(n: usize, seed_value: u64) -> Vec<C64> {
    let mut rng = seed::rng(seed_value);
    (0..n)
        .map(|_| {
            c(
                rng.random::<f64>() * 2.0 - 1.0,
                rng.random::<f64>() * 2.0 - 1.0,
            )
        })
        .collect()
}

pub fn rel_err(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

pub fn mat_vec(m: &CMat, v: &[C64]) -> Vec<C64> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum())
        .collect()
}

pub fn adjoint(m: &CMat) -> CMat {
    CMat::from_fn(m.ncols(), m.nrows(), |i, j| m[(j, i)].conj())
}

pub fn mat_mul(a: &CMat, b: &CMat) -> CMat {
    CMat::from_fn(a.nrows(), b.ncols(), |i, j| {
        (0..a.ncols()).map(|k| a[(i, k)] * b[(k, j)]).sum()
    })
}

/// Gaussian elimination with partial pivoting on a square system.
pub fn solve_dense(a: &CMat, b: &[C64]) -> Vec<C64> {
    let n = a.nrows();
    let mut m: Vec<Vec<C64>> = (0..n)
        .map(|i| {
            let mut row: Vec<C64> = (0..n).map(|j| a[(i, j)]).collect();
            row.push(b[i]);
            row
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| m[x][col].norm().total_cmp(&m[y][col].norm()))
            .unwrap();
        m.swap(col, pivot);
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            for k in col..=n {
                let v = m[col][k];
                m[r][k] -= f * v;
            }
        }
    }
    let mut x = vec![c(0.0, 0.0); n];
    for i in (0..n).rev() {
        let s: C64 = (i + 1..n).map(|k| m[i][k] * x[k]).sum();
        x[i] = (m[i][n] - s) / m[i][i];
    }
    x
}

pub fn plane(center: [f64; 3], extent: f64, n: usize) -> PlaneSpec {
    PlaneSpec {
        center,
        extent_x: extent,
        extent_z: extent,
        nx: n,
        nz: n,
    }
}

/// Scene with the given planes and a placeholder medium between `y = 0` and
/// `y = distance`.
pub fn scene_between(hologram: PlaneSpec, sensor: PlaneSpec) -> Scene {
    let distance = sensor.center[1] - hologram.center[1];
    Scene {
        hologram,
        sensor,
        medium: MediumSpec {
            extent_x: 4.0,
            extent_z: 4.0,
            depth: distance - 2.0,
            gx: 1,
            gy: 1,
            gz: 1,
            tau_min: -1.0,
            tau_max: -1.0,
            standoff_hologram: 1.0,
            standoff_sensor: 1.0,
            jitter: 0.0,
        },
        wavelength: 1.0,
        wavenumber: 2.0 * std::f64::consts::PI,
    }
}

pub fn config_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

/// A scene small enough to run the whole protocol in well under a second.
pub const SMALL_CONFIG: &str = r#"{
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
    "reference": { "tilt_x": 0.62, "tilt_z": 0.62 },
    "band_fraction": 0.35
  }
}"#;

pub fn small_encryptor(medium_seed: u64, server_seed: u64) -> scatter_crypt::protocol::Encryptor {
    use scatter_crypt::protocol::{Encryptor, ExperimentConfig};
    let cfg = ExperimentConfig::from_json(SMALL_CONFIG).unwrap();
    let mut enc = Encryptor::setup(
        cfg.build_scene().unwrap(),
        cfg.protocol,
        medium_seed,
        server_seed,
    )
    .unwrap();
    for u in 1..=3 {
        enc.register_user(u, &format!("secret-{u}"));
    }
    enc
}
