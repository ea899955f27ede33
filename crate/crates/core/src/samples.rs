//! Seeded synthetic plaintexts.

use std::f64::consts::PI;

use rand::Rng;

use crate::metrics::normalize_min_max;
use crate::protocol::PlaintextImage;
use crate::seed;

/// A few Gaussian blobs on a dark background.
pub fn blob_image(width: usize, height: usize, seed_value: u64) -> PlaintextImage {
    let mut rng = seed::rng(seed::derive(seed_value, "blobs", &[]));
    let count = rng.random_range(3..=5);
    let scale = width.min(height) as f64;
    let blobs: Vec<[f64; 4]> = (0..count)
        .map(|_| {
            [
                rng.random_range(0.2..0.8) * width as f64,
                rng.random_range(0.2..0.8) * height as f64,
                rng.random_range(0.08..0.18) * scale,
                rng.random_range(0.4..1.0),
            ]
        })
        .collect();
    let mut values = Vec::with_capacity(width * height);
    for z in 0..height {
        for x in 0..width {
            let v: f64 = blobs
                .iter()
                .map(|&[cx, cz, s, a]| {
                    let d2 = (x as f64 - cx).powi(2) + (z as f64 - cz).powi(2);
                    a * (-d2 / (2.0 * s * s)).exp()
                })
                .sum();
            values.push(v);
        }
    }
    PlaintextImage::new(
        width,
        height,
        normalize_min_max(&values),
        format!("blobs:{seed_value}"),
    )
    .expect("normalized pixels")
}

/// Random image whose DFT vanishes outside a disc of `radius` cycles/pixel.
pub fn band_limited_image(
    width: usize,
    height: usize,
    radius: f64,
    seed_value: u64,
) -> PlaintextImage {
    let mut rng = seed::rng(seed::derive(seed_value, "band-limited", &[]));
    let (w, h) = (width as f64, height as f64);
    let kx_max = (radius * w).floor() as i64;
    let kz_max = (radius * h).floor() as i64;
    let mut modes = Vec::new();
    for kz in 0..=kz_max {
        for kx in -kx_max..=kx_max {
            if (kz == 0 && kx <= 0) || (kx as f64 / w).hypot(kz as f64 / h) > radius {
                continue;
            }
            modes.push((
                kx as f64 / w,
                kz as f64 / h,
                rng.random::<f64>(),
                2.0 * PI * rng.random::<f64>(),
            ));
        }
    }
    let mut values = Vec::with_capacity(width * height);
    for z in 0..height {
        for x in 0..width {
            values.push(
                modes
                    .iter()
                    .map(|&(fx, fz, a, phi)| {
                        a * (2.0 * PI * (fx * x as f64 + fz * z as f64) + phi).cos()
                    })
                    .sum(),
            );
        }
    }
    PlaintextImage::new(
        width,
        height,
        normalize_min_max(&values),
        format!("band-limited:{seed_value}"),
    )
    .expect("normalized pixels")
}

/// Sharp-edged shapes over `1/f` texture, a stand-in for natural images.
pub fn scene_image(width: usize, height: usize, seed_value: u64) -> PlaintextImage {
    let mut rng = seed::rng(seed::derive(seed_value, "scene", &[]));
    let (w, h) = (width as f64, height as f64);
    let mut values = vec![0.0; width * height];

    // 1/f amplitude spectrum with random phases
    let kmax = (width.max(height) / 2) as i64;
    for kz in 0..=kmax {
        for kx in -kmax..=kmax {
            if kz == 0 && kx <= 0 {
                continue;
            }
            let (fx, fz) = (kx as f64 / w, kz as f64 / h);
            let amp = 0.02 / fx.hypot(fz) / w;
            let phi = 2.0 * PI * rng.random::<f64>();
            for z in 0..height {
                for x in 0..width {
                    values[z * width + x] +=
                        amp * (2.0 * PI * (fx * x as f64 + fz * z as f64) + phi).cos();
                }
            }
        }
    }

    let count = rng.random_range(3..=6);
    for _ in 0..count {
        let (cx, cz) = (
            rng.random_range(0.1..0.9) * w,
            rng.random_range(0.1..0.9) * h,
        );
        let (rx, rz) = (
            rng.random_range(0.1..0.3) * w,
            rng.random_range(0.1..0.3) * h,
        );
        let level = rng.random_range(-0.6..0.6);
        let ellipse = rng.random::<bool>();
        for z in 0..height {
            for x in 0..width {
                let (dx, dz) = ((x as f64 - cx) / rx, (z as f64 - cz) / rz);
                let inside = if ellipse {
                    dx * dx + dz * dz <= 1.0
                } else {
                    dx.abs() <= 1.0 && dz.abs() <= 1.0
                };
                if inside {
                    values[z * width + x] += level;
                }
            }
        }
    }
    PlaintextImage::new(
        width,
        height,
        normalize_min_max(&values),
        format!("scene:{seed_value}"),
    )
    .expect("normalized pixels")
}
