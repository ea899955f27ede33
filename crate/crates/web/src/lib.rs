//! Browser demo: encrypt a synthetic image through a small simulated medium,
//! then try to decrypt it with hand-tuned or random key phases.

use scatter_crypt::attacks::random_trial_keys;
use scatter_crypt::holography::CiphertextHologram;
use scatter_crypt::keyring::{phase_coefficient, UserKey};
use scatter_crypt::metrics::{normalize_min_max, ssim, SsimParams};
use scatter_crypt::protocol::{Encryptor, ExperimentConfig, PlaintextImage};
use scatter_crypt::samples::scene_image;
use wasm_bindgen::prelude::*;

const SENDER: u32 = 1;
const RECIPIENT: u32 = 2;

/// 32x32 hologram, 16x16 sensor, 75 particles; carriers land on FFT bins.
pub const DEMO_CONFIG: &str = r#"{
  "hologram": { "extent_x": 19.2, "extent_z": 19.2, "nx": 32, "nz": 32 },
  "sensor": { "extent_x": 9.6, "extent_z": 9.6, "nx": 16, "nz": 16 },
  "medium": {
    "extent_x": 20.0, "extent_z": 20.0, "depth": 15.0,
    "gx": 5, "gy": 3, "gz": 5,
    "tau_min": -11.0, "tau_max": -3.0,
    "standoff_hologram": 60.0, "standoff_sensor": 60.0, "jitter": 0.5
  },
  "protocol": {
    "epsilon_rel": 1e-5,
    "reference": { "tilt_x": 0.625, "tilt_z": 0.625 },
    "band_fraction": 0.35
  }
}"#;

fn err(e: scatter_crypt::Error) -> String {
    e.to_string()
}

/// `c` such that `exp(-j·c·π)` has the coefficient's phase, in `(-1, 1]`.
fn phase_of(c: &scatter_crypt::C64) -> f64 {
    let p = -c.arg() / std::f64::consts::PI;
    if p <= -1.0 {
        p + 2.0
    } else {
        p
    }
}

/// A reconstruction and its similarity to the plaintext.
#[wasm_bindgen]
pub struct Reconstruction {
    pixels: Vec<f64>,
    ssim: f64,
}

#[wasm_bindgen]
impl Reconstruction {
    #[wasm_bindgen(getter)]
    pub fn pixels(&self) -> Vec<f64> {
        self.pixels.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn ssim(&self) -> f64 {
        self.ssim
    }
}

#[wasm_bindgen]
pub struct Demo {
    enc: Encryptor,
    plaintext: PlaintextImage,
    ciphertext: CiphertextHologram,
    key: UserKey,
}

#[wasm_bindgen]
impl Demo {
    /// Samples a medium and encrypts the first image.
    #[wasm_bindgen(constructor)]
    pub fn new(medium_seed: u32, server_seed: u32, image_seed: u32) -> Result<Demo, String> {
        let config = ExperimentConfig::from_json(DEMO_CONFIG).map_err(err)?;
        let scene = config.build_scene().map_err(err)?;
        let mut enc = Encryptor::setup(
            scene,
            config.protocol,
            medium_seed.into(),
            server_seed.into(),
        )
        .map_err(err)?;
        enc.register_user(SENDER, "sender");
        enc.register_user(RECIPIENT, "recipient");
        let (plaintext, ciphertext, key) = issue(&mut enc, image_seed)?;
        Ok(Demo {
            enc,
            plaintext,
            ciphertext,
            key,
        })
    }

    /// Encrypts a new image under a fresh key.
    pub fn encrypt(&mut self, image_seed: u32) -> Result<(), String> {
        let (plaintext, ciphertext, key) = issue(&mut self.enc, image_seed)?;
        self.plaintext = plaintext;
        self.ciphertext = ciphertext;
        self.key = key;
        Ok(())
    }

    #[wasm_bindgen(getter)]
    pub fn width(&self) -> usize {
        self.plaintext.width
    }

    #[wasm_bindgen(getter)]
    pub fn height(&self) -> usize {
        self.plaintext.height
    }

    #[wasm_bindgen(getter)]
    pub fn hologram_width(&self) -> usize {
        self.enc.scene().hologram.nx
    }

    #[wasm_bindgen(getter)]
    pub fn hologram_height(&self) -> usize {
        self.enc.scene().hologram.nz
    }

    pub fn plaintext(&self) -> Vec<f64> {
        self.plaintext.pixels.clone()
    }

    /// Hologram transparency scaled to `[0, 1]`.
    pub fn ciphertext(&self) -> Vec<f64> {
        normalize_min_max(&self.ciphertext.transparency.values)
    }

    /// States combined by the current key.
    pub fn subset(&self) -> Vec<u32> {
        self.key.subset.iter().map(|&l| l as u32).collect()
    }

    /// Phases of the current key, in units of π.
    pub fn key_phases(&self) -> Vec<f64> {
        self.key.coefficients.iter().map(phase_of).collect()
    }

    /// Decrypts with the key's states and the given phases.
    pub fn decrypt_with_phases(&self, phases: Vec<f64>) -> Result<Reconstruction, String> {
        let coefficients = phases.iter().map(|&c| phase_coefficient(c)).collect();
        let key = self.key.with_coefficients(coefficients).map_err(err)?;
        self.score(&key)
    }

    /// Best of `trials` random phase guesses.
    pub fn random_attack(&self, trials: u32, seed: u32) -> Result<Reconstruction, String> {
        let keys = random_trial_keys(&self.key, trials as usize, seed.into()).map_err(err)?;
        let mut best: Option<Reconstruction> = None;
        for k in &keys {
            let r = self.score(k)?;
            if best.as_ref().is_none_or(|b| r.ssim > b.ssim) {
                best = Some(r);
            }
        }
        best.ok_or_else(|| "at least one trial".to_string())
    }
}

impl Demo {
    fn score(&self, key: &UserKey) -> Result<Reconstruction, String> {
        let img = self
            .enc
            .decrypt_with_key(&self.ciphertext, key)
            .map_err(err)?;
        let s = ssim(&img, &self.plaintext, &SsimParams::default()).map_err(err)?;
        Ok(Reconstruction {
            pixels: img.pixels,
            ssim: s,
        })
    }
}

fn issue(
    enc: &mut Encryptor,
    image_seed: u32,
) -> Result<(PlaintextImage, CiphertextHologram, UserKey), String> {
    let sensor = &enc.scene().sensor;
    let plaintext = scene_image(sensor.nx, sensor.nz, image_seed.into());
    let (ciphertext, receipt) = enc.encrypt(&plaintext, SENDER, RECIPIENT, 0).map_err(err)?;
    let key = enc
        .keys()
        .get(&receipt.key_id)
        .cloned()
        .ok_or_else(|| "key missing after encryption".to_string())?;
    Ok((plaintext, ciphertext, key))
}
