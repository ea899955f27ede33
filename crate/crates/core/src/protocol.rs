//! The encryption server workflow.
//!
//! A sender uploads a plaintext image for a recipient. The server draws a
//! fresh user-pair key, combines the block's scattering states with it,
//! inverts the combined matrix for the image and returns the ciphertext
//! hologram with a receipt. On a validated request it recomputes the
//! per-state fields, recombines them with the stored key and releases the
//! reconstruction.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::foldylax::{sample_state, scattering_matrix, ScatteringMatrix, ScatteringState};
use crate::holography::{
    CiphertextHologram, CiphertextProvenance, Demodulator, DEFAULT_BAND_FRACTION,
};
use crate::inversion::{
    decompose_relative, synthesize_incident, SingularSystem, DEFAULT_EPSILON_REL,
};
use crate::keyring::{
    combine_states, generate_key_with, shuffle_block, CoefficientMode, KeyStore, UserKey,
};
use crate::metrics::normalize_min_max;
use crate::scene::{build_scene, Scene, SceneConfig};
use crate::wavefield::{reference_field, ComplexField, GeometryTag, ReferenceWave};
use crate::{seed, Error, Result, C64};

/// Grayscale image with pixels in `[0, 1]`, row-major, x fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaintextImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f64>,
    pub source: String,
}

impl PlaintextImage {
    pub fn new(
        width: usize,
        height: usize,
        pixels: Vec<f64>,
        source: impl Into<String>,
    ) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        if let Some(p) = pixels.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidImage(format!(
                "pixel value {p} outside [0, 1]"
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
            source: source.into(),
        })
    }

    /// Min-max normalized magnitude of a field sampled on a `width x height` grid.
    pub fn from_magnitude(
        field: &ComplexField,
        width: usize,
        height: usize,
        source: impl Into<String>,
    ) -> Result<Self> {
        let magnitude: Vec<f64> = field.values.iter().map(|v| v.norm()).collect();
        Self::new(width, height, normalize_min_max(&magnitude), source)
    }
}

/// Zero-phase sensor field whose magnitude is the image.
pub fn image_to_target(img: &PlaintextImage) -> ComplexField {
    ComplexField::new(
        img.pixels.iter().map(|&p| C64::new(p, 0.0)).collect(),
        GeometryTag::Sensor,
    )
}

/// Decryption pathway.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecryptMode {
    /// Exact complex-field recombination.
    #[default]
    Field,
    /// Demodulate the ciphertext, record per-state sensor holograms, combine
    /// the holograms and demodulate the result.
    Hologram,
}

impl std::str::FromStr for DecryptMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "field" => Ok(Self::Field),
            "hologram" => Ok(Self::Hologram),
            other => Err(Error::InvalidConfig(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceTilt {
    pub tilt_x: f64,
    pub tilt_z: f64,
}

impl Default for ReferenceTilt {
    fn default() -> Self {
        Self {
            tilt_x: 0.4,
            tilt_z: 0.0,
        }
    }
}

/// Server-side parameters of the scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProtocolConfig {
    /// Dynamic states per block, `L`.
    pub states: usize,
    /// States combined per key.
    pub subset_size: usize,
    /// Users in the simulated channel, `Q`.
    pub users: u32,
    /// Truncation threshold relative to the largest singular value.
    pub epsilon_rel: f64,
    pub reference: ReferenceTilt,
    /// Demodulation pass-band radius relative to Nyquist.
    pub band_fraction: f64,
    pub coefficients: CoefficientMode,
    pub mode: DecryptMode,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            states: 4,
            subset_size: 3,
            users: 3,
            epsilon_rel: DEFAULT_EPSILON_REL,
            reference: ReferenceTilt::default(),
            band_fraction: DEFAULT_BAND_FRACTION,
            coefficients: CoefficientMode::UnitPhase,
            mode: DecryptMode::Field,
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        if self.states == 0 {
            return Err(Error::InvalidConfig("at least one state per block".into()));
        }
        if self.subset_size == 0 || self.subset_size > self.states {
            return Err(Error::InvalidSubsetSize {
                size: self.subset_size,
                states: self.states,
            });
        }
        if !(self.epsilon_rel >= 0.0 && self.epsilon_rel < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "epsilon_rel {} outside [0, 1)",
                self.epsilon_rel
            )));
        }
        ReferenceWave::new(
            1.0,
            self.reference.tilt_x,
            self.reference.tilt_z,
            GeometryTag::Hologram,
        )?;
        Ok(())
    }
}

/// A complete experiment description: scene plus protocol parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub scene: SceneConfig,
    #[serde(default)]
    pub protocol: ProtocolConfig,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.protocol.validate()?;
        Ok(config)
    }

    pub fn build_scene(&self) -> Result<Scene> {
        build_scene(&self.scene)
    }
}

/// Transaction record handed to the recipient.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Receipt {
    pub key_id: String,
    pub sender: u32,
    pub recipient: u32,
    pub block: u64,
    /// SHA-256 of the serialized ciphertext.
    pub digest: String,
    /// Server-issued token binding the fields above.
    pub token: String,
}

/// SHA-256 of the canonical JSON encoding of `ct`.
pub fn ciphertext_digest(ct: &CiphertextHologram) -> String {
    seed::sha256_hex(&serde_json::to_vec(ct).expect("ciphertext serializes"))
}

/// Everything the server has to remember between requests.
#[derive(Debug, Clone)]
pub struct Encryptor {
    scene: Scene,
    config: ProtocolConfig,
    states: Vec<ScatteringState>,
    matrices: Vec<ScatteringMatrix>,
    server_seed: u64,
    users: BTreeMap<u32, String>,
    keys: KeyStore,
}

impl Encryptor {
    /// Samples the block's states from `medium_seed` and computes their
    /// scattering matrices.
    pub fn setup(
        scene: Scene,
        config: ProtocolConfig,
        medium_seed: u64,
        server_seed: u64,
    ) -> Result<Self> {
        let states: Vec<ScatteringState> = (1..=config.states)
            .map(|l| sample_state(&scene.medium, l, medium_seed))
            .collect();
        let matrices = states
            .iter()
            .map(|s| scattering_matrix(s, &scene))
            .collect::<Result<Vec<_>>>()?;
        Self::from_parts(scene, config, states, matrices, server_seed)
    }

    pub fn from_parts(
        scene: Scene,
        config: ProtocolConfig,
        states: Vec<ScatteringState>,
        matrices: Vec<ScatteringMatrix>,
        server_seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        if states.len() != config.states || matrices.len() != config.states {
            return Err(Error::InvalidConfig(format!(
                "expected {} states, got {} states and {} matrices",
                config.states,
                states.len(),
                matrices.len()
            )));
        }
        let shape = (scene.sensor_pixels(), scene.hologram_pixels());
        for m in &matrices {
            if m.shape() != shape {
                return Err(Error::ShapeMismatch {
                    expected: shape,
                    found: m.shape(),
                });
            }
        }
        Ok(Self {
            scene,
            config,
            states,
            matrices,
            server_seed,
            users: BTreeMap::new(),
            keys: KeyStore::default(),
        })
    }

    pub fn scene(&self) -> &Scene {
        &self.scene
    }

    pub fn config(&self) -> &ProtocolConfig {
        &self.config
    }

    pub fn config_mut(&mut self) -> &mut ProtocolConfig {
        &mut self.config
    }

    /// Physical states in storage order.
    pub fn states(&self) -> &[ScatteringState] {
        &self.states
    }

    /// Physical scattering matrices in storage order.
    pub fn matrices(&self) -> &[ScatteringMatrix] {
        &self.matrices
    }

    pub fn keys(&self) -> &KeyStore {
        &self.keys
    }

    pub fn set_keys(&mut self, keys: KeyStore) {
        self.keys = keys;
    }

    /// Registered users and the SHA-256 of their credentials.
    pub fn users(&self) -> &BTreeMap<u32, String> {
        &self.users
    }

    pub fn set_users(&mut self, users: BTreeMap<u32, String>) {
        self.users = users;
    }

    pub fn register_user(&mut self, user: u32, credential: &str) {
        self.users.insert(user, credential_hash(credential));
    }

    fn require_user(&self, user: u32) -> Result<()> {
        if self.users.contains_key(&user) {
            Ok(())
        } else {
            Err(Error::UnknownUser(user))
        }
    }

    /// Physical matrices realizing `key.subset` in the key's block.
    pub fn resolve_matrices(&self, key: &UserKey) -> Result<Vec<&ScatteringMatrix>> {
        key.validate(self.config.states)?;
        let schedule = shuffle_block(key.block, self.config.states, self.server_seed);
        Ok(key
            .subset
            .iter()
            .map(|&l| &self.matrices[schedule.resolve(l).expect("validated label")])
            .collect())
    }

    /// Combined scattering matrix of `key`.
    pub fn key_matrix(&self, key: &UserKey) -> Result<ScatteringMatrix> {
        combine_states(&self.resolve_matrices(key)?, key)
    }

    /// Encrypts `img` for `recipient` under a freshly drawn key.
    pub fn encrypt(
        &mut self,
        img: &PlaintextImage,
        sender: u32,
        recipient: u32,
        block: u64,
    ) -> Result<(CiphertextHologram, Receipt)> {
        self.require_user(sender)?;
        self.require_user(recipient)?;
        let nonce = self.keys.len() as u64;
        let key_seed = seed::derive(
            self.server_seed,
            "key",
            &[u64::from(sender), u64::from(recipient), block, nonce],
        );
        let key = generate_key_with(
            sender,
            recipient,
            block,
            self.config.states,
            self.config.subset_size,
            key_seed,
            self.config.coefficients,
        )?;
        self.encrypt_with_key(img, key)
    }

    /// Encrypts under a caller-chosen key, which is stored server-side.
    pub fn encrypt_with_key(
        &mut self,
        img: &PlaintextImage,
        key: UserKey,
    ) -> Result<(CiphertextHologram, Receipt)> {
        self.require_user(key.sender)?;
        self.require_user(key.recipient)?;
        let ct = self.encode(img, &key)?;
        let receipt = self.issue_receipt(&key, &ct);
        self.keys.insert(key);
        Ok((ct, receipt))
    }

    /// Inverts the key's combined matrix for `img` and records the hologram.
    fn encode(&self, img: &PlaintextImage, key: &UserKey) -> Result<CiphertextHologram> {
        let sensor = &self.scene.sensor;
        if img.width != sensor.nx || img.height != sensor.nz {
            return Err(Error::DimensionMismatch(format!(
                "image is {}x{}, sensor is {}x{}",
                img.width, img.height, sensor.nx, sensor.nz
            )));
        }
        let k = self.key_matrix(key)?;
        let system = decompose_relative(&k.entries, self.config.epsilon_rel)?;
        let incident = synthesize_incident(&system, &image_to_target(img))?;
        let peak = incident.max_abs();
        let reference = ReferenceWave::new(
            if peak > 0.0 { peak } else { 1.0 },
            self.config.reference.tilt_x,
            self.config.reference.tilt_z,
            GeometryTag::Hologram,
        )?;
        let sampled = reference_field(
            &reference,
            &self.scene.hologram_points(),
            self.scene.wavenumber,
        );
        let transparency = crate::holography::hologram_record(&incident, &sampled)?;
        Ok(CiphertextHologram {
            transparency,
            reference,
            provenance: CiphertextProvenance {
                sender: key.sender,
                recipient: key.recipient,
                block: key.block,
                key_id: key.key_id.clone(),
            },
            encoded_field: Some(incident),
        })
    }

    /// Singular system of the key's combined matrix, for diagnostics.
    pub fn singular_system(&self, key: &UserKey) -> Result<SingularSystem> {
        decompose_relative(&self.key_matrix(key)?.entries, self.config.epsilon_rel)
    }

    fn receipt_token(
        &self,
        key_id: &str,
        sender: u32,
        recipient: u32,
        block: u64,
        digest: &str,
    ) -> String {
        let mut material = Vec::new();
        material.extend_from_slice(&self.server_seed.to_le_bytes());
        material.extend_from_slice(key_id.as_bytes());
        material.extend_from_slice(&sender.to_le_bytes());
        material.extend_from_slice(&recipient.to_le_bytes());
        material.extend_from_slice(&block.to_le_bytes());
        material.extend_from_slice(digest.as_bytes());
        seed::sha256_hex(&material)[..32].to_string()
    }

    fn issue_receipt(&self, key: &UserKey, ct: &CiphertextHologram) -> Receipt {
        let digest = ciphertext_digest(ct);
        Receipt {
            token: self.receipt_token(&key.key_id, key.sender, key.recipient, key.block, &digest),
            key_id: key.key_id.clone(),
            sender: key.sender,
            recipient: key.recipient,
            block: key.block,
            digest,
        }
    }

    /// Releases the plaintext to the receipt's recipient.
    pub fn decrypt(
        &self,
        ct: &CiphertextHologram,
        receipt: &Receipt,
        credential: &str,
    ) -> Result<PlaintextImage> {
        let key = self
            .keys
            .get(&receipt.key_id)
            .ok_or_else(|| Error::UnknownReceipt(receipt.key_id.clone()))?;
        let stored = self
            .users
            .get(&receipt.recipient)
            .ok_or(Error::UnknownUser(receipt.recipient))?;
        if *stored != credential_hash(credential) {
            return Err(Error::AuthFailure);
        }
        let expected = self.receipt_token(
            &receipt.key_id,
            receipt.sender,
            receipt.recipient,
            receipt.block,
            &receipt.digest,
        );
        if expected != receipt.token
            || key.recipient != receipt.recipient
            || key.sender != receipt.sender
            || key.block != receipt.block
        {
            return Err(Error::AuthFailure);
        }
        if ciphertext_digest(ct) != receipt.digest {
            return Err(Error::DigestMismatch);
        }
        self.decrypt_with_key(ct, key)
    }

    /// Decrypts with an arbitrary key and no authorization, as an attacker
    /// holding that key would.
    pub fn decrypt_with_key(
        &self,
        ct: &CiphertextHologram,
        key: &UserKey,
    ) -> Result<PlaintextImage> {
        let field = self.decrypt_field(ct, key, self.config.mode)?;
        PlaintextImage::from_magnitude(
            &field,
            self.scene.sensor.nx,
            self.scene.sensor.nz,
            format!("decrypt:{}", key.key_id),
        )
    }

    /// Recombined sensor field for `key` in the given mode.
    pub fn decrypt_field(
        &self,
        ct: &CiphertextHologram,
        key: &UserKey,
        mode: DecryptMode,
    ) -> Result<ComplexField> {
        let matrices = self.resolve_matrices(key)?;
        let fields =
            reconstruct_state_fields(ct, &matrices, &self.scene, mode, self.config.band_fraction)?;
        combine_state_fields(
            &fields,
            &key.coefficients,
            ct,
            &self.scene,
            mode,
            self.config.band_fraction,
        )
    }
}

pub fn credential_hash(credential: &str) -> String {
    seed::sha256_hex(credential.as_bytes())
}

/// Incident field encoded by the ciphertext.
pub fn recover_incident(
    ct: &CiphertextHologram,
    scene: &Scene,
    mode: DecryptMode,
    band_fraction: f64,
) -> Result<ComplexField> {
    match mode {
        DecryptMode::Field => ct.encoded_field.clone().ok_or_else(|| {
            Error::InvalidConfig("ciphertext carries no encoded field for field mode".into())
        }),
        DecryptMode::Hologram => {
            let demod = Demodulator::new(
                &scene.hologram,
                &ct.reference,
                scene.wavenumber,
                band_fraction,
            )?;
            demod.demodulate_real(&ct.transparency)
        }
    }
}

/// Per-state scattered fields `ψ_l = SM_l ψ̂_i`.
pub fn reconstruct_state_fields(
    ct: &CiphertextHologram,
    matrices: &[&ScatteringMatrix],
    scene: &Scene,
    mode: DecryptMode,
    band_fraction: f64,
) -> Result<Vec<ComplexField>> {
    let incident = recover_incident(ct, scene, mode, band_fraction)?;
    matrices.iter().map(|m| m.apply(&incident)).collect()
}

/// Recombines per-state fields with `coefficients`.
///
/// Field mode sums `C_l ψ_l` directly. Hologram mode records
/// `H_l = |ψ_l + ψ_R|²` on the sensor with the ciphertext's reference
/// parameters, sums `C_l H_l` and demodulates.
pub fn combine_state_fields(
    fields: &[ComplexField],
    coefficients: &[C64],
    ct: &CiphertextHologram,
    scene: &Scene,
    mode: DecryptMode,
    band_fraction: f64,
) -> Result<ComplexField> {
    if fields.len() != coefficients.len() {
        return Err(Error::InvalidKey(format!(
            "{} fields for {} coefficients",
            fields.len(),
            coefficients.len()
        )));
    }
    let n = scene.sensor_pixels();
    let mut acc = vec![C64::new(0.0, 0.0); n];
    match mode {
        DecryptMode::Field => {
            for (f, c) in fields.iter().zip(coefficients) {
                for (a, v) in acc.iter_mut().zip(&f.values) {
                    *a += c * v;
                }
            }
            Ok(ComplexField::new(acc, GeometryTag::Sensor))
        }
        DecryptMode::Hologram => {
            let demod = Demodulator::new(
                &scene.sensor,
                &ct.reference.on_plane(GeometryTag::Sensor),
                scene.wavenumber,
                band_fraction,
            )?;
            for (f, c) in fields.iter().zip(coefficients) {
                let h = demod.record(f)?;
                for (a, v) in acc.iter_mut().zip(&h.values) {
                    *a += c * v;
                }
            }
            demod.demodulate(&acc)
        }
    }
}
