//! On-disk server directory.
//!
//! ```text
//! config.json     experiment configuration (scene + protocol)
//! states.json     sampled dynamic states
//! sm_<l>.scm      scattering matrix of physical state l (1-based)
//! users.json      credential hashes, owner-readable only
//! keys.json       issued user-pair keys, owner-readable only
//! ```
//!
//! The server seed never lives here; it is read from a separate file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use scatter_crypt::foldylax::{scene_fingerprint, Provenance, ScatteringMatrix, ScatteringState};
use scatter_crypt::keyring::KeyStore;
use scatter_crypt::protocol::{DecryptMode, Encryptor, ExperimentConfig};
use scatter_crypt::scene::Scene;
use scatter_crypt::store::{load_json, load_matrix, read_seed, save_json, write_secret};
use scatter_crypt::{Error, Result};

pub struct ServerDir {
    root: PathBuf,
}

/// Per-run changes to the stored protocol parameters.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub mode: Option<DecryptMode>,
    pub epsilon_rel: Option<f64>,
}

impl ServerDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn matrix_path(&self, state: usize) -> PathBuf {
        self.path(&format!("sm_{state}.scm"))
    }

    pub fn create(&self) -> Result<()> {
        std::fs::create_dir_all(&self.root).map_err(|e| Error::io(&self.root, e))
    }

    pub fn config(&self) -> Result<ExperimentConfig> {
        let config: ExperimentConfig = load_json(&self.path("config.json"))?;
        config.protocol.validate()?;
        Ok(config)
    }

    pub fn save_config(&self, config: &ExperimentConfig) -> Result<()> {
        save_json(config, &self.path("config.json"))
    }

    pub fn states(&self) -> Result<Vec<ScatteringState>> {
        load_json(&self.path("states.json"))
    }

    pub fn save_states(&self, states: &[ScatteringState]) -> Result<()> {
        save_json(&states, &self.path("states.json"))
    }

    pub fn matrices(
        &self,
        scene: &Scene,
        states: &[ScatteringState],
    ) -> Result<Vec<ScatteringMatrix>> {
        let fingerprint = scene_fingerprint(scene);
        states
            .iter()
            .map(|s| {
                Ok(ScatteringMatrix {
                    entries: load_matrix(&self.matrix_path(s.id))?,
                    scene: fingerprint.clone(),
                    provenance: Provenance::State(s.id),
                })
            })
            .collect()
    }

    pub fn users(&self) -> Result<BTreeMap<u32, String>> {
        let path = self.path("users.json");
        if path.exists() {
            load_json(&path)
        } else {
            Ok(BTreeMap::new())
        }
    }

    pub fn save_users(&self, users: &BTreeMap<u32, String>) -> Result<()> {
        write_secret(&self.path("users.json"), &pretty(users)?)
    }

    pub fn keys(&self) -> Result<KeyStore> {
        let path = self.path("keys.json");
        if path.exists() {
            load_json(&path)
        } else {
            Ok(KeyStore::default())
        }
    }

    pub fn save_keys(&self, keys: &KeyStore) -> Result<()> {
        write_secret(&self.path("keys.json"), &pretty(keys)?)
    }

    /// Restores the full server state.
    pub fn open(&self, seed_file: &Path, overrides: Overrides) -> Result<Encryptor> {
        let mut config = self.config()?;
        if let Some(mode) = overrides.mode {
            config.protocol.mode = mode;
        }
        if let Some(eps) = overrides.epsilon_rel {
            config.protocol.epsilon_rel = eps;
        }
        let scene = config.build_scene()?;
        let states = self.states()?;
        let matrices = self.matrices(&scene, &states)?;
        let mut enc = Encryptor::from_parts(
            scene,
            config.protocol,
            states,
            matrices,
            read_seed(seed_file)?,
        )?;
        enc.set_users(self.users()?);
        enc.set_keys(self.keys()?);
        Ok(enc)
    }
}

fn pretty<T: serde::Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}
