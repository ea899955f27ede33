use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use scatter_crypt::protocol::DecryptMode;
use scatter_crypt::store::save_json;
use scatter_crypt::Result;
use serde::Serialize;

/// Seeds of a run. The server seed is referenced by path only.
#[derive(Debug, Default, Serialize)]
pub struct Seeds {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub medium: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub server_seed_file: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub keys: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attack: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub image: Option<u64>,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    /// Command parameters; credentials are never included.
    pub parameters: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<String>,
    pub seeds: Seeds,
    pub output: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<DecryptMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    pub written: Vec<PathBuf>,
    pub started_unix: f64,
    pub finished_unix: f64,
}

pub fn now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

impl RunManifest {
    pub fn new(command: &str, parameters: impl Serialize, output: &Path) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            parameters: serde_json::to_value(parameters).unwrap_or_default(),
            config: None,
            seeds: Seeds::default(),
            output: output.to_path_buf(),
            mode: None,
            threads: None,
            written: Vec::new(),
            started_unix: now(),
            finished_unix: 0.0,
        }
    }

    /// Writes the manifest into `output` when it is a directory, otherwise
    /// next to it as `<stem>.manifest.json`.
    pub fn finish(mut self) -> Result<PathBuf> {
        self.finished_unix = now();
        let path = if self.output.is_dir() {
            self.output
                .join(format!("manifest-{}.json", self.command.replace(' ', "-")))
        } else {
            let stem = self
                .output
                .file_stem()
                .map_or_else(|| "run".into(), |s| s.to_string_lossy().into_owned());
            self.output.with_file_name(format!("{stem}.manifest.json"))
        };
        save_json(&self, &path)?;
        Ok(path)
    }
}
