//! Persistence: a checksummed binary container for matrices, JSON for
//! records, and PGM/CSV for images.

mod b64;
mod container;
mod images;

pub use b64::{complex_values, real_values};
pub use container::{
    decode_matrix, encode_matrix, load_field, load_matrix, save_field, save_matrix, DTYPE_C128,
    MAGIC, VERSION,
};
pub use images::{
    cifar_to_images, read_image, read_image_csv, read_pgm, write_image_csv, write_pgm,
    CIFAR_RECORD_BYTES,
};

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::holography::CiphertextHologram;
use crate::protocol::Receipt;
use crate::{Error, Result};

/// Ciphertext and receipt as handed to the sender.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CiphertextBundle {
    pub ciphertext: CiphertextHologram,
    pub receipt: Receipt,
}

pub fn save_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Writes `contents` readable by the owner only.
pub fn write_secret(path: &Path, contents: &str) -> Result<()> {
    use std::io::Write;
    let mut options = fs::OpenOptions::new();
    options.write(true).create(true).truncate(true);
    #[cfg(unix)]
    {
        use std::os::unix::fs::OpenOptionsExt;
        options.mode(0o600);
    }
    let mut file = options.open(path).map_err(|e| Error::io(path, e))?;
    file.write_all(contents.as_bytes())
        .map_err(|e| Error::io(path, e))?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        fs::set_permissions(path, fs::Permissions::from_mode(0o600))
            .map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

/// Reads a 64-bit seed written as decimal text.
pub fn read_seed(path: &Path) -> Result<u64> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.trim()
        .parse()
        .map_err(|_| Error::Format(format!("{} does not hold a 64-bit seed", path.display())))
}
