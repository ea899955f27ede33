//! Serde adapters storing sample vectors as base64 of little-endian f64s.

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serializer};

use crate::C64;

fn decode(d: String) -> Result<Vec<f64>, String> {
    let bytes = STANDARD.decode(d).map_err(|e| e.to_string())?;
    if bytes.len() % 8 != 0 {
        return Err(format!(
            "{} bytes is not a whole number of f64s",
            bytes.len()
        ));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

pub mod real_values {
    use super::*;

    pub fn serialize<S: Serializer>(values: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
        s.serialize_str(&STANDARD.encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        decode(String::deserialize(d)?).map_err(D::Error::custom)
    }
}

/// Interleaved `(re, im)` pairs.
pub mod complex_values {
    use super::*;

    pub fn serialize<S: Serializer>(values: &[C64], s: S) -> Result<S::Ok, S::Error> {
        let bytes: Vec<u8> = values
            .iter()
            .flat_map(|v| v.re.to_le_bytes().into_iter().chain(v.im.to_le_bytes()))
            .collect();
        s.serialize_str(&STANDARD.encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<C64>, D::Error> {
        let flat = decode(String::deserialize(d)?).map_err(D::Error::custom)?;
        if flat.len() % 2 != 0 {
            return Err(D::Error::custom("odd number of complex components"));
        }
        Ok(flat.chunks_exact(2).map(|p| C64::new(p[0], p[1])).collect())
    }
}
