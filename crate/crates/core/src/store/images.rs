//! Grayscale image I/O: binary PGM, CSV, and CIFAR-10 batch conversion.

use std::fs;
use std::path::Path;

use crate::protocol::PlaintextImage;
use crate::{Error, Result};

/// One label byte and three 32x32 colour planes.
pub const CIFAR_RECORD_BYTES: usize = 1 + 3 * 1024;

/// Parses a binary (P5) PGM; 16-bit samples are big-endian.
pub fn read_pgm(bytes: &[u8], source: &str) -> Result<PlaintextImage> {
    let mut pos = 0;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::InvalidImage("truncated PGM header".into()));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    if fields[0] != "P5" {
        return Err(Error::InvalidImage(format!(
            "expected P5, found {:?}",
            fields[0]
        )));
    }
    let num = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| Error::InvalidImage(format!("bad PGM header field {s:?}")))
    };
    let (width, height, maxval) = (num(&fields[1])?, num(&fields[2])?, num(&fields[3])?);
    if maxval == 0 || maxval > 65535 {
        return Err(Error::InvalidImage(format!("PGM maxval {maxval}")));
    }
    // single whitespace byte after maxval
    pos += 1;
    let depth = if maxval < 256 { 1 } else { 2 };
    let data = bytes.get(pos..).unwrap_or(&[]);
    if data.len() < width * height * depth {
        return Err(Error::InvalidImage(format!(
            "PGM raster has {} bytes, expected {}",
            data.len(),
            width * height * depth
        )));
    }
    let scale = 1.0 / maxval as f64;
    let pixels = (0..width * height)
        .map(|i| {
            let raw = if depth == 1 {
                data[i] as f64
            } else {
                u16::from_be_bytes([data[2 * i], data[2 * i + 1]]) as f64
            };
            (raw * scale).min(1.0)
        })
        .collect();
    PlaintextImage::new(width, height, pixels, source)
}

/// 8-bit P5 encoding; values are rounded to the nearest level.
pub fn write_pgm(img: &PlaintextImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend(
        img.pixels
            .iter()
            .map(|p| (p.clamp(0.0, 1.0) * 255.0).round() as u8),
    );
    out
}

/// One image row per line, comma separated.
pub fn read_image_csv(text: &str, source: &str) -> Result<PlaintextImage> {
    let mut pixels = Vec::new();
    let mut width = None;
    let mut height = 0;
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
        let row = line
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidImage(format!("bad CSV value {v:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(Error::InvalidImage(format!(
                    "ragged CSV: row {height} has {} values, expected {w}",
                    row.len()
                )))
            }
            _ => {}
        }
        pixels.extend(row);
        height += 1;
    }
    PlaintextImage::new(width.unwrap_or(0), height, pixels, source)
}

pub fn write_image_csv(img: &PlaintextImage) -> String {
    let mut out = String::new();
    for row in img.pixels.chunks(img.width.max(1)) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// Loads a `.pgm` or `.csv` image.
pub fn read_image(path: &Path) -> Result<PlaintextImage> {
    let source = path.display().to_string();
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => read_image_csv(
            &fs::read_to_string(path).map_err(|e| Error::io(path, e))?,
            &source,
        ),
        _ => read_pgm(&fs::read(path).map_err(|e| Error::io(path, e))?, &source),
    }
}

/// Grayscale images from a CIFAR-10 binary batch, with their labels.
///
/// Luminance is `0.299 R + 0.587 G + 0.114 B`.
pub fn cifar_to_images(batch: &[u8], limit: usize) -> Result<Vec<(u8, PlaintextImage)>> {
    if batch.len() % CIFAR_RECORD_BYTES != 0 {
        return Err(Error::InvalidImage(format!(
            "{} bytes is not a whole number of CIFAR records",
            batch.len()
        )));
    }
    batch
        .chunks_exact(CIFAR_RECORD_BYTES)
        .take(limit)
        .enumerate()
        .map(|(i, rec)| {
            let (r, g, b) = (&rec[1..1025], &rec[1025..2049], &rec[2049..3073]);
            let pixels = (0..1024)
                .map(|p| (0.299 * r[p] as f64 + 0.587 * g[p] as f64 + 0.114 * b[p] as f64) / 255.0)
                .map(|v| v.clamp(0.0, 1.0))
                .collect();
            Ok((
                rec[0],
                PlaintextImage::new(32, 32, pixels, format!("cifar:{i}"))?,
            ))
        })
        .collect()
}
