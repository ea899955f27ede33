//! Intensity and holographic records, and off-axis demodulation.
//!
//! An off-axis hologram of object field `ψ` with reference `ψ_R` of amplitude
//! `A` expands as
//!
//! ```text
//! H = |ψ|² + A² + ψ ψ_R* + ψ* ψ_R
//! ```
//!
//! Multiplying by `ψ_R / A²` moves the object term to baseband while the
//! zero-order terms land on the carrier and the twin on twice the carrier.
//! A disc low-pass then keeps the object term.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::scene::{sample_plane, PlaneSpec};
use crate::wavefield::{reference_field, ComplexField, GeometryTag, ReferenceWave};
use crate::{Error, Result, C64};

/// Default disc radius as a fraction of the Nyquist frequency.
pub const DEFAULT_BAND_FRACTION: f64 = 0.25;

/// Real samples on a tagged point set (intensities, holograms, transparencies).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealField {
    #[serde(with = "crate::store::real_values")]
    pub values: Vec<f64>,
    pub tag: GeometryTag,
}

impl RealField {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The record as complex samples with zero imaginary part.
    pub fn to_complex(&self) -> Vec<C64> {
        self.values.iter().map(|&v| C64::new(v, 0.0)).collect()
    }
}

/// `|ψ|²` per sample.
pub fn intensity_record(field: &ComplexField) -> RealField {
    RealField {
        values: field.values.iter().map(|v| v.norm_sqr()).collect(),
        tag: field.tag.clone(),
    }
}

/// `|ψ + ψ_R|²` per sample.
pub fn hologram_record(field: &ComplexField, reference: &ComplexField) -> Result<RealField> {
    if field.tag != reference.tag || field.len() != reference.len() {
        return Err(Error::GeometryMismatch(format!(
            "field {:?}[{}] vs reference {:?}[{}]",
            field.tag,
            field.len(),
            reference.tag,
            reference.len()
        )));
    }
    Ok(RealField {
        values: field
            .values
            .iter()
            .zip(&reference.values)
            .map(|(f, r)| (f + r).norm_sqr())
            .collect(),
        tag: field.tag.clone(),
    })
}

/// Carrier frequency of `reference` on `plane` in cycles per pixel, wrapped to
/// `[-0.5, 0.5)` on each axis.
pub fn carrier_frequency(reference: &ReferenceWave, plane: &PlaneSpec, k: f64) -> [f64; 2] {
    let cycles = |tilt: f64, pitch: f64| wrap(tilt * k * pitch / (2.0 * PI));
    [
        cycles(reference.tilt_x, plane.pitch_x()),
        cycles(reference.tilt_z, plane.pitch_z()),
    ]
}

fn wrap(f: f64) -> f64 {
    f - (f + 0.5).floor()
}

/// Largest baseband radius (cycles/pixel) that keeps the zero-order band
/// (radius `2r` around the carrier) and the twin (radius `r` around twice the
/// carrier) clear of the baseband disc.
pub fn max_band_radius(carrier: [f64; 2]) -> f64 {
    let c = carrier[0].hypot(carrier[1]);
    let twin = wrap(2.0 * carrier[0]).hypot(wrap(2.0 * carrier[1]));
    (c / 3.0).min(twin / 2.0)
}

/// Off-axis demodulator for one plane and one reference wave.
pub struct Demodulator {
    nx: usize,
    nz: usize,
    reference: ComplexField,
    amplitude: f64,
    pass: Vec<bool>,
    fft_x: Arc<dyn Fft<f64>>,
    fft_z: Arc<dyn Fft<f64>>,
    ifft_x: Arc<dyn Fft<f64>>,
    ifft_z: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Demodulator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Demodulator")
            .field("nx", &self.nx)
            .field("nz", &self.nz)
            .field("amplitude", &self.amplitude)
            .finish_non_exhaustive()
    }
}

impl Demodulator {
    /// `band_fraction` is the pass-disc radius relative to Nyquist.
    /// Fails with [`Error::CarrierOverlap`] when the carrier cannot separate
    /// the object band from the other terms.
    pub fn new(
        plane: &PlaneSpec,
        reference: &ReferenceWave,
        k: f64,
        band_fraction: f64,
    ) -> Result<Self> {
        if !(band_fraction > 0.0 && band_fraction <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "band fraction {band_fraction} outside (0, 1]"
            )));
        }
        let radius = 0.5 * band_fraction;
        let supported = max_band_radius(carrier_frequency(reference, plane, k));
        if supported < radius {
            return Err(Error::CarrierOverlap {
                separation: supported,
                required: radius,
            });
        }
        let (nx, nz) = (plane.nx, plane.nz);
        let mut pass = Vec::with_capacity(nx * nz);
        for iz in 0..nz {
            let fz = fft_freq(iz, nz);
            for ix in 0..nx {
                let fx = fft_freq(ix, nx);
                pass.push(fx * fx + fz * fz <= radius * radius);
            }
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            nx,
            nz,
            reference: reference_field(reference, &sample_plane(plane), k),
            amplitude: reference.amplitude,
            pass,
            fft_x: planner.plan_fft_forward(nx),
            fft_z: planner.plan_fft_forward(nz),
            ifft_x: planner.plan_fft_inverse(nx),
            ifft_z: planner.plan_fft_inverse(nz),
        })
    }

    /// Sampled reference wave on the plane.
    pub fn reference(&self) -> &ComplexField {
        &self.reference
    }

    /// Records the off-axis hologram of `field` with this reference.
    pub fn record(&self, field: &ComplexField) -> Result<RealField> {
        hologram_record(field, &self.reference)
    }

    /// Extracts the object field from a (possibly complex-combined) hologram.
    ///
    /// Every step is linear in `hologram`: the mean is removed (this drops the
    /// flat reference intensity), the result is shifted by `ψ_R / A²`, and the
    /// baseband disc is kept.
    pub fn demodulate(&self, hologram: &[C64]) -> Result<ComplexField> {
        let n = self.nx * self.nz;
        if hologram.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "hologram has {} samples, plane has {n}",
                hologram.len()
            )));
        }
        let mean = hologram.iter().sum::<C64>() / n as f64;
        let gain = 1.0 / (self.amplitude * self.amplitude);
        let mut data: Vec<C64> = hologram
            .iter()
            .zip(&self.reference.values)
            .map(|(h, r)| (h - mean) * r * gain)
            .collect();
        self.transform(&mut data, false);
        for (d, keep) in data.iter_mut().zip(&self.pass) {
            if !keep {
                *d = C64::new(0.0, 0.0);
            }
        }
        self.transform(&mut data, true);
        let scale = 1.0 / n as f64;
        data.iter_mut().for_each(|d| *d *= scale);
        Ok(ComplexField::new(data, self.reference.tag.clone()))
    }

    pub fn demodulate_real(&self, hologram: &RealField) -> Result<ComplexField> {
        if hologram.tag != self.reference.tag {
            return Err(Error::GeometryMismatch(format!(
                "hologram on {:?}, demodulator on {:?}",
                hologram.tag, self.reference.tag
            )));
        }
        self.demodulate(&hologram.to_complex())
    }

    /// Unnormalized 2-D FFT over the row-major `nz x nx` grid.
    fn transform(&self, data: &mut [C64], inverse: bool) {
        let (fx, fz) = if inverse {
            (&self.ifft_x, &self.ifft_z)
        } else {
            (&self.fft_x, &self.fft_z)
        };
        for row in data.chunks_exact_mut(self.nx) {
            fx.process(row);
        }
        let mut column = vec![C64::new(0.0, 0.0); self.nz];
        for ix in 0..self.nx {
            for (iz, c) in column.iter_mut().enumerate() {
                *c = data[iz * self.nx + ix];
            }
            fz.process(&mut column);
            for (iz, c) in column.iter().enumerate() {
                data[iz * self.nx + ix] = *c;
            }
        }
    }
}

/// Frequency of FFT bin `i` of `n`, in cycles per sample.
fn fft_freq(i: usize, n: usize) -> f64 {
    let i = i as f64;
    let n_f = n as f64;
    if i < n_f / 2.0 {
        i / n_f
    } else {
        i / n_f - 1.0
    }
}

/// The encrypted record handed back to the sender.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CiphertextHologram {
    /// Transparency `t = |ψ̂_i + ψ_R|²` on the hologram plane.
    pub transparency: RealField,
    pub reference: ReferenceWave,
    pub provenance: CiphertextProvenance,
    /// Exact incident field, carried for field-mode decryption.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub encoded_field: Option<ComplexField>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CiphertextProvenance {
    pub sender: u32,
    pub recipient: u32,
    pub block: u64,
    pub key_id: String,
}
