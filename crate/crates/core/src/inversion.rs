//! Truncated-SVD pseudoinverse of a scattering matrix.
//!
//! With `K = Σ_p σ_p u_p v_pᴴ` (`u_p` on the sensor, `v_p` on the hologram),
//! the incident field that `K` maps closest to a target `ψ_s` is
//!
//! ```text
//! ψ̂_i = Σ_{p : σ_p > ε} σ_p⁻¹ v_p (u_pᴴ ψ_s)
//! ```

use crate::wavefield::{ComplexField, GeometryTag};
use crate::{CMat, Error, Result, C64};

/// Default threshold relative to the largest singular value.
pub const DEFAULT_EPSILON_REL: f64 = 1e-3;

/// Thin singular system of a scattering matrix together with its truncation.
#[derive(Debug, Clone)]
pub struct SingularSystem {
    /// Singular values, non-increasing.
    pub values: Vec<f64>,
    /// Input (hologram-side) singular vectors as columns, `M x P`.
    pub input_vectors: CMat,
    /// Output (sensor-side) singular vectors as columns, `N x P`.
    pub output_vectors: CMat,
    pub epsilon: f64,
    /// Number of singular values strictly above `epsilon`.
    pub retained: usize,
}

impl SingularSystem {
    /// Smallest retained singular value.
    pub fn smallest_retained(&self) -> Option<f64> {
        self.retained.checked_sub(1).map(|p| self.values[p])
    }

    /// Rebuilds `Σ σ_p u_p v_pᴴ` over all singular triplets.
    pub fn reconstruct(&self) -> CMat {
        let mut scaled = self.output_vectors.clone();
        for (p, s) in self.values.iter().enumerate() {
            for i in 0..scaled.nrows() {
                scaled[(i, p)] *= *s;
            }
        }
        &scaled * self.input_vectors.adjoint()
    }

    /// Same decomposition with a different threshold.
    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.retained = count_above(&self.values, epsilon);
        self.epsilon = epsilon;
        self
    }
}

fn count_above(values: &[f64], epsilon: f64) -> usize {
    values.iter().take_while(|&&s| s > epsilon).count()
}

/// Thin SVD of `k`, truncated at `σ_p > epsilon`.
pub fn decompose(k: &CMat, epsilon: f64) -> Result<SingularSystem> {
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "regularization threshold {epsilon} must be non-negative"
        )));
    }
    for j in 0..k.ncols() {
        for i in 0..k.nrows() {
            let v = k[(i, j)];
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::NumericalFailure(format!(
                    "non-finite matrix entry at ({i}, {j})"
                )));
            }
        }
    }
    // The SVD backend occasionally returns NaNs, without an error, for
    // matrices with a large cluster of round-off singular values. A rescaled
    // copy takes a different path, so retry a few times before giving up.
    for scale in [1.0, 3.0, 0.3, 7.0] {
        let (values, u, v) = thin_svd(k, scale)?;
        if values.iter().all(|s| s.is_finite()) && is_finite(&u) && is_finite(&v) {
            if scale != 1.0 {
                log::warn!("SVD recovered after rescaling by {scale}");
            }
            return Ok(SingularSystem {
                retained: count_above(&values, epsilon),
                values,
                input_vectors: v,
                output_vectors: u,
                epsilon,
            });
        }
    }
    Err(Error::NumericalFailure(
        "SVD produced non-finite singular triplets".into(),
    ))
}

fn thin_svd(k: &CMat, scale: f64) -> Result<(Vec<f64>, CMat, CMat)> {
    let scaled;
    let a = if scale == 1.0 {
        k
    } else {
        scaled = k * faer::Scale(C64::new(scale, 0.0));
        &scaled
    };
    let svd = a
        .thin_svd()
        .map_err(|e| Error::NumericalFailure(format!("SVD did not converge: {e:?}")))?;
    let s = svd.S().column_vector();
    let values = (0..s.nrows()).map(|i| s[i].re / scale).collect();
    Ok((values, svd.U().to_owned(), svd.V().to_owned()))
}

fn is_finite(m: &CMat) -> bool {
    (0..m.ncols())
        .all(|j| (0..m.nrows()).all(|i| m[(i, j)].re.is_finite() && m[(i, j)].im.is_finite()))
}

/// Thin SVD truncated at `epsilon_rel · σ_1`.
pub fn decompose_relative(k: &CMat, epsilon_rel: f64) -> Result<SingularSystem> {
    let sys = decompose(k, 0.0)?;
    let largest = sys.values.first().copied().unwrap_or(0.0);
    Ok(sys.with_epsilon(epsilon_rel * largest))
}

/// Regularized incident field on the hologram plane for a sensor-plane target.
pub fn synthesize_incident(sys: &SingularSystem, target: &ComplexField) -> Result<ComplexField> {
    let n = sys.output_vectors.nrows();
    if target.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "target has {} samples, sensor has {n}",
            target.len()
        )));
    }
    if sys.retained == 0 {
        return Err(Error::EmptySpectrum {
            epsilon: sys.epsilon,
            largest: sys.values.first().copied().unwrap_or(0.0),
        });
    }
    let m = sys.input_vectors.nrows();
    let mut out = vec![C64::new(0.0, 0.0); m];
    for p in 0..sys.retained {
        let mut proj = C64::new(0.0, 0.0);
        for i in 0..n {
            proj += sys.output_vectors[(i, p)].conj() * target.values[i];
        }
        let coeff = proj / sys.values[p];
        for (j, o) in out.iter_mut().enumerate() {
            *o += sys.input_vectors[(j, p)] * coeff;
        }
    }
    Ok(ComplexField::new(out, GeometryTag::Hologram))
}
