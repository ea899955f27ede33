//! Image-quality scores: SSIM, MSE and PSNR.

use serde::{Deserialize, Serialize};

use crate::protocol::PlaintextImage;
use crate::{Error, Result};

/// SSIM configuration: Gaussian window, dynamic range and stabilizers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsimParams {
    /// Odd window side in pixels.
    pub window: usize,
    pub sigma: f64,
    pub dynamic_range: f64,
    pub k1: f64,
    pub k2: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        Self {
            window: 11,
            sigma: 1.5,
            dynamic_range: 1.0,
            k1: 0.01,
            k2: 0.03,
        }
    }
}

impl SsimParams {
    fn validate(&self) -> Result<()> {
        if self.window < 3 || self.window % 2 == 0 {
            return Err(Error::InvalidConfig(format!(
                "SSIM window {} must be odd and at least 3",
                self.window
            )));
        }
        if !(self.sigma > 0.0 && self.dynamic_range > 0.0 && self.k1 > 0.0 && self.k2 > 0.0) {
            return Err(Error::InvalidConfig(
                "SSIM sigma, dynamic range and stabilizers must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Normalized 1-D Gaussian taps; the 2-D window is their outer product.
    pub fn taps(&self) -> Vec<f64> {
        let c = (self.window / 2) as f64;
        let raw: Vec<f64> = (0..self.window)
            .map(|i| {
                let d = i as f64 - c;
                (-d * d / (2.0 * self.sigma * self.sigma)).exp()
            })
            .collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|v| v / total).collect()
    }

    pub fn stabilizers(&self) -> (f64, f64) {
        let c1 = (self.k1 * self.dynamic_range).powi(2);
        let c2 = (self.k2 * self.dynamic_range).powi(2);
        (c1, c2)
    }
}

fn check_dims(a: &PlaintextImage, b: &PlaintextImage) -> Result<()> {
    if a.width != b.width || a.height != b.height {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            a.width, a.height, b.width, b.height
        )));
    }
    Ok(())
}

/// Mean structural similarity over all fully contained windows.
pub fn ssim(a: &PlaintextImage, b: &PlaintextImage, params: &SsimParams) -> Result<f64> {
    check_dims(a, b)?;
    params.validate()?;
    let (w, h, win) = (a.width, a.height, params.window);
    if win > w || win > h {
        return Err(Error::WindowTooLarge {
            window: win,
            width: w,
            height: h,
        });
    }
    let taps = params.taps();
    let (x, y) = (&a.pixels, &b.pixels);
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(y).map(|(p, q)| p * q).collect();

    let mu_x = filter_valid(x, w, h, &taps);
    let mu_y = filter_valid(y, w, h, &taps);
    let m_xx = filter_valid(&xx, w, h, &taps);
    let m_yy = filter_valid(&yy, w, h, &taps);
    let m_xy = filter_valid(&xy, w, h, &taps);

    let (c1, c2) = params.stabilizers();
    let mut total = 0.0;
    for i in 0..mu_x.len() {
        let (mx, my) = (mu_x[i], mu_y[i]);
        let vx = m_xx[i] - mx * mx;
        let vy = m_yy[i] - my * my;
        let cov = m_xy[i] - mx * my;
        total +=
            ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
    }
    Ok(total / mu_x.len() as f64)
}

/// Separable correlation with `taps`, keeping only fully covered outputs.
fn filter_valid(img: &[f64], w: usize, h: usize, taps: &[f64]) -> Vec<f64> {
    let n = taps.len();
    let (ow, oh) = (w + 1 - n, h + 1 - n);
    let mut rows = vec![0.0; ow * h];
    for r in 0..h {
        let line = &img[r * w..(r + 1) * w];
        for c in 0..ow {
            rows[r * ow + c] = taps.iter().zip(&line[c..c + n]).map(|(t, v)| t * v).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for r in 0..oh {
        for c in 0..ow {
            out[r * ow + c] = taps
                .iter()
                .enumerate()
                .map(|(k, t)| t * rows[(r + k) * ow + c])
                .sum();
        }
    }
    out
}

/// Mean squared error and PSNR in dB; PSNR is `+inf` when the images match.
pub fn mse_psnr(a: &PlaintextImage, b: &PlaintextImage, dynamic_range: f64) -> Result<(f64, f64)> {
    check_dims(a, b)?;
    let mse = a
        .pixels
        .iter()
        .zip(&b.pixels)
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        / a.pixels.len() as f64;
    let psnr = if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (dynamic_range * dynamic_range / mse).log10()
    };
    Ok((mse, psnr))
}

/// Affine map of `values` onto `[0, 1]`; a constant input maps to zeros.
pub fn normalize_min_max(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    if !(span > 0.0) {
        return vec![0.0; values.len()];
    }
    values
        .iter()
        .map(|v| ((v - lo) / span).clamp(0.0, 1.0))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn image(w: usize, h: usize, pixels: Vec<f64>) -> PlaintextImage {
        PlaintextImage::new(w, h, pixels, "test").unwrap()
    }

    fn random_image(w: usize, h: usize, seed: u64) -> PlaintextImage {
        let mut rng = crate::seed::rng(seed);
        image(w, h, (0..w * h).map(|_| rng.random::<f64>()).collect())
    }

    #[test]
    fn identical_images_score_one() {
        let a = random_image(32, 32, 1);
        let s = ssim(&a, &a, &SsimParams::default()).unwrap();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn equal_constant_images_score_one() {
        let a = image(16, 16, vec![0.4; 256]);
        assert!((ssim(&a, &a, &SsimParams::default()).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn window_must_fit() {
        let a = random_image(8, 8, 1);
        assert!(matches!(
            ssim(&a, &a, &SsimParams::default()),
            Err(Error::WindowTooLarge { .. })
        ));
    }

    #[test]
    fn even_window_is_rejected() {
        let a = random_image(8, 8, 1);
        let params = SsimParams {
            window: 4,
            ..SsimParams::default()
        };
        assert!(ssim(&a, &a, &params).is_err());
    }

    #[test]
    fn dimension_mismatch() {
        let a = random_image(12, 12, 1);
        let b = random_image(12, 13, 1);
        assert!(matches!(
            ssim(&a, &b, &SsimParams::default()),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(mse_psnr(&a, &b, 1.0).is_err());
    }

    #[test]
    fn mse_identical_images() {
        let a = random_image(5, 4, 3);
        let (mse, psnr) = mse_psnr(&a, &a, 1.0).unwrap();
        assert_eq!(mse, 0.0);
        assert_eq!(psnr, f64::INFINITY);
    }

    #[test]
    fn mse_constant_offset() {
        let a = image(4, 4, vec![0.2; 16]);
        let b = image(4, 4, vec![0.3; 16]);
        let (mse, psnr) = mse_psnr(&a, &b, 1.0).unwrap();
        assert!((mse - 0.01).abs() < 1e-15);
        assert!((psnr - 20.0).abs() < 1e-12);
    }

    #[test]
    fn mse_matches_double_loop() {
        let (a, b) = (random_image(9, 7, 10), random_image(9, 7, 11));
        let mut acc = 0.0;
        for r in 0..7 {
            for c in 0..9 {
                let d = a.pixels[r * 9 + c] - b.pixels[r * 9 + c];
                acc += d * d;
            }
        }
        let (mse, _) = mse_psnr(&a, &b, 1.0).unwrap();
        assert!((mse - acc / 63.0).abs() <= 1e-14);
    }

    #[test]
    fn min_max_normalization() {
        assert_eq!(normalize_min_max(&[2.0, 4.0, 3.0]), vec![0.0, 1.0, 0.5]);
        assert_eq!(normalize_min_max(&[5.0, 5.0]), vec![0.0, 0.0]);
    }
}
