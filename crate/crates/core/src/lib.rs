//! Multiuser image encryption over dynamic scattering channels.
//!
//! A scattering medium is modelled as an aggregate of point scatterers whose
//! potentials change from one dynamic state to the next. Each state yields a
//! scattering matrix mapping the hologram plane onto the sensor plane
//! ([`foldylax`]). A user pair receives a secret linear combination of a
//! subset of those matrices ([`keyring`]); the plaintext image is encoded as
//! the hologram of the incident field that the combined matrix maps onto the
//! image ([`inversion`], [`holography`]). Decryption recombines the per-state
//! fields with the same coefficients ([`protocol`]), and [`attacks`] scores
//! wrong-key reconstructions with SSIM ([`metrics`]).
//!
//! All lengths are in units of the wavelength. Fields, images and matrices use
//! one global pixel order: row-major with x varying fastest.

pub mod attacks;
pub mod error;
pub mod foldylax;
pub mod holography;
pub mod inversion;
pub mod keyring;
pub mod metrics;
pub mod protocol;
pub mod samples;
pub mod scene;
pub mod seed;
pub mod store;
pub mod wavefield;

pub use error::{Error, ErrorKind, Result};

/// Complex double, shared with `faer`.
pub type C64 = num_complex::Complex64;

/// A point in the simulation frame `(x, y, z)`; `y` is the propagation axis.
pub type Point3 = [f64; 3];

/// Dense complex matrix.
pub type CMat = faer::Mat<C64>;

/// Caps the worker threads used by dense linear algebra; `0` means one per
/// core. Without the `parallel` feature everything runs sequentially.
pub fn set_threads(threads: usize) {
    #[cfg(feature = "parallel")]
    {
        let n = if threads == 0 {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        } else {
            threads
        };
        faer::set_global_parallelism(if n == 1 {
            faer::Par::Seq
        } else {
            faer::Par::rayon(n)
        });
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
}
