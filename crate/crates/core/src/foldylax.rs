//! Point-scatterer aggregates and their Foldy-Lax scattering matrices.
//!
//! For particles at `r_p` with potentials `τ_p`, the exciting fields `E`
//! satisfy `(I - G_pp diag(τ)) E = ψ_inc`, where `G_pp` is the
//! particle-to-particle Green's matrix with a zero diagonal (no self term).
//! The scattered field at an observation point `R` is
//! `Σ_p green(r_p, R) τ_p E_p`, so the hologram-to-sensor scattering matrix is
//!
//! ```text
//! K = G_out · diag(τ) · (I - G_pp diag(τ))⁻¹ · G_in
//! ```
//!
//! The direct hologram-to-sensor path is not part of `K`.

use faer::linalg::solvers::{PartialPivLu, Solve};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::scene::{MediumSpec, Scene};
use crate::wavefield::{distance, green_at, norm, propagation_matrix, ComplexField, GeometryTag};
use crate::{seed, CMat, Error, Point3, Result, C64};

/// Smallest acceptable `min |U_ii| / max |U_ii|` of the LU factor.
const PIVOT_RATIO_FLOOR: f64 = 1e-13;
/// Acceptable relative residual of the Foldy-Lax solve.
const RESIDUAL_RTOL: f64 = 1e-10;
/// Columns spot-checked for the residual when solving many right-hand sides.
const RESIDUAL_PROBES: usize = 4;

/// One dynamic configuration of the medium.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatteringState {
    /// State label `l`, starting at 1.
    pub id: usize,
    pub seed: u64,
    pub positions: Vec<Point3>,
    pub potentials: Vec<C64>,
}

impl ScatteringState {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    fn validate(&self) -> Result<()> {
        if self.positions.len() != self.potentials.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} positions but {} potentials",
                self.positions.len(),
                self.potentials.len()
            )));
        }
        Ok(())
    }
}

/// Where a scattering matrix came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    State(usize),
    Key(String),
}

/// Dense `N x M` map from hologram-plane samples to scattered sensor samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringMatrix {
    pub entries: CMat,
    /// Fingerprint of the scene the matrix was computed for.
    pub scene: String,
    pub provenance: Provenance,
}

impl ScatteringMatrix {
    pub fn shape(&self) -> (usize, usize) {
        (self.entries.nrows(), self.entries.ncols())
    }

    /// `K ψ` for a hologram-plane field.
    pub fn apply(&self, field: &ComplexField) -> Result<ComplexField> {
        if field.len() != self.entries.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "field of length {} applied to a {}x{} matrix",
                field.len(),
                self.entries.nrows(),
                self.entries.ncols()
            )));
        }
        let out = &self.entries * field.to_column();
        Ok(ComplexField::from_column(&out, GeometryTag::Sensor))
    }
}

/// Short stable fingerprint of a scene, used to tag matrices.
pub fn scene_fingerprint(scene: &Scene) -> String {
    let bytes = serde_json::to_vec(scene).expect("scene serializes");
    seed::sha256_hex(&bytes)[..16].to_string()
}

/// Samples state `state_index` of `medium`: grid positions (optionally
/// jittered) and potentials drawn i.i.d. uniform on `[tau_min, tau_max]`.
pub fn sample_state(medium: &MediumSpec, state_index: usize, seed: u64) -> ScatteringState {
    let mut rng = seed::rng(seed::derive(seed, "state", &[state_index as u64]));
    let cell = medium.cell();
    let positions = medium
        .grid_points()
        .into_iter()
        .map(|mut p| {
            if medium.jitter > 0.0 {
                for (c, w) in p.iter_mut().zip([cell[0], cell[1], cell[2]]) {
                    *c += medium.jitter * w * (rng.random::<f64>() - 0.5);
                }
            }
            p
        })
        .collect::<Vec<_>>();
    let potentials = (0..positions.len())
        .map(|_| C64::new(rng.random_range(medium.tau_min..=medium.tau_max), 0.0))
        .collect();
    ScatteringState {
        id: state_index,
        seed,
        positions,
        potentials,
    }
}

/// `G_pp`: particle-to-particle Green's matrix with zero diagonal.
pub fn coupling_matrix(state: &ScatteringState, k: f64) -> Result<CMat> {
    state.validate()?;
    let pos = &state.positions;
    let n = pos.len();
    for i in 0..n {
        for j in (i + 1)..n {
            if distance(&pos[i], &pos[j]) == 0.0 {
                return Err(Error::CoincidentPoints {
                    source_index: j,
                    observation_index: i,
                });
            }
        }
    }
    Ok(CMat::from_fn(n, n, |i, j| {
        if i == j {
            C64::new(0.0, 0.0)
        } else {
            green_at(distance(&pos[j], &pos[i]), k)
        }
    }))
}

/// `I - G_pp diag(τ)`.
pub fn foldy_lax_operator(state: &ScatteringState, k: f64) -> Result<CMat> {
    let mut a = coupling_matrix(state, k)?;
    let n = a.nrows();
    for j in 0..n {
        let tau = state.potentials[j];
        for i in 0..n {
            a[(i, j)] = -a[(i, j)] * tau;
        }
        a[(j, j)] += C64::new(1.0, 0.0);
    }
    Ok(a)
}

/// Factorized Foldy-Lax system, reusable across right-hand sides.
struct FoldyLaxSystem {
    operator: CMat,
    lu: PartialPivLu<C64>,
}

impl FoldyLaxSystem {
    fn new(state: &ScatteringState, k: f64) -> Result<Self> {
        let operator = foldy_lax_operator(state, k)?;
        let lu = operator.partial_piv_lu();
        let diag = lu.U().diagonal().column_vector();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in 0..diag.nrows() {
            let v = diag[i].norm();
            lo = lo.min(v);
            hi = hi.max(v);
        }
        let ratio = if hi > 0.0 { lo / hi } else { 0.0 };
        if !(ratio >= PIVOT_RATIO_FLOOR) {
            return Err(Error::SingularSystem {
                pivot_ratio: ratio,
                residual: f64::NAN,
            });
        }
        Ok(Self { operator, lu })
    }

    fn residual(&self, x: &CMat, rhs: &CMat, col: usize) -> f64 {
        let r = &self.operator * x.col(col) - rhs.col(col);
        let r: Vec<C64> = (0..r.nrows()).map(|i| r[i]).collect();
        norm(&r)
    }

    /// Solves for every column of `rhs`, refining once if a probed column
    /// misses the residual tolerance.
    fn solve(&self, rhs: &CMat) -> Result<CMat> {
        let mut x = self.lu.solve(rhs);
        let probes = probe_columns(rhs.ncols());
        let worst = |x: &CMat| {
            probes
                .iter()
                .map(|&c| {
                    let b: Vec<C64> = (0..rhs.nrows()).map(|i| rhs[(i, c)]).collect();
                    let scale = norm(&b).max(f64::MIN_POSITIVE);
                    self.residual(x, rhs, c) / scale
                })
                .fold(0.0f64, f64::max)
        };
        let mut res = worst(&x);
        if !(res <= RESIDUAL_RTOL) {
            let r = rhs - &self.operator * &x;
            x += self.lu.solve(&r);
            res = worst(&x);
        }
        if !(res <= RESIDUAL_RTOL) {
            return Err(Error::SingularSystem {
                pivot_ratio: f64::NAN,
                residual: res,
            });
        }
        Ok(x)
    }
}

fn probe_columns(ncols: usize) -> Vec<usize> {
    if ncols <= RESIDUAL_PROBES {
        return (0..ncols).collect();
    }
    (0..RESIDUAL_PROBES)
        .map(|i| i * (ncols - 1) / (RESIDUAL_PROBES - 1))
        .collect()
}

/// Exciting field at each particle for the incident field `incident`.
pub fn solve_exciting_fields(
    state: &ScatteringState,
    incident: &ComplexField,
    k: f64,
) -> Result<ComplexField> {
    if incident.len() != state.len() {
        return Err(Error::DimensionMismatch(format!(
            "incident field has {} samples for {} particles",
            incident.len(),
            state.len()
        )));
    }
    let system = FoldyLaxSystem::new(state, k)?;
    let x = system.solve(&incident.to_column())?;
    Ok(ComplexField::from_column(&x, GeometryTag::Particles))
}

/// Scattering matrix of `state` between the scene's hologram and sensor planes.
pub fn scattering_matrix(state: &ScatteringState, scene: &Scene) -> Result<ScatteringMatrix> {
    let k = scene.wavenumber;
    let g_in = propagation_matrix(
        &scene.hologram_points(),
        &state.positions,
        k,
        GeometryTag::Hologram,
        GeometryTag::Particles,
    )?;
    let g_out = propagation_matrix(
        &state.positions,
        &scene.sensor_points(),
        k,
        GeometryTag::Particles,
        GeometryTag::Sensor,
    )?;
    let system = FoldyLaxSystem::new(state, k)?;
    let mut exciting = system.solve(&g_in.entries)?;
    drop(system);
    for (p, tau) in state.potentials.iter().enumerate() {
        for m in 0..exciting.ncols() {
            exciting[(p, m)] *= tau;
        }
    }
    let entries = &g_out.entries * &exciting;
    Ok(ScatteringMatrix {
        entries,
        scene: scene_fingerprint(scene),
        provenance: Provenance::State(state.id),
    })
}

/// Normalized correlation `|<A, B>| / (|A| |B|)` between two matrices.
pub fn matrix_correlation(a: &CMat, b: &CMat) -> f64 {
    let (mut dot, mut na, mut nb) = (C64::new(0.0, 0.0), 0.0, 0.0);
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let (x, y) = (a[(i, j)], b[(i, j)]);
            dot += x.conj() * y;
            na += x.norm_sqr();
            nb += y.norm_sqr();
        }
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot.norm() / (na.sqrt() * nb.sqrt())
}
