//! User-pair keys, per-block state shuffling and matrix combination.
//!
//! A key selects a subset of the `L` dynamic states and assigns each selected
//! state a complex coefficient; the pair's effective scattering matrix is
//! `K = Σ_l C_l · SM_l`. Key subsets are written in logical state labels
//! `1..=L`. The per-block [`BlockSchedule`] maps logical labels to physical
//! states and stays inside the server.

use std::f64::consts::PI;

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::foldylax::{Provenance, ScatteringMatrix};
use crate::{seed, CMat, Error, Result, C64};

/// How key coefficients are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientMode {
    /// `exp(-jCπ)` with `C` uniform on `(-1, 1]`.
    #[default]
    UnitPhase,
    /// Circular complex Gaussian with unit mean power.
    ComplexNormal,
}

/// Secret key of one user pair for one block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserKey {
    pub sender: u32,
    pub recipient: u32,
    pub block: u64,
    /// Logical state labels, ascending, each in `1..=L`.
    pub subset: Vec<usize>,
    /// One coefficient per subset member, stored as `[re, im]`.
    pub coefficients: Vec<C64>,
    pub key_id: String,
    pub seed: u64,
}

impl UserKey {
    /// Key with unit-modulus coefficients `exp(-j·phase·π)`.
    pub fn from_phases(
        sender: u32,
        recipient: u32,
        block: u64,
        subset: Vec<usize>,
        phases: &[f64],
    ) -> Result<Self> {
        let coefficients = phases.iter().map(|&c| phase_coefficient(c)).collect();
        Self::from_coefficients(sender, recipient, block, subset, coefficients)
    }

    pub fn from_coefficients(
        sender: u32,
        recipient: u32,
        block: u64,
        subset: Vec<usize>,
        coefficients: Vec<C64>,
    ) -> Result<Self> {
        let mut material = Vec::new();
        for c in &coefficients {
            material.extend_from_slice(&c.re.to_le_bytes());
            material.extend_from_slice(&c.im.to_le_bytes());
        }
        for s in &subset {
            material.extend_from_slice(&(*s as u64).to_le_bytes());
        }
        let seed = seed::hash_u64("explicit-key", &material);
        let key = Self {
            key_id: key_id(sender, recipient, block, seed),
            sender,
            recipient,
            block,
            subset,
            coefficients,
            seed,
        };
        key.check_shape()?;
        Ok(key)
    }

    /// Same support, different coefficients.
    pub fn with_coefficients(&self, coefficients: Vec<C64>) -> Result<Self> {
        Self::from_coefficients(
            self.sender,
            self.recipient,
            self.block,
            self.subset.clone(),
            coefficients,
        )
    }

    fn check_shape(&self) -> Result<()> {
        if self.subset.is_empty() {
            return Err(Error::InvalidKey("empty state subset".into()));
        }
        if self.subset.len() != self.coefficients.len() {
            return Err(Error::InvalidKey(format!(
                "{} states but {} coefficients",
                self.subset.len(),
                self.coefficients.len()
            )));
        }
        if self.subset.contains(&0) {
            return Err(Error::InvalidKey("state labels start at 1".into()));
        }
        let mut sorted = self.subset.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.subset.len() {
            return Err(Error::InvalidKey("repeated state label".into()));
        }
        Ok(())
    }

    /// Checks the key against a block of `states` dynamic states.
    pub fn validate(&self, states: usize) -> Result<()> {
        self.check_shape()?;
        if let Some(&l) = self.subset.iter().find(|&&l| l > states) {
            return Err(Error::InvalidKey(format!(
                "state label {l} outside 1..={states}"
            )));
        }
        Ok(())
    }
}

/// `exp(-j·c·π)`.
pub fn phase_coefficient(c: f64) -> C64 {
    C64::from_polar(1.0, -c * PI)
}

fn key_id(sender: u32, recipient: u32, block: u64, seed: u64) -> String {
    let mut material = Vec::with_capacity(24);
    material.extend_from_slice(&sender.to_le_bytes());
    material.extend_from_slice(&recipient.to_le_bytes());
    material.extend_from_slice(&block.to_le_bytes());
    material.extend_from_slice(&seed.to_le_bytes());
    seed::sha256_hex(&material)[..32].to_string()
}

/// Draws a key with the default unit-phase coefficients.
pub fn generate_key(
    sender: u32,
    recipient: u32,
    block: u64,
    states: usize,
    subset_size: usize,
    seed: u64,
) -> Result<UserKey> {
    generate_key_with(
        sender,
        recipient,
        block,
        states,
        subset_size,
        seed,
        CoefficientMode::UnitPhase,
    )
}

pub fn generate_key_with(
    sender: u32,
    recipient: u32,
    block: u64,
    states: usize,
    subset_size: usize,
    seed: u64,
    mode: CoefficientMode,
) -> Result<UserKey> {
    if subset_size == 0 || subset_size > states {
        return Err(Error::InvalidSubsetSize {
            size: subset_size,
            states,
        });
    }
    let mut rng = seed::rng(seed);
    let mut subset: Vec<usize> = index::sample(&mut rng, states, subset_size)
        .into_iter()
        .map(|i| i + 1)
        .collect();
    subset.sort_unstable();
    let coefficients = (0..subset_size)
        .map(|_| match mode {
            // 1 - u with u in [0, 1) covers (-1, 1]
            CoefficientMode::UnitPhase => phase_coefficient(1.0 - 2.0 * rng.random::<f64>()),
            CoefficientMode::ComplexNormal => {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
            }
        })
        .collect();
    Ok(UserKey {
        sender,
        recipient,
        block,
        subset,
        coefficients,
        key_id: key_id(sender, recipient, block, seed),
        seed,
    })
}

/// Server-side key table indexed by key id, in issue order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct KeyStore {
    keys: Vec<UserKey>,
}

impl KeyStore {
    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// Inserts `key`, replacing any key with the same id.
    pub fn insert(&mut self, key: UserKey) {
        match self.keys.iter_mut().find(|k| k.key_id == key.key_id) {
            Some(slot) => *slot = key,
            None => self.keys.push(key),
        }
    }

    pub fn get(&self, key_id: &str) -> Option<&UserKey> {
        self.keys.iter().find(|k| k.key_id == key_id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &UserKey> {
        self.keys.iter()
    }

    /// Keys issued for `recipient`.
    pub fn for_recipient(&self, recipient: u32) -> impl Iterator<Item = &UserKey> {
        self.keys.iter().filter(move |k| k.recipient == recipient)
    }
}

/// Secret logical-to-physical state assignment for one block.
///
/// Deliberately not serializable and redacted in `Debug`.
#[derive(Clone, PartialEq, Eq)]
pub struct BlockSchedule {
    block: u64,
    permutation: Vec<usize>,
}

impl std::fmt::Debug for BlockSchedule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BlockSchedule")
            .field("block", &self.block)
            .finish_non_exhaustive()
    }
}

impl BlockSchedule {
    pub fn block(&self) -> u64 {
        self.block
    }

    pub fn len(&self) -> usize {
        self.permutation.len()
    }

    pub fn is_empty(&self) -> bool {
        self.permutation.is_empty()
    }

    /// Physical state (0-based) realizing logical label `l` (1-based).
    pub fn resolve(&self, l: usize) -> Option<usize> {
        l.checked_sub(1)
            .and_then(|i| self.permutation.get(i).copied())
    }
}

/// Uniform random permutation of the `states` physical states for `block`.
pub fn shuffle_block(block: u64, states: usize, server_seed: u64) -> BlockSchedule {
    let mut rng = seed::rng(seed::derive(server_seed, "block", &[block]));
    let mut permutation: Vec<usize> = (0..states).collect();
    // Fisher-Yates
    for i in (1..states).rev() {
        let j = rng.random_range(0..=i);
        permutation.swap(i, j);
    }
    BlockSchedule { block, permutation }
}

/// `Σ_l C_l · SM_l` over the key's subset; `matrices[i]` realizes
/// `key.subset[i]`.
pub fn combine_states(matrices: &[&ScatteringMatrix], key: &UserKey) -> Result<ScatteringMatrix> {
    let combined = combine(matrices, &key.coefficients)?;
    Ok(ScatteringMatrix {
        provenance: Provenance::Key(key.key_id.clone()),
        ..combined
    })
}

/// Entrywise linear combination of equally shaped matrices.
pub fn combine(matrices: &[&ScatteringMatrix], coefficients: &[C64]) -> Result<ScatteringMatrix> {
    let Some(first) = matrices.first() else {
        return Err(Error::InvalidKey("no matrices to combine".into()));
    };
    if matrices.len() != coefficients.len() {
        return Err(Error::InvalidKey(format!(
            "{} matrices for {} coefficients",
            matrices.len(),
            coefficients.len()
        )));
    }
    let shape = first.shape();
    for m in matrices {
        if m.shape() != shape {
            return Err(Error::ShapeMismatch {
                expected: shape,
                found: m.shape(),
            });
        }
        if m.scene != first.scene {
            return Err(Error::GeometryMismatch(format!(
                "matrices from scenes {} and {}",
                first.scene, m.scene
            )));
        }
    }
    let mut entries = CMat::zeros(shape.0, shape.1);
    for (m, c) in matrices.iter().zip(coefficients) {
        for j in 0..shape.1 {
            for i in 0..shape.0 {
                entries[(i, j)] += *c * m.entries[(i, j)];
            }
        }
    }
    Ok(ScatteringMatrix {
        entries,
        scene: first.scene.clone(),
        provenance: first.provenance.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::{HashMap, HashSet};

    fn matrix(seed_value: u64, rows: usize, cols: usize) -> ScatteringMatrix {
        let mut rng = seed::rng(seed_value);
        ScatteringMatrix {
            entries: CMat::from_fn(rows, cols, |_, _| {
                C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
            }),
            scene: "test".into(),
            provenance: Provenance::State(seed_value as usize),
        }
    }

    #[test]
    fn user_one_coefficients() {
        let key = UserKey::from_phases(1, 1, 0, vec![1, 2, 3], &[-0.3, 0.7, -0.8]).unwrap();
        let expected = [
            C64::from_polar(1.0, 0.3 * PI),
            C64::from_polar(1.0, -0.7 * PI),
            C64::from_polar(1.0, 0.8 * PI),
        ];
        for (c, e) in key.coefficients.iter().zip(expected) {
            assert!((c - e).norm() < 1e-15);
        }
        key.validate(4).unwrap();
    }

    #[test]
    fn single_state_key() {
        let key = generate_key(1, 2, 0, 1, 1, 42).unwrap();
        assert_eq!(key.subset, vec![1]);
        assert!((key.coefficients[0].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn subset_size_is_checked() {
        assert!(matches!(
            generate_key(1, 1, 0, 4, 5, 1),
            Err(Error::InvalidSubsetSize { size: 5, states: 4 })
        ));
        assert!(matches!(
            generate_key(1, 1, 0, 4, 0, 1),
            Err(Error::InvalidSubsetSize { .. })
        ));
    }

    #[test]
    fn key_shape_is_checked() {
        assert!(UserKey::from_phases(1, 1, 0, vec![1, 1], &[0.1, 0.2]).is_err());
        assert!(UserKey::from_phases(1, 1, 0, vec![0, 1], &[0.1, 0.2]).is_err());
        assert!(UserKey::from_phases(1, 1, 0, vec![1, 2], &[0.1]).is_err());
        let key = UserKey::from_phases(1, 1, 0, vec![1, 5], &[0.1, 0.2]).unwrap();
        assert!(key.validate(4).is_err());
    }

    #[test]
    fn generated_keys_are_deterministic_and_distinct() {
        let a = generate_key(1, 2, 3, 4, 3, 77).unwrap();
        assert_eq!(a, generate_key(1, 2, 3, 4, 3, 77).unwrap());
        let mut ids = HashSet::new();
        for s in 0..500 {
            let key = generate_key(1, 2, 3, 4, 3, s).unwrap();
            key.validate(4).unwrap();
            assert!(ids.insert(key.key_id));
        }
    }

    #[test]
    fn phases_are_uniform() {
        let mut sum = C64::new(0.0, 0.0);
        let mut count = 0;
        for s in 0..2500 {
            let key = generate_key(1, 1, 0, 4, 4, s).unwrap();
            for c in key.coefficients {
                assert!((c.norm() - 1.0).abs() < 1e-12);
                sum += c;
                count += 1;
            }
        }
        assert_eq!(count, 10_000);
        assert!((sum / count as f64).norm() < 0.05);
    }

    #[test]
    fn complex_normal_mode_has_unit_power() {
        let mut power = 0.0;
        let n = 4000;
        for s in 0..n {
            let key = generate_key_with(1, 1, 0, 1, 1, s, CoefficientMode::ComplexNormal).unwrap();
            power += key.coefficients[0].norm_sqr();
        }
        assert!((power / n as f64 - 1.0).abs() < 0.1);
    }

    #[test]
    fn shuffle_single_state_is_identity() {
        assert_eq!(shuffle_block(9, 1, 3).resolve(1), Some(0));
    }

    #[test]
    fn shuffle_is_deterministic_bijection() {
        let a = shuffle_block(5, 6, 1234);
        assert_eq!(a, shuffle_block(5, 6, 1234));
        let mut seen: Vec<usize> = (1..=6).map(|l| a.resolve(l).unwrap()).collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..6).collect::<Vec<_>>());
        assert_eq!(a.resolve(0), None);
        assert_eq!(a.resolve(7), None);
    }

    #[test]
    fn shuffle_is_uniform_over_permutations() {
        let blocks = 10_000u64;
        let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
        for b in 0..blocks {
            let s = shuffle_block(b, 4, 2024);
            let perm: Vec<usize> = (1..=4).map(|l| s.resolve(l).unwrap()).collect();
            *counts.entry(perm).or_default() += 1;
        }
        assert_eq!(counts.len(), 24);
        for (perm, c) in counts {
            let freq = c as f64 / blocks as f64;
            assert!((freq - 1.0 / 24.0).abs() < 0.01, "{perm:?}: {freq}");
        }
    }

    #[test]
    fn schedule_debug_is_redacted() {
        let s = format!("{:?}", shuffle_block(1, 4, 99));
        assert!(!s.contains('['), "{s}");
    }

    #[test]
    fn combine_single_state_unit_coefficient() {
        let m = matrix(1, 3, 4);
        let key = UserKey::from_coefficients(1, 1, 0, vec![1], vec![C64::new(1.0, 0.0)]).unwrap();
        let k = combine_states(&[&m], &key).unwrap();
        assert_eq!(k.entries, m.entries);
        assert_eq!(k.provenance, Provenance::Key(key.key_id));
    }

    #[test]
    fn user_two_combination() {
        let tm: Vec<ScatteringMatrix> = (1..=4).map(|s| matrix(s, 3, 2)).collect();
        let key = UserKey::from_phases(2, 2, 0, vec![1, 2, 4], &[-0.6, 0.2, -0.8]).unwrap();
        let k = combine_states(&[&tm[0], &tm[1], &tm[3]], &key).unwrap();
        let (a, b, c) = (
            phase_coefficient(-0.6),
            phase_coefficient(0.2),
            phase_coefficient(-0.8),
        );
        for j in 0..2 {
            for i in 0..3 {
                let e = a * tm[0].entries[(i, j)]
                    + b * tm[1].entries[(i, j)]
                    + c * tm[3].entries[(i, j)];
                assert!((k.entries[(i, j)] - e).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn combine_scales_linearly() {
        let ms = [matrix(1, 4, 3), matrix(2, 4, 3)];
        let c = vec![C64::new(0.3, -0.4), C64::new(-1.0, 0.2)];
        let c2: Vec<C64> = c.iter().map(|x| x * 2.0).collect();
        let k1 = combine(&[&ms[0], &ms[1]], &c).unwrap();
        let k2 = combine(&[&ms[0], &ms[1]], &c2).unwrap();
        for j in 0..3 {
            for i in 0..4 {
                assert_eq!(k2.entries[(i, j)], k1.entries[(i, j)] * 2.0);
            }
        }
    }

    #[test]
    fn combine_rejects_shape_mismatch() {
        let (a, b) = (matrix(1, 4, 3), matrix(2, 3, 3));
        assert!(matches!(
            combine(&[&a, &b], &[C64::new(1.0, 0.0); 2]),
            Err(Error::ShapeMismatch { .. })
        ));
    }
}
