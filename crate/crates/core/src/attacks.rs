//! Wrong-key attack scenarios scored by SSIM.
//!
//! Both attacks decrypt through [`Encryptor::decrypt_with_key`], which skips
//! credential checks: the attacker is assumed to hold a leaked or guessed key
//! together with the ciphertext and the scattering matrices.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::holography::CiphertextHologram;
use crate::keyring::{phase_coefficient, UserKey};
use crate::metrics::{ssim, SsimParams};
use crate::protocol::{Encryptor, PlaintextImage};
use crate::{seed, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub victim: u32,
    pub attacker: Option<u32>,
    pub subset: Vec<usize>,
    /// Trial key coefficients as `[re, im]`.
    pub coefficients: Vec<[f64; 2]>,
    pub ssim: f64,
    /// Where the reconstruction was written, if it was.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackSummary {
    pub max_ssim: f64,
    /// Correct-key SSIM; the smallest one when several victims are attacked.
    pub correct_ssim: f64,
    /// `correct_ssim / max_ssim`.
    pub separation_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub scenario: String,
    pub trials: Vec<TrialRecord>,
    pub summary: AttackSummary,
    /// Reconstructions in trial order; not serialized.
    #[serde(skip)]
    pub reconstructions: Vec<PlaintextImage>,
}

impl AttackReport {
    fn assemble(
        scenario: &str,
        trials: Vec<TrialRecord>,
        reconstructions: Vec<PlaintextImage>,
        correct_ssim: f64,
    ) -> Self {
        let max_ssim = trials
            .iter()
            .map(|t| t.ssim)
            .fold(f64::NEG_INFINITY, f64::max);
        Self {
            scenario: scenario.to_string(),
            trials,
            summary: AttackSummary {
                max_ssim,
                correct_ssim,
                separation_ratio: correct_ssim / max_ssim,
            },
            reconstructions,
        }
    }

    /// `trial,victim,attacker,c1_re,c1_im,...,ssim`.
    pub fn to_csv(&self) -> String {
        let width = self
            .trials
            .iter()
            .map(|t| t.coefficients.len())
            .max()
            .unwrap_or(0);
        let mut out = String::from("trial,victim,attacker");
        for i in 1..=width {
            write!(out, ",c{i}_re,c{i}_im").unwrap();
        }
        out.push_str(",ssim\n");
        for t in &self.trials {
            write!(out, "{},{},", t.trial, t.victim).unwrap();
            if let Some(a) = t.attacker {
                write!(out, "{a}").unwrap();
            }
            for i in 0..width {
                match t.coefficients.get(i) {
                    Some([re, im]) => write!(out, ",{re},{im}").unwrap(),
                    None => out.push_str(",,"),
                }
            }
            writeln!(out, ",{}", t.ssim).unwrap();
        }
        out
    }
}

/// A user's issued ciphertext with the key and plaintext behind it.
#[derive(Debug, Clone, Copy)]
pub struct Victim<'a> {
    pub ciphertext: &'a CiphertextHologram,
    pub plaintext: &'a PlaintextImage,
    pub key: &'a UserKey,
}

fn coefficient_pairs(key: &UserKey) -> Vec<[f64; 2]> {
    key.coefficients.iter().map(|c| [c.re, c.im]).collect()
}

fn score(
    enc: &Encryptor,
    ct: &CiphertextHologram,
    key: &UserKey,
    plaintext: &PlaintextImage,
    params: &SsimParams,
) -> Result<(f64, PlaintextImage)> {
    let out = enc.decrypt_with_key(ct, key)?;
    Ok((ssim(&out, plaintext, params)?, out))
}

/// Decrypts every victim's ciphertext with every other victim's key.
pub fn cross_user_attack(
    enc: &Encryptor,
    victims: &[Victim<'_>],
    params: &SsimParams,
) -> Result<AttackReport> {
    if victims.len() < 2 {
        return Err(Error::InsufficientUsers(victims.len()));
    }
    let mut correct = f64::INFINITY;
    for v in victims {
        correct = correct.min(score(enc, v.ciphertext, v.key, v.plaintext, params)?.0);
    }
    let mut trials = Vec::new();
    let mut images = Vec::new();
    for v in victims {
        for a in victims {
            if std::ptr::eq(v, a) {
                continue;
            }
            let (s, img) = score(enc, v.ciphertext, a.key, v.plaintext, params)?;
            trials.push(TrialRecord {
                trial: trials.len(),
                victim: v.key.recipient,
                attacker: Some(a.key.recipient),
                subset: a.key.subset.clone(),
                coefficients: coefficient_pairs(a.key),
                ssim: s,
                image: None,
            });
            images.push(img);
        }
    }
    Ok(AttackReport::assemble(
        "cross_user",
        trials,
        images,
        correct,
    ))
}

/// Keys with the correct support and fresh unit-phase coefficients.
pub fn random_trial_keys(
    correct: &UserKey,
    n_trials: usize,
    seed_value: u64,
) -> Result<Vec<UserKey>> {
    (0..n_trials)
        .map(|t| {
            let mut rng = seed::rng(seed::derive(seed_value, "attack", &[t as u64]));
            let coefficients = correct
                .subset
                .iter()
                .map(|_| phase_coefficient(1.0 - 2.0 * rng.random::<f64>()))
                .collect();
            correct.with_coefficients(coefficients)
        })
        .collect()
}

/// Brute force with known states and subset but guessed coefficients.
pub fn random_key_attack(
    enc: &Encryptor,
    victim: Victim<'_>,
    n_trials: usize,
    seed_value: u64,
    params: &SsimParams,
) -> Result<AttackReport> {
    let keys = random_trial_keys(victim.key, n_trials, seed_value)?;
    trial_key_attack(enc, victim, &keys, params)
}

/// Scores caller-supplied trial keys against `victim`.
pub fn trial_key_attack(
    enc: &Encryptor,
    victim: Victim<'_>,
    keys: &[UserKey],
    params: &SsimParams,
) -> Result<AttackReport> {
    if keys.is_empty() {
        return Err(Error::InvalidConfig("at least one attack trial".into()));
    }
    let (correct, _) = score(enc, victim.ciphertext, victim.key, victim.plaintext, params)?;
    let mut trials = Vec::with_capacity(keys.len());
    let mut images = Vec::with_capacity(keys.len());
    for (t, key) in keys.iter().enumerate() {
        let (s, img) = score(enc, victim.ciphertext, key, victim.plaintext, params)?;
        trials.push(TrialRecord {
            trial: t,
            victim: victim.key.recipient,
            attacker: None,
            subset: key.subset.clone(),
            coefficients: coefficient_pairs(key),
            ssim: s,
            image: None,
        });
        images.push(img);
    }
    Ok(AttackReport::assemble(
        "random_key",
        trials,
        images,
        correct,
    ))
}

/// Phase of `a` relative to `b`, wrapped to `[0, π]`.
pub fn wrapped_phase_distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = (a[1].atan2(a[0]) - b[1].atan2(b[0])).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

/// Per-trial, per-component phase distance to the correct key.
pub fn key_proximity_analysis(report: &AttackReport, correct: &UserKey) -> Result<Vec<Vec<f64>>> {
    let reference = coefficient_pairs(correct);
    report
        .trials
        .iter()
        .map(|t| {
            if t.subset != correct.subset || t.coefficients.len() != reference.len() {
                return Err(Error::SubsetMismatch {
                    trial: t.subset.clone(),
                    reference: correct.subset.clone(),
                });
            }
            Ok(t.coefficients
                .iter()
                .zip(&reference)
                .map(|(a, b)| wrapped_phase_distance(*a, *b))
                .collect())
        })
        .collect()
}
