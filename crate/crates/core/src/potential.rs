//! Code potential energy
//!
//! `h(x) = α Σ_j (x_j² − 1)² + β Σ_i (Π_{j∈A(i)} x_j − 1)²` is non-negative
//! and vanishes exactly on the bipolar codewords. The production gradient uses
//! the log/sign vectorized form; [`potential_gradient_naive`] is the explicit
//! product-rule version kept as a test oracle.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codes::ParityCheckMatrix;

#[derive(Debug, Error, PartialEq)]
pub enum PotentialError {
    #[error("length mismatch: expected {expected}, got {got}")]
    Length { expected: usize, got: usize },
    #[error("invalid potential parameter {name} = {value}")]
    Param { name: &'static str, value: f64 },
    #[error("bmod of non-finite value {0}")]
    NonFinite(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialParams {
    pub alpha: f64,
    pub beta: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon_clamp: f64,
}

fn default_epsilon() -> f64 {
    1e-8
}

impl Default for PotentialParams {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
            epsilon_clamp: default_epsilon(),
        }
    }
}

impl PotentialParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self, PotentialError> {
        let p = Self {
            alpha,
            beta,
            ..Self::default()
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), PotentialError> {
        for (name, value) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("epsilon_clamp", self.epsilon_clamp),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(PotentialError::Param { name, value });
            }
        }
        Ok(())
    }
}

/// Real remainder modulo 2: `a − 2⌊a/2⌋ ∈ [0, 2)`.
pub fn bmod(a: f64) -> Result<f64, PotentialError> {
    if !a.is_finite() {
        return Err(PotentialError::NonFinite(a));
    }
    Ok(a - 2.0 * (a / 2.0).floor())
}

/// sgn with sgn(0) = +1.
#[inline]
pub fn sign(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

fn check_len(x: &[f64], h: &ParityCheckMatrix) -> Result<(), PotentialError> {
    if x.len() != h.n() {
        return Err(PotentialError::Length {
            expected: h.n(),
            got: x.len(),
        });
    }
    Ok(())
}

pub fn potential_energy(
    x: &[f64],
    h: &ParityCheckMatrix,
    p: &PotentialParams,
) -> Result<f64, PotentialError> {
    check_len(x, h)?;
    let bipolar: f64 = x.iter().map(|&v| (v * v - 1.0).powi(2)).sum();
    let parity: f64 = (0..h.m())
        .map(|i| {
            let prod: f64 = h.row_support(i).iter().map(|&j| x[j]).product();
            (prod - 1.0).powi(2)
        })
        .sum();
    Ok(p.alpha * bipolar + p.beta * parity)
}

/// Per-row parity products `d = d_sgn ⊙ d_abs` where
/// `d_abs = exp(H ln|x|)` and `d_sgn = 1 − 2 bmod(H (1 − sgn x)/2)`.
/// Magnitudes below `epsilon` are clamped to `epsilon`.
pub fn parity_products(x: &[f64], h: &ParityCheckMatrix, epsilon: f64) -> Vec<f64> {
    let log_abs: Vec<f64> = x.iter().map(|&v| v.abs().max(epsilon).ln()).collect();
    let negatives: Vec<f64> = x.iter().map(|&v| (1.0 - sign(v)) / 2.0).collect();
    (0..h.m())
        .map(|i| {
            let support = h.row_support(i);
            let d_abs = support.iter().map(|&j| log_abs[j]).sum::<f64>().exp();
            let count: f64 = support.iter().map(|&j| negatives[j]).sum();
            // count is a small non-negative integer, so bmod cannot fail here.
            let d_sgn = 1.0 - 2.0 * (count - 2.0 * (count / 2.0).floor());
            d_sgn * d_abs
        })
        .collect()
}

/// Gradient of the bipolar term alone: `4α(x⊙x − 1)⊙x`.
pub fn bipolar_gradient(x: &[f64], alpha: f64) -> Vec<f64> {
    x.iter().map(|&v| 4.0 * alpha * (v * v - 1.0) * v).collect()
}

/// Vectorized gradient `4α(x⊙x − 1)⊙x + 2β Hᵀ(d⊙d − d)/x`.
pub fn potential_gradient(
    x: &[f64],
    h: &ParityCheckMatrix,
    p: &PotentialParams,
) -> Result<Vec<f64>, PotentialError> {
    check_len(x, h)?;
    let d = parity_products(x, h, p.epsilon_clamp);
    let row_terms: Vec<f64> = d.iter().map(|&di| di * di - di).collect();
    let mut grad = bipolar_gradient(x, p.alpha);
    for (j, (g, &xj)) in grad.iter_mut().zip(x).enumerate() {
        let back: f64 = h.col_support(j).iter().map(|&i| row_terms[i]).sum();
        let denom = sign(xj) * xj.abs().max(p.epsilon_clamp);
        *g += 2.0 * p.beta * back / denom;
    }
    Ok(grad)
}

/// Term-by-term product-rule gradient. No logs or divisions.
pub fn potential_gradient_naive(
    x: &[f64],
    h: &ParityCheckMatrix,
    p: &PotentialParams,
) -> Result<Vec<f64>, PotentialError> {
    check_len(x, h)?;
    Ok((0..h.n())
        .map(|j| {
            let parity: f64 = h
                .col_support(j)
                .iter()
                .map(|&i| {
                    let support = h.row_support(i);
                    let full: f64 = support.iter().map(|&l| x[l]).product();
                    let without: f64 = support
                        .iter()
                        .filter(|&&l| l != j)
                        .map(|&l| x[l])
                        .product();
                    (full - 1.0) * without
                })
                .sum();
            4.0 * p.alpha * (x[j] * x[j] - 1.0) * x[j] + 2.0 * p.beta * parity
        })
        .collect())
}
