//! Explicit finite differences for `u_t = λ u_xx` on `[0, L]` with zero
//! Dirichlet boundaries.
//!
//! Only the `n_x − 1` interior points are stored; the two boundary cells are
//! implicit zeros. With zero boundaries the one-step operator is a symmetric
//! tridiagonal matrix, so the adjoint of `n_t` steps is the same `n_t` steps.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum HeatError {
    #[error("grid parameter {name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("Courant number {0} outside the stable range [0, 1/2]")]
    Unstable(f64),
    #[error("n_x must be at least 3, got {0}")]
    TooFewCells(usize),
    #[error("length mismatch: expected {expected}, got {got}")]
    Length { expected: usize, got: usize },
    #[error("sensor index {index} outside 0..{len}")]
    Sensor { index: usize, len: usize },
}

/// Geometry of the space-time grid, as supplied by a config file.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatGridParams {
    pub lambda: f64,
    pub h: f64,
    pub ell: f64,
    pub n_x: usize,
    pub n_t: usize,
}

/// A validated heat grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeatGrid {
    params: HeatGridParams,
    courant: f64,
}

/// `c = λh/ℓ²`.
pub fn courant(lambda: f64, h: f64, ell: f64) -> Result<f64, HeatError> {
    for (name, value) in [("lambda", lambda), ("h", h), ("ell", ell)] {
        if !(value > 0.0 && value.is_finite()) {
            return Err(HeatError::NonPositive { name, value });
        }
    }
    Ok(lambda * h / (ell * ell))
}

impl HeatGrid {
    pub fn new(params: HeatGridParams) -> Result<Self, HeatError> {
        let c = courant(params.lambda, params.h, params.ell)?;
        if c > 0.5 {
            return Err(HeatError::Unstable(c));
        }
        if params.n_x < 3 {
            return Err(HeatError::TooFewCells(params.n_x));
        }
        Ok(Self { params, courant: c })
    }

    pub fn params(&self) -> &HeatGridParams {
        &self.params
    }

    pub fn courant(&self) -> f64 {
        self.courant
    }

    pub fn n_x(&self) -> usize {
        self.params.n_x
    }

    pub fn n_t(&self) -> usize {
        self.params.n_t
    }

    pub fn ell(&self) -> f64 {
        self.params.ell
    }

    /// Horizon `T = n_t·h`.
    pub fn horizon(&self) -> f64 {
        self.params.n_t as f64 * self.params.h
    }

    /// Domain length `L = n_x·ℓ`.
    pub fn length(&self) -> f64 {
        self.params.n_x as f64 * self.params.ell
    }

    /// Number of stored interior samples.
    pub fn interior_len(&self) -> usize {
        self.params.n_x - 1
    }

    /// Spatial coordinate of storage index `k` (interior point `k + 1`).
    pub fn coordinate(&self, k: usize) -> f64 {
        (k + 1) as f64 * self.params.ell
    }

    /// Storage index of the interior grid point nearest `x`, if any.
    pub fn nearest_index(&self, x: f64) -> Option<usize> {
        let point = (x / self.params.ell).round();
        if point >= 1.0 && point <= (self.params.n_x - 1) as f64 {
            Some(point as usize - 1)
        } else {
            None
        }
    }

    /// `n_t` explicit steps from `u0`.
    pub fn solve(&self, u0: &[f64]) -> Result<Vec<f64>, HeatError> {
        self.check_len(u0.len())?;
        Ok(self.propagate(u0.to_vec()))
    }

    fn propagate(&self, mut u: Vec<f64>) -> Vec<f64> {
        let mut scratch = vec![0.0; u.len()];
        for _ in 0..self.params.n_t {
            fdm_step_into(&u, self.courant, &mut scratch);
            std::mem::swap(&mut u, &mut scratch);
        }
        u
    }

    fn check_len(&self, len: usize) -> Result<(), HeatError> {
        if len != self.interior_len() {
            return Err(HeatError::Length {
                expected: self.interior_len(),
                got: len,
            });
        }
        Ok(())
    }

    /// `∇_{u0} ‖y − S·solve(u0)‖²` where `S` picks the `sensors` entries.
    ///
    /// Returns the gradient and the squared error at `u0`, which the decoder
    /// records for free.
    pub fn input_gradient(
        &self,
        u0: &[f64],
        y: &[f64],
        sensors: &[usize],
    ) -> Result<(Vec<f64>, f64), HeatError> {
        self.check_len(u0.len())?;
        if y.len() != sensors.len() {
            return Err(HeatError::Length {
                expected: sensors.len(),
                got: y.len(),
            });
        }
        let len = self.interior_len();
        if let Some(&index) = sensors.iter().find(|&&s| s >= len) {
            return Err(HeatError::Sensor { index, len });
        }
        let r = self.propagate(u0.to_vec());
        let mut adjoint = vec![0.0; len];
        let mut loss = 0.0;
        for (&s, &yi) in sensors.iter().zip(y) {
            let residual = r[s] - yi;
            loss += residual * residual;
            adjoint[s] += 2.0 * residual;
        }
        Ok((self.propagate(adjoint), loss))
    }
}

/// One interior update `(1 − 2c)u_k + c(u_{k−1} + u_{k+1})` with zero
/// values outside the stored range.
pub fn fdm_step(u: &[f64], c: f64) -> Vec<f64> {
    let mut out = vec![0.0; u.len()];
    fdm_step_into(u, c, &mut out);
    out
}

fn fdm_step_into(u: &[f64], c: f64, out: &mut [f64]) {
    let n = u.len();
    let centre = 1.0 - 2.0 * c;
    for k in 0..n {
        let left = if k > 0 { u[k - 1] } else { 0.0 };
        let right = if k + 1 < n { u[k + 1] } else { 0.0 };
        out[k] = centre * u[k] + c * (left + right);
    }
}
