//! Symmetrized split-step Fourier solver for the normalized NLSE
//!
//! `∂U/∂ξ = −(i s/2) ∂²U/∂τ² + i N² |U|² U`
//!
//! on a periodic τ window. One step of length ℓ is half a dispersion step,
//! a full nonlinear phase rotation, and another half dispersion step. Every
//! sub-step is norm preserving, which gives exact reverse propagation and a
//! cheap reverse-mode gradient.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NlseError {
    #[error("n_tau must be a power of two, got {0}")]
    NotPowerOfTwo(usize),
    #[error("grid parameter {name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("dispersion sign must be +1 or -1, got {0}")]
    Sign(i32),
    #[error("length mismatch: expected {expected}, got {got}")]
    Length { expected: usize, got: usize },
    #[error("sensor index {index} outside 0..{len}")]
    Sensor { index: usize, len: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NlseGridParams {
    /// sgn(β₂).
    pub s_sign: i32,
    /// Nonlinearity coefficient N².
    pub n_sq: f64,
    pub n_tau: usize,
    pub tau_span: f64,
    pub ell_xi: f64,
    pub n_steps: usize,
}

/// A validated grid with cached FFT plans and half-step phase factors.
#[derive(Clone)]
pub struct NlseGrid {
    params: NlseGridParams,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    omega: Vec<f64>,
    half_phase: Vec<Complex64>,
}

impl fmt::Debug for NlseGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NlseGrid").field("params", &self.params).finish()
    }
}

impl NlseGrid {
    pub fn new(params: NlseGridParams) -> Result<Self, NlseError> {
        if params.n_tau < 2 || !params.n_tau.is_power_of_two() {
            return Err(NlseError::NotPowerOfTwo(params.n_tau));
        }
        if params.s_sign != 1 && params.s_sign != -1 {
            return Err(NlseError::Sign(params.s_sign));
        }
        for (name, value) in [("tau_span", params.tau_span), ("ell_xi", params.ell_xi)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(NlseError::NonPositive { name, value });
            }
        }
        if !params.n_sq.is_finite() {
            return Err(NlseError::NonPositive {
                name: "n_sq",
                value: params.n_sq,
            });
        }
        let n = params.n_tau;
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        // Standard FFT ordering: k = 0, 1, …, n/2 − 1, −n/2, …, −1.
        let omega: Vec<f64> = (0..n)
            .map(|k| {
                let signed = if k < n / 2 { k as f64 } else { k as f64 - n as f64 };
                2.0 * std::f64::consts::PI * signed / params.tau_span
            })
            .collect();
        let mut grid = Self {
            params,
            forward,
            inverse,
            omega,
            half_phase: Vec::new(),
        };
        grid.half_phase = grid.dispersion_phase(0.5);
        Ok(grid)
    }

    pub fn params(&self) -> &NlseGridParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.params.n_tau
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn d_tau(&self) -> f64 {
        self.params.tau_span / self.params.n_tau as f64
    }

    /// `ξ_end = n_steps·ℓ`.
    pub fn xi_end(&self) -> f64 {
        self.params.n_steps as f64 * self.params.ell_xi
    }

    /// τ coordinate of sample `k`; the window is `[−span/2, span/2)`.
    pub fn coordinate(&self, k: usize) -> f64 {
        -self.params.tau_span / 2.0 + k as f64 * self.d_tau()
    }

    pub fn nearest_index(&self, tau: f64) -> Option<usize> {
        let k = ((tau + self.params.tau_span / 2.0) / self.d_tau()).round();
        if k >= 0.0 && k < self.params.n_tau as f64 {
            Some(k as usize)
        } else {
            None
        }
    }

    /// Angular frequencies in FFT order.
    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    /// `Σ |U_k|² Δτ`.
    pub fn energy(&self, u: &[Complex64]) -> f64 {
        u.iter().map(Complex64::norm_sqr).sum::<f64>() * self.d_tau()
    }

    /// Spectral factors `exp(i s ω² f ℓ / 2)` for a dispersion step of
    /// length `f·ℓ`.
    pub fn dispersion_phase(&self, fraction: f64) -> Vec<Complex64> {
        let scale = self.params.s_sign as f64 * fraction * self.params.ell_xi / 2.0;
        self.omega
            .iter()
            .map(|&w| Complex64::from_polar(1.0, scale * w * w))
            .collect()
    }

    /// Unitary forward transform.
    pub fn to_spectrum(&self, u: &[Complex64]) -> Vec<Complex64> {
        let mut buf = u.to_vec();
        self.forward.process(&mut buf);
        let norm = 1.0 / (self.params.n_tau as f64).sqrt();
        buf.iter_mut().for_each(|v| *v *= norm);
        buf
    }

    /// Unitary inverse transform.
    pub fn from_spectrum(&self, spectrum: &[Complex64]) -> Vec<Complex64> {
        let mut buf = spectrum.to_vec();
        self.inverse.process(&mut buf);
        let norm = 1.0 / (self.params.n_tau as f64).sqrt();
        buf.iter_mut().for_each(|v| *v *= norm);
        buf
    }

    /// Multiplies the spectrum by `phase` (conjugated when `conjugate`).
    fn apply_spectral(&self, u: &mut [Complex64], phase: &[Complex64], conjugate: bool) {
        self.forward.process(u);
        let norm = 1.0 / self.params.n_tau as f64;
        for (v, p) in u.iter_mut().zip(phase) {
            let p = if conjugate { p.conj() } else { *p };
            *v *= p * norm;
        }
        self.inverse.process(u);
    }

    /// Pointwise rotation `U ← U·exp(i·sign·N²|U|²ℓ)`.
    fn apply_nonlinear(&self, u: &mut [Complex64], sign: f64) {
        let theta = sign * self.params.n_sq * self.params.ell_xi;
        for v in u.iter_mut() {
            *v *= Complex64::from_polar(1.0, theta * v.norm_sqr());
        }
    }

    fn check_len(&self, len: usize) -> Result<(), NlseError> {
        if len != self.params.n_tau {
            return Err(NlseError::Length {
                expected: self.params.n_tau,
                got: len,
            });
        }
        Ok(())
    }

    /// Dispersion over `fraction·ℓ`.
    pub fn dispersion_step(&self, u: &[Complex64], fraction: f64) -> Result<Vec<Complex64>, NlseError> {
        self.check_len(u.len())?;
        let mut out = u.to_vec();
        self.apply_spectral(&mut out, &self.dispersion_phase(fraction), false);
        Ok(out)
    }

    /// One full nonlinear sub-step of length ℓ.
    pub fn nonlinear_step(&self, u: &[Complex64]) -> Result<Vec<Complex64>, NlseError> {
        self.check_len(u.len())?;
        let mut out = u.to_vec();
        self.apply_nonlinear(&mut out, 1.0);
        Ok(out)
    }

    pub fn solve(&self, u0: &[Complex64]) -> Result<Vec<Complex64>, NlseError> {
        self.check_len(u0.len())?;
        let mut u = u0.to_vec();
        for _ in 0..self.params.n_steps {
            self.apply_spectral(&mut u, &self.half_phase, false);
            self.apply_nonlinear(&mut u, 1.0);
            self.apply_spectral(&mut u, &self.half_phase, false);
        }
        Ok(u)
    }

    /// Exact inverse of [`NlseGrid::solve`]: the inverse sub-steps in reverse
    /// order. The nonlinear rotation preserves |U|, so negating its phase
    /// undoes it exactly.
    pub fn reverse_propagate(&self, u: &[Complex64]) -> Result<Vec<Complex64>, NlseError> {
        self.check_len(u.len())?;
        let mut v = u.to_vec();
        for _ in 0..self.params.n_steps {
            self.apply_spectral(&mut v, &self.half_phase, true);
            self.apply_nonlinear(&mut v, -1.0);
            self.apply_spectral(&mut v, &self.half_phase, true);
        }
        Ok(v)
    }

    /// Gradient of `Σ_i |y_i − (S·solve(U0))_i|²` with respect to the real and
    /// imaginary parts of `U0`, packed as `∂/∂Re + i ∂/∂Im`.
    ///
    /// Also returns the loss at `U0`.
    pub fn input_gradient(
        &self,
        u0: &[Complex64],
        y: &[Complex64],
        sensors: &[usize],
    ) -> Result<(Vec<Complex64>, f64), NlseError> {
        self.check_len(u0.len())?;
        if y.len() != sensors.len() {
            return Err(NlseError::Length {
                expected: sensors.len(),
                got: y.len(),
            });
        }
        let n = self.params.n_tau;
        if let Some(&index) = sensors.iter().find(|&&s| s >= n) {
            return Err(NlseError::Sensor { index, len: n });
        }

        // Forward pass, keeping the field entering each nonlinear sub-step.
        let mut tape = Vec::with_capacity(self.params.n_steps);
        let mut u = u0.to_vec();
        for _ in 0..self.params.n_steps {
            self.apply_spectral(&mut u, &self.half_phase, false);
            tape.push(u.clone());
            self.apply_nonlinear(&mut u, 1.0);
            self.apply_spectral(&mut u, &self.half_phase, false);
        }

        let mut adjoint = vec![Complex64::new(0.0, 0.0); n];
        let mut loss = 0.0;
        for (&s, &yi) in sensors.iter().zip(y) {
            let residual = u[s] - yi;
            loss += residual.norm_sqr();
            adjoint[s] += 2.0 * residual;
        }

        let theta = self.params.n_sq * self.params.ell_xi;
        for entering in tape.iter().rev() {
            self.apply_spectral(&mut adjoint, &self.half_phase, true);
            // w = v·e^{iθ|v|²}:  ∂w/∂v = e^{iθ|v|²}(1 + iθ|v|²),  ∂w/∂v̄ = iθv²e^{iθ|v|²}.
            // G_v = conj(G_w)·∂w/∂v̄ + G_w·conj(∂w/∂v).
            for (g, &v) in adjoint.iter_mut().zip(entering) {
                let power = v.norm_sqr();
                let rot = Complex64::from_polar(1.0, theta * power);
                let dw_dv = rot * Complex64::new(1.0, theta * power);
                let dw_dvbar = Complex64::new(0.0, theta) * v * v * rot;
                *g = g.conj() * dw_dvbar + *g * dw_dv.conj();
            }
            self.apply_spectral(&mut adjoint, &self.half_phase, true);
        }
        Ok((adjoint, loss))
    }
}
