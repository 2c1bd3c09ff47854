//! Physics-aware gradient-flow decoding and the two hard-decision baselines.
//!
//! One decoder iteration:
//!
//! 1. synthesize `u0 = b(·; s)` from the current real-valued estimate,
//! 2. get `z = ∇_{u0} ‖y − S·solve(u0)‖²` from the solver,
//! 3. gather `g_i = Re z` at the grid point under pulse `i`,
//! 4. step `s ← s − η (g + γ ∇h(s))`.
//!
//! The backward pass stops at the solver input; the pulse synthesizer is not
//! differentiated.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error as ThisError;

use crate::channel::{synth_waveform, ChannelError, ChannelLayout};
use crate::codes::{is_codeword, ParityCheckMatrix};
use crate::medium::{Medium, Sample};
use crate::nlse::NlseGrid;
use crate::potential::{potential_energy, potential_gradient, sign, PotentialParams};
use crate::Error;

/// Any coordinate beyond this magnitude marks the run as diverged.
pub const DIVERGENCE_LIMIT: f64 = 1e3;

#[derive(Debug, ThisError, PartialEq)]
pub enum DecodeError {
    #[error("invalid decoder parameter {name} = {value}")]
    Param { name: &'static str, value: f64 },
    #[error("state diverged at iteration {iteration}")]
    Diverged {
        iteration: usize,
        /// Sign of the last finite, in-range iterate.
        last_estimate: Vec<f64>,
    },
    #[error("code length {code} does not match pulse count {pulses}")]
    Dimension { code: usize, pulses: usize },
    #[error("observation has {got} samples, layout has {expected} sensors")]
    Observation { expected: usize, got: usize },
    #[error("backpropagation needs every τ grid point sensed")]
    PartialField,
}

/// How `s^(0)` is chosen.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    /// `s^(0) ~ N(0, σ_s²)`.
    #[default]
    Random,
    /// Start from the peak-detection estimate.
    Peak,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GfDecoderParams {
    pub eta: f64,
    pub gamma: f64,
    #[serde(flatten)]
    pub potential: PotentialParams,
    pub iterations: usize,
    #[serde(default = "default_init_sigma")]
    pub init_sigma: f64,
    #[serde(default)]
    pub init: InitMode,
}

fn default_init_sigma() -> f64 {
    0.5
}

impl Default for GfDecoderParams {
    fn default() -> Self {
        Self {
            eta: 0.1,
            gamma: 0.1,
            potential: PotentialParams::default(),
            iterations: 20,
            init_sigma: default_init_sigma(),
            init: InitMode::Random,
        }
    }
}

impl GfDecoderParams {
    pub fn validate(&self) -> Result<(), Error> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(DecodeError::Param { name: "eta", value: self.eta }.into());
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(DecodeError::Param { name: "gamma", value: self.gamma }.into());
        }
        if self.iterations == 0 {
            return Err(DecodeError::Param { name: "iterations", value: 0.0 }.into());
        }
        if !(self.init_sigma >= 0.0 && self.init_sigma.is_finite()) {
            return Err(DecodeError::Param { name: "init_sigma", value: self.init_sigma }.into());
        }
        self.potential.validate()?;
        Ok(())
    }
}

/// One row of the per-iteration trace.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub squared_error: f64,
    pub potential_energy: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecodeResult {
    /// `sgn(s^(U))` with sgn(0) = +1.
    pub estimate: Vec<f64>,
    pub final_state: Vec<f64>,
    /// Rows for `s^(0)` … `s^(U)` when tracing was requested.
    pub trajectory: Option<Vec<TraceRow>>,
    pub is_codeword: bool,
}

/// Gathers the real part of a grid-space gradient at each pulse center.
pub fn project_gradient<S: Sample>(z: &[S], layout: &ChannelLayout) -> Result<Vec<f64>, ChannelError> {
    if z.len() != layout.grid_len() {
        return Err(ChannelError::Length {
            expected: layout.grid_len(),
            got: z.len(),
        });
    }
    Ok(layout.pulse_indices().iter().map(|&k| z[k].re()).collect())
}

fn hard_decision(state: &[f64]) -> Vec<f64> {
    state.iter().map(|&v| sign(v)).collect()
}

/// Sign of the received value at each pulse center (real part for complex y).
pub fn peak_detect<S: Sample>(y: &[S], layout: &ChannelLayout) -> Result<Vec<f64>, Error> {
    if y.len() != layout.n_sensors() {
        return Err(DecodeError::Observation {
            expected: layout.n_sensors(),
            got: y.len(),
        }
        .into());
    }
    let slots = layout.pulse_slots()?;
    Ok(slots.iter().map(|&slot| sign(y[slot].re())).collect())
}

/// Digital backpropagation: invert the recorded SSFM step sequence on the
/// received field, then take the sign of the real part at each pulse center.
pub fn bp_detect(y: &[Complex64], layout: &ChannelLayout, grid: &NlseGrid) -> Result<Vec<f64>, Error> {
    if y.len() != layout.n_sensors() {
        return Err(DecodeError::Observation {
            expected: layout.n_sensors(),
            got: y.len(),
        }
        .into());
    }
    if !layout.senses_full_grid() {
        return Err(DecodeError::PartialField.into());
    }
    let back = grid.reverse_propagate(y)?;
    Ok(layout.pulse_indices().iter().map(|&k| sign(back[k].re)).collect())
}

fn initial_state<S: Sample, R: Rng + ?Sized>(
    y: &[S],
    layout: &ChannelLayout,
    params: &GfDecoderParams,
    rng: &mut R,
) -> Result<Vec<f64>, Error> {
    match params.init {
        InitMode::Random => Ok((0..layout.n_pulses())
            .map(|_| {
                let v: f64 = rng.sample(StandardNormal);
                params.init_sigma * v
            })
            .collect()),
        InitMode::Peak => peak_detect(y, layout),
    }
}

/// Runs the gradient-flow recursion, drawing `s^(0)` according to
/// `params.init`.
pub fn gf_decode<M: Medium, R: Rng + ?Sized>(
    y: &[M::Sample],
    layout: &ChannelLayout,
    medium: &M,
    code: &ParityCheckMatrix,
    params: &GfDecoderParams,
    rng: &mut R,
    trace: bool,
) -> Result<DecodeResult, Error> {
    let init = initial_state(y, layout, params, rng)?;
    gf_decode_from(y, layout, medium, code, params, init, trace)
}

/// Runs the recursion from an explicit `s^(0)`.
pub fn gf_decode_from<M: Medium>(
    y: &[M::Sample],
    layout: &ChannelLayout,
    medium: &M,
    code: &ParityCheckMatrix,
    params: &GfDecoderParams,
    init: Vec<f64>,
    trace: bool,
) -> Result<DecodeResult, Error> {
    params.validate()?;
    if code.n() != layout.n_pulses() {
        return Err(DecodeError::Dimension {
            code: code.n(),
            pulses: layout.n_pulses(),
        }
        .into());
    }
    if y.len() != layout.n_sensors() {
        return Err(DecodeError::Observation {
            expected: layout.n_sensors(),
            got: y.len(),
        }
        .into());
    }
    if init.len() != code.n() {
        return Err(DecodeError::Dimension {
            code: code.n(),
            pulses: init.len(),
        }
        .into());
    }

    let sensors = layout.sensor_indices();
    let mut state = init;
    let mut rows = trace.then(|| Vec::with_capacity(params.iterations + 1));
    for iteration in 0..params.iterations {
        let u0 = synth_waveform::<M::Sample>(&state, layout)?;
        let (z, loss) = medium.input_gradient(&u0, y, sensors)?;
        let g = project_gradient(&z, layout)?;
        let hgrad = potential_gradient(&state, code, &params.potential)?;
        if let Some(rows) = rows.as_mut() {
            rows.push(TraceRow {
                iteration,
                squared_error: loss,
                potential_energy: potential_energy(&state, code, &params.potential)?,
            });
        }
        let next: Vec<f64> = state
            .iter()
            .zip(g.iter().zip(&hgrad))
            .map(|(&s, (&gi, &hi))| s - params.eta * (gi + params.gamma * hi))
            .collect();
        if next.iter().any(|v| !v.is_finite() || v.abs() > DIVERGENCE_LIMIT) {
            return Err(DecodeError::Diverged {
                iteration: iteration + 1,
                last_estimate: hard_decision(&state),
            }
            .into());
        }
        state = next;
    }
    if let Some(rows) = rows.as_mut() {
        let u0 = synth_waveform::<M::Sample>(&state, layout)?;
        let r = medium.forward(&u0)?;
        let loss = sensors.iter().zip(y).map(|(&k, &yi)| r[k].sq_dist(yi)).sum();
        rows.push(TraceRow {
            iteration: params.iterations,
            squared_error: loss,
            potential_energy: potential_energy(&state, code, &params.potential)?,
        });
    }
    let estimate = hard_decision(&state);
    Ok(DecodeResult {
        is_codeword: is_codeword(code, &estimate),
        estimate,
        final_state: state,
        trajectory: rows,
    })
}
