//! Finite-difference checks of the three analytic gradients.
//!
//! The oracles here only call the forward maps (solver output, potential
//! energy), never the gradient routines they are checking.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::codes::ParityCheckMatrix;
use crate::heat::{HeatGrid, HeatGridParams};
use crate::nlse::{NlseGrid, NlseGridParams};
use crate::potential::{potential_gradient, potential_gradient_naive, PotentialParams};
use crate::Error;

pub const HEAT_TOLERANCE: f64 = 1e-6;
pub const NLSE_TOLERANCE: f64 = 1e-4;
pub const POTENTIAL_TOLERANCE: f64 = 1e-9;

/// Result of one gradient check.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckReport {
    pub name: &'static str,
    pub instances: usize,
    /// Worst error over all instances (relative for the solvers, absolute
    /// for the potential).
    pub max_error: f64,
    pub tolerance: f64,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.max_error <= self.tolerance
    }
}

/// `‖a − b‖∞ / ‖b‖∞`.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let scale = b.iter().map(|y| y.abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

fn sensor_loss_heat(grid: &HeatGrid, u0: &[f64], y: &[f64], sensors: &[usize]) -> f64 {
    let r = grid.solve(u0).expect("length checked by caller");
    sensors.iter().zip(y).map(|(&k, &yi)| (r[k] - yi).powi(2)).sum()
}

/// Central differences of the heat sensor-space loss.
pub fn heat_fd_gradient(grid: &HeatGrid, u0: &[f64], y: &[f64], sensors: &[usize], step: f64) -> Vec<f64> {
    let mut probe = u0.to_vec();
    (0..u0.len())
        .map(|k| {
            probe[k] = u0[k] + step;
            let up = sensor_loss_heat(grid, &probe, y, sensors);
            probe[k] = u0[k] - step;
            let down = sensor_loss_heat(grid, &probe, y, sensors);
            probe[k] = u0[k];
            (up - down) / (2.0 * step)
        })
        .collect()
}

fn sensor_loss_nlse(grid: &NlseGrid, u0: &[Complex64], y: &[Complex64], sensors: &[usize]) -> f64 {
    let r = grid.solve(u0).expect("length checked by caller");
    sensors.iter().zip(y).map(|(&k, &yi)| (r[k] - yi).norm_sqr()).sum()
}

/// Central differences of the NLSE loss, perturbing real and imaginary parts
/// independently. Returned as `∂/∂Re + i ∂/∂Im`.
pub fn nlse_fd_gradient(
    grid: &NlseGrid,
    u0: &[Complex64],
    y: &[Complex64],
    sensors: &[usize],
    step: f64,
) -> Vec<Complex64> {
    let mut probe = u0.to_vec();
    (0..u0.len())
        .map(|k| {
            let mut partial = |delta: Complex64| {
                probe[k] = u0[k] + delta;
                let up = sensor_loss_nlse(grid, &probe, y, sensors);
                probe[k] = u0[k] - delta;
                let down = sensor_loss_nlse(grid, &probe, y, sensors);
                probe[k] = u0[k];
                (up - down) / (2.0 * step)
            };
            let re = partial(Complex64::new(step, 0.0));
            let im = partial(Complex64::new(0.0, step));
            Complex64::new(re, im)
        })
        .collect()
}

fn split(v: &[Complex64]) -> Vec<f64> {
    v.iter().flat_map(|c| [c.re, c.im]).collect()
}

/// Adjoint heat gradient against central differences on a 64×30 grid.
pub fn check_heat(instances: usize, seed: u64) -> Result<CheckReport, Error> {
    let grid = HeatGrid::new(HeatGridParams {
        lambda: 0.2,
        h: 0.005,
        ell: 0.05,
        n_x: 64,
        n_t: 30,
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.interior_len();
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let u0: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let sensors: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.6)).collect();
        let y: Vec<f64> = sensors.iter().map(|_| rng.random_range(-1.0..1.0)).collect();
        let (grad, _) = grid.input_gradient(&u0, &y, &sensors)?;
        let fd = heat_fd_gradient(&grid, &u0, &y, &sensors, 1e-6);
        worst = worst.max(relative_error(&grad, &fd));
    }
    Ok(CheckReport {
        name: "heat",
        instances,
        max_error: worst,
        tolerance: HEAT_TOLERANCE,
    })
}

/// Reverse-mode SSFM gradient against central differences, 64 samples and
/// 10 steps.
pub fn check_nlse(instances: usize, seed: u64) -> Result<CheckReport, Error> {
    let grid = NlseGrid::new(NlseGridParams {
        s_sign: 1,
        n_sq: 1.0,
        n_tau: 64,
        tau_span: 16.0,
        ell_xi: 0.05,
        n_steps: 10,
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.len();
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let u0: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let sensors: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.6)).collect();
        let y: Vec<Complex64> = sensors
            .iter()
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let (grad, _) = grid.input_gradient(&u0, &y, &sensors)?;
        let fd = nlse_fd_gradient(&grid, &u0, &y, &sensors, 1e-6);
        worst = worst.max(relative_error(&split(&grad), &split(&fd)));
    }
    Ok(CheckReport {
        name: "nlse",
        instances,
        max_error: worst,
        tolerance: NLSE_TOLERANCE,
    })
}

/// Vectorized potential gradient against the product-rule form, with every
/// `|x_j| ≥ 0.1`. Reports the maximum absolute difference.
pub fn check_potential(code: &ParityCheckMatrix, instances: usize, seed: u64) -> Result<CheckReport, Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = PotentialParams::default();
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let x: Vec<f64> = (0..code.n())
            .map(|_| {
                let mag = rng.random_range(0.1..1.5);
                if rng.random_bool(0.5) {
                    mag
                } else {
                    -mag
                }
            })
            .collect();
        let fast = potential_gradient(&x, code, &p)?;
        let naive = potential_gradient_naive(&x, code, &p)?;
        let diff = fast.iter().zip(&naive).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst = worst.max(diff);
    }
    Ok(CheckReport {
        name: "potential",
        instances,
        max_error: worst,
        tolerance: POTENTIAL_TOLERANCE,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_error_handles_zero_reference() {
        assert_eq!(relative_error(&[0.0, 0.0], &[0.0, 0.0]), 0.0);
        assert_eq!(relative_error(&[1.0, 2.0], &[1.0, 4.0]), 0.5);
    }

    #[test]
    fn small_checks_pass() {
        assert!(check_heat(2, 1).unwrap().passed());
        assert!(check_nlse(1, 1).unwrap().passed());
        let code = ParityCheckMatrix::builtin("bch15_7").unwrap();
        assert!(check_potential(&code, 10, 1).unwrap().passed());
    }
}
