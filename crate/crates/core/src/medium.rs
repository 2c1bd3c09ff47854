//! Common interface over the two differentiable forward solvers.

use std::fmt::Debug;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::heat::HeatGrid;
use crate::nlse::NlseGrid;
use crate::Error;

/// Scalar carried by a waveform: `f64` for heat, `Complex64` for the NLSE.
pub trait Sample: Copy + Debug + PartialEq + Send + Sync + 'static {
    fn from_real(x: f64) -> Self;
    fn re(self) -> f64;
    fn im(self) -> Option<f64>;
    fn abs(self) -> f64;
    fn sq_dist(self, other: Self) -> f64;
    fn scale(self, a: f64) -> Self;
    /// Adds i.i.d. N(0, σ²) noise to every real component.
    fn noisy<R: Rng + ?Sized>(self, sigma: f64, rng: &mut R) -> Self;
}

impl Sample for f64 {
    fn from_real(x: f64) -> Self {
        x
    }
    fn re(self) -> f64 {
        self
    }
    fn im(self) -> Option<f64> {
        None
    }
    fn abs(self) -> f64 {
        f64::abs(self)
    }
    fn sq_dist(self, other: Self) -> f64 {
        (self - other) * (self - other)
    }
    fn scale(self, a: f64) -> Self {
        a * self
    }
    fn noisy<R: Rng + ?Sized>(self, sigma: f64, rng: &mut R) -> Self {
        let n: f64 = rng.sample(StandardNormal);
        self + sigma * n
    }
}

impl Sample for Complex64 {
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn re(self) -> f64 {
        self.re
    }
    fn im(self) -> Option<f64> {
        Some(self.im)
    }
    fn abs(self) -> f64 {
        self.norm()
    }
    fn sq_dist(self, other: Self) -> f64 {
        (self - other).norm_sqr()
    }
    fn scale(self, a: f64) -> Self {
        self * a
    }
    fn noisy<R: Rng + ?Sized>(self, sigma: f64, rng: &mut R) -> Self {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        self + Complex64::new(sigma * re, sigma * im)
    }
}

/// A discretized PDE the channel can push waveforms through.
pub trait Medium: Send + Sync {
    type Sample: Sample;

    /// Number of stored samples.
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coordinate of storage index `k`.
    fn coordinate(&self, k: usize) -> f64;

    /// Physical extent of the window; pulses keep clear of both ends.
    fn bounds(&self) -> (f64, f64);

    fn nearest_index(&self, x: f64) -> Option<usize>;

    fn forward(&self, u0: &[Self::Sample]) -> Result<Vec<Self::Sample>, Error>;

    /// Gradient of the sensor-space squared error with respect to `u0`, plus
    /// the squared error itself.
    fn input_gradient(
        &self,
        u0: &[Self::Sample],
        y: &[Self::Sample],
        sensors: &[usize],
    ) -> Result<(Vec<Self::Sample>, f64), Error>;
}

impl Medium for HeatGrid {
    type Sample = f64;

    fn len(&self) -> usize {
        self.interior_len()
    }

    fn coordinate(&self, k: usize) -> f64 {
        HeatGrid::coordinate(self, k)
    }

    fn bounds(&self) -> (f64, f64) {
        (0.0, self.length())
    }

    fn nearest_index(&self, x: f64) -> Option<usize> {
        HeatGrid::nearest_index(self, x)
    }

    fn forward(&self, u0: &[f64]) -> Result<Vec<f64>, Error> {
        Ok(self.solve(u0)?)
    }

    fn input_gradient(&self, u0: &[f64], y: &[f64], sensors: &[usize]) -> Result<(Vec<f64>, f64), Error> {
        Ok(HeatGrid::input_gradient(self, u0, y, sensors)?)
    }
}

impl Medium for NlseGrid {
    type Sample = Complex64;

    fn len(&self) -> usize {
        NlseGrid::len(self)
    }

    fn coordinate(&self, k: usize) -> f64 {
        NlseGrid::coordinate(self, k)
    }

    fn bounds(&self) -> (f64, f64) {
        let half = self.params().tau_span / 2.0;
        (-half, half)
    }

    fn nearest_index(&self, x: f64) -> Option<usize> {
        NlseGrid::nearest_index(self, x)
    }

    fn forward(&self, u0: &[Complex64]) -> Result<Vec<Complex64>, Error> {
        Ok(self.solve(u0)?)
    }

    fn input_gradient(
        &self,
        u0: &[Complex64],
        y: &[Complex64],
        sensors: &[usize],
    ) -> Result<(Vec<Complex64>, f64), Error> {
        Ok(NlseGrid::input_gradient(self, u0, y, sensors)?)
    }
}
