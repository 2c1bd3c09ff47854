//! Pulse shaping, sensor sampling and AWGN.
//!
//! A bipolar word `s` becomes the initial waveform `b(x; s) = Σ s_i φ(x − p_i)`
//! with Gaussian pulses `φ(x) = exp(−x²/(2 t0²))`, is pushed through a
//! [`Medium`], sampled at the sensor grid points and corrupted by white
//! Gaussian noise.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error as ThisError;

use crate::medium::{Medium, Sample};
use crate::Error;

/// Pulse samples beyond this many half-widths are below 1e-17 and dropped.
const PULSE_SUPPORT: f64 = 9.0;

#[derive(Debug, ThisError, PartialEq)]
pub enum ChannelError {
    #[error("pulse half-width must be positive, got {0}")]
    HalfWidth(f64),
    #[error("noise sigma must be non-negative, got {0}")]
    Sigma(f64),
    #[error("pulse {index} at {position} is off the grid")]
    OffGrid { index: usize, position: f64 },
    #[error("pulse {index} at {position} is closer than {clearance} to the window edge")]
    Clearance {
        index: usize,
        position: f64,
        clearance: f64,
    },
    #[error("pulses {first} and {second} are {spacing} apart, below the minimum {min}")]
    Spacing {
        first: usize,
        second: usize,
        spacing: f64,
        min: f64,
    },
    #[error("sensor index {index} outside 0..{len}")]
    Sensor { index: usize, len: usize },
    #[error("no sensor at the grid point of pulse {0}")]
    MissingPulseSensor(usize),
    #[error("length mismatch: expected {expected}, got {got}")]
    Length { expected: usize, got: usize },
    #[error("at least one pulse is required")]
    NoPulses,
}

/// Which grid points carry a sensor.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensorPlacement {
    /// Every stored grid point.
    #[default]
    All,
    /// Only the grid points under the pulse centers.
    PulseCenters,
}

/// `exp(−x²/(2 t0²))`.
pub fn pulse(x: f64, t0: f64) -> Result<f64, ChannelError> {
    if !(t0 > 0.0 && t0.is_finite()) {
        return Err(ChannelError::HalfWidth(t0));
    }
    Ok(gaussian(x, t0))
}

#[inline]
fn gaussian(x: f64, t0: f64) -> f64 {
    (-x * x / (2.0 * t0 * t0)).exp()
}

#[derive(Clone, Debug, PartialEq)]
struct PulseKernel {
    start: usize,
    values: Vec<f64>,
}

/// Pulse centers and sensor positions bound to a specific grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelLayout {
    t0: f64,
    pulse_positions: Vec<f64>,
    pulse_indices: Vec<usize>,
    sensor_indices: Vec<usize>,
    /// Position of each pulse-center grid point within the sensor list.
    pulse_slots: Option<Vec<usize>>,
    kernels: Vec<PulseKernel>,
    grid_len: usize,
}

impl ChannelLayout {
    /// Builds a layout from explicit pulse centers (snapped to the nearest
    /// grid point) and sensor storage indices.
    ///
    /// Centers must sit at least `4·t0` inside the window and at least
    /// `min_spacing` (default `6·t0`) apart.
    pub fn new<M: Medium>(
        medium: &M,
        t0: f64,
        centers: &[f64],
        sensors: &[usize],
        min_spacing: Option<f64>,
    ) -> Result<Self, ChannelError> {
        if !(t0 > 0.0 && t0.is_finite()) {
            return Err(ChannelError::HalfWidth(t0));
        }
        if centers.is_empty() {
            return Err(ChannelError::NoPulses);
        }
        let len = medium.len();
        let (lo, hi) = medium.bounds();
        let clearance = 4.0 * t0;
        let min_spacing = min_spacing.unwrap_or(6.0 * t0);

        let mut pulse_indices = Vec::with_capacity(centers.len());
        let mut pulse_positions = Vec::with_capacity(centers.len());
        for (index, &position) in centers.iter().enumerate() {
            let k = medium
                .nearest_index(position)
                .ok_or(ChannelError::OffGrid { index, position })?;
            let snapped = medium.coordinate(k);
            if snapped - lo < clearance - 1e-12 || hi - snapped < clearance - 1e-12 {
                return Err(ChannelError::Clearance {
                    index,
                    position: snapped,
                    clearance,
                });
            }
            pulse_indices.push(k);
            pulse_positions.push(snapped);
        }
        let mut order: Vec<usize> = (0..centers.len()).collect();
        order.sort_by(|&a, &b| pulse_positions[a].total_cmp(&pulse_positions[b]));
        for pair in order.windows(2) {
            let spacing = pulse_positions[pair[1]] - pulse_positions[pair[0]];
            if spacing < min_spacing - 1e-12 {
                return Err(ChannelError::Spacing {
                    first: pair[0],
                    second: pair[1],
                    spacing,
                    min: min_spacing,
                });
            }
        }

        if let Some(&index) = sensors.iter().find(|&&s| s >= len) {
            return Err(ChannelError::Sensor { index, len });
        }
        let pulse_slots: Option<Vec<usize>> = pulse_indices
            .iter()
            .map(|k| sensors.iter().position(|s| s == k))
            .collect();

        let reach = PULSE_SUPPORT * t0;
        let kernels = pulse_positions
            .iter()
            .map(|&p| {
                let range: Vec<usize> = (0..len)
                    .filter(|&k| (medium.coordinate(k) - p).abs() <= reach)
                    .collect();
                let start = range.first().copied().unwrap_or(0);
                PulseKernel {
                    start,
                    values: range
                        .iter()
                        .map(|&k| gaussian(medium.coordinate(k) - p, t0))
                        .collect(),
                }
            })
            .collect();

        Ok(Self {
            t0,
            pulse_positions,
            pulse_indices,
            sensor_indices: sensors.to_vec(),
            pulse_slots,
            kernels,
            grid_len: len,
        })
    }

    /// `n` centers at `lo + (i + 1)·(hi − lo)/(n + 1)`, i.e. evenly spaced
    /// with one spacing of margin at each end.
    pub fn evenly_spaced<M: Medium>(
        medium: &M,
        n: usize,
        t0: f64,
        placement: SensorPlacement,
        min_spacing: Option<f64>,
    ) -> Result<Self, ChannelError> {
        let (lo, hi) = medium.bounds();
        let gap = (hi - lo) / (n + 1) as f64;
        let centers: Vec<f64> = (0..n).map(|i| lo + (i + 1) as f64 * gap).collect();
        match placement {
            SensorPlacement::All => {
                let sensors: Vec<usize> = (0..medium.len()).collect();
                Self::new(medium, t0, &centers, &sensors, min_spacing)
            }
            SensorPlacement::PulseCenters => {
                let sensors: Vec<usize> = centers
                    .iter()
                    .enumerate()
                    .map(|(index, &position)| {
                        medium
                            .nearest_index(position)
                            .ok_or(ChannelError::OffGrid { index, position })
                    })
                    .collect::<Result<_, _>>()?;
                Self::new(medium, t0, &centers, &sensors, min_spacing)
            }
        }
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn n_pulses(&self) -> usize {
        self.pulse_indices.len()
    }

    pub fn pulse_positions(&self) -> &[f64] {
        &self.pulse_positions
    }

    /// Storage index of the grid point under each pulse center.
    pub fn pulse_indices(&self) -> &[usize] {
        &self.pulse_indices
    }

    pub fn sensor_indices(&self) -> &[usize] {
        &self.sensor_indices
    }

    pub fn n_sensors(&self) -> usize {
        self.sensor_indices.len()
    }

    /// For each pulse, its slot in the sensor vector, or an error naming the
    /// first pulse without a sensor.
    pub fn pulse_slots(&self) -> Result<&[usize], ChannelError> {
        match &self.pulse_slots {
            Some(slots) => Ok(slots),
            None => {
                let missing = self
                    .pulse_indices
                    .iter()
                    .position(|k| !self.sensor_indices.contains(k))
                    .unwrap_or(0);
                Err(ChannelError::MissingPulseSensor(missing))
            }
        }
    }

    /// True when every grid point is sensed in storage order.
    pub fn senses_full_grid(&self) -> bool {
        self.sensor_indices.len() == self.grid_len
            && self.sensor_indices.iter().enumerate().all(|(i, &k)| i == k)
    }

    pub fn grid_len(&self) -> usize {
        self.grid_len
    }
}

/// Samples `b(x; s)` at every stored grid point.
pub fn synth_waveform<S: Sample>(s: &[f64], layout: &ChannelLayout) -> Result<Vec<S>, ChannelError> {
    if s.len() != layout.n_pulses() {
        return Err(ChannelError::Length {
            expected: layout.n_pulses(),
            got: s.len(),
        });
    }
    let mut u = vec![0.0; layout.grid_len];
    for (&amp, kernel) in s.iter().zip(&layout.kernels) {
        for (slot, &v) in u[kernel.start..].iter_mut().zip(&kernel.values) {
            *slot += amp * v;
        }
    }
    Ok(u.into_iter().map(S::from_real).collect())
}

/// Gathers the sensor entries of `u`.
pub fn sample_sensors<S: Sample>(u: &[S], layout: &ChannelLayout) -> Result<Vec<S>, ChannelError> {
    if u.len() != layout.grid_len {
        return Err(ChannelError::Length {
            expected: layout.grid_len,
            got: u.len(),
        });
    }
    Ok(layout.sensor_indices.iter().map(|&k| u[k]).collect())
}

pub fn add_noise<S: Sample, R: Rng + ?Sized>(r: &[S], sigma: f64, rng: &mut R) -> Result<Vec<S>, ChannelError> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(ChannelError::Sigma(sigma));
    }
    if sigma == 0.0 {
        return Ok(r.to_vec());
    }
    Ok(r.iter().map(|&v| v.noisy(sigma, rng)).collect())
}

/// Received sensor values with optional ground truth.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation<S> {
    pub y: Vec<S>,
    pub true_word: Option<Vec<f64>>,
    pub rng_seed: u64,
}

/// Noiseless channel map `s ↦ S·solve(b(·; s))`.
pub fn noiseless<M: Medium>(s: &[f64], layout: &ChannelLayout, medium: &M) -> Result<Vec<M::Sample>, Error> {
    let u0 = synth_waveform(s, layout)?;
    let u = medium.forward(&u0)?;
    Ok(sample_sensors(&u, layout)?)
}

/// `y = f(s) + n`. `seed` is recorded in the observation for bookkeeping only;
/// the noise is drawn from `rng`.
pub fn transmit<M: Medium, R: Rng + ?Sized>(
    s: &[f64],
    layout: &ChannelLayout,
    medium: &M,
    sigma: f64,
    rng: &mut R,
    seed: u64,
) -> Result<Observation<M::Sample>, Error> {
    let r = noiseless(s, layout, medium)?;
    let y = add_noise(&r, sigma, rng)?;
    Ok(Observation {
        y,
        true_word: Some(s.to_vec()),
        rng_seed: seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heat::{HeatGrid, HeatGridParams};
    use crate::nlse::{NlseGrid, NlseGridParams};
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn demo_grid(n_t: usize) -> HeatGrid {
        HeatGrid::new(HeatGridParams {
            lambda: 0.2,
            h: 0.005,
            ell: 0.05,
            n_x: 200,
            n_t,
        })
        .unwrap()
    }

    #[test]
    fn pulse_examples() {
        assert_eq!(pulse(0.0, 0.3).unwrap(), 1.0);
        assert!((pulse(0.3, 0.3).unwrap() - (-0.5f64).exp()).abs() < 1e-15);
        assert!((pulse(0.3, 0.3).unwrap() - 0.6065).abs() < 1e-4);
        assert_eq!(pulse(-0.7, 0.2).unwrap(), pulse(0.7, 0.2).unwrap());
        assert_eq!(pulse(1.0, 0.0), Err(ChannelError::HalfWidth(0.0)));
    }

    #[test]
    fn layout_validation() {
        let g = demo_grid(0);
        let all: Vec<usize> = (0..199).collect();
        assert!(matches!(
            ChannelLayout::new(&g, 0.2, &[0.5], &all, None),
            Err(ChannelError::Clearance { index: 0, .. })
        ));
        assert!(matches!(
            ChannelLayout::new(&g, 0.2, &[3.0, 3.5], &all, None),
            Err(ChannelError::Spacing { first: 0, second: 1, .. })
        ));
        assert!(matches!(
            ChannelLayout::new(&g, 0.2, &[3.0], &[199], None),
            Err(ChannelError::Sensor { index: 199, len: 199 })
        ));
        assert!(matches!(
            ChannelLayout::new(&g, 0.2, &[30.0], &all, None),
            Err(ChannelError::OffGrid { .. })
        ));
        let layout = ChannelLayout::new(&g, 0.2, &[3.0], &[10, 20], None).unwrap();
        assert_eq!(layout.pulse_slots(), Err(ChannelError::MissingPulseSensor(0)));
    }

    #[test]
    fn evenly_spaced_centers_snap_to_grid() {
        let g = demo_grid(0);
        let layout = ChannelLayout::evenly_spaced(&g, 7, 0.2, SensorPlacement::All, None).unwrap();
        let expected: Vec<usize> = (1..=7).map(|i| 25 * i - 1).collect();
        assert_eq!(layout.pulse_indices(), expected.as_slice());
        assert!(layout.senses_full_grid());
        assert_eq!(layout.pulse_slots().unwrap(), expected.as_slice());
    }

    #[test]
    fn synth_single_pulse_and_sign_symmetry() {
        let g = demo_grid(0);
        let layout = ChannelLayout::new(&g, 0.2, &[5.0], &(0..199).collect::<Vec<_>>(), None).unwrap();
        let u: Vec<f64> = synth_waveform(&[1.0], &layout).unwrap();
        let peak = layout.pulse_indices()[0];
        assert_eq!(u[peak], 1.0);
        assert!(u.iter().all(|&v| v <= 1.0));
        let neg: Vec<f64> = synth_waveform(&[-1.0], &layout).unwrap();
        assert!(u.iter().zip(&neg).all(|(a, b)| *a == -b));
        assert!(synth_waveform::<f64>(&[1.0, 1.0], &layout).is_err());
    }

    #[test]
    fn synth_matches_direct_sum() {
        let g = demo_grid(0);
        let layout = ChannelLayout::evenly_spaced(&g, 7, 0.2, SensorPlacement::All, None).unwrap();
        let s = [1.0, 1.0, -1.0, -1.0, 1.0, -1.0, 1.0];
        let u: Vec<f64> = synth_waveform(&s, &layout).unwrap();
        for (k, &v) in u.iter().enumerate() {
            let x = g.coordinate(k);
            let direct: f64 = s
                .iter()
                .zip(layout.pulse_positions())
                .map(|(si, &p)| si * pulse(x - p, 0.2).unwrap())
                .sum();
            assert!((v - direct).abs() < 1e-15);
        }
        for (i, &k) in layout.pulse_indices().iter().enumerate() {
            assert_eq!(u[k].signum(), s[i]);
        }
    }

    #[test]
    fn sensors_gather() {
        let g = demo_grid(0);
        let sensors = vec![40, 3, 100];
        let layout = ChannelLayout::new(&g, 0.2, &[5.0], &sensors, None).unwrap();
        let u: Vec<f64> = (0..199).map(|k| k as f64).collect();
        assert_eq!(sample_sensors(&u, &layout).unwrap(), vec![40.0, 3.0, 100.0]);
        assert!(sample_sensors(&u[..10], &layout).is_err());
    }

    #[test]
    fn noise_contract() {
        let r = vec![0.5; 10];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(add_noise(&r, 0.0, &mut rng).unwrap(), r);
        assert_eq!(add_noise(&r, -1.0, &mut rng), Err(ChannelError::Sigma(-1.0)));
        let a = add_noise(&r, 0.3, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = add_noise(&r, 0.3, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn noise_standard_deviation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let r = vec![0.0; 100_000];
        let y = add_noise(&r, 0.1, &mut rng).unwrap();
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (y.len() - 1) as f64;
        let std = var.sqrt();
        assert!((0.099..=0.101).contains(&std), "std {std}");

        let rc = vec![Complex64::new(0.0, 0.0); 50_000];
        let yc = add_noise(&rc, 0.1, &mut rng).unwrap();
        let var_re = yc.iter().map(|v| v.re * v.re).sum::<f64>() / yc.len() as f64;
        let var_im = yc.iter().map(|v| v.im * v.im).sum::<f64>() / yc.len() as f64;
        assert!((var_re.sqrt() - 0.1).abs() < 0.0015 && (var_im.sqrt() - 0.1).abs() < 0.0015);
    }

    #[test]
    fn identity_channel_preserves_signs() {
        let g = demo_grid(0);
        let layout = ChannelLayout::evenly_spaced(&g, 7, 0.2, SensorPlacement::PulseCenters, None).unwrap();
        let s = [1.0, -1.0, -1.0, 1.0, 1.0, -1.0, 1.0];
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let obs = transmit(&s, &layout, &g, 0.0, &mut rng, 2).unwrap();
        for (yi, si) in obs.y.iter().zip(s) {
            assert_eq!(yi.signum(), si);
        }
        assert_eq!(obs.true_word.as_deref(), Some(&s[..]));
    }

    #[test]
    fn fig1_channel_blurs_within_noise_bound() {
        let g = demo_grid(100);
        let layout = ChannelLayout::evenly_spaced(&g, 7, 0.2, SensorPlacement::All, None).unwrap();
        let s = [1.0, 1.0, -1.0, -1.0, 1.0, -1.0, 1.0];
        let u0: Vec<f64> = synth_waveform(&s, &layout).unwrap();
        let b_max = u0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let obs = transmit(&s, &layout, &g, 0.05, &mut rng, 3).unwrap();
        let y_max = obs.y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(y_max < b_max + 4.0 * 0.05);
        let clean = noiseless(&s, &layout, &g).unwrap();
        let c_max = clean.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(c_max < b_max);
    }

    #[test]
    fn nlse_layout_uses_centered_window() {
        let g = NlseGrid::new(NlseGridParams {
            s_sign: 1,
            n_sq: 1.0,
            n_tau: 256,
            tau_span: 32.0,
            ell_xi: 0.025,
            n_steps: 20,
        })
        .unwrap();
        let layout = ChannelLayout::evenly_spaced(&g, 15, 0.1f64.sqrt(), SensorPlacement::All, None).unwrap();
        let expected: Vec<usize> = (1..=15).map(|i| 16 * i).collect();
        assert_eq!(layout.pulse_indices(), expected.as_slice());
        let u: Vec<Complex64> = synth_waveform(&[1.0; 15], &layout).unwrap();
        assert!(u.iter().all(|v| v.im == 0.0));
    }
}
