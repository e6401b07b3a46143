//! Complex sample vectors and the Bernoulli complex Gaussian source model.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Length-`D` complex vector stored as parallel real/imaginary arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexVector {
    re: Vec<f64>,
    im: Vec<f64>,
}

impl ComplexVector {
    pub fn new(re: Vec<f64>, im: Vec<f64>) -> Result<Self> {
        if re.len() != im.len() {
            return Err(Error::Dimension {
                expected: re.len(),
                actual: im.len(),
            });
        }
        if re.is_empty() {
            return Err(Error::domain("complex vector must have at least one entry"));
        }
        if re.iter().chain(im.iter()).any(|v| !v.is_finite()) {
            return Err(Error::domain("complex vector entries must be finite"));
        }
        Ok(Self { re, im })
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be positive");
        Self {
            re: vec![0.0; dim],
            im: vec![0.0; dim],
        }
    }

    pub fn from_complex(values: &[Complex64]) -> Result<Self> {
        let (re, im) = values.iter().map(|c| (c.re, c.im)).unzip();
        Self::new(re, im)
    }

    /// Real-valued vector (zero imaginary parts).
    pub fn from_real(re: Vec<f64>) -> Result<Self> {
        let im = vec![0.0; re.len()];
        Self::new(re, im)
    }

    pub(crate) fn from_parts_unchecked(re: Vec<f64>, im: Vec<f64>) -> Self {
        debug_assert_eq!(re.len(), im.len());
        Self { re, im }
    }

    pub fn len(&self) -> usize {
        self.re.len()
    }

    pub fn is_empty(&self) -> bool {
        self.re.is_empty()
    }

    pub fn re(&self) -> &[f64] {
        &self.re
    }

    pub fn im(&self) -> &[f64] {
        &self.im
    }

    pub fn get(&self, d: usize) -> Complex64 {
        Complex64::new(self.re[d], self.im[d])
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        self.re
            .iter()
            .zip(&self.im)
            .map(|(&r, &i)| Complex64::new(r, i))
            .collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.re.iter().copied().zip(self.im.iter().copied())
    }

    /// Entrywise `re² + im²`.
    pub fn abs_squared(&self) -> Vec<f64> {
        self.iter().map(|(r, i)| r * r + i * i).collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.iter().map(|(r, i)| r * r + i * i).sum()
    }

    /// `||self||² / D`.
    pub fn mean_power(&self) -> f64 {
        self.norm_sqr() / self.len() as f64
    }

    pub fn add(&self, other: &ComplexVector) -> Result<ComplexVector> {
        self.check_len(other)?;
        let re = self.re.iter().zip(&other.re).map(|(a, b)| a + b).collect();
        let im = self.im.iter().zip(&other.im).map(|(a, b)| a + b).collect();
        Ok(Self { re, im })
    }

    pub fn sub(&self, other: &ComplexVector) -> Result<ComplexVector> {
        self.check_len(other)?;
        let re = self.re.iter().zip(&other.re).map(|(a, b)| a - b).collect();
        let im = self.im.iter().zip(&other.im).map(|(a, b)| a - b).collect();
        Ok(Self { re, im })
    }

    pub fn scale(&self, factor: f64) -> ComplexVector {
        Self {
            re: self.re.iter().map(|v| v * factor).collect(),
            im: self.im.iter().map(|v| v * factor).collect(),
        }
    }

    /// `||self - other||² / D`.
    pub fn mean_sq_distance(&self, other: &ComplexVector) -> Result<f64> {
        self.check_len(other)?;
        let sum: f64 = self
            .iter()
            .zip(other.iter())
            .map(|((ar, ai), (br, bi))| (ar - br).powi(2) + (ai - bi).powi(2))
            .sum();
        Ok(sum / self.len() as f64)
    }

    pub(crate) fn check_len(&self, other: &ComplexVector) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::Dimension {
                expected: self.len(),
                actual: other.len(),
            });
        }
        Ok(())
    }
}

/// Sparsity model: each entry is active with probability `p` and, when
/// active, circularly-symmetric complex Gaussian with variance `Eh`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BcgParams {
    dim: usize,
    activity_rate: f64,
    active_power: f64,
    noise_power: f64,
}

impl BcgParams {
    pub fn new(
        dim: usize,
        activity_rate: f64,
        active_power: f64,
        noise_power: f64,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter {
                name: "dim",
                reason: "must be at least 1".into(),
            });
        }
        if !(activity_rate > 0.0 && activity_rate <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "activity_rate",
                reason: format!("{activity_rate} not in (0, 1]"),
            });
        }
        if !(active_power > 0.0 && active_power.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "active_power",
                reason: format!("{active_power} must be positive and finite"),
            });
        }
        if !(noise_power > 0.0 && noise_power.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "noise_power",
                reason: format!("{noise_power} must be positive and finite"),
            });
        }
        Ok(Self {
            dim,
            activity_rate,
            active_power,
            noise_power,
        })
    }

    /// Parameterize by SNR instead of per-entry active power: `Eh = snr·N0/p`.
    pub fn from_snr(dim: usize, activity_rate: f64, snr: f64, noise_power: f64) -> Result<Self> {
        if !(activity_rate > 0.0) {
            return Err(Error::InvalidParameter {
                name: "activity_rate",
                reason: format!("{activity_rate} not in (0, 1]"),
            });
        }
        Self::new(
            dim,
            activity_rate,
            snr * noise_power / activity_rate,
            noise_power,
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn activity_rate(&self) -> f64 {
        self.activity_rate
    }

    pub fn active_power(&self) -> f64 {
        self.active_power
    }

    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }

    /// `Es = p·Eh`.
    pub fn signal_power(&self) -> f64 {
        self.activity_rate * self.active_power
    }

    pub fn snr(&self) -> f64 {
        self.signal_power() / self.noise_power
    }

    /// Expected number of active entries `K = p·D`.
    pub fn expected_sparsity(&self) -> f64 {
        self.activity_rate * self.dim as f64
    }

    /// CDF of one entry of `|y|²` under the noisy model.
    pub fn power_cdf(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return 0.0;
        }
        let p = self.activity_rate;
        let n0 = self.noise_power;
        let slow = n0 + self.active_power;
        (1.0 - p) * (-(-z / n0).exp_m1()) + p * (-(-z / slow).exp_m1())
    }
}

#[inline]
fn complex_gaussian(var: f64, rng: &mut RngStream) -> (f64, f64) {
    let sd = (0.5 * var).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    (sd * re, sd * im)
}

/// Draws a sparse signal `s` from the Bernoulli complex Gaussian model.
pub fn sample_bcg(params: &BcgParams, rng: &mut RngStream) -> ComplexVector {
    let d = params.dim();
    let mut re = vec![0.0; d];
    let mut im = vec![0.0; d];
    for k in 0..d {
        let u: f64 = rng.random();
        if u < params.activity_rate() {
            let (r, i) = complex_gaussian(params.active_power(), rng);
            re[k] = r;
            im[k] = i;
        }
    }
    ComplexVector::from_parts_unchecked(re, im)
}

/// Draws i.i.d. circularly-symmetric complex Gaussian noise with variance `n0`.
pub fn sample_noise(n0: f64, dim: usize, rng: &mut RngStream) -> Result<ComplexVector> {
    if !(n0 > 0.0 && n0.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "n0",
            reason: format!("{n0} must be positive and finite"),
        });
    }
    if dim == 0 {
        return Err(Error::InvalidParameter {
            name: "dim",
            reason: "must be at least 1".into(),
        });
    }
    let mut re = Vec::with_capacity(dim);
    let mut im = Vec::with_capacity(dim);
    for _ in 0..dim {
        let (r, i) = complex_gaussian(n0, rng);
        re.push(r);
        im.push(i);
    }
    Ok(ComplexVector::from_parts_unchecked(re, im))
}

/// One realization `(s, n, y = s + n)` of the noisy sparse model.
#[derive(Debug, Clone)]
pub struct Observation {
    pub signal: ComplexVector,
    pub noise: ComplexVector,
    pub observed: ComplexVector,
}

pub fn observe_bcg(params: &BcgParams, rng: &mut RngStream) -> Observation {
    let signal = sample_bcg(params, rng);
    let noise =
        sample_noise(params.noise_power(), params.dim(), rng).expect("validated by BcgParams");
    let observed = signal.add(&noise).expect("same dimension");
    Observation {
        signal,
        noise,
        observed,
    }
}
