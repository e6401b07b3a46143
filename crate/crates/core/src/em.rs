//! Two-component EM baseline on `z = |y|²`.
//!
//! Under a zero-mean circular complex Gaussian mixture, `z_d` follows a
//! mixture of two exponentials with means `σ1² ≤ σ2²`. The small component
//! is read as the noise power and the large one as noise plus active
//! signal.

use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::ops::OpCounter;
use crate::selection::{sample_median, MedianMethod};

pub const MAX_ITERATIONS: usize = 30;
pub const RELATIVE_TOLERANCE: f64 = 1e-3;
const VARIANCE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureParams {
    pub weight_active: f64,
    pub var_small: f64,
    pub var_large: f64,
}

impl MixtureParams {
    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.weight_active) {
            return Err(Error::InvalidParameter {
                name: "weight_active",
                reason: format!("{} not in [0, 1]", self.weight_active),
            });
        }
        if !(self.var_small > 0.0 && self.var_small.is_finite())
            || !(self.var_large > 0.0 && self.var_large.is_finite())
        {
            return Err(Error::InvalidParameter {
                name: "variance",
                reason: format!("({}, {}) must be positive", self.var_small, self.var_large),
            });
        }
        Ok(())
    }

    fn ordered(mut self) -> Self {
        if self.var_small > self.var_large {
            std::mem::swap(&mut self.var_small, &mut self.var_large);
            self.weight_active = 1.0 - self.weight_active;
        }
        self
    }

    fn l1(&self) -> f64 {
        self.weight_active.abs() + self.var_small.abs() + self.var_large.abs()
    }

    fn l1_distance(&self, other: &Self) -> f64 {
        (self.weight_active - other.weight_active).abs()
            + (self.var_small - other.var_small).abs()
            + (self.var_large - other.var_large).abs()
    }
}

/// How the SNR is read off a fitted mixture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EmSnrRule {
    /// `[p̃·(σ2² − σ1²)/σ1²]₊`
    #[default]
    MixtureWeight,
    /// `[(mean(z) − σ1²)/σ1²]₊`
    MeanPower,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmResult {
    pub params: MixtureParams,
    pub iterations: usize,
    pub converged: bool,
    pub n0_em: f64,
    pub snr_em: f64,
    /// `N(16D + 12) + 3D`, the reference cost floor for `N` iterations.
    pub op_estimate: u64,
    /// Operations actually performed by this implementation.
    pub ops: OpCounter,
    /// Mixture log-likelihood at the initial point and after each iteration.
    pub log_likelihood: Vec<f64>,
    mean_z: f64,
}

impl EmResult {
    pub fn snr(&self, rule: EmSnrRule) -> f64 {
        let p = self.params;
        let raw = match rule {
            EmSnrRule::MixtureWeight => p.weight_active * (p.var_large - p.var_small) / p.var_small,
            EmSnrRule::MeanPower => (self.mean_z - p.var_small) / p.var_small,
        };
        raw.max(0.0)
    }

    /// Signal power implied by the fit, `snr_em · n0_em`.
    pub fn signal_power(&self) -> f64 {
        self.snr_em * self.n0_em
    }
}

pub fn reference_op_count(dim: usize, iterations: usize) -> u64 {
    let (d, n) = (dim as u64, iterations as u64);
    n * (16 * d + 12) + 3 * d
}

/// Median-seeded starting point: equal weights, the small component at the
/// blind noise estimate and the large one well above it.
pub fn em_default_init(z: &[f64]) -> Result<MixtureParams> {
    if z.len() < 2 {
        return Err(Error::domain(
            "EM initialization needs at least two samples",
        ));
    }
    check_powers(z)?;
    let mean = z.iter().sum::<f64>() / z.len() as f64;
    if !(mean > 0.0) {
        return Err(Error::domain("EM initialization on all-zero data"));
    }
    let floor = VARIANCE_FLOOR * mean;
    let small = (sample_median(z, MedianMethod::Quickselect)?.value / LN_2).max(floor);
    let large = (2.0 * mean).max(2.0 * small);
    Ok(MixtureParams {
        weight_active: 0.5,
        var_small: small,
        var_large: large,
    })
}

fn check_powers(z: &[f64]) -> Result<()> {
    if z.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
        return Err(Error::domain("EM input must be finite and non-negative"));
    }
    Ok(())
}

/// `ln((1−p)/σ1² e^{−z/σ1²} + p/σ2² e^{−z/σ2²})`, evaluated stably.
fn log_density(z: f64, p: &MixtureParams) -> f64 {
    let a = if p.weight_active < 1.0 {
        (1.0 - p.weight_active).ln() - p.var_small.ln() - z / p.var_small
    } else {
        f64::NEG_INFINITY
    };
    let b = if p.weight_active > 0.0 {
        p.weight_active.ln() - p.var_large.ln() - z / p.var_large
    } else {
        f64::NEG_INFINITY
    };
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

pub fn log_likelihood(z: &[f64], params: &MixtureParams) -> f64 {
    z.iter().map(|&v| log_density(v, params)).sum()
}

pub fn em_fit(z: &[f64], init: MixtureParams) -> Result<EmResult> {
    if z.is_empty() {
        return Err(Error::domain("EM on empty data"));
    }
    check_powers(z)?;
    init.validate()?;

    let d = z.len();
    let mean_z = z.iter().sum::<f64>() / d as f64;
    let sum_z = mean_z * d as f64;
    let floor = VARIANCE_FLOOR * mean_z;
    let mut ops = OpCounter::new();
    ops.add(d as u64);

    let mut params = init.ordered();
    let mut history = vec![log_likelihood(z, &params)];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let p = params.weight_active;

        // E-step: γ_d = 1 / (1 + exp(−bias − z_d·(1/σ1² − 1/σ2²)))
        let (sum_g, sum_gz) = if p <= 0.0 {
            (0.0, 0.0)
        } else if p >= 1.0 {
            (d as f64, sum_z)
        } else {
            let slope = 1.0 / params.var_small - 1.0 / params.var_large;
            let bias = p.ln() - (1.0 - p).ln() + params.var_small.ln() - params.var_large.ln();
            ops.div(2);
            ops.add(4);
            ops.exp(4);
            let mut sg = 0.0;
            let mut sgz = 0.0;
            for &v in z {
                let g = 1.0 / (1.0 + (-bias - slope * v).exp());
                sg += g;
                sgz += g * v;
            }
            ops.mul(2 * d as u64);
            ops.add(4 * d as u64);
            ops.exp(d as u64);
            ops.div(d as u64);
            (sg, sgz)
        };
        let sum_rest = d as f64 - sum_g;
        ops.add(2);

        // M-step, with collapse handling for an emptied component
        let prev = params;
        let mut collapsed = false;
        if !(sum_g > 0.0) {
            params.weight_active = 0.0;
            params.var_small = (sum_z / d as f64).max(floor);
            collapsed = true;
        } else if !(sum_rest > 0.0) {
            params.weight_active = 1.0;
            params.var_large = (sum_z / d as f64).max(floor);
            collapsed = true;
        } else {
            params.weight_active = sum_g / d as f64;
            params.var_large = (sum_gz / sum_g).max(floor);
            params.var_small = ((sum_z - sum_gz) / sum_rest).max(floor);
            ops.div(3);
            ops.add(1);
            ops.cmp(2);
        }
        params = params.ordered();
        ops.cmp(1);
        history.push(log_likelihood(z, &params));

        if collapsed {
            converged = true;
            break;
        }
        let change = params.l1_distance(&prev) / prev.l1();
        ops.add(8);
        ops.div(1);
        ops.cmp(1);
        if change < RELATIVE_TOLERANCE {
            converged = true;
            break;
        }
    }

    let mut result = EmResult {
        params,
        iterations,
        converged,
        n0_em: params.var_small,
        snr_em: 0.0,
        op_estimate: reference_op_count(d, iterations),
        ops,
        log_likelihood: history,
        mean_z,
    };
    result.snr_em = result.snr(EmSnrRule::MixtureWeight);
    Ok(result)
}

/// Default-initialized fit on `|y|²`.
pub fn em_fit_default(z: &[f64]) -> Result<EmResult> {
    let init = em_default_init(z)?;
    em_fit(z, init)
}
