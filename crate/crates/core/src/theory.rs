//! Large-dimension behaviour of the median-based noise estimator.
//!
//! Each entry of `z = |y|²` under the noisy sparse model has CDF
//!
//! ```text
//! F(z) = (1−p)(1 − e^{−z/N0}) + p(1 − e^{−z/(N0+Eh)})
//! ```
//!
//! Its median `m` is found here by bisection, and the noise power is
//! sandwiched as
//!
//! ```text
//! m / min{ ln((2−2p)/(1−2p)), ln2·(1+SNR) } ≤ N0 ≤ (m/ln2)·((1−p) + p²/(p+SNR))
//! ```
//!
//! whenever `p ≤ (1/2 − e⁻²)/(1 − e⁻²)`.

use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::signal::BcgParams;

/// Largest activity rate for which the sandwich holds, `(1/2 − e⁻²)/(1 − e⁻²)`.
pub fn activity_rate_limit() -> f64 {
    let e2 = (-2.0f64).exp();
    (0.5 - e2) / (1.0 - e2)
}

const MEDIAN_TOLERANCE: f64 = 1e-12;

/// Median of one entry of `|y|²`, by bisection on the closed-form CDF.
pub fn exact_power_median(params: &BcgParams) -> f64 {
    let mut lo = 0.0;
    let mut hi = (params.noise_power() + params.active_power()) * LN_2 + 1.0;
    for _ in 0..400 {
        if hi - lo <= MEDIAN_TOLERANCE {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if params.power_cdf(mid) < 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `ln((2−2p)/(1−2p))` for `p < 1/2`.
fn sparse_log_factor(p: f64) -> Option<f64> {
    if p < 0.5 {
        Some(LN_2 + (-p).ln_1p() - (-2.0 * p).ln_1p())
    } else {
        None
    }
}

/// `(1−p) + p²/(p+SNR)`.
fn pessimism_factor(p: f64, snr: f64) -> f64 {
    (1.0 - p) + p * p / (p + snr)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck {
    pub params: BcgParams,
    pub median_exact: f64,
    pub lower_bound_n0: f64,
    pub upper_bound_n0: f64,
    pub condition_p_ok: bool,
    /// `N0·ln((2−2p)/(1−2p))`, defined only for `p < 1/2`.
    pub lemma2_ub: Option<f64>,
    pub lemma3_ub: f64,
    pub lemma4_lb: f64,
}

impl BoundCheck {
    /// How far the true noise power falls outside `[lower, upper]`,
    /// relative to the noise power. Zero when sandwiched.
    pub fn violation(&self) -> f64 {
        let n0 = self.params.noise_power();
        let below = self.lower_bound_n0 - n0;
        let above = n0 - self.upper_bound_n0;
        below.max(above).max(0.0) / n0
    }
}

pub fn theorem1_bounds(params: &BcgParams) -> BoundCheck {
    let p = params.activity_rate();
    let n0 = params.noise_power();
    let snr = params.snr();
    let m = exact_power_median(params);

    let log_factor = sparse_log_factor(p);
    let snr_factor = LN_2 * (1.0 + snr);
    let denom = match log_factor {
        Some(l) => l.min(snr_factor),
        None => snr_factor,
    };
    let pess = pessimism_factor(p, snr);

    BoundCheck {
        params: *params,
        median_exact: m,
        lower_bound_n0: m / denom,
        upper_bound_n0: (m / LN_2) * pess,
        condition_p_ok: p <= activity_rate_limit(),
        lemma2_ub: log_factor.map(|l| n0 * l),
        lemma3_ub: LN_2 * (n0 + params.signal_power()),
        lemma4_lb: LN_2 * n0 / pess,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SandwichReport {
    pub points: Vec<BoundCheck>,
    pub max_violation: f64,
}

pub const SANDWICH_TOLERANCE: f64 = 1e-10;

/// Checks `lower ≤ N0 ≤ upper` at every grid point.
pub fn verify_sandwich(grid: &[BcgParams]) -> Result<SandwichReport> {
    let mut points = Vec::with_capacity(grid.len());
    let mut max_violation = 0.0f64;
    for params in grid {
        let check = theorem1_bounds(params);
        if !check.condition_p_ok {
            return Err(Error::InvalidParameter {
                name: "activity_rate",
                reason: format!(
                    "p = {} exceeds the sandwich limit {:.6}",
                    params.activity_rate(),
                    activity_rate_limit()
                ),
            });
        }
        let v = check.violation();
        if v > SANDWICH_TOLERANCE {
            return Err(Error::TheoryViolation {
                p: params.activity_rate(),
                snr: params.snr(),
                detail: format!(
                    "N0 = {} outside [{}, {}]",
                    params.noise_power(),
                    check.lower_bound_n0,
                    check.upper_bound_n0
                ),
            });
        }
        max_violation = max_violation.max(v);
        points.push(check);
    }
    Ok(SandwichReport {
        points,
        max_violation,
    })
}

/// The `p × SNR` grid used for the sandwich sweep, at `N0 = 1`.
pub fn default_grid(dim: usize) -> Vec<BcgParams> {
    let ps = [0.01, 0.05, 0.1, 0.2, 0.4];
    let snrs = [0.01, 0.1, 1.0, 10.0, 100.0];
    ps.iter()
        .flat_map(|&p| snrs.iter().map(move |&snr| (p, snr)))
        .map(|(p, snr)| BcgParams::from_snr(dim, p, snr, 1.0).expect("valid grid point"))
        .collect()
}
