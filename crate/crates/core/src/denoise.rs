//! Complex soft-thresholding with SURE-driven threshold selection.
//!
//! For soft thresholding `f(y; τ) = (y/|y|)·max(|y| − τ, 0)` the Stein
//! risk estimate reduces to
//!
//! ```text
//! SURE(τ) = (1/D) Σ min(|y_d|², τ²) − N0 + (N0/D) Σ_{|y_d|>τ} (2 − τ/|y_d|)
//! ```
//!
//! Between consecutive sorted magnitudes the above-threshold set is fixed,
//! so SURE is a convex quadratic in τ with minimizer `N0·S_k / (2 c_k)`,
//! where `c_k` counts the entries above the piece and `S_k` sums their
//! reciprocal magnitudes. [`search_threshold`] evaluates every piece's
//! clamped minimizer after one sort and one backward pass.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::estimators::NoisePowerEstimate;
use crate::selection::median_of_sorted;
use crate::signal::ComplexVector;

/// An entrywise map together with its divergence
/// `∂Re f/∂Re y + ∂Im f/∂Im y`.
pub trait EntrywiseDenoiser {
    fn apply(&self, y: Complex64) -> Complex64;

    /// `None` where the map is not differentiable in the weak sense used
    /// by the risk estimate.
    fn divergence(&self, y: Complex64) -> Option<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DenoiserFunction {
    Identity,
    Zero,
    SoftThreshold(f64),
}

impl DenoiserFunction {
    pub fn soft_threshold(tau: f64) -> Result<Self> {
        check_tau(tau)?;
        Ok(DenoiserFunction::SoftThreshold(tau))
    }

    pub fn apply_vector(&self, y: &ComplexVector) -> ComplexVector {
        map_vector(self, y)
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau >= 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "threshold must be non-negative, got {tau}"
        )))
    }
}

impl EntrywiseDenoiser for DenoiserFunction {
    fn apply(&self, y: Complex64) -> Complex64 {
        match *self {
            DenoiserFunction::Identity => y,
            DenoiserFunction::Zero => Complex64::new(0.0, 0.0),
            DenoiserFunction::SoftThreshold(tau) => shrink(y, tau),
        }
    }

    fn divergence(&self, y: Complex64) -> Option<f64> {
        match *self {
            DenoiserFunction::Identity => Some(2.0),
            DenoiserFunction::Zero => Some(0.0),
            DenoiserFunction::SoftThreshold(tau) => {
                if !(tau >= 0.0) || !y.re.is_finite() || !y.im.is_finite() {
                    return None;
                }
                Some(shrink_divergence(y.norm(), tau))
            }
        }
    }
}

#[inline]
fn shrink(y: Complex64, tau: f64) -> Complex64 {
    let r = y.norm();
    if r <= tau {
        Complex64::new(0.0, 0.0)
    } else {
        y * (1.0 - tau / r)
    }
}

/// Entries at exactly `|y| = τ` count as shrunk to zero. At `τ = 0` the
/// map is the identity, whose divergence is 2 everywhere including `y = 0`.
#[inline]
fn shrink_divergence(r: f64, tau: f64) -> f64 {
    if r > tau {
        2.0 - tau / r
    } else if tau == 0.0 {
        2.0
    } else {
        0.0
    }
}

pub fn map_vector<F: EntrywiseDenoiser + ?Sized>(f: &F, y: &ComplexVector) -> ComplexVector {
    let (re, im) = y
        .iter()
        .map(|(r, i)| {
            let v = f.apply(Complex64::new(r, i));
            (v.re, v.im)
        })
        .unzip();
    ComplexVector::from_parts_unchecked(re, im)
}

pub fn soft_threshold(y: &ComplexVector, tau: f64) -> Result<ComplexVector> {
    check_tau(tau)?;
    Ok(map_vector(&DenoiserFunction::SoftThreshold(tau), y))
}

/// Risk estimate of soft thresholding at `tau` given noise power `n0`.
pub fn sure_of_threshold(y: &ComplexVector, tau: f64, n0: f64) -> Result<f64> {
    check_tau(tau)?;
    if !(n0 > 0.0) {
        return Err(Error::domain(format!(
            "noise power must be positive, got {n0}"
        )));
    }
    let d = y.len() as f64;
    let tau_sq = tau * tau;
    let mut residual = 0.0;
    let mut div = 0.0;
    for (re, im) in y.iter() {
        let z = re * re + im * im;
        residual += z.min(tau_sq);
        div += shrink_divergence(z.sqrt(), tau);
    }
    Ok(residual / d - n0 + n0 * (div / d))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdSearchResult {
    pub tau_star: f64,
    pub sure_at_tau: f64,
    pub n0_used: f64,
    pub candidates_evaluated: usize,
}

/// SURE-minimizing soft threshold for `y` at noise power `n0`.
pub fn search_threshold(y: &ComplexVector, n0: f64) -> Result<ThresholdSearchResult> {
    if !(n0 > 0.0 && n0.is_finite()) {
        return Err(Error::domain(format!(
            "noise power must be positive, got {n0}"
        )));
    }
    let mut mags: Vec<f64> = y.iter().map(|(r, i)| (r * r + i * i).sqrt()).collect();
    mags.sort_unstable_by(f64::total_cmp);
    Ok(search_sorted(&mags, n0))
}

/// Piecewise search over ascending magnitudes `r`.
pub(crate) fn search_sorted(r: &[f64], n0: f64) -> ThresholdSearchResult {
    let n = r.len();
    let d = n as f64;

    // inv_tail[k] = Σ_{i ≥ k} 1/r_i over nonzero magnitudes
    let mut inv_tail = vec![0.0; n + 1];
    for k in (0..n).rev() {
        let inv = if r[k] > 0.0 { 1.0 / r[k] } else { 0.0 };
        inv_tail[k] = inv_tail[k + 1] + inv;
    }

    // τ = 0 is the identity map; its risk estimate is exactly n0.
    let mut best_tau = 0.0;
    let mut best_sure = n0;
    let mut evaluated = 1usize;

    let mut head_sq = 0.0; // Σ_{i < k} r_i²
    for k in 0..=n {
        if k > 0 {
            head_sq += r[k - 1] * r[k - 1];
        }
        let lo = if k == 0 { 0.0 } else { r[k - 1] };
        let hi = if k == n { f64::INFINITY } else { r[k] };
        if lo >= hi {
            continue;
        }
        let above = (n - k) as f64;
        let tail_inv = inv_tail[k];
        let tau = if above == 0.0 {
            lo
        } else {
            (n0 * tail_inv / (2.0 * above)).clamp(lo, hi)
        };
        // right end belongs to the next piece; τ = 0 already covered
        if tau >= hi || tau == 0.0 {
            continue;
        }
        let sure =
            (head_sq + above * tau * tau) / d - n0 + n0 * ((2.0 * above - tau * tail_inv) / d);
        evaluated += 1;
        if sure < best_sure {
            best_sure = sure;
            best_tau = tau;
        }
    }

    ThresholdSearchResult {
        tau_star: best_tau,
        sure_at_tau: best_sure,
        n0_used: n0,
        candidates_evaluated: evaluated,
    }
}

/// Soft-threshold `y` at the SURE-optimal threshold for a given noise power.
pub fn denoise_with_n0(
    y: &ComplexVector,
    n0: f64,
) -> Result<(ComplexVector, ThresholdSearchResult)> {
    let search = search_threshold(y, n0)?;
    let out = map_vector(&DenoiserFunction::SoftThreshold(search.tau_star), y);
    Ok((out, search))
}

#[derive(Debug, Clone)]
pub struct BlindDenoise {
    pub estimate: ComplexVector,
    pub search: ThresholdSearchResult,
    pub noise: NoisePowerEstimate,
}

/// Parameter-free denoising: the noise power comes from the median of the
/// sorted `|y|²` that the threshold search needs anyway, so the whole
/// pipeline performs a single sort.
///
/// When the estimated noise power is zero (e.g. `y = 0`) the input is
/// returned unchanged with `τ = 0`.
pub fn denoise_blind(y: &ComplexVector) -> BlindDenoise {
    let mut z = y.abs_squared();
    z.sort_unstable_by(f64::total_cmp);
    let median_z = median_of_sorted(&z);
    let noise = NoisePowerEstimate::from_median(median_z);

    if !(noise.value > 0.0) {
        return BlindDenoise {
            estimate: y.clone(),
            search: ThresholdSearchResult {
                tau_star: 0.0,
                sure_at_tau: 0.0,
                n0_used: noise.value,
                candidates_evaluated: 0,
            },
            noise,
        };
    }

    let mags: Vec<f64> = z.iter().map(|v| v.sqrt()).collect();
    let search = search_sorted(&mags, noise.value);
    let estimate = map_vector(&DenoiserFunction::SoftThreshold(search.tau_star), y);
    BlindDenoise {
        estimate,
        search,
        noise,
    }
}
