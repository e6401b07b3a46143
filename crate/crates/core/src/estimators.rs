//! Blind estimators of noise power, signal power, SNR and post-denoising
//! MSE, plus genie-aided references that see `s` and `n` separately.
//!
//! All four blind estimators use only the observation `y`. The noise power
//! is `median(|y|²) / ln 2`: for pure complex Gaussian noise `|y_d|²` is
//! exponential with median `N0·ln 2`, and sparse signal entries act as
//! outliers that barely move the median.

use std::f64::consts::LN_2;

use num_complex::Complex64;

use crate::denoise::EntrywiseDenoiser;
use crate::error::{Error, Result};
use crate::ops::OpCounter;
use crate::selection::{sample_median, MedianMethod};
use crate::signal::ComplexVector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoisePowerEstimate {
    pub value: f64,
    pub median_z: f64,
}

impl NoisePowerEstimate {
    pub fn from_median(median_z: f64) -> Self {
        Self {
            value: median_z / LN_2,
            median_z,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalPowerEstimate {
    pub value: f64,
    /// `||y||²/D − N0̂` before clipping at zero.
    pub raw: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrEstimate {
    pub value: f64,
    pub raw: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MseEstimate {
    pub value: f64,
    pub raw_sure: f64,
    pub divergence_sum: f64,
}

/// Blind noise power via quickselect.
pub fn estimate_noise_power(y: &ComplexVector) -> Result<NoisePowerEstimate> {
    estimate_noise_power_with(y, MedianMethod::Quickselect).map(|(est, _)| est)
}

pub fn estimate_noise_power_with(
    y: &ComplexVector,
    method: MedianMethod,
) -> Result<(NoisePowerEstimate, OpCounter)> {
    let z = y.abs_squared();
    let med = sample_median(&z, method)?;
    let mut ops = med.ops;
    // |y_d|²: two mults and an add per entry, then one division
    let d = y.len() as u64;
    ops.mul(2 * d);
    ops.add(d);
    ops.div(1);
    Ok((NoisePowerEstimate::from_median(med.value), ops))
}

fn check_n0_hat(n0_hat: f64) -> Result<()> {
    if n0_hat >= 0.0 && n0_hat.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "noise power estimate must be finite and non-negative, got {n0_hat}"
        )))
    }
}

pub fn estimate_signal_power(y: &ComplexVector, n0_hat: f64) -> Result<SignalPowerEstimate> {
    check_n0_hat(n0_hat)?;
    let raw = y.mean_power() - n0_hat;
    Ok(SignalPowerEstimate {
        value: raw.max(0.0),
        raw,
    })
}

pub fn estimate_snr(y: &ComplexVector, n0_hat: f64) -> Result<SnrEstimate> {
    check_n0_hat(n0_hat)?;
    if n0_hat == 0.0 {
        return Err(Error::domain("SNR undefined for zero noise power estimate"));
    }
    let raw = y.mean_power() / n0_hat - 1.0;
    Ok(SnrEstimate {
        value: raw.max(0.0),
        raw,
    })
}

/// Blind MSE of `f(y)` as an estimate of `s`, with the noise power replaced
/// by `n0_hat`.
pub fn estimate_mse<F: EntrywiseDenoiser + ?Sized>(
    y: &ComplexVector,
    f: &F,
    n0_hat: f64,
) -> Result<MseEstimate> {
    check_n0_hat(n0_hat)?;
    let d = y.len() as f64;
    let mut residual = 0.0;
    let mut divergence_sum = 0.0;
    for (k, (re, im)) in y.iter().enumerate() {
        let yd = Complex64::new(re, im);
        let fd = f.apply(yd);
        residual += (fd - yd).norm_sqr();
        match f.divergence(yd) {
            Some(v) if v.is_finite() => divergence_sum += v,
            _ => {
                return Err(Error::domain(format!(
                    "divergence undefined at entry {k} ({re}, {im})"
                )))
            }
        }
    }
    let raw_sure = residual / d - n0_hat + n0_hat * (divergence_sum / d);
    Ok(MseEstimate {
        value: raw_sure.max(0.0),
        raw_sure,
        divergence_sum,
    })
}

/// All four blind estimates for one observation, chained on the clipped
/// noise estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateReport {
    pub noise: NoisePowerEstimate,
    pub signal: SignalPowerEstimate,
    pub snr: Option<SnrEstimate>,
    pub mse: Option<MseEstimate>,
    pub ops: OpCounter,
}

pub fn estimate_all<F: EntrywiseDenoiser + ?Sized>(
    y: &ComplexVector,
    f: Option<&F>,
    method: MedianMethod,
) -> Result<EstimateReport> {
    let (noise, ops) = estimate_noise_power_with(y, method)?;
    let signal = estimate_signal_power(y, noise.value)?;
    let snr = if noise.value > 0.0 {
        Some(estimate_snr(y, noise.value)?)
    } else {
        None
    };
    let mse = match f {
        Some(f) => Some(estimate_mse(y, f, noise.value)?),
        None => None,
    };
    Ok(EstimateReport {
        noise,
        signal,
        snr,
        mse,
        ops,
    })
}

/// Sample quantities computed with separate access to `s` and `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenieReport {
    pub es_bar: f64,
    pub n0_bar: f64,
    pub snr_bar: f64,
    pub e0_bar: f64,
}

pub fn genie_estimates<F: EntrywiseDenoiser + ?Sized>(
    s: &ComplexVector,
    n: &ComplexVector,
    y: &ComplexVector,
    f: &F,
) -> Result<GenieReport> {
    s.check_len(n)?;
    s.check_len(y)?;
    let es_bar = s.mean_power();
    let n0_bar = n.mean_power();
    if !(n0_bar > 0.0) {
        return Err(Error::domain(
            "genie SNR undefined for an all-zero noise vector",
        ));
    }
    let d = y.len() as f64;
    let e0_sum: f64 = y
        .iter()
        .zip(s.iter())
        .map(|((yr, yi), (sr, si))| {
            (f.apply(Complex64::new(yr, yi)) - Complex64::new(sr, si)).norm_sqr()
        })
        .sum();
    Ok(GenieReport {
        es_bar,
        n0_bar,
        snr_bar: es_bar / n0_bar,
        e0_bar: e0_sum / d,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::denoise::DenoiserFunction;
    use crate::rng::RngStream;
    use crate::signal::{observe_bcg, sample_noise, BcgParams};

    fn with_power(mean_power: f64, d: usize) -> ComplexVector {
        ComplexVector::from_real(vec![mean_power.sqrt(); d]).unwrap()
    }

    #[test]
    fn noise_on_constant_array_is_exact() {
        let exact = ComplexVector::from_real(vec![LN_2.sqrt(); 4]).unwrap();
        let z = exact.abs_squared();
        let v = estimate_noise_power(&exact).unwrap();
        assert_eq!(v.median_z, z[0]);
        assert!((v.value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn noise_on_pure_noise() {
        let mut rng = RngStream::new(1, 0);
        let y = sample_noise(1.0, 1_000_000, &mut rng).unwrap();
        let v = estimate_noise_power(&y).unwrap();
        assert!((v.value - 1.0).abs() < 0.01, "{}", v.value);
        let (sorted, _) = estimate_noise_power_with(&y, MedianMethod::FullSort).unwrap();
        assert_eq!(sorted.value, v.value);
    }

    #[test]
    fn signal_power_arithmetic_and_clip() {
        let y = with_power(3.0, 8);
        let e = estimate_signal_power(&y, 1.0).unwrap();
        assert!((e.value - 2.0).abs() < 1e-12);
        let y = with_power(0.5, 8);
        let e = estimate_signal_power(&y, 1.0).unwrap();
        assert_eq!(e.value, 0.0);
        assert!((e.raw + 0.5).abs() < 1e-12);
        assert!(estimate_signal_power(&y, -1.0).is_err());
    }

    #[test]
    fn signal_power_on_pure_noise_is_small() {
        let mut rng = RngStream::new(2, 0);
        let y = sample_noise(1.0, 1_000_000, &mut rng).unwrap();
        let n0 = estimate_noise_power(&y).unwrap().value;
        assert!(estimate_signal_power(&y, n0).unwrap().value <= 0.02);
    }

    #[test]
    fn snr_arithmetic_and_floor() {
        let y = with_power(2.0, 8);
        assert!((estimate_snr(&y, 1.0).unwrap().value - 1.0).abs() < 1e-12);
        let y = with_power(1.0, 8);
        assert!(estimate_snr(&y, 1.0).unwrap().value.abs() < 1e-12);
        assert!(estimate_snr(&y, 0.0).is_err());
    }

    #[test]
    fn snr_consistent_with_signal_power() {
        let params = BcgParams::new(64, 0.1, 10.0, 1.0).unwrap();
        for t in 0..200 {
            let obs = observe_bcg(&params, &mut RngStream::new(3, t));
            let n0 = estimate_noise_power(&obs.observed).unwrap().value;
            let es = estimate_signal_power(&obs.observed, n0).unwrap();
            let snr = estimate_snr(&obs.observed, n0).unwrap();
            assert!(es.value >= 0.0 && snr.value >= 0.0);
            assert_eq!(snr.value == 0.0, snr.raw <= 0.0);
            assert!((snr.raw - es.raw / n0).abs() <= 1e-12 * snr.raw.abs().max(1.0));
        }
    }

    #[test]
    fn mse_identity_and_zero_map() {
        let mut rng = RngStream::new(5, 0);
        let y = sample_noise(1.0, 33, &mut rng).unwrap();
        let id = estimate_mse(&y, &DenoiserFunction::Identity, 0.7).unwrap();
        assert_eq!(id.raw_sure, 0.7);
        let st0 = estimate_mse(&y, &DenoiserFunction::SoftThreshold(0.0), 0.7).unwrap();
        assert_eq!(st0.raw_sure, 0.7);
        let zero = estimate_mse(&y, &DenoiserFunction::Zero, 0.7).unwrap();
        assert!((zero.raw_sure - (y.mean_power() - 0.7)).abs() < 1e-12);
    }

    struct Undefined;
    impl EntrywiseDenoiser for Undefined {
        fn apply(&self, y: Complex64) -> Complex64 {
            y
        }
        fn divergence(&self, y: Complex64) -> Option<f64> {
            if y.re > 0.0 {
                Some(2.0)
            } else {
                None
            }
        }
    }

    #[test]
    fn mse_rejects_undefined_divergence() {
        let y = ComplexVector::from_real(vec![1.0, -1.0]).unwrap();
        assert!(matches!(
            estimate_mse(&y, &Undefined, 1.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn genie_examples() {
        let mut rng = RngStream::new(6, 0);
        let n = sample_noise(1.0, 64, &mut rng).unwrap();
        let s = ComplexVector::zeros(64);
        let y = s.add(&n).unwrap();
        let g = genie_estimates(&s, &n, &y, &DenoiserFunction::Identity).unwrap();
        assert_eq!(g.es_bar, 0.0);
        assert_eq!(g.snr_bar, 0.0);
        assert!((g.e0_bar - g.n0_bar).abs() < 1e-15);

        let n2 = n.scale(2.0);
        let y2 = s.add(&n2).unwrap();
        let g2 = genie_estimates(&s, &n2, &y2, &DenoiserFunction::Identity).unwrap();
        assert!((g2.n0_bar - 4.0 * g.n0_bar).abs() < 1e-12);

        let short = ComplexVector::zeros(3);
        assert!(genie_estimates(&short, &n, &y, &DenoiserFunction::Identity).is_err());
    }

    #[test]
    fn report_chains_on_noise_estimate() {
        let params = BcgParams::new(128, 0.1, 10.0, 1.0).unwrap();
        let obs = observe_bcg(&params, &mut RngStream::new(8, 0));
        let f = DenoiserFunction::SoftThreshold(1.0);
        let rep = estimate_all(&obs.observed, Some(&f), MedianMethod::Quickselect).unwrap();
        let n0 = estimate_noise_power(&obs.observed).unwrap();
        assert_eq!(rep.noise, n0);
        assert_eq!(
            rep.snr.unwrap(),
            estimate_snr(&obs.observed, n0.value).unwrap()
        );
        assert!(rep.ops.total() > 0);
    }
}
