//! Blind estimation of noise power, signal power, SNR and denoising MSE
//! for sparse vectors observed in complex Gaussian noise.
//!
//! The noise power is read off the median of `|y|²`, which sparse signal
//! entries barely perturb. Signal power and SNR follow from the sample
//! power, and the MSE of any entrywise denoiser follows from Stein's
//! unbiased risk estimate with the blind noise power plugged in. Chaining
//! the last one into a soft-threshold search yields a parameter-free
//! beamspace channel denoiser.
//!
//! ```
//! use blindsnr::{observe_bcg, denoise_blind, BcgParams, RngStream};
//!
//! let params = BcgParams::from_snr(256, 0.1, 10.0, 1.0).unwrap();
//! let obs = observe_bcg(&params, &mut RngStream::new(7, 0));
//! let out = denoise_blind(&obs.observed);
//! assert!(out.noise.value > 0.5 && out.noise.value < 2.0);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod channel;
pub mod denoise;
pub mod em;
pub mod error;
pub mod estimators;
pub mod ops;
pub mod rng;
pub mod selection;
pub mod signal;
pub mod theory;

pub use denoise::{
    denoise_blind, denoise_with_n0, search_threshold, soft_threshold, sure_of_threshold,
    BlindDenoise, DenoiserFunction, EntrywiseDenoiser, ThresholdSearchResult,
};
pub use em::{em_default_init, em_fit, em_fit_default, EmResult, EmSnrRule, MixtureParams};
pub use error::{Error, Result};
pub use estimators::{
    estimate_all, estimate_mse, estimate_noise_power, estimate_signal_power, estimate_snr,
    genie_estimates, EstimateReport, GenieReport, MseEstimate, NoisePowerEstimate,
    SignalPowerEstimate, SnrEstimate,
};
pub use ops::OpCounter;
pub use rng::RngStream;
pub use selection::{kth_smallest, sample_median, MedianMethod, MedianResult};
pub use signal::{observe_bcg, sample_bcg, sample_noise, BcgParams, ComplexVector, Observation};
pub use theory::{exact_power_median, theorem1_bounds, verify_sandwich, BoundCheck};
