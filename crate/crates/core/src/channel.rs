//! Synthetic multi-user mmWave uplink: line-of-sight channels on a
//! half-wavelength uniform linear array, beamspace denoising, LMMSE
//! detection and uncoded 16-QAM bit-error measurement.
//!
//! Noise convention: a single SNR knob sets `N0 = 1/SNR`. Channels are
//! normalized to `E||h||²/D = 1`, so `N0` is both the per-entry noise of
//! each noisy beamspace channel observation and the per-antenna noise of
//! the data phase (transmit vector energy `E_x = 1`, split evenly over
//! the users).

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::{Fft, FftPlanner};

use crate::denoise::{denoise_blind, denoise_with_n0};
use crate::em::em_fit_default;
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::signal::ComplexVector;

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelConfig {
    pub antennas: usize,
    pub users: usize,
    pub paths_per_user: usize,
    /// Relative path powers; normalized internally. Empty means equal power.
    pub path_power_profile: Vec<f64>,
    pub snr_db_range: Vec<f64>,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            antennas: 128,
            users: 8,
            paths_per_user: 1,
            path_power_profile: Vec::new(),
            snr_db_range: vec![-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0],
        }
    }
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.antennas.is_power_of_two() {
            return Err(Error::InvalidParameter {
                name: "antennas",
                reason: format!("{} is not a power of two", self.antennas),
            });
        }
        if self.users == 0 || self.users > self.antennas {
            return Err(Error::InvalidParameter {
                name: "users",
                reason: format!("{} not in 1..={}", self.users, self.antennas),
            });
        }
        if self.paths_per_user == 0 {
            return Err(Error::InvalidParameter {
                name: "paths_per_user",
                reason: "must be at least 1".into(),
            });
        }
        if !self.path_power_profile.is_empty() {
            if self.path_power_profile.len() != self.paths_per_user {
                return Err(Error::Dimension {
                    expected: self.paths_per_user,
                    actual: self.path_power_profile.len(),
                });
            }
            if self
                .path_power_profile
                .iter()
                .any(|&g| !(g >= 0.0 && g.is_finite()))
                || self.path_power_profile.iter().sum::<f64>() <= 0.0
            {
                return Err(Error::InvalidParameter {
                    name: "path_power_profile",
                    reason: "gains must be non-negative with positive sum".into(),
                });
            }
        }
        Ok(())
    }

    fn path_powers(&self) -> Vec<f64> {
        if self.path_power_profile.is_empty() {
            vec![1.0 / self.paths_per_user as f64; self.paths_per_user]
        } else {
            let total: f64 = self.path_power_profile.iter().sum();
            self.path_power_profile.iter().map(|g| g / total).collect()
        }
    }
}

pub fn snr_db_to_n0(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

/// `a(θ)_d = exp(iπ d sin θ)`, `d = 0..D−1`.
pub fn steering_vector(dim: usize, theta: f64) -> Vec<Complex64> {
    let phase = PI * theta.sin();
    (0..dim)
        .map(|d| Complex64::from_polar(1.0, phase * d as f64))
        .collect()
}

/// Unitary DFT across the array.
#[derive(Clone)]
pub struct Beamspace {
    dim: usize,
    scale: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Beamspace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Beamspace").field("dim", &self.dim).finish()
    }
}

impl Beamspace {
    pub fn new(dim: usize) -> Result<Self> {
        if !dim.is_power_of_two() {
            return Err(Error::domain(format!(
                "beamspace transform needs a power-of-two length, got {dim}"
            )));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            dim,
            scale: 1.0 / (dim as f64).sqrt(),
            forward: planner.plan_fft_forward(dim),
            inverse: planner.plan_fft_inverse(dim),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn forward_in_place(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.dim);
        self.forward.process(buf);
        buf.iter_mut().for_each(|v| *v *= self.scale);
    }

    pub fn inverse_in_place(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.dim);
        self.inverse.process(buf);
        buf.iter_mut().for_each(|v| *v *= self.scale);
    }

    pub fn forward(&self, h: &ComplexVector) -> Result<ComplexVector> {
        self.check(h)?;
        let mut buf = h.to_complex();
        self.forward_in_place(&mut buf);
        ComplexVector::from_complex(&buf)
    }

    pub fn inverse(&self, x: &ComplexVector) -> Result<ComplexVector> {
        self.check(x)?;
        let mut buf = x.to_complex();
        self.inverse_in_place(&mut buf);
        ComplexVector::from_complex(&buf)
    }

    fn check(&self, v: &ComplexVector) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                actual: v.len(),
            });
        }
        Ok(())
    }
}

pub fn beamspace(h: &ComplexVector) -> Result<ComplexVector> {
    Beamspace::new(h.len())?.forward(h)
}

pub fn inverse_beamspace(x: &ComplexVector) -> Result<ComplexVector> {
    Beamspace::new(x.len())?.inverse(x)
}

fn complex_normal(var: f64, rng: &mut RngStream) -> Complex64 {
    let sd = (0.5 * var).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(sd * re, sd * im)
}

fn draw_channel(dim: usize, powers: &[f64], rng: &mut RngStream) -> Vec<Complex64> {
    let mut h = vec![Complex64::new(0.0, 0.0); dim];
    for &g in powers {
        let theta = rng.random_range(-FRAC_PI_2..FRAC_PI_2);
        let alpha = complex_normal(g, rng);
        let phase = PI * theta.sin();
        for (d, hd) in h.iter_mut().enumerate() {
            *hd += alpha * Complex64::from_polar(1.0, phase * d as f64);
        }
    }
    h
}

/// Antenna-domain channels `h_u = Σ_l α_{u,l} a(θ_{u,l})`, one per user,
/// with `E||h_u||²/D = 1`.
pub fn gen_los_channel(cfg: &ChannelConfig, rng: &mut RngStream) -> Result<Vec<ComplexVector>> {
    cfg.validate()?;
    let powers = cfg.path_powers();
    (0..cfg.users)
        .map(|_| ComplexVector::from_complex(&draw_channel(cfg.antennas, &powers, rng)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DenoisePipeline {
    PerfectCsi,
    Ml,
    BeachesKnownN0,
    BeachesBlind,
    BeachesEm,
}

impl DenoisePipeline {
    pub const ALL: [DenoisePipeline; 5] = [
        DenoisePipeline::PerfectCsi,
        DenoisePipeline::Ml,
        DenoisePipeline::BeachesKnownN0,
        DenoisePipeline::BeachesBlind,
        DenoisePipeline::BeachesEm,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            DenoisePipeline::PerfectCsi => "perfect_csi",
            DenoisePipeline::Ml => "ml",
            DenoisePipeline::BeachesKnownN0 => "beaches_known_n0",
            DenoisePipeline::BeachesBlind => "beaches_blind",
            DenoisePipeline::BeachesEm => "beaches_em",
        }
    }
}

/// Channel estimate for one noisy beamspace observation `y = x + n`.
/// Returns the estimate and the noise power the variant used, if any.
pub fn estimate_channel(
    variant: DenoisePipeline,
    truth: &ComplexVector,
    observed: &ComplexVector,
    n0: f64,
) -> Result<(ComplexVector, Option<f64>)> {
    match variant {
        DenoisePipeline::PerfectCsi => Ok((truth.clone(), None)),
        DenoisePipeline::Ml => Ok((observed.clone(), None)),
        DenoisePipeline::BeachesKnownN0 => {
            let (est, _) = denoise_with_n0(observed, n0)?;
            Ok((est, Some(n0)))
        }
        DenoisePipeline::BeachesBlind => {
            let out = denoise_blind(observed);
            Ok((out.estimate, Some(out.noise.value)))
        }
        DenoisePipeline::BeachesEm => {
            let fit = em_fit_default(&observed.abs_squared())?;
            let (est, _) = denoise_with_n0(observed, fit.n0_em)?;
            Ok((est, Some(fit.n0_em)))
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn push(&mut self, v: f64) {
        self.n += 1;
        self.sum += v;
        self.sum_sq += v * v;
    }

    fn mean(&self) -> f64 {
        self.sum / self.n as f64
    }

    fn stddev(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let m = self.mean();
        ((self.sum_sq - self.n as f64 * m * m) / (self.n - 1) as f64)
            .max(0.0)
            .sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineStats {
    pub variant: DenoisePipeline,
    pub snr_db: f64,
    pub n0: f64,
    pub trials: usize,
    /// Number of (trial, user) channel vectors averaged.
    pub samples: u64,
    pub channel_mse: f64,
    pub mse_stderr: f64,
    /// Mean and standard deviation of the noise power the variant used.
    pub n0_estimate: Option<(f64, f64)>,
}

fn noisy_beamspace_channels(
    cfg: &ChannelConfig,
    bs: &Beamspace,
    powers: &[f64],
    n0: f64,
    rng: &mut RngStream,
) -> Result<Vec<(ComplexVector, ComplexVector, Vec<Complex64>)>> {
    let mut out = Vec::with_capacity(cfg.users);
    for _ in 0..cfg.users {
        let h = draw_channel(cfg.antennas, powers, rng);
        let mut x = h.clone();
        bs.forward_in_place(&mut x);
        let y: Vec<Complex64> = x.iter().map(|&v| v + complex_normal(n0, rng)).collect();
        out.push((
            ComplexVector::from_complex(&x)?,
            ComplexVector::from_complex(&y)?,
            h,
        ));
    }
    Ok(out)
}

/// Runs several pipeline variants on shared channel and noise draws.
/// Trial `t` uses `RngStream::new(seed, t)`; results are reduced in trial order.
pub fn run_denoise_pipelines(
    cfg: &ChannelConfig,
    variants: &[DenoisePipeline],
    snr_db: f64,
    trials: usize,
    seed: u64,
) -> Result<Vec<PipelineStats>> {
    cfg.validate()?;
    let bs = Beamspace::new(cfg.antennas)?;
    let powers = cfg.path_powers();
    let n0 = snr_db_to_n0(snr_db);
    let mut mse = vec![Moments::default(); variants.len()];
    let mut n0s = vec![Moments::default(); variants.len()];

    for t in 0..trials {
        let mut rng = RngStream::new(seed, t as u64);
        let draws = noisy_beamspace_channels(cfg, &bs, &powers, n0, &mut rng)?;
        for (x, y, _) in &draws {
            for (i, &variant) in variants.iter().enumerate() {
                let (est, used) = estimate_channel(variant, x, y, n0)?;
                mse[i].push(est.mean_sq_distance(x)?);
                if let Some(v) = used {
                    n0s[i].push(v);
                }
            }
        }
    }

    Ok(variants
        .iter()
        .enumerate()
        .map(|(i, &variant)| PipelineStats {
            variant,
            snr_db,
            n0,
            trials,
            samples: mse[i].n,
            channel_mse: mse[i].mean(),
            mse_stderr: mse[i].stddev() / (mse[i].n as f64).sqrt(),
            n0_estimate: (n0s[i].n > 0).then(|| (n0s[i].mean(), n0s[i].stddev())),
        })
        .collect())
}

pub fn run_denoise_pipeline(
    cfg: &ChannelConfig,
    variant: DenoisePipeline,
    snr_db: f64,
    trials: usize,
    seed: u64,
) -> Result<PipelineStats> {
    run_denoise_pipelines(cfg, &[variant], snr_db, trials, seed).map(|mut v| v.remove(0))
}

const QAM16_SCALE: f64 = 0.316_227_766_016_837_94; // 1/sqrt(10)

fn gray_level(two_bits: u8) -> f64 {
    match two_bits & 0b11 {
        0b00 => -3.0,
        0b01 => -1.0,
        0b11 => 1.0,
        _ => 3.0,
    }
}

fn gray_slice(v: f64) -> u8 {
    if v < -2.0 {
        0b00
    } else if v < 0.0 {
        0b01
    } else if v < 2.0 {
        0b11
    } else {
        0b10
    }
}

/// Unit-energy Gray-mapped 16-QAM. Bits 0–1 select the in-phase level,
/// bits 2–3 the quadrature level; within each pair the lower bit is the
/// first transmitted bit.
pub fn qam16_map(bits: u8) -> Complex64 {
    Complex64::new(gray_level(bits), gray_level(bits >> 2)) * QAM16_SCALE
}

pub fn qam16_demap(x: Complex64) -> u8 {
    gray_slice(x.re / QAM16_SCALE) | (gray_slice(x.im / QAM16_SCALE) << 2)
}

/// `x̂ = (ĤᴴĤ + reg·I)⁻¹ Ĥᴴ r`, with a 1e−12 diagonal floor.
pub fn lmmse_detect(
    h_est: &DMatrix<Complex64>,
    r: &DVector<Complex64>,
    reg: f64,
) -> DVector<Complex64> {
    let u = h_est.ncols();
    let gram = h_est.adjoint() * h_est
        + DMatrix::<Complex64>::identity(u, u) * Complex64::new(reg + 1e-12, 0.0);
    let rhs = h_est.adjoint() * r;
    match gram.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => gram
            .lu()
            .solve(&rhs)
            .unwrap_or_else(|| DVector::from_element(u, Complex64::new(0.0, 0.0))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BerStats {
    pub variant: DenoisePipeline,
    pub snr_db: f64,
    pub trials: usize,
    pub bits: u64,
    pub errors: u64,
    pub ber: f64,
    /// Binomial standard error `sqrt(ber(1−ber)/bits)`.
    pub stderr: f64,
}

/// Uncoded 16-QAM BER with LMMSE detection for several channel-estimation
/// variants on shared draws.
pub fn run_ber_all(
    cfg: &ChannelConfig,
    variants: &[DenoisePipeline],
    snr_db: f64,
    trials: usize,
    seed: u64,
) -> Result<Vec<BerStats>> {
    cfg.validate()?;
    let bs = Beamspace::new(cfg.antennas)?;
    let powers = cfg.path_powers();
    let n0 = snr_db_to_n0(snr_db);
    let (d, u) = (cfg.antennas, cfg.users);
    let per_user = (1.0 / u as f64).sqrt();
    let reg = u as f64 * n0; // U·σ_w²/E_x with E_x = 1
    let mut errors = vec![0u64; variants.len()];

    for t in 0..trials {
        let mut rng = RngStream::new(seed, t as u64);
        let draws = noisy_beamspace_channels(cfg, &bs, &powers, n0, &mut rng)?;
        let symbols: Vec<u8> = (0..u).map(|_| rng.random::<u8>() & 0x0f).collect();
        let h = DMatrix::from_fn(d, u, |row, col| draws[col].2[row]);
        let x = DVector::from_iterator(u, symbols.iter().map(|&b| qam16_map(b) * per_user));
        let noise = DVector::from_iterator(d, (0..d).map(|_| complex_normal(n0, &mut rng)));
        let r = &h * x + noise;

        for (i, &variant) in variants.iter().enumerate() {
            let mut h_est = DMatrix::<Complex64>::zeros(d, u);
            for (col, (xb, yb, _)) in draws.iter().enumerate() {
                let (est, _) = estimate_channel(variant, xb, yb, n0)?;
                let mut buf = est.to_complex();
                bs.inverse_in_place(&mut buf);
                h_est.set_column(col, &DVector::from_vec(buf));
            }
            let x_hat = lmmse_detect(&h_est, &r, reg);
            for (k, &sent) in symbols.iter().enumerate() {
                let got = qam16_demap(x_hat[k] / per_user);
                errors[i] += u64::from((got ^ sent).count_ones());
            }
        }
    }

    let bits = (trials * u * 4) as u64;
    Ok(variants
        .iter()
        .zip(errors)
        .map(|(&variant, e)| {
            let ber = e as f64 / bits as f64;
            BerStats {
                variant,
                snr_db,
                trials,
                bits,
                errors: e,
                ber,
                stderr: (ber * (1.0 - ber) / bits as f64).sqrt(),
            }
        })
        .collect())
}

pub fn run_ber(
    cfg: &ChannelConfig,
    variant: DenoisePipeline,
    snr_db: f64,
    trials: usize,
    seed: u64,
) -> Result<BerStats> {
    run_ber_all(cfg, &[variant], snr_db, trials, seed).map(|mut v| v.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_vector(dim: usize, seed: u64) -> ComplexVector {
        let mut rng = RngStream::new(seed, 0);
        let v: Vec<Complex64> = (0..dim).map(|_| complex_normal(1.0, &mut rng)).collect();
        ComplexVector::from_complex(&v).unwrap()
    }

    #[test]
    fn beamspace_round_trip_and_parseval() {
        let h = random_vector(128, 1);
        let x = beamspace(&h).unwrap();
        assert!((x.norm_sqr() - h.norm_sqr()).abs() < 1e-10);
        let back = inverse_beamspace(&x).unwrap();
        assert!(back.mean_sq_distance(&h).unwrap().sqrt() < 1e-12);
    }

    #[test]
    fn beamspace_of_unit_impulse_is_flat() {
        let mut re = vec![0.0; 64];
        re[0] = 1.0;
        let e1 = ComplexVector::from_real(re).unwrap();
        let x = beamspace(&e1).unwrap();
        for (r, i) in x.iter() {
            assert!((r - 0.125).abs() < 1e-15 && i.abs() < 1e-15);
        }
        assert!((x.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn broadside_path_is_one_sparse() {
        let a = steering_vector(128, 0.0);
        let h = ComplexVector::from_complex(&a).unwrap();
        let x = beamspace(&h).unwrap();
        assert!((x.get(0).re - (128f64).sqrt()).abs() < 1e-10);
        let rest: f64 = (1..128).map(|d| x.get(d).norm_sqr()).sum();
        assert!(rest < 1e-18);
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert!(beamspace(&ComplexVector::zeros(100)).is_err());
        let cfg = ChannelConfig {
            antennas: 96,
            ..ChannelConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = ChannelConfig {
            users: 0,
            ..ChannelConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = ChannelConfig {
            paths_per_user: 2,
            path_power_profile: vec![1.0],
            ..ChannelConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn qam16_gray_round_trip_and_energy() {
        let mut energy = 0.0;
        for b in 0u8..16 {
            let s = qam16_map(b);
            energy += s.norm_sqr();
            assert_eq!(qam16_demap(s), b);
        }
        assert!((energy / 16.0 - 1.0).abs() < 1e-12);
        // nearest neighbours differ in exactly one bit
        for b in 0u8..16 {
            for c in 0u8..16 {
                let dist = (qam16_map(b) - qam16_map(c)).norm() / QAM16_SCALE;
                if (dist - 2.0).abs() < 1e-9 {
                    assert_eq!((b ^ c).count_ones(), 1, "{b} {c}");
                }
            }
        }
    }

    #[test]
    fn lmmse_inverts_noiseless_well_conditioned_channel() {
        let h = DMatrix::from_fn(16, 2, |r, c| {
            Complex64::from_polar(1.0, 0.3 * (r * (c + 1)) as f64)
        });
        let x = DVector::from_vec(vec![Complex64::new(1.0, -1.0), Complex64::new(-0.5, 0.2)]);
        let r = &h * &x;
        let est = lmmse_detect(&h, &r, 0.0);
        for k in 0..2 {
            assert!((est[k] - x[k]).norm() < 1e-8);
        }
    }

    #[test]
    fn perfect_and_ml_mse() {
        let cfg = ChannelConfig::default();
        let stats = run_denoise_pipelines(
            &cfg,
            &[DenoisePipeline::PerfectCsi, DenoisePipeline::Ml],
            0.0,
            200,
            3,
        )
        .unwrap();
        assert_eq!(stats[0].channel_mse, 0.0);
        let ml = &stats[1];
        assert!((ml.channel_mse - 1.0).abs() < 3.0 * ml.mse_stderr, "{ml:?}");
    }

    #[test]
    fn known_n0_denoising_helps_one_sparse_channels() {
        // broadside-aligned single path: exactly one active beamspace bin
        let bs = Beamspace::new(128).unwrap();
        let mut total = 0.0;
        let trials = 300;
        for t in 0..trials {
            let mut rng = RngStream::new(17, t);
            let alpha = complex_normal(1.0, &mut rng);
            let mut h: Vec<Complex64> = steering_vector(128, 0.0)
                .iter()
                .map(|a| a * alpha)
                .collect();
            bs.forward_in_place(&mut h);
            let x = ComplexVector::from_complex(&h).unwrap();
            let y: Vec<Complex64> = h
                .iter()
                .map(|&v| v + complex_normal(1.0, &mut rng))
                .collect();
            let y = ComplexVector::from_complex(&y).unwrap();
            let (est, _) = estimate_channel(DenoisePipeline::BeachesKnownN0, &x, &y, 1.0).unwrap();
            total += est.mean_sq_distance(&x).unwrap();
        }
        assert!(total / (trials as f64) < 0.5);
    }

    #[test]
    fn perfect_csi_ber_at_high_snr() {
        let cfg = ChannelConfig {
            paths_per_user: 2,
            ..ChannelConfig::default()
        };
        let b = run_ber(&cfg, DenoisePipeline::PerfectCsi, 30.0, 200, 5).unwrap();
        assert_eq!(b.bits, 200 * 8 * 4);
        assert!(b.ber < 1e-3, "{b:?}");
    }

    #[test]
    fn channels_are_reproducible() {
        let cfg = ChannelConfig::default();
        let a = gen_los_channel(&cfg, &mut RngStream::new(1, 1)).unwrap();
        let b = gen_los_channel(&cfg, &mut RngStream::new(1, 1)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 8);
    }
}
