//! Monte-Carlo experiment protocols. Trial `t` of every point draws from
//! `RngStream::new(seed, t)` and statistics are reduced in trial order.

use blindsnr::channel::{
    run_ber_all, run_denoise_pipelines, snr_db_to_n0, ChannelConfig, DenoisePipeline,
};
use blindsnr::em::MAX_ITERATIONS;
use blindsnr::estimators::estimate_noise_power_with;
use blindsnr::theory::{theorem1_bounds, SANDWICH_TOLERANCE};
use blindsnr::{
    denoise_blind, em_fit_default, estimate_mse, estimate_signal_power, estimate_snr,
    genie_estimates, observe_bcg, search_threshold, BcgParams, DenoiserFunction, MedianMethod,
    RngStream,
};
use serde_json::{json, Map, Value};

use crate::config::{Experiment, Family, SweepConfig};
use crate::error::CliError;
use crate::output::{Assertion, Row};

const NOISE_MODEL: &str = "single SNR knob: N0 = 1/SNR for both the beamspace channel observation and the per-antenna data noise";

#[derive(Debug, Clone, Default)]
pub struct Report {
    pub rows: Vec<Row>,
    pub assertions: Vec<Assertion>,
}

pub fn run(cfg: &SweepConfig) -> Result<Report, CliError> {
    match cfg.experiment {
        Experiment::SweepSnr => {
            let points = cfg
                .snr_points_db
                .iter()
                .map(|&s| (s, cfg.activity_rate, cfg.dim))
                .collect();
            synthetic(cfg, points)
        }
        Experiment::SweepP => {
            let points = cfg
                .snr_points_db
                .iter()
                .flat_map(|&s| cfg.p_points.iter().map(move |&p| (s, p, cfg.dim)))
                .collect();
            synthetic(cfg, points)
        }
        Experiment::SweepDim => {
            let points = cfg
                .snr_points_db
                .iter()
                .flat_map(|&s| {
                    cfg.dim_points
                        .iter()
                        .map(move |&d| (s, cfg.activity_rate, d))
                })
                .collect();
            synthetic(cfg, points)
        }
        Experiment::BoundsGrid => bounds(cfg),
        Experiment::ChannelMse => channel_mse(cfg),
        Experiment::ChannelBer => channel_ber(cfg),
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Debug, Clone, Copy, Default)]
struct Summary {
    mean: f64,
    stddev: f64,
    max: f64,
}

fn summarize(v: &[f64]) -> Summary {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let stddev = if v.len() > 1 {
        (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Summary {
        mean,
        stddev,
        max: v.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    }
}

fn standard_error(s: &Summary, n: usize) -> f64 {
    s.stddev / (n as f64).sqrt()
}

fn base_extra(trials: usize) -> Map<String, Value> {
    let mut extra = Map::new();
    if trials == 1 {
        extra.insert(
            "warning".into(),
            json!("single trial: stddev reported as 0"),
        );
    }
    extra
}

const QUANTITIES: [&str; 6] = ["n0", "es", "snr", "mse", "ops", "iterations"];

/// Per-trial samples for one family, indexed like `QUANTITIES`.
#[derive(Default)]
struct Samples {
    values: [Vec<f64>; 6],
    reference_ops: Vec<f64>,
}

impl Samples {
    fn push(&mut self, q: usize, v: f64) {
        self.values[q].push(v);
    }
}

struct PointChecks {
    label: String,
    n0_hat: Option<(Summary, usize)>,
    snr_hat: Option<(Summary, usize)>,
    genie_mse: Option<(Summary, usize)>,
    em_max_iterations: Option<f64>,
    n0: f64,
    snr: f64,
}

fn synthetic(cfg: &SweepConfig, points: Vec<(f64, f64, usize)>) -> Result<Report, CliError> {
    let mut report = Report::default();
    let mut checks = Vec::new();
    for (snr_db, p, dim) in points {
        let (rows, point) = synthetic_point(cfg, snr_db, p, dim)?;
        report.rows.extend(rows);
        checks.push(point);
    }

    let mut all_finite = true;
    for row in &report.rows {
        all_finite &= row.stddev.is_none_or(f64::is_finite) && row.mean.is_none_or(f64::is_finite);
    }
    report.assertions.push(Assertion::new(
        "statistics_finite",
        all_finite,
        "every mean and stddev is finite",
    ));

    let mut push = |name: &str, detail: &str, failures: Vec<String>, any: bool| {
        if any {
            let ok = failures.is_empty();
            let detail = if ok {
                detail.to_string()
            } else {
                format!("{detail}; failing at {}", failures.join(", "))
            };
            report.assertions.push(Assertion::new(name, ok, detail));
        }
    };
    let fail_where = |f: &dyn Fn(&PointChecks) -> Option<bool>| -> (Vec<String>, bool) {
        let mut any = false;
        let failures = checks
            .iter()
            .filter_map(|c| {
                let r = f(c)?;
                any = true;
                (!r).then(|| c.label.clone())
            })
            .collect();
        (failures, any)
    };

    let (f, any) = fail_where(&|c| {
        c.n0_hat
            .map(|(s, n)| s.mean >= c.n0 - 3.0 * standard_error(&s, n))
    });
    push(
        "noise_power_not_underestimated",
        "mean blind N0 >= N0 - 3 standard errors",
        f,
        any,
    );
    let (f, any) = fail_where(&|c| {
        c.snr_hat
            .map(|(s, n)| s.mean <= c.snr + 3.0 * standard_error(&s, n))
    });
    push(
        "snr_not_overestimated",
        "mean blind SNR <= SNR + 3 standard errors",
        f,
        any,
    );
    let (f, any) = fail_where(&|c| {
        c.genie_mse
            .map(|(s, n)| s.mean <= c.n0 + 3.0 * standard_error(&s, n))
    });
    push(
        "blind_denoiser_beats_identity",
        "mean true MSE of the blind denoiser <= N0 + 3 standard errors",
        f,
        any,
    );
    let (f, any) = fail_where(&|c| c.em_max_iterations.map(|m| m <= MAX_ITERATIONS as f64));
    push(
        "em_iterations_bounded",
        "EM never exceeds 30 iterations",
        f,
        any,
    );
    Ok(report)
}

fn synthetic_point(
    cfg: &SweepConfig,
    snr_db: f64,
    p: f64,
    dim: usize,
) -> Result<(Vec<Row>, PointChecks), CliError> {
    let snr = db_to_linear(snr_db);
    let params = BcgParams::from_snr(dim, p, snr, cfg.n0)?;
    let wants = |f: Family| cfg.estimators.contains(&f);
    let mut blind = Samples::default();
    let mut em = Samples::default();
    let mut genie = Samples::default();

    for t in 0..cfg.trials {
        let obs = observe_bcg(&params, &mut RngStream::new(cfg.seed, t as u64));
        let y = &obs.observed;
        let bd = denoise_blind(y);
        let tau = DenoiserFunction::SoftThreshold(bd.search.tau_star);

        if wants(Family::Blind) {
            let n0_hat = bd.noise.value;
            blind.push(0, n0_hat);
            blind.push(1, estimate_signal_power(y, n0_hat)?.value);
            if n0_hat > 0.0 {
                blind.push(2, estimate_snr(y, n0_hat)?.value);
                blind.push(3, estimate_mse(y, &tau, n0_hat)?.value);
            }
            let (_, ops) = estimate_noise_power_with(y, MedianMethod::Quickselect)?;
            blind.push(4, ops.total() as f64);
        }
        if wants(Family::Em) {
            let r = em_fit_default(&y.abs_squared())?;
            em.push(0, r.n0_em);
            em.push(1, r.signal_power());
            em.push(2, r.snr_em);
            if r.n0_em > 0.0 {
                let s = search_threshold(y, r.n0_em)?;
                let f = DenoiserFunction::SoftThreshold(s.tau_star);
                em.push(3, estimate_mse(y, &f, r.n0_em)?.value);
            }
            em.push(4, r.ops.total() as f64);
            em.push(5, r.iterations as f64);
            em.reference_ops.push(r.op_estimate as f64);
        }
        if wants(Family::Genie) {
            let g = genie_estimates(&obs.signal, &obs.noise, y, &tau)?;
            genie.push(0, g.n0_bar);
            genie.push(1, g.es_bar);
            genie.push(2, g.snr_bar);
            genie.push(3, g.e0_bar);
        }
    }

    let truths = [
        Some(cfg.n0),
        Some(params.signal_power()),
        Some(snr),
        None,
        None,
        None,
    ];
    let mut rows = Vec::new();
    let mut stats: [[Option<Summary>; 6]; 3] = Default::default();
    for (fi, (family, samples)) in [
        (Family::Blind, &blind),
        (Family::Em, &em),
        (Family::Genie, &genie),
    ]
    .into_iter()
    .enumerate()
    {
        if !wants(family) {
            continue;
        }
        for (qi, quantity) in QUANTITIES.iter().enumerate() {
            let v = &samples.values[qi];
            if v.is_empty() {
                continue;
            }
            let s = summarize(v);
            stats[fi][qi] = Some(s);
            let mut extra = base_extra(cfg.trials);
            if v.len() != cfg.trials {
                extra.insert("samples".into(), json!(v.len()));
            }
            if family == Family::Em && *quantity == "ops" {
                extra.insert(
                    "reference_ops".into(),
                    json!(summarize(&samples.reference_ops).mean),
                );
            }
            if *quantity == "mse" {
                extra.insert("denoiser".into(), json!("soft_threshold_sure_tau"));
            }
            rows.push(Row {
                experiment: cfg.experiment.name(),
                snr_db: Some(snr_db),
                p: Some(p),
                dim,
                trials: cfg.trials,
                family: family.name().into(),
                quantity: (*quantity).into(),
                mean: Some(s.mean),
                stddev: Some(s.stddev),
                truth: truths[qi],
                extra,
            });
        }
    }

    let with_n = |s: Option<Summary>, n: usize| s.map(|s| (s, n));
    let checks = PointChecks {
        label: format!("snr_db={snr_db} p={p} dim={dim}"),
        n0_hat: with_n(stats[0][0], blind.values[0].len()),
        snr_hat: with_n(stats[0][2], blind.values[2].len()),
        genie_mse: with_n(stats[2][3], genie.values[3].len()),
        em_max_iterations: stats[1][5].map(|s| s.max),
        n0: cfg.n0,
        snr,
    };
    Ok((rows, checks))
}

fn bounds(cfg: &SweepConfig) -> Result<Report, CliError> {
    let mut report = Report::default();
    let mut violations = Vec::new();
    for &p in &cfg.p_points {
        for &snr_db in &cfg.snr_points_db {
            let params = BcgParams::from_snr(cfg.dim, p, db_to_linear(snr_db), cfg.n0)?;
            let check = theorem1_bounds(&params);
            let n0_hat: Vec<f64> = (0..cfg.trials)
                .map(|t| {
                    let y = observe_bcg(&params, &mut RngStream::new(cfg.seed, t as u64)).observed;
                    denoise_blind(&y).noise.value
                })
                .collect();
            let ok = check.condition_p_ok;
            let violated = ok && check.violation() > SANDWICH_TOLERANCE;
            if violated {
                violations.push(format!("p={p} snr_db={snr_db}"));
            }

            let mut extra = base_extra(cfg.trials);
            extra.insert("condition_p_ok".into(), json!(ok));
            if ok {
                extra.insert("violation".into(), json!(violated));
            } else {
                extra.insert("bounds".into(), json!("not_applicable"));
            }
            let row =
                |quantity: &str, mean: Option<f64>, stddev: Option<f64>, truth: Option<f64>| Row {
                    experiment: cfg.experiment.name(),
                    snr_db: Some(snr_db),
                    p: Some(p),
                    dim: cfg.dim,
                    trials: cfg.trials,
                    family: "theory".into(),
                    quantity: quantity.into(),
                    mean,
                    stddev,
                    truth,
                    extra: extra.clone(),
                };
            let bound = |v: f64| ok.then_some(v);
            report
                .rows
                .push(row("median_exact", Some(check.median_exact), None, None));
            report.rows.push(row(
                "lower_bound_n0",
                bound(check.lower_bound_n0),
                None,
                Some(cfg.n0),
            ));
            report.rows.push(row(
                "upper_bound_n0",
                bound(check.upper_bound_n0),
                None,
                Some(cfg.n0),
            ));
            let s = summarize(&n0_hat);
            let mut r = row("n0_hat", Some(s.mean), Some(s.stddev), Some(cfg.n0));
            r.family = "blind".into();
            report.rows.push(r);
        }
    }
    let ok = violations.is_empty();
    let detail = if ok {
        format!("lower <= N0 <= upper at every admissible point (tolerance {SANDWICH_TOLERANCE:e})")
    } else {
        format!("violated at {}", violations.join(", "))
    };
    report
        .assertions
        .push(Assertion::new("sandwich_holds", ok, detail));
    Ok(report)
}

fn channel_config(cfg: &SweepConfig) -> ChannelConfig {
    ChannelConfig {
        antennas: cfg.dim,
        users: cfg.users,
        paths_per_user: cfg.paths,
        path_power_profile: Vec::new(),
        snr_db_range: cfg.snr_points_db.clone(),
    }
}

fn channel_extra(cfg: &SweepConfig) -> Map<String, Value> {
    let mut extra = base_extra(cfg.trials);
    extra.insert("users".into(), json!(cfg.users));
    extra.insert("paths".into(), json!(cfg.paths));
    extra.insert("noise_model".into(), json!(NOISE_MODEL));
    extra
}

fn channel_mse(cfg: &SweepConfig) -> Result<Report, CliError> {
    let cc = channel_config(cfg);
    let mut report = Report::default();
    let mut failures: [Vec<String>; 4] = Default::default();
    for &snr_db in &cfg.snr_points_db {
        let stats =
            run_denoise_pipelines(&cc, &DenoisePipeline::ALL, snr_db, cfg.trials, cfg.seed)?;
        let n0 = snr_db_to_n0(snr_db);
        for s in &stats {
            let mut extra = channel_extra(cfg);
            extra.insert("mse_db".into(), json!(10.0 * s.channel_mse.log10()));
            extra.insert("mse_stderr".into(), json!(s.mse_stderr));
            extra.insert("samples".into(), json!(s.samples));
            extra.insert("n0".into(), json!(n0));
            if let Some((m, sd)) = s.n0_estimate {
                extra.insert("n0_estimate_mean".into(), json!(m));
                extra.insert("n0_estimate_stddev".into(), json!(sd));
            }
            let truth = match s.variant {
                DenoisePipeline::PerfectCsi => Some(0.0),
                DenoisePipeline::Ml => Some(n0),
                _ => None,
            };
            report.rows.push(Row {
                experiment: cfg.experiment.name(),
                snr_db: Some(snr_db),
                p: None,
                dim: cfg.dim,
                trials: cfg.trials,
                family: s.variant.name().into(),
                quantity: "mse".into(),
                mean: Some(s.channel_mse),
                stddev: Some(s.mse_stderr * (s.samples as f64).sqrt()),
                truth,
                extra,
            });
        }
        let get = |v: DenoisePipeline| {
            stats
                .iter()
                .find(|s| s.variant == v)
                .expect("all variants run")
        };
        let perfect = get(DenoisePipeline::PerfectCsi);
        let ml = get(DenoisePipeline::Ml);
        let known = get(DenoisePipeline::BeachesKnownN0);
        let blind = get(DenoisePipeline::BeachesBlind);
        let label = format!("snr_db={snr_db}");
        if perfect.channel_mse != 0.0 {
            failures[0].push(label.clone());
        }
        if (ml.channel_mse - n0).abs() > 3.0 * ml.mse_stderr {
            failures[1].push(label.clone());
        }
        if known.channel_mse > 1.05 * ml.channel_mse {
            failures[2].push(label.clone());
        }
        if snr_db <= 10.0 && blind.channel_mse > ml.channel_mse {
            failures[3].push(label);
        }
    }
    let names = [
        ("perfect_csi_zero", "perfect-CSI MSE is exactly 0"),
        ("ml_matches_n0", "ML MSE within 3 standard errors of N0"),
        (
            "known_n0_not_worse_than_ml",
            "known-N0 MSE <= 1.05 x ML MSE",
        ),
        (
            "blind_not_worse_than_ml",
            "blind MSE <= ML MSE at SNR <= 10 dB",
        ),
    ];
    for ((name, detail), f) in names.into_iter().zip(failures) {
        report.assertions.push(outcome(name, detail, f));
    }
    Ok(report)
}

fn channel_ber(cfg: &SweepConfig) -> Result<Report, CliError> {
    let cc = channel_config(cfg);
    let mut report = Report::default();
    let mut failures: [Vec<String>; 2] = Default::default();
    for &snr_db in &cfg.snr_points_db {
        let stats = run_ber_all(&cc, &DenoisePipeline::ALL, snr_db, cfg.trials, cfg.seed)?;
        for s in &stats {
            let mut extra = channel_extra(cfg);
            extra.insert("bits".into(), json!(s.bits));
            extra.insert("errors".into(), json!(s.errors));
            extra.insert("stderr".into(), json!(s.stderr));
            report.rows.push(Row {
                experiment: cfg.experiment.name(),
                snr_db: Some(snr_db),
                p: None,
                dim: cfg.dim,
                trials: cfg.trials,
                family: s.variant.name().into(),
                quantity: "ber".into(),
                mean: Some(s.ber),
                stddev: Some((s.ber * (1.0 - s.ber)).sqrt()),
                truth: None,
                extra,
            });
        }
        let get = |v: DenoisePipeline| {
            stats
                .iter()
                .find(|s| s.variant == v)
                .expect("all variants run")
        };
        let perfect = get(DenoisePipeline::PerfectCsi);
        let blind = get(DenoisePipeline::BeachesBlind);
        let ml = get(DenoisePipeline::Ml);
        let label = format!("snr_db={snr_db}");
        if perfect.ber > blind.ber + blind.stderr {
            failures[0].push(label.clone());
        }
        if blind.ber > ml.ber + ml.stderr {
            failures[1].push(label);
        }
    }
    let names = [
        (
            "perfect_not_worse_than_blind",
            "BER(perfect) <= BER(blind) + one standard error",
        ),
        (
            "blind_not_worse_than_ml",
            "BER(blind) <= BER(ml) + one standard error",
        ),
    ];
    for ((name, detail), f) in names.into_iter().zip(failures) {
        report.assertions.push(outcome(name, detail, f));
    }
    Ok(report)
}

fn outcome(name: &str, detail: &str, failures: Vec<String>) -> Assertion {
    if failures.is_empty() {
        Assertion::new(name, true, detail)
    } else {
        Assertion::new(
            name,
            false,
            format!("{detail}; failing at {}", failures.join(", ")),
        )
    }
}
