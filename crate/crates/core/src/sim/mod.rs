//! Snapshot Monte Carlo simulator: realizes the network model directly
//! (point processes, two-scale geometry, randomized channel assignment,
//! fading) to produce empirical SINR curves and rates that validate the
//! analytic expressions.
//!
//! Snapshots are independent work units on counter-based RNG streams
//! derived from (seed, tier, snapshot index), so parallel and serial
//! runs produce bit-identical output.

pub mod geometry;
pub mod snapshot;

use std::time::Instant;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

pub use geometry::{dist2, sample_cluster, sample_ppp, Boundary, Point};
pub use snapshot::{build_snapshot, tagged_sinr, SinrSample, Snapshot, TaggedSample};

use crate::config::NetworkConfig;
use crate::curve::{CurveLabel, SinrCurve};
use crate::load::{p_busy_f, p_busy_m};
use crate::rates::RateReport;

/// Which tier the tagged UE belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Tier {
    Macro,
    Femto,
}

/// Simulation controls.
#[derive(Debug, Clone)]
pub struct SimSpec {
    /// Half-width L of the square window [−L, L]², m.
    pub window_half_width: f64,
    pub snapshots: u32,
    pub seed: u64,
    pub tagged_tier: Tier,
    pub boundary: Boundary,
    /// Place the tagged femto UE at its true offset when measuring
    /// interferer distances, instead of the FAP-center approximation.
    pub full_geometry: bool,
}

impl Default for SimSpec {
    fn default() -> Self {
        Self {
            window_half_width: 2000.0,
            snapshots: 10_000,
            seed: 1,
            tagged_tier: Tier::Macro,
            boundary: Boundary::Torus,
            full_geometry: false,
        }
    }
}

impl SimSpec {
    pub(crate) fn sampling_half_width(&self) -> f64 {
        match self.boundary {
            Boundary::Torus => self.window_half_width,
            Boundary::GuardZone { margin } => self.window_half_width + margin,
        }
    }

    /// Reject unusable inputs; return soft warnings for dubious ones.
    pub fn validate(&self, cfg: &NetworkConfig) -> Result<Vec<String>, SimError> {
        if self.snapshots < 1 {
            return Err(SimError::Misuse("at least one snapshot is required".into()));
        }
        if cfg.m > 64 {
            return Err(SimError::Misuse(format!(
                "the simulator represents channel sets as 64-bit masks; M = {} exceeds 64",
                cfg.m
            )));
        }
        if !(self.window_half_width > 0.0) {
            return Err(SimError::Misuse(format!(
                "window half-width must be positive, got {}",
                self.window_half_width
            )));
        }
        if let Boundary::GuardZone { margin } = self.boundary {
            if !(margin >= 0.0) {
                return Err(SimError::Misuse(format!(
                    "guard margin must be nonnegative, got {margin}"
                )));
            }
        }
        let violations = cfg.validate();
        if violations
            .iter()
            .any(|v| v.severity == crate::config::Severity::Error)
        {
            return Err(SimError::Misuse(format!(
                "invalid configuration: {}",
                violations
                    .iter()
                    .map(ToString::to_string)
                    .collect::<Vec<_>>()
                    .join("; ")
            )));
        }
        let mut warnings: Vec<String> = violations.iter().map(ToString::to_string).collect();
        let expected_mbs =
            cfg.lambda_m * 4.0 * self.window_half_width * self.window_half_width;
        if expected_mbs < 50.0 {
            warnings.push(format!(
                "expected MBS count {expected_mbs:.1} < 50; enlarge the window for \
                 trustworthy statistics"
            ));
        }
        Ok(warnings)
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("simulation misuse: {0}")]
    Misuse(String),
    #[error("no tagged sample after {0} snapshot attempts; the requested tier draws no UEs")]
    Starved(u32),
}

/// One side of a busy-probability cross-check: the per-snapshot
/// indicator that a uniformly random AP occupies the tagged subchannel,
/// against the analytic busy probability.
#[derive(Debug, Clone, Serialize)]
pub struct BusyCheck {
    pub observed: f64,
    pub expected: f64,
    /// Binomial standard error of `observed` around `expected`.
    pub sigma: f64,
    pub samples: u64,
}

impl BusyCheck {
    fn new(hits: u64, samples: u64, expected: f64) -> Self {
        let observed = if samples == 0 {
            f64::NAN
        } else {
            hits as f64 / samples as f64
        };
        let sigma = if samples == 0 {
            f64::NAN
        } else {
            (expected * (1.0 - expected) / samples as f64).sqrt()
        };
        Self {
            observed,
            expected,
            sigma,
            samples,
        }
    }

    /// |observed − expected| in units of σ.
    pub fn deviation_sigmas(&self) -> f64 {
        (self.observed - self.expected) / self.sigma
    }
}

/// Aggregate statistics of one run.
#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    pub tier: Tier,
    pub snapshots: u32,
    /// Snapshots rebuilt because no tagged UE of the tier existed.
    pub resamples: u64,
    pub mean_us_per_fap: f64,
    pub mean_uin_per_fap: f64,
    pub mean_uout_per_mbs: f64,
    pub busy_f: BusyCheck,
    pub busy_m: BusyCheck,
    pub elapsed_seconds: f64,
    pub warnings: Vec<String>,
}

/// Output of a single-tier run. Rate fields of the other tier are NaN;
/// [`run_both`] merges two runs into a complete report.
#[derive(Debug, Clone)]
pub struct SimOutput {
    pub curve: SinrCurve,
    pub report: RateReport,
    pub diagnostics: Diagnostics,
}

/// Both tiers under a shared seed, with the merged rate report.
#[derive(Debug, Clone)]
pub struct CombinedOutput {
    pub macro_curve: SinrCurve,
    pub femto_curve: SinrCurve,
    pub report: RateReport,
    pub macro_diagnostics: Diagnostics,
    pub femto_diagnostics: Diagnostics,
}

const MAX_ATTEMPTS: u32 = 10_000;

fn stream_rng(seed: u64, tier: Tier, index: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tier_base = match tier {
        Tier::Macro => 0u64,
        Tier::Femto => 1u64 << 40,
    };
    rng.set_stream(tier_base | index as u64);
    rng
}

struct Record {
    sinr: f64,
    ln1p: f64,
    factor_out: Option<f64>,
    factor_s: Option<f64>,
    factor_in: Option<f64>,
    busy_f_probe: Option<bool>,
    busy_m_probe: Option<bool>,
    sum_us: u64,
    sum_uin: u64,
    n_fap: u64,
    sum_uout: u64,
    n_mbs: u64,
    resamples: u64,
}

/// Simulate one tier: pooled tagged-UE SINR samples, the empirical CDF
/// on the given grid, per-link and per-class rates with time-sharing
/// applied directly, and the occupancy diagnostics.
///
/// Deterministic in (seed, spec) regardless of thread count.
pub fn run(cfg: &NetworkConfig, spec: &SimSpec, grid: &[f64]) -> Result<SimOutput, SimError> {
    let warnings = spec.validate(cfg)?;
    let start = Instant::now();
    let m = cfg.m as f64;
    let m_r = cfg.m_r() as f64;
    let m_s = cfg.m_s as f64;

    let records: Vec<Record> = (0..spec.snapshots)
        .into_par_iter()
        .map(|i| -> Result<Record, SimError> {
            let mut rng = stream_rng(spec.seed, spec.tagged_tier, i);
            let mut resamples = 0u64;
            for _ in 0..MAX_ATTEMPTS {
                let snap = build_snapshot(cfg, spec, &mut rng);
                let Some(tagged) = tagged_sinr(&snap, cfg, spec, &mut rng) else {
                    resamples += 1;
                    continue;
                };
                use rand::Rng;
                let busy_f_probe = if snap.faps.is_empty() {
                    None
                } else {
                    let k = rng.random_range(0..snap.faps.len());
                    Some(snap.fap_occupied[k] & 1 != 0)
                };
                let busy_m_probe = if snap.mbs.is_empty() {
                    None
                } else {
                    let k = rng.random_range(0..snap.mbs.len());
                    Some(snap.mbs_occupied[k] & 1 != 0)
                };
                let sinr = tagged.sample.sinr;
                let ln1p = sinr.ln_1p();
                return Ok(Record {
                    sinr,
                    ln1p,
                    factor_out: tagged
                        .serving_uout
                        .map(|u| (m / u as f64).min(1.0)),
                    factor_s: tagged.serving_us.and_then(|u| {
                        (u > 0).then(|| (m_r / u as f64).min(1.0))
                    }),
                    factor_in: tagged.serving_uin.and_then(|u| {
                        (u > 0).then(|| (m_s / u as f64).min(1.0))
                    }),
                    busy_f_probe,
                    busy_m_probe,
                    sum_us: snap.fap_load_s.iter().map(|&x| x as u64).sum(),
                    sum_uin: snap.fap_load_in.iter().map(|&x| x as u64).sum(),
                    n_fap: snap.faps.len() as u64,
                    sum_uout: snap.mbs_load.iter().map(|&x| x as u64).sum(),
                    n_mbs: snap.mbs.len() as u64,
                    resamples,
                });
            }
            Err(SimError::Starved(MAX_ATTEMPTS))
        })
        .collect::<Result<_, _>>()?;

    let n = records.len() as f64;
    let sinrs: Vec<f64> = records.iter().map(|r| r.sinr).collect();
    let label = match spec.tagged_tier {
        Tier::Macro => CurveLabel::EmpiricalMacro,
        Tier::Femto => CurveLabel::EmpiricalFemto,
    };
    let curve = SinrCurve::from_samples(label, grid.to_vec(), &sinrs);

    let tau_link = records.iter().map(|r| r.ln1p).sum::<f64>() / n;
    let mean_over = |sel: fn(&Record) -> Option<f64>| -> f64 {
        let mut acc = 0.0;
        let mut count = 0u64;
        for r in &records {
            if let Some(f) = sel(r) {
                acc += f * r.ln1p;
                count += 1;
            }
        }
        if count == 0 {
            f64::NAN
        } else {
            acc / count as f64
        }
    };

    let (tau_m, tau_f, tau_out, tau_in, tau_s) = match spec.tagged_tier {
        Tier::Macro => (
            tau_link,
            f64::NAN,
            mean_over(|r| r.factor_out),
            f64::NAN,
            f64::NAN,
        ),
        Tier::Femto => (
            f64::NAN,
            tau_link,
            f64::NAN,
            mean_over(|r| r.factor_in),
            mean_over(|r| r.factor_s),
        ),
    };
    let report = RateReport {
        tau_m,
        tau_f,
        tau_out,
        tau_in,
        tau_n: f64::NAN,
        tau_s,
        config_hash: cfg.short_hash(),
    };

    let count_hits = |sel: fn(&Record) -> Option<bool>| -> (u64, u64) {
        let mut hits = 0;
        let mut total = 0;
        for r in &records {
            if let Some(b) = sel(r) {
                total += 1;
                hits += b as u64;
            }
        }
        (hits, total)
    };
    let (fh, ft) = count_hits(|r| r.busy_f_probe);
    let (mh, mt) = count_hits(|r| r.busy_m_probe);
    let total_fap: u64 = records.iter().map(|r| r.n_fap).sum();
    let total_mbs: u64 = records.iter().map(|r| r.n_mbs).sum();
    let diagnostics = Diagnostics {
        tier: spec.tagged_tier,
        snapshots: spec.snapshots,
        resamples: records.iter().map(|r| r.resamples).sum(),
        mean_us_per_fap: records.iter().map(|r| r.sum_us).sum::<u64>() as f64
            / total_fap.max(1) as f64,
        mean_uin_per_fap: records.iter().map(|r| r.sum_uin).sum::<u64>() as f64
            / total_fap.max(1) as f64,
        mean_uout_per_mbs: records.iter().map(|r| r.sum_uout).sum::<u64>() as f64
            / total_mbs.max(1) as f64,
        busy_f: BusyCheck::new(fh, ft, p_busy_f(cfg)),
        busy_m: BusyCheck::new(mh, mt, p_busy_m(cfg)),
        elapsed_seconds: start.elapsed().as_secs_f64(),
        warnings,
    };

    Ok(SimOutput {
        curve,
        report,
        diagnostics,
    })
}

/// Run both tiers with the same seed (independent stream spaces) and
/// merge the rate reports.
pub fn run_both(
    cfg: &NetworkConfig,
    spec: &SimSpec,
    grid: &[f64],
) -> Result<CombinedOutput, SimError> {
    let macro_spec = SimSpec {
        tagged_tier: Tier::Macro,
        ..spec.clone()
    };
    let femto_spec = SimSpec {
        tagged_tier: Tier::Femto,
        ..spec.clone()
    };
    let macro_out = run(cfg, &macro_spec, grid)?;
    let femto_out = run(cfg, &femto_spec, grid)?;
    let tau_n = crate::rates::tau_n(macro_out.report.tau_out, femto_out.report.tau_in, cfg)
        .map_err(|e| SimError::Misuse(e.to_string()))?;
    let report = RateReport {
        tau_m: macro_out.report.tau_m,
        tau_f: femto_out.report.tau_f,
        tau_out: macro_out.report.tau_out,
        tau_in: femto_out.report.tau_in,
        tau_n,
        tau_s: femto_out.report.tau_s,
        config_hash: cfg.short_hash(),
    };
    Ok(CombinedOutput {
        macro_curve: macro_out.curve,
        femto_curve: femto_out.curve,
        report,
        macro_diagnostics: macro_out.diagnostics,
        femto_diagnostics: femto_out.diagnostics,
    })
}
