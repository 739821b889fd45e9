//! High-level drivers: SINR curves and rate reports for a configuration,
//! dispatched to the cheapest applicable theorem route.

use rayon::prelude::*;

use crate::analytic_cluster::{self, ClusterKernelCache};
use crate::analytic_ppp::{self, AnalyticError, InterferenceContext};
use crate::config::{Deployment, FadingModel, NetworkConfig};
use crate::curve::{CurveLabel, SinrCurve};
use crate::rates::{rate_report, RateReport};

/// Analytic evaluator bound to one configuration.
///
/// Poisson deployments use the closed α = 4 forms when the
/// interference-limited Rayleigh preconditions hold, the Rayleigh
/// corollary otherwise, and the general-fading theorem as a fallback.
/// Clustered deployments use the cluster theorems (Rayleigh only).
pub struct AnalyticEngine {
    ctx: InterferenceContext,
    cache: Option<ClusterKernelCache>,
}

impl AnalyticEngine {
    pub fn new(cfg: NetworkConfig) -> Result<Self, AnalyticError> {
        let ctx = InterferenceContext::new(cfg);
        let cache = match ctx.cfg.deployment {
            Deployment::ClusteredFaps { .. } => Some(ClusterKernelCache::new(&ctx)?),
            Deployment::PoissonFaps => None,
        };
        Ok(Self { ctx, cache })
    }

    pub fn context(&self) -> &InterferenceContext {
        &self.ctx
    }

    fn closed_form_applies(&self) -> bool {
        let cfg = &self.ctx.cfg;
        cfg.alpha == 4.0
            && cfg.sigma2 == 0.0
            && matches!(self.ctx.fading, FadingModel::Rayleigh { .. })
    }

    /// CDF of the macro UE SINR at one threshold.
    pub fn macro_cdf(&self, t: f64) -> Result<f64, AnalyticError> {
        match &self.cache {
            Some(cache) => analytic_cluster::zm_cluster(t, &self.ctx, cache),
            None if self.closed_form_applies() => analytic_ppp::zm_alpha4(t, &self.ctx),
            None if matches!(self.ctx.fading, FadingModel::Rayleigh { .. }) => {
                analytic_ppp::zm_rayleigh(t, &self.ctx)
            }
            None => analytic_ppp::zm_general(t, &self.ctx),
        }
    }

    /// CDF of the femto UE SINR at one threshold.
    pub fn femto_cdf(&self, t: f64) -> Result<f64, AnalyticError> {
        match &self.cache {
            Some(cache) => analytic_cluster::zf_cluster(t, &self.ctx, cache),
            None => analytic_ppp::zf_general(t, &self.ctx),
        }
    }

    /// Macro and femto SINR curves on a threshold grid; grid points are
    /// evaluated concurrently.
    pub fn curves(&self, grid: &[f64]) -> Result<(SinrCurve, SinrCurve), AnalyticError> {
        let clustered = self.cache.is_some();
        let values: Vec<(f64, f64)> = grid
            .par_iter()
            .map(|&t| Ok((self.macro_cdf(t)?, self.femto_cdf(t)?)))
            .collect::<Result<_, AnalyticError>>()?;
        let (zm, zf): (Vec<f64>, Vec<f64>) = values.into_iter().unzip();
        let (lm, lf) = if clustered {
            (CurveLabel::MacroCluster, CurveLabel::FemtoCluster)
        } else {
            (CurveLabel::MacroPpp, CurveLabel::FemtoPpp)
        };
        Ok((
            SinrCurve::new(lm, grid.to_vec(), zm),
            SinrCurve::new(lf, grid.to_vec(), zf),
        ))
    }

    /// Per-link mean rates (τ_m, τ_f), nats/s/Hz.
    pub fn link_rates(&self) -> Result<(f64, f64), AnalyticError> {
        match &self.cache {
            Some(cache) => Ok((
                analytic_cluster::tau_m_cluster(&self.ctx, cache)?,
                analytic_cluster::tau_f_cluster(&self.ctx, cache)?,
            )),
            None if self.closed_form_applies() => Ok((
                analytic_ppp::tau_m_alpha4(&self.ctx)?,
                analytic_ppp::tau_f_alpha4(&self.ctx)?,
            )),
            None if matches!(self.ctx.fading, FadingModel::Rayleigh { .. }) => Ok((
                analytic_ppp::tau_m_rayleigh(&self.ctx)?,
                analytic_ppp::tau_f_general(&self.ctx)?,
            )),
            None => Ok((
                analytic_ppp::tau_m_general(&self.ctx)?,
                analytic_ppp::tau_f_general(&self.ctx)?,
            )),
        }
    }

    /// Full class-rate report.
    pub fn rates(&self) -> Result<RateReport, AnalyticError> {
        let (tm, tf) = self.link_rates()?;
        rate_report(tm, tf, &self.ctx.cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{default_cluster_config, default_config};
    use crate::curve::log_grid;

    #[test]
    fn ppp_engine_produces_monotone_curves() {
        let engine = AnalyticEngine::new(default_config()).unwrap();
        let grid = log_grid(1e-2, 1e2, 20);
        let (zm, zf) = engine.curves(&grid).unwrap();
        assert_eq!(zm.label, CurveLabel::MacroPpp);
        assert!(zm.max_monotonicity_violation() < 1e-9);
        assert!(zf.max_monotonicity_violation() < 1e-9);
        // femto UEs see far better SINR at the defaults
        for (m, f) in zm.cdf.iter().zip(&zf.cdf) {
            assert!(f <= m);
        }
    }

    #[test]
    fn engine_rates_match_direct_routes() {
        let engine = AnalyticEngine::new(default_config()).unwrap();
        let r = engine.rates().unwrap();
        assert!((r.tau_m - 1.881_909_207_995_569).abs() < 1e-6);
        assert!((r.tau_f - 7.925_303_715_041_192).abs() < 1e-6);
        assert!(r.tau_n > 0.0 && r.tau_s > 0.0);
    }

    #[test]
    fn cluster_engine_dispatches() {
        let engine = AnalyticEngine::new(default_cluster_config()).unwrap();
        let z = engine.macro_cdf(1.0).unwrap();
        assert!(z > 0.0 && z < 1.0);
    }
}
