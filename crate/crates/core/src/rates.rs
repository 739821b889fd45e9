//! Per-user-class mean rates: time-sharing dilution and population
//! averaging applied to the per-link rates τ_m and τ_f.

use serde::Serialize;

use crate::analytic_ppp::AnalyticError;
use crate::config::NetworkConfig;
use crate::load::{poisson_pmf, uout_pmf};

/// Cumulative mass at which the class-rate sums are truncated.
const TAIL_CUM: f64 = 1.0 - 1e-12;
const MAX_TERMS: usize = 2_000_000;

/// Mean achievable rates of every UE class for one configuration,
/// nats/s/Hz.
#[derive(Debug, Clone, Serialize)]
pub struct RateReport {
    /// Per-active-UE macro link rate.
    pub tau_m: f64,
    /// Per-active-UE femto link rate.
    pub tau_f: f64,
    /// Outside nonsubscribers.
    pub tau_out: f64,
    /// Inside nonsubscribers.
    pub tau_in: f64,
    /// All nonsubscribers, population averaged.
    pub tau_n: f64,
    /// Subscribers.
    pub tau_s: f64,
    /// Identifier of the generating configuration.
    pub config_hash: String,
}

/// Time-sharing bracket: [Σ_{1 ≤ i ≤ cap} p(i) + Σ_{i > cap} p(i)·cap/i] / (1 − p(0)).
///
/// Returns 1 when the cell is almost surely empty: conditioned on at
/// least one UE, that UE is then alone and keeps the whole link.
fn sharing_bracket<F: Fn(usize) -> f64>(pmf: F, cap: u32) -> f64 {
    let p0 = pmf(0);
    if 1.0 - p0 <= 1e-300 {
        return 1.0;
    }
    let cap_f = cap as f64;
    let mut acc = 0.0;
    let mut cum = p0;
    let mut i = 1usize;
    while cum < TAIL_CUM && i < MAX_TERMS {
        let p = pmf(i);
        let share = if (i as f64) <= cap_f {
            1.0
        } else {
            cap_f / i as f64
        };
        acc += p * share;
        cum += p;
        i += 1;
    }
    acc / (1.0 - p0)
}

/// Mean achievable rate of an outside nonsubscriber.
pub fn tau_out(tau_m: f64, cfg: &NetworkConfig) -> f64 {
    sharing_bracket(|i| uout_pmf(i, cfg), cfg.m) * tau_m
}

/// Mean achievable rate of an inside nonsubscriber; zero under closed
/// access (M_s = 0).
pub fn tau_in(tau_f: f64, cfg: &NetworkConfig) -> f64 {
    if cfg.m_s == 0 {
        return 0.0;
    }
    sharing_bracket(|i| poisson_pmf(i, cfg.mean_uin()), cfg.m_s) * tau_f
}

/// Mean achievable rate of a subscriber; zero under fully open access
/// (M_r = 0).
pub fn tau_s(tau_f: f64, cfg: &NetworkConfig) -> f64 {
    if cfg.m_r() == 0 {
        return 0.0;
    }
    sharing_bracket(|i| poisson_pmf(i, cfg.mean_us()), cfg.m_r()) * tau_f
}

/// Overall nonsubscriber rate: population-weighted average of the
/// outside and inside classes.
pub fn tau_n(tau_out_v: f64, tau_in_v: f64, cfg: &NetworkConfig) -> Result<f64, AnalyticError> {
    let w_out = cfg.lambda_out;
    let w_in = cfg.lambda_f * cfg.lambda_in * std::f64::consts::PI * cfg.r_f * cfg.r_f;
    let total = w_out + w_in;
    if total <= 0.0 {
        return Err(AnalyticError::Domain(
            "nonsubscriber average undefined: both population weights are zero".into(),
        ));
    }
    Ok((w_out * tau_out_v + w_in * tau_in_v) / total)
}

/// Assemble the full class-rate report from the two per-link rates.
pub fn rate_report(
    tau_m_v: f64,
    tau_f_v: f64,
    cfg: &NetworkConfig,
) -> Result<RateReport, AnalyticError> {
    let out = tau_out(tau_m_v, cfg);
    let inside = tau_in(tau_f_v, cfg);
    Ok(RateReport {
        tau_m: tau_m_v,
        tau_f: tau_f_v,
        tau_out: out,
        tau_in: inside,
        tau_n: tau_n(out, inside, cfg)?,
        tau_s: tau_s(tau_f_v, cfg),
        config_hash: cfg.short_hash(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::default_config;

    fn assert_close(actual: f64, expected: f64, tol: f64) {
        assert!(
            (actual - expected).abs() <= tol * expected.abs().max(1.0),
            "actual {actual:e} vs expected {expected:e}"
        );
    }

    #[test]
    fn tau_out_single_user_limit() {
        let mut cfg = default_config();
        cfg.lambda_out = cfg.lambda_m * 1e-7;
        assert_close(tau_out(2.0, &cfg), 2.0, 1e-6);
    }

    #[test]
    fn tau_out_dilutes_under_heavy_load() {
        let mut cfg = default_config();
        cfg.lambda_out = cfg.lambda_m * 1e4; // mean load 10^4 on 20 channels
        assert!(tau_out(2.0, &cfg) < 0.02);
    }

    #[test]
    fn tau_out_defaults_bracket() {
        // Oracle: direct truncated summation over the U_out pmf.
        let cfg = default_config();
        let mut num = 0.0;
        let mut cum = uout_pmf(0, &cfg);
        for i in 1..4000usize {
            let p = uout_pmf(i, &cfg);
            num += if i <= 20 { p } else { p * 20.0 / i as f64 };
            cum += p;
        }
        assert!(cum > 1.0 - 1e-12);
        let expected = num / (1.0 - uout_pmf(0, &cfg));
        assert_close(tau_out(1.0, &cfg), expected, 1e-10);
        // time-sharing only dilutes
        assert!(expected > 0.8 && expected <= 1.0);
    }

    #[test]
    fn tau_out_degenerate_conditioning() {
        let mut cfg = default_config();
        cfg.lambda_out = 0.0;
        assert_eq!(tau_out(3.0, &cfg), 3.0);
    }

    #[test]
    fn tau_in_limits() {
        let mut cfg = default_config();
        cfg.lambda_in = 1e-9;
        assert_close(tau_in(5.0, &cfg), 5.0, 1e-6);
        let mut closed = default_config();
        closed.m_s = 0;
        assert_eq!(tau_in(5.0, &closed), 0.0);
    }

    #[test]
    fn tau_in_defaults_bracket() {
        let cfg = default_config();
        let nu = cfg.mean_uin();
        let mut num = 0.0;
        for i in 1..400usize {
            let p = poisson_pmf(i, nu);
            num += if i <= 10 { p } else { p * 10.0 / i as f64 };
        }
        let expected = num / (1.0 - poisson_pmf(0, nu));
        assert_close(tau_in(1.0, &cfg), expected, 1e-10);
    }

    #[test]
    fn tau_s_limits() {
        let mut cfg = default_config();
        cfg.lambda_s = 1e-9;
        assert_close(tau_s(5.0, &cfg), 5.0, 1e-6);
        let mut open = default_config();
        open.m_s = open.m;
        assert_eq!(tau_s(5.0, &open), 0.0);
    }

    #[test]
    fn tau_s_nonincreasing_in_shared_channels() {
        let mut prev = f64::INFINITY;
        for m_s in 0..=20u32 {
            let mut cfg = default_config();
            cfg.m_s = m_s;
            let v = tau_s(1.0, &cfg);
            assert!(v <= prev + 1e-12, "tau_s rose at M_s={m_s}");
            prev = v;
        }
    }

    #[test]
    fn tau_n_weighted_average() {
        let mut only_out = default_config();
        only_out.lambda_in = 0.0;
        assert_close(tau_n(2.0, 9.0, &only_out).unwrap(), 2.0, 1e-12);

        let mut only_in = default_config();
        only_in.lambda_out = 0.0;
        assert_close(tau_n(2.0, 9.0, &only_in).unwrap(), 9.0, 1e-12);

        // equal weights -> arithmetic mean; defaults have
        // w_in = 1e-4 * 0.015 * pi * 100 = lambda_out * 1.5pi, so force equality
        let mut eq = default_config();
        eq.lambda_out = eq.lambda_f * eq.lambda_in * std::f64::consts::PI * eq.r_f * eq.r_f;
        assert_close(tau_n(2.0, 4.0, &eq).unwrap(), 3.0, 1e-12);
    }

    #[test]
    fn tau_n_rejects_empty_population() {
        let mut cfg = default_config();
        cfg.lambda_out = 0.0;
        cfg.lambda_in = 0.0;
        assert!(tau_n(1.0, 1.0, &cfg).is_err());
    }

    #[test]
    fn tau_n_between_components() {
        let cfg = default_config();
        let v = tau_n(2.0, 9.0, &cfg).unwrap();
        assert!(v >= 2.0 && v <= 9.0);
    }

    #[test]
    fn brackets_never_amplify() {
        for m_s in [0u32, 3, 10, 17, 20] {
            let mut cfg = default_config();
            cfg.m_s = m_s;
            for (label, v) in [
                ("out", tau_out(1.0, &cfg)),
                ("in", tau_in(1.0, &cfg)),
                ("s", tau_s(1.0, &cfg)),
            ] {
                assert!(v <= 1.0 + 1e-12 && v >= 0.0, "bracket {label} = {v}");
            }
        }
    }

    #[test]
    fn report_assembles_all_classes() {
        let cfg = default_config();
        let r = rate_report(1.8, 7.9, &cfg).unwrap();
        assert!(r.tau_out <= r.tau_m && r.tau_out >= 0.0);
        assert!(r.tau_in <= r.tau_f && r.tau_in >= 0.0);
        assert!(r.tau_s <= r.tau_f && r.tau_s >= 0.0);
        assert!(r.tau_n >= r.tau_out.min(r.tau_in) && r.tau_n <= r.tau_out.max(r.tau_in));
        assert_eq!(r.config_hash, cfg.short_hash());
    }
}
