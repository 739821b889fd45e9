//! Distributions of UE counts per cell and the subchannel-occupancy
//! probabilities that thin the interferer point processes.

use crate::config::{Deployment, NetworkConfig};
use crate::specfun::{regularized_gamma_p, regularized_gamma_q};

/// Cumulative probability mass at which count sums are truncated.
const TAIL_CUM: f64 = 1.0 - 1e-12;
/// Hard cap on count-sum terms; reached only for absurd means.
const MAX_TERMS: usize = 2_000_000;

/// Per-cell load statistics derived from a network configuration.
#[derive(Debug, Clone, Copy)]
pub struct LoadDistribution {
    /// Mean subscribers per FAP disk, λ_s π R_f².
    pub mean_us: f64,
    /// Mean inside nonsubscribers per FAP disk, λ_in π R_f².
    pub mean_uin: f64,
    /// Outside-nonsubscriber to MBS intensity ratio, λ_out/λ_m.
    pub uout_ratio: f64,
    /// Tail cutoff used when the pmfs are materialized as vectors.
    pub truncation: usize,
}

impl LoadDistribution {
    pub fn from_config(cfg: &NetworkConfig) -> Self {
        let mut dist = Self {
            mean_us: cfg.mean_us(),
            mean_uin: cfg.mean_uin(),
            uout_ratio: cfg.lambda_out / cfg.lambda_m,
            truncation: 0,
        };
        // Auto-extend the truncation until every pmf it covers has
        // absorbed all but 1e-12 of its mass.
        let mut n = 64usize;
        loop {
            let ok = [
                sum_pmf(|i| poisson_pmf(i, dist.mean_us), n),
                sum_pmf(|i| poisson_pmf(i, dist.mean_uin), n),
                sum_pmf(|i| dist.uout_pmf(i), n),
            ]
            .iter()
            .all(|s| *s >= TAIL_CUM);
            if ok || n >= MAX_TERMS {
                break;
            }
            n *= 2;
        }
        dist.truncation = n;
        dist
    }

    /// P{U_out = i}: the Taylor coefficients of the probability
    /// generating function, evaluated analytically. With a = 7/2 and
    /// b = λ_out/λ_m the pmf is negative binomial:
    /// p_i = a^a · b^i · (a+b)^{−a−i} · ∏_{k<i}(a+k)/i!.
    pub fn uout_pmf(&self, i: usize) -> f64 {
        uout_pmf_ratio(i, self.uout_ratio)
    }

    /// P{U_s = i}.
    pub fn us_pmf(&self, i: usize) -> f64 {
        poisson_pmf(i, self.mean_us)
    }

    /// P{U_in = i}.
    pub fn uin_pmf(&self, i: usize) -> f64 {
        poisson_pmf(i, self.mean_uin)
    }
}

fn sum_pmf<F: Fn(usize) -> f64>(pmf: F, n: usize) -> f64 {
    (0..n).map(pmf).sum()
}

/// Approximate pdf of the area S of a macrocell Voronoi cell:
/// f(S) = (343/15)·√(7/(2π))·(Sλ_m)^{5/2}·exp(−(7/2)Sλ_m)·λ_m.
pub fn voronoi_area_pdf(area: f64, lambda_m: f64) -> f64 {
    if area < 0.0 {
        return 0.0;
    }
    let y = area * lambda_m;
    (343.0 / 15.0) * (7.0 / (2.0 * std::f64::consts::PI)).sqrt()
        * y.powf(2.5)
        * (-3.5 * y).exp()
        * lambda_m
}

/// Poisson pmf in log space; robust up to very large means.
pub fn poisson_pmf(i: usize, mean: f64) -> f64 {
    if mean == 0.0 {
        return if i == 0 { 1.0 } else { 0.0 };
    }
    let i_f = i as f64;
    let ln_fact = crate::specfun::ln_gamma(i_f + 1.0).expect("i+1 > 0");
    (i_f * mean.ln() - mean - ln_fact).exp()
}

/// Poisson cdf P{N ≤ n} = Γ(n+1, λ)/n!, evaluated through the
/// regularized upper incomplete gamma function.
pub fn poisson_cdf(n: usize, mean: f64) -> f64 {
    if mean == 0.0 {
        return 1.0;
    }
    regularized_gamma_q(n as f64 + 1.0, mean)
        .expect("regularized gamma converges for integer first argument")
}

/// P{U_out = i} for a given λ_out/λ_m ratio.
pub fn uout_pmf_ratio(i: usize, ratio: f64) -> f64 {
    debug_assert!(ratio >= 0.0);
    let a = 3.5;
    if ratio == 0.0 {
        return if i == 0 { 1.0 } else { 0.0 };
    }
    let q = ratio / (a + ratio);
    let mut p = (a / (a + ratio)).powf(a);
    for k in 0..i {
        p *= (a + k as f64) * q / (k as f64 + 1.0);
    }
    p
}

/// P{U_out = i} from a network configuration.
pub fn uout_pmf(i: usize, cfg: &NetworkConfig) -> f64 {
    uout_pmf_ratio(i, cfg.lambda_out / cfg.lambda_m)
}

/// E[min(N, cap)] for N ~ Poisson(mean), in incomplete-gamma closed form:
/// cap·P(cap+1, mean) + mean·Q(cap, mean).
pub fn expected_min_poisson(mean: f64, cap: u32) -> f64 {
    if cap == 0 || mean == 0.0 {
        return 0.0;
    }
    let c = cap as f64;
    let p = regularized_gamma_p(c + 1.0, mean).expect("regularized gamma converges");
    let q = regularized_gamma_q(c, mean).expect("regularized gamma converges");
    c * p + mean * q
}

/// Probability that a given subchannel is used by an FAP:
/// (E[min(U_s, M_r)] + E[min(U_in, M_s)]) / M.
pub fn p_busy_f(cfg: &NetworkConfig) -> f64 {
    let e_res = expected_min_poisson(cfg.mean_us(), cfg.m_r());
    let e_sha = expected_min_poisson(cfg.mean_uin(), cfg.m_s);
    (e_res + e_sha) / cfg.m as f64
}

/// Probability that a given subchannel is used by an MBS:
/// (1/M)·Σ_i min(i, M)·P{U_out = i}, truncated adaptively.
pub fn p_busy_m(cfg: &NetworkConfig) -> f64 {
    let ratio = cfg.lambda_out / cfg.lambda_m;
    if ratio == 0.0 {
        return 0.0;
    }
    let m = cfg.m as f64;
    let a = 3.5;
    let q = ratio / (a + ratio);
    let mut pmf = (a / (a + ratio)).powf(a);
    let mut cum = pmf;
    let mut acc = 0.0; // i = 0 contributes nothing
    let mut i = 0usize;
    while cum < TAIL_CUM && i < MAX_TERMS {
        pmf *= (a + i as f64) * q / (i as f64 + 1.0);
        i += 1;
        acc += (i as f64).min(m) * pmf;
        cum += pmf;
    }
    acc / m
}

/// Independently thinned interferer intensities.
#[derive(Debug, Clone, Copy)]
pub struct ThinnedIntensities {
    pub p_busy_f: f64,
    pub p_busy_m: f64,
    /// λ_m′ = λ_m·P_busy,m.
    pub lambda_m_prime: f64,
    /// λ_f′ = λ_f·P_busy,f.
    pub lambda_f_prime: f64,
    /// λ_c′ = λ_c·P_busy,f; the parent intensity is unchanged by
    /// thinning. Present only for clustered deployments.
    pub lambda_c_prime: Option<f64>,
}

/// Thin the interferer processes by the per-subchannel busy probabilities.
pub fn thin(cfg: &NetworkConfig) -> ThinnedIntensities {
    let pf = p_busy_f(cfg);
    let pm = p_busy_m(cfg);
    let lambda_c_prime = match cfg.deployment {
        Deployment::PoissonFaps => None,
        Deployment::ClusteredFaps { lambda_c, .. } => Some(lambda_c * pf),
    };
    ThinnedIntensities {
        p_busy_f: pf,
        p_busy_m: pm,
        lambda_m_prime: cfg.lambda_m * pm,
        lambda_f_prime: cfg.lambda_f * pf,
        lambda_c_prime,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{default_cluster_config, default_config};
    use crate::specfun::{integrate, QuadratureSpec};
    use proptest::prelude::*;

    fn assert_close(actual: f64, expected: f64, tol: f64) {
        assert!(
            (actual - expected).abs() <= tol * expected.abs().max(1.0),
            "actual {actual:e} vs expected {expected:e}"
        );
    }

    /// Direct truncated summation of E[min(N, cap)], the independent
    /// route against the incomplete-gamma closed form.
    fn expected_min_by_summation(mean: f64, cap: u32) -> f64 {
        let mut acc = 0.0;
        let mut cum = 0.0;
        let mut i = 0usize;
        while cum < TAIL_CUM && i < 1_000_000 {
            let p = poisson_pmf(i, mean);
            acc += (i as f64).min(cap as f64) * p;
            cum += p;
            i += 1;
        }
        acc
    }

    #[test]
    fn voronoi_pdf_vanishes_at_zero() {
        assert_eq!(voronoi_area_pdf(0.0, 1e-5), 0.0);
    }

    #[test]
    fn voronoi_pdf_normalizes() {
        let spec = QuadratureSpec::default();
        let lambda_m = 1e-5;
        // Substitute y = S·λ_m so the adaptive integrator sees an O(1) scale.
        let total = integrate(
            |y: f64| voronoi_area_pdf(y / lambda_m, lambda_m) / lambda_m,
            0.0,
            f64::INFINITY,
            &spec,
        )
        .unwrap();
        assert_close(total, 1.0, 1e-8);
    }

    #[test]
    fn voronoi_pdf_mean_is_inverse_intensity() {
        let spec = QuadratureSpec::default();
        let lambda_m = 1e-5;
        let mean = integrate(
            |y: f64| (y / lambda_m) * voronoi_area_pdf(y / lambda_m, lambda_m) / lambda_m,
            0.0,
            f64::INFINITY,
            &spec,
        )
        .unwrap();
        assert_close(mean * lambda_m, 1.0, 1e-8);
    }

    #[test]
    fn uout_pmf_normalizes() {
        let cfg = default_config();
        let total: f64 = (0..2000).map(|i| uout_pmf(i, &cfg)).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uout_pmf_mean_is_intensity_ratio() {
        let cfg = default_config();
        let mean: f64 = (0..4000).map(|i| i as f64 * uout_pmf(i, &cfg)).sum();
        assert_close(mean, 10.0, 1e-10);
    }

    #[test]
    fn uout_pmf_zero_matches_generating_function_at_zero() {
        // G(0) = (3.5/13.5)^3.5 at the default intensity ratio of 10.
        let cfg = default_config();
        assert_close(uout_pmf(0, &cfg), (3.5f64 / 13.5).powf(3.5), 1e-13);
        assert_close(uout_pmf(0, &cfg), 8.872_989_457_173_156e-3, 1e-12);
    }

    #[test]
    fn uout_pmf_matches_mixture_integral() {
        // Independent oracle: P{U_out = i} as the Poisson mixture over the
        // Voronoi cell-area pdf, i.e. the i-th series coefficient of the
        // generating function evaluated by quadrature.
        let cfg = default_config();
        let spec = QuadratureSpec::default();
        let lambda_m = cfg.lambda_m;
        let lambda_out = cfg.lambda_out;
        for i in 0..=5usize {
            let oracle = integrate(
                |y: f64| {
                    let s = y / lambda_m;
                    poisson_pmf(i, lambda_out * s) * voronoi_area_pdf(s, lambda_m) / lambda_m
                },
                0.0,
                f64::INFINITY,
                &spec,
            )
            .unwrap();
            let delta = (uout_pmf(i, &cfg) - oracle).abs();
            assert!(
                delta <= 1e-6,
                "pmf({i}) = {} vs mixture oracle {oracle}",
                uout_pmf(i, &cfg)
            );
        }
    }

    #[test]
    fn poisson_cdf_basics() {
        assert_close(poisson_cdf(0, 1.0), (-1.0f64).exp(), 1e-12);
        for n in 0..5 {
            assert_eq!(poisson_cdf(n, 0.0), 1.0);
        }
    }

    #[test]
    fn poisson_cdf_matches_direct_summation() {
        let mean = 4.712;
        let direct: f64 = (0..=10).map(|i| poisson_pmf(i, mean)).sum();
        assert!((poisson_cdf(10, mean) - direct).abs() < 1e-12);
        // frozen from mpmath: Γ(11, 4.712)/10!
        assert_close(poisson_cdf(10, mean), 0.990_818_383_093_974_6, 1e-12);
    }

    #[test]
    fn gamma_form_matches_summation_on_grid() {
        for &mean in &[0.5, 2.0, 4.712_388_980_384_69, 9.0, 30.0] {
            for &cap in &[1u32, 3, 10, 20, 64] {
                let closed = expected_min_poisson(mean, cap);
                let direct = expected_min_by_summation(mean, cap);
                assert!(
                    (closed - direct).abs() <= 1e-10 * direct.abs().max(1.0),
                    "mean {mean} cap {cap}: {closed} vs {direct}"
                );
            }
        }
    }

    #[test]
    fn p_busy_f_empty_cells() {
        let mut cfg = default_config();
        cfg.lambda_s = 0.0;
        cfg.lambda_in = 0.0;
        assert_eq!(p_busy_f(&cfg), 0.0);
    }

    #[test]
    fn p_busy_f_saturates() {
        let mut cfg = default_config();
        // mean load 1e3 per class on caps of 10 each
        let mean = 1e3 / (std::f64::consts::PI * cfg.r_f * cfg.r_f);
        cfg.lambda_s = mean;
        cfg.lambda_in = mean;
        assert!(p_busy_f(&cfg) > 1.0 - 1e-12);
    }

    #[test]
    fn p_busy_f_defaults() {
        // Oracle: direct summation of min(i,10) over Poisson(4.71238898...)
        let cfg = default_config();
        let nu = cfg.mean_us();
        let direct = (expected_min_by_summation(nu, 10) * 2.0) / 20.0;
        let closed = p_busy_f(&cfg);
        assert!((closed - direct).abs() < 1e-10);
        assert_close(closed, 0.469_796_756_140_702_5, 1e-10);
    }

    #[test]
    fn p_busy_m_zero_without_outside_users() {
        let mut cfg = default_config();
        cfg.lambda_out = 0.0;
        assert_eq!(p_busy_m(&cfg), 0.0);
    }

    #[test]
    fn p_busy_m_saturates_at_high_ratio() {
        let mut cfg = default_config();
        cfg.lambda_out = cfg.lambda_m * 1000.0;
        assert!(p_busy_m(&cfg) >= 0.99);
    }

    #[test]
    fn p_busy_m_defaults() {
        // Frozen from the truncated-sum oracle at ratio 10, M = 20:
        // E[min(U_out, 20)] = 9.668975013271475.
        let cfg = default_config();
        assert_close(p_busy_m(&cfg), 0.483_448_750_663_573_7, 1e-10);
    }

    #[test]
    fn thin_produces_consistent_products() {
        let cfg = default_config();
        let t = thin(&cfg);
        assert_eq!(t.lambda_f_prime, cfg.lambda_f * t.p_busy_f);
        assert_eq!(t.lambda_m_prime, cfg.lambda_m * t.p_busy_m);
        assert!(t.lambda_c_prime.is_none());

        let mut quiet = cfg.clone();
        quiet.lambda_s = 0.0;
        quiet.lambda_in = 0.0;
        assert_eq!(thin(&quiet).lambda_f_prime, 0.0);
    }

    #[test]
    fn thin_clustered_scales_daughters_not_parents() {
        let cfg = default_cluster_config();
        let t = thin(&cfg);
        let pf = p_busy_f(&cfg);
        assert_close(t.lambda_c_prime.unwrap(), 0.00127 * pf, 1e-14);
        assert_close(t.lambda_f_prime, cfg.lambda_f * pf, 1e-14);
    }

    #[test]
    fn busy_probabilities_monotone_in_load() {
        let mut prev_f = 0.0;
        let mut prev_m = 0.0;
        for k in 1..=8 {
            let mut cfg = default_config();
            cfg.lambda_s = 0.004 * k as f64;
            cfg.lambda_in = 0.004 * k as f64;
            cfg.lambda_out = 2e-5 * k as f64;
            let f = p_busy_f(&cfg);
            let m = p_busy_m(&cfg);
            assert!(f >= prev_f && m >= prev_m, "k={k}: {f} {m}");
            prev_f = f;
            prev_m = m;
        }
    }

    #[test]
    fn load_distribution_truncation_captures_mass() {
        let cfg = default_config();
        let dist = LoadDistribution::from_config(&cfg);
        let total: f64 = (0..dist.truncation).map(|i| dist.uout_pmf(i)).sum();
        assert!(total >= 1.0 - 1e-9);
        let total_us: f64 = (0..dist.truncation).map(|i| dist.us_pmf(i)).sum();
        assert!(total_us >= 1.0 - 1e-9);
    }

    proptest! {
        // E[min(N, cap)] never exceeds min(E[N], cap)
        #[test]
        fn expected_min_bounded(mean in 0.0f64..200.0, cap in 0u32..100) {
            let v = expected_min_poisson(mean, cap);
            prop_assert!(v <= mean.min(cap as f64) + 1e-9);
            prop_assert!(v >= -1e-12);
        }

        // closed form and direct summation agree everywhere
        #[test]
        fn expected_min_routes_agree(mean in 0.01f64..80.0, cap in 1u32..64) {
            let closed = expected_min_poisson(mean, cap);
            let direct = expected_min_by_summation(mean, cap);
            prop_assert!((closed - direct).abs() <= 1e-9 * direct.abs().max(1.0));
        }
    }
}
