//! SINR distributions and mean rates for macrocell and femtocell UEs
//! when the FAPs form a homogeneous PPP.
//!
//! Each theorem is evaluated in up to three routes — the general
//! fading form, the Rayleigh-interference form, and the α = 4 zero-noise
//! closed form — which the test suites hold against each other.

use thiserror::Error;

use crate::config::{FadingModel, NetworkConfig};
use crate::load::{thin, ThinnedIntensities};
use crate::specfun::{gamma_fn, integrate, QuadratureSpec, SpecFunError};

/// Errors from the analytic evaluators.
#[derive(Debug, Error)]
pub enum AnalyticError {
    /// A precondition of a specialized form was violated.
    #[error("misuse: {0}")]
    Misuse(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Numeric(#[from] SpecFunError),
}

/// Everything the SINR evaluators need: the configuration, the thinned
/// interferer intensities, and the interference fading law.
#[derive(Debug, Clone)]
pub struct InterferenceContext {
    pub cfg: NetworkConfig,
    pub thinned: ThinnedIntensities,
    pub fading: FadingModel,
}

impl InterferenceContext {
    /// Context with Rayleigh interference fading of the configured μ.
    pub fn new(cfg: NetworkConfig) -> Self {
        let thinned = thin(&cfg);
        let fading = FadingModel::Rayleigh { mu: cfg.mu };
        Self {
            cfg,
            thinned,
            fading,
        }
    }

    /// Context with an explicit fading model.
    pub fn with_fading(cfg: NetworkConfig, fading: FadingModel) -> Self {
        let thinned = thin(&cfg);
        Self {
            cfg,
            thinned,
            fading,
        }
    }

    /// Context with hand-set thinned intensities, bypassing the load
    /// model. Intended for limit cases and tests.
    pub fn with_parts(cfg: NetworkConfig, thinned: ThinnedIntensities, fading: FadingModel) -> Self {
        Self {
            cfg,
            thinned,
            fading,
        }
    }

    fn delta(&self) -> f64 {
        2.0 / self.cfg.alpha
    }

    fn is_rayleigh(&self) -> bool {
        matches!(self.fading, FadingModel::Rayleigh { .. })
    }

    fn require_alpha4_interference_limited(&self, what: &str) -> Result<(), AnalyticError> {
        if self.cfg.alpha != 4.0 {
            return Err(AnalyticError::Misuse(format!(
                "{what} requires alpha = 4, got {}",
                self.cfg.alpha
            )));
        }
        if self.cfg.sigma2 != 0.0 {
            return Err(AnalyticError::Misuse(format!(
                "{what} requires sigma2 = 0, got {}",
                self.cfg.sigma2
            )));
        }
        if !self.is_rayleigh() {
            return Err(AnalyticError::Misuse(format!(
                "{what} requires Rayleigh interference fading"
            )));
        }
        Ok(())
    }
}

/// Mean rate from a SINR cdf: τ = ∫_0^∞ (1 − Z(e^t − 1)) dt.
///
/// The upper limit is far beyond the point where coverage underflows,
/// so the truncation error is below the quadrature tolerance.
pub fn rate_from_cdf<F>(z: F) -> Result<f64, AnalyticError>
where
    F: Fn(f64) -> Result<f64, AnalyticError>,
{
    rate_from_cdf_with(z, &QuadratureSpec::default())
}

/// As [`rate_from_cdf`] with an explicit tolerance. Evaluators whose
/// cdf route is itself quadrature-limited must integrate above their
/// inner noise floor or the adaptive rule subdivides fruitlessly.
pub fn rate_from_cdf_with<F>(z: F, spec: &QuadratureSpec) -> Result<f64, AnalyticError>
where
    F: Fn(f64) -> Result<f64, AnalyticError>,
{
    let coverage = |t: f64| match z(t.exp_m1()) {
        Ok(v) => 1.0 - v,
        Err(_) => f64::NAN,
    };
    // Split so the head segment resolves sub-unit-rate coverage; the
    // upper limit is far past where coverage underflows.
    let value = integrate(&coverage, 0.0, 30.0, spec)? + integrate(&coverage, 30.0, 600.0, spec)?;
    if value.is_finite() {
        Ok(value)
    } else {
        Err(AnalyticError::Domain(
            "rate integrand produced non-finite values".into(),
        ))
    }
}

/// The interference factor β(T, α) of the macro SINR theorem.
///
/// Requires a nonzero thinned MBS intensity; the composed theorem
/// remains well defined in the λ_m′ → 0 limit, which the cdf evaluators
/// take directly.
pub fn beta_factor(t: f64, alpha: f64, ctx: &InterferenceContext) -> Result<f64, AnalyticError> {
    if !(t > 0.0) {
        return Err(AnalyticError::Domain(format!(
            "threshold must be positive, got {t}"
        )));
    }
    let lam_mp = ctx.thinned.lambda_m_prime;
    if lam_mp == 0.0 {
        return Err(AnalyticError::Domain(
            "beta(T, alpha) divides by the thinned MBS intensity; evaluate the composed cdf \
             instead when lambda_m' = 0"
                .into(),
        ));
    }
    let delta = 2.0 / alpha;
    let mu = ctx.cfg.mu;
    let tail = ctx.fading.gamma_tail_moment(delta, mu * t)?;
    let frac = ctx.fading.fractional_moment(delta);
    let gamma_neg = gamma_fn(-delta)?;
    let c = ctx.thinned.lambda_f_prime * (ctx.cfg.w * ctx.cfg.p_f).powf(delta)
        / (lam_mp * ctx.cfg.p_m.powf(delta));
    Ok(2.0 * (mu * t).powf(delta) / alpha * (tail - (1.0 + c) * gamma_neg * frac))
}

/// πv-coefficient of the macro cdf exponent, λ_m′(1 − β(T, α)) − λ_m,
/// regrouped so that nothing divides by λ_m′.
fn macro_exponent_coefficient(t: f64, ctx: &InterferenceContext) -> Result<f64, AnalyticError> {
    let alpha = ctx.cfg.alpha;
    let delta = 2.0 / alpha;
    let mu = ctx.cfg.mu;
    let lam_mp = ctx.thinned.lambda_m_prime;
    let lam_fp = ctx.thinned.lambda_f_prime;
    let gamma_neg = gamma_fn(-delta)?;
    let frac = ctx.fading.fractional_moment(delta);
    let femto_scale = lam_fp * (ctx.cfg.w * ctx.cfg.p_f / ctx.cfg.p_m).powf(delta);
    let tail = if lam_mp == 0.0 {
        0.0 // multiplied by lambda_m' below
    } else {
        ctx.fading.gamma_tail_moment(delta, mu * t)?
    };
    Ok(lam_mp
        - ctx.cfg.lambda_m
        - 2.0 * (mu * t).powf(delta) / alpha
            * (lam_mp * tail - (lam_mp + femto_scale) * gamma_neg * frac))
}

/// Macro cdf from an exponent coefficient: the common tail of the
/// theorem and its Rayleigh corollary.
///
/// Z = 1 − πλ_m ∫_0^∞ exp(−rate·v − (μTσ²/P) v^{α/2}) dv, evaluated with
/// v rescaled by the decay rate so the integrand is O(1).
fn macro_cdf_from_rate(
    rate: f64,
    noise_coeff: f64,
    alpha: f64,
    lambda_m: f64,
) -> Result<f64, AnalyticError> {
    if !(rate > 0.0) {
        return Err(AnalyticError::Domain(format!(
            "macro cdf integral diverges (decay rate {rate:e})"
        )));
    }
    let spec = QuadratureSpec::default();
    let scale = 1.0 / rate;
    let integral = if noise_coeff == 0.0 {
        scale
    } else {
        scale
            * integrate(
                |w: f64| (-w - noise_coeff * (scale * w).powf(alpha / 2.0)).exp(),
                0.0,
                f64::INFINITY,
                &spec,
            )?
    };
    Ok((1.0 - std::f64::consts::PI * lambda_m * integral).clamp(0.0, 1.0))
}

/// Macro SINR cdf, general interference fading.
pub fn zm_general(t: f64, ctx: &InterferenceContext) -> Result<f64, AnalyticError> {
    if !(t > 0.0) {
        return Err(AnalyticError::Domain(format!(
            "threshold must be positive, got {t}"
        )));
    }
    let coeff = macro_exponent_coefficient(t, ctx)?;
    let rate = -std::f64::consts::PI * coeff;
    let noise = ctx.cfg.mu * t * ctx.cfg.sigma2 / ctx.cfg.p_m;
    macro_cdf_from_rate(rate, noise, ctx.cfg.alpha, ctx.cfg.lambda_m)
}

/// Macro mean achievable rate, general interference fading, nats/s/Hz.
pub fn tau_m_general(ctx: &InterferenceContext) -> Result<f64, AnalyticError> {
    rate_from_cdf(|t| zm_general(t, ctx))
}

/// φ(T, α) = T^{2/α} ∫_{T^{−2/α}}^∞ du / (1 + u^{α/2}).
///
/// The algebraic tail is summed as the alternating series
/// Σ_k (−1)^{k+1} U^{1−kα/2}/(kα/2 − 1), leaving a finite well-scaled
/// range for the quadrature.
pub fn varphi(t: f64, alpha: f64) -> Result<f64, AnalyticError> {
    if !(t > 0.0) {
        return Err(AnalyticError::Domain(format!(
            "threshold must be positive, got {t}"
        )));
    }
    if !(alpha > 2.0) {
        return Err(AnalyticError::Domain(format!(
            "alpha must exceed 2, got {alpha}"
        )));
    }
    let delta = 2.0 / alpha;
    let half = alpha / 2.0;
    let lower = t.powf(-delta);
    // Split point: far enough out that u^{−α/2} ≤ 1e−4 makes the series
    // converge to machine precision in a few terms.
    let split = lower.max(1e4f64.powf(delta)).max(2.0);
    let spec = QuadratureSpec::tight();
    let head = integrate(|u: f64| 1.0 / (1.0 + u.powf(half)), lower, split, &spec)?;
    let mut tail = 0.0;
    let mut sign = 1.0;
    for k in 1..40 {
        let p = k as f64 * half - 1.0;
        let term = sign * split.powf(-p) / p;
        tail += term;
        if term.abs() < 1e-16 * (head + tail).abs() {
            break;
        }
        sign = -sign;
    }
    Ok(t.powf(delta) * (head + tail))
}

/// Macro SINR cdf under Rayleigh interference fading.
pub fn zm_rayleigh(t: f64, ctx: &InterferenceContext) -> Result<f64, AnalyticError> {
    if !(t > 0.0) {
        return Err(AnalyticError::Domain(format!(
            "threshold must be positive, got {t}"
        )));
    }
    let cfg = &ctx.cfg;
    let delta = ctx.delta();
    let gamma_pair = gamma_fn(1.0 + delta)? * gamma_fn(1.0 - delta)?;
    let rate = std::f64::consts::PI
        * (cfg.lambda_m
            + ctx.thinned.lambda_m_prime * varphi(t, cfg.alpha)?
            + ctx.thinned.lambda_f_prime
                * (cfg.p_f * cfg.w * t / cfg.p_m).powf(delta)
                * gamma_pair);
    let noise = cfg.mu * t * cfg.sigma2 / cfg.p_m;
    macro_cdf_from_rate(rate, noise, cfg.alpha, cfg.lambda_m)
}

/// Macro mean achievable rate under Rayleigh interference fading.
pub fn tau_m_rayleigh(ctx: &InterferenceContext) -> Result<f64, AnalyticError> {
    rate_from_cdf(|t| zm_rayleigh(t, ctx))
}

/// Macro SINR cdf in closed form: α = 4, Rayleigh interference, no noise.
///
/// Written with λ_f′/λ_m rather than (λ_f′/λ_m′)·P_busy,m so the
/// λ_out = 0 limit stays finite.
pub fn zm_alpha4(t: f64, ctx: &InterferenceContext) -> Result<f64, AnalyticError> {
    ctx.require_alpha4_interference_limited("zm_alpha4")?;
    if !(t >= 0.0) {
        return Err(AnalyticError::Domain(format!(
            "threshold must be nonnegative, got {t}"
        )));
    }
    let cfg = &ctx.cfg;
    let sqrt_t = t.sqrt();
    let femto = std::f64::consts::FRAC_PI_2 * (ctx.thinned.lambda_f_prime / cfg.lambda_m)
        * (cfg.w * cfg.p_f / cfg.p_m).sqrt();
    let denom = 1.0 + sqrt_t * sqrt_t.atan() * ctx.thinned.p_busy_m + sqrt_t * femto;
    Ok(1.0 - 1.0 / denom)
}

/// Macro mean achievable rate in the α = 4 zero-noise case:
/// τ_m = ∫_0^{π/2} 2 / (tan y + (π/2 − y)·P_busy,m + femto term) dy.
pub fn tau_m_alpha4(ctx: &InterferenceContext) -> Result<f64, AnalyticError> {
    ctx.require_alpha4_interference_limited("tau_m_alpha4")?;
    let cfg = &ctx.cfg;
    let femto = std::f64::consts::FRAC_PI_2 * (ctx.thinned.lambda_f_prime / cfg.lambda_m)
        * (cfg.w * cfg.p_f / cfg.p_m).sqrt();
    let p_busy_m = ctx.thinned.p_busy_m;
    let spec = QuadratureSpec::default();
    let v = integrate(
        |y: f64| 2.0 / (y.tan() + (std::f64::consts::FRAC_PI_2 - y) * p_busy_m + femto),
        0.0,
        std::f64::consts::FRAC_PI_2,
        &spec,
    )?;
    Ok(v)
}

/// The femto interference factor ρ(α).
pub fn rho_factor(alpha: f64, ctx: &InterferenceContext) -> Result<f64, AnalyticError> {
    if !(alpha > 2.0) {
        return Err(AnalyticError::Domain(format!(
            "alpha must exceed 2, got {alpha}"
        )));
    }
    let cfg = &ctx.cfg;
    let delta = 2.0 / alpha;
    let frac = ctx.fading.fractional_moment(delta);
    let tiers = ctx.thinned.lambda_m_prime * (cfg.w * cfg.p_m / cfg.p_f).powf(delta)
        + ctx.thinned.lambda_f_prime * cfg.w.powf(2.0 * delta);
    Ok(-(2.0 * std::f64::consts::PI * cfg.mu.powf(delta) / alpha) * gamma_fn(-delta)? * tiers
        * frac)
}

/// Femto SINR cdf, general interference fading:
/// Z_f = 1 − (1/R_f²) ∫_0^{R_f²} exp(−ρ(α)T^{2/α}v − μT v^{α/2} σ²/P_f) dv.
pub fn zf_general(t: f64, ctx: &InterferenceContext) -> Result<f64, AnalyticError> {
    if !(t > 0.0) {
        return Err(AnalyticError::Domain(format!(
            "threshold must be positive, got {t}"
        )));
    }
    let cfg = &ctx.cfg;
    let rho = rho_factor(cfg.alpha, ctx)?;
    let delta = ctx.delta();
    let decay = rho * t.powf(delta);
    let noise = cfg.mu * t * cfg.sigma2 / cfg.p_f;
    let rf2 = cfg.r_f * cfg.r_f;
    // Truncate where the exponent is below −45: the integrand mass can
    // sit in a sliver near v = 0 that a rule spanning [0, R_f²] would
    // miss entirely.
    let v_decay = if decay > 0.0 { 45.0 / decay } else { f64::INFINITY };
    let v_noise = if noise > 0.0 {
        (45.0 / noise).powf(2.0 / cfg.alpha)
    } else {
        f64::INFINITY
    };
    let upper = rf2.min(v_decay.min(v_noise));
    let spec = QuadratureSpec::default();
    let integral = integrate(
        |v: f64| (-decay * v - noise * v.powf(cfg.alpha / 2.0)).exp(),
        0.0,
        upper,
        &spec,
    )?;
    Ok((1.0 - integral / rf2).clamp(0.0, 1.0))
}

/// Femto mean achievable rate, general interference fading.
pub fn tau_f_general(ctx: &InterferenceContext) -> Result<f64, AnalyticError> {
    rate_from_cdf(|t| zf_general(t, ctx))
}

/// Femto mean achievable rate in the α = 4 zero-noise case:
/// τ_f = 2 ∫_0^∞ (1 − e^{−y}) / (y² + ρ²(4) R_f⁴) dy.
pub fn tau_f_alpha4(ctx: &InterferenceContext) -> Result<f64, AnalyticError> {
    ctx.require_alpha4_interference_limited("tau_f_alpha4")?;
    let rho = rho_factor(4.0, ctx)?;
    let c = rho * ctx.cfg.r_f * ctx.cfg.r_f;
    let spec = QuadratureSpec::default();
    let v = integrate(
        |y: f64| (1.0 - (-y).exp()) / (y * y + c * c),
        0.0,
        f64::INFINITY,
        &spec,
    )?;
    Ok(2.0 * v)
}
