//! SINR distributions and mean rates when the FAPs form a Neyman-Scott
//! cluster process.
//!
//! The interference kernel η(s, x) depends on x only through |x|, so
//! every 2-D integral here collapses to one dimension: integrals of a
//! radial function over the cluster disk are taken along circles of
//! constant distance, weighted by the arc length falling inside the
//! disk. A per-s cache holds radial η profiles and outer-integral
//! values; population is compute-once per key.

use std::sync::Arc;

use dashmap::DashMap;

use crate::analytic_ppp::{varphi, AnalyticError, InterferenceContext};
use crate::config::Deployment;
use crate::specfun::{gamma_fn, integrate, QuadratureSpec};

/// Outer tolerance for the cluster theorem integrals. Matching the
/// 1e-6 inner tolerance keeps the adaptive rule from chasing the noise
/// floor of the nested kernel evaluations.
fn outer_spec() -> QuadratureSpec {
    QuadratureSpec {
        rel_tol: 1e-6,
        abs_tol: 1e-10,
        max_subdivisions: 2000,
        tail_cutoff: 1e-12,
    }
}

/// Angular measure of the circle of radius `t` centered at distance `d`
/// from the origin that falls inside the disk C(o, rc).
fn arc_angle(t: f64, d: f64, rc: f64) -> f64 {
    if t <= 0.0 {
        return 2.0 * std::f64::consts::PI;
    }
    if d <= 0.0 {
        return if t <= rc {
            2.0 * std::f64::consts::PI
        } else {
            0.0
        };
    }
    if t <= rc - d {
        return 2.0 * std::f64::consts::PI;
    }
    if t >= rc + d || t <= d - rc {
        return 0.0;
    }
    let c = (t * t + d * d - rc * rc) / (2.0 * t * d);
    2.0 * c.clamp(-1.0, 1.0).acos()
}

/// Memoized radial machinery for one clustered configuration.
///
/// Keys quantize s on a log grid of 1e-6 relative spacing; the
/// resulting approximation stays below the inner tolerance. Concurrent
/// readers are fine; population is atomic per key.
pub struct ClusterKernelCache {
    pub alpha: f64,
    pub r_c: f64,
    pub lambda_c_prime: f64,
    profiles: DashMap<i64, Arc<EtaProfile>>,
    outer: DashMap<i64, f64>,
    /// ln ∫(1−η) sampled on a log-s anchor grid for interpolation.
    outer_anchors: DashMap<i64, f64>,
}

/// Anchor spacing of the outer-integral interpolant: 8 per decade.
const ANCHOR_STEP: f64 = std::f64::consts::LN_10 / 8.0;

/// η(s, ·) sampled on a uniform distance grid with cubic interpolation.
struct EtaProfile {
    step: f64,
    values: Vec<f64>,
}

impl EtaProfile {
    /// Catmull-Rom coefficients of interval `i`, with clamped ends:
    /// p(u) = ((a·u + b)·u + c)·u + d on u ∈ [0, 1].
    fn coeffs(&self, i: usize) -> (f64, f64, f64, f64) {
        let n = self.values.len();
        let p0 = self.values[i.saturating_sub(1)];
        let p1 = self.values[i];
        let p2 = self.values[i + 1];
        let p3 = self.values[(i + 2).min(n - 1)];
        let a = -0.5 * p0 + 1.5 * p1 - 1.5 * p2 + 0.5 * p3;
        let b = p0 - 2.5 * p1 + 2.0 * p2 - 0.5 * p3;
        let c = -0.5 * p0 + 0.5 * p2;
        (a, b, c, p1)
    }

    fn eval(&self, d: f64) -> f64 {
        let n = self.values.len();
        let x = d / self.step;
        let i = (x.floor() as usize).min(n - 2);
        let u = x - i as f64;
        let (a, b, c, p1) = self.coeffs(i);
        (((a * u + b) * u + c) * u + p1).clamp(0.0, 1.0)
    }

    fn span(&self) -> f64 {
        self.step * (self.values.len() - 1) as f64
    }

    /// Exact ∫_0^x w(ρ)·ρ dρ of the spline, with w(ρ) = η(ρ) or
    /// 1 − η(ρ). Each interval integrates a quartic in closed form;
    /// adaptive rules would otherwise chase the spline's knots.
    fn integral_times_rho_upto(&self, x: f64, one_minus: bool) -> f64 {
        let h = self.step;
        let x = x.min(self.span());
        let full = (x / h).floor() as usize;
        let mut acc = 0.0;
        let mut piece = |i: usize, u1: f64| {
            let (a, b, c, d) = self.coeffs(i);
            // ∫_0^{u1} p(u) du and ∫_0^{u1} p(u)·u du
            let u2 = u1 * u1;
            let int_p = ((a / 4.0 * u1 + b / 3.0) * u1 + c / 2.0) * u2 + d * u1;
            let int_pu = ((a / 5.0 * u1 + b / 4.0) * u1 + c / 3.0) * u2 * u1 + d / 2.0 * u2;
            let i_f = i as f64;
            let (p_part, pu_part) = if one_minus {
                (u1 - int_p, u2 / 2.0 - int_pu)
            } else {
                (int_p, int_pu)
            };
            // ρ = (i + u)·h, dρ = h du  =>  h²·∫ w(u)(i+u) du
            acc += h * h * (i_f * p_part + pu_part);
        };
        for i in 0..full.min(self.values.len() - 1) {
            piece(i, 1.0);
        }
        if full < self.values.len() - 1 {
            let u1 = x / h - full as f64;
            if u1 > 0.0 {
                piece(full, u1);
            }
        }
        acc
    }
}

const PROFILE_POINTS: usize = 257;

fn quantize(s: f64) -> i64 {
    (s.ln() * 1e6).round() as i64
}

impl ClusterKernelCache {
    /// Cache for a clustered Rayleigh context.
    pub fn new(ctx: &InterferenceContext) -> Result<Self, AnalyticError> {
        let Deployment::ClusteredFaps { r_c, .. } = ctx.cfg.deployment else {
            return Err(AnalyticError::Misuse(
                "cluster kernel cache requires a clustered deployment".into(),
            ));
        };
        let lambda_c_prime = ctx.thinned.lambda_c_prime.unwrap_or(0.0);
        Ok(Self {
            alpha: ctx.cfg.alpha,
            r_c,
            lambda_c_prime,
            profiles: DashMap::new(),
            outer: DashMap::new(),
            outer_anchors: DashMap::new(),
        })
    }

    /// Standalone cache from raw parameters, for kernel-level tests.
    pub fn from_parts(alpha: f64, r_c: f64, lambda_c_prime: f64) -> Self {
        Self {
            alpha,
            r_c,
            lambda_c_prime,
            profiles: DashMap::new(),
            outer: DashMap::new(),
            outer_anchors: DashMap::new(),
        }
    }

    fn kernel_value(&self, s: f64, t: f64) -> f64 {
        // s / (s + t^alpha) with a multiply-only path for alpha = 4
        let ta = if self.alpha == 4.0 {
            let t2 = t * t;
            t2 * t2
        } else {
            t.powf(self.alpha)
        };
        s / (s + ta)
    }

    /// Raw disk kernel K(s, d) = ∫_{C(o,R_c)} dy / (1 + |x+y|^α / s),
    /// |x| = d. Independent of the thinned daughter intensity.
    pub fn disk_kernel(&self, s: f64, d: f64) -> Result<f64, AnalyticError> {
        if s <= 0.0 {
            return Ok(0.0);
        }
        let rc = self.r_c;
        let spec = QuadratureSpec::inner();
        let mut total = 0.0;
        if d < rc {
            total += self.full_circle_part(s, rc - d, &spec)?;
        }
        if d > 0.0 {
            // annular band [|rc−d|, rc+d] weighted by the arc angle
            let t_lo = (rc - d).abs();
            let t_hi = rc + d;
            let t_scale = s.powf(1.0 / self.alpha);
            let mut cuts = vec![t_lo];
            for factor in [0.125, 1.0, 8.0] {
                let c = t_scale * factor;
                if c > t_lo * (1.0 + 1e-12) && c < t_hi * (1.0 - 1e-12) {
                    cuts.push(c);
                }
            }
            cuts.push(t_hi);
            for w in cuts.windows(2) {
                total += wedge_integral(
                    |t| arc_angle(t, d, rc) * t * self.kernel_value(s, t),
                    w[0],
                    w[1],
                    &spec,
                )?;
            }
        }
        Ok(total)
    }

    /// ∫_0^X 2π t · s/(s + t^α) dt, the full-circle portion of the disk
    /// kernel. Substituting w = t²/σ with σ = s^{2/α} makes the
    /// integrand O(1) regardless of how small s is.
    fn full_circle_part(&self, s: f64, x: f64, spec: &QuadratureSpec) -> Result<f64, AnalyticError> {
        if self.alpha == 4.0 {
            let sq = s.sqrt();
            return Ok(std::f64::consts::PI * sq * (x * x / sq).atan());
        }
        let sigma = s.powf(2.0 / self.alpha);
        let upper = x * x / sigma;
        let half = self.alpha / 2.0;
        let v = segment_integral(|w: f64| 1.0 / (1.0 + w.powf(half)), 0.0, upper, spec)?;
        Ok(std::f64::consts::PI * sigma * v)
    }

    fn profile(&self, s: f64) -> Result<Arc<EtaProfile>, AnalyticError> {
        let key = quantize(s);
        if let Some(p) = self.profiles.get(&key) {
            return Ok(p.clone());
        }
        let span = 2.0 * self.r_c;
        let step = span / (PROFILE_POINTS - 1) as f64;
        let mut values = Vec::with_capacity(PROFILE_POINTS);
        for i in 0..PROFILE_POINTS {
            values.push(self.eta_direct(s, i as f64 * step)?);
        }
        let profile = Arc::new(EtaProfile { step, values });
        Ok(self
            .profiles
            .entry(key)
            .or_insert(profile)
            .value()
            .clone())
    }

    /// η(s, d) without memoization.
    pub fn eta_direct(&self, s: f64, distance: f64) -> Result<f64, AnalyticError> {
        if s <= 0.0 || self.lambda_c_prime == 0.0 {
            return Ok(1.0);
        }
        Ok((-self.lambda_c_prime * self.disk_kernel(s, distance)?).exp())
    }

    /// η(s, d): the probability-generating kernel of one thinned
    /// cluster seen from distance d. Values lie in (0, 1].
    pub fn eta(&self, s: f64, distance: f64) -> Result<f64, AnalyticError> {
        if s <= 0.0 || self.lambda_c_prime == 0.0 {
            return Ok(1.0);
        }
        // Below a few grid steps of kernel scale the transition at the
        // disk boundary is too sharp for the uniform profile; evaluate
        // that thin ring directly.
        let step = 2.0 * self.r_c / (PROFILE_POINTS - 1) as f64;
        let t_scale = s.powf(1.0 / self.alpha);
        if t_scale < 8.0 * step
            && (distance - self.r_c).abs() < (6.0 * t_scale).max(16.0 * step)
        {
            return self.eta_direct(s, distance);
        }
        let profile = self.profile(s)?;
        if distance <= profile.span() {
            Ok(profile.eval(distance))
        } else {
            self.eta_direct(s, distance)
        }
    }

    /// ∫_{R²} (1 − η(s, x)) dx, memoized per quantized s.
    ///
    /// The radial mass sits inside max(2R_c, a few kernel scales); the
    /// algebraic tail is integrated in log space out to the radius where
    /// ρ·(1 − η) drops below the tail cutoff.
    pub fn cluster_outer(&self, s: f64) -> Result<f64, AnalyticError> {
        if s <= 0.0 || self.lambda_c_prime == 0.0 {
            return Ok(0.0);
        }
        let key = quantize(s);
        if let Some(v) = self.outer.get(&key) {
            return Ok(*v);
        }
        let two_pi = 2.0 * std::f64::consts::PI;
        let profile = self.profile(s)?;
        let core_end = profile.span();
        let core = profile.integral_times_rho_upto(core_end, true);
        // Tail in log space, truncated where ρ(1−η) stays below cutoff.
        let mut r_end = core_end;
        let mut below = 0;
        while below < 3 && r_end < 1e15 {
            r_end *= 2.0;
            let v = (1.0 - self.eta_direct(s, r_end)?) * r_end;
            if v.abs() < 1e-12 {
                below += 1;
            } else {
                below = 0;
            }
        }
        // Direct η evaluations carry ~1e-6 quadrature noise, so the tail
        // target must sit above it.
        let tail_spec = QuadratureSpec {
            rel_tol: 1e-5,
            abs_tol: (1e-6 * core).max(1e-12),
            max_subdivisions: 2000,
            tail_cutoff: 1e-12,
        };
        let tail = integrate(
            |x: f64| {
                let rho = x.exp();
                match self.eta_direct(s, rho) {
                    Ok(e) => (1.0 - e) * rho * rho,
                    Err(_) => f64::NAN,
                }
            },
            core_end.ln(),
            r_end.ln(),
            &tail_spec,
        )?;
        let value = two_pi * (core + tail);
        self.outer.insert(key, value);
        Ok(value)
    }

    /// ∫_{C(o,R_c)} η(s, |y − z|) dy with z = (r, 0): the Palm factor of
    /// the serving cluster, evaluated with the radial η memo.
    pub fn palm_disk(&self, s: f64, r: f64) -> Result<f64, AnalyticError> {
        let rc = self.r_c;
        if s <= 0.0 || self.lambda_c_prime == 0.0 {
            return Ok(std::f64::consts::PI * rc * rc);
        }
        let profile = self.profile(s)?;
        let eta_at = |t: f64| {
            if t <= profile.span() {
                profile.eval(t)
            } else {
                1.0
            }
        };
        let spec = QuadratureSpec::inner();
        let mut total = 0.0;
        if r < rc {
            total += 2.0 * std::f64::consts::PI * profile.integral_times_rho_upto(rc - r, false);
        }
        if r > 0.0 {
            total += wedge_integral(
                |t| arc_angle(t, r, rc) * t * eta_at(t),
                (rc - r).abs(),
                rc + r,
                &spec,
            )?;
        }
        Ok(total)
    }

    fn outer_anchor(&self, idx: i64) -> Result<f64, AnalyticError> {
        if let Some(v) = self.outer_anchors.get(&idx) {
            return Ok(*v);
        }
        let s = (idx as f64 * ANCHOR_STEP).exp();
        let ln_v = self.cluster_outer(s)?.ln();
        self.outer_anchors.insert(idx, ln_v);
        Ok(ln_v)
    }

    /// ∫_{R²}(1 − η(s, x)) dx through a cubic interpolant of its
    /// logarithm over a log-s anchor grid. ln ∫(1−η) is close to linear
    /// in ln s at both ends of the range, so eight anchors per decade
    /// hold the interpolation error well below the inner tolerance;
    /// this is what makes the nested rate integrals tractable.
    pub fn cluster_outer_smooth(&self, s: f64) -> Result<f64, AnalyticError> {
        if s <= 0.0 || self.lambda_c_prime == 0.0 {
            return Ok(0.0);
        }
        let x = s.ln() / ANCHOR_STEP;
        let i = x.floor() as i64;
        let u = x - i as f64;
        let p0 = self.outer_anchor(i - 1)?;
        let p1 = self.outer_anchor(i)?;
        let p2 = self.outer_anchor(i + 1)?;
        let p3 = self.outer_anchor(i + 2)?;
        let a = -0.5 * p0 + 1.5 * p1 - 1.5 * p2 + 0.5 * p3;
        let b = p0 - 2.5 * p1 + 2.0 * p2 - 0.5 * p3;
        let c = -0.5 * p0 + 0.5 * p2;
        Ok((((a * u + b) * u + c) * u + p1).exp())
    }
}

/// Integrate across a wedge band with the substitution
/// t = lo + (hi−lo)·sin²θ. The arc angle vanishes like a square root at
/// the band edges; the substitution renders both endpoints smooth, so
/// the adaptive rule converges in a handful of panels.
fn wedge_integral<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    spec: &QuadratureSpec,
) -> Result<f64, AnalyticError> {
    if hi <= lo {
        return Ok(0.0);
    }
    let width = hi - lo;
    let v = integrate(
        |theta: f64| {
            let sn = theta.sin();
            let t = lo + width * sn * sn;
            f(t) * (2.0 * theta).sin()
        },
        0.0,
        std::f64::consts::FRAC_PI_2,
        spec,
    )?;
    Ok(width * v)
}

/// Integrate a segment, switching to log space when it spans many
/// orders of magnitude; a plain rule would otherwise place no nodes in
/// the narrow region that carries the mass.
fn segment_integral<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    spec: &QuadratureSpec,
) -> Result<f64, AnalyticError> {
    if hi <= lo {
        return Ok(0.0);
    }
    if lo > 0.0 && hi / lo > 1e3 {
        let v = integrate(
            |x: f64| {
                let t = x.exp();
                f(t) * t
            },
            lo.ln(),
            hi.ln(),
            spec,
        )?;
        return Ok(v);
    }
    if lo == 0.0 && hi > 1e3 {
        let head = integrate(&f, 0.0, 1.0, spec)?;
        let tail = integrate(
            |x: f64| {
                let t = x.exp();
                f(t) * t
            },
            0.0,
            hi.ln(),
            spec,
        )?;
        return Ok(head + tail);
    }
    Ok(integrate(f, lo, hi, spec)?)
}

fn require_cluster_rayleigh(
    ctx: &InterferenceContext,
    what: &str,
) -> Result<(f64, f64), AnalyticError> {
    let Deployment::ClusteredFaps { lambda_p, r_c, .. } = ctx.cfg.deployment else {
        return Err(AnalyticError::Misuse(format!(
            "{what} requires a clustered FAP deployment"
        )));
    };
    if !matches!(ctx.fading, crate::config::FadingModel::Rayleigh { .. }) {
        return Err(AnalyticError::Misuse(format!(
            "{what} is derived for Rayleigh interference fading only"
        )));
    }
    Ok((lambda_p, r_c))
}

/// Macro SINR cdf under clustered FAPs and Rayleigh interference.
pub fn zm_cluster(
    t: f64,
    ctx: &InterferenceContext,
    cache: &ClusterKernelCache,
) -> Result<f64, AnalyticError> {
    let (lambda_p, _) = require_cluster_rayleigh(ctx, "zm_cluster")?;
    if !(t > 0.0) {
        return Err(AnalyticError::Domain(format!(
            "threshold must be positive, got {t}"
        )));
    }
    let cfg = &ctx.cfg;
    let phi = varphi(t, cfg.alpha)?;
    let rate0 = std::f64::consts::PI
        * (cfg.lambda_m + ctx.thinned.lambda_m_prime * phi);
    let scale = 1.0 / rate0;
    let s_coeff = t * cfg.w * cfg.p_f / cfg.p_m;
    let noise = cfg.mu * t * cfg.sigma2 / cfg.p_m;
    let half = cfg.alpha / 2.0;
    let spec = outer_spec();
    let integral = integrate(
        |w: f64| {
            let v = scale * w;
            let vh = v.powf(half);
            let cluster_term = if lambda_p > 0.0 {
                match cache.cluster_outer_smooth(s_coeff * vh) {
                    Ok(k) => lambda_p * k,
                    Err(_) => return f64::NAN,
                }
            } else {
                0.0
            };
            (-w - cluster_term - noise * vh).exp()
        },
        0.0,
        50.0,
        &spec,
    )?;
    Ok((1.0 - std::f64::consts::PI * cfg.lambda_m * scale * integral).clamp(0.0, 1.0))
}

/// Macro mean achievable rate under clustered FAPs.
pub fn tau_m_cluster(
    ctx: &InterferenceContext,
    cache: &ClusterKernelCache,
) -> Result<f64, AnalyticError> {
    crate::analytic_ppp::rate_from_cdf_with(|t| zm_cluster(t, ctx, cache), &rate_spec())
}

/// Tolerance of the rate integrals over the cluster cdfs. Each cdf
/// evaluation carries ~1e-6 quadrature noise, which integrates to a few
/// times 1e-5 of irreducible error over the rate range; targets below
/// that floor cannot converge no matter how far the rule subdivides.
fn rate_spec() -> QuadratureSpec {
    QuadratureSpec {
        rel_tol: 1e-5,
        abs_tol: 5e-5,
        max_subdivisions: 2000,
        tail_cutoff: 1e-12,
    }
}

/// Femto SINR cdf under clustered FAPs and Rayleigh interference.
///
/// Palm conditioning places the serving FAP at the origin and the
/// typical UE at z = (r, 0).
pub fn zf_cluster(
    t: f64,
    ctx: &InterferenceContext,
    cache: &ClusterKernelCache,
) -> Result<f64, AnalyticError> {
    let (lambda_p, r_c) = require_cluster_rayleigh(ctx, "zf_cluster")?;
    if !(t > 0.0) {
        return Err(AnalyticError::Domain(format!(
            "threshold must be positive, got {t}"
        )));
    }
    let cfg = &ctx.cfg;
    let delta = 2.0 / cfg.alpha;
    let gamma_pair = gamma_fn(1.0 + delta)? * gamma_fn(1.0 - delta)?;
    let macro_coeff = std::f64::consts::PI
        * ctx.thinned.lambda_m_prime
        * (cfg.w * t * cfg.p_m / cfg.p_f).powf(delta)
        * gamma_pair;
    let noise = cfg.mu * t * cfg.sigma2 / cfg.p_f;
    let w2 = cfg.w * cfg.w;
    // Truncate where the macro and noise exponents alone are below −45;
    // the cluster term only deepens the decay.
    let r_macro = if macro_coeff > 0.0 {
        (45.0 / macro_coeff).sqrt()
    } else {
        f64::INFINITY
    };
    let r_noise = if noise > 0.0 {
        (45.0 / noise).powf(1.0 / cfg.alpha)
    } else {
        f64::INFINITY
    };
    let upper = cfg.r_f.min(r_macro.min(r_noise));
    let spec = outer_spec();
    let integral = integrate(
        |r: f64| {
            let s = t * r.powf(cfg.alpha) * w2;
            let cluster_term = if lambda_p > 0.0 {
                match cache.cluster_outer_smooth(s) {
                    Ok(k) => lambda_p * k,
                    Err(_) => return f64::NAN,
                }
            } else {
                0.0
            };
            let palm = match cache.palm_disk(s, r) {
                Ok(p) => p,
                Err(_) => return f64::NAN,
            };
            (-noise * r.powf(cfg.alpha) - macro_coeff * r * r - cluster_term).exp() * palm * r
        },
        0.0,
        upper,
        &spec,
    )?;
    let prefactor = 2.0 / (std::f64::consts::PI * r_c * r_c * cfg.r_f * cfg.r_f);
    Ok((1.0 - prefactor * integral).clamp(0.0, 1.0))
}

/// Femto mean achievable rate under clustered FAPs.
pub fn tau_f_cluster(
    ctx: &InterferenceContext,
    cache: &ClusterKernelCache,
) -> Result<f64, AnalyticError> {
    crate::analytic_ppp::rate_from_cdf_with(|t| zf_cluster(t, ctx, cache), &rate_spec())
}
