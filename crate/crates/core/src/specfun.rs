//! Special functions and quadrature primitives used by the analytic modules.
//!
//! Everything here is pure and safe for unrestricted concurrent use.

use thiserror::Error;

/// Errors raised by the special-function and quadrature routines.
#[derive(Debug, Clone, Error)]
pub enum SpecFunError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("quadrature did not converge: estimate {estimate:e}, error bound {error_bound:e}")]
    Accuracy { estimate: f64, error_bound: f64 },
}

/// Tolerances and budgets for the adaptive integrators.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureSpec {
    /// Relative tolerance on the integral estimate.
    pub rel_tol: f64,
    /// Absolute tolerance on the integral estimate.
    pub abs_tol: f64,
    /// Maximum number of interval subdivisions before giving up.
    pub max_subdivisions: usize,
    /// Semi-infinite ranges are truncated where the integrand bound
    /// stays below this value.
    pub tail_cutoff: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-12,
            max_subdivisions: 2000,
            tail_cutoff: 1e-12,
        }
    }
}

impl QuadratureSpec {
    /// Looser tolerance used for the inner integrals of nested 2-D
    /// cluster expressions, bounding their total cost.
    pub fn inner() -> Self {
        Self {
            rel_tol: 1e-6,
            abs_tol: 1e-12,
            max_subdivisions: 2000,
            tail_cutoff: 1e-12,
        }
    }

    /// Tight tolerance for cheap one-dimensional kernels that feed
    /// absolute-accuracy checks.
    pub fn tight() -> Self {
        Self {
            rel_tol: 1e-12,
            abs_tol: 1e-14,
            max_subdivisions: 4000,
            tail_cutoff: 1e-14,
        }
    }

    fn target(&self, estimate: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * estimate.abs())
    }
}

// Lanczos approximation, g = 7, 9 terms (GSL coefficient set).
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x == x.floor()
}

/// Euler gamma function.
///
/// Accurate to better than 1e-12 relative over the argument range used
/// by the analytic expressions. Poles at nonpositive integers are
/// rejected.
pub fn gamma_fn(x: f64) -> Result<f64, SpecFunError> {
    if !x.is_finite() {
        return Err(SpecFunError::Domain(format!("gamma({x}) undefined")));
    }
    if is_nonpositive_integer(x) {
        return Err(SpecFunError::Domain(format!(
            "gamma pole at nonpositive integer {x}"
        )));
    }
    Ok(gamma_unchecked(x))
}

fn gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection: Γ(x)Γ(1−x) = π / sin(πx)
        std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * gamma_unchecked(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut acc = LANCZOS[0];
        for (i, c) in LANCZOS.iter().enumerate().skip(1) {
            acc += c / (x + i as f64);
        }
        let t = x + LANCZOS_G + 0.5;
        (2.0 * std::f64::consts::PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
    }
}

/// Natural log of Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> Result<f64, SpecFunError> {
    if !(x > 0.0) {
        return Err(SpecFunError::Domain(format!(
            "ln_gamma requires x > 0, got {x}"
        )));
    }
    if x < 0.5 {
        // ln Γ(x) = ln π − ln sin(πx) − ln Γ(1−x); sin(πx) > 0 on (0, 0.5)
        return Ok(std::f64::consts::PI.ln()
            - (std::f64::consts::PI * x).sin().ln()
            - ln_gamma(1.0 - x)?);
    }
    let y = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (y + i as f64);
    }
    let t = y + LANCZOS_G + 0.5;
    Ok(0.5 * (2.0 * std::f64::consts::PI).ln() + (y + 0.5) * t.ln() - t + acc.ln())
}

const MAX_ITER: usize = 500;

/// Regularized lower incomplete gamma P(a, x) = γ(a, x)/Γ(a), a > 0, x ≥ 0.
pub fn regularized_gamma_p(a: f64, x: f64) -> Result<f64, SpecFunError> {
    regularized_pair(a, x).map(|(p, _)| p)
}

/// Regularized upper incomplete gamma Q(a, x) = Γ(a, x)/Γ(a), a > 0, x ≥ 0.
pub fn regularized_gamma_q(a: f64, x: f64) -> Result<f64, SpecFunError> {
    regularized_pair(a, x).map(|(_, q)| q)
}

/// Series for P when x < a+1, Lentz continued fraction for Q otherwise;
/// avoids cancellation in whichever tail is small.
fn regularized_pair(a: f64, x: f64) -> Result<(f64, f64), SpecFunError> {
    if !(a > 0.0) || x < 0.0 {
        return Err(SpecFunError::Domain(format!(
            "regularized incomplete gamma requires a > 0, x >= 0 (a={a}, x={x})"
        )));
    }
    if x == 0.0 {
        return Ok((0.0, 1.0));
    }
    let log_prefactor = -x + a * x.ln() - ln_gamma(a)?;
    let prefactor = log_prefactor.exp();
    if x < a + 1.0 {
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut ap = a;
        for _ in 0..MAX_ITER {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * f64::EPSILON {
                let p = prefactor * sum;
                return Ok((p, 1.0 - p));
            }
        }
        Err(SpecFunError::Accuracy {
            estimate: prefactor * sum,
            error_bound: f64::NAN,
        })
    } else {
        const TINY: f64 = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for n in 1..=MAX_ITER {
            let an = -(n as f64) * (n as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < TINY {
                d = TINY;
            }
            c = b + an / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < f64::EPSILON {
                let q = prefactor * h;
                return Ok((1.0 - q, q));
            }
        }
        Err(SpecFunError::Accuracy {
            estimate: 1.0 - prefactor * h,
            error_bound: f64::NAN,
        })
    }
}

/// Exponential integral E1(x) = Γ(0, x), x > 0.
fn exp_integral_e1(x: f64) -> f64 {
    const EULER: f64 = 0.577_215_664_901_532_9;
    if x <= 1.0 {
        // Series: E1(x) = −γ − ln x + Σ (−1)^{n+1} x^n / (n · n!)
        let mut sum = -EULER - x.ln();
        let mut term = 1.0;
        for n in 1..MAX_ITER {
            term *= -x / n as f64;
            let contrib = -term / n as f64;
            sum += contrib;
            if contrib.abs() < sum.abs() * f64::EPSILON {
                break;
            }
        }
        sum
    } else {
        // Lentz continued fraction: E1(x) = e^{−x} / (x + 1 − 1/(x + 3 − 4/(x + 5 − …)))
        const TINY: f64 = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for n in 1..MAX_ITER {
            let an = -(n as f64) * (n as f64);
            b += 2.0;
            d = an * d + b;
            if d.abs() < TINY {
                d = TINY;
            }
            c = b + an / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < f64::EPSILON {
                break;
            }
        }
        (-x).exp() * h
    }
}

/// Upper incomplete gamma Γ(a, x) = ∫_x^∞ t^{a−1} e^{−t} dt.
///
/// Negative first arguments are reached via the upward recurrence
/// Γ(a, x) = (Γ(a+1, x) − x^a e^{−x}) / a, applied until the first
/// argument is positive. Divergent at x = 0 for a ≤ 0.
pub fn upper_incomplete_gamma(a: f64, x: f64) -> Result<f64, SpecFunError> {
    if x < 0.0 || !x.is_finite() || !a.is_finite() {
        return Err(SpecFunError::Domain(format!(
            "upper incomplete gamma requires finite a and x >= 0 (a={a}, x={x})"
        )));
    }
    if x == 0.0 {
        if a <= 0.0 {
            return Err(SpecFunError::Domain(format!(
                "Gamma({a}, 0) diverges for a <= 0"
            )));
        }
        return gamma_fn(a);
    }
    if a > 0.0 {
        return Ok(regularized_gamma_q(a, x)? * gamma_fn(a)?);
    }
    // Number of unit steps to reach a positive (or zero) first argument.
    let steps = (-a).floor() as usize + 1;
    let top = a + steps as f64;
    let mut value = if top == 0.0 {
        exp_integral_e1(x)
    } else {
        regularized_gamma_q(top, x)? * gamma_fn(top)?
    };
    let emx = (-x).exp();
    for j in (0..steps).rev() {
        let aj = a + j as f64;
        if aj == 0.0 {
            value = exp_integral_e1(x);
        } else {
            value = (value - x.powf(aj) * emx) / aj;
        }
    }
    Ok(value)
}

// 21-point Gauss-Kronrod rule (QUADPACK constants).
const XGK21: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
const WG10: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];
const WGK21: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// One Gauss-Kronrod 21 evaluation: (estimate, error bound).
fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK21[10];
    let mut gauss = 0.0;
    for j in 0..10 {
        let abscissa = half * XGK21[j];
        let fsum = f(center - abscissa) + f(center + abscissa);
        kronrod += WGK21[j] * fsum;
        if j % 2 == 1 {
            gauss += WG10[j / 2] * fsum;
        }
    }
    let estimate = kronrod * half;
    let err = ((kronrod - gauss) * half).abs();
    (estimate, err)
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    estimate: f64,
    error: f64,
}

/// Adaptive Gauss-Kronrod integration of `f` over (a, b).
///
/// `b` may be `f64::INFINITY`; semi-infinite ranges are mapped onto
/// (0, 1) with t = a + u/(1−u). Integrable endpoint singularities are
/// tolerated because the rule never evaluates the endpoints.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> Result<f64, SpecFunError> {
    if !a.is_finite() {
        return Err(SpecFunError::Domain(format!(
            "lower integration bound must be finite, got {a}"
        )));
    }
    if b.is_infinite() {
        if b < 0.0 {
            return Err(SpecFunError::Domain("upper bound is -inf".into()));
        }
        let g = move |u: f64| {
            let om = 1.0 - u;
            if om <= 0.0 {
                return 0.0;
            }
            f(a + u / om) / (om * om)
        };
        return integrate_finite(&g, 0.0, 1.0, spec);
    }
    integrate_finite(&f, a, b, spec)
}

fn integrate_finite<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> Result<f64, SpecFunError> {
    if a == b {
        return Ok(0.0);
    }
    let (estimate, error) = gk21(f, a, b);
    let mut panels = vec![Panel {
        a,
        b,
        estimate,
        error,
    }];
    // Panels too narrow to split any further; their error is kept but
    // no longer refined.
    let mut stuck_estimate = 0.0;
    let mut stuck_error = 0.0;

    for _ in 0..spec.max_subdivisions {
        let total: f64 = stuck_estimate + panels.iter().map(|p| p.estimate).sum::<f64>();
        let err: f64 = stuck_error + panels.iter().map(|p| p.error).sum::<f64>();
        if err <= spec.target(total) {
            return Ok(total);
        }
        // Refine the worst panel.
        let (worst_idx, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("at least one panel");
        let worst = panels.swap_remove(worst_idx);
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            stuck_estimate += worst.estimate;
            stuck_error += worst.error;
            if panels.is_empty() {
                break;
            }
            continue;
        }
        let (e1, r1) = gk21(f, worst.a, mid);
        let (e2, r2) = gk21(f, mid, worst.b);
        panels.push(Panel {
            a: worst.a,
            b: mid,
            estimate: e1,
            error: r1,
        });
        panels.push(Panel {
            a: mid,
            b: worst.b,
            estimate: e2,
            error: r2,
        });
    }
    let total: f64 = stuck_estimate + panels.iter().map(|p| p.estimate).sum::<f64>();
    let err: f64 = stuck_error + panels.iter().map(|p| p.error).sum::<f64>();
    if err <= spec.target(total) {
        Ok(total)
    } else {
        Err(SpecFunError::Accuracy {
            estimate: total,
            error_bound: err,
        })
    }
}

/// Integral of a radially symmetric function over the plane:
/// ∫_{R²} f(|x|) dx = 2π ∫_0^∞ f(ρ) ρ dρ.
///
/// With `r_max = None` the truncation radius doubles from 1 until
/// ρ·f(ρ) stays below the tail cutoff for three consecutive probes.
pub fn integrate_radial<F: Fn(f64) -> f64>(
    f: F,
    r_max: Option<f64>,
    spec: &QuadratureSpec,
) -> Result<f64, SpecFunError> {
    let upper = match r_max {
        Some(r) => {
            if !(r >= 0.0) {
                return Err(SpecFunError::Domain(format!(
                    "radial truncation must be nonnegative, got {r}"
                )));
            }
            r
        }
        None => {
            let mut r = 1.0;
            let mut below = 0;
            while below < 3 {
                if (r * f(r)).abs() < spec.tail_cutoff {
                    below += 1;
                } else {
                    below = 0;
                }
                r *= 2.0;
                if r > 1e18 {
                    return Err(SpecFunError::Accuracy {
                        estimate: f64::NAN,
                        error_bound: f64::INFINITY,
                    });
                }
            }
            r
        }
    };
    let g = |rho: f64| 2.0 * std::f64::consts::PI * rho * f(rho);
    integrate(g, 0.0, upper, spec)
}
