//! Network parameters, physical-consistency validation, and the default
//! configuration.
//!
//! Powers and the wall loss are stored in linear units; dB and dBm appear
//! only at I/O boundaries.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::specfun::{
    gamma_fn, integrate, upper_incomplete_gamma, QuadratureSpec, SpecFunError,
};

/// Spatial law of the femtocell access points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Deployment {
    /// FAPs form a homogeneous Poisson point process.
    PoissonFaps,
    /// FAPs form a Neyman-Scott cluster process: Poisson parents of
    /// intensity `lambda_p`, each with Poisson-many daughters of
    /// in-disk intensity `lambda_c` uniform in a disk of radius `r_c`.
    ClusteredFaps {
        lambda_p: f64,
        lambda_c: f64,
        r_c: f64,
    },
}

/// All physical and deployment parameters of the two-tier network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    /// MBS intensity, points/m².
    pub lambda_m: f64,
    /// FAP intensity, points/m². Derived for clustered deployments.
    pub lambda_f: f64,
    pub deployment: Deployment,
    /// Femtocell coverage radius, m.
    pub r_f: f64,
    /// Subscriber intensity inside FAP disks, points/m².
    pub lambda_s: f64,
    /// Inside-nonsubscriber intensity inside FAP disks, points/m².
    pub lambda_in: f64,
    /// Outside-nonsubscriber intensity on the plane, points/m².
    pub lambda_out: f64,
    /// MBS transmit power, W.
    pub p_m: f64,
    /// FAP transmit power, W.
    pub p_f: f64,
    /// Total subchannels per access point.
    pub m: u32,
    /// Subchannels each FAP shares with inside nonsubscribers.
    pub m_s: u32,
    /// Path loss exponent, > 2.
    pub alpha: f64,
    /// Rayleigh rate parameter of the serving link.
    pub mu: f64,
    /// Wall penetration loss, linear factor in (0, 1].
    pub w: f64,
    /// Noise power, W.
    pub sigma2: f64,
}

/// dBm to linear watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Linear watts to dBm.
pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// dB to a linear power factor.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Linear power factor to dB.
pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// How seriously a validation finding should be taken. Warnings flag
/// physically dubious but mathematically legal parameter choices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

/// One validation finding. Violations are data, not exceptions.
#[derive(Debug, Clone)]
pub struct Violation {
    pub field: &'static str,
    pub message: String,
    pub severity: Severity,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{tag}: {}: {}", self.field, self.message)
    }
}

/// Relative tolerance on the clustered-intensity identity
/// λ_f = π R_c² λ_c λ_p.
pub const CLUSTER_INTENSITY_TOL: f64 = 1e-9;

impl NetworkConfig {
    /// Reserved subchannels per FAP.
    pub fn m_r(&self) -> u32 {
        self.m - self.m_s
    }

    /// Mean subscribers per FAP disk.
    pub fn mean_us(&self) -> f64 {
        self.lambda_s * std::f64::consts::PI * self.r_f * self.r_f
    }

    /// Mean inside nonsubscribers per FAP disk.
    pub fn mean_uin(&self) -> f64 {
        self.lambda_in * std::f64::consts::PI * self.r_f * self.r_f
    }

    /// Switch to a clustered deployment, deriving `lambda_f` from the
    /// cluster parameters so the intensity identity holds exactly.
    pub fn with_clustered_deployment(mut self, lambda_p: f64, lambda_c: f64, r_c: f64) -> Self {
        self.deployment = Deployment::ClusteredFaps {
            lambda_p,
            lambda_c,
            r_c,
        };
        self.lambda_f = std::f64::consts::PI * r_c * r_c * lambda_c * lambda_p;
        self
    }

    /// Switch to a Poisson deployment of the given intensity.
    pub fn with_poisson_deployment(mut self, lambda_f: f64) -> Self {
        self.deployment = Deployment::PoissonFaps;
        self.lambda_f = lambda_f;
        self
    }

    /// All invariant violations; an empty list means the configuration
    /// is usable. Warning-severity findings do not invalidate it.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let err = |field, message: String| Violation {
            field,
            message,
            severity: Severity::Error,
        };
        if !(self.alpha > 2.0) {
            out.push(err("alpha", format!("alpha must exceed 2, got {}", self.alpha)));
        }
        for (field, v) in [
            ("lambda_m", self.lambda_m),
            ("lambda_f", self.lambda_f),
            ("lambda_s", self.lambda_s),
            ("lambda_in", self.lambda_in),
            ("lambda_out", self.lambda_out),
        ] {
            if !(v >= 0.0) {
                out.push(err(field, format!("intensity must be nonnegative, got {v}")));
            }
        }
        if !(self.lambda_m > 0.0) {
            out.push(err("lambda_m", "MBS intensity must be positive".into()));
        }
        if !(self.r_f > 0.0) {
            out.push(err("r_f", format!("femtocell radius must be positive, got {}", self.r_f)));
        }
        if !(self.w > 0.0 && self.w <= 1.0) {
            out.push(err("w", format!("wall loss must lie in (0, 1], got {}", self.w)));
        }
        if self.m < 1 {
            out.push(err("m", "at least one subchannel is required".into()));
        }
        if self.m_s > self.m {
            out.push(err("m_s", format!("M_s exceeds M ({} > {})", self.m_s, self.m)));
        }
        if !(self.p_m > 0.0) {
            out.push(err("p_m", format!("MBS power must be positive, got {}", self.p_m)));
        }
        if !(self.p_f > 0.0) {
            out.push(err("p_f", format!("FAP power must be positive, got {}", self.p_f)));
        }
        if !(self.mu > 0.0) {
            out.push(err("mu", format!("Rayleigh parameter must be positive, got {}", self.mu)));
        }
        if !(self.sigma2 >= 0.0) {
            out.push(err("sigma2", format!("noise power must be nonnegative, got {}", self.sigma2)));
        }
        if let Deployment::ClusteredFaps {
            lambda_p,
            lambda_c,
            r_c,
        } = self.deployment
        {
            for (field, v) in [("lambda_p", lambda_p), ("lambda_c", lambda_c)] {
                if !(v >= 0.0) {
                    out.push(err(field, format!("intensity must be nonnegative, got {v}")));
                }
            }
            if !(r_c > 0.0) {
                out.push(err("r_c", format!("cluster radius must be positive, got {r_c}")));
            }
            let derived = std::f64::consts::PI * r_c * r_c * lambda_c * lambda_p;
            let scale = derived.abs().max(f64::MIN_POSITIVE);
            if (self.lambda_f - derived).abs() > CLUSTER_INTENSITY_TOL * scale {
                out.push(err(
                    "lambda_f",
                    format!(
                        "clustered lambda_f {} inconsistent with pi*r_c^2*lambda_c*lambda_p = {derived}",
                        self.lambda_f
                    ),
                ));
            }
        }
        // Two-scale plausibility: femtocell disks must be small relative
        // to macrocell spacing.
        if std::f64::consts::PI * self.r_f * self.r_f * self.lambda_m > 0.01 {
            out.push(Violation {
                field: "r_f",
                message: format!(
                    "pi*R_f^2*lambda_m = {:.3e} > 0.01; the point approximation of femtocell \
                     coverage becomes questionable",
                    std::f64::consts::PI * self.r_f * self.r_f * self.lambda_m
                ),
                severity: Severity::Warning,
            });
        }
        out
    }

    /// True when no error-severity violation is present.
    pub fn is_valid(&self) -> bool {
        self.validate()
            .iter()
            .all(|v| v.severity != Severity::Error)
    }

    /// Short stable identifier of this configuration, used to tag
    /// rate reports.
    pub fn short_hash(&self) -> String {
        // FNV-1a over a canonical rendering of every field.
        let canon = format!(
            "{:?}|{:e}|{:e}|{:e}|{:e}|{:e}|{:e}|{:e}|{:e}|{}|{}|{:e}|{:e}|{:e}|{:e}",
            self.deployment,
            self.lambda_m,
            self.lambda_f,
            self.r_f,
            self.lambda_s,
            self.lambda_in,
            self.lambda_out,
            self.p_m,
            self.p_f,
            self.m,
            self.m_s,
            self.alpha,
            self.mu,
            self.w,
            self.sigma2
        );
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for byte in canon.as_bytes() {
            h ^= u64::from(*byte);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        format!("{h:016x}")
    }
}

/// Moment and transform suppliers for a general interference-fading
/// distribution g.
pub trait FadingDistribution: Send + Sync {
    /// E[g^δ].
    fn fractional_moment(&self, delta: f64) -> f64;
    /// Laplace transform E[e^{−s·g}].
    fn laplace(&self, s: f64) -> f64;
    /// E[g^δ · Γ(−δ, x·g)], the tail term of the macro interference
    /// kernel.
    fn gamma_tail_moment(&self, delta: f64, x: f64) -> Result<f64, SpecFunError>;
}

/// Distribution of the interference fading g. The serving link is
/// always Rayleigh with parameter μ; interference links default to the
/// same law but may follow any distribution supplied through
/// [`FadingDistribution`].
#[derive(Clone)]
pub enum FadingModel {
    Rayleigh { mu: f64 },
    General(Arc<dyn FadingDistribution>),
}

impl std::fmt::Debug for FadingModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FadingModel::Rayleigh { mu } => write!(f, "Rayleigh {{ mu: {mu} }}"),
            FadingModel::General(_) => write!(f, "General(..)"),
        }
    }
}

impl FadingModel {
    /// E[g^δ]; for Rayleigh this is μ^{−δ}·Γ(1+δ).
    pub fn fractional_moment(&self, delta: f64) -> f64 {
        match self {
            FadingModel::Rayleigh { mu } => {
                mu.powf(-delta) * gamma_fn(1.0 + delta).expect("1+delta > 0")
            }
            FadingModel::General(d) => d.fractional_moment(delta),
        }
    }

    /// E[e^{−s·g}]; for Rayleigh this is μ/(μ+s).
    pub fn laplace(&self, s: f64) -> f64 {
        match self {
            FadingModel::Rayleigh { mu } => mu / (mu + s),
            FadingModel::General(d) => d.laplace(s),
        }
    }

    /// E[g^δ · Γ(−δ, x·g)]. The Rayleigh path integrates against the
    /// exponential density by quadrature.
    pub fn gamma_tail_moment(&self, delta: f64, x: f64) -> Result<f64, SpecFunError> {
        match self {
            FadingModel::Rayleigh { mu } => {
                let mu = *mu;
                let spec = QuadratureSpec::default();
                integrate(
                    |g: f64| {
                        let tail = upper_incomplete_gamma(-delta, x * g)
                            .unwrap_or(f64::NAN);
                        g.powf(delta) * tail * mu * (-mu * g).exp()
                    },
                    0.0,
                    f64::INFINITY,
                    &spec,
                )
            }
            FadingModel::General(d) => d.gamma_tail_moment(delta, x),
        }
    }
}

/// The reference configuration: a 20-subchannel hybrid-access network
/// with ten shared subchannels, Poisson FAPs, Rayleigh fading, and the
/// interference-limited regime (zero noise).
pub fn default_config() -> NetworkConfig {
    NetworkConfig {
        lambda_m: 1e-5,
        lambda_f: 1e-4,
        deployment: Deployment::PoissonFaps,
        r_f: 10.0,
        lambda_s: 0.015,
        lambda_in: 0.015,
        lambda_out: 1e-4,
        p_m: dbm_to_watts(39.0),
        p_f: dbm_to_watts(13.0),
        m: 20,
        m_s: 10,
        alpha: 4.0,
        mu: 1.0,
        w: db_to_linear(-6.0),
        sigma2: 0.0,
    }
}

/// The reference configuration with the clustered FAP deployment
/// (`lambda_f` derived from the cluster parameters).
pub fn default_cluster_config() -> NetworkConfig {
    default_config().with_clustered_deployment(1e-5, 0.00127, 50.0)
}
