//! Config-file ingestion: flat JSON with explicit-unit power fields,
//! converted to the library's linear-unit representation.

use anyhow::{anyhow, bail, Context, Result};
use serde::Deserialize;

use femtonet::config::{
    db_to_linear, dbm_to_watts, default_config, Deployment, NetworkConfig, Severity,
};

/// On-disk configuration. Every field is optional and falls back to the
/// reference configuration; powers and the wall loss accept either
/// linear or dB/dBm forms, but not both at once. Unknown keys are
/// rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub lambda_m: Option<f64>,
    pub lambda_f: Option<f64>,
    /// "ppp" or "cluster".
    pub deployment: Option<String>,
    pub lambda_p: Option<f64>,
    pub lambda_c: Option<f64>,
    pub r_c: Option<f64>,
    pub r_f: Option<f64>,
    pub lambda_s: Option<f64>,
    pub lambda_in: Option<f64>,
    pub lambda_out: Option<f64>,
    pub p_m_watts: Option<f64>,
    pub p_m_dbm: Option<f64>,
    pub p_f_watts: Option<f64>,
    pub p_f_dbm: Option<f64>,
    pub m: Option<u32>,
    pub m_s: Option<u32>,
    pub alpha: Option<f64>,
    pub mu: Option<f64>,
    pub w_linear: Option<f64>,
    pub w_db: Option<f64>,
    pub sigma2: Option<f64>,
}

impl ConfigFile {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        serde_json::from_str(&text)
            .with_context(|| format!("cannot parse config file {}", path.display()))
    }

    /// Apply one `--set key=value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let f = || -> Result<f64> {
            value
                .parse::<f64>()
                .map_err(|_| anyhow!("value {value:?} for {key} is not a number"))
        };
        let u = || -> Result<u32> {
            value
                .parse::<u32>()
                .map_err(|_| anyhow!("value {value:?} for {key} is not a nonnegative integer"))
        };
        match key {
            "lambda_m" => self.lambda_m = Some(f()?),
            "lambda_f" => self.lambda_f = Some(f()?),
            "deployment" => self.deployment = Some(value.to_string()),
            "lambda_p" => self.lambda_p = Some(f()?),
            "lambda_c" => self.lambda_c = Some(f()?),
            "r_c" => self.r_c = Some(f()?),
            "r_f" => self.r_f = Some(f()?),
            "lambda_s" => self.lambda_s = Some(f()?),
            "lambda_in" => self.lambda_in = Some(f()?),
            "lambda_out" => self.lambda_out = Some(f()?),
            "p_m_watts" => self.p_m_watts = Some(f()?),
            "p_m_dbm" => self.p_m_dbm = Some(f()?),
            "p_f_watts" => self.p_f_watts = Some(f()?),
            "p_f_dbm" => self.p_f_dbm = Some(f()?),
            "m" => self.m = Some(u()?),
            "m_s" => self.m_s = Some(u()?),
            "alpha" => self.alpha = Some(f()?),
            "mu" => self.mu = Some(f()?),
            "w_linear" => self.w_linear = Some(f()?),
            "w_db" => self.w_db = Some(f()?),
            "sigma2" => self.sigma2 = Some(f()?),
            other => bail!("unknown configuration key {other:?}"),
        }
        Ok(())
    }

    /// Resolve into a validated `NetworkConfig`. `deployment_flag`, when
    /// present, overrides the file's deployment.
    pub fn resolve(&self, deployment_flag: Option<&str>) -> Result<NetworkConfig> {
        let mut cfg = default_config();
        if let Some(v) = self.lambda_m {
            cfg.lambda_m = v;
        }
        if let Some(v) = self.r_f {
            cfg.r_f = v;
        }
        if let Some(v) = self.lambda_s {
            cfg.lambda_s = v;
        }
        if let Some(v) = self.lambda_in {
            cfg.lambda_in = v;
        }
        if let Some(v) = self.lambda_out {
            cfg.lambda_out = v;
        }
        if let Some(v) = self.m {
            cfg.m = v;
        }
        if let Some(v) = self.m_s {
            cfg.m_s = v;
        }
        if let Some(v) = self.alpha {
            cfg.alpha = v;
        }
        if let Some(v) = self.mu {
            cfg.mu = v;
        }
        if let Some(v) = self.sigma2 {
            cfg.sigma2 = v;
        }
        cfg.p_m = match (self.p_m_watts, self.p_m_dbm) {
            (Some(_), Some(_)) => bail!("specify p_m_watts or p_m_dbm, not both"),
            (Some(w), None) => w,
            (None, Some(dbm)) => dbm_to_watts(dbm),
            (None, None) => cfg.p_m,
        };
        cfg.p_f = match (self.p_f_watts, self.p_f_dbm) {
            (Some(_), Some(_)) => bail!("specify p_f_watts or p_f_dbm, not both"),
            (Some(w), None) => w,
            (None, Some(dbm)) => dbm_to_watts(dbm),
            (None, None) => cfg.p_f,
        };
        cfg.w = match (self.w_linear, self.w_db) {
            (Some(_), Some(_)) => bail!("specify w_linear or w_db, not both"),
            (Some(w), None) => w,
            (None, Some(db)) => db_to_linear(db),
            (None, None) => cfg.w,
        };

        let deployment = deployment_flag
            .map(str::to_string)
            .or_else(|| self.deployment.clone())
            .unwrap_or_else(|| "ppp".to_string());
        match deployment.as_str() {
            "ppp" => {
                if let Some(v) = self.lambda_f {
                    cfg.lambda_f = v;
                }
                cfg.deployment = Deployment::PoissonFaps;
            }
            "cluster" => {
                let lambda_p = self.lambda_p.unwrap_or(1e-5);
                let lambda_c = self.lambda_c.unwrap_or(0.00127);
                let r_c = self.r_c.unwrap_or(50.0);
                if self.lambda_f.is_some() {
                    bail!("lambda_f is derived for clustered deployments; set lambda_p, lambda_c, r_c instead");
                }
                cfg = cfg.with_clustered_deployment(lambda_p, lambda_c, r_c);
            }
            other => bail!("unknown deployment {other:?} (expected \"ppp\" or \"cluster\")"),
        }

        let violations = cfg.validate();
        let errors: Vec<String> = violations
            .iter()
            .filter(|v| v.severity == Severity::Error)
            .map(ToString::to_string)
            .collect();
        if !errors.is_empty() {
            bail!("configuration invalid:\n  {}", errors.join("\n  "));
        }
        for warn in violations.iter().filter(|v| v.severity == Severity::Warning) {
            eprintln!("{warn}");
        }
        Ok(cfg)
    }
}
