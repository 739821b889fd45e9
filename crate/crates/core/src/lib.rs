//! Downlink performance of two-tier macrocell/femtocell networks with
//! multi-channel hybrid access.
//!
//! The crate computes SINR distributions and mean achievable rates for
//! every UE class, both analytically — integral and closed-form
//! expressions for Poisson and Neyman-Scott-clustered femtocell
//! deployments — and empirically through a snapshot Monte Carlo
//! simulator, with machinery to cross-validate the two.

pub mod analytic_cluster;
pub mod analytic_ppp;
pub mod analysis;
pub mod config;
pub mod curve;
pub mod load;
pub mod rates;
pub mod sim;
pub mod specfun;

pub use analytic_ppp::{AnalyticError, InterferenceContext};
pub use config::{default_cluster_config, default_config, Deployment, FadingModel, NetworkConfig};
pub use curve::{standard_grid, CurveLabel, SinrCurve};
pub use load::{thin, ThinnedIntensities};
pub use rates::RateReport;
