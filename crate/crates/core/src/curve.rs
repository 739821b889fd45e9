//! SINR distribution curves, the shared output type of the analytic
//! evaluators and the Monte Carlo simulator.

/// Which evaluator produced a curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveLabel {
    MacroPpp,
    FemtoPpp,
    MacroCluster,
    FemtoCluster,
    EmpiricalMacro,
    EmpiricalFemto,
}

impl std::fmt::Display for CurveLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            CurveLabel::MacroPpp => "macro-ppp",
            CurveLabel::FemtoPpp => "femto-ppp",
            CurveLabel::MacroCluster => "macro-cluster",
            CurveLabel::FemtoCluster => "femto-cluster",
            CurveLabel::EmpiricalMacro => "empirical-macro",
            CurveLabel::EmpiricalFemto => "empirical-femto",
        };
        f.write_str(s)
    }
}

/// CDF of the SINR sampled on an ascending grid of linear thresholds.
#[derive(Debug, Clone)]
pub struct SinrCurve {
    pub label: CurveLabel,
    pub thresholds: Vec<f64>,
    pub cdf: Vec<f64>,
}

/// Grid bounds shared by all standard curves: −20 dB to +20 dB.
pub const GRID_T_MIN: f64 = 1e-2;
pub const GRID_T_MAX: f64 = 1e2;
pub const GRID_POINTS: usize = 60;

/// The standard threshold grid: 60 log-spaced points over [1e−2, 1e2].
pub fn standard_grid() -> Vec<f64> {
    log_grid(GRID_T_MIN, GRID_T_MAX, GRID_POINTS)
}

/// `n` log-spaced points over [lo, hi], endpoints included.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

impl SinrCurve {
    /// Build a curve, clamping CDF values to [0, 1].
    ///
    /// Panics if the lengths differ or the thresholds are not strictly
    /// ascending; those are programming errors, not data conditions.
    pub fn new(label: CurveLabel, thresholds: Vec<f64>, cdf: Vec<f64>) -> Self {
        assert_eq!(thresholds.len(), cdf.len(), "grid/value length mismatch");
        assert!(
            thresholds.windows(2).all(|w| w[0] < w[1]),
            "thresholds must be strictly ascending"
        );
        let cdf = cdf.into_iter().map(|z| z.clamp(0.0, 1.0)).collect();
        Self {
            label,
            thresholds,
            cdf,
        }
    }

    /// Empirical CDF of a sample set on the given grid.
    pub fn from_samples(label: CurveLabel, thresholds: Vec<f64>, samples: &[f64]) -> Self {
        let mut sorted: Vec<f64> = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len().max(1) as f64;
        let cdf = thresholds
            .iter()
            .map(|t| sorted.partition_point(|s| s <= t) as f64 / n)
            .collect();
        Self::new(label, thresholds, cdf)
    }

    /// True when the two curves share the same grid to within 1e-12
    /// relative spacing.
    pub fn same_grid(&self, other: &SinrCurve) -> bool {
        self.thresholds.len() == other.thresholds.len()
            && self
                .thresholds
                .iter()
                .zip(&other.thresholds)
                .all(|(a, b)| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0))
    }

    /// Sup-norm distance between CDF values on a shared grid.
    pub fn sup_distance(&self, other: &SinrCurve) -> Option<f64> {
        if !self.same_grid(other) {
            return None;
        }
        Some(
            self.cdf
                .iter()
                .zip(&other.cdf)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        )
    }

    /// Mean absolute distance between CDF values on a shared grid.
    pub fn mean_abs_distance(&self, other: &SinrCurve) -> Option<f64> {
        if !self.same_grid(other) {
            return None;
        }
        let n = self.cdf.len().max(1) as f64;
        Some(
            self.cdf
                .iter()
                .zip(&other.cdf)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>()
                / n,
        )
    }

    /// Largest decrease between consecutive CDF values (0 for a
    /// perfectly monotone curve).
    pub fn max_monotonicity_violation(&self) -> f64 {
        self.cdf
            .windows(2)
            .map(|w| (w[0] - w[1]).max(0.0))
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_grid_shape() {
        let g = standard_grid();
        assert_eq!(g.len(), 60);
        assert!((g[0] - 1e-2).abs() < 1e-15);
        assert!((g[59] - 1e2).abs() < 1e-12);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn values_are_clamped() {
        let c = SinrCurve::new(
            CurveLabel::MacroPpp,
            vec![1.0, 2.0, 3.0],
            vec![-1e-9, 0.5, 1.0 + 1e-9],
        );
        assert_eq!(c.cdf[0], 0.0);
        assert_eq!(c.cdf[2], 1.0);
    }

    #[test]
    fn empirical_cdf_is_monotone_step() {
        let grid = vec![0.5, 1.0, 2.0, 4.0];
        let c = SinrCurve::from_samples(CurveLabel::EmpiricalMacro, grid, &[1.0, 3.0, 0.1]);
        assert_eq!(c.cdf, vec![1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0, 1.0]);
        assert_eq!(c.max_monotonicity_violation(), 0.0);
    }

    #[test]
    fn distances() {
        let grid = standard_grid();
        let a = SinrCurve::new(CurveLabel::MacroPpp, grid.clone(), vec![0.5; 60]);
        let b = SinrCurve::new(CurveLabel::EmpiricalMacro, grid, vec![0.52; 60]);
        assert!((a.sup_distance(&b).unwrap() - 0.02).abs() < 1e-12);
        assert!((a.mean_abs_distance(&b).unwrap() - 0.02).abs() < 1e-12);
        let other = SinrCurve::new(CurveLabel::MacroPpp, vec![1.0, 2.0], vec![0.0, 1.0]);
        assert!(a.sup_distance(&other).is_none());
    }
}
