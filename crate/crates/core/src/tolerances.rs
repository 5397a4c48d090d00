//! Numeric tolerances shared across the pipeline.

/// Knobs controlling rank decisions, eigenvalue clamping and majorization
/// comparisons. All spectral thresholds scale with `n * machine epsilon *
/// largest eigenvalue`, so they adapt to matrix size automatically.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// Multiplier on `n * eps * lambda_max` below which an eigenvalue does
    /// not count towards the numerical rank.
    pub rank_scale: f64,
    /// Multiplier on `n * eps * lambda_max` defining the window of negative
    /// eigenvalues clamped to zero; anything below `-clamp_scale * n * eps *
    /// lambda_max` flags the matrix as indefinite.
    pub clamp_scale: f64,
    /// Slack for exact-arithmetic majorization comparisons.
    pub majorization: f64,
    /// Slack (as a fraction of total weight) used when labeling empirical
    /// regime steps, where "approximately majorized" is the useful notion.
    pub regime: f64,
    /// Window below `log2 N` within which a window entropy counts as
    /// saturated.
    pub saturation: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rank_scale: 1.0,
            clamp_scale: 64.0,
            majorization: 1e-10,
            regime: 1e-3,
            saturation: 1e-6,
        }
    }
}

impl Tolerances {
    /// Threshold below which eigenvalues do not count towards the rank.
    pub fn rank_floor(&self, n: usize, lambda_max: f64) -> f64 {
        self.rank_scale * n as f64 * f64::EPSILON * lambda_max
    }

    /// Most-negative eigenvalue tolerated (and clamped) before the matrix
    /// is reported as indefinite.
    pub fn clamp_floor(&self, n: usize, lambda_max: f64) -> f64 {
        self.clamp_scale * n as f64 * f64::EPSILON * lambda_max
    }
}
