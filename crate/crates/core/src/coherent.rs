//! Coherent-state embedding of series values and pairwise overlap kernels.
//!
//! A value `p` becomes the amplitude `p / sigma` (or `ln(p / p0) / sigma`
//! in log mode), and two amplitudes overlap as `exp(-(a - b)^2 / 2)`. The
//! width `sigma` is the distinguishability threshold: values a full width
//! apart overlap by roughly 0.6, values many widths apart are effectively
//! orthogonal.

use num_complex::Complex64;
use thiserror::Error;

use crate::timeseries::PriceSeries;

/// Overlaps below this magnitude are flushed to exact zero; the states are
/// numerically orthogonal.
pub const UNDERFLOW_FLUSH: f64 = 1e-300;

#[derive(Debug, Error, PartialEq)]
pub enum CoherentError {
    #[error("EmptySeries: embedding requires at least one value")]
    EmptySeries,
    #[error("NonPositiveSigma: width must be positive, got {0}")]
    NonPositiveSigma(f64),
    #[error("NonPositivePrice: log-price mode requires positive values, got {0}")]
    NonPositivePrice(f64),
    #[error("NonFiniteInput: amplitudes must be finite")]
    NonFiniteInput,
    #[error("NonPositiveExponent: kernel exponent must be positive, got {0}")]
    NonPositiveExponent(f64),
}

/// How raw values map to amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EmbeddingMode {
    /// `alpha = p / sigma`.
    #[default]
    Raw,
    /// `alpha = ln(p / p0) / sigma` with `p0` the first value of the
    /// window. Overlaps depend only on ratios, so the choice of `p0`
    /// cancels; pinning it to the first value keeps runs deterministic.
    LogPrice,
}

/// Embedding parameters: width in value units (log-units in log mode) and
/// the amplitude map.
#[derive(Debug, Clone, Copy)]
pub struct EmbeddingConfig {
    pub sigma: f64,
    pub mode: EmbeddingMode,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig {
            sigma: 1.0,
            mode: EmbeddingMode::Raw,
        }
    }
}

/// A sequence of coherent-state amplitudes together with the scale that
/// produced them. Guaranteed non-empty, finite, with positive sigma.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaSeries {
    alphas: Vec<f64>,
    sigma: f64,
    mode: EmbeddingMode,
}

impl AlphaSeries {
    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn mode(&self) -> EmbeddingMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// First `n` amplitudes as their own series (`1 <= n <= len`).
    pub fn prefix(&self, n: usize) -> AlphaSeries {
        assert!(
            n >= 1 && n <= self.alphas.len(),
            "prefix length out of range"
        );
        AlphaSeries {
            alphas: self.alphas[..n].to_vec(),
            sigma: self.sigma,
            mode: self.mode,
        }
    }

    /// Smallest pairwise amplitude separation; the small-overlap closed
    /// form is trustworthy when this is at least a few units.
    pub fn min_pairwise_separation(&self) -> f64 {
        let mut sorted = self.alphas.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        sorted
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }
}

/// Maps a dated series to amplitudes.
pub fn embed(series: &PriceSeries, config: &EmbeddingConfig) -> Result<AlphaSeries, CoherentError> {
    embed_values(&series.values(), config)
}

/// Maps raw values to amplitudes; the log-mode reference `p0` is the first
/// value of the slice.
pub fn embed_values(
    values: &[f64],
    config: &EmbeddingConfig,
) -> Result<AlphaSeries, CoherentError> {
    if values.is_empty() {
        return Err(CoherentError::EmptySeries);
    }
    if !config.sigma.is_finite() || config.sigma <= 0.0 {
        return Err(CoherentError::NonPositiveSigma(config.sigma));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(CoherentError::NonFiniteInput);
    }
    let alphas = match config.mode {
        EmbeddingMode::Raw => values.iter().map(|p| p / config.sigma).collect(),
        EmbeddingMode::LogPrice => {
            if let Some(&bad) = values.iter().find(|&&p| p <= 0.0) {
                return Err(CoherentError::NonPositivePrice(bad));
            }
            let p0 = values[0];
            values
                .iter()
                .map(|p| (p / p0).ln() / config.sigma)
                .collect()
        }
    };
    Ok(AlphaSeries {
        alphas,
        sigma: config.sigma,
        mode: config.mode,
    })
}

#[inline]
pub(crate) fn gaussian_overlap(a: f64, b: f64) -> f64 {
    let d = a - b;
    let v = (-0.5 * d * d).exp();
    if v < UNDERFLOW_FLUSH {
        0.0
    } else {
        v
    }
}

/// Overlap `exp(-(a-b)^2 / 2)` of two real-amplitude coherent states.
/// Symmetric, equal to one exactly when the amplitudes coincide, strictly
/// decreasing in `|a - b|`.
pub fn overlap_real(a: f64, b: f64) -> Result<f64, CoherentError> {
    if !a.is_finite() || !b.is_finite() {
        return Err(CoherentError::NonFiniteInput);
    }
    Ok(gaussian_overlap(a, b))
}

/// Overlap `exp(-(|a|^2 + |b|^2 - 2 a conj(b)) / 2)` of two complex
/// amplitudes; its magnitude is `exp(-|a-b|^2 / 2)` and it reduces to
/// [`overlap_real`] on the real axis.
pub fn overlap_complex(a: Complex64, b: Complex64) -> Result<Complex64, CoherentError> {
    if !a.re.is_finite() || !a.im.is_finite() || !b.re.is_finite() || !b.im.is_finite() {
        return Err(CoherentError::NonFiniteInput);
    }
    let exponent = -(a.norm_sqr() + b.norm_sqr() - 2.0 * a * b.conj()) / 2.0;
    let v = exponent.exp();
    if v.norm() < UNDERFLOW_FLUSH {
        Ok(Complex64::new(0.0, 0.0))
    } else {
        Ok(v)
    }
}

/// Generalized kernel `exp(-|a-b|^p / 2)`. Diagnostic only: for `p == 2`
/// this is [`overlap_real`] and the resulting matrices are Gram matrices,
/// but for `p > 2` positive semidefiniteness fails on suitable point sets.
pub fn kernel_p(a: f64, b: f64, p: f64) -> Result<f64, CoherentError> {
    if !p.is_finite() || p <= 0.0 {
        return Err(CoherentError::NonPositiveExponent(p));
    }
    if !a.is_finite() || !b.is_finite() {
        return Err(CoherentError::NonFiniteInput);
    }
    let v = (-(a - b).abs().powf(p) / 2.0).exp();
    Ok(if v < UNDERFLOW_FLUSH { 0.0 } else { v })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::{self, SymMatrix};
    use rand::{Rng, SeedableRng};

    fn raw(sigma: f64) -> EmbeddingConfig {
        EmbeddingConfig {
            sigma,
            mode: EmbeddingMode::Raw,
        }
    }

    fn log_mode(sigma: f64) -> EmbeddingConfig {
        EmbeddingConfig {
            sigma,
            mode: EmbeddingMode::LogPrice,
        }
    }

    #[test]
    fn embed_raw_identity_scaling() {
        let a = embed_values(&[2.0, 3.0], &raw(1.0)).unwrap();
        assert_eq!(a.alphas(), &[2.0, 3.0]);
    }

    #[test]
    fn embed_raw_linear_scaling() {
        let a = embed_values(&[100.0, 101.0], &raw(2.0)).unwrap();
        assert_eq!(a.alphas(), &[50.0, 50.5]);
    }

    #[test]
    fn embed_log_exact_powers() {
        let e = std::f64::consts::E;
        let a = embed_values(&[1.0, e, e * e], &log_mode(1.0)).unwrap();
        assert!((a.alphas()[0]).abs() < 1e-15);
        assert!((a.alphas()[1] - 1.0).abs() < 1e-15);
        assert!((a.alphas()[2] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn embed_errors() {
        assert_eq!(
            embed_values(&[], &raw(1.0)).unwrap_err(),
            CoherentError::EmptySeries
        );
        assert_eq!(
            embed_values(&[1.0], &raw(0.0)).unwrap_err(),
            CoherentError::NonPositiveSigma(0.0)
        );
        assert_eq!(
            embed_values(&[1.0, -2.0], &log_mode(1.0)).unwrap_err(),
            CoherentError::NonPositivePrice(-2.0)
        );
        assert_eq!(
            embed_values(&[f64::NAN], &raw(1.0)).unwrap_err(),
            CoherentError::NonFiniteInput
        );
    }

    #[test]
    fn overlap_real_examples() {
        assert_eq!(overlap_real(1.7, 1.7).unwrap(), 1.0);
        // one width of separation: exp(-1/2)
        assert!((overlap_real(3.0, 4.0).unwrap() - 0.6065306597126334).abs() < 1e-15);
        assert!((overlap_real(0.0, 2.0).unwrap() - 0.1353352832366127).abs() < 1e-15);
        assert!(overlap_real(f64::INFINITY, 0.0).is_err());
    }

    #[test]
    fn overlap_symmetry_and_decay() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for _ in 0..200 {
            let a = rng.random_range(-20.0..20.0);
            let b = rng.random_range(-20.0..20.0);
            assert_eq!(overlap_real(a, b).unwrap(), overlap_real(b, a).unwrap());
        }
        // strictly decreasing in |a - b|
        let mut prev = 1.0;
        for step in 1..200 {
            let d = step as f64 * 0.1;
            let v = overlap_real(0.0, d).unwrap();
            assert!(v < prev, "overlap must strictly decay, d={d}");
            prev = v;
            if v == 0.0 {
                break;
            }
        }
    }

    #[test]
    fn overlap_underflow_flush() {
        // separation 40 gives exp(-800), far below the flush threshold
        assert_eq!(overlap_real(0.0, 40.0).unwrap(), 0.0);
    }

    #[test]
    fn overlap_complex_examples() {
        let z = Complex64::new(0.3, -1.2);
        let one = overlap_complex(z, z).unwrap();
        assert!((one.re - 1.0).abs() < 1e-15 && one.im.abs() < 1e-15);

        // real axis agrees with overlap_real
        let a = Complex64::new(1.25, 0.0);
        let b = Complex64::new(-0.5, 0.0);
        let c = overlap_complex(a, b).unwrap();
        assert!((c.re - overlap_real(1.25, -0.5).unwrap()).abs() < 1e-15);
        assert!(c.im.abs() < 1e-16);

        // (0, i) -> exp(-1/2), real
        let v = overlap_complex(Complex64::new(0.0, 0.0), Complex64::new(0.0, 1.0)).unwrap();
        assert!((v.re - 0.6065306597126334).abs() < 1e-15);
        assert!(v.im.abs() < 1e-16);
    }

    #[test]
    fn overlap_complex_magnitude_law() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(13);
        for _ in 0..500 {
            let a = Complex64::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
            let b = Complex64::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
            let v = overlap_complex(a, b).unwrap();
            let want = (-(a - b).norm_sqr() / 2.0).exp();
            assert!((v.norm() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn log_mode_reference_cancels() {
        // Scaling every price rescales p0 identically, so amplitudes shift
        // by a constant and every pairwise overlap is unchanged.
        let prices = [95.2, 103.4, 99.9, 101.7, 84.3];
        let scaled: Vec<f64> = prices.iter().map(|p| p * 7.31).collect();
        let a = embed_values(&prices, &log_mode(0.7)).unwrap();
        let b = embed_values(&scaled, &log_mode(0.7)).unwrap();
        for i in 0..prices.len() {
            for j in 0..prices.len() {
                let oa = gaussian_overlap(a.alphas()[i], a.alphas()[j]);
                let ob = gaussian_overlap(b.alphas()[i], b.alphas()[j]);
                assert!((oa - ob).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn kernel_p_examples() {
        // p = 2 is the Gaussian overlap
        assert_eq!(
            kernel_p(1.3, -0.4, 2.0).unwrap(),
            overlap_real(1.3, -0.4).unwrap()
        );
        // |0-1|^4 = 1 -> exp(-1/2)
        assert!((kernel_p(0.0, 1.0, 4.0).unwrap() - 0.6065306597126334).abs() < 1e-15);
        assert_eq!(kernel_p(0.77, 0.77, 3.3).unwrap(), 1.0);
        assert_eq!(
            kernel_p(0.0, 1.0, 0.0).unwrap_err(),
            CoherentError::NonPositiveExponent(0.0)
        );
    }

    #[test]
    fn kernel_p4_positive_semidefiniteness_fails() {
        // Regression fixture found by randomized search: four equally
        // spaced points already produce a decisively negative eigenvalue
        // for the p = 4 kernel.
        let pts = [0.0, 0.3, 0.6, 0.9];
        let m = SymMatrix::from_fn(pts.len(), |i, j| kernel_p(pts[i], pts[j], 4.0).unwrap());
        let w = eigen::eigenvalues(&m).unwrap();
        let min = w.last().copied().unwrap();
        assert!(min < -1e-6, "expected indefinite kernel, min eig {min}");
        assert!((min - (-0.07997658810121996)).abs() < 1e-9);
    }

    #[test]
    fn prefix_and_separation() {
        let a = embed_values(&[0.0, 5.0, 1.0], &raw(1.0)).unwrap();
        let p = a.prefix(2);
        assert_eq!(p.alphas(), &[0.0, 5.0]);
        assert!((a.min_pairwise_separation() - 1.0).abs() < 1e-15);
    }
}
