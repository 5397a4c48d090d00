//! Entropy functionals over entanglement spectra, the purity closed form,
//! effective state counts, closed-form regime approximations and analytic
//! continuous-distribution values.
//!
//! Reported entropies default to bits so the effective state count is
//! `2^E`; the closed-form approximations return nats because their
//! derivations expand the natural logarithm. Conversion is explicit via
//! [`EntropyValue::in_base`].

use thiserror::Error;

use crate::coherent::AlphaSeries;
use crate::gram::{EntanglementSpectrum, OverlapMatrix};
use crate::util::kahan_sum;

/// Width of the `q -> 1` window treated as the von Neumann limit.
pub const VN_LIMIT_WINDOW: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum EntropyError {
    #[error("NonPositiveQ: Renyi order must be positive, got {0}")]
    NonPositiveQ(f64),
    #[error("NonPositiveSigma: width must be positive, got {0}")]
    NonPositiveSigma(f64),
    #[error("NonPositivePrice: logarithmic fluctuation requires positive values, got {0}")]
    NonPositivePrice(f64),
    #[error("EmptySeries: at least one value required")]
    EmptySeries,
    #[error("WrongBase: effective state count is defined for entropies in bits")]
    WrongBase,
}

/// Logarithm base an entropy is reported in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogBase {
    #[default]
    Bits,
    Nats,
}

impl LogBase {
    fn ln_of_base(self) -> f64 {
        match self {
            LogBase::Bits => std::f64::consts::LN_2,
            LogBase::Nats => 1.0,
        }
    }
}

/// Which functional produced a value: the von Neumann limit or a Rényi
/// order `q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EntropyOrder {
    VonNeumann,
    Renyi(f64),
}

/// A nonnegative entropy tagged with its base and order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyValue {
    pub value: f64,
    pub base: LogBase,
    pub order: EntropyOrder,
}

impl EntropyValue {
    pub fn in_base(&self, base: LogBase) -> EntropyValue {
        let value = self.value * self.base.ln_of_base() / base.ln_of_base();
        EntropyValue {
            value,
            base,
            order: self.order,
        }
    }
}

fn clamp_nonnegative(x: f64) -> f64 {
    debug_assert!(x > -1e-9, "entropy fell below zero: {x}");
    x.max(0.0)
}

/// `-(sum over positive weights) lambda log lambda`, with `0 log 0 = 0`.
pub fn von_neumann(spec: &EntanglementSpectrum, base: LogBase) -> EntropyValue {
    let nats = -kahan_sum(
        spec.lambdas()
            .iter()
            .filter(|&&l| l > 0.0)
            .map(|&l| l * l.ln()),
    );
    EntropyValue {
        value: clamp_nonnegative(nats) / base.ln_of_base(),
        base,
        order: EntropyOrder::VonNeumann,
    }
}

/// `(1 / (1 - q)) log sum lambda^q`. Orders within [`VN_LIMIT_WINDOW`] of
/// one fall back to the von Neumann limit.
pub fn renyi(
    spec: &EntanglementSpectrum,
    q: f64,
    base: LogBase,
) -> Result<EntropyValue, EntropyError> {
    if !q.is_finite() || q <= 0.0 {
        return Err(EntropyError::NonPositiveQ(q));
    }
    if (q - 1.0).abs() < VN_LIMIT_WINDOW {
        let mut v = von_neumann(spec, base);
        v.order = EntropyOrder::Renyi(q);
        return Ok(v);
    }
    let power_sum = kahan_sum(
        spec.lambdas()
            .iter()
            .filter(|&&l| l > 0.0)
            .map(|&l| l.powf(q)),
    );
    let nats = power_sum.ln() / (1.0 - q);
    Ok(EntropyValue {
        value: clamp_nonnegative(nats) / base.ln_of_base(),
        base,
        order: EntropyOrder::Renyi(q),
    })
}

/// `(1 - sum lambda^q) / (q - 1)`; the `q -> 1` limit is the von Neumann
/// entropy in nats. Related to the Rényi entropy of the same order by
/// `S_q^R = ln(1 - (q - 1) S_q) / (1 - q)`.
pub fn tsallis(spec: &EntanglementSpectrum, q: f64) -> Result<f64, EntropyError> {
    if !q.is_finite() || q <= 0.0 {
        return Err(EntropyError::NonPositiveQ(q));
    }
    if (q - 1.0).abs() < VN_LIMIT_WINDOW {
        return Ok(von_neumann(spec, LogBase::Nats).value);
    }
    let power_sum = kahan_sum(
        spec.lambdas()
            .iter()
            .filter(|&&l| l > 0.0)
            .map(|&l| l.powf(q)),
    );
    Ok(clamp_nonnegative((1.0 - power_sum) / (q - 1.0)))
}

/// Quadratic Rényi entropy straight from the purity: `-log Tr O^2`.
/// `O(N^2)`, no eigensolve, and equal to `renyi(spectrum(O), 2)` up to
/// roundoff.
pub fn renyi2_from_purity(o: &OverlapMatrix, base: LogBase) -> EntropyValue {
    let nats = -o.purity().ln();
    EntropyValue {
        value: clamp_nonnegative(nats) / base.ln_of_base(),
        base,
        order: EntropyOrder::Renyi(2.0),
    }
}

/// `2^E`: effective number of orthogonal states behind an entropy in bits.
pub fn effective_states(e: &EntropyValue) -> Result<f64, EntropyError> {
    if e.base != LogBase::Bits {
        return Err(EntropyError::WrongBase);
    }
    Ok(e.value.exp2())
}

/// Small-width closed form for the quadratic Rényi entropy (nats):
/// `ln N - (2/N) sum_{n<m} exp(-(a_n - a_m)^2)`.
///
/// The exponent is the squared overlap `(a_n - a_m)^2`, matching the
/// `Tr O^2` expansion the formula truncates. Valid when amplitudes are
/// pairwise well separated (separations of 3 or more); for overlapping
/// amplitudes the value is meaningless — the constant series yields
/// `ln N - (N - 1)`.
pub fn e2_small_sigma_approx(alphas: &AlphaSeries) -> f64 {
    let a = alphas.alphas();
    let n = a.len() as f64;
    let mut cross = 0.0;
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            let d = a[i] - a[j];
            cross += (-d * d).exp();
        }
    }
    n.ln() - 2.0 / n * cross
}

/// Large-width closed form (nats): `(2 / sigma^2) Var(p)`, the population
/// variance of the raw values. Equal to the pairwise form
/// `(2 / (N^2 sigma^2)) sum_{n<m} (p_n - p_m)^2` by algebraic identity.
pub fn e2_variance_approx(values: &[f64], sigma: f64) -> Result<f64, EntropyError> {
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(EntropyError::NonPositiveSigma(sigma));
    }
    if values.is_empty() {
        return Err(EntropyError::EmptySeries);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>() / n;
    Ok(2.0 / (sigma * sigma) * var)
}

/// Logarithmic fluctuation (nats): `(2 / (N^2 sigma^2)) sum_{n<m}
/// ln^2(p_n / p_m)`. The large-width limit of the quadratic Rényi entropy
/// of the log-price embedding.
pub fn e2_log_fluctuation(values: &[f64], sigma: f64) -> Result<f64, EntropyError> {
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(EntropyError::NonPositiveSigma(sigma));
    }
    if values.is_empty() {
        return Err(EntropyError::EmptySeries);
    }
    if let Some(&bad) = values.iter().find(|&&p| p <= 0.0) {
        return Err(EntropyError::NonPositivePrice(bad));
    }
    let n = values.len() as f64;
    let mut acc = 0.0;
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            let r = (values[i] / values[j]).ln();
            acc += r * r;
        }
    }
    Ok(2.0 / (n * n * sigma * sigma) * acc)
}

/// Continuous distributions with closed-form Rényi entropies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContinuousDistribution {
    Gaussian,
    Exponential,
}

/// Rényi entropy (nats) of a continuous distribution of scale `sigma`:
/// a `sigma`-independent constant plus `ln sigma`.
///
/// Gaussian: `(ln 2 pi + ln(q) / (q - 1)) / 2 + ln sigma`, tending to
/// `ln(2 pi e) / 2 + ln sigma` as `q -> 1`. Exponential: `ln(q) / (q - 1)
/// + ln sigma`, tending to `1 + ln sigma`.
pub fn renyi_analytic_continuous(
    dist: ContinuousDistribution,
    sigma: f64,
    q: f64,
) -> Result<f64, EntropyError> {
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(EntropyError::NonPositiveSigma(sigma));
    }
    if !q.is_finite() || q <= 0.0 {
        return Err(EntropyError::NonPositiveQ(q));
    }
    let q_term = if (q - 1.0).abs() < VN_LIMIT_WINDOW {
        1.0
    } else {
        q.ln() / (q - 1.0)
    };
    let constant = match dist {
        ContinuousDistribution::Gaussian => 0.5 * ((2.0 * std::f64::consts::PI).ln() + q_term),
        ContinuousDistribution::Exponential => q_term,
    };
    Ok(constant + sigma.ln())
}
