//! Majorization of entanglement spectra and evolution-regime labels.
//!
//! A sorted spectrum is majorized by another when every partial sum of the
//! first stays at or below the corresponding sum of the second; spectra of
//! different lengths are zero-padded first. Majorization orders *all*
//! Schur-concave entropies at once, which is what makes the step labels
//! universal: at a step where the grown spectrum is majorized by the old
//! one, every entropy rises (regime I); in the reverse direction every
//! entropy falls (regime II); incomparable spectra leave the direction
//! entropy-dependent (regime III).

use thiserror::Error;

use crate::gram::{EntanglementSpectrum, GramError};

#[derive(Debug, Error)]
pub enum MajorizationError {
    #[error("MismatchedLength: spectrum has {got} weights, step count says {expected}")]
    MismatchedLength { expected: usize, got: usize },
    #[error("InternalMajorizationViolation: extension failed its own ordering (slack {slack:e})")]
    InternalMajorizationViolation { slack: f64 },
    #[error("InvalidSpectrum: {0}")]
    Spectrum(#[from] GramError),
}

/// Cumulative sums of a descending spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialSums {
    sums: Vec<f64>,
}

impl PartialSums {
    pub fn sums(&self) -> &[f64] {
        &self.sums
    }

    /// `Sigma_l` for a 1-based `l`, clamped to the final (unit) sum past
    /// the end.
    pub fn at(&self, l: usize) -> f64 {
        assert!(l >= 1, "partial sums are 1-based");
        self.sums[l.min(self.sums.len()) - 1]
    }
}

/// Running sums `Sigma_l = lambda_1 + ... + lambda_l`.
pub fn partial_sums(spec: &EntanglementSpectrum) -> PartialSums {
    let mut acc = 0.0;
    let sums = spec
        .lambdas()
        .iter()
        .map(|l| {
            acc += l;
            acc
        })
        .collect();
    PartialSums { sums }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MajorizationRelation {
    /// First spectrum is majorized by the second (first is more mixed).
    FirstMajorizedBySecond,
    /// Second spectrum is majorized by the first.
    SecondMajorizedByFirst,
    /// Both directions hold: the spectra agree within tolerance.
    Equal,
    /// Neither direction holds.
    Incomparable,
}

/// Outcome of a majorization comparison. `slack` is the minimal signed
/// margin over all partial sums for the reported relation: positive means
/// the relation held with room, negative (within tolerance, or for
/// `Incomparable` the least-violated direction) means it held only by
/// slack.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MajorizationVerdict {
    pub relation: MajorizationRelation,
    pub slack: f64,
}

/// Compares two spectra under the partial-sum criterion with slack `tol`.
/// The shorter spectrum is zero-padded; totals are both one by the
/// spectrum invariant, so only the first `n - 1` sums are decisive.
pub fn compare(
    a: &EntanglementSpectrum,
    b: &EntanglementSpectrum,
    tol: f64,
) -> MajorizationVerdict {
    let n = a.len().max(b.len());
    let at = |s: &EntanglementSpectrum, i: usize| s.lambdas().get(i).copied().unwrap_or(0.0);
    let mut cum_a = 0.0;
    let mut cum_b = 0.0;
    let mut fwd = f64::INFINITY;
    let mut bwd = f64::INFINITY;
    for i in 0..n.saturating_sub(1) {
        cum_a += at(a, i);
        cum_b += at(b, i);
        fwd = fwd.min(cum_b - cum_a);
        bwd = bwd.min(cum_a - cum_b);
    }
    if !fwd.is_finite() {
        // single-weight spectra: both are exactly (1)
        return MajorizationVerdict {
            relation: MajorizationRelation::Equal,
            slack: 0.0,
        };
    }
    let a_prec_b = fwd >= -tol;
    let b_prec_a = bwd >= -tol;
    let (relation, slack) = match (a_prec_b, b_prec_a) {
        (true, true) => (MajorizationRelation::Equal, fwd.min(bwd)),
        (true, false) => (MajorizationRelation::FirstMajorizedBySecond, fwd),
        (false, true) => (MajorizationRelation::SecondMajorizedByFirst, bwd),
        (false, false) => (MajorizationRelation::Incomparable, fwd.max(bwd)),
    };
    MajorizationVerdict { relation, slack }
}

/// Spectrum after appending one state orthogonal to the whole history:
/// the old weights shrink by `n / (n + 1)` and a fresh weight `1 / (n +
/// 1)` joins. The result is always majorized by the input; that ordering
/// is re-checked and a failure reported as an internal arithmetic bug.
pub fn extend_orthogonal(
    spec: &EntanglementSpectrum,
    n: usize,
) -> Result<EntanglementSpectrum, MajorizationError> {
    if n != spec.len() {
        return Err(MajorizationError::MismatchedLength {
            expected: n,
            got: spec.len(),
        });
    }
    let shrink = n as f64 / (n as f64 + 1.0);
    let fresh = 1.0 / (n as f64 + 1.0);
    let mut lambdas: Vec<f64> = spec.lambdas().iter().map(|l| l * shrink).collect();
    let at = lambdas.partition_point(|&l| l >= fresh);
    lambdas.insert(at, fresh);
    let extended = EntanglementSpectrum::from_lambdas(lambdas)?;
    let verdict = compare(&extended, spec, 1e-12);
    match verdict.relation {
        MajorizationRelation::FirstMajorizedBySecond | MajorizationRelation::Equal => Ok(extended),
        _ => Err(MajorizationError::InternalMajorizationViolation {
            slack: verdict.slack,
        }),
    }
}

/// Evolution regime of one growth step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    I,
    II,
    III,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Regime::I => write!(f, "I"),
            Regime::II => write!(f, "II"),
            Regime::III => write!(f, "III"),
        }
    }
}

/// Regime of a step plus whether it holds with zero slack (`strict`) or
/// only within the labeling tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegimeLabel {
    pub label: Regime,
    pub strict: bool,
}

fn relation_to_regime(relation: MajorizationRelation) -> Regime {
    match relation {
        MajorizationRelation::FirstMajorizedBySecond => Regime::I,
        MajorizationRelation::SecondMajorizedByFirst => Regime::II,
        // Equal spectra support both directions; claiming either universal
        // label would overstate, so ties fall to III.
        MajorizationRelation::Equal | MajorizationRelation::Incomparable => Regime::III,
    }
}

/// Labels the step from the `N`-point spectrum to the `N+1`-point one.
/// Regime I: the new spectrum is majorized by the old (universal entropy
/// increase). Regime II: the reverse (universal decrease). Regime III:
/// neither.
pub fn classify_step(
    spec_n: &EntanglementSpectrum,
    spec_n1: &EntanglementSpectrum,
    tol: f64,
) -> RegimeLabel {
    let label = relation_to_regime(compare(spec_n1, spec_n, tol).relation);
    let strict = relation_to_regime(compare(spec_n1, spec_n, 0.0).relation) == label;
    RegimeLabel { label, strict }
}

/// Convenience wrapper asserting the exact-arithmetic default slack.
pub fn majorizes(winner: &EntanglementSpectrum, loser: &EntanglementSpectrum, tol: f64) -> bool {
    matches!(
        compare(loser, winner, tol).relation,
        MajorizationRelation::FirstMajorizedBySecond | MajorizationRelation::Equal
    )
}
