//! Normalized overlap (Gram) matrices and their entanglement spectra.
//!
//! For amplitudes `alpha_1..alpha_N` the matrix entry `(n, m)` is
//! `exp(-(alpha_n - alpha_m)^2 / 2) / N`: symmetric, positive
//! semidefinite, unit trace. Its eigenvalues — the entanglement spectrum —
//! are the occupation weights of the orthogonal states effectively visited
//! by the series; its rank counts the linearly independent ones.

use thiserror::Error;

use crate::coherent::{gaussian_overlap, AlphaSeries};
use crate::eigen::{self, EigenError, SymMatrix};
use crate::tolerances::Tolerances;
use crate::util::kahan_sum;

#[derive(Debug, Error)]
pub enum GramError {
    #[error("IndefiniteMatrix: eigenvalue {min_eigenvalue:e} below -{floor:e}; not a Gram matrix")]
    Indefinite { min_eigenvalue: f64, floor: f64 },
    #[error("Eigensolver: {0}")]
    Eigensolver(#[from] EigenError),
    #[error("InvalidEntries: {0}")]
    InvalidEntries(String),
    #[error("InvalidSpectrum: {0}")]
    InvalidSpectrum(String),
}

/// Unit-trace Gram matrix of the embedded states.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl OverlapMatrix {
    /// Builds the normalized overlap matrix of an amplitude series.
    pub fn build(alphas: &AlphaSeries) -> OverlapMatrix {
        let a = alphas.alphas();
        let n = a.len();
        let inv_n = 1.0 / n as f64;
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            entries[i * n + i] = inv_n;
            for j in i + 1..n {
                let v = gaussian_overlap(a[i], a[j]) * inv_n;
                entries[i * n + j] = v;
                entries[j * n + i] = v;
            }
        }
        OverlapMatrix { n, entries }
    }

    /// Wraps raw entries after checking the cheap structural invariants:
    /// shape, symmetry, `1/N` diagonal, unit trace. Positive
    /// semidefiniteness is only decidable spectrally and is enforced by
    /// [`spectrum`].
    pub fn from_entries(n: usize, entries: Vec<f64>) -> Result<OverlapMatrix, GramError> {
        if n == 0 || entries.len() != n * n {
            return Err(GramError::InvalidEntries(format!(
                "expected {n}x{n} entries, got {}",
                entries.len()
            )));
        }
        let inv_n = 1.0 / n as f64;
        let mut trace = 0.0;
        for i in 0..n {
            let d = entries[i * n + i];
            if (d - inv_n).abs() > 1e-12 {
                return Err(GramError::InvalidEntries(format!(
                    "diagonal entry {i} is {d}, expected 1/N = {inv_n}"
                )));
            }
            trace += d;
            for j in i + 1..n {
                if (entries[i * n + j] - entries[j * n + i]).abs() > 1e-14 {
                    return Err(GramError::InvalidEntries(format!(
                        "entries ({i},{j}) and ({j},{i}) differ"
                    )));
                }
            }
        }
        if (trace - 1.0).abs() > 1e-12 {
            return Err(GramError::InvalidEntries(format!(
                "trace is {trace}, expected 1"
            )));
        }
        Ok(OverlapMatrix { n, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// `Tr O^2`, the purity of the reduced state: the compensated sum of
    /// squared entries. `O(N^2)`, no eigensolve; equals the sum of squared
    /// spectrum weights.
    pub fn purity(&self) -> f64 {
        kahan_sum(self.entries.iter().map(|e| e * e))
    }

    fn to_sym(&self) -> SymMatrix {
        SymMatrix::from_entries(self.n, self.entries.clone())
    }
}

/// Descending nonnegative eigenvalues of an overlap matrix, summing to one,
/// with the numerical rank.
#[derive(Debug, Clone, PartialEq)]
pub struct EntanglementSpectrum {
    lambdas: Vec<f64>,
    rank: usize,
}

impl EntanglementSpectrum {
    /// Validates a hand-built spectrum: non-empty, non-increasing,
    /// nonnegative, total weight one.
    pub fn from_lambdas(lambdas: Vec<f64>) -> Result<EntanglementSpectrum, GramError> {
        if lambdas.is_empty() {
            return Err(GramError::InvalidSpectrum("empty spectrum".into()));
        }
        if lambdas.iter().any(|l| !l.is_finite() || *l < 0.0) {
            return Err(GramError::InvalidSpectrum(
                "weights must be finite and nonnegative".into(),
            ));
        }
        if lambdas.windows(2).any(|w| w[1] > w[0]) {
            return Err(GramError::InvalidSpectrum(
                "weights must be sorted in descending order".into(),
            ));
        }
        let total: f64 = kahan_sum(lambdas.iter().copied());
        if (total - 1.0).abs() > 1e-10 {
            return Err(GramError::InvalidSpectrum(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        let floor = Tolerances::default().rank_floor(lambdas.len(), lambdas[0]);
        let rank = lambdas.iter().filter(|&&l| l > floor).count().max(1);
        Ok(EntanglementSpectrum { lambdas, rank })
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Clamps eigensolver output into a valid spectrum. Values inside the
/// negative roundoff window become zero; anything below it means the input
/// was not a Gram matrix.
fn clamp_spectrum(
    mut values: Vec<f64>,
    n: usize,
    tol: &Tolerances,
) -> Result<(Vec<f64>, usize), GramError> {
    let lambda_max = values[0];
    if lambda_max <= 0.0 {
        return Err(GramError::Indefinite {
            min_eigenvalue: *values.last().unwrap(),
            floor: 0.0,
        });
    }
    let clamp_floor = tol.clamp_floor(n, lambda_max);
    let min = *values.last().unwrap();
    if min < -clamp_floor {
        return Err(GramError::Indefinite {
            min_eigenvalue: min,
            floor: clamp_floor,
        });
    }
    for v in values.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let rank_floor = tol.rank_floor(n, lambda_max);
    let rank = values.iter().filter(|&&l| l > rank_floor).count().max(1);
    Ok((values, rank))
}

/// Entanglement spectrum of an overlap matrix: eigenvalues sorted
/// descending, negatives inside the roundoff window clamped to zero, rank
/// counted above the rank floor.
pub fn spectrum(o: &OverlapMatrix, tol: &Tolerances) -> Result<EntanglementSpectrum, GramError> {
    if o.n == 1 {
        return Ok(EntanglementSpectrum {
            lambdas: vec![1.0],
            rank: 1,
        });
    }
    let values = eigen::eigenvalues(&o.to_sym())?;
    let (lambdas, rank) = clamp_spectrum(values, o.n, tol)?;
    Ok(EntanglementSpectrum { lambdas, rank })
}

/// Orthonormal clock-side Schmidt vectors paired with the spectrum. Only
/// the `rank` vectors carrying weight are kept.
#[derive(Debug, Clone)]
pub struct SchmidtClockBasis {
    pub weights: EntanglementSpectrum,
    pub vectors: Vec<Vec<f64>>,
}

/// Eigenvectors of the overlap matrix for the nonzero part of the
/// spectrum.
///
/// Sign convention: the first component of each vector above 1e-12 in
/// magnitude is made positive, so repeated runs and both eigensolver
/// routes agree outside degenerate subspaces.
pub fn schmidt_clock_basis(
    o: &OverlapMatrix,
    tol: &Tolerances,
) -> Result<SchmidtClockBasis, GramError> {
    if o.n == 1 {
        return Ok(SchmidtClockBasis {
            weights: EntanglementSpectrum {
                lambdas: vec![1.0],
                rank: 1,
            },
            vectors: vec![vec![1.0]],
        });
    }
    let dec = eigen::decompose(&o.to_sym())?;
    let (lambdas, rank) = clamp_spectrum(dec.values, o.n, tol)?;
    let mut vectors: Vec<Vec<f64>> = dec.vectors.into_iter().take(rank).collect();
    for v in vectors.iter_mut() {
        if let Some(lead) = v.iter().find(|x| x.abs() > 1e-12) {
            if *lead < 0.0 {
                for x in v.iter_mut() {
                    *x = -*x;
                }
            }
        }
    }
    Ok(SchmidtClockBasis {
        weights: EntanglementSpectrum { lambdas, rank },
        vectors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coherent::{embed_values, kernel_p, EmbeddingConfig, EmbeddingMode};
    use rand::{Rng, SeedableRng};

    fn raw_embed(values: &[f64]) -> AlphaSeries {
        embed_values(
            values,
            &EmbeddingConfig {
                sigma: 1.0,
                mode: EmbeddingMode::Raw,
            },
        )
        .unwrap()
    }

    /// Closed-form eigenvalues of a symmetric 3x3 matrix via the
    /// trigonometric cubic; independent of both solver routes.
    fn analytic_eigs_3x3(a: &[[f64; 3]; 3]) -> [f64; 3] {
        let p1 = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
        let q = (a[0][0] + a[1][1] + a[2][2]) / 3.0;
        let p2 = (a[0][0] - q).powi(2) + (a[1][1] - q).powi(2) + (a[2][2] - q).powi(2) + 2.0 * p1;
        let p = (p2 / 6.0).sqrt();
        let b = |i: usize, j: usize| (a[i][j] - if i == j { q } else { 0.0 }) / p;
        let detb = b(0, 0) * (b(1, 1) * b(2, 2) - b(1, 2) * b(2, 1))
            - b(0, 1) * (b(1, 0) * b(2, 2) - b(1, 2) * b(2, 0))
            + b(0, 2) * (b(1, 0) * b(2, 1) - b(1, 1) * b(2, 0));
        let r = (detb / 2.0).clamp(-1.0, 1.0);
        let phi = r.acos() / 3.0;
        let e1 = q + 2.0 * p * phi.cos();
        let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
        let e2 = 3.0 * q - e1 - e3;
        [e1, e2, e3]
    }

    #[test]
    fn build_coincident_pair() {
        let o = OverlapMatrix::build(&raw_embed(&[7.0, 7.0]));
        assert_eq!(o.entries(), &[0.5, 0.5, 0.5, 0.5]);
    }

    #[test]
    fn build_unit_separation_pair() {
        let o = OverlapMatrix::build(&raw_embed(&[3.0, 4.0]));
        assert!((o.get(0, 1) - 0.3032653298563167).abs() < 1e-15);
        assert_eq!(o.get(0, 0), 0.5);
    }

    #[test]
    fn trace_is_one() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        for _ in 0..20 {
            let n = rng.random_range(1..40);
            let vals: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
            let o = OverlapMatrix::build(&raw_embed(&vals));
            let trace: f64 = (0..n).map(|i| o.get(i, i)).sum();
            assert!((trace - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn spectrum_constant_series() {
        let o = OverlapMatrix::build(&raw_embed(&[5.0; 4]));
        let s = spectrum(&o, &Tolerances::default()).unwrap();
        assert!((s.lambdas()[0] - 1.0).abs() < 1e-12);
        for l in &s.lambdas()[1..] {
            assert!(l.abs() < 1e-12);
        }
        assert_eq!(s.rank(), 1);
    }

    #[test]
    fn spectrum_two_far_clusters() {
        // multiplicities (3, 1), separation >= 12: weights are l_m / N
        let o = OverlapMatrix::build(&raw_embed(&[0.0, 0.0, 0.0, 50.0]));
        let s = spectrum(&o, &Tolerances::default()).unwrap();
        assert!((s.lambdas()[0] - 0.75).abs() < 1e-12);
        assert!((s.lambdas()[1] - 0.25).abs() < 1e-12);
        assert_eq!(s.rank(), 2);
    }

    #[test]
    fn spectrum_three_amplitudes_vs_oracles() {
        let o = OverlapMatrix::build(&raw_embed(&[0.0, 1.0, 2.0]));
        let s = spectrum(&o, &Tolerances::default()).unwrap();

        // frozen values from a high-precision independent eigensolver
        let frozen = [0.6426988278571965, 0.2882215722544624, 0.06907959988834088];
        for (got, want) in s.lambdas().iter().zip(&frozen) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }

        // closed-form cubic oracle evaluated in place
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = o.get(i, j);
            }
        }
        let analytic = analytic_eigs_3x3(&m);
        for (got, want) in s.lambdas().iter().zip(&analytic) {
            assert!((got - want).abs() < 1e-12, "{got} vs analytic {want}");
        }
        assert_eq!(s.rank(), 3);
    }

    #[test]
    fn spectrum_single_point() {
        let o = OverlapMatrix::build(&raw_embed(&[42.0]));
        let s = spectrum(&o, &Tolerances::default()).unwrap();
        assert_eq!(s.lambdas(), &[1.0]);
        assert_eq!(s.rank(), 1);
    }

    #[test]
    fn purity_examples() {
        let constant = OverlapMatrix::build(&raw_embed(&[2.0; 5]));
        assert!((constant.purity() - 1.0).abs() < 1e-12);

        let far: Vec<f64> = (0..6).map(|i| i as f64 * 20.0).collect();
        let mixed = OverlapMatrix::build(&raw_embed(&far));
        assert!((mixed.purity() - 1.0 / 6.0).abs() < 1e-12);

        let block = OverlapMatrix::build(&raw_embed(&[0.0, 0.0, 0.0, 50.0]));
        assert!((block.purity() - 0.625).abs() < 1e-12);
    }

    #[test]
    fn purity_matches_spectrum_squares() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(17);
        for _ in 0..30 {
            let n = rng.random_range(2..48);
            let vals: Vec<f64> = (0..n).map(|_| rng.random_range(-8.0..8.0)).collect();
            let o = OverlapMatrix::build(&raw_embed(&vals));
            let s = spectrum(&o, &Tolerances::default()).unwrap();
            let sum_sq: f64 = s.lambdas().iter().map(|l| l * l).sum();
            assert!((o.purity() - sum_sq).abs() < 1e-10);
        }
    }

    #[test]
    fn psd_on_random_amplitudes() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(23);
        for _ in 0..100 {
            let n = rng.random_range(1..=64);
            let vals: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
            let o = OverlapMatrix::build(&raw_embed(&vals));
            let values = eigen::eigenvalues(&o.to_sym()).unwrap();
            assert!(
                *values.last().unwrap() >= -1e-10,
                "negative eigenvalue on a Gram matrix"
            );
        }
    }

    #[test]
    fn rank_counts_distinct_states() {
        // pairwise separations >= 12: full rank
        let far: Vec<f64> = (0..7).map(|i| i as f64 * 12.0).collect();
        let o = OverlapMatrix::build(&raw_embed(&far));
        assert_eq!(spectrum(&o, &Tolerances::default()).unwrap().rank(), 7);

        // three coincident values drop the rank by exactly two
        let mut vals = far.clone();
        vals[1] = vals[0];
        vals[2] = vals[0];
        let o = OverlapMatrix::build(&raw_embed(&vals));
        assert_eq!(spectrum(&o, &Tolerances::default()).unwrap().rank(), 5);
    }

    #[test]
    fn indefinite_input_is_reported() {
        // p = 4 kernel on an equally spaced grid, normalized to unit trace:
        // structurally a valid overlap matrix but not positive
        // semidefinite.
        let pts = [0.0, 0.3, 0.6, 0.9];
        let n = pts.len();
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                entries[i * n + j] = kernel_p(pts[i], pts[j], 4.0).unwrap() / n as f64;
            }
        }
        let o = OverlapMatrix::from_entries(n, entries).unwrap();
        match spectrum(&o, &Tolerances::default()) {
            Err(GramError::Indefinite { min_eigenvalue, .. }) => {
                assert!((min_eigenvalue - (-0.01999414702530499)).abs() < 1e-9);
            }
            other => panic!("expected Indefinite, got {other:?}"),
        }
    }

    #[test]
    fn from_entries_validates_structure() {
        assert!(OverlapMatrix::from_entries(2, vec![0.5, 0.1, 0.2, 0.5]).is_err());
        assert!(OverlapMatrix::from_entries(2, vec![0.6, 0.1, 0.1, 0.4]).is_err());
        assert!(OverlapMatrix::from_entries(2, vec![0.5, 0.1, 0.1]).is_err());
        assert!(OverlapMatrix::from_entries(2, vec![0.5, 0.1, 0.1, 0.5]).is_ok());
    }

    #[test]
    fn schmidt_constant_series() {
        let o = OverlapMatrix::build(&raw_embed(&[3.0; 4]));
        let basis = schmidt_clock_basis(&o, &Tolerances::default()).unwrap();
        assert_eq!(basis.weights.rank(), 1);
        assert_eq!(basis.vectors.len(), 1);
        for c in &basis.vectors[0] {
            assert!((c - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn schmidt_cluster_support() {
        let o = OverlapMatrix::build(&raw_embed(&[0.0, 0.0, 0.0, 50.0]));
        let basis = schmidt_clock_basis(&o, &Tolerances::default()).unwrap();
        let inv_sqrt3 = 1.0 / 3.0f64.sqrt();
        for c in &basis.vectors[0][..3] {
            assert!((c - inv_sqrt3).abs() < 1e-10);
        }
        assert!(basis.vectors[0][3].abs() < 1e-10);
        for c in &basis.vectors[1][..3] {
            assert!(c.abs() < 1e-10);
        }
        assert!((basis.vectors[1][3] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn schmidt_reconstructs_matrix() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(29);
        for _ in 0..15 {
            let n = rng.random_range(2..=64);
            let vals: Vec<f64> = (0..n).map(|_| rng.random_range(-6.0..6.0)).collect();
            let o = OverlapMatrix::build(&raw_embed(&vals));
            let basis = schmidt_clock_basis(&o, &Tolerances::default()).unwrap();
            let mut worst = 0.0f64;
            for i in 0..n {
                for j in 0..n {
                    let mut acc = 0.0;
                    for (k, v) in basis.vectors.iter().enumerate() {
                        acc += basis.weights.lambdas()[k] * v[i] * v[j];
                    }
                    worst = worst.max((acc - o.get(i, j)).abs());
                }
            }
            assert!(worst < 1e-9, "reconstruction error {worst} at n={n}");
            for a in 0..basis.vectors.len() {
                for b in a..basis.vectors.len() {
                    let dot: f64 = basis.vectors[a]
                        .iter()
                        .zip(&basis.vectors[b])
                        .map(|(x, y)| x * y)
                        .sum();
                    let target = if a == b { 1.0 } else { 0.0 };
                    assert!((dot - target).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn spectrum_from_lambdas_validation() {
        assert!(EntanglementSpectrum::from_lambdas(vec![0.6, 0.4]).is_ok());
        assert!(EntanglementSpectrum::from_lambdas(vec![0.4, 0.6]).is_err());
        assert!(EntanglementSpectrum::from_lambdas(vec![1.2, -0.2]).is_err());
        assert!(EntanglementSpectrum::from_lambdas(vec![0.6, 0.3]).is_err());
        assert!(EntanglementSpectrum::from_lambdas(vec![]).is_err());
    }
}
