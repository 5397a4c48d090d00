//! Dense symmetric eigendecomposition.
//!
//! Two routes are provided and dispatched on matrix size: cyclic Jacobi
//! rotations for small matrices (high relative accuracy on tiny
//! eigenvalues) and Householder tridiagonalization followed by
//! implicit-shift QL for larger ones (cubic-cost throughput on long
//! histories). Both return eigenvalues sorted in descending order; both
//! must reproduce the input as `V diag(w) V^T`.

use thiserror::Error;

/// Largest dimension handled by the Jacobi route.
pub const JACOBI_LIMIT: usize = 32;

/// Iteration caps. Jacobi converges in well under 20 sweeps; QL needs a
/// handful of iterations per eigenvalue.
const JACOBI_MAX_SWEEPS: usize = 64;
const QL_MAX_ITER: usize = 50;

#[derive(Debug, Error)]
pub enum EigenError {
    #[error("NoConvergence: eigensolver exceeded {0} iterations")]
    NoConvergence(usize),
}

/// Dense real symmetric matrix, row-major full storage.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    /// Builds an `n`-by-`n` symmetric matrix from a generator evaluated on
    /// the upper triangle and mirrored below.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(n > 0, "SymMatrix requires n >= 1");
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        SymMatrix { n, data }
    }

    /// Wraps existing row-major entries. The caller guarantees symmetry;
    /// only the dimensions are checked.
    pub fn from_entries(n: usize, data: Vec<f64>) -> Self {
        assert!(n > 0 && data.len() == n * n, "entry count must be n*n");
        SymMatrix { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.data
    }
}

/// Eigenpairs sorted by descending eigenvalue; `vectors[k]` is the unit
/// eigenvector belonging to `values[k]`.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

/// Eigenvalues only, descending.
pub fn eigenvalues(m: &SymMatrix) -> Result<Vec<f64>, EigenError> {
    if m.n == 1 {
        return Ok(vec![m.get(0, 0)]);
    }
    let mut d = if m.n <= JACOBI_LIMIT {
        jacobi(m, false)?.0
    } else {
        householder_ql(m, false)?.0
    };
    d.sort_by(|a, b| b.partial_cmp(a).expect("non-finite eigenvalue"));
    Ok(d)
}

/// Full eigendecomposition, descending.
pub fn decompose(m: &SymMatrix) -> Result<Decomposition, EigenError> {
    if m.n == 1 {
        return Ok(Decomposition {
            values: vec![m.get(0, 0)],
            vectors: vec![vec![1.0]],
        });
    }
    let (d, z) = if m.n <= JACOBI_LIMIT {
        jacobi(m, true)?
    } else {
        householder_ql(m, true)?
    };
    let z = z.expect("vectors requested");
    let n = m.n;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        d[b].partial_cmp(&d[a])
            .expect("non-finite eigenvalue")
            .then(a.cmp(&b))
    });
    let values = order.iter().map(|&k| d[k]).collect();
    let vectors = order
        .iter()
        .map(|&k| (0..n).map(|row| z[row * n + k]).collect())
        .collect();
    Ok(Decomposition { values, vectors })
}

/// Cyclic Jacobi with the classic threshold schedule. Returns unsorted
/// eigenvalues and, when requested, the accumulated rotation matrix
/// (columns are eigenvectors).
fn jacobi(m: &SymMatrix, want_vectors: bool) -> Result<(Vec<f64>, Option<Vec<f64>>), EigenError> {
    let n = m.n;
    let mut a = m.data.clone();
    let mut v = if want_vectors {
        let mut id = vec![0.0; n * n];
        for i in 0..n {
            id[i * n + i] = 1.0;
        }
        Some(id)
    } else {
        None
    };
    let mut d: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    let mut b = d.clone();
    let mut z = vec![0.0; n];

    for sweep in 1..=JACOBI_MAX_SWEEPS {
        let mut sm = 0.0;
        for p in 0..n - 1 {
            for q in p + 1..n {
                sm += a[p * n + q].abs();
            }
        }
        if sm == 0.0 {
            return Ok((d, v));
        }
        let tresh = if sweep < 4 {
            0.2 * sm / (n * n) as f64
        } else {
            0.0
        };
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[p * n + q];
                let g = 100.0 * apq.abs();
                if sweep > 4 && g <= f64::EPSILON * d[p].abs() && g <= f64::EPSILON * d[q].abs() {
                    a[p * n + q] = 0.0;
                } else if apq.abs() > tresh {
                    let h = d[q] - d[p];
                    let t = if g <= f64::EPSILON * h.abs() {
                        apq / h
                    } else {
                        let theta = 0.5 * h / apq;
                        let mut t = 1.0 / (theta.abs() + (1.0 + theta * theta).sqrt());
                        if theta < 0.0 {
                            t = -t;
                        }
                        t
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    let tau = s / (1.0 + c);
                    let h = t * apq;
                    z[p] -= h;
                    z[q] += h;
                    d[p] -= h;
                    d[q] += h;
                    a[p * n + q] = 0.0;
                    let rotate = |a: &mut [f64], i: usize, j: usize, k: usize, l: usize| {
                        let g = a[i * n + j];
                        let h = a[k * n + l];
                        a[i * n + j] = g - s * (h + g * tau);
                        a[k * n + l] = h + s * (g - h * tau);
                    };
                    for j in 0..p {
                        rotate(&mut a, j, p, j, q);
                    }
                    for j in p + 1..q {
                        rotate(&mut a, p, j, j, q);
                    }
                    for j in q + 1..n {
                        rotate(&mut a, p, j, q, j);
                    }
                    if let Some(v) = v.as_mut() {
                        for j in 0..n {
                            rotate(v, j, p, j, q);
                        }
                    }
                }
            }
        }
        for p in 0..n {
            b[p] += z[p];
            d[p] = b[p];
            z[p] = 0.0;
        }
    }
    Err(EigenError::NoConvergence(JACOBI_MAX_SWEEPS))
}

/// Householder reduction to tridiagonal form followed by implicit-shift QL.
/// With `want_vectors` the orthogonal transforms are accumulated so the
/// returned flat matrix holds eigenvectors in its columns.
fn householder_ql(
    m: &SymMatrix,
    want_vectors: bool,
) -> Result<(Vec<f64>, Option<Vec<f64>>), EigenError> {
    let n = m.n;
    let mut a = m.data.clone();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    let mut p = vec![0.0; n];

    // Householder reduction, rows processed from the bottom up. The
    // matrix-vector product `p = A u` walks the lower triangle row by
    // row, scattering the transposed contributions into `p`; a
    // column-strided formulation thrashes the cache once matrices
    // outgrow it.
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let mut scale = 0.0;
            for k in 0..=l {
                scale += a[i * n + k].abs();
            }
            if scale == 0.0 {
                e[i] = a[i * n + l];
            } else {
                for k in 0..=l {
                    a[i * n + k] /= scale;
                    h += a[i * n + k] * a[i * n + k];
                }
                let f = a[i * n + l];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                a[i * n + l] = f - g;
                {
                    let (rows, tail) = a.split_at(i * n);
                    let u = &tail[..=l];
                    for (r, &ur) in u.iter().enumerate() {
                        let row = &rows[r * n..r * n + r + 1];
                        let mut acc = row[r] * ur;
                        for k in 0..r {
                            acc += row[k] * u[k];
                            p[k] += row[k] * ur;
                        }
                        p[r] += acc;
                    }
                }
                let mut f_acc = 0.0;
                for j in 0..=l {
                    if want_vectors {
                        a[j * n + i] = a[i * n + j] / h;
                    }
                    e[j] = p[j] / h;
                    p[j] = 0.0;
                    f_acc += e[j] * a[i * n + j];
                }
                let hh = f_acc / (h + h);
                for j in 0..=l {
                    let f = a[i * n + j];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        a[j * n + k] -= f * e[k] + g * a[i * n + k];
                    }
                }
            }
        } else {
            e[i] = a[i * n + l];
        }
        d[i] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;
    for i in 0..n {
        if want_vectors {
            if d[i] != 0.0 {
                for j in 0..i {
                    let mut g = 0.0;
                    for k in 0..i {
                        g += a[i * n + k] * a[k * n + j];
                    }
                    for k in 0..i {
                        a[k * n + j] -= g * a[k * n + i];
                    }
                }
            }
            d[i] = a[i * n + i];
            a[i * n + i] = 1.0;
            for j in 0..i {
                a[j * n + i] = 0.0;
                a[i * n + j] = 0.0;
            }
        } else {
            d[i] = a[i * n + i];
        }
    }

    // Implicit-shift QL on the tridiagonal (d, e).
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    // Norm-relative deflation: a subdiagonal below eps * |T| is zero for
    // every eigenvalue the matrix scale can express. A locally relative
    // test stalls on the wide noise blocks of rank-deficient Gram
    // matrices, whose entries sit many orders below the matrix norm; the
    // small-eigenvalue relative accuracy given up here is what the Jacobi
    // route is for.
    let anorm = (0..n)
        .map(|i| d[i].abs() + e[i].abs())
        .fold(0.0f64, f64::max);
    let deflation = f64::EPSILON * anorm + f64::MIN_POSITIVE;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut mm = l;
            while mm + 1 < n {
                if e[mm].abs() <= deflation {
                    break;
                }
                mm += 1;
            }
            if mm == l {
                break;
            }
            iter += 1;
            if iter > QL_MAX_ITER {
                return Err(EigenError::NoConvergence(QL_MAX_ITER));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            let sign_r = if g >= 0.0 { r } else { -r };
            g = d[mm] - d[l] + e[l] / (g + sign_r);
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut underflow_break = false;
            let mut i = mm;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[mm] = 0.0;
                    underflow_break = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                let rr = (d[i] - g) * s + 2.0 * c * b;
                p = s * rr;
                d[i + 1] = g + p;
                g = c * rr - b;
                if want_vectors {
                    for k in 0..n {
                        let f = a[k * n + i + 1];
                        a[k * n + i + 1] = s * a[k * n + i] + c * f;
                        a[k * n + i] = c * a[k * n + i] - s * f;
                    }
                }
            }
            // A zero rotation radius means the transform already split
            // the block; restart the scan without touching d[l] or e[l].
            if underflow_break {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[mm] = 0.0;
        }
    }

    Ok((d, if want_vectors { Some(a) } else { None }))
}
