//! Dense symmetric eigensolver: Householder tridiagonalization followed by
//! the implicit QL algorithm (the EISPACK `tred2`/`tql2` pair).
//!
//! Work arrays are stored transposed (`w[j * n + k]` holds `V[k][j]`) so the
//! inner loops of both phases walk contiguous memory.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::simcore::SYMMETRY_TOL;

const MAX_QL_SWEEPS: usize = 60;

/// Eigenvalues in ascending order with unit eigenvectors as the columns of
/// `vectors`.
#[derive(Debug, Clone)]
pub struct EigenDecomposition<T> {
    pub values: Array1<T>,
    pub vectors: Array2<T>,
}

impl<T: Scalar> EigenDecomposition<T> {
    pub fn n(&self) -> usize {
        self.values.len()
    }

    /// `V diag(values) V^T`.
    pub fn reconstruct(&self) -> Array2<T> {
        let scaled = &self.vectors * &self.values.view().insert_axis(ndarray::Axis(0));
        scaled.dot(&self.vectors.t())
    }
}

/// Validates `matrix` (square, finite, symmetric within `1e-10`) and
/// decomposes it.
pub fn symmetric_eig<T: Scalar>(matrix: &Array2<T>) -> Result<EigenDecomposition<T>> {
    let (rows, cols) = matrix.dim();
    if rows != cols {
        return Err(Error::Dimension(format!("expected a square matrix, got {rows}x{cols}")));
    }
    let tol = T::lit(SYMMETRY_TOL);
    for i in 0..rows {
        for j in 0..cols {
            if !matrix[[i, j]].is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
    }
    for i in 0..rows {
        for j in (i + 1)..cols {
            let (a, b) = (matrix[[i, j]], matrix[[j, i]]);
            if (a - b).abs() > tol {
                return Err(Error::Asymmetric {
                    row: i,
                    col: j,
                    value: a.as_f64(),
                    mirror: b.as_f64(),
                });
            }
        }
    }
    eig_unchecked(matrix)
}

/// Decomposes a matrix already known to be square, finite and symmetric.
/// Only the lower triangle is read.
pub fn eig_unchecked<T: Scalar>(matrix: &Array2<T>) -> Result<EigenDecomposition<T>> {
    let n = matrix.nrows();
    if n == 0 {
        return Ok(EigenDecomposition {
            values: Array1::zeros(0),
            vectors: Array2::zeros((0, 0)),
        });
    }
    // Column-major copy of the lower triangle: w[j * n + k] = A[k][j].
    let mut w = vec![T::zero(); n * n];
    for j in 0..n {
        for k in j..n {
            w[j * n + k] = matrix[[k, j]];
        }
        for k in 0..j {
            w[j * n + k] = matrix[[j, k]];
        }
    }
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    tridiagonalize(n, &mut w, &mut d, &mut e);
    ql_implicit(n, &mut w, &mut d, &mut e)?;

    let values = Array1::from(d);
    // Row j of `w` is eigenvector j.
    let vectors = Array2::from_shape_fn((n, n), |(r, c)| w[c * n + r]);
    Ok(EigenDecomposition { values, vectors })
}

fn tridiagonalize<T: Scalar>(n: usize, w: &mut [T], d: &mut [T], e: &mut [T]) {
    // v(r, c) = V[r][c] lives at w[c * n + r].
    macro_rules! v {
        ($r:expr, $c:expr) => {
            w[($c) * n + ($r)]
        };
    }
    for j in 0..n {
        d[j] = v!(n - 1, j);
    }
    for i in (1..n).rev() {
        let mut scale = T::zero();
        let mut h = T::zero();
        for &dk in d.iter().take(i) {
            scale += dk.abs();
        }
        if scale == T::zero() {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v!(i - 1, j);
                v!(i, j) = T::zero();
                v!(j, i) = T::zero();
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > T::zero() {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = T::zero();
            }
            for j in 0..i {
                f = d[j];
                v!(j, i) = f;
                g = e[j] + v!(j, j) * f;
                let col = &w[j * n..j * n + i];
                for k in (j + 1)..i {
                    g += col[k] * d[k];
                    e[k] += col[k] * f;
                }
                e[j] = g;
            }
            f = T::zero();
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                let col = &mut w[j * n..j * n + i];
                for k in j..i {
                    col[k] -= f * e[k] + g * d[k];
                }
                d[j] = v!(i - 1, j);
                v!(i, j) = T::zero();
            }
        }
        d[i] = h;
    }

    for i in 0..n - 1 {
        v!(n - 1, i) = v!(i, i);
        v!(i, i) = T::one();
        let h = d[i + 1];
        if h != T::zero() {
            for k in 0..=i {
                d[k] = v!(k, i + 1) / h;
            }
            let (head, tail) = w.split_at_mut((i + 1) * n);
            let next = &tail[..=i];
            for j in 0..=i {
                let col = &mut head[j * n..j * n + i + 1];
                let mut g = T::zero();
                for k in 0..=i {
                    g += next[k] * col[k];
                }
                for k in 0..=i {
                    col[k] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v!(k, i + 1) = T::zero();
        }
    }
    for j in 0..n {
        d[j] = v!(n - 1, j);
        v!(n - 1, j) = T::zero();
    }
    v!(n - 1, n - 1) = T::one();
    e[0] = T::zero();
}

fn ql_implicit<T: Scalar>(n: usize, w: &mut [T], d: &mut [T], e: &mut [T]) -> Result<()> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = T::zero();

    let two = T::lit(2.0);
    let eps = T::epsilon();
    let mut f = T::zero();
    let mut tst1 = T::zero();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_QL_SWEEPS {
                    return Err(Error::NoConvergence {
                        index: l,
                        iterations: MAX_QL_SWEEPS,
                    });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(T::one());
                if p < T::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = T::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = T::zero();
                let mut s2 = T::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    let (lo, hi) = w.split_at_mut((i + 1) * n);
                    let vi = &mut lo[i * n..];
                    let vi1 = &mut hi[..n];
                    for k in 0..n {
                        let t = vi1[k];
                        vi1[k] = s * vi[k] + c * t;
                        vi[k] = c * vi[k] - s * t;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = T::zero();
    }

    // Selection sort into ascending order, swapping eigenvector rows.
    for i in 0..n.saturating_sub(1) {
        let mut k = i;
        let mut p = d[i];
        for (j, &dj) in d.iter().enumerate().skip(i + 1) {
            if dj < p {
                k = j;
                p = dj;
            }
        }
        if k != i {
            d[k] = d[i];
            d[i] = p;
            let (lo, hi) = w.split_at_mut(k * n);
            lo[i * n..i * n + n].swap_with_slice(&mut hi[..n]);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..=i {
                let v: f64 = rng.random_range(-1.0..1.0);
                a[[i, j]] = v;
                a[[j, i]] = v;
            }
        }
        a
    }

    fn max_abs(a: &Array2<f64>) -> f64 {
        a.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Reconstruction and orthonormality computed with an explicit triple
    /// loop, independent of ndarray's `dot`.
    fn check_factors(a: &Array2<f64>, eig: &EigenDecomposition<f64>, tol: f64) {
        let n = a.nrows();
        let v = &eig.vectors;
        for i in 0..n {
            for j in 0..n {
                let mut rec = 0.0;
                let mut gram = 0.0;
                for k in 0..n {
                    rec += v[[i, k]] * eig.values[k] * v[[j, k]];
                    gram += v[[k, i]] * v[[k, j]];
                }
                assert!((rec - a[[i, j]]).abs() < tol * n as f64, "reconstruction ({i},{j})");
                let id = if i == j { 1.0 } else { 0.0 };
                assert!((gram - id).abs() < tol, "orthonormality ({i},{j})");
            }
        }
        for w in eig.values.windows(2) {
            assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn identity() {
        let eig = symmetric_eig(&Array2::<f64>::eye(3)).unwrap();
        assert_eq!(eig.values.to_vec(), vec![1.0, 1.0, 1.0]);
        check_factors(&Array2::eye(3), &eig, 1e-12);
    }

    #[test]
    fn swap_matrix() {
        let a: Array2<f64> = array![[0.0, 1.0], [1.0, 0.0]];
        let eig = symmetric_eig(&a).unwrap();
        assert!((eig.values[0] + 1.0).abs() < 1e-14);
        assert!((eig.values[1] - 1.0).abs() < 1e-14);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v0 = eig.vectors.column(0);
        let v1 = eig.vectors.column(1);
        assert!((v0[0] * v0[1] + 0.5).abs() < 1e-14 && (v0[0].abs() - h).abs() < 1e-14);
        assert!((v1[0] * v1[1] - 0.5).abs() < 1e-14 && (v1[0].abs() - h).abs() < 1e-14);
    }

    #[test]
    fn random_20() {
        let a = random_symmetric(20, 7);
        let eig = symmetric_eig(&a).unwrap();
        check_factors(&a, &eig, 1e-8);
        let rec = eig.reconstruct();
        assert!(max_abs(&(&rec - &a)) < 1e-8 * 20.0);
    }

    #[test]
    fn matches_nalgebra_spectrum() {
        let a = random_symmetric(30, 11);
        let eig = symmetric_eig(&a).unwrap();
        let m = nalgebra::DMatrix::from_fn(30, 30, |i, j| a[[i, j]]);
        let mut reference: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        reference.sort_by(f64::total_cmp);
        for (x, y) in eig.values.iter().zip(reference.iter()) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn degenerate_and_trivial_sizes() {
        let eig = symmetric_eig(&Array2::<f64>::zeros((0, 0))).unwrap();
        assert_eq!(eig.n(), 0);
        let eig = symmetric_eig(&array![[4.0]]).unwrap();
        assert_eq!(eig.values[0], 4.0);
        assert_eq!(eig.vectors[[0, 0]], 1.0);
        // Block-constant matrix with a highly repeated eigenvalue.
        let a = Array2::from_elem((6, 6), 1.0);
        let eig = symmetric_eig(&a).unwrap();
        check_factors(&a, &eig, 1e-12);
        assert!((eig.values[5] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        let err = symmetric_eig(&array![[0.0, 1.0], [0.5, 0.0]]).unwrap_err();
        assert!(matches!(err, Error::Asymmetric { row: 0, col: 1, .. }));
        let err = symmetric_eig(&array![[0.0, f64::NAN], [f64::NAN, 0.0]]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { row: 0, col: 1 }));
        assert!(symmetric_eig(&Array2::<f64>::zeros((2, 3))).is_err());
    }

    #[test]
    fn single_precision() {
        let a = random_symmetric(12, 5).mapv(|v| v as f32);
        let eig = symmetric_eig(&a).unwrap();
        let rec = eig.reconstruct();
        let err = rec.iter().zip(a.iter()).fold(0.0f32, |m, (x, y)| m.max((x - y).abs()));
        assert!(err < 1e-4);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn trace_is_preserved(n in 1usize..25, seed in any::<u64>()) {
            let a = random_symmetric(n, seed);
            let eig = symmetric_eig(&a).unwrap();
            let trace: f64 = (0..n).map(|i| a[[i, i]]).sum();
            prop_assert!((eig.values.sum() - trace).abs() < 1e-8 * n as f64);
            check_factors(&a, &eig, 1e-8);
        }
    }
}
