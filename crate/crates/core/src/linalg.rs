//! Small dense linear algebra: LU with partial pivoting and the cyclic
//! Jacobi eigensolver for symmetric matrices. Matrices are row-major slices.

use crate::scalar::{abs, lit, Real};

/// Factors `a` (n×n, row-major) in place. Returns false on an exactly
/// singular pivot.
pub fn lu_in_place<T: Real>(a: &mut [T], n: usize, piv: &mut [usize]) -> bool {
    for (i, p) in piv.iter_mut().enumerate().take(n) {
        *p = i;
    }
    for k in 0..n {
        let mut best = k;
        let mut best_val = abs(a[k * n + k]);
        for r in (k + 1)..n {
            let v = abs(a[r * n + k]);
            if v > best_val {
                best = r;
                best_val = v;
            }
        }
        if best_val == T::zero() {
            return false;
        }
        if best != k {
            for c in 0..n {
                a.swap(k * n + c, best * n + c);
            }
            piv.swap(k, best);
        }
        let d = a[k * n + k];
        for r in (k + 1)..n {
            let f = a[r * n + k] / d;
            a[r * n + k] = f;
            if f != T::zero() {
                for c in (k + 1)..n {
                    let t = a[k * n + c];
                    a[r * n + c] = a[r * n + c] - f * t;
                }
            }
        }
    }
    true
}

/// Solves using factors from [`lu_in_place`]; `b` is overwritten with x.
pub fn lu_solve<T: Real>(lu: &[T], n: usize, piv: &[usize], b: &mut [T], scratch: &mut [T]) {
    for i in 0..n {
        scratch[i] = b[piv[i]];
    }
    for i in 0..n {
        let mut s = scratch[i];
        for k in 0..i {
            s = s - lu[i * n + k] * scratch[k];
        }
        scratch[i] = s;
    }
    for i in (0..n).rev() {
        let mut s = scratch[i];
        for k in (i + 1)..n {
            s = s - lu[i * n + k] * scratch[k];
        }
        scratch[i] = s / lu[i * n + i];
    }
    b[..n].copy_from_slice(&scratch[..n]);
}

/// An owned LU factorisation.
#[derive(Clone, Debug)]
pub struct Lu<T> {
    n: usize,
    lu: Vec<T>,
    piv: Vec<usize>,
}

impl<T: Real> Lu<T> {
    pub fn new(mut a: Vec<T>, n: usize) -> Option<Self> {
        assert_eq!(a.len(), n * n);
        let mut piv = vec![0; n];
        if !lu_in_place(&mut a, n, &mut piv) {
            return None;
        }
        Some(Lu { n, lu: a, piv })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        let mut s = vec![T::zero(); self.n];
        lu_solve(&self.lu, self.n, &self.piv, &mut x, &mut s);
        x
    }

    pub fn solve_into(&self, b: &mut [T], scratch: &mut [T]) {
        lu_solve(&self.lu, self.n, &self.piv, b, scratch);
    }

    /// Column-wise inverse.
    pub fn inverse(&self) -> Vec<T> {
        let n = self.n;
        let mut inv = vec![T::zero(); n * n];
        let mut e = vec![T::zero(); n];
        let mut s = vec![T::zero(); n];
        for c in 0..n {
            e.iter_mut().for_each(|v| *v = T::zero());
            e[c] = T::one();
            lu_solve(&self.lu, n, &self.piv, &mut e, &mut s);
            for r in 0..n {
                inv[r * n + c] = e[r];
            }
        }
        inv
    }
}

/// Induced 1-norm (max column sum).
pub fn norm1<T: Real>(a: &[T], n: usize) -> T {
    (0..n)
        .map(|c| (0..n).fold(T::zero(), |s, r| s + abs(a[r * n + c])))
        .fold(T::zero(), T::max)
}

/// 1-norm condition number, `None` when singular.
pub fn cond1<T: Real>(a: &[T], n: usize) -> Option<T> {
    let lu = Lu::new(a.to_vec(), n)?;
    Some(norm1(a, n) * norm1(&lu.inverse(), n))
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues (ascending) and eigenvectors as columns of a row-major
/// matrix.
pub fn sym_eigen<T: Real>(a: &[T], n: usize) -> (Vec<T>, Vec<T>) {
    let mut m = a.to_vec();
    let mut v = vec![T::zero(); n * n];
    for i in 0..n {
        v[i * n + i] = T::one();
    }
    let eps = T::epsilon();
    for _sweep in 0..64 {
        let mut off = T::zero();
        let mut diag = T::zero();
        for i in 0..n {
            diag = diag + m[i * n + i] * m[i * n + i];
            for j in (i + 1)..n {
                off = off + m[i * n + j] * m[i * n + j];
            }
        }
        if off <= eps * eps * diag || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == T::zero() {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (lit::<T>(2.0) * apq);
                let sign = if theta >= T::zero() { T::one() } else { -T::one() };
                let t = sign / (abs(theta) + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i * n + i].partial_cmp(&m[j * n + j]).unwrap());
    let vals = order.iter().map(|&i| m[i * n + i]).collect();
    let mut vecs = vec![T::zero(); n * n];
    for (c, &src) in order.iter().enumerate() {
        for r in 0..n {
            vecs[r * n + c] = v[r * n + src];
        }
    }
    (vals, vecs)
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn sym_eigenvalues<T: Real>(a: &[T], n: usize) -> Vec<T> {
    if n == 1 {
        return vec![a[0]];
    }
    if n == 2 {
        let (p, q, r) = (a[0], a[1], a[3]);
        let mean = (p + r) / lit(2.0);
        let rad = (((p - r) / lit(2.0)).powi(2) + q * q).sqrt();
        return vec![mean - rad, mean + rad];
    }
    sym_eigen(a, n).0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lu_solves_known_system() {
        let a = vec![4.0, 1.0, 2.0, 1.0, 3.0, 0.0, 2.0, 0.0, 5.0];
        let x_true = [1.0, -2.0, 0.5];
        let b: Vec<f64> = (0..3).map(|r| (0..3).map(|c| a[r * 3 + c] * x_true[c]).sum()).collect();
        let x = Lu::new(a, 3).unwrap().solve(&b);
        for i in 0..3 {
            assert!((x[i] - x_true[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn singular_matrix_is_rejected() {
        assert!(Lu::new(vec![1.0, 2.0, 2.0, 4.0], 2).is_none());
    }

    #[test]
    fn jacobi_matches_closed_form_3x3() {
        // 2I + 0.5(11^T - I): eigenvalues 1.5, 1.5, 3
        let mut a = vec![0.5f64; 9];
        for i in 0..3 {
            a[i * 3 + i] = 2.0;
        }
        let (vals, vecs) = sym_eigen(&a, 3);
        assert!((vals[0] - 1.5).abs() < 1e-14 && (vals[1] - 1.5).abs() < 1e-14);
        assert!((vals[2] - 3.0).abs() < 1e-14);
        // A v = lambda v
        for c in 0..3 {
            for r in 0..3 {
                let av: f64 = (0..3).map(|k| a[r * 3 + k] * vecs[k * 3 + c]).sum();
                assert!((av - vals[c] * vecs[r * 3 + c]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn cond_of_identity_is_one() {
        let id = vec![1.0, 0.0, 0.0, 1.0];
        assert_eq!(cond1(&id, 2), Some(1.0));
    }
}
