//! Sup-norms, C^k seminorms and dyadic Hölder estimates on the grid.

use rayon::prelude::*;

use super::field::{Field, MetricField};
use super::immersion::ImmersionField;
use super::spectral::{differentiate, Scheme};
use crate::scalar::{lit, Real};

/// Matrix norm used for sup-norms of metric fields.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixNorm {
    #[default]
    Operator,
    Frobenius,
}

fn euclid<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |s, &x| s + x * x).sqrt()
}

/// max over points of the Euclidean norm of the components.
pub fn sup_norm<T: Real>(f: &Field<T>) -> T {
    f.data.par_chunks(f.ncomp).map(euclid).reduce(T::zero, T::max)
}

/// max over points of the chosen matrix norm of a metric field.
pub fn metric_sup<T: Real>(f: &MetricField<T>, norm: MatrixNorm) -> T {
    let n = f.domain.n;
    match norm {
        MatrixNorm::Frobenius => sup_norm(f),
        MatrixNorm::Operator => f
            .data
            .par_chunks(n * n)
            .map(|m| {
                let ev = crate::linalg::sym_eigenvalues(m, n);
                crate::scalar::abs(ev[0]).max(crate::scalar::abs(ev[n - 1]))
            })
            .reduce(T::zero, T::max),
    }
}

/// Multi-indices β with |β| = k, as sorted axis lists.
fn multi_indices(n: usize, k: usize) -> Vec<Vec<usize>> {
    match k {
        0 => vec![vec![]],
        1 => (0..n).map(|a| vec![a]).collect(),
        2 => {
            let mut v = vec![];
            for a in 0..n {
                for b in a..n {
                    v.push(vec![a, b]);
                }
            }
            v
        }
        _ => panic!("orders above 2 are not supported"),
    }
}

fn derivative<T: Real>(f: &Field<T>, beta: &[usize], scheme: Scheme) -> Field<T> {
    beta.iter().fold(f.clone(), |g, &a| differentiate(&g, a, scheme))
}

/// [f]_k = Σ_{|β|=k} sup|∇^β f| for k ≤ 2.
pub fn seminorm<T: Real>(f: &Field<T>, k: usize, scheme: Scheme) -> T {
    multi_indices(f.domain.n, k).iter().map(|b| sup_norm(&derivative(f, b, scheme))).fold(T::zero(), |s, v| s + v)
}

/// ‖f‖_k = Σ_{j≤k} [f]_j.
pub fn norm<T: Real>(f: &Field<T>, k: usize, scheme: Scheme) -> T {
    (0..=k).map(|j| seminorm(f, j, scheme)).fold(T::zero(), |s, v| s + v)
}

/// Lower estimate of [f]_θ from pairs separated by spacing·2^k along each
/// axis, k = 0 .. log2(points_per_axis) − 1 (the largest separation is half
/// a period, so wrapped and plain distances agree).
pub fn holder_seminorm<T: Real>(f: &Field<T>, theta: T) -> T {
    let dom = &f.domain;
    let nc = f.ncomp;
    let mut best = T::zero();
    for axis in 0..dom.n {
        let mut step = 1usize;
        while step <= dom.points_per_axis / 2 {
            let dist = dom.spacing * lit(step as f64);
            let denom = dist.powf(theta);
            let q = (0..dom.npts())
                .into_par_iter()
                .map(|p| {
                    let p2 = dom.shifted(p, axis, step as isize);
                    let (a, b) = (f.at(p), f.at(p2));
                    let mut s = T::zero();
                    for c in 0..nc {
                        let d = a[c] - b[c];
                        s = s + d * d;
                    }
                    s.sqrt()
                })
                .reduce(T::zero, T::max);
            best = best.max(q / denom);
            step *= 2;
        }
    }
    best
}

/// [f]_{k+θ} = Σ_{|β|=k} [∇^β f]_θ for k ≤ 1.
pub fn holder_seminorm_order<T: Real>(f: &Field<T>, k: usize, theta: T, scheme: Scheme) -> T {
    multi_indices(f.domain.n, k)
        .iter()
        .map(|b| holder_seminorm(&derivative(f, b, scheme), theta))
        .fold(T::zero(), |s, v| s + v)
}

/// Seminorms [u]_1, [u]_2 of an immersion, using its Jacobian cache.
pub fn immersion_seminorms<T: Real>(u: &ImmersionField<T>) -> (T, T) {
    let n = u.n();
    let d = u.d;
    let mut c1 = T::zero();
    for a in 0..n {
        let s = u.grad.data.par_chunks(d * n).map(|j| euclid(&(0..d).map(|r| j[r * n + a]).collect::<Vec<_>>())).reduce(T::zero, T::max);
        c1 = c1 + s;
    }
    let h = u.hessian();
    let mut c2 = T::zero();
    for a in 0..n {
        for b in a..n {
            let s = h
                .data
                .par_chunks(d * n * n)
                .map(|m| euclid(&(0..d).map(|r| m[(r * n + a) * n + b]).collect::<Vec<_>>()))
                .reduce(T::zero, T::max);
            c2 = c2 + s;
        }
    }
    (c1, c2)
}
