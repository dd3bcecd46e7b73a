//! Orthonormal normal frames along an immersion and the tangential
//! correction F = ∇u (∇uᵀ∇u)⁻¹.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fieldlab::{gradient, Field, ImmersionField};
use crate::linalg::{sym_eigenvalues, Lu};
use crate::scalar::{abs, lit, Real};

/// Projected candidate norms below this trigger the continuation rule.
pub const PIVOT_TOL: f64 = 1e-8;

/// d−n unit normals per grid point, stored point-major: component r of
/// normal k at `k * d + r`.
#[derive(Clone, Debug)]
pub struct NormalFrame<T> {
    pub d: usize,
    pub n: usize,
    pub vectors: Field<T>,
    /// Candidate columns e_k chosen at each point, in selection order.
    pub pivots: Vec<Vec<u8>>,
    /// Points where the default pivot order degenerated.
    pub continued: usize,
}

impl<T: Real> NormalFrame<T> {
    pub fn count(&self) -> usize {
        self.d - self.n
    }

    /// Normal k at point p.
    pub fn at(&self, p: usize, k: usize) -> &[T] {
        &self.vectors.at(p)[k * self.d..(k + 1) * self.d]
    }

    /// Normal k as a d-component field.
    pub fn vector(&self, k: usize) -> Field<T> {
        let d = self.d;
        let mut out = Field::zeros(&self.vectors.domain, d);
        out.data.par_chunks_mut(d).enumerate().for_each(|(p, o)| o.copy_from_slice(self.at(p, k)));
        out
    }

    /// max over points of |η_iᵀη_j − δ_ij|.
    pub fn orthonormality_residual(&self) -> T {
        let m = self.count();
        (0..self.vectors.npts())
            .into_par_iter()
            .map(|p| {
                let mut worst = T::zero();
                for i in 0..m {
                    for j in i..m {
                        let dot = dot(self.at(p, i), self.at(p, j));
                        let target = if i == j { T::one() } else { T::zero() };
                        worst = worst.max(abs(dot - target));
                    }
                }
                worst
            })
            .reduce(T::zero, T::max)
    }

    /// max over points of |(∇u)ᵀη_i|.
    pub fn normality_residual(&self, u: &ImmersionField<T>) -> T {
        let (n, d, m) = (self.n, self.d, self.count());
        (0..self.vectors.npts())
            .into_par_iter()
            .map(|p| {
                let j = u.jacobian(p);
                let mut worst = T::zero();
                for k in 0..m {
                    let eta = self.at(p, k);
                    for a in 0..n {
                        let s = (0..d).fold(T::zero(), |s, r| s + j[r * n + a] * eta[r]);
                        worst = worst.max(abs(s));
                    }
                }
                worst
            })
            .reduce(T::zero, T::max)
    }

    /// max over normals and points of the Frobenius norm of ∇η_k.
    pub fn gradient_sup(&self) -> T {
        (0..self.count())
            .map(|k| {
                let g = gradient(&self.vector(k));
                crate::fieldlab::sup_norm(&g)
            })
            .fold(T::zero(), T::max)
    }
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + x * y)
}

/// Orthonormal basis of the column span of the d×n Jacobian (two passes of
/// modified Gram–Schmidt).
fn tangent_basis<T: Real>(j: &[T], d: usize, n: usize) -> Vec<Vec<T>> {
    let mut basis: Vec<Vec<T>> = Vec::with_capacity(n);
    for a in 0..n {
        let mut v: Vec<T> = (0..d).map(|r| j[r * n + a]).collect();
        for _ in 0..2 {
            for t in &basis {
                let c = dot(t, &v);
                v.iter_mut().zip(t).for_each(|(x, &y)| *x = *x - c * y);
            }
        }
        let norm = dot(&v, &v).sqrt();
        v.iter_mut().for_each(|x| *x = *x / norm);
        basis.push(v);
    }
    basis
}

/// Projects e_k off the tangent space and the normals accepted so far.
fn project_candidate<T: Real>(k: usize, d: usize, fixed: &[Vec<T>]) -> (Vec<T>, T) {
    let mut v = vec![T::zero(); d];
    v[k] = T::one();
    for _ in 0..2 {
        for t in fixed {
            let c = dot(t, &v);
            v.iter_mut().zip(t).for_each(|(x, &y)| *x = *x - c * y);
        }
    }
    let norm = dot(&v, &v).sqrt();
    (v, norm)
}

/// Gram–Schmidt through `order`; with `strict` every listed candidate must
/// survive, otherwise degenerate candidates are skipped.
fn select<T: Real>(tangent: &[Vec<T>], d: usize, want: usize, order: &[u8], strict: bool) -> Option<(Vec<Vec<T>>, Vec<u8>)> {
    let mut fixed = tangent.to_vec();
    let mut normals = Vec::with_capacity(want);
    let mut used = Vec::with_capacity(want);
    for &k in order {
        if normals.len() == want {
            break;
        }
        let (mut v, norm) = project_candidate(k as usize, d, &fixed);
        if norm < lit(PIVOT_TOL) {
            if strict {
                return None;
            }
            continue;
        }
        v.iter_mut().for_each(|x| *x = *x / norm);
        fixed.push(v.clone());
        normals.push(v);
        used.push(k);
    }
    (normals.len() == want).then_some((normals, used))
}

/// Candidate order e_{n+1}, …, e_d, e_1, …, e_n (0-based indices).
fn default_order(n: usize, d: usize) -> Vec<u8> {
    (n..d).chain(0..n).map(|k| k as u8).collect()
}

/// Builds d−n orthonormal normals at every grid point.
///
/// Each point runs Gram–Schmidt on the candidates e_k in a fixed order after
/// projecting out the tangent space. Where that order degenerates, the point
/// reuses the pivot set of its smallest already-visited neighbour.
pub fn build_frame<T: Real>(u: &ImmersionField<T>, gamma_bound: T) -> Result<NormalFrame<T>> {
    let (n, d) = (u.n(), u.d);
    if !(gamma_bound > T::one()) {
        return Err(Error::Precondition(format!("frame bound {gamma_bound} must exceed 1")));
    }
    if d <= n {
        return Err(Error::InvalidDimension(format!("no normal directions for d = {d}, n = {n}")));
    }
    let dom = u.domain().clone();
    let npts = dom.npts();
    let m = d - n;
    let inv = T::one() / gamma_bound;

    // Metric bounds first, so a degenerate map reports its worst point.
    let bad = (0..npts).into_par_iter().find_first(|&p| {
        let j = u.jacobian(p);
        let mut g = vec![T::zero(); n * n];
        for a in 0..n {
            for b in 0..n {
                g[a * n + b] = (0..d).fold(T::zero(), |s, r| s + j[r * n + a] * j[r * n + b]);
            }
        }
        let ev = sym_eigenvalues(&g, n);
        !(ev[0] >= inv && ev[n - 1] <= gamma_bound)
    });
    if let Some(p) = bad {
        return Err(Error::DegenerateImmersion(format!(
            "pullback metric eigenvalues leave [1/{gamma_bound}, {gamma_bound}] at grid point {p}"
        )));
    }

    let order = default_order(n, d);
    let first: Vec<Option<(Vec<Vec<T>>, Vec<u8>)>> = (0..npts)
        .into_par_iter()
        .map(|p| select(&tangent_basis(u.jacobian(p), d, n), d, m, &order, true))
        .collect();

    let mut vectors = Field::zeros(&dom, m * d);
    let mut pivots: Vec<Vec<u8>> = vec![vec![]; npts];
    let mut continued = 0;
    let mut idx = vec![0usize; n];
    for (p, sel) in first.into_iter().enumerate() {
        let (normals, used) = match sel {
            Some(s) => s,
            None => {
                continued += 1;
                let tangent = tangent_basis(u.jacobian(p), d, n);
                dom.multi_index(p, &mut idx);
                let neighbour = (0..n).filter(|&a| idx[a] > 0).map(|a| p - dom.stride(a)).min();
                let from_neighbour = neighbour.and_then(|q| {
                    let mut ord = pivots[q].clone();
                    ord.extend(order.iter().filter(|k| !pivots[q].contains(k)));
                    select(&tangent, d, m, &ord, false)
                });
                from_neighbour
                    .or_else(|| select(&tangent, d, m, &order, false))
                    .ok_or_else(|| Error::DegenerateImmersion(format!("no normal frame at grid point {p}")))?
            }
        };
        let out = vectors.at_mut(p);
        for (k, v) in normals.iter().enumerate() {
            out[k * d..(k + 1) * d].copy_from_slice(v);
        }
        pivots[p] = used;
    }
    Ok(NormalFrame { d, n, vectors, pivots, continued })
}

/// F = ∇u (∇uᵀ∇u)⁻¹ as a d×n field (component r * n + a).
pub fn tangential_correction<T: Real>(u: &ImmersionField<T>) -> Result<Field<T>> {
    let (n, d) = (u.n(), u.d);
    let mut out = Field::zeros(u.domain(), d * n);
    let failed = out
        .data
        .par_chunks_mut(d * n)
        .enumerate()
        .map(|(p, f)| {
            let j = u.jacobian(p);
            let mut g = vec![T::zero(); n * n];
            for a in 0..n {
                for b in 0..n {
                    g[a * n + b] = (0..d).fold(T::zero(), |s, r| s + j[r * n + a] * j[r * n + b]);
                }
            }
            let ev = sym_eigenvalues(&g, n);
            if !(ev[0] > ev[n - 1] * lit(1e-12)) {
                return Some(p);
            }
            let Some(lu) = Lu::new(g, n) else { return Some(p) };
            let ginv = lu.inverse();
            for r in 0..d {
                for a in 0..n {
                    f[r * n + a] = (0..n).fold(T::zero(), |s, b| s + j[r * n + b] * ginv[b * n + a]);
                }
            }
            None
        })
        .find_first(|r| r.is_some())
        .flatten();
    match failed {
        Some(p) => Err(Error::DegenerateImmersion(format!("singular pullback metric at grid point {p}"))),
        None => Ok(out),
    }
}

/// max over points of |(∇u)ᵀF − Id|.
pub fn correction_residual<T: Real>(u: &ImmersionField<T>, f: &Field<T>) -> T {
    let (n, d) = (u.n(), u.d);
    (0..f.npts())
        .into_par_iter()
        .map(|p| {
            let (j, fp) = (u.jacobian(p), f.at(p));
            let mut worst = T::zero();
            for a in 0..n {
                for b in 0..n {
                    let s = (0..d).fold(T::zero(), |s, r| s + j[r * n + a] * fp[r * n + b]);
                    let target = if a == b { T::one() } else { T::zero() };
                    worst = worst.max(abs(s - target));
                }
            }
            worst
        })
        .reduce(T::zero, T::max)
}
