use rayon::prelude::*;

use super::field::{Field, MetricField};
use super::grid::GridDomain;
use super::mollify::mollify;
use super::spectral::{differentiate, gradient, Scheme};
use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// A map from the torus grid into R^d, written u(x) = A x + periodic part.
///
/// `values` holds the full samples of u. The Jacobian cache `grad` stores
/// ∂_a u_r in component `r * n + a` and is A plus the spectral gradient of
/// the periodic part.
#[derive(Clone, Debug, PartialEq)]
pub struct ImmersionField<T> {
    pub d: usize,
    /// d×n row-major.
    pub linear: Vec<T>,
    pub values: Field<T>,
    pub grad: Field<T>,
}

impl<T: Real> ImmersionField<T> {
    pub fn domain(&self) -> &GridDomain<T> {
        &self.values.domain
    }

    pub fn n(&self) -> usize {
        self.values.domain.n
    }

    fn linear_field(dom: &GridDomain<T>, d: usize, linear: &[T]) -> Field<T> {
        let n = dom.n;
        Field::from_fn(dom, d, |x, o| {
            for r in 0..d {
                o[r] = (0..n).fold(T::zero(), |s, a| s + linear[r * n + a] * x[a]);
            }
        })
    }

    /// Builds from a linear part and a periodic displacement.
    pub fn from_parts(linear: Vec<T>, periodic: &Field<T>) -> Result<Self> {
        let dom = periodic.domain.clone();
        let d = periodic.ncomp;
        if linear.len() != d * dom.n {
            return Err(Error::DimensionMismatch(format!("linear part has {} entries, need {}", linear.len(), d * dom.n)));
        }
        let values = Self::linear_field(&dom, d, &linear).add(periodic);
        let mut grad = gradient(periodic);
        grad.data.par_chunks_mut(d * dom.n).for_each(|g| {
            for (v, l) in g.iter_mut().zip(&linear) {
                *v = *v + *l;
            }
        });
        Ok(ImmersionField { d, linear, values, grad })
    }

    /// Builds from full samples and the linear part they contain.
    pub fn from_values(linear: Vec<T>, values: Field<T>) -> Result<Self> {
        let dom = values.domain.clone();
        if linear.len() != values.ncomp * dom.n {
            return Err(Error::DimensionMismatch(format!(
                "linear part has {} entries, need {}",
                linear.len(),
                values.ncomp * dom.n
            )));
        }
        let periodic = values.sub(&Self::linear_field(&dom, values.ncomp, &linear));
        let mut out = Self::from_parts(linear, &periodic)?;
        out.values = values;
        Ok(out)
    }

    /// x ↦ scale·(x, 0) in R^d.
    pub fn inclusion(dom: &GridDomain<T>, d: usize, scale: T) -> Result<Self> {
        let n = dom.n;
        if d < n {
            return Err(Error::InvalidDimension(format!("target dimension {d} below n = {n}")));
        }
        let mut linear = vec![T::zero(); d * n];
        for a in 0..n {
            linear[a * n + a] = scale;
        }
        Self::from_parts(linear, &Field::zeros(dom, d))
    }

    pub fn periodic_part(&self) -> Field<T> {
        self.values.sub(&Self::linear_field(self.domain(), self.d, &self.linear))
    }

    /// d×n row-major Jacobian at point p.
    #[inline]
    pub fn jacobian(&self, p: usize) -> &[T] {
        self.grad.at(p)
    }

    /// u + δ for a periodic increment δ; only δ is differentiated.
    pub fn add_periodic(&self, delta: &Field<T>) -> Self {
        let grad = self.grad.add(&gradient(delta));
        ImmersionField { d: self.d, linear: self.linear.clone(), values: self.values.add(delta), grad }
    }

    /// u + δ with the increment's Jacobian supplied by the caller.
    pub fn add_with_gradient(&self, delta: &Field<T>, delta_grad: &Field<T>) -> Self {
        ImmersionField {
            d: self.d,
            linear: self.linear.clone(),
            values: self.values.add(delta),
            grad: self.grad.add(delta_grad),
        }
    }

    /// u∗φ_ℓ; the linear part is unchanged by convolution.
    pub fn mollify(&self, ell: T) -> Result<Self> {
        let per = mollify(&self.periodic_part(), ell)?;
        Self::from_parts(self.linear.clone(), &per)
    }

    pub fn scale(&self, s: T) -> Self {
        ImmersionField {
            d: self.d,
            linear: self.linear.iter().map(|&v| v * s).collect(),
            values: self.values.scale(s),
            grad: self.grad.scale(s),
        }
    }

    /// Second derivatives ∂_a∂_b u (component `(r * n + a) * n + b`).
    pub fn hessian(&self) -> Field<T> {
        let n = self.n();
        // The linear part has zero second derivatives, so differentiate the
        // periodic Jacobian directly.
        let mut g = self.grad.clone();
        g.data.par_chunks_mut(self.d * n).for_each(|c| {
            for (v, l) in c.iter_mut().zip(&self.linear) {
                *v = *v - *l;
            }
        });
        gradient(&g)
    }

    /// max over points of the Euclidean norm of the Hessian, one axis at a
    /// time so the full Hessian is never held.
    pub fn hessian_sup(&self) -> T {
        let n = self.n();
        let dn = self.d * n;
        let mut g = self.grad.clone();
        g.data.par_chunks_mut(dn).for_each(|c| {
            for (v, l) in c.iter_mut().zip(&self.linear) {
                *v = *v - *l;
            }
        });
        let mut acc = vec![T::zero(); g.npts()];
        for a in 0..n {
            let da = differentiate(&g, a, Scheme::Spectral);
            acc.par_iter_mut().zip(da.data.par_chunks(dn)).for_each(|(s, c)| {
                *s = *s + c.iter().fold(T::zero(), |t, &x| t + x * x);
            });
        }
        acc.into_par_iter().reduce(T::zero, T::max).sqrt()
    }

    /// Central-difference Jacobian, for cross-checks of the spectral cache.
    pub fn jacobian_central4(&self) -> Field<T> {
        let n = self.n();
        let per = self.periodic_part();
        let mut out = Field::zeros(self.domain(), self.d * n);
        for a in 0..n {
            let da = differentiate(&per, a, Scheme::Central4);
            for p in 0..out.npts() {
                for r in 0..self.d {
                    out.data[p * self.d * n + r * n + a] = da.data[p * self.d + r] + self.linear[r * n + a];
                }
            }
        }
        out
    }

    /// Smallest singular value of the Jacobian over the grid.
    pub fn min_singular_value(&self) -> T {
        pullback_metric(self).min_eigenvalue().max(T::zero()).sqrt()
    }

    pub fn cast<U: Real>(&self) -> ImmersionField<U> {
        ImmersionField {
            d: self.d,
            linear: self.linear.iter().map(|&v| lit(crate::scalar::f64_of(v))).collect(),
            values: self.values.cast(),
            grad: self.grad.cast(),
        }
    }
}

/// (∇u)ᵀ∇u at every point.
pub fn pullback_metric<T: Real>(u: &ImmersionField<T>) -> MetricField<T> {
    let n = u.n();
    let d = u.d;
    let mut out = Field::zeros(u.domain(), n * n);
    out.data.par_chunks_mut(n * n).enumerate().for_each(|(p, m)| {
        let j = u.jacobian(p);
        for a in 0..n {
            for b in a..n {
                let s = (0..d).fold(T::zero(), |s, r| s + j[r * n + a] * j[r * n + b]);
                m[a * n + b] = s;
                m[b * n + a] = s;
            }
        }
    });
    out
}

/// g − u^♯e.
pub fn deficit<T: Real>(g: &MetricField<T>, u: &ImmersionField<T>) -> Result<MetricField<T>> {
    let n = u.n();
    if g.ncomp != n * n || g.npts() != u.values.npts() {
        return Err(Error::DimensionMismatch("metric and immersion grids differ".into()));
    }
    Ok(g.sub(&pullback_metric(u)))
}
