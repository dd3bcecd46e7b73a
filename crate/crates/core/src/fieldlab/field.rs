use rayon::prelude::*;

use super::grid::GridDomain;
use crate::error::{Error, Result};
use crate::scalar::{lit, Real};
use crate::symcore::SymMatrix;

/// Samples of a map from the grid into R^ncomp, stored point-major:
/// `data[p * ncomp + c]`.
///
/// Scalar fields have one component, vector fields d, and metric fields n·n
/// (the full symmetric matrix, row-major).
#[derive(Clone, Debug, PartialEq)]
pub struct Field<T> {
    pub domain: GridDomain<T>,
    pub ncomp: usize,
    pub data: Vec<T>,
}

pub type ScalarField<T> = Field<T>;
pub type VectorField<T> = Field<T>;
pub type MetricField<T> = Field<T>;

impl<T: Real> Field<T> {
    pub fn zeros(domain: &GridDomain<T>, ncomp: usize) -> Self {
        Field { domain: domain.clone(), ncomp, data: vec![T::zero(); domain.npts() * ncomp] }
    }

    pub fn constant(domain: &GridDomain<T>, value: &[T]) -> Self {
        let data = (0..domain.npts()).flat_map(|_| value.iter().copied()).collect();
        Field { domain: domain.clone(), ncomp: value.len(), data }
    }

    pub fn from_data(domain: &GridDomain<T>, ncomp: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != domain.npts() * ncomp {
            return Err(Error::DimensionMismatch(format!(
                "{} samples for {} points x {} components",
                data.len(),
                domain.npts(),
                ncomp
            )));
        }
        Ok(Field { domain: domain.clone(), ncomp, data })
    }

    /// Samples `f(x, out)` at every grid point.
    pub fn from_fn(domain: &GridDomain<T>, ncomp: usize, f: impl Fn(&[T], &mut [T]) + Sync) -> Self {
        let mut data = vec![T::zero(); domain.npts() * ncomp];
        data.par_chunks_mut(ncomp).enumerate().for_each(|(p, out)| {
            let mut x = vec![T::zero(); domain.n];
            domain.coords(p, &mut x);
            f(&x, out);
        });
        Field { domain: domain.clone(), ncomp, data }
    }

    pub fn scalar_fn(domain: &GridDomain<T>, f: impl Fn(&[T]) -> T + Sync) -> Self {
        Self::from_fn(domain, 1, |x, o| o[0] = f(x))
    }

    /// Metric field from a function returning a full n×n row-major matrix,
    /// symmetrised on write.
    pub fn metric_fn(domain: &GridDomain<T>, f: impl Fn(&[T], &mut [T]) + Sync) -> Self {
        let n = domain.n;
        let mut out = Self::from_fn(domain, n * n, f);
        out.symmetrize();
        out
    }

    pub fn constant_metric(domain: &GridDomain<T>, m: &SymMatrix<T>) -> Self {
        Self::constant(domain, m.as_slice())
    }

    pub fn npts(&self) -> usize {
        self.domain.npts()
    }

    #[inline]
    pub fn at(&self, p: usize) -> &[T] {
        &self.data[p * self.ncomp..(p + 1) * self.ncomp]
    }

    #[inline]
    pub fn at_mut(&mut self, p: usize) -> &mut [T] {
        &mut self.data[p * self.ncomp..(p + 1) * self.ncomp]
    }

    pub fn component(&self, c: usize) -> Vec<T> {
        self.data.iter().skip(c).step_by(self.ncomp).copied().collect()
    }

    pub fn set_component(&mut self, c: usize, values: &[T]) {
        for (p, &v) in values.iter().enumerate() {
            self.data[p * self.ncomp + c] = v;
        }
    }

    /// Stacks fields with the same domain component-wise.
    pub fn stack(fields: &[&Field<T>]) -> Self {
        let dom = &fields[0].domain;
        let ncomp: usize = fields.iter().map(|f| f.ncomp).sum();
        let mut out = Self::zeros(dom, ncomp);
        for p in 0..dom.npts() {
            let mut c = 0;
            for f in fields {
                out.data[p * ncomp + c..p * ncomp + c + f.ncomp].copy_from_slice(f.at(p));
                c += f.ncomp;
            }
        }
        out
    }

    pub fn metric_at(&self, p: usize) -> SymMatrix<T> {
        SymMatrix::from_rows(self.domain.n, self.at(p))
    }

    pub fn symmetrize(&mut self) {
        let n = self.domain.n;
        assert_eq!(self.ncomp, n * n, "not a metric field");
        self.data.par_chunks_mut(n * n).for_each(|m| {
            for i in 0..n {
                for j in (i + 1)..n {
                    let v = (m[i * n + j] + m[j * n + i]) * lit(0.5);
                    m[i * n + j] = v;
                    m[j * n + i] = v;
                }
            }
        });
    }

    fn check_shape(&self, o: &Self) {
        assert_eq!(self.ncomp, o.ncomp, "component count mismatch");
        assert_eq!(self.data.len(), o.data.len(), "grid mismatch");
    }

    pub fn map(&self, f: impl Fn(T) -> T + Sync) -> Self {
        Field { domain: self.domain.clone(), ncomp: self.ncomp, data: self.data.par_iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, o: &Self, f: impl Fn(T, T) -> T + Sync) -> Self {
        self.check_shape(o);
        let data = self.data.par_iter().zip(o.data.par_iter()).map(|(&a, &b)| f(a, b)).collect();
        Field { domain: self.domain.clone(), ncomp: self.ncomp, data }
    }

    pub fn add(&self, o: &Self) -> Self {
        self.zip_map(o, |a, b| a + b)
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.zip_map(o, |a, b| a - b)
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|v| v * s)
    }

    /// self += s·o
    pub fn axpy(&mut self, s: T, o: &Self) {
        self.check_shape(o);
        self.data.par_iter_mut().zip(o.data.par_iter()).for_each(|(a, &b)| *a = *a + s * b);
    }

    /// Pointwise product with a scalar field.
    pub fn mul_scalar_field(&self, s: &Field<T>) -> Self {
        assert_eq!(s.ncomp, 1);
        let mut out = self.clone();
        out.data.par_chunks_mut(self.ncomp).zip(s.data.par_iter()).for_each(|(v, &w)| v.iter_mut().for_each(|x| *x = *x * w));
        out
    }

    /// Mean of every component over the grid.
    pub fn mean(&self) -> Vec<T> {
        let mut m = vec![T::zero(); self.ncomp];
        for p in 0..self.npts() {
            for (c, v) in self.at(p).iter().enumerate() {
                m[c] = m[c] + *v;
            }
        }
        let inv = T::one() / lit(self.npts() as f64);
        m.iter().map(|&v| v * inv).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Largest asymmetry |m_ij − m_ji| of a metric field.
    pub fn max_asymmetry(&self) -> T {
        let n = self.domain.n;
        self.data
            .chunks(n * n)
            .map(|m| {
                let mut s = T::zero();
                for i in 0..n {
                    for j in (i + 1)..n {
                        s = s.max(crate::scalar::abs(m[i * n + j] - m[j * n + i]));
                    }
                }
                s
            })
            .fold(T::zero(), T::max)
    }

    /// Minimum eigenvalue over the grid of a metric field.
    pub fn min_eigenvalue(&self) -> T {
        let n = self.domain.n;
        self.data
            .par_chunks(n * n)
            .map(|m| crate::linalg::sym_eigenvalues(m, n)[0])
            .reduce(T::infinity, T::min)
    }

    /// Converts between scalar types (used for f32 runs and snapshots).
    pub fn cast<U: Real>(&self) -> Field<U> {
        let domain = GridDomain {
            n: self.domain.n,
            period: lit(crate::scalar::f64_of(self.domain.period)),
            points_per_axis: self.domain.points_per_axis,
            spacing: lit(crate::scalar::f64_of(self.domain.spacing)),
        };
        Field { domain, ncomp: self.ncomp, data: self.data.iter().map(|&v| lit(crate::scalar::f64_of(v))).collect() }
    }
}
