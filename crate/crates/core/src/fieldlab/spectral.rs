//! FFT plumbing: per-axis transforms, spectral and fourth-order derivatives.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::field::Field;
use super::grid::GridDomain;
use crate::scalar::{lit, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    Spectral,
    Central4,
}

struct Plans<T: Real> {
    fwd: Arc<dyn Fft<T>>,
    inv: Arc<dyn Fft<T>>,
}

fn plans<T: Real>(len: usize) -> Plans<T> {
    let mut planner = FftPlanner::new();
    Plans { fwd: planner.plan_fft_forward(len), inv: planner.plan_fft_inverse(len) }
}

/// Transforms `buf` (one complex value per grid point) along one axis.
fn fft_axis<T: Real>(dom: &GridDomain<T>, buf: &mut [Complex<T>], axis: usize, plan: &Arc<dyn Fft<T>>) {
    let m = dom.points_per_axis;
    let s = dom.stride(axis);
    if s == 1 {
        plan.process(buf);
        return;
    }
    let npts = buf.len();
    let mut lines = vec![Complex::new(T::zero(), T::zero()); npts];
    let blocks = npts / (m * s);
    let mut l = 0;
    for b in 0..blocks {
        for inner in 0..s {
            let base = b * m * s + inner;
            for k in 0..m {
                lines[l * m + k] = buf[base + k * s];
            }
            l += 1;
        }
    }
    plan.process(&mut lines);
    l = 0;
    for b in 0..blocks {
        for inner in 0..s {
            let base = b * m * s + inner;
            for k in 0..m {
                buf[base + k * s] = lines[l * m + k];
            }
            l += 1;
        }
    }
}

/// Multiplies the axis spectrum by `mult(bin)` and transforms back.
fn axis_multiplier<T: Real>(
    dom: &GridDomain<T>,
    values: &[T],
    axis: usize,
    mult: impl Fn(usize) -> Complex<T>,
) -> Vec<T> {
    let m = dom.points_per_axis;
    let p = plans::<T>(m);
    let mut buf: Vec<Complex<T>> = values.iter().map(|&v| Complex::new(v, T::zero())).collect();
    fft_axis(dom, &mut buf, axis, &p.fwd);
    let s = dom.stride(axis);
    let factors: Vec<Complex<T>> = (0..m).map(&mult).collect();
    for (q, v) in buf.iter_mut().enumerate() {
        *v = *v * factors[(q / s) % m];
    }
    fft_axis(dom, &mut buf, axis, &p.inv);
    let inv = T::one() / lit(m as f64);
    buf.iter().map(|c| c.re * inv).collect()
}

fn spectral_derivative_values<T: Real>(dom: &GridDomain<T>, values: &[T], axis: usize) -> Vec<T> {
    axis_multiplier(dom, values, axis, |k| match dom.wavenumber(k) {
        Some(w) => Complex::new(T::zero(), w),
        None => Complex::new(T::zero(), T::zero()),
    })
}

fn central4_values<T: Real>(dom: &GridDomain<T>, values: &[T], axis: usize) -> Vec<T> {
    let c = T::one() / (lit::<T>(12.0) * dom.spacing);
    (0..values.len())
        .map(|p| {
            let f = |k| values[dom.shifted(p, axis, k)];
            (f(-2) - lit::<T>(8.0) * f(-1) + lit::<T>(8.0) * f(1) - f(2)) * c
        })
        .collect()
}

/// ∂f/∂x_axis (axis is 0-based) for every component.
pub fn differentiate<T: Real>(f: &Field<T>, axis: usize, scheme: Scheme) -> Field<T> {
    assert!(axis < f.domain.n, "axis out of range");
    let mut out = Field::zeros(&f.domain, f.ncomp);
    for c in 0..f.ncomp {
        let comp = f.component(c);
        let d = match scheme {
            Scheme::Spectral => spectral_derivative_values(&f.domain, &comp, axis),
            Scheme::Central4 => central4_values(&f.domain, &comp, axis),
        };
        out.set_component(c, &d);
    }
    out
}

/// Spectral gradient: component `c * n + a` holds ∂_a f_c.
pub fn gradient<T: Real>(f: &Field<T>) -> Field<T> {
    let n = f.domain.n;
    let mut out = Field::zeros(&f.domain, f.ncomp * n);
    for c in 0..f.ncomp {
        let comp = f.component(c);
        for a in 0..n {
            out.set_component(c * n + a, &spectral_derivative_values(&f.domain, &comp, a));
        }
    }
    out
}

/// Zero-mean antiderivative along an axis (the mean is discarded).
pub fn integrate_axis<T: Real>(f: &Field<T>, axis: usize) -> Field<T> {
    let dom = &f.domain;
    let mut out = Field::zeros(dom, f.ncomp);
    for c in 0..f.ncomp {
        let comp = f.component(c);
        let v = axis_multiplier(dom, &comp, axis, |k| match dom.wavenumber(k) {
            Some(w) if w != T::zero() => Complex::new(T::zero(), -T::one() / w),
            _ => Complex::new(T::zero(), T::zero()),
        });
        out.set_component(c, &v);
    }
    out
}

/// Full n-dimensional forward transform of real data.
pub(crate) fn fft_nd<T: Real>(dom: &GridDomain<T>, values: &[T]) -> Vec<Complex<T>> {
    let p = plans::<T>(dom.points_per_axis);
    let mut buf: Vec<Complex<T>> = values.iter().map(|&v| Complex::new(v, T::zero())).collect();
    for a in 0..dom.n {
        fft_axis(dom, &mut buf, a, &p.fwd);
    }
    buf
}

/// Inverse of [`fft_nd`], returning the (normalised) real part.
pub(crate) fn ifft_nd_real<T: Real>(dom: &GridDomain<T>, mut buf: Vec<Complex<T>>) -> Vec<T> {
    let p = plans::<T>(dom.points_per_axis);
    for a in 0..dom.n {
        fft_axis(dom, &mut buf, a, &p.inv);
    }
    let inv = T::one() / lit(dom.npts() as f64);
    buf.iter().map(|c| c.re * inv).collect()
}
