use super::field::Field;
use super::grid::GridDomain;
use super::spectral::{fft_nd, ifft_nd_real};
use crate::error::{Error, Result};
use crate::scalar::{f64_of, lit, Real};

/// Bump kernel exp(−1/(1−|x/ℓ|²)) on wrapped grid offsets, normalised so its
/// samples sum to one. Below one grid spacing it degenerates to a delta.
pub fn kernel<T: Real>(dom: &GridDomain<T>, ell: T) -> Result<Vec<T>> {
    if !(ell > T::zero()) {
        return Err(Error::Precondition(format!("mollifier radius {ell} must be positive")));
    }
    if ell >= dom.period / lit(4.0) {
        return Err(Error::KernelOverlap { ell: f64_of(ell), period: f64_of(dom.period) });
    }
    let m = dom.points_per_axis;
    let mut idx = vec![0; dom.n];
    let mut w = vec![T::zero(); dom.npts()];
    let mut total = T::zero();
    for (p, wp) in w.iter_mut().enumerate() {
        dom.multi_index(p, &mut idx);
        let mut r2 = T::zero();
        for &i in &idx {
            let k = if i <= m / 2 { i as f64 } else { i as f64 - m as f64 };
            let x = lit::<T>(k) * dom.spacing / ell;
            r2 = r2 + x * x;
        }
        if r2 < T::one() {
            *wp = (-T::one() / (T::one() - r2)).exp();
            total = total + *wp;
        }
    }
    for v in &mut w {
        *v = *v / total;
    }
    Ok(w)
}

/// Periodic convolution f∗φ_ℓ of every component.
pub fn mollify<T: Real>(f: &Field<T>, ell: T) -> Result<Field<T>> {
    let dom = &f.domain;
    let k = kernel(dom, ell)?;
    if k[0] == T::one() {
        return Ok(f.clone());
    }
    let khat = fft_nd(dom, &k);
    let mut out = Field::zeros(dom, f.ncomp);
    for c in 0..f.ncomp {
        let mut spec = fft_nd(dom, &f.component(c));
        for (s, kh) in spec.iter_mut().zip(&khat) {
            *s = *s * *kh;
        }
        out.set_component(c, &ifft_nd_real(dom, spec));
    }
    Ok(out)
}
