use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Uniform periodic grid on the cube [0, period)^n. Axis 0 varies slowest.
#[derive(Clone, Debug, PartialEq)]
pub struct GridDomain<T> {
    pub n: usize,
    pub period: T,
    pub points_per_axis: usize,
    pub spacing: T,
}

impl<T: Real> GridDomain<T> {
    pub fn new(n: usize, points_per_axis: usize, period: T) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidDimension("grid needs n >= 1".into()));
        }
        if points_per_axis < 8 || !points_per_axis.is_power_of_two() {
            return Err(Error::Precondition(format!(
                "points_per_axis = {points_per_axis}, need a power of two >= 8"
            )));
        }
        if !(period > T::zero()) || !period.is_finite() {
            return Err(Error::Precondition(format!("period = {period} must be positive")));
        }
        let spacing = period / lit(points_per_axis as f64);
        Ok(GridDomain { n, period, points_per_axis, spacing })
    }

    pub fn npts(&self) -> usize {
        self.points_per_axis.pow(self.n as u32)
    }

    /// Distance in flat index between neighbours along `axis`.
    #[inline]
    pub fn stride(&self, axis: usize) -> usize {
        self.points_per_axis.pow((self.n - 1 - axis) as u32)
    }

    #[inline]
    pub fn multi_index(&self, mut p: usize, idx: &mut [usize]) {
        let m = self.points_per_axis;
        for a in (0..self.n).rev() {
            idx[a] = p % m;
            p /= m;
        }
    }

    #[inline]
    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.points_per_axis + i)
    }

    /// Index along `axis` of flat point `p`.
    #[inline]
    pub fn axis_index(&self, p: usize, axis: usize) -> usize {
        (p / self.stride(axis)) % self.points_per_axis
    }

    /// Flat index of the point `k` steps from `p` along `axis`, wrapped.
    #[inline]
    pub fn shifted(&self, p: usize, axis: usize, k: isize) -> usize {
        let m = self.points_per_axis as isize;
        let s = self.stride(axis);
        let i = self.axis_index(p, axis) as isize;
        let j = (i + k).rem_euclid(m);
        (p as isize + (j - i) * s as isize) as usize
    }

    pub fn coords(&self, p: usize, x: &mut [T]) {
        let mut idx = vec![0; self.n];
        self.multi_index(p, &mut idx);
        for a in 0..self.n {
            x[a] = lit::<T>(idx[a] as f64) * self.spacing;
        }
    }

    /// Angular wavenumber of FFT bin `k`; `None` for the Nyquist bin.
    pub fn wavenumber(&self, k: usize) -> Option<T> {
        let m = self.points_per_axis;
        let base = T::TAU() / self.period;
        if k == m / 2 {
            None
        } else if k < m / 2 {
            Some(base * lit(k as f64))
        } else {
            Some(base * lit(k as f64 - m as f64))
        }
    }

    /// λ·spacing ≤ π/4.
    pub fn check_nyquist(&self, lambda: T) -> Result<()> {
        let product = lambda * self.spacing;
        if product > T::FRAC_PI_4() * lit(1.0 + 1e-12) {
            return Err(Error::Nyquist { lambda: crate::scalar::f64_of(lambda), product: crate::scalar::f64_of(product) });
        }
        Ok(())
    }

    /// Frequency of the plane wave exp(i·2πm q·x/period) along q/|q|.
    pub fn lattice_frequency(&self, q: &[i64], m: i64) -> T {
        let qn = q.iter().map(|&v| (v * v) as f64).sum::<f64>().sqrt();
        T::TAU() * lit(m as f64 * qn) / self.period
    }

    /// Nearest lattice multiple (at least 1) for a requested frequency along q.
    pub fn snap_frequency(&self, q: &[i64], lambda: T) -> (i64, T) {
        let unit = self.lattice_frequency(q, 1);
        let m = crate::scalar::f64_of(lambda / unit).round().max(1.0) as i64;
        (m, self.lattice_frequency(q, m))
    }

    /// Phases λ x·q/|q| (mod 2π) for λ = lattice_frequency(q, m), evaluated
    /// with integer arithmetic so that they are exact on the grid.
    pub fn lattice_phase(&self, q: &[i64], m: i64) -> Vec<T> {
        let nn = self.points_per_axis as i64;
        let mut idx = vec![0; self.n];
        let scale = T::TAU() / lit(nn as f64);
        (0..self.npts())
            .map(|p| {
                self.multi_index(p, &mut idx);
                let dot: i64 = idx.iter().zip(q).map(|(&i, &qa)| i as i64 * qa).sum();
                scale * lit(((m * dot).rem_euclid(nn)) as f64)
            })
            .collect()
    }
}
