//! One-dimensional oscillatory profiles: the Kuiper corrugation pair Γ with
//! its amplitude function f(s), and trigonometric periodic profiles with
//! exact primitives.
//!
//! Tables are built and stored in f64 whatever scalar type the caller uses;
//! evaluation converts at the boundary.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::scalar::{f64_of, lit, Real};

/// First positive zero of J₀.
pub const J0_FIRST_ZERO: f64 = 2.404_825_557_695_773;

/// Quadrature nodes for the mean integrals below; the integrands are
/// entire and periodic, so the trapezoid rule converges geometrically.
const QUAD_NODES: usize = 128;

/// ⨍ cos(x sin t) dt = J₀(x), by the periodic trapezoid rule.
pub fn bessel_j0(x: f64) -> f64 {
    (0..QUAD_NODES).map(|k| (x * (TAU * k as f64 / QUAD_NODES as f64).sin()).cos()).sum::<f64>() / QUAD_NODES as f64
}

/// ⨍ sin(x sin t) sin t dt = J₁(x).
pub fn bessel_j1(x: f64) -> f64 {
    (0..QUAD_NODES)
        .map(|k| {
            let st = (TAU * k as f64 / QUAD_NODES as f64).sin();
            (x * st).sin() * st
        })
        .sum::<f64>()
        / QUAD_NODES as f64
}

/// F(s, r) = ⨍cos(√r sin t)dt − (1+s²)^{−1/2}.
pub fn implicit_residual(s: f64, r: f64) -> f64 {
    bessel_j0(r.max(0.0).sqrt()) - 1.0 / (1.0 + s * s).sqrt()
}

/// Root r of F(s, ·) in [0, j₀,₁²] by bisection. F(s, ·) is decreasing
/// there, positive at 0 and negative at j₀,₁².
fn bracketed_root(s: f64) -> Result<f64> {
    let (mut lo, mut hi) = (0.0, J0_FIRST_ZERO * J0_FIRST_ZERO);
    if implicit_residual(s, hi) >= 0.0 {
        return Err(Error::ProfileRange(format!("no bracketed root of F({s}, r) below the first zero of J0")));
    }
    if implicit_residual(s, lo) <= 0.0 {
        return Ok(0.0);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if implicit_residual(s, mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The s range scanned for a bracketed root before halving.
pub const S_SCAN_CAP: f64 = 2.0;

/// Largest s on a scan of [0, S_SCAN_CAP] where the bracket holds, halved.
pub fn empirical_s_max() -> f64 {
    let steps = 200;
    let mut last = 0.0;
    for k in 1..=steps {
        let s = S_SCAN_CAP * k as f64 / steps as f64;
        if bracketed_root(s).is_err() {
            break;
        }
        last = s;
    }
    0.5 * last
}

/// f(s) for s ∈ [0, s_max].
pub fn solve_f(s: f64, s_max: f64) -> Result<f64> {
    if !(0.0..=s_max).contains(&s) {
        return Err(Error::Domain(format!("s = {s} outside [0, {s_max}]")));
    }
    bracketed_root(s)
}

/// κ(s) = f'(s)/(2√f(s)) = s(1+s²)^{−3/2}/J₁(√f), with its limit √2 at 0.
fn kappa(s: f64, f: f64) -> f64 {
    if s == 0.0 || f == 0.0 {
        return 2f64.sqrt();
    }
    s * (1.0 + s * s).powf(-1.5) / bessel_j1(f.sqrt())
}

/// Zero-mean spectral primitive of periodic samples on [0, 2π), shifted to
/// vanish at t = 0. Returns the primitive and the discarded mean.
fn periodic_primitive(samples: &[f64]) -> (Vec<f64>, f64) {
    let m = samples.len();
    let mut planner = FftPlanner::<f64>::new();
    let mut buf: Vec<Complex<f64>> = samples.iter().map(|&v| Complex::new(v, 0.0)).collect();
    planner.plan_fft_forward(m).process(&mut buf);
    let mean = buf[0].re / m as f64;
    buf[0] = Complex::new(0.0, 0.0);
    for (k, c) in buf.iter_mut().enumerate().skip(1) {
        if k == m / 2 {
            *c = Complex::new(0.0, 0.0);
            continue;
        }
        let w = if k < m / 2 { k as f64 } else { k as f64 - m as f64 };
        *c = *c * Complex::new(0.0, -1.0 / w);
    }
    planner.plan_fft_inverse(m).process(&mut buf);
    let out: Vec<f64> = buf.iter().map(|c| c.re / m as f64).collect();
    let off = out[0];
    (out.iter().map(|v| v - off).collect(), mean)
}

/// Values of the corrugation pair and its first derivatives at one (s, t).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ProfileValue<T> {
    pub g1: T,
    pub g2: T,
    pub dt1: T,
    pub dt2: T,
    pub ds1: T,
    pub ds2: T,
}

/// Measured constants of |∂_t^i Γ₁| ≤ C s², |∂_t^i Γ₂| ≤ C s, i = 0, 1, 2.
#[derive(Clone, Debug, PartialEq)]
pub struct ProfileBounds {
    pub gamma1: [f64; 3],
    pub gamma2: [f64; 3],
}

/// Tabulated Kuiper corrugation Γ = (Γ₁, Γ₂) on [0, s_max] × [0, 2π).
#[derive(Clone, Debug)]
pub struct CorrugationProfile {
    pub s_max: f64,
    pub s_samples: usize,
    pub t_samples: usize,
    pub f: Vec<f64>,
    /// Row-major [s][t] tables.
    g1: Vec<f64>,
    g2: Vec<f64>,
    dt1: Vec<f64>,
    dt2: Vec<f64>,
    ds1: Vec<f64>,
    ds2: Vec<f64>,
    /// Mean of the Γ₁ integrand per s row (zero up to root-finder error).
    pub drift: Vec<f64>,
}

impl CorrugationProfile {
    pub fn build(s_max: f64, s_samples: usize, t_samples: usize) -> Result<Self> {
        if s_samples < 64 || t_samples < 64 {
            return Err(Error::Precondition(format!(
                "profile tables need >= 64 samples per axis, got {s_samples} x {t_samples}"
            )));
        }
        if !(s_max > 0.0) {
            return Err(Error::Precondition(format!("s_max = {s_max} must be positive")));
        }
        let ds = s_max / (s_samples - 1) as f64;
        let mut prof = CorrugationProfile {
            s_max,
            s_samples,
            t_samples,
            f: Vec::with_capacity(s_samples),
            g1: Vec::with_capacity(s_samples * t_samples),
            g2: Vec::with_capacity(s_samples * t_samples),
            dt1: Vec::with_capacity(s_samples * t_samples),
            dt2: Vec::with_capacity(s_samples * t_samples),
            ds1: Vec::with_capacity(s_samples * t_samples),
            ds2: Vec::with_capacity(s_samples * t_samples),
            drift: Vec::with_capacity(s_samples),
        };
        let sin_t: Vec<f64> = (0..t_samples).map(|k| (TAU * k as f64 / t_samples as f64).sin()).collect();
        for i in 0..s_samples {
            let s = (i as f64 * ds).min(s_max);
            let f = bracketed_root(s)?;
            let q = f.sqrt();
            let amp = (1.0 + s * s).sqrt();
            let kap = kappa(s, f);
            let row_dt1: Vec<f64> = sin_t.iter().map(|&st| amp * (q * st).cos() - 1.0).collect();
            let row_dt2: Vec<f64> = sin_t.iter().map(|&st| amp * (q * st).sin()).collect();
            let row_ds1: Vec<f64> =
                sin_t.iter().map(|&st| s / amp * (q * st).cos() - amp * kap * st * (q * st).sin()).collect();
            let row_ds2: Vec<f64> =
                sin_t.iter().map(|&st| s / amp * (q * st).sin() + amp * kap * st * (q * st).cos()).collect();
            let (p1, drift) = periodic_primitive(&row_dt1);
            let (p2, _) = periodic_primitive(&row_dt2);
            let (q1, _) = periodic_primitive(&row_ds1);
            let (q2, _) = periodic_primitive(&row_ds2);
            prof.f.push(f);
            prof.drift.push(drift);
            prof.g1.extend(p1);
            prof.g2.extend(p2);
            prof.dt1.extend(row_dt1);
            prof.dt2.extend(row_dt2);
            prof.ds1.extend(q1);
            prof.ds2.extend(q2);
        }
        Ok(prof)
    }

    /// Profile on [0, empirical_s_max()] with 129 × 256 tables.
    pub fn standard() -> Result<Self> {
        Self::build(empirical_s_max(), 129, 256)
    }

    pub fn s_node(&self, i: usize) -> f64 {
        self.s_max * i as f64 / (self.s_samples - 1) as f64
    }

    pub fn t_node(&self, k: usize) -> f64 {
        TAU * k as f64 / self.t_samples as f64
    }

    fn at(&self, table: &[f64], i: usize, k: usize) -> f64 {
        table[i * self.t_samples + k % self.t_samples]
    }

    /// Four s-nodes around s and their Lagrange weights.
    fn s_stencil(&self, s: f64) -> ([usize; 4], [f64; 4]) {
        let ds = self.s_max / (self.s_samples - 1) as f64;
        let x = s / ds;
        let base = (x.floor() as isize - 1).clamp(0, self.s_samples as isize - 4) as usize;
        let nodes = [base, base + 1, base + 2, base + 3];
        let mut w = [1.0; 4];
        for a in 0..4 {
            for b in 0..4 {
                if a != b {
                    w[a] *= (x - nodes[b] as f64) / (nodes[a] as f64 - nodes[b] as f64);
                }
            }
        }
        (nodes, w)
    }

    /// f(s) by cubic interpolation of the table.
    pub fn f_at(&self, s: f64) -> f64 {
        let (nodes, w) = self.s_stencil(s);
        (0..4).map(|a| w[a] * self.f[nodes[a]]).sum::<f64>().max(0.0)
    }

    /// Hermite cubic in t of a table with its t-derivative table.
    fn hermite(&self, val: &[f64], der: &[f64], i: usize, t: f64) -> f64 {
        let h = TAU / self.t_samples as f64;
        let tt = t.rem_euclid(TAU) / h;
        let k = (tt.floor() as usize).min(self.t_samples - 1);
        let u = tt - k as f64;
        let (y0, y1) = (self.at(val, i, k), self.at(val, i, k + 1));
        let (m0, m1) = (self.at(der, i, k) * h, self.at(der, i, k + 1) * h);
        let u2 = u * u;
        let u3 = u2 * u;
        (2.0 * u3 - 3.0 * u2 + 1.0) * y0 + (u3 - 2.0 * u2 + u) * m0 + (-2.0 * u3 + 3.0 * u2) * y1 + (u3 - u2) * m1
    }

    /// Linear interpolation in t of a table without derivative data.
    fn linear_t(&self, val: &[f64], i: usize, t: f64) -> f64 {
        let h = TAU / self.t_samples as f64;
        let tt = t.rem_euclid(TAU) / h;
        let k = (tt.floor() as usize).min(self.t_samples - 1);
        let u = tt - k as f64;
        (1.0 - u) * self.at(val, i, k) + u * self.at(val, i, k + 1)
    }

    /// Γ and its derivatives at (s, t). ∂_tΓ is evaluated in closed form
    /// from the interpolated f(s), so the corrugation identity holds to
    /// rounding; Γ itself comes from the tables.
    pub fn eval<T: Real>(&self, s: T, t: T) -> Result<ProfileValue<T>> {
        let (s, t) = (f64_of(s), f64_of(t));
        if !(0.0..=self.s_max * (1.0 + 1e-12)).contains(&s) {
            return Err(Error::CorrugationRange(format!("amplitude {s} outside [0, {}]", self.s_max)));
        }
        Ok(self.eval_unchecked(s, t).cast())
    }

    pub(crate) fn eval_unchecked(&self, s: f64, t: f64) -> ProfileValue<f64> {
        let (nodes, w) = self.s_stencil(s);
        let mut v = ProfileValue::default();
        for a in 0..4 {
            let i = nodes[a];
            v.g1 += w[a] * self.hermite(&self.g1, &self.dt1, i, t);
            v.g2 += w[a] * self.hermite(&self.g2, &self.dt2, i, t);
            v.ds1 += w[a] * self.linear_t(&self.ds1, i, t);
            v.ds2 += w[a] * self.linear_t(&self.ds2, i, t);
        }
        let f = self.f_at(s);
        let amp = (1.0 + s * s).sqrt();
        let st = t.sin();
        v.dt1 = amp * (f.sqrt() * st).cos() - 1.0;
        v.dt2 = amp * (f.sqrt() * st).sin();
        v
    }

    /// max over table nodes of |(1+∂_tΓ₁)² + (∂_tΓ₂)² − (1+s²)|.
    pub fn identity_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.s_samples {
            let s = self.s_node(i);
            for k in 0..self.t_samples {
                let a = 1.0 + self.at(&self.dt1, i, k);
                let b = self.at(&self.dt2, i, k);
                worst = worst.max((a * a + b * b - (1.0 + s * s)).abs());
            }
        }
        worst
    }

    /// Table value of Γ at node (i, k), for tests.
    pub fn node(&self, i: usize, k: usize) -> ProfileValue<f64> {
        ProfileValue {
            g1: self.at(&self.g1, i, k),
            g2: self.at(&self.g2, i, k),
            dt1: self.at(&self.dt1, i, k),
            dt2: self.at(&self.dt2, i, k),
            ds1: self.at(&self.ds1, i, k),
            ds2: self.at(&self.ds2, i, k),
        }
    }

    /// Measured constants of the small-amplitude bounds over the s grid
    /// (s > 0 rows only).
    pub fn bounds(&self) -> ProfileBounds {
        let mut b = ProfileBounds { gamma1: [0.0; 3], gamma2: [0.0; 3] };
        for i in 1..self.s_samples {
            let s = self.s_node(i);
            let q = self.f[i].sqrt();
            let amp = (1.0 + s * s).sqrt();
            for k in 0..self.t_samples {
                let t = self.t_node(k);
                let st = t.sin();
                let d2_1 = -amp * (q * st).sin() * q * t.cos();
                let d2_2 = amp * (q * st).cos() * q * t.cos();
                let g1 = [self.at(&self.g1, i, k), self.at(&self.dt1, i, k), d2_1];
                let g2 = [self.at(&self.g2, i, k), self.at(&self.dt2, i, k), d2_2];
                for j in 0..3 {
                    b.gamma1[j] = b.gamma1[j].max(g1[j].abs() / (s * s));
                    b.gamma2[j] = b.gamma2[j].max(g2[j].abs() / s);
                }
            }
        }
        b
    }

    /// CSV of (s, f(s)).
    pub fn f_csv(&self) -> String {
        let mut out = String::from("s,f\n");
        for i in 0..self.s_samples {
            let _ = writeln!(out, "{:.12e},{:.12e}", self.s_node(i), self.f[i]);
        }
        out
    }

    /// CSV of the Γ tables.
    pub fn gamma_csv(&self) -> String {
        let mut out = String::from("s,t,gamma1,gamma2,dt_gamma1,dt_gamma2\n");
        for i in 0..self.s_samples {
            for k in 0..self.t_samples {
                let v = self.node(i, k);
                let _ = writeln!(
                    out,
                    "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
                    self.s_node(i),
                    self.t_node(k),
                    v.g1,
                    v.g2,
                    v.dt1,
                    v.dt2
                );
            }
        }
        out
    }
}

impl ProfileValue<f64> {
    fn cast<T: Real>(self) -> ProfileValue<T> {
        ProfileValue {
            g1: lit(self.g1),
            g2: lit(self.g2),
            dt1: lit(self.dt1),
            dt2: lit(self.dt2),
            ds1: lit(self.ds1),
            ds2: lit(self.ds2),
        }
    }
}

/// Zero-mean test for [`PeriodicProfile::primitive`].
pub const MEAN_TOL: f64 = 1e-12;

/// A 2π-periodic trigonometric polynomial
/// γ(t) = c₀ + Σ_k (a_k cos kt + b_k sin kt).
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicProfile {
    pub mean: f64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl PeriodicProfile {
    pub fn new(mean: f64, cos: Vec<f64>, sin: Vec<f64>) -> Self {
        let k = cos.len().max(sin.len());
        let mut cos = cos;
        let mut sin = sin;
        cos.resize(k, 0.0);
        sin.resize(k, 0.0);
        PeriodicProfile { mean, cos, sin }
    }

    pub fn sin() -> Self {
        Self::new(0.0, vec![0.0], vec![1.0])
    }

    pub fn cos() -> Self {
        Self::new(0.0, vec![1.0], vec![0.0])
    }

    /// Interpolating polynomial of samples at t_k = 2πk/m (m even); the
    /// Nyquist mode is dropped.
    pub fn from_samples(samples: &[f64]) -> Self {
        let m = samples.len();
        let mut buf: Vec<Complex<f64>> = samples.iter().map(|&v| Complex::new(v, 0.0)).collect();
        FftPlanner::<f64>::new().plan_fft_forward(m).process(&mut buf);
        let kmax = (m - 1) / 2;
        let cos = (1..=kmax).map(|k| 2.0 * buf[k].re / m as f64).collect();
        let sin = (1..=kmax).map(|k| -2.0 * buf[k].im / m as f64).collect();
        Self::new(buf[0].re / m as f64, cos, sin)
    }

    pub fn modes(&self) -> usize {
        self.cos.len()
    }

    pub fn is_zero_mean(&self) -> bool {
        self.mean.abs() <= MEAN_TOL
    }

    pub fn eval(&self, t: f64) -> f64 {
        let mut v = self.mean;
        for k in 0..self.modes() {
            let kt = (k + 1) as f64 * t;
            v += self.cos[k] * kt.cos() + self.sin[k] * kt.sin();
        }
        v
    }

    /// Evaluates on a slice of phases.
    pub fn eval_many<T: Real>(&self, t: &[T]) -> Vec<T> {
        if self.modes() == 1 && self.mean == 0.0 {
            let (a, b) = (self.cos[0], self.sin[0]);
            return t.iter().map(|&x| x.cos() * lit(a) + x.sin() * lit(b)).collect();
        }
        t.iter().map(|&x| lit(self.eval(f64_of(x)))).collect()
    }

    pub fn derivative(&self) -> Self {
        let cos = (0..self.modes()).map(|k| (k + 1) as f64 * self.sin[k]).collect();
        let sin = (0..self.modes()).map(|k| -((k + 1) as f64) * self.cos[k]).collect();
        Self::new(0.0, cos, sin)
    }

    /// The zero-mean antiderivative.
    pub fn primitive(&self) -> Result<Self> {
        if !self.is_zero_mean() {
            return Err(Error::NotIntegrable(self.mean));
        }
        let cos = (0..self.modes()).map(|k| -self.sin[k] / (k + 1) as f64).collect();
        let sin = (0..self.modes()).map(|k| self.cos[k] / (k + 1) as f64).collect();
        Ok(Self::new(0.0, cos, sin))
    }

    /// Trapezoid mean over one period with `m` nodes.
    pub fn sampled_mean(&self, m: usize) -> f64 {
        (0..m).map(|k| self.eval(2.0 * PI * k as f64 / m as f64)).sum::<f64>() / m as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bessel_quadrature_matches_series() {
        // J0(1) and J1(1) to 15 digits
        assert!((bessel_j0(1.0) - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((bessel_j1(1.0) - 0.440_050_585_744_933_5).abs() < 1e-15);
        assert!(bessel_j0(J0_FIRST_ZERO).abs() < 1e-15);
    }

    #[test]
    fn kappa_limit_is_continuous() {
        let s = 1e-4;
        let f = bracketed_root(s).unwrap();
        assert!((kappa(s, f) - 2f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn primitive_of_sampled_profile_is_exact() {
        let samples: Vec<f64> = (0..32).map(|k| (3.0 * TAU * k as f64 / 32.0).cos()).collect();
        let p = PeriodicProfile::from_samples(&samples);
        assert!((p.cos[2] - 1.0).abs() < 1e-14);
        let q = p.primitive().unwrap();
        assert!((q.sin[2] - 1.0 / 3.0).abs() < 1e-14);
    }
}
