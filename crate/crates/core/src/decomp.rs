//! Deficit decompositions: the Källén-type amplitude extraction, the
//! oscillatory reduction by repeated integration by parts, and the Newton
//! solve for the perturbed coefficient map of the even-dimensional scheme.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fieldlab::{gradient, metric_sup, seminorm, Field, MatrixNorm, MetricField, Scheme, ScalarField};
use crate::profiles::PeriodicProfile;
use crate::scalar::{lit, Real};
use crate::symcore::{packed_index, PhiSolver, PrimitiveBasis, SymMatrix};

/// Relative tolerance of the Newton step.
pub const NEWTON_TOL: f64 = 1e-12;
pub const NEWTON_MAX_ITER: usize = 50;

#[derive(Clone, Debug)]
pub struct KallenDecomposition<T> {
    pub j: usize,
    /// n_* amplitude components per point.
    pub amplitudes: Field<T>,
    pub residual: MetricField<T>,
    pub mu: Vec<T>,
    /// ‖h − h_*‖₀ + μ₀/μ₁, to be compared with 2σ₀.
    pub hypothesis_lhs: T,
    pub hypothesis_rhs: T,
    pub warnings: Vec<String>,
}

impl<T: Real> KallenDecomposition<T> {
    /// Amplitude a_i (1-based) as a scalar field.
    pub fn amplitude(&self, i: usize) -> ScalarField<T> {
        let mut f = Field::zeros(&self.amplitudes.domain, 1);
        f.data = self.amplitudes.component(i - 1);
        f
    }

    pub fn min_amplitude(&self) -> T {
        self.amplitudes.data.par_iter().cloned().reduce(T::infinity, T::min)
    }

    /// Σ a_i²ξ_i⊗ξ_i + Σ_{i≤n} μ_i⁻²∇a_i⊗∇a_i + E.
    pub fn reconstruct(&self, basis: &PrimitiveBasis<T>) -> MetricField<T> {
        let grads = gradient(&leading(&self.amplitudes, basis.n));
        let mut out = squares_in_basis(basis, &self.amplitudes);
        add_gradient_terms(&mut out, &grads, &self.mu, basis.n, T::one());
        out.add(&self.residual)
    }
}

/// First `k` components of a point-major field.
fn leading<T: Real>(f: &Field<T>, k: usize) -> Field<T> {
    let nc = f.ncomp;
    let mut out = Field::zeros(&f.domain, k);
    out.data.par_chunks_mut(k).enumerate().for_each(|(p, o)| o.copy_from_slice(&f.data[p * nc..p * nc + k]));
    out
}

/// Σ c_i ξ_i⊗ξ_i with c_i = a_i².
fn squares_in_basis<T: Real>(basis: &PrimitiveBasis<T>, a: &Field<T>) -> MetricField<T> {
    let n = basis.n;
    let ns = basis.n_star;
    let mut out = Field::zeros(&a.domain, n * n);
    out.data.par_chunks_mut(n * n).enumerate().for_each(|(p, m)| {
        let c: Vec<T> = a.at(p).iter().map(|&v| v * v).collect();
        debug_assert_eq!(c.len(), ns);
        basis.reconstruct_into(&c, m);
    });
    out
}

/// out += s·Σ_{i<n} μ_{i+1}⁻² ∇a_i⊗∇a_i, with grads holding component i*n+b.
fn add_gradient_terms<T: Real>(out: &mut MetricField<T>, grads: &Field<T>, mu: &[T], n: usize, s: T) {
    let w: Vec<T> = (0..n).map(|i| s / (mu[i + 1] * mu[i + 1])).collect();
    out.data.par_chunks_mut(n * n).enumerate().for_each(|(p, m)| {
        let g = grads.at(p);
        for i in 0..n {
            let gi = &g[i * n..(i + 1) * n];
            for a in 0..n {
                for b in 0..n {
                    m[a * n + b] = m[a * n + b] + w[i] * gi[a] * gi[b];
                }
            }
        }
    });
}

/// L(h) at every point; errors on a negative coefficient.
fn coefficients<T: Real>(basis: &PrimitiveBasis<T>, h: &MetricField<T>) -> Result<Field<T>> {
    let ns = basis.n_star;
    let nn = basis.n * basis.n;
    let mut out = Field::zeros(&h.domain, ns);
    out.data.par_chunks_mut(ns).enumerate().for_each(|(p, c)| basis.project_into(&h.data[p * nn..(p + 1) * nn], c));
    Ok(out)
}

fn sqrt_checked<T: Real>(c: Field<T>, what: &str) -> Result<Field<T>> {
    if let Some(pos) = c.data.par_iter().position_first(|&v| !(v >= T::zero())) {
        let (p, i) = (pos / c.ncomp, pos % c.ncomp + 1);
        return Err(Error::DecompositionFailure(format!("{what}: L_{i} = {} < 0 at grid point {p}", c.data[pos])));
    }
    Ok(c.map(|v| v.sqrt()))
}

fn check_frequencies<T: Real>(mu: &[T], n: usize) -> Result<()> {
    if mu.len() < n + 1 {
        return Err(Error::Precondition(format!("need frequencies mu_0..mu_{n}, got {}", mu.len())));
    }
    if !(mu[0] > T::zero()) || mu.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Precondition("frequencies must be positive and nondecreasing".into()));
    }
    Ok(())
}

/// Källén decomposition with the smallness hypothesis enforced.
pub fn kallen_decompose<T: Real>(
    basis: &PrimitiveBasis<T>,
    h: &MetricField<T>,
    mu: &[T],
    j: usize,
) -> Result<KallenDecomposition<T>> {
    let dec = kallen_decompose_unchecked(basis, h, mu, j)?;
    if dec.hypothesis_lhs > dec.hypothesis_rhs * lit(1.0 + 1e-12) {
        return Err(Error::DeficitTooLarge(format!(
            "|h - h*|_0 + mu0/mu1 = {} exceeds 2 sigma_0 = {}",
            dec.hypothesis_lhs, dec.hypothesis_rhs
        )));
    }
    Ok(dec)
}

/// Källén decomposition that records the hypothesis instead of enforcing
/// it. The amplitude floor and nonnegativity are still hard errors.
///
/// a⁽⁰⁾ = √L(h), then j+1 sweeps of a⁽ᵏ⁺¹⁾ = √L(h − Σ μ_i⁻²∇a_i⁽ᵏ⁾⊗∇a_i⁽ᵏ⁾);
/// E closes the identity for the last iterate.
pub fn kallen_decompose_unchecked<T: Real>(
    basis: &PrimitiveBasis<T>,
    h: &MetricField<T>,
    mu: &[T],
    j: usize,
) -> Result<KallenDecomposition<T>> {
    let dec = kallen_sweeps(basis, h, mu, j, false)?.0;
    let floor = basis.sigma_star.sqrt() * lit(0.5);
    let amin = dec.min_amplitude();
    if amin < floor {
        return Err(Error::AmplitudeFloor(format!("min amplitude {amin} below sqrt(sigma*)/2 = {floor}")));
    }
    Ok(dec)
}

/// As [`kallen_decompose_unchecked`], but negative L_i(·) samples are set to
/// zero and counted instead of failing, and the floor is only reported in
/// the warnings. Returns the number of clamped samples in the last sweep.
pub fn kallen_decompose_clamped<T: Real>(
    basis: &PrimitiveBasis<T>,
    h: &MetricField<T>,
    mu: &[T],
    j: usize,
) -> Result<(KallenDecomposition<T>, usize)> {
    let (mut dec, clamped) = kallen_sweeps(basis, h, mu, j, true)?;
    let floor = basis.sigma_star.sqrt() * lit(0.5);
    let amin = dec.min_amplitude();
    if amin < floor {
        dec.warnings.push(format!("min amplitude {amin} below sqrt(sigma*)/2 = {floor}"));
    }
    Ok((dec, clamped))
}

fn sqrt_clamped<T: Real>(c: Field<T>) -> (Field<T>, usize) {
    let neg = c.data.par_iter().filter(|&&v| !(v >= T::zero())).count();
    (c.map(|v| if v >= T::zero() { v.sqrt() } else { T::zero() }), neg)
}

fn kallen_sweeps<T: Real>(
    basis: &PrimitiveBasis<T>,
    h: &MetricField<T>,
    mu: &[T],
    j: usize,
    clamp: bool,
) -> Result<(KallenDecomposition<T>, usize)> {
    let n = basis.n;
    if h.ncomp != n * n {
        return Err(Error::DimensionMismatch(format!("metric field has {} components, basis n = {n}", h.ncomp)));
    }
    check_frequencies(mu, n)?;
    let mut warnings = vec![];
    let dist = metric_sup(&h.sub(&Field::constant_metric(&h.domain, &basis.h_star)), MatrixNorm::Operator);
    let hypothesis_lhs = dist + mu[0] / mu[1];
    let hypothesis_rhs = lit::<T>(2.0) * basis.sigma_0;
    for k in 1..=2 {
        let s = seminorm(h, k, Scheme::Spectral);
        let bound = mu[0].powi(k as i32);
        if s > bound * lit(1.0 + 1e-9) {
            warnings.push(format!("[h]_{k} = {s} exceeds mu0^{k} = {bound}"));
        }
    }

    let root = |c: Field<T>, what: &str| -> Result<(Field<T>, usize)> {
        if clamp {
            Ok(sqrt_clamped(c))
        } else {
            Ok((sqrt_checked(c, what)?, 0))
        }
    };
    let (mut a, mut clamped) = root(coefficients(basis, h)?, "initial amplitudes")?;
    for sweep in 0..=j {
        let grads = gradient(&leading(&a, n));
        let mut target = h.clone();
        add_gradient_terms(&mut target, &grads, mu, n, -T::one());
        (a, clamped) = root(coefficients(basis, &target)?, &format!("sweep {sweep}"))?;
    }
    if clamped > 0 {
        warnings.push(format!("{clamped} amplitude samples clamped at 0"));
    }
    let grads = gradient(&leading(&a, n));
    let mut recon = squares_in_basis(basis, &a);
    add_gradient_terms(&mut recon, &grads, mu, n, T::one());
    let residual = h.sub(&recon);
    Ok((KallenDecomposition { j, amplitudes: a, residual, mu: mu.to_vec(), hypothesis_lhs, hypothesis_rhs, warnings }, clamped))
}

#[derive(Clone, Debug)]
pub struct OscillatoryReduction<T> {
    /// Corrector, n components.
    pub w: Field<T>,
    pub g: MetricField<T>,
    pub r: MetricField<T>,
    pub gamma_out: PeriodicProfile,
    pub j: usize,
    pub lambda: T,
    pub mu: T,
    /// Lattice multiple and direction realizing λ along ξ_i.
    pub lattice: (i64, Vec<i64>),
    /// Measured K = max_k ‖Q‖_k/μ^k over k ≤ 2.
    pub k_measured: T,
    pub warnings: Vec<String>,
}

impl<T: Real> OscillatoryReduction<T> {
    /// γ_out(λx·ξ_i)(μ/λ)^j G.
    pub fn g_term(&self, dom_phase: &[T]) -> MetricField<T> {
        let s = (self.mu / self.lambda).powi(self.j as i32);
        let prof = self.gamma_out.eval_many(dom_phase);
        let nn = self.g.ncomp;
        let mut out = self.g.clone();
        out.data.par_chunks_mut(nn).enumerate().for_each(|(p, m)| m.iter_mut().for_each(|v| *v = *v * prof[p] * s));
        out
    }

    /// Lattice phases λx·ξ_i on the grid.
    pub fn phase(&self, dom: &crate::fieldlab::GridDomain<T>) -> Vec<T> {
        dom.lattice_phase(&self.lattice.1, self.lattice.0)
    }
}

/// 2 sym(∇w) for an n-component field.
pub fn sym_gradient<T: Real>(w: &Field<T>) -> MetricField<T> {
    let n = w.domain.n;
    let g = gradient(w);
    let mut out = Field::zeros(&w.domain, n * n);
    out.data.par_chunks_mut(n * n).enumerate().for_each(|(p, m)| {
        let gp = g.at(p);
        for a in 0..n {
            for b in 0..n {
                m[a * n + b] = gp[a * n + b] + gp[b * n + a];
            }
        }
    });
    out
}

/// Splits γ(λx·ξ_i)Q = 2sym(∇w) + γ_out(λx·ξ_i)(μ/λ)^j G + R with R in
/// span{ξ_k⊗ξ_k : k > n}, by j rounds of Φ_i-solve and integration by parts.
#[allow(clippy::too_many_arguments)]
pub fn oscillatory_reduce<T: Real>(
    basis: &PrimitiveBasis<T>,
    q: &MetricField<T>,
    gamma: &PeriodicProfile,
    i: usize,
    lambda: T,
    mu: T,
    k_bound: T,
    j: usize,
) -> Result<OscillatoryReduction<T>> {
    let n = basis.n;
    let ns = basis.n_star;
    let dom = q.domain.clone();
    if i < 1 || i > n {
        return Err(Error::Domain(format!("direction index {i} outside 1..={n}")));
    }
    if !(mu > T::zero()) || lambda < mu {
        return Err(Error::Precondition(format!("need lambda >= mu > 0, got lambda = {lambda}, mu = {mu}")));
    }
    if !gamma.is_zero_mean() {
        return Err(Error::NotIntegrable(gamma.mean));
    }
    dom.check_nyquist(lambda)?;
    let dir = basis.lattice_direction(i - 1);
    let (m, snapped) = dom.snap_frequency(&dir, lambda);
    if crate::scalar::abs(snapped - lambda) > lambda * lit(1e-9) {
        return Err(Error::Precondition(format!(
            "lambda = {lambda} is not a lattice frequency along xi_{i} (nearest {snapped})"
        )));
    }
    let mut warnings = vec![];
    let mut k_measured = crate::fieldlab::sup_norm(q);
    for k in 1..=2 {
        k_measured = k_measured.max(seminorm(q, k, Scheme::Spectral) / mu.powi(k as i32));
    }
    if k_measured > k_bound * lit(1.0 + 1e-9) {
        warnings.push(format!("measured K = {k_measured} exceeds the bound {k_bound}"));
    }

    let phase = dom.lattice_phase(&dir, m);
    let solver = PhiSolver::new(basis, i, T::one())?;
    let mut w = Field::zeros(&dom, n);
    let mut r = Field::zeros(&dom, n * n);
    let mut cur = q.clone();
    let mut prof = gamma.clone();
    let mut scale = T::one();
    for _ in 0..j {
        let prim = prof.primitive()?;
        let gam = prof.eval_many(&phase);
        let big = prim.eval_many(&phase);
        let mut alpha = Field::zeros(&dom, n);
        let mut beta = Field::zeros(&dom, ns - n);
        alpha.data.par_chunks_mut(n).zip(beta.data.par_chunks_mut(ns - n)).enumerate().for_each(|(p, (al, be))| {
            let m = cur.at(p);
            let mut x: Vec<T> = vec![T::zero(); ns];
            for a in 0..n {
                for b in a..n {
                    x[packed_index(n, a, b)] = m[a * n + b];
                }
            }
            let mut scratch = vec![T::zero(); ns];
            solver.solve_packed(&mut x, &mut scratch);
            al.copy_from_slice(&x[..n]);
            be.copy_from_slice(&x[n..]);
        });
        let inv2l = scale / (lit::<T>(2.0) * lambda);
        w.data.par_chunks_mut(n).enumerate().for_each(|(p, wp)| {
            for a in 0..n {
                wp[a] = wp[a] + inv2l * big[p] * alpha.data[p * n + a];
            }
        });
        r.data.par_chunks_mut(n * n).enumerate().for_each(|(p, rp)| {
            for l in 0..ns - n {
                let c = scale * gam[p] * beta.data[p * (ns - n) + l];
                let xi = &basis.xi[n + l];
                for a in 0..n {
                    for b in 0..n {
                        rp[a * n + b] = rp[a * n + b] + c * xi[a] * xi[b];
                    }
                }
            }
        });
        // G = −sym∇α/μ, i.e. half the symmetric gradient over μ.
        cur = sym_gradient(&alpha).scale(-T::one() / (lit::<T>(2.0) * mu));
        prof = prim;
        scale = scale * mu / lambda;
    }
    Ok(OscillatoryReduction { w, g: cur, r, gamma_out: prof, j, lambda, mu, lattice: (m, dir), k_measured, warnings })
}

/// Pointwise residual of the reduction identity.
pub fn reduction_residual<T: Real>(q: &MetricField<T>, gamma: &PeriodicProfile, red: &OscillatoryReduction<T>) -> MetricField<T> {
    let dom = &q.domain;
    let phase = red.phase(dom);
    let gam = gamma.eval_many(&phase);
    let mut lhs = q.clone();
    let nn = q.ncomp;
    lhs.data.par_chunks_mut(nn).enumerate().for_each(|(p, m)| m.iter_mut().for_each(|v| *v = *v * gam[p]));
    lhs.sub(&sym_gradient(&red.w)).sub(&red.g_term(&phase)).sub(&red.r)
}

#[derive(Clone, Debug)]
pub struct NewtonDecomposition<T> {
    pub amplitudes: Field<T>,
    pub residual: MetricField<T>,
    pub mu: Vec<T>,
    /// Largest Newton iteration count over points and sweeps.
    pub iterations: usize,
    pub hypothesis_lhs: T,
    pub hypothesis_rhs: T,
}

/// Perturbation data of the even-dimensional coefficient map.
pub struct NewtonTerms<'a, T> {
    /// T_k, k = 1..n/2 (scalar fields).
    pub t: &'a [ScalarField<T>],
    /// G_k, k = 1..n/2.
    pub g: &'a [MetricField<T>],
    /// Θ_kl in row-major k, l order ((n/2)² fields).
    pub theta: &'a [MetricField<T>],
}

struct PointData<'a, T> {
    basis: &'a PrimitiveBasis<T>,
    t: Vec<T>,
    g: Vec<&'a [T]>,
    theta: Vec<&'a [T]>,
    floor: T,
}

impl<T: Real> PointData<'_, T> {
    /// b_k = √(a_{n+k}² − T_k).
    fn b(&self, a: &[T]) -> Result<Vec<T>> {
        let n = self.basis.n;
        (0..self.t.len())
            .map(|k| {
                let v = a[n + k] * a[n + k] - self.t[k];
                if v < self.floor {
                    Err(Error::AmplitudeFloor(format!("a^2 - T_{} = {v} below sigma*/4 = {}", k + 1, self.floor)))
                } else {
                    Ok(v.sqrt())
                }
            })
            .collect()
    }

    /// Φ(a) as a packed vector.
    fn map(&self, a: &[T]) -> Result<Vec<T>> {
        let n = self.basis.n;
        let b = self.b(a)?;
        let c: Vec<T> = a.iter().map(|&v| v * v).collect();
        let mut full = vec![T::zero(); n * n];
        self.basis.reconstruct_into(&c, &mut full);
        let h = self.t.len();
        for k in 0..h {
            for e in 0..n * n {
                full[e] = full[e] + b[k] * self.g[k][e];
            }
            for l in 0..h {
                for e in 0..n * n {
                    full[e] = full[e] + b[k] * b[l] * self.theta[k * h + l][e];
                }
            }
        }
        Ok(SymMatrix::from_rows(n, &full).packed())
    }

    /// Analytic Jacobian of Φ in packed rows × amplitude columns.
    fn jacobian(&self, a: &[T]) -> Result<Vec<T>> {
        let n = self.basis.n;
        let ns = self.basis.n_star;
        let h = self.t.len();
        let b = self.b(a)?;
        let mut jac = vec![T::zero(); ns * ns];
        for i in 0..ns {
            let mut col = SymMatrix::outer(&self.basis.xi[i]).scale(lit::<T>(2.0) * a[i]).packed();
            if i >= n && i < n + h {
                let k = i - n;
                // ∂b_k/∂a_i = a_i/b_k
                let db = a[i] / b[k];
                let mut full = self.g[k].to_vec();
                for l in 0..h {
                    for e in 0..n * n {
                        full[e] = full[e] + b[l] * (self.theta[k * h + l][e] + self.theta[l * h + k][e]);
                    }
                }
                let extra = SymMatrix::from_rows(n, &full).packed();
                for (c, x) in col.iter_mut().zip(extra) {
                    *c = *c + db * x;
                }
            }
            for r in 0..ns {
                jac[r * ns + i] = col[r];
            }
        }
        Ok(jac)
    }

    /// Newton iteration from `a`; returns the iteration count.
    fn solve(&self, target: &[T], a: &mut [T]) -> Result<usize> {
        let ns = self.basis.n_star;
        for it in 1..=NEWTON_MAX_ITER {
            let f = self.map(a)?;
            let rhs: Vec<T> = f.iter().zip(target).map(|(&x, &y)| y - x).collect();
            let lu = crate::linalg::Lu::new(self.jacobian(a)?, ns)
                .ok_or_else(|| Error::DecompositionFailure("singular Newton Jacobian".into()))?;
            let step = lu.solve(&rhs);
            let mut size = T::zero();
            let mut scale = T::one();
            for k in 0..ns {
                a[k] = a[k] + step[k];
                size = size.max(crate::scalar::abs(step[k]));
                scale = scale.max(crate::scalar::abs(a[k]));
            }
            if size <= scale * lit(NEWTON_TOL) {
                return Ok(it);
            }
        }
        Err(Error::DecompositionFailure(format!("Newton did not converge in {NEWTON_MAX_ITER} iterations")))
    }
}

/// Decomposition h = Σa_i²ξ_i⊗ξ_i + Σμ_i⁻²∇a_i⊗∇a_i + Σ_k b_k G_k +
/// Σ_kl b_k b_l Θ_kl + E with b_k = √(a_{n+k}² − T_k), solved per point by
/// Newton and then swept j+1 times like [`kallen_decompose`].
pub fn newton_decompose<T: Real>(
    basis: &PrimitiveBasis<T>,
    h: &MetricField<T>,
    terms: &NewtonTerms<'_, T>,
    mu: &[T],
    j: usize,
) -> Result<NewtonDecomposition<T>> {
    let n = basis.n;
    let ns = basis.n_star;
    if n % 2 != 0 {
        return Err(Error::InvalidDimension(format!("Newton decomposition needs even n, got {n}")));
    }
    let half = n / 2;
    if terms.t.len() != half || terms.g.len() != half || terms.theta.len() != half * half {
        return Err(Error::DimensionMismatch(format!(
            "need {half} T, {half} G and {} Theta fields, got {}, {}, {}",
            half * half,
            terms.t.len(),
            terms.g.len(),
            terms.theta.len()
        )));
    }
    check_frequencies(mu, n)?;
    let sigma_hat = basis.sigma_star / lit(16.0);
    let dom = h.domain.clone();
    let op = |f: &MetricField<T>| metric_sup(f, MatrixNorm::Operator);
    let mut lhs = op(&h.sub(&Field::constant_metric(&dom, &basis.h_star))) + mu[0] / mu[1];
    for k in 0..half {
        lhs = lhs + crate::fieldlab::sup_norm(&terms.t[k]) + op(&terms.g[k]);
    }
    for th in terms.theta {
        lhs = lhs + op(th);
    }
    let n2 = n;
    if mu.len() > n2 + 1 {
        lhs = lhs + (mu[n2] / mu[n2 + 1]).sqrt();
    }

    let floor = basis.sigma_star / lit(4.0);
    let nn = n * n;
    let mut a = sqrt_checked(coefficients(basis, h)?, "initial amplitudes")?;
    let mut iterations = 0usize;
    let solve_all = |a: &mut Field<T>, target: &MetricField<T>| -> Result<usize> {
        a.data
            .par_chunks_mut(ns)
            .enumerate()
            .map(|(p, ap)| {
                let pd = PointData {
                    basis,
                    t: terms.t.iter().map(|f| f.data[p]).collect(),
                    g: terms.g.iter().map(|f| &f.data[p * nn..(p + 1) * nn]).collect(),
                    theta: terms.theta.iter().map(|f| &f.data[p * nn..(p + 1) * nn]).collect(),
                    floor,
                };
                let tp = SymMatrix::from_rows(n, &target.data[p * nn..(p + 1) * nn]).packed();
                pd.solve(&tp, ap).map_err(|e| e.context(format!("grid point {p}")))
            })
            .try_reduce(|| 0, |x, y| Ok(x.max(y)))
    };
    iterations = iterations.max(solve_all(&mut a, h)?);
    for _ in 0..=j {
        let grads = gradient(&leading(&a, n));
        let mut target = h.clone();
        add_gradient_terms(&mut target, &grads, mu, n, -T::one());
        iterations = iterations.max(solve_all(&mut a, &target)?);
    }

    // E = h − Φ(a) − Σμ⁻²∇a⊗∇a
    let grads = gradient(&leading(&a, n));
    let mut recon = Field::zeros(&dom, nn);
    recon.data.par_chunks_mut(nn).enumerate().try_for_each(|(p, m)| -> Result<()> {
        let pd = PointData {
            basis,
            t: terms.t.iter().map(|f| f.data[p]).collect(),
            g: terms.g.iter().map(|f| &f.data[p * nn..(p + 1) * nn]).collect(),
            theta: terms.theta.iter().map(|f| &f.data[p * nn..(p + 1) * nn]).collect(),
            floor,
        };
        let packed = pd.map(a.at(p))?;
        m.copy_from_slice(SymMatrix::from_packed(n, &packed).as_slice());
        Ok(())
    })?;
    add_gradient_terms(&mut recon, &grads, mu, n, T::one());
    let residual = h.sub(&recon);
    let amin = a.data.iter().cloned().fold(T::infinity(), T::min);
    let afloor = basis.sigma_star.sqrt() * lit(0.5);
    if amin < afloor {
        return Err(Error::AmplitudeFloor(format!("min amplitude {amin} below sqrt(sigma*)/2 = {afloor}")));
    }
    Ok(NewtonDecomposition {
        amplitudes: a,
        residual,
        mu: mu.to_vec(),
        iterations,
        hypothesis_lhs: lhs,
        hypothesis_rhs: lit::<T>(2.0) * sigma_hat,
    })
}
