//! Symmetric-matrix algebra: the primitive basis ξ, the coordinate maps
//! L_i, the positivity margin σ_* and the Φ_i isomorphism.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{cond1, Lu};
use crate::scalar::{abs, lit, Real};

/// Number of independent entries of an n×n symmetric matrix.
pub fn n_star(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Position of entry (i, j), i ≤ j, in the packed upper triangle.
#[inline]
pub fn packed_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + j
}

/// Dense symmetric matrix, stored in full and symmetrised on every write.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix<T> {
    n: usize,
    a: Vec<T>,
}

impl<T: Real> SymMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        SymMatrix { n, a: vec![T::zero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| if i == j { T::one() } else { T::zero() })
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> T) -> Self {
        let mut a = vec![T::zero(); n * n];
        for i in 0..n {
            for j in i..n {
                let v = if i == j { f(i, i) } else { (f(i, j) + f(j, i)) * lit(0.5) };
                a[i * n + j] = v;
                a[j * n + i] = v;
            }
        }
        SymMatrix { n, a }
    }

    /// Symmetric part of a row-major square matrix.
    pub fn from_rows(n: usize, rows: &[T]) -> Self {
        assert_eq!(rows.len(), n * n);
        Self::from_fn(n, |i, j| rows[i * n + j])
    }

    pub fn from_packed(n: usize, p: &[T]) -> Self {
        Self::from_fn(n, |i, j| p[packed_index(n, i, j)])
    }

    pub fn packed(&self) -> Vec<T> {
        let mut p = vec![T::zero(); n_star(self.n)];
        for i in 0..self.n {
            for j in i..self.n {
                p[packed_index(self.n, i, j)] = self.a[i * self.n + j];
            }
        }
        p
    }

    /// v ⊗ v
    pub fn outer(v: &[T]) -> Self {
        Self::from_fn(v.len(), |i, j| v[i] * v[j])
    }

    /// a ⊙ b = (a⊗b + b⊗a)/2
    pub fn sym_product(a: &[T], b: &[T]) -> Self {
        assert_eq!(a.len(), b.len());
        Self::from_fn(a.len(), |i, j| (a[i] * b[j] + b[i] * a[j]) * lit(0.5))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.a[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.a
    }

    pub fn add(&self, o: &Self) -> Self {
        assert_eq!(self.n, o.n);
        SymMatrix { n: self.n, a: self.a.iter().zip(&o.a).map(|(&x, &y)| x + y).collect() }
    }

    pub fn sub(&self, o: &Self) -> Self {
        assert_eq!(self.n, o.n);
        SymMatrix { n: self.n, a: self.a.iter().zip(&o.a).map(|(&x, &y)| x - y).collect() }
    }

    pub fn scale(&self, s: T) -> Self {
        SymMatrix { n: self.n, a: self.a.iter().map(|&x| x * s).collect() }
    }

    pub fn frobenius(&self) -> T {
        self.a.iter().map(|&x| x * x).sum::<T>().sqrt()
    }

    pub fn eigenvalues(&self) -> Vec<T> {
        crate::linalg::sym_eigenvalues(&self.a, self.n)
    }

    /// Spectral norm (largest absolute eigenvalue).
    pub fn op_norm(&self) -> T {
        let ev = self.eigenvalues();
        T::max(abs(ev[0]), abs(ev[ev.len() - 1]))
    }

    /// vᵀ M v
    pub fn quad(&self, v: &[T]) -> T {
        let n = self.n;
        let mut s = T::zero();
        for i in 0..n {
            let mut r = T::zero();
            for j in 0..n {
                r = r + self.a[i * n + j] * v[j];
            }
            s = s + v[i] * r;
        }
        s
    }
}

/// The primitive directions ξ_i, h_* and the margins σ_*, σ_0.
#[derive(Clone, Debug)]
pub struct PrimitiveBasis<T> {
    pub n: usize,
    pub n_star: usize,
    pub xi: Vec<Vec<T>>,
    /// Index pairs (i, j) with ξ = (e_i+e_j)/√2; (i, i) for the axis directions.
    pub pairs: Vec<(usize, usize)>,
    pub h_star: SymMatrix<T>,
    pub sigma_star: T,
    pub sigma_0: T,
    /// Dense matrix of the L map: row a holds the coefficients of L_a on the
    /// full n×n entries, c = l_map · vec(h).
    l_map: Vec<T>,
}

pub const SIGMA_SAMPLES: usize = 4096;
pub const SIGMA_SEED: u64 = 0x5167_5eed;

impl<T: Real> PrimitiveBasis<T> {
    pub fn new(n: usize) -> Result<Self> {
        build_basis(n)
    }

    /// Applies L to a full row-major n×n symmetric array without allocating.
    #[inline]
    pub fn project_into(&self, h: &[T], out: &mut [T]) {
        let nn = self.n * self.n;
        for (a, o) in out.iter_mut().enumerate().take(self.n_star) {
            let row = &self.l_map[a * nn..(a + 1) * nn];
            let mut s = T::zero();
            for k in 0..nn {
                s = s + row[k] * h[k];
            }
            *o = s;
        }
    }

    /// Σ c_a ξ_a⊗ξ_a as a full row-major array.
    pub fn reconstruct_into(&self, c: &[T], out: &mut [T]) {
        let n = self.n;
        out.iter_mut().for_each(|v| *v = T::zero());
        for (a, xi) in self.xi.iter().enumerate() {
            for i in 0..n {
                for j in 0..n {
                    out[i * n + j] = out[i * n + j] + c[a] * xi[i] * xi[j];
                }
            }
        }
    }

    pub fn reconstruct(&self, c: &[T]) -> SymMatrix<T> {
        let mut full = vec![T::zero(); self.n * self.n];
        self.reconstruct_into(c, &mut full);
        SymMatrix::from_rows(self.n, &full)
    }

    /// Lattice vector q with ξ_a = q/|q| (entries 0/1).
    pub fn lattice_direction(&self, a: usize) -> Vec<i64> {
        let (i, j) = self.pairs[a];
        let mut q = vec![0i64; self.n];
        q[i] = 1;
        q[j] = 1;
        q
    }
}

/// Builds ξ, h_*, the L map and the margins for dimension n.
pub fn build_basis<T: Real>(n: usize) -> Result<PrimitiveBasis<T>> {
    if n < 2 {
        return Err(Error::InvalidDimension(format!("n = {n}, need n >= 2")));
    }
    let ns = n_star(n);
    let mut xi = Vec::with_capacity(ns);
    let mut pairs = Vec::with_capacity(ns);
    for i in 0..n {
        let mut v = vec![T::zero(); n];
        v[i] = T::one();
        xi.push(v);
        pairs.push((i, i));
    }
    let r = T::one() / lit::<T>(2.0).sqrt();
    for i in 0..n {
        for j in (i + 1)..n {
            let mut v = vec![T::zero(); n];
            v[i] = r;
            v[j] = r;
            xi.push(v);
            pairs.push((i, j));
        }
    }
    let h_star = xi.iter().fold(SymMatrix::zeros(n), |acc, v| acc.add(&SymMatrix::outer(v)));

    let mut gram = vec![T::zero(); ns * ns];
    for a in 0..ns {
        for b in 0..ns {
            let d: T = (0..n).map(|k| xi[a][k] * xi[b][k]).sum();
            gram[a * ns + b] = d * d;
        }
    }
    let lu = Lu::new(gram, ns).ok_or_else(|| Error::SingularMap("basis Gram matrix".into()))?;
    // L_a(h) = Σ_b G⁻¹_ab ξ_bᵀ h ξ_b, expanded over the entries of h.
    let ginv = lu.inverse();
    let nn = n * n;
    let mut l_map = vec![T::zero(); ns * nn];
    for a in 0..ns {
        for b in 0..ns {
            let w = ginv[a * ns + b];
            for i in 0..n {
                for j in 0..n {
                    l_map[a * nn + i * n + j] = l_map[a * nn + i * n + j] + w * xi[b][i] * xi[b][j];
                }
            }
        }
    }
    let mut basis = PrimitiveBasis {
        n,
        n_star: ns,
        xi,
        pairs,
        h_star,
        sigma_star: T::zero(),
        sigma_0: T::zero(),
        l_map,
    };
    basis.sigma_star = estimate_sigma_star_seeded(&basis, SIGMA_SAMPLES, SIGMA_SEED)?;
    basis.sigma_0 = basis.sigma_star.sqrt() / lit(2.0);
    Ok(basis)
}

/// L(h): the coefficients with h = Σ L_a(h) ξ_a⊗ξ_a.
pub fn project_l<T: Real>(basis: &PrimitiveBasis<T>, h: &SymMatrix<T>) -> Result<Vec<T>> {
    if h.dim() != basis.n {
        return Err(Error::DimensionMismatch(format!("matrix is {}x{}, basis n = {}", h.dim(), h.dim(), basis.n)));
    }
    let mut c = vec![T::zero(); basis.n_star];
    basis.project_into(h.as_slice(), &mut c);
    Ok(c)
}

/// Random symmetric direction of unit Frobenius norm.
fn unit_direction<T: Real>(n: usize, rng: &mut ChaCha8Rng) -> SymMatrix<T> {
    let p: Vec<T> = (0..n_star(n)).map(|_| lit::<T>(rng.gen_range(-1.0..1.0))).collect();
    let m = SymMatrix::from_packed(n, &p);
    let f = m.frobenius();
    m.scale(T::one() / f)
}

pub fn estimate_sigma_star<T: Real>(basis: &PrimitiveBasis<T>, samples: usize) -> Result<T> {
    estimate_sigma_star_seeded(basis, samples, SIGMA_SEED)
}

/// Largest σ on a bisection grid with min_a L_a(h) ≥ σ for the sampled h on
/// the sphere |h − h_*|_F = 2σ, then halved.
pub fn estimate_sigma_star_seeded<T: Real>(basis: &PrimitiveBasis<T>, samples: usize, seed: u64) -> Result<T> {
    if samples < 1000 {
        return Err(Error::Precondition(format!("estimate_sigma_star needs >= 1000 samples, got {samples}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = basis.n;
    // L is linear, so only the minimal coefficient over the directions matters;
    // the ball is convex and the minimum sits on its boundary.
    let dirs: Vec<Vec<T>> = (0..samples)
        .map(|_| {
            let u = unit_direction::<T>(n, &mut rng);
            let mut c = vec![T::zero(); basis.n_star];
            basis.project_into(u.as_slice(), &mut c);
            c
        })
        .collect();
    let ok = |sigma: T| {
        let two_sigma = sigma + sigma;
        dirs.iter().all(|c| c.iter().all(|&ci| T::one() + two_sigma * ci >= sigma))
    };
    let (mut lo, mut hi) = (T::zero(), T::one());
    for _ in 0..60 {
        let mid = (lo + hi) * lit(0.5);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo * lit(0.5))
}

/// Solver for Φ_i(α, β) = c_*·α⊙ξ_i + Σ_{j>n} β_{j−n} ξ_j⊗ξ_j with a fixed
/// direction and constant.
#[derive(Clone, Debug)]
pub struct PhiSolver<T> {
    n: usize,
    lu: Lu<T>,
    pub condition: T,
}

impl<T: Real> PhiSolver<T> {
    pub fn new(basis: &PrimitiveBasis<T>, i: usize, c_star: T) -> Result<Self> {
        let n = basis.n;
        if i < 1 || i > n {
            return Err(Error::Domain(format!("direction index {i} outside 1..={n}")));
        }
        if c_star == T::zero() {
            return Err(Error::SingularMap("c_star = 0".into()));
        }
        let ns = basis.n_star;
        let mat = phi_matrix(basis, i, c_star);
        let condition = cond1(&mat, ns).ok_or_else(|| Error::SingularMap(format!("Phi_{i}")))?;
        let lu = Lu::new(mat, ns).ok_or_else(|| Error::SingularMap(format!("Phi_{i}")))?;
        Ok(PhiSolver { n, lu, condition })
    }

    /// Solves for packed M; returns (α, β) concatenated in `out` (length n_*).
    #[inline]
    pub fn solve_packed(&self, m_packed: &mut [T], scratch: &mut [T]) {
        self.lu.solve_into(m_packed, scratch);
    }

    pub fn solve(&self, m: &SymMatrix<T>) -> (Vec<T>, Vec<T>) {
        let x = self.lu.solve(&m.packed());
        (x[..self.n].to_vec(), x[self.n..].to_vec())
    }
}

/// Packed-coordinate matrix of Φ_i; columns are α_1..α_n, β_1..β_{n_*−n}.
pub fn phi_matrix<T: Real>(basis: &PrimitiveBasis<T>, i: usize, c_star: T) -> Vec<T> {
    let n = basis.n;
    let ns = basis.n_star;
    let mut mat = vec![T::zero(); ns * ns];
    let xi_i = &basis.xi[i - 1];
    for k in 0..n {
        let mut ek = vec![T::zero(); n];
        ek[k] = T::one();
        let col = SymMatrix::sym_product(&ek, xi_i).scale(c_star).packed();
        for r in 0..ns {
            mat[r * ns + k] = col[r];
        }
    }
    for l in n..ns {
        let col = SymMatrix::outer(&basis.xi[l]).packed();
        for r in 0..ns {
            mat[r * ns + l] = col[r];
        }
    }
    mat
}

/// Φ_i(α, β).
pub fn apply_phi<T: Real>(basis: &PrimitiveBasis<T>, i: usize, c_star: T, alpha: &[T], beta: &[T]) -> SymMatrix<T> {
    let mut m = SymMatrix::sym_product(alpha, &basis.xi[i - 1]).scale(c_star);
    for (l, &b) in beta.iter().enumerate() {
        m = m.add(&SymMatrix::outer(&basis.xi[basis.n + l]).scale(b));
    }
    m
}

/// Solves Φ_i(α, β) = M.
pub fn solve_phi<T: Real>(basis: &PrimitiveBasis<T>, i: usize, c_star: T, m: &SymMatrix<T>) -> Result<(Vec<T>, Vec<T>)> {
    if m.dim() != basis.n {
        return Err(Error::DimensionMismatch(format!("matrix n = {}, basis n = {}", m.dim(), basis.n)));
    }
    Ok(PhiSolver::new(basis, i, c_star)?.solve(m))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packed_index_enumerates_upper_triangle() {
        let n = 4;
        let mut seen = vec![];
        for i in 0..n {
            for j in i..n {
                seen.push(packed_index(n, i, j));
            }
        }
        assert_eq!(seen, (0..n_star(n)).collect::<Vec<_>>());
        assert_eq!(packed_index(n, 3, 1), packed_index(n, 1, 3));
    }

    #[test]
    fn l_of_h_star_is_all_ones() {
        let b = build_basis::<f64>(4).unwrap();
        let c = project_l(&b, &b.h_star).unwrap();
        assert!(c.iter().all(|&x| (x - 1.0).abs() < 1e-13));
    }

    #[test]
    fn sigma_zero_inside_allowed_range() {
        let b = build_basis::<f64>(3).unwrap();
        assert!(b.sigma_0 > 0.0 && b.sigma_0 < b.sigma_star.sqrt());
    }

    #[test]
    fn phi_rejects_zero_constant_and_bad_index() {
        let b = build_basis::<f64>(3).unwrap();
        assert!(matches!(PhiSolver::new(&b, 1, 0.0), Err(Error::SingularMap(_))));
        assert!(matches!(PhiSolver::new(&b, 4, 1.0), Err(Error::Domain(_))));
    }
}
