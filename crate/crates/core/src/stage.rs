//! One stage of the iteration and the multi-stage driver: parameter schedule,
//! mollification, spiral steps with oscillatory correctors, amplitude update,
//! corrugation rounds, and the initialization from a short map.
//!
//! Exponent arithmetic (schedule, ladder) is done in `f64` regardless of the
//! field scalar; the doubly exponential quantities overflow `f32` at once.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decomp::{kallen_decompose_clamped, kallen_decompose_unchecked, oscillatory_reduce, KallenDecomposition};
use crate::error::{Error, Result};
use crate::fieldlab::{
    gradient, holder_seminorm_order, metric_sup, norm, pullback_metric, seminorm, sup_norm, Field, GridDomain,
    ImmersionField, MatrixNorm, MetricField, ScalarField, Scheme,
};
use crate::frames::{build_frame, tangential_correction, NormalFrame};
use crate::profiles::{CorrugationProfile, PeriodicProfile};
use crate::scalar::{f64_of, lit, Real};
use crate::symcore::{n_star, PrimitiveBasis};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Strict,
    #[default]
    Relaxed,
}

/// Frequency ladder inside a stage.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Ladder {
    /// λ_{m,i} from the schedule.
    #[default]
    Paper,
    /// λ_{m,0} = base·growth^m, ×spiral_ratio per spiral step and
    /// ×corrugation_ratio per round.
    Geometric { base: f64, growth: f64, spiral_ratio: f64, corrugation_ratio: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlobalParams {
    pub n: usize,
    pub eps: f64,
    pub theta: f64,
    pub b: f64,
    pub vartheta: f64,
    pub tau: f64,
    pub alpha: f64,
    pub j: usize,
    pub a: f64,
    pub delta_star: f64,
    pub lambda_star: f64,
    pub n_star: usize,
    pub k_init: f64,
}

/// Upper end of the admissible ε range, min(2/n², 1/(n+1)).
pub fn eps_upper(n: usize) -> f64 {
    let n = n as f64;
    (2.0 / (n * n)).min(1.0 / (n + 1.0))
}

/// J = ⌊4/((n−1)ε)⌋ + 3. The quotient is nudged up by 1e−9 so that exact
/// integers (n = 3, ε = 0.02 gives 100) are not lost to rounding.
pub fn j_count(n: usize, eps: f64) -> usize {
    (4.0 / ((n as f64 - 1.0) * eps) + 1e-9).floor() as usize + 3
}

pub fn theta_of(n: usize, eps: f64) -> f64 {
    if n % 2 == 1 {
        1.0 / n as f64 - eps
    } else {
        1.0 / (n as f64 + 1.0) - eps
    }
}

/// Exponents and base constants. N_* is set to n_* (see [`init_short`]);
/// λ_* and K take desk defaults 1 and 8.
pub fn make_global_params(n: usize, eps: f64, deficit_scale: f64, a: f64) -> Result<GlobalParams> {
    if n < 2 {
        return Err(Error::InvalidDimension(format!("n = {n}, need n >= 2")));
    }
    let hi = eps_upper(n);
    if !(eps > 0.0 && eps < hi) {
        return Err(Error::EpsOutOfRange(format!("eps = {eps} outside (0, {hi}) for n = {n}")));
    }
    if !(a > 1.0) || !a.is_finite() {
        return Err(Error::Precondition(format!("a = {a} must exceed 1")));
    }
    if !(deficit_scale > 0.0) {
        return Err(Error::Precondition(format!("deficit scale {deficit_scale} must be positive")));
    }
    let nf = n as f64;
    let theta = theta_of(n, eps);
    let b = 1.0 + eps * (nf - 1.0) / 2.0;
    let vartheta = b * (theta + eps) * (1.0 - (nf - 1.0) * eps);
    let ns = n_star(n);
    let tau = 2.0 * vartheta * b * (ns as f64 + 1.0) + vartheta - b;
    let h_star_max = h_star_max_eigenvalue(n);
    Ok(GlobalParams {
        n,
        eps,
        theta,
        b,
        vartheta,
        tau,
        alpha: eps * eps / 10.0,
        j: j_count(n, eps),
        a,
        delta_star: deficit_scale / (5.0 * h_star_max),
        lambda_star: 1.0,
        n_star: ns,
        k_init: 8.0,
    })
}

/// λ_max(h_*): h_* has diagonal (n+1)/2 and off-diagonal ½, so the top
/// eigenvalue is n, along (1, …, 1).
pub fn h_star_max_eigenvalue(n: usize) -> f64 {
    n as f64
}

impl GlobalParams {
    pub fn delta(&self, m: usize) -> f64 {
        self.delta_star * self.a.powf(-2.0 * self.vartheta * self.b.powi(m as i32))
    }

    pub fn lambda(&self, m: usize) -> f64 {
        self.lambda_star * self.a.powf(self.b.powi(m as i32 + 1) + self.tau)
    }

    pub fn is_odd(&self) -> bool {
        self.n % 2 == 1
    }

    /// ⌊3n/2⌋, the last ladder index.
    pub fn ladder_len(&self) -> usize {
        3 * self.n / 2
    }

    /// Number of post-spiral rounds: (n−1)/2 (odd) or n/2 (even).
    pub fn rounds(&self) -> usize {
        if self.is_odd() {
            (self.n - 1) / 2
        } else {
            self.n / 2
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageSchedule {
    pub m: usize,
    pub delta_m: f64,
    pub delta_m1: f64,
    pub delta_m2: f64,
    pub lambda_m: f64,
    pub ell: f64,
    pub big_lambda: f64,
    /// λ_{m,0..⌊3n/2⌋}.
    pub lambda_steps: Vec<f64>,
}

pub fn make_schedule(gp: &GlobalParams, m: usize) -> StageSchedule {
    let delta_m = gp.delta(m);
    let delta_m1 = gp.delta(m + 1);
    let delta_m2 = gp.delta(m + 2);
    let lambda_m = gp.lambda(m);
    let aa = gp.a.powf(gp.alpha);
    let ell = delta_m1.sqrt() / (delta_m.sqrt() * lambda_m * aa);
    let big_lambda = delta_m1 * aa / delta_m2;
    let mut steps = vec![1.0 / ell];
    let root = big_lambda.powf(1.0 / gp.j as f64);
    for i in 1..=gp.ladder_len() {
        let prev = steps[i - 1];
        steps.push(if i <= gp.n { prev * root } else { prev * big_lambda });
    }
    StageSchedule { m, delta_m, delta_m1, delta_m2, lambda_m, ell, big_lambda, lambda_steps: steps }
}

impl StageSchedule {
    /// Nominal ladder under the chosen realization.
    pub fn ladder(&self, gp: &GlobalParams, ladder: &Ladder) -> Vec<f64> {
        match *ladder {
            Ladder::Paper => self.lambda_steps.clone(),
            Ladder::Geometric { base, growth, spiral_ratio, corrugation_ratio } => {
                let mut v = vec![base * growth.powi(self.m as i32)];
                for i in 1..=gp.ladder_len() {
                    let r = if i <= gp.n { spiral_ratio } else { corrugation_ratio };
                    v.push(v[i - 1] * r);
                }
                v
            }
        }
    }
}

/// Frequency realized on the grid along a lattice direction.
#[derive(Clone, Debug, PartialEq)]
pub struct Wave {
    pub q: Vec<i64>,
    pub m: i64,
    pub lambda: f64,
}

impl Wave {
    pub fn snap<T: Real>(dom: &GridDomain<T>, q: Vec<i64>, nominal: f64) -> Self {
        let (m, lam) = dom.snap_frequency(&q, lit(nominal));
        Wave { q, m, lambda: f64_of(lam) }
    }

    /// Unit direction q/|q|.
    pub fn direction<T: Real>(&self) -> Vec<T> {
        let qn = self.q.iter().map(|&v| (v * v) as f64).sum::<f64>().sqrt();
        self.q.iter().map(|&v| lit(v as f64 / qn)).collect()
    }
}

/// Ladder realized on a grid: μ₀, one wave per spiral step, and one wave per
/// direction for each round.
#[derive(Clone, Debug)]
pub struct RealizedLadder {
    pub nominal: Vec<f64>,
    pub mu0: f64,
    pub spirals: Vec<Wave>,
    pub rounds: Vec<Vec<(usize, Wave)>>,
}

impl RealizedLadder {
    /// [μ₀, λ_1..λ_n] as used by the Källén decomposition.
    pub fn kallen_mu(&self) -> Vec<f64> {
        std::iter::once(self.mu0).chain(self.spirals.iter().map(|w| w.lambda)).collect()
    }

    pub fn max_lambda(&self) -> f64 {
        self.rounds.iter().flatten().map(|(_, w)| w.lambda).chain(self.spirals.iter().map(|w| w.lambda)).fold(self.mu0, f64::max)
    }
}

/// Primitive directions (0-based) treated in post-spiral round `j` (1-based).
pub fn round_directions(n: usize, j: usize) -> Vec<usize> {
    if n % 2 == 1 {
        (n * j..n * (j + 1)).collect()
    } else if j == 1 {
        (n..3 * n / 2).collect()
    } else {
        let lo = n * (j - 2) + 3 * n / 2;
        (lo..lo + n).collect()
    }
}

pub fn realize_ladder<T: Real>(
    gp: &GlobalParams,
    sched: &StageSchedule,
    ladder: &Ladder,
    basis: &PrimitiveBasis<T>,
    dom: &GridDomain<T>,
) -> RealizedLadder {
    let nominal = sched.ladder(gp, ladder);
    let n = gp.n;
    let spirals = (0..n).map(|i| Wave::snap(dom, basis.lattice_direction(i), nominal[i + 1])).collect();
    let rounds = (1..=gp.rounds())
        .map(|j| {
            round_directions(n, j).into_iter().map(|k| (k, Wave::snap(dom, basis.lattice_direction(k), nominal[n + j]))).collect()
        })
        .collect();
    RealizedLadder { mu0: nominal[0], nominal, spirals, rounds }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedTerm {
    pub name: String,
    pub sup: f64,
}

/// One line of the stage trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub stage: i64,
    pub step: usize,
    pub kind: String,
    pub deficit_before: f64,
    pub deficit_after: f64,
    pub named_terms: Vec<NamedTerm>,
    pub residual_sup: f64,
    pub c0_delta: f64,
    pub c1_delta: f64,
    pub c2_norm: f64,
}

impl TraceRecord {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("trace record serializes")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    Measured,
}

/// An inequality lhs ≤ rhs with both sides recorded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub id: String,
    pub lhs: f64,
    pub rhs: f64,
    pub status: CheckStatus,
}

impl Check {
    pub fn le(id: &str, lhs: f64, rhs: f64) -> Self {
        let status = if lhs <= rhs { CheckStatus::Pass } else { CheckStatus::Fail };
        Check { id: id.into(), lhs, rhs, status }
    }

    pub fn measured(id: &str, lhs: f64, rhs: f64) -> Self {
        Check { id: id.into(), lhs, rhs, status: CheckStatus::Measured }
    }
}

/// Collects trace records and forwards each one to an optional sink as it
/// is produced, so a failing run keeps everything written so far.
pub struct Tracer<'a> {
    pub records: Vec<TraceRecord>,
    sink: Option<&'a mut dyn FnMut(&TraceRecord)>,
    pub notes: Vec<String>,
}

impl Default for Tracer<'_> {
    fn default() -> Self {
        Tracer { records: vec![], sink: None, notes: vec![] }
    }
}

impl<'a> Tracer<'a> {
    pub fn with_sink(sink: &'a mut dyn FnMut(&TraceRecord)) -> Self {
        Tracer { records: vec![], sink: Some(sink), notes: vec![] }
    }

    pub fn push(&mut self, r: TraceRecord) {
        if let Some(s) = self.sink.as_mut() {
            s(&r);
        }
        self.records.push(r);
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }
}

#[derive(Clone, Debug)]
pub struct StageOptions {
    pub mode: Mode,
    pub ladder: Ladder,
    /// Integration-by-parts depth of the spiral correctors.
    pub corrector_depth: usize,
    /// Sweeps of the Källén decomposition.
    pub kallen_depth: usize,
    /// Mollification length is capped at period·ell_cap.
    pub ell_cap: f64,
    /// Frame metric bound γ: eigenvalues of u^♯e must lie in [1/γ, γ].
    pub frame_bound: f64,
    /// Bound K handed to the oscillatory reduction (only logged).
    pub reduction_bound: f64,
}

impl Default for StageOptions {
    fn default() -> Self {
        StageOptions {
            mode: Mode::Relaxed,
            ladder: Ladder::Paper,
            corrector_depth: 1,
            kallen_depth: 1,
            ell_cap: 0.125,
            frame_bound: 100.0,
            reduction_bound: 1e6,
        }
    }
}

fn field_scalar<T: Real>(dom: &GridDomain<T>, v: Vec<T>) -> ScalarField<T> {
    Field::from_data(dom, 1, v).expect("length matches grid")
}

/// sup over points of the operator norm of g − δ·h_* − u^♯e.
pub fn deficit_sup<T: Real>(g: &MetricField<T>, u: &ImmersionField<T>, shift: T, basis: &PrimitiveBasis<T>) -> T {
    let mut d = g.sub(&pullback_metric(u));
    if shift != T::zero() {
        d.axpy(-shift, &Field::constant_metric(&g.domain, &basis.h_star));
    }
    metric_sup(&d, MatrixNorm::Operator)
}

fn outer_term<T: Real>(dom: &GridDomain<T>, coef: &[T], xi: &[T]) -> MetricField<T> {
    let n = xi.len();
    let mut out = Field::zeros(dom, n * n);
    out.data.par_chunks_mut(n * n).enumerate().for_each(|(p, m)| {
        for a in 0..n {
            for b in 0..n {
                m[a * n + b] = coef[p] * xi[a] * xi[b];
            }
        }
    });
    out
}

fn grad_outer<T: Real>(grad: &Field<T>, scale: T) -> MetricField<T> {
    let n = grad.ncomp;
    let mut out = Field::zeros(&grad.domain, n * n);
    out.data.par_chunks_mut(n * n).enumerate().for_each(|(p, m)| {
        let g = grad.at(p);
        for a in 0..n {
            for b in 0..n {
                m[a * n + b] = scale * g[a] * g[b];
            }
        }
    });
    out
}

/// One Nash spiral of a simultaneous family.
pub struct SpiralTerm<'a, T> {
    /// Full amplitude A (already including δ^{1/2}).
    pub amp: &'a ScalarField<T>,
    pub wave: &'a Wave,
    /// Indices of the (ζ, η) normals in the frame.
    pub normals: (usize, usize),
}

/// Σ (A/λ)(sin θ ζ + cos θ η) and its Jacobian by the chain rule, θ = λx·ξ.
fn spiral_increment<T: Real>(frame: &NormalFrame<T>, terms: &[SpiralTerm<'_, T>]) -> (Field<T>, Field<T>) {
    let dom = frame.vectors.domain.clone();
    let (n, d) = (frame.n, frame.d);
    let mut val = Field::zeros(&dom, d);
    let mut jac = Field::zeros(&dom, d * n);
    for t in terms {
        let (k0, k1) = t.normals;
        let phase = dom.lattice_phase(&t.wave.q, t.wave.m);
        let xi: Vec<T> = t.wave.direction();
        let lam: T = lit(t.wave.lambda);
        let ga = gradient(t.amp);
        let gz = gradient(&frame.vector(k0));
        let ge = gradient(&frame.vector(k1));
        val.data.par_chunks_mut(d).zip(jac.data.par_chunks_mut(d * n)).enumerate().for_each(|(p, (v, j))| {
            let (s, c) = phase[p].sin_cos();
            let a = t.amp.data[p];
            let (z, e) = (frame.at(p, k0), frame.at(p, k1));
            let (dz, de, da) = (gz.at(p), ge.at(p), ga.at(p));
            for r in 0..d {
                let osc = s * z[r] + c * e[r];
                v[r] = v[r] + a / lam * osc;
                let lead = a * (c * z[r] - s * e[r]);
                for b in 0..n {
                    j[r * n + b] = j[r * n + b]
                        + lead * xi[b]
                        + (osc * da[b] + a * (s * dz[r * n + b] + c * de[r * n + b])) / lam;
                }
            }
        });
    }
    (val, jac)
}

/// Per-step outcome of a spiral step.
pub struct SpiralOutcome<T> {
    pub u: ImmersionField<T>,
    pub record: TraceRecord,
    /// R_i, the complementary-span remainder (not multiplied by δ).
    pub r: MetricField<T>,
    /// Measured u'^♯e − u^♯e.
    pub increment: MetricField<T>,
    pub warnings: Vec<String>,
}

/// Parameters of one spiral step along ξ_i, i ≤ n.
#[derive(Clone, Debug)]
pub struct SpiralSpec {
    /// 1-based direction index.
    pub i: usize,
    pub wave: Wave,
    /// Frequency scale of the slow data (λ_{m,i−1}).
    pub mu: f64,
    pub delta: f64,
    /// None disables the corrector w.
    pub corrector_depth: Option<usize>,
    pub frame_bound: f64,
    pub reduction_bound: f64,
}

/// u' = u + (δ^{1/2}a/λ)(sin θ ζ + cos θ η) + δ F w.
///
/// The corrector w cancels the symmetric-gradient part of the oscillatory
/// cross terms sin θ Q₁ + cos θ Q₂, where
/// Q₁ = (2a/(δ^{1/2}λ)) sym(∇uᵀ∇ζ) and likewise Q₂ with η.
pub fn spiral_step<T: Real>(
    basis: &PrimitiveBasis<T>,
    u: &ImmersionField<T>,
    amp: &ScalarField<T>,
    spec: &SpiralSpec,
) -> Result<SpiralOutcome<T>> {
    let n = u.n();
    let dom = u.domain().clone();
    dom.check_nyquist(lit(spec.wave.lambda))?;
    if spec.i < 1 || spec.i > n {
        return Err(Error::Domain(format!("spiral direction {} outside 1..={n}", spec.i)));
    }
    let frame = build_frame(u, lit(spec.frame_bound))?;
    let delta: T = lit(spec.delta);
    let sd = delta.sqrt();
    let lam: T = lit(spec.wave.lambda);
    let big_a = amp.scale(sd);
    let term = SpiralTerm { amp: &big_a, wave: &spec.wave, normals: (0, 1) };
    let (mut val, mut jac) = spiral_increment(&frame, &[term]);
    let mut warnings = vec![];

    let mut r = Field::zeros(&dom, n * n);
    let mut g_named = Field::zeros(&dom, n * n);
    if let Some(depth) = spec.corrector_depth {
        let mut w = Field::zeros(&dom, n);
        for (k, prof) in [(0usize, PeriodicProfile::sin()), (1, PeriodicProfile::cos())] {
            let gn = gradient(&frame.vector(k));
            let d = u.d;
            // Q = (2a/(δ^{1/2}λ)) sym(∇uᵀ∇ν)
            let mut q = Field::zeros(&dom, n * n);
            q.data.par_chunks_mut(n * n).enumerate().for_each(|(p, m)| {
                let j = u.jacobian(p);
                let g = gn.at(p);
                let c = lit::<T>(2.0) * amp.data[p] / (sd * lam);
                for a in 0..n {
                    for b in 0..n {
                        let x = (0..d).fold(T::zero(), |s, rr| s + j[rr * n + a] * g[rr * n + b]);
                        let y = (0..d).fold(T::zero(), |s, rr| s + j[rr * n + b] * g[rr * n + a]);
                        m[a * n + b] = c * (x + y) / lit(2.0);
                    }
                }
            });
            let red = oscillatory_reduce(basis, &q, &prof, spec.i, lam, lit(spec.mu), lit(spec.reduction_bound), depth)?;
            warnings.extend(red.warnings.iter().cloned());
            w = w.sub(&red.w);
            r = r.add(&red.r);
            g_named = g_named.add(&red.g_term(&red.phase(&dom)));
        }
        // δ F w, differentiated spectrally (F w is band limited).
        let f = tangential_correction(u)?;
        let d = u.d;
        let mut fw = Field::zeros(&dom, d);
        fw.data.par_chunks_mut(d).enumerate().for_each(|(p, o)| {
            let (fp, wp) = (f.at(p), w.at(p));
            for rr in 0..d {
                o[rr] = delta * (0..n).fold(T::zero(), |s, a| s + fp[rr * n + a] * wp[a]);
            }
        });
        jac = jac.add(&gradient(&fw));
        val = val.add(&fw);
    }

    drop(frame);
    let (c0, c1) = (f64_of(sup_norm(&val)), f64_of(sup_norm(&jac)));
    let u_new = u.add_with_gradient(&val, &jac);
    drop((val, jac));
    let mut increment = pullback_metric(&u_new);
    increment.axpy(-T::one(), &pullback_metric(u));
    let xi = basis.xi[spec.i - 1].clone();
    let ga = gradient(amp);
    let gs = delta / (lam * lam);
    // residual = increment − δa²ξ⊗ξ − δλ⁻²∇a⊗∇a − δR − δG, with the sup of
    // each named term taken in the same pass.
    let nn = n * n;
    let (res, main, grad_t, rt, gt) = increment
        .data
        .par_chunks(nn)
        .enumerate()
        .map(|(p, inc)| {
            let a = amp.data[p];
            let g = ga.at(p);
            let (rp, gp) = (r.at(p), g_named.at(p));
            let mut m_res = vec![T::zero(); nn];
            let mut m_main = vec![T::zero(); nn];
            let mut m_grad = vec![T::zero(); nn];
            for x in 0..n {
                for y in 0..n {
                    let e = x * n + y;
                    m_main[e] = delta * a * a * xi[x] * xi[y];
                    m_grad[e] = gs * g[x] * g[y];
                    m_res[e] = inc[e] - m_main[e] - m_grad[e] - delta * rp[e] - delta * gp[e];
                }
            }
            let op = |m: &[T]| {
                let ev = crate::linalg::sym_eigenvalues(m, n);
                ev[0].abs().max(ev[n - 1].abs())
            };
            (op(&m_res), op(&m_main), op(&m_grad), op(rp) * delta, op(gp) * delta)
        })
        .reduce(
            || (T::zero(), T::zero(), T::zero(), T::zero(), T::zero()),
            |x, y| (x.0.max(y.0), x.1.max(y.1), x.2.max(y.2), x.3.max(y.3), x.4.max(y.4)),
        );
    let record = TraceRecord {
        stage: -1,
        step: spec.i,
        kind: "spiral".into(),
        deficit_before: f64::NAN,
        deficit_after: f64::NAN,
        named_terms: vec![
            NamedTerm { name: "delta_a2_xi_xi".into(), sup: f64_of(main) },
            NamedTerm { name: "delta_grad_a_grad_a".into(), sup: f64_of(grad_t) },
            NamedTerm { name: "delta_R".into(), sup: f64_of(rt) },
            NamedTerm { name: "delta_G".into(), sup: f64_of(gt) },
        ],
        residual_sup: f64_of(res),
        c0_delta: c0,
        c1_delta: c1,
        c2_norm: f64_of(u_new.hessian_sup()),
    };
    Ok(SpiralOutcome { u: u_new, record, r, increment, warnings })
}

/// Simultaneous spirals of the even-dimensional first round: directions
/// ξ_k with amplitudes δ^{1/2}b_k on the normal pairs (2t, 2t+1).
pub fn even_spiral_round<T: Real>(
    basis: &PrimitiveBasis<T>,
    u: &ImmersionField<T>,
    amps: &[(usize, ScalarField<T>, Wave)],
    delta: f64,
    frame_bound: f64,
) -> Result<(ImmersionField<T>, TraceRecord, MetricField<T>)> {
    let dom = u.domain().clone();
    let n = u.n();
    for (_, _, w) in amps {
        dom.check_nyquist(lit(w.lambda))?;
    }
    if 2 * amps.len() > u.d - n {
        return Err(Error::InvalidDimension(format!("{} spirals need {} normals, have {}", amps.len(), 2 * amps.len(), u.d - n)));
    }
    let frame = build_frame(u, lit(frame_bound))?;
    let delta_t: T = lit(delta);
    let scaled: Vec<ScalarField<T>> = amps.iter().map(|(_, b, _)| b.scale(delta_t.sqrt())).collect();
    let terms: Vec<SpiralTerm<'_, T>> = amps
        .iter()
        .zip(&scaled)
        .enumerate()
        .map(|(t, ((_, _, w), a))| SpiralTerm { amp: a, wave: w, normals: (2 * t, 2 * t + 1) })
        .collect();
    let (val, jac) = spiral_increment(&frame, &terms);
    let u_new = u.add_with_gradient(&val, &jac);
    let increment = pullback_metric(&u_new).sub(&pullback_metric(u));
    let mut named = Field::zeros(&dom, n * n);
    let mut grads = Field::zeros(&dom, n * n);
    for (k, b, w) in amps {
        let b2: Vec<T> = b.data.iter().map(|&x| delta_t * x * x).collect();
        named = named.add(&outer_term(&dom, &b2, &basis.xi[*k]));
        let lam: T = lit(w.lambda);
        grads = grads.add(&grad_outer(&gradient(b), delta_t / (lam * lam)));
    }
    let residual = increment.sub(&named).sub(&grads);
    let op = |f: &MetricField<T>| f64_of(metric_sup(f, MatrixNorm::Operator));
    let record = TraceRecord {
        stage: -1,
        step: n + 1,
        kind: "spiral-round".into(),
        deficit_before: f64::NAN,
        deficit_after: f64::NAN,
        named_terms: vec![
            NamedTerm { name: "delta_b2_xi_xi".into(), sup: op(&named) },
            NamedTerm { name: "delta_grad_b_grad_b".into(), sup: op(&grads) },
        ],
        residual_sup: op(&residual),
        c0_delta: f64_of(sup_norm(&val)),
        c1_delta: f64_of(sup_norm(&jac)),
        c2_norm: f64_of(u_new.hessian_sup()),
    };
    Ok((u_new, record, increment))
}

/// One corrugation of a round: amplitude b_k (without δ), direction and
/// frequency, and the frame normal hosting it.
pub struct CorrugationTerm<'a, T> {
    pub k: usize,
    pub b: &'a ScalarField<T>,
    pub wave: &'a Wave,
    pub normal: usize,
}

/// Largest scaled amplitude b̃ = δ^{1/2}|Fξ_k| b_k over a round.
pub fn corrugation_amplitude_max<T: Real>(u: &ImmersionField<T>, terms: &[CorrugationTerm<'_, T>], delta: f64) -> Result<f64> {
    let f = tangential_correction(u)?;
    let n = u.n();
    let d = u.d;
    let mut worst = 0.0f64;
    for t in terms {
        let xi: Vec<T> = t.wave.direction();
        let m = (0..f.npts())
            .into_par_iter()
            .map(|p| {
                let fp = f.at(p);
                let z2 = (0..d).fold(T::zero(), |s, r| {
                    let v = (0..n).fold(T::zero(), |s, a| s + fp[r * n + a] * xi[a]);
                    s + v * v
                });
                f64_of(z2.sqrt() * crate::scalar::abs(t.b.data[p]))
            })
            .reduce(|| 0.0, f64::max);
        worst = worst.max(m * delta.sqrt());
    }
    Ok(worst)
}

/// u' = u + λ⁻¹ Σ_k (Γ₁(b̃_k, θ_k) ζ_k + Γ₂(b̃_k, θ_k) η_k) with ζ̃ = Fξ_k,
/// ζ = ζ̃/|ζ̃|², η = η̃/(|η̃||ζ̃|), b̃ = δ^{1/2}|ζ̃|b_k. Each corrugation adds
/// δb_k²ξ_k⊗ξ_k to the pullback up to terms of order λ⁻¹.
pub fn corrugation_round<T: Real>(
    basis: &PrimitiveBasis<T>,
    u: &ImmersionField<T>,
    terms: &[CorrugationTerm<'_, T>],
    delta: f64,
    profile: &CorrugationProfile,
    frame_bound: f64,
) -> Result<(ImmersionField<T>, TraceRecord, MetricField<T>)> {
    let dom = u.domain().clone();
    let (n, d) = (u.n(), u.d);
    for t in terms {
        dom.check_nyquist(lit(t.wave.lambda))?;
    }
    let frame = build_frame(u, lit(frame_bound))?;
    if terms.iter().any(|t| t.normal >= frame.count()) {
        return Err(Error::InvalidDimension("corrugation normal index beyond the frame".into()));
    }
    let f = tangential_correction(u)?;
    let sd: T = lit::<T>(delta).sqrt();
    let mut val = Field::zeros(&dom, d);
    let mut jac = Field::zeros(&dom, d * n);
    for t in terms {
        let xi: Vec<T> = t.wave.direction();
        let lam: T = lit(t.wave.lambda);
        let phase = dom.lattice_phase(&t.wave.q, t.wave.m);
        // ζ, η and b̃ as fields, then their slow gradients.
        let mut zeta = Field::zeros(&dom, d);
        let mut eta = Field::zeros(&dom, d);
        let mut bt = vec![T::zero(); dom.npts()];
        zeta.data
            .par_chunks_mut(d)
            .zip(eta.data.par_chunks_mut(d))
            .zip(bt.par_iter_mut())
            .enumerate()
            .for_each(|(p, ((z, e), s))| {
                let fp = f.at(p);
                for r in 0..d {
                    z[r] = (0..n).fold(T::zero(), |acc, a| acc + fp[r * n + a] * xi[a]);
                }
                let z2 = z.iter().fold(T::zero(), |acc, &v| acc + v * v);
                let zn = z2.sqrt();
                z.iter_mut().for_each(|v| *v = *v / z2);
                let en = frame.at(p, t.normal);
                let enorm = en.iter().fold(T::zero(), |acc, &v| acc + v * v).sqrt();
                for r in 0..d {
                    e[r] = en[r] / (enorm * zn);
                }
                *s = sd * zn * t.b.data[p];
            });
        let smax = bt.iter().fold(0.0f64, |m, &v| m.max(f64_of(crate::scalar::abs(v))));
        if smax > profile.s_max * (1.0 + 1e-12) {
            return Err(Error::CorrugationRange(format!(
                "scaled amplitude {smax} exceeds s_max = {} in direction {}",
                profile.s_max,
                t.k + 1
            )));
        }
        let bt = field_scalar(&dom, bt);
        let gz = gradient(&zeta);
        let ge = gradient(&eta);
        let gb = gradient(&bt);
        val.data.par_chunks_mut(d).zip(jac.data.par_chunks_mut(d * n)).enumerate().for_each(|(p, (v, j))| {
            let pv = profile.eval_unchecked(f64_of(crate::scalar::abs(bt.data[p])), f64_of(phase[p]));
            let (g1, g2, t1, t2, s1, s2) =
                (lit::<T>(pv.g1), lit::<T>(pv.g2), lit::<T>(pv.dt1), lit::<T>(pv.dt2), lit::<T>(pv.ds1), lit::<T>(pv.ds2));
            let (z, e) = (zeta.at(p), eta.at(p));
            let (dz, de, db) = (gz.at(p), ge.at(p), gb.at(p));
            for r in 0..d {
                v[r] = v[r] + (g1 * z[r] + g2 * e[r]) / lam;
                let lead = t1 * z[r] + t2 * e[r];
                let sdir = s1 * z[r] + s2 * e[r];
                for b in 0..n {
                    j[r * n + b] =
                        j[r * n + b] + lead * xi[b] + (sdir * db[b] + g1 * dz[r * n + b] + g2 * de[r * n + b]) / lam;
                }
            }
        });
    }
    let u_new = u.add_with_gradient(&val, &jac);
    let increment = pullback_metric(&u_new).sub(&pullback_metric(u));
    let mut named = Field::zeros(&dom, n * n);
    for t in terms {
        let b2: Vec<T> = t.b.data.iter().map(|&x| lit::<T>(delta) * x * x).collect();
        named = named.add(&outer_term(&dom, &b2, &basis.xi[t.k]));
    }
    let residual = increment.sub(&named);
    let op = |f: &MetricField<T>| f64_of(metric_sup(f, MatrixNorm::Operator));
    let record = TraceRecord {
        stage: -1,
        step: 0,
        kind: "corrugation".into(),
        deficit_before: f64::NAN,
        deficit_after: f64::NAN,
        named_terms: vec![NamedTerm { name: "delta_b2_xi_xi".into(), sup: op(&named) }],
        residual_sup: op(&residual),
        c0_delta: f64_of(sup_norm(&val)),
        c1_delta: f64_of(sup_norm(&jac)),
        c2_norm: f64_of(u_new.hessian_sup()),
    };
    Ok((u_new, record, increment))
}

/// b_k = √(a_{n+k}² − L_{n+k}(R)) for the complementary directions.
/// Negative radicands are an error in strict mode and clamp to 0 otherwise.
pub fn update_amplitudes<T: Real>(
    basis: &PrimitiveBasis<T>,
    dec: &KallenDecomposition<T>,
    r: &MetricField<T>,
    mode: Mode,
) -> Result<(Vec<ScalarField<T>>, usize)> {
    let (n, ns) = (basis.n, basis.n_star);
    let nn = n * n;
    let npts = r.npts();
    let mut out = vec![vec![T::zero(); npts]; ns - n];
    let mut clamped = 0usize;
    let mut coeffs = vec![T::zero(); ns];
    for p in 0..npts {
        basis.project_into(&r.data[p * nn..(p + 1) * nn], &mut coeffs);
        let a = dec.amplitudes.at(p);
        for k in 0..ns - n {
            let v = a[n + k] * a[n + k] - coeffs[n + k];
            if v < T::zero() {
                if mode == Mode::Strict {
                    return Err(Error::AmplitudeFloor(format!("a^2 - L_{}(R) = {v} < 0 at grid point {p}", n + k + 1)));
                }
                clamped += 1;
            }
            out[k][p] = v.max(T::zero()).sqrt();
        }
    }
    let dom = &r.domain;
    Ok((out.into_iter().map(|v| field_scalar(dom, v)).collect(), clamped))
}

/// Everything a stage reports besides the new immersion.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: usize,
    pub schedule: StageSchedule,
    pub realized_ladder: Vec<f64>,
    pub ell_used: f64,
    pub deficit_before_g: f64,
    pub deficit_before_gm: f64,
    pub deficit_after_g: f64,
    pub deficit_after_gm: f64,
    pub checks: Vec<Check>,
    pub splits: usize,
    /// Negative L_i samples set to zero by the relaxed Källén step.
    pub clamped_initial: usize,
    pub clamped_amplitudes: usize,
}

fn step_record(mut r: TraceRecord, stage: usize, step: usize, before: f64, after: f64) -> TraceRecord {
    r.stage = stage as i64;
    r.step = step;
    r.deficit_before = before;
    r.deficit_after = after;
    r
}

fn strict_gate(mode: Mode, checks: &[Check]) -> Result<()> {
    if mode == Mode::Strict {
        if let Some(c) = checks.iter().find(|c| c.status == CheckStatus::Fail) {
            return Err(Error::StrictViolation(format!("{}: {} > {}", c.id, c.lhs, c.rhs)));
        }
    }
    Ok(())
}

/// One full stage taking u_m to u_{m+1}.
#[allow(clippy::too_many_arguments)]
pub fn run_stage<T: Real>(
    basis: &PrimitiveBasis<T>,
    u_m: &ImmersionField<T>,
    g: &MetricField<T>,
    gp: &GlobalParams,
    m: usize,
    opts: &StageOptions,
    profile: &CorrugationProfile,
    tracer: &mut Tracer<'_>,
) -> Result<(ImmersionField<T>, StageReport)> {
    run_stage_inner(basis, u_m, g, gp, m, opts, profile, tracer).map_err(|e| e.context(format!("stage {m}")))
}

#[allow(clippy::too_many_arguments)]
fn run_stage_inner<T: Real>(
    basis: &PrimitiveBasis<T>,
    u_m: &ImmersionField<T>,
    g: &MetricField<T>,
    gp: &GlobalParams,
    m: usize,
    opts: &StageOptions,
    profile: &CorrugationProfile,
    tracer: &mut Tracer<'_>,
) -> Result<(ImmersionField<T>, StageReport)> {
    let n = gp.n;
    if u_m.n() != n || u_m.d != 2 * n {
        return Err(Error::DimensionMismatch(format!("immersion is {}→{}, expected {n}→{}", u_m.n(), u_m.d, 2 * n)));
    }
    let dom = u_m.domain().clone();
    let sched = make_schedule(gp, m);
    let lad = realize_ladder(gp, &sched, &opts.ladder, basis, &dom);
    dom.check_nyquist(lit(lad.max_lambda()))?;
    let (d1, d2) = (sched.delta_m1, sched.delta_m2);
    let sigma0 = f64_of(basis.sigma_0);
    let mut checks = vec![];

    let dsup = |u: &ImmersionField<T>, shift: f64| f64_of(deficit_sup(g, u, lit(shift), basis));
    let before_g = dsup(u_m, 0.0);
    let before_gm = dsup(u_m, d1);
    checks.push(Check::le("pre.deficit", before_gm, sigma0 * d1));
    strict_gate(opts.mode, &checks)?;

    // Mollify and form h_m.
    let ell_cap = f64_of(dom.period) * opts.ell_cap;
    let ell = match opts.ladder {
        Ladder::Paper => sched.ell,
        Ladder::Geometric { .. } => 1.0 / lad.mu0,
    }
    .min(ell_cap);
    if ell != sched.ell {
        tracer.note(format!("stage {m}: mollification length {ell} (schedule {})", sched.ell));
    }
    let u_l = u_m.mollify(lit(ell))?;
    let g_l = crate::fieldlab::mollify(g, lit(ell))?;
    let mut h = g_l.sub(&pullback_metric(&u_l));
    h.axpy(-lit::<T>(d2), &Field::constant_metric(&dom, &basis.h_star));
    let h = h.scale(lit::<T>(1.0 / d1));

    let mu: Vec<T> = lad.kallen_mu().into_iter().map(lit).collect();
    // Strict mode reports the hypothesis through the gate below, after the
    // mollification record is in the trace.
    let (dec, kallen_clamped) = match opts.mode {
        Mode::Strict => (kallen_decompose_unchecked(basis, &h, &mu, opts.kallen_depth)?, 0),
        Mode::Relaxed => kallen_decompose_clamped(basis, &h, &mu, opts.kallen_depth)?,
    };
    checks.push(Check::le("kallen.hypothesis", f64_of(dec.hypothesis_lhs), f64_of(dec.hypothesis_rhs)));
    for w in &dec.warnings {
        tracer.note(format!("stage {m}: {w}"));
    }
    let mut step = 0usize;
    let mut cur_def = dsup(&u_l, 0.0);
    tracer.push(TraceRecord {
        stage: m as i64,
        step,
        kind: "mollify".into(),
        deficit_before: before_g,
        deficit_after: cur_def,
        named_terms: vec![
            NamedTerm { name: "ell".into(), sup: ell },
            NamedTerm { name: "kallen_E".into(), sup: f64_of(metric_sup(&dec.residual, MatrixNorm::Operator)) * d1 },
        ],
        residual_sup: f64_of(metric_sup(&dec.residual, MatrixNorm::Operator)),
        c0_delta: f64_of(sup_norm(&u_l.values.sub(&u_m.values))),
        c1_delta: f64_of(sup_norm(&u_l.grad.sub(&u_m.grad))),
        c2_norm: f64_of(u_l.hessian_sup()),
    });
    strict_gate(opts.mode, &checks)?;

    // Spiral steps.
    let mut u = u_l;
    let mut r_total = Field::zeros(&dom, n * n);
    for i in 1..=n {
        let spec = SpiralSpec {
            i,
            wave: lad.spirals[i - 1].clone(),
            mu: if i == 1 { lad.mu0 } else { lad.spirals[i - 2].lambda },
            delta: d1,
            corrector_depth: Some(opts.corrector_depth),
            frame_bound: opts.frame_bound,
            reduction_bound: opts.reduction_bound,
        };
        let out = spiral_step(basis, &u, &dec.amplitude(i), &spec).map_err(|e| e.context(format!("spiral step {i}")))?;
        for w in &out.warnings {
            tracer.note(format!("stage {m} spiral {i}: {w}"));
        }
        r_total = r_total.add(&out.r);
        u = out.u;
        let after = dsup(&u, 0.0);
        step += 1;
        tracer.push(step_record(out.record, m, step, cur_def, after));
        cur_def = after;
    }

    let (bs, clamped) = update_amplitudes(basis, &dec, &r_total, opts.mode)?;
    if clamped > 0 {
        tracer.note(format!("stage {m}: {clamped} amplitude samples clamped at 0"));
    }

    let mut splits = 0usize;
    for j in 1..=gp.rounds() {
        let waves = &lad.rounds[j - 1];
        if !gp.is_odd() && j == 1 {
            let amps: Vec<(usize, ScalarField<T>, Wave)> =
                waves.iter().map(|(k, w)| (*k, bs[k - n].clone(), w.clone())).collect();
            let (u2, rec, _) = even_spiral_round(basis, &u, &amps, d1, opts.frame_bound)
                .map_err(|e| e.context("spiral round 1"))?;
            u = u2;
            let after = dsup(&u, 0.0);
            step += 1;
            tracer.push(step_record(rec, m, step, cur_def, after));
            cur_def = after;
            continue;
        }
        // Split δ over 2^p passes while b̃ exceeds the profile range.
        let mut passes = 1usize;
        loop {
            let terms: Vec<CorrugationTerm<'_, T>> = waves
                .iter()
                .enumerate()
                .map(|(t, (k, w))| CorrugationTerm { k: *k, b: &bs[k - n], wave: w, normal: t })
                .collect();
            let s = corrugation_amplitude_max(&u, &terms, d1 / passes as f64)?;
            if s <= profile.s_max * 0.95 || passes >= 1 << 10 {
                break;
            }
            passes *= 2;
        }
        if passes > 1 {
            splits += passes - 1;
            tracer.note(format!("stage {m} round {j}: delta split over {passes} passes"));
        }
        for _ in 0..passes {
            let terms: Vec<CorrugationTerm<'_, T>> = waves
                .iter()
                .enumerate()
                .map(|(t, (k, w))| CorrugationTerm { k: *k, b: &bs[k - n], wave: w, normal: t })
                .collect();
            let (u2, rec, _) = corrugation_round(basis, &u, &terms, d1 / passes as f64, profile, opts.frame_bound)
                .map_err(|e| e.context(format!("corrugation round {j}")))?;
            u = u2;
            let after = dsup(&u, 0.0);
            step += 1;
            let mut rec = step_record(rec, m, step, cur_def, after);
            rec.kind = format!("corrugation-round-{j}");
            tracer.push(rec);
            cur_def = after;
        }
    }

    let after_g = dsup(&u, 0.0);
    let after_gm = dsup(&u, d2);
    let du = u.values.sub(&u_m.values);
    let c0 = f64_of(sup_norm(&du));
    let c1 = f64_of(sup_norm(&u.grad.sub(&u_m.grad)));
    let c2 = f64_of(u.hessian_sup());
    checks.push(Check::le("post.deficit", after_gm, sigma0 * d2));
    checks.push(Check::le("c0.increment", c0, d1.sqrt()));
    checks.push(Check::measured("c1.increment", c1, d1.sqrt()));
    checks.push(Check::le("c2.norm", c2, d1.sqrt() * gp.lambda(m + 1)));
    let report = StageReport {
        stage: m,
        schedule: sched,
        realized_ladder: std::iter::once(lad.mu0)
            .chain(lad.spirals.iter().map(|w| w.lambda))
            .chain(lad.rounds.iter().map(|r| r[0].1.lambda))
            .collect(),
        ell_used: ell,
        deficit_before_g: before_g,
        deficit_before_gm: before_gm,
        deficit_after_g: after_g,
        deficit_after_gm: after_gm,
        checks,
        splits,
        clamped_initial: kallen_clamped,
        clamped_amplitudes: clamped,
    };
    strict_gate(opts.mode, &report.checks)?;
    Ok((u, report))
}

/// Initialization settings.
#[derive(Clone, Debug)]
pub struct InitOptions {
    pub mode: Mode,
    /// μ̄₀; None uses 1/ℓ̄.
    pub mu0: Option<f64>,
    /// Frequency ratio K between consecutive initial spirals.
    pub k: f64,
    pub ell_cap: f64,
    pub frame_bound: f64,
    /// Shortness tolerance on min eig(g − ū^♯e − 5δ_*h_*).
    pub short_tol: f64,
}

impl Default for InitOptions {
    fn default() -> Self {
        InitOptions { mode: Mode::Relaxed, mu0: None, k: 8.0, ell_cap: 0.125, frame_bound: 100.0, short_tol: 1e-12 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InitReport {
    pub ell_bar: f64,
    pub shrink: f64,
    pub shrink_steps: usize,
    pub directions: Vec<Vec<f64>>,
    pub min_coefficients: Vec<f64>,
    pub frequencies: Vec<f64>,
    pub skipped: Vec<usize>,
    pub g_star: f64,
    pub k_star: f64,
    pub checks: Vec<Check>,
}

/// Coefficients of t in the sign-adapted basis e_i, (e_i + s_ij e_j)/√2:
/// c_ij = 2 s_ij t_ij and c_i = t_ii − Σ_j s_ij t_ij.
fn signed_coefficients<T: Real>(t: &[T], n: usize, signs: &[T], out: &mut [T]) {
    let mut idx = n;
    for i in 0..n {
        out[i] = t[i * n + i];
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let s = signs[idx - n];
            let c = lit::<T>(2.0) * s * t[i * n + j];
            out[idx] = c;
            out[i] = out[i] - s * t[i * n + j];
            out[j] = out[j] - s * t[i * n + j];
            idx += 1;
        }
    }
}

/// Builds u_0 from a strictly short ū: mollify, decompose the remaining
/// deficit (minus δ_1h_*) into N_* = n_* primitive metrics, and add one
/// Nash spiral per primitive metric at frequencies μ̄_i = K·μ̄_{i−1}.
pub fn init_short<T: Real>(
    basis: &PrimitiveBasis<T>,
    g: &MetricField<T>,
    u_bar: &ImmersionField<T>,
    gp: &GlobalParams,
    opts: &InitOptions,
    tracer: &mut Tracer<'_>,
) -> Result<(ImmersionField<T>, InitReport)> {
    let n = gp.n;
    let ns = basis.n_star;
    let dom = u_bar.domain().clone();
    let hstar = Field::constant_metric(&dom, &basis.h_star);
    let d0 = g.sub(&pullback_metric(u_bar));
    let mut dd = d0.clone();
    dd.axpy(-lit::<T>(5.0 * gp.delta_star), &hstar);
    let me = f64_of(dd.min_eigenvalue());
    if me < -opts.short_tol {
        return Err(Error::NotShort(format!("min eig(g - u^#e - 5 delta* h*) = {me}")));
    }
    let d1 = gp.delta(1);
    let sigma0 = f64_of(basis.sigma_0);
    let g1 = f64_of(norm(g, 1, Scheme::Spectral));
    let cap = f64_of(dom.period) * opts.ell_cap;
    let ell_bar = (sigma0 * d1 / (2.0 * g1)).min(cap);
    let g_l = crate::fieldlab::mollify(g, lit(ell_bar))?;
    let floor = 0.1 * d1;
    let nn = n * n;

    let mut shrink = 1.0f64;
    let mut shrink_steps = 0usize;
    let (u0, coeffs, signs) = loop {
        let ub = u_bar.scale(lit(shrink)).mollify(lit(ell_bar))?;
        let mut t = g_l.sub(&pullback_metric(&ub));
        t.axpy(-lit::<T>(d1), &hstar);
        let mean = t.mean();
        let signs: Vec<T> = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| if mean[i * n + j] < T::zero() { -T::one() } else { T::one() })
            .collect();
        let mut c = Field::zeros(&dom, ns);
        c.data.par_chunks_mut(ns).enumerate().for_each(|(p, o)| signed_coefficients(&t.data[p * nn..(p + 1) * nn], n, &signs, o));
        let cmin = c.data.iter().fold(f64::INFINITY, |m, &v| m.min(f64_of(v)));
        if cmin >= floor || shrink_steps >= 20 {
            if cmin < 0.0 {
                return Err(Error::DecompositionFailure(format!("initial coefficient {cmin} < 0 after {shrink_steps} shrink steps")));
            }
            break (ub, c, signs);
        }
        shrink *= 0.9;
        shrink_steps += 1;
    };
    if shrink_steps > 0 {
        tracer.note(format!("init: u_bar shrunk by {shrink} to keep coefficients above {floor}"));
    }
    let before = f64_of(deficit_sup(g, u_bar, lit(d1), basis));
    let after_moll = f64_of(deficit_sup(g, &u0, lit(d1), basis));
    tracer.push(TraceRecord {
        stage: -1,
        step: 0,
        kind: "init-mollify".into(),
        deficit_before: before,
        deficit_after: after_moll,
        named_terms: vec![NamedTerm { name: "ell_bar".into(), sup: ell_bar }, NamedTerm { name: "shrink".into(), sup: shrink }],
        residual_sup: 0.0,
        c0_delta: f64_of(sup_norm(&u0.values.sub(&u_bar.values))),
        c1_delta: f64_of(sup_norm(&u0.grad.sub(&u_bar.grad))),
        c2_norm: f64_of(u0.hessian_sup()),
    });

    // Directions ν and their lattice vectors.
    let mut dirs: Vec<(Vec<i64>, Vec<T>)> = (0..n)
        .map(|i| {
            let mut q = vec![0i64; n];
            q[i] = 1;
            let v = q.iter().map(|&x| lit(x as f64)).collect();
            (q, v)
        })
        .collect();
    let mut idx = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            let s = f64_of(signs[idx]) as i64;
            let mut q = vec![0i64; n];
            q[i] = 1;
            q[j] = s;
            let r = 1.0 / 2f64.sqrt();
            let v = q.iter().map(|&x| lit(x as f64 * r)).collect();
            dirs.push((q, v));
            idx += 1;
        }
    }

    let mut u = u0.clone();
    let mut mu = opts.mu0.unwrap_or(1.0 / ell_bar);
    let mut freqs = vec![];
    let mut skipped = vec![];
    let mut cur = after_moll;
    for (i, (q, _)) in dirs.iter().enumerate() {
        mu *= opts.k;
        let wave = Wave::snap(&dom, q.clone(), mu);
        freqs.push(wave.lambda);
        let amp = field_scalar(&dom, coeffs.component(i).into_iter().map(|c| c.max(T::zero()).sqrt()).collect());
        if amp.data.iter().all(|&a| a == T::zero()) {
            skipped.push(i);
            continue;
        }
        dom.check_nyquist(lit(wave.lambda)).map_err(|e| e.context(format!("initial spiral {}", i + 1)))?;
        let frame = build_frame(&u, lit(opts.frame_bound))?;
        let (val, jac) = spiral_increment(&frame, &[SpiralTerm { amp: &amp, wave: &wave, normals: (0, 1) }]);
        u = u.add_with_gradient(&val, &jac);
        let after = f64_of(deficit_sup(g, &u, lit(d1), basis));
        tracer.push(TraceRecord {
            stage: -1,
            step: i + 1,
            kind: "init-spiral".into(),
            deficit_before: cur,
            deficit_after: after,
            named_terms: vec![NamedTerm { name: "a2".into(), sup: f64_of(sup_norm(&amp)).powi(2) }],
            residual_sup: f64::NAN,
            c0_delta: f64_of(sup_norm(&val)),
            c1_delta: f64_of(sup_norm(&jac)),
            c2_norm: f64_of(u.hessian_sup()),
        });
        cur = after;
    }

    let final_def = f64_of(deficit_sup(g, &u, lit(d1), basis));
    let (u1, _) = crate::fieldlab::norms::immersion_seminorms(&u);
    let (ub1, _) = crate::fieldlab::norms::immersion_seminorms(u_bar);
    let g_star = f64_of(u1) - f64_of(ub1);
    let k_star = f64_of(sup_norm(&u.grad.sub(&u_bar.grad)));
    let c0 = f64_of(sup_norm(&u.values.sub(&u_bar.values)));
    let checks = vec![
        Check::le("init.deficit", final_def, sigma0 * d1),
        Check::le("init.c0", c0, gp.eps / 2.0),
        Check::measured("init.G_star", g_star, 0.0),
        Check::measured("init.K_star", k_star, 0.0),
    ];
    let report = InitReport {
        ell_bar,
        shrink,
        shrink_steps,
        directions: dirs.iter().map(|(_, v)| v.iter().map(|&x| f64_of(x)).collect()).collect(),
        min_coefficients: (0..ns).map(|i| coeffs.component(i).iter().fold(f64::INFINITY, |m, &v| m.min(f64_of(v)))).collect(),
        frequencies: freqs,
        skipped,
        g_star,
        k_star,
        checks,
    };
    strict_gate(opts.mode, &report.checks)?;
    Ok((u, report))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HolderEstimate {
    pub theta: f64,
    pub holder: f64,
    /// ‖Δ‖_1^{1−θ}‖Δ‖_2^θ.
    pub interpolation: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub init: Option<InitReport>,
    pub stages: Vec<StageReport>,
    /// ‖g − u_m^♯e‖₀ for m = 0, 1, ….
    pub deficits_g: Vec<f64>,
    /// ‖g_m − u_m^♯e‖₀ with g_m = g − δ_{m+1}h_*.
    pub deficits_gm: Vec<f64>,
    pub holder: Vec<Vec<HolderEstimate>>,
    pub truncated: Option<String>,
    pub notes: Vec<String>,
}

pub const HOLDER_THETAS: [f64; 3] = [0.25, 0.5, 0.75];

fn holder_estimates<T: Real>(du: &Field<T>) -> Vec<HolderEstimate> {
    let n1 = f64_of(norm(du, 1, Scheme::Spectral));
    let n2 = n1 + f64_of(seminorm(du, 2, Scheme::Spectral));
    HOLDER_THETAS
        .iter()
        .map(|&th| {
            let holder = n1 + f64_of(holder_seminorm_order(du, 1, lit(th), Scheme::Spectral));
            let interpolation = n1.powf(1.0 - th) * n2.powf(th);
            let ratio = if interpolation > 0.0 { holder / interpolation } else { 0.0 };
            HolderEstimate { theta: th, holder, interpolation, ratio }
        })
        .collect()
}

/// Multi-stage driver. With `u_bar` the initializer runs first; with
/// `skip_init` the map is taken as u_0 directly. A stage whose ladder the
/// grid cannot resolve ends the run with a truncation notice.
#[allow(clippy::too_many_arguments)]
pub fn run<T: Real>(
    basis: &PrimitiveBasis<T>,
    g: &MetricField<T>,
    u_bar: &ImmersionField<T>,
    gp: &GlobalParams,
    stages: usize,
    skip_init: bool,
    stage_opts: &StageOptions,
    init_opts: &InitOptions,
    profile: &CorrugationProfile,
    tracer: &mut Tracer<'_>,
) -> Result<(ImmersionField<T>, RunReport)> {
    if stages == 0 {
        return Err(Error::Precondition("stages must be at least 1".into()));
    }
    let (mut u, init) = if skip_init {
        (u_bar.clone(), None)
    } else {
        let (u0, rep) = init_short(basis, g, u_bar, gp, init_opts, tracer).map_err(|e| e.context("initialization"))?;
        (u0, Some(rep))
    };
    let mut report = RunReport {
        init,
        stages: vec![],
        deficits_g: vec![f64_of(deficit_sup(g, &u, T::zero(), basis))],
        deficits_gm: vec![f64_of(deficit_sup(g, &u, lit(gp.delta(1)), basis))],
        holder: vec![],
        truncated: None,
        notes: vec![],
    };
    let dom = u.domain().clone();
    for m in 0..stages {
        let sched = make_schedule(gp, m);
        let lad = realize_ladder(gp, &sched, &stage_opts.ladder, basis, &dom);
        if let Err(e) = dom.check_nyquist(lit(lad.max_lambda())) {
            report.truncated = Some(format!("stopped before stage {m}: {e}"));
            break;
        }
        let (u_next, rep) = run_stage(basis, &u, g, gp, m, stage_opts, profile, tracer)?;
        report.holder.push(holder_estimates(&u_next.values.sub(&u.values)));
        report.deficits_g.push(rep.deficit_after_g);
        report.deficits_gm.push(rep.deficit_after_gm);
        report.stages.push(rep);
        u = u_next;
    }
    report.notes = tracer.notes.clone();
    Ok((u, report))
}
