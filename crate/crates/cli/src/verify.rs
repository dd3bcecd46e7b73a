//! `cforge verify`: property checks across the engine, with the measurement
//! routines shared by the acceptance tests.
//!
//! `fast` runs the algebraic checks and small-grid versions of the
//! increment checks; `full` adds the scaling regressions at their reference
//! resolutions and a determinism run.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::str::FromStr;
use std::time::Instant;

use cforge::audit::{audit_exponents, AuditReport};
use cforge::decomp::{kallen_decompose, newton_decompose, NewtonTerms};
use cforge::fieldlab::{gradient, metric_sup, pullback_metric, sup_norm, MatrixNorm};
use cforge::frames::build_frame;
use cforge::profiles::{solve_f, CorrugationProfile};
use cforge::stage::{
    corrugation_round, make_global_params, run_stage, spiral_step, CorrugationTerm, Ladder, SpiralSpec, StageOptions,
    Tracer, Wave,
};
use cforge::symcore::{apply_phi, n_star, project_l, solve_phi};
use cforge::{Field, GridDomain, ImmersionField, PrimitiveBasis, SymMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::CliError;

pub const AUDIT_DIMS: [usize; 4] = [3, 4, 5, 6];
pub const AUDIT_EPS: [f64; 4] = [0.001, 0.005, 0.01, 0.02];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Fast,
    Full,
}

impl FromStr for Suite {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "fast" => Ok(Suite::Fast),
            "full" => Ok(Suite::Full),
            other => Err(CliError::Usage(format!("unknown suite `{other}` (expected fast or full)"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CheckOutcome {
    pub id: &'static str,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CheckOutcome {
    pub fn line(&self) -> String {
        format!("{} {:<28} {:>8.2}s  {}", if self.pass { "PASS" } else { "FAIL" }, self.id, self.seconds, self.detail)
    }
}

type Measured = Result<(bool, String), CliError>;

fn timed(id: &'static str, f: impl FnOnce() -> Measured) -> CheckOutcome {
    let t0 = Instant::now();
    let (pass, detail) = f().unwrap_or_else(|e| (false, format!("error: {e}")));
    CheckOutcome { id, pass, detail, seconds: t0.elapsed().as_secs_f64() }
}

/// Audit report for every (n, ε) in the reference grid.
pub fn audit_grid() -> Result<Vec<AuditReport>, CliError> {
    let mut out = vec![];
    for &n in &AUDIT_DIMS {
        for &eps in &AUDIT_EPS {
            out.push(audit_exponents(n, eps, n_star(n))?);
        }
    }
    Ok(out)
}

fn random_sym(n: usize, rng: &mut ChaCha8Rng) -> SymMatrix {
    let mut rows = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = rng.gen_range(-1.0..1.0);
            rows[i * n + j] = v;
            rows[j * n + i] = v;
        }
    }
    SymMatrix::from_rows(n, &rows)
}

/// Largest Frobenius residual of h ↦ Σ L_i(h) ξ_i⊗ξ_i over random symmetric
/// matrices with entries in [−1, 1].
pub fn projection_roundtrip(n: usize, samples: usize, seed: u64) -> Result<f64, CliError> {
    let basis = PrimitiveBasis::new(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let h = random_sym(n, &mut rng);
        let c = project_l(&basis, &h)?;
        worst = worst.max(basis.reconstruct(&c).sub(&h).frobenius());
    }
    Ok(worst)
}

/// Largest Frobenius residual of M ↦ Φ_i(Φ_i⁻¹(M)) over i = 1..n and
/// random M, at c_* = 1.
pub fn phi_roundtrip(n: usize, samples: usize, seed: u64) -> Result<f64, CliError> {
    let basis = PrimitiveBasis::new(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for i in 1..=n {
        for _ in 0..samples {
            let m = random_sym(n, &mut rng);
            let (alpha, beta) = solve_phi(&basis, i, 1.0, &m)?;
            worst = worst.max(apply_phi(&basis, i, 1.0, &alpha, &beta).sub(&m).frobenius());
        }
    }
    Ok(worst)
}

/// (table identity residual, f(10⁻³)/(2·10⁻⁶)).
pub fn corrugation_identity() -> Result<(f64, f64), CliError> {
    let prof = CorrugationProfile::standard()?;
    let s = 1e-3;
    let f = solve_f(s, prof.s_max)?;
    Ok((prof.identity_residual(), f / (2.0 * s * s)))
}

/// ‖E^j‖₀ for j = 0..=depth on h = h_* + A sin(x₁) ξ₁⊗ξ₁ over the 2π-torus,
/// A = σ₀/10, with μ₀ = √A (so [h]_k ≤ μ₀^k for k = 1, 2) and μ_i = 8μ₀.
pub fn kallen_errors(n: usize, points_per_axis: usize, depth: usize) -> Result<Vec<f64>, CliError> {
    let basis = PrimitiveBasis::new(n)?;
    let dom = GridDomain::new(n, points_per_axis, TAU)?;
    let amp = 0.1 * basis.sigma_0;
    let x1 = SymMatrix::outer(&basis.xi[0]);
    let h = Field::metric_fn(&dom, |x, o| o.copy_from_slice(basis.h_star.add(&x1.scale(amp * x[0].sin())).as_slice()));
    let mu0 = amp.sqrt();
    let mu: Vec<f64> = std::iter::once(mu0).chain(std::iter::repeat(8.0 * mu0).take(n)).collect();
    (0..=depth)
        .map(|j| Ok(metric_sup(&kallen_decompose(&basis, &h, &mu, j)?.residual, MatrixNorm::Operator)))
        .collect()
}

/// sup |u'^♯e − u^♯e − δa²ξ₁⊗ξ₁ − δλ⁻²∇a⊗∇a| / δ for one Nash spiral
/// without corrector, n = 3 on the (π/2)-torus, δ = 10⁻⁴,
/// a = 1 + variation·sin(4x₂). A nonzero `curvature` bends the base map
/// in the normal coordinates 4 and 5.
pub fn spiral_residual(points_per_axis: usize, lambda: f64, variation: f64, curvature: f64) -> Result<f64, CliError> {
    let n = 3;
    let basis = PrimitiveBasis::new(n)?;
    let dom = GridDomain::new(n, points_per_axis, FRAC_PI_2)?;
    let k = TAU / FRAC_PI_2;
    let mut u = ImmersionField::inclusion(&dom, 2 * n, 1.0)?;
    if curvature != 0.0 {
        let bump = Field::from_fn(&dom, 2 * n, |x, o| {
            o.iter_mut().for_each(|v| *v = 0.0);
            o[3] = curvature * (k * x[1]).sin() / k;
            o[4] = curvature * (k * x[2]).cos() / k;
        });
        u = u.add_periodic(&bump);
    }
    let amp = Field::scalar_fn(&dom, |x| 1.0 + variation * (k * x[1]).sin());
    let delta = 1e-4;
    let wave = Wave::snap(&dom, basis.lattice_direction(0), lambda);
    let lam = wave.lambda;
    let spec = SpiralSpec { i: 1, wave, mu: k, delta, corrector_depth: None, frame_bound: 100.0, reduction_bound: 1e6 };
    let out = spiral_step(&basis, &u, &amp, &spec)?;
    let xi = SymMatrix::outer(&basis.xi[0]);
    let ga = gradient(&amp);
    let mut inc = out.increment;
    for p in 0..dom.npts() {
        let a = amp.data[p];
        let named = xi.scale(delta * a * a).add(&SymMatrix::outer(ga.at(p)).scale(delta / (lam * lam)));
        for (v, t) in inc.at_mut(p).iter_mut().zip(named.as_slice()) {
            *v -= t;
        }
    }
    Ok(metric_sup(&inc, MatrixNorm::Operator) / delta)
}

/// sup |u'^♯e − u^♯e − δb²ξ₄⊗ξ₄| / (δb²) for one corrugation with constant
/// b = 0.1 and δ = 1, n = 3 on a flat torus sized so that λ = 64 lies on
/// the lattice along ξ₄.
pub fn corrugation_error(points_per_axis: usize) -> Result<f64, CliError> {
    let n = 3;
    let basis = PrimitiveBasis::new(n)?;
    let period = 2f64.sqrt() * 4.0 * TAU / 64.0;
    let dom = GridDomain::new(n, points_per_axis, period)?;
    let u = ImmersionField::inclusion(&dom, 2 * n, 1.0)?;
    let prof = CorrugationProfile::standard()?;
    let b = Field::constant(&dom, &[0.1]);
    let wave = Wave::snap(&dom, basis.lattice_direction(3), 64.0);
    let terms = [CorrugationTerm { k: 3, b: &b, wave: &wave, normal: 0 }];
    let (_, _, inc) = corrugation_round(&basis, &u, &terms, 1.0, &prof, 100.0)?;
    let target = Field::constant_metric(&dom, &SymMatrix::outer(&basis.xi[3]).scale(0.01));
    Ok(metric_sup(&inc.sub(&target), MatrixNorm::Operator) / 0.01)
}

#[derive(Clone, Debug)]
pub struct StageMeasurement {
    pub deficit_before: f64,
    pub deficit_after: f64,
    /// ‖u_1 − u_0‖₀.
    pub displacement: f64,
    /// δ_1^{1/2}.
    pub displacement_bound: f64,
    pub clamped: usize,
    pub ladder: Vec<f64>,
}

/// One relaxed stage from the flat inclusion with g = u^♯e + δ₁h_*, n = 3 on
/// the π-torus, ε = 0.2, a = 10⁶, geometric ladder from 1 with ratio 2 per
/// spiral and 1.77 per round.
pub fn stage_contraction(points_per_axis: usize) -> Result<StageMeasurement, CliError> {
    let n = 3;
    let basis = PrimitiveBasis::new(n)?;
    let dom = GridDomain::new(n, points_per_axis, PI)?;
    let gp = make_global_params(n, 0.2, 1.0, 1e6)?;
    let d1 = gp.delta(1);
    let u0 = ImmersionField::inclusion(&dom, 2 * n, 1.0)?;
    let mut g = pullback_metric(&u0);
    g.axpy(d1, &Field::constant_metric(&dom, &basis.h_star));
    let prof = CorrugationProfile::standard()?;
    let opts = StageOptions {
        ladder: Ladder::Geometric { base: 1.0, growth: 1.0, spiral_ratio: 2.0, corrugation_ratio: 1.77 },
        ..StageOptions::default()
    };
    let mut tracer = Tracer::default();
    let (u1, rep) = run_stage(&basis, &u0, &g, &gp, 0, &opts, &prof, &mut tracer)?;
    let displacement = sup_norm(&u1.values.sub(&u0.values));
    Ok(StageMeasurement {
        deficit_before: rep.deficit_before_g,
        deficit_after: rep.deficit_after_g,
        displacement,
        displacement_bound: d1.sqrt(),
        clamped: rep.clamped_initial + rep.clamped_amplitudes,
        ladder: rep.realized_ladder,
    })
}

/// Test immersions for the frame checks: flat inclusions (n = 2, 3), a
/// bent n = 3 map and a seeded low-mode perturbation for n = 2.
pub fn frame_test_immersions(points_per_axis: usize) -> Result<Vec<(String, ImmersionField)>, CliError> {
    let mut out = vec![];
    for n in [2, 3] {
        let dom = GridDomain::new(n, points_per_axis, TAU)?;
        out.push((format!("inclusion n={n}"), ImmersionField::inclusion(&dom, 2 * n, 1.0)?));
    }
    let dom3 = GridDomain::new(3, points_per_axis, TAU)?;
    let bump = Field::from_fn(&dom3, 6, |x, o| {
        o.iter_mut().for_each(|v| *v = 0.0);
        o[0] = 0.2 * x[1].sin();
        o[3] = 0.5 * x[0].cos() * x[2].sin();
        o[5] = 0.3 * (x[0] + x[1]).sin();
    });
    out.push(("bent n=3".into(), ImmersionField::inclusion(&dom3, 6, 1.0)?.add_periodic(&bump)));
    let dom2 = GridDomain::new(2, points_per_axis, TAU)?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let pert = crate::run::seeded_smooth(&dom2, 4, 0.4, &mut rng);
    out.push(("seeded n=2".into(), ImmersionField::inclusion(&dom2, 4, 1.0)?.add_periodic(&pert)));
    Ok(out)
}

/// (worst orthonormality residual, worst normality residual) over the
/// frame test immersions.
pub fn frame_residuals(points_per_axis: usize) -> Result<(f64, f64), CliError> {
    let mut worst = (0.0f64, 0.0f64);
    for (_, u) in frame_test_immersions(points_per_axis)? {
        let fr = build_frame(&u, 100.0)?;
        worst.0 = worst.0.max(fr.orthonormality_residual());
        worst.1 = worst.1.max(fr.normality_residual(&u));
    }
    Ok(worst)
}

#[derive(Clone, Debug)]
pub struct NewtonMeasurement {
    /// max |a_newton − a_källén| with T = G = Θ = 0.
    pub degenerate_gap: f64,
    pub iterations: usize,
    /// sup of h minus the independently rebuilt right-hand side.
    pub reconstruction: f64,
    /// ‖E‖₀ of the perturbed decomposition.
    pub residual: f64,
}

fn newton_setup(points_per_axis: usize) -> Result<(PrimitiveBasis, GridDomain, Field, Vec<f64>), CliError> {
    let n = 2;
    let basis = PrimitiveBasis::new(n)?;
    let dom = GridDomain::new(n, points_per_axis, TAU)?;
    let amp = 0.05 * basis.sigma_0;
    let x1 = SymMatrix::outer(&basis.xi[0]);
    let x3 = SymMatrix::outer(&basis.xi[2]);
    let h = Field::metric_fn(&dom, |x, o| {
        let m = basis.h_star.add(&x1.scale(amp * x[0].sin())).add(&x3.scale(amp * x[1].cos()));
        o.copy_from_slice(m.as_slice());
    });
    let mu = vec![1.0, 8.0, 8.0];
    Ok((basis, dom, h, mu))
}

/// Newton decomposition checks for n = 2: against Källén with vanishing
/// perturbation data, then with small smooth T, G, Θ.
pub fn newton_checks(points_per_axis: usize) -> Result<NewtonMeasurement, CliError> {
    let (basis, dom, h, mu) = newton_setup(points_per_axis)?;
    let n = basis.n;
    let zero_s = Field::zeros(&dom, 1);
    let zero_m = Field::zeros(&dom, n * n);
    let flat = NewtonTerms { t: std::slice::from_ref(&zero_s), g: std::slice::from_ref(&zero_m), theta: std::slice::from_ref(&zero_m) };
    let nd = newton_decompose(&basis, &h, &flat, &mu, 1)?;
    let kd = kallen_decompose(&basis, &h, &mu, 1)?;
    let degenerate_gap = nd.amplitudes.data.iter().zip(&kd.amplitudes.data).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));

    let t = Field::scalar_fn(&dom, |x| 0.02 * x[0].cos());
    let gm = Field::metric_fn(&dom, |x, o| o.copy_from_slice(&[0.01 * x[1].sin(), 0.005, 0.005, -0.01 * x[0].sin()]));
    let th = Field::metric_fn(&dom, |x, o| o.copy_from_slice(&[0.01, 0.004 * (x[0] + x[1]).cos(), 0.004 * (x[0] + x[1]).cos(), 0.01]));
    let terms = NewtonTerms { t: std::slice::from_ref(&t), g: std::slice::from_ref(&gm), theta: std::slice::from_ref(&th) };
    let pd = newton_decompose(&basis, &h, &terms, &mu, 1)?;

    // h − Σa²ξ⊗ξ − b G − b²Θ − Σ_{i≤n} μ_i⁻²∇a_i⊗∇a_i − E, rebuilt here.
    let mut a_lead = Field::zeros(&dom, n);
    for p in 0..dom.npts() {
        a_lead.at_mut(p).copy_from_slice(&pd.amplitudes.at(p)[..n]);
    }
    let ga = gradient(&a_lead);
    let mut worst = 0.0f64;
    for p in 0..dom.npts() {
        let a = pd.amplitudes.at(p);
        let c: Vec<f64> = a.iter().map(|v| v * v).collect();
        let mut rhs = basis.reconstruct(&c);
        let b = (a[n] * a[n] - t.data[p]).sqrt();
        rhs = rhs.add(&SymMatrix::from_rows(n, gm.at(p)).scale(b));
        rhs = rhs.add(&SymMatrix::from_rows(n, th.at(p)).scale(b * b));
        let g = ga.at(p);
        for i in 0..n {
            rhs = rhs.add(&SymMatrix::outer(&g[i * n..(i + 1) * n]).scale(1.0 / (mu[i + 1] * mu[i + 1])));
        }
        rhs = rhs.add(&SymMatrix::from_rows(n, pd.residual.at(p)));
        worst = worst.max(SymMatrix::from_rows(n, h.at(p)).sub(&rhs).op_norm());
    }
    let residual = metric_sup(&pd.residual, MatrixNorm::Operator);
    Ok(NewtonMeasurement { degenerate_gap, iterations: pd.iterations, reconstruction: worst, residual })
}

fn fmt_e(x: f64) -> String {
    format!("{x:.3e}")
}

fn check_audit() -> Measured {
    let reps = audit_grid()?;
    let failed: Vec<String> = reps.iter().filter(|r| !r.passed()).map(|r| format!("n={} eps={}", r.n, r.eps)).collect();
    let worst = reps.iter().map(|r| r.binding().margin()).fold(f64::INFINITY, f64::min);
    let theta_ok = (audit_exponents(3, 0.01, n_star(3))?.theta - (1.0 / 3.0 - 0.01)).abs() < 1e-15
        && (audit_exponents(4, 0.01, n_star(4))?.theta - (1.0 / 5.0 - 0.01)).abs() < 1e-15;
    Ok((failed.is_empty() && worst > 1e-8 && theta_ok, format!("{} points, smallest margin {}, failed {:?}", reps.len(), fmt_e(worst), failed)))
}

fn check_projection(samples: usize) -> Measured {
    let worst = (2..=6).map(|n| projection_roundtrip(n, samples, 11 + n as u64)).try_fold(0.0f64, |m, r| r.map(|v| m.max(v)))?;
    Ok((worst <= 1e-11, format!("max residual {} over {samples} samples per n", fmt_e(worst))))
}

fn check_phi(samples: usize) -> Measured {
    let worst = (2..=6).map(|n| phi_roundtrip(n, samples, 23 + n as u64)).try_fold(0.0f64, |m, r| r.map(|v| m.max(v)))?;
    Ok((worst <= 1e-11, format!("max residual {}", fmt_e(worst))))
}

fn check_profile() -> Measured {
    let (id, ratio) = corrugation_identity()?;
    Ok((id <= 1e-9 && (0.98..=1.02).contains(&ratio), format!("identity {} f/(2s^2) {ratio:.6}", fmt_e(id))))
}

fn check_kallen(points: usize) -> Measured {
    let e = kallen_errors(2, points, 2)?;
    let target = 1.0 / 64.0;
    let ratios: Vec<f64> = e.windows(2).map(|w| w[1] / w[0]).collect();
    let ok = ratios.iter().all(|r| (0.7 * target..=1.3 * target).contains(r));
    let show = |v: &[f64]| v.iter().map(|x| fmt_e(*x)).collect::<Vec<_>>().join(" ");
    Ok((ok, format!("E [{}] ratios [{}] target {}", show(&e), show(&ratios), fmt_e(target))))
}

fn check_spiral(points: usize, lambda: f64) -> Measured {
    let r = spiral_residual(points, lambda, 0.0, 0.0)?;
    Ok((r <= 1e-6, format!("{points}^3 lambda {lambda}: residual/delta {}", fmt_e(r))))
}

fn check_spiral_curved() -> Measured {
    let r1 = spiral_residual(64, 16.0, 0.5, 0.3)?;
    let r2 = spiral_residual(64, 32.0, 0.5, 0.3)?;
    let q = r2 / r1;
    Ok(((0.375..=0.625).contains(&q), format!("bent base, residual ratio for doubled lambda {q:.4}")))
}

fn check_corrugation(points: usize) -> Measured {
    let e = corrugation_error(points)?;
    Ok((e <= 0.02, format!("{points}^3 relative error {}", fmt_e(e))))
}

fn check_frames(points: usize) -> Measured {
    let (o, nr) = frame_residuals(points)?;
    Ok((o <= 1e-10 && nr <= 1e-10, format!("orthonormality {} normality {}", fmt_e(o), fmt_e(nr))))
}

fn check_newton(points: usize) -> Measured {
    let m = newton_checks(points)?;
    let ok = m.degenerate_gap <= 1e-9 && m.iterations <= 6 && m.reconstruction <= 1e-9;
    Ok((ok, format!(
        "gap {} iterations {} reconstruction {} |E| {}",
        fmt_e(m.degenerate_gap),
        m.iterations,
        fmt_e(m.reconstruction),
        fmt_e(m.residual)
    )))
}

fn check_stage_c0() -> Measured {
    // The deficit contraction is not attainable at this scale (it is
    // reported, not checked); the C⁰ contract is.
    let m = stage_contraction(64)?;
    Ok((m.displacement <= m.displacement_bound && m.deficit_after.is_finite(), format!(
        "64^3 deficit {} -> {}, |du| {} vs {}",
        fmt_e(m.deficit_before),
        fmt_e(m.deficit_after),
        fmt_e(m.displacement),
        fmt_e(m.displacement_bound)
    )))
}

fn check_determinism() -> Measured {
    let text = r#"
n = 2
eps = 0.1
a = 1e6
stages = 1
[grid]
points_per_axis = 32
period = 6.283185307179586
[scenario]
kind = "manufactured-deficit"
perturbation = 0.1
[seeds]
master = 5
[ladder]
kind = "geometric"
base = 1.0
growth = 1.0
spiral_ratio = 1.5
corrugation_ratio = 1.5
"#;
    let dir = std::env::temp_dir().join(format!("cforge-verify-{}", std::process::id()));
    let mut snaps = vec![];
    for k in 0..2 {
        let mut cfg = crate::config::RunConfig::parse(text)?;
        cfg.output.dir = dir.join(format!("run{k}"));
        crate::run::cmd_run(&cfg)?;
        let read = |name: &str| std::fs::read(cfg.output.dir.join(name)).map_err(|e| CliError::Io(e.to_string()));
        snaps.push((read(crate::run::FINAL_SNAPSHOT)?, read(crate::run::TRACE_FILE)?));
    }
    let _ = std::fs::remove_dir_all(&dir);
    Ok((snaps[0] == snaps[1], format!("{} snapshot bytes compared", snaps[0].0.len())))
}

/// Runs a suite, calling `log` after each check.
pub fn run_suite(suite: Suite, log: &mut dyn FnMut(&CheckOutcome)) -> Vec<CheckOutcome> {
    let mut checks: Vec<(&'static str, Box<dyn FnOnce() -> Measured>)> = vec![
        ("audit.grid", Box::new(check_audit)),
        ("symcore.projection", Box::new(|| check_projection(if suite == Suite::Full { 1000 } else { 200 }))),
        ("symcore.phi", Box::new(|| check_phi(if suite == Suite::Full { 1000 } else { 200 }))),
        ("profiles.identity", Box::new(check_profile)),
        ("frames.residuals", Box::new(|| check_frames(if suite == Suite::Full { 64 } else { 32 }))),
        ("decomp.newton", Box::new(|| check_newton(if suite == Suite::Full { 64 } else { 32 }))),
        ("decomp.kallen_scaling", Box::new(|| check_kallen(if suite == Suite::Full { 128 } else { 64 }))),
        ("stage.spiral_small", Box::new(|| check_spiral(32, 8.0))),
        ("stage.spiral_bent_scaling", Box::new(check_spiral_curved)),
        ("stage.corrugation_small", Box::new(|| check_corrugation(64))),
    ];
    if suite == Suite::Full {
        checks.push(("stage.spiral_128", Box::new(|| check_spiral(128, 32.0))));
        checks.push(("stage.c0_contract", Box::new(check_stage_c0)));
        checks.push(("cli.determinism", Box::new(check_determinism)));
    }
    let mut out = vec![];
    for (id, f) in checks {
        let c = timed(id, f);
        log(&c);
        out.push(c);
    }
    out
}
