use std::f64::consts::{FRAC_PI_2, PI, TAU};

use cforge::decomp::kallen_decompose_unchecked;
use cforge::fieldlab::{gradient, metric_sup, pullback_metric, sup_norm, MatrixNorm};
use cforge::profiles::CorrugationProfile;
use cforge::stage::{
    corrugation_round, eps_upper, init_short, make_global_params, make_schedule, realize_ladder, round_directions,
    run, run_stage, spiral_step, update_amplitudes, CheckStatus, CorrugationTerm, InitOptions, Ladder, Mode,
    SpiralSpec, StageOptions, Tracer, Wave,
};
use cforge::symcore::n_star;
use cforge::{Error, Field, GridDomain, ImmersionField, PrimitiveBasis, SymMatrix};
use proptest::prelude::*;

fn close_rel(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1e-300)
}

#[test]
fn params_n3() {
    let gp = make_global_params(3, 0.02, 1.0, 1e6).unwrap();
    assert!((gp.theta - (1.0 / 3.0 - 0.02)).abs() < 1e-15);
    assert!((gp.b - 1.02).abs() < 1e-15);
    assert_eq!(gp.j, 103);
    assert!((gp.alpha - 4e-5).abs() < 1e-18);
    // ϑ = 1.02·(1/3)·0.96, τ = 2ϑb·7 + ϑ − b, worked by hand.
    assert!((gp.vartheta - 0.3264).abs() < 1e-14);
    assert!((gp.tau - 3.967392).abs() < 1e-12);
    assert_eq!(gp.n_star, 6);
    assert!((gp.delta_star - 1.0 / 15.0).abs() < 1e-15);
}

#[test]
fn params_even_dimension() {
    let gp = make_global_params(4, 0.02, 1.0, 1e6).unwrap();
    assert!((gp.theta - 0.18).abs() < 1e-15);
    assert_eq!(gp.rounds(), 2);
    assert_eq!(gp.ladder_len(), 6);
}

#[test]
fn params_preconditions() {
    assert!(matches!(make_global_params(3, 0.3, 1.0, 1e6), Err(Error::EpsOutOfRange(_))));
    assert!(matches!(make_global_params(3, 0.0, 1.0, 1e6), Err(Error::EpsOutOfRange(_))));
    assert!(matches!(make_global_params(3, 0.02, 1.0, 1.0), Err(Error::Precondition(_))));
    assert!(matches!(make_global_params(3, 0.02, 0.0, 1e6), Err(Error::Precondition(_))));
    assert!(matches!(make_global_params(1, 0.02, 1.0, 1e6), Err(Error::InvalidDimension(_))));
    assert!((eps_upper(3) - 2.0 / 9.0).abs() < 1e-15);
    assert!((eps_upper(2) - 1.0 / 3.0).abs() < 1e-15);
}

proptest! {
    #[test]
    fn exponent_ordering(n in 2usize..=7, t in 0.01f64..0.99, a in 2.0f64..1e8) {
        let eps = t * eps_upper(n);
        let gp = make_global_params(n, eps, 1.0, a).unwrap();
        prop_assert!(gp.theta < gp.vartheta / gp.b && gp.vartheta / gp.b < gp.theta + eps);
        let want_j = (4.0 / ((n as f64 - 1.0) * eps)).floor() as usize + 3;
        prop_assert!(gp.j == want_j || gp.j == want_j + 1);
    }

    #[test]
    fn schedule_matches_raw_formulas(n in 2usize..=5, t in 0.1f64..0.9, m in 0usize..4) {
        let eps = t * eps_upper(n);
        let a = 1e6;
        let gp = make_global_params(n, eps, 1.0, a).unwrap();
        let s = make_schedule(&gp, m);
        let delta = |k: i32| gp.delta_star * a.powf(-2.0 * gp.vartheta * gp.b.powi(k));
        let lam_m = a.powf(gp.b.powi(m as i32 + 1) + gp.tau);
        prop_assert!(close_rel(s.delta_m, delta(m as i32), 1e-12));
        prop_assert!(close_rel(s.delta_m1, delta(m as i32 + 1), 1e-12));
        prop_assert!(close_rel(s.lambda_m, lam_m, 1e-12));
        let ell = (delta(m as i32 + 1) / delta(m as i32)).sqrt() / (lam_m * a.powf(gp.alpha));
        let big = delta(m as i32 + 1) * a.powf(gp.alpha) / delta(m as i32 + 2);
        prop_assert!(close_rel(s.ell, ell, 1e-12));
        prop_assert!(close_rel(s.big_lambda, big, 1e-12));
        prop_assert!(s.delta_m1 / s.delta_m < 1.0);
        prop_assert!(s.big_lambda > 1.0);
        prop_assert!(close_rel(s.lambda_steps[0], 1.0 / ell, 1e-12));
        prop_assert_eq!(s.lambda_steps.len(), 3 * n / 2 + 1);
        for i in 1..s.lambda_steps.len() {
            let r = if i <= n { big.powf(1.0 / gp.j as f64) } else { big };
            prop_assert!(close_rel(s.lambda_steps[i], s.lambda_steps[i - 1] * r, 1e-12));
        }
    }

    /// The rounds corrugate exactly the directions n+1..n_*, once each.
    #[test]
    fn parity_bookkeeping(n in 2usize..=9) {
        let gp = make_global_params(n, 0.5 * eps_upper(n), 1.0, 1e6).unwrap();
        let mut seen: Vec<usize> = (1..=gp.rounds()).flat_map(|j| round_directions(n, j)).collect();
        let corrugated = if n % 2 == 1 { (n - 1) / 2 * n } else { n / 2 + (n / 2 - 1) * n };
        prop_assert_eq!(seen.len(), corrugated);
        prop_assert_eq!(n + corrugated, n_star(n));
        seen.sort_unstable();
        prop_assert_eq!(seen, (n..n_star(n)).collect::<Vec<_>>());
    }
}

#[test]
fn round_directions_n3() {
    assert_eq!(round_directions(3, 1), vec![3, 4, 5]);
    assert_eq!(round_directions(4, 1), vec![4, 5]);
    assert_eq!(round_directions(4, 2), vec![6, 7, 8, 9]);
}

#[test]
fn geometric_ladder_realization() {
    let basis = PrimitiveBasis::new(2).unwrap();
    let dom = GridDomain::new(2, 64, TAU).unwrap();
    let gp = make_global_params(2, 0.1, 1.0, 1e6).unwrap();
    let lad = Ladder::Geometric { base: 1.0, growth: 2.0, spiral_ratio: 1.5, corrugation_ratio: 2.0 };
    let s = make_schedule(&gp, 1);
    assert_eq!(s.ladder(&gp, &lad), vec![2.0, 3.0, 4.5, 9.0]);
    let r = realize_ladder(&gp, &s, &lad, &basis, &dom);
    // Lattice frequencies are integers along e_i and multiples of √2 along (1,1).
    assert_eq!(r.spirals.iter().map(|w| w.lambda).collect::<Vec<_>>(), vec![3.0, 5.0]);
    assert_eq!(r.rounds[0][0].0, 2);
    assert!((r.rounds[0][0].1.lambda - 6.0 * 2f64.sqrt()).abs() < 1e-12);
    assert_eq!(r.kallen_mu(), vec![2.0, 3.0, 5.0]);
}

fn spiral_spec(basis: &PrimitiveBasis, dom: &GridDomain, lambda: f64, delta: f64) -> SpiralSpec {
    SpiralSpec {
        i: 1,
        wave: Wave::snap(dom, basis.lattice_direction(0), lambda),
        mu: 1.0,
        delta,
        corrector_depth: None,
        frame_bound: 100.0,
        reduction_bound: 1e6,
    }
}

#[test]
fn spiral_with_zero_amplitude_is_identity() {
    let basis = PrimitiveBasis::new(2).unwrap();
    let dom = GridDomain::new(2, 32, TAU).unwrap();
    let per = Field::from_fn(&dom, 4, |x, o| {
        o.fill(0.0);
        o[2] = 0.2 * x[0].sin();
    });
    let u = ImmersionField::from_parts(vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0], &per).unwrap();
    let zero = Field::zeros(&dom, 1);
    for depth in [None, Some(1)] {
        let spec = SpiralSpec { corrector_depth: depth, ..spiral_spec(&basis, &dom, 4.0, 1e-3) };
        let out = spiral_step(&basis, &u, &zero, &spec).unwrap();
        assert_eq!(out.u.values, u.values);
        assert_eq!(out.u.grad, u.grad);
    }
}

/// On a flat base the cross terms vanish identically: (cos θζ − sin θη)·(sin θζ + cos θη) = 0
/// and |sin θζ + cos θη|² = 1, so the increment is δa²ξ⊗ξ + δλ⁻²∇a⊗∇a.
#[test]
fn spiral_on_flat_base() {
    let basis = PrimitiveBasis::new(2).unwrap();
    let dom = GridDomain::new(2, 64, TAU).unwrap();
    let u = ImmersionField::inclusion(&dom, 4, 1.0).unwrap();
    let delta = 1e-3;
    let amp = Field::scalar_fn(&dom, |x| 1.0 + 0.2 * x[1].sin());
    let spec = spiral_spec(&basis, &dom, 8.0, delta);
    let out = spiral_step(&basis, &u, &amp, &spec).unwrap();
    let xi = SymMatrix::outer(&basis.xi[0]);
    let ga = gradient(&amp);
    let mut worst: f64 = 0.0;
    for p in 0..dom.npts() {
        let a = amp.data[p];
        let want = xi.scale(delta * a * a).add(&SymMatrix::outer(ga.at(p)).scale(delta / 64.0));
        for (x, y) in out.increment.at(p).iter().zip(want.as_slice()) {
            worst = worst.max((x - y).abs());
        }
    }
    assert!(worst < 1e-12 * delta, "{worst}");
    assert!(out.record.residual_sup < 1e-12 * delta);
    let names: Vec<&str> = out.record.named_terms.iter().map(|t| t.name.as_str()).collect();
    assert_eq!(names, ["delta_a2_xi_xi", "delta_grad_a_grad_a", "delta_R", "delta_G"]);
    // Displacement δ^{1/2}a/λ.
    assert!((out.record.c0_delta - delta.sqrt() * 1.2 / 8.0).abs() < 1e-12);
}

/// On a bent base the remainder is O(δ/λ): doubling λ halves it.
#[test]
fn spiral_residual_scaling_on_bent_base() {
    let basis = PrimitiveBasis::new(2).unwrap();
    let dom = GridDomain::new(2, 128, FRAC_PI_2).unwrap();
    let k = 4.0;
    let bump = Field::from_fn(&dom, 4, |x, o| {
        o.fill(0.0);
        o[2] = 0.3 * (k * x[1]).sin() / k;
        o[3] = 0.3 * (k * x[0]).cos() / k;
    });
    let u = ImmersionField::inclusion(&dom, 4, 1.0).unwrap().add_periodic(&bump);
    let amp = Field::scalar_fn(&dom, |x| 1.0 + 0.5 * (k * x[1]).sin());
    let delta = 1e-4;
    let res = |lam: f64| {
        let spec = SpiralSpec { mu: k, ..spiral_spec(&basis, &dom, lam, delta) };
        spiral_step(&basis, &u, &amp, &spec).unwrap().record.residual_sup / delta
    };
    let (r1, r2) = (res(32.0), res(64.0));
    println!("bent-base residual/delta: lambda 32 -> {r1:.4e}, 64 -> {r2:.4e}, ratio {:.4}", r2 / r1);
    assert!((0.375..=0.625).contains(&(r2 / r1)));
}

#[test]
fn spiral_preconditions() {
    let basis = PrimitiveBasis::new(2).unwrap();
    let dom = GridDomain::new(2, 32, TAU).unwrap();
    let u = ImmersionField::inclusion(&dom, 4, 1.0).unwrap();
    let amp = Field::constant(&dom, &[1.0]);
    let fast = spiral_spec(&basis, &dom, 16.0, 1e-3);
    assert!(matches!(spiral_step(&basis, &u, &amp, &fast), Err(Error::Nyquist { .. })));
    let bad_dir = SpiralSpec { i: 3, ..spiral_spec(&basis, &dom, 2.0, 1e-3) };
    assert!(matches!(spiral_step(&basis, &u, &amp, &bad_dir), Err(Error::Domain(_))));
    let flat = ImmersionField::from_parts(vec![0.0; 8], &Field::zeros(&dom, 4)).unwrap();
    let ok = spiral_spec(&basis, &dom, 2.0, 1e-3);
    assert!(matches!(spiral_step(&basis, &flat, &amp, &ok), Err(Error::DegenerateImmersion(_))));
}

fn corrugation_setup() -> (PrimitiveBasis, GridDomain, ImmersionField, CorrugationProfile) {
    let basis = PrimitiveBasis::new(2).unwrap();
    let dom = GridDomain::new(2, 64, TAU).unwrap();
    let u = ImmersionField::inclusion(&dom, 4, 1.0).unwrap();
    (basis, dom, u, CorrugationProfile::standard().unwrap())
}

#[test]
fn corrugation_with_zero_amplitude_is_identity() {
    let (basis, dom, u, prof) = corrugation_setup();
    let b = Field::zeros(&dom, 1);
    let wave = Wave::snap(&dom, basis.lattice_direction(2), 5.0);
    let terms = [CorrugationTerm { k: 2, b: &b, wave: &wave, normal: 0 }];
    let (u2, _, inc) = corrugation_round(&basis, &u, &terms, 1.0, &prof, 100.0).unwrap();
    assert_eq!(u2.values, u.values);
    assert_eq!(sup_norm(&inc), 0.0);
}

/// Flat base, constant b: ∇u' = ∇u + (∂_tΓ₁ζ + ∂_tΓ₂η)ξᵀ with ζ = Fξ tangent
/// and η normal, so the increment is ((1+∂_tΓ₁)² + (∂_tΓ₂)² − 1)ξ⊗ξ = s²ξ⊗ξ.
#[test]
fn corrugation_on_flat_base() {
    let (basis, dom, u, prof) = corrugation_setup();
    let b = Field::constant(&dom, &[0.1]);
    let wave = Wave::snap(&dom, basis.lattice_direction(2), 5.0);
    let terms = [CorrugationTerm { k: 2, b: &b, wave: &wave, normal: 0 }];
    let (_, rec, inc) = corrugation_round(&basis, &u, &terms, 1.0, &prof, 100.0).unwrap();
    let want = Field::constant_metric(&dom, &SymMatrix::outer(&basis.xi[2]).scale(0.01));
    let err = metric_sup(&inc.sub(&want), MatrixNorm::Operator);
    println!("flat corrugation: |increment - b^2 xi xi| = {err:.3e}");
    assert!(err < 1e-6 * 0.01);
    assert!((rec.residual_sup - err).abs() < 1e-15);
}

#[test]
fn corrugation_guards() {
    let (basis, dom, u, prof) = corrugation_setup();
    let wave = Wave::snap(&dom, basis.lattice_direction(2), 5.0);
    let big = Field::constant(&dom, &[10.0]);
    let terms = [CorrugationTerm { k: 2, b: &big, wave: &wave, normal: 0 }];
    assert!(matches!(corrugation_round(&basis, &u, &terms, 1.0, &prof, 100.0), Err(Error::CorrugationRange(_))));
    let b = Field::constant(&dom, &[0.1]);
    let terms = [CorrugationTerm { k: 2, b: &b, wave: &wave, normal: 2 }];
    assert!(matches!(corrugation_round(&basis, &u, &terms, 1.0, &prof, 100.0), Err(Error::InvalidDimension(_))));
}

#[test]
fn amplitude_update() {
    let basis = PrimitiveBasis::new(2).unwrap();
    let dom = GridDomain::new(2, 8, TAU).unwrap();
    let h = Field::constant_metric(&dom, &basis.h_star);
    let dec = kallen_decompose_unchecked(&basis, &h, &[1.0, 8.0, 8.0], 0).unwrap();
    let (b, clamped) = update_amplitudes(&basis, &dec, &Field::zeros(&dom, 4), Mode::Strict).unwrap();
    assert_eq!(clamped, 0);
    assert!(b[0].data.iter().all(|&v| (v - 1.0).abs() < 1e-14));
    // R = 0.75·ξ₃⊗ξ₃ gives b = ½; R = 2ξ₃⊗ξ₃ is negative under the root.
    let r = Field::constant_metric(&dom, &SymMatrix::outer(&basis.xi[2]).scale(0.75));
    let (b, _) = update_amplitudes(&basis, &dec, &r, Mode::Strict).unwrap();
    assert!(b[0].data.iter().all(|&v| (v - 0.5).abs() < 1e-14));
    let r = Field::constant_metric(&dom, &SymMatrix::outer(&basis.xi[2]).scale(2.0));
    assert!(matches!(update_amplitudes(&basis, &dec, &r, Mode::Strict), Err(Error::AmplitudeFloor(_))));
    let (b, clamped) = update_amplitudes(&basis, &dec, &r, Mode::Relaxed).unwrap();
    assert_eq!(clamped, dom.npts());
    assert!(b[0].data.iter().all(|&v| v == 0.0));
}

fn manufactured(n: usize, m: usize, period: f64) -> (PrimitiveBasis, ImmersionField, Field, cforge::stage::GlobalParams) {
    let basis = PrimitiveBasis::new(n).unwrap();
    let dom = GridDomain::new(n, m, period).unwrap();
    let gp = make_global_params(n, 0.1 * eps_upper(n) * 3.0, 1.0, 1e6).unwrap();
    let u = ImmersionField::inclusion(&dom, 2 * n, 1.0).unwrap();
    let mut g = pullback_metric(&u);
    g.axpy(gp.delta(1), &Field::constant_metric(&dom, &basis.h_star));
    (basis, u, g, gp)
}

#[test]
fn manufactured_stage_n2() {
    let (basis, u, g, gp) = manufactured(2, 64, TAU);
    let opts = StageOptions {
        ladder: Ladder::Geometric { base: 1.0, growth: 1.0, spiral_ratio: 2.0, corrugation_ratio: 1.5 },
        ..StageOptions::default()
    };
    let prof = CorrugationProfile::standard().unwrap();
    let mut tracer = Tracer::default();
    let (_, rep) = run_stage(&basis, &u, &g, &gp, 0, &opts, &prof, &mut tracer).unwrap();
    println!("n=2 stage: deficit {:.4e} -> {:.4e}", rep.deficit_before_g, rep.deficit_after_g);
    assert!(rep.deficit_after_g < rep.deficit_before_g);
    // mollify, two spirals, one spiral-type round.
    let kinds: Vec<&str> = tracer.records.iter().map(|r| r.kind.as_str()).collect();
    assert_eq!(kinds, ["mollify", "spiral", "spiral", "spiral-round"]);
    for c in &rep.checks {
        assert!(c.lhs.is_finite() && c.rhs.is_finite(), "{}", c.id);
    }
    let c0 = rep.checks.iter().find(|c| c.id == "c0.increment").unwrap();
    assert_eq!(c0.status, CheckStatus::Pass);
    let line = tracer.records[1].to_json_line();
    let v: serde_json::Value = serde_json::from_str(&line).unwrap();
    for key in ["stage", "step", "kind", "deficit_before", "deficit_after", "named_terms", "residual_sup", "c0_delta", "c1_delta", "c2_norm"] {
        assert!(v.get(key).is_some(), "{key}");
    }
}

#[test]
fn stage_odd_bookkeeping() {
    let (basis, u, g, gp) = manufactured(3, 16, PI);
    let opts = StageOptions {
        ladder: Ladder::Geometric { base: 1.0, growth: 1.0, spiral_ratio: 1.3, corrugation_ratio: 1.2 },
        ..StageOptions::default()
    };
    let prof = CorrugationProfile::standard().unwrap();
    let mut tracer = Tracer::default();
    let (_, rep) = run_stage(&basis, &u, &g, &gp, 0, &opts, &prof, &mut tracer).unwrap();
    let kinds: Vec<&str> = tracer.records.iter().map(|r| r.kind.as_str()).collect();
    assert_eq!(&kinds[..4], ["mollify", "spiral", "spiral", "spiral"]);
    assert_eq!(kinds.len(), 4 + 1 + rep.splits);
    assert!(kinds[4..].iter().all(|k| *k == "corrugation-round-1"));
}

#[test]
fn stage_strict_mode_gates_the_precondition() {
    let (basis, u, mut g, gp) = manufactured(2, 32, TAU);
    // Ten times the admissible deficit.
    g.axpy(10.0 * basis.sigma_0 * gp.delta(1), &Field::constant_metric(&g.domain, &SymMatrix::identity(2)));
    let opts = StageOptions {
        mode: Mode::Strict,
        ladder: Ladder::Geometric { base: 1.0, growth: 1.0, spiral_ratio: 1.5, corrugation_ratio: 1.5 },
        ..StageOptions::default()
    };
    let prof = CorrugationProfile::standard().unwrap();
    let err = run_stage(&basis, &u, &g, &gp, 0, &opts, &prof, &mut Tracer::default()).unwrap_err();
    assert!(matches!(err.root(), Error::StrictViolation(_)), "{err}");
}

#[test]
fn stage_checks_dimensions() {
    let (basis, _, g, gp) = manufactured(2, 16, TAU);
    let wrong = ImmersionField::inclusion(&g.domain, 3, 1.0).unwrap();
    let prof = CorrugationProfile::standard().unwrap();
    let err = run_stage(&basis, &wrong, &g, &gp, 0, &StageOptions::default(), &prof, &mut Tracer::default()).unwrap_err();
    assert!(matches!(err.root(), Error::DimensionMismatch(_)));
}

#[test]
fn init_rejects_maps_that_are_not_short() {
    let basis = PrimitiveBasis::new(2).unwrap();
    let dom = GridDomain::new(2, 16, TAU).unwrap();
    let u = ImmersionField::inclusion(&dom, 4, 1.0).unwrap();
    let g = Field::constant_metric(&dom, &SymMatrix::identity(2).scale(0.5));
    let gp = make_global_params(2, 0.1, 0.25, 1e6).unwrap();
    let err = init_short(&basis, &g, &u, &gp, &InitOptions::default(), &mut Tracer::default()).unwrap_err();
    assert!(matches!(err, Error::NotShort(_)));
}

#[test]
fn init_from_shrunk_inclusion() {
    let basis = PrimitiveBasis::new(2).unwrap();
    let dom = GridDomain::new(2, 256, TAU).unwrap();
    let u = ImmersionField::inclusion(&dom, 4, 0.5).unwrap();
    let g = Field::constant_metric(&dom, &SymMatrix::identity(2));
    let gp = make_global_params(2, 0.1, 0.375, 1e6).unwrap();
    let opts = InitOptions { mu0: Some(1.0), k: 3.0, ..InitOptions::default() };
    let mut tracer = Tracer::default();
    let (u0, rep) = init_short(&basis, &g, &u, &gp, &opts, &mut tracer).unwrap();
    let kinds: Vec<&str> = tracer.records.iter().map(|r| r.kind.as_str()).collect();
    assert_eq!(kinds, ["init-mollify", "init-spiral", "init-spiral", "init-spiral"]);
    // T = 0.75·I − δ₁h_* has a negative off-diagonal, so the third direction
    // flips to (1, −1)/√2 and T = (0.75 − 2δ₁)(e₁e₁ + e₂e₂) + δ₁ν₃ν₃.
    let d1 = gp.delta(1);
    let r = 0.5f64.sqrt();
    assert!((rep.directions[2][0] - r).abs() < 1e-15 && (rep.directions[2][1] + r).abs() < 1e-15);
    for (c, w) in rep.min_coefficients.iter().zip([0.75 - 2.0 * d1, 0.75 - 2.0 * d1, d1]) {
        assert!((c - w).abs() < 1e-12, "{c} vs {w}");
    }
    assert_eq!(rep.shrink_steps, 0);
    // Amplitudes of order one against frequencies the grid can hold: the
    // spiral errors are O(a²/K), so the deficit is only reported here.
    println!("init 0.5-inclusion: deficit {:.4e} -> {:.4e}", tracer.records[0].deficit_before, tracer.records[3].deficit_after);
    assert!(u0.min_singular_value() > 0.0);
}

/// A barely short map: the target deficit is 5δ_*h_*, the amplitudes are
/// O(δ_*^{1/2}) and the spirals shrink the deficit.
#[test]
fn init_with_small_deficit() {
    let basis = PrimitiveBasis::new(2).unwrap();
    let dom = GridDomain::new(2, 256, TAU).unwrap();
    let u = ImmersionField::inclusion(&dom, 4, 1.0).unwrap();
    let gp = make_global_params(2, 0.1, 1e-4, 1e6).unwrap();
    let g = Field::constant_metric(&dom, &SymMatrix::identity(2).add(&basis.h_star.scale(5.0 * gp.delta_star + gp.delta(1))));
    let opts = InitOptions { mu0: Some(1.0), k: 3.0, ..InitOptions::default() };
    let mut tracer = Tracer::default();
    let (u0, rep) = init_short(&basis, &g, &u, &gp, &opts, &mut tracer).unwrap();
    let before = tracer.records[0].deficit_before;
    let after = tracer.records.last().unwrap().deficit_after;
    println!("init small deficit: {before:.4e} -> {after:.4e}");
    assert!(after < 0.5 * before);
    let c0 = rep.checks.iter().find(|c| c.id == "init.c0").unwrap();
    assert_eq!(c0.status, CheckStatus::Pass);
    assert!(sup_norm(&u0.values.sub(&u.values)) < 1e-2);
}

#[test]
fn run_needs_a_stage() {
    let (basis, u, g, gp) = manufactured(2, 16, TAU);
    let prof = CorrugationProfile::standard().unwrap();
    let err = run(&basis, &g, &u, &gp, 0, true, &StageOptions::default(), &InitOptions::default(), &prof, &mut Tracer::default());
    assert!(matches!(err, Err(Error::Precondition(_))));
}

#[test]
fn run_truncates_when_the_grid_cannot_resolve_the_ladder() {
    let (basis, u, g, gp) = manufactured(2, 16, TAU);
    let prof = CorrugationProfile::standard().unwrap();
    let (u1, rep) =
        run(&basis, &g, &u, &gp, 2, true, &StageOptions::default(), &InitOptions::default(), &prof, &mut Tracer::default())
            .unwrap();
    assert!(rep.truncated.as_deref().unwrap().contains("before stage 0"));
    assert!(rep.stages.is_empty());
    assert_eq!(rep.deficits_g.len(), 1);
    assert_eq!(u1.values, u.values);
}

#[test]
fn run_two_stages_logs_holder_estimates() {
    let (basis, u, g, gp) = manufactured(2, 32, TAU);
    let opts = StageOptions {
        ladder: Ladder::Geometric { base: 1.0, growth: 1.2, spiral_ratio: 1.5, corrugation_ratio: 1.2 },
        ..StageOptions::default()
    };
    let prof = CorrugationProfile::standard().unwrap();
    let (_, rep) = run(&basis, &g, &u, &gp, 2, true, &opts, &InitOptions::default(), &prof, &mut Tracer::default()).unwrap();
    assert_eq!(rep.stages.len(), 2);
    assert_eq!(rep.deficits_g.len(), 3);
    assert_eq!(rep.holder.len(), 2);
    for h in rep.holder.iter().flatten() {
        assert!(h.holder.is_finite() && h.interpolation > 0.0);
    }
}
