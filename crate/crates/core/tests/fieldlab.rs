use std::f64::consts::{FRAC_PI_4, PI, TAU};

use cforge::fieldlab::snapshot::{
    decode_field, decode_immersion, encode_field, encode_immersion, read_immersion, write_immersion,
};
use cforge::fieldlab::{
    deficit, differentiate, gradient, holder_seminorm, integrate_axis, kernel, metric_sup, mollify,
    pullback_metric, seminorm, sup_norm, MatrixNorm, Scheme,
};
use cforge::{Error, Field, GridDomain, ImmersionField, SymMatrix};
use proptest::prelude::*;

fn dom(n: usize, m: usize) -> GridDomain {
    GridDomain::new(n, m, TAU).unwrap()
}

#[test]
fn grid_preconditions() {
    assert!(matches!(GridDomain::new(2, 12, TAU), Err(Error::Precondition(_))));
    assert!(matches!(GridDomain::new(2, 4, TAU), Err(Error::Precondition(_))));
    assert!(matches!(GridDomain::new(2, 16, -1.0), Err(Error::Precondition(_))));
    assert!(matches!(GridDomain::new(0, 16, TAU), Err(Error::InvalidDimension(_))));
}

proptest! {
    #[test]
    fn index_roundtrip(p in 0usize..4096, axis in 0usize..3, k in -20isize..20) {
        let d = dom(3, 16);
        let mut idx = vec![0; 3];
        d.multi_index(p, &mut idx);
        prop_assert_eq!(d.flat_index(&idx), p);
        prop_assert_eq!(d.axis_index(p, axis), idx[axis]);
        let q = d.shifted(p, axis, k);
        let mut jdx = idx.clone();
        jdx[axis] = (idx[axis] as isize + k).rem_euclid(16) as usize;
        prop_assert_eq!(q, d.flat_index(&jdx));
    }
}

#[test]
fn nyquist_guard_boundary() {
    let d = dom(2, 64);
    let edge = FRAC_PI_4 / d.spacing;
    assert!(d.check_nyquist(edge).is_ok());
    assert!(matches!(d.check_nyquist(edge * 1.01), Err(Error::Nyquist { .. })));
}

#[test]
fn lattice_phase_is_exact() {
    let d = GridDomain::new(3, 16, 2.0).unwrap();
    let q = [1i64, -2, 3];
    let m = 2;
    let lam = d.lattice_frequency(&q, m);
    let qn = 14f64.sqrt();
    let ph = d.lattice_phase(&q, m);
    let mut x = vec![0.0; 3];
    for p in (0..d.npts()).step_by(7) {
        d.coords(p, &mut x);
        let direct = lam * (x[0] * q[0] as f64 + x[1] * q[1] as f64 + x[2] * q[2] as f64) / qn;
        let diff = (direct - ph[p]).rem_euclid(TAU);
        assert!(diff.min(TAU - diff) < 1e-12);
    }
    let (mm, l) = d.snap_frequency(&q, lam * 1.1);
    assert_eq!((mm, l), (2, lam));
    assert_eq!(d.snap_frequency(&q, 1e-3).0, 1);
}

#[test]
fn spectral_derivative_of_sine() {
    let d = dom(2, 64);
    let f = Field::scalar_fn(&d, |x| (3.0 * x[1]).sin() + x[0].cos());
    let d1 = differentiate(&f, 1, Scheme::Spectral);
    let d0 = differentiate(&f, 0, Scheme::Spectral);
    let mut x = [0.0; 2];
    for p in 0..d.npts() {
        d.coords(p, &mut x);
        assert!((d1.data[p] - 3.0 * (3.0 * x[1]).cos()).abs() < 1e-10);
        assert!((d0.data[p] + x[0].sin()).abs() < 1e-10);
    }
}

#[test]
fn central4_is_fourth_order() {
    let err = |m: usize| {
        let d = dom(1, m);
        let f = Field::scalar_fn(&d, |x| (3.0 * x[0]).sin());
        let df = differentiate(&f, 0, Scheme::Central4);
        let exact = Field::scalar_fn(&d, |x| 3.0 * (3.0 * x[0]).cos());
        sup_norm(&df.sub(&exact))
    };
    let ratio = err(32) / err(64);
    assert!((14.0..18.0).contains(&ratio), "{ratio}");
}

#[test]
fn gradient_layout() {
    let d = dom(2, 16);
    let f = Field::from_fn(&d, 2, |x, o| {
        o[0] = x[0].sin();
        o[1] = x[1].sin();
    });
    let g = gradient(&f);
    assert_eq!(g.ncomp, 4);
    let mut x = [0.0; 2];
    for p in 0..d.npts() {
        d.coords(p, &mut x);
        let want = [x[0].cos(), 0.0, 0.0, x[1].cos()];
        for (a, b) in g.at(p).iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn integrate_then_differentiate() {
    let d = dom(2, 32);
    let f = Field::scalar_fn(&d, |x| (2.0 * x[0]).cos() * x[1].sin() + 0.3 * (x[0] + x[1]).sin());
    let back = differentiate(&integrate_axis(&f, 0), 0, Scheme::Spectral);
    assert!(sup_norm(&back.sub(&f)) < 1e-12);
    assert!(integrate_axis(&f, 0).mean()[0].abs() < 1e-14);
}

#[test]
fn kernel_is_normalised() {
    let d = dom(2, 64);
    let k = kernel(&d, 0.5).unwrap();
    assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    assert!(k.iter().all(|&w| w >= 0.0));
    assert!(matches!(kernel(&d, TAU / 4.0), Err(Error::KernelOverlap { .. })));
    assert!(matches!(kernel(&d, 0.0), Err(Error::Precondition(_))));
}

#[test]
fn mollify_preserves_constants() {
    let d = dom(2, 32);
    let c = Field::constant(&d, &[2.5, -1.0]);
    let m = mollify(&c, 0.7).unwrap();
    assert!(sup_norm(&m.sub(&c)) < 1e-13);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn mollify_error_bound(k in 1usize..6, ell in 0.15f64..1.2, shift in 0.0f64..TAU) {
        let d = dom(2, 64);
        let kf = k as f64;
        let f = Field::scalar_fn(&d, |x| (kf * x[0] + shift).sin() * (x[1]).cos());
        let m = mollify(&f, ell).unwrap();
        // |f − f∗φ| ≤ ℓ·sup|∇f|, with sup|∇f| ≤ √(k²+1).
        prop_assert!(sup_norm(&m.sub(&f)) <= ell * (kf * kf + 1.0).sqrt());
    }
}

#[test]
fn pullback_of_inclusions() {
    let d = dom(2, 16);
    for (s, want) in [(1.0, 1.0), (0.5, 0.25)] {
        let u = ImmersionField::inclusion(&d, 4, s).unwrap();
        let g = pullback_metric(&u);
        for p in 0..d.npts() {
            assert_eq!(g.at(p), &[want, 0.0, 0.0, want]);
        }
        assert!((u.min_singular_value() - s).abs() < 1e-15);
    }
}

#[test]
fn pullback_of_a_graph() {
    let d = dom(2, 32);
    let eps = 0.3;
    let per = Field::from_fn(&d, 4, |x, o| {
        o[0] = 0.0;
        o[1] = 0.0;
        o[2] = eps * x[0].sin();
        o[3] = 0.0;
    });
    let lin = vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0];
    let u = ImmersionField::from_parts(lin, &per).unwrap();
    let g = pullback_metric(&u);
    let mut x = [0.0; 2];
    for p in 0..d.npts() {
        d.coords(p, &mut x);
        let c = x[0].cos();
        assert!((g.at(p)[0] - (1.0 + eps * eps * c * c)).abs() < 1e-12);
        assert!((g.at(p)[3] - 1.0).abs() < 1e-12);
        assert!(g.at(p)[1].abs() < 1e-12);
    }
    // Central differences agree with the spectral Jacobian to O(h⁴).
    assert!(sup_norm(&u.jacobian_central4().sub(&u.grad)) < 1e-4);
    // ∂₀∂₀u₂ = −ε sin x₀.
    assert!((u.hessian_sup() - eps).abs() < 1e-10);
    let h = u.hessian();
    assert_eq!(h.ncomp, 4 * 2 * 2);
    let want = Field::scalar_fn(&d, |x| -eps * x[0].sin());
    assert!(sup_norm(&Field::from_data(&d, 1, h.component(2 * 4)).unwrap().sub(&want)) < 1e-10);
}

#[test]
fn deficit_of_inclusion() {
    let d = dom(2, 16);
    let u = ImmersionField::inclusion(&d, 4, 0.5).unwrap();
    let g = Field::constant_metric(&d, &SymMatrix::identity(2));
    let def = deficit(&g, &u).unwrap();
    assert!((metric_sup(&def, MatrixNorm::Operator) - 0.75).abs() < 1e-15);
    assert!((metric_sup(&def, MatrixNorm::Frobenius) - 0.75 * 2f64.sqrt()).abs() < 1e-15);
    let wrong = Field::constant_metric(&dom(2, 32), &SymMatrix::identity(2));
    assert!(matches!(deficit(&wrong, &u), Err(Error::DimensionMismatch(_))));
}

#[test]
fn dimension_checks_on_construction() {
    let d = dom(2, 16);
    assert!(matches!(ImmersionField::inclusion(&d, 1, 1.0), Err(Error::InvalidDimension(_))));
    assert!(matches!(ImmersionField::from_parts(vec![1.0; 3], &Field::zeros(&d, 4)), Err(Error::DimensionMismatch(_))));
    assert!(Field::from_data(&d, 2, vec![0.0; 5]).is_err());
}

#[test]
fn seminorms_of_a_sine() {
    let d = dom(1, 64);
    let f = Field::scalar_fn(&d, |x| (2.0 * x[0]).sin());
    assert!((seminorm(&f, 0, Scheme::Spectral) - 1.0).abs() < 1e-12);
    assert!((seminorm(&f, 1, Scheme::Spectral) - 2.0).abs() < 1e-2);
    assert!((seminorm(&f, 2, Scheme::Spectral) - 4.0).abs() < 4e-2);
}

#[test]
fn holder_estimates_of_a_sine() {
    let d = dom(1, 64);
    let f = Field::scalar_fn(&d, |x| x[0].sin());
    // θ = 1: Lipschitz constant 1, attained as the separation shrinks.
    let l = holder_seminorm(&f, 1.0);
    assert!((0.99..=1.0 + 1e-12).contains(&l), "{l}");
    // θ = 1/2: sup_d 2 sin(d/2)/√d ≈ 1.204; the dyadic estimate sits below.
    let h = holder_seminorm(&f, 0.5);
    assert!((1.1..=1.21).contains(&h), "{h}");
    // At separation π: 2/√π.
    assert!(h >= 2.0 / PI.sqrt() - 1e-12);
}

#[test]
fn field_snapshot_roundtrip() {
    let d = dom(2, 16);
    let f = Field::from_fn(&d, 3, |x, o| {
        o[0] = x[0];
        o[1] = x[1].sin();
        o[2] = 1e-300;
    });
    let back: Field = decode_field(&encode_field(&f)).unwrap();
    assert_eq!(back, f);
}

#[test]
fn immersion_snapshot_roundtrip() {
    let d = dom(2, 16);
    let per = Field::from_fn(&d, 4, |x, o| {
        o[0] = 0.1 * x[1].sin();
        o[1] = 0.0;
        o[2] = 0.2 * x[0].cos();
        o[3] = 0.0;
    });
    let u = ImmersionField::from_parts(vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0], &per).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("u.snap");
    write_immersion(&path, &u).unwrap();
    let back: ImmersionField = read_immersion(&path).unwrap();
    assert_eq!(back.values, u.values);
    assert_eq!(back.linear, u.linear);
    assert!(sup_norm(&back.grad.sub(&u.grad)) < 1e-14);
}

#[test]
fn malformed_snapshots() {
    let d = dom(2, 8);
    let u = ImmersionField::inclusion(&d, 4, 1.0).unwrap();
    let bytes = encode_immersion(&u);
    assert!(matches!(decode_field::<f64>(&bytes), Err(Error::Format(_))));
    assert!(matches!(decode_immersion::<f64>(&encode_field(&u.values)), Err(Error::Format(_))));
    assert!(matches!(decode_immersion::<f64>(&bytes[..bytes.len() - 3]), Err(Error::Format(_))));
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(matches!(decode_immersion::<f64>(&bad), Err(Error::Format(_))));
    assert!(matches!(read_immersion::<f64>(std::path::Path::new("/nonexistent/u.snap")), Err(Error::Io(_))));
}

#[test]
fn single_precision_fields() {
    let d = cforge::fieldlab::GridDomain::<f32>::new(2, 32, std::f32::consts::TAU).unwrap();
    let f = cforge::fieldlab::Field::<f32>::scalar_fn(&d, |x| x[0].sin());
    let df = differentiate(&f, 0, Scheme::Spectral);
    let exact = cforge::fieldlab::Field::<f32>::scalar_fn(&d, |x| x[0].cos());
    assert!(sup_norm(&df.sub(&exact)) < 1e-5);
}
