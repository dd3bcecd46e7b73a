use std::f64::consts::TAU;

use cforge::frames::{build_frame, correction_residual, tangential_correction};
use cforge::{Error, Field, GridDomain, ImmersionField};
use proptest::prelude::*;

fn dom(n: usize, m: usize) -> GridDomain {
    GridDomain::new(n, m, TAU).unwrap()
}

/// u(x) = (x₀, x₁, ε sin x₀, 0).
fn graph(eps: f64) -> ImmersionField {
    let d = dom(2, 32);
    let per = Field::from_fn(&d, 4, |x, o| {
        o.fill(0.0);
        o[2] = eps * x[0].sin();
    });
    ImmersionField::from_parts(vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0], &per).unwrap()
}

#[test]
fn inclusion_frame_is_the_complement_basis() {
    let d = dom(3, 8);
    let u = ImmersionField::inclusion(&d, 6, 1.0).unwrap();
    let f = build_frame(&u, 2.0).unwrap();
    assert_eq!(f.count(), 3);
    assert_eq!(f.continued, 0);
    for p in 0..d.npts() {
        for k in 0..3 {
            let mut e = [0.0; 6];
            e[3 + k] = 1.0;
            assert_eq!(f.at(p, k), &e);
        }
        assert_eq!(f.pivots[p], vec![3, 4, 5]);
    }
    assert_eq!(f.gradient_sup(), 0.0);
}

#[test]
fn graph_frame_spans_the_normal_space() {
    let eps = 0.4;
    let u = graph(eps);
    let f = build_frame(&u, 2.0).unwrap();
    assert!(f.orthonormality_residual() < 1e-14);
    assert!(f.normality_residual(&u) < 1e-14);
    // Normal projector against I − t₀t₀ᵀ/|t₀|² − t₁t₁ᵀ, t₀ = (1, 0, ε cos x₀, 0).
    let mut x = [0.0; 2];
    for p in 0..u.domain().npts() {
        u.domain().coords(p, &mut x);
        let t0 = [1.0, 0.0, eps * x[0].cos(), 0.0];
        let t00 = 1.0 + t0[2] * t0[2];
        for r in 0..4 {
            for s in 0..4 {
                let proj: f64 = (0..2).map(|k| f.at(p, k)[r] * f.at(p, k)[s]).sum();
                let id = if r == s { 1.0 } else { 0.0 };
                let t1 = if r == 1 && s == 1 { 1.0 } else { 0.0 };
                let want = id - t0[r] * t0[s] / t00 - t1;
                assert!((proj - want).abs() < 1e-13);
            }
        }
    }
    let gs = f.gradient_sup();
    assert!(gs.is_finite() && gs > 0.0 && gs < 1.0);
}

#[test]
fn frame_continues_past_a_tangent_candidate() {
    // u(x) = (0, x₁, x₀, 0): the first default candidate e₂ is tangent.
    let d = dom(2, 16);
    let u = ImmersionField::from_parts(vec![0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0], &Field::zeros(&d, 4)).unwrap();
    let f = build_frame(&u, 2.0).unwrap();
    assert_eq!(f.continued, d.npts());
    assert!(f.orthonormality_residual() < 1e-15);
    assert!(f.normality_residual(&u) < 1e-15);
    // Every point makes the same choice, so the frame is smooth.
    assert!(f.pivots.iter().all(|pv| *pv == f.pivots[0]));
    assert_eq!(f.gradient_sup(), 0.0);
}

#[test]
fn degenerate_maps_are_rejected() {
    let d = dom(2, 16);
    let flat = ImmersionField::from_parts(vec![0.0; 8], &Field::zeros(&d, 4)).unwrap();
    assert!(matches!(build_frame(&flat, 2.0), Err(Error::DegenerateImmersion(_))));
    assert!(matches!(tangential_correction(&flat), Err(Error::DegenerateImmersion(_))));
    let small = ImmersionField::inclusion(&d, 4, 0.1).unwrap();
    assert!(matches!(build_frame(&small, 2.0), Err(Error::DegenerateImmersion(_))));
    assert!(build_frame(&small, 200.0).is_ok());
    assert!(matches!(build_frame(&small, 1.0), Err(Error::Precondition(_))));
    let square = ImmersionField::inclusion(&d, 2, 1.0).unwrap();
    assert!(matches!(build_frame(&square, 2.0), Err(Error::InvalidDimension(_))));
}

#[test]
fn correction_of_a_graph() {
    let eps = 0.4;
    let u = graph(eps);
    let f = tangential_correction(&u).unwrap();
    assert!(correction_residual(&u, &f) < 1e-14);
    // (∇uᵀ∇u)⁻¹ = diag(1/(1 + ε²cos²x₀), 1) for this graph.
    let mut x = [0.0; 2];
    for p in 0..u.domain().npts() {
        u.domain().coords(p, &mut x);
        let c = eps * x[0].cos();
        let want = [1.0 / (1.0 + c * c), 0.0, 0.0, 1.0, c / (1.0 + c * c), 0.0, 0.0, 0.0];
        for (a, b) in f.at(p).iter().zip(want) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}

#[test]
fn correction_of_a_scaled_inclusion() {
    let d = dom(3, 8);
    let u = ImmersionField::inclusion(&d, 6, 0.5).unwrap();
    let f = tangential_correction(&u).unwrap();
    for p in 0..d.npts() {
        for r in 0..6 {
            for a in 0..3 {
                let want = if r == a { 2.0 } else { 0.0 };
                assert!((f.at(p)[r * 3 + a] - want).abs() < 1e-15);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]
    #[test]
    fn perturbed_inclusions(c in prop::collection::vec(-0.15f64..0.15, 12)) {
        let d = dom(2, 16);
        let per = Field::from_fn(&d, 4, |x, o| {
            for r in 0..4 {
                o[r] = c[3 * r] * x[0].sin() + c[3 * r + 1] * x[1].cos() + c[3 * r + 2] * (x[0] + x[1]).sin();
            }
        });
        let u = ImmersionField::from_parts(vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0], &per).unwrap();
        let f = build_frame(&u, 4.0).unwrap();
        prop_assert!(f.orthonormality_residual() < 1e-13);
        prop_assert!(f.normality_residual(&u) < 1e-13);
        let fc = tangential_correction(&u).unwrap();
        prop_assert!(correction_residual(&u, &fc) < 1e-12);
    }
}
