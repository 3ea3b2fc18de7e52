mod common;

use common::{bessel_i_quadrature, bessel_k_quadrature, i0_series_30};
use cornea_core::kernel::{
    admissibility, bound_constants, dv0, dv1, lemma_b_max, theorem1_b_max, v0, v1, ModelParams, LIPSCHITZ_M,
};

const CLINICAL_POINTS: [(f64, f64); 2] = [(2.07883, 2.76741), (1.94398, 2.27534)];

fn grid(n: usize) -> impl Iterator<Item = f64> {
    (1..=n).map(move |k| k as f64 / n as f64)
}

#[test]
fn v0_matches_series_oracle() {
    let got = v0(0.5, 2.0).unwrap();
    let want = i0_series_30(2f64.sqrt() * 0.5);
    assert!((got - want).abs() < 1e-15 * want);
}

#[test]
fn v1_matches_integral_oracle() {
    let s = 2f64.sqrt();
    let want = bessel_i_quadrature(0, s) * bessel_k_quadrature(0, s / 2.0)
        - bessel_i_quadrature(0, s / 2.0) * bessel_k_quadrature(0, s);
    let got = v1(0.5, 2.0).unwrap();
    assert!((got - want).abs() < 1e-10 * want, "{got} vs {want}");
}

#[test]
fn v1_grows_logarithmically_at_origin() {
    let a = 2.0;
    let near = v1(1e-12, a).unwrap();
    let nearer = v1(1e-13, a).unwrap();
    // Each decade adds I0(sqrt a) ln 10.
    let step = nearer - near;
    let want = i0_series_30(a.sqrt()) * 10f64.ln();
    assert!((step - want).abs() < 1e-9 * want);
    assert!(nearer > 30.0);
}

#[test]
fn derivatives_match_finite_differences() {
    let (r, a, d) = (0.3, 2.0, 1e-5);
    let fd0 = (v0(r + d, a).unwrap() - v0(r - d, a).unwrap()) / (2.0 * d);
    assert!((fd0 - dv0(r, a).unwrap()).abs() < 1e-6);
    let fd1 = (v1(r + d, a).unwrap() - v1(r - d, a).unwrap()) / (2.0 * d);
    assert!((fd1 - dv1(r, a).unwrap()).abs() < 1e-6);
}

#[test]
fn r_dv1_limit_at_origin() {
    for &a in &[0.5f64, 2.0, 5.0] {
        let lim = -1e-6 * dv1(1e-6, a).unwrap();
        let want = i0_series_30(a.sqrt());
        assert!((lim / want - 1.0).abs() < 1e-6, "a = {a}");
    }
}

#[test]
fn sign_structure_and_monotonicity() {
    for &a in &[0.5, 1.0, 2.0, 5.0] {
        let mut prev_v0 = 1.0;
        let mut prev_r_dv1 = f64::INFINITY;
        for r in grid(1000) {
            let (p, q) = (v0(r, a).unwrap(), v1(r, a).unwrap());
            let (dp, dq) = (dv0(r, a).unwrap(), dv1(r, a).unwrap());
            assert!(p > 0.0 && p >= prev_v0, "v0 at a = {a}, r = {r}");
            assert!(q >= 0.0 && dp >= 0.0 && dq <= 0.0, "signs at a = {a}, r = {r}");
            assert!(-r * dq <= prev_r_dv1, "-r v1' at a = {a}, r = {r}");
            prev_v0 = p;
            prev_r_dv1 = -r * dq;
        }
    }
}

#[test]
fn bound_constants_match_oracle_at_2_2() {
    let k = bound_constants(&ModelParams::new(2.0, 2.0).unwrap());
    let s = 2f64.sqrt();
    let (i0s, i1s) = (bessel_i_quadrature(0, s), bessel_i_quadrature(1, s));
    let q = 1.0 - 1.0 / i0s;
    let r = 2.0 / s * (i1s / i0s) * (2.0 * i0s - 1.0);
    assert!((k.q_bound - q).abs() < 1e-12);
    assert!((k.r_bound - r).abs() < 1e-12);
    assert_eq!(k.lipschitz_m, LIPSCHITZ_M);
    assert_eq!(k.contraction, LIPSCHITZ_M * k.r_bound);
}

#[test]
fn bound_constants_are_linear_in_b() {
    let one = bound_constants(&ModelParams::new(1.7, 0.9).unwrap());
    let two = bound_constants(&ModelParams::new(1.7, 1.8).unwrap());
    assert_eq!(two.q_bound, 2.0 * one.q_bound);
    assert_eq!(two.r_bound, 2.0 * one.r_bound);
    assert_eq!(two.contraction, 2.0 * one.contraction);
    let tiny = bound_constants(&ModelParams::new(1.7, 1e-12).unwrap());
    assert!(tiny.q_bound < 1e-11);
}

#[test]
fn theorem_bound_is_unit_contraction() {
    for &a in &[0.25, 1.0, 2.0, 5.0, 10.0] {
        let b = theorem1_b_max(a).unwrap();
        let c = bound_constants(&ModelParams::new(a, b).unwrap()).contraction;
        assert!((c - 1.0).abs() < 1e-10, "a = {a}: {c}");
    }
}

#[test]
fn lemma_bound_closed_form_at_2() {
    let s = 2f64.sqrt();
    let (i0s, i1s) = (bessel_i_quadrature(0, s), bessel_i_quadrature(1, s));
    let want = s / i1s * (2.0 * i0s - 1.0).sqrt() / (i0s - 1.0);
    assert!((lemma_b_max(2.0).unwrap() - want).abs() < 1e-10 * want);
}

#[test]
fn curves_positive_and_finite() {
    for k in 0..=200 {
        let a = 0.25 + (10.0 - 0.25) * k as f64 / 200.0;
        for b in [theorem1_b_max(a).unwrap(), lemma_b_max(a).unwrap()] {
            assert!(b.is_finite() && b > 0.0, "a = {a}");
        }
    }
    assert!(lemma_b_max(1e-10).unwrap() > 1e4);
    assert!(theorem1_b_max(0.0).is_err());
    assert!(lemma_b_max(-1.0).is_err());
}

#[test]
fn clinical_parameters_are_admissible() {
    for (a, b) in CLINICAL_POINTS {
        let rep = admissibility(&ModelParams::new(a, b).unwrap());
        assert!(rep.theorem1_ok && rep.lemma_ok, "({a}, {b}): {rep:?}");
        assert!(bound_constants(&rep.params).contraction < 1.0);
    }
    let b = 10.0 * theorem1_b_max(2.0).unwrap();
    assert!(!admissibility(&ModelParams::new(2.0, b).unwrap()).theorem1_ok);
}

#[test]
fn admissibility_flag_edges() {
    let a = 2.0;
    let t = theorem1_b_max(a).unwrap();
    let l = lemma_b_max(a).unwrap();
    assert!(!admissibility(&ModelParams::new(a, t).unwrap()).theorem1_ok);
    assert!(admissibility(&ModelParams::new(a, l).unwrap()).lemma_ok);
}
