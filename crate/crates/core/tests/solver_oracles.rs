mod common;

use common::{adaptive_simpson, i0_series_30};
use cornea_core::error::Error;
use cornea_core::kernel::{bound_constants, lemma_b_max, theorem1_b_max, v0, v1, ModelParams};
use cornea_core::solver::{
    envelope_check, envelope_constant, fd_solve, h0_profile, h0_slope, h0_value, normal_projection, picard_step,
    residual_sup, solve, Forcing, PicardOperator, RadialGrid, RadialProfile, SolveOptions,
};

fn params(a: f64, b: f64) -> ModelParams {
    ModelParams::new(a, b).unwrap()
}

fn grid(n: usize) -> RadialGrid {
    RadialGrid::uniform(n).unwrap()
}

/// Sup-norm difference between a profile and a finer one whose grid has
/// `2n - 1` nodes.
fn sup_diff_refined(coarse: &RadialProfile, fine: &RadialProfile) -> f64 {
    coarse
        .h
        .iter()
        .enumerate()
        .map(|(i, h)| (h - fine.h[2 * i]).abs())
        .fold(0.0, f64::max)
}

#[test]
fn first_step_matches_adaptive_quadrature() {
    let p = params(2.0, 2.0);
    let g = grid(4001);
    let h1 = picard_step(&p, &h0_profile(&p, &g)).unwrap();
    let r = 0.5;
    let i = 2000;
    assert_eq!(g.nodes()[i], r);

    let a = p.a();
    let force = |t: f64| normal_projection(h0_slope(&p, t));
    let outer = adaptive_simpson(&|t: f64| t * v1(t, a).unwrap() * force(t), r, 1.0, 1e-13);
    let inner = adaptive_simpson(&|t: f64| t * v0(t, a).unwrap() * force(t), 0.0, r, 1e-13);
    let want = p.b() / i0_series_30(a.sqrt()) * (v0(r, a).unwrap() * outer + v1(r, a).unwrap() * inner);
    assert!((h1.h[i] - want).abs() < 1e-8, "{} vs {want}", h1.h[i]);
}

#[test]
fn unit_forcing_reproduces_h0() {
    for &(a, b) in &[(0.5, 0.3), (2.0, 2.0), (5.0, 4.0)] {
        let p = params(a, b);
        let g = grid(201);
        let op = PicardOperator::new(&p, &g);
        let out = op.apply_forcing(&vec![1.0; g.len()]).unwrap();
        let h0 = h0_profile(&p, &g);
        assert!(out.sup_diff(&h0) < 1e-13, "a = {a}: {}", out.sup_diff(&h0));
        assert!(out.sup_diff_slope(&h0) < 1e-12);
    }
}

#[test]
fn first_iterate_lies_below_h0() {
    let p = params(2.0, 2.0);
    let g = grid(401);
    let h0 = h0_profile(&p, &g);
    let h1 = picard_step(&p, &h0).unwrap();
    assert!(h1.h.iter().zip(&h0.h).all(|(a, b)| a <= b));
    assert_eq!(h1.h[g.len() - 1], 0.0);
    assert_eq!(h1.dh[0], 0.0);
}

#[test]
fn h0_boundary_values() {
    let p = params(2.0, 2.0);
    let h0 = h0_profile(&p, &grid(101));
    assert_eq!(h0.h[100], 0.0);
    assert_eq!(h0.dh[0], 0.0);
    let want = 1.0 - 1.0 / i0_series_30(2f64.sqrt());
    assert!((h0_value(&p, 0.0) - want).abs() < 1e-15);
}

#[test]
fn sup_diff_history_contracts() {
    for &(a, b) in &[(1.0, 1.0), (2.0, 2.0), (2.07883, 2.76741), (5.0, 4.0)] {
        let p = params(a, b);
        let g = grid(401);
        let op = PicardOperator::new(&p, &g);
        let prev = h0_profile(&p, &g);
        let mut cur = op.step(&prev).unwrap();
        let c = bound_constants(&p).contraction;
        let mut last = cur.sup_diff_slope(&prev);
        for _ in 0..6 {
            let next = op.step(&cur).unwrap();
            let d = next.sup_diff_slope(&cur);
            assert!(d <= c * last + 1e-12, "({a}, {b}): {d:e} > {c} * {last:e}");
            last = d;
            cur = next;
        }
    }
}

#[test]
fn solve_is_deterministic() {
    let p = params(2.07883, 2.76741);
    let g = grid(401);
    let one = solve(&p, &g, &SolveOptions::default()).unwrap();
    let two = solve(&p, &g, &SolveOptions::default()).unwrap();
    assert_eq!(one.profile, two.profile);
    assert_eq!(one.sup_diff_history, two.sup_diff_history);
}

#[test]
fn four_iterations_reach_1e_6() {
    let p = params(2.0, 2.0);
    let opts = SolveOptions {
        tol: 1e-8,
        ..SolveOptions::default()
    };
    let rep = solve(&p, &grid(401), &opts).unwrap();
    assert!(rep.iterations <= 8, "{}", rep.iterations);
    // h1 - h0, ..., h4 - h3
    let d43 = rep.sup_diff_history[3];
    assert!((1e-7..=1e-5).contains(&d43), "{d43:e}");
    assert!(rep.final_sup_diff <= 1e-8);
}

#[test]
fn zero_pressure_gives_zero_profile() {
    let p = params(2.0, 0.0);
    let g = grid(101);
    let rep = solve(&p, &g, &SolveOptions::default()).unwrap();
    assert_eq!(rep.profile.sup_norm(), 0.0);
    assert_eq!(rep.iterations, 1);
    assert_eq!(residual_sup(&p, &rep.profile), 0.0);
    let fd = fd_solve(&p, &g, 1e-12, Forcing::Normal).unwrap();
    assert_eq!(fd.sup_norm(), 0.0);

    let small = solve(&params(2.0, 1e-12), &g, &SolveOptions::default()).unwrap();
    assert!(small.profile.sup_norm() < 1e-12);
}

#[test]
fn h0_is_not_a_nonlinear_solution() {
    let p = params(2.0, 2.0);
    assert!(residual_sup(&p, &h0_profile(&p, &grid(401))) > 1e-2);
}

#[test]
fn enforced_bound_rejects_large_pressure() {
    let a = 2.0;
    let b = theorem1_b_max(a).unwrap();
    let opts = SolveOptions {
        enforce_bound: true,
        ..SolveOptions::default()
    };
    match solve(&params(a, b), &grid(101), &opts) {
        Err(Error::BoundViolation { b_max, .. }) => assert_eq!(b_max, b),
        other => panic!("expected BoundViolation, got {other:?}"),
    }
    // Without enforcement the iteration still runs.
    assert!(solve(&params(a, b), &grid(101), &SolveOptions::default()).is_ok());
}

#[test]
fn exhausted_iterations_are_reported() {
    let opts = SolveOptions {
        max_iter: 2,
        ..SolveOptions::default()
    };
    assert!(matches!(
        solve(&params(2.0, 2.0), &grid(101), &opts),
        Err(Error::NoConvergence { iterations: 2, .. })
    ));
    let bad_tol = SolveOptions {
        tol: 0.0,
        ..SolveOptions::default()
    };
    assert!(solve(&params(2.0, 2.0), &grid(101), &bad_tol).is_err());
}

#[test]
fn envelope_holds_at_2_2() {
    let p = params(2.0, 2.0);
    let rep = solve(&p, &grid(401), &SolveOptions::default()).unwrap();
    assert_eq!(rep.envelope_ok, Some(true));
    let (ok, a_const) = envelope_check(&p, &rep.profile).unwrap();
    assert!(ok);

    let s = 2f64.sqrt();
    let i0s = i0_series_30(s);
    let i1s = common::bessel_i_quadrature(1, s);
    let h0p = -2.0 / s * i1s / i0s;
    let want = (1.0 + h0p * h0p) / (1.0 + (2.0 - 1.0 / i0s) * h0p * h0p);
    assert!((a_const - want).abs() < 1e-12);
    assert!(a_const > 0.0 && a_const <= 1.0);
}

#[test]
fn envelope_constant_tends_to_one() {
    let p = params(2.0, 1e-6);
    assert!((envelope_constant(&p) - 1.0).abs() < 1e-11);
    let rep = solve(&p, &grid(101), &SolveOptions::default()).unwrap();
    assert!(envelope_check(&p, &rep.profile).unwrap().0);
}

#[test]
fn envelope_outside_hypothesis_is_refused() {
    let a = 2.0;
    let b = 1.01 * lemma_b_max(a).unwrap();
    let p = params(a, b);
    let g = grid(101);
    assert!(matches!(
        envelope_check(&p, &h0_profile(&p, &g)),
        Err(Error::HypothesisViolation { .. })
    ));
}

#[test]
fn kernel_masses_within_bounds() {
    for &a in &[1.0, 2.0, 5.0] {
        let p = params(a, 1.0);
        let k = bound_constants(&p);
        let op = PicardOperator::new(&p, &grid(401));
        let (f, g) = op.kernel_masses();
        let fmax = f.iter().cloned().fold(0.0, f64::max);
        let gmax = g.iter().cloned().fold(0.0, f64::max);
        assert!(fmax <= k.q_bound + 1e-9, "a = {a}: {fmax} > {}", k.q_bound);
        assert!(gmax <= k.r_bound + 1e-9, "a = {a}: {gmax} > {}", k.r_bound);
    }
}

#[test]
fn agrees_with_finite_difference_newton() {
    for &(a, b) in &[(1.0, 1.0), (2.0, 2.0), (2.07883, 2.76741)] {
        let p = params(a, b);
        let g = grid(401);
        let pic = solve(&p, &g, &SolveOptions::default()).unwrap().profile;
        let fd = fd_solve(&p, &g, 1e-12, Forcing::Normal).unwrap();
        let d = pic.sup_diff(&fd);
        assert!(d <= 1e-6, "({a}, {b}): {d:e}");
    }
}

#[test]
fn linear_finite_differences_converge_to_h0() {
    let p = params(2.0, 2.0);
    let errs: Vec<f64> = [101, 201, 401]
        .iter()
        .map(|&n| {
            let g = grid(n);
            fd_solve(&p, &g, 1e-13, Forcing::Vertical).unwrap().sup_diff(&h0_profile(&p, &g))
        })
        .collect();
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.0..=5.0).contains(&ratio), "{errs:?}");
    }
}

#[test]
fn grid_refinement_is_second_order() {
    let p = params(2.0, 2.0);
    let sols: Vec<RadialProfile> = [101, 201, 401, 801]
        .iter()
        .map(|&n| solve(&p, &grid(n), &SolveOptions::default()).unwrap().profile)
        .collect();
    let diffs: Vec<f64> = sols.windows(2).map(|w| sup_diff_refined(&w[0], &w[1])).collect();
    for w in diffs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.0..=5.0).contains(&ratio), "{diffs:?}");
    }
}

#[test]
fn residual_decays_with_refinement() {
    let p = params(2.0, 2.0);
    let res: Vec<f64> = [101, 201, 401]
        .iter()
        .map(|&n| solve(&p, &grid(n), &SolveOptions::default()).unwrap().residual_sup)
        .collect();
    assert!(res[2] <= 1e-3);
    for w in res.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.0..=5.0).contains(&ratio), "{res:?}");
    }
}
