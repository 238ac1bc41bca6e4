mod common;

use std::time::Duration;

use common::*;
use mprism::geometry::Point;
use mprism::minimax_qp::{
    assemble_qp, case_split, critical_point, solve_agd, solve_bnb, solve_pair, AgdOptions, GameCase, PlanarGame,
    PlayerModel, SolveStatus,
};
use mprism::{EvalParams, Error};
use nalgebra::DVector;
use rand::Rng;

fn feasible(qp: &mprism::MinimaxQP, r: &mprism::SaddleResult) {
    assert!(qp.attacker_feasible(&r.attacker_actions, 1e-7));
    assert!(qp.sv_feasible(&r.sv_actions, 1e-7));
    assert!(r.value >= -1e-9);
}

#[test]
fn coincident_agents_have_zero_linear_terms() {
    let params = EvalParams::default();
    let a = vehicle("a", 3.0, 4.0, 10.0, 0.5);
    let b = vehicle("b", 3.0, 4.0, 10.0, 0.5);
    let qp = pair_qp(&a, &b, 5, &params);
    assert!(qp.u.norm() < 1e-12);
    assert!(qp.v.norm() < 1e-12);
    assert!(qp.h < 1e-20);
}

#[test]
fn identical_agents_without_regularization_have_r_equal_minus_2p() {
    let mut params = EvalParams::default();
    params.solver.lambda = 0.0;
    let a = vehicle("a", 0.0, 0.0, 12.0, 0.3);
    let b = vehicle("b", 7.0, -2.0, 12.0, 0.3);
    let qp = pair_qp(&a, &b, 10, &params);
    assert!((&qp.r + 2.0 * &qp.p).abs().max() < 1e-12);
    let r = solve_pair(&qp, &params.solver).unwrap();
    feasible(&qp, &r);
    assert!((r.value - qp.h).abs() < 1e-6, "{} vs {}", r.value, qp.h);
}

#[test]
fn mismatched_models_are_rejected() {
    let params = EvalParams::default();
    let a = vehicle("a", 0.0, 0.0, 12.0, 0.3);
    let b = vehicle("b", 7.0, -2.0, 12.0, 0.3);
    let p0 = PlayerModel::for_agent(&a, &params.profiles, 0.1, 0.1, 3).unwrap();
    let p1 = PlayerModel::for_agent(&b, &params.profiles, 0.1, 0.1, 4).unwrap();
    let p2 = PlayerModel::for_agent(&b, &params.profiles, 0.2, 0.1, 3).unwrap();
    assert!(assemble_qp(&p0, &p1, 3, 1e-8).is_err());
    assert!(assemble_qp(&p0, &p2, 3, 1e-8).is_err());
    assert!(assemble_qp(&p0, &p0, 3, -1.0).is_err());
}

#[test]
fn gradients_match_central_differences() {
    let params = EvalParams::default();
    let mut r = rng(7);
    for _ in 0..100 {
        let (sv, other) = random_vehicle_pair(&mut r, 3, 2.0);
        let qp = pair_qp(&sv, &other, 3, &params);
        let n = qp.action_len();
        let ui = DVector::from_fn(n, |_, _| r.gen_range(-3.0..3.0));
        let u0 = DVector::from_fn(n, |_, _| r.gen_range(-3.0..3.0));
        let gi = qp.grad_attacker(&ui, &u0);
        let g0 = qp.grad_sv(&ui, &u0);
        let h = 1e-4;
        for k in 0..n {
            let mut e = DVector::zeros(n);
            e[k] = h;
            let fi = (qp.objective(&(&ui + &e), &u0) - qp.objective(&(&ui - &e), &u0)) / (2.0 * h);
            let f0 = (qp.objective(&ui, &(&u0 + &e)) - qp.objective(&ui, &(&u0 - &e))) / (2.0 * h);
            assert!((fi - gi[k]).abs() <= 1e-5 * (1.0 + gi[k].abs()), "{fi} vs {}", gi[k]);
            assert!((f0 - g0[k]).abs() <= 1e-5 * (1.0 + g0[k].abs()), "{f0} vs {}", g0[k]);
        }
    }
}

#[test]
fn critical_point_examples() {
    let params = EvalParams::default();
    let a = vehicle("a", 0.0, 0.0, 8.0, 1.0);
    let qp = pair_qp(&a, &vehicle("b", 0.0, 0.0, 8.0, 1.0), 4, &params);
    let (ui, u0) = critical_point(&qp).unwrap();
    assert!(ui.norm() < 1e-12 && u0.norm() < 1e-12);
    assert_eq!(case_split(&qp).unwrap(), GameCase::NonconvexBnb);

    let qp = pair_qp(&a, &vehicle("b", 1.5, -0.5, 8.0, 1.0), 4, &params);
    let (ui, u0) = critical_point(&qp).unwrap();
    let (di, d0) = dense_critical_point(&qp);
    assert!((&ui - &di).norm() <= 1e-6 * (1.0 + di.norm()));
    assert!((&u0 - &d0).norm() <= 1e-6 * (1.0 + d0.norm()));
    // The stationary separation is a shrunken copy of a.
    let s = qp.separation(&ui, &u0);
    assert!(s.norm() < qp.offset.norm());
    assert!(s.perp(&qp.offset).abs() < 1e-9 * qp.offset.norm_squared());
    let res_i = qp.grad_attacker(&ui, &u0).norm();
    let res_0 = qp.grad_sv(&ui, &u0).norm();
    assert!(res_i + res_0 <= 1e-8 * (1.0 + qp.u.norm() + qp.v.norm()));
}

#[test]
fn case_split_examples() {
    let params = EvalParams::default();
    let far = pair_qp(&vehicle("a", 0.0, 0.0, 0.0, 0.0), &vehicle("b", 100.0, 0.0, 0.0, 0.0), 1, &params);
    assert_eq!(case_split(&far).unwrap(), GameCase::ConvexBoundary);

    let mut near = pair_qp(&vehicle("a", 0.0, 0.0, 5.0, 0.0), &vehicle("b", 0.0, 0.0, 5.0, 0.0), 3, &params);
    assert_eq!(case_split(&near).unwrap(), GameCase::NonconvexBnb);
    near.attacker_constraints = near.attacker_constraints.with_scaled_bounds(1.0 + 1e-12);
    near.sv_constraints = near.sv_constraints.with_scaled_bounds(1.0 + 1e-12);
    assert_eq!(case_split(&near).unwrap(), GameCase::NonconvexBnb);
    assert_eq!(case_split(&far).unwrap(), GameCase::ConvexBoundary);
}

#[test]
fn agd_head_on_matches_closed_form() {
    let params = rail_params();
    let (gap, v) = (30.0, 10.0);
    let (sv, attacker) = head_on(gap, v, v);
    for steps in [1, 4, 10] {
        let qp = pair_qp(&sv, &attacker, steps, &params);
        assert_eq!(case_split(&qp).unwrap(), GameCase::ConvexBoundary);
        let r = solve_agd(&qp, &AgdOptions::default()).unwrap();
        feasible(&qp, &r);
        assert_eq!(r.status, SolveStatus::Converged);
        let t = steps as f64 * 0.1;
        let expected = head_on_gap(gap, v, v, t).powi(2);
        let got = r.value - qp.regularization_term(&r.attacker_actions, &r.sv_actions);
        assert!((got - expected).abs() < 1e-6, "steps {steps}: {got} vs {expected}");
        // Bang-bang: every step at the extreme longitudinal vertex.
        let (attack, brake) = effective_accel(&mprism::AccelProfile::ev_like(), v);
        for k in 0..steps {
            assert!((r.attacker_actions[2 * k] - attack).abs() < 1e-6);
            assert!((r.sv_actions[2 * k] + brake).abs() < 1e-6);
        }
    }
}

#[test]
fn agd_with_momentum_agrees() {
    let params = rail_params();
    let (sv, attacker) = head_on(25.0, 12.0, 8.0);
    let qp = pair_qp(&sv, &attacker, 10, &params);
    let plain = solve_agd(&qp, &AgdOptions::default()).unwrap();
    let fast = solve_agd(
        &qp,
        &AgdOptions {
            momentum: true,
            ..AgdOptions::default()
        },
    )
    .unwrap();
    assert!((plain.value - fast.value).abs() < 1e-6);
}

#[test]
fn agd_rejects_bad_steps_and_reports_divergence() {
    let params = EvalParams::default();
    let qp = pair_qp(&vehicle("a", 0.0, 0.0, 5.0, 0.0), &vehicle("b", 50.0, 0.0, 5.0, 3.0), 5, &params);
    let bad = AgdOptions {
        rho: Some(-1.0),
        ..AgdOptions::default()
    };
    assert!(solve_agd(&qp, &bad).is_err());
    let huge = AgdOptions {
        rho: Some(f64::MAX),
        mu: Some(f64::MAX),
        ..AgdOptions::default()
    };
    match solve_agd(&qp, &huge) {
        Err(Error::Divergence { iteration }) => assert!(iteration >= 1),
        Ok(r) => feasible(&qp, &r),
        Err(e) => panic!("unexpected error {e}"),
    }
}

#[test]
fn one_step_values_match_grid_oracle() {
    let params = EvalParams::default();
    let mut r = rng(11);
    for k in 0..30 {
        let spread = if k % 2 == 0 { 0.05 } else { 0.5 };
        let (sv, other) = random_vehicle_pair(&mut r, 1, spread);
        let qp = pair_qp(&sv, &other, 1, &params);
        let (oracle, eps) = grid_oracle_t1(&qp, 400);
        let pair = solve_pair(&qp, &params.solver).unwrap();
        let bnb = solve_bnb(&qp, Duration::from_secs(1)).unwrap();
        for res in [&pair, &bnb] {
            feasible(&qp, res);
            let value = sep_sq(&qp, &res.attacker_actions, &res.sv_actions);
            assert!(value <= oracle + 1e-12 && oracle - value <= eps + 1e-12, "{value} vs {oracle} (eps {eps})");
        }
        assert!((pair.value - bnb.value).abs() < 1e-9);
    }
}

#[test]
fn coincident_identical_agents_give_zero() {
    let params = EvalParams::default();
    let a = vehicle("a", 1.0, 1.0, 15.0, -0.4);
    let qp = pair_qp(&a, &vehicle("b", 1.0, 1.0, 15.0, -0.4), 10, &params);
    let r = solve_bnb(&qp, Duration::from_millis(50)).unwrap();
    feasible(&qp, &r);
    assert_eq!(r.status, SolveStatus::Converged);
    assert!(sep_sq(&qp, &r.attacker_actions, &r.sv_actions) < 1e-12);
}

#[test]
fn two_step_pedestrian_matches_exhaustive_oracle() {
    let params = EvalParams::default();
    let mut r = rng(5);
    for _ in 0..20 {
        let sv = vehicle("sv", 0.0, 0.0, r.gen_range(0.0..15.0), r.gen_range(-3.0..3.0));
        let end = sv.position() + Point::new(sv.heading().cos(), sv.heading().sin()) * sv.speed() * 0.2;
        let ped = pedestrian(
            "ped",
            end.x + r.gen_range(-0.5..0.5),
            end.y + r.gen_range(-0.5..0.5),
            r.gen_range(-3.0..3.0),
            r.gen_range(0.0..3.0),
        );
        let qp = pair_qp(&sv, &ped, 2, &params);
        let oracle = pedestrian_t2_oracle(&qp);
        let res = solve_pair(&qp, &params.solver).unwrap();
        feasible(&qp, &res);
        let value = sep_sq(&qp, &res.attacker_actions, &res.sv_actions);
        assert!((value - oracle).abs() < 1e-5, "{value} vs {oracle}");
    }
}

#[test]
fn saddle_inequalities_hold_in_case_one() {
    let params = EvalParams::default();
    let mut r = rng(3);
    let (mut checked, mut certified) = (0, 0);
    while checked < 40 {
        let (sv, other) = random_vehicle_pair(&mut r, 5, 20.0);
        let qp = pair_qp(&sv, &other, 5, &params);
        if case_split(&qp).unwrap() != GameCase::ConvexBoundary {
            continue;
        }
        checked += 1;
        let res = solve_agd(&qp, &AgdOptions::default()).unwrap();
        // Uncertified runs are handed to branch-and-bound by `solve_pair`.
        if !PlanarGame::new(&qp).unwrap().certifies(&res.attacker_actions, &res.sv_actions) {
            continue;
        }
        certified += 1;
        let (ui, u0) = (&res.attacker_actions, &res.sv_actions);
        let j = qp.objective(ui, u0);
        let n = qp.action_len();
        for _ in 0..100 {
            let pi = qp.project_attacker(&DVector::from_fn(n, |_, _| r.gen_range(-8.0..8.0)));
            let p0 = qp.project_sv(&DVector::from_fn(n, |_, _| r.gen_range(-8.0..8.0)));
            assert!(qp.objective(&pi, u0) >= j - 1e-5);
            assert!(qp.objective(ui, &p0) <= j + 1e-5);
        }
    }
    assert!(certified >= 20, "only {certified} of {checked} gradient runs certified");
}
