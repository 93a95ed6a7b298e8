use super::*;
use crate::control::{build_tangent_from_chart, chart_inverse, cost, random_chart_direction};
use crate::forward::{simulate_with, Stepper};
use crate::linearized::{cost_derivative_via_tangent, exp_control, solve_linearized};
use crate::presets::{forward_problem, unit_spec, Preset, Problem};

fn fixture(n: usize, steps: usize) -> (Problem, Trajectory, TargetSet) {
    let pr = forward_problem(Preset::Driven, unit_spec(n, steps, 0.2)).unwrap();
    let traj = pr.simulate().unwrap();
    let g = &pr.grid;
    let c = chart_inverse([0.2, -0.1]);
    let mut targets = TargetSet::constant(g, c);
    targets.d_omega = VectorField3::constant(g, chart_inverse([-0.1, 0.3]));
    (pr, traj, targets)
}

fn direction(traj: &Trajectory, seed: u64, scale: f64) -> TangentBoundarySection {
    let dz = random_chart_direction(&traj.grid, seed).scaled(scale);
    build_tangent_from_chart(&traj.bc, &dz).unwrap()
}

const BETA: [f64; 5] = [1.0, 2.0, 0.5, 0.7, 0.1];

#[test]
fn duality_with_tangent_model() {
    let (_, traj, targets) = fixture(8, 12);
    let w = CostWeights::new(BETA);
    let adj = solve_adjoint(&traj, &targets, &w, LinearizationMode::Discrete).unwrap();
    for seed in [1, 2, 3] {
        let xi = direction(&traj, seed, 0.3);
        let lin = solve_linearized(&traj, &xi, LinearizationMode::Discrete).unwrap();
        let a = cost_derivative_via_tangent(&lin, &traj, &targets, &w, &xi);
        let b = gradient_pairing(&traj, &traj.bc, &adj, &xi, &w);
        assert!((a - b).abs() <= 1e-10 * a.abs().max(1e-12), "{a} {b}");
    }
}

#[test]
fn gradient_matches_central_difference() {
    let (pr, traj, targets) = fixture(8, 10);
    let w = CostWeights::new(BETA);
    let adj = solve_adjoint(&traj, &targets, &w, LinearizationMode::Discrete).unwrap();
    let xi = direction(&traj, 7, 0.5);
    let stepper = Stepper::new(&pr.grid, pr.opts, pr.forcing.clone()).unwrap();
    let eval = |eps: f64| {
        let h = exp_control(&traj.bc, &xi, eps);
        let tr = simulate_with(&stepper, &pr.init, &h).unwrap();
        cost(&tr, &h, &targets, &w).total
    };
    let eps = 1e-5;
    let fd = (eval(eps) - eval(-eps)) / (2.0 * eps);
    let an = gradient_pairing(&traj, &traj.bc, &adj, &xi, &w);
    assert!((fd - an).abs() <= 1e-6 * an.abs(), "fd {fd} adjoint {an}");
}

#[test]
fn terminal_target_reached_gives_zero_adjoint() {
    let (_, traj, mut targets) = fixture(6, 5);
    targets.u_omega = traj.final_state().u.clone();
    let adj = solve_adjoint(&traj, &targets, &CostWeights::new([0.0, 0.0, 1.0, 0.0, 0.0]), LinearizationMode::Discrete).unwrap();
    assert!(adj.p1.iter().all(|p| p.max_abs() < 1e-13));
    assert!(adj.p2.iter().all(|p| p.max_abs() < 1e-13));
    assert!(adj.h_bar.iter().flatten().flatten().all(|x| x.abs() < 1e-13));
}

#[test]
fn terminal_data_stored_at_last_level() {
    let (_, traj, targets) = fixture(6, 4);
    let w = CostWeights::new([0.0, 0.0, 0.0, 3.0, 0.0]);
    let adj = solve_adjoint(&traj, &targets, &w, LinearizationMode::Discrete).unwrap();
    let mut e = traj.final_state().d.clone();
    e.axpy(-1.0, &targets.d_omega);
    assert!(adj.p2[4].max_abs_diff(&e.scaled(3.0)) < 1e-15);
    assert!(adj.p1.iter().all(|p| p.boundary_max_abs(&traj.grid) == 0.0));
    for p in &adj.pi {
        assert!(p.mean().abs() < 1e-12);
    }
}

#[test]
fn lagrangian_equals_cost_on_feasible_state() {
    let (_, traj, targets) = fixture(6, 6);
    let w = CostWeights::new(BETA);
    let adj = solve_adjoint(&traj, &targets, &w, LinearizationMode::Discrete).unwrap();
    let c = cost(&traj, &traj.bc, &targets, &w).total;
    let lag = lagrangian_value(&traj, &traj.bc, &adj, &targets, &w).unwrap();
    assert!((lag - c).abs() <= 1e-8 * (1.0 + c.abs()), "{lag} {c}");

    let mut zero = adj.clone();
    zero.p1.iter_mut().for_each(|p| *p = FaceField::zeros(&traj.grid));
    zero.p2.iter_mut().for_each(|p| *p = VectorField3::zeros(&traj.grid));
    let w0 = CostWeights::new([0.0, 0.0, 0.0, 0.0, 1.0]);
    assert_eq!(lagrangian_value(&traj, &traj.bc, &zero, &targets, &w0).unwrap(), cost(&traj, &traj.bc, &targets, &w0).total);

    let mut broken = traj.clone();
    broken.states[3] = broken.states[2].clone();
    let lag = lagrangian_value(&broken, &broken.bc, &adj, &targets, &w).unwrap();
    let c = cost(&broken, &broken.bc, &targets, &w).total;
    assert!((lag - c).abs() > 1e-10);
}

#[test]
fn cond2_form_matches_multiplier_pairing() {
    let (_, traj, targets) = fixture(8, 8);
    let w = CostWeights::new(BETA);
    let adj = solve_adjoint(&traj, &targets, &w, LinearizationMode::Continuous).unwrap();
    let xi = direction(&traj, 11, 0.3);
    let a = gradient_pairing(&traj, &traj.bc, &adj, &xi, &w);
    let b = gradient_pairing_cond2_form(&traj, &traj.bc, &adj, &xi, &w);
    assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{a} {b}");
    let (q1, q2) = boundary_multipliers(&traj, &adj);
    assert_eq!(q2, adj.q2);
    assert_eq!(q1, adj.q1);
}

#[test]
fn rejects_upwind_and_bad_weights() {
    let (pr, _, targets) = fixture(6, 3);
    let mut opts = pr.opts;
    opts.scheme = AdvectionScheme::Upwind;
    let st = Stepper::new(&pr.grid, opts, pr.forcing.clone()).unwrap();
    let tr = simulate_with(&st, &pr.init, &pr.bc).unwrap();
    let w = CostWeights::new(BETA);
    assert!(matches!(solve_adjoint(&tr, &targets, &w, LinearizationMode::Discrete), Err(Error::Unsupported(_))));
    let traj = pr.simulate().unwrap();
    let bad = CostWeights::new([1.0, -1.0, 0.0, 0.0, 0.0]);
    assert!(matches!(solve_adjoint(&traj, &targets, &bad, LinearizationMode::Discrete), Err(Error::InvalidWeights(_))));
}
