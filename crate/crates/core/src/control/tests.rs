use super::*;
use crate::adjoint::{gradient_pairing, solve_adjoint, TargetSet};
use crate::forward::Stepper;
use crate::grid::GridSpec;
use crate::linearized::LinearizationMode;
use crate::presets::{chart_problem, forward_problem, self_tracking, unit_spec, Preset};
use crate::state::norm3;

fn grid(n: usize, steps: usize) -> Grid {
    Grid::new(GridSpec::unit_square(n, 1e-3, steps)).unwrap()
}

fn fill(g: &Grid, f: impl Fn(f64, usize) -> [f64; 2]) -> ChartControl {
    let levels = g.spec.nsteps + 1;
    let mut z = ChartControl::zeros(g.m(), levels);
    for n in 0..levels {
        for (k, b) in g.boundary.samples.iter().enumerate() {
            z.z[n][k] = f(b.s / g.boundary.perimeter, n);
        }
    }
    z
}

#[test]
fn norm_zero_and_homogeneous() {
    let g = grid(6, 4);
    assert_eq!(discrete_u_norm(&ChartControl::zeros(g.m(), 5)), 0.0);
    let z = random_chart_direction(&g, 3);
    let a = discrete_u_norm(&z);
    assert!(a > 0.0);
    assert!((discrete_u_norm(&z.scaled(2.0)) - 2.0 * a).abs() <= 1e-14 * a);
}

#[test]
fn norm_of_single_modes() {
    let g = grid(8, 6);
    let tau = std::f64::consts::TAU;
    // (1 + 1)^{5/2} + 1 + (1 + 1)^{3/2}
    let w10 = 4.0 * 2f64.sqrt() + 1.0 + 2.0 * 2f64.sqrt();
    let z = fill(&g, |s, _| [0.3 * (tau * s).cos(), -0.4 * (tau * s).cos()]);
    let expect = 0.5 * (w10 / 2.0).sqrt();
    assert!((discrete_u_norm(&z) - expect).abs() < 1e-12, "{} {expect}", discrete_u_norm(&z));
    // 1 + (1 + 1)^{5/4} + 2
    let w01 = 3.0 + 2f64.powf(1.25);
    let z = fill(&g, |_, n| [0.6 * (std::f64::consts::PI * n as f64 / 6.0).cos(), 0.0]);
    let expect = 0.6 * (w01 / 2.0).sqrt();
    assert!((discrete_u_norm(&z) - expect).abs() < 1e-12);
}

#[test]
fn segment_endpoints_and_convexity() {
    let g = grid(6, 4);
    let za = fill(&g, |s, n| [0.3 * (6.0 * s).sin(), 0.1 * n as f64 / 4.0]);
    let zb = fill(&g, |s, _| [-0.2, 0.4 * s]);
    let (ha, hb) = (za.to_control(), zb.to_control());
    let gap = |a: &DirectorBC, b: &DirectorBC| {
        a.rows().iter().flatten().zip(b.rows().iter().flatten()).flat_map(|(x, y)| (0..3).map(move |q| (x[q] - y[q]).abs())).fold(0.0, f64::max)
    };
    assert_eq!(chart_segment_control(&ha, &hb, 1.0).unwrap(), ha);
    assert_eq!(chart_segment_control(&ha, &hb, 0.0).unwrap(), hb);
    assert!(gap(&chart_segment_control(&ha, &ha, 0.37).unwrap(), &ha) < 1e-15);
    let (na, nb) = (discrete_u_norm(&za), discrete_u_norm(&zb));
    for s in [0.1, 0.5, 0.8] {
        let h = chart_segment_control(&ha, &hb, s).unwrap();
        let n = discrete_u_norm(&ChartControl::from_control(&h).unwrap());
        assert!(n <= s * na + (1.0 - s) * nb + 1e-12);
        assert!(h.rows().iter().flatten().all(|v| v[2] >= 0.0 && (norm3(v) - 1.0).abs() < 1e-15));
    }
}

#[test]
fn tangent_at_pole_doubles() {
    let g = grid(4, 2);
    let h = DirectorBC::constant(vec![[0.0, 0.0, 1.0]; g.m()], 2);
    let mut dz = ChartControl::zeros(g.m(), 3);
    dz.z[1][3] = [0.25, -0.5];
    dz.z[2][0] = [1.0, 2.0];
    let xi = build_tangent_from_chart(&h, &dz).unwrap();
    assert_eq!(xi.xi[1][3], [0.5, -1.0, 0.0]);
    assert_eq!(xi.xi[2][0], [2.0, 4.0, 0.0]);
    assert!(xi.xi[0].iter().all(|v| *v == [0.0; 3]));
    let zero = build_tangent_from_chart(&h, &ChartControl::zeros(g.m(), 3)).unwrap();
    assert!(zero.xi.iter().flatten().all(|v| *v == [0.0; 3]));
}

#[test]
fn chart_gradient_represents_pairing() {
    let pr = forward_problem(Preset::Driven, unit_spec(8, 8, 0.2)).unwrap();
    let traj = pr.simulate().unwrap();
    let mut targets = TargetSet::constant(&pr.grid, chart_inverse([0.1, 0.2]));
    targets.d_omega = traj.states[3].d.clone();
    let w = CostWeights::new([0.5, 1.0, 0.3, 0.8, 0.2]);
    let adj = solve_adjoint(&traj, &targets, &w, LinearizationMode::Discrete).unwrap();
    let g = chart_gradient(&traj.bc, &adj, &traj, &w).unwrap();
    assert!(g.z[0].iter().all(|v| *v == [0.0, 0.0]));
    for seed in 0..20 {
        let dz = random_chart_direction(&pr.grid, 100 + seed);
        let xi = build_tangent_from_chart(&traj.bc, &dz).unwrap();
        let a = g.l2_dot(&dz, &pr.grid);
        let b = gradient_pairing(&traj, &traj.bc, &adj, &xi, &w);
        assert!((a - b).abs() <= 1e-12 * a.abs().max(b.abs()), "{a} {b}");
    }

    // a short step along -g lowers the cost
    let c0 = cost(&traj, &traj.bc, &targets, &w).total;
    let st = Stepper::new(&pr.grid, pr.opts, pr.forcing.clone()).unwrap();
    let mut z = ChartControl::from_control(&traj.bc).unwrap();
    z.axpy(-1e-2, &g);
    let mut h = z.to_control();
    h.rows_mut()[0] = traj.bc.row(0).clone();
    let tr = crate::forward::simulate_with(&st, &pr.init, &h).unwrap();
    assert!(cost(&tr, &h, &targets, &w).total < c0);
}

#[test]
fn matched_targets_give_zero_cost_and_gradient() {
    let g = Grid::new(unit_spec(6, 5, 0.2)).unwrap();
    let pr = chart_problem(&g, |_, _, _| [0.0, 0.0], |_, _| 0.0, Default::default());
    let traj = pr.simulate().unwrap();
    let targets = TargetSet::constant(&g, cost::E3);
    let w = CostWeights::new([1.0; 5]);
    let c = cost(&traj, &traj.bc, &targets, &w);
    assert_eq!(c.total, 0.0);
    let adj = solve_adjoint(&traj, &targets, &w, LinearizationMode::Discrete).unwrap();
    let gr = chart_gradient(&traj.bc, &adj, &traj, &w).unwrap();
    assert!(gr.z.iter().flatten().all(|v| *v == [0.0, 0.0]));

    let st = Stepper::new(&g, pr.opts, pr.forcing.clone()).unwrap();
    let out = optimize(&st, &pr.init, &pr.bc, &targets, &w, &OptimizeConfig::default()).unwrap();
    assert_eq!(out.stop, StopReason::Stationary);
    assert_eq!(out.history.records.len(), 1);
    assert_eq!(out.h, pr.bc);
}

#[test]
fn cost_of_constant_mismatch() {
    let pr = forward_problem(Preset::Stationary, unit_spec(6, 10, 0.2)).unwrap();
    let traj = pr.simulate().unwrap();
    let c1 = pr.init.d0.data[0];
    let c2 = chart_inverse([-0.5, 0.1]);
    let targets = TargetSet::constant(&pr.grid, c2);
    let w = CostWeights::new([0.0, 3.0, 0.0, 0.0, 0.0]);
    let t = 10.0 * pr.grid.spec.dt;
    let gap: f64 = (0..3).map(|q| (c1[q] - c2[q]).powi(2)).sum();
    let expect = 0.5 * 3.0 * gap * t;
    let c = cost(&traj, &traj.bc, &targets, &w);
    assert!((c.total - expect).abs() < 1e-14, "{} {expect}", c.total);
    assert_eq!(c.terms[1], c.total);
    let all = cost(&traj, &traj.bc, &targets, &CostWeights::new([1.0; 5]));
    assert!(all.terms.iter().all(|x| *x >= 0.0));
}

#[test]
fn projection_rules() {
    let g = grid(6, 4);
    let z = random_chart_direction(&g, 9).scaled(0.5);
    let nz = discrete_u_norm(&z);
    let p = project_feasible(&z, 2.0 * nz).unwrap();
    assert_eq!(p.z, z);
    assert!(!p.rescaled);
    assert_eq!(p.clipped, 0);

    let p = project_feasible(&z, 0.5 * nz).unwrap();
    assert!(p.rescaled);
    assert!((discrete_u_norm(&p.z) - 0.5 * nz).abs() <= 1e-12 * nz);
    assert!(p.z.sub(&z.scaled(0.5)).max_radius() < 1e-12);

    let mut based = z.clone();
    for n in 0..based.levels() {
        based.z[n] = vec![[0.9, 0.0]; g.m()];
    }
    let base = discrete_u_norm(&based);
    assert!(matches!(project_feasible(&based, 0.5 * base), Err(Error::InfeasibleBase { .. })));

    let mut big = z.clone();
    big.z[2][4] = [3.0, 4.0];
    let p = project_feasible(&big, 1e9).unwrap();
    assert_eq!(p.clipped, 1);
    assert!((p.z.z[2][4][0] - 0.6).abs() < 1e-15 && (p.z.z[2][4][1] - 0.8).abs() < 1e-15);
    assert_eq!(p.z.z[0], big.z[0]);
}

#[test]
fn optimizer_decreases_cost_and_stays_feasible() {
    let tp = self_tracking(unit_spec(8, 12, 0.2)).unwrap();
    let pr = &tp.problem;
    let st = Stepper::new(&pr.grid, pr.opts, pr.forcing.clone()).unwrap();
    let cfg = OptimizeConfig { m_radius: tp.m_radius, max_iters: 15, ..Default::default() };
    let out = optimize(&st, &pr.init, &pr.bc, &tp.targets, &tp.weights, &cfg).unwrap();
    let costs = out.history.costs();
    assert!(costs.windows(2).all(|w| w[1] <= w[0]));
    assert!(costs.last().unwrap() < &(0.1 * costs[0]));
    for r in &out.history.records {
        assert!(r.feasibility_norm <= cfg.m_radius + 1e-12);
    }
    out.h.validate(&pr.grid).unwrap();
    out.h.check_compatible(&pr.init.trace).unwrap();
    assert!(out.check().is_ok());
}

#[test]
fn config_and_start_validation() {
    let bad = [
        OptimizeConfig { m_radius: 0.0, ..Default::default() },
        OptimizeConfig { armijo_c: 1.0, ..Default::default() },
        OptimizeConfig { armijo_shrink: 0.0, ..Default::default() },
        OptimizeConfig { step0: -1.0, ..Default::default() },
    ];
    for c in bad {
        assert!(matches!(c.validate(), Err(Error::InvalidOptimizeConfig(_))));
    }
    let tp = self_tracking(unit_spec(6, 4, 0.2)).unwrap();
    let pr = &tp.problem;
    let st = Stepper::new(&pr.grid, pr.opts, pr.forcing.clone()).unwrap();
    let cfg = OptimizeConfig { m_radius: 1e-3, ..Default::default() };
    assert!(matches!(optimize(&st, &pr.init, &pr.bc, &tp.targets, &tp.weights, &cfg), Err(Error::InvalidControl(_))));
}

#[test]
fn random_directions_are_reproducible() {
    let g = grid(6, 5);
    let a = random_chart_direction(&g, 42);
    assert_eq!(a, random_chart_direction(&g, 42));
    assert_ne!(a, random_chart_direction(&g, 43));
    assert!(a.z[0].iter().all(|v| *v == [0.0, 0.0]));
    assert!((a.z.iter().flatten().flat_map(|v| v.iter()).fold(0.0f64, |m, x| m.max(x.abs())) - 1.0).abs() < 1e-15);
}
