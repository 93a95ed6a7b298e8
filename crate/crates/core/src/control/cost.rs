use crate::adjoint::{CostWeights, TargetSet};
use crate::forward::Trajectory;
use crate::grid::Grid;
use crate::state::{dist_sq3, DirectorBC};

pub const E3: [f64; 3] = [0.0, 0.0, 1.0];

/// Cost value with its five terms (each already halved).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CostBreakdown {
    pub terms: [f64; 5],
    pub total: f64,
}

/// `½ Σ_n w_n Σ_k ds_k |hⁿ_k - e₃|²` without the weight.
pub fn control_penalty(grid: &Grid, h: &DirectorBC) -> f64 {
    let mut acc = 0.0;
    for (n, row) in h.rows().iter().enumerate() {
        let w = grid.time_weight(n);
        acc += w * row.iter().zip(&grid.boundary.samples).map(|(v, b)| b.ds * dist_sq3(v, &E3)).sum::<f64>();
    }
    0.5 * acc
}

/// Tracking cost of `traj` (driven by `h`): midpoint rule in space,
/// trapezoid rule in time.
pub fn cost(traj: &Trajectory, h: &DirectorBC, targets: &TargetSet, weights: &CostWeights) -> CostBreakdown {
    let g = &traj.grid;
    let b = weights.beta;
    let mut t = [0.0; 5];
    let n_last = traj.nsteps();
    for (n, s) in traj.states.iter().enumerate() {
        let w = g.time_weight(n);
        if b[0] != 0.0 {
            let mut e = s.u.clone();
            e.axpy(-1.0, targets.u_qt.at(n));
            t[0] += w * e.norm_l2_sq(g);
        }
        if b[1] != 0.0 {
            let mut e = s.d.clone();
            e.axpy(-1.0, targets.d_qt.at(n));
            t[1] += w * e.norm_l2_sq(g);
        }
    }
    let fin = &traj.states[n_last];
    if b[2] != 0.0 {
        let mut e = fin.u.clone();
        e.axpy(-1.0, &targets.u_omega);
        t[2] = e.norm_l2_sq(g);
    }
    if b[3] != 0.0 {
        let mut e = fin.d.clone();
        e.axpy(-1.0, &targets.d_omega);
        t[3] = e.norm_l2_sq(g);
    }
    if b[4] != 0.0 {
        t[4] = 2.0 * control_penalty(g, h);
    }
    let mut terms = [0.0; 5];
    for i in 0..5 {
        terms[i] = 0.5 * b[i] * t[i];
    }
    CostBreakdown { terms, total: terms.iter().sum() }
}
