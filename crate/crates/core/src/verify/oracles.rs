//! Finite-difference, Fréchet-quotient and duality oracles for the tangent
//! and adjoint models.

use super::ConvergenceReport;
use crate::adjoint::{gradient_pairing, solve_adjoint, CostWeights, TargetSet};
use crate::control::{build_tangent_from_chart, cost, random_chart_direction};
use crate::error::{Error, Result};
use crate::forward::{simulate_with, InitialData, Stepper, Trajectory};
use crate::grid::{FaceField, Trace, VectorField3};
use crate::linearized::{
    cost_derivative_via_tangent, exp_control, solve_linearized, w_norm, LinearizationMode, TangentBoundarySection,
};
use crate::state::DirectorBC;

/// Central difference of the reduced cost along the sphere geodesic
/// `exp_h(±eps ξ)`.
#[allow(clippy::too_many_arguments)]
pub fn fd_directional_derivative(
    stepper: &Stepper,
    init: &InitialData,
    h: &DirectorBC,
    xi: &TangentBoundarySection,
    eps: f64,
    targets: &TargetSet,
    weights: &CostWeights,
) -> Result<f64> {
    let eval = |e: f64| -> Result<f64> {
        let he = exp_control(h, xi, e);
        let tr = simulate_with(stepper, init, &he)?;
        Ok(cost(&tr, &he, targets, weights).total)
    };
    Ok((eval(eps)? - eval(-eps)?) / (2.0 * eps))
}

/// `𝒲`-norm error of the difference quotient `(𝒮(exp_h(εξ)) − 𝒮(h)) / ε`
/// against the tangent solution, for each `ε` in `eps_list`.
pub fn linearization_convergence(
    stepper: &Stepper,
    init: &InitialData,
    traj: &Trajectory,
    xi: &TangentBoundarySection,
    eps_list: &[f64],
    mode: LinearizationMode,
) -> Result<ConvergenceReport> {
    if eps_list.len() < 3 || eps_list.windows(2).any(|w| w[1] >= w[0]) || eps_list.iter().any(|e| *e <= 0.0) {
        return Err(Error::InvalidArgument(format!("eps list {eps_list:?} must be positive, decreasing, length >= 3")));
    }
    let g = &traj.grid;
    let lin = solve_linearized(traj, xi, mode)?;
    let mut errors = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let he = exp_control(&traj.bc, xi, eps);
        let tr = simulate_with(stepper, init, &he)?;
        let mut om = Vec::with_capacity(tr.states.len());
        let mut ph = Vec::with_capacity(tr.states.len());
        let mut traces: Vec<Trace<3>> = Vec::with_capacity(tr.states.len());
        for (n, (a, b)) in tr.states.iter().zip(&traj.states).enumerate() {
            let mut du: FaceField = a.u.clone();
            du.axpy(-1.0, &b.u);
            let mut du = du.scaled(1.0 / eps);
            du.axpy(-1.0, &lin.states[n].omega);
            let mut dd: VectorField3 = a.d.clone();
            dd.axpy(-1.0, &b.d);
            let mut dd = dd.scaled(1.0 / eps);
            dd.axpy(-1.0, &lin.states[n].phi);
            om.push(du);
            ph.push(dd);
            traces.push(
                he.row(n)
                    .iter()
                    .zip(traj.bc.row(n))
                    .zip(&xi.xi[n])
                    .map(|((p, q), x)| std::array::from_fn(|c| (p[c] - q[c]) / eps - x[c]))
                    .collect(),
            );
        }
        errors.push(w_norm(g, &om, &ph, &traces));
    }
    Ok(ConvergenceReport::new(eps_list.to_vec(), errors))
}

/// Worst relative gap `|𝒞'(h)ξ − ⟨gradient, ξ⟩| / max(1, |𝒞'(h)ξ|)` over
/// `n_directions` seeded random chart directions, the first pairing from
/// the tangent model and the second from the adjoint.
pub fn duality_check(
    traj: &Trajectory,
    targets: &TargetSet,
    weights: &CostWeights,
    n_directions: usize,
    seed: u64,
    mode: LinearizationMode,
) -> Result<f64> {
    let adj = solve_adjoint(traj, targets, weights, mode)?;
    let mut worst = 0.0f64;
    for k in 0..n_directions {
        let dz = random_chart_direction(&traj.grid, seed.wrapping_add(k as u64));
        let xi = build_tangent_from_chart(&traj.bc, &dz)?;
        let lin = solve_linearized(traj, &xi, mode)?;
        let a = cost_derivative_via_tangent(&lin, traj, targets, weights, &xi);
        let b = gradient_pairing(traj, &traj.bc, &adj, &xi, weights);
        worst = worst.max((a - b).abs() / a.abs().max(1.0));
    }
    Ok(worst)
}
