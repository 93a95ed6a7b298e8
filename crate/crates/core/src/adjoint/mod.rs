//! Adjoint sweep for the tracking cost.
//!
//! The discrete mode is the exact transpose of the scheme (reverse sweep
//! over the stored trajectory); its trace cotangents give the gradient of
//! the discrete cost. The continuous mode marches a direct discretization
//! of the adjoint equations backward in time and reads the boundary
//! multiplier off the adjoint state.

mod targets;

pub use targets::{CostWeights, Series, TargetSet};

use crate::control::cost::{cost, E3};
use crate::error::{Error, Result};
use crate::forward::{ops, Trajectory};
use crate::grid::stencil::{self, AdvectionScheme};
use crate::grid::{FaceField, Grid, ScalarField, Trace, VectorField3};
use crate::linearized::{control_term_pairing, LinearizationMode, TangentBoundarySection};
use crate::state::{cell_gradients, cell_velocity, dot3, gradient_sq_coefficient, normal_derivative, DirectorBC};

/// Adjoint fields per time level.
///
/// `p1`, `p2` are densities: in the discrete mode `p1[n] = P ūⁿ / |cell|`
/// and `p2[n] = d̄ⁿ / |cell|` for `n < N`, where `ūⁿ, d̄ⁿ` are the
/// cotangents of the state at level `n`; the last level holds the terminal
/// data `β₃ (u(T) - u_Ω)` and `β₄ (d(T) - d_Ω)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointState {
    pub mode: LinearizationMode,
    pub p1: Vec<FaceField>,
    /// Mean-zero adjoint pressure.
    pub pi: Vec<ScalarField>,
    pub p2: Vec<VectorField3>,
    /// Cotangent of the director trace at each level: the cost derivative
    /// along `ξ` is `Σ_n Σ_k h̄ⁿ_k · ξⁿ_k` plus the control penalty term.
    pub h_bar: Vec<Trace<3>>,
    pub q1: Vec<Trace<2>>,
    pub q2: Vec<Trace<3>>,
}

/// Solve the adjoint problem about `traj`.
pub fn solve_adjoint(traj: &Trajectory, targets: &TargetSet, weights: &CostWeights, mode: LinearizationMode) -> Result<AdjointState> {
    let g = &traj.grid;
    if traj.stepper.opts.scheme == AdvectionScheme::Upwind {
        return Err(Error::Unsupported("adjoint of the upwind scheme".into()));
    }
    weights.validate()?;
    targets.validate(g)?;
    let mut adj = match mode {
        LinearizationMode::Discrete => discrete_sweep(traj, targets, weights),
        LinearizationMode::Continuous => continuous_sweep(traj, targets, weights),
    };
    let (q1, q2) = multipliers(traj, &adj.p1, &adj.pi, &adj.p2);
    if mode == LinearizationMode::Continuous {
        for (n, row) in adj.h_bar.iter_mut().enumerate() {
            let w = g.time_weight(n);
            for ((hb, q), b) in row.iter_mut().zip(&q2[n]).zip(&g.boundary.samples) {
                *hb = q.map(|x| w * b.ds * x);
            }
        }
    }
    adj.q1 = q1;
    adj.q2 = q2;
    Ok(adj)
}

fn diff_face(a: &FaceField, b: &FaceField) -> FaceField {
    let mut e = a.clone();
    e.axpy(-1.0, b);
    e
}

fn diff_cells(a: &VectorField3, b: &VectorField3) -> VectorField3 {
    let mut e = a.clone();
    e.axpy(-1.0, b);
    e
}

fn discrete_sweep(traj: &Trajectory, targets: &TargetSet, weights: &CostWeights) -> AdjointState {
    let g = &traj.grid;
    let spec = &g.spec;
    let (dt, area) = (spec.dt, g.cell_area());
    let b = weights.beta;
    let nl = traj.nsteps();
    let solvers = traj.solvers();
    let frozen = traj.stepper.opts.freeze_velocity;
    let harmonic = traj.stepper.opts.harmonic_term;

    let fin = traj.final_state();
    let eu_t = diff_face(&fin.u, &targets.u_omega);
    let ed_t = diff_cells(&fin.d, &targets.d_omega);
    let (mut ub, mut db) = (eu_t.scaled(b[2] * area), ed_t.scaled(b[3] * area));
    ub.axpy(g.time_weight(nl) * b[0] * area, &diff_face(&fin.u, targets.u_qt.at(nl)));
    db.axpy(g.time_weight(nl) * b[1] * area, &diff_cells(&fin.d, targets.d_qt.at(nl)));

    let mut p1 = vec![FaceField::zeros(g); nl + 1];
    let mut pi = vec![ScalarField::zeros(g); nl + 1];
    let mut p2 = vec![VectorField3::zeros(g); nl + 1];
    let mut h_bar = vec![vec![[0.0; 3]; g.m()]; nl + 1];
    p1[nl] = solvers.project(g, &eu_t.scaled(b[2])).0;
    p2[nl] = ed_t.scaled(b[3]);

    for n in (0..nl).rev() {
        let (s, s1) = (&traj.states[n], &traj.states[n + 1]);
        let (h_n, h_next) = (traj.bc.row(n), traj.bc.row(n + 1));

        // director step
        let rb = ops::renormalize_tangent(&s1.d, &traj.raw_norms[n], &db);
        let mut dn = rb.clone();
        let rho = rb.scaled(dt);
        let (hb_lo, hb_hi) = h_bar.split_at_mut(n + 1);
        let (hb_n, hb_next) = (&mut hb_lo[n], &mut hb_hi[0]);
        ops::laplacian_d_transpose(g, &rho.scaled(spec.mu), &mut dn, hb_next);
        if harmonic {
            let lam = gradient_sq_coefficient(g, &s.d, h_next);
            dn.axpy(spec.mu, &ops::scale_cells(&lam, &rho));
            let mut lbar = ScalarField::zeros(g);
            for (l, (d, r)) in lbar.data.iter_mut().zip(s.d.data.iter().zip(&rho.data)) {
                l[0] = spec.mu * dot3(d, r);
            }
            ops::lambda_transpose(g, &s.d, h_next, &lbar, &mut dn, hb_next);
        }
        ops::add_advection_d_transpose(g, &s1.u, &rho, -1.0, &mut dn);
        ops::add_advection_u_transpose(g, &rho, &s.d, -1.0, &mut ub);

        // momentum step
        let (ub_proj, psi) = solvers.project(g, &ub);
        if n + 1 < nl {
            p1[n + 1] = ub_proj.scaled(1.0 / area);
            pi[n + 1] = psi.scaled(1.0 / (area * dt));
        }
        let mut un = if frozen {
            ub.clone()
        } else {
            let r = solvers.helmholtz(&ub_proj);
            let mut un = r.clone();
            stencil::visit_velocity_advection(g, |o, ia, ib, c| {
                let k = -dt * c * r.data[o];
                un.data[ia] += k * s.u.data[ib];
                un.data[ib] += k * s.u.data[ia];
            });
            let fbar = r.scaled(dt);
            let l = ops::laplacian_d(g, &s.d, h_n);
            ops::add_advection_d_transpose(g, &fbar, &l, -spec.lambda, &mut dn);
            let lbar = ops::advect_director(g, &fbar, &s.d).scaled(-spec.lambda);
            ops::laplacian_d_transpose(g, &lbar, &mut dn, hb_n);
            un
        };

        let w = g.time_weight(n);
        un.axpy(w * b[0] * area, &diff_face(&s.u, targets.u_qt.at(n)));
        dn.axpy(w * b[1] * area, &diff_cells(&s.d, targets.d_qt.at(n)));
        p2[n] = dn.scaled(1.0 / area);
        ub = un;
        db = dn;
    }
    if nl > 0 {
        let (ub_proj, _) = solvers.project(g, &ub);
        p1[0] = ub_proj.scaled(1.0 / area);
    }
    AdjointState { mode: LinearizationMode::Discrete, p1, pi, p2, h_bar, q1: vec![], q2: vec![] }
}

/// Cell-centered vector from the two faces in each direction.
/// Average a cell vector field onto interior faces (normal component).
fn cells_to_faces(g: &Grid, c: &[[f64; 2]]) -> FaceField {
    let mut out = FaceField::zeros(g);
    for j in 0..g.ny() {
        for i in 1..g.nx() {
            out.data[g.uface(i, j)] = 0.5 * (c[g.cell(i - 1, j)][0] + c[g.cell(i, j)][0]);
        }
    }
    for j in 1..g.ny() {
        for i in 0..g.nx() {
            out.data[g.vface(i, j)] = 0.5 * (c[g.cell(i, j - 1)][1] + c[g.cell(i, j)][1]);
        }
    }
    out
}

/// `Σ_a ∂_a f_a` for a cell field of 2-vectors of 3-vectors; centered inside,
/// one-sided in the boundary cells.
fn cell_divergence(g: &Grid, f: &[[[f64; 3]; 2]]) -> VectorField3 {
    let (nx, ny) = (g.nx(), g.ny());
    let mut out = VectorField3::zeros(g);
    for j in 0..ny {
        for i in 0..nx {
            let o = &mut out.data[g.cell(i, j)];
            for q in 0..3 {
                o[q] = one_sided(i, nx, g.dx, |ii| f[g.cell(ii, j)][0][q])
                    + one_sided(j, ny, g.dy, |jj| f[g.cell(i, jj)][1][q]);
            }
        }
    }
    out
}

fn one_sided(k: usize, n: usize, h: f64, f: impl Fn(usize) -> f64) -> f64 {
    if k == 0 {
        (f(1) - f(0)) / h
    } else if k + 1 == n {
        (f(k) - f(k - 1)) / h
    } else {
        (f(k + 1) - f(k - 1)) / (2.0 * h)
    }
}

/// `∂_j p₁ⁱ` at cell centers: `out[c][j][i]`, no-slip walls.
fn velocity_gradients(g: &Grid, p1: &FaceField) -> Vec<[[f64; 2]; 2]> {
    let zero = vec![[0.0; 2]; g.m()];
    cell_gradients(g, &cell_velocity(g, p1), &zero)
}

fn continuous_sweep(traj: &Trajectory, targets: &TargetSet, weights: &CostWeights) -> AdjointState {
    let g = &traj.grid;
    let spec = &g.spec;
    let dt = spec.dt;
    let b = weights.beta;
    let nl = traj.nsteps();
    let solvers = traj.solvers();
    let frozen = traj.stepper.opts.freeze_velocity;
    let zero3 = vec![[0.0; 3]; g.m()];

    let fin = traj.final_state();
    let mut p1 = vec![FaceField::zeros(g); nl + 1];
    let mut pi = vec![ScalarField::zeros(g); nl + 1];
    let mut p2 = vec![VectorField3::zeros(g); nl + 1];
    p1[nl] = solvers.project(g, &diff_face(&fin.u, &targets.u_omega).scaled(b[2])).0;
    p2[nl] = diff_cells(&fin.d, &targets.d_omega).scaled(b[3]);

    for n in (0..nl).rev() {
        let s = &traj.states[n];
        let h = traj.bc.row(n);
        let (q1, q2) = (&p1[n + 1], &p2[n + 1]);
        let gd = cell_gradients(g, &s.d, h);

        let (new_p1, new_pi) = if frozen {
            (FaceField::zeros(g), ScalarField::zeros(g))
        } else {
            // u·∇p₁ - (∇u)ᵀ p₁ - (∇d)ᵀ p₂ + β₁ (u - u_QT)
            let mut rhs = stencil::advect_velocity(g, &s.u, q1, AdvectionScheme::Centered);
            let gu = velocity_gradients(g, &s.u);
            let pc = cell_velocity(g, q1);
            let t: Vec<[f64; 2]> = gu
                .iter()
                .zip(&pc.data)
                .map(|(gr, p)| [gr[0][0] * p[0] + gr[0][1] * p[1], gr[1][0] * p[0] + gr[1][1] * p[1]])
                .collect();
            rhs.axpy(-1.0, &cells_to_faces(g, &t));
            for j in 0..g.ny() {
                for i in 1..g.nx() {
                    let (a, c) = (g.cell(i - 1, j), g.cell(i, j));
                    let dd = ops::sub3(&s.d.data[c], &s.d.data[a]);
                    let pm: [f64; 3] = std::array::from_fn(|q| 0.5 * (q2.data[a][q] + q2.data[c][q]));
                    rhs.data[g.uface(i, j)] -= dot3(&dd, &pm) / g.dx;
                }
            }
            for j in 1..g.ny() {
                for i in 0..g.nx() {
                    let (a, c) = (g.cell(i, j - 1), g.cell(i, j));
                    let dd = ops::sub3(&s.d.data[c], &s.d.data[a]);
                    let pm: [f64; 3] = std::array::from_fn(|q| 0.5 * (q2.data[a][q] + q2.data[c][q]));
                    rhs.data[g.vface(i, j)] -= dot3(&dd, &pm) / g.dy;
                }
            }
            rhs.axpy(b[0], &diff_face(&s.u, targets.u_qt.at(n)));
            let mut r = q1.clone();
            r.axpy(dt, &rhs);
            r.zero_boundary(g);
            let star = solvers.helmholtz(&r);
            let (p, psi) = solvers.project(g, &star);
            (p, psi.scaled(1.0 / dt))
        };

        // μ (Δp₂ + |∇d|² p₂ - 2 div(∇d (d·p₂))) + u·∇p₂ - λ T + β₂ (d - d_QT)
        let mut rhs = ops::laplacian_d(g, q2, &zero3);
        let mut z = vec![[[0.0; 3]; 2]; g.ncells()];
        for c in 0..g.ncells() {
            let gsq: f64 = (0..2).map(|a| dot3(&gd[c][a], &gd[c][a])).sum();
            let dp = dot3(&s.d.data[c], &q2.data[c]);
            for q in 0..3 {
                rhs.data[c][q] += gsq * q2.data[c][q];
            }
            for a in 0..2 {
                z[c][a] = gd[c][a].map(|x| x * dp);
            }
        }
        rhs.axpy(-2.0, &cell_divergence(g, &z));
        rhs = rhs.scaled(spec.mu);
        rhs.axpy(1.0, &ops::advect_director(g, &s.u, q2));
        if !frozen {
            let gp = velocity_gradients(g, q1);
            // V_i = Σ_j ∂_j d ∂_j p₁ⁱ, W_j = Σ_i ∂_i d ∂_j p₁ⁱ
            let mut vw = vec![[[0.0; 3]; 2]; g.ncells()];
            for c in 0..g.ncells() {
                for a in 0..2 {
                    for q in 0..3 {
                        let v: f64 = (0..2).map(|j| gd[c][j][q] * gp[c][j][a]).sum();
                        let w: f64 = (0..2).map(|i| gd[c][i][q] * gp[c][a][i]).sum();
                        vw[c][a][q] = v + w;
                    }
                }
            }
            rhs.axpy(-spec.lambda, &cell_divergence(g, &vw));
        }
        rhs.axpy(b[1], &diff_cells(&s.d, targets.d_qt.at(n)));
        let mut np2 = q2.clone();
        np2.axpy(dt, &rhs);
        p1[n] = new_p1;
        pi[n] = new_pi;
        p2[n] = np2;
    }
    let h_bar = vec![vec![[0.0; 3]; g.m()]; nl + 1];
    AdjointState { mode: LinearizationMode::Continuous, p1, pi, p2, h_bar, q1: vec![], q2: vec![] }
}

/// Boundary multipliers `q₁ = -∂_ν p₁ - π ν` and
/// `q₂ = -∂_ν p₂ + (∇d ν)(∂_ν p₁ · ν) + (∇d)(∂_ν p₁)`, from one-sided
/// differences at each boundary sample. Tangential derivatives of `p₁`
/// vanish on the wall, so `∂_j p₁ = ν_j ∂_ν p₁` there.
fn multipliers(traj: &Trajectory, p1: &[FaceField], pi: &[ScalarField], p2: &[VectorField3]) -> (Vec<Trace<2>>, Vec<Trace<3>>) {
    let g = &traj.grid;
    let zero2 = vec![[0.0; 2]; g.m()];
    let zero3 = vec![[0.0; 3]; g.m()];
    let (mut q1s, mut q2s) = (vec![], vec![]);
    for n in 0..p1.len() {
        let dn_p1 = normal_derivative(g, &cell_velocity(g, &p1[n]), &zero2);
        let dn_p2 = normal_derivative(g, &p2[n], &zero3);
        let gd = cell_gradients(g, &traj.states[n].d, traj.bc.row(n));
        let (mut q1, mut q2) = (vec![], vec![]);
        for (k, b) in g.boundary.samples.iter().enumerate() {
            let nu = b.normal;
            let pb = 1.5 * pi[n].data[b.cell][0] - 0.5 * pi[n].data[b.inner_cell][0];
            q1.push([-dn_p1[k][0] - pb * nu[0], -dn_p1[k][1] - pb * nu[1]]);
            let dp = dn_p1[k];
            let dpn = dp[0] * nu[0] + dp[1] * nu[1];
            let gr = &gd[b.cell];
            q2.push(std::array::from_fn(|q| {
                let dnd = gr[0][q] * nu[0] + gr[1][q] * nu[1];
                let st = dnd * dpn + gr[0][q] * dp[0] + gr[1][q] * dp[1];
                -dn_p2[k][q] + st
            }));
        }
        q1s.push(q1);
        q2s.push(q2);
    }
    (q1s, q2s)
}

/// Boundary multipliers `(q₁, q₂)` at every level, recomputed from the
/// adjoint state.
pub fn boundary_multipliers(traj: &Trajectory, adj: &AdjointState) -> (Vec<Trace<2>>, Vec<Trace<3>>) {
    multipliers(traj, &adj.p1, &adj.pi, &adj.p2)
}

/// Cost derivative along `ξ` from the adjoint: `β₅ ⟨h - e₃, ξ⟩ + Σ h̄ · ξ`.
pub fn gradient_pairing(traj: &Trajectory, h: &DirectorBC, adj: &AdjointState, xi: &TangentBoundarySection, weights: &CostWeights) -> f64 {
    let g = &traj.grid;
    let mut acc = weights.beta[4] * control_term_pairing(g, h, xi);
    for (hr, xr) in adj.h_bar.iter().zip(&xi.xi) {
        acc += hr.iter().zip(xr).map(|(a, b)| dot3(a, b)).sum::<f64>();
    }
    acc
}

/// The same pairing written as the boundary integral
/// `∫_Γ_T ⟨β₅ (h - e₃) + q₂, ξ⟩` with `q₂` taken from the stored multipliers.
pub fn gradient_pairing_cond2_form(
    traj: &Trajectory,
    h: &DirectorBC,
    adj: &AdjointState,
    xi: &TangentBoundarySection,
    weights: &CostWeights,
) -> f64 {
    let g = &traj.grid;
    let b5 = weights.beta[4];
    let mut acc = 0.0;
    for n in 0..xi.xi.len() {
        let w = g.time_weight(n);
        for (k, s) in g.boundary.samples.iter().enumerate() {
            let hv = h.row(n)[k];
            let integrand: [f64; 3] = std::array::from_fn(|q| b5 * (hv[q] - E3[q]) + adj.q2[n][k][q]);
            acc += w * s.ds * dot3(&integrand, &xi.xi[n][k]);
        }
    }
    acc
}

/// Lagrangian `𝒢 = 𝒞 - Σ_n ⟨λⁿ⁺¹, Xⁿ⁺¹ - S(Xⁿ)⟩` with the multipliers
/// `λ = |cell| (p₁, p₂)` against the residual of each step. Equals the cost
/// on a trajectory produced by the scheme.
pub fn lagrangian_value(traj: &Trajectory, h: &DirectorBC, adj: &AdjointState, targets: &TargetSet, weights: &CostWeights) -> Result<f64> {
    let g = &traj.grid;
    let area = g.cell_area();
    let nl = traj.nsteps();
    let b = weights.beta;
    let mut val = cost(traj, h, targets, weights).total;
    for n in 0..nl {
        let (next, _) = traj.stepper.step(&traj.states[n], h.row(n), h.row(n + 1))?;
        let ru = diff_face(&traj.states[n + 1].u, &next.u);
        let rd = diff_cells(&traj.states[n + 1].d, &next.d);
        let (mut lu, mut ld) = (adj.p1[n + 1].clone(), adj.p2[n + 1].clone());
        if n + 1 == nl {
            let w = g.time_weight(nl);
            let s = &traj.states[nl];
            lu.axpy(w * b[0], &traj.solvers().project(g, &diff_face(&s.u, targets.u_qt.at(nl))).0);
            ld.axpy(w * b[1], &diff_cells(&s.d, targets.d_qt.at(nl)));
        }
        val -= area * (lu.dot(&ru) + ld.dot(&rd));
    }
    Ok(val)
}

#[cfg(test)]
mod tests;
