//! Tangent model: the linearization of the scheme about a stored trajectory
//! along a boundary direction `ξ`, with zero initial data.

use std::str::FromStr;

use crate::adjoint::{CostWeights, TargetSet};
use crate::control::cost::E3;
use crate::error::{Error, Result};
use crate::forward::{ops, Trajectory};
use crate::grid::stencil::{self, AdvectionScheme};
use crate::grid::{FaceField, Grid, ScalarField, Trace, VectorField3};
use crate::state::{self, cell_gradients, dot3, gradient_sq_coefficient, norm3, DirectorBC};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LinearizationMode {
    /// Exact linearization of every sub-step, renormalization included.
    #[default]
    Discrete,
    /// Direct discretization of the linearized equations: the director
    /// source is `|∇d|² φ + 2 ⟨∇d, ∇φ⟩ d` with centered gradients and the
    /// force is the divergence of the linearized stress.
    Continuous,
}

impl FromStr for LinearizationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "discrete" => Ok(Self::Discrete),
            "continuous" => Ok(Self::Continuous),
            _ => Err(Error::Unsupported(format!("mode `{s}`"))),
        }
    }
}

/// Boundary direction `ξ[n][j]`, tangent to the control and zero at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentBoundarySection {
    pub xi: Vec<Trace<3>>,
}

impl TangentBoundarySection {
    pub fn zeros(m: usize, levels: usize) -> Self {
        Self { xi: vec![vec![[0.0; 3]; m]; levels] }
    }

    pub fn validate(&self, h: &DirectorBC) -> Result<()> {
        if self.xi.len() != h.levels() || self.xi.iter().any(|r| r.len() != h.m()) {
            return Err(Error::ShapeMismatch("tangent section shape differs from the control".into()));
        }
        if self.xi[0].iter().any(|v| *v != [0.0; 3]) {
            return Err(Error::InvalidControl("tangent section must vanish at t = 0".into()));
        }
        for (n, (row, hrow)) in self.xi.iter().zip(h.rows()).enumerate() {
            for (j, (v, hv)) in row.iter().zip(hrow).enumerate() {
                let s = dot3(v, hv);
                if s.abs() > 1e-12 * norm3(v).max(1.0) {
                    return Err(Error::InvalidControl(format!("xi[{j}][{n}] not tangent: <xi, h> = {s:e}")));
                }
            }
        }
        Ok(())
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self { xi: self.xi.iter().map(|r| r.iter().map(|v| v.map(|x| a * x)).collect()).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.xi.iter().flatten().flatten().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    /// `L²(Γ_T)` norm (trapezoid in time).
    pub fn l2_norm(&self, grid: &Grid) -> f64 {
        let mut acc = 0.0;
        for (n, row) in self.xi.iter().enumerate() {
            let w = grid.time_weight(n);
            acc += w * row.iter().zip(&grid.boundary.samples).map(|(v, b)| b.ds * dot3(v, v)).sum::<f64>();
        }
        acc.sqrt()
    }
}

/// Sphere exponential map `cos|v| h + sin|v| v/|v|`.
pub fn sphere_exp(h: [f64; 3], v: [f64; 3]) -> [f64; 3] {
    let r = norm3(&v);
    if r < 1e-14 {
        return h;
    }
    let (s, c) = r.sin_cos();
    std::array::from_fn(|q| c * h[q] + s * v[q] / r)
}

/// `exp_h(ε ξ)` pointwise.
pub fn exp_control(h: &DirectorBC, xi: &TangentBoundarySection, eps: f64) -> DirectorBC {
    let rows = h
        .rows()
        .iter()
        .zip(&xi.xi)
        .map(|(hr, xr)| hr.iter().zip(xr).map(|(a, b)| sphere_exp(*a, b.map(|x| eps * x))).collect())
        .collect();
    DirectorBC::from_rows(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedState {
    pub omega: FaceField,
    pub phi: VectorField3,
    /// Mean-zero linearized pressure.
    pub lin_p: ScalarField,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedHistory {
    pub mode: LinearizationMode,
    pub states: Vec<LinearizedState>,
}

/// March the tangent model about `traj` with boundary data `(0, ξ)`.
pub fn solve_linearized(traj: &Trajectory, xi: &TangentBoundarySection, mode: LinearizationMode) -> Result<LinearizedHistory> {
    let g = &traj.grid;
    if traj.stepper.opts.scheme == AdvectionScheme::Upwind {
        return Err(Error::Unsupported("tangent model of the upwind scheme".into()));
    }
    if xi.xi.len() != traj.states.len() || xi.xi.iter().any(|r| r.len() != g.m()) {
        return Err(Error::ShapeMismatch("tangent section does not match the trajectory".into()));
    }
    let mut states = Vec::with_capacity(traj.states.len());
    states.push(LinearizedState {
        omega: FaceField::zeros(g),
        phi: VectorField3::zeros(g),
        lin_p: ScalarField::zeros(g),
    });
    for n in 0..traj.nsteps() {
        let next = tangent_step(traj, n, &states[n], &xi.xi[n], &xi.xi[n + 1], mode);
        states.push(next);
    }
    Ok(LinearizedHistory { mode, states })
}

fn tangent_step(
    traj: &Trajectory,
    n: usize,
    cur: &LinearizedState,
    xi_n: &[[f64; 3]],
    xi_next: &[[f64; 3]],
    mode: LinearizationMode,
) -> LinearizedState {
    let g = &traj.grid;
    let spec = &g.spec;
    let dt = spec.dt;
    let (s, s1) = (&traj.states[n], &traj.states[n + 1]);
    let (h_n, h_next) = (traj.bc.row(n), traj.bc.row(n + 1));
    let opts = traj.stepper.opts;

    let (omega, lin_p) = if opts.freeze_velocity {
        (FaceField::zeros(g), ScalarField::zeros(g))
    } else {
        let force = match mode {
            LinearizationMode::Discrete => {
                let l = ops::laplacian_d(g, &s.d, h_n);
                let ldot = ops::laplacian_d(g, &cur.phi, xi_n);
                let mut f = ops::elastic_force(g, spec.lambda, &cur.phi, &l);
                f.axpy(1.0, &ops::elastic_force(g, spec.lambda, &s.d, &ldot));
                f
            }
            LinearizationMode::Continuous => linearized_stress_force(g, spec.lambda, &s.d, h_n, &cur.phi, xi_n),
        };
        let mut rhs = cur.omega.clone();
        rhs.axpy(dt, &force);
        rhs.axpy(-dt, &stencil::advect_velocity(g, &cur.omega, &s.u, AdvectionScheme::Centered));
        rhs.axpy(-dt, &stencil::advect_velocity(g, &s.u, &cur.omega, AdvectionScheme::Centered));
        rhs.zero_boundary(g);
        let ostar = traj.solvers().helmholtz(&rhs);
        let (omega, psi) = traj.solvers().project(g, &ostar);
        let mut p = psi.scaled(1.0 / dt);
        if mode == LinearizationMode::Discrete {
            p.axpy(-0.5 * spec.lambda, &ops::gradient_sq_density_tangent(g, &s.d, h_n, &cur.phi, xi_n));
            p.subtract_mean();
        }
        (omega, p)
    };

    let phi = match mode {
        LinearizationMode::Discrete => {
            let mut rhs = ops::laplacian_d(g, &cur.phi, xi_next);
            if opts.harmonic_term {
                let lam = gradient_sq_coefficient(g, &s.d, h_next);
                let lam_dot = ops::lambda_tangent(g, &s.d, h_next, &cur.phi, xi_next);
                rhs.axpy(1.0, &ops::scale_cells(&lam, &cur.phi));
                rhs.axpy(1.0, &ops::scale_cells(&lam_dot, &s.d));
            }
            rhs = rhs.scaled(spec.mu);
            rhs.axpy(-1.0, &ops::advect_director(g, &omega, &s.d));
            rhs.axpy(-1.0, &ops::advect_director(g, &s1.u, &cur.phi));
            let mut raw = cur.phi.clone();
            raw.axpy(dt, &rhs);
            ops::renormalize_tangent(&s1.d, &traj.raw_norms[n], &raw)
        }
        LinearizationMode::Continuous => {
            let gd = cell_gradients(g, &s.d, h_next);
            let gp = cell_gradients(g, &cur.phi, xi_next);
            let mut rhs = ops::laplacian_d(g, &cur.phi, xi_next);
            if opts.harmonic_term {
                for c in 0..g.ncells() {
                    let gsq: f64 = (0..2).map(|a| dot3(&gd[c][a], &gd[c][a])).sum();
                    let cross: f64 = (0..2).map(|a| dot3(&gd[c][a], &gp[c][a])).sum();
                    for q in 0..3 {
                        rhs.data[c][q] += gsq * cur.phi.data[c][q] + 2.0 * cross * s.d.data[c][q];
                    }
                }
            }
            rhs = rhs.scaled(spec.mu);
            rhs.axpy(-1.0, &ops::advect_director(g, &omega, &s.d));
            rhs.axpy(-1.0, &ops::advect_director(g, &s1.u, &cur.phi));
            let mut out = cur.phi.clone();
            out.axpy(dt, &rhs);
            out
        }
    };
    LinearizedState { omega, phi, lin_p }
}

/// `-λ div(∇φ ⊙ ∇d + ∇d ⊙ ∇φ)` on interior faces from centered cell
/// gradients: normal stresses differenced across the face, shear stresses
/// averaged onto the face row and differenced along it (one-sided at walls).
fn linearized_stress_force(g: &Grid, lambda: f64, d: &VectorField3, h: &[[f64; 3]], phi: &VectorField3, xi: &[[f64; 3]]) -> FaceField {
    let gd = cell_gradients(g, d, h);
    let gp = cell_gradients(g, phi, xi);
    let sig: Vec<[[f64; 2]; 2]> = gd
        .iter()
        .zip(&gp)
        .map(|(a, b)| {
            let mut s = [[0.0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    s[i][j] = dot3(&b[i], &a[j]) + dot3(&a[i], &b[j]);
                }
            }
            s
        })
        .collect();
    let (nx, ny) = (g.nx(), g.ny());
    let mut out = FaceField::zeros(g);
    for j in 0..ny {
        for i in 1..nx {
            let (a, b) = (g.cell(i - 1, j), g.cell(i, j));
            let dxx = (sig[b][0][0] - sig[a][0][0]) / g.dx;
            let avg = |jj: usize| 0.5 * (sig[g.cell(i - 1, jj)][0][1] + sig[g.cell(i, jj)][0][1]);
            let dyx = one_sided_or_centered(j, ny, g.dy, avg);
            out.data[g.uface(i, j)] = -lambda * (dxx + dyx);
        }
    }
    for j in 1..ny {
        for i in 0..nx {
            let (a, b) = (g.cell(i, j - 1), g.cell(i, j));
            let dyy = (sig[b][1][1] - sig[a][1][1]) / g.dy;
            let avg = |ii: usize| 0.5 * (sig[g.cell(ii, j - 1)][1][0] + sig[g.cell(ii, j)][1][0]);
            let dxy = one_sided_or_centered(i, nx, g.dx, avg);
            out.data[g.vface(i, j)] = -lambda * (dxy + dyy);
        }
    }
    out
}

fn one_sided_or_centered(k: usize, n: usize, h: f64, f: impl Fn(usize) -> f64) -> f64 {
    if k == 0 {
        (f(1) - f(0)) / h
    } else if k + 1 == n {
        (f(k) - f(k - 1)) / h
    } else {
        (f(k + 1) - f(k - 1)) / (2.0 * h)
    }
}

/// `max |⟨φ, d⟩|` over cells and time levels.
pub fn tangency_residual(lin: &LinearizedHistory, traj: &Trajectory) -> f64 {
    lin.states
        .iter()
        .zip(&traj.states)
        .flat_map(|(l, s)| l.phi.data.iter().zip(&s.d.data).map(|(p, d)| dot3(p, d).abs()))
        .fold(0.0, f64::max)
}

/// Directional derivative of the cost along `ξ` from the tangent solution.
pub fn cost_derivative_via_tangent(
    lin: &LinearizedHistory,
    traj: &Trajectory,
    targets: &TargetSet,
    weights: &CostWeights,
    xi: &TangentBoundarySection,
) -> f64 {
    let g = &traj.grid;
    let b = weights.beta;
    let a = g.cell_area();
    let nl = traj.nsteps();
    let mut acc = 0.0;
    for (n, (s, l)) in traj.states.iter().zip(&lin.states).enumerate() {
        let w = g.time_weight(n);
        if b[0] != 0.0 {
            let mut e = s.u.clone();
            e.axpy(-1.0, targets.u_qt.at(n));
            acc += b[0] * w * a * e.dot(&l.omega);
        }
        if b[1] != 0.0 {
            let mut e = s.d.clone();
            e.axpy(-1.0, targets.d_qt.at(n));
            acc += b[1] * w * a * e.dot(&l.phi);
        }
    }
    let (s, l) = (&traj.states[nl], &lin.states[nl]);
    if b[2] != 0.0 {
        let mut e = s.u.clone();
        e.axpy(-1.0, &targets.u_omega);
        acc += b[2] * a * e.dot(&l.omega);
    }
    if b[3] != 0.0 {
        let mut e = s.d.clone();
        e.axpy(-1.0, &targets.d_omega);
        acc += b[3] * a * e.dot(&l.phi);
    }
    if b[4] != 0.0 {
        acc += b[4] * control_term_pairing(g, &traj.bc, xi);
    }
    acc
}

/// `Σ_n w_n Σ_k ds_k ⟨hⁿ_k - e₃, ξⁿ_k⟩`.
pub fn control_term_pairing(g: &Grid, h: &DirectorBC, xi: &TangentBoundarySection) -> f64 {
    let mut acc = 0.0;
    for (n, (hr, xr)) in h.rows().iter().zip(&xi.xi).enumerate() {
        let w = g.time_weight(n);
        for ((hv, xv), b) in hr.iter().zip(xr).zip(&g.boundary.samples) {
            acc += w * b.ds * dot3(&[hv[0] - E3[0], hv[1] - E3[1], hv[2] - E3[2]], xv);
        }
    }
    acc
}

/// Discrete `𝒲` norm of a history `(ω, φ)` with director traces:
/// `max_n (‖ω‖ + ‖φ‖_{H¹}) + (Σ_n w_n (‖ω‖_{H¹} + ‖φ‖_{H²})²)^{1/2}`.
pub fn w_norm(g: &Grid, omega: &[FaceField], phi: &[VectorField3], traces: &[Trace<3>]) -> f64 {
    let a = g.cell_area();
    let (mut sup, mut l2) = (0.0f64, 0.0);
    for (n, ((o, p), tr)) in omega.iter().zip(phi).zip(traces).enumerate() {
        let o_l2 = o.norm_l2_sq(g);
        let o_h1 = o_l2 + state::velocity_dissipation(g, o);
        let p_h1 = p.norm_l2_sq(g) + state::gradient_sq_density(g, p, tr).values().sum::<f64>() * a;
        let p_h2 = p_h1 + ops::laplacian_d(g, p, tr).norm_l2_sq(g);
        sup = sup.max(o_l2.sqrt() + p_h1.sqrt());
        l2 += g.time_weight(n) * (o_h1.sqrt() + p_h2.sqrt()).powi(2);
    }
    sup + l2.sqrt()
}

impl LinearizedHistory {
    /// `𝒲` norm with the boundary traces of `ξ`.
    pub fn w_norm(&self, g: &Grid, xi: &TangentBoundarySection) -> f64 {
        let om: Vec<FaceField> = self.states.iter().map(|s| s.omega.clone()).collect();
        let ph: Vec<VectorField3> = self.states.iter().map(|s| s.phi.clone()).collect();
        w_norm(g, &om, &ph, &xi.xi)
    }
}
