//! Time integration of the state system.
//!
//! One step `n → n+1`:
//! 1. momentum predictor with the director at level `n` (viscous term by a
//!    backward-Euler Helmholtz solve, advection and elastic force explicit),
//! 2. pressure projection,
//! 3. explicit director step with the new velocity and the trace at level
//!    `n+1`, followed by pointwise renormalization.

pub mod ops;
mod solve;

pub use solve::Solvers;

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::stencil::{self, AdvectionScheme};
use crate::grid::{Boundary, FaceField, Grid, ScalarField, Trace, VectorField3};
use crate::state::{
    self, gradient_sq_coefficient, gradient_sq_density, norm3, renormalize_in_place, DirectorBC, EnergyReport,
    FlowState, UNIT_TOL,
};

pub type SpaceTimeFn<const C: usize> = Arc<dyn Fn(f64, f64, f64) -> [f64; C] + Send + Sync>;

/// Source terms for verification runs; both absent in control runs.
#[derive(Clone, Default)]
pub struct Forcing {
    pub f_u: Option<SpaceTimeFn<2>>,
    pub f_d: Option<SpaceTimeFn<3>>,
}

impl fmt::Debug for Forcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Forcing")
            .field("f_u", &self.f_u.is_some())
            .field("f_d", &self.f_d.is_some())
            .finish()
    }
}

impl Forcing {
    pub fn is_zero(&self) -> bool {
        self.f_u.is_none() && self.f_d.is_none()
    }

    fn momentum(&self, grid: &Grid, t: f64) -> Option<FaceField> {
        let f = self.f_u.as_ref()?;
        let mut out = FaceField::from_fn(grid, |x, y| f(x, y, t));
        out.zero_boundary(grid);
        Some(out)
    }

    fn director(&self, grid: &Grid, t: f64) -> Option<VectorField3> {
        let f = self.f_d.as_ref()?;
        Some(VectorField3::from_fn(grid, |x, y| f(x, y, t)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOptions {
    pub scheme: AdvectionScheme,
    /// Keep the velocity at its initial value (director-only relaxation).
    pub freeze_velocity: bool,
    /// Test hook: `false` drops the `|∇d|² d` term from the director step.
    pub harmonic_term: bool,
    /// Admissible `max |div u|` for initial data.
    pub div_tol: f64,
}

impl Default for StepOptions {
    fn default() -> Self {
        Self { scheme: AdvectionScheme::Centered, freeze_velocity: false, harmonic_term: true, div_tol: 1e-10 }
    }
}

/// Initial velocity and director together with the exact director trace
/// used for the compatibility check against the control at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub u0: FaceField,
    pub d0: VectorField3,
    pub trace: Trace<3>,
}

impl InitialData {
    pub fn validate(&self, grid: &Grid, div_tol: f64) -> Result<()> {
        self.u0.check_shape(grid).map_err(|e| Error::InvalidInitialData(e.to_string()))?;
        self.d0.check_shape(grid).map_err(|e| Error::InvalidInitialData(e.to_string()))?;
        if !self.u0.is_finite() || !self.d0.is_finite() {
            return Err(Error::InvalidInitialData("non-finite values".into()));
        }
        let ub = self.u0.boundary_max_abs(grid);
        if ub != 0.0 {
            return Err(Error::InvalidInitialData(format!("u0 is {ub:e} on the boundary")));
        }
        let div = stencil::divergence(grid, &self.u0).max_abs();
        if div > div_tol {
            return Err(Error::InvalidInitialData(format!("max |div u0| = {div:e}")));
        }
        let defect = state::max_unit_defect(&self.d0);
        if defect > UNIT_TOL {
            return Err(Error::InvalidInitialData(format!("| |d0| - 1 | = {defect:e}")));
        }
        if self.trace.len() != grid.m() {
            return Err(Error::InvalidInitialData(format!("trace has {} samples", self.trace.len())));
        }
        Ok(())
    }
}

/// One time step of the scheme, with factored solvers.
#[derive(Debug, Clone)]
pub struct Stepper {
    pub grid: Grid,
    pub solvers: Arc<Solvers>,
    pub opts: StepOptions,
    pub forcing: Forcing,
}

impl Stepper {
    pub fn new(grid: &Grid, opts: StepOptions, forcing: Forcing) -> Result<Self> {
        Ok(Self { grid: grid.clone(), solvers: Arc::new(Solvers::new(grid)?), opts, forcing })
    }

    /// `u* = (I - dt ν Δ)⁻¹ [u + dt (-(u·∇)u + F(d) + f_u)]` with the elastic
    /// force `F` built from `d` and its trace `h_n`.
    pub fn momentum_predictor(&self, u: &FaceField, d: &VectorField3, h_n: &[[f64; 3]], t: f64) -> FaceField {
        let g = &self.grid;
        let dt = g.spec.dt;
        let l = ops::laplacian_d(g, d, h_n);
        let mut rhs = u.clone();
        rhs.axpy(dt, &ops::elastic_force(g, g.spec.lambda, d, &l));
        rhs.axpy(-dt, &stencil::advect_velocity(g, u, u, self.opts.scheme));
        if let Some(f) = self.forcing.momentum(g, t + dt) {
            rhs.axpy(dt, &f);
        }
        rhs.zero_boundary(g);
        self.solvers.helmholtz(&rhs)
    }

    /// `(u, p)` with `u = u* - dt ∇p` discretely divergence-free and `p`
    /// mean-zero.
    pub fn pressure_projection(&self, ustar: &FaceField) -> (FaceField, ScalarField) {
        let (u, phi) = self.solvers.project(&self.grid, ustar);
        (u, phi.scaled(1.0 / self.grid.spec.dt))
    }

    /// `d + dt (μ (Δd + Λ d) - (u·∇)d + f_d)` before renormalization.
    pub fn director_raw(&self, d: &VectorField3, u: &FaceField, h_next: &[[f64; 3]], t: f64) -> VectorField3 {
        let g = &self.grid;
        let dt = g.spec.dt;
        let mut rhs = ops::laplacian_d(g, d, h_next);
        if self.opts.harmonic_term {
            let lam = gradient_sq_coefficient(g, d, h_next);
            rhs.axpy(1.0, &ops::scale_cells(&lam, d));
        }
        rhs = rhs.scaled(g.spec.mu);
        let adv = match self.opts.scheme {
            AdvectionScheme::Centered => ops::advect_director(g, u, d),
            AdvectionScheme::Upwind => stencil::advect_cells(g, u, d, Boundary::Dirichlet(h_next), AdvectionScheme::Upwind),
        };
        rhs.axpy(-1.0, &adv);
        if let Some(f) = self.forcing.director(g, t) {
            rhs.axpy(1.0, &f);
        }
        let mut raw = d.clone();
        raw.axpy(dt, &rhs);
        raw
    }

    pub fn director_step(&self, d: &VectorField3, u: &FaceField, h_next: &[[f64; 3]], t: f64) -> Result<VectorField3> {
        let mut raw = self.director_raw(d, u, h_next, t);
        renormalize_in_place(&mut raw)?;
        Ok(raw)
    }

    /// Advance `s` by one step; also returns the cellwise norm of the raw
    /// director before renormalization.
    pub fn step(&self, s: &FlowState, h_n: &[[f64; 3]], h_next: &[[f64; 3]]) -> Result<(FlowState, Vec<f64>)> {
        let g = &self.grid;
        let (u, p) = if self.opts.freeze_velocity {
            (s.u.clone(), ScalarField::zeros(g))
        } else {
            let ustar = self.momentum_predictor(&s.u, &s.d, h_n, s.t);
            let (u, mut p) = self.pressure_projection(&ustar);
            // the force differs from -λ div(∇d ⊙ ∇d) by λ ∇(½|∇d|²)
            let gsq = gradient_sq_density(g, &s.d, h_n);
            p.axpy(-0.5 * g.spec.lambda, &gsq);
            p.subtract_mean();
            (u, p)
        };
        let mut d = self.director_raw(&s.d, &u, h_next, s.t);
        let norms: Vec<f64> = d.data.iter().map(norm3).collect();
        renormalize_in_place(&mut d)?;
        Ok((FlowState { u, p, d, t: s.t + g.spec.dt }, norms))
    }
}

/// Stored solution `(u, P, d)` at every time level plus what produced it.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: Grid,
    pub bc: DirectorBC,
    pub states: Vec<FlowState>,
    /// `|d_raw|` per cell for each step `n → n+1`.
    pub raw_norms: Vec<Vec<f64>>,
    pub stepper: Stepper,
}

/// Run the scheme for `grid.spec.nsteps` steps.
pub fn simulate(grid: &Grid, init: &InitialData, bc: &DirectorBC, forcing: &Forcing, opts: StepOptions) -> Result<Trajectory> {
    let stepper = Stepper::new(grid, opts, forcing.clone())?;
    simulate_with(&stepper, init, bc)
}

/// [`simulate`] with a prepared [`Stepper`] (reuses the factorizations).
pub fn simulate_with(stepper: &Stepper, init: &InitialData, bc: &DirectorBC) -> Result<Trajectory> {
    let grid = &stepper.grid;
    init.validate(grid, stepper.opts.div_tol)?;
    bc.validate(grid)?;
    bc.check_compatible(&init.trace)?;
    let n = grid.spec.nsteps;
    let mut states = Vec::with_capacity(n + 1);
    states.push(FlowState::new(grid, init.u0.clone(), init.d0.clone(), 0.0));
    let mut raw_norms = Vec::with_capacity(n);
    for k in 0..n {
        let (next, norms) = stepper
            .step(&states[k], bc.row(k), bc.row(k + 1))
            .map_err(|e| Error::StepFailed { step: k, source: Box::new(e) })?;
        let mut next = next;
        next.t = (k + 1) as f64 * grid.spec.dt;
        states.push(next);
        raw_norms.push(norms);
    }
    Ok(Trajectory { grid: grid.clone(), bc: bc.clone(), states, raw_norms, stepper: stepper.clone() })
}

impl Trajectory {
    pub fn nsteps(&self) -> usize {
        self.states.len() - 1
    }

    pub fn solvers(&self) -> &Solvers {
        &self.stepper.solvers
    }

    pub fn energy(&self, n: usize) -> EnergyReport {
        state::energy(&self.grid, &self.states[n], &self.bc, n)
    }

    /// `r_n = E_{n+1} - E_n + dt D_{n+1} - dt Flux_{n+1}` with
    /// `E = ½‖u‖² + λ ½‖∇d‖²`, `D = ν ‖∇u‖² + λ μ ‖Δd + |∇d|² d‖²` and
    /// `Flux = λ ∫_Γ ⟨∂_ν d, ∂_t h⟩`. For unit coefficients these are the
    /// plain [`EnergyReport`] quantities.
    pub fn energy_balance_series(&self) -> Vec<f64> {
        let s = &self.grid.spec;
        let reports: Vec<EnergyReport> = (0..self.states.len()).map(|n| self.energy(n)).collect();
        let frozen = self.stepper.opts.freeze_velocity;
        let total = |e: &EnergyReport| e.kinetic + s.lambda * e.elastic;
        (0..self.nsteps())
            .map(|n| {
                let next = &self.states[n + 1];
                let e1 = &reports[n + 1];
                let tau_sq = e1.dissipation - state::velocity_dissipation(&self.grid, &next.u);
                let visc = if frozen { 0.0 } else { s.nu * state::velocity_dissipation(&self.grid, &next.u) };
                let d = visc + s.lambda * s.mu * tau_sq;
                total(e1) - total(&reports[n]) + s.dt * d - s.dt * s.lambda * e1.boundary_flux
            })
            .collect()
    }

    pub fn max_unit_defect(&self) -> f64 {
        self.states.iter().map(|s| state::max_unit_defect(&s.d)).fold(0.0, f64::max)
    }

    pub fn max_divergence(&self) -> f64 {
        self.states.iter().map(|s| stencil::divergence(&self.grid, &s.u).max_abs()).fold(0.0, f64::max)
    }

    pub fn hemisphere_min(&self) -> f64 {
        self.states.iter().map(|s| state::hemisphere_min(&s.d)).fold(f64::INFINITY, f64::min)
    }

    pub fn final_state(&self) -> &FlowState {
        self.states.last().expect("trajectory has at least one state")
    }
}
