//! Projected-gradient descent in chart coordinates.

use super::{chart_gradient, discrete_u_norm, ChartControl};
use crate::adjoint::{solve_adjoint, CostWeights, TargetSet};
use crate::control::cost::{cost, CostBreakdown};
use crate::error::{Error, Result};
use crate::forward::{simulate_with, InitialData, Stepper, Trajectory};
use crate::grid::Grid;
use crate::linearized::LinearizationMode;
use crate::state::DirectorBC;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizeConfig {
    /// Radius of the admissible ball in the discrete control norm.
    pub m_radius: f64,
    pub step0: f64,
    pub armijo_c: f64,
    pub armijo_shrink: f64,
    pub max_iters: usize,
    pub grad_tol: f64,
    /// Backtracks allowed per iteration before giving up.
    pub max_backtracks: usize,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        Self {
            m_radius: 10.0,
            step0: 1.0,
            armijo_c: 1e-4,
            armijo_shrink: 0.5,
            max_iters: 100,
            grad_tol: 1e-8,
            max_backtracks: 40,
        }
    }
}

impl OptimizeConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |s: String| Err(Error::InvalidOptimizeConfig(s));
        if !(self.m_radius > 0.0 && self.m_radius.is_finite()) {
            return bad(format!("M = {} must be positive", self.m_radius));
        }
        if !(self.step0 > 0.0 && self.step0.is_finite()) {
            return bad(format!("step0 = {} must be positive", self.step0));
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return bad(format!("armijo_c = {} not in (0, 1)", self.armijo_c));
        }
        if !(self.armijo_shrink > 0.0 && self.armijo_shrink < 1.0) {
            return bad(format!("armijo_shrink = {} not in (0, 1)", self.armijo_shrink));
        }
        if !(self.grad_tol >= 0.0) {
            return bad(format!("grad_tol = {} must be >= 0", self.grad_tol));
        }
        Ok(())
    }
}

/// Result of [`project_feasible`].
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub z: ChartControl,
    /// Entries pulled back radially onto the unit circle.
    pub clipped: usize,
    /// Whether the deviation from the base row was rescaled.
    pub rescaled: bool,
}

/// Constant-in-time extension of level 0.
fn base_extension(z: &ChartControl) -> ChartControl {
    ChartControl { z: vec![z.z[0].clone(); z.levels()] }
}

/// Largest `θ ∈ [0, 1]` with `‖a + θ b‖ ≤ r`, given `‖a‖ ≤ r`.
fn deviation_factor(a: &ChartControl, b: &ChartControl, r: f64) -> f64 {
    let qa = discrete_u_norm(a).powi(2);
    let qb = discrete_u_norm(b).powi(2);
    let mut ab = a.clone();
    ab.axpy(1.0, b);
    let cross = 0.5 * (discrete_u_norm(&ab).powi(2) - qa - qb);
    if qb <= 0.0 {
        return 1.0;
    }
    let disc = (cross * cross + qb * (r * r - qa)).max(0.0);
    ((-cross + disc.sqrt()) / qb).clamp(0.0, 1.0)
}

/// Map `z` into the admissible set: shrink the deviation from level 0 until
/// the norm is at most `M`, clip entries outside the unit disk radially, and
/// shrink once more if clipping raised the norm. Level 0 is never changed.
pub fn project_feasible(z: &ChartControl, m_radius: f64) -> Result<Projection> {
    let a = base_extension(z);
    let base = discrete_u_norm(&a);
    if base > m_radius {
        return Err(Error::InfeasibleBase { norm: base, radius: m_radius });
    }
    let mut out = z.clone();
    let mut rescaled = false;
    let mut clipped = 0;
    for pass in 0..3 {
        if discrete_u_norm(&out) > m_radius {
            let b = out.sub(&a);
            // the 1 - 1e-14 margin absorbs rounding in the norm evaluation
            let theta = deviation_factor(&a, &b, m_radius) * (1.0 - 1e-14);
            out = a.clone();
            out.axpy(theta, &b);
            rescaled = true;
        }
        if pass == 2 {
            break;
        }
        let mut any = false;
        for row in out.z.iter_mut().skip(1) {
            for v in row.iter_mut() {
                let r = v[0].hypot(v[1]);
                if r > 1.0 {
                    v[0] /= r;
                    v[1] /= r;
                    clipped += 1;
                    any = true;
                }
            }
        }
        if !any {
            break;
        }
    }
    Ok(Projection { z: out, clipped, rescaled })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub cost: CostBreakdown,
    /// `‖z - P(z - g)‖` in the boundary `L²` norm.
    pub grad_norm: f64,
    /// Step that produced this iterate (0 for the first).
    pub step: f64,
    pub feasibility_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OptimizeHistory {
    pub records: Vec<IterationRecord>,
}

impl OptimizeHistory {
    pub fn costs(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.cost.total).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopReason {
    /// Gradient exactly zero at the start.
    Stationary,
    GradTol,
    MaxIters,
    /// Backtracking failed; the best iterate is returned.
    LineSearchStall { iter: usize, backtracks: usize },
}

#[derive(Debug, Clone)]
pub struct OptimizeOutcome {
    pub h: DirectorBC,
    pub history: OptimizeHistory,
    pub stop: StopReason,
    /// Trajectory driven by `h`.
    pub trajectory: Trajectory,
}

impl OptimizeOutcome {
    /// `Err(LineSearchStall)` when the line search gave up.
    pub fn check(&self) -> Result<()> {
        match self.stop {
            StopReason::LineSearchStall { iter, backtracks } => Err(Error::LineSearchStall { iter, backtracks }),
            _ => Ok(()),
        }
    }
}

struct Iterate {
    z: ChartControl,
    h: DirectorBC,
    traj: Trajectory,
    cost: CostBreakdown,
}

fn evaluate(stepper: &Stepper, init: &InitialData, h0: &DirectorBC, z: ChartControl, targets: &TargetSet, weights: &CostWeights) -> Result<Iterate> {
    let mut h = z.to_control();
    h.rows_mut()[0] = h0.row(0).clone();
    let traj = simulate_with(stepper, init, &h)?;
    let cost = cost(&traj, &h, targets, weights);
    Ok(Iterate { z, h, traj, cost })
}

fn gradient_mapping_norm(grid: &Grid, z: &ChartControl, g: &ChartControl, m_radius: f64) -> Result<f64> {
    let mut trial = z.clone();
    trial.axpy(-1.0, g);
    let p = project_feasible(&trial, m_radius)?.z;
    Ok(z.sub(&p).l2_norm(grid))
}

/// Projected-gradient descent on the control with Armijo backtracking.
///
/// Trial steps use the Barzilai-Borwein length when it is positive and
/// otherwise twice the last accepted step. Every iterate is feasible and
/// the cost sequence is nonincreasing.
pub fn optimize(
    stepper: &Stepper,
    init: &InitialData,
    h0: &DirectorBC,
    targets: &TargetSet,
    weights: &CostWeights,
    cfg: &OptimizeConfig,
) -> Result<OptimizeOutcome> {
    cfg.validate()?;
    weights.validate()?;
    let grid = &stepper.grid;
    h0.validate(grid)?;
    h0.check_compatible(&init.trace)?;
    let z0 = ChartControl::from_control(h0)?;
    let n0 = discrete_u_norm(&z0);
    if n0 > cfg.m_radius + 1e-12 {
        return Err(Error::InvalidControl(format!("initial control norm {n0} exceeds M = {}", cfg.m_radius)));
    }

    let mut cur = evaluate(stepper, init, h0, z0, targets, weights)?;
    let mut history = OptimizeHistory::default();
    let mut step_taken = 0.0;
    let mut prev: Option<(ChartControl, ChartControl)> = None;
    let mut alpha_prev = cfg.step0;
    let mut iter = 0;
    let stop = loop {
        let adj = solve_adjoint(&cur.traj, targets, weights, LinearizationMode::Discrete)?;
        let g = chart_gradient(&cur.h, &adj, &cur.traj, weights)?;
        let pg = gradient_mapping_norm(grid, &cur.z, &g, cfg.m_radius)?;
        history.records.push(IterationRecord {
            iter,
            cost: cur.cost,
            grad_norm: pg,
            step: step_taken,
            feasibility_norm: discrete_u_norm(&cur.z),
        });
        if iter == 0 && g.z.iter().flatten().all(|v| *v == [0.0, 0.0]) {
            break StopReason::Stationary;
        }
        if pg <= cfg.grad_tol {
            break StopReason::GradTol;
        }
        if iter >= cfg.max_iters {
            break StopReason::MaxIters;
        }

        let mut alpha = match &prev {
            Some((zp, gp)) => {
                let s = cur.z.sub(zp);
                let y = g.sub(gp);
                let sy = s.l2_dot(&y, grid);
                if sy > 0.0 {
                    s.l2_dot(&s, grid) / sy
                } else {
                    2.0 * alpha_prev
                }
            }
            None => cfg.step0,
        };
        let mut backtracks = 0;
        let next = loop {
            let mut trial = cur.z.clone();
            trial.axpy(-alpha, &g);
            let zt = project_feasible(&trial, cfg.m_radius)?.z;
            let moved = cur.z.sub(&zt).l2_norm(grid);
            let cand = match evaluate(stepper, init, h0, zt, targets, weights) {
                Ok(c) => Some(c),
                Err(Error::StepFailed { .. }) => None,
                Err(e) => return Err(e),
            };
            if let Some(c) = cand {
                if c.cost.total <= cur.cost.total - cfg.armijo_c / alpha * moved * moved {
                    break Some(c);
                }
            }
            backtracks += 1;
            if backtracks > cfg.max_backtracks {
                break None;
            }
            alpha *= cfg.armijo_shrink;
        };
        let Some(next) = next else {
            break StopReason::LineSearchStall { iter, backtracks };
        };
        prev = Some((cur.z.clone(), g));
        alpha_prev = alpha;
        step_taken = alpha;
        cur = next;
        iter += 1;
    };
    Ok(OptimizeOutcome { h: cur.h, history, stop, trajectory: cur.traj })
}
