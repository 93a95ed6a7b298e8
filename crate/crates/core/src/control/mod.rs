//! Boundary control: chart, control-space norm, cost, gradient, feasible set
//! and the projected-gradient optimizer.

mod chart;
pub mod cost;
mod norm;
mod optimize;

pub use chart::{chart_forward, chart_inverse, chart_inverse_jacobian, chart_segment};
pub use cost::{control_penalty, cost, CostBreakdown};
pub use norm::discrete_u_norm;
pub use optimize::{optimize, project_feasible, OptimizeConfig, OptimizeHistory, OptimizeOutcome, Projection, StopReason};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::adjoint::{AdjointState, CostWeights};
use crate::error::{Error, Result};
use crate::forward::Trajectory;
use crate::grid::Grid;
use crate::linearized::TangentBoundarySection;
use crate::state::DirectorBC;

/// Chart coordinates `z[n][j] = Π(h[n][j])`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartControl {
    pub z: Vec<Vec<[f64; 2]>>,
}

impl ChartControl {
    pub fn zeros(m: usize, levels: usize) -> Self {
        Self { z: vec![vec![[0.0; 2]; m]; levels] }
    }

    pub fn from_control(h: &DirectorBC) -> Result<Self> {
        let z = h
            .rows()
            .iter()
            .map(|r| r.iter().map(|v| chart_forward(*v)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { z })
    }

    pub fn to_control(&self) -> DirectorBC {
        DirectorBC::from_rows(self.z.iter().map(|r| r.iter().map(|v| chart_inverse(*v)).collect()).collect())
    }

    pub fn levels(&self) -> usize {
        self.z.len()
    }

    pub fn m(&self) -> usize {
        self.z.first().map_or(0, |r| r.len())
    }

    pub fn axpy(&mut self, a: f64, o: &Self) {
        for (r, q) in self.z.iter_mut().zip(&o.z) {
            for (v, w) in r.iter_mut().zip(q) {
                v[0] += a * w[0];
                v[1] += a * w[1];
            }
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self { z: self.z.iter().map(|r| r.iter().map(|v| [a * v[0], a * v[1]]).collect()).collect() }
    }

    pub fn sub(&self, o: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(-1.0, o);
        out
    }

    /// Euclidean inner product over all entries.
    pub fn dot(&self, o: &Self) -> f64 {
        self.z.iter().flatten().zip(o.z.iter().flatten()).map(|(a, b)| a[0] * b[0] + a[1] * b[1]).sum()
    }

    /// Boundary `L²(Γ_T)` inner product (trapezoid in time).
    pub fn l2_dot(&self, o: &Self, grid: &Grid) -> f64 {
        let mut acc = 0.0;
        for (n, (r, q)) in self.z.iter().zip(&o.z).enumerate() {
            let w = grid.time_weight(n);
            for ((a, b), s) in r.iter().zip(q).zip(&grid.boundary.samples) {
                acc += w * s.ds * (a[0] * b[0] + a[1] * b[1]);
            }
        }
        acc
    }

    pub fn l2_norm(&self, grid: &Grid) -> f64 {
        self.l2_dot(self, grid).sqrt()
    }

    pub fn max_radius(&self) -> f64 {
        self.z.iter().flatten().map(|v| v[0].hypot(v[1])).fold(0.0, f64::max)
    }
}

/// Convex combination `Π⁻¹(s Π(h_a) + (1 - s) Π(h_b))` of two controls.
pub fn chart_segment_control(h_a: &DirectorBC, h_b: &DirectorBC, s: f64) -> Result<DirectorBC> {
    let (a, b) = (ChartControl::from_control(h_a)?, ChartControl::from_control(h_b)?);
    if s == 1.0 {
        return Ok(h_a.clone());
    }
    if s == 0.0 {
        return Ok(h_b.clone());
    }
    let mut z = a.scaled(s);
    z.axpy(1.0 - s, &b);
    Ok(z.to_control())
}

/// `ξ = dΠ⁻¹(Π(h)) · dz`, tangent to `h` by construction.
pub fn build_tangent_from_chart(h: &DirectorBC, dz: &ChartControl) -> Result<TangentBoundarySection> {
    if dz.levels() != h.levels() || dz.m() != h.m() {
        return Err(Error::ShapeMismatch("chart perturbation shape differs from the control".into()));
    }
    let mut xi = Vec::with_capacity(h.levels());
    for (hr, zr) in h.rows().iter().zip(&dz.z) {
        let mut row = Vec::with_capacity(hr.len());
        for (hv, dv) in hr.iter().zip(zr) {
            let j = chart_inverse_jacobian(chart_forward(*hv)?);
            row.push(std::array::from_fn(|q| j[q][0] * dv[0] + j[q][1] * dv[1]));
        }
        xi.push(row);
    }
    Ok(TangentBoundarySection { xi })
}

/// Chart-space `L²(Γ_T)` representative of the derivative: for every `dz`,
/// `⟨g, dz⟩_{L²} = gradient_pairing(h, build_tangent_from_chart(h, dz))`.
/// Zero at level 0.
pub fn chart_gradient(h: &DirectorBC, adj: &AdjointState, traj: &Trajectory, weights: &CostWeights) -> Result<ChartControl> {
    let g = &traj.grid;
    let b5 = weights.beta[4];
    let mut out = ChartControl::zeros(h.m(), h.levels());
    for n in 1..h.levels() {
        let w = g.time_weight(n);
        for (k, s) in g.boundary.samples.iter().enumerate() {
            let hv = h.row(n)[k];
            let hb = adj.h_bar[n][k];
            let c: [f64; 3] = std::array::from_fn(|q| b5 * w * s.ds * (hv[q] - cost::E3[q]) + hb[q]);
            let j = chart_inverse_jacobian(chart_forward(hv)?);
            let scale = 1.0 / (w * s.ds);
            out.z[n][k] = [
                scale * (j[0][0] * c[0] + j[1][0] * c[1] + j[2][0] * c[2]),
                scale * (j[0][1] * c[0] + j[1][1] * c[1] + j[2][1] * c[2]),
            ];
        }
    }
    Ok(out)
}

/// Smooth random chart perturbation vanishing at level 0: a few Fourier
/// modes along the boundary times `sin` modes in time, scaled to unit
/// maximum.
pub fn random_chart_direction(grid: &Grid, seed: u64) -> ChartControl {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let levels = grid.spec.nsteps + 1;
    let per = grid.boundary.perimeter;
    let tf = grid.spec.final_time();
    let mut coef = vec![];
    for _ in 0..6 {
        let p = rng.gen_range(0..4) as f64;
        let q = rng.gen_range(1..3) as f64;
        let phase = rng.gen_range(0.0..std::f64::consts::TAU);
        let amp = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        coef.push((p, q, phase, amp));
    }
    let mut z = ChartControl::zeros(grid.m(), levels);
    for n in 1..levels {
        let t = n as f64 * grid.spec.dt / tf;
        for (k, b) in grid.boundary.samples.iter().enumerate() {
            let s = b.s / per;
            for (p, q, ph, amp) in &coef {
                let v = (std::f64::consts::TAU * p * s + ph).cos() * (0.5 * std::f64::consts::PI * q * t).sin();
                z.z[n][k][0] += amp[0] * v;
                z.z[n][k][1] += amp[1] * v;
            }
        }
    }
    let m = z.z.iter().flatten().flat_map(|v| v.iter()).fold(0.0f64, |a, x| a.max(x.abs()));
    if m > 0.0 {
        z.scaled(1.0 / m)
    } else {
        z
    }
}

#[cfg(test)]
mod tests;
