//! Manufactured exact solution: velocity from a stream function vanishing
//! with its gradient on the boundary, director `Π⁻¹` of a smooth chart
//! function, and the forcing that makes the pair an exact solution.

use std::f64::consts::PI;
use std::sync::Arc;

use super::jet::Jet;
use super::ConvergenceReport;
use crate::error::Result;
use crate::forward::{Forcing, InitialData, StepOptions, Trajectory};
use crate::grid::{FaceField, Grid, GridSpec, VectorField3};
use crate::presets::{trace_at, Problem};
use crate::state::DirectorBC;

fn amplitude(t: Jet) -> Jet {
    (t.scale(6.0)).cos().scale(0.5)
}

/// Stream function `ψ = g(t) sin²(πx) sin²(πy)`.
pub fn stream(x: f64, y: f64, t: f64) -> f64 {
    0.5 * (6.0 * t).cos() * (PI * x).sin().powi(2) * (PI * y).sin().powi(2)
}

/// Velocity `(∂y ψ, -∂x ψ)` as jets.
pub fn velocity_jets(x: f64, y: f64, t: f64) -> [Jet; 2] {
    let (x, y, t) = (Jet::var(0, x), Jet::var(1, y), Jet::var(2, t));
    let g = amplitude(t);
    let (sx, sy) = (x.scale(PI).sin(), y.scale(PI).sin());
    let (s2x, s2y) = (x.scale(2.0 * PI).sin(), y.scale(2.0 * PI).sin());
    [(g * sx * sx * s2y).scale(PI), -(g * s2x * sy * sy).scale(PI)]
}

/// Chart function of the exact director.
fn chart_jets(x: Jet, y: Jet, t: Jet) -> [Jet; 2] {
    let a = (x.scale(PI) + t.scale(3.0)).sin() * y.scale(0.5 * PI).cos().scale(0.4) + 0.1;
    let b = (x.scale(PI) - y.scale(PI)).cos() * (t.scale(4.0)).cos().scale(0.3);
    [a, b]
}

/// Exact director as jets, `Π⁻¹(a, b)`.
pub fn director_jets(x: f64, y: f64, t: f64) -> [Jet; 3] {
    let [a, b] = chart_jets(Jet::var(0, x), Jet::var(1, y), Jet::var(2, t));
    let s = (a * a + b * b + 1.0).recip();
    let one_minus = Jet::constant(1.0) - a * a - b * b;
    [(a * s).scale(2.0), (b * s).scale(2.0), one_minus * s]
}

pub fn velocity(x: f64, y: f64, t: f64) -> [f64; 2] {
    velocity_jets(x, y, t).map(|j| j.v)
}

pub fn director(x: f64, y: f64, t: f64) -> [f64; 3] {
    director_jets(x, y, t).map(|j| j.v)
}

/// `f_u = u_t + (u·∇)u - ν Δu + λ (∇d)ᵀ Δd`; the gradient part of the
/// elastic stress divergence is absorbed by the pressure.
pub fn momentum_forcing(x: f64, y: f64, t: f64, nu: f64, lambda: f64) -> [f64; 2] {
    let u = velocity_jets(x, y, t);
    let d = director_jets(x, y, t);
    std::array::from_fn(|i| {
        let ui = &u[i];
        let adv = u[0].v * ui.dx() + u[1].v * ui.dy();
        let el: f64 = d.iter().map(|dk| dk.g[i] * dk.lap()).sum();
        ui.dt() + adv - nu * ui.lap() + lambda * el
    })
}

/// `f_d = d_t + (u·∇)d - μ (Δd + |∇d|² d)`.
pub fn director_forcing(x: f64, y: f64, t: f64, mu: f64) -> [f64; 3] {
    let u = velocity(x, y, t);
    let d = director_jets(x, y, t);
    let gsq: f64 = d.iter().map(|dk| dk.dx() * dk.dx() + dk.dy() * dk.dy()).sum();
    std::array::from_fn(|k| {
        let dk = &d[k];
        dk.dt() + u[0] * dk.dx() + u[1] * dk.dy() - mu * (dk.lap() + gsq * dk.v)
    })
}

/// Forward problem with the manufactured forcing on `grid`.
pub fn problem(grid: &Grid) -> Problem {
    let (nu, mu, lambda) = (grid.spec.nu, grid.spec.mu, grid.spec.lambda);
    let mut u0 = FaceField::from_stream_function(grid, |x, y| stream(x, y, 0.0));
    u0.zero_boundary(grid);
    let init = InitialData {
        u0,
        d0: VectorField3::from_fn(grid, |x, y| director(x, y, 0.0)),
        trace: trace_at(grid, |x, y| director(x, y, 0.0)),
    };
    let forcing = Forcing {
        f_u: Some(Arc::new(move |x, y, t| momentum_forcing(x, y, t, nu, lambda))),
        f_d: Some(Arc::new(move |x, y, t| director_forcing(x, y, t, mu))),
    };
    Problem {
        grid: grid.clone(),
        init,
        bc: DirectorBC::from_fn(grid, director),
        forcing,
        opts: StepOptions::default(),
    }
}

/// Discrete `L²(Q_T)` errors `(u, d)` of a manufactured run (trapezoid in
/// time, midpoint in space).
pub fn errors(traj: &Trajectory) -> (f64, f64) {
    let g = &traj.grid;
    let (mut eu, mut ed) = (0.0, 0.0);
    for (n, s) in traj.states.iter().enumerate() {
        let t = s.t;
        let w = g.time_weight(n);
        let mut ue = FaceField::from_stream_function(g, |x, y| stream(x, y, t));
        ue.zero_boundary(g);
        ue.axpy(-1.0, &s.u);
        eu += w * ue.norm_l2_sq(g);
        let mut de = VectorField3::from_fn(g, |x, y| director(x, y, t));
        de.axpy(-1.0, &s.d);
        ed += w * de.norm_l2_sq(g);
    }
    (eu.sqrt(), ed.sqrt())
}

/// Convergence study over `levels` (cells per side) with `dt = cfl · dx²`
/// and final time `t_final`. Returns the reports for `u` and `d`.
pub fn manufactured_suite(levels: &[usize], cfl: f64, t_final: f64) -> Result<(ConvergenceReport, ConvergenceReport)> {
    let (mut dts, mut eu, mut ed) = (vec![], vec![], vec![]);
    for &n in levels {
        let h = 1.0 / n as f64;
        let dt0 = cfl * h * h;
        let nsteps = (t_final / dt0).round().max(1.0) as usize;
        let dt = t_final / nsteps as f64;
        let spec = GridSpec { cfl: (dt / (h * h)).max(crate::grid::DEFAULT_CFL), ..GridSpec::unit_square(n, dt, nsteps) };
        let pr = problem(&Grid::new(spec)?);
        let traj = pr.simulate()?;
        let (a, b) = errors(&traj);
        dts.push(dt);
        eu.push(a);
        ed.push(b);
    }
    Ok((ConvergenceReport::new(dts.clone(), eu), ConvergenceReport::new(dts, ed)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_solution_is_unit_and_solenoidal() {
        for &(x, y, t) in &[(0.2, 0.3, 0.0), (0.7, 0.9, 0.05), (0.5, 0.1, 0.3)] {
            let d = director(x, y, t);
            assert!((crate::state::norm3(&d) - 1.0).abs() < 1e-15);
            let u = velocity_jets(x, y, t);
            assert!((u[0].dx() + u[1].dy()).abs() < 1e-12);
            let f = director_forcing(x, y, t, 1.0);
            assert!(crate::state::dot3(&f, &d).abs() < 1e-11);
        }
        assert_eq!(velocity(0.0, 0.4, 0.1), [0.0, -0.0]);
    }

    #[test]
    fn velocity_matches_stream_difference() {
        let (x, y, t, e) = (0.31, 0.62, 0.07, 1e-6);
        let u = velocity(x, y, t);
        let uy = (stream(x, y + e, t) - stream(x, y - e, t)) / (2.0 * e);
        let ux = -(stream(x + e, y, t) - stream(x - e, y, t)) / (2.0 * e);
        assert!((u[0] - uy).abs() < 1e-8 && (u[1] - ux).abs() < 1e-8);
    }

    #[test]
    fn initial_data_reproduced() {
        let spec = GridSpec::unit_square(8, 1e-3, 1);
        let g = Grid::new(spec).unwrap();
        let pr = problem(&g);
        let mut traj_like = pr.simulate().unwrap();
        traj_like.states.truncate(1);
        traj_like.raw_norms.clear();
        let (eu, ed) = errors(&traj_like);
        assert!(eu < 1e-2 && ed == 0.0);
    }

    #[test]
    fn first_order_in_dt() {
        let (u, d) = manufactured_suite(&[8, 16, 32], 0.2, 0.02).unwrap();
        assert!(u.slope >= 0.9 && d.slope >= 0.9, "{u:?} {d:?}");
        assert!(u.errors.windows(2).all(|w| w[1] < w[0]));
    }
}
