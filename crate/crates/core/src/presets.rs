//! Named problem setups. Directors are built as `Π⁻¹` of smooth chart
//! functions, so they are unit-norm and hemisphere-valued by construction.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::adjoint::{CostWeights, Series, TargetSet};
use crate::control::{chart_inverse, discrete_u_norm, ChartControl};
use crate::error::{Error, Result};
use crate::forward::{Forcing, InitialData, StepOptions};
use crate::grid::{FaceField, Grid, GridSpec, Trace, VectorField3};
use crate::state::DirectorBC;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// `u = 0`, `d ≡ h ≡ const`.
    Stationary,
    /// Frozen `u = 0`, time-independent trace: pure director relaxation.
    HeatRelaxation,
    /// Swirling flow with time-dependent boundary director.
    Driven,
    /// Director close to the equator with rotating boundary data.
    Hemisphere,
    /// Tracking problem whose target is generated by a known control.
    SelfTracking,
    /// Manufactured exact solution with computed forcing.
    Manufactured,
}

impl Preset {
    pub const ALL: [Preset; 6] = [
        Preset::Stationary,
        Preset::HeatRelaxation,
        Preset::Driven,
        Preset::Hemisphere,
        Preset::SelfTracking,
        Preset::Manufactured,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Stationary => "stationary",
            Preset::HeatRelaxation => "heat-relaxation",
            Preset::Driven => "driven",
            Preset::Hemisphere => "hemisphere",
            Preset::SelfTracking => "self-tracking",
            Preset::Manufactured => "manufactured",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidInitialData(format!("unknown preset `{s}`")))
    }
}

/// Grid, data and options for one forward run.
#[derive(Debug, Clone)]
pub struct Problem {
    pub grid: Grid,
    pub init: InitialData,
    pub bc: DirectorBC,
    pub forcing: Forcing,
    pub opts: StepOptions,
}

/// Unit square, `n x n` cells, `dt = cfl · dx²` (unit coefficients).
pub fn unit_spec(n: usize, nsteps: usize, cfl: f64) -> GridSpec {
    let h = 1.0 / n as f64;
    GridSpec { cfl: cfl.max(crate::grid::DEFAULT_CFL), ..GridSpec::unit_square(n, cfl * h * h, nsteps) }
}

pub fn trace_at(grid: &Grid, f: impl Fn(f64, f64) -> [f64; 3]) -> Trace<3> {
    grid.boundary.samples.iter().map(|b| f(b.point[0], b.point[1])).collect()
}

/// Data defined by a chart function `w(x, y, t)` and a stream function.
pub fn chart_problem(
    grid: &Grid,
    w: impl Fn(f64, f64, f64) -> [f64; 2],
    psi: impl Fn(f64, f64) -> f64,
    opts: StepOptions,
) -> Problem {
    let d = |x: f64, y: f64, t: f64| chart_inverse(w(x, y, t));
    let mut u0 = FaceField::from_stream_function(grid, psi);
    u0.zero_boundary(grid);
    let init = InitialData {
        u0,
        d0: VectorField3::from_fn(grid, |x, y| d(x, y, 0.0)),
        trace: trace_at(grid, |x, y| d(x, y, 0.0)),
    };
    Problem { grid: grid.clone(), init, bc: DirectorBC::from_fn(grid, d), forcing: Forcing::default(), opts }
}

/// Chart function of the driven preset.
pub fn driven_chart(x: f64, y: f64, t: f64) -> [f64; 2] {
    let s = (2.0 * PI * t / 0.04).sin();
    [
        0.4 * (PI * (x + 0.3)).sin() * (0.5 * PI * y).cos() + 0.25 * s * (PI * y).cos(),
        0.3 * (PI * (x - y)).cos() + 0.25 * s * (PI * x).sin(),
    ]
}

pub fn driven_stream(x: f64, y: f64) -> f64 {
    0.5 * (PI * x).sin().powi(2) * (PI * y).sin().powi(2)
}

/// Chart function of the hemisphere preset: close to the unit circle
/// (director near the equator) in part of the domain.
pub fn hemisphere_chart(x: f64, y: f64, t: f64) -> [f64; 2] {
    let a = [0.98 * (PI * x).sin() * (PI * y).cos(), 0.98 * (PI * y).sin() * (PI * x).cos()];
    let (c, s) = ((20.0 * t).cos(), (20.0 * t).sin());
    [c * a[0] - s * a[1], s * a[0] + c * a[1]]
}

pub fn heat_chart(x: f64, y: f64, _t: f64) -> [f64; 2] {
    [0.6 * (2.0 * PI * x).sin() * (PI * y).sin(), 0.6 * x * y]
}

/// Forward problem for the presets that need no targets.
pub fn forward_problem(preset: Preset, spec: GridSpec) -> Result<Problem> {
    let grid = Grid::new(spec)?;
    let opts = StepOptions::default();
    Ok(match preset {
        Preset::Stationary => {
            let c = chart_inverse([0.3, -0.2]);
            chart_problem(&grid, |_, _, _| [0.3, -0.2], |_, _| 0.0, opts).with_const(c)
        }
        Preset::HeatRelaxation => {
            chart_problem(&grid, heat_chart, |_, _| 0.0, StepOptions { freeze_velocity: true, ..opts })
        }
        Preset::Driven => chart_problem(&grid, driven_chart, driven_stream, opts),
        Preset::SelfTracking => self_tracking(spec)?.problem,
        Preset::Hemisphere => chart_problem(&grid, hemisphere_chart, |_, _| 0.0, opts),
        Preset::Manufactured => crate::verify::manufactured::problem(&grid),
    })
}

/// A tracking problem whose targets come from a run with a known control.
#[derive(Debug, Clone)]
pub struct TrackingProblem {
    /// Forward data; `bc` is the starting control of the optimizer.
    pub problem: Problem,
    /// Control that generated the targets.
    pub h_dagger: DirectorBC,
    pub targets: TargetSet,
    pub weights: CostWeights,
    /// Feasibility radius: ten times the larger norm of the two controls,
    /// loose enough that the ball stays inactive along the descent path.
    pub m_radius: f64,
}

/// Chart function of the control that generates the self-tracking targets.
pub fn tracking_chart(x: f64, y: f64, t: f64, t_final: f64) -> [f64; 2] {
    let z = driven_chart(x, y, 0.0);
    let a = (0.5 * PI * t / t_final).sin();
    [z[0] + 0.3 * a * (PI * y).cos(), z[1] + 0.3 * a * (PI * x).sin()]
}

/// Self-tracking setup: initial data of the driven preset, targets
/// `d_QT` from the run with [`tracking_chart`], starting control constant
/// in time (the trace of `d0`), weights `β₂ = 1` and the rest zero.
pub fn self_tracking(spec: GridSpec) -> Result<TrackingProblem> {
    let grid = Grid::new(spec)?;
    let tf = spec.final_time();
    let dagger = chart_problem(&grid, |x, y, t| tracking_chart(x, y, t, tf), driven_stream, StepOptions::default());
    let traj = dagger.simulate()?;
    let fin = traj.final_state();
    let targets = TargetSet {
        u_qt: Series::Constant(FaceField::zeros(&grid)),
        d_qt: Series::Levels(traj.states.iter().map(|s| s.d.clone()).collect()),
        u_omega: FaceField::zeros(&grid),
        d_omega: fin.d.clone(),
    };
    let mut problem = dagger.clone();
    problem.bc = DirectorBC::constant(problem.init.trace.clone(), spec.nsteps);
    let n0 = discrete_u_norm(&ChartControl::from_control(&problem.bc)?);
    let n1 = discrete_u_norm(&ChartControl::from_control(&dagger.bc)?);
    Ok(TrackingProblem {
        problem,
        h_dagger: dagger.bc,
        targets,
        weights: CostWeights::new([0.0, 1.0, 0.0, 0.0, 0.0]),
        m_radius: 10.0 * n0.max(n1),
    })
}

impl Problem {
    fn with_const(mut self, c: [f64; 3]) -> Self {
        self.init.d0 = VectorField3::constant(&self.grid, c);
        self.init.trace = vec![c; self.grid.m()];
        self.bc = DirectorBC::constant(vec![c; self.grid.m()], self.grid.spec.nsteps);
        self
    }

    pub fn simulate(&self) -> Result<crate::forward::Trajectory> {
        crate::forward::simulate(&self.grid, &self.init, &self.bc, &self.forcing, self.opts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for p in Preset::ALL {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
        assert!("nope".parse::<Preset>().is_err());
    }

    #[test]
    fn presets_validate() {
        for p in [Preset::Stationary, Preset::HeatRelaxation, Preset::Driven, Preset::Hemisphere] {
            let pr = forward_problem(p, unit_spec(8, 3, 0.2)).unwrap();
            pr.init.validate(&pr.grid, 1e-10).unwrap();
            pr.bc.validate(&pr.grid).unwrap();
            pr.bc.check_compatible(&pr.init.trace).unwrap();
        }
    }
}
