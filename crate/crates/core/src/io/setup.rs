//! Turn a [`RunConfig`] into solver inputs.

use std::path::Path;

use thiserror::Error;

use crate::adjoint::{CostWeights, Series, TargetSet};
use crate::control::{chart_inverse, discrete_u_norm, ChartControl, OptimizeConfig};
use crate::forward::{InitialData, Stepper};
use crate::grid::{FaceField, Grid, VectorField3};
use crate::presets::{forward_problem, self_tracking, Preset, Problem};
use crate::state::DirectorBC;

use super::binary::{read_control, read_field, FieldData, FormatError};
use super::config::{parse_config, ConfigError, RunConfig, Source, TargetSpec};

#[derive(Debug, Error)]
pub enum SetupError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Format { path: String, source: FormatError },
    #[error("{path}: {msg}")]
    File { path: String, msg: String },
    #[error(transparent)]
    Solver(#[from] crate::Error),
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Everything the command-line tools need for one run.
#[derive(Debug, Clone)]
pub struct RunSetup {
    pub config: RunConfig,
    pub problem: Problem,
    pub targets: TargetSet,
    pub weights: CostWeights,
    /// `config.optimize` with the feasibility radius filled in.
    pub optimize: OptimizeConfig,
}

impl RunSetup {
    /// Read and resolve a config file; relative paths are taken from its
    /// directory.
    pub fn load(path: &Path) -> Result<Self, SetupError> {
        let text = std::fs::read_to_string(path).map_err(|source| SetupError::Io { path: path.display().to_string(), source })?;
        let mut config = parse_config(&text)?;
        config.resolve_files(path.parent().unwrap_or(Path::new(".")))?;
        Self::from_config(config)
    }

    pub fn from_config(config: RunConfig) -> Result<Self, SetupError> {
        let spec = config.grid;
        let grid = Grid::new(spec)?;
        let tracking = match (&config.initial, &config.targets) {
            (Source::Preset(Preset::SelfTracking), _) | (_, TargetSpec::SelfTracking) => Some(self_tracking(spec)?),
            _ => None,
        };

        let control = match &config.control {
            Source::Preset(p) => forward_problem(*p, spec)?.bc,
            Source::File { path, .. } => read_control(path).map_err(|source| SetupError::Format { path: path.display().to_string(), source })?,
        };
        let mut problem = match &config.initial {
            Source::Preset(p) => forward_problem(*p, spec)?,
            Source::File { path, velocity } => Problem {
                init: initial_from_files(&grid, path, velocity.as_deref(), &control)?,
                grid: grid.clone(),
                bc: control.clone(),
                forcing: Default::default(),
                opts: Default::default(),
            },
        };
        problem.bc = control;
        problem.opts.scheme = config.scheme;
        problem.bc.validate(&grid)?;
        problem.bc.check_compatible(&problem.init.trace)?;

        let targets = match (&config.targets, &tracking) {
            (TargetSpec::SelfTracking, Some(t)) => t.targets.clone(),
            (TargetSpec::Constant { d_chart, d_final_chart }, _) => TargetSet {
                u_qt: Series::Constant(FaceField::zeros(&grid)),
                d_qt: Series::Constant(VectorField3::constant(&grid, chart_inverse(*d_chart))),
                u_omega: FaceField::zeros(&grid),
                d_omega: VectorField3::constant(&grid, chart_inverse(*d_final_chart)),
            },
            (TargetSpec::SelfTracking, None) => unreachable!("self-tracking targets are always built"),
        };

        let m_radius = match (config.m_radius, &tracking) {
            (Some(m), _) => m,
            (None, Some(t)) if config.initial == Source::Preset(Preset::SelfTracking) => t.m_radius,
            _ => (10.0 * discrete_u_norm(&ChartControl::from_control(&problem.bc)?)).max(1.0),
        };
        let optimize = OptimizeConfig { m_radius, ..config.optimize };
        let weights = config.weights;
        Ok(Self { config, problem, targets, weights, optimize })
    }

    pub fn stepper(&self) -> Result<Stepper, crate::Error> {
        Stepper::new(&self.problem.grid, self.problem.opts, self.problem.forcing.clone())
    }
}

fn initial_from_files(grid: &Grid, director: &Path, velocity: Option<&Path>, control: &DirectorBC) -> Result<InitialData, SetupError> {
    let read = |p: &Path| {
        let s = read_field(p).map_err(|source| SetupError::Format { path: p.display().to_string(), source })?;
        if (s.nx, s.ny) != (grid.nx(), grid.ny()) {
            return Err(SetupError::File {
                path: p.display().to_string(),
                msg: format!("snapshot is {} x {}, grid is {} x {}", s.nx, s.ny, grid.nx(), grid.ny()),
            });
        }
        Ok(s.data)
    };
    let d0 = match read(director)? {
        FieldData::Director(d) => d,
        _ => return Err(SetupError::File { path: director.display().to_string(), msg: "expected a director snapshot".into() }),
    };
    let u0 = match velocity {
        None => FaceField::zeros(grid),
        Some(p) => match read(p)? {
            FieldData::Velocity(u) => u,
            _ => return Err(SetupError::File { path: p.display().to_string(), msg: "expected a velocity snapshot".into() }),
        },
    };
    Ok(InitialData { u0, d0, trace: control.row(0).clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::binary::{write_control, write_field, FieldSnapshot};

    #[test]
    fn self_tracking_setup_matches_preset() {
        let cfg = parse_config("[grid]\nnx = 6\nnsteps = 3\n[initial]\npreset = self-tracking\n[targets]\npreset = self-tracking\n").unwrap();
        let s = RunSetup::from_config(cfg.clone()).unwrap();
        let t = self_tracking(cfg.grid).unwrap();
        assert_eq!(s.targets, t.targets);
        assert_eq!(s.problem.bc, t.problem.bc);
        assert_eq!(s.optimize.m_radius, t.m_radius);
    }

    #[test]
    fn files_reproduce_preset_run() {
        let dir = std::env::temp_dir().join(format!("setup-test-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let cfg = parse_config("[grid]\nnx = 6\nnsteps = 3\n[initial]\npreset = driven\n").unwrap();
        let a = RunSetup::from_config(cfg).unwrap();
        let g = &a.problem.grid;
        write_control(&dir.join("h.lcb"), &a.problem.bc).unwrap();
        write_field(&dir.join("d0.lcf"), &FieldSnapshot::director(g, &a.problem.init.d0, 0.0)).unwrap();
        write_field(&dir.join("u0.lcf"), &FieldSnapshot::velocity(g, &a.problem.init.u0, 0.0)).unwrap();
        let text = "[grid]\nnx = 6\nnsteps = 3\n[initial]\nfile = d0.lcf\nvelocity_file = u0.lcf\n[control]\nfile = h.lcb\n";
        std::fs::write(dir.join("run.cfg"), text).unwrap();
        let b = RunSetup::load(&dir.join("run.cfg")).unwrap();
        let (ta, tb) = (a.problem.simulate().unwrap(), b.problem.simulate().unwrap());
        assert_eq!(ta.states, tb.states);

        let small = Grid::new(crate::presets::unit_spec(5, 3, 0.2)).unwrap();
        write_field(&dir.join("d0.lcf"), &FieldSnapshot::director(&small, &VectorField3::constant(&small, [0.0, 0.0, 1.0]), 0.0)).unwrap();
        assert!(matches!(RunSetup::load(&dir.join("run.cfg")), Err(SetupError::File { .. })));
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn incompatible_control_is_rejected() {
        let cfg = parse_config("[grid]\nnx = 6\nnsteps = 3\n[initial]\npreset = driven\n[control]\npreset = stationary\n").unwrap();
        assert!(matches!(RunSetup::from_config(cfg), Err(SetupError::Solver(_))));
    }
}
