use crate::error::{Error, Result};
use crate::grid::{stencil, FaceField, Grid, VectorField3};
use crate::state::max_unit_defect;

/// A field given per time level or once for all levels.
#[derive(Debug, Clone, PartialEq)]
pub enum Series<T> {
    Constant(T),
    Levels(Vec<T>),
}

impl<T> Series<T> {
    pub fn at(&self, n: usize) -> &T {
        match self {
            Series::Constant(v) => v,
            Series::Levels(v) => &v[n],
        }
    }

    pub fn iter(&self) -> Box<dyn Iterator<Item = &T> + '_> {
        match self {
            Series::Constant(v) => Box::new(std::iter::once(v)),
            Series::Levels(v) => Box::new(v.iter()),
        }
    }

    fn check_levels(&self, levels: usize) -> Result<()> {
        match self {
            Series::Levels(v) if v.len() != levels => Err(Error::InvalidTargets(format!(
                "{} target levels for {levels} time levels",
                v.len()
            ))),
            _ => Ok(()),
        }
    }
}

/// Tracking targets of the cost functional.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSet {
    pub u_qt: Series<FaceField>,
    pub d_qt: Series<VectorField3>,
    pub u_omega: FaceField,
    pub d_omega: VectorField3,
}

impl TargetSet {
    /// Zero velocity targets and constant director targets `c`.
    pub fn constant(grid: &Grid, c: [f64; 3]) -> Self {
        Self {
            u_qt: Series::Constant(FaceField::zeros(grid)),
            d_qt: Series::Constant(VectorField3::constant(grid, c)),
            u_omega: FaceField::zeros(grid),
            d_omega: VectorField3::constant(grid, c),
        }
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        let levels = grid.spec.nsteps + 1;
        self.u_qt.check_levels(levels)?;
        self.d_qt.check_levels(levels)?;
        let bad = |e: Error| Error::InvalidTargets(e.to_string());
        for u in self.u_qt.iter().chain(std::iter::once(&self.u_omega)) {
            u.check_shape(grid).map_err(bad)?;
            let div = stencil::divergence(grid, u).max_abs();
            if div > 1e-10 {
                return Err(Error::InvalidTargets(format!("velocity target has |div| = {div:e}")));
            }
        }
        for d in self.d_qt.iter().chain(std::iter::once(&self.d_omega)) {
            d.check_shape(grid).map_err(bad)?;
            let defect = max_unit_defect(d);
            if defect > 1e-12 {
                return Err(Error::InvalidTargets(format!("director target off the sphere by {defect:e}")));
            }
        }
        Ok(())
    }
}

/// Weights `β₁ … β₅` of the five cost terms.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CostWeights {
    pub beta: [f64; 5],
}

impl CostWeights {
    pub fn new(beta: [f64; 5]) -> Self {
        Self { beta }
    }

    /// Nonnegative and finite.
    pub fn validate(&self) -> Result<()> {
        for (i, b) in self.beta.iter().enumerate() {
            if !(b.is_finite() && *b >= 0.0) {
                return Err(Error::InvalidWeights(format!("beta{} = {b} must be finite and >= 0", i + 1)));
            }
        }
        Ok(())
    }

    /// [`validate`](Self::validate) plus: not all weights vanish.
    pub fn validate_nonzero(&self) -> Result<()> {
        self.validate()?;
        if self.beta.iter().all(|b| *b == 0.0) {
            return Err(Error::InvalidWeights("all weights vanish".into()));
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.beta.iter().all(|b| *b == 0.0)
    }
}
