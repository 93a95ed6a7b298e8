//! Uniform rectangular grid, field layouts and the boundary parametrization.
//!
//! Velocity lives on a MAC staggered layout (normal components on cell
//! faces), pressure and the director live at cell centers. The boundary is
//! sampled at the midpoints of the boundary faces, counterclockwise from the
//! corner `(0, 0)`: bottom edge left to right, right edge bottom to top, top
//! edge right to left, left edge top to bottom.

mod banded;
mod field;
pub mod stencil;

pub use banded::BandedCholesky;
pub use field::{Boundary, CellField, FaceField, ScalarField, Trace, VectorField3};

use crate::error::{Error, Result};

/// Default diffusive stability factor: `dt * mu <= cfl * min(dx, dy)^2`.
pub const DEFAULT_CFL: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
    pub dt: f64,
    pub nsteps: usize,
    pub nu: f64,
    pub mu: f64,
    pub lambda: f64,
    pub cfl: f64,
}

impl GridSpec {
    /// Unit square with `n x n` cells and unit coefficients.
    pub fn unit_square(n: usize, dt: f64, nsteps: usize) -> Self {
        Self {
            lx: 1.0,
            ly: 1.0,
            nx: n,
            ny: n,
            dt,
            nsteps,
            nu: 1.0,
            mu: 1.0,
            lambda: 1.0,
            cfl: DEFAULT_CFL,
        }
    }

    /// Largest time step admitted by the stability bound.
    pub fn max_stable_dt(&self) -> f64 {
        let h = (self.lx / self.nx as f64).min(self.ly / self.ny as f64);
        self.cfl * h * h / self.mu
    }

    pub fn final_time(&self) -> f64 {
        self.dt * self.nsteps as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 4 || self.ny < 4 {
            return Err(Error::InvalidGrid(format!(
                "need nx, ny >= 4, got {} x {}",
                self.nx, self.ny
            )));
        }
        if !(self.lx > 0.0 && self.ly > 0.0 && self.lx.is_finite() && self.ly.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "domain sides must be positive, got {} x {}",
                self.lx, self.ly
            )));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidGrid(format!("dt must be positive, got {}", self.dt)));
        }
        if self.nsteps < 1 {
            return Err(Error::InvalidGrid("nsteps must be >= 1".into()));
        }
        for (name, c) in [("nu", self.nu), ("mu", self.mu), ("lambda", self.lambda), ("cfl", self.cfl)] {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::InvalidGrid(format!("{name} must be positive, got {c}")));
            }
        }
        let bound = self.max_stable_dt();
        // small relative slack so that dt = cfl * h^2 computed elsewhere is accepted
        if self.dt > bound * (1.0 + 1e-12) {
            return Err(Error::StabilityBound { dt: self.dt, bound, cfl: self.cfl });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Bottom,
    Right,
    Top,
    Left,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySample {
    /// Arclength position of the face midpoint.
    pub s: f64,
    pub point: [f64; 2],
    /// Outward unit normal.
    pub normal: [f64; 2],
    /// Length of the boundary face.
    pub ds: f64,
    pub side: Side,
    /// Flat index of the adjacent interior cell.
    pub cell: usize,
    /// Flat index of the next cell inward (used by one-sided derivatives).
    pub inner_cell: usize,
    /// Grid spacing normal to the boundary.
    pub h_normal: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryParam {
    pub samples: Vec<BoundarySample>,
    pub perimeter: f64,
}

impl BoundaryParam {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Neighbour of a cell in one of the four axis directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Neighbor {
    Cell(usize),
    Boundary(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub spec: GridSpec,
    pub dx: f64,
    pub dy: f64,
    pub boundary: BoundaryParam,
}

impl Grid {
    pub fn new(spec: GridSpec) -> Result<Self> {
        spec.validate()?;
        let dx = spec.lx / spec.nx as f64;
        let dy = spec.ly / spec.ny as f64;
        let (nx, ny) = (spec.nx, spec.ny);
        let (lx, ly) = (spec.lx, spec.ly);
        let mut samples = Vec::with_capacity(2 * (nx + ny));
        for i in 0..nx {
            let x = (i as f64 + 0.5) * dx;
            samples.push(BoundarySample {
                s: x,
                point: [x, 0.0],
                normal: [0.0, -1.0],
                ds: dx,
                side: Side::Bottom,
                cell: i,
                inner_cell: nx + i,
                h_normal: dy,
            });
        }
        for j in 0..ny {
            let y = (j as f64 + 0.5) * dy;
            samples.push(BoundarySample {
                s: lx + y,
                point: [lx, y],
                normal: [1.0, 0.0],
                ds: dy,
                side: Side::Right,
                cell: j * nx + nx - 1,
                inner_cell: j * nx + nx - 2,
                h_normal: dx,
            });
        }
        for i in (0..nx).rev() {
            let x = (i as f64 + 0.5) * dx;
            samples.push(BoundarySample {
                s: lx + ly + (lx - x),
                point: [x, ly],
                normal: [0.0, 1.0],
                ds: dx,
                side: Side::Top,
                cell: (ny - 1) * nx + i,
                inner_cell: (ny - 2) * nx + i,
                h_normal: dy,
            });
        }
        for j in (0..ny).rev() {
            let y = (j as f64 + 0.5) * dy;
            samples.push(BoundarySample {
                s: 2.0 * lx + ly + (ly - y),
                point: [0.0, y],
                normal: [-1.0, 0.0],
                ds: dy,
                side: Side::Left,
                cell: j * nx,
                inner_cell: j * nx + 1,
                h_normal: dx,
            });
        }
        Ok(Self {
            spec,
            dx,
            dy,
            boundary: BoundaryParam { samples, perimeter: 2.0 * (lx + ly) },
        })
    }

    #[inline]
    pub fn nx(&self) -> usize {
        self.spec.nx
    }

    #[inline]
    pub fn ny(&self) -> usize {
        self.spec.ny
    }

    #[inline]
    pub fn ncells(&self) -> usize {
        self.spec.nx * self.spec.ny
    }

    /// Number of boundary samples, `2 (nx + ny)`.
    #[inline]
    pub fn m(&self) -> usize {
        self.boundary.samples.len()
    }

    #[inline]
    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }

    #[inline]
    pub fn cell(&self, i: usize, j: usize) -> usize {
        j * self.spec.nx + i
    }

    pub fn cell_center(&self, i: usize, j: usize) -> [f64; 2] {
        [(i as f64 + 0.5) * self.dx, (j as f64 + 0.5) * self.dy]
    }

    /// Index of the boundary sample on `side` at position `along`
    /// (cell column for horizontal edges, cell row for vertical ones).
    pub fn boundary_index(&self, side: Side, along: usize) -> usize {
        let (nx, ny) = (self.spec.nx, self.spec.ny);
        match side {
            Side::Bottom => along,
            Side::Right => nx + along,
            Side::Top => nx + ny + (nx - 1 - along),
            Side::Left => 2 * nx + ny + (ny - 1 - along),
        }
    }

    pub fn west(&self, i: usize, j: usize) -> Neighbor {
        if i == 0 {
            Neighbor::Boundary(self.boundary_index(Side::Left, j))
        } else {
            Neighbor::Cell(self.cell(i - 1, j))
        }
    }

    pub fn east(&self, i: usize, j: usize) -> Neighbor {
        if i + 1 == self.spec.nx {
            Neighbor::Boundary(self.boundary_index(Side::Right, j))
        } else {
            Neighbor::Cell(self.cell(i + 1, j))
        }
    }

    pub fn south(&self, i: usize, j: usize) -> Neighbor {
        if j == 0 {
            Neighbor::Boundary(self.boundary_index(Side::Bottom, i))
        } else {
            Neighbor::Cell(self.cell(i, j - 1))
        }
    }

    pub fn north(&self, i: usize, j: usize) -> Neighbor {
        if j + 1 == self.spec.ny {
            Neighbor::Boundary(self.boundary_index(Side::Top, i))
        } else {
            Neighbor::Cell(self.cell(i, j + 1))
        }
    }

    /// The four neighbours of cell `(i, j)` paired with the squared spacing
    /// in that direction: west, east, south, north.
    pub fn neighbors(&self, i: usize, j: usize) -> [(Neighbor, f64); 4] {
        let (hx2, hy2) = (self.dx * self.dx, self.dy * self.dy);
        [
            (self.west(i, j), hx2),
            (self.east(i, j), hx2),
            (self.south(i, j), hy2),
            (self.north(i, j), hy2),
        ]
    }

    // MAC face indexing into the flat `FaceField` storage.

    #[inline]
    pub fn n_ufaces(&self) -> usize {
        (self.spec.nx + 1) * self.spec.ny
    }

    #[inline]
    pub fn n_vfaces(&self) -> usize {
        self.spec.nx * (self.spec.ny + 1)
    }

    /// x-face at `x = i dx`, row `j`; `i` in `0..=nx`.
    #[inline]
    pub fn uface(&self, i: usize, j: usize) -> usize {
        j * (self.spec.nx + 1) + i
    }

    /// y-face at `y = j dy`, column `i`; `j` in `0..=ny`.
    #[inline]
    pub fn vface(&self, i: usize, j: usize) -> usize {
        self.n_ufaces() + j * self.spec.nx + i
    }

    /// Whether a flat face index lies on the domain boundary.
    pub fn is_boundary_face(&self, f: usize) -> bool {
        let nx = self.spec.nx;
        if f < self.n_ufaces() {
            let i = f % (nx + 1);
            i == 0 || i == nx
        } else {
            let j = (f - self.n_ufaces()) / nx;
            j == 0 || j == self.spec.ny
        }
    }

    /// Flat indices of the interior faces (the velocity unknowns).
    pub fn interior_faces(&self) -> Vec<usize> {
        (0..self.n_ufaces() + self.n_vfaces())
            .filter(|&f| !self.is_boundary_face(f))
            .collect()
    }

    /// Location of a face midpoint.
    pub fn face_center(&self, f: usize) -> [f64; 2] {
        let nx = self.spec.nx;
        if f < self.n_ufaces() {
            let (i, j) = (f % (nx + 1), f / (nx + 1));
            [i as f64 * self.dx, (j as f64 + 0.5) * self.dy]
        } else {
            let g = f - self.n_ufaces();
            let (i, j) = (g % nx, g / nx);
            [(i as f64 + 0.5) * self.dx, j as f64 * self.dy]
        }
    }

    /// Trapezoid weight of time level `n` (times `dt`).
    pub fn time_weight(&self, n: usize) -> f64 {
        if n == 0 || n == self.spec.nsteps {
            0.5 * self.spec.dt
        } else {
            self.spec.dt
        }
    }
}
