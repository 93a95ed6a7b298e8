use super::Grid;
use crate::error::{Error, Result};

/// Cell-centered field with `C` components per cell, row-major (`j * nx + i`).
#[derive(Debug, Clone, PartialEq)]
pub struct CellField<const C: usize> {
    pub nx: usize,
    pub ny: usize,
    pub data: Vec<[f64; C]>,
}

pub type ScalarField = CellField<1>;
pub type VectorField3 = CellField<3>;

/// Values of a `C`-component quantity at the boundary samples.
pub type Trace<const C: usize> = Vec<[f64; C]>;

/// How the value outside a boundary cell is obtained.
#[derive(Debug, Clone, Copy)]
pub enum Boundary<'a, const C: usize> {
    /// Trace at the face midpoint; ghost value `2 h - f_cell`.
    Dirichlet(&'a [[f64; C]]),
    /// Ghost-cell values given directly, one per boundary sample.
    Ghost(&'a [[f64; C]]),
}

impl<const C: usize> Boundary<'_, C> {
    #[inline]
    pub fn ghost(&self, k: usize, inside: &[f64; C]) -> [f64; C] {
        match self {
            Boundary::Dirichlet(h) => std::array::from_fn(|c| 2.0 * h[k][c] - inside[c]),
            Boundary::Ghost(g) => g[k],
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Boundary::Dirichlet(h) | Boundary::Ghost(h) => h.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl<const C: usize> CellField<C> {
    pub fn zeros(grid: &Grid) -> Self {
        Self { nx: grid.nx(), ny: grid.ny(), data: vec![[0.0; C]; grid.ncells()] }
    }

    pub fn constant(grid: &Grid, value: [f64; C]) -> Self {
        Self { nx: grid.nx(), ny: grid.ny(), data: vec![value; grid.ncells()] }
    }

    /// Sample `f` at cell centers.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> [f64; C]) -> Self {
        let mut data = Vec::with_capacity(grid.ncells());
        for j in 0..grid.ny() {
            for i in 0..grid.nx() {
                let [x, y] = grid.cell_center(i, j);
                data.push(f(x, y));
            }
        }
        Self { nx: grid.nx(), ny: grid.ny(), data }
    }

    pub fn check_shape(&self, grid: &Grid) -> Result<()> {
        if self.nx != grid.nx() || self.ny != grid.ny() || self.data.len() != grid.ncells() {
            return Err(Error::ShapeMismatch(format!(
                "cell field {}x{} ({} values) on a {}x{} grid",
                self.nx,
                self.ny,
                self.data.len(),
                grid.nx(),
                grid.ny()
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> &[f64; C] {
        &self.data[j * self.nx + i]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.iter().all(|x| x.is_finite()))
    }

    /// Euclidean inner product over all cells and components.
    pub fn dot(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>())
            .sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().flat_map(|v| v.iter()).fold(0.0f64, |m, x| m.max(x.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }

    /// `self += a * other`
    pub fn axpy(&mut self, a: f64, other: &Self) {
        for (s, o) in self.data.iter_mut().zip(&other.data) {
            for c in 0..C {
                s[c] += a * o[c];
            }
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| v.iter_mut().for_each(|x| *x *= a));
        out
    }

    /// Sum of squares weighted by the cell area.
    pub fn norm_l2_sq(&self, grid: &Grid) -> f64 {
        self.dot(self) * grid.cell_area()
    }
}

impl ScalarField {
    pub fn mean(&self) -> f64 {
        self.data.iter().map(|v| v[0]).sum::<f64>() / self.data.len() as f64
    }

    pub fn subtract_mean(&mut self) {
        let m = self.mean();
        self.data.iter_mut().for_each(|v| v[0] -= m);
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.data.iter().map(|v| v[0])
    }
}

/// Face-centered (MAC) velocity: x-faces `(nx + 1) * ny` first, then y-faces
/// `nx * (ny + 1)`, in one flat vector. See [`Grid::uface`] / [`Grid::vface`].
#[derive(Debug, Clone, PartialEq)]
pub struct FaceField {
    pub nx: usize,
    pub ny: usize,
    pub data: Vec<f64>,
}

impl FaceField {
    pub fn zeros(grid: &Grid) -> Self {
        Self { nx: grid.nx(), ny: grid.ny(), data: vec![0.0; grid.n_ufaces() + grid.n_vfaces()] }
    }

    /// Sample the normal component of `f` at each face midpoint.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> [f64; 2]) -> Self {
        let mut out = Self::zeros(grid);
        let nu = grid.n_ufaces();
        for (k, v) in out.data.iter_mut().enumerate() {
            let [x, y] = grid.face_center(k);
            *v = if k < nu { f(x, y)[0] } else { f(x, y)[1] };
        }
        out
    }

    /// Discrete curl `(∂y ψ, -∂x ψ)` of a stream function sampled at the
    /// grid nodes. Divergence-free to rounding; zero normal velocity on the
    /// boundary when `ψ` vanishes there.
    pub fn from_stream_function(grid: &Grid, psi: impl Fn(f64, f64) -> f64) -> Self {
        let mut out = Self::zeros(grid);
        let node = |i: usize, j: usize| psi(i as f64 * grid.dx, j as f64 * grid.dy);
        for j in 0..grid.ny() {
            for i in 0..=grid.nx() {
                out.data[grid.uface(i, j)] = (node(i, j + 1) - node(i, j)) / grid.dy;
            }
        }
        for j in 0..=grid.ny() {
            for i in 0..grid.nx() {
                out.data[grid.vface(i, j)] = -(node(i + 1, j) - node(i, j)) / grid.dx;
            }
        }
        out
    }

    pub fn check_shape(&self, grid: &Grid) -> Result<()> {
        if self.nx != grid.nx()
            || self.ny != grid.ny()
            || self.data.len() != grid.n_ufaces() + grid.n_vfaces()
        {
            return Err(Error::ShapeMismatch(format!(
                "face field {}x{} ({} values) on a {}x{} grid",
                self.nx,
                self.ny,
                self.data.len(),
                grid.nx(),
                grid.ny()
            )));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub fn axpy(&mut self, a: f64, other: &Self) {
        for (s, o) in self.data.iter_mut().zip(&other.data) {
            *s += a * o;
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self { nx: self.nx, ny: self.ny, data: self.data.iter().map(|x| a * x).collect() }
    }

    pub fn zero_boundary(&mut self, grid: &Grid) {
        for (f, v) in self.data.iter_mut().enumerate() {
            if grid.is_boundary_face(f) {
                *v = 0.0;
            }
        }
    }

    pub fn boundary_max_abs(&self, grid: &Grid) -> f64 {
        self.data
            .iter()
            .enumerate()
            .filter(|(f, _)| grid.is_boundary_face(*f))
            .fold(0.0f64, |m, (_, x)| m.max(x.abs()))
    }

    /// `∫ |u|^2` by midpoint quadrature over the face control volumes.
    pub fn norm_l2_sq(&self, grid: &Grid) -> f64 {
        self.dot(self) * grid.cell_area()
    }
}
