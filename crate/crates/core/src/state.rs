//! Flow state `(u, P, d)`, director boundary data, the sphere constraint and
//! the energy / concentration diagnostics.

use crate::error::{Error, Result};
use crate::grid::{stencil, Boundary, FaceField, Grid, Neighbor, ScalarField, Trace, VectorField3};

/// Tolerance on `| |d| - 1 |` for stored directors and boundary data.
pub const UNIT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    /// MAC velocity, zero on the boundary faces.
    pub u: FaceField,
    /// Mean-zero pressure.
    pub p: ScalarField,
    /// Unit director at cell centers.
    pub d: VectorField3,
    pub t: f64,
}

impl FlowState {
    pub fn new(grid: &Grid, u: FaceField, d: VectorField3, t: f64) -> Self {
        Self { u, p: ScalarField::zeros(grid), d, t }
    }
}

/// Director boundary data `h[j][n]`: one trace row per time level.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectorBC {
    rows: Vec<Trace<3>>,
}

impl DirectorBC {
    pub fn from_rows(rows: Vec<Trace<3>>) -> Self {
        Self { rows }
    }

    /// The same row at every one of the `nsteps + 1` time levels.
    pub fn constant(row: Trace<3>, nsteps: usize) -> Self {
        Self { rows: vec![row; nsteps + 1] }
    }

    /// Sample `f(x, y, t)` at the boundary face midpoints and time levels.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64, f64) -> [f64; 3]) -> Self {
        let rows = (0..=grid.spec.nsteps)
            .map(|n| {
                let t = n as f64 * grid.spec.dt;
                grid.boundary.samples.iter().map(|b| f(b.point[0], b.point[1], t)).collect()
            })
            .collect();
        Self { rows }
    }

    #[inline]
    pub fn row(&self, n: usize) -> &Trace<3> {
        &self.rows[n]
    }

    pub fn rows(&self) -> &[Trace<3>] {
        &self.rows
    }

    pub fn rows_mut(&mut self) -> &mut [Trace<3>] {
        &mut self.rows
    }

    pub fn m(&self) -> usize {
        self.rows.first().map_or(0, |r| r.len())
    }

    /// Number of stored time levels (`nsteps + 1`).
    pub fn levels(&self) -> usize {
        self.rows.len()
    }

    /// Unit norm, closed upper hemisphere and shape checks.
    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if self.rows.len() != grid.spec.nsteps + 1 {
            return Err(Error::InvalidControl(format!(
                "{} time levels, expected {}",
                self.rows.len(),
                grid.spec.nsteps + 1
            )));
        }
        for (n, row) in self.rows.iter().enumerate() {
            if row.len() != grid.m() {
                return Err(Error::InvalidControl(format!(
                    "level {n} has {} samples, expected {}",
                    row.len(),
                    grid.m()
                )));
            }
            for (j, h) in row.iter().enumerate() {
                let norm = norm3(h);
                if !norm.is_finite() || (norm - 1.0).abs() > UNIT_TOL {
                    return Err(Error::InvalidControl(format!("|h[{j}][{n}]| = {norm}")));
                }
                if h[2] < -1e-14 {
                    return Err(Error::InvalidControl(format!(
                        "h[{j}][{n}] = {h:?} leaves the upper hemisphere"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Compatibility with the initial director trace.
    pub fn check_compatible(&self, d0_trace: &[[f64; 3]]) -> Result<()> {
        let gap = max_trace_diff(&self.rows[0], d0_trace);
        if gap > UNIT_TOL {
            return Err(Error::InvalidControl(format!(
                "h(., 0) differs from the initial director trace by {gap:e}"
            )));
        }
        Ok(())
    }

    /// `∂t h` at level `n`: backward difference, forward at `n = 0`.
    pub fn time_derivative(&self, n: usize, dt: f64) -> Trace<3> {
        let (a, b) = if self.rows.len() < 2 {
            return vec![[0.0; 3]; self.m()];
        } else if n == 0 {
            (0, 1)
        } else {
            (n - 1, n)
        };
        self.rows[a]
            .iter()
            .zip(&self.rows[b])
            .map(|(p, q)| std::array::from_fn(|c| (q[c] - p[c]) / dt))
            .collect()
    }
}

pub fn max_trace_diff(a: &[[f64; 3]], b: &[[f64; 3]]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(p, q)| (0..3).map(move |c| (p[c] - q[c]).abs()))
        .fold(0.0, f64::max)
}

#[inline]
pub fn norm3(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

#[inline]
pub fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn dist_sq3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let (x, y, z) = (a[0] - b[0], a[1] - b[1], a[2] - b[2]);
    x * x + y * y + z * z
}

/// Pointwise projection `d / |d|` onto the sphere.
pub fn renormalize_director(d: &VectorField3) -> Result<VectorField3> {
    let mut out = d.clone();
    renormalize_in_place(&mut out)?;
    Ok(out)
}

pub fn renormalize_in_place(d: &mut VectorField3) -> Result<()> {
    for (cell, v) in d.data.iter_mut().enumerate() {
        let norm = norm3(v);
        if !(norm >= 0.5) {
            return Err(Error::DegenerateDirector { cell, norm });
        }
        v.iter_mut().for_each(|x| *x /= norm);
    }
    Ok(())
}

pub fn max_unit_defect(d: &VectorField3) -> f64 {
    d.data.iter().map(|v| (norm3(v) - 1.0).abs()).fold(0.0, f64::max)
}

/// Minimum of the third director component.
pub fn hemisphere_min(d: &VectorField3) -> f64 {
    d.data.iter().map(|v| v[2]).fold(f64::INFINITY, f64::min)
}

/// Edge-based `|∇d|²` coefficient of the harmonic-map term. The boundary
/// edges carry half the interior weight so that `d · (Δd + Λ d) = 0` holds
/// exactly for unit `d` and unit trace.
pub fn gradient_sq_coefficient(grid: &Grid, d: &VectorField3, trace: &[[f64; 3]]) -> ScalarField {
    let mut out = ScalarField::zeros(grid);
    for j in 0..grid.ny() {
        for i in 0..grid.nx() {
            let c = d.at(i, j);
            let mut acc = 0.0;
            for (nb, h2) in grid.neighbors(i, j) {
                acc += match nb {
                    Neighbor::Cell(k) => 0.5 * dist_sq3(&d.data[k], c) / h2,
                    Neighbor::Boundary(k) => dist_sq3(&trace[k], c) / h2,
                };
            }
            out.data[grid.cell(i, j)][0] = acc;
        }
    }
    out
}

/// Cell density of `|∇d|²` whose cell sum is twice the discrete Dirichlet
/// energy: interior edges split between their two cells, boundary edges
/// (half spacing) assigned to the boundary cell.
pub fn gradient_sq_density(grid: &Grid, d: &VectorField3, trace: &[[f64; 3]]) -> ScalarField {
    let mut out = ScalarField::zeros(grid);
    for j in 0..grid.ny() {
        for i in 0..grid.nx() {
            let c = d.at(i, j);
            let mut acc = 0.0;
            for (nb, h2) in grid.neighbors(i, j) {
                acc += match nb {
                    Neighbor::Cell(k) => 0.5 * dist_sq3(&d.data[k], c) / h2,
                    Neighbor::Boundary(k) => 2.0 * dist_sq3(&trace[k], c) / h2,
                };
            }
            out.data[grid.cell(i, j)][0] = acc;
        }
    }
    out
}

/// Tension field `Δd + Λ d` (the harmonic-map heat-flow right-hand side).
pub fn tension(grid: &Grid, d: &VectorField3, trace: &[[f64; 3]]) -> VectorField3 {
    let mut t = stencil::laplacian_cells(grid, d, Boundary::Dirichlet(trace));
    let lam = gradient_sq_coefficient(grid, d, trace);
    for ((tv, dv), l) in t.data.iter_mut().zip(&d.data).zip(&lam.data) {
        for c in 0..3 {
            tv[c] += l[0] * dv[c];
        }
    }
    t
}

/// One-sided second-order outward normal derivative of `d` at each boundary
/// sample, using the trace, the boundary cell and the next cell inward.
pub fn normal_derivative<const C: usize>(
    grid: &Grid,
    f: &crate::grid::CellField<C>,
    trace: &[[f64; C]],
) -> Trace<C> {
    grid.boundary
        .samples
        .iter()
        .enumerate()
        .map(|(k, b)| {
            let (d0, d1) = (f.data[b.cell], f.data[b.inner_cell]);
            std::array::from_fn(|c| (8.0 * trace[k][c] - 9.0 * d0[c] + d1[c]) / (3.0 * b.h_normal))
        })
        .collect()
}

/// Centered cell gradients `(∂x f, ∂y f)` with linear ghosts from the trace.
pub fn cell_gradients<const C: usize>(grid: &Grid, f: &crate::grid::CellField<C>, trace: &[[f64; C]]) -> Vec<[[f64; C]; 2]> {
    let bnd = Boundary::Dirichlet(trace);
    let mut out = vec![[[0.0; C]; 2]; grid.ncells()];
    for j in 0..grid.ny() {
        for i in 0..grid.nx() {
            let c = f.at(i, j);
            let val = |nb: Neighbor| match nb {
                Neighbor::Cell(k) => f.data[k],
                Neighbor::Boundary(k) => bnd.ghost(k, c),
            };
            let (w, e) = (val(grid.west(i, j)), val(grid.east(i, j)));
            let (s, n) = (val(grid.south(i, j)), val(grid.north(i, j)));
            out[grid.cell(i, j)] = [
                std::array::from_fn(|q| (e[q] - w[q]) / (2.0 * grid.dx)),
                std::array::from_fn(|q| (n[q] - s[q]) / (2.0 * grid.dy)),
            ];
        }
    }
    out
}

/// Face velocity averaged to cell centers.
pub fn cell_velocity(g: &Grid, u: &FaceField) -> crate::grid::CellField<2> {
    let mut out = crate::grid::CellField::<2>::zeros(g);
    for j in 0..g.ny() {
        for i in 0..g.nx() {
            out.data[g.cell(i, j)] = [
                0.5 * (u.data[g.uface(i, j)] + u.data[g.uface(i + 1, j)]),
                0.5 * (u.data[g.vface(i, j)] + u.data[g.vface(i, j + 1)]),
            ];
        }
    }
    out
}

/// Elastic stress `σ_ij = ∇_i d · ∇_j d` at cell centers.
pub fn elastic_stress(grid: &Grid, d: &VectorField3, trace: &[[f64; 3]]) -> Vec<[[f64; 2]; 2]> {
    cell_gradients(grid, d, trace)
        .into_iter()
        .map(|g| {
            let mut s = [[0.0; 2]; 2];
            for a in 0..2 {
                for b in 0..2 {
                    s[a][b] = dot3(&g[a], &g[b]);
                }
            }
            s
        })
        .collect()
}

/// Energy, dissipation and boundary flux of one state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyReport {
    /// `½ ∫ |u|²`
    pub kinetic: f64,
    /// `½ ∫ |∇d|²`
    pub elastic: f64,
    pub total: f64,
    /// `∫ |∇u|² + |Δd + |∇d|² d|²`
    pub dissipation: f64,
    /// `∫_Γ ⟨∂d/∂ν, ∂t h⟩`
    pub boundary_flux: f64,
}

/// `∫ |∇u|²` as the quadratic form of the no-slip Laplacian.
pub fn velocity_dissipation(grid: &Grid, u: &FaceField) -> f64 {
    -stencil::laplacian_faces(grid, u).dot(u) * grid.cell_area()
}

pub fn elastic_energy(grid: &Grid, d: &VectorField3, trace: &[[f64; 3]]) -> f64 {
    0.5 * gradient_sq_density(grid, d, trace).values().sum::<f64>() * grid.cell_area()
}

/// Energy report of `state` at time level `n` of `bc`.
pub fn energy(grid: &Grid, state: &FlowState, bc: &DirectorBC, n: usize) -> EnergyReport {
    let trace = bc.row(n);
    let kinetic = 0.5 * state.u.norm_l2_sq(grid);
    let elastic = elastic_energy(grid, &state.d, trace);
    let tau = tension(grid, &state.d, trace);
    let dissipation = velocity_dissipation(grid, &state.u) + tau.norm_l2_sq(grid);
    let dh = bc.time_derivative(n, grid.spec.dt);
    let dn = normal_derivative(grid, &state.d, trace);
    let boundary_flux = grid
        .boundary
        .samples
        .iter()
        .enumerate()
        .map(|(k, b)| dot3(&dn[k], &dh[k]) * b.ds)
        .sum();
    EnergyReport { kinetic, elastic, total: kinetic + elastic, dissipation, boundary_flux }
}

/// Per-cell density of `|u|² + |∇d|²`; sums (times the cell area) to
/// twice the total energy.
pub fn energy_density(grid: &Grid, u: &FaceField, d: &VectorField3, trace: &[[f64; 3]]) -> ScalarField {
    let mut dens = gradient_sq_density(grid, d, trace);
    for j in 0..grid.ny() {
        for i in 0..grid.nx() {
            let faces = [grid.uface(i, j), grid.uface(i + 1, j), grid.vface(i, j), grid.vface(i, j + 1)];
            let k: f64 = faces.iter().map(|&f| 0.5 * u.data[f] * u.data[f]).sum();
            dens.data[grid.cell(i, j)][0] += k;
        }
    }
    dens
}

/// Maximum over cell-centered balls of radius `r` of the windowed integral
/// of a nonnegative cell density.
pub fn windowed_max(grid: &Grid, density: &ScalarField, r: f64) -> f64 {
    let (nx, ny) = (grid.nx() as isize, grid.ny() as isize);
    let rx = (r / grid.dx).floor() as isize;
    let ry = (r / grid.dy).floor() as isize;
    let mut offsets = vec![];
    for dj in -ry.min(ny)..=ry.min(ny) {
        for di in -rx.min(nx)..=rx.min(nx) {
            let (ox, oy) = (di as f64 * grid.dx, dj as f64 * grid.dy);
            if ox * ox + oy * oy <= r * r * (1.0 + 1e-14) {
                offsets.push((di, dj));
            }
        }
    }
    let mut best = 0.0f64;
    for j in 0..ny {
        for i in 0..nx {
            let mut acc = 0.0;
            for &(di, dj) in &offsets {
                let (a, b) = (i + di, j + dj);
                if a >= 0 && a < nx && b >= 0 && b < ny {
                    acc += density.data[(b * nx + a) as usize][0];
                }
            }
            best = best.max(acc * grid.cell_area());
        }
    }
    best
}

/// `sup_x ∫_{Ω ∩ B_r(x)} (|u|² + |∇d|²)` over cell-centered `x`.
pub fn local_energy_max(grid: &Grid, state: &FlowState, trace: &[[f64; 3]], r: f64) -> f64 {
    windowed_max(grid, &energy_density(grid, &state.u, &state.d, trace), r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::chart_inverse;
    use crate::grid::GridSpec;

    fn grid(n: usize) -> Grid {
        Grid::new(GridSpec::unit_square(n, 1e-4, 4)).unwrap()
    }

    fn trace_of(g: &Grid, f: impl Fn(f64, f64) -> [f64; 3]) -> Trace<3> {
        g.boundary.samples.iter().map(|b| f(b.point[0], b.point[1])).collect()
    }

    #[test]
    fn renormalize_examples() {
        let g = grid(4);
        let d = VectorField3::constant(&g, [0.0, 0.0, 2.0]);
        let r = renormalize_director(&d).unwrap();
        assert!(r.data.iter().all(|v| *v == [0.0, 0.0, 1.0]));
        let unit = VectorField3::from_fn(&g, |x, y| chart_inverse([0.3 * x, -0.2 * y]));
        let again = renormalize_director(&unit).unwrap();
        assert!(again.max_abs_diff(&unit) < 1e-15);
        let mut bad = unit.clone();
        bad.data[5] = [0.0, 0.0, 0.1];
        assert_eq!(renormalize_director(&bad), Err(Error::DegenerateDirector { cell: 5, norm: 0.1 }));
    }

    #[test]
    fn tension_is_tangent() {
        let g = grid(8);
        let f = |x: f64, y: f64| chart_inverse([0.5 * (3.0 * x).sin(), 0.4 * (x * y + y)]);
        let d = VectorField3::from_fn(&g, f);
        let tr = trace_of(&g, f);
        let t = tension(&g, &d, &tr);
        for (tv, dv) in t.data.iter().zip(&d.data) {
            assert!(dot3(tv, dv).abs() < 1e-11 * (1.0 + norm3(tv)));
        }
    }

    #[test]
    fn stress_examples() {
        let g = grid(32);
        let c = VectorField3::constant(&g, [0.6, 0.0, 0.8]);
        let tr = vec![[0.6, 0.0, 0.8]; g.m()];
        assert!(elastic_stress(&g, &c, &tr).iter().all(|s| s.iter().flatten().all(|v| v.abs() < 1e-12)));
        let f = |x: f64, _y: f64| [x.sin(), x.cos(), 0.0];
        let d = VectorField3::from_fn(&g, f);
        let s = elastic_stress(&g, &d, &trace_of(&g, f));
        for v in &s {
            assert!((v[0][0] - 1.0).abs() < 2e-3, "{v:?}");
            assert!(v[0][1].abs() < 1e-12 && v[1][0].abs() < 1e-12 && v[1][1].abs() < 1e-12);
        }
        let f = |x: f64, y: f64| chart_inverse([0.4 * (2.0 * x + y).sin(), 0.3 * (x * y).cos()]);
        let s = elastic_stress(&g, &VectorField3::from_fn(&g, f), &trace_of(&g, f));
        assert!(s.iter().all(|v| v[0][1] == v[1][0]));
    }

    #[test]
    fn energy_examples() {
        let g = grid(8);
        let c = [0.0, 0.6, 0.8];
        let state = FlowState::new(&g, FaceField::zeros(&g), VectorField3::constant(&g, c), 0.0);
        let bc = DirectorBC::constant(vec![c; g.m()], g.spec.nsteps);
        let e = energy(&g, &state, &bc, 0);
        assert_eq!(e.total, 0.0);
        assert!(e.dissipation.abs() < 1e-20);
        assert_eq!(e.boundary_flux, 0.0);
        assert_eq!(e.total, e.kinetic + e.elastic);
    }

    #[test]
    fn elastic_energy_matches_direct_edge_sum() {
        // independent oracle: sum over edges, written without the density helper
        let g = grid(8);
        let f = |x: f64, y: f64| chart_inverse([0.2 + 0.3 * x, -0.1 + 0.5 * y]);
        let d = VectorField3::from_fn(&g, f);
        let tr = trace_of(&g, f);
        let (nx, ny, dx, dy) = (g.nx(), g.ny(), g.dx, g.dy);
        let mut oracle = 0.0;
        for j in 0..ny {
            for i in 0..nx - 1 {
                oracle += 0.5 * dist_sq3(d.at(i + 1, j), d.at(i, j)) / (dx * dx);
            }
        }
        for j in 0..ny - 1 {
            for i in 0..nx {
                oracle += 0.5 * dist_sq3(d.at(i, j + 1), d.at(i, j)) / (dy * dy);
            }
        }
        for b in &g.boundary.samples {
            let k = g.boundary.samples.iter().position(|c| c == b).unwrap();
            let h2 = b.h_normal * b.h_normal;
            oracle += dist_sq3(&tr[k], &d.data[b.cell]) / h2;
        }
        oracle *= dx * dy;
        let e = elastic_energy(&g, &d, &tr);
        assert!((e - oracle).abs() < 1e-14 * oracle.max(1.0), "{e} {oracle}");
    }

    #[test]
    fn local_energy_window_properties() {
        let g = grid(12);
        let f = |x: f64, y: f64| chart_inverse([0.6 * (2.0 * x).sin() * y, 0.4 * (3.0 * y).cos()]);
        let d = VectorField3::from_fn(&g, f);
        let tr = trace_of(&g, f);
        let mut u = FaceField::from_fn(&g, |x, y| [x * (1.0 - x) * (y - 0.5), 0.1 * y * (1.0 - y)]);
        u.zero_boundary(&g);
        let st = FlowState::new(&g, u, d, 0.0);
        let bc = DirectorBC::constant(tr.clone(), g.spec.nsteps);
        let e = energy(&g, &st, &bc, 0);
        let full = local_energy_max(&g, &st, &tr, 2.0);
        assert!((full - 2.0 * e.total).abs() < 1e-12 * e.total);
        let mut last = 0.0;
        for r in [0.05, 0.1, 0.2, 0.3, 0.7, 1.5] {
            let v = local_energy_max(&g, &st, &tr, r);
            assert!(v >= last);
            last = v;
        }
        let c = [0.0, 0.0, 1.0];
        let zero = FlowState::new(&g, FaceField::zeros(&g), VectorField3::constant(&g, c), 0.0);
        assert_eq!(local_energy_max(&g, &zero, &vec![c; g.m()], 0.3), 0.0);
    }

    #[test]
    fn hemisphere_examples() {
        let g = grid(4);
        assert_eq!(hemisphere_min(&VectorField3::constant(&g, [0.0, 0.0, 1.0])), 1.0);
        assert_eq!(hemisphere_min(&VectorField3::constant(&g, [1.0, 0.0, 0.0])), 0.0);
        assert_eq!(hemisphere_min(&VectorField3::constant(&g, [0.0, 0.0, -1.0])), -1.0);
    }

    #[test]
    fn bc_validation() {
        let g = grid(4);
        let good = DirectorBC::constant(vec![[0.0, 0.0, 1.0]; g.m()], g.spec.nsteps);
        assert!(good.validate(&g).is_ok());
        let mut bad = good.clone();
        bad.rows_mut()[2][3] = [0.0, 0.0, -1.0];
        assert!(bad.validate(&g).is_err());
        let mut off = good.clone();
        off.rows_mut()[1][0] = [0.0, 0.0, 1.1];
        assert!(off.validate(&g).is_err());
        assert!(good.check_compatible(&vec![[0.0, 0.0, 1.0]; g.m()]).is_ok());
        assert!(good.check_compatible(&vec![[1.0, 0.0, 0.0]; g.m()]).is_err());
    }
}
