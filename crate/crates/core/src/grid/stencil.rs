//! Finite-difference stencils on the MAC / cell-centered layout.
//!
//! The bilinear and linear operators used inside the time step are written
//! as term visitors, so the forward map, its tangent and its transpose are
//! all generated from one enumeration of stencil entries.

use super::{Boundary, CellField, FaceField, Grid, Neighbor, ScalarField};

/// Discretization of the advective derivative `(u · ∇) f`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AdvectionScheme {
    /// Second-order centered differences.
    #[default]
    Centered,
    /// First-order upwind; forward runs only.
    Upwind,
}

/// Discrete divergence at cell centers from all stored face values.
pub fn divergence(grid: &Grid, u: &FaceField) -> ScalarField {
    let mut out = ScalarField::zeros(grid);
    for j in 0..grid.ny() {
        for i in 0..grid.nx() {
            let ux = (u.data[grid.uface(i + 1, j)] - u.data[grid.uface(i, j)]) / grid.dx;
            let vy = (u.data[grid.vface(i, j + 1)] - u.data[grid.vface(i, j)]) / grid.dy;
            out.data[grid.cell(i, j)][0] = ux + vy;
        }
    }
    out
}

/// Discrete gradient on interior faces; boundary faces are left at zero.
/// This is minus the transpose of [`divergence`] restricted to interior faces.
pub fn gradient(grid: &Grid, p: &ScalarField) -> FaceField {
    let mut out = FaceField::zeros(grid);
    for j in 0..grid.ny() {
        for i in 1..grid.nx() {
            out.data[grid.uface(i, j)] = (p.data[grid.cell(i, j)][0] - p.data[grid.cell(i - 1, j)][0]) / grid.dx;
        }
    }
    for j in 1..grid.ny() {
        for i in 0..grid.nx() {
            out.data[grid.vface(i, j)] = (p.data[grid.cell(i, j)][0] - p.data[grid.cell(i, j - 1)][0]) / grid.dy;
        }
    }
    out
}

/// Five-point Laplacian with homogeneous Neumann data: the pressure operator.
pub fn neumann_laplacian(grid: &Grid, p: &ScalarField) -> ScalarField {
    let mut out = ScalarField::zeros(grid);
    for j in 0..grid.ny() {
        for i in 0..grid.nx() {
            let c = p.at(i, j)[0];
            let mut acc = 0.0;
            for (nb, h2) in grid.neighbors(i, j) {
                if let Neighbor::Cell(k) = nb {
                    acc += (p.data[k][0] - c) / h2;
                }
            }
            out.data[grid.cell(i, j)][0] = acc;
        }
    }
    out
}

/// Five-point Laplacian of a cell field; values outside come from `bnd`.
pub fn laplacian_cells<const C: usize>(grid: &Grid, f: &CellField<C>, bnd: Boundary<'_, C>) -> CellField<C> {
    let mut out = CellField::<C>::zeros(grid);
    for j in 0..grid.ny() {
        for i in 0..grid.nx() {
            let c = f.at(i, j);
            let mut acc = [0.0; C];
            for (nb, h2) in grid.neighbors(i, j) {
                let val = match nb {
                    Neighbor::Cell(k) => f.data[k],
                    Neighbor::Boundary(k) => bnd.ghost(k, c),
                };
                for q in 0..C {
                    acc[q] += (val[q] - c[q]) / h2;
                }
            }
            out.data[grid.cell(i, j)] = acc;
        }
    }
    out
}

/// Linear terms `(out, input, coef)` of the no-slip vector Laplacian on the
/// interior faces. Tangential walls use the ghost `-u` (zero wall value);
/// boundary normal faces enter as stored values.
pub fn visit_face_laplacian(grid: &Grid, mut f: impl FnMut(usize, usize, f64)) {
    let (nx, ny) = (grid.nx(), grid.ny());
    let (ix2, iy2) = (1.0 / (grid.dx * grid.dx), 1.0 / (grid.dy * grid.dy));
    for j in 0..ny {
        for i in 1..nx {
            let o = grid.uface(i, j);
            f(o, grid.uface(i - 1, j), ix2);
            f(o, grid.uface(i + 1, j), ix2);
            f(o, o, -2.0 * ix2 - 2.0 * iy2);
            if j > 0 {
                f(o, grid.uface(i, j - 1), iy2);
            } else {
                f(o, o, -iy2);
            }
            if j + 1 < ny {
                f(o, grid.uface(i, j + 1), iy2);
            } else {
                f(o, o, -iy2);
            }
        }
    }
    for j in 1..ny {
        for i in 0..nx {
            let o = grid.vface(i, j);
            f(o, grid.vface(i, j - 1), iy2);
            f(o, grid.vface(i, j + 1), iy2);
            f(o, o, -2.0 * ix2 - 2.0 * iy2);
            if i > 0 {
                f(o, grid.vface(i - 1, j), ix2);
            } else {
                f(o, o, -ix2);
            }
            if i + 1 < nx {
                f(o, grid.vface(i + 1, j), ix2);
            } else {
                f(o, o, -ix2);
            }
        }
    }
}

/// No-slip vector Laplacian; boundary-face outputs are zero.
pub fn laplacian_faces(grid: &Grid, u: &FaceField) -> FaceField {
    let mut out = FaceField::zeros(grid);
    visit_face_laplacian(grid, |o, k, c| out.data[o] += c * u.data[k]);
    out
}

/// Bilinear terms `(out, a_index, b_index, coef)` of the centered momentum
/// advection `(a · ∇) b` on interior faces, with no-slip ghosts for `b`.
pub fn visit_velocity_advection(grid: &Grid, mut f: impl FnMut(usize, usize, usize, f64)) {
    let (nx, ny) = (grid.nx(), grid.ny());
    let (cx, cy) = (0.5 / grid.dx, 0.5 / grid.dy);
    for j in 0..ny {
        for i in 1..nx {
            let o = grid.uface(i, j);
            // a_u ∂x b_u
            f(o, o, grid.uface(i + 1, j), cx);
            f(o, o, grid.uface(i - 1, j), -cx);
            // (avg a_v) ∂y b_u, ghost -b_u beyond the walls
            let up = if j + 1 < ny { (grid.uface(i, j + 1), cy) } else { (o, -cy) };
            let dn = if j > 0 { (grid.uface(i, j - 1), -cy) } else { (o, cy) };
            for a in [grid.vface(i - 1, j), grid.vface(i, j), grid.vface(i - 1, j + 1), grid.vface(i, j + 1)] {
                f(o, a, up.0, 0.25 * up.1);
                f(o, a, dn.0, 0.25 * dn.1);
            }
        }
    }
    for j in 1..ny {
        for i in 0..nx {
            let o = grid.vface(i, j);
            let right = if i + 1 < nx { (grid.vface(i + 1, j), cx) } else { (o, -cx) };
            let left = if i > 0 { (grid.vface(i - 1, j), -cx) } else { (o, cx) };
            for a in [grid.uface(i, j - 1), grid.uface(i + 1, j - 1), grid.uface(i, j), grid.uface(i + 1, j)] {
                f(o, a, right.0, 0.25 * right.1);
                f(o, a, left.0, 0.25 * left.1);
            }
            f(o, o, grid.vface(i, j + 1), cy);
            f(o, o, grid.vface(i, j - 1), -cy);
        }
    }
}

/// Momentum advection `(a · ∇) b` on interior faces.
pub fn advect_velocity(grid: &Grid, a: &FaceField, b: &FaceField, scheme: AdvectionScheme) -> FaceField {
    let mut out = FaceField::zeros(grid);
    match scheme {
        AdvectionScheme::Centered => {
            visit_velocity_advection(grid, |o, ia, ib, c| out.data[o] += c * a.data[ia] * b.data[ib]);
        }
        AdvectionScheme::Upwind => upwind_velocity(grid, a, b, &mut out),
    }
    out
}

fn upwind_velocity(grid: &Grid, a: &FaceField, b: &FaceField, out: &mut FaceField) {
    let (nx, ny) = (grid.nx(), grid.ny());
    let (dx, dy) = (grid.dx, grid.dy);
    let up = |vel: f64, lo: f64, mid: f64, hi: f64, h: f64| {
        if vel > 0.0 {
            vel * (mid - lo) / h
        } else {
            vel * (hi - mid) / h
        }
    };
    for j in 0..ny {
        for i in 1..nx {
            let o = grid.uface(i, j);
            let mid = b.data[o];
            let vbar = 0.25
                * (a.data[grid.vface(i - 1, j)]
                    + a.data[grid.vface(i, j)]
                    + a.data[grid.vface(i - 1, j + 1)]
                    + a.data[grid.vface(i, j + 1)]);
            let south = if j > 0 { b.data[grid.uface(i, j - 1)] } else { -mid };
            let north = if j + 1 < ny { b.data[grid.uface(i, j + 1)] } else { -mid };
            out.data[o] = up(a.data[o], b.data[grid.uface(i - 1, j)], mid, b.data[grid.uface(i + 1, j)], dx)
                + up(vbar, south, mid, north, dy);
        }
    }
    for j in 1..ny {
        for i in 0..nx {
            let o = grid.vface(i, j);
            let mid = b.data[o];
            let ubar = 0.25
                * (a.data[grid.uface(i, j - 1)]
                    + a.data[grid.uface(i + 1, j - 1)]
                    + a.data[grid.uface(i, j)]
                    + a.data[grid.uface(i + 1, j)]);
            let west = if i > 0 { b.data[grid.vface(i - 1, j)] } else { -mid };
            let east = if i + 1 < nx { b.data[grid.vface(i + 1, j)] } else { -mid };
            out.data[o] = up(ubar, west, mid, east, dx)
                + up(a.data[o], b.data[grid.vface(i, j - 1)], mid, b.data[grid.vface(i, j + 1)], dy);
        }
    }
}

/// Advective derivative `(u · ∇) f` of a cell field.
///
/// The centered form averages the two face fluxes in each direction:
/// `½ [u_w (f_c - f_W) + u_e (f_E - f_c)] / dx + (same in y)`. Values beyond
/// the boundary come from `bnd` and only matter where the boundary normal
/// velocity is nonzero.
pub fn advect_cells<const C: usize>(
    grid: &Grid,
    u: &FaceField,
    f: &CellField<C>,
    bnd: Boundary<'_, C>,
    scheme: AdvectionScheme,
) -> CellField<C> {
    let mut out = CellField::<C>::zeros(grid);
    for j in 0..grid.ny() {
        for i in 0..grid.nx() {
            let c = f.at(i, j);
            let val = |nb: Neighbor| match nb {
                Neighbor::Cell(k) => f.data[k],
                Neighbor::Boundary(k) => bnd.ghost(k, c),
            };
            let (w, e) = (val(grid.west(i, j)), val(grid.east(i, j)));
            let (s, n) = (val(grid.south(i, j)), val(grid.north(i, j)));
            let (uw, ue) = (u.data[grid.uface(i, j)], u.data[grid.uface(i + 1, j)]);
            let (vs, vn) = (u.data[grid.vface(i, j)], u.data[grid.vface(i, j + 1)]);
            let mut acc = [0.0; C];
            for q in 0..C {
                acc[q] = match scheme {
                    AdvectionScheme::Centered => {
                        0.5 * (uw * (c[q] - w[q]) + ue * (e[q] - c[q])) / grid.dx
                            + 0.5 * (vs * (c[q] - s[q]) + vn * (n[q] - c[q])) / grid.dy
                    }
                    AdvectionScheme::Upwind => {
                        let ub = 0.5 * (uw + ue);
                        let vb = 0.5 * (vs + vn);
                        let ax = if ub > 0.0 { c[q] - w[q] } else { e[q] - c[q] };
                        let ay = if vb > 0.0 { c[q] - s[q] } else { n[q] - c[q] };
                        ub * ax / grid.dx + vb * ay / grid.dy
                    }
                };
            }
            out.data[grid.cell(i, j)] = acc;
        }
    }
    out
}
