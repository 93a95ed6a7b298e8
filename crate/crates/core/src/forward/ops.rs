//! Step primitives shared by the forward, tangent and adjoint sweeps.

use crate::grid::{Boundary, CellField, FaceField, Grid, Neighbor, ScalarField, VectorField3};
use crate::state::dot3;

/// Terms `(out_cell, face, in_cell, coef)` of the centered cell advection
/// `½ [u_w (f_c - f_W) + u_e (f_E - f_c)] / dx + (y)`, interior faces only
/// (boundary faces carry zero velocity).
///
/// The same enumeration gives the elastic force: the force on face `f` is
/// `-λ Σ coef · L[out] · d[in]`, the transpose of `u ↦ A_u d` against `L`.
pub fn visit_cell_advection(grid: &Grid, mut f: impl FnMut(usize, usize, usize, f64)) {
    let (nx, ny) = (grid.nx(), grid.ny());
    let cx = 0.5 / grid.dx;
    for j in 0..ny {
        for i in 1..nx {
            let face = grid.uface(i, j);
            let (a, b) = (grid.cell(i - 1, j), grid.cell(i, j));
            f(b, face, b, cx);
            f(b, face, a, -cx);
            f(a, face, b, cx);
            f(a, face, a, -cx);
        }
    }
    let cy = 0.5 / grid.dy;
    for j in 1..ny {
        for i in 0..nx {
            let face = grid.vface(i, j);
            let (a, b) = (grid.cell(i, j - 1), grid.cell(i, j));
            f(b, face, b, cy);
            f(b, face, a, -cy);
            f(a, face, b, cy);
            f(a, face, a, -cy);
        }
    }
}

/// `A_u d` through [`visit_cell_advection`].
pub fn advect_director(grid: &Grid, u: &FaceField, d: &VectorField3) -> VectorField3 {
    let mut out = VectorField3::zeros(grid);
    visit_cell_advection(grid, |o, face, i, c| {
        let s = c * u.data[face];
        for q in 0..3 {
            out.data[o][q] += s * d.data[i][q];
        }
    });
    out
}

/// `out += a · ∂/∂u ⟨L, A_u d⟩` on interior faces.
pub fn add_advection_u_transpose(grid: &Grid, l: &VectorField3, d: &VectorField3, a: f64, out: &mut FaceField) {
    visit_cell_advection(grid, |o, face, i, c| {
        out.data[face] += a * c * dot3(&l.data[o], &d.data[i]);
    });
}

/// `out += a · ∂/∂d ⟨L, A_u d⟩`, i.e. `a · A_uᵀ L`.
pub fn add_advection_d_transpose(grid: &Grid, u: &FaceField, l: &VectorField3, a: f64, out: &mut VectorField3) {
    visit_cell_advection(grid, |o, face, i, c| {
        let s = a * c * u.data[face];
        for q in 0..3 {
            out.data[i][q] += s * l.data[o][q];
        }
    });
}

/// Elastic force on interior faces, `-λ ∂/∂u ⟨L, A_u d⟩` with `L = Δ_h d`.
/// It equals `-λ div(∇d ⊙ ∇d)` up to a discrete gradient, which the
/// projection removes.
pub fn elastic_force(grid: &Grid, lambda: f64, d: &VectorField3, l: &VectorField3) -> FaceField {
    let mut out = FaceField::zeros(grid);
    add_advection_u_transpose(grid, l, d, -lambda, &mut out);
    out
}

/// Director Laplacian with Dirichlet trace `h` (linear ghost).
pub fn laplacian_d(grid: &Grid, d: &VectorField3, h: &[[f64; 3]]) -> VectorField3 {
    crate::grid::stencil::laplacian_cells(grid, d, Boundary::Dirichlet(h))
}

/// Transpose of `(d, h) ↦ Δ_h(d; h)` applied to `lbar`, accumulated.
pub fn laplacian_d_transpose(grid: &Grid, lbar: &VectorField3, dbar: &mut VectorField3, hbar: &mut [[f64; 3]]) {
    let zero = vec![[0.0; 3]; grid.m()];
    let sym = crate::grid::stencil::laplacian_cells(grid, lbar, Boundary::Dirichlet(&zero));
    dbar.axpy(1.0, &sym);
    for (k, b) in grid.boundary.samples.iter().enumerate() {
        let w = 2.0 / (b.h_normal * b.h_normal);
        for q in 0..3 {
            hbar[k][q] += w * lbar.data[b.cell][q];
        }
    }
}

/// Tangent of the edge coefficient `Λ(d; h)` along `(φ, ξ)`.
pub fn lambda_tangent(grid: &Grid, d: &VectorField3, h: &[[f64; 3]], phi: &VectorField3, xi: &[[f64; 3]]) -> ScalarField {
    edge_sq_tangent(grid, d, h, phi, xi, 1.0)
}

/// Tangent of [`crate::state::gradient_sq_density`].
pub fn gradient_sq_density_tangent(grid: &Grid, d: &VectorField3, h: &[[f64; 3]], phi: &VectorField3, xi: &[[f64; 3]]) -> ScalarField {
    edge_sq_tangent(grid, d, h, phi, xi, 2.0)
}

/// Tangent of `Σ_int ½|d_nb - d_c|²/h² + wb Σ_bdry |h_k - d_c|²/h²`.
fn edge_sq_tangent(grid: &Grid, d: &VectorField3, h: &[[f64; 3]], phi: &VectorField3, xi: &[[f64; 3]], wb: f64) -> ScalarField {
    let mut out = ScalarField::zeros(grid);
    for j in 0..grid.ny() {
        for i in 0..grid.nx() {
            let c = grid.cell(i, j);
            let mut acc = 0.0;
            for (nb, h2) in grid.neighbors(i, j) {
                acc += match nb {
                    Neighbor::Cell(k) => dot3(&sub3(&d.data[k], &d.data[c]), &sub3(&phi.data[k], &phi.data[c])) / h2,
                    Neighbor::Boundary(k) => 2.0 * wb * dot3(&sub3(&h[k], &d.data[c]), &sub3(&xi[k], &phi.data[c])) / h2,
                };
            }
            out.data[c][0] = acc;
        }
    }
    out
}

/// Transpose of the tangent map of `Λ(d; h)`: accumulates `lbar` into the
/// director and trace cotangents.
pub fn lambda_transpose(grid: &Grid, d: &VectorField3, h: &[[f64; 3]], lbar: &ScalarField, dbar: &mut VectorField3, hbar: &mut [[f64; 3]]) {
    for j in 0..grid.ny() {
        for i in 0..grid.nx() {
            let c = grid.cell(i, j);
            let s = lbar.data[c][0];
            if s == 0.0 {
                continue;
            }
            for (nb, h2) in grid.neighbors(i, j) {
                match nb {
                    Neighbor::Cell(k) => {
                        let diff = sub3(&d.data[k], &d.data[c]);
                        for q in 0..3 {
                            let v = s * diff[q] / h2;
                            dbar.data[k][q] += v;
                            dbar.data[c][q] -= v;
                        }
                    }
                    Neighbor::Boundary(k) => {
                        let diff = sub3(&h[k], &d.data[c]);
                        for q in 0..3 {
                            let v = 2.0 * s * diff[q] / h2;
                            hbar[k][q] += v;
                            dbar.data[c][q] -= v;
                        }
                    }
                }
            }
        }
    }
}

/// Tangent of `d ↦ d / |d|` at `raw`: `(I - d̂ d̂ᵀ) φ / |raw|`. Symmetric, so
/// it is also its own transpose.
pub fn renormalize_tangent(unit: &VectorField3, raw_norm: &[f64], phi: &VectorField3) -> VectorField3 {
    let mut out = phi.clone();
    for ((o, d), r) in out.data.iter_mut().zip(&unit.data).zip(raw_norm) {
        let s = dot3(o, d);
        for q in 0..3 {
            o[q] = (o[q] - s * d[q]) / r;
        }
    }
    out
}

/// Pointwise `s_c · f_c`.
pub fn scale_cells<const C: usize>(s: &ScalarField, f: &CellField<C>) -> CellField<C> {
    let mut out = f.clone();
    for (o, k) in out.data.iter_mut().zip(&s.data) {
        o.iter_mut().for_each(|x| *x *= k[0]);
    }
    out
}

#[inline]
pub fn sub3(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::chart_inverse;
    use crate::grid::stencil::{advect_cells, AdvectionScheme};
    use crate::grid::{GridSpec, Trace};
    use crate::state::gradient_sq_coefficient;

    fn setup() -> (Grid, VectorField3, Trace<3>, FaceField) {
        let g = Grid::new(GridSpec { nx: 6, ny: 5, lx: 1.2, ..GridSpec::unit_square(6, 1e-4, 2) }).unwrap();
        let f = |x: f64, y: f64| chart_inverse([0.4 * (2.0 * x).sin() + 0.1 * y, 0.3 * (x * y + 1.0).cos()]);
        let d = VectorField3::from_fn(&g, f);
        let h: Trace<3> = g.boundary.samples.iter().map(|b| f(b.point[0], b.point[1])).collect();
        let mut u = FaceField::from_fn(&g, |x, y| [(3.0 * y).sin() + x, x * y - 0.2]);
        u.zero_boundary(&g);
        (g, d, h, u)
    }

    fn rand_cells(g: &Grid, seed: f64) -> VectorField3 {
        VectorField3::from_fn(g, |x, y| [(seed * x + 1.3 * y).sin(), (seed + x * y).cos(), (x - seed * y).sin()])
    }

    fn rand_trace(g: &Grid, seed: f64) -> Trace<3> {
        (0..g.m()).map(|k| [(seed * k as f64).sin(), (k as f64 + seed).cos(), (0.3 * k as f64 * seed).sin()]).collect()
    }

    fn tdot(a: &[[f64; 3]], b: &[[f64; 3]]) -> f64 {
        a.iter().zip(b).map(|(p, q)| dot3(p, q)).sum()
    }

    #[test]
    fn visitor_advection_matches_stencil() {
        let (g, d, h, u) = setup();
        let a = advect_director(&g, &u, &d);
        let b = advect_cells(&g, &u, &d, Boundary::Dirichlet(&h), AdvectionScheme::Centered);
        assert!(a.max_abs_diff(&b) < 1e-12);
    }

    #[test]
    fn advection_transposes() {
        let (g, d, _, u) = setup();
        let l = rand_cells(&g, 2.1);
        let lhs = l.dot(&advect_director(&g, &u, &d));
        let mut fu = FaceField::zeros(&g);
        add_advection_u_transpose(&g, &l, &d, 1.0, &mut fu);
        let mut fd = VectorField3::zeros(&g);
        add_advection_d_transpose(&g, &u, &l, 1.0, &mut fd);
        assert!((lhs - fu.dot(&u)).abs() < 1e-11 * lhs.abs().max(1.0));
        assert!((lhs - fd.dot(&d)).abs() < 1e-11 * lhs.abs().max(1.0));
    }

    #[test]
    fn laplacian_transpose_dot_product() {
        let (g, _, _, _) = setup();
        let (phi, xi) = (rand_cells(&g, 0.7), rand_trace(&g, 1.9));
        let lbar = rand_cells(&g, 3.3);
        let lhs = lbar.dot(&laplacian_d(&g, &phi, &xi));
        let mut dbar = VectorField3::zeros(&g);
        let mut hbar = vec![[0.0; 3]; g.m()];
        laplacian_d_transpose(&g, &lbar, &mut dbar, &mut hbar);
        let rhs = dbar.dot(&phi) + tdot(&hbar, &xi);
        assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0), "{lhs} {rhs}");
    }

    #[test]
    fn lambda_tangent_and_transpose() {
        let (g, d, h, _) = setup();
        let (phi, xi) = (rand_cells(&g, 0.4), rand_trace(&g, 2.6));
        let eps = 1e-6;
        let mut dp = d.clone();
        dp.axpy(eps, &phi);
        let mut dm = d.clone();
        dm.axpy(-eps, &phi);
        let hp: Trace<3> = h.iter().zip(&xi).map(|(a, b)| std::array::from_fn(|q| a[q] + eps * b[q])).collect();
        let hm: Trace<3> = h.iter().zip(&xi).map(|(a, b)| std::array::from_fn(|q| a[q] - eps * b[q])).collect();
        let lp = gradient_sq_coefficient(&g, &dp, &hp);
        let lm = gradient_sq_coefficient(&g, &dm, &hm);
        let t = lambda_tangent(&g, &d, &h, &phi, &xi);
        for c in 0..g.ncells() {
            let fd = (lp.data[c][0] - lm.data[c][0]) / (2.0 * eps);
            assert!((fd - t.data[c][0]).abs() < 1e-5 * (1.0 + fd.abs()), "{fd} {}", t.data[c][0]);
        }
        let lbar = ScalarField::from_fn(&g, |x, y| [(5.0 * x * y).sin()]);
        let mut dbar = VectorField3::zeros(&g);
        let mut hbar = vec![[0.0; 3]; g.m()];
        lambda_transpose(&g, &d, &h, &lbar, &mut dbar, &mut hbar);
        let lhs = lbar.dot(&t);
        let rhs = dbar.dot(&phi) + tdot(&hbar, &xi);
        assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0));
    }

    #[test]
    fn renormalize_tangent_matches_difference() {
        let (g, d, _, _) = setup();
        let raw = d.scaled(1.3);
        let norms: Vec<f64> = raw.data.iter().map(crate::state::norm3).collect();
        let phi = rand_cells(&g, 1.1);
        let eps = 1e-6;
        let mut p = raw.clone();
        p.axpy(eps, &phi);
        let mut m = raw.clone();
        m.axpy(-eps, &phi);
        let (p, m) = (crate::state::renormalize_director(&p).unwrap(), crate::state::renormalize_director(&m).unwrap());
        let t = renormalize_tangent(&d, &norms, &phi);
        let mut fd = p;
        fd.axpy(-1.0, &m);
        let fd = fd.scaled(0.5 / eps);
        assert!(fd.max_abs_diff(&t) < 1e-8);
        let psi = rand_cells(&g, 2.7);
        let lhs = psi.dot(&t);
        let rhs = renormalize_tangent(&d, &norms, &psi).dot(&phi);
        assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0));
    }
}
