//! Direct solvers for the viscous Helmholtz problem and the pressure
//! Poisson problem, factored once per grid and time step.

use crate::error::Result;
use crate::grid::{stencil, BandedCholesky, FaceField, Grid, Neighbor, ScalarField};

const NONE: usize = usize::MAX;

#[derive(Debug, Clone)]
pub struct Solvers {
    /// For each flat face: local index in its Helmholtz system, or `NONE`.
    local: Vec<usize>,
    is_v: Vec<bool>,
    helm_u: BandedCholesky,
    helm_v: BandedCholesky,
    poisson: BandedCholesky,
}

impl Solvers {
    /// Factor `I - dt ν Δ_h` (no-slip) and the pinned Neumann Laplacian.
    pub fn new(grid: &Grid) -> Result<Self> {
        let (nx, ny) = (grid.nx(), grid.ny());
        let nf = grid.n_ufaces() + grid.n_vfaces();
        let mut local = vec![NONE; nf];
        let mut is_v = vec![false; nf];
        for j in 0..ny {
            for i in 1..nx {
                local[grid.uface(i, j)] = j * (nx - 1) + (i - 1);
            }
        }
        for j in 1..ny {
            for i in 0..nx {
                let f = grid.vface(i, j);
                local[f] = (j - 1) * nx + i;
                is_v[f] = true;
            }
        }
        let a = grid.spec.dt * grid.spec.nu;
        let (mut eu, mut ev) = (vec![], vec![]);
        for f in 0..nf {
            if local[f] != NONE {
                let e = if is_v[f] { &mut ev } else { &mut eu };
                e.push((local[f], local[f], 1.0));
            }
        }
        stencil::visit_face_laplacian(grid, |o, k, c| {
            if local[k] == NONE || local[k] > local[o] {
                return;
            }
            let e = if is_v[o] { &mut ev } else { &mut eu };
            e.push((local[o], local[k], -a * c));
        });
        let helm_u = BandedCholesky::factor((nx - 1) * ny, nx - 1, eu)?;
        let helm_v = BandedCholesky::factor(nx * (ny - 1), nx, ev)?;

        let mut ep = vec![(0, 0, 1.0)];
        for j in 0..ny {
            for i in 0..nx {
                let c = grid.cell(i, j);
                if c == 0 {
                    continue;
                }
                for (nb, h2) in grid.neighbors(i, j) {
                    if let Neighbor::Cell(k) = nb {
                        ep.push((c, c, 1.0 / h2));
                        if k < c && k != 0 {
                            ep.push((c, k, -1.0 / h2));
                        }
                    }
                }
            }
        }
        let poisson = BandedCholesky::factor(grid.ncells(), nx, ep)?;
        Ok(Self { local, is_v, helm_u, helm_v, poisson })
    }

    /// Solve `(I - dt ν Δ_h) x = rhs` on interior faces; boundary faces of
    /// the result are zero. The operator is symmetric, so this is also its
    /// own transpose.
    pub fn helmholtz(&self, rhs: &FaceField) -> FaceField {
        let mut bu = vec![0.0; self.helm_u.dim()];
        let mut bv = vec![0.0; self.helm_v.dim()];
        for (f, &l) in self.local.iter().enumerate() {
            if l != NONE {
                if self.is_v[f] {
                    bv[l] = rhs.data[f];
                } else {
                    bu[l] = rhs.data[f];
                }
            }
        }
        self.helm_u.solve_in_place(&mut bu);
        self.helm_v.solve_in_place(&mut bv);
        let mut out = FaceField { nx: rhs.nx, ny: rhs.ny, data: vec![0.0; rhs.data.len()] };
        for (f, &l) in self.local.iter().enumerate() {
            if l != NONE {
                out.data[f] = if self.is_v[f] { bv[l] } else { bu[l] };
            }
        }
        out
    }

    /// Mean-zero `φ` with `D G φ = D w` (boundary entries of `w` ignored).
    pub fn potential(&self, grid: &Grid, w: &FaceField) -> ScalarField {
        let mut wi = w.clone();
        wi.zero_boundary(grid);
        let div = stencil::divergence(grid, &wi);
        let mut b: Vec<f64> = div.values().map(|v| -v).collect();
        b[0] = 0.0;
        self.poisson.solve_in_place(&mut b);
        let mut phi = ScalarField { nx: grid.nx(), ny: grid.ny(), data: b.into_iter().map(|v| [v]).collect() };
        phi.subtract_mean();
        phi
    }

    /// Orthogonal projection `P = I - G (DG)⁻¹ D` onto discretely
    /// divergence-free interior-face fields. Returns `(P w, φ)`.
    pub fn project(&self, grid: &Grid, w: &FaceField) -> (FaceField, ScalarField) {
        let phi = self.potential(grid, w);
        let mut out = w.clone();
        out.zero_boundary(grid);
        out.axpy(-1.0, &stencil::gradient(grid, &phi));
        (out, phi)
    }
}
