//! Invariant checks on finished trajectories and the quadrature reports
//! for the interpolation and pressure estimates.

use std::fmt;

use crate::forward::{ops, Trajectory};
use crate::grid::{stencil, CellField, Grid, ScalarField};
use crate::state::{self, cell_gradients, cell_velocity, windowed_max};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    /// Hypothesis of the check not met by the inputs.
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantCheck {
    pub name: &'static str,
    pub status: CheckStatus,
    pub value: f64,
    pub tol: f64,
}

impl fmt::Display for InvariantCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self.status {
            CheckStatus::Pass => "PASS",
            CheckStatus::Fail => "FAIL",
            CheckStatus::NotApplicable => "N/A ",
        };
        write!(f, "{s} {:<14} value={:.3e} tol={:.1e}", self.name, self.value, self.tol)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantReport {
    pub checks: Vec<InvariantCheck>,
}

impl InvariantReport {
    /// No check failed (not-applicable checks do not count).
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }

    pub fn get(&self, name: &str) -> Option<&InvariantCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub const UNIT_NORM_TOL: f64 = 1e-12;
pub const DIVERGENCE_TOL: f64 = 1e-10;
pub const HEMISPHERE_TOL: f64 = 1e-8;
pub const ENERGY_TOL: f64 = 1e-10;

fn check(name: &'static str, value: f64, tol: f64, ok: bool) -> InvariantCheck {
    let status = if ok { CheckStatus::Pass } else { CheckStatus::Fail };
    InvariantCheck { name, status, value, tol }
}

/// Unit norm, divergence, hemisphere and energy-inequality checks.
///
/// The hemisphere check needs `d₀` and `h` in the closed upper hemisphere;
/// the energy check needs zero forcing and time-independent boundary data
/// (otherwise the balance has source terms). Unmet hypotheses give
/// [`CheckStatus::NotApplicable`].
pub fn invariant_suite(traj: &Trajectory) -> InvariantReport {
    let mut checks = vec![];
    let unit = traj.max_unit_defect();
    checks.push(check("unit_norm", unit, UNIT_NORM_TOL, unit <= UNIT_NORM_TOL));
    let div = traj.max_divergence();
    checks.push(check("divergence", div, DIVERGENCE_TOL, div <= DIVERGENCE_TOL));

    let d0_min = state::hemisphere_min(&traj.states[0].d);
    let h_min = traj.bc.rows().iter().flatten().map(|v| v[2]).fold(f64::INFINITY, f64::min);
    let hemi = traj.hemisphere_min();
    checks.push(if d0_min >= 0.0 && h_min >= 0.0 {
        check("hemisphere", hemi, HEMISPHERE_TOL, hemi >= -HEMISPHERE_TOL)
    } else {
        InvariantCheck { name: "hemisphere", status: CheckStatus::NotApplicable, value: hemi, tol: HEMISPHERE_TOL }
    });

    let still = traj.bc.rows().windows(2).all(|w| w[0] == w[1]);
    let res = traj.energy_balance_series().into_iter().fold(0.0f64, f64::max);
    checks.push(if still && traj.stepper.forcing.is_zero() {
        check("energy_balance", res, ENERGY_TOL, res <= ENERGY_TOL)
    } else {
        InvariantCheck { name: "energy_balance", status: CheckStatus::NotApplicable, value: res, tol: ENERGY_TOL }
    });
    InvariantReport { checks }
}

/// Quadrature values of the windowed interpolation inequality
/// `∫|f|⁴ ≤ M₀ · sup_x ∫_{B_r(x)} |f|² · (∫|∇f|² + r⁻² ∫|f|²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadyzhenskayaReport {
    pub lhs: f64,
    pub window_sup: f64,
    pub dissipation: f64,
    /// `lhs / (window_sup · dissipation)`, 0 when both vanish.
    pub ratio: f64,
}

pub fn ladyzhenskaya_report<const C: usize>(grid: &Grid, f: &CellField<C>, trace: &[[f64; C]], r: f64) -> LadyzhenskayaReport {
    let a = grid.cell_area();
    let sq = ScalarField { data: f.data.iter().map(|v| [v.iter().map(|x| x * x).sum::<f64>()]).collect(), nx: f.nx, ny: f.ny };
    let l2 = sq.values().sum::<f64>() * a;
    let lhs = sq.values().map(|s| s * s).sum::<f64>() * a;
    let grad: f64 = cell_gradients(grid, f, trace).iter().flatten().flatten().map(|x| x * x).sum::<f64>() * a;
    let window_sup = windowed_max(grid, &sq, r);
    let dissipation = grad + l2 / (r * r);
    let den = window_sup * dissipation;
    let ratio = if den > 0.0 { lhs / den } else { 0.0 };
    LadyzhenskayaReport { lhs, window_sup, dissipation, ratio }
}

/// Per-step values of `‖∇P‖₂` and `‖u‖₄‖∇u‖₂ + ‖∇d‖₄‖Δd‖₂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PressureRow {
    pub step: usize,
    pub t: f64,
    pub grad_p: f64,
    pub rhs: f64,
    /// `grad_p / rhs`, 0 when both vanish.
    pub ratio: f64,
}

/// Pressure estimate per stored step `n ≥ 1` (level 0 carries no pressure).
pub fn pressure_estimate_report(traj: &Trajectory) -> Vec<PressureRow> {
    let g = &traj.grid;
    let a = g.cell_area();
    traj.states
        .iter()
        .enumerate()
        .skip(1)
        .map(|(n, s)| {
            let trace = traj.bc.row(n);
            let grad_p = stencil::gradient(g, &s.p).norm_l2_sq(g).sqrt();
            let uc = cell_velocity(g, &s.u);
            let u4 = (uc.data.iter().map(|v| (v[0] * v[0] + v[1] * v[1]).powi(2)).sum::<f64>() * a).powf(0.25);
            let du = state::velocity_dissipation(g, &s.u).max(0.0).sqrt();
            let gd = state::gradient_sq_density(g, &s.d, trace);
            let gd4 = (gd.values().map(|x| x * x).sum::<f64>() * a).powf(0.25);
            let lap = ops::laplacian_d(g, &s.d, trace).norm_l2_sq(g).sqrt();
            let rhs = u4 * du + gd4 * lap;
            let ratio = if rhs > 0.0 { grad_p / rhs } else { 0.0 };
            PressureRow { step: n, t: s.t, grad_p, rhs, ratio }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridSpec, VectorField3};
    use crate::presets::{forward_problem, trace_at, unit_spec, Preset};
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    #[test]
    fn stationary_run_passes_with_zero_residuals() {
        let traj = forward_problem(Preset::Stationary, unit_spec(8, 20, 0.2)).unwrap().simulate().unwrap();
        let rep = invariant_suite(&traj);
        assert!(rep.passed());
        assert!(rep.checks.iter().all(|c| c.status == CheckStatus::Pass));
        assert!(rep.get("divergence").unwrap().value == 0.0);
        assert!(rep.get("energy_balance").unwrap().value.abs() <= 1e-12);
        let pr = pressure_estimate_report(&traj);
        assert_eq!(pr.len(), 20);
        assert!(pr.iter().all(|r| r.grad_p == 0.0 && r.rhs == 0.0 && r.ratio == 0.0));
    }

    #[test]
    fn hemisphere_not_applicable_below_equator() {
        let mut pr = forward_problem(Preset::HeatRelaxation, unit_spec(8, 5, 0.2)).unwrap();
        let south = |x: f64, y: f64| {
            let a = 0.3 + 0.5 * (PI * x).sin() * (PI * y).sin();
            let flip = if (0.4..0.6).contains(&x) && (0.4..0.6).contains(&y) { -1.0 } else { 1.0 };
            [a.sin(), 0.0, flip * a.cos()]
        };
        pr.init.d0 = VectorField3::from_fn(&pr.grid, south);
        let traj = pr.simulate().unwrap();
        let rep = invariant_suite(&traj);
        assert_eq!(rep.get("hemisphere").unwrap().status, CheckStatus::NotApplicable);
        assert_eq!(rep.get("unit_norm").unwrap().status, CheckStatus::Pass);
    }

    #[test]
    fn heat_relaxation_passes_everything() {
        let traj = forward_problem(Preset::HeatRelaxation, unit_spec(16, 40, 0.2)).unwrap().simulate().unwrap();
        let rep = invariant_suite(&traj);
        assert!(rep.checks.iter().all(|c| c.status == CheckStatus::Pass), "{rep:?}");
    }

    #[test]
    fn driven_run_skips_energy_only() {
        let traj = forward_problem(Preset::Driven, unit_spec(16, 30, 0.2)).unwrap().simulate().unwrap();
        let rep = invariant_suite(&traj);
        assert!(rep.passed(), "{rep:?}");
        assert_eq!(rep.get("energy_balance").unwrap().status, CheckStatus::NotApplicable);
        assert_eq!(rep.get("hemisphere").unwrap().status, CheckStatus::Pass);
    }

    fn random_field(g: &Grid, rng: &mut impl Rng) -> (VectorField3, Vec<[f64; 3]>) {
        let c: Vec<[f64; 4]> = (0..9).map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(0.0..6.0), rng.gen_range(0.0..6.0), rng.gen_range(0.0..6.0)]).collect();
        let f = move |x: f64, y: f64| -> [f64; 3] {
            std::array::from_fn(|q| c[3 * q..3 * q + 3].iter().map(|k| k[0] * (k[1] * x + k[2] * y + k[3]).sin()).sum())
        };
        (VectorField3::from_fn(g, &f), trace_at(g, &f))
    }

    #[test]
    fn ladyzhenskaya_homogeneity_and_corpus() {
        let g = Grid::new(GridSpec::unit_square(24, 1e-4, 1)).unwrap();
        let zero = ladyzhenskaya_report(&g, &VectorField3::zeros(&g), &vec![[0.0; 3]; g.m()], 0.25);
        assert_eq!(zero, LadyzhenskayaReport { lhs: 0.0, window_sup: 0.0, dissipation: 0.0, ratio: 0.0 });

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let (f, tr) = random_field(&g, &mut rng);
        let a = ladyzhenskaya_report(&g, &f, &tr, 0.25);
        let s = 1.7;
        let tr2: Vec<[f64; 3]> = tr.iter().map(|v| v.map(|x| s * x)).collect();
        let b = ladyzhenskaya_report(&g, &f.scaled(s), &tr2, 0.25);
        assert!((b.lhs / a.lhs - s.powi(4)).abs() < 1e-12);
        assert!((b.window_sup * b.dissipation / (a.window_sup * a.dissipation) - s.powi(4)).abs() < 1e-12);
        assert!((b.ratio - a.ratio).abs() < 1e-14);

        let mut worst = 0.0f64;
        for _ in 0..50 {
            let (f, tr) = random_field(&g, &mut rng);
            let r = ladyzhenskaya_report(&g, &f, &tr, 0.25);
            assert!(r.ratio.is_finite() && r.ratio > 0.0);
            worst = worst.max(r.ratio);
        }
        assert!(worst < 1.0, "{worst}");
    }

    #[test]
    fn pressure_ratio_stable_under_refinement() {
        let ratio = |n: usize| {
            let traj = forward_problem(Preset::Driven, GridSpec::unit_square(n, 2e-4, 20)).unwrap().simulate().unwrap();
            let rows = pressure_estimate_report(&traj);
            rows.iter().map(|r| r.ratio).fold(0.0f64, f64::max)
        };
        let (a, b) = (ratio(8), ratio(16));
        assert!(a.is_finite() && b.is_finite() && a > 0.0);
        assert!(b / a < 3.0 && a / b < 3.0, "{a} {b}");
    }
}
