//! CSV tables written by the command-line tools. Floats use `{:e}`, which
//! prints the shortest string that reads back to the same bits.

use std::fmt::Write as _;

use crate::adjoint::AdjointState;
use crate::control::OptimizeHistory;
use crate::forward::Trajectory;
use crate::grid::stencil;
use crate::state;

pub const ENERGY_HEADER: &str = "step,t,kinetic,elastic,dissipation,boundary_flux,balance_residual,min_d3,max_div,local_energy_max";
pub const Q_BOUNDARY_HEADER: &str = "step,t,j,x,y,q1_x,q1_y,q2_x,q2_y,q2_z";
pub const GRADCHECK_HEADER: &str = "eps,fd_value,adjoint_value,rel_gap";
pub const HISTORY_HEADER: &str =
    "iter,cost,tracking_u,tracking_d,terminal_u,terminal_d,control,grad_norm,step,feasibility_norm";

fn row(out: &mut String, ints: &[usize], floats: &[f64]) {
    let mut first = true;
    for i in ints {
        if !first {
            out.push(',');
        }
        first = false;
        write!(out, "{i}").unwrap();
    }
    for x in floats {
        if !first {
            out.push(',');
        }
        first = false;
        write!(out, "{x:e}").unwrap();
    }
    out.push('\n');
}

fn table(header: &str) -> String {
    let mut s = String::with_capacity(4096);
    s.push_str(header);
    s.push('\n');
    s
}

/// Per-step energy table; `balance_residual` at step `n ≥ 1` is the
/// residual of the step from `n - 1` to `n` (0 at step 0), and
/// `local_energy_max` uses windows of radius `r`.
pub fn energy_csv(traj: &Trajectory, r: f64) -> String {
    let g = &traj.grid;
    let res = traj.energy_balance_series();
    let mut out = table(ENERGY_HEADER);
    for (n, s) in traj.states.iter().enumerate() {
        let e = traj.energy(n);
        let bal = if n == 0 { 0.0 } else { res[n - 1] };
        let div = stencil::divergence(g, &s.u).max_abs();
        let loc = state::local_energy_max(g, s, traj.bc.row(n), r);
        row(&mut out, &[n], &[s.t, e.kinetic, e.elastic, e.dissipation, e.boundary_flux, bal, state::hemisphere_min(&s.d), div, loc]);
    }
    out
}

/// Boundary multipliers `q₁`, `q₂` at every level and boundary sample.
pub fn q_boundary_csv(traj: &Trajectory, adj: &AdjointState) -> String {
    let g = &traj.grid;
    let mut out = table(Q_BOUNDARY_HEADER);
    for (n, (q1, q2)) in adj.q1.iter().zip(&adj.q2).enumerate() {
        let t = traj.states[n].t;
        for (j, b) in g.boundary.samples.iter().enumerate() {
            let (a, c) = (q1[j], q2[j]);
            write!(out, "{n},{t:e},{j}").unwrap();
            for x in [b.point[0], b.point[1], a[0], a[1], c[0], c[1], c[2]] {
                write!(out, ",{x:e}").unwrap();
            }
            out.push('\n');
        }
    }
    out
}

/// One finite-difference check: the two derivative values and their gap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckRow {
    pub eps: f64,
    pub fd_value: f64,
    pub adjoint_value: f64,
    /// `|fd - adjoint| / max(1, |adjoint|)`
    pub rel_gap: f64,
}

impl GradCheckRow {
    pub fn new(eps: f64, fd_value: f64, adjoint_value: f64) -> Self {
        let rel_gap = (fd_value - adjoint_value).abs() / adjoint_value.abs().max(1.0);
        Self { eps, fd_value, adjoint_value, rel_gap }
    }
}

pub fn gradcheck_csv(rows: &[GradCheckRow]) -> String {
    let mut out = table(GRADCHECK_HEADER);
    for r in rows {
        row(&mut out, &[], &[r.eps, r.fd_value, r.adjoint_value, r.rel_gap]);
    }
    out
}

pub fn history_csv(h: &OptimizeHistory) -> String {
    let mut out = table(HISTORY_HEADER);
    for r in &h.records {
        let t = r.cost.terms;
        row(&mut out, &[r.iter], &[r.cost.total, t[0], t[1], t[2], t[3], t[4], r.grad_norm, r.step, r.feasibility_norm]);
    }
    out
}

/// Parse a table written by this module back into a header and numeric
/// rows (integers are read as floats).
pub fn parse_table(text: &str) -> Option<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines();
    let header = lines.next()?.split(',').map(str::to_owned).collect::<Vec<_>>();
    let rows = lines
        .map(|l| l.split(',').map(|x| x.parse::<f64>().ok()).collect::<Option<Vec<_>>>())
        .collect::<Option<Vec<_>>>()?;
    rows.iter().all(|r| r.len() == header.len()).then_some((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::{forward_problem, unit_spec, Preset};

    #[test]
    fn energy_table_shape_and_values() {
        let traj = forward_problem(Preset::Driven, unit_spec(6, 4, 0.2)).unwrap().simulate().unwrap();
        let text = energy_csv(&traj, 0.25);
        let (h, rows) = parse_table(&text).unwrap();
        assert_eq!(h.join(","), ENERGY_HEADER);
        assert_eq!(rows.len(), 5);
        let e = traj.energy(3);
        assert_eq!(rows[3][0], 3.0);
        assert_eq!(rows[3][2].to_bits(), e.kinetic.to_bits());
        assert_eq!(rows[3][6].to_bits(), traj.energy_balance_series()[2].to_bits());
        assert_eq!(rows[0][6], 0.0);
    }

    #[test]
    fn floats_round_trip_through_text() {
        let rows = [GradCheckRow::new(1e-4, 0.1 + 0.2, 1.0 / 3.0), GradCheckRow::new(5e-3, -2.5e-300, 7.0)];
        let (h, back) = parse_table(&gradcheck_csv(&rows)).unwrap();
        assert_eq!(h.join(","), GRADCHECK_HEADER);
        for (a, b) in rows.iter().zip(&back) {
            assert_eq!([a.eps, a.fd_value, a.adjoint_value, a.rel_gap].map(f64::to_bits).to_vec(), b.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
        }
        assert_eq!(rows[1].rel_gap, (7.0 + 2.5e-300) / 7.0);
    }

    #[test]
    fn q_boundary_columns_in_header_order() {
        let pr = forward_problem(Preset::Driven, unit_spec(4, 2, 0.2)).unwrap();
        let traj = pr.simulate().unwrap();
        let adj = crate::adjoint::solve_adjoint(
            &traj,
            &crate::adjoint::TargetSet::constant(&pr.grid, [0.0, 0.0, 1.0]),
            &crate::adjoint::CostWeights::new([1.0, 1.0, 1.0, 1.0, 0.0]),
            crate::linearized::LinearizationMode::Discrete,
        )
        .unwrap();
        let (h, rows) = parse_table(&q_boundary_csv(&traj, &adj)).unwrap();
        assert_eq!(h.join(","), Q_BOUNDARY_HEADER);
        assert_eq!(rows.len(), 3 * 16);
        let r = &rows[16 + 5];
        assert_eq!((r[0], r[1], r[2]), (1.0, traj.states[1].t, 5.0));
        assert_eq!(r[3], pr.grid.boundary.samples[5].point[0]);
        assert_eq!(r[9].to_bits(), adj.q2[1][5][2].to_bits());
    }
}
