//! Independent oracles and property suites.

pub mod diagnostics;
pub mod jet;
pub mod manufactured;
pub mod oracles;

pub use diagnostics::{
    invariant_suite, ladyzhenskaya_report, pressure_estimate_report, CheckStatus, InvariantCheck, InvariantReport,
    LadyzhenskayaReport, PressureRow,
};
pub use manufactured::manufactured_suite;
pub use oracles::{duality_check, fd_directional_derivative, linearization_convergence};

/// Errors against a refinement parameter with the least-squares log-log slope.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub params: Vec<f64>,
    pub errors: Vec<f64>,
    pub slope: f64,
}

impl ConvergenceReport {
    pub fn new(params: Vec<f64>, errors: Vec<f64>) -> Self {
        let slope = fit_slope(&params, &errors);
        Self { params, errors, slope }
    }
}

/// Least-squares slope of `log e` against `log p`; `NaN` with fewer than
/// two usable points.
pub fn fit_slope(params: &[f64], errors: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = params
        .iter()
        .zip(errors)
        .filter(|(p, e)| **p > 0.0 && **e > 0.0)
        .map(|(p, e)| (p.ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let p = [0.1, 0.05, 0.025];
        let e: Vec<f64> = p.iter().map(|x| 3.0 * x * x).collect();
        assert!((fit_slope(&p, &e) - 2.0).abs() < 1e-12);
        assert!(fit_slope(&[1.0], &[1.0]).is_nan());
    }
}
