use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::ChartControl;

/// Weight of Fourier mode `(k, m)`: `(1+k²)^{5/2} + (1+m²)^{5/4} + (1+m²)(1+k²)^{3/2}`.
pub(crate) fn mode_weight(k: f64, m: f64) -> f64 {
    let (a, b) = (1.0 + k * k, 1.0 + m * m);
    a.powf(2.5) + b.powf(1.25) + b * a.powf(1.5)
}

/// Signed frequency of DFT bin `i` out of `n`.
fn freq(i: usize, n: usize) -> f64 {
    if 2 * i <= n {
        i as f64
    } else {
        i as f64 - n as f64
    }
}

/// Fourier-weighted norm of chart coordinates on `Γ_T`.
///
/// The DFT runs over the boundary sample index (periodic) and over time
/// after even reflection `z⁰ … zᴺ zᴺ⁻¹ … z¹`; coefficients are normalized by
/// the number of samples, so a single mode `cos(2π s/L) c` has norm
/// `|c| (w(1, 0) / 2)^{1/2}`.
pub fn discrete_u_norm(z: &ChartControl) -> f64 {
    let (levels, m) = (z.levels(), z.m());
    if levels == 0 || m == 0 {
        return 0.0;
    }
    let nt = if levels == 1 { 1 } else { 2 * (levels - 1) };
    let mut planner = FftPlanner::<f64>::new();
    let fk = planner.plan_fft_forward(m);
    let ft = planner.plan_fft_forward(nt);
    let scale = 1.0 / (m * nt) as f64;
    let mut total = 0.0;
    for c in 0..2 {
        // grid[t][k]
        let mut buf: Vec<Vec<Complex64>> = (0..nt)
            .map(|t| {
                let n = if t < levels { t } else { nt - t };
                z.z[n].iter().map(|v| Complex64::new(v[c], 0.0)).collect()
            })
            .collect();
        for row in buf.iter_mut() {
            fk.process(row);
        }
        let mut col = vec![Complex64::new(0.0, 0.0); nt];
        for k in 0..m {
            for t in 0..nt {
                col[t] = buf[t][k];
            }
            ft.process(&mut col);
            let kf = freq(k, m);
            for (t, v) in col.iter().enumerate() {
                total += mode_weight(kf, freq(t, nt)) * (v * scale).norm_sqr();
            }
        }
    }
    total.sqrt()
}
