//! Stereographic chart of the closed upper hemisphere onto the closed unit
//! disk, projecting from the south pole.

use crate::error::{Error, Result};

/// `Π(y) = (y1, y2) / (1 + y3)`.
pub fn chart_forward(y: [f64; 3]) -> Result<[f64; 2]> {
    let den = 1.0 + y[2];
    if !(den > 1e-14) {
        return Err(Error::SouthPole);
    }
    Ok([y[0] / den, y[1] / den])
}

/// `Π⁻¹(a, b) = (2a, 2b, 1 - a² - b²) / (1 + a² + b²)`.
#[inline]
pub fn chart_inverse(z: [f64; 2]) -> [f64; 3] {
    let r2 = z[0] * z[0] + z[1] * z[1];
    let s = 1.0 / (1.0 + r2);
    [2.0 * z[0] * s, 2.0 * z[1] * s, (1.0 - r2) * s]
}

/// Jacobian of [`chart_inverse`]: columns are `∂/∂a` and `∂/∂b`.
pub fn chart_inverse_jacobian(z: [f64; 2]) -> [[f64; 2]; 3] {
    let (a, b) = (z[0], z[1]);
    let q = 1.0 + a * a + b * b;
    let q2 = q * q;
    [
        [2.0 * (q - 2.0 * a * a) / q2, -4.0 * a * b / q2],
        [-4.0 * a * b / q2, 2.0 * (q - 2.0 * b * b) / q2],
        [-4.0 * a / q2, -4.0 * b / q2],
    ]
}

/// `Π⁻¹(Π(h) + s (Π(ĥ) - Π(h)))`: the chart segment from `h` (at `s = 0`)
/// to `ĥ` (at `s = 1`).
pub fn chart_segment(h: [f64; 3], h_hat: [f64; 3], s: f64) -> Result<[f64; 3]> {
    let a = chart_forward(h)?;
    let b = chart_forward(h_hat)?;
    if s == 0.0 {
        return Ok(h);
    }
    if s == 1.0 {
        return Ok(h_hat);
    }
    Ok(chart_inverse([a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(chart_forward([0.0, 0.0, 1.0]).unwrap(), [0.0, 0.0]);
        assert_eq!(chart_forward([1.0, 0.0, 0.0]).unwrap(), [1.0, 0.0]);
        assert_eq!(chart_inverse([0.0, 0.0]), [0.0, 0.0, 1.0]);
        assert_eq!(chart_inverse([1.0, 0.0]), [1.0, 0.0, 0.0]);
        assert_eq!(chart_forward([0.0, 0.0, -1.0]), Err(Error::SouthPole));
    }

    #[test]
    fn jacobian_matches_differences() {
        let z = [0.31, -0.52];
        let j = chart_inverse_jacobian(z);
        let eps = 1e-6;
        for col in 0..2 {
            let mut zp = z;
            let mut zm = z;
            zp[col] += eps;
            zm[col] -= eps;
            let (p, m) = (chart_inverse(zp), chart_inverse(zm));
            for r in 0..3 {
                assert!(((p[r] - m[r]) / (2.0 * eps) - j[r][col]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn segment_endpoints() {
        let h = chart_inverse([0.2, 0.1]);
        let g = chart_inverse([-0.4, 0.5]);
        let s0 = chart_segment(h, g, 0.0).unwrap();
        let s1 = chart_segment(h, g, 1.0).unwrap();
        for c in 0..3 {
            assert!(s0[c] == h[c] && s1[c] == g[c]);
        }
        let mid = chart_segment(h, g, 0.5).unwrap();
        assert!(mid[2] >= 0.0);
    }
}
