use crate::error::{Error, Result};

/// Cholesky factor of a symmetric positive-definite banded matrix.
///
/// Storage is the lower band, row by row: entry `(i, j)` with
/// `i - bw <= j <= i` lives at `i * (bw + 1) + (j + bw - i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandedCholesky {
    /// Factor the matrix given by its lower-triangle entries `(i, j, a_ij)`
    /// with `j <= i`; repeated entries are summed.
    pub fn factor(n: usize, bw: usize, lower: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let w = bw + 1;
        let mut l = vec![0.0; n * w];
        for (i, j, a) in lower {
            if j > i || i - j > bw || i >= n {
                return Err(Error::SolverFailure(format!("entry ({i}, {j}) outside the lower band {bw}")));
            }
            l[i * w + (j + bw - i)] += a;
        }
        for i in 0..n {
            let i0 = i.saturating_sub(bw);
            for j in i0..=i {
                let j0 = j.saturating_sub(bw).max(i0);
                let mut s = l[i * w + (j + bw - i)];
                for k in j0..j {
                    s -= l[i * w + (k + bw - i)] * l[j * w + (k + bw - j)];
                }
                if i == j {
                    if !(s > 0.0) {
                        return Err(Error::SolverFailure(format!(
                            "matrix not positive definite at row {i} (pivot {s:e})"
                        )));
                    }
                    l[i * w + bw] = s.sqrt();
                } else {
                    l[i * w + (j + bw - i)] = s / l[j * w + bw];
                }
            }
        }
        Ok(Self { n, bw, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solve `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        debug_assert_eq!(b.len(), n);
        for i in 0..n {
            let mut s = b[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.l[i * w + (k + bw - i)] * b[k];
            }
            b[i] = s / self.l[i * w + bw];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in (i + 1)..(i + bw + 1).min(n) {
                s -= self.l[k * w + (i + bw - k)] * b[k];
            }
            b[i] = s / self.l[i * w + bw];
        }
    }
}
