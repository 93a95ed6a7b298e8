//! Second-order forward-mode jets in `(x, y, t)`: value, gradient and
//! Hessian, enough to evaluate the residual of the state system on a
//! closed-form solution.

use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub g: [f64; 3],
    pub h: [[f64; 3]; 3],
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        Self { v, g: [0.0; 3], h: [[0.0; 3]; 3] }
    }

    /// The coordinate `k` (0 = x, 1 = y, 2 = t) at value `v`.
    pub fn var(k: usize, v: f64) -> Self {
        let mut j = Self::constant(v);
        j.g[k] = 1.0;
        j
    }

    /// `f(self)` given `f`, `f'` and `f''` at `self.v`.
    fn chain(self, f: f64, f1: f64, f2: f64) -> Self {
        let mut h = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                h[a][b] = f1 * self.h[a][b] + f2 * self.g[a] * self.g[b];
            }
        }
        Self { v: f, g: self.g.map(|x| f1 * x), h }
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn recip(self) -> Self {
        let r = 1.0 / self.v;
        self.chain(r, -r * r, 2.0 * r * r * r)
    }

    pub fn scale(self, a: f64) -> Self {
        Self { v: a * self.v, g: self.g.map(|x| a * x), h: self.h.map(|r| r.map(|x| a * x)) }
    }

    pub fn dx(&self) -> f64 {
        self.g[0]
    }

    pub fn dy(&self) -> f64 {
        self.g[1]
    }

    pub fn dt(&self) -> f64 {
        self.g[2]
    }

    /// Spatial Laplacian.
    pub fn lap(&self) -> f64 {
        self.h[0][0] + self.h[1][1]
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        let mut r = self;
        r.v += o.v;
        for a in 0..3 {
            r.g[a] += o.g[a];
            for b in 0..3 {
                r.h[a][b] += o.h[a][b];
            }
        }
        r
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, o: f64) -> Jet {
        self.v += o;
        self
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let mut h = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                h[a][b] = self.v * o.h[a][b] + o.v * self.h[a][b] + self.g[a] * o.g[b] + self.g[b] * o.g[a];
            }
        }
        Jet { v: self.v * o.v, g: std::array::from_fn(|a| self.v * o.g[a] + o.v * self.g[a]), h }
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        o.scale(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_closed_form() {
        // f = sin(x y) / (1 + t²) at (0.3, 0.7, 0.4)
        let (x, y, t) = (Jet::var(0, 0.3), Jet::var(1, 0.7), Jet::var(2, 0.4));
        let f = (x * y).sin() * (t * t + 1.0).recip();
        let (xv, yv, tv) = (0.3f64, 0.7f64, 0.4f64);
        let q = 1.0 / (1.0 + tv * tv);
        let s = (xv * yv).sin();
        let c = (xv * yv).cos();
        assert!((f.v - s * q).abs() < 1e-15);
        assert!((f.dx() - yv * c * q).abs() < 1e-15);
        assert!((f.dt() - s * (-2.0 * tv) * q * q).abs() < 1e-15);
        assert!((f.h[0][0] - (-yv * yv * s * q)).abs() < 1e-15);
        assert!((f.h[0][1] - (c - xv * yv * s) * q).abs() < 1e-15);
        assert!((f.h[2][2] - s * (6.0 * tv * tv - 2.0) * q * q * q).abs() < 1e-14);
    }
}
