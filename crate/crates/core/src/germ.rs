//! Truncated one-variable germs of diffeomorphisms fixing 0:
//! `h -> sum_{p>=1} c_p h^p`. Carrier for periods, moduli and necklace maps.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// `c[p-1]` is the coefficient of `h^p`; fixed truncation order `c.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct GermMap {
    pub c: Vec<Complex64>,
}

impl GermMap {
    pub fn identity(order: usize) -> Self {
        let mut c = vec![ZERO; order];
        if order > 0 {
            c[0] = ONE;
        }
        GermMap { c }
    }

    pub fn zero(order: usize) -> Self {
        GermMap {
            c: vec![ZERO; order],
        }
    }

    pub fn linear(a: Complex64, order: usize) -> Self {
        let mut c = vec![ZERO; order];
        if order > 0 {
            c[0] = a;
        }
        GermMap { c }
    }

    pub fn from_coeffs(c: &[Complex64]) -> Self {
        GermMap { c: c.to_vec() }
    }

    pub fn order(&self) -> usize {
        self.c.len()
    }

    pub fn coeff(&self, p: usize) -> Complex64 {
        if p >= 1 && p <= self.c.len() {
            self.c[p - 1]
        } else {
            ZERO
        }
    }

    pub fn eval(&self, h: Complex64) -> Complex64 {
        let mut acc = ZERO;
        for &cp in self.c.iter().rev() {
            acc = (acc + cp) * h;
        }
        acc
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let n = self.order().min(rhs.order());
        GermMap {
            c: (0..n).map(|i| self.c[i] + rhs.c[i]).collect(),
        }
    }

    pub fn scale(&self, v: Complex64) -> Self {
        GermMap {
            c: self.c.iter().map(|&x| x * v).collect(),
        }
    }

    /// Product of the two germs as functions (pointwise multiplication);
    /// the result has valuation >= 2 and is only a formal series, not a diffeo.
    pub fn mul(&self, rhs: &Self) -> Self {
        let n = self.order().min(rhs.order());
        let mut c = vec![ZERO; n];
        for p in 1..=n {
            for q in 1..=(n - p) {
                c[p + q - 1] += self.c[p - 1] * rhs.c[q - 1];
            }
        }
        GermMap { c }
    }

    /// `self(rhs(h))`, truncated to the common order.
    pub fn compose(&self, rhs: &Self) -> Self {
        let n = self.order().min(rhs.order());
        let mut out = vec![ZERO; n];
        // powers of rhs
        let mut pw = vec![ZERO; n]; // rhs^p, p starting at 1
        pw[..n].copy_from_slice(&rhs.c[..n]);
        for p in 1..=n {
            let cp = self.coeff(p);
            if cp != ZERO {
                for i in 0..n {
                    out[i] += cp * pw[i];
                }
            }
            if p < n {
                // pw *= rhs
                let mut nxt = vec![ZERO; n];
                for a in 1..=n {
                    if pw[a - 1] == ZERO {
                        continue;
                    }
                    for b in 1..=(n - a) {
                        nxt[a + b - 1] += pw[a - 1] * rhs.c[b - 1];
                    }
                }
                pw = nxt;
            }
        }
        GermMap { c: out }
    }

    /// Compositional inverse; requires `c_1 != 0`.
    pub fn inverse(&self) -> Result<Self> {
        let n = self.order();
        if n == 0 || self.c[0].norm() == 0.0 {
            return Err(Error::Argument("inverse: linear coefficient must be nonzero"));
        }
        // Newton-free: solve coefficients order by order from self(g(h)) = h
        let mut g = GermMap::linear(self.c[0].inv(), n);
        for p in 2..=n {
            let comp = self.compose(&g);
            // comp should be h; correct coefficient p
            let err = comp.coeff(p);
            g.c[p - 1] -= err / self.c[0];
        }
        Ok(g)
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.c.iter().all(|z| z.norm() <= tol)
    }

    pub fn dist(&self, rhs: &Self) -> f64 {
        let n = self.order().min(rhs.order());
        (0..n)
            .map(|i| (self.c[i] - rhs.c[i]).norm())
            .fold(0.0, f64::max)
    }
}
