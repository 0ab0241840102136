//! Dense truncated bivariate power series in (x, y) and the prepared-form
//! unfolding fields built on top of them.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::cpoly::CPoly;
use crate::{Error, Result};

pub const DEFAULT_NX: usize = 24;
pub const DEFAULT_NY: usize = 12;

/// Truncated series `sum c[i][j] x^i y^j`, `i <= nx`, `j <= ny`.
///
/// `eff_x`/`eff_y` record through which total orders the coefficients are
/// exact; operations that lose information (derivatives, products with
/// short factors) shrink them so tests never assert on garbage.
#[derive(Debug, Clone, PartialEq)]
pub struct TSeries {
    pub nx: usize,
    pub ny: usize,
    pub c: Vec<Vec<Complex64>>,
    pub eff_x: usize,
    pub eff_y: usize,
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

impl TSeries {
    pub fn zero(nx: usize, ny: usize) -> Self {
        TSeries {
            nx,
            ny,
            c: vec![vec![ZERO; ny + 1]; nx + 1],
            eff_x: nx,
            eff_y: ny,
        }
    }

    pub fn constant(v: Complex64, nx: usize, ny: usize) -> Self {
        let mut s = Self::zero(nx, ny);
        s.c[0][0] = v;
        s
    }

    pub fn one(nx: usize, ny: usize) -> Self {
        Self::constant(ONE, nx, ny)
    }

    pub fn monomial(i: usize, j: usize, v: Complex64, nx: usize, ny: usize) -> Self {
        let mut s = Self::zero(nx, ny);
        if i <= nx && j <= ny {
            s.c[i][j] = v;
        }
        s
    }

    /// Series from a polynomial in x (coefficients in increasing degree).
    pub fn from_x_poly(p: &[Complex64], nx: usize, ny: usize) -> Self {
        let mut s = Self::zero(nx, ny);
        for (i, &v) in p.iter().enumerate() {
            if i <= nx {
                s.c[i][0] = v;
            }
        }
        s
    }

    pub fn coeff(&self, i: usize, j: usize) -> Complex64 {
        if i <= self.nx && j <= self.ny {
            self.c[i][j]
        } else {
            ZERO
        }
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        if i <= self.nx && j <= self.ny {
            self.c[i][j] = v;
        }
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.c
            .iter()
            .flatten()
            .all(|z| z.norm() <= tol)
    }

    pub fn max_coeff(&self) -> f64 {
        self.c.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn common_grid(a: &Self, b: &Self) -> (usize, usize) {
        (a.nx.min(b.nx), a.ny.min(b.ny))
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let (nx, ny) = Self::common_grid(self, rhs);
        let mut out = Self::zero(nx, ny);
        for i in 0..=nx {
            for j in 0..=ny {
                out.c[i][j] = self.coeff(i, j) + rhs.coeff(i, j);
            }
        }
        out.eff_x = self.eff_x.min(rhs.eff_x).min(nx);
        out.eff_y = self.eff_y.min(rhs.eff_y).min(ny);
        out
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.add(&rhs.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, v: Complex64) -> Self {
        let mut out = self.clone();
        for row in out.c.iter_mut() {
            for z in row.iter_mut() {
                *z *= v;
            }
        }
        out
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let (nx, ny) = Self::common_grid(self, rhs);
        let mut out = Self::zero(nx, ny);
        for i1 in 0..=self.nx.min(nx) {
            for j1 in 0..=self.ny.min(ny) {
                let a = self.c[i1][j1];
                if a == ZERO {
                    continue;
                }
                for i2 in 0..=(nx - i1).min(rhs.nx) {
                    for j2 in 0..=(ny - j1).min(rhs.ny) {
                        out.c[i1 + i2][j1 + j2] += a * rhs.c[i2][j2];
                    }
                }
            }
        }
        out.eff_x = self.eff_x.min(rhs.eff_x).min(nx);
        out.eff_y = self.eff_y.min(rhs.eff_y).min(ny);
        out
    }

    pub fn dx(&self) -> Self {
        let mut out = Self::zero(self.nx, self.ny);
        for i in 1..=self.nx {
            for j in 0..=self.ny {
                out.c[i - 1][j] = self.c[i][j] * (i as f64);
            }
        }
        out.eff_x = self.eff_x.saturating_sub(1);
        out.eff_y = self.eff_y;
        out
    }

    pub fn dy(&self) -> Self {
        let mut out = Self::zero(self.nx, self.ny);
        for i in 0..=self.nx {
            for j in 1..=self.ny {
                out.c[i][j - 1] = self.c[i][j] * (j as f64);
            }
        }
        out.eff_x = self.eff_x;
        out.eff_y = self.eff_y.saturating_sub(1);
        out
    }

    /// exp of a series with zero constant term.
    pub fn exp(&self) -> Result<Self> {
        if self.c[0][0] != ZERO {
            return Err(Error::Argument("exp: constant term must vanish"));
        }
        let mut out = Self::one(self.nx, self.ny);
        let mut term = Self::one(self.nx, self.ny);
        let order = self.nx + self.ny + 1;
        for n in 1..=order {
            term = term.mul(self).scale(Complex64::new(1.0 / n as f64, 0.0));
            out = out.add(&term);
        }
        out.eff_x = self.eff_x;
        out.eff_y = self.eff_y;
        Ok(out)
    }

    /// log of a series with constant term 1.
    pub fn log(&self) -> Result<Self> {
        if (self.c[0][0] - ONE).norm() > 1e-14 {
            return Err(Error::Argument("log: constant term must be 1"));
        }
        let mut w = self.clone();
        w.c[0][0] = ZERO; // w = self - 1
        let mut out = Self::zero(self.nx, self.ny);
        let mut pw = Self::one(self.nx, self.ny);
        let order = self.nx + self.ny + 1;
        for n in 1..=order {
            pw = pw.mul(&w);
            let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
            out = out.add(&pw.scale(Complex64::new(sign / n as f64, 0.0)));
        }
        out.eff_x = self.eff_x;
        out.eff_y = self.eff_y;
        Ok(out)
    }

    /// Multiplicative inverse of a series with nonzero constant term.
    pub fn inv(&self) -> Result<Self> {
        let c0 = self.c[0][0];
        if c0.norm() == 0.0 {
            return Err(Error::Argument("inv: constant term must be nonzero"));
        }
        let w = self.scale(c0.inv());
        // w = 1 + v, invert by geometric series
        let mut v = w.clone();
        v.c[0][0] = ZERO;
        let mut out = Self::one(self.nx, self.ny);
        let mut pw = Self::one(self.nx, self.ny);
        let order = self.nx + self.ny + 1;
        for n in 1..=order {
            pw = pw.mul(&v);
            let sign = if n % 2 == 1 { -1.0 } else { 1.0 };
            out = out.add(&pw.scale(Complex64::new(sign, 0.0)));
        }
        let mut out = out.scale(c0.inv());
        out.eff_x = self.eff_x;
        out.eff_y = self.eff_y;
        Ok(out)
    }

    /// Substitute `y -> P(x)^tau * y`.
    pub fn tau_twist(&self, p: &CPoly, tau: usize) -> Self {
        if tau == 0 {
            return self.clone();
        }
        let pt = TSeries::from_x_poly(&p.coeffs, self.nx, self.ny);
        let mut out = Self::zero(self.nx, self.ny);
        // P^{tau j} multiplies the y^j slice
        let mut ppow = Self::one(self.nx, self.ny);
        let mut pows: Vec<TSeries> = Vec::with_capacity(self.ny + 1);
        pows.push(ppow.clone());
        for _ in 1..=self.ny {
            ppow = ppow.mul(&pt);
            for _ in 1..tau {
                // build P^{tau} per slice below instead
            }
            pows.push(ppow.clone());
        }
        // pows[j] = P^j; we need P^{tau*j}
        for j in 0..=self.ny {
            let mut factor = Self::one(self.nx, self.ny);
            for _ in 0..(tau * j) {
                factor = factor.mul(&pt);
            }
            for i in 0..=self.nx {
                if self.c[i][j] == ZERO {
                    continue;
                }
                for ii in 0..=(self.nx - i) {
                    out.c[i + ii][j] += self.c[i][j] * factor.c[ii][0];
                }
            }
        }
        out.eff_x = self.eff_x;
        out.eff_y = self.eff_y;
        out
    }
}

/// `A dF/dx + B dF/dy` for the field `A d/dx + B d/dy`.
pub fn lie_derivative(a: &TSeries, b: &TSeries, f: &TSeries) -> TSeries {
    a.mul(&f.dx()).add(&b.mul(&f.dy()))
}

/// Pushforward of `f` by the time-`t` flow: `sum t^n/n! Z^n f`.
/// Returns the series and a flag set when the sum failed to stabilize
/// within `4 (nx + ny)` terms.
pub fn lie_exp(a: &TSeries, b: &TSeries, f: &TSeries, t: Complex64) -> (TSeries, bool) {
    let mut out = f.clone();
    let mut term = f.clone();
    let budget = 4 * (f.nx + f.ny);
    let mut truncated = true;
    for n in 1..=budget {
        term = lie_derivative(a, b, &term).scale(t / (n as f64));
        if term.max_coeff() <= 1e-16 * out.max_coeff() {
            truncated = false;
            break;
        }
        out = out.add(&term);
    }
    (out, truncated && !f.is_zero(0.0) && t != ZERO)
}

/// Monomial term of the nonlinear part: `coeff * x^i (P^tau y)^n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RMonomial {
    pub i: usize,
    pub n: usize,
    pub coeff: Complex64,
}

/// Prepared-form unfolding at a fixed parameter:
/// `X = P d/dx + y (1 + mu x^k + R) d/dy`, `Z = (u/(1+uQ)) X`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnfoldingField {
    pub p: CPoly,
    pub mu: Complex64,
    pub tau: usize,
    pub r_monomials: Vec<RMonomial>,
    /// Temporal invariant u(x), degree <= k, u(0) != 0 (coefficients ascending).
    pub u_poly: Vec<Complex64>,
    pub q_monomials: Vec<RMonomial>,
}

impl UnfoldingField {
    pub fn model(p: CPoly, mu: Complex64) -> Self {
        UnfoldingField {
            p,
            mu,
            tau: 0,
            r_monomials: Vec::new(),
            u_poly: vec![ONE],
            q_monomials: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.p.k;
        for m in &self.r_monomials {
            if m.i < 1 || m.i > k || m.n < 1 {
                return Err(Error::Argument(
                    "R monomials must have 1 <= i <= k and n >= 1",
                ));
            }
        }
        if self.u_poly.is_empty() || self.u_poly[0].norm() == 0.0 {
            return Err(Error::Argument("u(0) must be nonzero"));
        }
        if self.u_poly.len() > k + 1 {
            return Err(Error::Argument("u must have degree <= k"));
        }
        Ok(())
    }

    /// `R(x, y)` as a series, with the `P^tau` twist applied to its y slots.
    pub fn r_series(&self, nx: usize, ny: usize) -> TSeries {
        let mut r = TSeries::zero(nx, ny);
        for m in &self.r_monomials {
            let t = TSeries::monomial(m.i, m.n, m.coeff, nx, ny);
            r = r.add(&t);
        }
        r.tau_twist(&self.p, self.tau)
    }

    /// Orbital components `(A, B)` with `A = P`, `B = y (1 + mu x^k + R)`.
    pub fn orbital_components(&self, nx: usize, ny: usize) -> (TSeries, TSeries) {
        let a = TSeries::from_x_poly(&self.p.coeffs, nx, ny);
        let k = self.p.k;
        let mut lin = TSeries::one(nx, ny);
        lin = lin.add(&TSeries::monomial(k, 0, self.mu, nx, ny));
        lin = lin.add(&self.r_series(nx, ny));
        let y = TSeries::monomial(0, 1, ONE, nx, ny);
        (a, y.mul(&lin))
    }

    /// `tau`-twist pullback: substitute `y -> P^t y` into the field.
    /// Shifts the formal invariant by `t (k+1)` and adds `t P'` to the
    /// y-linear coefficient.
    pub fn tau_twisted(&self, t: usize) -> Self {
        let mut out = self.clone();
        out.tau += t;
        out
    }

    /// Components of the twisted field as series (includes the `t P'` term):
    /// the pullback of `X` under `y -> P^t y` is
    /// `P d/dx + y (1 + mu x^k + t P' + P^t-twisted R) d/dy` up to mod-P terms.
    pub fn twisted_components(&self, t: usize, nx: usize, ny: usize) -> (TSeries, TSeries) {
        let a = TSeries::from_x_poly(&self.p.coeffs, nx, ny);
        let k = self.p.k;
        let mut lin = TSeries::one(nx, ny);
        lin = lin.add(&TSeries::monomial(k, 0, self.mu, nx, ny));
        // t * P'
        let dp: Vec<Complex64> = (1..self.p.coeffs.len())
            .map(|j| self.p.coeffs[j] * (j as f64) * (t as f64))
            .collect();
        lin = lin.add(&TSeries::from_x_poly(&dp, nx, ny));
        let mut r = TSeries::zero(nx, ny);
        for m in &self.r_monomials {
            r = r.add(&TSeries::monomial(m.i, m.n, m.coeff, nx, ny));
        }
        lin = lin.add(&r.tau_twist(&self.p, self.tau + t));
        let y = TSeries::monomial(0, 1, ONE, nx, ny);
        (a, y.mul(&lin))
    }
}
