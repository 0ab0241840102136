//! The polynomial layer: `P_eps(x) = x^{k+1} + sum_{j<k} eps_j x^j`,
//! simultaneous root finding, residues, and the parameter group actions.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::{Error, Result};

/// Monic degree-`k+1` polynomial with no `x^k` term.
#[derive(Debug, Clone, PartialEq)]
pub struct CPoly {
    pub k: usize,
    pub eps: Vec<Complex64>,
    /// Coefficients in increasing degree: `coeffs[j]` multiplies `x^j`,
    /// length `k+2`, `coeffs[k] = 0`, `coeffs[k+1] = 1`.
    pub coeffs: Vec<Complex64>,
}

/// `max_j |eps_j|^{1/(k+1-j)}`; zero iff `eps = 0`.
pub fn eps_norm(eps: &[Complex64]) -> f64 {
    let k = eps.len();
    let mut best = 0.0f64;
    for (j, e) in eps.iter().enumerate() {
        let v = libm::pow(e.norm(), 1.0 / (k + 1 - j) as f64);
        if v > best {
            best = v;
        }
    }
    best
}

/// Radius of the disk that traps all roots of `P_eps`.
pub fn root_radius(eps: &[Complex64]) -> f64 {
    libm::sqrt(eps.len() as f64) * eps_norm(eps)
}

pub fn build_p(k: usize, eps: &[Complex64]) -> Result<CPoly> {
    if k == 0 || eps.len() != k {
        return Err(Error::Argument("build_P: need len(eps) = k >= 1"));
    }
    let mut coeffs = vec![Complex64::new(0.0, 0.0); k + 2];
    coeffs[k + 1] = Complex64::new(1.0, 0.0);
    coeffs[..k].copy_from_slice(eps);
    Ok(CPoly {
        k,
        eps: eps.to_vec(),
        coeffs,
    })
}

impl CPoly {
    pub fn eval(&self, x: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn deriv(&self, x: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in (1..self.coeffs.len()).rev() {
            acc = acc * x + self.coeffs[j] * (j as f64);
        }
        acc
    }

    pub fn eps_norm(&self) -> f64 {
        eps_norm(&self.eps)
    }

    /// All `k+1` roots, Aberth–Ehrlich iteration seeded on a circle of
    /// radius `1 + sqrt(k)*||eps||`, ordered by (arg, modulus, real part).
    pub fn roots(&self) -> Result<Vec<Complex64>> {
        let n = self.k + 1;
        let scale = {
            let r = root_radius(&self.eps);
            if r > 1.0 {
                r
            } else {
                1.0
            }
        };
        let seed_r = 1.0 + root_radius(&self.eps);
        let mut z: Vec<Complex64> = (0..n)
            .map(|i| {
                // slight angular offset so symmetric configurations don't stall
                let th = core::f64::consts::TAU * (i as f64 + 0.25) / n as f64 + 0.3;
                Complex64::from_polar(seed_r, th)
            })
            .collect();
        let mut ok = false;
        for _ in 0..200 {
            let mut max_step = 0.0f64;
            let zs = z.clone();
            for i in 0..n {
                let p = self.eval(zs[i]);
                let dp = self.deriv(zs[i]);
                let newton = if dp.norm() > 0.0 {
                    p / dp
                } else {
                    Complex64::new(1e-30, 0.0)
                };
                let mut s = Complex64::new(0.0, 0.0);
                for (j, zj) in zs.iter().enumerate() {
                    if j != i {
                        s += (zs[i] - zj).inv();
                    }
                }
                let denom = Complex64::new(1.0, 0.0) - newton * s;
                let step = if denom.norm() > 1e-300 {
                    newton / denom
                } else {
                    newton
                };
                z[i] -= step;
                if step.norm() > max_step {
                    max_step = step.norm();
                }
            }
            if max_step < 1e-14 * scale {
                ok = true;
                break;
            }
        }
        if !ok {
            let res = z.iter().map(|&r| self.eval(r).norm()).fold(0.0, f64::max);
            if res > 1e-10 * libm::pow(scale, (self.k + 1) as f64) {
                return Err(Error::Numeric {
                    what: "Aberth iteration did not converge",
                    residual: res,
                });
            }
        }
        sort_points(&mut z);
        Ok(z)
    }

    /// `1/P'(r_i)` aligned with `roots()`; errors out on (near-)multiple roots.
    pub fn residues(&self) -> Result<Vec<Complex64>> {
        let r = self.roots()?;
        let tol = crate::tol_disc(self.eps_norm());
        for i in 0..r.len() {
            for j in i + 1..r.len() {
                if (r[i] - r[j]).norm() <= tol {
                    return Err(Error::Degenerate("residues: multiple root"));
                }
            }
        }
        Ok(r.iter().map(|&x| self.deriv(x).inv()).collect())
    }
}

/// Deterministic ordering shared by everything downstream of `roots()`.
pub fn sort_points(z: &mut [Complex64]) {
    z.sort_by(|a, b| {
        let (aa, ab) = (canon_arg(*a), canon_arg(*b));
        aa.partial_cmp(&ab)
            .unwrap_or(core::cmp::Ordering::Equal)
            .then(
                a.norm()
                    .partial_cmp(&b.norm())
                    .unwrap_or(core::cmp::Ordering::Equal),
            )
            .then(a.re.partial_cmp(&b.re).unwrap_or(core::cmp::Ordering::Equal))
    });
}

fn canon_arg(z: Complex64) -> f64 {
    if z.norm() == 0.0 {
        return -4.0; // origin sorts first
    }
    let mut a = z.arg();
    // snap tiny imaginary noise so e.g. a real root sorts by its sign, not noise
    if libm::fabs(a) < 1e-12 {
        a = 0.0;
    }
    a
}

/// `theta * eps := (eps_j alpha^{j-1})_{j<k}` with `alpha = exp(2 i pi theta / k)`.
pub fn theta_action(theta: i64, eps: &[Complex64]) -> Vec<Complex64> {
    let k = eps.len();
    let alpha = Complex64::from_polar(1.0, core::f64::consts::TAU * theta as f64 / k as f64);
    eps.iter()
        .enumerate()
        .map(|(j, &e)| e * alpha.powi(j as i32 - 1))
        .collect()
}

/// The rescaling action `(lambda^{k+1-j} eps_j, lambda x, lambda^{-k} t)`.
pub fn rescale(
    lambda: f64,
    eps: &[Complex64],
    x: Complex64,
    t: Complex64,
) -> Result<(Vec<Complex64>, Complex64, Complex64)> {
    if !(lambda > 0.0) {
        return Err(Error::Argument("rescale: lambda must be positive"));
    }
    let k = eps.len();
    let eps2 = eps
        .iter()
        .enumerate()
        .map(|(j, &e)| e * libm::pow(lambda, (k + 1 - j) as f64))
        .collect();
    Ok((eps2, x * lambda, t * libm::pow(lambda, -(k as f64))))
}

/// True iff the minimal pairwise root distance is below `tol_disc`.
pub fn in_discriminant(eps: &[Complex64], tol: f64) -> Result<bool> {
    let p = build_p(eps.len(), eps)?;
    let r = p.roots()?;
    for i in 0..r.len() {
        for j in i + 1..r.len() {
            if (r[i] - r[j]).norm() < tol {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn build_examples() {
        let p = build_p(1, &[c(-1.0, 0.0)]).unwrap();
        assert_eq!(p.coeffs.len(), 3);
        assert_eq!(p.eval(c(1.0, 0.0)), c(0.0, 0.0));
        let q = build_p(2, &[c(0.0, 0.0), c(-1.0, 0.0)]).unwrap();
        // x^3 - x: no x^2 term
        assert_eq!(q.coeffs[2], c(0.0, 0.0));
        assert!(build_p(2, &[c(0.0, 0.0)]).is_err());
    }

    #[test]
    fn roots_examples() {
        let p = build_p(1, &[c(-1.0, 0.0)]).unwrap();
        let r = p.roots().unwrap();
        assert_abs_diff_eq!(r[0].re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r[1].re, -1.0, epsilon = 1e-12);

        let p = build_p(1, &[c(1.0, 0.0)]).unwrap(); // x^2 + 1
        let r = p.roots().unwrap();
        assert_abs_diff_eq!((r[0] - c(0.0, -1.0)).norm(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!((r[1] - c(0.0, 1.0)).norm(), 0.0, epsilon = 1e-12);

        let p = build_p(2, &[c(0.0, 0.0), c(-1.0, 0.0)]).unwrap(); // x^3 - x
        let r = p.roots().unwrap();
        let mut vals: Vec<f64> = r.iter().map(|z| z.re).collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_abs_diff_eq!(vals[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vals[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vals[2], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn eps_norm_examples() {
        assert_eq!(eps_norm(&[c(0.0, 0.0)]), 0.0);
        assert_abs_diff_eq!(eps_norm(&[c(4.0, 0.0)]), 2.0, epsilon = 1e-15);
        // k=2: eps = [eps_0, eps_1] = [0.04, 0.008]? order: eps[0]=eps_0 weight 1/(k+1)
        let v = eps_norm(&[c(0.008, 0.0), c(0.04, 0.0)]);
        assert_abs_diff_eq!(v, 0.2, epsilon = 1e-15);
    }

    #[test]
    fn theta_examples() {
        let eps = [c(1.0, 2.0), c(-0.5, 0.3)];
        let id = theta_action(0, &eps);
        assert_eq!(id, eps.to_vec());
        // k=2, theta=1: alpha=-1, [a*(-1)^{-1}, b*(-1)^0] = [-a, b]
        let tw = theta_action(1, &eps);
        assert_abs_diff_eq!((tw[0] + eps[0]).norm(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!((tw[1] - eps[1]).norm(), 0.0, epsilon = 1e-14);
        // order k
        let two = theta_action(1, &tw);
        for (a, b) in two.iter().zip(eps.iter()) {
            assert_abs_diff_eq!((a - b).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn rescale_examples() {
        let (e2, x2, t2) = rescale(2.0, &[c(1.0, 0.0)], c(1.0, 1.0), c(3.0, 0.0)).unwrap();
        assert_abs_diff_eq!(e2[0].re, 4.0, epsilon = 1e-14);
        assert_eq!(x2, c(2.0, 2.0));
        assert_abs_diff_eq!(t2.re, 1.5, epsilon = 1e-14);
        assert!(rescale(0.0, &[c(1.0, 0.0)], x2, t2).is_err());
        // P_{eps'}(lambda x) = lambda^{k+1} P_eps(x)
        let eps = [c(0.3, -0.2), c(-0.1, 0.05)];
        let lam = 1.7;
        let (e2, _, _) = rescale(lam, &eps, c(0.0, 0.0), c(0.0, 0.0)).unwrap();
        let p = build_p(2, &eps).unwrap();
        let p2 = build_p(2, &e2).unwrap();
        for x in [c(0.3, 0.1), c(-1.2, 0.7), c(0.0, -0.4)] {
            let lhs = p2.eval(x * lam);
            let rhs = p.eval(x) * libm::pow(lam, 3.0);
            assert_abs_diff_eq!((lhs - rhs).norm(), 0.0, epsilon = 1e-12 * rhs.norm().max(1.0));
        }
    }

    #[test]
    fn residue_examples() {
        let p = build_p(1, &[c(-1.0, 0.0)]).unwrap();
        let r = p.residues().unwrap();
        // roots ordered (arg, modulus): +1 (arg 0) before -1 (arg pi)
        assert_abs_diff_eq!(r[0].re, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(r[1].re, -0.5, epsilon = 1e-12);

        let p = build_p(2, &[c(0.0, 0.0), c(-1.0, 0.0)]).unwrap();
        let r = p.residues().unwrap();
        let sum: Complex64 = r.iter().sum();
        assert_abs_diff_eq!(sum.norm(), 0.0, epsilon = 1e-12);

        let p = build_p(1, &[c(0.0, 0.0)]).unwrap(); // x^2, double root
        assert!(p.residues().is_err());
    }

    #[test]
    fn discriminant_examples() {
        assert!(in_discriminant(&[c(0.0, 0.0)], 1e-8).unwrap());
        assert!(!in_discriminant(&[c(-1.0, 0.0)], 1e-8).unwrap());
        // (x-a)^2 (x+2a) = x^3 - 3a^2 x + 2a^3 -> eps = [2a^3, -3a^2]
        let a = 0.6;
        let eps = [c(2.0 * a * a * a, 0.0), c(-3.0 * a * a, 0.0)];
        assert!(in_discriminant(&eps, 1e-6).unwrap());
    }

    #[test]
    fn residue_loop_integral() {
        // numeric (1/2pi i) closed-loop integral of dx/P vs residue sum, k=1
        let eps = [c(0.21, -0.4)];
        let p = build_p(1, &eps).unwrap();
        let rad = 2.0 * root_radius(&eps) + 1.0;
        let n = 4096;
        let mut acc = c(0.0, 0.0);
        for i in 0..n {
            let th = core::f64::consts::TAU * i as f64 / n as f64;
            let x = Complex64::from_polar(rad, th);
            let dx = x * Complex64::new(0.0, core::f64::consts::TAU / n as f64);
            acc += dx / p.eval(x);
        }
        acc /= Complex64::new(0.0, core::f64::consts::TAU);
        let sum: Complex64 = p.residues().unwrap().iter().sum();
        assert_abs_diff_eq!((acc - sum).norm(), 0.0, epsilon = 1e-9);
    }
}
