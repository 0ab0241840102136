//! Formal normalization pipeline: center-manifold straightening,
//! cohomological equations, formal invariants, and flow conjugacies.
//!
//! Everything is solved slice-by-slice in the y-degree and then
//! coefficient-by-coefficient in x, mirroring the constructive proofs;
//! no linear system is ever assembled.

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::cpoly::CPoly;
use crate::series::{lie_derivative, TSeries, UnfoldingField};
use crate::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Formal invariants (mu, u) of a prepared unfolding; u is the Euclidean
/// remainder of the temporal unit by P, a polynomial of degree <= k with
/// u(0) != 0.
#[derive(Debug, Clone, PartialEq)]
pub struct FormalInvariants {
    pub mu: Complex64,
    /// Ascending coefficients, degree <= k.
    pub u: Vec<Complex64>,
}

// --- small x-polynomial helpers (ascending coefficients, truncated) ---

fn pmul(a: &[Complex64], b: &[Complex64], nx: usize) -> Vec<Complex64> {
    let mut out = vec![ZERO; nx + 1];
    for (i, &ai) in a.iter().enumerate() {
        if ai == ZERO || i > nx {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            if i + j > nx {
                break;
            }
            out[i + j] += ai * bj;
        }
    }
    out
}

fn padd(a: &mut Vec<Complex64>, b: &[Complex64]) {
    if a.len() < b.len() {
        a.resize(b.len(), ZERO);
    }
    for (i, &bi) in b.iter().enumerate() {
        a[i] += bi;
    }
}

fn pderiv(a: &[Complex64]) -> Vec<Complex64> {
    if a.len() <= 1 {
        return vec![ZERO];
    }
    (1..a.len()).map(|j| a[j] * (j as f64)).collect()
}

/// Euclidean remainder of `a` by the monic polynomial `p` (both ascending).
pub fn poly_rem(a: &[Complex64], p: &CPoly) -> Vec<Complex64> {
    let deg_p = p.coeffs.len() - 1;
    let mut r: Vec<Complex64> = a.to_vec();
    while r.len() > deg_p {
        let top = r.len() - 1;
        let c = r[top];
        if c != ZERO {
            for i in 0..deg_p {
                r[top - deg_p + i] -= c * p.coeffs[i];
            }
        }
        r.pop();
    }
    r.resize(deg_p, ZERO);
    r
}

/// Substitute `y = s(x)` (with s(0)=0) into a bivariate series, returning the
/// x-expansion truncated at the series' x-order.
pub fn compose_y(f: &TSeries, s: &[Complex64]) -> Vec<Complex64> {
    let nx = f.nx;
    let mut out = vec![ZERO; nx + 1];
    // Horner in y
    for j in (0..=f.ny).rev() {
        out = pmul(&out, s, nx);
        for i in 0..=nx {
            out[i] += f.coeff(i, j);
        }
    }
    out
}

/// Substitute `y -> y + s(x)` into a bivariate series (binomial expansion).
pub fn shift_y(f: &TSeries, s: &[Complex64]) -> TSeries {
    let (nx, ny) = (f.nx, f.ny);
    let mut out = TSeries::zero(nx, ny);
    // f = sum_j f_j(x) y^j; (y+s)^j = sum_r binom(j,r) s^{j-r} y^r
    let mut spow: Vec<Vec<Complex64>> = Vec::with_capacity(ny + 1);
    spow.push(vec![ONE]);
    for _ in 1..=ny {
        let last = spow.last().unwrap();
        spow.push(pmul(last, s, nx));
    }
    for j in 0..=ny {
        let mut binom = 1.0f64;
        for r in 0..=j {
            // binom(j, r) built incrementally: at r it equals C(j, r)
            let b = binom;
            let pw = &spow[j - r];
            for i in 0..=nx {
                if f.coeff(i, j) == ZERO {
                    continue;
                }
                for (q, &pq) in pw.iter().enumerate() {
                    if i + q > nx {
                        break;
                    }
                    let t = out.coeff(i + q, r) + f.coeff(i, j) * pq * b;
                    out.set(i + q, r, t);
                }
            }
            binom = binom * ((j - r) as f64) / ((r + 1) as f64);
        }
    }
    out
}

fn residual_coeff(ax: &TSeries, ay: &TSeries, s: &[Complex64], order: usize) -> Complex64 {
    // A_x(x,s) s'(x) - A_y(x,s) at the given x-order
    let nx = ax.nx;
    let axs = compose_y(ax, s);
    let ays = compose_y(ay, s);
    let ds = pderiv(s);
    let lhs = pmul(&axs, &ds, nx);
    lhs[order] - ays[order]
}

/// Solve for the formal center manifold `y = s(x)` of the field
/// `(A_x, A_y)`: the invariance equation `A_x(x,s) s' = A_y(x,s)` holds
/// through x-order `n`. Returns the x-series of `s` (an x-only TSeries).
pub fn solve_center_manifold(ax: &TSeries, ay: &TSeries, n: usize) -> Result<TSeries> {
    let nx = n.min(ax.nx);
    let mut s = vec![ZERO; ax.nx + 1];
    let scale = ax.max_coeff().max(ay.max_coeff()).max(1.0);
    let p0 = ax.coeff(0, 0).norm();
    for u in 1..=nx {
        // each new coefficient appears linearly at its pivot order
        let pivot = if p0 > 1e-14 * scale { u - 1 } else { u };
        s[u] = ZERO;
        let r0 = residual_coeff(ax, ay, &s, pivot);
        s[u] = ONE;
        let r1 = residual_coeff(ax, ay, &s, pivot);
        let c = r1 - r0;
        if c.norm() <= 1e-14 * scale {
            return Err(Error::Degenerate(
                "center manifold: singularity is not elementary (h(0) = 0)",
            ));
        }
        s[u] = -r0 / c;
    }
    // verify the invariance equation through the solved orders
    let mut worst = 0.0f64;
    for j in 0..=nx {
        let pivot_skip = p0 > 1e-14 * scale && j == nx;
        if pivot_skip {
            continue;
        }
        let r = residual_coeff(ax, ay, &s, j).norm();
        if r > worst {
            worst = r;
        }
    }
    if worst > 1e-9 * scale {
        return Err(Error::Numeric {
            what: "center manifold residual did not vanish",
            residual: worst,
        });
    }
    let mut out = TSeries::zero(ax.nx, ax.ny);
    for (i, &si) in s.iter().enumerate() {
        out.set(i, 0, si);
    }
    Ok(out)
}

/// Solve the single-slice equation `P f' + n (1 + mu x^k) f = rhs` for the
/// x-polynomial `f` through degree `nx`.
fn solve_slice(
    p: &CPoly,
    mu: Complex64,
    n: usize,
    rhs: &[Complex64],
    nx: usize,
) -> Result<Vec<Complex64>> {
    let k = p.k;
    let nf = n as f64;
    let mut f = vec![ZERO; nx + 1];
    let p0 = p.coeffs[0];
    let scale = rhs.iter().map(|c| c.norm()).fold(1.0f64, f64::max);
    if p0.norm() > 1e-14 * scale.max(p.eps_norm()).max(1.0) {
        // order-j equation pins f_{j+1}
        for j in 0..nx {
            let mut acc = rhs[j] - nf * f[j];
            if j >= k {
                acc -= nf * mu * f[j - k];
            }
            for i in 1..=(k + 1).min(j) {
                acc -= p.coeffs[i] * ((j + 1 - i) as f64) * f[j + 1 - i];
            }
            f[j + 1] = acc / (p0 * ((j + 1) as f64));
        }
    } else {
        // order-j equation pins f_j; coefficient n + j p_1
        for j in 0..=nx {
            let mut acc = rhs[j];
            if j >= k {
                acc -= nf * mu * f[j - k];
            }
            for i in 2..=(k + 1).min(j + 1) {
                acc -= p.coeffs[i] * ((j + 1 - i) as f64) * f[j + 1 - i];
            }
            let c = Complex64::new(nf, 0.0)
                + if p.coeffs.len() > 1 {
                    p.coeffs[1] * (j as f64)
                } else {
                    ZERO
                };
            if c.norm() <= 1e-14 {
                return Err(Error::Numeric {
                    what: "cohomological slice hit a resonance",
                    residual: c.norm(),
                });
            }
            f[j] = acc / c;
        }
    }
    Ok(f)
}

/// Solve the cohomological equation `X . F = G` for the prepared field,
/// slice-by-slice in y-degree. Returns `(F, obstruction)`, where the
/// obstruction is the Euclidean remainder of `G(x,0)` by `P` (degree <= k);
/// `F` solves the equation with `G(x,0)` replaced by its solvable part.
pub fn solve_cohomological(
    field: &UnfoldingField,
    g: &TSeries,
) -> Result<(TSeries, Vec<Complex64>)> {
    let (nx, ny) = (g.nx, g.ny);
    let p = &field.p;
    let g0: Vec<Complex64> = (0..=nx).map(|i| g.coeff(i, 0)).collect();
    let obstruction = poly_rem(&g0, p);
    // exact division of the solvable part by P, then antiderivative
    let mut solvable = g0.clone();
    for (i, &c) in obstruction.iter().enumerate() {
        solvable[i] -= c;
    }
    let mut quot = vec![ZERO; nx + 1];
    let degp = p.coeffs.len() - 1;
    for top in (degp..=nx).rev() {
        let c = solvable[top];
        quot[top - degp] = c;
        if c != ZERO {
            for i in 0..=degp {
                solvable[top - degp + i] -= c * p.coeffs[i];
            }
        }
    }
    let mut out = TSeries::zero(nx, ny);
    for (i, &q) in quot.iter().enumerate() {
        if i + 1 <= nx {
            out.set(i + 1, 0, q / ((i + 1) as f64));
        }
    }
    let (a, b) = field.orbital_components(nx, ny);
    for n in 1..=ny {
        let applied = lie_derivative(&a, &b, &out);
        let rhs: Vec<Complex64> = (0..=nx).map(|i| g.coeff(i, n) - applied.coeff(i, n)).collect();
        let f = solve_slice(p, field.mu, n, &rhs, nx)?;
        for (i, &fi) in f.iter().enumerate() {
            out.set(i, n, fi);
        }
    }
    Ok((out, obstruction))
}

/// Extract the formal invariants `(mu, u)` of a prepared unfolding:
/// `u` is the remainder of the temporal unit `U(x,0)` by `P`, and `mu` is
/// the x^k coefficient of the y-linear part of the orbital component
/// reduced mod P (exact for normal-form inputs).
pub fn formal_invariants(field: &UnfoldingField, nx: usize) -> Result<FormalInvariants> {
    field.validate()?;
    let p = &field.p;
    let k = p.k;
    // U(x,0) = u(x) / (1 + u(x) Q(x,0)) truncated at nx
    let mut q0 = vec![ZERO; nx + 1];
    for m in &field.q_monomials {
        if m.n == 0 && m.i <= nx {
            q0[m.i] += m.coeff;
        }
    }
    let mut upol = vec![ZERO; nx + 1];
    for (i, &c) in field.u_poly.iter().enumerate() {
        if i <= nx {
            upol[i] = c;
        }
    }
    let mut u0 = vec![ZERO; nx + 1];
    if q0.iter().all(|c| *c == ZERO) {
        u0.copy_from_slice(&upol);
    } else {
        // U(x,0) = u / (1 + u q0): geometric series in the tail of the unit
        let den_tail = pmul(&upol, &q0, nx); // (1 + u q0) - 1
        let neg: Vec<Complex64> = den_tail.iter().map(|c| -c).collect();
        let mut inv = vec![ZERO; nx + 1];
        inv[0] = ONE;
        let mut pw = vec![ZERO; nx + 1];
        pw[0] = ONE;
        for _ in 1..=nx {
            pw = pmul(&pw, &neg, nx);
            if pw.iter().all(|c| c.norm() == 0.0) {
                break;
            }
            padd(&mut inv, &pw);
        }
        u0 = pmul(&upol, &inv, nx);
    }
    let u = poly_rem(&u0, p);
    if u[0].norm() == 0.0 {
        return Err(Error::Degenerate("formal invariants: u(0) = 0"));
    }
    // y-linear orbital coefficient: 1 + mu x^k + tau P' (R has y-valuation >= 1)
    let mut lin = vec![ZERO; nx + 1];
    lin[0] = ONE;
    if k <= nx {
        lin[k] += field.mu;
    }
    if field.tau > 0 {
        let dp = pderiv(&p.coeffs);
        for (i, &c) in dp.iter().enumerate() {
            if i <= nx {
                lin[i] += c * (field.tau as f64);
            }
        }
    }
    let lin_red = poly_rem(&lin, p);
    let mu = if k < lin_red.len() { lin_red[k] } else { ZERO };
    Ok(FormalInvariants { mu, u })
}

/// Transform the field `W` by the flow map `Psi = Phi_Y^F`:
/// returns `W - (W.F)/(1 + Y.F) Y` componentwise.
pub fn flow_conjugate(
    w: (&TSeries, &TSeries),
    y: (&TSeries, &TSeries),
    f: &TSeries,
) -> Result<(TSeries, TSeries)> {
    if f.coeff(0, 0) != ZERO {
        return Err(Error::Argument("flow_conjugate: F(0,0) must vanish"));
    }
    let wf = lie_derivative(w.0, w.1, f);
    let yf = lie_derivative(y.0, y.1, f);
    let mut den = yf.clone();
    let c = den.coeff(0, 0) + ONE;
    den.set(0, 0, c);
    if den.coeff(0, 0).norm() == 0.0 {
        return Err(Error::Argument("flow_conjugate: 1 + Y.F is not invertible"));
    }
    let factor = wf.mul(&den.inv()?);
    Ok((w.0.sub(&factor.mul(y.0)), w.1.sub(&factor.mul(y.1))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cpoly::build_p;
    use crate::series::RMonomial;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn euler_field(nx: usize, ny: usize) -> (TSeries, TSeries) {
        // x^2 f' = -f - x: A_x = x^2, A_y = -y - x
        let ax = TSeries::monomial(2, 0, ONE, nx, ny);
        let ay = TSeries::monomial(0, 1, -ONE, nx, ny).add(&TSeries::monomial(1, 0, -ONE, nx, ny));
        (ax, ay)
    }

    #[test]
    fn center_manifold_zero_rhs() {
        let nx = 10;
        let ax = TSeries::monomial(2, 0, ONE, nx, 4);
        let ay = TSeries::monomial(0, 1, -ONE, nx, 4);
        let s = solve_center_manifold(&ax, &ay, nx).unwrap();
        assert!(s.is_zero(0.0));
    }

    #[test]
    fn center_manifold_euler() {
        let nx = 8;
        let (ax, ay) = euler_field(nx, 4);
        let s = solve_center_manifold(&ax, &ay, nx).unwrap();
        // f = -x + x^2 - 2x^3 + 6x^4 - ...: a_m = (-1)^m (m-1)!
        let mut fact = 1.0;
        for m in 1..=6 {
            if m > 1 {
                fact *= (m - 1) as f64;
            }
            let expect = if m % 2 == 0 { fact } else { -fact };
            assert!(
                (s.coeff(m, 0) - c(expect, 0.0)).norm() < 1e-9 * fact.max(1.0),
                "a_{m} = {:?}, expected {expect}",
                s.coeff(m, 0)
            );
        }
    }

    #[test]
    fn center_manifold_divergence_signature() {
        let nx = 12;
        let (ax, ay) = euler_field(nx, 4);
        let s = solve_center_manifold(&ax, &ay, nx).unwrap();
        // |a_{m+1}/a_m| = m grows linearly
        for m in 2..=10 {
            let ratio = s.coeff(m + 1, 0).norm() / s.coeff(m, 0).norm();
            assert!((ratio - m as f64).abs() < 1e-6 * (m as f64));
        }
    }

    #[test]
    fn center_manifold_idempotent() {
        let nx = 8;
        let (ax, ay) = euler_field(nx, 4);
        let s = solve_center_manifold(&ax, &ay, nx).unwrap();
        let sv: Vec<Complex64> = (0..=nx).map(|i| s.coeff(i, 0)).collect();
        // shift y -> y + s and re-solve; the new manifold is 0
        let ax_sh = shift_y(&ax, &sv);
        let ds = pderiv(&sv);
        let ds_series = TSeries::from_x_poly(&ds, nx, 4);
        let ay_sh = shift_y(&ay, &sv).sub(&ax_sh.mul(&ds_series));
        let s2 = solve_center_manifold(&ax_sh, &ay_sh, nx - 1).unwrap();
        assert!(s2.max_coeff() < 1e-9, "residual manifold {:e}", s2.max_coeff());
    }

    #[test]
    fn center_manifold_nonzero_eps() {
        // p0 != 0 branch: P = x^2 - 0.25 (roots +-1/2), A_y = -y - x
        let nx = 10;
        let p = build_p(1, &[c(-0.25, 0.0)]).unwrap();
        let ax = TSeries::from_x_poly(&p.coeffs, nx, 2);
        let ay = TSeries::monomial(0, 1, -ONE, nx, 2).add(&TSeries::monomial(1, 0, -ONE, nx, 2));
        let s = solve_center_manifold(&ax, &ay, nx).unwrap();
        let sv: Vec<Complex64> = (0..=nx).map(|i| s.coeff(i, 0)).collect();
        for j in 0..nx {
            assert!(residual_coeff(&ax, &ay, &sv, j).norm() < 1e-10);
        }
    }

    #[test]
    fn cohomological_zero() {
        let p = build_p(1, &[ZERO]).unwrap();
        let field = UnfoldingField::model(p, ZERO);
        let g = TSeries::zero(8, 4);
        let (f, obs) = solve_cohomological(&field, &g).unwrap();
        assert!(f.is_zero(0.0));
        assert!(obs.iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn cohomological_euler_series() {
        // k=1, eps=0, mu=0, R=0, G = x y -> F = (x - x^2 + 2x^3 - 6x^4 + ...) y
        let p = build_p(1, &[ZERO]).unwrap();
        let field = UnfoldingField::model(p, ZERO);
        let g = TSeries::monomial(1, 1, ONE, 10, 3);
        let (f, obs) = solve_cohomological(&field, &g).unwrap();
        assert!(obs.iter().all(|c| c.norm() == 0.0));
        let mut fact = 1.0;
        for m in 1..=8 {
            if m > 1 {
                fact *= (m - 1) as f64;
            }
            let expect = if m % 2 == 0 { -fact } else { fact };
            assert!(
                (f.coeff(m, 1) - c(expect, 0.0)).norm() < 1e-9 * fact,
                "a_{m} = {:?}",
                f.coeff(m, 1)
            );
        }
    }

    #[test]
    fn cohomological_constant_obstruction() {
        let p = build_p(1, &[ZERO]).unwrap();
        let field = UnfoldingField::model(p, ZERO);
        let g = TSeries::one(8, 3);
        let (_, obs) = solve_cohomological(&field, &g).unwrap();
        assert_eq!(obs.len(), 2);
        assert!((obs[0] - ONE).norm() < 1e-15);
        assert!(obs[1].norm() < 1e-15);
    }

    #[test]
    fn cohomological_soundness_random_ideal() {
        // random polynomial G in the ideal (P * arbitrary) solves exactly
        let p = build_p(2, &[c(0.3, 0.1), c(-0.2, 0.05)]).unwrap();
        let field = UnfoldingField::model(p.clone(), c(0.4, -0.3));
        let (a, b) = field.orbital_components(14, 5);
        let mut state = 0x243f6a8885a308d3u64;
        let mut rnd = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        };
        for _ in 0..10 {
            let mut g = TSeries::zero(14, 5);
            for i in 0..=4usize {
                for j in 0..=3usize {
                    g.set(i, j, c(rnd(), rnd()));
                }
            }
            // push G into the ideal condition: multiply the y^0 slice by P
            let g0: Vec<Complex64> = (0..=14).map(|i| g.coeff(i, 0)).collect();
            let g0p = pmul(&g0, &p.coeffs, 14);
            for (i, &v) in g0p.iter().enumerate() {
                g.set(i, 0, v);
            }
            let (f, obs) = solve_cohomological(&field, &g).unwrap();
            assert!(obs.iter().all(|c| c.norm() < 1e-12));
            let res = g.sub(&lie_derivative(&a, &b, &f));
            for i in 0..=13usize {
                for j in 0..=5usize {
                    assert!(res.coeff(i, j).norm() < 1e-10, "({i},{j}) {:e}", res.coeff(i, j).norm());
                }
            }
        }
    }

    #[test]
    fn cohomological_uniqueness_up_to_constant() {
        let p = build_p(1, &[c(0.1, 0.02)]).unwrap();
        let field = UnfoldingField::model(p.clone(), c(0.2, 0.0));
        let g0 = pmul(&[ZERO, ONE], &p.coeffs, 10); // x * P in the ideal
        let mut g = TSeries::zero(10, 3);
        for (i, &v) in g0.iter().enumerate() {
            g.set(i, 0, v);
        }
        g = g.add(&TSeries::monomial(1, 1, c(0.3, 0.1), 10, 3));
        let (f, _) = solve_cohomological(&field, &g).unwrap();
        // F + const also solves; re-solving from X.(F+1) recovers F+1 - F = const
        let (a, b) = field.orbital_components(10, 3);
        let mut f1 = f.clone();
        f1.set(0, 0, f1.coeff(0, 0) + ONE);
        let g2 = lie_derivative(&a, &b, &f1);
        let (f2, _) = solve_cohomological(&field, &g2).unwrap();
        let diff = f2.sub(&f);
        for i in 0..=9usize {
            for j in 0..=2usize {
                if i == 0 && j == 0 {
                    continue;
                }
                assert!(diff.coeff(i, j).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn invariants_model_and_polynomial_unit() {
        let p = build_p(1, &[c(0.05, 0.0)]).unwrap();
        let field = UnfoldingField::model(p.clone(), c(0.7, 0.2));
        let inv = formal_invariants(&field, 12).unwrap();
        assert!((inv.mu - c(0.7, 0.2)).norm() < 1e-14);
        assert!((inv.u[0] - ONE).norm() < 1e-14);
        assert!(inv.u[1].norm() < 1e-14);

        // u-part: U = (1 + x) + P -> remainder kills the P term
        let mut f2 = field.clone();
        // store u = 1 + x + P as an extended polynomial via u_poly? u_poly is
        // capped at degree k, so emulate with the raw remainder helper:
        let mut upoly = vec![ONE, ONE, ZERO];
        padd(&mut upoly, &p.coeffs);
        let r = poly_rem(&upoly, &p);
        assert!((r[0] - ONE).norm() < 1e-14 && (r[1] - ONE).norm() < 1e-14);
        f2.u_poly = r;
        let inv2 = formal_invariants(&f2, 12).unwrap();
        assert!((inv2.u[1] - ONE).norm() < 1e-14);
    }

    #[test]
    fn invariants_tau_twist_shift() {
        for k in 1..=3usize {
            let eps = vec![ZERO; k];
            let p = build_p(k, &eps).unwrap();
            for tau in 1..=2usize {
                let field = UnfoldingField::model(p.clone(), c(0.3, 0.1)).tau_twisted(tau);
                let inv = formal_invariants(&field, 3 * (k + 1)).unwrap();
                let expect = c(0.3, 0.1) + c((tau * (k + 1)) as f64, 0.0);
                assert!(
                    (inv.mu - expect).norm() < 1e-12,
                    "k={k} tau={tau}: {:?} vs {:?}",
                    inv.mu,
                    expect
                );
            }
        }
    }

    #[test]
    fn invariants_reject_vanishing_unit() {
        let p = build_p(1, &[ZERO]).unwrap();
        let mut field = UnfoldingField::model(p, ZERO);
        field.u_poly = vec![ZERO, ONE];
        assert!(matches!(formal_invariants(&field, 8), Err(Error::Argument(_))));
    }

    #[test]
    fn flow_conjugate_trivial_cases() {
        let p = build_p(1, &[ZERO]).unwrap();
        let field = UnfoldingField::model(p, c(0.2, 0.1));
        let (a, b) = field.orbital_components(8, 4);
        let f0 = TSeries::zero(8, 4);
        let (ta, tb) = flow_conjugate((&a, &b), (&a, &b), &f0).unwrap();
        assert!(ta.sub(&a).is_zero(0.0) && tb.sub(&b).is_zero(0.0));
        // F a first integral of Y (Y.F = 0): x is not one, but any constant-free
        // F with Y.F = 0 for the model at mu=0... use F = 0 checked above; here
        // check the formula leaves W unchanged when Y.F = 0 with Y = 0 field.
        let zf = TSeries::zero(8, 4);
        let fx = TSeries::monomial(1, 0, ONE, 8, 4);
        let (ua, _) = flow_conjugate((&a, &b), (&zf, &zf), &fx).unwrap();
        assert!(ua.sub(&a).is_zero(0.0));
    }

    #[test]
    fn flow_conjugate_temporal_normalization() {
        // k=1, eps=0, mu=0, U = 1/(1-y): T solves X.T = 1/U - 1/u = -y;
        // transforming u X = X by Phi^T recovers U X through truncation.
        let (nx, ny) = (8, 8);
        let p = build_p(1, &[ZERO]).unwrap();
        let field = UnfoldingField::model(p, ZERO);
        let g = TSeries::monomial(0, 1, -ONE, nx, ny);
        let (t, obs) = solve_cohomological(&field, &g).unwrap();
        assert!(obs.iter().all(|c| c.norm() < 1e-14));
        let (a, b) = field.orbital_components(nx, ny);
        let (ta, tb) = flow_conjugate((&a, &b), (&a, &b), &t).unwrap();
        // U = 1/(1-y) = sum y^j
        let mut u = TSeries::zero(nx, ny);
        for j in 0..=ny {
            u.set(0, j, ONE);
        }
        let (ua, ub) = (u.mul(&a), u.mul(&b));
        // top y-order of the product is truncation-affected; compare below it
        for i in 0..=nx {
            for j in 0..ny {
                assert!((ta.coeff(i, j) - ua.coeff(i, j)).norm() < 1e-10);
                assert!((tb.coeff(i, j) - ub.coeff(i, j)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn cohomological_with_r_coupling() {
        // nonzero R exercises the y-degree coupling path
        let p = build_p(1, &[c(0.1, 0.0)]).unwrap();
        let mut field = UnfoldingField::model(p.clone(), c(0.25, 0.1));
        field.r_monomials = vec![RMonomial { i: 1, n: 1, coeff: c(0.2, -0.1) }];
        let (a, b) = field.orbital_components(12, 4);
        let g0 = pmul(&[ONE, c(0.5, 0.0)], &p.coeffs, 12);
        let mut g = TSeries::zero(12, 4);
        for (i, &v) in g0.iter().enumerate() {
            g.set(i, 0, v);
        }
        g = g.add(&TSeries::monomial(0, 1, ONE, 12, 4));
        g = g.add(&TSeries::monomial(2, 2, c(0.3, 0.4), 12, 4));
        let (f, obs) = solve_cohomological(&field, &g).unwrap();
        assert!(obs.iter().all(|c| c.norm() < 1e-12));
        let res = g.sub(&lie_derivative(&a, &b, &f));
        for i in 0..12usize {
            for j in 0..=4usize {
                assert!(res.coeff(i, j).norm() < 1e-9, "({i},{j})");
            }
        }
    }
}
