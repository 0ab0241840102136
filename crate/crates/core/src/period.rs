//! Closed-form period operator for k = 1: monomial periods via the Gamma
//! formula, the s -> 0 limit, linearity over polynomials, Bernoulli moduli,
//! and inversion of the dominant invariant coefficient.
//!
//! The independent quadrature oracle (Pochhammer contour in arbitrary
//! precision) lives in the companion crate; this module is plain f64.

use alloc::vec;
use num_complex::Complex64;

use crate::germ::GermMap;
use crate::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const PI: f64 = core::f64::consts::PI;

/// Period of a monomial `x^n y^m`: the `h^m` coefficient of the resulting
/// germ tuple (triangularity makes it the only term for the model).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodTerm {
    pub m: usize,
    pub coeff: Complex64,
    /// Set when the vanishing criterion `n + m mu in Z_{<=0}` fired and the
    /// coefficient is exactly zero.
    pub vanishes: bool,
}

/// Lanczos approximation of the Gamma function on the complex plane,
/// relative error below 1e-12 for |z| <= 30 away from poles; reflection
/// formula for Re z < 0.5. Poles return complex infinity.
pub fn gamma_complex(z: Complex64) -> Complex64 {
    // g = 7, n = 9 coefficients (Godfrey/Pugh).
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    if z.im == 0.0 && z.re <= 0.0 && z.re == libm::floor(z.re) {
        return Complex64::new(f64::INFINITY, f64::INFINITY);
    }
    if z.re < 0.5 {
        // Gamma(z) = pi / (sin(pi z) Gamma(1-z))
        let s = (Complex64::new(PI, 0.0) * z).sin();
        if s.norm() == 0.0 {
            return Complex64::new(f64::INFINITY, f64::INFINITY);
        }
        return Complex64::new(PI, 0.0) / (s * gamma_complex(ONE - z));
    }
    let zm = z - ONE;
    let mut acc = Complex64::new(C[0], 0.0);
    for (i, &ci) in C.iter().enumerate().skip(1) {
        acc += Complex64::new(ci, 0.0) / (zm + Complex64::new(i as f64, 0.0));
    }
    let t = zm + Complex64::new(G + 0.5, 0.0);
    let sqrt2pi = Complex64::new(libm::sqrt(2.0 * PI), 0.0);
    sqrt2pi * t.powc(zm + Complex64::new(0.5, 0.0)) * (-t).exp() * acc
}

/// Principal log-Gamma for `Re z >= 0.5` (same Lanczos data as above);
/// avoids overflow for large |z|.
fn ln_gamma_right(z: Complex64) -> Complex64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    let zm = z - ONE;
    let mut acc = Complex64::new(C[0], 0.0);
    for (i, &ci) in C.iter().enumerate().skip(1) {
        acc += Complex64::new(ci, 0.0) / (zm + Complex64::new(i as f64, 0.0));
    }
    let t = zm + Complex64::new(G + 0.5, 0.0);
    Complex64::new(libm::log(2.0 * PI) / 2.0, 0.0)
        + (zm + Complex64::new(0.5, 0.0)) * t.ln()
        - t
        + acc.ln()
}

/// `Gamma(a) / Gamma(b)` computed stably even when both values overflow f64.
fn gamma_ratio(a: Complex64, b: Complex64) -> Result<Complex64> {
    let ga = gamma_complex(a);
    let gb = gamma_complex(b);
    if !ga.is_finite() || !gb.is_finite() {
        if a.re >= 0.5 && b.re >= 0.5 {
            return Ok((ln_gamma_right(a) - ln_gamma_right(b)).exp());
        }
        // reflect both arguments: Gamma(z) = pi / (sin(pi z) Gamma(1-z))
        // ratio = sin(pi b)/sin(pi a) * Gamma(1-b)/Gamma(1-a)
        if a.re < 0.5 && b.re < 0.5 {
            let sr = sin_pi_ratio(b, a)?;
            return Ok(sr * (ln_gamma_right(ONE - b) - ln_gamma_right(ONE - a)).exp());
        }
        return Err(Error::Numeric {
            what: "gamma ratio: arguments straddle the reflection line with overflow",
            residual: a.norm().max(b.norm()),
        });
    }
    if gb.norm() == 0.0 {
        return Err(Error::Degenerate("gamma ratio: denominator vanished"));
    }
    Ok(ga / gb)
}

/// `sin(pi a) / sin(pi b)`, stable for large |Im|.
fn sin_pi_ratio(a: Complex64, b: Complex64) -> Result<Complex64> {
    if libm::fabs(a.im) < 15.0 && libm::fabs(b.im) < 15.0 {
        let sb = (Complex64::new(PI, 0.0) * b).sin();
        if sb.norm() == 0.0 {
            return Err(Error::Degenerate("sin ratio: denominator vanished"));
        }
        return Ok((Complex64::new(PI, 0.0) * a).sin() / sb);
    }
    let i = Complex64::new(0.0, 1.0);
    if a.im > 0.0 && b.im > 0.0 {
        // sin(pi z) = e^{-i pi z} (e^{2 i pi z} - 1) / (2i); e^{2 i pi z} small
        let ea = (i * Complex64::new(2.0 * PI, 0.0) * a).exp();
        let eb = (i * Complex64::new(2.0 * PI, 0.0) * b).exp();
        return Ok((i * Complex64::new(PI, 0.0) * (b - a)).exp() * (ea - ONE) / (eb - ONE));
    }
    if a.im < 0.0 && b.im < 0.0 {
        let ea = (-i * Complex64::new(2.0 * PI, 0.0) * a).exp();
        let eb = (-i * Complex64::new(2.0 * PI, 0.0) * b).exp();
        return Ok((-i * Complex64::new(PI, 0.0) * (b - a)).exp() * (ONE - ea) / (ONE - eb));
    }
    Err(Error::Numeric {
        what: "sin ratio: mixed half-planes with large imaginary parts",
        residual: a.im.max(b.im),
    })
}

/// Principal power `base^expo` with `base` on the negative real axis read as
/// `|base| e^{i pi}`.
fn principal_pow(base: Complex64, expo: Complex64) -> Complex64 {
    if expo == ZERO {
        return ONE;
    }
    base.powc(expo)
}

/// True when `z` is within `tol` of a nonpositive integer on the real axis.
fn is_nonpositive_integer(z: Complex64, tol: f64) -> bool {
    if libm::fabs(z.im) > tol {
        return false;
    }
    if z.re > tol {
        return false;
    }
    let r = libm::round(z.re);
    libm::fabs(z.re - r) <= tol
}

/// Canonical argument of `s` in `[pi/4, 9 pi/4)`.
pub fn arg_sector(s: Complex64) -> f64 {
    let mut a = libm::atan2(s.im, s.re);
    while a < PI / 4.0 - 1e-12 {
        a += 2.0 * PI;
    }
    a
}

/// Membership in the sector `S`: `pi/4 < arg s < 7 pi/4` (canonicalized).
pub fn in_sector(s: Complex64) -> bool {
    if s.norm() == 0.0 {
        return false;
    }
    let a = arg_sector(s);
    a > PI / 4.0 + 1e-12 && a < 7.0 * PI / 4.0 - 1e-12
}

/// `s -> 0` limit of the model period of `x^n y^m`:
/// `(-m)^{n + m mu0} / Gamma(n + m mu0)`, zero iff `n + m mu0 in Z_{<=0}`.
pub fn period_model_k1_limit(n: usize, m: usize, mu0: Complex64) -> Result<PeriodTerm> {
    if m == 0 {
        return Err(Error::Argument("period: m must be >= 1"));
    }
    let z = Complex64::new(n as f64, 0.0) + Complex64::new(m as f64, 0.0) * mu0;
    if is_nonpositive_integer(z, 1e-12) {
        return Ok(PeriodTerm { m, coeff: ZERO, vanishes: true });
    }
    let pw = principal_pow(Complex64::new(-(m as f64), 0.0), z);
    let ga = gamma_complex(z);
    if !ga.is_finite() {
        return Ok(PeriodTerm { m, coeff: ZERO, vanishes: true });
    }
    Ok(PeriodTerm { m, coeff: pw / ga, vanishes: false })
}

/// Model period of `x^n y^m` for `k = 1` at parameter `s` (roots at +-s,
/// double cover eps_0 = -s^2), per the Gamma-product formula:
/// `(-m)^{n+m mu}/Gamma(n+m mu) * t_{s,n,m} * T_{s,m}`.
pub fn period_model_k1(n: usize, m: usize, mu: Complex64, s: Complex64) -> Result<PeriodTerm> {
    if m == 0 {
        return Err(Error::Argument("period: m must be >= 1"));
    }
    if !in_sector(s) {
        return Err(Error::Argument("period: s outside the sector pi/4 < arg s < 7 pi/4"));
    }
    if s.norm() * (2.0 * mu.norm() + 0.1) >= 1.0 {
        return Err(Error::Argument("period: |s| too large for the sector domain"));
    }
    let mf = m as f64;
    let z = Complex64::new(n as f64, 0.0) + Complex64::new(mf, 0.0) * mu;
    if is_nonpositive_integer(z, 1e-12) {
        return Ok(PeriodTerm { m, coeff: ZERO, vanishes: true });
    }

    // t_{s,n,m} = 2^{-n} sum_{p+q=n} binom(n,p) prod_{j<p}(1 - s(mu+2j/m))
    //                                           prod_{j<q}(1 + s(mu+2j/m))
    let mut t = ZERO;
    for p in 0..=n {
        let q = n - p;
        let mut prod = ONE;
        // binomial(n, p)
        let mut bin = 1.0f64;
        for j in 0..p {
            bin = bin * ((n - j) as f64) / ((j + 1) as f64);
        }
        prod *= Complex64::new(bin, 0.0);
        for j in 0..p {
            prod *= ONE - s * (mu + Complex64::new(2.0 * j as f64 / mf, 0.0));
        }
        for j in 0..q {
            prod *= ONE + s * (mu + Complex64::new(2.0 * j as f64 / mf, 0.0));
        }
        t += prod;
    }
    t /= Complex64::new(libm::pow(2.0, n as f64), 0.0);

    // T_{s,m} = ((-2s/m)^{m mu} / (1 + s mu)) Gamma(-m/2s + m mu/2) / Gamma(-m/2s - m mu/2)
    let w = -Complex64::new(mf, 0.0) / (s * 2.0);
    let half_mmu = Complex64::new(mf / 2.0, 0.0) * mu;
    if is_nonpositive_integer(w + half_mmu, 1e-12) || is_nonpositive_integer(w - half_mmu, 1e-12) {
        return Err(Error::Degenerate("period: Gamma pole hit in T_{s,m}"));
    }
    let gr = gamma_ratio(w + half_mmu, w - half_mmu)?;
    let tcap = principal_pow(-s * 2.0 / mf, Complex64::new(mf, 0.0) * mu) / (ONE + s * mu) * gr;

    let ga = gamma_complex(z);
    if !ga.is_finite() {
        return Ok(PeriodTerm { m, coeff: ZERO, vanishes: true });
    }
    let lead = principal_pow(Complex64::new(-mf, 0.0), z) / ga;
    Ok(PeriodTerm { m, coeff: lead * t * tcap, vanishes: false })
}

/// Linearity: period of `g(x) y^m` for a polynomial `g` of degree <= k = 1.
pub fn period_poly(g: &[Complex64], m: usize, mu: Complex64, s: Complex64) -> Result<PeriodTerm> {
    let mut coeff = ZERO;
    let mut all_vanish = true;
    for (n, &gn) in g.iter().enumerate() {
        if gn == ZERO {
            continue;
        }
        let term = period_model_k1(n, m, mu, s)?;
        coeff += gn * term.coeff;
        all_vanish &= term.vanishes;
    }
    Ok(PeriodTerm { m, coeff, vanishes: all_vanish && coeff == ZERO })
}

/// Bernoulli modulus of the unfolding with `R = r(x) y^d`:
/// the germ `-(1/d) log(1 + 2 pi i d t h^d)` with `t = Per(r y^d)`,
/// expanded through order `N`.
pub fn bernoulli_modulus(
    d: usize,
    r: &[Complex64],
    mu: Complex64,
    s: Complex64,
    n_order: usize,
) -> Result<GermMap> {
    if d == 0 {
        return Err(Error::Argument("bernoulli_modulus: d must be >= 1"));
    }
    let t = period_poly(r, d, mu, s)?.coeff;
    let a = Complex64::new(0.0, 2.0 * PI) * Complex64::new(d as f64, 0.0) * t;
    // -(1/d) log(1 + a h^d) = -(1/d) sum_{j>=1} (-1)^{j+1} a^j h^{dj} / j
    let mut coeffs = vec![ZERO; n_order + 1];
    let mut apow = ONE;
    for j in 1..=n_order / d {
        apow *= a;
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        coeffs[d * j] = Complex64::new(sign / (d as f64 * j as f64), 0.0) * apow;
    }
    // GermMap stores c_1..c_N of h -> sum c_p h^p; here c_1 = 0 is fine
    // because the modulus is an additive germ, not a diffeo.
    Ok(GermMap::from_coeffs(&coeffs[1..]))
}

/// Invert the dominant invariant coefficient: given `phi_d` with
/// `2 pi i Per(r_d x y^d) = phi_d h^d`, recover `r_d`.
pub fn invert_dominant(
    phi_d: Complex64,
    d: usize,
    mu: Complex64,
    s: Complex64,
) -> Result<Complex64> {
    let base = period_model_k1(1, d, mu, s)?;
    if base.vanishes || base.coeff.norm() == 0.0 {
        return Err(Error::Degenerate(
            "invert_dominant: resonance 1 + d mu in Z_{<=0}, period vanishes",
        ));
    }
    Ok(phi_d / (Complex64::new(0.0, 2.0 * PI) * base.coeff))
}
