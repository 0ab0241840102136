//! Abstract holonomy on the necklace of squid sectors: the Bernoulli group,
//! gate multipliers, word holonomies, the (c, theta) action on moduli, and
//! the compatibility checker for pairs of necklace systems.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::cpoly::CPoly;
use crate::germ::GermMap;
use crate::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const TAU: f64 = 2.0 * core::f64::consts::PI;

/// `h -> alpha h / (1 + beta h^d)^(1/d)`. Closed under composition and
/// inversion for a fixed index `d`; linear maps (`beta = 0`) belong to every
/// index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BernoulliMap {
    pub d: usize,
    pub alpha: Complex64,
    pub beta: Complex64,
}

impl BernoulliMap {
    pub fn new(d: usize, alpha: Complex64, beta: Complex64) -> Result<Self> {
        if d == 0 {
            return Err(Error::Argument("bernoulli: index must be positive"));
        }
        if alpha.norm() == 0.0 {
            return Err(Error::Argument("bernoulli: alpha must be nonzero"));
        }
        Ok(BernoulliMap { d, alpha, beta })
    }

    pub fn identity(d: usize) -> Self {
        BernoulliMap { d, alpha: ONE, beta: ZERO }
    }

    pub fn is_linear(&self) -> bool {
        self.beta == ZERO
    }
}

fn cpow(z: Complex64, n: usize) -> Complex64 {
    let mut acc = ONE;
    let mut base = z;
    let mut e = n;
    while e > 0 {
        if e & 1 == 1 {
            acc *= base;
        }
        base *= base;
        e >>= 1;
    }
    acc
}

/// `b1` after `b2`: the germ of the result is `b1` composed with `b2`.
pub fn ber_compose(b1: &BernoulliMap, b2: &BernoulliMap) -> Result<BernoulliMap> {
    let d = if b1.is_linear() {
        b2.d
    } else if b2.is_linear() || b2.d == b1.d {
        b1.d
    } else {
        return Err(Error::Argument("bernoulli: mixed nonlinear indices"));
    };
    Ok(BernoulliMap {
        d,
        alpha: b1.alpha * b2.alpha,
        beta: b1.beta * cpow(b2.alpha, d) + b2.beta,
    })
}

pub fn ber_inverse(b: &BernoulliMap) -> BernoulliMap {
    BernoulliMap {
        d: b.d,
        alpha: ONE / b.alpha,
        beta: -b.beta / cpow(b.alpha, b.d),
    }
}

/// Truncated binomial expansion of `alpha h (1 + beta h^d)^(-1/d)` to order `n`.
pub fn ber_to_germ(b: &BernoulliMap, n: usize) -> GermMap {
    let mut c = vec![ZERO; n];
    if n == 0 {
        return GermMap { c };
    }
    // binom(-1/d, t) beta^t at h^(d t + 1)
    let mut term = b.alpha;
    let mut t = 0usize;
    loop {
        let p = b.d * t + 1;
        if p > n {
            break;
        }
        c[p - 1] = term;
        let e = Complex64::new(-1.0 / b.d as f64 - t as f64, 0.0);
        term *= e * b.beta / Complex64::new(t as f64 + 1.0, 0.0);
        t += 1;
        if b.beta == ZERO {
            break;
        }
    }
    GermMap { c }
}

/// Recover `(alpha, beta)` of index `d` from a germ, then verify the whole
/// germ matches to `tol`; returns `None` if the germ is not Bernoulli.
pub fn germ_to_ber(g: &GermMap, d: usize, tol: f64) -> Option<BernoulliMap> {
    let alpha = g.coeff(1);
    if alpha.norm() == 0.0 || d == 0 {
        return None;
    }
    let beta = -Complex64::new(d as f64, 0.0) * g.coeff(d + 1) / alpha;
    let b = BernoulliMap { d, alpha, beta };
    if ber_to_germ(&b, g.order()).dist(g) <= tol {
        Some(b)
    } else {
        None
    }
}

/// A letter of the necklace alphabet: saddle `s_j` or gate `g_j`, with sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Letter {
    pub gate: bool,
    pub j: usize,
    pub inv: bool,
}

impl Letter {
    pub fn inverse(self) -> Self {
        Letter { inv: !self.inv, ..self }
    }
}

/// A freely reduced word in the letters `{s_j^±, g_j^±}`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Word {
    pub letters: Vec<Letter>,
}

impl Word {
    pub fn empty() -> Self {
        Word { letters: Vec::new() }
    }

    /// Builds from raw letters, cancelling adjacent inverse pairs.
    pub fn from_letters(raw: &[Letter]) -> Self {
        let mut stack: Vec<Letter> = Vec::with_capacity(raw.len());
        for &l in raw {
            if stack.last() == Some(&l.inverse()) {
                stack.pop();
            } else {
                stack.push(l);
            }
        }
        Word { letters: stack }
    }

    /// Parses whitespace-separated tokens like `"s0+ g1- s0+"`.
    pub fn parse(text: &str, k: usize) -> Result<Self> {
        let mut raw = Vec::new();
        for tok in text.split_whitespace() {
            let bytes = tok.as_bytes();
            if bytes.len() < 3 {
                return Err(Error::Argument("word: token too short"));
            }
            let gate = match bytes[0] {
                b's' => false,
                b'g' => true,
                _ => return Err(Error::Argument("word: letter must be 's' or 'g'")),
            };
            let inv = match bytes[bytes.len() - 1] {
                b'+' => false,
                b'-' => true,
                _ => return Err(Error::Argument("word: sign must be '+' or '-'")),
            };
            let mid = &tok[1..tok.len() - 1];
            let j: usize = mid
                .parse()
                .map_err(|_| Error::Argument("word: bad sector index"))?;
            if j >= k {
                return Err(Error::Argument("word: sector index out of range"));
            }
            raw.push(Letter { gate, j, inv });
        }
        Ok(Word::from_letters(&raw))
    }

    pub fn tokens(&self) -> String {
        let mut out = String::new();
        for (i, l) in self.letters.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push(if l.gate { 'g' } else { 's' });
            // sector indices stay small; a manual itoa avoids fmt machinery
            let mut digits = [0u8; 20];
            let mut v = l.j;
            let mut len = 0;
            loop {
                digits[len] = b'0' + (v % 10) as u8;
                v /= 10;
                len += 1;
                if v == 0 {
                    break;
                }
            }
            for p in (0..len).rev() {
                out.push(digits[p] as char);
            }
            out.push(if l.inv { '-' } else { '+' });
        }
        out
    }

    /// `self` followed on the right by `other` (reduced).
    pub fn concat(&self, other: &Word) -> Word {
        let mut raw = self.letters.clone();
        raw.extend_from_slice(&other.letters);
        Word::from_letters(&raw)
    }

    pub fn inverse(&self) -> Word {
        let raw: Vec<Letter> = self.letters.iter().rev().map(|l| l.inverse()).collect();
        Word::from_letters(&raw)
    }
}

/// One cell's necklace data: `k` saddle germs `phi_j` (the nonlinear parts),
/// `k` gate multipliers `nu_j`, and the gate pairing permutation.
#[derive(Debug, Clone)]
pub struct NecklaceSystem {
    pub k: usize,
    pub mu: Complex64,
    pub phi: Vec<GermMap>,
    pub nus: Vec<Complex64>,
    pub sigma: Vec<usize>,
}

impl NecklaceSystem {
    pub fn new(
        k: usize,
        mu: Complex64,
        phi: Vec<GermMap>,
        nus: Vec<Complex64>,
        sigma: Vec<usize>,
    ) -> Result<Self> {
        if k == 0 || phi.len() != k || nus.len() != k || sigma.len() != k {
            return Err(Error::Argument("necklace: need k germs, gates and a permutation"));
        }
        if nus.iter().any(|v| v.norm() == 0.0) {
            return Err(Error::Argument("necklace: gate multipliers must be nonzero"));
        }
        let mut seen = vec![false; k];
        for &s in &sigma {
            if s >= k || seen[s] {
                return Err(Error::Argument("necklace: sigma is not a permutation"));
            }
            seen[s] = true;
        }
        Ok(NecklaceSystem { k, mu, phi, nus, sigma })
    }

    /// The germ attached to one positive letter, truncated to order `n`:
    /// `s_j^+ -> h exp(2 pi i mu / k + phi_j(h))`, `g_j^+ -> nu_j h`.
    pub fn letter_germ(&self, l: Letter, n: usize) -> Result<GermMap> {
        if l.j >= self.k {
            return Err(Error::Argument("necklace: letter index out of range"));
        }
        let base = if l.gate {
            GermMap::linear(self.nus[l.j], n)
        } else {
            saddle_germ(self.mu, self.k, &self.phi[l.j], n)
        };
        if l.inv {
            base.inverse()
        } else {
            Ok(base)
        }
    }
}

/// `h exp(2 pi i mu / k + phi(h))` truncated to order `n`; `phi` must vanish
/// at 0 (valuation >= 1 is implicit in the coefficient layout).
pub fn saddle_germ(mu: Complex64, k: usize, phi: &GermMap, n: usize) -> GermMap {
    let lin = (Complex64::new(0.0, TAU) * mu / Complex64::new(k as f64, 0.0)).exp();
    // exp(phi) as a polynomial with constant term 1, degree n-1
    let m = n.saturating_sub(1);
    let mut e = vec![ZERO; m + 1];
    e[0] = ONE;
    let mut pw = vec![ZERO; m + 1]; // phi^t
    pw[0] = ONE;
    for t in 1..=m {
        let mut nxt = vec![ZERO; m + 1];
        for a in 0..=m {
            if pw[a] == ZERO {
                continue;
            }
            for b in 1..=(m - a).min(phi.order()) {
                nxt[a + b] += pw[a] * phi.coeff(b);
            }
        }
        pw = nxt;
        let inv_fact = 1.0 / (1..=t).map(|x| x as f64).product::<f64>();
        for a in 0..=m {
            e[a] += pw[a] * Complex64::new(inv_fact, 0.0);
        }
    }
    let mut c = vec![ZERO; n];
    for p in 1..=n {
        c[p - 1] = lin * e[p - 1];
    }
    GermMap { c }
}

/// Holonomy of a reduced word: the leftmost letter is the outermost map, so
/// concatenation of words maps to composition of germs in the same order.
pub fn word_holonomy(w: &Word, sys: &NecklaceSystem, n: usize) -> Result<GermMap> {
    let mut acc = GermMap::identity(n);
    for &l in w.letters.iter().rev() {
        let g = sys.letter_germ(l, n)?;
        acc = g.compose(&acc);
    }
    Ok(acc)
}

/// Ramification factor of the first integral at a simple root:
/// `exp(-2 pi i (1 + mu x^k) / P'(x))`.
pub fn ramification(p: &CPoly, mu: Complex64, root: Complex64) -> Result<Complex64> {
    let dp = p.deriv(root);
    if dp.norm() <= 1e-14 * p.eps_norm().max(1.0) {
        return Err(Error::Degenerate("ramification: multiple root"));
    }
    let xk = cpow(root, p.k);
    Ok((-Complex64::new(0.0, TAU) * (ONE + mu * xk) / dp).exp())
}

/// Gate multipliers from the per-root ramification products.
///
/// For `k = 1` no crossing structure is needed; the two returned values are
/// the gate factor of the same gate seen in the two holonomy presentations
/// over the cell's self-overlap (saddle side first), which always satisfy
/// `nu1 nu0 e^{2 pi i mu} = 1`.  For `k >= 2` supply one crossing word per
/// root of `P`; the system is solved in log space and verified
/// multiplicatively to `1e-9`.
pub fn gate_multipliers(
    p: &CPoly,
    mu: Complex64,
    crossings: Option<&[Word]>,
) -> Result<Vec<Complex64>> {
    let mut roots = p.roots()?;
    crate::cpoly::sort_points(&mut roots);
    let e_mu = (Complex64::new(0.0, TAU) * mu).exp();
    if p.k == 1 {
        if crossings.is_some() {
            return Err(Error::Argument("gate multipliers: k = 1 infers its crossings"));
        }
        let r0 = ramification(p, mu, roots[0])?;
        return Ok(vec![r0 / e_mu, ONE / r0]);
    }
    let words = crossings
        .ok_or(Error::Argument("gate multipliers: k >= 2 needs a crossing structure"))?;
    if words.len() != roots.len() {
        return Err(Error::Argument("gate multipliers: one crossing word per root"));
    }
    let k = p.k;
    // normal equations for log nu_j; branch ambiguity is absorbed by the
    // multiplicative verification below
    let mut ata = vec![vec![0.0f64; k]; k];
    let mut atb = vec![ZERO; k];
    let saddle_log = Complex64::new(0.0, TAU) * mu / Complex64::new(k as f64, 0.0);
    for (r, w) in words.iter().enumerate() {
        let mut row = vec![0.0f64; k];
        let mut rhs = ramification(p, mu, roots[r])?.ln();
        for l in &w.letters {
            if l.j >= k {
                return Err(Error::Argument("gate multipliers: letter index out of range"));
            }
            let sgn = if l.inv { -1.0 } else { 1.0 };
            if l.gate {
                row[l.j] += sgn;
            } else {
                rhs -= saddle_log * sgn;
            }
        }
        for a in 0..k {
            for b in 0..k {
                ata[a][b] += row[a] * row[b];
            }
            atb[a] += Complex64::new(row[a], 0.0) * rhs;
        }
    }
    let logs = solve_real_spd(&mut ata, &mut atb)
        .ok_or(Error::Argument("gate multipliers: crossing structure does not determine the gates"))?;
    let nus: Vec<Complex64> = logs.iter().map(|l| l.exp()).collect();
    // verify each product equation multiplicatively
    for (r, w) in words.iter().enumerate() {
        let mut prod = ONE;
        for l in &w.letters {
            let f = if l.gate {
                nus[l.j]
            } else {
                saddle_log.exp()
            };
            prod *= if l.inv { ONE / f } else { f };
        }
        let target = ramification(p, mu, roots[r])?;
        if (prod - target).norm() > 1e-9 * target.norm().max(1.0) {
            return Err(Error::Numeric {
                what: "gate multipliers: inconsistent crossing structure",
                residual: (prod - target).norm(),
            });
        }
    }
    Ok(nus)
}

/// Gaussian elimination for a small real SPD system with complex right side.
fn solve_real_spd(a: &mut [Vec<f64>], b: &mut [Complex64]) -> Option<Vec<Complex64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| {
            a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap()
        })?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = a[row][col] / a[col][col];
            for c2 in col..n {
                a[row][c2] -= f * a[col][c2];
            }
            b[row] -= Complex64::new(f, 0.0) * b[col];
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// The `(c, theta)` action on a modulus tuple: index shift by `theta` and
/// precomposition with `h -> c h`.
pub fn act_modulus(c: Complex64, theta: usize, m: &[GermMap]) -> Result<Vec<GermMap>> {
    if c.norm() == 0.0 {
        return Err(Error::Argument("act: c must be nonzero"));
    }
    let k = m.len();
    if k == 0 {
        return Ok(Vec::new());
    }
    let mut out = Vec::with_capacity(k);
    for j in 0..k {
        let src = &m[(j + theta) % k];
        let mut cp = ONE;
        let coeffs: Vec<Complex64> = src
            .c
            .iter()
            .map(|&v| {
                cp *= c;
                v * cp
            })
            .collect();
        out.push(GermMap { c: coeffs });
    }
    Ok(out)
}

/// Outcome of the compatibility check between two necklace systems.
#[derive(Debug, Clone, PartialEq)]
pub enum Compatibility {
    /// The tangent-to-identity conjugacy `delta` with
    /// `delta^{-1} o psi_A[w] o delta = psi_B[w]` for every generator.
    Compatible(GermMap),
    /// First order and generator index where the triangular system breaks.
    Incompatible { order: usize, word: usize },
}

/// Solves for `delta = h + O(h^2)` order by order; at resonant orders the
/// generators' equations are stacked and solved jointly by least squares
/// with consistency threshold `1e-9`.
///
/// Both systems read the same generator words.  When the two systems encode
/// the same loops with different words (the two presentations over a cell's
/// self-overlap), use [`check_compatibility_pairs`] with the translated
/// word attached to each generator.
pub fn check_compatibility(
    sys_a: &NecklaceSystem,
    sys_b: &NecklaceSystem,
    generators: &[Word],
    n: usize,
) -> Result<Compatibility> {
    let pairs: Vec<(Word, Word)> =
        generators.iter().map(|w| (w.clone(), w.clone())).collect();
    check_compatibility_pairs(sys_a, sys_b, &pairs, n)
}

/// Like [`check_compatibility`], but each generator carries its own word per
/// system: solves `delta^{-1} o psi_A[w_a] o delta = psi_B[w_b]`.
pub fn check_compatibility_pairs(
    sys_a: &NecklaceSystem,
    sys_b: &NecklaceSystem,
    generators: &[(Word, Word)],
    n: usize,
) -> Result<Compatibility> {
    if generators.is_empty() {
        return Err(Error::Argument("compatibility: need at least one generator"));
    }
    let mut fs = Vec::with_capacity(generators.len());
    let mut gs = Vec::with_capacity(generators.len());
    for (wa, wb) in generators {
        fs.push(word_holonomy(wa, sys_a, n)?);
        gs.push(word_holonomy(wb, sys_b, n)?);
    }
    // multipliers must agree before anything else
    for (idx, (f, g)) in fs.iter().zip(&gs).enumerate() {
        if (f.coeff(1) - g.coeff(1)).norm() > 1e-9 * f.coeff(1).norm().max(1.0) {
            return Ok(Compatibility::Incompatible { order: 1, word: idx });
        }
    }
    let mut delta = GermMap::identity(n);
    for p in 2..=n {
        // residual of psi_A[w] o delta = delta o psi_B[w] at order p with
        // delta_p = 0; the unknown enters as (lambda - lambda^p) delta_p
        let mut num = ZERO;
        let mut den = 0.0f64;
        let mut eqs = Vec::with_capacity(generators.len());
        for (f, g) in fs.iter().zip(&gs) {
            let lam = f.coeff(1);
            let cw = lam - cpow(lam, p);
            let rw = -(f.compose(&delta).coeff(p) - delta.compose(g).coeff(p));
            num += cw.conj() * rw;
            den += cw.norm_sqr();
            eqs.push((cw, rw));
        }
        let dp = if den > 1e-18 { num / Complex64::new(den, 0.0) } else { ZERO };
        for (idx, (cw, rw)) in eqs.iter().enumerate() {
            let resid = (cw * dp - rw).norm();
            if resid > 1e-9 * rw.norm().max(1.0) {
                return Ok(Compatibility::Incompatible { order: p, word: idx });
            }
        }
        delta.c[p - 1] = dp;
    }
    Ok(Compatibility::Compatible(delta))
}
