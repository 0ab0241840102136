//! Arbitrary-precision complex arithmetic on MPFR floats and the
//! Pochhammer-contour period oracle for k = 1.
//!
//! The closed-form Gamma route lives in the core crate; this module is the
//! independent cross-check: direct quadrature of x^n (x-s)^{mA-1} (x+s)^{mB-1}
//! along commutator-equivalent loops with continuous branch tracking.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rug::float::Round;
use rug::ops::Pow;
use rug::Float;

#[derive(Debug, Clone)]
pub struct MpComplex {
    pub re: Float,
    pub im: Float,
}

impl MpComplex {
    pub fn new(prec: u32) -> Self {
        MpComplex { re: Float::new(prec), im: Float::new(prec) }
    }

    pub fn from_f64(prec: u32, re: f64, im: f64) -> Self {
        MpComplex { re: Float::with_val(prec, re), im: Float::with_val(prec, im) }
    }

    pub fn from_c64(prec: u32, z: Complex64) -> Self {
        Self::from_f64(prec, z.re, z.im)
    }

    pub fn prec(&self) -> u32 {
        self.re.prec()
    }

    pub fn to_c64(&self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    pub fn add(&self, o: &Self) -> Self {
        MpComplex {
            re: Float::with_val(self.prec(), &self.re + &o.re),
            im: Float::with_val(self.prec(), &self.im + &o.im),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        MpComplex {
            re: Float::with_val(self.prec(), &self.re - &o.re),
            im: Float::with_val(self.prec(), &self.im - &o.im),
        }
    }

    pub fn neg(&self) -> Self {
        MpComplex {
            re: Float::with_val(self.prec(), -&self.re),
            im: Float::with_val(self.prec(), -&self.im),
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let p = self.prec();
        let re = Float::with_val(p, &self.re * &o.re) - Float::with_val(p, &self.im * &o.im);
        let im = Float::with_val(p, &self.re * &o.im) + Float::with_val(p, &self.im * &o.re);
        MpComplex { re, im }
    }

    pub fn scale(&self, f: &Float) -> Self {
        MpComplex {
            re: Float::with_val(self.prec(), &self.re * f),
            im: Float::with_val(self.prec(), &self.im * f),
        }
    }

    pub fn div(&self, o: &Self) -> Self {
        let p = self.prec();
        let d = Float::with_val(p, o.re.clone().square() + o.im.clone().square());
        let re = (Float::with_val(p, &self.re * &o.re) + Float::with_val(p, &self.im * &o.im)) / &d;
        let im = (Float::with_val(p, &self.im * &o.re) - Float::with_val(p, &self.re * &o.im)) / &d;
        MpComplex { re: Float::with_val(p, re), im: Float::with_val(p, im) }
    }

    pub fn norm(&self) -> Float {
        Float::with_val(self.prec(), self.re.clone().square() + self.im.clone().square()).sqrt()
    }

    pub fn arg(&self) -> Float {
        // atan2(im, re)
        self.im.clone().atan2(&self.re)
    }

    pub fn exp(&self) -> Self {
        let r = self.re.clone().exp();
        let (sin, cos) = self.im.clone().sin_cos(Float::new(self.prec()));
        MpComplex { re: Float::with_val(self.prec(), &r * &cos), im: Float::with_val(self.prec(), &r * &sin) }
    }

    /// Principal logarithm.
    pub fn ln(&self) -> Self {
        MpComplex { re: self.norm().ln(), im: self.arg() }
    }

    pub fn powu(&self, n: usize) -> Self {
        let mut acc = MpComplex::from_f64(self.prec(), 1.0, 0.0);
        let mut base = self.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }
}

type GlTable = Arc<(Vec<Float>, Vec<Float>)>;

fn gl_cache() -> &'static Mutex<HashMap<(usize, u32), GlTable>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, u32), GlTable>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Gauss-Legendre nodes and weights on [-1, 1] at the given precision,
/// by Newton refinement of the Chebyshev-based seed. Cached.
pub fn gauss_legendre(n: usize, prec: u32) -> GlTable {
    if let Some(t) = gl_cache().lock().unwrap().get(&(n, prec)) {
        return t.clone();
    }
    let pi = Float::with_val(prec, rug::float::Constant::Pi);
    let mut xs = Vec::with_capacity(n);
    let mut ws = Vec::with_capacity(n);
    let legendre = |x: &Float| -> (Float, Float) {
        // returns (P_n(x), P_n'(x))
        let mut p0 = Float::with_val(prec, 1.0);
        let mut p1 = x.clone();
        for j in 2..=n {
            let jf = j as f64;
            let p2 = (Float::with_val(prec, x * &p1) * (2.0 * jf - 1.0)
                - Float::with_val(prec, &p0 * (jf - 1.0)))
                / jf;
            p0 = p1;
            p1 = Float::with_val(prec, p2);
        }
        // P' from the standard identity
        let num = Float::with_val(prec, x * &p1) - &p0;
        let den = Float::with_val(prec, x.clone().square() - 1.0);
        let dp = num * n as f64 / den;
        (p1, Float::with_val(prec, dp))
    };
    for i in 1..=n {
        let seed = (std::f64::consts::PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
        let mut x = Float::with_val(prec, seed);
        let _ = &pi;
        loop {
            let (p, dp) = legendre(&x);
            let dx = p / dp;
            x -= &dx;
            if dx.clone().abs() < Float::with_val(prec, Float::parse("1e-4").unwrap()).pow((prec as f64 / 13.0) as u32) || dx.is_zero() {
                // two more polishing steps after reaching rough target
                for _ in 0..2 {
                    let (p, dp) = legendre(&x);
                    x -= p / dp;
                }
                break;
            }
        }
        let (_, dp) = legendre(&x);
        let w = Float::with_val(prec, 2.0)
            / (Float::with_val(prec, 1.0 - x.clone().square()) * dp.clone().square());
        xs.push(x);
        ws.push(w);
    }
    let t: GlTable = Arc::new((xs, ws));
    gl_cache().lock().unwrap().insert((n, prec), t.clone());
    t
}

/// A path piece parametrized over t in [0, 1].
enum Piece {
    Seg { z0: MpComplex, z1: MpComplex, k: usize },
    Circ { c: MpComplex, rr: Float, th0: Float, th1: Float, k: usize },
}

impl Piece {
    fn subdiv(&self) -> usize {
        match self {
            Piece::Seg { k, .. } => *k,
            Piece::Circ { k, .. } => *k,
        }
    }

    /// (z(t), dz/dt) at parameter t.
    fn eval(&self, t: &Float) -> (MpComplex, MpComplex) {
        match self {
            Piece::Seg { z0, z1, .. } => {
                let d = z1.sub(z0);
                (z0.add(&d.scale(t)), d)
            }
            Piece::Circ { c, rr, th0, th1, .. } => {
                let p = t.prec();
                let span = Float::with_val(p, th1 - th0);
                let th = Float::with_val(p, th0 + Float::with_val(p, &span * t));
                let e = MpComplex { re: Float::new(p), im: th }.exp();
                let z = c.add(&e.scale(rr));
                let dz = MpComplex {
                    re: Float::with_val(p, -&e.im),
                    im: e.re.clone(),
                }
                .scale(&Float::with_val(p, rr * &span));
                (z, dz)
            }
        }
    }
}

struct Layout {
    a: MpComplex,
    b: MpComplex,
    la: Vec<Piece>,
    lb: Vec<Piece>,
    l1: MpComplex,
    l2: MpComplex,
    alpha: MpComplex,
    beta: MpComplex,
    s: MpComplex,
}

/// Canonical sector argument: arg s shifted into [pi/4, 9pi/4).
fn arg_sector(s: &MpComplex) -> Float {
    let prec = s.prec();
    let pi = Float::with_val(prec, rug::float::Constant::Pi);
    let mut a = s.arg();
    let lo = Float::with_val(prec, &pi / 4.0) - Float::with_val(prec, 1e-12);
    while a < lo {
        a += Float::with_val(prec, 2.0 * pi.clone());
    }
    a
}

fn make_layout(m: usize, mu: Complex64, s_val: Complex64, prec: u32) -> Layout {
    let one = MpComplex::from_f64(prec, 1.0, 0.0);
    let s = MpComplex::from_c64(prec, s_val);
    let mu = MpComplex::from_c64(prec, mu);
    let two_s = s.scale(&Float::with_val(prec, 2.0));
    let mus = mu.mul(&s);
    let big_a = one.add(&mus).div(&two_s);
    let big_b = one.sub(&mus).div(&two_s).neg();
    let mf = Float::with_val(prec, m as f64);
    let a = big_a.scale(&mf).sub(&one);
    let b = big_b.scale(&mf).sub(&one);
    let th = arg_sector(&s);
    let pi = Float::with_val(prec, rug::float::Constant::Pi);
    let rr = Float::with_val(prec, s.norm() * 0.4);
    let ang = |k: f64| Float::with_val(prec, &th + Float::with_val(prec, &pi * k));
    let on_circle = |c: &MpComplex, phi: Float| -> MpComplex {
        c.add(&MpComplex { re: Float::new(prec), im: phi }.exp().scale(&rr))
    };
    let e1 = on_circle(&s, ang(1.0));
    let e1b = on_circle(&s, ang(3.0));
    let e2 = on_circle(&s.neg(), ang(0.0));
    let e2b = on_circle(&s.neg(), ang(2.0));
    let zero = MpComplex::new(prec);
    let la = vec![
        Piece::Seg { z0: zero.clone(), z1: e1, k: 2 },
        Piece::Circ { c: s.clone(), rr: rr.clone(), th0: ang(1.0), th1: ang(3.0), k: 8 },
        Piece::Seg { z0: e1b, z1: zero.clone(), k: 2 },
    ];
    let lb = vec![
        Piece::Seg { z0: zero.clone(), z1: e2, k: 2 },
        Piece::Circ { c: s.neg(), rr: rr.clone(), th0: ang(0.0), th1: ang(2.0), k: 8 },
        Piece::Seg { z0: e2b, z1: zero, k: 2 },
    ];
    let ln_abs_s = s.norm().ln();
    let l1 = MpComplex { re: ln_abs_s.clone(), im: ang(1.0) };
    let l2 = MpComplex { re: ln_abs_s, im: th };
    let two_pi_i = MpComplex { re: Float::new(prec), im: Float::with_val(prec, 2.0 * pi) };
    let alpha = two_pi_i.mul(&big_a.scale(&mf)).exp();
    let beta = two_pi_i.mul(&big_b.scale(&mf)).exp();
    Layout { a, b, la, lb, l1, l2, alpha, beta, s }
}

/// Integrate `z^n exp(a L1(z) + b L2(z)) dz` along the path, where L1, L2
/// are continuous determinations of log(z -+ s) pinned to (l1, l2) at the
/// path start and advanced across sub-pieces by principal logs of endpoint
/// ratios.
fn trace(n: usize, lay: &Layout, path: &[Piece], prec: u32) -> MpComplex {
    let mut l1 = lay.l1.clone();
    let mut l2 = lay.l2.clone();
    let mut total = MpComplex::new(prec);
    // convergence target: relative 2^-(prec-30) per sub-piece
    let tol = Float::with_val(prec, 2.0).pow(-(prec as i32 - 30));
    for piece in path {
        let k = piece.subdiv();
        for kp in 0..k {
            let t0 = Float::with_val(prec, kp as f64 / k as f64);
            let t1 = Float::with_val(prec, (kp + 1) as f64 / k as f64);
            let (z0, _) = piece.eval(&t0);
            let f0 = z0.sub(&lay.s);
            let g0 = z0.add(&lay.s);
            let integrand = |t: &Float| -> MpComplex {
                let (z, dz) = piece.eval(t);
                let r1 = z.sub(&lay.s).div(&f0).ln();
                let r2 = z.add(&lay.s).div(&g0).ln();
                let g = lay.a.mul(&l1.add(&r1)).add(&lay.b.mul(&l2.add(&r2)));
                z.powu(n).mul(&g.exp()).mul(&dz)
            };
            // adaptive GL: double the node count until stable
            let mut prev: Option<MpComplex> = None;
            let mut val = MpComplex::new(prec);
            for &nn in &[64usize, 128, 256, 512] {
                let tbl = gauss_legendre(nn, prec);
                let mut acc = MpComplex::new(prec);
                let half = Float::with_val(prec, &t1 - &t0) / 2.0;
                let half = Float::with_val(prec, half);
                let mid = Float::with_val(prec, &t0 + &t1) / 2.0;
                let mid = Float::with_val(prec, mid);
                for (x, w) in tbl.0.iter().zip(tbl.1.iter()) {
                    let t = Float::with_val(prec, &mid + Float::with_val(prec, &half * x));
                    acc = acc.add(&integrand(&t).scale(w));
                }
                val = acc.scale(&half);
                if let Some(p) = prev {
                    let diff = val.sub(&p).norm();
                    let scl = val.norm().max(&Float::with_val(prec, 1e-300));
                    if diff < Float::with_val(prec, &tol * &scl) {
                        break;
                    }
                }
                prev = Some(val.clone());
            }
            total = total.add(&val);
            // advance the branch pins to the sub-piece end
            let (z1, _) = piece.eval(&t1);
            l1 = l1.add(&z1.sub(&lay.s).div(&f0).ln());
            l2 = l2.add(&z1.add(&lay.s).div(&g0).ln());
        }
    }
    total
}

/// Working precision for the oracle: the integrand grows like
/// exp(2 pi m (|Im A| + |Im B|)), all of which cancels in the final
/// combination, plus slack.
pub fn oracle_precision(m: usize, mu: Complex64, s: Complex64) -> u32 {
    let a = (1.0 + mu * s) / (2.0 * s);
    let b = -(1.0 - mu * s) / (2.0 * s);
    let budget_digits = 0.8686 * std::f64::consts::PI * m as f64 * (a.im.abs() + b.im.abs());
    let dps = 40.0 + budget_digits + 60.0;
    (dps * 3.33).ceil() as u32 + 16
}

/// Period of `x^n y^m` for the k = 1 model, by Pochhammer-style contour
/// quadrature in arbitrary precision:
/// `per = (i m / 2 pi) [(1 - beta) I_A - (1 - alpha) I_B] / (alpha (1 - beta))`
/// with the degenerate limit `per = (i m / 2 pi) I_A` when alpha = beta = 1.
pub fn period_numeric_k1(n: usize, m: usize, mu: Complex64, s: Complex64) -> Complex64 {
    let prec = oracle_precision(m, mu, s);
    let lay = make_layout(m, mu, s, prec);
    let one = MpComplex::from_f64(prec, 1.0, 0.0);
    let pi = Float::with_val(prec, rug::float::Constant::Pi);
    let norm = MpComplex {
        re: Float::new(prec),
        im: Float::with_val(prec, m as f64),
    }
    .div(&MpComplex { re: Float::with_val(prec, 2.0 * pi), im: Float::new(prec) });
    let den = lay.alpha.mul(&one.sub(&lay.beta));
    let ia = trace(n, &lay, &lay.la, prec);
    if den.norm() < 1e-10 {
        // alpha = beta = 1: the commutator normalization degenerates and the
        // period reduces to the single A-loop (a residue)
        return norm.mul(&ia).to_c64();
    }
    let ib = trace(n, &lay, &lay.lb, prec);
    let q = one.sub(&lay.beta).mul(&ia).sub(&one.sub(&lay.alpha).mul(&ib));
    norm.mul(&q.div(&den)).to_c64()
}
