//! Acceptance suite: one test per criterion, each ending in a single
//! PASS line with its measured figure of merit.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

use unfolding_core::cpoly::{build_p, eps_norm, theta_action, CPoly};
use unfolding_core::dynamics::{catalan, ds_invariant, ds_tau, squid_boundaries, weak_holonomy};
use unfolding_core::germ::GermMap;
use unfolding_core::necklace::{
    act_modulus, ber_compose, ber_inverse, ber_to_germ, check_compatibility,
    check_compatibility_pairs, germ_to_ber, saddle_germ, BernoulliMap, Compatibility,
    NecklaceSystem, Word,
};
use unfolding_core::normalform::{formal_invariants, solve_center_manifold, solve_cohomological};
use unfolding_core::period::{
    bernoulli_modulus, invert_dominant, period_model_k1, period_model_k1_limit, period_poly,
};
use unfolding_core::series::{lie_derivative, RMonomial, TSeries, UnfoldingField};

use unfolding_lab::glue::{
    annulus_norm_prime, cauchy_heine_pair, cousin_residual, norm_sup, realize_iteration,
    savelev_iterate, synthesize_r, GlueConfig, SectorFunction,
};
use unfolding_lab::mp::period_numeric_k1;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const TAU: f64 = std::f64::consts::TAU;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn rand_c(rng: &mut ChaCha8Rng, radius: f64) -> Complex64 {
    let r = radius * rng.gen::<f64>().sqrt();
    let a = TAU * rng.gen::<f64>();
    Complex64::from_polar(r, a)
}

// --- criterion 1 -----------------------------------------------------------

#[test]
fn criterion_01_period_cross_route() {
    let start = Instant::now();
    let mus = [ZERO, c(0.3, 0.1)];
    let ss = [
        Complex64::from_polar(0.2, std::f64::consts::FRAC_PI_2),
        Complex64::from_polar(0.1, std::f64::consts::PI),
        Complex64::from_polar(0.05, 1.5 * std::f64::consts::PI),
    ];
    let mut worst = 0.0f64;
    for &mu in &mus {
        for &s in &ss {
            for m in 1..=2usize {
                for n in 0..=2usize {
                    let closed = period_model_k1(n, m, mu, s).unwrap();
                    let numeric = period_numeric_k1(n, m, mu, s);
                    if closed.vanishes {
                        assert!(
                            numeric.norm() < 1e-8,
                            "vanishing cell (n={n}, m={m}) numeric {numeric}"
                        );
                        continue;
                    }
                    let scale = closed.coeff.norm().max(numeric.norm());
                    let rel = (closed.coeff - numeric).norm() / scale;
                    assert!(
                        rel <= 1e-6,
                        "cell n={n} m={m} mu={mu} s={s}: rel {rel:e}"
                    );
                    worst = worst.max(rel);
                }
            }
        }
    }
    let dt = start.elapsed().as_secs_f64();
    assert!(dt < 60.0, "grid took {dt:.1} s");
    println!("PASS 1: period cross-route, worst rel err {worst:.2e} in {dt:.1} s");
}

// --- criterion 2 -----------------------------------------------------------

#[test]
fn criterion_02_vanishing_and_continuity() {
    // vanishing: n + m mu in Z_{<=0}
    let cases = [
        (0usize, 1usize, ZERO),
        (0, 2, ZERO),
        (1, 1, c(-1.0, 0.0)),
        (1, 2, c(-1.0, 0.0)),
        (2, 1, c(-3.0, 0.0)),
    ];
    let s = Complex64::from_polar(0.1, std::f64::consts::PI);
    for &(n, m, mu) in &cases {
        let p = period_model_k1(n, m, mu, s).unwrap();
        assert!(p.vanishes && p.coeff == ZERO, "({n},{m},{mu}) should vanish");
        let numeric = period_numeric_k1(n, m, mu, s);
        // scale: a neighbouring non-vanishing cell
        let scale = period_model_k1(n + 1, m, mu, s).unwrap().coeff.norm().max(1.0);
        assert!(
            numeric.norm() <= 1e-8 * scale,
            "numeric {:.2e} vs scale {scale:.2e}",
            numeric.norm()
        );
    }
    // continuity at the origin along arg s = pi
    let s_small = Complex64::from_polar(1e-3, std::f64::consts::PI);
    let mut worst = 0.0f64;
    for &(n, m, mu) in &[(1usize, 1usize, ZERO), (2, 1, ZERO), (1, 1, c(0.3, 0.1))] {
        let lim = period_model_k1_limit(n, m, mu).unwrap().coeff;
        let val = period_model_k1(n, m, mu, s_small).unwrap().coeff;
        let gap = (val - lim).norm();
        assert!(gap <= 1e-3, "({n},{m}) |per(s) - per(0)| = {gap:e}");
        worst = worst.max(gap);
    }
    println!("PASS 2: vanishing criterion and s -> 0 continuity, worst gap {worst:.2e}");
}

// --- criterion 3 -----------------------------------------------------------

#[test]
fn criterion_03_model_holonomy() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for trial in 0..20 {
        let k = 1 + (trial % 2);
        let eps: Vec<Complex64> = (0..k).map(|_| rand_c(&mut rng, 0.2)).collect();
        let mu = rand_c(&mut rng, 0.4);
        let p = build_p(k, &eps).unwrap();
        let field = UnfoldingField::model(p, mu);
        let rr = unfolding_core::cpoly::root_radius(&eps);
        let x_star = (2.0 * rr).max(1.0);
        let y0 = c(1e-3, 0.0);
        let y1 = weak_holonomy(&field, x_star, y0, 1).unwrap();
        let defect = (y1 / y0 - (c(0.0, TAU) * mu).exp()).norm();
        assert!(defect <= 1e-9, "trial {trial}: defect {defect:e}");
        worst = worst.max(defect);
    }
    println!("PASS 3: model weak holonomy = e^(2 pi i mu), worst defect {worst:.2e}");
}

// --- criterion 4 -----------------------------------------------------------

/// Closed-form holonomy data of the Bernoulli field R = coef x y^d around
/// |x| = x_star: the y-holonomy is y -> e^{2 pi i mu} y (1 + beta y^d)^{-1/d}
/// from the linear ODE in w = y^{-d}; returns beta = Q / Lambda.
fn bernoulli_closed_beta(
    d: usize,
    coef: Complex64,
    mu: Complex64,
    s: Complex64,
    x_star: f64,
) -> Complex64 {
    let roots = [s, -s];
    let ar: Vec<Complex64> = roots.iter().map(|&r| (ONE + mu * r) / (2.0 * r)).collect();
    let df = d as f64;
    // composite Gauss-Legendre nodes on [0,1]
    let (gx, gw) = gl32();
    let panels = 24usize;
    let mut ts = vec![0.0f64];
    let mut ws = vec![0.0f64];
    for p in 0..panels {
        let a = p as f64 / panels as f64;
        let h = 1.0 / panels as f64;
        for (x, w) in gx.iter().zip(gw.iter()) {
            ts.push(a + h * (0.5 + 0.5 * x));
            ws.push(0.5 * h * w);
        }
    }
    ts.push(1.0);
    ws.push(0.0);
    // continuous A(t) = sum_r A_r log(x(t) - root_r) along the loop
    let x_of = |t: f64| Complex64::from_polar(x_star, TAU * t);
    let mut aval = vec![ZERO; ts.len()];
    let mut prev = x_of(0.0);
    let mut acc = ZERO;
    for (i, &t) in ts.iter().enumerate() {
        let z = x_of(t);
        for (r, &root) in roots.iter().enumerate() {
            acc += ar[r] * ((z - root) / (prev - root)).ln();
        }
        prev = z;
        aval[i] = acc;
    }
    let a1 = *aval.last().unwrap();
    // sanity: the full-loop increment is 2 pi i mu
    assert!((a1 - c(0.0, TAU) * mu).norm() < 1e-10, "A(1) = {a1}");
    // Q = -d Lambda Int e^{d A(t)} b(t) dt, b = 2 pi i coef x^2 / P
    let lambda = (-df * a1).exp();
    let mut integral = ZERO;
    for i in 0..ts.len() {
        let z = x_of(ts[i]);
        let b = c(0.0, TAU) * coef * z * z / (z * z - s * s);
        integral += (df * aval[i]).exp() * b * ws[i];
    }
    let q = -df * lambda * integral;
    q / lambda
}

/// 32-point Gauss-Legendre nodes/weights on [-1, 1] (f64).
fn gl32() -> (Vec<f64>, Vec<f64>) {
    let n = 32usize;
    let mut xs = Vec::new();
    let mut ws = Vec::new();
    for i in 1..=n {
        let mut x = (std::f64::consts::PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_f64(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_f64(n, x);
        xs.push(x);
        ws.push(2.0 / ((1.0 - x * x) * dp * dp));
    }
    (xs, ws)
}

fn legendre_f64(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    (p1, n as f64 * (x * p1 - p0) / (x * x - 1.0))
}

#[test]
fn criterion_04_bernoulli_two_route() {
    let mu = c(0.3, 0.0);
    let s = c(0.0, 0.8);
    let coef = c(0.05, 0.02);
    let x_star = 2.0;
    let p = build_p(1, &[-s * s]).unwrap();
    let alpha_mult = (c(0.0, TAU) * mu).exp();
    let mut worst_ode = 0.0f64;
    let mut worst_germ = 0.0f64;
    for d in 1..=2usize {
        let mut field = UnfoldingField::model(p.clone(), mu);
        field.r_monomials = vec![RMonomial { i: 1, n: d, coeff: coef }];
        let beta = bernoulli_closed_beta(d, coef, mu, s, x_star);
        // route check at a concrete fiber point
        let y0 = c(8e-3, 3e-3);
        let y_ode = weak_holonomy(&field, x_star, y0, 1).unwrap();
        let y_cf = alpha_mult * y0 * (ONE + beta * y0.powu(d as u32)).powc(-ONE / d as f64);
        let rel = (y_ode - y_cf).norm() / y_cf.norm();
        assert!(rel <= 1e-8, "d={d}: ODE vs closed holonomy rel {rel:e}");
        worst_ode = worst_ode.max(rel);
        // ODE-extracted germ through order d+3 (Fourier on a fiber circle)
        let n_ord = d + 3;
        let m_pts = 32usize;
        let r0 = 0.02;
        let mut coeffs = vec![ZERO; n_ord];
        let holos: Vec<Complex64> = (0..m_pts)
            .map(|j| {
                let y = Complex64::from_polar(r0, TAU * j as f64 / m_pts as f64);
                weak_holonomy(&field, x_star, y, 1).unwrap()
            })
            .collect();
        for p_ord in 1..=n_ord {
            let mut acc = ZERO;
            for (j, &h) in holos.iter().enumerate() {
                let y = Complex64::from_polar(r0, TAU * j as f64 / m_pts as f64);
                acc += h * (-Complex64::new(0.0, 1.0) * (p_ord as f64) * y.arg()).exp();
            }
            coeffs[p_ord - 1] = acc / m_pts as f64 / r0.powi(p_ord as i32);
        }
        let ode_germ = GermMap::from_coeffs(&coeffs);
        // necklace prediction: saddle map of the Bernoulli modulus, pushed to
        // the y-chart by the linear leaf coordinate h = E y at the section
        let phi = bernoulli_modulus(d, &[ZERO, coef], mu, s, n_ord).unwrap();
        let saddle = saddle_germ(mu, 1, &phi, n_ord);
        let l_star = (c(x_star, 0.0) - s).ln() * ((ONE + mu * s) / (2.0 * s))
            + (c(x_star, 0.0) + s).ln() * ((ONE - mu * s) / (-2.0 * s));
        let e_star = (-l_star).exp();
        let chart = GermMap::linear(e_star, n_ord);
        let chart_inv = GermMap::linear(ONE / e_star, n_ord);
        let predicted = chart_inv.compose(&saddle).compose(&chart);
        let mut gap = 0.0f64;
        for p_ord in 1..=n_ord {
            let a = ode_germ.coeff(p_ord);
            let b = predicted.coeff(p_ord);
            gap = gap.max((a - b).norm() / a.norm().max(1.0));
        }
        assert!(
            gap <= 1e-6,
            "d={d}: saddle-map vs ODE germ gap {gap:e}\n ode {:?}\n pred {:?}\n beta_cf {beta}",
            ode_germ,
            predicted
        );
        worst_germ = worst_germ.max(gap);
    }
    println!(
        "PASS 4: Bernoulli two-route, holonomy rel {worst_ode:.2e}, germ gap {worst_germ:.2e}"
    );
}

// --- criterion 5 -----------------------------------------------------------

#[test]
fn criterion_05_douady_sentenac() {
    assert_eq!(
        (1..=4).map(catalan).collect::<Vec<_>>(),
        vec![1, 2, 5, 14]
    );
    // tau against the numeric contour integral of dx/P
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for trial in 0..100 {
        let k = 1 + trial % 3;
        let eps: Vec<Complex64> = (0..k).map(|_| rand_c(&mut rng, 0.3)).collect();
        let p = build_p(k, &eps).unwrap();
        let all: Vec<usize> = (0..=k).collect();
        let tau = ds_tau(&p, &all).unwrap();
        let rad = 2.0 * unfolding_core::cpoly::root_radius(&eps).max(1.0);
        let m = 512usize;
        let mut num = ZERO;
        for t in 0..m {
            let z = Complex64::from_polar(rad, TAU * t as f64 / m as f64);
            num += z / p.eval(z);
        }
        num *= c(0.0, TAU) / m as f64;
        let gap = (tau - num).norm();
        assert!(gap <= 1e-9, "trial {trial}: tau gap {gap:e}");
        worst = worst.max(gap);
    }
    // distinct sigma counts over a seeded eps sweep
    for (k, expect, tries) in [(2usize, 2usize, 90usize), (3, 5, 240)] {
        let mut seen: Vec<Vec<usize>> = Vec::new();
        let mut rng = ChaCha8Rng::seed_from_u64(50 + k as u64);
        for _ in 0..tries {
            let eps: Vec<Complex64> = (0..k).map(|_| rand_c(&mut rng, 0.4)).collect();
            let p = match build_p(k, &eps) {
                Ok(p) => p,
                Err(_) => continue,
            };
            if let Ok(ds) = ds_invariant(&p, 0.0, 2.0) {
                if !seen.contains(&ds.sigma) {
                    seen.push(ds.sigma);
                }
            }
        }
        assert_eq!(seen.len(), expect, "k={k}: sigmas {seen:?}");
    }
    // root localization
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    for _ in 0..50 {
        let k = 1 + rng.gen_range(0..3usize);
        let eps: Vec<Complex64> = (0..k).map(|_| rand_c(&mut rng, 0.5)).collect();
        let p = build_p(k, &eps).unwrap();
        let bound = (k as f64).sqrt() * eps_norm(&eps) + 1e-9;
        for r in p.roots().unwrap() {
            assert!(r.norm() <= bound, "root {r} outside {bound}");
        }
    }
    println!("PASS 5: Douady-Sentenac data, worst tau gap {worst:.2e}, sigma counts 2/5");
}

// --- criterion 6 -----------------------------------------------------------

#[test]
fn criterion_06_formal_solvers() {
    // cohomological residual on RHS in the ideal (P, y)
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (nx, ny) = (8usize, 4usize);
    let mut worst = 0.0f64;
    for trial in 0..50 {
        let k = 1 + trial % 2;
        let eps: Vec<Complex64> = (0..k).map(|_| rand_c(&mut rng, 0.3)).collect();
        let mu = rand_c(&mut rng, 0.5);
        let p = build_p(k, &eps).unwrap();
        let field = UnfoldingField::model(p.clone(), mu);
        // G = P a(x) + y b(x, y)
        let mut g = TSeries::zero(nx, ny);
        let a: Vec<Complex64> = (0..=3).map(|_| rand_c(&mut rng, 1.0)).collect();
        g = g.add(&TSeries::from_x_poly(&p.coeffs, nx, ny).mul(&TSeries::from_x_poly(&a, nx, ny)));
        for i in 0..=2usize {
            for n in 1..=2usize {
                g = g.add(&TSeries::monomial(i, n, rand_c(&mut rng, 1.0), nx, ny));
            }
        }
        let (f, obs) = solve_cohomological(&field, &g).unwrap();
        assert!(obs.iter().all(|o| o.norm() < 1e-12), "obstruction {obs:?}");
        // residual of X.F - G through the shared truncation
        let ax = TSeries::from_x_poly(&p.coeffs, nx, ny);
        let ay = TSeries::monomial(0, 1, ONE, nx, ny)
            .add(&TSeries::monomial(k, 1, mu, nx, ny));
        let resid = lie_derivative(&ax, &ay, &f).sub(&g);
        let mut rmax = 0.0f64;
        // X.F raises x-degree by k: compare below the truncation boundary
        for i in 0..=nx.saturating_sub(k + 1) {
            for j in 0..=ny {
                rmax = rmax.max((resid.coeff(i, j)).norm());
            }
        }
        let scale = g.max_coeff().max(1.0);
        assert!(rmax <= 1e-12 * scale, "trial {trial}: residual {rmax:e}");
        worst = worst.max(rmax / scale);
    }
    // Euler series: x^2 y' = x - y gives a_m = (-1)^{m+1} (m-1)!
    let nxx = 10;
    let ax = TSeries::monomial(2, 0, ONE, nxx, 2);
    let ay = TSeries::monomial(1, 0, ONE, nxx, 2).add(&TSeries::monomial(0, 1, -ONE, nxx, 2));
    let sol = solve_center_manifold(&ax, &ay, nxx).unwrap();
    let mut fact = 1.0f64;
    for m in 1..=8usize {
        if m > 1 {
            fact *= (m - 1) as f64;
        }
        let expect = if m % 2 == 1 { fact } else { -fact };
        assert!(
            (sol.coeff(m, 0) - c(expect, 0.0)).norm() < 1e-9 * fact,
            "a_{m} = {:?} vs {expect}",
            sol.coeff(m, 0)
        );
    }
    // tau-twist shift of the formal invariant at eps = 0
    for k in 1..=3usize {
        let p = build_p(k, &vec![ZERO; k]).unwrap();
        for tau in 1..=2usize {
            let field = UnfoldingField::model(p.clone(), c(0.3, 0.1)).tau_twisted(tau);
            let inv = formal_invariants(&field, 3 * (k + 1)).unwrap();
            let expect = c(0.3, 0.1) + c((tau * (k + 1)) as f64, 0.0);
            assert!((inv.mu - expect).norm() < 1e-12, "k={k} tau={tau}");
        }
    }
    println!("PASS 6: formal solvers, worst ideal residual {worst:.2e}, Euler + tau-shift exact");
}

// --- criterion 7 -----------------------------------------------------------

#[test]
fn criterion_07_savelev_solver() {
    let cfg = GlueConfig::default();
    let kc = cfg.k_const();
    let mut probes: Vec<SectorFunction> = Vec::new();
    for p in 1..=2i32 {
        probes.push(SectorFunction::monomial(p, 1, ONE, cfg.ny));
        probes.push(SectorFunction::monomial(-p, 1, ONE, cfg.ny));
    }
    let mut mixed = SectorFunction::zero(-1, 3, cfg.ny);
    mixed.c[0][0] = c(0.5, 0.0);
    mixed.c[2][0] = c(0.5, 0.0);
    probes.push(mixed);
    let psi_probe = SectorFunction::monomial(0, 1, c(0.1, 0.05), cfg.ny);
    let mut worst = 0.0f64;
    for phi in &probes {
        let (f0, finf) = cauchy_heine_pair(phi, &psi_probe, &cfg).unwrap();
        let res = cousin_residual(phi, &psi_probe, &f0, &finf, &cfg);
        assert!(res <= 1e-7, "Cousin residual {res:e}");
        worst = worst.max(res);
        // estim_F with measured norms
        let phin = annulus_norm_prime(phi, &cfg);
        let psin = norm_sup(&psi_probe, cfg.rho_inf, cfg.r, cfg.m_nodes)
            .max(norm_sup(&psi_probe, 1.0 / cfg.rho0, cfg.r, cfg.m_nodes));
        let bound = cfg.r * kc * phin * psin.exp();
        for (f, rad) in [(&finf, cfg.rho_inf), (&f0, 1.0 / cfg.rho0)] {
            let sup = norm_sup(f, rad, cfg.r, cfg.m_nodes);
            assert!(
                sup <= 1.01 * bound,
                "estim_F violated: {sup:e} > {bound:e}"
            );
        }
    }
    // stabilization of the fixed-point iteration
    let phi = SectorFunction::monomial(1, 1, ONE, cfg.ny);
    let rep = savelev_iterate(&phi, &cfg).unwrap();
    for w in rep.first_changed_degree.windows(2) {
        assert!(w[1] >= w[0], "stabilization trace {:?}", rep.first_changed_degree);
    }
    assert!(rep.first_changed_degree.len() >= 2);
    let (f0, finf) = cauchy_heine_pair(&phi, &rep.psi_inf, &cfg).unwrap();
    let res = cousin_residual(&phi, &rep.psi_inf, &f0, &finf, &cfg);
    assert!(res <= 1e-7);
    println!("PASS 7: Savelev solver, worst Cousin residual {worst:.2e}, bounds + stabilization hold");
}

// --- criterion 8 -----------------------------------------------------------

#[test]
fn criterion_08_realization() {
    let start = Instant::now();
    let mu = c(1.2, 0.0);
    let s = c(0.0, 1.0);
    let p = build_p(1, &[-s * s]).unwrap();
    let contours = squid_boundaries(&p, std::f64::consts::FRAC_PI_2, 2.0, 0.0).unwrap();
    let cfg = GlueConfig {
        r: 0.02,
        eta: 0.2,
        ny: 5,
        tol: 1e-3,
        ..GlueConfig::default()
    };
    let mut worst_dom = 0.0f64;
    let mut worst_other = 0.0f64;
    for d in 1..=1usize {
        for &alpha in &[c(0.08, 0.0), c(0.05, 0.04)] {
            // m = -(1/d) log(1 - alpha h^d)
            let mut coeffs = vec![ZERO; cfg.ny];
            let mut ap = ONE;
            for j in 1..=cfg.ny / d {
                ap *= alpha;
                coeffs[d * j - 1] = ap / (d as f64 * j as f64);
            }
            let m = GermMap::from_coeffs(&coeffs);
            let real = realize_iteration(&m, mu, s, &cfg, &contours).unwrap();
            assert!(
                real.transition_residual <= cfg.tol,
                "transition residual {:e}",
                real.transition_residual
            );
            let synth = synthesize_r(&real, &p, mu, &cfg).unwrap();
            assert!(synth.fit_residual <= cfg.tol, "fit residual {:e}", synth.fit_residual);
            let expected = invert_dominant(-m.coeff(d), d, mu, s).unwrap();
            let got = synth.rows[d - 1][1];
            let rel = (got - expected).norm() / expected.norm();
            assert!(
                rel <= 1e-2,
                "d={d} alpha={alpha}: dominant {got} vs {expected} (rel {rel:e})"
            );
            worst_dom = worst_dom.max(rel);
            for (n, row) in synth.rows.iter().enumerate() {
                for (i, &v) in row.iter().enumerate() {
                    if n + 1 == d && i == 1 {
                        continue;
                    }
                    assert!(
                        v.norm() <= 1e-3,
                        "non-Bernoulli coeff x^{i} y^{} = {v}",
                        n + 1
                    );
                    worst_other = worst_other.max(v.norm());
                }
            }
        }
    }
    let dt = start.elapsed().as_secs_f64();
    assert!(dt < 600.0, "realization took {dt:.0} s");
    println!(
        "PASS 8: realization, dominant rel {worst_dom:.2e}, spurious coeffs <= {worst_other:.2e}, {dt:.0} s"
    );
}

// --- criterion 9 -----------------------------------------------------------

#[test]
fn criterion_09_compatibility() {
    let n = 10usize;
    let mu = c(0.21, -0.05);
    let alpha = (c(0.0, TAU) * mu).exp();
    let gens = [Word::parse("s0+", 1).unwrap(), Word::parse("g0+ s0+", 1).unwrap()];
    let mk_phi = |coeffs: &[Complex64]| GermMap::from_coeffs(coeffs);
    let phi = mk_phi(&[c(0.1, 0.02), c(-0.03, 0.05), c(0.02, 0.0)]);
    let sys = |phi: GermMap, nu: Complex64| {
        NecklaceSystem::new(1, mu, vec![phi], vec![nu], vec![0]).unwrap()
    };
    let nu = c(0.8, 0.3);
    // identical systems: delta = identity
    match check_compatibility(&sys(phi.clone(), nu), &sys(phi.clone(), nu), &gens, n).unwrap() {
        Compatibility::Compatible(delta) => {
            assert!(delta.dist(&GermMap::identity(n)) < 1e-12);
        }
        other => panic!("identical systems reported {other:?}"),
    }
    // order-2 perturbation of phi on one side
    let mut phi2 = phi.clone();
    phi2.c[0] += c(1e-2, 0.0);
    match check_compatibility(&sys(phi.clone(), nu), &sys(phi2, nu), &gens, n).unwrap() {
        Compatibility::Incompatible { order, .. } => assert_eq!(order, 2),
        other => panic!("perturbed system reported {other:?}"),
    }
    // Bernoulli pair: the two presentations over the self-overlap
    let d = 2usize;
    let nu_a = c(0.8, 0.3);
    let nu_b = ONE / (nu_a * alpha);
    let beta_a = c(0.4, -0.2);
    let cpow = |z: Complex64, n: usize| z.powu(n as u32);
    let b = beta_a / (cpow(nu_a * alpha, d) - ONE);
    let beta_b = b * (ONE - ONE / cpow(nu_a, d));
    let mk = |beta: Complex64, nu: Complex64| {
        let mut v = vec![ZERO; n];
        let mut bt = ONE;
        for t in 1..=(n / d) {
            bt *= beta;
            let sign = if t % 2 == 1 { -1.0 } else { 1.0 };
            v[d * t - 1] = c(sign / (d as f64 * t as f64), 0.0) * bt;
        }
        sys(GermMap::from_coeffs(&v), nu)
    };
    let sys_a = mk(beta_a, nu_a);
    let sys_b = mk(beta_b, nu_b);
    let pairs = [
        (Word::parse("g0+ s0+", 1).unwrap(), Word::parse("g0-", 1).unwrap()),
        (Word::parse("g0-", 1).unwrap(), Word::parse("g0+ s0+", 1).unwrap()),
    ];
    match check_compatibility_pairs(&sys_a, &sys_b, &pairs, n).unwrap() {
        Compatibility::Compatible(delta) => {
            let db = germ_to_ber(&delta, d, 1e-8).expect("delta should be in Ber(d)");
            assert!((db.alpha - ONE).norm() < 1e-12);
            assert!((db.beta - b).norm() < 1e-8);
        }
        other => panic!("Bernoulli pair reported {other:?}"),
    }
    println!("PASS 9: compatibility checker (identity, order-2 rejection, Bernoulli pairs)");
}

// --- criterion 10 ----------------------------------------------------------

#[test]
fn criterion_10_group_laws() {
    // composition law, worked example d = 2: (1,1) o (2,3) = (2,7)
    let b1 = BernoulliMap::new(2, ONE, ONE).unwrap();
    let b2 = BernoulliMap::new(2, c(2.0, 0.0), c(3.0, 0.0)).unwrap();
    let b12 = ber_compose(&b1, &b2).unwrap();
    assert_eq!((b12.alpha, b12.beta), (c(2.0, 0.0), c(7.0, 0.0)));
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let n = 12usize;
    for _ in 0..20 {
        let d = 1 + rng.gen_range(0..3usize);
        let b = BernoulliMap::new(d, rand_c(&mut rng, 1.0) + c(1.5, 0.0), rand_c(&mut rng, 0.8))
            .unwrap();
        let inv = ber_inverse(&b);
        let e = ber_compose(&b, &inv).unwrap();
        assert!((e.alpha - ONE).norm() < 1e-12 && e.beta.norm() < 1e-12);
        // germ of the composition = composition of germs
        let b2 = BernoulliMap::new(d, rand_c(&mut rng, 1.0) + c(0.5, 0.0), rand_c(&mut rng, 0.8))
            .unwrap();
        let lhs = ber_to_germ(&ber_compose(&b, &b2).unwrap(), n);
        let rhs = ber_to_germ(&b, n).compose(&ber_to_germ(&b2, n));
        assert!(lhs.dist(&rhs) < 1e-12);
    }
    // (c, theta) action is a group action on tuples of germs
    for k in 1..=3usize {
        let germs: Vec<GermMap> = (0..k)
            .map(|_| {
                GermMap::from_coeffs(&[
                    rand_c(&mut rng, 0.5),
                    rand_c(&mut rng, 0.5),
                    rand_c(&mut rng, 0.5),
                ])
            })
            .collect();
        let cc = rand_c(&mut rng, 0.5) + c(1.0, 0.0);
        let once = act_modulus(cc, 1 % k, &germs).unwrap();
        let twice = act_modulus(cc, 1 % k, &once).unwrap();
        let direct = act_modulus(cc * cc, 2 % k, &germs).unwrap();
        for (a, b) in twice.iter().zip(&direct) {
            assert!(a.dist(b) < 1e-12);
        }
        // theta-action on eps has order k
        let eps: Vec<Complex64> = (0..k).map(|_| rand_c(&mut rng, 0.5)).collect();
        let mut cur = eps.clone();
        for _ in 0..k {
            cur = theta_action(1, &cur);
        }
        for (a, b) in cur.iter().zip(&eps) {
            assert!((a - b).norm() < 1e-12, "theta-action order defect");
        }
    }
    println!("PASS 10: Bernoulli and moduli-action group laws exact to 1e-12");
}
