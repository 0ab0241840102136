//! Real-time dynamics of `x' = e^{i theta} P_eps(x)`: trajectories,
//! separatrices of infinity, root classification, Douady–Sentenac
//! invariants, and numeric weak holonomy.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::cpoly::{root_radius, CPoly};
use crate::series::UnfoldingField;
use crate::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const TAU: f64 = core::f64::consts::TAU;

#[derive(Debug, Clone, PartialEq)]
pub enum Terminal {
    Landed(usize),
    ExitedDisk,
    Homoclinic,
    Budget,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub points: Vec<Complex64>,
    pub terminal: Terminal,
    pub theta: f64,
    pub elapsed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RootType {
    Node,
    Saddle,
    Center,
}

#[derive(Debug, Clone)]
pub struct DSInvariant {
    pub sigma: Vec<usize>,
    pub taus: Vec<Complex64>,
    pub root_types: Vec<RootType>,
    pub homoclinic_partitions: Vec<Vec<usize>>,
}

#[derive(Debug, Clone)]
pub struct IntegrationControls {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    pub max_time: f64,
    pub max_steps: usize,
}

impl IntegrationControls {
    pub fn for_disk(rho: f64) -> Self {
        IntegrationControls {
            rtol: 1e-10,
            atol: 1e-13,
            max_step: rho / 50.0,
            max_time: 1e4,
            max_steps: 2_000_000,
        }
    }
}

/// Landing radius: `1e-3 * max(rho_eps, min pairwise root gap)`, with a
/// unit fallback scale when the configuration is fully degenerate (eps = 0).
pub fn landing_radius(roots: &[Complex64], eps_norm: f64) -> f64 {
    let k = roots.len().saturating_sub(1).max(1);
    let rho = 2.0 * libm::sqrt(k as f64) * eps_norm;
    let mut gap = f64::INFINITY;
    for i in 0..roots.len() {
        for j in i + 1..roots.len() {
            gap = gap.min((roots[i] - roots[j]).norm());
        }
    }
    if !gap.is_finite() {
        gap = 0.0;
    }
    let base = rho.max(gap);
    1e-3 * if base > 1e-9 { base } else { 1.0 }
}

// Dormand-Prince 5(4) Butcher tableau.
const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const DP_B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// One adaptive RK45 step of `x' = f(x)`; returns (new_x, dt_used, dt_next).
pub fn rk45_step<F: Fn(Complex64) -> Complex64>(
    f: &F,
    x: Complex64,
    dt: f64,
    ctl: &IntegrationControls,
) -> (Complex64, f64, f64) {
    let mut h = dt.min(ctl.max_step);
    loop {
        let mut ks = [ZERO; 7];
        for i in 0..7 {
            let mut xi = x;
            for (j, kj) in ks.iter().enumerate().take(i) {
                xi += *kj * (DP_A[i][j] * h);
            }
            let _ = DP_C; // stage times unused for autonomous fields
            ks[i] = f(xi);
        }
        let mut x5 = x;
        let mut x4 = x;
        for i in 0..7 {
            x5 += ks[i] * (DP_B5[i] * h);
            x4 += ks[i] * (DP_B4[i] * h);
        }
        let err = (x5 - x4).norm();
        let tol = ctl.atol + ctl.rtol * x5.norm().max(x.norm());
        if !err.is_finite() || !x5.re.is_finite() || !x5.im.is_finite() {
            // stage values overflowed (finite-time blowup inside the
            // attempted step): reject hard
            h *= 0.1;
            if h <= 1e-15 {
                return (x, h, h);
            }
            continue;
        }
        if err <= tol || h <= 1e-15 {
            let grow = if err > 0.0 {
                0.9 * libm::pow(tol / err, 0.2)
            } else {
                5.0
            };
            let next = (h * grow.clamp(0.2, 5.0)).min(ctl.max_step);
            return (x5, h, next);
        }
        h *= 0.9 * libm::pow(tol / err, 0.2).clamp(0.1, 0.9);
    }
}

/// Integrate `x' = e^{i theta} P(x)` from `x0` until landing at a root,
/// exiting the disk of radius `rho`, detecting a homoclinic return, or
/// exhausting the budget.
pub fn integrate_trajectory(
    p: &CPoly,
    theta: f64,
    x0: Complex64,
    rho: f64,
    ctl: &IntegrationControls,
) -> Result<Trajectory> {
    let roots = p.roots()?;
    let vartheta = Complex64::from_polar(1.0, theta);
    let f = |x: Complex64| vartheta * p.eval(x);
    let land_r = landing_radius(&roots, p.eps_norm());
    let mut x = x0;
    let mut t = 0.0;
    let mut dt = ctl.max_step / 10.0;
    let mut points = vec![x0];
    let mut terminal = Terminal::Budget;
    // homoclinic detection: revisiting a recorded sample with matched
    // direction; the record is decimated when it grows so the scan stays
    // bounded
    let mut record_every = 16usize;
    let mut arclen = 0.0f64;
    let mut visited: Vec<(Complex64, Complex64, f64)> = Vec::new();
    for step in 0..ctl.max_steps {
        // landing check with exponential-decay confirmation: near a root the
        // field is ~linear, so require both proximity and inward velocity
        for (ri, &r) in roots.iter().enumerate() {
            if (x - r).norm() < land_r {
                let v = f(x);
                // moving toward the root (or essentially stalled)
                let inward = (v.conj() * (r - x)).re;
                if inward >= -1e-16 || v.norm() < 1e-12 {
                    terminal = Terminal::Landed(ri);
                    points.push(x);
                    return Ok(Trajectory {
                        points,
                        terminal,
                        theta,
                        elapsed: t,
                    });
                }
            }
        }
        if x.norm() > rho * (1.0 + 1e-9) {
            terminal = Terminal::ExitedDisk;
            break;
        }
        if t > ctl.max_time {
            break;
        }
        let vel = f(x);
        if vel.norm() < 1e-300 {
            return Err(Error::Degenerate("integrate_trajectory: stalled at a multiple root"));
        }
        // scale dt so spatial step is controlled
        let (xn, used, next) = rk45_step(&f, x, dt, ctl);
        // step underflow guard
        if used <= 1e-15 && vel.norm() * used < 1e-18 {
            return Err(Error::Degenerate("integrate_trajectory: step underflow"));
        }
        arclen += (xn - x).norm();
        x = xn;
        t += used;
        dt = next;
        points.push(x);
        if step % record_every == 0 {
            let dir = vel / vel.norm();
            // a genuine return travels a loop much longer than the landing
            // radius; a slow passage near a root barely accumulates arc
            // length, so it never matches
            for &(px, pd, ps) in visited.iter() {
                if (x - px).norm() < land_r
                    && (dir - pd).norm() < 0.05
                    && arclen - ps > 32.0 * land_r
                {
                    terminal = Terminal::Homoclinic;
                    return Ok(Trajectory {
                        points,
                        terminal,
                        theta,
                        elapsed: t,
                    });
                }
            }
            visited.push((x, dir, arclen));
            if visited.len() >= 4096 {
                let half: Vec<_> = visited.iter().copied().step_by(2).collect();
                visited = half;
                record_every *= 2;
            }
        }
    }
    Ok(Trajectory {
        points,
        terminal,
        theta,
        elapsed: t,
    })
}

/// Root type by the sign of `Re(e^{i theta} P'(root))`.
pub fn classify_root(p: &CPoly, root: Complex64, theta: f64) -> RootType {
    let v = Complex64::from_polar(1.0, theta) * p.deriv(root);
    let tol = 1e-12 * v.norm().max(1.0);
    if v.re > tol {
        RootType::Node
    } else if v.re < -tol {
        RootType::Saddle
    } else {
        RootType::Center
    }
}

/// `tau = 2 pi i sum_{r in I} 1/P'(r)` over a subset of root indices.
pub fn ds_tau(p: &CPoly, subset: &[usize]) -> Result<Complex64> {
    let res = p.residues()?;
    let mut s = ZERO;
    for &i in subset {
        if i >= res.len() {
            return Err(Error::Argument("ds_tau: root index out of range"));
        }
        s += res[i];
    }
    Ok(Complex64::new(0.0, TAU) * s)
}

/// `nu(I) = sum_{r in I} 1/P'(r)` (no 2 pi i factor), used by the
/// homoclinic criterion `Re nu(I) = 0`.
pub fn nu_subset(p: &CPoly, subset: &[usize]) -> Result<Complex64> {
    Ok(ds_tau(p, subset)? / Complex64::new(0.0, TAU))
}

/// The 2k separatrices of infinity for `x' = e^{i theta} P(x)`.
///
/// Seeds sit at radius `10 max(1, rho_eps)` on the directions where the
/// leading flow `x' = x^{k+1}` is tangent to the radius (arg x such that
/// x^{k+1}/x is real), alternately attracting/repelling; each is integrated
/// inward in the contracting time direction.
pub fn separatrices_infinity(
    p: &CPoly,
    theta: f64,
    rho: f64,
) -> Result<Vec<Trajectory>> {
    let k = p.k;
    let rr = root_radius(&p.eps);
    if rho < 2.0 * rr {
        return Err(Error::Argument("separatrices: rho must be >= rho_eps"));
    }
    let seed_r = 10.0 * (1.0f64).max(2.0 * libm::sqrt(k as f64) * p.eps_norm());
    let ctl = IntegrationControls {
        max_time: 1e6,
        ..IntegrationControls::for_disk(seed_r)
    };
    let mut out = Vec::with_capacity(2 * k);
    // Asymptotic separatrix directions of x' = e^{i theta} x^{k+1} at
    // infinity: arg x = (l pi - theta)/k. Odd l flows inward in forward
    // time (incoming separatrix); even l is outgoing and is integrated in
    // reversed time. The index l runs in cyclic order around the circle.
    for l in 0..(2 * k) {
        let phi = (core::f64::consts::PI * l as f64 - theta) / k as f64;
        let x0 = Complex64::from_polar(seed_r, phi);
        let incoming = l % 2 == 1;
        let th_eff = if incoming {
            theta
        } else {
            theta + core::f64::consts::PI
        };
        let traj = integrate_trajectory(p, th_eff, x0, seed_r * 1.5, &ctl)?;
        out.push(traj);
    }
    Ok(out)
}

/// Asymptotic direction (angle) of separatrix `l` for angle `theta`.
pub fn separatrix_direction(k: usize, l: usize, theta: f64) -> f64 {
    (core::f64::consts::PI * l as f64 - theta) / k as f64
}

/// Catalan number `C_k = binom(2k, k) / (k+1)`.
pub fn catalan(k: usize) -> u64 {
    let mut c: u128 = 1;
    for i in 0..k as u128 {
        c = c * 2 * (2 * i + 1) / (i + 2);
    }
    c as u64
}

/// All proper nonempty subsets of root indices with `|Re nu(I)| < tol`.
pub fn homoclinic_partitions(p: &CPoly, tol: f64) -> Result<Vec<Vec<usize>>> {
    let res = p.residues()?;
    let n = res.len();
    let mut out = Vec::new();
    if n > 20 {
        return Err(Error::Argument("homoclinic scan: too many roots"));
    }
    for mask in 1..((1usize << n) - 1) {
        let mut s = ZERO;
        let mut subset = Vec::new();
        for (i, &r) in res.iter().enumerate() {
            if mask & (1 << i) != 0 {
                s += r;
                subset.push(i);
            }
        }
        if libm::fabs(s.re) < tol {
            out.push(subset);
        }
    }
    Ok(out)
}

/// Douady–Sentenac invariant at a generic parameter.
///
/// The permutation sigma is extracted from the separating graph: the 2k
/// separatrices of infinity land on the saddle-type roots and cut the big
/// disk into faces; tracing each face pairs the even (incoming) corner
/// sectors at infinity with the odd (outgoing) ones.
pub fn ds_invariant(p: &CPoly, theta: f64, rho: f64) -> Result<DSInvariant> {
    let roots = p.roots()?;
    let k = p.k;
    let types: Vec<RootType> = roots
        .iter()
        .map(|&r| classify_root(p, r, theta))
        .collect();
    if types.iter().any(|t| *t == RootType::Center) {
        return Err(Error::Degenerate(
            "ds_invariant: center-type root (parameter on a bifurcation locus)",
        ));
    }
    let homo = homoclinic_partitions(p, 1e-6)?;
    if !homo.is_empty() {
        return Err(Error::Degenerate(
            "ds_invariant: parameter within tolerance of a homoclinic locus",
        ));
    }
    let seps = separatrices_infinity(p, theta, rho)?;
    // landing roots of the 2k separatrices, in the cyclic order of their
    // asymptotic directions at infinity
    let mut landing: Vec<Option<usize>> = Vec::with_capacity(2 * k);
    for tr in &seps {
        match tr.terminal {
            Terminal::Landed(i) => landing.push(Some(i)),
            _ => landing.push(None),
        }
    }
    if landing.iter().any(|l| l.is_none()) {
        return Err(Error::Numeric {
            what: "ds_invariant: a separatrix failed to land",
            residual: 0.0,
        });
    }
    let landing: Vec<usize> = landing.into_iter().map(|l| l.unwrap()).collect();
    // approach direction of each separatrix at its landing root (used to
    // order the edges of the separating graph around a shared root)
    let mut approach = vec![0.0f64; 2 * k];
    for (l, tr) in seps.iter().enumerate() {
        let r = roots[landing[l]];
        // last sample comfortably off the root
        let mut dir = ZERO;
        for pt in tr.points.iter().rev() {
            if (pt - r).norm() > 1e-9 {
                dir = pt - r;
                break;
            }
        }
        approach[l] = dir.arg();
    }
    let (sigma, taus) = trace_separating_graph(p, &roots, theta, &landing, &approach)?;
    Ok(DSInvariant {
        sigma,
        taus,
        root_types: types,
        homoclinic_partitions: homo,
    })
}

/// Planar face tracing of the separating graph.
///
/// Vertices: the 2k points `v_l` of the big circle at the asymptotic
/// separatrix directions, plus the landing roots. Edges: the circle arcs
/// `v_l -> v_{l+1}` and the separatrices `v_l -> root`. Faces are orbits of
/// `h -> cw_pred(twin(h))` in the counterclockwise rotation system. Each
/// interior face borders exactly two circle arcs (the two paired sectors);
/// the even arc `2j` paired with the odd arc `2m+1` defines `sigma(j) = m`,
/// and the roots on the boundary walk between them give the period subset.
fn trace_separating_graph(
    p: &CPoly,
    roots: &[Complex64],
    theta: f64,
    landing: &[usize],
    approach: &[f64],
) -> Result<(Vec<usize>, Vec<Complex64>)> {
    let k = p.k;
    let n2 = 2 * k;
    let res = p.residues()?;
    // half-edge ids: arc_l fwd = 4l, arc_l bwd = 4l+1, sep_l down = 4l+2,
    // sep_l up = 4l+3
    let twin = |h: usize| h ^ 1;
    // rotation lists (outgoing half-edges in CCW order) per vertex.
    // circle vertices: index l in 0..2k; root vertices: 2k + root index.
    let nverts = n2 + roots.len();
    let mut rot: Vec<Vec<(f64, usize)>> = vec![Vec::new(); nverts];
    for l in 0..n2 {
        let phi = separatrix_direction(k, l, theta);
        // local outgoing directions as offsets from the radial direction
        rot[l].push((normang(phi + core::f64::consts::FRAC_PI_2), 4 * l)); // arc fwd
        rot[l].push((normang(phi + core::f64::consts::PI), 4 * l + 2)); // sep down
        let lm = (l + n2 - 1) % n2;
        rot[l].push((normang(phi - core::f64::consts::FRAC_PI_2), 4 * lm + 1)); // arc bwd
        rot[l].sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    }
    for (l, &ri) in landing.iter().enumerate() {
        rot[n2 + ri].push((normang(approach[l]), 4 * l + 3));
    }
    for v in rot.iter_mut().skip(n2) {
        v.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    }
    let head = |h: usize| -> usize {
        let l = h / 4;
        match h % 4 {
            0 => (l + 1) % n2,
            1 => l,
            2 => n2 + landing[l],
            _ => l,
        }
    };
    let next = |h: usize| -> usize {
        let t = twin(h);
        let v = head(h);
        let list = &rot[v];
        let pos = list
            .iter()
            .position(|&(_, e)| e == t)
            .expect("rotation table inconsistent");
        list[(pos + list.len() - 1) % list.len()].1
    };
    // trace orbits
    let mut seen = vec![false; 4 * n2];
    let mut sigma = vec![usize::MAX; k];
    let mut taus = vec![ZERO; k];
    for start in (0..4 * n2).step_by(4) {
        // only start from forward arcs (interior faces)
        if seen[start] {
            continue;
        }
        let mut orbit = Vec::new();
        let mut h = start;
        loop {
            if seen[h] {
                break;
            }
            seen[h] = true;
            orbit.push(h);
            h = next(h);
        }
        // arcs in this face
        let arcs: Vec<usize> = orbit.iter().filter(|&&e| e % 4 == 0).map(|&e| e / 4).collect();
        if arcs.is_empty() {
            continue; // outer face or dangling component
        }
        if arcs.len() != 2 {
            return Err(Error::Degenerate(
                "ds_invariant: separating graph face does not pair two sectors",
            ));
        }
        let (e, o) = if arcs[0] % 2 == 0 {
            (arcs[0], arcs[1])
        } else {
            (arcs[1], arcs[0])
        };
        if e % 2 != 0 || o % 2 != 1 {
            return Err(Error::Degenerate(
                "ds_invariant: sector pairing is not even/odd alternating",
            ));
        }
        let j = e / 2;
        let m = o / 2; // o = 2m+1
        sigma[j] = m;
        // boundary walk from even arc to odd arc, collecting landed roots
        let pos_e = orbit.iter().position(|&x| x == 4 * e).unwrap();
        let mut wset: Vec<usize> = Vec::new();
        let mut all: Vec<usize> = Vec::new();
        let mut before = true;
        for step in 1..orbit.len() {
            let h = orbit[(pos_e + step) % orbit.len()];
            if h == 4 * o {
                before = false;
                continue;
            }
            if h % 4 == 2 {
                // sep down: visiting root landing[h/4]
                let r = landing[h / 4];
                if !all.contains(&r) {
                    all.push(r);
                }
                if before && !wset.contains(&r) {
                    wset.push(r);
                }
            }
        }
        let sum = |set: &[usize]| -> Complex64 {
            set.iter().map(|&i| res[i]).sum::<Complex64>() * Complex64::new(0.0, TAU)
        };
        let mut tau = sum(&wset);
        if tau.im < 0.0 {
            let comp: Vec<usize> = all.iter().copied().filter(|r| !wset.contains(r)).collect();
            tau = sum(&comp);
        }
        if tau.norm() == 0.0 || tau.im <= 0.0 {
            return Err(Error::Degenerate(
                "ds_invariant: degenerate period on a sector pair",
            ));
        }
        taus[j] = tau;
    }
    if sigma.iter().any(|&s| s == usize::MAX) {
        return Err(Error::Numeric {
            what: "ds_invariant: face tracing did not cover all sectors",
            residual: 0.0,
        });
    }
    Ok((sigma, taus))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveRole {
    GammaPlus,
    GammaMinus,
    Gate,
}

#[derive(Debug, Clone)]
pub struct SampledCurve {
    pub role: CurveRole,
    /// Sector index for boundary curves; gate index for gates.
    pub j: usize,
    /// For boundary curves: from the landing root outward along the inner
    /// trajectory, then along the geometric spiral toward infinity.
    pub points: Vec<Complex64>,
}

/// Resample a polyline so consecutive points differ by less than `step`.
fn densify(points: &[Complex64], step: f64) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(points.len());
    if points.is_empty() {
        return out;
    }
    out.push(points[0]);
    for w in points.windows(2) {
        let gap = (w[1] - w[0]).norm();
        let n = (gap / step).ceil() as usize;
        for t in 1..=n.max(1) {
            out.push(w[0] + (w[1] - w[0]) * (t as f64 / n.max(1) as f64));
        }
    }
    out
}

/// Boundary curves of the squid sectors: for each separatrix of infinity
/// landing at a saddle-type root, the inner trajectory inside the `rho` disk
/// concatenated with a geometric spiral `x_m exp((1 + i nu) t)` extending to
/// large radius, ordered from the root outward.  For `k = 1` a straight gate
/// chord through the midpoint of the two roots (perpendicular to their
/// separation) is appended; for `k >= 2` one such chord per consecutive root
/// pair, a heuristic the caller may replace.
///
/// The decay of realization integrands along the spirals additionally needs
/// `Re mu > nu Im mu`; that condition involves `mu` and is the caller's
/// responsibility.
pub fn squid_boundaries(
    p: &CPoly,
    theta: f64,
    rho: f64,
    nu: f64,
) -> Result<Vec<SampledCurve>> {
    let roots = p.roots()?;
    let seps = separatrices_infinity(p, theta, rho)?;
    let step = rho / 200.0;
    let ctl = IntegrationControls {
        max_time: 1e6,
        ..IntegrationControls::for_disk(rho)
    };
    let mut out = Vec::new();
    // arc endpoints: where each incoming separatrix crosses the rho circle;
    // trajectories seeded just on either side shadow it inward and land at
    // the saddle-type root bounding the sector
    for (l, tr) in seps.iter().enumerate() {
        if l % 2 == 0 {
            continue; // outgoing separatrix: emanates from a node-type root
        }
        let cross = tr
            .points
            .iter()
            .find(|x| x.norm() <= rho)
            .copied()
            .ok_or(Error::Degenerate("squid boundaries: separatrix missed the disk"))?;
        let phi_c = cross.arg();
        for (side, dphi) in [(CurveRole::GammaPlus, 1e-3), (CurveRole::GammaMinus, -1e-3)] {
            let seed = Complex64::from_polar(rho * (1.0 - 1e-9), phi_c + dphi);
            let btr = integrate_trajectory(p, theta, seed, rho * 1.05, &ctl)?;
            let ri = match btr.terminal {
                Terminal::Landed(i) => i,
                Terminal::ExitedDisk => {
                    return Err(Error::Degenerate(
                        "squid boundaries: boundary trajectory escaped; adjust theta",
                    ))
                }
                _ => {
                    return Err(Error::Numeric {
                        what: "squid boundaries: boundary trajectory failed to land",
                        residual: 0.0,
                    })
                }
            };
            // Center covers the multiple-root case (saddle-node at eps = 0)
            if classify_root(p, roots[ri], theta) == RootType::Node {
                return Err(Error::Degenerate(
                    "squid boundaries: boundary landed at a node-type root",
                ));
            }
            // inner part from the root outward, then the geometric spiral
            let mut inner: Vec<Complex64> = btr.points.clone();
            inner.reverse();
            let mut pts = densify(&inner, step);
            let xm = seed;
            let spiral_to = 10.0 * rho.max(1.0);
            let t_end = libm::log(spiral_to / xm.norm());
            let nsp = ((t_end * spiral_to * (1.0 + nu * nu).sqrt()) / step).ceil() as usize;
            for q in 1..=nsp.max(8) {
                let t = t_end * q as f64 / nsp.max(8) as f64;
                pts.push(xm * (Complex64::new(1.0, nu) * t).exp());
            }
            out.push(SampledCurve { role: side, j: l / 2, points: pts });
        }
    }
    if out.is_empty() {
        return Err(Error::Degenerate(
            "squid boundaries: no saddle-type landings (parameter near a bifurcation)",
        ));
    }
    // gate chords between consecutive roots
    let mut sorted = roots.clone();
    crate::cpoly::sort_points(&mut sorted);
    for (g, w) in sorted.windows(2).enumerate() {
        let mid = (w[0] + w[1]) / 2.0;
        let sep = w[1] - w[0];
        if sep.norm() == 0.0 {
            continue;
        }
        let perp = Complex64::new(0.0, 1.0) * sep / sep.norm();
        // clip the chord to the rho disk
        let half = libm::sqrt((rho * rho - mid.norm_sqr()).max(0.0));
        let a = mid - perp * half;
        let b = mid + perp * half;
        out.push(SampledCurve {
            role: CurveRole::Gate,
            j: g,
            points: densify(&[a, mid, b], step),
        });
    }
    Ok(out)
}

fn normang(a: f64) -> f64 {
    let mut a = a % TAU;
    if a < 0.0 {
        a += TAU;
    }
    a
}

/// Numeric weak holonomy: lift the loop `x = x_star e^{2 pi i s dir}`
/// through `dy/ds = 2 pi i dir x B(x,y)/P(x)` and return the final y.
pub fn weak_holonomy(
    field: &UnfoldingField,
    x_star: f64,
    y0: Complex64,
    direction: i32,
) -> Result<Complex64> {
    let rr = root_radius(&field.p.eps);
    if x_star <= rr {
        return Err(Error::Argument("weak_holonomy: circle must enclose all roots"));
    }
    let guard = 1e6 * y0.norm().max(1e-3);
    let k = field.p.k;
    let dir = direction.signum() as f64;
    // B(x,y)/y = 1 + mu x^k + R(x, P^tau y); R evaluated pointwise
    let rhs = |s: f64, y: Complex64| -> Complex64 {
        let x = Complex64::from_polar(x_star, TAU * s * dir);
        let px = field.p.eval(x);
        let mut by = Complex64::new(1.0, 0.0) + field.mu * x.powu(k as u32);
        let ptau = px.powu(field.tau as u32);
        for m in &field.r_monomials {
            by += m.coeff * x.powu(m.i as u32) * (ptau * y).powu(m.n as u32);
        }
        Complex64::new(0.0, TAU * dir) * x * y * by / px
    };
    // RK45 on the non-autonomous ODE in s in [0, 1]
    let mut y = y0;
    let mut s = 0.0f64;
    let mut h = 1e-3f64;
    let ctl = IntegrationControls::for_disk(1.0);
    let mut steps = 0usize;
    while s < 1.0 {
        if steps > 2_000_000 {
            return Err(Error::Numeric {
                what: "weak_holonomy: step budget exhausted",
                residual: 1.0 - s,
            });
        }
        steps += 1;
        h = h.min(1.0 - s);
        // embedded DP step on (s, y)
        let mut ks = [ZERO; 7];
        loop {
            for i in 0..7 {
                let mut yi = y;
                for (j, kj) in ks.iter().enumerate().take(i) {
                    yi += *kj * (DP_A[i][j] * h);
                }
                ks[i] = rhs(s + DP_C[i] * h, yi);
            }
            let mut y5 = y;
            let mut y4 = y;
            for i in 0..7 {
                y5 += ks[i] * (DP_B5[i] * h);
                y4 += ks[i] * (DP_B4[i] * h);
            }
            let err = (y5 - y4).norm();
            let tol = ctl.atol + ctl.rtol * y5.norm().max(y.norm());
            if err <= tol || h <= 1e-14 {
                y = y5;
                s += h;
                let grow = if err > 0.0 {
                    0.9 * libm::pow(tol / err, 0.2)
                } else {
                    5.0
                };
                h *= grow.clamp(0.2, 5.0);
                break;
            }
            h *= 0.9 * libm::pow(tol / err, 0.2).clamp(0.1, 0.9);
        }
        if y.norm() > guard {
            return Err(Error::Numeric {
                what: "weak_holonomy: |y| escaped the guard radius",
                residual: y.norm(),
            });
        }
    }
    Ok(y)
}
