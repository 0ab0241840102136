use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde_json::json;

use unfolding_core::cpoly::build_p;
use unfolding_core::dynamics::{
    classify_root, ds_invariant, separatrices_infinity, squid_boundaries, weak_holonomy,
    CurveRole, RootType,
};
use unfolding_core::germ::GermMap;
use unfolding_core::necklace::{
    check_compatibility, gate_multipliers, Compatibility, NecklaceSystem, Word,
};
use unfolding_core::normalform::formal_invariants;
use unfolding_core::period::{bernoulli_modulus, period_model_k1, PeriodTerm};
use unfolding_core::Error as CoreError;

use unfolding_lab::glue::{
    annulus_norm_prime, cauchy_heine_pair, cousin_residual, norm_sup, realize_iteration,
    savelev_iterate, synthesize_r, GlueConfig, SectorFunction,
};
use unfolding_lab::mp::period_numeric_k1;
use unfolding_lab::spec::FieldSpec;
use unfolding_lab::svg::SvgDoc;

#[derive(Parser)]
#[command(name = "unfolding-lab", version, about = "saddle-node unfolding toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// JSON field specification
    #[arg(long)]
    spec: PathBuf,
    /// output directory (default: current directory)
    #[arg(long)]
    out: Option<PathBuf>,
    /// worker threads for grid sweeps
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// seed for randomized sampling
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Cmd {
    /// separating graph, Douady-Sentenac data and a phase portrait
    Dynamics(Common),
    /// period of x^n y^m by both routes
    Period {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        m: usize,
        /// sweep the built-in (n, m) grid instead of a single monomial
        #[arg(long)]
        grid: bool,
    },
    /// formal invariants of the spec
    Normalize(Common),
    /// numeric weak holonomy against the model multiplier
    Holonomy(Common),
    /// Bernoulli modulus germ of the spec's R
    Bernoulli(Common),
    /// Savelev Cousin solver diagnostics on the standard probe
    Cousin(Common),
    /// k = 1 realization of a Bernoulli modulus (experimental)
    Realize {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        d: usize,
        #[arg(long, default_value_t = 0.05)]
        alpha_re: f64,
        #[arg(long, default_value_t = 0.0)]
        alpha_im: f64,
    },
    /// compatibility of the necklace systems of two specs
    Compat {
        #[command(flatten)]
        common: Common,
        /// second spec; defaults to --spec (self-comparison)
        #[arg(long)]
        spec_b: Option<PathBuf>,
    },
}

/// exit-code contract: 2 = argument, 3 = numeric, 4 = degenerate
fn code_of(err: &CoreError) -> u8 {
    match err {
        CoreError::Argument(_) => 2,
        CoreError::Numeric { .. } => 3,
        CoreError::Degenerate(_) => 4,
    }
}

fn tol_default(fallback: f64) -> f64 {
    std::env::var("UNFOLDING_LAB_TOL")
        .ok()
        .and_then(|v| v.parse::<f64>().ok())
        .filter(|t| *t > 0.0)
        .unwrap_or(fallback)
}

fn cvec(z: Complex64) -> serde_json::Value {
    json!([z.re, z.im])
}

fn load_spec(path: &Path) -> Result<FieldSpec, CoreError> {
    let text = fs::read_to_string(path)
        .map_err(|_| CoreError::Argument("cannot read spec file"))?;
    let spec = FieldSpec::parse(&text)?;
    spec.validate()?;
    Ok(spec)
}

fn write_out(common: &Common, name: &str, content: &str) -> Result<(), CoreError> {
    let dir = common.out.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(|_| CoreError::Argument("cannot create out dir"))?;
    fs::write(dir.join(name), content)
        .map_err(|_| CoreError::Argument("cannot write output file"))?;
    Ok(())
}

fn emit(common: &Common, name: &str, value: &serde_json::Value) -> Result<(), CoreError> {
    let text = serde_json::to_string_pretty(value).expect("json") + "\n";
    write_out(common, name, &text)?;
    println!("{}", text.trim_end());
    Ok(())
}

fn s_of_spec(spec: &FieldSpec) -> Result<Complex64, CoreError> {
    if spec.k != 1 {
        return Err(CoreError::Argument("this subcommand is k = 1 scope"));
    }
    Ok((-Complex64::new(spec.eps[0][0], spec.eps[0][1])).sqrt())
}

fn cmd_dynamics(common: &Common) -> Result<(), CoreError> {
    let spec = load_spec(&common.spec)?;
    let field = spec.to_field()?;
    let p = &field.p;
    if unfolding_core::cpoly::in_discriminant(&spec.eps_vec(), 1e-9)? {
        return Err(CoreError::Degenerate("dynamics: eps lies on the discriminant"));
    }
    let theta = spec.dynamics.theta_profile.first().copied().unwrap_or(0.0);
    let rho = spec.rho();
    let ds = ds_invariant(p, theta, rho)?;
    let roots = p.roots()?;
    let types: Vec<&str> = ds
        .root_types
        .iter()
        .map(|t| match t {
            RootType::Saddle => "saddle",
            RootType::Node => "node",
            RootType::Center => "center",
        })
        .collect();
    let value = json!({
        "sigma": ds.sigma,
        "tau": ds.taus.iter().map(|t| cvec(*t)).collect::<Vec<_>>(),
        "roots": roots.iter().map(|r| cvec(*r)).collect::<Vec<_>>(),
        "root_types": types,
        "homoclinic_partitions": ds.homoclinic_partitions,
        "theta": theta,
        "rho": rho,
        "seed": common.seed,
    });
    emit(common, "dynamics.json", &value)?;
    // portrait: separatrices, squid boundaries, roots
    let mut doc = SvgDoc::new(1.6 * rho);
    let seps = separatrices_infinity(p, theta, rho)?;
    for tr in &seps {
        doc.polyline(&tr.points, "#336699");
    }
    if let Ok(curves) = squid_boundaries(p, theta, rho, 0.0) {
        for c in &curves {
            let color = match c.role {
                CurveRole::Gate => "#999933",
                _ => "#993333",
            };
            doc.polyline(&c.points, color);
        }
    }
    for &r in &roots {
        doc.marker(r, "black");
    }
    write_out(common, "portrait.svg", &doc.finish())
}

fn period_entry(n: usize, m: usize, mu: Complex64, s: Complex64) -> Result<serde_json::Value, CoreError> {
    let closed: PeriodTerm = period_model_k1(n, m, mu, s)?;
    let numeric = period_numeric_k1(n, m, mu, s);
    let scale = closed.coeff.norm().max(numeric.norm()).max(1e-300);
    Ok(json!({
        "n": n,
        "m": m,
        "closed": cvec(closed.coeff),
        "numeric": cvec(numeric),
        "vanishes": closed.vanishes,
        "rel_err": (closed.coeff - numeric).norm() / scale,
    }))
}

fn cmd_period(common: &Common, n: usize, m: usize, grid: bool) -> Result<(), CoreError> {
    let spec = load_spec(&common.spec)?;
    let mu = spec.mu();
    let s = s_of_spec(&spec)?;
    if !unfolding_core::period::in_sector(s) {
        return Err(CoreError::Argument("period: s outside the sector pi/4 < arg s < 7pi/4"));
    }
    let value = if grid {
        let cells: Vec<(usize, usize)> =
            (0..3).flat_map(|nn| (1..3).map(move |mm| (nn, mm))).collect();
        let entries = parallel_map(common.jobs, cells, |(nn, mm)| period_entry(nn, mm, mu, s))?;
        json!({ "mu": cvec(mu), "s": cvec(s), "grid": entries, "seed": common.seed })
    } else {
        let e = period_entry(n, m, mu, s)?;
        json!({ "mu": cvec(mu), "s": cvec(s), "grid": [e], "seed": common.seed })
    };
    emit(common, "period.json", &value)
}

/// chunked parallel map preserving input order (pure work items only)
fn parallel_map<T, U, F>(jobs: usize, items: Vec<T>, f: F) -> Result<Vec<U>, CoreError>
where
    T: Send,
    U: Send,
    F: Fn(T) -> Result<U, CoreError> + Sync,
{
    if jobs <= 1 {
        return items.into_iter().map(f).collect();
    }
    let n = items.len();
    let mut out: Vec<Option<U>> = (0..n).map(|_| None).collect();
    let chunk = n.div_ceil(jobs).max(1);
    let mut batches: Vec<Vec<(usize, T)>> = Vec::new();
    let mut it = items.into_iter().enumerate();
    loop {
        let batch: Vec<(usize, T)> = it.by_ref().take(chunk).collect();
        if batch.is_empty() {
            break;
        }
        batches.push(batch);
    }
    let mut err: Option<CoreError> = None;
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for batch in batches {
            let f = &f;
            handles.push(scope.spawn(move || {
                batch
                    .into_iter()
                    .map(|(i, t)| f(t).map(|u| (i, u)))
                    .collect::<Result<Vec<_>, _>>()
            }));
        }
        for h in handles {
            match h.join().expect("worker panicked") {
                Ok(pairs) => {
                    for (i, u) in pairs {
                        out[i] = Some(u);
                    }
                }
                Err(e) => err = Some(e),
            }
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    Ok(out.into_iter().map(|o| o.expect("slot filled")).collect())
}

fn cmd_normalize(common: &Common) -> Result<(), CoreError> {
    let spec = load_spec(&common.spec)?;
    let field = spec.to_field()?;
    let inv = formal_invariants(&field, spec.truncation.nx)?;
    let value = json!({
        "mu": cvec(inv.mu),
        "u": inv.u.iter().map(|z| cvec(*z)).collect::<Vec<_>>(),
        "seed": common.seed,
    });
    emit(common, "normalize.json", &value)
}

fn cmd_holonomy(common: &Common) -> Result<(), CoreError> {
    let spec = load_spec(&common.spec)?;
    let field = spec.to_field()?;
    let rr = unfolding_core::cpoly::root_radius(&spec.eps_vec());
    let x_star = (2.0 * rr).max(1.0);
    let y0 = Complex64::new(1e-4, 0.0);
    let y1 = weak_holonomy(&field, x_star, y0, 1)?;
    let multiplier = y1 / y0;
    let expected = (Complex64::new(0.0, std::f64::consts::TAU) * spec.mu()).exp();
    let value = json!({
        "x_star": x_star,
        "multiplier": cvec(multiplier),
        "model_multiplier": cvec(expected),
        "defect": (multiplier - expected).norm(),
        "seed": common.seed,
    });
    emit(common, "holonomy.json", &value)
}

fn cmd_bernoulli(common: &Common) -> Result<(), CoreError> {
    let spec = load_spec(&common.spec)?;
    let mu = spec.mu();
    let s = s_of_spec(&spec)?;
    let d = spec.r.first().map(|m| m.n).unwrap_or(1);
    let mut r_poly = vec![Complex64::new(0.0, 0.0); spec.k + 1];
    for m in &spec.r {
        if m.n == d {
            r_poly[m.i] += Complex64::new(m.c[0], m.c[1]);
        }
    }
    let germ = bernoulli_modulus(d, &r_poly, mu, s, spec.truncation.ny.max(2 * d))?;
    let coeffs: Vec<_> = (1..=germ.order()).map(|p| cvec(germ.coeff(p))).collect();
    let value = json!({
        "d": d,
        "modulus_coeffs": coeffs,
        "seed": common.seed,
    });
    emit(common, "bernoulli.json", &value)
}

fn cmd_cousin(common: &Common) -> Result<(), CoreError> {
    let spec = load_spec(&common.spec)?;
    let cfg = GlueConfig {
        tol: tol_default(1e-8),
        ny: spec.truncation.ny.max(2),
        ..GlueConfig::default()
    };
    // standard probe phi = v (u + 1/u)/2
    let mut phi = SectorFunction::zero(-1, 3, cfg.ny);
    phi.c[0][0] = Complex64::new(0.5, 0.0);
    phi.c[2][0] = Complex64::new(0.5, 0.0);
    let rep = savelev_iterate(&phi, &cfg)?;
    let (f0, finf) = cauchy_heine_pair(&phi, &rep.psi_inf, &cfg)?;
    let residual = cousin_residual(&phi, &rep.psi_inf, &f0, &finf, &cfg);
    let bound = cfg.r * cfg.k_const() * annulus_norm_prime(&phi, &cfg)
        * norm_sup(&rep.psi_inf, cfg.rho_inf, cfg.r, cfg.m_nodes).exp();
    let value = json!({
        "iterations": rep.iterations,
        "cousin_residual": residual,
        "norm_bound": bound,
        "psi_inf_sup": norm_sup(&rep.psi_inf, cfg.rho_inf, cfg.r, cfg.m_nodes),
        "stabilization": rep.first_changed_degree,
        "seed": common.seed,
    });
    emit(common, "cousin.json", &value)
}

fn cmd_realize(common: &Common, d: usize, alpha: Complex64) -> Result<(), CoreError> {
    let spec = load_spec(&common.spec)?;
    let mu = spec.mu();
    let s = s_of_spec(&spec)?;
    let p = build_p(1, &spec.eps_vec())?;
    let cfg = GlueConfig {
        tol: tol_default(1e-3),
        ny: spec.truncation.ny.min(6).max(d + 3),
        ..GlueConfig::default()
    };
    let contours = squid_boundaries(&p, 0.0, spec.rho(), 0.0)?;
    // Bernoulli modulus -(1/d) log(1 - alpha h^d)
    let ny = cfg.ny;
    let mut coeffs = vec![Complex64::new(0.0, 0.0); ny];
    let mut ap = Complex64::new(1.0, 0.0);
    for j in 1..=ny / d {
        ap *= alpha;
        coeffs[d * j - 1] = ap / (d as f64 * j as f64);
    }
    let m = GermMap::from_coeffs(&coeffs);
    let real = realize_iteration(&m, mu, s, &cfg, &contours)?;
    let synth = synthesize_r(&real, &p, mu, &cfg)?;
    let rows: Vec<_> = synth
        .rows
        .iter()
        .map(|row| row.iter().map(|z| cvec(*z)).collect::<Vec<_>>())
        .collect();
    let value = json!({
        "d": d,
        "alpha": cvec(alpha),
        "rows": rows,
        "fit_residual": synth.fit_residual,
        "transition_residual": real.transition_residual,
        "orientation": real.orientation,
        "seed": common.seed,
    });
    emit(common, "realize.json", &value)
}

fn necklace_of(spec: &FieldSpec, n_order: usize) -> Result<NecklaceSystem, CoreError> {
    let mu = spec.mu();
    let s = s_of_spec(spec)?;
    let p = build_p(1, &spec.eps_vec())?;
    let d = spec.r.first().map(|m| m.n).unwrap_or(1);
    let mut r_poly = vec![Complex64::new(0.0, 0.0); 2];
    for m in &spec.r {
        if m.n == d {
            r_poly[m.i] += Complex64::new(m.c[0], m.c[1]);
        }
    }
    let phi = bernoulli_modulus(d, &r_poly, mu, s, n_order)?;
    // k = 1 has two presentations over the self-overlap; the system takes one
    let nu_bar = gate_multipliers(&p, mu, None)?[0];
    NecklaceSystem::new(1, mu, vec![phi], vec![nu_bar], vec![0])
}

fn cmd_compat(common: &Common, spec_b: Option<&Path>) -> Result<(), CoreError> {
    let spec_a = load_spec(&common.spec)?;
    let spec_b = match spec_b {
        Some(p) => load_spec(p)?,
        None => spec_a.clone(),
    };
    let n = spec_a.truncation.ny.max(6);
    let sys_a = necklace_of(&spec_a, n)?;
    let sys_b = necklace_of(&spec_b, n)?;
    let gens = [Word::parse("s0+", 1)?, Word::parse("g0+ s0+", 1)?];
    let value = match check_compatibility(&sys_a, &sys_b, &gens, n)? {
        Compatibility::Compatible(delta) => {
            let coeffs: Vec<_> = (1..=delta.order()).map(|p| cvec(delta.coeff(p))).collect();
            json!({ "compatible": true, "delta": coeffs, "seed": common.seed })
        }
        Compatibility::Incompatible { order, word } => {
            json!({ "compatible": false, "order": order, "word": word, "seed": common.seed })
        }
    };
    emit(common, "compat.json", &value)
}

fn run(cli: Cli) -> Result<(), CoreError> {
    match &cli.cmd {
        Cmd::Dynamics(c) => cmd_dynamics(c),
        Cmd::Period { common, n, m, grid } => cmd_period(common, *n, *m, *grid),
        Cmd::Normalize(c) => cmd_normalize(c),
        Cmd::Holonomy(c) => cmd_holonomy(c),
        Cmd::Bernoulli(c) => cmd_bernoulli(c),
        Cmd::Cousin(c) => cmd_cousin(c),
        Cmd::Realize {
            common,
            d,
            alpha_re,
            alpha_im,
        } => cmd_realize(common, *d, Complex64::new(*alpha_re, *alpha_im)),
        Cmd::Compat { common, spec_b } => cmd_compat(common, spec_b.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // clap's own help/version paths exit 0
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:?}");
            ExitCode::from(code_of(&e))
        }
    }
}
