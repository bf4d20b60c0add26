// `!(x > 0.0)` rejects NaN as well; that is the point
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod output;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use ctflow::*;

use output::{csv_bytes, write_atomic, Config, Output};

#[derive(Parser)]
#[command(name = "ctflow", version, about = "Critical-threshold curves for nonlocal look-ahead traffic flow")]
struct Cli {
    /// Output directory, or a file path (with extension) for single-file commands.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Relative tolerance of the curve and phase-plane integrators.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the structural hypotheses on a flux.
    ValidateFlux {
        #[arg(long)]
        flux: String,
        #[arg(long, default_value_t = 2001)]
        samples: usize,
    },
    /// Export σ or γ as `rho,value`.
    Curve {
        #[arg(long)]
        flux: String,
        #[arg(long, value_enum)]
        which: WhichArg,
        #[arg(long)]
        cap: Option<f64>,
    },
    /// Classify initial data given as a `x,rho,drho` CSV or a profile spec.
    Classify {
        #[arg(long)]
        flux: String,
        #[arg(long, conflicts_with = "profile", required_unless_present = "profile")]
        input: Option<PathBuf>,
        #[arg(long)]
        profile: Option<String>,
        /// `a,b`; defaults to the profile's support.
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        domain: Option<(f64, f64)>,
        #[arg(long, default_value_t = 4001)]
        points: usize,
        #[arg(long, default_value = "infinite")]
        kernel: String,
    },
    /// Integrate one characteristic trajectory, writing `t,rho,d`.
    Phase {
        #[arg(long)]
        flux: String,
        #[arg(long, allow_negative_numbers = true)]
        rho0: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        d0: Option<f64>,
        /// `one`, `lower:<mass>` or `coupled`.
        #[arg(long, default_value = "one")]
        factor: String,
        /// Initial profile of the coupled PDE run.
        #[arg(long)]
        profile: Option<String>,
        /// Foot of the coupled characteristic; the seed defaults to the profile there.
        #[arg(long, allow_negative_numbers = true)]
        x0: Option<f64>,
        /// Time limit; for a coupled factor also the PDE horizon (default 10).
        #[arg(long)]
        tmax: Option<f64>,
        #[arg(long, default_value_t = 2000)]
        cells: usize,
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        domain: Option<(f64, f64)>,
        #[arg(long, default_value_t = 1e6)]
        cap: f64,
    },
    /// Integrate a grid of seeds, writing `rho0,d0,region,terminal,t_star`.
    PhasePortrait {
        #[arg(long, default_value = "fj:2")]
        flux: String,
        /// `<n_rho>x<n_d>`.
        #[arg(long, default_value = "20x20", value_parser = parse_grid)]
        grid: (usize, usize),
        #[arg(long, default_value = "0.05,0.95", value_parser = parse_pair)]
        rho_range: (f64, f64),
        #[arg(long, default_value = "-1,1", value_parser = parse_pair, allow_hyphen_values = true)]
        d_range: (f64, f64),
        /// `one` or `lower:<mass>`.
        #[arg(long, default_value = "one")]
        factor: String,
        #[arg(long)]
        tmax: Option<f64>,
    },
    /// Run the PDE with shock detection, writing snapshots, diagnostics and the shock report.
    Simulate {
        #[arg(long)]
        flux: String,
        #[arg(long, default_value = "infinite")]
        kernel: String,
        #[arg(long)]
        profile: String,
        #[arg(long, default_value_t = 10.0)]
        tend: f64,
        #[arg(long, default_value_t = 400)]
        cells: usize,
        #[arg(long, default_value_t = 0.4)]
        cfl: f64,
        /// `a,b`; defaults to a window that keeps the mass away from the walls.
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        domain: Option<(f64, f64)>,
        #[arg(long, default_value_t = 0.1)]
        snapshot_every: f64,
        /// Skip the refined companion run (disables shock detection).
        #[arg(long)]
        no_companion: bool,
    },
    /// Sample a profile, writing `x,rho,drho`.
    Profile {
        #[arg(long)]
        profile: String,
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        domain: Option<(f64, f64)>,
        #[arg(long, default_value_t = 1001)]
        points: usize,
    },
    /// Compare the numerical curves of f = ρ(1-ρ)^J with their closed forms.
    CompareFj {
        #[arg(long = "J")]
        j: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum WhichArg {
    Sigma,
    Gamma,
}

/// A failure of the numerics outside the library's own error type.
#[derive(Debug)]
struct Numerical(String);

impl std::fmt::Display for Numerical {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Numerical {}

fn parse_pair(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected 'a,b', got '{s}'"))?;
    let a: f64 = a.trim().parse().map_err(|_| format!("bad number '{a}'"))?;
    let b: f64 = b.trim().parse().map_err(|_| format!("bad number '{b}'"))?;
    if !(a < b) {
        return Err(format!("need a < b, got '{s}'"));
    }
    Ok((a, b))
}

fn parse_grid(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once('x').ok_or_else(|| format!("expected '<n>x<m>', got '{s}'"))?;
    let a: usize = a.trim().parse().map_err(|_| format!("bad count '{a}'"))?;
    let b: usize = b.trim().parse().map_err(|_| format!("bad count '{b}'"))?;
    if a < 2 || b < 2 {
        return Err("grid needs at least 2 points per axis".into());
    }
    Ok((a, b))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// 3 for numerical failures, 2 for everything else (bad input, violated preconditions).
fn exit_code(e: &anyhow::Error) -> u8 {
    let numerical = match e.downcast_ref::<Error>() {
        Some(e) => e.is_numerical(),
        None => e.downcast_ref::<Numerical>().is_some(),
    };
    if numerical {
        3
    } else {
        2
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(t) = cli.tol {
        if !(t > 0.0 && t < 1.0) {
            bail!("--tol must lie in (0, 1), got {t}");
        }
    }
    let out = cli.out.as_deref();
    match cli.command {
        Command::ValidateFlux { flux, samples } => validate_flux(out, &flux, samples),
        Command::Curve { flux, which, cap } => curve(out, cli.tol, &flux, which, cap),
        Command::Classify { flux, input, profile, domain, points, kernel } => {
            classify(out, cli.tol, &flux, input.as_deref(), profile.as_deref(), domain, points, &kernel)
        }
        Command::Phase { flux, rho0, d0, factor, profile, x0, tmax, cells, domain, cap } => {
            phase(out, cli.tol, PhaseArgs { flux, rho0, d0, factor, profile, x0, tmax, cells, domain, cap })
        }
        Command::PhasePortrait { flux, grid, rho_range, d_range, factor, tmax } => {
            portrait(out, cli.tol, &flux, grid, rho_range, d_range, &factor, tmax)
        }
        Command::Simulate { flux, kernel, profile, tend, cells, cfl, domain, snapshot_every, no_companion } => {
            simulate_cmd(out, &flux, &kernel, &profile, tend, cells, cfl, domain, snapshot_every, !no_companion)
        }
        Command::Profile { profile, domain, points } => profile_cmd(out, &profile, domain, points),
        Command::CompareFj { j } => compare_fj(out, cli.tol, j),
    }
}

fn sigma_opts(tol: Option<f64>) -> SigmaOptions {
    let d = SigmaOptions::default();
    SigmaOptions { rtol: tol.unwrap_or(d.rtol), ..d }
}

fn gamma_opts(tol: Option<f64>) -> GammaOptions {
    let d = GammaOptions::default();
    GammaOptions { rtol: tol.unwrap_or(d.rtol), ..d }
}

/// σ, and γ when the flux has an inflection point.
fn curves(flux: &FluxModel, tol: Option<f64>) -> Result<(ThresholdCurve, Option<ThresholdCurve>)> {
    let sigma = build_sigma(flux, &sigma_opts(tol))?;
    let gamma = if flux.rho_c() < 1.0 { Some(build_gamma(flux, &gamma_opts(tol))?) } else { None };
    Ok((sigma, gamma))
}

fn emit(text: &str, path: &Path) -> Result<()> {
    print!("{text}");
    write_atomic(path, text.as_bytes())
}

fn validate_flux(out: Option<&Path>, spec: &str, samples: usize) -> Result<()> {
    let flux: FluxModel = spec.parse()?;
    let report = validate_hypotheses(&flux, samples)?;
    let o = Output::resolve(out);
    o.write_config(Config::new("validate-flux").set("flux", spec).set("samples", samples))?;
    emit(&format!("flux = {}\n{report}\n", flux.label()), &o.main_file("validation.txt"))?;
    if !report.all_passed() {
        bail!("flux '{spec}' violates the structural hypotheses");
    }
    Ok(())
}

fn curve(out: Option<&Path>, tol: Option<f64>, spec: &str, which: WhichArg, cap: Option<f64>) -> Result<()> {
    let flux: FluxModel = spec.parse()?;
    let (name, c) = match which {
        WhichArg::Sigma => {
            let mut o = sigma_opts(tol);
            o.cap = cap.unwrap_or(o.cap);
            ("sigma", build_sigma(&flux, &o)?)
        }
        WhichArg::Gamma => {
            let mut o = gamma_opts(tol);
            o.cap = cap.unwrap_or(o.cap);
            ("gamma", build_gamma(&flux, &o)?)
        }
    };
    let o = Output::resolve(out);
    let mut cfg = Config::new("curve");
    cfg.set("flux", spec).set("which", name).set("tol", tol.map_or("default".into(), |t| t.to_string()));
    cfg.set("cap", cap.map_or("default".into(), |t| t.to_string()));
    o.write_config(&cfg)?;
    let mut bytes = csv_bytes(&["rho", "value"], c.grid().iter().zip(c.values()).map(|(r, v)| [*r, *v]))?;
    let blowup = c.blowup_at().map_or("none".to_string(), |v| v.to_string());
    bytes.extend_from_slice(format!("# blowup_at={blowup}\n").as_bytes());
    write_atomic(&o.main_file(&format!("{name}.csv")), &bytes)
}

/// `(x, ρ, ρ')` columns from a CSV with header `x,rho,drho`.
fn read_profile_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let headers = r.headers()?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| anyhow!("{} lacks a '{name}' column", path.display()))
    };
    let (ix, ir, id) = (col("x")?, col("rho")?, col("drho")?);
    let (mut x, mut rho, mut d) = (Vec::new(), Vec::new(), Vec::new());
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64> {
            rec.get(i)
                .unwrap_or("")
                .parse()
                .map_err(|_| anyhow!("{}: bad number in data row {}", path.display(), line + 1))
        };
        x.push(num(ix)?);
        rho.push(num(ir)?);
        d.push(num(id)?);
    }
    Ok((x, rho, d))
}

fn default_profile_domain(p: &Profile) -> (f64, f64) {
    let (l, r) = p.support(1e-10 * p.peak());
    (l.floor().min(-1.0), r.ceil().max(1.0))
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

#[allow(clippy::too_many_arguments)]
fn classify(
    out: Option<&Path>,
    tol: Option<f64>,
    spec: &str,
    input: Option<&Path>,
    profile: Option<&str>,
    domain: Option<(f64, f64)>,
    points: usize,
    kernel: &str,
) -> Result<()> {
    let k: KernelSpec = kernel.parse()?;
    if !k.is_infinite() {
        return Err(Error::UnsupportedKernel(format!(
            "the thresholds hold for the infinite look-ahead kernel only, got {k}"
        ))
        .into());
    }
    let flux: FluxModel = spec.parse()?;
    let mut cfg = Config::new("classify");
    cfg.set("flux", spec).set("kernel", k);
    let (x, rho, d) = match (input, profile) {
        (Some(path), _) => {
            cfg.set("input", path.display());
            read_profile_csv(path)?
        }
        (None, Some(p)) => {
            let p: Profile = p.parse()?;
            if points < 2 {
                bail!("--points must be at least 2");
            }
            let (a, b) = domain.unwrap_or_else(|| default_profile_domain(&p));
            cfg.set("profile", p).set("domain", format!("{a},{b}")).set("points", points);
            let xs = linspace(a, b, points);
            let (r, d) = p.sample(&xs);
            (xs, r, d)
        }
        (None, None) => bail!("give --input or --profile"),
    };
    let (sigma, gamma) = curves(&flux, tol)?;
    let c = classify_profile(&flux, &sigma, gamma.as_ref(), &x, &rho, &d)?;
    let o = Output::resolve(out);
    o.write_config(&cfg)?;
    let mut text = String::new();
    writeln!(text, "region={}", c.region)?;
    writeln!(text, "witness_x={}", c.witness_x.map_or("none".into(), |v| v.to_string()))?;
    writeln!(text, "margin={}", c.margin)?;
    writeln!(text, "note={}", c.note.as_deref().unwrap_or("none"))?;
    writeln!(text, "warnings={}", c.warnings.len())?;
    for w in &c.warnings {
        writeln!(text, "warning: {w}")?;
    }
    emit(&text, &o.main_file("classification.txt"))
}

fn parse_constant_factor(s: &str) -> Result<NonlocalFactorModel> {
    match s.trim() {
        "one" => Ok(NonlocalFactorModel::ConstantOne),
        other => match other.strip_prefix("lower:") {
            Some(m) => {
                let mass: f64 = m.trim().parse().map_err(|_| anyhow!("bad mass in factor '{s}'"))?;
                Ok(NonlocalFactorModel::ConstantLower { mass })
            }
            None => bail!("unknown factor '{s}' (expected one, lower:<mass> or coupled)"),
        },
    }
}

/// A window keeping the mass of `profile` off the walls until `t_end`: the support plus the
/// distance the fastest characteristic covers.
fn default_sim_domain(flux: &FluxModel, profile: &Profile, t_end: f64) -> (f64, f64) {
    let (l, r) = profile.support(1e-11);
    let speed = flux.d1(0.0).max(0.0);
    ((l - 1.0).floor().min(-10.0), (r + speed * t_end + 1.0).ceil().max(10.0))
}

fn phase_opts(tol: Option<f64>, t_max: Option<f64>, cap: f64) -> PhaseOptions {
    let d = PhaseOptions::default();
    PhaseOptions { rtol: tol.unwrap_or(d.rtol), t_max: t_max.unwrap_or(d.t_max), blowup_cap: cap, ..d }
}

struct PhaseArgs {
    flux: String,
    rho0: Option<f64>,
    d0: Option<f64>,
    factor: String,
    profile: Option<String>,
    x0: Option<f64>,
    tmax: Option<f64>,
    cells: usize,
    domain: Option<(f64, f64)>,
    cap: f64,
}

fn phase(out: Option<&Path>, tol: Option<f64>, a: PhaseArgs) -> Result<()> {
    let flux: FluxModel = a.flux.parse()?;
    let mut cfg = Config::new("phase");
    cfg.set("flux", &a.flux).set("factor", &a.factor).set("cap", a.cap);
    cfg.set("tol", tol.map_or("default".into(), |t| t.to_string()));
    let (factor, rho0, d0) = if a.factor.trim() == "coupled" {
        let spec = a.profile.as_deref().ok_or_else(|| anyhow!("--factor coupled needs --profile"))?;
        let x0 = a.x0.ok_or_else(|| anyhow!("--factor coupled needs --x0"))?;
        let profile: Profile = spec.parse()?;
        let horizon = a.tmax.unwrap_or(10.0);
        let (ra, rb) = a.domain.unwrap_or_else(|| default_sim_domain(&flux, &profile, horizon));
        let sim = SimConfig { a: ra, b: rb, n_cells: a.cells, t_end: horizon, companion: false, ..Default::default() };
        let field = FactorField::record(&flux, &KernelSpec::infinite(), &profile, &sim, 1)?;
        let (pr, pd) = profile.eval(x0);
        let (rho0, d0) = (a.rho0.unwrap_or(pr), a.d0.unwrap_or(pd));
        cfg.set("profile", profile).set("x0", x0).set("cells", a.cells).set("domain", format!("{ra},{rb}"));
        (NonlocalFactorModel::Coupled { field: Arc::new(field), x0 }, rho0, d0)
    } else {
        let rho0 = a.rho0.ok_or_else(|| anyhow!("--rho0 is required"))?;
        let d0 = a.d0.ok_or_else(|| anyhow!("--d0 is required"))?;
        (parse_constant_factor(&a.factor)?, rho0, d0)
    };
    let opts = phase_opts(tol, a.tmax, a.cap);
    cfg.set("rho0", rho0).set("d0", d0).set("tmax", opts.t_max);
    let traj = integrate_phase(&flux, &factor, rho0, d0, &opts)?;
    let o = Output::resolve(out);
    o.write_config(&cfg)?;
    let bytes = csv_bytes(&["t", "rho", "d"], traj.states.iter().map(|s| [s.t, s.rho, s.d]))?;
    write_atomic(&o.main_file("trajectory.csv"), &bytes)?;
    let t_star = traj.terminal.t_star().map_or("none".into(), |t| t.to_string());
    println!("terminal={}\nt_star={t_star}", traj.terminal);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn portrait(
    out: Option<&Path>,
    tol: Option<f64>,
    spec: &str,
    (nr, nd): (usize, usize),
    (r_lo, r_hi): (f64, f64),
    (d_lo, d_hi): (f64, f64),
    factor: &str,
    tmax: Option<f64>,
) -> Result<()> {
    if !(r_lo > 0.0 && r_hi < 1.0) {
        bail!("--rho-range must lie inside (0, 1)");
    }
    let flux: FluxModel = spec.parse()?;
    let model = parse_constant_factor(factor)?;
    let (sigma, gamma) = curves(&flux, tol)?;
    let seeds: Vec<(f64, f64)> = linspace(r_lo, r_hi, nr)
        .into_iter()
        .flat_map(|r| linspace(d_lo, d_hi, nd).into_iter().map(move |d| (r, d)))
        .collect();
    let opts = phase_opts(tol, tmax, 1e6);
    let runs = phase_portrait(&flux, &model, &seeds, &opts);
    let mut rows = Vec::with_capacity(seeds.len());
    for (&(r, d), run) in seeds.iter().zip(runs) {
        let t = run?;
        let region = classify_pair(&flux, &sigma, gamma.as_ref(), r, d)?.region;
        let t_star = t.terminal.t_star().map_or(String::new(), |v| v.to_string());
        rows.push([r.to_string(), d.to_string(), region.to_string(), t.terminal.to_string(), t_star]);
    }
    let o = Output::resolve(out);
    let mut cfg = Config::new("phase-portrait");
    cfg.set("flux", spec).set("grid", format!("{nr}x{nd}")).set("rho_range", format!("{r_lo},{r_hi}"));
    cfg.set("d_range", format!("{d_lo},{d_hi}")).set("factor", factor).set("tmax", opts.t_max);
    o.write_config(&cfg)?;
    let bytes = csv_bytes(&["rho0", "d0", "region", "terminal", "t_star"], rows)?;
    write_atomic(&o.main_file("portrait.csv"), &bytes)
}

#[allow(clippy::too_many_arguments)]
fn simulate_cmd(
    out: Option<&Path>,
    spec: &str,
    kernel: &str,
    profile: &str,
    t_end: f64,
    cells: usize,
    cfl: f64,
    domain: Option<(f64, f64)>,
    snapshot_every: f64,
    companion: bool,
) -> Result<()> {
    let flux: FluxModel = spec.parse()?;
    let k: KernelSpec = kernel.parse()?;
    let profile: Profile = profile.parse()?;
    let (a, b) = domain.unwrap_or_else(|| default_sim_domain(&flux, &profile, t_end));
    let cfg = SimConfig { a, b, n_cells: cells, cfl, t_end, snapshot_every, companion, ..Default::default() };
    let o = Output::dir_only(out);
    let mut c = Config::new("simulate");
    c.set("flux", spec).set("kernel", k).set("profile", profile).set("tend", t_end).set("cells", cells);
    c.set("cfl", cfl).set("domain", format!("{a},{b}")).set("snapshot_every", snapshot_every);
    c.set("companion", companion).set("growth_factor", cfg.growth_factor);
    c.set("refinement_ratio", cfg.refinement_ratio);
    o.write_config(&c)?;

    let r = simulate(&flux, &k, &profile, &cfg)?;
    let xs = r.solution.centers();
    let snaps = r.snapshots.iter().flat_map(|s| xs.iter().zip(&s.rho).map(move |(x, rho)| [s.t, *x, *rho]));
    write_atomic(&o.path("snapshots.csv"), &csv_bytes(&["t", "x", "rho"], snaps)?)?;
    let diag =
        r.solution.history.iter().map(|d| [d.t, d.mass, d.rho_min, d.rho_max, d.grad_max, d.grad_min, d.rhobar_max]);
    let header = ["t", "mass", "rho_min", "rho_max", "grad_max", "grad_min", "rhobar_max"];
    write_atomic(&o.path("diagnostics.csv"), &csv_bytes(&header, diag)?)?;
    emit(&r.shock.to_string(), &o.path("shock.txt"))
}

fn profile_cmd(out: Option<&Path>, spec: &str, domain: Option<(f64, f64)>, points: usize) -> Result<()> {
    let p: Profile = spec.parse()?;
    if points < 2 {
        bail!("--points must be at least 2");
    }
    let (a, b) = domain.unwrap_or_else(|| default_profile_domain(&p));
    let o = Output::resolve(out);
    o.write_config(Config::new("profile").set("profile", p).set("domain", format!("{a},{b}")).set("points", points))?;
    let xs = linspace(a, b, points);
    let rows = xs.iter().map(|&x| {
        let (r, d) = p.eval(x);
        [x, r, d]
    });
    write_atomic(&o.main_file("profile.csv"), &csv_bytes(&["x", "rho", "drho"], rows)?)
}

const SIGMA_TOL: f64 = 1e-6;
const GAMMA_TOL: f64 = 1e-5;

fn compare_fj(out: Option<&Path>, tol: Option<f64>, j: f64) -> Result<()> {
    let flux = FluxModel::family_j(j)?;
    let (sigma, gamma) = curves(&flux, tol)?;
    let max_dev = |grid: Vec<f64>, f: &dyn Fn(f64) -> Result<f64>| -> Result<(f64, f64)> {
        let mut worst = (0.0, grid[0]);
        for r in grid {
            let e = f(r)?;
            if e > worst.0 {
                worst = (e, r);
            }
        }
        Ok(worst)
    };
    let mut text = String::new();
    let (es, at) = max_dev(linspace(0.01, 0.99, 9801), &|r| Ok((sigma.eval(r) - sigma_closed_fj(j, r)?).abs()))?;
    writeln!(text, "sigma max deviation on [0.01, 0.99] = {es:e} at rho={at} (tolerance {SIGMA_TOL:e})")?;
    let mut ok = es <= SIGMA_TOL;
    match &gamma {
        Some(g) if flux.rho_c() + 0.02 < 0.98 => {
            let rc = flux.rho_c();
            let (eg, at) =
                max_dev(linspace(rc + 0.02, 0.98, 9601), &|r| Ok((g.eval(r) - gamma_closed_fj(j, r)?).abs()))?;
            writeln!(
                text,
                "gamma max deviation on [{}, 0.98] = {eg:e} at rho={at} (tolerance {GAMMA_TOL:e})",
                rc + 0.02
            )?;
            ok &= eg <= GAMMA_TOL;
        }
        Some(_) => writeln!(text, "gamma: inflection point too close to 1 for the comparison window")?,
        None => writeln!(text, "gamma undefined: no inflection point for J={j}")?,
    }
    let o = Output::resolve(out);
    o.write_config(Config::new("compare-fj").set("J", j).set("tol", tol.map_or("default".into(), |t| t.to_string())))?;
    emit(&text, &o.main_file("compare.txt"))?;
    if !ok {
        return Err(Numerical(format!("curves for J={j} deviate beyond tolerance")).into());
    }
    Ok(())
}
