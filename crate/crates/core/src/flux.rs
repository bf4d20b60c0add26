//! Flux functions `f(ρ)` for the look-ahead model and the structural checks they must pass:
//! `f(0) = f(1) = 0`, `f'(0) > 0`, and a single concave-to-convex switch at `ρ_c`.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::interp::Pchip;

type Fun = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Highest derivative order the model exposes.
pub const MAX_DERIVATIVE: usize = 6;

/// Derivatives of `ρ(1-ρ)^J` are evaluated with `ρ` clamped to this value.
const RHO_CLAMP: f64 = 1.0 - 1e-9;

/// Inflection search samples `f''` on `[0, 1 - SCAN_EDGE]`.
const SCAN_EDGE: f64 = 1e-6;
const SCAN_POINTS: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FluxKind {
    Lwr,
    FamilyJ(f64),
    Custom,
}

#[derive(Clone)]
pub struct FluxModel {
    kind: FluxKind,
    label: String,
    f: Fun,
    derivs: Vec<Fun>,
    rho_c: f64,
    beta: f64,
}

impl fmt::Debug for FluxModel {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        fm.debug_struct("FluxModel")
            .field("kind", &self.kind)
            .field("label", &self.label)
            .field("rho_c", &self.rho_c)
            .field("beta", &self.beta)
            .finish()
    }
}

fn falling(a: f64, n: usize) -> f64 {
    (0..n).map(|k| a - k as f64).product()
}

impl FluxModel {
    pub fn lwr() -> Self {
        let derivs: Vec<Fun> = vec![
            Arc::new(|r| 1.0 - 2.0 * r),
            Arc::new(|_| -2.0),
            Arc::new(|_| 0.0),
            Arc::new(|_| 0.0),
            Arc::new(|_| 0.0),
            Arc::new(|_| 0.0),
        ];
        Self { kind: FluxKind::Lwr, label: "lwr".into(), f: Arc::new(|r| r * (1.0 - r)), derivs, rho_c: 1.0, beta: 1.0 }
    }

    /// `f(ρ) = ρ(1-ρ)^J`. With `u = 1-ρ`, `f = u^J - u^{J+1}` and every derivative is a
    /// difference of two falling-factorial-weighted powers of `u`.
    pub fn family_j(j: f64) -> Result<Self> {
        if !(j > 0.0 && j.is_finite()) {
            return Err(Error::InvalidParameter(format!("J must be positive, got {j}")));
        }
        let derivs: Vec<Fun> = (1..=MAX_DERIVATIVE)
            .map(|n| {
                let a = falling(j, n);
                let b = falling(j + 1.0, n);
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                let e = j - n as f64;
                let integral = e == e.trunc() && e.abs() <= 64.0;
                Arc::new(move |r: f64| {
                    let u = 1.0 - r.min(RHO_CLAMP);
                    let p = if integral { u.powi(e as i32) } else { u.powf(e) };
                    sign * (a * p - b * p * u)
                }) as Fun
            })
            .collect();
        let rho_c = if j > 1.0 { 2.0 / (j + 1.0) } else { 1.0 };
        Ok(Self {
            kind: FluxKind::FamilyJ(j),
            label: format!("fj:{j}"),
            f: if j == j.trunc() && j <= 64.0 {
                Arc::new(move |r: f64| r * (1.0 - r).max(0.0).powi(j as i32))
            } else {
                Arc::new(move |r: f64| r * (1.0 - r).max(0.0).powf(j))
            },
            derivs,
            rho_c,
            beta: 1.0 / j,
        })
    }

    /// A flux given by its values, with any subset of analytic derivatives
    /// (`derivs[k]` is the derivative of order `k + 1`). Missing ones come from
    /// finite differences of `eval`.
    pub fn custom<F>(label: impl Into<String>, eval: F, derivs: Vec<Fun>) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let f: Fun = Arc::new(eval);
        let mut all: Vec<Fun> = derivs.into_iter().take(MAX_DERIVATIVE).collect();
        for n in all.len() + 1..=MAX_DERIVATIVE {
            let g = f.clone();
            all.push(Arc::new(move |r| fd_derivative(&*g, n, r)));
        }
        let scan = scan_inflection(&*all[1]);
        let rho_c = scan.first.unwrap_or(1.0);
        let beta = -2.0 * all[0](0.0) / all[1](0.0);
        Self { kind: FluxKind::Custom, label: label.into(), f, derivs: all, rho_c, beta }
    }

    /// Flux tabulated as `(ρ, f)` pairs, interpolated by monotone cubics.
    /// Derivatives come from finite differences, so accuracy is well below the analytic fluxes.
    pub fn from_table(label: impl Into<String>, rho: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if rho.len() < 4 || rho.len() != values.len() {
            return Err(Error::InvalidParameter("flux table needs at least 4 (rho, f) rows".into()));
        }
        if !rho.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::InvalidParameter("flux table rho column must be increasing".into()));
        }
        let p = Pchip::new(rho, values);
        Ok(Self::custom(label, move |r| p.eval(r), Vec::new()))
    }

    /// Read a whitespace- or comma-separated two-column table; `#` lines and a
    /// non-numeric header are skipped.
    pub fn from_table_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        let mut rho = Vec::new();
        let mut vals = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> =
                line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
            let parsed: std::result::Result<Vec<f64>, _> = cols.iter().map(|s| s.parse::<f64>()).collect();
            match parsed {
                Ok(v) if v.len() == 2 => {
                    rho.push(v[0]);
                    vals.push(v[1]);
                }
                Err(_) if rho.is_empty() => continue,
                _ => {
                    return Err(Error::Parse(format!(
                        "{}:{}: expected two numeric columns",
                        path.display(),
                        lineno + 1
                    )))
                }
            }
        }
        Self::from_table(format!("table:{}", path.display()), rho, vals)
    }

    pub fn kind(&self) -> FluxKind {
        self.kind
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn rho_c(&self) -> f64 {
        self.rho_c
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn eval(&self, rho: f64) -> f64 {
        (self.f)(rho)
    }

    pub fn d1(&self, rho: f64) -> f64 {
        (self.derivs[0])(rho)
    }

    pub fn d2(&self, rho: f64) -> f64 {
        (self.derivs[1])(rho)
    }

    pub fn d3(&self, rho: f64) -> f64 {
        (self.derivs[2])(rho)
    }

    /// `f^{(n)}(ρ)` for `0 <= n <= 6`.
    pub fn derivative(&self, n: usize, rho: f64) -> f64 {
        match n {
            0 => self.eval(rho),
            1..=MAX_DERIVATIVE => (self.derivs[n - 1])(rho),
            _ => panic!("derivative order {n} exceeds {MAX_DERIVATIVE}"),
        }
    }
}

impl FromStr for FluxModel {
    type Err = Error;

    /// `lwr`, `fj:<J>`, or `table:<path>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("lwr") {
            return Ok(Self::lwr());
        }
        if let Some(j) = s.strip_prefix("fj:") {
            let j: f64 = j.trim().parse().map_err(|_| Error::Parse(format!("bad J in flux spec '{s}'")))?;
            return Self::family_j(j);
        }
        if let Some(p) = s.strip_prefix("table:") {
            return Self::from_table_file(Path::new(p));
        }
        Err(Error::Parse(format!("unknown flux '{s}' (expected lwr, fj:<J> or table:<path>)")))
    }
}

/// Fornberg's weights for derivatives of order `0..=m` at `z` from the nodes `xs`.
fn fornberg(z: f64, xs: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut c = vec![vec![0.0; n]; m + 1];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - z;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Step sizes trade truncation against round-off for each order; the stencil has
/// `n + 4` nodes and is slid inward so it never leaves `[0, 1]`.
fn fd_step(n: usize) -> f64 {
    match n {
        1 => 1e-5,
        2 => 1e-3,
        3 => 5e-3,
        _ => 2e-2,
    }
}

fn fd_derivative(f: &dyn Fn(f64) -> f64, n: usize, x: f64) -> f64 {
    let h = fd_step(n);
    let pts = n + 4;
    let half = (pts - 1) as f64 / 2.0;
    let centre = x.clamp(half * h, 1.0 - half * h);
    let xs: Vec<f64> = (0..pts).map(|i| centre + (i as f64 - half) * h).collect();
    let w = fornberg(x, &xs, n);
    xs.iter().zip(&w[n]).map(|(&xi, &wi)| wi * f(xi)).sum()
}

struct Scan {
    first: Option<f64>,
    changes: usize,
}

fn scan_inflection(f2: &dyn Fn(f64) -> f64) -> Scan {
    let hi = 1.0 - SCAN_EDGE;
    let pos = |v: f64| v >= 0.0;
    let mut first = None;
    let mut changes = 0;
    let mut prev_x = 0.0;
    let mut prev = pos(f2(0.0));
    for i in 1..=SCAN_POINTS {
        let x = hi * i as f64 / SCAN_POINTS as f64;
        let s = pos(f2(x));
        if s != prev {
            changes += 1;
            if first.is_none() {
                first = Some(bisect(f2, prev_x, x));
            }
        }
        prev = s;
        prev_x = x;
    }
    Scan { first, changes }
}

fn bisect(g: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let sa = g(a) >= 0.0;
    while b - a > 1e-13 {
        let m = 0.5 * (a + b);
        if (g(m) >= 0.0) == sa {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Sign change of `f''` located by bisection; 1 when `f''` never turns positive.
pub fn find_inflection(flux: &FluxModel) -> Result<f64> {
    let scan = scan_inflection(&|r| flux.d2(r));
    match scan.changes {
        0 => Ok(1.0),
        1 => Ok(scan.first.expect("one sign change recorded")),
        n => Err(Error::HypothesisViolation(format!("f'' changes sign {n} times on [0, 1)"))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// Size of the worst violation; 0 when the check passes.
    pub worst: f64,
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    pub rho_c: Option<f64>,
    pub beta: f64,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{:<28} {}  worst={:.3e}", c.name, if c.passed { "PASS" } else { "FAIL" }, c.worst)?;
        }
        match self.rho_c {
            Some(r) => writeln!(f, "rho_c = {r}")?,
            None => writeln!(f, "rho_c = undetermined")?,
        }
        write!(f, "beta = {}", self.beta)
    }
}

/// Checks the structural hypotheses on a uniform grid of `n_samples` points in `[0, 1 - 1e-6]`.
pub fn validate_hypotheses(flux: &FluxModel, n_samples: usize) -> Result<ValidationReport> {
    if n_samples < 16 {
        return Err(Error::InvalidParameter(format!("n_samples must be >= 16, got {n_samples}")));
    }
    const SEP: f64 = 1e-10;
    let mut checks = Vec::new();
    let f0 = flux.eval(0.0).abs();
    checks.push(Check { name: "f(0)=0", passed: f0 <= 1e-12, worst: if f0 <= 1e-12 { 0.0 } else { f0 } });
    let f1 = flux.eval(1.0).abs();
    checks.push(Check { name: "f(1)=0", passed: f1 <= 1e-12, worst: if f1 <= 1e-12 { 0.0 } else { f1 } });
    let d0 = flux.d1(0.0);
    checks.push(Check { name: "f'(0)>0", passed: d0 > 0.0, worst: (-d0).max(0.0) });

    let inflection = find_inflection(flux);
    checks.push(Check {
        name: "single inflection",
        passed: inflection.is_ok(),
        worst: if inflection.is_ok() { 0.0 } else { 1.0 },
    });
    let rho_c = inflection.ok();
    let rc = rho_c.unwrap_or(flux.rho_c());

    let hi = 1.0 - SCAN_EDGE;
    let mut concave_worst: f64 = 0.0;
    let mut concave_ok = true;
    let mut convex_worst: f64 = 0.0;
    let mut convex_ok = true;
    for i in 0..n_samples {
        let r = hi * i as f64 / (n_samples - 1) as f64;
        let v = flux.d2(r);
        if r < rc - SEP {
            if !(v < 0.0) {
                concave_ok = false;
                concave_worst = concave_worst.max(v.max(0.0));
            }
        } else if r > rc + SEP && !(v > 0.0) {
            convex_ok = false;
            convex_worst = convex_worst.max((-v).max(0.0));
        }
    }
    checks.push(Check { name: "f''<0 below rho_c", passed: concave_ok, worst: concave_worst });
    checks.push(Check { name: "f''>0 above rho_c", passed: convex_ok, worst: convex_worst });

    let beta = flux.beta();
    checks.push(Check {
        name: "beta>0",
        passed: beta > 0.0 && beta.is_finite(),
        worst: if beta > 0.0 && beta.is_finite() { 0.0 } else { (-beta).max(0.0) },
    });

    if let FluxKind::FamilyJ(j) = flux.kind() {
        let expect = if j > 1.0 { 2.0 / (j + 1.0) } else { 1.0 };
        let dev = (rc - expect).abs();
        checks.push(Check { name: "rho_c matches 2/(J+1)", passed: dev <= 1e-10, worst: dev });
    }

    Ok(ValidationReport { checks, rho_c, beta })
}
