//! Critical-threshold curves in the `(ρ, d = ∂_x ρ)` plane and the trichotomy classifier.
//!
//! Both curves are trajectories of
//!
//! ```text
//! dd/dρ = F(ρ, d) = [f''d² + (f + 2ρf')d + ρ²f] / (ρf)
//! ```
//!
//! σ leaves the origin with slope β; γ leaves `ρ_c` from `-∞` and is integrated through
//! its reciprocal `η = 1/γ` wherever γ is large.

use std::fmt;

use crate::error::{Error, Result};
use crate::flux::{FluxModel, MAX_DERIVATIVE};
use crate::interp::Pchip;
use crate::ode::{self, Control, Finish};

/// Right end of both curves' grids.
pub const RHO_END: f64 = 1.0 - 1e-9;

/// Trajectory slope `dd/dρ` at `(ρ, d)`.
pub fn trajectory_slope(flux: &FluxModel, rho: f64, d: f64) -> f64 {
    let f = flux.eval(rho);
    let b = f + 2.0 * rho * flux.d1(rho);
    (flux.d2(rho) * d * d + b * d + rho * rho * f) / (rho * f)
}

/// `dη/dρ` for `η = 1/d`; regular where `d` has a pole.
fn reciprocal_slope(flux: &FluxModel, rho: f64, eta: f64) -> f64 {
    let f = flux.eval(rho);
    let b = f + 2.0 * rho * flux.d1(rho);
    -(flux.d2(rho) + b * eta + rho * rho * f * eta * eta) / (rho * f)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    Sigma,
    Gamma,
}

impl fmt::Display for Which {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Which::Sigma => "sigma",
            Which::Gamma => "gamma",
        })
    }
}

/// Leading Taylor term of `η` at `ρ_c`: `η(ρ_c + h) ≈ coef · h^order / order!`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleSeed {
    pub rho_c: f64,
    pub coef: f64,
    pub order: usize,
}

impl PoleSeed {
    pub fn eta(&self, h: f64) -> f64 {
        let fact: f64 = (1..=self.order).map(|k| k as f64).product();
        self.coef * h.powi(self.order as i32) / fact
    }
}

#[derive(Debug, Clone)]
pub struct ThresholdCurve {
    which: Which,
    grid: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
    blowup_at: Option<f64>,
    seed: Option<PoleSeed>,
    interp: Pchip,
}

impl ThresholdCurve {
    fn new(
        which: Which,
        grid: Vec<f64>,
        values: Vec<f64>,
        slopes: Vec<f64>,
        blowup_at: Option<f64>,
        seed: Option<PoleSeed>,
    ) -> Self {
        let interp = Pchip::with_slopes(grid.clone(), values.clone(), slopes.clone());
        Self { which, grid, values, slopes, blowup_at, seed, interp }
    }

    pub fn which(&self) -> Which {
        self.which
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `F(ρ_i, value_i)` at every grid point.
    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn blowup_at(&self) -> Option<f64> {
        self.blowup_at
    }

    pub fn seed(&self) -> Option<PoleSeed> {
        self.seed
    }

    /// Curve value at `rho`; `+∞` at and beyond a blow-up point, `-∞` at or left of the
    /// γ pole.
    pub fn eval(&self, rho: f64) -> f64 {
        if let Some(b) = self.blowup_at {
            if rho >= b {
                return f64::INFINITY;
            }
        }
        if let Some(seed) = self.seed {
            if rho <= seed.rho_c {
                return f64::NEG_INFINITY;
            }
            if rho < self.grid[0] {
                return 1.0 / seed.eta(rho - seed.rho_c);
            }
        } else if rho <= 0.0 {
            return 0.0;
        }
        self.interp.eval(rho)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SigmaOptions {
    pub eps: f64,
    pub rho_step: f64,
    pub cap: f64,
    pub rtol: f64,
    pub atol: f64,
}

impl Default for SigmaOptions {
    fn default() -> Self {
        Self { eps: 1e-4, rho_step: 1e-3, cap: 1e6, rtol: 1e-10, atol: 1e-12 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GammaOptions {
    /// Offset of the first grid point from `ρ_c`.
    pub delta: f64,
    pub rho_step: f64,
    /// Ratio of successive offsets from `ρ_c` while the curve is steep.
    pub growth: f64,
    pub cap: f64,
    pub rtol: f64,
    pub atol: f64,
}

impl Default for GammaOptions {
    fn default() -> Self {
        Self { delta: 1e-4, rho_step: 1e-3, growth: 1.01, cap: 1e6, rtol: 1e-10, atol: 1e-12 }
    }
}

fn push_tail(grid: &mut Vec<f64>) {
    let mut k = 3;
    loop {
        let r = 1.0 - 10f64.powi(-k);
        if r >= RHO_END {
            break;
        }
        if r > *grid.last().unwrap() {
            grid.push(r);
        }
        k += 1;
    }
    grid.push(RHO_END);
}

fn uniform_from(start: f64, step: f64, grid: &mut Vec<f64>) {
    let mut k = (start / step).floor() as i64 + 1;
    loop {
        let r = k as f64 * step;
        if r > 1.0 - 1e-3 + 1e-12 {
            break;
        }
        if r > grid.last().unwrap() + 1e-12 {
            grid.push(r);
        }
        k += 1;
    }
}

fn ode_options(rtol: f64, atol: f64) -> ode::Options {
    ode::Options { rtol, atol, h_init: 0.0, h_min: 1e-15, h_max: f64::INFINITY, max_steps: 200_000 }
}

/// σ on `[0, 1)`.
pub fn build_sigma(flux: &FluxModel, opts: &SigmaOptions) -> Result<ThresholdCurve> {
    let SigmaOptions { eps, rho_step, cap, rtol, atol } = *opts;
    if !(eps > 0.0 && eps <= 1e-3) {
        return Err(Error::InvalidParameter(format!("eps must lie in (0, 1e-3], got {eps}")));
    }
    if !(cap >= 1e3) {
        return Err(Error::InvalidParameter(format!("cap must be >= 1e3, got {cap}")));
    }
    if !(rho_step > 0.0 && rho_step < 0.5) {
        return Err(Error::InvalidParameter(format!("rho_step must lie in (0, 0.5), got {rho_step}")));
    }
    let beta = flux.beta();
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::HypothesisViolation(format!("beta = {beta} is not positive")));
    }
    check_seed_cone(flux, eps)?;

    let mut grid = vec![0.0, eps];
    uniform_from(eps, rho_step, &mut grid);
    push_tail(&mut grid);

    let mut xs = vec![0.0, eps];
    let mut ys = vec![0.0, beta * eps];
    let mut blowup_at = None;
    let mut o = ode_options(rtol, atol);
    let rhs = |r: f64, y: &[f64; 1]| [trajectory_slope(flux, r, y[0])];
    for w in grid[1..].windows(2) {
        let (a, b) = (w[0], w[1]);
        let y0 = *ys.last().unwrap();
        let out =
            ode::integrate(rhs, a, [y0], b, &o, |_, y, _| if y[0] > cap { Control::Stop } else { Control::Continue });
        match out.finish {
            Finish::Reached => {
                xs.push(b);
                ys.push(out.y[0]);
                o.h_init = out.h_next;
            }
            Finish::Stopped => {
                blowup_at = Some(out.t);
                if out.t > *xs.last().unwrap() {
                    xs.push(out.t);
                    ys.push(out.y[0]);
                }
                break;
            }
            Finish::StepFloor if out.y[0].abs() > 1e3 => {
                blowup_at = Some(out.t);
                break;
            }
            _ => return Err(Error::StepFloor { t: out.t }),
        }
    }
    if let Some(r) = blowup_at {
        if r <= flux.rho_c() {
            return Err(Error::HypothesisViolation(format!(
                "sigma blows up at {r}, not beyond the inflection point {}",
                flux.rho_c()
            )));
        }
    }
    let mut slopes: Vec<f64> = xs.iter().zip(&ys).map(|(&r, &s)| trajectory_slope(flux, r, s)).collect();
    slopes[0] = beta;
    Ok(ThresholdCurve::new(Which::Sigma, xs, ys, slopes, blowup_at, None))
}

/// Explicit Euler on a lattice inside `[0, eps]` started on the line `βρ`; the iterates must
/// stay in the cone `0 <= σ <= 5βρ/4`.
fn check_seed_cone(flux: &FluxModel, eps: f64) -> Result<()> {
    const LATTICE: usize = 64;
    let beta = flux.beta();
    let h = eps / LATTICE as f64;
    let mut r = h;
    let mut s = beta * h;
    for _ in 1..LATTICE {
        s += h * trajectory_slope(flux, r, s);
        r += h;
        let upper = 1.25 * beta * r;
        if !(s >= 0.0 && s <= upper) {
            return Err(Error::SeedRegionViolation { rho: r, sigma: s, upper });
        }
    }
    Ok(())
}

/// γ on `(ρ_c, 1)`.
pub fn build_gamma(flux: &FluxModel, opts: &GammaOptions) -> Result<ThresholdCurve> {
    let GammaOptions { delta, rho_step, growth, cap, rtol, atol } = *opts;
    if !(delta > 0.0 && delta <= 1e-3) {
        return Err(Error::InvalidParameter(format!("delta must lie in (0, 1e-3], got {delta}")));
    }
    if !(cap >= 1e3) {
        return Err(Error::InvalidParameter(format!("cap must be >= 1e3, got {cap}")));
    }
    if !(growth > 1.0) || !(rho_step > 0.0 && rho_step < 0.5) {
        return Err(Error::InvalidParameter("growth must exceed 1 and rho_step lie in (0, 0.5)".into()));
    }
    let rc = flux.rho_c();
    if rc >= 1.0 {
        return Err(Error::NoInflection);
    }
    let seed = pole_seed(flux)?;

    // Offsets from ρ_c grow geometrically until they reach the uniform spacing.
    let mut grid = vec![rc + delta];
    let mut h = delta;
    while h * (growth - 1.0) < rho_step && rc + h * growth < 1.0 - 1e-3 {
        h *= growth;
        grid.push(rc + h);
    }
    uniform_from(*grid.last().unwrap(), rho_step, &mut grid);
    push_tail(&mut grid);

    let o = ode_options(rtol, atol);
    let (xs, ys, blowup_at) = march_through_pole(
        &grid,
        seed.eta(delta),
        |r, g| trajectory_slope(flux, r, g),
        |r, e| reciprocal_slope(flux, r, e),
        cap,
        o,
    )?;
    let slopes = xs.iter().zip(&ys).map(|(&r, &g)| trajectory_slope(flux, r, g)).collect();
    Ok(ThresholdCurve::new(Which::Gamma, xs, ys, slopes, blowup_at, Some(seed)))
}

/// Integrates a trajectory that starts at `-∞` (given as `η = 1/d` at `grid[0]`) across
/// `grid`, switching between `d` and `η` so neither representation sees a pole. Returns the
/// grid values of `d` and the abscissa where `d` passed `cap`, if it did.
fn march_through_pole<D, R>(
    grid: &[f64],
    eta0: f64,
    direct: D,
    reciprocal: R,
    cap: f64,
    mut o: ode::Options,
) -> Result<(Vec<f64>, Vec<f64>, Option<f64>)>
where
    D: Fn(f64, f64) -> f64,
    R: Fn(f64, f64) -> f64,
{
    // Hysteresis: leave η once |η| >= 2 (|d| <= 1/2), return once |d| >= 2.
    const TO_DIRECT: f64 = 2.0;
    const TO_RECIPROCAL: f64 = 2.0;

    let mut xs = vec![grid[0]];
    let mut ys = vec![1.0 / eta0];
    let mut in_reciprocal = true;
    let mut state = eta0;
    for w in grid.windows(2) {
        let (mut a, b) = (w[0], w[1]);
        loop {
            let mut last_pos = (a, state);
            let out = if in_reciprocal {
                ode::integrate(
                    |r, y: &[f64; 1]| [reciprocal(r, y[0])],
                    a,
                    [state],
                    b,
                    &o,
                    |t, y, _| {
                        if y[0].abs() >= TO_DIRECT || (last_pos.1 > 0.0 && y[0] < 1.0 / cap) {
                            Control::Stop
                        } else {
                            last_pos = (t, y[0]);
                            Control::Continue
                        }
                    },
                )
            } else {
                ode::integrate(
                    |r, y: &[f64; 1]| [direct(r, y[0])],
                    a,
                    [state],
                    b,
                    &o,
                    |_, y, _| {
                        if y[0].abs() >= TO_RECIPROCAL {
                            Control::Stop
                        } else {
                            Control::Continue
                        }
                    },
                )
            };
            o.h_init = out.h_next;
            let v = out.y[0];
            let blown = in_reciprocal && last_pos.1 > 0.0 && v < 1.0 / cap;
            match out.finish {
                Finish::Stopped if blown && v > 0.0 => return Ok((xs, ys, Some(out.t))),
                Finish::Stopped if blown => {
                    // η stepped across zero: locate the root from the last positive state.
                    let (t0, e0) = last_pos;
                    let mut tc = t0 + (out.t - t0) * e0 / (e0 - v);
                    for _ in 0..4 {
                        let e = ode::solve(|r, y: &[f64; 1]| [reciprocal(r, y[0])], t0, [e0], tc, &o).y[0];
                        tc -= e / reciprocal(tc, e);
                    }
                    return Ok((xs, ys, Some(tc)));
                }
                Finish::StepFloor if in_reciprocal && v > 0.0 && v < 1e-3 => return Ok((xs, ys, Some(out.t))),
                Finish::Reached => {
                    state = v;
                    xs.push(b);
                    ys.push(if in_reciprocal { 1.0 / v } else { v });
                    break;
                }
                Finish::Stopped => {
                    a = out.t;
                    in_reciprocal = !in_reciprocal;
                    state = 1.0 / v;
                }
                _ => return Err(Error::StepFloor { t: out.t }),
            }
        }
    }
    Ok((xs, ys, None))
}

/// First non-vanishing `f^{(n)}(ρ_c)`, `n >= 3`, gives `η^{(n-1)}(ρ_c) = -f^{(n)}(ρ_c)/(ρ_c f(ρ_c))`.
pub fn pole_seed(flux: &FluxModel) -> Result<PoleSeed> {
    let rc = flux.rho_c();
    if rc >= 1.0 {
        return Err(Error::NoInflection);
    }
    let denom = rc * flux.eval(rc);
    for n in 3..=MAX_DERIVATIVE {
        let c = flux.derivative(n, rc);
        if c.abs() > 1e-10 {
            return Ok(PoleSeed { rho_c: rc, coef: -c / denom, order: n - 1 });
        }
    }
    Err(Error::DegenerateInflection { rho_c: rc })
}

/// `ρ(1-ρ)/J`.
pub fn sigma_closed_fj(j: f64, rho: f64) -> Result<f64> {
    if !(j > 0.0) {
        return Err(Error::InvalidParameter(format!("J must be positive, got {j}")));
    }
    Ok(rho * (1.0 - rho) / j)
}

/// `ρ²(1-ρ)(ρ - ρ_e) / (J(ρ - ρ_c)²)` with `ρ_e = 4J/(J+1)²`, `ρ_c = 2/(J+1)`.
pub fn gamma_closed_fj(j: f64, rho: f64) -> Result<f64> {
    if !(j > 1.0) {
        return Err(Error::InvalidParameter(format!("J must exceed 1, got {j}")));
    }
    let rc = 2.0 / (j + 1.0);
    if !(rho > rc && rho <= 1.0) {
        return Err(Error::InvalidParameter(format!("rho must lie in ({rc}, 1], got {rho}")));
    }
    let re = 4.0 * j / ((j + 1.0) * (j + 1.0));
    Ok(rho * rho * (1.0 - rho) * (rho - re) / (j * (rho - rc) * (rho - rc)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    Subcritical,
    TypeI,
    TypeII,
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Region::Subcritical => "subcritical",
            Region::TypeI => "type-I",
            Region::TypeII => "type-II",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub region: Region,
    pub witness_x: Option<f64>,
    /// `d0 - σ(ρ0)` or `γ(ρ0) - d0` at the worst point: positive inside a supercritical
    /// region, negative (distance to the nearest curve) when subcritical.
    pub margin: f64,
    /// Set when a profile has both type-I and type-II points.
    pub note: Option<String>,
    /// Sample locations whose region disagrees with both neighbours' under 2x refinement.
    pub warnings: Vec<String>,
}

fn pair_region(
    flux: &FluxModel,
    sigma: &ThresholdCurve,
    gamma: Option<&ThresholdCurve>,
    rho0: f64,
    d0: f64,
) -> Result<(Region, f64)> {
    if !(0.0..1.0).contains(&rho0) {
        return Err(Error::InvalidParameter(format!("rho0 must lie in [0, 1), got {rho0}")));
    }
    let rc = flux.rho_c();
    if rc < 1.0 && gamma.is_none() {
        return Err(Error::InvalidParameter("flux has an inflection point but no gamma curve was given".into()));
    }
    let s = sigma.eval(rho0);
    if d0 > s {
        return Ok((Region::TypeI, d0 - s));
    }
    let mut margin = d0 - s;
    if rho0 > rc {
        if let Some(g) = gamma {
            let g = g.eval(rho0);
            if d0 <= g {
                return Ok((Region::TypeII, g - d0));
            }
            margin = margin.max(g - d0);
        }
    }
    Ok((Region::Subcritical, margin))
}

pub fn classify_pair(
    flux: &FluxModel,
    sigma: &ThresholdCurve,
    gamma: Option<&ThresholdCurve>,
    rho0: f64,
    d0: f64,
) -> Result<Classification> {
    let (region, margin) = pair_region(flux, sigma, gamma, rho0, d0)?;
    Ok(Classification { region, witness_x: None, margin, note: None, warnings: Vec::new() })
}

/// Classify sampled initial data `(x_i, ρ0(x_i), ρ0'(x_i))`.
pub fn classify_profile(
    flux: &FluxModel,
    sigma: &ThresholdCurve,
    gamma: Option<&ThresholdCurve>,
    x: &[f64],
    rho: &[f64],
    drho: &[f64],
) -> Result<Classification> {
    if x.len() != rho.len() || x.len() != drho.len() || x.is_empty() {
        return Err(Error::InvalidParameter("profile columns must be non-empty and of equal length".into()));
    }
    let mut regions = Vec::with_capacity(x.len());
    let mut worst: [Option<(f64, f64)>; 2] = [None, None];
    let mut closest = f64::NEG_INFINITY;
    for i in 0..x.len() {
        let (reg, m) = pair_region(flux, sigma, gamma, rho[i], drho[i])?;
        regions.push(reg);
        let slot = match reg {
            Region::TypeI => 0,
            Region::TypeII => 1,
            Region::Subcritical => {
                closest = closest.max(m);
                continue;
            }
        };
        if worst[slot].is_none_or(|(_, wm)| m > wm) {
            worst[slot] = Some((x[i], m));
        }
    }

    let mut warnings = Vec::new();
    for i in 0..x.len().saturating_sub(1) {
        let mid_rho = 0.5 * (rho[i] + rho[i + 1]);
        let mid_d = 0.5 * (drho[i] + drho[i + 1]);
        let (reg, _) = pair_region(flux, sigma, gamma, mid_rho, mid_d)?;
        if reg != regions[i] && reg != regions[i + 1] {
            warnings.push(format!(
                "resolution: midpoint x={} is {reg} while neighbours are {} and {}",
                0.5 * (x[i] + x[i + 1]),
                regions[i],
                regions[i + 1]
            ));
        }
    }

    let (region, witness, note) = match worst {
        [Some(a), Some(b)] => (
            Region::TypeI,
            Some(a),
            Some(format!("type-I witness x={} (margin {:e}); type-II witness x={} (margin {:e})", a.0, a.1, b.0, b.1)),
        ),
        [Some(a), None] => (Region::TypeI, Some(a), None),
        [None, Some(b)] => (Region::TypeII, Some(b), None),
        [None, None] => (Region::Subcritical, None, None),
    };
    Ok(Classification {
        region,
        witness_x: witness.map(|w| w.0),
        margin: witness.map_or(closest, |w| w.1),
        note,
        warnings,
    })
}
