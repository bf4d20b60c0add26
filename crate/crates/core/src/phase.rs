//! Characteristic dynamics of `(ρ, d = ∂_x ρ)`:
//!
//! ```text
//! ρ' = -ρ f(ρ) E,    d' = -(f''(ρ) d² + (f + 2ρf') d + ρ² f) E,    x' = f'(ρ) E,
//! ```
//!
//! where `E = e^{-ρ̄}` is either a constant or read off a recorded PDE run. Since `E > 0`
//! only rescales time, the orbit `d(ρ)` is factor-independent.

use std::cell::Cell;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flux::FluxModel;
use crate::interp::Pchip;
use crate::kernel::{self, KernelSpec};
use crate::ode::{self, Control, Finish};
use crate::pde::{GridSolution, SimConfig, Simulation};
use crate::profiles::Profile;
use crate::quad;
use crate::threshold::{build_sigma, trajectory_slope, SigmaOptions};

/// Convergence to the origin: `ρ < RHO_TINY` and `|d| < D_TINY`.
pub const RHO_TINY: f64 = 1e-8;
pub const D_TINY: f64 = 1e-6;

/// A step-floor stop with `|d|` above this counts as blow-up.
const FLOOR_BLOWUP: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseState {
    pub t: f64,
    pub rho: f64,
    pub d: f64,
    /// Characteristic position; only meaningful for a coupled factor.
    pub x: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Terminal {
    ConvergedToOrigin,
    BlowUpPlus { t_star: f64 },
    BlowUpMinus { t_star: f64 },
    TimeLimit,
}

impl Terminal {
    pub fn t_star(&self) -> Option<f64> {
        match *self {
            Terminal::BlowUpPlus { t_star } | Terminal::BlowUpMinus { t_star } => Some(t_star),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Terminal::ConvergedToOrigin => "converged",
            Terminal::BlowUpPlus { .. } => "blowup+",
            Terminal::BlowUpMinus { .. } => "blowup-",
            Terminal::TimeLimit => "time-limit",
        }
    }
}

impl fmt::Display for Terminal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone)]
pub struct PhaseTrajectory {
    pub states: Vec<PhaseState>,
    pub terminal: Terminal,
}

impl PhaseTrajectory {
    pub fn last(&self) -> &PhaseState {
        self.states.last().expect("trajectory has at least its seed")
    }
}

/// `e^{-ρ̄}` sampled from a PDE run: cell-centred snapshots, interpolated linearly in `x`
/// and `t` and clamped to the end values outside the grid.
#[derive(Debug, Clone)]
pub struct FactorField {
    x0: f64,
    dx: f64,
    times: Vec<f64>,
    values: Vec<Vec<f64>>,
    mass: f64,
}

impl FactorField {
    /// The factor of a single state, constant in time.
    pub fn frozen(kernel: &KernelSpec, sol: &GridSolution) -> Result<Self> {
        let grid = sol.grid();
        let rhobar = kernel::nonlocal_density(kernel, &grid, &sol.rho)?;
        Ok(Self {
            x0: grid.x0,
            dx: grid.dx,
            times: vec![sol.t],
            values: vec![rhobar.iter().map(|r| (-r).exp()).collect()],
            mass: kernel.k_max * sol.mass(),
        })
    }

    /// Run the PDE (without the refined companion) to `cfg.t_end`, keeping every
    /// `stride`-th step.
    pub fn record(
        flux: &FluxModel,
        kernel: &KernelSpec,
        profile: &Profile,
        cfg: &SimConfig,
        stride: usize,
    ) -> Result<Self> {
        let stride = stride.max(1);
        let cfg = SimConfig { companion: false, ..*cfg };
        let mut sim = Simulation::new(flux, kernel, profile, &cfg)?;
        let grid = sim.base.grid();
        let mass = kernel.k_max * sim.base.mass0;
        let mut times = vec![0.0];
        let mut values = vec![sim.base.factor().to_vec()];
        let mut k = 0usize;
        while sim.t() < cfg.t_end * (1.0 - 1e-14) {
            let dt = sim.max_dt().min(cfg.t_end - sim.t());
            sim.advance(dt)?;
            k += 1;
            if k.is_multiple_of(stride) || sim.t() >= cfg.t_end * (1.0 - 1e-14) {
                times.push(sim.t());
                values.push(sim.base.factor().to_vec());
            }
        }
        Ok(Self { x0: grid.x0, dx: grid.dx, times, values, mass })
    }

    /// Mass bound `K_M m` fixing the admissible range `[e^{-K_M m}, 1]`.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Last recorded time; unbounded for a frozen field.
    pub fn horizon(&self) -> f64 {
        if self.times.len() == 1 {
            return f64::INFINITY;
        }
        *self.times.last().unwrap()
    }

    fn at_snapshot(&self, k: usize, x: f64) -> f64 {
        let v = &self.values[k];
        let s = (x - self.x0) / self.dx;
        if s <= 0.0 {
            return v[0];
        }
        let i = s.floor() as usize;
        if i + 1 >= v.len() {
            return v[v.len() - 1];
        }
        let w = s - i as f64;
        (1.0 - w) * v[i] + w * v[i + 1]
    }

    pub fn eval(&self, t: f64, x: f64) -> f64 {
        let n = self.times.len();
        if n == 1 || t <= self.times[0] {
            return self.at_snapshot(0, x);
        }
        if t >= self.times[n - 1] {
            return self.at_snapshot(n - 1, x);
        }
        let k = self.times.partition_point(|&s| s <= t) - 1;
        let w = (t - self.times[k]) / (self.times[k + 1] - self.times[k]);
        (1.0 - w) * self.at_snapshot(k, x) + w * self.at_snapshot(k + 1, x)
    }
}

#[derive(Debug, Clone)]
pub enum NonlocalFactorModel {
    /// `E ≡ 1`, the upper bound.
    ConstantOne,
    /// `E ≡ e^{-m}`, the lower bound for total mass `m`.
    ConstantLower { mass: f64 },
    /// `E(t, x(t))` along the characteristic starting at `x0`.
    Coupled { field: Arc<FactorField>, x0: f64 },
}

impl NonlocalFactorModel {
    fn x0(&self) -> f64 {
        match self {
            NonlocalFactorModel::Coupled { x0, .. } => *x0,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PhaseOptions {
    pub t_max: f64,
    /// `|d|` beyond which the trajectory is declared blown up.
    pub blowup_cap: f64,
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for PhaseOptions {
    fn default() -> Self {
        Self { t_max: 1e12, blowup_cap: 1e6, rtol: 1e-10, atol: 1e-14, max_steps: 1_000_000 }
    }
}

/// The right-hand side of the `(ρ, d)` system for a given factor value.
pub fn phase_rhs(flux: &FluxModel, rho: f64, d: f64, e: f64) -> (f64, f64) {
    let f = flux.eval(rho);
    let f1 = flux.d1(rho);
    let f2 = flux.d2(rho);
    (-rho * f * e, -(f2 * d * d + (f + 2.0 * rho * f1) * d + rho * rho * f) * e)
}

pub fn integrate_phase(
    flux: &FluxModel,
    factor: &NonlocalFactorModel,
    rho0: f64,
    d0: f64,
    opts: &PhaseOptions,
) -> Result<PhaseTrajectory> {
    if !(0.0..1.0).contains(&rho0) || !d0.is_finite() {
        return Err(Error::InvalidParameter(format!("seed ({rho0}, {d0}) must have rho0 in [0, 1)")));
    }
    if !(opts.t_max > 0.0) {
        return Err(Error::InvalidParameter(format!("t_max must be positive, got {}", opts.t_max)));
    }
    if !(opts.blowup_cap >= 1e4) {
        return Err(Error::InvalidParameter(format!("blowup_cap must be >= 1e4, got {}", opts.blowup_cap)));
    }
    let (t_end, lower) = match factor {
        NonlocalFactorModel::ConstantOne => (opts.t_max, 1.0),
        NonlocalFactorModel::ConstantLower { mass } => {
            if !(*mass >= 0.0 && mass.is_finite()) {
                return Err(Error::InvalidParameter(format!("mass must be >= 0, got {mass}")));
            }
            (opts.t_max, (-mass).exp())
        }
        NonlocalFactorModel::Coupled { field, .. } => {
            if !(field.horizon() > 0.0) {
                return Err(Error::InvalidParameter("coupled factor field covers no time span".into()));
            }
            (opts.t_max.min(field.horizon()), (-field.mass()).exp())
        }
    };
    let x0 = factor.x0();
    let mut states = vec![PhaseState { t: 0.0, rho: rho0, d: d0, x: x0 }];
    if rho0 < RHO_TINY && d0.abs() < D_TINY {
        return Ok(PhaseTrajectory { states, terminal: Terminal::ConvergedToOrigin });
    }

    let violation: Cell<Option<(f64, f64)>> = Cell::new(None);
    let factor_at = |t: f64, x: f64| -> f64 {
        match factor {
            NonlocalFactorModel::ConstantOne => 1.0,
            NonlocalFactorModel::ConstantLower { .. } => lower,
            NonlocalFactorModel::Coupled { field, .. } => {
                let e = field.eval(t, x);
                if !(e >= lower - 1e-9 && e <= 1.0 + 1e-9) && violation.get().is_none() {
                    violation.set(Some((e, t)));
                }
                e
            }
        }
    };
    let rhs = |t: f64, y: &[f64; 3]| {
        let e = factor_at(t, y[2]);
        let (dr, dd) = phase_rhs(flux, y[0], y[1], e);
        [dr, dd, flux.d1(y[0]) * e]
    };
    let o = ode::Options {
        rtol: opts.rtol,
        atol: opts.atol,
        h_min: 1e-14,
        max_steps: opts.max_steps,
        ..Default::default()
    };
    let mut terminal = None;
    let cap = opts.blowup_cap;
    let out = ode::integrate(rhs, 0.0, [rho0, d0, x0], t_end, &o, |t, y, _| {
        states.push(PhaseState { t, rho: y[0], d: y[1], x: y[2] });
        if violation.get().is_some() {
            return Control::Stop;
        }
        if y[1].abs() > cap {
            terminal = Some(blowup(y[1], t));
            Control::Stop
        } else if y[0] < RHO_TINY && y[1].abs() < D_TINY {
            terminal = Some(Terminal::ConvergedToOrigin);
            Control::Stop
        } else {
            Control::Continue
        }
    });
    if let Some((value, t)) = violation.get() {
        return Err(Error::FactorOutOfBounds { value, lower, upper: 1.0, t });
    }
    let terminal = match (terminal, out.finish) {
        (Some(term), _) => term,
        (None, Finish::StepFloor) if out.y[1].abs() > FLOOR_BLOWUP => {
            blowup(out.y[1], states.last().map_or(0.0, |s| s.t))
        }
        (None, Finish::StepFloor) => return Err(Error::StepFloor { t: out.t }),
        _ => Terminal::TimeLimit,
    };
    Ok(PhaseTrajectory { states, terminal })
}

fn blowup(d: f64, t_star: f64) -> Terminal {
    if d > 0.0 {
        Terminal::BlowUpPlus { t_star }
    } else {
        Terminal::BlowUpMinus { t_star }
    }
}

/// Integrate many seeds in parallel; results keep the seed order.
pub fn phase_portrait(
    flux: &FluxModel,
    factor: &NonlocalFactorModel,
    seeds: &[(f64, f64)],
    opts: &PhaseOptions,
) -> Vec<Result<PhaseTrajectory>> {
    seeds.par_iter().map(|&(r, d)| integrate_phase(flux, factor, r, d, opts)).collect()
}

/// Orbit `d(ρ)` of the phase system, followed in decreasing `ρ`.
#[derive(Debug, Clone)]
pub struct PhaseCurve {
    rho: Vec<f64>,
    d: Vec<f64>,
    blowup_at: Option<f64>,
    interp: Pchip,
}

impl PhaseCurve {
    /// Nodes in decreasing `ρ`, starting at the seed.
    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn d(&self) -> &[f64] {
        &self.d
    }

    /// `ρ` at which `|d|` exceeded the cap, if it did.
    pub fn blowup_at(&self) -> Option<f64> {
        self.blowup_at
    }

    /// Lowest `ρ` reached.
    pub fn rho_min(&self) -> f64 {
        *self.rho.last().unwrap()
    }

    /// `d` at `ρ` within the covered range (end cubic extension outside it).
    pub fn eval(&self, rho: f64) -> f64 {
        self.interp.eval(rho)
    }
}

const CURVE_STEP: f64 = 1e-3;

pub fn trajectory_in_phase_plane(flux: &FluxModel, rho0: f64, d0: f64, rho_end: f64) -> Result<PhaseCurve> {
    trajectory_with_cap(flux, rho0, d0, rho_end, 1e6)
}

pub fn trajectory_with_cap(flux: &FluxModel, rho0: f64, d0: f64, rho_end: f64, cap: f64) -> Result<PhaseCurve> {
    if !(rho_end > 0.0 && rho_end < rho0 && rho0 < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < rho_end < rho0 < 1, got rho_end={rho_end}, rho0={rho0}"
        )));
    }
    if !d0.is_finite() {
        return Err(Error::InvalidParameter(format!("d0 must be finite, got {d0}")));
    }
    let mut grid = vec![rho0];
    let mut r = rho0 - CURVE_STEP;
    while r > rho_end + 0.5 * CURVE_STEP {
        grid.push(r);
        r -= CURVE_STEP;
    }
    grid.push(rho_end);

    let mut rho = vec![rho0];
    let mut d = vec![d0];
    let mut blowup_at = None;
    let mut o = ode::Options { rtol: 1e-11, atol: 1e-13, h_min: 1e-15, max_steps: 200_000, ..Default::default() };
    let rhs = |r: f64, y: &[f64; 1]| [trajectory_slope(flux, r, y[0])];
    // every accepted step becomes a node, so nodes crowd where the orbit bends towards a pole
    for w in grid.windows(2) {
        let y0 = *d.last().unwrap();
        let out = ode::integrate(rhs, w[0], [y0], w[1], &o, |t, y, _| {
            if t < *rho.last().unwrap() {
                rho.push(t);
                d.push(y[0]);
            }
            if y[0].abs() > cap {
                Control::Stop
            } else {
                Control::Continue
            }
        });
        match out.finish {
            Finish::Reached => o.h_init = out.h_next,
            Finish::Stopped => {
                blowup_at = Some(out.t);
                break;
            }
            Finish::StepFloor if out.y[0].abs() > FLOOR_BLOWUP => {
                blowup_at = Some(out.t);
                break;
            }
            _ => return Err(Error::StepFloor { t: out.t }),
        }
    }
    let slopes: Vec<f64> = rho.iter().zip(&d).map(|(&r, &v)| trajectory_slope(flux, r, v)).collect();
    let interp = if rho.len() >= 2 {
        Pchip::with_slopes(
            rho.iter().rev().cloned().collect(),
            d.iter().rev().cloned().collect(),
            slopes.into_iter().rev().collect(),
        )
    } else {
        // blew up inside the first sub-step: a flat stand-in through the seed
        Pchip::with_slopes(vec![rho0 - 1e-12, rho0], vec![d0, d0], vec![0.0, 0.0])
    };
    Ok(PhaseCurve { rho, d, blowup_at, interp })
}

/// Roots `(d_-, d_+)` of `f'' d² + (f + 2ρf') d + ρ² f = 0`; `None` when they are complex.
pub fn nullclines(flux: &FluxModel, rho: f64) -> Result<Option<(f64, f64)>> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidParameter(format!("rho must lie in (0, 1), got {rho}")));
    }
    let a = flux.d2(rho);
    if rho == flux.rho_c() || a.abs() < 1e-14 {
        return Err(Error::InvalidParameter(format!("f'' vanishes at rho = {rho}")));
    }
    let f = flux.eval(rho);
    let b = f + 2.0 * rho * flux.d1(rho);
    let c = rho * rho * f;
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Ok(None);
    }
    // cancellation-free pair
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let (r1, r2) = if q == 0.0 { (0.0, 0.0) } else { (q / a, c / q) };
    let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
    if rho < flux.rho_c() && !(lo < 0.0 && 0.0 < hi) {
        return Err(Error::HypothesisViolation(format!(
            "nullclines at rho={rho} are not separated by zero: ({lo}, {hi})"
        )));
    }
    // with f'' < 0 the larger root is d_+ = (-b - sqrt(D)) / (2f'')
    Ok(Some((lo, hi)))
}

/// `e^m ∫_{ρ1}^{ρ0} dρ / (ρ f(ρ))`, an upper bound on the time `ρ` needs to fall to `ρ1`.
pub fn descent_time(flux: &FluxModel, mass: f64, rho0: f64, rho1: f64) -> Result<f64> {
    if !(rho1 > 0.0 && rho1 < rho0 && rho0 < 1.0) {
        return Err(Error::InvalidParameter(format!("need 0 < rho1 < rho0 < 1, got rho1={rho1}, rho0={rho0}")));
    }
    if !(mass >= 0.0 && mass.is_finite()) {
        return Err(Error::InvalidParameter(format!("mass must be >= 0, got {mass}")));
    }
    let (v, _) = quad::integrate(|r| 1.0 / (r * flux.eval(r)), rho1, rho0, 0.0, 1e-12);
    Ok(mass.exp() * v)
}

/// Upper bound `t1 + 1/(C d_+(ρ1))` on the blow-up time of a type-I seed, with
/// `C = e^{-m} min_{[0, ρ1]} (-f'')` and `t1` the descent time to `ρ1`.
pub fn blowup_time_bound(flux: &FluxModel, mass: f64, rho0: f64, d0: f64, rho1: f64) -> Result<f64> {
    require_type_one(flux, rho0, d0)?;
    let curve = trajectory_in_phase_plane(flux, rho0, d0, rho1.min(0.5 * rho0))?;
    bound_from_curve(flux, mass, rho0, &curve, rho1)
}

/// The `ρ1` (from a geometric scan) giving the smallest [`blowup_time_bound`], with that bound.
pub fn choose_rho1(flux: &FluxModel, mass: f64, rho0: f64, d0: f64) -> Result<(f64, f64)> {
    require_type_one(flux, rho0, d0)?;
    let top = rho0.min(flux.rho_c()) * (1.0 - 1e-3);
    let bottom = 1e-4 * top;
    let curve = trajectory_in_phase_plane(flux, rho0, d0, bottom)?;
    let mut best: Option<(f64, f64)> = None;
    for k in 0..=80 {
        let rho1 = top * (bottom / top).powf(k as f64 / 80.0);
        if let Ok(b) = bound_from_curve(flux, mass, rho0, &curve, rho1) {
            if best.is_none_or(|(_, v)| b < v) {
                best = Some((rho1, b));
            }
        }
    }
    best.ok_or_else(|| Error::InvalidParameter(format!("no admissible rho1 below {top} for seed ({rho0}, {d0})")))
}

fn require_type_one(flux: &FluxModel, rho0: f64, d0: f64) -> Result<()> {
    let sigma = build_sigma(flux, &SigmaOptions::default())?;
    if !(rho0 > 0.0 && rho0 < 1.0 && d0 > sigma.eval(rho0)) {
        return Err(Error::InvalidParameter(format!("seed ({rho0}, {d0}) is not type-I")));
    }
    Ok(())
}

fn bound_from_curve(flux: &FluxModel, mass: f64, rho0: f64, curve: &PhaseCurve, rho1: f64) -> Result<f64> {
    if !(rho1 > 0.0 && rho1 < rho0 && rho1 < flux.rho_c()) {
        return Err(Error::InvalidParameter(format!("rho1 must lie in (0, min(rho0, rho_c)), got {rho1}")));
    }
    // inf of d along the orbit until it reaches ρ1 (or blows up first)
    let mut lower = f64::INFINITY;
    for (&r, &v) in curve.rho().iter().zip(curve.d()) {
        if r < rho1 {
            break;
        }
        lower = lower.min(v);
    }
    if curve.blowup_at().is_none() && curve.rho_min() > rho1 {
        return Err(Error::InvalidParameter(format!("orbit does not reach rho1 = {rho1}")));
    }
    if curve.rho_min() <= rho1 && curve.blowup_at().is_none() {
        lower = lower.min(curve.eval(rho1));
    }
    let d_plus = match nullclines(flux, rho1)? {
        Some((_, hi)) => hi,
        None => return Err(Error::InvalidParameter(format!("no real nullclines at rho1 = {rho1}"))),
    };
    if !(2.0 * d_plus < lower) {
        return Err(Error::Rho1TooLarge { rho1, twice_d_plus: 2.0 * d_plus, lower });
    }
    let n = 1000;
    let min_neg_f2 = (0..=n).map(|k| -flux.d2(rho1 * k as f64 / n as f64)).fold(f64::INFINITY, f64::min);
    if !(min_neg_f2 > 0.0) {
        return Err(Error::HypothesisViolation(format!("f'' is not negative on [0, {rho1}]")));
    }
    let c = (-mass).exp() * min_neg_f2;
    Ok(descent_time(flux, mass, rho0, rho1)? + 1.0 / (c * d_plus))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_is_stationary() {
        let f = FluxModel::family_j(2.0).unwrap();
        let t = integrate_phase(&f, &NonlocalFactorModel::ConstantOne, 0.0, 0.0, &PhaseOptions::default()).unwrap();
        assert_eq!(t.terminal, Terminal::ConvergedToOrigin);
        assert_eq!(t.states.len(), 1);
    }

    #[test]
    fn type_one_and_subcritical_seeds() {
        let f = FluxModel::family_j(2.0).unwrap();
        let o = PhaseOptions::default();
        let one = NonlocalFactorModel::ConstantOne;
        let t = integrate_phase(&f, &one, 0.5, 0.2, &o).unwrap();
        assert!(matches!(t.terminal, Terminal::BlowUpPlus { .. }), "{:?}", t.terminal);
        let t = integrate_phase(&f, &one, 0.5, 0.1, &o).unwrap();
        assert_eq!(t.terminal, Terminal::ConvergedToOrigin);
        let t = integrate_phase(&f, &one, 0.8, -0.5, &o).unwrap();
        assert!(matches!(t.terminal, Terminal::BlowUpMinus { .. }), "{:?}", t.terminal);
    }

    #[test]
    fn lwr_nullclines() {
        let (lo, hi) = nullclines(&FluxModel::lwr(), 0.5).unwrap().unwrap();
        assert!((lo + 0.125).abs() < 1e-15 && (hi - 0.25).abs() < 1e-15);
        // real roots everywhere for J = 2; complex ones need a much sharper flux
        let f = FluxModel::family_j(2.0).unwrap();
        assert!(nullclines(&f, 0.9).unwrap().is_some());
        assert!(nullclines(&f, 2.0 / 3.0).is_err());
        assert!(nullclines(&FluxModel::family_j(10.0).unwrap(), 0.3).unwrap().is_none());
    }

    #[test]
    fn bad_arguments() {
        let f = FluxModel::lwr();
        let o = PhaseOptions::default();
        let one = NonlocalFactorModel::ConstantOne;
        assert!(integrate_phase(&f, &one, 1.0, 0.0, &o).is_err());
        assert!(integrate_phase(&f, &one, 0.5, 0.0, &PhaseOptions { blowup_cap: 10.0, ..o }).is_err());
        assert!(descent_time(&f, 0.0, 0.5, 0.0).is_err());
        assert!(trajectory_in_phase_plane(&f, 0.5, 0.1, 0.6).is_err());
        assert!(blowup_time_bound(&f, 0.0, 0.5, 0.1, 0.05).is_err());
    }

    #[test]
    fn rho1_precondition() {
        let f = FluxModel::lwr();
        assert!(matches!(blowup_time_bound(&f, 0.0, 0.5, 0.3, 0.45), Err(Error::Rho1TooLarge { .. })));
        let b = blowup_time_bound(&f, 0.0, 0.5, 0.3, 0.05).unwrap();
        assert!(b.is_finite() && b > 0.0);
    }
}
