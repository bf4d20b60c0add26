//! Acceptance criteria 1–10, one PASS/FAIL line each.

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use ctflow::interp::Pchip;
use ctflow::threshold::trajectory_slope;
use ctflow::*;

fn report(n: usize, ok: bool, detail: String) {
    println!("criterion {n:>2}: {} — {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {n} failed: {detail}");
}

fn max_dev(grid: impl Iterator<Item = f64>, f: impl Fn(f64) -> f64) -> (f64, f64) {
    grid.map(|r| (f(r), r)).fold((0.0, f64::NAN), |a, b| if b.0 > a.0 { b } else { a })
}

fn linspace(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| a + (b - a) * i as f64 / (n - 1) as f64)
}

#[test]
fn c01_sigma_closed_form() {
    let mut ok = true;
    let mut parts = Vec::new();
    for j in [0.5, 1.0, 2.0, 3.0] {
        let start = Instant::now();
        let s = build_sigma(&FluxModel::family_j(j).unwrap(), &SigmaOptions::default()).unwrap();
        let elapsed = start.elapsed();
        let (err, at) = max_dev(linspace(0.01, 0.99, 9801), |r| (s.eval(r) - r * (1.0 - r) / j).abs());
        ok &= err <= 1e-6 && elapsed < Duration::from_secs(1);
        parts.push(format!("J={j}: {err:.2e} at {at:.3} ({elapsed:.2?})"));
    }
    report(1, ok, parts.join("; "));
}

#[test]
fn c02_gamma_closed_form() {
    let mut ok = true;
    let mut parts = Vec::new();
    for j in [2.0f64, 3.0] {
        let start = Instant::now();
        let g = build_gamma(&FluxModel::family_j(j).unwrap(), &GammaOptions::default()).unwrap();
        let elapsed = start.elapsed();
        let rc = 2.0 / (j + 1.0);
        let re = 4.0 * j / ((j + 1.0) * (j + 1.0));
        let exact = |r: f64| r * r * (1.0 - r) * (r - re) / (j * (r - rc) * (r - rc));
        let (err, at) = max_dev(linspace(rc + 0.02, 0.98, 9601), |r| (g.eval(r) - exact(r)).abs());
        let at_re = g.eval(re).abs();
        ok &= err <= 1e-5 && at_re <= 1e-6 && elapsed < Duration::from_secs(1);
        parts.push(format!("J={j}: {err:.2e} at {at:.3}, |γ(ρe)|={at_re:.1e} ({elapsed:.2?})"));
    }
    report(2, ok, parts.join("; "));
}

#[test]
fn c03_origin_slope() {
    let eps = 1e-4;
    let mut ok = true;
    let mut parts = Vec::new();
    for (flux, beta) in [(FluxModel::lwr(), 1.0), (FluxModel::family_j(2.0).unwrap(), 0.5)] {
        let s = build_sigma(&flux, &SigmaOptions::default()).unwrap();
        let slope = s.eval(eps) / eps;
        ok &= (slope - beta).abs() <= 1e-4;
        parts.push(format!("{}: {slope:.8} vs {beta}", flux.label()));
    }
    report(3, ok, parts.join("; "));
}

struct Portrait {
    seeds: Vec<(f64, f64)>,
    regions: Vec<Region>,
}

fn portrait_seeds() -> &'static Portrait {
    static P: OnceLock<Portrait> = OnceLock::new();
    P.get_or_init(|| {
        let flux = FluxModel::family_j(2.0).unwrap();
        let sigma = build_sigma(&flux, &SigmaOptions::default()).unwrap();
        let gamma = build_gamma(&flux, &GammaOptions::default()).unwrap();
        let rc = flux.rho_c();
        let mut seeds = Vec::new();
        let mut regions = Vec::new();
        for r in linspace(0.05, 0.9, 20) {
            for d in linspace(-2.0, 2.0, 20) {
                let near_sigma = (d - sigma.eval(r)).abs() < 1e-3;
                let near_gamma = r > rc && (d - gamma.eval(r)).abs() < 1e-3;
                if near_sigma || near_gamma {
                    continue;
                }
                seeds.push((r, d));
                regions.push(classify_pair(&flux, &sigma, Some(&gamma), r, d).unwrap().region);
            }
        }
        Portrait { seeds, regions }
    })
}

fn expected_terminal(region: Region, t: &Terminal) -> bool {
    matches!(
        (region, t),
        (Region::TypeI, Terminal::BlowUpPlus { .. })
            | (Region::TypeII, Terminal::BlowUpMinus { .. })
            | (Region::Subcritical, Terminal::ConvergedToOrigin)
    )
}

fn portrait_agreement(factor: &NonlocalFactorModel) -> (usize, usize, Vec<String>, Vec<Terminal>) {
    let flux = FluxModel::family_j(2.0).unwrap();
    let p = portrait_seeds();
    let runs = phase_portrait(&flux, factor, &p.seeds, &PhaseOptions::default());
    let mut agree = 0;
    let mut misses = Vec::new();
    let mut terminals = Vec::new();
    for ((seed, region), run) in p.seeds.iter().zip(&p.regions).zip(runs) {
        let t = run.map(|r| r.terminal).unwrap_or(Terminal::TimeLimit);
        if expected_terminal(*region, &t) {
            agree += 1;
        } else {
            misses.push(format!("({:.3},{:.3}) {region} -> {t}", seed.0, seed.1));
        }
        terminals.push(t);
    }
    (agree, p.seeds.len(), misses, terminals)
}

#[test]
fn c04_phase_trichotomy() {
    let start = Instant::now();
    let (agree, n, misses, _) = portrait_agreement(&NonlocalFactorModel::ConstantOne);
    let elapsed = start.elapsed();
    report(
        4,
        agree == n && n > 0 && elapsed < Duration::from_secs(30),
        format!("{agree}/{n} seeds agree ({elapsed:.2?}) {misses:?}"),
    );
}

/// `d` as a function of increasing `ρ`, with the orbit's exact slopes at the nodes.
fn orbit_of(flux: &FluxModel, states: &[PhaseState], d_cap: f64) -> Pchip {
    let mut pts: Vec<(f64, f64)> = states.iter().filter(|s| s.d.abs() <= d_cap).map(|s| (s.rho, s.d)).collect();
    pts.reverse();
    pts.dedup_by(|a, b| a.0 <= b.0);
    let slopes = pts.iter().map(|&(r, d)| trajectory_slope(flux, r, d)).collect();
    Pchip::with_slopes(pts.iter().map(|p| p.0).collect(), pts.iter().map(|p| p.1).collect(), slopes)
}

#[test]
fn c05_factor_invariance() {
    let lower = NonlocalFactorModel::ConstantLower { mass: 1.0 };
    let (_, _, _, t_one) = portrait_agreement(&NonlocalFactorModel::ConstantOne);
    let (agree, n, misses, t_low) = portrait_agreement(&lower);
    let same = t_one.iter().zip(&t_low).all(|(a, b)| a.label() == b.label());

    let flux = FluxModel::family_j(2.0).unwrap();
    let opts = PhaseOptions::default();
    let seeds = [
        (0.2, 0.05),
        (0.3, -0.5),
        (0.45, 0.1),
        (0.5, 0.12),
        (0.6, -0.3),
        (0.7, 0.0),
        (0.75, 0.05),
        (0.8, -0.1),
        (0.85, 0.2),
        (0.4, -1.0),
    ];
    let mut worst = 0.0f64;
    for (r0, d0) in seeds {
        let a = integrate_phase(&flux, &NonlocalFactorModel::ConstantOne, r0, d0, &opts).unwrap();
        let b = integrate_phase(&flux, &lower, r0, d0, &opts).unwrap();
        let cap = 1e2;
        let (ca, cb) = (orbit_of(&flux, &a.states, cap), orbit_of(&flux, &b.states, cap));
        let lo = ca.x()[0].max(cb.x()[0]).max(1e-3);
        let hi = ca.x().last().unwrap().min(*cb.x().last().unwrap());
        for r in linspace(lo, hi, 400) {
            // relative once |d| > 1, since the curves run into a pole
            let d = ca.eval(r);
            let e = (d - cb.eval(r)).abs() / d.abs().max(1.0);
            worst = worst.max(e);
        }
    }
    report(
        5,
        same && agree == n && worst <= 1e-6,
        format!("regions identical: {same}, {agree}/{n} agree {misses:?}; max |Δd(ρ)|/max(1,|d|) over 10 seeds = {worst:.2e}"),
    );
}

#[test]
fn c06_lwr_nullclines() {
    let (lo, hi) = nullclines(&FluxModel::lwr(), 0.5).unwrap().unwrap();
    // d² f'' + (f + 2ρf') d + ρ²f = -2d² + d/4 + 1/16
    let ok = (lo + 0.125).abs() <= 1e-12 && (hi - 0.25).abs() <= 1e-12;
    report(6, ok, format!("(d-, d+) = ({lo:e}, {hi:e})"));
}

struct Run {
    name: &'static str,
    result: SimResult,
    /// Peak of the initial cell averages.
    rho_m: f64,
}

fn canonical_runs() -> &'static (Vec<Run>, Duration) {
    static RUNS: OnceLock<(Vec<Run>, Duration)> = OnceLock::new();
    RUNS.get_or_init(|| {
        let start = Instant::now();
        let k = KernelSpec::infinite();
        let cases: [(&str, &str, &str, f64, f64, usize, f64); 3] = [
            ("subcritical", "fj:2", "sech2:A=0.2,w=5", -50.0, 70.0, 400, 10.0),
            ("type-I", "fj:2", "steep:A=0.5,w=1,skew=2", -5.0, 11.0, 5000, 3.0),
            ("type-II", "fj:3", "plateau:h=0.9,W=2,s=1,rise=10", -90.0, 15.0, 28000, 8.0),
        ];
        let runs = cases
            .iter()
            .map(|&(name, flux, profile, a, b, n, t_end)| {
                let flux: FluxModel = flux.parse().unwrap();
                let profile: Profile = profile.parse().unwrap();
                let cfg = SimConfig { a, b, n_cells: n, t_end, snapshot_every: 0.0, ..Default::default() };
                let result = simulate(&flux, &k, &profile, &cfg).unwrap();
                let rho_m = result.solution.rho_max0;
                Run { name, result, rho_m }
            })
            .collect();
        (runs, start.elapsed())
    })
}

fn all_grids(run: &Run) -> impl Iterator<Item = &GridSolution> {
    std::iter::once(&run.result.solution).chain(run.result.companion.as_ref())
}

#[test]
fn c07_conservation_and_maximum_principle() {
    let mut ok = true;
    let mut parts = Vec::new();
    for run in &canonical_runs().0 {
        let mut drift = 0.0f64;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        let mut steps = 0;
        for g in all_grids(run) {
            for d in &g.history {
                drift = drift.max((d.mass - g.mass0).abs());
                lo = lo.min(d.rho_min);
                hi = hi.max(d.rho_max - g.rho_max0);
                steps += 1;
            }
        }
        ok &= run.result.solution.history.len() == run.result.solution.steps + 1;
        ok &= drift <= 1e-10 && lo >= -1e-12 && hi <= 1e-12;
        parts.push(format!(
            "{}: drift {drift:.1e}, min ρ {lo:.1e}, max ρ - ρ_M {hi:.1e} over {steps} records (ρ_M={:.4})",
            run.name, run.rho_m
        ));
    }
    report(7, ok, parts.join("; "));
}

#[test]
fn c08_pde_trichotomy() {
    let (runs, elapsed) = canonical_runs();
    let sub = &runs[0].result;
    // the companion of the 400-cell run is the 800-cell grid advanced in lockstep
    let spread = sub.gradient_history.iter().map(|&(_, g, gf)| (gf - g).abs() / gf).fold(0.0f64, f64::max);
    let sub_ok = !sub.shock.detected && spread < 0.1 && sub.solution.t >= 10.0 - 1e-9;
    let t1 = &runs[1].result.shock;
    let t1_ok = t1.detected && t1.gradient_sign == 1 && t1.refinement_evidence >= 1.8;
    let t2 = &runs[2].result.shock;
    let t2_ok = t2.detected && t2.gradient_sign == -1 && t2.refinement_evidence >= 1.8;
    report(
        8,
        sub_ok && t1_ok && t2_ok && *elapsed < Duration::from_secs(180),
        format!(
            "subcritical 400/800 spread {:.1}% detected={}; type-I t={:?} sign={} ratio={:.3}; type-II t={:?} sign={} ratio={:.3} ({elapsed:.1?})",
            100.0 * spread,
            sub.shock.detected,
            t1.t_shock,
            t1.gradient_sign,
            t1.refinement_evidence,
            t2.t_shock,
            t2.gradient_sign,
            t2.refinement_evidence
        ),
    );
}

#[test]
fn c09_blowup_bound() {
    let flux = FluxModel::family_j(2.0).unwrap();
    let sigma = build_sigma(&flux, &SigmaOptions::default()).unwrap();
    let mass = 1.0;
    let mut ok = true;
    let mut parts = Vec::new();
    for (r0, d0) in [(0.1, 0.2), (0.3, 0.3), (0.5, 0.5), (0.6, 1.0), (0.8, 2.0)] {
        assert!(d0 > sigma.eval(r0));
        let t_star =
            integrate_phase(&flux, &NonlocalFactorModel::ConstantLower { mass }, r0, d0, &PhaseOptions::default())
                .unwrap()
                .terminal
                .t_star();
        let bound = choose_rho1(&flux, mass, r0, d0);
        match (t_star, bound) {
            (Some(t), Ok((rho1, b))) => {
                ok &= b >= t;
                parts.push(format!("({r0},{d0}): t*={t:.4} ≤ {b:.4} (ρ1={rho1:.3e})"));
            }
            (t, b) => {
                ok = false;
                parts.push(format!("({r0},{d0}): t*={t:?}, bound={b:?}"));
            }
        }
    }
    report(9, ok, parts.join("; "));
}

#[test]
fn c10_bound_suite() {
    let mut ok = true;
    let mut parts = Vec::new();
    for run in &canonical_runs().0 {
        let mut n = 0;
        let mut failing = 0;
        for g in all_grids(run) {
            for d in &g.history {
                n += 1;
                if !d.bounds_hold(1e-12) {
                    failing += 1;
                }
            }
        }
        ok &= failing == 0 && n > 0;
        parts.push(format!("{}: {failing}/{n} records violate", run.name));
    }
    report(10, ok, parts.join("; "));
}
