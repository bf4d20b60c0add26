//! Adaptive Dormand–Prince 5(4) integrator over fixed-size states.
//!
//! The integrator is deliberately small: the callers here integrate 1- and 2-dimensional
//! systems that may blow up in finite time, so the observer hook (which can stop the
//! integration after any accepted step) matters more than dense output.

#[derive(Debug, Clone, Copy)]
pub struct Options {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step magnitude; 0 picks one from the first derivative evaluation.
    pub h_init: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for Options {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12, h_init: 0.0, h_min: 1e-14, h_max: f64::INFINITY, max_steps: 1_000_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Finish {
    Reached,
    Stopped,
    StepFloor,
    MaxSteps,
}

#[derive(Debug, Clone, Copy)]
pub struct Outcome<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
    pub finish: Finish,
    pub steps: usize,
    /// Step size the controller would try next; useful to resume on the next interval.
    pub h_next: f64,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// error coefficients: b - b*
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut s = 0.0;
        for (c, k) in terms {
            s += c * k[i];
        }
        *o += h * s;
    }
    out
}

fn finite<const N: usize>(v: &[f64; N]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Integrate `y' = f(t, y)` from `t0` to `t1` (either direction).
///
/// `observer(t, y, dy)` runs after every accepted step and may stop the integration.
pub fn integrate<const N: usize, F, O>(
    mut f: F,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    opts: &Options,
    mut observer: O,
) -> Outcome<N>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
    O: FnMut(f64, &[f64; N], &[f64; N]) -> Control,
{
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let span = (t1 - t0).abs();
    let mut t = t0;
    let mut y = y0;
    if span == 0.0 {
        return Outcome { t, y, finish: Finish::Reached, steps: 0, h_next: opts.h_init };
    }

    let mut k1 = f(t, &y);
    let mut h = if opts.h_init > 0.0 {
        opts.h_init
    } else {
        let scale: f64 = y.iter().map(|v| opts.atol + opts.rtol * v.abs()).fold(f64::INFINITY, f64::min);
        let dnorm = k1.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if dnorm > 0.0 && dnorm.is_finite() {
            (0.01 * scale.max(1e-8) / dnorm).powf(0.2).min(span * 0.01)
        } else {
            span * 1e-3
        }
    };
    h = h.min(opts.h_max).min(span).max(opts.h_min);

    let mut steps = 0usize;
    let mut last_rejected = false;
    loop {
        let remaining = (t1 - t) * dir;
        if remaining <= span * 1e-15 {
            return Outcome { t: t1, y, finish: Finish::Reached, steps, h_next: h };
        }
        if steps >= opts.max_steps {
            return Outcome { t, y, finish: Finish::MaxSteps, steps, h_next: h };
        }
        let mut last = false;
        if h >= remaining {
            h = remaining;
            last = true;
        }
        let hs = h * dir;

        let k2 = f(t + C2 * hs, &axpy(&y, hs, &[(A21, &k1)]));
        let k3 = f(t + C3 * hs, &axpy(&y, hs, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(t + C4 * hs, &axpy(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(t + C5 * hs, &axpy(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = f(t + hs, &axpy(&y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
        let y_new = axpy(&y, hs, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = f(t + hs, &y_new);

        let mut err = 0.0;
        let mut ok = finite(&y_new) && finite(&k7);
        if ok {
            for i in 0..N {
                let e = hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sc = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
                err += (e / sc).powi(2);
            }
            err = (err / N as f64).sqrt();
            ok = err.is_finite();
        }

        if ok && err <= 1.0 {
            steps += 1;
            t = if last { t1 } else { t + hs };
            y = y_new;
            k1 = k7;
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            let fac = if last_rejected { fac.min(1.0) } else { fac };
            last_rejected = false;
            let h_next = (h * fac).min(opts.h_max);
            if observer(t, &y, &k1) == Control::Stop {
                return Outcome { t, y, finish: Finish::Stopped, steps, h_next };
            }
            if !last {
                h = h_next;
            } else {
                return Outcome { t, y, finish: Finish::Reached, steps, h_next };
            }
        } else {
            last_rejected = true;
            let fac = if ok { (0.9 * err.powf(-0.2)).clamp(0.1, 0.9) } else { 0.25 };
            h *= fac;
            if h < opts.h_min {
                return Outcome { t, y, finish: Finish::StepFloor, steps, h_next: h };
            }
        }
    }
}

/// Same as [`integrate`] without an observer.
pub fn solve<const N: usize, F>(f: F, t0: f64, y0: [f64; N], t1: f64, opts: &Options) -> Outcome<N>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    integrate(f, t0, y0, t1, opts, |_, _, _| Control::Continue)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let out = solve(|_, y: &[f64; 1]| [-y[0]], 0.0, [1.0], 5.0, &Options::default());
        assert_eq!(out.finish, Finish::Reached);
        assert!((out.y[0] - (-5.0f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn harmonic_oscillator_backward() {
        let out = solve(|_, y: &[f64; 2]| [y[1], -y[0]], std::f64::consts::PI, [0.0, -1.0], 0.0, &Options::default());
        assert!((out.y[0]).abs() < 1e-9);
        assert!((out.y[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn riccati_blowup_stops_via_observer() {
        // y' = y^2, y(0) = 1 blows up at t = 1.
        let out = integrate(
            |_, y: &[f64; 1]| [y[0] * y[0]],
            0.0,
            [1.0],
            2.0,
            &Options::default(),
            |_, y, _| if y[0] > 1e8 { Control::Stop } else { Control::Continue },
        );
        assert_eq!(out.finish, Finish::Stopped);
        assert!((out.t - 1.0).abs() < 1e-7);
    }

    #[test]
    fn riccati_blowup_hits_floor_without_cap() {
        let out = solve(|_, y: &[f64; 1]| [y[0] * y[0]], 0.0, [1.0], 2.0, &Options::default());
        assert!(matches!(out.finish, Finish::StepFloor | Finish::MaxSteps));
        assert!(out.t < 1.0 && out.t > 0.999);
    }
}
