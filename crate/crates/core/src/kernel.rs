//! Look-ahead kernels and the nonlocal density `ρ̄(x) = ∫_0^∞ K(y) ρ(x + y) dy`.
//!
//! Grid values are treated as nodes of a piecewise-linear density that vanishes to the
//! right of the last node, so every quadrature below is an exact integral of that
//! interpolant against `K`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelKind {
    InfiniteLookAhead,
    Indicator(f64),
    LinearDecay(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub k_max: f64,
    pub bv_norm: f64,
}

impl KernelSpec {
    pub fn infinite() -> Self {
        Self { kind: KernelKind::InfiniteLookAhead, k_max: 1.0, bv_norm: 2.0 }
    }

    pub fn indicator(l: f64) -> Result<Self> {
        check_length(l)?;
        Ok(Self { kind: KernelKind::Indicator(l), k_max: 1.0, bv_norm: 2.0 })
    }

    pub fn linear(l: f64) -> Result<Self> {
        check_length(l)?;
        Ok(Self { kind: KernelKind::LinearDecay(l), k_max: 1.0, bv_norm: 2.0 })
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self.kind, KernelKind::InfiniteLookAhead)
    }

    /// `K(y)`; zero for `y < 0`.
    pub fn weight(&self, y: f64) -> f64 {
        if y < 0.0 {
            return 0.0;
        }
        match self.kind {
            KernelKind::InfiniteLookAhead => 1.0,
            KernelKind::Indicator(l) => {
                if y <= l {
                    1.0
                } else {
                    0.0
                }
            }
            KernelKind::LinearDecay(l) => (1.0 - y / l).max(0.0),
        }
    }

    fn support(&self) -> Option<f64> {
        match self.kind {
            KernelKind::InfiniteLookAhead => None,
            KernelKind::Indicator(l) | KernelKind::LinearDecay(l) => Some(l),
        }
    }

    /// Value of `K` approached from inside its support at the right end.
    fn weight_left_of(&self, y: f64) -> f64 {
        match self.kind {
            KernelKind::Indicator(_) => 1.0,
            _ => self.weight(y),
        }
    }
}

fn check_length(l: f64) -> Result<()> {
    if l > 0.0 && l.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("kernel length must be positive, got {l}")))
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            KernelKind::InfiniteLookAhead => write!(f, "infinite"),
            KernelKind::Indicator(l) => write!(f, "indicator:{l}"),
            KernelKind::LinearDecay(l) => write!(f, "linear:{l}"),
        }
    }
}

impl FromStr for KernelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let parse_l = |v: &str| -> Result<f64> {
            v.trim().parse().map_err(|_| Error::Parse(format!("bad kernel length in '{s}'")))
        };
        if s == "infinite" {
            Ok(Self::infinite())
        } else if let Some(v) = s.strip_prefix("indicator:") {
            Self::indicator(parse_l(v)?)
        } else if let Some(v) = s.strip_prefix("linear:") {
            Self::linear(parse_l(v)?)
        } else {
            Err(Error::Parse(format!("unknown kernel '{s}' (expected infinite, indicator:<L>, linear:<L>)")))
        }
    }
}

/// Uniform grid of `n` points `x0 + i·dx`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub x0: f64,
    pub dx: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(x0: f64, dx: f64, n: usize) -> Result<Self> {
        if !(dx > 0.0 && dx.is_finite()) || n < 2 {
            return Err(Error::InvalidParameter(format!("grid needs dx > 0 and n >= 2 (dx={dx}, n={n})")));
        }
        Ok(Self { x0, dx, n })
    }

    /// Cell centres of `n` equal cells on `[a, b]`.
    pub fn cells(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(b > a) {
            return Err(Error::InvalidParameter(format!("empty domain [{a}, {b}]")));
        }
        let dx = (b - a) / n as f64;
        Self::new(a + 0.5 * dx, dx, n)
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }
}

fn check_density(rho: &[f64]) -> Result<()> {
    for (i, &r) in rho.iter().enumerate() {
        if !(-1e-12..=1.0 + 1e-12).contains(&r) {
            return Err(Error::InvalidParameter(format!("density {r} at index {i} outside [0, 1]")));
        }
    }
    Ok(())
}

/// Trapezoid mass of the piecewise-linear density.
pub fn trapezoid_mass(dx: f64, rho: &[f64]) -> f64 {
    rho.windows(2).map(|w| 0.5 * dx * (w[0] + w[1])).sum()
}

/// `ρ̄` at every grid node.
pub fn nonlocal_density(kernel: &KernelSpec, grid: &Grid, rho: &[f64]) -> Result<Vec<f64>> {
    if rho.len() != grid.n {
        return Err(Error::InvalidParameter(format!("density has {} values for a grid of {}", rho.len(), grid.n)));
    }
    check_density(rho)?;
    let mut out = vec![0.0; grid.n];
    nonlocal_density_into(kernel, grid.dx, rho, &mut out);
    Ok(out)
}

/// Unchecked variant used inside the time loop.
pub(crate) fn nonlocal_density_into(kernel: &KernelSpec, dx: f64, rho: &[f64], out: &mut [f64]) {
    let n = rho.len();
    match kernel.support() {
        None => {
            // Right-to-left cumulative trapezoid.
            out[n - 1] = 0.0;
            for i in (0..n - 1).rev() {
                out[i] = out[i + 1] + 0.5 * dx * (rho[i] + rho[i + 1]);
            }
        }
        Some(l) => {
            let full = (l / dx).floor() as usize;
            let rem = l - full as f64 * dx;
            for i in 0..n {
                let mut s = 0.0;
                let last = (i + full).min(n - 1);
                for j in i..last {
                    let y0 = (j - i) as f64 * dx;
                    let w0 = kernel.weight(y0);
                    let w1 = if j + 1 - i == full && rem == 0.0 {
                        kernel.weight_left_of(y0 + dx)
                    } else {
                        kernel.weight(y0 + dx)
                    };
                    s += 0.5 * dx * (w0 * rho[j] + w1 * rho[j + 1]);
                }
                if rem > 0.0 && i + full < n - 1 {
                    let j = i + full;
                    let end = rho[j] + (rem / dx) * (rho[j + 1] - rho[j]);
                    let w0 = kernel.weight(full as f64 * dx);
                    s += 0.5 * rem * (w0 * rho[j] + kernel.weight_left_of(l) * end);
                }
                out[i] = s;
            }
        }
    }
}

/// `ρ̄` for a periodic density on `n` nodes of spacing `dx` (finite kernels only).
pub fn nonlocal_density_periodic(kernel: &KernelSpec, dx: f64, rho: &[f64]) -> Result<Vec<f64>> {
    check_density(rho)?;
    let l =
        kernel.support().ok_or_else(|| Error::UnsupportedKernel("infinite look-ahead has no periodic form".into()))?;
    let n = rho.len();
    let full = (l / dx).floor() as usize;
    let rem = l - full as f64 * dx;
    let at = |k: usize| rho[k % n];
    let mut out = vec![0.0; n];
    for (i, o) in out.iter_mut().enumerate() {
        let mut s = 0.0;
        for k in 0..full {
            let y0 = k as f64 * dx;
            let w1 = if k + 1 == full && rem == 0.0 { kernel.weight_left_of(y0 + dx) } else { kernel.weight(y0 + dx) };
            s += 0.5 * dx * (kernel.weight(y0) * at(i + k) + w1 * at(i + k + 1));
        }
        if rem > 0.0 {
            let a = at(i + full);
            let end = a + (rem / dx) * (at(i + full + 1) - a);
            s += 0.5 * rem * (kernel.weight(full as f64 * dx) * a + kernel.weight_left_of(l) * end);
        }
        *o = s;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half_on_unit() -> (Grid, Vec<f64>) {
        let g = Grid::new(0.0, 0.01, 101).unwrap();
        (g, vec![0.5; 101])
    }

    #[test]
    fn infinite_constant_block() {
        let (g, rho) = half_on_unit();
        let rb = nonlocal_density(&KernelSpec::infinite(), &g, &rho).unwrap();
        assert!((rb[0] - 0.5).abs() < 1e-10);
        assert!(rb.windows(2).all(|w| w[1] - w[0] <= 1e-12));
    }

    #[test]
    fn indicator_constant_block() {
        let (g, rho) = half_on_unit();
        let rb = nonlocal_density(&KernelSpec::indicator(0.5).unwrap(), &g, &rho).unwrap();
        assert!((rb[0] - 0.25).abs() < 1e-12);
        // non-grid-aligned window
        let rb = nonlocal_density(&KernelSpec::indicator(0.505).unwrap(), &g, &rho).unwrap();
        assert!((rb[0] - 0.2525).abs() < 1e-12);
    }

    #[test]
    fn linear_decay_constant_block() {
        let (g, rho) = half_on_unit();
        for l in [0.5, 0.333] {
            let rb = nonlocal_density(&KernelSpec::linear(l).unwrap(), &g, &rho).unwrap();
            // ∫_0^L (1 - y/L) 0.5 dy = L/4; trapezoid is exact for a linear integrand
            assert!((rb[0] - l / 4.0).abs() < 1e-12, "L={l}: {}", rb[0]);
        }
    }

    #[test]
    fn zero_density() {
        let g = Grid::new(-1.0, 0.1, 21).unwrap();
        for k in [KernelSpec::infinite(), KernelSpec::indicator(0.3).unwrap(), KernelSpec::linear(1.0).unwrap()] {
            let rb = nonlocal_density(&k, &g, &[0.0; 21]).unwrap();
            assert!(rb.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn rejects_out_of_range_density() {
        let g = Grid::new(0.0, 0.1, 3).unwrap();
        assert!(nonlocal_density(&KernelSpec::infinite(), &g, &[0.0, 1.1, 0.0]).is_err());
        assert!(nonlocal_density(&KernelSpec::infinite(), &g, &[0.0, -1e-9, 0.0]).is_err());
    }

    #[test]
    fn parse_and_display_round_trip() {
        for s in ["infinite", "indicator:0.5", "linear:2"] {
            let k: KernelSpec = s.parse().unwrap();
            assert_eq!(k.to_string().parse::<KernelSpec>().unwrap(), k);
            assert_eq!(k.k_max, 1.0);
            assert!(k.bv_norm <= 2.0);
        }
        assert!("indicator:-1".parse::<KernelSpec>().is_err());
        assert!("gauss".parse::<KernelSpec>().is_err());
    }

    #[test]
    fn periodic_constant_is_exact() {
        let k = KernelSpec::indicator(0.37).unwrap();
        let rb = nonlocal_density_periodic(&k, 0.01, &vec![0.3; 200]).unwrap();
        assert!(rb.iter().all(|v| (v - 0.3 * 0.37).abs() < 1e-14));
        assert!(nonlocal_density_periodic(&KernelSpec::infinite(), 0.01, &[0.1; 4]).is_err());
    }
}
