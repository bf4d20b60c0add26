//! Initial densities with closed-form derivatives.
//!
//! The families are built so that each region of the trichotomy is reachable: a plain
//! `sech²` bump is subcritical once wide enough, steepening its rising flank crosses σ,
//! and a plateau above the inflection point with a steep Gaussian front crosses γ.
//! `sech²` tails are used wherever the density rises, because `ρ'/ρ` stays bounded by
//! `2/width` there, which a Gaussian tail cannot offer.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::threshold::ThresholdCurve;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile {
    /// `A sech²(x/w)`.
    Sech2 { amplitude: f64, width: f64 },
    /// `A sech²(x/(w/skew))` for `x < 0`, `A sech²(x/w)` for `x >= 0`.
    SteepenedSech2 { amplitude: f64, width: f64, skew: f64 },
    /// `h sech²((x + W/2)/rise)` rising into a flat top of width `W`, then a Gaussian front
    /// `h exp(-(s(x - W/2))²)`.
    Plateau { height: f64, width: f64, steepness: f64, rise: f64 },
}

/// Default rise length of the plateau's left flank.
pub const PLATEAU_RISE: f64 = 6.0;

fn sech2(z: f64) -> f64 {
    let c = z.cosh();
    if c.is_finite() {
        1.0 / (c * c)
    } else {
        0.0
    }
}

/// `(A sech²(x/w), d/dx)`.
fn sech2_pair(a: f64, w: f64, x: f64) -> (f64, f64) {
    let z = x / w;
    let s = sech2(z);
    (a * s, -2.0 * a * s * z.tanh() / w)
}

impl Profile {
    pub fn sech2(amplitude: f64, width: f64) -> Result<Self> {
        let p = Profile::Sech2 { amplitude, width };
        p.validate()?;
        Ok(p)
    }

    pub fn steepened(amplitude: f64, width: f64, skew: f64) -> Result<Self> {
        let p = Profile::SteepenedSech2 { amplitude, width, skew };
        p.validate()?;
        Ok(p)
    }

    pub fn plateau(height: f64, width: f64, steepness: f64, rise: f64) -> Result<Self> {
        let p = Profile::Plateau { height, width, steepness, rise };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        let (peak, lengths): (f64, Vec<f64>) = match *self {
            Profile::Sech2 { amplitude, width } => (amplitude, vec![width]),
            Profile::SteepenedSech2 { amplitude, width, skew } => (amplitude, vec![width, skew]),
            Profile::Plateau { height, width, steepness, rise } => {
                if !(width >= 0.0) {
                    return Err(Error::InvalidParameter(format!("plateau width must be >= 0, got {width}")));
                }
                (height, vec![steepness, rise])
            }
        };
        if !(peak > 0.0 && peak < 1.0) {
            return Err(Error::InvalidParameter(format!("peak density must lie in (0, 1), got {peak}")));
        }
        if lengths.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(Error::InvalidParameter(format!("profile lengths must be positive: {self}")));
        }
        Ok(())
    }

    /// `(ρ0(x), ρ0'(x))`.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        match *self {
            Profile::Sech2 { amplitude, width } => sech2_pair(amplitude, width, x),
            Profile::SteepenedSech2 { amplitude, width, skew } => {
                let w = if x < 0.0 { width / skew } else { width };
                sech2_pair(amplitude, w, x)
            }
            Profile::Plateau { height, width, steepness, rise } => {
                let half = 0.5 * width;
                if x < -half {
                    sech2_pair(height, rise, x + half)
                } else if x <= half {
                    (height, 0.0)
                } else {
                    let z = steepness * (x - half);
                    let v = height * (-z * z).exp();
                    (v, -2.0 * steepness * z * v)
                }
            }
        }
    }

    pub fn sample(&self, xs: &[f64]) -> (Vec<f64>, Vec<f64>) {
        xs.iter().map(|&x| self.eval(x)).unzip()
    }

    pub fn peak(&self) -> f64 {
        match *self {
            Profile::Sech2 { amplitude, .. } | Profile::SteepenedSech2 { amplitude, .. } => amplitude,
            Profile::Plateau { height, .. } => height,
        }
    }

    pub fn mass(&self) -> f64 {
        match *self {
            Profile::Sech2 { amplitude, width } => 2.0 * amplitude * width,
            Profile::SteepenedSech2 { amplitude, width, skew } => amplitude * (width + width / skew),
            Profile::Plateau { height, width, steepness, rise } => {
                height * (rise + width + 0.5 * std::f64::consts::PI.sqrt() / steepness)
            }
        }
    }

    /// `(left, right)` abscissas beyond which `ρ0 < tol`.
    pub fn support(&self, tol: f64) -> (f64, f64) {
        // A sech²(z) < 4A e^{-2|z|}
        let sech_reach = |a: f64, w: f64| 0.5 * w * (4.0 * a / tol).ln().max(0.0);
        match *self {
            Profile::Sech2 { amplitude, width } => {
                let r = sech_reach(amplitude, width);
                (-r, r)
            }
            Profile::SteepenedSech2 { amplitude, width, skew } => {
                (-sech_reach(amplitude, width / skew), sech_reach(amplitude, width))
            }
            Profile::Plateau { height, width, steepness, rise } => {
                (-0.5 * width - sech_reach(height, rise), 0.5 * width + (height / tol).ln().max(0.0).sqrt() / steepness)
            }
        }
    }

    /// Largest `|x|` with `ρ0(x) >= 1e-12 · peak`.
    pub fn support_radius(&self) -> f64 {
        let (l, r) = self.support(1e-12 * self.peak());
        l.abs().max(r.abs())
    }
}

/// `max_x [ρ0'(x) - σ(ρ0(x))]` over the sample points; negative means no point lies above σ.
pub fn sigma_excess(profile: &Profile, sigma: &ThresholdCurve, xs: &[f64]) -> f64 {
    xs.iter()
        .map(|&x| {
            let (r, d) = profile.eval(x);
            d - sigma.eval(r)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Sufficient width condition `2/w <= (1 - A)/J` for `A sech²(x/w)` to stay below
/// `σ_J = ρ(1-ρ)/J`.
pub fn sech2_certified(amplitude: f64, width: f64, j: f64) -> bool {
    2.0 / width <= (1.0 - amplitude) / j
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Profile::Sech2 { amplitude, width } => write!(f, "sech2:A={amplitude},w={width}"),
            Profile::SteepenedSech2 { amplitude, width, skew } => {
                write!(f, "steep:A={amplitude},w={width},skew={skew}")
            }
            Profile::Plateau { height, width, steepness, rise } => {
                write!(f, "plateau:h={height},W={width},s={steepness},rise={rise}")
            }
        }
    }
}

impl FromStr for Profile {
    type Err = Error;

    /// `sech2:A=..,w=..`, `steep:A=..,w=..,skew=..`, `plateau:h=..,W=..,s=..[,rise=..]`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) =
            s.trim().split_once(':').ok_or_else(|| Error::Parse(format!("profile spec '{s}' lacks a ':'")))?;
        let mut params = Vec::new();
        for kv in rest.split(',').filter(|t| !t.trim().is_empty()) {
            let (k, v) = kv.split_once('=').ok_or_else(|| Error::Parse(format!("expected key=value in '{kv}'")))?;
            let v: f64 = v.trim().parse().map_err(|_| Error::Parse(format!("bad number in '{kv}'")))?;
            params.push((k.trim().to_string(), v));
        }
        let get = |key: &str| -> Result<f64> {
            params
                .iter()
                .find(|(k, _)| k == key)
                .map(|p| p.1)
                .ok_or_else(|| Error::Parse(format!("profile '{s}' is missing '{key}'")))
        };
        let allow = |keys: &[&str]| -> Result<()> {
            match params.iter().find(|(k, _)| !keys.contains(&k.as_str())) {
                Some((k, _)) => Err(Error::Parse(format!("unknown profile parameter '{k}' in '{s}'"))),
                None => Ok(()),
            }
        };
        match kind.trim() {
            "sech2" => {
                allow(&["A", "w"])?;
                Profile::sech2(get("A")?, get("w")?)
            }
            "steep" => {
                allow(&["A", "w", "skew"])?;
                Profile::steepened(get("A")?, get("w")?, get("skew")?)
            }
            "plateau" => {
                allow(&["h", "W", "s", "rise"])?;
                Profile::plateau(get("h")?, get("W")?, get("s")?, get("rise").unwrap_or(PLATEAU_RISE))
            }
            other => Err(Error::Parse(format!("unknown profile kind '{other}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sech2_peak() {
        let p: Profile = "sech2:A=0.2,w=4".parse().unwrap();
        assert_eq!(p.eval(0.0), (0.2, 0.0));
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let profiles = [
            Profile::sech2(0.3, 2.0).unwrap(),
            Profile::steepened(0.3, 2.0, 3.0).unwrap(),
            Profile::plateau(0.85, 4.0, 1.5, 6.0).unwrap(),
        ];
        let h = 1e-6;
        for p in profiles {
            for k in 0..200 {
                let x = -15.0 + 0.1537 * k as f64;
                let fd = (p.eval(x + h).0 - p.eval(x - h).0) / (2.0 * h);
                assert!((fd - p.eval(x).1).abs() < 1e-7, "{p} at {x}");
            }
        }
    }

    #[test]
    fn plateau_top() {
        let p = Profile::plateau(0.85, 4.0, 1.0, PLATEAU_RISE).unwrap();
        assert_eq!(p.eval(0.0).0, 0.85);
        assert_eq!(p.peak(), 0.85);
    }

    #[test]
    fn parse_round_trip_and_errors() {
        for s in ["sech2:A=0.2,w=4", "steep:A=0.3,w=2,skew=2", "plateau:h=0.85,W=4,s=1,rise=6"] {
            let p: Profile = s.parse().unwrap();
            assert_eq!(p.to_string().parse::<Profile>().unwrap(), p);
        }
        assert_eq!(
            "plateau:h=0.85,W=4,s=1".parse::<Profile>().unwrap(),
            Profile::plateau(0.85, 4.0, 1.0, PLATEAU_RISE).unwrap()
        );
        assert!("sech2:A=1.2,w=4".parse::<Profile>().is_err());
        assert!("sech2:A=0.2".parse::<Profile>().is_err());
        assert!("sech2:A=0.2,w=4,q=1".parse::<Profile>().is_err());
        assert!("gauss:A=0.2".parse::<Profile>().is_err());
    }

    #[test]
    fn support_brackets_the_tails() {
        let p = Profile::steepened(0.3, 2.0, 2.0).unwrap();
        let (l, r) = p.support(1e-10);
        assert!(p.eval(l).0 < 1e-10 && p.eval(r).0 < 1e-10);
        assert!(p.eval(0.9 * l).0 > 1e-10);
    }
}
