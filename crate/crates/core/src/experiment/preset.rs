use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Initial state of one qubit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum QubitPreset {
    /// Lab-frame `|0⟩`.
    Ground,
    /// `(|−⟩⟨−| + |+⟩⟨+|)/2` in the qubit's rotated basis. Trajectory runs
    /// draw one of the two eigenstates per trajectory.
    MaximallyMixedRotated,
    /// `cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩`.
    BlochPoint { theta: f64, phi: f64 },
}

pub const PRESET_NAMES: &str = "ground, maximally_mixed_rotated, bloch_point(theta, phi)";

impl FromStr for QubitPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "ground" => return Ok(QubitPreset::Ground),
            "maximally_mixed_rotated" => return Ok(QubitPreset::MaximallyMixedRotated),
            _ => {}
        }
        let bad = || Error::Config(format!("unknown initial preset `{s}` (expected {PRESET_NAMES})"));
        let args = s
            .strip_prefix("bloch_point")
            .map(str::trim_start)
            .and_then(|r| r.strip_prefix('('))
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(bad)?;
        let mut parts = args.split(',');
        let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::Config(format!("`{s}`: bloch_point takes two angles")));
        };
        let theta = parse_angle(a)?;
        let phi = parse_angle(b)?;
        if !(0.0..=PI).contains(&theta) {
            return Err(Error::param(
                "initial.qubits",
                format!("polar angle {theta} not in [0, π]"),
            ));
        }
        Ok(QubitPreset::BlochPoint { theta, phi })
    }
}

impl fmt::Display for QubitPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QubitPreset::Ground => f.write_str("ground"),
            QubitPreset::MaximallyMixedRotated => f.write_str("maximally_mixed_rotated"),
            QubitPreset::BlochPoint { theta, phi } => write!(f, "bloch_point({theta:?}, {phi:?})"),
        }
    }
}

impl TryFrom<String> for QubitPreset {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<QubitPreset> for String {
    fn from(p: QubitPreset) -> String {
        p.to_string()
    }
}

/// A real number or a rational multiple of π: `1.2`, `pi`, `-pi/2`,
/// `3pi/2`, `0.5*pi`.
pub fn parse_angle(s: &str) -> Result<f64> {
    let t = s.trim();
    let bad = || Error::Config(format!("cannot parse angle `{t}`"));
    if let Ok(v) = t.parse::<f64>() {
        return if v.is_finite() { Ok(v) } else { Err(bad()) };
    }
    let (head, den) = match t.split_once('/') {
        Some((h, d)) => (h.trim(), d.trim().parse::<f64>().map_err(|_| bad())?),
        None => (t, 1.0),
    };
    let coef = head.strip_suffix("pi").ok_or_else(bad)?.trim();
    let coef = coef.strip_suffix('*').unwrap_or(coef).trim();
    let c = match coef {
        "" | "+" => 1.0,
        "-" => -1.0,
        other => other.parse::<f64>().map_err(|_| bad())?,
    };
    let v = c * PI / den;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad())
    }
}

/// Initial state of the resonators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResonatorPreset {
    #[default]
    Vacuum,
    /// Truncated Bose-Einstein populations at the bath temperature.
    Thermal,
}

impl FromStr for ResonatorPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "vacuum" => Ok(ResonatorPreset::Vacuum),
            "thermal" => Ok(ResonatorPreset::Thermal),
            other => Err(Error::Config(format!(
                "unknown resonator preset `{other}` (expected vacuum or thermal)"
            ))),
        }
    }
}

/// Parse a full initial-state description: qubit presets separated by `;`,
/// optionally followed by `| vacuum` or `| thermal`, e.g. `bloch_point(pi/2, 3pi/2); ground | vacuum`.
pub fn parse_initial_preset(s: &str) -> Result<(Vec<QubitPreset>, ResonatorPreset)> {
    let (qubits, res) = match s.split_once('|') {
        Some((q, r)) => (q, r.parse()?),
        None => (s, ResonatorPreset::Vacuum),
    };
    let presets = qubits
        .split(';')
        .map(str::parse)
        .collect::<Result<Vec<QubitPreset>>>()?;
    Ok((presets, res))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn angles() {
        assert_eq!(parse_angle("1.25").unwrap(), 1.25);
        assert_eq!(parse_angle("pi").unwrap(), PI);
        assert_eq!(parse_angle(" -pi/2 ").unwrap(), -FRAC_PI_2);
        assert!((parse_angle("3pi/2").unwrap() - 1.5 * PI).abs() < 1e-15);
        assert!((parse_angle("0.5*pi").unwrap() - FRAC_PI_2).abs() < 1e-15);
        for bad in ["", "pie", "pi/0", "inf", "2*", "x*pi"] {
            assert!(parse_angle(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn presets_round_trip() {
        for p in [
            QubitPreset::Ground,
            QubitPreset::MaximallyMixedRotated,
            QubitPreset::BlochPoint {
                theta: FRAC_PI_2,
                phi: 1.5 * PI,
            },
        ] {
            assert_eq!(p.to_string().parse::<QubitPreset>().unwrap(), p);
        }
        assert!("bloch_point(1)".parse::<QubitPreset>().is_err());
        assert!("bloch_point(4, 0)".parse::<QubitPreset>().is_err());
        assert!("excited".parse::<QubitPreset>().is_err());
    }

    #[test]
    fn full_description() {
        let (q, r) = parse_initial_preset("bloch_point(pi/2, 3pi/2); ground | thermal").unwrap();
        assert_eq!(q.len(), 2);
        assert_eq!(q[1], QubitPreset::Ground);
        assert_eq!(r, ResonatorPreset::Thermal);
        let (q, r) = parse_initial_preset("maximally_mixed_rotated").unwrap();
        assert_eq!((q.len(), r), (1, ResonatorPreset::Vacuum));
        assert!(parse_initial_preset("ground | hot").is_err());
    }
}
