use std::fmt;

use toml::Value;

use super::config::ExperimentConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PathSeg {
    Key(String),
    Index(usize),
}

impl fmt::Display for PathSeg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathSeg::Key(k) => f.write_str(k),
            PathSeg::Index(i) => write!(f, "{i}"),
        }
    }
}

/// One `path=value` assignment, e.g. `circuit.g_mhz=15` or
/// `targets.0.theta=1.5`.
#[derive(Debug, Clone, PartialEq)]
pub struct Override {
    pub path: Vec<PathSeg>,
    pub value: Value,
}

pub fn parse_path(s: &str) -> Result<Vec<PathSeg>> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::Config("empty key path".into()));
    }
    s.split('.')
        .map(|seg| {
            if seg.is_empty() || !seg.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(Error::Config(format!("invalid key path `{s}`")));
            }
            Ok(match seg.parse::<usize>() {
                Ok(i) => PathSeg::Index(i),
                Err(_) => PathSeg::Key(seg.to_string()),
            })
        })
        .collect()
}

/// Parse `path=value`. The value is read as a TOML value when possible
/// (numbers, booleans, quoted strings, arrays) and as a bare string
/// otherwise.
pub fn parse_override(s: &str) -> Result<Override> {
    let (path, raw) = s
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{s}` is not of the form key=value")))?;
    let path = parse_path(path)?;
    let raw = raw.trim();
    let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) if t.len() == 1 => t.remove("v").unwrap_or(Value::String(raw.into())),
        _ => Value::String(raw.to_string()),
    };
    Ok(Override { path, value })
}

fn to_value(cfg: &ExperimentConfig) -> Result<Value> {
    Value::try_from(cfg).map_err(|e| Error::Config(e.to_string()))
}

fn from_value(v: Value) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = v
        .try_into()
        .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

fn join(path: &[PathSeg]) -> String {
    path.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(".")
}

fn slot_mut<'a>(root: &'a mut Value, path: &[PathSeg], create: bool) -> Result<&'a mut Value> {
    let mut cur = root;
    for (depth, seg) in path.iter().enumerate() {
        let here = join(&path[..=depth]);
        cur = match (seg, cur) {
            (PathSeg::Key(k), Value::Table(t)) => {
                if !t.contains_key(k) {
                    if !create {
                        return Err(Error::Config(format!("no field `{here}`")));
                    }
                    let next = if depth + 1 == path.len() {
                        Value::Boolean(false)
                    } else {
                        Value::Table(Default::default())
                    };
                    t.insert(k.clone(), next);
                }
                t.get_mut(k).expect("inserted above")
            }
            (PathSeg::Index(i), Value::Array(a)) => {
                let len = a.len();
                a.get_mut(*i)
                    .ok_or_else(|| Error::Config(format!("`{here}`: index out of range (length {len})")))?
            }
            _ => return Err(Error::Config(format!("`{here}` does not name a field"))),
        };
    }
    Ok(cur)
}

/// Apply assignments in order and revalidate.
pub fn apply_overrides(cfg: &ExperimentConfig, overrides: &[Override]) -> Result<ExperimentConfig> {
    if overrides.is_empty() {
        return Ok(cfg.clone());
    }
    let mut root = to_value(cfg)?;
    for o in overrides {
        *slot_mut(&mut root, &o.path, true)? = o.value.clone();
    }
    from_value(root)
}

/// Set a numeric field, keeping integer fields integral.
pub fn set_numeric(cfg: &ExperimentConfig, path: &[PathSeg], x: f64) -> Result<ExperimentConfig> {
    let mut root = to_value(cfg)?;
    let slot = slot_mut(&mut root, path, false)?;
    let name = join(path);
    *slot = match slot {
        Value::Float(_) => Value::Float(x),
        Value::Integer(_) if x.fract() == 0.0 && x.abs() < 9e15 => Value::Integer(x as i64),
        Value::Integer(_) => return Err(Error::Config(format!("`{name}` takes integer values, got {x}"))),
        _ => return Err(Error::Config(format!("`{name}` is not a numeric field"))),
    };
    from_value(root)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::config::tests::MINIMAL;

    fn base() -> ExperimentConfig {
        ExperimentConfig::parse(MINIMAL).unwrap()
    }

    #[test]
    fn parse_forms() {
        let o = parse_override("circuit.g_mhz=15").unwrap();
        assert_eq!(
            o.path,
            vec![PathSeg::Key("circuit".into()), PathSeg::Key("g_mhz".into())]
        );
        assert_eq!(o.value, Value::Integer(15));
        let o = parse_override("initial.qubits = maximally_mixed_rotated").unwrap();
        assert_eq!(o.value, Value::String("maximally_mixed_rotated".into()));
        let o = parse_override("targets.0.theta=1.5").unwrap();
        assert_eq!(o.path[1], PathSeg::Index(0));
        for bad in ["novalue", "=3", "a..b=1", "a b=1"] {
            assert!(parse_override(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn apply_and_validate() {
        let cfg = apply_overrides(
            &base(),
            &[
                parse_override("circuit.g_mhz=15.0").unwrap(),
                parse_override("solver=trajectories").unwrap(),
                parse_override("initial.qubits=bloch_point(pi/2, 0)").unwrap(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.circuit.g_mhz, 15.0);
        assert_eq!(cfg.solver, super::super::config::Solver::Trajectories);
        assert!(apply_overrides(&base(), &[parse_override("circuit.g_mhz=-1.0").unwrap()]).is_err());
        assert!(apply_overrides(&base(), &[parse_override("circuit.nope=1").unwrap()]).is_err());
        assert!(apply_overrides(&base(), &[parse_override("targets.3.theta=1.0").unwrap()]).is_err());
    }

    #[test]
    fn numeric_setter() {
        let p = parse_path("circuit.omega_bar_mhz").unwrap();
        assert_eq!(set_numeric(&base(), &p, 95.0).unwrap().circuit.omega_bar_mhz, 95.0);
        let p = parse_path("circuit.fock_levels").unwrap();
        assert_eq!(set_numeric(&base(), &p, 3.0).unwrap().circuit.fock_levels, 3);
        assert!(set_numeric(&base(), &p, 2.5).is_err());
        assert!(set_numeric(&base(), &parse_path("solver").unwrap(), 1.0).is_err());
        assert!(set_numeric(&base(), &parse_path("circuit.missing").unwrap(), 1.0).is_err());
    }
}
