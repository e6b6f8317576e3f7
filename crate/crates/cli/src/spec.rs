//! `name:key=value,...` strings naming seeds and test charts.

use std::collections::BTreeMap;

use biconserv_core::catalog::{cylinder_seed, hyperplane_seed, product_sphere_seed, sphere_seed, IsoparSeed};
use biconserv_core::chart::Chart;
use biconserv_core::surfaces::{Catenoid, Plane, RoundCylinder, RoundSphere, Torus};

use crate::CliError;

/// What a spec string resolves to.
pub enum Target {
    /// An isoparametric seed, evolved before verification.
    Seed(IsoparSeed),
    /// A plain hypersurface chart, verified as given.
    Chart(Box<dyn Chart>),
}

impl std::fmt::Debug for Target {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Target::Seed(s) => write!(f, "Seed({})", s.spec()),
            Target::Chart(c) => write!(f, "Chart({})", c.label()),
        }
    }
}

/// Every accepted name with its keys and defaults.
pub const GRAMMAR: &[(&str, &[(&str, &str)])] = &[
    ("sphere", &[("n", "2"), ("r", "1")]),
    ("product", &[("p", "1"), ("q", "1"), ("r1", "1"), ("r2", "1")]),
    ("cylinder", &[("p", "1"), ("q", "1"), ("r", "1")]),
    ("hyperplane", &[("n", "2")]),
    ("chart-sphere", &[("n", "2"), ("r", "1")]),
    ("chart-cylinder", &[("p", "1"), ("q", "1"), ("r", "1")]),
    ("chart-plane", &[("n", "2")]),
    ("catenoid", &[("c", "1")]),
    ("torus", &[("big_r", "2"), ("r", "1")]),
];

/// Split a spec into its name and key/value pairs. Unknown names and keys,
/// repeated keys and empty values are errors.
pub fn split(spec: &str) -> Result<(&'static str, BTreeMap<&'static str, String>), CliError> {
    let (name, rest) = match spec.split_once(':') {
        Some((n, r)) => (n.trim(), r),
        None => (spec.trim(), ""),
    };
    let Some((name, keys)) = GRAMMAR.iter().find(|(n, _)| *n == name) else {
        let known: Vec<&str> = GRAMMAR.iter().map(|g| g.0).collect();
        return Err(CliError::usage(format!(
            "unknown seed or chart '{name}' (known: {})",
            known.join(", ")
        )));
    };
    let mut given = BTreeMap::new();
    for pair in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let Some((k, v)) = pair.split_once('=') else {
            return Err(CliError::usage(format!("expected key=value in '{spec}', got '{pair}'")));
        };
        let (k, v) = (k.trim(), v.trim());
        let Some((key, _)) = keys.iter().find(|(key, _)| *key == k) else {
            let allowed: Vec<&str> = keys.iter().map(|k| k.0).collect();
            return Err(CliError::usage(format!(
                "unknown key '{k}' for {name} (allowed: {})",
                allowed.join(", ")
            )));
        };
        if v.is_empty() {
            return Err(CliError::usage(format!("empty value for key '{k}' in '{spec}'")));
        }
        if given.insert(*key, v.to_string()).is_some() {
            return Err(CliError::usage(format!("key '{k}' given twice in '{spec}'")));
        }
    }
    let mut all = BTreeMap::new();
    for (k, d) in keys.iter() {
        all.insert(*k, given.remove(k).unwrap_or_else(|| d.to_string()));
    }
    Ok((name, all))
}

fn real(m: &BTreeMap<&str, String>, k: &str) -> Result<f64, CliError> {
    let s = &m[k];
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| CliError::usage(format!("key '{k}' needs a finite number, got '{s}'")))
}

fn count(m: &BTreeMap<&str, String>, k: &str) -> Result<usize, CliError> {
    let s = &m[k];
    s.parse::<usize>()
        .map_err(|_| CliError::usage(format!("key '{k}' needs a non-negative integer, got '{s}'")))
}

fn positive(m: &BTreeMap<&str, String>, k: &str) -> Result<f64, CliError> {
    let v = real(m, k)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(CliError::usage(format!("key '{k}' must be positive, got {v}")))
    }
}

pub fn parse(spec: &str) -> Result<Target, CliError> {
    let (name, m) = split(spec)?;
    let t = match name {
        "sphere" => Target::Seed(sphere_seed(count(&m, "n")?, real(&m, "r")?)?),
        "product" => Target::Seed(product_sphere_seed(
            count(&m, "p")?,
            count(&m, "q")?,
            real(&m, "r1")?,
            real(&m, "r2")?,
        )?),
        "cylinder" => Target::Seed(cylinder_seed(count(&m, "p")?, count(&m, "q")?, real(&m, "r")?)?),
        "hyperplane" => Target::Seed(hyperplane_seed(count(&m, "n")?)?),
        "chart-sphere" => {
            let n = count(&m, "n")?;
            if n < 1 {
                return Err(CliError::usage("chart-sphere needs n >= 1"));
            }
            Target::Chart(Box::new(RoundSphere::new(n, positive(&m, "r")?)))
        }
        "chart-cylinder" => {
            let p = count(&m, "p")?;
            if p < 1 {
                return Err(CliError::usage("chart-cylinder needs p >= 1"));
            }
            Target::Chart(Box::new(RoundCylinder::new(p, count(&m, "q")?, positive(&m, "r")?)))
        }
        "chart-plane" => {
            let n = count(&m, "n")?;
            if n < 1 {
                return Err(CliError::usage("chart-plane needs n >= 1"));
            }
            Target::Chart(Box::new(Plane::new(n)))
        }
        "catenoid" => Target::Chart(Box::new(Catenoid::new(positive(&m, "c")?))),
        "torus" => {
            let (big, r) = (positive(&m, "big_r")?, positive(&m, "r")?);
            if r >= big {
                return Err(CliError::usage(format!("torus needs r < big_r (r={r}, big_r={big})")));
            }
            Target::Chart(Box::new(Torus::new(big, r)))
        }
        _ => unreachable!("split only returns grammar names"),
    };
    Ok(t)
}

/// Like [`parse`] but only seeds are accepted.
pub fn parse_seed(spec: &str) -> Result<IsoparSeed, CliError> {
    match parse(spec)? {
        Target::Seed(s) => Ok(s),
        Target::Chart(c) => Err(CliError::usage(format!("'{}' is a chart, not an evolvable seed", c.label()))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn defaults_and_overrides() {
        let s = parse_seed("sphere:n=3,r=2").unwrap();
        assert_eq!(s.lambda0, vec![-0.5, -0.5]);
        assert_eq!(parse_seed("sphere").unwrap().spec(), "sphere:n=2,r=1");
        assert_eq!(parse_seed(" product : r2 = 2 ").unwrap().spec(), "product:p=1,q=1,r1=1,r2=2");
        assert!(matches!(parse("catenoid:c=0.5").unwrap(), Target::Chart(_)));
    }

    #[test]
    fn misconfiguration_is_rejected() {
        for bad in [
            "sphere:n=3,radius=2",
            "sphere:n=3,n=4",
            "sphere:n=",
            "sphere:n",
            "sphere:n=-1",
            "sphere:r=nan",
            "sphere:n=1",
            "sphere:r=-1",
            "ellipsoid:a=1",
            "torus:big_r=1,r=2",
            "catenoid:c=0",
        ] {
            let e = parse(bad).unwrap_err();
            assert_eq!(e.code, crate::EXIT_USAGE, "{bad}: {e}");
        }
        assert!(parse_seed("catenoid").is_err());
    }

    proptest! {
        #[test]
        fn canonical_spec_round_trips(n in 2usize..6, r in 0.1f64..10.0, p in 1usize..3, q in 0usize..3) {
            for s in [sphere_seed(n, r).unwrap(), cylinder_seed(p, q, r).unwrap(), product_sphere_seed(p, q + 1, r, 1.0 / r).unwrap()] {
                let back = parse_seed(&s.spec()).unwrap();
                prop_assert_eq!(back, s);
            }
        }
    }
}
