use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use paintshop::{Error, Result};

/// Solution methods that can appear in a comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Greedy,
    RecursiveGreedy,
    BruteForce,
    QaoaFixed,
    QaoaOptimised,
    RqaoaFixed,
    RqaoaOptimised,
    /// Tabulated angles plus fresh Gaussian noise at every reduction step,
    /// one run per configured sigma.
    RqaoaPerturbed,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Greedy,
        Method::RecursiveGreedy,
        Method::BruteForce,
        Method::QaoaFixed,
        Method::QaoaOptimised,
        Method::RqaoaFixed,
        Method::RqaoaOptimised,
        Method::RqaoaPerturbed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Greedy => "greedy",
            Method::RecursiveGreedy => "recursive-greedy",
            Method::BruteForce => "brute-force",
            Method::QaoaFixed => "qaoa-fixed",
            Method::QaoaOptimised => "qaoa-optimised",
            Method::RqaoaFixed => "rqaoa-fixed",
            Method::RqaoaOptimised => "rqaoa-optimised",
            Method::RqaoaPerturbed => "rqaoa-perturbed",
        }
    }

    /// Whether the method is parameterised by QAOA depth.
    pub fn uses_depth(self) -> bool {
        !matches!(self, Method::Greedy | Method::RecursiveGreedy | Method::BruteForce)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s || (s == "qaoa-optimized" && *m == Method::QaoaOptimised))
            .or(if s == "rqaoa-optimized" { Some(Method::RqaoaOptimised) } else { None })
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method '{s}'")))
    }
}

/// Expectation estimation for the quantum methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Exact,
    Shots(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub bodies: RangeInclusive<usize>,
    pub instances: usize,
    pub ps: Vec<usize>,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub mode: Mode,
    pub via_rcc: bool,
    pub sigmas: Vec<f64>,
    pub cutoffs: Vec<f64>,
    /// Record wall time per row; off by default so output is reproducible
    /// byte for byte.
    pub timings: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            bodies: 4..=10,
            instances: 20,
            ps: vec![1],
            seed: 0,
            methods: vec![Method::Greedy, Method::RecursiveGreedy, Method::BruteForce, Method::RqaoaFixed],
            mode: Mode::Exact,
            via_rcc: false,
            sigmas: vec![0.0, 0.05, 0.2, 0.5],
            cutoffs: vec![0.0, 0.005, 0.0075, 0.01],
            timings: false,
        }
    }
}

impl ExperimentConfig {
    pub fn check(&self) -> Result<()> {
        if self.instances == 0 {
            return Err(Error::InvalidArgument("at least one instance per size is required".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidArgument("no methods selected".into()));
        }
        if self.bodies.is_empty() || *self.bodies.start() == 0 {
            return Err(Error::InvalidArgument(format!(
                "body range {}..{} is empty or starts at zero",
                self.bodies.start(),
                self.bodies.end()
            )));
        }
        if self.ps.is_empty() || self.ps.contains(&0) {
            return Err(Error::InvalidArgument("QAOA depths must be positive".into()));
        }
        if self.sigmas.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(Error::InvalidArgument("sigmas must be finite and non-negative".into()));
        }
        if self.cutoffs.iter().any(|c| c.is_nan() || *c < 0.0) {
            return Err(Error::InvalidArgument("cutoffs must be non-negative".into()));
        }
        if self.mode == Mode::Shots(0) {
            return Err(Error::InvalidArgument("shot count must be positive".into()));
        }
        Ok(())
    }

    /// Seed of instance `index` (the same for every size).
    pub fn instance_seed(&self, index: usize) -> u64 {
        paintshop::rng::mix(self.seed, index as u64)
    }
}

/// Parses `A..B` (inclusive) or a single size `A`.
pub fn parse_bodies(s: &str) -> Result<RangeInclusive<usize>> {
    let bad = || Error::InvalidArgument(format!("expected A..B or A, got '{s}'"));
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
    match s.split_once("..") {
        Some((a, b)) => {
            let b = b.strip_prefix('=').unwrap_or(b);
            let (a, b) = (parse(a)?, parse(b)?);
            if a > b {
                return Err(bad());
            }
            Ok(a..=b)
        }
        None => {
            let a = parse(s)?;
            Ok(a..=a)
        }
    }
}

/// Comma-separated list.
pub fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse::<T>().map_err(|_| Error::InvalidArgument(format!("cannot parse '{t}'"))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bodies() {
        assert_eq!(parse_bodies("4..10").unwrap(), 4..=10);
        assert_eq!(parse_bodies("4..=10").unwrap(), 4..=10);
        assert_eq!(parse_bodies("8").unwrap(), 8..=8);
        assert!(parse_bodies("10..4").is_err());
        assert!(parse_bodies("x").is_err());
    }

    #[test]
    fn methods_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert_eq!("qaoa-optimized".parse::<Method>().unwrap(), Method::QaoaOptimised);
        assert!("annealing".parse::<Method>().is_err());
        assert_eq!(parse_list::<Method>("greedy, brute-force").unwrap(), vec![Method::Greedy, Method::BruteForce]);
    }

    #[test]
    fn config_checks() {
        assert!(ExperimentConfig::default().check().is_ok());
        assert!(ExperimentConfig { instances: 0, ..Default::default() }.check().is_err());
        assert!(ExperimentConfig { methods: vec![], ..Default::default() }.check().is_err());
        assert!(ExperimentConfig { sigmas: vec![-0.1], ..Default::default() }.check().is_err());
    }
}
