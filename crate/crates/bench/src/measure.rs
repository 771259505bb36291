use std::collections::BTreeMap;

use paintshop::{Error, Result};
use serde::Serialize;

/// `(worst - value) / (worst - best)`: 1 at the optimum, 0 at the worst
/// configuration. Fails with `DegenerateRange` when every configuration has
/// the same energy.
pub fn approximation_measure(worst: f64, best: f64, value: f64) -> Result<f64> {
    if worst == best {
        return Err(Error::DegenerateRange(worst));
    }
    Ok((worst - value) / (worst - best))
}

/// As [`approximation_measure`], but a degenerate range counts as optimal.
pub fn measure_or_one(worst: f64, best: f64, value: f64) -> f64 {
    approximation_measure(worst, best, value).unwrap_or(1.0)
}

/// Mean and standard error (`sample_stddev / sqrt(n)`; zero for one value).
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub n_bodies: usize,
    pub method: String,
    pub p: Option<usize>,
    pub sigma: Option<f64>,
    pub count: usize,
    pub mean_value: f64,
    pub stderr_value: f64,
    pub mean_measure: f64,
    pub stderr_measure: f64,
    pub mean_random_measure: f64,
}

/// Groups `(n_bodies, method, p, sigma)` keyed values in key order.
pub fn aggregate<'a, I>(rows: I) -> Vec<Summary>
where
    I: IntoIterator<Item = &'a crate::ResultRow>,
{
    type Key = (usize, String, Option<usize>, Option<u64>);
    let mut groups: BTreeMap<Key, Vec<&crate::ResultRow>> = BTreeMap::new();
    for r in rows {
        if r.error.is_some() {
            continue;
        }
        let key = (r.n_bodies, r.method.clone(), r.p, r.sigma.map(f64::to_bits));
        groups.entry(key).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((n_bodies, method, p, sigma), rs)| {
            let values: Vec<f64> = rs.iter().map(|r| r.value).collect();
            let measures: Vec<f64> = rs.iter().map(|r| r.measure).collect();
            let randoms: Vec<f64> = rs.iter().map(|r| r.random_measure).collect();
            let (mean_value, stderr_value) = mean_and_stderr(&values);
            let (mean_measure, stderr_measure) = mean_and_stderr(&measures);
            Summary {
                n_bodies,
                method,
                p,
                sigma: sigma.map(f64::from_bits),
                count: rs.len(),
                mean_value,
                stderr_value,
                mean_measure,
                stderr_measure,
                mean_random_measure: mean_and_stderr(&randoms).0,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn measure_examples() {
        assert_eq!(approximation_measure(10.0, 2.0, 2.0).unwrap(), 1.0);
        assert_eq!(approximation_measure(10.0, 2.0, 10.0).unwrap(), 0.0);
        assert_eq!(approximation_measure(10.0, 2.0, 4.0).unwrap(), 0.75);
        assert_eq!(approximation_measure(3.0, 3.0, 3.0), Err(Error::DegenerateRange(3.0)));
        assert_eq!(measure_or_one(3.0, 3.0, 3.0), 1.0);
    }

    #[test]
    fn standard_error() {
        let (m, se) = mean_and_stderr(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        // sample variance 5/3
        assert!((se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_and_stderr(&[7.0]), (7.0, 0.0));
    }
}
