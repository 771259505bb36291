//! QAOA angles, energy evaluation (full circuit or reverse causal cones),
//! Nelder-Mead and sampled solution extraction.

use std::collections::BTreeMap;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bpsp::{BpspInstance, Colouring};
use crate::circuit::{build_qaoa_circuit, build_rcc_circuit, TrimmedRcc};
use crate::error::{invalid, Error, Result};
use crate::exec;
use crate::ising::{spins_to_colouring, IsingGraph, SpinConfig};
use crate::rng::{self, Stream};
use crate::statevector::{energy_expectation, expectation_zz, sample_with, simulate};

/// Mixer angles `betas[l]` and phase angles `gammas[l]` for layers `1..=p`.
#[derive(Debug, Clone, PartialEq)]
pub struct QaoaParams {
    pub betas: Vec<f64>,
    pub gammas: Vec<f64>,
}

impl QaoaParams {
    pub fn new(betas: Vec<f64>, gammas: Vec<f64>) -> Result<Self> {
        let params = Self { betas, gammas };
        params.check()?;
        Ok(params)
    }

    /// All-zero angles at depth `p`.
    pub fn zeros(p: usize) -> Result<Self> {
        Self::new(vec![0.0; p], vec![0.0; p])
    }

    pub fn check(&self) -> Result<()> {
        if self.betas.is_empty() {
            return Err(invalid("QAOA depth must be at least 1"));
        }
        if self.betas.len() != self.gammas.len() {
            return Err(invalid(format!(
                "{} betas but {} gammas",
                self.betas.len(),
                self.gammas.len()
            )));
        }
        if self.betas.iter().chain(&self.gammas).any(|a| !a.is_finite()) {
            return Err(invalid("QAOA angles must be finite"));
        }
        Ok(())
    }

    pub fn depth(&self) -> usize {
        self.betas.len()
    }

    /// `(beta_l, gamma_l)` for `l = 1..=p`.
    pub fn layers(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.betas.iter().copied().zip(self.gammas.iter().copied())
    }

    /// Interleaved `[beta_1, gamma_1, beta_2, gamma_2, ...]`.
    pub fn to_vec(&self) -> Vec<f64> {
        self.layers().flat_map(|(b, g)| [b, g]).collect()
    }

    pub fn from_slice(x: &[f64]) -> Result<Self> {
        if x.is_empty() || !x.len().is_multiple_of(2) {
            return Err(invalid("expected an even, nonzero number of angles"));
        }
        Self::new(x.iter().step_by(2).copied().collect(), x.iter().skip(1).step_by(2).copied().collect())
    }
}

#[derive(Serialize, Deserialize)]
struct ParamsFile {
    p: usize,
    betas: Vec<f64>,
    gammas: Vec<f64>,
}

impl Serialize for QaoaParams {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ParamsFile { p: self.depth(), betas: self.betas.clone(), gammas: self.gammas.clone() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for QaoaParams {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let f = ParamsFile::deserialize(d)?;
        if f.p != f.betas.len() {
            return Err(serde::de::Error::custom(format!("p = {} but {} betas", f.p, f.betas.len())));
        }
        QaoaParams::new(f.betas, f.gammas).map_err(serde::de::Error::custom)
    }
}

/// Precomputed angles for 4-regular graphs with `+-1` couplings, stored as
/// `[beta_1, gamma_1, beta_2, gamma_2, ...]`.
#[allow(clippy::approx_constant)]
const FIXED_TABLE: [&[f64]; 4] = [
    &[-0.39269, 0.52358],
    &[-0.53411, 0.40784, -0.28296, 0.73974],
    &[-0.58794, 0.35450, -0.42318, 0.65138, -0.22301, 0.75426],
    &[-0.60498, 0.31500, -0.47780, 0.58754, -0.36127, 0.67322, -0.18753, 0.77120],
];

/// Tabulated angles for `1 <= p <= 4`.
pub fn fixed_params(p: usize) -> Result<QaoaParams> {
    match p {
        1..=4 => QaoaParams::from_slice(FIXED_TABLE[p - 1]),
        _ => Err(Error::UnsupportedDepth(p)),
    }
}

/// How expectations are estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    Exact,
    /// Total shot budget per expectation evaluation.
    Shots { shots: u64, seed: u64 },
}

/// Default tolerance of the optimiser on angle coordinates.
pub const DEFAULT_TOL: f64 = 1e-4;

/// Where each QAOA run takes its angles from.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamSource {
    /// Tabulated angles for the requested depth.
    Fixed,
    /// Nelder-Mead from `initial`, or from the tabulated angles if `None`.
    Optimised { initial: Option<QaoaParams>, tol: f64 },
    /// Base angles plus independent Gaussian noise drawn per `draw` index.
    Perturbed { base: Box<ParamSource>, sigma: f64, seed: u64 },
}

/// Angles chosen by a [`ParamSource`] and the objective calls it spent.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedParams {
    pub params: QaoaParams,
    pub evaluations: usize,
}

impl ParamSource {
    pub fn optimised() -> Self {
        ParamSource::Optimised { initial: None, tol: DEFAULT_TOL }
    }

    pub fn perturbed(base: ParamSource, sigma: f64, seed: u64) -> Self {
        ParamSource::Perturbed { base: Box::new(base), sigma, seed }
    }

    pub fn check(&self) -> Result<()> {
        match self {
            ParamSource::Fixed => Ok(()),
            ParamSource::Optimised { tol, initial } => {
                if tol.is_nan() || *tol <= 0.0 {
                    return Err(invalid("optimiser tolerance must be positive"));
                }
                initial.as_ref().map_or(Ok(()), QaoaParams::check)
            }
            ParamSource::Perturbed { base, sigma, .. } => {
                if !sigma.is_finite() || *sigma < 0.0 {
                    return Err(invalid("sigma must be a finite non-negative number"));
                }
                base.check()
            }
        }
    }

    /// Angles for depth `p` on `graph`. `draw` indexes fresh noise for
    /// perturbed sources (the reduction step in RQAOA).
    pub fn resolve(
        &self,
        graph: &IsingGraph,
        p: usize,
        mode: EvalMode,
        via_rcc: bool,
        draw: u64,
    ) -> Result<ResolvedParams> {
        self.check()?;
        match self {
            ParamSource::Fixed => Ok(ResolvedParams { params: fixed_params(p)?, evaluations: 1 }),
            ParamSource::Optimised { initial, tol } => {
                let start = match initial {
                    Some(x) if x.depth() != p => {
                        return Err(invalid(format!("initial angles have depth {}, expected {p}", x.depth())))
                    }
                    Some(x) => x.clone(),
                    None => fixed_params(p)?,
                };
                let run = optimize_nelder_mead(graph, &start, mode, via_rcc, *tol)?;
                Ok(ResolvedParams { params: run.params, evaluations: run.evaluations })
            }
            ParamSource::Perturbed { base, sigma, seed } => {
                let mut r = base.resolve(graph, p, mode, via_rcc, draw)?;
                r.params = perturb(&r.params, *sigma, *seed, draw)?;
                Ok(r)
            }
        }
    }
}

/// Adds independent `N(0, sigma^2)` noise to every angle; `sigma = 0`
/// returns `params` unchanged.
pub fn perturb(params: &QaoaParams, sigma: f64, seed: u64, draw: u64) -> Result<QaoaParams> {
    if sigma == 0.0 {
        return Ok(params.clone());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| invalid(e.to_string()))?;
    let mut rng = rng::stream(seed, Stream::Perturbation, draw);
    let x: Vec<f64> = params.to_vec().into_iter().map(|a| a + normal.sample(&mut rng)).collect();
    QaoaParams::from_slice(&x)
}

/// Per-edge `<Z_i Z_j>` plus the number of circuits executed to get them.
#[derive(Debug, Clone, PartialEq)]
pub struct Correlations {
    pub values: BTreeMap<(usize, usize), f64>,
    pub circuits: usize,
}

/// Below this many trimmed qubits, exact cone expectations are averaged over
/// the trimmed family; above it the untrimmed cone is simulated once, which
/// gives the same value.
const EXACT_TRIM_LIMIT: usize = 10;

/// `<Z_i Z_j>` for every edge. Full mode simulates one circuit; cone mode
/// builds the trimmed cone of each edge and splits the shot budget evenly
/// over its `2^k` circuits (rounded down, at least one shot each).
pub fn edge_correlations(graph: &IsingGraph, params: &QaoaParams, mode: EvalMode, via_rcc: bool) -> Result<Correlations> {
    params.check()?;
    let edges = graph.edge_list();
    if via_rcc {
        let per_edge = exec::map(&edges.iter().enumerate().collect::<Vec<_>>(), |&(e, &edge)| {
            cone_correlation(graph, edge, params, mode, e as u64)
        });
        let mut values = BTreeMap::new();
        let mut circuits = 0;
        for (&edge, r) in edges.iter().zip(per_edge) {
            let (m, n) = r?;
            values.insert(edge, m);
            circuits += n;
        }
        return Ok(Correlations { values, circuits });
    }
    let state = simulate(&build_qaoa_circuit(graph, params)?)?;
    let values = match mode {
        EvalMode::Exact => {
            let mut v = BTreeMap::new();
            for &(i, j) in &edges {
                v.insert((i, j), expectation_zz(&state, i, j)?);
            }
            v
        }
        EvalMode::Shots { shots, seed } => {
            let counts = sample_with(&state, shots, &mut rng::stream(seed, Stream::Shots, 0))?;
            edges.iter().map(|&(i, j)| ((i, j), counts.zz(i, j))).collect()
        }
    };
    Ok(Correlations { values, circuits: 1 })
}

fn cone_correlation(
    graph: &IsingGraph,
    edge: (usize, usize),
    params: &QaoaParams,
    mode: EvalMode,
    edge_index: u64,
) -> Result<(f64, usize)> {
    let trimmed = TrimmedRcc::new(graph, edge, params)?;
    let n = trimmed.n_circuits();
    let (a, b) = trimmed.target;
    match mode {
        EvalMode::Exact if trimmed.k() > EXACT_TRIM_LIMIT => {
            let cone = build_rcc_circuit(graph, edge, params)?;
            let state = simulate(&cone.circuit)?;
            Ok((expectation_zz(&state, cone.target.0, cone.target.1)?, n))
        }
        EvalMode::Exact => {
            let mut sum = 0.0;
            for c in trimmed.circuits() {
                sum += expectation_zz(&simulate(&c)?, a, b)?;
            }
            Ok((sum * trimmed.weight(), n))
        }
        EvalMode::Shots { shots, seed } => {
            let per_circuit = (shots / n as u64).max(1);
            let mut sum = 0.0;
            for bits in 0..n as u64 {
                let state = simulate(&trimmed.circuit(bits))?;
                let mut rng = rng::stream(seed, Stream::Shots, (edge_index << 24) | bits);
                sum += sample_with(&state, per_circuit, &mut rng)?.zz(a, b);
            }
            Ok((sum * trimmed.weight(), n))
        }
    }
}

/// `<H>` under the QAOA state. Cone mode assembles `(sum J M + C) / 2` from
/// per-edge correlations and does not support local fields.
pub fn evaluate_energy(graph: &IsingGraph, params: &QaoaParams, mode: EvalMode, via_rcc: bool) -> Result<f64> {
    params.check()?;
    if graph.n_nodes() == 0 {
        return Err(invalid("graph has no nodes"));
    }
    if graph.n_edges() == 0 && !graph.has_fields() {
        return Ok(graph.offset_numerator() as f64 / 2.0);
    }
    if mode == EvalMode::Exact && !via_rcc {
        let state = simulate(&build_qaoa_circuit(graph, params)?)?;
        return energy_expectation(graph, &state);
    }
    if graph.has_fields() {
        if via_rcc {
            return Err(Error::ConstraintViolation("cone evaluation does not support local fields".into()));
        }
        let state = simulate(&build_qaoa_circuit(graph, params)?)?;
        let (shots, seed) = match mode {
            EvalMode::Shots { shots, seed } => (shots, seed),
            EvalMode::Exact => unreachable!(),
        };
        let counts = sample_with(&state, shots, &mut rng::stream(seed, Stream::Shots, 0))?;
        let twice: i64 = counts
            .counts
            .iter()
            .map(|(&x, &c)| graph.energy_of_index(x).twice() * c as i64)
            .sum();
        return Ok(twice as f64 / 2.0 / shots as f64);
    }
    let corr = edge_correlations(graph, params, mode, via_rcc)?;
    let mut twice = graph.offset_numerator() as f64;
    for (edge, &w) in graph.edges() {
        twice += w as f64 * corr.values[edge];
    }
    Ok(twice / 2.0)
}

/// Result of a Nelder-Mead run.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimised {
    pub params: QaoaParams,
    pub energy: f64,
    /// Objective calls made.
    pub evaluations: usize,
}

/// Evaluation budget per optimised coordinate.
pub const EVALS_PER_DIM: usize = 500;

/// Minimises [`evaluate_energy`] over the interleaved angle vector.
pub fn optimize_nelder_mead(
    graph: &IsingGraph,
    initial: &QaoaParams,
    mode: EvalMode,
    via_rcc: bool,
    tol: f64,
) -> Result<Optimised> {
    initial.check()?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(invalid("optimiser tolerance must be positive"));
    }
    let x0 = initial.to_vec();
    let cap = EVALS_PER_DIM * x0.len();
    let (x, energy, evaluations) = nelder_mead(
        |x| evaluate_energy(graph, &QaoaParams::from_slice(x)?, mode, via_rcc),
        &x0,
        tol,
        cap,
    )?;
    Ok(Optimised { params: QaoaParams::from_slice(&x)?, energy, evaluations })
}

/// Plain Nelder-Mead with reflection 1, expansion 2, contraction 0.5 and
/// shrink 0.5. The initial simplex is `x0` plus `x0 + 0.1 e_i`. Stops when
/// every coordinate spans less than `tol` across the simplex or after
/// `max_evals` calls. Returns the best vertex, its value and the call count.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], tol: f64, max_evals: usize) -> Result<(Vec<f64>, f64, usize)>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    const STEP: f64 = 0.1;
    let n = x0.len();
    if n == 0 {
        return Err(invalid("nothing to optimise"));
    }
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| -> Result<f64> {
        *evals += 1;
        let v = f(x)?;
        Ok(if v.is_nan() { f64::INFINITY } else { v })
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let v0 = eval(x0, &mut evals)?;
    simplex.push((x0.to_vec(), v0));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += STEP;
        let v = eval(&x, &mut evals)?;
        simplex.push((x, v));
    }
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = (0..n)
            .map(|d| {
                let (lo, hi) = simplex
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (x, _)| (lo.min(x[d]), hi.max(x[d])));
                hi - lo
            })
            .fold(0.0, f64::max);
        if spread < tol || evals >= max_evals {
            break;
        }
        let worst = simplex[n].clone();
        let centroid: Vec<f64> = (0..n).map(|d| simplex[..n].iter().map(|(x, _)| x[d]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> { (0..n).map(|d| centroid[d] + t * (worst.0[d] - centroid[d])).collect() };

        let xr = along(-1.0);
        let fr = eval(&xr, &mut evals)?;
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let fe = eval(&xe, &mut evals)?;
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc, accept) = if fr < worst.1 {
            let xc = along(-0.5);
            let fc = eval(&xc, &mut evals)?;
            (xc, fc, fc <= fr)
        } else {
            let xc = along(0.5);
            let fc = eval(&xc, &mut evals)?;
            (xc, fc, fc < worst.1)
        };
        if accept {
            simplex[n] = (xc, fc);
            continue;
        }
        let best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let x: Vec<f64> = (0..n).map(|d| best[d] + 0.5 * (vertex.0[d] - best[d])).collect();
            let v = eval(&x, &mut evals)?;
            *vertex = (x, v);
            if evals >= max_evals {
                break;
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, v) = simplex.swap_remove(0);
    Ok((x, v, evals))
}

/// Sampled solution: the lowest-energy configuration among `shots` samples
/// of the full QAOA state, with its colour-change count.
pub fn qaoa_solve(
    graph: &IsingGraph,
    instance: &BpspInstance,
    params: &QaoaParams,
    shots: u64,
    seed: u64,
) -> Result<(Colouring, u32)> {
    if graph.n_nodes() != instance.n_bodies() {
        return Err(invalid(format!(
            "graph has {} nodes but the instance has {} bodies",
            graph.n_nodes(),
            instance.n_bodies()
        )));
    }
    let state = simulate(&build_qaoa_circuit(graph, params)?)?;
    let counts = sample_with(&state, shots, &mut rng::stream(seed, Stream::Shots, 0))?;
    let best = counts
        .counts
        .keys()
        .min_by_key(|&&x| (graph.energy_of_index(x).twice(), x))
        .copied()
        .expect("at least one shot");
    let spins = SpinConfig::from_index(best, graph.n_nodes());
    let colouring = spins_to_colouring(instance, &spins)?;
    let changes = crate::bpsp::colour_changes(instance, &colouring)?;
    Ok((colouring, changes))
}

#[cfg(test)]
#[allow(clippy::approx_constant)]
mod tests {
    use super::*;
    use crate::ising::{brute_force_extremes, map_bpsp};
    use approx::assert_abs_diff_eq;

    fn worked_example() -> BpspInstance {
        BpspInstance::new(4, vec![1, 0, 1, 3, 2, 3, 0, 2]).unwrap()
    }

    fn single_edge(j: i64) -> IsingGraph {
        IsingGraph::from_edges(2, &[(0, 1, j)], 3).unwrap()
    }

    #[test]
    fn table_rows() {
        let p1 = fixed_params(1).unwrap();
        assert_eq!(p1.betas, vec![-0.39269]);
        assert_eq!(p1.gammas, vec![0.52358]);
        let p2 = fixed_params(2).unwrap();
        assert_eq!(p2.to_vec(), vec![-0.53411, 0.40784, -0.28296, 0.73974]);
        assert_eq!(fixed_params(3).unwrap().gammas, vec![0.35450, 0.65138, 0.75426]);
        assert_eq!(fixed_params(4).unwrap().betas, vec![-0.60498, -0.47780, -0.36127, -0.18753]);
        assert_eq!(fixed_params(5), Err(Error::UnsupportedDepth(5)));
        assert_eq!(fixed_params(0), Err(Error::UnsupportedDepth(0)));
    }

    #[test]
    fn params_validation_and_json() {
        assert!(QaoaParams::new(vec![], vec![]).is_err());
        assert!(QaoaParams::new(vec![0.1], vec![0.1, 0.2]).is_err());
        let p = fixed_params(2).unwrap();
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(json, r#"{"p":2,"betas":[-0.53411,-0.28296],"gammas":[0.40784,0.73974]}"#);
        assert_eq!(serde_json::from_str::<QaoaParams>(&json).unwrap(), p);
        assert!(serde_json::from_str::<QaoaParams>(r#"{"p":1,"betas":[0.1,0.2],"gammas":[0.1,0.2]}"#).is_err());
    }

    #[test]
    fn zero_angles_give_half_offset() {
        let g = map_bpsp(&worked_example());
        let zero = QaoaParams::zeros(2).unwrap();
        for via_rcc in [false, true] {
            let e = evaluate_energy(&g, &zero, EvalMode::Exact, via_rcc).unwrap();
            assert_abs_diff_eq!(e, 3.5, epsilon = 1e-12);
        }
        let corr = edge_correlations(&g, &zero, EvalMode::Exact, false).unwrap();
        assert!(corr.values.values().all(|m| m.abs() < 1e-12));
    }

    #[test]
    fn edgeless_graph_gives_half_offset() {
        let g = IsingGraph::from_edges(3, &[], 5).unwrap();
        let e = evaluate_energy(&g, &fixed_params(1).unwrap(), EvalMode::Exact, false).unwrap();
        assert_eq!(e, 2.5);
    }

    #[test]
    fn cone_energy_matches_full_energy() {
        let g = map_bpsp(&worked_example());
        for p in 1..=3 {
            let params = fixed_params(p).unwrap();
            let full = evaluate_energy(&g, &params, EvalMode::Exact, false).unwrap();
            let cone = evaluate_energy(&g, &params, EvalMode::Exact, true).unwrap();
            assert_abs_diff_eq!(full, cone, epsilon = 1e-10);
        }
    }

    #[test]
    fn fixed_angles_lower_the_energy() {
        let g = map_bpsp(&worked_example());
        let e = evaluate_energy(&g, &fixed_params(1).unwrap(), EvalMode::Exact, false).unwrap();
        assert!(e < 3.5, "energy {e} not below the uniform value");
    }

    #[test]
    fn shot_energy_is_close_to_exact() {
        let g = map_bpsp(&worked_example());
        let params = fixed_params(1).unwrap();
        let exact = evaluate_energy(&g, &params, EvalMode::Exact, false).unwrap();
        let mode = EvalMode::Shots { shots: 4096, seed: 3 };
        let full = evaluate_energy(&g, &params, mode, false).unwrap();
        let cone = evaluate_energy(&g, &params, mode, true).unwrap();
        assert!((full - exact).abs() < 0.2);
        assert!((cone - exact).abs() < 0.2);
        assert_eq!(full, evaluate_energy(&g, &params, mode, false).unwrap());
    }

    /// Minimum of the exact energy over a 400 x 400 grid of
    /// `beta in [0, pi)`, `gamma in [0, 2 pi)`.
    fn grid_minimum(g: &IsingGraph) -> f64 {
        let n = 400;
        let mut best = f64::INFINITY;
        for a in 0..n {
            for b in 0..n {
                let beta = std::f64::consts::PI * a as f64 / n as f64;
                let gamma = std::f64::consts::TAU * b as f64 / n as f64;
                let p = QaoaParams::new(vec![beta], vec![gamma]).unwrap();
                best = best.min(evaluate_energy(g, &p, EvalMode::Exact, false).unwrap());
            }
        }
        best
    }

    #[test]
    fn optimiser_reaches_grid_minimum() {
        let g = single_edge(1);
        let grid = grid_minimum(&g);
        let run = optimize_nelder_mead(&g, &fixed_params(1).unwrap(), EvalMode::Exact, false, DEFAULT_TOL).unwrap();
        assert!(run.energy <= grid + 1e-3, "optimised {} vs grid {grid}", run.energy);
        assert!(run.evaluations <= EVALS_PER_DIM * 2);
    }

    #[test]
    fn optimiser_never_worsens_start() {
        let g = map_bpsp(&worked_example());
        let start = fixed_params(1).unwrap();
        let e0 = evaluate_energy(&g, &start, EvalMode::Exact, false).unwrap();
        let run = optimize_nelder_mead(&g, &start, EvalMode::Exact, false, DEFAULT_TOL).unwrap();
        assert!(run.energy <= e0 + 1e-9);
        let again = optimize_nelder_mead(&g, &start, EvalMode::Exact, false, DEFAULT_TOL).unwrap();
        assert_eq!(run, again);
    }

    #[test]
    fn nelder_mead_on_a_quadratic() {
        let (x, v, n) = nelder_mead(|x| Ok((x[0] - 1.0).powi(2) + 3.0 * (x[1] + 2.0).powi(2)), &[0.0, 0.0], 1e-8, 10_000).unwrap();
        assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(x[1], -2.0, epsilon = 1e-6);
        assert!(v < 1e-10);
        assert!(n < 10_000);
        let (_, _, capped) = nelder_mead(|x| Ok(x[0] * x[0]), &[5.0], 1e-300, 20).unwrap();
        assert!(capped <= 21);
    }

    #[test]
    fn perturbation() {
        let p = fixed_params(2).unwrap();
        assert_eq!(perturb(&p, 0.0, 9, 4).unwrap(), p);
        let a = perturb(&p, 0.1, 9, 4).unwrap();
        assert_ne!(a, p);
        assert_eq!(a, perturb(&p, 0.1, 9, 4).unwrap());
        assert_ne!(a, perturb(&p, 0.1, 9, 5).unwrap());
        let src = ParamSource::perturbed(ParamSource::Fixed, 0.0, 1);
        let g = single_edge(1);
        assert_eq!(src.resolve(&g, 2, EvalMode::Exact, false, 0).unwrap().params, p);
        assert!(ParamSource::perturbed(ParamSource::Fixed, -1.0, 1).check().is_err());
    }

    #[test]
    fn sampled_solution_on_worked_example() {
        let inst = worked_example();
        let g = map_bpsp(&inst);
        let (col, changes) = qaoa_solve(&g, &inst, &fixed_params(3).unwrap(), 4096, 1).unwrap();
        assert_eq!(changes, crate::bpsp::colour_changes(&inst, &col).unwrap());
        assert!(changes >= 2);
    }

    #[test]
    fn sampled_solution_without_couplings() {
        let inst = BpspInstance::new(1, vec![0, 0]).unwrap();
        let g = map_bpsp(&inst);
        let (_, changes) = qaoa_solve(&g, &inst, &fixed_params(1).unwrap(), 16, 0).unwrap();
        assert_eq!(changes, 1);
    }

    #[test]
    fn uniform_sampling_golden_value() {
        let inst = worked_example();
        let g = map_bpsp(&inst);
        let (_, changes) = qaoa_solve(&g, &inst, &QaoaParams::zeros(1).unwrap(), 4096, 7).unwrap();
        // 256 configurations, 4096 draws: the optimum is essentially always hit
        let ext = brute_force_extremes(&g).unwrap();
        assert_eq!(changes as i64, ext.ground_energy.as_int().unwrap());
    }

    #[test]
    fn variational_sandwich() {
        let g = map_bpsp(&worked_example());
        let ext = brute_force_extremes(&g).unwrap();
        for p in 1..=3 {
            let e = evaluate_energy(&g, &fixed_params(p).unwrap(), EvalMode::Exact, false).unwrap();
            assert!(ext.ground_energy.value() - 1e-12 <= e && e <= ext.highest_energy.value() + 1e-12);
        }
    }
}
