use std::time::Instant;

use paintshop::circuit::{build_qaoa_circuit, build_rcc_circuit, metrics, Circuit, CircuitMetrics, TrimmedRcc};
use paintshop::ising::{brute_force_extremes, Extremes};
use paintshop::mps::{simulate_mps, MpsStats};
use paintshop::qaoa::{evaluate_energy, optimize_nelder_mead, perturb, qaoa_solve, EvalMode, QaoaParams, DEFAULT_TOL};
use paintshop::rqaoa::{circuit_count, rqaoa_solve, CircuitAccounting, ReductionTrace, RqaoaConfig};
use paintshop::{colour_changes, exec, fixed_params, map_bpsp, rng, BpspInstance, IsingGraph, ParamSource, Result};
use serde::Serialize;

use crate::config::{ExperimentConfig, Method, Mode};
use crate::measure::measure_or_one;

/// One solved instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub instance: usize,
    pub n_bodies: usize,
    pub method: String,
    pub p: Option<usize>,
    pub sigma: Option<f64>,
    /// Colour changes, or `<H>` for QAOA rows in exact mode.
    pub value: f64,
    pub measure: f64,
    /// Measure of a uniformly random colouring (expected energy `C/2`).
    pub random_measure: f64,
    pub worst: f64,
    pub best: f64,
    pub circuits: Option<u64>,
    pub evaluations: Option<u64>,
    pub wall_ms: Option<f64>,
    pub error: Option<String>,
}

/// Circuit resources of one circuit family at one truncation cutoff.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResourceRow {
    pub instance: usize,
    pub n_bodies: usize,
    pub p: usize,
    /// `full`, `rcc-max` (worst edge cone) or `trimmed-rcc-max`.
    pub kind: String,
    pub cnot_count: usize,
    pub cnot_depth: usize,
    pub qubit_count: usize,
    pub cutoff: f64,
    pub max_entropy_bits: f64,
    pub max_bond_dim: usize,
    pub excluded_probability: f64,
}

/// Total circuits a method spends on one instance under one accounting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountRow {
    pub instance: usize,
    pub n_bodies: usize,
    pub method: String,
    pub p: usize,
    pub accounting: String,
    pub circuits: u64,
    pub steps: usize,
    pub evaluations: u64,
    /// Edges of the graph before each step, `;`-separated (RQAOA only).
    pub edges_per_step: String,
}

/// Trimmed cones with more circuits than this are summarised over their
/// first `TRIMMED_SAMPLE` sign patterns.
pub const TRIMMED_SAMPLE: usize = 1024;

struct Job {
    n_bodies: usize,
    index: usize,
    instance: BpspInstance,
}

fn jobs(config: &ExperimentConfig) -> Result<Vec<Job>> {
    let mut out = Vec::new();
    for n in config.bodies.clone() {
        for index in 0..config.instances {
            out.push(Job { n_bodies: n, index, instance: BpspInstance::random(n, config.instance_seed(index))? });
        }
    }
    Ok(out)
}

fn eval_mode(config: &ExperimentConfig, job_seed: u64, salt: u64) -> EvalMode {
    match config.mode {
        Mode::Exact => EvalMode::Exact,
        Mode::Shots(shots) => EvalMode::Shots { shots, seed: rng::mix(job_seed, salt) },
    }
}

fn accounting(via_rcc: bool) -> CircuitAccounting {
    if via_rcc {
        CircuitAccounting::RccTrimmed
    } else {
        CircuitAccounting::Full
    }
}

struct Outcome {
    value: f64,
    circuits: Option<u64>,
    evaluations: Option<u64>,
}

struct RowContext<'a> {
    job: &'a Job,
    extremes: &'a Option<Extremes>,
    random_energy: f64,
    timings: bool,
}

impl RowContext<'_> {
    fn row(&self, method: &str, p: Option<usize>, sigma: Option<f64>, run: impl FnOnce() -> Result<Outcome>) -> ResultRow {
        let start = Instant::now();
        let outcome = run();
        let wall_ms = self.timings.then(|| start.elapsed().as_secs_f64() * 1e3);
        let (worst, best) = match self.extremes {
            Some(e) => (e.highest_energy.value(), e.ground_energy.value()),
            None => (f64::NAN, f64::NAN),
        };
        let mut row = ResultRow {
            instance: self.job.index,
            n_bodies: self.job.n_bodies,
            method: method.to_string(),
            p,
            sigma,
            value: f64::NAN,
            measure: f64::NAN,
            random_measure: measure_or_one(worst, best, self.random_energy),
            worst,
            best,
            circuits: None,
            evaluations: None,
            wall_ms,
            error: None,
        };
        match outcome {
            Ok(o) => {
                row.value = o.value;
                row.measure = measure_or_one(worst, best, o.value);
                row.circuits = o.circuits;
                row.evaluations = o.evaluations;
            }
            Err(e) => row.error = Some(e.to_string()),
        }
        row
    }
}

/// Value of a QAOA state: `<H>` in exact mode, best sampled configuration in
/// shots mode.
fn qaoa_value(
    graph: &IsingGraph,
    instance: &BpspInstance,
    params: &QaoaParams,
    mode: EvalMode,
    via_rcc: bool,
) -> Result<f64> {
    match mode {
        EvalMode::Exact => evaluate_energy(graph, params, mode, via_rcc),
        EvalMode::Shots { shots, seed } => Ok(qaoa_solve(graph, instance, params, shots, seed)?.1 as f64),
    }
}

fn rqaoa_outcome(instance: &BpspInstance, config: &RqaoaConfig) -> Result<Outcome> {
    let (colouring, trace) = rqaoa_solve(instance, config)?;
    Ok(Outcome {
        value: colour_changes(instance, &colouring)? as f64,
        circuits: Some(circuit_count(&trace, accounting(config.via_rcc))),
        evaluations: Some(total_evaluations(&trace)),
    })
}

fn total_evaluations(trace: &ReductionTrace) -> u64 {
    trace.steps.iter().map(|s| s.evaluations as u64).sum()
}

fn context_parts(job: &Job) -> (IsingGraph, Option<Extremes>, f64) {
    let graph = map_bpsp(&job.instance);
    let extremes = brute_force_extremes(&graph).ok();
    let random_energy = graph.offset_numerator() as f64 / 2.0;
    (graph, extremes, random_energy)
}

fn comparison_rows(config: &ExperimentConfig, job: &Job) -> Vec<ResultRow> {
    let (graph, extremes, random_energy) = context_parts(job);
    let ctx = RowContext { job, extremes: &extremes, random_energy, timings: config.timings };
    let seed = config.instance_seed(job.index);
    let inst = &job.instance;
    let mut rows = Vec::new();
    for &method in &config.methods {
        let name = method.name();
        match method {
            Method::Greedy => rows.push(ctx.row(name, None, None, || {
                let c = paintshop::greedy_solve(inst);
                Ok(Outcome { value: colour_changes(inst, &c)? as f64, circuits: None, evaluations: None })
            })),
            Method::RecursiveGreedy => rows.push(ctx.row(name, None, None, || {
                let c = paintshop::recursive_greedy_solve(inst);
                Ok(Outcome { value: colour_changes(inst, &c)? as f64, circuits: None, evaluations: None })
            })),
            Method::BruteForce => rows.push(ctx.row(name, None, None, || {
                let e = extremes.as_ref().map(|e| e.ground_energy.value());
                let value = match e {
                    Some(v) => v,
                    None => brute_force_extremes(&graph)?.ground_energy.value(),
                };
                Ok(Outcome { value, circuits: None, evaluations: None })
            })),
            _ => {
                for &p in &config.ps {
                    let mode = eval_mode(config, seed, (method as u64) << 8 | p as u64);
                    let rq = |params: ParamSource| RqaoaConfig {
                        p,
                        params,
                        mode,
                        via_rcc: config.via_rcc,
                        stop_size: 1,
                    };
                    match method {
                        Method::QaoaFixed => rows.push(ctx.row(name, Some(p), None, || {
                            let params = fixed_params(p)?;
                            let value = qaoa_value(&graph, inst, &params, mode, config.via_rcc)?;
                            Ok(Outcome { value, circuits: Some(1), evaluations: Some(1) })
                        })),
                        Method::QaoaOptimised => rows.push(ctx.row(name, Some(p), None, || {
                            let run = optimize_nelder_mead(&graph, &fixed_params(p)?, mode, config.via_rcc, DEFAULT_TOL)?;
                            let value = qaoa_value(&graph, inst, &run.params, mode, config.via_rcc)?;
                            let evals = run.evaluations as u64;
                            Ok(Outcome { value, circuits: Some(evals), evaluations: Some(evals) })
                        })),
                        Method::RqaoaFixed => {
                            rows.push(ctx.row(name, Some(p), None, || rqaoa_outcome(inst, &rq(ParamSource::Fixed))))
                        }
                        Method::RqaoaOptimised => rows
                            .push(ctx.row(name, Some(p), None, || rqaoa_outcome(inst, &rq(ParamSource::optimised())))),
                        Method::RqaoaPerturbed => {
                            for &sigma in &config.sigmas {
                                let source = ParamSource::perturbed(ParamSource::Fixed, sigma, seed);
                                rows.push(ctx.row(name, Some(p), Some(sigma), || rqaoa_outcome(inst, &rq(source))));
                            }
                        }
                        _ => unreachable!("classical methods handled above"),
                    }
                }
            }
        }
    }
    rows
}

/// Every configured method on every instance, in (size, instance, method,
/// depth, sigma) order.
pub fn run_method_comparison(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    config.check()?;
    let jobs = jobs(config)?;
    Ok(exec::map(&jobs, |job| comparison_rows(config, job)).into_iter().flatten().collect())
}

/// Configured methods on a single given instance (depths from `config.ps`).
pub fn run_on_instance(config: &ExperimentConfig, instance: &BpspInstance, index: usize) -> Result<Vec<ResultRow>> {
    config.check()?;
    let job = Job { n_bodies: instance.n_bodies(), index, instance: instance.clone() };
    Ok(comparison_rows(config, &job))
}

fn sweep_rows(config: &ExperimentConfig, job: &Job) -> Vec<ResultRow> {
    let (graph, extremes, random_energy) = context_parts(job);
    let ctx = RowContext { job, extremes: &extremes, random_energy, timings: config.timings };
    let seed = config.instance_seed(job.index);
    let inst = &job.instance;
    let mut rows = Vec::new();
    for &p in &config.ps {
        let mode = eval_mode(config, seed, p as u64);
        // QAOA angles are optimised once per instance, then perturbed.
        let optimised = fixed_params(p)
            .and_then(|start| optimize_nelder_mead(&graph, &start, mode, config.via_rcc, DEFAULT_TOL));
        for &sigma in &config.sigmas {
            rows.push(ctx.row("qaoa-optimised", Some(p), Some(sigma), || {
                let run = optimised.clone()?;
                let params = perturb(&run.params, sigma, seed, 0)?;
                let value = qaoa_value(&graph, inst, &params, mode, config.via_rcc)?;
                let evals = run.evaluations as u64;
                Ok(Outcome { value, circuits: Some(evals), evaluations: Some(evals) })
            }));
            rows.push(ctx.row("rqaoa-optimised", Some(p), Some(sigma), || {
                let rq = RqaoaConfig {
                    p,
                    params: ParamSource::perturbed(ParamSource::optimised(), sigma, seed),
                    mode,
                    via_rcc: config.via_rcc,
                    stop_size: 1,
                };
                rqaoa_outcome(inst, &rq)
            }));
        }
    }
    rows
}

/// Optimised QAOA and RQAOA under Gaussian angle noise of each sigma.
/// QAOA perturbs its per-instance optimum once; RQAOA re-optimises and
/// draws fresh noise at every reduction step.
pub fn run_sigma_sweep(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    config.check()?;
    if config.sigmas.is_empty() {
        return Err(paintshop::Error::InvalidArgument("the sweep needs at least one sigma".into()));
    }
    let jobs = jobs(config)?;
    Ok(exec::map(&jobs, |job| sweep_rows(config, job)).into_iter().flatten().collect())
}

fn max_metrics(a: CircuitMetrics, b: CircuitMetrics) -> CircuitMetrics {
    CircuitMetrics {
        cnot_count: a.cnot_count.max(b.cnot_count),
        cnot_depth: a.cnot_depth.max(b.cnot_depth),
        qubit_count: a.qubit_count.max(b.qubit_count),
    }
}

fn max_stats(a: MpsStats, b: MpsStats) -> MpsStats {
    MpsStats {
        max_entropy_bits: a.max_entropy_bits.max(b.max_entropy_bits),
        max_bond_dim: a.max_bond_dim.max(b.max_bond_dim),
        excluded_probability: a.excluded_probability.max(b.excluded_probability),
    }
}

/// Metrics and per-cutoff MPS statistics, each the maximum over `circuits`.
fn family(circuits: &[Circuit], cutoffs: &[f64]) -> Result<(CircuitMetrics, Vec<MpsStats>)> {
    let mut m = CircuitMetrics::default();
    let mut stats = vec![MpsStats::default(); cutoffs.len()];
    for c in circuits {
        m = max_metrics(m, metrics(c));
        for (s, &cutoff) in stats.iter_mut().zip(cutoffs) {
            *s = max_stats(*s, simulate_mps(c, cutoff)?.1);
        }
    }
    Ok((m, stats))
}

fn resource_rows(config: &ExperimentConfig, job: &Job) -> Result<Vec<ResourceRow>> {
    let graph = map_bpsp(&job.instance);
    let mut rows = Vec::new();
    for &p in &config.ps {
        let params = fixed_params(p)?;
        let full = vec![build_qaoa_circuit(&graph, &params)?];
        let mut cones = Vec::new();
        let mut trimmed = Vec::new();
        for edge in graph.edge_list() {
            cones.push(build_rcc_circuit(&graph, edge, &params)?.circuit);
            let t = TrimmedRcc::new(&graph, edge, &params)?;
            trimmed.extend((0..t.n_circuits().min(TRIMMED_SAMPLE) as u64).map(|bits| t.circuit(bits)));
        }
        for (kind, circuits) in [("full", &full), ("rcc-max", &cones), ("trimmed-rcc-max", &trimmed)] {
            let (m, stats) = family(circuits, &config.cutoffs)?;
            for (s, &cutoff) in stats.iter().zip(&config.cutoffs) {
                rows.push(ResourceRow {
                    instance: job.index,
                    n_bodies: job.n_bodies,
                    p,
                    kind: kind.to_string(),
                    cnot_count: m.cnot_count,
                    cnot_depth: m.cnot_depth,
                    qubit_count: m.qubit_count,
                    cutoff,
                    max_entropy_bits: s.max_entropy_bits,
                    max_bond_dim: s.max_bond_dim,
                    excluded_probability: s.excluded_probability,
                });
            }
        }
    }
    Ok(rows)
}

/// Circuit metrics and MPS statistics of the full circuit, the worst edge
/// cone and the worst trimmed cone, at the tabulated angles.
pub fn run_resource_report(config: &ExperimentConfig) -> Result<Vec<ResourceRow>> {
    config.check()?;
    if config.cutoffs.is_empty() {
        return Err(paintshop::Error::InvalidArgument("no truncation cutoffs given".into()));
    }
    let jobs = jobs(config)?;
    let per_job = exec::map(&jobs, |job| resource_rows(config, job));
    let mut rows = Vec::new();
    for r in per_job {
        rows.extend(r?);
    }
    Ok(rows)
}

const ACCOUNTINGS: [(CircuitAccounting, &str); 3] = [
    (CircuitAccounting::Full, "full"),
    (CircuitAccounting::RccUntrimmed, "rcc-untrimmed"),
    (CircuitAccounting::RccTrimmed, "rcc-trimmed"),
];

fn trimmed_total(graph: &IsingGraph, p: usize) -> Result<u64> {
    let mut total = 0u64;
    for edge in graph.edge_list() {
        let k = paintshop::circuit::extract_rcc(graph, edge, p)?.k() as u32;
        total = total.saturating_add(1u64.checked_shl(k).unwrap_or(u64::MAX));
    }
    Ok(total)
}

fn count_rows(config: &ExperimentConfig, job: &Job) -> Result<Vec<CountRow>> {
    let graph = map_bpsp(&job.instance);
    let seed = config.instance_seed(job.index);
    let mut rows = Vec::new();
    let mut push = |method: Method, p: usize, steps: usize, evaluations: u64, per_acc: [u64; 3], edges: String| {
        for ((_, acc), circuits) in ACCOUNTINGS.iter().zip(per_acc) {
            rows.push(CountRow {
                instance: job.index,
                n_bodies: job.n_bodies,
                method: method.name().to_string(),
                p,
                accounting: acc.to_string(),
                circuits,
                steps,
                evaluations,
                edges_per_step: edges.clone(),
            });
        }
    };
    for &method in config.methods.iter().filter(|m| m.uses_depth()) {
        for &p in &config.ps {
            let mode = eval_mode(config, seed, (method as u64) << 8 | p as u64);
            let edges = graph.n_edges() as u64;
            match method {
                Method::QaoaFixed | Method::QaoaOptimised => {
                    let evals = if method == Method::QaoaFixed {
                        fixed_params(p)?;
                        1
                    } else {
                        optimize_nelder_mead(&graph, &fixed_params(p)?, mode, config.via_rcc, DEFAULT_TOL)?.evaluations
                            as u64
                    };
                    let trimmed = trimmed_total(&graph, p)?;
                    push(method, p, 0, evals, [evals, edges * evals, trimmed.saturating_mul(evals)], String::new());
                }
                _ => {
                    let params = match method {
                        Method::RqaoaFixed => ParamSource::Fixed,
                        Method::RqaoaOptimised => ParamSource::optimised(),
                        _ => ParamSource::perturbed(ParamSource::Fixed, config.sigmas.first().copied().unwrap_or(0.0), seed),
                    };
                    let rq = RqaoaConfig { p, params, mode, via_rcc: config.via_rcc, stop_size: 1 };
                    let (_, trace) = rqaoa_solve(&job.instance, &rq)?;
                    let per_acc = ACCOUNTINGS.map(|(a, _)| circuit_count(&trace, a));
                    let edges_per_step =
                        trace.steps.iter().map(|s| s.pre_edges.to_string()).collect::<Vec<_>>().join(";");
                    push(method, p, trace.steps.len(), total_evaluations(&trace), per_acc, edges_per_step);
                }
            }
        }
    }
    Ok(rows)
}

/// Circuits spent by each quantum method under full, untrimmed-cone and
/// trimmed-cone accounting.
pub fn run_circuit_count_report(config: &ExperimentConfig) -> Result<Vec<CountRow>> {
    config.check()?;
    let jobs = jobs(config)?;
    let per_job = exec::map(&jobs, |job| count_rows(config, job));
    let mut rows = Vec::new();
    for r in per_job {
        rows.extend(r?);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(methods: Vec<Method>) -> ExperimentConfig {
        ExperimentConfig { bodies: 4..=5, instances: 3, methods, ..Default::default() }
    }

    #[test]
    fn brute_force_rows_measure_one() {
        let rows = run_method_comparison(&small(vec![Method::BruteForce, Method::Greedy])).unwrap();
        assert_eq!(rows.len(), 2 * 2 * 3);
        for r in &rows {
            assert!(r.error.is_none());
            if r.method == "brute-force" {
                assert_eq!(r.measure, 1.0);
            }
            assert!((0.0..=1.0).contains(&r.measure));
            assert_eq!(r.measure, measure_or_one(r.worst, r.best, r.value));
        }
    }

    #[test]
    fn rows_follow_job_order() {
        let rows = run_method_comparison(&small(vec![Method::Greedy, Method::RqaoaFixed])).unwrap();
        let keys: Vec<(usize, usize, String)> = rows.iter().map(|r| (r.n_bodies, r.instance, r.method.clone())).collect();
        let mut sorted = keys.clone();
        sorted.sort_by_key(|a| (a.0, a.1));
        assert_eq!(keys, sorted);
        assert_eq!(rows[0].method, "greedy");
        assert_eq!(rows[1].method, "rqaoa-fixed");
    }

    #[test]
    fn qaoa_rows_report_circuits() {
        let rows = run_method_comparison(&small(vec![Method::QaoaFixed, Method::QaoaOptimised])).unwrap();
        for r in &rows {
            assert!(r.error.is_none(), "{:?}", r.error);
            if r.method == "qaoa-fixed" {
                assert_eq!(r.circuits, Some(1));
            } else {
                assert!(r.evaluations.unwrap() > 1);
                assert_eq!(r.circuits, r.evaluations);
            }
            assert!(r.value >= r.best - 1e-9 && r.value <= r.worst + 1e-9);
        }
    }

    #[test]
    fn zero_sigma_matches_unperturbed() {
        let cfg = ExperimentConfig { sigmas: vec![0.0], ..small(vec![Method::RqaoaPerturbed, Method::RqaoaFixed]) };
        let rows = run_method_comparison(&cfg).unwrap();
        for pair in rows.chunks(2) {
            assert_eq!(pair[0].value, pair[1].value);
        }
        let sweep = run_sigma_sweep(&ExperimentConfig { bodies: 4..=4, instances: 2, sigmas: vec![0.0], ..Default::default() })
            .unwrap();
        assert_eq!(sweep.len(), 4);
        let direct = run_method_comparison(&ExperimentConfig {
            bodies: 4..=4,
            instances: 2,
            methods: vec![Method::QaoaOptimised, Method::RqaoaOptimised],
            ..Default::default()
        })
        .unwrap();
        for (a, b) in sweep.iter().zip(&direct) {
            assert_eq!(a.method, b.method);
            assert_eq!(a.value, b.value);
        }
    }

    #[test]
    fn shots_mode_is_seeded() {
        let cfg = ExperimentConfig {
            mode: Mode::Shots(256),
            ..small(vec![Method::QaoaFixed, Method::RqaoaFixed])
        };
        let a = run_method_comparison(&cfg).unwrap();
        let b = run_method_comparison(&cfg).unwrap();
        assert_eq!(a, b);
        for r in &a {
            assert!(r.error.is_none());
            assert_eq!(r.value.fract(), 0.0);
        }
    }

    #[test]
    fn resource_rows_cover_kinds_and_cutoffs() {
        let cfg = ExperimentConfig { bodies: 6..=6, instances: 1, ps: vec![1, 2], ..Default::default() };
        let rows = run_resource_report(&cfg).unwrap();
        assert_eq!(rows.len(), 2 * 3 * 4);
        for r in &rows {
            if r.cutoff == 0.0 {
                assert_eq!(r.excluded_probability, 0.0);
            }
            if r.kind == "full" {
                assert_eq!(r.qubit_count, 6);
            }
        }
        let full_cnots = |p: usize| rows.iter().find(|r| r.kind == "full" && r.p == p).unwrap().cnot_count;
        assert_eq!(full_cnots(2), 2 * full_cnots(1));
    }

    #[test]
    fn count_rows_for_fixed_qaoa() {
        let cfg = small(vec![Method::QaoaFixed, Method::RqaoaFixed]);
        let rows = run_circuit_count_report(&cfg).unwrap();
        for r in rows.iter().filter(|r| r.method == "qaoa-fixed" && r.accounting == "full") {
            assert_eq!(r.circuits, 1);
        }
        for r in rows.iter().filter(|r| r.method == "rqaoa-fixed" && r.accounting == "full") {
            assert_eq!(r.circuits as usize, r.steps);
            assert!(r.steps < r.n_bodies);
        }
    }

    #[test]
    fn invalid_config_is_rejected() {
        assert!(run_method_comparison(&ExperimentConfig { instances: 0, ..Default::default() }).is_err());
        assert!(run_sigma_sweep(&ExperimentConfig { sigmas: vec![], ..Default::default() }).is_err());
    }
}
