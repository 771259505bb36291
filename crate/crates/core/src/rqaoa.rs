//! Recursive QAOA: round the strongest edge correlation, eliminate one
//! endpoint, repeat, then back-substitute.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bpsp::{BpspInstance, Colouring};
use crate::circuit::extract_rcc;
use crate::error::{invalid, Result};
use crate::ising::{brute_force_ground, map_bpsp, spins_to_colouring, IsingGraph, SpinConfig};
use crate::qaoa::{edge_correlations, Correlations, EvalMode, ParamSource, QaoaParams};
use crate::rng;

/// `<Z_i Z_j>` on every edge, with the number of circuits used.
pub fn correlations_all_edges(
    graph: &IsingGraph,
    params: &QaoaParams,
    mode: EvalMode,
    via_rcc: bool,
) -> Result<Correlations> {
    if graph.n_edges() == 0 {
        return Err(invalid("graph has no edges to correlate"));
    }
    edge_correlations(graph, params, mode, via_rcc)
}

/// A node removed because it lost all its couplings, with the spin that
/// minimises its local field (`+1` on a zero field).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FreedNode {
    pub node: usize,
    pub spin: i64,
}

/// One elimination `Z_eliminated = sign * Z_retained`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionStep {
    pub chosen_edge: (usize, usize),
    pub correlation: f64,
    pub sign: i64,
    pub eliminated: usize,
    pub retained: usize,
    pub pre_nodes: usize,
    pub pre_edges: usize,
    pub additionally_freed: Vec<FreedNode>,
    /// Objective evaluations spent choosing this step's angles (1 when fixed).
    pub evaluations: usize,
    /// Total trimmed cone circuits over all edges, `sum_e 2^k_e`.
    pub trimmed_circuits: u64,
}

/// Reduced graph, the step in pre-reduction indices, and the
/// pre-reduction index of every surviving node.
#[derive(Debug, Clone, PartialEq)]
pub struct Reduction {
    pub graph: IsingGraph,
    pub step: ReductionStep,
    pub kept: Vec<usize>,
}

fn sign_of(m: f64) -> i64 {
    if m >= 0.0 {
        1
    } else {
        -1
    }
}

/// Rounds the edge with the largest `|M|` (ties to the smallest `(i, j)`),
/// substitutes `Z_j = sign * Z_i` for the higher endpoint `j`, and drops
/// nodes left without couplings. If that would leave no node at all, the
/// retained node stays.
pub fn reduce_once(graph: &IsingGraph, correlations: &BTreeMap<(usize, usize), f64>) -> Result<Reduction> {
    if correlations.is_empty() {
        return Err(invalid("no correlations to round"));
    }
    for edge in graph.edges().keys() {
        if !correlations.contains_key(edge) {
            return Err(invalid(format!("missing correlation for edge {edge:?}")));
        }
    }
    let mut best: Option<((usize, usize), f64)> = None;
    for (&edge, &m) in correlations {
        if !graph.contains_edge(edge.0, edge.1) {
            return Err(invalid(format!("correlation given for non-edge {edge:?}")));
        }
        if best.is_none_or(|(_, b)| m.abs() > b.abs()) {
            best = Some((edge, m));
        }
    }
    let ((a, b), m) = best.expect("nonempty");
    let (i, j) = (a.min(b), a.max(b));
    let sign = sign_of(m);

    let n = graph.n_nodes();
    let mut merged = IsingGraph::new(n);
    merged.set_offset_numerator(graph.offset_numerator());
    for (&(u, v), &w) in graph.edges() {
        match (u == j, v == j) {
            (false, false) => merged.add_coupling(u, v, w)?,
            _ => {
                let other = if u == j { v } else { u };
                if other == i {
                    merged.add_offset(sign * w);
                } else {
                    merged.add_coupling(i, other, sign * w)?;
                }
            }
        }
    }
    for (q, &h) in graph.fields().iter().enumerate() {
        if q == j {
            merged.add_field(i, sign * h);
        } else {
            merged.add_field(q, h);
        }
    }

    let degrees = merged.degrees();
    let isolated: Vec<usize> = (0..n).filter(|&q| q != j && degrees[q] == 0).collect();
    let survivors = n - 1 - isolated.len();
    let mut freed = Vec::new();
    for &q in &isolated {
        if survivors == 0 && q == i {
            continue;
        }
        let h = merged.fields()[q];
        let spin = if h > 0 { -1 } else { 1 };
        merged.add_offset(h * spin);
        freed.push(FreedNode { node: q, spin });
    }
    let kept: Vec<usize> = (0..n).filter(|&q| q != j && !freed.iter().any(|f| f.node == q)).collect();
    let index: BTreeMap<usize, usize> = kept.iter().enumerate().map(|(new, &old)| (old, new)).collect();
    let mut reduced = IsingGraph::new(kept.len());
    reduced.set_offset_numerator(merged.offset_numerator());
    for (&(u, v), &w) in merged.edges() {
        reduced.add_coupling(index[&u], index[&v], w)?;
    }
    for (new, &old) in kept.iter().enumerate() {
        reduced.set_field(new, merged.fields()[old])?;
    }

    let step = ReductionStep {
        chosen_edge: (i, j),
        correlation: m,
        sign,
        eliminated: j,
        retained: i,
        pre_nodes: n,
        pre_edges: graph.n_edges(),
        additionally_freed: freed,
        evaluations: 0,
        trimmed_circuits: 0,
    };
    Ok(Reduction { graph: reduced, step, kept })
}

/// Spin of `node` as set by the final remnant solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TerminalSpin {
    pub node: usize,
    pub spin: i64,
}

/// All steps of one run in original node labels.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ReductionTrace {
    pub n_nodes: usize,
    pub steps: Vec<ReductionStep>,
    pub terminal: Vec<TerminalSpin>,
}

impl ReductionTrace {
    /// Replays the relations backwards to a full assignment.
    pub fn spins(&self) -> Result<SpinConfig> {
        let mut spins: Vec<Option<i64>> = vec![None; self.n_nodes];
        for t in &self.terminal {
            spins[t.node] = Some(t.spin);
        }
        for step in self.steps.iter().rev() {
            for f in &step.additionally_freed {
                spins[f.node] = Some(f.spin);
            }
            let r = spins[step.retained]
                .ok_or_else(|| invalid(format!("retained node {} unassigned", step.retained)))?;
            spins[step.eliminated] = Some(step.sign * r);
        }
        let values: Vec<i64> = spins
            .into_iter()
            .enumerate()
            .map(|(q, s)| s.ok_or_else(|| invalid(format!("node {q} never assigned"))))
            .collect::<Result<_>>()?;
        SpinConfig::from_values(&values)
    }

    /// One JSON object per step.
    pub fn to_json_lines(&self) -> String {
        self.steps
            .iter()
            .map(|s| serde_json::to_string(s).expect("serialisable") + "\n")
            .collect()
    }
}

/// Options of a recursive run.
#[derive(Debug, Clone, PartialEq)]
pub struct RqaoaConfig {
    pub p: usize,
    pub params: ParamSource,
    pub mode: EvalMode,
    pub via_rcc: bool,
    /// Reduce until at most this many nodes remain; larger remnants with
    /// couplings are solved exhaustively.
    pub stop_size: usize,
}

impl RqaoaConfig {
    pub fn fixed(p: usize) -> Self {
        Self { p, params: ParamSource::Fixed, mode: EvalMode::Exact, via_rcc: false, stop_size: 1 }
    }
}

fn trimmed_total(graph: &IsingGraph, p: usize) -> Result<u64> {
    let mut total = 0u64;
    for (i, j) in graph.edge_list() {
        let k = extract_rcc(graph, (i, j), p)?.k() as u32;
        total = total.saturating_add(1u64.checked_shl(k).unwrap_or(u64::MAX));
    }
    Ok(total)
}

/// Runs the reduction loop on an arbitrary graph.
pub fn rqaoa_solve_graph(graph: &IsingGraph, config: &RqaoaConfig) -> Result<(SpinConfig, ReductionTrace)> {
    config.params.check()?;
    if graph.n_nodes() == 0 {
        return Err(invalid("graph has no nodes"));
    }
    let stop = config.stop_size.max(1);
    let mut current = graph.clone();
    let mut labels: Vec<usize> = (0..graph.n_nodes()).collect();
    let mut trace = ReductionTrace { n_nodes: graph.n_nodes(), ..Default::default() };

    while current.n_nodes() > stop && current.n_edges() > 0 {
        let draw = trace.steps.len() as u64;
        let mode = match config.mode {
            EvalMode::Shots { shots, seed } => EvalMode::Shots { shots, seed: rng::mix(seed, draw) },
            EvalMode::Exact => EvalMode::Exact,
        };
        let resolved = config.params.resolve(&current, config.p, mode, config.via_rcc, draw)?;
        let corr = correlations_all_edges(&current, &resolved.params, mode, config.via_rcc)?;
        let mut r = reduce_once(&current, &corr.values)?;
        r.step.evaluations = resolved.evaluations;
        r.step.trimmed_circuits = trimmed_total(&current, config.p)?;
        let step = &mut r.step;
        step.chosen_edge = (labels[step.chosen_edge.0], labels[step.chosen_edge.1]);
        step.eliminated = labels[step.eliminated];
        step.retained = labels[step.retained];
        for f in &mut step.additionally_freed {
            f.node = labels[f.node];
        }
        trace.steps.push(r.step);
        labels = r.kept.iter().map(|&k| labels[k]).collect();
        current = r.graph;
    }

    let remnant: Vec<i64> = if current.n_edges() == 0 {
        current.fields().iter().map(|&h| if h > 0 { -1 } else { 1 }).collect()
    } else {
        brute_force_ground(&current)?.0.values()
    };
    trace.terminal = labels
        .iter()
        .zip(remnant)
        .map(|(&node, spin)| TerminalSpin { node, spin })
        .collect();
    let spins = trace.spins()?;
    Ok((spins, trace))
}

/// Recursive QAOA on a paint shop instance.
pub fn rqaoa_solve(instance: &BpspInstance, config: &RqaoaConfig) -> Result<(Colouring, ReductionTrace)> {
    let graph = map_bpsp(instance);
    let (spins, trace) = rqaoa_solve_graph(&graph, config)?;
    Ok((spins_to_colouring(instance, &spins)?, trace))
}

/// How circuits are counted for a finished trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CircuitAccounting {
    /// One full circuit per objective evaluation.
    Full,
    /// One cone circuit per edge per evaluation.
    RccUntrimmed,
    /// `2^k` trimmed circuits per edge per evaluation.
    RccTrimmed,
}

pub fn circuit_count(trace: &ReductionTrace, accounting: CircuitAccounting) -> u64 {
    trace
        .steps
        .iter()
        .map(|s| {
            let evals = s.evaluations as u64;
            match accounting {
                CircuitAccounting::Full => evals,
                CircuitAccounting::RccUntrimmed => s.pre_edges as u64 * evals,
                CircuitAccounting::RccTrimmed => s.trimmed_circuits.saturating_mul(evals),
            }
        })
        .sum()
}
