//! QAOA circuits as gate lists, reverse causal cones and logical metrics.
//!
//! Gate conventions: `RZ(a) = exp(-i a Z / 2)`, `RX(a) = exp(-i a X / 2)`.
//! The phase operator is `exp(-i gamma_l H)` for the energy operator
//! `H = (sum J Z_i Z_j + sum h Z_i + C) / 2`, so a coupling `J` becomes
//! `CNOT(i->j) RZ_j(gamma_l J) CNOT(i->j)` and a field `h` becomes
//! `RZ(gamma_l h)`; the mixer is `RX(2 beta_l)` on
//! every qubit. The initial `|+>` product state is implicit and not part of
//! the gate list.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::ising::IsingGraph;
use crate::qaoa::QaoaParams;

/// Largest number of trimmed qubits for which the `2^k` circuit family is
/// built.
pub const MAX_TRIMMED_QUBITS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    Phase,
    Mixer,
}

/// QAOA layer (1-based) and operator a gate belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LayerTag {
    #[serde(rename = "index")]
    pub layer: usize,
    pub part: Part,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Op {
    Rx { qubit: usize, angle: f64 },
    Rz { qubit: usize, angle: f64 },
    Cnot { control: usize, target: usize },
}

impl Op {
    pub fn is_two_qubit(&self) -> bool {
        matches!(self, Op::Cnot { .. })
    }

    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Op::Rx { qubit, .. } | Op::Rz { qubit, .. } => vec![qubit],
            Op::Cnot { control, target } => vec![control, target],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gate {
    pub op: Op,
    pub tag: LayerTag,
}

/// A circuit acting on `|+>^n`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Self { n_qubits, gates: Vec::new() }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, op: Op, tag: LayerTag) -> Result<()> {
        match op {
            Op::Rx { qubit, .. } | Op::Rz { qubit, .. } if qubit >= self.n_qubits => {
                return Err(invalid(format!("qubit {qubit} out of range for {} qubits", self.n_qubits)));
            }
            Op::Cnot { control, target } => {
                if control == target {
                    return Err(invalid("CNOT control and target must differ"));
                }
                if control >= self.n_qubits || target >= self.n_qubits {
                    return Err(invalid(format!(
                        "CNOT({control}, {target}) out of range for {} qubits",
                        self.n_qubits
                    )));
                }
            }
            _ => {}
        }
        self.gates.push(Gate { op, tag });
        Ok(())
    }

    /// Debug dump: `[{"kind","qubits","angle","layer"}]`.
    pub fn to_records(&self) -> Vec<GateRecord> {
        self.gates.iter().map(GateRecord::from).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_records()).expect("gate records serialise")
    }

    pub fn from_records(n_qubits: usize, records: &[GateRecord]) -> Result<Self> {
        let mut c = Circuit::new(n_qubits);
        for r in records {
            let op = match (r.kind.as_str(), r.qubits.as_slice(), r.angle) {
                ("RX", [q], Some(a)) => Op::Rx { qubit: *q, angle: a },
                ("RZ", [q], Some(a)) => Op::Rz { qubit: *q, angle: a },
                ("CNOT", [c, t], None) => Op::Cnot { control: *c, target: *t },
                _ => return Err(invalid(format!("malformed gate record {r:?}"))),
            };
            c.push(op, r.layer)?;
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateRecord {
    pub kind: String,
    pub qubits: Vec<usize>,
    pub angle: Option<f64>,
    pub layer: LayerTag,
}

impl From<&Gate> for GateRecord {
    fn from(g: &Gate) -> Self {
        let (kind, angle) = match g.op {
            Op::Rx { angle, .. } => ("RX", Some(angle)),
            Op::Rz { angle, .. } => ("RZ", Some(angle)),
            Op::Cnot { .. } => ("CNOT", None),
        };
        GateRecord {
            kind: kind.to_string(),
            qubits: g.op.qubits(),
            angle,
            layer: g.tag,
        }
    }
}

fn phase(layer: usize) -> LayerTag {
    LayerTag { layer, part: Part::Phase }
}

fn mixer(layer: usize) -> LayerTag {
    LayerTag { layer, part: Part::Mixer }
}

/// Emits the `CNOT RZ CNOT` block for one coupling.
fn push_zz(c: &mut Circuit, a: usize, b: usize, angle: f64, layer: usize) {
    let tag = phase(layer);
    c.gates.push(Gate { op: Op::Cnot { control: a, target: b }, tag });
    c.gates.push(Gate { op: Op::Rz { qubit: b, angle }, tag });
    c.gates.push(Gate { op: Op::Cnot { control: a, target: b }, tag });
}

/// Full QAOA circuit: per layer, couplings in ascending `(i, j)` order, then
/// fields, then the mixer on every qubit.
pub fn build_qaoa_circuit(graph: &IsingGraph, params: &QaoaParams) -> Result<Circuit> {
    params.check()?;
    let n = graph.n_nodes();
    let mut c = Circuit::new(n);
    for (l, (beta, gamma)) in params.layers().enumerate() {
        let layer = l + 1;
        for (&(i, j), &w) in graph.edges() {
            push_zz(&mut c, i, j, gamma * w as f64, layer);
        }
        for (q, &h) in graph.fields().iter().enumerate() {
            if h != 0 {
                c.gates.push(Gate { op: Op::Rz { qubit: q, angle: gamma * h as f64 }, tag: phase(layer) });
            }
        }
        for q in 0..n {
            c.gates.push(Gate { op: Op::Rx { qubit: q, angle: 2.0 * beta }, tag: mixer(layer) });
        }
    }
    Ok(c)
}

/// One layer of a reverse causal cone.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConeLayer {
    /// QAOA layer index (1-based).
    pub layer: usize,
    /// Qubits whose mixer in this layer lies in the cone (the qubits
    /// included before this layer's phase operator was processed).
    pub mixed_qubits: BTreeSet<usize>,
    /// Couplings of this layer's phase operator inside the cone.
    pub edges: Vec<(usize, usize)>,
    /// Qubits included after processing this layer.
    pub qubits: BTreeSet<usize>,
}

/// Reverse causal cone of `Z_i Z_j` for a depth-`p` circuit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RccSpec {
    pub target: (usize, usize),
    /// Layers ordered from `p` down to `1`.
    pub layers: Vec<ConeLayer>,
    /// Qubits touched only by the first layer's phase operator.
    pub removed_qubits: BTreeSet<usize>,
}

impl RccSpec {
    /// All qubits in the cone.
    pub fn cone_qubits(&self) -> &BTreeSet<usize> {
        &self.layers.last().expect("p >= 1").qubits
    }

    /// Qubits kept after trimming: those mixed in the first layer.
    pub fn kept_qubits(&self) -> &BTreeSet<usize> {
        &self.layers.last().expect("p >= 1").mixed_qubits
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn k(&self) -> usize {
        self.removed_qubits.len()
    }

    fn layer(&self, l: usize) -> &ConeLayer {
        &self.layers[self.layers.len() - l]
    }
}

/// Backward construction: start from the target pair, and at each layer from
/// `p` down to `1` include every coupling touching an already included
/// qubit together with its endpoints.
pub fn extract_rcc(graph: &IsingGraph, edge: (usize, usize), p: usize) -> Result<RccSpec> {
    let (i, j) = edge;
    if !graph.contains_edge(i, j) {
        return Err(invalid(format!("({i}, {j}) is not an edge of the graph")));
    }
    if p == 0 {
        return Err(invalid("QAOA depth must be at least 1"));
    }
    let target = (i.min(j), i.max(j));
    let mut included: BTreeSet<usize> = [target.0, target.1].into_iter().collect();
    let mut layers = Vec::with_capacity(p);
    for layer in (1..=p).rev() {
        let mixed = included.clone();
        let edges: Vec<(usize, usize)> = graph
            .edges()
            .keys()
            .filter(|(a, b)| mixed.contains(a) || mixed.contains(b))
            .copied()
            .collect();
        for &(a, b) in &edges {
            included.insert(a);
            included.insert(b);
        }
        layers.push(ConeLayer { layer, mixed_qubits: mixed, edges, qubits: included.clone() });
    }
    let last = layers.last().expect("p >= 1");
    let removed_qubits = last.qubits.difference(&last.mixed_qubits).copied().collect();
    Ok(RccSpec { target, layers, removed_qubits })
}

/// A circuit over a subset of graph nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeCircuit {
    pub circuit: Circuit,
    /// Graph node of each local qubit (ascending).
    pub nodes: Vec<usize>,
    /// Local indices of the target pair.
    pub target: (usize, usize),
}

fn local_map(nodes: &BTreeSet<usize>) -> BTreeMap<usize, usize> {
    nodes.iter().enumerate().map(|(k, &n)| (n, k)).collect()
}

/// The untrimmed cone as a circuit on the cone's qubits, gates kept in the
/// same order as in the full circuit.
pub fn build_rcc_circuit(graph: &IsingGraph, edge: (usize, usize), params: &QaoaParams) -> Result<ConeCircuit> {
    params.check()?;
    let spec = extract_rcc(graph, edge, params.depth())?;
    let nodes = spec.cone_qubits().clone();
    let circuit = cone_gates(graph, &spec, params, &nodes, None)?;
    let local = local_map(&nodes);
    Ok(ConeCircuit {
        circuit,
        target: (local[&spec.target.0], local[&spec.target.1]),
        nodes: nodes.into_iter().collect(),
    })
}

/// Removed qubits and the signs they induce, for one trimmed circuit.
struct Trim<'a> {
    removed: &'a [usize],
    bits: u64,
}

impl Trim<'_> {
    fn sign(&self, node: usize) -> Option<f64> {
        self.removed
            .iter()
            .position(|&r| r == node)
            .map(|m| if (self.bits >> m) & 1 == 0 { 1.0 } else { -1.0 })
    }
}

fn cone_gates(
    graph: &IsingGraph,
    spec: &RccSpec,
    params: &QaoaParams,
    nodes: &BTreeSet<usize>,
    trim: Option<&Trim<'_>>,
) -> Result<Circuit> {
    let local = local_map(nodes);
    let mut c = Circuit::new(nodes.len());
    for (l, (beta, gamma)) in params.layers().enumerate() {
        let layer = l + 1;
        let cone = spec.layer(layer);
        for &(a, b) in &cone.edges {
            let angle = gamma * graph.weight(a, b) as f64;
            let trimmed = if layer == 1 { trim } else { None };
            match trimmed.map(|t| (t.sign(a), t.sign(b))) {
                Some((Some(s), None)) => {
                    c.gates.push(Gate { op: Op::Rz { qubit: local[&b], angle: s * angle }, tag: phase(layer) });
                }
                Some((None, Some(s))) => {
                    c.gates.push(Gate { op: Op::Rz { qubit: local[&a], angle: s * angle }, tag: phase(layer) });
                }
                Some((Some(_), Some(_))) => {
                    return Err(Error::ConstraintViolation(format!(
                        "cone edge ({a}, {b}) joins two removed qubits"
                    )));
                }
                _ => push_zz(&mut c, local[&a], local[&b], angle, layer),
            }
        }
        for &q in &cone.mixed_qubits {
            let h = graph.fields()[q];
            if h != 0 {
                c.gates.push(Gate { op: Op::Rz { qubit: local[&q], angle: gamma * h as f64 }, tag: phase(layer) });
            }
        }
        for &q in &cone.mixed_qubits {
            c.gates.push(Gate { op: Op::Rx { qubit: local[&q], angle: 2.0 * beta }, tag: mixer(layer) });
        }
    }
    Ok(c)
}

/// Trimmed cone: first-layer-only qubits are removed and each of their
/// couplings to kept qubit `q` becomes `RZ_q(+-gamma_1 J)`, the sign set by
/// the removed qubit's bit. All `2^k` circuits carry weight `2^-k`.
#[derive(Debug, Clone)]
pub struct TrimmedRcc {
    graph: IsingGraph,
    params: QaoaParams,
    spec: RccSpec,
    removed: Vec<usize>,
    /// Graph node of each local qubit.
    pub nodes: Vec<usize>,
    /// Local indices of the target pair.
    pub target: (usize, usize),
}

impl TrimmedRcc {
    pub fn new(graph: &IsingGraph, edge: (usize, usize), params: &QaoaParams) -> Result<Self> {
        params.check()?;
        let spec = extract_rcc(graph, edge, params.depth())?;
        let k = spec.k();
        if k > MAX_TRIMMED_QUBITS {
            return Err(Error::ResourceLimit(format!(
                "{k} trimmed qubits would need 2^{k} circuits (cap {MAX_TRIMMED_QUBITS})"
            )));
        }
        let kept = spec.kept_qubits().clone();
        let local = local_map(&kept);
        Ok(Self {
            target: (local[&spec.target.0], local[&spec.target.1]),
            nodes: kept.into_iter().collect(),
            removed: spec.removed_qubits.iter().copied().collect(),
            graph: graph.clone(),
            params: params.clone(),
            spec,
        })
    }

    pub fn spec(&self) -> &RccSpec {
        &self.spec
    }

    pub fn k(&self) -> usize {
        self.removed.len()
    }

    pub fn n_circuits(&self) -> usize {
        1 << self.k()
    }

    pub fn weight(&self) -> f64 {
        1.0 / self.n_circuits() as f64
    }

    /// Circuit for the removed-qubit bitstring `bits` (bit `m` belongs to the
    /// `m`-th removed qubit in ascending order; `0` means `Z = +1`).
    pub fn circuit(&self, bits: u64) -> Circuit {
        let trim = Trim { removed: &self.removed, bits };
        let kept: BTreeSet<usize> = self.nodes.iter().copied().collect();
        cone_gates(&self.graph, &self.spec, &self.params, &kept, Some(&trim))
            .expect("cone edges never join two removed qubits")
    }

    pub fn circuits(&self) -> impl Iterator<Item = Circuit> + '_ {
        (0..self.n_circuits() as u64).map(|b| self.circuit(b))
    }
}

/// All `2^k` trimmed circuits with their weights.
pub fn build_rcc_circuits_trimmed(
    graph: &IsingGraph,
    edge: (usize, usize),
    params: &QaoaParams,
) -> Result<Vec<(Circuit, f64)>> {
    let t = TrimmedRcc::new(graph, edge, params)?;
    let w = t.weight();
    Ok(t.circuits().map(|c| (c, w)).collect())
}

/// Logical two-qubit resources of a circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CircuitMetrics {
    pub cnot_count: usize,
    pub cnot_depth: usize,
    pub qubit_count: usize,
}

/// CNOT count, CNOT depth (longest chain of CNOTs linked by shared qubits,
/// single-qubit gates ignored) and number of qubits touched.
pub fn metrics(circuit: &Circuit) -> CircuitMetrics {
    let mut depth = vec![0usize; circuit.n_qubits()];
    let mut touched = vec![false; circuit.n_qubits()];
    let mut count = 0;
    for g in circuit.gates() {
        for q in g.op.qubits() {
            touched[q] = true;
        }
        if let Op::Cnot { control, target } = g.op {
            count += 1;
            let d = depth[control].max(depth[target]) + 1;
            depth[control] = d;
            depth[target] = d;
        }
    }
    CircuitMetrics {
        cnot_count: count,
        cnot_depth: depth.into_iter().max().unwrap_or(0),
        qubit_count: touched.into_iter().filter(|&t| t).count(),
    }
}
