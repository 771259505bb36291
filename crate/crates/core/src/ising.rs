//! Ising graphs with integer couplings, exact energies and exhaustive
//! ground-state search.
//!
//! The Hamiltonian is `H = (1/2) * (sum_{(i,j)} J_ij s_i s_j + sum_j h_j s_j + C)`
//! with integer `J_ij`, `h_j` and `C`. Energies are therefore half-integers and
//! are kept exact by storing twice their value. For graphs mapped from a
//! paint shop instance `h` is zero and the energy equals the colour-change
//! count of the induced colouring.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bpsp::{BpspInstance, Colour, Colouring, Occurrence};
use crate::error::{invalid, Error, Result};
use crate::exec;

/// Exact half-integer energy, stored as twice its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Energy {
    twice: i64,
}

impl Energy {
    pub const fn from_twice(twice: i64) -> Self {
        Self { twice }
    }

    pub const fn from_int(value: i64) -> Self {
        Self { twice: 2 * value }
    }

    pub const fn twice(self) -> i64 {
        self.twice
    }

    pub fn value(self) -> f64 {
        self.twice as f64 / 2.0
    }

    pub fn is_integer(self) -> bool {
        self.twice % 2 == 0
    }

    /// The integer value, if the energy is integral.
    pub fn as_int(self) -> Option<i64> {
        self.is_integer().then_some(self.twice / 2)
    }
}

impl fmt::Display for Energy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.twice / 2)
        } else {
            write!(f, "{}/2", self.twice)
        }
    }
}

/// A spin value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub fn value(self) -> i64 {
        match self {
            Spin::Up => 1,
            Spin::Down => -1,
        }
    }

    pub fn from_sign(sign: i64) -> Self {
        if sign >= 0 {
            Spin::Up
        } else {
            Spin::Down
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Spin::Up => Spin::Down,
            Spin::Down => Spin::Up,
        }
    }

    /// Measurement bit: `0` for `+1`, `1` for `-1`.
    pub fn bit(self) -> u8 {
        match self {
            Spin::Up => 0,
            Spin::Down => 1,
        }
    }

    pub fn from_bit(bit: u8) -> Self {
        if bit == 0 {
            Spin::Up
        } else {
            Spin::Down
        }
    }

    pub fn times(self, sign: i64) -> Self {
        if sign >= 0 {
            self
        } else {
            self.flipped()
        }
    }
}

/// One spin per node.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpinConfig {
    pub spins: Vec<Spin>,
}

impl SpinConfig {
    pub fn new(spins: Vec<Spin>) -> Self {
        Self { spins }
    }

    pub fn all_up(n: usize) -> Self {
        Self::new(vec![Spin::Up; n])
    }

    pub fn from_values(values: &[i64]) -> Result<Self> {
        values
            .iter()
            .map(|&v| match v {
                1 => Ok(Spin::Up),
                -1 => Ok(Spin::Down),
                other => Err(invalid(format!("spin values must be +1 or -1, got {other}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self::new)
    }

    /// Spin `q` is read from bit `q` of `index` (bit set means `-1`).
    pub fn from_index(index: u64, n: usize) -> Self {
        Self::new((0..n).map(|q| Spin::from_bit(((index >> q) & 1) as u8)).collect())
    }

    pub fn to_index(&self) -> u64 {
        self.spins
            .iter()
            .enumerate()
            .map(|(q, s)| (s.bit() as u64) << q)
            .sum()
    }

    pub fn values(&self) -> Vec<i64> {
        self.spins.iter().map(|s| s.value()).collect()
    }

    pub fn flipped(&self) -> Self {
        Self::new(self.spins.iter().map(|s| s.flipped()).collect())
    }

    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }
}

/// Integer-weighted Ising graph. Edge keys are `(i, j)` with `i < j`; zero
/// weights and self-loops are never stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IsingGraph {
    n_nodes: usize,
    edges: BTreeMap<(usize, usize), i64>,
    fields: Vec<i64>,
    offset_numerator: i64,
}

impl IsingGraph {
    pub fn new(n_nodes: usize) -> Self {
        Self {
            n_nodes,
            edges: BTreeMap::new(),
            fields: vec![0; n_nodes],
            offset_numerator: 0,
        }
    }

    /// Builds a graph from `(i, j, w)` triples, summing duplicates.
    pub fn from_edges(n_nodes: usize, edges: &[(usize, usize, i64)], offset_numerator: i64) -> Result<Self> {
        let mut g = Self::new(n_nodes);
        g.offset_numerator = offset_numerator;
        for &(i, j, w) in edges {
            g.add_coupling(i, j, w)?;
        }
        Ok(g)
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &BTreeMap<(usize, usize), i64> {
        &self.edges
    }

    pub fn edge_list(&self) -> Vec<(usize, usize)> {
        self.edges.keys().copied().collect()
    }

    pub fn weight(&self, i: usize, j: usize) -> i64 {
        self.edges.get(&ordered(i, j)).copied().unwrap_or(0)
    }

    pub fn contains_edge(&self, i: usize, j: usize) -> bool {
        i != j && self.edges.contains_key(&ordered(i, j))
    }

    pub fn fields(&self) -> &[i64] {
        &self.fields
    }

    pub fn has_fields(&self) -> bool {
        self.fields.iter().any(|&h| h != 0)
    }

    /// The integer `C` of the constant term `C/2`.
    pub fn offset_numerator(&self) -> i64 {
        self.offset_numerator
    }

    pub fn set_offset_numerator(&mut self, c: i64) {
        self.offset_numerator = c;
    }

    pub fn add_offset(&mut self, delta: i64) {
        self.offset_numerator += delta;
    }

    pub fn set_field(&mut self, node: usize, h: i64) -> Result<()> {
        if node >= self.n_nodes {
            return Err(invalid(format!("node {node} out of range")));
        }
        self.fields[node] = h;
        Ok(())
    }

    pub fn add_field(&mut self, node: usize, delta: i64) {
        self.fields[node] += delta;
    }

    /// Adds `w` to the coupling on `(i, j)`, dropping the edge if it cancels.
    pub fn add_coupling(&mut self, i: usize, j: usize, w: i64) -> Result<()> {
        if i == j {
            return Err(invalid(format!("self-loop on node {i}")));
        }
        if i >= self.n_nodes || j >= self.n_nodes {
            return Err(invalid(format!("edge ({i}, {j}) out of range for {} nodes", self.n_nodes)));
        }
        let key = ordered(i, j);
        let entry = self.edges.entry(key).or_insert(0);
        *entry += w;
        if *entry == 0 {
            self.edges.remove(&key);
        }
        Ok(())
    }

    /// Neighbours of each node, sorted.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n_nodes];
        for &(i, j) in self.edges.keys() {
            adj[i].push(j);
            adj[j].push(i);
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        adj
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n_nodes];
        for &(i, j) in self.edges.keys() {
            deg[i] += 1;
            deg[j] += 1;
        }
        deg
    }

    /// Exact energy of a spin configuration.
    pub fn energy(&self, spins: &SpinConfig) -> Result<Energy> {
        if spins.len() != self.n_nodes {
            return Err(invalid(format!(
                "spin configuration has {} entries, graph has {} nodes",
                spins.len(),
                self.n_nodes
            )));
        }
        let s = spins.values();
        let couplings: i64 = self.edges.iter().map(|(&(i, j), &w)| w * s[i] * s[j]).sum();
        let fields: i64 = self.fields.iter().zip(&s).map(|(h, v)| h * v).sum();
        Ok(Energy::from_twice(couplings + fields + self.offset_numerator))
    }

    /// Energy of the configuration encoded in `index` (see
    /// [`SpinConfig::from_index`]).
    pub fn energy_of_index(&self, index: u64) -> Energy {
        let spin = |q: usize| 1 - 2 * ((index >> q) & 1) as i64;
        let couplings: i64 = self.edges.iter().map(|(&(i, j), &w)| w * spin(i) * spin(j)).sum();
        let fields: i64 = self.fields.iter().enumerate().map(|(q, &h)| h * spin(q)).sum();
        Energy::from_twice(couplings + fields + self.offset_numerator)
    }

    /// Graph in the JSON file layout.
    pub fn to_file(&self) -> GraphFile {
        GraphFile {
            n_nodes: self.n_nodes,
            edges: self.edges.iter().map(|(&(i, j), &w)| [i as i64, j as i64, w]).collect(),
            offset_numerator: self.offset_numerator,
            fields: self.has_fields().then(|| self.fields.clone()),
        }
    }

    pub fn from_file(file: &GraphFile) -> Result<Self> {
        let mut edges = Vec::with_capacity(file.edges.len());
        for e in &file.edges {
            if e[0] < 0 || e[1] < 0 {
                return Err(invalid("negative node index in edge list"));
            }
            edges.push((e[0] as usize, e[1] as usize, e[2]));
        }
        let mut g = Self::from_edges(file.n_nodes, &edges, file.offset_numerator)?;
        if let Some(fields) = &file.fields {
            if fields.len() != file.n_nodes {
                return Err(invalid("fields length must equal n_nodes"));
            }
            g.fields = fields.clone();
        }
        Ok(g)
    }
}

fn ordered(i: usize, j: usize) -> (usize, usize) {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

/// JSON layout: `{"n_nodes": n, "edges": [[i, j, w], ...], "offset_numerator": C}`
/// with an optional `"fields"` array.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphFile {
    pub n_nodes: usize,
    pub edges: Vec<[i64; 3]>,
    pub offset_numerator: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fields: Option<Vec<i64>>,
}

impl Serialize for IsingGraph {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_file().serialize(s)
    }
}

impl<'de> Deserialize<'de> for IsingGraph {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let file = GraphFile::deserialize(d)?;
        IsingGraph::from_file(&file).map_err(serde::de::Error::custom)
    }
}

/// Bookkeeping from mapping an instance: the graph plus the number `A` of
/// adjacent same-body pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BpspMapping {
    pub graph: IsingGraph,
    pub same_body_pairs: i64,
}

/// Maps a paint shop instance to its Ising graph, one node per body.
///
/// Adjacent cars that are both first or both second occurrences add `-1` to
/// their bodies' coupling, mixed pairs add `+1`, and same-body neighbours add
/// one to `A`. The offset is `C = A + 2N - 1`.
pub fn map_bpsp(instance: &BpspInstance) -> IsingGraph {
    map_bpsp_detailed(instance).graph
}

pub fn map_bpsp_detailed(instance: &BpspInstance) -> BpspMapping {
    let seq = instance.sequence();
    let occ = instance.occurrences();
    let mut graph = IsingGraph::new(instance.n_bodies());
    let mut same_body = 0i64;
    for k in 0..seq.len() - 1 {
        let (a, b) = (seq[k], seq[k + 1]);
        if a == b {
            same_body += 1;
            continue;
        }
        let sign = if occ[k] == occ[k + 1] { -1 } else { 1 };
        graph.add_coupling(a, b, sign).expect("distinct in-range bodies");
    }
    graph.offset_numerator = same_body + seq.len() as i64 - 1;
    BpspMapping { graph, same_body_pairs: same_body }
}

/// First occurrence of body `b` gets colour `(1 - s_b)/2`, the second
/// occurrence the complement.
pub fn spins_to_colouring(instance: &BpspInstance, spins: &SpinConfig) -> Result<Colouring> {
    if spins.len() != instance.n_bodies() {
        return Err(invalid(format!(
            "{} spins for {} bodies",
            spins.len(),
            instance.n_bodies()
        )));
    }
    let colours = instance
        .sequence()
        .iter()
        .zip(instance.occurrences())
        .map(|(&b, occ)| {
            let first = Colour::from_bit(spins.spins[b].bit());
            match occ {
                Occurrence::First => first,
                Occurrence::Second => first.flipped(),
            }
        })
        .collect();
    Ok(Colouring::new(colours))
}

/// Inverse of [`spins_to_colouring`] for valid colourings.
pub fn colouring_to_spins(instance: &BpspInstance, colouring: &Colouring) -> Result<SpinConfig> {
    colouring.validate(instance)?;
    let mut spins = vec![Spin::Up; instance.n_bodies()];
    for ((&b, occ), c) in instance.sequence().iter().zip(instance.occurrences()).zip(&colouring.colours) {
        if occ == Occurrence::First {
            spins[b] = Spin::from_bit(c.bit());
        }
    }
    Ok(SpinConfig::new(spins))
}

/// Default node cap for exhaustive search.
pub const BRUTE_FORCE_CAP: usize = 24;

/// Minimum and maximum energy configurations found by exhaustive search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Extremes {
    pub ground: SpinConfig,
    pub ground_energy: Energy,
    pub highest: SpinConfig,
    pub highest_energy: Energy,
}

/// Exhaustive minimum with the default cap.
pub fn brute_force_ground(graph: &IsingGraph) -> Result<(SpinConfig, Energy)> {
    brute_force_ground_capped(graph, BRUTE_FORCE_CAP)
}

pub fn brute_force_ground_capped(graph: &IsingGraph, cap: usize) -> Result<(SpinConfig, Energy)> {
    let e = brute_force_extremes_capped(graph, cap)?;
    Ok((e.ground, e.ground_energy))
}

pub fn brute_force_extremes(graph: &IsingGraph) -> Result<Extremes> {
    brute_force_extremes_capped(graph, BRUTE_FORCE_CAP)
}

const CHUNK_BITS: u32 = 12;

/// Enumerates configurations, fixing node 0 to `+1` when the Hamiltonian has
/// no fields (global flip symmetry). Ties go to the lexicographically smallest
/// spin vector, reading `+1` before `-1` and node 0 first.
///
/// The search space is split into fixed chunks whose partial results are
/// merged in chunk order, so the answer does not depend on how many threads
/// run.
pub fn brute_force_extremes_capped(graph: &IsingGraph, cap: usize) -> Result<Extremes> {
    let n = graph.n_nodes;
    if n > cap {
        return Err(Error::ResourceLimit(format!(
            "exhaustive search over {n} nodes exceeds the cap of {cap}"
        )));
    }
    if n == 0 {
        let e = Energy::from_twice(graph.offset_numerator);
        return Ok(Extremes {
            ground: SpinConfig::new(vec![]),
            ground_energy: e,
            highest: SpinConfig::new(vec![]),
            highest_energy: e,
        });
    }
    // Node k occupies bit (n - 1 - k) of the lexicographic counter so that
    // numeric order of the counter is lexicographic order of the spins.
    let free_bits = if graph.has_fields() { n } else { n - 1 } as u32;
    let total: u64 = 1u64 << free_bits;
    let edges: Vec<(u32, u32, i64)> = graph
        .edges
        .iter()
        .map(|(&(i, j), &w)| ((n - 1 - i) as u32, (n - 1 - j) as u32, w))
        .collect();
    let fields: Vec<(u32, i64)> = graph
        .fields
        .iter()
        .enumerate()
        .filter(|(_, &h)| h != 0)
        .map(|(q, &h)| ((n - 1 - q) as u32, h))
        .collect();
    let offset = graph.offset_numerator;
    let eval = |x: u64| -> i64 {
        let mut twice = offset;
        for &(a, b, w) in &edges {
            let parity = ((x >> a) ^ (x >> b)) & 1;
            twice += if parity == 0 { w } else { -w };
        }
        for &(a, h) in &fields {
            twice += if (x >> a) & 1 == 0 { h } else { -h };
        }
        twice
    };

    let chunk = 1u64 << CHUNK_BITS.min(free_bits);
    let n_chunks = (total / chunk) as usize;
    // (min energy, counter), (max energy, counter); strict comparisons keep
    // the smallest counter within a chunk.
    let partials = exec::map_range(n_chunks, |c| {
        let start = c as u64 * chunk;
        let mut lo = (i64::MAX, 0u64);
        let mut hi = (i64::MIN, 0u64);
        for x in start..start + chunk {
            let e = eval(x);
            if e < lo.0 {
                lo = (e, x);
            }
            if e > hi.0 {
                hi = (e, x);
            }
        }
        (lo, hi)
    });
    let mut lo = (i64::MAX, 0u64);
    let mut hi = (i64::MIN, 0u64);
    for (l, h) in partials {
        if l.0 < lo.0 {
            lo = l;
        }
        if h.0 > hi.0 {
            hi = h;
        }
    }
    let decode = |x: u64| {
        SpinConfig::new(
            (0..n)
                .map(|k| Spin::from_bit(((x >> (n - 1 - k)) & 1) as u8))
                .collect(),
        )
    };
    Ok(Extremes {
        ground: decode(lo.1),
        ground_energy: Energy::from_twice(lo.0),
        highest: decode(hi.1),
        highest_energy: Energy::from_twice(hi.0),
    })
}
