//! Dense statevector simulation from `|+>^n`.
//!
//! Qubit `q` is bit `q` of the basis index. A measured bit `0` corresponds to
//! `Z = +1`, i.e. spin up / red.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::circuit::{Circuit, Op};
use crate::error::{invalid, Error, Result};
use crate::ising::IsingGraph;
use crate::rng::{self, Stream};

/// Largest register the dense simulator accepts.
pub const MAX_QUBITS: usize = 24;

/// Registers at least this large update amplitudes on the rayon pool.
#[cfg(feature = "parallel")]
const PARALLEL_MIN_QUBITS: usize = 14;

/// Fixed block length for reductions; partial sums are combined in block
/// order so results do not depend on the thread count.
const REDUCE_BLOCK: usize = 1 << 12;

#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl Statevector {
    /// `|+>^n`.
    pub fn plus(n_qubits: usize) -> Result<Self> {
        check_size(n_qubits)?;
        let dim = 1usize << n_qubits;
        let a = Complex64::new(1.0 / (dim as f64).sqrt(), 0.0);
        Ok(Self { n_qubits, amplitudes: vec![a; dim] })
    }

    /// Computational basis state `|index>`.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        check_size(n_qubits)?;
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(invalid(format!("basis index {index} out of range")));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(Self { n_qubits, amplitudes })
    }

    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let dim = amplitudes.len();
        if !dim.is_power_of_two() {
            return Err(invalid("amplitude count must be a power of two"));
        }
        let n_qubits = dim.trailing_zeros() as usize;
        check_size(n_qubits)?;
        Ok(Self { n_qubits, amplitudes })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        block_sum(&self.amplitudes, |_, a| a.norm_sqr())
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn apply(&mut self, op: &Op) -> Result<()> {
        match *op {
            Op::Rx { qubit, angle } => {
                self.check_qubit(qubit)?;
                let c = Complex64::new((angle / 2.0).cos(), 0.0);
                let s = Complex64::new(0.0, -(angle / 2.0).sin());
                self.pairwise(qubit, move |lo, hi| {
                    let (a, b) = (*lo, *hi);
                    *lo = c * a + s * b;
                    *hi = s * a + c * b;
                });
            }
            Op::Rz { qubit, angle } => {
                self.check_qubit(qubit)?;
                let down = Complex64::from_polar(1.0, -angle / 2.0);
                let up = Complex64::from_polar(1.0, angle / 2.0);
                self.pairwise(qubit, move |lo, hi| {
                    *lo *= down;
                    *hi *= up;
                });
            }
            Op::Cnot { control, target } => {
                self.check_qubit(control)?;
                self.check_qubit(target)?;
                if control == target {
                    return Err(invalid("CNOT control and target must differ"));
                }
                self.controlled_pairwise(control, target, std::mem::swap);
            }
        }
        Ok(())
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.n_qubits {
            Err(invalid(format!("qubit {q} out of range for {} qubits", self.n_qubits)))
        } else {
            Ok(())
        }
    }

    /// Calls `f(amp[x], amp[x | 1<<q])` for every `x` with bit `q` clear.
    fn pairwise<F>(&mut self, q: usize, f: F)
    where
        F: Fn(&mut Complex64, &mut Complex64) + Sync + Send,
    {
        let half = 1usize << q;
        let kernel = |block: &mut [Complex64]| {
            let (lo, hi) = block.split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                f(a, b);
            }
        };
        #[cfg(feature = "parallel")]
        if self.n_qubits >= PARALLEL_MIN_QUBITS {
            self.amplitudes.par_chunks_mut(2 * half).for_each(kernel);
            return;
        }
        self.amplitudes.chunks_mut(2 * half).for_each(kernel);
    }

    /// As [`Self::pairwise`] on `target`, restricted to indices whose
    /// `control` bit is set.
    fn controlled_pairwise<F>(&mut self, control: usize, target: usize, f: F)
    where
        F: Fn(&mut Complex64, &mut Complex64) + Sync + Send,
    {
        let half = 1usize << target;
        let cmask = 1usize << control;
        let kernel = |(k, block): (usize, &mut [Complex64])| {
            let base = k * 2 * half;
            let (lo, hi) = block.split_at_mut(half);
            for (off, (a, b)) in lo.iter_mut().zip(hi.iter_mut()).enumerate() {
                if (base + off) & cmask != 0 {
                    f(a, b);
                }
            }
        };
        #[cfg(feature = "parallel")]
        if self.n_qubits >= PARALLEL_MIN_QUBITS {
            self.amplitudes.par_chunks_mut(2 * half).enumerate().for_each(kernel);
            return;
        }
        self.amplitudes.chunks_mut(2 * half).enumerate().for_each(kernel);
    }
}

fn check_size(n: usize) -> Result<()> {
    if n > MAX_QUBITS {
        Err(Error::ResourceLimit(format!("{n} qubits exceeds the dense simulator cap of {MAX_QUBITS}")))
    } else {
        Ok(())
    }
}

/// Deterministic blocked sum of `f(index, amplitude)`.
fn block_sum<F>(amps: &[Complex64], f: F) -> f64
where
    F: Fn(usize, &Complex64) -> f64 + Sync + Send,
{
    let partial = |(k, block): (usize, &[Complex64])| -> f64 {
        let base = k * REDUCE_BLOCK;
        block.iter().enumerate().map(|(i, a)| f(base + i, a)).sum()
    };
    #[cfg(feature = "parallel")]
    let partials: Vec<f64> = amps.par_chunks(REDUCE_BLOCK).enumerate().map(partial).collect();
    #[cfg(not(feature = "parallel"))]
    let partials: Vec<f64> = amps.chunks(REDUCE_BLOCK).enumerate().map(partial).collect();
    partials.into_iter().sum()
}

/// Applies `circuit` to `|+>^n`.
pub fn simulate(circuit: &Circuit) -> Result<Statevector> {
    let mut state = Statevector::plus(circuit.n_qubits())?;
    for g in circuit.gates() {
        state.apply(&g.op)?;
    }
    Ok(state)
}

/// `<Z_i Z_j>`.
pub fn expectation_zz(state: &Statevector, i: usize, j: usize) -> Result<f64> {
    state.check_qubit(i)?;
    state.check_qubit(j)?;
    if i == j {
        return Err(invalid("expectation_zz needs two distinct qubits"));
    }
    let mask = (1usize << i) | (1usize << j);
    Ok(block_sum(&state.amplitudes, |x, a| {
        let p = a.norm_sqr();
        if (x & mask).count_ones().is_multiple_of(2) {
            p
        } else {
            -p
        }
    }))
}

/// `<Z_q>`.
pub fn expectation_z(state: &Statevector, q: usize) -> Result<f64> {
    state.check_qubit(q)?;
    let mask = 1usize << q;
    Ok(block_sum(&state.amplitudes, |x, a| {
        if x & mask == 0 {
            a.norm_sqr()
        } else {
            -a.norm_sqr()
        }
    }))
}

/// `<H>` for the graph's Hamiltonian.
pub fn energy_expectation(graph: &IsingGraph, state: &Statevector) -> Result<f64> {
    if graph.n_nodes() != state.n_qubits() {
        return Err(invalid(format!(
            "graph has {} nodes, state has {} qubits",
            graph.n_nodes(),
            state.n_qubits()
        )));
    }
    let mut twice = graph.offset_numerator() as f64;
    for (&(i, j), &w) in graph.edges() {
        twice += w as f64 * expectation_zz(state, i, j)?;
    }
    for (q, &h) in graph.fields().iter().enumerate() {
        if h != 0 {
            twice += h as f64 * expectation_z(state, q)?;
        }
    }
    Ok(twice / 2.0)
}

/// Measurement counts keyed by basis index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShotCounts {
    pub n_qubits: usize,
    pub counts: BTreeMap<u64, u64>,
    pub shots: u64,
}

impl ShotCounts {
    /// Estimate of `<Z_i Z_j>` from the samples.
    pub fn zz(&self, i: usize, j: usize) -> f64 {
        let mask = (1u64 << i) | (1u64 << j);
        let signed: i64 = self
            .counts
            .iter()
            .map(|(&x, &c)| if (x & mask).count_ones().is_multiple_of(2) { c as i64 } else { -(c as i64) })
            .sum();
        signed as f64 / self.shots as f64
    }

    /// Bitstring with qubit 0 first, e.g. `"0110"`.
    pub fn bitstring(&self, index: u64) -> String {
        (0..self.n_qubits).map(|q| if (index >> q) & 1 == 0 { '0' } else { '1' }).collect()
    }
}

/// Seeded multinomial sampling by inverse CDF over the cumulative
/// probability table.
pub fn sample(state: &Statevector, shots: u64, seed: u64) -> Result<ShotCounts> {
    sample_with(state, shots, &mut rng::stream(seed, Stream::Shots, 0))
}

pub fn sample_with<R: Rng>(state: &Statevector, shots: u64, rng: &mut R) -> Result<ShotCounts> {
    if shots == 0 {
        return Err(invalid("at least one shot is required"));
    }
    let mut cdf = Vec::with_capacity(state.amplitudes.len());
    let mut acc = 0.0;
    for a in &state.amplitudes {
        acc += a.norm_sqr();
        cdf.push(acc);
    }
    let total = acc;
    let mut counts = BTreeMap::new();
    for _ in 0..shots {
        let u: f64 = rng.random::<f64>() * total;
        // first index whose cumulative probability exceeds u
        let idx = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
        *counts.entry(idx as u64).or_insert(0) += 1;
    }
    Ok(ShotCounts { n_qubits: state.n_qubits, counts, shots })
}

/// Probability table as CSV (`index,bitstring,probability`).
pub fn probabilities_csv(state: &Statevector) -> String {
    let mut out = String::from("index,bitstring,probability\n");
    for (x, a) in state.amplitudes.iter().enumerate() {
        let bits: String = (0..state.n_qubits).map(|q| if (x >> q) & 1 == 0 { '0' } else { '1' }).collect();
        out.push_str(&format!("{x},{bits},{:.17e}\n", a.norm_sqr()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::build_qaoa_circuit;
    use crate::qaoa::QaoaParams;
    use approx::assert_abs_diff_eq;

    #[test]
    fn empty_circuit_is_uniform() {
        let s = simulate(&Circuit::new(2)).unwrap();
        for a in s.amplitudes() {
            assert_abs_diff_eq!(a.re, 0.5, epsilon = 1e-15);
            assert_abs_diff_eq!(a.im, 0.0, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(expectation_zz(&s, 0, 1).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn zero_angles_leave_uniform_state() {
        let g = IsingGraph::from_edges(2, &[(0, 1, 1)], 0).unwrap();
        let c = build_qaoa_circuit(&g, &QaoaParams::new(vec![0.0], vec![0.0]).unwrap()).unwrap();
        let s = simulate(&c).unwrap();
        for a in s.amplitudes() {
            assert_abs_diff_eq!(a.re, 0.5, epsilon = 1e-15);
        }
    }

    #[test]
    fn bell_state_correlation() {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let mut amps = vec![Complex64::new(0.0, 0.0); 4];
        amps[0] = Complex64::new(r, 0.0);
        amps[3] = Complex64::new(r, 0.0);
        let s = Statevector::from_amplitudes(amps).unwrap();
        assert_abs_diff_eq!(expectation_zz(&s, 0, 1).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn index_errors() {
        let s = Statevector::plus(2).unwrap();
        assert!(expectation_zz(&s, 0, 2).is_err());
        assert!(expectation_zz(&s, 1, 1).is_err());
        assert!(matches!(Statevector::plus(25), Err(Error::ResourceLimit(_))));
        let mut c = Circuit::new(25);
        c.push(Op::Rx { qubit: 0, angle: 0.1 }, crate::circuit::LayerTag { layer: 1, part: crate::circuit::Part::Mixer })
            .unwrap();
        assert!(matches!(simulate(&c), Err(Error::ResourceLimit(_))));
    }

    #[test]
    fn sampling_a_basis_state() {
        let s = Statevector::basis(3, 5).unwrap();
        let counts = sample(&s, 100, 1).unwrap();
        assert_eq!(counts.counts.len(), 1);
        assert_eq!(counts.counts[&5], 100);
        assert_eq!(counts.bitstring(5), "101");
    }

    #[test]
    fn uniform_sampling_within_five_sigma() {
        let s = Statevector::plus(2).unwrap();
        let counts = sample(&s, 4096, 11).unwrap();
        let sigma = (4096.0f64 * 0.25 * 0.75).sqrt();
        assert_eq!(counts.counts.values().sum::<u64>(), 4096);
        for x in 0..4u64 {
            let c = counts.counts.get(&x).copied().unwrap_or(0) as f64;
            assert!((c - 1024.0).abs() < 5.0 * sigma);
        }
        assert_eq!(sample(&s, 4096, 11).unwrap(), counts);
        assert!(sample(&s, 0, 1).is_err());
    }

    #[test]
    fn energy_of_uniform_state_is_half_offset() {
        let g = IsingGraph::from_edges(4, &[(0, 2, -1), (0, 3, -1), (1, 3, 1)], 7).unwrap();
        let s = Statevector::plus(4).unwrap();
        assert_abs_diff_eq!(energy_expectation(&g, &s).unwrap(), 3.5, epsilon = 1e-14);
        assert!(energy_expectation(&g, &Statevector::plus(3).unwrap()).is_err());
    }

    #[test]
    fn ground_basis_state_energy() {
        let g = IsingGraph::from_edges(4, &[(0, 2, -1), (0, 3, -1), (1, 3, 1)], 7).unwrap();
        // spins (-1, +1, -1, -1) -> bits 1,0,1,1 -> index 0b1101
        let s = Statevector::basis(4, 0b1101).unwrap();
        assert_abs_diff_eq!(energy_expectation(&g, &s).unwrap(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn probabilities_csv_has_header_and_rows() {
        let csv = probabilities_csv(&Statevector::basis(2, 2).unwrap());
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[0], "index,bitstring,probability");
        assert!(lines[3].starts_with("2,01,1.0"));
    }
}
