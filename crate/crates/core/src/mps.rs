//! Matrix-product-state simulation on a 1D chain in qubit order.
//!
//! Two-qubit gates on non-neighbouring sites are routed with SWAP chains
//! towards the target and back. Every two-site update is followed by an SVD
//! whose Schmidt coefficients below the cutoff are dropped; the dropped
//! weight is accumulated and the state renormalised.

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Op};
use crate::error::{invalid, Error, Result};
use crate::statevector::Statevector;

/// Schmidt coefficients below this are numerical noise: always dropped and
/// never counted as excluded probability.
const ZERO: f64 = 1e-12;

const C0: Complex64 = Complex64::new(0.0, 0.0);
const C1: Complex64 = Complex64::new(1.0, 0.0);

/// Rank-3 site tensor `[left, physical, right]`, row-major.
#[derive(Debug, Clone, PartialEq)]
struct Site {
    left: usize,
    right: usize,
    data: Vec<Complex64>,
}

impl Site {
    fn plus() -> Self {
        let a = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Site { left: 1, right: 1, data: vec![a, a] }
    }

    fn at(&self, a: usize, s: usize, b: usize) -> Complex64 {
        self.data[(a * 2 + s) * self.right + b]
    }

    /// `(left * 2) x right` view.
    fn left_matrix(&self) -> Mat<Complex64> {
        Mat::from_fn(self.left * 2, self.right, |r, c| self.data[r * self.right + c])
    }

    /// `left x (2 * right)` view.
    fn right_matrix(&self) -> Mat<Complex64> {
        Mat::from_fn(self.left, 2 * self.right, |r, c| self.data[r * 2 * self.right + c])
    }

    fn from_matrix(m: &Mat<Complex64>, left: usize, right: usize) -> Self {
        let mut data = Vec::with_capacity(m.nrows() * m.ncols());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                data.push(m[(r, c)]);
            }
        }
        debug_assert_eq!(data.len(), left * 2 * right);
        Site { left, right, data }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MpsStats {
    pub max_entropy_bits: f64,
    pub max_bond_dim: usize,
    pub excluded_probability: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpsState {
    sites: Vec<Site>,
    /// Site holding the norm; all others are isometries towards it.
    centre: usize,
    cutoff: f64,
    excluded_probability: f64,
    stats: MpsStats,
}

fn check_cutoff(cutoff: f64) -> Result<()> {
    if cutoff.is_nan() || cutoff < 0.0 {
        return Err(invalid(format!("cutoff must be non-negative, got {cutoff}")));
    }
    if cutoff >= 1.0 {
        return Err(Error::DegenerateCutoff(cutoff));
    }
    Ok(())
}

fn entropy_bits(lambdas: &[f64]) -> f64 {
    let norm: f64 = lambdas.iter().map(|l| l * l).sum();
    lambdas
        .iter()
        .map(|l| l * l / norm)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.log2())
        .sum::<f64>()
        .max(0.0)
}

/// Thin SVD `m = U diag(s) V^H` with `s` non-increasing.
fn svd(m: &Mat<Complex64>) -> (Mat<Complex64>, Vec<f64>, Mat<Complex64>) {
    let svd = m.thin_svd().expect("SVD of a finite matrix");
    let diag = svd.S().column_vector();
    let s: Vec<f64> = (0..diag.nrows()).map(|k| diag[k].re).collect();
    debug_assert!(s.windows(2).all(|w| w[0] >= w[1]));
    (svd.U().to_owned(), s, svd.V().adjoint().to_owned())
}

fn two_qubit_matrix(op: TwoQubit) -> [[Complex64; 4]; 4] {
    // basis index = 2 * left bit + right bit
    let mut g = [[C0; 4]; 4];
    let perm: [usize; 4] = match op {
        TwoQubit::CnotLeftControl => [0, 1, 3, 2],
        TwoQubit::CnotRightControl => [0, 3, 2, 1],
        TwoQubit::Swap => [0, 2, 1, 3],
    };
    for (col, &row) in perm.iter().enumerate() {
        g[row][col] = C1;
    }
    g
}

#[derive(Debug, Clone, Copy)]
enum TwoQubit {
    CnotLeftControl,
    CnotRightControl,
    Swap,
}

impl MpsState {
    /// `|+>^n` with the given truncation cutoff.
    pub fn plus(n_qubits: usize, cutoff: f64) -> Result<Self> {
        check_cutoff(cutoff)?;
        if n_qubits == 0 {
            return Err(invalid("an MPS needs at least one site"));
        }
        Ok(Self {
            sites: vec![Site::plus(); n_qubits],
            centre: 0,
            cutoff,
            excluded_probability: 0.0,
            stats: MpsStats { max_entropy_bits: 0.0, max_bond_dim: 1, excluded_probability: 0.0 },
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.sites.len()
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn excluded_probability(&self) -> f64 {
        self.excluded_probability
    }

    /// Bond dimensions between neighbouring sites (`n - 1` entries).
    pub fn bond_dims(&self) -> Vec<usize> {
        self.sites.iter().skip(1).map(|s| s.left).collect()
    }

    pub fn stats(&self) -> MpsStats {
        MpsStats { excluded_probability: self.excluded_probability, ..self.stats }
    }

    pub fn apply(&mut self, op: &Op) -> Result<()> {
        let n = self.n_qubits();
        for q in op.qubits() {
            if q >= n {
                return Err(invalid(format!("qubit {q} out of range for {n} sites")));
            }
        }
        match *op {
            Op::Rx { qubit, angle } => {
                let (c, s) = ((angle / 2.0).cos(), (angle / 2.0).sin());
                let m = [[Complex64::new(c, 0.0), Complex64::new(0.0, -s)], [Complex64::new(0.0, -s), Complex64::new(c, 0.0)]];
                self.apply_single(qubit, m);
            }
            Op::Rz { qubit, angle } => {
                let m = [[Complex64::from_polar(1.0, -angle / 2.0), C0], [C0, Complex64::from_polar(1.0, angle / 2.0)]];
                self.apply_single(qubit, m);
            }
            Op::Cnot { control, target } => {
                if control == target {
                    return Err(invalid("CNOT control and target must differ"));
                }
                self.apply_cnot(control, target)?;
            }
        }
        Ok(())
    }

    fn apply_single(&mut self, q: usize, m: [[Complex64; 2]; 2]) {
        let site = &mut self.sites[q];
        let (l, r) = (site.left, site.right);
        for a in 0..l {
            for b in 0..r {
                let x0 = site.at(a, 0, b);
                let x1 = site.at(a, 1, b);
                site.data[a * 2 * r + b] = m[0][0] * x0 + m[0][1] * x1;
                site.data[(a * 2 + 1) * r + b] = m[1][0] * x0 + m[1][1] * x1;
            }
        }
    }

    fn apply_cnot(&mut self, control: usize, target: usize) -> Result<()> {
        // move the control next to the target, apply, move it back
        let mut pos = control;
        let mut path = Vec::new();
        while pos.abs_diff(target) > 1 {
            let next = if pos < target { pos + 1 } else { pos - 1 };
            self.apply_two(pos.min(next), TwoQubit::Swap)?;
            path.push(pos.min(next));
            pos = next;
        }
        if pos < target {
            self.apply_two(pos, TwoQubit::CnotLeftControl)?;
        } else {
            self.apply_two(target, TwoQubit::CnotRightControl)?;
        }
        for &bond in path.iter().rev() {
            self.apply_two(bond, TwoQubit::Swap)?;
        }
        Ok(())
    }

    /// Shifts the orthogonality centre with exact (untruncated) SVDs.
    fn move_centre(&mut self, to: usize) {
        while self.centre < to {
            let q = self.centre;
            let l = self.sites[q].left;
            let (u, s, vh) = svd(&self.sites[q].left_matrix());
            let k = s.len();
            self.sites[q] = Site::from_matrix(&u, l, k);
            let next = &self.sites[q + 1];
            let carry = Mat::from_fn(k, vh.ncols(), |r, c| vh[(r, c)] * s[r]);
            let merged = carry * next.right_matrix();
            self.sites[q + 1] = Site::from_matrix(&merged, k, next.right);
            self.centre += 1;
        }
        while self.centre > to {
            let q = self.centre;
            let r = self.sites[q].right;
            let (u, s, vh) = svd(&self.sites[q].right_matrix());
            let k = s.len();
            self.sites[q] = Site::from_matrix(&vh, k, r);
            let prev = &self.sites[q - 1];
            let carry = Mat::from_fn(u.nrows(), k, |row, c| u[(row, c)] * s[c]);
            let merged = prev.left_matrix() * carry;
            self.sites[q - 1] = Site::from_matrix(&merged, prev.left, k);
            self.centre -= 1;
        }
    }

    /// Two-site gate on `(bond, bond + 1)`, then SVD and truncation.
    fn apply_two(&mut self, bond: usize, op: TwoQubit) -> Result<()> {
        self.move_centre(bond);
        let g = two_qubit_matrix(op);
        let (a, b) = (&self.sites[bond], &self.sites[bond + 1]);
        let (l, m, r) = (a.left, a.right, b.right);
        // theta[(x, s1), (s2, y)]
        let mut theta = Mat::<Complex64>::zeros(l * 2, 2 * r);
        let mut pair = [C0; 4];
        for x in 0..l {
            for y in 0..r {
                for s1 in 0..2 {
                    for s2 in 0..2 {
                        pair[s1 * 2 + s2] = (0..m).map(|c| a.at(x, s1, c) * b.at(c, s2, y)).sum();
                    }
                }
                for (out, row) in g.iter().enumerate() {
                    let v: Complex64 = row.iter().zip(&pair).map(|(gi, pi)| gi * pi).sum();
                    theta[(x * 2 + out / 2, (out % 2) * r + y)] = v;
                }
            }
        }
        let (u, s, vt) = svd(&theta);
        let mut keep = 0;
        let mut dropped = 0.0;
        for &lam in &s {
            if lam >= ZERO && lam >= self.cutoff {
                keep += 1;
            } else if lam >= ZERO {
                dropped += lam * lam;
            }
        }
        if keep == 0 {
            return Err(Error::DegenerateCutoff(self.cutoff));
        }
        let kept = &s[..keep];
        let norm = kept.iter().map(|l| l * l).sum::<f64>().sqrt();
        self.excluded_probability += dropped;
        let left = Mat::from_fn(u.nrows(), keep, |row, col| u[(row, col)]);
        let right = Mat::from_fn(keep, 2 * r, |row, col| vt[(row, col)] * (kept[row] / norm));
        self.sites[bond] = Site::from_matrix(&left, l, keep);
        self.sites[bond + 1] = Site::from_matrix(&right, keep, r);
        self.centre = bond + 1;
        self.record(kept);
        Ok(())
    }

    fn record(&mut self, lambdas: &[f64]) {
        self.stats.max_bond_dim = self.stats.max_bond_dim.max(lambdas.len());
        self.stats.max_entropy_bits = self.stats.max_entropy_bits.max(entropy_bits(lambdas));
    }

    /// Schmidt coefficients across the cut after site `cut - 1`.
    pub fn schmidt_values(&self, cut: usize) -> Result<Vec<f64>> {
        let n = self.n_qubits();
        if cut == 0 || cut >= n {
            return Err(invalid(format!("cut {cut} outside 1..={}", n.saturating_sub(1))));
        }
        let mut s = self.clone();
        s.move_centre(cut - 1);
        let (_, values, _) = svd(&s.sites[cut - 1].left_matrix());
        Ok(values.into_iter().filter(|&v| v >= ZERO).collect())
    }

    /// Base-2 entanglement entropy across the cut after site `cut - 1`.
    pub fn entropy_at_cut(&self, cut: usize) -> Result<f64> {
        Ok(entropy_bits(&self.schmidt_values(cut)?))
    }

    /// Dense amplitudes, qubit `q` as bit `q` of the index.
    pub fn to_statevector(&self) -> Result<Statevector> {
        let n = self.n_qubits();
        if n > crate::statevector::MAX_QUBITS {
            return Err(Error::ResourceLimit(format!("{n} sites is too many to contract densely")));
        }
        // partial[index][bond] over the sites contracted so far
        let mut partial: Vec<Vec<Complex64>> = vec![vec![C1]];
        for (q, site) in self.sites.iter().enumerate() {
            let mut next = vec![vec![C0; site.right]; partial.len() * 2];
            for (idx, vec) in partial.iter().enumerate() {
                for s in 0..2 {
                    let out = &mut next[idx | (s << q)];
                    for (a, &va) in vec.iter().enumerate() {
                        if va == C0 {
                            continue;
                        }
                        for (b, o) in out.iter_mut().enumerate() {
                            *o += va * site.at(a, s, b);
                        }
                    }
                }
            }
            partial = next;
        }
        Statevector::from_amplitudes(partial.into_iter().map(|v| v[0]).collect())
    }
}

/// Runs `circuit` from `|+>^n` and returns the final state with peak
/// entropy, peak bond dimension and total excluded probability.
pub fn simulate_mps(circuit: &Circuit, cutoff: f64) -> Result<(MpsState, MpsStats)> {
    let mut state = MpsState::plus(circuit.n_qubits(), cutoff)?;
    for g in circuit.gates() {
        state.apply(&g.op)?;
    }
    for cut in 1..state.n_qubits() {
        let values = state.schmidt_values(cut)?;
        state.record(&values);
    }
    let stats = state.stats();
    Ok((state, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build_qaoa_circuit, LayerTag, Part};
    use crate::ising::IsingGraph;
    use crate::qaoa::{fixed_params, QaoaParams};
    use crate::statevector::simulate;
    use approx::assert_abs_diff_eq;

    const TAG: LayerTag = LayerTag { layer: 1, part: Part::Phase };

    fn fidelity(a: &Statevector, b: &Statevector) -> f64 {
        a.amplitudes().iter().zip(b.amplitudes()).map(|(x, y)| x.conj() * y).sum::<Complex64>().norm_sqr()
    }

    #[test]
    fn rank_one_wide_matrix_decomposes() {
        let (a, b) = (0.38960204598585607, 0.31338513966625126);
        let row = [Complex64::new(0.0, -a), Complex64::new(b, 0.0), Complex64::new(0.0, a), Complex64::new(b, 0.0)];
        let m = Mat::from_fn(2, 4, |_, c| row[c]);
        let (u, s, vh) = svd(&m);
        assert_abs_diff_eq!(s[0], 1.0, epsilon = 1e-12);
        assert!(s[1] < 1e-12);
        let rec = Mat::from_fn(2, 4, |r, c| (0..2).map(|k| u[(r, k)] * s[k] * vh[(k, c)]).sum::<Complex64>());
        assert!((rec - &m).norm_l2() < 1e-12);
    }

    #[test]
    fn random_small_circuits_match_dense() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..300 {
            let n = rng.random_range(2..6);
            let mut c = Circuit::new(n);
            for _ in 0..rng.random_range(1..12) {
                let q = rng.random_range(0..n);
                let angle = rng.random::<f64>() * 3.0;
                let op = match rng.random_range(0..3) {
                    0 => Op::Rx { qubit: q, angle },
                    1 => Op::Rz { qubit: q, angle },
                    _ => Op::Cnot { control: q, target: (q + rng.random_range(1..n)) % n },
                };
                c.push(op, TAG).unwrap();
            }
            let (state, _) = simulate_mps(&c, 0.0).unwrap();
            assert!(fidelity(&state.to_statevector().unwrap(), &simulate(&c).unwrap()) > 1.0 - 1e-10);
        }
    }

    #[test]
    fn empty_circuit() {
        let (state, stats) = simulate_mps(&Circuit::new(4), 0.0).unwrap();
        assert_eq!(stats, MpsStats { max_entropy_bits: 0.0, max_bond_dim: 1, excluded_probability: 0.0 });
        assert_eq!(state.bond_dims(), vec![1, 1, 1]);
        assert_abs_diff_eq!(state.entropy_at_cut(2).unwrap(), 0.0, epsilon = 1e-12);
    }

    /// Rotates qubit `q` from `|+>` to `|0>` up to phase.
    fn to_basis(c: &mut Circuit, q: usize) {
        c.push(Op::Rz { qubit: q, angle: std::f64::consts::FRAC_PI_2 }, TAG).unwrap();
        c.push(Op::Rx { qubit: q, angle: std::f64::consts::FRAC_PI_2 }, TAG).unwrap();
    }

    #[test]
    fn bell_pair() {
        let mut c = Circuit::new(2);
        to_basis(&mut c, 1);
        c.push(Op::Cnot { control: 0, target: 1 }, TAG).unwrap();
        let (state, stats) = simulate_mps(&c, 0.0).unwrap();
        assert_abs_diff_eq!(stats.max_entropy_bits, 1.0, epsilon = 1e-10);
        assert_eq!(stats.max_bond_dim, 2);
        assert_abs_diff_eq!(state.entropy_at_cut(1).unwrap(), 1.0, epsilon = 1e-10);

        let mut product = Circuit::new(2);
        product.push(Op::Cnot { control: 0, target: 1 }, TAG).unwrap();
        let (_, s) = simulate_mps(&product, 0.0).unwrap();
        assert_abs_diff_eq!(s.max_entropy_bits, 0.0, epsilon = 1e-10);
        assert_eq!(s.max_bond_dim, 1);
    }

    #[test]
    fn ghz_mid_cut() {
        let mut c = Circuit::new(4);
        for q in 1..4 {
            to_basis(&mut c, q);
        }
        for q in 1..4 {
            c.push(Op::Cnot { control: q - 1, target: q }, TAG).unwrap();
        }
        let probs = simulate(&c).unwrap().probabilities();
        assert_abs_diff_eq!(probs[0] + probs[15], 1.0, epsilon = 1e-12);
        let (state, _) = simulate_mps(&c, 0.0).unwrap();
        for cut in 1..4 {
            assert_abs_diff_eq!(state.entropy_at_cut(cut).unwrap(), 1.0, epsilon = 1e-10);
        }
        assert!(state.entropy_at_cut(0).is_err());
        assert!(state.entropy_at_cut(4).is_err());
    }

    #[test]
    fn distant_cnot_is_routed() {
        let mut c = Circuit::new(5);
        to_basis(&mut c, 4);
        c.push(Op::Cnot { control: 0, target: 4 }, TAG).unwrap();
        c.push(Op::Cnot { control: 3, target: 1 }, TAG).unwrap();
        let dense = simulate(&c).unwrap();
        let (state, _) = simulate_mps(&c, 0.0).unwrap();
        assert!(fidelity(&state.to_statevector().unwrap(), &dense) > 1.0 - 1e-12);
    }

    #[test]
    fn matches_dense_simulation_with_routing() {
        let g = IsingGraph::from_edges(6, &[(0, 3, -1), (0, 5, 1), (1, 4, -1), (2, 5, -1), (1, 2, 1), (3, 4, 2)], 4)
            .unwrap();
        for p in 1..=3 {
            let c = build_qaoa_circuit(&g, &fixed_params(p).unwrap()).unwrap();
            let (state, stats) = simulate_mps(&c, 0.0).unwrap();
            let dense = simulate(&c).unwrap();
            let mps = state.to_statevector().unwrap();
            for (x, y) in mps.amplitudes().iter().zip(dense.amplitudes()) {
                assert!((x - y).norm() < 1e-8);
            }
            assert!(fidelity(&mps, &dense) > 1.0 - 1e-8);
            assert_eq!(stats.excluded_probability, 0.0);
            assert!(stats.max_entropy_bits <= 3.0 + 1e-9);
            assert!(stats.max_bond_dim <= 8);
        }
    }

    #[test]
    fn truncation_accumulates_excluded_probability() {
        let g = IsingGraph::from_edges(6, &[(0, 3, -1), (0, 5, 1), (1, 4, -1), (2, 5, -1), (1, 2, 1), (3, 4, 2)], 4)
            .unwrap();
        let c = build_qaoa_circuit(&g, &QaoaParams::new(vec![0.4, 0.3], vec![0.5, 0.9]).unwrap()).unwrap();
        let mut last = 0.0;
        for cutoff in [0.0, 0.005, 0.0075, 0.01, 0.1] {
            let (state, stats) = simulate_mps(&c, cutoff).unwrap();
            assert!(stats.excluded_probability >= last);
            last = stats.excluded_probability;
            assert_abs_diff_eq!(state.to_statevector().unwrap().norm_sqr(), 1.0, epsilon = 1e-9);
        }
        assert!(last > 0.0);
    }

    #[test]
    fn degenerate_cutoffs() {
        assert!(matches!(simulate_mps(&Circuit::new(2), 1.0), Err(Error::DegenerateCutoff(_))));
        assert!(simulate_mps(&Circuit::new(2), -0.1).is_err());
    }
}
