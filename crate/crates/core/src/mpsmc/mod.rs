//! Mean values of shallow 2D grid circuits: conjugated observables are merged into
//! plaquette operators on a coarse-grained lattice, the two column-parity halves are
//! written as snake-ordered MPS, and their overlap is estimated by sampling.

mod mps;

use std::time::Instant;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::circuit::{backward_lightcone, restrict_circuit, Circuit, GridLayout, ProductObservable};
use crate::error::{Error, Result};
use crate::estimate::{Diagnostics, ErrorKind, MeanEstimate};
use crate::numerics::{ComplexMatrix, TOL};
use crate::oracle::{StateVector, DEFAULT_CAP};

pub use mps::{Mps, MpsSampler, SiteTensor};

/// Blocks of `2d × 2d` qubits; edge blocks are cut short when the grid side is not a multiple.
#[derive(Debug, Clone, PartialEq)]
pub struct SupersiteLattice {
    layout: GridLayout,
    d: usize,
    rows: usize,
    cols: usize,
    /// Qubits of supersite `I * cols + J`, row-major.
    blocks: Vec<Vec<usize>>,
}

impl SupersiteLattice {
    pub fn new(layout: GridLayout, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("block depth d must be at least 1".into()));
        }
        let b = 2 * d;
        let rows = layout.rows.div_ceil(b);
        let cols = layout.cols.div_ceil(b);
        let mut blocks = vec![Vec::new(); rows * cols];
        for r in 0..layout.rows {
            for c in 0..layout.cols {
                blocks[(r / b) * cols + c / b].push(layout.index(r, c));
            }
        }
        Ok(Self { layout, d, rows, cols, blocks })
    }

    pub fn layout(&self) -> GridLayout {
        self.layout
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// `(rows, cols)` of supersites.
    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn block_size(&self) -> usize {
        2 * self.d
    }

    pub fn qubits(&self, i: usize, j: usize) -> &[usize] {
        &self.blocks[i * self.cols + j]
    }

    pub fn phys_dim(&self, i: usize, j: usize) -> usize {
        1 << self.qubits(i, j).len()
    }

    /// `D = 2^{(2d)²}`, saturating.
    pub fn full_dim(&self) -> usize {
        let area = (2 * self.d).pow(2);
        if area >= usize::BITS as usize {
            usize::MAX
        } else {
            1 << area
        }
    }

    /// `D³`, saturating.
    pub fn bond_bound(&self) -> usize {
        let d = self.full_dim();
        d.saturating_mul(d).saturating_mul(d)
    }

    pub fn site_of(&self, q: usize) -> (usize, usize) {
        let (r, c) = self.layout.coords(q);
        (r / self.block_size(), c / self.block_size())
    }

    /// Plaquette grid size; a single-supersite direction yields one plaquette.
    pub fn plaquette_dims(&self) -> (usize, usize) {
        (self.rows.saturating_sub(1).max(1), self.cols.saturating_sub(1).max(1))
    }

    /// All plaquettes in lexicographic order.
    pub fn plaquettes(&self) -> Vec<(usize, usize)> {
        let (pr, pc) = self.plaquette_dims();
        (0..pr).flat_map(|i| (0..pc).map(move |j| (i, j))).collect()
    }

    /// Supersites `{i, i+1} × {j, j+1}` inside the lattice.
    pub fn plaquette_sites(&self, i: usize, j: usize) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(4);
        for a in i..(i + 2).min(self.rows) {
            for b in j..(j + 2).min(self.cols) {
                out.push((a, b));
            }
        }
        out
    }

    pub fn plaquette_contains(&self, (i, j): (usize, usize), q: usize) -> bool {
        let (a, b) = self.site_of(q);
        (i..i + 2).contains(&a) && (j..j + 2).contains(&b)
    }

    /// Supersite columns grouped into strips for parity `b`.
    ///
    /// Parity 1 pairs `[0,1], [2,3], …`; parity 0 starts with `[0]` then `[1,2], …`.
    /// An unpaired final column is a strip on its own.
    pub fn strips(&self, b: u8) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut c = 0;
        if b == 0 && self.cols > 1 {
            out.push(vec![0]);
            c = 1;
        }
        while c < self.cols {
            if c + 1 < self.cols {
                out.push(vec![c, c + 1]);
            } else {
                out.push(vec![c]);
            }
            c += 2;
        }
        out
    }

    /// Supersites of a strip: down the first column, then up the second.
    pub fn snake(&self, strip: &[usize]) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = (0..self.rows).map(|i| (i, strip[0])).collect();
        if let Some(&c) = strip.get(1) {
            out.extend((0..self.rows).rev().map(|i| (i, c)));
        }
        out
    }

    /// Supersite order of the full parity-`b` MPS.
    pub fn snake_order(&self, b: u8) -> Vec<(usize, usize)> {
        self.strips(b).iter().flat_map(|s| self.snake(s)).collect()
    }

    /// Qubits in MPS order for parity `b`.
    pub fn qubit_order(&self, b: u8) -> Vec<usize> {
        self.snake_order(b)
            .into_iter()
            .flat_map(|(i, j)| self.qubits(i, j).to_vec())
            .collect()
    }
}

/// Coarse-grains a grid circuit of depth at most `d`.
pub fn coarse_grain(circuit: &Circuit, d: usize) -> Result<SupersiteLattice> {
    let layout = circuit
        .layout()
        .ok_or_else(|| Error::CoarseGrain("circuit has no grid layout".into()))?;
    if circuit.depth() > d {
        return Err(Error::CoarseGrain(format!(
            "circuit depth {} exceeds block depth {d}",
            circuit.depth()
        )));
    }
    let lattice = SupersiteLattice::new(layout, d)?;
    for s in 0..circuit.n() {
        let cone = backward_lightcone(circuit, &[s]);
        if !lattice
            .plaquettes()
            .into_iter()
            .any(|p| cone.iter().all(|&q| lattice.plaquette_contains(p, q)))
        {
            return Err(Error::CoarseGrain(format!("lightcone of qubit {s} escapes every plaquette")));
        }
    }
    Ok(lattice)
}

/// `Q_s = U†(O_s ⊗ I)U` restricted to its support.
#[derive(Debug, Clone, PartialEq)]
pub struct ConjugatedObservable {
    pub site: usize,
    /// Backward lightcone of `site`, ascending; first entry is the most significant bit.
    pub support: Vec<usize>,
    pub matrix: ComplexMatrix,
}

pub fn conjugated_observable(circuit: &Circuit, obs: &ProductObservable, s: usize) -> ConjugatedObservable {
    let support = backward_lightcone(circuit, &[s]);
    let (restricted, _) = restrict_circuit(circuit, &support);
    let k = support.len();
    let local = support.binary_search(&s).expect("site lies in its own lightcone");
    let inverse = restricted.inverse();
    let dim = 1 << k;
    let mut matrix = ComplexMatrix::zeros(dim, dim);
    for z in 0..dim {
        let mut v = StateVector::basis(k, z);
        v.apply_circuit(&restricted);
        v.apply_one(local, obs.op(s));
        v.apply_circuit(&inverse);
        for (r, a) in v.amplitudes().iter().enumerate() {
            matrix[(r, z)] = *a;
        }
    }
    ConjugatedObservable { site: s, support, matrix }
}

/// Product of the `Q_s` assigned to plaquette `coords`.
///
/// Kept as a list of factors; the dense operator on four supersites is too large to form.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaquetteOperator {
    pub coords: (usize, usize),
    pub factors: Vec<ConjugatedObservable>,
}

impl PlaquetteOperator {
    /// Applies every factor to a dense state.
    pub fn apply_dense(&self, state: &mut StateVector) {
        for f in &self.factors {
            state.apply_dense(&f.support, &f.matrix);
        }
    }
}

/// Assigns each qubit to the lexicographically smallest plaquette covering its support.
pub fn assign_plaquettes(
    lattice: &SupersiteLattice,
    supports: &[Vec<usize>],
) -> Result<Vec<((usize, usize), Vec<usize>)>> {
    let plaquettes = lattice.plaquettes();
    let mut out: Vec<((usize, usize), Vec<usize>)> = plaquettes.iter().map(|&p| (p, Vec::new())).collect();
    for (s, support) in supports.iter().enumerate() {
        let k = plaquettes
            .iter()
            .position(|&p| support.iter().all(|&q| lattice.plaquette_contains(p, q)))
            .ok_or_else(|| Error::CoarseGrain(format!("support of Q_{s} lies in no plaquette")))?;
        out[k].1.push(s);
    }
    Ok(out)
}

/// Conjugated observables grouped by plaquette.
pub fn plaquette_operators(
    circuit: &Circuit,
    obs: &ProductObservable,
    lattice: &SupersiteLattice,
) -> Result<Vec<PlaquetteOperator>> {
    obs.check_len(circuit.n())?;
    let qs: Vec<ConjugatedObservable> = (0..circuit.n())
        .map(|s| conjugated_observable(circuit, obs, s))
        .collect();
    let supports: Vec<Vec<usize>> = qs.iter().map(|q| q.support.clone()).collect();
    let assignment = assign_plaquettes(lattice, &supports)?;
    Ok(assignment
        .into_iter()
        .map(|(coords, sites)| PlaquetteOperator {
            coords,
            factors: sites.into_iter().map(|s| qs[s].clone()).collect(),
        })
        .collect())
}

/// Plaquette column `j` belongs to parity `b` when `j` is even for `b = 1`, odd for `b = 0`.
fn parity_of(j: usize) -> u8 {
    if j.is_multiple_of(2) {
        1
    } else {
        0
    }
}

/// `Ψ_b` as a supersite MPS in snake order.
#[derive(Debug, Clone, PartialEq)]
pub struct SnakeOrderedMps {
    pub parity: u8,
    pub mps: Mps,
    /// Supersite at each MPS site.
    pub order: Vec<(usize, usize)>,
    /// Qubits in MPS order, row-major within each supersite.
    pub qubit_order: Vec<usize>,
    /// `‖Ψ_b‖`.
    pub gamma: f64,
}

impl SnakeOrderedMps {
    pub fn n(&self) -> usize {
        self.qubit_order.len()
    }

    /// Supersite string of the qubit assignment `bits[q]`.
    pub fn encode(&self, lattice: &SupersiteLattice, bits: &[u8]) -> Vec<usize> {
        self.order
            .iter()
            .map(|&(i, j)| {
                lattice
                    .qubits(i, j)
                    .iter()
                    .fold(0usize, |acc, &q| acc << 1 | bits[q] as usize)
            })
            .collect()
    }

    /// Qubit assignment of a supersite string.
    pub fn decode(&self, lattice: &SupersiteLattice, x: &[usize]) -> Vec<u8> {
        let mut bits = vec![0u8; self.n()];
        for (&(i, j), &v) in self.order.iter().zip(x) {
            let qs = lattice.qubits(i, j);
            for (k, &q) in qs.iter().enumerate() {
                bits[q] = (v >> (qs.len() - 1 - k) & 1) as u8;
            }
        }
        bits
    }
}

/// `Ψ_b = ∏_{(i,j): parity(j) = b} Q_{i,j} |0ⁿ⟩`.
pub fn build_parity_state(
    lattice: &SupersiteLattice,
    plaquettes: &[PlaquetteOperator],
    b: u8,
) -> Result<SnakeOrderedMps> {
    assert!(b <= 1);
    let mut full: Option<Mps> = None;
    let mut order = Vec::new();
    for strip in lattice.strips(b) {
        let snake = lattice.snake(&strip);
        let qubits: Vec<usize> = snake.iter().flat_map(|&(i, j)| lattice.qubits(i, j).to_vec()).collect();
        let mut position = vec![usize::MAX; lattice.layout().len()];
        for (p, &q) in qubits.iter().enumerate() {
            position[q] = p;
        }
        let mut chain = Mps::zero_state(&vec![2; qubits.len()]);
        for op in plaquettes
            .iter()
            .filter(|op| parity_of(op.coords.1) == b && strip[0] == op.coords.1)
        {
            for f in &op.factors {
                let mut idx: Vec<usize> = (0..f.support.len()).collect();
                idx.sort_by_key(|&k| position[f.support[k]]);
                let positions: Vec<usize> = idx.iter().map(|&k| position[f.support[k]]).collect();
                assert!(positions.iter().all(|&p| p != usize::MAX), "factor leaves its strip");
                let m = permute_operator(&f.matrix, &idx);
                chain.apply_operator(&positions, &m, TOL.svd_cutoff);
            }
        }
        let groups: Vec<usize> = snake.iter().map(|&(i, j)| lattice.qubits(i, j).len()).collect();
        let merged = chain.merge(&groups);
        let offset = order.len();
        for (k, bond) in merged.bond_dims().into_iter().enumerate() {
            if bond > lattice.bond_bound() {
                return Err(Error::BondBound {
                    cut: offset + k,
                    bond,
                    bound: lattice.bond_bound(),
                });
            }
        }
        order.extend(snake);
        match full.as_mut() {
            Some(m) => m.append(merged),
            None => full = Some(merged),
        }
    }
    let mps = full.expect("lattice has at least one strip");
    let gamma = mps.norm();
    let qubit_order = order.iter().flat_map(|&(i, j)| lattice.qubits(i, j).to_vec()).collect();
    Ok(SnakeOrderedMps {
        parity: b,
        mps,
        order,
        qubit_order,
        gamma,
    })
}

/// Reorders the qubits of an operator: new qubit `k` is old qubit `idx[k]`.
fn permute_operator(m: &ComplexMatrix, idx: &[usize]) -> ComplexMatrix {
    let k = idx.len();
    if idx.iter().enumerate().all(|(a, &b)| a == b) {
        return m.clone();
    }
    let map = |z: usize| {
        (0..k).fold(0usize, |acc, new| {
            let bit = z >> (k - 1 - new) & 1;
            acc | bit << (k - 1 - idx[new])
        })
    };
    let dim = 1 << k;
    ComplexMatrix::from_fn(dim, dim, |r, c| m[(map(r), map(c))])
}

/// Qubit permutation between two MPS orders: position `k` of `to` holds the qubit at
/// position `perm[k]` of `from`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderMap {
    pub perm: Vec<usize>,
}

impl OrderMap {
    pub fn between(from: &[usize], to: &[usize]) -> Self {
        let mut pos = vec![usize::MAX; from.len()];
        for (k, &q) in from.iter().enumerate() {
            pos[q] = k;
        }
        Self {
            perm: to.iter().map(|&q| pos[q]).collect(),
        }
    }

    pub fn is_bijection(&self) -> bool {
        let mut seen = vec![false; self.perm.len()];
        self.perm
            .iter()
            .all(|&p| p < seen.len() && !std::mem::replace(&mut seen[p], true))
    }

    /// Maps a dense index in the `from` order to the `to` order.
    pub fn apply_index(&self, z: usize) -> usize {
        let n = self.perm.len();
        self.perm
            .iter()
            .fold(0usize, |acc, &p| acc << 1 | (z >> (n - 1 - p) & 1))
    }
}

/// One draw from `π(x) = |⟨x|ψ⟩|²/⟨ψ|ψ⟩` and its probability.
pub fn mps_sample(mps: &Mps, rng: &mut ChaCha8Rng) -> (Vec<usize>, f64) {
    MpsSampler::new(mps).sample(rng)
}

pub fn mps_amplitude(mps: &Mps, x: &[usize]) -> Complex64 {
    mps.amplitude(x)
}

/// `⟨Ψ₀|W|Ψ₁⟩` by densifying both states.
pub fn exact_overlap(psi0: &SnakeOrderedMps, psi1: &SnakeOrderedMps, w: &OrderMap, cap: usize) -> Result<Complex64> {
    let n = psi0.n();
    if n > cap {
        return Err(Error::CapExceeded { n, cap });
    }
    let a = psi0.mps.to_dense();
    let b = psi1.mps.to_dense();
    // b is indexed in psi1's order; bring it to psi0's order.
    let back = OrderMap::between(&psi1.qubit_order, &psi0.qubit_order);
    debug_assert_eq!(w.perm.len(), n);
    let mut sum = Complex64::new(0.0, 0.0);
    for (z, bz) in b.iter().enumerate() {
        sum += a[back.apply_index(z)].conj() * bz;
    }
    Ok(sum)
}

/// Lattice, plaquette operators and both parity states for a grid circuit.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub lattice: SupersiteLattice,
    pub plaquettes: Vec<PlaquetteOperator>,
    pub psi0: SnakeOrderedMps,
    pub psi1: SnakeOrderedMps,
    pub w: OrderMap,
}

impl Decomposition {
    pub fn max_bond(&self) -> usize {
        self.psi0.mps.max_bond().max(self.psi1.mps.max_bond())
    }

    /// `F(x) = γ₀ γ₁ ⟨x|W|Φ₁⟩/⟨x|Φ₀⟩` for a string `x` of `Ψ₀`'s sites.
    pub fn estimator(&self, x: &[usize]) -> Complex64 {
        let bits = self.psi0.decode(&self.lattice, x);
        let y = self.psi1.encode(&self.lattice, &bits);
        let num = self.psi1.mps.amplitude(&y);
        let den = self.psi0.mps.amplitude(x);
        // γ₀γ₁ ⟨x|Φ₁⟩/⟨x|Φ₀⟩ = γ₀² ⟨x|Ψ₁⟩/⟨x|Ψ₀⟩
        num / den * self.psi0.gamma * self.psi0.gamma
    }
}

pub fn decompose(circuit: &Circuit, obs: &ProductObservable) -> Result<Decomposition> {
    let lattice = coarse_grain(circuit, circuit.depth().max(1))?;
    let plaquettes = plaquette_operators(circuit, obs, &lattice)?;
    let psi0 = build_parity_state(&lattice, &plaquettes, 0)?;
    let psi1 = build_parity_state(&lattice, &plaquettes, 1)?;
    let w = OrderMap::between(&psi0.qubit_order, &psi1.qubit_order);
    Ok(Decomposition {
        lattice,
        plaquettes,
        psi0,
        psi1,
        w,
    })
}

/// `⌈3/δ²⌉`.
pub fn sample_count(delta: f64) -> usize {
    (3.0 / (delta * delta) - 1e-9).ceil() as usize
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub delta: f64,
    pub seed: u64,
    /// Replaces `⌈3/δ²⌉` when set.
    pub samples: Option<usize>,
}

impl McConfig {
    pub fn new(delta: f64, seed: u64) -> Self {
        Self { delta, seed, samples: None }
    }
}

/// Neumaier-compensated complex sum.
fn compensated(xs: &[Complex64]) -> Complex64 {
    let part = |f: fn(&Complex64) -> f64| {
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        for x in xs.iter().map(f) {
            let t = sum + x;
            comp += if sum.abs() >= x.abs() { (sum - t) + x } else { (x - t) + sum };
            sum = t;
        }
        sum + comp
    };
    Complex64::new(part(|c| c.re), part(|c| c.im))
}

/// Monte-Carlo estimate of `μ` within `δ` with probability at least 2/3.
pub fn mc_estimate(circuit: &Circuit, obs: &ProductObservable, config: &McConfig) -> Result<MeanEstimate> {
    let start = Instant::now();
    let delta = config.delta;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("delta = {delta} must lie in (0, 1)")));
    }
    obs.check_len(circuit.n())?;
    if !obs.is_hermitian() {
        return Err(Error::InvalidArgument("observable must be Hermitian".into()));
    }
    if obs.max_norm() > 1.0 + TOL.norm {
        return Err(Error::InvalidArgument(format!(
            "max ||O_j|| = {} exceeds 1",
            obs.max_norm()
        )));
    }
    let dec = decompose(circuit, obs)?;
    let samples = config.samples.unwrap_or_else(|| sample_count(delta));
    if samples == 0 {
        return Err(Error::InvalidArgument("sample count must be positive".into()));
    }
    let (g0, g1) = (dec.psi0.gamma, dec.psi1.gamma);
    let values: Vec<Complex64> = if g0 == 0.0 || g1 == 0.0 {
        vec![Complex64::new(0.0, 0.0); samples]
    } else {
        let mut phi0 = dec.psi0.mps.clone();
        phi0.scale(Complex64::new(1.0 / g0, 0.0));
        let sampler = MpsSampler::new(&phi0);
        (0..samples)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                rng.set_stream(i as u64);
                let (x, _) = sampler.sample(&mut rng);
                dec.estimator(&x)
            })
            .collect()
    };
    let mean = compensated(&values) / samples as f64;
    let variance = if samples > 1 {
        let dev: Vec<Complex64> = values
            .iter()
            .map(|v| Complex64::new((v - mean).norm_sqr(), 0.0))
            .collect();
        compensated(&dev).re / (samples - 1) as f64
    } else {
        0.0
    };
    let diagnostics = Diagnostics {
        sample_count: Some(samples),
        variance: Some(variance),
        gamma0: Some(g0),
        gamma1: Some(g1),
        max_bond: Some(dec.max_bond()),
        bond_bound: Some(dec.lattice.bond_bound()),
        runtime: start.elapsed(),
        ..Diagnostics::default()
    };
    Ok(MeanEstimate::new(mean, ErrorKind::Additive, delta, 2.0 / 3.0).with_diagnostics(diagnostics))
}

/// `⟨Ψ₀|W|Ψ₁⟩` for a grid circuit under the default dense cap.
pub fn exact_overlap_for(circuit: &Circuit, obs: &ProductObservable) -> Result<Complex64> {
    let dec = decompose(circuit, obs)?;
    exact_overlap(&dec.psi0, &dec.psi1, &dec.w, DEFAULT_CAP)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::pauli_z;
    use crate::oracle::{mean_value_exact, mean_value_exact_with_cap, run_circuit};
    use crate::random::{grid_circuit, observable_from, random_hermitian_contraction};

    fn hermitian_obs(n: usize, seed: u64) -> ProductObservable {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        observable_from(n, &mut rng, random_hermitian_contraction)
    }

    fn grid(rows: usize, cols: usize, depth: usize, seed: u64) -> Circuit {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        grid_circuit(rows, cols, depth, &mut rng)
    }

    #[test]
    fn lattice_shapes() {
        let l = SupersiteLattice::new(GridLayout::new(4, 4), 1).unwrap();
        assert_eq!(l.dims(), (2, 2));
        assert_eq!(l.full_dim(), 16);
        assert_eq!(l.plaquettes(), vec![(0, 0)]);
        assert_eq!(l.qubits(1, 0), &[8, 9, 12, 13]);
        let l = SupersiteLattice::new(GridLayout::new(8, 8), 1).unwrap();
        assert_eq!(l.dims(), (4, 4));
        assert_eq!(l.bond_bound(), 4096);
        let l = SupersiteLattice::new(GridLayout::new(8, 8), 2).unwrap();
        assert_eq!(l.dims(), (2, 2));
        assert_eq!(l.full_dim(), 1 << 16);
        let l = SupersiteLattice::new(GridLayout::new(4, 5), 1).unwrap();
        assert_eq!(l.dims(), (2, 3));
        assert_eq!(l.phys_dim(0, 2), 4);
        assert_eq!(l.strips(1), vec![vec![0, 1], vec![2]]);
        assert_eq!(l.strips(0), vec![vec![0], vec![1, 2]]);
        assert_eq!(l.snake(&[1, 2]), vec![(0, 1), (1, 1), (1, 2), (0, 2)]);
    }

    #[test]
    fn blocks_partition_grid() {
        for (r, c, d) in [(4, 4, 1), (5, 7, 1), (8, 8, 2), (3, 9, 2), (1, 8, 1)] {
            let l = SupersiteLattice::new(GridLayout::new(r, c), d).unwrap();
            let mut seen = vec![0; r * c];
            let (lr, lc) = l.dims();
            for i in 0..lr {
                for j in 0..lc {
                    for &q in l.qubits(i, j) {
                        seen[q] += 1;
                        assert_eq!(l.site_of(q), (i, j));
                    }
                }
            }
            assert!(seen.iter().all(|&k| k == 1));
            for b in 0..2 {
                let mut order = l.qubit_order(b);
                order.sort_unstable();
                assert_eq!(order, (0..r * c).collect::<Vec<_>>());
            }
        }
    }

    #[test]
    fn coarse_grain_requires_layout_and_depth() {
        let c = grid(4, 4, 2, 1);
        assert!(matches!(coarse_grain(&c, 1), Err(Error::CoarseGrain(_))));
        assert!(coarse_grain(&c, 2).is_ok());
        assert!(matches!(coarse_grain(&Circuit::identity(4), 1), Err(Error::CoarseGrain(_))));
    }

    #[test]
    fn conjugated_observable_matches_dense() {
        let c = grid(3, 3, 2, 2);
        let obs = hermitian_obs(9, 3);
        let psi = run_circuit(&c).unwrap();
        for s in 0..9 {
            let q = conjugated_observable(&c, &obs, s);
            let mut lhs = psi.clone();
            lhs.apply_dense(&q.support, &q.matrix);
            // U†(O_s)U applied to |ψ⟩
            let mut rhs = psi.clone();
            rhs.apply_circuit(&c);
            rhs.apply_one(s, obs.op(s));
            rhs.apply_circuit(&c.inverse());
            for (a, b) in lhs.amplitudes().iter().zip(rhs.amplitudes()) {
                assert!((a - b).norm() < 1e-12);
            }
        }
        let q = conjugated_observable(&Circuit::identity(3), &obs.select(&[0, 1, 2]), 1);
        assert_eq!(q.support, vec![1]);
        assert_eq!(&q.matrix, obs.op(1));
    }

    #[test]
    fn assignment_prefers_smallest_plaquette() {
        let l = SupersiteLattice::new(GridLayout::new(6, 6), 1).unwrap();
        let supports: Vec<Vec<usize>> = (0..36).map(|q| vec![q]).collect();
        let a = assign_plaquettes(&l, &supports).unwrap();
        let total: usize = a.iter().map(|(_, s)| s.len()).sum();
        assert_eq!(total, 36);
        // qubit 14 = (2,2) sits in supersite (1,1), first covered by plaquette (0,0)
        assert!(a[0].1.contains(&14));
        // qubit 35 = (5,5) sits in supersite (2,2): only plaquette (1,1)
        assert!(a.iter().find(|(p, _)| *p == (1, 1)).unwrap().1.contains(&35));
        let bad = vec![vec![0, 35]];
        assert!(assign_plaquettes(&l, &bad).is_err());
        let l44 = SupersiteLattice::new(GridLayout::new(4, 4), 1).unwrap();
        let a = assign_plaquettes(&l44, &(0..16).map(|q| vec![q]).collect::<Vec<_>>()).unwrap();
        assert_eq!(a.len(), 1);
        assert_eq!(a[0].1.len(), 16);
    }

    #[test]
    fn plaquette_products_match_qubit_products() {
        let c = grid(4, 4, 1, 4);
        let obs = hermitian_obs(16, 5);
        let l = coarse_grain(&c, 1).unwrap();
        let ops = plaquette_operators(&c, &obs, &l).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let start = StateVector::from_amplitudes(16, crate::random::haar_state(1 << 16, &mut rng)).unwrap();
        let mut a = start.clone();
        ops.iter().for_each(|p| p.apply_dense(&mut a));
        let mut b = start;
        for s in 0..16 {
            let q = conjugated_observable(&c, &obs, s);
            b.apply_dense(&q.support, &q.matrix);
        }
        for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    fn dense_parity_state(lattice: &SupersiteLattice, ops: &[PlaquetteOperator], b: u8) -> StateVector {
        let mut s = StateVector::zero(lattice.layout().len());
        for op in ops.iter().filter(|op| parity_of(op.coords.1) == b) {
            op.apply_dense(&mut s);
        }
        s
    }

    #[test]
    fn parity_states_match_dense_definition() {
        for (rows, cols, seed) in [(4, 4, 7), (4, 5, 8), (2, 5, 9), (1, 8, 10)] {
            let c = grid(rows, cols, 1, seed);
            let obs = hermitian_obs(rows * cols, seed + 100);
            let dec = decompose(&c, &obs).unwrap();
            for psi in [&dec.psi0, &dec.psi1] {
                let dense = dense_parity_state(&dec.lattice, &dec.plaquettes, psi.parity);
                let mps = psi.mps.to_dense();
                let to_natural = OrderMap::between(&psi.qubit_order, &(0..rows * cols).collect::<Vec<_>>());
                for (z, a) in mps.iter().enumerate() {
                    assert!((a - dense.amplitude(to_natural.apply_index(z))).norm() < 1e-10);
                }
                assert!((psi.gamma - dense.norm()).abs() < 1e-10);
                assert!(psi.gamma <= 1.0 + 1e-10);
                assert!(psi.mps.max_bond() <= dec.lattice.bond_bound());
            }
        }
    }

    #[test]
    fn overlap_equals_mean() {
        for (rows, cols, seed) in [(4, 4, 11), (4, 5, 12), (2, 5, 13), (1, 8, 14)] {
            let c = grid(rows, cols, 1, seed);
            let obs = hermitian_obs(rows * cols, seed + 100);
            let mu = mean_value_exact(&c, &obs, None).unwrap();
            let ov = exact_overlap_for(&c, &obs).unwrap();
            assert!((mu - ov).norm() < 1e-10, "{rows}x{cols}: {mu} vs {ov}");
        }
    }

    #[test]
    fn overlap_on_depth_two() {
        let c = grid(4, 5, 2, 15);
        let obs = hermitian_obs(20, 16);
        let dec = decompose(&c, &obs).unwrap();
        let mu = mean_value_exact(&c, &obs, None).unwrap();
        let ov = exact_overlap(&dec.psi0, &dec.psi1, &dec.w, 20).unwrap();
        assert!((mu - ov).norm() < 1e-10);
    }

    #[test]
    fn overlap_on_four_by_six() {
        let c = grid(4, 6, 1, 17);
        let obs = hermitian_obs(24, 18);
        let dec = decompose(&c, &obs).unwrap();
        let mu = mean_value_exact_with_cap(&c, &obs, None, 24).unwrap();
        let ov = exact_overlap(&dec.psi0, &dec.psi1, &dec.w, 24).unwrap();
        assert!((mu - ov).norm() < 1e-10);
    }

    #[test]
    fn estimator_is_unbiased_by_enumeration() {
        for (rows, cols, seed) in [(2, 4, 19), (1, 8, 20), (2, 3, 21)] {
            let c = grid(rows, cols, 1, seed);
            let obs = hermitian_obs(rows * cols, seed + 100);
            let dec = decompose(&c, &obs).unwrap();
            let mu = mean_value_exact(&c, &obs, None).unwrap();
            let g0 = dec.psi0.gamma;
            let dims = dec.psi0.mps.phys_dims();
            let total: usize = dims.iter().product();
            let mut acc = Complex64::new(0.0, 0.0);
            for flat in 0..total {
                let mut x = vec![0; dims.len()];
                let mut rem = flat;
                for k in (0..dims.len()).rev() {
                    x[k] = rem % dims[k];
                    rem /= dims[k];
                }
                let amp = dec.psi0.mps.amplitude(&x);
                let pi = amp.norm_sqr() / (g0 * g0);
                if pi > 0.0 {
                    acc += dec.estimator(&x) * pi;
                }
            }
            assert!((acc - mu).norm() < 1e-10, "{rows}x{cols}");
        }
    }

    #[test]
    fn trivial_observables_are_exact() {
        let c = grid(4, 4, 1, 22);
        let id = ProductObservable::identity(16);
        let e = mc_estimate(&c, &id, &McConfig::new(0.1, 1)).unwrap();
        assert!((e.value - 1.0).norm() < 1e-12);
        let z = ProductObservable::uniform(pauli_z(), 16).unwrap();
        let ident = Circuit::new(16, vec![], Some(GridLayout::new(4, 4))).unwrap();
        let e = mc_estimate(&ident, &z, &McConfig::new(0.1, 1)).unwrap();
        assert!((e.value - 1.0).norm() < 1e-12);
        assert_eq!(e.diagnostics.max_bond, Some(1));
    }

    #[test]
    fn sample_counts() {
        assert_eq!(sample_count(0.05), 1200);
        assert_eq!(sample_count(0.1), 300);
        assert_eq!(sample_count(0.3), 34);
    }

    #[test]
    fn estimate_is_reproducible_and_close() {
        let c = grid(4, 5, 1, 23);
        let obs = hermitian_obs(20, 24);
        let cfg = McConfig::new(0.05, 9);
        let a = mc_estimate(&c, &obs, &cfg).unwrap();
        let b = mc_estimate(&c, &obs, &cfg).unwrap();
        assert_eq!(a.value, b.value);
        assert_eq!(a.diagnostics.sample_count, Some(1200));
        let var = a.diagnostics.variance.unwrap();
        assert!(var <= 1.0 + 5.0 / 1200f64.sqrt());
        let mu = mean_value_exact(&c, &obs, None).unwrap();
        // 4σ band: σ ≤ 1/√1200
        assert!((a.value - mu).norm() <= 4.0 / 1200f64.sqrt());
    }

    #[test]
    fn rejects_bad_inputs() {
        let c = grid(2, 2, 1, 25);
        let obs = hermitian_obs(4, 26);
        assert!(mc_estimate(&c, &obs, &McConfig::new(0.0, 0)).is_err());
        assert!(mc_estimate(&c, &obs, &McConfig::new(1.0, 0)).is_err());
        let mut raising = ComplexMatrix::zeros(2, 2);
        raising[(0, 1)] = Complex64::new(1.0, 0.0);
        let non_herm = ProductObservable::uniform(raising, 4).unwrap();
        assert!(!non_herm.is_hermitian());
        assert!(mc_estimate(&c, &non_herm, &McConfig::new(0.1, 0)).is_err());
    }

    #[test]
    fn order_map_is_bijection() {
        let l = SupersiteLattice::new(GridLayout::new(4, 6), 1).unwrap();
        let w = OrderMap::between(&l.qubit_order(0), &l.qubit_order(1));
        assert!(w.is_bijection());
        assert_ne!(l.qubit_order(0), l.qubit_order(1));
    }
}
