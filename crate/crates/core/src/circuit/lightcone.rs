use fixedbitset::FixedBitSet;

use super::{Circuit, Gate};

/// Grows `set` by absorbing every gate that touches it, visiting layers in the given order.
fn sweep<'a>(layers: impl Iterator<Item = &'a Vec<Gate>>, set: &mut FixedBitSet) {
    for layer in layers {
        for gate in layer {
            if gate.qubits().iter().any(|&q| set.contains(q)) {
                for &q in gate.qubits() {
                    set.insert(q);
                }
            }
        }
    }
}

fn to_bits(n: usize, s: &[usize]) -> FixedBitSet {
    let mut bits = FixedBitSet::with_capacity(n);
    for &q in s {
        bits.insert(q);
    }
    bits
}

/// Lightcone of `s` sweeping layers front to back.
pub fn forward_lightcone(circuit: &Circuit, s: &[usize]) -> Vec<usize> {
    let mut bits = to_bits(circuit.n(), s);
    sweep(circuit.layers().iter(), &mut bits);
    bits.ones().collect()
}

/// Lightcone of `s` sweeping layers back to front.
///
/// This is the support of `U† A U` for `A` supported on `s`.
pub fn backward_lightcone(circuit: &Circuit, s: &[usize]) -> Vec<usize> {
    let mut bits = to_bits(circuit.n(), s);
    sweep(circuit.layers().iter().rev(), &mut bits);
    bits.ones().collect()
}

/// Single-qubit forward and backward lightcones; the cone of a set is the union over its members.
#[derive(Debug, Clone)]
pub struct QubitCones {
    n: usize,
    forward: Vec<FixedBitSet>,
    backward: Vec<FixedBitSet>,
}

impl QubitCones {
    pub fn new(circuit: &Circuit) -> Self {
        let n = circuit.n();
        let single = |q: usize, fwd: bool| {
            let mut bits = to_bits(n, &[q]);
            if fwd {
                sweep(circuit.layers().iter(), &mut bits);
            } else {
                sweep(circuit.layers().iter().rev(), &mut bits);
            }
            bits
        };
        Self {
            n,
            forward: (0..n).map(|q| single(q, true)).collect(),
            backward: (0..n).map(|q| single(q, false)).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn forward(&self, q: usize) -> &FixedBitSet {
        &self.forward[q]
    }

    pub fn backward(&self, q: usize) -> &FixedBitSet {
        &self.backward[q]
    }

    pub fn forward_of(&self, s: impl IntoIterator<Item = usize>) -> FixedBitSet {
        self.union(&self.forward, s)
    }

    pub fn backward_of(&self, s: impl IntoIterator<Item = usize>) -> FixedBitSet {
        self.union(&self.backward, s)
    }

    fn union(&self, cones: &[FixedBitSet], s: impl IntoIterator<Item = usize>) -> FixedBitSet {
        let mut out = FixedBitSet::with_capacity(self.n);
        for q in s {
            out.union_with(&cones[q]);
        }
        out
    }
}

/// Alternating iterated lightcones of every qubit up to level `c_max`.
///
/// `forward(j, c)` starts with a forward cone and alternates direction;
/// `backward(j, c)` starts with a backward cone.
#[derive(Debug, Clone)]
pub struct LightconeTable {
    forward: Vec<Vec<Vec<usize>>>,
    backward: Vec<Vec<Vec<usize>>>,
    ell: Vec<usize>,
}

impl LightconeTable {
    pub fn c_max(&self) -> usize {
        self.ell.len()
    }

    pub fn forward(&self, j: usize, c: usize) -> &[usize] {
        &self.forward[c - 1][j]
    }

    pub fn backward(&self, j: usize, c: usize) -> &[usize] {
        &self.backward[c - 1][j]
    }

    /// `ℓ_c`, the largest level-`c` cone over qubits and both directions (1 on an empty circuit).
    pub fn ell(&self, c: usize) -> usize {
        self.ell[c - 1]
    }
}

pub fn iterated_lightcones(circuit: &Circuit, c_max: usize) -> LightconeTable {
    assert!(c_max >= 1, "c_max must be at least 1");
    let cones = QubitCones::new(circuit);
    let n = circuit.n();
    let ladder = |start_forward: bool| -> Vec<Vec<Vec<usize>>> {
        let mut levels: Vec<Vec<Vec<usize>>> = Vec::with_capacity(c_max);
        for c in 1..=c_max {
            let fwd = start_forward == (c % 2 == 1);
            let level = (0..n)
                .map(|j| {
                    let prev: Vec<usize> = if c == 1 { vec![j] } else { levels[c - 2][j].clone() };
                    let bits = if fwd {
                        cones.forward_of(prev)
                    } else {
                        cones.backward_of(prev)
                    };
                    bits.ones().collect()
                })
                .collect();
            levels.push(level);
        }
        levels
    };
    let forward = ladder(true);
    let backward = ladder(false);
    let ell = (0..c_max)
        .map(|c| {
            forward[c]
                .iter()
                .chain(&backward[c])
                .map(Vec::len)
                .max()
                .unwrap_or(0)
                .max(1)
        })
        .collect();
    LightconeTable {
        forward,
        backward,
        ell,
    }
}

/// The gates supported inside `q`, relabeled onto `0..q.len()`.
///
/// Returns the restricted circuit and `map` with `map[new] = old`.
pub fn restrict_circuit(circuit: &Circuit, q: &[usize]) -> (Circuit, Vec<usize>) {
    let mut map: Vec<usize> = q.to_vec();
    map.sort_unstable();
    map.dedup();
    let mut relabel = vec![usize::MAX; circuit.n()];
    for (new, &old) in map.iter().enumerate() {
        relabel[old] = new;
    }
    let layers = circuit
        .layers()
        .iter()
        .map(|layer| {
            layer
                .iter()
                .filter(|g| g.qubits().iter().all(|&x| relabel[x] != usize::MAX))
                .map(|g| {
                    Gate::new(
                        g.qubits().iter().map(|&x| relabel[x]).collect(),
                        g.matrix().clone(),
                    )
                })
                .collect()
        })
        .collect();
    let restricted = Circuit {
        n: map.len(),
        layers,
        layout: None,
    };
    (restricted, map)
}
