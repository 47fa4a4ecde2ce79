//! Seeded random unitaries, states, circuits, and observables for experiments and tests.

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::circuit::{Circuit, Gate, GridLayout, ProductObservable};
use crate::numerics::{identity, spectral_norm, ComplexMatrix};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-random unitary: QR of a complex Gaussian matrix with the phases of `R`'s diagonal removed.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(dim, dim, |_, _| gaussian(rng));
    let qr = g.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() == 0.0 { Complex64::new(1.0, 0.0) } else { d / d.norm() };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    q
}

/// Haar-random unit vector, distributed as the first column of a Haar unitary.
pub fn haar_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<Complex64> {
    let v: Vec<Complex64> = (0..dim).map(|_| gaussian(rng)).collect();
    let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|a| a / norm).collect()
}

/// Depth-`depth` circuit where each layer pairs a random matching of qubits with Haar
/// two-qubit gates; each pair is kept with probability `density`, leftovers get
/// Haar one-qubit gates.
pub fn random_circuit<R: Rng + ?Sized>(n: usize, depth: usize, density: f64, rng: &mut R) -> Circuit {
    let layers = (0..depth)
        .map(|_| {
            let mut qubits: Vec<usize> = (0..n).collect();
            qubits.shuffle(rng);
            let mut layer = Vec::new();
            let mut chunks = qubits.chunks(2);
            for pair in &mut chunks {
                if pair.len() == 2 && rng.random::<f64>() < density {
                    layer.push(Gate::two(pair[0], pair[1], haar_unitary(4, rng)));
                } else {
                    for &q in pair {
                        layer.push(Gate::one(q, haar_unitary(2, rng)));
                    }
                }
            }
            layer
        })
        .collect();
    Circuit::new(n, layers, None).expect("random circuit is valid")
}

/// 1D brickwork: layer `t` applies Haar gates on `(i, i+1)` for `i ≡ t (mod 2)`.
pub fn brickwork_circuit<R: Rng + ?Sized>(n: usize, depth: usize, rng: &mut R) -> Circuit {
    let layers = (0..depth)
        .map(|t| {
            (t % 2..n.saturating_sub(1))
                .step_by(2)
                .map(|i| Gate::two(i, i + 1, haar_unitary(4, rng)))
                .collect()
        })
        .collect();
    Circuit::new(n, layers, None).expect("brickwork circuit is valid")
}

/// Nearest-neighbor Haar gates on a grid; each layer is a random one of the four
/// brick patterns (horizontal or vertical bonds, even or odd offset).
pub fn grid_circuit<R: Rng + ?Sized>(rows: usize, cols: usize, depth: usize, rng: &mut R) -> Circuit {
    let layout = GridLayout::new(rows, cols);
    let layers = (0..depth)
        .map(|_| {
            let pattern = rng.random_range(0..4usize);
            let (vertical, offset) = (pattern / 2 == 1, pattern % 2);
            let mut layer = Vec::new();
            for r in 0..rows {
                for c in 0..cols {
                    let (along, limit) = if vertical { (r, rows) } else { (c, cols) };
                    if along % 2 != offset || along + 1 >= limit {
                        continue;
                    }
                    let (r2, c2) = if vertical { (r + 1, c) } else { (r, c + 1) };
                    layer.push(Gate::two(
                        layout.index(r, c),
                        layout.index(r2, c2),
                        haar_unitary(4, rng),
                    ));
                }
            }
            layer
        })
        .collect();
    Circuit::new(rows * cols, layers, Some(layout)).expect("grid circuit is valid")
}

/// 2x2 complex Gaussian matrix scaled to spectral norm 1.
pub fn random_unit_operator<R: Rng + ?Sized>(rng: &mut R) -> ComplexMatrix {
    let m = ComplexMatrix::from_fn(2, 2, |_, _| gaussian(rng));
    let s = spectral_norm(&m);
    m / Complex64::new(s, 0.0)
}

/// Hermitian 2x2 with eigenvalues `a, b`, in a Haar-random eigenbasis.
pub fn hermitian_with_spectrum<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> ComplexMatrix {
    let v = haar_unitary(2, rng);
    let mut d = ComplexMatrix::zeros(2, 2);
    d[(0, 0)] = Complex64::new(a, 0.0);
    d[(1, 1)] = Complex64::new(b, 0.0);
    let m = &v * d * v.adjoint();
    (&m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Hermitian, spectral norm exactly 1.
pub fn random_hermitian_unit<R: Rng + ?Sized>(rng: &mut R) -> ComplexMatrix {
    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
    hermitian_with_spectrum(sign, rng.random_range(-1.0..=1.0), rng)
}

/// Hermitian with eigenvalues in `[-1, 1]`.
pub fn random_hermitian_contraction<R: Rng + ?Sized>(rng: &mut R) -> ComplexMatrix {
    hermitian_with_spectrum(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0), rng)
}

/// Positive semidefinite, spectral norm exactly 1.
pub fn random_psd_unit<R: Rng + ?Sized>(rng: &mut R) -> ComplexMatrix {
    hermitian_with_spectrum(1.0, rng.random_range(0.0..=1.0), rng)
}

/// `I + γP` on every site with independent Hermitian unit-norm `P`.
pub fn near_identity_observable<R: Rng + ?Sized>(n: usize, gamma: f64, rng: &mut R) -> ProductObservable {
    let id = identity(2);
    ProductObservable::new(
        (0..n)
            .map(|_| &id + random_hermitian_unit(rng) * Complex64::new(gamma, 0.0))
            .collect(),
    )
    .expect("2x2 operators")
}

pub fn observable_from<R: Rng + ?Sized>(
    n: usize,
    rng: &mut R,
    site: impl Fn(&mut R) -> ComplexMatrix,
) -> ProductObservable {
    ProductObservable::new((0..n).map(|_| site(rng)).collect()).expect("2x2 operators")
}
