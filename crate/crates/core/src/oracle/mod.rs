//! Exact dense statevector simulation, the reference for every estimator.

use num_complex::Complex64;

use crate::circuit::{Circuit, Gate, ProductObservable};
use crate::error::{Error, Result};
use crate::numerics::{ComplexMatrix, ComplexPolynomial, TOL};

/// Largest qubit count simulated densely unless a caller raises it.
pub const DEFAULT_CAP: usize = 22;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// `2ⁿ` amplitudes; qubit 0 is the most significant bit of the basis index.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0ⁿ⟩`.
    pub fn zero(n: usize) -> Self {
        let mut amps = vec![ZERO; 1 << n];
        amps[0] = ONE;
        Self { n, amps }
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(n: usize, index: usize) -> Self {
        let mut amps = vec![ZERO; 1 << n];
        amps[index] = ONE;
        Self { n, amps }
    }

    pub fn from_amplitudes(n: usize, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != 1 << n {
            return Err(Error::InvalidArgument(format!(
                "{} amplitudes do not describe {n} qubits",
                amps.len()
            )));
        }
        Ok(Self { n, amps })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amps[index]
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// True when the norm is one up to accumulated rounding.
    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() <= 1e-12
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        assert_eq!(self.n, other.n);
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    fn mask(&self, q: usize) -> usize {
        1 << (self.n - 1 - q)
    }

    /// Applies a 2x2 matrix to qubit `q`.
    pub fn apply_one(&mut self, q: usize, m: &ComplexMatrix) {
        let mask = self.mask(q);
        let (m00, m01, m10, m11) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
        for i in 0..self.amps.len() {
            if i & mask != 0 {
                continue;
            }
            let a0 = self.amps[i];
            let a1 = self.amps[i | mask];
            self.amps[i] = m00 * a0 + m01 * a1;
            self.amps[i | mask] = m10 * a0 + m11 * a1;
        }
    }

    /// Applies a 4x4 matrix in the basis `|q0 q1⟩`.
    pub fn apply_two(&mut self, q0: usize, q1: usize, m: &ComplexMatrix) {
        let (ma, mb) = (self.mask(q0), self.mask(q1));
        let both = ma | mb;
        let mut g = [[ZERO; 4]; 4];
        for (r, row) in g.iter_mut().enumerate() {
            for (c, entry) in row.iter_mut().enumerate() {
                *entry = m[(r, c)];
            }
        }
        for i in 0..self.amps.len() {
            if i & both != 0 {
                continue;
            }
            let idx = [i, i | mb, i | ma, i | both];
            let v = idx.map(|k| self.amps[k]);
            for (r, &k) in idx.iter().enumerate() {
                self.amps[k] = g[r][0] * v[0] + g[r][1] * v[1] + g[r][2] * v[2] + g[r][3] * v[3];
            }
        }
    }

    /// Applies a `2^k × 2^k` matrix on `qubits`, the first listed qubit being the
    /// most significant bit of the matrix index.
    pub fn apply_dense(&mut self, qubits: &[usize], m: &ComplexMatrix) {
        let k = qubits.len();
        assert_eq!(m.shape(), (1 << k, 1 << k));
        let masks: Vec<usize> = qubits.iter().map(|&q| self.mask(q)).collect();
        let all = masks.iter().fold(0, |acc, m| acc | m);
        let offsets: Vec<usize> = (0..1usize << k)
            .map(|z| {
                (0..k)
                    .filter(|&j| z >> (k - 1 - j) & 1 == 1)
                    .fold(0, |acc, j| acc | masks[j])
            })
            .collect();
        let mut v = vec![ZERO; 1 << k];
        for i in 0..self.amps.len() {
            if i & all != 0 {
                continue;
            }
            for (z, off) in offsets.iter().enumerate() {
                v[z] = self.amps[i | off];
            }
            for (r, off) in offsets.iter().enumerate() {
                self.amps[i | off] = (0..v.len()).map(|c| m[(r, c)] * v[c]).sum();
            }
        }
    }

    pub fn apply_gate(&mut self, gate: &Gate) {
        match gate.qubits() {
            [q] => self.apply_one(*q, gate.matrix()),
            [q0, q1] => self.apply_two(*q0, *q1, gate.matrix()),
            _ => unreachable!("validated gates act on one or two qubits"),
        }
    }

    pub fn apply_circuit(&mut self, circuit: &Circuit) {
        assert_eq!(self.n, circuit.n());
        for layer in circuit.layers() {
            for gate in layer {
                self.apply_gate(gate);
            }
        }
    }

    /// Applies `∏_{j∈sites} O_j`, or every site when `sites` is `None`.
    pub fn apply_observable(&mut self, obs: &ProductObservable, sites: Option<&[usize]>) {
        match sites {
            Some(s) => s.iter().for_each(|&j| self.apply_one(j, obs.op(j))),
            None => (0..obs.len()).for_each(|j| self.apply_one(j, obs.op(j))),
        }
    }
}

fn check_cap(n: usize, cap: usize) -> Result<()> {
    if n > cap {
        return Err(Error::CapExceeded { n, cap });
    }
    Ok(())
}

/// `U|0ⁿ⟩` under the default cap.
pub fn run_circuit(circuit: &Circuit) -> Result<StateVector> {
    run_circuit_with_cap(circuit, DEFAULT_CAP)
}

pub fn run_circuit_with_cap(circuit: &Circuit, cap: usize) -> Result<StateVector> {
    check_cap(circuit.n(), cap)?;
    let mut state = StateVector::zero(circuit.n());
    state.apply_circuit(circuit);
    Ok(state)
}

/// `⟨0ⁿ|U†(∏_{j∈S}O_j)U|0ⁿ⟩`, with `S = [n]` when `subset` is `None`.
pub fn mean_value_exact(
    circuit: &Circuit,
    obs: &ProductObservable,
    subset: Option<&[usize]>,
) -> Result<Complex64> {
    mean_value_exact_with_cap(circuit, obs, subset, DEFAULT_CAP)
}

pub fn mean_value_exact_with_cap(
    circuit: &Circuit,
    obs: &ProductObservable,
    subset: Option<&[usize]>,
    cap: usize,
) -> Result<Complex64> {
    obs.check_len(circuit.n())?;
    let psi = run_circuit_with_cap(circuit, cap)?;
    let mut phi = psi.clone();
    phi.apply_observable(obs, subset);
    Ok(psi.inner(&phi))
}

/// Coefficients of `f(ε) = ⟨0ⁿ|U†O(ε)U|0ⁿ⟩`, degree at most `n`.
pub fn f_eps_coefficients(circuit: &Circuit, obs: &ProductObservable) -> Result<ComplexPolynomial> {
    obs.check_len(circuit.n())?;
    let psi = run_circuit(circuit)?;
    Ok(f_eps_from_state(&psi, obs))
}

/// Coefficients of `ε ↦ ⟨ψ|O(ε)|ψ⟩`.
///
/// The function is evaluated at the `(n+1)`-th roots of unity and inverted by a DFT.
pub fn f_eps_from_state(psi: &StateVector, obs: &ProductObservable) -> ComplexPolynomial {
    let points = psi.n() + 1;
    let omega = |k: usize| Complex64::from_polar(1.0, std::f64::consts::TAU * k as f64 / points as f64);
    let values: Vec<Complex64> = (0..points)
        .map(|k| {
            let mut phi = psi.clone();
            phi.apply_observable(&obs.at_eps(omega(k)), None);
            psi.inner(&phi)
        })
        .collect();
    let coeffs = (0..points)
        .map(|m| {
            let s: Complex64 = values
                .iter()
                .enumerate()
                .map(|(k, v)| v * omega((k * m) % points).conj())
                .sum();
            s / points as f64
        })
        .collect();
    ComplexPolynomial::new(coeffs)
}

/// `⟨0ⁿ|H^r|0ⁿ⟩` for `H = Σ_j U|1⟩⟨1|_j U†`.
///
/// With `φ = U†|0ⁿ⟩` this is `Σ_z |φ_z|² |z|^r`, `|z|` the Hamming weight.
pub fn h_moment_exact(circuit: &Circuit, r: u32) -> Result<f64> {
    check_cap(circuit.n(), DEFAULT_CAP)?;
    let mut phi = StateVector::zero(circuit.n());
    phi.apply_circuit(&circuit.inverse());
    Ok(phi
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(z, a)| a.norm_sqr() * (z.count_ones() as f64).powi(r as i32))
        .sum())
}

/// Checks `c_0 = 1` for a polynomial produced by [`f_eps_coefficients`].
pub fn constant_term_is_one(p: &ComplexPolynomial) -> bool {
    (p.coeff(0) - ONE).norm() <= 1e3 * TOL.norm
}
