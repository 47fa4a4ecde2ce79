use crate::error::{Error, Result};
use crate::numerics::{identity, max_abs_deviation, pauli_z, spectral_norm, ComplexMatrix, TOL};

use super::c64;

/// Tensor product `O_0 ⊗ ... ⊗ O_{n-1}` of single-qubit operators.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductObservable {
    ops: Vec<ComplexMatrix>,
    norms: Vec<f64>,
    gamma: f64,
    hermitian: bool,
    psd: bool,
}

impl ProductObservable {
    pub fn new(ops: Vec<ComplexMatrix>) -> Result<Self> {
        for (j, op) in ops.iter().enumerate() {
            if op.shape() != (2, 2) {
                return Err(Error::Parse(format!("operator {j} is not 2x2")));
            }
            if !op.iter().all(|z| z.is_finite()) {
                return Err(Error::Parse(format!("operator {j} has non-finite entries")));
            }
        }
        let norms: Vec<f64> = ops.iter().map(spectral_norm).collect();
        let id = identity(2);
        let gamma = ops
            .iter()
            .map(|o| spectral_norm(&(o - &id)))
            .fold(0.0, f64::max);
        let hermitian = ops
            .iter()
            .all(|o| max_abs_deviation(o, &o.adjoint()) <= TOL.hermitian);
        let psd = hermitian && ops.iter().all(|o| min_eigenvalue_hermitian(o) >= -TOL.psd);
        Ok(Self {
            ops,
            norms,
            gamma,
            hermitian,
            psd,
        })
    }

    /// `I^{⊗n}`.
    pub fn identity(n: usize) -> Self {
        Self::new(vec![identity(2); n]).expect("identity is valid")
    }

    /// The same operator on every site.
    pub fn uniform(op: ComplexMatrix, n: usize) -> Result<Self> {
        Self::new(vec![op; n])
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn ops(&self) -> &[ComplexMatrix] {
        &self.ops
    }

    pub fn op(&self, j: usize) -> &ComplexMatrix {
        &self.ops[j]
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    /// `max_j ‖O_j − I‖`.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn is_psd(&self) -> bool {
        self.psd
    }

    pub fn max_norm(&self) -> f64 {
        self.norms.iter().copied().fold(0.0, f64::max)
    }

    /// `O(ε)` with sites `O_j(ε) = I + ε(O_j − I)`.
    pub fn at_eps(&self, eps: num_complex::Complex64) -> Self {
        let id = identity(2);
        Self::new(self.ops.iter().map(|o| &id + (o - &id) * eps).collect())
            .expect("shape preserved")
    }

    /// Operators on the listed sites, in that order.
    pub fn select(&self, sites: &[usize]) -> Self {
        Self::new(sites.iter().map(|&j| self.ops[j].clone()).collect()).expect("shape preserved")
    }

    /// Fails unless there is one operator per circuit qubit.
    pub fn check_len(&self, n: usize) -> Result<()> {
        if self.len() != n {
            return Err(Error::Layout(format!(
                "observable has {} sites, circuit has {n} qubits",
                self.len()
            )));
        }
        Ok(())
    }
}

fn min_eigenvalue_hermitian(o: &ComplexMatrix) -> f64 {
    let a = o[(0, 0)].re;
    let d = o[(1, 1)].re;
    let b = o[(0, 1)].norm();
    let mid = 0.5 * (a + d);
    let half = 0.5 * (a - d);
    mid - (half * half + b * b).sqrt()
}

/// Readout-noise observable: every site `I + (1 − 2p) Z`.
pub fn noisy_z_observable(p: f64, n: usize) -> Result<ProductObservable> {
    if !(0.0..=0.5).contains(&p) {
        return Err(Error::InvalidArgument(format!(
            "bit-flip rate {p} is outside [0, 1/2]"
        )));
    }
    let op = identity(2) + pauli_z() * c64(1.0 - 2.0 * p, 0.0);
    ProductObservable::uniform(op, n)
}
