//! Layered circuits of one- and two-qubit gates, their lightcones, and product observables.

mod io;
mod lightcone;
mod observable;

use std::collections::HashSet;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{unitarity_deviation, ComplexMatrix, TOL};

pub use io::{circuit_to_json, observable_to_json, parse_circuit, parse_observable};
pub use lightcone::{
    backward_lightcone, forward_lightcone, iterated_lightcones, restrict_circuit, LightconeTable,
    QubitCones,
};
pub use observable::{noisy_z_observable, ProductObservable};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateKind {
    OneQubit,
    TwoQubit,
}

/// A unitary on one qubit or an ordered pair of distinct qubits.
///
/// Two-qubit matrices are indexed in the basis `|q_first q_second⟩`,
/// i.e. row `2 a + b` for `q_first = a`, `q_second = b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    qubits: Vec<usize>,
    matrix: ComplexMatrix,
}

impl Gate {
    /// Builds a gate without checking unitarity; `Circuit::new` validates.
    pub fn new(qubits: Vec<usize>, matrix: ComplexMatrix) -> Self {
        Self { qubits, matrix }
    }

    pub fn one(q: usize, matrix: ComplexMatrix) -> Self {
        Self::new(vec![q], matrix)
    }

    pub fn two(q0: usize, q1: usize, matrix: ComplexMatrix) -> Self {
        Self::new(vec![q0, q1], matrix)
    }

    pub fn kind(&self) -> GateKind {
        if self.qubits.len() == 1 {
            GateKind::OneQubit
        } else {
            GateKind::TwoQubit
        }
    }

    pub fn qubits(&self) -> &[usize] {
        &self.qubits
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn acts_on(&self, q: usize) -> bool {
        self.qubits.contains(&q)
    }

    pub fn adjoint(&self) -> Self {
        Self::new(self.qubits.clone(), self.matrix.adjoint())
    }

    fn check(&self, n: usize, layer: usize, index: usize) -> Result<()> {
        let arity = self.qubits.len();
        if arity == 0 || arity > 2 {
            return Err(Error::InvalidGate {
                layer,
                reason: format!("gate {index} acts on {arity} qubits"),
            });
        }
        if let Some(&q) = self.qubits.iter().find(|&&q| q >= n) {
            return Err(Error::InvalidGate {
                layer,
                reason: format!("gate {index} uses qubit {q} but n = {n}"),
            });
        }
        if arity == 2 && self.qubits[0] == self.qubits[1] {
            return Err(Error::InvalidGate {
                layer,
                reason: format!("gate {index} repeats qubit {}", self.qubits[0]),
            });
        }
        let dim = 1 << arity;
        if self.matrix.shape() != (dim, dim) {
            return Err(Error::InvalidGate {
                layer,
                reason: format!(
                    "gate {index} has a {}x{} matrix, expected {dim}x{dim}",
                    self.matrix.nrows(),
                    self.matrix.ncols()
                ),
            });
        }
        if !self.matrix.iter().all(|z| z.is_finite()) {
            return Err(Error::InvalidGate {
                layer,
                reason: format!("gate {index} has non-finite entries"),
            });
        }
        let deviation = unitarity_deviation(&self.matrix);
        if deviation > TOL.unitarity {
            return Err(Error::NonUnitary {
                layer,
                gate: index,
                deviation,
            });
        }
        Ok(())
    }
}

/// Rectangular qubit arrangement, qubit index `row * cols + col`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridLayout {
    pub rows: usize,
    pub cols: usize,
}

impl GridLayout {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self { rows, cols }
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    pub fn coords(&self, q: usize) -> (usize, usize) {
        (q / self.cols, q % self.cols)
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        let (ra, ca) = self.coords(a);
        let (rb, cb) = self.coords(b);
        ra.abs_diff(rb) + ca.abs_diff(cb) == 1
    }
}

/// A validated layered circuit on `n` qubits; layer 0 acts first.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    n: usize,
    layers: Vec<Vec<Gate>>,
    layout: Option<GridLayout>,
}

impl Circuit {
    pub fn new(n: usize, layers: Vec<Vec<Gate>>, layout: Option<GridLayout>) -> Result<Self> {
        let circuit = Self { n, layers, layout };
        circuit.validate()?;
        Ok(circuit)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n,
            layers: Vec::new(),
            layout: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if let Some(layout) = self.layout {
            if layout.rows == 0 || layout.cols == 0 || layout.rows.checked_mul(layout.cols) != Some(self.n) {
                return Err(Error::Layout(format!(
                    "{}x{} grid does not hold {} qubits",
                    layout.rows, layout.cols, self.n
                )));
            }
        }
        for (l, layer) in self.layers.iter().enumerate() {
            let mut used = HashSet::new();
            for (g, gate) in layer.iter().enumerate() {
                gate.check(self.n, l, g)?;
                for &q in gate.qubits() {
                    if !used.insert(q) {
                        return Err(Error::OverlappingGates { layer: l, qubit: q });
                    }
                }
                if let (Some(layout), GateKind::TwoQubit) = (self.layout, gate.kind()) {
                    let (a, b) = (gate.qubits[0], gate.qubits[1]);
                    if !layout.adjacent(a, b) {
                        return Err(Error::Layout(format!(
                            "gate {g} in layer {l} joins non-adjacent qubits {a} and {b}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[Vec<Gate>] {
        &self.layers
    }

    pub fn layout(&self) -> Option<GridLayout> {
        self.layout
    }

    pub fn gate_count(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    /// Same gates with a layout attached, validated against it.
    pub fn with_layout(self, layout: Option<GridLayout>) -> Result<Self> {
        Self::new(self.n, self.layers, layout)
    }

    /// `U†`: layers reversed, each gate replaced by its adjoint.
    pub fn inverse(&self) -> Self {
        Self {
            n: self.n,
            layers: self
                .layers
                .iter()
                .rev()
                .map(|layer| layer.iter().map(Gate::adjoint).collect())
                .collect(),
            layout: self.layout,
        }
    }
}

pub(crate) fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Common gates used by tests, examples, and the GHZ construction.
pub mod gates {
    use super::c64;
    use crate::numerics::ComplexMatrix;

    pub fn hadamard() -> ComplexMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        ComplexMatrix::from_row_slice(2, 2, &[c64(s, 0.0), c64(s, 0.0), c64(s, 0.0), c64(-s, 0.0)])
    }

    /// Control is the first qubit of the gate.
    pub fn cnot() -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(4, 4);
        m[(0, 0)] = c64(1.0, 0.0);
        m[(1, 1)] = c64(1.0, 0.0);
        m[(2, 3)] = c64(1.0, 0.0);
        m[(3, 2)] = c64(1.0, 0.0);
        m
    }

    pub fn swap() -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(4, 4);
        m[(0, 0)] = c64(1.0, 0.0);
        m[(1, 2)] = c64(1.0, 0.0);
        m[(2, 1)] = c64(1.0, 0.0);
        m[(3, 3)] = c64(1.0, 0.0);
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{identity, pauli_x};

    #[test]
    fn identity_circuit_has_depth_zero() {
        let c = Circuit::new(3, vec![], None).unwrap();
        assert_eq!(c.depth(), 0);
        assert_eq!(c, Circuit::identity(3));
    }

    #[test]
    fn single_cnot_layer() {
        let c = Circuit::new(2, vec![vec![Gate::two(0, 1, gates::cnot())]], None).unwrap();
        assert_eq!(c.depth(), 1);
        assert_eq!(c.layers()[0][0].kind(), GateKind::TwoQubit);
    }

    #[test]
    fn rejects_non_unitary() {
        let bad = identity(2) * c64(1.5, 0.0);
        let err = Circuit::new(1, vec![vec![Gate::one(0, bad)]], None).unwrap_err();
        assert!(matches!(err, Error::NonUnitary { layer: 0, gate: 0, .. }));
    }

    #[test]
    fn rejects_overlap_and_bad_indices() {
        let layer = vec![Gate::one(0, pauli_x()), Gate::two(0, 1, gates::cnot())];
        assert_eq!(
            Circuit::new(2, vec![layer], None).unwrap_err(),
            Error::OverlappingGates { layer: 0, qubit: 0 }
        );
        let err = Circuit::new(2, vec![vec![Gate::two(1, 1, gates::cnot())]], None).unwrap_err();
        assert!(matches!(err, Error::InvalidGate { .. }));
        let err = Circuit::new(2, vec![vec![Gate::one(2, pauli_x())]], None).unwrap_err();
        assert!(matches!(err, Error::InvalidGate { .. }));
        let err = Circuit::new(2, vec![vec![Gate::one(0, gates::cnot())]], None).unwrap_err();
        assert!(matches!(err, Error::InvalidGate { .. }));
    }

    #[test]
    fn layout_checks() {
        let grid = Some(GridLayout::new(2, 2));
        assert!(Circuit::new(4, vec![vec![Gate::two(0, 2, gates::cnot())]], grid).is_ok());
        let err = Circuit::new(4, vec![vec![Gate::two(0, 3, gates::cnot())]], grid).unwrap_err();
        assert!(matches!(err, Error::Layout(_)));
        let err = Circuit::new(5, vec![], grid).unwrap_err();
        assert!(matches!(err, Error::Layout(_)));
    }

    #[test]
    fn inverse_reverses_and_adjoints() {
        let s = ComplexMatrix::from_row_slice(2, 2, &[c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(0.0, 1.0)]);
        let c = Circuit::new(
            2,
            vec![vec![Gate::one(0, s.clone())], vec![Gate::two(0, 1, gates::cnot())]],
            None,
        )
        .unwrap();
        let inv = c.inverse();
        assert_eq!(inv.layers()[0][0].matrix(), &gates::cnot());
        assert_eq!(inv.layers()[1][0].matrix(), &s.adjoint());
        assert_eq!(inv.inverse(), c);
    }
}
