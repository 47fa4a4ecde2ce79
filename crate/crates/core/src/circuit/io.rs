use serde::{Deserialize, Serialize};

use super::{Circuit, Gate, GridLayout, ProductObservable};
use crate::error::{Error, Result};
use crate::numerics::ComplexMatrix;

type MatrixDoc = Vec<Vec<[f64; 2]>>;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CircuitDoc {
    n: usize,
    #[serde(default)]
    layout: Option<LayoutDoc>,
    layers: Vec<Vec<GateDoc>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayoutDoc {
    rows: usize,
    cols: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GateDoc {
    qubits: Vec<usize>,
    matrix: MatrixDoc,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObservableDoc {
    ops: Vec<MatrixDoc>,
}

fn matrix_from_doc(doc: &MatrixDoc) -> Result<ComplexMatrix> {
    let rows = doc.len();
    if rows == 0 || doc.iter().any(|r| r.len() != rows) {
        return Err(Error::Parse("matrix must be square and nonempty".into()));
    }
    Ok(ComplexMatrix::from_fn(rows, rows, |i, j| {
        let [re, im] = doc[i][j];
        super::c64(re, im)
    }))
}

fn matrix_to_doc(m: &ComplexMatrix) -> MatrixDoc {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

/// Parses and validates a circuit document.
pub fn parse_circuit(text: &str) -> Result<Circuit> {
    let doc: CircuitDoc = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let mut layers = Vec::with_capacity(doc.layers.len());
    for layer in &doc.layers {
        let mut gates = Vec::with_capacity(layer.len());
        for gate in layer {
            gates.push(Gate::new(gate.qubits.clone(), matrix_from_doc(&gate.matrix)?));
        }
        layers.push(gates);
    }
    let layout = doc.layout.map(|l| GridLayout::new(l.rows, l.cols));
    Circuit::new(doc.n, layers, layout)
}

/// Canonical JSON form of a circuit; `parse_circuit` inverts it exactly.
pub fn circuit_to_json(circuit: &Circuit) -> String {
    let doc = CircuitDoc {
        n: circuit.n(),
        layout: circuit.layout().map(|l| LayoutDoc {
            rows: l.rows,
            cols: l.cols,
        }),
        layers: circuit
            .layers()
            .iter()
            .map(|layer| {
                layer
                    .iter()
                    .map(|g| GateDoc {
                        qubits: g.qubits().to_vec(),
                        matrix: matrix_to_doc(g.matrix()),
                    })
                    .collect()
            })
            .collect(),
    };
    serde_json::to_string(&doc).expect("circuit document serializes")
}

pub fn parse_observable(text: &str) -> Result<ProductObservable> {
    let doc: ObservableDoc =
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let ops = doc
        .ops
        .iter()
        .map(matrix_from_doc)
        .collect::<Result<Vec<_>>>()?;
    ProductObservable::new(ops)
}

pub fn observable_to_json(obs: &ProductObservable) -> String {
    let doc = ObservableDoc {
        ops: obs.ops().iter().map(matrix_to_doc).collect(),
    };
    serde_json::to_string(&doc).expect("observable document serializes")
}
