//! Additive-error estimate of `|⟨0ⁿ|U†OU|0ⁿ⟩|` through an output probability of a
//! dilated circuit, damped by a Chebyshev polynomial in `H = Σ_j U|1⟩⟨1|_j U†`.

mod damping;
mod moments;

use std::time::Instant;

use num_complex::Complex64;
use serde::Serialize;

use crate::circuit::{Circuit, Gate, ProductObservable};
use crate::error::{Error, Result};
use crate::estimate::{Diagnostics, ErrorKind, MeanEstimate};
use crate::numerics::{block_encode, TOL};

pub use damping::{build_damping_polynomial, DampingPolynomial};
pub use moments::{h_moment_lightcone, surjection_count};

use moments::TermEngine;

/// Default cap on the number of subset terms.
pub const DEFAULT_TERM_BUDGET: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputProbEstimate {
    /// Estimate of `|⟨0ⁿ|U|0ⁿ⟩|²`.
    pub q: f64,
    pub degree: usize,
    pub max_abs_g: f64,
    pub term_count: u128,
}

/// Estimate of `|⟨0ⁿ|U|0ⁿ⟩|²` within `delta`.
pub fn estimate_output_prob(circuit: &Circuit, delta: f64) -> Result<OutputProbEstimate> {
    estimate_output_prob_with_budget(circuit, delta, DEFAULT_TERM_BUDGET)
}

/// `q = ⟨0|g(H)|0⟩`, evaluated as `Σ_k Δ^k g(0) b_k` with binomial moments
/// `b_k = Σ_{|S|=k} ⟨0|U Π_S U†|0⟩`. This is the same number as `Σ_r g_r ⟨H^r⟩`
/// but avoids the cancellation between large monomial coefficients and moments.
pub fn estimate_output_prob_with_budget(
    circuit: &Circuit,
    delta: f64,
    budget: u128,
) -> Result<OutputProbEstimate> {
    let n = circuit.n();
    let g = build_damping_polynomial(n, delta)?;
    let kmax = g.degree().min(n);
    let mut engine = TermEngine::new(circuit);
    let (b, term_count) = engine.binomial_moments(kmax, budget)?;
    let diffs = g.forward_differences(kmax);
    let q = diffs.iter().zip(&b).map(|(d, bk)| d * bk).sum();
    Ok(OutputProbEstimate {
        q,
        degree: g.degree(),
        max_abs_g: g.max_abs_on_support(),
        term_count,
    })
}

/// `V = (U†⊗I)·B·(U⊗I)` on `2n` qubits; qubit `n + j` is the ancilla of `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct DilatedCircuit {
    pub circuit: Circuit,
    /// Block encodings `B_j` of `O_j/‖O_j‖`.
    pub blocks: Vec<crate::numerics::ComplexMatrix>,
    /// `Π_j ‖O_j‖`.
    pub norm_factor: f64,
}

pub fn dilate(circuit: &Circuit, obs: &ProductObservable) -> Result<DilatedCircuit> {
    let n = circuit.n();
    obs.check_len(n)?;
    let mut blocks = Vec::with_capacity(n);
    let mut norm_factor = 1.0;
    for (j, (op, &norm)) in obs.ops().iter().zip(obs.norms()).enumerate() {
        if norm == 0.0 {
            return Err(Error::InvalidArgument(format!("O_{j} is zero and cannot be rescaled")));
        }
        blocks.push(block_encode(&(op / Complex64::new(norm, 0.0)))?);
        norm_factor *= norm;
    }
    let mut layers: Vec<Vec<Gate>> = circuit.layers().to_vec();
    layers.push(
        blocks
            .iter()
            .enumerate()
            .map(|(j, b)| Gate::two(j, n + j, b.clone()))
            .collect(),
    );
    layers.extend(circuit.inverse().layers().iter().cloned());
    Ok(DilatedCircuit {
        circuit: Circuit::new(2 * n, layers, None)?,
        blocks,
        norm_factor,
    })
}

/// Estimate `E` with `|E − |μ|| ≤ δ`; for PSD observables this estimates `μ`.
pub fn estimate_abs_mean(circuit: &Circuit, obs: &ProductObservable, delta: f64) -> Result<MeanEstimate> {
    estimate_abs_mean_with_budget(circuit, obs, delta, DEFAULT_TERM_BUDGET)
}

pub fn estimate_abs_mean_with_budget(
    circuit: &Circuit,
    obs: &ProductObservable,
    delta: f64,
    budget: u128,
) -> Result<MeanEstimate> {
    let start = Instant::now();
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::InvalidArgument(format!("delta = {delta} must lie in (0, 1/2)")));
    }
    obs.check_len(circuit.n())?;
    if let Some((j, norm)) = obs
        .norms()
        .iter()
        .enumerate()
        .find(|(_, &x)| x > 1.0 + TOL.norm)
    {
        return Err(Error::InvalidArgument(format!("||O_{j}|| = {norm} exceeds 1")));
    }
    let dilated = dilate(circuit, obs)?;
    let threshold = 0.5 * delta * delta;
    let out = estimate_output_prob_with_budget(&dilated.circuit, threshold, budget)?;
    let e = if out.q < threshold { 0.0 } else { out.q.sqrt() * dilated.norm_factor };
    let diagnostics = Diagnostics {
        degree: Some(out.degree),
        max_abs_g: Some(out.max_abs_g),
        term_count: Some(out.term_count),
        q: Some(out.q),
        norm_factor: Some(dilated.norm_factor),
        runtime: start.elapsed(),
        ..Diagnostics::default()
    };
    Ok(MeanEstimate::new(Complex64::new(e, 0.0), ErrorKind::Additive, delta, 1.0).with_diagnostics(diagnostics))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::gates;
    use crate::numerics::{identity, kron, pauli_z, ComplexMatrix};
    use crate::oracle::{mean_value_exact, run_circuit};
    use crate::random::{random_circuit, random_psd_unit, random_unit_operator};
    use crate::zerofree::ghz_circuit;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn proj(bit: usize) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(2, 2);
        m[(bit, bit)] = Complex64::new(1.0, 0.0);
        m
    }

    fn zero_prob(c: &Circuit) -> f64 {
        run_circuit(c).unwrap().amplitude(0).norm_sqr()
    }

    #[test]
    fn identity_circuit_gives_one() {
        let out = estimate_output_prob(&Circuit::identity(5), 0.1).unwrap();
        assert_eq!(out.q, 1.0);
    }

    #[test]
    fn hadamard_pair() {
        let h = gates::hadamard();
        let c = Circuit::new(2, vec![vec![Gate::one(0, h.clone()), Gate::one(1, h)]], None).unwrap();
        let out = estimate_output_prob(&c, 0.1).unwrap();
        assert!((out.q - 0.25).abs() <= 0.1);
    }

    #[test]
    fn random_output_probabilities() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for n in [3, 6, 10] {
            let c = random_circuit(n, 2, 0.8, &mut rng);
            let out = estimate_output_prob(&c, 0.05).unwrap();
            assert!((out.q - zero_prob(&c)).abs() <= 0.05, "n = {n}");
        }
    }

    #[test]
    fn newton_and_monomial_forms_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let c = random_circuit(6, 1, 0.9, &mut rng);
        let g = build_damping_polynomial(6, 0.1).unwrap();
        let monomial: f64 = g
            .coeffs()
            .iter()
            .enumerate()
            .map(|(r, gr)| gr * h_moment_lightcone(&c, r as u32, DEFAULT_TERM_BUDGET).unwrap())
            .sum();
        let q = estimate_output_prob(&c, 0.1).unwrap().q;
        assert!((q - monomial).abs() < 1e-9, "{q} vs {monomial}");
    }

    #[test]
    fn dilation_of_trivial_observables() {
        let z = ProductObservable::uniform(pauli_z(), 3).unwrap();
        let d = dilate(&Circuit::identity(3), &z).unwrap();
        assert_eq!(d.circuit.n(), 6);
        assert_eq!(d.circuit.depth(), 1);
        assert!((run_circuit(&d.circuit).unwrap().amplitude(0) - 1.0).norm() < 1e-10);
        let p0 = ProductObservable::uniform(proj(0), 3).unwrap();
        let d = dilate(&Circuit::identity(3), &p0).unwrap();
        assert!((run_circuit(&d.circuit).unwrap().amplitude(0) - 1.0).norm() < 1e-10);
    }

    #[test]
    fn dilated_amplitude_matches_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for n in [2, 4, 6] {
            let c = random_circuit(n, 2, 0.8, &mut rng);
            let obs = ProductObservable::new((0..n).map(|_| random_unit_operator(&mut rng)).collect()).unwrap();
            let d = dilate(&c, &obs).unwrap();
            assert_eq!(d.circuit.depth(), 2 * c.depth() + 1);
            let amp = run_circuit(&d.circuit).unwrap().amplitude(0) * d.norm_factor;
            let mu = mean_value_exact(&c, &obs, None).unwrap();
            assert!((amp - mu).norm() < 1e-10);
            for (b, op) in d.blocks.iter().zip(obs.ops()) {
                let block = ComplexMatrix::from_fn(2, 2, |i, k| b[(2 * i, 2 * k)]);
                assert!((block - op).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn dilation_rejects_zero_operator() {
        let obs = ProductObservable::new(vec![identity(2), ComplexMatrix::zeros(2, 2)]).unwrap();
        assert!(matches!(dilate(&Circuit::identity(2), &obs), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn abs_mean_examples() {
        let c = Circuit::identity(3);
        let all_zero = ProductObservable::uniform(proj(0), 3).unwrap();
        let e = estimate_abs_mean(&c, &all_zero, 0.1).unwrap();
        assert!((e.value.re - 1.0).abs() <= 0.1);

        let flipped = ProductObservable::new(vec![proj(1), proj(0), proj(0)]).unwrap();
        let e = estimate_abs_mean(&c, &flipped, 0.1).unwrap();
        assert_eq!(e.value.re, 0.0);
        assert!(e.diagnostics.q.unwrap() < 0.005);

        let zz = ProductObservable::uniform(pauli_z(), 2).unwrap();
        let e = estimate_abs_mean(&ghz_circuit(1), &zz, 0.1).unwrap();
        assert!((e.value.re - 1.0).abs() <= 0.1);
    }

    #[test]
    fn abs_mean_on_random_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        for n in [2, 4, 5] {
            let c = random_circuit(n, 1, 1.0, &mut rng);
            let obs = ProductObservable::new((0..n).map(|_| random_psd_unit(&mut rng)).collect()).unwrap();
            let mu = mean_value_exact(&c, &obs, None).unwrap();
            let e = estimate_abs_mean(&c, &obs, 0.1).unwrap();
            assert!((e.value.re - mu.norm()).abs() <= 0.1);
        }
    }

    #[test]
    fn rescaled_observable() {
        let half = ProductObservable::uniform(proj(0) * Complex64::new(0.5, 0.0), 2).unwrap();
        let e = estimate_abs_mean(&Circuit::identity(2), &half, 0.1).unwrap();
        assert!((e.value.re - 0.25).abs() <= 0.1);
        assert!((e.diagnostics.norm_factor.unwrap() - 0.25).abs() < 1e-12);
        let big = ProductObservable::uniform(kron(&identity(1), &pauli_z()) * Complex64::new(2.0, 0.0), 1).unwrap();
        assert!(estimate_abs_mean(&Circuit::identity(1), &big, 0.1).is_err());
    }
}
