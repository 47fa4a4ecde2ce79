//! Relative-error estimation of `μ` by truncated Taylor expansion of `ln f(ε)`
//! over lightcone-connected subsets of qubits.

mod subsets;

use std::collections::HashMap;
use std::time::Instant;

use num_complex::Complex64;

use crate::circuit::{iterated_lightcones, restrict_circuit, Circuit, ProductObservable, QubitCones};
use crate::error::{Error, Result};
use crate::estimate::{Diagnostics, ErrorKind, MeanEstimate};
use crate::numerics::{identity, log_taylor_from_poly, ComplexMatrix, ComplexPolynomial};
use crate::oracle::StateVector;

pub use subsets::{build_overlap_graph, enumerate_connected_subsets, OverlapGraph};

/// Hard cap on the truncation order.
pub const DEFAULT_P_CAP: usize = 24;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterpConfig {
    /// Ratio between the zero-free radius and the interpolation point, `β > 1`.
    pub beta: f64,
    pub delta: f64,
    pub p_cap: usize,
}

impl InterpConfig {
    pub fn new(delta: f64) -> Self {
        Self {
            beta: 2.0,
            delta,
            p_cap: DEFAULT_P_CAP,
        }
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.beta > 1.0 && self.beta.is_finite()) {
            return Err(Error::InvalidArgument(format!("beta = {} must exceed 1", self.beta)));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidArgument(format!("delta = {} must be positive", self.delta)));
        }
        Ok(())
    }

    /// Smallest `p ≥ 1` whose truncation error bound is at most `δ/2`.
    pub fn truncation_order(&self, n: usize) -> Result<usize> {
        self.validate()?;
        let fits = |p: usize| truncation_error_bound(n, self.beta, p) <= self.delta / 2.0;
        let p = (1..).find(|&p| fits(p)).expect("bound decays to zero");
        if p > self.p_cap {
            return Err(Error::OrderCap { p, cap: self.p_cap });
        }
        Ok(p)
    }

    /// Largest admissible `γ = max_j ‖O_j − I‖`, `1/(60 β ℓ₁ ℓ₄)`.
    pub fn gamma_bound(&self, ell1: usize, ell4: usize) -> f64 {
        1.0 / (60.0 * self.beta * ell1 as f64 * ell4 as f64)
    }
}

/// `n β^{−p} / ((p+1)(β−1))`.
pub fn truncation_error_bound(n: usize, beta: f64, p: usize) -> f64 {
    n as f64 * beta.powi(-(p as i32)) / ((p as f64 + 1.0) * (beta - 1.0))
}

/// `(3n/2)(3ℓ₂)^{p−1}`.
pub fn subset_count_bound(n: usize, ell2: usize, p: usize) -> f64 {
    1.5 * n as f64 * (3.0 * ell2 as f64).powi(p as i32 - 1)
}

/// Result of summing `g_S` over the connected subsets.
#[derive(Debug, Clone, PartialEq)]
pub struct TaylorAssembly {
    /// `T_p` coefficients `t_0..t_p`, `t_0 = 0`.
    pub coeffs: Vec<Complex64>,
    pub p: usize,
    pub subset_count: usize,
}

impl TaylorAssembly {
    pub fn value_at_one(&self) -> Complex64 {
        self.coeffs.iter().sum()
    }
}

/// Memoized lightcone-restricted expectation values.
struct Evaluator<'a> {
    circuit: &'a Circuit,
    cones: QubitCones,
    graph: &'a OverlapGraph,
    order: usize,
    deltas: Vec<ComplexMatrix>,
    moments: HashMap<Vec<usize>, Complex64>,
    logs: HashMap<Vec<usize>, Vec<Complex64>>,
    states: HashMap<Vec<usize>, StateVector>,
    cached_amplitudes: usize,
}

/// Cone states are dropped once this many amplitudes are cached.
const STATE_CACHE_AMPLITUDES: usize = 1 << 24;

impl<'a> Evaluator<'a> {
    fn new(circuit: &'a Circuit, obs: &'a ProductObservable, graph: &'a OverlapGraph, order: usize) -> Self {
        let id = identity(2);
        Self {
            circuit,
            cones: QubitCones::new(circuit),
            graph,
            order,
            deltas: obs.ops().iter().map(|o| o - &id).collect(),
            moments: HashMap::new(),
            logs: HashMap::new(),
            states: HashMap::new(),
            cached_amplitudes: 0,
        }
    }

    /// `⟨0|U† ∏_{j∈r}(O_j − I) U|0⟩` on the backward cone of `r`.
    fn moment(&mut self, r: &[usize]) -> Complex64 {
        if let Some(&v) = self.moments.get(r) {
            return v;
        }
        let cone: Vec<usize> = self.cones.backward_of(r.iter().copied()).ones().collect();
        if !self.states.contains_key(&cone) {
            let (restricted, _) = restrict_circuit(self.circuit, &cone);
            let mut psi = StateVector::zero(cone.len());
            psi.apply_circuit(&restricted);
            if self.cached_amplitudes + (1 << cone.len()) > STATE_CACHE_AMPLITUDES {
                self.states.clear();
                self.cached_amplitudes = 0;
            }
            self.cached_amplitudes += 1 << cone.len();
            self.states.insert(cone.clone(), psi);
        }
        let psi = &self.states[&cone];
        let mut phi = psi.clone();
        for &j in r {
            let local = cone.binary_search(&j).expect("qubit lies in its own cone");
            phi.apply_one(local, &self.deltas[j]);
        }
        let v = psi.inner(&phi);
        self.moments.insert(r.to_vec(), v);
        v
    }

    /// Connected components of the members of `t` selected by `mask`, as local masks.
    fn components(adj: &[u32], mask: u32) -> Vec<u32> {
        let mut rest = mask;
        let mut out = Vec::new();
        while rest != 0 {
            let mut comp = rest & rest.wrapping_neg();
            loop {
                let mut grown = comp;
                let mut bits = comp;
                while bits != 0 {
                    let i = bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    grown |= adj[i] & mask;
                }
                if grown == comp {
                    break;
                }
                comp = grown;
            }
            out.push(comp);
            rest &= !comp;
        }
        out
    }

    fn local_adjacency(&self, t: &[usize]) -> Vec<u32> {
        t.iter()
            .map(|&a| {
                t.iter()
                    .enumerate()
                    .filter(|&(_, &b)| b != a && self.graph.adjacent(a, b))
                    .fold(0u32, |m, (k, _)| m | (1 << k))
            })
            .collect()
    }

    fn select(t: &[usize], mask: u32) -> Vec<usize> {
        t.iter()
            .enumerate()
            .filter(|&(k, _)| mask >> k & 1 == 1)
            .map(|(_, &q)| q)
            .collect()
    }

    /// Coefficients of `μ_t(ε) = ⟨0|U† ∏_{j∈t} O_j(ε) U|0⟩`.
    fn mu_coeffs(&mut self, t: &[usize]) -> Vec<Complex64> {
        assert!(t.len() < 32, "subset too large for mask expansion");
        let adj = self.local_adjacency(t);
        let mut coeffs = vec![ZERO; t.len() + 1];
        coeffs[0] = ONE;
        for mask in 1u32..(1u32 << t.len()) {
            let mut prod = ONE;
            for comp in Self::components(&adj, mask) {
                prod *= self.moment(&Self::select(t, comp));
                if prod == ZERO {
                    break;
                }
            }
            coeffs[mask.count_ones() as usize] += prod;
        }
        coeffs
    }

    /// Truncated `ln μ_t`, `t` connected; entries `0..=order` with entry 0 zero.
    fn log_connected(&mut self, t: &[usize]) -> Vec<Complex64> {
        if let Some(v) = self.logs.get(t) {
            return v.clone();
        }
        let mu = ComplexPolynomial::new(self.mu_coeffs(t));
        let derivs = log_taylor_from_poly(&mu, self.order).expect("μ_t(0) = 1");
        let mut out = vec![ZERO; self.order + 1];
        let mut fact = 1.0;
        for (k, d) in derivs.into_iter().enumerate() {
            fact *= (k + 1) as f64;
            out[k + 1] = d / fact;
        }
        self.logs.insert(t.to_vec(), out.clone());
        out
    }

    /// `g_S = Σ_{T⊆S} (−1)^{|S∖T|} h_T`, with `h_T` summed over the components of `T`.
    fn g_subset(&mut self, s: &[usize]) -> Vec<Complex64> {
        let adj = self.local_adjacency(s);
        let full = (1u32 << s.len()) - 1;
        let mut g = vec![ZERO; self.order + 1];
        for mask in 1..=full {
            let sign = if (full & !mask).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
            for comp in Self::components(&adj, mask) {
                let h = self.log_connected(&Self::select(s, comp));
                for (gk, hk) in g.iter_mut().zip(&h) {
                    *gk += hk * sign;
                }
            }
        }
        g
    }
}

/// Coefficients of `μ_S(ε)`, computed on the backward lightcone of `S`.
pub fn mu_subset_coefficients(
    circuit: &Circuit,
    obs: &ProductObservable,
    s: &[usize],
) -> Result<ComplexPolynomial> {
    obs.check_len(circuit.n())?;
    let mut sorted = s.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let graph = build_overlap_graph(circuit);
    let mut eval = Evaluator::new(circuit, obs, &graph, sorted.len().max(1));
    Ok(ComplexPolynomial::new(eval.mu_coeffs(&sorted)))
}

/// `T_p = Σ_{connected S, |S|≤p} g_S`, with no restriction on `γ`.
pub fn log_taylor_by_subsets(
    circuit: &Circuit,
    obs: &ProductObservable,
    p: usize,
) -> Result<TaylorAssembly> {
    obs.check_len(circuit.n())?;
    if p == 0 {
        return Err(Error::InvalidArgument("truncation order must be at least 1".into()));
    }
    let graph = build_overlap_graph(circuit);
    let subsets = enumerate_connected_subsets(&graph, p);
    let mut eval = Evaluator::new(circuit, obs, &graph, p);
    let mut coeffs = vec![ZERO; p + 1];
    for s in &subsets {
        for (t, g) in coeffs.iter_mut().zip(eval.g_subset(s)) {
            *t += g;
        }
    }
    Ok(TaylorAssembly {
        coeffs,
        p,
        subset_count: subsets.len(),
    })
}

/// Lightcone sizes `(ℓ₁, ℓ₂, ℓ₄)`.
pub fn lightcone_sizes(circuit: &Circuit) -> (usize, usize, usize) {
    let table = iterated_lightcones(circuit, 4);
    (table.ell(1), table.ell(2), table.ell(4))
}

fn check_gamma(obs: &ProductObservable, config: &InterpConfig, ell1: usize, ell4: usize) -> Result<f64> {
    let bound = config.gamma_bound(ell1, ell4);
    if obs.gamma() > bound {
        return Err(Error::GammaTooLarge {
            gamma: obs.gamma(),
            bound,
        });
    }
    Ok(bound)
}

/// `T_p` for an admissible observable, `p` chosen from `config`.
pub fn assemble_taylor(
    circuit: &Circuit,
    obs: &ProductObservable,
    config: &InterpConfig,
) -> Result<TaylorAssembly> {
    obs.check_len(circuit.n())?;
    let p = config.truncation_order(circuit.n())?;
    let (ell1, _, ell4) = lightcone_sizes(circuit);
    check_gamma(obs, config, ell1, ell4)?;
    log_taylor_by_subsets(circuit, obs, p)
}

/// `μ̃ = exp(T_p(1))` with `|ln μ − ln μ̃| ≤ δ` for admissible observables.
pub fn estimate_mean_interp(
    circuit: &Circuit,
    obs: &ProductObservable,
    config: &InterpConfig,
) -> Result<MeanEstimate> {
    let start = Instant::now();
    obs.check_len(circuit.n())?;
    let n = circuit.n();
    let p = config.truncation_order(n)?;
    let (ell1, ell2, ell4) = lightcone_sizes(circuit);
    let bound = check_gamma(obs, config, ell1, ell4)?;
    let taylor = log_taylor_by_subsets(circuit, obs, p)?;
    let value = taylor.value_at_one().exp();
    let diagnostics = Diagnostics {
        ell1: Some(ell1),
        ell2: Some(ell2),
        ell4: Some(ell4),
        gamma: Some(obs.gamma()),
        gamma_bound: Some(bound),
        p: Some(p),
        subset_count: Some(taylor.subset_count),
        subset_bound: Some(subset_count_bound(n, ell2, p)),
        truncation_bound: Some(truncation_error_bound(n, config.beta, p)),
        runtime: start.elapsed(),
        ..Diagnostics::default()
    };
    Ok(MeanEstimate::new(value, ErrorKind::Relative, config.delta, 1.0).with_diagnostics(diagnostics))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{gates, Gate};
    use crate::numerics::pauli_z;
    use crate::oracle::{f_eps_coefficients, mean_value_exact};
    use crate::random::{brickwork_circuit, haar_unitary, near_identity_observable, random_circuit};
    use crate::numerics::log_taylor_coefficients;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn ghz1() -> Circuit {
        Circuit::new(
            2,
            vec![vec![Gate::one(0, gates::hadamard())], vec![Gate::two(0, 1, gates::cnot())]],
            None,
        )
        .unwrap()
    }

    #[test]
    fn truncation_order_is_minimal() {
        let cfg = InterpConfig::new(1e-3);
        let p = cfg.truncation_order(14).unwrap();
        assert_eq!(p, 12);
        assert!(truncation_error_bound(14, 2.0, p) <= 5e-4);
        assert!(truncation_error_bound(14, 2.0, p - 1) > 5e-4);
        let tight = InterpConfig { p_cap: 5, ..cfg };
        assert_eq!(tight.truncation_order(14), Err(Error::OrderCap { p: 12, cap: 5 }));
        assert!(InterpConfig::new(0.0).truncation_order(3).is_err());
        assert!(InterpConfig::new(0.1).with_beta(1.0).truncation_order(3).is_err());
    }

    #[test]
    fn identity_observable_gives_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let circ = random_circuit(5, 2, 0.8, &mut rng);
        let est = estimate_mean_interp(&circ, &ProductObservable::identity(5), &InterpConfig::new(1e-3)).unwrap();
        assert_eq!(est.value, ONE);
    }

    #[test]
    fn empty_and_single_subsets() {
        let id = Circuit::identity(3);
        let obs = ProductObservable::uniform(identity(2) + pauli_z(), 3).unwrap();
        let empty = mu_subset_coefficients(&id, &obs, &[]).unwrap();
        assert_eq!(empty, ComplexPolynomial::one());
        let single = mu_subset_coefficients(&id, &obs, &[1]).unwrap();
        assert_eq!(single, ComplexPolynomial::from_real(&[1.0, 1.0]));
    }

    #[test]
    fn single_qubit_series_is_log() {
        let a = 0.004;
        let obs = ProductObservable::new(vec![identity(2) + pauli_z() * c(a)]).unwrap();
        let t = log_taylor_by_subsets(&Circuit::identity(1), &obs, 6).unwrap();
        let want = log_taylor_coefficients(&[ONE, c(a)], 6).unwrap();
        for k in 1..=6 {
            assert!((t.coeffs[k] - want[k - 1]).norm() <= 1e-12 * want[k - 1].norm());
        }
        assert_eq!(t.subset_count, 1);
    }

    #[test]
    fn disconnected_pair_has_zero_g() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let c2 = Circuit::new(
            4,
            vec![vec![Gate::two(0, 1, haar_unitary(4, &mut rng)), Gate::two(2, 3, haar_unitary(4, &mut rng))]],
            None,
        )
        .unwrap();
        let obs = near_identity_observable(4, 0.3, &mut rng);
        let graph = build_overlap_graph(&c2);
        let mut eval = Evaluator::new(&c2, &obs, &graph, 4);
        let g = eval.g_subset(&[1, 2]);
        assert!(g.iter().all(|x| x.norm() < 1e-15));
        assert!(eval.g_subset(&[0, 1]).iter().any(|x| x.norm() > 1e-3));
    }

    #[test]
    fn ghz_small_gamma() {
        let gamma = 1e-3;
        let obs = ProductObservable::uniform(identity(2) + pauli_z() * c(gamma), 2).unwrap();
        let est = estimate_mean_interp(&ghz1(), &obs, &InterpConfig::new(1e-6)).unwrap();
        let exact: f64 = 1.0 + gamma * gamma;
        assert!((est.value.ln() - exact.ln()).norm() <= 1e-6);
    }

    #[test]
    fn rejects_large_gamma() {
        let obs = ProductObservable::uniform(identity(2) + pauli_z() * c(0.1), 2).unwrap();
        match estimate_mean_interp(&ghz1(), &obs, &InterpConfig::new(1e-3)) {
            Err(Error::GammaTooLarge { gamma, bound }) => {
                assert!((gamma - 0.1).abs() < 1e-12);
                assert!((bound - 1.0 / (60.0 * 2.0 * 2.0 * 2.0)).abs() < 1e-15);
            }
            other => panic!("expected gamma error, got {other:?}"),
        }
    }

    #[test]
    fn mu_subset_matches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let circ = random_circuit(7, 2, 0.8, &mut rng);
            let obs = near_identity_observable(7, 0.5, &mut rng);
            let s = [1, 4, 6];
            let poly = mu_subset_coefficients(&circ, &obs, &s).unwrap();
            for k in 0..5 {
                let eps = Complex64::from_polar(0.9, 1.3 * k as f64);
                let want = mean_value_exact(&circ, &obs.at_eps(eps), Some(&s)).unwrap();
                assert!((poly.eval(eps) - want).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn subset_sum_matches_full_log_series() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for trial in 0..4 {
            let n = 6 + trial;
            let circ = if trial % 2 == 0 {
                brickwork_circuit(n, 2, &mut rng)
            } else {
                random_circuit(n, 2, 0.7, &mut rng)
            };
            let obs = near_identity_observable(n, 0.4, &mut rng);
            let p = 5;
            let t = log_taylor_by_subsets(&circ, &obs, p).unwrap();
            let f = f_eps_coefficients(&circ, &obs).unwrap();
            let want = log_taylor_coefficients(f.coeffs(), p).unwrap();
            for k in 1..=p {
                assert!((t.coeffs[k] - want[k - 1]).norm() < 1e-8, "order {k}");
            }
        }
    }
}
