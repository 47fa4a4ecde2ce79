//! Zero-free disks of `f(ε) = ⟨0ⁿ|U†O(ε)U|0ⁿ⟩`: the guaranteed radius, the GHZ family
//! that nearly saturates it, and root statistics over Haar-random states.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::circuit::{gates, Circuit, Gate, ProductObservable};
use crate::error::{Error, Result};
use crate::interp::lightcone_sizes;
use crate::numerics::{identity, kron, pauli_z, poly_roots, ComplexPolynomial};
use crate::oracle::{f_eps_coefficients, f_eps_from_state, StateVector};
use crate::random::haar_state;

/// Depth-`d` circuit preparing the GHZ state on `2^d` qubits.
///
/// Layer 1 applies `CNOT·(H⊗I)` to qubits `(0, 1)`; layer `k` copies qubit
/// `i` onto `i + 2^{k−1}` for every `i < 2^{k−1}`.
pub fn ghz_circuit(d: usize) -> Circuit {
    assert!(d >= 1, "GHZ depth must be at least 1");
    let bell = gates::cnot() * kron(&gates::hadamard(), &identity(2));
    let mut layers = vec![vec![Gate::two(0, 1, bell)]];
    for k in 2..=d {
        let half = 1 << (k - 1);
        layers.push((0..half).map(|i| Gate::two(i, i + half, gates::cnot())).collect());
    }
    Circuit::new(1 << d, layers, None).expect("GHZ circuit is valid")
}

/// `1/(60 γ ℓ₁ ℓ₄)`, or `None` (no finite bound needed) when `γ = 0`.
pub fn zero_free_radius(gamma: f64, ell1: usize, ell4: usize) -> Option<f64> {
    (gamma > 0.0).then(|| 1.0 / (60.0 * gamma * ell1 as f64 * ell4 as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroFreeReport {
    pub coeffs: Vec<Complex64>,
    pub roots: Vec<Complex64>,
    /// `None` when `f` is constant.
    pub min_root: Option<f64>,
    /// `None` when `γ = 0`.
    pub eps0: Option<f64>,
    pub gamma: f64,
    pub ell1: usize,
    pub ell4: usize,
    pub pass: bool,
}

fn min_modulus(roots: &[Complex64]) -> Option<f64> {
    roots.iter().map(|r| r.norm()).min_by(f64::total_cmp)
}

/// Roots of `f` compared against the guaranteed zero-free radius.
pub fn analyze_zero_freeness(circuit: &Circuit, obs: &ProductObservable) -> Result<ZeroFreeReport> {
    let f = f_eps_coefficients(circuit, obs)?;
    let roots = if f.degree().unwrap_or(0) == 0 {
        Vec::new()
    } else {
        poly_roots(&f)?
    };
    let min_root = min_modulus(&roots);
    let (ell1, _, ell4) = lightcone_sizes(circuit);
    let eps0 = zero_free_radius(obs.gamma(), ell1, ell4);
    let pass = match (min_root, eps0) {
        (Some(r), Some(e)) => r >= e - 1e-9,
        _ => true,
    };
    Ok(ZeroFreeReport {
        coeffs: f.into_coeffs(),
        roots,
        min_root,
        eps0,
        gamma: obs.gamma(),
        ell1,
        ell4,
        pass,
    })
}

/// Binary entropy in bits.
pub fn binary_entropy(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
}

/// Neumaier-compensated sum.
fn compensated_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for x in xs {
        let t = sum + x;
        comp += if sum.abs() >= x.abs() { (sum - t) + x } else { (x - t) + sum };
        sum = t;
    }
    sum + comp
}

/// Sample mean and its standard error.
fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = compensated_sum(xs.iter().copied()) / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = compensated_sum(xs.iter().map(|x| (x - mean).powi(2))) / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RandomEnsembleStats {
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub min_roots: Vec<f64>,
    /// `Σ_{k=1}^{⌊n/3⌋} |c_k|²` per trial.
    pub low_weight: Vec<f64>,
    /// `Σ_{k=1}^{n} |c_k|²` per trial.
    pub total_weight: Vec<f64>,
    pub max_c0_deviation: f64,
    pub low_weight_mean: f64,
    pub low_weight_se: f64,
    pub total_weight_mean: f64,
    pub total_weight_se: f64,
    pub median_min_root: f64,
    /// `2^{(H(1/3)−1) n}`.
    pub low_weight_bound: f64,
    pub c0_ok: bool,
    pub low_weight_ok: bool,
    pub total_weight_ok: bool,
}

/// Largest `n` accepted by [`random_haar_experiment`].
pub const HAAR_MAX_QUBITS: usize = 12;

/// `f(ε)` with `O_j(ε) = I + εZ` over Haar-random states `U|0ⁿ⟩`.
///
/// Trial `i` draws from ChaCha8 stream `i` of `seed`.
pub fn random_haar_experiment(n: usize, trials: usize, seed: u64) -> Result<RandomEnsembleStats> {
    if n == 0 || n > HAAR_MAX_QUBITS {
        return Err(Error::InvalidArgument(format!(
            "Haar experiment needs 1 <= n <= {HAAR_MAX_QUBITS}, got {n}"
        )));
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("at least one trial is required".into()));
    }
    let z_obs = ProductObservable::uniform(identity(2) + pauli_z(), n)?;
    let mut min_roots = Vec::with_capacity(trials);
    let mut low_weight = Vec::with_capacity(trials);
    let mut total_weight = Vec::with_capacity(trials);
    let mut max_c0_deviation: f64 = 0.0;
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial as u64);
        let psi = StateVector::from_amplitudes(n, haar_state(1 << n, &mut rng))?;
        let f: ComplexPolynomial = f_eps_from_state(&psi, &z_obs);
        max_c0_deviation = max_c0_deviation.max((f.coeff(0) - 1.0).norm());
        let weight = |hi: usize| compensated_sum((1..=hi).map(|k| f.coeff(k).norm_sqr()));
        low_weight.push(weight(n / 3));
        total_weight.push(weight(n));
        let roots = poly_roots(&f)?;
        min_roots.push(min_modulus(&roots).unwrap_or(f64::INFINITY));
    }
    let (low_weight_mean, low_weight_se) = mean_and_se(&low_weight);
    let (total_weight_mean, total_weight_se) = mean_and_se(&total_weight);
    let mut sorted = min_roots.clone();
    sorted.sort_by(f64::total_cmp);
    let median_min_root = if trials % 2 == 1 {
        sorted[trials / 2]
    } else {
        0.5 * (sorted[trials / 2 - 1] + sorted[trials / 2])
    };
    let low_weight_bound = 2f64.powf((binary_entropy(1.0 / 3.0) - 1.0) * n as f64);
    Ok(RandomEnsembleStats {
        n,
        trials,
        seed,
        min_roots,
        low_weight,
        total_weight,
        max_c0_deviation,
        low_weight_mean,
        low_weight_se,
        total_weight_mean,
        total_weight_se,
        median_min_root,
        low_weight_bound,
        c0_ok: max_c0_deviation <= 1e-9,
        low_weight_ok: low_weight_mean <= low_weight_bound + 3.0 * low_weight_se,
        total_weight_ok: total_weight_mean <= 1.0 + 3.0 * total_weight_se,
    })
}
