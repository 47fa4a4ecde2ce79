use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::TOL;
use crate::error::{Error, Result};

/// Square dense complex matrix, row `i` column `j` addressed as `m[(i, j)]`.
pub type ComplexMatrix = DMatrix<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub fn identity(dim: usize) -> ComplexMatrix {
    ComplexMatrix::identity(dim, dim)
}

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

/// `a ⊗ b`, with `a` acting on the more significant tensor factor.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

pub fn max_abs_deviation(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Max-entry deviation of `m†m` from the identity.
pub fn unitarity_deviation(m: &ComplexMatrix) -> f64 {
    let prod = m.adjoint() * m;
    max_abs_deviation(&prod, &identity(m.nrows()))
}

pub fn is_unitary(m: &ComplexMatrix, tol: f64) -> bool {
    m.is_square() && unitarity_deviation(m) <= tol
}

/// Largest singular value.
pub fn spectral_norm(m: &ComplexMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(0.0, |acc: f64, &s| acc.max(s))
}

/// Polar decomposition `A = U'M` with `U'` unitary and `M = (A†A)^{1/2}`.
///
/// Built from the SVD `A = VΣW†` as `U' = VW†`, `M = WΣW†`, which also
/// gives a valid unitary completion when `A` is singular.
pub fn polar_unitary(a: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    let (v, sigma, w_adj) = full_svd(a);
    let unitary = &v * &w_adj;
    let m = scale_by_spectrum(&w_adj, &sigma);
    (unitary, m)
}

fn full_svd(a: &ComplexMatrix) -> (ComplexMatrix, DVector<f64>, ComplexMatrix) {
    assert!(a.is_square(), "polar decomposition needs a square matrix");
    let svd = a.clone().svd(true, true);
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    (u, svd.singular_values, v_t)
}

/// `W f(Σ) W†` given `W†` and the diagonal entries of `f(Σ)`.
fn scale_by_spectrum(w_adj: &ComplexMatrix, diag: &DVector<f64>) -> ComplexMatrix {
    let w = w_adj.adjoint();
    let mut scaled = w.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= Complex64::new(diag[j], 0.0);
    }
    scaled * w_adj
}

/// Two-qubit unitary `B` whose `(I⊗⟨0|)B(I⊗|0⟩)` block equals `o`.
///
/// `B = (U'⊗I)(M⊗Z + (I−M²)^{1/2}⊗X)` where `o = U'M` is the polar form;
/// the first tensor factor is the system qubit, the second the ancilla.
pub fn block_encode(o: &ComplexMatrix) -> Result<ComplexMatrix> {
    if o.shape() != (2, 2) {
        return Err(Error::InvalidArgument("block encoding needs a 2x2 operator".into()));
    }
    let norm = spectral_norm(o);
    if norm > 1.0 + TOL.norm {
        return Err(Error::InvalidArgument(format!(
            "operator norm {norm:.12} exceeds 1"
        )));
    }
    Ok(block_encode_contraction(o))
}

/// Block encoding of `O(ε)/‖O(ε)‖` with `O(ε) = I + ε(O − I)`.
///
/// Returns the unitary together with the scale `‖O(ε)‖` that was divided out.
pub fn block_encode_at(o: &ComplexMatrix, eps: Complex64) -> Result<(ComplexMatrix, f64)> {
    if o.shape() != (2, 2) {
        return Err(Error::InvalidArgument("block encoding needs a 2x2 operator".into()));
    }
    let id = identity(2);
    let o_eps = &id + (o - &id) * eps;
    let scale = spectral_norm(&o_eps);
    if scale == 0.0 {
        return Err(Error::InvalidArgument("O(eps) vanishes".into()));
    }
    let a = o_eps / Complex64::new(scale, 0.0);
    Ok((block_encode_contraction(&a), scale))
}

fn block_encode_contraction(a: &ComplexMatrix) -> ComplexMatrix {
    let (v, sigma, w_adj) = full_svd(a);
    let unitary = &v * &w_adj;
    let clipped = sigma.map(|s| s.min(1.0));
    let m = scale_by_spectrum(&w_adj, &clipped);
    let comp = scale_by_spectrum(&w_adj, &clipped.map(|s| (1.0 - s * s).max(0.0).sqrt()));
    let inner = kron(&m, &pauli_z()) + kron(&comp, &pauli_x());
    kron(&unitary, &identity(2)) * inner
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_matrix(rng: &mut ChaCha8Rng) -> ComplexMatrix {
        ComplexMatrix::from_fn(2, 2, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    /// Top-left and lower-left 2x2 blocks of a 4x4 block encoding, ancilla as the low bit.
    fn ancilla_block(b: &ComplexMatrix, out_bit: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(2, 2, |i, j| b[(2 * i + out_bit, 2 * j)])
    }

    #[test]
    fn spectral_norm_small_cases() {
        assert!((spectral_norm(&identity(2)) - 1.0).abs() < 1e-12);
        assert!((spectral_norm(&pauli_z()) - 1.0).abs() < 1e-12);
        let ipz = identity(2) + pauli_z();
        assert!((spectral_norm(&ipz) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn polar_of_unitary_is_trivial() {
        let (u, m) = polar_unitary(&pauli_x());
        assert!(max_abs_deviation(&u, &pauli_x()) < 1e-12);
        assert!(max_abs_deviation(&m, &identity(2)) < 1e-12);
    }

    #[test]
    fn polar_of_projector() {
        let p0 = ComplexMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ZERO]);
        let (u, m) = polar_unitary(&p0);
        assert!(max_abs_deviation(&m, &p0) < 1e-12);
        assert!(is_unitary(&u, 1e-12));
        assert!((u[(0, 0)] - ONE).norm() < 1e-12 && u[(1, 0)].norm() < 1e-12);
    }

    #[test]
    fn polar_reconstructs_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let a = random_matrix(&mut rng);
            let (u, m) = polar_unitary(&a);
            assert!(max_abs_deviation(&(&u * &m), &a) <= 1e-12);
            assert!(is_unitary(&u, 1e-12));
            assert!(max_abs_deviation(&m, &m.adjoint()) < 1e-12);
        }
    }

    #[test]
    fn block_encoding_of_z_is_zz() {
        let b = block_encode(&pauli_z()).unwrap();
        assert!(max_abs_deviation(&b, &kron(&pauli_z(), &pauli_z())) < 1e-12);
    }

    #[test]
    fn block_encoding_of_projector() {
        let p0 = ComplexMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ZERO]);
        let b = block_encode(&p0).unwrap();
        assert!(is_unitary(&b, 1e-12));
        assert!(max_abs_deviation(&ancilla_block(&b, 0), &p0) < 1e-12);
    }

    #[test]
    fn block_encoding_rejects_large_norm() {
        let big = identity(2) * c(1.5, 0.0);
        assert!(block_encode(&big).is_err());
    }

    #[test]
    fn block_encoding_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let a = random_matrix(&mut rng);
            let a = &a / c(spectral_norm(&a), 0.0);
            let b = block_encode(&a).unwrap();
            assert!(unitarity_deviation(&b) <= 1e-10);
            assert!(max_abs_deviation(&ancilla_block(&b, 0), &a) <= 1e-10);
        }
    }

    #[test]
    fn leakage_bound_at_eps() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let o = identity(2) + random_matrix(&mut rng) * c(0.3, 0.0);
            let gamma = spectral_norm(&(&o - identity(2)));
            let eps = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let (b, scale) = block_encode_at(&o, eps).unwrap();
            assert!(unitarity_deviation(&b) <= 1e-12);
            let o_eps = identity(2) + (&o - identity(2)) * eps;
            let top = ancilla_block(&b, 0) * c(scale, 0.0);
            assert!(max_abs_deviation(&top, &o_eps) <= 1e-12);
            let leak = spectral_norm(&ancilla_block(&b, 1));
            assert!(leak <= 2.0 * (gamma * eps.norm()).sqrt() + 1e-12);
        }
    }
}
