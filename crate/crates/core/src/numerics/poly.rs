use nalgebra::linalg::Schur;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{ComplexMatrix, TOL};
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Polynomial `c_0 + c_1 x + ... + c_deg x^deg` over the complex numbers.
///
/// Exact trailing zeros are trimmed on construction, so the last stored
/// coefficient is nonzero unless the polynomial is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ComplexPolynomial {
    coeffs: Vec<Complex64>,
}

impl ComplexPolynomial {
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.last().is_some_and(|c| *c == ZERO) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self { coeffs: vec![ONE] }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Coefficient of `x^k`, zero beyond the degree.
    pub fn coeff(&self, k: usize) -> Complex64 {
        self.coeffs.get(k).copied().unwrap_or(ZERO)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn eval(&self, x: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    pub fn l1_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).sum()
    }

    pub fn add(&self, other: &Self) -> Self {
        let len = self.coeffs.len().max(other.coeffs.len());
        Self::new((0..len).map(|k| self.coeff(k) + other.coeff(k)).collect())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![ZERO; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    /// Keep only the terms of degree `<= order`.
    pub fn truncate(&self, order: usize) -> Self {
        Self::new(self.coeffs.iter().take(order + 1).copied().collect())
    }
}

/// Taylor coefficients `a_1..a_p` of `ln f` at zero, with `f(0)` normalized to one.
///
/// Uses `m a_m = m c_m − Σ_{j=1}^{m−1} j a_j c_{m−j}` on the normalized
/// coefficients `c_k`; the constant term `ln f(0)` is not included.
pub fn log_taylor_coefficients(f: &[Complex64], order: usize) -> Result<Vec<Complex64>> {
    let f0 = f.first().copied().unwrap_or(ZERO);
    if f0 == ZERO {
        return Err(Error::ZeroPolynomial);
    }
    let c = |k: usize| f.get(k).map_or(ZERO, |&v| v / f0);
    let mut a = vec![ZERO; order + 1];
    for m in 1..=order {
        let mut acc = c(m) * m as f64;
        for j in 1..m {
            acc -= a[j] * c(m - j) * j as f64;
        }
        a[m] = acc / m as f64;
    }
    Ok(a.split_off(1))
}

/// Derivatives `g^{(1)}..g^{(p)}` at zero of `g = ln f`.
///
/// Solves the triangular system `f^{(m)} = Σ_{j=0}^{m−1} C(m−1, j) f^{(j)} g^{(m−j)}`
/// forward in `m`, after dividing `f` by `f(0)`.
pub fn log_taylor_from_poly(f: &ComplexPolynomial, order: usize) -> Result<Vec<Complex64>> {
    let f0 = f.coeff(0);
    if f0 == ZERO {
        return Err(Error::ZeroPolynomial);
    }
    // f^{(k)} = k! c_k
    let mut fact = vec![1.0f64; order + 1];
    for k in 1..=order {
        fact[k] = fact[k - 1] * k as f64;
    }
    let fd: Vec<Complex64> = (0..=order).map(|k| f.coeff(k) / f0 * fact[k]).collect();
    let mut g = vec![ZERO; order + 1];
    for m in 1..=order {
        let mut acc = fd[m];
        let mut binom = 1.0f64; // C(m-1, j)
        for j in 0..m {
            if j > 0 {
                binom = binom * (m - j) as f64 / j as f64;
            }
            if j == 0 {
                continue; // f^{(0)} g^{(m)} is the unknown
            }
            acc -= fd[j] * g[m - j] * binom;
        }
        g[m] = acc;
    }
    Ok(g.split_off(1))
}

/// All complex roots, with multiplicity, of a nonzero polynomial.
///
/// Eigenvalues of the balanced companion matrix, each followed by one
/// Newton step that is kept only if it lowers the residual. Leading
/// coefficients that are negligible relative to the largest one are
/// dropped first.
pub fn poly_roots(p: &ComplexPolynomial) -> Result<Vec<Complex64>> {
    if p.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    let scale = p.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut coeffs = p.coeffs().to_vec();
    while coeffs.len() > 1 && coeffs.last().unwrap().norm() <= TOL.root_trim * scale {
        coeffs.pop();
    }
    let deg = coeffs.len() - 1;
    if deg == 0 {
        return Ok(Vec::new());
    }
    // Roots at zero factor out exactly.
    let zeros = coeffs.iter().take_while(|c| **c == ZERO).count();
    let reduced = &coeffs[zeros..];
    let mut roots = vec![ZERO; zeros];
    let rdeg = reduced.len() - 1;
    if rdeg > 0 {
        let lead = reduced[rdeg];
        let mut comp = ComplexMatrix::zeros(rdeg, rdeg);
        for i in 1..rdeg {
            comp[(i, i - 1)] = ONE;
        }
        for i in 0..rdeg {
            comp[(i, rdeg - 1)] = -reduced[i] / lead;
        }
        balance(&mut comp);
        let eig = Schur::new(comp)
            .eigenvalues()
            .expect("complex Schur form is triangular");
        let poly = ComplexPolynomial::new(reduced.to_vec());
        let dpoly = poly.derivative();
        roots.extend(eig.iter().map(|&z| newton_polish(&poly, &dpoly, z)));
    }
    Ok(roots)
}

fn newton_polish(p: &ComplexPolynomial, dp: &ComplexPolynomial, z: Complex64) -> Complex64 {
    let val = p.eval(z);
    let slope = dp.eval(z);
    if slope == ZERO || !slope.is_finite() {
        return z;
    }
    let next = z - val / slope;
    if next.is_finite() && p.eval(next).norm() < val.norm() {
        next
    } else {
        z
    }
}

/// Diagonal similarity scaling that evens out row and column norms.
fn balance(m: &mut ComplexMatrix) {
    let n = m.nrows();
    let radix = 2.0f64;
    let mut converged = false;
    while !converged {
        converged = true;
        for i in 0..n {
            let mut col = 0.0;
            let mut row = 0.0;
            for j in 0..n {
                if j != i {
                    col += m[(j, i)].norm();
                    row += m[(i, j)].norm();
                }
            }
            if col == 0.0 || row == 0.0 {
                continue;
            }
            let sum = col + row;
            let mut f = 1.0;
            let mut g = row / radix;
            while col < g {
                f *= radix;
                col *= radix * radix;
            }
            g = row * radix;
            while col > g {
                f /= radix;
                col /= radix * radix;
            }
            if (col + row) / f < 0.95 * sum {
                converged = false;
                for j in 0..n {
                    m[(i, j)] /= f;
                    m[(j, i)] *= f;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sorted_by_arg(mut r: Vec<Complex64>) -> Vec<Complex64> {
        r.sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap());
        r
    }

    #[test]
    fn roots_of_one_plus_x_squared() {
        let roots = sorted_by_arg(poly_roots(&ComplexPolynomial::from_real(&[1.0, 0.0, 1.0])).unwrap());
        assert!((roots[0] - c(0.0, -1.0)).norm() < 1e-12);
        assert!((roots[1] - c(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn double_root() {
        let roots = poly_roots(&ComplexPolynomial::from_real(&[1.0, 2.0, 1.0])).unwrap();
        assert_eq!(roots.len(), 2);
        for r in roots {
            assert!((r + 1.0).norm() < 1e-6);
        }
    }

    #[test]
    fn ghz_two_layer_min_root() {
        // ((1+x)^4 + (1-x)^4)/2 = 1 + 6x^2 + x^4
        let p = ComplexPolynomial::from_real(&[1.0, 0.0, 6.0, 0.0, 1.0]);
        let roots = poly_roots(&p).unwrap();
        let min = roots.iter().map(|r| r.norm()).fold(f64::INFINITY, f64::min);
        // closed form root (-1 + e^{iπ/4}) / (1 + e^{iπ/4})
        let w = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
        let expected = ((w - 1.0) / (w + 1.0)).norm();
        assert!((min - expected).abs() < 1e-12);
        assert!((min - 0.414_213_56).abs() < 1e-8);
    }

    #[test]
    fn zero_polynomial_is_rejected() {
        assert_eq!(poly_roots(&ComplexPolynomial::zero()), Err(Error::ZeroPolynomial));
        assert!(poly_roots(&ComplexPolynomial::one()).unwrap().is_empty());
    }

    #[test]
    fn roots_at_origin() {
        let roots = poly_roots(&ComplexPolynomial::from_real(&[0.0, 0.0, 1.0, 1.0])).unwrap();
        assert_eq!(roots.iter().filter(|r| **r == ZERO).count(), 2);
        assert!(roots.iter().any(|r| (r + 1.0).norm() < 1e-12));
    }

    #[test]
    fn log_series_of_linear() {
        let a = c(0.3, -0.2);
        let f = ComplexPolynomial::new(vec![ONE, a]);
        let g = log_taylor_from_poly(&f, 3).unwrap();
        assert!((g[0] - a).norm() < 1e-14);
        assert!((g[1] + a * a).norm() < 1e-14);
        // ln(1+ax) = ax - a²x²/2 + a³x³/3, so g''' = 2a³
        assert!((g[2] - a * a * a * 2.0).norm() < 1e-14);
    }

    #[test]
    fn log_series_of_square() {
        let f = ComplexPolynomial::from_real(&[1.0, 2.0, 1.0]);
        let g = log_taylor_from_poly(&f, 3).unwrap();
        assert!((g[0] - 2.0).norm() < 1e-14);
        assert!((g[1] + 2.0).norm() < 1e-14);
        assert!((g[2] - 4.0).norm() < 1e-14);
    }

    #[test]
    fn log_series_of_constant() {
        let g = log_taylor_from_poly(&ComplexPolynomial::one(), 5).unwrap();
        assert!(g.iter().all(|v| *v == ZERO));
        assert!(log_taylor_from_poly(&ComplexPolynomial::from_real(&[0.0, 1.0]), 2).is_err());
    }

    #[test]
    fn derivative_and_coefficient_forms_agree() {
        let f = ComplexPolynomial::new(vec![c(2.0, 0.5), c(0.3, 1.0), c(-0.7, 0.2), c(0.1, 0.1)]);
        let derivs = log_taylor_from_poly(&f, 8).unwrap();
        let coeffs = log_taylor_coefficients(f.coeffs(), 8).unwrap();
        let mut fact = 1.0;
        for (k, (d, a)) in derivs.iter().zip(&coeffs).enumerate() {
            fact *= (k + 1) as f64;
            assert!((d / fact - a).norm() < 1e-11 * (1.0 + a.norm()));
        }
    }

    /// exp of a power series truncated at `order`, by the same recurrence run forwards.
    fn exp_series(a: &[Complex64], order: usize) -> Vec<Complex64> {
        let mut e = vec![ZERO; order + 1];
        e[0] = ONE;
        for m in 1..=order {
            let mut acc = ZERO;
            for j in 1..=m {
                acc += a.get(j - 1).copied().unwrap_or(ZERO) * e[m - j] * j as f64;
            }
            e[m] = acc / m as f64;
        }
        e
    }

    proptest! {
        #[test]
        fn exponentiating_the_log_series_recovers_f(
            raw in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..8),
            order in 1usize..10,
        ) {
            let mut coeffs = vec![ONE];
            coeffs.extend(raw.iter().map(|&(re, im)| c(re, im)));
            let a = log_taylor_coefficients(&coeffs, order).unwrap();
            let back = exp_series(&a, order);
            for k in 0..=order {
                let want = coeffs.get(k).copied().unwrap_or(ZERO);
                prop_assert!((back[k] - want).norm() < 1e-10 * (1.0 + want.norm()));
            }
        }

        #[test]
        fn random_roots_have_small_residual(
            raw in proptest::collection::vec((0.0f64..1.0, 0.0f64..std::f64::consts::TAU), 2..14),
        ) {
            let coeffs: Vec<Complex64> =
                raw.iter().map(|&(u, t)| Complex64::from_polar(u.sqrt(), t)).collect();
            let p = ComplexPolynomial::new(coeffs);
            prop_assume!(p.coeffs().last().is_some_and(|c| c.norm() > 1e-12));
            let roots = poly_roots(&p).unwrap();
            prop_assert_eq!(roots.len(), p.degree().unwrap());
            for r in roots {
                let residual = p.eval(r).norm() / p.l1_norm();
                // Evaluating p anywhere near r in double precision cannot do better than this.
                let floor = f64::EPSILON
                    * p.coeffs().iter().rev().fold(0.0, |acc, c| acc * r.norm() + c.norm())
                    / p.l1_norm();
                if floor <= 1e-8 {
                    prop_assert!(residual <= 1e-8, "residual {residual:e} at {r}");
                } else {
                    prop_assert!(residual <= 4.0 * floor, "residual {residual:e} floor {floor:e}");
                }
            }
        }
    }
}
