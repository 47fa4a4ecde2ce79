use serde::Serialize;

use crate::error::{Error, Result};

/// Real polynomial with `g(0) = 1` and `|g(c)| ≤ δ` for `c = 1..=n`.
///
/// `g(x) = T_L(t(x)) / T_L(t(0))` where `t` maps `[1, n]` onto `[−1, 1]`;
/// for `n = 1` it is `1 − x`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DampingPolynomial {
    n: usize,
    delta: f64,
    degree: usize,
    /// Monomial coefficients `g_0..g_L`, `g_0 = 1`.
    coeffs: Vec<f64>,
    max_abs: f64,
}

fn affine(n: usize) -> (f64, f64) {
    // t(x) = a x + b
    let m = (n - 1) as f64;
    (2.0 / m, -((n + 1) as f64) / m)
}

fn chebyshev(l: usize, t: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, t);
    if l == 0 {
        return prev;
    }
    for _ in 1..l {
        let next = 2.0 * t * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Monomial coefficients of `T_l(a x + b)`.
fn chebyshev_monomials(l: usize, a: f64, b: f64) -> Vec<f64> {
    let mut prev = vec![1.0];
    let mut cur = vec![b, a];
    if l == 0 {
        return prev;
    }
    for _ in 1..l {
        let mut next = vec![0.0; cur.len() + 1];
        for (k, &c) in cur.iter().enumerate() {
            next[k] += 2.0 * b * c;
            next[k + 1] += 2.0 * a * c;
        }
        for (k, &p) in prev.iter().enumerate() {
            next[k] -= p;
        }
        prev = cur;
        cur = next;
    }
    cur
}

impl DampingPolynomial {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `max_{c=1..n} |g(c)|` as evaluated at construction.
    pub fn max_abs_on_support(&self) -> f64 {
        self.max_abs
    }

    /// `g(x)` through the Chebyshev recurrence.
    pub fn eval(&self, x: f64) -> f64 {
        if self.n == 1 {
            return 1.0 - x;
        }
        let (a, b) = affine(self.n);
        chebyshev(self.degree, a * x + b) / chebyshev(self.degree, b)
    }

    /// `g(x)` from the monomial coefficients; loses accuracy for large degree.
    pub fn eval_monomial(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    /// Forward differences `Δ^k g(0)` for `k = 0..=kmax`, so that
    /// `g(w) = Σ_k Δ^k g(0) C(w, k)` for integers `w ≥ 0`.
    pub fn forward_differences(&self, kmax: usize) -> Vec<f64> {
        let mut row: Vec<f64> = (0..=kmax).map(|i| self.eval(i as f64)).collect();
        let mut out = Vec::with_capacity(kmax + 1);
        for k in 0..=kmax {
            out.push(row[0]);
            for i in 0..kmax - k {
                row[i] = row[i + 1] - row[i];
            }
        }
        out
    }
}

pub fn build_damping_polynomial(n: usize, delta: f64) -> Result<DampingPolynomial> {
    if n == 0 {
        return Err(Error::InvalidArgument("damping polynomial needs n >= 1".into()));
    }
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::InvalidArgument(format!("delta = {delta} must lie in (0, 1/2)")));
    }
    if n == 1 {
        return Ok(DampingPolynomial {
            n,
            delta,
            degree: 1,
            coeffs: vec![1.0, -1.0],
            max_abs: 0.0,
        });
    }
    let (a, b) = affine(n);
    let growth = (-b).acosh();
    let mut degree = ((1.0 / delta).acosh() / growth).ceil().max(1.0) as usize;
    // The closed form can land one short (or be exactly at the edge) after rounding.
    while chebyshev(degree, b).abs() < 1.0 / delta {
        degree += 1;
    }
    loop {
        let mut poly = DampingPolynomial {
            n,
            delta,
            degree,
            coeffs: Vec::new(),
            max_abs: 0.0,
        };
        poly.max_abs = (1..=n).map(|c| poly.eval(c as f64).abs()).fold(0.0, f64::max);
        if poly.max_abs <= delta {
            let raw = chebyshev_monomials(degree, a, b);
            let g0 = raw[0];
            poly.coeffs = raw.iter().map(|r| r / g0).collect();
            poly.coeffs[0] = 1.0;
            return Ok(poly);
        }
        degree += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_qubit_is_linear() {
        let g = build_damping_polynomial(1, 0.1).unwrap();
        assert_eq!(g.coeffs(), &[1.0, -1.0]);
        assert_eq!(g.eval(0.0), 1.0);
        assert_eq!(g.eval(1.0), 0.0);
    }

    #[test]
    fn sixteen_qubits_at_one_tenth() {
        let g = build_damping_polynomial(16, 0.1).unwrap();
        // t(0) = −17/15; cosh(5 acosh(17/15)) ≈ 7.05 < 10 ≤ cosh(6 acosh(17/15)) ≈ 12.7
        assert_eq!(g.degree(), 6);
        let t0 = 17.0f64 / 15.0;
        assert!((5.0 * t0.acosh()).cosh() < 10.0);
        assert!((6.0 * t0.acosh()).cosh() >= 10.0);
        assert_eq!(g.eval(0.0), 1.0);
        assert!(g.max_abs_on_support() <= 0.1);
    }

    #[test]
    fn conditions_hold_across_sizes() {
        for n in [2, 3, 4, 10, 16, 64, 200] {
            for delta in [0.1, 0.01, 0.001] {
                let g = build_damping_polynomial(n, delta).unwrap();
                assert_eq!(g.eval(0.0), 1.0);
                assert_eq!(g.coeffs()[0], 1.0);
                for c in 1..=n {
                    assert!(g.eval(c as f64).abs() <= delta, "n={n} delta={delta} c={c}");
                }
            }
        }
    }

    #[test]
    fn monomial_form_agrees_for_small_degree() {
        let g = build_damping_polynomial(8, 0.05).unwrap();
        for x in 0..=8 {
            let x = x as f64;
            assert!((g.eval(x) - g.eval_monomial(x)).abs() < 1e-10);
        }
    }

    #[test]
    fn newton_form_reproduces_values() {
        let g = build_damping_polynomial(12, 0.01).unwrap();
        let diffs = g.forward_differences(12);
        for w in 0..=12usize {
            let mut binom = 1.0;
            let mut acc = 0.0;
            for (k, d) in diffs.iter().enumerate().take(w + 1) {
                if k > 0 {
                    binom = binom * (w + 1 - k) as f64 / k as f64;
                }
                acc += d * binom;
            }
            assert!((acc - g.eval(w as f64)).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(build_damping_polynomial(0, 0.1).is_err());
        assert!(build_damping_polynomial(4, 0.5).is_err());
        assert!(build_damping_polynomial(4, 0.0).is_err());
    }
}
