use std::collections::HashMap;

use fixedbitset::FixedBitSet;

use crate::circuit::{restrict_circuit, Circuit, QubitCones};
use crate::error::{Error, Result};
use crate::oracle::StateVector;

/// Number of onto maps `[r] → [k]`.
///
/// Panics if the count overflows `u128`.
pub fn surjection_count(r: u32, k: u32) -> u128 {
    if k > r {
        return 0;
    }
    // Surj(r, k) = k (Surj(r−1, k) + Surj(r−1, k−1))
    let k = k as usize;
    let mut row = vec![0u128; k + 1];
    row[0] = 1;
    for _ in 0..r {
        for j in (1..=k).rev() {
            row[j] = (row[j] + row[j - 1])
                .checked_mul(j as u128)
                .expect("surjection count overflows u128");
        }
        row[0] = 0;
    }
    row[k]
}

/// `C(n, k)` as `u128`, saturating.
pub(crate) fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// Lightcone-restricted terms `⟨0|U Π_S U†|0⟩` with `Π_S = ∏_{j∈S} |1⟩⟨1|_j`.
///
/// Subsets are split into groups with disjoint forward lightcones, whose terms
/// multiply. For each group's cone the superset sums of `|⟨z|U_C†|0⟩|²` are
/// tabulated once, so a term is a table lookup.
pub(crate) struct TermEngine<'a> {
    circuit: &'a Circuit,
    cones: QubitCones,
    tables: HashMap<Vec<usize>, Vec<f64>>,
    cached: usize,
}

/// Superset tables are dropped once this many entries are cached.
const TABLE_CACHE_ENTRIES: usize = 1 << 25;

impl<'a> TermEngine<'a> {
    pub fn new(circuit: &'a Circuit) -> Self {
        Self {
            circuit,
            cones: QubitCones::new(circuit),
            tables: HashMap::new(),
            cached: 0,
        }
    }

    fn table(&mut self, cone: &[usize]) -> &[f64] {
        if !self.tables.contains_key(cone) {
            let (restricted, _) = restrict_circuit(self.circuit, cone);
            let mut phi = StateVector::zero(cone.len());
            phi.apply_circuit(&restricted.inverse());
            let mut t: Vec<f64> = phi.amplitudes().iter().map(|a| a.norm_sqr()).collect();
            for b in 0..cone.len() {
                let bit = 1usize << b;
                for z in 0..t.len() {
                    if z & bit == 0 {
                        t[z] += t[z | bit];
                    }
                }
            }
            if self.cached + t.len() > TABLE_CACHE_ENTRIES {
                self.tables.clear();
                self.cached = 0;
            }
            self.cached += t.len();
            self.tables.insert(cone.to_vec(), t);
        }
        &self.tables[cone]
    }

    /// Groups of `s` that are connected through overlapping forward cones.
    fn groups(&self, s: &[usize]) -> Vec<(Vec<usize>, FixedBitSet)> {
        let mut groups: Vec<(Vec<usize>, FixedBitSet)> = Vec::new();
        for &q in s {
            let mut members = vec![q];
            let mut cone = self.cones.forward(q).clone();
            let mut k = 0;
            while k < groups.len() {
                if groups[k].1.is_disjoint(&cone) {
                    k += 1;
                } else {
                    let (m, c) = groups.swap_remove(k);
                    members.extend(m);
                    cone.union_with(&c);
                    k = 0;
                }
            }
            groups.push((members, cone));
        }
        groups
    }

    pub fn term(&mut self, s: &[usize]) -> f64 {
        let mut prod = 1.0;
        for (members, cone_bits) in self.groups(s) {
            let cone: Vec<usize> = cone_bits.ones().collect();
            let width = cone.len();
            let mask = members.iter().fold(0usize, |m, q| {
                let local = cone.binary_search(q).expect("member lies in its cone");
                m | 1 << (width - 1 - local)
            });
            prod *= self.table(&cone)[mask];
            if prod == 0.0 {
                break;
            }
        }
        prod
    }

    /// Binomial moments `b_k = Σ_{|S|=k} term(S)` for `k = 0..=kmax`, `b_0 = 1`.
    pub fn binomial_moments(&mut self, kmax: usize, budget: u128) -> Result<(Vec<f64>, u128)> {
        let n = self.circuit.n();
        let kmax = kmax.min(n);
        let count: u128 = (1..=kmax).map(|k| binomial(n, k)).fold(0, u128::saturating_add);
        if count > budget {
            return Err(Error::BudgetExceeded { count, budget });
        }
        let mut b = vec![0.0; kmax + 1];
        b[0] = 1.0;
        for (k, bk) in b.iter_mut().enumerate().skip(1) {
            let mut idx: Vec<usize> = (0..k).collect();
            let mut acc = 0.0;
            loop {
                acc += self.term(&idx);
                // next combination in lexicographic order
                let mut i = k;
                while i > 0 && idx[i - 1] == n - k + i - 1 {
                    i -= 1;
                }
                if i == 0 {
                    break;
                }
                idx[i - 1] += 1;
                for j in i..k {
                    idx[j] = idx[j - 1] + 1;
                }
            }
            *bk = acc;
        }
        Ok((b, count))
    }
}

/// `⟨0ⁿ|H^r|0ⁿ⟩` for `H = Σ_j U|1⟩⟨1|_j U†`, as `Σ_k Surj(r, k) Σ_{|S|=k} term(S)`.
pub fn h_moment_lightcone(circuit: &Circuit, r: u32, budget: u128) -> Result<f64> {
    if r == 0 {
        return Ok(1.0);
    }
    let mut engine = TermEngine::new(circuit);
    let (b, _) = engine.binomial_moments(r as usize, budget)?;
    Ok(b.iter()
        .enumerate()
        .skip(1)
        .map(|(k, bk)| surjection_count(r, k as u32) as f64 * bk)
        .sum())
}
