//! Open-boundary matrix product states with exact SVD compression.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::numerics::ComplexMatrix;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Rank-3 tensor `A[a, s, b]` stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteTensor {
    left: usize,
    phys: usize,
    right: usize,
    data: Vec<Complex64>,
}

impl SiteTensor {
    pub fn new(left: usize, phys: usize, right: usize, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), left * phys * right);
        Self { left, phys, right, data }
    }

    pub fn left(&self) -> usize {
        self.left
    }

    pub fn phys(&self) -> usize {
        self.phys
    }

    pub fn right(&self) -> usize {
        self.right
    }

    pub fn get(&self, a: usize, s: usize, b: usize) -> Complex64 {
        self.data[(a * self.phys + s) * self.right + b]
    }

    /// `(left·phys) × right`.
    fn left_matrix(&self) -> ComplexMatrix {
        DMatrix::from_row_slice(self.left * self.phys, self.right, &self.data)
    }

    /// `left × (phys·right)`.
    fn right_matrix(&self) -> ComplexMatrix {
        DMatrix::from_row_slice(self.left, self.phys * self.right, &self.data)
    }

    fn from_matrix(m: &ComplexMatrix, left: usize, phys: usize, right: usize) -> Self {
        let (rows, cols) = m.shape();
        debug_assert_eq!(rows * cols, left * phys * right);
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(m[(r, c)]);
            }
        }
        Self::new(left, phys, right, data)
    }

    /// The `left × right` matrix at physical index `s`.
    fn slice(&self, s: usize) -> ComplexMatrix {
        DMatrix::from_fn(self.left, self.right, |a, b| self.get(a, s, b))
    }
}

/// Product of `v` (row vector) with the slice `A[:, s, :]`.
fn row_times_slice(v: &[Complex64], t: &SiteTensor, s: usize) -> Vec<Complex64> {
    let mut out = vec![ZERO; t.right];
    for (a, &va) in v.iter().enumerate() {
        if va == ZERO {
            continue;
        }
        let base = (a * t.phys + s) * t.right;
        for (b, o) in out.iter_mut().enumerate() {
            *o += va * t.data[base + b];
        }
    }
    out
}

/// Left and right factors of a truncated SVD keeping singular values above
/// `cutoff · σ_max` (at least one). Returns `(U_k, S_k V_k†)` or `(U_k S_k, V_k†)`.
fn split(m: &ComplexMatrix, cutoff: f64, weight_left: bool) -> (ComplexMatrix, ComplexMatrix) {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested V^T");
    let s = &svd.singular_values;
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&i, &j| s[j].total_cmp(&s[i]));
    let smax = s.iter().copied().fold(0.0, f64::max);
    let keep = order
        .iter()
        .take_while(|&&i| s[i] > cutoff * smax)
        .count()
        .max(1);
    let kept = &order[..keep];
    let mut left = DMatrix::from_fn(u.nrows(), keep, |r, c| u[(r, kept[c])]);
    let mut right = DMatrix::from_fn(keep, vt.ncols(), |r, c| vt[(kept[r], c)]);
    for (c, &i) in kept.iter().enumerate() {
        let sc = Complex64::new(s[i], 0.0);
        if weight_left {
            left.column_mut(c).scale_mut(s[i]);
        } else {
            right.row_mut(c).iter_mut().for_each(|x| *x *= sc);
        }
    }
    (left, right)
}

/// Matrix product operator tensor `W[a, out, in, b]` on a qubit.
#[derive(Debug, Clone)]
struct MpoTensor {
    left: usize,
    right: usize,
    data: Vec<Complex64>,
}

impl MpoTensor {
    fn get(&self, a: usize, o: usize, i: usize, b: usize) -> Complex64 {
        self.data[((a * 2 + o) * 2 + i) * self.right + b]
    }
}

/// Splits a `2^k × 2^k` operator into `k` MPO tensors by successive SVDs.
fn operator_to_mpo(m: &ComplexMatrix, k: usize, cutoff: f64) -> Vec<MpoTensor> {
    let dim = 1usize << k;
    assert_eq!(m.shape(), (dim, dim));
    // Interleave (out_j, in_j) pairs: index Σ_j (2 o_j + i_j) 4^{k-1-j}.
    let mut t = vec![ZERO; dim * dim];
    for o in 0..dim {
        for i in 0..dim {
            let mut idx = 0;
            for j in 0..k {
                let shift = k - 1 - j;
                idx = idx * 4 + ((o >> shift & 1) << 1 | (i >> shift & 1));
            }
            t[idx] = m[(o, i)];
        }
    }
    let mut tensors = Vec::with_capacity(k);
    let mut bond = 1;
    let mut rest = t;
    for j in 0..k - 1 {
        let cols = 1usize << (2 * (k - 1 - j));
        let mat = DMatrix::from_row_slice(bond * 4, cols, &rest);
        let (u, sv) = split(&mat, cutoff, false);
        let kk = u.ncols();
        let st = SiteTensor::from_matrix(&u, bond, 4, kk);
        tensors.push(MpoTensor { left: bond, right: kk, data: st.data });
        rest = SiteTensor::from_matrix(&sv, kk, 1, cols).data;
        bond = kk;
    }
    tensors.push(MpoTensor { left: bond, right: 1, data: rest });
    tensors
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mps {
    sites: Vec<SiteTensor>,
}

impl Mps {
    pub fn new(sites: Vec<SiteTensor>) -> Self {
        assert!(!sites.is_empty());
        assert_eq!(sites[0].left, 1);
        assert_eq!(sites[sites.len() - 1].right, 1);
        for w in sites.windows(2) {
            assert_eq!(w[0].right, w[1].left);
        }
        Self { sites }
    }

    /// Product state with the given single-site vectors.
    pub fn product(states: &[Vec<Complex64>]) -> Self {
        Self::new(
            states
                .iter()
                .map(|v| SiteTensor::new(1, v.len(), 1, v.clone()))
                .collect(),
        )
    }

    /// `|0…0⟩` with the given physical dimensions.
    pub fn zero_state(phys: &[usize]) -> Self {
        Self::product(
            &phys
                .iter()
                .map(|&p| {
                    let mut v = vec![ZERO; p];
                    v[0] = ONE;
                    v
                })
                .collect::<Vec<_>>(),
        )
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[SiteTensor] {
        &self.sites
    }

    pub fn phys_dims(&self) -> Vec<usize> {
        self.sites.iter().map(|t| t.phys).collect()
    }

    /// Bond dimension after each site except the last.
    pub fn bond_dims(&self) -> Vec<usize> {
        self.sites[..self.sites.len() - 1].iter().map(|t| t.right).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    pub fn scale(&mut self, c: Complex64) {
        self.sites[0].data.iter_mut().for_each(|x| *x *= c);
    }

    /// Concatenation `self ⊗ other`.
    pub fn append(&mut self, other: Mps) {
        self.sites.extend(other.sites);
    }

    /// `⟨x|ψ⟩`.
    pub fn amplitude(&self, x: &[usize]) -> Complex64 {
        assert_eq!(x.len(), self.sites.len());
        let mut v = vec![ONE];
        for (t, &s) in self.sites.iter().zip(x) {
            v = row_times_slice(&v, t, s);
        }
        v[0]
    }

    /// `⟨self|other⟩` for states with matching physical dimensions.
    pub fn inner(&self, other: &Mps) -> Complex64 {
        assert_eq!(self.phys_dims(), other.phys_dims());
        let mut env = DMatrix::from_element(1, 1, ONE);
        for (a, b) in self.sites.iter().zip(&other.sites) {
            let mut next = DMatrix::from_element(a.right, b.right, ZERO);
            for s in 0..a.phys {
                next += a.slice(s).adjoint() * &env * b.slice(s);
            }
            env = next;
        }
        env[(0, 0)]
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).re.max(0.0).sqrt()
    }

    /// Dense amplitudes; site 0 is the most significant digit.
    pub fn to_dense(&self) -> Vec<Complex64> {
        let mut cur = vec![ONE];
        let mut rows = 1;
        for t in &self.sites {
            let mut next = vec![ZERO; rows * t.phys * t.right];
            for r in 0..rows {
                for a in 0..t.left {
                    let c = cur[r * t.left + a];
                    if c == ZERO {
                        continue;
                    }
                    for s in 0..t.phys {
                        let src = (a * t.phys + s) * t.right;
                        let dst = (r * t.phys + s) * t.right;
                        for b in 0..t.right {
                            next[dst + b] += c * t.data[src + b];
                        }
                    }
                }
            }
            rows *= t.phys;
            cur = next;
        }
        cur
    }

    /// Applies a dense operator on qubit sites `positions` (strictly increasing), the
    /// first position being the most significant bit of the matrix index.
    pub fn apply_operator(&mut self, positions: &[usize], m: &ComplexMatrix, cutoff: f64) {
        let k = positions.len();
        assert!(k > 0 && positions.windows(2).all(|w| w[0] < w[1]));
        let mpo = operator_to_mpo(m, k, cutoff);
        let (first, last) = (positions[0], positions[k - 1]);
        let mut next_op = 0;
        let mut bond = 1;
        for p in first..=last {
            let a = &self.sites[p];
            assert_eq!(a.phys, 2, "operators act on qubit sites");
            let w = if positions.get(next_op) == Some(&p) {
                next_op += 1;
                mpo[next_op - 1].clone()
            } else {
                identity_mpo(bond)
            };
            bond = w.right;
            let (l, r) = (w.left * a.left, w.right * a.right);
            let mut data = vec![ZERO; l * 2 * r];
            for wa in 0..w.left {
                for wb in 0..w.right {
                    for o in 0..2 {
                        for i in 0..2 {
                            let c = w.get(wa, o, i, wb);
                            if c == ZERO {
                                continue;
                            }
                            for al in 0..a.left {
                                for ar in 0..a.right {
                                    let dst = ((wa * a.left + al) * 2 + o) * r + wb * a.right + ar;
                                    data[dst] += c * a.get(al, i, ar);
                                }
                            }
                        }
                    }
                }
            }
            self.sites[p] = SiteTensor::new(l, 2, r, data);
        }
        self.compress(cutoff);
    }

    /// Left-canonical QR sweep followed by a right-to-left SVD sweep that drops
    /// singular values below `cutoff` relative to the largest at each cut.
    pub fn compress(&mut self, cutoff: f64) {
        let n = self.sites.len();
        for i in 0..n.saturating_sub(1) {
            let t = &self.sites[i];
            let (l, p) = (t.left, t.phys);
            let qr = t.left_matrix().qr();
            let (q, r) = (qr.q(), qr.r());
            let k = q.ncols();
            self.sites[i] = SiteTensor::from_matrix(&q, l, p, k);
            let nt = &self.sites[i + 1];
            let (np, nr) = (nt.phys, nt.right);
            let merged = r * nt.right_matrix();
            self.sites[i + 1] = SiteTensor::from_matrix(&merged, k, np, nr);
        }
        for i in (1..n).rev() {
            let t = &self.sites[i];
            let (p, r) = (t.phys, t.right);
            let (us, vt) = split(&t.right_matrix(), cutoff, true);
            let k = vt.nrows();
            self.sites[i] = SiteTensor::from_matrix(&vt, k, p, r);
            let pt = &self.sites[i - 1];
            let (pl, pp) = (pt.left, pt.phys);
            let merged = pt.left_matrix() * us;
            self.sites[i - 1] = SiteTensor::from_matrix(&merged, pl, pp, k);
        }
    }

    /// Contracts consecutive sites in groups of the given sizes.
    pub fn merge(&self, groups: &[usize]) -> Mps {
        assert_eq!(groups.iter().sum::<usize>(), self.sites.len());
        let mut out = Vec::with_capacity(groups.len());
        let mut start = 0;
        for &g in groups {
            let mut acc = self.sites[start].clone();
            for t in &self.sites[start + 1..start + g] {
                let m = acc.left_matrix() * t.right_matrix();
                acc = SiteTensor::from_matrix(&m, acc.left, acc.phys * t.phys, t.right);
            }
            out.push(acc);
            start += g;
        }
        Mps::new(out)
    }
}

fn identity_mpo(bond: usize) -> MpoTensor {
    let mut data = vec![ZERO; bond * 4 * bond];
    for a in 0..bond {
        for s in 0..2 {
            data[((a * 2 + s) * 2 + s) * bond + a] = ONE;
        }
    }
    MpoTensor { left: bond, right: bond, data }
}

/// Exact sequential sampler for `|⟨x|ψ⟩|² / ⟨ψ|ψ⟩`.
pub struct MpsSampler<'a> {
    mps: &'a Mps,
    /// `envs[i]` contracts sites `i..` with their conjugates.
    envs: Vec<ComplexMatrix>,
}

impl<'a> MpsSampler<'a> {
    pub fn new(mps: &'a Mps) -> Self {
        let n = mps.len();
        let mut envs = vec![DMatrix::from_element(1, 1, ONE); n + 1];
        for i in (0..n).rev() {
            let t = &mps.sites[i];
            let mut e = DMatrix::from_element(t.left, t.left, ZERO);
            for s in 0..t.phys {
                let a = t.slice(s);
                e += &a * &envs[i + 1] * a.adjoint();
            }
            envs[i] = e;
        }
        Self { mps, envs }
    }

    /// A draw `x` together with its probability `π(x)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vec<usize>, f64) {
        let mut v = vec![ONE];
        let mut x = Vec::with_capacity(self.mps.len());
        let mut prob = 1.0;
        for (i, t) in self.mps.sites.iter().enumerate() {
            let env = &self.envs[i + 1];
            let mut weights = Vec::with_capacity(t.phys);
            let mut rows = Vec::with_capacity(t.phys);
            for s in 0..t.phys {
                let w = row_times_slice(&v, t, s);
                let mut p = 0.0;
                for (b, wb) in w.iter().enumerate() {
                    if *wb == ZERO {
                        continue;
                    }
                    for (c, wc) in w.iter().enumerate() {
                        p += (wb * env[(b, c)] * wc.conj()).re;
                    }
                }
                weights.push(p.max(0.0));
                rows.push(w);
            }
            let total: f64 = weights.iter().sum();
            let mut u = rng.random::<f64>() * total;
            let mut pick = weights.iter().rposition(|&w| w > 0.0).unwrap_or(0);
            for (s, &w) in weights.iter().enumerate() {
                if w > 0.0 && u < w {
                    pick = s;
                    break;
                }
                u -= w;
            }
            prob *= weights[pick] / total;
            let scale = 1.0 / weights[pick].sqrt();
            v = rows.swap_remove(pick).into_iter().map(|c| c * scale).collect();
            x.push(pick);
        }
        (x, prob)
    }
}
