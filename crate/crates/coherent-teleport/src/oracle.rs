//! Truncated occupation-number oracle.
//!
//! Everything else in this crate manipulates exponential vectors analytically.
//! This module instead materializes states in the occupation-number basis of
//! `M` modes with a hard cap on the total photon number, so that inner
//! products and channel probabilities can be recomputed by brute force and
//! compared against the analytic engine. It is a test surface: nothing in the
//! production channel path calls into it.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Occupation-number basis of `modes` bosonic modes, truncated to total
/// photon number `max_total`. Basis tuples are enumerated in graded
/// lexicographic order, so the vacuum is index 0 and each total-number
/// sector is contiguous.
pub struct TruncatedFock {
    modes: usize,
    max_total: usize,
    tuples: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
}

/// Hard cap on basis size; above this the dense oracle stops being "a quick
/// cross-check" and turns into a memory hog.
pub const MAX_ORACLE_DIM: usize = 400_000;

impl TruncatedFock {
    pub fn new(modes: usize, max_total: usize) -> Result<Self> {
        if modes == 0 {
            return Err(Error::InvalidConfig("oracle needs at least one mode".into()));
        }
        let dim = basis_dim(modes, max_total);
        if dim > MAX_ORACLE_DIM {
            return Err(Error::ResourceLimit(format!(
                "truncated basis would have {dim} states (cap {MAX_ORACLE_DIM})"
            )));
        }
        let mut tuples = Vec::with_capacity(dim);
        for total in 0..=max_total {
            push_compositions(modes, total as u32, &mut Vec::new(), &mut tuples);
        }
        debug_assert_eq!(tuples.len(), dim);
        let index = tuples
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Ok(Self { modes, max_total, tuples, index })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn max_total(&self) -> usize {
        self.max_total
    }

    pub fn dim(&self) -> usize {
        self.tuples.len()
    }

    /// Index of the all-zero tuple.
    pub fn vacuum_index(&self) -> usize {
        0
    }

    pub fn tuple(&self, idx: usize) -> &[u32] {
        &self.tuples[idx]
    }

    pub fn index_of(&self, tuple: &[u32]) -> Option<usize> {
        self.index.get(tuple).copied()
    }
}

/// C(modes + max_total, modes), computed without overflow for sane sizes.
pub fn basis_dim(modes: usize, max_total: usize) -> usize {
    let mut dim: u128 = 1;
    for k in 1..=modes {
        dim = dim * (max_total + k) as u128 / k as u128;
    }
    dim.min(usize::MAX as u128) as usize
}

fn push_compositions(modes: usize, total: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if modes == 1 {
        let mut t = prefix.clone();
        t.push(total);
        out.push(t);
        return;
    }
    for first in 0..=total {
        prefix.push(first);
        push_compositions(modes - 1, total - first, prefix, out);
        prefix.pop();
    }
}

/// A state in a [`TruncatedFock`] basis together with a bound on the squared
/// norm that was lost to truncation.
#[derive(Clone)]
pub struct OracleVector {
    pub amplitudes: DVector<Complex64>,
    /// Upper bound on the squared norm of the dropped high-photon tail.
    pub tail_sq: f64,
}

impl OracleVector {
    pub fn zero(space: &TruncatedFock) -> Self {
        Self { amplitudes: DVector::zeros(space.dim()), tail_sq: 0.0 }
    }

    pub fn norm_sq(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    /// Conjugate-linear in `self`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    pub fn scale(&mut self, c: Complex64) {
        self.amplitudes *= c;
        // |c| ≤ 1 in every use here, but stay conservative.
        self.tail_sq *= c.norm_sqr().max(1.0);
    }

    pub fn add_scaled(&mut self, c: Complex64, other: &Self) {
        self.amplitudes += &other.amplitudes * c;
        let t = (self.tail_sq.sqrt() + c.norm() * other.tail_sq.sqrt()).powi(2);
        self.tail_sq = t;
    }

    /// Remove the vacuum component (the projection 1 - |exp(0)><exp(0)|).
    pub fn project_out_vacuum(&mut self, space: &TruncatedFock) {
        self.amplitudes[space.vacuum_index()] = Complex64::new(0.0, 0.0);
    }
}

/// Remainder e^x - sum_{k<=n} x^k/k!, summed forward from the first dropped
/// term; x must be >= 0.
pub fn exp_series_tail(x: f64, n: usize) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    // term_{n+1} = x^{n+1}/(n+1)!
    let mut term = 1.0f64;
    for k in 1..=(n + 1) {
        term *= x / k as f64;
    }
    let mut tail = 0.0f64;
    let mut k = n + 1;
    while term > tail * 1e-18 + 1e-320 {
        tail += term;
        k += 1;
        term *= x / k as f64;
    }
    tail
}

/// Truncated exponential vector: amplitude at tuple (n_1..n_M) is
/// prod_i g_i^{n_i} / sqrt(n_i!).
pub fn oracle_exp(space: &TruncatedFock, g: &DVector<Complex64>) -> Result<OracleVector> {
    if g.len() != space.modes {
        return Err(Error::DimensionMismatch { expected: space.modes, found: g.len() });
    }
    let gg = g.norm_squared();
    if gg > space.max_total as f64 / 4.0 {
        return Err(Error::ResourceLimit(format!(
            "|g|^2 = {gg:.3} too large for cutoff {} (need |g|^2 <= cutoff/4)",
            space.max_total
        )));
    }
    // pow_tab[i][k] = g_i^k / sqrt(k!)
    let mut pow_tab: Vec<Vec<Complex64>> = Vec::with_capacity(space.modes);
    for i in 0..space.modes {
        let mut col = Vec::with_capacity(space.max_total + 1);
        col.push(Complex64::new(1.0, 0.0));
        for k in 1..=space.max_total {
            let prev = col[k - 1];
            col.push(prev * g[i] / (k as f64).sqrt());
        }
        pow_tab.push(col);
    }
    let mut amplitudes = DVector::zeros(space.dim());
    for (idx, tuple) in space.tuples.iter().enumerate() {
        let mut amp = Complex64::new(1.0, 0.0);
        for (i, &n) in tuple.iter().enumerate() {
            amp *= pow_tab[i][n as usize];
        }
        amplitudes[idx] = amp;
    }
    Ok(OracleVector { amplitudes, tail_sq: exp_series_tail(gg, space.max_total) })
}

/// Second quantization in the truncated basis: each occupation basis state is
/// rebuilt with the transformed creation operators b_i^† = sum_j t_ji a_j^†.
/// Total photon number is preserved, so no extra truncation loss occurs.
pub fn oracle_second_quantize(
    space: &TruncatedFock,
    t: &DMatrix<Complex64>,
    v: &OracleVector,
) -> Result<OracleVector> {
    if t.nrows() != space.modes || t.ncols() != space.modes {
        return Err(Error::DimensionMismatch { expected: space.modes, found: t.nrows() });
    }
    let top_sv = t.clone().singular_values()[0];
    if top_sv > 1.0 + 1e-10 {
        return Err(Error::NotContraction(format!("operator norm {top_sv:.12}")));
    }
    let dim = space.dim();
    let mut out = DVector::<Complex64>::zeros(dim);
    let mut work = DVector::<Complex64>::zeros(dim);
    let mut next = DVector::<Complex64>::zeros(dim);
    for idx in 0..dim {
        let amp = v.amplitudes[idx];
        if amp.norm_sqr() == 0.0 {
            continue;
        }
        let tuple = space.tuples[idx].clone();
        let mut fact = 1.0f64;
        for &n in &tuple {
            for k in 1..=n {
                fact *= k as f64;
            }
        }
        work.fill(Complex64::new(0.0, 0.0));
        work[space.vacuum_index()] = amp / fact.sqrt();
        // apply (b_i^†)^{n_i} for each mode i
        for (i, &n) in tuple.iter().enumerate() {
            for _ in 0..n {
                next.fill(Complex64::new(0.0, 0.0));
                for src in 0..dim {
                    let w = work[src];
                    if w.norm_sqr() == 0.0 {
                        continue;
                    }
                    let src_tuple = &space.tuples[src];
                    for j in 0..space.modes {
                        let tji = t[(j, i)];
                        if tji.norm_sqr() == 0.0 {
                            continue;
                        }
                        let mut dst_tuple = src_tuple.clone();
                        dst_tuple[j] += 1;
                        if let Some(dst) = space.index_of(&dst_tuple) {
                            let m = src_tuple[j] as f64;
                            next[dst] += tji * (m + 1.0).sqrt() * w;
                        }
                        // dst above cutoff cannot happen: totals are preserved
                    }
                }
                std::mem::swap(&mut work, &mut next);
            }
        }
        out += &work;
    }
    Ok(OracleVector { amplitudes: out, tail_sq: v.tail_sq })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn graded_enumeration_starts_at_vacuum_and_is_complete() {
        let space = TruncatedFock::new(3, 4).unwrap();
        assert_eq!(space.tuple(0), &[0, 0, 0]);
        assert_eq!(space.dim(), 35); // C(7,3)
        // totals nondecreasing along the enumeration
        let mut last_total = 0;
        for i in 0..space.dim() {
            let total: u32 = space.tuple(i).iter().sum();
            assert!(total >= last_total);
            last_total = total;
        }
        // round trip
        for i in 0..space.dim() {
            assert_eq!(space.index_of(space.tuple(i)), Some(i));
        }
    }

    #[test]
    fn exp_amplitude_matches_hand_value() {
        let space = TruncatedFock::new(2, 24).unwrap();
        let g = DVector::from_vec(vec![c(2.0, 0.0), c(-1.0, 0.0)]);
        let v = oracle_exp(&space, &g).unwrap();
        let idx = space.index_of(&[2, 1]).unwrap();
        // 2^2 * (-1) / sqrt(2! * 1!) = -4/sqrt(2)
        let expect = -2.828_427_124_746_190_3;
        assert!((v.amplitudes[idx].re - expect).abs() < 1e-12);
        assert!(v.amplitudes[idx].im.abs() < 1e-15);
    }

    #[test]
    fn exp_norm_matches_closed_form_up_to_tail() {
        let space = TruncatedFock::new(2, 30).unwrap();
        let g = DVector::from_vec(vec![c(0.8, -0.5), c(0.3, 0.9)]);
        let v = oracle_exp(&space, &g).unwrap();
        let exact = g.norm_squared().exp();
        let got = v.norm_sq() + v.tail_sq;
        assert!((got - exact).abs() < 1e-12 * exact, "got {got}, exact {exact}");
    }

    #[test]
    fn exp_inner_matches_closed_form_within_tail() {
        let space = TruncatedFock::new(2, 30).unwrap();
        let f = DVector::from_vec(vec![c(0.6, 0.2), c(-0.4, 0.7)]);
        let g = DVector::from_vec(vec![c(0.1, -0.9), c(0.8, 0.3)]);
        let u = oracle_exp(&space, &f).unwrap();
        let v = oracle_exp(&space, &g).unwrap();
        let exact = f.dotc(&g).exp();
        let got = u.inner(&v);
        let bound = exp_series_tail(f.norm() * g.norm(), space.max_total()) + 1e-12;
        assert!((got - exact).norm() < bound, "dev {} bound {bound}", (got - exact).norm());
    }

    #[test]
    fn second_quantize_exp_is_exp_of_mapped_argument() {
        let space = TruncatedFock::new(2, 16).unwrap();
        // a unitary: rotation with phases
        let th = 0.7f64;
        let t = DMatrix::from_row_slice(
            2,
            2,
            &[
                c(th.cos(), 0.0),
                c(0.0, th.sin()),
                c(0.0, th.sin()),
                c(th.cos(), 0.0),
            ],
        );
        let g = DVector::from_vec(vec![c(0.5, -0.3), c(-0.2, 0.4)]);
        let v = oracle_exp(&space, &g).unwrap();
        let lhs = oracle_second_quantize(&space, &t, &v).unwrap();
        let tg = &t * &g;
        let rhs = oracle_exp(&space, &tg).unwrap();
        let dev = (&lhs.amplitudes - &rhs.amplitudes).norm();
        let bound = v.tail_sq.sqrt() + rhs.tail_sq.sqrt() + 1e-10;
        assert!(dev < bound, "dev {dev} bound {bound}");
    }

    #[test]
    fn second_quantize_is_functorial_and_fixes_identity() {
        let space = TruncatedFock::new(2, 10).unwrap();
        let t1 = DMatrix::from_row_slice(2, 2, &[c(0.6, 0.0), c(0.0, 0.8), c(0.0, 0.8), c(0.6, 0.0)]);
        let t2 = DMatrix::from_row_slice(2, 2, &[c(0.0, 1.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]);
        let g = DVector::from_vec(vec![c(0.4, 0.1), c(-0.3, 0.2)]);
        let v = oracle_exp(&space, &g).unwrap();
        let once = oracle_second_quantize(&space, &t2, &v).unwrap();
        let twice = oracle_second_quantize(&space, &t1, &once).unwrap();
        let prod = &t1 * &t2;
        let direct = oracle_second_quantize(&space, &prod, &v).unwrap();
        assert!((&twice.amplitudes - &direct.amplitudes).norm() < 1e-10);

        let id = DMatrix::<Complex64>::identity(2, 2);
        let fixed = oracle_second_quantize(&space, &id, &v).unwrap();
        assert!((&fixed.amplitudes - &v.amplitudes).norm() < 1e-12);
    }

    #[test]
    fn second_quantize_rejects_expansions() {
        let space = TruncatedFock::new(1, 4).unwrap();
        let t = DMatrix::from_row_slice(1, 1, &[c(1.5, 0.0)]);
        let g = DVector::from_vec(vec![c(0.1, 0.0)]);
        let v = oracle_exp(&space, &g).unwrap();
        assert!(matches!(
            oracle_second_quantize(&space, &t, &v),
            Err(Error::NotContraction(_))
        ));
    }

    #[test]
    fn oversized_argument_is_rejected() {
        let space = TruncatedFock::new(1, 4).unwrap();
        let g = DVector::from_vec(vec![c(1.5, 0.0)]); // |g|^2 = 2.25 > 1
        assert!(matches!(oracle_exp(&space, &g), Err(Error::ResourceLimit(_))));
    }
}
