//! One-particle mode space: vectors in C^M, operators on them, and the
//! beam-splitting pairs (K1, K2, T) the teleportation models are built from.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type ModeVector = DVector<Complex64>;

pub(crate) fn check_mode_vector(v: &ModeVector) -> Result<()> {
    if v.is_empty() {
        return Err(Error::DimensionMismatch { expected: 1, found: 0 });
    }
    if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("mode vector".into()));
    }
    Ok(())
}

/// A linear map on the mode space. Constructors differ in what they promise:
/// `unitary` and `contraction` verify the claim at build time.
#[derive(Clone, Debug)]
pub struct ModeOperator {
    matrix: DMatrix<Complex64>,
}

impl ModeOperator {
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        if matrix.is_empty() {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("operator entries".into()));
        }
        Ok(Self { matrix })
    }

    pub fn unitary(matrix: DMatrix<Complex64>) -> Result<Self> {
        let op = Self::new(matrix)?;
        let dev = op.unitarity_defect();
        if dev > 1e-12 {
            return Err(Error::NotUnitary(format!("U*U - I deviates by {dev:.3e}")));
        }
        Ok(op)
    }

    pub fn contraction(matrix: DMatrix<Complex64>) -> Result<Self> {
        let op = Self::new(matrix)?;
        let norm = op.operator_norm();
        if norm > 1.0 + 1e-10 {
            return Err(Error::NotContraction(format!("operator norm {norm:.12}")));
        }
        Ok(op)
    }

    pub fn identity(m: usize) -> Self {
        Self { matrix: DMatrix::identity(m, m) }
    }

    pub fn scaled_identity(m: usize, c: Complex64) -> Self {
        Self { matrix: DMatrix::identity(m, m) * c }
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, v: &ModeVector) -> ModeVector {
        &self.matrix * v
    }

    pub fn adjoint(&self) -> ModeOperator {
        ModeOperator { matrix: self.matrix.adjoint() }
    }

    pub fn compose(&self, other: &ModeOperator) -> ModeOperator {
        ModeOperator { matrix: &self.matrix * &other.matrix }
    }

    pub fn operator_norm(&self) -> f64 {
        self.matrix.clone().singular_values()[0]
    }

    pub fn unitarity_defect(&self) -> f64 {
        let m = self.matrix.nrows();
        let id = DMatrix::<Complex64>::identity(m, m);
        (self.matrix.adjoint() * &self.matrix - id).norm()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplittingKind {
    /// K1 = K2 = I/sqrt(2) on C^N, T = I.
    Half,
    /// M = 2N, g_k = (e_k + e_{N+k})/sqrt(2), K1/K2 the coordinate
    /// projections onto the two halves, T the swap of the halves.
    Orthogonal,
}

/// The data (K1, K2, T, g_1..g_N) entering the splitting isometry
/// exp(g) -> exp(K1 g) (x) exp(K2 g). Construction validates:
/// K1*K1 + K2*K2 = I, T unitary with T K1 g_k = K2 g_k, and
/// <K_s g_k, K_s g_j> = delta_jk / 2 for s = 1, 2.
#[derive(Clone, Debug)]
pub struct SplittingPair {
    k1: ModeOperator,
    k2: ModeOperator,
    t: ModeOperator,
    modes: Vec<ModeVector>,
    dim: usize,
}

impl SplittingPair {
    pub fn custom(
        k1: ModeOperator,
        k2: ModeOperator,
        t: ModeOperator,
        modes: Vec<ModeVector>,
    ) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::InvalidConfig("splitting needs at least one mode vector".into()));
        }
        let dim = k1.dim();
        if k2.dim() != dim || t.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: k2.dim().min(t.dim()) });
        }
        for g in &modes {
            check_mode_vector(g)?;
            if g.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: g.len() });
            }
        }
        let pair = Self { k1, k2, t, modes, dim };
        pair.validate()?;
        Ok(pair)
    }

    pub fn make(kind: SplittingKind, n: usize) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidConfig("splitting needs n >= 1".into()));
        }
        let inv_sqrt2 = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        match kind {
            SplittingKind::Half => {
                let k = ModeOperator::scaled_identity(n, inv_sqrt2);
                let t = ModeOperator::identity(n);
                let modes = (0..n)
                    .map(|i| {
                        let mut v = DVector::zeros(n);
                        v[i] = Complex64::new(1.0, 0.0);
                        v
                    })
                    .collect();
                Self::custom(k.clone(), k, t, modes)
            }
            SplittingKind::Orthogonal => {
                let m = 2 * n;
                let mut p1 = DMatrix::<Complex64>::zeros(m, m);
                let mut p2 = DMatrix::<Complex64>::zeros(m, m);
                let mut swap = DMatrix::<Complex64>::zeros(m, m);
                for i in 0..n {
                    p1[(i, i)] = Complex64::new(1.0, 0.0);
                    p2[(n + i, n + i)] = Complex64::new(1.0, 0.0);
                    swap[(n + i, i)] = Complex64::new(1.0, 0.0);
                    swap[(i, n + i)] = Complex64::new(1.0, 0.0);
                }
                let modes = (0..n)
                    .map(|i| {
                        let mut v = DVector::zeros(m);
                        v[i] = inv_sqrt2;
                        v[n + i] = inv_sqrt2;
                        v
                    })
                    .collect();
                Self::custom(
                    ModeOperator::new(p1)?,
                    ModeOperator::new(p2)?,
                    ModeOperator::unitary(swap)?,
                    modes,
                )
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let tol = 1e-12;
        let id = DMatrix::<Complex64>::identity(self.dim, self.dim);
        let completeness = self.k1.matrix().adjoint() * self.k1.matrix()
            + self.k2.matrix().adjoint() * self.k2.matrix()
            - id;
        let dev = completeness.norm();
        if dev > tol * self.dim as f64 {
            return Err(Error::Invariant(format!(
                "K1*K1 + K2*K2 differs from identity by {dev:.3e}"
            )));
        }
        let tdev = self.t.unitarity_defect();
        if tdev > tol * self.dim as f64 {
            return Err(Error::NotUnitary(format!("T deviates from unitarity by {tdev:.3e}")));
        }
        for (k, g) in self.modes.iter().enumerate() {
            let lhs = self.t.apply(&self.k1.apply(g));
            let rhs = self.k2.apply(g);
            let dev = (lhs - rhs).norm();
            if dev > tol {
                return Err(Error::Invariant(format!(
                    "T K1 g_{k} differs from K2 g_{k} by {dev:.3e}"
                )));
            }
        }
        for s in [&self.k1, &self.k2] {
            for j in 0..self.modes.len() {
                for k in 0..self.modes.len() {
                    let want = if j == k { 0.5 } else { 0.0 };
                    let got = s.apply(&self.modes[j]).dotc(&s.apply(&self.modes[k]));
                    if (got - Complex64::new(want, 0.0)).norm() > tol {
                        return Err(Error::Invariant(format!(
                            "<K g_{j}, K g_{k}> = {got} but should be {want}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn k1(&self) -> &ModeOperator {
        &self.k1
    }

    pub fn k2(&self) -> &ModeOperator {
        &self.k2
    }

    pub fn t(&self) -> &ModeOperator {
        &self.t
    }

    /// g_1..g_N, indexed 0-based internally.
    pub fn modes(&self) -> &[ModeVector] {
        &self.modes
    }

    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    /// Dimension M of the underlying mode space.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn k1_mode(&self, k: usize) -> ModeVector {
        self.k1.apply(&self.modes[k])
    }

    pub fn k2_mode(&self, k: usize) -> ModeVector {
        self.k2.apply(&self.modes[k])
    }
}

/// The norm-preserving rescaled map g_k -> sqrt(2) K1 g_k used to prepare the
/// beam input: it keeps the g_k family orthonormal even though sqrt(2) K1 is
/// not a contraction on all of C^M. Validated on the family and returned as a
/// plain operator.
pub fn scaled_multiplication(pair: &SplittingPair) -> Result<ModeOperator> {
    let op = ModeOperator::new(pair.k1.matrix() * Complex64::new(std::f64::consts::SQRT_2, 0.0))?;
    for j in 0..pair.mode_count() {
        for k in 0..pair.mode_count() {
            let want = if j == k { 1.0 } else { 0.0 };
            let got = op.apply(&pair.modes[j]).dotc(&op.apply(&pair.modes[k]));
            if (got - Complex64::new(want, 0.0)).norm() > 1e-12 {
                return Err(Error::Invariant(format!(
                    "<O g_{j}, O g_{k}> = {got} but should be {want}"
                )));
            }
        }
    }
    Ok(op)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_splitting_satisfies_all_invariants() {
        for n in 1..=5 {
            let pair = SplittingPair::make(SplittingKind::Half, n).unwrap();
            assert_eq!(pair.dim(), n);
            assert_eq!(pair.mode_count(), n);
            // T is the identity here
            assert!((pair.t().matrix() - DMatrix::<Complex64>::identity(n, n)).norm() < 1e-15);
        }
    }

    #[test]
    fn orthogonal_splitting_satisfies_all_invariants() {
        for n in 1..=4 {
            let pair = SplittingPair::make(SplittingKind::Orthogonal, n).unwrap();
            assert_eq!(pair.dim(), 2 * n);
            // K1 g_k is supported on the first half, K2 g_k on the second
            for k in 0..n {
                let a = pair.k1_mode(k);
                let b = pair.k2_mode(k);
                assert!(a.dotc(&b).norm() < 1e-15);
                assert!((a.norm_squared() - 0.5).abs() < 1e-15);
                assert!((b.norm_squared() - 0.5).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn broken_pair_is_rejected() {
        // wrong normalization: K1 = K2 = I/2 fails the completeness identity
        let half = Complex64::new(0.5, 0.0);
        let k = ModeOperator::scaled_identity(2, half);
        let t = ModeOperator::identity(2);
        let modes = vec![
            DVector::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]),
            DVector::from_vec(vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]),
        ];
        assert!(SplittingPair::custom(k.clone(), k, t, modes).is_err());
    }

    #[test]
    fn unitary_constructor_checks_claim() {
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(1.0, 0.0),
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(1.0, 0.0),
            ],
        );
        assert!(ModeOperator::unitary(m.clone()).is_err());
        assert!(ModeOperator::new(m).is_ok());
    }

    #[test]
    fn scaled_multiplication_preserves_the_mode_family() {
        for kind in [SplittingKind::Half, SplittingKind::Orthogonal] {
            let pair = SplittingPair::make(kind, 3).unwrap();
            let op = scaled_multiplication(&pair).unwrap();
            for k in 0..3 {
                let img = op.apply(&pair.modes()[k]);
                assert!((img.norm_squared() - 1.0).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn contraction_constructor_rejects_expansion() {
        let m = DMatrix::from_row_slice(1, 1, &[Complex64::new(1.2, 0.0)]);
        assert!(ModeOperator::contraction(m).is_err());
    }
}
