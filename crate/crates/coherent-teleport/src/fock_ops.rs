//! Operators on exponential-vector combinations: second quantization, the
//! splitting isometry and its adjoint, the two-mode exchange unitary, vacuum
//! projections, and unitaries defined by their action on a finite dictionary
//! of exponential vectors.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::coherent::{CoherentCombo, TensorCombo, DEDUP_TOL};
use crate::error::{Error, Result};
use crate::mode_space::{ModeOperator, SplittingPair};
use crate::ortho::{OrthoBasis, ORTHO_CUTOFF};

/// Relative residual above which an input is considered outside the span an
/// operator is defined on.
pub const SPAN_TOL: f64 = 1e-10;

/// Second quantization: exp(g) -> exp(Tg) termwise. T must be a contraction,
/// otherwise the lift is unbounded.
pub fn second_quantize(op: &ModeOperator, x: &CoherentCombo) -> Result<CoherentCombo> {
    if op.dim() != x.dim() {
        return Err(Error::DimensionMismatch { expected: x.dim(), found: op.dim() });
    }
    let norm = op.operator_norm();
    if norm > 1.0 + 1e-10 {
        return Err(Error::NotContraction(format!(
            "second quantization needs operator norm <= 1, got {norm:.12}"
        )));
    }
    Ok(x.map_modes(|f| op.apply(f)))
}

/// Second quantization applied to one factor of a tensor.
pub fn second_quantize_factor(
    op: &ModeOperator,
    x: &TensorCombo,
    factor: usize,
) -> Result<TensorCombo> {
    let norm = op.operator_norm();
    if norm > 1.0 + 1e-10 {
        return Err(Error::NotContraction(format!(
            "second quantization needs operator norm <= 1, got {norm:.12}"
        )));
    }
    if factor >= x.arity() || op.dim() != x.dims()[factor] {
        return Err(Error::DimensionMismatch {
            expected: x.dims().get(factor).copied().unwrap_or(0),
            found: op.dim(),
        });
    }
    x.map_factor(factor, |f| op.apply(f))
}

/// Splitting isometry exp(g) -> exp(K1 g) (x) exp(K2 g).
pub fn beam_split(pair: &SplittingPair, x: &CoherentCombo) -> Result<TensorCombo> {
    if x.dim() != pair.dim() {
        return Err(Error::DimensionMismatch { expected: pair.dim(), found: x.dim() });
    }
    let mut out = TensorCombo::zero(vec![pair.dim(), pair.dim()])?;
    for (c, f) in x.terms() {
        out.push(*c, vec![pair.k1().apply(f), pair.k2().apply(f)])?;
    }
    Ok(out)
}

/// Adjoint of the splitting isometry: exp(h) (x) exp(g) -> exp(K1* h + K2* g).
pub fn beam_split_adjoint(pair: &SplittingPair, z: &TensorCombo) -> Result<CoherentCombo> {
    if z.arity() != 2 {
        return Err(Error::ArityMismatch { expected: 2, found: z.arity() });
    }
    if z.dims()[0] != pair.dim() || z.dims()[1] != pair.dim() {
        return Err(Error::DimensionMismatch { expected: pair.dim(), found: z.dims()[0] });
    }
    let k1a = pair.k1().adjoint();
    let k2a = pair.k2().adjoint();
    let mut out = CoherentCombo::zero(pair.dim());
    for (c, fs) in z.terms() {
        out.push(*c, k1a.apply(&fs[0]) + k2a.apply(&fs[1]))?;
    }
    out.dedup(DEDUP_TOL);
    Ok(out)
}

/// Duplication exp(g) -> exp(g) (x) exp(g).
pub fn duplicate(x: &CoherentCombo) -> Result<TensorCombo> {
    let mut out = TensorCombo::zero(vec![x.dim(), x.dim()])?;
    for (c, f) in x.terms() {
        out.push(*c, vec![f.clone(), f.clone()])?;
    }
    Ok(out)
}

/// Exponent addition exp(g) (x) exp(h) -> exp(g + h), the adjoint of
/// duplication.
pub fn sum_factors(z: &TensorCombo) -> Result<CoherentCombo> {
    if z.arity() != 2 {
        return Err(Error::ArityMismatch { expected: 2, found: z.arity() });
    }
    if z.dims()[0] != z.dims()[1] {
        return Err(Error::DimensionMismatch { expected: z.dims()[0], found: z.dims()[1] });
    }
    let mut out = CoherentCombo::zero(z.dims()[0]);
    for (c, fs) in z.terms() {
        out.push(*c, &fs[0] + &fs[1])?;
    }
    out.dedup(DEDUP_TOL);
    Ok(out)
}

fn exchange_modes(f1: &DVector<Complex64>, f2: &DVector<Complex64>, adjoint: bool) -> (DVector<Complex64>, DVector<Complex64>) {
    let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    if adjoint {
        ((f1 + f2) * s, (f2 - f1) * s)
    } else {
        ((f1 - f2) * s, (f1 + f2) * s)
    }
}

/// Two-mode exchange unitary exp(f1) (x) exp(f2) ->
/// exp((f1 - f2)/sqrt 2) (x) exp((f1 + f2)/sqrt 2).
pub fn exchange(z: &TensorCombo) -> Result<TensorCombo> {
    exchange_pair(z, 0, false)
}

/// Inverse of `exchange`: exp(f1) (x) exp(f2) ->
/// exp((f1 + f2)/sqrt 2) (x) exp((f2 - f1)/sqrt 2).
pub fn exchange_adjoint(z: &TensorCombo) -> Result<TensorCombo> {
    exchange_pair(z, 0, true)
}

/// Exchange unitary on factors (first, first + 1) of a tensor.
pub fn exchange_pair(z: &TensorCombo, first: usize, adjoint: bool) -> Result<TensorCombo> {
    if first + 1 >= z.arity() {
        return Err(Error::IndexOutOfRange(format!(
            "exchange on factors ({}, {}) of arity-{} tensor",
            first,
            first + 1,
            z.arity()
        )));
    }
    if z.dims()[first] != z.dims()[first + 1] {
        return Err(Error::DimensionMismatch {
            expected: z.dims()[first],
            found: z.dims()[first + 1],
        });
    }
    let mut out = TensorCombo::zero(z.dims().to_vec())?;
    for (c, fs) in z.terms() {
        let (a, b) = exchange_modes(&fs[first], &fs[first + 1], adjoint);
        let mut nf = fs.clone();
        nf[first] = a;
        nf[first + 1] = b;
        out.push(*c, nf)?;
    }
    Ok(out)
}

/// Rank-one projection |u><u| applied to one factor of a tensor.
pub fn project_factor(x: &TensorCombo, factor: usize, unit: &CoherentCombo) -> Result<TensorCombo> {
    if factor >= x.arity() {
        return Err(Error::IndexOutOfRange(format!(
            "factor {factor} of arity-{} tensor",
            x.arity()
        )));
    }
    if unit.dim() != x.dims()[factor] {
        return Err(Error::DimensionMismatch { expected: x.dims()[factor], found: unit.dim() });
    }
    let mut out = TensorCombo::zero(x.dims().to_vec())?;
    for (c, fs) in x.terms() {
        // <u, exp(f_k)>
        let mut amp = Complex64::new(0.0, 0.0);
        for (cu, fu) in unit.terms() {
            amp += cu.conj() * fu.dotc(&fs[factor]).exp();
        }
        for (cu, fu) in unit.terms() {
            let mut nf = fs.clone();
            nf[factor] = fu.clone();
            out.push(c * amp * cu, nf)?;
        }
    }
    out.dedup(DEDUP_TOL);
    Ok(out)
}

/// 1 - |exp(0)><exp(0)| on a coherent combination.
pub fn vacuum_complement(x: &CoherentCombo) -> Result<CoherentCombo> {
    let vac = CoherentCombo::vacuum(x.dim());
    let overlap = vac.inner(x)?;
    let mut out = x.sub(&vac.scaled(overlap))?;
    out.dedup(DEDUP_TOL);
    Ok(out)
}

/// 1 - |exp(0)><exp(0)| on one factor of a tensor.
pub fn vacuum_complement_factor(x: &TensorCombo, factor: usize) -> Result<TensorCombo> {
    let vac = CoherentCombo::vacuum(x.dims()[factor]);
    let projected = project_factor(x, factor, &vac)?;
    let mut out = x.sub(&projected)?;
    out.dedup(DEDUP_TOL);
    Ok(out)
}

/// An operator defined by its action on a finite dictionary of exponential
/// vectors; inputs must lie in the dictionary's span. Construction verifies
/// the action preserves inner products, so the operator is isometric there.
pub struct DictionaryOperator {
    basis: OrthoBasis<CoherentCombo>,
    images: Vec<CoherentCombo>,
    dim: usize,
}

impl DictionaryOperator {
    pub fn new(atoms: Vec<CoherentCombo>, images: Vec<CoherentCombo>) -> Result<Self> {
        if atoms.len() != images.len() || atoms.is_empty() {
            return Err(Error::InvalidConfig(format!(
                "dictionary has {} atoms but {} images",
                atoms.len(),
                images.len()
            )));
        }
        let dim = atoms[0].dim();
        let norms: Vec<f64> = atoms.iter().map(|a| a.norm_sq().sqrt()).collect();
        // isometry on the span: images must reproduce the normalized Gram
        for i in 0..atoms.len() {
            for j in 0..atoms.len() {
                let want = atoms[i].inner(&atoms[j])? / Complex64::new(norms[i] * norms[j], 0.0);
                let got =
                    images[i].inner(&images[j])? / Complex64::new(norms[i] * norms[j], 0.0);
                if (want - got).norm() > 1e-10 {
                    return Err(Error::NotUnitary(format!(
                        "dictionary action distorts <d_{i}, d_{j}> by {:.3e}",
                        (want - got).norm()
                    )));
                }
            }
        }
        // images are stored for the normalized atoms
        let images = images
            .iter()
            .zip(norms.iter())
            .map(|(im, n)| im.scaled(Complex64::new(1.0 / n, 0.0)))
            .collect();
        let basis = OrthoBasis::new(atoms, ORTHO_CUTOFF)?;
        Ok(Self { basis, images, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn apply(&self, x: &CoherentCombo) -> Result<CoherentCombo> {
        let coeffs = self.basis.represent_checked(x, SPAN_TOL)?;
        let mut out = CoherentCombo::zero(self.dim);
        for (a, image) in coeffs.iter().zip(self.images.iter()) {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            out = out.add(&image.scaled(*a))?;
        }
        out.dedup(DEDUP_TOL);
        Ok(out)
    }

    /// Apply to one factor of a tensor, expanding each term.
    pub fn apply_factor(&self, x: &TensorCombo, factor: usize) -> Result<TensorCombo> {
        if factor >= x.arity() {
            return Err(Error::IndexOutOfRange(format!(
                "factor {factor} of arity-{} tensor",
                x.arity()
            )));
        }
        if x.dims()[factor] != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: x.dims()[factor] });
        }
        let mut out = TensorCombo::zero(x.dims().to_vec())?;
        for (c, fs) in x.terms() {
            let single = CoherentCombo::exponential(fs[factor].clone())?;
            let mapped = self.apply(&single)?;
            for (cm, fm) in mapped.terms() {
                let mut nf = fs.clone();
                nf[factor] = fm.clone();
                out.push(c * cm, nf)?;
            }
        }
        out.dedup(DEDUP_TOL);
        Ok(out)
    }
}

fn family_atoms(pair: &SplittingPair, a: f64) -> Result<Vec<CoherentCombo>> {
    let n = pair.mode_count();
    let mut atoms = Vec::with_capacity(n + 1);
    for k in 0..n {
        atoms.push(CoherentCombo::exponential(pair.k1_mode(k) * Complex64::new(a, 0.0))?);
    }
    atoms.push(CoherentCombo::vacuum(pair.dim()));
    Ok(atoms)
}

/// The unitary multiplying the k-th member of the family
/// {exp(a K1 g_k) - exp(0)} by the phase `phases[k]` and fixing the vacuum.
/// On the raw exponentials this reads
/// exp(a K1 g_k) -> phases[k] exp(a K1 g_k) + (1 - phases[k]) exp(0).
pub fn phase_unitary(
    pair: &SplittingPair,
    a: f64,
    phases: &[Complex64],
) -> Result<DictionaryOperator> {
    let n = pair.mode_count();
    if phases.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: phases.len() });
    }
    for (k, b) in phases.iter().enumerate() {
        if (b.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::NotUnitary(format!("|phase_{k}| = {} differs from 1", b.norm())));
        }
    }
    let atoms = family_atoms(pair, a)?;
    let vac = CoherentCombo::vacuum(pair.dim());
    let one = Complex64::new(1.0, 0.0);
    let mut images = Vec::with_capacity(n + 1);
    for (k, atom) in atoms.iter().take(n).enumerate() {
        let img = atom.scaled(phases[k]).add(&vac.scaled(one - phases[k]))?;
        images.push(img.deduped());
    }
    images.push(vac);
    DictionaryOperator::new(atoms, images)
}

/// The unitary shifting the family index cyclically by `m`:
/// exp(a K1 g_j) -> exp(a K1 g_{j + m mod N}), vacuum fixed.
pub fn shift_unitary(pair: &SplittingPair, a: f64, m: usize) -> Result<DictionaryOperator> {
    let n = pair.mode_count();
    let atoms = family_atoms(pair, a)?;
    let mut images = Vec::with_capacity(n + 1);
    for j in 0..n {
        images.push(atoms[(j + m) % n].clone());
    }
    images.push(CoherentCombo::vacuum(pair.dim()));
    DictionaryOperator::new(atoms, images)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mode_space::SplittingKind;
    use nalgebra::{DMatrix, DVector};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rand_mode(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> DVector<Complex64> {
        DVector::from_fn(dim, |_, _| {
            c(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale))
        })
    }

    fn rand_combo(rng: &mut ChaCha8Rng, dim: usize, terms: usize) -> CoherentCombo {
        let mut x = CoherentCombo::zero(dim);
        for _ in 0..terms {
            x.push(c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)), rand_mode(rng, dim, 0.9))
                .unwrap();
        }
        x
    }

    #[test]
    fn beam_split_preserves_inner_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        for kind in [SplittingKind::Half, SplittingKind::Orthogonal] {
            let pair = SplittingPair::make(kind, 2).unwrap();
            for _ in 0..20 {
                let x = rand_combo(&mut rng, pair.dim(), 2);
                let y = rand_combo(&mut rng, pair.dim(), 3);
                let want = x.inner(&y).unwrap();
                let got = beam_split(&pair, &x)
                    .unwrap()
                    .inner(&beam_split(&pair, &y).unwrap())
                    .unwrap();
                assert!((want - got).norm() < 1e-12 * want.norm().max(1.0));
            }
        }
    }

    #[test]
    fn beam_split_adjoint_is_the_adjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let pair = SplittingPair::make(SplittingKind::Orthogonal, 2).unwrap();
        for _ in 0..20 {
            let x = rand_combo(&mut rng, pair.dim(), 2);
            let z = TensorCombo::product(&[
                &rand_combo(&mut rng, pair.dim(), 2),
                &rand_combo(&mut rng, pair.dim(), 2),
            ])
            .unwrap();
            let lhs = beam_split(&pair, &x).unwrap().inner(&z).unwrap();
            let rhs = x.inner(&beam_split_adjoint(&pair, &z).unwrap()).unwrap();
            assert!((lhs - rhs).norm() < 1e-12 * lhs.norm().max(1.0));
        }
    }

    #[test]
    fn beam_split_roundtrip_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(57);
        let pair = SplittingPair::make(SplittingKind::Half, 3).unwrap();
        let x = rand_combo(&mut rng, pair.dim(), 3);
        let back = beam_split_adjoint(&pair, &beam_split(&pair, &x).unwrap()).unwrap();
        let diff_sq = x.sub(&back).unwrap().norm_sq();
        assert!(diff_sq < 1e-12, "roundtrip defect {diff_sq}");
    }

    #[test]
    fn exchange_is_unitary_with_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        for _ in 0..10 {
            let z = TensorCombo::product(&[
                &rand_combo(&mut rng, 2, 2),
                &rand_combo(&mut rng, 2, 2),
            ])
            .unwrap();
            let w = TensorCombo::product(&[
                &rand_combo(&mut rng, 2, 2),
                &rand_combo(&mut rng, 2, 2),
            ])
            .unwrap();
            let want = z.inner(&w).unwrap();
            let got = exchange(&z).unwrap().inner(&exchange(&w).unwrap()).unwrap();
            assert!((want - got).norm() < 1e-12 * want.norm().max(1.0));
            let back = exchange_adjoint(&exchange(&z).unwrap()).unwrap();
            assert!(z.sub(&back).unwrap().norm_sq() < 1e-12);
            // adjointness: <Vz, w> = <z, V* w>
            let lhs = exchange(&z).unwrap().inner(&w).unwrap();
            let rhs = z.inner(&exchange_adjoint(&w).unwrap()).unwrap();
            assert!((lhs - rhs).norm() < 1e-12 * lhs.norm().max(1.0));
        }
    }

    #[test]
    fn duplication_is_adjoint_to_exponent_addition() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for _ in 0..10 {
            let f = rand_combo(&mut rng, 2, 2);
            let z = TensorCombo::product(&[
                &rand_combo(&mut rng, 2, 2),
                &rand_combo(&mut rng, 2, 2),
            ])
            .unwrap();
            let lhs = duplicate(&f).unwrap().inner(&z).unwrap();
            let rhs = f.inner(&sum_factors(&z).unwrap()).unwrap();
            assert!((lhs - rhs).norm() < 1e-12 * lhs.norm().max(1.0));
        }
    }

    #[test]
    fn second_quantize_needs_contraction_and_composes() {
        let mut rng = ChaCha8Rng::seed_from_u64(63);
        let big = ModeOperator::new(DMatrix::from_diagonal_element(2, 2, c(1.3, 0.0))).unwrap();
        let x = rand_combo(&mut rng, 2, 2);
        assert!(matches!(second_quantize(&big, &x), Err(Error::NotContraction(_))));

        let t1 = ModeOperator::new(DMatrix::from_diagonal_element(2, 2, c(0.6, 0.2))).unwrap();
        let t2 = ModeOperator::new(DMatrix::from_fn(2, 2, |i, j| {
            if (i + j) % 2 == 0 { c(0.3, 0.0) } else { c(0.0, -0.4) }
        }))
        .unwrap();
        let seq = second_quantize(&t1, &second_quantize(&t2, &x).unwrap()).unwrap();
        let joint = second_quantize(&t1.compose(&t2), &x).unwrap();
        assert!(seq.sub(&joint).unwrap().norm_sq() < 1e-12);
    }

    #[test]
    fn vacuum_complement_kills_the_vacuum_part_and_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(67);
        let x = rand_combo(&mut rng, 2, 3);
        let vac = CoherentCombo::vacuum(2);
        let y = vacuum_complement(&x).unwrap();
        assert!(vac.inner(&y).unwrap().norm() < 1e-12);
        let yy = vacuum_complement(&y).unwrap();
        assert!(y.sub(&yy).unwrap().norm_sq() < 1e-12);
    }

    #[test]
    fn factor_projection_matches_tensor_inner_products() {
        // <(|u><u| (x) 1 (x) 1) x, y> = <x, (|u><u| (x) 1 (x) 1) y>
        // and the projection is idempotent
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        let u = rand_combo(&mut rng, 2, 2).normalized().unwrap();
        let mk3 = |rng: &mut ChaCha8Rng| {
            TensorCombo::product(&[
                &rand_combo(rng, 2, 2),
                &rand_combo(rng, 2, 2),
                &rand_combo(rng, 2, 2),
            ])
            .unwrap()
        };
        let x = mk3(&mut rng);
        let y = mk3(&mut rng);
        let px = project_factor(&x, 0, &u).unwrap();
        let py = project_factor(&y, 0, &u).unwrap();
        let lhs = px.inner(&y).unwrap();
        let rhs = x.inner(&py).unwrap();
        assert!((lhs - rhs).norm() < 1e-12 * lhs.norm().max(1.0));
        let ppx = project_factor(&px, 0, &u).unwrap();
        assert!(px.sub(&ppx).unwrap().norm_sq() < 1e-12);
    }

    #[test]
    fn phase_unitary_multiplies_difference_vectors_by_phases() {
        let pair = SplittingPair::make(SplittingKind::Orthogonal, 3).unwrap();
        let a = 2.0_f64.sqrt();
        let phases: Vec<Complex64> = (0..3)
            .map(|k| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / 3.0))
            .collect();
        let op = phase_unitary(&pair, a, &phases).unwrap();
        for (k, phase) in phases.iter().enumerate() {
            let diff = CoherentCombo::difference_ket(pair.k1_mode(k) * c(a, 0.0)).unwrap();
            let got = op.apply(&diff).unwrap();
            let want = diff.scaled(*phase);
            assert!(got.sub(&want).unwrap().norm_sq() < 1e-12);
        }
        // vacuum is fixed
        let vac = CoherentCombo::vacuum(pair.dim());
        assert!(op.apply(&vac).unwrap().sub(&vac).unwrap().norm_sq() < 1e-12);
    }

    #[test]
    fn shift_unitary_rotates_the_family() {
        let pair = SplittingPair::make(SplittingKind::Half, 4).unwrap();
        let a = 1.5;
        let op = shift_unitary(&pair, a, 3).unwrap();
        for j in 0..4 {
            let diff = CoherentCombo::difference_ket(pair.k1_mode(j) * c(a, 0.0)).unwrap();
            let want = CoherentCombo::difference_ket(pair.k1_mode((j + 3) % 4) * c(a, 0.0)).unwrap();
            let got = op.apply(&diff).unwrap();
            assert!(got.sub(&want).unwrap().norm_sq() < 1e-12);
        }
        // shifting by m then N - m is the identity on the span
        let inv = shift_unitary(&pair, a, 1).unwrap();
        let diff = CoherentCombo::difference_ket(pair.k1_mode(2) * c(a, 0.0)).unwrap();
        let back = inv.apply(&op.apply(&diff).unwrap()).unwrap();
        assert!(back.sub(&diff).unwrap().norm_sq() < 1e-12);
    }

    #[test]
    fn dictionary_operator_rejects_out_of_span_input() {
        let pair = SplittingPair::make(SplittingKind::Half, 2).unwrap();
        let op = shift_unitary(&pair, 1.0, 1).unwrap();
        let stranger =
            CoherentCombo::exponential(pair.k1_mode(0) * c(0.77, 0.0)).unwrap();
        assert!(matches!(op.apply(&stranger), Err(Error::UndefinedAction(_))));
    }

    #[test]
    fn dictionary_operator_rejects_gram_distortion() {
        let pair = SplittingPair::make(SplittingKind::Half, 2).unwrap();
        let atoms = family_atoms(&pair, 1.0).unwrap();
        // sending everything to the vacuum is not an isometry
        let images = vec![CoherentCombo::vacuum(pair.dim()); atoms.len()];
        assert!(matches!(DictionaryOperator::new(atoms, images), Err(Error::NotUnitary(_))));
    }

    #[test]
    fn dictionary_operator_acts_factorwise() {
        let pair = SplittingPair::make(SplittingKind::Half, 2).unwrap();
        let a = 1.3;
        let op = shift_unitary(&pair, a, 1).unwrap();
        let d0 = CoherentCombo::difference_ket(pair.k1_mode(0) * c(a, 0.0)).unwrap();
        let d1 = CoherentCombo::difference_ket(pair.k1_mode(1) * c(a, 0.0)).unwrap();
        let other = CoherentCombo::vacuum(pair.dim());
        let x = TensorCombo::product(&[&d0, &other]).unwrap();
        let got = op.apply_factor(&x, 0).unwrap();
        let want = TensorCombo::product(&[&d1, &other]).unwrap();
        assert!(got.sub(&want).unwrap().norm_sq() < 1e-12);
    }
}
