//! Orthonormalized finite subspaces.
//!
//! Channel outputs live in the span of finitely many exponential vectors.
//! A Gram-matrix eigendecomposition turns that span into an explicit
//! orthonormal basis; density matrices, fidelities and trace distances are
//! then ordinary finite-dimensional computations. Dictionary elements are
//! normalized before the Gram matrix is formed so the eigenvalue cutoff sees
//! geometry, not scale.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::coherent::{CoherentCombo, TensorCombo, DEDUP_TOL};
use crate::error::{Error, Result};

/// Anything with a sesquilinear inner product that decomposes into
/// single-exponential "atoms" suitable as dictionary entries.
pub trait HilbertElem: Clone {
    fn elem_inner(&self, other: &Self) -> Result<Complex64>;

    fn elem_norm_sq(&self) -> f64;

    /// The distinct elementary exponentials (unit coefficient) spanning this
    /// element, deduplicated by mode closeness.
    fn atoms(&self) -> Vec<Self>;

    /// Mode-level closeness; meaningful for atoms.
    fn atom_close(&self, other: &Self, tol: f64) -> bool;
}

impl HilbertElem for CoherentCombo {
    fn elem_inner(&self, other: &Self) -> Result<Complex64> {
        self.inner(other)
    }

    fn elem_norm_sq(&self) -> f64 {
        self.norm_sq()
    }

    fn atoms(&self) -> Vec<Self> {
        let mut out: Vec<CoherentCombo> = Vec::new();
        for (_, f) in self.terms() {
            let cand = CoherentCombo::exponential(f.clone()).expect("term modes are valid");
            if !out.iter().any(|a| a.atom_close(&cand, DEDUP_TOL)) {
                out.push(cand);
            }
        }
        out
    }

    fn atom_close(&self, other: &Self, tol: f64) -> bool {
        if self.len() != 1 || other.len() != 1 {
            return false;
        }
        let (_, f) = &self.terms()[0];
        let (_, g) = &other.terms()[0];
        f.len() == g.len()
            && f.iter()
                .zip(g.iter())
                .all(|(x, y)| (x.re - y.re).abs() <= tol && (x.im - y.im).abs() <= tol)
    }
}

impl HilbertElem for TensorCombo {
    fn elem_inner(&self, other: &Self) -> Result<Complex64> {
        self.inner(other)
    }

    fn elem_norm_sq(&self) -> f64 {
        self.norm_sq()
    }

    fn atoms(&self) -> Vec<Self> {
        let mut out: Vec<TensorCombo> = Vec::new();
        for (_, fs) in self.terms() {
            let mut cand = TensorCombo::zero(self.dims().to_vec()).expect("arity is valid");
            cand.push(Complex64::new(1.0, 0.0), fs.clone()).expect("term modes are valid");
            if !out.iter().any(|a| a.atom_close(&cand, DEDUP_TOL)) {
                out.push(cand);
            }
        }
        out
    }

    fn atom_close(&self, other: &Self, tol: f64) -> bool {
        if self.len() != 1 || other.len() != 1 || self.dims() != other.dims() {
            return false;
        }
        let (_, fs) = &self.terms()[0];
        let (_, gs) = &other.terms()[0];
        fs.iter().zip(gs.iter()).all(|(f, g)| {
            f.iter()
                .zip(g.iter())
                .all(|(x, y)| (x.re - y.re).abs() <= tol && (x.im - y.im).abs() <= tol)
        })
    }
}

/// Default relative eigenvalue cutoff when orthonormalizing a dictionary.
pub const ORTHO_CUTOFF: f64 = 1e-12;

/// An orthonormal basis of the span of a dictionary, obtained from the
/// eigendecomposition of the normalized Gram matrix.
#[derive(Debug)]
pub struct OrthoBasis<E: HilbertElem> {
    elements: Vec<E>,
    norms: Vec<f64>,
    gram: DMatrix<Complex64>,
    transform: DMatrix<Complex64>,
    rank: usize,
    tol: f64,
}

impl<E: HilbertElem> OrthoBasis<E> {
    pub fn new(elements: Vec<E>, tol: f64) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::DegenerateDictionary("empty dictionary".into()));
        }
        let mut norms = Vec::with_capacity(elements.len());
        for e in &elements {
            let nsq = e.elem_norm_sq();
            if !nsq.is_finite() {
                return Err(Error::NonFinite("dictionary element norm".into()));
            }
            if nsq <= 1e-150 {
                return Err(Error::DegenerateDictionary(
                    "dictionary element with vanishing norm".into(),
                ));
            }
            norms.push(nsq.sqrt());
        }
        let p = elements.len();
        let mut gram = DMatrix::<Complex64>::zeros(p, p);
        for i in 0..p {
            for j in i..p {
                let val = elements[i].elem_inner(&elements[j])? / (norms[i] * norms[j]);
                gram[(i, j)] = val;
                gram[(j, i)] = val.conj();
            }
        }
        // enforce exact Hermitian symmetry before the eigensolver
        let gram = (gram.clone() + gram.adjoint()) * Complex64::new(0.5, 0.0);
        let eig = gram.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[b]
                .partial_cmp(&eig.eigenvalues[a])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        let lam_max = eig.eigenvalues[order[0]];
        // catches NaN as well
        if lam_max.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::DegenerateDictionary(format!(
                "largest Gram eigenvalue is {lam_max:.3e}"
            )));
        }
        let kept: Vec<usize> =
            order.into_iter().filter(|&k| eig.eigenvalues[k] > tol * lam_max).collect();
        let rank = kept.len();
        let mut transform = DMatrix::<Complex64>::zeros(p, rank);
        for (col, &k) in kept.iter().enumerate() {
            let scale = Complex64::new(1.0 / eig.eigenvalues[k].sqrt(), 0.0);
            for row in 0..p {
                transform[(row, col)] = eig.eigenvectors[(row, k)] * scale;
            }
        }
        let basis = Self { elements, norms, gram, transform, rank, tol };
        let defect = basis.orthonormality_defect();
        if defect > 1e-8 {
            return Err(Error::DegenerateDictionary(format!(
                "orthonormalization defect {defect:.3e}; dictionary too ill-conditioned"
            )));
        }
        Ok(basis)
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn elements(&self) -> &[E] {
        &self.elements
    }

    pub fn gram(&self) -> &DMatrix<Complex64> {
        &self.gram
    }

    /// max |(T* G T - I)_{kl}|.
    pub fn orthonormality_defect(&self) -> f64 {
        let m = self.transform.adjoint() * &self.gram * &self.transform;
        let mut defect = 0.0f64;
        for k in 0..self.rank {
            for l in 0..self.rank {
                let want = if k == l { 1.0 } else { 0.0 };
                defect = defect.max((m[(k, l)] - Complex64::new(want, 0.0)).norm());
            }
        }
        defect
    }

    /// Coordinates <e_k, x> of x in the orthonormal basis. Exact when x lies
    /// in the span; otherwise these are the coordinates of the orthogonal
    /// projection of x.
    pub fn embed(&self, x: &E) -> Result<DVector<Complex64>> {
        let p = self.elements.len();
        let mut overlaps = DVector::<Complex64>::zeros(p);
        for i in 0..p {
            overlaps[i] = self.elements[i].elem_inner(x)? / self.norms[i];
        }
        Ok(self.transform.adjoint() * overlaps)
    }

    /// Squared distance from x to its projection onto the span.
    pub fn residual_sq(&self, x: &E, coords: &DVector<Complex64>) -> f64 {
        (x.elem_norm_sq() - coords.norm_squared()).max(0.0)
    }

    /// Embed and reject inputs outside the span: the squared residual must
    /// stay below `rel_tol` relative to |x|^2.
    pub fn embed_checked(&self, x: &E, rel_tol: f64) -> Result<DVector<Complex64>> {
        let coords = self.embed(x)?;
        let nsq = x.elem_norm_sq();
        let res = self.residual_sq(x, &coords);
        if res > rel_tol * nsq.max(1e-30) {
            return Err(Error::UndefinedAction(format!(
                "input lies outside the operator span (relative residual {:.3e})",
                res / nsq.max(1e-30)
            )));
        }
        Ok(coords)
    }

    /// Coordinates of every normalized dictionary element: column i holds the
    /// basis coordinates of element i / |element i|.
    pub fn element_coords(&self) -> DMatrix<Complex64> {
        self.transform.adjoint() * &self.gram
    }

    /// Minimal-norm coefficients a with x = sum_i a_i (element_i / |element_i|),
    /// rejecting x outside the span.
    pub fn represent_checked(&self, x: &E, rel_tol: f64) -> Result<DVector<Complex64>> {
        let coords = self.embed_checked(x, rel_tol)?;
        Ok(&self.transform * coords)
    }
}

fn merge_dictionaries<E: HilbertElem>(a: &[E], b: &[E]) -> Vec<E> {
    let mut out: Vec<E> = a.to_vec();
    for e in b {
        if !out.iter().any(|x| x.atom_close(e, DEDUP_TOL)) {
            out.push(e.clone());
        }
    }
    out
}

/// Hermitian positive semidefinite matrix over an orthonormalized subspace.
#[derive(Clone, Debug)]
pub struct DenseState<E: HilbertElem> {
    matrix: DMatrix<Complex64>,
    basis: Arc<OrthoBasis<E>>,
}

fn hermitize(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Eigenvalues of a Hermitian matrix, descending.
fn herm_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    let mut v: Vec<f64> = hermitize(m).symmetric_eigen().eigenvalues.iter().cloned().collect();
    v.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    v
}

/// Eigenvalues this far below the largest one (relatively) are treated as
/// exact zeros. Square roots amplify eigensolver noise at the scale of
/// machine epsilon into ~1e-8 errors unless it is clipped first.
const EIG_NOISE_REL: f64 = 1e-14;

fn clip_eigenvalue(lam: f64, lam_max: f64) -> f64 {
    if lam <= EIG_NOISE_REL * lam_max.max(0.0) {
        0.0
    } else {
        lam
    }
}

fn herm_sqrt(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let eig = hermitize(m).symmetric_eigen();
    let lam_max = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    let n = m.nrows();
    let mut out = DMatrix::<Complex64>::zeros(n, n);
    for k in 0..n {
        let lam = clip_eigenvalue(eig.eigenvalues[k], lam_max);
        if lam == 0.0 {
            continue;
        }
        let v: DVector<Complex64> = eig.eigenvectors.column(k).into();
        out += &v * v.adjoint() * Complex64::new(lam.sqrt(), 0.0);
    }
    out
}

impl<E: HilbertElem> DenseState<E> {
    /// Build sum_s w_s |v_s><v_s| (unnormalized); returns the state and its
    /// trace. Weights must be nonnegative.
    pub fn from_mixture(terms: &[(f64, E)], tol: f64) -> Result<(Self, f64)> {
        if terms.is_empty() {
            return Err(Error::Invariant("empty mixture".into()));
        }
        for (w, _) in terms {
            if *w < -1e-14 || !w.is_finite() {
                return Err(Error::Invariant(format!("mixture weight {w} is not admissible")));
            }
        }
        let mut dict: Vec<E> = Vec::new();
        for (_, v) in terms {
            dict = merge_dictionaries(&dict, &v.atoms());
        }
        let basis = Arc::new(OrthoBasis::new(dict, tol)?);
        let mut matrix = DMatrix::<Complex64>::zeros(basis.rank(), basis.rank());
        for (w, v) in terms {
            let coords = basis.embed(v)?;
            matrix += &coords * coords.adjoint() * Complex64::new(*w, 0.0);
        }
        let matrix = hermitize(&matrix);
        let trace = matrix.trace().re;
        Ok((Self { matrix, basis }, trace))
    }

    pub fn from_parts(basis: Arc<OrthoBasis<E>>, matrix: DMatrix<Complex64>) -> Result<Self> {
        if matrix.nrows() != basis.rank() || matrix.ncols() != basis.rank() {
            return Err(Error::DimensionMismatch {
                expected: basis.rank(),
                found: matrix.nrows(),
            });
        }
        Ok(Self { matrix: hermitize(&matrix), basis })
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn basis(&self) -> &Arc<OrthoBasis<E>> {
        &self.basis
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        herm_eigenvalues(&self.matrix)
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    /// Divide by the trace; fails on (numerically) zero trace.
    pub fn normalize(&mut self) -> Result<f64> {
        let t = self.trace();
        if t < 1e-14 {
            return Err(Error::ZeroProbability { denominator: t });
        }
        self.matrix /= Complex64::new(t, 0.0);
        Ok(t)
    }

    pub fn normalized(mut self) -> Result<(Self, f64)> {
        let t = self.normalize()?;
        Ok((self, t))
    }

    /// <x| rho |x> for a vector given as a combo.
    pub fn expectation_vector(&self, x: &E) -> Result<f64> {
        let coords = self.basis.embed(x)?;
        Ok((coords.adjoint() * &self.matrix * &coords)[(0, 0)].re)
    }

    /// tr(rho A) for a matrix in this state's basis.
    pub fn expectation_matrix(&self, a: &DMatrix<Complex64>) -> Result<Complex64> {
        if a.nrows() != self.matrix.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.matrix.nrows(),
                found: a.nrows(),
            });
        }
        Ok((&self.matrix * a).trace())
    }

    /// (1 - |u><u|) rho (1 - |u><u|) for a unit vector u; returns the
    /// projected state (unnormalized) and its trace. The basis is enlarged to
    /// contain u, since the projection direction need not lie in the state's
    /// own span.
    pub fn project_out(&self, unit: &E) -> Result<(Self, f64)> {
        let dict = merge_dictionaries(self.basis.elements(), &unit.atoms());
        let basis = Arc::new(OrthoBasis::new(dict, self.basis.tol())?);
        let m = joint_isometry(&basis, &self.basis)?;
        let rho = hermitize(&(&m * &self.matrix * m.adjoint()));
        let w = basis.embed(unit)?;
        let wn = w.norm_squared();
        if (wn - 1.0).abs() > 1e-8 {
            return Err(Error::Invariant(format!(
                "projection direction has |u|^2 = {wn}, expected a unit vector"
            )));
        }
        let id = DMatrix::<Complex64>::identity(basis.rank(), basis.rank());
        let f = id - &w * w.adjoint();
        let matrix = hermitize(&(&f * &rho * &f));
        let trace = matrix.trace().re;
        Ok((Self { matrix, basis }, trace))
    }

    /// Express both states on the orthonormal basis of the merged dictionary.
    pub fn joint_with(&self, other: &Self) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)> {
        let dict = merge_dictionaries(self.basis.elements(), other.basis.elements());
        let joint = OrthoBasis::new(dict, self.basis.tol().min(other.basis.tol()))?;
        let ma = joint_isometry(&joint, &self.basis)?;
        let mb = joint_isometry(&joint, &other.basis)?;
        let ra = hermitize(&(&ma * &self.matrix * ma.adjoint()));
        let rb = hermitize(&(&mb * &other.matrix * mb.adjoint()));
        Ok((ra, rb))
    }

    /// Uhlmann fidelity (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2; both states
    /// should be normalized for the usual interpretation.
    pub fn fidelity(&self, other: &Self) -> Result<f64> {
        let (ra, rb) = self.joint_with(other)?;
        Ok(fidelity_matrices(&ra, &rb))
    }

    /// (1/2) tr |rho - sigma|.
    pub fn trace_distance(&self, other: &Self) -> Result<f64> {
        let (ra, rb) = self.joint_with(other)?;
        Ok(trace_distance_matrices(&ra, &rb))
    }
}

/// Isometry taking coordinates in `sub` to coordinates in `joint`; requires
/// span(sub) to be contained in span(joint).
fn joint_isometry<E: HilbertElem>(
    joint: &OrthoBasis<E>,
    sub: &OrthoBasis<E>,
) -> Result<DMatrix<Complex64>> {
    let pj = joint.len();
    let ps = sub.len();
    let mut cross = DMatrix::<Complex64>::zeros(pj, ps);
    for i in 0..pj {
        for j in 0..ps {
            let num = joint.elements()[i].elem_inner(&sub.elements()[j])?;
            cross[(i, j)] = num
                / Complex64::new(
                    joint.elements()[i].elem_norm_sq().sqrt()
                        * sub.elements()[j].elem_norm_sq().sqrt(),
                    0.0,
                );
        }
    }
    Ok(joint.transform.adjoint() * cross * &sub.transform)
}

pub fn fidelity_matrices(ra: &DMatrix<Complex64>, rb: &DMatrix<Complex64>) -> f64 {
    let sq = herm_sqrt(ra);
    let inner = &sq * rb * &sq;
    let lam = herm_eigenvalues(&inner);
    let lam_max = lam.first().cloned().unwrap_or(0.0);
    let s: f64 = lam.iter().map(|&l| clip_eigenvalue(l, lam_max).sqrt()).sum();
    s * s
}

pub fn trace_distance_matrices(ra: &DMatrix<Complex64>, rb: &DMatrix<Complex64>) -> f64 {
    let lam = herm_eigenvalues(&(ra - rb));
    0.5 * lam.iter().map(|l| l.abs()).sum::<f64>()
}

/// Trace norm ||rho - sigma||_1 of the difference of two states over the
/// merged dictionary.
pub fn trace_norm_difference<E: HilbertElem>(
    a: &DenseState<E>,
    b: &DenseState<E>,
) -> Result<f64> {
    Ok(2.0 * a.trace_distance(b)?)
}

/// Partial trace over factors 1 and 2 of sum_q w_q |u_q><v_q| with arity-3
/// tensor combos; returns the factor-3 state (unnormalized) and its trace.
pub fn partial_trace_12(
    pairs: &[(Complex64, TensorCombo, TensorCombo)],
    tol: f64,
) -> Result<(DenseState<CoherentCombo>, Complex64)> {
    if pairs.is_empty() {
        return Err(Error::Invariant("empty operator sum".into()));
    }
    for (_, u, v) in pairs {
        if u.arity() != 3 || v.arity() != 3 {
            return Err(Error::ArityMismatch { expected: 3, found: u.arity().max(v.arity()) });
        }
    }
    // dictionary of third-factor exponentials
    fn locate(dict: &mut Vec<CoherentCombo>, f: &DVector<Complex64>) -> usize {
        let cand = CoherentCombo::exponential(f.clone()).expect("mode is valid");
        for (i, e) in dict.iter().enumerate() {
            if e.atom_close(&cand, DEDUP_TOL) {
                return i;
            }
        }
        dict.push(cand);
        dict.len() - 1
    }
    let mut dict: Vec<CoherentCombo> = Vec::new();
    let mut entries: Vec<(usize, usize, Complex64)> = Vec::new();
    for (w, u, v) in pairs {
        for (cu, fu) in u.terms() {
            let di = locate(&mut dict, &fu[2]);
            for (cv, fv) in v.terms() {
                let dj = locate(&mut dict, &fv[2]);
                let expo = fv[0].dotc(&fu[0]) + fv[1].dotc(&fu[1]);
                entries.push((di, dj, w * cu * cv.conj() * expo.exp()));
            }
        }
    }
    let p = dict.len();
    let norms: Vec<f64> = dict.iter().map(|e| e.elem_norm_sq().sqrt()).collect();
    let mut coeff = DMatrix::<Complex64>::zeros(p, p);
    for (i, j, val) in entries {
        coeff[(i, j)] += val * Complex64::new(norms[i] * norms[j], 0.0);
    }
    let basis = Arc::new(OrthoBasis::new(dict, tol)?);
    let e = basis.element_coords();
    let matrix = &e * coeff * e.adjoint();
    let trace = matrix.trace();
    Ok((DenseState { matrix: hermitize(&matrix), basis }, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;
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
            x.push(c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)), rand_mode(rng, dim, 1.0))
                .unwrap();
        }
        x
    }

    #[test]
    fn orthonormalization_defect_is_tiny() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let dict: Vec<CoherentCombo> = (0..6)
            .map(|_| CoherentCombo::exponential(rand_mode(&mut rng, 2, 1.2)).unwrap())
            .collect();
        let basis = OrthoBasis::new(dict, ORTHO_CUTOFF).unwrap();
        assert_eq!(basis.rank(), 6);
        assert!(basis.orthonormality_defect() < 1e-12);
    }

    #[test]
    fn embedding_reproduces_inner_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..100 {
            let x = rand_combo(&mut rng, 2, 3);
            let y = rand_combo(&mut rng, 2, 2);
            let mut dict = x.atoms();
            dict.extend(y.atoms());
            let basis = OrthoBasis::new(dict, ORTHO_CUTOFF).unwrap();
            let cx = basis.embed(&x).unwrap();
            let cy = basis.embed(&y).unwrap();
            let got = cx.dotc(&cy);
            let want = x.inner(&y).unwrap();
            let scale = x.norm_sq().sqrt() * y.norm_sq().sqrt();
            assert!(
                (got - want).norm() < 1e-10 * scale.max(1.0),
                "coordinate inner product {got} vs exact {want}"
            );
        }
    }

    #[test]
    fn duplicate_dictionary_entries_only_reduce_rank() {
        let f = DVector::from_vec(vec![c(0.4, 0.3)]);
        let g = DVector::from_vec(vec![c(-0.9, 0.1)]);
        let dict = vec![
            CoherentCombo::exponential(f.clone()).unwrap(),
            CoherentCombo::exponential(g.clone()).unwrap(),
            CoherentCombo::exponential(f.clone()).unwrap(),
        ];
        let basis = OrthoBasis::new(dict, ORTHO_CUTOFF).unwrap();
        assert_eq!(basis.rank(), 2);
        assert!(basis.orthonormality_defect() < 1e-10);
    }

    #[test]
    fn out_of_span_embedding_is_rejected() {
        let f = DVector::from_vec(vec![c(0.4, 0.3), c(0.0, 0.0)]);
        let g = DVector::from_vec(vec![c(-0.6, 0.0), c(0.9, 0.4)]);
        let basis =
            OrthoBasis::new(vec![CoherentCombo::exponential(f).unwrap()], ORTHO_CUTOFF).unwrap();
        let outside = CoherentCombo::exponential(g).unwrap();
        assert!(matches!(
            basis.embed_checked(&outside, 1e-10),
            Err(Error::UndefinedAction(_))
        ));
    }

    #[test]
    fn pure_state_fidelity_is_squared_overlap() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..10 {
            let x = rand_combo(&mut rng, 2, 2).normalized().unwrap();
            let y = rand_combo(&mut rng, 2, 2).normalized().unwrap();
            let (sx, _) = DenseState::from_mixture(&[(1.0, x.clone())], ORTHO_CUTOFF).unwrap();
            let (sy, _) = DenseState::from_mixture(&[(1.0, y.clone())], ORTHO_CUTOFF).unwrap();
            let fid = sx.fidelity(&sy).unwrap();
            let want = x.inner(&y).unwrap().norm_sqr();
            assert!((fid - want).abs() < 1e-10, "fidelity {fid} vs overlap^2 {want}");
        }
    }

    #[test]
    fn fidelity_and_trace_distance_basics() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let x = rand_combo(&mut rng, 2, 2).normalized().unwrap();
        let y = rand_combo(&mut rng, 2, 2).normalized().unwrap();
        let (mut s, _) =
            DenseState::from_mixture(&[(0.5, x.clone()), (0.5, y.clone())], ORTHO_CUTOFF).unwrap();
        s.normalize().unwrap();
        assert!((s.fidelity(&s).unwrap() - 1.0).abs() < 1e-10);
        assert!(s.trace_distance(&s).unwrap() < 1e-10);

        // orthogonal pure states: fidelity 0, trace distance 1
        let f1 = DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        let f2 = DVector::from_vec(vec![c(-1.0, 0.0), c(0.0, 0.0)]);
        let a = CoherentCombo::exponential(f1).unwrap();
        let b = CoherentCombo::exponential(f2).unwrap();
        // Gram-Schmidt by hand: b - <a,b>/|a|^2 a is orthogonal to a
        let ab = a.inner(&b).unwrap() / c(a.norm_sq(), 0.0);
        let ortho = b.sub(&a.scaled(ab)).unwrap().normalized().unwrap();
        let an = a.normalized().unwrap();
        let (sa, _) = DenseState::from_mixture(&[(1.0, an)], ORTHO_CUTOFF).unwrap();
        let (so, _) = DenseState::from_mixture(&[(1.0, ortho)], ORTHO_CUTOFF).unwrap();
        assert!(sa.fidelity(&so).unwrap() < 1e-10);
        assert!((sa.trace_distance(&so).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn partial_trace_of_product_state_gives_third_factor() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let a = rand_combo(&mut rng, 2, 2);
        let b = rand_combo(&mut rng, 2, 2);
        let w = rand_combo(&mut rng, 2, 2).normalized().unwrap();
        let state = TensorCombo::product(&[&a, &b, &w]).unwrap();
        let (reduced, trace) =
            partial_trace_12(&[(c(1.0, 0.0), state.clone(), state)], ORTHO_CUTOFF).unwrap();
        let want_trace = a.norm_sq() * b.norm_sq();
        assert!((trace.re - want_trace).abs() < 1e-10 * want_trace.max(1.0));
        assert!(trace.im.abs() < 1e-10);
        let (reduced, _) = reduced.normalized().unwrap();
        let (target, _) = DenseState::from_mixture(&[(1.0, w)], ORTHO_CUTOFF).unwrap();
        let fid = reduced.fidelity(&target).unwrap();
        assert!((fid - 1.0).abs() < 1e-9, "fidelity {fid}");
    }

    #[test]
    fn project_out_removes_the_component() {
        let dim = 2;
        let f = DVector::from_vec(vec![c(0.8, 0.0), c(0.2, -0.4)]);
        let x = CoherentCombo::coherent_ket(f).unwrap();
        let (state, _) = DenseState::from_mixture(&[(1.0, x)], ORTHO_CUTOFF).unwrap();
        let vac = CoherentCombo::vacuum(dim);
        let (proj, kept) = state.project_out(&vac).unwrap();
        // after projecting out the vacuum, the state has no vacuum overlap
        let overlap = proj.expectation_vector(&vac).unwrap();
        assert!(overlap.abs() < 1e-12);
        assert!(kept > 0.0 && kept < 1.0);
    }

    #[test]
    fn mixture_trace_equals_weighted_norms() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let x = rand_combo(&mut rng, 2, 3);
        let y = rand_combo(&mut rng, 2, 2);
        let (_, trace) =
            DenseState::from_mixture(&[(0.3, x.clone()), (0.7, y.clone())], ORTHO_CUTOFF).unwrap();
        let want = 0.3 * x.norm_sq() + 0.7 * y.norm_sq();
        assert!((trace - want).abs() < 1e-10 * want.max(1.0));
    }
}
