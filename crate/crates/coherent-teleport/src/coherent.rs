//! Finite linear combinations of exponential vectors and their inner
//! products. Every state appearing in the teleportation models is such a
//! combination, so inner products stay closed-form until the final
//! finite-dimensional step.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mode_space::{check_mode_vector, ModeVector};

/// Tolerance for merging terms whose mode vectors agree entrywise.
pub const DEDUP_TOL: f64 = 1e-12;

/// <exp f, exp g> = e^{<f,g>}, conjugate-linear in the first argument.
pub fn exp_inner(f: &ModeVector, g: &ModeVector) -> Complex64 {
    f.dotc(g).exp()
}

fn modes_close(a: &ModeVector, b: &ModeVector, tol: f64) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b.iter())
            .all(|(x, y)| (x.re - y.re).abs() <= tol && (x.im - y.im).abs() <= tol)
}

/// c_1 exp(f_1) + ... + c_p exp(f_p) over a fixed mode dimension.
#[derive(Clone, Debug)]
pub struct CoherentCombo {
    dim: usize,
    terms: Vec<(Complex64, ModeVector)>,
}

impl CoherentCombo {
    pub fn zero(dim: usize) -> Self {
        Self { dim, terms: Vec::new() }
    }

    pub fn exponential(f: ModeVector) -> Result<Self> {
        check_mode_vector(&f)?;
        let dim = f.len();
        Ok(Self { dim, terms: vec![(Complex64::new(1.0, 0.0), f)] })
    }

    /// exp(0), the vacuum; unit norm.
    pub fn vacuum(dim: usize) -> Self {
        Self { dim, terms: vec![(Complex64::new(1.0, 0.0), DVector::zeros(dim))] }
    }

    /// Normalized exponential vector e^{-|f|^2/2} exp(f).
    pub fn coherent_ket(f: ModeVector) -> Result<Self> {
        check_mode_vector(&f)?;
        let c = Complex64::new((-f.norm_squared() / 2.0).exp(), 0.0);
        let dim = f.len();
        Ok(Self { dim, terms: vec![(c, f)] })
    }

    /// Normalized difference (exp(f) - exp(0)) / sqrt(e^{|f|^2} - 1).
    pub fn difference_ket(f: ModeVector) -> Result<Self> {
        check_mode_vector(&f)?;
        let nsq = f.norm_squared().exp_m1();
        if nsq <= 0.0 {
            return Err(Error::Invariant(
                "difference of exp(f) and the vacuum vanishes for f = 0".into(),
            ));
        }
        let c = Complex64::new(1.0 / nsq.sqrt(), 0.0);
        let dim = f.len();
        let mut combo = Self { dim, terms: Vec::with_capacity(2) };
        combo.push(c, f)?;
        combo.push(-c, DVector::zeros(dim))?;
        Ok(combo)
    }

    pub fn push(&mut self, c: Complex64, f: ModeVector) -> Result<()> {
        check_mode_vector(&f)?;
        if f.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: f.len() });
        }
        if !c.re.is_finite() || !c.im.is_finite() {
            return Err(Error::NonFinite("combo coefficient".into()));
        }
        self.terms.push((c, f));
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[(Complex64, ModeVector)] {
        &self.terms
    }

    pub fn scale(&mut self, c: Complex64) {
        for (w, _) in &mut self.terms {
            *w *= c;
        }
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        out.scale(c);
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        let mut out = self.clone();
        out.terms.extend(other.terms.iter().cloned());
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scaled(Complex64::new(-1.0, 0.0)))
    }

    /// Merge terms whose mode vectors agree within `tol` per entry; terms with
    /// merged coefficient exactly zero are kept (harmless) unless the mode
    /// slot merged away entirely.
    pub fn dedup(&mut self, tol: f64) {
        let mut merged: Vec<(Complex64, ModeVector)> = Vec::with_capacity(self.terms.len());
        'outer: for (c, f) in self.terms.drain(..) {
            for (mc, mf) in merged.iter_mut() {
                if modes_close(mf, &f, tol) {
                    *mc += c;
                    continue 'outer;
                }
            }
            merged.push((c, f));
        }
        merged.retain(|(c, _)| c.norm_sqr() > 0.0);
        self.terms = merged;
    }

    pub fn deduped(mut self) -> Self {
        self.dedup(DEDUP_TOL);
        self
    }

    /// Conjugate-linear in `self`.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (ci, fi) in &self.terms {
            for (cj, fj) in &other.terms {
                acc += ci.conj() * cj * exp_inner(fi, fj);
            }
        }
        Ok(acc)
    }

    pub fn norm_sq(&self) -> f64 {
        self.inner(self).expect("dimensions agree").re
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sq();
        if n <= 0.0 || !n.is_finite() {
            return Err(Error::Invariant(format!("cannot normalize combo with |x|^2 = {n}")));
        }
        Ok(self.scaled(Complex64::new(1.0 / n.sqrt(), 0.0)))
    }

    /// Map every exponent through `f`; this is how second quantization and
    /// related lifts act termwise.
    pub(crate) fn map_modes(&self, f: impl Fn(&ModeVector) -> ModeVector) -> Self {
        let terms: Vec<(Complex64, ModeVector)> =
            self.terms.iter().map(|(c, m)| (*c, f(m))).collect();
        let dim = terms.first().map(|(_, m)| m.len()).unwrap_or(self.dim);
        Self { dim, terms }
    }
}

/// Combination of elementary tensors of exponential vectors; arity 2 or 3.
#[derive(Clone, Debug)]
pub struct TensorCombo {
    dims: Vec<usize>,
    terms: Vec<(Complex64, Vec<ModeVector>)>,
}

impl TensorCombo {
    pub fn zero(dims: Vec<usize>) -> Result<Self> {
        if dims.len() < 2 || dims.len() > 3 {
            return Err(Error::ArityMismatch { expected: 2, found: dims.len() });
        }
        Ok(Self { dims, terms: Vec::new() })
    }

    pub fn arity(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[(Complex64, Vec<ModeVector>)] {
        &self.terms
    }

    pub fn push(&mut self, c: Complex64, factors: Vec<ModeVector>) -> Result<()> {
        if factors.len() != self.dims.len() {
            return Err(Error::ArityMismatch { expected: self.dims.len(), found: factors.len() });
        }
        for (f, &d) in factors.iter().zip(self.dims.iter()) {
            check_mode_vector(f)?;
            if f.len() != d {
                return Err(Error::DimensionMismatch { expected: d, found: f.len() });
            }
        }
        if !c.re.is_finite() || !c.im.is_finite() {
            return Err(Error::NonFinite("tensor coefficient".into()));
        }
        self.terms.push((c, factors));
        Ok(())
    }

    /// Tensor product of coherent combos, one per factor.
    pub fn product(factors: &[&CoherentCombo]) -> Result<Self> {
        if factors.len() < 2 || factors.len() > 3 {
            return Err(Error::ArityMismatch { expected: 2, found: factors.len() });
        }
        let dims: Vec<usize> = factors.iter().map(|c| c.dim()).collect();
        let mut out = Self::zero(dims)?;
        match factors {
            [a, b] => {
                for (ca, fa) in a.terms() {
                    for (cb, fb) in b.terms() {
                        out.push(ca * cb, vec![fa.clone(), fb.clone()])?;
                    }
                }
            }
            [a, b, c] => {
                for (ca, fa) in a.terms() {
                    for (cb, fb) in b.terms() {
                        for (cc, fc) in c.terms() {
                            out.push(ca * cb * cc, vec![fa.clone(), fb.clone(), fc.clone()])?;
                        }
                    }
                }
            }
            _ => unreachable!(),
        }
        Ok(out)
    }

    /// coherent (x) tensor -> tensor with one more leading factor.
    pub fn prepend(front: &CoherentCombo, rest: &TensorCombo) -> Result<Self> {
        if rest.arity() != 2 {
            return Err(Error::ArityMismatch { expected: 2, found: rest.arity() });
        }
        let mut dims = vec![front.dim()];
        dims.extend_from_slice(rest.dims());
        let mut out = Self::zero(dims)?;
        for (cf, ff) in front.terms() {
            for (cr, fr) in rest.terms() {
                let mut factors = Vec::with_capacity(3);
                factors.push(ff.clone());
                factors.extend(fr.iter().cloned());
                out.push(cf * cr, factors)?;
            }
        }
        Ok(out)
    }

    /// tensor (x) coherent -> tensor with one more trailing factor.
    pub fn append(rest: &TensorCombo, back: &CoherentCombo) -> Result<Self> {
        if rest.arity() != 2 {
            return Err(Error::ArityMismatch { expected: 2, found: rest.arity() });
        }
        let mut dims = rest.dims().to_vec();
        dims.push(back.dim());
        let mut out = Self::zero(dims)?;
        for (cr, fr) in rest.terms() {
            for (cb, fb) in back.terms() {
                let mut factors = fr.clone();
                factors.push(fb.clone());
                out.push(cr * cb, factors)?;
            }
        }
        Ok(out)
    }

    pub fn scale(&mut self, c: Complex64) {
        for (w, _) in &mut self.terms {
            *w *= c;
        }
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        out.scale(c);
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if other.dims != self.dims {
            return Err(Error::ArityMismatch { expected: self.arity(), found: other.arity() });
        }
        let mut out = self.clone();
        out.terms.extend(other.terms.iter().cloned());
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scaled(Complex64::new(-1.0, 0.0)))
    }

    pub fn dedup(&mut self, tol: f64) {
        let mut merged: Vec<(Complex64, Vec<ModeVector>)> = Vec::with_capacity(self.terms.len());
        'outer: for (c, fs) in self.terms.drain(..) {
            for (mc, mfs) in merged.iter_mut() {
                if mfs.iter().zip(fs.iter()).all(|(a, b)| modes_close(a, b, tol)) {
                    *mc += c;
                    continue 'outer;
                }
            }
            merged.push((c, fs));
        }
        merged.retain(|(c, _)| c.norm_sqr() > 0.0);
        self.terms = merged;
    }

    pub fn deduped(mut self) -> Self {
        self.dedup(DEDUP_TOL);
        self
    }

    /// Conjugate-linear in `self`. The exponents of all factors are summed
    /// before exponentiating, which keeps large and tiny factors balanced.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        if other.dims != self.dims {
            return Err(Error::ArityMismatch { expected: self.arity(), found: other.arity() });
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (ci, fi) in &self.terms {
            for (cj, fj) in &other.terms {
                let mut expo = Complex64::new(0.0, 0.0);
                for (a, b) in fi.iter().zip(fj.iter()) {
                    expo += a.dotc(b);
                }
                acc += ci.conj() * cj * expo.exp();
            }
        }
        Ok(acc)
    }

    pub fn norm_sq(&self) -> f64 {
        self.inner(self).expect("dimensions agree").re
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sq();
        if n <= 0.0 || !n.is_finite() {
            return Err(Error::Invariant(format!("cannot normalize combo with |x|^2 = {n}")));
        }
        Ok(self.scaled(Complex64::new(1.0 / n.sqrt(), 0.0)))
    }

    /// Map the exponent of one factor termwise.
    pub(crate) fn map_factor(
        &self,
        factor: usize,
        f: impl Fn(&ModeVector) -> ModeVector,
    ) -> Result<Self> {
        if factor >= self.arity() {
            return Err(Error::IndexOutOfRange(format!(
                "factor {factor} of arity-{} tensor",
                self.arity()
            )));
        }
        let mut terms = Vec::with_capacity(self.terms.len());
        let mut dims = self.dims.clone();
        for (c, fs) in &self.terms {
            let mut nf = fs.clone();
            nf[factor] = f(&fs[factor]);
            dims[factor] = nf[factor].len();
            terms.push((*c, nf));
        }
        Ok(Self { dims, terms })
    }
}

/// Partial inner product <meas (x) 1, state>: contracts an arity-2 vector
/// against the first two factors of an arity-3 vector, leaving a coherent
/// combination on the third factor.
pub fn partial_project_12(meas: &TensorCombo, state: &TensorCombo) -> Result<CoherentCombo> {
    if meas.arity() != 2 {
        return Err(Error::ArityMismatch { expected: 2, found: meas.arity() });
    }
    if state.arity() != 3 {
        return Err(Error::ArityMismatch { expected: 3, found: state.arity() });
    }
    if meas.dims()[0] != state.dims()[0] || meas.dims()[1] != state.dims()[1] {
        return Err(Error::DimensionMismatch {
            expected: state.dims()[0],
            found: meas.dims()[0],
        });
    }
    let mut out = CoherentCombo::zero(state.dims()[2]);
    for (cs, fs) in state.terms() {
        let mut amp = Complex64::new(0.0, 0.0);
        for (cm, fm) in meas.terms() {
            let expo = fm[0].dotc(&fs[0]) + fm[1].dotc(&fs[1]);
            amp += cm.conj() * expo.exp();
        }
        out.push(cs * amp, fs[2].clone())?;
    }
    out.dedup(DEDUP_TOL);
    Ok(out)
}
