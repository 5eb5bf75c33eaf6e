//! Teleportation models over a cyclic family of coherent states.
//!
//! A model is fixed by the family size N, the energy parameter d (the kets
//! `|exp(a g_k)>` with a = sqrt(d) have mean photon number d), a splitting
//! pair, and an N x N phase matrix. It provides three channels:
//!
//! * `channel_perfect`: orthonormal measurement family and exact
//!   difference-pair resource; teleports with probability 1/N^2 per outcome.
//! * `channel_half`: same measurement, but the resource is produced by beam
//!   splitting and the output is passed through the vacuum cutoff.
//! * `channel_full`: measurement vectors themselves built from beam-split
//!   coherent pairs; approaches the perfect channel as d grows.
//!
//! `staged` runs the full model as an explicit five-step circuit on three
//! tensor factors and `general_perfect` replays the perfect scheme on a dense
//! N-dimensional Hilbert space.

use crate::coherent::{partial_project_12, CoherentCombo, TensorCombo};
use crate::error::{Error, Result};
use crate::fock_ops::{
    exchange_pair, phase_unitary, project_factor, second_quantize, second_quantize_factor,
    shift_unitary, vacuum_complement, vacuum_complement_factor, DictionaryOperator,
};
use crate::mode_space::{SplittingKind, SplittingPair};
use crate::ortho::{partial_trace_12, trace_distance_matrices, DenseState, ORTHO_CUTOFF};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

const MIN_ENERGY: f64 = 0.05;
const MIN_PROBABILITY: f64 = 1e-14;
const PHASE_TOL: f64 = 1e-12;
const STATE_TOL: f64 = 1e-12;
const TRACE_REL_TOL: f64 = 1e-8;

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Discrete Fourier phases, `b[k][j] = exp(2 pi i k j / size)`.
pub fn dft_phases(size: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(size, size, |k, j| {
        let angle = 2.0 * std::f64::consts::PI * (((k * j) % size) as f64) / (size as f64);
        Complex64::from_polar(1.0, angle)
    })
}

fn validate_phases(phases: &DMatrix<Complex64>, size: usize) -> Result<()> {
    if phases.nrows() != size || phases.ncols() != size {
        return Err(Error::InvalidConfig(format!(
            "phase matrix must be {size}x{size}, got {}x{}",
            phases.nrows(),
            phases.ncols()
        )));
    }
    for k in 0..size {
        for j in 0..size {
            let b = phases[(k, j)];
            if !b.re.is_finite() || !b.im.is_finite() {
                return Err(Error::NonFinite(format!("phase entry ({k},{j})")));
            }
            if (b.norm() - 1.0).abs() > PHASE_TOL {
                return Err(Error::InvalidConfig(format!(
                    "phase entry ({k},{j}) has modulus {}",
                    b.norm()
                )));
            }
        }
    }
    for k in 0..size {
        for l in k..size {
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..size {
                s += phases[(k, j)].conj() * phases[(l, j)];
            }
            let target = if k == l { size as f64 } else { 0.0 };
            if (s - re(target)).norm() > PHASE_TOL * size as f64 {
                return Err(Error::InvalidConfig(format!(
                    "phase rows {k} and {l} are not orthogonal"
                )));
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct ModelConfig {
    /// Number of coherent states in the family (N >= 2).
    pub size: usize,
    /// Mean photon number d of each family member (d >= 0.05).
    pub d: f64,
    pub splitting: SplittingKind,
    /// Phase matrix for the measurement labels; discrete Fourier when absent.
    pub phases: Option<DMatrix<Complex64>>,
    /// Tolerance used by verification reports built on this model.
    pub tol: f64,
}

impl ModelConfig {
    pub fn new(size: usize, d: f64, splitting: SplittingKind) -> Self {
        ModelConfig { size, d, splitting, phases: None, tol: 1e-10 }
    }
}

/// Mixed input on the N-dimensional span of the first-leg difference kets,
/// given as weights `w_s` and an N x N coefficient matrix with orthonormal
/// rows: the state is `sum_s w_s |psi_s><psi_s|` with
/// `psi_s = sum_j coeffs[s][j] diff_j`.
#[derive(Clone, Debug)]
pub struct InputState {
    weights: Vec<f64>,
    coeffs: DMatrix<Complex64>,
}

impl InputState {
    pub fn new(weights: Vec<f64>, coeffs: DMatrix<Complex64>) -> Result<Self> {
        let size = weights.len();
        if size == 0 {
            return Err(Error::InvalidConfig("input needs at least one weight".into()));
        }
        if coeffs.nrows() != size || coeffs.ncols() != size {
            return Err(Error::InvalidConfig(format!(
                "coefficient matrix must be {size}x{size}, got {}x{}",
                coeffs.nrows(),
                coeffs.ncols()
            )));
        }
        let mut sum = 0.0;
        for (s, w) in weights.iter().enumerate() {
            if !w.is_finite() || *w < -STATE_TOL {
                return Err(Error::InvalidConfig(format!("weight {s} is {w}")));
            }
            sum += w;
        }
        if (sum - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidConfig(format!("weights sum to {sum}, expected 1")));
        }
        for s in 0..size {
            for t in s..size {
                let mut dot = Complex64::new(0.0, 0.0);
                for j in 0..size {
                    dot += coeffs[(s, j)].conj() * coeffs[(t, j)];
                }
                let target = if s == t { 1.0 } else { 0.0 };
                if (dot - re(target)).norm() > STATE_TOL * size as f64 {
                    return Err(Error::InvalidConfig(format!(
                        "coefficient rows {s} and {t} are not orthonormal"
                    )));
                }
            }
        }
        Ok(InputState { weights, coeffs })
    }

    /// Uniform mixture of the difference kets themselves.
    pub fn identity(size: usize) -> Result<Self> {
        let weights = vec![1.0 / size as f64; size];
        Self::new(weights, DMatrix::identity(size, size))
    }

    /// Pure state concentrated on the s-th difference ket.
    pub fn basis_state(size: usize, s: usize) -> Result<Self> {
        if s >= size {
            return Err(Error::IndexOutOfRange(format!("basis index {s} for size {size}")));
        }
        let mut weights = vec![0.0; size];
        weights[s] = 1.0;
        Self::new(weights, DMatrix::identity(size, size))
    }

    /// Random mixed input: eigenbasis drawn from the unitarily invariant
    /// distribution (QR of a complex Gaussian matrix with the usual phase
    /// correction), weights uniform on the simplex.
    pub fn random<R: Rng + ?Sized>(size: usize, rng: &mut R) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidConfig("input needs at least one weight".into()));
        }
        let g = DMatrix::from_fn(size, size, |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let qr = g.qr();
        let r = qr.r();
        let mut q = qr.q();
        for j in 0..size {
            let djj = r[(j, j)];
            let ph = if djj.norm() > 1e-300 { djj / djj.norm() } else { re(1.0) };
            for i in 0..size {
                q[(i, j)] *= ph;
            }
        }
        let mut weights: Vec<f64> = (0..size).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        // rows of a unitary are orthonormal, so q transposed rows work directly
        Self::new(weights, q.transpose())
    }

    pub fn size(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn coeffs(&self) -> &DMatrix<Complex64> {
        &self.coeffs
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResourceKind {
    /// Exact entangled pair of difference kets.
    DifferencePairs,
    /// Pair produced by beam splitting the coherent superposition `eta`.
    CoherentPairs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeasurementKind {
    /// Orthonormal family built from difference-ket pairs.
    DifferenceBasis,
    /// Family built from beam-split coherent pairs; orthonormal only in the
    /// large-d limit.
    CoherentBasis,
}

/// One channel evaluation at outcome (n, m).
#[derive(Clone, Debug)]
pub struct ChannelResult {
    pub n: usize,
    pub m: usize,
    /// Probability of this outcome.
    pub probability: f64,
    /// Normalized conditional output state on the receiving leg.
    pub output: DenseState<CoherentCombo>,
    /// Unnormalized output vectors, one per input component, with weights.
    pub components: Vec<(f64, CoherentCombo)>,
}

/// Circuit run of the full model: step-by-step traces and the conditional
/// three-factor state after the measurement.
#[derive(Clone, Debug)]
pub struct StagedOutcome {
    pub n: usize,
    pub m: usize,
    pub probability: f64,
    /// Weighted squared norms after steps 0..=5. Steps 0..=3 are isometric
    /// (trace 1), step 4 is the measurement (trace = probability), step 5 is
    /// normalization plus the optional key (trace 1).
    pub step_traces: [f64; 6],
    /// Normalized post-measurement state on all three factors, before the key.
    pub joint: DenseState<TensorCombo>,
    /// Reduction to the third factor; the key is applied iff `key_applied`.
    pub bob: DenseState<CoherentCombo>,
    pub key_applied: bool,
}

/// Outcome of the dense N-dimensional scheme.
#[derive(Clone, Debug)]
pub struct GeneralSchemeOutcome {
    pub probability: f64,
    /// Conditional output density matrix.
    pub output: DMatrix<Complex64>,
    /// The keyed transform `W rho W*` the output must equal.
    pub keyed: DMatrix<Complex64>,
    pub deviation: f64,
}

pub struct Model {
    config: ModelConfig,
    pair: SplittingPair,
    phases: DMatrix<Complex64>,
    a: f64,
    x: f64,
    gamma: f64,
    vacuum: CoherentCombo,
    diff1: Vec<CoherentCombo>,
    diff2: Vec<CoherentCombo>,
    coh1: Vec<CoherentCombo>,
    coh2: Vec<CoherentCombo>,
    eta: CoherentCombo,
    eta_tilde: CoherentCombo,
    xi: TensorCombo,
    xi_tilde: TensorCombo,
    phase_ops: Vec<DictionaryOperator>,
    phase_adj_ops: Vec<DictionaryOperator>,
    shift_ops: Vec<DictionaryOperator>,
}

impl Model {
    pub fn new(config: ModelConfig) -> Result<Self> {
        let size = config.size;
        if size < 2 {
            return Err(Error::InvalidConfig(format!("family size {size} below minimum 2")));
        }
        if !config.d.is_finite() || config.d < MIN_ENERGY {
            return Err(Error::InvalidConfig(format!(
                "energy parameter {} below minimum {MIN_ENERGY}",
                config.d
            )));
        }
        if !config.tol.is_finite() || config.tol <= 0.0 || config.tol > 1e-2 {
            return Err(Error::InvalidConfig(format!("tolerance {} out of range", config.tol)));
        }
        let phases = match &config.phases {
            Some(p) => p.clone(),
            None => dft_phases(size),
        };
        validate_phases(&phases, size)?;
        let pair = SplittingPair::make(config.splitting, size)?;
        let a = config.d.sqrt();
        let x = (-config.d / 2.0).exp();
        let gamma = 1.0 / (1.0 + (size as f64 - 1.0) * (-config.d).exp()).sqrt();
        let dim = pair.dim();
        let vacuum = CoherentCombo::vacuum(dim);

        let mut diff1 = Vec::with_capacity(size);
        let mut diff2 = Vec::with_capacity(size);
        let mut coh1 = Vec::with_capacity(size);
        let mut coh2 = Vec::with_capacity(size);
        for k in 0..size {
            let f1 = pair.k1_mode(k).scale(a);
            let f2 = pair.k2_mode(k).scale(a);
            diff1.push(CoherentCombo::difference_ket(f1.clone())?);
            diff2.push(CoherentCombo::difference_ket(f2.clone())?);
            coh1.push(CoherentCombo::coherent_ket(f1)?);
            coh2.push(CoherentCombo::coherent_ket(f2)?);
        }

        let weight = re(gamma / (size as f64).sqrt());
        let mut eta = CoherentCombo::zero(dim);
        let mut eta_tilde = CoherentCombo::zero(dim);
        for k in 0..size {
            let g = pair.modes()[k].clone();
            eta = eta.add(&CoherentCombo::coherent_ket(g.scale(a))?.scaled(weight))?;
            let h = pair.k1_mode(k).scale(std::f64::consts::SQRT_2 * a);
            eta_tilde = eta_tilde.add(&CoherentCombo::coherent_ket(h)?.scaled(weight))?;
        }
        let eta = eta.deduped();
        let eta_tilde = eta_tilde.deduped();
        for (name, v) in [("eta", &eta), ("eta_tilde", &eta_tilde)] {
            if (v.norm_sq() - 1.0).abs() > STATE_TOL {
                return Err(Error::Invariant(format!(
                    "{name} has squared norm {}",
                    v.norm_sq()
                )));
            }
        }

        let mut xi = TensorCombo::zero(vec![dim, dim])?;
        let unit = re(1.0 / (size as f64).sqrt());
        for k in 0..size {
            xi = xi.add(&TensorCombo::product(&[&diff1[k], &diff2[k]])?.scaled(unit))?;
        }
        let xi = xi.deduped();
        let xi_tilde = crate::fock_ops::beam_split(&pair, &eta)?.deduped();
        for (name, v) in [("difference resource", &xi), ("coherent resource", &xi_tilde)] {
            if (v.norm_sq() - 1.0).abs() > STATE_TOL {
                return Err(Error::Invariant(format!(
                    "{name} has squared norm {}",
                    v.norm_sq()
                )));
            }
        }

        let mut phase_ops = Vec::with_capacity(size);
        let mut phase_adj_ops = Vec::with_capacity(size);
        let mut shift_ops = Vec::with_capacity(size);
        for idx in 0..size {
            let row: Vec<Complex64> = (0..size).map(|j| phases[(idx, j)]).collect();
            let row_conj: Vec<Complex64> = row.iter().map(|b| b.conj()).collect();
            phase_ops.push(phase_unitary(&pair, a, &row)?);
            phase_adj_ops.push(phase_unitary(&pair, a, &row_conj)?);
            shift_ops.push(shift_unitary(&pair, a, idx)?);
        }

        Ok(Model {
            config,
            pair,
            phases,
            a,
            x,
            gamma,
            vacuum,
            diff1,
            diff2,
            coh1,
            coh2,
            eta,
            eta_tilde,
            xi,
            xi_tilde,
            phase_ops,
            phase_adj_ops,
            shift_ops,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn size(&self) -> usize {
        self.config.size
    }

    pub fn d(&self) -> f64 {
        self.config.d
    }

    pub fn amplitude(&self) -> f64 {
        self.a
    }

    /// Pairwise overlap of distinct normalized family members, `exp(-d/2)`.
    pub fn overlap(&self) -> f64 {
        self.x
    }

    /// Normalization constant of the coherent superpositions.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn pair(&self) -> &SplittingPair {
        &self.pair
    }

    pub fn phases(&self) -> &DMatrix<Complex64> {
        &self.phases
    }

    pub fn vacuum(&self) -> &CoherentCombo {
        &self.vacuum
    }

    pub fn differences_1(&self) -> &[CoherentCombo] {
        &self.diff1
    }

    pub fn differences_2(&self) -> &[CoherentCombo] {
        &self.diff2
    }

    pub fn coherents_1(&self) -> &[CoherentCombo] {
        &self.coh1
    }

    pub fn coherents_2(&self) -> &[CoherentCombo] {
        &self.coh2
    }

    pub fn eta(&self) -> &CoherentCombo {
        &self.eta
    }

    pub fn eta_tilde(&self) -> &CoherentCombo {
        &self.eta_tilde
    }

    pub fn resource(&self, kind: ResourceKind) -> &TensorCombo {
        match kind {
            ResourceKind::DifferencePairs => &self.xi,
            ResourceKind::CoherentPairs => &self.xi_tilde,
        }
    }

    pub fn phase_op(&self, n: usize) -> Result<&DictionaryOperator> {
        self.phase_ops
            .get(n)
            .ok_or_else(|| Error::IndexOutOfRange(format!("phase index {n}")))
    }

    pub fn phase_adj_op(&self, n: usize) -> Result<&DictionaryOperator> {
        self.phase_adj_ops
            .get(n)
            .ok_or_else(|| Error::IndexOutOfRange(format!("phase index {n}")))
    }

    pub fn shift_op(&self, m: usize) -> Result<&DictionaryOperator> {
        self.shift_ops
            .get(m)
            .ok_or_else(|| Error::IndexOutOfRange(format!("shift index {m}")))
    }

    fn check_outcome(&self, n: usize, m: usize) -> Result<()> {
        if n >= self.size() || m >= self.size() {
            return Err(Error::IndexOutOfRange(format!(
                "outcome ({n},{m}) for family size {}",
                self.size()
            )));
        }
        Ok(())
    }

    fn check_input(&self, input: &InputState) -> Result<()> {
        if input.size() != self.size() {
            return Err(Error::DimensionMismatch { expected: self.size(), found: input.size() });
        }
        Ok(())
    }

    /// Component vectors `psi_s = sum_j coeffs[s][j] diff_j` of the input.
    pub fn input_vectors(&self, input: &InputState) -> Result<Vec<CoherentCombo>> {
        self.check_input(input)?;
        let size = self.size();
        let mut out = Vec::with_capacity(size);
        for s in 0..size {
            let mut v = CoherentCombo::zero(self.pair.dim());
            for j in 0..size {
                v = v.add(&self.diff1[j].scaled(input.coeffs()[(s, j)]))?;
            }
            out.push(v.deduped());
        }
        Ok(out)
    }

    /// Uniform superposition of the first-leg difference kets.
    pub fn uniform_vector(&self) -> Result<CoherentCombo> {
        let size = self.size();
        let mut v = CoherentCombo::zero(self.pair.dim());
        let c = re(1.0 / (size as f64).sqrt());
        for j in 0..size {
            v = v.add(&self.diff1[j].scaled(c))?;
        }
        Ok(v.deduped())
    }

    pub fn input_density(&self, input: &InputState) -> Result<DenseState<CoherentCombo>> {
        let psis = self.input_vectors(input)?;
        let terms: Vec<(f64, CoherentCombo)> =
            input.weights().iter().copied().zip(psis).collect();
        let (state, _) = DenseState::from_mixture(&terms, ORTHO_CUTOFF)?;
        let (state, _) = state.normalized()?;
        Ok(state)
    }

    /// Measurement vector at outcome (n, m).
    pub fn measurement_vector(
        &self,
        kind: MeasurementKind,
        n: usize,
        m: usize,
    ) -> Result<TensorCombo> {
        self.check_outcome(n, m)?;
        let size = self.size();
        match kind {
            MeasurementKind::DifferenceBasis => {
                let mut out = TensorCombo::zero(vec![self.pair.dim(), self.pair.dim()])?;
                let unit = 1.0 / (size as f64).sqrt();
                for j in 0..size {
                    let prod =
                        TensorCombo::product(&[&self.diff1[j], &self.diff1[(j + m) % size]])?;
                    out = out.add(&prod.scaled(self.phases[(n, j)] * re(unit)))?;
                }
                Ok(out.deduped())
            }
            MeasurementKind::CoherentBasis => {
                let ve = TensorCombo::product(&[&self.vacuum, &self.eta_tilde])?;
                let z = crate::fock_ops::exchange_adjoint(&ve)?;
                let z = self.phase_ops[n].apply_factor(&z, 0)?;
                let z = self.shift_ops[m].apply_factor(&z, 1)?;
                Ok(z.deduped())
            }
        }
    }

    /// All N^2 measurement vectors, indexed by n * N + m. The difference-basis
    /// family is checked to be orthonormal.
    pub fn measurement_family(&self, kind: MeasurementKind) -> Result<Vec<TensorCombo>> {
        let size = self.size();
        let mut family = Vec::with_capacity(size * size);
        for n in 0..size {
            for m in 0..size {
                family.push(self.measurement_vector(kind, n, m)?);
            }
        }
        if kind == MeasurementKind::DifferenceBasis {
            for (i, u) in family.iter().enumerate() {
                for (j, v) in family.iter().enumerate().skip(i) {
                    let target = if i == j { 1.0 } else { 0.0 };
                    let dev = (u.inner(v)? - re(target)).norm();
                    if dev > self.config.tol {
                        return Err(Error::Invariant(format!(
                            "measurement family not orthonormal at ({i},{j}): deviation {dev:.3e}"
                        )));
                    }
                }
            }
        }
        Ok(family)
    }

    /// Measurement vector obtained by dressing an entangled resource with the
    /// outcome label: phases on the first leg, transported shift on the second.
    pub fn omega_measurement(
        &self,
        resource: &TensorCombo,
        n: usize,
        m: usize,
    ) -> Result<TensorCombo> {
        self.check_outcome(n, m)?;
        let t_adj = self.pair.t().adjoint();
        let z = second_quantize_factor(&t_adj, resource, 1)?;
        let z = self.shift_ops[m].apply_factor(&z, 1)?;
        let z = self.phase_ops[n].apply_factor(&z, 0)?;
        Ok(z.deduped())
    }

    fn run_channel(
        &self,
        input: &InputState,
        meas: &TensorCombo,
        resource: &TensorCombo,
        strip_vacuum: bool,
        n: usize,
        m: usize,
    ) -> Result<ChannelResult> {
        let psis = self.input_vectors(input)?;
        let mut components = Vec::with_capacity(psis.len());
        let mut probability = 0.0;
        for (s, psi) in psis.iter().enumerate() {
            let joint = TensorCombo::prepend(psi, resource)?;
            let mut w = partial_project_12(meas, &joint)?;
            if strip_vacuum {
                w = vacuum_complement(&w)?;
            }
            let lam = input.weights()[s];
            probability += lam * w.norm_sq();
            components.push((lam, w));
        }
        if probability < MIN_PROBABILITY {
            return Err(Error::ZeroProbability { denominator: probability });
        }
        let (state, trace) = DenseState::from_mixture(&components, ORTHO_CUTOFF)?;
        if (trace - probability).abs() > TRACE_REL_TOL * probability {
            return Err(Error::Invariant(format!(
                "embedded trace {trace} disagrees with probability {probability}"
            )));
        }
        let (output, _) = state.normalized()?;
        Ok(ChannelResult { n, m, probability, output, components })
    }

    pub fn channel_perfect(&self, input: &InputState, n: usize, m: usize) -> Result<ChannelResult> {
        let meas = self.measurement_vector(MeasurementKind::DifferenceBasis, n, m)?;
        self.run_channel(input, &meas, &self.xi, false, n, m)
    }

    pub fn channel_half(&self, input: &InputState, n: usize, m: usize) -> Result<ChannelResult> {
        let meas = self.measurement_vector(MeasurementKind::DifferenceBasis, n, m)?;
        self.run_channel(input, &meas, &self.xi_tilde, true, n, m)
    }

    pub fn channel_full(&self, input: &InputState, n: usize, m: usize) -> Result<ChannelResult> {
        let meas = self.measurement_vector(MeasurementKind::CoherentBasis, n, m)?;
        self.run_channel(input, &meas, &self.xi_tilde, true, n, m)
    }

    /// General channel: the measurement family is generated from
    /// `meas_resource`, the shared pair is `bob_resource`, and the vacuum
    /// cutoff is always applied. Reproduces the three named channels when fed
    /// the corresponding resources (the cutoff acts trivially on the
    /// difference-pair resource).
    pub fn channel_omega(
        &self,
        input: &InputState,
        meas_resource: &TensorCombo,
        bob_resource: &TensorCombo,
        n: usize,
        m: usize,
    ) -> Result<ChannelResult> {
        let meas = self.omega_measurement(meas_resource, n, m)?;
        self.run_channel(input, &meas, bob_resource, true, n, m)
    }

    /// Target vector on the receiving leg for one input component:
    /// conjugate phases, shift by m, then transport to the second leg.
    pub fn keyed_vector(&self, psi: &CoherentCombo, n: usize, m: usize) -> Result<CoherentCombo> {
        self.check_outcome(n, m)?;
        let v = self.phase_adj_ops[n].apply(psi)?;
        let v = self.shift_ops[m].apply(&v)?;
        second_quantize(self.pair.t(), &v)
    }

    /// Density matrix the perfect channel must produce at outcome (n, m).
    pub fn keyed_density(
        &self,
        input: &InputState,
        n: usize,
        m: usize,
    ) -> Result<DenseState<CoherentCombo>> {
        let psis = self.input_vectors(input)?;
        let mut terms = Vec::with_capacity(psis.len());
        for (s, psi) in psis.iter().enumerate() {
            terms.push((input.weights()[s], self.keyed_vector(psi, n, m)?));
        }
        let (state, _) = DenseState::from_mixture(&terms, ORTHO_CUTOFF)?;
        let (state, _) = state.normalized()?;
        Ok(state)
    }

    /// Inverse of the keyed transform, applied by the receiver.
    pub fn recover(&self, w: &CoherentCombo, n: usize, m: usize) -> Result<CoherentCombo> {
        self.check_outcome(n, m)?;
        let size = self.size();
        let v = second_quantize(&self.pair.t().adjoint(), w)?;
        let v = self.shift_ops[(size - m) % size].apply(&v)?;
        self.phase_ops[n].apply(&v)
    }

    /// Applies the recovery key to every component of a channel result.
    pub fn recovered_density(&self, result: &ChannelResult) -> Result<DenseState<CoherentCombo>> {
        let mut terms = Vec::with_capacity(result.components.len());
        for (lam, w) in &result.components {
            terms.push((*lam, self.recover(w, result.n, result.m)?));
        }
        let (state, _) = DenseState::from_mixture(&terms, ORTHO_CUTOFF)?;
        let (state, _) = state.normalized()?;
        Ok(state)
    }

    /// Runs the full model as an explicit circuit on three factors:
    /// input, first resource leg, second resource leg (initially vacuum).
    ///
    /// Step 0 prepares `psi_s (x) eta_tilde (x) vacuum`; step 1 splits the
    /// resource superposition across the last two factors; step 2 applies the
    /// conjugate outcome label and the leg transport; step 3 recombines the
    /// first two factors; step 4 projects them onto vacuum and `eta_tilde` and
    /// cuts the vacuum off the third; step 5 normalizes and optionally applies
    /// the recovery key to the third factor.
    pub fn staged(
        &self,
        input: &InputState,
        n: usize,
        m: usize,
        apply_key: bool,
    ) -> Result<StagedOutcome> {
        self.check_outcome(n, m)?;
        let size = self.size();
        let psis = self.input_vectors(input)?;
        let weights = input.weights();
        let mut step_traces = [0.0; 6];

        let mut vs: Vec<TensorCombo> = Vec::with_capacity(size);
        for psi in &psis {
            vs.push(TensorCombo::product(&[psi, &self.eta_tilde, &self.vacuum])?);
        }
        let trace_of = |vs: &[TensorCombo]| -> f64 {
            vs.iter().zip(weights).map(|(v, w)| w * v.norm_sq()).sum()
        };
        step_traces[0] = trace_of(&vs);

        for v in &mut vs {
            *v = exchange_pair(v, 1, false)?;
        }
        step_traces[1] = trace_of(&vs);

        let inverse_shift = (size - m) % size;
        for v in &mut vs {
            let z = self.phase_adj_ops[n].apply_factor(v, 0)?;
            let z = self.shift_ops[inverse_shift].apply_factor(&z, 1)?;
            *v = second_quantize_factor(self.pair.t(), &z, 2)?;
        }
        step_traces[2] = trace_of(&vs);

        for v in &mut vs {
            *v = exchange_pair(v, 0, false)?;
        }
        step_traces[3] = trace_of(&vs);

        for v in &mut vs {
            let z = project_factor(v, 0, &self.vacuum)?;
            let z = project_factor(&z, 1, &self.eta_tilde)?;
            *v = vacuum_complement_factor(&z, 2)?.deduped();
        }
        let probability = trace_of(&vs);
        step_traces[4] = probability;
        if probability < MIN_PROBABILITY {
            return Err(Error::ZeroProbability { denominator: probability });
        }

        let joint_terms: Vec<(f64, TensorCombo)> =
            weights.iter().copied().zip(vs.iter().cloned()).collect();
        let (joint, joint_trace) = DenseState::from_mixture(&joint_terms, ORTHO_CUTOFF)?;
        if (joint_trace - probability).abs() > TRACE_REL_TOL * probability {
            return Err(Error::Invariant(format!(
                "staged trace {joint_trace} disagrees with probability {probability}"
            )));
        }
        let (joint, _) = joint.normalized()?;

        if apply_key {
            for v in &mut vs {
                let z = second_quantize_factor(&self.pair.t().adjoint(), v, 2)?;
                let z = self.shift_ops[inverse_shift].apply_factor(&z, 2)?;
                *v = self.phase_ops[n].apply_factor(&z, 2)?;
            }
        }
        step_traces[5] = trace_of(&vs) / probability;

        let pairs: Vec<(Complex64, TensorCombo, TensorCombo)> =
            weights.iter().zip(&vs).map(|(w, v)| (re(*w), v.clone(), v.clone())).collect();
        let (bob, bob_trace) = partial_trace_12(&pairs, ORTHO_CUTOFF)?;
        if (bob_trace.re - probability).abs() > TRACE_REL_TOL * probability
            || bob_trace.im.abs() > TRACE_REL_TOL * probability
        {
            return Err(Error::Invariant(format!(
                "reduced trace {bob_trace} disagrees with probability {probability}"
            )));
        }
        let mut bob = bob;
        bob.normalize()?;

        Ok(StagedOutcome { n, m, probability, step_traces, joint, bob, key_applied: apply_key })
    }

    /// Product state the staged run converges to for large d: vacuum and
    /// `eta_tilde` restored on the measured factors, keyed input on the third.
    pub fn staged_product_target(
        &self,
        input: &InputState,
        n: usize,
        m: usize,
    ) -> Result<DenseState<TensorCombo>> {
        let psis = self.input_vectors(input)?;
        let mut terms = Vec::with_capacity(psis.len());
        for (s, psi) in psis.iter().enumerate() {
            let tau = self.keyed_vector(psi, n, m)?;
            terms.push((
                input.weights()[s],
                TensorCombo::product(&[&self.vacuum, &self.eta_tilde, &tau])?,
            ));
        }
        let (state, _) = DenseState::from_mixture(&terms, ORTHO_CUTOFF)?;
        let (state, _) = state.normalized()?;
        Ok(state)
    }
}

/// Perfect scheme on a dense N-dimensional space: measurement amplitudes and
/// the keyed unitary are written out as plain matrices, so this route shares
/// no machinery with the exponential-vector channels.
pub fn general_perfect(
    size: usize,
    phases: &DMatrix<Complex64>,
    rho: &DMatrix<Complex64>,
    n: usize,
    m: usize,
) -> Result<GeneralSchemeOutcome> {
    if size < 2 {
        return Err(Error::InvalidConfig(format!("family size {size} below minimum 2")));
    }
    validate_phases(phases, size)?;
    if n >= size || m >= size {
        return Err(Error::IndexOutOfRange(format!("outcome ({n},{m}) for size {size}")));
    }
    if rho.nrows() != size || rho.ncols() != size {
        return Err(Error::DimensionMismatch { expected: size, found: rho.nrows() });
    }
    let herm_dev = (rho - rho.adjoint()).norm();
    if herm_dev > 1e-10 {
        return Err(Error::InvalidConfig(format!("density matrix not hermitian: {herm_dev:.3e}")));
    }
    let tr: Complex64 = (0..size).map(|i| rho[(i, i)]).sum();
    if (tr - re(1.0)).norm() > 1e-10 {
        return Err(Error::InvalidConfig(format!("density matrix trace {tr}")));
    }
    let herm = (rho + rho.adjoint()).scale(0.5);
    let eig = nalgebra::SymmetricEigen::new(herm);
    let mut spectral: Vec<(f64, DVector<Complex64>)> = Vec::with_capacity(size);
    for (i, lam) in eig.eigenvalues.iter().enumerate() {
        if *lam < -1e-12 {
            return Err(Error::InvalidConfig(format!("negative eigenvalue {lam}")));
        }
        spectral.push((lam.max(0.0), eig.eigenvectors.column(i).into_owned()));
    }

    let scale = 1.0 / size as f64;
    let mut probability = 0.0;
    let mut output = DMatrix::<Complex64>::zeros(size, size);
    for (lam, phi) in &spectral {
        let mut w = DVector::<Complex64>::zeros(size);
        for j in 0..size {
            w[(j + m) % size] = phases[(n, j)].conj() * phi[j] * re(scale);
        }
        probability += lam * w.norm_squared();
        output += (&w * w.adjoint()).scale(*lam);
    }
    if probability < MIN_PROBABILITY {
        return Err(Error::ZeroProbability { denominator: probability });
    }
    let output = output.unscale(probability);

    let mut key = DMatrix::<Complex64>::zeros(size, size);
    for j in 0..size {
        key[((j + m) % size, j)] = phases[(n, j)].conj();
    }
    let keyed = &key * rho * key.adjoint();
    let deviation = trace_distance_matrices(&output, &keyed);
    Ok(GeneralSchemeOutcome { probability, output, keyed, deviation })
}
