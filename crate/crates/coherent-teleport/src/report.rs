//! Closed-form verification reports.
//!
//! Every `reference` value in this module is computed from an explicit
//! formula in the parameters (N, d, x, gamma, coefficient sums), never by
//! running the simulation a second way, so each report is a genuine
//! two-route check. Cases in `notes` record alternative variants of a
//! formula for comparison; they carry no pass verdict.

use crate::coherent::{CoherentCombo, TensorCombo};
use crate::error::{Error, Result};
use crate::fock_ops::{exchange, exchange_pair, project_factor, second_quantize_factor, vacuum_complement_factor};
use crate::mode_space::SplittingKind;
use crate::model::{InputState, Model, ModelConfig};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

#[derive(Clone, Debug)]
pub struct LemmaCase {
    pub label: String,
    pub measured: f64,
    /// Closed-form value (equality cases) or bound (bound cases).
    pub reference: f64,
    /// Distance to the reference: |measured - reference| for equalities,
    /// max(0, measured - reference) for bounds.
    pub deviation: f64,
    pub tol: f64,
    pub passed: bool,
}

impl LemmaCase {
    fn equality(label: impl Into<String>, measured: f64, reference: f64, tol: f64) -> Self {
        let deviation = (measured - reference).abs();
        LemmaCase { label: label.into(), measured, reference, deviation, tol, passed: deviation <= tol }
    }

    fn bound(label: impl Into<String>, measured: f64, reference: f64) -> Self {
        let deviation = (measured - reference).max(0.0);
        LemmaCase { label: label.into(), measured, reference, deviation, tol: 0.0, passed: deviation <= 0.0 }
    }

    fn note(label: impl Into<String>, measured: f64, reference: f64) -> Self {
        let deviation = (measured - reference).abs();
        LemmaCase { label: label.into(), measured, reference, deviation, tol: f64::INFINITY, passed: true }
    }
}

#[derive(Clone, Debug)]
pub struct LemmaReport {
    pub name: String,
    pub cases: Vec<LemmaCase>,
    /// Informational comparisons; not counted in `passed`.
    pub notes: Vec<LemmaCase>,
    pub passed: bool,
}

impl LemmaReport {
    fn finish(name: impl Into<String>, cases: Vec<LemmaCase>, notes: Vec<LemmaCase>) -> Self {
        let passed = cases.iter().all(|c| c.passed);
        LemmaReport { name: name.into(), cases, notes, passed }
    }

    pub fn worst_deviation(&self) -> f64 {
        self.cases.iter().map(|c| c.deviation).fold(0.0, f64::max)
    }
}

/// Squared-norm loss of the beam-splitting model, summed over all outcomes:
/// `gamma^2 (1-x)^2`.
pub fn half_probability_total(model: &Model) -> f64 {
    let x = model.overlap();
    model.gamma().powi(2) * (1.0 - x).powi(2)
}

/// Row sums of the input coefficients twisted by the conjugate phase row n.
fn twisted_sums(model: &Model, input: &InputState, n: usize) -> Vec<Complex64> {
    let size = model.size();
    (0..size)
        .map(|s| {
            (0..size)
                .map(|j| input.coeffs()[(s, j)] * model.phases()[(n, j)].conj())
                .sum()
        })
        .collect()
}

/// Outcome probability of the beam-splitting-measurement model in closed
/// form. Depends on the phase row n but not on the shift m.
pub fn full_probability_closed_form(model: &Model, input: &InputState, n: usize) -> f64 {
    let size = model.size() as f64;
    let x = model.overlap();
    let pref = (model.gamma().powi(2) / size).powi(2) * (1.0 - x).powi(2);
    let sums = twisted_sums(model, input, n);
    let mix: f64 = input
        .weights()
        .iter()
        .zip(&sums)
        .map(|(lam, s)| lam * s.norm_sqr())
        .sum();
    pref * ((1.0 - x).powi(2) + mix * (size * x * x + 2.0 * x * (1.0 - x)))
}

/// A variant of the closed form with untwisted row sums and a sqrt(N) factor
/// on the cross term. It agrees with the twisted form only when the phase
/// row is trivial or the coefficient rows are basis vectors; kept for
/// comparison.
pub fn full_probability_untwisted_form(model: &Model, input: &InputState) -> f64 {
    let size = model.size() as f64;
    let x = model.overlap();
    let pref = (model.gamma().powi(2) / size).powi(2) * (1.0 - x).powi(2);
    let mix: f64 = input
        .weights()
        .iter()
        .enumerate()
        .map(|(s, lam)| {
            let sum: Complex64 = (0..model.size()).map(|j| input.coeffs()[(s, j)]).sum();
            lam * sum.norm_sqr()
        })
        .sum();
    pref * ((1.0 - x).powi(2) + mix * (size * x * x + 2.0 * size.sqrt() * x * (1.0 - x)))
}

/// Envelope on |p - 1/N^2| for the full model.
pub fn bound_probability_envelope(size: usize, x: f64) -> f64 {
    let nf = size as f64;
    x * (14.0 / (nf * nf) + 2.0 + 2.0 / nf.sqrt())
}

/// Deviation bound between the normalized full-model output and the keyed
/// target, in the form the proof supports (squared denominator).
pub fn bound_state_deviation(size: usize, x: f64) -> f64 {
    let nf = size as f64;
    2.0 * x / (1.0 - x).powi(2) * (nf * nf + nf * nf.sqrt() + nf)
}

/// The same bound with a first-power denominator. Tighter, but not backed
/// by the derivation behind `bound_state_deviation`; reported, never
/// asserted.
pub fn bound_state_deviation_first_power(size: usize, x: f64) -> f64 {
    let nf = size as f64;
    2.0 * x / (1.0 - x) * (nf * nf + nf * nf.sqrt() + nf)
}

/// Overlap coefficients of the split difference-coherent pairs against the
/// vacuum and the resource superposition:
/// `<vac (x) eta_tilde, V(diff_j (x) coh_k)>` equals `sqrt(1-x) gamma/sqrt(N)`
/// on the diagonal and picks up a factor x off it.
pub fn check_lemma_alpha(model: &Model) -> Result<LemmaReport> {
    let size = model.size();
    let tol = model.config().tol;
    let base = (1.0 - model.overlap()).sqrt() * model.gamma() / (size as f64).sqrt();
    let probe = TensorCombo::product(&[model.vacuum(), model.eta_tilde()])?;
    let mut cases = Vec::with_capacity(size * size);
    for j in 0..size {
        for k in 0..size {
            let pair = TensorCombo::product(&[&model.differences_1()[j], &model.coherents_1()[k]])?;
            let split = exchange(&pair)?;
            let measured = probe.inner(&split)?;
            let reference = if j == k { base } else { model.overlap() * base };
            cases.push(LemmaCase::equality(
                format!("overlap ({j},{k})"),
                measured.re,
                reference,
                tol,
            ));
            // the coefficient is real in this gauge
            cases.push(LemmaCase::equality(
                format!("overlap ({j},{k}) imaginary part"),
                measured.im,
                0.0,
                tol,
            ));
        }
    }
    Ok(LemmaReport::finish("overlap coefficients", cases, Vec::new()))
}

/// Runs the measurement circuit on one input component without the phase
/// label and without the final vacuum cutoff, then compares against the
/// closed form: up to the prefactor `(gamma^2/N) sqrt(1-x)`, the third factor
/// carries `(1-x) sum_j c_sj coh_{j+m}` plus `x (sum_j c_sj) sum_k coh_k`.
pub fn check_lemma_beta(model: &Model, input: &InputState, m: usize) -> Result<LemmaReport> {
    let size = model.size();
    let tol = model.config().tol;
    let psis = model.input_vectors(input)?;
    let inverse_shift = (size - m) % size;
    let mut cases = Vec::with_capacity(size);
    for (s, psi) in psis.iter().enumerate() {
        let v = TensorCombo::product(&[psi, model.eta_tilde(), model.vacuum()])?;
        let v = exchange_pair(&v, 1, false)?;
        let v = model.shift_op(inverse_shift)?.apply_factor(&v, 1)?;
        let v = second_quantize_factor(model.pair().t(), &v, 2)?;
        let v = exchange_pair(&v, 0, false)?;
        let v = project_factor(&v, 0, model.vacuum())?;
        let measured = project_factor(&v, 1, model.eta_tilde())?.deduped();

        let x = model.overlap();
        let pref = model.gamma().powi(2) / size as f64 * (1.0 - x).sqrt();
        let row_sum: Complex64 = (0..size).map(|j| input.coeffs()[(s, j)]).sum();
        let mut third = CoherentCombo::zero(model.pair().dim());
        for j in 0..size {
            third = third.add(
                &model.coherents_2()[(j + m) % size].scaled(input.coeffs()[(s, j)] * re(1.0 - x)),
            )?;
        }
        for k in 0..size {
            third = third.add(&model.coherents_2()[k].scaled(row_sum * re(x)))?;
        }
        let closed =
            TensorCombo::product(&[model.vacuum(), model.eta_tilde(), &third.deduped()])?
                .scaled(re(pref));
        // squared gap: the norm of a cancelled term list bottoms out near
        // sqrt(eps), the square keeps the check at the stated tolerance
        let gap = measured.sub(&closed)?.norm_sq();
        cases.push(LemmaCase::equality(format!("component s={s}, m={m}, squared gap"), gap, 0.0, tol));
    }
    Ok(LemmaReport::finish(format!("projected components (m={m})"), cases, Vec::new()))
}

/// Full measurement circuit on one input component, including the phase label
/// and the vacuum cutoff, against the closed form
/// `(gamma^2/N)(1-x) vac (x) eta_tilde (x) q_s` with
/// `q_s = (1-x) tau_s + x sqrt(N) S'_sn tau_0`, where `tau` applies the keyed
/// transform and `S'_sn` is the phase-twisted row sum. The untwisted variant
/// (plain row sum, key applied to the uniform vector too) is recorded as a
/// note.
pub fn check_lemma_theta(
    model: &Model,
    input: &InputState,
    n: usize,
    m: usize,
) -> Result<LemmaReport> {
    let size = model.size();
    let tol = model.config().tol;
    let psis = model.input_vectors(input)?;
    let inverse_shift = (size - m) % size;
    let x = model.overlap();
    let pref = model.gamma().powi(2) / size as f64 * (1.0 - x);
    let twisted = twisted_sums(model, input, n);
    let uniform = model.uniform_vector()?;
    let tau_zero = {
        let v = model.shift_op(m)?.apply(&uniform)?;
        crate::fock_ops::second_quantize(model.pair().t(), &v)?
    };
    let mut cases = Vec::with_capacity(size);
    let mut notes = Vec::new();
    for (s, psi) in psis.iter().enumerate() {
        let v = TensorCombo::product(&[psi, model.eta_tilde(), model.vacuum()])?;
        let v = exchange_pair(&v, 1, false)?;
        let v = model.phase_adj_op(n)?.apply_factor(&v, 0)?;
        let v = model.shift_op(inverse_shift)?.apply_factor(&v, 1)?;
        let v = second_quantize_factor(model.pair().t(), &v, 2)?;
        let v = exchange_pair(&v, 0, false)?;
        let v = project_factor(&v, 0, model.vacuum())?;
        let v = project_factor(&v, 1, model.eta_tilde())?;
        let measured = vacuum_complement_factor(&v, 2)?.deduped();

        let tau_s = model.keyed_vector(psi, n, m)?;
        let q = tau_s
            .scaled(re(1.0 - x))
            .add(&tau_zero.scaled(twisted[s] * re(x * (size as f64).sqrt())))?;
        let closed = TensorCombo::product(&[model.vacuum(), model.eta_tilde(), &q.deduped()])?
            .scaled(re(pref));
        let gap = measured.sub(&closed)?.norm_sq();
        cases.push(LemmaCase::equality(format!("component s={s}, squared gap"), gap, 0.0, tol));

        // untwisted variant: plain row sum, phase conjugation inside both terms
        let plain_sum: Complex64 = (0..size).map(|j| input.coeffs()[(s, j)]).sum();
        let tau_zero_keyed = model.keyed_vector(&uniform, n, m)?;
        let q_untwisted = tau_s
            .scaled(re(1.0 - x))
            .add(&tau_zero_keyed.scaled(plain_sum * re(x * (size as f64).sqrt())))?;
        let closed_untwisted =
            TensorCombo::product(&[model.vacuum(), model.eta_tilde(), &q_untwisted.deduped()])?
                .scaled(re(pref));
        let gap_untwisted = measured.sub(&closed_untwisted)?.norm_sq();
        notes.push(LemmaCase::note(
            format!("component s={s}, untwisted variant, squared gap"),
            gap_untwisted,
            0.0,
        ));
    }
    Ok(LemmaReport::finish(format!("measurement components ({n},{m})"), cases, notes))
}

/// Probability identities of all three models: exact 1/N^2 per outcome,
/// the rescaled total of the vacuum-cutoff model, the closed form of the
/// beam-splitting model, and its envelope around 1/N^2.
pub fn check_probability_formulas(model: &Model, input: &InputState) -> Result<LemmaReport> {
    let size = model.size();
    let tol = model.config().tol;
    let x = model.overlap();
    let mut cases = Vec::new();
    let mut notes = Vec::new();

    let per_outcome = 1.0 / (size as f64).powi(2);
    let half_total_ref = half_probability_total(model);
    let mut half_total = 0.0;
    let mut full_total = 0.0;
    for n in 0..size {
        let full_ref = full_probability_closed_form(model, input, n);
        for m in 0..size {
            let perfect = model.channel_perfect(input, n, m)?.probability;
            cases.push(LemmaCase::equality(
                format!("exact model probability ({n},{m})"),
                perfect,
                per_outcome,
                tol,
            ));
            let half = model.channel_half(input, n, m)?.probability;
            cases.push(LemmaCase::equality(
                format!("cutoff model probability ({n},{m})"),
                half,
                half_total_ref * per_outcome,
                tol,
            ));
            half_total += half;
            let full = model.channel_full(input, n, m)?.probability;
            cases.push(LemmaCase::equality(
                format!("split model probability ({n},{m})"),
                full,
                full_ref,
                tol,
            ));
            cases.push(LemmaCase::bound(
                format!("split model envelope ({n},{m})"),
                (full - per_outcome).abs(),
                bound_probability_envelope(size, x),
            ));
            full_total += full;
            notes.push(LemmaCase::note(
                format!("split model probability ({n},{m}), untwisted form"),
                full,
                full_probability_untwisted_form(model, input),
            ));
        }
    }
    cases.push(LemmaCase::equality("cutoff model total", half_total, half_total_ref, tol));
    // the two lossy models lose exactly the same total weight
    cases.push(LemmaCase::equality("split model total", full_total, half_total_ref, tol));
    Ok(LemmaReport::finish("probability formulas", cases, notes))
}

fn random_hermitian_contraction(rng: &mut ChaCha8Rng, dim: usize) -> DMatrix<Complex64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    let h = (&g + g.adjoint()).scale(0.5);
    let top = h.clone().symmetric_eigen().eigenvalues.iter().fold(0.0f64, |a, &l| a.max(l.abs()));
    if top > 0.0 {
        h.unscale(top)
    } else {
        DMatrix::identity(dim, dim)
    }
}

/// Deviation of the normalized full-model output from the keyed target,
/// tested against the provable bound: as the supremum over observables (the
/// trace-norm distance), on seeded random Hermitian contractions, on the
/// basis projectors, and on the identity. The tighter first-power bound is
/// recorded in the notes.
pub fn check_theorem_bounds(
    model: &Model,
    input: &InputState,
    seed: u64,
    probes: usize,
) -> Result<LemmaReport> {
    let size = model.size();
    let x = model.overlap();
    let bound = bound_state_deviation(size, x);
    let bound_first_power = bound_state_deviation_first_power(size, x);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases = Vec::new();
    let mut notes = Vec::new();
    for n in 0..size {
        for m in 0..size {
            let full = model.channel_full(input, n, m)?;
            let keyed = model.keyed_density(input, n, m)?;
            let (ma, mb) = full.output.joint_with(&keyed)?;
            let delta = &ma - &mb;
            let herm = (&delta + delta.adjoint()).scale(0.5);
            let sup: f64 = herm.clone().symmetric_eigen().eigenvalues.iter().map(|l| l.abs()).sum();
            cases.push(LemmaCase::bound(
                format!("sup over contractions ({n},{m})"),
                sup,
                bound,
            ));
            notes.push(LemmaCase::note(
                format!("sup over contractions ({n},{m}), first-power bound"),
                sup,
                bound_first_power,
            ));
            let dim = herm.nrows();
            for p in 0..probes {
                let a = random_hermitian_contraction(&mut rng, dim);
                let measured = (&herm * &a).trace().norm();
                cases.push(LemmaCase::bound(
                    format!("random contraction {p} at ({n},{m})"),
                    measured,
                    bound,
                ));
            }
            for k in 0..dim {
                let measured = herm[(k, k)].norm();
                cases.push(LemmaCase::bound(
                    format!("basis projector {k} at ({n},{m})"),
                    measured,
                    bound,
                ));
            }
            let measured = herm.trace().norm();
            cases.push(LemmaCase::bound(format!("identity at ({n},{m})"), measured, bound));
        }
    }
    Ok(LemmaReport::finish("deviation bounds", cases, notes))
}

/// Trace-norm deviation of the full model from the keyed target, maximized
/// over outcomes.
pub fn state_deviation(model: &Model, input: &InputState, n: usize, m: usize) -> Result<f64> {
    let full = model.channel_full(input, n, m)?;
    let keyed = model.keyed_density(input, n, m)?;
    Ok(2.0 * full.output.trace_distance(&keyed)?)
}

#[derive(Clone, Debug)]
pub struct SlopePoint {
    pub d: f64,
    pub deviation: f64,
}

#[derive(Clone, Debug)]
pub struct SlopeReport {
    pub points: Vec<SlopePoint>,
    /// Least-squares slope of ln(deviation) against d.
    pub slope: f64,
    pub expected: f64,
    pub rel_err: f64,
    pub passed: bool,
}

/// Checks that the worst-case deviation decays like exp(-d/2): the log-slope
/// against d must sit within `rel_tol` of -1/2.
pub fn deviation_slope(
    size: usize,
    splitting: SplittingKind,
    input: &InputState,
    ds: &[f64],
    rel_tol: f64,
) -> Result<SlopeReport> {
    if ds.len() < 2 {
        return Err(Error::InvalidConfig("slope needs at least two points".into()));
    }
    let mut points = Vec::with_capacity(ds.len());
    for &d in ds {
        let model = Model::new(ModelConfig::new(size, d, splitting))?;
        let mut worst = 0.0f64;
        for n in 0..size {
            for m in 0..size {
                worst = worst.max(state_deviation(&model, input, n, m)?);
            }
        }
        if worst <= 0.0 {
            return Err(Error::Invariant(format!("zero deviation at d = {d}")));
        }
        points.push(SlopePoint { d, deviation: worst });
    }
    let n = points.len() as f64;
    let mean_d: f64 = points.iter().map(|p| p.d).sum::<f64>() / n;
    let mean_l: f64 = points.iter().map(|p| p.deviation.ln()).sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for p in &points {
        num += (p.d - mean_d) * (p.deviation.ln() - mean_l);
        den += (p.d - mean_d).powi(2);
    }
    let slope = num / den;
    let expected = -0.5;
    let rel_err = (slope - expected).abs() / expected.abs();
    Ok(SlopeReport { points, slope, expected, rel_err, passed: rel_err <= rel_tol })
}

/// The exact-model output reproduced a second way: sandwiching with the
/// measurement family member and resource directly, term by term, without
/// the channel machinery. Returns the worst gap over outcomes.
pub fn exact_output_double_check(model: &Model, input: &InputState) -> Result<f64> {
    let size = model.size();
    let psis = model.input_vectors(input)?;
    let mut worst = 0.0f64;
    for n in 0..size {
        for m in 0..size {
            let res = model.channel_perfect(input, n, m)?;
            // direct route: w_s[k] = (1/N) sum_j conj(b_nj) c_sj delta_{k, j+m}
            let mut terms = Vec::with_capacity(size);
            for s in 0..size {
                let mut w = CoherentCombo::zero(model.pair().dim());
                for j in 0..size {
                    let amp = model.phases()[(n, j)].conj() * input.coeffs()[(s, j)]
                        / re(size as f64);
                    w = w.add(&model.differences_2()[(j + m) % size].scaled(amp))?;
                }
                terms.push((input.weights()[s], w.deduped()));
            }
            let mut direct_p = 0.0;
            for (lam, w) in &terms {
                direct_p += lam * w.norm_sq();
            }
            worst = worst.max((direct_p - res.probability).abs());
            let (direct, _) = crate::ortho::DenseState::from_mixture(&terms, crate::ortho::ORTHO_CUTOFF)?;
            let (direct, _) = direct.normalized()?;
            worst = worst.max(res.output.trace_distance(&direct)?);
            let _ = psis.len();
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(size: usize, d: f64) -> Model {
        Model::new(ModelConfig::new(size, d, SplittingKind::Orthogonal)).unwrap()
    }

    fn random_input(size: usize, seed: u64) -> InputState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        InputState::random(size, &mut rng).unwrap()
    }

    #[test]
    fn overlap_coefficients_hold_on_both_splittings() {
        for kind in [SplittingKind::Orthogonal, SplittingKind::Half] {
            let md = Model::new(ModelConfig::new(3, 0.7, kind)).unwrap();
            let report = check_lemma_alpha(&md).unwrap();
            assert!(report.passed, "worst {:.3e}", report.worst_deviation());
        }
    }

    #[test]
    fn projected_components_match_their_closed_form() {
        let md = model(3, 1.1);
        let input = random_input(3, 7);
        for m in 0..3 {
            let report = check_lemma_beta(&md, &input, m).unwrap();
            assert!(report.passed, "m={m} worst {:.3e}", report.worst_deviation());
        }
    }

    #[test]
    fn measurement_components_match_the_twisted_closed_form() {
        let md = model(2, 0.9);
        let input = random_input(2, 13);
        for n in 0..2 {
            for m in 0..2 {
                let report = check_lemma_theta(&md, &input, n, m).unwrap();
                assert!(report.passed, "({n},{m}) worst {:.3e}", report.worst_deviation());
            }
        }
    }

    #[test]
    fn phase_twist_is_visible_where_the_untwisted_form_misses_it() {
        // an input whose row sums change under the phase twist
        let md = model(2, 0.8);
        let input = random_input(2, 19);
        // n = 1 has a nontrivial phase row
        let report = check_lemma_theta(&md, &input, 1, 0).unwrap();
        assert!(report.passed);
        let untwisted_gap = report.notes.iter().map(|c| c.deviation).fold(0.0f64, f64::max);
        assert!(
            untwisted_gap > 1e-6,
            "untwisted variant unexpectedly agrees: gap {untwisted_gap:.3e}"
        );
    }

    #[test]
    fn probability_formulas_hold_for_a_random_input() {
        let md = model(3, 1.4);
        let input = random_input(3, 23);
        let report = check_probability_formulas(&md, &input).unwrap();
        assert!(report.passed, "worst {:.3e}", report.worst_deviation());
    }

    #[test]
    fn deviation_bounds_hold_with_random_probes() {
        let md = model(2, 4.0);
        let input = random_input(2, 29);
        let report = check_theorem_bounds(&md, &input, 31, 5).unwrap();
        assert!(report.passed, "worst {:.3e}", report.worst_deviation());
    }

    #[test]
    fn deviation_decays_at_the_expected_rate() {
        let input = InputState::identity(2).unwrap();
        let report =
            deviation_slope(2, SplittingKind::Orthogonal, &input, &[8.0, 16.0, 32.0], 0.25)
                .unwrap();
        assert!(report.passed, "slope {:.4}", report.slope);
    }

    #[test]
    fn exact_output_agrees_with_the_direct_formula() {
        let md = model(3, 0.8);
        let input = random_input(3, 37);
        let worst = exact_output_double_check(&md, &input).unwrap();
        assert!(worst < 1e-10, "worst {worst:.3e}");
    }
}
