//! Agreement checks between the analytic engine and the truncated
//! occupation-number oracle.
//!
//! States on k tensor factors of an M-mode space are materialized in a single
//! truncated basis of k*M modes (the amplitude of `exp(f) (x) exp(g)` at a
//! concatenated tuple factorizes, so no separate tensor machinery is needed).
//! The measurement contraction then becomes an index split: the first 2M
//! coordinates pair with the measurement vector, the last M form the output.

use crate::coherent::{CoherentCombo, TensorCombo};
use crate::error::{Error, Result};
use crate::model::{InputState, MeasurementKind, Model, ResourceKind};
use crate::oracle::{basis_dim, oracle_exp, oracle_second_quantize, OracleVector, TruncatedFock, MAX_ORACLE_DIM};
use nalgebra::DVector;
use num_complex::Complex64;

/// One engine-versus-oracle comparison.
#[derive(Clone, Debug)]
pub struct CrossCheck {
    pub label: String,
    /// Engine-side value (modulus, for complex quantities).
    pub engine: f64,
    /// Oracle-side value.
    pub oracle: f64,
    pub deviation: f64,
    /// Tolerance the deviation is held to: the truncation-loss bound, floored
    /// at 1e-6.
    pub bound: f64,
    pub passed: bool,
}

#[derive(Clone, Debug)]
pub struct OracleCheckReport {
    pub rows: Vec<CrossCheck>,
    /// Photon-number cutoff used by the largest (three-factor) basis.
    pub max_total: usize,
    pub passed: bool,
}

const FLOOR: f64 = 1e-6;

fn row(label: impl Into<String>, engine: f64, oracle: f64, deviation: f64, raw_bound: f64) -> CrossCheck {
    let bound = raw_bound.max(FLOOR);
    CrossCheck { label: label.into(), engine, oracle, deviation, bound, passed: deviation <= bound }
}

/// Largest cutoff whose basis still fits under the oracle cap. Twelve levels
/// of headroom push the tail below 1e-12, so higher cutoffs are not worth the
/// enumeration cost.
fn pick_cutoff(modes: usize, min_needed: usize) -> Result<usize> {
    let mut best = None;
    for n in min_needed..=(min_needed + 12) {
        if basis_dim(modes, n) <= MAX_ORACLE_DIM {
            best = Some(n);
        } else {
            break;
        }
    }
    best.ok_or_else(|| {
        Error::ResourceLimit(format!(
            "no cutoff >= {min_needed} keeps a {modes}-mode basis under {MAX_ORACLE_DIM} states"
        ))
    })
}

fn concat(parts: &[&DVector<Complex64>]) -> DVector<Complex64> {
    let len = parts.iter().map(|p| p.len()).sum();
    let mut out = DVector::zeros(len);
    let mut at = 0;
    for p in parts {
        out.rows_mut(at, p.len()).copy_from(*p);
        at += p.len();
    }
    out
}

fn oracle_combo(space: &TruncatedFock, x: &CoherentCombo) -> Result<OracleVector> {
    let mut out = OracleVector::zero(space);
    for (c, f) in x.terms() {
        out.add_scaled(*c, &oracle_exp(space, f)?);
    }
    Ok(out)
}

fn oracle_tensor(space: &TruncatedFock, z: &TensorCombo) -> Result<OracleVector> {
    let mut out = OracleVector::zero(space);
    for (c, fs) in z.terms() {
        let refs: Vec<&DVector<Complex64>> = fs.iter().collect();
        out.add_scaled(*c, &oracle_exp(space, &concat(&refs))?);
    }
    Ok(out)
}

fn oracle_joint(
    space: &TruncatedFock,
    psi: &CoherentCombo,
    resource: &TensorCombo,
) -> Result<OracleVector> {
    let mut out = OracleVector::zero(space);
    for (c1, f) in psi.terms() {
        for (c2, fs) in resource.terms() {
            let g = concat(&[f, &fs[0], &fs[1]]);
            out.add_scaled(c1 * c2, &oracle_exp(space, &g)?);
        }
    }
    Ok(out)
}

/// For each three-factor index, the matching (measurement, output) index pair.
fn split_table(
    triple: &TruncatedFock,
    double: &TruncatedFock,
    single: &TruncatedFock,
) -> Vec<(usize, usize)> {
    let back_modes = single.modes();
    (0..triple.dim())
        .map(|idx| {
            let tuple = triple.tuple(idx);
            let (front, back) = tuple.split_at(tuple.len() - back_modes);
            // sub-tuples never exceed the shared cutoff
            (double.index_of(front).expect("front in basis"), single.index_of(back).expect("back in basis"))
        })
        .collect()
}

/// Contract the measurement against the first two factors. Returns the output
/// vector and a bound on the norm of its truncation error.
fn contract(
    split: &[(usize, usize)],
    single: &TruncatedFock,
    meas: &OracleVector,
    joint: &OracleVector,
) -> (OracleVector, f64) {
    let mut out = OracleVector::zero(single);
    for (idx, &(mi, oi)) in split.iter().enumerate() {
        let amp = joint.amplitudes[idx];
        if amp.norm_sqr() == 0.0 {
            continue;
        }
        out.amplitudes[oi] += meas.amplitudes[mi].conj() * amp;
    }
    let joint_norm = joint.norm_sq().sqrt();
    let joint_tail = joint.tail_sq.sqrt();
    let meas_norm = meas.norm_sq().sqrt();
    let meas_tail = meas.tail_sq.sqrt();
    let err = meas_tail * (joint_norm + joint_tail) + meas_norm * joint_tail;
    (out, err)
}

/// Recompute inner products and the exact-measurement channel probabilities in
/// the truncated basis and compare them with the analytic engine.
pub fn oracle_report(model: &Model, input: &InputState) -> Result<OracleCheckReport> {
    let m_modes = model.pair().dim();
    let size = model.size();
    let needed = (6.0 * model.d()).ceil() as usize + 1;
    let max_total = pick_cutoff(3 * m_modes, needed)?;
    let single = TruncatedFock::new(m_modes, max_total)?;
    let double = TruncatedFock::new(2 * m_modes, max_total)?;
    let triple = TruncatedFock::new(3 * m_modes, max_total)?;

    let mut rows = Vec::new();

    // norms of the coherent superpositions
    for (name, state) in [("eta", model.eta()), ("eta_tilde", model.eta_tilde())] {
        let v = oracle_combo(&single, state)?;
        let engine = state.norm_sq();
        let oracle = v.norm_sq();
        rows.push(row(
            format!("norm^2 {name}"),
            engine,
            oracle,
            (engine - oracle).abs(),
            v.tail_sq,
        ));
    }

    // pairwise overlaps within the family
    let pairs: [(&str, &CoherentCombo, &CoherentCombo); 3] = [
        ("coherent[0].coherent[1]", &model.coherents_1()[0], &model.coherents_1()[1]),
        ("difference[0].difference[1]", &model.differences_1()[0], &model.differences_1()[1]),
        ("difference[0].difference[0]", &model.differences_1()[0], &model.differences_1()[0]),
    ];
    for (name, u, v) in pairs {
        let uo = oracle_combo(&single, u)?;
        let vo = oracle_combo(&single, v)?;
        let engine = u.inner(v)?;
        let oracle = uo.inner(&vo);
        rows.push(row(
            format!("overlap {name}"),
            engine.norm(),
            oracle.norm(),
            (engine - oracle).norm(),
            (uo.tail_sq * vo.tail_sq).sqrt(),
        ));
    }

    // resource norms
    for (name, kind) in
        [("sigma", ResourceKind::DifferencePairs), ("sigma_tilde", ResourceKind::CoherentPairs)]
    {
        let state = model.resource(kind);
        let v = oracle_tensor(&double, state)?;
        let engine = state.norm_sq();
        let oracle = v.norm_sq();
        rows.push(row(
            format!("norm^2 resource {name}"),
            engine,
            oracle,
            (engine - oracle).abs(),
            v.tail_sq,
        ));
    }

    // orthonormality of two measurement vectors
    let ma = model.measurement_vector(MeasurementKind::DifferenceBasis, 0, 0)?;
    let mb = model.measurement_vector(MeasurementKind::DifferenceBasis, (size - 1).min(1), 1 % size)?;
    let mao = oracle_tensor(&double, &ma)?;
    let mbo = oracle_tensor(&double, &mb)?;
    let engine = ma.inner(&mb)?;
    let oracle = mao.inner(&mbo);
    rows.push(row(
        "overlap measurement(0,0).measurement(1,1)",
        engine.norm(),
        oracle.norm(),
        (engine - oracle).norm(),
        (mao.tail_sq * mbo.tail_sq).sqrt(),
    ));

    // leg transport of eta, both routes materialized; the transport preserves
    // total photon number, so a low cutoff suffices for route agreement
    let small = TruncatedFock::new(m_modes, max_total.min((4.0 * model.d()).ceil() as usize + 2))?;
    let transported = crate::fock_ops::second_quantize(model.pair().t(), model.eta())?;
    let engine_vec = oracle_combo(&small, &transported)?;
    let input_vec = oracle_combo(&small, model.eta())?;
    let oracle_vec = oracle_second_quantize(&small, model.pair().t().matrix(), &input_vec)?;
    let dev = (&engine_vec.amplitudes - &oracle_vec.amplitudes).norm();
    rows.push(row(
        "transport eta",
        engine_vec.norm_sq(),
        oracle_vec.norm_sq(),
        dev,
        engine_vec.tail_sq.sqrt() + oracle_vec.tail_sq.sqrt(),
    ));

    // channel probabilities against the brute-force contraction
    let split = split_table(&triple, &double, &single);
    let psis = model.input_vectors(input)?;
    for (channel, kind, strip) in [
        ("perfect", ResourceKind::DifferencePairs, false),
        ("half", ResourceKind::CoherentPairs, true),
    ] {
        let resource = model.resource(kind);
        let joints = psis
            .iter()
            .map(|psi| oracle_joint(&triple, psi, resource))
            .collect::<Result<Vec<_>>>()?;
        for n in 0..size {
            for m in 0..size {
                let meas = model.measurement_vector(MeasurementKind::DifferenceBasis, n, m)?;
                let meas_o = oracle_tensor(&double, &meas)?;
                let mut p = 0.0;
                let mut bound = 0.0;
                for (s, joint) in joints.iter().enumerate() {
                    let (mut w, err) = contract(&split, &single, &meas_o, joint);
                    if strip {
                        w.project_out_vacuum(&single);
                    }
                    let lam = input.weights()[s];
                    p += lam * w.norm_sq();
                    bound += lam * (2.0 * w.norm_sq().sqrt() * err + err * err);
                }
                let engine = match strip {
                    false => model.channel_perfect(input, n, m)?.probability,
                    true => model.channel_half(input, n, m)?.probability,
                };
                rows.push(row(
                    format!("probability {channel} ({n},{m})"),
                    engine,
                    p,
                    (engine - p).abs(),
                    bound,
                ));
            }
        }
    }

    let passed = rows.iter().all(|r| r.passed);
    Ok(OracleCheckReport { rows, max_total, passed })
}
