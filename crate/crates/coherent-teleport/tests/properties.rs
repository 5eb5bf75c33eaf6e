//! Property tests for the algebraic invariants the engine relies on.

use coherent_teleport::coherent::{exp_inner, CoherentCombo, TensorCombo};
use coherent_teleport::fock_ops::{beam_split, exchange, second_quantize};
use coherent_teleport::mode_space::{ModeOperator, SplittingKind, SplittingPair};
use coherent_teleport::model::{dft_phases, general_perfect, InputState, Model, ModelConfig};
use coherent_teleport::oracle::{exp_series_tail, oracle_exp, TruncatedFock};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn complex() -> impl Strategy<Value = Complex64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| Complex64::new(re, im))
}

fn mode_vector(dim: usize) -> impl Strategy<Value = DVector<Complex64>> {
    prop::collection::vec(complex(), dim).prop_map(DVector::from_vec)
}

fn combo(dim: usize, terms: usize) -> impl Strategy<Value = CoherentCombo> {
    prop::collection::vec((complex(), mode_vector(dim)), 1..=terms).prop_map(move |parts| {
        let mut combo = CoherentCombo::zero(dim);
        for (c, f) in parts {
            combo.push(c, f).unwrap();
        }
        combo
    })
}

fn unitary(dim: usize) -> impl Strategy<Value = DMatrix<Complex64>> {
    prop::collection::vec(complex(), dim * dim).prop_map(move |entries| {
        let g = DMatrix::from_vec(dim, dim, entries) + DMatrix::identity(dim, dim).scale(0.1);
        let qr = g.qr();
        let mut q = qr.q();
        let r = qr.r();
        for j in 0..dim {
            let diag = r[(j, j)];
            if diag.norm() > 0.0 {
                let phase = diag / diag.norm();
                for i in 0..dim {
                    q[(i, j)] *= phase;
                }
            }
        }
        q
    })
}

proptest! {
    #[test]
    fn exponential_inner_products_are_conjugate_symmetric(
        f in mode_vector(3),
        g in mode_vector(3),
    ) {
        let fg = exp_inner(&f, &g);
        let gf = exp_inner(&g, &f);
        prop_assert!((fg - gf.conj()).norm() <= 1e-10 * fg.norm().max(1.0));
    }

    #[test]
    fn normalized_coherent_overlaps_follow_the_distance_law(
        f in mode_vector(3),
        g in mode_vector(3),
    ) {
        let cf = CoherentCombo::coherent_ket(f.clone()).unwrap();
        let cg = CoherentCombo::coherent_ket(g.clone()).unwrap();
        let overlap = cf.inner(&cg).unwrap().norm();
        let expected = (-(&f - &g).norm_squared() / 2.0).exp();
        prop_assert!((overlap - expected).abs() <= 1e-12);
    }

    #[test]
    fn inner_products_are_linear_and_deduplication_preserves_them(
        u in combo(3, 3),
        v in combo(3, 3),
        w in combo(3, 3),
    ) {
        let direct = u.inner(&v.add(&w).unwrap()).unwrap();
        let split = u.inner(&v).unwrap() + u.inner(&w).unwrap();
        prop_assert!((direct - split).norm() <= 1e-10 * direct.norm().max(1.0));
        let doubled = v.add(&v).unwrap().deduped();
        let against = u.inner(&doubled).unwrap();
        let twice = u.inner(&v).unwrap() * 2.0;
        prop_assert!((against - twice).norm() <= 1e-10 * twice.norm().max(1.0));
    }

    #[test]
    fn second_quantization_is_multiplicative(
        a in unitary(3),
        b in unitary(3),
        f in combo(3, 2),
    ) {
        let ua = ModeOperator::unitary(a.clone()).unwrap();
        let ub = ModeOperator::unitary(b.clone()).unwrap();
        let uab = ModeOperator::unitary(&a * &b).unwrap();
        let stepwise = second_quantize(&ua, &second_quantize(&ub, &f).unwrap()).unwrap();
        let combined = second_quantize(&uab, &f).unwrap();
        prop_assert!(stepwise.sub(&combined).unwrap().norm_sq() <= 1e-10);
    }

    #[test]
    fn exchange_is_an_isometry(
        a in combo(2, 2),
        b in combo(2, 2),
        c in combo(2, 2),
        e in combo(2, 2),
    ) {
        let f = TensorCombo::product(&[&a, &b]).unwrap();
        let g = TensorCombo::product(&[&c, &e]).unwrap();
        let vf = exchange(&f).unwrap();
        let vg = exchange(&g).unwrap();
        let before = f.inner(&g).unwrap();
        let after = vf.inner(&vg).unwrap();
        prop_assert!((before - after).norm() <= 1e-9 * before.norm().max(1.0));
    }

    #[test]
    fn beam_splitting_preserves_norms(
        size in 2usize..4,
        kind in prop::sample::select(vec![SplittingKind::Half, SplittingKind::Orthogonal]),
        f in mode_vector(2),
    ) {
        let pair = SplittingPair::make(kind, size).unwrap();
        let mut exponent = DVector::zeros(pair.dim());
        for i in 0..2 {
            exponent[i] = f[i];
        }
        let ket = CoherentCombo::coherent_ket(exponent).unwrap();
        let split = beam_split(&pair, &ket).unwrap();
        prop_assert!((split.norm_sq() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn truncated_exponentials_account_for_their_tail(
        f in mode_vector(2).prop_filter("bounded energy", |f| f.norm_squared() <= 2.0),
    ) {
        let space = TruncatedFock::new(2, 8).unwrap();
        let vec = oracle_exp(&space, &f).unwrap();
        let total = vec.norm_sq() + vec.tail_sq;
        let exact = f.norm_squared().exp();
        prop_assert!((total - exact).abs() <= 1e-12 * exact);
        prop_assert!(exp_series_tail(f.norm_squared(), 9) <= exp_series_tail(f.norm_squared(), 8));
    }

    #[test]
    fn random_inputs_are_valid_mixtures(size in 2usize..5, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let input = InputState::random(size, &mut rng).unwrap();
        let total: f64 = input.weights().iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
        let gram = input.coeffs() * input.coeffs().adjoint();
        let defect = (&gram - DMatrix::identity(size, size)).norm();
        prop_assert!(defect <= 1e-10);
    }

    #[test]
    fn the_dense_scheme_keeps_exact_statistics(
        size in 2usize..5,
        seed in any::<u64>(),
        pick in any::<u16>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = DMatrix::from_fn(size, size, |_, _| {
            use rand::Rng;
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let mut rho = &g * g.adjoint();
        let trace = rho.trace().re;
        rho.unscale_mut(trace);
        let phases = dft_phases(size);
        let n = pick as usize % size;
        let m = (pick as usize / size) % size;
        let run = general_perfect(size, &phases, &rho, n, m).unwrap();
        prop_assert!((run.probability - 1.0 / (size as f64).powi(2)).abs() <= 1e-12);
        prop_assert!(run.deviation <= 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn models_build_with_unit_resources(
        size in 2usize..4,
        d in 0.1f64..6.0,
        kind in prop::sample::select(vec![SplittingKind::Half, SplittingKind::Orthogonal]),
    ) {
        // the constructor itself asserts the resource norms
        let model = Model::new(ModelConfig::new(size, d, kind)).unwrap();
        let x = model.overlap();
        let gamma = model.gamma();
        let relation = gamma * gamma * (1.0 + (size as f64 - 1.0) * x * x);
        prop_assert!((relation - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn cutoff_outputs_equal_exact_outputs_everywhere(
        d in 0.1f64..4.0,
        seed in any::<u64>(),
        pick in any::<u16>(),
    ) {
        let size = 2;
        let model = Model::new(ModelConfig::new(size, d, SplittingKind::Orthogonal)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let input = InputState::random(size, &mut rng).unwrap();
        let n = pick as usize % size;
        let m = (pick as usize / size) % size;
        let half = model.channel_half(&input, n, m).unwrap();
        let perfect = model.channel_perfect(&input, n, m).unwrap();
        prop_assert!(half.output.trace_distance(&perfect.output).unwrap() <= 1e-10);
        let ratio = half.probability / perfect.probability;
        let expected = gamma_loss(&model);
        prop_assert!((ratio - expected).abs() <= 1e-10);
    }
}

fn gamma_loss(model: &Model) -> f64 {
    let x = model.overlap();
    model.gamma().powi(2) * (1.0 - x).powi(2)
}
