use nalgebra::DMatrix;
use proptest::prelude::*;
use trace_ratio::eval::{stratified_split, SplitSpec};
use trace_ratio::linalg::{
    polar_orthogonal_factor, sin_theta_distance, sym_eig_topk, trace_norm, StiefelPoint, SymmetricMatrix,
};
use trace_ratio::multiview::{
    alternate_solve, assemble_subproblem, build_block_problem, AlternateOptions, ModelFamily, MultiViewModelSpec,
    SweepState, UpdateMode,
};
use trace_ratio::problem::TraceRatioProblem;
use trace_ratio::scf::{scf_solve, SolverOptions};
use trace_ratio::synth::{
    generate, generate_multiview_gaussian, standard_normal, stream_rng, MultiViewSynthSpec, SynthSpec,
};

fn gaussian(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    standard_normal(rows, cols, &mut stream_rng(seed, 7))
}

fn random_point(n: usize, k: usize, seed: u64) -> StiefelPoint<f64> {
    StiefelPoint::random(n, k, &mut stream_rng(seed, 8)).unwrap()
}

fn dims() -> impl Strategy<Value = (usize, usize)> {
    (3usize..12).prop_flat_map(|n| (Just(n), 1..n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn topk_is_an_invariant_subspace((n, k) in dims(), seed in any::<u64>()) {
        let g = gaussian(n, n, seed);
        let m = SymmetricMatrix::symmetrized(&g + g.transpose()).unwrap();
        let s = sym_eig_topk(&m, k).unwrap();
        let x = s.basis.as_matrix();
        let lambda = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(s.eigenvalues.clone()));
        prop_assert!((m.as_matrix() * x - x * lambda).norm() <= 1e-10 * m.as_matrix().norm().max(1.0));
        prop_assert!(s.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(s.gap >= 0.0);
        prop_assert!(s.basis.orthonormality_defect() <= 1e-12);
    }

    #[test]
    fn polar_factor_maximizes_trace(k in 1usize..6, seed in any::<u64>()) {
        let s = gaussian(k, k, seed);
        let p = polar_orthogonal_factor(&s, 1e-10).unwrap();
        prop_assert!((p.q.tr_mul(&p.q) - DMatrix::identity(k, k)).norm() <= 1e-12);
        let qs = p.q.tr_mul(&s);
        prop_assert!((&qs - qs.transpose()).norm() <= 1e-12 * s.norm().max(1.0));
        prop_assert!((qs.trace() - trace_norm(&s)).abs() <= 1e-12 * s.norm().max(1.0));
        let w = StiefelPoint::random(k + 1, k, &mut stream_rng(seed, 9)).unwrap();
        // the top k×k block of a random (k+1)×k orthonormal matrix is a contraction
        let c = w.as_matrix().rows(0, k).into_owned();
        prop_assert!(c.tr_mul(&s).trace() <= qs.trace() + 1e-12);
    }

    #[test]
    fn sin_theta_is_a_metric((n, k) in dims(), seed in any::<u64>()) {
        let x = random_point(n, k, seed);
        let y = random_point(n, k, seed.wrapping_add(1));
        let z = random_point(n, k, seed.wrapping_add(2));
        let dxy = sin_theta_distance(&x, &y).unwrap();
        prop_assert!((0.0..=1.0).contains(&dxy));
        prop_assert!((dxy - sin_theta_distance(&y, &x).unwrap()).abs() <= 1e-12);
        let dxz = sin_theta_distance(&x, &z).unwrap();
        let dzy = sin_theta_distance(&z, &y).unwrap();
        prop_assert!(dxy <= dxz + dzy + 1e-12);
        let q = polar_orthogonal_factor(&gaussian(k, k, seed ^ 5), 1e-10).unwrap().q;
        prop_assert!(sin_theta_distance(&x, &x.rotated(&q).unwrap()).unwrap() <= 1e-7);
    }

    #[test]
    fn objective_without_d_is_rotation_invariant((n, k) in dims(), seed in 0u64..1000, theta in 0.0f64..=1.0) {
        let p = generate::<f64>(&SynthSpec::new(n, k, seed).with_theta(theta)).unwrap();
        let p = TraceRatioProblem::new(p.a().clone(), p.b().clone(), DMatrix::zeros(n, k), theta, k).unwrap();
        let x = random_point(n, k, seed);
        let q = polar_orthogonal_factor(&gaussian(k, k, seed), 1e-10).unwrap().q;
        let f = p.evaluate(&x).unwrap().f_theta;
        let fq = p.evaluate(&x.rotated(&q).unwrap()).unwrap().f_theta;
        prop_assert!((f - fq).abs() <= 1e-12 * f.abs().max(1.0));
        let e = p.build_e(&x).unwrap();
        prop_assert_eq!(e.as_matrix(), &e.as_matrix().transpose());
    }

    #[test]
    fn monotone_bound_holds(n in 3usize..10, seed in 0u64..10_000, theta in 0.0f64..=1.0) {
        let k = 1 + (seed as usize) % (n - 1);
        let p = generate::<f64>(&SynthSpec::new(n, k, seed).with_theta(theta)).unwrap();
        let x = random_point(n, k, seed);
        let e = p.build_e(&x).unwrap();
        let q = polar_orthogonal_factor(&gaussian(k, k, seed), 1e-10).unwrap().q;
        let xt = sym_eig_topk(&e, k).unwrap().basis.rotated(&q).unwrap();
        let m = p.lemma_mono_quantities(&x, &xt).unwrap();
        prop_assert!(m.hypothesis_margin >= -1e-12);
        prop_assert!(m.lhs <= m.rhs + 1e-10 * m.rhs.abs().max(1.0), "{:?}", m);
    }

    #[test]
    fn scf_iterates_are_monotone_with_psd_cross_term(n in 4usize..14, seed in 0u64..10_000, theta in 0.0f64..=1.0) {
        let k = 1 + (seed as usize) % (n - 1).min(4);
        let p = generate::<f64>(&SynthSpec::new(n, k, seed).with_theta(theta)).unwrap();
        let x0 = StiefelPoint::leading_identity(n, k).unwrap();
        let rep = scf_solve(&p, &x0, &SolverOptions { max_iter: 300, ..SolverOptions::default() }).unwrap();
        let mut prev = rep.initial_objective;
        for r in &rep.trajectory {
            prop_assert!(r.f_theta >= prev - 1e-12 * prev.abs().max(1.0));
            prev = r.f_theta;
        }
        let d_norm = p.d().norm();
        for steps in 1..=3 {
            let part = scf_solve(&p, &x0, &SolverOptions { max_iter: steps, ..SolverOptions::default() }).unwrap();
            let xtd = part.x.as_matrix().tr_mul(p.d());
            prop_assert!((&xtd - xtd.transpose()).norm() <= 1e-10 * d_norm);
            let ev = SymmetricMatrix::symmetrized(xtd.clone()).unwrap().eigenvalues().unwrap();
            prop_assert!(*ev.last().unwrap() >= -1e-10 * d_norm);
            prop_assert!((xtd.trace() - trace_norm(&xtd)).abs() <= 1e-10 * d_norm.max(1.0));
        }
    }

    #[test]
    fn split_partitions_samples(m in 4usize..80, c in 1usize..4, fraction in 0.05f64..0.95, seed in any::<u64>(), r in 0usize..5) {
        prop_assume!(m >= 2 * c);
        let labels: Vec<usize> = (0..m).map(|i| i % c).collect();
        let spec = SplitSpec { train_fraction: fraction, n_repeats: 5, seed };
        let (train, test) = stratified_split(&labels, &spec, r).unwrap();
        prop_assert_eq!(train.len() + test.len(), m);
        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..m).collect::<Vec<_>>());
        for class in 0..c {
            prop_assert!(train.iter().any(|&i| labels[i] == class));
            prop_assert!(test.iter().any(|&i| labels[i] == class));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn subproblem_matches_global_objective(seed in 0u64..1000, theta in 0.0f64..=1.0, fam in 0usize..4, k in 1usize..4) {
        let spec = MultiViewSynthSpec { dims: vec![4, 5, 6], m: 30, ..MultiViewSynthSpec::standard(seed) };
        let ds = generate_multiview_gaussian(&spec).unwrap();
        let family = ModelFamily::ALL[fam];
        let bp = build_block_problem(&ds, &MultiViewModelSpec::new(family, k, theta).with_alpha(0.5)).unwrap();
        let prev: Vec<_> = bp.dims().iter().enumerate().map(|(s, &n)| random_point(n, k, seed + s as u64)).collect();
        let mut state = SweepState::start(prev);
        state.current[0] = random_point(bp.dims()[0], k, seed + 100);
        state.current[1] = random_point(bp.dims()[1], k, seed + 101);
        for mode in [UpdateMode::Jacobi, UpdateMode::GaussSeidel] {
            for s in 0..3 {
                let ctx: Vec<StiefelPoint<f64>> = state.context(s, mode).into_iter().cloned().collect();
                let global = bp.objective(&ctx).unwrap().f_theta;
                let local = assemble_subproblem(&bp, &state, s, mode).unwrap().evaluate(&ctx[s]).unwrap().f_theta;
                prop_assert!((global - local).abs() <= 1e-12 * global.abs().max(1.0));
            }
        }
        let stacked = bp.stack(&state.previous).unwrap();
        let dense = (bp.dense_a() * &stacked).dot(&stacked);
        let obj = bp.objective(&state.previous).unwrap();
        prop_assert!((dense - obj.numerator).abs() <= 1e-12 * dense.abs().max(1.0));
    }

    #[test]
    fn gauss_seidel_is_monotone(seed in 0u64..1000, theta in 0.0f64..=1.0, fam in 0usize..4) {
        let spec = MultiViewSynthSpec { dims: vec![4, 5, 6], m: 30, ..MultiViewSynthSpec::standard(seed) };
        let ds = generate_multiview_gaussian(&spec).unwrap();
        let bp = build_block_problem(&ds, &MultiViewModelSpec::new(ModelFamily::ALL[fam], 2, theta)).unwrap();
        let init = trace_ratio::multiview::default_init(bp.dims(), 2).unwrap();
        // the guarantee needs a nonnegative numerator at the start when 0 < θ < 1
        prop_assume!(theta == 0.0 || theta == 1.0 || bp.objective(&init).unwrap().numerator >= 0.0);
        let rep = alternate_solve(&bp, init, &AlternateOptions::default()).unwrap();
        let mut prev = rep.initial_objective;
        for s in &rep.sweeps {
            prop_assert!(s.objective >= prev - 1e-10 * prev.abs().max(1.0));
            prev = s.objective;
        }
    }
}
