mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use saddle_ssn::jacobian::{newton_solve, projection_jacobian, residual_jacobian};
use saddle_ssn::splitting::{apply_T_DRS, lift, residual, restrict, DrsContext};
use saddle_ssn::{duality_gap, project_simplex, LiftedPoint, MatrixGame, StrategyProfile};

fn game_strategy(max: usize) -> impl Strategy<Value = MatrixGame> {
    (1..=max, 1..=max).prop_flat_map(|(n, m)| {
        prop::collection::vec(-1.0f64..1.0, n * m)
            .prop_map(move |v| MatrixGame::new(DMatrix::from_vec(n, m, v)).unwrap())
    })
}

fn gamma_strategy() -> impl Strategy<Value = f64> {
    prop::sample::select(vec![0.5, 1.0, 2.0])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gap_matches_enumeration(game in game_strategy(12), seed in any::<u64>()) {
        let mut r = rng(seed);
        let x = random_simplex_point(&mut r, game.rows());
        let y = random_simplex_point(&mut r, game.cols());
        let expected = brute_gap(game.payoff(), &x, &y);
        let gap = duality_gap(&game, &StrategyProfile::new(x, y).unwrap()).unwrap().gap;
        prop_assert!(gap >= -1e-12);
        prop_assert!((gap - expected).abs() <= 1e-12, "{gap} vs {expected}");
    }

    #[test]
    fn simplex_projection_matches_bisection_and_kkt(p in prop::collection::vec(-5.0f64..5.0, 1..30), seed in any::<u64>()) {
        let x = project_simplex(&p).unwrap();
        prop_assert!((x.sum() - 1.0).abs() <= 1e-12);
        prop_assert!(x.iter().all(|v| *v >= 0.0));
        let oracle = bisection_projection(&p);
        prop_assert!((&x - &oracle).amax() <= 1e-9);
        // ⟨p − x, w − x⟩ ≤ 0 for every w in the simplex.
        let pv = DVector::from_column_slice(&p);
        let mut r = rng(seed);
        for _ in 0..20 {
            let w = random_simplex_point(&mut r, p.len());
            prop_assert!((&pv - &x).dot(&(w - &x)) <= 1e-10);
        }
    }

    #[test]
    fn drs_operator_is_firmly_nonexpansive(game in game_strategy(10), gamma in gamma_strategy(), seed in any::<u64>()) {
        let ctx = DrsContext::new(&game, gamma).unwrap();
        let mut r = rng(seed);
        for _ in 0..20 {
            let (a, b) = (random_point(&mut r, ctx.dim(), 3.0), random_point(&mut r, ctx.dim(), 3.0));
            let dz = a.as_vector() - b.as_vector();
            let dt = apply_T_DRS(&ctx, &a).unwrap().into_inner() - apply_T_DRS(&ctx, &b).unwrap().into_inner();
            prop_assert!(dt.norm_squared() <= dz.dot(&dt) + 1e-10);
            let dr = residual(&ctx, &a).unwrap().vector() - residual(&ctx, &b).unwrap().vector();
            prop_assert!(dz.dot(&dr) >= -1e-10 * dz.norm_squared());
            prop_assert!(dr.norm() <= (1.0 + 1e-10) * dz.norm());
        }
    }

    #[test]
    fn restrict_inverts_lift_on_feasible_profiles(game in game_strategy(10), gamma in gamma_strategy(), seed in any::<u64>()) {
        let ctx = DrsContext::new(&game, gamma).unwrap();
        let mut r = rng(seed);
        let p = StrategyProfile::new(random_simplex_point(&mut r, game.rows()), random_simplex_point(&mut r, game.cols())).unwrap();
        let back = restrict(&ctx, &lift(&ctx, &p).unwrap()).unwrap();
        // Not an identity in general: Π(ẑ − γF(ẑ)) = ẑ only at equilibria.
        let gap_p = duality_gap(&game, &p).unwrap().gap;
        if gap_p <= 1e-12 {
            prop_assert!((back.joint() - p.joint()).norm() <= 1e-9);
        }
        prop_assert!((back.x().sum() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn projection_jacobian_matches_finite_differences(p in prop::collection::vec(-2.0f64..2.0, 2..15)) {
        let t = bisection_threshold(&p);
        prop_assume!(p.iter().all(|v| (v - t).abs() > 1e-4));
        let g = projection_jacobian(&p).unwrap().materialize();
        let h = 1e-7;
        for j in 0..p.len() {
            let mut plus = p.clone();
            let mut minus = p.clone();
            plus[j] += h;
            minus[j] -= h;
            let fd = (project_simplex(&plus).unwrap() - project_simplex(&minus).unwrap()) / (2.0 * h);
            prop_assert!((g.column(j) - fd).amax() <= 1e-6);
        }
    }

    #[test]
    fn residual_jacobian_is_directionally_consistent(game in game_strategy(8), gamma in gamma_strategy(), seed in any::<u64>()) {
        let ctx = DrsContext::new(&game, gamma).unwrap();
        let mut r = rng(seed);
        let z = kink_free_point(&mut r, &ctx, 1e-4);
        let j = residual_jacobian(&ctx, &z).unwrap();
        let r0 = residual(&ctx, &z).unwrap();
        let h = 1e-6;
        for _ in 0..10 {
            let d = random_point(&mut r, ctx.dim(), 1.0).into_inner().normalize();
            let moved = residual(&ctx, &LiftedPoint::new(z.as_vector() + &d * h).unwrap()).unwrap();
            let err = (moved.vector() - r0.vector() - j.matrix() * &d * h).norm();
            prop_assert!(err <= 1e-8, "{err}");
        }
        let fd = central_difference_jacobian(&ctx, &z, 1e-6);
        prop_assert!((j.matrix() - fd).amax() <= 1e-6);
    }

    #[test]
    fn jacobian_symmetric_part_is_psd_and_system_bounded(game in game_strategy(12), gamma in gamma_strategy(), seed in any::<u64>(), mu_exp in -6i32..1) {
        let ctx = DrsContext::new(&game, gamma).unwrap();
        let mut r = rng(seed);
        let z = random_point(&mut r, ctx.dim(), 2.0);
        let j = residual_jacobian(&ctx, &z).unwrap();
        let sym = (j.matrix() + j.matrix().transpose()) * 0.5;
        prop_assert!(sym.symmetric_eigenvalues().min() >= -1e-8);
        let mu = 10f64.powi(mu_exp);
        // σ_min(J + μI) can equal μ exactly. SVD then resolves it only to about n·ε·‖J‖,
        // a relative error of n·ε·‖J‖/μ in 1/σ_min.
        let inv = regularized_inverse_norm(j.matrix(), mu);
        let rounding = j.matrix().nrows() as f64 * f64::EPSILON * (j.matrix().norm() + mu) / mu;
        prop_assert!(inv <= (1.0 + 1e-10 + rounding) / mu, "{inv} vs {}", 1.0 / mu);
        let rv = residual(&ctx, &z).unwrap();
        let step = newton_solve(&j, mu, &rv).unwrap();
        prop_assert!(step.norm() <= rv.norm() / mu * (1.0 + 1e-9));
    }
}
