use super::*;
use crate::rng::rng_from_seed;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

#[test]
fn perfect_estimates_have_zero_loss() {
    let th = DMatrix::from_row_slice(3, 2, &[1.0, -2.0, 1.0, -2.0, 1.0, -2.0]);
    let m = estimation_metrics(&th, &[1.0, -2.0]).unwrap();
    assert_eq!((m.mse, m.var, m.bias2), (0.0, 0.0, 0.0));
}

#[test]
fn symmetric_errors_are_pure_variance() {
    let th = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0]);
    let m = estimation_metrics(&th, &[1.0, 0.0]).unwrap();
    assert_eq!((m.mse, m.var, m.bias2), (1.0, 1.0, 0.0));
}

#[test]
fn one_replication_is_pure_bias() {
    let th = DMatrix::from_row_slice(1, 3, &[0.5, 1.0, -1.0]);
    let m = estimation_metrics(&th, &[0.0, 0.0, 0.0]).unwrap();
    assert_eq!(m.var, 0.0);
    assert_eq!(m.mse, m.bias2);
    assert!(estimation_metrics(&th, &[0.0]).is_err());
}

#[test]
fn perfect_recovery_scores_one() {
    let rep = selection_metrics(&[1.0, 0.0, 0.2], &[0.9, 0.1, 0.0, 0.0], 0.5, &[0], &[0]).unwrap();
    assert_eq!((rep.tpr_group, rep.tpr_var), (Some(100.0), Some(100.0)));
    assert_eq!((rep.mcc_group, rep.mcc_var), (1.0, 1.0));
}

#[test]
fn nothing_declared_gives_zero_tpr() {
    let rep = selection_metrics(&[0.1, 0.2], &[0.0, 0.4], 0.5, &[1], &[1]).unwrap();
    assert_eq!(rep.tpr_group, Some(0.0));
    assert_eq!(rep.mcc_group, 0.0);
    let empty = selection_metrics(&[0.1], &[0.0], 0.5, &[], &[]).unwrap();
    assert_eq!(empty.tpr_group, None);
}

#[test]
fn mcc_hand_example() {
    let c = Confusion { tp: 3, fp: 1, fn_: 2, tn: 14 };
    let want = 40.0 / (4.0f64 * 5.0 * 15.0 * 16.0).sqrt();
    assert!((c.mcc() - want).abs() < 1e-15);
    assert!((c.mcc() - 0.577).abs() < 1e-3);
}

#[test]
fn threshold_is_inclusive() {
    let rep = selection_metrics(&[0.5], &[0.5], 0.5, &[0], &[0]).unwrap();
    assert_eq!(rep.group.tp, 1);
    assert!(selection_metrics(&[0.5], &[0.5], 1.0, &[0], &[0]).is_err());
}

#[test]
fn gaussian_crps_at_the_mean() {
    let want = (2f64.sqrt() - 1.0) / std::f64::consts::PI.sqrt();
    assert!((crps_normal(0.0, 1.0, 0.0) - want).abs() < 1e-10);
    let f = ForecastDensity::normal(0.0, 1.0).unwrap();
    assert!((crps_mixture(&f, 0.0) - want).abs() < 1e-10);
    assert!((want - 0.2337).abs() < 1e-4);
}

#[test]
fn near_degenerate_density_at_the_outcome_scores_zero() {
    let f = ForecastDensity::normal(1.5, 1e-30).unwrap();
    let r = forecast_scores(&[f], &[1.5], None).unwrap();
    assert_eq!(r.rmsfe, 0.0);
    assert!(r.avg_crps < 1e-14);
}

fn random_mixture(seed: u64, k: usize) -> ForecastDensity {
    let mut rng = rng_from_seed(seed);
    let means = (0..k).map(|_| rng.random_range(-2.0..2.0)).collect();
    let vars = (0..k).map(|_| rng.random_range(0.1..2.0)).collect();
    let w = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
    ForecastDensity::new(means, vars, w).unwrap()
}

fn sample_mixture(f: &ForecastDensity, rng: &mut crate::rng::ChainRng) -> f64 {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut k = f.len() - 1;
    for (i, w) in f.weights.iter().enumerate() {
        acc += w;
        if u < acc {
            k = i;
            break;
        }
    }
    let e: f64 = StandardNormal.sample(rng);
    f.means[k] + f.variances[k].sqrt() * e
}

/// CRPS = E|X - y| - ½ E|X - X'| with independent X, X' ~ F.
fn empirical_crps(f: &ForecastDensity, y: f64, n: usize, seed: u64) -> f64 {
    let mut rng = rng_from_seed(seed);
    let (mut a, mut b) = (0.0, 0.0);
    for _ in 0..n {
        let x = sample_mixture(f, &mut rng);
        let x2 = sample_mixture(f, &mut rng);
        a += (x - y).abs();
        b += (x - x2).abs();
    }
    (a - 0.5 * b) / n as f64
}

#[test]
fn mixture_crps_matches_sampling_estimator() {
    for seed in 0..3 {
        let f = random_mixture(seed, 7);
        let y = 0.3 * seed as f64;
        let exact = crps_mixture(&f, y);
        let mc = empirical_crps(&f, y, 100_000, 100 + seed);
        assert!((exact / mc - 1.0).abs() < 0.01, "{exact} {mc}");
    }
}

#[test]
fn mixture_scores_ignore_component_order() {
    let f = random_mixture(5, 6);
    let mut idx: Vec<usize> = (0..6).collect();
    idx.reverse();
    let g = ForecastDensity::new(
        idx.iter().map(|&i| f.means[i]).collect(),
        idx.iter().map(|&i| f.variances[i]).collect(),
        idx.iter().map(|&i| f.weights[i]).collect(),
    )
    .unwrap();
    assert!((crps_mixture(&f, 0.4) - crps_mixture(&g, 0.4)).abs() < 1e-12);
    assert!((f.log_pdf(0.4) - g.log_pdf(0.4)).abs() < 1e-12);
}

#[test]
fn relative_scores_against_self_are_neutral() {
    let fs: Vec<ForecastDensity> = (0..5).map(|s| random_mixture(s, 3)).collect();
    let y = [0.1, -0.2, 0.3, 1.0, -1.0];
    let r = forecast_scores(&fs, &y, Some(&fs)).unwrap();
    assert_eq!(r.rel_rmsfe, Some(1.0));
    assert_eq!(r.rel_logs, Some(0.0));
    assert_eq!(r.rel_crps, Some(1.0));
}

#[test]
fn zero_density_outcome_is_reported() {
    let f = ForecastDensity::normal(0.0, 1e-6).unwrap();
    let err = forecast_scores(&[f.clone(), f], &[0.0, 1e200], None).unwrap_err();
    assert!(matches!(err, Error::ZeroDensity { period: 1, .. }));
}

#[test]
fn ar1_on_white_noise_is_flat() {
    let mut rng = rng_from_seed(8);
    let y: Vec<f64> = (0..10_000).map(|_| { let e: f64 = StandardNormal.sample(&mut rng); 2.0 + e }).collect();
    let fit = Ar1Fit::fit(&y).unwrap();
    assert!(fit.slope.abs() < 0.03, "{}", fit.slope);
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let f = ar1_benchmark(&y, 1).unwrap();
    assert!((f[0].mean() - mean).abs() < 0.05);
}

#[test]
fn ar1_rejects_constant_series() {
    assert!(matches!(Ar1Fit::fit(&[3.0; 50]), Err(Error::Degenerate(_))));
    assert!(Ar1Fit::fit(&[1.0, 2.0]).is_err());
}

#[test]
fn ar1_intervals_are_calibrated() {
    let z90 = crate::special::norm_ppf(0.95);
    let mut hits = 0;
    for sim in 0..1000u64 {
        let mut rng = rng_from_seed(1000 + sim);
        let mut y = vec![0.0];
        for _ in 0..201 {
            let e: f64 = StandardNormal.sample(&mut rng);
            y.push(0.5 + 0.3 * y.last().unwrap() + e);
        }
        let target = y.pop().unwrap();
        let f = &ar1_benchmark(&y[1..], 1).unwrap()[0];
        let (m, s) = (f.mean(), f.variance().sqrt());
        if (target - m).abs() <= z90 * s {
            hits += 1;
        }
    }
    let cov = hits as f64 / 1000.0;
    assert!((0.85..=0.94).contains(&cov), "{cov}");
}

#[test]
fn ar1_iterated_variance_accumulates() {
    let y: Vec<f64> = (0..40).map(|t| ((t * 7919) % 13) as f64).collect();
    let fit = Ar1Fit::fit(&y).unwrap();
    let f = ar1_benchmark(&y, 3).unwrap();
    let b2 = fit.slope * fit.slope;
    assert!((f[2].variance() - fit.sigma2 * (1.0 + b2 + b2 * b2)).abs() < 1e-12);
}

#[test]
fn single_model_pool_is_trivial() {
    let d = DMatrix::from_column_slice(4, 1, &[0.1, 0.5, 0.2, 0.9]);
    assert_eq!(optimal_pool(&d).unwrap().weights, vec![1.0]);
}

#[test]
fn duplicate_models_split_evenly() {
    let col = [0.1, 0.5, 0.2, 0.9, 0.3];
    let d = DMatrix::from_fn(5, 2, |t, _| col[t]);
    assert_eq!(optimal_pool(&d).unwrap().weights, vec![0.5, 0.5]);
}

#[test]
fn dominant_model_takes_all_weight() {
    let mut rng = rng_from_seed(4);
    let d = DMatrix::from_fn(30, 2, |_, k| {
        let base: f64 = rng.random_range(0.2..1.0);
        if k == 0 { base * 1.5 } else { base }
    });
    let p = optimal_pool(&d).unwrap();
    assert!(p.weights[0] >= 1.0 - 1e-6, "{:?}", p.weights);
    // grid oracle: the objective peaks at the boundary
    let obj = |w: f64| (0..30).map(|t| (w * d[(t, 0)] + (1.0 - w) * d[(t, 1)]).ln()).sum::<f64>();
    let best = (0..=1000).map(|i| i as f64 / 1000.0).fold((0.0, f64::MIN), |a, w| if obj(w) > a.1 { (w, obj(w)) } else { a });
    assert_eq!(best.0, 1.0);
    assert!(p.objective >= best.1 - 1e-9);
}

#[test]
fn interior_pool_matches_grid_scan() {
    // each model wins half the periods
    let d = DMatrix::from_fn(40, 2, |t, k| if (t % 2 == 0) == (k == 0) { 1.0 } else { 0.2 + 0.01 * t as f64 });
    let p = optimal_pool(&d).unwrap();
    let obj = |w: f64| (0..40).map(|t| (w * d[(t, 0)] + (1.0 - w) * d[(t, 1)]).ln()).sum::<f64>();
    let grid = (0..=100_000).map(|i| i as f64 / 100_000.0).fold((0.0, f64::MIN), |a, w| if obj(w) > a.1 { (w, obj(w)) } else { a });
    assert!((p.weights[0] - grid.0).abs() < 1e-4, "{:?} {:?}", p.weights, grid);
    assert!((p.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn simplex_projection_examples() {
    assert_eq!(project_simplex(&[0.2, 0.8]), vec![0.2, 0.8]);
    assert_eq!(project_simplex(&[2.0, 0.0]), vec![1.0, 0.0]);
    let p = project_simplex(&[0.5, 0.5, 0.5]);
    assert!(p.iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-15));
}

#[test]
fn single_column_singular_value_is_one() {
    let z = DMatrix::from_column_slice(4, 1, &[1.0, -2.0, 0.5, 3.0]);
    let v = bilevel_sparse_singular_value(&z, &Partition::uniform(1, 1).unwrap(), 1, 1).unwrap();
    assert!((v - 1.0).abs() < 1e-12);
}

#[test]
fn orthogonal_equal_columns_give_one() {
    let z = DMatrix::<f64>::identity(4, 4) * 2.0;
    let v = bilevel_sparse_singular_value(&z, &Partition::uniform(2, 2).unwrap(), 1, 1).unwrap();
    assert!((v - 1.0).abs() < 1e-12);
}

#[test]
fn duplicated_columns_give_zero() {
    let z = DMatrix::from_column_slice(3, 2, &[1.0, 2.0, 3.0, 1.0, 2.0, 3.0]);
    let v = bilevel_sparse_singular_value(&z, &Partition::uniform(1, 2).unwrap(), 1, 2).unwrap();
    assert!(v.abs() < 1e-12);
}

#[test]
fn singular_value_matches_brute_force_over_all_subsets() {
    let mut rng = rng_from_seed(12);
    let part = Partition::new(vec![3, 2, 3]).unwrap();
    let z = DMatrix::from_fn(6, 8, |_, _| StandardNormal.sample(&mut rng));
    let norm_o2 = (0..3)
        .map(|j| {
            let r = part.range(j);
            let b = z.columns(r.start, r.len());
            (b.transpose() * b).symmetric_eigenvalues().max()
        })
        .fold(0.0f64, f64::max);
    for (s, r) in [(1, 2), (2, 3), (3, 4)] {
        let mut best = f64::INFINITY;
        for mask in 1u32..(1 << 8) {
            let cols: Vec<usize> = (0..8).filter(|c| mask >> c & 1 == 1).collect();
            let groups: std::collections::BTreeSet<usize> = cols.iter().map(|&c| part.group_of(c).unwrap()).collect();
            if cols.len() > r || groups.len() > s {
                continue;
            }
            let zs = DMatrix::from_fn(6, cols.len(), |i, c| z[(i, cols[c])]);
            best = best.min((zs.transpose() * &zs).symmetric_eigenvalues().min());
        }
        let v = bilevel_sparse_singular_value(&z, &part, s, r).unwrap();
        assert!((v - best / norm_o2).abs() < 1e-12, "s={s} r={r}");
    }
}

#[test]
fn oversized_instances_are_refused() {
    let z = DMatrix::zeros(2, 25);
    let part = Partition::uniform(5, 5).unwrap();
    assert!(matches!(bilevel_sparse_singular_value(&z, &part, 1, 1), Err(Error::TooLarge(_))));
}

mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn mse_decomposes_exactly(vals in proptest::collection::vec(-5.0f64..5.0, 12), t0 in proptest::collection::vec(-2.0f64..2.0, 3)) {
            let th = DMatrix::from_row_slice(4, 3, &vals);
            let m = estimation_metrics(&th, &t0).unwrap();
            prop_assert!((m.mse - m.var - m.bias2).abs() < 1e-10);
        }

        #[test]
        fn mcc_is_bounded(tp in 0usize..30, fp in 0usize..30, fn_ in 0usize..30, tn in 0usize..30) {
            let c = Confusion { tp, fp, fn_, tn };
            let m = c.mcc();
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&m));
            if fp == 0 && fn_ == 0 && tp > 0 && tn > 0 {
                prop_assert!((m - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn pool_weights_sum_to_one(vals in proptest::collection::vec(0.01f64..3.0, 30)) {
            let d = DMatrix::from_row_slice(10, 3, &vals);
            let p = optimal_pool(&d).unwrap();
            prop_assert!((p.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(p.weights.iter().all(|&w| w >= 0.0));
            let uniform: f64 = (0..10).map(|t| (d.row(t).sum() / 3.0).ln()).sum();
            prop_assert!(p.objective >= uniform - 1e-12);
        }

        #[test]
        fn singular_value_is_monotone(seed in 0u64..1000) {
            let mut rng = rng_from_seed(seed);
            let z = DMatrix::from_fn(6, 8, |_, _| StandardNormal.sample(&mut rng));
            let part = Partition::new(vec![2, 3, 3]).unwrap();
            for s in 1..3 {
                for r in 1..4 {
                    let v = bilevel_sparse_singular_value(&z, &part, s, r).unwrap();
                    prop_assert!(bilevel_sparse_singular_value(&z, &part, s + 1, r).unwrap() <= v + 1e-12);
                    prop_assert!(bilevel_sparse_singular_value(&z, &part, s, r + 1).unwrap() <= v + 1e-12);
                }
            }
        }
    }
}

#[test]
fn crps_splits_into_deviation_and_spread() {
    let f = random_mixture(21, 5);
    let direct = crps_mixture(&f, 0.7);
    let split = expected_abs_dev(&f, 0.7) - 0.5 * expected_abs_diff(&f, &f);
    assert!((direct - split).abs() < 1e-12);
}
