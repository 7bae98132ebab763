mod common;

use common::{enumerate_best, random_instance};
use ktsel_core::alignment::{sigest_gamma, subset_kernel_raw};
use ktsel_core::baselines::{greedy_forward, rfe_criterion, rfe_k};
use ktsel_core::experiment::{run_experiment, set_f1, DataSource, ExperimentConfig, Method};
use ktsel_core::svm::{kernel_matrix, solve_dual, train, KernelSpec, SvmConfig};
use ktsel_core::synth::{generate, GenConfig};
use ktsel_core::{brute_force, solve_bnb, Dataset, Limits, PairStructure, Status, SubsetMask};

#[test]
fn solvers_agree_with_direct_enumeration() {
    for seed in 0..12 {
        let (ds, ps) = random_instance(10, 5, seed);
        for theta in 1..=3 {
            let g = 0.7;
            let (_, want) = enumerate_best(&ds, theta, g);
            let bnb = solve_bnb(&ps, theta, g, Limits::default()).unwrap();
            assert!((bnb.objective - want).abs() < 1e-9, "seed {seed} theta {theta}");
        }
    }
}

#[test]
fn greedy_never_beats_exact_and_matches_at_theta_one() {
    for seed in 0..20 {
        let (_, ps) = random_instance(12, 6, seed);
        let g = sigest_gamma(&ps, 2).unwrap();
        for theta in 1..=3 {
            let greedy = greedy_forward(&ps, theta, g).unwrap();
            let exact = brute_force(&ps, theta, g).unwrap();
            let gv = greedy.steps.last().map_or(0.0, |s| s.value);
            assert!(gv <= exact.objective + 1e-12);
            assert!(greedy.mask.count() <= theta);
            if theta == 1 {
                assert_eq!(greedy.mask.selected(), exact.z_best.selected(), "seed {seed}");
            }
        }
    }
}

#[test]
fn greedy_stops_on_uninformative_feature() {
    // Standardization would drop a constant column, so feature 1 gets zero
    // distances directly in the pair structure.
    let y = [1i8, 1, -1, -1];
    let x1: [f64; 4] = [0.0, 0.2, 3.0, 3.3];
    let mut dist = Vec::new();
    for i in 0..4 {
        for h in i + 1..4 {
            dist.push((x1[i] - x1[h]).powi(2));
            dist.push(0.0);
        }
    }
    let ps = PairStructure::from_distances(&y, 2, dist).unwrap();
    let t = greedy_forward(&ps, 2, 1.0).unwrap();
    assert_eq!(t.mask.selected(), vec![0]);
    assert_eq!(t.steps.len(), 1);
}

#[test]
fn rfe_criterion_is_nonnegative_and_traces_are_valid() {
    for seed in 0..5 {
        let (ds, ps) = random_instance(16, 5, seed);
        let g = sigest_gamma(&ps, 5).unwrap();
        let all = SubsetMask::unbounded(vec![true; 5]);
        let m = train(&ds, &all, &SvmConfig::gaussian(g)).unwrap();
        for j in 0..5 {
            assert!(rfe_criterion(&ps, &m.alpha, ds.labels(), all.as_slice(), g, j) >= 0.0);
        }
        let t = rfe_k(&ds, 2, 1.0, 1.0).unwrap();
        assert_eq!(t.mask.count(), 2);
        let mut removed: Vec<usize> = t.steps.iter().map(|s| s.feature).collect();
        removed.sort_unstable();
        removed.dedup();
        assert_eq!(removed.len(), 3);
        assert_eq!(t, rfe_k(&ds, 2, 1.0, 1.0).unwrap());
    }
}

#[test]
fn svm_solution_is_dual_feasible() {
    for seed in 0..8 {
        let (ds, ps) = random_instance(30, 4, seed);
        let g = sigest_gamma(&ps, 4).unwrap();
        let z = vec![true, true, false, true];
        for c in [0.5, 1.0, 10.0] {
            let k = kernel_matrix(&ds, &z, KernelSpec::Gaussian { gamma: g });
            let sol = solve_dual(ds.labels(), &k, &SvmConfig::gaussian(g).with_c(c), true).unwrap();
            assert!(sol.alpha.iter().all(|&a| (-1e-8..=c + 1e-8).contains(&a)));
            let eq: f64 = sol.alpha.iter().zip(ds.labels()).map(|(a, &y)| a * f64::from(y)).sum();
            assert!(eq.abs() < 1e-8, "equality residual {eq}");
            assert!(sol.trace.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        }
    }
}

#[test]
fn svm_kernel_matches_direct_formula() {
    let (ds, _) = random_instance(6, 3, 9);
    let z = [true, false, true];
    let k = kernel_matrix(&ds, &z, KernelSpec::Gaussian { gamma: 0.4 });
    for i in 0..6 {
        for h in 0..6 {
            let d = (ds.get(i, 0) - ds.get(h, 0)).powi(2) + (ds.get(i, 2) - ds.get(h, 2)).powi(2);
            assert!((k[i * 6 + h] - (-0.4 * d).exp()).abs() < 1e-15);
            assert_eq!(k[i * 6 + h], subset_kernel_raw(ds.row(i), ds.row(h), &z, 0.4));
        }
    }
}

fn true_set_accuracy(expansion: f64) -> f64 {
    let mut total = 0.0;
    for seed in 0..10 {
        let g = generate(&GenConfig {
            n_train: 60,
            n_test: 200,
            p: 6,
            theta_star: 2,
            expansion,
            seed,
        })
        .unwrap();
        let mask = SubsetMask::from_indices(6, &g.relevant, 2).unwrap();
        let ps = PairStructure::build(&g.train).unwrap();
        let gamma = sigest_gamma(&ps, 2).unwrap();
        let m = train(&g.train, &mask, &SvmConfig::gaussian(gamma)).unwrap();
        let test: &Dataset = g.test.as_ref().unwrap();
        let preds = m.predict_dataset(test).unwrap();
        total += preds.iter().zip(test.labels()).filter(|(a, b)| a == b).count() as f64 / 200.0;
    }
    total / 10.0
}

#[test]
fn larger_expansion_means_more_overlap() {
    let tight = true_set_accuracy(25.0);
    let loose = true_set_accuracy(100.0);
    assert!(tight > loose, "{tight} vs {loose}");
}

fn forced_config(method: Method) -> ExperimentConfig {
    ExperimentConfig {
        methods: vec![method],
        theta: 1,
        beta: 1.0,
        c: 1.0,
        time_limit_s: 60.0,
        repetitions: 5,
        seeds: vec![11, 12, 13, 14, 15],
        data: DataSource::Synthetic {
            n_train: 40,
            n_test: 40,
            p: 2,
            theta_star: 1,
            expansion: 25.0,
        },
        record_time: false,
    }
}

#[test]
fn exact_method_recovers_forced_relevant_feature() {
    for method in [Method::Brute, Method::Bnb] {
        let r = run_experiment(&forced_config(method)).unwrap();
        let row = &r.rows[0];
        assert!(row.failed.is_none());
        for run in &row.runs {
            assert_eq!(run.set_f1, Some(1.0));
        }
        assert_eq!(row.set_f1.unwrap().mean, 1.0);
    }
}

#[test]
fn reported_objective_is_recomputable() {
    let mut cfg = forced_config(Method::Bnb);
    cfg.theta = 2;
    cfg.data = DataSource::Synthetic {
        n_train: 30,
        n_test: 10,
        p: 6,
        theta_star: 2,
        expansion: 50.0,
    };
    let r = run_experiment(&cfg).unwrap();
    for run in &r.rows[0].runs {
        let g = generate(&GenConfig {
            n_train: 30,
            n_test: 10,
            p: 6,
            theta_star: 2,
            expansion: 50.0,
            seed: run.seed,
        })
        .unwrap();
        let z = SubsetMask::from_indices(6, &run.selected, 2).unwrap();
        let direct = common::centroid_distance(&g.train, z.as_slice(), run.gamma);
        assert!((direct - run.objective).abs() < 1e-9);
        assert_eq!(run.status, Some(Status::Optimal));
        assert!(set_f1(&g.relevant, &run.selected) == run.set_f1.unwrap());
    }
}

#[test]
fn time_limit_is_recorded() {
    let mut cfg = forced_config(Method::Bnb);
    cfg.time_limit_s = 0.0;
    cfg.repetitions = 1;
    cfg.seeds = vec![1];
    let r = run_experiment(&cfg).unwrap();
    assert_eq!(r.rows[0].runs[0].status, Some(Status::TimeLimit));
    assert_eq!(r.rows[0].time_limit_hits, 1);
    assert_eq!(r.rows[0].runs[0].selected.len(), 1);
}
