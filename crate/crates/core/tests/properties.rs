mod common;

use proptest::prelude::*;

use common::{centroid_distance, random_instance};
use ktsel_core::alignment::{alignment_objective_with, reduced_objective_with, sigest_gamma};
use ktsel_core::milo::{big_m, build_milo, build_rmilo, reconstruct_e, verify_solution, MiloVariant, DEFAULT_FULL_BIG_M};
use ktsel_core::solver::{brute_force_with, node_upper_bound, solve_bnb_with, BnbNode, DEFAULT_ENUMERATION_CAP};
use ktsel_core::{alignment_objective, standardize, Dataset, Limits, Parallelism, SubsetMask};

fn small() -> impl Strategy<Value = (usize, usize, u64)> {
    (4usize..12, 2usize..7, any::<u64>())
}

fn gamma() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.1), Just(1.0), Just(4.0), 0.05f64..5.0]
}

/// Splits features into fixed-in / fixed-out / free from a code per feature.
fn node_from_codes(codes: &[u8], theta: usize) -> BnbNode {
    let mut node = BnbNode::root(codes.len());
    node.free.clear();
    for (j, &c) in codes.iter().enumerate() {
        match c {
            0 if node.fixed_in.len() < theta => node.fixed_in.push(j),
            1 => node.fixed_out.push(j),
            _ => node.free.push(j),
        }
    }
    node
}

/// Best objective over completions of the node.
fn best_completion(ps: &ktsel_core::PairStructure, node: &BnbNode, theta: usize, gamma: f64) -> f64 {
    let p = ps.p();
    let r = theta - node.fixed_in.len();
    let mut best = f64::NEG_INFINITY;
    for bits in 0u64..(1 << node.free.len()) {
        if bits.count_ones() as usize > r {
            continue;
        }
        let mut z = vec![false; p];
        for &j in &node.fixed_in {
            z[j] = true;
        }
        for (k, &j) in node.free.iter().enumerate() {
            if bits >> k & 1 == 1 {
                z[j] = true;
            }
        }
        best = best.max(alignment_objective_with(ps, &z, gamma, Parallelism::Sequential));
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn node_bound_dominates_completions(
        (n, p, seed) in small(),
        theta_raw in 1usize..7,
        g in gamma(),
        codes in proptest::collection::vec(0u8..3, 6),
    ) {
        let theta = theta_raw.min(p);
        let (_, ps) = random_instance(n, p, seed);
        let node = node_from_codes(&codes[..p], theta);
        let ub = node_upper_bound(&node, &ps, theta, g);
        let best = best_completion(&ps, &node, theta, g);
        prop_assert!(ub >= best - 1e-12, "bound {ub} below completion {best}");
    }

    #[test]
    fn child_bounds_never_exceed_parent(
        (n, p, seed) in small(),
        theta_raw in 1usize..7,
        g in gamma(),
        codes in proptest::collection::vec(0u8..3, 6),
        pick in any::<prop::sample::Index>(),
    ) {
        let theta = theta_raw.min(p);
        let (_, ps) = random_instance(n, p, seed);
        let node = node_from_codes(&codes[..p], theta);
        prop_assume!(!node.free.is_empty() && node.fixed_in.len() < theta);
        let parent = node_upper_bound(&node, &ps, theta, g);
        let j = node.free[pick.index(node.free.len())];
        let mut child_in = node.clone();
        child_in.free.retain(|&f| f != j);
        child_in.fixed_in.push(j);
        let mut child_out = node.clone();
        child_out.free.retain(|&f| f != j);
        child_out.fixed_out.push(j);
        prop_assert!(node_upper_bound(&child_in, &ps, theta, g) <= parent + 1e-12);
        prop_assert!(node_upper_bound(&child_out, &ps, theta, g) <= parent + 1e-12);
    }

    #[test]
    fn bnb_matches_brute_force(
        (n, p, seed) in small(),
        theta_raw in 1usize..6,
        g in gamma(),
    ) {
        let theta = theta_raw.min(p);
        let (_, ps) = random_instance(n, p, seed);
        let exact = brute_force_with(&ps, theta, g, DEFAULT_ENUMERATION_CAP, Parallelism::Sequential).unwrap();
        let bnb = solve_bnb_with(&ps, theta, g, Limits::default(), Parallelism::Sequential).unwrap();
        prop_assert!((exact.objective - bnb.objective).abs() <= 1e-9);
        prop_assert_eq!(bnb.lower_bound, bnb.upper_bound);
        prop_assert!(bnb.z_best.count() <= theta);
        let recomputed = alignment_objective(&ps, &bnb.z_best, g);
        prop_assert!((recomputed - bnb.objective).abs() <= 1e-9);
    }

    #[test]
    fn objective_is_the_centroid_distance(
        (n, p, seed) in small(),
        g in gamma(),
        bits in any::<u64>(),
    ) {
        let (ds, ps) = random_instance(n, p, seed);
        let z = SubsetMask::from_bits(p, bits & ((1 << p) - 1), p).unwrap();
        let direct = centroid_distance(&ds, z.as_slice(), g);
        let ours = alignment_objective(&ps, &z, g);
        prop_assert!((direct - ours).abs() <= 1e-10, "{direct} vs {ours}");
        prop_assert!(ours >= -1e-12);
        // Pair decomposition: diagonal plus twice the off-diagonal sum.
        let split = ps.psi_sq_sum() + 2.0 * reduced_objective_with(&ps, z.as_slice(), g, Parallelism::Sequential);
        prop_assert!((split - ours).abs() <= 1e-12);
    }

    #[test]
    fn parallel_and_sequential_agree_bitwise(
        (n, p, seed) in (4usize..40, 2usize..7, any::<u64>()),
        g in gamma(),
        bits in any::<u64>(),
    ) {
        let (_, ps) = random_instance(n, p, seed);
        let z: Vec<bool> = (0..p).map(|j| bits >> j & 1 == 1).collect();
        let a = alignment_objective_with(&ps, &z, g, Parallelism::Sequential);
        let b = alignment_objective_with(&ps, &z, g, Parallelism::Parallel);
        prop_assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn standardization_commutes_with_row_order(
        (n, p, seed) in small(),
        rot in 1usize..50,
    ) {
        let (ds, _) = random_instance(n, p, seed);
        // Undo scaling so the input is raw data with arbitrary offsets.
        let raw: Vec<f64> = ds.values().iter().enumerate().map(|(k, v)| 3.0 * v + (k % p) as f64).collect();
        let names: Vec<String> = ds.feature_names().to_vec();
        let a = standardize(&Dataset::new(raw.clone(), ds.labels().to_vec(), names.clone()).unwrap()).unwrap().dataset;
        let order: Vec<usize> = (0..n).map(|i| (i + rot) % n).collect();
        let b = standardize(&a.select_rows(&order).unwrap()).unwrap().dataset;
        for (k, &i) in order.iter().enumerate() {
            for j in 0..p {
                prop_assert!((a.get(i, j) - b.get(k, j)).abs() <= 1e-12);
            }
        }
        let ga = sigest_gamma(&ktsel_core::PairStructure::build(&a).unwrap(), 1).unwrap();
        let gb = sigest_gamma(&ktsel_core::PairStructure::build(&b).unwrap(), 1).unwrap();
        prop_assert!((ga - gb).abs() <= 1e-9 * ga);
    }

    #[test]
    fn reconstructed_chains_are_feasible(
        (n, p, seed) in (3usize..7, 1usize..5, any::<u64>()),
        g in gamma(),
        bits in any::<u64>(),
        stabilized in any::<bool>(),
    ) {
        let (_, ps) = random_instance(n, p, seed);
        let z = SubsetMask::from_bits(p, bits & ((1 << p) - 1), p).unwrap();
        let reduced = build_rmilo(&ps, g, p, stabilized).unwrap();
        let e = reconstruct_e(&z, &ps, g, MiloVariant::Reduced).unwrap();
        let rep = verify_solution(&reduced, &e, &z, 1e-12).unwrap();
        prop_assert!(rep.is_feasible(), "{:?}", rep.violations);
        prop_assert!((rep.alignment_objective - alignment_objective(&ps, &z, g)).abs() <= 1e-10);
        let full = build_milo(&ps, g, p, DEFAULT_FULL_BIG_M).unwrap();
        let e = reconstruct_e(&z, &ps, g, MiloVariant::Full).unwrap();
        let rep = verify_solution(&full, &e, &z, 1e-12).unwrap();
        prop_assert!(rep.is_feasible(), "{:?}", rep.violations);
        prop_assert!((rep.alignment_objective - alignment_objective(&ps, &z, g)).abs() <= 1e-10);
    }

    #[test]
    fn big_m_chain_bounds(d in 0.0f64..50.0, g in 0.001f64..20.0, e in 0.0f64..=1.0) {
        let c = (-g * d).exp();
        let m = big_m(d, g, false);
        // z = 0: e' = e must satisfy e' - c e <= M, which needs M >= (1 - c) e.
        prop_assert!(e - c * e <= m + 1e-15);
        // z = 1: e' = c e must satisfy e - e' <= M.
        prop_assert!(e - c * e <= m + 1e-15);
        let s = big_m(d, g, true);
        prop_assert!(s >= m && s <= 1.0);
    }
}
