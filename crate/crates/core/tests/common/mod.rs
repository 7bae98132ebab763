#![allow(dead_code)]

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use ktsel_core::{standardize, Dataset, PairStructure};

/// Standardized random dataset with both classes present. Some columns get a
/// class shift so that the objective landscape is not flat.
pub fn random_dataset(n: usize, p: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..p).map(|_| rng.random_range(-1.5..1.5)).collect();
    let mut x = Vec::with_capacity(n * p);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let label: i8 = if i < 2 { [1, -1][i] } else if rng.random::<bool>() { 1 } else { -1 };
        for s in &shift {
            let e: f64 = rng.sample(StandardNormal);
            x.push(e + f64::from(label) * s);
        }
        y.push(label);
    }
    let names = (0..p).map(|j| format!("f{j}")).collect();
    standardize(&Dataset::new(x, y, names).unwrap()).unwrap().dataset
}

pub fn random_instance(n: usize, p: usize, seed: u64) -> (Dataset, PairStructure) {
    // Rare draws can produce a constant column for tiny n; reseed until full width.
    let mut s = seed;
    loop {
        let ds = random_dataset(n, p, s);
        if ds.p() == p {
            let ps = PairStructure::build(&ds).unwrap();
            return (ds, ps);
        }
        s = s.wrapping_add(0x9e37_79b9);
    }
}

/// Squared distance of class centroids in the feature space of the subset
/// Gaussian kernel, computed straight from the rows.
pub fn centroid_distance(ds: &Dataset, z: &[bool], gamma: f64) -> f64 {
    let y = ds.labels();
    let k = |i: usize, h: usize| {
        let d: f64 = (0..ds.p())
            .filter(|&j| z[j])
            .map(|j| (ds.get(i, j) - ds.get(h, j)).powi(2))
            .sum();
        (-gamma * d).exp()
    };
    let pos: Vec<usize> = (0..ds.n()).filter(|&i| y[i] == 1).collect();
    let neg: Vec<usize> = (0..ds.n()).filter(|&i| y[i] == -1).collect();
    let block = |a: &[usize], b: &[usize]| {
        let mut s = 0.0;
        for &i in a {
            for &h in b {
                s += k(i, h);
            }
        }
        s / (a.len() * b.len()) as f64
    };
    block(&pos, &pos) + block(&neg, &neg) - 2.0 * block(&pos, &neg)
}

/// Best objective over all masks with at most `theta` features, by plain
/// bit enumeration. Ties go to the lexicographically smaller 0/1 vector.
pub fn enumerate_best(ds: &Dataset, theta: usize, gamma: f64) -> (Vec<bool>, f64) {
    let p = ds.p();
    let mut best: Option<(Vec<bool>, f64)> = None;
    for bits in 0u64..(1 << p) {
        if bits.count_ones() as usize > theta {
            continue;
        }
        let z: Vec<bool> = (0..p).map(|j| bits >> j & 1 == 1).collect();
        let v = centroid_distance(ds, &z, gamma);
        let take = match &best {
            None => true,
            Some((bz, bv)) => v > *bv || (v == *bv && z < *bz),
        };
        if take {
            best = Some((z, v));
        }
    }
    best.unwrap()
}
