//! Synthetic classification data: normally distributed clusters on the
//! vertices of a cube in the relevant features, standard-normal noise in the
//! rest.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Standardizer};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub n_train: usize,
    pub n_test: usize,
    pub p: usize,
    pub theta_star: usize,
    /// Cluster variance per axis is `expansion / 100`.
    pub expansion: f64,
    pub seed: u64,
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_train < 4 {
            return Err(Error::invalid(format!("n_train must be >= 4, got {}", self.n_train)));
        }
        if self.n_test == 1 {
            return Err(Error::invalid("n_test must be 0 or at least 2"));
        }
        if self.theta_star < 1 || self.theta_star > self.p {
            return Err(Error::invalid(format!(
                "theta_star must be in 1..={}, got {}",
                self.p, self.theta_star
            )));
        }
        if !(self.expansion > 0.0 && self.expansion.is_finite()) {
            return Err(Error::invalid(format!("expansion must be positive, got {}", self.expansion)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Generated {
    /// Standardized exactly.
    pub train: Dataset,
    /// Scaled with the training statistics; `None` when `n_test` is 0.
    pub test: Option<Dataset>,
    /// Relevant column indices in the output layout, ascending.
    pub relevant: Vec<usize>,
    /// Output column `c` holds generated column `permutation[c]`.
    pub permutation: Vec<usize>,
    pub config: GenConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub seed: u64,
    pub relevant: Vec<usize>,
    pub permutation: Vec<usize>,
    pub config: GenConfig,
}

impl Generated {
    pub fn sidecar(&self) -> Sidecar {
        Sidecar {
            seed: self.config.seed,
            relevant: self.relevant.clone(),
            permutation: self.permutation.clone(),
            config: self.config,
        }
    }

    /// Writes `train.csv`, `test.csv` (if any) and `meta.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.train.save_csv(&dir.join("train.csv"))?;
        if let Some(test) = &self.test {
            test.save_csv(&dir.join("test.csv"))?;
        }
        let meta = dir.join("meta.json");
        let json = serde_json::to_string_pretty(&self.sidecar())?;
        std::fs::write(&meta, json + "\n").map_err(|e| Error::io(&meta, e))
    }
}

fn draw_rows(rng: &mut ChaCha8Rng, cfg: &GenConfig, n: usize, sd: f64) -> (Vec<f64>, Vec<i8>) {
    let t = cfg.theta_star;
    let mut x = Vec::with_capacity(n * cfg.p);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let label: i8 = if i % 2 == 0 { 1 } else { -1 };
        // Vertex with an even number of +1 coordinates for class +1, odd for -1.
        let mut vertex: Vec<f64> = (0..t).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
        let ups = vertex.iter().filter(|&&v| v > 0.0).count();
        let want_even = label == 1;
        if (ups % 2 == 0) != want_even {
            vertex[t - 1] = -vertex[t - 1];
        }
        for v in vertex {
            let e: f64 = rng.sample(StandardNormal);
            x.push(v + sd * e);
        }
        for _ in t..cfg.p {
            x.push(rng.sample(StandardNormal));
        }
        y.push(label);
    }
    (x, y)
}

fn permute_columns(x: &[f64], p: usize, perm: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    for row in x.chunks(p) {
        out.extend(perm.iter().map(|&src| row[src]));
    }
    out
}

/// Same config and seed give identical output.
pub fn generate(cfg: &GenConfig) -> Result<Generated> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let sd = (cfg.expansion / 100.0).sqrt();
    let (x_train, y_train) = draw_rows(&mut rng, cfg, cfg.n_train, sd);
    let (x_test, y_test) = draw_rows(&mut rng, cfg, cfg.n_test, sd);

    let mut permutation: Vec<usize> = (0..cfg.p).collect();
    permutation.shuffle(&mut rng);
    let relevant: Vec<usize> = (0..cfg.p).filter(|&c| permutation[c] < cfg.theta_star).collect();

    let names: Vec<String> = (1..=cfg.p).map(|c| format!("x{c}")).collect();
    let raw_train = Dataset::new(permute_columns(&x_train, cfg.p, &permutation), y_train, names.clone())?;
    let scaler = Standardizer::fit(&raw_train)?;
    if !scaler.dropped.is_empty() {
        return Err(Error::invalid("generated a constant column; increase n_train"));
    }
    let train = scaler.transform(&raw_train)?.mark_standardized();
    let test = if cfg.n_test > 0 {
        let raw = Dataset::new(permute_columns(&x_test, cfg.p, &permutation), y_test, names)?;
        Some(scaler.transform(&raw)?)
    } else {
        None
    };
    Ok(Generated {
        train,
        test,
        relevant,
        permutation,
        config: *cfg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> GenConfig {
        GenConfig {
            n_train: 50,
            n_test: 40,
            p: 10,
            theta_star: 3,
            expansion: 25.0,
            seed: 42,
        }
    }

    fn csv_bytes(ds: &Dataset) -> Vec<u8> {
        let mut v = Vec::new();
        ds.write_csv(&mut v).unwrap();
        v
    }

    #[test]
    fn same_seed_same_bytes() {
        let a = generate(&cfg()).unwrap();
        let b = generate(&cfg()).unwrap();
        assert_eq!(csv_bytes(&a.train), csv_bytes(&b.train));
        assert_eq!(csv_bytes(a.test.as_ref().unwrap()), csv_bytes(b.test.as_ref().unwrap()));
        assert_eq!(a.sidecar(), b.sidecar());
        let c = generate(&GenConfig { seed: 43, ..cfg() }).unwrap();
        assert_ne!(csv_bytes(&a.train), csv_bytes(&c.train));
    }

    #[test]
    fn train_is_standardized() {
        let g = generate(&cfg()).unwrap();
        assert!(g.train.check_standardized(1e-9));
        assert!(g.train.is_standardized());
    }

    #[test]
    fn relevant_set_tracks_permutation() {
        let g = generate(&cfg()).unwrap();
        assert_eq!(g.relevant.len(), 3);
        let mut sorted = g.permutation.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..10).collect::<Vec<_>>());
        let all = generate(&GenConfig { theta_star: 10, ..cfg() }).unwrap();
        assert_eq!(all.relevant, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn classes_are_balanced() {
        let g = generate(&GenConfig { n_train: 51, ..cfg() }).unwrap();
        let pos = g.train.labels().iter().filter(|&&v| v == 1).count();
        assert_eq!(pos, 26);
    }

    #[test]
    fn invalid_configs() {
        assert!(generate(&GenConfig { n_train: 3, ..cfg() }).is_err());
        assert!(generate(&GenConfig { theta_star: 11, ..cfg() }).is_err());
        assert!(generate(&GenConfig { theta_star: 0, ..cfg() }).is_err());
        assert!(generate(&GenConfig { expansion: 0.0, ..cfg() }).is_err());
    }

    #[test]
    fn noise_columns_weakly_correlated_with_labels() {
        for seed in 0..5 {
            let g = generate(&GenConfig { seed, ..cfg() }).unwrap();
            let y: Vec<f64> = g.train.labels().iter().map(|&v| f64::from(v)).collect();
            let ym = y.iter().sum::<f64>() / y.len() as f64;
            let ysd = (y.iter().map(|v| (v - ym).powi(2)).sum::<f64>() / y.len() as f64).sqrt();
            for c in (0..10).filter(|c| !g.relevant.contains(c)) {
                // Columns have zero mean and unit variance.
                let r = g.train.column(c).zip(&y).map(|(a, b)| a * (b - ym)).sum::<f64>() / (y.len() as f64 * ysd);
                assert!(r.abs() < 0.5, "seed {seed} column {c}: {r}");
            }
        }
    }
}
