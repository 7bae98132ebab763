//! Labeled datasets, standardization, subset masks and the instance-pair
//! structure consumed by the objective, the models and the solvers.

use std::fmt;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when checking the zero-mean / unit-variance invariant.
pub const STANDARDIZED_TOL: f64 = 1e-9;

/// An `n x p` real feature matrix (row-major) with `{-1, +1}` labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Vec<f64>,
    y: Vec<i8>,
    n: usize,
    p: usize,
    feature_names: Vec<String>,
    standardized: bool,
}

impl Dataset {
    /// Builds an unstandardized dataset from row-major values.
    pub fn new(x: Vec<f64>, y: Vec<i8>, feature_names: Vec<String>) -> Result<Self> {
        let n = y.len();
        let p = feature_names.len();
        if n == 0 {
            return Err(Error::NoData);
        }
        if p == 0 {
            return Err(Error::invalid("dataset needs at least one feature"));
        }
        if x.len() != n * p {
            return Err(Error::Dimension(format!(
                "feature matrix has {} values, expected {n} x {p}",
                x.len()
            )));
        }
        if let Some(bad) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite value at row {}, column {}",
                bad / p + 1,
                feature_names[bad % p]
            )));
        }
        for (i, &label) in y.iter().enumerate() {
            if label != 1 && label != -1 {
                return Err(Error::Label {
                    row: i + 1,
                    value: label.to_string(),
                });
            }
        }
        let positives = y.iter().filter(|&&v| v == 1).count();
        if n < 2 || positives == 0 || positives == n {
            return Err(Error::LabelBalance(format!(
                "need at least one +1 and one -1 label, found {positives} positive of {n}"
            )));
        }
        Ok(Self {
            x,
            y,
            n,
            p,
            feature_names,
            standardized: false,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn labels(&self) -> &[i8] {
        &self.y
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn is_standardized(&self) -> bool {
        self.standardized
    }

    pub fn values(&self) -> &[f64] {
        &self.x
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.p..(i + 1) * self.p]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.x[i * self.p + j]
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.x[i * self.p + j])
    }

    /// Returns a copy keeping only the given columns, in the given order.
    pub fn select_columns(&self, columns: &[usize]) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::invalid("cannot select zero columns"));
        }
        if let Some(&bad) = columns.iter().find(|&&c| c >= self.p) {
            return Err(Error::Dimension(format!("column {bad} out of range (p = {})", self.p)));
        }
        let mut x = Vec::with_capacity(self.n * columns.len());
        for i in 0..self.n {
            let row = self.row(i);
            x.extend(columns.iter().map(|&c| row[c]));
        }
        let feature_names = columns.iter().map(|&c| self.feature_names[c].clone()).collect();
        Ok(Self {
            x,
            y: self.y.clone(),
            n: self.n,
            p: columns.len(),
            feature_names,
            standardized: self.standardized,
        })
    }

    /// Returns a copy keeping only the given rows.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let mut x = Vec::with_capacity(rows.len() * self.p);
        let mut y = Vec::with_capacity(rows.len());
        for &i in rows {
            if i >= self.n {
                return Err(Error::Dimension(format!("row {i} out of range (n = {})", self.n)));
            }
            x.extend_from_slice(self.row(i));
            y.push(self.y[i]);
        }
        Self::new(x, y, self.feature_names.clone())
    }

    /// Whether every column has zero mean and unit population variance.
    pub fn check_standardized(&self, tol: f64) -> bool {
        (0..self.p).all(|j| {
            let sum: f64 = self.column(j).sum();
            let sq: f64 = self.column(j).map(|v| v * v).sum::<f64>() / self.n as f64;
            sum.abs() <= tol && (sq - 1.0).abs() <= tol
        })
    }

    pub(crate) fn mark_standardized(mut self) -> Self {
        self.standardized = true;
        self
    }

    /// Writes the dataset as CSV with the label column `y` last.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
        let mut header: Vec<&str> = self.feature_names.iter().map(String::as_str).collect();
        header.push("y");
        w.write_record(&header)?;
        let mut record = Vec::with_capacity(self.p + 1);
        for i in 0..self.n {
            record.clear();
            record.extend(self.row(i).iter().map(|v| format!("{v}")));
            record.push(self.y[i].to_string());
            w.write_record(&record)?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

fn is_missing(cell: &str) -> bool {
    matches!(cell, "" | "?" | "NA" | "na" | "NaN" | "nan")
}

/// Reads a CSV with a header row whose final column is the label `y`.
pub fn load_csv(path: &Path) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(std::io::BufReader::new(file))
}

pub fn read_csv<R: std::io::Read>(reader: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header.len() < 2 {
        return Err(Error::invalid("need at least one feature column and a label column"));
    }
    if header.last().map(String::as_str) != Some("y") {
        return Err(Error::invalid("final column must be named \"y\""));
    }
    let names = header[..header.len() - 1].to_vec();
    let p = names.len();

    let mut x = Vec::new();
    let mut y = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let row = r + 1;
        if record.len() != p + 1 {
            return Err(Error::Dimension(format!(
                "row {row} has {} fields, expected {}",
                record.len(),
                p + 1
            )));
        }
        for (j, cell) in record.iter().take(p).enumerate() {
            if is_missing(cell) {
                return Err(Error::MissingValue {
                    row,
                    column: names[j].clone(),
                });
            }
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row,
                column: names[j].clone(),
                value: cell.to_owned(),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row,
                    column: names[j].clone(),
                    value: cell.to_owned(),
                });
            }
            x.push(v);
        }
        let cell = &record[p];
        if is_missing(cell) {
            return Err(Error::MissingValue {
                row,
                column: "y".into(),
            });
        }
        let label = match cell.parse::<f64>() {
            Ok(1.0) => 1,
            Ok(-1.0) => -1,
            _ => {
                return Err(Error::Label {
                    row,
                    value: cell.to_owned(),
                })
            }
        };
        y.push(label);
    }
    if y.is_empty() {
        return Err(Error::NoData);
    }
    Dataset::new(x, y, names)
}

/// Column statistics used to standardize a dataset; reusable on held-out rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    /// Original indices of the columns that were kept.
    pub kept: Vec<usize>,
    pub dropped: Vec<String>,
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
}

impl Standardizer {
    /// Fits zero-mean, unit population variance scaling. Constant columns are
    /// dropped and reported.
    pub fn fit(ds: &Dataset) -> Result<Self> {
        let n = ds.n() as f64;
        let mut kept = Vec::new();
        let mut dropped = Vec::new();
        let mut means = Vec::new();
        let mut scales = Vec::new();
        for j in 0..ds.p() {
            let first = ds.get(0, j);
            if ds.column(j).all(|v| v == first) {
                dropped.push(ds.feature_names()[j].clone());
                continue;
            }
            let mean = ds.column(j).sum::<f64>() / n;
            let var = ds.column(j).map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            if var <= 0.0 {
                dropped.push(ds.feature_names()[j].clone());
                continue;
            }
            kept.push(j);
            means.push(mean);
            scales.push(var.sqrt());
        }
        if kept.is_empty() {
            return Err(Error::invalid("all feature columns are constant"));
        }
        Ok(Self {
            kept,
            dropped,
            means,
            scales,
        })
    }

    /// Applies the fitted scaling to a dataset with the original column layout.
    pub fn transform(&self, ds: &Dataset) -> Result<Dataset> {
        let src_p = ds.p();
        if let Some(&max) = self.kept.iter().max() {
            if max >= src_p {
                return Err(Error::Dimension(format!(
                    "standardizer expects at least {} columns, dataset has {src_p}",
                    max + 1
                )));
            }
        }
        let mut x = Vec::with_capacity(ds.n() * self.kept.len());
        for i in 0..ds.n() {
            let row = ds.row(i);
            for (k, &j) in self.kept.iter().enumerate() {
                x.push((row[j] - self.means[k]) / self.scales[k]);
            }
        }
        let names = self.kept.iter().map(|&j| ds.feature_names()[j].clone()).collect();
        Dataset::new(x, ds.labels().to_vec(), names)
    }
}

/// Result of [`standardize`]: the scaled dataset plus the dropped columns.
#[derive(Debug, Clone)]
pub struct Standardized {
    pub dataset: Dataset,
    pub dropped: Vec<String>,
    pub standardizer: Standardizer,
}

/// Scales each column to zero mean and unit population variance (divide by
/// `n`), dropping constant columns first.
pub fn standardize(ds: &Dataset) -> Result<Standardized> {
    let standardizer = Standardizer::fit(ds)?;
    let dataset = standardizer.transform(ds)?.mark_standardized();
    Ok(Standardized {
        dataset,
        dropped: standardizer.dropped.clone(),
        standardizer,
    })
}

/// Binary feature-selection vector with a cardinality budget.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SubsetMask {
    z: Vec<bool>,
    theta: usize,
}

impl SubsetMask {
    pub fn new(z: Vec<bool>, theta: usize) -> Result<Self> {
        let count = z.iter().filter(|&&b| b).count();
        if theta > z.len() {
            return Err(Error::invalid(format!("budget {theta} exceeds the {} features", z.len())));
        }
        if count > theta {
            return Err(Error::invalid(format!("{count} features selected with budget {theta}")));
        }
        Ok(Self { z, theta })
    }

    /// Mask without the cardinality check; `theta` is set to the count.
    pub fn unbounded(z: Vec<bool>) -> Self {
        let theta = z.iter().filter(|&&b| b).count();
        Self { z, theta }
    }

    pub fn empty(p: usize, theta: usize) -> Result<Self> {
        Self::new(vec![false; p], theta)
    }

    pub fn from_indices(p: usize, indices: &[usize], theta: usize) -> Result<Self> {
        let mut z = vec![false; p];
        for &j in indices {
            if j >= p {
                return Err(Error::Dimension(format!("feature {j} out of range (p = {p})")));
            }
            z[j] = true;
        }
        Self::new(z, theta)
    }

    /// Mask from a bit set; bit `j` selects feature `j`.
    pub fn from_bits(p: usize, bits: u64, theta: usize) -> Result<Self> {
        Self::new((0..p).map(|j| bits >> j & 1 == 1).collect(), theta)
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn theta(&self) -> usize {
        self.theta
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.z
    }

    pub fn is_selected(&self, j: usize) -> bool {
        self.z[j]
    }

    pub fn count(&self) -> usize {
        self.z.iter().filter(|&&b| b).count()
    }

    pub fn selected(&self) -> Vec<usize> {
        self.z.iter().enumerate().filter_map(|(j, &b)| b.then_some(j)).collect()
    }

    /// 0/1 encoding used in JSON outputs.
    pub fn to_bits(&self) -> Vec<u8> {
        self.z.iter().map(|&b| u8::from(b)).collect()
    }
}

impl fmt::Display for SubsetMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let idx: Vec<String> = self.selected().iter().map(|j| (j + 1).to_string()).collect();
        write!(f, "{{{}}}", idx.join(","))
    }
}

/// Sign class of an instance pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairSign {
    /// Same class: `psi_i * psi_h > 0`.
    Plus,
    /// Different classes: `psi_i * psi_h < 0`.
    Minus,
}

/// Scaled labels, the `i < h` instance pairs split by sign, and the per-pair
/// squared feature differences.
#[derive(Debug, Clone)]
pub struct PairStructure {
    n: usize,
    p: usize,
    psi: Vec<f64>,
    pairs: Vec<(usize, usize)>,
    weights: Vec<f64>,
    signs: Vec<PairSign>,
    plus: Vec<usize>,
    minus: Vec<usize>,
    dist: Vec<f64>,
    psi_sq_sum: f64,
}

/// Label vector divided by each class size.
pub fn scaled_labels(y: &[i8]) -> Result<Vec<f64>> {
    let pos = y.iter().filter(|&&v| v == 1).count();
    let neg = y.iter().filter(|&&v| v == -1).count();
    if pos == 0 || neg == 0 {
        return Err(Error::LabelBalance("one class is empty".into()));
    }
    if pos + neg != y.len() {
        return Err(Error::invalid("labels must be -1 or +1"));
    }
    Ok(y.iter()
        .map(|&v| if v == 1 { 1.0 / pos as f64 } else { -1.0 / neg as f64 })
        .collect())
}

impl PairStructure {
    /// Builds the pair structure of a standardized dataset.
    pub fn build(ds: &Dataset) -> Result<Self> {
        if !ds.is_standardized() {
            return Err(Error::invalid("pair structure requires a standardized dataset"));
        }
        Self::build_unchecked(ds)
    }

    /// Same as [`PairStructure::build`] without the standardization check.
    pub fn build_unchecked(ds: &Dataset) -> Result<Self> {
        let psi = scaled_labels(ds.labels())?;
        let n = ds.n();
        let p = ds.p();
        let m = n * (n - 1) / 2;
        let mut pairs = Vec::with_capacity(m);
        let mut weights = Vec::with_capacity(m);
        let mut signs = Vec::with_capacity(m);
        let mut plus = Vec::new();
        let mut minus = Vec::new();
        let mut dist = Vec::with_capacity(m * p);
        for i in 0..n {
            for h in i + 1..n {
                let k = pairs.len();
                let w = psi[i] * psi[h];
                pairs.push((i, h));
                weights.push(w);
                if w > 0.0 {
                    signs.push(PairSign::Plus);
                    plus.push(k);
                } else {
                    signs.push(PairSign::Minus);
                    minus.push(k);
                }
                let (a, b) = (ds.row(i), ds.row(h));
                dist.extend(a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)));
            }
        }
        let psi_sq_sum = psi.iter().map(|v| v * v).sum();
        Ok(Self {
            n,
            p,
            psi,
            pairs,
            weights,
            signs,
            plus,
            minus,
            dist,
            psi_sq_sum,
        })
    }

    /// Pair structure from raw pieces: scaled labels and per-pair distance
    /// rows in lexicographic `(i, h)` order. Used to build instances directly
    /// from distances.
    pub fn from_distances(y: &[i8], p: usize, dist: Vec<f64>) -> Result<Self> {
        let psi = scaled_labels(y)?;
        let n = y.len();
        let m = n * (n - 1) / 2;
        if dist.len() != m * p {
            return Err(Error::Dimension(format!(
                "expected {m} x {p} distances, got {}",
                dist.len()
            )));
        }
        if dist.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(Error::invalid("distances must be finite and nonnegative"));
        }
        let mut pairs = Vec::with_capacity(m);
        let mut weights = Vec::with_capacity(m);
        let mut signs = Vec::with_capacity(m);
        let mut plus = Vec::new();
        let mut minus = Vec::new();
        for i in 0..n {
            for h in i + 1..n {
                let k = pairs.len();
                let w = psi[i] * psi[h];
                pairs.push((i, h));
                weights.push(w);
                if w > 0.0 {
                    signs.push(PairSign::Plus);
                    plus.push(k);
                } else {
                    signs.push(PairSign::Minus);
                    minus.push(k);
                }
            }
        }
        let psi_sq_sum = psi.iter().map(|v| v * v).sum();
        Ok(Self {
            n,
            p,
            psi,
            pairs,
            weights,
            signs,
            plus,
            minus,
            dist,
            psi_sq_sum,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn psi(&self) -> &[f64] {
        &self.psi
    }

    /// Sum of squared scaled labels, the diagonal part of the objective.
    pub fn psi_sq_sum(&self) -> f64 {
        self.psi_sq_sum
    }

    pub fn num_pairs(&self) -> usize {
        self.pairs.len()
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// `psi_i * psi_h` for pair `k`.
    pub fn weight(&self, k: usize) -> f64 {
        self.weights[k]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn sign(&self, k: usize) -> PairSign {
        self.signs[k]
    }

    /// Indices (into [`PairStructure::pairs`]) of same-class pairs.
    pub fn plus(&self) -> &[usize] {
        &self.plus
    }

    /// Indices of different-class pairs.
    pub fn minus(&self) -> &[usize] {
        &self.minus
    }

    /// Squared feature differences of pair `k`.
    pub fn dist(&self, k: usize) -> &[f64] {
        &self.dist[k * self.p..(k + 1) * self.p]
    }

    /// Squared difference for an arbitrary ordered instance pair; zero on the
    /// diagonal.
    pub fn dist_between(&self, i: usize, h: usize, j: usize) -> f64 {
        if i == h {
            return 0.0;
        }
        let (a, b) = if i < h { (i, h) } else { (h, i) };
        self.dist(self.pair_index(a, b))[j]
    }

    /// Position of pair `(i, h)`, `i < h`, in lexicographic order.
    pub fn pair_index(&self, i: usize, h: usize) -> usize {
        debug_assert!(i < h && h < self.n);
        i * (2 * self.n - i - 1) / 2 + (h - i - 1)
    }
}
