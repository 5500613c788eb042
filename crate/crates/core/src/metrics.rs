//! Clustering evaluation: ACC, NMI, purity, pairwise precision/recall/
//! F-score, and adjusted Rand index, plus the assignment solver that ACC
//! needs for optimal label matching.

use ndarray::Array2;
use std::collections::HashMap;

use crate::error::{Error, Result};

/// Contingency table between a predicted and a true partition.
#[derive(Debug, Clone)]
pub struct Contingency {
    counts: Vec<Vec<usize>>,
    pred_sizes: Vec<usize>,
    truth_sizes: Vec<usize>,
    n: usize,
}

impl Contingency {
    /// Builds the table from two equal-length label sequences. Labels may
    /// be arbitrary nonnegative integers; they are compacted internally.
    pub fn from_labels(pred: &[usize], truth: &[usize]) -> Result<Self> {
        if pred.len() != truth.len() {
            return Err(Error::DimensionMismatch(format!(
                "label length mismatch: {} vs {}",
                pred.len(),
                truth.len()
            )));
        }
        if pred.is_empty() {
            return Err(Error::InvalidInput("empty label sequences".into()));
        }
        let mut pred_ids: HashMap<usize, usize> = HashMap::new();
        let mut truth_ids: HashMap<usize, usize> = HashMap::new();
        for &p in pred {
            let next = pred_ids.len();
            pred_ids.entry(p).or_insert(next);
        }
        for &t in truth {
            let next = truth_ids.len();
            truth_ids.entry(t).or_insert(next);
        }
        let (kp, kt) = (pred_ids.len(), truth_ids.len());
        let mut counts = vec![vec![0usize; kt]; kp];
        for (&p, &t) in pred.iter().zip(truth.iter()) {
            counts[pred_ids[&p]][truth_ids[&t]] += 1;
        }
        let pred_sizes: Vec<usize> = counts.iter().map(|r| r.iter().sum()).collect();
        let truth_sizes: Vec<usize> = (0..kt).map(|j| counts.iter().map(|r| r[j]).sum()).collect();
        Ok(Self {
            counts,
            pred_sizes,
            truth_sizes,
            n: pred.len(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn counts(&self) -> &[Vec<usize>] {
        &self.counts
    }
}

/// Minimum-cost assignment on a square cost matrix (Kuhn-Munkres via
/// shortest augmenting paths). Returns `perm` with row `i` assigned to
/// column `perm[i]`.
pub fn hungarian(cost: &Array2<f64>) -> Result<Vec<usize>> {
    if !cost.is_square() {
        return Err(Error::InvalidInput(format!(
            "hungarian needs a square matrix, got {:?}",
            cost.dim()
        )));
    }
    if cost.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("hungarian needs finite costs".into()));
    }
    let n = cost.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    // potentials-based O(n^3) formulation, 1-indexed internally
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut matched_col_to_row = vec![0usize; n + 1]; // 0 = free
    for i in 1..=n {
        matched_col_to_row[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched_col_to_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[[i0 - 1, j - 1]] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched_col_to_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched_col_to_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched_col_to_row[j0] = matched_col_to_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut perm = vec![0usize; n];
    for j in 1..=n {
        perm[matched_col_to_row[j] - 1] = j - 1;
    }
    Ok(perm)
}

/// Clustering accuracy: best fraction of agreeing samples over all
/// matchings of predicted to true clusters.
pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let table = Contingency::from_labels(pred, truth)?;
    let k = table.counts.len().max(table.truth_sizes.len());
    // pad to square with zeros, negate counts so min-cost = max-match
    let mut cost = Array2::zeros((k, k));
    for (i, row) in table.counts.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            cost[[i, j]] = -(c as f64);
        }
    }
    let perm = hungarian(&cost)?;
    let matched: f64 = perm
        .iter()
        .enumerate()
        .map(|(i, &j)| -cost[[i, j]])
        .sum();
    Ok(matched / table.n as f64)
}

/// Normalized mutual information with geometric-mean normalization,
/// natural logarithm. Both partitions trivial (zero entropy) gives 1;
/// exactly one trivial gives 0.
pub fn nmi(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let table = Contingency::from_labels(pred, truth)?;
    let n = table.n as f64;
    let h = |sizes: &[usize]| -> f64 {
        sizes
            .iter()
            .filter(|&&s| s > 0)
            .map(|&s| {
                let p = s as f64 / n;
                -p * p.ln()
            })
            .sum()
    };
    let hp = h(&table.pred_sizes);
    let ht = h(&table.truth_sizes);
    if hp == 0.0 && ht == 0.0 {
        return Ok(1.0);
    }
    if hp == 0.0 || ht == 0.0 {
        return Ok(0.0);
    }
    let mut mi = 0.0;
    for (i, row) in table.counts.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c > 0 {
                let pij = c as f64 / n;
                let pi = table.pred_sizes[i] as f64 / n;
                let pj = table.truth_sizes[j] as f64 / n;
                mi += pij * (pij / (pi * pj)).ln();
            }
        }
    }
    Ok((mi / (hp * ht).sqrt()).clamp(0.0, 1.0))
}

/// Fraction of samples covered by the majority true class of their
/// predicted cluster.
pub fn purity(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let table = Contingency::from_labels(pred, truth)?;
    let covered: usize = table
        .counts
        .iter()
        .map(|row| row.iter().copied().max().unwrap_or(0))
        .sum();
    Ok(covered as f64 / table.n as f64)
}

fn choose2(x: usize) -> f64 {
    (x as f64) * (x as f64 - 1.0) / 2.0
}

/// Pairwise precision, recall and F-score over all sample pairs, with 0
/// substituted on 0/0.
pub fn pairwise_prf(pred: &[usize], truth: &[usize]) -> Result<(f64, f64, f64)> {
    let table = Contingency::from_labels(pred, truth)?;
    if table.n < 2 {
        return Err(Error::InvalidInput(
            "pairwise metrics need at least 2 samples".into(),
        ));
    }
    let tp: f64 = table
        .counts
        .iter()
        .flat_map(|r| r.iter())
        .map(|&c| choose2(c))
        .sum();
    let pred_pairs: f64 = table.pred_sizes.iter().map(|&a| choose2(a)).sum();
    let truth_pairs: f64 = table.truth_sizes.iter().map(|&b| choose2(b)).sum();
    let p = if pred_pairs > 0.0 { tp / pred_pairs } else { 0.0 };
    let r = if truth_pairs > 0.0 { tp / truth_pairs } else { 0.0 };
    let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
    Ok((p, r, f))
}

/// Adjusted Rand index from the contingency table. A zero denominator
/// only occurs for identical trivial partitions, where the index is 1.
pub fn ari(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let table = Contingency::from_labels(pred, truth)?;
    if table.n < 2 {
        return Err(Error::InvalidInput("ARI needs at least 2 samples".into()));
    }
    let sum_ij: f64 = table
        .counts
        .iter()
        .flat_map(|r| r.iter())
        .map(|&c| choose2(c))
        .sum();
    let sum_a: f64 = table.pred_sizes.iter().map(|&a| choose2(a)).sum();
    let sum_b: f64 = table.truth_sizes.iter().map(|&b| choose2(b)).sum();
    let expected = sum_a * sum_b / choose2(table.n);
    let denom = 0.5 * (sum_a + sum_b) - expected;
    if denom == 0.0 {
        return Ok(1.0);
    }
    Ok((sum_ij - expected) / denom)
}

/// All seven scores in one pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSet {
    pub acc: f64,
    pub nmi: f64,
    pub purity: f64,
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
    pub ari: f64,
}

impl MetricSet {
    pub fn compute(pred: &[usize], truth: &[usize]) -> Result<Self> {
        let (precision, recall, f_score) = pairwise_prf(pred, truth)?;
        Ok(Self {
            acc: accuracy(pred, truth)?,
            nmi: nmi(pred, truth)?,
            purity: purity(pred, truth)?,
            precision,
            recall,
            f_score,
            ari: ari(pred, truth)?,
        })
    }

    /// (name, value) pairs in the reporting order.
    pub fn named(&self) -> [(&'static str, f64); 7] {
        [
            ("acc", self.acc),
            ("nmi", self.nmi),
            ("purity", self.purity),
            ("precision", self.precision),
            ("recall", self.recall),
            ("f_score", self.f_score),
            ("ari", self.ari),
        ]
    }
}
