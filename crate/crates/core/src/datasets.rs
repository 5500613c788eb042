//! Multi-view dataset representation, the on-disk text formats, column
//! normalization, and a synthetic multi-subspace generator for desk-scale
//! testing.
//!
//! On-disk layout: one numeric text file per view (comma-separated floats,
//! rows = features, columns = samples, no header), an optional label file
//! (one 0-based integer per line), and a manifest of `key = value` lines
//! with keys `view` (repeatable, ordered), `labels` (optional), `clusters`,
//! and `normalize` (`unit` or `none`). Relative paths in a manifest are
//! resolved against the manifest's directory. Sample order is the
//! alignment contract: column i of every view and line i of the label
//! file refer to the same entity.

use ndarray::{Array2, ArrayView2};
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// A set of feature matrices (columns = samples) over the same entities.
#[derive(Debug, Clone)]
pub struct MultiViewDataset {
    views: Vec<Array2<f64>>,
    labels: Option<Vec<usize>>,
    clusters: usize,
    names: Vec<String>,
}

impl MultiViewDataset {
    pub fn new(
        views: Vec<Array2<f64>>,
        labels: Option<Vec<usize>>,
        clusters: usize,
        names: Vec<String>,
    ) -> Result<Self> {
        if views.is_empty() {
            return Err(Error::InvalidInput("dataset needs at least one view".into()));
        }
        if names.len() != views.len() {
            return Err(Error::InvalidInput(format!(
                "{} view names for {} views",
                names.len(),
                views.len()
            )));
        }
        let n = views[0].ncols();
        for (v, view) in views.iter().enumerate() {
            if view.ncols() != n {
                return Err(Error::DimensionMismatch(format!(
                    "view '{}' has {} samples but view '{}' has {}",
                    names[0],
                    n,
                    names[v],
                    view.ncols()
                )));
            }
            if view.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "view '{}' contains non-finite entries",
                    names[v]
                )));
            }
        }
        if clusters < 2 {
            return Err(Error::InvalidInput(format!(
                "cluster count must be at least 2, got {clusters}"
            )));
        }
        if let Some(ref l) = labels {
            if l.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "{} labels for {} samples",
                    l.len(),
                    n
                )));
            }
            if n < clusters {
                return Err(Error::InvalidInput(format!(
                    "{n} samples cannot carry {clusters} clusters"
                )));
            }
            if let Some(&bad) = l.iter().find(|&&x| x >= clusters) {
                return Err(Error::LabelOutOfRange(format!(
                    "label {bad} outside [0, {clusters})"
                )));
            }
        }
        Ok(Self {
            views,
            labels,
            clusters,
            names,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.views[0].ncols()
    }

    pub fn n_views(&self) -> usize {
        self.views.len()
    }

    pub fn views(&self) -> &[Array2<f64>] {
        &self.views
    }

    pub fn view(&self, v: usize) -> &Array2<f64> {
        &self.views[v]
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn clusters(&self) -> usize {
        self.clusters
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// Parameters of the synthetic multi-subspace generator.
#[derive(Debug, Clone)]
pub struct SynthSpec {
    pub clusters: usize,
    pub samples_per_cluster: usize,
    pub views: usize,
    /// Ambient feature count per view; length must equal `views`.
    pub ambient_dims: Vec<usize>,
    pub subspace_dim: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SynthSpec {
    fn validate(&self) -> Result<()> {
        if self.clusters < 2
            || self.samples_per_cluster == 0
            || self.views == 0
            || self.subspace_dim == 0
        {
            return Err(Error::InvalidInput(
                "synthetic spec counts must be positive (clusters >= 2)".into(),
            ));
        }
        if self.ambient_dims.len() != self.views {
            return Err(Error::InvalidInput(format!(
                "{} ambient dims for {} views",
                self.ambient_dims.len(),
                self.views
            )));
        }
        if let Some(&m) = self.ambient_dims.iter().min() {
            if self.subspace_dim >= m {
                return Err(Error::InvalidInput(format!(
                    "subspace dim {} must be below the smallest ambient dim {m}",
                    self.subspace_dim
                )));
            }
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::InvalidInput("noise sigma must be >= 0".into()));
        }
        Ok(())
    }
}

/// Scale every column to unit Euclidean norm; all-zero columns are kept.
pub fn normalize_unit_columns(x: &Array2<f64>) -> Array2<f64> {
    let mut out = x.clone();
    for mut col in out.columns_mut() {
        let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            col /= norm;
        }
    }
    out
}

/// Random orthonormal basis via modified Gram-Schmidt on Gaussian draws.
fn random_basis(rng: &mut ChaCha12Rng, m: usize, d: usize) -> Array2<f64> {
    let mut q = Array2::from_shape_fn((m, d), |_| rng.sample::<f64, _>(StandardNormal));
    for j in 0..d {
        for i in 0..j {
            let prev = q.column(i).to_owned();
            let proj = q.column(j).dot(&prev);
            q.column_mut(j).scaled_add(-proj, &prev);
        }
        let norm = q.column(j).dot(&q.column(j)).sqrt();
        if norm > 0.0 {
            let mut col = q.column_mut(j);
            col /= norm;
        }
    }
    q
}

/// Draws per-cluster random subspaces per view and samples within them,
/// plus isotropic Gaussian noise. Deterministic for a fixed seed.
pub fn synth_multiview(spec: &SynthSpec) -> Result<MultiViewDataset> {
    spec.validate()?;
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    let n = spec.clusters * spec.samples_per_cluster;
    let labels: Vec<usize> = (0..n).map(|i| i / spec.samples_per_cluster).collect();
    let mut views = Vec::with_capacity(spec.views);
    for &m in &spec.ambient_dims {
        let mut x = Array2::zeros((m, n));
        for cluster in 0..spec.clusters {
            let basis = random_basis(&mut rng, m, spec.subspace_dim);
            let coeffs = Array2::from_shape_fn((spec.subspace_dim, spec.samples_per_cluster), |_| {
                rng.sample::<f64, _>(StandardNormal)
            });
            let block = basis.dot(&coeffs);
            let start = cluster * spec.samples_per_cluster;
            x.slice_mut(ndarray::s![.., start..start + spec.samples_per_cluster])
                .assign(&block);
        }
        if spec.noise_sigma > 0.0 {
            for v in x.iter_mut() {
                *v += spec.noise_sigma * rng.sample::<f64, _>(StandardNormal);
            }
        }
        views.push(x);
    }
    let names = (0..spec.views).map(|v| format!("view{v}")).collect();
    MultiViewDataset::new(views, Some(labels), spec.clusters, names)
}

/// Writes `content` to `path` atomically (temp file in the same directory,
/// then rename) so interrupted runs never leave partial artifacts.
pub fn write_atomic(path: &Path, content: &str) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let mut tmp = PathBuf::from(dir);
    let stem = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "artifact".into());
    tmp.push(format!(".{stem}.tmp"));
    fs::write(&tmp, content).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Serializes a matrix in the documented text format with 17 significant
/// digits, which round-trips every f64 exactly.
pub fn save_matrix(m: ArrayView2<'_, f64>, path: &Path) -> Result<()> {
    let mut out = String::with_capacity(m.len() * 24);
    for row in m.rows() {
        let mut first = true;
        for v in row {
            if !first {
                out.push(',');
            }
            write!(out, "{v:.16e}").expect("write to string");
            first = false;
        }
        out.push('\n');
    }
    write_atomic(path, &out)
}

pub fn load_matrix(path: &Path) -> Result<Array2<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for field in line.split(',') {
            let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
                path: path.into(),
                line: lineno + 1,
                message: format!("not a float: {:?}", field.trim()),
            })?;
            row.push(v);
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::Parse {
                    path: path.into(),
                    line: lineno + 1,
                    message: format!("expected {} columns, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            path: path.into(),
            line: 0,
            message: "empty matrix file".into(),
        });
    }
    let (r, c) = (rows.len(), rows[0].len());
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Array2::from_shape_vec((r, c), flat)
        .map_err(|e| Error::InvalidInput(format!("matrix shape error: {e}")))
}

pub fn save_labels(labels: &[usize], path: &Path) -> Result<()> {
    let mut out = String::new();
    for l in labels {
        writeln!(out, "{l}").expect("write to string");
    }
    write_atomic(path, &out)
}

pub fn load_labels(path: &Path) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut labels = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let v: usize = t.parse().map_err(|_| Error::Parse {
            path: path.into(),
            line: lineno + 1,
            message: format!("not a nonnegative integer: {t:?}"),
        })?;
        labels.push(v);
    }
    Ok(labels)
}

/// Column normalization named in a manifest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalize {
    Unit,
    None,
}

/// Parsed manifest prior to loading the referenced files.
#[derive(Debug, Clone)]
pub struct Manifest {
    pub views: Vec<PathBuf>,
    pub labels: Option<PathBuf>,
    pub clusters: usize,
    pub normalize: Normalize,
}

impl Manifest {
    pub fn parse(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let mut views = Vec::new();
        let mut labels = None;
        let mut clusters = None;
        let mut normalize = Normalize::Unit;
        for (lineno, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let (key, value) = t.split_once('=').ok_or_else(|| Error::Parse {
                path: path.into(),
                line: lineno + 1,
                message: format!("expected `key = value`, got {t:?}"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "view" => views.push(base.join(value)),
                "labels" => labels = Some(base.join(value)),
                "clusters" => {
                    clusters = Some(value.parse().map_err(|_| Error::Parse {
                        path: path.into(),
                        line: lineno + 1,
                        message: format!("clusters must be an integer, got {value:?}"),
                    })?)
                }
                "normalize" => {
                    normalize = match value {
                        "unit" => Normalize::Unit,
                        "none" => Normalize::None,
                        other => {
                            return Err(Error::Parse {
                                path: path.into(),
                                line: lineno + 1,
                                message: format!("normalize must be unit|none, got {other:?}"),
                            })
                        }
                    }
                }
                other => {
                    return Err(Error::Parse {
                        path: path.into(),
                        line: lineno + 1,
                        message: format!("unknown manifest key {other:?}"),
                    })
                }
            }
        }
        if views.is_empty() {
            return Err(Error::Parse {
                path: path.into(),
                line: 0,
                message: "manifest lists no views".into(),
            });
        }
        let clusters = clusters.ok_or_else(|| Error::Parse {
            path: path.into(),
            line: 0,
            message: "manifest is missing `clusters`".into(),
        })?;
        Ok(Self {
            views,
            labels,
            clusters,
            normalize,
        })
    }
}

/// Loads every referenced matrix and the optional label file, validates
/// cross-view consistency, and applies the configured normalization.
pub fn load_manifest(path: &Path) -> Result<MultiViewDataset> {
    let manifest = Manifest::parse(path)?;
    let mut views = Vec::with_capacity(manifest.views.len());
    let mut names = Vec::with_capacity(manifest.views.len());
    for vp in &manifest.views {
        let m = load_matrix(vp)?;
        names.push(vp.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default());
        views.push(m);
    }
    // name mismatching views explicitly before the generic constructor runs
    let n = views[0].ncols();
    for (idx, view) in views.iter().enumerate() {
        if view.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "view '{}' has {} samples but view '{}' has {}",
                names[0],
                n,
                names[idx],
                view.ncols()
            )));
        }
    }
    if manifest.normalize == Normalize::Unit {
        views = views.iter().map(normalize_unit_columns).collect();
    }
    let labels = manifest.labels.as_deref().map(load_labels).transpose()?;
    MultiViewDataset::new(views, labels, manifest.clusters, names)
}

/// Writes views, labels and manifest for a synthetic dataset into `dir`;
/// returns the manifest path.
pub fn write_dataset(data: &MultiViewDataset, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = String::new();
    for (v, view) in data.views().iter().enumerate() {
        let name = format!("view{v}.csv");
        save_matrix(view.view(), &dir.join(&name))?;
        writeln!(manifest, "view = {name}").expect("write to string");
    }
    if let Some(labels) = data.labels() {
        save_labels(labels, &dir.join("labels.txt"))?;
        writeln!(manifest, "labels = labels.txt").expect("write to string");
    }
    writeln!(manifest, "clusters = {}", data.clusters()).expect("write to string");
    writeln!(manifest, "normalize = unit").expect("write to string");
    let mp = dir.join("manifest.txt");
    write_atomic(&mp, &manifest)?;
    Ok(mp)
}
