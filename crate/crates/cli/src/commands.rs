//! The four subcommands. Flag structs are clap-derived so the binary
//! stays a thin wrapper and tests can drive commands directly.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use clap::Args;

use umcev_core::clustering::{fuse_affinity, spectral_cluster};
use umcev_core::datasets::{
    load_labels, load_manifest, save_labels, save_matrix, synth_multiview, write_atomic,
    write_dataset, SynthSpec,
};
use umcev_core::error::{Error, Result};
use umcev_core::metrics::MetricSet;
use umcev_core::solver::{AdmmEngine, IterationTrace, SolverConfig, Variant};

use crate::report::RunReport;
use crate::{derive_seed, LAMBDA_LADDER};

/// Solver parameter overrides shared by `cluster` and `sweep`.
/// Precedence: built-in defaults < `--config` file < flags.
#[derive(Args, Debug, Clone, Default)]
pub struct SolverOverrides {
    /// Key-value config file with the same keys as these flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub lambda1: Option<f64>,
    #[arg(long)]
    pub lambda2: Option<f64>,
    #[arg(long)]
    pub lambda3: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub mu1: Option<f64>,
    #[arg(long)]
    pub mu2: Option<f64>,
    #[arg(long)]
    pub rho1: Option<f64>,
    #[arg(long)]
    pub mu_max: Option<f64>,
    /// Model variant: umc-cev, ml0-lssc or mlrr-agr.
    #[arg(long)]
    pub variant: Option<String>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub knn_k: Option<usize>,
    /// Use the published update formulas verbatim (comparison runs).
    #[arg(long)]
    pub printed_updates: bool,
}

impl SolverOverrides {
    /// Resolves the final solver configuration.
    pub fn resolve(&self, seed: u64) -> Result<SolverConfig> {
        let mut cfg = SolverConfig::default();
        if let Some(path) = &self.config {
            apply_config_file(&mut cfg, path)?;
        }
        macro_rules! take {
            ($field:ident) => {
                if let Some(v) = self.$field {
                    cfg.$field = v;
                }
            };
        }
        take!(lambda1);
        take!(lambda2);
        take!(lambda3);
        take!(eta);
        take!(gamma);
        take!(mu);
        take!(mu1);
        take!(mu2);
        take!(rho1);
        take!(mu_max);
        take!(max_iter);
        take!(tol);
        if let Some(k) = self.knn_k {
            cfg.knn_k = Some(k);
        }
        if let Some(v) = &self.variant {
            cfg.variant = Variant::from_str(v)?;
        }
        if self.printed_updates {
            cfg.printed_updates = true;
        }
        cfg.seed = seed;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn apply_config_file(cfg: &mut SolverConfig, path: &PathBuf) -> Result<()> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path.clone(), e))?;
    for (lineno, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let (key, value) = t.split_once('=').ok_or_else(|| Error::Parse {
            path: path.clone(),
            line: lineno + 1,
            message: format!("expected `key = value`, got {t:?}"),
        })?;
        let (key, value) = (key.trim().replace('-', "_"), value.trim());
        let parse_f64 = |v: &str| -> Result<f64> {
            v.parse().map_err(|_| Error::Parse {
                path: path.clone(),
                line: lineno + 1,
                message: format!("not a number: {v:?}"),
            })
        };
        match key.as_str() {
            "lambda1" => cfg.lambda1 = parse_f64(value)?,
            "lambda2" => cfg.lambda2 = parse_f64(value)?,
            "lambda3" => cfg.lambda3 = parse_f64(value)?,
            "eta" => cfg.eta = parse_f64(value)?,
            "gamma" => cfg.gamma = parse_f64(value)?,
            "mu" => cfg.mu = parse_f64(value)?,
            "mu1" => cfg.mu1 = parse_f64(value)?,
            "mu2" => cfg.mu2 = parse_f64(value)?,
            "rho1" => cfg.rho1 = parse_f64(value)?,
            "mu_max" => cfg.mu_max = parse_f64(value)?,
            "tol" => cfg.tol = parse_f64(value)?,
            "max_iter" => {
                cfg.max_iter = value.parse().map_err(|_| Error::Parse {
                    path: path.clone(),
                    line: lineno + 1,
                    message: format!("not an integer: {value:?}"),
                })?
            }
            "knn_k" => {
                cfg.knn_k = Some(value.parse().map_err(|_| Error::Parse {
                    path: path.clone(),
                    line: lineno + 1,
                    message: format!("not an integer: {value:?}"),
                })?)
            }
            "variant" => cfg.variant = Variant::from_str(value)?,
            "printed_updates" => {
                cfg.printed_updates = value.parse().map_err(|_| Error::Parse {
                    path: path.clone(),
                    line: lineno + 1,
                    message: format!("not a bool: {value:?}"),
                })?
            }
            other => {
                return Err(Error::Parse {
                    path: path.clone(),
                    line: lineno + 1,
                    message: format!("unknown config key {other:?}"),
                })
            }
        }
    }
    Ok(())
}

#[derive(Args, Debug, Clone)]
pub struct ClusterArgs {
    /// Dataset manifest path.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Clustering repeats with derived seeds.
    #[arg(long, default_value_t = 10)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory for labels, affinity, trace and report.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[command(flatten)]
    pub overrides: SolverOverrides,
}

/// Runs the solver once (it is deterministic for a dataset), clusters the
/// fused affinity `repeats` times with derived seeds, and writes labels,
/// the affinity matrix, the convergence trace and the report.
pub fn cluster(args: &ClusterArgs) -> Result<RunReport> {
    if args.repeats == 0 {
        return Err(Error::InvalidInput("repeats must be at least 1".into()));
    }
    let start = Instant::now();
    let cfg = args.overrides.resolve(args.seed)?;
    let data = load_manifest(&args.manifest)?;
    let mut engine = AdmmEngine::new(&data, cfg.clone())?;
    let (state, trace) = engine.run()?;
    let (z, us) = engine.fusion_inputs(&state);
    let affinity = fuse_affinity(z, us)?;

    fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let mut artifacts = Vec::new();

    let affinity_path = args.out.join("affinity.csv");
    save_matrix(affinity.matrix().view(), &affinity_path)?;
    artifacts.push(("affinity".to_string(), affinity_path));

    let trace_path = args.out.join("trace.csv");
    write_atomic(&trace_path, &trace_csv(&trace))?;
    artifacts.push(("trace".to_string(), trace_path));

    let mut metric_runs = data.labels().map(|_| Vec::with_capacity(args.repeats));
    for r in 0..args.repeats {
        let assignment =
            spectral_cluster(&affinity, data.clusters(), derive_seed(args.seed, r as u64))?;
        let labels_path = args.out.join(format!("labels_run{r}.txt"));
        save_labels(assignment.labels(), &labels_path)?;
        artifacts.push((format!("labels_run{r}"), labels_path));
        if let (Some(runs), Some(truth)) = (metric_runs.as_mut(), data.labels()) {
            runs.push(MetricSet::compute(assignment.labels(), truth)?);
        }
    }

    let report = RunReport {
        manifest: args.manifest.display().to_string(),
        config: cfg,
        repeats: args.repeats,
        seed: args.seed,
        iterations: trace.len(),
        wall_time_s: start.elapsed().as_secs_f64(),
        metric_runs,
        artifacts,
    };
    write_atomic(&args.out.join("report.txt"), &report.to_text())?;
    Ok(report)
}

fn trace_csv(trace: &IterationTrace) -> String {
    let mut out = String::from("iter,r_zs,r_u1,r_u2,r_recon,objective\n");
    for r in &trace.records {
        writeln!(
            out,
            "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            r.iter, r.r_zs, r.r_u1, r.r_u2, r.r_recon, r.objective
        )
        .unwrap();
    }
    out
}

#[derive(Args, Debug, Clone)]
pub struct SynthArgs {
    #[arg(long, default_value = "synth-out")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub clusters: usize,
    #[arg(long, default_value_t = 20)]
    pub per_cluster: usize,
    #[arg(long, default_value_t = 2)]
    pub views: usize,
    /// Ambient feature count per view, comma separated. A single value is
    /// replicated across views.
    #[arg(long, default_value = "10,15", value_delimiter = ',')]
    pub dims: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    pub subspace_dim: usize,
    #[arg(long, default_value_t = 0.01)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Generates a synthetic dataset and writes it in the manifest format;
/// returns the manifest path.
pub fn synth(args: &SynthArgs) -> Result<PathBuf> {
    let dims = if args.dims.len() == 1 && args.views > 1 {
        vec![args.dims[0]; args.views]
    } else {
        args.dims.clone()
    };
    let spec = SynthSpec {
        clusters: args.clusters,
        samples_per_cluster: args.per_cluster,
        views: args.views,
        ambient_dims: dims,
        subspace_dim: args.subspace_dim,
        noise_sigma: args.noise,
        seed: args.seed,
    };
    let data = synth_multiview(&spec)?;
    write_dataset(&data, &args.out)
}

#[derive(Args, Debug, Clone)]
pub struct EvalArgs {
    /// Predicted labels, one integer per line.
    #[arg(long)]
    pub pred: PathBuf,
    /// Ground-truth labels, one integer per line.
    #[arg(long)]
    pub truth: PathBuf,
}

/// Scores a predicted label file against ground truth; returns the
/// printed key-value text.
pub fn eval(args: &EvalArgs) -> Result<String> {
    let pred = load_labels(&args.pred)?;
    let truth = load_labels(&args.truth)?;
    let metrics = MetricSet::compute(&pred, &truth)?;
    let mut out = String::new();
    for (name, value) in metrics.named() {
        writeln!(out, "{name} = {value:.6}").unwrap();
    }
    Ok(out)
}

/// Which trade-off parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Lambda1,
    Lambda2,
    Lambda3,
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lambda1" => Ok(SweepParam::Lambda1),
            "lambda2" => Ok(SweepParam::Lambda2),
            "lambda3" => Ok(SweepParam::Lambda3),
            other => Err(Error::InvalidInput(format!(
                "unknown sweep parameter {other:?} (expected lambda1, lambda2 or lambda3)"
            ))),
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct SweepArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Parameter to vary: lambda1, lambda2 or lambda3.
    #[arg(long)]
    pub param: String,
    /// Grid values; defaults to the published nine-decade ladder.
    #[arg(long, value_delimiter = ',')]
    pub values: Option<Vec<f64>>,
    #[arg(long, default_value_t = 10)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "sweep-out")]
    pub out: PathBuf,
    #[command(flatten)]
    pub overrides: SolverOverrides,
}

/// One row of the sweep table.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: f64,
    pub summary: Vec<(&'static str, f64, f64)>,
}

/// Runs the cluster pipeline per grid point and writes `sweep.csv`.
pub fn sweep(args: &SweepArgs) -> Result<Vec<SweepRow>> {
    let param = SweepParam::from_str(&args.param)?;
    let values: Vec<f64> = args
        .values
        .clone()
        .unwrap_or_else(|| LAMBDA_LADDER.to_vec());
    if values.is_empty() {
        return Err(Error::InvalidInput("sweep grid is empty".into()));
    }
    let data = load_manifest(&args.manifest)?;
    if data.labels().is_none() {
        return Err(Error::InvalidInput(
            "sweep needs ground-truth labels to tabulate metrics".into(),
        ));
    }
    fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let mut rows = Vec::with_capacity(values.len());
    for &value in &values {
        let mut cfg = args.overrides.resolve(args.seed)?;
        match param {
            SweepParam::Lambda1 => cfg.lambda1 = value,
            SweepParam::Lambda2 => cfg.lambda2 = value,
            SweepParam::Lambda3 => cfg.lambda3 = value,
        }
        let mut engine = AdmmEngine::new(&data, cfg)?;
        let (state, _) = engine.run()?;
        let (z, us) = engine.fusion_inputs(&state);
        let affinity = fuse_affinity(z, us)?;
        let truth = data.labels().expect("checked above");
        let mut runs = Vec::with_capacity(args.repeats);
        for r in 0..args.repeats {
            let assignment =
                spectral_cluster(&affinity, data.clusters(), derive_seed(args.seed, r as u64))?;
            runs.push(MetricSet::compute(assignment.labels(), truth)?);
        }
        let names = runs[0].named();
        let summary: Vec<(&'static str, f64, f64)> = names
            .iter()
            .enumerate()
            .map(|(idx, (name, _))| {
                let vals: Vec<f64> = runs.iter().map(|m| m.named()[idx].1).collect();
                let (mean, std) = crate::report::mean_std(&vals);
                (*name, mean, std)
            })
            .collect();
        rows.push(SweepRow { value, summary });
    }

    let mut csv = String::from("value");
    for (name, _, _) in &rows[0].summary {
        write!(csv, ",{name}_mean,{name}_std").unwrap();
    }
    csv.push('\n');
    for row in &rows {
        write!(csv, "{:.17e}", row.value).unwrap();
        for (_, mean, std) in &row.summary {
            write!(csv, ",{mean:.17e},{std:.17e}").unwrap();
        }
        csv.push('\n');
    }
    write_atomic(&args.out.join("sweep.csv"), &csv)?;
    Ok(rows)
}
