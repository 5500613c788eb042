//! The structured key-value run report emitted by `cluster` and consumed
//! by the sweep table writer.

use std::fmt::Write as _;
use std::path::PathBuf;

use umcev_core::metrics::MetricSet;
use umcev_core::solver::SolverConfig;

/// Everything one `cluster` invocation produced.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub manifest: String,
    pub config: SolverConfig,
    pub repeats: usize,
    pub seed: u64,
    pub iterations: usize,
    pub wall_time_s: f64,
    /// One metric set per repeat; absent when the dataset carries no labels.
    pub metric_runs: Option<Vec<MetricSet>>,
    /// (key, path) pairs of written artifacts.
    pub artifacts: Vec<(String, PathBuf)>,
}

/// Population mean and standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl RunReport {
    /// Per-metric (name, mean, std) rows in reporting order.
    pub fn metric_summary(&self) -> Option<Vec<(&'static str, f64, f64)>> {
        let runs = self.metric_runs.as_ref()?;
        let names = runs[0].named();
        let mut out = Vec::with_capacity(names.len());
        for (idx, (name, _)) in names.iter().enumerate() {
            let values: Vec<f64> = runs.iter().map(|m| m.named()[idx].1).collect();
            let (mean, std) = mean_std(&values);
            out.push((*name, mean, std));
        }
        Some(out)
    }

    /// The key-value text written to `report.txt`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let c = &self.config;
        writeln!(out, "command = cluster").unwrap();
        writeln!(out, "manifest = {}", self.manifest).unwrap();
        writeln!(out, "variant = {}", c.variant).unwrap();
        writeln!(out, "repeats = {}", self.repeats).unwrap();
        writeln!(out, "seed = {}", self.seed).unwrap();
        writeln!(out, "lambda1 = {}", c.lambda1).unwrap();
        writeln!(out, "lambda2 = {}", c.lambda2).unwrap();
        writeln!(out, "lambda3 = {}", c.lambda3).unwrap();
        writeln!(out, "eta = {}", c.eta).unwrap();
        writeln!(out, "gamma = {}", c.gamma).unwrap();
        writeln!(out, "mu = {}", c.mu).unwrap();
        writeln!(out, "mu1 = {}", c.mu1).unwrap();
        writeln!(out, "mu2 = {}", c.mu2).unwrap();
        writeln!(out, "rho1 = {}", c.rho1).unwrap();
        writeln!(out, "mu_max = {}", c.mu_max).unwrap();
        writeln!(out, "max_iter = {}", c.max_iter).unwrap();
        writeln!(out, "tol = {}", c.tol).unwrap();
        writeln!(out, "printed_updates = {}", c.printed_updates).unwrap();
        writeln!(out, "iterations = {}", self.iterations).unwrap();
        writeln!(out, "wall_time_s = {:.3}", self.wall_time_s).unwrap();
        if let Some(runs) = &self.metric_runs {
            for (idx, (name, _)) in runs[0].named().iter().enumerate() {
                let values: Vec<String> = runs
                    .iter()
                    .map(|m| format!("{:.17e}", m.named()[idx].1))
                    .collect();
                writeln!(out, "{name}_values = {}", values.join(",")).unwrap();
            }
            for (name, mean, std) in self.metric_summary().expect("runs present") {
                writeln!(out, "{name}_mean = {mean:.17e}").unwrap();
                writeln!(out, "{name}_std = {std:.17e}").unwrap();
            }
        }
        for (key, path) in &self.artifacts {
            writeln!(out, "{key} = {}", path.display()).unwrap();
        }
        out
    }
}
