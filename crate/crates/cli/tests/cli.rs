//! Behavioral tests of the four subcommands, driven through the command
//! functions and the compiled binary.

use std::path::PathBuf;
use std::process::Command;

use umcev_cli::commands::{self, ClusterArgs, EvalArgs, SolverOverrides, SweepArgs, SynthArgs};
use umcev_cli::LAMBDA_LADDER;

fn synth_args(out: PathBuf, per_cluster: usize, noise: f64) -> SynthArgs {
    SynthArgs {
        out,
        clusters: 3,
        per_cluster,
        views: 2,
        dims: vec![10, 15],
        subspace_dim: 3,
        noise,
        seed: 0,
    }
}

fn cluster_args(manifest: PathBuf, out: PathBuf, repeats: usize) -> ClusterArgs {
    ClusterArgs {
        manifest,
        repeats,
        seed: 0,
        out,
        overrides: SolverOverrides::default(),
    }
}

#[test]
fn ladder_matches_published_decades() {
    // nine decades, endpoints 2e-5 and 2e3, ratio 10
    assert_eq!(LAMBDA_LADDER.len(), 9);
    assert_eq!(LAMBDA_LADDER[0], 2e-5);
    assert_eq!(LAMBDA_LADDER[8], 2e3);
    for w in LAMBDA_LADDER.windows(2) {
        assert!((w[1] / w[0] - 10.0).abs() < 1e-12);
    }
    assert!(LAMBDA_LADDER.contains(&2.0));
    assert!(LAMBDA_LADDER.contains(&2e2));
}

#[test]
fn cluster_report_structure_and_mean_std_consistency() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = commands::synth(&synth_args(dir.path().join("d"), 12, 0.01)).unwrap();
    let report = commands::cluster(&cluster_args(manifest, dir.path().join("r"), 5)).unwrap();

    let summary = report.metric_summary().expect("labels present");
    assert_eq!(summary.len(), 7);
    for (_, mean, std) in &summary {
        assert!(mean.is_finite() && std.is_finite());
    }

    // recompute mean/std from the printed per-repeat values
    let text = std::fs::read_to_string(dir.path().join("r/report.txt")).unwrap();
    for (name, mean, std) in &summary {
        let values_line = text
            .lines()
            .find(|l| l.starts_with(&format!("{name}_values = ")))
            .unwrap_or_else(|| panic!("missing {name}_values"));
        let values: Vec<f64> = values_line
            .split(" = ")
            .nth(1)
            .unwrap()
            .split(',')
            .map(|v| v.parse().unwrap())
            .collect();
        assert_eq!(values.len(), 5);
        let m = values.iter().sum::<f64>() / 5.0;
        let s = (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / 5.0).sqrt();
        assert!((m - mean).abs() < 1e-12);
        assert!((s - std).abs() < 1e-12);
    }
    // all artifacts exist
    for (_, path) in &report.artifacts {
        assert!(path.exists(), "missing artifact {}", path.display());
    }
}

#[test]
fn cluster_without_labels_omits_metrics_but_emits_labels() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = commands::synth(&synth_args(dir.path().join("d"), 10, 0.01)).unwrap();
    // strip the labels line from the manifest
    let text = std::fs::read_to_string(&manifest).unwrap();
    let stripped: String = text
        .lines()
        .filter(|l| !l.starts_with("labels"))
        .map(|l| format!("{l}\n"))
        .collect();
    std::fs::write(&manifest, stripped).unwrap();

    let report = commands::cluster(&cluster_args(manifest, dir.path().join("r"), 2)).unwrap();
    assert!(report.metric_runs.is_none());
    assert!(dir.path().join("r/labels_run0.txt").exists());
    assert!(dir.path().join("r/labels_run1.txt").exists());
    let text = std::fs::read_to_string(dir.path().join("r/report.txt")).unwrap();
    assert!(!text.contains("acc_mean"));
}

#[test]
fn trace_file_has_documented_header_and_rows() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = commands::synth(&synth_args(dir.path().join("d"), 10, 0.01)).unwrap();
    let report = commands::cluster(&cluster_args(manifest, dir.path().join("r"), 1)).unwrap();
    let trace = std::fs::read_to_string(dir.path().join("r/trace.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(
        lines.next().unwrap(),
        "iter,r_zs,r_u1,r_u2,r_recon,objective"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), report.iterations);
    for row in rows {
        assert_eq!(row.split(',').count(), 6);
    }
}

#[test]
fn eval_round_trips_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let truth = dir.path().join("truth.txt");
    let pred = dir.path().join("pred.txt");
    std::fs::write(&truth, "0\n0\n1\n1\n2\n2\n").unwrap();
    // identical files: everything 1.0
    std::fs::write(&pred, "0\n0\n1\n1\n2\n2\n").unwrap();
    let out = commands::eval(&EvalArgs {
        pred: pred.clone(),
        truth: truth.clone(),
    })
    .unwrap();
    for line in out.lines() {
        assert!(line.ends_with("= 1.000000"), "line {line:?}");
    }
    // permuted labels keep ACC at 1
    std::fs::write(&pred, "2\n2\n0\n0\n1\n1\n").unwrap();
    let out = commands::eval(&EvalArgs {
        pred: pred.clone(),
        truth: truth.clone(),
    })
    .unwrap();
    assert!(out.contains("acc = 1.000000"));
    // the 4-sample crossing case from the metric suite
    std::fs::write(&truth, "0\n1\n0\n1\n").unwrap();
    std::fs::write(&pred, "0\n0\n1\n1\n").unwrap();
    let out = commands::eval(&EvalArgs { pred, truth }).unwrap();
    assert!(out.contains("acc = 0.500000"));
    assert!(out.contains("nmi = 0.000000"));
}

#[test]
fn sweep_single_point_matches_cluster() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = commands::synth(&synth_args(dir.path().join("d"), 10, 0.01)).unwrap();
    let report = commands::cluster(&cluster_args(
        manifest.clone(),
        dir.path().join("r"),
        3,
    ))
    .unwrap();
    let rows = commands::sweep(&SweepArgs {
        manifest,
        param: "lambda2".into(),
        values: Some(vec![2e-1]),
        repeats: 3,
        seed: 0,
        out: dir.path().join("s"),
        overrides: SolverOverrides::default(),
    })
    .unwrap();
    assert_eq!(rows.len(), 1);
    let cluster_summary = report.metric_summary().unwrap();
    for ((name_a, mean_a, std_a), (name_b, mean_b, std_b)) in
        rows[0].summary.iter().zip(cluster_summary.iter())
    {
        assert_eq!(name_a, name_b);
        assert!((mean_a - mean_b).abs() < 1e-15);
        assert!((std_a - std_b).abs() < 1e-15);
    }
}

#[test]
fn sweep_emits_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = commands::synth(&synth_args(dir.path().join("d"), 8, 0.01)).unwrap();
    let rows = commands::sweep(&SweepArgs {
        manifest,
        param: "lambda3".into(),
        values: Some(vec![2e-2, 2.0, 2e2]),
        repeats: 2,
        seed: 0,
        out: dir.path().join("s"),
        overrides: SolverOverrides {
            max_iter: Some(10),
            ..SolverOverrides::default()
        },
    })
    .unwrap();
    assert_eq!(rows.len(), 3);
    let csv = std::fs::read_to_string(dir.path().join("s/sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4); // header + 3 rows
    assert!(csv.starts_with("value,acc_mean,acc_std,"));
}

#[test]
fn config_file_sits_between_defaults_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("solver.cfg");
    std::fs::write(&cfg_path, "lambda1 = 0.5\nmax-iter = 7\nvariant = ml0-lssc\n").unwrap();
    let overrides = SolverOverrides {
        config: Some(cfg_path),
        lambda1: Some(0.25), // flag beats file
        ..SolverOverrides::default()
    };
    let cfg = overrides.resolve(3).unwrap();
    assert_eq!(cfg.lambda1, 0.25);
    assert_eq!(cfg.max_iter, 7); // file beats default
    assert_eq!(cfg.variant.to_string(), "ml0-lssc");
    assert_eq!(cfg.lambda2, 2e-1); // default untouched
    assert_eq!(cfg.seed, 3);
}

#[test]
fn unknown_config_key_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("solver.cfg");
    std::fs::write(&cfg_path, "lambdaX = 1\n").unwrap();
    let overrides = SolverOverrides {
        config: Some(cfg_path),
        ..SolverOverrides::default()
    };
    assert!(overrides.resolve(0).is_err());
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_umcev")
}

#[test]
fn binary_surfaces_errors_with_nonzero_exit() {
    let out = Command::new(bin())
        .args(["cluster", "--manifest", "/definitely/not/here.txt"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("error:"), "stderr was: {stderr}");

    let out = Command::new(bin())
        .args(["cluster", "--manifest", "x", "--variant", "bogus"])
        .output()
        .unwrap();
    assert!(!out.status.success());
}

#[test]
fn binary_synth_then_cluster_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data_dir = dir.path().join("d");
    let out = Command::new(bin())
        .args([
            "synth",
            "--out",
            data_dir.to_str().unwrap(),
            "--clusters",
            "2",
            "--per-cluster",
            "8",
            "--views",
            "2",
            "--dims",
            "6",
            "--subspace-dim",
            "2",
            "--noise",
            "0.0",
            "--seed",
            "4",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let manifest = manifest_from_stdout(&out.stdout);
    let out = Command::new(bin())
        .args([
            "cluster",
            "--manifest",
            &manifest,
            "--out",
            dir.path().join("r").to_str().unwrap(),
            "--repeats",
            "2",
            "--max-iter",
            "20",
        ])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("acc_mean"));
}

fn manifest_from_stdout(stdout: &[u8]) -> String {
    String::from_utf8_lossy(stdout)
        .lines()
        .find_map(|l| l.strip_prefix("manifest = ").map(String::from))
        .expect("synth prints the manifest path")
}

#[test]
fn synth_noiseless_views_have_subspace_rank() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = commands::synth(&synth_args(dir.path().join("d"), 10, 0.0)).unwrap();
    let data = umcev_core::load_manifest(&manifest).unwrap();
    // per-cluster blocks of the raw view files have rank = subspace dim;
    // load without normalization to check the generator itself
    let raw = umcev_core::datasets::load_matrix(&dir.path().join("d/view0.csv")).unwrap();
    use ndarray_linalg_rank::rank_of;
    let block = raw.slice(ndarray::s![.., 0..10]).to_owned();
    assert_eq!(rank_of(&block), 3);
    assert_eq!(data.clusters(), 3);
}

// tiny local helper module, keeps the rank check readable
mod ndarray_linalg_rank {
    use ndarray::Array2;
    use ndarray_linalg::{JobSvd, SVDDC};

    pub fn rank_of(m: &Array2<f64>) -> usize {
        let (_, s, _) = m.svddc(JobSvd::None).unwrap();
        s.iter().filter(|&&v| v > 1e-9).count()
    }
}
