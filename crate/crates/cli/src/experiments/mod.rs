//! Experiment kinds and the Monte-Carlo orchestration shared between them.

use std::path::PathBuf;

use anyhow::{Context, Result};

use crate::config::ExperimentConfig;
use crate::manifest::Manifest;

mod approx_rates;
mod noise_check;
mod norm_equivalence;
mod regularity;
mod simulate;

/// The five experiment kinds exposed by the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ExperimentKind {
    Simulate,
    Regularity,
    ApproxRates,
    NoiseCheck,
    NormEquivalence,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Simulate => "simulate",
            ExperimentKind::Regularity => "regularity",
            ExperimentKind::ApproxRates => "approx-rates",
            ExperimentKind::NoiseCheck => "noise-check",
            ExperimentKind::NormEquivalence => "norm-equivalence",
        }
    }
}

/// A fully resolved experiment invocation.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub kind: ExperimentKind,
    pub config: ExperimentConfig,
    pub out_dir: PathBuf,
    pub paths: u32,
    pub base_seed: u64,
    pub threads: usize,
    pub emit_plot: bool,
}

impl Experiment {
    /// Bundle CLI overrides on top of a parsed config.
    pub fn new(kind: ExperimentKind, mut config: ExperimentConfig, out_dir: PathBuf) -> Self {
        let paths = config.paths.max(1);
        let base_seed = config.seed;
        config.paths = paths;
        Self {
            kind,
            config,
            out_dir,
            paths,
            base_seed,
            threads: 1,
            emit_plot: false,
        }
    }

    pub fn with_overrides(
        mut self,
        paths: Option<u32>,
        seed: Option<u64>,
        threads: Option<usize>,
    ) -> Self {
        if let Some(p) = paths {
            self.paths = p.max(1);
            self.config.paths = self.paths;
        }
        if let Some(s) = seed {
            self.base_seed = s;
            self.config.seed = s;
        }
        if let Some(t) = threads {
            self.threads = t.max(1);
        }
        self
    }
}

/// Run an experiment; artifacts land under `out_dir`, re-runs overwrite
/// deterministically.
pub fn run_experiment(exp: &Experiment) -> Result<()> {
    exp.config.validate()?;
    std::fs::create_dir_all(&exp.out_dir)
        .with_context(|| format!("creating output dir {}", exp.out_dir.display()))?;
    let mut manifest = Manifest::new(
        exp.kind.name(),
        serde_json::to_value(&exp.config)?,
        exp.base_seed,
        exp.paths,
    );
    match exp.kind {
        ExperimentKind::Simulate => simulate::run(exp, &mut manifest)?,
        ExperimentKind::Regularity => regularity::run(exp, &mut manifest)?,
        ExperimentKind::ApproxRates => approx_rates::run(exp, &mut manifest)?,
        ExperimentKind::NoiseCheck => noise_check::run(exp, &mut manifest)?,
        ExperimentKind::NormEquivalence => norm_equivalence::run(exp, &mut manifest)?,
    }
    manifest.write(&exp.out_dir)?;
    Ok(())
}

/// Map paths over a fixed-size worker pool; results return in path order, so
/// downstream folds are independent of the worker count.
pub fn parallel_paths<T: Send>(
    paths: u32,
    threads: usize,
    job: impl Fn(u32) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    let threads = threads.clamp(1, paths.max(1) as usize);
    let mut slots: Vec<Option<Result<T>>> = (0..paths).map(|_| None).collect();
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for (worker, chunk) in split_round_robin(paths, threads).into_iter().enumerate() {
            let job = &job;
            handles.push((
                worker,
                scope.spawn(move || {
                    chunk
                        .into_iter()
                        .map(|p| (p, job(p)))
                        .collect::<Vec<(u32, Result<T>)>>()
                }),
            ));
        }
        for (_, handle) in handles {
            for (p, res) in handle.join().expect("worker panicked") {
                slots[p as usize] = Some(res);
            }
        }
    });
    slots
        .into_iter()
        .enumerate()
        .map(|(p, r)| {
            r.expect("path not scheduled")
                .with_context(|| format!("path {p}"))
        })
        .collect()
}

fn split_round_robin(paths: u32, threads: usize) -> Vec<Vec<u32>> {
    let mut chunks = vec![Vec::new(); threads];
    for p in 0..paths {
        chunks[p as usize % threads].push(p);
    }
    chunks
}

/// Mean and standard error of a sample (stderr 0 for a single value).
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_results_are_in_path_order() {
        let out = parallel_paths(17, 4, |p| Ok(p * 2)).unwrap();
        assert_eq!(out, (0..17).map(|p| p * 2).collect::<Vec<_>>());
        let out1 = parallel_paths(17, 1, |p| Ok(p * 2)).unwrap();
        assert_eq!(out, out1);
    }

    #[test]
    fn aggregate_statistics() {
        let (m, se) = mean_stderr(&[1.0]);
        assert_eq!((m, se), (1.0, 0.0));
        let xs: Vec<f64> = (0..64)
            .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let (m, se) = mean_stderr(&xs);
        assert_eq!(m, 0.0);
        // i.i.d. unit-variance sample: stderr ≈ 1/√K.
        assert!((se - 1.0 / 8.0).abs() < 0.05, "se {se}");
    }
}
