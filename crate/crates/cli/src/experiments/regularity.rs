//! `regularity`: smoothness exponents of simulated or bundled fields in the
//! Sobolev and adaptivity scales.

use anyhow::{Context, Result};
use serde::Serialize;

use besovlab_core::besov::{estimate_smoothness, SmoothnessReport, SmoothnessScale};
use besovlab_core::field::{extend, Field, Grid};
use besovlab_core::gallery;
use besovlab_core::spde::{self, SpdeConfig};
use besovlab_core::wavelet::dwt2;

use crate::experiments::{mean_stderr, parallel_paths, Experiment};
use crate::fmt_f64;
use crate::io;
use crate::manifest::Manifest;

#[derive(Serialize)]
struct PathReport {
    path: u32,
    sobolev_exponent: f64,
    sobolev_residual: f64,
    adaptivity_exponent: f64,
    tau_star: f64,
    adaptivity_residual: f64,
}

#[derive(Serialize)]
struct Summary {
    source: String,
    p: f64,
    paths: Vec<PathReport>,
    sobolev_mean: f64,
    sobolev_stderr: f64,
    adaptivity_mean: f64,
    adaptivity_stderr: f64,
}

pub fn run(exp: &Experiment, manifest: &mut Manifest) -> Result<()> {
    let cfg = &exp.config;
    let domain = cfg.build_domain()?;
    let basis = cfg.build_basis()?;
    let policy = cfg.extension_policy()?;
    let p = cfg.regularity.p;

    let fields: Vec<Field> = match cfg.regularity.source.as_str() {
        "singular" => {
            let grid = Grid::new(domain.bounding_square(), cfg.grid.level);
            vec![Field::sample_masked(grid, &domain, |q| {
                gallery::l_shape_singular(q, gallery::SINGULAR_R_FLAT, gallery::SINGULAR_R_ZERO)
            })]
        }
        "spde" => {
            let diffusion = cfg.build_diffusion()?;
            let noise = cfg.build_noise()?;
            let initial = cfg.build_initial(&domain)?;
            let trajectories = parallel_paths(exp.paths, exp.threads, |path| {
                let config = SpdeConfig {
                    diffusion,
                    horizon: cfg.time.horizon,
                    steps: cfg.time.steps,
                    grid_level: cfg.grid.level,
                    j0: cfg.wavelet.j0,
                    noise: noise.clone(),
                    initial: initial.clone(),
                    snapshot_times: vec![cfg.time.horizon],
                    path: path as u64,
                };
                spde::run(&domain, &basis, &config).map_err(|e| anyhow::anyhow!("spde: {e}"))
            })?;
            trajectories
                .into_iter()
                .map(|t| {
                    t.snapshots
                        .into_iter()
                        .last()
                        .context("no snapshot")
                        .map(|s| s.1)
                })
                .collect::<Result<_>>()?
        }
        other => anyhow::bail!("regularity.source `{other}`"),
    };

    let reports: Vec<(SmoothnessReport, SmoothnessReport)> =
        parallel_paths(fields.len() as u32, exp.threads, |i| {
            let extended = extend(&fields[i as usize], &domain, policy);
            let table = dwt2(&extended, &basis, cfg.wavelet.j0)
                .map_err(|e| anyhow::anyhow!("dwt2: {e}"))?;
            let sobolev = estimate_smoothness(&table, p, SmoothnessScale::Sobolev)
                .map_err(|e| anyhow::anyhow!("sobolev fit: {e}"))?;
            let adaptivity = estimate_smoothness(&table, p, SmoothnessScale::Adaptivity)
                .map_err(|e| anyhow::anyhow!("adaptivity fit: {e}"))?;
            Ok((sobolev, adaptivity))
        })?;

    // Per-level norms, one row per (path, level).
    let mut rows = Vec::new();
    for (path, (sob, _)) in reports.iter().enumerate() {
        for ln in &sob.per_level {
            rows.push(vec![
                path.to_string(),
                ln.level.to_string(),
                fmt_f64(ln.norm),
            ]);
        }
    }
    let levels_path = exp.out_dir.join("level_norms.csv");
    io::write_csv(&levels_path, &["path", "level", "lp_norm"], &rows)?;
    manifest.add_file(&exp.out_dir, &levels_path)?;

    let paths: Vec<PathReport> = reports
        .iter()
        .enumerate()
        .map(|(i, (sob, ada))| PathReport {
            path: i as u32,
            sobolev_exponent: sob.exponent,
            sobolev_residual: sob.residual,
            adaptivity_exponent: ada.exponent,
            tau_star: ada.tau_star.unwrap_or(f64::NAN),
            adaptivity_residual: ada.residual,
        })
        .collect();
    let sob: Vec<f64> = paths.iter().map(|r| r.sobolev_exponent).collect();
    let ada: Vec<f64> = paths.iter().map(|r| r.adaptivity_exponent).collect();
    let (sm, sse) = mean_stderr(&sob);
    let (am, ase) = mean_stderr(&ada);
    let summary = Summary {
        source: cfg.regularity.source.clone(),
        p,
        paths,
        sobolev_mean: sm,
        sobolev_stderr: sse,
        adaptivity_mean: am,
        adaptivity_stderr: ase,
    };
    let summary_path = exp.out_dir.join("summary.json");
    std::fs::write(
        &summary_path,
        serde_json::to_string_pretty(&summary)? + "\n",
    )?;
    manifest.add_file(&exp.out_dir, &summary_path)?;
    Ok(())
}
