//! `simulate`: Monte-Carlo paths of the SPDE with snapshot persistence.

use anyhow::Result;

use besovlab_core::spde::{self, SpdeConfig};

use crate::experiments::{mean_stderr, parallel_paths, Experiment};
use crate::fmt_f64;
use crate::io;
use crate::manifest::Manifest;

pub fn run(exp: &Experiment, manifest: &mut Manifest) -> Result<()> {
    let cfg = &exp.config;
    let domain = cfg.build_domain()?;
    let basis = cfg.build_basis()?;
    let diffusion = cfg.build_diffusion()?;
    let noise = cfg.build_noise()?;
    let initial = cfg.build_initial(&domain)?;
    let times = cfg.snapshot_times();

    let trajectories = parallel_paths(exp.paths, exp.threads, |path| {
        let config = SpdeConfig {
            diffusion,
            horizon: cfg.time.horizon,
            steps: cfg.time.steps,
            grid_level: cfg.grid.level,
            j0: cfg.wavelet.j0,
            noise: noise.clone(),
            initial: initial.clone(),
            snapshot_times: times.clone(),
            path: path as u64,
        };
        spde::run(&domain, &basis, &config).map_err(|e| anyhow::anyhow!("spde: {e}"))
    })?;

    // Per-path snapshot containers plus one sidecar.
    for (path, traj) in trajectories.iter().enumerate() {
        let file = exp.out_dir.join(format!("snapshots_path{path:03}.bin"));
        io::write_snapshots(&file, &traj.snapshots)?;
        manifest.add_file(&exp.out_dir, &file)?;
    }
    let sidecar = io::SnapshotSidecar {
        domain: domain.name().to_string(),
        grid_level: cfg.grid.level,
        square: {
            let s = domain.bounding_square();
            [s.x0, s.y0, s.side]
        },
        times: trajectories
            .first()
            .map(|t| t.diagnostics.iter().map(|d| d.time).collect())
            .unwrap_or_default(),
        paths: exp.paths,
    };
    let sidecar_path = exp.out_dir.join("snapshots.json");
    std::fs::write(
        &sidecar_path,
        serde_json::to_string_pretty(&sidecar)? + "\n",
    )?;
    manifest.add_file(&exp.out_dir, &sidecar_path)?;

    // Per-snapshot diagnostics, one row per (path, time).
    let mut rows = Vec::new();
    for (path, traj) in trajectories.iter().enumerate() {
        for d in &traj.diagnostics {
            rows.push(vec![
                path.to_string(),
                fmt_f64(d.time),
                fmt_f64(d.l2_norm),
                fmt_f64(d.weighted_d2),
            ]);
        }
    }
    let diag_path = exp.out_dir.join("diagnostics.csv");
    io::write_csv(
        &diag_path,
        &["path", "time", "l2_norm", "weighted_d2"],
        &rows,
    )?;
    manifest.add_file(&exp.out_dir, &diag_path)?;

    // Aggregate over paths per snapshot time (deterministic path-order fold).
    let mut agg_rows = Vec::new();
    if let Some(first) = trajectories.first() {
        for (i, d) in first.diagnostics.iter().enumerate() {
            let l2: Vec<f64> = trajectories
                .iter()
                .map(|t| t.diagnostics[i].l2_norm)
                .collect();
            let wd2: Vec<f64> = trajectories
                .iter()
                .map(|t| t.diagnostics[i].weighted_d2)
                .collect();
            let wd2_sq: Vec<f64> = wd2.iter().map(|v| v * v).collect();
            let (l2_m, l2_se) = mean_stderr(&l2);
            let (w_m, w_se) = mean_stderr(&wd2);
            let (wsq_m, wsq_se) = mean_stderr(&wd2_sq);
            agg_rows.push(vec![
                fmt_f64(d.time),
                fmt_f64(l2_m),
                fmt_f64(l2_se),
                fmt_f64(w_m),
                fmt_f64(w_se),
                fmt_f64(wsq_m),
                fmt_f64(wsq_se),
            ]);
        }
    }
    let agg_path = exp.out_dir.join("aggregate.csv");
    io::write_csv(
        &agg_path,
        &[
            "time",
            "l2_mean",
            "l2_stderr",
            "weighted_d2_mean",
            "weighted_d2_stderr",
            "weighted_d2_sq_mean",
            "weighted_d2_sq_stderr",
        ],
        &agg_rows,
    )?;
    manifest.add_file(&exp.out_dir, &agg_path)?;
    Ok(())
}
