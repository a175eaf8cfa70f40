//! `approx-rates`: uniform vs best-N-term error curves and fitted exponents.

use anyhow::{Context, Result};
use serde::Serialize;

use besovlab_core::approx::{compare_schemes, ApproxReport, ErrorNorm};
use besovlab_core::field::{extend, Field, Grid};
use besovlab_core::gallery;
use besovlab_core::spde::{self, SpdeConfig};

use crate::experiments::{mean_stderr, parallel_paths, Experiment};
use crate::fmt_f64;
use crate::io;
use crate::manifest::Manifest;

#[derive(Serialize)]
struct SchemeSummary {
    scheme: String,
    exponents: Vec<f64>,
    exponent_mean: f64,
    exponent_stderr: f64,
}

#[derive(Serialize)]
struct Summary {
    source: String,
    norm: String,
    schemes: Vec<SchemeSummary>,
    /// best-N-term mean exponent minus uniform mean exponent.
    gap: f64,
}

pub fn run(exp: &Experiment, manifest: &mut Manifest) -> Result<()> {
    let cfg = &exp.config;
    let domain = cfg.build_domain()?;
    let basis = cfg.build_basis()?;
    let policy = cfg.extension_policy()?;
    let norm = match cfg.approx.norm.as_str() {
        "energy" => ErrorNorm::EnergyW12,
        "l2" => ErrorNorm::Lp(2.0),
        _ => ErrorNorm::Lp(cfg.approx.p),
    };

    let fields: Vec<Field> = match cfg.approx.source.as_str() {
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
        other => anyhow::bail!("approx.source `{other}`"),
    };

    let reports: Vec<ApproxReport> = parallel_paths(fields.len() as u32, exp.threads, |i| {
        let extended = extend(&fields[i as usize], &domain, policy);
        compare_schemes(
            &extended,
            &basis,
            &domain,
            cfg.wavelet.j0,
            &norm,
            &cfg.approx.n_values,
        )
        .map_err(|e| anyhow::anyhow!("approximation study: {e}"))
    })?;

    // Error curves, one row per (path, scheme, N).
    let mut rows = Vec::new();
    for (path, report) in reports.iter().enumerate() {
        for curve in &report.curves {
            for &(n, e) in &curve.points {
                rows.push(vec![
                    path.to_string(),
                    curve.scheme.to_string(),
                    n.to_string(),
                    fmt_f64(e),
                ]);
            }
        }
    }
    let rates_path = exp.out_dir.join("rates.csv");
    io::write_csv(&rates_path, &["path", "scheme", "n_terms", "error"], &rows)?;
    manifest.add_file(&exp.out_dir, &rates_path)?;

    // Fitted exponents per scheme, aggregated over paths.
    let mut schemes = Vec::new();
    for scheme in ["best-n-term", "uniform"] {
        let exponents: Vec<f64> = reports
            .iter()
            .filter_map(|r| {
                r.curves
                    .iter()
                    .find(|c| c.scheme == scheme)
                    .and_then(|c| c.fit.as_ref())
                    .map(|f| f.exponent)
            })
            .collect();
        let (mean, stderr) = mean_stderr(&exponents);
        schemes.push(SchemeSummary {
            scheme: scheme.to_string(),
            exponents,
            exponent_mean: mean,
            exponent_stderr: stderr,
        });
    }
    let gap = schemes[0].exponent_mean - schemes[1].exponent_mean;
    let summary = Summary {
        source: cfg.approx.source.clone(),
        norm: cfg.approx.norm.clone(),
        schemes,
        gap,
    };
    let summary_path = exp.out_dir.join("summary.json");
    std::fs::write(
        &summary_path,
        serde_json::to_string_pretty(&summary)? + "\n",
    )?;
    manifest.add_file(&exp.out_dir, &summary_path)?;

    if exp.emit_plot {
        let plot_path = exp.out_dir.join("plot_rates.py");
        std::fs::write(&plot_path, PLOT_SCRIPT)?;
        manifest.add_file(&exp.out_dir, &plot_path)?;
    }
    Ok(())
}

const PLOT_SCRIPT: &str = r#"#!/usr/bin/env python3
"""Log-log rate comparison from rates.csv (run next to the CSV)."""
import csv
from collections import defaultdict

import matplotlib.pyplot as plt

curves = defaultdict(lambda: defaultdict(list))
with open("rates.csv") as fh:
    for row in csv.DictReader(fh):
        curves[row["scheme"]][int(row["n_terms"])].append(float(row["error"]))

plt.figure(figsize=(5, 4))
for scheme, pts in sorted(curves.items()):
    ns = sorted(pts)
    mean = [sum(pts[n]) / len(pts[n]) for n in ns]
    plt.loglog(ns, mean, marker="o", label=scheme)
plt.xlabel("N terms")
plt.ylabel("error")
plt.legend()
plt.tight_layout()
plt.savefig("rates.png", dpi=150)
print("wrote rates.png")
"#;
