//! `noise-check`: Itô-isometry Monte-Carlo and the H¹ summability sweep.

use anyhow::Result;
use serde::Serialize;

use besovlab_core::domain::level_cardinality;
use besovlab_core::noise::{
    h1_summability_check_with_counts, sample_pattern, NoiseMode, NoiseModel,
};

use crate::experiments::Experiment;
use crate::fmt_f64;
use crate::io;
use crate::manifest::Manifest;

#[derive(Serialize)]
struct Summary {
    isometry_all_within_3_sigma: bool,
    summability_consistent: bool,
}

pub fn run(exp: &Experiment, manifest: &mut Manifest) -> Result<()> {
    let cfg = &exp.config;
    let domain = cfg.build_domain()?;
    let basis = cfg.build_basis()?;
    let check = &cfg.noise_check;

    // Itô isometry: per-entry increment variance against σ_j²·dt.
    let model = cfg.build_noise()?.unwrap_or(
        NoiseModel::new(2.5, 0.0, 0.0, cfg.wavelet.j0, NoiseMode::Dense, 5, cfg.seed)
            .map_err(|e| anyhow::anyhow!("noise: {e}"))?,
    );
    let real =
        sample_pattern(&model, &basis, &domain, 0).map_err(|e| anyhow::anyhow!("pattern: {e}"))?;
    let dt = check.isometry_dt;
    let k = check.isometry_samples;
    let mut iso_rows = Vec::new();
    let mut all_ok = true;
    // One probe index per level, first active entry.
    let probes: Vec<_> = model
        .levels()
        .filter_map(|level| real.active_indices(level).first().copied())
        .collect();
    let mut table = real
        .increment(&basis, 0, dt)
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    let mut sums = vec![(0.0f64, 0.0f64); probes.len()];
    for step in 0..k {
        real.increment_into(&basis, step, dt, &mut table)
            .map_err(|e| anyhow::anyhow!("{e}"))?;
        for (i, idx) in probes.iter().enumerate() {
            let v = table.get(*idx);
            sums[i].0 += v;
            sums[i].1 += v * v;
        }
    }
    for (idx, (s, sq)) in probes.iter().zip(&sums) {
        let mean = s / k as f64;
        let var = sq / k as f64 - mean * mean;
        let sigma = model.sigma(idx.level) * model.amplitude;
        let want = sigma * sigma * dt;
        let se = want * (2.0 / k as f64).sqrt();
        let ok = (var - want).abs() <= 3.0 * se;
        all_ok &= ok;
        iso_rows.push(vec![
            idx.level.to_string(),
            idx.kind.to_string(),
            idx.k[0].to_string(),
            idx.k[1].to_string(),
            fmt_f64(var),
            fmt_f64(want),
            fmt_f64(se),
            ok.to_string(),
        ]);
    }
    let iso_path = exp.out_dir.join("isometry.csv");
    io::write_csv(
        &iso_path,
        &[
            "level",
            "kind",
            "kx",
            "ky",
            "variance",
            "expected",
            "stderr",
            "within_3_sigma",
        ],
        &iso_rows,
    )?;
    manifest.add_file(&exp.out_dir, &iso_path)?;

    // Summability sweep over (a, b); cardinalities counted once.
    let counts: Vec<usize> = ((cfg.wavelet.j0 as i32 - 1)..=(check.summability_level as i32))
        .map(|level| level_cardinality(&domain, &basis, cfg.wavelet.j0, level))
        .collect();
    let mut sum_rows = Vec::new();
    let mut consistent = true;
    for &[a, b] in &check.ab_grid {
        let m = NoiseModel::new(
            a,
            b,
            cfg.noise.c,
            cfg.wavelet.j0,
            NoiseMode::Sparse,
            check.summability_level + 1,
            cfg.seed,
        )
        .map_err(|e| anyhow::anyhow!("noise ({a}, {b}): {e}"))?;
        let rep = h1_summability_check_with_counts(&m, &counts, check.summability_level);
        // Convergence iff a + b > 2: tail below 1% exactly in that regime.
        let converged = rep.tail_fraction < 0.01;
        consistent &= converged == rep.h1_regime;
        sum_rows.push(vec![
            fmt_f64(a),
            fmt_f64(b),
            rep.h1_regime.to_string(),
            fmt_f64(rep.tail_fraction),
            converged.to_string(),
        ]);
    }
    let sum_path = exp.out_dir.join("summability.csv");
    io::write_csv(
        &sum_path,
        &["a", "b", "h1_regime", "tail_fraction", "tail_below_1pct"],
        &sum_rows,
    )?;
    manifest.add_file(&exp.out_dir, &sum_path)?;

    let summary = Summary {
        isometry_all_within_3_sigma: all_ok,
        summability_consistent: consistent,
    };
    let summary_path = exp.out_dir.join("summary.json");
    std::fs::write(
        &summary_path,
        serde_json::to_string_pretty(&summary)? + "\n",
    )?;
    manifest.add_file(&exp.out_dir, &summary_path)?;
    Ok(())
}
