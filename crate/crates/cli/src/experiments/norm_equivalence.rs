//! `norm-equivalence`: wavelet-route vs modulus-route Besov norms on the
//! bundled test family.

use anyhow::Result;
use serde::Serialize;

use besovlab_core::besov::{besov_norm_modulus, besov_norm_wavelet, BesovParams, ModulusOptions};
use besovlab_core::field::{extend, Field, Grid};
use besovlab_core::gallery;
use besovlab_core::wavelet::dwt2;

use crate::experiments::{parallel_paths, Experiment};
use crate::fmt_f64;
use crate::io;
use crate::manifest::Manifest;

#[derive(Serialize, Clone)]
struct RatioEntry {
    function: String,
    s: f64,
    p: f64,
    q: f64,
    level: u32,
    wavelet_route: f64,
    modulus_route: f64,
    ratio: f64,
}

#[derive(Serialize)]
struct Summary {
    ratio_min: f64,
    ratio_max: f64,
    /// max/min over all family members, parameters and levels.
    spread: f64,
    /// Largest |ratio(J+1)/ratio(J) - 1| over members and parameters.
    max_drift: f64,
    entries: Vec<RatioEntry>,
}

pub fn run(exp: &Experiment, manifest: &mut Manifest) -> Result<()> {
    let cfg = &exp.config;
    let domain = cfg.build_domain()?;
    let basis = cfg.build_basis()?;
    let ne = &cfg.norm_equivalence;
    let policy = cfg.extension_policy()?;
    let opts = ModulusOptions::default();

    // All (function, param, level) combinations, evaluated in parallel.
    let mut jobs = Vec::new();
    for name in gallery::FAMILY_NAMES {
        for prm in &ne.params {
            for &level in &ne.levels {
                jobs.push((name, *prm, level));
            }
        }
    }
    let entries: Vec<RatioEntry> = parallel_paths(jobs.len() as u32, exp.threads, |i| {
        let (name, [s, p, q], level) = jobs[i as usize];
        let f = gallery::l_shape_family(name)
            .ok_or_else(|| anyhow::anyhow!("unknown family member {name}"))?;
        let grid = Grid::new(domain.bounding_square(), level);
        let field = Field::sample_masked(grid, &domain, f);
        let n = (s.floor() as usize) + 1;
        let params = BesovParams::new(s, p, q, n).map_err(|e| anyhow::anyhow!("params: {e}"))?;
        let modulus = besov_norm_modulus(&field, &domain, &params, &opts)
            .map_err(|e| anyhow::anyhow!("modulus route: {e}"))?;
        let extended = extend(&field, &domain, policy);
        let table = dwt2(&extended, &basis, cfg.wavelet.j0)
            .map_err(|e| anyhow::anyhow!("dwt2: {e}"))?
            .to_lp(p)
            .map_err(|e| anyhow::anyhow!("renormalize: {e}"))?;
        let wavelet = besov_norm_wavelet(&table, &params)
            .map_err(|e| anyhow::anyhow!("wavelet route: {e}"))?;
        Ok(RatioEntry {
            function: name.to_string(),
            s,
            p,
            q,
            level,
            wavelet_route: wavelet.total(),
            modulus_route: modulus.total(),
            ratio: wavelet.total() / modulus.total(),
        })
    })?;

    let rows: Vec<Vec<String>> = entries
        .iter()
        .map(|e| {
            vec![
                e.function.clone(),
                fmt_f64(e.s),
                fmt_f64(e.p),
                fmt_f64(e.q),
                e.level.to_string(),
                fmt_f64(e.wavelet_route),
                fmt_f64(e.modulus_route),
                fmt_f64(e.ratio),
            ]
        })
        .collect();
    let csv_path = exp.out_dir.join("ratios.csv");
    io::write_csv(
        &csv_path,
        &[
            "function",
            "s",
            "p",
            "q",
            "level",
            "wavelet_route",
            "modulus_route",
            "ratio",
        ],
        &rows,
    )?;
    manifest.add_file(&exp.out_dir, &csv_path)?;

    let ratio_min = entries
        .iter()
        .map(|e| e.ratio)
        .fold(f64::INFINITY, f64::min);
    let ratio_max = entries.iter().map(|e| e.ratio).fold(0.0f64, f64::max);
    let mut max_drift = 0.0f64;
    for a in &entries {
        for b in &entries {
            if a.function == b.function && a.s == b.s && a.p == b.p && b.level == a.level + 1 {
                max_drift = max_drift.max((b.ratio / a.ratio - 1.0).abs());
            }
        }
    }
    let summary = Summary {
        ratio_min,
        ratio_max,
        spread: ratio_max / ratio_min,
        max_drift,
        entries,
    };
    let summary_path = exp.out_dir.join("summary.json");
    std::fs::write(
        &summary_path,
        serde_json::to_string_pretty(&summary)? + "\n",
    )?;
    manifest.add_file(&exp.out_dir, &summary_path)?;
    Ok(())
}
