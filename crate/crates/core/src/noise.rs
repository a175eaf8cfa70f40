//! Driving noises in wavelet coefficient space.
//!
//! One parameter family `(a, b, c, j0)` covers both bundled models: level
//! amplitudes `σ_j = (j - (j0-2))^{cd/2} · 2^{-a(j-(j0-1))d/2}` and Bernoulli
//! sparsity `p_j = 2^{-b(j-(j0-1))d}`. Dense mode (`b = 0`, all indicators
//! one) realizes a wavelet-diagonal Q-Wiener process; sparse mode draws the
//! indicator pattern once per path, after which it never changes.
//!
//! Increments are emitted as coefficient tables: entry `σ_j Y_λ ξ √dt` with
//! `ξ` standard normal from the path's counter-based stream, indexed by
//! `(path, level, type, location, step)`. Increment values therefore depend
//! neither on evaluation order nor on thread count, and increments over
//! disjoint step ranges are independent given the pattern.
//!
//! Only indices whose support cube meets the domain participate; their
//! per-level counts enter the summability reports as the measured `|∇_j|`.

use alloc::vec::Vec;

use crate::domain::{lambda_indices, level_cardinality, PolygonDomain, Square};
use crate::num;
use crate::rng::{self, Philox4x64};
use crate::wavelet::{CoefficientTable, WaveletBasis, WaveletIndex};
use crate::{Error, Result};

const D: f64 = 2.0;

/// Dense (Q-Wiener) or sparse (Bernoulli wavelet) driving noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseMode {
    Dense,
    Sparse,
}

/// Hyperparameters of the noise family.
#[derive(Debug, Clone)]
pub struct NoiseModel {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub j0: u32,
    pub mode: NoiseMode,
    /// One past the finest noise level; increments carry levels
    /// `j0-1 .. truncation_level-1`. Defaults to the solver grid level.
    pub truncation_level: u32,
    pub seed: u64,
    /// Extra multiplicative amplitude on every increment (1 by default).
    pub amplitude: f64,
    sigmas: Vec<f64>,
    probs: Vec<f64>,
}

impl NoiseModel {
    pub fn new(
        a: f64,
        b: f64,
        c: f64,
        j0: u32,
        mode: NoiseMode,
        truncation_level: u32,
        seed: u64,
    ) -> Result<Self> {
        if !(a >= 0.0) || !a.is_finite() {
            return Err(Error::InvalidParam("noise parameter a must be ≥ 0"));
        }
        if !(0.0..=1.0).contains(&b) {
            return Err(Error::InvalidParam("noise parameter b must lie in [0, 1]"));
        }
        if !c.is_finite() {
            return Err(Error::InvalidParam("noise parameter c must be finite"));
        }
        if a + b <= 1.0 {
            return Err(Error::InvalidParam(
                "need a + b > 1 for the noise expansion to converge in L2",
            ));
        }
        if truncation_level <= j0 {
            return Err(Error::LevelRange {
                j0: j0 as i32,
                grid_level: truncation_level as i32,
            });
        }
        let mut model = Self {
            a,
            b,
            c,
            j0,
            mode,
            truncation_level,
            seed,
            amplitude: 1.0,
            sigmas: Vec::new(),
            probs: Vec::new(),
        };
        for level in (j0 as i32 - 1)..truncation_level as i32 {
            model.sigmas.push(model.sigma_raw(level));
            model.probs.push(model.bernoulli_raw(level));
        }
        Ok(model)
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    fn sigma_raw(&self, level: i32) -> f64 {
        let shift2 = (level - (self.j0 as i32 - 2)) as f64; // j - (j0 - 2) ≥ 1
        let shift1 = (level - (self.j0 as i32 - 1)) as f64; // j - (j0 - 1) ≥ 0
        num::powf(shift2, self.c * D / 2.0) * num::exp2(-self.a * shift1 * D / 2.0)
    }

    fn bernoulli_raw(&self, level: i32) -> f64 {
        let shift1 = (level - (self.j0 as i32 - 1)) as f64;
        num::exp2(-self.b * shift1 * D)
    }

    /// Level amplitude `σ_j` from the stored table.
    pub fn sigma(&self, level: i32) -> f64 {
        self.sigmas[(level - (self.j0 as i32 - 1)) as usize]
    }

    /// Bernoulli parameter `p_j` from the stored table.
    pub fn bernoulli_p(&self, level: i32) -> f64 {
        match self.mode {
            NoiseMode::Dense => 1.0,
            NoiseMode::Sparse => self.probs[(level - (self.j0 as i32 - 1)) as usize],
        }
    }

    /// Does the model sit in the `a + b > 2` regime (spatially H¹ noise)?
    pub fn h1_regime(&self) -> bool {
        self.a + self.b > 2.0
    }

    /// Recompute the σ/p tables and compare with the stored ones.
    pub fn tables_consistent(&self) -> bool {
        for (i, level) in ((self.j0 as i32 - 1)..self.truncation_level as i32).enumerate() {
            if self.sigmas[i] != self.sigma_raw(level) || self.probs[i] != self.bernoulli_raw(level)
            {
                return false;
            }
        }
        true
    }

    pub fn levels(&self) -> impl Iterator<Item = i32> + '_ {
        (self.j0 as i32 - 1)..self.truncation_level as i32
    }
}

/// A sampled sparsity pattern bound to one path.
///
/// The pattern is drawn once at construction and is immutable afterwards;
/// increments condition on it.
#[derive(Debug, Clone)]
pub struct NoiseRealization {
    model: NoiseModel,
    path: u64,
    square: Square,
    increment_key: [u64; 2],
    /// Active indices per level (level order as in `model.levels()`).
    active: Vec<Vec<WaveletIndex>>,
    /// `|∇_j|` per level: all candidates meeting the domain.
    candidates: Vec<usize>,
}

#[inline]
fn index_counter(step: u64, idx: WaveletIndex) -> [u64; 4] {
    let c1 = ((idx.level + 1) as u32 as u64) | ((idx.kind as u64) << 32);
    let c2 = (idx.k[0] as u32 as u64) | ((idx.k[1] as u32 as u64) << 32);
    [step, c1, c2, 0]
}

/// Draw the `F_0`-measurable sparsity pattern of one path.
pub fn sample_pattern(
    model: &NoiseModel,
    basis: &WaveletBasis,
    domain: &PolygonDomain,
    path: u64,
) -> Result<NoiseRealization> {
    if !model.tables_consistent() {
        return Err(Error::InvalidParam("noise model tables are stale"));
    }
    let pattern_key = rng::derive_key(model.seed, path, rng::role::PATTERN);
    let mut active = Vec::new();
    let mut candidates = Vec::new();
    for level in model.levels() {
        let all = lambda_indices(domain, basis, model.j0, level);
        candidates.push(all.len());
        let kept = match model.mode {
            NoiseMode::Dense => all,
            NoiseMode::Sparse => {
                let p = model.bernoulli_p(level);
                all.into_iter()
                    .filter(|idx| {
                        let w = Philox4x64::block(index_counter(0, *idx), pattern_key);
                        rng::uniform01(w[0]) < p
                    })
                    .collect()
            }
        };
        active.push(kept);
    }
    Ok(NoiseRealization {
        model: model.clone(),
        path,
        square: domain.bounding_square(),
        increment_key: rng::derive_key(model.seed, path, rng::role::INCREMENT),
        active,
        candidates,
    })
}

impl NoiseRealization {
    pub fn model(&self) -> &NoiseModel {
        &self.model
    }

    pub fn path(&self) -> u64 {
        self.path
    }

    /// Measured `|∇_j|` per level.
    pub fn candidate_counts(&self) -> &[usize] {
        &self.candidates
    }

    /// Active indices per level.
    pub fn active_counts(&self) -> Vec<usize> {
        self.active.iter().map(Vec::len).collect()
    }

    /// The sampled pattern of one level.
    pub fn active_indices(&self, level: i32) -> &[WaveletIndex] {
        &self.active[(level - (self.model.j0 as i32 - 1)) as usize]
    }

    /// Write one increment over a step of length `dt` into `table`.
    ///
    /// The value at an active index is `σ_j · amplitude · ξ · √dt` with `ξ`
    /// standard normal, a pure function of `(seed, path, index, step)`.
    pub fn increment_into(
        &self,
        basis: &WaveletBasis,
        step: u64,
        dt: f64,
        table: &mut CoefficientTable,
    ) -> Result<()> {
        if !(dt > 0.0) {
            return Err(Error::InvalidParam("dt must be positive"));
        }
        // The table may be finer than the noise truncation: levels above the
        // cap stay zero (the tail is reported, never silently folded in).
        if table.j0 != self.model.j0 || table.grid_level < self.model.truncation_level {
            return Err(Error::LevelRange {
                j0: table.j0 as i32,
                grid_level: table.grid_level as i32,
            });
        }
        let _ = basis;
        table.scaling.iter_mut().for_each(|v| *v = 0.0);
        for bands in table.levels.iter_mut() {
            for band in bands {
                band.iter_mut().for_each(|v| *v = 0.0);
            }
        }
        let sqrt_dt = num::sqrt(dt);
        for (li, level) in self.model.levels().enumerate() {
            let scale = self.model.sigma(level) * self.model.amplitude * sqrt_dt;
            for idx in &self.active[li] {
                let xi = rng::gaussian(self.increment_key, index_counter(step, *idx));
                table.set(*idx, scale * xi);
            }
        }
        Ok(())
    }

    /// Fresh table with one increment.
    pub fn increment(&self, basis: &WaveletBasis, step: u64, dt: f64) -> Result<CoefficientTable> {
        let mut table = CoefficientTable::zeros(
            basis,
            self.square,
            self.model.j0,
            self.model.truncation_level,
        )?;
        self.increment_into(basis, step, dt, &mut table)?;
        Ok(table)
    }
}

/// Partial sums and tail of the H¹-regularity majorant
/// `Σ_j |∇_j| σ_j² p_j 2^{2j}` with measured cardinalities.
#[derive(Debug, Clone)]
pub struct SummabilityReport {
    pub levels: Vec<i32>,
    pub summands: Vec<f64>,
    pub partial_sums: Vec<f64>,
    /// Extrapolated series value; `None` when the majorant diverges.
    pub total: Option<f64>,
    /// Tail mass above the last measured level relative to the total;
    /// 1 when divergent.
    pub tail_fraction: f64,
    /// Analytic convergence flag: `a + b > 2`.
    pub h1_regime: bool,
}

/// Evaluate the majorant up to `up_to_level` (inclusive), extrapolating the
/// tail with the dyadic cardinality growth `|∇_j| ∝ 4^j`.
pub fn h1_summability_check(
    model: &NoiseModel,
    basis: &WaveletBasis,
    domain: &PolygonDomain,
    up_to_level: u32,
) -> SummabilityReport {
    let counts: Vec<usize> = ((model.j0 as i32 - 1)..=(up_to_level as i32))
        .map(|level| level_cardinality(domain, basis, model.j0, level))
        .collect();
    h1_summability_check_with_counts(model, &counts, up_to_level)
}

/// Same check with precomputed `|∇_j|` for levels `j0-1 ..= up_to_level`
/// (cardinalities depend only on the domain and basis, so sweeps over noise
/// parameters can share one count pass).
pub fn h1_summability_check_with_counts(
    model: &NoiseModel,
    cardinalities: &[usize],
    up_to_level: u32,
) -> SummabilityReport {
    let mut levels = Vec::new();
    let mut summands = Vec::new();
    let mut partial_sums = Vec::new();
    let mut acc = 0.0;
    let summand = |level: i32, cardinality: f64, model: &NoiseModel| {
        let sigma = {
            let shift2 = (level - (model.j0 as i32 - 2)) as f64;
            let shift1 = (level - (model.j0 as i32 - 1)) as f64;
            num::powf(shift2, model.c * D / 2.0) * num::exp2(-model.a * shift1 * D / 2.0)
        };
        let p = match model.mode {
            NoiseMode::Dense => 1.0,
            NoiseMode::Sparse => {
                let shift1 = (level - (model.j0 as i32 - 1)) as f64;
                num::exp2(-model.b * shift1 * D)
            }
        };
        cardinality * sigma * sigma * p * num::exp2(2.0 * level as f64)
    };

    let mut last_card = 0.0;
    for (i, level) in ((model.j0 as i32 - 1)..=(up_to_level as i32)).enumerate() {
        let card = cardinalities[i] as f64;
        last_card = card;
        let s = summand(level, card, model);
        acc += s;
        levels.push(level);
        summands.push(s);
        partial_sums.push(acc);
    }

    let h1_regime = model.h1_regime();
    if !h1_regime {
        return SummabilityReport {
            levels,
            summands,
            partial_sums,
            total: None,
            tail_fraction: 1.0,
            h1_regime,
        };
    }
    // Tail: cardinalities continue as |∇_j| ≈ |∇_J| 4^{j-J}.
    let mut total = acc;
    let mut level = up_to_level as i32 + 1;
    let mut card = last_card * 4.0;
    loop {
        let s = summand(level, card, model);
        total += s;
        if s < 1e-16 * total || level > up_to_level as i32 + 2000 {
            break;
        }
        level += 1;
        card *= 4.0;
    }
    SummabilityReport {
        levels,
        summands,
        partial_sums,
        total: Some(total),
        tail_fraction: (total - acc) / total,
        h1_regime,
    }
}
