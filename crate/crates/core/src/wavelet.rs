//! Biorthogonal spline wavelet filter banks and the 2-D separable transform.
//!
//! The filters are the classical spline biorthogonal pairs: the primal
//! lowpass is a centered binomial (B-spline) filter with `r` zeros at π, the
//! dual lowpass is the matching Bezout complement. Both are dyadic rationals,
//! generated here exactly from the product form rather than hardcoded tables.
//! With `r` primal zeros at π the analysis highpass annihilates discrete
//! polynomials of degree `< r`.
//!
//! Transforms act on `(2^J + 1)²` grids with whole-sample symmetric
//! extension at the square edge, so every level keeps `2^j + 1` scaling
//! columns and `2^j` detail columns per direction and the transform is
//! non-expansive and exactly invertible.
//!
//! Coefficients are stored per level and type in row-major bands. Values are
//! kept in the `L2` convention produced by the transform (approximate
//! pairings against the L²-normalized duals); `Lp` renormalization is the
//! exact diagonal level scaling `2^{jd(1/2 - 1/p)}`.
//!
//! Asymmetry note: with equal-order spline pairs both the primal and the
//! dual wavelet annihilate polynomials of degree `< r`, but smoothness is
//! one-sided — the spline (synthesis) side is `C^{r-2}` while the dual side
//! is much rougher. Analyses that need `r` moments get them from the dual
//! highpass; nothing here asserts dual smoothness beyond what the pair
//! construction provides.

use alloc::vec;
use alloc::vec::Vec;

use crate::domain::{Point, Rect, Square};
use crate::field::{Field, Grid};
use crate::num;
use crate::{Error, Result};

/// Finite filter: `taps[i]` sits at position `lo + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Filter {
    pub lo: i32,
    pub taps: Vec<f64>,
}

impl Filter {
    pub fn hi(&self) -> i32 {
        self.lo + self.taps.len() as i32 - 1
    }

    /// Discrete moment `Σ_n taps[n] · n^t`.
    pub fn moment(&self, t: u32) -> f64 {
        let mut acc = 0.0;
        for (i, w) in self.taps.iter().enumerate() {
            let n = (self.lo + i as i32) as f64;
            let mut pw = 1.0;
            for _ in 0..t {
                pw *= n;
            }
            acc += w * pw;
        }
        acc
    }
}

/// Laurent polynomial product of two filters.
fn convolve(a: &Filter, b: &Filter) -> Filter {
    let mut taps = vec![0.0; a.taps.len() + b.taps.len() - 1];
    for (i, x) in a.taps.iter().enumerate() {
        for (j, y) in b.taps.iter().enumerate() {
            taps[i + j] += x * y;
        }
    }
    Filter {
        lo: a.lo + b.lo,
        taps,
    }
}

fn binomial(n: u64, k: u64) -> f64 {
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Quadrature mirror: `out[n] = (-1)^n · f[1 - n]`.
fn alternating_flip(f: &Filter) -> Filter {
    let lo = 1 - f.hi();
    let len = f.taps.len();
    let mut taps = vec![0.0; len];
    for (i, t) in taps.iter_mut().enumerate() {
        let n = lo + i as i32;
        let sign = if n.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        let src = (1 - n - f.lo) as usize;
        *t = sign * f.taps[src];
    }
    Filter { lo, taps }
}

/// Supported filter families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Spline biorthogonal (CDF) pair with equal primal/dual moment order.
    SplineBiorthogonal,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::SplineBiorthogonal => "spline-biorthogonal",
        }
    }
}

/// A biorthogonal wavelet basis: filter bank plus index geometry.
#[derive(Debug, Clone)]
pub struct WaveletBasis {
    family: Family,
    r: usize,
    primal_lo: Filter,
    dual_lo: Filter,
    primal_hi: Filter,
    dual_hi: Filter,
    support_radius: f64,
    smoothness: u32,
}

impl WaveletBasis {
    pub fn family(&self) -> Family {
        self.family
    }

    /// Vanishing moments `r` of the analysis highpass.
    pub fn vanishing_moments(&self) -> usize {
        self.r
    }

    /// Half-width `N` such that all four generator supports lie in `[-N, N]`.
    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    /// Primal smoothness order of the spline side (documentation only).
    pub fn smoothness(&self) -> u32 {
        self.smoothness
    }

    pub fn primal_lowpass(&self) -> &Filter {
        &self.primal_lo
    }

    pub fn dual_lowpass(&self) -> &Filter {
        &self.dual_lo
    }

    pub fn primal_highpass(&self) -> &Filter {
        &self.primal_hi
    }

    pub fn dual_highpass(&self) -> &Filter {
        &self.dual_hi
    }
}

const SUPPORTED_MAX_MOMENTS: usize = 8;

/// Build a spline biorthogonal basis with at least the requested moments.
///
/// Moment counts round up to the next even integer; the spline construction
/// with equal orders needs `r + r̃` even and the symmetric whole-sample
/// boundary scheme needs odd filter lengths, both of which even `r` gives.
pub fn build_basis(family: &str, min_vanishing_moments: usize) -> Result<WaveletBasis> {
    match family {
        "spline-biorthogonal" | "cdf-spline" | "bior-spline" => {}
        other => return Err(Error::UnsupportedFamily(alloc::string::String::from(other))),
    }
    if min_vanishing_moments > SUPPORTED_MAX_MOMENTS {
        return Err(Error::UnachievableMoments {
            requested: min_vanishing_moments,
            supported_max: SUPPORTED_MAX_MOMENTS,
        });
    }
    let r = min_vanishing_moments.max(2).div_ceil(2) * 2;

    let sqrt2 = core::f64::consts::SQRT_2;
    // cos²(ω/2) and sin²(ω/2) as Laurent polynomials in e^{-iω}.
    let cos2 = Filter {
        lo: -1,
        taps: vec![0.25, 0.5, 0.25],
    };
    let sin2 = Filter {
        lo: -1,
        taps: vec![-0.25, 0.5, -0.25],
    };

    // Primal lowpass: √2 · cos^r(ω/2).
    let mut primal_lo = Filter {
        lo: 0,
        taps: vec![1.0],
    };
    for _ in 0..r / 2 {
        primal_lo = convolve(&primal_lo, &cos2);
    }
    for t in &mut primal_lo.taps {
        *t *= sqrt2;
    }

    // Dual lowpass: √2 · cos^r(ω/2) · Σ_{k<L} C(L-1+k, k) sin^{2k}(ω/2), L = r.
    let l = r; // (r + r̃)/2 with r̃ = r
    let mut bezout = Filter {
        lo: 0,
        taps: vec![1.0],
    };
    let mut sin_pow = Filter {
        lo: 0,
        taps: vec![1.0],
    };
    let mut acc = Filter {
        lo: -((l as i32) - 1),
        taps: vec![0.0; 2 * l - 1],
    };
    for k in 0..l {
        let c = binomial((l - 1 + k) as u64, k as u64);
        for (i, t) in sin_pow.taps.iter().enumerate() {
            let pos = sin_pow.lo + i as i32;
            acc.taps[(pos - acc.lo) as usize] += c * t;
        }
        if k + 1 < l {
            sin_pow = convolve(&sin_pow, &sin2);
        }
    }
    bezout.taps = acc.taps;
    bezout.lo = acc.lo;
    let mut dual_lo = bezout;
    for _ in 0..r / 2 {
        dual_lo = convolve(&dual_lo, &cos2);
    }
    for t in &mut dual_lo.taps {
        *t *= sqrt2;
    }

    let primal_hi = alternating_flip(&dual_lo);
    let dual_hi = alternating_flip(&primal_lo);

    // Generator supports: φ ⊂ [lo_h, hi_h], φ̃ ⊂ [lo_h̃, hi_h̃],
    // ψ, ψ̃ ⊂ [(1 - A - B)/2, (1 + A + B)/2] with A, B the lowpass half-widths.
    let a = primal_lo.hi() as f64;
    let b = dual_lo.hi() as f64;
    let support_radius = b.max((1.0 + a + b) / 2.0);

    Ok(WaveletBasis {
        family: Family::SplineBiorthogonal,
        r,
        primal_lo,
        dual_lo,
        primal_hi,
        dual_hi,
        support_radius,
        smoothness: (r as u32).saturating_sub(2),
    })
}

/// Coefficient value convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Normalization {
    /// Pairings against L²-normalized duals.
    L2,
    /// Pairings against the `p`-modified duals (level scaling applied).
    Lp(f64),
}

/// Index of one basis function: type 0 is the scaling level (`level = j0-1`),
/// types 1–3 are the detail orientations at `level ≥ j0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WaveletIndex {
    pub kind: u8,
    pub level: i32,
    pub k: [i32; 2],
}

/// Dense per-level coefficient storage for the 2-D transform.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    pub family: Family,
    /// Vanishing moments of the basis the values were computed against.
    pub vanishing_moments: usize,
    pub square: Square,
    pub j0: u32,
    pub grid_level: u32,
    pub normalization: Normalization,
    /// Scaling coefficients, `(2^{j0}+1)²` row-major.
    pub scaling: Vec<f64>,
    /// `levels[l]` holds the three detail bands of level `j0 + l`.
    pub levels: Vec<[Vec<f64>; 3]>,
}

/// Row-major width/height of a detail band.
pub fn band_dims(level: u32, kind: u8) -> (usize, usize) {
    let n = 1usize << level;
    match kind {
        1 => (n, n + 1),
        2 => (n + 1, n),
        3 => (n, n),
        _ => (n + 1, n + 1), // scaling grid of level `level`
    }
}

impl CoefficientTable {
    pub fn zeros(basis: &WaveletBasis, square: Square, j0: u32, grid_level: u32) -> Result<Self> {
        if j0 >= grid_level {
            return Err(Error::LevelRange {
                j0: j0 as i32,
                grid_level: grid_level as i32,
            });
        }
        let ns = (1usize << j0) + 1;
        let mut levels = Vec::with_capacity((grid_level - j0) as usize);
        for j in j0..grid_level {
            let bands = core::array::from_fn(|kind| {
                let (w, h) = band_dims(j, kind as u8 + 1);
                vec![0.0; w * h]
            });
            levels.push(bands);
        }
        Ok(Self {
            family: basis.family(),
            vanishing_moments: basis.vanishing_moments(),
            square,
            j0,
            grid_level,
            normalization: Normalization::L2,
            scaling: vec![0.0; ns * ns],
            levels,
        })
    }

    /// Empty table with the same shape, basis tags and normalization.
    pub fn zeros_like(&self) -> Self {
        let mut out = self.clone();
        out.scaling.iter_mut().for_each(|v| *v = 0.0);
        for bands in out.levels.iter_mut() {
            for band in bands {
                band.iter_mut().for_each(|v| *v = 0.0);
            }
        }
        out
    }

    /// Wavelet levels stored in the table (`j0 ..= grid_level - 1`).
    pub fn wavelet_levels(&self) -> impl Iterator<Item = u32> + '_ {
        self.j0..self.grid_level
    }

    pub fn band(&self, level: u32, kind: u8) -> &[f64] {
        &self.levels[(level - self.j0) as usize][kind as usize - 1]
    }

    pub fn band_mut(&mut self, level: u32, kind: u8) -> &mut [f64] {
        &mut self.levels[(level - self.j0) as usize][kind as usize - 1]
    }

    pub fn get(&self, idx: WaveletIndex) -> f64 {
        if idx.kind == 0 {
            let w = (1usize << self.j0) + 1;
            self.scaling[idx.k[1] as usize * w + idx.k[0] as usize]
        } else {
            let (w, _) = band_dims(idx.level as u32, idx.kind);
            self.band(idx.level as u32, idx.kind)[idx.k[1] as usize * w + idx.k[0] as usize]
        }
    }

    pub fn set(&mut self, idx: WaveletIndex, v: f64) {
        if idx.kind == 0 {
            let w = (1usize << self.j0) + 1;
            self.scaling[idx.k[1] as usize * w + idx.k[0] as usize] = v;
        } else {
            let (w, _) = band_dims(idx.level as u32, idx.kind);
            let j0 = self.j0;
            self.levels[(idx.level as u32 - j0) as usize][idx.kind as usize - 1]
                [idx.k[1] as usize * w + idx.k[0] as usize] = v;
        }
    }

    pub fn total_coefficients(&self) -> usize {
        self.scaling.len() + self.levels.iter().flatten().map(Vec::len).sum::<usize>()
    }

    /// Visit every coefficient with its index.
    pub fn for_each(&self, mut f: impl FnMut(WaveletIndex, f64)) {
        let ws = (1usize << self.j0) + 1;
        for ky in 0..ws {
            for kx in 0..ws {
                f(
                    WaveletIndex {
                        kind: 0,
                        level: self.j0 as i32 - 1,
                        k: [kx as i32, ky as i32],
                    },
                    self.scaling[ky * ws + kx],
                );
            }
        }
        for j in self.wavelet_levels() {
            for kind in 1u8..=3 {
                let (w, h) = band_dims(j, kind);
                let band = self.band(j, kind);
                for ky in 0..h {
                    for kx in 0..w {
                        f(
                            WaveletIndex {
                                kind,
                                level: j as i32,
                                k: [kx as i32, ky as i32],
                            },
                            band[ky * w + kx],
                        );
                    }
                }
            }
        }
    }

    /// Diagonal scaling from L² pairings to the `p`-modified duals:
    /// level-`j` detail values pick up `2^{jd(1/2 - 1/p)}` (`d = 2`),
    /// scaling values are untouched.
    pub fn lp_factor(level: u32, p: f64) -> f64 {
        num::exp2(2.0 * level as f64 * (0.5 - 1.0 / p))
    }

    pub fn to_lp(&self, p: f64) -> Result<Self> {
        if self.normalization != Normalization::L2 {
            return Err(Error::WrongNormalization { expected: "L2" });
        }
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::InvalidParam("p must be a positive finite real"));
        }
        let mut out = self.clone();
        for j in self.j0..self.grid_level {
            let f = Self::lp_factor(j, p);
            for band in &mut out.levels[(j - self.j0) as usize] {
                for v in band.iter_mut() {
                    *v *= f;
                }
            }
        }
        out.normalization = Normalization::Lp(p);
        Ok(out)
    }

    pub fn to_l2(&self) -> Result<Self> {
        let p = match self.normalization {
            Normalization::Lp(p) => p,
            Normalization::L2 => return Ok(self.clone()),
        };
        let mut out = self.clone();
        for j in self.j0..self.grid_level {
            let f = Self::lp_factor(j, p);
            for band in &mut out.levels[(j - self.j0) as usize] {
                for v in band.iter_mut() {
                    *v /= f;
                }
            }
        }
        out.normalization = Normalization::L2;
        Ok(out)
    }
}

/// Whole-sample reflection into `[0, n]` (period `2n`).
#[inline]
fn reflect_ws(i: i64, n: i64) -> usize {
    let p = 2 * n;
    let mut t = i.rem_euclid(p);
    if t > n {
        t = p - t;
    }
    t as usize
}

/// Half-sample reflection into `[0, half-1]` (mirrors at -1/2 and half-1/2).
#[inline]
fn reflect_hs(i: i64, half: i64) -> usize {
    let p = 2 * half;
    let mut t = i.rem_euclid(p);
    if t >= half {
        t = p - 1 - t;
    }
    t as usize
}

fn analyze_1d(src: &[f64], dual_lo: &Filter, dual_hi: &Filter, a: &mut [f64], d: &mut [f64]) {
    let n = (src.len() - 1) as i64;
    for (k, ak) in a.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (i, w) in dual_lo.taps.iter().enumerate() {
            acc += w * src[reflect_ws(2 * k as i64 + dual_lo.lo as i64 + i as i64, n)];
        }
        *ak = acc;
    }
    for (k, dk) in d.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (i, w) in dual_hi.taps.iter().enumerate() {
            acc += w * src[reflect_ws(2 * k as i64 + dual_hi.lo as i64 + i as i64, n)];
        }
        *dk = acc;
    }
}

fn synthesize_1d(a: &[f64], d: &[f64], primal_lo: &Filter, primal_hi: &Filter, dst: &mut [f64]) {
    let half = d.len() as i64;
    for (m, out) in dst.iter_mut().enumerate() {
        let m = m as i64;
        let mut acc = 0.0;
        for (i, w) in primal_lo.taps.iter().enumerate() {
            let pos = primal_lo.lo as i64 + i as i64;
            if (m - pos).rem_euclid(2) == 0 {
                acc += w * a[reflect_ws((m - pos) / 2, half)];
            }
        }
        for (i, w) in primal_hi.taps.iter().enumerate() {
            let pos = primal_hi.lo as i64 + i as i64;
            if (m - pos).rem_euclid(2) == 0 {
                acc += w * d[reflect_hs((m - pos) / 2, half)];
            }
        }
        *out = acc;
    }
}

/// Analyze a field into a coefficient table with levels `j0-1 .. J-1`.
///
/// The field must live on a level-`J` dyadic grid; values outside the domain
/// of interest should already carry the chosen extension. Samples are
/// identified with fine-scale scaling coefficients via the `2^{-Jd/2}`
/// quadrature factor, so table values approximate pairings against the
/// L²-normalized duals.
pub fn dwt2(field: &Field, basis: &WaveletBasis, j0: u32) -> Result<CoefficientTable> {
    let grid_level = field.grid.level;
    if j0 >= grid_level {
        return Err(Error::LevelRange {
            j0: j0 as i32,
            grid_level: grid_level as i32,
        });
    }
    let mut table = CoefficientTable::zeros(basis, field.grid.square, j0, grid_level)?;

    let scale = num::exp2i(-(grid_level as i32)); // 2^{-Jd/2}, d = 2
    let mut cur: Vec<f64> = field.values.iter().map(|v| v * scale).collect();

    for j in (j0..grid_level).rev() {
        let m = (1usize << (j + 1)) + 1; // nodes per side at the finer level
        let na = (1usize << j) + 1;
        let nd = 1usize << j;

        // Row pass.
        let mut row_a = vec![0.0; na * m];
        let mut row_d = vec![0.0; nd * m];
        let mut abuf = vec![0.0; na];
        let mut dbuf = vec![0.0; nd];
        for y in 0..m {
            analyze_1d(
                &cur[y * m..(y + 1) * m],
                &basis.dual_lo,
                &basis.dual_hi,
                &mut abuf,
                &mut dbuf,
            );
            row_a[y * na..(y + 1) * na].copy_from_slice(&abuf);
            row_d[y * nd..(y + 1) * nd].copy_from_slice(&dbuf);
        }

        // Column pass.
        let mut ll = vec![0.0; na * na];
        let mut col = vec![0.0; m];
        let mut ca = vec![0.0; na];
        let mut cd = vec![0.0; nd];
        for x in 0..na {
            for y in 0..m {
                col[y] = row_a[y * na + x];
            }
            analyze_1d(&col, &basis.dual_lo, &basis.dual_hi, &mut ca, &mut cd);
            for y in 0..na {
                ll[y * na + x] = ca[y];
            }
            let band2 = table.band_mut(j, 2);
            for y in 0..nd {
                band2[y * na + x] = cd[y];
            }
        }
        for x in 0..nd {
            for y in 0..m {
                col[y] = row_d[y * nd + x];
            }
            analyze_1d(&col, &basis.dual_lo, &basis.dual_hi, &mut ca, &mut cd);
            let band1 = table.band_mut(j, 1);
            for y in 0..na {
                band1[y * nd + x] = ca[y];
            }
            let band3 = table.band_mut(j, 3);
            for y in 0..nd {
                band3[y * nd + x] = cd[y];
            }
        }
        cur = ll;
    }
    table.scaling = cur;
    Ok(table)
}

/// Synthesize a field from an L²-normalized coefficient table.
pub fn idwt2(table: &CoefficientTable, basis: &WaveletBasis) -> Result<Field> {
    if table.normalization != Normalization::L2 {
        return Err(Error::WrongNormalization { expected: "L2" });
    }
    let mut cur = table.scaling.clone();
    for j in table.j0..table.grid_level {
        let m = (1usize << (j + 1)) + 1;
        let na = (1usize << j) + 1;
        let nd = 1usize << j;
        let band1 = table.band(j, 1);
        let band2 = table.band(j, 2);
        let band3 = table.band(j, 3);

        // Column synthesis into the [A | D] row layout.
        let mut row_a = vec![0.0; na * m];
        let mut row_d = vec![0.0; nd * m];
        let mut ca = vec![0.0; na];
        let mut cd = vec![0.0; nd];
        let mut col = vec![0.0; m];
        for x in 0..na {
            for y in 0..na {
                ca[y] = cur[y * na + x];
            }
            for y in 0..nd {
                cd[y] = band2[y * na + x];
            }
            synthesize_1d(&ca, &cd, &basis.primal_lo, &basis.primal_hi, &mut col);
            for y in 0..m {
                row_a[y * na + x] = col[y];
            }
        }
        for x in 0..nd {
            for y in 0..na {
                ca[y] = band1[y * nd + x];
            }
            for y in 0..nd {
                cd[y] = band3[y * nd + x];
            }
            synthesize_1d(&ca, &cd, &basis.primal_lo, &basis.primal_hi, &mut col);
            for y in 0..m {
                row_d[y * nd + x] = col[y];
            }
        }

        // Row synthesis.
        let mut next = vec![0.0; m * m];
        let mut arow = vec![0.0; na];
        let mut drow = vec![0.0; nd];
        let mut out = vec![0.0; m];
        for y in 0..m {
            arow.copy_from_slice(&row_a[y * na..(y + 1) * na]);
            drow.copy_from_slice(&row_d[y * nd..(y + 1) * nd]);
            synthesize_1d(&arow, &drow, &basis.primal_lo, &basis.primal_hi, &mut out);
            next[y * m..(y + 1) * m].copy_from_slice(&out);
        }
        cur = next;
    }
    let scale = num::exp2i(table.grid_level as i32);
    for v in &mut cur {
        *v *= scale;
    }
    Ok(Field {
        grid: Grid::new(table.square, table.grid_level),
        values: cur,
    })
}

/// Support cube `Q_{j,k} = 2^{-j} k + 2^{-j} [-N, N]²` in the unit
/// coordinates of the bounding square. Scaling indices (type 0, stored at
/// level `j0 - 1`) use the scale `j0` their generators live at.
pub fn support_cube(idx: WaveletIndex, basis: &WaveletBasis) -> Rect {
    let j = if idx.kind == 0 {
        idx.level + 1
    } else {
        idx.level
    };
    let scale = num::exp2(-(j as f64));
    let n = basis.support_radius();
    Rect {
        lo: Point::new((idx.k[0] as f64 - n) * scale, (idx.k[1] as f64 - n) * scale),
        hi: Point::new((idx.k[0] as f64 + n) * scale, (idx.k[1] as f64 + n) * scale),
    }
}
