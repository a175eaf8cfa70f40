//! Integer-order weighted Sobolev functionals with boundary-distance weights.
//!
//! The norms follow the derivative characterization of `H^m_{p,θ}`: sums of
//! `∫ |ρ^{|α|} D^α u|^p ρ^{θ-d} dx` over multi-indices `|α| ≤ m`, with
//! `ρ(x) = dist(x, ∂O)`. Quadrature is midpoint over grid cells fully inside
//! the domain — cells touching the boundary are excluded, since negative
//! weight exponents would otherwise blow up on them; the excluded integrands
//! are integrable, so the quadrature converges from below under refinement.
//! Derivatives are second-order central stencils away from the mask edge and
//! first-order one-sided inside the boundary cell layer.

use alloc::vec::Vec;

use crate::domain::PolygonDomain;
use crate::field::{node_mask, Field};
use crate::num;
use crate::{Error, Result};

const DIM: f64 = 2.0;

/// Parameters of `H^m_{p,θ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedParams {
    pub m: u32,
    pub p: f64,
    pub theta: f64,
}

/// Validity of `θ` against the solvability window `(d-κ₀, d-2+p+κ₀)` whose
/// `κ₀ ∈ (0,1)` is non-constructive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThetaRange {
    /// Valid for every κ₀ ∈ (0,1): `d ≤ θ ≤ d-2+p`.
    Unconditional,
    /// Valid for some κ₀ ∈ (0,1): `d-1 < θ < d-1+p`.
    Conditional,
    /// Outside the window for every κ₀.
    Outside,
}

impl WeightedParams {
    pub fn new(m: u32, p: f64, theta: f64) -> Result<Self> {
        if m > 2 {
            return Err(Error::InvalidParam("derivative order m must be ≤ 2"));
        }
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::InvalidParam("p must lie in (1, ∞)"));
        }
        if !theta.is_finite() {
            return Err(Error::InvalidParam("theta must be finite"));
        }
        Ok(Self { m, p, theta })
    }

    /// `δ = 1 + (d - θ)/p`.
    pub fn delta(&self) -> f64 {
        1.0 + (DIM - self.theta) / self.p
    }

    pub fn theta_range(&self) -> ThetaRange {
        if self.theta >= DIM && self.theta <= DIM - 2.0 + self.p {
            ThetaRange::Unconditional
        } else if self.theta > DIM - 1.0 && self.theta < DIM - 1.0 + self.p {
            ThetaRange::Conditional
        } else {
            ThetaRange::Outside
        }
    }
}

/// Grid-level derivative evaluations restricted to the mask.
struct Stencils<'a> {
    field: &'a Field,
    mask: &'a [bool],
    n: usize,
    h: f64,
}

impl<'a> Stencils<'a> {
    fn new(field: &'a Field, mask: &'a [bool]) -> Self {
        Self {
            field,
            mask,
            n: field.grid.n(),
            h: field.grid.spacing(),
        }
    }

    #[inline]
    fn has(&self, ix: i64, iy: i64) -> bool {
        ix >= 0
            && iy >= 0
            && ix < self.n as i64
            && iy < self.n as i64
            && self.mask[iy as usize * self.n + ix as usize]
    }

    #[inline]
    fn v(&self, ix: i64, iy: i64) -> f64 {
        self.field.values[iy as usize * self.n + ix as usize]
    }

    fn d1(&self, ix: i64, iy: i64, along_x: bool) -> f64 {
        let (dx, dy) = if along_x { (1, 0) } else { (0, 1) };
        let (fp, fm) = (self.has(ix + dx, iy + dy), self.has(ix - dx, iy - dy));
        if fp && fm {
            (self.v(ix + dx, iy + dy) - self.v(ix - dx, iy - dy)) / (2.0 * self.h)
        } else if fp {
            (self.v(ix + dx, iy + dy) - self.v(ix, iy)) / self.h
        } else if fm {
            (self.v(ix, iy) - self.v(ix - dx, iy - dy)) / self.h
        } else {
            0.0
        }
    }

    fn d2(&self, ix: i64, iy: i64, along_x: bool) -> f64 {
        let (dx, dy) = if along_x { (1, 0) } else { (0, 1) };
        let h2 = self.h * self.h;
        if self.has(ix + dx, iy + dy) && self.has(ix - dx, iy - dy) {
            (self.v(ix + dx, iy + dy) - 2.0 * self.v(ix, iy) + self.v(ix - dx, iy - dy)) / h2
        } else if self.has(ix + dx, iy + dy) && self.has(ix + 2 * dx, iy + 2 * dy) {
            (self.v(ix, iy) - 2.0 * self.v(ix + dx, iy + dy) + self.v(ix + 2 * dx, iy + 2 * dy))
                / h2
        } else if self.has(ix - dx, iy - dy) && self.has(ix - 2 * dx, iy - 2 * dy) {
            (self.v(ix, iy) - 2.0 * self.v(ix - dx, iy - dy) + self.v(ix - 2 * dx, iy - 2 * dy))
                / h2
        } else {
            0.0
        }
    }

    fn dxy(&self, ix: i64, iy: i64) -> f64 {
        let h2 = self.h * self.h;
        if self.has(ix + 1, iy + 1)
            && self.has(ix + 1, iy - 1)
            && self.has(ix - 1, iy + 1)
            && self.has(ix - 1, iy - 1)
        {
            return (self.v(ix + 1, iy + 1) - self.v(ix + 1, iy - 1) - self.v(ix - 1, iy + 1)
                + self.v(ix - 1, iy - 1))
                / (4.0 * h2);
        }
        // One-sided quadrant fallback in the boundary layer.
        for (sx, sy) in [(1i64, 1i64), (-1, 1), (1, -1), (-1, -1)] {
            if self.has(ix + sx, iy) && self.has(ix, iy + sy) && self.has(ix + sx, iy + sy) {
                return (self.v(ix + sx, iy + sy) - self.v(ix + sx, iy) - self.v(ix, iy + sy)
                    + self.v(ix, iy))
                    / (sx as f64 * sy as f64 * h2);
            }
        }
        0.0
    }

    /// All order-`ord` derivatives at a node, enumerated by multi-index.
    fn derivatives(&self, ix: i64, iy: i64, ord: u32) -> Vec<f64> {
        match ord {
            0 => alloc::vec![self.v(ix, iy)],
            1 => alloc::vec![self.d1(ix, iy, true), self.d1(ix, iy, false)],
            _ => alloc::vec![
                self.d2(ix, iy, true),
                self.dxy(ix, iy),
                self.d2(ix, iy, false),
            ],
        }
    }
}

/// One additive term of the weighted norm.
#[derive(Debug, Clone, Copy)]
pub struct WeightedTerm {
    /// Derivative order `|α|` the term aggregates.
    pub order: u32,
    /// `Σ_{|α| = order} ∫ |ρ^{|α|} D^α u|^p ρ^{θ-d} dx`.
    pub value: f64,
}

/// Weighted Sobolev norm with its per-order breakdown.
#[derive(Debug, Clone)]
pub struct WeightedNorm {
    pub params: WeightedParams,
    pub terms: Vec<WeightedTerm>,
}

impl WeightedNorm {
    /// `(Σ terms)^{1/p}`.
    pub fn total(&self) -> f64 {
        let sum: f64 = self.terms.iter().map(|t| t.value).sum();
        num::powf(sum, 1.0 / self.params.p)
    }
}

fn quadrature_nodes(
    field: &Field,
    domain: &PolygonDomain,
    mask: &[bool],
) -> Result<Vec<(usize, f64)>> {
    let n = field.grid.n();
    let h = field.grid.spacing();
    let cut = h * core::f64::consts::FRAC_1_SQRT_2;
    let mut nodes = Vec::new();
    for iy in 0..n {
        for ix in 0..n {
            if !mask[iy * n + ix] {
                continue;
            }
            let rho = domain.rho(field.grid.node(ix, iy));
            if rho > cut {
                nodes.push((iy * n + ix, rho));
            }
        }
    }
    if nodes.is_empty() {
        return Err(Error::EmptyMask);
    }
    Ok(nodes)
}

/// `‖u‖_{H^m_{p,θ}}` via the derivative characterization.
pub fn weighted_sobolev_norm(
    field: &Field,
    domain: &PolygonDomain,
    params: &WeightedParams,
) -> Result<WeightedNorm> {
    let mask = node_mask(field.grid, domain);
    let nodes = quadrature_nodes(field, domain, &mask)?;
    let st = Stencils::new(field, &mask);
    let n = field.grid.n();
    let h = field.grid.spacing();
    let cell = h * h;

    let mut terms = Vec::new();
    for ord in 0..=params.m {
        let mut acc = 0.0;
        for &(lin, rho) in &nodes {
            let (ix, iy) = ((lin % n) as i64, (lin / n) as i64);
            let weight = num::powf(rho, ord as f64 * params.p + params.theta - DIM);
            for d in st.derivatives(ix, iy, ord) {
                acc += num::abs_pow(d, params.p) * weight;
            }
        }
        terms.push(WeightedTerm {
            order: ord,
            value: acc * cell,
        });
    }
    Ok(WeightedNorm {
        params: *params,
        terms,
    })
}

/// `‖ρ^{m-δ} |D^m u|_{ℓ_p}‖_{L_p(O)}` with `δ = 1 + (d-θ)/p`.
///
/// This is the time-sliced functional the solution estimate bounds; the
/// solver reports it along trajectories as a measured diagnostic.
pub fn weighted_derivative_functional(
    field: &Field,
    domain: &PolygonDomain,
    m: u32,
    p: f64,
    theta: f64,
) -> Result<f64> {
    if !(1..=2).contains(&m) {
        return Err(Error::InvalidParam("diagnostic order m must be 1 or 2"));
    }
    let params = WeightedParams::new(m, p, theta)?;
    let delta = params.delta();
    let mask = node_mask(field.grid, domain);
    let nodes = quadrature_nodes(field, domain, &mask)?;
    let st = Stencils::new(field, &mask);
    let n = field.grid.n();
    let h = field.grid.spacing();

    let mut acc = 0.0;
    for &(lin, rho) in &nodes {
        let (ix, iy) = ((lin % n) as i64, (lin / n) as i64);
        // |D^m u|_{ℓ_p}^p then the outer L_p power collapse: both are p.
        let mut dsum = 0.0;
        for d in st.derivatives(ix, iy, m) {
            dsum += num::abs_pow(d, p);
        }
        acc += num::powf(rho, (m as f64 - delta) * p) * dsum;
    }
    Ok(num::powf(acc * h * h, 1.0 / p))
}
