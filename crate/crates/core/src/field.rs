//! Sampled fields on dyadic grids over a bounding square.
//!
//! A level-`J` grid has `2^J + 1` nodes per side including both square
//! edges; values are stored row-major with `x` fastest. Fields carry no
//! domain knowledge of their own — masks are derived from a
//! [`PolygonDomain`] on demand.

use alloc::vec;
use alloc::vec::Vec;

use crate::domain::{Point, PolygonDomain, Square};
use crate::num;
use crate::{Error, Result};

/// Dyadic grid: `(2^level + 1)²` nodes over `square`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub square: Square,
    pub level: u32,
}

impl Grid {
    pub fn new(square: Square, level: u32) -> Self {
        Self { square, level }
    }

    /// Nodes per side.
    pub fn n(&self) -> usize {
        (1usize << self.level) + 1
    }

    /// Physical distance between neighboring nodes.
    pub fn spacing(&self) -> f64 {
        self.square.side * num::exp2i(-(self.level as i32))
    }

    pub fn node(&self, ix: usize, iy: usize) -> Point {
        let h = self.spacing();
        Point::new(
            self.square.x0 + ix as f64 * h,
            self.square.y0 + iy as f64 * h,
        )
    }

    pub fn len(&self) -> usize {
        self.n() * self.n()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Scalar samples on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            values: vec![0.0; grid.len()],
            grid,
        }
    }

    /// Sample `f` at every grid node.
    pub fn sample(grid: Grid, f: impl Fn(Point) -> f64) -> Self {
        let n = grid.n();
        let mut values = Vec::with_capacity(n * n);
        for iy in 0..n {
            for ix in 0..n {
                values.push(f(grid.node(ix, iy)));
            }
        }
        Self { grid, values }
    }

    /// Sample `f` inside the domain, zero elsewhere (boundary counts outside).
    pub fn sample_masked(grid: Grid, domain: &PolygonDomain, f: impl Fn(Point) -> f64) -> Self {
        Self::sample(grid, |p| if domain.contains(p) { f(p) } else { 0.0 })
    }

    #[inline]
    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.grid.n() + ix]
    }

    #[inline]
    pub fn set(&mut self, ix: usize, iy: usize, v: f64) {
        let n = self.grid.n();
        self.values[iy * n + ix] = v;
    }

    /// Bilinear interpolation; points outside the square clamp to its edge.
    pub fn bilinear(&self, p: Point) -> f64 {
        let n = self.grid.n();
        let h = self.grid.spacing();
        let fx = ((p.x - self.grid.square.x0) / h).clamp(0.0, (n - 1) as f64);
        let fy = ((p.y - self.grid.square.y0) / h).clamp(0.0, (n - 1) as f64);
        let ix = (fx as usize).min(n - 2);
        let iy = (fy as usize).min(n - 2);
        let (tx, ty) = (fx - ix as f64, fy - iy as f64);
        let v00 = self.at(ix, iy);
        let v10 = self.at(ix + 1, iy);
        let v01 = self.at(ix, iy + 1);
        let v11 = self.at(ix + 1, iy + 1);
        v00 * (1.0 - tx) * (1.0 - ty)
            + v10 * tx * (1.0 - ty)
            + v01 * (1.0 - tx) * ty
            + v11 * tx * ty
    }

    /// `L_p` norm over masked nodes, cell-area weighted.
    pub fn lp_norm_masked(&self, mask: &[bool], p: f64) -> f64 {
        let h = self.grid.spacing();
        let mut acc = 0.0;
        for (v, &m) in self.values.iter().zip(mask) {
            if m {
                acc += num::abs_pow(*v, p);
            }
        }
        num::powf(acc * h * h, 1.0 / p)
    }

    /// Pointwise check that two fields share a grid.
    pub fn same_grid(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch {
                expected_nodes: self.grid.n(),
                got_nodes: other.grid.n(),
            });
        }
        Ok(())
    }
}

/// Inside-domain indicator per grid node.
pub fn node_mask(grid: Grid, domain: &PolygonDomain) -> Vec<bool> {
    let n = grid.n();
    let mut mask = Vec::with_capacity(n * n);
    for iy in 0..n {
        for ix in 0..n {
            mask.push(domain.contains(grid.node(ix, iy)));
        }
    }
    mask
}

/// How samples are assigned outside the domain before analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtensionPolicy {
    /// Exterior nodes are zero.
    ZeroFill,
    /// Exterior nodes take the value mirrored across the nearest boundary
    /// edge when the mirror lands inside the domain, zero otherwise.
    Reflect,
}

/// Extend a field given on the domain to the whole square.
///
/// Exterior values of `field` are ignored; interior values pass through.
pub fn extend(field: &Field, domain: &PolygonDomain, policy: ExtensionPolicy) -> Field {
    let grid = field.grid;
    let n = grid.n();
    let mask = node_mask(grid, domain);
    let mut out = Field::zeros(grid);
    // Interior pass-through first so Reflect can interpolate interior values.
    let mut interior = Field::zeros(grid);
    for ((dst, src), m) in interior.values.iter_mut().zip(&field.values).zip(&mask) {
        if *m {
            *dst = *src;
        }
    }
    for iy in 0..n {
        for ix in 0..n {
            let i = iy * n + ix;
            if mask[i] {
                out.values[i] = field.values[i];
            } else if policy == ExtensionPolicy::Reflect {
                let p = grid.node(ix, iy);
                let q = domain.nearest_boundary_point(p);
                let mirror = Point::new(2.0 * q.x - p.x, 2.0 * q.y - p.y);
                if domain.contains(mirror) {
                    out.values[i] = interior.bilinear(mirror);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bilinear_reproduces_affine() {
        let grid = Grid::new(Square::new(0.0, 0.0, 1.0), 3);
        let f = Field::sample(grid, |p| 2.0 * p.x - 3.0 * p.y + 0.5);
        for (px, py) in [(0.13, 0.77), (0.5, 0.5), (0.99, 0.01)] {
            let exact = 2.0 * px - 3.0 * py + 0.5;
            assert!((f.bilinear(Point::new(px, py)) - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn reflect_extension_mirrors_across_edge() {
        let domain = PolygonDomain::unit_square();
        let grid = Grid::new(domain.bounding_square(), 5);
        let f = Field::sample_masked(grid, &domain, |p| p.x);
        let ext = extend(&f, &domain, ExtensionPolicy::Reflect);
        // A node just left of x = 0 mirrors to x > 0, so values agree.
        let h = grid.spacing();
        let outside = grid.node(6, 16); // x = -0.5 + 6h = -0.125 < 0
        assert!(outside.x < 0.0 && outside.y > 0.0 && outside.y < 1.0);
        let mirrored = ext.at(6, 16);
        assert!((mirrored - (-outside.x)).abs() < h, "got {mirrored}");
    }
}
