//! Polygonal Lipschitz domains.
//!
//! A [`PolygonDomain`] is a simple closed polygon (counterclockwise vertex
//! order) together with its bounding square and corner-angle data. The domain
//! is treated as open: boundary points count as outside, matching the zero
//! Dirichlet convention of the solver.
//!
//! Besides membership and exact boundary distance the module computes the
//! dyadic boundary-layer index sets `Λ_{j,m}`: all wavelet indices at level
//! `j` whose support cube meets the domain, bucketed by the distance
//! `ρ_{j,k}` of the cube to the boundary in units of `2^{-j}`. Their
//! cardinalities are the quantity the Lipschitz bound `|Λ_{j,m}| ≲ 2^{j(d-1)}`
//! speaks about.

use alloc::string::String;
use alloc::vec::Vec;

use crate::num;
use crate::wavelet::{WaveletBasis, WaveletIndex};
use crate::{Error, Result};

/// Point in the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        num::hypot(self.x - other.x, self.y - other.y)
    }
}

/// Axis-aligned square, lower-left corner plus side length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Square {
    pub x0: f64,
    pub y0: f64,
    pub side: f64,
}

impl Square {
    pub const fn new(x0: f64, y0: f64, side: f64) -> Self {
        Self { x0, y0, side }
    }

    /// Map a physical point into the unit coordinates of the square.
    pub fn to_unit(&self, p: Point) -> Point {
        Point::new((p.x - self.x0) / self.side, (p.y - self.y0) / self.side)
    }

    /// Map unit coordinates back to physical ones.
    pub fn from_unit(&self, p: Point) -> Point {
        Point::new(self.x0 + p.x * self.side, self.y0 + p.y * self.side)
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x0 && p.x <= self.x0 + self.side && p.y >= self.y0 && p.y <= self.y0 + self.side
    }
}

/// Axis-aligned rectangle `[lo.x, hi.x] × [lo.y, hi.y]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub lo: Point,
    pub hi: Point,
}

/// Distance from a point to a closed segment.
pub fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2;
    let t = t.clamp(0.0, 1.0);
    p.dist(Point::new(a.x + t * dx, a.y + t * dy))
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |o: f64, p: Point, q: Point, r: Point| {
        o == 0.0
            && r.x >= p.x.min(q.x)
            && r.x <= p.x.max(q.x)
            && r.y >= p.y.min(q.y)
            && r.y <= p.y.max(q.y)
    };
    on(d1, c, d, a) || on(d2, c, d, b) || on(d3, a, b, c) || on(d4, a, b, d)
}

/// Distance between two closed segments.
pub fn segment_segment_distance(a: Point, b: Point, c: Point, d: Point) -> f64 {
    if segments_intersect(a, b, c, d) {
        return 0.0;
    }
    segment_distance(a, c, d)
        .min(segment_distance(b, c, d))
        .min(segment_distance(c, a, b))
        .min(segment_distance(d, a, b))
}

/// Distance from a closed segment to the solid rectangle `r`.
pub fn segment_rect_distance(a: Point, b: Point, r: Rect) -> f64 {
    let inside = |p: Point| p.x >= r.lo.x && p.x <= r.hi.x && p.y >= r.lo.y && p.y <= r.hi.y;
    if inside(a) || inside(b) {
        return 0.0;
    }
    let c = [
        r.lo,
        Point::new(r.hi.x, r.lo.y),
        r.hi,
        Point::new(r.lo.x, r.hi.y),
    ];
    let mut d = f64::INFINITY;
    for i in 0..4 {
        d = d.min(segment_segment_distance(a, b, c[i], c[(i + 1) % 4]));
    }
    d
}

fn polygon_contains(verts: &[Point], p: Point) -> bool {
    let mut inside = false;
    let n = verts.len();
    for i in 0..n {
        let a = verts[i];
        let b = verts[(i + 1) % n];
        if (a.y > p.y) != (b.y > p.y) {
            let x_int = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x_int {
                inside = !inside;
            }
        }
    }
    inside
}

fn polygon_boundary_distance(verts: &[Point], p: Point) -> f64 {
    let n = verts.len();
    let mut d = f64::INFINITY;
    for i in 0..n {
        d = d.min(segment_distance(p, verts[i], verts[(i + 1) % n]));
    }
    d
}

/// Simple closed polygon with geometry queries.
#[derive(Debug, Clone)]
pub struct PolygonDomain {
    name: String,
    vertices: Vec<Point>,
    square: Square,
    angles: Vec<f64>,
    gamma0: f64,
}

impl PolygonDomain {
    /// Build a domain from a vertex list (implicitly closed).
    ///
    /// Vertices are reoriented counterclockwise if needed. With no explicit
    /// bounding square the polygon is centered in a square of twice its
    /// larger extent.
    pub fn from_vertices(
        name: &str,
        mut vertices: Vec<Point>,
        square: Option<Square>,
    ) -> Result<Self> {
        if vertices.len() >= 2 {
            let (first, last) = (vertices[0], *vertices.last().unwrap());
            if first == last {
                vertices.pop();
            }
        }
        if vertices.len() < 3 {
            return Err(Error::InvalidPolygon("fewer than 3 vertices"));
        }
        let n = vertices.len();
        let mut area2 = 0.0;
        for i in 0..n {
            let (a, b) = (vertices[i], vertices[(i + 1) % n]);
            area2 += a.x * b.y - b.x * a.y;
        }
        if area2 == 0.0 {
            return Err(Error::InvalidPolygon("degenerate (zero area)"));
        }
        if area2 < 0.0 {
            vertices.reverse();
        }
        // Simplicity: non-adjacent edges must not cross.
        for i in 0..n {
            let (a, b) = (vertices[i], vertices[(i + 1) % n]);
            for j in (i + 1)..n {
                if j == i || (j + 1) % n == i || (i + 1) % n == j {
                    continue;
                }
                let (c, d) = (vertices[j], vertices[(j + 1) % n]);
                if segments_intersect(a, b, c, d) {
                    return Err(Error::InvalidPolygon("self-intersecting"));
                }
            }
        }

        let square = square.unwrap_or_else(|| {
            let (mut xmin, mut xmax, mut ymin, mut ymax) = (
                f64::INFINITY,
                f64::NEG_INFINITY,
                f64::INFINITY,
                f64::NEG_INFINITY,
            );
            for v in &vertices {
                xmin = xmin.min(v.x);
                xmax = xmax.max(v.x);
                ymin = ymin.min(v.y);
                ymax = ymax.max(v.y);
            }
            let extent = (xmax - xmin).max(ymax - ymin);
            let (cx, cy) = (0.5 * (xmin + xmax), 0.5 * (ymin + ymax));
            Square::new(cx - extent, cy - extent, 2.0 * extent)
        });
        for v in &vertices {
            if !square.contains(*v) {
                return Err(Error::InvalidPolygon(
                    "bounding square does not contain polygon",
                ));
            }
        }

        // Interior angle at each vertex: π minus the signed turn of the
        // counterclockwise traversal; reflex corners exceed π.
        let mut angles = Vec::with_capacity(n);
        let mut gamma0: f64 = 0.0;
        for i in 0..n {
            let prev = vertices[(i + n - 1) % n];
            let v = vertices[i];
            let next = vertices[(i + 1) % n];
            let (ux, uy) = (v.x - prev.x, v.y - prev.y);
            let (wx, wy) = (next.x - v.x, next.y - v.y);
            let turn = num::atan2(ux * wy - uy * wx, ux * wx + uy * wy);
            let angle = core::f64::consts::PI - turn;
            angles.push(angle);
            gamma0 = gamma0.max(angle);
        }

        Ok(Self {
            name: String::from(name),
            vertices,
            square,
            angles,
            gamma0,
        })
    }

    /// L-shape `(-1,1)² \ [0,1)²`, reentrant corner of angle `3π/2` at the origin.
    pub fn l_shape() -> Self {
        let verts = [
            (-1.0, -1.0),
            (1.0, -1.0),
            (1.0, 0.0),
            (0.0, 0.0),
            (0.0, 1.0),
            (-1.0, 1.0),
        ];
        Self::from_vertices(
            "l-shape",
            verts.iter().map(|&(x, y)| Point::new(x, y)).collect(),
            Some(Square::new(-2.0, -2.0, 4.0)),
        )
        .unwrap()
    }

    /// Unit square `(0,1)²`.
    pub fn unit_square() -> Self {
        let verts = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
        Self::from_vertices(
            "unit-square",
            verts.iter().map(|&(x, y)| Point::new(x, y)).collect(),
            Some(Square::new(-0.5, -0.5, 2.0)),
        )
        .unwrap()
    }

    /// Regular hexagon of circumradius 1 centered at the origin.
    pub fn hexagon() -> Self {
        let mut verts = Vec::with_capacity(6);
        for i in 0..6 {
            let phi = core::f64::consts::PI / 3.0 * i as f64;
            verts.push(Point::new(num::cos(phi), num::sin(phi)));
        }
        Self::from_vertices("hexagon", verts, Some(Square::new(-2.0, -2.0, 4.0))).unwrap()
    }

    /// Bundled domain by name.
    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "l-shape" | "lshape" | "l_shape" => Some(Self::l_shape()),
            "unit-square" | "square" | "unit_square" => Some(Self::unit_square()),
            "hexagon" => Some(Self::hexagon()),
            _ => None,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn bounding_square(&self) -> Square {
        self.square
    }

    /// Interior angles per vertex, in traversal order.
    pub fn corner_angles(&self) -> &[f64] {
        &self.angles
    }

    /// Largest interior angle `γ₀`.
    pub fn largest_interior_angle(&self) -> f64 {
        self.gamma0
    }

    /// Largest vertex-to-vertex distance.
    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for (i, a) in self.vertices.iter().enumerate() {
            for b in &self.vertices[i + 1..] {
                d = d.max(a.dist(*b));
            }
        }
        d
    }

    /// Polygon area (shoelace).
    pub fn area(&self) -> f64 {
        let n = self.vertices.len();
        let mut area2 = 0.0;
        for i in 0..n {
            let (a, b) = (self.vertices[i], self.vertices[(i + 1) % n]);
            area2 += a.x * b.y - b.x * a.y;
        }
        0.5 * num::abs(area2)
    }

    /// Open-domain membership; boundary points count as outside.
    pub fn contains(&self, p: Point) -> bool {
        if polygon_boundary_distance(&self.vertices, p) <= 1e-12 {
            return false;
        }
        polygon_contains(&self.vertices, p)
    }

    /// Distance `ρ(x)` from `p` to the polygon boundary.
    pub fn rho(&self, p: Point) -> f64 {
        polygon_boundary_distance(&self.vertices, p)
    }

    /// Closest point on the polygon boundary to `p`.
    pub fn nearest_boundary_point(&self, p: Point) -> Point {
        let n = self.vertices.len();
        let mut best = self.vertices[0];
        let mut best_d = f64::INFINITY;
        for i in 0..n {
            let (a, b) = (self.vertices[i], self.vertices[(i + 1) % n]);
            let (dx, dy) = (b.x - a.x, b.y - a.y);
            let len2 = dx * dx + dy * dy;
            let t = if len2 == 0.0 {
                0.0
            } else {
                (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0)
            };
            let q = Point::new(a.x + t * dx, a.y + t * dy);
            let d = p.dist(q);
            if d < best_d {
                best_d = d;
                best = q;
            }
        }
        best
    }

    fn unit_vertices(&self) -> Vec<Point> {
        self.vertices
            .iter()
            .map(|&v| self.square.to_unit(v))
            .collect()
    }
}

/// Does a rectangle in the unit coordinates of the bounding square contain
/// interior points of the domain?
pub fn unit_rect_meets_domain(domain: &PolygonDomain, r: Rect) -> bool {
    let unit = domain.unit_vertices();
    rect_meets(&unit, r)
}

/// All indices of one level whose support cube meets the domain (`Λ_level`,
/// or the scaling set `Γ` for `level == j0 - 1`).
pub fn lambda_indices(
    domain: &PolygonDomain,
    basis: &WaveletBasis,
    j0: u32,
    level: i32,
) -> Vec<WaveletIndex> {
    let unit = domain.unit_vertices();
    let radius = basis.support_radius();
    let mut out = Vec::new();
    if level == j0 as i32 - 1 {
        let n = (1i32 << j0) + 1;
        for ky in 0..n {
            for kx in 0..n {
                if cube_meets(&unit, j0, kx, ky, radius) {
                    out.push(WaveletIndex {
                        kind: 0,
                        level,
                        k: [kx, ky],
                    });
                }
            }
        }
    } else {
        let j = level as u32;
        let n = 1i32 << j;
        for ky in 0..=n {
            for kx in 0..=n {
                if !cube_meets(&unit, j, kx, ky, radius) {
                    continue;
                }
                for kind in 1u8..=3 {
                    let (dx, dy) = (kind & 1 != 0, kind & 2 != 0);
                    if (dx && kx >= n) || (dy && ky >= n) {
                        continue;
                    }
                    out.push(WaveletIndex {
                        kind,
                        level,
                        k: [kx, ky],
                    });
                }
            }
        }
    }
    out
}

/// Number of wavelet indices of one level whose support cube meets the domain.
///
/// `level == j0 - 1` counts the scaling functions (one type on the
/// `(2^{j0}+1)²` grid, cubes taken at scale `j0`); wavelet levels carry three
/// types each.
pub fn level_cardinality(
    domain: &PolygonDomain,
    basis: &WaveletBasis,
    j0: u32,
    level: i32,
) -> usize {
    let unit = domain.unit_vertices();
    let radius = basis.support_radius();
    if level == j0 as i32 - 1 {
        let n = (1usize << j0) + 1;
        let mut count = 0;
        for ky in 0..n as i32 {
            for kx in 0..n as i32 {
                if cube_meets(&unit, j0, kx, ky, radius) {
                    count += 1;
                }
            }
        }
        count
    } else {
        // Types share the cube of their location; valid translates are
        // kx < 2^j on detail axes and kx ≤ 2^j on approximation axes.
        let j = level as u32;
        let n = 1i32 << j;
        let mut total = 0usize;
        for ky in 0..=n {
            for kx in 0..=n {
                if !cube_meets(&unit, j, kx, ky, radius) {
                    continue;
                }
                if kx < n {
                    total += 1; // detail in x, approx in y
                }
                if ky < n {
                    total += 1; // approx in x, detail in y
                }
                if kx < n && ky < n {
                    total += 1; // detail in both
                }
            }
        }
        total
    }
}

fn cube_rect(j: u32, kx: i32, ky: i32, radius: f64) -> Rect {
    let scale = num::exp2i(-(j as i32));
    Rect {
        lo: Point::new((kx as f64 - radius) * scale, (ky as f64 - radius) * scale),
        hi: Point::new((kx as f64 + radius) * scale, (ky as f64 + radius) * scale),
    }
}

fn cube_meets(unit_verts: &[Point], j: u32, kx: i32, ky: i32, radius: f64) -> bool {
    rect_meets(unit_verts, cube_rect(j, kx, ky, radius))
}

fn rect_meets(unit_verts: &[Point], r: Rect) -> bool {
    let center = Point::new(0.5 * (r.lo.x + r.hi.x), 0.5 * (r.lo.y + r.hi.y));
    // Fast path: when the boundary stays farther from the center than the
    // half-diagonal, the whole rectangle sits on one side of it.
    let d_center = polygon_boundary_distance(unit_verts, center);
    let half_diag = 0.5 * num::hypot(r.hi.x - r.lo.x, r.hi.y - r.lo.y);
    if d_center > half_diag {
        return polygon_contains(unit_verts, center);
    }
    let probes = [
        center,
        r.lo,
        r.hi,
        Point::new(r.hi.x, r.lo.y),
        Point::new(r.lo.x, r.hi.y),
    ];
    for p in probes {
        if polygon_boundary_distance(unit_verts, p) > 1e-12 && polygon_contains(unit_verts, p) {
            return true;
        }
    }
    // Shrink the cube by a hair before the edge test so cubes that touch the
    // boundary purely from the exterior are not counted (the domain is open).
    let eps = 1e-9 * (r.hi.x - r.lo.x);
    let shrunk = Rect {
        lo: Point::new(r.lo.x + eps, r.lo.y + eps),
        hi: Point::new(r.hi.x - eps, r.hi.y - eps),
    };
    let n = unit_verts.len();
    for i in 0..n {
        if segment_rect_distance(unit_verts[i], unit_verts[(i + 1) % n], shrunk) == 0.0 {
            return true;
        }
    }
    false
}

fn cube_boundary_distance(unit_verts: &[Point], j: u32, kx: i32, ky: i32, radius: f64) -> f64 {
    let r = cube_rect(j, kx, ky, radius);
    let n = unit_verts.len();
    let mut d = f64::INFINITY;
    for i in 0..n {
        d = d.min(segment_rect_distance(
            unit_verts[i],
            unit_verts[(i + 1) % n],
            r,
        ));
        if d == 0.0 {
            break;
        }
    }
    d
}

/// Boundary-layer decomposition of one wavelet level.
///
/// `layers[m]` holds `Λ_{j,m}`: indices whose support cube keeps distance
/// `ρ_{j,k} ∈ [m·2^{-j}, (m+1)·2^{-j})` from the boundary (in the unit
/// coordinates of the bounding square). The buckets partition `Λ_j`.
#[derive(Debug, Clone)]
pub struct BoundaryLayerSets {
    pub level: u32,
    pub layers: Vec<Vec<WaveletIndex>>,
}

impl BoundaryLayerSets {
    /// `|Λ_j|`: total count over all buckets.
    pub fn total(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    /// `Λ_j⁰ = Λ_j \ Λ_{j,0}` as a flat list.
    pub fn away_from_boundary(&self) -> Vec<WaveletIndex> {
        let mut out = Vec::new();
        for layer in self.layers.iter().skip(1) {
            out.extend_from_slice(layer);
        }
        out
    }

    pub fn layer_counts(&self) -> Vec<usize> {
        self.layers.iter().map(Vec::len).collect()
    }
}

/// Classify every level-`j` wavelet index meeting the domain into its layer.
pub fn boundary_layers(domain: &PolygonDomain, basis: &WaveletBasis, j: u32) -> BoundaryLayerSets {
    let unit = domain.unit_vertices();
    let radius = basis.support_radius();
    let n = 1i32 << j;
    let scale = num::exp2i(-(j as i32));
    let mut layers: Vec<Vec<WaveletIndex>> = Vec::new();
    for ky in 0..=n {
        for kx in 0..=n {
            if !cube_meets(&unit, j, kx, ky, radius) {
                continue;
            }
            let rho = cube_boundary_distance(&unit, j, kx, ky, radius);
            let m = (rho / scale) as usize;
            if layers.len() <= m {
                layers.resize(m + 1, Vec::new());
            }
            for kind in 1u8..=3 {
                let (dx, dy) = match kind {
                    1 => (true, false),
                    2 => (false, true),
                    _ => (true, true),
                };
                if (dx && kx >= n) || (dy && ky >= n) {
                    continue;
                }
                layers[m].push(WaveletIndex {
                    kind,
                    level: j as i32,
                    k: [kx, ky],
                });
            }
        }
    }
    BoundaryLayerSets { level: j, layers }
}
