//! Bundled analytic test functions.
//!
//! These are the reference fields used by the norm-equivalence and
//! calibration experiments: a Gaussian bump, a compactly supported tensor
//! B-spline, the truncated corner-singular profile of the L-shape, and the
//! first Dirichlet eigenfunction of the unit square.

use crate::domain::Point;
use crate::num;

/// `exp(-|p - c|² / (2σ²))`.
pub fn gaussian_bump(p: Point, center: Point, sigma: f64) -> f64 {
    let dx = p.x - center.x;
    let dy = p.y - center.y;
    num::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma))
}

/// Centered cardinal B-spline of order `r` (support `[-r/2, r/2]`), via the
/// Cox–de Boor recursion.
pub fn bspline(order: usize, x: f64) -> f64 {
    let t = x + order as f64 / 2.0;
    if t <= 0.0 || t >= order as f64 {
        return 0.0;
    }
    // b[k] = B_1(t - k) to start, then raise the order.
    let mut b = [0.0f64; 16];
    debug_assert!(order < 16);
    for (k, bk) in b.iter_mut().enumerate().take(order) {
        let u = t - k as f64;
        *bk = if (0.0..1.0).contains(&u) { 1.0 } else { 0.0 };
    }
    for m in 2..=order {
        for k in 0..=(order - m) {
            let u = t - k as f64;
            b[k] = (u * b[k] + (m as f64 - u) * b[k + 1]) / (m as f64 - 1.0);
        }
    }
    b[0]
}

/// Product of two cubic B-splines, support `[c ± 2·scale]²`, C².
pub fn tensor_spline(p: Point, center: Point, scale: f64) -> f64 {
    bspline(4, (p.x - center.x) / scale) * bspline(4, (p.y - center.y) / scale)
}

/// Smooth cutoff: 1 for `r ≤ r0`, 0 for `r ≥ r1`, C^∞ in between.
pub fn smooth_cutoff(r: f64, r0: f64, r1: f64) -> f64 {
    if r <= r0 {
        return 1.0;
    }
    if r >= r1 {
        return 0.0;
    }
    let t = (r - r0) / (r1 - r0);
    let g = |s: f64| num::exp(-1.0 / s);
    g(1.0 - t) / (g(1.0 - t) + g(t))
}

/// Corner-singular profile `r^{2/3} sin(2φ/3) · χ(r)` of the L-shape
/// `(-1,1)² \ [0,1)²`, with the angle `φ ∈ [0, 3π/2]` measured from the
/// reentrant edge along the positive y-axis. The cutoff keeps the support
/// away from the outer boundary; the profile vanishes on both reentrant
/// edges, so extending it by zero outside the domain is continuous.
pub fn l_shape_singular(p: Point, r_flat: f64, r_zero: f64) -> f64 {
    let r = num::hypot(p.x, p.y);
    if r == 0.0 || r >= r_zero {
        return 0.0;
    }
    let theta = num::atan2(p.y, p.x);
    let mut phi = theta - core::f64::consts::FRAC_PI_2;
    if phi < 0.0 {
        phi += 2.0 * core::f64::consts::PI;
    }
    num::powf(r, 2.0 / 3.0) * num::sin(2.0 * phi / 3.0) * smooth_cutoff(r, r_flat, r_zero)
}

/// Default truncation radii for [`l_shape_singular`].
pub const SINGULAR_R_FLAT: f64 = 0.35;
pub const SINGULAR_R_ZERO: f64 = 0.7;

/// First Dirichlet eigenfunction `sin(πx)·sin(πy)` of the unit square.
pub fn square_eigenfunction(p: Point) -> f64 {
    num::sin(core::f64::consts::PI * p.x) * num::sin(core::f64::consts::PI * p.y)
}

/// Named members of the norm-equivalence test family on the L-shape.
pub fn l_shape_family(name: &str) -> Option<fn(Point) -> f64> {
    match name {
        "bump" => Some(|p| gaussian_bump(p, Point::new(-0.5, -0.5), 0.15)),
        "spline" => Some(|p| tensor_spline(p, Point::new(-0.5, -0.5), 0.2)),
        "singular" => Some(|p| l_shape_singular(p, SINGULAR_R_FLAT, SINGULAR_R_ZERO)),
        _ => None,
    }
}

/// Names of the bundled family, in reporting order.
pub const FAMILY_NAMES: [&str; 3] = ["bump", "spline", "singular"];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bspline_partition_of_unity() {
        for order in [2usize, 3, 4] {
            for x in [-0.7, 0.0, 0.31, 1.9] {
                let mut acc = 0.0;
                for k in -6i32..=6 {
                    acc += bspline(order, x - k as f64);
                }
                assert!((acc - 1.0).abs() < 1e-12, "order {order} x {x}: {acc}");
            }
        }
    }

    #[test]
    fn cubic_bspline_center_value() {
        // B4(0) = 2/3 for the centered cubic B-spline.
        assert!((bspline(4, 0.0) - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(bspline(4, 2.0), 0.0);
    }

    #[test]
    fn singular_profile_vanishes_on_reentrant_edges() {
        for t in [0.05, 0.2, 0.4] {
            // Positive y-axis edge (φ = 0) and positive x-axis edge (φ = 3π/2).
            assert!(l_shape_singular(Point::new(0.0, t), 0.35, 0.7).abs() < 1e-12);
            assert!(l_shape_singular(Point::new(t, 0.0), 0.35, 0.7).abs() < 1e-12);
            // Interior of the left half is positive.
            assert!(l_shape_singular(Point::new(-t, 0.0), 0.35, 0.7) > 0.0);
        }
        assert_eq!(l_shape_singular(Point::new(0.9, -0.9), 0.35, 0.7), 0.0);
    }

    #[test]
    fn cutoff_is_monotone() {
        let mut last = 1.0;
        for i in 0..=100 {
            let r = 0.3 + 0.5 * i as f64 / 100.0;
            let c = smooth_cutoff(r, 0.35, 0.7);
            assert!(c <= last + 1e-15);
            last = c;
        }
        assert_eq!(smooth_cutoff(0.2, 0.35, 0.7), 1.0);
        assert_eq!(smooth_cutoff(0.75, 0.35, 0.7), 0.0);
    }
}
