//! Semi-implicit Euler solver for `du = Σ a^{μν} u_{x_μ x_ν} dt + dM_t` with
//! zero Dirichlet data on a polygon.
//!
//! Space is discretized with second-order finite differences on the grid
//! nodes strictly inside the domain (staircase boundary, no cut cells): the
//! 5-point stencil for the diagonal part plus the symmetric 4-point cross
//! stencil for `a^{12}`, which keeps the assembled matrix symmetric. Time
//! stepping is drift-implicit, noise-explicit:
//! `(I - Δt·A_h) u⁺ = u + ΔM`, solved by plain conjugate gradients.
//!
//! A path advances sequentially; Monte-Carlo over paths parallelizes outside
//! this module. All randomness is counter-based, so trajectories depend only
//! on `(seed, path)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::domain::PolygonDomain;
use crate::field::{node_mask, Field, Grid};
use crate::noise::{sample_pattern, NoiseModel};
use crate::num;
use crate::wavelet::{idwt2, CoefficientTable, WaveletBasis};
use crate::wsobolev::weighted_derivative_functional;
use crate::{Error, Result};

/// Constant symmetric positive definite diffusion matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diffusion {
    pub a11: f64,
    pub a12: f64,
    pub a22: f64,
}

impl Diffusion {
    pub const IDENTITY: Diffusion = Diffusion {
        a11: 1.0,
        a12: 0.0,
        a22: 1.0,
    };

    pub fn validate(&self) -> Result<()> {
        let det = self.a11 * self.a22 - self.a12 * self.a12;
        if self.a11 > 0.0 && det > 0.0 {
            Ok(())
        } else {
            Err(Error::NotSpd)
        }
    }
}

/// Assembled second-order operator restricted to interior mask nodes (CSR).
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    pub grid: Grid,
    /// Grid linear index of each unknown.
    pub nodes: Vec<u32>,
    /// Unknown index per grid node, -1 outside the mask.
    index_of: Vec<i32>,
    row_ptr: Vec<u32>,
    col: Vec<u32>,
    val: Vec<f64>,
}

impl DiscreteOperator {
    pub fn unknowns(&self) -> usize {
        self.nodes.len()
    }

    /// `y = A_h x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (row, out) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for idx in self.row_ptr[row] as usize..self.row_ptr[row + 1] as usize {
                acc += self.val[idx] * x[self.col[idx] as usize];
            }
            *out = acc;
        }
    }

    /// Largest `|A - Aᵀ|` entry (0 for a faithful assembly).
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for row in 0..self.unknowns() {
            for idx in self.row_ptr[row] as usize..self.row_ptr[row + 1] as usize {
                let colr = self.col[idx] as usize;
                let mut transposed = 0.0;
                for jdx in self.row_ptr[colr] as usize..self.row_ptr[colr + 1] as usize {
                    if self.col[jdx] as usize == row {
                        transposed = self.val[jdx];
                        break;
                    }
                }
                worst = worst.max(num::abs(self.val[idx] - transposed));
            }
        }
        worst
    }

    /// Unknown index of a grid node, if it is interior.
    pub fn unknown_at(&self, grid_linear: usize) -> Option<usize> {
        let idx = self.index_of[grid_linear];
        (idx >= 0).then_some(idx as usize)
    }

    /// Gather interior values of a field into an unknown vector.
    pub fn restrict(&self, field: &Field) -> Vec<f64> {
        self.nodes
            .iter()
            .map(|&n| field.values[n as usize])
            .collect()
    }

    /// Scatter an unknown vector into a field that is zero elsewhere.
    pub fn scatter(&self, x: &[f64]) -> Field {
        let mut f = Field::zeros(self.grid);
        for (&n, &v) in self.nodes.iter().zip(x) {
            f.values[n as usize] = v;
        }
        f
    }

    /// Interior stencil row at an unknown, as (column, value) pairs.
    pub fn row(&self, row: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[row] as usize..self.row_ptr[row + 1] as usize)
            .map(|i| (self.col[i] as usize, self.val[i]))
    }
}

/// Assemble `A_h = Σ a^{μν} ∂²/∂x_μ∂x_ν` on the interior mask nodes.
pub fn assemble_operator(
    domain: &PolygonDomain,
    grid: Grid,
    diffusion: Diffusion,
) -> Result<DiscreteOperator> {
    diffusion.validate()?;
    let mask = node_mask(grid, domain);
    let n = grid.n();
    let mut nodes = Vec::new();
    let mut index_of = vec![-1i32; n * n];
    for (lin, &m) in mask.iter().enumerate() {
        if m {
            index_of[lin] = nodes.len() as i32;
            nodes.push(lin as u32);
        }
    }
    if nodes.is_empty() {
        return Err(Error::EmptyMask);
    }

    let h = grid.spacing();
    let h2 = h * h;
    let diag = -2.0 * (diffusion.a11 + diffusion.a22) / h2;
    let ax = diffusion.a11 / h2;
    let ay = diffusion.a22 / h2;
    let cross = diffusion.a12 / (2.0 * h2);

    // (offset, value); zero Dirichlet drops couplings out of the mask.
    let stencil: [(i64, i64, f64); 9] = [
        (0, 0, diag),
        (1, 0, ax),
        (-1, 0, ax),
        (0, 1, ay),
        (0, -1, ay),
        (1, 1, cross),
        (-1, -1, cross),
        (1, -1, -cross),
        (-1, 1, -cross),
    ];

    let mut row_ptr = Vec::with_capacity(nodes.len() + 1);
    let mut col = Vec::new();
    let mut val = Vec::new();
    row_ptr.push(0u32);
    for &lin in &nodes {
        let (ix, iy) = ((lin as usize % n) as i64, (lin as usize / n) as i64);
        for &(dx, dy, v) in &stencil {
            if v == 0.0 {
                continue;
            }
            let (jx, jy) = (ix + dx, iy + dy);
            if jx < 0 || jy < 0 || jx >= n as i64 || jy >= n as i64 {
                continue;
            }
            let neighbor = index_of[jy as usize * n + jx as usize];
            if neighbor >= 0 {
                col.push(neighbor as u32);
                val.push(v);
            }
        }
        row_ptr.push(col.len() as u32);
    }
    Ok(DiscreteOperator {
        grid,
        nodes,
        index_of,
        row_ptr,
        col,
        val,
    })
}

/// Conjugate gradients for an SPD operator given as a matvec closure.
pub fn conjugate_gradient(
    mut apply: impl FnMut(&[f64], &mut [f64]),
    rhs: &[f64],
    x: &mut [f64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<usize> {
    let n = rhs.len();
    let mut r = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut ap = vec![0.0; n];
    apply(x, &mut ap);
    for i in 0..n {
        r[i] = rhs[i] - ap[i];
        p[i] = r[i];
    }
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let rhs_norm = num::sqrt(dot(rhs, rhs));
    if rhs_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(0);
    }
    let target = rel_tol * rhs_norm;
    let mut rr = dot(&r, &r);
    for it in 0..max_iter {
        if num::sqrt(rr) <= target {
            return Ok(it);
        }
        apply(&p, &mut ap);
        let alpha = rr / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    if num::sqrt(rr) <= target {
        Ok(max_iter)
    } else {
        Err(Error::SolverDiverged {
            iterations: max_iter,
            residual: num::sqrt(rr) / rhs_norm,
        })
    }
}

const CG_TOL: f64 = 1e-10;
const CG_MAX_ITER: usize = 20_000;

/// One semi-implicit Euler step: solve `(I - Δt·A_h) u⁺ = u + ΔM`.
pub fn step(u: &Field, op: &DiscreteOperator, dm: &Field, dt: f64) -> Result<Field> {
    u.same_grid(dm)?;
    if u.grid != op.grid {
        return Err(Error::GridMismatch {
            expected_nodes: op.grid.n(),
            got_nodes: u.grid.n(),
        });
    }
    let mut rhs = op.restrict(u);
    for (r, &node) in rhs.iter_mut().zip(&op.nodes) {
        *r += dm.values[node as usize];
    }
    let mut x = rhs.clone();
    let mut scratch = vec![0.0; rhs.len()];
    conjugate_gradient(
        |v, out| {
            op.apply(v, &mut scratch);
            for i in 0..v.len() {
                out[i] = v[i] - dt * scratch[i];
            }
        },
        &rhs,
        &mut x,
        CG_TOL,
        CG_MAX_ITER,
    )?;
    Ok(op.scatter(&x))
}

/// Initial datum options understood by the solver.
#[derive(Debug, Clone)]
pub enum InitialDatum {
    Zero,
    /// Arbitrary samples; must vanish outside the interior mask.
    Field(Field),
}

/// Full configuration of one path simulation.
#[derive(Debug, Clone)]
pub struct SpdeConfig {
    pub diffusion: Diffusion,
    pub horizon: f64,
    pub steps: u32,
    pub grid_level: u32,
    pub j0: u32,
    pub noise: Option<NoiseModel>,
    pub initial: InitialDatum,
    pub snapshot_times: Vec<f64>,
    pub path: u64,
}

/// Diagnostics recorded at a snapshot.
#[derive(Debug, Clone, Copy)]
pub struct SnapshotDiagnostics {
    pub time: f64,
    pub l2_norm: f64,
    /// `‖ρ^{2-δ} |D²u|_{ℓ₂}‖_{L₂}` at `θ = d`, `p = 2` (δ = 1).
    pub weighted_d2: f64,
}

/// Snapshots plus per-snapshot diagnostics of one path.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<(f64, Field)>,
    pub diagnostics: Vec<SnapshotDiagnostics>,
}

/// Simulate one path of the equation.
pub fn run(
    domain: &PolygonDomain,
    basis: &WaveletBasis,
    config: &SpdeConfig,
) -> Result<Trajectory> {
    config.diffusion.validate()?;
    if !(config.horizon > 0.0) || config.steps == 0 {
        return Err(Error::InvalidParam("need horizon > 0 and steps ≥ 1"));
    }
    let grid = Grid::new(domain.bounding_square(), config.grid_level);
    let op = assemble_operator(domain, grid, config.diffusion)?;
    let dt = config.horizon / config.steps as f64;

    let mask = node_mask(grid, domain);
    let mut u = match &config.initial {
        InitialDatum::Zero => Field::zeros(grid),
        InitialDatum::Field(f) => {
            if f.grid != grid {
                return Err(Error::GridMismatch {
                    expected_nodes: grid.n(),
                    got_nodes: f.grid.n(),
                });
            }
            for (v, m) in f.values.iter().zip(&mask) {
                if !m && *v != 0.0 {
                    return Err(Error::InvalidParam(
                        "initial datum must vanish outside the domain",
                    ));
                }
            }
            f.clone()
        }
    };

    // Map snapshot times onto step indices (nearest step, deduplicated).
    let mut snap_steps: Vec<u32> = config
        .snapshot_times
        .iter()
        .map(|t| (num::round(t / dt) as i64).clamp(0, config.steps as i64) as u32)
        .collect();
    snap_steps.sort_unstable();
    snap_steps.dedup();

    let noise = match &config.noise {
        Some(model) => {
            if model.truncation_level > config.grid_level {
                return Err(Error::LevelRange {
                    j0: model.j0 as i32,
                    grid_level: config.grid_level as i32,
                });
            }
            if model.j0 != config.j0 {
                return Err(Error::InvalidParam(
                    "noise and transform must share the coarsest level j0",
                ));
            }
            Some(sample_pattern(model, basis, domain, config.path)?)
        }
        None => None,
    };
    // The increment table spans the full grid so synthesis lands on the
    // solver grid; levels above the truncation stay zero (tail reported by
    // the summability check, never silently folded in).
    let mut increments = CoefficientTable::zeros(basis, grid.square, config.j0, config.grid_level)?;

    let mut snapshots = Vec::new();
    let mut diagnostics = Vec::new();
    let mut record = |step_idx: u32, u: &Field| -> Result<()> {
        let time = step_idx as f64 * dt;
        let l2 = u.lp_norm_masked(&mask, 2.0);
        let weighted_d2 = weighted_derivative_functional(u, domain, 2, 2.0, 2.0)?;
        snapshots.push((time, u.clone()));
        diagnostics.push(SnapshotDiagnostics {
            time,
            l2_norm: l2,
            weighted_d2,
        });
        Ok(())
    };

    if snap_steps.first() == Some(&0) {
        record(0, &u)?;
    }
    for step_idx in 0..config.steps {
        let dm = match &noise {
            Some(real) => {
                real.increment_into(basis, step_idx as u64, dt, &mut increments)?;
                let mut f = idwt2(&increments, basis)?;
                // Restriction to the domain: wavelets overlapping the
                // exterior act only through their interior samples.
                for (v, m) in f.values.iter_mut().zip(&mask) {
                    if !m {
                        *v = 0.0;
                    }
                }
                f
            }
            None => Field::zeros(grid),
        };
        u = step(&u, &op, &dm, dt)?;
        if snap_steps.binary_search(&(step_idx + 1)).is_ok() {
            record(step_idx + 1, &u)?;
        }
    }
    Ok(Trajectory {
        snapshots,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery;
    use crate::noise::NoiseMode;
    use crate::wavelet::build_basis;

    #[test]
    fn identity_stencil_rows() {
        let domain = PolygonDomain::unit_square();
        let grid = Grid::new(domain.bounding_square(), 5);
        let op = assemble_operator(&domain, grid, Diffusion::IDENTITY).unwrap();
        let h2 = grid.spacing() * grid.spacing();
        // A deep-interior row is the plain 5-point Laplacian.
        let center = op
            .unknown_at((grid.n() / 2) * grid.n() + grid.n() / 2)
            .unwrap();
        let row: Vec<(usize, f64)> = op.row(center).collect();
        assert_eq!(row.len(), 5);
        let diag = row.iter().find(|(c, _)| *c == center).unwrap().1;
        assert!((diag * h2 + 4.0).abs() < 1e-12);
        let mut off: Vec<f64> = row
            .iter()
            .filter(|(c, _)| *c != center as usize)
            .map(|(_, v)| v * h2)
            .collect();
        off.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for v in off {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn operator_is_exactly_symmetric() {
        let domain = PolygonDomain::l_shape();
        let grid = Grid::new(domain.bounding_square(), 5);
        let op = assemble_operator(
            &domain,
            grid,
            Diffusion {
                a11: 2.0,
                a12: 0.6,
                a22: 1.5,
            },
        )
        .unwrap();
        assert_eq!(op.max_asymmetry(), 0.0);
        assert!(matches!(
            assemble_operator(
                &domain,
                grid,
                Diffusion {
                    a11: 1.0,
                    a12: 2.0,
                    a22: 1.0
                }
            ),
            Err(Error::NotSpd)
        ));
    }

    #[test]
    fn smallest_eigenvalue_matches_laplace_spectrum() {
        // Inverse power iteration on -A_h over the unit square: the smallest
        // eigenvalue approximates 2π² (analytic Dirichlet spectrum oracle).
        let domain = PolygonDomain::unit_square();
        let grid = Grid::new(domain.bounding_square(), 7);
        let op = assemble_operator(&domain, grid, Diffusion::IDENTITY).unwrap();
        let n = op.unknowns();
        let mut x = vec![1.0; n];
        let mut lambda = 0.0;
        for _ in 0..30 {
            let norm = num::sqrt(x.iter().map(|v| v * v).sum::<f64>());
            x.iter_mut().for_each(|v| *v /= norm);
            let b = x.clone();
            conjugate_gradient(
                |v, out| {
                    let mut tmp = vec![0.0; v.len()];
                    op.apply(v, &mut tmp);
                    for i in 0..v.len() {
                        out[i] = -tmp[i];
                    }
                },
                &b,
                &mut x,
                1e-12,
                10_000,
            )
            .unwrap();
            let xb = x.iter().zip(&b).map(|(a, c)| a * c).sum::<f64>();
            let xx = x.iter().map(|v| v * v).sum::<f64>();
            // b = (-A_h)x up to the solve tolerance, so this Rayleigh
            // quotient estimates λ_min directly.
            lambda = xb / xx;
        }
        let lambda_min = lambda;
        let exact = 2.0 * core::f64::consts::PI * core::f64::consts::PI;
        let rel = (lambda_min - exact).abs() / exact;
        assert!(rel < 0.02, "λ_min {lambda_min} vs {exact} (rel {rel})");
    }

    #[test]
    fn step_trivia() {
        let domain = PolygonDomain::unit_square();
        let grid = Grid::new(domain.bounding_square(), 5);
        let op = assemble_operator(&domain, grid, Diffusion::IDENTITY).unwrap();
        let zero = Field::zeros(grid);
        let out = step(&zero, &op, &zero, 1e-3).unwrap();
        assert!(out.values.iter().all(|v| *v == 0.0));
        // Δt = 0 degenerates to u⁺ = u + ΔM on the interior.
        let mask = node_mask(grid, &domain);
        let u = Field::sample_masked(grid, &domain, |p| p.x);
        let dm = Field::sample_masked(grid, &domain, |p| 2.0 * p.y);
        let out = step(&u, &op, &dm, 0.0).unwrap();
        for (i, m) in mask.iter().enumerate() {
            if *m {
                assert_eq!(out.values[i], u.values[i] + dm.values[i]);
            }
        }
    }

    #[test]
    fn step_damps_eigenfunction_at_known_rate() {
        let domain = PolygonDomain::unit_square();
        let grid = Grid::new(domain.bounding_square(), 7);
        let op = assemble_operator(&domain, grid, Diffusion::IDENTITY).unwrap();
        let u = Field::sample_masked(grid, &domain, gallery::square_eigenfunction);
        let dt = 1e-3;
        let out = step(&u, &op, &Field::zeros(grid), dt).unwrap();
        // u⁺ ≈ u / (1 + 2π² dt) up to O(h²) spatial error.
        let factor = 1.0 / (1.0 + 2.0 * core::f64::consts::PI * core::f64::consts::PI * dt);
        let mask = node_mask(grid, &domain);
        let mut worst = 0.0f64;
        for (i, m) in mask.iter().enumerate() {
            if *m && u.values[i].abs() > 0.1 {
                worst = worst.max((out.values[i] / u.values[i] - factor).abs());
            }
        }
        assert!(worst < 5e-4, "worst deviation {worst}");
    }

    #[test]
    fn dissipation_without_noise() {
        let domain = PolygonDomain::l_shape();
        let grid = Grid::new(domain.bounding_square(), 6);
        let op = assemble_operator(&domain, grid, Diffusion::IDENTITY).unwrap();
        let mask = node_mask(grid, &domain);
        let mut u = Field::sample_masked(grid, &domain, |p| {
            gallery::gaussian_bump(p, crate::domain::Point::new(-0.4, -0.4), 0.2)
        });
        let mut last = u.lp_norm_masked(&mask, 2.0);
        for _ in 0..50 {
            u = step(&u, &op, &Field::zeros(grid), 5e-4).unwrap();
            let now = u.lp_norm_masked(&mask, 2.0);
            assert!(now <= last * (1.0 + 1e-13));
            last = now;
        }
    }

    #[test]
    fn heat_semigroup_decay_oracle() {
        let domain = PolygonDomain::unit_square();
        let config = SpdeConfig {
            diffusion: Diffusion::IDENTITY,
            horizon: 0.05,
            steps: 128,
            grid_level: 6,
            j0: 0,
            noise: None,
            initial: InitialDatum::Field(Field::sample_masked(
                Grid::new(domain.bounding_square(), 6),
                &domain,
                gallery::square_eigenfunction,
            )),
            snapshot_times: alloc::vec![0.0, 0.025, 0.05],
            path: 0,
        };
        let basis = build_basis("spline-biorthogonal", 2).unwrap();
        let traj = run(&domain, &basis, &config).unwrap();
        assert_eq!(traj.snapshots.len(), 3);
        let l2_0 = traj.diagnostics[0].l2_norm;
        for d in &traj.diagnostics[1..] {
            let exact = num::exp(-2.0 * core::f64::consts::PI * core::f64::consts::PI * d.time);
            let got = d.l2_norm / l2_0;
            let rel = (got - exact).abs() / exact;
            assert!(rel < 0.03, "t = {}: got {got}, exact {exact}", d.time);
        }
    }

    #[test]
    fn zero_noise_zero_initial_stays_zero() {
        let domain = PolygonDomain::l_shape();
        let basis = build_basis("spline-biorthogonal", 2).unwrap();
        let config = SpdeConfig {
            diffusion: Diffusion::IDENTITY,
            horizon: 0.01,
            steps: 8,
            grid_level: 5,
            j0: 0,
            noise: None,
            initial: InitialDatum::Zero,
            snapshot_times: alloc::vec![0.01],
            path: 0,
        };
        let traj = run(&domain, &basis, &config).unwrap();
        assert!(traj.snapshots[0].1.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn snapshots_vanish_outside_domain() {
        let domain = PolygonDomain::l_shape();
        let basis = build_basis("spline-biorthogonal", 2).unwrap();
        let noise = NoiseModel::new(2.5, 0.0, 0.0, 0, NoiseMode::Dense, 6, 99).unwrap();
        let config = SpdeConfig {
            diffusion: Diffusion::IDENTITY,
            horizon: 0.02,
            steps: 16,
            grid_level: 6,
            j0: 0,
            noise: Some(noise),
            initial: InitialDatum::Zero,
            snapshot_times: alloc::vec![0.01, 0.02],
            path: 3,
        };
        let traj = run(&domain, &basis, &config).unwrap();
        let grid = Grid::new(domain.bounding_square(), 6);
        let mask = node_mask(grid, &domain);
        for (_, snap) in &traj.snapshots {
            for (v, m) in snap.values.iter().zip(&mask) {
                if !m {
                    assert_eq!(*v, 0.0);
                }
            }
        }
        // Determinism: the same config replays bitwise.
        let traj2 = run(&domain, &basis, &config).unwrap();
        for ((_, a), (_, b)) in traj.snapshots.iter().zip(&traj2.snapshots) {
            assert_eq!(a.values, b.values);
        }
    }

    #[test]
    fn noise_response_is_linear() {
        // Additive noise, u0 = 0: scaling the noise by 2 scales the whole
        // trajectory by exactly 2 (powers of two rescale CG bitwise).
        let domain = PolygonDomain::l_shape();
        let basis = build_basis("spline-biorthogonal", 2).unwrap();
        let base = NoiseModel::new(2.5, 0.0, 0.0, 0, NoiseMode::Dense, 6, 7).unwrap();
        let mk = |amp: f64| SpdeConfig {
            diffusion: Diffusion::IDENTITY,
            horizon: 0.02,
            steps: 16,
            grid_level: 6,
            j0: 0,
            noise: Some(base.clone().with_amplitude(amp)),
            initial: InitialDatum::Zero,
            snapshot_times: alloc::vec![0.02],
            path: 0,
        };
        let one = run(&domain, &basis, &mk(1.0)).unwrap();
        let two = run(&domain, &basis, &mk(2.0)).unwrap();
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for (a, b) in one.snapshots[0]
            .1
            .values
            .iter()
            .zip(&two.snapshots[0].1.values)
        {
            worst = worst.max((2.0 * a - b).abs());
            scale = scale.max(b.abs());
        }
        assert!(worst <= 1e-12 * scale, "worst {worst}, scale {scale}");
    }
}
