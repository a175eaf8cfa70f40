//! Experiment configuration: TOML or JSON files plus environment overrides.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use besovlab_core::domain::{Point, PolygonDomain, Square};
use besovlab_core::field::{ExtensionPolicy, Field, Grid};
use besovlab_core::gallery;
use besovlab_core::noise::{NoiseMode, NoiseModel};
use besovlab_core::spde::{Diffusion, InitialDatum};
use besovlab_core::wavelet::{build_basis, WaveletBasis};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    /// Bundled domain: "l-shape", "unit-square" or "hexagon".
    pub name: Option<String>,
    /// Path to a JSON file with `{ "name": ..., "vertices": [[x, y], ...] }`.
    pub file: Option<String>,
}

impl Default for DomainConfig {
    fn default() -> Self {
        Self {
            name: Some("l-shape".into()),
            file: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WaveletConfig {
    pub family: String,
    pub vanishing_moments: usize,
    pub j0: u32,
    /// How analyzed fields are extended outside the domain before the
    /// transform: "zero-fill" or "reflect".
    pub extension: String,
}

impl Default for WaveletConfig {
    fn default() -> Self {
        Self {
            family: "spline-biorthogonal".into(),
            vanishing_moments: 2,
            j0: 0,
            extension: "zero-fill".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub level: u32,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { level: 8 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeConfig {
    pub horizon: f64,
    pub steps: u32,
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self {
            horizon: 0.1,
            steps: 256,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    /// "dense", "sparse" or "off".
    pub mode: String,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Defaults to the wavelet block's j0.
    pub j0: Option<u32>,
    /// Defaults to the grid level.
    pub truncation_level: Option<u32>,
    /// Defaults to the experiment seed.
    pub seed: Option<u64>,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            mode: "off".into(),
            a: 2.5,
            b: 0.0,
            c: 0.0,
            j0: None,
            truncation_level: None,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ApproxConfig {
    /// "singular" analyses the bundled corner profile; "spde" the simulated
    /// terminal field of each path.
    pub source: String,
    /// "energy" (W¹₂) or "lp".
    pub norm: String,
    pub p: f64,
    pub n_values: Vec<usize>,
}

impl Default for ApproxConfig {
    fn default() -> Self {
        Self {
            source: "singular".into(),
            norm: "energy".into(),
            p: 2.0,
            n_values: (4..=12).map(|i| 1usize << i).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegularityConfig {
    /// "singular" or "spde".
    pub source: String,
    pub p: f64,
}

impl Default for RegularityConfig {
    fn default() -> Self {
        Self {
            source: "singular".into(),
            p: 2.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseCheckConfig {
    pub isometry_samples: u64,
    pub isometry_dt: f64,
    pub summability_level: u32,
    /// Parameter pairs (a, b) straddling the a + b = 2 threshold.
    pub ab_grid: Vec<[f64; 2]>,
}

impl Default for NoiseCheckConfig {
    fn default() -> Self {
        Self {
            isometry_samples: 100_000,
            isometry_dt: 1e-3,
            summability_level: 12,
            ab_grid: vec![
                [2.5, 0.0],
                [1.5, 1.0],
                [2.2, 0.1],
                [2.0, 0.0],
                [1.5, 0.5],
                [1.2, 0.6],
            ],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NormEquivalenceConfig {
    pub levels: Vec<u32>,
    /// Triples (s, p, q); the difference order is the smallest n > s.
    pub params: Vec<[f64; 3]>,
}

impl Default for NormEquivalenceConfig {
    fn default() -> Self {
        Self {
            levels: vec![8, 9, 10],
            params: vec![[1.0, 2.0, 2.0], [0.8, 3.0, 3.0]],
        }
    }
}

/// One config file covering every experiment kind; unused blocks are inert.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub paths: u32,
    pub domain: DomainConfig,
    pub wavelet: WaveletConfig,
    pub grid: GridConfig,
    pub time: TimeConfig,
    /// Row-major 2×2 diffusion matrix.
    pub diffusion: Option<[[f64; 2]; 2]>,
    pub noise: NoiseConfig,
    /// "zero", "eigenfunction", "bump" or "singular".
    pub initial: Option<String>,
    /// Snapshot times; defaults to the horizon only.
    pub snapshots: Option<Vec<f64>>,
    pub approx: ApproxConfig,
    pub regularity: RegularityConfig,
    pub noise_check: NoiseCheckConfig,
    pub norm_equivalence: NormEquivalenceConfig,
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: ExperimentConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).context("parsing JSON config")?
        } else {
            toml::from_str(&text).context("parsing TOML config")?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.domain.name.is_none() && self.domain.file.is_none() {
            bail!("domain: either `name` or `file` is required");
        }
        if self.wavelet.j0 >= self.grid.level {
            bail!(
                "wavelet.j0 = {} must be below grid.level = {}",
                self.wavelet.j0,
                self.grid.level
            );
        }
        if self.time.horizon.is_nan() || self.time.horizon <= 0.0 {
            bail!("time.horizon must be positive, got {}", self.time.horizon);
        }
        if self.time.steps == 0 {
            bail!("time.steps must be at least 1");
        }
        match self.noise.mode.as_str() {
            "off" | "dense" | "sparse" => {}
            other => bail!("noise.mode must be off|dense|sparse, got `{other}`"),
        }
        if let Some(kind) = &self.initial {
            match kind.as_str() {
                "zero" | "eigenfunction" | "bump" | "singular" => {}
                other => bail!("initial must be zero|eigenfunction|bump|singular, got `{other}`"),
            }
        }
        match self.approx.source.as_str() {
            "singular" | "spde" => {}
            other => bail!("approx.source must be singular|spde, got `{other}`"),
        }
        match self.approx.norm.as_str() {
            "energy" | "lp" | "l2" => {}
            other => bail!("approx.norm must be energy|lp|l2, got `{other}`"),
        }
        match self.regularity.source.as_str() {
            "singular" | "spde" => {}
            other => bail!("regularity.source must be singular|spde, got `{other}`"),
        }
        match self.wavelet.extension.as_str() {
            "zero-fill" | "zero" | "reflect" => {}
            other => bail!("wavelet.extension must be zero-fill|reflect, got `{other}`"),
        }
        Ok(())
    }

    pub fn build_domain(&self) -> Result<PolygonDomain> {
        if let Some(file) = &self.domain.file {
            #[derive(Deserialize)]
            struct DomainFile {
                name: String,
                vertices: Vec<[f64; 2]>,
                bounding_square: Option<[f64; 3]>,
            }
            let text = std::fs::read_to_string(file)
                .with_context(|| format!("reading domain file {file}"))?;
            let df: DomainFile = serde_json::from_str(&text).context("parsing domain JSON")?;
            let verts = df.vertices.iter().map(|v| Point::new(v[0], v[1])).collect();
            let square = df.bounding_square.map(|s| Square::new(s[0], s[1], s[2]));
            return PolygonDomain::from_vertices(&df.name, verts, square)
                .map_err(|e| anyhow::anyhow!("domain file {file}: {e}"));
        }
        let name = self.domain.name.as_deref().unwrap_or("l-shape");
        PolygonDomain::by_name(name).with_context(|| format!("unknown bundled domain `{name}`"))
    }

    pub fn build_basis(&self) -> Result<WaveletBasis> {
        build_basis(&self.wavelet.family, self.wavelet.vanishing_moments)
            .map_err(|e| anyhow::anyhow!("wavelet: {e}"))
    }

    pub fn extension_policy(&self) -> Result<ExtensionPolicy> {
        match self.wavelet.extension.as_str() {
            "zero-fill" | "zero" => Ok(ExtensionPolicy::ZeroFill),
            "reflect" => Ok(ExtensionPolicy::Reflect),
            other => bail!("wavelet.extension must be zero-fill|reflect, got `{other}`"),
        }
    }

    pub fn build_noise(&self) -> Result<Option<NoiseModel>> {
        let mode = match self.noise.mode.as_str() {
            "off" => return Ok(None),
            "dense" => NoiseMode::Dense,
            "sparse" => NoiseMode::Sparse,
            other => bail!("noise.mode `{other}`"),
        };
        let model = NoiseModel::new(
            self.noise.a,
            self.noise.b,
            self.noise.c,
            self.noise.j0.unwrap_or(self.wavelet.j0),
            mode,
            self.noise.truncation_level.unwrap_or(self.grid.level),
            self.noise.seed.unwrap_or(self.seed),
        )
        .map_err(|e| anyhow::anyhow!("noise: {e}"))?;
        Ok(Some(model))
    }

    pub fn build_diffusion(&self) -> Result<Diffusion> {
        let d = match self.diffusion {
            Some(m) => {
                if m[0][1] != m[1][0] {
                    bail!("diffusion matrix must be symmetric");
                }
                Diffusion {
                    a11: m[0][0],
                    a12: m[0][1],
                    a22: m[1][1],
                }
            }
            None => Diffusion::IDENTITY,
        };
        d.validate()
            .map_err(|e| anyhow::anyhow!("diffusion: {e}"))?;
        Ok(d)
    }

    pub fn build_initial(&self, domain: &PolygonDomain) -> Result<InitialDatum> {
        let grid = Grid::new(domain.bounding_square(), self.grid.level);
        Ok(match self.initial.as_deref().unwrap_or("zero") {
            "zero" => InitialDatum::Zero,
            "eigenfunction" => InitialDatum::Field(Field::sample_masked(
                grid,
                domain,
                gallery::square_eigenfunction,
            )),
            "bump" => {
                let c = centroid(domain);
                InitialDatum::Field(Field::sample_masked(grid, domain, move |p| {
                    gallery::gaussian_bump(p, c, 0.15 * domain.diameter() / 2.0)
                }))
            }
            "singular" => InitialDatum::Field(Field::sample_masked(grid, domain, |p| {
                gallery::l_shape_singular(p, gallery::SINGULAR_R_FLAT, gallery::SINGULAR_R_ZERO)
            })),
            other => bail!("initial `{other}`"),
        })
    }

    pub fn snapshot_times(&self) -> Vec<f64> {
        self.snapshots
            .clone()
            .unwrap_or_else(|| vec![self.time.horizon])
    }
}

fn centroid(domain: &PolygonDomain) -> Point {
    let vs = domain.vertices();
    let (mut cx, mut cy) = (0.0, 0.0);
    for v in vs {
        cx += v.x;
        cy += v.y;
    }
    Point::new(cx / vs.len() as f64, cy / vs.len() as f64)
}

/// Apply `BESOVLAB_*` environment overrides to CLI-level options that were
/// not given explicitly.
pub fn env_override_u64(flag: Option<u64>, var: &str) -> Option<u64> {
    flag.or_else(|| std::env::var(var).ok().and_then(|v| v.parse().ok()))
}

pub fn env_override_usize(flag: Option<usize>, var: &str) -> Option<usize> {
    flag.or_else(|| std::env::var(var).ok().and_then(|v| v.parse().ok()))
}

pub fn env_override_string(flag: Option<String>, var: &str) -> Option<String> {
    flag.or_else(|| std::env::var(var).ok())
}
