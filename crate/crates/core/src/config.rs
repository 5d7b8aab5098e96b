//! Run configuration (TOML) and the bundled benchmark presets.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::element::PhaseSolveMode;
use crate::engine::{EngineSettings, LoadCase, TractionLoad, VelocityBc};
use crate::error::{ConfigError, Error};
use crate::material::{MaterialParams, PhaseFieldVariant};
use crate::mesh::{
    generate_graded_rect, load_mesh, BoundarySelector, GradedRectSpec, Mesh, MeshFormat, Notch,
    RefineBox,
};
use crate::solver::SolverSettings;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MeshSource {
    File {
        path: PathBuf,
        #[serde(default)]
        format: MeshFormat,
    },
    Generated(GradedRectSpec),
}

impl MeshSource {
    pub fn build(&self) -> Result<Mesh, Error> {
        Ok(match self {
            MeshSource::File { path, format } => load_mesh(path, *format)?,
            MeshSource::Generated(spec) => generate_graded_rect(spec)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConfig {
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    pub density: f64,
    pub gc: f64,
    /// Regularization length (m).
    pub ell: f64,
    /// Used only to normalize reported tip speeds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rayleigh_speed: Option<f64>,
}

impl MaterialConfig {
    pub fn params(&self) -> Result<MaterialParams, Error> {
        Ok(MaterialParams::new(
            self.youngs_modulus,
            self.poisson_ratio,
            self.density,
            self.gc,
            self.ell,
        )?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub variant: PhaseFieldVariant,
    pub mode: PhaseSolveMode,
    pub fracture: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            variant: PhaseFieldVariant::At2,
            mode: PhaseSolveMode::Patch,
            fracture: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    #[serde(default)]
    pub t0: f64,
    pub tf: f64,
    #[serde(default = "default_cfl")]
    pub c_cfl: f64,
}

fn default_cfl() -> f64 {
    0.6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: PathBuf,
    /// Elemental updates between samples.
    pub sampling_every: u64,
    pub iso_level: f64,
    /// Write a VTK snapshot at every sample.
    pub vtk: bool,
    /// Reference point for iso-curve tip tracking (usually the notch tip).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub notch_tip: Option<[f64; 2]>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("output"),
            sampling_every: 10_000,
            iso_level: 0.9,
            vtk: true,
            notch_tip: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mesh: MeshSource,
    pub material: MaterialConfig,
    #[serde(default)]
    pub model: ModelConfig,
    pub time: TimeConfig,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default)]
    pub load: LoadCase,
    #[serde(default)]
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative mesh and output paths are taken relative to the
    /// file's directory.
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        if let MeshSource::File { path: p, .. } = &mut cfg.mesh {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if cfg.output.directory.is_relative() {
            cfg.output.directory = base.join(&cfg.output.directory);
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String, ConfigError> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        let t = &self.time;
        if !(t.t0.is_finite() && t.tf.is_finite()) || t.tf < t.t0 {
            return bad(format!("need finite t0 <= tf (t0 = {}, tf = {})", t.t0, t.tf));
        }
        if !(t.c_cfl > 0.0 && t.c_cfl <= 1.0) {
            return bad(format!("c_cfl must lie in (0, 1], got {}", t.c_cfl));
        }
        if self.output.sampling_every == 0 {
            return bad("output.sampling_every must be at least 1".into());
        }
        if !(self.output.iso_level > 0.0 && self.output.iso_level <= 1.0) {
            return bad(format!("iso_level must lie in (0, 1], got {}", self.output.iso_level));
        }
        if let Some(v) = self.material.rayleigh_speed {
            if !(v > 0.0) {
                return bad(format!("rayleigh_speed must be positive, got {v}"));
            }
        }
        if self.solver.max_outer == 0 || self.solver.max_newton == 0 || !(self.solver.rel_tol > 0.0) {
            return bad("solver limits and tolerance must be positive".into());
        }
        Ok(())
    }

    pub fn engine_settings(&self) -> EngineSettings {
        EngineSettings {
            variant: self.model.variant,
            mode: self.model.mode,
            fracture: self.model.fracture,
            c_cfl: self.time.c_cfl,
            t0: self.time.t0,
            tf: self.time.tf,
            solver: self.solver,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Benchmark {
    Tension,
    CompactTension,
    Kalthoff,
}

impl std::str::FromStr for Benchmark {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "tension" => Ok(Benchmark::Tension),
            "ct" | "compact-tension" => Ok(Benchmark::CompactTension),
            "kalthoff" => Ok(Benchmark::Kalthoff),
            other => Err(ConfigError::UnknownBenchmark(other.to_string())),
        }
    }
}

/// Desk-scale adjustments applied on top of a preset.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PresetOverrides {
    /// Multiplies the coarse cell counts (and divides `ell`).
    pub mesh_scale: Option<u32>,
    pub variant: Option<PhaseFieldVariant>,
    pub mode: Option<PhaseSolveMode>,
    /// Traction magnitude (Pa).
    pub load: Option<f64>,
    pub tf: Option<f64>,
    pub output: Option<PathBuf>,
    /// Use the tabulated `ell` with band cells near `ell / 2` instead of the desk-scale defaults.
    pub full_scale: bool,
}

pub const SILICA_GLASS: MaterialConfig = MaterialConfig {
    youngs_modulus: 32e9,
    poisson_ratio: 0.2,
    density: 2450.0,
    gc: 3.0,
    ell: 5e-4,
    rayleigh_speed: Some(2119.0),
};

pub const SODA_LIME_GLASS: MaterialConfig = MaterialConfig {
    youngs_modulus: 72e9,
    poisson_ratio: 0.22,
    density: 2440.0,
    gc: 3.8,
    ell: 5e-4,
    rayleigh_speed: Some(3172.0),
};

pub const MARAGING_STEEL: MaterialConfig = MaterialConfig {
    youngs_modulus: 190e9,
    poisson_ratio: 0.3,
    density: 8000.0,
    gc: 2.213e4,
    ell: 3.9e-4,
    rayleigh_speed: Some(2803.0),
};

/// Looks up a bundled material by name.
pub fn material_preset(name: &str) -> Option<MaterialConfig> {
    match name.to_ascii_lowercase().as_str() {
        "silica" | "silica-glass" => Some(SILICA_GLASS),
        "soda-lime" | "soda-lime-glass" => Some(SODA_LIME_GLASS),
        "steel" | "maraging-steel" => Some(MARAGING_STEEL),
        _ => None,
    }
}

fn tag(t: &str) -> BoundarySelector {
    BoundarySelector::Tag(t.to_string())
}

/// Crack-path band plus one extra level around the notch tip. Returns the mesh and the
/// band cell size.
fn notched_rect(
    x: [f64; 2],
    y: [f64; 2],
    cells: [usize; 2],
    band: ([f64; 2], [f64; 2]),
    level: u32,
    tip: [f64; 2],
) -> (GradedRectSpec, f64) {
    let mut spec = GradedRectSpec {
        x,
        y,
        cells,
        refine: vec![RefineBox {
            x: band.0,
            y: band.1,
            level,
        }],
        notches: vec![Notch {
            y: tip[1],
            x: [x[0], tip[0]],
        }],
    };
    let (hx, hy) = spec.cell_size(level);
    let h = hx.max(hy);
    spec.refine.push(RefineBox {
        x: [tip[0] - h, tip[0] + h],
        y: [tip[1] - h, tip[1] + h],
        level: level + 1,
    });
    (spec, h)
}

/// Notched 100 x 40 mm glass plate of the tension and CT tests.
fn glass_plate(k: usize, full: bool) -> (GradedRectSpec, f64) {
    let (cells, level) = if full { ([16, 6], 3) } else { ([20 * k, 8 * k], 2) };
    notched_rect(
        [0.0, 0.1],
        [-0.02, 0.02],
        cells,
        ([0.045, 0.1], [-0.015, 0.015]),
        level,
        [0.05, 0.0],
    )
}

/// Bundled configuration of a benchmark.
///
/// The default is desk scale: `ell` is twice the band cell size of a coarsened mesh.
/// With `full_scale` set the mesh has band cells near `ell / 2` for the tabulated `ell`.
pub fn preset(bench: Benchmark, ov: &PresetOverrides) -> Result<RunConfig, ConfigError> {
    let k = ov.mesh_scale.unwrap_or(1).max(1) as usize;
    let full = ov.full_scale;
    let ell = |h: f64, m: &MaterialConfig| if full { m.ell } else { 2.0 * h };
    let mut cfg = match bench {
        Benchmark::Tension => {
            let (spec, h) = glass_plate(k, full);
            let sigma = ov.load.unwrap_or(1e6);
            RunConfig {
                material: MaterialConfig {
                    ell: ell(h, &SILICA_GLASS),
                    ..SILICA_GLASS
                },
                mesh: MeshSource::Generated(spec),
                model: ModelConfig::default(),
                time: TimeConfig {
                    t0: 0.0,
                    tf: 80e-6,
                    c_cfl: 0.6,
                },
                solver: SolverSettings::default(),
                load: LoadCase {
                    traction: vec![
                        TractionLoad {
                            on: tag("top"),
                            value: [0.0, sigma],
                        },
                        TractionLoad {
                            on: tag("bottom"),
                            value: [0.0, -sigma],
                        },
                    ],
                    ..LoadCase::default()
                },
                output: OutputConfig {
                    directory: PathBuf::from("output/tension"),
                    sampling_every: 20_000,
                    notch_tip: Some([0.05, 0.0]),
                    ..OutputConfig::default()
                },
            }
        }
        Benchmark::CompactTension => {
            let (spec, h) = glass_plate(k, full);
            let sigma = ov.load.unwrap_or(3e6);
            RunConfig {
                material: MaterialConfig {
                    ell: ell(h, &SODA_LIME_GLASS),
                    ..SODA_LIME_GLASS
                },
                mesh: MeshSource::Generated(spec),
                model: ModelConfig::default(),
                time: TimeConfig {
                    t0: 0.0,
                    tf: 40e-6,
                    c_cfl: 0.6,
                },
                solver: SolverSettings::default(),
                load: LoadCase {
                    traction: vec![
                        TractionLoad {
                            on: tag("notch_upper"),
                            value: [0.0, sigma],
                        },
                        TractionLoad {
                            on: tag("notch_lower"),
                            value: [0.0, -sigma],
                        },
                    ],
                    ..LoadCase::default()
                },
                output: OutputConfig {
                    directory: PathBuf::from("output/ct"),
                    sampling_every: 10_000,
                    notch_tip: Some([0.05, 0.0]),
                    ..OutputConfig::default()
                },
            }
        }
        Benchmark::Kalthoff => {
            let (cells, level) = if full { ([20, 20], 3) } else { ([12 * k, 12 * k], 2) };
            let (spec, h) = notched_rect(
                [0.0, 0.1],
                [0.0, 0.1],
                cells,
                // reflected waves spall the lower right corner late in the run
                ([0.045, 0.1], [0.0, 0.1]),
                level,
                [0.05, 0.025],
            );
            let v = ov.load.unwrap_or(16.5);
            RunConfig {
                material: MaterialConfig {
                    ell: ell(h, &MARAGING_STEEL),
                    ..MARAGING_STEEL
                },
                mesh: MeshSource::Generated(spec),
                model: ModelConfig::default(),
                time: TimeConfig {
                    t0: 0.0,
                    tf: 87e-6,
                    c_cfl: 0.6,
                },
                solver: SolverSettings::default(),
                load: LoadCase {
                    velocity: vec![
                        VelocityBc {
                            on: BoundarySelector::Box([0.0, 0.0, 0.0, 0.025]),
                            velocity: [v, 0.0],
                            mask: [true, false],
                        },
                        VelocityBc {
                            on: tag("bottom"),
                            velocity: [0.0, 0.0],
                            mask: [false, true],
                        },
                    ],
                    ..LoadCase::default()
                },
                output: OutputConfig {
                    directory: PathBuf::from("output/kalthoff"),
                    sampling_every: 10_000,
                    notch_tip: Some([0.05, 0.025]),
                    ..OutputConfig::default()
                },
            }
        }
    };
    if let Some(v) = ov.variant {
        cfg.model.variant = v;
    }
    if let Some(m) = ov.mode {
        cfg.model.mode = m;
    }
    if let Some(tf) = ov.tf {
        cfg.time.tf = tf;
    }
    if let Some(o) = &ov.output {
        cfg.output.directory = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_roundtrip() {
        for b in [Benchmark::Tension, Benchmark::CompactTension, Benchmark::Kalthoff] {
            let cfg = preset(b, &PresetOverrides::default()).unwrap();
            let text = cfg.to_toml().unwrap();
            let back = RunConfig::from_toml(&text).unwrap();
            assert_eq!(cfg, back);
        }
    }

    #[test]
    fn preset_materials() {
        let t = preset(Benchmark::Tension, &PresetOverrides::default()).unwrap();
        assert_eq!(t.material.youngs_modulus, 32e9);
        assert_eq!(t.material.poisson_ratio, 0.2);
        assert_eq!(t.material.density, 2450.0);
        assert_eq!(t.material.gc, 3.0);
        assert_eq!(t.material.rayleigh_speed, Some(2119.0));
        let k = preset(Benchmark::Kalthoff, &PresetOverrides::default()).unwrap();
        assert_eq!(k.material.gc, 2.213e4);
        assert_eq!(k.load.velocity[0].velocity, [16.5, 0.0]);
        for s in [0.5e6, 3e6, 6e6] {
            let ov = PresetOverrides {
                load: Some(s),
                ..Default::default()
            };
            let c = preset(Benchmark::CompactTension, &ov).unwrap();
            assert_eq!(c.load.traction[0].value, [0.0, s]);
            assert_eq!(c.load.traction[1].value, [0.0, -s]);
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        let cfg = preset(Benchmark::Tension, &PresetOverrides::default()).unwrap();
        let text = cfg.to_toml().unwrap().replace("[time]", "[time]\nbogus = 1");
        assert!(RunConfig::from_toml(&text).is_err());
        assert!(matches!(
            "nope".parse::<Benchmark>(),
            Err(ConfigError::UnknownBenchmark(_))
        ));
    }

    #[test]
    fn invalid_values_rejected() {
        let mut cfg = preset(Benchmark::Tension, &PresetOverrides::default()).unwrap();
        cfg.output.sampling_every = 0;
        assert!(cfg.validate().is_err());
        cfg.output.sampling_every = 1;
        cfg.time.tf = -1.0;
        assert!(cfg.validate().is_err());
        cfg.time.tf = 0.0;
        assert!(cfg.validate().is_ok());
    }
}
