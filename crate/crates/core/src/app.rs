//! Run orchestration behind the command-line front end.

use std::fmt;
use std::path::Path;
use std::time::{Duration, Instant};

use crate::config::{preset, Benchmark, MaterialConfig, PresetOverrides, RunConfig};
use crate::diagnostics::{update_statistics, IsoSample, UpdateStats};
use crate::element::{critical_time_step, ElementKernel};
use crate::engine::Simulation;
use crate::error::{EngineError, Error};
use crate::material::MaterialParams;
use crate::mesh::Mesh;
use crate::output::{Recorder, TraceRow};

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub updates: u64,
    pub stats: UpdateStats,
    pub rows: Vec<TraceRow>,
    pub tips: Vec<IsoSample>,
    pub elapsed: Duration,
}

/// Builds the simulation described by `cfg`.
pub fn build_simulation(cfg: &RunConfig) -> Result<Simulation, Error> {
    let mesh = cfg.mesh.build()?;
    let params = cfg.material.params()?;
    Ok(Simulation::new(mesh, params, cfg.engine_settings(), &cfg.load)?)
}

/// Runs `cfg` to completion and writes its outputs into `cfg.output.directory`.
pub fn execute(cfg: &RunConfig) -> Result<RunSummary, Error> {
    cfg.validate()?;
    let dir = &cfg.output.directory;
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.clone(),
        source,
    })?;
    let mut sim = build_simulation(cfg)?;
    log::info!(
        "{} nodes, {} elements, t = [{:e}, {:e}]",
        sim.mesh().num_nodes(),
        sim.mesh().num_elements(),
        cfg.time.t0,
        cfg.time.tf
    );
    let mut rec = Recorder::new(sim.mesh(), sim.kernels(), *sim.params());
    if let Some(tip) = cfg.output.notch_tip {
        rec = rec.track_tip(cfg.output.iso_level, tip);
    }
    if cfg.output.vtk {
        rec = rec.write_vtk(dir);
    }
    let start = Instant::now();
    let updates = sim.run(cfg.output.sampling_every, &mut rec)?;
    let elapsed = start.elapsed();
    let stats = update_statistics(sim.update_counts(), sim.time_steps(), cfg.time.t0, cfg.time.tf);
    rec.finish(dir, &stats)?;
    log::info!(
        "{updates} elemental updates in {:.1} s ({:.1}% of synchronous)",
        elapsed.as_secs_f64(),
        100.0 * stats.ratio()
    );
    Ok(RunSummary {
        updates,
        stats,
        rows: rec.rows,
        tips: rec.tips,
        elapsed,
    })
}

pub fn cmd_run(path: &Path) -> Result<RunSummary, Error> {
    let cfg = RunConfig::from_path(path)?;
    execute(&cfg)
}

/// Runs a bundled benchmark; the resolved configuration is saved next to the outputs.
pub fn cmd_benchmark(bench: Benchmark, ov: &PresetOverrides) -> Result<RunSummary, Error> {
    let cfg = preset(bench, ov)?;
    let dir = &cfg.output.directory;
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.clone(),
        source,
    })?;
    let path = dir.join("config.toml");
    std::fs::write(&path, cfg.to_toml()?).map_err(|source| Error::Io { path, source })?;
    execute(&cfg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshInfo {
    pub nodes: usize,
    pub elements: usize,
    /// Smallest and largest element edge length.
    pub min_size: f64,
    pub max_size: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    /// `(lower edge, upper edge, count)` on log-spaced bins of the critical step.
    pub dt_histogram: Vec<(f64, f64, usize)>,
    pub duration: f64,
    /// Elemental updates a synchronous scheme at `dt_min` would need over `duration`.
    pub synchronous_updates: u64,
    /// Updates the asynchronous schedule needs over `duration`.
    pub asynchronous_updates: u64,
}

pub fn mesh_info(
    mesh: &Mesh,
    params: &MaterialParams,
    c_cfl: f64,
    duration: f64,
) -> Result<MeshInfo, Error> {
    let mut dt = Vec::with_capacity(mesh.num_elements());
    let (mut min_size, mut max_size) = (f64::INFINITY, 0f64);
    for e in 0..mesh.num_elements() {
        let k = ElementKernel::for_element(mesh, e).map_err(EngineError::from)?;
        dt.push(critical_time_step(&k, params, c_cfl).map_err(EngineError::from)?);
        let (lo, hi) = mesh.element_edge_range(e);
        min_size = min_size.min(lo);
        max_size = max_size.max(hi);
    }
    let dt_min = dt.iter().copied().fold(f64::INFINITY, f64::min);
    let dt_max = dt.iter().copied().fold(0.0, f64::max);
    let bins = if dt_max > dt_min * (1.0 + 1e-9) { 8 } else { 1 };
    let span = (dt_max / dt_min).ln();
    let mut dt_histogram: Vec<(f64, f64, usize)> = (0..bins)
        .map(|b| {
            let lo = dt_min * (span * b as f64 / bins as f64).exp();
            let hi = dt_min * (span * (b + 1) as f64 / bins as f64).exp();
            (lo, hi, 0)
        })
        .collect();
    for &v in &dt {
        let b = if bins == 1 {
            0
        } else {
            (((v / dt_min).ln() / span * bins as f64) as usize).min(bins - 1)
        };
        dt_histogram[b].2 += 1;
    }
    let steps = |h: f64| if duration > 0.0 { (duration / h).ceil() as u64 } else { 0 };
    Ok(MeshInfo {
        nodes: mesh.num_nodes(),
        elements: mesh.num_elements(),
        min_size,
        max_size,
        dt_min,
        dt_max,
        dt_histogram,
        duration,
        synchronous_updates: mesh.num_elements() as u64 * steps(dt_min),
        asynchronous_updates: dt.iter().map(|&h| steps(h)).sum(),
    })
}

impl fmt::Display for MeshInfo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "nodes            {}", self.nodes)?;
        writeln!(f, "elements         {}", self.elements)?;
        writeln!(f, "element size     {:.4e} .. {:.4e} m", self.min_size, self.max_size)?;
        writeln!(f, "critical dt      {:.4e} .. {:.4e} s", self.dt_min, self.dt_max)?;
        writeln!(f, "dt histogram")?;
        for (lo, hi, n) in &self.dt_histogram {
            writeln!(f, "  [{lo:.3e}, {hi:.3e}]  {n}")?;
        }
        writeln!(f, "duration         {:.4e} s", self.duration)?;
        writeln!(f, "synchronous      {} elemental updates", self.synchronous_updates)?;
        let ratio = if self.synchronous_updates > 0 {
            self.asynchronous_updates as f64 / self.synchronous_updates as f64
        } else {
            0.0
        };
        write!(
            f,
            "asynchronous     {} elemental updates ({:.1}%)",
            self.asynchronous_updates,
            100.0 * ratio
        )
    }
}

/// Mesh-info for a mesh file, or for the mesh of a run configuration (`.toml`).
pub fn cmd_mesh_info(
    path: &Path,
    material: Option<MaterialConfig>,
    c_cfl: Option<f64>,
    duration: Option<f64>,
) -> Result<MeshInfo, Error> {
    let (mesh, mat, cfl, tf) = if path.extension().is_some_and(|e| e == "toml") {
        let cfg = RunConfig::from_path(path)?;
        (
            cfg.mesh.build()?,
            cfg.material,
            cfg.time.c_cfl,
            cfg.time.tf - cfg.time.t0,
        )
    } else {
        let format = match path.extension().and_then(|e| e.to_str()) {
            Some("msh") => crate::mesh::MeshFormat::Msh,
            _ => crate::mesh::MeshFormat::NativeText,
        };
        let mesh = crate::mesh::load_mesh(path, format)?;
        (mesh, crate::config::SILICA_GLASS, 0.6, 80e-6)
    };
    let mat = material.unwrap_or(mat);
    mesh_info(&mesh, &mat.params()?, c_cfl.unwrap_or(cfl), duration.unwrap_or(tf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::tests::grid;

    #[test]
    fn counts_and_uniform_histogram() {
        let p = crate::config::SILICA_GLASS.params().unwrap();
        let info = mesh_info(&grid(3, 3, 3e-3, 3e-3), &p, 0.6, 1e-6).unwrap();
        assert_eq!((info.nodes, info.elements), (16, 9));
        assert_eq!(info.dt_histogram.len(), 1);
        assert_eq!(info.dt_histogram[0].2, 9);
        assert_eq!(info.synchronous_updates, info.asynchronous_updates);
        let one = mesh_info(&grid(1, 1, 1e-3, 1e-3), &p, 0.6, 1e-6).unwrap();
        assert_eq!((one.nodes, one.elements), (4, 1));
    }
}
