//! Field snapshots (legacy VTK), the energy trace (CSV) and the update summary.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::diagnostics::{
    energy_rate_velocity, EnergySample, IsoCurveTracker, IsoSample, UpdateStats,
};
use crate::element::ElementKernel;
use crate::engine::{SampleSink, Snapshot};
use crate::error::Error;
use crate::material::{degraded_stress, max_principal, MaterialParams};
use crate::mesh::Mesh;

/// Elements whose mean phase value exceeds this are blanked in the stress field.
pub const STRESS_MASK_LEVEL: f64 = 0.9;

pub const TRACE_HEADER: &str = "t,T,U_strain,Gamma,W_ext,H_free,v_tip_energy,v_tip_iso,l_crack";

/// One line of the energy trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub energy: EnergySample,
    /// `dGamma/dt / gc` since the previous sample.
    pub v_tip_energy: Option<f64>,
    pub v_tip_iso: Option<f64>,
    pub l_crack: f64,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

impl TraceRow {
    pub fn to_csv(&self) -> String {
        let e = &self.energy;
        format!(
            "{:e},{:e},{:e},{:e},{:e},{:e},{},{},{:e}",
            e.t,
            e.kinetic,
            e.strain,
            e.crack,
            e.external_work,
            e.free,
            opt(self.v_tip_energy),
            opt(self.v_tip_iso),
            self.l_crack
        )
    }
}

pub fn trace_csv(rows: &[TraceRow]) -> String {
    let mut s = String::from(TRACE_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.to_csv());
        s.push('\n');
    }
    s
}

/// Per-element maximum principal stress of the degraded stress, averaged over the
/// Gauss points; `NaN` where the element's mean phase value exceeds `mask_level`.
pub fn max_principal_stress(
    mesh: &Mesh,
    kernels: &[ElementKernel],
    u: &[[f64; 2]],
    d: &[f64],
    params: &MaterialParams,
    mask_level: f64,
) -> Vec<f64> {
    mesh.elements
        .iter()
        .zip(kernels)
        .map(|(conn, k)| {
            let de = conn.map(|a| d[a]);
            if de.iter().sum::<f64>() / 4.0 > mask_level {
                return f64::NAN;
            }
            let ue = conn.map(|a| u[a]);
            let mut sigma = crate::material::SymTensor2::default();
            for gp in &k.points {
                let eps = ElementKernel::strain(gp, &ue);
                let dg = ElementKernel::interpolate(gp, &de);
                sigma = sigma.add(&degraded_stress(&eps, dg, params).scale(0.25));
            }
            max_principal(&sigma)
        })
        .collect()
}

/// Legacy ASCII unstructured grid with `displacement`, `velocity` and `phase` at the
/// nodes and `max_principal_stress` plus a `cracked` flag on the cells.
pub fn vtk_string(
    mesh: &Mesh,
    kernels: &[ElementKernel],
    snap: &Snapshot,
    params: &MaterialParams,
) -> String {
    let n = mesh.num_nodes();
    let ne = mesh.num_elements();
    let mut s = String::with_capacity(64 * (n + ne));
    let _ = writeln!(s, "# vtk DataFile Version 3.0");
    let _ = writeln!(s, "phase-field AVI sample {} t={:e}", snap.index, snap.time);
    let _ = writeln!(s, "ASCII\nDATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {n} double");
    for p in &mesh.nodes {
        let _ = writeln!(s, "{:e} {:e} 0", p[0], p[1]);
    }
    let _ = writeln!(s, "CELLS {ne} {}", 5 * ne);
    for c in &mesh.elements {
        let _ = writeln!(s, "4 {} {} {} {}", c[0], c[1], c[2], c[3]);
    }
    let _ = writeln!(s, "CELL_TYPES {ne}");
    for _ in 0..ne {
        s.push_str("9\n");
    }
    let _ = writeln!(s, "POINT_DATA {n}");
    for (name, field) in [("displacement", &snap.u), ("velocity", &snap.v)] {
        let _ = writeln!(s, "VECTORS {name} double");
        for v in field.iter() {
            let _ = writeln!(s, "{:e} {:e} 0", v[0], v[1]);
        }
    }
    let _ = writeln!(s, "SCALARS phase double 1\nLOOKUP_TABLE default");
    for v in &snap.d {
        let _ = writeln!(s, "{v:e}");
    }
    let stress = max_principal_stress(mesh, kernels, &snap.u, &snap.d, params, STRESS_MASK_LEVEL);
    let _ = writeln!(s, "CELL_DATA {ne}");
    let _ = writeln!(s, "SCALARS max_principal_stress double 1\nLOOKUP_TABLE default");
    for v in &stress {
        let _ = writeln!(s, "{v:e}");
    }
    let _ = writeln!(s, "SCALARS cracked int 1\nLOOKUP_TABLE default");
    for v in &stress {
        s.push_str(if v.is_nan() { "1\n" } else { "0\n" });
    }
    s
}

/// Table 2 style summary.
pub fn stats_text(stats: &UpdateStats) -> String {
    format!(
        "elements {}\nmin {}\nmax {}\nmedian {}\ntotal {}\nsynchronous_estimate {}\nratio {:.4}\n",
        stats.counts.len(),
        stats.min,
        stats.max,
        stats.median,
        stats.total,
        stats.synchronous_estimate,
        stats.ratio()
    )
}

fn write_file(path: &Path, text: &str) -> Result<(), Error> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Sampling sink that builds the trace, follows the crack tip and optionally writes
/// a VTK file per sample.
pub struct Recorder {
    mesh: Mesh,
    kernels: Vec<ElementKernel>,
    params: MaterialParams,
    tracker: Option<IsoCurveTracker>,
    vtk_dir: Option<PathBuf>,
    prev: Option<EnergySample>,
    pub rows: Vec<TraceRow>,
    pub tips: Vec<IsoSample>,
}

impl Recorder {
    pub fn new(mesh: &Mesh, kernels: &[ElementKernel], params: MaterialParams) -> Self {
        Self {
            mesh: mesh.clone(),
            kernels: kernels.to_vec(),
            params,
            tracker: None,
            vtk_dir: None,
            prev: None,
            rows: Vec::new(),
            tips: Vec::new(),
        }
    }

    /// Enables iso-curve tip tracking from `origin`.
    pub fn track_tip(mut self, level: f64, origin: [f64; 2]) -> Self {
        let sep = 4.0 * self.params.ell;
        self.tracker = Some(IsoCurveTracker::new(&self.mesh, level, origin, sep));
        self
    }

    /// Writes `sample_NNNNN.vtk` into `dir` at every sample.
    pub fn write_vtk(mut self, dir: &Path) -> Self {
        self.vtk_dir = Some(dir.to_path_buf());
        self
    }

    pub fn trace_csv(&self) -> String {
        trace_csv(&self.rows)
    }

    fn record(&mut self, snap: &Snapshot) -> Result<(), Error> {
        let e = snap.energy;
        let v_tip_energy = self
            .prev
            .as_ref()
            .filter(|p| e.t > p.t)
            .map(|p| energy_rate_velocity(p, &e, self.params.gc));
        let (v_tip_iso, l_crack) = match &mut self.tracker {
            Some(tr) => {
                let s = tr.update(&self.mesh, snap.time, &snap.d);
                let out = (s.velocity, s.length);
                self.tips.push(s);
                out
            }
            None => (None, 0.0),
        };
        self.rows.push(TraceRow {
            energy: e,
            v_tip_energy,
            v_tip_iso,
            l_crack,
        });
        self.prev = Some(e);
        if let Some(dir) = &self.vtk_dir {
            let path = dir.join(format!("sample_{:05}.vtk", snap.index));
            write_file(&path, &vtk_string(&self.mesh, &self.kernels, snap, &self.params))?;
        }
        Ok(())
    }

    /// Writes `trace.csv` and `stats.txt` into `dir`.
    pub fn finish(&self, dir: &Path, stats: &UpdateStats) -> Result<(), Error> {
        write_file(&dir.join("trace.csv"), &self.trace_csv())?;
        write_file(&dir.join("stats.txt"), &stats_text(stats))
    }
}

impl SampleSink for Recorder {
    fn sample(&mut self, snapshot: &Snapshot) -> Result<(), String> {
        self.record(snapshot).map_err(|e| e.to_string())
    }
}
