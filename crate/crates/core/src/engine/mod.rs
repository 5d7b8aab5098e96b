//! The asynchronous integrator.
//!
//! Each element carries a fixed step. Popping `(t, e)` drifts the element's nodes to
//! `t` with their current momenta, re-solves the element's phase values on its patch,
//! then (if `t < tf`) kicks the nodal momenta with the elemental impulse accumulated
//! since the element's previous update and reschedules the element.

mod loads;
mod queue;

use serde::{Deserialize, Serialize};

pub use loads::{LoadCase, TractionLoad, VelocityBc};
pub use queue::{Event, EventQueue};

use crate::diagnostics::EnergySample;
use crate::element::{critical_time_step, ElementKernel, PatchQuadrature, PhaseSolveMode};
use crate::error::EngineError;
use crate::material::{MaterialParams, PhaseFieldVariant};
use crate::mesh::Mesh;
use crate::solver::{solve_element_phase, BoundConstrainedProblem, SolverSettings};
use loads::ResolvedLoads;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineSettings {
    pub variant: PhaseFieldVariant,
    pub mode: PhaseSolveMode,
    /// When false the phase field stays at its initial value (pure elastodynamics).
    pub fracture: bool,
    pub c_cfl: f64,
    pub t0: f64,
    pub tf: f64,
    pub solver: SolverSettings,
}

impl Default for EngineSettings {
    fn default() -> Self {
        Self {
            variant: PhaseFieldVariant::At2,
            mode: PhaseSolveMode::Patch,
            fracture: true,
            c_cfl: 0.6,
            t0: 0.0,
            tf: 0.0,
            solver: SolverSettings::default(),
        }
    }
}

/// What one call to [`Simulation::step`] did.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementUpdateRecord {
    pub time: f64,
    pub element: usize,
    /// Whether the element was rescheduled (`time < tf`).
    pub rescheduled: bool,
}

/// Copy of the most recent nodal state handed to sampling sinks.
#[derive(Debug, Clone)]
pub struct Snapshot {
    /// Zero-based sample index.
    pub index: usize,
    pub time: f64,
    /// Elemental updates performed so far.
    pub updates: u64,
    pub energy: EnergySample,
    pub u: Vec<[f64; 2]>,
    pub v: Vec<[f64; 2]>,
    pub d: Vec<f64>,
}

/// Receives snapshots during [`Simulation::run`].
pub trait SampleSink {
    fn sample(&mut self, snapshot: &Snapshot) -> Result<(), String>;
}

impl<F: FnMut(&Snapshot) -> Result<(), String>> SampleSink for F {
    fn sample(&mut self, snapshot: &Snapshot) -> Result<(), String> {
        self(snapshot)
    }
}

/// Discards every sample.
pub struct NullSink;

impl SampleSink for NullSink {
    fn sample(&mut self, _snapshot: &Snapshot) -> Result<(), String> {
        Ok(())
    }
}

pub struct Simulation {
    mesh: Mesh,
    params: MaterialParams,
    settings: EngineSettings,
    kernels: Vec<ElementKernel>,
    element_mass: Vec<[f64; 4]>,
    mass: Vec<f64>,
    dt: Vec<f64>,
    loads: ResolvedLoads,

    u0: Vec<[f64; 2]>,
    u: Vec<[f64; 2]>,
    p: Vec<[f64; 2]>,
    d: Vec<f64>,
    tau_node: Vec<f64>,
    tau_element: Vec<f64>,
    updates: Vec<u64>,

    queue: EventQueue,
    last_time: f64,
    total_updates: u64,
    reaction_work: f64,
    samples_taken: usize,
    patch: PatchQuadrature,
}

impl Simulation {
    pub fn new(
        mesh: Mesh,
        params: MaterialParams,
        settings: EngineSettings,
        load: &LoadCase,
    ) -> Result<Self, EngineError> {
        if !(settings.c_cfl > 0.0 && settings.c_cfl <= 1.0) {
            return Err(EngineError::Config(format!(
                "C_CFL must lie in (0, 1], got {}",
                settings.c_cfl
            )));
        }
        if !(settings.t0.is_finite() && settings.tf.is_finite() && settings.tf >= settings.t0) {
            return Err(EngineError::Config(format!(
                "need finite t0 <= tf, got t0 = {}, tf = {}",
                settings.t0, settings.tf
            )));
        }
        if !(settings.solver.rel_tol > 0.0) {
            return Err(EngineError::Config("solver tolerance must be positive".into()));
        }

        let kernels = (0..mesh.num_elements())
            .map(|e| ElementKernel::for_element(&mesh, e))
            .collect::<Result<Vec<_>, _>>()?;
        let element_mass: Vec<[f64; 4]> = kernels
            .iter()
            .map(|k| k.lumped_mass(params.density, 1.0))
            .collect();
        let mut mass = vec![0.0; mesh.num_nodes()];
        for (e, conn) in mesh.elements.iter().enumerate() {
            for (local, &a) in conn.iter().enumerate() {
                mass[a] += element_mass[e][local];
            }
        }
        let dt = kernels
            .iter()
            .map(|k| critical_time_step(k, &params, settings.c_cfl))
            .collect::<Result<Vec<_>, _>>()?;
        let loads = ResolvedLoads::resolve(&mesh, &kernels, load)?;

        let n = mesh.num_nodes();
        let mut p = vec![[0.0; 2]; n];
        for a in 0..n {
            for c in 0..2 {
                let v = loads.constraint[a][c].unwrap_or(load.initial_velocity[c]);
                p[a][c] = mass[a] * v;
            }
        }

        let mut queue = EventQueue::new();
        let ne = mesh.num_elements();
        if settings.t0 < settings.tf {
            for (e, &step) in dt.iter().enumerate() {
                queue.push((settings.t0 + step).min(settings.tf), e);
            }
        }

        Ok(Self {
            patch: PatchQuadrature::new(settings.variant, params.gc, params.ell),
            mesh,
            params,
            settings,
            kernels,
            element_mass,
            mass,
            dt,
            loads,
            u0: vec![[0.0; 2]; n],
            u: vec![[0.0; 2]; n],
            p,
            d: vec![0.0; n],
            tau_node: vec![settings.t0; n],
            tau_element: vec![settings.t0; ne],
            updates: vec![0; ne],
            queue,
            last_time: settings.t0,
            total_updates: 0,
            reaction_work: 0.0,
            samples_taken: 0,
        })
    }

    /// Replaces the initial velocity field (unconstrained components only). Only valid
    /// before the first update.
    pub fn set_initial_velocity(&mut self, v: &[[f64; 2]]) -> Result<(), EngineError> {
        if v.len() != self.mesh.num_nodes() {
            return Err(EngineError::Config(format!(
                "initial velocity has {} entries, mesh has {} nodes",
                v.len(),
                self.mesh.num_nodes()
            )));
        }
        if self.total_updates > 0 {
            return Err(EngineError::Config(
                "initial velocity set after stepping started".into(),
            ));
        }
        for a in 0..v.len() {
            for c in 0..2 {
                if self.loads.constraint[a][c].is_none() {
                    self.p[a][c] = self.mass[a] * v[a][c];
                }
            }
        }
        Ok(())
    }

    /// Sets an initial phase field; every value must lie in [0, 1].
    pub fn set_initial_phase(&mut self, d: &[f64]) -> Result<(), EngineError> {
        if d.len() != self.mesh.num_nodes() || d.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(EngineError::Config(
                "initial phase field must have one value in [0, 1] per node".into(),
            ));
        }
        if self.total_updates > 0 {
            return Err(EngineError::Config(
                "initial phase field set after stepping started".into(),
            ));
        }
        self.d.copy_from_slice(d);
        Ok(())
    }

    /// Performs one elemental update; `None` once the queue is empty.
    pub fn step(&mut self) -> Result<Option<ElementUpdateRecord>, EngineError> {
        let Some(event) = self.queue.pop() else {
            return Ok(None);
        };
        let t = event.time;
        let e = event.element;
        debug_assert!(t >= self.last_time, "event times must not decrease");
        self.last_time = t;
        let conn = self.mesh.elements[e];

        for &a in &conn {
            let h = t - self.tau_node[a];
            let m = self.mass[a];
            self.u[a][0] += h * self.p[a][0] / m;
            self.u[a][1] += h * self.p[a][1] / m;
            self.tau_node[a] = t;
        }

        if self.settings.fracture {
            self.solve_phase(e, t)?;
        }

        let rescheduled = t < self.settings.tf;
        if rescheduled {
            let h = t - self.tau_element[e];
            let ue = conn.map(|a| self.u[a]);
            let de = conn.map(|a| self.d[a]);
            let f = self.kernels[e].internal_force(&ue, &de, &self.params);
            let ext = self.loads.element_force[e].unwrap_or([[0.0; 2]; 4]);
            for (local, &a) in conn.iter().enumerate() {
                for c in 0..2 {
                    let impulse = h * (ext[local][c] - f[local][c]);
                    match self.loads.constraint[a][c] {
                        // the support supplies the opposite impulse
                        Some(v) => self.reaction_work -= impulse * v,
                        None => self.p[a][c] += impulse,
                    }
                }
            }
            self.tau_element[e] = t;
            self.queue
                .push((t + self.dt[e]).min(self.settings.tf), e);
        }
        self.updates[e] += 1;
        self.total_updates += 1;
        Ok(Some(ElementUpdateRecord {
            time: t,
            element: e,
            rescheduled,
        }))
    }

    fn solve_phase(&mut self, e: usize, t: f64) -> Result<(), EngineError> {
        let conn = self.mesh.elements[e];
        let lower = conn.map(|a| self.d[a]);
        self.patch.assemble(
            &self.mesh,
            &self.kernels,
            e,
            &self.u,
            &self.d,
            &self.params,
            self.settings.mode,
        );
        let s = self.settings.solver;
        let tol = s.tolerance(self.params.gc, self.kernels[e].area, self.params.ell);
        let problem = BoundConstrainedProblem::new(&self.patch, lower);
        let de = solve_element_phase(&problem, tol, s.max_outer, s.max_newton).map_err(|source| {
            log::error!(
                "phase solve failed at element {e}, t = {t:e}: nodes {conn:?}, floor {lower:?}"
            );
            EngineError::Solver {
                element: e,
                time: t,
                source,
            }
        })?;
        for (local, &a) in conn.iter().enumerate() {
            self.d[a] = de[local];
        }
        Ok(())
    }

    /// Steps until the queue is empty, handing a snapshot to `sink` after every
    /// `sampling_every` updates and once more at the end if updates happened since.
    pub fn run(
        &mut self,
        sampling_every: u64,
        sink: &mut dyn SampleSink,
    ) -> Result<u64, EngineError> {
        if sampling_every == 0 {
            return Err(EngineError::Config("sampling interval must be at least 1".into()));
        }
        let mut since = 0u64;
        let mut done = 0u64;
        while self.step()?.is_some() {
            done += 1;
            since += 1;
            if since == sampling_every {
                self.emit(sink)?;
                since = 0;
            }
        }
        if since > 0 {
            self.emit(sink)?;
        }
        Ok(done)
    }

    /// Performs at most `max_updates` updates; returns how many were done.
    pub fn advance(&mut self, max_updates: u64) -> Result<u64, EngineError> {
        let mut n = 0;
        while n < max_updates && self.step()?.is_some() {
            n += 1;
        }
        Ok(n)
    }

    fn emit(&mut self, sink: &mut dyn SampleSink) -> Result<(), EngineError> {
        let snap = self.snapshot();
        self.samples_taken += 1;
        sink.sample(&snap).map_err(EngineError::Sink)
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            index: self.samples_taken,
            time: self.last_time,
            updates: self.total_updates,
            energy: self.energies(),
            u: self.u.clone(),
            v: self.velocities(),
            d: self.d.clone(),
        }
    }

    pub fn velocities(&self) -> Vec<[f64; 2]> {
        self.p
            .iter()
            .zip(&self.mass)
            .map(|(p, &m)| [p[0] / m, p[1] / m])
            .collect()
    }

    /// Energies of the most recent nodal state.
    pub fn energies(&self) -> EnergySample {
        let kinetic = crate::diagnostics::kinetic_energy(&self.p, &self.mass);
        let mut strain = 0.0;
        let mut crack = 0.0;
        for (e, conn) in self.mesh.elements.iter().enumerate() {
            let ue = conn.map(|a| self.u[a]);
            let de = conn.map(|a| self.d[a]);
            let k = &self.kernels[e];
            strain += k.strain_energy(&ue, &de, &self.params);
            crack += k.crack_energy(&de, self.settings.variant, self.params.gc, self.params.ell);
        }
        let load_work: f64 = self
            .loads
            .node_force
            .iter()
            .zip(self.u.iter().zip(&self.u0))
            .map(|(f, (u, u0))| f[0] * (u[0] - u0[0]) + f[1] * (u[1] - u0[1]))
            .sum();
        EnergySample::new(
            self.last_time,
            kinetic,
            strain,
            crack,
            load_work + self.reaction_work,
        )
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn params(&self) -> &MaterialParams {
        &self.params
    }

    pub fn settings(&self) -> &EngineSettings {
        &self.settings
    }

    pub fn kernels(&self) -> &[ElementKernel] {
        &self.kernels
    }

    pub fn element_masses(&self) -> &[[f64; 4]] {
        &self.element_mass
    }

    pub fn nodal_mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn time_steps(&self) -> &[f64] {
        &self.dt
    }

    pub fn displacement(&self) -> &[[f64; 2]] {
        &self.u
    }

    pub fn momentum(&self) -> &[[f64; 2]] {
        &self.p
    }

    pub fn phase(&self) -> &[f64] {
        &self.d
    }

    pub fn node_times(&self) -> &[f64] {
        &self.tau_node
    }

    pub fn element_times(&self) -> &[f64] {
        &self.tau_element
    }

    pub fn update_counts(&self) -> &[u64] {
        &self.updates
    }

    pub fn total_updates(&self) -> u64 {
        self.total_updates
    }

    /// Time of the most recent update (`t0` before the first one).
    pub fn time(&self) -> f64 {
        self.last_time
    }

    pub fn is_finished(&self) -> bool {
        self.queue.is_empty()
    }

    pub fn pending_events(&self) -> usize {
        self.queue.len()
    }

    pub fn next_event(&self) -> Option<Event> {
        self.queue.peek().copied()
    }

    /// Whether component `c` of node `a` carries a prescribed velocity.
    pub fn is_constrained(&self, a: usize, c: usize) -> bool {
        self.loads.constraint[a][c].is_some()
    }
}
