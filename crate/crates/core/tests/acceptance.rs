//! Acceptance suite: property checks plus coarse reproductions of the three benchmarks.
//!
//! Runs as a plain binary and prints one PASS/FAIL line per criterion. A failed property
//! check (1-7) makes the process exit nonzero; failed benchmark reproductions (8-14) do
//! too when `ACCEPTANCE_STRICT` is set. Benchmark runs are shared between criteria and
//! executed once, in order, on first use.

use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use phasefield_avi::app::build_simulation;
use phasefield_avi::config::{preset, Benchmark, PresetOverrides, RunConfig, SILICA_GLASS};
use phasefield_avi::diagnostics::{
    analyze_branching, crack_direction_angle, oscillation_period, update_statistics,
    BranchReport, IsoCurveTracker, IsoSample, UpdateStats,
};
use phasefield_avi::element::{
    edge_traction_force, ElementKernel, PatchQuadrature, PhaseSolveMode,
};
use phasefield_avi::engine::{EngineSettings, LoadCase, SampleSink, Simulation, Snapshot, TractionLoad};
use phasefield_avi::material::{spectral_split, MaterialParams, PhaseFieldVariant, SymTensor2};
use phasefield_avi::mesh::{generate_graded_rect, BoundarySelector, GradedRectSpec, Mesh, RefineBox};
use phasefield_avi::output::{Recorder, TraceRow};
use phasefield_avi::solver::{
    check_complementarity, solve_element_phase, BoundConstrainedProblem, SolverSettings,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ISO: f64 = 0.9;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

// ---------------------------------------------------------------------------
// shared benchmark runs

struct Outcome {
    cfg: RunConfig,
    mesh: Mesh,
    /// Lumped nodal area.
    area: Vec<f64>,
    rows: Vec<TraceRow>,
    tips: Vec<IsoSample>,
    d: Vec<f64>,
    stats: UpdateStats,
    elapsed: Duration,
    d_out_of_bounds: usize,
    d_decreases: usize,
    gamma_drops: usize,
    worst_gamma_drop: f64,
}

impl Outcome {
    fn last(&self) -> &TraceRow {
        self.rows.last().expect("run produced no samples")
    }

    fn ell(&self) -> f64 {
        self.cfg.material.ell
    }

    fn rayleigh(&self) -> f64 {
        self.cfg.material.rayleigh_speed.expect("preset sets v_R")
    }

    fn branching(&self) -> BranchReport {
        let tip = self.cfg.output.notch_tip.unwrap();
        let ell = self.ell();
        analyze_branching(&self.mesh, &self.d, ISO, tip[0], 0.1, ell, ell, 3, 0.015)
    }

    fn damaged_area(&self, level: f64) -> f64 {
        self.d
            .iter()
            .zip(&self.area)
            .filter(|(&v, _)| v >= level)
            .map(|(_, a)| a)
            .sum()
    }
}

/// Checks every sample for bounds, irreversibility and crack-energy growth before
/// handing it on to the recorder.
struct Watch {
    rec: Recorder,
    prev_d: Option<Vec<f64>>,
    prev_gamma: Option<f64>,
    out_of_bounds: usize,
    decreases: usize,
    gamma_drops: usize,
    worst_gamma_drop: f64,
}

impl SampleSink for Watch {
    fn sample(&mut self, s: &Snapshot) -> Result<(), String> {
        self.out_of_bounds += s.d.iter().filter(|v| !(0.0..=1.0).contains(*v)).count();
        if let Some(p) = &self.prev_d {
            self.decreases += s.d.iter().zip(p).filter(|(a, b)| a < b).count();
        }
        let g = s.energy.crack;
        if let Some(pg) = self.prev_gamma {
            if g < pg {
                self.gamma_drops += 1;
                self.worst_gamma_drop = self.worst_gamma_drop.max((pg - g) / pg);
            }
        }
        self.prev_gamma = Some(g);
        self.prev_d = Some(s.d.clone());
        self.rec.sample(s)
    }
}

fn simulate(cfg: RunConfig) -> Result<Outcome, String> {
    let mut sim = build_simulation(&cfg).map_err(|e| e.to_string())?;
    let mut rec = Recorder::new(sim.mesh(), sim.kernels(), *sim.params());
    if let Some(tip) = cfg.output.notch_tip {
        rec = rec.track_tip(cfg.output.iso_level, tip);
    }
    let mut w = Watch {
        rec,
        prev_d: None,
        prev_gamma: None,
        out_of_bounds: 0,
        decreases: 0,
        gamma_drops: 0,
        worst_gamma_drop: 0.0,
    };
    let start = Instant::now();
    sim.run(cfg.output.sampling_every, &mut w)
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let stats = update_statistics(sim.update_counts(), sim.time_steps(), cfg.time.t0, cfg.time.tf);
    let rho = sim.params().density;
    Ok(Outcome {
        mesh: sim.mesh().clone(),
        area: sim.nodal_mass().iter().map(|m| m / rho).collect(),
        rows: w.rec.rows,
        tips: w.rec.tips,
        d: sim.phase().to_vec(),
        stats,
        elapsed,
        d_out_of_bounds: w.out_of_bounds,
        d_decreases: w.decreases,
        gamma_drops: w.gamma_drops,
        worst_gamma_drop: w.worst_gamma_drop,
        cfg,
    })
}

fn run_config(key: &str) -> RunConfig {
    let mut ov = PresetOverrides::default();
    let bench = match key {
        "tension" => Benchmark::Tension,
        "tension-at1" => {
            ov.variant = Some(PhaseFieldVariant::At1);
            Benchmark::Tension
        }
        "tension-local" => {
            ov.mode = Some(PhaseSolveMode::Local);
            Benchmark::Tension
        }
        // near the growth threshold the outcome depends on ell, so this case runs at
        // the finer mesh whose ell matches the material's
        "ct-0.5" => {
            ov.load = Some(0.5e6);
            ov.mesh_scale = Some(2);
            ov.tf = Some(60e-6);
            Benchmark::CompactTension
        }
        "ct-3" => {
            ov.load = Some(3e6);
            Benchmark::CompactTension
        }
        "ct-3-at1" => {
            ov.load = Some(3e6);
            ov.variant = Some(PhaseFieldVariant::At1);
            Benchmark::CompactTension
        }
        "ct-6" => {
            ov.load = Some(6e6);
            Benchmark::CompactTension
        }
        "kalthoff" => Benchmark::Kalthoff,
        "kalthoff-at1" => {
            ov.variant = Some(PhaseFieldVariant::At1);
            Benchmark::Kalthoff
        }
        other => panic!("unknown run {other}"),
    };
    preset(bench, &ov).expect("preset builds")
}

#[derive(Default)]
struct Runs {
    done: HashMap<&'static str, Result<Outcome, String>>,
    order: Vec<&'static str>,
}

impl Runs {
    fn get(&mut self, key: &'static str) -> &Outcome {
        if !self.done.contains_key(key) {
            eprintln!("  running {key} ...");
            let start = Instant::now();
            let out = simulate(run_config(key));
            match &out {
                Ok(o) => eprintln!(
                    "  {key}: {} elements, {} updates, {:.1} s, ratio {:.1}%",
                    o.mesh.num_elements(),
                    o.stats.total,
                    start.elapsed().as_secs_f64(),
                    100.0 * o.stats.ratio()
                ),
                Err(e) => eprintln!("  {key}: failed: {e}"),
            }
            self.done.insert(key, out);
            self.order.push(key);
        }
        match &self.done[key] {
            Ok(o) => o,
            Err(e) => panic!("run {key} failed: {e}"),
        }
    }
}

/// Crack-tip speeds over sliding windows of at least `window` seconds, as
/// `(window end time, tip x at end, speed)`.
fn window_speeds(tips: &[IsoSample], window: f64) -> Vec<(f64, f64, f64)> {
    let pts: Vec<(f64, f64, f64)> = tips
        .iter()
        .filter_map(|s| s.tip.map(|t| (s.t, t.position[0], s.length)))
        .collect();
    let mut out = Vec::new();
    let mut j = 0;
    for i in 0..pts.len() {
        while j < pts.len() && pts[j].0 - pts[i].0 < window {
            j += 1;
        }
        if j == pts.len() {
            break;
        }
        let (ti, _, li) = pts[i];
        let (tj, xj, lj) = pts[j];
        out.push((tj, xj, (lj - li) / (tj - ti)));
    }
    out
}

// ---------------------------------------------------------------------------
// property criteria

fn jittered_grid(rng: &mut ChaCha8Rng, n: usize, h: f64) -> Mesh {
    let mut nodes = Vec::new();
    for j in 0..=n {
        for i in 0..=n {
            let interior = i > 0 && i < n && j > 0 && j < n;
            let mut x = [i as f64 * h, j as f64 * h];
            if interior {
                x[0] += rng.random_range(-0.2..0.2) * h;
                x[1] += rng.random_range(-0.2..0.2) * h;
            }
            nodes.push(x);
        }
    }
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut elements = Vec::new();
    for j in 0..n {
        for i in 0..n {
            elements.push([id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    Mesh::new(nodes, elements, &[]).unwrap()
}

/// Affine displacement of strain magnitude `scale` plus nodal noise.
fn random_displacement(rng: &mut ChaCha8Rng, mesh: &Mesh, scale: f64, h: f64) -> Vec<[f64; 2]> {
    let g: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0) * scale);
    mesh.nodes
        .iter()
        .map(|x| {
            [
                g[0] * x[0] + g[1] * x[1] + rng.random_range(-0.3..0.3) * scale * h,
                g[2] * x[0] + g[3] * x[1] + rng.random_range(-0.3..0.3) * scale * h,
            ]
        })
        .collect()
}

fn inf_norm(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn gradient_consistency() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let h = 1e-3;
    let mut worst: [f64; 3] = [0.0; 3];
    let states = 120;
    for s in 0..states {
        let mesh = jittered_grid(&mut rng, 3, h);
        let kernels: Vec<ElementKernel> = (0..9)
            .map(|e| ElementKernel::for_element(&mesh, e).unwrap())
            .collect();
        let p = MaterialParams::new(32e9, 0.2, 2450.0, 3.0, 2.0 * h).unwrap();
        let u = random_displacement(&mut rng, &mesh, 1e-3, h);
        let d: Vec<f64> = (0..mesh.num_nodes()).map(|_| rng.random_range(0.0..1.0)).collect();

        // internal force against the elemental strain energy
        let du = 1e-11;
        for (e, k) in kernels.iter().enumerate() {
            let conn = mesh.elements[e];
            let ue = conn.map(|a| u[a]);
            let de = conn.map(|a| d[a]);
            let f = k.internal_force(&ue, &de, &p);
            let mut err: f64 = 0.0;
            for a in 0..4 {
                for c in 0..2 {
                    let mut up = ue;
                    let mut um = ue;
                    up[a][c] += du;
                    um[a][c] -= du;
                    let fd = (k.strain_energy(&up, &de, &p) - k.strain_energy(&um, &de, &p)) / (2.0 * du);
                    err = err.max((fd - f[a][c]).abs());
                }
            }
            let scale = inf_norm(f.iter().flatten().copied());
            worst[0] = worst[0].max(err / scale);
        }

        // phase residual and tangent against the patch energy
        let variant = if s % 2 == 0 { PhaseFieldVariant::At2 } else { PhaseFieldVariant::At1 };
        let mode = if s % 3 == 0 { PhaseSolveMode::Local } else { PhaseSolveMode::Patch };
        let mut q = PatchQuadrature::new(variant, p.gc, p.ell);
        q.assemble(&mesh, &kernels, 4, &u, &d, &p, mode);
        let de: [f64; 4] = std::array::from_fn(|_| rng.random_range(0.0..1.0));
        let r = q.residual(&de);
        let k = q.tangent(&de);
        let dd = 1e-6;
        let (mut er, mut ek) = (0f64, 0f64);
        for a in 0..4 {
            let mut dp = de;
            let mut dm = de;
            dp[a] += dd;
            dm[a] -= dd;
            let fd = (q.energy(&dp) - q.energy(&dm)) / (2.0 * dd);
            er = er.max((fd - r[a]).abs());
            let (rp, rm) = (q.residual(&dp), q.residual(&dm));
            for b in 0..4 {
                ek = ek.max(((rp[b] - rm[b]) / (2.0 * dd) - k[b][a]).abs());
            }
        }
        worst[1] = worst[1].max(er / inf_norm(r));
        worst[2] = worst[2].max(ek / inf_norm(k.iter().flatten().copied()));
    }
    verdict(
        worst.iter().all(|&w| w < 1e-5),
        format!(
            "{states} states; max relative error force {:.1e}, residual {:.1e}, tangent {:.1e}",
            worst[0], worst[1], worst[2]
        ),
    )
}

fn split_identities() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let p = SILICA_GLASS.params().unwrap();
    let (mut we, mut ws) = (0f64, 0f64);
    let n = 10_000;
    for i in 0..n {
        let scale = 10f64.powf(rng.random_range(-6.0..-1.0));
        let mut c: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0) * scale);
        // degenerate cases: equal eigenvalues and pure shear
        match i % 50 {
            0 => c = [c[0], c[0], 0.0],
            1 => c = [c[0], -c[0], c[2]],
            _ => {}
        }
        let eps = SymTensor2::new(c[0], c[1], c[2]);
        let split = spectral_split(&eps, p.lambda, p.mu);
        let psi = p.isotropic_energy(&eps);
        let sigma = p.isotropic_stress(&eps);
        we = we.max((split.psi_plus + split.psi_minus - psi).abs() / psi);
        let sum = split.sigma_plus.add(&split.sigma_minus);
        let diff = sum.add(&sigma.scale(-1.0));
        ws = ws.max(diff.norm() / sigma.norm());
    }
    verdict(
        we < 1e-10 && ws < 1e-10,
        format!("{n} strains; max relative error energy {we:.1e}, stress {ws:.1e}"),
    )
}

/// Minimizes the patch energy over `[lower, 1]^4` by grid search and projected gradient.
fn brute_force(q: &PatchQuadrature, lower: [f64; 4]) -> [f64; 4] {
    let m = 10;
    let mut best = (f64::INFINITY, lower);
    for idx in 0..(m + 1usize).pow(4) {
        let mut k = idx;
        let mut d = [0.0; 4];
        for a in 0..4 {
            d[a] = lower[a] + (1.0 - lower[a]) * (k % (m + 1)) as f64 / m as f64;
            k /= m + 1;
        }
        let e = q.energy(&d);
        if e < best.0 {
            best = (e, d);
        }
    }
    let mut d = best.1;
    // the energy is quadratic in d, so the tangent is constant
    let k = q.tangent(&d);
    let lip = k
        .iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    for _ in 0..500_000 {
        let r = q.residual(&d);
        let mut moved: f64 = 0.0;
        for a in 0..4 {
            let next = (d[a] - r[a] / lip).clamp(lower[a], 1.0);
            moved = moved.max((next - d[a]).abs());
            d[a] = next;
        }
        if moved < 1e-14 {
            break;
        }
    }
    d
}

fn complementarity() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let h = 1e-3;
    let settings = SolverSettings::default();
    let (mut violations, mut worst, mut interior) = (0usize, 0f64, 0usize);
    let n = 100;
    for s in 0..n {
        let mesh = jittered_grid(&mut rng, 3, h);
        let kernels: Vec<ElementKernel> = (0..9)
            .map(|e| ElementKernel::for_element(&mesh, e).unwrap())
            .collect();
        let p = MaterialParams::new(32e9, 0.2, 2450.0, 3.0, 2.0 * h).unwrap();
        let scale = 10f64.powf(rng.random_range(-4.5..-2.5));
        let u = random_displacement(&mut rng, &mesh, scale, h);
        let d: Vec<f64> = (0..mesh.num_nodes())
            .map(|_| match rng.random_range(0..10) {
                0..=2 => 0.0,
                3 => 1.0,
                _ => rng.random_range(0.0..0.9),
            })
            .collect();
        let variant = if s % 2 == 0 { PhaseFieldVariant::At2 } else { PhaseFieldVariant::At1 };
        let mut q = PatchQuadrature::new(variant, p.gc, p.ell);
        q.assemble(&mesh, &kernels, 4, &u, &d, &p, PhaseSolveMode::Patch);
        let lower = mesh.elements[4].map(|a| d[a]);
        let tol = settings.tolerance(p.gc, kernels[4].area, p.ell);
        let problem = BoundConstrainedProblem::new(&q, lower);
        let sol = match solve_element_phase(&problem, tol, settings.max_outer, settings.max_newton) {
            Ok(x) => x,
            Err(e) => return verdict(false, format!("problem {s}: solver failed: {e}")),
        };
        let r = q.residual(&sol);
        let ok = check_complementarity(&sol, &lower, &r, tol);
        violations += ok.iter().filter(|&&b| !b).count();
        violations += (0..4).filter(|&a| sol[a] < lower[a] || sol[a] > 1.0).count();
        interior += (0..4).filter(|&a| sol[a] > lower[a] && sol[a] < 1.0).count();
        let oracle = brute_force(&q, lower);
        worst = worst.max(inf_norm((0..4).map(|a| sol[a] - oracle[a])));
    }
    verdict(
        violations == 0 && worst < 5e-3,
        format!(
            "{n} problems, {interior} interior values; {violations} complementarity violations, \
             max deviation from brute force {worst:.1e}"
        ),
    )
}

fn causality() -> Verdict {
    let mut cfg = run_config("tension");
    cfg.model.fracture = false;
    let mut sim = build_simulation(&cfg).unwrap();
    let dt = sim.time_steps();
    let grading = dt.iter().copied().fold(0.0, f64::max) / dt.iter().copied().fold(f64::INFINITY, f64::min);
    let pops = 1_000_000u64;
    let mut last = f64::NEG_INFINITY;
    let mut backwards = 0u64;
    let mut done = 0u64;
    while done < pops {
        let Some(rec) = sim.step().unwrap() else { break };
        if rec.time < last {
            backwards += 1;
        }
        last = rec.time;
        done += 1;
    }
    verdict(
        done == pops && backwards == 0,
        format!("{done} pops on a mesh with dt_max/dt_min = {grading:.1}; {backwards} decreases"),
    )
}

fn synchronous_limit() -> Verdict {
    // binary-exact coordinates make the four elements bitwise identical
    let nodes: Vec<[f64; 2]> = (0..3)
        .flat_map(|j| (0..3).map(move |i| [0.25 * i as f64, 0.25 * j as f64]))
        .collect();
    let id = |i: usize, j: usize| 3 * j + i;
    let elements: Vec<[usize; 4]> = (0..2)
        .flat_map(|j| (0..2).map(move |i| [id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]))
        .collect();
    let mesh = Mesh::new(nodes.clone(), elements.clone(), &[]).unwrap();
    let params = SILICA_GLASS.params().unwrap();
    let traction = [1e6, 2e5];
    let load = LoadCase {
        traction: vec![TractionLoad {
            on: BoundarySelector::Box([0.5, 0.5, 0.0, 0.5]),
            value: traction,
        }],
        ..LoadCase::default()
    };
    let settings = EngineSettings {
        fracture: false,
        tf: 1.0,
        ..EngineSettings::default()
    };
    let mut sim = Simulation::new(mesh.clone(), params, settings, &load).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let v0: Vec<[f64; 2]> = (0..9)
        .map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
        .collect();
    sim.set_initial_velocity(&v0).unwrap();

    let dt = sim.time_steps()[0];
    if sim.time_steps().iter().any(|&x| x != dt) {
        return verdict(false, format!("element steps differ: {:?}", sim.time_steps()));
    }

    // synchronous drift-kick scheme on the same mesh
    let kernels: Vec<ElementKernel> = (0..4)
        .map(|e| ElementKernel::for_element(&mesh, e).unwrap())
        .collect();
    let mass = vec![params.density * 0.0625 / 4.0; 4];
    let mut m = vec![0.0; 9];
    for conn in &elements {
        for (l, &a) in conn.iter().enumerate() {
            m[a] += mass[l];
        }
    }
    let mut fext = vec![[0.0; 2]; 9];
    for (a, b) in [(2usize, 5usize), (5, 8)] {
        let f = edge_traction_force(nodes[a], nodes[b], traction);
        for c in 0..2 {
            fext[a][c] += f[0][c];
            fext[b][c] += f[1][c];
        }
    }
    let mut u = vec![[0.0; 2]; 9];
    let mut p: Vec<[f64; 2]> = (0..9).map(|a| [m[a] * v0[a][0], m[a] * v0[a][1]]).collect();
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        for a in 0..9 {
            for c in 0..2 {
                u[a][c] += dt * p[a][c] / m[a];
            }
        }
        let mut f = fext.clone();
        for (e, conn) in elements.iter().enumerate() {
            let fe = kernels[e].internal_force(&conn.map(|a| u[a]), &[0.0; 4], &params);
            for (l, &a) in conn.iter().enumerate() {
                f[a][0] -= fe[l][0];
                f[a][1] -= fe[l][1];
            }
        }
        for a in 0..9 {
            for c in 0..2 {
                p[a][c] += dt * f[a][c];
            }
        }
        if sim.advance(4).unwrap() != 4 {
            return verdict(false, "asynchronous run stopped early");
        }
        let ua = sim.displacement();
        let pa = sim.momentum();
        let du = inf_norm((0..9).flat_map(|a| [ua[a][0] - u[a][0], ua[a][1] - u[a][1]]));
        let dp = inf_norm((0..9).flat_map(|a| [pa[a][0] - p[a][0], pa[a][1] - p[a][1]]));
        worst = worst
            .max(du / inf_norm(u.iter().flatten().copied()))
            .max(dp / inf_norm(p.iter().flatten().copied()));
    }
    verdict(
        worst < 1e-10,
        format!("100 steps of dt = {dt:.3e} s; max relative deviation {worst:.1e}"),
    )
}

/// T + V of an unloaded patch after a shear-wave kick.
///
/// Nodes sit at different times between kicks, so displacements are first drifted
/// to the common time with their current momenta. The wave is long enough that
/// omega*dt stays below 0.1; the drift-kick stagger between u and p alone swings
/// T + V by about omega*dt/2.
fn elastic_energy() -> Verdict {
    let spec = GradedRectSpec {
        x: [0.0, 0.02],
        y: [0.0, 0.02],
        cells: [20, 20],
        refine: vec![RefineBox {
            x: [0.005, 0.015],
            y: [0.005, 0.015],
            level: 1,
        }],
        notches: Vec::new(),
    };
    let mesh = generate_graded_rect(&spec).unwrap();
    let params = SILICA_GLASS.params().unwrap();
    let settings = EngineSettings {
        fracture: false,
        tf: 1.0,
        ..EngineSettings::default()
    };
    let mut sim = Simulation::new(mesh.clone(), params, settings, &LoadCase::default()).unwrap();
    let tau = std::f64::consts::TAU;
    let v: Vec<[f64; 2]> = mesh.nodes.iter().map(|x| [0.0, (tau * x[0] / 0.02).sin()]).collect();
    sim.set_initial_velocity(&v).unwrap();
    let kernels: Vec<ElementKernel> = (0..mesh.num_elements())
        .map(|e| ElementKernel::for_element(&mesh, e).unwrap())
        .collect();
    let total = |s: &Simulation| {
        let (t, m) = (s.time(), s.nodal_mass());
        let u: Vec<[f64; 2]> = (0..mesh.num_nodes())
            .map(|i| {
                let h = (t - s.node_times()[i]) / m[i];
                let (u, p) = (s.displacement()[i], s.momentum()[i]);
                [u[0] + h * p[0], u[1] + h * p[1]]
            })
            .collect();
        let strain: f64 = mesh
            .elements
            .iter()
            .zip(&kernels)
            .map(|(conn, k)| k.strain_energy(&conn.map(|i| u[i]), &[0.0; 4], &params))
            .sum();
        s.energies().kinetic + strain
    };
    let mut series = vec![total(&sim)];
    let mut updates = 0;
    while updates < 1_000_000 {
        updates += sim.advance(5000).unwrap();
        series.push(total(&sim));
    }
    let mean = series.iter().sum::<f64>() / series.len() as f64;
    let dev = inf_norm(series.iter().map(|e| e - mean)) / mean;
    let half = series.len() / 2;
    let first = series[..half].iter().sum::<f64>() / half as f64;
    let second = series[half..].iter().sum::<f64>() / (series.len() - half) as f64;
    verdict(
        dev < 0.05,
        format!(
            "{updates} updates on {} elements over {:.1} us; max deviation of T+V from its mean {:.2}%, \
             mean drift between halves {:.2}%",
            mesh.num_elements(),
            1e6 * sim.time(),
            100.0 * dev,
            100.0 * (second - first) / first
        ),
    )
}

// ---------------------------------------------------------------------------
// benchmark criteria

fn irreversibility(runs: &mut Runs) -> Verdict {
    let o = runs.get("tension");
    verdict(
        o.d_out_of_bounds == 0 && o.d_decreases == 0 && o.gamma_drops == 0,
        format!(
            "{} samples; {} nodal values outside [0, 1], {} nodal decreases, {} drops of Gamma \
             (largest {:.1e} relative)",
            o.rows.len(),
            o.d_out_of_bounds,
            o.d_decreases,
            o.gamma_drops,
            o.worst_gamma_drop
        ),
    )
}

fn tension_branching(runs: &mut Runs) -> Verdict {
    let o = runs.get("tension");
    let rep = o.branching();
    let v_r = o.rayleigh();
    let tip_x = o.tips.iter().rev().find_map(|s| s.tip).map_or(0.0, |t| t.position[0]);
    let Some(xb) = rep.branch_x else {
        return verdict(false, format!("no branching; final tip x = {:.1} mm", 1e3 * tip_x));
    };
    let angle = rep.upper_angle_deg.unwrap_or(f64::NAN);
    let pre = window_speeds(&o.tips, 2e-6)
        .into_iter()
        .filter(|w| w.1 < xb)
        .map(|w| w.2)
        .fold(0.0, f64::max);
    let ok = tip_x > xb && (angle - 27.5).abs() <= 7.0 && pre < 0.6 * v_r;
    verdict(
        ok,
        format!(
            "branches at x = {:.1} mm, upper angle {angle:.1} deg (lower {:.1}, mean of the arms {:.1}), \
             max pre-branch tip speed {:.2} v_R, {:.0} s",
            1e3 * xb,
            rep.lower_angle_deg.unwrap_or(f64::NAN),
            0.5 * (angle + rep.lower_angle_deg.unwrap_or(f64::NAN)),
            pre / v_r,
            o.elapsed.as_secs_f64()
        ),
    )
}

fn energy_balance(runs: &mut Runs) -> Verdict {
    let o = runs.get("tension");
    let e = o.last().energy;
    let frac = e.free.abs() / e.external_work;
    verdict(
        frac <= 0.03,
        format!(
            "at t = {:.1} us: |H| / W_ext = {:.2}%, T / W_ext = {:.0}%",
            1e6 * e.t,
            100.0 * frac,
            100.0 * e.kinetic / e.external_work
        ),
    )
}

fn compact_tension(runs: &mut Runs) -> Verdict {
    let low = runs.get("ct-0.5");
    let low_rep = low.branching();
    let low_len = low.last().l_crack;
    let low_ell = low.ell();
    let low_ok = low_rep.branch_x.is_none() && low_len > 2.0 * low_ell;
    let mid_run = runs.get("ct-3");
    // the stress wave bounces between the crack and the top and bottom edges
    let period = {
        let t: Vec<f64> = mid_run.rows.iter().map(|r| r.energy.t).collect();
        let y: Vec<f64> = mid_run.rows.iter().map(|r| r.energy.strain).collect();
        oscillation_period(&t, &y)
    };
    let mid = mid_run.branching();
    let high = runs.get("ct-6").branching();
    let order_ok = matches!((mid.branch_x, high.branch_x), (Some(a), Some(b)) if b < a);
    let period_ok = period.is_some_and(|p| (p - 6.8e-6).abs() <= 0.15 * 6.8e-6);
    let mm = |x: Option<f64>| x.map_or("none".to_string(), |v| format!("{:.1} mm", 1e3 * v));
    verdict(
        low_ok && order_ok && period_ok,
        format!(
            "0.5 MPa: crack {:.1} mm, branch {}; 3 MPa branch {}; 6 MPa branch {}; \
             3 MPa strain-energy period {}",
            1e3 * low_len,
            mm(low_rep.branch_x),
            mm(mid.branch_x),
            mm(high.branch_x),
            period.map_or("none".to_string(), |p| format!("{:.2} us", 1e6 * p))
        ),
    )
}

fn kalthoff(runs: &mut Runs) -> Verdict {
    let o = runs.get("kalthoff");
    let tip = o.cfg.output.notch_tip.unwrap();
    let ell = o.ell();
    let v_r = o.rayleigh();
    let angle = crack_direction_angle(&o.mesh, &o.d, ISO, tip, 2.0 * ell, 0.01);

    // plateau: the fastest 10 us average the tip sustains; the crack slows again near the
    // top edge, which the late-phase speed reports
    let lens: Vec<(f64, f64)> = o.tips.iter().map(|s| (s.t, s.length)).collect();
    let length_at = |t: f64| {
        let k = lens.partition_point(|x| x.0 < t);
        match (k.checked_sub(1).map(|j| lens[j]), lens.get(k)) {
            (Some(a), Some(b)) if b.0 > a.0 => a.1 + (t - a.0) / (b.0 - a.0) * (b.1 - a.1),
            (_, Some(b)) => b.1,
            (Some(a), None) => a.1,
            (None, None) => 0.0,
        }
    };
    let span = 10e-6;
    let plateau = lens
        .iter()
        .filter(|x| x.0 + span <= o.cfg.time.tf)
        .map(|x| (length_at(x.0 + span) - length_at(x.0)) / span)
        .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))));
    let tf = o.cfg.time.tf;
    let late = (length_at(tf) - length_at(tf - span)) / span;
    // crack energy of elements farther than 4 ell from the crack grown out of the notch
    let away = {
        let tracker = IsoCurveTracker::new(&o.mesh, ISO, tip, 4.0 * ell);
        let main: Vec<[f64; 2]> = tracker
            .distances(&o.mesh, &o.d)
            .iter()
            .zip(&o.mesh.nodes)
            .filter_map(|(r, x)| r.map(|_| *x))
            .collect();
        let (gc, ell, variant) = (o.cfg.material.gc, o.cfg.material.ell, o.cfg.model.variant);
        let mut split = [0.0; 2];
        for (e, conn) in o.mesh.elements.iter().enumerate() {
            let k = ElementKernel::for_element(&o.mesh, e).unwrap();
            let g = k.crack_energy(&conn.map(|a| o.d[a]), variant, gc, ell);
            let c = conn.iter().fold([0.0; 2], |s, &a| {
                [s[0] + 0.25 * o.mesh.nodes[a][0], s[1] + 0.25 * o.mesh.nodes[a][1]]
            });
            let near = main.iter().any(|p| (p[0] - c[0]).hypot(p[1] - c[1]) <= 4.0 * ell);
            split[usize::from(!near)] += g;
        }
        format!(
            " ({:.0}% of Gamma lies away from that crack; the rest gives {:.2})",
            100.0 * split[1] / (split[0] + split[1]),
            split[0] / (gc * o.last().l_crack)
        )
    };
    let e = o.last();
    let gamma_ratio = e.energy.crack / (o.cfg.material.gc * e.l_crack);
    let ok = angle.is_some_and(|a| (a - 67.0).abs() <= 8.0)
        && plateau.is_some_and(|v| (v / v_r - 0.6).abs() <= 0.15)
        && (1.3..=2.5).contains(&gamma_ratio);
    verdict(
        ok,
        format!(
            "initiation angle {} deg, plateau tip speed {} v_R (last 10 us {:.2} v_R), \
             Gamma / (gc l) = {gamma_ratio:.2} with l = {:.1} mm{}",
            angle.map_or("none".to_string(), |a| format!("{a:.1}")),
            plateau.map_or("none".to_string(), |v| format!("{:.2}", v / v_r)),
            late / v_r,
            1e3 * e.l_crack,
            away
        ),
    )
}

fn efficiency(runs: &mut Runs) -> Verdict {
    // everything the other criteria ran, plus the tension mesh itself
    runs.get("tension");
    let mut worst = (0.0, "");
    let mut lines = Vec::new();
    for &k in &runs.order {
        if let Ok(o) = &runs.done[k] {
            let r = o.stats.ratio();
            if r > worst.0 {
                worst = (r, k);
            }
            lines.push(format!("{k} {:.1}%", 100.0 * r));
        }
    }
    let tension = runs.done["tension"].as_ref().unwrap().stats.ratio();
    verdict(
        worst.0 <= 0.5 && (tension - 0.31).abs() <= 0.10,
        format!("tension {:.1}%; all runs: {}", 100.0 * tension, lines.join(", ")),
    )
}

fn variant_parity(runs: &mut Runs) -> Verdict {
    let mut ok = true;
    let mut notes = Vec::new();
    for (a, b) in [("tension", "tension-at1"), ("ct-3", "ct-3-at1")] {
        let (ra, ta) = {
            let o = runs.get(a);
            (o.branching(), o.elapsed.as_secs_f64())
        };
        let (rb, tb) = {
            let o = runs.get(b);
            (o.branching(), o.elapsed.as_secs_f64())
        };
        let both = ra.branch_x.is_some() && rb.branch_x.is_some();
        let da = match (ra.upper_angle_deg, rb.upper_angle_deg) {
            (Some(x), Some(y)) => (x - y).abs(),
            _ => f64::INFINITY,
        };
        let time_ratio = ta.max(tb) / ta.min(tb);
        ok &= both && da <= 10.0 && time_ratio <= 1.5;
        notes.push(format!(
            "{a}: AT2 {:.1} deg, AT1 {:.1} deg, runtime ratio {time_ratio:.2}",
            ra.upper_angle_deg.unwrap_or(f64::NAN),
            rb.upper_angle_deg.unwrap_or(f64::NAN)
        ));
    }
    let (aa, ta) = {
        let o = runs.get("kalthoff");
        let tip = o.cfg.output.notch_tip.unwrap();
        (
            crack_direction_angle(&o.mesh, &o.d, ISO, tip, 2.0 * o.ell(), 0.01),
            o.elapsed.as_secs_f64(),
        )
    };
    let (ab, tb) = {
        let o = runs.get("kalthoff-at1");
        let tip = o.cfg.output.notch_tip.unwrap();
        (
            crack_direction_angle(&o.mesh, &o.d, ISO, tip, 2.0 * o.ell(), 0.01),
            o.elapsed.as_secs_f64(),
        )
    };
    let time_ratio = ta.max(tb) / ta.min(tb);
    ok &= time_ratio <= 1.5;
    notes.push(format!(
        "kalthoff: AT2 {} deg, AT1 {} deg, runtime ratio {time_ratio:.2}",
        aa.map_or("none".into(), |a| format!("{a:.1}")),
        ab.map_or("none".into(), |a| format!("{a:.1}"))
    ));
    verdict(ok, notes.join("; "))
}

fn local_mode(runs: &mut Runs) -> Verdict {
    let patch = runs.get("tension").damaged_area(0.5);
    let local = runs.get("tension-local").damaged_area(0.5);
    verdict(
        local >= 2.0 * patch,
        format!(
            "area of d >= 0.5: patch {:.1} mm^2, element-local {:.1} mm^2, ratio {:.2}",
            1e6 * patch,
            1e6 * local,
            local / patch
        ),
    )
}

fn main() -> ExitCode {
    let started = Instant::now();
    let mut runs = Runs::default();
    type Check = fn(&mut Runs) -> Verdict;
    let criteria: [(u32, &str, Check); 14] = [
        (1, "gradient consistency", |_| gradient_consistency()),
        (2, "split identities", |_| split_identities()),
        (3, "complementarity", |_| complementarity()),
        (4, "irreversibility and bounds", irreversibility),
        (5, "causality", |_| causality()),
        (6, "synchronous limit", |_| synchronous_limit()),
        (7, "elastic energy", |_| elastic_energy()),
        (8, "boundary tension branching", tension_branching),
        (9, "energy balance", energy_balance),
        (10, "compact tension", compact_tension),
        (11, "kalthoff", kalthoff),
        (12, "asynchronous efficiency", efficiency),
        (13, "AT1/AT2 parity", variant_parity),
        (14, "element-local phase solve", local_mode),
    ];
    let mut failed = Vec::new();
    for (n, title, check) in criteria {
        let t = Instant::now();
        let v = catch_unwind(AssertUnwindSafe(|| check(&mut runs))).unwrap_or_else(|payload| {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            verdict(false, format!("panicked: {msg}"))
        });
        if !v.pass {
            failed.push(n);
        }
        println!(
            "{} {n:>2} {title}: {} [{:.1} s]",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} passed, {} failed {failed:?} in {:.0} s",
        14 - failed.len(),
        failed.len(),
        started.elapsed().as_secs_f64()
    );
    // property checks (1-7) always gate; benchmark reproductions only with ACCEPTANCE_STRICT
    let strict = std::env::var_os("ACCEPTANCE_STRICT").is_some_and(|v| v != "0");
    if failed.iter().any(|&n| strict || n <= 7) {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
