//! Reduced-space active set solve of the four phase values of one element under
//! `lower <= d <= upper`.

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::element::PatchQuadrature;
use crate::error::SolverError;

/// Residual and tangent of a four-unknown phase problem.
pub trait PhaseObjective {
    fn residual(&self, d: &[f64; 4]) -> [f64; 4];
    fn tangent(&self, d: &[f64; 4]) -> [[f64; 4]; 4];
}

impl PhaseObjective for PatchQuadrature {
    fn residual(&self, d: &[f64; 4]) -> [f64; 4] {
        PatchQuadrature::residual(self, d)
    }

    fn tangent(&self, d: &[f64; 4]) -> [[f64; 4]; 4] {
        PatchQuadrature::tangent(self, d)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BoundConstrainedProblem<'a, O: PhaseObjective> {
    pub objective: &'a O,
    /// Irreversibility floor: the freshest nodal values.
    pub lower: [f64; 4],
    pub upper: [f64; 4],
}

impl<'a, O: PhaseObjective> BoundConstrainedProblem<'a, O> {
    pub fn new(objective: &'a O, lower: [f64; 4]) -> Self {
        Self {
            objective,
            lower,
            upper: [1.0; 4],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSettings {
    /// Residual tolerance as a multiple of `gc * area(e) / ell`.
    pub rel_tol: f64,
    pub max_outer: usize,
    pub max_newton: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            max_outer: 20,
            max_newton: 25,
        }
    }
}

impl SolverSettings {
    pub fn tolerance(&self, gc: f64, area: f64, ell: f64) -> f64 {
        self.rel_tol * gc * area / ell
    }
}

fn norm(v: &[f64; 4], mask: &[bool; 4]) -> f64 {
    (0..4)
        .filter(|&a| mask[a])
        .map(|a| v[a] * v[a])
        .sum::<f64>()
        .sqrt()
}

/// Newton increment on the inactive set; active rows are pinned.
fn reduced_step(k: &[[f64; 4]; 4], r: &[f64; 4], inactive: &[bool; 4]) -> Result<[f64; 4], SolverError> {
    let m = Matrix4::from_fn(|i, j| {
        if inactive[i] && inactive[j] {
            k[i][j]
        } else if i == j {
            1.0
        } else {
            0.0
        }
    });
    let rhs = Vector4::from_fn(|i, _| if inactive[i] { -r[i] } else { 0.0 });
    let x = match m.cholesky() {
        Some(c) => c.solve(&rhs),
        None => m.lu().solve(&rhs).ok_or(SolverError::Singular)?,
    };
    if x.iter().any(|v| !v.is_finite()) {
        return Err(SolverError::Singular);
    }
    Ok([x[0], x[1], x[2], x[3]])
}

/// Minimizes the element's phase problem subject to its bounds.
///
/// Starts from `lower`. Each sweep computes the tangent once, runs Newton on the
/// inactive set, pins out-of-bound values, and frees pinned nodes whose residual sign
/// violates complementarity. Returns once no node is freed and the inactive residual
/// is below `tol`.
pub fn solve_element_phase<O: PhaseObjective>(
    problem: &BoundConstrainedProblem<'_, O>,
    tol: f64,
    max_outer: usize,
    max_newton: usize,
) -> Result<[f64; 4], SolverError> {
    let lo = problem.lower;
    let hi = problem.upper;
    let obj = problem.objective;
    let mut d = lo;
    let mut r = obj.residual(&d);
    if norm(&r, &[true; 4]) < tol {
        return Ok(d);
    }

    let mut active = [false; 4];
    for a in 0..4 {
        active[a] = (d[a] <= lo[a] && r[a] > 0.0) || (d[a] >= hi[a] && r[a] < 0.0) || lo[a] >= hi[a];
    }

    for _ in 0..max_outer {
        let inactive = active.map(|x| !x);
        let k = obj.tangent(&d);
        for _ in 0..max_newton {
            if norm(&r, &inactive) <= tol {
                break;
            }
            let step = reduced_step(&k, &r, &inactive)?;
            for a in 0..4 {
                if inactive[a] {
                    d[a] += step[a];
                }
            }
            r = obj.residual(&d);
        }

        let mut changed = false;
        for a in 0..4 {
            if active[a] {
                continue;
            }
            if d[a] > hi[a] {
                d[a] = hi[a];
                active[a] = true;
                changed = true;
            } else if d[a] < lo[a] {
                d[a] = lo[a];
                active[a] = true;
                changed = true;
            }
        }
        r = obj.residual(&d);

        for a in 0..4 {
            if !active[a] || lo[a] >= hi[a] {
                continue;
            }
            let violates = if d[a] <= lo[a] {
                r[a] < -tol
            } else {
                r[a] > tol
            };
            if violates {
                active[a] = false;
                changed = true;
            }
        }

        let inactive = active.map(|x| !x);
        if !changed && norm(&r, &inactive) <= tol {
            return Ok(d);
        }
    }
    Err(SolverError::NotConverged {
        outer: max_outer,
        last: d,
        residual: r,
    })
}

/// Per-node verdict of the mixed complementarity conditions.
pub fn check_complementarity(d: &[f64], lower: &[f64], r: &[f64], tol: f64) -> Vec<bool> {
    d.iter()
        .zip(lower)
        .zip(r)
        .map(|((&d, &lo), &r)| {
            let at_lower = d == lo && r >= -tol;
            let interior = d >= lo && d <= 1.0 && r.abs() <= tol;
            let at_upper = d == 1.0 && r <= tol;
            at_lower || interior || at_upper
        })
        .collect()
}
