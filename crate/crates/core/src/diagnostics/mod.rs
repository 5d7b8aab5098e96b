//! Energy bookkeeping, crack-tip kinematics and update statistics.

mod branching;
mod crack;

pub use branching::{
    analyze_branching, crack_direction_angle, oscillation_period, slice_clusters, BranchReport,
    SliceCluster,
};
pub use crack::{crack_region, CrackTip, IsoCurveTracker, IsoSample};

use serde::Serialize;

use crate::element::ElementKernel;
use crate::error::DiagnosticsError;
use crate::material::{MaterialParams, PhaseFieldVariant};
use crate::mesh::Mesh;

/// Energies at one sampling instant (J per unit thickness).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct EnergySample {
    pub t: f64,
    pub kinetic: f64,
    pub strain: f64,
    pub crack: f64,
    pub external_work: f64,
    /// `T + U + Gamma - W_ext`.
    pub free: f64,
}

impl EnergySample {
    pub fn new(t: f64, kinetic: f64, strain: f64, crack: f64, external_work: f64) -> Self {
        Self {
            t,
            kinetic,
            strain,
            crack,
            external_work,
            free: kinetic + strain + crack - external_work,
        }
    }
}

/// `sum_a |p_a|^2 / (2 M_a)`.
pub fn kinetic_energy(p: &[[f64; 2]], mass: &[f64]) -> f64 {
    p.iter()
        .zip(mass)
        .map(|(p, &m)| 0.5 * (p[0] * p[0] + p[1] * p[1]) / m)
        .sum()
}

pub fn strain_energy(
    mesh: &Mesh,
    kernels: &[ElementKernel],
    u: &[[f64; 2]],
    d: &[f64],
    params: &MaterialParams,
) -> f64 {
    mesh.elements
        .iter()
        .zip(kernels)
        .map(|(conn, k)| k.strain_energy(&conn.map(|a| u[a]), &conn.map(|a| d[a]), params))
        .sum()
}

pub fn crack_energy(
    mesh: &Mesh,
    kernels: &[ElementKernel],
    d: &[f64],
    variant: PhaseFieldVariant,
    gc: f64,
    ell: f64,
) -> f64 {
    mesh.elements
        .iter()
        .zip(kernels)
        .map(|(conn, k)| k.crack_energy(&conn.map(|a| d[a]), variant, gc, ell))
        .sum()
}

/// `(t_n, (Gamma_n - Gamma_{n-1}) / (gc (t_n - t_{n-1})))` for consecutive samples.
pub fn tip_velocity_energy_rate(
    samples: &[EnergySample],
    gc: f64,
) -> Result<Vec<(f64, f64)>, DiagnosticsError> {
    if samples.len() < 2 {
        return Err(DiagnosticsError::TooFewSamples {
            needed: 2,
            got: samples.len(),
        });
    }
    Ok(samples
        .windows(2)
        .map(|w| (w[1].t, energy_rate_velocity(&w[0], &w[1], gc)))
        .collect())
}

/// Energy-rate tip speed between two samples (0 when no time elapsed).
pub fn energy_rate_velocity(prev: &EnergySample, cur: &EnergySample, gc: f64) -> f64 {
    let dt = cur.t - prev.t;
    if dt > 0.0 {
        (cur.crack - prev.crack) / (gc * dt)
    } else {
        0.0
    }
}

/// Sharp-crack energy `gc * l`.
pub fn sharp_crack_energy(gc: f64, length: f64) -> f64 {
    gc * length
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UpdateStats {
    pub counts: Vec<u64>,
    pub min: u64,
    pub max: u64,
    pub median: u64,
    pub total: u64,
    /// Updates a synchronous scheme with the global minimum step would need.
    pub synchronous_estimate: u64,
}

impl UpdateStats {
    pub fn ratio(&self) -> f64 {
        self.total as f64 / self.synchronous_estimate as f64
    }
}

/// Summary of per-element update counts. The synchronous estimate is
/// `n_elements * ceil((tf - t0) / min dt)`.
pub fn update_statistics(counts: &[u64], dt: &[f64], t0: f64, tf: f64) -> UpdateStats {
    let mut sorted = counts.to_vec();
    sorted.sort_unstable();
    let n = sorted.len();
    let median = match n {
        0 => 0,
        _ if n % 2 == 1 => sorted[n / 2],
        _ => (sorted[n / 2 - 1] + sorted[n / 2]) / 2,
    };
    let min_dt = dt.iter().copied().fold(f64::INFINITY, f64::min);
    let steps = if tf > t0 && min_dt.is_finite() {
        ((tf - t0) / min_dt).ceil() as u64
    } else {
        0
    };
    UpdateStats {
        min: sorted.first().copied().unwrap_or(0),
        max: sorted.last().copied().unwrap_or(0),
        median,
        total: counts.iter().sum(),
        synchronous_estimate: n as u64 * steps,
        counts: counts.to_vec(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::tests::grid;

    #[test]
    fn kinetic_cases() {
        assert_eq!(kinetic_energy(&[[0.0, 0.0]], &[3.0]), 0.0);
        assert_eq!(kinetic_energy(&[[2.0, 0.0]], &[2.0]), 1.0);
        // uniform velocity 3 on masses 1 and 4
        let k = kinetic_energy(&[[3.0, 0.0], [0.0, 12.0]], &[1.0, 4.0]);
        assert!((k - 0.5 * 5.0 * 9.0).abs() < 1e-12);
    }

    #[test]
    fn crack_energy_cases() {
        let mesh = grid(4, 2, 2.0, 1.0);
        let kernels: Vec<_> = (0..mesh.num_elements())
            .map(|e| ElementKernel::for_element(&mesh, e).unwrap())
            .collect();
        let zero = vec![0.0; mesh.num_nodes()];
        let one = vec![1.0; mesh.num_nodes()];
        let (gc, ell) = (3.0, 0.1);
        assert_eq!(crack_energy(&mesh, &kernels, &zero, PhaseFieldVariant::At2, gc, ell), 0.0);
        let g = crack_energy(&mesh, &kernels, &one, PhaseFieldVariant::At2, gc, ell);
        assert!((g - gc * 2.0 / (2.0 * ell)).abs() < 1e-12);
    }

    #[test]
    fn optimal_profile_energy_per_length() {
        // d = exp(-|x| / ell) across a strip of unit height
        let ell = 0.05;
        let n = 800;
        let half = 1.0;
        let mut nodes = Vec::new();
        for j in 0..=1 {
            for i in 0..=n {
                nodes.push([-half + 2.0 * half * i as f64 / n as f64, j as f64]);
            }
        }
        let elements: Vec<[usize; 4]> = (0..n).map(|i| [i, i + 1, n + 2 + i, n + 1 + i]).collect();
        let mesh = Mesh::new(nodes, elements, &[]).unwrap();
        let kernels: Vec<_> = (0..mesh.num_elements())
            .map(|e| ElementKernel::for_element(&mesh, e).unwrap())
            .collect();
        let d: Vec<f64> = mesh.nodes.iter().map(|x| (-x[0].abs() / ell).exp()).collect();
        let g = crack_energy(&mesh, &kernels, &d, PhaseFieldVariant::At2, 2.0, ell);
        assert!((g - 2.0).abs() < 0.01 * 2.0, "{g}");
    }

    #[test]
    fn energy_rate() {
        let s = |t: f64, c: f64| EnergySample::new(t, 0.0, 0.0, c, 0.0);
        assert!(tip_velocity_energy_rate(&[s(0.0, 1.0)], 3.0).is_err());
        let v = tip_velocity_energy_rate(&[s(0.0, 1.0), s(1.0, 1.0)], 3.0).unwrap();
        assert_eq!(v, vec![(1.0, 0.0)]);
        let v = tip_velocity_energy_rate(&[s(0.0, 0.0), s(2e-6, 3.0 * 0.004)], 3.0).unwrap();
        assert!((v[0].1 - 2000.0).abs() < 1e-9);
    }

    #[test]
    fn sharp_energy() {
        assert!((sharp_crack_energy(2.213e4, 0.083) - 1836.79).abs() < 1e-9);
        assert_eq!(sharp_crack_energy(5.0, 0.0), 0.0);
        assert_eq!(sharp_crack_energy(5.0, 2.0), 2.0 * sharp_crack_energy(5.0, 1.0));
    }

    #[test]
    fn stats() {
        let s = update_statistics(&[7], &[1.0], 0.0, 7.0);
        assert_eq!((s.min, s.max, s.median, s.total), (7, 7, 7, 7));
        assert_eq!(s.synchronous_estimate, 7);
        // two elements with a 2:1 step ratio: 4 + 8 updates vs 2 * 8
        let s = update_statistics(&[4, 8], &[2.0, 1.0], 0.0, 8.0);
        assert_eq!(s.total, 12);
        assert_eq!(s.synchronous_estimate, 16);
        assert!((s.ratio() - 0.75).abs() < 1e-12);
        assert_eq!(s.median, 6);
    }
}
