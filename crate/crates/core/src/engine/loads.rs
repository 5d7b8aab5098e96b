use serde::{Deserialize, Serialize};

use crate::element::{edge_traction_force, ElementKernel};
use crate::error::EngineError;
use crate::mesh::{select, BoundarySelector, Mesh};

/// Constant traction (Pa) on the selected boundary edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TractionLoad {
    pub on: BoundarySelector,
    pub value: [f64; 2],
}

/// Prescribed velocity (m/s) on the nodes of the selected edges. Only the components
/// with `mask` set are constrained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VelocityBc {
    pub on: BoundarySelector,
    pub velocity: [f64; 2],
    #[serde(default = "both")]
    pub mask: [bool; 2],
}

fn both() -> [bool; 2] {
    [true, true]
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadCase {
    #[serde(default)]
    pub traction: Vec<TractionLoad>,
    #[serde(default)]
    pub velocity: Vec<VelocityBc>,
    /// Body force density (N/m^3).
    #[serde(default)]
    pub body: [f64; 2],
    /// Uniform initial velocity of the unconstrained components (m/s).
    #[serde(default)]
    pub initial_velocity: [f64; 2],
}

/// Per-element constant external forces and per-node velocity constraints.
#[derive(Debug, Clone)]
pub(crate) struct ResolvedLoads {
    pub element_force: Vec<Option<[[f64; 2]; 4]>>,
    pub node_force: Vec<[f64; 2]>,
    pub constraint: Vec<[Option<f64>; 2]>,
}

impl ResolvedLoads {
    pub fn resolve(
        mesh: &Mesh,
        kernels: &[ElementKernel],
        load: &LoadCase,
    ) -> Result<Self, EngineError> {
        let mut element_force = vec![None; mesh.num_elements()];
        let mut add = |e: usize, local: usize, f: [f64; 2]| {
            let slot = element_force[e].get_or_insert([[0.0; 2]; 4]);
            slot[local][0] += f[0];
            slot[local][1] += f[1];
        };
        for t in &load.traction {
            if t.value.iter().any(|v| !v.is_finite()) {
                return Err(EngineError::Config("non-finite traction".into()));
            }
            let sel = select(mesh, &t.on);
            for &i in &sel.edges {
                let edge = &mesh.boundary_edges[i];
                let [a, b] = mesh.edge_nodes(edge);
                let f = edge_traction_force(mesh.nodes[a], mesh.nodes[b], t.value);
                add(edge.element, edge.local, f[0]);
                add(edge.element, (edge.local + 1) % 4, f[1]);
            }
        }
        if load.body != [0.0, 0.0] {
            for (e, k) in kernels.iter().enumerate() {
                let f = k.body_force(load.body);
                for (local, fl) in f.iter().enumerate() {
                    add(e, local, *fl);
                }
            }
        }

        let mut node_force = vec![[0.0; 2]; mesh.num_nodes()];
        for (e, f) in element_force.iter().enumerate() {
            if let Some(f) = f {
                for (local, &a) in mesh.elements[e].iter().enumerate() {
                    node_force[a][0] += f[local][0];
                    node_force[a][1] += f[local][1];
                }
            }
        }

        let mut constraint = vec![[None; 2]; mesh.num_nodes()];
        for bc in &load.velocity {
            let sel = select(mesh, &bc.on);
            for &a in &sel.nodes {
                for c in 0..2 {
                    if !bc.mask[c] {
                        continue;
                    }
                    match constraint[a][c] {
                        Some(v) if v != bc.velocity[c] => {
                            return Err(EngineError::Config(format!(
                                "node {a} has conflicting prescribed velocities"
                            )))
                        }
                        _ => constraint[a][c] = Some(bc.velocity[c]),
                    }
                }
            }
        }
        Ok(Self {
            element_force,
            node_force,
            constraint,
        })
    }
}
