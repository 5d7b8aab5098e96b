//! Quadrilateral meshes and the topology maps the integrator needs.

mod generate;
mod io;

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use generate::{generate_graded_rect, GradedRectSpec, Notch, RefineBox};
pub use io::{parse_gmsh, parse_native, write_native};

use crate::element::{shape_eval, GAUSS_2};
use crate::error::MeshError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum MeshFormat {
    #[default]
    NativeText,
    Msh,
}

impl std::str::FromStr for MeshFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "native" | "native-text" | "txt" => Ok(MeshFormat::NativeText),
            "msh" | "gmsh" => Ok(MeshFormat::Msh),
            other => Err(format!("unknown mesh format '{other}'")),
        }
    }
}

/// A boundary edge: local edge `local` of `element` joins local nodes `local` and
/// `(local + 1) % 4`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryEdge {
    pub element: usize,
    pub local: usize,
    pub tag: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub nodes: Vec<[f64; 2]>,
    /// Node ids of each element in counterclockwise order.
    pub elements: Vec<[usize; 4]>,
    /// `a -> eta^{-1}(a)`, sorted.
    pub node_to_elements: Vec<Vec<usize>>,
    /// `e -> P_e`, sorted; always contains `e`.
    pub patches: Vec<Vec<usize>>,
    pub boundary_edges: Vec<BoundaryEdge>,
}

impl Mesh {
    /// Validates the raw arrays and builds every derived map. `edge_tags` are
    /// `(element, local edge, tag)` records; each must name a boundary edge.
    pub fn new(
        nodes: Vec<[f64; 2]>,
        elements: Vec<[usize; 4]>,
        edge_tags: &[(usize, usize, String)],
    ) -> Result<Self, MeshError> {
        if elements.is_empty() {
            return Err(MeshError::Empty);
        }
        for (i, x) in nodes.iter().enumerate() {
            if !(x[0].is_finite() && x[1].is_finite()) {
                return Err(MeshError::NonFinite { node: i });
            }
        }
        for (e, conn) in elements.iter().enumerate() {
            for (k, &a) in conn.iter().enumerate() {
                if a >= nodes.len() {
                    return Err(MeshError::DanglingNode {
                        element: e,
                        node: a,
                        count: nodes.len(),
                    });
                }
                if conn[..k].contains(&a) {
                    return Err(MeshError::RepeatedNode { element: e, node: a });
                }
            }
            let coords = conn.map(|a| nodes[a]);
            if let Some(det) = min_jacobian(&coords) {
                if det <= 0.0 {
                    return Err(MeshError::Inverted { element: e, det });
                }
            }
        }

        let mut node_to_elements = vec![Vec::new(); nodes.len()];
        for (e, conn) in elements.iter().enumerate() {
            for &a in conn {
                node_to_elements[a].push(e);
            }
        }
        if let Some(a) = node_to_elements.iter().position(|v| v.is_empty()) {
            return Err(MeshError::OrphanNode { node: a });
        }

        let mut mesh = Mesh {
            nodes,
            elements,
            node_to_elements,
            patches: Vec::new(),
            boundary_edges: Vec::new(),
        };
        mesh.patches = build_patches(&mesh);
        mesh.boundary_edges = find_boundary_edges(&mesh);

        let index: HashMap<(usize, usize), usize> = mesh
            .boundary_edges
            .iter()
            .enumerate()
            .map(|(i, b)| ((b.element, b.local), i))
            .collect();
        for (element, local, tag) in edge_tags {
            if *element >= mesh.elements.len() || *local >= 4 {
                return Err(MeshError::BadEdge {
                    element: *element,
                    local: *local,
                    message: "no such element edge".into(),
                });
            }
            match index.get(&(*element, *local)) {
                Some(&i) => mesh.boundary_edges[i].tag = Some(tag.clone()),
                None => {
                    return Err(MeshError::BadEdge {
                        element: *element,
                        local: *local,
                        message: "edge is interior".into(),
                    })
                }
            }
        }
        Ok(mesh)
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn element_coords(&self, e: usize) -> [[f64; 2]; 4] {
        self.elements[e].map(|a| self.nodes[a])
    }

    /// Global node ids of a boundary edge.
    pub fn edge_nodes(&self, edge: &BoundaryEdge) -> [usize; 2] {
        let conn = &self.elements[edge.element];
        [conn[edge.local], conn[(edge.local + 1) % 4]]
    }

    pub fn element_area(&self, e: usize) -> f64 {
        let c = self.element_coords(e);
        0.5 * ((c[0][0] - c[2][0]) * (c[1][1] - c[3][1])
            - (c[1][0] - c[3][0]) * (c[0][1] - c[2][1]))
    }

    /// Shortest and longest edge of element `e`.
    pub fn element_edge_range(&self, e: usize) -> (f64, f64) {
        let c = self.element_coords(e);
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for k in 0..4 {
            let p = c[k];
            let q = c[(k + 1) % 4];
            let len = (q[0] - p[0]).hypot(q[1] - p[1]);
            lo = lo.min(len);
            hi = hi.max(len);
        }
        (lo, hi)
    }

    pub fn bounding_box(&self) -> ([f64; 2], [f64; 2]) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for x in &self.nodes {
            for k in 0..2 {
                lo[k] = lo[k].min(x[k]);
                hi[k] = hi[k].max(x[k]);
            }
        }
        (lo, hi)
    }

    /// Unique undirected element edges `(a, b)` with `a < b`.
    pub fn unique_edges(&self) -> Vec<[usize; 2]> {
        let mut edges: Vec<[usize; 2]> = self
            .elements
            .iter()
            .flat_map(|conn| {
                (0..4).map(move |k| {
                    let (a, b) = (conn[k], conn[(k + 1) % 4]);
                    [a.min(b), a.max(b)]
                })
            })
            .collect();
        edges.sort_unstable();
        edges.dedup();
        edges
    }
}

/// Smallest Jacobian determinant over the 2x2 Gauss points (`None` never happens for
/// finite input; kept optional for symmetry with the element kernels).
fn min_jacobian(coords: &[[f64; 2]; 4]) -> Option<f64> {
    let mut min = f64::INFINITY;
    for &xi in &GAUSS_2 {
        for &eta in &GAUSS_2 {
            let (_, dn) = shape_eval(xi, eta);
            let mut j = [[0.0; 2]; 2];
            for a in 0..4 {
                for r in 0..2 {
                    for c in 0..2 {
                        j[r][c] += coords[a][r] * dn[a][c];
                    }
                }
            }
            min = min.min(j[0][0] * j[1][1] - j[0][1] * j[1][0]);
        }
    }
    min.is_finite().then_some(min)
}

/// `P_e = { e' : eta(e) and eta(e') share a node }` for every element.
pub fn build_patches(mesh: &Mesh) -> Vec<Vec<usize>> {
    mesh.elements
        .iter()
        .map(|conn| {
            let mut patch: Vec<usize> = conn
                .iter()
                .flat_map(|&a| mesh.node_to_elements[a].iter().copied())
                .collect();
            patch.sort_unstable();
            patch.dedup();
            patch
        })
        .collect()
}

fn find_boundary_edges(mesh: &Mesh) -> Vec<BoundaryEdge> {
    let mut count: HashMap<(usize, usize), u32> = HashMap::new();
    for conn in &mesh.elements {
        for k in 0..4 {
            let (a, b) = (conn[k], conn[(k + 1) % 4]);
            *count.entry((a.min(b), a.max(b))).or_default() += 1;
        }
    }
    let mut out = Vec::new();
    for (e, conn) in mesh.elements.iter().enumerate() {
        for k in 0..4 {
            let (a, b) = (conn[k], conn[(k + 1) % 4]);
            if count[&(a.min(b), a.max(b))] == 1 {
                out.push(BoundaryEdge {
                    element: e,
                    local: k,
                    tag: None,
                });
            }
        }
    }
    out
}

/// How boundary edges are picked for loads and constraints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundarySelector {
    /// Edges carrying this tag.
    Tag(String),
    /// Edges whose two end nodes lie in the closed box `[xmin, xmax, ymin, ymax]`.
    Box([f64; 4]),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BoundarySelection {
    /// Sorted node ids touched by the selected edges.
    pub nodes: Vec<usize>,
    /// Indices into [`Mesh::boundary_edges`], ascending.
    pub edges: Vec<usize>,
}

impl BoundarySelection {
    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

/// Selects boundary edges whose two nodes satisfy `pred`. An empty selection is
/// logged as a warning.
pub fn select_boundary(mesh: &Mesh, pred: impl Fn(&[f64; 2]) -> bool) -> BoundarySelection {
    collect_selection(mesh, |edge| {
        let [a, b] = mesh.edge_nodes(edge);
        pred(&mesh.nodes[a]) && pred(&mesh.nodes[b])
    })
}

pub fn select_boundary_tag(mesh: &Mesh, tag: &str) -> BoundarySelection {
    collect_selection(mesh, |edge| edge.tag.as_deref() == Some(tag))
}

pub fn select(mesh: &Mesh, selector: &BoundarySelector) -> BoundarySelection {
    match selector {
        BoundarySelector::Tag(tag) => select_boundary_tag(mesh, tag),
        BoundarySelector::Box([x0, x1, y0, y1]) => {
            let (lo, hi) = mesh.bounding_box();
            let tol = 1e-9 * (hi[0] - lo[0]).max(hi[1] - lo[1]);
            select_boundary(mesh, |p| {
                p[0] >= x0 - tol && p[0] <= x1 + tol && p[1] >= y0 - tol && p[1] <= y1 + tol
            })
        }
    }
}

fn collect_selection(mesh: &Mesh, keep: impl Fn(&BoundaryEdge) -> bool) -> BoundarySelection {
    let mut sel = BoundarySelection::default();
    for (i, edge) in mesh.boundary_edges.iter().enumerate() {
        if keep(edge) {
            sel.edges.push(i);
            sel.nodes.extend(mesh.edge_nodes(edge));
        }
    }
    sel.nodes.sort_unstable();
    sel.nodes.dedup();
    if sel.is_empty() {
        log::warn!("boundary selection matched no edges");
    }
    sel
}

/// Reads a mesh file in the given format.
pub fn load_mesh(path: &Path, format: MeshFormat) -> Result<Mesh, MeshError> {
    let text = std::fs::read_to_string(path).map_err(|source| MeshError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    match format {
        MeshFormat::NativeText => parse_native(&text),
        MeshFormat::Msh => parse_gmsh(&text),
    }
}
