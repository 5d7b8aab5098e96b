//! Graded quadrilateral meshes of a rectangle.
//!
//! A coarse `nx x ny` grid is refined by 3x3 subdivision inside the requested boxes.
//! Neighbouring leaves differ by at most one level, and every leaf adjacent to finer
//! cells is filled with a conforming transition template (one refined edge or two
//! adjacent refined edges), so the result has no hanging nodes. Horizontal slits
//! (pre-cracks) are cut by duplicating the nodes on the slit for the elements above it.

use std::collections::{BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::Mesh;
use crate::error::MeshError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineBox {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub level: u32,
}

/// Horizontal slit at height `y` spanning `x[0]..x[1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Notch {
    pub y: f64,
    pub x: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradedRectSpec {
    pub x: [f64; 2],
    pub y: [f64; 2],
    /// Coarse cell counts along x and y.
    pub cells: [usize; 2],
    #[serde(default)]
    pub refine: Vec<RefineBox>,
    #[serde(default)]
    pub notches: Vec<Notch>,
}

impl GradedRectSpec {
    pub fn max_level(&self) -> u32 {
        self.refine.iter().map(|b| b.level).max().unwrap_or(0)
    }

    /// Edge lengths `(hx, hy)` of cells refined `level` times.
    pub fn cell_size(&self, level: u32) -> (f64, f64) {
        let s = 3f64.powi(level as i32);
        (
            (self.x[1] - self.x[0]) / (self.cells[0] as f64 * s),
            (self.y[1] - self.y[0]) / (self.cells[1] as f64 * s),
        )
    }
}

type Cell = (u32, i64, i64);

const DIRS: [(i64, i64); 4] = [(0, -1), (1, 0), (0, 1), (-1, 0)];

// Templates on a [0,3]^2 cell in units of the next finer level, counterclockwise.
const EDGE_TEMPLATE: [[(i64, i64); 4]; 4] = [
    [(0, 0), (1, 0), (1, 1), (0, 3)],
    [(1, 0), (2, 0), (2, 1), (1, 1)],
    [(2, 0), (3, 0), (3, 3), (2, 1)],
    [(1, 1), (2, 1), (3, 3), (0, 3)],
];
const CORNER_TEMPLATE: [[(i64, i64); 4]; 5] = [
    [(0, 0), (1, 0), (1, 1), (0, 1)],
    [(1, 0), (2, 0), (2, 2), (1, 1)],
    [(0, 1), (1, 1), (2, 2), (0, 2)],
    [(2, 0), (3, 0), (3, 3), (2, 2)],
    [(0, 2), (2, 2), (3, 3), (0, 3)],
];

fn rotate(p: (i64, i64), times: usize) -> (i64, i64) {
    (0..times).fold(p, |(x, y), _| (3 - y, x))
}

struct Tree {
    nx: i64,
    ny: i64,
    leaves: BTreeSet<Cell>,
    refined: HashSet<Cell>,
}

impl Tree {
    fn in_domain(&self, (k, i, j): Cell) -> bool {
        let s = 3i64.pow(k);
        i >= 0 && j >= 0 && i < self.nx * s && j < self.ny * s
    }

    fn refine(&mut self, cell: Cell) {
        let (k, i, j) = cell;
        self.leaves.remove(&cell);
        self.refined.insert(cell);
        for a in 0..3 {
            for b in 0..3 {
                self.leaves.insert((k + 1, 3 * i + a, 3 * j + b));
            }
        }
    }

    /// Which edges of a leaf face subdivided neighbours, and whether a neighbour is
    /// two or more levels finer along the shared edge.
    fn edge_status(&self, (k, i, j): Cell) -> ([bool; 4], bool) {
        let mut finer = [false; 4];
        let mut too_deep = false;
        for (dir, (di, dj)) in DIRS.iter().enumerate() {
            let nb = (k, i + di, j + dj);
            if !self.in_domain(nb) || !self.refined.contains(&nb) {
                continue;
            }
            finer[dir] = true;
            // children of the neighbour touching the shared edge
            for t in 0..3 {
                let (a, b) = match dir {
                    0 => (t, 2),
                    1 => (0, t),
                    2 => (t, 0),
                    _ => (2, t),
                };
                if self.refined.contains(&(k + 1, 3 * nb.1 + a, 3 * nb.2 + b)) {
                    too_deep = true;
                }
            }
        }
        (finer, too_deep)
    }
}

fn needs_refinement(finer: [bool; 4], too_deep: bool) -> bool {
    if too_deep {
        return true;
    }
    match finer.iter().filter(|&&f| f).count() {
        0 | 1 => false,
        2 => (0..4).any(|d| finer[d] && finer[(d + 2) % 4]),
        _ => true,
    }
}

pub fn generate_graded_rect(spec: &GradedRectSpec) -> Result<Mesh, MeshError> {
    let [nx, ny] = spec.cells;
    if nx == 0 || ny == 0 || !(spec.x[1] > spec.x[0]) || !(spec.y[1] > spec.y[0]) {
        return Err(MeshError::Generator("empty domain or zero cell count".into()));
    }
    let hx0 = (spec.x[1] - spec.x[0]) / nx as f64;
    let hy0 = (spec.y[1] - spec.y[0]) / ny as f64;

    let target = |(k, i, j): Cell| -> u32 {
        let s = 3f64.powi(k as i32);
        let (cx0, cy0) = (spec.x[0] + i as f64 * hx0 / s, spec.y[0] + j as f64 * hy0 / s);
        let (cx1, cy1) = (cx0 + hx0 / s, cy0 + hy0 / s);
        // boxes that merely touch a cell along an edge do not refine it
        let eps = 1e-9 * hx0.min(hy0) / s;
        spec.refine
            .iter()
            .filter(|b| {
                b.x[0] < cx1 - eps && b.x[1] > cx0 + eps && b.y[0] < cy1 - eps && b.y[1] > cy0 + eps
            })
            .map(|b| b.level)
            .max()
            .unwrap_or(0)
    };

    let mut tree = Tree {
        nx: nx as i64,
        ny: ny as i64,
        leaves: BTreeSet::new(),
        refined: HashSet::new(),
    };
    let mut stack: Vec<Cell> = (0..ny as i64)
        .flat_map(|j| (0..nx as i64).map(move |i| (0, i, j)))
        .collect();
    while let Some(cell) = stack.pop() {
        if target(cell) > cell.0 {
            tree.refined.insert(cell);
            for a in 0..3 {
                for b in 0..3 {
                    stack.push((cell.0 + 1, 3 * cell.1 + a, 3 * cell.2 + b));
                }
            }
        } else {
            tree.leaves.insert(cell);
        }
    }

    loop {
        let todo: Vec<Cell> = tree
            .leaves
            .iter()
            .copied()
            .filter(|&c| {
                let (finer, deep) = tree.edge_status(c);
                needs_refinement(finer, deep)
            })
            .collect();
        if todo.is_empty() {
            break;
        }
        for c in todo {
            tree.refine(c);
        }
    }

    let top = tree.leaves.iter().map(|c| c.0).max().unwrap_or(0);
    // one level below the deepest leaf so template points are lattice points
    let lattice = 3i64.pow(top + 1);
    let h = (hx0 / lattice as f64, hy0 / lattice as f64);

    let mut ids: HashMap<(i64, i64), usize> = HashMap::new();
    let mut keys: Vec<(i64, i64)> = Vec::new();
    let mut elements: Vec<[usize; 4]> = Vec::new();
    let mut node = |key: (i64, i64)| {
        *ids.entry(key).or_insert_with(|| {
            keys.push(key);
            keys.len() - 1
        })
    };

    for &cell in &tree.leaves {
        let (k, i, j) = cell;
        let (finer, _) = tree.edge_status(cell);
        let n_finer = finer.iter().filter(|&&f| f).count();
        let quads: Vec<[(i64, i64); 4]> = match n_finer {
            0 => vec![[(0, 0), (3, 0), (3, 3), (0, 3)]],
            1 => {
                let r = finer.iter().position(|&f| f).unwrap();
                EDGE_TEMPLATE
                    .iter()
                    .map(|q| q.map(|p| rotate(p, r)))
                    .collect()
            }
            _ => {
                let d = (0..4).find(|&d| finer[d] && finer[(d + 1) % 4]).unwrap();
                let r = (d + 1) % 4;
                CORNER_TEMPLATE
                    .iter()
                    .map(|q| q.map(|p| rotate(p, r)))
                    .collect()
            }
        };
        let unit = 3i64.pow(top - k);
        for q in quads {
            let conn = q.map(|(a, b)| node(((3 * i + a) * unit, (3 * j + b) * unit)));
            elements.push(conn);
        }
    }

    let mut coords: Vec<[f64; 2]> = keys
        .iter()
        .map(|&(a, b)| [spec.x[0] + a as f64 * h.0, spec.y[0] + b as f64 * h.1])
        .collect();

    // Slits: nodes strictly inside the slit (or on the domain boundary) are split.
    let mut notch_lines: Vec<(i64, i64, i64)> = Vec::new();
    for notch in &spec.notches {
        let jn = (notch.y - spec.y[0]) / h.1;
        let ia = (notch.x[0] - spec.x[0]) / h.0;
        let ib = (notch.x[1] - spec.x[0]) / h.0;
        let snap = |v: f64, what: &str| -> Result<i64, MeshError> {
            let r = v.round();
            if (v - r).abs() > 1e-6 {
                Err(MeshError::Generator(format!(
                    "notch {what} is not on the mesh lattice"
                )))
            } else {
                Ok(r as i64)
            }
        };
        let (jn, ia, ib) = (snap(jn, "height")?, snap(ia, "start")?, snap(ib, "end")?);
        if ib <= ia {
            return Err(MeshError::Generator("notch has zero length".into()));
        }
        notch_lines.push((jn, ia, ib));
    }

    let max_i = nx as i64 * lattice;
    for &(jn, ia, ib) in &notch_lines {
        // no element may straddle the slit
        for conn in &elements {
            let js: Vec<i64> = conn.iter().map(|&a| keys[a].1).collect();
            let is: Vec<i64> = conn.iter().map(|&a| keys[a].0).collect();
            let straddles = js.iter().any(|&v| v < jn) && js.iter().any(|&v| v > jn);
            let overlaps = is.iter().min().unwrap() < &ib && is.iter().max().unwrap() > &ia;
            if straddles && overlaps {
                return Err(MeshError::Generator(
                    "notch does not follow element edges; align it with coarse cell lines"
                        .into(),
                ));
            }
        }
        let split = |key: (i64, i64)| {
            key.1 == jn
                && ((key.0 > ia && key.0 < ib)
                    || (key.0 == ia && ia == 0)
                    || (key.0 == ib && ib == max_i))
        };
        let mut copies: HashMap<usize, usize> = HashMap::new();
        for conn in elements.iter_mut() {
            let above = conn.iter().any(|&a| keys[a].1 > jn);
            if !above {
                continue;
            }
            for a in conn.iter_mut() {
                if split(keys[*a]) {
                    let orig = *a;
                    *a = *copies.entry(orig).or_insert_with(|| {
                        coords.push(coords[orig]);
                        keys.push(keys[orig]);
                        coords.len() - 1
                    });
                }
            }
        }
    }

    // drop nodes orphaned by the split
    let mut used = vec![false; coords.len()];
    for conn in &elements {
        for &a in conn {
            used[a] = true;
        }
    }
    let mut remap = vec![usize::MAX; coords.len()];
    let mut new_coords = Vec::new();
    let mut new_keys = Vec::new();
    for (a, &u) in used.iter().enumerate() {
        if u {
            remap[a] = new_coords.len();
            new_coords.push(coords[a]);
            new_keys.push(keys[a]);
        }
    }
    for conn in elements.iter_mut() {
        for a in conn.iter_mut() {
            *a = remap[*a];
        }
    }

    let mut mesh = Mesh::new(new_coords, elements, &[])?;

    let max_j = ny as i64 * lattice;
    for b in 0..mesh.boundary_edges.len() {
        let edge = mesh.boundary_edges[b].clone();
        let [p, q] = mesh.edge_nodes(&edge).map(|a| new_keys[a]);
        let tag = if p.0 == 0 && q.0 == 0 {
            Some("left")
        } else if p.0 == max_i && q.0 == max_i {
            Some("right")
        } else if p.1 == 0 && q.1 == 0 {
            Some("bottom")
        } else if p.1 == max_j && q.1 == max_j {
            Some("top")
        } else if notch_lines.iter().any(|&(jn, ia, ib)| {
            p.1 == jn && q.1 == jn && p.0.min(q.0) >= ia && p.0.max(q.0) <= ib
        }) {
            let conn = mesh.elements[edge.element];
            let above = conn.iter().any(|&a| new_keys[a].1 > p.1);
            Some(if above { "notch_upper" } else { "notch_lower" })
        } else {
            None
        };
        mesh.boundary_edges[b].tag = tag.map(str::to_string);
    }
    Ok(mesh)
}
