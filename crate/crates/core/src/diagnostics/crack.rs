use std::collections::HashMap;

use petgraph::algo::dijkstra;
use petgraph::graph::{NodeIndex, UnGraph};
use petgraph::visit::EdgeRef;
use serde::Serialize;

use crate::mesh::Mesh;

/// Nodes with `d >= level`.
pub fn crack_region(d: &[f64], level: f64) -> Vec<bool> {
    d.iter().map(|&v| v >= level).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrackTip {
    pub node: usize,
    pub position: [f64; 2],
    /// Geodesic distance from the reference point through the crack region.
    pub distance: f64,
}

/// Tip state at one sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsoSample {
    pub t: f64,
    /// Farthest point of the crack region; `None` while the region is empty.
    pub tip: Option<CrackTip>,
    /// Local distance maxima at least `separation` apart, farthest first.
    pub branches: Vec<CrackTip>,
    /// Speed of the main tip since the previous tip sample.
    pub velocity: Option<f64>,
    /// Per-branch speeds, matched to the nearest previous branch tip.
    pub branch_velocities: Vec<Option<f64>>,
    /// Longest crack path to the main tip so far.
    pub length: f64,
}

/// Follows the `d >= level` region sample by sample.
///
/// Distances are measured from `origin` (the initial notch tip). Region nodes within
/// `separation` of the origin are entered at straight-line cost; everything else is
/// reached along element edges and diagonals inside the region, so damage not connected to the notch
/// is ignored.
#[derive(Debug, Clone)]
pub struct IsoCurveTracker {
    pub level: f64,
    pub origin: [f64; 2],
    pub separation: f64,
    links: Vec<[usize; 2]>,
    last: Option<(f64, CrackTip)>,
    last_branches: Vec<CrackTip>,
    last_branch_t: Option<f64>,
    length: f64,
}

impl IsoCurveTracker {
    pub fn new(mesh: &Mesh, level: f64, origin: [f64; 2], separation: f64) -> Self {
        Self {
            level,
            origin,
            separation,
            links: links(mesh),
            last: None,
            last_branches: Vec::new(),
            last_branch_t: None,
            length: 0.0,
        }
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Geodesic distance of every region node (`None` outside the region).
    pub fn distances(&self, mesh: &Mesh, d: &[f64]) -> Vec<Option<f64>> {
        self.search(mesh, d).distances()
    }

    fn search(&self, mesh: &Mesh, d: &[f64]) -> Search {
        let region = crack_region(d, self.level);
        let mut graph = UnGraph::<(), f64>::new_undirected();
        let source = graph.add_node(());
        let mut index: Vec<Option<NodeIndex>> = vec![None; mesh.num_nodes()];
        for (a, &inside) in region.iter().enumerate() {
            if inside {
                let ix = graph.add_node(());
                index[a] = Some(ix);
                let r = dist(mesh.nodes[a], self.origin);
                if r <= self.separation {
                    graph.add_edge(source, ix, r);
                }
            }
        }
        for &[a, b] in &self.links {
            if let (Some(ia), Some(ib)) = (index[a], index[b]) {
                graph.add_edge(ia, ib, dist(mesh.nodes[a], mesh.nodes[b]));
            }
        }
        let reached = dijkstra(&graph, source, None, |e| *e.weight());
        Search {
            graph,
            source,
            index,
            reached: reached.into_iter().collect(),
        }
    }

    /// Length of the crack path from the origin to region node `tip`.
    ///
    /// The shortest path zig-zags along mesh edges, so it is resampled at chords no
    /// shorter than `separation` before summing.
    fn path_length(&self, mesh: &Mesh, search: &Search, tip: usize) -> f64 {
        let Some(mut cur) = search.index[tip] else {
            return 0.0;
        };
        let node_of: HashMap<NodeIndex, usize> = search
            .index
            .iter()
            .enumerate()
            .filter_map(|(a, ix)| ix.map(|ix| (ix, a)))
            .collect();
        let mut path = vec![mesh.nodes[tip]];
        while cur != search.source {
            let here = search.reached[&cur];
            let Some(prev) = search
                .graph
                .edges(cur)
                .filter_map(|e| {
                    let n = if e.source() == cur { e.target() } else { e.source() };
                    search.reached.get(&n).map(|&v| (n, v + e.weight() - here))
                })
                .min_by(|x, y| x.1.total_cmp(&y.1))
                .map(|(n, _)| n)
            else {
                break;
            };
            cur = prev;
            path.push(node_of.get(&cur).map_or(self.origin, |&a| mesh.nodes[a]));
        }
        let mut total = 0.0;
        let mut kept = path[0];
        let last = path.len() - 1;
        for (k, &p) in path.iter().enumerate().skip(1) {
            let step = dist(kept, p);
            if step >= self.separation || k == last {
                total += step;
                kept = p;
            }
        }
        total
    }

    /// Main tip and branch tips of the current field.
    pub fn locate(&self, mesh: &Mesh, d: &[f64]) -> (Option<CrackTip>, Vec<CrackTip>) {
        self.locate_in(mesh, &self.search(mesh, d))
    }

    fn locate_in(&self, mesh: &Mesh, search: &Search) -> (Option<CrackTip>, Vec<CrackTip>) {
        let dists = search.distances();
        let mut nodes: Vec<(usize, f64)> = dists
            .iter()
            .enumerate()
            .filter_map(|(a, v)| v.map(|v| (a, v)))
            .collect();
        if nodes.is_empty() {
            return (None, Vec::new());
        }
        nodes.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
        let tip_of = |(a, v): (usize, f64)| CrackTip {
            node: a,
            position: mesh.nodes[a],
            distance: v,
        };
        let main = tip_of(nodes[0]);

        // bucket region nodes to find local maxima within the separation radius
        let r = self.separation.max(f64::MIN_POSITIVE);
        let key = |p: [f64; 2]| ((p[0] / r).floor() as i64, (p[1] / r).floor() as i64);
        let mut buckets: HashMap<(i64, i64), Vec<(usize, f64)>> = HashMap::new();
        for &(a, v) in &nodes {
            buckets.entry(key(mesh.nodes[a])).or_default().push((a, v));
        }
        let mut branches: Vec<CrackTip> = Vec::new();
        for &(a, v) in &nodes {
            if v < r {
                break;
            }
            let p = mesh.nodes[a];
            let (kx, ky) = key(p);
            let mut is_max = true;
            'scan: for dx in -1..=1 {
                for dy in -1..=1 {
                    if let Some(list) = buckets.get(&(kx + dx, ky + dy)) {
                        for &(b, w) in list {
                            if w > v && dist(mesh.nodes[b], p) <= r {
                                is_max = false;
                                break 'scan;
                            }
                        }
                    }
                }
            }
            if is_max && branches.iter().all(|t| dist(t.position, p) > r) {
                branches.push(tip_of((a, v)));
            }
        }
        (Some(main), branches)
    }

    /// Processes the field sampled at time `t`.
    pub fn update(&mut self, mesh: &Mesh, t: f64, d: &[f64]) -> IsoSample {
        let search = self.search(mesh, d);
        let (tip, branches) = self.locate_in(mesh, &search);
        let mut velocity = None;
        let mut reported = tip;
        if let Some(cur) = tip {
            match self.last {
                None => {
                    self.length = self.path_length(mesh, &search, cur.node);
                    self.last = Some((t, cur));
                }
                Some((t_prev, prev)) => {
                    let dt = t - t_prev;
                    if cur.distance >= prev.distance {
                        // progress along the crack, so hopping between branch tips adds nothing
                        let len = self.path_length(mesh, &search, cur.node).max(self.length);
                        let step = len - self.length;
                        self.length = len;
                        velocity = (dt > 0.0).then(|| step / dt);
                        self.last = Some((t, cur));
                    } else {
                        // the farthest point moved back through a shortcut; hold the tip
                        velocity = (dt > 0.0).then_some(0.0);
                        reported = Some(prev);
                    }
                }
            }
        }
        let t_prev = self.last_branch_t;
        let branch_velocities = branches
            .iter()
            .map(|b| {
                let near = |x: &CrackTip| dist(x.position, b.position);
                let prev = self
                    .last_branches
                    .iter()
                    .min_by(|x, y| near(x).total_cmp(&near(y)))?;
                let dt = t - t_prev?;
                (dt > 0.0).then(|| dist(prev.position, b.position) / dt)
            })
            .collect();
        if !branches.is_empty() {
            self.last_branches = branches.clone();
            self.last_branch_t = Some(t);
        }
        IsoSample {
            t,
            tip: reported,
            branches,
            velocity,
            branch_velocities,
            length: self.length,
        }
    }
}

struct Search {
    graph: UnGraph<(), f64>,
    source: NodeIndex,
    index: Vec<Option<NodeIndex>>,
    reached: HashMap<NodeIndex, f64>,
}

impl Search {
    fn distances(&self) -> Vec<Option<f64>> {
        self.index
            .iter()
            .map(|ix| ix.and_then(|ix| self.reached.get(&ix).copied()))
            .collect()
    }
}

/// Element edges plus both element diagonals.
fn links(mesh: &Mesh) -> Vec<[usize; 2]> {
    let mut links = mesh.unique_edges();
    for conn in &mesh.elements {
        for (a, b) in [(conn[0], conn[2]), (conn[1], conn[3])] {
            links.push([a.min(b), a.max(b)]);
        }
    }
    links.sort_unstable();
    links.dedup();
    links
}

fn dist(p: [f64; 2], q: [f64; 2]) -> f64 {
    (p[0] - q[0]).hypot(p[1] - q[1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::tests::grid;

    #[test]
    fn absent_without_region() {
        let mesh = grid(4, 4, 4.0, 4.0);
        let mut tr = IsoCurveTracker::new(&mesh, 0.9, [0.0, 2.0], 0.5);
        let s = tr.update(&mesh, 1.0, &vec![0.5; mesh.num_nodes()]);
        assert!(s.tip.is_none() && s.velocity.is_none());
        assert_eq!(s.length, 0.0);
    }

    #[test]
    fn straight_crack_tip_and_speed() {
        let mesh = grid(10, 4, 10.0, 4.0);
        let mut tr = IsoCurveTracker::new(&mesh, 0.9, [0.0, 2.0], 1.5);
        let field = |len: f64| -> Vec<f64> {
            mesh.nodes
                .iter()
                .map(|x| if x[1] == 2.0 && x[0] <= len { 1.0 } else { 0.0 })
                .collect()
        };
        let s1 = tr.update(&mesh, 1.0, &field(3.0));
        assert_eq!(s1.tip.unwrap().position, [3.0, 2.0]);
        assert!((s1.length - 3.0).abs() < 1e-12);
        let s2 = tr.update(&mesh, 3.0, &field(7.0));
        assert!((s2.velocity.unwrap() - 2.0).abs() < 1e-12);
        assert!((s2.length - 7.0).abs() < 1e-12);
        let s3 = tr.update(&mesh, 4.0, &field(7.0));
        assert_eq!(s3.velocity, Some(0.0));
        assert_eq!(s3.branches.len(), 1);
    }

    #[test]
    fn detached_damage_is_ignored() {
        let mesh = grid(10, 4, 10.0, 4.0);
        let tr = IsoCurveTracker::new(&mesh, 0.9, [0.0, 2.0], 1.5);
        let d: Vec<f64> = mesh
            .nodes
            .iter()
            .map(|x| {
                let stem = x[1] == 2.0 && x[0] <= 3.0;
                let blob = x[0] >= 8.0 && x[1] <= 1.0;
                if stem || blob {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        let (main, branches) = tr.locate(&mesh, &d);
        assert_eq!(main.unwrap().position, [3.0, 2.0]);
        assert_eq!(branches.len(), 1);
    }

    #[test]
    fn switching_branches_adds_no_length() {
        let mesh = grid(16, 20, 16.0, 20.0);
        let field = |up: f64, down: f64| -> Vec<f64> {
            mesh.nodes
                .iter()
                .map(|x| {
                    let stem = x[1] == 10.0 && x[0] <= 8.0;
                    let arm = x[0] == 8.0 && x[1] <= 10.0 + up && x[1] >= 10.0 - down;
                    if stem || arm {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect()
        };
        let mut tr = IsoCurveTracker::new(&mesh, 0.9, [0.0, 10.0], 1.5);
        let s1 = tr.update(&mesh, 1.0, &field(3.0, 0.0));
        assert_eq!(s1.tip.unwrap().position, [8.0, 13.0]);
        // resampling cuts the right-angle corner by less than a chord
        assert!(s1.length > 10.0 && s1.length <= 11.0, "{}", s1.length);
        let s2 = tr.update(&mesh, 2.0, &field(3.0, 4.0));
        assert_eq!(s2.tip.unwrap().position, [8.0, 6.0]);
        assert!(s2.length > s1.length && s2.length <= 12.0, "{}", s2.length);
        assert!((s2.velocity.unwrap() - (s2.length - s1.length)).abs() < 1e-12);
    }

    #[test]
    fn inclined_staircase_measures_its_chord() {
        let mesh = grid(30, 30, 30.0, 30.0);
        let slope = 67f64.to_radians().tan();
        // vertical runs joined column to column: a 4-connected staircase along the line
        let d: Vec<f64> = mesh
            .nodes
            .iter()
            .map(|x| {
                let run = (slope * x[0]).floor()..=(slope * (x[0] + 1.0)).floor();
                if x[1] <= 28.0 && run.contains(&x[1]) {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        let mut tr = IsoCurveTracker::new(&mesh, 0.9, [0.0, 0.0], 3.0);
        let s = tr.update(&mesh, 1.0, &d);
        let tip = s.tip.unwrap().position;
        let chord = tip[0].hypot(tip[1]);
        assert!((s.length / chord - 1.0).abs() < 0.03, "{} vs {chord}", s.length);
        assert!(s.tip.unwrap().distance > 1.05 * chord);
    }

    #[test]
    fn forked_crack_has_two_tips() {
        let mesh = grid(20, 20, 20.0, 20.0);
        let d: Vec<f64> = mesh
            .nodes
            .iter()
            .map(|x| {
                let on_stem = x[1] == 10.0 && x[0] <= 8.0;
                let dy = (x[1] - 10.0).abs();
                let on_fork = x[0] > 8.0 && x[0] <= 16.0 && dy == x[0] - 8.0;
                if on_stem || on_fork {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        // diagonal steps are not mesh edges; add the missing corner nodes to connect
        let mut d = d;
        for (a, x) in mesh.nodes.iter().enumerate() {
            let dy = (x[1] - 10.0).abs();
            if x[0] > 8.0 && x[0] <= 16.0 && dy == x[0] - 9.0 {
                d[a] = 1.0;
            }
        }
        let tr = IsoCurveTracker::new(&mesh, 0.9, [0.0, 10.0], 3.0);
        let (main, branches) = tr.locate(&mesh, &d);
        assert!(main.is_some());
        assert_eq!(branches.len(), 2, "{branches:?}");
        let ys: Vec<f64> = branches.iter().map(|b| b.position[1]).collect();
        assert!(ys.iter().any(|&y| y > 14.0) && ys.iter().any(|&y| y < 6.0));
    }
}
