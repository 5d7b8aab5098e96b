//! Native text and Gmsh ASCII (v2, quads only) readers.
//!
//! Native layout, `#` starts a comment:
//!
//! ```text
//! <node count>
//! x y              (one line per node)
//! <element count>
//! n0 n1 n2 n3      (one line per element, counterclockwise)
//! edge <element> <local edge> <tag>    (optional, any number)
//! ```

use std::collections::HashMap;
use std::fmt::Write as _;

use super::Mesh;
use crate::error::MeshError;

fn parse_err(line: usize, message: impl Into<String>) -> MeshError {
    MeshError::Parse {
        line,
        message: message.into(),
    }
}

fn num<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T, MeshError> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| parse_err(line, format!("bad {what} '{tok}'")))
}

pub fn parse_native(text: &str) -> Result<Mesh, MeshError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let mut next = |what: &str| {
        lines
            .next()
            .ok_or_else(|| parse_err(0, format!("unexpected end of file, expected {what}")))
    };

    let (ln, l) = next("node count")?;
    let n_nodes: usize = num(Some(l), ln, "node count")?;
    let mut nodes = Vec::with_capacity(n_nodes);
    for _ in 0..n_nodes {
        let (ln, l) = next("node coordinates")?;
        let mut it = l.split_whitespace();
        let x: f64 = num(it.next(), ln, "x coordinate")?;
        let y: f64 = num(it.next(), ln, "y coordinate")?;
        nodes.push([x, y]);
    }

    let (ln, l) = next("element count")?;
    let n_elems: usize = num(Some(l), ln, "element count")?;
    let mut elements = Vec::with_capacity(n_elems);
    for e in 0..n_elems {
        let (ln, l) = next("element connectivity")?;
        let ids: Vec<&str> = l.split_whitespace().collect();
        if ids.len() != 4 {
            return Err(MeshError::NonQuad {
                element: e,
                detail: format!("line {ln} lists {} nodes", ids.len()),
            });
        }
        let mut conn = [0usize; 4];
        for (k, tok) in ids.iter().enumerate() {
            conn[k] = num(Some(tok), ln, "node id")?;
        }
        elements.push(conn);
    }

    let mut tags = Vec::new();
    for (ln, l) in lines {
        let mut it = l.split_whitespace();
        match it.next() {
            Some("edge") => {
                let e: usize = num(it.next(), ln, "edge element")?;
                let k: usize = num(it.next(), ln, "local edge")?;
                let tag = it
                    .next()
                    .ok_or_else(|| parse_err(ln, "missing edge tag"))?
                    .to_string();
                tags.push((e, k, tag));
            }
            _ => return Err(parse_err(ln, format!("unexpected content '{l}'"))),
        }
    }
    Mesh::new(nodes, elements, &tags)
}

/// Writes the native format; tagged boundary edges are emitted as `edge` records.
pub fn write_native(mesh: &Mesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{}", mesh.nodes.len());
    for x in &mesh.nodes {
        let _ = writeln!(s, "{:e} {:e}", x[0], x[1]);
    }
    let _ = writeln!(s, "{}", mesh.elements.len());
    for c in &mesh.elements {
        let _ = writeln!(s, "{} {} {} {}", c[0], c[1], c[2], c[3]);
    }
    for edge in &mesh.boundary_edges {
        if let Some(tag) = &edge.tag {
            let _ = writeln!(s, "edge {} {} {}", edge.element, edge.local, tag);
        }
    }
    s
}

const GMSH_LINE: u32 = 1;
const GMSH_QUAD: u32 = 3;
const GMSH_POINT: u32 = 15;

/// Gmsh ASCII 2.x. 4-node quads become elements; 2-node lines with a physical tag
/// become boundary-edge tags (physical names when `$PhysicalNames` is present).
/// Nodes not referenced by any quad are dropped and the rest renumbered densely.
pub fn parse_gmsh(text: &str) -> Result<Mesh, MeshError> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
        .collect();

    let mut physical_names: HashMap<u32, String> = HashMap::new();
    let mut raw_nodes: HashMap<u64, [f64; 2]> = HashMap::new();
    let mut quads: Vec<[u64; 4]> = Vec::new();
    let mut lines_tagged: Vec<([u64; 2], u32)> = Vec::new();
    let mut seen_format = false;

    let mut i = 0;
    while i < lines.len() {
        let (ln, l) = lines[i];
        match l {
            "$MeshFormat" => {
                let (ln2, v) = *lines.get(i + 1).ok_or_else(|| parse_err(ln, "truncated header"))?;
                let version: f64 = num(v.split_whitespace().next(), ln2, "format version")?;
                let file_type: u32 = num(v.split_whitespace().nth(1), ln2, "file type")?;
                if !(2.0..3.0).contains(&version) || file_type != 0 {
                    return Err(parse_err(
                        ln2,
                        format!("only ASCII Gmsh 2.x is supported (got {version}, type {file_type})"),
                    ));
                }
                seen_format = true;
                i += 2;
            }
            "$PhysicalNames" => {
                let (ln2, c) = lines[i + 1];
                let n: usize = num(Some(c), ln2, "physical name count")?;
                for k in 0..n {
                    let (lnk, entry) = *lines
                        .get(i + 2 + k)
                        .ok_or_else(|| parse_err(ln2, "truncated $PhysicalNames"))?;
                    let mut it = entry.splitn(3, char::is_whitespace);
                    let _dim: u32 = num(it.next(), lnk, "physical dimension")?;
                    let tag: u32 = num(it.next(), lnk, "physical tag")?;
                    let name = it.next().unwrap_or("").trim().trim_matches('"').to_string();
                    physical_names.insert(tag, name);
                }
                i += 2 + n;
            }
            "$Nodes" => {
                let (ln2, c) = lines[i + 1];
                let n: usize = num(Some(c), ln2, "node count")?;
                for k in 0..n {
                    let (lnk, entry) = *lines
                        .get(i + 2 + k)
                        .ok_or_else(|| parse_err(ln2, "truncated $Nodes"))?;
                    let mut it = entry.split_whitespace();
                    let id: u64 = num(it.next(), lnk, "node id")?;
                    let x: f64 = num(it.next(), lnk, "x")?;
                    let y: f64 = num(it.next(), lnk, "y")?;
                    raw_nodes.insert(id, [x, y]);
                }
                i += 2 + n;
            }
            "$Elements" => {
                let (ln2, c) = lines[i + 1];
                let n: usize = num(Some(c), ln2, "element count")?;
                for k in 0..n {
                    let (lnk, entry) = *lines
                        .get(i + 2 + k)
                        .ok_or_else(|| parse_err(ln2, "truncated $Elements"))?;
                    let f: Vec<&str> = entry.split_whitespace().collect();
                    let ty: u32 = num(f.get(1).copied(), lnk, "element type")?;
                    let ntags: usize = num(f.get(2).copied(), lnk, "tag count")?;
                    let physical: u32 = if ntags > 0 {
                        num(f.get(3).copied(), lnk, "physical tag")?
                    } else {
                        0
                    };
                    let ids = f.get(3 + ntags..).unwrap_or(&[]);
                    let parse_ids = |count: usize| -> Result<Vec<u64>, MeshError> {
                        if ids.len() != count {
                            return Err(parse_err(lnk, "wrong node count for element type"));
                        }
                        ids.iter().map(|t| num(Some(t), lnk, "node id")).collect()
                    };
                    match ty {
                        GMSH_QUAD => {
                            let v = parse_ids(4)?;
                            quads.push([v[0], v[1], v[2], v[3]]);
                        }
                        GMSH_LINE => {
                            let v = parse_ids(2)?;
                            if ntags > 0 {
                                lines_tagged.push(([v[0], v[1]], physical));
                            }
                        }
                        GMSH_POINT => {}
                        other => {
                            return Err(MeshError::NonQuad {
                                element: quads.len(),
                                detail: format!("gmsh element type {other} on line {lnk}"),
                            })
                        }
                    }
                }
                i += 2 + n;
            }
            _ => i += 1,
        }
    }
    if !seen_format {
        return Err(parse_err(1, "missing $MeshFormat section"));
    }

    // Dense renumbering in order of first use.
    let mut remap: HashMap<u64, usize> = HashMap::new();
    let mut nodes = Vec::new();
    let mut elements = Vec::with_capacity(quads.len());
    for (e, q) in quads.iter().enumerate() {
        let mut conn = [0usize; 4];
        for (k, id) in q.iter().enumerate() {
            let x = *raw_nodes.get(id).ok_or(MeshError::DanglingNode {
                element: e,
                node: *id as usize,
                count: raw_nodes.len(),
            })?;
            conn[k] = *remap.entry(*id).or_insert_with(|| {
                nodes.push(x);
                nodes.len() - 1
            });
        }
        elements.push(conn);
    }

    let mut edge_owner: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
    for (e, conn) in elements.iter().enumerate() {
        for k in 0..4 {
            let (a, b) = (conn[k], conn[(k + 1) % 4]);
            edge_owner.insert((a.min(b), a.max(b)), (e, k));
        }
    }
    let mut tags = Vec::new();
    for ([a, b], physical) in lines_tagged {
        let (Some(&a), Some(&b)) = (remap.get(&a), remap.get(&b)) else {
            continue;
        };
        if let Some(&(e, k)) = edge_owner.get(&(a.min(b), a.max(b))) {
            let name = physical_names
                .get(&physical)
                .cloned()
                .unwrap_or_else(|| physical.to_string());
            tags.push((e, k, name));
        }
    }
    Mesh::new(nodes, elements, &tags)
}
