//! Reader for Gmsh MSH 2.2 and 4.1 ASCII files.

use std::collections::HashMap;
use std::path::Path;

use super::{BoundaryTag, Mesh};
use crate::error::MeshError;
use crate::scalar::Scalar;

/// Physical-group names identifying the city limit and the obstacle walls.
///
/// A name ending in `*` matches by prefix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundaryGroups {
    pub outer: String,
    pub wall: String,
}

impl Default for BoundaryGroups {
    fn default() -> Self {
        BoundaryGroups {
            outer: "outer".into(),
            wall: "wall*".into(),
        }
    }
}

impl BoundaryGroups {
    pub fn classify(&self, name: &str) -> Option<BoundaryTag> {
        if matches(&self.outer, name) {
            Some(BoundaryTag::Outer)
        } else if matches(&self.wall, name) {
            Some(BoundaryTag::Wall)
        } else {
            None
        }
    }
}

fn matches(pattern: &str, name: &str) -> bool {
    match pattern.strip_suffix('*') {
        Some(prefix) => name.starts_with(prefix),
        None => pattern == name,
    }
}

/// Connectivity as read from the file, before geometry is computed.
///
/// Node indices are contiguous from 0 and only nodes used by a triangle are
/// kept.
#[derive(Debug, Clone, Default)]
pub struct RawMesh {
    pub nodes: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    /// Line elements with the name of their physical group, if any.
    pub lines: Vec<([usize; 2], Option<String>)>,
    pub version: String,
}

impl RawMesh {
    /// Flips clockwise triangles so every triangle is counter-clockwise.
    pub fn orient_counter_clockwise(&mut self) {
        for t in &mut self.triangles {
            let [a, b, c] = [self.nodes[t[0]], self.nodes[t[1]], self.nodes[t[2]]];
            let cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
            if cross < 0.0 {
                t.swap(1, 2);
            }
        }
    }

    /// Tags every topological boundary edge from the physical group of the
    /// matching line element.
    pub fn classify_boundary(&self, groups: &BoundaryGroups) -> Result<Vec<([usize; 2], BoundaryTag)>, MeshError> {
        let mut named: HashMap<[usize; 2], BoundaryTag> = HashMap::new();
        for (e, name) in &self.lines {
            if let Some(tag) = name.as_deref().and_then(|n| groups.classify(n)) {
                named.insert(key(*e), tag);
            }
        }
        let mut count: HashMap<[usize; 2], ([usize; 2], usize)> = HashMap::new();
        for t in &self.triangles {
            for i in 0..3 {
                let e = [t[i], t[(i + 1) % 3]];
                count.entry(key(e)).or_insert((e, 0)).1 += 1;
            }
        }
        let mut out: Vec<([usize; 2], BoundaryTag)> = Vec::new();
        for (k, (e, c)) in count {
            if c != 1 {
                continue;
            }
            match named.get(&k) {
                Some(tag) => out.push((e, *tag)),
                None => return Err(MeshError::UntaggedBoundaryEdge(e[0], e[1])),
            }
        }
        out.sort();
        Ok(out)
    }
}

fn key(e: [usize; 2]) -> [usize; 2] {
    [e[0].min(e[1]), e[0].max(e[1])]
}

/// Reads a mesh file and builds the mesh with geometry computed.
pub fn load_msh<T: Scalar>(path: &Path, groups: &BoundaryGroups) -> Result<Mesh<T>, MeshError> {
    let text = std::fs::read_to_string(path).map_err(|source| MeshError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut raw = parse_msh(&text)?;
    raw.orient_counter_clockwise();
    let boundary = raw.classify_boundary(groups)?;
    let nodes = raw.nodes.iter().map(|p| [T::of(p[0]), T::of(p[1])]).collect();
    Mesh::new(nodes, raw.triangles, boundary)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next_nonempty(&mut self) -> Option<&'a str> {
        for (i, l) in self.inner.by_ref() {
            let l = l.trim();
            if !l.is_empty() {
                self.line = i + 1;
                return Some(l);
            }
        }
        None
    }

    fn expect(&mut self, what: &str) -> Result<&'a str, MeshError> {
        self.next_nonempty().ok_or_else(|| MeshError::Parse {
            line: self.line,
            msg: format!("unexpected end of file, expected {what}"),
        })
    }

    fn next_line(&mut self) -> Result<&'a str, MeshError> {
        self.expect("another line")
    }

    fn next_numbers<N: std::str::FromStr>(&mut self) -> Result<Vec<N>, MeshError> {
        let l = self.next_line()?;
        self.numbers(l)
    }

    fn next_one<N: std::str::FromStr>(&mut self) -> Result<N, MeshError> {
        let l = self.next_line()?;
        parse_one(self, l)
    }

    fn err(&self, msg: impl Into<String>) -> MeshError {
        MeshError::Parse {
            line: self.line,
            msg: msg.into(),
        }
    }

    fn numbers<N: std::str::FromStr>(&self, l: &str) -> Result<Vec<N>, MeshError> {
        l.split_whitespace()
            .map(|t| t.parse::<N>().map_err(|_| self.err(format!("bad number '{t}'"))))
            .collect()
    }

    fn skip_section(&mut self, name: &str) -> Result<(), MeshError> {
        let end = format!("$End{name}");
        loop {
            if self.expect(&end)? == end {
                return Ok(());
            }
        }
    }
}

#[derive(Default)]
struct Collected {
    names: HashMap<(usize, i64), String>,
    /// (dim, entity tag) -> physical tags, MSH 4.1 only.
    entities: HashMap<(usize, i64), Vec<i64>>,
    nodes: HashMap<usize, [f64; 2]>,
    triangles: Vec<(usize, [usize; 3])>,
    /// Node ids and physical tag of line elements.
    lines: Vec<([usize; 2], Option<i64>)>,
    declared_nodes: usize,
}

/// Parses MSH text (format 2.2 or 4.1, ASCII).
pub fn parse_msh(text: &str) -> Result<RawMesh, MeshError> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        line: 0,
    };
    let mut version: Option<String> = None;
    let mut c = Collected::default();

    while let Some(header) = lines.next_nonempty() {
        match header {
            "$MeshFormat" => {
                let l = lines.expect("format line")?;
                let parts: Vec<&str> = l.split_whitespace().collect();
                let v = parts.first().copied().unwrap_or("");
                let file_type = parts.get(1).copied().unwrap_or("0");
                if !(v == "2.2" || v == "4.1") {
                    return Err(MeshError::UnsupportedFormatVersion(v.to_string()));
                }
                if file_type != "0" {
                    return Err(MeshError::UnsupportedFormatVersion(format!("{v} binary")));
                }
                version = Some(v.to_string());
                lines.skip_section("MeshFormat")?;
            }
            "$PhysicalNames" => {
                let _count: usize = lines.next_one()?;
                loop {
                    let l = lines.expect("$EndPhysicalNames")?;
                    if l == "$EndPhysicalNames" {
                        break;
                    }
                    let mut it = l.splitn(3, char::is_whitespace);
                    let dim: usize = parse_tok(&lines, it.next())?;
                    let tag: i64 = parse_tok(&lines, it.next())?;
                    let name = it.next().unwrap_or("").trim().trim_matches('"').to_string();
                    c.names.insert((dim, tag), name);
                }
            }
            "$Entities" => {
                require_version(&version, "4.1", &lines)?;
                read_entities(&mut lines, &mut c)?;
            }
            "$Nodes" => match version.as_deref() {
                Some("2.2") => read_nodes_22(&mut lines, &mut c)?,
                Some("4.1") => read_nodes_41(&mut lines, &mut c)?,
                _ => return Err(lines.err("$Nodes before $MeshFormat")),
            },
            "$Elements" => match version.as_deref() {
                Some("2.2") => read_elements_22(&mut lines, &mut c)?,
                Some("4.1") => read_elements_41(&mut lines, &mut c)?,
                _ => return Err(lines.err("$Elements before $MeshFormat")),
            },
            other if other.starts_with('$') && !other.starts_with("$End") => {
                let name = other[1..].to_string();
                lines.skip_section(&name)?;
            }
            other => return Err(lines.err(format!("unexpected line '{other}'"))),
        }
    }
    let version = version.ok_or_else(|| MeshError::UnsupportedFormatVersion("missing $MeshFormat".into()))?;
    if c.nodes.len() != c.declared_nodes {
        return Err(MeshError::Parse {
            line: 0,
            msg: format!("declared {} nodes, read {}", c.declared_nodes, c.nodes.len()),
        });
    }
    finish(c, version)
}

fn parse_one<N: std::str::FromStr>(lines: &Lines, l: &str) -> Result<N, MeshError> {
    l.trim().parse().map_err(|_| lines.err(format!("bad number '{l}'")))
}

fn parse_tok<N: std::str::FromStr>(lines: &Lines, t: Option<&str>) -> Result<N, MeshError> {
    let t = t.ok_or_else(|| lines.err("missing field"))?;
    t.trim().parse().map_err(|_| lines.err(format!("bad number '{t}'")))
}

fn require_version(v: &Option<String>, want: &str, lines: &Lines) -> Result<(), MeshError> {
    if v.as_deref() == Some(want) {
        Ok(())
    } else {
        Err(lines.err(format!("section only valid in MSH {want}")))
    }
}

fn read_entities(lines: &mut Lines, c: &mut Collected) -> Result<(), MeshError> {
    let counts: Vec<usize> = lines.next_numbers()?;
    if counts.len() < 4 {
        return Err(lines.err("entity counts need 4 fields"));
    }
    for (dim, &n) in counts.iter().enumerate().take(4) {
        for _ in 0..n {
            let l = lines.expect("entity")?;
            let f: Vec<f64> = lines.numbers(l)?;
            // points: tag x y z nphys tags; others: tag 6 bbox values nphys tags ...
            let nphys_at = if dim == 0 { 4 } else { 7 };
            let nphys = *f.get(nphys_at).ok_or_else(|| lines.err("short entity line"))? as usize;
            let tags = f
                .get(nphys_at + 1..nphys_at + 1 + nphys)
                .ok_or_else(|| lines.err("short entity line"))?
                .iter()
                .map(|t| *t as i64)
                .collect();
            c.entities.insert((dim, f[0] as i64), tags);
        }
    }
    lines.skip_section("Entities")
}

fn read_nodes_22(lines: &mut Lines, c: &mut Collected) -> Result<(), MeshError> {
    c.declared_nodes = lines.next_one()?;
    for _ in 0..c.declared_nodes {
        let l = lines.expect("node")?;
        let f: Vec<f64> = lines.numbers(l)?;
        if f.len() < 3 {
            return Err(lines.err("node line needs id x y"));
        }
        c.nodes.insert(f[0] as usize, [f[1], f[2]]);
    }
    lines.skip_section("Nodes")
}

fn read_nodes_41(lines: &mut Lines, c: &mut Collected) -> Result<(), MeshError> {
    let h: Vec<usize> = lines.next_numbers()?;
    if h.len() < 4 {
        return Err(lines.err("node header needs 4 fields"));
    }
    let (blocks, total) = (h[0], h[1]);
    c.declared_nodes = total;
    for _ in 0..blocks {
        let b: Vec<usize> = lines.next_numbers()?;
        if b.len() < 4 {
            return Err(lines.err("node block header needs 4 fields"));
        }
        let (parametric, n) = (b[2] != 0, b[3]);
        let mut tags = Vec::with_capacity(n);
        for _ in 0..n {
            tags.push(lines.next_one::<usize>()?);
        }
        for tag in tags {
            let f: Vec<f64> = lines.next_numbers()?;
            if f.len() < 3 || (parametric && f.len() < 4) {
                return Err(lines.err("short node coordinate line"));
            }
            c.nodes.insert(tag, [f[0], f[1]]);
        }
    }
    lines.skip_section("Nodes")
}

fn push_element(
    lines: &Lines,
    c: &mut Collected,
    id: usize,
    etype: usize,
    physical: Option<i64>,
    nodes: &[usize],
) -> Result<(), MeshError> {
    let need = match etype {
        1 => 2,
        2 => 3,
        15 => 1,
        other => return Err(lines.err(format!("unsupported element type {other}"))),
    };
    if nodes.len() < need {
        return Err(lines.err(format!("element {id} has too few nodes")));
    }
    match etype {
        1 => c.lines.push(([nodes[0], nodes[1]], physical)),
        2 => c.triangles.push((id, [nodes[0], nodes[1], nodes[2]])),
        _ => {}
    }
    Ok(())
}

fn read_elements_22(lines: &mut Lines, c: &mut Collected) -> Result<(), MeshError> {
    let n: usize = lines.next_one()?;
    for _ in 0..n {
        let f: Vec<usize> = lines.next_numbers()?;
        if f.len() < 3 {
            return Err(lines.err("element line too short"));
        }
        let (id, etype, ntags) = (f[0], f[1], f[2]);
        let physical = if ntags > 0 { f.get(3).map(|&t| t as i64) } else { None };
        let nodes = f.get(3 + ntags..).ok_or_else(|| lines.err("element line too short"))?;
        push_element(lines, c, id, etype, physical, nodes)?;
    }
    lines.skip_section("Elements")
}

fn read_elements_41(lines: &mut Lines, c: &mut Collected) -> Result<(), MeshError> {
    let h: Vec<usize> = lines.next_numbers()?;
    if h.len() < 4 {
        return Err(lines.err("element header needs 4 fields"));
    }
    for _ in 0..h[0] {
        let b: Vec<i64> = lines.next_numbers()?;
        if b.len() < 4 {
            return Err(lines.err("element block header needs 4 fields"));
        }
        let (dim, entity, etype, n) = (b[0] as usize, b[1], b[2] as usize, b[3] as usize);
        let physical = c
            .entities
            .get(&(dim, entity))
            .and_then(|tags| tags.iter().find(|t| c.names.contains_key(&(dim, **t))).or(tags.first()))
            .copied();
        for _ in 0..n {
            let f: Vec<usize> = lines.next_numbers()?;
            let (id, nodes) = f.split_first().ok_or_else(|| lines.err("empty element line"))?;
            push_element(lines, c, *id, etype, physical, nodes)?;
        }
    }
    lines.skip_section("Elements")
}

fn finish(c: Collected, version: String) -> Result<RawMesh, MeshError> {
    let mut index: HashMap<usize, usize> = HashMap::new();
    let mut nodes = Vec::new();
    let mut triangles = Vec::with_capacity(c.triangles.len());
    // Nodes are numbered in order of first use by a triangle, visiting node
    // ids in ascending order when the file lists them sorted.
    let mut ids: Vec<usize> = c.triangles.iter().flat_map(|(_, t)| t.iter().copied()).collect();
    ids.sort_unstable();
    ids.dedup();
    for (eid, t) in &c.triangles {
        for &n in t {
            if !c.nodes.contains_key(&n) {
                return Err(MeshError::MissingNode { element: *eid, node: n });
            }
        }
    }
    for id in ids {
        index.insert(id, nodes.len());
        nodes.push(c.nodes[&id]);
    }
    for (_, t) in &c.triangles {
        triangles.push([index[&t[0]], index[&t[1]], index[&t[2]]]);
    }
    let lines = c
        .lines
        .iter()
        .filter_map(|(e, phys)| {
            let a = *index.get(&e[0])?;
            let b = *index.get(&e[1])?;
            let name = phys.and_then(|p| c.names.get(&(1, p)).cloned());
            Some(([a, b], name))
        })
        .collect();
    Ok(RawMesh {
        nodes,
        triangles,
        lines,
        version,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL_22: &str = r#"$MeshFormat
2.2 0 8
$EndMeshFormat
$PhysicalNames
2
1 1 "outer"
2 2 "domain"
$EndPhysicalNames
$Nodes
3
1 0 0 0
2 1 0 0
3 0 1 0
$EndNodes
$Elements
4
1 1 2 1 1 1 2
2 1 2 1 1 2 3
3 1 2 1 1 3 1
4 2 2 2 1 1 2 3
$EndElements
"#;

    #[test]
    fn minimal_22_mesh() {
        let raw = parse_msh(MINIMAL_22).unwrap();
        assert_eq!(raw.nodes.len(), 3);
        assert_eq!(raw.triangles.len(), 1);
        let m: Mesh<f64> = Mesh::new(
            raw.nodes.clone(),
            raw.triangles.clone(),
            raw.classify_boundary(&BoundaryGroups::default()).unwrap(),
        )
        .unwrap();
        assert_eq!(m.num_nodes(), 3);
        assert_eq!(m.num_triangles(), 1);
        assert_eq!(m.boundary_edges().len(), 3);
    }

    #[test]
    fn missing_node_reference() {
        let bad = MINIMAL_22.replace("4 2 2 2 1 1 2 3", "4 2 2 2 1 1 2 99");
        assert!(matches!(
            parse_msh(&bad),
            Err(MeshError::MissingNode { node: 99, .. })
        ));
    }

    #[test]
    fn rejects_other_versions_and_binary() {
        let v3 = MINIMAL_22.replace("2.2 0 8", "3.0 0 8");
        assert!(matches!(parse_msh(&v3), Err(MeshError::UnsupportedFormatVersion(_))));
        let bin = MINIMAL_22.replace("2.2 0 8", "2.2 1 8");
        assert!(matches!(parse_msh(&bin), Err(MeshError::UnsupportedFormatVersion(_))));
    }

    #[test]
    fn unnamed_boundary_line_is_untagged() {
        let bad = MINIMAL_22.replace("3 1 2 1 1 3 1", "3 1 2 7 1 3 1");
        let raw = parse_msh(&bad).unwrap();
        assert!(matches!(
            raw.classify_boundary(&BoundaryGroups::default()),
            Err(MeshError::UntaggedBoundaryEdge(..))
        ));
    }

    #[test]
    fn minimal_41_mesh() {
        let text = r#"$MeshFormat
4.1 0 8
$EndMeshFormat
$PhysicalNames
2
1 5 "outer"
2 6 "domain"
$EndPhysicalNames
$Entities
0 1 1 0
1 0 0 0 1 1 0 1 5 0
1 0 0 0 1 1 0 1 6 1 1
$EndEntities
$Nodes
1 3 1 3
2 1 0 3
1
2
3
0 0 0
1 0 0
0 1 0
$EndNodes
$Elements
2 4 1 4
1 1 1 3
1 1 2
2 2 3
3 3 1
2 1 2 1
4 1 2 3
$EndElements
"#;
        let raw = parse_msh(text).unwrap();
        assert_eq!(raw.version, "4.1");
        assert_eq!(raw.nodes.len(), 3);
        assert_eq!(raw.triangles.len(), 1);
        let tags = raw.classify_boundary(&BoundaryGroups::default()).unwrap();
        assert!(tags.iter().all(|(_, t)| *t == BoundaryTag::Outer));
    }

    #[test]
    fn group_patterns() {
        let g = BoundaryGroups::default();
        assert_eq!(g.classify("outer"), Some(BoundaryTag::Outer));
        assert_eq!(g.classify("wall_golf"), Some(BoundaryTag::Wall));
        assert_eq!(g.classify("walls"), Some(BoundaryTag::Wall));
        assert_eq!(g.classify("domain"), None);
    }
}
