use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;

use super::Triangulation;
use crate::error::{Error, Result};
use crate::geometry::BoundaryChart;
use crate::Vec2;

const BOUNDARY_NAME: &str = "boundary";
const LINE: usize = 1;
const TRIANGLE: usize = 2;
const POINT: usize = 15;
/// Gmsh element types of dimension two other than the 3-node triangle.
const OTHER_2D: [usize; 12] = [3, 9, 10, 16, 20, 21, 22, 23, 24, 25, 36, 37];

fn err(msg: impl Into<String>) -> Error {
    Error::Gmsh(msg.into())
}

#[derive(Clone, Copy, PartialEq)]
enum Version {
    V22,
    V41,
}

struct Sections<'a> {
    map: HashMap<&'a str, Vec<&'a str>>,
}

impl<'a> Sections<'a> {
    fn parse(text: &'a str) -> Result<Self> {
        let mut map = HashMap::new();
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        while let Some(line) = lines.next() {
            let Some(name) = line.strip_prefix('$') else {
                return Err(err(format!("unexpected line outside a section: `{line}`")));
            };
            let (name, inline) = match name.split_once(char::is_whitespace) {
                Some((n, rest)) => (n, Some(rest.trim())),
                None => (name, None),
            };
            let end = format!("$End{name}");
            let mut body: Vec<&str> = inline.into_iter().collect();
            loop {
                match lines.next() {
                    Some(l) if l == end => break,
                    Some(l) => body.push(l),
                    None if name.ends_with("Format") => break,
                    None => return Err(err(format!("section ${name} is not terminated"))),
                }
            }
            map.insert(name, body);
        }
        Ok(Self { map })
    }

    fn get(&self, name: &str) -> Option<&[&'a str]> {
        self.map.get(name).map(Vec::as_slice)
    }

    fn require(&self, name: &str) -> Result<&[&'a str]> {
        self.get(name).ok_or_else(|| err(format!("missing ${name} section")))
    }

    fn version(&self) -> Result<Version> {
        let header = self
            .get("MeshFormat")
            .or_else(|| self.get("MshFormat"))
            .ok_or_else(|| err("missing $MeshFormat section"))?;
        let first = header.first().ok_or_else(|| err("empty $MeshFormat section"))?;
        let mut tokens = first.split_whitespace();
        let version = tokens.next().unwrap_or("");
        let file_type = tokens.next().unwrap_or("0");
        if file_type != "0" {
            return Err(err("binary MSH files are not supported"));
        }
        match version {
            "2.2" => Ok(Version::V22),
            "4.1" => Ok(Version::V41),
            v => Err(err(format!("unsupported MSH version {v} (expected 2.2 or 4.1)"))),
        }
    }
}

struct Tokens<'a> {
    inner: Box<dyn Iterator<Item = &'a str> + 'a>,
    section: &'static str,
}

impl<'a> Tokens<'a> {
    fn new(lines: &'a [&'a str], section: &'static str) -> Self {
        Self {
            inner: Box::new(lines.iter().flat_map(|l| l.split_whitespace())),
            section,
        }
    }

    fn next<T: std::str::FromStr>(&mut self) -> Result<T> {
        let token = self
            .inner
            .next()
            .ok_or_else(|| err(format!("${} ended early", self.section)))?;
        token
            .parse()
            .map_err(|_| err(format!("bad token `{token}` in ${}", self.section)))
    }
}

/// Boundary physical tags, or `None` if the file names no physical groups.
fn boundary_physicals(sections: &Sections) -> Result<Option<HashSet<i64>>> {
    let Some(lines) = sections.get("PhysicalNames") else {
        return Ok(None);
    };
    let mut tags = HashSet::new();
    for line in lines.iter().skip(1) {
        let mut parts = line.splitn(3, char::is_whitespace);
        let dim: i64 = parts.next().and_then(|s| s.parse().ok()).ok_or_else(|| err("bad $PhysicalNames entry"))?;
        let tag: i64 = parts.next().and_then(|s| s.parse().ok()).ok_or_else(|| err("bad $PhysicalNames entry"))?;
        let name = parts.next().unwrap_or("").trim().trim_matches('"');
        if dim == 1 && name == BOUNDARY_NAME {
            tags.insert(tag);
        }
    }
    Ok(Some(tags))
}

struct RawMesh {
    nodes: BTreeMap<u64, Vec2>,
    triangles: Vec<[u64; 3]>,
    lines: Vec<[u64; 2]>,
}

fn classify(kind: usize, dim_hint: Option<usize>) -> Result<()> {
    match kind {
        LINE | TRIANGLE | POINT => Ok(()),
        k if OTHER_2D.contains(&k) || dim_hint == Some(2) => {
            Err(err(format!("non-triangle 2D cell of type {k}; only 3-node triangles are supported")))
        }
        k => Err(err(format!("unsupported element type {k}"))),
    }
}

fn parse_v22(sections: &Sections, boundary: &Option<HashSet<i64>>) -> Result<RawMesh> {
    let mut tok = Tokens::new(sections.require("Nodes")?, "Nodes");
    let n: usize = tok.next()?;
    let mut nodes = BTreeMap::new();
    for _ in 0..n {
        let tag: u64 = tok.next()?;
        let x: f64 = tok.next()?;
        let y: f64 = tok.next()?;
        let _z: f64 = tok.next()?;
        nodes.insert(tag, Vec2::new(x, y));
    }

    let elements = sections.require("Elements")?;
    let mut triangles = Vec::new();
    let mut lines = Vec::new();
    for line in elements.iter().skip(1) {
        let fields: Vec<u64> = line
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| err(format!("bad element line `{line}`"))))
            .collect::<Result<_>>()?;
        if fields.len() < 3 {
            return Err(err(format!("short element line `{line}`")));
        }
        let kind = fields[1] as usize;
        let ntags = fields[2] as usize;
        classify(kind, None)?;
        let physical = fields.get(3).map(|&p| p as i64);
        let conn = fields.get(3 + ntags..).unwrap_or(&[]);
        match kind {
            TRIANGLE if conn.len() == 3 => triangles.push([conn[0], conn[1], conn[2]]),
            LINE if conn.len() == 2 => {
                let keep = match boundary {
                    None => true,
                    Some(set) => physical.is_some_and(|p| set.contains(&p)),
                };
                if keep {
                    lines.push([conn[0], conn[1]]);
                }
            }
            POINT => {}
            _ => return Err(err(format!("wrong node count in element line `{line}`"))),
        }
    }
    Ok(RawMesh { nodes, triangles, lines })
}

fn parse_v41(sections: &Sections, boundary: &Option<HashSet<i64>>) -> Result<RawMesh> {
    // curve entity tag → physical tags
    let mut curve_physicals: HashMap<i64, Vec<i64>> = HashMap::new();
    if let Some(entities) = sections.get("Entities") {
        let mut tok = Tokens::new(entities, "Entities");
        let counts: [usize; 4] = [tok.next()?, tok.next()?, tok.next()?, tok.next()?];
        for _ in 0..counts[0] {
            let _tag: i64 = tok.next()?;
            for _ in 0..3 {
                tok.next::<f64>()?;
            }
            let np: usize = tok.next()?;
            for _ in 0..np {
                tok.next::<i64>()?;
            }
        }
        for dim in 1..4 {
            for _ in 0..counts[dim] {
                let tag: i64 = tok.next()?;
                for _ in 0..6 {
                    tok.next::<f64>()?;
                }
                let np: usize = tok.next()?;
                let phys = (0..np).map(|_| tok.next::<i64>()).collect::<Result<Vec<_>>>()?;
                let nb: usize = tok.next()?;
                for _ in 0..nb {
                    tok.next::<i64>()?;
                }
                if dim == 1 {
                    curve_physicals.insert(tag, phys);
                }
            }
        }
    }

    let mut tok = Tokens::new(sections.require("Nodes")?, "Nodes");
    let blocks: usize = tok.next()?;
    let _total: usize = tok.next()?;
    let _min: u64 = tok.next()?;
    let _max: u64 = tok.next()?;
    let mut nodes = BTreeMap::new();
    for _ in 0..blocks {
        let dim: usize = tok.next()?;
        let _entity: i64 = tok.next()?;
        let parametric: usize = tok.next()?;
        let count: usize = tok.next()?;
        let tags = (0..count).map(|_| tok.next::<u64>()).collect::<Result<Vec<_>>>()?;
        for tag in tags {
            let x: f64 = tok.next()?;
            let y: f64 = tok.next()?;
            let _z: f64 = tok.next()?;
            for _ in 0..parametric * dim {
                tok.next::<f64>()?;
            }
            nodes.insert(tag, Vec2::new(x, y));
        }
    }

    let elements = sections.require("Elements")?;
    let mut rows = elements.iter();
    rows.next().ok_or_else(|| err("empty $Elements section"))?;
    let mut triangles = Vec::new();
    let mut lines = Vec::new();
    while let Some(header) = rows.next() {
        let h: Vec<i64> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| err(format!("bad element block header `{header}`"))))
            .collect::<Result<_>>()?;
        let [dim, entity, kind, count] = h[..] else {
            return Err(err(format!("bad element block header `{header}`")));
        };
        classify(kind as usize, Some(dim as usize))?;
        let keep_lines = match boundary {
            None => true,
            Some(set) => match curve_physicals.get(&entity) {
                Some(phys) => phys.iter().any(|p| set.contains(p)),
                None => sections.get("Entities").is_none(),
            },
        };
        for _ in 0..count {
            let row = rows.next().ok_or_else(|| err("$Elements ended early"))?;
            let ids: Vec<u64> = row
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| err(format!("bad element line `{row}`"))))
                .collect::<Result<_>>()?;
            match (kind as usize, ids.len()) {
                (TRIANGLE, 4) => triangles.push([ids[1], ids[2], ids[3]]),
                (LINE, 3) => {
                    if keep_lines {
                        lines.push([ids[1], ids[2]]);
                    }
                }
                (POINT, 2) => {}
                _ => return Err(err(format!("wrong node count in element line `{row}`"))),
            }
        }
    }
    Ok(RawMesh { nodes, triangles, lines })
}

/// Reads an ASCII Gmsh mesh (format 2.2 or 4.1).
///
/// Only nodes referenced by triangles are kept, numbered in increasing tag
/// order. Lines in the physical group `"boundary"` must cover exactly the
/// topological boundary. With a chart, boundary vertices are projected onto
/// it and must move by at most `1e-6·h`.
pub fn read_gmsh(text: &str, chart: Option<&BoundaryChart>) -> Result<Triangulation> {
    let sections = Sections::parse(text)?;
    let version = sections.version()?;
    let boundary = boundary_physicals(&sections)?;
    let raw = match version {
        Version::V22 => parse_v22(&sections, &boundary)?,
        Version::V41 => parse_v41(&sections, &boundary)?,
    };
    if raw.triangles.is_empty() {
        return Err(err("no triangles in file"));
    }

    let used: BTreeSet<u64> = raw.triangles.iter().flatten().copied().collect();
    let mut index = HashMap::new();
    let mut vertices = Vec::with_capacity(used.len());
    for tag in used {
        let x = *raw
            .nodes
            .get(&tag)
            .ok_or_else(|| err(format!("element references missing node {tag}")))?;
        index.insert(tag, vertices.len());
        vertices.push(x);
    }
    let triangles = raw.triangles.iter().map(|t| t.map(|n| index[&n])).collect();
    let nv = vertices.len();
    let mesh = Triangulation::new(vertices, triangles, vec![None; nv])?;

    let topological: HashSet<[usize; 2]> = mesh
        .boundary_edges
        .iter()
        .map(|&e| mesh.edges[e].vertices)
        .collect();
    if !raw.lines.is_empty() {
        let mut covered = HashSet::new();
        for line in &raw.lines {
            let ends = line.map(|n| index.get(&n).copied());
            let (Some(a), Some(b)) = (ends[0], ends[1]) else {
                return Err(err(format!("dangling boundary line {line:?}: node not in any triangle")));
            };
            let key = [a.min(b), a.max(b)];
            if !topological.contains(&key) {
                return Err(err(format!("dangling boundary line {line:?}: not a boundary edge")));
            }
            covered.insert(key);
        }
        if covered.len() != topological.len() {
            return Err(err("some boundary edges carry no boundary line"));
        }
    }

    let Some(chart) = chart else { return Ok(mesh) };
    let allowed = 1e-6 * mesh.h;
    let mut vertices = mesh.vertices.clone();
    let mut params = vec![None; nv];
    let mut done = vec![false; nv];
    for key in &topological {
        for &v in key {
            if done[v] {
                continue;
            }
            done[v] = true;
            let p = chart.project(vertices[v], None)?;
            let distance = (p.x - vertices[v]).norm();
            if distance > allowed {
                return Err(Error::ProjectionDistance { vertex: v, distance, allowed });
            }
            vertices[v] = p.x;
            params[v] = Some(p.t);
        }
    }
    Triangulation::new(vertices, mesh.triangles, params)
}

/// Writes a mesh as MSH 2.2 with boundary lines in the physical group
/// `"boundary"` (tag 1) and triangles in `"domain"` (tag 2).
pub fn write_gmsh22(mesh: &Triangulation) -> String {
    let mut s = String::new();
    s.push_str("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n");
    s.push_str("$PhysicalNames\n2\n1 1 \"boundary\"\n2 2 \"domain\"\n$EndPhysicalNames\n");
    let _ = writeln!(s, "$Nodes\n{}", mesh.n_vertices());
    for (i, x) in mesh.vertices.iter().enumerate() {
        let _ = writeln!(s, "{} {:.17e} {:.17e} 0", i + 1, x.x, x.y);
    }
    s.push_str("$EndNodes\n");
    let n = mesh.boundary_edges.len() + mesh.n_triangles();
    let _ = writeln!(s, "$Elements\n{n}");
    let mut id = 1;
    for &e in &mesh.boundary_edges {
        let [a, b] = mesh.edges[e].vertices;
        let _ = writeln!(s, "{id} 1 2 1 1 {} {}", a + 1, b + 1);
        id += 1;
    }
    for tri in &mesh.triangles {
        let _ = writeln!(s, "{id} 2 2 2 1 {} {} {}", tri[0] + 1, tri[1] + 1, tri[2] + 1);
        id += 1;
    }
    s.push_str("$EndElements\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_builtin_chart;
    use crate::mesh::generate_disk_mesh;

    const SQUARE_22: &str = "\
$MeshFormat
2.2 0 8
$EndMeshFormat
$PhysicalNames
2
1 1 \"boundary\"
2 2 \"domain\"
$EndPhysicalNames
$Nodes
4
1 0 0 0
2 1 0 0
3 1 1 0
4 0 1 0
$EndNodes
$Elements
6
1 1 2 1 1 1 2
2 1 2 1 1 2 3
3 1 2 1 1 3 4
4 1 2 1 1 4 1
5 2 2 2 1 1 2 3
6 2 2 2 1 1 3 4
$EndElements
";

    const SQUARE_41: &str = "\
$MeshFormat
4.1 0 8
$EndMeshFormat
$PhysicalNames
2
1 7 \"boundary\"
2 9 \"domain\"
$EndPhysicalNames
$Entities
0 1 1 0
1 0 0 0 1 1 0 1 7 0
1 0 0 0 1 1 0 1 9 1 1
$EndEntities
$Nodes
2 4 10 70
2 1 0 2
10
30
0 0 0
1 0 0
2 1 0 2
50
70
1 1 0
0 1 0
$EndNodes
$Elements
2 6 1 6
1 1 1 4
1 10 30
2 30 50
3 50 70
4 70 10
2 1 2 2
5 10 30 50
6 10 50 70
$EndElements
";

    #[test]
    fn square_v22() {
        let m = read_gmsh(SQUARE_22, None).unwrap();
        assert_eq!(m.n_triangles(), 2);
        assert_eq!(m.n_edges(), 5);
    }

    #[test]
    fn square_v41_matches_v22() {
        let a = read_gmsh(SQUARE_22, None).unwrap();
        let b = read_gmsh(SQUARE_41, None).unwrap();
        assert_eq!(a.vertices, b.vertices);
        assert_eq!(a.triangles, b.triangles);
        assert_eq!(a.edges, b.edges);
    }

    #[test]
    fn unsupported_version() {
        let text = "$MshFormat 3.0 0 8\n$EndMshFormat\n";
        let e = read_gmsh(text, None).unwrap_err();
        assert!(e.to_string().contains("unsupported MSH version 3.0"), "{e}");
        let text = SQUARE_22.replace("2.2 0 8", "3.0 0 8");
        assert!(read_gmsh(&text, None).is_err());
    }

    #[test]
    fn quads_rejected() {
        let text = SQUARE_22
            .replace("6\n1 1 2", "7\n1 1 2")
            .replace("$EndElements", "7 3 2 2 1 1 2 3 4\n$EndElements");
        let e = read_gmsh(&text, None).unwrap_err();
        assert!(e.to_string().contains("non-triangle"), "{e}");
    }

    #[test]
    fn dangling_line_rejected() {
        // the diagonal 1–3 is interior
        let text = SQUARE_22
            .replace("6\n1 1 2", "7\n1 1 2")
            .replace("$EndElements", "7 1 2 1 1 1 3\n$EndElements");
        let e = read_gmsh(&text, None).unwrap_err();
        assert!(e.to_string().contains("dangling"), "{e}");
    }

    #[test]
    fn disk_round_trip_and_wrong_chart() {
        let circle = make_builtin_chart("circle").unwrap();
        let disk = generate_disk_mesh(&circle, 0.5).unwrap();
        let text = write_gmsh22(&disk);
        let back = read_gmsh(&text, Some(&circle)).unwrap();
        assert_eq!(back.n_triangles(), disk.n_triangles());
        back.check_on_chart(&circle, 1e-12).unwrap();
        let leaf = make_builtin_chart("three_leaf").unwrap();
        assert!(matches!(
            read_gmsh(&text, Some(&leaf)),
            Err(Error::ProjectionDistance { .. })
        ));
    }
}
