//! Conforming triangulations of simply connected polygons.
//!
//! Edges are globally oriented from the lower to the higher vertex index.
//! The unit tangent `t_e` follows that orientation and the unit normal is
//! `n_e = (t_y, -t_x)`. For an interior edge the *left* cell is the one for
//! which `n_e` points outward; jumps are always `left - right`.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt::Write as _;
use std::io::BufRead;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VertexClass {
    Interior,
    Boundary,
    Corner,
}

impl VertexClass {
    pub fn on_boundary(self) -> bool {
        !matches!(self, VertexClass::Interior)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pattern {
    /// Diagonals alternate direction in a checkerboard.
    Diagonal,
    /// Every square is cut along the same diagonal, giving three families of
    /// parallel lines.
    ThreeDirectional,
}

impl std::str::FromStr for Pattern {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "diagonal" => Ok(Pattern::Diagonal),
            "three-directional" => Ok(Pattern::ThreeDirectional),
            other => Err(Error::InvalidArgument(format!("unknown pattern {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl Rect {
    pub const UNIT: Rect = Rect { xmin: 0.0, xmax: 1.0, ymin: 0.0, ymax: 1.0 };
}

/// Affine data of one cell.
#[derive(Clone, Copy, Debug)]
pub struct CellGeometry {
    pub vertices: [[f64; 2]; 3],
    pub area: f64,
    /// Gradients of the barycentric coordinates.
    pub grad_lambda: [[f64; 2]; 3],
}

impl CellGeometry {
    /// Fails for a degenerate or clockwise triangle.
    pub fn new(vertices: [[f64; 2]; 3]) -> Option<Self> {
        let [a, b, c] = vertices;
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        let scale = dist(a, b).max(dist(b, c)).max(dist(c, a));
        if !(det > 1e-14 * scale * scale) {
            return None;
        }
        let area = 0.5 * det;
        let mut grad_lambda = [[0.0; 2]; 3];
        for i in 0..3 {
            let p = vertices[(i + 1) % 3];
            let q = vertices[(i + 2) % 3];
            grad_lambda[i] = [(p[1] - q[1]) / det, (q[0] - p[0]) / det];
        }
        Some(Self { vertices, area, grad_lambda })
    }

    /// Physical point of a barycentric coordinate triple.
    pub fn point(&self, b: [f64; 3]) -> [f64; 2] {
        let v = &self.vertices;
        [
            b[0] * v[0][0] + b[1] * v[1][0] + b[2] * v[2][0],
            b[0] * v[0][1] + b[1] * v[1][1] + b[2] * v[2][1],
        ]
    }

    /// Edge `k` joins local vertices `k+1` and `k+2`.
    pub fn edge_length(&self, k: usize) -> f64 {
        dist(self.vertices[(k + 1) % 3], self.vertices[(k + 2) % 3])
    }

    pub fn diameter(&self) -> f64 {
        (0..3).map(|k| self.edge_length(k)).fold(0.0, f64::max)
    }

    pub fn inradius(&self) -> f64 {
        2.0 * self.area / (0..3).map(|k| self.edge_length(k)).sum::<f64>()
    }

    /// Outward unit normal of local edge `k` (opposite vertex `k`).
    pub fn outward_normal(&self, k: usize) -> [f64; 2] {
        let g = self.grad_lambda[k];
        let n = g[0].hypot(g[1]);
        [-g[0] / n, -g[1] / n]
    }

    /// `x_2 - x_1` and `x_3 - x_1`: the columns of the reference map.
    pub fn jacobian_columns(&self) -> [[f64; 2]; 2] {
        let v = &self.vertices;
        [[v[1][0] - v[0][0], v[1][1] - v[0][1]], [v[2][0] - v[0][0], v[2][1] - v[0][1]]]
    }
}

pub(crate) fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

#[derive(Clone, Debug)]
pub struct Triangulation {
    pub vertices: Vec<[f64; 2]>,
    /// Counterclockwise vertex triples.
    pub cells: Vec<[usize; 3]>,
    /// Vertex pairs `(lo, hi)`, `lo < hi`.
    pub edges: Vec<[usize; 2]>,
    /// Per cell, local edge `k` (opposite local vertex `k`) as `(edge id, sign)`;
    /// the sign is `+1` when the counterclockwise traversal agrees with the
    /// global orientation.
    pub cell_edges: Vec<[(usize, i8); 3]>,
    /// Per edge, incident cells: left cell first for interior edges.
    pub edge_cells: Vec<Vec<usize>>,
    pub vertex_class: Vec<VertexClass>,
    /// 0 on the boundary, breadth-first distance through interior edges otherwise.
    pub vertex_level: Vec<usize>,
    pub h_max: f64,
    pub shape_reg: f64,
    vertex_cells: Vec<Vec<usize>>,
    vertex_edges: Vec<Vec<usize>>,
    boundary_vertex_normal: Vec<Option<[f64; 2]>>,
    geometry: Vec<CellGeometry>,
}

impl Triangulation {
    /// Validate a vertex/cell list and derive all connectivity.
    /// Clockwise cells are reoriented.
    pub fn from_cells(vertices: Vec<[f64; 2]>, cells: Vec<[usize; 3]>) -> Result<Self> {
        let nv = vertices.len();
        let mut cells = cells;
        let mut seen = HashSet::new();
        let mut referenced = vec![false; nv];
        for (c, cell) in cells.iter_mut().enumerate() {
            for &v in cell.iter() {
                if v >= nv {
                    return Err(Error::VertexOutOfRange { index: v, count: nv });
                }
                referenced[v] = true;
            }
            let mut key = *cell;
            key.sort_unstable();
            if key[0] == key[1] || key[1] == key[2] {
                return Err(Error::DegenerateCell(c));
            }
            if !seen.insert(key) {
                return Err(Error::DuplicateCell(c));
            }
            let [a, b, d] = cell.map(|i| vertices[i]);
            let det = (b[0] - a[0]) * (d[1] - a[1]) - (d[0] - a[0]) * (b[1] - a[1]);
            if det < 0.0 {
                cell.swap(1, 2);
            }
        }
        if let Some(v) = referenced.iter().position(|r| !r) {
            return Err(Error::DanglingVertex(v));
        }

        let mut geometry = Vec::with_capacity(cells.len());
        for (c, cell) in cells.iter().enumerate() {
            let g = CellGeometry::new(cell.map(|i| vertices[i])).ok_or(Error::DegenerateCell(c))?;
            geometry.push(g);
        }

        let mut edge_index: HashMap<[usize; 2], usize> = HashMap::new();
        let mut edges = Vec::new();
        let mut edge_cells: Vec<Vec<(usize, i8)>> = Vec::new();
        let mut cell_edges = Vec::with_capacity(cells.len());
        for (c, cell) in cells.iter().enumerate() {
            let mut local = [(0usize, 0i8); 3];
            for (k, slot) in local.iter_mut().enumerate() {
                let p = cell[(k + 1) % 3];
                let q = cell[(k + 2) % 3];
                let (key, sign) = if p < q { ([p, q], 1i8) } else { ([q, p], -1i8) };
                let id = *edge_index.entry(key).or_insert_with(|| {
                    edges.push(key);
                    edge_cells.push(Vec::new());
                    edges.len() - 1
                });
                edge_cells[id].push((c, sign));
                *slot = (id, sign);
            }
            cell_edges.push(local);
        }
        for (e, inc) in edge_cells.iter_mut().enumerate() {
            if inc.len() > 2 {
                return Err(Error::NonManifoldEdge(edges[e][0], edges[e][1]));
            }
            if inc.len() == 2 && inc[0].1 == inc[1].1 {
                // both cells traverse the edge the same way: inconsistent orientation
                return Err(Error::NonManifoldEdge(edges[e][0], edges[e][1]));
            }
            inc.sort_by_key(|&(_, s)| -s);
        }
        let edge_cells: Vec<Vec<usize>> =
            edge_cells.into_iter().map(|inc| inc.into_iter().map(|(c, _)| c).collect()).collect();

        let euler = nv as i64 - edges.len() as i64 + cells.len() as i64;
        if euler != 1 {
            return Err(Error::NotSimplyConnected(euler));
        }

        let mut vertex_cells = vec![Vec::new(); nv];
        for (c, cell) in cells.iter().enumerate() {
            for &v in cell {
                vertex_cells[v].push(c);
            }
        }
        let mut vertex_edges = vec![Vec::new(); nv];
        for (e, &[a, b]) in edges.iter().enumerate() {
            vertex_edges[a].push(e);
            vertex_edges[b].push(e);
        }

        let h_max = geometry.iter().map(|g| g.diameter()).fold(0.0, f64::max);
        let shape_reg = geometry.iter().map(|g| g.inradius() / g.diameter()).fold(f64::INFINITY, f64::min);

        let mut tri = Triangulation {
            vertices,
            cells,
            edges,
            cell_edges,
            edge_cells,
            vertex_class: vec![VertexClass::Interior; nv],
            vertex_level: vec![0; nv],
            h_max,
            shape_reg,
            vertex_cells,
            vertex_edges,
            boundary_vertex_normal: vec![None; nv],
            geometry,
        };
        tri.classify_vertices();
        tri.classify_levels();
        Ok(tri)
    }

    fn classify_vertices(&mut self) {
        let nv = self.vertices.len();
        let mut bnd_nbrs: Vec<Vec<usize>> = vec![Vec::new(); nv];
        let mut bnd_edge_of: Vec<Vec<usize>> = vec![Vec::new(); nv];
        for e in 0..self.edges.len() {
            if self.is_boundary_edge(e) {
                let [a, b] = self.edges[e];
                bnd_nbrs[a].push(b);
                bnd_nbrs[b].push(a);
                bnd_edge_of[a].push(e);
                bnd_edge_of[b].push(e);
            }
        }
        for v in 0..nv {
            if bnd_nbrs[v].is_empty() {
                continue;
            }
            let x = self.vertices[v];
            let corner = if bnd_nbrs[v].len() != 2 {
                true
            } else {
                let p = self.vertices[bnd_nbrs[v][0]];
                let q = self.vertices[bnd_nbrs[v][1]];
                let d1 = [x[0] - p[0], x[1] - p[1]];
                let d2 = [q[0] - x[0], q[1] - x[1]];
                let l1 = d1[0].hypot(d1[1]);
                let l2 = d2[0].hypot(d2[1]);
                let cross = d1[0] * d2[1] - d1[1] * d2[0];
                let dot = d1[0] * d2[0] + d1[1] * d2[1];
                cross.abs() > 1e-12 * self.h_max * (l1 + l2) / 2.0 * (l1 + l2) / 2.0 / self.h_max || dot <= 0.0
            };
            if corner {
                self.vertex_class[v] = VertexClass::Corner;
            } else {
                self.vertex_class[v] = VertexClass::Boundary;
                self.boundary_vertex_normal[v] = Some(self.outward_edge_normal(bnd_edge_of[v][0]));
            }
        }
    }

    /// Breadth-first levels of interior vertices through interior edges.
    /// Returns the number of levels (0 when there are no interior vertices).
    pub fn classify_levels(&mut self) -> usize {
        let nv = self.vertices.len();
        let mut level = vec![usize::MAX; nv];
        let mut queue = VecDeque::new();
        for v in 0..nv {
            if self.vertex_class[v].on_boundary() {
                level[v] = 0;
                queue.push_back(v);
            }
        }
        while let Some(v) = queue.pop_front() {
            for &e in &self.vertex_edges[v] {
                if self.is_boundary_edge(e) {
                    continue;
                }
                let [a, b] = self.edges[e];
                let w = if a == v { b } else { a };
                if level[w] == usize::MAX {
                    level[w] = level[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        self.vertex_level = level;
        self.number_of_levels()
    }

    pub fn number_of_levels(&self) -> usize {
        self.vertex_level.iter().copied().max().unwrap_or(0)
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_interior_vertices(&self) -> usize {
        self.vertex_class.iter().filter(|c| !c.on_boundary()).count()
    }

    pub fn n_boundary_vertices(&self) -> usize {
        self.n_vertices() - self.n_interior_vertices()
    }

    pub fn n_corners(&self) -> usize {
        self.vertex_class.iter().filter(|&&c| c == VertexClass::Corner).count()
    }

    pub fn n_interior_edges(&self) -> usize {
        self.edge_cells.iter().filter(|c| c.len() == 2).count()
    }

    pub fn n_boundary_edges(&self) -> usize {
        self.n_edges() - self.n_interior_edges()
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.edge_cells[e].len() == 1
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.vertex_class[v].on_boundary()
    }

    pub fn geometry(&self, c: usize) -> &CellGeometry {
        &self.geometry[c]
    }

    pub fn vertex_cells(&self, v: usize) -> &[usize] {
        &self.vertex_cells[v]
    }

    pub fn vertex_edges(&self, v: usize) -> &[usize] {
        &self.vertex_edges[v]
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e];
        dist(self.vertices[a], self.vertices[b])
    }

    pub fn edge_tangent(&self, e: usize) -> [f64; 2] {
        let [a, b] = self.edges[e];
        let (p, q) = (self.vertices[a], self.vertices[b]);
        let l = dist(p, q);
        [(q[0] - p[0]) / l, (q[1] - p[1]) / l]
    }

    /// `n_e = (t_y, -t_x)`.
    pub fn edge_normal(&self, e: usize) -> [f64; 2] {
        let t = self.edge_tangent(e);
        [t[1], -t[0]]
    }

    /// Normal of a boundary edge pointing out of the domain.
    pub fn outward_edge_normal(&self, e: usize) -> [f64; 2] {
        let c = self.edge_cells[e][0];
        let k = self.local_edge_index(c, e).expect("edge not in its cell");
        self.geometry[c].outward_normal(k)
    }

    pub fn edge_midpoint(&self, e: usize) -> [f64; 2] {
        let [a, b] = self.edges[e];
        let (p, q) = (self.vertices[a], self.vertices[b]);
        [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]
    }

    /// Outward unit normal at a non-corner boundary vertex.
    pub fn boundary_vertex_normal(&self, v: usize) -> Option<[f64; 2]> {
        self.boundary_vertex_normal[v]
    }

    pub fn local_edge_index(&self, c: usize, e: usize) -> Option<usize> {
        self.cell_edges[c].iter().position(|&(id, _)| id == e)
    }

    pub fn local_vertex_index(&self, c: usize, v: usize) -> Option<usize> {
        self.cells[c].iter().position(|&w| w == v)
    }

    /// Barycentric coordinates on cell `c` of the point at parameter `t`
    /// along edge `e` (from its lower to its higher vertex).
    pub fn edge_point_bary(&self, c: usize, e: usize, t: f64) -> [f64; 3] {
        let [a, b] = self.edges[e];
        let la = self.local_vertex_index(c, a).expect("edge not on cell");
        let lb = self.local_vertex_index(c, b).expect("edge not on cell");
        let mut bary = [0.0; 3];
        bary[la] = 1.0 - t;
        bary[lb] = t;
        bary
    }

    pub fn area(&self) -> f64 {
        self.geometry.iter().map(|g| g.area).sum()
    }

    /// Structured mesh of a rectangle with `n x n` squares, each cut in two.
    pub fn structured(n: usize, pattern: Pattern, domain: Rect) -> Self {
        assert!(n >= 1, "structured mesh needs n >= 1");
        let (vertices, cells) = structured_lists(n, pattern, domain);
        Self::from_cells(vertices, cells).expect("structured mesh is valid")
    }

    pub fn unit_square(n: usize) -> Self {
        Self::structured(n, Pattern::ThreeDirectional, Rect::UNIT)
    }

    /// L-shaped domain `[-1,1]^2 \ (0,1]^2` with a three-directional pattern
    /// (`n` even, squares of side `2/n`); interior vertices are perturbed
    /// by up to `jitter * h` with a seeded generator to make the mesh unstructured.
    pub fn lshape(n: usize, jitter: f64, seed: u64) -> Self {
        assert!(n >= 2 && n.is_multiple_of(2), "L-shape needs an even n >= 2");
        assert!((0.0..0.3).contains(&jitter), "jitter must be in [0, 0.3)");
        let domain = Rect { xmin: -1.0, xmax: 1.0, ymin: -1.0, ymax: 1.0 };
        let (vertices, cells) = structured_lists(n, Pattern::ThreeDirectional, domain);
        let cells: Vec<[usize; 3]> = cells
            .into_iter()
            .filter(|c| {
                let cx = c.iter().map(|&v| vertices[v][0]).sum::<f64>() / 3.0;
                let cy = c.iter().map(|&v| vertices[v][1]).sum::<f64>() / 3.0;
                !(cx > 0.0 && cy > 0.0)
            })
            .collect();
        let mut renumber = vec![usize::MAX; vertices.len()];
        let mut kept = Vec::new();
        for c in &cells {
            for &v in c {
                if renumber[v] == usize::MAX {
                    renumber[v] = usize::MAX - 1;
                }
            }
        }
        for (v, r) in renumber.iter_mut().enumerate() {
            if *r != usize::MAX {
                *r = kept.len();
                kept.push(vertices[v]);
            }
        }
        let cells: Vec<[usize; 3]> = cells.into_iter().map(|c| c.map(|v| renumber[v])).collect();
        let mut tri = Self::from_cells(kept, cells).expect("L-shape mesh is valid");
        if jitter > 0.0 {
            let h = 2.0 / n as f64;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut moved = tri.vertices.clone();
            for (v, p) in moved.iter_mut().enumerate() {
                if tri.is_boundary_vertex(v) {
                    continue;
                }
                let r = jitter * h * rng.random::<f64>();
                let phi = std::f64::consts::TAU * rng.random::<f64>();
                p[0] += r * phi.cos();
                p[1] += r * phi.sin();
            }
            tri = Self::from_cells(moved, tri.cells.clone()).expect("jittered L-shape mesh is valid");
        }
        tri
    }

    /// Parse the ASCII mesh format (`vertices N`, coordinates, `cells M`,
    /// 0-based triples; `#` starts a comment line).
    pub fn load(reader: impl BufRead) -> Result<Self> {
        enum State {
            Header,
            Vertices(usize),
            CellHeader,
            Cells(usize),
            Done,
        }
        let mut state = State::Header;
        let mut vertices = Vec::new();
        let mut cells = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = lineno + 1;
            let text = line.trim();
            if text.is_empty() || text.starts_with('#') {
                continue;
            }
            let perr = |msg: String| Error::Parse { line: lineno, msg };
            let tokens: Vec<&str> = text.split_whitespace().collect();
            state = match state {
                State::Header => {
                    let n = parse_count(&tokens, "vertices").map_err(perr)?;
                    if n == 0 { State::CellHeader } else { State::Vertices(n) }
                }
                State::Vertices(left) => {
                    if tokens.len() != 2 {
                        return Err(perr(format!("expected 2 coordinates, found {}", tokens.len())));
                    }
                    let x = tokens[0].parse::<f64>().map_err(|e| perr(format!("bad coordinate: {e}")))?;
                    let y = tokens[1].parse::<f64>().map_err(|e| perr(format!("bad coordinate: {e}")))?;
                    vertices.push([x, y]);
                    if left == 1 { State::CellHeader } else { State::Vertices(left - 1) }
                }
                State::CellHeader => {
                    let m = parse_count(&tokens, "cells").map_err(perr)?;
                    if m == 0 { State::Done } else { State::Cells(m) }
                }
                State::Cells(left) => {
                    if tokens.len() != 3 {
                        return Err(perr(format!("expected 3 vertex indices, found {}", tokens.len())));
                    }
                    let mut cell = [0usize; 3];
                    for (slot, tok) in cell.iter_mut().zip(tokens.iter()) {
                        *slot = tok.parse::<usize>().map_err(|e| perr(format!("bad index: {e}")))?;
                        if *slot >= vertices.len() {
                            return Err(perr(format!("vertex index {slot} out of range")));
                        }
                    }
                    cells.push(cell);
                    if left == 1 { State::Done } else { State::Cells(left - 1) }
                }
                State::Done => return Err(perr("unexpected trailing content".into())),
            };
        }
        match state {
            State::Done => Self::from_cells(vertices, cells),
            _ => Err(Error::Parse { line: 0, msg: "unexpected end of file".into() }),
        }
    }

    pub fn to_mesh_string(&self) -> String {
        let mut s = String::new();
        writeln!(s, "vertices {}", self.vertices.len()).unwrap();
        for v in &self.vertices {
            writeln!(s, "{} {}", v[0], v[1]).unwrap();
        }
        writeln!(s, "cells {}", self.cells.len()).unwrap();
        for c in &self.cells {
            writeln!(s, "{} {} {}", c[0], c[1], c[2]).unwrap();
        }
        s
    }
}

fn parse_count(tokens: &[&str], keyword: &str) -> std::result::Result<usize, String> {
    if tokens.len() != 2 || tokens[0] != keyword {
        return Err(format!("expected `{keyword} N`"));
    }
    tokens[1].parse::<usize>().map_err(|e| format!("bad count: {e}"))
}

fn structured_lists(n: usize, pattern: Pattern, d: Rect) -> (Vec<[f64; 2]>, Vec<[usize; 3]>) {
    let dx = (d.xmax - d.xmin) / n as f64;
    let dy = (d.ymax - d.ymin) / n as f64;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            let x = if i == n { d.xmax } else { d.xmin + i as f64 * dx };
            let y = if j == n { d.ymax } else { d.ymin + j as f64 * dy };
            vertices.push([x, y]);
        }
    }
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut cells = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (v00, v10, v01, v11) = (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
            let rising = match pattern {
                Pattern::ThreeDirectional => true,
                Pattern::Diagonal => (i + j) % 2 == 0,
            };
            if rising {
                cells.push([v00, v10, v11]);
                cells.push([v00, v11, v01]);
            } else {
                cells.push([v00, v10, v01]);
                cells.push([v10, v11, v01]);
            }
        }
    }
    (vertices, cells)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(t: &Triangulation) -> (usize, usize, usize, usize, usize) {
        (t.n_vertices(), t.n_cells(), t.n_edges(), t.n_interior_edges(), t.n_interior_vertices())
    }

    #[test]
    fn smallest_structured_mesh() {
        let t = Triangulation::unit_square(1);
        assert_eq!(counts(&t), (4, 2, 5, 1, 0));
        assert_eq!(t.number_of_levels(), 0);
        assert_eq!(t.n_corners(), 4);
    }

    #[test]
    fn two_by_two_counts_and_euler() {
        let t = Triangulation::unit_square(2);
        assert_eq!(counts(&t), (9, 8, 16, 8, 1));
        assert_eq!(9 - 16 + 8, 1);
        let center = 4;
        assert_eq!(t.vertex_level[center], 1);
        assert_eq!(t.number_of_levels(), 1);
        assert_eq!(t.n_corners(), 4);
        assert_eq!(t.n_boundary_vertices() - t.n_corners(), 4);
    }

    #[test]
    fn four_by_four_levels() {
        // The center (0.5, 0.5) only has interior neighbours, so it sits on level 2.
        let t = Triangulation::unit_square(4);
        let levels: Vec<usize> =
            (0..t.n_vertices()).filter(|&v| !t.is_boundary_vertex(v)).map(|v| t.vertex_level[v]).collect();
        assert_eq!(levels.len(), 9);
        assert_eq!(levels.iter().filter(|&&l| l == 1).count(), 8);
        assert_eq!(t.vertex_level[2 * 5 + 2], 2);
        assert_eq!(t.number_of_levels(), 2);
    }

    #[test]
    fn edge_count_identity_and_orientation() {
        for pattern in [Pattern::Diagonal, Pattern::ThreeDirectional] {
            let t = Triangulation::structured(5, pattern, Rect { xmin: -1.0, xmax: 2.0, ymin: 0.0, ymax: 1.5 });
            assert_eq!(3 * t.n_cells(), 2 * t.n_interior_edges() + t.n_boundary_edges());
            assert!(t.shape_reg > 0.0);
            for e in 0..t.n_edges() {
                let cells = &t.edge_cells[e];
                if cells.len() == 2 {
                    // n_e points out of the left cell
                    let k = t.local_edge_index(cells[0], e).unwrap();
                    let n = t.geometry(cells[0]).outward_normal(k);
                    let ne = t.edge_normal(e);
                    assert!((n[0] - ne[0]).abs() < 1e-12 && (n[1] - ne[1]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn right_triangle_geometry() {
        let g = CellGeometry::new([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert_eq!(g.grad_lambda, [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]]);
        assert!((g.area - 0.5).abs() < 1e-15);
        let s = 3f64.sqrt();
        let eq = CellGeometry::new([[0.0, 0.0], [1.0, 0.0], [0.5, s / 2.0]]).unwrap();
        assert!((eq.area - s / 4.0).abs() < 1e-15);
        let sum = [0, 1].map(|d| eq.grad_lambda.iter().map(|g| g[d]).sum::<f64>());
        assert!(sum[0].abs() < 1e-15 && sum[1].abs() < 1e-15);
    }

    #[test]
    fn degenerate_cell_rejected() {
        assert!(CellGeometry::new([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]).is_none());
        let err = Triangulation::from_cells(vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]], vec![[0, 1, 2]]);
        assert!(matches!(err, Err(Error::DegenerateCell(0))));
    }

    #[test]
    fn load_round_trip_and_orientation_fix() {
        let text = "# unit square\nvertices 4\n0 0\n1 0\n0 1\n1 1\ncells 2\n0 3 1\n0 3 2\n";
        let t = Triangulation::load(text.as_bytes()).unwrap();
        assert_eq!(counts(&t), (4, 2, 5, 1, 0));
        for c in 0..2 {
            assert!(t.geometry(c).area > 0.0);
        }
        let again = Triangulation::load(t.to_mesh_string().as_bytes()).unwrap();
        assert_eq!(again.vertices, t.vertices);
        assert_eq!(again.cells, t.cells);
    }

    #[test]
    fn load_errors() {
        let nonmanifold = "vertices 5\n0 0\n1 0\n0 1\n1 1\n-1 -1\ncells 3\n0 1 2\n1 3 2\n0 4 1\n";
        // edge (0,1) is fine here; make (1,2) shared three times instead
        let three = "vertices 5\n0 0\n1 0\n0 1\n1 1\n0.2 0.2\ncells 3\n0 1 2\n1 3 2\n1 2 4\n";
        assert!(Triangulation::load(nonmanifold.as_bytes()).is_ok());
        assert!(matches!(Triangulation::load(three.as_bytes()), Err(Error::NonManifoldEdge(1, 2))));
        let bad = "vertices 3\n0 0\n1 x\n";
        assert!(matches!(Triangulation::load(bad.as_bytes()), Err(Error::Parse { line: 3, .. })));
        let dangling = "vertices 4\n0 0\n1 0\n0 1\n5 5\ncells 1\n0 1 2\n";
        assert!(matches!(Triangulation::load(dangling.as_bytes()), Err(Error::DanglingVertex(3))));
        let dup = "vertices 3\n0 0\n1 0\n0 1\ncells 2\n0 1 2\n2 1 0\n";
        assert!(matches!(Triangulation::load(dup.as_bytes()), Err(Error::DuplicateCell(1))));
    }

    #[test]
    fn lshape_is_valid() {
        let t = Triangulation::lshape(4, 0.2, 7);
        assert_eq!(t.n_cells(), 24);
        assert_eq!(t.n_corners(), 6);
        assert_eq!(t.n_vertices() as i64 - t.n_edges() as i64 + t.n_cells() as i64, 1);
        assert!(t.shape_reg > 0.0);
        assert!((t.area() - 3.0).abs() < 1e-12);
    }
}
