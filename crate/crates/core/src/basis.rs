//! Locally supported basis of the nonconforming cubic spaces, built by
//! bubble-correcting patch fields of quadratic vectors and integrating them.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::Triangulation;
use crate::operators::{antidifferentiate_cells, bubble_corrected};
use crate::poly::{Poly, VecPoly};
use crate::quadrature::{with_edge_rule, with_triangle_rule};
use crate::spaces::{a3_block, cell_nodes, lagrange2_shapes, DofSpace, FeFunction, SpaceKind};
use crate::sparse::SparseOperator;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundaryCondition {
    /// Clamped: `u = du/dn = 0`.
    Dirichlet,
    /// Simply supported: `u = 0` and vanishing normal bending moment.
    Navier,
}

impl BoundaryCondition {
    pub fn name(self) -> &'static str {
        match self {
            BoundaryCondition::Dirichlet => "dirichlet",
            BoundaryCondition::Navier => "navier",
        }
    }

    /// Space of the gradients of the cubic space with this condition.
    pub fn gradient_kind(self) -> SpaceKind {
        match self {
            BoundaryCondition::Dirichlet => SpaceKind::G2z,
            BoundaryCondition::Navier => SpaceKind::G2t,
        }
    }
}

impl fmt::Display for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for BoundaryCondition {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dirichlet" => Ok(BoundaryCondition::Dirichlet),
            "navier" => Ok(BoundaryCondition::Navier),
            other => Err(Error::InvalidArgument(format!("unknown boundary condition {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BasisTag {
    /// Vertex frame in the x direction at an interior vertex.
    VertexX,
    VertexY,
    /// Tangential rotation field around an interior vertex.
    VertexPatch,
    /// Normal field on an interior edge.
    InteriorEdge,
    /// Normal frame at a non-corner boundary vertex.
    BoundaryNormal,
    /// Outward normal field on a boundary edge.
    BoundaryEdge,
}

impl BasisTag {
    pub fn name(self) -> &'static str {
        match self {
            BasisTag::VertexX => "vertex-x",
            BasisTag::VertexY => "vertex-y",
            BasisTag::VertexPatch => "vertex-patch",
            BasisTag::InteriorEdge => "interior-edge",
            BasisTag::BoundaryNormal => "boundary-normal",
            BasisTag::BoundaryEdge => "boundary-edge",
        }
    }

    /// Whether the anchor entity is an edge (otherwise a vertex).
    pub fn on_edge(self) -> bool {
        matches!(self, BasisTag::InteriorEdge | BasisTag::BoundaryEdge)
    }
}

impl fmt::Display for BasisTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Quadratic vector field given by Lagrange-2 nodal values on a patch.
/// Node ids are vertices, or `n_vertices + edge` for midpoints.
#[derive(Clone, Debug)]
pub struct PatchField {
    pub tag: BasisTag,
    pub anchor: usize,
    pub support: Vec<usize>,
    pub nodes: Vec<(usize, [f64; 2])>,
}

impl PatchField {
    pub fn cell_field(&self, tri: &Triangulation, c: usize) -> VecPoly {
        let l2 = lagrange2_shapes();
        let mut v = [Poly::ZERO; 2];
        for (k, node) in cell_nodes(tri, c).iter().enumerate() {
            for (id, val) in &self.nodes {
                if id == node {
                    v[0] += l2[k] * val[0];
                    v[1] += l2[k] * val[1];
                }
            }
        }
        v
    }
}

fn other_vertex(tri: &Triangulation, e: usize, a: usize) -> usize {
    let [p, q] = tri.edges[e];
    if p == a {
        q
    } else {
        p
    }
}

fn vertex_frame(tri: &Triangulation, tag: BasisTag, a: usize, d: [f64; 2]) -> PatchField {
    let nv = tri.n_vertices();
    let mut nodes = vec![(a, d)];
    for &e in tri.vertex_edges(a) {
        nodes.push((nv + e, [-0.25 * d[0], -0.25 * d[1]]));
    }
    PatchField { tag, anchor: a, support: tri.vertex_cells(a).to_vec(), nodes }
}

/// Patch fields spanning the weakly rot-free quadratic vectors with the
/// boundary conditions of `bc`, ordered by tag then entity index.
pub fn patch_fields(tri: &Triangulation, bc: BoundaryCondition) -> Vec<PatchField> {
    let nv = tri.n_vertices();
    let interior: Vec<usize> = (0..nv).filter(|&a| !tri.is_boundary_vertex(a)).collect();
    let mut out = Vec::new();
    for &a in &interior {
        out.push(vertex_frame(tri, BasisTag::VertexX, a, [1.0, 0.0]));
    }
    for &a in &interior {
        out.push(vertex_frame(tri, BasisTag::VertexY, a, [0.0, 1.0]));
    }
    for &a in &interior {
        let edges = tri.vertex_edges(a);
        let ha = edges.iter().map(|&e| tri.edge_length(e)).sum::<f64>() / edges.len() as f64;
        let nodes = edges
            .iter()
            .map(|&e| {
                let b = other_vertex(tri, e, a);
                let (pa, pb) = (tri.vertices[a], tri.vertices[b]);
                let len = tri.edge_length(e);
                let t = [(pb[0] - pa[0]) / len, (pb[1] - pa[1]) / len];
                let s = 1.5 * ha / len;
                (nv + e, [s * t[0], s * t[1]])
            })
            .collect();
        out.push(PatchField { tag: BasisTag::VertexPatch, anchor: a, support: tri.vertex_cells(a).to_vec(), nodes });
    }
    for e in 0..tri.n_edges() {
        if !tri.is_boundary_edge(e) {
            let n = tri.edge_normal(e);
            out.push(PatchField {
                tag: BasisTag::InteriorEdge,
                anchor: e,
                support: tri.edge_cells[e].clone(),
                nodes: vec![(nv + e, [1.5 * n[0], 1.5 * n[1]])],
            });
        }
    }
    if bc == BoundaryCondition::Navier {
        for a in 0..nv {
            if let Some(n) = tri.boundary_vertex_normal(a) {
                out.push(vertex_frame(tri, BasisTag::BoundaryNormal, a, n));
            }
        }
        for e in 0..tri.n_edges() {
            if tri.is_boundary_edge(e) {
                let n = tri.outward_edge_normal(e);
                out.push(PatchField {
                    tag: BasisTag::BoundaryEdge,
                    anchor: e,
                    support: tri.edge_cells[e].clone(),
                    nodes: vec![(nv + e, [1.5 * n[0], 1.5 * n[1]])],
                });
            }
        }
    }
    out
}

/// Number of basis functions: `3 Vi + Ei` for clamped, plus `(Vb - Vc) + Eb`
/// for simply supported.
pub fn expected_count(tri: &Triangulation, bc: BoundaryCondition) -> usize {
    let base = 3 * tri.n_interior_vertices() + tri.n_interior_edges();
    match bc {
        BoundaryCondition::Dirichlet => base,
        BoundaryCondition::Navier => base + tri.n_boundary_vertices() - tri.n_corners() + tri.n_boundary_edges(),
    }
}

#[derive(Clone, Debug)]
pub struct BasisFunction {
    pub tag: BasisTag,
    pub anchor: usize,
    pub support: Vec<usize>,
    /// Cubic on each support cell, aligned with `support`.
    pub cells: Vec<Poly>,
}

impl BasisFunction {
    /// Local `A3` coefficient blocks on the support cells.
    pub fn blocks(&self) -> Vec<[f64; 10]> {
        self.cells.iter().map(a3_block).collect()
    }
}

#[derive(Clone, Debug)]
pub struct BasisSet {
    pub bc: BoundaryCondition,
    pub tri: Arc<Triangulation>,
    pub a30: Arc<DofSpace>,
    pub functions: Vec<BasisFunction>,
    /// `A30` coefficients of each basis function, one column per function.
    pub transform: SparseOperator,
    cell_functions: Vec<Vec<(usize, Poly)>>,
}

impl BasisSet {
    pub fn build(tri: &Arc<Triangulation>, bc: BoundaryCondition) -> Result<Self> {
        let fields = patch_fields(tri, bc);
        let mut functions = Vec::with_capacity(fields.len());
        for pf in &fields {
            let mut corrected = Vec::with_capacity(pf.support.len());
            for &c in &pf.support {
                corrected.push(bubble_corrected(tri.geometry(c), c, &pf.cell_field(tri, c))?);
            }
            let inside: HashSet<usize> = pf.support.iter().copied().collect();
            let verts: BTreeSet<usize> = pf.support.iter().flat_map(|&c| tri.cells[c]).collect();
            let anchors: Vec<(usize, f64)> = verts
                .into_iter()
                .filter(|&v| tri.is_boundary_vertex(v) || tri.vertex_cells(v).iter().any(|c| !inside.contains(c)))
                .map(|v| (v, 0.0))
                .collect();
            let pos = |c: usize| pf.support.iter().position(|&s| s == c).unwrap();
            let anti = antidifferentiate_cells(tri, &pf.support, |c| corrected[pos(c)], &anchors)?;
            functions.push(BasisFunction {
                tag: pf.tag,
                anchor: pf.anchor,
                support: pf.support.clone(),
                cells: anti.cells.into_iter().map(|(_, p)| p).collect(),
            });
        }
        let a30 = Arc::new(DofSpace::new(Arc::clone(tri), SpaceKind::A30));
        let mut vdof = vec![None; tri.n_vertices()];
        let mut next = 0;
        for (v, d) in vdof.iter_mut().enumerate() {
            if !tri.is_boundary_vertex(v) {
                *d = Some(next);
                next += 1;
            }
        }
        let mut triplets = Vec::new();
        let mut cell_functions = vec![Vec::new(); tri.n_cells()];
        for (j, f) in functions.iter().enumerate() {
            let mut seen = HashSet::new();
            for (&c, p) in f.support.iter().zip(&f.cells) {
                cell_functions[c].push((j, *p));
                let block = a3_block(p);
                for k in 0..3 {
                    if let Some(d) = vdof[tri.cells[c][k]] {
                        if seen.insert(d) && block[k] != 0.0 {
                            triplets.push((d, j, block[k]));
                        }
                    }
                }
                for m in 0..7 {
                    if block[3 + m] != 0.0 {
                        triplets.push((next + 7 * c + m, j, block[3 + m]));
                    }
                }
            }
        }
        let transform = SparseOperator::from_triplets(a30.n_dofs, functions.len(), triplets);
        Ok(Self { bc, tri: Arc::clone(tri), a30, functions, transform, cell_functions })
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    /// Basis functions with support on cell `c` and their cubics there.
    pub fn cell_functions(&self, c: usize) -> &[(usize, Poly)] {
        &self.cell_functions[c]
    }

    /// Basis function `j` as an `A30` function.
    pub fn function_a3(&self, j: usize) -> FeFunction {
        let mut e = vec![0.0; self.len()];
        e[j] = 1.0;
        self.combine(&e)
    }

    /// `sum_j coeffs[j] phi_j` as an `A30` function.
    pub fn combine(&self, coeffs: &[f64]) -> FeFunction {
        FeFunction { space: Arc::clone(&self.a30), coeffs: self.transform.matvec(coeffs) }
    }

    pub fn count_by_tag(&self) -> Vec<(BasisTag, usize)> {
        let mut out: Vec<(BasisTag, usize)> = Vec::new();
        for f in &self.functions {
            match out.iter_mut().find(|(t, _)| *t == f.tag) {
                Some(entry) => entry.1 += 1,
                None => out.push((f.tag, 1)),
            }
        }
        out
    }

    /// Membership check of every basis function; fails on the first violation.
    pub fn verify(&self, tol: f64) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for (j, f) in self.functions.iter().enumerate() {
            let polys: Vec<Option<Poly>> = {
                let mut v = vec![None; self.tri.n_cells()];
                for (&c, p) in f.support.iter().zip(&f.cells) {
                    v[c] = Some(*p);
                }
                v
            };
            let edges: BTreeSet<usize> = f.support.iter().flat_map(|&c| self.tri.cell_edges[c].map(|(e, _)| e)).collect();
            let r = membership(&self.tri, |c| polys[c], edges.into_iter(), self.bc);
            let rel = r.relative();
            worst = worst.max(rel);
            if rel > tol {
                return Err(Error::Membership { index: j, tag: f.tag.to_string(), moment: rel });
            }
        }
        Ok(worst)
    }

    /// Text manifest: one line `index tag anchor support...` per function.
    pub fn manifest(&self) -> String {
        let mut s = format!("# {} basis, {} functions\n# index tag anchor support-cells\n", self.bc, self.len());
        for (j, f) in self.functions.iter().enumerate() {
            let entity = if f.tag.on_edge() { "e" } else { "v" };
            let cells: Vec<String> = f.support.iter().map(|c| c.to_string()).collect();
            s.push_str(&format!("{j} {} {entity}{} {}\n", f.tag, f.anchor, cells.join(",")));
        }
        s
    }
}

#[derive(Clone, Copy, Debug)]
pub struct MembershipReport {
    /// Largest absolute moment violation.
    pub max_moment: f64,
    /// Broken `H^2` seminorm.
    pub norm: f64,
    pub worst_edge: Option<usize>,
}

impl MembershipReport {
    pub fn relative(&self) -> f64 {
        if self.norm > 0.0 {
            self.max_moment / self.norm
        } else {
            self.max_moment
        }
    }

    pub fn passed(&self, tol: f64) -> bool {
        self.relative() <= tol
    }
}

/// Edge moments that characterize the cubic space: on interior edges the
/// mean jump and the jumps of the normal derivative against `1, s`; on
/// boundary edges the mean value and (clamped only) the normal derivative.
/// Vertex continuity is part of the `A3` representation.
pub fn membership(
    tri: &Triangulation,
    cell: impl Fn(usize) -> Option<Poly>,
    edges: impl Iterator<Item = usize>,
    bc: BoundaryCondition,
) -> MembershipReport {
    let mut norm2 = 0.0;
    for c in 0..tri.n_cells() {
        if let Some(p) = cell(c) {
            norm2 += hessian_norm2(tri, c, &p);
        }
    }
    let mut worst = 0.0;
    let mut worst_edge = None;
    for e in edges {
        let n = tri.edge_normal(e);
        let len = tri.edge_length(e);
        let mut m = [0.0; 3];
        for (side, &c) in tri.edge_cells[e].iter().enumerate() {
            let Some(p) = cell(c) else { continue };
            let g = tri.geometry(c);
            let (px, py) = (p.dx(g), p.dy(g));
            let sign = if side == 0 { 1.0 } else { -1.0 };
            with_edge_rule(|r| {
                for (&t, &w) in r.points.iter().zip(&r.weights) {
                    let b = tri.edge_point_bary(c, e, t);
                    let dn = px.eval_bary(b) * n[0] + py.eval_bary(b) * n[1];
                    m[0] += sign * w * len * p.eval_bary(b);
                    m[1] += sign * w * len * dn;
                    m[2] += sign * w * len * t * dn;
                }
            });
        }
        let checked = if tri.is_boundary_edge(e) && bc == BoundaryCondition::Navier { &m[..1] } else { &m[..] };
        for v in checked {
            if v.abs() > worst {
                worst = v.abs();
                worst_edge = Some(e);
            }
        }
    }
    MembershipReport { max_moment: worst, norm: norm2.sqrt(), worst_edge }
}

/// `int_T |D^2 p|^2` on one cell.
pub fn hessian_norm2(tri: &Triangulation, c: usize, p: &Poly) -> f64 {
    let g = tri.geometry(c);
    let (xx, xy, yy) = (p.dx(g).dx(g), p.dx(g).dy(g), p.dy(g).dy(g));
    with_triangle_rule(|r| {
        r.points
            .iter()
            .zip(&r.weights)
            .map(|(&b, &w)| {
                let (a, h, d) = (xx.eval_bary(b), xy.eval_bary(b), yy.eval_bary(b));
                w * (a * a + 2.0 * h * h + d * d)
            })
            .sum::<f64>()
            * g.area
    })
}

/// Membership check of an `A3`/`A30` function over all edges.
pub fn verify_membership(w: &FeFunction, bc: BoundaryCondition) -> Result<MembershipReport> {
    if !w.kind().is_cubic() {
        return Err(Error::KindMismatch { expected: "A3 or A30", got: w.kind() });
    }
    let tri = &w.space.tri;
    Ok(membership(tri, |c| Some(w.cell_field(c)[0]), 0..tri.n_edges(), bc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Triangulation;

    #[test]
    fn counts_on_unit_square() {
        for n in [1, 2, 3] {
            let t = Arc::new(Triangulation::unit_square(n));
            for bc in [BoundaryCondition::Dirichlet, BoundaryCondition::Navier] {
                let b = BasisSet::build(&t, bc).unwrap();
                assert_eq!(b.len(), expected_count(&t, bc));
                assert!(b.verify(1e-9).is_ok());
            }
        }
    }

    #[test]
    fn bubble_fails_membership() {
        let t = Arc::new(Triangulation::unit_square(2));
        let a3 = Arc::new(DofSpace::new(t.clone(), SpaceKind::A30));
        let cubic_bubble = Poly::lambda(0) * Poly::lambda(1) * Poly::lambda(2);
        let w = a3.represent(|c| [if c == 3 { cubic_bubble } else { Poly::ZERO }, Poly::ZERO]).unwrap();
        let r = verify_membership(&w, BoundaryCondition::Navier).unwrap();
        assert!(!r.passed(1e-9));
    }

    #[test]
    fn supports_are_local() {
        let t = Arc::new(Triangulation::unit_square(3));
        let b = BasisSet::build(&t, BoundaryCondition::Navier).unwrap();
        for f in &b.functions {
            assert!(f.support.len() <= 6);
            assert!(f.cells.iter().any(|p| p.max_abs() > 1e-12));
        }
    }
}
