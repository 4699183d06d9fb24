//! Degree-of-freedom layouts for the discrete spaces.
//!
//! Every space is described cell by cell: on each cell a list of local
//! shape fields (polynomials in reference coordinates, Cartesian vector
//! components) each attached to a global DOF. A coefficient vector defines
//! the cellwise field `sum_k c[dof_k] * shape_k`. Continuity requirements
//! are encoded in which shapes share a global DOF.

use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use faer::Mat;

use crate::error::{Error, Result};
use crate::mesh::{CellGeometry, Triangulation, VertexClass};
use crate::poly::{Poly, VecPoly};
use crate::quadrature::{with_edge_rule, with_triangle_rule};
use crate::sparse::{dense_solve, Cholesky, SparseOperator};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SpaceKind {
    P0,
    P1dc,
    /// Discontinuous linears with zero mean (constraint kept separately).
    P1dc0,
    Lagrange1,
    Lagrange2,
    S2vec,
    Bubble2vec,
    /// Fortin-Soulie: quadratic vectors with continuous first edge moments.
    G2,
    /// `G2` with vanishing tangential moments on the boundary.
    G2t,
    /// `G2` with vanishing moments of both components on the boundary.
    G2z,
    /// Quadratic vectors with continuous tangential edge means.
    G2r,
    G2r0,
    /// Cubics continuous at vertices.
    A3,
    A30,
}

pub const ALL_KINDS: [SpaceKind; 14] = [
    SpaceKind::P0,
    SpaceKind::P1dc,
    SpaceKind::P1dc0,
    SpaceKind::Lagrange1,
    SpaceKind::Lagrange2,
    SpaceKind::S2vec,
    SpaceKind::Bubble2vec,
    SpaceKind::G2,
    SpaceKind::G2t,
    SpaceKind::G2z,
    SpaceKind::G2r,
    SpaceKind::G2r0,
    SpaceKind::A3,
    SpaceKind::A30,
];

impl SpaceKind {
    pub fn name(self) -> &'static str {
        match self {
            SpaceKind::P0 => "P0",
            SpaceKind::P1dc => "P1dc",
            SpaceKind::P1dc0 => "P1dc0",
            SpaceKind::Lagrange1 => "Lagrange1",
            SpaceKind::Lagrange2 => "Lagrange2",
            SpaceKind::S2vec => "S2vec",
            SpaceKind::Bubble2vec => "Bubble2vec",
            SpaceKind::G2 => "G2",
            SpaceKind::G2t => "G2t",
            SpaceKind::G2z => "G2z",
            SpaceKind::G2r => "G2r",
            SpaceKind::G2r0 => "G2r0",
            SpaceKind::A3 => "A3",
            SpaceKind::A30 => "A30",
        }
    }

    pub fn is_vector(self) -> bool {
        matches!(
            self,
            SpaceKind::S2vec
                | SpaceKind::Bubble2vec
                | SpaceKind::G2
                | SpaceKind::G2t
                | SpaceKind::G2z
                | SpaceKind::G2r
                | SpaceKind::G2r0
        )
    }

    pub fn is_fortin_soulie(self) -> bool {
        matches!(self, SpaceKind::G2 | SpaceKind::G2t | SpaceKind::G2z)
    }

    pub fn is_cubic(self) -> bool {
        matches!(self, SpaceKind::A3 | SpaceKind::A30)
    }

    /// Cellwise shapes are linearly independent on every cell, so fields can
    /// be represented cell by cell.
    fn locally_unisolvent(self) -> bool {
        !self.is_fortin_soulie()
    }
}

impl fmt::Display for SpaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SpaceKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ALL_KINDS
            .iter()
            .copied()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown space kind {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DofTag {
    VertexValue,
    MidpointValue,
    EdgeMoment0,
    CellModal,
    BubbleX,
    BubbleY,
}

#[derive(Clone, Debug)]
pub struct LocalShape {
    pub dof: usize,
    pub field: VecPoly,
}

/// Closed-form dimension of a space on a mesh.
pub fn dim_of(tri: &Triangulation, kind: SpaceKind) -> usize {
    let nv = tri.n_vertices();
    let ne = tri.n_edges();
    let nc = tri.n_cells();
    let vi = tri.n_interior_vertices();
    let ei = tri.n_interior_edges();
    let vb_free = tri.n_boundary_vertices() - tri.n_corners();
    let eb = tri.n_boundary_edges();
    match kind {
        SpaceKind::P0 => nc,
        SpaceKind::P1dc => 3 * nc,
        SpaceKind::P1dc0 => 3 * nc - 1,
        SpaceKind::Lagrange1 => nv,
        SpaceKind::Lagrange2 => nv + ne,
        SpaceKind::S2vec => 2 * (nv + ne),
        SpaceKind::Bubble2vec => 2 * nc,
        SpaceKind::G2 => 2 * (nv + ne) + 2 * nc - 2,
        SpaceKind::G2t => 2 * (vi + ei) + vb_free + eb + 2 * nc,
        SpaceKind::G2z => 2 * (vi + ei) + 2 * nc,
        SpaceKind::G2r => ne + 9 * nc,
        SpaceKind::G2r0 => ei + 9 * nc,
        SpaceKind::A3 => nv + 7 * nc,
        SpaceKind::A30 => vi + 7 * nc,
    }
}

/// Quadratic Lagrange shapes: vertex `k` then the midpoint of local edge `k`.
pub fn lagrange2_shapes() -> [Poly; 6] {
    let l = [Poly::lambda(0), Poly::lambda(1), Poly::lambda(2)];
    let mut out = [Poly::ZERO; 6];
    for k in 0..3 {
        out[k] = l[k] * (l[k] * 2.0 - Poly::constant(1.0));
        out[3 + k] = l[(k + 1) % 3] * l[(k + 2) % 3] * 4.0;
    }
    out
}

/// Local cubic shapes of `A3`: `lambda_k` (vertex values), then
/// `lambda_i lambda_j`, `lambda_i lambda_j (lambda_i - lambda_j)` for the
/// edge opposite each vertex, then `lambda_1 lambda_2 lambda_3`.
/// All but the first three vanish at the vertices.
pub fn a3_shapes() -> [Poly; 10] {
    let l = [Poly::lambda(0), Poly::lambda(1), Poly::lambda(2)];
    let mut out = [Poly::ZERO; 10];
    for k in 0..3 {
        let (i, j) = ((k + 1) % 3, (k + 2) % 3);
        out[k] = l[k];
        out[3 + k] = l[i] * l[j];
        out[6 + k] = l[i] * l[j] * (l[i] - l[j]);
    }
    out[9] = l[0] * l[1] * l[2];
    out
}

/// Barycentric points of the degree-3 lattice; unisolvent for cubics.
pub fn cubic_lattice() -> [[f64; 3]; 10] {
    let mut out = [[0.0; 3]; 10];
    let mut n = 0;
    for i in 0..=3 {
        for j in 0..=(3 - i) {
            let k = 3 - i - j;
            out[n] = [i as f64 / 3.0, j as f64 / 3.0, k as f64 / 3.0];
            n += 1;
        }
    }
    out
}

fn a3_lattice_inverse() -> &'static Mat<f64> {
    static INV: OnceLock<Mat<f64>> = OnceLock::new();
    INV.get_or_init(|| {
        let shapes = a3_shapes();
        let pts = cubic_lattice();
        let m = Mat::from_fn(10, 10, |i, j| shapes[j].eval_bary(pts[i]));
        dense_solve(&m, &Mat::identity(10, 10))
    })
}

/// Coefficients of a cubic in the local `A3` shapes.
pub fn a3_block(p: &Poly) -> [f64; 10] {
    let inv = a3_lattice_inverse();
    let vals: Vec<f64> = cubic_lattice().iter().map(|&b| p.eval_bary(b)).collect();
    let mut out = [0.0; 10];
    for (i, o) in out.iter_mut().enumerate() {
        *o = (0..10).map(|j| inv[(i, j)] * vals[j]).sum();
    }
    out
}

/// Inverse of [`a3_block`].
pub fn a3_poly(block: &[f64; 10]) -> Poly {
    let shapes = a3_shapes();
    let mut p = Poly::ZERO;
    for k in 0..10 {
        if block[k] != 0.0 {
            p += shapes[k] * block[k];
        }
    }
    p
}

#[derive(Debug)]
pub struct DofSpace {
    pub kind: SpaceKind,
    pub tri: Arc<Triangulation>,
    pub n_dofs: usize,
    pub dof_tags: Vec<DofTag>,
    pub cell_shapes: Vec<Vec<LocalShape>>,
    /// Linear constraints `c . x = 0` on the coefficients.
    pub constraints: Vec<Vec<f64>>,
    normal_equations: OnceLock<std::result::Result<Cholesky, String>>,
}

struct Builder {
    tags: Vec<DofTag>,
    shapes: Vec<Vec<LocalShape>>,
}

impl Builder {
    fn new(nc: usize) -> Self {
        Self { tags: Vec::new(), shapes: vec![Vec::new(); nc] }
    }

    fn dof(&mut self, tag: DofTag) -> usize {
        self.tags.push(tag);
        self.tags.len() - 1
    }

    fn push(&mut self, cell: usize, dof: usize, field: VecPoly) {
        self.shapes[cell].push(LocalShape { dof, field });
    }
}

fn scalar(p: Poly) -> VecPoly {
    [p, Poly::ZERO]
}

fn along(p: Poly, d: [f64; 2]) -> VecPoly {
    [p * d[0], p * d[1]]
}

impl DofSpace {
    pub fn new(tri: Arc<Triangulation>, kind: SpaceKind) -> Self {
        let nc = tri.n_cells();
        let nv = tri.n_vertices();
        let mut b = Builder::new(nc);
        let mut constraints = Vec::new();
        let lam = [Poly::lambda(0), Poly::lambda(1), Poly::lambda(2)];
        let l2 = lagrange2_shapes();
        let bubble = Poly::bubble();
        match kind {
            SpaceKind::P0 => {
                for c in 0..nc {
                    let d = b.dof(DofTag::CellModal);
                    b.push(c, d, scalar(Poly::constant(1.0)));
                }
            }
            SpaceKind::P1dc | SpaceKind::P1dc0 => {
                for c in 0..nc {
                    for l in lam {
                        let d = b.dof(DofTag::CellModal);
                        b.push(c, d, scalar(l));
                    }
                }
                if kind == SpaceKind::P1dc0 {
                    let m = (0..3 * nc).map(|i| tri.geometry(i / 3).area / 3.0).collect();
                    constraints.push(m);
                }
            }
            SpaceKind::Lagrange1 => {
                let ids: Vec<usize> = (0..nv).map(|_| b.dof(DofTag::VertexValue)).collect();
                for (c, cell) in tri.cells.iter().enumerate() {
                    for k in 0..3 {
                        b.push(c, ids[cell[k]], scalar(lam[k]));
                    }
                }
            }
            SpaceKind::Lagrange2 | SpaceKind::S2vec => {
                let comps = if kind == SpaceKind::S2vec { 2 } else { 1 };
                let mut node_dofs = Vec::with_capacity(nv + tri.n_edges());
                for node in 0..nv + tri.n_edges() {
                    let tag = if node < nv { DofTag::VertexValue } else { DofTag::MidpointValue };
                    node_dofs.push((0..comps).map(|_| b.dof(tag)).collect::<Vec<_>>());
                }
                for c in 0..nc {
                    for (k, node) in cell_nodes(&tri, c).into_iter().enumerate() {
                        for (comp, &d) in node_dofs[node].iter().enumerate() {
                            let mut dir = [0.0; 2];
                            dir[comp] = 1.0;
                            b.push(c, d, along(l2[k], dir));
                        }
                    }
                }
            }
            SpaceKind::Bubble2vec => {
                for c in 0..nc {
                    let dx = b.dof(DofTag::BubbleX);
                    let dy = b.dof(DofTag::BubbleY);
                    b.push(c, dx, along(bubble, [1.0, 0.0]));
                    b.push(c, dy, along(bubble, [0.0, 1.0]));
                }
            }
            SpaceKind::G2 | SpaceKind::G2z | SpaceKind::G2t => {
                // per node: list of (dof, direction)
                let mut node_dofs: Vec<Vec<(usize, [f64; 2])>> = Vec::with_capacity(nv + tri.n_edges());
                for node in 0..nv + tri.n_edges() {
                    let tag = if node < nv { DofTag::VertexValue } else { DofTag::MidpointValue };
                    let interior = if node < nv {
                        !tri.is_boundary_vertex(node)
                    } else {
                        !tri.is_boundary_edge(node - nv)
                    };
                    let dirs: Vec<[f64; 2]> = if interior || kind == SpaceKind::G2 {
                        vec![[1.0, 0.0], [0.0, 1.0]]
                    } else if kind == SpaceKind::G2z {
                        vec![]
                    } else if node < nv {
                        match tri.vertex_class[node] {
                            VertexClass::Corner => vec![],
                            _ => vec![tri.boundary_vertex_normal(node).expect("non-corner boundary vertex")],
                        }
                    } else {
                        vec![tri.outward_edge_normal(node - nv)]
                    };
                    node_dofs.push(dirs.into_iter().map(|d| (b.dof(tag), d)).collect());
                }
                for c in 0..nc {
                    for (k, node) in cell_nodes(&tri, c).into_iter().enumerate() {
                        for &(d, dir) in &node_dofs[node] {
                            b.push(c, d, along(l2[k], dir));
                        }
                    }
                }
                // S2 + bubbles is not direct on the unconstrained space: the sum of
                // all cell bubbles is continuous. Dropping the bubbles of one cell
                // restores a basis.
                let first = if kind == SpaceKind::G2 { 1 } else { 0 };
                for c in first..nc {
                    let dx = b.dof(DofTag::BubbleX);
                    let dy = b.dof(DofTag::BubbleY);
                    b.push(c, dx, along(bubble, [1.0, 0.0]));
                    b.push(c, dy, along(bubble, [0.0, 1.0]));
                }
            }
            SpaceKind::G2r | SpaceKind::G2r0 => {
                let edge_dof: Vec<Option<usize>> = (0..tri.n_edges())
                    .map(|e| {
                        if kind == SpaceKind::G2r0 && tri.is_boundary_edge(e) {
                            None
                        } else {
                            Some(b.dof(DofTag::EdgeMoment0))
                        }
                    })
                    .collect();
                for c in 0..nc {
                    let dual = g2r_dual_basis(&tri, c);
                    // functionals 0..6 vertex values, 6..9 tangential means, 9..12 normal means
                    for (i, field) in dual.iter().enumerate() {
                        let dof = match i {
                            0..=5 => b.dof(DofTag::VertexValue),
                            6..=8 => match edge_dof[tri.cell_edges[c][i - 6].0] {
                                Some(d) => d,
                                None => continue,
                            },
                            _ => b.dof(DofTag::EdgeMoment0),
                        };
                        b.push(c, dof, *field);
                    }
                }
            }
            SpaceKind::A3 | SpaceKind::A30 => {
                let a3 = a3_shapes();
                let vdof: Vec<Option<usize>> = (0..nv)
                    .map(|v| {
                        if kind == SpaceKind::A30 && tri.is_boundary_vertex(v) {
                            None
                        } else {
                            Some(b.dof(DofTag::VertexValue))
                        }
                    })
                    .collect();
                let mut modal = Vec::with_capacity(7 * nc);
                for _ in 0..7 * nc {
                    modal.push(b.dof(DofTag::CellModal));
                }
                for (c, cell) in tri.cells.iter().enumerate() {
                    for k in 0..3 {
                        if let Some(d) = vdof[cell[k]] {
                            b.push(c, d, scalar(a3[k]));
                        }
                    }
                    for m in 0..7 {
                        b.push(c, modal[7 * c + m], scalar(a3[3 + m]));
                    }
                }
            }
        }
        Self {
            kind,
            n_dofs: b.tags.len(),
            dof_tags: b.tags,
            cell_shapes: b.shapes,
            constraints,
            tri,
            normal_equations: OnceLock::new(),
        }
    }

    /// Dimension of the space: coefficient count minus constraints.
    pub fn dim(&self) -> usize {
        self.n_dofs - self.constraints.len()
    }

    pub fn zero(self: &Arc<Self>) -> FeFunction {
        FeFunction { space: Arc::clone(self), coeffs: vec![0.0; self.n_dofs] }
    }

    pub fn function(self: &Arc<Self>, coeffs: Vec<f64>) -> Result<FeFunction> {
        if coeffs.len() != self.n_dofs {
            return Err(Error::InvalidArgument(format!(
                "{} coefficients for a {} space with {} DOFs",
                coeffs.len(),
                self.kind,
                self.n_dofs
            )));
        }
        Ok(FeFunction { space: Arc::clone(self), coeffs })
    }

    /// Cellwise field of a coefficient vector.
    pub fn cell_field(&self, c: usize, coeffs: &[f64]) -> VecPoly {
        let mut out = [Poly::ZERO; 2];
        for s in &self.cell_shapes[c] {
            let w = coeffs[s.dof];
            if w != 0.0 {
                out[0] += s.field[0] * w;
                out[1] += s.field[1] * w;
            }
        }
        out
    }

    /// Represent a cellwise polynomial field (degree <= 3) in this space.
    /// Fails when the field is not a member, with the relative residual.
    pub fn represent(self: &Arc<Self>, field: impl Fn(usize) -> VecPoly) -> Result<FeFunction> {
        let nc = self.tri.n_cells();
        let fields: Vec<VecPoly> = (0..nc).map(&field).collect();
        let coeffs = if self.kind.locally_unisolvent() {
            self.represent_local(&fields)
        } else {
            self.represent_global(&fields)?
        };
        let f = FeFunction { space: Arc::clone(self), coeffs };
        let mut scale: f64 = 0.0;
        let mut resid: f64 = 0.0;
        let pts = cubic_lattice();
        for (c, target) in fields.iter().enumerate() {
            let got = f.cell_field(c);
            for &p in &pts {
                for comp in 0..2 {
                    let t = target[comp].eval_bary(p);
                    scale = scale.max(t.abs());
                    resid = resid.max((t - got[comp].eval_bary(p)).abs());
                }
            }
        }
        for con in &self.constraints {
            let s: f64 = con.iter().zip(&f.coeffs).map(|(a, b)| (a * b).abs()).sum();
            let v: f64 = con.iter().zip(&f.coeffs).map(|(a, b)| a * b).sum();
            if s > 0.0 {
                resid = resid.max(v.abs() / s * scale.max(1.0));
            }
        }
        let rel = if scale > 0.0 { resid / scale } else { resid };
        if rel > 1e-9 {
            return Err(Error::NotRepresentable { kind: self.kind, residual: rel });
        }
        Ok(f)
    }

    fn represent_local(&self, fields: &[VecPoly]) -> Vec<f64> {
        let comps = if self.kind.is_vector() { 2 } else { 1 };
        let pts = cubic_lattice();
        let mut coeffs = vec![0.0; self.n_dofs];
        let mut set = vec![false; self.n_dofs];
        for (c, target) in fields.iter().enumerate() {
            let shapes = &self.cell_shapes[c];
            if shapes.is_empty() {
                continue;
            }
            let rows = pts.len() * comps;
            let s = Mat::from_fn(rows, shapes.len(), |r, k| shapes[k].field[r % comps].eval_bary(pts[r / comps]));
            let y = Mat::from_fn(rows, 1, |r, _| target[r % comps].eval_bary(pts[r / comps]));
            let st = s.transpose();
            let x = dense_solve(&(st * &s), &(st * &y));
            for (k, sh) in shapes.iter().enumerate() {
                if !set[sh.dof] {
                    coeffs[sh.dof] = x[(k, 0)];
                    set[sh.dof] = true;
                }
            }
        }
        coeffs
    }

    fn sample_matrix(&self) -> SparseOperator {
        let pts = cubic_lattice();
        let mut t = Vec::new();
        for c in 0..self.tri.n_cells() {
            for (k, p) in pts.iter().enumerate() {
                for comp in 0..2 {
                    let row = (c * pts.len() + k) * 2 + comp;
                    for s in &self.cell_shapes[c] {
                        let v = s.field[comp].eval_bary(*p);
                        if v != 0.0 {
                            t.push((row, s.dof, v));
                        }
                    }
                }
            }
        }
        SparseOperator::from_triplets(self.tri.n_cells() * pts.len() * 2, self.n_dofs, t)
    }

    fn represent_global(&self, fields: &[VecPoly]) -> Result<Vec<f64>> {
        let s = self.sample_matrix();
        let chol = self
            .normal_equations
            .get_or_init(|| {
                let n = s.transpose().matmul(&s);
                Cholesky::new(&n).map_err(|e| e.to_string())
            })
            .as_ref()
            .map_err(|e| Error::Factorization(e.clone()))?;
        let pts = cubic_lattice();
        let mut y = Vec::with_capacity(s.rows);
        for target in fields {
            for p in &pts {
                for comp in target.iter() {
                    y.push(comp.eval_bary(*p));
                }
            }
        }
        Ok(chol.solve(&s.matvec_t(&y)))
    }

    /// Indices of the degrees of freedom with nonzero shapes on cell `c`.
    pub fn cell_dofs(&self, c: usize) -> Vec<usize> {
        let mut d: Vec<usize> = self.cell_shapes[c].iter().map(|s| s.dof).collect();
        d.sort_unstable();
        d.dedup();
        d
    }
}

/// Global Lagrange-2 node ids of a cell: vertices then edge midpoints
/// (`n_vertices + edge`), in local order.
pub fn cell_nodes(tri: &Triangulation, c: usize) -> [usize; 6] {
    let cell = tri.cells[c];
    let ce = tri.cell_edges[c];
    let nv = tri.n_vertices();
    [cell[0], cell[1], cell[2], nv + ce[0].0, nv + ce[1].0, nv + ce[2].0]
}

/// Mean of a polynomial over local edge `k` of a cell.
fn edge_mean_local(p: &Poly, k: usize) -> f64 {
    with_edge_rule(|r| {
        r.points
            .iter()
            .zip(&r.weights)
            .map(|(&t, &w)| {
                let mut b = [0.0; 3];
                b[(k + 1) % 3] = 1.0 - t;
                b[(k + 2) % 3] = t;
                w * p.eval_bary(b)
            })
            .sum()
    })
}

/// Dual basis of the 12 functionals: vertex values (vertex-major, x then y),
/// tangential edge means along the global tangent, normal edge means along
/// the global normal.
fn g2r_dual_basis(tri: &Triangulation, c: usize) -> [VecPoly; 12] {
    let l2 = lagrange2_shapes();
    let mut nodal = Vec::with_capacity(12);
    for sh in l2.iter() {
        nodal.push(along(*sh, [1.0, 0.0]));
        nodal.push(along(*sh, [0.0, 1.0]));
    }
    let edges = tri.cell_edges[c];
    let functional = |i: usize, v: &VecPoly| -> f64 {
        match i {
            0..=5 => {
                let mut b = [0.0; 3];
                b[i / 2] = 1.0;
                v[i % 2].eval_bary(b)
            }
            6..=8 => {
                let k = i - 6;
                let t = tri.edge_tangent(edges[k].0);
                edge_mean_local(&(v[0] * t[0] + v[1] * t[1]), k)
            }
            _ => {
                let k = i - 9;
                let n = tri.edge_normal(edges[k].0);
                edge_mean_local(&(v[0] * n[0] + v[1] * n[1]), k)
            }
        }
    };
    let f = Mat::from_fn(12, 12, |i, j| functional(i, &nodal[j]));
    let inv = dense_solve(&f, &Mat::identity(12, 12));
    let mut out = [[Poly::ZERO; 2]; 12];
    for (i, o) in out.iter_mut().enumerate() {
        for (j, nf) in nodal.iter().enumerate() {
            let w = inv[(j, i)];
            if w.abs() > 1e-15 {
                o[0] += nf[0] * w;
                o[1] += nf[1] * w;
            }
        }
    }
    out
}

/// Coefficient vector bound to a space.
#[derive(Clone, Debug)]
pub struct FeFunction {
    pub space: Arc<DofSpace>,
    pub coeffs: Vec<f64>,
}

/// One-sided and jump moments `int_e f p_j` with `p_j = s^j`, `s` the edge
/// parameter from the lower to the higher vertex index.
#[derive(Clone, Debug)]
pub struct EdgeMoments {
    /// Per incident cell (left first), per power, per component.
    pub sides: Vec<Vec<[f64; 2]>>,
    /// Left minus right; for boundary edges the one-sided moment.
    pub jump: Vec<[f64; 2]>,
}

impl FeFunction {
    pub fn kind(&self) -> SpaceKind {
        self.space.kind
    }

    pub fn cell_field(&self, c: usize) -> VecPoly {
        self.space.cell_field(c, &self.coeffs)
    }

    /// Value at a barycentric point of a cell (scalar kinds fill slot 0).
    pub fn evaluate(&self, c: usize, bary: [f64; 3]) -> [f64; 2] {
        let f = self.cell_field(c);
        [f[0].eval_bary(bary), f[1].eval_bary(bary)]
    }

    pub fn geometry(&self, c: usize) -> &CellGeometry {
        self.space.tri.geometry(c)
    }

    pub fn edge_moments(&self, e: usize, max_degree: usize) -> EdgeMoments {
        assert!(max_degree <= 3, "edge moments up to degree 3");
        let tri = &self.space.tri;
        let len = tri.edge_length(e);
        let sides: Vec<Vec<[f64; 2]>> = tri.edge_cells[e]
            .iter()
            .map(|&c| {
                let f = self.cell_field(c);
                with_edge_rule(|r| {
                    (0..=max_degree)
                        .map(|j| {
                            let mut m = [0.0; 2];
                            for (&t, &w) in r.points.iter().zip(&r.weights) {
                                let b = tri.edge_point_bary(c, e, t);
                                let pj = t.powi(j as i32);
                                for (comp, mc) in m.iter_mut().enumerate() {
                                    *mc += w * len * pj * f[comp].eval_bary(b);
                                }
                            }
                            m
                        })
                        .collect()
                })
            })
            .collect();
        let jump = if sides.len() == 2 {
            sides[0].iter().zip(&sides[1]).map(|(l, r)| [l[0] - r[0], l[1] - r[1]]).collect()
        } else {
            sides[0].clone()
        };
        EdgeMoments { sides, jump }
    }

    /// Text dump: `kind count` header, then one coefficient per line.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.space.kind, self.coeffs.len());
        for c in &self.coeffs {
            s.push_str(&format!("{c:e}\n"));
        }
        s
    }

    /// Parse a dump produced by [`FeFunction::to_text`] into `space`.
    pub fn from_text(space: &Arc<DofSpace>, text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let (_, header) = lines.next().ok_or(Error::Parse { line: 1, msg: "empty file".into() })?;
        let mut parts = header.split_whitespace();
        let kind: SpaceKind = parts.next().unwrap_or("").parse()?;
        let count: usize = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or(Error::Parse { line: 1, msg: "expected `kind count`".into() })?;
        if kind != space.kind {
            return Err(Error::KindMismatch { expected: space.kind.name(), got: kind });
        }
        let mut coeffs = Vec::with_capacity(count);
        for (i, line) in lines {
            let v = line.trim().parse::<f64>().map_err(|e| Error::Parse { line: i + 1, msg: e.to_string() })?;
            coeffs.push(v);
        }
        if coeffs.len() != count {
            return Err(Error::Parse { line: 0, msg: format!("expected {count} coefficients, found {}", coeffs.len()) });
        }
        space.function(coeffs)
    }
}

/// `int_T f` of a polynomial over cell `c`.
pub fn integrate_poly(g: &CellGeometry, p: &Poly) -> f64 {
    with_triangle_rule(|r| r.points.iter().zip(&r.weights).map(|(b, w)| w * p.eval_bary(*b)).sum::<f64>() * g.area)
}
