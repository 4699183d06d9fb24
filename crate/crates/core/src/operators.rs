//! Cellwise differential operators between spaces, the bubble correction
//! that turns weakly rot-free quadratic fields into rot-free ones, cellwise
//! antidifferentiation, and exactness certificates for the discrete
//! complexes.

use std::collections::VecDeque;
use std::fmt;
use std::sync::Arc;

use faer::Mat;

use crate::basis::{BasisSet, BoundaryCondition};
use crate::error::{Error, Result};
use crate::mesh::{CellGeometry, Triangulation};
use crate::poly::{self, Poly, VecPoly};
use crate::spaces::{cubic_lattice, DofSpace, FeFunction, SpaceKind};
use crate::sparse::{dense_solve, numerical_rank, SparseOperator};

/// `curl q = (-dq/dy, dq/dx)`.
pub fn curl(q: &Poly, g: &CellGeometry) -> VecPoly {
    [-q.dy(g), q.dx(g)]
}

pub fn gradient(q: &Poly, g: &CellGeometry) -> VecPoly {
    [q.dx(g), q.dy(g)]
}

/// Largest value of a field over the cubic lattice of a cell.
pub fn field_scale(v: &VecPoly) -> f64 {
    cubic_lattice()
        .iter()
        .map(|&b| v[0].eval_bary(b).abs().max(v[1].eval_bary(b).abs()))
        .fold(0.0, f64::max)
}

fn require(cond: bool, expected: &'static str, got: SpaceKind) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::KindMismatch { expected, got })
    }
}

/// Cellwise gradient from a cubic space into a vector space. Column `j`
/// holds the target coefficients of the gradient of basis function `j`.
pub fn gradient_op(from: &Arc<DofSpace>, to: &Arc<DofSpace>) -> Result<SparseOperator> {
    require(from.kind.is_cubic(), "cubic (A3/A30)", from.kind)?;
    require(to.kind.is_vector(), "vector-valued", to.kind)?;
    if !Arc::ptr_eq(&from.tri, &to.tri) && from.tri.cells != to.tri.cells {
        return Err(Error::InvalidArgument("spaces live on different meshes".into()));
    }
    let tri = &from.tri;
    let mut triplets = Vec::new();
    if to.kind.is_fortin_soulie() {
        // The Fortin-Soulie decomposition is global; represent column by column.
        for j in 0..from.n_dofs {
            let mut e = vec![0.0; from.n_dofs];
            e[j] = 1.0;
            let f = from.function(e)?;
            let col = to.represent(|c| {
                let p = f.cell_field(c)[0];
                gradient(&p, tri.geometry(c))
            })?;
            triplets.extend(col.coeffs.iter().enumerate().filter(|(_, v)| v.abs() > 0.0).map(|(i, &v)| (i, j, v)));
        }
        return Ok(SparseOperator::from_triplets(to.n_dofs, from.n_dofs, triplets));
    }
    // Locally unisolvent target: local least squares per cell; shared target
    // DOFs are taken from the first cell that carries them.
    let pts = cubic_lattice();
    let mut owner = vec![usize::MAX; to.n_dofs];
    for c in 0..tri.n_cells() {
        for s in &to.cell_shapes[c] {
            if owner[s.dof] == usize::MAX {
                owner[s.dof] = c;
            }
        }
    }
    for c in 0..tri.n_cells() {
        let g = tri.geometry(c);
        let shapes = &to.cell_shapes[c];
        let rows = 2 * pts.len();
        let s = Mat::from_fn(rows, shapes.len(), |r, k| shapes[k].field[r % 2].eval_bary(pts[r / 2]));
        let st = s.transpose();
        let normal = st * &s;
        let srcs = &from.cell_shapes[c];
        let y = Mat::from_fn(rows, srcs.len(), |r, j| gradient(&srcs[j].field[0], g)[r % 2].eval_bary(pts[r / 2]));
        let x = dense_solve(&normal, &(st * &y));
        let fit = &s * &x;
        for (j, src) in srcs.iter().enumerate() {
            let mut resid: f64 = 0.0;
            let mut scale: f64 = 0.0;
            for r in 0..rows {
                resid = resid.max((fit[(r, j)] - y[(r, j)]).abs());
                scale = scale.max(y[(r, j)].abs());
            }
            if resid > 1e-9 * scale.max(f64::MIN_POSITIVE) {
                return Err(Error::NotRepresentable { kind: to.kind, residual: resid / scale });
            }
            for (k, sh) in shapes.iter().enumerate() {
                if owner[sh.dof] == c && x[(k, j)].abs() > 1e-15 * scale {
                    triplets.push((sh.dof, src.dof, x[(k, j)]));
                }
            }
        }
    }
    let op = SparseOperator::from_triplets(to.n_dofs, from.n_dofs, triplets);
    verify_cellwise_gradient(from, to, &op)?;
    Ok(op)
}

/// Check that every column reproduces the cellwise gradient on every cell,
/// which fails if a shared target DOF would need different values on two cells.
fn verify_cellwise_gradient(from: &Arc<DofSpace>, to: &Arc<DofSpace>, op: &SparseOperator) -> Result<()> {
    let tri = &from.tri;
    let opt = op.transpose();
    let pts = cubic_lattice();
    for c in 0..tri.n_cells() {
        let g = tri.geometry(c);
        for src in &from.cell_shapes[c] {
            let target = gradient(&src.field[0], g);
            let coeffs: Vec<(usize, f64)> = opt.row(src.dof).collect();
            let mut got = [Poly::ZERO; 2];
            for sh in &to.cell_shapes[c] {
                if let Some(&(_, w)) = coeffs.iter().find(|(i, _)| *i == sh.dof) {
                    poly::vadd_scaled(&mut got, &sh.field, w);
                }
            }
            let scale = field_scale(&target);
            for &p in &pts {
                for comp in 0..2 {
                    let d = (got[comp].eval_bary(p) - target[comp].eval_bary(p)).abs();
                    if d > 1e-9 * scale.max(f64::MIN_POSITIVE) {
                        return Err(Error::NotRepresentable { kind: to.kind, residual: d / scale });
                    }
                }
            }
        }
    }
    Ok(())
}

fn linear_to_p1dc(from: &DofSpace, to: &DofSpace, op: impl Fn(&VecPoly, &CellGeometry) -> Poly) -> Result<SparseOperator> {
    require(from.kind.is_vector(), "vector-valued", from.kind)?;
    require(matches!(to.kind, SpaceKind::P1dc | SpaceKind::P1dc0), "P1dc or P1dc0", to.kind)?;
    let tri = &from.tri;
    let mut t = Vec::new();
    for c in 0..tri.n_cells() {
        let g = tri.geometry(c);
        for s in &from.cell_shapes[c] {
            let r = op(&s.field, g);
            if r.degree() > 1 {
                return Err(Error::KindMismatch { expected: "quadratic vector field", got: from.kind });
            }
            for i in 0..3 {
                let mut b = [0.0; 3];
                b[i] = 1.0;
                let v = r.eval_bary(b);
                if v != 0.0 {
                    t.push((3 * c + i, s.dof, v));
                }
            }
        }
    }
    Ok(SparseOperator::from_triplets(to.n_dofs, from.n_dofs, t))
}

/// Cellwise `rot v = dv2/dx - dv1/dy` into discontinuous linears.
pub fn rot_op(from: &DofSpace, to: &DofSpace) -> Result<SparseOperator> {
    linear_to_p1dc(from, to, poly::rot)
}

/// Cellwise `div v = dv1/dx + dv2/dy` into discontinuous linears.
pub fn div_op(from: &DofSpace, to: &DofSpace) -> Result<SparseOperator> {
    linear_to_p1dc(from, to, poly::div)
}

/// Bubble coefficients `(b1, b2)` such that `v + (b1 phi_T, b2 phi_T)` is
/// rot-free on the cell. Requires `int_T rot v = 0`.
pub fn bubble_coefficients(g: &CellGeometry, v: &VecPoly) -> std::result::Result<[f64; 2], f64> {
    let r = poly::rot(v, g);
    let scale = v[1].dx(g).max_abs().max(v[0].dy(g).max_abs());
    let mean = r.eval_bary([1.0 / 3.0; 3]);
    if mean.abs() > 1e-10 * scale {
        return Err(mean);
    }
    let grad_r = [r.dx(g).coef[0], r.dy(g).coef[0]];
    // Hessian of the bubble: 2 sum_i grad(lambda_i) grad(lambda_i)^T
    let mut h = [[0.0; 2]; 2];
    for gl in &g.grad_lambda {
        for a in 0..2 {
            for b in 0..2 {
                h[a][b] += 2.0 * gl[a] * gl[b];
            }
        }
    }
    let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
    // (b2, -b1) = -H^{-1} grad(rot v)
    let s0 = -(h[1][1] * grad_r[0] - h[0][1] * grad_r[1]) / det;
    let s1 = -(-h[1][0] * grad_r[0] + h[0][0] * grad_r[1]) / det;
    Ok([-s1, s0])
}

/// `v + bubbles` on one cell, rot-free.
pub fn bubble_corrected(g: &CellGeometry, cell: usize, v: &VecPoly) -> Result<VecPoly> {
    let b = bubble_coefficients(g, v).map_err(|value| Error::NotWeaklyRotFree { cell, value })?;
    let phi = Poly::bubble();
    Ok([v[0] + phi * b[0], v[1] + phi * b[1]])
}

/// Apply the bubble correction to a weakly rot-free quadratic field and
/// represent the result in a Fortin-Soulie space.
pub fn bubble_correction(v: &FeFunction, target: &Arc<DofSpace>) -> Result<FeFunction> {
    require(v.kind().is_vector(), "vector-valued", v.kind())?;
    require(target.kind.is_fortin_soulie(), "G2, G2t or G2z", target.kind)?;
    let tri = &v.space.tri;
    let mut fields = Vec::with_capacity(tri.n_cells());
    for c in 0..tri.n_cells() {
        fields.push(bubble_corrected(tri.geometry(c), c, &v.cell_field(c))?);
    }
    target.represent(|c| fields[c])
}

/// Cellwise potentials of a rot-free field on a set of cells, glued by
/// continuity at vertices.
#[derive(Clone, Debug)]
pub struct Antiderivative {
    /// `(cell, cubic)` for each requested cell.
    pub cells: Vec<(usize, Poly)>,
    /// Largest mismatch of vertex values over all propagation paths.
    pub closure: f64,
    /// Scale of the potential differences (for relative tolerances).
    pub scale: f64,
}

/// Integrate a cellwise rot-free field over `cells`. Vertices listed in
/// `anchors` are pinned to the given values; every cell must be reachable
/// from an anchored vertex through shared vertices.
pub fn antidifferentiate_cells(
    tri: &Triangulation,
    cells: &[usize],
    field: impl Fn(usize) -> VecPoly,
    anchors: &[(usize, f64)],
) -> Result<Antiderivative> {
    let mut pots = Vec::with_capacity(cells.len());
    let mut scale: f64 = 0.0;
    for &c in cells {
        let g = tri.geometry(c);
        let v = field(c);
        let vs = field_scale(&v);
        let r = poly::rot(&v, g);
        let rs = v[1].dx(g).max_abs().max(v[0].dy(g).max_abs()).max(vs / g.inradius());
        if r.max_abs() > 1e-10 * rs {
            return Err(Error::NotRotFree { cell: c, value: r.max_abs() });
        }
        let [j0, j1] = g.jacobian_columns();
        let p = v[0] * j0[0] + v[1] * j0[1];
        let q = v[0] * j1[0] + v[1] * j1[1];
        pots.push(Poly::potential(&p, &q));
        scale = scale.max(vs * g.diameter());
    }
    let mut value: std::collections::HashMap<usize, f64> = anchors.iter().copied().collect();
    let mut constant: Vec<Option<f64>> = vec![None; cells.len()];
    let mut vertex_cells: std::collections::HashMap<usize, Vec<usize>> = std::collections::HashMap::new();
    for (k, &c) in cells.iter().enumerate() {
        for &v in &tri.cells[c] {
            vertex_cells.entry(v).or_default().push(k);
        }
    }
    let corners = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let mut closure: f64 = 0.0;
    let mut queue: VecDeque<usize> = VecDeque::new();
    let mut seeds: Vec<usize> = anchors.iter().map(|a| a.0).collect();
    seeds.sort_unstable();
    for v in seeds {
        if let Some(ks) = vertex_cells.get(&v) {
            queue.extend(ks.iter().copied());
        }
    }
    while let Some(k) = queue.pop_front() {
        if constant[k].is_some() {
            continue;
        }
        let c = cells[k];
        let verts = tri.cells[c];
        let Some(i0) = (0..3).find(|&i| value.contains_key(&verts[i])) else {
            continue;
        };
        let cst = value[&verts[i0]] - pots[k].eval_bary(corners[i0]);
        constant[k] = Some(cst);
        for i in 0..3 {
            let u = cst + pots[k].eval_bary(corners[i]);
            match value.get(&verts[i]) {
                Some(&known) => closure = closure.max((known - u).abs()),
                None => {
                    value.insert(verts[i], u);
                    for &k2 in &vertex_cells[&verts[i]] {
                        if constant[k2].is_none() {
                            queue.push_back(k2);
                        }
                    }
                }
            }
        }
    }
    let missing: Vec<usize> = (0..cells.len()).filter(|&k| constant[k].is_none()).map(|k| cells[k]).collect();
    if !missing.is_empty() {
        return Err(Error::Unanchored(missing));
    }
    if closure > 1e-8 * scale.max(f64::MIN_POSITIVE) && closure > 0.0 {
        return Err(Error::ClosureResidual(closure / scale.max(f64::MIN_POSITIVE)));
    }
    let out = cells.iter().zip(pots).zip(constant).map(|((&c, p), k)| (c, p + Poly::constant(k.unwrap()))).collect();
    Ok(Antiderivative { cells: out, closure, scale })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Anchor {
    /// All boundary vertices carry value 0; the result lives in `A30`.
    Boundary,
    /// A single vertex carries the given value; the result lives in `A3`.
    Vertex(usize, f64),
}

/// Cellwise antiderivative of a rot-free vector field with vertex
/// continuity. Returns the function and the closure residual.
pub fn antidifferentiate(v: &FeFunction, anchor: Anchor) -> Result<(FeFunction, f64)> {
    require(v.kind().is_vector(), "vector-valued", v.kind())?;
    let tri = &v.space.tri;
    let (anchors, kind) = match anchor {
        Anchor::Boundary => (
            (0..tri.n_vertices()).filter(|&a| tri.is_boundary_vertex(a)).map(|a| (a, 0.0)).collect::<Vec<_>>(),
            SpaceKind::A30,
        ),
        Anchor::Vertex(a, val) => (vec![(a, val)], SpaceKind::A3),
    };
    let cells: Vec<usize> = (0..tri.n_cells()).collect();
    let anti = antidifferentiate_cells(tri, &cells, |c| v.cell_field(c), &anchors)?;
    let space = Arc::new(DofSpace::new(Arc::clone(tri), kind));
    let polys: Vec<Poly> = anti.cells.iter().map(|(_, p)| *p).collect();
    let f = space.represent(|c| [polys[c], Poly::ZERO])?;
    Ok((f, anti.closure))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Complex {
    /// `A30 -> G2r0 -> P1dc0`.
    A,
    /// `B30 -> G2z -> P1dc0`.
    Dirichlet,
    /// `B3t -> G2t -> P1dc0`.
    Navier,
}

impl std::str::FromStr for Complex {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "a" | "A" => Ok(Complex::A),
            "dirichlet" => Ok(Complex::Dirichlet),
            "navier" => Ok(Complex::Navier),
            other => Err(Error::InvalidArgument(format!("unknown complex {other:?}"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Certificate {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct ExactnessReport {
    pub complex: Complex,
    /// `(name, dimension)` of the three spaces.
    pub spaces: [(String, usize); 3],
    pub rank_grad: usize,
    pub rank_rot: usize,
    pub kernel_rot: usize,
    pub composition_max: f64,
    pub certificates: Vec<Certificate>,
}

impl ExactnessReport {
    pub fn passed(&self) -> bool {
        self.certificates.iter().all(|c| c.passed)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("quantity,value\n");
        for (name, d) in &self.spaces {
            s.push_str(&format!("dim {name},{d}\n"));
        }
        s.push_str(&format!("rank grad,{}\nrank rot,{}\nkernel rot,{}\n", self.rank_grad, self.rank_rot, self.kernel_rot));
        s.push_str(&format!("max |rot grad|,{:e}\n", self.composition_max));
        for c in &self.certificates {
            s.push_str(&format!("{},{}\n", c.name, if c.passed { "pass" } else { "FAIL" }));
        }
        s
    }
}

impl fmt::Display for ExactnessReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "complex: {:?}", self.complex)?;
        let [a, b, c] = &self.spaces;
        writeln!(f, "  dims          {} -> {} -> {}   ({} {} {})", a.1, b.1, c.1, a.0, b.0, c.0)?;
        writeln!(f, "  rank grad     {}", self.rank_grad)?;
        writeln!(f, "  rank rot      {}", self.rank_rot)?;
        writeln!(f, "  kernel rot    {}", self.kernel_rot)?;
        writeln!(f, "  max|rot grad| {:.3e}", self.composition_max)?;
        for cert in &self.certificates {
            writeln!(f, "  {:<26} {}  {}", cert.name, if cert.passed { "pass" } else { "FAIL" }, cert.detail)?;
        }
        Ok(())
    }
}

const RANK_TOL: f64 = 1e-9;

/// Certify exactness of one of the three discrete complexes: `rot grad = 0`,
/// `range(grad) = ker(rot)`, `rot` onto the mean-zero linears, `grad` injective.
pub fn check_complex(tri: &Arc<Triangulation>, which: Complex) -> Result<ExactnessReport> {
    let p1 = DofSpace::new(Arc::clone(tri), SpaceKind::P1dc0);
    let (source_name, source_dim, middle, grad) = match which {
        Complex::A => {
            let a30 = Arc::new(DofSpace::new(Arc::clone(tri), SpaceKind::A30));
            let g2r0 = Arc::new(DofSpace::new(Arc::clone(tri), SpaceKind::G2r0));
            let grad = gradient_op(&a30, &g2r0)?;
            ("A30".to_string(), a30.dim(), g2r0, grad)
        }
        Complex::Dirichlet | Complex::Navier => {
            let (bc, kind) = if which == Complex::Dirichlet {
                (BoundaryCondition::Dirichlet, SpaceKind::G2z)
            } else {
                (BoundaryCondition::Navier, SpaceKind::G2t)
            };
            let basis = BasisSet::build(tri, bc)?;
            let mid = Arc::new(DofSpace::new(Arc::clone(tri), kind));
            let mut t = Vec::new();
            for j in 0..basis.len() {
                let w = basis.function_a3(j);
                let col = mid.represent(|c| gradient(&w.cell_field(c)[0], tri.geometry(c)))?;
                t.extend(col.coeffs.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, &v)| (i, j, v)));
            }
            let name = if which == Complex::Dirichlet { "B30" } else { "B3t" };
            let grad = SparseOperator::from_triplets(mid.n_dofs, basis.len(), t);
            (name.to_string(), basis.len(), mid, grad)
        }
    };
    let rot = rot_op(&middle, &p1)?;
    let comp = rot.matmul(&grad);
    let comp_scale = rot.max_abs() * grad.max_abs();
    let composition_max = comp.max_abs() / comp_scale.max(f64::MIN_POSITIVE);
    let rank_grad = numerical_rank(&grad.to_dense(), RANK_TOL);
    let rank_rot = numerical_rank(&rot.to_dense(), RANK_TOL);
    let mean = rot.matvec_t(&p1.constraints[0]);
    let mean_max = mean.iter().fold(0.0f64, |m, v| m.max(v.abs())) / (rot.max_abs() * tri.area()).max(f64::MIN_POSITIVE);
    let mid_dim = middle.dim();
    let kernel_rot = mid_dim - rank_rot;
    let certificates = vec![
        Certificate {
            name: "rot o grad = 0",
            passed: composition_max <= 1e-12,
            detail: format!("relative max entry {composition_max:.2e}"),
        },
        Certificate {
            name: "range(grad) = ker(rot)",
            passed: rank_grad == kernel_rot,
            detail: format!("rank grad {rank_grad}, dim ker rot {kernel_rot}"),
        },
        Certificate {
            name: "rot onto pressure space",
            passed: rank_rot == p1.dim() && mean_max <= 1e-12,
            detail: format!("rank rot {rank_rot}, dim {} {}, mean {mean_max:.1e}", p1.kind, p1.dim()),
        },
        Certificate {
            name: "grad injective",
            passed: rank_grad == source_dim,
            detail: format!("rank grad {rank_grad}, dim {source_name} {source_dim}"),
        },
    ];
    Ok(ExactnessReport {
        complex: which,
        spaces: [(source_name, source_dim), (middle.kind.to_string(), mid_dim), (p1.kind.to_string(), p1.dim())],
        rank_grad,
        rank_rot,
        kernel_rot,
        composition_max,
        certificates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Triangulation;

    fn mesh(n: usize) -> Arc<Triangulation> {
        Arc::new(Triangulation::unit_square(n))
    }

    fn x_field(tri: &Triangulation, c: usize) -> Poly {
        let v = tri.geometry(c).vertices;
        Poly::constant(v[0][0]) + Poly::lambda(1) * (v[1][0] - v[0][0]) + Poly::lambda(2) * (v[2][0] - v[0][0])
    }

    #[test]
    fn laplacian_splits_into_grad_div_and_curl_rot() {
        let g = CellGeometry::new([[0.1, 0.0], [1.0, 0.3], [0.2, 0.9]]).unwrap();
        for (i, j) in [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)] {
            for comp in 0..2 {
                let mut v = [Poly::ZERO; 2];
                v[comp] = Poly::monomial(i, j, 1.0);
                let lap = [v[0].dx(&g).dx(&g) + v[0].dy(&g).dy(&g), v[1].dx(&g).dx(&g) + v[1].dy(&g).dy(&g)];
                let gd = gradient(&poly::div(&v, &g), &g);
                let cr = curl(&poly::rot(&v, &g), &g);
                for k in 0..2 {
                    assert!((lap[k] - gd[k] - cr[k]).max_abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn gradients_of_constants_and_linears() {
        let t = mesh(2);
        let a3 = Arc::new(DofSpace::new(t.clone(), SpaceKind::A3));
        let g2r = Arc::new(DofSpace::new(t.clone(), SpaceKind::G2r));
        let grad = gradient_op(&a3, &g2r).unwrap();
        let one = a3.represent(|_| [Poly::constant(1.0), Poly::ZERO]).unwrap();
        assert!(grad.matvec(&one.coeffs).iter().all(|v| v.abs() < 1e-13));
        let x = a3.represent(|c| [x_field(&t, c), Poly::ZERO]).unwrap();
        let gx = g2r.function(grad.matvec(&x.coeffs)).unwrap();
        for c in 0..t.n_cells() {
            let v = gx.evaluate(c, [0.2, 0.5, 0.3]);
            assert!((v[0] - 1.0).abs() < 1e-12 && v[1].abs() < 1e-12);
        }
    }

    #[test]
    fn rot_and_div_of_linear_fields() {
        let t = mesh(2);
        let s2 = Arc::new(DofSpace::new(t.clone(), SpaceKind::S2vec));
        let p1 = DofSpace::new(t.clone(), SpaceKind::P1dc);
        let rot = rot_op(&s2, &p1).unwrap();
        let div = div_op(&s2, &p1).unwrap();
        let y = |c: usize| {
            let v = t.geometry(c).vertices;
            Poly::constant(v[0][1]) + Poly::lambda(1) * (v[1][1] - v[0][1]) + Poly::lambda(2) * (v[2][1] - v[0][1])
        };
        let rotation = s2.represent(|c| [y(c) * -1.0, x_field(&t, c)]).unwrap();
        let radial = s2.represent(|c| [x_field(&t, c), y(c)]).unwrap();
        let constant = s2.represent(|_| [Poly::constant(1.0), Poly::ZERO]).unwrap();
        for v in rot.matvec(&rotation.coeffs) {
            assert!((v - 2.0).abs() < 1e-12);
        }
        assert!(div.matvec(&rotation.coeffs).iter().all(|v| v.abs() < 1e-12));
        for v in div.matvec(&radial.coeffs) {
            assert!((v - 2.0).abs() < 1e-12);
        }
        assert!(rot.matvec(&radial.coeffs).iter().all(|v| v.abs() < 1e-12));
        assert!(rot.matvec(&constant.coeffs).iter().chain(div.matvec(&constant.coeffs).iter()).all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn sum_of_vertex_frames_is_corrected_to_zero() {
        // Vertex values (1,0) everywhere with zero edge means: three times the bubble.
        let g = CellGeometry::new([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        let l2 = crate::spaces::lagrange2_shapes();
        let mut v = [Poly::ZERO; 2];
        for k in 0..3 {
            v[0] += l2[k] + l2[3 + k] * -0.5;
        }
        let out = bubble_corrected(&g, 0, &v).unwrap();
        assert!(out[0].max_abs() < 1e-14 && out[1].max_abs() < 1e-14);
    }

    #[test]
    fn rot_free_field_is_a_fixed_point() {
        let g = CellGeometry::new([[0.0, 0.0], [2.0, 0.5], [0.3, 1.0]]).unwrap();
        let v = gradient(&(Poly::monomial(3, 0, 1.0) + Poly::monomial(1, 1, 2.0)), &g);
        let b = bubble_coefficients(&g, &v).unwrap();
        assert!(b[0].abs() < 1e-14 && b[1].abs() < 1e-14);
    }

    #[test]
    fn weak_rot_violation_is_reported() {
        let g = CellGeometry::new([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        let v = [Poly::monomial(0, 1, -1.0), Poly::monomial(1, 0, 1.0)];
        assert!(matches!(bubble_corrected(&g, 3, &v), Err(Error::NotWeaklyRotFree { cell: 3, .. })));
    }

    #[test]
    fn antiderivative_of_constant_field() {
        let t = mesh(3);
        let g2r = Arc::new(DofSpace::new(t.clone(), SpaceKind::G2r));
        let v = g2r.represent(|_| [Poly::constant(1.0), Poly::ZERO]).unwrap();
        let v0 = 5;
        let (u, closure) = antidifferentiate(&v, Anchor::Vertex(v0, 0.0)).unwrap();
        assert!(closure < 1e-13);
        for c in 0..t.n_cells() {
            let b = [0.2, 0.3, 0.5];
            let p = t.geometry(c).point(b);
            assert!((u.evaluate(c, b)[0] - (p[0] - t.vertices[v0][0])).abs() < 1e-13);
        }
    }

    #[test]
    fn antiderivative_inverts_gradient() {
        let t = mesh(2);
        let a30 = Arc::new(DofSpace::new(t.clone(), SpaceKind::A30));
        let g2r0 = Arc::new(DofSpace::new(t.clone(), SpaceKind::G2r0));
        let grad = gradient_op(&a30, &g2r0).unwrap();
        let c: Vec<f64> = (0..a30.n_dofs).map(|i| ((i * 7919) % 13) as f64 / 13.0 - 0.4).collect();
        let v = g2r0.function(grad.matvec(&c)).unwrap();
        let (u, _) = antidifferentiate(&v, Anchor::Boundary).unwrap();
        let scale = c.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for (a, b) in u.coeffs.iter().zip(&c) {
            assert!((a - b).abs() < 1e-12 * scale);
        }
    }

    #[test]
    fn a_complex_on_single_square() {
        let r = check_complex(&mesh(1), Complex::A).unwrap();
        assert_eq!([r.spaces[0].1, r.spaces[1].1, r.spaces[2].1], [14, 19, 5]);
        assert_eq!((r.rank_grad, r.rank_rot), (14, 5));
        assert!(r.passed(), "{r}");
    }

    #[test]
    fn random_compositions_vanish() {
        let t = mesh(2);
        let a30 = Arc::new(DofSpace::new(t.clone(), SpaceKind::A30));
        let g2r0 = Arc::new(DofSpace::new(t.clone(), SpaceKind::G2r0));
        let p1 = DofSpace::new(t.clone(), SpaceKind::P1dc0);
        let grad = gradient_op(&a30, &g2r0).unwrap();
        let rot = rot_op(&g2r0, &p1).unwrap();
        let mut state = 12345u64;
        for _ in 0..100 {
            let c: Vec<f64> = (0..a30.n_dofs)
                .map(|_| {
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
                })
                .collect();
            let r = rot.matvec(&grad.matvec(&c));
            assert!(r.iter().all(|v| v.abs() < 1e-12));
        }
    }
}
