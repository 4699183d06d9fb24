//! Quadrature assembly of the bilinear forms and load vectors.

use std::fmt;

use crate::basis::BasisSet;
use crate::error::{Error, Result};
use crate::mesh::{CellGeometry, Triangulation};
use crate::poly::{self, Poly, VecPoly};
use crate::quadrature::with_triangle_rule;
use crate::spaces::DofSpace;
use crate::sparse::SparseOperator;

/// Bilinear form of the fourth-order problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Form {
    /// `(A D^2 u, D^2 v)`
    Hessian,
    /// `(A Lap u, Lap v)`
    Laplacian,
}

impl Form {
    pub fn name(self) -> &'static str {
        match self {
            Form::Hessian => "hessian",
            Form::Laplacian => "laplacian",
        }
    }
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Form {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hessian" => Ok(Form::Hessian),
            "laplacian" => Ok(Form::Laplacian),
            other => Err(Error::InvalidArgument(format!("unknown form {other:?}"))),
        }
    }
}

/// Scalar field on the plane.
pub type Field<'a> = &'a (dyn Fn([f64; 2]) -> f64 + Sync);

/// Quantity of a local shape evaluated at quadrature points. Up to four
/// components; the form pairs them componentwise with fixed weights.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Feature {
    /// `(v1, v2)`, or the scalar in slot 0.
    Value,
    /// `(dv/dx, dv/dy)` of a scalar.
    Gradient,
    /// `(dv1/dx, dv1/dy, dv2/dx, dv2/dy)`.
    VectorGradient,
    /// `(dxx, dxy, dyy)` of a scalar.
    Hessian,
    Laplacian,
    Div,
    Rot,
}

impl Feature {
    fn weights(self) -> [f64; 4] {
        match self {
            Feature::Value | Feature::Gradient => [1.0, 1.0, 0.0, 0.0],
            Feature::VectorGradient => [1.0; 4],
            Feature::Hessian => [1.0, 2.0, 1.0, 0.0],
            Feature::Laplacian | Feature::Div | Feature::Rot => [1.0, 0.0, 0.0, 0.0],
        }
    }

    fn polys(self, v: &VecPoly, g: &CellGeometry) -> [Poly; 4] {
        let z = Poly::ZERO;
        match self {
            Feature::Value => [v[0], v[1], z, z],
            Feature::Gradient => [v[0].dx(g), v[0].dy(g), z, z],
            Feature::VectorGradient => [v[0].dx(g), v[0].dy(g), v[1].dx(g), v[1].dy(g)],
            Feature::Hessian => {
                let (px, py) = (v[0].dx(g), v[0].dy(g));
                [px.dx(g), px.dy(g), py.dy(g), z]
            }
            Feature::Laplacian => [v[0].dx(g).dx(g) + v[0].dy(g).dy(g), z, z, z],
            Feature::Div => [poly::div(v, g), z, z, z],
            Feature::Rot => [poly::rot(v, g), z, z, z],
        }
    }
}

/// Local shapes `(global index, field)` on one cell.
pub type Shapes<'a> = &'a dyn Fn(usize) -> Vec<(usize, VecPoly)>;

pub fn space_shapes(space: &DofSpace) -> impl Fn(usize) -> Vec<(usize, VecPoly)> + '_ {
    move |c| space.cell_shapes[c].iter().map(|s| (s.dof, s.field)).collect()
}

pub fn basis_shapes(basis: &BasisSet) -> impl Fn(usize) -> Vec<(usize, VecPoly)> + '_ {
    move |c| basis.cell_functions(c).iter().map(|(j, p)| (*j, [*p, Poly::ZERO])).collect()
}

fn evaluate(feature: Feature, shapes: &[(usize, VecPoly)], g: &CellGeometry, points: &[[f64; 3]]) -> Vec<Vec<[f64; 4]>> {
    shapes
        .iter()
        .map(|(_, f)| {
            let ps = feature.polys(f, g);
            points.iter().map(|&b| [ps[0].eval_bary(b), ps[1].eval_bary(b), ps[2].eval_bary(b), ps[3].eval_bary(b)]).collect()
        })
        .collect()
}

/// `M[i, j] = sum_T int_T a(x) test_i . trial_j` with the feature weights of
/// `test` (both features must use the same pairing).
#[allow(clippy::too_many_arguments)]
pub fn gram(
    tri: &Triangulation,
    rows: usize,
    cols: usize,
    test: Shapes,
    test_feature: Feature,
    trial: Shapes,
    trial_feature: Feature,
    coefficient: Option<Field>,
) -> SparseOperator {
    let cw = test_feature.weights();
    let mut triplets = Vec::new();
    with_triangle_rule(|rule| {
        for c in 0..tri.n_cells() {
            let g = tri.geometry(c);
            let ts = test(c);
            let rs = trial(c);
            if ts.is_empty() || rs.is_empty() {
                continue;
            }
            let qw: Vec<f64> = rule
                .points
                .iter()
                .zip(&rule.weights)
                .map(|(&b, &w)| w * g.area * coefficient.map_or(1.0, |a| a(g.point(b))))
                .collect();
            let tv = evaluate(test_feature, &ts, g, &rule.points);
            let rv = evaluate(trial_feature, &rs, g, &rule.points);
            for (i, (ti, _)) in ts.iter().enumerate() {
                for (j, (tj, _)) in rs.iter().enumerate() {
                    let mut s = 0.0;
                    for (q, w) in qw.iter().enumerate() {
                        let (a, b) = (&tv[i][q], &rv[j][q]);
                        s += w * (cw[0] * a[0] * b[0] + cw[1] * a[1] * b[1] + cw[2] * a[2] * b[2] + cw[3] * a[3] * b[3]);
                    }
                    if s != 0.0 {
                        triplets.push((*ti, *tj, s));
                    }
                }
            }
        }
    });
    SparseOperator::from_triplets(rows, cols, triplets)
}

/// `b[i] = int f . v_i` for a vector (or scalar in slot 0) source.
pub fn load(tri: &Triangulation, n: usize, shapes: Shapes, f: &(dyn Fn([f64; 2]) -> [f64; 2] + Sync)) -> Vec<f64> {
    load_feature(tri, n, shapes, Feature::Value, &|x| {
        let v = f(x);
        [v[0], v[1], 0.0, 0.0]
    })
}

/// `b[i] = int f . F(v_i)` with the pairing weights of the feature `F`.
pub fn load_feature(
    tri: &Triangulation,
    n: usize,
    shapes: Shapes,
    feature: Feature,
    f: &(dyn Fn([f64; 2]) -> [f64; 4] + Sync),
) -> Vec<f64> {
    let cw = feature.weights();
    let mut b = vec![0.0; n];
    with_triangle_rule(|rule| {
        for c in 0..tri.n_cells() {
            let g = tri.geometry(c);
            let ss = shapes(c);
            if ss.is_empty() {
                continue;
            }
            let fq: Vec<[f64; 4]> = rule.points.iter().map(|&p| f(g.point(p))).collect();
            let vals = evaluate(feature, &ss, g, &rule.points);
            for (k, (i, _)) in ss.iter().enumerate() {
                let mut s = 0.0;
                for (q, &w) in rule.weights.iter().enumerate() {
                    let (a, v) = (&fq[q], &vals[k][q]);
                    s += w * (cw[0] * a[0] * v[0] + cw[1] * a[1] * v[1] + cw[2] * a[2] * v[2] + cw[3] * a[3] * v[3]);
                }
                b[*i] += s * g.area;
            }
        }
    });
    b
}

fn form_feature(form: Form) -> Feature {
    match form {
        Form::Hessian => Feature::Hessian,
        Form::Laplacian => Feature::Laplacian,
    }
}

/// Fourth-order stiffness matrix on a cubic space.
pub fn biharmonic_matrix(space: &DofSpace, form: Form, coefficient: Option<Field>) -> SparseOperator {
    let s = space_shapes(space);
    let f = form_feature(form);
    gram(&space.tri, space.n_dofs, space.n_dofs, &s, f, &s, f, coefficient)
}

/// Load vector `(f, v)` on a scalar space.
pub fn scalar_load(space: &DofSpace, f: Field) -> Vec<f64> {
    load(&space.tri, space.n_dofs, &space_shapes(space), &|x| [f(x), 0.0])
}

/// Stiffness in the basis: `T^T K T` with `K` assembled on `A30`.
pub fn basis_matrix(basis: &BasisSet, form: Form, coefficient: Option<Field>) -> SparseOperator {
    biharmonic_matrix(&basis.a30, form, coefficient).congruence(&basis.transform)
}

/// Stiffness in the basis by looping over the supports of the basis functions.
pub fn basis_matrix_direct(basis: &BasisSet, form: Form, coefficient: Option<Field>) -> SparseOperator {
    let s = basis_shapes(basis);
    let f = form_feature(form);
    gram(&basis.tri, basis.len(), basis.len(), &s, f, &s, f, coefficient)
}

pub fn basis_load(basis: &BasisSet, f: Field) -> Vec<f64> {
    basis.transform.matvec_t(&scalar_load(&basis.a30, f))
}

/// `(grad u, grad v)` on a scalar space.
pub fn poisson_matrix(space: &DofSpace) -> SparseOperator {
    let s = space_shapes(space);
    gram(&space.tri, space.n_dofs, space.n_dofs, &s, Feature::Gradient, &s, Feature::Gradient, None)
}

/// `(grad u, grad v)` on a vector space, cellwise.
pub fn vector_laplacian(space: &DofSpace) -> SparseOperator {
    let s = space_shapes(space);
    gram(&space.tri, space.n_dofs, space.n_dofs, &s, Feature::VectorGradient, &s, Feature::VectorGradient, None)
}

pub fn div_div(space: &DofSpace) -> SparseOperator {
    let s = space_shapes(space);
    gram(&space.tri, space.n_dofs, space.n_dofs, &s, Feature::Div, &s, Feature::Div, None)
}

pub fn rot_rot(space: &DofSpace) -> SparseOperator {
    let s = space_shapes(space);
    gram(&space.tri, space.n_dofs, space.n_dofs, &s, Feature::Rot, &s, Feature::Rot, None)
}

/// `(u, v)` on any space.
pub fn mass_matrix(space: &DofSpace) -> SparseOperator {
    let s = space_shapes(space);
    gram(&space.tri, space.n_dofs, space.n_dofs, &s, Feature::Value, &s, Feature::Value, None)
}

/// `B[k, j] = (q_k, rot v_j)` with `q` in a discontinuous linear space.
pub fn pressure_coupling(pressure: &DofSpace, velocity: &DofSpace) -> SparseOperator {
    gram(
        &velocity.tri,
        pressure.n_dofs,
        velocity.n_dofs,
        &space_shapes(pressure),
        Feature::Value,
        &space_shapes(velocity),
        Feature::Rot,
        None,
    )
}

/// `C[i, j] = (grad s_j, v_i)` from a scalar space into a vector space.
pub fn gradient_coupling(vector: &DofSpace, scalar: &DofSpace) -> SparseOperator {
    gram(
        &vector.tri,
        vector.n_dofs,
        scalar.n_dofs,
        &space_shapes(vector),
        Feature::Value,
        &space_shapes(scalar),
        Feature::Gradient,
        None,
    )
}

/// Integral weights `int_T lambda_i = |T|/3` of the discontinuous linears.
pub fn p1dc_means(tri: &Triangulation) -> Vec<f64> {
    (0..3 * tri.n_cells()).map(|i| tri.geometry(i / 3).area / 3.0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::SpaceKind;
    use std::sync::Arc;

    #[test]
    fn mass_of_constant_is_area() {
        let t = Arc::new(Triangulation::unit_square(3));
        let p1 = DofSpace::new(t.clone(), SpaceKind::P1dc);
        let m = mass_matrix(&p1);
        let one = vec![1.0; p1.n_dofs];
        let total: f64 = m.matvec(&one).iter().sum();
        assert!((total - 1.0).abs() < 1e-13);
        assert!(m.asymmetry() < 1e-15);
    }

    #[test]
    fn poisson_energy_of_linear() {
        let t = Arc::new(Triangulation::unit_square(2));
        let a3 = Arc::new(DofSpace::new(t.clone(), SpaceKind::A3));
        let x = a3
            .represent(|c| {
                let v = t.geometry(c).vertices;
                [Poly::constant(v[0][0]) + Poly::lambda(1) * (v[1][0] - v[0][0]) + Poly::lambda(2) * (v[2][0] - v[0][0]), Poly::ZERO]
            })
            .unwrap();
        let k = poisson_matrix(&a3);
        let e: f64 = crate::sparse::dot(&x.coeffs, &k.matvec(&x.coeffs));
        assert!((e - 1.0).abs() < 1e-12);
        assert!(biharmonic_matrix(&a3, Form::Hessian, None).matvec(&x.coeffs).iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn load_of_constant_integrates_shapes() {
        let t = Arc::new(Triangulation::unit_square(2));
        let a3 = DofSpace::new(t.clone(), SpaceKind::A3);
        let b = scalar_load(&a3, &|_| 1.0);
        let one = Arc::new(DofSpace::new(t, SpaceKind::A3)).represent(|_| [Poly::constant(1.0), Poly::ZERO]).unwrap();
        assert!((crate::sparse::dot(&b, &one.coeffs) - 1.0).abs() < 1e-13);
    }
}
