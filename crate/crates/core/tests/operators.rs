use std::sync::Arc;

use ncbiharm::operators::{antidifferentiate, antidifferentiate_cells, bubble_correction, check_complex, gradient_op, rot_op, Anchor, Complex};
use ncbiharm::poly::Poly;
use ncbiharm::{DofSpace, Error, Pattern, Rect, SpaceKind, Triangulation};

fn mesh(n: usize) -> Arc<Triangulation> {
    Arc::new(Triangulation::unit_square(n))
}

#[test]
fn complexes_on_diagonal_meshes() {
    for n in [1, 3] {
        let t = Arc::new(Triangulation::structured(n, Pattern::Diagonal, Rect::UNIT));
        for which in [Complex::A, Complex::Dirichlet, Complex::Navier] {
            let r = check_complex(&t, which).unwrap();
            assert!(r.passed(), "{r}");
        }
    }
}

#[test]
fn clamped_kernel_dimension_on_two_by_two() {
    let r = check_complex(&mesh(2), Complex::Dirichlet).unwrap();
    assert_eq!(r.kernel_rot, 11);
    assert_eq!(r.spaces[0].1, 11);
}

#[test]
fn gradient_into_wrong_kind_is_rejected() {
    let t = mesh(2);
    let a3 = Arc::new(DofSpace::new(t.clone(), SpaceKind::A3));
    let p1 = Arc::new(DofSpace::new(t.clone(), SpaceKind::P1dc));
    assert!(matches!(gradient_op(&p1, &a3), Err(Error::KindMismatch { .. })));
    assert!(matches!(gradient_op(&a3, &p1), Err(Error::KindMismatch { .. })));
}

#[test]
fn gradient_of_a3_does_not_fit_clamped_space() {
    let t = mesh(2);
    let a3 = Arc::new(DofSpace::new(t.clone(), SpaceKind::A3));
    let g2z = Arc::new(DofSpace::new(t.clone(), SpaceKind::G2z));
    assert!(matches!(gradient_op(&a3, &g2z), Err(Error::NotRepresentable { .. })));
}

#[test]
fn rot_of_gradients_vanishes_on_lshape() {
    let t = Arc::new(Triangulation::lshape(4, 0.2, 5));
    let a30 = Arc::new(DofSpace::new(t.clone(), SpaceKind::A30));
    let g2r0 = Arc::new(DofSpace::new(t.clone(), SpaceKind::G2r0));
    let p1 = DofSpace::new(t.clone(), SpaceKind::P1dc0);
    let comp = rot_op(&g2r0, &p1).unwrap().matmul(&gradient_op(&a30, &g2r0).unwrap());
    assert!(comp.max_abs() < 1e-11);
}

#[test]
fn bubble_correction_lands_in_the_fortin_soulie_space() {
    // A vertex frame (value 1 at one interior vertex, -1/4 at the midpoints
    // around it) is weakly rot-free; its correction is rot-free and clamped.
    let t = mesh(2);
    let s2 = Arc::new(DofSpace::new(t.clone(), SpaceKind::S2vec));
    let g2z = Arc::new(DofSpace::new(t.clone(), SpaceKind::G2z));
    let center = 4;
    let nv = t.n_vertices();
    let mut coeffs = vec![0.0; s2.n_dofs];
    // S2vec stores (x, y) per node, vertices first.
    coeffs[2 * center + 1] = 1.0;
    for &e in t.vertex_edges(center) {
        coeffs[2 * (nv + e) + 1] = -0.25;
    }
    let v = s2.function(coeffs).unwrap();
    let w = bubble_correction(&v, &g2z).unwrap();
    let p1 = DofSpace::new(t.clone(), SpaceKind::P1dc);
    let r = rot_op(&g2z, &p1).unwrap().matvec(&w.coeffs);
    assert!(r.iter().all(|x| x.abs() < 1e-12));
}

#[test]
fn weak_rot_violation_is_reported() {
    let t = mesh(1);
    let s2 = Arc::new(DofSpace::new(t.clone(), SpaceKind::S2vec));
    let g2 = Arc::new(DofSpace::new(t.clone(), SpaceKind::G2));
    // (-y, x) has rot 2 on every cell.
    let v = s2.represent(|c| {
        let g = t.geometry(c);
        let lin = |k: usize| {
            Poly::constant(g.vertices[0][k])
                + Poly::lambda(1) * (g.vertices[1][k] - g.vertices[0][k])
                + Poly::lambda(2) * (g.vertices[2][k] - g.vertices[0][k])
        };
        [lin(1) * -1.0, lin(0)]
    });
    assert!(matches!(bubble_correction(&v.unwrap(), &g2), Err(Error::NotWeaklyRotFree { .. })));
}

#[test]
fn antiderivative_needs_an_anchor() {
    let t = mesh(2);
    let cells: Vec<usize> = (0..t.n_cells()).collect();
    let r = antidifferentiate_cells(&t, &cells, |_| [Poly::constant(1.0), Poly::ZERO], &[]);
    assert!(matches!(r, Err(Error::Unanchored(ref c)) if c.len() == t.n_cells()));
}

#[test]
fn inconsistent_anchors_break_closure() {
    let t = mesh(2);
    let cells: Vec<usize> = (0..t.n_cells()).collect();
    // u = x on a field of (1, 0) cannot vanish on both x = 0 and x = 1.
    let anchors: Vec<(usize, f64)> = (0..t.n_vertices()).filter(|&v| t.is_boundary_vertex(v)).map(|v| (v, 0.0)).collect();
    let r = antidifferentiate_cells(&t, &cells, |_| [Poly::constant(1.0), Poly::ZERO], &anchors);
    assert!(matches!(r, Err(Error::ClosureResidual(_))));
}

#[test]
fn non_rot_free_field_is_rejected() {
    let t = mesh(1);
    let cells: Vec<usize> = (0..t.n_cells()).collect();
    let r = antidifferentiate_cells(&t, &cells, |_| [Poly::monomial(0, 1, 1.0), Poly::ZERO], &[(0, 0.0)]);
    assert!(matches!(r, Err(Error::NotRotFree { .. })));
}

#[test]
fn antiderivative_inverts_the_gradient() {
    let t = mesh(3);
    let a30 = Arc::new(DofSpace::new(t.clone(), SpaceKind::A30));
    let g2r0 = Arc::new(DofSpace::new(t.clone(), SpaceKind::G2r0));
    let u: Vec<f64> = (0..a30.dim()).map(|i| (i as f64 * 0.7).cos()).collect();
    let v = g2r0.function(gradient_op(&a30, &g2r0).unwrap().matvec(&u)).unwrap();
    let (w, closure) = antidifferentiate(&v, Anchor::Boundary).unwrap();
    assert!(closure < 1e-10);
    assert!(w.coeffs.iter().zip(&u).all(|(a, b)| (a - b).abs() < 1e-10));
}
