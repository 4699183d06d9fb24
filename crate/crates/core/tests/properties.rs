use std::io::BufReader;
use std::sync::Arc;

use ncbiharm::assembly::{self, Form};
use ncbiharm::basis::{BasisSet, BoundaryCondition};
use ncbiharm::operators::{gradient_op, rot_op};
use ncbiharm::poly::{Poly, NCOEF};
use ncbiharm::spaces::{a3_block, a3_poly};
use ncbiharm::sparse::{dot, max_abs};
use ncbiharm::{DofSpace, Pattern, Rect, SpaceKind, Triangulation};
use proptest::prelude::*;

fn cubic() -> impl Strategy<Value = Poly> {
    prop::array::uniform10(-5.0f64..5.0).prop_map(|coef| Poly { coef })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn a3_block_round_trip(p in cubic()) {
        let q = a3_poly(&a3_block(&p));
        for k in 0..NCOEF {
            prop_assert!((p.coef[k] - q.coef[k]).abs() <= 1e-10 * (1.0 + p.max_abs()));
        }
    }

    #[test]
    fn rot_of_gradient_vanishes(seed in 0u64..1000, n in 1usize..4, three in any::<bool>()) {
        let pattern = if three { Pattern::ThreeDirectional } else { Pattern::Diagonal };
        let tri = Arc::new(Triangulation::structured(n, pattern, Rect { xmin: 0.0, xmax: 1.0, ymin: 0.0, ymax: 1.0 }));
        let a30 = Arc::new(DofSpace::new(Arc::clone(&tri), SpaceKind::A30));
        let g2 = Arc::new(DofSpace::new(Arc::clone(&tri), SpaceKind::G2r0));
        let p1 = Arc::new(DofSpace::new(Arc::clone(&tri), SpaceKind::P1dc));
        let grad = gradient_op(&a30, &g2).unwrap();
        let rot = rot_op(&g2, &p1).unwrap();
        let mut x = seed as f64;
        let u: Vec<f64> = (0..a30.dim()).map(|_| { x = (x * 1.618 + 0.37).fract(); x - 0.5 }).collect();
        let gu = grad.matvec(&u);
        prop_assert!(max_abs(&rot.matvec(&gu)) <= 1e-10 * (1.0 + max_abs(&gu)));
    }

    #[test]
    fn mesh_text_round_trip(n in 1usize..6, x0 in -3.0f64..3.0, w in 0.1f64..5.0, y0 in -3.0f64..3.0, h in 0.1f64..5.0, three in any::<bool>()) {
        let pattern = if three { Pattern::ThreeDirectional } else { Pattern::Diagonal };
        let tri = Triangulation::structured(n, pattern, Rect { xmin: x0, xmax: x0 + w, ymin: y0, ymax: y0 + h });
        let text = tri.to_mesh_string();
        let back = Triangulation::load(BufReader::new(text.as_bytes())).unwrap();
        prop_assert_eq!(back.cells.clone(), tri.cells.clone());
        prop_assert_eq!(back.to_mesh_string(), text);
        prop_assert!((back.area() - w * h).abs() <= 1e-12 * w * h);
    }

    #[test]
    fn hessian_and_laplacian_energies_agree(coeffs in prop::collection::vec(-1.0f64..1.0, 23)) {
        let tri = Arc::new(Triangulation::unit_square(2));
        let basis = BasisSet::build(&tri, BoundaryCondition::Navier).unwrap();
        prop_assume!(basis.len() == coeffs.len());
        let kh = assembly::basis_matrix(&basis, Form::Hessian, None);
        let kl = assembly::basis_matrix(&basis, Form::Laplacian, None);
        let (eh, el) = (dot(&coeffs, &kh.matvec(&coeffs)), dot(&coeffs, &kl.matvec(&coeffs)));
        prop_assert!((eh - el).abs() <= 1e-10 * eh.max(1e-300));
    }
}
