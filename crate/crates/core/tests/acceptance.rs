//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the
//! libtest harness so the lines are always printed; exits non-zero on failure.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use ncbiharm::assembly::{self, Form};
use ncbiharm::basis::{expected_count, BasisSet, BoundaryCondition};
use ncbiharm::harness::{self, Case};
use ncbiharm::operators::{check_complex, Complex};
use ncbiharm::solve::{solve_basis, solve_decomposed};
use ncbiharm::sparse::{dot, numerical_rank};
use ncbiharm::{Pattern, Triangulation};

type Outcome = Result<String, String>;

fn square(n: usize) -> Arc<Triangulation> {
    Arc::new(Triangulation::unit_square(n))
}

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn complex_exactness() -> Outcome {
    let mut meshes: Vec<(String, Arc<Triangulation>)> = [1, 2, 4].iter().map(|&n| (format!("n={n}"), square(n))).collect();
    meshes.push(("L-shape".into(), Arc::new(Triangulation::lshape(4, 0.2, 7))));
    let mut failures = Vec::new();
    let mut count = 0;
    for (name, tri) in &meshes {
        for which in [Complex::A, Complex::Dirichlet, Complex::Navier] {
            let r = check_complex(tri, which).map_err(|e| format!("{name} {which:?}: {e}"))?;
            count += 1;
            let dims = r.rank_grad + r.rank_rot == r.spaces[1].1;
            if !r.passed() || !dims {
                failures.push(format!("{name} {which:?}"));
            }
        }
    }
    check(failures.is_empty(), format!("{count} complexes, failures: {failures:?}"))
}

fn hessian_laplacian() -> Outcome {
    let r = harness::identity_report(&square(4), 20, 2024).map_err(|e| e.to_string())?;
    let worst = r.hessian_laplacian_pairs.max(r.hessian_laplacian_matrix);
    check(
        worst <= 1e-10,
        format!("pairs {:.2e}, matrix {:.2e} (tol 1e-10)", r.hessian_laplacian_pairs, r.hessian_laplacian_matrix),
    )
}

fn div_rot_splitting() -> Outcome {
    let r = harness::identity_report(&square(4), 20, 2025).map_err(|e| e.to_string())?;
    let worst = r.splitting_pairs.max(r.splitting_matrix);
    check(worst <= 1e-10, format!("pairs {:.2e}, matrix {:.2e} (tol 1e-10)", r.splitting_pairs, r.splitting_matrix))
}

fn basis_correctness() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for n in [2, 4] {
        let tri = square(n);
        for bc in [BoundaryCondition::Dirichlet, BoundaryCondition::Navier] {
            let basis = BasisSet::build(&tri, bc).map_err(|e| e.to_string())?;
            let vi = tri.n_interior_vertices();
            let ei = tri.n_interior_edges();
            let mut expected = 3 * vi + ei;
            if bc == BoundaryCondition::Navier {
                expected += tri.n_boundary_vertices() - tri.n_corners() + tri.n_boundary_edges();
            }
            let gram = assembly::basis_matrix(&basis, Form::Hessian, None);
            let rank = numerical_rank(&gram.to_dense(), 1e-9);
            let worst = basis.verify(1e-9);
            ok &= basis.len() == expected && expected == expected_count(&tri, bc) && rank == expected && worst.is_ok();
            notes.push(format!(
                "n={n} {bc}: {} fns (expect {expected}), rank {rank}, membership {}",
                basis.len(),
                worst.map(|w| format!("{w:.1e}")).unwrap_or_else(|e| e.to_string())
            ));
        }
    }
    check(ok, notes.join("; "))
}

fn decomposition() -> Outcome {
    let tri = square(4);
    let f = |p: [f64; 2]| (3.0 * p[0]).sin() * (1.0 + p[1] * p[1]) + 2.0;
    let mut notes = Vec::new();
    let mut ok = true;
    for bc in [BoundaryCondition::Dirichlet, BoundaryCondition::Navier] {
        let basis = BasisSet::build(&tri, bc).map_err(|e| e.to_string())?;
        let direct = solve_basis(&basis, Form::Hessian, None, &f).map_err(|e| e.to_string())?;
        let d = solve_decomposed(&tri, bc, None, &f).map_err(|e| e.to_string())?;
        let k = assembly::biharmonic_matrix(&basis.a30, Form::Hessian, None);
        let diff: Vec<f64> = d.w.coeffs.iter().zip(&direct.function.coeffs).map(|(a, b)| a - b).collect();
        let rel = dot(&diff, &k.matvec(&diff)).sqrt() / dot(&direct.function.coeffs, &k.matvec(&direct.function.coeffs)).sqrt();
        ok &= rel <= 1e-8;
        notes.push(format!("{bc} {rel:.2e}"));
    }
    check(ok, format!("relative broken H2 difference: {} (tol 1e-8)", notes.join(", ")))
}

fn convergence_rates() -> Outcome {
    let levels = [4, 8, 16, 32];
    let mut notes = Vec::new();
    let mut ok = true;
    for (name, form, h1_band) in [
        ("dirichlet-sin2", Form::Hessian, true),
        ("navier-sin", Form::Hessian, false),
        ("varcoef-sin2", Form::Laplacian, false),
    ] {
        let case = Case::builtin(name).map_err(|e| e.to_string())?;
        let table = harness::convergence_study(&case, Pattern::ThreeDirectional, &levels, case.bc, form)
            .map_err(|(e, _)| format!("{name}: {e}"))?;
        let r = table.last_rates().ok_or("no rates")?;
        ok &= (1.8..=2.2).contains(&r.h2);
        let mut s = format!("{name} H2 {:.3}", r.h2);
        if h1_band {
            ok &= (2.7..=3.3).contains(&r.h1);
            s.push_str(&format!(" H1 {:.3}", r.h1));
        }
        notes.push(s);
    }
    check(ok, notes.join("; "))
}

fn consistency_decay() -> Outcome {
    let case = Case::builtin("dirichlet-sin2").map_err(|e| e.to_string())?;
    let mut h = Vec::new();
    let mut dual = Vec::new();
    let mut sup = Vec::new();
    for n in [4, 8, 16] {
        let tri = square(n);
        let r = harness::consistency_residual(&case, &tri, case.bc).map_err(|e| e.to_string())?;
        h.push(tri.h_max);
        dual.push(r.dual_norm);
        sup.push(r.max_r());
    }
    let rate = harness::fitted_rate(&h, &dual);
    let rate_sup = harness::fitted_rate(&h, &sup);
    check(rate >= 1.7 && rate_sup >= 1.7, format!("fitted rate {rate:.3} (sup over space), {rate_sup:.3} (max over basis)"))
}

fn interpolant_accuracy() -> Outcome {
    let case = Case::builtin("dirichlet-sin2").map_err(|e| e.to_string())?;
    let mut prev: Option<(f64, f64)> = None;
    let mut rates = Vec::new();
    let mut rot: f64 = 0.0;
    for n in [4, 8, 16] {
        let tri = square(n);
        let i = harness::stokes_interpolant(&case, &tri, case.bc).map_err(|e| e.to_string())?;
        rot = rot.max(i.rot_residual);
        let e = harness::compute_errors(&i.function, &case).map_err(|e| e.to_string())?.h2;
        if let Some((hp, ep)) = prev {
            rates.push(harness::rate(ep, e, hp, tri.h_max));
        }
        prev = Some((tri.h_max, e));
    }
    let ok = rates.iter().all(|r| (1.8..=2.2).contains(r)) && rot <= 1e-10;
    check(ok, format!("H2 rates {rates:.3?}, velocity rot residual {rot:.1e}"))
}

fn inf_sup() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for bc in [BoundaryCondition::Dirichlet, BoundaryCondition::Navier] {
        let betas: Vec<f64> =
            [2, 4, 8].iter().map(|&n| harness::inf_sup_constant(&square(n), bc)).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
        ok &= betas.iter().all(|&b| b > 0.05) && betas.windows(2).all(|w| w[1] > 0.8 * w[0]);
        notes.push(format!("{bc} {betas:.4?}"));
    }
    check(ok, format!("beta on n=2,4,8: {}", notes.join("; ")))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("complex exactness", complex_exactness),
        ("hessian = laplacian on B3t", hessian_laplacian),
        ("div/rot splitting on G2t", div_rot_splitting),
        ("basis correctness", basis_correctness),
        ("decomposition equivalence", decomposition),
        ("convergence rates", convergence_rates),
        ("consistency decay", consistency_decay),
        ("interpolant accuracy", interpolant_accuracy),
        ("inf-sup stability", inf_sup),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("[PASS] {}. {name}: {detail} ({secs:.1}s)", i + 1),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {}. {name}: {detail} ({secs:.1}s)", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
