//! Direct solution in the local basis and the three-stage decomposition
//! into two Poisson problems and a Stokes problem.

use std::sync::Arc;

use crate::assembly::{self, Field, Form};
use crate::basis::{BasisSet, BoundaryCondition};
use crate::error::{Error, Result};
use crate::mesh::Triangulation;
use crate::spaces::{DofSpace, FeFunction, SpaceKind};
use crate::sparse::{max_abs, Cholesky, SparseLu, SparseOperator};

#[derive(Clone, Debug)]
pub struct Solution {
    /// Coefficients in the local basis.
    pub coeffs: Vec<f64>,
    pub function: FeFunction,
}

/// Solve the fourth-order problem with the stiffness `T^T K T` in the local
/// basis by sparse Cholesky.
pub fn solve_basis(basis: &BasisSet, form: Form, coefficient: Option<Field>, f: Field) -> Result<Solution> {
    let k = assembly::basis_matrix(basis, form, coefficient);
    let b = assembly::basis_load(basis, f);
    let chol = Cholesky::new(&k)?;
    let coeffs = chol.solve(&b);
    let function = basis.combine(&coeffs);
    Ok(Solution { coeffs, function })
}

/// Solution of a saddle point problem with a mean-value constraint on the
/// multiplier.
#[derive(Clone, Debug)]
pub struct SaddleSolution {
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    /// Multiplier of the mean-value constraint (zero for consistent data).
    pub mean_multiplier: f64,
}

/// Solve `[[A, B^T, 0], [B, 0, m], [0, m^T, 0]] [u; p; s] = [f; g; 0]` by
/// sparse LU. `m` fixes the mean of `p`.
pub fn solve_saddle(a: &SparseOperator, b: &SparseOperator, m: &[f64], f: &[f64], g: &[f64]) -> Result<SaddleSolution> {
    let (nu, np) = (a.rows, b.rows);
    if a.cols != nu || b.cols != nu || m.len() != np || f.len() != nu || g.len() != np {
        return Err(Error::InvalidArgument("saddle point block sizes do not match".into()));
    }
    let mut t: Vec<(usize, usize, f64)> = a.triplets().collect();
    for (i, j, v) in b.triplets() {
        t.push((nu + i, j, v));
        t.push((j, nu + i, v));
    }
    for (i, &v) in m.iter().enumerate() {
        t.push((nu + i, nu + np, v));
        t.push((nu + np, nu + i, v));
    }
    let n = nu + np + 1;
    let k = SparseOperator::from_triplets(n, n, t);
    let mut rhs = Vec::with_capacity(n);
    rhs.extend_from_slice(f);
    rhs.extend_from_slice(g);
    rhs.push(0.0);
    let x = SparseLu::new(&k)?.solve(&rhs)?;
    Ok(SaddleSolution { u: x[..nu].to_vec(), p: x[nu..nu + np].to_vec(), mean_multiplier: x[nu + np] })
}

/// Spaces and matrices of the Stokes problem with `rot` as the constraint.
#[derive(Clone, Debug)]
pub struct StokesSystem {
    pub velocity: Arc<DofSpace>,
    pub pressure: Arc<DofSpace>,
    pub a: SparseOperator,
    pub b: SparseOperator,
    pub means: Vec<f64>,
}

impl StokesSystem {
    pub fn new(tri: &Arc<Triangulation>, bc: BoundaryCondition) -> Self {
        let velocity = Arc::new(DofSpace::new(Arc::clone(tri), bc.gradient_kind()));
        let pressure = Arc::new(DofSpace::new(Arc::clone(tri), SpaceKind::P1dc));
        let a = assembly::vector_laplacian(&velocity);
        let b = assembly::pressure_coupling(&pressure, &velocity);
        let means = assembly::p1dc_means(tri);
        Self { velocity, pressure, a, b, means }
    }

    /// Solve with right-hand side `f` for the velocity equation and a
    /// divergence-free (rot-free) constraint. Fails if the computed velocity
    /// is not rot-free to `1e-9` relative.
    pub fn solve(&self, f: &[f64]) -> Result<SaddleSolution> {
        let g = vec![0.0; self.b.rows];
        let s = solve_saddle(&self.a, &self.b, &self.means, f, &g)?;
        let r = max_abs(&self.b.matvec(&s.u)) / (self.b.max_abs() * max_abs(&s.u)).max(f64::MIN_POSITIVE);
        if r > 1e-9 {
            return Err(Error::StokesDivergence(r));
        }
        Ok(s)
    }
}

#[derive(Clone, Debug)]
pub struct Decomposed {
    /// Solution of the first Poisson problem.
    pub r: FeFunction,
    /// Gradient field from the Stokes problem.
    pub velocity: FeFunction,
    pub pressure: FeFunction,
    /// Final solution.
    pub w: FeFunction,
}

/// Solve the constant-coefficient problem as Poisson, Stokes, Poisson:
/// `(grad r, grad s) = (f, s)`, then the Stokes problem with load
/// `(grad r, v)`, then `(grad w, grad s) = (psi, grad s)`. The result equals the
/// direct solution with the Hessian form.
pub fn solve_decomposed(tri: &Arc<Triangulation>, bc: BoundaryCondition, coefficient: Option<Field>, f: Field) -> Result<Decomposed> {
    if coefficient.is_some() {
        return Err(Error::Unsupported("the decomposed solver handles constant coefficients only".into()));
    }
    let a30 = Arc::new(DofSpace::new(Arc::clone(tri), SpaceKind::A30));
    let lap = Cholesky::new(&assembly::poisson_matrix(&a30))?;
    let r = lap.solve(&assembly::scalar_load(&a30, f));
    let stokes = StokesSystem::new(tri, bc);
    let c = assembly::gradient_coupling(&stokes.velocity, &a30);
    let s = stokes.solve(&c.matvec(&r))?;
    let w = lap.solve(&c.matvec_t(&s.u));
    Ok(Decomposed {
        r: a30.function(r)?,
        velocity: stokes.velocity.function(s.u)?,
        pressure: stokes.pressure.function(s.p)?,
        w: a30.function(w)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn saddle_with_identity_blocks() {
        // min |u|^2/2 - f.u subject to u0 = u1, stated twice; the mean
        // constraint removes the redundancy in the multiplier.
        let a = SparseOperator::identity(2);
        let b = SparseOperator::from_triplets(2, 2, vec![(0, 0, 1.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 1.0)]);
        let s = solve_saddle(&a, &b, &[1.0, 1.0], &[1.0, 3.0], &[0.0, 0.0]).unwrap();
        assert!((s.u[0] - 2.0).abs() < 1e-12 && (s.u[1] - 2.0).abs() < 1e-12);
        assert!((s.p[0] + 0.5).abs() < 1e-12 && (s.p[1] - 0.5).abs() < 1e-12);
        assert!(s.mean_multiplier.abs() < 1e-12);
    }

    #[test]
    fn decomposed_matches_basis_solution() {
        let t = Arc::new(Triangulation::unit_square(2));
        let f = |x: [f64; 2]| 1.0 + x[0] * x[1];
        for bc in [BoundaryCondition::Dirichlet, BoundaryCondition::Navier] {
            let basis = BasisSet::build(&t, bc).unwrap();
            let direct = solve_basis(&basis, Form::Hessian, None, &f).unwrap();
            let d = solve_decomposed(&t, bc, None, &f).unwrap();
            let scale = max_abs(&direct.function.coeffs);
            let diff = d.w.coeffs.iter().zip(&direct.function.coeffs).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(diff < 1e-10 * scale, "{bc}: {diff}");
        }
    }
}
