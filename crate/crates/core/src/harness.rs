//! Manufactured solutions, error norms, convergence studies, consistency
//! residuals, Stokes-based interpolation and stability measurements.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::{self, basis_shapes, Feature, Form};
use crate::basis::{BasisSet, BoundaryCondition};
use crate::error::{Error, Result};
use crate::mesh::{Pattern, Rect, Triangulation};
use crate::operators::antidifferentiate_cells;
use crate::quadrature::with_triangle_rule;
use crate::solve::{solve_basis, solve_decomposed, StokesSystem};
use crate::spaces::{DofSpace, FeFunction, SpaceKind};
use crate::sparse::{dot, symmetric_eigenvalues, Cholesky, SparseOperator};

/// One-dimensional factor of a separable solution `u = X(x) Y(y)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Profile {
    /// `sin^2(pi t)`
    Sin2,
    /// `sin(pi t)`
    Sin,
    /// `t^2 (1 - t)^2`
    Quartic,
}

impl Profile {
    /// `k`-th derivative at `t`, `k <= 4`.
    pub fn derivative(self, k: usize, t: f64) -> f64 {
        match self {
            Profile::Sin2 => {
                // sin^2(pi t) = (1 - cos(2 pi t)) / 2
                if k == 0 {
                    return (PI * t).sin().powi(2);
                }
                let w = 2.0 * PI;
                let c = match k % 4 {
                    0 => (w * t).cos(),
                    1 => -(w * t).sin(),
                    2 => -(w * t).cos(),
                    _ => (w * t).sin(),
                };
                -0.5 * w.powi(k as i32) * c
            }
            Profile::Sin => {
                let s = match k % 4 {
                    0 => (PI * t).sin(),
                    1 => (PI * t).cos(),
                    2 => -(PI * t).sin(),
                    _ => -(PI * t).cos(),
                };
                PI.powi(k as i32) * s
            }
            Profile::Quartic => match k {
                0 => t * t * (1.0 - t) * (1.0 - t),
                1 => 2.0 * t - 6.0 * t * t + 4.0 * t * t * t,
                2 => 2.0 - 12.0 * t + 12.0 * t * t,
                3 => -12.0 + 24.0 * t,
                4 => 24.0,
                _ => 0.0,
            },
        }
    }
}

/// Builtin manufactured solution on the unit square.
#[derive(Clone, Debug)]
pub struct Case {
    pub name: &'static str,
    pub bc: BoundaryCondition,
    pub profile: Profile,
    /// Whether the fourth-order coefficient is `1 + x^2 + y^2` instead of 1.
    pub variable_coefficient: bool,
}

pub const CASE_NAMES: [&str; 4] = ["dirichlet-sin2", "navier-sin", "dirichlet-poly", "varcoef-sin2"];

impl Case {
    pub fn builtin(name: &str) -> Result<Self> {
        let (name, bc, profile, var) = match name {
            "dirichlet-sin2" => ("dirichlet-sin2", BoundaryCondition::Dirichlet, Profile::Sin2, false),
            "navier-sin" => ("navier-sin", BoundaryCondition::Navier, Profile::Sin, false),
            "dirichlet-poly" => ("dirichlet-poly", BoundaryCondition::Dirichlet, Profile::Quartic, false),
            "varcoef-sin2" => ("varcoef-sin2", BoundaryCondition::Dirichlet, Profile::Sin2, true),
            other => return Err(Error::UnknownCase(other.to_string())),
        };
        Ok(Self { name, bc, profile, variable_coefficient: var })
    }

    pub fn domain(&self) -> Rect {
        Rect::UNIT
    }

    /// `d^(i+j) u / dx^i dy^j`.
    pub fn d(&self, i: usize, j: usize, p: [f64; 2]) -> f64 {
        self.profile.derivative(i, p[0]) * self.profile.derivative(j, p[1])
    }

    pub fn u(&self, p: [f64; 2]) -> f64 {
        self.d(0, 0, p)
    }

    pub fn grad(&self, p: [f64; 2]) -> [f64; 2] {
        [self.d(1, 0, p), self.d(0, 1, p)]
    }

    /// `(u_xx, u_xy, u_yy)`.
    pub fn hessian(&self, p: [f64; 2]) -> [f64; 3] {
        [self.d(2, 0, p), self.d(1, 1, p), self.d(0, 2, p)]
    }

    pub fn laplacian(&self, p: [f64; 2]) -> f64 {
        self.d(2, 0, p) + self.d(0, 2, p)
    }

    pub fn grad_laplacian(&self, p: [f64; 2]) -> [f64; 2] {
        [self.d(3, 0, p) + self.d(1, 2, p), self.d(2, 1, p) + self.d(0, 3, p)]
    }

    pub fn bilaplacian(&self, p: [f64; 2]) -> f64 {
        self.d(4, 0, p) + 2.0 * self.d(2, 2, p) + self.d(0, 4, p)
    }

    pub fn coefficient(&self, p: [f64; 2]) -> f64 {
        if self.variable_coefficient {
            1.0 + p[0] * p[0] + p[1] * p[1]
        } else {
            1.0
        }
    }

    /// Source `f = Lap(a Lap u)`.
    pub fn source(&self, p: [f64; 2]) -> f64 {
        if !self.variable_coefficient {
            return self.bilaplacian(p);
        }
        let gl = self.grad_laplacian(p);
        4.0 * self.laplacian(p) + 2.0 * (2.0 * p[0] * gl[0] + 2.0 * p[1] * gl[1]) + self.coefficient(p) * self.bilaplacian(p)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Errors {
    pub h2: f64,
    pub h1: f64,
    pub l2: f64,
}

/// Broken `H^2`, `H^1` seminorm and `L^2` errors of a cubic function.
pub fn compute_errors(uh: &FeFunction, case: &Case) -> Result<Errors> {
    if !uh.kind().is_cubic() {
        return Err(Error::KindMismatch { expected: "A3 or A30", got: uh.kind() });
    }
    let tri = &uh.space.tri;
    let mut e = [0.0; 3];
    with_triangle_rule(|rule| {
        for c in 0..tri.n_cells() {
            let g = tri.geometry(c);
            let p = uh.cell_field(c)[0];
            let (px, py) = (p.dx(g), p.dy(g));
            let (pxx, pxy, pyy) = (px.dx(g), px.dy(g), py.dy(g));
            for (&b, &w) in rule.points.iter().zip(&rule.weights) {
                let x = g.point(b);
                let hs = case.hessian(x);
                let gr = case.grad(x);
                let d = [hs[0] - pxx.eval_bary(b), hs[1] - pxy.eval_bary(b), hs[2] - pyy.eval_bary(b)];
                e[0] += w * g.area * (d[0] * d[0] + 2.0 * d[1] * d[1] + d[2] * d[2]);
                let (gx, gy) = (gr[0] - px.eval_bary(b), gr[1] - py.eval_bary(b));
                e[1] += w * g.area * (gx * gx + gy * gy);
                let v = case.u(x) - p.eval_bary(b);
                e[2] += w * g.area * v * v;
            }
        }
    });
    Ok(Errors { h2: e[0].sqrt(), h1: e[1].sqrt(), l2: e[2].sqrt() })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Basis,
    Decomposed,
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "basis" => Ok(Method::Basis),
            "decomposed" => Ok(Method::Decomposed),
            other => Err(Error::InvalidArgument(format!("unknown method {other:?}"))),
        }
    }
}

/// Discrete solution for a builtin case on a given mesh. Returns the `A30`
/// function and the number of unknowns.
pub fn solve_case(tri: &Arc<Triangulation>, case: &Case, bc: BoundaryCondition, form: Form, method: Method) -> Result<(FeFunction, usize)> {
    let coef = |p: [f64; 2]| case.coefficient(p);
    let coefficient: Option<assembly::Field> = if case.variable_coefficient { Some(&coef) } else { None };
    let f = |p: [f64; 2]| case.source(p);
    match method {
        Method::Basis => {
            let basis = BasisSet::build(tri, bc)?;
            let s = solve_basis(&basis, form, coefficient, &f)?;
            Ok((s.function, basis.len()))
        }
        Method::Decomposed => {
            let d = solve_decomposed(tri, bc, coefficient, &f)?;
            let n = d.w.space.n_dofs;
            Ok((d.w, n))
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyRow {
    pub level: usize,
    pub h: f64,
    pub dofs: usize,
    pub errors: Errors,
    /// Rates against the previous row (`None` on the first row).
    pub rates: Option<Errors>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<StudyRow>,
}

pub fn rate(e_coarse: f64, e_fine: f64, h_coarse: f64, h_fine: f64) -> f64 {
    (e_coarse / e_fine).ln() / (h_coarse / h_fine).ln()
}

impl ConvergenceTable {
    pub fn push(&mut self, level: usize, h: f64, dofs: usize, errors: Errors) {
        let rates = self.rows.last().map(|p| Errors {
            h2: rate(p.errors.h2, errors.h2, p.h, h),
            h1: rate(p.errors.h1, errors.h1, p.h, h),
            l2: rate(p.errors.l2, errors.l2, p.h, h),
        });
        self.rows.push(StudyRow { level, h, dofs, errors, rates });
    }

    pub fn last_rates(&self) -> Option<Errors> {
        self.rows.last().and_then(|r| r.rates)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("level,h,dofs,errH2,rateH2,errH1,rateH1,errL2,rateL2\n");
        for r in &self.rows {
            let rt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_default();
            let _ = writeln!(
                s,
                "{},{:.6e},{},{:.10e},{},{:.10e},{},{:.10e},{}",
                r.level,
                r.h,
                r.dofs,
                r.errors.h2,
                rt(r.rates.map(|e| e.h2)),
                r.errors.h1,
                rt(r.rates.map(|e| e.h1)),
                r.errors.l2,
                rt(r.rates.map(|e| e.l2)),
            );
        }
        s
    }
}

impl std::fmt::Display for ConvergenceTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "{:>5} {:>10} {:>7} {:>12} {:>6} {:>12} {:>6} {:>12} {:>6}", "n", "h", "dofs", "errH2", "rate", "errH1", "rate", "errL2", "rate")?;
        for r in &self.rows {
            let rt = |v: Option<f64>| v.map(|x| format!("{x:.2}")).unwrap_or_else(|| "-".into());
            writeln!(
                f,
                "{:>5} {:>10.4e} {:>7} {:>12.4e} {:>6} {:>12.4e} {:>6} {:>12.4e} {:>6}",
                r.level,
                r.h,
                r.dofs,
                r.errors.h2,
                rt(r.rates.map(|e| e.h2)),
                r.errors.h1,
                rt(r.rates.map(|e| e.h1)),
                r.errors.l2,
                rt(r.rates.map(|e| e.l2)),
            )?;
        }
        Ok(())
    }
}

/// Solve a builtin case on a sequence of structured meshes of the unit square.
/// On a solver failure the error is returned together with the rows computed so far.
pub fn convergence_study(
    case: &Case,
    pattern: Pattern,
    levels: &[usize],
    bc: BoundaryCondition,
    form: Form,
) -> std::result::Result<ConvergenceTable, (Error, ConvergenceTable)> {
    if levels.windows(2).any(|w| w[1] <= w[0]) || levels.first() == Some(&0) {
        return Err((Error::InvalidArgument("levels must be positive and increasing".into()), ConvergenceTable::default()));
    }
    let mut table = ConvergenceTable::default();
    for &n in levels {
        let tri = Arc::new(Triangulation::structured(n, pattern, case.domain()));
        let result = solve_case(&tri, case, bc, form, Method::Basis).and_then(|(uh, dofs)| Ok((compute_errors(&uh, case)?, dofs)));
        match result {
            Ok((e, dofs)) => table.push(n, tri.h_max, dofs, e),
            Err(e) => return Err((e, table)),
        }
    }
    Ok(table)
}

/// Consistency functionals of the exact solution against every basis function:
/// `R1(u, v) = (D^2 u, D^2 v) + (grad Lap u, grad v)`,
/// `R2(u, v) = (grad Lap u, grad v) + (Lap^2 u, v)` and `R = R1 - R2`.
#[derive(Clone, Debug)]
pub struct Consistency {
    pub r1: Vec<f64>,
    pub r2: Vec<f64>,
    pub r: Vec<f64>,
    /// `|D^2 v_j|` for each basis function.
    pub norms: Vec<f64>,
    /// `sup_v |R(u, v)| / |D^2 v|` over the discrete space.
    pub dual_norm: f64,
}

impl Consistency {
    fn normalized_max(&self, vals: &[f64]) -> f64 {
        vals.iter().zip(&self.norms).map(|(v, n)| v.abs() / n).fold(0.0, f64::max)
    }

    pub fn max_r1(&self) -> f64 {
        self.normalized_max(&self.r1)
    }

    pub fn max_r2(&self) -> f64 {
        self.normalized_max(&self.r2)
    }

    /// Largest `|R(u, v_j)| / |D^2 v_j|` over the basis functions.
    pub fn max_r(&self) -> f64 {
        self.normalized_max(&self.r)
    }
}

pub fn consistency_residual(case: &Case, tri: &Arc<Triangulation>, bc: BoundaryCondition) -> Result<Consistency> {
    let basis = BasisSet::build(tri, bc)?;
    let shapes = basis_shapes(&basis);
    let n = basis.len();
    let hess = assembly::load_feature(tri, n, &shapes, Feature::Hessian, &|p| {
        let h = case.hessian(p);
        [h[0], h[1], h[2], 0.0]
    });
    let grad = assembly::load_feature(tri, n, &shapes, Feature::Gradient, &|p| {
        let g = case.grad_laplacian(p);
        [g[0], g[1], 0.0, 0.0]
    });
    let val = assembly::load_feature(tri, n, &shapes, Feature::Value, &|p| [case.bilaplacian(p), 0.0, 0.0, 0.0]);
    let r1: Vec<f64> = hess.iter().zip(&grad).map(|(a, b)| a + b).collect();
    let r2: Vec<f64> = grad.iter().zip(&val).map(|(a, b)| a + b).collect();
    let r: Vec<f64> = r1.iter().zip(&r2).map(|(a, b)| a - b).collect();
    let k = assembly::basis_matrix(&basis, Form::Hessian, None);
    let norms = (0..n).map(|j| k.get(j, j).sqrt()).collect();
    let dual_norm = dot(&r, &Cholesky::new(&k)?.solve(&r)).max(0.0).sqrt();
    Ok(Consistency { r1, r2, r, norms, dual_norm })
}

/// Least-squares slope of `log(value)` against `log(1/h)`.
pub fn fitted_rate(h: &[f64], values: &[f64]) -> f64 {
    let xs: Vec<f64> = h.iter().map(|v| -v.ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    -sxy / sxx
}

/// Interpolant obtained from the auxiliary Stokes problem.
#[derive(Clone, Debug)]
pub struct Interpolant {
    pub function: FeFunction,
    /// Stokes velocity (the cellwise gradient of the interpolant).
    pub velocity: FeFunction,
    /// Relative size of `B psi` for the velocity.
    pub rot_residual: f64,
}

/// Solve the Stokes problem with velocity load `load` (indexed like the
/// velocity space of `bc`) and integrate the velocity with zero boundary values.
pub fn stokes_interpolant_with_load(tri: &Arc<Triangulation>, bc: BoundaryCondition, load: &[f64]) -> Result<Interpolant> {
    let stokes = StokesSystem::new(tri, bc);
    let s = stokes.solve(load)?;
    let bpsi = stokes.b.matvec(&s.u);
    let rot_residual = crate::sparse::max_abs(&bpsi) / (stokes.b.max_abs() * crate::sparse::max_abs(&s.u)).max(f64::MIN_POSITIVE);
    let velocity = stokes.velocity.function(s.u)?;
    let anchors: Vec<(usize, f64)> = (0..tri.n_vertices()).filter(|&v| tri.is_boundary_vertex(v)).map(|v| (v, 0.0)).collect();
    let cells: Vec<usize> = (0..tri.n_cells()).collect();
    let anti = antidifferentiate_cells(tri, &cells, |c| velocity.cell_field(c), &anchors)?;
    let a30 = Arc::new(DofSpace::new(Arc::clone(tri), SpaceKind::A30));
    let function = a30.represent(|c| [anti.cells[c].1, crate::poly::Poly::ZERO])?;
    Ok(Interpolant { function, velocity, rot_residual })
}

/// Interpolant of a builtin case: Stokes load `(-grad Lap u, psi)`.
pub fn stokes_interpolant(case: &Case, tri: &Arc<Triangulation>, bc: BoundaryCondition) -> Result<Interpolant> {
    let velocity = DofSpace::new(Arc::clone(tri), bc.gradient_kind());
    let load = assembly::load(tri, velocity.n_dofs, &assembly::space_shapes(&velocity), &|p| {
        let g = case.grad_laplacian(p);
        [-g[0], -g[1]]
    });
    stokes_interpolant_with_load(tri, bc, &load)
}

/// Discrete inf-sup constant of `(q, rot v)` on the gradient space of `bc`
/// times the mean-zero discontinuous linears, with the broken `H^1`
/// seminorm for velocities and the `L^2` norm for pressures.
pub fn inf_sup_constant(tri: &Arc<Triangulation>, bc: BoundaryCondition) -> Result<f64> {
    let stokes = StokesSystem::new(tri, bc);
    let a = Cholesky::new(&stokes.a)?;
    let np = stokes.b.rows;
    let bt = stokes.b.transpose();
    // S = B A^{-1} B^T, column by column.
    let mut s = Mat::<f64>::zeros(np, np);
    let mut e = vec![0.0; np];
    for j in 0..np {
        e[j] = 1.0;
        let col = stokes.b.matvec(&a.solve(&bt.matvec(&e)));
        e[j] = 0.0;
        for i in 0..np {
            s[(i, j)] = col[i];
        }
    }
    // The pressure mass is block diagonal; W = L^{-1} blockwise with M = L L^T.
    let m = assembly::mass_matrix(&stokes.pressure);
    let mut w = Mat::<f64>::zeros(np, np);
    for c in 0..tri.n_cells() {
        let blk: [[f64; 3]; 3] = std::array::from_fn(|i| std::array::from_fn(|j| m.get(3 * c + i, 3 * c + j)));
        let linv = lower_cholesky_inverse(blk);
        for i in 0..3 {
            for j in 0..3 {
                w[(3 * c + i, 3 * c + j)] = linv[i][j];
            }
        }
    }
    let sym = &w * &s * w.transpose();
    let sym = Mat::from_fn(np, np, |i, j| 0.5 * (sym[(i, j)] + sym[(j, i)]));
    let ev = symmetric_eigenvalues(&sym);
    // The constants are in the kernel; the next eigenvalue is beta^2.
    Ok(ev[1].max(0.0).sqrt())
}

fn lower_cholesky_inverse(a: [[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut l = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            l[i][j] = if i == j { (a[i][i] - s).sqrt() } else { (a[i][j] - s) / l[j][j] };
        }
    }
    let mut inv = [[0.0; 3]; 3];
    for j in 0..3 {
        inv[j][j] = 1.0 / l[j][j];
        for i in j + 1..3 {
            let s: f64 = (j..i).map(|k| l[i][k] * inv[k][j]).sum();
            inv[i][j] = -s / l[i][i];
        }
    }
    inv
}

/// Energy identities checked by `check identity`.
#[derive(Clone, Debug)]
pub struct IdentityReport {
    /// `max |K_hess - K_lap| / max |K_hess|` in the simply supported basis.
    pub hessian_laplacian_matrix: f64,
    /// Largest relative pair defect of the Hessian/Laplacian identity.
    pub hessian_laplacian_pairs: f64,
    /// `max |A - D - R| / max |A|` on the tangential Fortin-Soulie space.
    pub splitting_matrix: f64,
    pub splitting_pairs: f64,
    pub pairs: usize,
}

impl IdentityReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.hessian_laplacian_matrix <= tol
            && self.hessian_laplacian_pairs <= tol
            && self.splitting_matrix <= tol
            && self.splitting_pairs <= tol
    }
}

impl std::fmt::Display for IdentityReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "hessian vs laplacian (B3t)")?;
        writeln!(f, "  matrix          {:.3e}", self.hessian_laplacian_matrix)?;
        writeln!(f, "  {} random pairs {:.3e}", self.pairs, self.hessian_laplacian_pairs)?;
        writeln!(f, "grad vs div + rot (G2t)")?;
        writeln!(f, "  matrix          {:.3e}", self.splitting_matrix)?;
        writeln!(f, "  {} random pairs {:.3e}", self.pairs, self.splitting_pairs)
    }
}

fn pair_defect(a: &SparseOperator, b: &SparseOperator, pairs: usize, rng: &mut ChaCha8Rng) -> f64 {
    let n = a.rows;
    let mut worst: f64 = 0.0;
    for _ in 0..pairs {
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (ax, bx) = (a.matvec(&x), b.matvec(&x));
        let nx = dot(&x, &ax).sqrt();
        let ny = dot(&y, &a.matvec(&y)).sqrt();
        let d = (dot(&y, &ax) - dot(&y, &bx)).abs();
        worst = worst.max(d / (nx * ny));
    }
    worst
}

pub fn identity_report(tri: &Arc<Triangulation>, pairs: usize, seed: u64) -> Result<IdentityReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let basis = BasisSet::build(tri, BoundaryCondition::Navier)?;
    let kh = assembly::basis_matrix(&basis, Form::Hessian, None);
    let kl = assembly::basis_matrix(&basis, Form::Laplacian, None);
    let g2t = DofSpace::new(Arc::clone(tri), SpaceKind::G2t);
    let a = assembly::vector_laplacian(&g2t);
    let dr = assembly::div_div(&g2t).scaled_add(&assembly::rot_rot(&g2t), 1.0);
    Ok(IdentityReport {
        hessian_laplacian_matrix: kh.scaled_add(&kl, -1.0).max_abs() / kh.max_abs(),
        hessian_laplacian_pairs: pair_defect(&kh, &kl, pairs, &mut rng),
        splitting_matrix: a.scaled_add(&dr, -1.0).max_abs() / a.max_abs(),
        splitting_pairs: pair_defect(&a, &dr, pairs, &mut rng),
        pairs,
    })
}
