//! Bivariate polynomials of total degree at most three on a single cell.
//!
//! Polynomials are stored in the cell's reference coordinates `(xi, eta)`,
//! which coincide with the barycentric coordinates `(lambda_2, lambda_3)`,
//! so `lambda_1 = 1 - xi - eta`. Keeping everything in reference
//! coordinates makes the coefficients independent of the cell size; the
//! cell geometry only enters through Cartesian derivatives.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use crate::mesh::CellGeometry;

/// Number of monomials of total degree at most three.
pub const NCOEF: usize = 10;

/// Exponents `(i, j)` of `xi^i eta^j`, ordered by total degree.
pub const EXPONENTS: [(u32, u32); NCOEF] = [
    (0, 0),
    (1, 0),
    (0, 1),
    (2, 0),
    (1, 1),
    (0, 2),
    (3, 0),
    (2, 1),
    (1, 2),
    (0, 3),
];

fn index(i: u32, j: u32) -> Option<usize> {
    EXPONENTS.iter().position(|&e| e == (i, j))
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Poly {
    pub coef: [f64; NCOEF],
}

/// A pair of polynomials, the Cartesian components of a vector field.
/// Scalar fields use the first slot only.
pub type VecPoly = [Poly; 2];

impl Poly {
    pub const ZERO: Poly = Poly { coef: [0.0; NCOEF] };

    pub fn constant(c: f64) -> Self {
        let mut p = Self::ZERO;
        p.coef[0] = c;
        p
    }

    pub fn monomial(i: u32, j: u32, c: f64) -> Self {
        let mut p = Self::ZERO;
        p.coef[index(i, j).expect("monomial degree exceeds 3")] = c;
        p
    }

    /// Barycentric coordinate `lambda_{k+1}` (zero-based `k`).
    pub fn lambda(k: usize) -> Self {
        match k {
            0 => {
                let mut p = Self::constant(1.0);
                p.coef[1] = -1.0;
                p.coef[2] = -1.0;
                p
            }
            1 => Self::monomial(1, 0, 1.0),
            2 => Self::monomial(0, 1, 1.0),
            _ => panic!("barycentric index {k} out of range"),
        }
    }

    /// The cell bubble `lambda_1^2 + lambda_2^2 + lambda_3^2 - 2/3`.
    pub fn bubble() -> Self {
        let mut p = Self::constant(-2.0 / 3.0);
        for k in 0..3 {
            let l = Self::lambda(k);
            p += l * l;
        }
        p
    }

    pub fn eval(&self, xi: f64, eta: f64) -> f64 {
        let x2 = xi * xi;
        let y2 = eta * eta;
        let c = &self.coef;
        c[0] + c[1] * xi
            + c[2] * eta
            + c[3] * x2
            + c[4] * xi * eta
            + c[5] * y2
            + c[6] * x2 * xi
            + c[7] * x2 * eta
            + c[8] * xi * y2
            + c[9] * y2 * eta
    }

    /// Evaluate at a barycentric point `(l1, l2, l3)`.
    pub fn eval_bary(&self, b: [f64; 3]) -> f64 {
        self.eval(b[1], b[2])
    }

    pub fn d_xi(&self) -> Self {
        let mut out = Self::ZERO;
        for (k, &(i, j)) in EXPONENTS.iter().enumerate() {
            if i > 0 {
                out.coef[index(i - 1, j).unwrap()] += i as f64 * self.coef[k];
            }
        }
        out
    }

    pub fn d_eta(&self) -> Self {
        let mut out = Self::ZERO;
        for (k, &(i, j)) in EXPONENTS.iter().enumerate() {
            if j > 0 {
                out.coef[index(i, j - 1).unwrap()] += j as f64 * self.coef[k];
            }
        }
        out
    }

    /// Cartesian `d/dx` on the given cell.
    pub fn dx(&self, g: &CellGeometry) -> Self {
        self.d_xi() * g.grad_lambda[1][0] + self.d_eta() * g.grad_lambda[2][0]
    }

    /// Cartesian `d/dy` on the given cell.
    pub fn dy(&self, g: &CellGeometry) -> Self {
        self.d_xi() * g.grad_lambda[1][1] + self.d_eta() * g.grad_lambda[2][1]
    }

    pub fn grad(&self, g: &CellGeometry) -> VecPoly {
        [self.dx(g), self.dy(g)]
    }

    /// Highest total degree carrying a nonzero coefficient (0 for the zero polynomial).
    pub fn degree(&self) -> u32 {
        EXPONENTS
            .iter()
            .zip(self.coef.iter())
            .filter(|(_, &c)| c != 0.0)
            .map(|(&(i, j), _)| i + j)
            .max()
            .unwrap_or(0)
    }

    pub fn max_abs(&self) -> f64 {
        self.coef.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Potential `u` with `(du/dxi, du/deta) = (p, q)` and `u(0, 0) = 0`,
    /// obtained by integrating along `(0,0) -> (xi,0) -> (xi,eta)`.
    /// Exact only when `dp/deta == dq/dxi`.
    pub fn potential(p: &Poly, q: &Poly) -> Poly {
        let mut u = Self::ZERO;
        for (k, &(i, j)) in EXPONENTS.iter().enumerate() {
            if j == 0 && p.coef[k] != 0.0 {
                let idx = index(i + 1, 0).expect("potential exceeds degree 3");
                u.coef[idx] += p.coef[k] / (i + 1) as f64;
            }
            if q.coef[k] != 0.0 {
                let idx = index(i, j + 1).expect("potential exceeds degree 3");
                u.coef[idx] += q.coef[k] / (j + 1) as f64;
            }
        }
        u
    }
}

impl Add for Poly {
    type Output = Poly;
    fn add(mut self, rhs: Poly) -> Poly {
        self += rhs;
        self
    }
}

impl AddAssign for Poly {
    fn add_assign(&mut self, rhs: Poly) {
        for (a, b) in self.coef.iter_mut().zip(rhs.coef.iter()) {
            *a += b;
        }
    }
}

impl Sub for Poly {
    type Output = Poly;
    fn sub(mut self, rhs: Poly) -> Poly {
        self -= rhs;
        self
    }
}

impl SubAssign for Poly {
    fn sub_assign(&mut self, rhs: Poly) {
        for (a, b) in self.coef.iter_mut().zip(rhs.coef.iter()) {
            *a -= b;
        }
    }
}

impl Neg for Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self * -1.0
    }
}

impl Mul<f64> for Poly {
    type Output = Poly;
    fn mul(mut self, s: f64) -> Poly {
        for a in self.coef.iter_mut() {
            *a *= s;
        }
        self
    }
}

/// Product of two polynomials. Panics if the result exceeds degree three.
impl Mul<Poly> for Poly {
    type Output = Poly;
    fn mul(self, rhs: Poly) -> Poly {
        let mut out = Poly::ZERO;
        for (a, &(i1, j1)) in EXPONENTS.iter().enumerate() {
            if self.coef[a] == 0.0 {
                continue;
            }
            for (b, &(i2, j2)) in EXPONENTS.iter().enumerate() {
                if rhs.coef[b] == 0.0 {
                    continue;
                }
                let idx = index(i1 + i2, j1 + j2).expect("polynomial product exceeds degree 3");
                out.coef[idx] += self.coef[a] * rhs.coef[b];
            }
        }
        out
    }
}

pub fn vzero() -> VecPoly {
    [Poly::ZERO; 2]
}

pub fn vadd_scaled(acc: &mut VecPoly, f: &VecPoly, s: f64) {
    acc[0] += f[0] * s;
    acc[1] += f[1] * s;
}

/// `rot v = d v2/dx - d v1/dy`.
pub fn rot(v: &VecPoly, g: &CellGeometry) -> Poly {
    v[1].dx(g) - v[0].dy(g)
}

/// `div v = d v1/dx + d v2/dy`.
pub fn div(v: &VecPoly, g: &CellGeometry) -> Poly {
    v[0].dx(g) + v[1].dy(g)
}
