//! Test objectives: strongly convex quadratics and a quartic whose curvature
//! varies with position.
//!
//! Both families expose the same evaluator bundle (value, gradient, Hessian,
//! gradient of the convex conjugate), which is everything the geometry,
//! discrete-method, and ODE modules need. Quadratics have every map in closed
//! form; the quartic inverts its gradient with a damped Newton solve.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Quartic queries with `|A x| < QUARTIC_SINGULAR_RADIUS` are rejected:
/// the Hessian degenerates at the origin and dual coordinates are unusable.
pub const QUARTIC_SINGULAR_RADIUS: f64 = 1e-6;

/// Absolute residual tolerance for the quartic gradient-inversion Newton solve.
pub const CONJUGATE_NEWTON_TOL: f64 = 1e-12;
const CONJUGATE_NEWTON_MAX_ITERS: usize = 100;
const NEWTON_MAX_HALVINGS: usize = 60;

#[derive(Clone)]
enum Kind {
    Quadratic {
        h: DMatrix<f64>,
        chol: Cholesky<f64, Dyn>,
        x_star: DVector<f64>,
        offset: f64,
    },
    Quartic {
        a: DMatrix<f64>,
        gram: DMatrix<f64>,
    },
}

/// An objective bundled with its evaluators and conditioning data.
#[derive(Clone)]
pub struct Objective {
    kind: Kind,
    n: usize,
    mu: f64,
    lipschitz: f64,
    minimizer: DVector<f64>,
}

/// `f(x) = 1/2 (x - x*)^T H (x - x*)` with `H` symmetric positive definite.
pub fn make_quadratic(h: DMatrix<f64>, x_star: DVector<f64>) -> Result<Objective> {
    quadratic_with_offset(h, x_star, 0.0)
}

fn quadratic_with_offset(h: DMatrix<f64>, x_star: DVector<f64>, offset: f64) -> Result<Objective> {
    if h.nrows() != x_star.len() {
        return Err(Error::InvalidInput(format!(
            "H is {}x{} but x_star has length {}",
            h.nrows(),
            h.ncols(),
            x_star.len()
        )));
    }
    let (eigs, _) = linalg::sym_eig(&h)?;
    let mu = eigs[0];
    let lipschitz = eigs[eigs.len() - 1];
    if mu <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "H must be positive definite; smallest eigenvalue is {mu}"
        )));
    }
    let chol = linalg::spd_cholesky(&h)?;
    Ok(Objective {
        n: x_star.len(),
        mu,
        lipschitz,
        minimizer: x_star.clone(),
        kind: Kind::Quadratic {
            h,
            chol,
            x_star,
            offset,
        },
    })
}

/// `f(x) = 1/4 |A x|^4` with `A` invertible. Convex but not strongly convex
/// (mu = 0, no global Lipschitz gradient); used as a geometry demonstration,
/// not for rate certificates.
pub fn make_quartic(a: DMatrix<f64>) -> Result<Objective> {
    if !a.is_square() {
        return Err(Error::InvalidInput("A must be square".into()));
    }
    let n = a.nrows();
    if a.clone().lu().try_inverse().is_none() {
        return Err(Error::InvalidInput("A must be invertible".into()));
    }
    let gram = a.transpose() * &a;
    Ok(Objective {
        n,
        mu: 0.0,
        lipschitz: f64::INFINITY,
        minimizer: DVector::zeros(n),
        kind: Kind::Quartic { a, gram },
    })
}

/// Strong convexity and smoothness constants (the extreme eigenvalues of `H`).
/// Only defined for quadratics.
pub fn strong_convexity_bounds(obj: &Objective) -> Result<(f64, f64)> {
    match &obj.kind {
        Kind::Quadratic { .. } => Ok((obj.mu, obj.lipschitz)),
        Kind::Quartic { .. } => Err(Error::Unsupported(
            "strong convexity bounds are only defined for quadratics".into(),
        )),
    }
}

impl Objective {
    pub fn dimension(&self) -> usize {
        self.n
    }

    /// Strong convexity constant; 0 for the quartic.
    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Gradient Lipschitz constant; infinite for the quartic.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn minimizer(&self) -> &DVector<f64> {
        &self.minimizer
    }

    pub fn is_quadratic(&self) -> bool {
        matches!(self.kind, Kind::Quadratic { .. })
    }

    /// True when rate theory applies (mu > 0 and L finite).
    pub fn is_strongly_convex(&self) -> bool {
        self.mu > 0.0 && self.lipschitz.is_finite()
    }

    /// The quadratic's Hessian matrix, if this objective is quadratic.
    pub fn quadratic_matrix(&self) -> Option<&DMatrix<f64>> {
        match &self.kind {
            Kind::Quadratic { h, .. } => Some(h),
            Kind::Quartic { .. } => None,
        }
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        match &self.kind {
            Kind::Quadratic {
                h, x_star, offset, ..
            } => {
                let d = x - x_star;
                0.5 * d.dot(&(h * &d)) + offset
            }
            Kind::Quartic { a, .. } => {
                let ax = a * x;
                0.25 * ax.norm_squared().powi(2)
            }
        }
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        match &self.kind {
            Kind::Quadratic { h, x_star, .. } => h * (x - x_star),
            Kind::Quartic { a, gram } => {
                let s = (a * x).norm_squared();
                gram * x * s
            }
        }
    }

    pub fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        match &self.kind {
            Kind::Quadratic { h, .. } => h.clone(),
            Kind::Quartic { a, gram } => {
                let s = (a * x).norm_squared();
                let gx = gram * x;
                gram * s + 2.0 * &gx * gx.transpose()
            }
        }
    }

    /// Gradient of the convex conjugate: the inverse gradient map,
    /// `x` such that `grad f(x) = g`.
    pub fn conjugate_gradient(&self, g: &DVector<f64>) -> Result<DVector<f64>> {
        self.conjugate_gradient_from(g, None)
    }

    /// Same as [`conjugate_gradient`](Self::conjugate_gradient) with an
    /// explicit warm start for the quartic's Newton solve. Callers that sweep
    /// nearby dual points (geodesic samplers) pass the previous solution.
    pub fn conjugate_gradient_from(
        &self,
        g: &DVector<f64>,
        warm: Option<&DVector<f64>>,
    ) -> Result<DVector<f64>> {
        if g.len() != self.n {
            return Err(Error::InvalidInput(format!(
                "gradient query has length {}, objective dimension is {}",
                g.len(),
                self.n
            )));
        }
        match &self.kind {
            Kind::Quadratic { chol, x_star, .. } => Ok(x_star + chol.solve(g)),
            Kind::Quartic { a, .. } => self.invert_quartic_gradient(a, g, warm),
        }
    }

    /// Convex conjugate as a new objective. Closed under conjugation for
    /// quadratics (`H -> H^-1`, minimizer `-H x*`); undefined for the quartic.
    pub fn conjugate(&self) -> Result<Objective> {
        match &self.kind {
            Kind::Quadratic {
                h,
                chol,
                x_star,
                offset,
            } => {
                let h_inv = chol.inverse();
                let m = -(h * x_star);
                let c = -0.5 * x_star.dot(&(h * x_star)) - offset;
                quadratic_with_offset(h_inv, m, c)
            }
            Kind::Quartic { .. } => Err(Error::Unsupported(
                "conjugate objective is only available for quadratics".into(),
            )),
        }
    }

    /// Damped Newton solve of `grad f(x) = g` for the quartic. The direction
    /// of the solution is fixed by `A^-T g`; the Newton iteration settles the
    /// radius. Absolute residual tolerance 1e-12, backtracking by halving.
    fn invert_quartic_gradient(
        &self,
        a: &DMatrix<f64>,
        g: &DVector<f64>,
        warm: Option<&DVector<f64>>,
    ) -> Result<DVector<f64>> {
        let w = linalg::lu_solve(&a.transpose(), g)?;
        let radius = w.norm().cbrt();
        if radius < QUARTIC_SINGULAR_RADIUS {
            return Err(Error::SingularMetric(format!(
                "dual query maps to |Ax| = {radius:.3e}, below {QUARTIC_SINGULAR_RADIUS:.0e}"
            )));
        }
        let mut x = match warm {
            Some(x0) => x0.clone(),
            // Start on the correct ray at unit |Ax| and let Newton find the radius.
            None => linalg::lu_solve(a, &w.normalize())?,
        };
        let mut r = self.gradient(&x) - g;
        let mut r_norm = r.norm();
        for iter in 0..CONJUGATE_NEWTON_MAX_ITERS {
            if r_norm <= CONJUGATE_NEWTON_TOL {
                return Ok(x);
            }
            if (a * &x).norm() < QUARTIC_SINGULAR_RADIUS {
                return Err(Error::SingularMetric(
                    "Newton iterate entered the singular region around the origin".into(),
                ));
            }
            let step = linalg::lu_solve(&self.hessian(&x), &(-&r)).map_err(|_| {
                Error::SolverFailure {
                    what: "quartic gradient inversion",
                    residual: r_norm,
                    iterations: iter,
                }
            })?;
            let mut t = 1.0;
            let mut halvings = 0;
            loop {
                let candidate = &x + &step * t;
                let cr = self.gradient(&candidate) - g;
                let cr_norm = cr.norm();
                if cr_norm < r_norm || halvings >= NEWTON_MAX_HALVINGS {
                    x = candidate;
                    r = cr;
                    r_norm = cr_norm;
                    break;
                }
                t *= 0.5;
                halvings += 1;
            }
        }
        if r_norm <= CONJUGATE_NEWTON_TOL {
            Ok(x)
        } else {
            Err(Error::SolverFailure {
                what: "quartic gradient inversion",
                residual: r_norm,
                iterations: CONJUGATE_NEWTON_MAX_ITERS,
            })
        }
    }
}

/// Serializable description of an objective, the on-disk config format.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObjectiveSpec {
    Quadratic {
        #[serde(rename = "H")]
        h: Vec<Vec<f64>>,
        x_star: Vec<f64>,
    },
    Quartic {
        #[serde(rename = "A")]
        a: Vec<Vec<f64>>,
    },
}

impl ObjectiveSpec {
    pub fn build(&self) -> Result<Objective> {
        match self {
            ObjectiveSpec::Quadratic { h, x_star } => {
                let h = rows_to_matrix(h)?;
                make_quadratic(h, DVector::from_vec(x_star.clone()))
            }
            ObjectiveSpec::Quartic { a } => make_quartic(rows_to_matrix(a)?),
        }
    }
}

fn rows_to_matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidInput(
            "matrix rows must be non-empty and square".into(),
        ));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}
