//! The eleven step rules. Each function implements its published update
//! verbatim, in the printed order, as a pure state -> state map.

use nalgebra::{DMatrix, DVector};

use super::HyperParams;
use crate::bregman;
use crate::error::{Error, Result};
use crate::linalg;
use crate::objectives::Objective;

/// Implicit gradient step: x = argmin f(x) + (eta/2) |x - x_prev|^2.
/// Quadratics solve the stationarity system exactly; other objectives go
/// through the damped-Newton prox solver.
pub fn prox_point_step(obj: &Objective, eta: f64, x_prev: &DVector<f64>) -> Result<DVector<f64>> {
    let phi = bregman::euclidean_generator(x_prev.len());
    bregman::bregman_prox(obj, &phi, eta, x_prev)
}

/// Solve the dual stationarity condition grad f*(g) + g/eta = rhs for g.
///
/// For quadratics this is the exact linear system (I + H/eta) g = H (rhs − x*);
/// otherwise a damped Newton iteration on the dual residual, differentiating
/// grad f* through the inverse-function rule.
pub fn solve_dual_condition(
    obj: &Objective,
    eta: f64,
    rhs: &DVector<f64>,
    g_warm: &DVector<f64>,
) -> Result<DVector<f64>> {
    if eta <= 0.0 {
        return Err(Error::InvalidParams(format!(
            "inverse step size must be positive, got {eta}"
        )));
    }
    if let Some(h) = obj.quadratic_matrix() {
        let n = rhs.len();
        let lhs = DMatrix::identity(n, n) + h / eta;
        return linalg::lu_solve(&lhs, &(h * (rhs - obj.minimizer())));
    }

    const TOL: f64 = 1e-12;
    let mut g = g_warm.clone();
    let mut x_g = obj.conjugate_gradient(&g)?;
    let residual = |x_g: &DVector<f64>, g: &DVector<f64>| x_g + g / eta - rhs;
    let mut r = residual(&x_g, &g);
    let mut r_norm = r.norm();
    for iter in 0..100 {
        if r_norm <= TOL {
            return Ok(g);
        }
        // d/dg grad f*(g) = (hess f at the primal point)^-1.
        let hess_inv = obj
            .hessian(&x_g)
            .try_inverse()
            .ok_or_else(|| Error::SingularMetric("dual Jacobian is singular".into()))?;
        let jac = hess_inv + DMatrix::identity(g.len(), g.len()) / eta;
        let step = linalg::lu_solve(&jac, &(-&r)).map_err(|_| Error::SolverFailure {
            what: "dual stationarity solve",
            residual: r_norm,
            iterations: iter,
        })?;
        let mut t = 1.0;
        let mut halvings = 0;
        loop {
            let g_cand = &g + &step * t;
            match obj.conjugate_gradient_from(&g_cand, Some(&x_g)) {
                Ok(x_cand) => {
                    let cr = residual(&x_cand, &g_cand);
                    let cr_norm = cr.norm();
                    if cr_norm < r_norm || halvings >= 60 {
                        g = g_cand;
                        x_g = x_cand;
                        r = cr;
                        r_norm = cr_norm;
                        break;
                    }
                }
                Err(_) if halvings < 60 => {}
                Err(e) => return Err(e),
            }
            t *= 0.5;
            halvings += 1;
        }
    }
    if r_norm <= TOL {
        Ok(g)
    } else {
        Err(Error::SolverFailure {
            what: "dual stationarity solve",
            residual: r_norm,
            iterations: 100,
        })
    }
}

/// Proximal point in its primal-dual form: the new dual point solves
/// grad f*(g) + g/eta = x (the previous g cancels out of the optimality
/// condition), then x moves by -(1/eta) g.
pub fn primal_dual_pp_step(
    obj: &Objective,
    eta: f64,
    x: &DVector<f64>,
    g: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let g_new = solve_dual_condition(obj, eta, x, g)?;
    let x_new = x - &g_new / eta;
    Ok((x_new, g_new))
}

/// Accelerated gradient method in Bregman form:
/// y ← (x − (alpha/eta) g + tau y)/(1 + tau); g ← grad f(y); x ← x − g/eta.
pub fn bregman_agm_step(
    obj: &Objective,
    params: &HyperParams,
    x: &DVector<f64>,
    y: &DVector<f64>,
    g: &DVector<f64>,
) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
    let y_new = (x - g * (params.alpha / params.eta) + y * params.tau) / (1.0 + params.tau);
    let g_new = obj.gradient(&y_new);
    let x_new = x - &g_new / params.eta;
    (x_new, y_new, g_new)
}

/// Primal-dual proximal point after the change of variables
/// z = x − (alpha/eta) g: the dual solve sees z + g/eta on the right-hand
/// side and z picks up the extra −(alpha/eta)(g_new − g) inertial term.
pub fn inertial_pp_step(
    obj: &Objective,
    params: &HyperParams,
    z: &DVector<f64>,
    g: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let rhs = z + g / params.eta;
    let g_new = solve_dual_condition(obj, params.eta, &rhs, g)?;
    let z_new = z - &g_new / params.eta - (&g_new - g) * (params.alpha / params.eta);
    Ok((z_new, g_new))
}

/// y ← y − step · grad f(y) + beta (y − y_prev).
pub fn heavy_ball_step(
    obj: &Objective,
    beta: f64,
    step: f64,
    y: &DVector<f64>,
    y_prev: &DVector<f64>,
) -> (DVector<f64>, DVector<f64>) {
    let y_new = y - obj.gradient(y) * step + (y - y_prev) * beta;
    (y_new, y.clone())
}

/// Form I: evaluate at the stored y, move x by a 1/L gradient step, blend v,
/// then recompute y = (alpha gamma v + gamma x)/(alpha mu + gamma).
pub fn nesterov_form_i_step(
    obj: &Objective,
    params: &HyperParams,
    _x: &DVector<f64>,
    v: &DVector<f64>,
    y: &DVector<f64>,
) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
    let (alpha, gamma, mu, l) = (params.alpha, params.gamma, params.mu, params.l);
    let g = obj.gradient(y);
    let x_new = y - &g / l;
    let v_new = v * (1.0 - alpha) + y * (alpha * mu / gamma) - &g * (alpha / gamma);
    let y_new = (&v_new * (alpha * gamma) + &x_new * gamma) / (alpha * mu + gamma);
    (x_new, v_new, y_new)
}

/// Form II: x ← y − grad f(y)/L; y ← x + beta (x − x_old).
pub fn nesterov_form_ii_step(
    obj: &Objective,
    params: &HyperParams,
    x: &DVector<f64>,
    y: &DVector<f64>,
) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
    let x_new = y - obj.gradient(y) / params.l;
    let y_new = &x_new + (&x_new - x) * params.beta;
    (x_new, x.clone(), y_new)
}

/// p ← beta p − grad f(x + beta p)/L; x ← x + p.
pub fn sutskever_step(
    obj: &Objective,
    params: &HyperParams,
    x: &DVector<f64>,
    p: &DVector<f64>,
) -> (DVector<f64>, DVector<f64>) {
    let p_new = p * params.beta - obj.gradient(&(x + p * params.beta)) / params.l;
    let x_new = x + &p_new;
    (x_new, p_new)
}

/// p ← beta p + grad f(x); x ← x − (grad f(x) + beta p)/L.
/// Gradient evaluated at the current iterate, as deep-learning frameworks do.
pub fn modern_momentum_step(
    obj: &Objective,
    params: &HyperParams,
    x: &DVector<f64>,
    p: &DVector<f64>,
) -> (DVector<f64>, DVector<f64>) {
    let g = obj.gradient(x);
    let p_new = p * params.beta + &g;
    let x_new = x - (&g + &p_new * params.beta) / params.l;
    (x_new, p_new)
}

/// z ← z − (gamma/theta) grad f(y); x_hat ← (1−theta) x_hat + theta z;
/// y ← (1−theta) x_hat + theta z (the mixing invariant, recomputed).
pub fn auslender_teboulle_step(
    obj: &Objective,
    params: &HyperParams,
    x_hat: &DVector<f64>,
    z: &DVector<f64>,
    y: &DVector<f64>,
) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
    let theta = params.theta;
    let z_new = z - obj.gradient(y) * (params.gamma / theta);
    let x_hat_new = x_hat * (1.0 - theta) + &z_new * theta;
    let y_new = &x_hat_new * (1.0 - theta) + &z_new * theta;
    (x_hat_new, z_new, y_new)
}

/// x~ ← x + alpha (x − x_prev); x_md ← (x~ + tau x_md)/(1+tau);
/// x ← x − grad f(x_md)/eta.
pub fn lan_step(
    obj: &Objective,
    params: &HyperParams,
    x: &DVector<f64>,
    x_prev: &DVector<f64>,
    x_md: &DVector<f64>,
) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
    let x_tilde = x + (x - x_prev) * params.alpha;
    let x_md_new = (x_tilde + x_md * params.tau) / (1.0 + params.tau);
    let g = obj.gradient(&x_md_new);
    let x_new = x - &g / params.eta;
    (x_new, x.clone(), x_md_new)
}
