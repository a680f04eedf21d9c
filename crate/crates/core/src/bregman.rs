//! Hessian-manifold geometry generated by a convex function φ.
//!
//! The generator's Hessian ∇²φ acts as a Riemannian metric; its gradient map
//! provides dual coordinates in which one of the two flat connections has
//! straight-line geodesics. Everything here works for any [`Objective`] used
//! as φ — the interesting case is a non-quadratic generator, where primal
//! geodesics genuinely curve.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::objectives::Objective;

/// Role alias: an objective used as the geometry's generating function φ.
pub type Generator = Objective;

/// φ(x) = ½‖x‖², the flat Euclidean geometry.
pub fn euclidean_generator(n: usize) -> Generator {
    crate::objectives::make_quadratic(DMatrix::identity(n, n), DVector::zeros(n))
        .expect("identity matrix is positive definite")
}

/// Bregman divergence B_φ(x, y) = φ(x) − φ(y) − ⟨∇φ(y), x − y⟩.
pub fn divergence(phi: &Generator, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    phi.value(x) - phi.value(y) - phi.gradient(y).dot(&(x - y))
}

/// Dual coordinates of a point: ∇φ(x).
pub fn to_dual_coords(phi: &Generator, x: &DVector<f64>) -> DVector<f64> {
    phi.gradient(x)
}

/// Primal point with the given dual coordinates: ∇φ*(y).
pub fn from_dual_coords(phi: &Generator, y: &DVector<f64>) -> Result<DVector<f64>> {
    phi.conjugate_gradient(y)
}

/// Dual (tangent) coordinates of a tangent vector at x: u = ∇²φ(x) v.
pub fn tangent_to_dual(phi: &Generator, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
    phi.hessian(x) * v
}

/// A sampled curve with a uniform parameter grid on [0, 1].
#[derive(Debug, Clone)]
pub struct GeodesicPath {
    samples: Vec<(f64, DVector<f64>)>,
}

impl GeodesicPath {
    fn from_samples(samples: Vec<(f64, DVector<f64>)>) -> Self {
        debug_assert!(samples.len() >= 2);
        GeodesicPath { samples }
    }

    /// Euclidean segment (1−t)x + ty — the straight-line reference curve.
    pub fn straight_line(x: &DVector<f64>, y: &DVector<f64>, m: usize) -> Result<Self> {
        check_sample_count(m)?;
        let samples = (0..m)
            .map(|i| {
                let t = i as f64 / (m - 1) as f64;
                (t, x * (1.0 - t) + y * t)
            })
            .collect();
        Ok(GeodesicPath::from_samples(samples))
    }

    pub fn samples(&self) -> &[(f64, DVector<f64>)] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn start(&self) -> &DVector<f64> {
        &self.samples[0].1
    }

    pub fn end(&self) -> &DVector<f64> {
        &self.samples[self.samples.len() - 1].1
    }

    /// CSV with header `t,x_1,...,x_n`, one row per sample.
    pub fn to_csv(&self) -> String {
        let n = self.samples[0].1.len();
        let mut out = String::from("t");
        for j in 1..=n {
            out.push_str(&format!(",x_{j}"));
        }
        out.push('\n');
        for (t, p) in &self.samples {
            out.push_str(&format!("{t}"));
            for v in p.iter() {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

fn check_sample_count(m: usize) -> Result<()> {
    if m < 2 {
        Err(Error::InvalidInput(format!(
            "a path needs at least 2 samples, got {m}"
        )))
    } else {
        Ok(())
    }
}

/// Geodesic of the dual-flat connection from x to y: the curve whose dual
/// coordinates interpolate linearly, γ(t) = ∇φ*((1−t)∇φ(x) + t∇φ(y)).
/// Samples on a uniform grid, warm-starting each inverse-map solve at the
/// previous sample.
pub fn dual_geodesic(
    phi: &Generator,
    x: &DVector<f64>,
    y: &DVector<f64>,
    m: usize,
) -> Result<GeodesicPath> {
    check_sample_count(m)?;
    let gx = phi.gradient(x);
    let gy = phi.gradient(y);
    let mut samples = Vec::with_capacity(m);
    let mut warm = x.clone();
    for i in 0..m {
        let t = i as f64 / (m - 1) as f64;
        let dual = &gx * (1.0 - t) + &gy * t;
        let p = phi.conjugate_gradient_from(&dual, Some(&warm))?;
        warm = p.clone();
        samples.push((t, p));
    }
    Ok(GeodesicPath::from_samples(samples))
}

/// Endpoint of the dual-flat geodesic leaving x with initial velocity v:
/// y = ∇φ*(∇φ(x) + ∇²φ(x) v).
pub fn dual_exp(phi: &Generator, x: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
    let dual = phi.gradient(x) + phi.hessian(x) * v;
    phi.conjugate_gradient_from(&dual, Some(x))
}

/// Connection coefficients of the dual connection at a point,
/// Γ^k_ij = [∇²φ(x)⁻¹ · ∂_i ∇²φ(x)]_kj, indexed as `coeffs.gamma(k, i, j)`.
#[derive(Debug, Clone)]
pub struct ConnectionCoeffs {
    /// per_direction[i] = H⁻¹ ∂_i H, so per_direction[i][(k, j)] = Γ^k_ij.
    per_direction: Vec<DMatrix<f64>>,
}

impl ConnectionCoeffs {
    pub fn dim(&self) -> usize {
        self.per_direction.len()
    }

    pub fn gamma(&self, k: usize, i: usize, j: usize) -> f64 {
        self.per_direction[i][(k, j)]
    }

    /// Quadratic contraction Γ(v, v)^k = Σ_ij Γ^k_ij vⁱ vʲ.
    pub fn contract(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim());
        for (i, block) in self.per_direction.iter().enumerate() {
            out += block * v * v[i];
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.per_direction
            .iter()
            .map(|m| m.amax())
            .fold(0.0, f64::max)
    }

    /// Largest violation of symmetry in the lower index pair, |Γ^k_ij − Γ^k_ji|.
    pub fn lower_symmetry_gap(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    worst = worst.max((self.gamma(k, i, j) - self.gamma(k, j, i)).abs());
                }
            }
        }
        worst
    }
}

/// Step for the central finite difference of the metric, ∂_i ∇²φ.
pub const HESSIAN_DERIVATIVE_STEP: f64 = 1e-4;

/// Dual-connection coefficients at x, with ∂_i ∇²φ by central differences.
pub fn dual_connection_coeffs(phi: &Generator, x: &DVector<f64>) -> Result<ConnectionCoeffs> {
    let n = x.len();
    let h = phi.hessian(x);
    let chol = linalg::spd_cholesky(&h)
        .map_err(|_| Error::SingularMetric("metric Hessian is not positive definite".into()))?;
    let step = HESSIAN_DERIVATIVE_STEP;
    let mut per_direction = Vec::with_capacity(n);
    for i in 0..n {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += step;
        xm[i] -= step;
        let dh = (phi.hessian(&xp) - phi.hessian(&xm)) / (2.0 * step);
        per_direction.push(chol.solve(&dh));
    }
    Ok(ConnectionCoeffs { per_direction })
}

/// Max geodesic-equation residual ‖γ̈ + Γ(γ̇, γ̇)‖ over the interior samples
/// of a uniformly-gridded path, with γ̇ and γ̈ by central differences.
pub fn geodesic_ode_residual(phi: &Generator, path: &GeodesicPath) -> Result<f64> {
    let m = path.len();
    if m < 5 {
        return Err(Error::InvalidInput(format!(
            "residual check needs at least 5 samples, got {m}"
        )));
    }
    let s = path.samples();
    let dt = s[1].0 - s[0].0;
    let mut worst: f64 = 0.0;
    for i in 1..m - 1 {
        let vel = (&s[i + 1].1 - &s[i - 1].1) / (2.0 * dt);
        let acc = (&s[i + 1].1 - &s[i].1 * 2.0 + &s[i - 1].1) / (dt * dt);
        let gamma = dual_connection_coeffs(phi, &s[i].1)?;
        worst = worst.max((acc + gamma.contract(&vel)).norm());
    }
    Ok(worst)
}

/// Residual tolerance for the proximal stationarity solve.
pub const PROX_NEWTON_TOL: f64 = 1e-12;
const PROX_NEWTON_MAX_ITERS: usize = 100;
const PROX_MAX_HALVINGS: usize = 60;

/// Bregman proximal step: argmin_x f(x) + ρ B_φ(x, x_prev).
///
/// The minimizer satisfies ∇φ(x) − ∇φ(x_prev) + (1/ρ)∇f(x) = 0, i.e. the
/// step leaves x_prev along a dual geodesic with velocity −(1/ρ)∇f(x).
/// Quadratic f with quadratic φ solves in closed form; otherwise a damped
/// Newton iteration drives the stationarity residual below 1e−12.
pub fn bregman_prox(
    f: &Objective,
    phi: &Generator,
    rho: f64,
    x_prev: &DVector<f64>,
) -> Result<DVector<f64>> {
    if rho <= 0.0 {
        return Err(Error::InvalidParams(format!(
            "prox weight must be positive, got {rho}"
        )));
    }
    if let (Some(hf), Some(hphi)) = (f.quadratic_matrix(), phi.quadratic_matrix()) {
        // (H_f + ρ H_φ) x = H_f x_f* + ρ H_φ x_prev, exactly.
        let lhs = hf + hphi * rho;
        let rhs = hf * f.minimizer() + hphi * x_prev * rho;
        return linalg::lu_solve(&lhs, &rhs);
    }

    let g_prev = phi.gradient(x_prev);
    let residual = |x: &DVector<f64>| phi.gradient(x) - &g_prev + f.gradient(x) / rho;
    let mut x = x_prev.clone();
    let mut r = residual(&x);
    let mut r_norm = r.norm();
    for iter in 0..PROX_NEWTON_MAX_ITERS {
        if r_norm <= PROX_NEWTON_TOL {
            return Ok(x);
        }
        let jac = phi.hessian(&x) + f.hessian(&x) / rho;
        let step = linalg::lu_solve(&jac, &(-&r)).map_err(|_| Error::SolverFailure {
            what: "bregman prox stationarity",
            residual: r_norm,
            iterations: iter,
        })?;
        let mut t = 1.0;
        let mut halvings = 0;
        loop {
            let candidate = &x + &step * t;
            let cr = residual(&candidate);
            let cr_norm = cr.norm();
            if cr_norm < r_norm || halvings >= PROX_MAX_HALVINGS {
                x = candidate;
                r = cr;
                r_norm = cr_norm;
                break;
            }
            t *= 0.5;
            halvings += 1;
        }
    }
    if r_norm <= PROX_NEWTON_TOL {
        Ok(x)
    } else {
        Err(Error::SolverFailure {
            what: "bregman prox stationarity",
            residual: r_norm,
            iterations: PROX_NEWTON_MAX_ITERS,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{make_quadratic, make_quartic};
    use approx::assert_abs_diff_eq;

    fn fig_matrix() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0])
    }

    fn quadratic_phi() -> Generator {
        make_quadratic(fig_matrix(), DVector::zeros(2)).unwrap()
    }

    fn quartic_phi() -> Generator {
        make_quartic(fig_matrix()).unwrap()
    }

    #[test]
    fn euclidean_divergence_is_half_squared_distance() {
        let phi = euclidean_generator(2);
        let x = DVector::from_vec(vec![1.0, -2.0]);
        let y = DVector::from_vec(vec![0.5, 3.0]);
        assert_abs_diff_eq!(
            divergence(&phi, &x, &y),
            0.5 * (&x - &y).norm_squared(),
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(divergence(&phi, &x, &x), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn quadratic_divergence_frozen_value() {
        let phi = quadratic_phi();
        let x = DVector::from_vec(vec![1.0, 0.0]);
        let y = DVector::zeros(2);
        assert_abs_diff_eq!(divergence(&phi, &x, &y), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn dual_coords_round_trip() {
        let x = DVector::from_vec(vec![1.0, 1.0]);
        for phi in [quadratic_phi(), quartic_phi()] {
            let y = to_dual_coords(&phi, &x);
            let back = from_dual_coords(&phi, &y).unwrap();
            assert!((back - &x).norm() <= 1e-8, "round trip drifted");
        }
        // Quadratic case is exact: to_dual is Hx.
        let phi = quadratic_phi();
        let y = to_dual_coords(&phi, &x);
        assert_abs_diff_eq!(y[0], 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(y[1], 4.0, epsilon = 1e-14);
    }

    #[test]
    fn tangent_map_matches_directional_difference() {
        let phi = quartic_phi();
        let x = DVector::from_vec(vec![0.8, -0.3]);
        let v = DVector::from_vec(vec![0.4, 1.0]);
        let u = tangent_to_dual(&phi, &x, &v);
        let h = 1e-5;
        let fd = (phi.gradient(&(&x + &v * h)) - phi.gradient(&(&x - &v * h))) / (2.0 * h);
        assert!(
            (fd - &u).norm() <= 1e-6,
            "tangent map disagrees with finite difference"
        );
        assert!(tangent_to_dual(&phi, &x, &DVector::zeros(2)).norm() == 0.0);
    }

    #[test]
    fn biorthogonality_of_tangent_coordinates() {
        let phi = quartic_phi();
        let x = DVector::from_vec(vec![1.1, 0.7]);
        let v1 = DVector::from_vec(vec![0.2, -0.9]);
        let v2 = DVector::from_vec(vec![1.3, 0.4]);
        let lhs = v1.dot(&(phi.hessian(&x) * &v2));
        let rhs = v1.dot(&tangent_to_dual(&phi, &x, &v2));
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12);
    }

    #[test]
    fn euclidean_geodesic_is_straight() {
        let phi = euclidean_generator(2);
        let x = DVector::from_vec(vec![0.0, 1.0]);
        let y = DVector::from_vec(vec![2.0, -1.0]);
        let path = dual_geodesic(&phi, &x, &y, 11).unwrap();
        for (t, p) in path.samples() {
            let expect = &x * (1.0 - *t) + &y * *t;
            assert!((p - expect).norm() <= 1e-12);
        }
    }

    #[test]
    fn quartic_geodesic_is_affine_in_dual_coordinates() {
        let phi = quartic_phi();
        let x = DVector::from_vec(vec![1.0, 0.5]);
        let y = DVector::from_vec(vec![-0.5, 1.0]);
        let path = dual_geodesic(&phi, &x, &y, 101).unwrap();
        assert!((path.start() - &x).norm() <= 1e-10);
        assert!((path.end() - &y).norm() <= 1e-10);
        let gx = phi.gradient(&x);
        let gy = phi.gradient(&y);
        for (t, p) in path.samples() {
            let dual = phi.gradient(p);
            let affine = &gx * (1.0 - *t) + &gy * *t;
            assert!(
                (dual - affine).norm() <= 1e-8,
                "dual coordinates bent at t={t}"
            );
        }
    }

    #[test]
    fn constant_geodesic_when_endpoints_coincide() {
        let phi = quartic_phi();
        let x = DVector::from_vec(vec![1.0, 0.5]);
        let path = dual_geodesic(&phi, &x, &x, 7).unwrap();
        for (_, p) in path.samples() {
            assert!((p - &x).norm() <= 1e-10);
        }
    }

    #[test]
    fn dual_exp_basics() {
        let phi = euclidean_generator(2);
        let x = DVector::from_vec(vec![1.0, 2.0]);
        let v = DVector::from_vec(vec![-0.5, 0.25]);
        let y = dual_exp(&phi, &x, &v).unwrap();
        assert!((y - (&x + &v)).norm() <= 1e-12);

        let phi = quartic_phi();
        let y = dual_exp(&phi, &x, &DVector::zeros(2)).unwrap();
        assert!((y - &x).norm() <= 1e-10);
    }

    #[test]
    fn dual_exp_matches_geodesic_initial_velocity() {
        let phi = quartic_phi();
        let x = DVector::from_vec(vec![1.0, 0.5]);
        let v = DVector::from_vec(vec![0.3, -0.2]);
        let y = dual_exp(&phi, &x, &v).unwrap();
        let m = 1001;
        let path = dual_geodesic(&phi, &x, &y, m).unwrap();
        let s = path.samples();
        let dt = s[1].0 - s[0].0;
        // Second-order one-sided difference at t = 0.
        let v0 = (&s[0].1 * -3.0 + &s[1].1 * 4.0 - &s[2].1) / (2.0 * dt);
        assert!(
            (v0 - &v).norm() <= 1e-5,
            "initial velocity of the geodesic does not match"
        );
    }

    #[test]
    fn quadratic_generator_has_zero_connection() {
        for phi in [euclidean_generator(2), quadratic_phi()] {
            let x = DVector::from_vec(vec![0.4, -1.2]);
            let gamma = dual_connection_coeffs(&phi, &x).unwrap();
            assert!(gamma.max_abs() <= 1e-8, "constant metric must be flat");
        }
    }

    #[test]
    fn quartic_connection_symmetric_in_lower_indices() {
        let phi = quartic_phi();
        let x = DVector::from_vec(vec![1.0, 1.0]);
        let gamma = dual_connection_coeffs(&phi, &x).unwrap();
        assert!(gamma.max_abs() > 0.1, "quartic metric should curve");
        assert!(gamma.lower_symmetry_gap() <= 1e-4);
    }

    #[test]
    fn geodesic_residual_vanishes_in_flat_geometry() {
        let phi = euclidean_generator(2);
        let x = DVector::from_vec(vec![0.0, 1.0]);
        let y = DVector::from_vec(vec![2.0, -1.0]);
        let path = GeodesicPath::straight_line(&x, &y, 21).unwrap();
        assert!(geodesic_ode_residual(&phi, &path).unwrap() <= 1e-10);
        let constant = GeodesicPath::straight_line(&x, &x, 21).unwrap();
        assert!(geodesic_ode_residual(&phi, &constant).unwrap() == 0.0);
    }

    #[test]
    fn quartic_geodesic_satisfies_geodesic_equation() {
        let phi = quartic_phi();
        let x = DVector::from_vec(vec![1.0, 0.5]);
        let y = DVector::from_vec(vec![-0.5, 1.0]);
        let path = dual_geodesic(&phi, &x, &y, 401).unwrap();
        let residual = geodesic_ode_residual(&phi, &path).unwrap();
        assert!(
            residual <= 1e-3,
            "geodesic equation residual too large: {residual:.3e}"
        );
        // A straight line is not a geodesic of this geometry.
        let straight = GeodesicPath::straight_line(&x, &y, 401).unwrap();
        let bad = geodesic_ode_residual(&phi, &straight).unwrap();
        assert!(bad > 10.0 * residual, "straight line should violate the ODE");
    }

    #[test]
    fn residual_needs_enough_samples() {
        let phi = euclidean_generator(2);
        let x = DVector::zeros(2);
        let path = GeodesicPath::straight_line(&x, &x, 4).unwrap();
        assert!(geodesic_ode_residual(&phi, &path).is_err());
    }

    #[test]
    fn euclidean_prox_closed_form() {
        let h = fig_matrix();
        let x_star = DVector::from_vec(vec![1.0, -1.0]);
        let f = make_quadratic(h.clone(), x_star.clone()).unwrap();
        let phi = euclidean_generator(2);
        let rho = 0.7;
        let x_prev = DVector::from_vec(vec![2.0, 2.0]);
        let x = bregman_prox(&f, &phi, rho, &x_prev).unwrap();
        let lhs = &h + DMatrix::identity(2, 2) * rho;
        let rhs = &x_prev * rho + &h * &x_star;
        let expect = linalg::lu_solve(&lhs, &rhs).unwrap();
        assert!((x - expect).norm() <= 1e-12);
    }

    #[test]
    fn prox_fixed_point_at_minimizer() {
        let f = make_quadratic(fig_matrix(), DVector::from_vec(vec![0.3, 0.6])).unwrap();
        let phi = quadratic_phi();
        let x_prev = f.minimizer().clone();
        let x = bregman_prox(&f, &phi, 2.0, &x_prev).unwrap();
        assert!((x - &x_prev).norm() <= 1e-12);
    }

    #[test]
    fn prox_satisfies_geodesic_velocity_condition() {
        // Non-quadratic generator exercises the Newton path.
        let f = make_quadratic(fig_matrix(), DVector::from_vec(vec![0.5, 0.5])).unwrap();
        let phi = quartic_phi();
        let rho = 1.3;
        let x_prev = DVector::from_vec(vec![1.2, 0.9]);
        let x = bregman_prox(&f, &phi, rho, &x_prev).unwrap();
        let resid =
            (phi.gradient(&x) - phi.gradient(&x_prev) + f.gradient(&x) / rho).norm();
        assert!(resid <= 1e-10, "stationarity residual {resid:.3e}");
        // The prox point moves toward the objective's minimizer.
        assert!((&x - f.minimizer()).norm() < (&x_prev - f.minimizer()).norm());
    }

    #[test]
    fn divergence_nonnegative_on_random_pairs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for phi in [quadratic_phi(), quartic_phi()] {
            for _ in 0..100 {
                let x = DVector::from_fn(2, |_, _| rng.random::<f64>() * 4.0 - 2.0);
                let y = DVector::from_fn(2, |_, _| rng.random::<f64>() * 4.0 - 2.0);
                let d = divergence(&phi, &x, &y);
                assert!(d >= -1e-12, "negative divergence {d}");
                if d <= 0.0 {
                    assert!((&x - &y).norm() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn path_csv_has_expected_header() {
        let x = DVector::zeros(2);
        let y = DVector::from_vec(vec![1.0, 1.0]);
        let path = GeodesicPath::straight_line(&x, &y, 3).unwrap();
        let csv = path.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("t,x_1,x_2"));
        assert_eq!(lines.count(), 3);
    }
}
