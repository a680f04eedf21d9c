//! Linear-stability analysis of the three flows on quadratics. Each flow
//! matrix commutes with the Hessian eigenbasis, so the 2n-dimensional system
//! splits into n independent 2x2 blocks, one per Hessian eigenvalue; decay
//! certificates compare the exact spectral abscissa of those blocks against
//! the closed-form rate bound.

use nalgebra::{DMatrix, DVector, Matrix2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::discrete::HyperParams;
use crate::error::{Error, Result};
use crate::linalg;
use crate::ode::OdeKind;

/// Slack for abscissa-vs-bound comparisons in certificates.
pub const CERT_SLACK: f64 = 1e-9;

/// A flow linearized about its fixed point: u' = A (u - u_star), together
/// with the ingredients (kind, constants, Hessian) it was assembled from.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub kind: OdeKind,
    pub a: DMatrix<f64>,
    pub u_star: DVector<f64>,
    pub params: HyperParams,
    pub h: DMatrix<f64>,
}

fn spd_eigen_bounds(h: &DMatrix<f64>) -> Result<(f64, f64)> {
    let (eigs, _) = linalg::sym_eig(h)?;
    let mu = eigs[0];
    let l = eigs[eigs.len() - 1];
    if mu <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "matrix must be positive definite; smallest eigenvalue {mu}"
        )));
    }
    Ok((mu, l))
}

/// Assemble the dense 2n x 2n flow matrix for the given kind and constants.
pub fn build_system(kind: OdeKind, h: &DMatrix<f64>, params: &HyperParams) -> Result<LinearSystem> {
    spd_eigen_bounds(h)?;
    let p = params;
    if p.eta <= 0.0 || p.tau <= 0.0 {
        return Err(Error::InvalidParams(format!(
            "eta and tau must be positive, got eta={}, tau={}",
            p.eta, p.tau
        )));
    }
    if kind == OdeKind::Agm && !(0.0..=1.0).contains(&p.alpha) {
        return Err(Error::InvalidParams(format!(
            "coupling alpha must lie in [0, 1], got {}",
            p.alpha
        )));
    }
    let n = h.nrows();
    let eye = DMatrix::identity(n, n);
    let mut a = DMatrix::zeros(2 * n, 2 * n);
    match kind {
        OdeKind::ProxPoint => {
            let h_inv = linalg::spd_cholesky(h)?.inverse();
            let c = p.alpha / (p.eta * p.tau);
            a.view_mut((0, 0), (n, n)).copy_from(&(&eye * -c));
            a.view_mut((0, n), (n, n))
                .copy_from(&(&eye * (-1.0 / p.eta) + &h_inv * c));
            a.view_mut((n, 0), (n, n)).copy_from(&(&eye / p.tau));
            a.view_mut((n, n), (n, n))
                .copy_from(&(&h_inv * (-1.0 / p.tau)));
        }
        OdeKind::Agm => {
            let c = p.alpha / (p.eta * p.tau);
            a.view_mut((0, 0), (n, n)).copy_from(&(h * -c));
            a.view_mut((0, n), (n, n))
                .copy_from(&(&eye * (c - 1.0 / p.eta)));
            a.view_mut((n, 0), (n, n)).copy_from(&(h / p.tau));
            a.view_mut((n, n), (n, n)).copy_from(&(&eye * (-1.0 / p.tau)));
        }
        OdeKind::HeavyBall => {
            a.view_mut((0, n), (n, n)).copy_from(&eye);
            a.view_mut((n, 0), (n, n)).copy_from(&(h * -p.gamma));
            a.view_mut((n, n), (n, n))
                .copy_from(&(&eye * -(1.0 - p.beta)));
        }
    }
    Ok(LinearSystem {
        kind,
        a,
        u_star: DVector::zeros(2 * n),
        params: *params,
        h: h.clone(),
    })
}

fn base_params(mu: f64, l: f64) -> HyperParams {
    HyperParams {
        mu,
        l,
        eta: 1.0,
        tau: 1.0,
        alpha: 1.0,
        beta: 0.0,
        gamma: 1.0,
        theta: 1.0,
    }
}

/// Proximal flow matrix [[-I, -(1/eta)I + H^-1], [eta I, -eta H^-1]]
/// (the printed form absorbs tau = 1/eta and alpha = 1).
pub fn build_prox_ode_matrix(h: &DMatrix<f64>, eta: f64) -> Result<LinearSystem> {
    let (mu, l) = spd_eigen_bounds(h)?;
    let mut p = base_params(mu, l);
    p.eta = eta;
    p.tau = 1.0 / eta;
    p.alpha = 1.0;
    build_system(OdeKind::ProxPoint, h, &p)
}

/// AGM flow matrix [[-(a/(et))H, (-1/e + a/(et))I], [(1/t)H, -(1/t)I]].
pub fn build_agm_ode_matrix(
    h: &DMatrix<f64>,
    eta: f64,
    tau: f64,
    alpha: f64,
) -> Result<LinearSystem> {
    let (mu, l) = spd_eigen_bounds(h)?;
    let mut p = base_params(mu, l);
    p.eta = eta;
    p.tau = tau;
    p.alpha = alpha;
    build_system(OdeKind::Agm, h, &p)
}

/// Heavy-ball flow matrix [[0, I], [-gamma H, -(1-beta)I]].
pub fn build_heavy_ball_matrix(h: &DMatrix<f64>, beta: f64, gamma: f64) -> Result<LinearSystem> {
    let (mu, l) = spd_eigen_bounds(h)?;
    let mut p = base_params(mu, l);
    p.beta = beta;
    p.gamma = gamma;
    build_system(OdeKind::HeavyBall, h, &p)
}

/// The 2x2 block governing one Hessian eigendirection.
pub fn flow_block(kind: OdeKind, params: &HyperParams, lambda: f64) -> Matrix2<f64> {
    let p = params;
    match kind {
        OdeKind::ProxPoint => {
            let c = p.alpha / (p.eta * p.tau);
            Matrix2::new(
                -c,
                -1.0 / p.eta + c / lambda,
                1.0 / p.tau,
                -1.0 / (p.tau * lambda),
            )
        }
        OdeKind::Agm => {
            let c = p.alpha / (p.eta * p.tau);
            Matrix2::new(-c * lambda, c - 1.0 / p.eta, lambda / p.tau, -1.0 / p.tau)
        }
        OdeKind::HeavyBall => Matrix2::new(0.0, 1.0, -p.gamma * lambda, -(1.0 - p.beta)),
    }
}

/// Closed-form eigenvalues of a real 2x2 matrix (complex pair when the
/// discriminant is negative); the first entry has the larger real part.
pub fn block_eigenvalues(t: &Matrix2<f64>) -> (Complex64, Complex64) {
    let tr = t[(0, 0)] + t[(1, 1)];
    let det = t[(0, 0)] * t[(1, 1)] - t[(0, 1)] * t[(1, 0)];
    let disc = tr * tr - 4.0 * det;
    if disc >= 0.0 {
        let s = disc.sqrt();
        (
            Complex64::new((tr + s) / 2.0, 0.0),
            Complex64::new((tr - s) / 2.0, 0.0),
        )
    } else {
        let s = (-disc).sqrt();
        (
            Complex64::new(tr / 2.0, s / 2.0),
            Complex64::new(tr / 2.0, -s / 2.0),
        )
    }
}

#[derive(Debug, Clone)]
pub struct BlockPair {
    /// Hessian eigenvalue this block belongs to.
    pub lambda: f64,
    pub t: Matrix2<f64>,
    pub nu_plus: Complex64,
    pub nu_minus: Complex64,
}

impl BlockPair {
    pub fn discriminant(&self) -> f64 {
        let tr = self.t[(0, 0)] + self.t[(1, 1)];
        let det = self.t[(0, 0)] * self.t[(1, 1)] - self.t[(0, 1)] * self.t[(1, 0)];
        tr * tr - 4.0 * det
    }
}

/// The flow split along the Hessian eigenbasis: conjugating by
/// blkdiag(U, U) and interleaving coordinates i and n+i turns A into n
/// independent 2x2 blocks, one per eigenvalue of H.
#[derive(Debug, Clone)]
pub struct BlockDecomposition {
    pub kind: OdeKind,
    pub blocks: Vec<BlockPair>,
    /// Orthonormal Hessian eigenvectors, column i paired with blocks[i].
    pub basis: DMatrix<f64>,
}

pub fn block_diagonalize(sys: &LinearSystem) -> Result<BlockDecomposition> {
    let (eigs, basis) = linalg::sym_eig(&sys.h)?;
    let blocks = eigs
        .iter()
        .map(|&lambda| {
            let t = flow_block(sys.kind, &sys.params, lambda);
            let (nu_plus, nu_minus) = block_eigenvalues(&t);
            BlockPair {
                lambda,
                t,
                nu_plus,
                nu_minus,
            }
        })
        .collect();
    Ok(BlockDecomposition {
        kind: sys.kind,
        blocks,
        basis,
    })
}

impl BlockDecomposition {
    /// All 2n flow eigenvalues.
    pub fn spectrum(&self) -> Vec<Complex64> {
        self.blocks
            .iter()
            .flat_map(|b| [b.nu_plus, b.nu_minus])
            .collect()
    }

    /// Largest real part across the spectrum.
    pub fn spectral_abscissa(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.nu_plus.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index of the block attaining the abscissa.
    pub fn worst_block(&self) -> usize {
        let mut best = 0;
        for (i, b) in self.blocks.iter().enumerate() {
            if b.nu_plus.re > self.blocks[best].nu_plus.re {
                best = i;
            }
        }
        best
    }
}

/// Largest real part of A's eigenvalues, via the block structure.
pub fn spectral_abscissa(sys: &LinearSystem) -> Result<f64> {
    Ok(block_diagonalize(sys)?.spectral_abscissa())
}

/// max_j exp(t Re nu_j): the tightest uniform modal envelope at time t.
pub fn decay_envelope(sys: &LinearSystem, t: f64) -> Result<f64> {
    Ok((spectral_abscissa(sys)? * t).exp())
}

/// Guaranteed decay rate for each flow under its default constants.
pub fn rho_bound(kind: OdeKind, mu: f64, l: f64) -> f64 {
    let (sm, sl) = (mu.sqrt(), l.sqrt());
    match kind {
        OdeKind::ProxPoint | OdeKind::HeavyBall => sm / (sm + sl),
        OdeKind::Agm => 0.5 * (mu / l).sqrt(),
    }
}

/// Machine-checkable record that a flow meets its rate bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Certificate {
    pub kind: OdeKind,
    pub mu: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub rho_bound: f64,
    pub abscissa: f64,
    pub pass: bool,
    pub worst_block_lambda: f64,
}

pub fn verify_decay_bound(
    kind: OdeKind,
    h: &DMatrix<f64>,
    params: &HyperParams,
) -> Result<Certificate> {
    let (mu, l) = spd_eigen_bounds(h)?;
    let sys = build_system(kind, h, params)?;
    let dec = block_diagonalize(&sys)?;
    let abscissa = dec.spectral_abscissa();
    let rho = rho_bound(kind, mu, l);
    Ok(Certificate {
        kind,
        mu,
        l,
        rho_bound: rho,
        abscissa,
        pass: abscissa <= -rho + CERT_SLACK,
        worst_block_lambda: dec.blocks[dec.worst_block()].lambda,
    })
}

/// Offset from the fixed point that makes the modal envelope sharp: its
/// trajectory satisfies |u(t) - u*| <= exp(abscissa * t) |u(0) - u*| with
/// equality at t = 0. Real slow mode: the corresponding eigenvector. Complex
/// pair: the solution traces an ellipse in the plane spanned by Re w and
/// Im w; starting on the major axis keeps the rotating factor inside the
/// initial radius.
pub fn envelope_saturating_init(dec: &BlockDecomposition) -> DVector<f64> {
    let b = &dec.blocks[dec.worst_block()];
    let local = if b.nu_plus.im != 0.0 {
        // Complex eigenvector from the first row of (T - nu I).
        let w0 = Complex64::new(-b.t[(0, 1)], 0.0);
        let w1 = Complex64::new(b.t[(0, 0)], 0.0) - b.nu_plus;
        let m = Matrix2::new(w0.re, w0.im, w1.re, w1.im);
        let svd = m.svd(false, true);
        let v = svd.v_t.unwrap().row(0).transpose();
        nalgebra::Vector2::new(
            m[(0, 0)] * v[0] + m[(0, 1)] * v[1],
            m[(1, 0)] * v[0] + m[(1, 1)] * v[1],
        )
    } else {
        let nu = b.nu_plus.re;
        let r1 = nalgebra::Vector2::new(-b.t[(0, 1)], b.t[(0, 0)] - nu);
        let r2 = nalgebra::Vector2::new(b.t[(1, 1)] - nu, -b.t[(1, 0)]);
        let w = if r1.norm() >= r2.norm() { r1 } else { r2 };
        if w.norm() > 0.0 {
            w
        } else {
            nalgebra::Vector2::new(1.0, 0.0)
        }
    };
    let local = local / local.norm();
    let n = dec.basis.nrows();
    let dir = dec.basis.column(dec.worst_block());
    let mut u = DVector::zeros(2 * n);
    u.rows_mut(0, n).copy_from(&(dir * local[0]));
    u.rows_mut(n, n).copy_from(&(dir * local[1]));
    u
}
