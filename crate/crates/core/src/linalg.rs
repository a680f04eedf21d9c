//! Small dense linear-algebra helpers shared by the other modules.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Relative asymmetry allowed before a matrix is rejected as "not symmetric".
pub const SYMMETRY_TOL: f64 = 1e-12;

pub fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::InvalidInput(format!(
            "expected square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let scale = m.amax().max(1.0);
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL * scale {
                return Err(Error::InvalidInput(format!(
                    "matrix is not symmetric at ({i},{j}): {} vs {}",
                    m[(i, j)],
                    m[(j, i)]
                )));
            }
        }
    }
    Ok(())
}

/// Eigenvalues (ascending) and orthonormal eigenvectors of a symmetric matrix.
/// Columns of the returned matrix are ordered to match the eigenvalues.
pub fn sym_eig(m: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    check_symmetric(m)?;
    let eig = m.clone().symmetric_eigen();
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut values = DVector::zeros(n);
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        values[dst] = eig.eigenvalues[src];
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok((values, vectors))
}

/// Cholesky factorization of a symmetric positive definite matrix.
pub fn spd_cholesky(m: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    check_symmetric(m)?;
    Cholesky::new(m.clone())
        .ok_or_else(|| Error::InvalidInput("matrix is not positive definite".into()))
}

/// Solve a general square system by LU with partial pivoting.
pub fn lu_solve(m: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    m.clone()
        .lu()
        .solve(rhs)
        .ok_or_else(|| Error::InvalidInput("singular linear system".into()))
}

/// Random symmetric positive definite matrix with prescribed extreme
/// eigenvalues `mu` and `l`; interior eigenvalues are log-uniform in
/// `[mu, l]` and the eigenbasis is a Haar-ish random orthogonal matrix
/// obtained from the QR factorization of a Gaussian sample.
pub fn random_spd(n: usize, mu: f64, l: f64, rng: &mut ChaCha8Rng) -> Result<DMatrix<f64>> {
    if n == 0 || mu <= 0.0 || l < mu {
        return Err(Error::InvalidParams(format!(
            "random_spd needs n >= 1 and 0 < mu <= l, got n={n}, mu={mu}, l={l}"
        )));
    }
    let mut eigs = vec![0.0; n];
    eigs[0] = mu;
    if n > 1 {
        eigs[n - 1] = l;
    }
    for e in eigs.iter_mut().take(n.saturating_sub(1)).skip(1) {
        let t: f64 = rng.random();
        *e = mu * (l / mu).powf(t);
    }
    let q = random_orthogonal(n, rng);
    let lambda = DMatrix::from_diagonal(&DVector::from_vec(eigs));
    let h = &q * lambda * q.transpose();
    // Symmetrize away rounding from the triple product.
    Ok((&h + h.transpose()) * 0.5)
}

pub fn random_orthogonal(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let gauss = DMatrix::from_fn(n, n, |_, _| standard_normal(rng));
    let qr = gauss.qr();
    let r_diag: Vec<f64> = (0..n).map(|i| qr.r()[(i, i)]).collect();
    let mut q = qr.q();
    // Fix column signs so the distribution does not depend on QR conventions.
    for (j, d) in r_diag.iter().enumerate() {
        if *d < 0.0 {
            for i in 0..n {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; two uniforms per call keeps the stream simple to reason about.
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn sym_eig_orders_eigenvalues() {
        let h = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let (vals, vecs) = sym_eig(&h).unwrap();
        let expected_lo = (5.0 - 5.0_f64.sqrt()) / 2.0;
        let expected_hi = (5.0 + 5.0_f64.sqrt()) / 2.0;
        assert!((vals[0] - expected_lo).abs() < 1e-12, "low eigenvalue {}", vals[0]);
        assert!((vals[1] - expected_hi).abs() < 1e-12, "high eigenvalue {}", vals[1]);
        let recon = &vecs * DMatrix::from_diagonal(&vals) * vecs.transpose();
        assert!((recon - h).amax() < 1e-12);
    }

    #[test]
    fn random_spd_hits_requested_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = random_spd(6, 0.5, 50.0, &mut rng).unwrap();
        let (vals, _) = sym_eig(&h).unwrap();
        assert!((vals[0] - 0.5).abs() < 1e-9, "mu came out as {}", vals[0]);
        assert!((vals[5] - 50.0).abs() < 1e-8, "L came out as {}", vals[5]);
    }

    #[test]
    fn check_symmetric_rejects_asymmetry() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0 + 1e-6, 1.0]);
        assert!(check_symmetric(&m).is_err());
    }
}
