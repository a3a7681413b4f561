//! Small dense complex linear algebra used by the subspace estimators.

use nalgebra::DMatrix;

use crate::{Error, Result, C64};

/// Sample covariance of the columns of `z`: `z z^H / ncols`.
pub fn covariance(z: &DMatrix<C64>) -> DMatrix<C64> {
    let n = z.ncols().max(1) as f64;
    (z * z.adjoint()).map(|v| v / n)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues descending and
/// eigenvectors as the matching columns.
pub fn hermitian_eigen(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let herm = (m + m.adjoint()).map(|v| v * 0.5);
    let eig = herm.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = eig.eigenvectors.select_columns(order.iter());
    (values, vectors)
}

/// Total-least-squares solution of `e2 ≈ e1 Ψ` for the rotation operator Ψ.
pub fn tls_rotation(e1: &DMatrix<C64>, e2: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let p = e1.ncols();
    if e2.ncols() != p || e1.nrows() != e2.nrows() || e1.nrows() < p {
        return Err(Error::Dimension("TLS blocks have incompatible shapes".into()));
    }
    let stacked = DMatrix::from_fn(e1.nrows(), 2 * p, |r, c| if c < p { e1[(r, c)] } else { e2[(r, c - p)] });
    let (_, v) = hermitian_eigen(&(stacked.adjoint() * &stacked));
    let v12 = v.view((0, p), (p, p)).into_owned();
    let v22 = v.view((p, p), (p, p)).into_owned();
    let inv = v22
        .try_inverse()
        .ok_or_else(|| Error::Numeric("TLS partition is singular".into()))?;
    Ok(-(v12 * inv))
}

/// Eigenvalues of a general complex square matrix.
pub fn eigenvalues(m: &DMatrix<C64>) -> Result<Vec<C64>> {
    if m.nrows() == 1 {
        return Ok(vec![m[(0, 0)]]);
    }
    m.clone()
        .schur()
        .eigenvalues()
        .map(|v| v.iter().copied().collect())
        .ok_or_else(|| Error::Numeric("rotation operator is defective".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_is_sorted_and_reconstructs() {
        let a = DMatrix::from_fn(4, 3, |r, c| C64::new((r * 3 + c) as f64 % 5.0, (r + c) as f64 * 0.3 - 0.5));
        let r = covariance(&a);
        let (vals, vecs) = hermitian_eigen(&r);
        assert!(vals.windows(2).all(|w| w[0] >= w[1]));
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(4, vals.iter().map(|&v| C64::new(v, 0.0))));
        let back = &vecs * d * vecs.adjoint();
        assert!((back - r).norm() < 1e-10);
        // Rank of a 4x3 product is at most 3.
        assert!(vals[3].abs() < 1e-10);
    }

    #[test]
    fn tls_recovers_exact_rotation() {
        let phases = [0.4, -1.1, 2.0];
        let psi = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(3, phases.iter().map(|&p| C64::from_polar(1.0, p))));
        // Diagonally dominant, hence invertible.
        let t = DMatrix::from_fn(3, 3, |r, c| {
            let re = if r == c { 2.0 } else { 0.3 * (r + 2 * c) as f64 };
            C64::new(re, 0.2 * (r as f64 - c as f64))
        });
        let e1 = DMatrix::from_fn(6, 3, |r, c| C64::from_polar(1.0, 0.37 * (r * (c + 1)) as f64)) * &t;
        let e2 = &e1 * t.clone().try_inverse().unwrap() * &psi * &t;
        let rot = tls_rotation(&e1, &e2).unwrap();
        let mut got: Vec<f64> = eigenvalues(&rot).unwrap().iter().map(|z| z.arg()).collect();
        got.sort_by(f64::total_cmp);
        let mut want = phases.to_vec();
        want.sort_by(f64::total_cmp);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-9, "{got:?} vs {want:?}");
        }
    }
}
