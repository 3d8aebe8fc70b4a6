//! Dense factorizations and the generalized symmetric eigenproblem.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative asymmetry ‖A − Aᵀ‖_F / ‖A‖_F.
pub fn asymmetry(a: &DMatrix<f64>) -> f64 {
    let n = a.norm();
    if n == 0.0 {
        return 0.0;
    }
    (a - a.transpose()).norm() / n
}

/// Cholesky factor of a symmetric positive definite matrix.
#[derive(Clone, Debug)]
pub struct SpdFactor {
    chol: Cholesky<f64, Dyn>,
    dim: usize,
}

impl SpdFactor {
    pub fn new(a: &DMatrix<f64>, name: &str) -> Result<Self> {
        let dim = a.nrows();
        let chol = Cholesky::new(a.clone())
            .ok_or_else(|| Error::NotPositiveDefinite(name.to_string()))?;
        // Cholesky succeeds on numerically singular matrices with tiny pivots.
        let l = chol.l();
        let diag: Vec<f64> = (0..dim).map(|i| l[(i, i)]).collect();
        let max = diag.iter().cloned().fold(0.0, f64::max);
        let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
        if dim > 0 && (min <= 0.0 || min / max < 1e-7) {
            return Err(Error::Singular(format!(
                "{name}: Cholesky pivot ratio {:.3e}",
                min / max
            )));
        }
        Ok(Self { chol, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(b)
    }

    pub fn solve_mat(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol.solve(b)
    }

    pub fn l(&self) -> DMatrix<f64> {
        self.chol.l()
    }
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(a: &DMatrix<f64>) -> f64 {
    let sym = (a + a.transpose()) * 0.5;
    SymmetricEigen::new(sym)
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// 2-norm condition number of a symmetric matrix.
pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    let sym = (a + a.transpose()) * 0.5;
    let ev = SymmetricEigen::new(sym).eigenvalues;
    let max = ev.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let min = ev.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Solves `K φ = ω² M φ` for symmetric `K` and SPD `M`. Returns ascending
/// `ω²` and mass-normalized eigenvectors as columns.
pub fn generalized_symmetric_eigen(
    k: &DMatrix<f64>,
    m: &DMatrix<f64>,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = k.nrows();
    if k.ncols() != n || m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: "generalized eigenproblem",
            expected: n,
            got: m.nrows(),
        });
    }
    let l = Cholesky::new(m.clone())
        .ok_or_else(|| Error::NotPositiveDefinite("mass matrix".into()))?
        .l();
    let linv = l
        .clone()
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .ok_or_else(|| Error::Singular("mass Cholesky factor".into()))?;
    let mut a = &linv * k * linv.transpose();
    a = (&a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(a);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let q = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    let mut phi = linv.transpose() * q;
    // Sign convention: largest-magnitude component positive.
    for mut col in phi.column_iter_mut() {
        let (imax, _) = col
            .iter()
            .enumerate()
            .fold((0, 0.0), |acc, (i, v)| if v.abs() > acc.1 { (i, v.abs()) } else { acc });
        if col[imax] < 0.0 {
            col.neg_mut();
        }
    }
    Ok((vals, phi))
}

/// Dense LU solve with a singularity check.
pub fn lu_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    a.clone().lu().solve(b)
}
