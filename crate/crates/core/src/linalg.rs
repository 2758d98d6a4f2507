//! Small dense helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

const EIGEN_MAX_ITER: usize = 10_000;

/// Symmetric eigendecomposition of `(m + m^T) / 2` with eigenvalues sorted
/// ascending and eigenvectors permuted to match.
pub(crate) fn sorted_symmetric_eigen(m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    if n == 0 {
        return Ok((Vec::new(), DMatrix::zeros(0, 0)));
    }
    let sym = symmetrize(m);
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, EIGEN_MAX_ITER)
        .ok_or(Error::EigensolverFailure)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(k));
    }
    Ok((values, vectors))
}

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub(crate) fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Columns of `vectors` whose eigenvalue satisfies `keep`.
pub(crate) fn select_columns(
    values: &[f64],
    vectors: &DMatrix<f64>,
    keep: impl Fn(f64) -> bool,
) -> DMatrix<f64> {
    let cols: Vec<DVector<f64>> = values
        .iter()
        .enumerate()
        .filter(|(_, &v)| keep(v))
        .map(|(k, _)| vectors.column(k).into_owned())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(vectors.nrows(), 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

#[cfg(test)]
/// Block `(i, j)` of size `d x d` from a block matrix.
pub(crate) fn block(m: &DMatrix<f64>, i: usize, j: usize, d: usize) -> DMatrix<f64> {
    m.view((i * d, j * d), (d, d)).into_owned()
}

/// Agent `i`'s `d`-vector from a stacked state.
pub(crate) fn agent(x: &DVector<f64>, i: usize, d: usize) -> DVector<f64> {
    x.rows(i * d, d).into_owned()
}
