//! Linear subspaces of `R^d` held as orthonormal bases.
//!
//! Bases are not unique, so equality is decided on orthogonal projectors.
//! Sums and intersections are both read off symmetric eigendecompositions of
//! projector combinations with the same absolute threshold, which keeps
//! `dim(a) + dim(b) = dim(a + b) + dim(a ∩ b)` exact even near the threshold.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{select_columns, sorted_symmetric_eigen};
use crate::tolerance::{eig_scale, RANK_TOL};

#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    /// `ambient x r`, orthonormal columns.
    basis: DMatrix<f64>,
}

impl Subspace {
    /// `{0}` in `R^ambient`.
    pub fn zero(ambient: usize) -> Self {
        Self {
            basis: DMatrix::zeros(ambient, 0),
        }
    }

    /// All of `R^ambient`.
    pub fn full(ambient: usize) -> Self {
        Self {
            basis: DMatrix::identity(ambient, ambient),
        }
    }

    /// Span of the columns of `vectors`.
    pub fn span(vectors: &DMatrix<f64>) -> Result<Self> {
        let ambient = vectors.nrows();
        if vectors.ncols() == 0 {
            return Ok(Self::zero(ambient));
        }
        let gram = vectors * vectors.transpose();
        let (values, vecs) = sorted_symmetric_eigen(&gram)?;
        let top = values.last().copied().unwrap_or(0.0);
        let cut = RANK_TOL * eig_scale(top);
        Ok(Self {
            basis: select_columns(&values, &vecs, |v| v > cut),
        })
    }

    pub fn from_vectors(vectors: &[DVector<f64>]) -> Result<Self> {
        match vectors.first() {
            None => Err(Error::DimensionMismatch { expected: 1, found: 0 }),
            Some(first) => {
                if let Some(bad) = vectors.iter().find(|v| v.len() != first.len()) {
                    return Err(Error::AmbientMismatch(first.len(), bad.len()));
                }
                Self::span(&DMatrix::from_columns(vectors))
            }
        }
    }

    /// Wraps a basis the caller guarantees is orthonormal.
    pub(crate) fn from_orthonormal(basis: DMatrix<f64>) -> Self {
        Self { basis }
    }

    /// Nullspace of a symmetric PSD matrix: eigenvectors whose eigenvalue is
    /// at most `rank_tol * max(1, max |eigenvalue|)`.
    pub fn nullspace_of(m: &DMatrix<f64>, rank_tol: f64) -> Result<Self> {
        let (values, vecs) = sorted_symmetric_eigen(m)?;
        let scale = eig_scale(values.iter().fold(0.0_f64, |a, v| a.max(v.abs())));
        Ok(Self {
            basis: select_columns(&values, &vecs, |v| v <= rank_tol * scale),
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dimension(&self) -> usize {
        self.basis.ncols()
    }

    pub fn is_zero(&self) -> bool {
        self.dimension() == 0
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn projector(&self) -> DMatrix<f64> {
        &self.basis * self.basis.transpose()
    }

    fn check_ambient(&self, other: &Subspace) -> Result<()> {
        if self.ambient_dim() != other.ambient_dim() {
            return Err(Error::AmbientMismatch(self.ambient_dim(), other.ambient_dim()));
        }
        Ok(())
    }

    /// `self + other`: range of `P_a + P_b`.
    pub fn sum(&self, other: &Subspace) -> Result<Self> {
        self.check_ambient(other)?;
        if other.is_zero() {
            return Ok(self.clone());
        }
        if self.is_zero() {
            return Ok(other.clone());
        }
        let m = self.projector() + other.projector();
        let (values, vecs) = sorted_symmetric_eigen(&m)?;
        Ok(Self {
            basis: select_columns(&values, &vecs, |v| v > RANK_TOL),
        })
    }

    /// `self ∩ other`: common nullspace of `I - P_a` and `I - P_b`, i.e. the
    /// nullspace of their stacked Gram matrix `(I - P_a) + (I - P_b)`.
    pub fn intersect(&self, other: &Subspace) -> Result<Self> {
        self.check_ambient(other)?;
        if self.is_zero() || other.is_zero() {
            return Ok(Self::zero(self.ambient_dim()));
        }
        let d = self.ambient_dim();
        let m = DMatrix::<f64>::identity(d, d) * 2.0 - self.projector() - other.projector();
        let (values, vecs) = sorted_symmetric_eigen(&m)?;
        Ok(Self {
            basis: select_columns(&values, &vecs, |v| v <= RANK_TOL),
        })
    }

    /// `‖v - P v‖ <= tol * max(‖v‖, 1)`.
    pub fn contains(&self, v: &DVector<f64>, tol: f64) -> Result<bool> {
        Ok(self.residual(v)? <= tol * v.norm().max(1.0))
    }

    /// Distance from `v` to the subspace.
    pub fn residual(&self, v: &DVector<f64>) -> Result<f64> {
        if v.len() != self.ambient_dim() {
            return Err(Error::AmbientMismatch(self.ambient_dim(), v.len()));
        }
        let coords = self.basis.transpose() * v;
        Ok((v - &self.basis * coords).norm())
    }

    /// Projector distance `max |P_a - P_b|`.
    pub fn distance(&self, other: &Subspace) -> Result<f64> {
        self.check_ambient(other)?;
        let diff = self.projector() - other.projector();
        Ok(diff.iter().fold(0.0_f64, |a, x| a.max(x.abs())))
    }

    pub fn approx_eq(&self, other: &Subspace, tol: f64) -> bool {
        self.dimension() == other.dimension()
            && self.distance(other).map(|d| d <= tol).unwrap_or(false)
    }
}

/// Number of basis vectors of `s`.
pub fn dimension(s: &Subspace) -> usize {
    s.dimension()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    fn e(d: usize, i: usize) -> DVector<f64> {
        let mut v = DVector::zeros(d);
        v[i] = 1.0;
        v
    }

    fn span_of(vs: &[DVector<f64>]) -> Subspace {
        Subspace::from_vectors(vs).unwrap()
    }

    fn diag(entries: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_row_slice(entries))
    }

    #[test]
    fn nullspaces_of_diagonal_weights() {
        let n12 = Subspace::nullspace_of(&diag(&[0.0, 1.0, 1.0]), RANK_TOL).unwrap();
        assert!(n12.approx_eq(&span_of(&[e(3, 0)]), 1e-12));
        let n13 = Subspace::nullspace_of(&diag(&[1.0, 0.0, 0.0]), RANK_TOL).unwrap();
        assert!(n13.approx_eq(&span_of(&[e(3, 1), e(3, 2)]), 1e-12));
        let id = Subspace::nullspace_of(&DMatrix::identity(3, 3), RANK_TOL).unwrap();
        assert!(id.is_zero());
    }

    #[test]
    fn sums() {
        let a = span_of(&[e(3, 1)]);
        let b = span_of(&[e(3, 1), e(3, 2)]);
        assert!(a.sum(&b).unwrap().approx_eq(&b, 1e-12));
        assert!(a.sum(&Subspace::zero(3)).unwrap().approx_eq(&a, 0.0));
        let plane = span_of(&[e(2, 0)]).sum(&span_of(&[e(2, 1)])).unwrap();
        assert_eq!(plane.dimension(), 2);
    }

    #[test]
    fn intersections() {
        let x = span_of(&[e(3, 0)]);
        let yz = span_of(&[e(3, 1), e(3, 2)]);
        assert!(x.intersect(&yz).unwrap().is_zero());
        let y = span_of(&[e(3, 1)]);
        assert!(yz.intersect(&y).unwrap().approx_eq(&y, 1e-12));
        assert!(yz.intersect(&yz).unwrap().approx_eq(&yz, 1e-12));
        // Two planes in R^3 meet in a line.
        let p1 = span_of(&[dvector![1.0, 1.0, 0.0], dvector![0.0, 0.0, 1.0]]);
        let p2 = span_of(&[dvector![1.0, -1.0, 0.0], dvector![0.0, 0.0, 1.0]]);
        let line = p1.intersect(&p2).unwrap();
        assert!(line.approx_eq(&span_of(&[e(3, 2)]), 1e-10));
    }

    #[test]
    fn dimensions() {
        assert_eq!(dimension(&Subspace::zero(4)), 0);
        assert_eq!(dimension(&Subspace::full(4)), 4);
        assert_eq!(span_of(&[dvector![1.0, 2.0], dvector![2.0, 4.0]]).dimension(), 1);
    }

    #[test]
    fn membership() {
        let y = span_of(&[e(3, 1)]);
        assert!(y.contains(&DVector::zeros(3), 1e-12).unwrap());
        assert!(!y.contains(&e(3, 0), 1e-6).unwrap());
        assert!(y.contains(&dvector![0.0, -3.5, 0.0], 1e-12).unwrap());
        assert!(matches!(
            y.contains(&DVector::zeros(2), 1e-6),
            Err(Error::AmbientMismatch(3, 2))
        ));
    }

    #[test]
    fn ambient_mismatch() {
        let a = Subspace::full(2);
        let b = Subspace::full(3);
        assert_eq!(a.sum(&b).unwrap_err(), Error::AmbientMismatch(2, 3));
        assert_eq!(a.intersect(&b).unwrap_err(), Error::AmbientMismatch(2, 3));
    }

    #[test]
    fn bases_are_orthonormal() {
        let s = span_of(&[dvector![1.0, 2.0, 3.0, 0.0], dvector![0.5, -1.0, 0.0, 2.0]]);
        let gram = s.basis().transpose() * s.basis();
        assert!((gram - DMatrix::<f64>::identity(2, 2)).amax() < 1e-10);
    }
}
