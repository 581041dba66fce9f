//! Scalar abstraction shared by every numerical routine in the crate.
//!
//! All algorithms are written against [`Scalar`], which is implemented for
//! `f32` and `f64`. Matrix storage and small dense factorizations (SVD, QR)
//! use nalgebra; the large symmetric eigendecompositions that dominate the
//! SCF cost are delegated to faer.

use std::fmt;

use faer::dyn_stack::{MemBuffer, MemStack, StackReq};
use faer::linalg::evd::tridiag::{tridiag_in_place, tridiag_in_place_scratch};
use faer::linalg::householder::{
    apply_block_householder_sequence_on_the_left_in_place_scratch,
    apply_block_householder_sequence_on_the_left_in_place_with_conj,
};
use faer::{Conj, Mat, Par, Side};
use nalgebra::{DMatrix, RealField};
use num_traits::{FromPrimitive, ToPrimitive};

use crate::error::{Error, Result};
use crate::tridiag;

/// Real floating-point type usable throughout the solver.
pub trait Scalar:
    RealField + Copy + FromPrimitive + ToPrimitive + fmt::Debug + fmt::Display + fmt::LowerExp
{
    /// Converts an `f64` literal. Lossy for `f32`.
    fn lit(x: f64) -> Self;

    /// Widens to `f64` for reporting and error payloads.
    fn to_f64_lossy(self) -> f64;

    /// Machine epsilon.
    fn epsilon() -> Self;

    /// Default bound on `‖XᵀX − I‖_F` accepted for an orthonormal basis.
    fn orthonormality_tol() -> Self;

    /// Full eigendecomposition of a symmetric matrix, eigenvalues ascending.
    ///
    /// Only the lower triangle is read.
    fn symmetric_eigen(m: &DMatrix<Self>) -> Result<(Vec<Self>, DMatrix<Self>)>;

    /// Eigenvalues of a symmetric matrix, ascending.
    fn symmetric_eigenvalues(m: &DMatrix<Self>) -> Result<Vec<Self>>;

    /// The `k + 1` largest eigenvalues (descending) and eigenvectors for the
    /// first `k` of them, without forming the full eigenbasis. Requires
    /// `1 ≤ k < n`.
    fn symmetric_eigen_top(m: &DMatrix<Self>, k: usize) -> Result<(Vec<Self>, DMatrix<Self>)>;
}

fn to_faer<T: Copy>(m: &DMatrix<T>) -> Mat<T>
where
    T: faer::traits::ComplexField,
{
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

macro_rules! impl_scalar {
    ($t:ty, $tol:expr) => {
        impl Scalar for $t {
            #[inline]
            fn lit(x: f64) -> Self {
                x as $t
            }

            #[inline]
            fn to_f64_lossy(self) -> f64 {
                self as f64
            }

            #[inline]
            fn epsilon() -> Self {
                <$t>::EPSILON
            }

            #[inline]
            fn orthonormality_tol() -> Self {
                $tol
            }

            fn symmetric_eigen(m: &DMatrix<Self>) -> Result<(Vec<Self>, DMatrix<Self>)> {
                let n = m.nrows();
                let evd = to_faer(m)
                    .self_adjoint_eigen(Side::Lower)
                    .map_err(|_| Error::EigenFailure)?;
                let s = evd.S().column_vector();
                let u = evd.U();
                let values = (0..n).map(|i| s[i]).collect();
                let vectors = DMatrix::from_fn(n, n, |i, j| u[(i, j)]);
                Ok((values, vectors))
            }

            fn symmetric_eigenvalues(m: &DMatrix<Self>) -> Result<Vec<Self>> {
                to_faer(m)
                    .self_adjoint_eigenvalues(Side::Lower)
                    .map_err(|_| Error::EigenFailure)
            }

            fn symmetric_eigen_top(m: &DMatrix<Self>, k: usize) -> Result<(Vec<Self>, DMatrix<Self>)> {
                let n = m.nrows();
                let mut trid = to_faer(m);
                let bs = faer::linalg::qr::no_pivoting::factor::recommended_block_size::<$t>(n, n);
                let mut householder = Mat::<$t>::zeros(bs, n - 1);
                let mut buf = MemBuffer::new(StackReq::any_of(&[
                    tridiag_in_place_scratch::<$t>(n, Par::Seq, Default::default()),
                    apply_block_householder_sequence_on_the_left_in_place_scratch::<$t>(n - 1, bs, k),
                ]));
                tridiag_in_place(
                    trid.as_mut(),
                    householder.as_mut(),
                    Par::Seq,
                    MemStack::new(&mut buf),
                    Default::default(),
                );
                let d: Vec<$t> = (0..n).map(|i| trid[(i, i)]).collect();
                let e: Vec<$t> = (0..n - 1).map(|i| trid[(i + 1, i)]).collect();
                let Some(top) = tridiag::top_eigenpairs(&d, &e, k) else {
                    let (values, vectors) = Self::symmetric_eigen(m)?;
                    let top_values = (0..=k).map(|r| values[n - 1 - r]).collect();
                    return Ok((top_values, DMatrix::from_fn(n, k, |i, j| vectors[(i, n - 1 - j)])));
                };
                let mut v = to_faer(&top.vectors);
                apply_block_householder_sequence_on_the_left_in_place_with_conj(
                    trid.as_ref().submatrix(1, 0, n - 1, n - 1),
                    householder.as_ref(),
                    Conj::No,
                    v.as_mut().subrows_mut(1, n - 1),
                    Par::Seq,
                    MemStack::new(&mut buf),
                );
                Ok((top.values, DMatrix::from_fn(n, k, |i, j| v[(i, j)])))
            }
        }
    };
}

impl_scalar!(f64, 1e-12);
impl_scalar!(f32, 1e-4);
