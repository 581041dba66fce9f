//! Dense linear-algebra primitives: symmetric matrices, orthonormal bases,
//! partial symmetric eigendecomposition, small SVDs, the polar orthogonal
//! factor, the trace norm and the sin-Θ subspace distance.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default relative threshold below which singular values count as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// A square matrix whose stored entries are exactly symmetric.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricMatrix<T: Scalar> {
    m: DMatrix<T>,
}

impl<T: Scalar> SymmetricMatrix<T> {
    /// Wraps `m`, rejecting it unless `m[(i, j)] == m[(j, i)]` bit for bit.
    pub fn new(m: DMatrix<T>) -> Result<Self> {
        check_square(&m)?;
        let n = m.nrows();
        for j in 0..n {
            for i in (j + 1)..n {
                if m[(i, j)] != m[(j, i)] {
                    return Err(Error::NotSymmetric);
                }
            }
        }
        Ok(Self { m })
    }

    /// Builds the symmetric part `(M + Mᵀ)/2`. Use this for matrices that are
    /// symmetric only up to rounding, e.g. products such as `U·diag(v)·Uᵀ`.
    pub fn symmetrized(m: DMatrix<T>) -> Result<Self> {
        check_square(&m)?;
        let half = T::lit(0.5);
        let n = m.nrows();
        let mut out = m;
        for j in 0..n {
            for i in (j + 1)..n {
                let v = (out[(i, j)] + out[(j, i)]) * half;
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        Ok(Self { m: out })
    }

    pub fn identity(n: usize) -> Self {
        Self { m: DMatrix::identity(n, n) }
    }

    pub fn zeros(n: usize) -> Self {
        Self { m: DMatrix::zeros(n, n) }
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let n = diag.len();
        let mut m = DMatrix::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        Self { m }
    }

    /// Caller guarantees exact symmetry (elementwise sums and scalings of
    /// symmetric matrices, `P + Pᵀ`, ...).
    pub(crate) fn from_symmetric_unchecked(m: DMatrix<T>) -> Self {
        debug_assert!(m.is_square());
        Self { m }
    }

    pub fn order(&self) -> usize {
        self.m.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<T> {
        &self.m
    }

    pub fn into_inner(self) -> DMatrix<T> {
        self.m
    }

    /// Eigenvalues in nonincreasing order.
    pub fn eigenvalues(&self) -> Result<Vec<T>> {
        let mut vals = T::symmetric_eigenvalues(&self.m)?;
        vals.reverse();
        Ok(vals)
    }

    /// `‖M‖₂ = max |λᵢ|`.
    pub fn spectral_norm(&self) -> Result<T> {
        let vals = T::symmetric_eigenvalues(&self.m)?;
        Ok(vals.iter().fold(T::zero(), |acc, v| acc.max(v.abs())))
    }

    /// Maximum absolute column sum.
    pub fn one_norm(&self) -> T {
        one_norm(&self.m)
    }

    /// `tr(XᵀMX)` for an `n×k` block `X`.
    pub fn quadratic_trace(&self, x: &DMatrix<T>) -> T {
        (&self.m * x).dot(x)
    }

    /// `M + c·I`.
    pub fn shifted(&self, c: T) -> Self {
        let mut m = self.m.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += c;
        }
        Self { m }
    }
}

fn check_square<T: Scalar>(m: &DMatrix<T>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// An `n×k` matrix with orthonormal columns, `1 ≤ k < n`.
#[derive(Clone, Debug, PartialEq)]
pub struct StiefelPoint<T: Scalar> {
    x: DMatrix<T>,
}

impl<T: Scalar> StiefelPoint<T> {
    /// Validates orthonormality against [`Scalar::orthonormality_tol`].
    pub fn new(x: DMatrix<T>) -> Result<Self> {
        Self::with_tolerance(x, T::orthonormality_tol())
    }

    pub fn with_tolerance(x: DMatrix<T>, tol: T) -> Result<Self> {
        check_stiefel_dims(x.nrows(), x.ncols())?;
        let defect = orthonormality_defect(&x);
        if !(defect <= tol) {
            return Err(Error::NotOrthonormal { defect: defect.to_f64_lossy() });
        }
        Ok(Self { x })
    }

    /// Orthonormalizes the columns of `x` by Householder QR, fixing signs so
    /// that `R` has a nonnegative diagonal. Fails if `x` is column-rank
    /// deficient.
    pub fn orthonormalize(x: DMatrix<T>) -> Result<Self> {
        let (n, k) = x.shape();
        check_stiefel_dims(n, k)?;
        let scale = x.norm();
        let qr = x.qr();
        let r = qr.r();
        let mut q = qr.q();
        for j in 0..k {
            let rjj = r[(j, j)];
            if !(rjj.abs() > scale * T::epsilon() * T::lit(n as f64)) {
                return Err(Error::InvalidParameter(
                    "cannot orthonormalize a column-rank-deficient matrix".into(),
                ));
            }
            if rjj < T::zero() {
                q.column_mut(j).neg_mut();
            }
        }
        Ok(Self { x: q })
    }

    /// The first `k` columns of `I_n`.
    pub fn leading_identity(n: usize, k: usize) -> Result<Self> {
        check_stiefel_dims(n, k)?;
        Ok(Self { x: DMatrix::identity(n, k) })
    }

    /// Orthonormalized standard-normal `n×k` draw.
    pub fn random<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<Self> {
        check_stiefel_dims(n, k)?;
        let g = DMatrix::from_fn(n, k, |_, _| T::lit(rng.sample::<f64, _>(StandardNormal)));
        Self::orthonormalize(g)
    }

    pub(crate) fn from_orthonormal_unchecked(x: DMatrix<T>) -> Self {
        Self { x }
    }

    pub fn rows(&self) -> usize {
        self.x.nrows()
    }

    pub fn cols(&self) -> usize {
        self.x.ncols()
    }

    pub fn as_matrix(&self) -> &DMatrix<T> {
        &self.x
    }

    pub fn into_inner(self) -> DMatrix<T> {
        self.x
    }

    pub fn orthonormality_defect(&self) -> T {
        orthonormality_defect(&self.x)
    }

    /// `X·Q` for a `k×k` orthogonal `Q`.
    pub fn rotated(&self, q: &DMatrix<T>) -> Result<Self> {
        if q.shape() != (self.cols(), self.cols()) {
            return Err(Error::DimensionMismatch(format!(
                "rotation must be {k}x{k}, got {}x{}",
                q.nrows(),
                q.ncols(),
                k = self.cols()
            )));
        }
        Ok(Self { x: &self.x * q })
    }
}

fn check_stiefel_dims(n: usize, k: usize) -> Result<()> {
    if k == 0 || k >= n {
        return Err(Error::InvalidSubspaceDim { n, k });
    }
    Ok(())
}

/// `‖XᵀX − I‖_F`.
pub fn orthonormality_defect<T: Scalar>(x: &DMatrix<T>) -> T {
    let k = x.ncols();
    (x.tr_mul(x) - DMatrix::<T>::identity(k, k)).norm()
}

/// Maximum absolute column sum of a (possibly rectangular) matrix.
pub fn one_norm<T: Scalar>(m: &DMatrix<T>) -> T {
    m.column_iter()
        .map(|c| c.iter().fold(T::zero(), |acc, v| acc + v.abs()))
        .fold(T::zero(), |acc, v| acc.max(v))
}

/// Largest singular value of a rectangular matrix.
pub fn spectral_norm<T: Scalar>(m: &DMatrix<T>) -> T {
    if m.is_empty() {
        return T::zero();
    }
    m.clone()
        .singular_values()
        .iter()
        .fold(T::zero(), |acc, &s| acc.max(s))
}

/// The `k` largest eigenpairs of a symmetric matrix.
#[derive(Clone, Debug)]
pub struct SpectrumSlice<T: Scalar> {
    /// `λ_1 ≥ … ≥ λ_k`.
    pub eigenvalues: Vec<T>,
    pub basis: StiefelPoint<T>,
    /// `λ_k − λ_{k+1}`.
    pub gap: T,
}

impl<T: Scalar> SpectrumSlice<T> {
    pub fn eigenvalue_sum(&self) -> T {
        self.eigenvalues.iter().fold(T::zero(), |acc, &v| acc + v)
    }
}

/// Below this order, or when `k` is a large fraction of `n`, the full
/// eigendecomposition is used.
const PARTIAL_EIGEN_MIN_ORDER: usize = 32;

fn uses_partial_eigen(n: usize, k: usize) -> bool {
    n >= PARTIAL_EIGEN_MIN_ORDER && 3 * (k + 1) <= n
}

/// Partial eigendecomposition for the `k` largest eigenvalues.
///
/// Each eigenvector is sign-normalized so that its first entry of largest
/// magnitude is positive. Eigenpairs are ordered by eigenvalue (descending)
/// and, among exactly equal eigenvalues, by the index of that entry. The
/// returned basis therefore depends only on the eigensolver output, which is
/// deterministic for a fixed input.
pub fn sym_eig_topk<T: Scalar>(m: &SymmetricMatrix<T>, k: usize) -> Result<SpectrumSlice<T>> {
    let n = m.order();
    check_stiefel_dims(n, k)?;
    // candidates: (eigenvalue, column) with the k+1 largest values first
    let (values, vectors, candidates): (Vec<T>, DMatrix<T>, Vec<(T, Option<usize>)>) = if uses_partial_eigen(n, k) {
        let (mut values, vectors) = T::symmetric_eigen_top(m.as_matrix(), k)?;
        // λ_{k+1} comes from bisection, the others are Ritz values; keep the order
        values[k] = values[k].min(values[k - 1]);
        let cand = values.iter().enumerate().map(|(j, &v)| (v, (j < k).then_some(j))).collect();
        (values, vectors, cand)
    } else {
        let (values, vectors) = T::symmetric_eigen(m.as_matrix())?;
        let cand = values.iter().enumerate().map(|(j, &v)| (v, Some(j))).collect();
        (values, vectors, cand)
    };
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("eigenvalues"));
    }

    let pivot_of = |j: usize| {
        let mut pivot = 0;
        let mut best = T::zero();
        for (i, v) in vectors.column(j).iter().enumerate() {
            if v.abs() > best {
                best = v.abs();
                pivot = i;
            }
        }
        pivot
    };
    let mut pairs: Vec<(T, usize, Option<usize>)> =
        candidates.iter().map(|&(v, col)| (v, col.map_or(usize::MAX, pivot_of), col)).collect();
    pairs.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.1.cmp(&b.1))
    });

    let mut basis = DMatrix::zeros(n, k);
    for (dst, &(_, pivot, src)) in pairs.iter().take(k).enumerate() {
        let src = src.expect("the k largest eigenpairs carry vectors");
        let sign = if vectors[(pivot, src)] < T::zero() { -T::one() } else { T::one() };
        basis.set_column(dst, &(vectors.column(src) * sign));
    }
    let eigenvalues: Vec<T> = pairs.iter().take(k).map(|p| p.0).collect();
    let gap = (pairs[k - 1].0 - pairs[k].0).max(T::zero());

    let tol = T::orthonormality_tol();
    let basis = if orthonormality_defect(&basis) <= tol * T::lit(0.1) {
        StiefelPoint::from_orthonormal_unchecked(basis)
    } else {
        StiefelPoint::orthonormalize(basis)?
    };
    Ok(SpectrumSlice { eigenvalues, basis, gap })
}

/// SVD of a square matrix with singular values sorted nonincreasing.
#[derive(Clone, Debug)]
pub struct ThinSvd<T: Scalar> {
    pub u: DMatrix<T>,
    pub singular_values: Vec<T>,
    pub v: DMatrix<T>,
}

impl<T: Scalar> ThinSvd<T> {
    pub fn reconstruct(&self) -> DMatrix<T> {
        let k = self.singular_values.len();
        let mut us = self.u.clone();
        for j in 0..k {
            us.column_mut(j).scale_mut(self.singular_values[j]);
        }
        us * self.v.transpose()
    }
}

pub fn thin_svd<T: Scalar>(s: &DMatrix<T>) -> Result<ThinSvd<T>> {
    check_square(s)?;
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("svd input"));
    }
    let k = s.nrows();
    let svd = s.clone().svd(true, true);
    let u_raw = svd.u.expect("u requested");
    let v_raw = svd.v_t.expect("v requested").transpose();
    let sv = svd.singular_values;

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| sv[b].partial_cmp(&sv[a]).unwrap_or(std::cmp::Ordering::Equal));
    let mut u = DMatrix::zeros(k, k);
    let mut v = DMatrix::zeros(k, k);
    let mut singular_values = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        u.set_column(dst, &u_raw.column(src));
        v.set_column(dst, &v_raw.column(src));
        singular_values.push(sv[src]);
    }
    Ok(ThinSvd { u, singular_values, v })
}

/// Orthogonal maximizer of `tr(QᵀS)` together with the numerical rank of `S`.
#[derive(Clone, Debug)]
pub struct PolarFactor<T: Scalar> {
    pub q: DMatrix<T>,
    pub rank: usize,
}

/// Computes `Q = U_r V_rᵀ + U_⊥ V_⊥ᵀ` from the SVD `S = UΣVᵀ`, where `r`
/// counts singular values above `rank_tol·σ_1`.
///
/// The first term is the unique subunitary polar factor of `S`. For the
/// null-space term the bases `U_⊥`, `V_⊥` are paired so that `U_⊥V_⊥ᵀ` is the
/// orthogonal map between the two null spaces closest to the identity; this
/// makes `Q` independent of the SVD's choice of singular vectors. A zero `S`
/// yields `Q = I`, `r = 0`.
pub fn polar_orthogonal_factor<T: Scalar>(s: &DMatrix<T>, rank_tol: T) -> Result<PolarFactor<T>> {
    if !(rank_tol > T::zero()) {
        return Err(Error::InvalidParameter("rank_tol must be positive".into()));
    }
    let k = s.nrows();
    let svd = thin_svd(s)?;
    let sigma1 = svd.singular_values.first().copied().unwrap_or_else(T::zero);
    if sigma1 <= T::zero() {
        return Ok(PolarFactor { q: DMatrix::identity(k, k), rank: 0 });
    }
    let threshold = rank_tol * sigma1;
    let rank = svd.singular_values.iter().filter(|&&x| x > threshold).count();

    let u_r = svd.u.columns(0, rank);
    let v_r = svd.v.columns(0, rank);
    let mut q = u_r * v_r.transpose();
    if rank < k {
        let u_perp = svd.u.columns(rank, k - rank);
        let v_perp = svd.v.columns(rank, k - rank);
        let align = thin_svd(&u_perp.tr_mul(&v_perp))?;
        let w = &align.u * align.v.transpose();
        q += u_perp * w * v_perp.transpose();
    }
    Ok(PolarFactor { q, rank })
}

/// Sum of singular values.
pub fn trace_norm<T: Scalar>(s: &DMatrix<T>) -> T {
    if s.is_empty() {
        return T::zero();
    }
    s.clone().singular_values().iter().fold(T::zero(), |acc, &v| acc + v)
}

/// `‖sin Θ(R(X), R(Y))‖₂`, the sine of the largest principal angle.
///
/// Computed as `σ_max((I − XXᵀ)Y)`, which equals `sqrt(1 − σ_min(XᵀY)²)` but
/// keeps full relative accuracy for nearly equal subspaces.
pub fn sin_theta_distance<T: Scalar>(x: &StiefelPoint<T>, y: &StiefelPoint<T>) -> Result<T> {
    if x.rows() != y.rows() || x.cols() != y.cols() {
        return Err(Error::DimensionMismatch(format!(
            "sin-theta distance needs equal shapes, got {}x{} and {}x{}",
            x.rows(),
            x.cols(),
            y.rows(),
            y.cols()
        )));
    }
    let xm = x.as_matrix();
    let ym = y.as_matrix();
    let residual = ym - xm * xm.tr_mul(ym);
    Ok(spectral_norm(&residual).min(T::one()))
}
