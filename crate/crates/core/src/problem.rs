//! The θ-trace-ratio problem
//!
//! ```text
//!   maximize  f_θ(X) = tr(XᵀAX + XᵀD) / [tr(XᵀBX)]^θ   over  XᵀX = I_k
//! ```
//!
//! and every quantity attached to it: the objective split `f_θ = g_θ + h_θ`,
//! the NEPv matrix `E(X)`, the normalized NEPv residual, first-order and
//! necessary-condition certificates, and the terms of the monotonicity
//! estimate that drives the SCF iteration.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{self, StiefelPoint, SymmetricMatrix, DEFAULT_RANK_TOL};
use crate::scalar::Scalar;

/// `tr(XᵀBX)` below this is treated as a violated rank assumption.
pub const DENOMINATOR_GUARD: f64 = 1e-14;

/// Relative tolerance used for the PSD test on `B`.
pub const PSD_TOL: f64 = 1e-10;

/// Which norms normalize the NEPv residual.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ResidualNorm {
    #[default]
    Spectral,
    One,
}

#[derive(Clone, Copy, Debug)]
struct Norms<T> {
    a: T,
    b: T,
    d: T,
}

/// Problem data `(A, B, D, θ, k)`. Immutable once built.
#[derive(Clone, Debug)]
pub struct TraceRatioProblem<T: Scalar> {
    a: SymmetricMatrix<T>,
    b: SymmetricMatrix<T>,
    d: DMatrix<T>,
    theta: T,
    k: usize,
    d_is_zero: bool,
    spectral: Norms<T>,
    one: Norms<T>,
}

impl<T: Scalar> TraceRatioProblem<T> {
    /// Validates dimensions, `θ ∈ [0, 1]`, `B ⪰ 0` and `rank(B) > n − k`.
    pub fn new(
        a: SymmetricMatrix<T>,
        b: SymmetricMatrix<T>,
        d: DMatrix<T>,
        theta: T,
        k: usize,
    ) -> Result<Self> {
        let n = a.order();
        if b.order() != n || d.nrows() != n || d.ncols() != k {
            return Err(Error::DimensionMismatch(format!(
                "A is {n}x{n}, B is {m}x{m}, D is {}x{}, k = {k}",
                d.nrows(),
                d.ncols(),
                m = b.order()
            )));
        }
        if k == 0 || k >= n {
            return Err(Error::InvalidSubspaceDim { n, k });
        }
        check_theta(theta)?;
        if a.as_matrix().iter().chain(b.as_matrix().iter()).chain(d.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("problem data"));
        }

        let b_eigs = b.eigenvalues()?;
        let b_max = b_eigs[0];
        let b_min = b_eigs[n - 1];
        let b_norm = b_max.abs().max(b_min.abs());
        if b_min < -T::lit(PSD_TOL) * b_norm {
            return Err(Error::NotPositiveSemidefinite { min_eig: b_min.to_f64_lossy() });
        }
        let rank_floor = T::lit(DEFAULT_RANK_TOL) * b_max;
        let rank = if b_max > T::zero() { b_eigs.iter().filter(|&&v| v > rank_floor).count() } else { 0 };
        if rank <= n - k {
            return Err(Error::RankDeficientB { rank, bound: n - k });
        }

        let spectral = Norms { a: a.spectral_norm()?, b: b_norm, d: linalg::spectral_norm(&d) };
        let one = Norms { a: a.one_norm(), b: b.one_norm(), d: linalg::one_norm(&d) };
        let d_is_zero = d.iter().all(|v| *v == T::zero());
        Ok(Self { a, b, d, theta, k, d_is_zero, spectral, one })
    }

    /// Same data with a different exponent.
    pub fn with_theta(&self, theta: T) -> Result<Self> {
        check_theta(theta)?;
        let mut p = self.clone();
        p.theta = theta;
        Ok(p)
    }

    pub fn a(&self) -> &SymmetricMatrix<T> {
        &self.a
    }

    pub fn b(&self) -> &SymmetricMatrix<T> {
        &self.b
    }

    pub fn d(&self) -> &DMatrix<T> {
        &self.d
    }

    pub fn theta(&self) -> T {
        self.theta
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.a.order()
    }

    pub fn d_is_zero(&self) -> bool {
        self.d_is_zero
    }

    fn check_point(&self, x: &StiefelPoint<T>) -> Result<()> {
        if x.rows() != self.n() || x.cols() != self.k {
            return Err(Error::DimensionMismatch(format!(
                "X is {}x{}, problem expects {}x{}",
                x.rows(),
                x.cols(),
                self.n(),
                self.k
            )));
        }
        Ok(())
    }

    /// `tr(XᵀAX) + tr(XᵀD)`.
    pub fn numerator(&self, x: &StiefelPoint<T>) -> Result<T> {
        self.check_point(x)?;
        let xm = x.as_matrix();
        Ok(self.a.quadratic_trace(xm) + xm.dot(&self.d))
    }

    pub fn evaluate(&self, x: &StiefelPoint<T>) -> Result<ObjectiveBreakdown<T>> {
        self.check_point(x)?;
        let xm = x.as_matrix();
        let trace_a = self.a.quadratic_trace(xm);
        let trace_d = xm.dot(&self.d);
        let denominator = self.b.quadratic_trace(xm);
        let scale = self.denominator_power(denominator)?;
        let numerator = trace_a + trace_d;
        Ok(ObjectiveBreakdown {
            g_theta: trace_a / scale,
            h_theta: trace_d / scale,
            f_theta: numerator / scale,
            numerator,
            denominator,
        })
    }

    fn denominator_power(&self, denominator: T) -> Result<T> {
        if !denominator.is_finite() {
            return Err(Error::NonFinite("tr(X^T B X)"));
        }
        if denominator < T::lit(DENOMINATOR_GUARD) {
            return Err(Error::DegenerateDenominator(denominator.to_f64_lossy()));
        }
        Ok(denominator.powf(self.theta))
    }

    /// `E(X) = 2/[tr(XᵀBX)]^θ · [A + (DXᵀ + XDᵀ)/2 − θ·f₁(X)·B]`.
    ///
    /// The `B` term always uses the θ = 1 ratio `f₁`, whatever `θ` is.
    pub fn build_e(&self, x: &StiefelPoint<T>) -> Result<SymmetricMatrix<T>> {
        let obj = self.evaluate(x)?;
        Ok(self.build_e_from(x, &obj))
    }

    fn build_e_from(&self, x: &StiefelPoint<T>, obj: &ObjectiveBreakdown<T>) -> SymmetricMatrix<T> {
        let two = T::lit(2.0);
        let scale = two / obj.denominator.powf(self.theta);
        let f1 = obj.f1();
        let mut e = self.a.as_matrix() * scale;
        if self.theta != T::zero() {
            e -= self.b.as_matrix() * (scale * self.theta * f1);
        }
        if !self.d_is_zero {
            let p = &self.d * x.as_matrix().transpose();
            e += (&p + p.transpose()) * (scale / two);
        }
        SymmetricMatrix::from_symmetric_unchecked(e)
    }

    fn residual_denominator(&self, f1: T, mode: ResidualNorm) -> T {
        let norms = match mode {
            ResidualNorm::Spectral => self.spectral,
            ResidualNorm::One => self.one,
        };
        norms.a + self.theta * f1.abs() * norms.b + norms.d
    }

    /// Normalized NEPv residual
    ///
    /// ```text
    ///   [tr(XᵀBX)]^θ / (2√k) · ‖E(X)X − X(XᵀE(X)X)‖_F / (‖A‖ + θ|f₁(X)|‖B‖ + ‖D‖)
    /// ```
    pub fn nepv_residual(&self, x: &StiefelPoint<T>, mode: ResidualNorm) -> Result<T> {
        let obj = self.evaluate(x)?;
        let e = self.build_e_from(x, &obj);
        Ok(self.residual_with(x, &e, &obj, mode))
    }

    pub(crate) fn residual_with(
        &self,
        x: &StiefelPoint<T>,
        e: &SymmetricMatrix<T>,
        obj: &ObjectiveBreakdown<T>,
        mode: ResidualNorm,
    ) -> T {
        let xm = x.as_matrix();
        let ex = e.as_matrix() * xm;
        let lambda = xm.tr_mul(&ex);
        let raw = (ex - xm * lambda).norm();
        let prefactor = obj.denominator.powf(self.theta) / (T::lit(2.0) * T::lit(self.k as f64).sqrt());
        let norm_sum = self.residual_denominator(obj.f1(), mode);
        if norm_sum > T::zero() {
            prefactor * raw / norm_sum
        } else {
            prefactor * raw
        }
    }

    /// Objective, `E(X)` and the normalized residual in one pass.
    pub(crate) fn state_at(&self, x: &StiefelPoint<T>, mode: ResidualNorm) -> Result<PointState<T>> {
        let objective = self.evaluate(x)?;
        let e = self.build_e_from(x, &objective);
        let residual = self.residual_with(x, &e, &objective, mode);
        Ok(PointState { objective, e, residual })
    }

    /// First-order and necessary-condition diagnostics at `X`.
    pub fn certify(&self, x: &StiefelPoint<T>, mode: ResidualNorm) -> Result<Certificate<T>> {
        let state = self.state_at(x, mode)?;
        self.certify_with(x, &state)
    }

    pub(crate) fn certify_with(&self, x: &StiefelPoint<T>, state: &PointState<T>) -> Result<Certificate<T>> {
        let xm = x.as_matrix();
        let xtd = xm.tr_mul(&self.d);
        let xtd_symmetry_defect = (&xtd - xtd.transpose()).norm();
        let xtd_min_eigenvalue = if self.d_is_zero {
            T::zero()
        } else {
            let sym = SymmetricMatrix::symmetrized(xtd)?;
            *sym.eigenvalues()?.last().expect("k >= 1")
        };
        let slice = linalg::sym_eig_topk(&state.e, self.k)?;
        let topk_defect = slice.eigenvalue_sum() - state.e.quadratic_trace(xm);
        let cert = Certificate {
            nepv_residual: state.residual,
            xtd_symmetry_defect,
            xtd_min_eigenvalue,
            topk_defect,
            eigen_gap: slice.gap,
        };
        if !cert.is_finite() {
            return Err(Error::NonFinite("certificate"));
        }
        Ok(cert)
    }

    /// Quantities of the monotonicity estimate for a pair `(X, X̃)`.
    pub fn lemma_mono_quantities(
        &self,
        x: &StiefelPoint<T>,
        x_tilde: &StiefelPoint<T>,
    ) -> Result<LemmaMonoQuantities<T>> {
        self.check_point(x)?;
        self.check_point(x_tilde)?;
        let xm = x.as_matrix();
        let xt = x_tilde.as_matrix();
        let alpha = self.a.quadratic_trace(xm);
        let delta = xm.dot(&self.d);
        let beta = self.b.quadratic_trace(xm);
        let beta_tilde = self.b.quadratic_trace(xt);
        let theta = self.theta;
        let gamma = if theta == T::zero() || theta == T::one() {
            T::zero()
        } else {
            let bracket = (T::one() - theta) * beta + theta * beta_tilde
                - beta.powf(T::one() - theta) * beta_tilde.powf(theta);
            (alpha + delta) / (beta_tilde.powf(theta) * beta) * bracket
        };

        let obj = self.evaluate(x)?;
        let e = self.build_e_from(x, &obj);
        let hypothesis_margin = e.quadratic_trace(xt) - e.quadratic_trace(xm);

        // tr(X̃ᵀ D Xᵀ X̃) = tr((X̃ᵀD)(XᵀX̃))
        let cross = xt.tr_mul(&self.d).dot(&xm.tr_mul(xt).transpose());
        let scale_tilde = self.denominator_power(beta_tilde)?;
        let rhs = self.a.quadratic_trace(xt) / scale_tilde + cross / scale_tilde;
        Ok(LemmaMonoQuantities {
            alpha,
            delta,
            beta,
            beta_tilde,
            gamma,
            hypothesis_margin,
            lhs: obj.f_theta + gamma,
            rhs,
        })
    }
}

fn check_theta<T: Scalar>(theta: T) -> Result<()> {
    if !(theta >= T::zero() && theta <= T::one()) {
        return Err(Error::ThetaOutOfRange(theta.to_f64_lossy()));
    }
    Ok(())
}

pub(crate) struct PointState<T: Scalar> {
    pub objective: ObjectiveBreakdown<T>,
    pub e: SymmetricMatrix<T>,
    pub residual: T,
}

/// `f_θ = g_θ + h_θ` with its raw numerator and denominator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObjectiveBreakdown<T> {
    pub g_theta: T,
    pub h_theta: T,
    pub f_theta: T,
    /// `tr(XᵀAX + XᵀD)`
    pub numerator: T,
    /// `tr(XᵀBX)`
    pub denominator: T,
}

impl<T: Scalar> ObjectiveBreakdown<T> {
    /// The θ = 1 ratio.
    pub fn f1(&self) -> T {
        self.numerator / self.denominator
    }
}

/// Criticality diagnostics. These certify a KKT point, never global optimality.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Certificate<T> {
    pub nepv_residual: T,
    /// `‖XᵀD − DᵀX‖_F`
    pub xtd_symmetry_defect: T,
    /// Smallest eigenvalue of `sym(XᵀD)`.
    pub xtd_min_eigenvalue: T,
    /// `Σ_{i≤k} λ_i(E) − tr(XᵀEX)`, zero iff `R(X)` is the top-k eigenspace.
    pub topk_defect: T,
    pub eigen_gap: T,
}

impl<T: Scalar> Certificate<T> {
    pub fn is_finite(&self) -> bool {
        [
            self.nepv_residual,
            self.xtd_symmetry_defect,
            self.xtd_min_eigenvalue,
            self.topk_defect,
            self.eigen_gap,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// Terms of the one-step monotonicity estimate for `(X, X̃)`.
///
/// When `hypothesis_margin ≥ 0`, i.e. `tr(X̃ᵀE(X)X̃) ≥ tr(XᵀE(X)X)`, the
/// estimate states `lhs ≤ rhs`, strictly if the margin is positive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LemmaMonoQuantities<T> {
    /// `tr(XᵀAX)`
    pub alpha: T,
    /// `tr(XᵀD)`
    pub delta: T,
    /// `tr(XᵀBX)`
    pub beta: T,
    /// `tr(X̃ᵀBX̃)`
    pub beta_tilde: T,
    pub gamma: T,
    pub hypothesis_margin: T,
    /// `f_θ(X) + γ`
    pub lhs: T,
    /// `g_θ(X̃) + tr(X̃ᵀDXᵀX̃)/[tr(X̃ᵀBX̃)]^θ`
    pub rhs: T,
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
    }

    fn spd(n: usize, rng: &mut ChaCha8Rng) -> SymmetricMatrix<f64> {
        let g = gaussian(n, n, rng);
        SymmetricMatrix::symmetrized(&g * g.transpose() + DMatrix::identity(n, n) * 0.5).unwrap()
    }

    fn seeded_problem(n: usize, k: usize, theta: f64, seed: u64) -> TraceRatioProblem<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = SymmetricMatrix::symmetrized(gaussian(n, n, &mut rng)).unwrap();
        let b = spd(n, &mut rng);
        let d = gaussian(n, k, &mut rng);
        TraceRatioProblem::new(a, b, d, theta, k).unwrap()
    }

    #[test]
    fn construction_errors() {
        let i3 = SymmetricMatrix::<f64>::identity(3);
        let d = DMatrix::zeros(3, 2);
        assert!(matches!(
            TraceRatioProblem::new(i3.clone(), i3.clone(), d.clone(), 1.5, 2),
            Err(Error::ThetaOutOfRange(_))
        ));
        assert!(matches!(
            TraceRatioProblem::new(i3.clone(), i3.clone(), DMatrix::zeros(3, 1), 0.5, 2),
            Err(Error::DimensionMismatch(_))
        ));
        let indefinite = SymmetricMatrix::from_diagonal(&[1.0, 1.0, -1.0]);
        assert!(matches!(
            TraceRatioProblem::new(i3.clone(), indefinite, d.clone(), 0.5, 2),
            Err(Error::NotPositiveSemidefinite { .. })
        ));
        // rank(B) = 1 is not > n - k = 1
        let thin = SymmetricMatrix::from_diagonal(&[1.0, 0.0, 0.0]);
        assert!(matches!(
            TraceRatioProblem::new(i3.clone(), thin, d.clone(), 0.5, 2),
            Err(Error::RankDeficientB { rank: 1, bound: 1 })
        ));
        let ok = SymmetricMatrix::from_diagonal(&[1.0, 1.0, 0.0]);
        assert!(TraceRatioProblem::new(i3, ok, d, 0.5, 2).is_ok());
    }

    #[test]
    fn evaluate_identity_case() {
        let i3 = SymmetricMatrix::<f64>::identity(3);
        let p = TraceRatioProblem::new(i3.clone(), i3, DMatrix::zeros(3, 2), 1.0, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = StiefelPoint::random(3, 2, &mut rng).unwrap();
        let obj = p.evaluate(&x).unwrap();
        assert!((obj.f_theta - 1.0).abs() < 1e-14);
        assert!((obj.denominator - 2.0).abs() < 1e-14);
    }

    #[test]
    fn evaluate_linear_term_only() {
        let mut d = DMatrix::zeros(3, 1);
        d[(0, 0)] = 1.0;
        let p = TraceRatioProblem::new(
            SymmetricMatrix::zeros(3),
            SymmetricMatrix::identity(3),
            d,
            0.0,
            1,
        )
        .unwrap();
        let x = StiefelPoint::leading_identity(3, 1).unwrap();
        let obj = p.evaluate(&x).unwrap();
        assert_eq!(obj.f_theta, 1.0);
        assert_eq!(obj.g_theta, 0.0);
        assert_eq!(obj.h_theta, 1.0);
    }

    #[test]
    fn evaluate_matches_scalar_oracle() {
        let p = seeded_problem(4, 2, 0.6, 7);
        let x = StiefelPoint::leading_identity(4, 2).unwrap();
        let obj = p.evaluate(&x).unwrap();
        // X = [e1 e2] picks the leading 2x2 blocks
        let (a, b, d) = (p.a().as_matrix(), p.b().as_matrix(), p.d());
        let num = a[(0, 0)] + a[(1, 1)] + d[(0, 0)] + d[(1, 1)];
        let den = b[(0, 0)] + b[(1, 1)];
        let oracle = num / den.powf(0.6);
        assert!((obj.f_theta - oracle).abs() <= 1e-13 * oracle.abs().max(1.0));
        assert!((obj.f_theta - (obj.g_theta + obj.h_theta)).abs() <= 1e-12 * obj.f_theta.abs().max(1.0));
    }

    #[test]
    fn degenerate_denominator_is_an_error() {
        let p = TraceRatioProblem::new(
            SymmetricMatrix::<f64>::identity(4),
            SymmetricMatrix::identity(4),
            DMatrix::zeros(4, 1),
            0.5,
            1,
        )
        .unwrap();
        assert!(matches!(p.denominator_power(0.0), Err(Error::DegenerateDenominator(_))));
        assert!(matches!(p.denominator_power(1e-15), Err(Error::DegenerateDenominator(_))));
        assert!(matches!(p.denominator_power(f64::NAN), Err(Error::NonFinite(_))));
        assert!(p.denominator_power(1e-13).is_ok());
    }

    #[test]
    fn e_collapses_for_theta_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = SymmetricMatrix::symmetrized(gaussian(4, 4, &mut rng)).unwrap();
        let p = TraceRatioProblem::new(a.clone(), spd(4, &mut rng), DMatrix::zeros(4, 2), 0.0, 2).unwrap();
        let x = StiefelPoint::random(4, 2, &mut rng).unwrap();
        let e = p.build_e(&x).unwrap();
        assert_eq!(e.as_matrix(), &(a.as_matrix() * 2.0));
    }

    #[test]
    fn e_for_lda_case() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = SymmetricMatrix::symmetrized(gaussian(4, 4, &mut rng)).unwrap();
        let b = spd(4, &mut rng);
        let p = TraceRatioProblem::new(a.clone(), b.clone(), DMatrix::zeros(4, 2), 1.0, 2).unwrap();
        let x = StiefelPoint::random(4, 2, &mut rng).unwrap();
        let e = p.build_e(&x).unwrap();
        let xm = x.as_matrix();
        let beta = (xm.transpose() * b.as_matrix() * xm).trace();
        let f1 = (xm.transpose() * a.as_matrix() * xm).trace() / beta;
        let oracle = (a.as_matrix() - b.as_matrix() * f1) * (2.0 / beta);
        assert!((e.as_matrix() - oracle).norm() < 1e-12);
    }

    #[test]
    fn e_matches_elementwise_oracle() {
        let p = seeded_problem(5, 2, 0.35, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let x = StiefelPoint::random(5, 2, &mut rng).unwrap();
        let e = p.build_e(&x).unwrap();
        let em = e.as_matrix();
        assert_eq!(em, &em.transpose());

        let (a, b, d, xm) = (p.a().as_matrix(), p.b().as_matrix(), p.d(), x.as_matrix());
        let mut ta = 0.0;
        let mut tb = 0.0;
        let mut td = 0.0;
        for i in 0..5 {
            for j in 0..5 {
                for c in 0..2 {
                    ta += xm[(i, c)] * a[(i, j)] * xm[(j, c)];
                    tb += xm[(i, c)] * b[(i, j)] * xm[(j, c)];
                }
            }
            for c in 0..2 {
                td += xm[(i, c)] * d[(i, c)];
            }
        }
        let f1 = (ta + td) / tb;
        let s = 2.0 / tb.powf(0.35);
        for i in 0..5 {
            for j in 0..5 {
                let mut dxt = 0.0;
                for c in 0..2 {
                    dxt += d[(i, c)] * xm[(j, c)] + xm[(i, c)] * d[(j, c)];
                }
                let v = s * (a[(i, j)] + dxt / 2.0 - 0.35 * f1 * b[(i, j)]);
                assert!((em[(i, j)] - v).abs() < 1e-12, "entry ({i},{j})");
            }
        }
    }

    #[test]
    fn residual_vanishes_at_eigenbasis() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = SymmetricMatrix::symmetrized(gaussian(6, 6, &mut rng)).unwrap();
        let p = TraceRatioProblem::new(a.clone(), SymmetricMatrix::identity(6), DMatrix::zeros(6, 2), 0.0, 2)
            .unwrap();
        let x = linalg::sym_eig_topk(&a, 2).unwrap().basis;
        assert!(p.nepv_residual(&x, ResidualNorm::Spectral).unwrap() <= 1e-14);
        let c = p.certify(&x, ResidualNorm::Spectral).unwrap();
        assert!(c.topk_defect.abs() <= 1e-12);
        assert!(c.xtd_symmetry_defect <= 1e-12);
        assert!(c.xtd_min_eigenvalue.abs() <= 1e-12);
        assert!(c.eigen_gap > 0.0);
    }

    #[test]
    fn residual_two_by_two_hand_value() {
        // A = diag(1, 2), D = 0, θ = 0, X = (1, 1)/√2.
        // E = 2A, EX = (2, 4)/√2, XᵀEX = 3, EX − 3X = (−1, 1)/√2, norm 1.
        // prefactor 1/(2·1) and ‖A‖₂ = 2 give 1/4.
        let p = TraceRatioProblem::new(
            SymmetricMatrix::from_diagonal(&[1.0, 2.0]),
            SymmetricMatrix::identity(2),
            DMatrix::zeros(2, 1),
            0.0,
            1,
        )
        .unwrap();
        let h = 0.5f64.sqrt();
        let x = StiefelPoint::new(DMatrix::from_column_slice(2, 1, &[h, h])).unwrap();
        let r = p.nepv_residual(&x, ResidualNorm::Spectral).unwrap();
        assert!((r - 0.25).abs() < 1e-15);
        // the 1-norm of diag(1, 2) is also 2
        let r1 = p.nepv_residual(&x, ResidualNorm::One).unwrap();
        assert!((r1 - 0.25).abs() < 1e-15);
    }

    #[test]
    fn residual_is_large_at_random_point() {
        let p = seeded_problem(8, 3, 0.5, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(60);
        let x = StiefelPoint::random(8, 3, &mut rng).unwrap();
        let c = p.certify(&x, ResidualNorm::Spectral).unwrap();
        assert!(c.nepv_residual > 1e-3);
    }

    #[test]
    fn gamma_vanishes_at_theta_endpoints() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for theta in [0.0, 1.0] {
            let p = seeded_problem(6, 2, theta, 10);
            let x = StiefelPoint::random(6, 2, &mut rng).unwrap();
            let xt = StiefelPoint::random(6, 2, &mut rng).unwrap();
            assert_eq!(p.lemma_mono_quantities(&x, &xt).unwrap().gamma, 0.0);
        }
    }

    #[test]
    fn mono_estimate_at_theta_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let p = seeded_problem(6, 2, 0.5, 13);
        let mut checked = 0;
        for _ in 0..200 {
            let x = StiefelPoint::random(6, 2, &mut rng).unwrap();
            let xt = StiefelPoint::random(6, 2, &mut rng).unwrap();
            let q = p.lemma_mono_quantities(&x, &xt).unwrap();
            if q.alpha + q.delta >= 0.0 && q.hypothesis_margin >= 0.0 {
                assert!(q.gamma >= 0.0);
                assert!(q.lhs <= q.rhs + 1e-12 * q.rhs.abs().max(1.0));
                checked += 1;
            }
        }
        assert!(checked > 10);
    }

    #[test]
    fn rotation_invariance_without_d() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let a = SymmetricMatrix::symmetrized(gaussian(6, 6, &mut rng)).unwrap();
        let p = TraceRatioProblem::new(a, spd(6, &mut rng), DMatrix::zeros(6, 3), 0.7, 3).unwrap();
        let x = StiefelPoint::random(6, 3, &mut rng).unwrap();
        let q = gaussian(3, 3, &mut rng).qr().q();
        let f = p.evaluate(&x).unwrap().f_theta;
        let fq = p.evaluate(&x.rotated(&q).unwrap()).unwrap().f_theta;
        assert!((f - fq).abs() < 1e-12 * f.abs().max(1.0));
    }
}
