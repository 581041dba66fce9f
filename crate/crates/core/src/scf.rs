//! Self-consistent field iteration for the θ-trace-ratio problem.
//!
//! Each step freezes `E = E(X_{i−1})`, takes an orthonormal basis `X̂_i` of
//! its dominant `k`-dimensional eigenspace, and then rotates that basis by the
//! polar factor of `X̂_iᵀD`, which maximizes the objective over all bases of
//! the same subspace. For `θ ∈ (0, 1)` the objective is guaranteed to increase
//! only from a starting point with nonnegative numerator; [`bootstrap`]
//! produces one by iterating with `θ` temporarily set to 0 or 1.

use crate::error::{Error, Result};
use crate::linalg::{self, StiefelPoint, SymmetricMatrix, DEFAULT_RANK_TOL};
use crate::problem::{Certificate, ObjectiveBreakdown, ResidualNorm, TraceRatioProblem};
use crate::scalar::Scalar;

/// Consecutive non-improving steps tolerated before giving up.
pub const STAGNATION_WINDOW: usize = 20;

/// Exponent used while bootstrapping towards a nonnegative numerator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BootstrapTheta {
    #[default]
    Zero,
    One,
}

#[derive(Clone, Debug)]
pub struct SolverOptions<T> {
    pub tol: T,
    pub max_iter: usize,
    pub rank_tol: T,
    pub residual_norm: ResidualNorm,
    pub bootstrap_theta: BootstrapTheta,
    pub record_trajectory: bool,
}

impl<T: Scalar> Default for SolverOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::lit(1e-7),
            max_iter: 1000,
            rank_tol: T::lit(DEFAULT_RANK_TOL),
            residual_norm: ResidualNorm::Spectral,
            bootstrap_theta: BootstrapTheta::Zero,
            record_trajectory: true,
        }
    }
}

impl<T: Scalar> SolverOptions<T> {
    fn validate(&self) -> Result<()> {
        if !(self.tol > T::zero()) {
            return Err(Error::InvalidParameter("tol must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be at least 1".into()));
        }
        if !(self.rank_tol > T::zero()) {
            return Err(Error::InvalidParameter("rank_tol must be positive".into()));
        }
        Ok(())
    }
}

/// One SCF step as recorded in the trajectory. All values are taken at the
/// new iterate `X_i` except `eigen_gap` and `rank_xtd`, which describe the
/// eigen step that produced it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationRecord<T> {
    pub iter: usize,
    pub f_theta: T,
    pub nepv_residual: T,
    /// `λ_k(E_i) − λ_{k+1}(E_i)`; absent for inexact eigen steps.
    pub eigen_gap: Option<T>,
    /// Numerical rank of `X̂_iᵀD`.
    pub rank_xtd: usize,
    /// `‖sin Θ(X_{i−1}, X_i)‖₂`.
    pub step_sin_theta: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    /// The objective stopped changing for [`STAGNATION_WINDOW`] steps while
    /// the residual stayed above `tol`.
    Stagnated,
}

#[derive(Clone, Debug)]
pub struct SolveReport<T: Scalar> {
    pub x: StiefelPoint<T>,
    pub iterations: usize,
    pub status: SolveStatus,
    /// Objective at the starting point of the main loop (after bootstrap).
    pub initial_objective: T,
    pub objective: ObjectiveBreakdown<T>,
    pub trajectory: Vec<IterationRecord<T>>,
    pub certificate: Certificate<T>,
    pub estimated_rate: Option<T>,
    pub bootstrap_iterations: usize,
}

impl<T: Scalar> SolveReport<T> {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }

    pub fn final_residual(&self) -> T {
        self.certificate.nepv_residual
    }
}

/// Result of the eigen step of one SCF iteration.
#[derive(Clone, Debug)]
pub struct BasisStep<T: Scalar> {
    pub basis: StiefelPoint<T>,
    /// `λ_k − λ_{k+1}` when known.
    pub gap: Option<T>,
}

/// Produces `X̂_i` from `E_i`.
///
/// The exact default returns the dominant eigenbasis. Other implementations
/// (e.g. iterative eigensolvers run to moderate accuracy) must return a basis
/// with `tr(X̂ᵀEX̂) ≥ tr(X_{i−1}ᵀEX_{i−1})`; the solver checks this.
pub trait EigenStep<T: Scalar> {
    fn next_basis(&self, e: &SymmetricMatrix<T>, current: &StiefelPoint<T>) -> Result<BasisStep<T>>;

    fn is_exact(&self) -> bool {
        false
    }
}

/// Dense top-k eigensolve.
#[derive(Clone, Copy, Debug, Default)]
pub struct ExactTopK;

impl<T: Scalar> EigenStep<T> for ExactTopK {
    fn next_basis(&self, e: &SymmetricMatrix<T>, current: &StiefelPoint<T>) -> Result<BasisStep<T>> {
        let slice = linalg::sym_eig_topk(e, current.cols())?;
        Ok(BasisStep { basis: slice.basis, gap: Some(slice.gap) })
    }

    fn is_exact(&self) -> bool {
        true
    }
}

struct Advance<T: Scalar> {
    x: StiefelPoint<T>,
    gap: Option<T>,
    rank: usize,
}

fn advance<T: Scalar>(
    problem: &TraceRatioProblem<T>,
    e: &SymmetricMatrix<T>,
    x: &StiefelPoint<T>,
    step: &dyn EigenStep<T>,
    rank_tol: T,
) -> Result<Advance<T>> {
    let BasisStep { basis, gap } = step.next_basis(e, x)?;
    if basis.rows() != x.rows() || basis.cols() != x.cols() {
        return Err(Error::DimensionMismatch("eigen step returned a basis of the wrong shape".into()));
    }
    if !step.is_exact() {
        let current = e.quadratic_trace(x.as_matrix());
        let candidate = e.quadratic_trace(basis.as_matrix());
        let slack = T::lit(1e-12) * (T::one() + current.abs());
        if !(candidate >= current - slack) {
            return Err(Error::StepRejected {
                current: current.to_f64_lossy(),
                candidate: candidate.to_f64_lossy(),
            });
        }
    }
    if problem.d_is_zero() {
        return Ok(Advance { x: basis, gap, rank: 0 });
    }
    let s = basis.as_matrix().tr_mul(problem.d());
    let polar = linalg::polar_orthogonal_factor(&s, rank_tol)?;
    let x_next = StiefelPoint::from_orthonormal_unchecked(basis.as_matrix() * &polar.q);
    Ok(Advance { x: x_next, gap, rank: polar.rank })
}

/// Runs SCF until the normalized NEPv residual drops to `opts.tol`.
pub fn scf_solve<T: Scalar>(
    problem: &TraceRatioProblem<T>,
    x0: &StiefelPoint<T>,
    opts: &SolverOptions<T>,
) -> Result<SolveReport<T>> {
    scf_solve_with(problem, x0, opts, &ExactTopK)
}

/// [`scf_solve`] with a caller-supplied eigen step.
pub fn scf_solve_with<T: Scalar>(
    problem: &TraceRatioProblem<T>,
    x0: &StiefelPoint<T>,
    opts: &SolverOptions<T>,
    step: &dyn EigenStep<T>,
) -> Result<SolveReport<T>> {
    opts.validate()?;
    let (mut x, bootstrap_iterations) = bootstrap_with(problem, x0, opts, step)?;

    let mode = opts.residual_norm;
    let mut state = problem.state_at(&x, mode)?;
    let initial_objective = state.objective.f_theta;
    let mut f_prev = initial_objective;
    let mut trajectory = Vec::new();
    let mut residual_tail: Vec<T> = Vec::with_capacity(RATE_WINDOW);
    let mut status = SolveStatus::MaxIterations;
    let mut iterations = 0;
    let mut flat_steps = 0;

    for iter in 1..=opts.max_iter {
        let adv = advance(problem, &state.e, &x, step, opts.rank_tol)?;
        let step_sin_theta = linalg::sin_theta_distance(&x, &adv.x)?;
        let next = problem.state_at(&adv.x, mode)?;
        let f = next.objective.f_theta;
        if !f.is_finite() || !next.residual.is_finite() {
            return Err(Error::NonFinite("SCF iterate"));
        }
        iterations = iter;

        if residual_tail.len() == RATE_WINDOW {
            residual_tail.remove(0);
        }
        residual_tail.push(next.residual);
        if opts.record_trajectory {
            trajectory.push(IterationRecord {
                iter,
                f_theta: f,
                nepv_residual: next.residual,
                eigen_gap: adv.gap,
                rank_xtd: adv.rank,
                step_sin_theta,
            });
        }

        let converged = next.residual <= opts.tol;
        let flat = (f - f_prev).abs() <= T::lit(1e-16) * f.abs().max(T::one());
        flat_steps = if flat { flat_steps + 1 } else { 0 };
        f_prev = f;
        x = adv.x;
        state = next;

        if converged {
            status = SolveStatus::Converged;
            break;
        }
        if flat_steps >= STAGNATION_WINDOW {
            status = SolveStatus::Stagnated;
            break;
        }
    }

    let certificate = problem.certify_with(&x, &state)?;
    let estimated_rate = estimate_linear_rate(&residual_tail);
    Ok(SolveReport {
        x,
        iterations,
        status,
        initial_objective,
        objective: state.objective,
        trajectory,
        certificate,
        estimated_rate,
        bootstrap_iterations,
    })
}

/// Moves `x0` to a point with `tr(XᵀAX + XᵀD) ≥ 0` when `0 < θ < 1` requires
/// it, by SCF steps on the same data with `θ` replaced by 0 or 1.
///
/// Returns the starting point unchanged (and 0 iterations) when no bootstrap
/// is needed.
pub fn bootstrap<T: Scalar>(
    problem: &TraceRatioProblem<T>,
    x0: &StiefelPoint<T>,
    opts: &SolverOptions<T>,
) -> Result<(StiefelPoint<T>, usize)> {
    bootstrap_with(problem, x0, opts, &ExactTopK)
}

fn bootstrap_with<T: Scalar>(
    problem: &TraceRatioProblem<T>,
    x0: &StiefelPoint<T>,
    opts: &SolverOptions<T>,
    step: &dyn EigenStep<T>,
) -> Result<(StiefelPoint<T>, usize)> {
    let theta = problem.theta();
    let interior = theta > T::zero() && theta < T::one();
    if !interior || problem.numerator(x0)? >= T::zero() {
        return Ok((x0.clone(), 0));
    }
    let aux_theta = match opts.bootstrap_theta {
        BootstrapTheta::Zero => T::zero(),
        BootstrapTheta::One => T::one(),
    };
    let aux = problem.with_theta(aux_theta)?;
    let mut x = x0.clone();
    for iter in 1..=opts.max_iter {
        let e = aux.build_e(&x)?;
        x = advance(&aux, &e, &x, step, opts.rank_tol)?.x;
        if aux.numerator(&x)? >= T::zero() {
            return Ok((x, iter));
        }
    }
    Err(Error::BootstrapFailed { iterations: opts.max_iter })
}

const RATE_WINDOW: usize = 10;
const RATE_MIN_POINTS: usize = 6;

/// Geometric mean of successive residual ratios over the last
/// `min(10, len)` residuals. `None` with fewer than 6 usable (positive,
/// finite) residuals in that window.
pub fn estimate_linear_rate<T: Scalar>(residuals: &[T]) -> Option<T> {
    let start = residuals.len().saturating_sub(RATE_WINDOW);
    let window = &residuals[start..];
    if window.len() < RATE_MIN_POINTS || window.iter().any(|r| !(r.is_finite() && *r > T::zero())) {
        return None;
    }
    let steps = T::lit((window.len() - 1) as f64);
    let log_sum = window.windows(2).fold(T::zero(), |acc, w| acc + (w[1] / w[0]).ln());
    Some((log_sum / steps).exp())
}

/// Residuals from a recorded trajectory.
pub fn trajectory_residuals<T: Scalar>(trajectory: &[IterationRecord<T>]) -> Vec<T> {
    trajectory.iter().map(|r| r.nepv_residual).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
    }

    fn spd(n: usize, rng: &mut ChaCha8Rng) -> SymmetricMatrix<f64> {
        let g = gaussian(n, n, rng);
        SymmetricMatrix::symmetrized(&g * g.transpose() / n as f64 + DMatrix::identity(n, n) * 0.1).unwrap()
    }

    #[test]
    fn eigen_problem_converges_in_one_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = SymmetricMatrix::symmetrized(gaussian(12, 12, &mut rng)).unwrap();
        let p = TraceRatioProblem::new(a.clone(), SymmetricMatrix::identity(12), DMatrix::zeros(12, 3), 0.0, 3)
            .unwrap();
        let x0 = StiefelPoint::leading_identity(12, 3).unwrap();
        let rep = scf_solve(&p, &x0, &SolverOptions::default()).unwrap();
        assert!(rep.converged());
        assert_eq!(rep.iterations, 1);
        assert_eq!(rep.trajectory.len(), 1);
        assert_eq!(rep.trajectory[0].rank_xtd, 0);
        let top: f64 = a.eigenvalues().unwrap()[..3].iter().sum();
        assert!((rep.objective.f_theta - top).abs() < 1e-12);
        assert_eq!(rep.estimated_rate, None);
    }

    #[test]
    fn procrustes_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let d = gaussian(10, 3, &mut rng);
        let p = TraceRatioProblem::new(SymmetricMatrix::zeros(10), SymmetricMatrix::identity(10), d.clone(), 0.0, 3)
            .unwrap();
        let x0 = StiefelPoint::leading_identity(10, 3).unwrap();
        let rep = scf_solve(&p, &x0, &SolverOptions::default()).unwrap();
        assert!(rep.converged());
        assert!((rep.objective.f_theta - linalg::trace_norm(&d)).abs() < 1e-9);
    }

    #[test]
    fn monotone_and_certified_at_interior_theta() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 20;
        let k = 4;
        let a = spd(n, &mut rng);
        let b = spd(n, &mut rng);
        let d = gaussian(n, k, &mut rng);
        let p = TraceRatioProblem::new(a, b, d, 0.5, k).unwrap();
        let x0 = StiefelPoint::leading_identity(n, k).unwrap();
        let rep = scf_solve(&p, &x0, &SolverOptions::default()).unwrap();
        assert!(rep.converged(), "{:?}", rep.status);
        let mut prev = rep.initial_objective;
        for r in &rep.trajectory {
            assert!(r.f_theta >= prev - 1e-12 * prev.abs().max(1.0));
            prev = r.f_theta;
        }
        let c = rep.certificate;
        assert!(c.nepv_residual <= 1e-7);
        assert!(c.xtd_symmetry_defect <= 1e-8);
        assert!(c.xtd_min_eigenvalue >= -1e-8);
        assert!(c.topk_defect >= -1e-10);
        assert!(c.topk_defect <= 1e-6);
    }

    #[test]
    fn bootstrap_noop_when_numerator_nonnegative() {
        let p = TraceRatioProblem::new(
            SymmetricMatrix::<f64>::identity(4),
            SymmetricMatrix::identity(4),
            DMatrix::zeros(4, 2),
            0.5,
            2,
        )
        .unwrap();
        let x0 = StiefelPoint::leading_identity(4, 2).unwrap();
        let (x, it) = bootstrap(&p, &x0, &SolverOptions::default()).unwrap();
        assert_eq!(it, 0);
        assert_eq!(x, x0);
    }

    #[test]
    fn bootstrap_reaches_nonnegative_numerator_with_psd_a() {
        // A = I, D pulls X0 = [e1 e2] strongly negative
        let n = 6;
        let mut d = DMatrix::zeros(n, 2);
        d[(0, 0)] = -5.0;
        d[(1, 1)] = -5.0;
        d[(2, 0)] = 0.5;
        let p = TraceRatioProblem::new(SymmetricMatrix::identity(n), SymmetricMatrix::identity(n), d, 0.5, 2).unwrap();
        let x0 = StiefelPoint::leading_identity(n, 2).unwrap();
        assert!(p.numerator(&x0).unwrap() < 0.0);
        for which in [BootstrapTheta::Zero, BootstrapTheta::One] {
            let opts = SolverOptions { bootstrap_theta: which, ..SolverOptions::default() };
            let (x, it) = bootstrap(&p, &x0, &opts).unwrap();
            assert!(it >= 1);
            assert!(p.numerator(&x).unwrap() >= 0.0);
            let rep = scf_solve(&p, &x0, &opts).unwrap();
            assert_eq!(rep.bootstrap_iterations, it);
        }
    }

    #[test]
    fn bootstrap_failure_when_numerator_always_negative() {
        let n = 5;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let d = gaussian(n, 2, &mut rng) * 0.01;
        let shift = linalg::trace_norm(&d) / 2.0 + 1.0;
        let a = SymmetricMatrix::from_diagonal(&vec![-shift; n]);
        let p = TraceRatioProblem::new(a, SymmetricMatrix::identity(n), d, 0.5, 2).unwrap();
        let x0 = StiefelPoint::leading_identity(n, 2).unwrap();
        let opts = SolverOptions { max_iter: 25, ..SolverOptions::default() };
        assert!(matches!(bootstrap(&p, &x0, &opts), Err(Error::BootstrapFailed { iterations: 25 })));
        assert!(matches!(scf_solve(&p, &x0, &opts), Err(Error::BootstrapFailed { .. })));
    }

    #[test]
    fn rate_of_geometric_sequence() {
        let r = [1e-1f64, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6];
        let rate = estimate_linear_rate(&r).unwrap();
        assert!((rate - 0.1).abs() < 1e-12);
        assert_eq!(estimate_linear_rate(&r[..5]), None);
        assert_eq!(estimate_linear_rate::<f64>(&[]), None);
        let with_zero = [1.0f64, 0.5, 0.25, 0.125, 0.0625, 0.0];
        assert_eq!(estimate_linear_rate(&with_zero), None);
        // only the last 10 points count
        let mut long = vec![1.0; 5];
        long.extend((0..10).map(|i| 0.5f64.powi(i)));
        assert!((estimate_linear_rate(&long).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn options_are_validated() {
        let p = TraceRatioProblem::new(
            SymmetricMatrix::<f64>::identity(3),
            SymmetricMatrix::identity(3),
            DMatrix::zeros(3, 1),
            0.0,
            1,
        )
        .unwrap();
        let x0 = StiefelPoint::leading_identity(3, 1).unwrap();
        let bad = SolverOptions { max_iter: 0, ..SolverOptions::default() };
        assert!(matches!(scf_solve(&p, &x0, &bad), Err(Error::InvalidParameter(_))));
        let bad = SolverOptions { tol: 0.0, ..SolverOptions::default() };
        assert!(matches!(scf_solve(&p, &x0, &bad), Err(Error::InvalidParameter(_))));
    }

    struct OneSweepOfSubspaceIteration;

    impl EigenStep<f64> for OneSweepOfSubspaceIteration {
        fn next_basis(&self, e: &SymmetricMatrix<f64>, current: &StiefelPoint<f64>) -> Result<BasisStep<f64>> {
            // shifted power step followed by Rayleigh-Ritz on the new subspace
            let n = e.order();
            let shift = e.one_norm();
            let shifted = e.as_matrix() + DMatrix::identity(n, n) * shift;
            let y = StiefelPoint::orthonormalize(&shifted * current.as_matrix())?;
            let small = SymmetricMatrix::symmetrized(y.as_matrix().tr_mul(&(e.as_matrix() * y.as_matrix())))?;
            let (_, vecs) = f64::symmetric_eigen(small.as_matrix())?;
            let k = current.cols();
            let mut rot = DMatrix::zeros(k, k);
            for j in 0..k {
                rot.set_column(j, &vecs.column(k - 1 - j));
            }
            Ok(BasisStep { basis: StiefelPoint::orthonormalize(y.as_matrix() * rot)?, gap: None })
        }
    }

    #[test]
    fn inexact_step_hook_still_increases_objective() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let n = 15;
        let k = 3;
        let p = TraceRatioProblem::new(spd(n, &mut rng), spd(n, &mut rng), gaussian(n, k, &mut rng), 1.0, k).unwrap();
        let x0 = StiefelPoint::leading_identity(n, k).unwrap();
        let opts = SolverOptions { max_iter: 200, ..SolverOptions::default() };
        let rep = scf_solve_with(&p, &x0, &opts, &OneSweepOfSubspaceIteration).unwrap();
        let mut prev = rep.initial_objective;
        for r in &rep.trajectory {
            assert!(r.eigen_gap.is_none());
            assert!(r.f_theta >= prev - 1e-10 * prev.abs().max(1.0));
            prev = r.f_theta;
        }
        assert!(rep.objective.f_theta > rep.initial_objective);
    }

    struct Backwards;

    impl EigenStep<f64> for Backwards {
        fn next_basis(&self, e: &SymmetricMatrix<f64>, current: &StiefelPoint<f64>) -> Result<BasisStep<f64>> {
            let neg = SymmetricMatrix::symmetrized(-e.as_matrix())?;
            let slice = linalg::sym_eig_topk(&neg, current.cols())?;
            Ok(BasisStep { basis: slice.basis, gap: None })
        }
    }

    #[test]
    fn inexact_step_that_decreases_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let p = TraceRatioProblem::new(spd(6, &mut rng), spd(6, &mut rng), DMatrix::zeros(6, 2), 0.0, 2).unwrap();
        let x0 = StiefelPoint::leading_identity(6, 2).unwrap();
        let res = scf_solve_with(&p, &x0, &SolverOptions::default(), &Backwards);
        assert!(matches!(res, Err(Error::StepRejected { .. })));
    }

    #[test]
    fn f32_solver_runs() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a64 = spd(10, &mut rng);
        let b64 = spd(10, &mut rng);
        let d64 = gaussian(10, 2, &mut rng);
        let a = SymmetricMatrix::<f32>::symmetrized(a64.as_matrix().map(|v| v as f32)).unwrap();
        let b = SymmetricMatrix::<f32>::symmetrized(b64.as_matrix().map(|v| v as f32)).unwrap();
        let p = TraceRatioProblem::new(a, b, d64.map(|v| v as f32), 0.5, 2).unwrap();
        let x0 = StiefelPoint::leading_identity(10, 2).unwrap();
        let opts = SolverOptions { tol: 1e-4f32, ..SolverOptions::default() };
        let rep = scf_solve(&p, &x0, &opts).unwrap();
        assert!(rep.converged());
        let p64 = TraceRatioProblem::new(a64, b64, d64, 0.5, 2).unwrap();
        let rep64 = scf_solve(&p64, &StiefelPoint::leading_identity(10, 2).unwrap(), &SolverOptions::default()).unwrap();
        assert!((rep.objective.f_theta as f64 - rep64.objective.f_theta).abs() < 1e-3 * rep64.objective.f_theta.abs());
    }
}
