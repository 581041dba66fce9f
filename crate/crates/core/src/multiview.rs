//! Multi-view subspace learning with one orthonormal projection per view.
//!
//! The global model maximizes `tr(PᵀAP) / [tr(PᵀBP)]^θ` where `P` stacks the
//! per-view projections `P_s` (each `n_s×k`, orthonormal), `A` is a symmetric
//! block matrix and `B` is block diagonal. Fixing all but one view turns the
//! objective into a single-view θ-trace-ratio problem with a linear term,
//! which [`alternate_solve`] hands to the SCF solver view by view.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{StiefelPoint, SymmetricMatrix};
use crate::problem::{Certificate, TraceRatioProblem, DENOMINATOR_GUARD};
use crate::scalar::Scalar;
use crate::scf::{scf_solve, SolveStatus, SolverOptions};

/// Views `Z_s` (`n_s×m`, one column per sample) with integer class labels.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiViewDataset<T: Scalar> {
    views: Vec<DMatrix<T>>,
    labels: Vec<usize>,
    n_classes: usize,
}

impl<T: Scalar> MultiViewDataset<T> {
    /// Labels run over `0..c` where `c = max(label) + 1`; every class must
    /// occur at least once.
    pub fn new(views: Vec<DMatrix<T>>, labels: Vec<usize>) -> Result<Self> {
        if views.is_empty() {
            return Err(Error::InvalidDataset("no views".into()));
        }
        let m = labels.len();
        if m == 0 {
            return Err(Error::InvalidDataset("no samples".into()));
        }
        for (s, z) in views.iter().enumerate() {
            if z.ncols() != m {
                return Err(Error::InvalidDataset(format!(
                    "view {s} has {} samples, labels have {m}",
                    z.ncols()
                )));
            }
            if z.nrows() == 0 {
                return Err(Error::InvalidDataset(format!("view {s} has no features")));
            }
            if z.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidDataset(format!("view {s} contains non-finite values")));
            }
        }
        let n_classes = labels.iter().max().map_or(0, |c| c + 1);
        let mut counts = vec![0usize; n_classes];
        for &c in &labels {
            counts[c] += 1;
        }
        if let Some(empty) = counts.iter().position(|&n| n == 0) {
            return Err(Error::InvalidDataset(format!("class {empty} has no samples")));
        }
        Ok(Self { views, labels, n_classes })
    }

    /// From a `c×m` one-hot label matrix.
    pub fn from_one_hot(views: Vec<DMatrix<T>>, y: &DMatrix<T>) -> Result<Self> {
        let mut labels = Vec::with_capacity(y.ncols());
        for (i, col) in y.column_iter().enumerate() {
            let ones: Vec<usize> = (0..col.len()).filter(|&r| col[r] == T::one()).collect();
            let zeros = col.iter().filter(|v| **v == T::zero()).count();
            if ones.len() != 1 || zeros + 1 != col.len() {
                return Err(Error::InvalidDataset(format!("label column {i} is not one-hot")));
            }
            labels.push(ones[0]);
        }
        let ds = Self::new(views, labels)?;
        if ds.n_classes != y.nrows() {
            return Err(Error::InvalidDataset(format!("class {} has no samples", ds.n_classes)));
        }
        Ok(ds)
    }

    pub fn n_views(&self) -> usize {
        self.views.len()
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn view(&self, s: usize) -> &DMatrix<T> {
        &self.views[s]
    }

    pub fn views(&self) -> &[DMatrix<T>] {
        &self.views
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn view_dims(&self) -> Vec<usize> {
        self.views.iter().map(|z| z.nrows()).collect()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &c in &self.labels {
            counts[c] += 1;
        }
        counts
    }

    /// `c×m` indicator matrix `Y`.
    pub fn one_hot(&self) -> DMatrix<T> {
        let mut y = DMatrix::zeros(self.n_classes, self.n_samples());
        for (i, &c) in self.labels.iter().enumerate() {
            y[(c, i)] = T::one();
        }
        y
    }

    /// Sub-dataset on the given sample indices. Fails if a class disappears.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let m = self.n_samples();
        if let Some(&bad) = indices.iter().find(|&&i| i >= m) {
            return Err(Error::InvalidDataset(format!("sample index {bad} out of range (m = {m})")));
        }
        let views = self.views.iter().map(|z| z.select_columns(indices)).collect();
        let labels: Vec<usize> = indices.iter().map(|&i| self.labels[i]).collect();
        let ds = Self::new(views, labels)?;
        if ds.n_classes != self.n_classes {
            return Err(Error::InvalidDataset(format!("class {} has no samples in selection", ds.n_classes)));
        }
        Ok(ds)
    }

    fn check_view(&self, s: usize) -> Result<()> {
        if s >= self.n_views() {
            return Err(Error::InvalidParameter(format!("view index {s} out of range ({} views)", self.n_views())));
        }
        Ok(())
    }

    fn centered(&self, s: usize) -> DMatrix<T> {
        let z = &self.views[s];
        let mean = z.column_mean();
        let mut c = z.clone();
        for mut col in c.column_iter_mut() {
            col -= &mean;
        }
        c
    }

    /// `n_s×c` matrix of class means.
    fn class_means(&self, s: usize) -> DMatrix<T> {
        let z = &self.views[s];
        let mut means = DMatrix::zeros(z.nrows(), self.n_classes);
        for (i, &c) in self.labels.iter().enumerate() {
            let mut col = means.column_mut(c);
            col += z.column(i);
        }
        for (c, n) in self.class_counts().into_iter().enumerate() {
            means.column_mut(c).unscale_mut(T::lit(n as f64));
        }
        means
    }
}

/// `C_{s,t} = (1/m)·Z_s·H_m·Z_tᵀ`.
pub fn cross_covariance<T: Scalar>(ds: &MultiViewDataset<T>, s: usize, t: usize) -> Result<DMatrix<T>> {
    ds.check_view(s)?;
    ds.check_view(t)?;
    let zs = ds.centered(s);
    let zt = if s == t { zs.clone() } else { ds.centered(t) };
    let c = zs * zt.transpose() / T::lit(ds.n_samples() as f64);
    Ok(if s == t { symmetrize(c) } else { c })
}

/// `Σ_c m_c (μ_c − μ)(μ_c − μ)ᵀ`, which equals `Z_s(YᵀΣ⁻¹Y − 𝟙𝟙ᵀ/m)Z_sᵀ`.
pub fn between_class_scatter<T: Scalar>(ds: &MultiViewDataset<T>, s: usize) -> Result<SymmetricMatrix<T>> {
    ds.check_view(s)?;
    let mut diffs = ds.class_means(s);
    let mean = ds.view(s).column_mean();
    for (c, n) in ds.class_counts().into_iter().enumerate() {
        let mut col = diffs.column_mut(c);
        col -= &mean;
        col.scale_mut(T::lit(n as f64).sqrt());
    }
    SymmetricMatrix::symmetrized(&diffs * diffs.transpose())
}

/// `Σ_i (z_i − μ_{y_i})(z_i − μ_{y_i})ᵀ`, i.e. `Z_s(I − YᵀΣ⁻¹Y)Z_sᵀ`.
pub fn within_class_scatter<T: Scalar>(ds: &MultiViewDataset<T>, s: usize) -> Result<SymmetricMatrix<T>> {
    ds.check_view(s)?;
    let means = ds.class_means(s);
    let mut r = ds.view(s).clone();
    for (i, &c) in ds.labels().iter().enumerate() {
        let mut col = r.column_mut(i);
        col -= means.column(c);
    }
    SymmetricMatrix::symmetrized(&r * r.transpose())
}

/// `Z_s·Yᵀ·Σ⁻¹·H_c·Σ⁻¹·Y·Z_tᵀ`: scatter of the class centres around their
/// unweighted mean, across views.
pub fn class_center_scatter<T: Scalar>(ds: &MultiViewDataset<T>, s: usize, t: usize) -> Result<DMatrix<T>> {
    ds.check_view(s)?;
    ds.check_view(t)?;
    let center = |v: usize| {
        let mut m = ds.class_means(v);
        let bar = m.column_mean();
        for mut col in m.column_iter_mut() {
            col -= &bar;
        }
        m
    };
    let ms = center(s);
    let c = if s == t { &ms * ms.transpose() } else { &ms * center(t).transpose() };
    Ok(if s == t { symmetrize(c) } else { c })
}

fn symmetrize<T: Scalar>(m: DMatrix<T>) -> DMatrix<T> {
    (&m + m.transpose()) * T::lit(0.5)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelFamily {
    Mcca,
    Gma,
    Mlda,
    Mvmda,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 4] = [Self::Mcca, Self::Gma, Self::Mlda, Self::Mvmda];

    pub fn name(self) -> &'static str {
        match self {
            Self::Mcca => "mcca",
            Self::Gma => "gma",
            Self::Mlda => "mlda",
            Self::Mvmda => "mvmda",
        }
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown model `{s}` (expected mcca, gma, mlda or mvmda)")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MultiViewModelSpec {
    pub family: ModelFamily,
    pub alpha: f64,
    pub theta: f64,
    pub k: usize,
    pub diag_regularization: f64,
}

impl MultiViewModelSpec {
    pub fn new(family: ModelFamily, k: usize, theta: f64) -> Self {
        Self { family, alpha: 1.0, theta, k, diag_regularization: 1e-8 }
    }

    pub fn with_alpha(self, alpha: f64) -> Self {
        Self { alpha, ..self }
    }

    fn validate(&self, dims: &[usize]) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("alpha = {} must be finite and nonnegative", self.alpha)));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::ThetaOutOfRange(self.theta));
        }
        if !(self.diag_regularization >= 0.0 && self.diag_regularization.is_finite()) {
            return Err(Error::InvalidParameter("diag_regularization must be finite and nonnegative".into()));
        }
        let min_dim = dims.iter().copied().min().unwrap_or(0);
        if self.k == 0 || self.k >= min_dim {
            return Err(Error::InvalidSubspaceDim { n: min_dim, k: self.k });
        }
        Ok(())
    }
}

/// Block form of the global `A` (`v×v` blocks) and block-diagonal `B`.
#[derive(Clone, Debug)]
pub struct BlockProblem<T: Scalar> {
    a: Vec<Vec<DMatrix<T>>>,
    b: Vec<SymmetricMatrix<T>>,
    dims: Vec<usize>,
    theta: T,
    k: usize,
}

impl<T: Scalar> BlockProblem<T> {
    /// Validates shapes and symmetry `A_{t,s} = A_{s,t}ᵀ`.
    pub fn new(a: Vec<Vec<DMatrix<T>>>, b: Vec<SymmetricMatrix<T>>, theta: T, k: usize) -> Result<Self> {
        let v = b.len();
        if v == 0 || a.len() != v || a.iter().any(|row| row.len() != v) {
            return Err(Error::DimensionMismatch(format!("expected {v}×{v} A blocks and {v} B blocks")));
        }
        let dims: Vec<usize> = b.iter().map(|m| m.order()).collect();
        for s in 0..v {
            for t in 0..v {
                let blk = &a[s][t];
                if blk.shape() != (dims[s], dims[t]) {
                    return Err(Error::DimensionMismatch(format!(
                        "A block ({s},{t}) is {:?}, expected {:?}",
                        blk.shape(),
                        (dims[s], dims[t])
                    )));
                }
                if blk != &a[t][s].transpose() {
                    return Err(Error::NotSymmetric);
                }
            }
        }
        if !(theta >= T::zero() && theta <= T::one()) {
            return Err(Error::ThetaOutOfRange(theta.to_f64_lossy()));
        }
        let min_dim = dims.iter().copied().min().unwrap_or(0);
        if k == 0 || k >= min_dim {
            return Err(Error::InvalidSubspaceDim { n: min_dim, k });
        }
        Ok(Self { a, b, dims, theta, k })
    }

    pub fn n_views(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn theta(&self) -> T {
        self.theta
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn a_block(&self, s: usize, t: usize) -> &DMatrix<T> {
        &self.a[s][t]
    }

    pub fn b_block(&self, s: usize) -> &SymmetricMatrix<T> {
        &self.b[s]
    }

    pub fn with_theta(&self, theta: T) -> Result<Self> {
        Self::new(self.a.clone(), self.b.clone(), theta, self.k)
    }

    fn offsets(&self) -> Vec<usize> {
        let mut off = vec![0];
        for d in &self.dims {
            off.push(off.last().unwrap() + d);
        }
        off
    }

    pub fn dense_a(&self) -> DMatrix<T> {
        let off = self.offsets();
        let n = off[self.n_views()];
        let mut m = DMatrix::zeros(n, n);
        for s in 0..self.n_views() {
            for t in 0..self.n_views() {
                m.view_mut((off[s], off[t]), (self.dims[s], self.dims[t])).copy_from(&self.a[s][t]);
            }
        }
        m
    }

    pub fn dense_b(&self) -> DMatrix<T> {
        let off = self.offsets();
        let n = off[self.n_views()];
        let mut m = DMatrix::zeros(n, n);
        for s in 0..self.n_views() {
            m.view_mut((off[s], off[s]), (self.dims[s], self.dims[s])).copy_from(self.b[s].as_matrix());
        }
        m
    }

    /// Vertically stacked projections.
    pub fn stack(&self, projections: &[StiefelPoint<T>]) -> Result<DMatrix<T>> {
        self.check_projections(projections)?;
        let off = self.offsets();
        let mut p = DMatrix::zeros(off[self.n_views()], self.k);
        for (s, ps) in projections.iter().enumerate() {
            p.view_mut((off[s], 0), (self.dims[s], self.k)).copy_from(ps.as_matrix());
        }
        Ok(p)
    }

    fn check_projections(&self, projections: &[StiefelPoint<T>]) -> Result<()> {
        if projections.len() != self.n_views() {
            return Err(Error::DimensionMismatch(format!(
                "{} projections for {} views",
                projections.len(),
                self.n_views()
            )));
        }
        for (s, p) in projections.iter().enumerate() {
            if p.rows() != self.dims[s] || p.cols() != self.k {
                return Err(Error::DimensionMismatch(format!(
                    "projection {s} is {}×{}, expected {}×{}",
                    p.rows(),
                    p.cols(),
                    self.dims[s],
                    self.k
                )));
            }
        }
        Ok(())
    }

    /// `tr(P_sᵀ A_{s,t} P_t)`.
    fn pair_trace(&self, projections: &[&StiefelPoint<T>], s: usize, t: usize) -> T {
        (&self.a[s][t] * projections[t].as_matrix()).dot(projections[s].as_matrix())
    }

    /// Global objective evaluated block by block.
    pub fn objective(&self, projections: &[StiefelPoint<T>]) -> Result<BlockObjective<T>> {
        self.check_projections(projections)?;
        let refs: Vec<&StiefelPoint<T>> = projections.iter().collect();
        self.objective_refs(&refs)
    }

    fn objective_refs(&self, projections: &[&StiefelPoint<T>]) -> Result<BlockObjective<T>> {
        let v = self.n_views();
        let mut numerator = T::zero();
        let mut denominator = T::zero();
        for s in 0..v {
            for t in 0..v {
                numerator += self.pair_trace(projections, s, t);
            }
            denominator += self.b[s].quadratic_trace(projections[s].as_matrix());
        }
        let power = if self.theta == T::zero() {
            T::one()
        } else {
            if !(denominator > T::lit(DENOMINATOR_GUARD)) {
                return Err(Error::DegenerateDenominator(denominator.to_f64_lossy()));
            }
            denominator.powf(self.theta)
        };
        Ok(BlockObjective { numerator, denominator, f_theta: numerator / power })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlockObjective<T> {
    pub numerator: T,
    pub denominator: T,
    pub f_theta: T,
}

/// Assembles the blocks for `spec.family` from dataset statistics.
pub fn build_block_problem<T: Scalar>(ds: &MultiViewDataset<T>, spec: &MultiViewModelSpec) -> Result<BlockProblem<T>> {
    let dims = ds.view_dims();
    spec.validate(&dims)?;
    let v = ds.n_views();
    let alpha = T::lit(spec.alpha);
    let reg = T::lit(spec.diag_regularization);

    let mut a: Vec<Vec<DMatrix<T>>> = (0..v).map(|s| (0..v).map(|t| DMatrix::zeros(dims[s], dims[t])).collect()).collect();
    for s in 0..v {
        for t in s + 1..v {
            let blk = match spec.family {
                ModelFamily::Mcca => cross_covariance(ds, s, t)?,
                ModelFamily::Gma | ModelFamily::Mlda => cross_covariance(ds, s, t)? * alpha,
                ModelFamily::Mvmda => class_center_scatter(ds, s, t)?,
            };
            a[t][s] = blk.transpose();
            a[s][t] = blk;
        }
        a[s][s] = match spec.family {
            ModelFamily::Mcca => cross_covariance(ds, s, s)?,
            ModelFamily::Gma | ModelFamily::Mlda => between_class_scatter(ds, s)?.into_inner(),
            ModelFamily::Mvmda => class_center_scatter(ds, s, s)?,
        };
    }

    let mut b = Vec::with_capacity(v);
    for s in 0..v {
        let base = match spec.family {
            ModelFamily::Mcca | ModelFamily::Mlda => cross_covariance(ds, s, s)?,
            ModelFamily::Gma | ModelFamily::Mvmda => within_class_scatter(ds, s)?.into_inner(),
        };
        b.push(SymmetricMatrix::symmetrized(base)?.shifted(reg));
    }
    BlockProblem::new(a, b, T::lit(spec.theta), spec.k)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum UpdateMode {
    /// Every view in a sweep sees the projections of the previous sweep.
    Jacobi,
    /// Views already updated in the current sweep are used immediately.
    #[default]
    GaussSeidel,
}

impl FromStr for UpdateMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jacobi" => Ok(Self::Jacobi),
            "gauss-seidel" | "gauss_seidel" | "gs" => Ok(Self::GaussSeidel),
            _ => Err(Error::InvalidParameter(format!("unknown mode `{s}` (expected jacobi or gauss-seidel)"))),
        }
    }
}

impl fmt::Display for UpdateMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Jacobi => "jacobi",
            Self::GaussSeidel => "gauss-seidel",
        })
    }
}

/// Projections at the start of a sweep and the partially updated list.
#[derive(Clone, Debug)]
pub struct SweepState<T: Scalar> {
    pub previous: Vec<StiefelPoint<T>>,
    pub current: Vec<StiefelPoint<T>>,
}

impl<T: Scalar> SweepState<T> {
    pub fn start(projections: Vec<StiefelPoint<T>>) -> Self {
        Self { current: projections.clone(), previous: projections }
    }

    /// Projections seen by view `s`; entry `s` itself is `previous[s]`.
    pub fn context(&self, s: usize, mode: UpdateMode) -> Vec<&StiefelPoint<T>> {
        (0..self.previous.len())
            .map(|t| match mode {
                UpdateMode::GaussSeidel if t < s => &self.current[t],
                _ => &self.previous[t],
            })
            .collect()
    }
}

/// Single-view problem in `P_s` with the other projections frozen per `mode`.
pub fn assemble_subproblem<T: Scalar>(
    bp: &BlockProblem<T>,
    state: &SweepState<T>,
    s: usize,
    mode: UpdateMode,
) -> Result<TraceRatioProblem<T>> {
    bp.check_projections(&state.previous)?;
    bp.check_projections(&state.current)?;
    if s >= bp.n_views() {
        return Err(Error::InvalidParameter(format!("view index {s} out of range")));
    }
    subproblem_from(bp, &state.context(s, mode), s)
}

fn subproblem_from<T: Scalar>(bp: &BlockProblem<T>, ctx: &[&StiefelPoint<T>], s: usize) -> Result<TraceRatioProblem<T>> {
    let v = bp.n_views();
    let k = T::lit(bp.k as f64);
    let mut alpha_s = T::zero();
    let mut beta_s = T::zero();
    let mut d_hat = DMatrix::zeros(bp.dims[s], bp.k);
    for t in (0..v).filter(|&t| t != s) {
        for u in (0..v).filter(|&u| u != s) {
            alpha_s += bp.pair_trace(ctx, t, u);
        }
        beta_s += bp.b[t].quadratic_trace(ctx[t].as_matrix());
        d_hat += &bp.a[s][t] * ctx[t].as_matrix();
    }
    d_hat *= T::lit(2.0);
    let a_hat = SymmetricMatrix::symmetrized(bp.a[s][s].clone())?.shifted(alpha_s / k);
    let b_hat = bp.b[s].shifted(beta_s / k);
    TraceRatioProblem::new(a_hat, b_hat, d_hat, bp.theta, bp.k)
}

#[derive(Clone, Debug)]
pub struct AlternateOptions<T> {
    pub mode: UpdateMode,
    pub eps: T,
    pub max_sweeps: usize,
    pub inner: SolverOptions<T>,
}

impl<T: Scalar> Default for AlternateOptions<T> {
    fn default() -> Self {
        Self {
            mode: UpdateMode::GaussSeidel,
            eps: T::lit(1e-6),
            max_sweeps: 50,
            inner: SolverOptions { max_iter: 50, record_trajectory: false, ..SolverOptions::default() },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRecord<T> {
    pub sweep: usize,
    pub objective: T,
    pub inner_iterations: Vec<usize>,
    /// Views whose inner SCF stopped before reaching its tolerance.
    pub inner_unconverged: usize,
}

#[derive(Clone, Debug)]
pub struct AlternateReport<T: Scalar> {
    pub projections: Vec<StiefelPoint<T>>,
    pub converged: bool,
    pub initial_objective: T,
    pub objective: T,
    pub sweeps: Vec<SweepRecord<T>>,
    /// Certificate of each view's last inner solve, taken against the
    /// subproblem that solve was run on.
    pub view_certificates: Vec<Certificate<T>>,
    /// Sweeps whose objective fell below the previous sweep's value.
    pub monotonicity_violations: usize,
}

/// First `k` columns of the identity for every view.
pub fn default_init<T: Scalar>(dims: &[usize], k: usize) -> Result<Vec<StiefelPoint<T>>> {
    dims.iter().map(|&n| StiefelPoint::leading_identity(n, k)).collect()
}

/// Alternating maximization over the views, solving each single-view
/// subproblem with SCF warm-started at the current projection.
pub fn alternate_solve<T: Scalar>(
    bp: &BlockProblem<T>,
    init: Vec<StiefelPoint<T>>,
    opts: &AlternateOptions<T>,
) -> Result<AlternateReport<T>> {
    if !(opts.eps >= T::zero()) {
        return Err(Error::InvalidParameter("eps must be nonnegative".into()));
    }
    if opts.max_sweeps == 0 {
        return Err(Error::InvalidParameter("max_sweeps must be at least 1".into()));
    }
    bp.check_projections(&init)?;
    let v = bp.n_views();
    let initial_objective = bp.objective(&init)?.f_theta;
    let mut state = SweepState::start(init);
    let mut f = initial_objective;
    let mut sweeps = Vec::new();
    let mut certificates = Vec::with_capacity(v);
    let mut violations = 0;
    let mut converged = false;

    for sweep in 1..=opts.max_sweeps {
        let f0 = f;
        let mut inner_iterations = Vec::with_capacity(v);
        let mut inner_unconverged = 0;
        certificates.clear();
        for s in 0..v {
            let sub = assemble_subproblem(bp, &state, s, opts.mode)?;
            let rep = scf_solve(&sub, &state.previous[s], &opts.inner)?;
            inner_iterations.push(rep.iterations);
            if rep.status != SolveStatus::Converged {
                inner_unconverged += 1;
            }
            certificates.push(rep.certificate);
            state.current[s] = rep.x;
        }
        state.previous.clone_from(&state.current);
        f = bp.objective(&state.current)?.f_theta;
        if f < f0 {
            violations += 1;
        }
        sweeps.push(SweepRecord { sweep, objective: f, inner_iterations, inner_unconverged });
        if (f - f0).abs() <= opts.eps * f.abs() {
            converged = true;
            break;
        }
    }

    Ok(AlternateReport {
        projections: state.current,
        converged,
        initial_objective,
        objective: f,
        sweeps,
        view_certificates: certificates,
        monotonicity_violations: violations,
    })
}
