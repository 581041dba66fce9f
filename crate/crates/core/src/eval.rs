//! Classification protocol for learned multi-view projections: repeated
//! stratified train/test splits, projection with serial fusion of the views,
//! and 1-nearest-neighbour accuracy.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::linalg::StiefelPoint;
use crate::multiview::{
    alternate_solve, build_block_problem, default_init, AlternateOptions, MultiViewDataset, MultiViewModelSpec,
};
use crate::scalar::Scalar;
use crate::synth::stream_rng;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub n_repeats: usize,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(seed: u64) -> Self {
        Self { train_fraction: 0.1, n_repeats: 10, seed }
    }

    fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "train fraction {} must lie strictly between 0 and 1",
                self.train_fraction
            )));
        }
        if self.n_repeats == 0 {
            return Err(Error::InvalidParameter("at least one repeat is required".into()));
        }
        Ok(())
    }
}

/// Sorted train and test indices for split `repeat`.
///
/// Each class contributes `round(fraction·m_c)` training samples, clamped to
/// `[1, m_c − 1]`. Split `r` shuffles with ChaCha20 stream `r` of the seed.
pub fn stratified_split(labels: &[usize], spec: &SplitSpec, repeat: usize) -> Result<(Vec<usize>, Vec<usize>)> {
    spec.validate()?;
    let n_classes = labels.iter().max().map_or(0, |c| c + 1);
    let mut by_class = vec![Vec::new(); n_classes];
    for (i, &c) in labels.iter().enumerate() {
        by_class[c].push(i);
    }
    let mut rng = stream_rng(spec.seed, repeat as u64);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (c, mut members) in by_class.into_iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        if members.len() < 2 {
            return Err(Error::InvalidDataset(format!("class {c} has fewer than 2 samples")));
        }
        members.shuffle(&mut rng);
        let n_train = ((spec.train_fraction * members.len() as f64).round() as usize).clamp(1, members.len() - 1);
        train.extend_from_slice(&members[..n_train]);
        test.extend_from_slice(&members[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Stacks `P_sᵀ Z_s[:, indices]` over the views: one `(v·k)`-dimensional
/// column per sample.
pub fn project_and_fuse<T: Scalar>(
    ds: &MultiViewDataset<T>,
    projections: &[StiefelPoint<T>],
    indices: &[usize],
) -> Result<DMatrix<T>> {
    if projections.len() != ds.n_views() {
        return Err(Error::DimensionMismatch(format!(
            "{} projections for {} views",
            projections.len(),
            ds.n_views()
        )));
    }
    let k = projections.first().map_or(0, |p| p.cols());
    if let Some(&bad) = indices.iter().find(|&&i| i >= ds.n_samples()) {
        return Err(Error::InvalidParameter(format!("sample index {bad} out of range")));
    }
    let mut fused = DMatrix::zeros(k * ds.n_views(), indices.len());
    for (s, p) in projections.iter().enumerate() {
        if p.rows() != ds.view(s).nrows() || p.cols() != k {
            return Err(Error::DimensionMismatch(format!("projection {s} does not match view {s}")));
        }
        let block = p.as_matrix().tr_mul(&ds.view(s).select_columns(indices));
        fused.view_mut((s * k, 0), (k, indices.len())).copy_from(&block);
    }
    Ok(fused)
}

/// 1-NN by Euclidean distance. Ties go to the smallest training index.
pub fn knn1_classify<T: Scalar>(train: &DMatrix<T>, train_labels: &[usize], test: &DMatrix<T>) -> Result<Vec<usize>> {
    if train.ncols() == 0 {
        return Err(Error::InvalidParameter("empty training set".into()));
    }
    if train.ncols() != train_labels.len() {
        return Err(Error::DimensionMismatch("training features and labels differ in length".into()));
    }
    if train.nrows() != test.nrows() {
        return Err(Error::DimensionMismatch("train and test feature dimensions differ".into()));
    }
    let predictions = test
        .column_iter()
        .map(|q| {
            let mut best = (0, T::lit(f64::INFINITY));
            for (j, x) in train.column_iter().enumerate() {
                let d = (x - q).norm_squared();
                if d < best.1 {
                    best = (j, d);
                }
            }
            train_labels[best.0]
        })
        .collect();
    Ok(predictions)
}

pub fn accuracy(predicted: &[usize], truth: &[usize]) -> f64 {
    if predicted.is_empty() {
        return 0.0;
    }
    let hits = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    hits as f64 / predicted.len() as f64
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalResult {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single split.
    pub std: f64,
    pub per_split: Vec<f64>,
}

impl EvalResult {
    pub fn from_splits(per_split: Vec<f64>) -> Self {
        let n = per_split.len() as f64;
        let mean = per_split.iter().sum::<f64>() / n;
        let std = if per_split.len() > 1 {
            (per_split.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { mean, std, per_split }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalCell {
    pub k: usize,
    pub theta: f64,
    pub result: EvalResult,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalTable {
    /// Cells in `k`-major, then `θ` order.
    pub cells: Vec<EvalCell>,
}

impl EvalTable {
    /// Highest mean test accuracy per `k` (earliest `θ` on ties).
    pub fn best_per_k(&self) -> Vec<&EvalCell> {
        let mut best: Vec<&EvalCell> = Vec::new();
        for cell in &self.cells {
            match best.iter_mut().find(|b| b.k == cell.k) {
                Some(b) if cell.result.mean > b.result.mean => *b = cell,
                Some(_) => {}
                None => best.push(cell),
            }
        }
        best
    }
}

/// Fits projections on the training samples only.
pub fn fit_projections<T: Scalar>(
    train: &MultiViewDataset<T>,
    spec: &MultiViewModelSpec,
    opts: &AlternateOptions<T>,
) -> Result<Vec<StiefelPoint<T>>> {
    let bp = build_block_problem(train, spec)?;
    let init = default_init(bp.dims(), spec.k)?;
    Ok(alternate_solve(&bp, init, opts)?.projections)
}

/// Test accuracy of projections fitted on `train_idx` and scored on `test_idx`.
pub fn split_accuracy<T: Scalar>(
    ds: &MultiViewDataset<T>,
    projections: &[StiefelPoint<T>],
    train_idx: &[usize],
    test_idx: &[usize],
) -> Result<f64> {
    let train_x = project_and_fuse(ds, projections, train_idx)?;
    let test_x = project_and_fuse(ds, projections, test_idx)?;
    let train_y: Vec<usize> = train_idx.iter().map(|&i| ds.labels()[i]).collect();
    let test_y: Vec<usize> = test_idx.iter().map(|&i| ds.labels()[i]).collect();
    let pred = knn1_classify(&train_x, &train_y, &test_x)?;
    Ok(accuracy(&pred, &test_y))
}

/// Accuracy over the `(k, θ)` grid, averaged over the repeated splits.
/// `base.k` and `base.theta` are ignored.
pub fn evaluate_model<T: Scalar>(
    ds: &MultiViewDataset<T>,
    base: &MultiViewModelSpec,
    split: &SplitSpec,
    k_grid: &[usize],
    theta_grid: &[f64],
    opts: &AlternateOptions<T>,
) -> Result<EvalTable> {
    if k_grid.is_empty() || theta_grid.is_empty() {
        return Err(Error::InvalidParameter("k and theta grids must be nonempty".into()));
    }
    split.validate()?;
    let mut acc = vec![Vec::with_capacity(split.n_repeats); k_grid.len() * theta_grid.len()];
    for repeat in 0..split.n_repeats {
        let (train_idx, test_idx) = stratified_split(ds.labels(), split, repeat)?;
        let train = ds.select(&train_idx)?;
        for (ik, &k) in k_grid.iter().enumerate() {
            let spec = MultiViewModelSpec { k, theta: theta_grid[0], ..*base };
            let bp0 = build_block_problem(&train, &spec)?;
            for (it, &theta) in theta_grid.iter().enumerate() {
                let bp = bp0.with_theta(T::lit(theta))?;
                let init = default_init(bp.dims(), k)?;
                let proj = alternate_solve(&bp, init, opts)?.projections;
                acc[ik * theta_grid.len() + it].push(split_accuracy(ds, &proj, &train_idx, &test_idx)?);
            }
        }
    }
    let mut cells = Vec::with_capacity(acc.len());
    let mut acc = acc.into_iter();
    for &k in k_grid {
        for &theta in theta_grid {
            cells.push(EvalCell { k, theta, result: EvalResult::from_splits(acc.next().unwrap()) });
        }
    }
    Ok(EvalTable { cells })
}

/// `0, 0.1, …, 1`.
pub fn default_theta_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}
