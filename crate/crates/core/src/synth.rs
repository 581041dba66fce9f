//! Seeded random test problems.
//!
//! Every draw comes from ChaCha20 seeded with the 64-bit `seed`. A, B and D
//! use stream ids 0, 1 and 2 of that seed so each matrix is independent of the
//! dimensions of the others. Values are sampled in `f64` and then narrowed, so
//! an `f32` problem is the rounded `f64` problem for the same seed.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::SymmetricMatrix;
use crate::multiview::MultiViewDataset;
use crate::problem::TraceRatioProblem;
use crate::scalar::Scalar;

pub const STREAM_A: u64 = 0;
pub const STREAM_B: u64 = 1;
pub const STREAM_D: u64 = 2;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SynthSpec {
    pub n: usize,
    pub k: usize,
    pub seed: u64,
    pub spd_shift: f64,
    pub theta: f64,
}

impl SynthSpec {
    pub fn new(n: usize, k: usize, seed: u64) -> Self {
        Self { n, k, seed, spd_shift: 1e-6, theta: 0.5 }
    }

    pub fn with_theta(self, theta: f64) -> Self {
        Self { theta, ..self }
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k >= self.n {
            return Err(Error::InvalidSubspaceDim { n: self.n, k: self.k });
        }
        if !(self.spd_shift >= 0.0 && self.spd_shift.is_finite()) {
            return Err(Error::InvalidParameter(format!("spd_shift = {} must be a finite nonnegative number", self.spd_shift)));
        }
        Ok(())
    }
}

/// ChaCha20 generator for one (seed, stream) pair.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn standard_normal<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    // column-major fill keeps the draw order independent of nalgebra internals
    let mut m = DMatrix::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = rng.sample(StandardNormal);
        }
    }
    m
}

/// `U·diag(v)·Uᵀ` with `U` the eigenvectors of a symmetrized Gaussian matrix
/// and `v ~ U(0,1) + shift`.
pub fn random_spd<R: Rng + ?Sized>(n: usize, shift: f64, rng: &mut R) -> Result<DMatrix<f64>> {
    let g = standard_normal(n, n, rng);
    let sym = (&g + g.transpose()) * 0.5;
    let (_, u) = f64::symmetric_eigen(&sym)?;
    let v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + shift).collect();
    let mut scaled = u.clone();
    for (j, vj) in v.iter().enumerate() {
        scaled.column_mut(j).scale_mut(*vj);
    }
    let m = scaled * u.transpose();
    Ok((&m + m.transpose()) * 0.5)
}

fn narrow<T: Scalar>(m: &DMatrix<f64>) -> DMatrix<T> {
    m.map(T::lit)
}

/// Builds the random problem described by `spec`.
pub fn generate<T: Scalar>(spec: &SynthSpec) -> Result<TraceRatioProblem<T>> {
    spec.validate()?;
    let a = random_spd(spec.n, spec.spd_shift, &mut stream_rng(spec.seed, STREAM_A))?;
    let b = random_spd(spec.n, spec.spd_shift, &mut stream_rng(spec.seed, STREAM_B))?;
    let d = standard_normal(spec.n, spec.k, &mut stream_rng(spec.seed, STREAM_D));
    TraceRatioProblem::new(
        SymmetricMatrix::symmetrized(narrow(&a))?,
        SymmetricMatrix::symmetrized(narrow(&b))?,
        narrow(&d),
        T::lit(spec.theta),
        spec.k,
    )
}

/// `n = 3`, `k = 1`, `θ = 0.5` instance small enough for grid search over
/// the unit sphere. A and B use a 0.1 shift so the objective is smooth on the
/// grid scale.
pub fn generate_sphere_oracle_instance(seed: u64) -> Result<TraceRatioProblem<f64>> {
    let spec = SynthSpec { n: 3, k: 1, seed, spd_shift: 0.1, theta: 0.5 };
    generate(&spec)
}

/// Unit vector at polar angle `polar` and azimuth `azimuth` (degrees).
pub fn sphere_point(polar_deg: f64, azimuth_deg: f64) -> [f64; 3] {
    let (p, a) = (polar_deg.to_radians(), azimuth_deg.to_radians());
    [p.sin() * a.cos(), p.sin() * a.sin(), p.cos()]
}

/// Maximum of `f_θ(x)` over the 1°×1° polar/azimuth grid of the unit sphere,
/// with the maximizing point.
pub fn sphere_grid_max(problem: &TraceRatioProblem<f64>) -> Result<(f64, [f64; 3])> {
    if problem.n() != 3 || problem.k() != 1 {
        return Err(Error::DimensionMismatch(format!(
            "sphere grid needs n = 3, k = 1, got n = {}, k = {}",
            problem.n(),
            problem.k()
        )));
    }
    let a = problem.a().as_matrix();
    let b = problem.b().as_matrix();
    let d = problem.d();
    let theta = problem.theta();
    let mut best = (f64::NEG_INFINITY, [0.0, 0.0, 1.0]);
    for ip in 0..=180 {
        for ia in 0..360 {
            let x = sphere_point(ip as f64, ia as f64);
            let mut xax = 0.0;
            let mut xbx = 0.0;
            let mut xd = 0.0;
            for i in 0..3 {
                xd += x[i] * d[(i, 0)];
                for j in 0..3 {
                    xax += x[i] * a[(i, j)] * x[j];
                    xbx += x[i] * b[(i, j)] * x[j];
                }
            }
            let f = (xax + xd) / xbx.powf(theta);
            if f > best.0 {
                best = (f, x);
            }
        }
    }
    Ok(best)
}

/// Labelled Gaussian clusters observed through several views.
///
/// In view `s` the class means sit on a regular simplex with pairwise
/// distance `separation·sigma`, rotated by a random orthogonal matrix drawn
/// from stream `VIEW_STREAM_BASE + 2s`; isotropic noise of scale `sigma` comes
/// from stream `VIEW_STREAM_BASE + 2s + 1`. Sample `i` belongs to class
/// `i mod n_classes`.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiViewSynthSpec {
    pub dims: Vec<usize>,
    pub n_classes: usize,
    pub m: usize,
    pub separation: f64,
    pub sigma: f64,
    pub seed: u64,
}

pub const VIEW_STREAM_BASE: u64 = 16;

impl MultiViewSynthSpec {
    /// Three views of dimension 8, 10, 12; 300 samples in 3 classes; means
    /// 5σ apart.
    pub fn standard(seed: u64) -> Self {
        Self { dims: vec![8, 10, 12], n_classes: 3, m: 300, separation: 5.0, sigma: 1.0, seed }
    }
}

pub fn generate_multiview_gaussian(spec: &MultiViewSynthSpec) -> Result<MultiViewDataset<f64>> {
    let c = spec.n_classes;
    if c == 0 || spec.m < c {
        return Err(Error::InvalidParameter(format!("need 1 <= n_classes <= m, got {c} and {}", spec.m)));
    }
    if spec.dims.is_empty() {
        return Err(Error::InvalidParameter("at least one view is required".into()));
    }
    if let Some(&n) = spec.dims.iter().find(|&&n| n < c) {
        return Err(Error::InvalidParameter(format!("view dimension {n} is below the class count {c}")));
    }
    if !(spec.sigma > 0.0 && spec.separation >= 0.0) {
        return Err(Error::InvalidParameter("sigma must be positive and separation nonnegative".into()));
    }
    let labels: Vec<usize> = (0..spec.m).map(|i| i % c).collect();
    let radius = spec.separation * spec.sigma / std::f64::consts::SQRT_2;
    let mut views = Vec::with_capacity(spec.dims.len());
    for (s, &n) in spec.dims.iter().enumerate() {
        let mut rot_rng = stream_rng(spec.seed, VIEW_STREAM_BASE + 2 * s as u64);
        let g = standard_normal(n, n, &mut rot_rng);
        let (_, q) = f64::symmetric_eigen(&((&g + g.transpose()) * 0.5))?;
        let noise = standard_normal(n, spec.m, &mut stream_rng(spec.seed, VIEW_STREAM_BASE + 2 * s as u64 + 1));
        let mut z = noise * spec.sigma;
        for (i, &label) in labels.iter().enumerate() {
            let mut col = z.column_mut(i);
            col.axpy(radius, &q.column(label), 1.0);
        }
        views.push(z);
    }
    MultiViewDataset::new(views, labels)
}
