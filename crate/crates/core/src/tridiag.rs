//! Leading eigenpairs of a symmetric tridiagonal matrix: bisection on Sturm
//! counts for the eigenvalues, inverse iteration for the vectors, then a
//! Rayleigh-Ritz pass that is checked a posteriori.

use nalgebra::DMatrix;

use crate::scalar::Scalar;

/// `k` leading eigenvectors plus `k + 1` leading eigenvalues, descending.
pub(crate) struct TopPairs<T: Scalar> {
    pub values: Vec<T>,
    pub vectors: DMatrix<T>,
}

const INVERSE_ITERATIONS: usize = 5;

struct Tridiagonal<'a, T> {
    d: &'a [T],
    e: &'a [T],
    e2: Vec<T>,
    norm: T,
    pivmin: T,
}

impl<'a, T: Scalar> Tridiagonal<'a, T> {
    fn new(d: &'a [T], e: &'a [T]) -> Self {
        let n = d.len();
        let off = |i: usize| if i < n - 1 { e[i].abs() } else { T::zero() };
        let mut norm = T::zero();
        for i in 0..n {
            let left = if i > 0 { e[i - 1].abs() } else { T::zero() };
            norm = norm.max(d[i].abs() + left + off(i));
        }
        let e2: Vec<T> = e.iter().map(|&v| v * v).collect();
        let max_e2 = e2.iter().fold(T::one(), |m, &v| m.max(v));
        Self { d, e, e2, norm, pivmin: T::lit(1e-30) * max_e2 }
    }

    fn n(&self) -> usize {
        self.d.len()
    }

    /// Number of eigenvalues strictly below `x`.
    fn count_below(&self, x: T) -> usize {
        let mut q = self.d[0] - x;
        let mut count = 0;
        for i in 0..self.n() {
            if i > 0 {
                q = self.d[i] - x - self.e2[i - 1] / q;
            }
            if q.abs() <= self.pivmin {
                q = -self.pivmin;
            }
            if q < T::zero() {
                count += 1;
            }
        }
        count
    }

    /// Eigenvalue number `j` in ascending order.
    fn bisect(&self, j: usize) -> T {
        let n = self.n();
        let eps = T::epsilon();
        let pad = T::lit(2.0) * T::lit(n as f64) * eps * self.norm + T::lit(2.0) * self.pivmin;
        let (mut lo, mut hi) = (-self.norm - pad, self.norm + pad);
        loop {
            let mid = (lo + hi) * T::lit(0.5);
            let width = hi - lo;
            if width <= T::lit(2.0) * eps * lo.abs().max(hi.abs()) + self.pivmin || mid <= lo || mid >= hi {
                return mid;
            }
            if self.count_below(mid) > j {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }

    /// `y ← T y`
    fn apply(&self, x: &[T], y: &mut [T]) {
        let n = self.n();
        for i in 0..n {
            let mut v = self.d[i] * x[i];
            if i > 0 {
                v += self.e[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                v += self.e[i] * x[i + 1];
            }
            y[i] = v;
        }
    }
}

/// LU with partial pivoting of `T − σI`; tiny pivots are lifted so the shift
/// may sit on an eigenvalue.
struct ShiftedLu<T> {
    d: Vec<T>,
    dl: Vec<T>,
    du: Vec<T>,
    du2: Vec<T>,
    swapped: Vec<bool>,
}

impl<T: Scalar> ShiftedLu<T> {
    fn new(t: &Tridiagonal<'_, T>, sigma: T) -> Self {
        let n = t.n();
        let mut d: Vec<T> = t.d.iter().map(|&v| v - sigma).collect();
        let mut dl = t.e.to_vec();
        let mut du = t.e.to_vec();
        let mut du2 = vec![T::zero(); n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] != T::zero() {
                    let fact = dl[i] / d[i];
                    dl[i] = fact;
                    d[i + 1] -= fact * du[i];
                }
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                swapped[i] = true;
            }
        }
        let floor = T::epsilon() * t.norm.max(t.pivmin);
        for v in d.iter_mut() {
            if v.abs() < floor {
                *v = if *v < T::zero() { -floor } else { floor };
            }
        }
        Self { d, dl, du, du2, swapped }
    }

    fn solve(&self, b: &mut [T]) {
        let n = self.d.len();
        for i in 0..n - 1 {
            if self.swapped[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.dl[i] * b[i];
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}

fn normalize<T: Scalar>(v: &mut [T]) -> T {
    let norm = v.iter().fold(T::zero(), |s, &x| s + x * x).sqrt();
    if norm > T::zero() {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
    norm
}

fn start_vector<T: Scalar>(n: usize, seed: usize) -> Vec<T> {
    let mut state = 0x9E37_79B9_7F4A_7C15u64 ^ (seed as u64).wrapping_mul(0xD1B5_4A32_D192_ED03);
    (0..n)
        .map(|_| {
            state = state.wrapping_mul(6_364_136_223_846_793_005).wrapping_add(1_442_695_040_888_963_407);
            T::lit((state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0)
        })
        .collect()
}

/// Leading `k` eigenpairs of the tridiagonal matrix with diagonal `d` and
/// off-diagonal `e`. Returns `None` when the a posteriori check fails, in
/// which case the caller should fall back to a full decomposition.
pub(crate) fn top_eigenpairs<T: Scalar>(d: &[T], e: &[T], k: usize) -> Option<TopPairs<T>> {
    let n = d.len();
    if k == 0 || k >= n || e.len() + 1 != n {
        return None;
    }
    let t = Tridiagonal::new(d, e);
    if !t.norm.is_finite() {
        return None;
    }
    let eps = T::epsilon();
    // descending
    let lambda: Vec<T> = (0..=k).map(|r| t.bisect(n - 1 - r)).collect();

    let cluster_gap = T::lit(1e-3) * t.norm;
    let mut vectors = DMatrix::<T>::zeros(n, k);
    let mut cluster_start = 0;
    let mut sigma_prev = T::zero();
    for r in 0..k {
        let mut sigma = lambda[r];
        if r > 0 {
            if lambda[r - 1] - lambda[r] > cluster_gap {
                cluster_start = r;
            }
            let pert = T::lit(10.0) * eps * sigma.abs().max(eps * t.norm);
            if sigma_prev - sigma < pert {
                sigma = sigma_prev - pert;
            }
        }
        sigma_prev = sigma;
        let lu = ShiftedLu::new(&t, sigma);
        let mut x = start_vector::<T>(n, r);
        normalize(&mut x);
        for _ in 0..INVERSE_ITERATIONS {
            lu.solve(&mut x);
            for c in cluster_start..r {
                let col = vectors.column(c);
                let dot = col.iter().zip(&x).fold(T::zero(), |s, (&a, &b)| s + a * b);
                for (xi, &ci) in x.iter_mut().zip(col.iter()) {
                    *xi -= dot * ci;
                }
            }
            if normalize(&mut x) == T::zero() {
                x = start_vector(n, r + n);
                normalize(&mut x);
            }
        }
        vectors.set_column(r, &nalgebra::DVector::from_vec(x));
    }

    // Rayleigh-Ritz on the computed subspace
    let q = vectors.qr().q();
    let mut tq = DMatrix::<T>::zeros(n, k);
    for c in 0..k {
        let col: Vec<T> = q.column(c).iter().copied().collect();
        let mut out = vec![T::zero(); n];
        t.apply(&col, &mut out);
        tq.set_column(c, &nalgebra::DVector::from_vec(out));
    }
    let h = q.tr_mul(&tq);
    let h = (&h + h.transpose()) * T::lit(0.5);
    let (theta, u) = T::symmetric_eigen(&h).ok()?;
    let order: Vec<usize> = (0..k).rev().collect();
    let u = DMatrix::from_fn(k, k, |i, j| u[(i, order[j])]);
    let ritz: Vec<T> = order.iter().map(|&j| theta[j]).collect();
    let v = &q * &u;
    let tv = &tq * &u;

    let tol = T::lit(100.0) * T::lit(n as f64).sqrt() * eps * t.norm.max(t.pivmin);
    for c in 0..k {
        let res = (tv.column(c) - v.column(c) * ritz[c]).norm();
        if !(res <= tol) || !((ritz[c] - lambda[c]).abs() <= tol) {
            return None;
        }
    }
    let mut values = ritz;
    values.push(lambda[k]);
    Some(TopPairs { values, vectors: v })
}
