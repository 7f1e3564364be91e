//! Complex Hermitian linear algebra used by estimation and beamforming:
//! diagonally loaded Cholesky solves, principal eigenvectors by power
//! iteration, and whitened generalized eigenproblems.
//!
//! All matrices here are small (up to ~80x80) and dense; every covariance
//! inversion in the crate goes through [`CholeskyFactor`] so that diagonal
//! loading and condition tracking are applied uniformly.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use num_complex::Complex64;

use crate::{Error, Result};

/// Relative diagonal load applied wherever a covariance is inverted.
/// Synthetic noiseless scenes can make covariances rank-deficient.
pub const DEFAULT_LOADING: f64 = 1e-8;

/// Power-iteration stopping tolerance on the Rayleigh quotient.
const EIGEN_TOL: f64 = 1e-10;
/// Power-iteration cap.
const EIGEN_MAX_ITER: usize = 500;
/// Relative conjugate-symmetry tolerance accepted by [`HermitianMatrix::new`].
const HERMITIAN_TOL: f64 = 1e-12;

/// Sum of `conj(a[i]) * b[i]`.
pub fn hermitian_dot(a: ArrayView1<Complex64>, b: ArrayView1<Complex64>) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Angle in radians between the one-dimensional subspaces spanned by `a` and
/// `b`: `acos(|a^H b| / (|a| |b|))`. Zero for parallel vectors regardless of
/// complex scaling.
pub fn hermitian_angle(a: ArrayView1<Complex64>, b: ArrayView1<Complex64>) -> f64 {
    let na = a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return std::f64::consts::FRAC_PI_2;
    }
    let cos = hermitian_dot(a, b).norm() / (na * nb);
    cos.clamp(0.0, 1.0).acos()
}

/// A square complex matrix validated (or constructed) to be conjugate
/// symmetric with finite entries.
#[derive(Debug, Clone)]
pub struct HermitianMatrix {
    data: Array2<Complex64>,
}

impl HermitianMatrix {
    /// Validates that `data` is square, finite, and conjugate symmetric
    /// within `1e-12` relative to its largest entry, then stores the
    /// symmetrized average `(A + A^H) / 2`.
    pub fn new(data: Array2<Complex64>) -> Result<Self> {
        let (r, c) = data.dim();
        if r != c {
            return Err(Error::Size(format!("matrix is {r}x{c}, expected square")));
        }
        let mut scale: f64 = 0.0;
        for v in data.iter() {
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::Numeric("non-finite matrix entry".into()));
            }
            scale = scale.max(v.norm());
        }
        for i in 0..r {
            for j in i..r {
                let asym = (data[(i, j)] - data[(j, i)].conj()).norm();
                if asym > HERMITIAN_TOL * scale.max(1e-300) {
                    return Err(Error::Numeric(format!(
                        "matrix not Hermitian at ({i},{j}): asymmetry {asym:.3e} vs scale {scale:.3e}"
                    )));
                }
            }
        }
        Ok(Self::symmetrized(data))
    }

    /// Forces conjugate symmetry by averaging `A` with its conjugate
    /// transpose. Intended for matrices that are Hermitian up to roundoff.
    pub fn symmetrized(mut data: Array2<Complex64>) -> Self {
        let n = data.nrows();
        for i in 0..n {
            data[(i, i)] = Complex64::new(data[(i, i)].re, 0.0);
            for j in (i + 1)..n {
                let avg = (data[(i, j)] + data[(j, i)].conj()) * 0.5;
                data[(i, j)] = avg;
                data[(j, i)] = avg.conj();
            }
        }
        Self { data }
    }

    /// Used by accumulation paths that fill both triangles exactly.
    pub(crate) fn trusted(data: Array2<Complex64>) -> Self {
        debug_assert_eq!(data.nrows(), data.ncols());
        Self { data }
    }

    pub fn identity(dim: usize) -> Self {
        Self { data: Array2::eye(dim) }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn as_array(&self) -> &Array2<Complex64> {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        self.data.diag().iter().map(|v| v.re).sum()
    }

    /// `A * x`.
    pub fn mul_vec(&self, x: ArrayView1<Complex64>) -> Array1<Complex64> {
        self.data.dot(&x)
    }
}

/// Lower-triangular Cholesky factor of a diagonally loaded Hermitian matrix.
///
/// The load is `loading * (trace(A) / dim)`, i.e. relative to the mean
/// diagonal, so an exactly zero matrix stays singular no matter the loading.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    lower: Array2<Complex64>,
}

impl CholeskyFactor {
    pub fn new(a: &HermitianMatrix, loading: f64) -> Result<Self> {
        let n = a.dim();
        let load = loading * a.trace() / n as f64;
        let mut lower = a.as_array().clone();
        for i in 0..n {
            lower[(i, i)] += Complex64::new(load, 0.0);
        }

        let mut max_pivot: f64 = 0.0;
        for j in 0..n {
            let mut d = lower[(j, j)].re;
            for k in 0..j {
                d -= lower[(j, k)].norm_sqr();
            }
            if !(d > 0.0) || !d.is_finite() {
                let condition = if d > 0.0 {
                    (max_pivot * max_pivot) / d
                } else {
                    f64::INFINITY
                };
                return Err(Error::SingularMatrix { condition });
            }
            let ljj = d.sqrt();
            max_pivot = max_pivot.max(ljj);
            lower[(j, j)] = Complex64::new(ljj, 0.0);
            for i in (j + 1)..n {
                let mut s = lower[(i, j)];
                for k in 0..j {
                    s -= lower[(i, k)] * lower[(j, k)].conj();
                }
                lower[(i, j)] = s / ljj;
            }
            // zero the strict upper triangle of the factor
            for i in 0..j {
                lower[(i, j)] = Complex64::new(0.0, 0.0);
            }
        }
        Ok(Self { lower })
    }

    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    /// Cheap condition estimate `(max diag(L) / min diag(L))^2`.
    pub fn condition_estimate(&self) -> f64 {
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for v in self.lower.diag().iter() {
            lo = lo.min(v.re);
            hi = hi.max(v.re);
        }
        (hi / lo).powi(2)
    }

    /// Solves `L y = b` in place.
    pub fn forward(&self, b: &mut Array1<Complex64>) {
        let n = self.dim();
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.lower[(i, k)] * b[k];
            }
            b[i] = s / self.lower[(i, i)].re;
        }
    }

    /// Solves `L^H x = y` in place.
    pub fn backward(&self, y: &mut Array1<Complex64>) {
        let n = self.dim();
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= self.lower[(k, i)].conj() * y[k];
            }
            y[i] = s / self.lower[(i, i)].re;
        }
    }

    /// Solves `(A + load) x = b`.
    pub fn solve_vec(&self, b: ArrayView1<Complex64>) -> Array1<Complex64> {
        let mut x = b.to_owned();
        self.forward(&mut x);
        self.backward(&mut x);
        x
    }

    /// Solves `(A + load) X = B` column by column.
    pub fn solve_columns(&self, b: ArrayView2<Complex64>) -> Array2<Complex64> {
        let mut out = b.to_owned();
        for mut col in out.columns_mut() {
            let mut x = col.to_owned();
            self.forward(&mut x);
            self.backward(&mut x);
            col.assign(&x);
        }
        out
    }
}

/// Solves `(A + loading * mean_diag * I) y = b` by Cholesky factorization.
pub fn solve_hermitian(
    a: &HermitianMatrix,
    b: ArrayView1<Complex64>,
    loading: f64,
) -> Result<Array1<Complex64>> {
    if a.dim() != b.len() {
        return Err(Error::Size(format!(
            "matrix dim {} does not match vector length {}",
            a.dim(),
            b.len()
        )));
    }
    Ok(CholeskyFactor::new(a, loading)?.solve_vec(b))
}

/// Deterministic pseudo-random start vector for the power iteration
/// (splitmix64 stream keyed by the dimension).
fn power_iteration_start(dim: usize) -> Array1<Complex64> {
    let mut state = 0x9e37_79b9_7f4a_7c15u64 ^ (dim as u64);
    let mut next = move || {
        state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z = z ^ (z >> 31);
        (z >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let mut v = Array1::zeros(dim);
    for x in v.iter_mut() {
        *x = Complex64::new(next(), next());
    }
    let norm = v.iter().map(|x: &Complex64| x.norm_sqr()).sum::<f64>().sqrt();
    v.mapv_into(|x| x / norm)
}

/// Fixes the phase so the entry of largest magnitude is real and positive
/// (first such entry on ties), making eigenvectors deterministic.
fn fix_phase(u: Array1<Complex64>) -> Array1<Complex64> {
    let mut best = 0usize;
    let mut best_mag = -1.0f64;
    for (i, v) in u.iter().enumerate() {
        let m = v.norm();
        if m > best_mag {
            best_mag = m;
            best = i;
        }
    }
    if best_mag > 0.0 {
        let phase = u[best].conj() / best_mag;
        u.mapv_into(|x| x * phase)
    } else {
        u
    }
}

/// Principal eigenpair of a Hermitian PSD matrix.
///
/// Power iteration with Rayleigh-quotient stopping (tolerance 1e-10,
/// 500-iteration cap) handles the usual dominant-eigenvalue case; matrices
/// with a clustered top of the spectrum (common in weak-speech bins, where
/// the whitened covariance is nearly a scaled identity) stall the power
/// iteration, so those fall back to an exact Jacobi sweep. Returns a
/// unit-norm eigenvector with the largest-magnitude entry fixed
/// real-positive, and the corresponding eigenvalue.
pub fn principal_eigenvector(a: &HermitianMatrix) -> Result<(Array1<Complex64>, f64)> {
    match power_iteration(a) {
        Ok(pair) => Ok(pair),
        Err(Error::Convergence { .. }) => {
            let (u, lambda) = jacobi_principal(a);
            Ok((fix_phase(u), lambda))
        }
        Err(e) => Err(e),
    }
}

/// Power iteration alone; errors with the iterate count at the cap.
pub fn power_iteration(a: &HermitianMatrix) -> Result<(Array1<Complex64>, f64)> {
    let mut u = power_iteration_start(a.dim());
    let mut lambda_prev = f64::INFINITY;
    for _ in 0..EIGEN_MAX_ITER {
        let w = a.mul_vec(u.view());
        let lambda = hermitian_dot(u.view(), w.view()).re;
        let scale = lambda.abs().max(f64::MIN_POSITIVE);
        let residual = (&w - &u.mapv(|x| x * lambda))
            .iter()
            .map(|x| x.norm_sqr())
            .sum::<f64>()
            .sqrt();
        if (lambda - lambda_prev).abs() <= EIGEN_TOL * scale && residual <= 1e-9 * scale {
            return Ok((fix_phase(u), lambda));
        }
        lambda_prev = lambda;
        let norm = w.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            // u is in the null space; it is an exact eigenvector for 0,
            // which is the largest eigenvalue only if A = 0.
            return Ok((fix_phase(u), 0.0));
        }
        u = w.mapv(|x| x / norm);
    }
    Err(Error::Convergence { iterations: EIGEN_MAX_ITER })
}

/// Exact principal eigenpair through cyclic Jacobi sweeps on the real
/// symmetric embedding `[[X, -Y], [Y, X]]` of `A = X + iY`. Each eigenpair
/// of `A` appears twice in the embedding; the eigenvector halves recombine
/// as `x + iy`. Only used for the small matrices the steering estimation
/// works with, where a full decomposition is cheap.
fn jacobi_principal(a: &HermitianMatrix) -> (Array1<Complex64>, f64) {
    let n = a.dim();
    let m = 2 * n;
    let mut s = vec![vec![0.0f64; m]; m];
    for i in 0..n {
        for j in 0..n {
            let v = a.as_array()[(i, j)];
            s[i][j] = v.re;
            s[i + n][j + n] = v.re;
            s[i][j + n] = -v.im;
            s[i + n][j] = v.im;
        }
    }
    let mut vecs = vec![vec![0.0f64; m]; m];
    for (i, row) in vecs.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let scale: f64 = s
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |acc, &v| acc.max(v.abs()))
        .max(1e-300);
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..m {
            for q in (p + 1)..m {
                off = off.max(s[p][q].abs());
            }
        }
        if off <= 1e-14 * scale {
            break;
        }
        for p in 0..m {
            for q in (p + 1)..m {
                if s[p][q].abs() <= 1e-16 * scale {
                    continue;
                }
                let tau = (s[q][q] - s[p][p]) / (2.0 * s[p][q]);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    1.0 / (tau - (1.0 + tau * tau).sqrt())
                };
                let cth = 1.0 / (1.0 + t * t).sqrt();
                let sth = t * cth;
                for k in 0..m {
                    let skp = s[k][p];
                    let skq = s[k][q];
                    s[k][p] = cth * skp - sth * skq;
                    s[k][q] = sth * skp + cth * skq;
                }
                for k in 0..m {
                    let spk = s[p][k];
                    let sqk = s[q][k];
                    s[p][k] = cth * spk - sth * sqk;
                    s[q][k] = sth * spk + cth * sqk;
                }
                for row in vecs.iter_mut() {
                    let vp = row[p];
                    let vq = row[q];
                    row[p] = cth * vp - sth * vq;
                    row[q] = sth * vp + cth * vq;
                }
            }
        }
    }
    let mut best = 0usize;
    for k in 1..m {
        if s[k][k] > s[best][best] {
            best = k;
        }
    }
    let mut u = Array1::zeros(n);
    for i in 0..n {
        u[i] = Complex64::new(vecs[i][best], vecs[i + n][best]);
    }
    let norm = u.iter().map(|x: &Complex64| x.norm_sqr()).sum::<f64>().sqrt();
    (u.mapv(|x| x / norm), s[best][best])
}

/// Result of [`whitened_gevd`]: the de-whitened principal generalized
/// eigenvector (unnormalized), its generalized eigenvalue, and the trace of
/// the whitened matrix (useful to judge how dominant the eigenvalue is).
#[derive(Debug, Clone)]
pub struct GevdResult {
    pub vector: Array1<Complex64>,
    pub eigenvalue: f64,
    pub whitened_trace: f64,
}

/// Principal generalized eigenvector of `(phi_x, phi_n)` by covariance
/// whitening: with `phi_n = L L^H`, computes the principal eigenvector `u`
/// of `L^-1 phi_x L^-H` and returns `v = L u`.
pub fn whitened_gevd(
    phi_x: &HermitianMatrix,
    phi_n: &HermitianMatrix,
    loading: f64,
) -> Result<GevdResult> {
    let n = phi_x.dim();
    if phi_n.dim() != n {
        return Err(Error::Size(format!(
            "covariance dims differ: {} vs {}",
            n,
            phi_n.dim()
        )));
    }
    let chol = CholeskyFactor::new(phi_n, loading)?;

    // S = L^-1 phi_x
    let mut s = phi_x.as_array().clone();
    for mut col in s.columns_mut() {
        let mut c = col.to_owned();
        chol.forward(&mut c);
        col.assign(&c);
    }
    // B = S L^-H  via  B^H = L^-1 S^H
    let mut bh = s.t().mapv(|x| x.conj());
    for mut col in bh.columns_mut() {
        let mut c = col.to_owned();
        chol.forward(&mut c);
        col.assign(&c);
    }
    let b = HermitianMatrix::symmetrized(bh.t().mapv(|x| x.conj()));
    let whitened_trace = b.trace();

    let (u, eigenvalue) = principal_eigenvector(&b)?;

    // de-whiten: v = L u
    let mut v = Array1::zeros(n);
    for i in 0..n {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..=i {
            acc += chol.lower[(i, k)] * u[k];
        }
        v[i] = acc;
    }
    Ok(GevdResult { vector: v, eigenvalue, whitened_trace })
}
