//! MPDR beamforming, the unified WPD convolutional beamformer, and cascade
//! composition.
//!
//! WPD minimizes the power-weighted output energy `sum_t |w^H x_t|^2 /
//! sigma_t^2` of the stacked vector `x_t = [x_t; x_{t-b}; ...; x_{t-Lw}]`
//! under the distortionless constraint on the instantaneous block, with the
//! closed form `w = R^-1 v / (v^H R^-1 v)` over the power-normalized
//! temporal-spatial covariance `R`. A WPE+MPDR cascade composes into a
//! filter of the same shape, so it lies in WPD's feasible set and can never
//! beat it on the shared objective.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use num_complex::Complex64;

use crate::estimation::{PowerEstimate, SteeringVector};
use crate::numerics::{hermitian_dot, CholeskyFactor, HermitianMatrix};
use crate::stft::MultichannelSpectrogram;
use crate::wpe::{fill_delayed_stack, WpeFilter};
use crate::{Error, Result};

/// Per-bin stacked filter `[w_0; w_b; ...; w_Lw]` of length
/// `channels * (order - delay + 2)`. `order = delay - 1` encodes a filter
/// with no convolutional taps (a plain instantaneous beamformer).
#[derive(Debug, Clone)]
pub struct ConvolutionalFilter {
    pub weights: Array1<Complex64>,
    pub delay: usize,
    pub order: usize,
    pub channels: usize,
}

impl ConvolutionalFilter {
    pub fn dim(&self) -> usize {
        self.channels * (self.order + 2 - self.delay)
    }

    /// The instantaneous tap `w_0` (first `channels` entries).
    pub fn instantaneous(&self) -> ArrayView1<'_, Complex64> {
        self.weights.slice(ndarray::s![..self.channels])
    }

    pub fn tap_blocks(&self) -> usize {
        self.order + 1 - self.delay
    }
}

/// One [`ConvolutionalFilter`] per bin, with per-bin solve condition
/// estimates (NaN where the covariance was degenerate and the minimum-norm
/// feasible filter was used).
#[derive(Debug, Clone)]
pub struct ConvolutionalFilterBank {
    pub filters: Vec<ConvolutionalFilter>,
    pub condition: Vec<f64>,
}

/// Per-bin instantaneous beamformer weights `[bins x channels]`.
#[derive(Debug, Clone)]
pub struct InstantaneousFilterBank {
    pub weights: Array2<Complex64>,
    pub condition: Vec<f64>,
}

/// Writes `[x_t; x_{t-delay}; ...; x_{t-order}]` into `out`.
pub(crate) fn fill_wpd_stack(
    bin: ArrayView2<Complex64>,
    t: usize,
    delay: usize,
    order: usize,
    out: &mut [Complex64],
) {
    let m = bin.ncols();
    for (dst, src) in out[..m].iter_mut().zip(bin.row(t).iter()) {
        *dst = *src;
    }
    if order + 1 > delay {
        fill_delayed_stack(bin, t, delay, order, &mut out[m..]);
    }
}

/// Stacked observation `[x_t; x_{t-delay}; ...; x_{t-order}]` for frame `t`
/// of bin `f`, zero-padded where `t - tau < 0`.
pub fn build_wpd_stack(
    spec: &MultichannelSpectrogram,
    t: usize,
    f: usize,
    delay: usize,
    order: usize,
) -> Array1<Complex64> {
    assert!(delay >= 1, "prediction delay must be at least 1");
    let bin = spec.bin_frames(f);
    let m = bin.ncols();
    let mut out = Array1::zeros(m * (order + 2 - delay));
    fill_wpd_stack(bin.view(), t, delay, order, out.as_slice_mut().unwrap());
    out
}

/// Extends a steering vector with `channels * (order - delay + 1)` zeros so
/// the distortionless constraint touches only the instantaneous tap.
pub fn extended_steering(
    v: ArrayView1<Complex64>,
    delay: usize,
    order: usize,
) -> Array1<Complex64> {
    let m = v.len();
    let mut out = Array1::zeros(m * (order + 2 - delay));
    out.slice_mut(ndarray::s![..m]).assign(&v);
    out
}

/// Power-normalized temporal-spatial covariance with a prediction delay for
/// one bin: `R = sum_t stack_t stack_t^H / sigma_t^2`. With
/// `order = delay - 1` this reduces to the weighted spatial covariance; pass
/// unit weights for the plain (unweighted) spatial covariance.
pub fn assemble_covariance_bin(
    bin: ArrayView2<Complex64>,
    sigma2: ArrayView1<f64>,
    delay: usize,
    order: usize,
) -> HermitianMatrix {
    let (frames, m) = bin.dim();
    let dim = m * (order + 2 - delay);
    let mut r = Array2::<Complex64>::zeros((dim, dim));
    let mut stack = vec![Complex64::new(0.0, 0.0); dim];
    for t in 0..frames {
        fill_wpd_stack(bin, t, delay, order, &mut stack);
        let w = 1.0 / sigma2[t];
        for j in 0..dim {
            let sj = stack[j].conj() * w;
            if sj.norm_sqr() == 0.0 {
                continue;
            }
            for i in j..dim {
                r[(i, j)] += stack[i] * sj;
            }
        }
    }
    for j in 0..dim {
        for i in (j + 1)..dim {
            r[(j, i)] = r[(i, j)].conj();
        }
    }
    HermitianMatrix::trusted(r)
}

/// Closed-form WPD solve for one bin: `w = R^-1 v / (v^H R^-1 v)` with the
/// zero-extended steering vector. Returns the filter and a condition
/// estimate of the loaded covariance.
///
/// An exactly zero covariance (no data) yields the minimum-norm feasible
/// filter `v / ||v||^2` with a NaN condition estimate.
pub fn solve_wpd(
    cov: &HermitianMatrix,
    v: ArrayView1<Complex64>,
    delay: usize,
    order: usize,
    loading: f64,
) -> Result<(ConvolutionalFilter, f64)> {
    let m = v.len();
    let dim = m * (order + 2 - delay);
    if cov.dim() != dim {
        return Err(Error::Size(format!(
            "covariance dim {} does not match filter dim {dim}",
            cov.dim()
        )));
    }
    let v_bar = extended_steering(v, delay, order);
    if cov.trace() == 0.0 {
        let norm_sq: f64 = v_bar.iter().map(|x| x.norm_sqr()).sum();
        let weights = v_bar.mapv(|x| x / norm_sq);
        return Ok((
            ConvolutionalFilter { weights, delay, order, channels: m },
            f64::NAN,
        ));
    }
    let chol = CholeskyFactor::new(cov, loading)?;
    let y = chol.solve_vec(v_bar.view());
    let denom = hermitian_dot(v_bar.view(), y.view());
    if denom.norm() == 0.0 || !denom.norm().is_finite() {
        return Err(Error::SingularMatrix { condition: chol.condition_estimate() });
    }
    let weights = y.mapv(|x| x / denom);
    Ok((
        ConvolutionalFilter { weights, delay, order, channels: m },
        chol.condition_estimate(),
    ))
}

/// MPDR solve for one bin over a spatial covariance: `w0 = R^-1 v / (v^H
/// R^-1 v)`. Implemented as the zero-tap special case of [`solve_wpd`].
pub fn solve_mpdr_bin(
    cov: &HermitianMatrix,
    v: ArrayView1<Complex64>,
    loading: f64,
) -> Result<(Array1<Complex64>, f64)> {
    let (filter, condition) = solve_wpd(cov, v, 1, 0, loading)?;
    Ok((filter.weights, condition))
}

/// Estimates the MPDR beamformer for every bin. The covariance is
/// unweighted by default; supplying `weights` gives the power-weighted
/// variant that WPD reduces to with zero convolutional taps.
pub fn estimate_mpdr(
    spec: &MultichannelSpectrogram,
    steering: &SteeringVector,
    weights: Option<&PowerEstimate>,
    loading: f64,
) -> Result<InstantaneousFilterBank> {
    let bins = spec.bins();
    let m = spec.channels();
    if steering.bins() != bins || steering.channels() != m {
        return Err(Error::Size("steering vector does not match spectrogram".into()));
    }
    let frames = spec.frames();
    let ones = Array1::from_elem(frames, 1.0);
    let mut out = Array2::zeros((bins, m));
    let mut condition = vec![f64::NAN; bins];
    for f in 0..bins {
        let bin = spec.bin_frames(f);
        let sigma2 = match weights {
            Some(p) => p.sigma2.column(f).to_owned(),
            None => ones.clone(),
        };
        let cov = assemble_covariance_bin(bin.view(), sigma2.view(), 1, 0);
        let (w0, cond) = solve_mpdr_bin(&cov, steering.bin(f), loading)?;
        out.row_mut(f).assign(&w0);
        condition[f] = cond;
    }
    Ok(InstantaneousFilterBank { weights: out, condition })
}

/// Applies an instantaneous beamformer: `d_t = w0^H x_t` per bin.
pub fn apply_instantaneous(
    spec: &MultichannelSpectrogram,
    bank: &InstantaneousFilterBank,
) -> Array2<Complex64> {
    let (m, frames, bins) = spec.coeffs.dim();
    assert_eq!(bank.weights.nrows(), bins);
    let mut out = Array2::zeros((frames, bins));
    for f in 0..bins {
        for t in 0..frames {
            let mut acc = Complex64::new(0.0, 0.0);
            for mi in 0..m {
                acc += bank.weights[(f, mi)].conj() * spec.coeffs[(mi, t, f)];
            }
            out[(t, f)] = acc;
        }
    }
    out
}

/// Applies a convolutional filter bank: `d_t = w^H [x_t; x_{t-b}; ...]`.
pub fn apply_wpd(
    spec: &MultichannelSpectrogram,
    bank: &ConvolutionalFilterBank,
) -> Array2<Complex64> {
    let (_, frames, bins) = spec.coeffs.dim();
    assert_eq!(bank.filters.len(), bins);
    let mut out = Array2::zeros((frames, bins));
    for f in 0..bins {
        let filter = &bank.filters[f];
        let bin = spec.bin_frames(f);
        let dim = filter.dim();
        let mut stack = vec![Complex64::new(0.0, 0.0); dim];
        for t in 0..frames {
            fill_wpd_stack(bin.view(), t, filter.delay, filter.order, &mut stack);
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..dim {
                acc += filter.weights[i].conj() * stack[i];
            }
            out[(t, f)] = acc;
        }
    }
    out
}

/// Composes a WPE prediction filter and an instantaneous beamformer into a
/// single convolutional filter: first block `w0`, tap blocks
/// `w_tau = -W_tau w0`. Applying the result to the stacked input reproduces
/// beamforming after dereverberation exactly.
pub fn compose_cascade(wpe: &WpeFilter, w0: ArrayView1<Complex64>) -> ConvolutionalFilter {
    let m = wpe.channels();
    assert_eq!(w0.len(), m, "beamformer channel count mismatch");
    let blocks = wpe.tap_blocks();
    let mut weights = Array1::zeros(m * (blocks + 1));
    weights.slice_mut(ndarray::s![..m]).assign(&w0);
    for block in 0..blocks {
        for i in 0..m {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..m {
                acc += wpe.taps[(block * m + i, j)] * w0[j];
            }
            weights[m + block * m + i] = -acc;
        }
    }
    ConvolutionalFilter { weights, delay: wpe.delay, order: wpe.order, channels: m }
}

/// Weighted output power per bin: `sum_t |d_t|^2 / sigma_t^2`.
pub fn weighted_output_power(output: &Array2<Complex64>, power: &PowerEstimate) -> Vec<f64> {
    let (frames, bins) = output.dim();
    assert_eq!(power.sigma2.dim(), (frames, bins));
    (0..bins)
        .map(|f| {
            (0..frames)
                .map(|t| output[(t, f)].norm_sqr() / power.sigma2[(t, f)])
                .sum()
        })
        .collect()
}

/// `|w^H v_ext - 1|` for a convolutional filter against its steering vector.
pub fn constraint_residual(filter: &ConvolutionalFilter, v: ArrayView1<Complex64>) -> f64 {
    let v_bar = extended_steering(v, filter.delay, filter.order);
    (hermitian_dot(filter.weights.view(), v_bar.view()) - Complex64::new(1.0, 0.0)).norm()
}
