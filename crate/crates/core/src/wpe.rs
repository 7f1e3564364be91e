//! Weighted-prediction-error dereverberation: multichannel autoregressive
//! prediction with a delay, weighted by the inverse desired-signal power.
//!
//! Per bin, the prediction coefficients minimize
//! `sum_t ||x_t - W^H x~_t||^2 / sigma_t^2` where `x~_t` stacks the delayed
//! frames `x_{t-b} .. x_{t-Lw}`; dereverberation subtracts the prediction
//! from every channel, so beamformers can run on the output.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::estimation::PowerEstimate;
use crate::numerics::{CholeskyFactor, HermitianMatrix};
use crate::stft::MultichannelSpectrogram;
use crate::{Error, Result};

/// Per-bin prediction matrix: `taps` is `[M*K x M]` with K = order - delay + 1
/// tap blocks for delays `delay ..= order`.
#[derive(Debug, Clone)]
pub struct WpeFilter {
    pub taps: Array2<Complex64>,
    pub delay: usize,
    pub order: usize,
}

impl WpeFilter {
    pub fn zero(channels: usize, delay: usize, order: usize) -> Self {
        let k = order - delay + 1;
        Self { taps: Array2::zeros((channels * k, channels)), delay, order }
    }

    pub fn channels(&self) -> usize {
        self.taps.ncols()
    }

    pub fn tap_blocks(&self) -> usize {
        self.order - self.delay + 1
    }

    pub fn is_zero(&self) -> bool {
        self.taps.iter().all(|v| v.norm_sqr() == 0.0)
    }
}

/// One [`WpeFilter`] per frequency bin (orders may differ across bins).
#[derive(Debug, Clone)]
pub struct WpeFilterBank {
    pub filters: Vec<WpeFilter>,
}

/// Writes the delayed stack `[x_{t-delay}; ...; x_{t-order}]` for one bin
/// into `out`; frames before the start of the utterance are zero blocks.
pub(crate) fn fill_delayed_stack(
    bin: ArrayView2<Complex64>,
    t: usize,
    delay: usize,
    order: usize,
    out: &mut [Complex64],
) {
    let m = bin.ncols();
    debug_assert_eq!(out.len(), m * (order - delay + 1));
    for (block, tau) in (delay..=order).enumerate() {
        let dst = &mut out[block * m..(block + 1) * m];
        if t >= tau {
            let src = bin.row(t - tau);
            for (d, s) in dst.iter_mut().zip(src.iter()) {
                *d = *s;
            }
        } else {
            dst.fill(Complex64::new(0.0, 0.0));
        }
    }
}

/// Delayed regressor stack for frame `t` of bin `f`:
/// `[x_{t-delay}; x_{t-delay-1}; ...; x_{t-order}]`, zero-padded where
/// `t - tau < 0`.
pub fn build_delayed_stack(
    spec: &MultichannelSpectrogram,
    t: usize,
    f: usize,
    delay: usize,
    order: usize,
) -> Array1<Complex64> {
    assert!(delay >= 1 && order >= delay, "need 1 <= delay <= order");
    let bin = spec.bin_frames(f);
    let mut out = Array1::zeros(bin.ncols() * (order - delay + 1));
    fill_delayed_stack(bin.view(), t, delay, order, out.as_slice_mut().unwrap());
    out
}

/// Estimates the prediction matrix for one bin (`bin` is `[frames x channels]`,
/// `sigma2` the per-frame weights) by solving the weighted normal equations
/// `P W = p` with `P = sum x~ x~^H / sigma^2`, `p = sum x~ x^H / sigma^2`.
///
/// An all-zero accumulation (no usable regressors, e.g. utterances shorter
/// than the prediction delay) yields the zero filter, which minimizes the
/// objective there.
pub fn estimate_wpe_filter_bin(
    bin: ArrayView2<Complex64>,
    sigma2: ArrayView1<f64>,
    delay: usize,
    order: usize,
    loading: f64,
) -> Result<WpeFilter> {
    if delay < 1 || order < delay {
        return Err(Error::Usage(format!(
            "prediction delay {delay} and order {order} must satisfy 1 <= delay <= order"
        )));
    }
    let (frames, m) = bin.dim();
    if sigma2.len() != frames {
        return Err(Error::Size(format!(
            "power estimate has {} frames, bin has {frames}",
            sigma2.len()
        )));
    }
    let k = order - delay + 1;
    let dim = m * k;
    let mut p_mat = Array2::<Complex64>::zeros((dim, dim));
    let mut rhs = Array2::<Complex64>::zeros((dim, m));
    let mut stack = vec![Complex64::new(0.0, 0.0); dim];

    for t in delay..frames {
        fill_delayed_stack(bin, t, delay, order, &mut stack);
        let w = 1.0 / sigma2[t];
        for j in 0..dim {
            let sj = stack[j].conj() * w;
            if sj.norm_sqr() == 0.0 {
                continue;
            }
            for i in j..dim {
                p_mat[(i, j)] += stack[i] * sj;
            }
        }
        for mi in 0..m {
            let xw = bin[(t, mi)].conj() * w;
            for i in 0..dim {
                rhs[(i, mi)] += stack[i] * xw;
            }
        }
    }
    for j in 0..dim {
        for i in (j + 1)..dim {
            p_mat[(j, i)] = p_mat[(i, j)].conj();
        }
    }

    let p = HermitianMatrix::trusted(p_mat);
    if p.trace() == 0.0 {
        return Ok(WpeFilter::zero(m, delay, order));
    }
    let chol = CholeskyFactor::new(&p, loading)?;
    let taps = chol.solve_columns(rhs.view());
    Ok(WpeFilter { taps, delay, order })
}

/// Estimates one filter per bin; `orders[f]` gives the band-dependent
/// regression order for bin `f`.
pub fn estimate_wpe_filters(
    spec: &MultichannelSpectrogram,
    power: &PowerEstimate,
    delay: usize,
    orders: &[usize],
    loading: f64,
) -> Result<WpeFilterBank> {
    let bins = spec.bins();
    if orders.len() != bins {
        return Err(Error::Size(format!(
            "order table has {} entries, spectrogram has {bins} bins",
            orders.len()
        )));
    }
    if power.frames() != spec.frames() || power.bins() != bins {
        return Err(Error::Size("power estimate does not match spectrogram".into()));
    }
    let filters: Vec<Result<WpeFilter>> = (0..bins)
        .into_par_iter()
        .map(|f| {
            let bin = spec.bin_frames(f);
            estimate_wpe_filter_bin(bin.view(), power.sigma2.column(f), delay, orders[f], loading)
        })
        .collect();
    let filters = filters.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(WpeFilterBank { filters })
}

/// Dereverberates every channel: `d_t = x_t - W^H x~_t`.
pub fn apply_wpe(
    spec: &MultichannelSpectrogram,
    bank: &WpeFilterBank,
) -> Result<MultichannelSpectrogram> {
    let (m, frames, bins) = spec.coeffs.dim();
    if bank.filters.len() != bins {
        return Err(Error::Size(format!(
            "filter bank has {} bins, spectrogram has {bins}",
            bank.filters.len()
        )));
    }
    let mut out = spec.clone();
    let columns: Vec<Array2<Complex64>> = (0..bins)
        .into_par_iter()
        .map(|f| {
            let filter = &bank.filters[f];
            let bin = spec.bin_frames(f);
            let mut d = bin.clone();
            if !filter.is_zero() {
                let dim = filter.taps.nrows();
                let mut stack = vec![Complex64::new(0.0, 0.0); dim];
                for t in filter.delay..frames {
                    fill_delayed_stack(bin.view(), t, filter.delay, filter.order, &mut stack);
                    for mi in 0..m {
                        let mut pred = Complex64::new(0.0, 0.0);
                        for i in 0..dim {
                            pred += filter.taps[(i, mi)].conj() * stack[i];
                        }
                        d[(t, mi)] -= pred;
                    }
                }
            }
            d
        })
        .collect();
    for (f, d) in columns.into_iter().enumerate() {
        for t in 0..frames {
            for mi in 0..m {
                out.coeffs[(mi, t, f)] = d[(t, mi)];
            }
        }
    }
    Ok(out)
}

/// Weighted prediction-error power per bin:
/// `sum_t ||x_t - W^H x~_t||^2 / sigma_t^2` evaluated on `spec`.
pub fn prediction_objective(
    spec: &MultichannelSpectrogram,
    bank: &WpeFilterBank,
    power: &PowerEstimate,
) -> Result<Vec<f64>> {
    let dereverbed = apply_wpe(spec, bank)?;
    let (m, frames, bins) = dereverbed.coeffs.dim();
    let mut out = vec![0.0; bins];
    for f in 0..bins {
        let mut acc = 0.0;
        for t in 0..frames {
            let mut e = 0.0;
            for mi in 0..m {
                e += dereverbed.coeffs[(mi, t, f)].norm_sqr();
            }
            acc += e / power.sigma2[(t, f)];
        }
        out[f] = acc;
    }
    Ok(out)
}
