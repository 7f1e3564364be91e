//! Estimation of the two quantities every filter consumes: the time-varying
//! desired-signal power and the per-bin steering vector.
//!
//! Steering vectors are estimated by generalized eigenvalue decomposition
//! with covariance whitening against a noise covariance taken from the
//! noise-only head/tail periods of the utterance, then normalized to a
//! relative transfer function (unit value at the reference channel).

use ndarray::Array2;
use num_complex::Complex64;

use crate::numerics::{whitened_gevd, HermitianMatrix};
use crate::stft::MultichannelSpectrogram;
use crate::{Error, Result};

/// Relative floor applied to per-bin power estimates. The weighted-power
/// objectives divide by sigma^2, so estimates must stay strictly positive.
pub const POWER_FLOOR_EPS: f64 = 1e-6;

/// Strictly positive per-(frame, bin) desired-signal power.
#[derive(Debug, Clone)]
pub struct PowerEstimate {
    /// `[frames x bins]`, floored at `floor_eps` times the per-bin mean.
    pub sigma2: Array2<f64>,
    pub floor_eps: f64,
}

impl PowerEstimate {
    /// Floors `raw` per bin at `floor_eps * mean(raw[., f])`, falling back to
    /// the global mean (and finally to `floor_eps` itself) for all-zero bins
    /// so the result is strictly positive even for silent input.
    fn from_raw(mut raw: Array2<f64>) -> Self {
        let (frames, bins) = raw.dim();
        let global_mean = raw.iter().sum::<f64>() / (frames * bins) as f64;
        for f in 0..bins {
            let mean = raw.column(f).sum() / frames as f64;
            let base = if mean > 0.0 {
                mean
            } else if global_mean > 0.0 {
                global_mean
            } else {
                1.0
            };
            let floor = POWER_FLOOR_EPS * base;
            for t in 0..frames {
                if raw[(t, f)] < floor {
                    raw[(t, f)] = floor;
                }
            }
        }
        Self { sigma2: raw, floor_eps: POWER_FLOOR_EPS }
    }

    pub fn frames(&self) -> usize {
        self.sigma2.nrows()
    }

    pub fn bins(&self) -> usize {
        self.sigma2.ncols()
    }
}

/// Initial power estimate: the channel-averaged captured power
/// `(1/M) sum_m |x_t^(m)|^2`, floored.
pub fn initial_power(spec: &MultichannelSpectrogram) -> PowerEstimate {
    let (m, t, f) = spec.coeffs.dim();
    let mut raw = Array2::zeros((t, f));
    for mi in 0..m {
        for ti in 0..t {
            for fi in 0..f {
                raw[(ti, fi)] += spec.coeffs[(mi, ti, fi)].norm_sqr();
            }
        }
    }
    raw /= m as f64;
    PowerEstimate::from_raw(raw)
}

/// Power update from a single-channel enhanced estimate: `|d_hat|^2`, floored.
pub fn update_power_from_estimate(d_hat: &Array2<Complex64>) -> PowerEstimate {
    PowerEstimate::from_raw(d_hat.mapv(|v| v.norm_sqr()))
}

/// Per-bin noise spatial covariance from frames whose sample span lies
/// entirely inside the leading `head_ms` or trailing `tail_ms` of the
/// utterance (both intervals must contribute at least one frame).
pub fn noise_covariance_from_edges(
    spec: &MultichannelSpectrogram,
    head_ms: f64,
    tail_ms: f64,
) -> Result<Vec<HermitianMatrix>> {
    let frames = noise_edge_frames(spec, head_ms, tail_ms)?;
    Ok(covariance_over_frames(spec, &frames))
}

/// Indices of frames fully contained in the noise-only edges.
pub fn noise_edge_frames(
    spec: &MultichannelSpectrogram,
    head_ms: f64,
    tail_ms: f64,
) -> Result<Vec<usize>> {
    let rate = spec.config.sample_rate as f64;
    let n = spec.source_len;
    let head_samples = (head_ms * rate / 1000.0).round() as usize;
    let tail_start = n.saturating_sub((tail_ms * rate / 1000.0).round() as usize);

    let mut head = Vec::new();
    let mut tail = Vec::new();
    for t in 0..spec.frames() {
        let (start, end) = spec.frame_span(t);
        if end <= head_samples {
            head.push(t);
        } else if start >= tail_start {
            tail.push(t);
        }
    }
    if head.is_empty() {
        return Err(Error::Estimation(format!(
            "no frame fits inside the {head_ms} ms noise-only head interval"
        )));
    }
    if tail.is_empty() {
        return Err(Error::Estimation(format!(
            "no frame fits inside the {tail_ms} ms noise-only tail interval"
        )));
    }
    head.extend_from_slice(&tail);
    Ok(head)
}

/// Per-bin mean outer product `x_t x_t^H` over the given frames.
fn covariance_over_frames(
    spec: &MultichannelSpectrogram,
    frames: &[usize],
) -> Vec<HermitianMatrix> {
    let m = spec.channels();
    let scale = 1.0 / frames.len() as f64;
    (0..spec.bins())
        .map(|f| {
            let mut cov = Array2::<Complex64>::zeros((m, m));
            for &t in frames {
                for i in 0..m {
                    let xi = spec.coeffs[(i, t, f)];
                    for j in 0..=i {
                        cov[(i, j)] += xi * spec.coeffs[(j, t, f)].conj();
                    }
                }
            }
            for i in 0..m {
                cov[(i, i)] = Complex64::new(cov[(i, i)].re * scale, 0.0);
                for j in 0..i {
                    cov[(i, j)] *= scale;
                    cov[(j, i)] = cov[(i, j)].conj();
                }
            }
            HermitianMatrix::trusted(cov)
        })
        .collect()
}

/// Per-bin RTF-normalized steering vectors: `v[q] = 1` exactly.
#[derive(Debug, Clone)]
pub struct SteeringVector {
    /// `[bins x channels]`.
    pub vectors: Array2<Complex64>,
    pub reference: usize,
    /// Bins whose whitened spectrum had no clearly dominant eigenvalue.
    pub low_confidence: Vec<bool>,
}

impl SteeringVector {
    pub fn bins(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn channels(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn bin(&self, f: usize) -> ndarray::ArrayView1<'_, Complex64> {
        self.vectors.row(f)
    }
}

/// Estimates the steering vector per bin as the de-whitened principal
/// generalized eigenvector of (speech covariance over all frames, noise
/// covariance), RTF-normalized at channel `reference`.
///
/// Bins with an exactly zero noise covariance (synthetic noiseless scenes)
/// are whitened by the identity instead, which reduces the estimate to the
/// principal eigenvector of the observation covariance.
pub fn estimate_steering(
    spec: &MultichannelSpectrogram,
    noise_cov: &[HermitianMatrix],
    reference: usize,
    loading: f64,
) -> Result<SteeringVector> {
    let m = spec.channels();
    let bins = spec.bins();
    if noise_cov.len() != bins {
        return Err(Error::Size(format!(
            "noise covariance has {} bins, spectrogram has {bins}",
            noise_cov.len()
        )));
    }
    if reference >= m {
        return Err(Error::Usage(format!(
            "reference channel {reference} out of range for {m} channels"
        )));
    }

    let all_frames: Vec<usize> = (0..spec.frames()).collect();
    let phi_x = covariance_over_frames(spec, &all_frames);

    let mut vectors = Array2::zeros((bins, m));
    let mut low_confidence = vec![false; bins];

    for f in 0..bins {
        // Nearly noiseless utterances leave the edge covariance tiny and
        // rank-deficient (the silent head contributes zero frames), which
        // would blow up the whitening along its null space. A sensor-noise
        // floor 60 dB below the observation scale regularizes that case and
        // is negligible against any real noise estimate; an exactly silent
        // utterance reduces to identity whitening.
        let obs_floor = 1e-6 * (phi_x[f].trace() / m as f64).max(f64::MIN_POSITIVE);
        let mut phi_n_reg = noise_cov[f].as_array().clone();
        for i in 0..m {
            phi_n_reg[(i, i)] += Complex64::new(obs_floor, 0.0);
        }
        let phi_n = HermitianMatrix::trusted(phi_n_reg);
        let g = whitened_gevd(&phi_x[f], &phi_n, loading)
            .map_err(|e| Error::Estimation(format!("steering at bin {f}: {e}")))?;

        let norm = g.vector.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let vq = g.vector[reference];
        if vq.norm() < 1e-12 * norm {
            return Err(Error::Estimation(format!(
                "degenerate reference channel {reference} at bin {f}: \
                 |v[q]| = {:.3e} vs |v| = {norm:.3e}",
                vq.norm()
            )));
        }
        let mut v = g.vector.mapv(|x| x / vq);
        v[reference] = Complex64::new(1.0, 0.0);
        vectors.row_mut(f).assign(&v);

        // dominance heuristic: eigenvalue barely above the whitened average
        low_confidence[f] = g.eigenvalue * m as f64 <= 1.2 * g.whitened_trace;
    }

    Ok(SteeringVector { vectors, reference, low_confidence })
}
