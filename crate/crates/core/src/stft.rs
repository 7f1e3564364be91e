//! Short-time Fourier analysis and weighted-overlap-add synthesis.
//!
//! Analysis uses a periodic Hann window with no FFT zero-padding; frame `t`
//! covers input samples `[t*hop, t*hop + frame_len)`, so T = 1 + floor((N -
//! frame_len)/hop). Synthesis applies the same window again and divides by
//! the accumulated squared-window sum, which is the constant `3K/8` (K =
//! frame_len/hop) on the fully overlapped interior; reconstruction there is
//! exact to machine precision, while up to `frame_len` samples at each edge
//! are only partially covered. The output is sized back to the analyzed
//! signal length.

use ndarray::{Array1, Array2, Array3};
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::audio_io::AudioBuffer;
use crate::{Error, Result};

/// Analysis/synthesis parameters. The window is always periodic Hann.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StftConfig {
    pub frame_len: usize,
    pub hop: usize,
    pub sample_rate: u32,
}

impl StftConfig {
    /// Requires an even frame length divisible by the hop with at least 3x
    /// overlap so the squared Hann windows sum to a constant.
    pub fn new(frame_len: usize, hop: usize, sample_rate: u32) -> Result<Self> {
        if frame_len < 4 || frame_len % 2 != 0 {
            return Err(Error::Usage(format!(
                "frame length {frame_len} must be even and at least 4"
            )));
        }
        if hop == 0 || frame_len % hop != 0 || frame_len / hop < 3 {
            return Err(Error::Usage(format!(
                "hop {hop} must divide frame length {frame_len} with at least 3x overlap \
                 for constant overlap-add of the squared Hann window"
            )));
        }
        if sample_rate == 0 {
            return Err(Error::Usage("sample rate must be positive".into()));
        }
        Ok(Self { frame_len, hop, sample_rate })
    }

    /// 32 ms frames with an 8 ms shift at the given rate (512/128 at 16 kHz).
    pub fn for_sample_rate(sample_rate: u32) -> Result<Self> {
        let frame_len = (0.032 * sample_rate as f64).round() as usize;
        let hop = (0.008 * sample_rate as f64).round() as usize;
        Self::new(frame_len, hop, sample_rate)
    }

    /// Number of one-sided frequency bins, `frame_len/2 + 1`.
    pub fn bins(&self) -> usize {
        self.frame_len / 2 + 1
    }

    /// Center frequency of bin `f` in Hz.
    pub fn bin_hz(&self, f: usize) -> f64 {
        f as f64 * self.sample_rate as f64 / self.frame_len as f64
    }

    /// Frame count for a signal of `n` samples.
    pub fn frame_count(&self, n: usize) -> Result<usize> {
        if n < self.frame_len {
            return Err(Error::Size(format!(
                "signal of {n} samples is shorter than one frame ({})",
                self.frame_len
            )));
        }
        Ok(1 + (n - self.frame_len) / self.hop)
    }

    /// Squared-window overlap-add constant on the interior: `0.375 * K`
    /// for the periodic Hann window, K = frame_len/hop.
    pub fn wola_constant(&self) -> f64 {
        0.375 * (self.frame_len / self.hop) as f64
    }

    /// Number of leading/trailing frames without full overlap coverage.
    pub fn edge_frames(&self) -> usize {
        self.frame_len / self.hop - 1
    }
}

/// Periodic Hann window of length `len`.
pub fn hann_window(len: usize) -> Array1<f64> {
    Array1::from_shape_fn(len, |n| {
        0.5 * (1.0 - (2.0 * std::f64::consts::PI * n as f64 / len as f64).cos())
    })
}

/// Complex STFT coefficients indexed `(channel, frame, bin)`.
#[derive(Debug, Clone)]
pub struct MultichannelSpectrogram {
    pub coeffs: Array3<Complex64>,
    pub config: StftConfig,
    /// Length of the analyzed signal; synthesis restores exactly this many
    /// samples per channel.
    pub source_len: usize,
}

impl MultichannelSpectrogram {
    pub fn channels(&self) -> usize {
        self.coeffs.dim().0
    }

    pub fn frames(&self) -> usize {
        self.coeffs.dim().1
    }

    pub fn bins(&self) -> usize {
        self.coeffs.dim().2
    }

    /// All frames of one bin as a `[frames x channels]` matrix (copied out
    /// contiguously for per-bin hot loops).
    pub fn bin_frames(&self, f: usize) -> Array2<Complex64> {
        let (m, t, _) = self.coeffs.dim();
        Array2::from_shape_fn((t, m), |(ti, mi)| self.coeffs[(mi, ti, f)])
    }

    /// Frames lacking full window overlap (candidates for exclusion in
    /// reconstruction-sensitive measurements).
    pub fn is_edge_frame(&self, t: usize) -> bool {
        let e = self.config.edge_frames();
        t < e || t + e >= self.frames()
    }

    /// Sample span `[start, end)` of frame `t` in the source signal.
    pub fn frame_span(&self, t: usize) -> (usize, usize) {
        let start = t * self.config.hop;
        (start, start + self.config.frame_len)
    }
}

/// Windowed one-sided STFT of every channel.
pub fn analyze(buf: &AudioBuffer, cfg: &StftConfig) -> Result<MultichannelSpectrogram> {
    if buf.sample_rate != cfg.sample_rate {
        return Err(Error::Size(format!(
            "buffer sample rate {} does not match config rate {}",
            buf.sample_rate, cfg.sample_rate
        )));
    }
    let n = buf.len();
    let frames = cfg.frame_count(n)?;
    let bins = cfg.bins();
    let window = hann_window(cfg.frame_len);

    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(cfg.frame_len);
    let mut coeffs = Array3::zeros((buf.channels(), frames, bins));
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut frame = vec![Complex64::new(0.0, 0.0); cfg.frame_len];

    for ch in 0..buf.channels() {
        for t in 0..frames {
            let start = t * cfg.hop;
            for (i, slot) in frame.iter_mut().enumerate() {
                *slot = Complex64::new(buf.samples[(ch, start + i)] * window[i], 0.0);
            }
            fft.process_with_scratch(&mut frame, &mut scratch);
            for f in 0..bins {
                coeffs[(ch, t, f)] = frame[f];
            }
        }
    }

    Ok(MultichannelSpectrogram { coeffs, config: cfg.clone(), source_len: n })
}

/// Weighted-overlap-add synthesis of a single channel's `[frames x bins]`
/// coefficients back to `source_len` samples.
pub fn synthesize_frames(
    frames: &Array2<Complex64>,
    cfg: &StftConfig,
    source_len: usize,
) -> Array1<f64> {
    let (t_count, bins) = frames.dim();
    assert_eq!(bins, cfg.bins(), "bin count does not match config");
    let n_fft = cfg.frame_len;
    let window = hann_window(n_fft);

    let mut planner = FftPlanner::<f64>::new();
    let ifft = planner.plan_fft_inverse(n_fft);
    let mut scratch = vec![Complex64::new(0.0, 0.0); ifft.get_inplace_scratch_len()];
    let mut spectrum = vec![Complex64::new(0.0, 0.0); n_fft];

    let covered = if t_count == 0 { 0 } else { (t_count - 1) * cfg.hop + n_fft };
    let mut acc = vec![0.0f64; covered];
    let mut weight = vec![0.0f64; covered];

    for t in 0..t_count {
        spectrum[0] = frames[(t, 0)];
        for f in 1..bins - 1 {
            spectrum[f] = frames[(t, f)];
            spectrum[n_fft - f] = frames[(t, f)].conj();
        }
        spectrum[n_fft / 2] = frames[(t, bins - 1)];
        ifft.process_with_scratch(&mut spectrum, &mut scratch);
        let start = t * cfg.hop;
        let inv_n = 1.0 / n_fft as f64;
        for i in 0..n_fft {
            let sample = spectrum[i].re * inv_n;
            acc[start + i] += sample * window[i];
            weight[start + i] += window[i] * window[i];
        }
    }

    let mut out = Array1::zeros(source_len);
    let floor = 1e-12 * cfg.wola_constant();
    for i in 0..source_len.min(covered) {
        if weight[i] > floor {
            out[i] = acc[i] / weight[i];
        }
    }
    out
}

/// Inverse of [`analyze`]: WOLA resynthesis of all channels.
pub fn synthesize(spec: &MultichannelSpectrogram) -> AudioBuffer {
    let m = spec.channels();
    let mut samples = Array2::zeros((m, spec.source_len));
    for ch in 0..m {
        let frames = Array2::from_shape_fn((spec.frames(), spec.bins()), |(t, f)| {
            spec.coeffs[(ch, t, f)]
        });
        let out = synthesize_frames(&frames, &spec.config, spec.source_len);
        samples.row_mut(ch).assign(&out);
    }
    AudioBuffer { samples, sample_rate: spec.config.sample_rate }
}
