//! Intrusive objective quality measures computable from signal pairs:
//! cepstral distance (CD) and frequency-weighted segmental SNR (FWSSNR).
//!
//! Both operate on 32 ms frames with a 16 ms shift and average over
//! speech-active frames (reference frame energy within 40 dB of the
//! utterance maximum). CD compares order-12 linear-prediction cepstra with
//! the gain term excluded, so it is invariant to level differences; FWSSNR
//! scores 25 mel-spaced bands with the reference-magnitude weighting
//! `|S|^0.2` and per-band clamping to [-10, 35] dB.

use ndarray::Array1;
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::audio_io::AudioBuffer;
use crate::stft::hann_window;
use crate::{Error, Result};

const LPC_ORDER: usize = 12;
const MEL_BANDS: usize = 25;
const SNR_FLOOR_DB: f64 = -10.0;
const SNR_CEIL_DB: f64 = 35.0;
const CD_CLAMP_DB: f64 = 10.0;
/// Frames quieter than this (relative to the loudest frame) are skipped.
const ACTIVE_RANGE_DB: f64 = 40.0;

#[derive(Debug, Clone, Copy)]
pub struct MetricReport {
    pub cd_db: f64,
    pub fwssnr_db: f64,
}

fn check_pair(reference: &AudioBuffer, test: &AudioBuffer) -> Result<()> {
    if reference.channels() != 1 || test.channels() != 1 {
        return Err(Error::Size("metrics expect single-channel signals".into()));
    }
    if reference.len() != test.len() {
        return Err(Error::Size(format!(
            "length mismatch: reference {} vs test {}",
            reference.len(),
            test.len()
        )));
    }
    if reference.sample_rate != test.sample_rate {
        return Err(Error::Size("sample rate mismatch".into()));
    }
    Ok(())
}

struct FramePlan {
    frame_len: usize,
    window: Array1<f64>,
    starts: Vec<usize>,
    active: Vec<bool>,
}

/// 32 ms / 16 ms framing with the speech-active mask from the reference.
fn plan_frames(reference: &AudioBuffer) -> FramePlan {
    let fs = reference.sample_rate as f64;
    let frame_len = (0.032 * fs).round() as usize;
    let hop = (0.016 * fs).round() as usize;
    let n = reference.len();
    let starts: Vec<usize> = if n < frame_len {
        Vec::new()
    } else {
        (0..=(n - frame_len) / hop).map(|i| i * hop).collect()
    };
    let window = hann_window(frame_len);
    let energies: Vec<f64> = starts
        .iter()
        .map(|&s| {
            (0..frame_len)
                .map(|i| (reference.samples[(0, s + i)] * window[i]).powi(2))
                .sum()
        })
        .collect();
    let max = energies.iter().cloned().fold(0.0f64, f64::max);
    let floor = max * 10f64.powf(-ACTIVE_RANGE_DB / 10.0);
    let active = energies.iter().map(|&e| max > 0.0 && e >= floor).collect();
    FramePlan { frame_len, window, starts, active }
}

/// Levinson-Durbin on the windowed frame's autocorrelation; returns the
/// predictor coefficients of `s[n] ~ sum a_k s[n-k]`, or None for a frame
/// with no energy.
fn lpc_coefficients(frame: &[f64], order: usize) -> Option<Vec<f64>> {
    let n = frame.len();
    let mut r = vec![0.0f64; order + 1];
    for (k, rk) in r.iter_mut().enumerate() {
        for i in 0..n - k {
            *rk += frame[i] * frame[i + k];
        }
    }
    if r[0] <= 0.0 {
        return None;
    }
    r[0] *= 1.0 + 1e-9; // white-noise correction keeps the recursion stable

    let mut a = vec![0.0f64; order];
    let mut err = r[0];
    for i in 1..=order {
        let mut acc = r[i];
        for j in 1..i {
            acc -= a[j - 1] * r[i - j];
        }
        let k = acc / err;
        let mut new_a = a.clone();
        new_a[i - 1] = k;
        for j in 1..i {
            new_a[j - 1] = a[j - 1] - k * a[i - 1 - j];
        }
        a = new_a;
        err *= 1.0 - k * k;
        if err <= 0.0 {
            return None;
        }
    }
    Some(a)
}

/// Cepstrum of the all-pole model `1 / (1 - sum a_k z^-k)`, coefficients
/// 1..=order (the gain term c_0 is excluded by construction).
fn lpc_to_cepstrum(a: &[f64]) -> Vec<f64> {
    let p = a.len();
    let mut c = vec![0.0f64; p];
    for m in 1..=p {
        let mut acc = a[m - 1];
        for k in 1..m {
            acc += (k as f64 / m as f64) * c[k - 1] * a[m - 1 - k];
        }
        c[m - 1] = acc;
    }
    c
}

/// Mean cepstral distance in dB over speech-active frames.
pub fn cepstral_distance(reference: &AudioBuffer, test: &AudioBuffer) -> Result<f64> {
    check_pair(reference, test)?;
    let plan = plan_frames(reference);
    let mut sum = 0.0;
    let mut count = 0usize;
    let zero = vec![0.0f64; LPC_ORDER];
    for (idx, &start) in plan.starts.iter().enumerate() {
        if !plan.active[idx] {
            continue;
        }
        let wref: Vec<f64> = (0..plan.frame_len)
            .map(|i| reference.samples[(0, start + i)] * plan.window[i])
            .collect();
        let wtest: Vec<f64> = (0..plan.frame_len)
            .map(|i| test.samples[(0, start + i)] * plan.window[i])
            .collect();
        let c_ref = match lpc_coefficients(&wref, LPC_ORDER) {
            Some(a) => lpc_to_cepstrum(&a),
            None => continue,
        };
        let c_test = lpc_coefficients(&wtest, LPC_ORDER)
            .map(|a| lpc_to_cepstrum(&a))
            .unwrap_or_else(|| zero.clone());
        let dist_sq: f64 = c_ref
            .iter()
            .zip(c_test.iter())
            .map(|(r, t)| (r - t) * (r - t))
            .sum();
        let d = (10.0 / std::f64::consts::LN_10) * (2.0 * dist_sq).sqrt();
        sum += d.clamp(0.0, CD_CLAMP_DB);
        count += 1;
    }
    if count == 0 {
        return Ok(0.0);
    }
    Ok(sum / count as f64)
}

/// Triangular mel filterbank weights over the one-sided FFT bins.
fn mel_filterbank(bands: usize, nfft: usize, sample_rate: f64) -> Vec<Vec<(usize, f64)>> {
    let mel = |hz: f64| 2595.0 * (1.0 + hz / 700.0).log10();
    let hz = |m: f64| 700.0 * (10f64.powf(m / 2595.0) - 1.0);
    let nyquist = sample_rate / 2.0;
    let edges: Vec<f64> = (0..bands + 2)
        .map(|i| hz(mel(nyquist) * i as f64 / (bands + 1) as f64))
        .collect();
    let bins = nfft / 2 + 1;
    let bin_hz = sample_rate / nfft as f64;
    (0..bands)
        .map(|j| {
            let (lo, center, hi) = (edges[j], edges[j + 1], edges[j + 2]);
            let mut weights = Vec::new();
            for k in 0..bins {
                let f = k as f64 * bin_hz;
                let w = if f >= lo && f <= center && center > lo {
                    (f - lo) / (center - lo)
                } else if f > center && f <= hi && hi > center {
                    (hi - f) / (hi - center)
                } else {
                    0.0
                };
                if w > 0.0 {
                    weights.push((k, w));
                }
            }
            weights
        })
        .collect()
}

/// Frequency-weighted segmental SNR in dB over speech-active frames.
pub fn fwssnr(reference: &AudioBuffer, test: &AudioBuffer) -> Result<f64> {
    check_pair(reference, test)?;
    let plan = plan_frames(reference);
    let nfft = plan.frame_len.next_power_of_two();
    let bank = mel_filterbank(MEL_BANDS, nfft, reference.sample_rate as f64);

    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(nfft);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];

    let spectrum = |buf: &AudioBuffer, start: usize, plan: &FramePlan| {
        let mut frame = vec![Complex64::new(0.0, 0.0); nfft];
        for i in 0..plan.frame_len {
            frame[i] = Complex64::new(buf.samples[(0, start + i)] * plan.window[i], 0.0);
        }
        frame
    };

    let mut sum = 0.0;
    let mut count = 0usize;
    for (idx, &start) in plan.starts.iter().enumerate() {
        if !plan.active[idx] {
            continue;
        }
        let mut s = spectrum(reference, start, &plan);
        fft.process_with_scratch(&mut s, &mut scratch);
        let mut d = spectrum(test, start, &plan);
        fft.process_with_scratch(&mut d, &mut scratch);

        let mut num = 0.0;
        let mut den = 0.0;
        for weights in &bank {
            let mut e_ref = 0.0;
            let mut e_test = 0.0;
            for &(k, w) in weights {
                e_ref += w * s[k].norm_sqr();
                e_test += w * d[k].norm_sqr();
            }
            if e_ref <= 0.0 {
                continue;
            }
            // standard magnitude-domain band SNR: |S|^2 / (|S| - |S_hat|)^2
            let err = (e_ref.sqrt() - e_test.sqrt()).powi(2);
            let snr = if e_test == 0.0 {
                // total destruction of the band scores the floor
                SNR_FLOOR_DB
            } else if err == 0.0 {
                SNR_CEIL_DB
            } else {
                (10.0 * (e_ref / err).log10()).clamp(SNR_FLOOR_DB, SNR_CEIL_DB)
            };
            let weight = e_ref.powf(0.1); // |S|^0.2 on the band magnitude
            num += weight * snr;
            den += weight;
        }
        if den > 0.0 {
            sum += num / den;
            count += 1;
        }
    }
    if count == 0 {
        return Ok(0.0);
    }
    Ok(sum / count as f64)
}

/// Both metrics for one signal pair.
pub fn metric_report(reference: &AudioBuffer, test: &AudioBuffer) -> Result<MetricReport> {
    Ok(MetricReport {
        cd_db: cepstral_distance(reference, test)?,
        fwssnr_db: fwssnr(reference, test)?,
    })
}
