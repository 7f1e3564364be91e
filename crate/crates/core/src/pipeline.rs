//! End-to-end orchestration: band-dependent filter orders, the alternating
//! estimation of the desired-signal power and steering vector, and the
//! method-specific filtering passes.
//!
//! Parameter estimation follows the iterate-WPE+MPDR scheme: starting from
//! the captured-signal power, each iteration dereverberates with WPE,
//! re-estimates the steering vector from the dereverberated signal (noise
//! covariance from the noise-only edges), beamforms with MPDR, and updates
//! the power from the beamformer output. The final filtering pass for every
//! method consumes the same parameter snapshot, which keeps cross-method
//! comparisons well-posed.

use std::time::{Duration, Instant};

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::audio_io::AudioBuffer;
use crate::beamform::{
    apply_instantaneous, apply_wpd, assemble_covariance_bin, compose_cascade,
    constraint_residual, estimate_mpdr, solve_mpdr_bin, solve_wpd, weighted_output_power,
    ConvolutionalFilter, ConvolutionalFilterBank, InstantaneousFilterBank,
};
use crate::estimation::{
    estimate_steering, initial_power, noise_covariance_from_edges, update_power_from_estimate,
    PowerEstimate, SteeringVector,
};
use crate::numerics::DEFAULT_LOADING;
use crate::stft::{analyze, synthesize_frames, MultichannelSpectrogram, StftConfig};
use crate::wpe::{apply_wpe, estimate_wpe_filter_bin, estimate_wpe_filters, WpeFilter, WpeFilterBank};
use crate::{Error, Result};

/// Fraction of bins allowed to fail numerically before the whole utterance
/// is rejected; failed bins pass the reference channel through unfiltered.
const BIN_FAILURE_TOLERANCE: f64 = 0.05;

/// Default relative diagonal loading for WPE prediction-filter estimation.
pub const WPE_LOADING: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Wpe,
    Mpdr,
    Cascade,
    Wpd,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Wpe, Method::Mpdr, Method::Cascade, Method::Wpd];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Wpe => "wpe",
            Method::Mpdr => "mpdr",
            Method::Cascade => "cascade",
            Method::Wpd => "wpd",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wpe" => Ok(Method::Wpe),
            "mpdr" => Ok(Method::Mpdr),
            "cascade" => Ok(Method::Cascade),
            "wpd" => Ok(Method::Wpd),
            other => Err(Error::Usage(format!(
                "unknown method '{other}' (expected wpe|mpdr|cascade|wpd)"
            ))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One frequency band with its regression order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub lo_hz: f64,
    pub hi_hz: f64,
    pub order: usize,
}

/// Contiguous bands covering `[0, Nyquist]` plus the shared prediction delay.
#[derive(Debug, Clone, PartialEq)]
pub struct BandSchedule {
    pub bands: Vec<Band>,
    pub delay: usize,
}

impl BandSchedule {
    /// The reference schedule: delay 4 and orders 12/10/8/6/6 over the
    /// ranges 0-0.8, 0.8-1.5, 1.5-3, 3-6 and 6-8 kHz, scaled proportionally
    /// for other sample rates. The published order list stops at the fourth
    /// range; the fifth band repeats the last value.
    pub fn default_for(sample_rate: u32) -> Self {
        let scale = sample_rate as f64 / 16_000.0;
        let edges = [0.0, 800.0, 1_500.0, 3_000.0, 6_000.0, 8_000.0];
        let orders = [12, 10, 8, 6, 6];
        let bands = (0..5)
            .map(|i| Band {
                lo_hz: edges[i] * scale,
                hi_hz: edges[i + 1] * scale,
                order: orders[i],
            })
            .collect();
        Self { bands, delay: 4 }
    }

    /// A single band covering the whole spectrum with one order.
    pub fn uniform(order: usize, delay: usize, nyquist_hz: f64) -> Self {
        Self { bands: vec![Band { lo_hz: 0.0, hi_hz: nyquist_hz, order }], delay }
    }

    pub fn validate(&self, nyquist_hz: f64) -> Result<()> {
        if self.delay < 1 {
            return Err(Error::Usage("prediction delay must be at least 1".into()));
        }
        if self.bands.is_empty() {
            return Err(Error::Usage("band schedule is empty".into()));
        }
        if self.bands[0].lo_hz != 0.0 {
            return Err(Error::Usage("band schedule must start at 0 Hz".into()));
        }
        for w in self.bands.windows(2) {
            if (w[0].hi_hz - w[1].lo_hz).abs() > 1e-9 {
                return Err(Error::Usage(format!(
                    "bands are not contiguous at {} Hz",
                    w[0].hi_hz
                )));
            }
        }
        let last = self.bands.last().unwrap();
        if last.hi_hz < nyquist_hz - 1e-9 {
            return Err(Error::Usage(format!(
                "band schedule ends at {} Hz, below Nyquist {nyquist_hz} Hz",
                last.hi_hz
            )));
        }
        for band in &self.bands {
            if band.order < self.delay {
                return Err(Error::Usage(format!(
                    "band [{}, {}) Hz has order {} below the prediction delay {}",
                    band.lo_hz, band.hi_hz, band.order, self.delay
                )));
            }
        }
        Ok(())
    }

    /// Regression order of the band containing `hz` (the last band is
    /// closed above, so Nyquist belongs to it).
    pub fn order_for_hz(&self, hz: f64) -> usize {
        for band in &self.bands {
            if hz >= band.lo_hz && hz < band.hi_hz {
                return band.order;
            }
        }
        self.bands.last().unwrap().order
    }

    /// Per-bin regression orders for an STFT layout.
    pub fn per_bin_orders(&self, cfg: &StftConfig) -> Vec<usize> {
        (0..cfg.bins()).map(|f| self.order_for_hz(cfg.bin_hz(f))).collect()
    }
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub method: Method,
    /// WPE+MPDR parameter-estimation iterations (reference value: 2).
    pub iterations: usize,
    pub stft: StftConfig,
    pub schedule: BandSchedule,
    /// Reference channel for the RTF normalization and pass-through.
    pub reference: usize,
    /// Noise-only durations at the utterance edges.
    pub head_ms: f64,
    pub tail_ms: f64,
    /// Relative diagonal loading for every covariance inversion.
    pub loading: f64,
    /// Relative diagonal loading for the WPE normal equations. The
    /// prediction filters have an order of magnitude more coefficients than
    /// the beamformers and overfit short utterances at the shared 1e-8
    /// level, audibly shaving the desired signal.
    pub wpe_loading: f64,
}

impl PipelineConfig {
    pub fn default_for(method: Method, sample_rate: u32) -> Result<Self> {
        Ok(Self {
            method,
            iterations: 2,
            stft: StftConfig::for_sample_rate(sample_rate)?,
            schedule: BandSchedule::default_for(sample_rate),
            reference: 0,
            head_ms: 225.0,
            tail_ms: 75.0,
            loading: DEFAULT_LOADING,
            wpe_loading: WPE_LOADING,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule.validate(self.stft.sample_rate as f64 / 2.0)?;
        if self.loading < 0.0 || self.wpe_loading < 0.0 {
            return Err(Error::Usage("diagonal loading must be nonnegative".into()));
        }
        if self.head_ms <= 0.0 || self.tail_ms <= 0.0 {
            return Err(Error::Usage("noise-edge durations must be positive".into()));
        }
        Ok(())
    }
}

/// The (power, steering) snapshot consumed by every method's final pass.
#[derive(Debug, Clone)]
pub struct ParameterEstimate {
    pub power: PowerEstimate,
    pub steering: SteeringVector,
}

/// Alternating estimation of the desired-signal power and steering vector.
///
/// With `iterations = 0` this degenerates to the captured-signal power and
/// a steering estimate from the raw input.
pub fn estimate_parameters(
    spec: &MultichannelSpectrogram,
    cfg: &PipelineConfig,
) -> Result<ParameterEstimate> {
    cfg.validate()?;
    if cfg.reference >= spec.channels() {
        return Err(Error::Usage(format!(
            "reference channel {} out of range for {} channels",
            cfg.reference,
            spec.channels()
        )));
    }
    let orders = cfg.schedule.per_bin_orders(&cfg.stft);
    let mut power = initial_power(spec);
    let mut steering = None;

    for iteration in 0..cfg.iterations {
        let stage = |what: &str, e: Error| {
            Error::Estimation(format!("iteration {iteration}, {what}: {e}"))
        };
        let wpe_bank =
            estimate_wpe_filters(spec, &power, cfg.schedule.delay, &orders, cfg.wpe_loading)
                .map_err(|e| stage("wpe", e))?;
        let dereverbed = apply_wpe(spec, &wpe_bank).map_err(|e| stage("wpe apply", e))?;
        let noise_cov = noise_covariance_from_edges(&dereverbed, cfg.head_ms, cfg.tail_ms)
            .map_err(|e| stage("noise covariance", e))?;
        let v = estimate_steering(&dereverbed, &noise_cov, cfg.reference, cfg.loading)
            .map_err(|e| stage("steering", e))?;
        let mpdr = estimate_mpdr(&dereverbed, &v, None, cfg.loading)
            .map_err(|e| stage("mpdr", e))?;
        let enhanced = apply_instantaneous(&dereverbed, &mpdr);
        power = update_power_from_estimate(&enhanced);
        steering = Some(v);
    }

    let steering = match steering {
        Some(v) => v,
        None => {
            let noise_cov = noise_covariance_from_edges(spec, cfg.head_ms, cfg.tail_ms)
                .map_err(|e| Error::Estimation(format!("noise covariance: {e}")))?;
            estimate_steering(spec, &noise_cov, cfg.reference, cfg.loading)
                .map_err(|e| Error::Estimation(format!("steering: {e}")))?
        }
    };
    Ok(ParameterEstimate { power, steering })
}

/// The per-method filter set produced from one parameter snapshot.
#[derive(Debug, Clone)]
pub enum FilterPlan {
    Wpe(WpeFilterBank),
    Instantaneous(InstantaneousFilterBank),
    Convolutional(ConvolutionalFilterBank),
}

impl FilterPlan {
    /// Single-channel output `[frames x bins]`: the dereverberated reference
    /// channel for WPE, the beamformed signal otherwise.
    pub fn apply_mono(
        &self,
        spec: &MultichannelSpectrogram,
        reference: usize,
    ) -> Result<Array2<Complex64>> {
        match self {
            FilterPlan::Wpe(bank) => {
                let dereverbed = apply_wpe(spec, bank)?;
                let (_, frames, bins) = dereverbed.coeffs.dim();
                Ok(Array2::from_shape_fn((frames, bins), |(t, f)| {
                    dereverbed.coeffs[(reference, t, f)]
                }))
            }
            FilterPlan::Instantaneous(bank) => Ok(apply_instantaneous(spec, bank)),
            FilterPlan::Convolutional(bank) => Ok(apply_wpd(spec, bank)),
        }
    }

    /// Per-bin distortionless-constraint residuals (empty for WPE, which
    /// has no constraint).
    pub fn constraint_residuals(&self, steering: &SteeringVector) -> Vec<f64> {
        match self {
            FilterPlan::Wpe(_) => Vec::new(),
            FilterPlan::Instantaneous(bank) => (0..bank.weights.nrows())
                .map(|f| {
                    let w0 = bank.weights.row(f);
                    (crate::numerics::hermitian_dot(w0, steering.bin(f))
                        - Complex64::new(1.0, 0.0))
                    .norm()
                })
                .collect(),
            FilterPlan::Convolutional(bank) => bank
                .filters
                .iter()
                .enumerate()
                .map(|(f, filter)| constraint_residual(filter, steering.bin(f)))
                .collect(),
        }
    }

    pub fn condition_estimates(&self) -> Vec<f64> {
        match self {
            FilterPlan::Wpe(bank) => vec![f64::NAN; bank.filters.len()],
            FilterPlan::Instantaneous(bank) => bank.condition.clone(),
            FilterPlan::Convolutional(bank) => bank.condition.clone(),
        }
    }
}

/// Pass-through filter for a failed bin: selects the reference channel.
fn selector_filter(channels: usize, reference: usize, delay: usize, order: usize) -> ConvolutionalFilter {
    let mut weights = Array1::zeros(channels * (order + 2 - delay));
    weights[reference] = Complex64::new(1.0, 0.0);
    ConvolutionalFilter { weights, delay, order, channels }
}

/// Builds the method's filter bank from the parameter snapshot. Bins whose
/// solve fails get a pass-through filter and are reported; more than 5% of
/// failed bins rejects the utterance.
pub fn build_filter_plan(
    spec: &MultichannelSpectrogram,
    params: &ParameterEstimate,
    cfg: &PipelineConfig,
) -> Result<(FilterPlan, Vec<usize>)> {
    let bins = spec.bins();
    let m = spec.channels();
    let q = cfg.reference;
    let delay = cfg.schedule.delay;
    let orders = cfg.schedule.per_bin_orders(&cfg.stft);
    let loading = cfg.loading;
    let power = &params.power;
    let steering = &params.steering;

    struct BinOutcome<T> {
        value: T,
        condition: f64,
        failed: bool,
    }

    let collect_failures = |flags: Vec<bool>| -> Vec<usize> {
        flags
            .iter()
            .enumerate()
            .filter_map(|(f, &failed)| failed.then_some(f))
            .collect()
    };

    let (plan, failed) = match cfg.method {
        Method::Wpe => {
            let outcomes: Vec<BinOutcome<WpeFilter>> = (0..bins)
                .into_par_iter()
                .map(|f| {
                    let bin = spec.bin_frames(f);
                    match estimate_wpe_filter_bin(
                        bin.view(),
                        power.sigma2.column(f),
                        delay,
                        orders[f],
                        cfg.wpe_loading,
                    ) {
                        Ok(filter) => BinOutcome { value: filter, condition: f64::NAN, failed: false },
                        Err(_) => BinOutcome {
                            value: WpeFilter::zero(m, delay, orders[f]),
                            condition: f64::NAN,
                            failed: true,
                        },
                    }
                })
                .collect();
            let failed = collect_failures(outcomes.iter().map(|o| o.failed).collect());
            let bank = WpeFilterBank { filters: outcomes.into_iter().map(|o| o.value).collect() };
            (FilterPlan::Wpe(bank), failed)
        }
        Method::Mpdr => {
            let outcomes: Vec<BinOutcome<Array1<Complex64>>> = (0..bins)
                .into_par_iter()
                .map(|f| {
                    let bin = spec.bin_frames(f);
                    let ones = Array1::from_elem(spec.frames(), 1.0);
                    let cov = assemble_covariance_bin(bin.view(), ones.view(), 1, 0);
                    match solve_mpdr_bin(&cov, steering.bin(f), loading) {
                        Ok((w0, cond)) => BinOutcome { value: w0, condition: cond, failed: false },
                        Err(_) => {
                            let mut w0 = Array1::zeros(m);
                            w0[q] = Complex64::new(1.0, 0.0);
                            BinOutcome { value: w0, condition: f64::NAN, failed: true }
                        }
                    }
                })
                .collect();
            let failed = collect_failures(outcomes.iter().map(|o| o.failed).collect());
            let mut weights = Array2::zeros((bins, m));
            let mut condition = vec![f64::NAN; bins];
            for (f, o) in outcomes.into_iter().enumerate() {
                weights.row_mut(f).assign(&o.value);
                condition[f] = o.condition;
            }
            (
                FilterPlan::Instantaneous(InstantaneousFilterBank { weights, condition }),
                failed,
            )
        }
        Method::Cascade | Method::Wpd => {
            if cfg.method == Method::Cascade {
                // WPE stage on the snapshot power, then MPDR on the
                // dereverberated signal, composed into one filter per bin
                let wpe_outcomes: Vec<(WpeFilter, bool)> = (0..bins)
                    .into_par_iter()
                    .map(|f| {
                        let bin = spec.bin_frames(f);
                        match estimate_wpe_filter_bin(
                            bin.view(),
                            power.sigma2.column(f),
                            delay,
                            orders[f],
                            cfg.wpe_loading,
                        ) {
                            Ok(filter) => (filter, false),
                            Err(_) => (WpeFilter::zero(m, delay, orders[f]), true),
                        }
                    })
                    .collect();
                let mut failed_flags: Vec<bool> =
                    wpe_outcomes.iter().map(|(_, failed)| *failed).collect();
                let wpe_bank = WpeFilterBank {
                    filters: wpe_outcomes.into_iter().map(|(filter, _)| filter).collect(),
                };
                let dereverbed = apply_wpe(spec, &wpe_bank)?;

                let outcomes: Vec<BinOutcome<ConvolutionalFilter>> = (0..bins)
                    .into_par_iter()
                    .map(|f| {
                        let bin = dereverbed.bin_frames(f);
                        let ones = Array1::from_elem(dereverbed.frames(), 1.0);
                        let cov = assemble_covariance_bin(bin.view(), ones.view(), 1, 0);
                        match solve_mpdr_bin(&cov, steering.bin(f), loading) {
                            Ok((w0, cond)) => BinOutcome {
                                value: compose_cascade(&wpe_bank.filters[f], w0.view()),
                                condition: cond,
                                failed: false,
                            },
                            Err(_) => BinOutcome {
                                value: selector_filter(m, q, delay, orders[f]),
                                condition: f64::NAN,
                                failed: true,
                            },
                        }
                    })
                    .collect();
                for (f, o) in outcomes.iter().enumerate() {
                    failed_flags[f] = failed_flags[f] || o.failed;
                }
                let failed = collect_failures(failed_flags);
                let mut filters = Vec::with_capacity(bins);
                let mut condition = Vec::with_capacity(bins);
                for o in outcomes {
                    filters.push(o.value);
                    condition.push(o.condition);
                }
                (
                    FilterPlan::Convolutional(ConvolutionalFilterBank { filters, condition }),
                    failed,
                )
            } else {
                let outcomes: Vec<BinOutcome<ConvolutionalFilter>> = (0..bins)
                    .into_par_iter()
                    .map(|f| {
                        let bin = spec.bin_frames(f);
                        let cov = assemble_covariance_bin(
                            bin.view(),
                            power.sigma2.column(f),
                            delay,
                            orders[f],
                        );
                        match solve_wpd(&cov, steering.bin(f), delay, orders[f], loading) {
                            Ok((filter, cond)) => {
                                BinOutcome { value: filter, condition: cond, failed: false }
                            }
                            Err(_) => BinOutcome {
                                value: selector_filter(m, q, delay, orders[f]),
                                condition: f64::NAN,
                                failed: true,
                            },
                        }
                    })
                    .collect();
                let failed = collect_failures(outcomes.iter().map(|o| o.failed).collect());
                let mut filters = Vec::with_capacity(bins);
                let mut condition = Vec::with_capacity(bins);
                for o in outcomes {
                    filters.push(o.value);
                    condition.push(o.condition);
                }
                (
                    FilterPlan::Convolutional(ConvolutionalFilterBank { filters, condition }),
                    failed,
                )
            }
        }
    };

    if failed.len() as f64 > BIN_FAILURE_TOLERANCE * bins as f64 {
        return Err(Error::Numeric(format!(
            "{} of {bins} bins failed to solve (tolerance {:.0}%)",
            failed.len(),
            BIN_FAILURE_TOLERANCE * 100.0
        )));
    }
    Ok((plan, failed))
}

/// Per-run diagnostics for one enhancement pass.
#[derive(Debug, Clone)]
pub struct Diagnostics {
    pub method: Method,
    pub bins: usize,
    pub failed_bins: Vec<usize>,
    pub low_confidence_bins: usize,
    /// Max over bins of `|w^H v - 1|`; zero for the WPE method.
    pub max_constraint_residual: f64,
    /// Per-bin weighted output power `sum_t |d_t|^2 / sigma_t^2`.
    pub weighted_output_power: Vec<f64>,
    /// Per-bin condition estimates of the solved covariances (NaN where not
    /// applicable).
    pub condition: Vec<f64>,
    pub warnings: Vec<String>,
    pub elapsed: Duration,
}

impl Diagnostics {
    pub fn total_weighted_power(&self) -> f64 {
        self.weighted_output_power.iter().sum()
    }

    /// Human-readable summary with per-band condition maxima.
    pub fn summary(&self, cfg: &PipelineConfig) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        let _ = writeln!(
            s,
            "method={} bins={} failed={} low_confidence={}",
            self.method,
            self.bins,
            self.failed_bins.len(),
            self.low_confidence_bins
        );
        let _ = writeln!(
            s,
            "max constraint residual |w^H v - 1| = {:.3e}",
            self.max_constraint_residual
        );
        let _ = writeln!(s, "total weighted output power = {:.6e}", self.total_weighted_power());
        let _ = writeln!(s, "per-band condition estimates (max):");
        for band in &cfg.schedule.bands {
            let mut max_cond = f64::NAN;
            for f in 0..self.bins {
                let hz = cfg.stft.bin_hz(f);
                let in_band = (hz >= band.lo_hz && hz < band.hi_hz)
                    || (band.hi_hz >= cfg.stft.sample_rate as f64 / 2.0 && hz >= band.lo_hz);
                if in_band && self.condition[f].is_finite() {
                    max_cond = if max_cond.is_nan() {
                        self.condition[f]
                    } else {
                        max_cond.max(self.condition[f])
                    };
                }
            }
            let _ = writeln!(
                s,
                "  [{:>6.0}, {:>6.0}) Hz  Lw={:<2}  cond={:.3e}",
                band.lo_hz, band.hi_hz, band.order, max_cond
            );
        }
        for w in &self.warnings {
            let _ = writeln!(s, "warning: {w}");
        }
        let _ = writeln!(s, "runtime: {:.3} s", self.elapsed.as_secs_f64());
        s
    }
}

/// Runs the method's final filtering pass on a precomputed parameter
/// snapshot and returns the single-channel STFT output with diagnostics.
pub fn enhance_spectrogram(
    spec: &MultichannelSpectrogram,
    params: &ParameterEstimate,
    cfg: &PipelineConfig,
) -> Result<(Array2<Complex64>, FilterPlan, Diagnostics)> {
    let start = Instant::now();
    let (plan, failed_bins) = build_filter_plan(spec, params, cfg)?;
    let mono = plan.apply_mono(spec, cfg.reference)?;

    let residuals = plan.constraint_residuals(&params.steering);
    let max_constraint_residual = residuals.iter().cloned().fold(0.0f64, f64::max);
    let weighted = weighted_output_power(&mono, &params.power);
    let mut warnings = Vec::new();
    if spec.channels() == 1 && cfg.method != Method::Wpe {
        warnings.push(format!(
            "method {} on a single channel reduces to an identity beamformer",
            cfg.method
        ));
    }
    if !failed_bins.is_empty() {
        warnings.push(format!(
            "{} bins passed through unfiltered: {:?}",
            failed_bins.len(),
            &failed_bins[..failed_bins.len().min(8)]
        ));
    }
    let diagnostics = Diagnostics {
        method: cfg.method,
        bins: spec.bins(),
        failed_bins,
        low_confidence_bins: params.steering.low_confidence.iter().filter(|&&b| b).count(),
        max_constraint_residual,
        weighted_output_power: weighted,
        condition: plan.condition_estimates(),
        warnings,
        elapsed: start.elapsed(),
    };
    Ok((mono, plan, diagnostics))
}

/// Full enhancement of a time-domain buffer: STFT analysis, parameter
/// estimation, method filtering, and resynthesis to a single channel of the
/// input length.
pub fn enhance(buf: &AudioBuffer, cfg: &PipelineConfig) -> Result<(AudioBuffer, Diagnostics)> {
    let start = Instant::now();
    cfg.validate()?;
    if cfg.reference >= buf.channels() {
        return Err(Error::Usage(format!(
            "reference channel {} out of range for {} channels",
            cfg.reference,
            buf.channels()
        )));
    }

    // a numerically silent utterance carries nothing to estimate from;
    // zero in, zero out
    if buf.samples.iter().all(|&s| s == 0.0) {
        let mut diagnostics = Diagnostics {
            method: cfg.method,
            bins: cfg.stft.bins(),
            failed_bins: Vec::new(),
            low_confidence_bins: 0,
            max_constraint_residual: 0.0,
            weighted_output_power: vec![0.0; cfg.stft.bins()],
            condition: vec![f64::NAN; cfg.stft.bins()],
            warnings: vec!["input is silent; passing silence through".into()],
            elapsed: start.elapsed(),
        };
        diagnostics.elapsed = start.elapsed();
        return Ok((AudioBuffer::zeros(1, buf.len(), buf.sample_rate), diagnostics));
    }

    let spec = analyze(buf, &cfg.stft)?;
    let params = estimate_parameters(&spec, cfg)?;
    let (mono, _, mut diagnostics) = enhance_spectrogram(&spec, &params, cfg)?;
    let out = synthesize_frames(&mono, &cfg.stft, spec.source_len);
    diagnostics.elapsed = start.elapsed();
    Ok((
        AudioBuffer {
            samples: out.insert_axis(ndarray::Axis(0)),
            sample_rate: buf.sample_rate,
        },
        diagnostics,
    ))
}
