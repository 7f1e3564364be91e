//! Multichannel speech enhancement built around convolutional beamforming.
//!
//! The crate implements four STFT-domain enhancement methods over a shared
//! parameter-estimation pipeline:
//!
//! - **WPE** multichannel linear-prediction dereverberation,
//! - **MPDR** minimum-power distortionless-response beamforming,
//! - their **cascade** (WPE followed by MPDR), and
//! - **WPD**, a single convolutional beamformer that minimizes the
//!   time-varying-power-weighted output energy under the same distortionless
//!   constraint and therefore jointly dereverberates and denoises.
//!
//! Supporting modules provide WAV I/O, analysis/synthesis filterbanks,
//! complex Hermitian linear algebra, synthetic reverberant scene generation
//! with exact ground-truth decompositions, and intrusive objective quality
//! metrics (cepstral distance and frequency-weighted segmental SNR).
//!
//! The `convbf` binary exposes `enhance` (process one WAV file) and `bench`
//! (run all methods over seeded synthetic scenes and report metrics as CSV).

pub mod audio_io;
pub mod beamform;
pub mod cli;
pub mod estimation;
pub mod metrics;
pub mod numerics;
pub mod pipeline;
pub mod simulate;
pub mod stft;
pub mod wpe;

mod error;

pub use error::{Error, Result};
