//! Multichannel WAV reading and writing over a double-precision buffer type.
//!
//! Samples are kept in `[-1, 1]` internally; integer PCM is normalized on
//! read by the corresponding power of two (so i16 32767 maps to 32767/32768).

use std::path::Path;

use ndarray::Array2;

use crate::{Error, Result};

/// Planar multichannel audio: `samples` is `[channels x length]`.
#[derive(Debug, Clone)]
pub struct AudioBuffer {
    pub samples: Array2<f64>,
    pub sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(samples: Array2<f64>, sample_rate: u32) -> Result<Self> {
        let (m, n) = samples.dim();
        if m == 0 || n == 0 {
            return Err(Error::Size(format!("audio buffer is {m}x{n}")));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::Numeric("non-finite audio sample".into()));
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn zeros(channels: usize, len: usize, sample_rate: u32) -> Self {
        Self { samples: Array2::zeros((channels, len)), sample_rate }
    }

    pub fn channels(&self) -> usize {
        self.samples.nrows()
    }

    pub fn len(&self) -> usize {
        self.samples.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.ncols() == 0
    }

    pub fn duration_s(&self) -> f64 {
        self.len() as f64 / self.sample_rate as f64
    }

    /// Single-channel view copied out as a new buffer.
    pub fn channel(&self, ch: usize) -> AudioBuffer {
        AudioBuffer {
            samples: self
                .samples
                .row(ch)
                .to_owned()
                .insert_axis(ndarray::Axis(0)),
            sample_rate: self.sample_rate,
        }
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s * s).sum()
    }
}

/// Sample encodings supported on write.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WavEncoding {
    Int16,
    Float32,
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io { path: path.to_path_buf(), source: e }
}

fn hound_err(path: &Path, e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(io) => io_err(path, io),
        hound::Error::Unsupported => {
            Error::Format(format!("{}: unsupported WAV encoding", path.display()))
        }
        other => Error::Format(format!("{}: {other}", path.display())),
    }
}

/// Reads a RIFF/WAVE file with 16/24/32-bit integer PCM or 32-bit float
/// samples of any channel count. Channel order is preserved.
pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioBuffer> {
    let path = path.as_ref();
    let mut reader = hound::WavReader::open(path).map_err(|e| hound_err(path, e))?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(Error::Format(format!("{}: zero channels", path.display())));
    }

    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| hound_err(path, e))?,
        (hound::SampleFormat::Int, 24) => reader
            .samples::<i32>()
            .map(|s| s.map(|v| v as f64 / 8_388_608.0))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| hound_err(path, e))?,
        (hound::SampleFormat::Int, 32) => reader
            .samples::<i32>()
            .map(|s| s.map(|v| v as f64 / 2_147_483_648.0))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| hound_err(path, e))?,
        (hound::SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(|v| v as f64))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| hound_err(path, e))?,
        (fmt, bits) => {
            return Err(Error::Format(format!(
                "{}: unsupported WAV encoding {bits}-bit {}",
                path.display(),
                match fmt {
                    hound::SampleFormat::Int => "integer PCM",
                    hound::SampleFormat::Float => "float",
                }
            )));
        }
    };

    let frames = interleaved.len() / channels;
    if frames == 0 {
        return Err(Error::Format(format!("{}: no audio frames", path.display())));
    }
    let mut samples = Array2::zeros((channels, frames));
    for (i, v) in interleaved.iter().take(frames * channels).enumerate() {
        samples[(i % channels, i / channels)] = *v;
    }
    AudioBuffer::new(samples, spec.sample_rate)
}

/// Writes `buf` as RIFF/WAVE. Samples outside `[-1, 1]` are hard-clipped
/// (enhancement filters can overshoot transiently); the clip count is
/// returned and logged as a warning.
pub fn write_wav(
    path: impl AsRef<Path>,
    buf: &AudioBuffer,
    encoding: WavEncoding,
) -> Result<usize> {
    let path = path.as_ref();
    let spec = hound::WavSpec {
        channels: buf.channels() as u16,
        sample_rate: buf.sample_rate,
        bits_per_sample: match encoding {
            WavEncoding::Int16 => 16,
            WavEncoding::Float32 => 32,
        },
        sample_format: match encoding {
            WavEncoding::Int16 => hound::SampleFormat::Int,
            WavEncoding::Float32 => hound::SampleFormat::Float,
        },
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(|e| hound_err(path, e))?;
    let mut clipped = 0usize;
    let channels = buf.channels();
    for frame in 0..buf.len() {
        for ch in 0..channels {
            let raw = buf.samples[(ch, frame)];
            let s = raw.clamp(-1.0, 1.0);
            if s != raw {
                clipped += 1;
            }
            match encoding {
                WavEncoding::Int16 => {
                    let q = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
                    writer.write_sample(q).map_err(|e| hound_err(path, e))?;
                }
                WavEncoding::Float32 => {
                    writer
                        .write_sample(s as f32)
                        .map_err(|e| hound_err(path, e))?;
                }
            }
        }
    }
    writer.finalize().map_err(|e| hound_err(path, e))?;
    if clipped > 0 {
        log::warn!("{}: clipped {clipped} samples on write", path.display());
    }
    Ok(clipped)
}
