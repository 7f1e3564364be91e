//! Command-line entry points: `enhance` processes one WAV file, `bench`
//! generates seeded synthetic scenes, runs all four methods on each, and
//! writes a metrics CSV.
//!
//! Configuration comes from an optional flat `key = value` file with
//! `[pipeline]`, `[stft]`, `[scene]` and `[output]` sections; flags override
//! file values, and every accepted run echoes its fully resolved
//! configuration. Unknown keys are rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::audio_io::{read_wav, write_wav, AudioBuffer, WavEncoding};
use crate::metrics::{cepstral_distance, fwssnr};
use crate::pipeline::{
    enhance, enhance_spectrogram, estimate_parameters, BandSchedule, Method, PipelineConfig,
};
use crate::simulate::{synth_scene, NoiseKind, SceneSpec};
use crate::stft::{analyze, synthesize_frames, StftConfig};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "convbf",
    about = "Multichannel speech enhancement: WPE, MPDR, their cascade, and the WPD convolutional beamformer",
    version
)]
pub struct CliArgs {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Debug, Subcommand)]
enum CliCommand {
    /// Enhance a multichannel WAV file to a single channel.
    Enhance {
        /// Input WAV (PCM 16/24/32-bit or float32).
        input: PathBuf,
        /// Output WAV path.
        output: PathBuf,
        #[command(flatten)]
        pipeline: PipelineFlags,
        /// Output encoding: int16 or float32.
        #[arg(long, default_value = "float32")]
        encoding: String,
    },
    /// Generate seeded synthetic scenes, run all methods, write metric CSV.
    Bench {
        /// Scene/config file ([scene] section and optional overrides).
        spec: PathBuf,
        /// Output CSV path.
        output: PathBuf,
        #[command(flatten)]
        pipeline: PipelineFlags,
        /// Base RNG seed for the scene set.
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Debug, Args, Clone, Default)]
struct PipelineFlags {
    /// Enhancement method: wpe | mpdr | cascade | wpd.
    #[arg(long)]
    method: Option<String>,
    /// Prediction delay in frames.
    #[arg(long)]
    delay: Option<usize>,
    /// Uniform regression order (overrides the band schedule).
    #[arg(long)]
    lw: Option<usize>,
    /// Band schedule as start_hz:order pairs, e.g. "0:12,800:10,1500:8,3000:6,6000:6".
    #[arg(long)]
    schedule: Option<String>,
    /// Parameter estimation iterations.
    #[arg(long)]
    iterations: Option<usize>,
    /// Reference channel.
    #[arg(long = "ref-channel")]
    ref_channel: Option<usize>,
    /// Noise-only head duration in ms.
    #[arg(long = "head-ms")]
    head_ms: Option<f64>,
    /// Noise-only tail duration in ms.
    #[arg(long = "tail-ms")]
    tail_ms: Option<f64>,
    /// Relative diagonal loading.
    #[arg(long)]
    loading: Option<f64>,
    /// Worker threads (0 = automatic).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Configuration file ([pipeline]/[stft] sections).
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Parsed `key = value` file: `(section, key) -> value`.
#[derive(Debug, Default, Clone)]
struct FileConfig {
    values: BTreeMap<(String, String), String>,
}

const KNOWN_KEYS: &[(&str, &str)] = &[
    ("pipeline", "method"),
    ("pipeline", "delay"),
    ("pipeline", "lw"),
    ("pipeline", "schedule"),
    ("pipeline", "iterations"),
    ("pipeline", "ref_channel"),
    ("pipeline", "head_ms"),
    ("pipeline", "tail_ms"),
    ("pipeline", "loading"),
    ("pipeline", "wpe_loading"),
    ("stft", "frame_ms"),
    ("stft", "hop_ms"),
    ("stft", "sample_rate"),
    ("scene", "scenes"),
    ("scene", "channels"),
    ("scene", "duration_s"),
    ("scene", "t60_min"),
    ("scene", "t60_max"),
    ("scene", "snr_db"),
    ("scene", "early_ms"),
    ("scene", "head_silence_ms"),
    ("scene", "tail_silence_ms"),
    ("scene", "noise"),
    ("scene", "delay_spread_ms"),
    ("scene", "seed"),
    ("output", "encoding"),
];

impl FileConfig {
    fn parse(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io { path: path.to_path_buf(), source: e })?;
        let mut values = BTreeMap::new();
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') && line.ends_with(']') {
                section = line[1..line.len() - 1].trim().to_string();
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Usage(format!(
                    "{}:{}: expected 'key = value', got '{raw}'",
                    path.display(),
                    lineno + 1
                )));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if !KNOWN_KEYS.iter().any(|(s, k)| *s == section && *k == key) {
                return Err(Error::Usage(format!(
                    "{}:{}: unknown key '{key}' in section [{section}]",
                    path.display(),
                    lineno + 1
                )));
            }
            values.insert((section.clone(), key), value);
        }
        Ok(Self { values })
    }

    fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.values
            .get(&(section.to_string(), key.to_string()))
            .map(|s| s.as_str())
    }

    fn parsed<T: std::str::FromStr>(&self, section: &str, key: &str) -> Result<Option<T>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                Error::Usage(format!("invalid value '{raw}' for [{section}] {key}"))
            }),
        }
    }
}

/// Parses "start_hz:order,start_hz:order,..." into contiguous bands ending
/// at Nyquist.
fn parse_schedule(text: &str, delay: usize, nyquist_hz: f64) -> Result<BandSchedule> {
    let mut starts: Vec<(f64, usize)> = Vec::new();
    for part in text.split(',') {
        let Some((hz, order)) = part.trim().split_once(':') else {
            return Err(Error::Usage(format!(
                "schedule entry '{part}' is not start_hz:order"
            )));
        };
        let hz: f64 = hz
            .trim()
            .parse()
            .map_err(|_| Error::Usage(format!("bad band start '{hz}'")))?;
        let order: usize = order
            .trim()
            .parse()
            .map_err(|_| Error::Usage(format!("bad band order '{order}'")))?;
        starts.push((hz, order));
    }
    if starts.is_empty() {
        return Err(Error::Usage("empty band schedule".into()));
    }
    for w in starts.windows(2) {
        if w[1].0 <= w[0].0 {
            return Err(Error::Usage("band starts must be strictly increasing".into()));
        }
    }
    let bands = starts
        .iter()
        .enumerate()
        .map(|(i, &(lo, order))| crate::pipeline::Band {
            lo_hz: lo,
            hi_hz: starts.get(i + 1).map_or(nyquist_hz, |&(hi, _)| hi),
            order,
        })
        .collect();
    let schedule = BandSchedule { bands, delay };
    schedule.validate(nyquist_hz)?;
    Ok(schedule)
}

/// Flag conflicts that must fail before any file I/O.
fn preflight(flags: &PipelineFlags) -> Result<()> {
    if flags.schedule.is_some() && flags.lw.is_some() {
        return Err(Error::Usage("--schedule and --lw are mutually exclusive".into()));
    }
    if let (Some(lw), Some(delay)) = (flags.lw, flags.delay) {
        if lw < delay {
            return Err(Error::Usage(format!(
                "regression order {lw} is below the prediction delay {delay}"
            )));
        }
    }
    if let Some(method) = &flags.method {
        method.parse::<Method>()?;
    }
    Ok(())
}

/// Merges defaults, config file, and flags into a pipeline configuration.
fn resolve_pipeline(
    flags: &PipelineFlags,
    file: &FileConfig,
    sample_rate: u32,
) -> Result<PipelineConfig> {
    let frame_ms: f64 = file.parsed("stft", "frame_ms")?.unwrap_or(32.0);
    let hop_ms: f64 = file.parsed("stft", "hop_ms")?.unwrap_or(8.0);
    let stft = StftConfig::new(
        (frame_ms * sample_rate as f64 / 1000.0).round() as usize,
        (hop_ms * sample_rate as f64 / 1000.0).round() as usize,
        sample_rate,
    )?;
    let nyquist = sample_rate as f64 / 2.0;

    let method: Method = flags
        .method
        .clone()
        .or_else(|| file.get("pipeline", "method").map(String::from))
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(Method::Wpd);
    let delay = flags
        .delay
        .or(file.parsed("pipeline", "delay")?)
        .unwrap_or(4);

    let schedule_text = flags
        .schedule
        .clone()
        .or_else(|| file.get("pipeline", "schedule").map(String::from));
    let lw = flags.lw.or(file.parsed("pipeline", "lw")?);
    let schedule = match (schedule_text, lw) {
        (Some(_), Some(_)) => {
            return Err(Error::Usage("schedule and lw are mutually exclusive".into()));
        }
        (Some(text), None) => parse_schedule(&text, delay, nyquist)?,
        (None, Some(order)) => BandSchedule::uniform(order, delay, nyquist),
        (None, None) => {
            let mut s = BandSchedule::default_for(sample_rate);
            s.delay = delay;
            s
        }
    };

    let cfg = PipelineConfig {
        method,
        iterations: flags
            .iterations
            .or(file.parsed("pipeline", "iterations")?)
            .unwrap_or(2),
        stft,
        schedule,
        reference: flags
            .ref_channel
            .or(file.parsed("pipeline", "ref_channel")?)
            .unwrap_or(0),
        head_ms: flags
            .head_ms
            .or(file.parsed("pipeline", "head_ms")?)
            .unwrap_or(225.0),
        tail_ms: flags
            .tail_ms
            .or(file.parsed("pipeline", "tail_ms")?)
            .unwrap_or(75.0),
        loading: flags
            .loading
            .or(file.parsed("pipeline", "loading")?)
            .unwrap_or(crate::numerics::DEFAULT_LOADING),
        wpe_loading: file
            .parsed("pipeline", "wpe_loading")?
            .unwrap_or(crate::pipeline::WPE_LOADING),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn echo_pipeline(cfg: &PipelineConfig) {
    println!("# method = {}", cfg.method);
    println!("# iterations = {}", cfg.iterations);
    println!(
        "# stft: frame_len = {}, hop = {}, sample_rate = {}",
        cfg.stft.frame_len, cfg.stft.hop, cfg.stft.sample_rate
    );
    let bands: Vec<String> = cfg
        .schedule
        .bands
        .iter()
        .map(|b| format!("[{:.0},{:.0}):{}", b.lo_hz, b.hi_hz, b.order))
        .collect();
    println!("# schedule: delay = {}, bands = {}", cfg.schedule.delay, bands.join(" "));
    println!(
        "# ref_channel = {}, head_ms = {}, tail_ms = {}, loading = {:.1e}",
        cfg.reference, cfg.head_ms, cfg.tail_ms, cfg.loading
    );
}

/// Scene-set configuration for `bench`.
#[derive(Debug, Clone)]
struct BenchSceneSet {
    base: SceneSpec,
    scenes: usize,
    t60_min: f64,
    t60_max: f64,
}

fn resolve_scene_set(file: &FileConfig, seed_flag: Option<u64>) -> Result<BenchSceneSet> {
    let mut base = SceneSpec {
        channels: file.parsed("scene", "channels")?.unwrap_or(8),
        duration_s: file.parsed("scene", "duration_s")?.unwrap_or(3.0),
        snr_db: file.parsed("scene", "snr_db")?.unwrap_or(20.0),
        early_ms: file.parsed("scene", "early_ms")?.unwrap_or(50.0),
        head_silence_ms: file.parsed("scene", "head_silence_ms")?.unwrap_or(250.0),
        tail_silence_ms: file.parsed("scene", "tail_silence_ms")?.unwrap_or(100.0),
        delay_spread_ms: file.parsed("scene", "delay_spread_ms")?.unwrap_or(2.0),
        sample_rate: file.parsed("stft", "sample_rate")?.unwrap_or(16_000),
        ..Default::default()
    };
    base.noise = match file.get("scene", "noise").unwrap_or("white") {
        "white" => NoiseKind::White,
        "pink" => NoiseKind::Pink,
        other => {
            return Err(Error::Usage(format!(
                "unknown noise kind '{other}' (expected white|pink)"
            )));
        }
    };
    base.seed = seed_flag
        .or(file.parsed("scene", "seed")?)
        .unwrap_or(1234);
    Ok(BenchSceneSet {
        base,
        scenes: file.parsed("scene", "scenes")?.unwrap_or(20),
        t60_min: file.parsed("scene", "t60_min")?.unwrap_or(0.25),
        t60_max: file.parsed("scene", "t60_max")?.unwrap_or(0.7),
    })
}

/// One `bench` CSV row.
fn csv_row(
    scene: usize,
    method: Method,
    result: &Result<(f64, f64, f64, f64)>,
) -> String {
    match result {
        Ok((cd, fw, power, drr_gain)) => format!(
            "{scene},{method},ok,{cd:.6},{fw:.6},{power:.8e},{drr_gain:.6}\n"
        ),
        Err(e) => {
            let msg = e.to_string().replace([',', '\n'], ";");
            format!("{scene},{method},error:{msg},,,,\n")
        }
    }
}

/// Runs every method on one scene against a shared parameter snapshot and
/// reports (cd, fwssnr, weighted output power, ground-truth DRR gain).
fn bench_scene(spec: &SceneSpec, cfg_template: &PipelineConfig) -> Vec<Result<(f64, f64, f64, f64)>> {
    let run = || -> Result<Vec<Result<(f64, f64, f64, f64)>>> {
        let scene = synth_scene(spec)?;
        let q = cfg_template.reference;
        let mix_spec = analyze(&scene.mixture, &cfg_template.stft)?;
        let desired_spec = analyze(&scene.desired, &cfg_template.stft)?;
        let late_spec = analyze(&scene.late, &cfg_template.stft)?;
        let params = estimate_parameters(&mix_spec, cfg_template)?;

        let energy = |m: &ndarray::Array2<num_complex::Complex64>| -> f64 {
            m.iter().map(|v| v.norm_sqr()).sum()
        };
        let desired_q_energy: f64 = (0..desired_spec.frames())
            .map(|t| {
                (0..desired_spec.bins())
                    .map(|f| desired_spec.coeffs[(q, t, f)].norm_sqr())
                    .sum::<f64>()
            })
            .sum();
        let late_q_energy: f64 = (0..late_spec.frames())
            .map(|t| {
                (0..late_spec.bins())
                    .map(|f| late_spec.coeffs[(q, t, f)].norm_sqr())
                    .sum::<f64>()
            })
            .sum();
        let reference = scene.desired.channel(q);

        let results = Method::ALL
            .iter()
            .map(|&method| -> Result<(f64, f64, f64, f64)> {
                let mut cfg = cfg_template.clone();
                cfg.method = method;
                let (mono, plan, diag) = enhance_spectrogram(&mix_spec, &params, &cfg)?;
                let out = synthesize_frames(&mono, &cfg.stft, mix_spec.source_len);
                let test = AudioBuffer {
                    samples: out.insert_axis(ndarray::Axis(0)),
                    sample_rate: cfg.stft.sample_rate,
                };
                let cd = cepstral_distance(&reference, &test)?;
                let fw = fwssnr(&reference, &test)?;

                let drr_gain = if late_q_energy > 0.0 && desired_q_energy > 0.0 {
                    let d_out = energy(&plan.apply_mono(&desired_spec, q)?);
                    let l_out = energy(&plan.apply_mono(&late_spec, q)?);
                    if l_out > 0.0 && d_out > 0.0 {
                        10.0 * (d_out / l_out).log10()
                            - 10.0 * (desired_q_energy / late_q_energy).log10()
                    } else {
                        0.0
                    }
                } else {
                    0.0
                };
                Ok((cd, fw, diag.total_weighted_power(), drr_gain))
            })
            .collect();
        Ok(results)
    };
    match run() {
        Ok(rows) => rows,
        Err(e) => {
            let msg = e.to_string();
            Method::ALL
                .iter()
                .map(|_| Err(Error::Numeric(msg.clone())))
                .collect()
        }
    }
}

/// Builds the full bench CSV (header plus scenes x methods rows).
fn bench_csv(file: &FileConfig, flags: &PipelineFlags, seed: Option<u64>) -> Result<String> {
    let set = resolve_scene_set(file, seed)?;
    let cfg = resolve_pipeline(flags, file, set.base.sample_rate)?;
    echo_pipeline(&cfg);
    println!(
        "# scenes = {}, channels = {}, t60 = [{}, {}] s, snr = {} dB, base seed = {}",
        set.scenes, set.base.channels, set.t60_min, set.t60_max, set.base.snr_db, set.base.seed
    );

    let specs: Vec<SceneSpec> = (0..set.scenes)
        .map(|i| {
            let frac = if set.scenes > 1 {
                i as f64 / (set.scenes - 1) as f64
            } else {
                0.0
            };
            SceneSpec {
                t60: set.t60_min + (set.t60_max - set.t60_min) * frac,
                seed: set.base.seed.wrapping_add(i as u64),
                ..set.base.clone()
            }
        })
        .collect();

    let per_scene: Vec<Vec<Result<(f64, f64, f64, f64)>>> = specs
        .par_iter()
        .map(|spec| bench_scene(spec, &cfg))
        .collect();

    let mut csv = String::from("scene,method,status,cd,fwssnr,weighted_power,drr_gain\n");
    for (i, rows) in per_scene.iter().enumerate() {
        for (method, result) in Method::ALL.iter().zip(rows.iter()) {
            csv.push_str(&csv_row(i, *method, result));
        }
    }
    Ok(csv)
}

fn install_pool(jobs: usize) -> Result<Option<rayon::ThreadPool>> {
    if jobs == 0 {
        return Ok(None);
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map(Some)
        .map_err(|e| Error::Usage(format!("cannot build a {jobs}-thread pool: {e}")))
}

fn run_enhance(
    input: &Path,
    output: &Path,
    flags: &PipelineFlags,
    encoding: &str,
) -> Result<()> {
    preflight(flags)?;
    let encoding = match encoding {
        "int16" => WavEncoding::Int16,
        "float32" => WavEncoding::Float32,
        other => {
            return Err(Error::Usage(format!(
                "unknown encoding '{other}' (expected int16|float32)"
            )));
        }
    };
    let file = match &flags.config {
        Some(path) => FileConfig::parse(path)?,
        None => FileConfig::default(),
    };
    let buf = read_wav(input)?;
    let cfg = resolve_pipeline(flags, &file, buf.sample_rate)?;
    echo_pipeline(&cfg);
    println!(
        "# input: {} ({} channels, {} samples at {} Hz)",
        input.display(),
        buf.channels(),
        buf.len(),
        buf.sample_rate
    );

    let pool = install_pool(flags.jobs)?;
    let (enhanced, diagnostics) = match &pool {
        Some(p) => p.install(|| enhance(&buf, &cfg))?,
        None => enhance(&buf, &cfg)?,
    };
    write_wav(output, &enhanced, encoding)?;
    print!("{}", diagnostics.summary(&cfg));
    println!("# wrote {}", output.display());
    Ok(())
}

fn run_bench(spec: &Path, output: &Path, flags: &PipelineFlags, seed: Option<u64>) -> Result<()> {
    preflight(flags)?;
    let mut file = FileConfig::parse(spec)?;
    if let Some(extra) = &flags.config {
        // --config merges under the bench spec file
        let overlay = FileConfig::parse(extra)?;
        for (k, v) in overlay.values {
            file.values.entry(k).or_insert(v);
        }
    }
    let pool = install_pool(flags.jobs)?;
    let csv = match &pool {
        Some(p) => p.install(|| bench_csv(&file, flags, seed))?,
        None => bench_csv(&file, flags, seed)?,
    };
    std::fs::write(output, &csv)
        .map_err(|e| Error::Io { path: output.to_path_buf(), source: e })?;
    println!("# wrote {}", output.display());
    Ok(())
}

/// Entry point used by the binary; returns the process exit code
/// (0 ok, 1 usage, 2 I/O, 3 numeric failure).
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match CliArgs::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match &cli.command {
        CliCommand::Enhance { input, output, pipeline, encoding } => {
            run_enhance(input, output, pipeline, encoding)
        }
        CliCommand::Bench { spec, output, pipeline, seed } => {
            run_bench(spec, output, pipeline, *seed)
        }
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_file(dir: &Path, name: &str, contents: &str) -> PathBuf {
        let path = dir.join(name);
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        path
    }

    #[test]
    fn config_file_round_trip_and_unknown_key_rejection() {
        let dir = tempfile::tempdir().unwrap();
        let good = write_file(
            dir.path(),
            "good.conf",
            "# comment\n[pipeline]\nmethod = cascade\ndelay = 3\n[scene]\nscenes = 4\n",
        );
        let cfg = FileConfig::parse(&good).unwrap();
        assert_eq!(cfg.get("pipeline", "method"), Some("cascade"));
        assert_eq!(cfg.parsed::<usize>("scene", "scenes").unwrap(), Some(4));

        let bad = write_file(dir.path(), "bad.conf", "[pipeline]\nmthd = wpd\n");
        match FileConfig::parse(&bad) {
            Err(Error::Usage(msg)) => assert!(msg.contains("unknown key"), "{msg}"),
            other => panic!("expected usage error, got {other:?}"),
        }
    }

    #[test]
    fn schedule_parsing() {
        let s = parse_schedule("0:12,800:10,1500:8,3000:6,6000:6", 4, 8_000.0).unwrap();
        assert_eq!(s.bands.len(), 5);
        assert_eq!(s.bands[0].order, 12);
        assert_eq!(s.bands[4].lo_hz, 6_000.0);
        assert_eq!(s.bands[4].hi_hz, 8_000.0);

        assert!(parse_schedule("100:12", 4, 8_000.0).is_err()); // must start at 0
        assert!(parse_schedule("0:12,800:2", 4, 8_000.0).is_err()); // order < delay
        assert!(parse_schedule("0:12,800", 4, 8_000.0).is_err()); // malformed
    }

    #[test]
    fn lw_below_delay_is_a_usage_error_before_io() {
        let flags = PipelineFlags {
            lw: Some(2),
            delay: Some(4),
            ..Default::default()
        };
        match preflight(&flags) {
            Err(Error::Usage(msg)) => assert!(msg.contains("below"), "{msg}"),
            other => panic!("expected usage error, got {other:?}"),
        }
    }

    #[test]
    fn resolve_pipeline_applies_flag_over_file() {
        let dir = tempfile::tempdir().unwrap();
        let conf = write_file(
            dir.path(),
            "c.conf",
            "[pipeline]\nmethod = mpdr\niterations = 1\n",
        );
        let file = FileConfig::parse(&conf).unwrap();
        let flags = PipelineFlags {
            method: Some("wpd".into()),
            ..Default::default()
        };
        let cfg = resolve_pipeline(&flags, &file, 16_000).unwrap();
        assert_eq!(cfg.method, Method::Wpd); // flag wins
        assert_eq!(cfg.iterations, 1); // file fills the rest
        assert_eq!(cfg.stft.frame_len, 512);
    }

    #[test]
    fn cli_exit_codes() {
        // usage: unknown flag
        assert_eq!(run(["convbf", "enhance", "--bogus"]), 1);
        // usage: Lw below delay, before any I/O
        assert_eq!(
            run([
                "convbf", "enhance", "--lw", "2", "--delay", "4", "missing.wav", "out.wav"
            ]),
            1
        );
        // I/O: input does not exist
        assert_eq!(
            run(["convbf", "enhance", "/nonexistent/in.wav", "/tmp/out.wav"]),
            2
        );
        // help exits 0
        assert_eq!(run(["convbf", "--help"]), 0);
    }

    #[test]
    fn enhance_command_end_to_end() {
        let dir = tempfile::tempdir().unwrap();
        let scene = synth_scene(&SceneSpec {
            channels: 2,
            duration_s: 1.5,
            t60: 0.25,
            seed: 9,
            ..Default::default()
        })
        .unwrap();
        let input = dir.path().join("in.wav");
        write_wav(&input, &scene.mixture, WavEncoding::Float32).unwrap();
        let output = dir.path().join("out.wav");
        let code = run([
            "convbf",
            "enhance",
            "--method",
            "wpd",
            "--iterations",
            "1",
            input.to_str().unwrap(),
            output.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        let out = read_wav(&output).unwrap();
        assert_eq!(out.channels(), 1);
        assert_eq!(out.len(), scene.mixture.len());
    }

    #[test]
    fn bench_rows_and_determinism_across_jobs() {
        let dir = tempfile::tempdir().unwrap();
        let spec = write_file(
            dir.path(),
            "scenes.conf",
            "[scene]\nscenes = 2\nchannels = 2\nduration_s = 1.5\nseed = 77\n\
             t60_min = 0.25\nt60_max = 0.3\n[pipeline]\niterations = 1\nlw = 6\n",
        );
        let out1 = dir.path().join("a.csv");
        let out2 = dir.path().join("b.csv");
        let argv1 = [
            "convbf",
            "bench",
            spec.to_str().unwrap(),
            out1.to_str().unwrap(),
            "--jobs",
            "1",
        ];
        assert_eq!(run(argv1), 0);
        let argv2 = [
            "convbf",
            "bench",
            spec.to_str().unwrap(),
            out2.to_str().unwrap(),
            "--jobs",
            "3",
        ];
        assert_eq!(run(argv2), 0);

        let a = std::fs::read(&out1).unwrap();
        let b = std::fs::read(&out2).unwrap();
        assert_eq!(a, b, "CSV must be byte-identical across --jobs settings");

        let text = String::from_utf8(a).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + 2 * 4, "header plus scenes x methods");
        assert_eq!(lines[0], "scene,method,status,cd,fwssnr,weighted_power,drr_gain");
        assert!(lines[1].starts_with("0,wpe,ok,"));
        assert!(lines[4].starts_with("0,wpd,ok,"));
        assert!(lines[8].starts_with("1,wpd,ok,"));
    }
}
