//! Temporary harness to inspect metric behavior on bench-style scenes.

use convbf::audio_io::AudioBuffer;
use convbf::metrics::{cepstral_distance, fwssnr};
use convbf::pipeline::{enhance_spectrogram, estimate_parameters, Method, PipelineConfig};
use convbf::simulate::{synth_scene, SceneSpec};
use convbf::stft::{analyze, synthesize_frames};

/// Frame-level cepstral distances (no clamp awareness beyond the metric's
/// own), via short-frame splits of the signals: crude per-region CD.
fn cd_on_region(reference: &AudioBuffer, test: &AudioBuffer, lo: usize, hi: usize) -> f64 {
    let r = AudioBuffer::new(
        reference.samples.slice(ndarray::s![.., lo..hi]).to_owned(),
        reference.sample_rate,
    )
    .unwrap();
    let t = AudioBuffer::new(
        test.samples.slice(ndarray::s![.., lo..hi]).to_owned(),
        test.sample_rate,
    )
    .unwrap();
    cepstral_distance(&r, &t).unwrap()
}

#[test]
#[ignore]
fn cd_delta_by_frame_class() {
    let mut loud_deltas = Vec::new();
    let mut all_deltas = Vec::new();
    for i in 0..6u64 {
        let spec = SceneSpec {
            channels: 8,
            duration_s: 4.0,
            t60: 0.3 + 0.07 * i as f64,
            snr_db: 20.0,
            seed: 8800 + i,
            ..Default::default()
        };
        let scene = synth_scene(&spec).unwrap();
        let cfg = PipelineConfig::default_for(Method::Wpd, 16_000).unwrap();
        let stft_spec = analyze(&scene.mixture, &cfg.stft).unwrap();
        let params = estimate_parameters(&stft_spec, &cfg).unwrap();
        let reference = scene.desired.channel(0);

        let mut outs = Vec::new();
        for method in [Method::Cascade, Method::Wpd] {
            let mut cfg_m = cfg.clone();
            cfg_m.method = method;
            let (mono, _, _) = enhance_spectrogram(&stft_spec, &params, &cfg_m).unwrap();
            let out = synthesize_frames(&mono, &cfg.stft, stft_spec.source_len);
            outs.push(AudioBuffer {
                samples: out.insert_axis(ndarray::Axis(0)),
                sample_rate: 16_000,
            });
        }

        // overall
        let cd_c = cepstral_distance(&reference, &outs[0]).unwrap();
        let cd_w = cepstral_distance(&reference, &outs[1]).unwrap();
        all_deltas.push(cd_w - cd_c);

        // loudest 2 regions of 0.5 s each
        let n = reference.len();
        let win = 8_000;
        let mut best = (0usize, 0.0f64);
        for s in (0..n - win).step_by(win / 2) {
            let e: f64 = reference.samples.slice(ndarray::s![0, s..s + win]).iter().map(|v| v * v).sum();
            if e > best.1 {
                best = (s, e);
            }
        }
        let lo = best.0;
        let cd_c_loud = cd_on_region(&reference, &outs[0], lo, lo + win);
        let cd_w_loud = cd_on_region(&reference, &outs[1], lo, lo + win);
        loud_deltas.push(cd_w_loud - cd_c_loud);
        println!(
            "t60 {:.2}: overall delta {:+.4}, loudest-region delta {:+.4}",
            spec.t60,
            cd_w - cd_c,
            cd_w_loud - cd_c_loud
        );
    }
    println!(
        "mean overall {:+.4}, mean loud {:+.4}",
        all_deltas.iter().sum::<f64>() / all_deltas.len() as f64,
        loud_deltas.iter().sum::<f64>() / loud_deltas.len() as f64
    );
}

#[test]
#[ignore]
fn wpd_vs_cascade_deltas() {
    let duration: f64 = std::env::var("MB_DURATION")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(3.0);
    let iterations: usize = std::env::var("MB_ITER")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(2);
    let mut cd_deltas = Vec::new();
    let mut fw_deltas = Vec::new();
    for i in 0..10u64 {
        let spec = SceneSpec {
            channels: 8,
            duration_s: duration,
            t60: 0.25 + 0.05 * i as f64,
            snr_db: 20.0,
            tail_scale: {
                let r = 0.5 + 2.0 * (i % 5) as f64 / 4.0;
                (r / 2.5) * (r / 2.5)
            },
            seed: 7000 + i,
            ..Default::default()
        };
        let scene = synth_scene(&spec).unwrap();
        let mut cfg = PipelineConfig::default_for(Method::Wpd, 16_000).unwrap();
        cfg.iterations = iterations;
        if let Some(l) = std::env::var("MB_WPE_LOADING").ok().and_then(|s| s.parse().ok()) {
            cfg.wpe_loading = l;
        }
        let stft_spec = analyze(&scene.mixture, &cfg.stft).unwrap();
        let mut params = estimate_parameters(&stft_spec, &cfg).unwrap();
        let reference = scene.desired.channel(0);

        // optional oracle substitutions to localize estimation-quality effects
        if std::env::var("MB_ORACLE_V").is_ok() {
            let desired_spec = analyze(&scene.desired, &cfg.stft).unwrap();
            let ncov: Vec<_> = (0..stft_spec.bins())
                .map(|_| convbf::numerics::HermitianMatrix::identity(8))
                .collect();
            // rank-1 steering from the desired component itself
            let v = convbf::estimation::estimate_steering(&desired_spec, &ncov, 0, 1e-8).unwrap();
            params.steering = v;
        }
        if std::env::var("MB_ORACLE_P").is_ok() {
            let desired_spec = analyze(&scene.desired, &cfg.stft).unwrap();
            let d_q = ndarray::Array2::from_shape_fn(
                (desired_spec.frames(), desired_spec.bins()),
                |(t, f)| desired_spec.coeffs[(0, t, f)],
            );
            params.power = convbf::estimation::update_power_from_estimate(&d_q);
        }
        let mut results = Vec::new();
        for method in [Method::Cascade, Method::Wpd] {
            let mut cfg_m = cfg.clone();
            cfg_m.method = method;
            let (mono, _, _) = enhance_spectrogram(&stft_spec, &params, &cfg_m).unwrap();
            let out = synthesize_frames(&mono, &cfg.stft, stft_spec.source_len);
            let test = AudioBuffer {
                samples: out.insert_axis(ndarray::Axis(0)),
                sample_rate: 16_000,
            };
            results.push((
                cepstral_distance(&reference, &test).unwrap(),
                fwssnr(&reference, &test).unwrap(),
            ));
        }
        let cd_delta = results[1].0 - results[0].0; // wpd - cascade
        let fw_delta = results[1].1 - results[0].1;
        println!(
            "t60 {:.2}: cd wpd-cascade {:+.4}, fw wpd-cascade {:+.4}",
            spec.t60, cd_delta, fw_delta
        );
        cd_deltas.push(cd_delta);
        fw_deltas.push(fw_delta);
    }
    println!(
        "mean cd delta {:+.4}, mean fw delta {:+.4}",
        cd_deltas.iter().sum::<f64>() / 10.0,
        fw_deltas.iter().sum::<f64>() / 10.0
    );
}

#[test]
#[ignore]
fn metric_behavior() {
    let tail_scale: f64 = std::env::var("MB_TAIL")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(1.0);
    for seed in [6000u64, 6007, 6019] {
        let spec = SceneSpec {
            channels: 8,
            duration_s: 3.0,
            t60: 0.5,
            snr_db: 20.0,
            tail_scale,
            noise: if std::env::var("MB_PINK").is_ok() {
                convbf::simulate::NoiseKind::Pink
            } else {
                convbf::simulate::NoiseKind::White
            },
            seed,
            ..Default::default()
        };
        let scene = synth_scene(&spec).unwrap();
        let mut cfg = PipelineConfig::default_for(Method::Wpd, 16_000).unwrap();
        if let Some(l) = std::env::var("MB_WPE_LOADING").ok().and_then(|s| s.parse().ok()) {
            cfg.wpe_loading = l;
        }
        let stft_spec = analyze(&scene.mixture, &cfg.stft).unwrap();
        let params = estimate_parameters(&stft_spec, &cfg).unwrap();
        let reference = scene.desired.channel(0);

        let raw = scene.mixture.channel(0);
        print!(
            "seed {seed}: raw cd {:.2} fw {:.2}",
            cepstral_distance(&reference, &raw).unwrap(),
            fwssnr(&reference, &raw).unwrap()
        );
        for method in [Method::Wpe, Method::Mpdr, Method::Cascade, Method::Wpd] {
            let mut cfg_m = cfg.clone();
            cfg_m.method = method;
            let (mono, _, _) = enhance_spectrogram(&stft_spec, &params, &cfg_m).unwrap();
            let out = synthesize_frames(&mono, &cfg.stft, stft_spec.source_len);
            let test = AudioBuffer {
                samples: out.insert_axis(ndarray::Axis(0)),
                sample_rate: 16_000,
            };
            print!(
                " | {} cd {:.2} fw {:.2}",
                method,
                cepstral_distance(&reference, &test).unwrap(),
                fwssnr(&reference, &test).unwrap()
            );
        }
        println!();

        // residual decomposition for cascade: which error source dominates?
        let desired_spec = analyze(&scene.desired, &cfg.stft).unwrap();
        let late_spec = analyze(&scene.late, &cfg.stft).unwrap();
        let noise_spec = analyze(&scene.noise, &cfg.stft).unwrap();
        let mut cfg_c = cfg.clone();
        cfg_c.method = Method::Cascade;
        let (_, plan, _) = enhance_spectrogram(&stft_spec, &params, &cfg_c).unwrap();
        let out_d = plan.apply_mono(&desired_spec, 0).unwrap();
        let out_l = plan.apply_mono(&late_spec, 0).unwrap();
        let out_n = plan.apply_mono(&noise_spec, 0).unwrap();
        let mut e_dist = 0.0; // desired distortion: out_d - d_ref
        let mut e_late = 0.0;
        let mut e_noise = 0.0;
        let mut e_dref = 0.0;
        let mut e_late_in = 0.0;
        let mut e_noise_in = 0.0;
        for t in 0..out_d.nrows() {
            for f in 0..out_d.ncols() {
                e_dist += (out_d[(t, f)] - desired_spec.coeffs[(0, t, f)]).norm_sqr();
                e_late += out_l[(t, f)].norm_sqr();
                e_noise += out_n[(t, f)].norm_sqr();
                e_dref += desired_spec.coeffs[(0, t, f)].norm_sqr();
                e_late_in += late_spec.coeffs[(0, t, f)].norm_sqr();
                e_noise_in += noise_spec.coeffs[(0, t, f)].norm_sqr();
            }
        }
        println!(
            "  cascade residuals vs desired energy: distortion {:.1} dB, late {:.1} dB (in {:.1}), noise {:.1} dB (in {:.1})",
            10.0 * (e_dist / e_dref).log10(),
            10.0 * (e_late / e_dref).log10(),
            10.0 * (e_late_in / e_dref).log10(),
            10.0 * (e_noise / e_dref).log10(),
            10.0 * (e_noise_in / e_dref).log10(),
        );
    }
}
