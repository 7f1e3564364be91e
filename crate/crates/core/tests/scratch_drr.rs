//! Temporary debugging harness for the WPE DRR investigation.

use convbf::audio_io::AudioBuffer;
use convbf::estimation::{initial_power, update_power_from_estimate, PowerEstimate};
use convbf::pipeline::{
    build_filter_plan, enhance_spectrogram, estimate_parameters, Method, ParameterEstimate,
    PipelineConfig,
};
use convbf::simulate::{synth_scene, SceneSpec};
use convbf::stft::analyze;
use ndarray::Array2;
use num_complex::Complex64;

fn energy(m: &Array2<Complex64>) -> f64 {
    m.iter().map(|v| v.norm_sqr()).sum()
}

#[test]
#[ignore]
fn drr_experiment() {
    let duration: f64 = std::env::var("DRR_DURATION")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(2.5);
    let early: f64 = std::env::var("DRR_EARLY")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(50.0);
    let spec = SceneSpec {
        channels: 8,
        duration_s: duration,
        t60: 0.6,
        early_ms: early,
        snr_db: f64::INFINITY,
        seed: 70,
        ..Default::default()
    };
    let scene = synth_scene(&spec).unwrap();
    let cfg = PipelineConfig::default_for(Method::Wpe, 16_000).unwrap();
    let mix = analyze(&scene.mixture, &cfg.stft).unwrap();
    let desired = analyze(&scene.desired, &cfg.stft).unwrap();
    let late = analyze(&scene.late, &cfg.stft).unwrap();

    let d_in: f64 = (0..desired.frames())
        .map(|t| {
            (0..desired.bins())
                .map(|f| desired.coeffs[(0, t, f)].norm_sqr())
                .sum::<f64>()
        })
        .sum();
    let l_in: f64 = (0..late.frames())
        .map(|t| (0..late.bins()).map(|f| late.coeffs[(0, t, f)].norm_sqr()).sum::<f64>())
        .sum();
    println!("DRR in: {:.2} dB", 10.0 * (d_in / l_in).log10());

    let eval = |label: &str, params: &ParameterEstimate| {
        let (_, plan, _) = enhance_spectrogram(&mix, params, &cfg).unwrap();
        let y = plan.apply_mono(&mix, 0).unwrap();
        // desired-to-residual ratio: everything that is not the true desired
        // signal counts as residual
        let mut resid = 0.0;
        for t in 0..y.nrows() {
            for f in 0..y.ncols() {
                resid += (y[(t, f)] - desired.coeffs[(0, t, f)]).norm_sqr();
            }
        }
        let out_ratio = 10.0 * (d_in / resid).log10();
        let in_ratio = 10.0 * (d_in / l_in).log10();
        println!(
            "{label}: desired-to-residual out {out_ratio:.2} dB, in {in_ratio:.2} dB, gain {:.2} dB",
            out_ratio - in_ratio
        );
    };

    // iterations = 0: sigma^2 = captured power
    let mut cfg0 = cfg.clone();
    cfg0.iterations = 0;
    let params0 = estimate_parameters(&mix, &cfg0).unwrap();
    eval("iter0 ", &params0);

    // full loop
    let params2 = estimate_parameters(&mix, &cfg).unwrap();
    eval("iter2 ", &params2);

    // oracle sigma^2 from the true desired signal at the reference
    let d_q = Array2::from_shape_fn((desired.frames(), desired.bins()), |(t, f)| {
        desired.coeffs[(0, t, f)]
    });
    let oracle = ParameterEstimate {
        power: update_power_from_estimate(&d_q),
        steering: params0.steering.clone(),
    };
    eval("oracle", &oracle);

    // dissect one estimation iteration: is the MPDR output canceling speech?
    {
        use convbf::beamform::{apply_instantaneous, estimate_mpdr};
        use convbf::estimation::{estimate_steering, noise_covariance_from_edges};
        let orders = cfg.schedule.per_bin_orders(&cfg.stft);
        let power = initial_power(&mix);
        let bank = convbf::wpe::estimate_wpe_filters(
            &mix, &power, cfg.schedule.delay, &orders, cfg.loading,
        )
        .unwrap();
        let d_multi = convbf::wpe::apply_wpe(&mix, &bank).unwrap();
        let ncov = noise_covariance_from_edges(&d_multi, cfg.head_ms, cfg.tail_ms).unwrap();
        let v = estimate_steering(&d_multi, &ncov, 0, cfg.loading).unwrap();
        let mpdr = estimate_mpdr(&d_multi, &v, None, cfg.loading).unwrap();
        let d_hat = apply_instantaneous(&d_multi, &mpdr);

        let e_dhat: f64 = d_hat.iter().map(|v| v.norm_sqr()).sum();
        let e_desired: f64 = (0..desired.frames())
            .map(|t| {
                (0..desired.bins())
                    .map(|f| desired.coeffs[(0, t, f)].norm_sqr())
                    .sum::<f64>()
            })
            .sum();
        let e_wpe_q: f64 = (0..d_multi.frames())
            .map(|t| {
                (0..d_multi.bins())
                    .map(|f| d_multi.coeffs[(0, t, f)].norm_sqr())
                    .sum::<f64>()
            })
            .sum();
        println!(
            "loop dissection: E(mpdr out)/E(desired_q) = {:.2} dB, E(wpe_q)/E(desired_q) = {:.2} dB",
            10.0 * (e_dhat / e_desired).log10(),
            10.0 * (e_wpe_q / e_desired).log10()
        );
        // how close is |d_hat|^2 to the oracle power, split by frame energy
        let oracle_p = {
            let d_q = Array2::from_shape_fn((desired.frames(), desired.bins()), |(t, f)| {
                desired.coeffs[(0, t, f)]
            });
            update_power_from_estimate(&d_q)
        };
        let est_p = update_power_from_estimate(&d_hat);
        let mut by_level = [(0.0f64, 0usize); 2]; // [burst, gap]
        for t in 0..est_p.frames() {
            for f in 0..est_p.bins() {
                let o = oracle_p.sigma2[(t, f)];
                let e = est_p.sigma2[(t, f)];
                let idx = if o > 1e-2 * e_desired / (est_p.frames() * est_p.bins()) as f64 {
                    0
                } else {
                    1
                };
                by_level[idx].0 += 10.0 * (e / o).log10();
                by_level[idx].1 += 1;
            }
        }
        println!(
            "sigma2 bias vs oracle: burst frames {:+.2} dB (n={}), gap frames {:+.2} dB (n={})",
            by_level[0].0 / by_level[0].1 as f64,
            by_level[0].1,
            by_level[1].0 / by_level[1].1 as f64,
            by_level[1].1
        );
    }

    // classic WPE self-iteration: sigma^2 from the WPE output itself
    {
        let orders = cfg.schedule.per_bin_orders(&cfg.stft);
        let mut power = initial_power(&mix);
        for it in 0..4 {
            let bank = convbf::wpe::estimate_wpe_filters(
                &mix,
                &power,
                cfg.schedule.delay,
                &orders,
                cfg.loading,
            )
            .unwrap();
            let d = convbf::wpe::apply_wpe(&mix, &bank).unwrap();
            // gain of this iterate
            let y = Array2::from_shape_fn((d.frames(), d.bins()), |(t, f)| d.coeffs[(0, t, f)]);
            let mut resid = 0.0;
            for t in 0..y.nrows() {
                for f in 0..y.ncols() {
                    resid += (y[(t, f)] - desired.coeffs[(0, t, f)]).norm_sqr();
                }
            }
            println!(
                "self-iter {it}: gain {:.2} dB",
                10.0 * (d_in / resid).log10() - 10.0 * (d_in / l_in).log10()
            );
            power = initial_power(&d);
        }
    }

    // steering quality along the pipeline loop (noiseless scene)
    {
        let truth = scene.rtf_truth(cfg.stft.frame_len, 0);
        for iters in [1usize, 2, 4] {
            let mut cfg_i = cfg.clone();
            cfg_i.iterations = iters;
            let p = estimate_parameters(&mix, &cfg_i).unwrap();
            let mut angles: Vec<f64> = (5..100)
                .map(|f| {
                    convbf::numerics::hermitian_angle(p.steering.bin(f), truth.row(f))
                        .to_degrees()
                })
                .collect();
            angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
            println!(
                "pipeline iters {iters}: median steering angle {:.1} deg",
                angles[angles.len() / 2]
            );
            eval(&format!("pipeline-iter{iters}"), &p);
        }
    }

    // sanity: do the filters reduce the weighted objective at all?
    let params = &params0;
    let (plan, _) = build_filter_plan(&mix, params, &cfg).unwrap();
    if let convbf::pipeline::FilterPlan::Wpe(bank) = &plan {
        let norms: Vec<f64> = bank
            .filters
            .iter()
            .map(|f| f.taps.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt())
            .collect();
        let mean_norm = norms.iter().sum::<f64>() / norms.len() as f64;
        println!("mean filter norm {mean_norm:.3}");
        let obj = convbf::wpe::prediction_objective(&mix, bank, &params.power).unwrap();
        let zero_bank = convbf::wpe::WpeFilterBank {
            filters: bank
                .filters
                .iter()
                .map(|f| convbf::wpe::WpeFilter::zero(8, f.delay, f.order))
                .collect(),
        };
        let obj0 =
            convbf::wpe::prediction_objective(&mix, &zero_bank, &params.power).unwrap();
        let total: f64 = obj.iter().sum();
        let total0: f64 = obj0.iter().sum();
        println!("weighted objective: filtered {total:.4e} vs identity {total0:.4e}");
    }

    // per-octave DRR gains to see which bands misbehave
    let (_, plan, _) = enhance_spectrogram(&mix, params, &cfg).unwrap();
    let d_m = plan.apply_mono(&desired, 0).unwrap();
    let l_m = plan.apply_mono(&late, 0).unwrap();
    for (lo, hi) in [(0, 32), (32, 64), (64, 128), (128, 257)] {
        let d_band: f64 = (0..d_m.nrows())
            .map(|t| (lo..hi).map(|f| d_m[(t, f)].norm_sqr()).sum::<f64>())
            .sum();
        let l_band: f64 = (0..l_m.nrows())
            .map(|t| (lo..hi).map(|f| l_m[(t, f)].norm_sqr()).sum::<f64>())
            .sum();
        let d_band_in: f64 = (0..desired.frames())
            .map(|t| (lo..hi).map(|f| desired.coeffs[(0, t, f)].norm_sqr()).sum::<f64>())
            .sum();
        let l_band_in: f64 = (0..late.frames())
            .map(|t| (lo..hi).map(|f| late.coeffs[(0, t, f)].norm_sqr()).sum::<f64>())
            .sum();
        println!(
            "bins {lo:>3}-{hi:<3}: gain {:+.2} dB (in {:+.2} dB)",
            10.0 * (d_band / l_band).log10() - 10.0 * (d_band_in / l_band_in).log10(),
            10.0 * (d_band_in / l_band_in).log10(),
        );
    }
}
