//! Acceptance checks. Each criterion prints one PASS/FAIL line; the process
//! exits nonzero if any fails.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mvs_core::fusion::{dynamic_filter, evaluate, fuse, geometric_check, photometric_filter, static_filter};
use mvs_core::fusion::{FilterParams, FusionView};
use mvs_core::geometry::HypothesisVolume;
use mvs_core::loss::{focal_loss, gfl, gradcheck, sample_scaling_stats, total_loss, ufl_naive, DedicatedFn, UflParams};
use mvs_core::optim::{binarize, fit_unity, random_labels, FitConfig, FitLoss, ScoreVolume};
use mvs_core::pipeline::{run_all, run_pipeline, PipelineConfig, Representation};
use mvs_core::scene::{render_scene, SceneConfig};
use mvs_core::unity::{generate_unity, regress_unity, UnityRole, UnityVolume};
use mvs_core::DepthMap;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    if elapsed < limit {
        Ok(())
    } else {
        Err(format!("took {elapsed:.2?}, limit {limit:?}"))
    }
}

fn round_trip() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (instances_per_batch, batches) = (1000, 100);
    let mut worst = 0.0f64;
    for _ in 0..batches {
        let planes = rng.random_range(2..=64);
        let hw = instances_per_batch;
        let mut depths = vec![0.0; planes * hw];
        let mut gt = vec![0.0f32; hw];
        for p in 0..hw {
            let mut d = rng.random_range(0.5..50.0);
            for m in 0..planes {
                depths[m * hw + p] = d;
                d += rng.random_range(0.01..2.0);
            }
            let (lo, hi) = (depths[p], depths[(planes - 1) * hw + p]);
            gt[p] = rng.random_range(lo..=hi) as f32;
        }
        let hyp = HypothesisVolume::new(planes, 1, hw, depths, 0).map_err(|e| e.to_string())?;
        let gt = DepthMap::from_values(1, hw, gt).map_err(|e| e.to_string())?;
        let labels = generate_unity(&gt, &hyp).map_err(|e| e.to_string())?;
        let back = regress_unity(&labels, &hyp).map_err(|e| e.to_string())?;
        for (a, b) in back.values.iter().zip(&gt.values) {
            worst = worst.max(((a - b) / b).abs() as f64);
        }
    }
    within(start.elapsed(), Duration::from_secs(5))?;
    check(
        worst <= 1e-6,
        format!(
            "10^5 instances, max relative error {worst:.2e}, {:.2?}",
            start.elapsed()
        ),
    )
}

fn loss_reductions() -> Outcome {
    let mut worst = 0.0f64;
    for i in 0..50 {
        let u = 0.01 + 0.98 * i as f64 / 49.0;
        for alpha in [0.1, 0.25, 0.5, 0.75, 0.9] {
            for gamma in [0.0, 1.0, 2.0] {
                for q in [0.0, 1.0] {
                    let fl = focal_loss(u, q, alpha, gamma);
                    worst = worst.max((ufl_naive(u, q, 1.0, alpha, gamma) - fl).abs());
                    worst = worst.max((gfl(u, q, alpha, gamma) - fl).abs());
                }
            }
        }
    }
    check(worst <= 1e-12, format!("750 grid points, max |difference| {worst:.2e}"))
}

fn dedicated_contract() -> Outcome {
    let pos = DedicatedFn::new(5.0, 1.0, 3.0).map_err(|e| e.to_string())?;
    let neg = DedicatedFn::new(5.0, 0.0, 1.0).map_err(|e| e.to_string())?;
    let grid: Vec<f64> = (0..1000).map(|i| i as f64 * 10.0 / 999.0).collect();
    let ok_range = |s: &DedicatedFn, lo: f64, hi: f64| grid.iter().all(|&x| (lo..hi).contains(&s.eval(x)));
    let monotone = |s: &DedicatedFn| grid.windows(2).all(|w| s.eval(w[1]) > s.eval(w[0]));
    let at_zero = pos.eval(0.0) == 1.0 && neg.eval(0.0) == 0.0;
    check(
        at_zero && monotone(&pos) && monotone(&neg) && ok_range(&pos, 1.0, 3.0) && ok_range(&neg, 0.0, 1.0),
        format!(
            "S+(0)={}, S-(0)={}, monotone {}/{}, ranges {}/{}",
            pos.eval(0.0),
            neg.eval(0.0),
            monotone(&pos),
            monotone(&neg),
            ok_range(&pos, 1.0, 3.0),
            ok_range(&neg, 0.0, 1.0)
        ),
    )
}

fn gradient() -> Outcome {
    let start = Instant::now();
    let g = gradcheck(&UflParams::default(), 19, 1e-6).map_err(|e| e.to_string())?;
    within(start.elapsed(), Duration::from_secs(1))?;
    check(
        g.max_rel_error < 1e-4,
        format!(
            "{} points, max relative error {:.2e}, {:.2?}",
            g.points,
            g.max_rel_error,
            start.elapsed()
        ),
    )
}

fn optimization() -> Outcome {
    let start = Instant::now();
    let interval = 0.1;
    let (labels, hyp) = random_labels(32, 16, 16, interval, (0.05, 1.0), 7).map_err(|e| e.to_string())?;
    let params = UflParams::default();
    let cfg = FitConfig {
        iters: 2000,
        loss: FitLoss::Ufl,
        ..FitConfig::default()
    };
    let ufl = fit_unity(&labels, &params, &cfg, Some(&hyp)).map_err(|e| e.to_string())?;
    let mae = ufl.final_point().mae.unwrap_or(f64::INFINITY);

    let binary = binarize(&labels);
    let fl_cfg = FitConfig {
        loss: FitLoss::Fl,
        ..cfg
    };
    let fl = fit_unity(&binary, &params, &fl_cfg, None).map_err(|e| e.to_string())?;
    let u = fl.scores.unity(&binary.mask);
    let agree = (0..binary.pixels())
        .filter(|&p| u.argmax(p) == binary.argmax(p))
        .count();
    within(start.elapsed(), Duration::from_secs(30))?;
    check(
        mae < 0.05 * interval && agree == binary.pixels(),
        format!(
            "UFL MAE {:.4} interval, FL argmax {agree}/{}, {:.2?}",
            mae / interval,
            binary.pixels(),
            start.elapsed()
        ),
    )
}

fn end_to_end_depth() -> Outcome {
    let start = Instant::now();
    let scene = render_scene(&SceneConfig {
        views: 3,
        ..SceneConfig::default()
    })
    .map_err(|e| e.to_string())?;
    let base = PipelineConfig::default();
    let delta = base.base_interval(scene.depth_range);
    let mask = scene.covisible_mask(0);
    let gt = &scene.depths[0];
    let run = |representation| {
        let cfg = PipelineConfig {
            representation,
            ..base.clone()
        };
        run_pipeline(&cfg, &scene.cameras, &scene.images, scene.depth_range, 0).map(|e| e.depth)
    };
    let stats = |est: &DepthMap| {
        let errs: Vec<f64> = (0..gt.len())
            .filter(|&i| mask[i])
            .map(|i| {
                if est.mask[i] {
                    (est.values[i] as f64 - gt.values[i] as f64).abs()
                } else {
                    f64::INFINITY
                }
            })
            .collect();
        let good = errs.iter().filter(|&&e| e < 0.25 * delta).count() as f64 / errs.len() as f64;
        let finite: Vec<f64> = errs.iter().copied().filter(|e| e.is_finite()).collect();
        (good, finite.iter().sum::<f64>() / finite.len() as f64)
    };
    let (good, mae_unif) = stats(&run(Representation::Unification).map_err(|e| e.to_string())?);
    let (_, mae_class) = stats(&run(Representation::Classification).map_err(|e| e.to_string())?);
    within(start.elapsed(), Duration::from_secs(120))?;
    check(
        good >= 0.95 && mae_unif < mae_class,
        format!(
            "{:.1}% of {} covisible pixels within 0.25 interval; MAE unification {:.3} vs classification {:.3} interval, {:.2?}",
            100.0 * good,
            mask.iter().filter(|m| **m).count(),
            mae_unif / delta,
            mae_class / delta,
            start.elapsed()
        ),
    )
}

fn all_zero_labels() -> Outcome {
    let (planes, h, w) = (8, 4, 4);
    let column: Vec<f64> = (0..planes).map(|i| 12.0 + 0.1 * i as f64).collect();
    let hyp = HypothesisVolume::broadcast(&column, h, w, 2).map_err(|e| e.to_string())?;
    let gt: Vec<f32> = (0..h * w).map(|i| if i % 2 == 0 { 10.0 } else { 20.0 }).collect();
    let gt = DepthMap::from_values(h, w, gt).map_err(|e| e.to_string())?;
    let labels = generate_unity(&gt, &hyp).map_err(|e| e.to_string())?;
    let all_zero = labels.values.iter().all(|v| *v == 0.0) && labels.mask.iter().all(|m| *m);

    let params = UflParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let estimate = UnityVolume::new(
        planes,
        h,
        w,
        (0..labels.values.len()).map(|_| rng.random_range(0.05..0.95)).collect(),
        labels.mask.clone(),
        UnityRole::Estimate,
    )
    .map_err(|e| e.to_string())?;
    let stages = params.stages();
    let loss =
        total_loss(&vec![estimate; stages], &vec![labels.clone(); stages], &params).map_err(|e| e.to_string())?;

    let mean = |s: &ScoreVolume| {
        let u = s.unity(&labels.mask);
        u.values.iter().sum::<f64>() / u.values.len() as f64
    };
    let cfg = FitConfig {
        iters: 200,
        ..FitConfig::default()
    };
    let fit = fit_unity(&labels, &params, &cfg, None).map_err(|e| e.to_string())?;
    let one = fit_unity(&labels, &params, &FitConfig { iters: 1, ..cfg }, None).map_err(|e| e.to_string())?;
    let every_down = one.scores.scores.iter().all(|s| *s < 0.0);
    let (before, after) = (mean(&ScoreVolume::zeros(planes, h, w)), mean(&fit.scores));
    check(
        all_zero && loss.total.is_finite() && every_down && after < before,
        format!(
            "labels all zero {all_zero}, total loss {:.4}, first step lowers every score {every_down}, mean u {before:.3} -> {after:.4}",
            loss.total
        ),
    )
}

fn fusion_quality() -> Outcome {
    let scene_cfg = SceneConfig::default();
    let scene = render_scene(&scene_cfg).map_err(|e| e.to_string())?;
    let cfg = PipelineConfig::default();
    let estimates = run_all(&cfg, &scene.cameras, &scene.images, scene.depth_range).map_err(|e| e.to_string())?;
    let views: Vec<FusionView> = estimates
        .iter()
        .zip(&scene.cameras)
        .zip(&scene.images)
        .map(|((e, c), i)| FusionView {
            camera: c.clone(),
            depth: e.depth.clone(),
            image: Some(i.clone()),
        })
        .collect();
    let params = FilterParams::default();
    let cloud = fuse(&views, &params).map_err(|e| e.to_string())?;
    let cap = 20.0 * cfg.base_interval(scene.depth_range);
    let m = evaluate(&cloud, &scene.gt_cloud, cap).map_err(|e| e.to_string())?;
    let bound = 0.01 * scene_cfg.depth;

    let k = params.min_views;
    let degenerate = FilterParams {
        dyn_min_views: k,
        dyn_max_views: k,
        dyn_pixel_slope: params.pixel_threshold / k as f64,
        dyn_depth_slope: params.depth_threshold / k as f64,
        ..params.clone()
    };
    let filtered: Vec<DepthMap> = views
        .iter()
        .map(|v| photometric_filter(&v.depth, params.conf_threshold))
        .collect();
    let mut identical = true;
    let mut survivors = 0;
    for r in 0..views.len() {
        let sources: Vec<_> = (0..views.len())
            .filter(|&s| s != r)
            .map(|s| (&views[s].camera, &filtered[s]))
            .collect();
        let c = geometric_check((&views[r].camera, &filtered[r]), &sources).map_err(|e| e.to_string())?;
        let (a, b) = (static_filter(&c, &params), dynamic_filter(&c, &degenerate));
        identical &= a == b;
        survivors += a.iter().filter(|s| **s).count();
    }
    check(
        m.overall < bound && identical,
        format!(
            "{} points, accuracy {:.4} completeness {:.4} overall {:.4} (bound {bound}); degenerate dynamic identical over {survivors} survivors: {identical}",
            cloud.len(),
            m.accuracy,
            m.completeness,
            m.overall
        ),
    )
}

fn scaling_statistics() -> Outcome {
    let seeds = 10;
    let agree = (0..seeds)
        .map(|seed| sample_scaling_stats(3125, 32, seed).map(|s| s.combined()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?
        .iter()
        .filter(|h| h.peak_sum_bin() > h.peak_count_bin())
        .count();
    check(
        agree >= 9,
        format!("sum peak above count peak for {agree}/{seeds} seeds, 10^5 samples each"),
    )
}

fn run_cli(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_mvs"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!(
            "mvs {}: {}",
            args.join(" "),
            String::from_utf8_lossy(&out.stderr).trim()
        ))
    }
}

fn collect_outputs(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut files = Vec::new();
    for sub in ["depth", "confidence"] {
        let mut entries: Vec<_> = std::fs::read_dir(dir.join(sub))
            .map_err(|e| e.to_string())?
            .map(|e| e.map(|e| e.path()))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        entries.sort();
        for p in entries {
            files.push((p.display().to_string(), std::fs::read(&p).map_err(|e| e.to_string())?));
        }
    }
    files.push((
        "fused.ply".into(),
        std::fs::read(dir.join("fused.ply")).map_err(|e| e.to_string())?,
    ));
    Ok(files)
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut runs = Vec::new();
    for run in ["a", "b"] {
        let dir = tmp.path().join(run);
        let d = dir.to_str().ok_or("non-UTF-8 temp path")?;
        let ply = dir.join("fused.ply");
        run_cli(&["synth", "--seed", "5", "--out", d])?;
        run_cli(&["depth", "--seed", "5", "--scene", d])?;
        run_cli(&["fuse", "--seed", "5", "--scene", d, "--out", ply.to_str().unwrap()])?;
        runs.push(collect_outputs(&dir)?);
    }
    let same = runs[0].len() == runs[1].len() && runs[0].iter().zip(&runs[1]).all(|(a, b)| a.1 == b.1);
    check(
        same,
        format!(
            "{} PFM/PLY files compared across two runs, byte-identical {same}",
            runs[0].len()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("1 round-trip exactness", round_trip),
        ("2 loss-family reductions", loss_reductions),
        ("3 dedicated-function contract", dedicated_contract),
        ("4 gradient correctness", gradient),
        ("5 optimization recovery", optimization),
        ("6 end-to-end synthetic depth", end_to_end_depth),
        ("7 all-zero-label correctness", all_zero_labels),
        ("8 fusion quality", fusion_quality),
        ("9 scaling-factor statistics", scaling_statistics),
        ("10 determinism", determinism),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        match f() {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
