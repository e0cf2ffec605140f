//! Command-line surface of the `mvs` binary.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::depth::{DepthMap, Image};
use crate::error::{Error, Result};
use crate::fusion::{evaluate, fuse, FusionView};
use crate::geometry::{sample_hypotheses_uniform, Camera, DepthRange};
use crate::io::camera_txt::{self, CameraFile};
use crate::io::config::Config;
use crate::io::{pfm, ply, unity_bin};
use crate::loss::{gradcheck, sample_scaling_stats, scaling_factor_stats, Histogram, ScalingStats};
use crate::optim::{compare_losses, fit_unity, random_labels, FitLoss};
use crate::pipeline::run_all;
use crate::scene::render_scene;
use crate::unity::{generate_unity, regress_unity, UnityRole};

#[derive(Debug, Parser)]
#[command(name = "mvs", version, about = "Plane-sweep multi-view stereo toolkit")]
pub struct Cli {
    /// TOML configuration file; built-in defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for scene textures, noise and random labels.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a synthetic scene to a directory.
    Synth {
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate a depth map and confidence for every view of a scene.
    Depth {
        #[arg(long)]
        scene: PathBuf,
        /// Output directory; defaults to the scene directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Filter the estimated depth maps and fuse them into a PLY cloud.
    Fuse {
        #[arg(long)]
        scene: PathBuf,
        /// Directory holding `depth/` and `confidence/`; defaults to the scene.
        #[arg(long)]
        depth: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Accuracy, completeness and overall distance between two clouds.
    Eval {
        #[arg(long)]
        recon: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        dist_cap: Option<f64>,
    },
    /// Convert between depth maps and unity volumes.
    Unity {
        #[command(subcommand)]
        action: UnityAction,
    },
    /// Check the loss gradient against finite differences.
    Gradcheck {
        #[arg(long, default_value_t = 19)]
        grid: usize,
        #[arg(long, default_value_t = 1e-6)]
        step: f64,
    },
    /// Fit free scores to unity labels by gradient descent; prints a CSV trace.
    FitUnity {
        /// Label volume; random fractional labels when omitted.
        #[arg(long)]
        labels: Option<PathBuf>,
        #[command(flatten)]
        sweep: SweepArgs,
        #[arg(long)]
        loss: Option<FitLoss>,
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        /// Print a per-loss comparison table instead of a trace.
        #[arg(long)]
        compare: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Histogram the loss scaling factors.
    ScalingStats {
        /// Estimate volume; with `--labels`, replaces the random sample.
        #[arg(long, requires = "labels")]
        estimate: Option<PathBuf>,
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 32)]
        planes: usize,
    },
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// First hypothesis of a uniform sweep.
    #[arg(long, default_value_t = 1.0)]
    pub d_min: f64,
    #[arg(long, default_value_t = 0.1)]
    pub interval: f64,
    #[arg(long, default_value_t = 32)]
    pub planes: usize,
}

#[derive(Debug, Subcommand)]
pub enum UnityAction {
    /// Unity labels of a depth map over a uniform sweep.
    Generate {
        #[arg(long)]
        depth: PathBuf,
        #[command(flatten)]
        sweep: SweepArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Depth (and confidence) read back from a unity volume.
    Regress {
        #[arg(long)]
        unity: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        d_min: f64,
        #[arg(long, default_value_t = 0.1)]
        interval: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        confidence: Option<PathBuf>,
    },
}

/// Whether the command's own check passed; errors are reported separately.
pub type Passed = bool;

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn view_name(i: usize) -> String {
    format!("{i:03}")
}

fn write_out(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes()).map_err(|e| Error::io("<stdout>", e))
}

fn load_config(cli: &Cli) -> Result<Config> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(s) = cli.seed {
        cfg.scene.seed = s;
    }
    Ok(cfg)
}

/// Number of views in a scene directory: consecutive `images/NNN.pfm`.
fn count_views(scene: &Path) -> Result<usize> {
    let n = (0..)
        .take_while(|i| scene.join("images").join(format!("{}.pfm", view_name(*i))).is_file())
        .count();
    if n == 0 {
        return Err(Error::invalid(
            "scene",
            format!("no images/000.pfm under {}", scene.display()),
        ));
    }
    Ok(n)
}

struct SceneInputs {
    cameras: Vec<Camera>,
    images: Vec<Image>,
    range: DepthRange,
}

fn load_scene(scene: &Path, cfg: &Config) -> Result<SceneInputs> {
    let n = count_views(scene)?;
    let mut cameras = Vec::with_capacity(n);
    let mut images = Vec::with_capacity(n);
    let mut first: Option<CameraFile> = None;
    for i in 0..n {
        let img = pfm::read(&scene.join("images").join(format!("{}.pfm", view_name(i))))?.to_image()?;
        let cam = camera_txt::read(
            &scene.join("cams").join(format!("{}_cam.txt", view_name(i))),
            img.height,
            img.width,
        )?;
        cameras.push(cam.camera.clone());
        images.push(img);
        first.get_or_insert(cam);
    }
    let first = first.expect("at least one view");
    let s0 = &cfg.pipeline.stages[0];
    let span = first.interval * (s0.planes as f64 - 1.0) * s0.interval_ratio;
    Ok(SceneInputs {
        cameras,
        images,
        range: DepthRange::new(first.d_min, first.d_min + span)?,
    })
}

fn synth(cfg: &Config, out_dir: &Path) -> Result<String> {
    let scene = render_scene(&cfg.scene)?;
    let base = cfg.pipeline.base_interval(scene.depth_range);
    for sub in ["images", "cams", "depth_gt"] {
        create_dir(&out_dir.join(sub))?;
    }
    for (i, ((cam, img), depth)) in scene.cameras.iter().zip(&scene.images).zip(&scene.depths).enumerate() {
        let name = view_name(i);
        pfm::write(
            &out_dir.join("images").join(format!("{name}.pfm")),
            &pfm::Pfm::from_image(img)?,
        )?;
        pfm::write_depth(&out_dir.join("depth_gt").join(format!("{name}.pfm")), depth)?;
        let file = CameraFile {
            camera: cam.clone(),
            d_min: scene.depth_range.min,
            interval: base,
        };
        camera_txt::write(&out_dir.join("cams").join(format!("{name}_cam.txt")), &file)?;
    }
    ply::write(&out_dir.join("gt.ply"), &scene.gt_cloud)?;
    let cfg_path = out_dir.join("scene.toml");
    std::fs::write(&cfg_path, cfg.to_toml()?).map_err(|e| Error::io(&cfg_path, e))?;
    Ok(format!(
        "rendered {} views and {} ground-truth points to {}\n",
        scene.cameras.len(),
        scene.gt_cloud.len(),
        out_dir.display()
    ))
}

fn depth(cfg: &Config, scene: &Path, out_dir: &Path) -> Result<String> {
    let inputs = load_scene(scene, cfg)?;
    let estimates = run_all(&cfg.pipeline, &inputs.cameras, &inputs.images, inputs.range)?;
    create_dir(&out_dir.join("depth"))?;
    create_dir(&out_dir.join("confidence"))?;
    let mut valid = 0;
    for (i, est) in estimates.iter().enumerate() {
        let name = view_name(i);
        pfm::write_depth(&out_dir.join("depth").join(format!("{name}.pfm")), &est.depth)?;
        let conf = pfm::Pfm::from_confidence(&est.depth).expect("pipeline sets confidence");
        pfm::write(&out_dir.join("confidence").join(format!("{name}.pfm")), &conf)?;
        valid += est.depth.valid_count();
    }
    Ok(format!(
        "estimated {} depth maps ({valid} valid pixels) in {}\n",
        estimates.len(),
        out_dir.display()
    ))
}

fn read_estimate(dir: &Path, i: usize) -> Result<DepthMap> {
    let name = view_name(i);
    let mut depth = pfm::read_depth(&dir.join("depth").join(format!("{name}.pfm")))?;
    let conf = pfm::read(&dir.join("confidence").join(format!("{name}.pfm")))?;
    if conf.channels != 1 || (conf.height, conf.width) != (depth.height, depth.width) {
        return Err(Error::shape(
            format!("{}x{} confidence", depth.height, depth.width),
            format!("{}x{}x{}", conf.channels, conf.height, conf.width),
        ));
    }
    depth.confidence = Some(conf.data);
    Ok(depth)
}

fn fuse_cmd(cfg: &Config, scene: &Path, depth_dir: &Path, out: &Path) -> Result<String> {
    let inputs = load_scene(scene, cfg)?;
    let views: Vec<FusionView> = inputs
        .cameras
        .into_iter()
        .zip(inputs.images)
        .enumerate()
        .map(|(i, (camera, image))| {
            Ok(FusionView {
                camera,
                depth: read_estimate(depth_dir, i)?,
                image: Some(image),
            })
        })
        .collect::<Result<_>>()?;
    let cloud = fuse(&views, &cfg.filter)?;
    ply::write(out, &cloud)?;
    Ok(format!("fused {} points into {}\n", cloud.len(), out.display()))
}

fn histogram_table(name: &str, h: &Histogram) -> String {
    let mut s = format!("{name}\nbin,count,sum\n");
    for b in 0..h.counts.len() {
        s.push_str(&format!("{},{},{}\n", Histogram::label(b), h.counts[b], h.sums[b]));
    }
    s.push_str(&format!(
        "peak count bin {}, peak sum bin {}\n",
        Histogram::label(h.peak_count_bin()),
        Histogram::label(h.peak_sum_bin())
    ));
    s
}

fn stats_report(stats: &ScalingStats) -> String {
    [
        histogram_table("positive", &stats.positive),
        histogram_table("negative", &stats.negative),
        histogram_table("combined", &stats.combined()),
    ]
    .join("\n")
}

/// Execute one parsed command, writing its report to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<Passed> {
    let cfg = load_config(cli)?;
    let seed = cfg.scene.seed;
    match &cli.command {
        Command::Synth { out: dir } => write_out(out, &synth(&cfg, dir)?)?,
        Command::Depth { scene, out: dir } => write_out(out, &depth(&cfg, scene, dir.as_deref().unwrap_or(scene))?)?,
        Command::Fuse {
            scene,
            depth,
            out: path,
        } => write_out(out, &fuse_cmd(&cfg, scene, depth.as_deref().unwrap_or(scene), path)?)?,
        Command::Eval { recon, gt, dist_cap } => {
            let cap = match dist_cap {
                Some(c) => *c,
                None => cfg.dist_cap()?,
            };
            let m = evaluate(&ply::read(recon)?, &ply::read(gt)?, cap)?;
            write_out(
                out,
                &format!(
                    "accuracy {}\ncompleteness {}\noverall {}\n",
                    m.accuracy, m.completeness, m.overall
                ),
            )?;
        }
        Command::Unity { action } => match action {
            UnityAction::Generate {
                depth,
                sweep,
                out: path,
            } => {
                let gt = pfm::read_depth(depth)?;
                let hyp = sample_hypotheses_uniform(sweep.d_min, sweep.interval, sweep.planes, (gt.height, gt.width))?;
                let labels = generate_unity(&gt, &hyp)?;
                unity_bin::write(path, &labels)?;
                write_out(
                    out,
                    &format!("wrote {} label columns to {}\n", labels.pixels(), path.display()),
                )?;
            }
            UnityAction::Regress {
                unity,
                d_min,
                interval,
                out: path,
                confidence,
            } => {
                let mut vol = unity_bin::read(unity)?;
                vol.role = UnityRole::Estimate;
                let hyp = sample_hypotheses_uniform(*d_min, *interval, vol.planes, (vol.height, vol.width))?;
                let depth = regress_unity(&vol, &hyp)?;
                pfm::write_depth(path, &depth)?;
                if let Some(c) = confidence {
                    pfm::write(
                        c,
                        &pfm::Pfm::from_confidence(&depth).expect("regression sets confidence"),
                    )?;
                }
                write_out(
                    out,
                    &format!("wrote {} valid depths to {}\n", depth.valid_count(), path.display()),
                )?;
            }
        },
        Command::Gradcheck { grid, step } => {
            let r = gradcheck(&cfg.loss, *grid, *step)?;
            let (u, q, qp, stage) = r.worst;
            write_out(
                out,
                &format!(
                    "max relative error {:e} over {} points (worst at u={u}, q={q}, q+={qp}, stage {stage})\n",
                    r.max_rel_error, r.points
                ),
            )?;
            return Ok(r.max_rel_error < 1e-4);
        }
        Command::FitUnity {
            labels,
            sweep,
            loss,
            iters,
            lr,
            compare,
            out: path,
        } => {
            let mut fit = cfg.fit.clone();
            if let Some(l) = loss {
                fit.loss = *l;
            }
            if let Some(i) = iters {
                fit.iters = *i;
            }
            if let Some(l) = lr {
                fit.lr = *l;
            }
            let (labels, hyp) = match labels {
                Some(p) => {
                    let l = unity_bin::read(p)?;
                    let h = sample_hypotheses_uniform(sweep.d_min, sweep.interval, l.planes, (l.height, l.width))?;
                    (l, h)
                }
                None => random_labels(sweep.planes, 16, 16, sweep.interval, (0.05, 1.0), seed)?,
            };
            let text = if *compare {
                let mut s = String::from("loss,final_loss,mae\n");
                for row in compare_losses(&labels, &hyp, &cfg.loss, &fit)? {
                    let mae = row.mae.map(|m| m.to_string()).unwrap_or_default();
                    s.push_str(&format!("{},{},{}\n", row.loss.name(), row.final_loss, mae));
                }
                s
            } else {
                fit_unity(&labels, &cfg.loss, &fit, Some(&hyp))?.to_csv()
            };
            match path {
                Some(p) => std::fs::write(p, text).map_err(|e| Error::io(p, e))?,
                None => write_out(out, &text)?,
            }
        }
        Command::ScalingStats {
            estimate,
            labels,
            samples,
            planes,
        } => {
            let stats = match (estimate, labels) {
                (Some(e), Some(l)) => scaling_factor_stats(&unity_bin::read(e)?, &unity_bin::read(l)?)?,
                (None, Some(_)) => return Err(Error::invalid("estimate", "--labels needs --estimate")),
                _ => sample_scaling_stats(samples.div_ceil(*planes), *planes, seed)?,
            };
            write_out(out, &stats_report(&stats))?;
        }
    }
    Ok(true)
}
