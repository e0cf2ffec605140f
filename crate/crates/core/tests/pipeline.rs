use mvs_core::pipeline::{run_pipeline, PipelineConfig, Representation, StageConfig};
use mvs_core::scene::{render_scene, Scene, SceneConfig};

fn scene() -> Scene {
    render_scene(&SceneConfig {
        views: 3,
        width: 64,
        height: 64,
        focal: 64.0,
        ..SceneConfig::default()
    })
    .unwrap()
}

fn with(representation: Representation) -> PipelineConfig {
    PipelineConfig {
        representation,
        ..PipelineConfig::default()
    }
}

#[test]
fn classification_depths_are_hypotheses() {
    let s = scene();
    let est = run_pipeline(
        &with(Representation::Classification),
        &s.cameras,
        &s.images,
        s.depth_range,
        0,
    )
    .unwrap();
    let last = est.stages.last().unwrap();
    for p in 0..est.depth.len() {
        if !est.depth.mask[p] {
            continue;
        }
        let d = est.depth.values[p] as f64;
        let column = last.hypotheses.column(p);
        assert!(
            column.iter().any(|h| (*h as f32) as f64 == d),
            "pixel {p}: {d} not among hypotheses"
        );
    }
}

#[test]
fn unification_yields_fractional_depths() {
    let s = scene();
    let cfg = with(Representation::Unification);
    let est = run_pipeline(&cfg, &s.cameras, &s.images, s.depth_range, 0).unwrap();
    let last = est.stages.last().unwrap();
    let fractional = (0..est.depth.len())
        .filter(|&p| est.depth.mask[p])
        .filter(|&p| {
            let d = est.depth.values[p] as f64;
            last.hypotheses.column(p).iter().all(|h| (h - d).abs() > 1e-4)
        })
        .count();
    assert!(
        fractional * 2 > est.depth.valid_count(),
        "{fractional} of {}",
        est.depth.valid_count()
    );
}

#[test]
fn single_stage_cascade_matches_its_only_stage() {
    let s = scene();
    let one = PipelineConfig {
        stages: vec![StageConfig {
            fraction: 1.0,
            planes: 32,
            interval_ratio: 1.0,
        }],
        ..PipelineConfig::default()
    };
    let a = run_pipeline(&one, &s.cameras, &s.images, s.depth_range, 0).unwrap();
    let b = run_pipeline(&one, &s.cameras, &s.images, s.depth_range, 0).unwrap();
    assert_eq!(a.stages.len(), 1);
    assert_eq!(a.depth, a.stages[0].depth);
    assert_eq!(a.depth, b.depth);
}

#[test]
fn invalid_cascade_is_rejected() {
    let s = scene();
    let mut cfg = PipelineConfig::default();
    cfg.stages[1].fraction = 0.1;
    assert!(run_pipeline(&cfg, &s.cameras, &s.images, s.depth_range, 0).is_err());
    cfg = PipelineConfig::default();
    cfg.stages[0].planes = 1;
    assert!(run_pipeline(&cfg, &s.cameras, &s.images, s.depth_range, 0).is_err());
}
