use std::path::Path;
use std::process::{Command, Output};

fn mvs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mvs")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn gradcheck_passes_on_defaults() {
    let o = mvs(&["gradcheck"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("max relative error"));
}

#[test]
fn unknown_subcommand_fails_with_usage() {
    let o = mvs(&["teleport"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn missing_input_is_a_one_line_error() {
    let o = mvs(&["eval", "--recon", "/nonexistent/a.ply", "--gt", "/nonexistent/b.ply"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.starts_with("mvs: "));
    assert_eq!(err.trim_end().lines().count(), 1);
}

#[test]
fn bad_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[scene]\nviews = 1\n").unwrap();
    let o = mvs(&["--config", p(&cfg), "synth", "--out", p(&dir.path().join("s"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn depth_fuse_eval_on_plane_scene() {
    let dir = tempfile::tempdir().unwrap();
    let scene = dir.path().join("scene");
    let cloud = dir.path().join("fused.ply");
    for args in [
        vec!["synth", "--out", p(&scene)],
        vec!["depth", "--scene", p(&scene)],
        vec!["fuse", "--scene", p(&scene), "--out", p(&cloud)],
    ] {
        let o = mvs(&args);
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let o = mvs(&["eval", "--recon", p(&cloud), "--gt", p(&scene.join("gt.ply"))]);
    assert!(o.status.success());
    let text = stdout(&o);
    let overall: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("overall "))
        .unwrap()
        .parse()
        .unwrap();
    // Default plane depth is 10.
    assert!(overall < 0.1, "{text}");
}

#[test]
fn unity_generate_then_regress() {
    let dir = tempfile::tempdir().unwrap();
    let depth = dir.path().join("d.pfm");
    let map = mvs_core::DepthMap::from_values(2, 2, vec![1.23, 2.0, 0.0, 3.9]).unwrap();
    mvs_core::io::pfm::write_depth(&depth, &map).unwrap();
    let labels = dir.path().join("l.unity");
    let back = dir.path().join("b.pfm");
    let o = mvs(&["unity", "generate", "--depth", p(&depth), "--out", p(&labels)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = mvs(&["unity", "regress", "--unity", p(&labels), "--out", p(&back)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let got = mvs_core::io::pfm::read_depth(&back).unwrap();
    assert_eq!(got.mask, map.mask);
    for i in 0..4 {
        assert!((got.values[i] - map.values[i]).abs() < 1e-5);
    }
}

#[test]
fn fit_unity_trace_decreases() {
    let o = mvs(&["fit-unity", "--iters", "50", "--planes", "8", "--seed", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("iter,loss,mae"));
    let losses: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(losses.len(), 51);
    assert!(losses[50] < losses[0]);
}

#[test]
fn scaling_stats_reports_bins() {
    let o = mvs(&["scaling-stats", "--samples", "20000", "--seed", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!stdout(&o).is_empty());
}
