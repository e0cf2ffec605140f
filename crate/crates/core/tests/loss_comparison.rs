use mvs_core::loss::UflParams;
use mvs_core::optim::{compare_losses, random_labels, FitConfig, FitLoss};

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Tiny positive targets at the coarsest stage.
#[test]
fn ufl_beats_gfl_on_tiny_targets() {
    let cfg = FitConfig {
        stage: 0,
        iters: 2000,
        ..FitConfig::default()
    };
    let params = UflParams::default();
    let (mut ufl, mut gfl) = (Vec::new(), Vec::new());
    for seed in 0..10 {
        let (labels, hyp) = random_labels(16, 6, 6, 0.1, (0.001, 0.05), seed).unwrap();
        for row in compare_losses(&labels, &hyp, &params, &cfg).unwrap() {
            match row.loss {
                FitLoss::Ufl => ufl.push(row.mae.unwrap()),
                FitLoss::Gfl => gfl.push(row.mae.unwrap()),
                _ => {}
            }
        }
    }
    let (u, g) = (median(ufl), median(gfl));
    assert!(u <= g, "median MAE ufl {u} gfl {g}");
}
