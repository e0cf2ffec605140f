use super::CostVolume;

/// Separable box filter over the spatial axes of each hypothesis plane,
/// applied `passes` times.
///
/// Each output is the mean of the valid cells in its `(2r+1)²` window, so
/// invalid cells neither contribute nor change; they stay invalid.
pub fn regularize_costs(cost: &CostVolume, radius: usize, passes: usize) -> CostVolume {
    let mut out = cost.clone();
    if radius == 0 {
        return out;
    }
    let (h, w) = (cost.height, cost.width);
    let hw = h * w;
    let mut sum = vec![0.0; hw];
    let mut cnt = vec![0.0; hw];
    let mut tmp_sum = vec![0.0; hw];
    let mut tmp_cnt = vec![0.0; hw];
    for _ in 0..passes {
        for m in 0..cost.planes {
            let base = m * hw;
            for i in 0..hw {
                let valid = out.is_valid(base + i);
                sum[i] = if valid { out.values[base + i] } else { 0.0 };
                cnt[i] = if valid { 1.0 } else { 0.0 };
            }
            box_rows(&sum, &cnt, &mut tmp_sum, &mut tmp_cnt, h, w, radius);
            box_cols(&tmp_sum, &tmp_cnt, &mut sum, &mut cnt, h, w, radius);
            for i in 0..hw {
                if out.is_valid(base + i) {
                    out.values[base + i] = sum[i] / cnt[i];
                }
            }
        }
    }
    out
}

fn box_rows(s: &[f64], c: &[f64], os: &mut [f64], oc: &mut [f64], h: usize, w: usize, r: usize) {
    for y in 0..h {
        for x in 0..w {
            let (lo, hi) = (x.saturating_sub(r), (x + r).min(w - 1));
            let (mut a, mut b) = (0.0, 0.0);
            for k in lo..=hi {
                a += s[y * w + k];
                b += c[y * w + k];
            }
            os[y * w + x] = a;
            oc[y * w + x] = b;
        }
    }
}

fn box_cols(s: &[f64], c: &[f64], os: &mut [f64], oc: &mut [f64], h: usize, w: usize, r: usize) {
    for y in 0..h {
        let (lo, hi) = (y.saturating_sub(r), (y + r).min(h - 1));
        for x in 0..w {
            let (mut a, mut b) = (0.0, 0.0);
            for k in lo..=hi {
                a += s[k * w + x];
                b += c[k * w + x];
            }
            os[y * w + x] = a;
            oc[y * w + x] = b;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vol(h: usize, w: usize, values: Vec<f64>) -> CostVolume {
        let n = values.len();
        CostVolume {
            planes: n / (h * w),
            height: h,
            width: w,
            values,
            counts: vec![2; n],
        }
    }

    #[test]
    fn radius_zero_is_identity() {
        let c = vol(2, 2, vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(regularize_costs(&c, 0, 3), c);
    }

    #[test]
    fn constant_unchanged() {
        let c = vol(5, 5, vec![0.25; 50]);
        let r = regularize_costs(&c, 2, 2);
        assert!(r.values.iter().all(|v| (*v - 0.25).abs() < 1e-15));
    }

    #[test]
    fn impulse_spreads_over_window() {
        let mut v = vec![0.0; 25];
        v[12] = 9.0;
        let r = regularize_costs(&vol(5, 5, v), 1, 1);
        for y in 0..5 {
            for x in 0..5 {
                let expect = if (1..=3).contains(&y) && (1..=3).contains(&x) {
                    1.0
                } else {
                    0.0
                };
                assert_eq!(r.values[y * 5 + x], expect, "({x},{y})");
            }
        }
    }

    #[test]
    fn invalid_cells_preserved_and_excluded() {
        let mut c = vol(1, 3, vec![1.0, 100.0, 3.0]);
        c.counts[1] = 1;
        c.values[1] = 0.0;
        let r = regularize_costs(&c, 1, 1);
        assert_eq!(r.values, vec![1.0, 0.0, 3.0]);
        assert!(!r.is_valid(1));
    }
}
