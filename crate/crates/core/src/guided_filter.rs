//! Guided filter with a color guide.
//!
//! Within every `(2r+1)^2` window the output is modeled as `q = a . I + b`
//! for the RGB guide `I`, with `a = (Sigma + mu Id)^-1 cov(I, p)` and
//! `b = mean(p) - a . mean(I)`. Coefficients are averaged over all windows
//! covering a pixel. Windows are truncated at the border and statistics
//! normalized by the in-image pixel count.

use rayon::prelude::*;

use crate::error::Result;
use crate::params::GuidedFilterParams;
use crate::raster::{check_dims, Image, ScalarField};
use crate::Error;

/// Mean over the truncated `(2r+1)^2` window around each pixel.
pub fn box_mean(src: &[f64], width: usize, height: usize, radius: usize) -> Vec<f64> {
    debug_assert_eq!(src.len(), width * height);
    let mut horiz = vec![0.0; src.len()];
    let mut prefix = vec![0.0; width.max(height) + 1];
    for v in 0..height {
        let row = &src[v * width..(v + 1) * width];
        for (u, x) in row.iter().enumerate() {
            prefix[u + 1] = prefix[u] + x;
        }
        for u in 0..width {
            let lo = u.saturating_sub(radius);
            let hi = (u + radius + 1).min(width);
            horiz[v * width + u] = prefix[hi] - prefix[lo];
        }
    }
    let mut out = vec![0.0; src.len()];
    for u in 0..width {
        for v in 0..height {
            prefix[v + 1] = prefix[v] + horiz[v * width + u];
        }
        let nx = ((u + radius + 1).min(width) - u.saturating_sub(radius)) as f64;
        for v in 0..height {
            let lo = v.saturating_sub(radius);
            let hi = (v + radius + 1).min(height);
            out[v * width + u] = (prefix[hi] - prefix[lo]) / (nx * (hi - lo) as f64);
        }
    }
    out
}

fn product(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

/// Inverse of a symmetric positive definite 3x3 matrix given as
/// `[xx, xy, xz, yy, yz, zz]`.
#[inline]
fn solve_spd3(s: [f64; 6], rhs: [f64; 3]) -> [f64; 3] {
    let [xx, xy, xz, yy, yz, zz] = s;
    let c00 = yy * zz - yz * yz;
    let c01 = xz * yz - xy * zz;
    let c02 = xy * yz - xz * yy;
    let c11 = xx * zz - xz * xz;
    let c12 = xz * xy - xx * yz;
    let c22 = xx * yy - xy * xy;
    let det = xx * c00 + xy * c01 + xz * c02;
    [
        (c00 * rhs[0] + c01 * rhs[1] + c02 * rhs[2]) / det,
        (c01 * rhs[0] + c11 * rhs[1] + c12 * rhs[2]) / det,
        (c02 * rhs[0] + c12 * rhs[1] + c22 * rhs[2]) / det,
    ]
}

/// Filters `input` with `guide` as the edge-preserving guidance image.
pub fn guided_filter(input: &ScalarField, guide: &Image, params: &GuidedFilterParams) -> Result<ScalarField> {
    check_dims("input vs guide", (input.width(), input.height()), (guide.width(), guide.height()))?;
    if !input.is_complete() {
        return Err(Error::invalid("guided filter input must have no invalid pixels"));
    }
    if params.radius < 1 || params.mu.is_nan() || params.mu <= 0.0 {
        return Err(Error::invalid("guided filter needs radius >= 1 and mu > 0"));
    }
    let (w, h, r) = (input.width(), input.height(), params.radius);
    if input.is_empty() {
        return Ok(input.clone());
    }

    // The model is affine in p, so filtering p - p0 and adding p0 back is
    // equivalent; it makes constant inputs come back exactly.
    let offset = input.values()[0];
    let p: Vec<f64> = input.values().iter().map(|x| x - offset).collect();
    let chan: [Vec<f64>; 3] = std::array::from_fn(|c| guide.data().iter().skip(c).step_by(3).copied().collect());

    let mean = |x: &[f64]| box_mean(x, w, h, r);
    let mean_i: [Vec<f64>; 3] = std::array::from_fn(|c| mean(&chan[c]));
    let mean_p = mean(&p);
    let mean_ip: [Vec<f64>; 3] = std::array::from_fn(|c| mean(&product(&chan[c], &p)));
    const PAIRS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];
    let mean_ii: [Vec<f64>; 6] = std::array::from_fn(|k| {
        let (a, b) = PAIRS[k];
        mean(&product(&chan[a], &chan[b]))
    });

    let mu = params.mu;
    let coeffs: Vec<[f64; 4]> = (0..w * h)
        .into_par_iter()
        .map(|i| {
            let mi = [mean_i[0][i], mean_i[1][i], mean_i[2][i]];
            let mp = mean_p[i];
            let cov = [
                mean_ip[0][i] - mi[0] * mp,
                mean_ip[1][i] - mi[1] * mp,
                mean_ip[2][i] - mi[2] * mp,
            ];
            let sigma: [f64; 6] = std::array::from_fn(|k| {
                let (a, b) = PAIRS[k];
                let reg = if a == b { mu } else { 0.0 };
                mean_ii[k][i] - mi[a] * mi[b] + reg
            });
            let a = solve_spd3(sigma, cov);
            let b = mp - a[0] * mi[0] - a[1] * mi[1] - a[2] * mi[2];
            [a[0], a[1], a[2], b]
        })
        .collect();

    let coeff_means: [Vec<f64>; 4] = std::array::from_fn(|k| {
        let plane: Vec<f64> = coeffs.iter().map(|c| c[k]).collect();
        mean(&plane)
    });
    let values = (0..w * h)
        .map(|i| {
            coeff_means[0][i] * chan[0][i]
                + coeff_means[1][i] * chan[1][i]
                + coeff_means[2][i] * chan[2][i]
                + coeff_means[3][i]
                + offset
        })
        .collect();
    ScalarField::from_values(w, h, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_guide(w: usize, h: usize, seed: u64) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Image::from_fn(w, h, |_, _| [rng.gen(), rng.gen(), rng.gen()])
    }

    #[test]
    fn box_mean_matches_direct_window_average() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (w, h, r) = (13, 9, 3);
        let src: Vec<f64> = (0..w * h).map(|_| rng.gen()).collect();
        let fast = box_mean(&src, w, h, r);
        for v in 0..h {
            for u in 0..w {
                let (mut s, mut n) = (0.0, 0.0);
                for y in v.saturating_sub(r)..(v + r + 1).min(h) {
                    for x in u.saturating_sub(r)..(u + r + 1).min(w) {
                        s += src[y * w + x];
                        n += 1.0;
                    }
                }
                assert!((fast[v * w + u] - s / n).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_input_is_a_fixpoint() {
        let guide = random_guide(40, 30, 1);
        let p = ScalarField::constant(40, 30, 0.37);
        let q = guided_filter(&p, &guide, &GuidedFilterParams { radius: 5, mu: 1e-3 }).unwrap();
        assert!(q.values().iter().all(|&x| x == 0.37));
    }

    #[test]
    fn linear_in_the_input() {
        let guide = random_guide(48, 32, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = ScalarField::from_fn(48, 32, |_, _| rng.gen());
        let params = GuidedFilterParams { radius: 4, mu: 1e-3 };
        let (alpha, beta) = (2.5, -0.7);
        let q = guided_filter(&p, &guide, &params).unwrap();
        let q2 = guided_filter(&p.map(|x| alpha * x + beta), &guide, &params).unwrap();
        for (a, b) in q.values().iter().zip(q2.values()) {
            assert!((alpha * a + beta - b).abs() < 1e-9);
        }
    }

    // Two flat guide regions with a vertical edge; the input is a noisy step
    // on the same edge.
    #[test]
    fn step_edge_is_kept_and_noise_drops() {
        let (w, h, edge) = (64, 48, 32);
        let guide = Image::from_fn(w, h, |u, _| if u < edge { [0.2, 0.3, 0.25] } else { [0.8, 0.7, 0.75] });
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = ScalarField::from_fn(w, h, |u, _| (if u < edge { 0.3 } else { 0.8 }) + rng.gen_range(-0.05..0.05));
        let q = guided_filter(&p, &guide, &GuidedFilterParams { radius: 6, mu: 1e-4 }).unwrap();

        let variance = |f: &ScalarField, left: bool| {
            let vals: Vec<f64> = (0..h)
                .flat_map(|v| (0..w).map(move |u| (u, v)))
                .filter(|&(u, _)| if left { u < edge } else { u >= edge })
                .map(|(u, v)| f.value(u, v))
                .collect();
            let m = vals.iter().sum::<f64>() / vals.len() as f64;
            vals.iter().map(|x| (x - m).powi(2)).sum::<f64>() / vals.len() as f64
        };
        for left in [true, false] {
            assert!(variance(&q, left) * 10.0 <= variance(&p, left));
        }
        for v in 0..h {
            let jump = (1..w)
                .max_by(|&a, &b| {
                    let da = (q.value(a, v) - q.value(a - 1, v)).abs();
                    let db = (q.value(b, v) - q.value(b - 1, v)).abs();
                    da.total_cmp(&db)
                })
                .unwrap();
            assert!(jump.abs_diff(edge) <= 1, "row {v}: jump at {jump}");
        }
    }

    #[test]
    fn overshoot_stays_small() {
        let (w, h) = (64, 64);
        let guide = Image::from_fn(w, h, |u, v| if (u / 16 + v / 16) % 2 == 0 { [0.1; 3] } else { [0.9; 3] });
        let p = ScalarField::from_fn(w, h, |u, v| if (u / 16 + v / 16) % 2 == 0 { 0.2 } else { 0.9 });
        let q = guided_filter(&p, &guide, &GuidedFilterParams { radius: 8, mu: 1e-3 }).unwrap();
        let slack = 0.05 * (0.9 - 0.2);
        assert!(q.values().iter().all(|&x| x >= 0.2 - slack && x <= 0.9 + slack));
    }

    #[test]
    fn rejects_bad_input() {
        let guide = random_guide(8, 8, 0);
        let p = ScalarField::constant(8, 7, 1.0);
        assert!(guided_filter(&p, &guide, &GuidedFilterParams::default()).is_err());
        let holes = ScalarField::constant(8, 8, 1.0).with_valid(vec![false; 64]).unwrap();
        assert!(guided_filter(&holes, &guide, &GuidedFilterParams::default()).is_err());
    }
}
