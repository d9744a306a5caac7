//! Adaptive RANSAC for depth planes `d = a u + b v + c`.

use rand::seq::index::sample;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use super::Plane;
use crate::error::{Error, Result};
use crate::linalg::solve3;

/// Samples whose `(u, v)` triangle area is at most this are degenerate.
pub const DEGENERATE_AREA: f64 = 1e-9;
/// Consecutive degenerate draws tolerated before giving up.
pub const MAX_DEGENERATE_DRAWS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RansacParams {
    pub max_iters: usize,
    /// Confidence of having drawn at least one all-inlier sample.
    pub p: f64,
    /// Inlier threshold as a fraction of the median depth.
    pub theta_factor: f64,
}

impl Default for RansacParams {
    fn default() -> Self {
        RansacParams {
            max_iters: crate::params::DEFAULT_RANSAC_MAX_ITERS,
            p: crate::params::DEFAULT_RANSAC_P,
            theta_factor: crate::params::DEFAULT_THETA_FACTOR,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlaneFit {
    /// Least-squares refit on the best consensus set.
    pub plane: Plane,
    /// Consensus set of the best hypothesis, one flag per input point.
    pub inliers: Vec<bool>,
    pub inlier_count: usize,
    /// Inlier threshold used, meters.
    pub threshold: f64,
    pub iterations: usize,
}

/// Inlier threshold: `factor` times the median depth.
pub fn inlier_threshold(depths: &[f64], factor: f64) -> f64 {
    factor * median(depths)
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Iteration bound `log(1 - p) / log(1 - w^3)` for inlier ratio `w`.
pub fn adaptive_bound(inlier_ratio: f64, p: f64, cap: usize) -> usize {
    let good = inlier_ratio.powi(3);
    if good >= 1.0 {
        return 0;
    }
    if good <= 0.0 {
        return cap;
    }
    let n = (1.0 - p).ln() / (1.0 - good).ln();
    if n.is_finite() {
        (n.ceil().max(0.0) as usize).min(cap)
    } else {
        cap
    }
}

fn triangle_area(a: &[f64; 3], b: &[f64; 3], c: &[f64; 3]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])).abs()
}

fn plane_through(a: &[f64; 3], b: &[f64; 3], c: &[f64; 3]) -> Option<Plane> {
    let m = [[a[0], a[1], 1.0], [b[0], b[1], 1.0], [c[0], c[1], 1.0]];
    solve3(m, [a[2], b[2], c[2]], 1e-15).map(|[a, b, c]| Plane { a, b, c })
}

/// Least-squares plane over `points`, in coordinates centered on their mean.
pub fn fit_plane_least_squares(points: &[[f64; 3]]) -> Option<Plane> {
    if points.len() < 3 {
        return None;
    }
    let n = points.len() as f64;
    let mu = points.iter().map(|p| p[0]).sum::<f64>() / n;
    let mv = points.iter().map(|p| p[1]).sum::<f64>() / n;
    let (mut suu, mut suv, mut svv, mut su, mut sv) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let (mut sud, mut svd, mut sd) = (0.0, 0.0, 0.0);
    for p in points {
        let (u, v, d) = (p[0] - mu, p[1] - mv, p[2]);
        suu += u * u;
        suv += u * v;
        svv += v * v;
        su += u;
        sv += v;
        sud += u * d;
        svd += v * d;
        sd += d;
    }
    let [a, b, c0] = solve3([[suu, suv, su], [suv, svv, sv], [su, sv, n]], [sud, svd, sd], 1e-12)?;
    let plane = Plane {
        a,
        b,
        c: c0 - a * mu - b * mv,
    };
    plane.is_finite().then_some(plane)
}

/// Fits a depth plane to `(u, v, d)` points with adaptive RANSAC.
///
/// Deterministic for a given `seed`.
pub fn fit_plane_ransac(points: &[[f64; 3]], params: &RansacParams, seed: u64) -> Result<PlaneFit> {
    let n = points.len();
    if n < 3 {
        return Err(Error::Unfittable("fewer than 3 points with valid depth"));
    }
    let depths: Vec<f64> = points.iter().map(|p| p[2]).collect();
    let threshold = inlier_threshold(&depths, params.theta_factor);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut best: Option<(Plane, usize)> = None;
    let mut bound = params.max_iters;
    let mut iterations = 0;
    while iterations < bound {
        let mut hypothesis = None;
        for _ in 0..MAX_DEGENERATE_DRAWS {
            let idx = sample(&mut rng, n, 3);
            let (a, b, c) = (&points[idx.index(0)], &points[idx.index(1)], &points[idx.index(2)]);
            if triangle_area(a, b, c) > DEGENERATE_AREA {
                hypothesis = plane_through(a, b, c);
                if hypothesis.is_some() {
                    break;
                }
            }
        }
        let Some(plane) = hypothesis else { break };
        iterations += 1;

        let count = points
            .iter()
            .filter(|p| (p[2] - plane.predict(p[0], p[1])).abs() <= threshold)
            .count();
        if best.is_none_or(|(_, c)| count > c) {
            best = Some((plane, count));
            bound = adaptive_bound(count as f64 / n as f64, params.p, params.max_iters);
        }
    }

    let Some((hypothesis, inlier_count)) = best else {
        return Err(Error::Unfittable("every sample was degenerate"));
    };
    let inliers: Vec<bool> = points
        .iter()
        .map(|p| (p[2] - hypothesis.predict(p[0], p[1])).abs() <= threshold)
        .collect();
    let consensus: Vec<[f64; 3]> = points
        .iter()
        .zip(&inliers)
        .filter(|(_, &ok)| ok)
        .map(|(p, _)| *p)
        .collect();
    let plane = fit_plane_least_squares(&consensus).unwrap_or(hypothesis);
    Ok(PlaneFit {
        plane,
        inliers,
        inlier_count,
        threshold,
        iterations,
    })
}
