//! Superpixel-level denoising and completion of stereo depth.
//!
//! The raw depth map is cleaned in five steps: a left/right photo-consistency
//! check grows the missing-pixel set, SLIC segments the clear image,
//! superpixels with enough valid depth get a RANSAC plane, the rest inherit
//! a plane through greedy matching, and finally the planes fill holes and
//! replace gross outliers.

mod matching;
mod ransac;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use matching::{
    apply_assignment, match_superpixels, matching_alpha, matching_cost, matching_cost_cosine, MatchAssignment,
    MatchPair,
};
pub use ransac::{
    adaptive_bound, fit_plane_least_squares, fit_plane_ransac, inlier_threshold, PlaneFit, RansacParams,
    DEGENERATE_AREA, MAX_DEGENERATE_DRAWS,
};

use crate::camera::{disparity_to_depth, CameraRig};
use crate::error::{Error, Result};
use crate::params::PipelineParams;
use crate::raster::{check_dims, Image, ScalarField};
use crate::seed::derive_seed;
use crate::superpixel::{slic_segment, SuperpixelSegmentation};

/// Depth as an affine function of pixel coordinates, `d = a u + b v + c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plane {
    /// Meters per pixel along u.
    pub a: f64,
    /// Meters per pixel along v.
    pub b: f64,
    /// Meters.
    pub c: f64,
}

impl Plane {
    #[inline]
    pub fn predict(&self, u: f64, v: f64) -> f64 {
        self.a * u + self.b * v + self.c
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.is_finite() && self.c.is_finite()
    }
}

/// Invalidates pixels whose disparity maps them onto a right-image pixel of
/// a different color.
///
/// The match of `(u, v)` is `(round(u - D), v)` in `right`; a pixel is kept
/// only if the match lies inside the image and the Euclidean RGB distance is
/// at most `epsilon`. Returns the new validity mask.
pub fn photo_consistency_check(
    left: &Image,
    right: &Image,
    disparity: &ScalarField,
    epsilon: f64,
) -> Result<Vec<bool>> {
    check_dims("left vs right image", (left.width(), left.height()), (right.width(), right.height()))?;
    check_dims(
        "image vs disparity",
        (left.width(), left.height()),
        (disparity.width(), disparity.height()),
    )?;
    let w = left.width();
    let mask = (0..left.len())
        .map(|i| {
            if !disparity.valid()[i] {
                return false;
            }
            let (u, v) = (i % w, i / w);
            let target = (u as f64 - disparity.values()[i]).round();
            if !(target >= 0.0 && target < w as f64) {
                return false;
            }
            let a = left.pixel_at(i);
            let b = right.pixel(target as usize, v);
            let d2: f64 = (0..3).map(|c| (a[c] - b[c]) * (a[c] - b[c])).sum();
            d2.sqrt() <= epsilon
        })
        .collect();
    Ok(mask)
}

/// A superpixel is reliable iff its valid pixel count is at least
/// `max(min_valid, fraction * size)`.
pub fn is_reliable(size: usize, valid: usize, min_valid: usize, fraction: f64) -> bool {
    // Slack absorbs rounding in `fraction * size` (0.6 * 5 is not 3.0).
    valid >= min_valid && valid as f64 >= fraction * size as f64 - 1e-9
}

/// Reliability flag per superpixel given a validity mask.
pub fn classify_superpixels(
    seg: &SuperpixelSegmentation,
    valid: &[bool],
    min_valid: usize,
    fraction: f64,
) -> Result<Vec<bool>> {
    if valid.len() != seg.labels().len() {
        return Err(Error::invalid("validity mask does not match segmentation"));
    }
    let mut counts = vec![0usize; seg.count()];
    for (&l, &ok) in seg.labels().iter().zip(valid) {
        if ok {
            counts[l as usize] += 1;
        }
    }
    Ok(seg
        .records
        .iter()
        .zip(&counts)
        .map(|(r, &c)| is_reliable(r.pixel_count, c, min_valid, fraction))
        .collect())
}

/// Fills missing depth from each pixel's superpixel plane and replaces valid
/// depth deviating from it by more than `theta_hat`. Everything else is kept
/// bit for bit. Output is floored at `depth_floor`.
pub fn complete_depth(
    depth: &ScalarField,
    seg: &SuperpixelSegmentation,
    theta_hat: f64,
    depth_floor: f64,
) -> Result<ScalarField> {
    check_dims("depth vs segmentation", (depth.width(), depth.height()), (seg.width(), seg.height()))?;
    let planes: Vec<Plane> = seg
        .records
        .iter()
        .enumerate()
        .map(|(i, r)| r.plane.ok_or(Error::MissingPlane(i)))
        .collect::<Result<_>>()?;
    let w = depth.width();
    let values = seg
        .labels()
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            let predicted = planes[l as usize].predict((i % w) as f64, (i / w) as f64);
            let keep = depth.valid()[i] && (depth.values()[i] - predicted).abs() <= theta_hat;
            let value = if keep { depth.values()[i] } else { predicted };
            value.max(depth_floor)
        })
        .collect();
    ScalarField::from_values(w, depth.height(), values)
}

/// Output of [`denoise_and_complete`], with intermediates for inspection.
#[derive(Debug, Clone)]
pub struct DepthCompletion {
    /// Completed depth `d'`, meters, no invalid pixels.
    pub depth: ScalarField,
    /// Raw depth `d` with the photo-consistency check folded into its mask.
    pub raw_depth: ScalarField,
    /// Segmentation; records carry final reliability and planes.
    pub segmentation: SuperpixelSegmentation,
    /// Reliability from the valid-count criterion alone, before superpixels
    /// whose plane fit failed were demoted.
    pub count_reliable: Vec<bool>,
    pub assignment: MatchAssignment,
    pub alpha: f64,
}

/// Full depth stage: disparity to depth, photo-consistency, SLIC,
/// reliability, RANSAC planes, greedy matching, completion.
pub fn denoise_and_complete(
    left: &Image,
    right: &Image,
    disparity: &ScalarField,
    rig: &CameraRig,
    params: &PipelineParams,
    seed: u64,
) -> Result<DepthCompletion> {
    params.validate()?;
    rig.validate(left.width(), left.height())?;
    let mask = photo_consistency_check(left, right, disparity, params.epsilon)?;
    let raw = disparity_to_depth(disparity, rig);
    let valid: Vec<bool> = mask.iter().zip(raw.valid()).map(|(a, b)| *a && *b).collect();
    let raw = raw.with_valid(valid)?;

    let mut seg = slic_segment(left, params.k_hat, params.m)?;
    let count_reliable = classify_superpixels(&seg, raw.valid(), params.min_valid, params.valid_fraction)?;

    let ransac = RansacParams {
        max_iters: params.ransac_max_iters,
        p: params.ransac_p,
        theta_factor: params.theta_factor,
    };
    let members = seg.members();
    let w = left.width();
    let planes: Vec<Option<Plane>> = members
        .par_iter()
        .enumerate()
        .map(|(id, pixels)| {
            if !count_reliable[id] {
                return None;
            }
            let points: Vec<[f64; 3]> = pixels
                .iter()
                .filter(|&&i| raw.valid()[i])
                .map(|&i| [(i % w) as f64, (i / w) as f64, raw.values()[i]])
                .collect();
            fit_plane_ransac(&points, &ransac, derive_seed(seed, id as u64))
                .ok()
                .map(|fit| fit.plane)
        })
        .collect();
    for ((record, plane), &ok) in seg.records.iter_mut().zip(planes).zip(&count_reliable) {
        record.reliable = ok && plane.is_some();
        record.plane = plane;
    }

    let alpha = matching_alpha(params.m, &seg);
    let assignment = match_superpixels(&seg, alpha)?;
    apply_assignment(&mut seg, &assignment)?;
    let depth = complete_depth(&raw, &seg, params.theta_hat, params.depth_floor)?;
    Ok(DepthCompletion {
        depth,
        raw_depth: raw,
        segmentation: seg,
        count_reliable,
        assignment,
        alpha,
    })
}
