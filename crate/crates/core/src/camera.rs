//! Stereo rig geometry: disparity to depth, depth to ray distance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::ScalarField;

/// Pinhole intrinsics of the left camera plus the stereo baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraRig {
    /// Focal length along u, pixels.
    pub fx: f64,
    /// Focal length along v, pixels.
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    /// Meters.
    pub baseline: f64,
}

impl CameraRig {
    pub fn validate(&self, width: usize, height: usize) -> Result<()> {
        let finite = [self.fx, self.fy, self.cx, self.cy, self.baseline]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::invalid("camera parameters must be finite"));
        }
        if self.fx <= 0.0 || self.fy <= 0.0 || self.baseline <= 0.0 {
            return Err(Error::invalid("fx, fy and baseline must be positive"));
        }
        if !(0.0..width as f64).contains(&self.cx) || !(0.0..height as f64).contains(&self.cy) {
            return Err(Error::invalid(format!(
                "principal point ({}, {}) outside a {width}x{height} image",
                self.cx, self.cy
            )));
        }
        Ok(())
    }

    /// Ratio of ray length to depth at pixel `(u, v)`.
    #[inline]
    pub fn ray_stretch(&self, u: f64, v: f64) -> f64 {
        let x = (u - self.cx) / self.fx;
        let y = (v - self.cy) / self.fy;
        (x * x + y * y + 1.0).sqrt()
    }
}

/// `d = fx * baseline / D`. Missing or non-positive disparities produce
/// invalid depth.
pub fn disparity_to_depth(disparity: &ScalarField, rig: &CameraRig) -> ScalarField {
    let scale = rig.fx * rig.baseline;
    let (values, valid): (Vec<f64>, Vec<bool>) = disparity
        .values()
        .iter()
        .zip(disparity.valid())
        .map(|(&disp, &ok)| {
            if ok && disp > 0.0 {
                let depth = scale / disp;
                if depth.is_finite() {
                    return (depth, true);
                }
            }
            (0.0, false)
        })
        .unzip();
    ScalarField::with_mask(disparity.width(), disparity.height(), values, valid)
        .expect("dimensions carried over from input")
}

/// Inverse of [`disparity_to_depth`]; invalid or non-positive depth gives
/// invalid disparity.
pub fn depth_to_disparity(depth: &ScalarField, rig: &CameraRig) -> ScalarField {
    // Same formula: D = fx * baseline / d.
    disparity_to_depth(depth, rig)
}

/// Euclidean distance along the viewing ray from depth along the optical
/// axis: `l = d * sqrt(((u-cx)/fx)^2 + ((v-cy)/fy)^2 + 1)`.
pub fn depth_to_distance(depth: &ScalarField, rig: &CameraRig) -> Result<ScalarField> {
    let missing = depth.invalid_count();
    if missing > 0 {
        return Err(Error::IncompleteDepth(missing));
    }
    let w = depth.width();
    Ok(ScalarField::from_fn(w, depth.height(), |u, v| {
        depth.value(u, v) * rig.ray_stretch(u as f64, v as f64)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rig(fx: f64, baseline: f64) -> CameraRig {
        CameraRig {
            fx,
            fy: fx,
            cx: 2.0,
            cy: 1.0,
            baseline,
        }
    }

    #[test]
    fn disparity_examples() {
        let disp = ScalarField::with_mask(3, 1, vec![100.0, 7.0, -1.0], vec![true, false, true]).unwrap();
        let d = disparity_to_depth(&disp, &rig(1000.0, 0.5));
        assert_eq!(d.get(0, 0), Some(5.0));
        assert_eq!(d.get(1, 0), None);
        assert_eq!(d.get(2, 0), None);

        let disp = ScalarField::from_values(1, 1, vec![8.0]).unwrap();
        let d = disparity_to_depth(&disp, &rig(2000.0, 0.2));
        assert!((d.value(0, 0) - 50.0).abs() < 1e-12);
    }

    #[test]
    fn zero_disparity_is_invalid() {
        let disp = ScalarField::from_values(1, 1, vec![0.0]).unwrap();
        assert!(!disparity_to_depth(&disp, &rig(1000.0, 0.5)).is_valid(0, 0));
    }

    #[test]
    fn distance_at_principal_point_and_sixty_degrees() {
        let w = 3000;
        let cam = CameraRig {
            fx: 1000.0,
            fy: 1000.0,
            cx: 10.0,
            cy: 0.0,
            baseline: 1.0,
        };
        let depth = ScalarField::constant(w, 1, 10.0);
        let l = depth_to_distance(&depth, &cam).unwrap();
        assert_eq!(l.value(10, 0), 10.0);
        // sqrt(3 * 10^6 + 10^6) / 10^3 = 2 at an offset of 1000 * sqrt(3) px.
        let stretch = cam.ray_stretch(10.0 + 1000.0 * 3f64.sqrt(), 0.0);
        assert!((10.0 * stretch - 20.0).abs() < 1e-12);
    }

    #[test]
    fn distance_requires_complete_depth() {
        let depth = ScalarField::with_mask(2, 1, vec![1.0, 1.0], vec![true, false]).unwrap();
        assert!(matches!(
            depth_to_distance(&depth, &rig(1000.0, 0.5)),
            Err(Error::IncompleteDepth(1))
        ));
    }

    #[test]
    fn anisotropic_focal_lengths() {
        let cam = CameraRig {
            fx: 100.0,
            fy: 200.0,
            cx: 0.0,
            cy: 0.0,
            baseline: 1.0,
        };
        let depth = ScalarField::constant(101, 201, 1.0);
        let l = depth_to_distance(&depth, &cam).unwrap();
        assert!((l.value(100, 0) - 2f64.sqrt()).abs() < 1e-12);
        assert!((l.value(0, 200) - 2f64.sqrt()).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn disparity_depth_round_trip(d in 0.1f64..1000.0, fx in 100.0f64..3000.0, b in 0.05f64..2.0) {
            let cam = rig(fx, b);
            let depth = ScalarField::from_values(1, 1, vec![d]).unwrap();
            let back = disparity_to_depth(&depth_to_disparity(&depth, &cam), &cam);
            prop_assert!(((back.value(0, 0) - d) / d).abs() < 1e-12);
        }

        // Brute-force 3D back-projection: X = (u-cx) d / fx, Y = (v-cy) d / fy, Z = d.
        #[test]
        fn distance_is_norm_of_backprojected_point(
            u in 0usize..640, v in 0usize..480, d in 0.5f64..500.0,
            fx in 200.0f64..2000.0, fy in 200.0f64..2000.0,
        ) {
            let cam = CameraRig { fx, fy, cx: 319.5, cy: 239.5, baseline: 0.2 };
            let x = (u as f64 - cam.cx) * d / fx;
            let y = (v as f64 - cam.cy) * d / fy;
            let norm = (x * x + y * y + d * d).sqrt();
            let l = d * cam.ray_stretch(u as f64, v as f64);
            prop_assert!((l - norm).abs() <= 1e-9 * norm);
            prop_assert!(l >= d);
        }

        #[test]
        fn stretch_grows_with_radial_offset(r1 in 0.0f64..2000.0, dr in 1e-3f64..500.0, angle in 0.0f64..std::f64::consts::TAU) {
            let cam = CameraRig { fx: 800.0, fy: 800.0, cx: 0.0, cy: 0.0, baseline: 0.2 };
            let (s, c) = angle.sin_cos();
            let near = cam.ray_stretch(r1 * c, r1 * s);
            let far = cam.ray_stretch((r1 + dr) * c, (r1 + dr) * s);
            prop_assert!(far > near);
            prop_assert!(near >= 1.0);
        }
    }
}
