//! sRGB to CIELAB (D65) conversion.

use serde::{Deserialize, Serialize};

use crate::raster::{Image, Rgb};

/// sRGB primaries to XYZ, D65.
const SRGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.412_456_4, 0.357_576_1, 0.180_437_5],
    [0.212_672_9, 0.715_152_2, 0.072_175_0],
    [0.019_333_9, 0.119_192_0, 0.950_304_1],
];

// Reference white is the matrix image of sRGB white, so (1,1,1) lands on
// L* = 100 and every neutral gray on a* = b* = 0.
const WHITE: [f64; 3] = [
    SRGB_TO_XYZ[0][0] + SRGB_TO_XYZ[0][1] + SRGB_TO_XYZ[0][2],
    SRGB_TO_XYZ[1][0] + SRGB_TO_XYZ[1][1] + SRGB_TO_XYZ[1][2],
    SRGB_TO_XYZ[2][0] + SRGB_TO_XYZ[2][1] + SRGB_TO_XYZ[2][2],
];

const EPSILON: f64 = 216.0 / 24389.0;
const KAPPA: f64 = 24389.0 / 27.0;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LabColor {
    pub l: f64,
    pub a: f64,
    pub b: f64,
}

impl LabColor {
    pub fn new(l: f64, a: f64, b: f64) -> Self {
        LabColor { l, a, b }
    }

    pub fn squared_distance(&self, other: &LabColor) -> f64 {
        let dl = self.l - other.l;
        let da = self.a - other.a;
        let db = self.b - other.b;
        dl * dl + da * da + db * db
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.l, self.a, self.b]
    }
}

#[inline]
fn srgb_to_linear(c: f64) -> f64 {
    if c <= 0.040_45 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

#[inline]
fn lab_f(t: f64) -> f64 {
    if t > EPSILON {
        t.cbrt()
    } else {
        (KAPPA * t + 16.0) / 116.0
    }
}

/// Converts an sRGB-encoded triple in `[0, 1]` to CIELAB.
pub fn srgb_to_cielab(rgb: Rgb) -> LabColor {
    let lin = rgb.map(srgb_to_linear);
    let xyz: [f64; 3] = std::array::from_fn(|row| {
        SRGB_TO_XYZ[row][0] * lin[0] + SRGB_TO_XYZ[row][1] * lin[1] + SRGB_TO_XYZ[row][2] * lin[2]
    });
    let fx = lab_f(xyz[0] / WHITE[0]);
    let fy = lab_f(xyz[1] / WHITE[1]);
    let fz = lab_f(xyz[2] / WHITE[2]);
    LabColor {
        l: 116.0 * fy - 16.0,
        a: 500.0 * (fx - fy),
        b: 200.0 * (fy - fz),
    }
}

/// Per-pixel CIELAB conversion of a whole image, row-major.
pub fn image_to_lab(image: &Image) -> Vec<LabColor> {
    image.pixels().map(srgb_to_cielab).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn black_and_white_anchor_the_lightness_scale() {
        let black = srgb_to_cielab([0.0, 0.0, 0.0]);
        assert_eq!(black, LabColor::new(0.0, 0.0, 0.0));
        let white = srgb_to_cielab([1.0, 1.0, 1.0]);
        assert!((white.l - 100.0).abs() < 1e-12);
        assert!(white.a.abs() < 1e-12 && white.b.abs() < 1e-12);
    }

    // Reference values from scikit-image 0.25 `rgb2lab` (D65, 2°). Its matrix
    // and white point differ from ours in the 5th digit, so the comparison is
    // loose.
    #[test]
    fn matches_reference_conversion() {
        let cases: [([f64; 3], [f64; 3]); 5] = [
            ([0.5, 0.5, 0.5], [53.388_964_741_114_32, 0.0, 0.0]),
            ([0.2, 0.4, 0.6], [42.008_000_589_382_185, -0.154_041_198_472_065_77, -32.842_897_418_997_154]),
            ([0.9, 0.1, 0.3], [49.485_585_928_223_13, 73.215_612_026_078_96, 27.091_188_827_590_496]),
            ([1.0, 0.0, 0.0], [53.240_587_943_744_9, 80.092_308_225_692_2, 67.202_751_044_428_7]),
            ([0.05, 0.05, 0.05], [3.555_302_666_527_531, 0.0, 0.0]),
        ];
        for (rgb, [l, a, b]) in cases {
            let lab = srgb_to_cielab(rgb);
            assert!((lab.l - l).abs() < 1e-3, "{rgb:?}: L {} vs {l}", lab.l);
            assert!((lab.a - a).abs() < 0.02, "{rgb:?}: a {} vs {a}", lab.a);
            assert!((lab.b - b).abs() < 0.02, "{rgb:?}: b {} vs {b}", lab.b);
        }
    }

    #[test]
    fn grays_have_no_chroma() {
        for i in 0..=20 {
            let g = i as f64 / 20.0;
            let lab = srgb_to_cielab([g, g, g]);
            assert!(lab.a.abs() < 1e-9 && lab.b.abs() < 1e-9, "gray {g}: {lab:?}");
        }
    }

    #[test]
    fn injective_on_a_coarse_grid() {
        let steps = 10;
        let mut seen: Vec<([usize; 3], LabColor)> = Vec::with_capacity(steps * steps * steps);
        for r in 0..steps {
            for g in 0..steps {
                for b in 0..steps {
                    let c = [r, g, b].map(|k| k as f64 / (steps - 1) as f64);
                    seen.push(([r, g, b], srgb_to_cielab(c)));
                }
            }
        }
        for i in 0..seen.len() {
            for j in i + 1..seen.len() {
                let d = seen[i].1.squared_distance(&seen[j].1).sqrt();
                assert!(d > 1e-9, "{:?} and {:?} collide", seen[i].0, seen[j].0);
            }
        }
    }
}
