//! Synthetic stereo scenes with known geometry.
//!
//! Depth is piecewise affine in pixel coordinates, so the generator is its
//! own ground truth. The right image is a z-buffered forward warp of the
//! textured left image; holes and gross disparity outliers are injected on
//! top.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::camera::CameraRig;
use crate::depth::Plane;
use crate::raster::{Image, Rgb, ScalarField};

/// One planar region: a predicate on `(u, v)` in normalized `[0, 1)`
/// coordinates, a base color and a depth plane in pixel coordinates.
#[derive(Debug, Clone, Copy)]
pub struct Region {
    pub contains: fn(f64, f64) -> bool,
    pub color: Rgb,
    /// Depth plane in normalized coordinates: `d = a x + b y + c`.
    pub depth: [f64; 3],
}

#[derive(Debug, Clone)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub rig: CameraRig,
    /// First matching region wins; the last should accept everything.
    pub regions: Vec<Region>,
    /// Per-channel amplitude of smooth texture around the region color,
    /// bilinear noise on a lattice of `texture_cell` pixels.
    pub texture: f64,
    pub texture_cell: usize,
    /// Per-channel amplitude of independent per-pixel grain.
    pub grain: f64,
    pub hole_fraction: f64,
    pub outlier_fraction: f64,
    /// Added depth of a gross outlier, meters, drawn uniformly.
    pub outlier_offset: (f64, f64),
    pub seed: u64,
}

impl SceneSpec {
    fn base(regions: Vec<Region>) -> Self {
        SceneSpec {
            width: 512,
            height: 256,
            rig: CameraRig {
                fx: 500.0,
                fy: 500.0,
                cx: 255.5,
                cy: 127.5,
                baseline: 0.2,
            },
            regions,
            texture: 0.12,
            texture_cell: 8,
            grain: 0.01,
            hole_fraction: 0.3,
            outlier_fraction: 0.05,
            outlier_offset: (100.0, 200.0),
            seed: 1,
        }
    }

    /// Ground, left wall and back wall.
    pub fn three_planes() -> Self {
        Self::base(vec![
            Region {
                contains: |_, y| y >= 0.55,
                color: [0.45, 0.42, 0.40],
                depth: [0.0, -86.666_666_666_666_67, 92.666_666_666_666_67],
            },
            Region {
                contains: |x, _| x < 0.35,
                color: [0.75, 0.30, 0.20],
                depth: [40.0, 0.0, 8.0],
            },
            Region {
                contains: |_, _| true,
                color: [0.25, 0.45, 0.75],
                depth: [-5.0, 2.0, 38.0],
            },
        ])
    }

    /// A single tilted plane filling the image.
    pub fn single_plane() -> Self {
        Self::base(vec![Region {
            contains: |_, _| true,
            color: [0.5, 0.55, 0.45],
            depth: [6.0, -4.0, 20.0],
        }])
    }

    /// Resizes the scene and recenters the principal point.
    pub fn with_size(mut self, width: usize, height: usize) -> Self {
        self.width = width;
        self.height = height;
        self.rig.cx = (width as f64 - 1.0) / 2.0;
        self.rig.cy = (height as f64 - 1.0) / 2.0;
        self
    }

    /// Depth plane of region `r` in pixel coordinates.
    pub fn plane(&self, r: usize) -> Plane {
        let [a, b, c] = self.regions[r].depth;
        Plane {
            a: a / self.width as f64,
            b: b / self.height as f64,
            c,
        }
    }

    pub fn region_at(&self, u: usize, v: usize) -> usize {
        let (x, y) = (u as f64 / self.width as f64, v as f64 / self.height as f64);
        self.regions
            .iter()
            .position(|r| (r.contains)(x, y))
            .unwrap_or(self.regions.len() - 1)
    }
}

#[derive(Debug, Clone)]
pub struct StereoScene {
    pub left: Image,
    pub right: Image,
    /// Noisy disparity with holes and outliers.
    pub disparity: ScalarField,
    /// True depth, complete.
    pub depth: ScalarField,
    pub rig: CameraRig,
    /// Region index per pixel.
    pub region: Vec<usize>,
    /// Pixels removed from the disparity.
    pub holes: Vec<bool>,
    /// Pixels whose disparity was corrupted.
    pub outliers: Vec<bool>,
}

impl StereoScene {
    pub fn generate(spec: &SceneSpec) -> Self {
        let (w, h) = (spec.width, spec.height);
        let n = w * h;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

        let region: Vec<usize> = (0..n).map(|i| spec.region_at(i % w, i / w)).collect();
        let planes: Vec<Plane> = (0..spec.regions.len()).map(|r| spec.plane(r)).collect();
        let depth = ScalarField::from_fn(w, h, |u, v| planes[region[v * w + u]].predict(u as f64, v as f64));

        let cell = spec.texture_cell.max(1);
        let (lw, lh) = (w / cell + 2, h / cell + 2);
        let amp = spec.texture;
        let lattice: Vec<[f64; 3]> = (0..lw * lh)
            .map(|_| [0; 3].map(|_| if amp > 0.0 { rng.gen_range(-amp..=amp) } else { 0.0 }))
            .collect();
        let grain = spec.grain;
        let left = Image::from_fn(w, h, |u, v| {
            let base = spec.regions[region[v * w + u]].color;
            let (gx, gy) = (u as f64 / cell as f64, v as f64 / cell as f64);
            let (x0, y0) = (gx as usize, gy as usize);
            let (fx, fy) = (gx - x0 as f64, gy - y0 as f64);
            let at = |x: usize, y: usize, c: usize| lattice[y * lw + x][c];
            let mut out = base;
            for (c, o) in out.iter_mut().enumerate() {
                let top = at(x0, y0, c) * (1.0 - fx) + at(x0 + 1, y0, c) * fx;
                let bot = at(x0, y0 + 1, c) * (1.0 - fx) + at(x0 + 1, y0 + 1, c) * fx;
                *o += top * (1.0 - fy) + bot * fy;
                if grain > 0.0 {
                    *o += rng.gen_range(-grain..=grain);
                }
            }
            out
        });

        let scale = spec.rig.fx * spec.rig.baseline;
        let mut right = Image::from_fn(w, h, |_, _| [rng.gen(), rng.gen(), rng.gen()]);
        let mut zbuf = vec![f64::INFINITY; n];
        for v in 0..h {
            for u in 0..w {
                let d = depth.value(u, v);
                let target = (u as f64 - scale / d).round();
                if target >= 0.0 && target < w as f64 {
                    let j = v * w + target as usize;
                    if d < zbuf[j] {
                        zbuf[j] = d;
                        right.set_pixel(target as usize, v, left.pixel(u, v));
                    }
                }
            }
        }

        // A third of the hole budget goes to rectangular blobs, the rest is
        // scattered.
        let mut holes = vec![false; n];
        let budget = (spec.hole_fraction * n as f64).round() as usize;
        let mut placed = 0;
        while placed < budget / 3 {
            let bw = rng.gen_range(w / 40..=w / 12).max(1);
            let bh = rng.gen_range(h / 40..=h / 12).max(1);
            let u0 = rng.gen_range(0..w - bw.min(w - 1));
            let v0 = rng.gen_range(0..h - bh.min(h - 1));
            for v in v0..(v0 + bh).min(h) {
                for u in u0..(u0 + bw).min(w) {
                    if !holes[v * w + u] {
                        holes[v * w + u] = true;
                        placed += 1;
                    }
                }
            }
        }
        while placed < budget {
            let i = rng.gen_range(0..n);
            if !holes[i] {
                holes[i] = true;
                placed += 1;
            }
        }

        let mut disparity_values: Vec<f64> = depth.values().iter().map(|d| scale / d).collect();
        let mut outliers = vec![false; n];
        let wanted = (spec.outlier_fraction * n as f64).round() as usize;
        let mut count = 0;
        while count < wanted && count + placed < n {
            let i = rng.gen_range(0..n);
            if !holes[i] && !outliers[i] {
                outliers[i] = true;
                let offset = rng.gen_range(spec.outlier_offset.0..=spec.outlier_offset.1);
                disparity_values[i] = scale / (depth.values()[i] + offset);
                count += 1;
            }
        }
        let valid: Vec<bool> = holes.iter().map(|h| !h).collect();
        let disparity = ScalarField::with_mask(w, h, disparity_values, valid).expect("sizes match");

        StereoScene {
            left,
            right,
            disparity,
            depth,
            rig: spec.rig,
            region,
            holes,
            outliers,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scene_is_deterministic_and_sized() {
        let spec = SceneSpec::three_planes().with_size(128, 64);
        let a = StereoScene::generate(&spec);
        let b = StereoScene::generate(&spec);
        assert_eq!(a.left, b.left);
        assert_eq!(a.disparity, b.disparity);
        let holes = a.holes.iter().filter(|h| **h).count();
        assert_eq!(holes, (0.3_f64 * (128.0 * 64.0)).round() as usize);
        let outliers = a.outliers.iter().filter(|o| **o).count();
        assert_eq!(outliers, (0.05_f64 * (128.0 * 64.0)).round() as usize);
        assert!(a.depth.values().iter().all(|d| (5.9..=46.1).contains(d)));
    }
}
