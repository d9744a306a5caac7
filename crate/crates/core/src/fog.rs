//! Homogeneous daytime fog: `I = R t + L (1 - t)` with `t = exp(-beta l)`.

use serde::{Deserialize, Serialize};

use crate::camera::{depth_to_distance, CameraRig};
use crate::depth::{denoise_and_complete, DepthCompletion};
use crate::error::{Error, Result};
use crate::guided_filter::guided_filter;
use crate::params::{GuidedFilterParams, PipelineParams};
use crate::raster::{check_dims, Image, Rgb, ScalarField};

/// `-ln(0.05)` rounded as in the visibility definition: MOR = 2.996 / beta.
pub const MOR_CONSTANT: f64 = 2.996;
/// Smallest attenuation coefficient that still counts as fog (MOR <= 1 km).
pub const FOG_BETA_MIN: f64 = 2.996e-3;
/// Floor applied to refined transmission.
pub const TRANSMISSION_FLOOR: f64 = 1e-6;
/// Below this transmission a pixel is not inverted.
pub const INVERT_MIN_TRANSMISSION: f64 = 0.01;

pub const DARK_CHANNEL_PATCH: usize = 15;
pub const DARK_CHANNEL_TOP_FRACTION: f64 = 0.001;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtmosphericLight {
    pub rgb: Rgb,
    /// `(u, v)` of the pixel the color was taken from.
    pub pixel: [usize; 2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FogParams {
    /// Attenuation coefficient, 1/m.
    pub beta: f64,
}

impl FogParams {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::invalid(format!("beta must be finite and >= 0, got {beta}")));
        }
        Ok(FogParams { beta })
    }

    /// Whether the visibility is below 1 km.
    pub fn is_fog(&self) -> bool {
        self.beta >= FOG_BETA_MIN
    }
}

/// Meteorological optical range for attenuation `beta`.
pub fn mor_from_beta(beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::invalid(format!("MOR needs beta > 0, got {beta}")));
    }
    Ok(MOR_CONSTANT / beta)
}

/// Strategy for picking the atmospheric light of a clear image.
pub trait AtmosphericLightEstimator {
    fn estimate(&self, image: &Image) -> Result<AtmosphericLight>;
}

/// Dark-channel selection: among the brightest `top_fraction` of pixels by
/// dark channel (`patch x patch` minimum over all channels), take the one
/// with the largest R+G+B. Ties go to the lowest raster index.
#[derive(Debug, Clone, Copy)]
pub struct DarkChannelBrightest {
    pub patch: usize,
    pub top_fraction: f64,
}

impl Default for DarkChannelBrightest {
    fn default() -> Self {
        DarkChannelBrightest {
            patch: DARK_CHANNEL_PATCH,
            top_fraction: DARK_CHANNEL_TOP_FRACTION,
        }
    }
}

/// Per-pixel minimum over channels and a square patch, truncated at borders.
pub fn dark_channel(image: &Image, patch: usize) -> Vec<f64> {
    let (w, h) = (image.width(), image.height());
    let r = patch / 2;
    let chan_min: Vec<f64> = image.pixels().map(|p| p[0].min(p[1]).min(p[2])).collect();
    let mut horiz = vec![0.0; w * h];
    for v in 0..h {
        for u in 0..w {
            horiz[v * w + u] = chan_min[v * w + u.saturating_sub(r)..v * w + (u + r + 1).min(w)]
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
        }
    }
    let mut out = vec![0.0; w * h];
    for v in 0..h {
        for u in 0..w {
            out[v * w + u] = (v.saturating_sub(r)..(v + r + 1).min(h))
                .map(|y| horiz[y * w + u])
                .fold(f64::INFINITY, f64::min);
        }
    }
    out
}

impl AtmosphericLightEstimator for DarkChannelBrightest {
    fn estimate(&self, image: &Image) -> Result<AtmosphericLight> {
        if image.is_empty() {
            return Err(Error::invalid("atmospheric light of an empty image"));
        }
        let dark = dark_channel(image, self.patch);
        let n = dark.len();
        let top = ((self.top_fraction * n as f64).ceil() as usize).clamp(1, n);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_unstable_by(|&a, &b| dark[b].total_cmp(&dark[a]).then(a.cmp(&b)));
        let mut best = order[0];
        let brightness = |i: usize| {
            let p = image.pixel_at(i);
            p[0] + p[1] + p[2]
        };
        for &i in &order[1..top] {
            let (bi, bb) = (brightness(i), brightness(best));
            if bi > bb || (bi == bb && i < best) {
                best = i;
            }
        }
        Ok(AtmosphericLight {
            rgb: image.pixel_at(best),
            pixel: [best % image.width(), best / image.width()],
        })
    }
}

/// Atmospheric light with the default dark-channel estimator.
pub fn estimate_atmospheric_light(image: &Image) -> Result<AtmosphericLight> {
    DarkChannelBrightest::default().estimate(image)
}

/// `t = exp(-beta l)` per pixel.
pub fn transmission_from_distance(distance: &ScalarField, beta: f64) -> Result<ScalarField> {
    FogParams::new(beta)?;
    if !distance.is_complete() {
        return Err(Error::IncompleteDepth(distance.invalid_count()));
    }
    Ok(distance.map(|l| (-beta * l).exp()))
}

/// Guided filtering of the initial transmission with the clear image as
/// guide, clamped into `[TRANSMISSION_FLOOR, 1]`.
pub fn refine_transmission(initial: &ScalarField, clear: &Image, params: &GuidedFilterParams) -> Result<ScalarField> {
    let q = guided_filter(initial, clear, params)?;
    Ok(q.map(clamp_transmission))
}

#[inline]
fn clamp_transmission(t: f64) -> f64 {
    if t.is_nan() {
        TRANSMISSION_FLOOR
    } else {
        t.clamp(TRANSMISSION_FLOOR, 1.0)
    }
}

/// Unclamped optical model for one pixel.
#[inline]
pub fn composite_pixel(clear: Rgb, t: f64, light: Rgb) -> Rgb {
    std::array::from_fn(|c| clear[c] * t + light[c] * (1.0 - t))
}

/// Applies the optical model per pixel and clamps into `[0, 1]`.
pub fn composite_fog(clear: &Image, transmission: &ScalarField, light: &AtmosphericLight) -> Result<Image> {
    check_dims(
        "image vs transmission",
        (clear.width(), clear.height()),
        (transmission.width(), transmission.height()),
    )?;
    if let Some(bad) = transmission.values().iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
        return Err(Error::invalid(format!("transmission {bad} outside (0, 1]")));
    }
    let w = clear.width();
    Ok(Image::from_fn(w, clear.height(), |u, v| {
        composite_pixel(clear.pixel(u, v), transmission.value(u, v), light.rgb)
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Inversion {
    /// Recovered clear image; uninvertible pixels keep their foggy value.
    pub image: Image,
    pub uninvertible: Vec<bool>,
}

/// Exact algebraic inverse of [`composite_fog`] for known `t` and `L`.
pub fn invert_fog(foggy: &Image, transmission: &ScalarField, light: &AtmosphericLight) -> Result<Inversion> {
    check_dims(
        "image vs transmission",
        (foggy.width(), foggy.height()),
        (transmission.width(), transmission.height()),
    )?;
    let w = foggy.width();
    let mut uninvertible = vec![false; foggy.len()];
    let image = Image::from_fn(w, foggy.height(), |u, v| {
        let t = transmission.value(u, v);
        let i = foggy.pixel(u, v);
        if t.is_nan() || t < INVERT_MIN_TRANSMISSION {
            uninvertible[v * w + u] = true;
            return i;
        }
        invert_pixel(i, t, light.rgb)
    });
    Ok(Inversion { image, uninvertible })
}

/// Unclamped inverse for one pixel.
#[inline]
pub fn invert_pixel(foggy: Rgb, t: f64, light: Rgb) -> Rgb {
    std::array::from_fn(|c| (foggy[c] - light[c] * (1.0 - t)) / t)
}

/// The beta-independent part of a simulation: completed depth, distance and
/// atmospheric light. Render any number of fog densities from it.
#[derive(Debug, Clone)]
pub struct PreparedScene {
    pub depth: DepthCompletion,
    pub distance: ScalarField,
    pub light: AtmosphericLight,
}

#[derive(Debug, Clone)]
pub struct FogRender {
    pub foggy: Image,
    /// Refined transmission `t`.
    pub transmission: ScalarField,
}

pub fn prepare_scene(
    clear: &Image,
    right: &Image,
    disparity: &ScalarField,
    rig: &CameraRig,
    params: &PipelineParams,
    seed: u64,
) -> Result<PreparedScene> {
    let depth = denoise_and_complete(clear, right, disparity, rig, params, seed)?;
    let distance = depth_to_distance(&depth.depth, rig)?;
    let light = estimate_atmospheric_light(clear)?;
    Ok(PreparedScene { depth, distance, light })
}

impl PreparedScene {
    pub fn render(&self, clear: &Image, beta: f64, params: &GuidedFilterParams) -> Result<FogRender> {
        let initial = transmission_from_distance(&self.distance, beta)?;
        let transmission = refine_transmission(&initial, clear, params)?;
        let foggy = composite_fog(clear, &transmission, &self.light)?;
        Ok(FogRender { foggy, transmission })
    }
}

/// Everything a single simulation produces.
#[derive(Debug, Clone)]
pub struct FogSimulation {
    pub foggy: Image,
    pub transmission: ScalarField,
    /// Completed depth `d'`.
    pub depth: ScalarField,
    /// Ray distance `l`.
    pub distance: ScalarField,
    pub light: AtmosphericLight,
}

/// Full pipeline from a stereo pair to a foggy image.
pub fn simulate_fog(
    clear: &Image,
    right: &Image,
    disparity: &ScalarField,
    rig: &CameraRig,
    beta: f64,
    params: &PipelineParams,
    seed: u64,
) -> Result<FogSimulation> {
    FogParams::new(beta)?;
    let scene = prepare_scene(clear, right, disparity, rig, params, seed)?;
    let render = scene.render(clear, beta, &params.guided())?;
    Ok(FogSimulation {
        foggy: render.foggy,
        transmission: render.transmission,
        depth: scene.depth.depth,
        distance: scene.distance,
        light: scene.light,
    })
}
