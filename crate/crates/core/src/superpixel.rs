//! SLIC superpixels in CIELAB-xy space with connectivity enforcement.
//!
//! Seeds are laid on a regular grid with roughly `K̂` cells, moved to the
//! lowest-gradient pixel of their 3x3 neighborhood, then refined for a fixed
//! number of k-means style iterations using `D = d_lab + (m / S) d_xy` with
//! `S = sqrt(N / K̂)`. Afterwards every label is split into its 4-connected
//! components; components smaller than `S^2 / 4` are absorbed by the largest
//! adjacent region.

use std::collections::{BTreeSet, VecDeque};

use serde::Serialize;

use crate::color::{image_to_lab, LabColor};
use crate::depth::Plane;
use crate::error::{Error, Result};
use crate::raster::Image;

pub const SLIC_ITERATIONS: usize = 10;

const UNASSIGNED: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuperpixelRecord {
    pub pixel_count: usize,
    pub mean_lab: LabColor,
    /// `(x, y)` in pixels.
    pub centroid: [f64; 2],
    pub reliable: bool,
    pub plane: Option<Plane>,
}

impl SuperpixelRecord {
    pub fn new(mean_lab: LabColor, centroid: [f64; 2]) -> Self {
        SuperpixelRecord {
            pixel_count: 0,
            mean_lab,
            centroid,
            reliable: false,
            plane: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuperpixelSegmentation {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    pub records: Vec<SuperpixelRecord>,
}

impl SuperpixelSegmentation {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Row-major superpixel ids in `0..K`.
    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    #[inline]
    pub fn label(&self, u: usize, v: usize) -> usize {
        self.labels[v * self.width + u] as usize
    }

    /// Final superpixel count `K`.
    pub fn count(&self) -> usize {
        self.records.len()
    }

    /// Grid interval for the final count, `sqrt(N / K)`.
    pub fn grid_interval(&self) -> f64 {
        ((self.width * self.height) as f64 / self.count() as f64).sqrt()
    }

    /// Pixel indices owned by each superpixel, in raster order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.count()];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l as usize].push(i);
        }
        for (m, r) in out.iter_mut().zip(&self.records) {
            debug_assert_eq!(m.len(), r.pixel_count);
        }
        out
    }

    /// Builds a segmentation from an existing label raster, computing the
    /// per-superpixel color and centroid records. Labels must cover `0..K`
    /// with no gaps.
    pub fn from_labels(image: &Image, labels: Vec<u32>) -> Result<Self> {
        if labels.len() != image.len() {
            return Err(Error::invalid("label raster does not match image size"));
        }
        let k = labels.iter().max().map_or(0, |&m| m as usize + 1);
        let lab = image_to_lab(image);
        let records = region_records(image.width(), &labels, &lab, k);
        if let Some(empty) = records.iter().position(|r| r.pixel_count == 0) {
            return Err(Error::invalid(format!("superpixel id {empty} owns no pixels")));
        }
        Ok(SuperpixelSegmentation {
            width: image.width(),
            height: image.height(),
            labels,
            records,
        })
    }
}

#[derive(Debug, Clone, Copy)]
struct Center {
    lab: LabColor,
    x: f64,
    y: f64,
}

/// Runs SLIC on `image` with target count `k_hat` and compactness `m`.
pub fn slic_segment(image: &Image, k_hat: usize, m: f64) -> Result<SuperpixelSegmentation> {
    let (w, h) = (image.width(), image.height());
    let n = w * h;
    if k_hat == 0 {
        return Err(Error::invalid("K_hat must be at least 1"));
    }
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::invalid("compactness m must be positive"));
    }
    if n == 0 || k_hat > n {
        return Err(Error::ImageTooSmall { k_hat, pixels: n });
    }

    let lab = image_to_lab(image);
    let s = (n as f64 / k_hat as f64).sqrt();
    let (nx, ny) = seed_grid(w, h, k_hat);
    let step_x = w as f64 / nx as f64;
    let step_y = h as f64 / ny as f64;

    let mut centers: Vec<Center> = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let x = (i as f64 + 0.5) * step_x - 0.5;
            let y = (j as f64 + 0.5) * step_y - 0.5;
            centers.push(perturbed_seed(&lab, w, h, x, y));
        }
    }

    let spatial_weight = m / s;
    let half_window = s.max(step_x).max(step_y);
    let mut labels = vec![UNASSIGNED; n];
    let mut dist = vec![f64::INFINITY; n];

    for _ in 0..SLIC_ITERATIONS {
        labels.fill(UNASSIGNED);
        dist.fill(f64::INFINITY);
        for (k, c) in centers.iter().enumerate() {
            let x0 = (c.x - half_window).floor().max(0.0) as usize;
            let x1 = ((c.x + half_window).ceil() as usize).min(w - 1);
            let y0 = (c.y - half_window).floor().max(0.0) as usize;
            let y1 = ((c.y + half_window).ceil() as usize).min(h - 1);
            for v in y0..=y1 {
                let dy = v as f64 - c.y;
                for u in x0..=x1 {
                    let i = v * w + u;
                    let dx = u as f64 - c.x;
                    let d = c.lab.squared_distance(&lab[i]).sqrt()
                        + spatial_weight * (dx * dx + dy * dy).sqrt();
                    if d < dist[i] {
                        dist[i] = d;
                        labels[i] = k as u32;
                    }
                }
            }
        }

        let mut sums = vec![[0.0f64; 5]; centers.len()];
        let mut counts = vec![0usize; centers.len()];
        for (i, &l) in labels.iter().enumerate() {
            if l == UNASSIGNED {
                continue;
            }
            let acc = &mut sums[l as usize];
            let p = &lab[i];
            acc[0] += p.l;
            acc[1] += p.a;
            acc[2] += p.b;
            acc[3] += (i % w) as f64;
            acc[4] += (i / w) as f64;
            counts[l as usize] += 1;
        }
        for ((c, acc), &cnt) in centers.iter_mut().zip(&sums).zip(&counts) {
            if cnt > 0 {
                let inv = 1.0 / cnt as f64;
                c.lab = LabColor::new(acc[0] * inv, acc[1] * inv, acc[2] * inv);
                c.x = acc[3] * inv;
                c.y = acc[4] * inv;
            }
        }
    }

    let min_size = s * s / 4.0;
    let labels = enforce_connectivity(&labels, w, h, min_size);
    let k = labels.iter().max().map_or(0, |&m| m as usize + 1);
    let records = region_records(w, &labels, &lab, k);
    Ok(SuperpixelSegmentation {
        width: w,
        height: h,
        labels,
        records,
    })
}

/// Grid of `nx * ny` seeds: count closest to `k_hat`, then cells closest to
/// square, then more columns.
fn seed_grid(w: usize, h: usize, k_hat: usize) -> (usize, usize) {
    let mut best = (1, 1);
    let mut best_key = (usize::MAX, f64::INFINITY);
    for nx in 1..=k_hat.min(w) {
        let ny = ((k_hat as f64 / nx as f64).round() as usize).clamp(1, h);
        let miss = (nx * ny).abs_diff(k_hat);
        let aspect = ((w as f64 / nx as f64) / (h as f64 / ny as f64)).ln().abs();
        let better = miss < best_key.0
            || (miss == best_key.0 && aspect < best_key.1 - 1e-12)
            || (miss == best_key.0 && (aspect - best_key.1).abs() <= 1e-12);
        if better {
            best = (nx, ny);
            best_key = (miss, aspect);
        }
    }
    best
}

fn gradient(lab: &[LabColor], w: usize, h: usize, u: usize, v: usize) -> f64 {
    let at = |u: usize, v: usize| &lab[v * w + u];
    let (l, r) = (u.saturating_sub(1), (u + 1).min(w - 1));
    let (t, b) = (v.saturating_sub(1), (v + 1).min(h - 1));
    at(r, v).squared_distance(at(l, v)) + at(u, b).squared_distance(at(u, t))
}

fn perturbed_seed(lab: &[LabColor], w: usize, h: usize, x: f64, y: f64) -> Center {
    let pu = (x.round().max(0.0) as usize).min(w - 1);
    let pv = (y.round().max(0.0) as usize).min(h - 1);
    let mut best = (pu, pv);
    let mut best_g = gradient(lab, w, h, pu, pv);
    for v in pv.saturating_sub(1)..=(pv + 1).min(h - 1) {
        for u in pu.saturating_sub(1)..=(pu + 1).min(w - 1) {
            let g = gradient(lab, w, h, u, v);
            if g < best_g {
                best_g = g;
                best = (u, v);
            }
        }
    }
    let (cx, cy) = if best == (pu, pv) {
        (x, y)
    } else {
        (best.0 as f64, best.1 as f64)
    };
    Center {
        lab: lab[best.1 * w + best.0],
        x: cx,
        y: cy,
    }
}

struct Component {
    label: u32,
    pixels: Vec<usize>,
}

fn enforce_connectivity(labels: &[u32], w: usize, h: usize, min_size: f64) -> Vec<u32> {
    let n = labels.len();
    let mut comp_of = vec![usize::MAX; n];
    let mut comps: Vec<Component> = Vec::new();
    let mut queue = VecDeque::new();

    for start in 0..n {
        if comp_of[start] != usize::MAX {
            continue;
        }
        let id = comps.len();
        let label = labels[start];
        let mut pixels = Vec::new();
        comp_of[start] = id;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            pixels.push(i);
            let (u, v) = (i % w, i / w);
            let mut visit = |j: usize| {
                if comp_of[j] == usize::MAX && labels[j] == label {
                    comp_of[j] = id;
                    queue.push_back(j);
                }
            };
            if u > 0 {
                visit(i - 1);
            }
            if u + 1 < w {
                visit(i + 1);
            }
            if v > 0 {
                visit(i - w);
            }
            if v + 1 < h {
                visit(i + w);
            }
        }
        pixels.sort_unstable();
        comps.push(Component { label, pixels });
    }

    let mut adjacency: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); comps.len()];
    for i in 0..n {
        let (u, v) = (i % w, i / w);
        let a = comp_of[i];
        if u + 1 < w && comp_of[i + 1] != a {
            adjacency[a].insert(comp_of[i + 1]);
            adjacency[comp_of[i + 1]].insert(a);
        }
        if v + 1 < h && comp_of[i + w] != a {
            adjacency[a].insert(comp_of[i + w]);
            adjacency[comp_of[i + w]].insert(a);
        }
    }

    // Surviving components become superpixels in raster order of their first
    // pixel (component ids are already in that order).
    let mut region = vec![usize::MAX; comps.len()];
    let mut region_size: Vec<usize> = Vec::new();
    for (c, comp) in comps.iter().enumerate() {
        if comp.label != UNASSIGNED && comp.pixels.len() as f64 >= min_size {
            region[c] = region_size.len();
            region_size.push(comp.pixels.len());
        }
    }
    if region_size.is_empty() {
        let largest = (0..comps.len())
            .max_by(|&a, &b| comps[a].pixels.len().cmp(&comps[b].pixels.len()).then(b.cmp(&a)))
            .expect("image is nonempty");
        region[largest] = 0;
        region_size.push(comps[largest].pixels.len());
    }

    loop {
        let mut pending = false;
        let mut progress = false;
        for c in 0..comps.len() {
            if region[c] != usize::MAX {
                continue;
            }
            let target = adjacency[c]
                .iter()
                .filter_map(|&nb| (region[nb] != usize::MAX).then_some(region[nb]))
                .min_by(|&a, &b| region_size[b].cmp(&region_size[a]).then(a.cmp(&b)));
            match target {
                Some(r) => {
                    region[c] = r;
                    region_size[r] += comps[c].pixels.len();
                    progress = true;
                }
                None => pending = true,
            }
        }
        if !pending {
            break;
        }
        assert!(progress, "4-connected raster always reaches a surviving region");
    }

    let mut out = vec![0u32; n];
    for (c, comp) in comps.iter().enumerate() {
        for &i in &comp.pixels {
            out[i] = region[c] as u32;
        }
    }
    out
}

/// Pixel count, mean color and centroid per id, accumulated in raster order.
fn region_records(w: usize, labels: &[u32], lab: &[LabColor], k: usize) -> Vec<SuperpixelRecord> {
    let mut sums = vec![[0.0f64; 5]; k];
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        let acc = &mut sums[l as usize];
        acc[0] += lab[i].l;
        acc[1] += lab[i].a;
        acc[2] += lab[i].b;
        acc[3] += (i % w) as f64;
        acc[4] += (i / w) as f64;
        counts[l as usize] += 1;
    }
    sums.iter()
        .zip(&counts)
        .map(|(acc, &cnt)| {
            let c = cnt.max(1) as f64;
            SuperpixelRecord {
                pixel_count: cnt,
                mean_lab: LabColor::new(acc[0] / c, acc[1] / c, acc[2] / c),
                centroid: [acc[3] / c, acc[4] / c],
                reliable: false,
                plane: None,
            }
        })
        .collect()
}
