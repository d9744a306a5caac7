//! Foggy dataset construction, input selection, statistics and training
//! manifests.
//!
//! # Input layout
//!
//! ```text
//! <root>/leftImg/<dir>/<name>[_leftImg8bit].png
//! <root>/rightImg/<dir>/<name>[_rightImg8bit].png
//! <root>/disparity/<dir>/<name>[_disparity].png
//! <root>/camera/<dir>/<name>[_camera].json
//! <root>/gtFine/<dir>/<name>[_gtFine]_labelTrainIds.png   (optional)
//! <root>/gtFine/<dir>/<name>[_gtFine]_instanceIds.png     (optional)
//! ```
//!
//! # Output layout
//!
//! ```text
//! <out>/beta_<b>/foggy/<dir>/<name>_foggy_beta_<b>.png
//! <out>/beta_<b>/foggy/<dir>/<name>_foggy_beta_<b>.json
//! <out>/beta_<b>/gtFine/<dir>/<annotation files, copied>
//! <out>/beta_<b>/bboxes/<dir>/<name>_bboxes.json
//! <out>/rejects.txt  <out>/errors.txt  <out>/stats.json
//! ```

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::error::{Error, Result};
use crate::fog::{mor_from_beta, prepare_scene, AtmosphericLight, FogParams};
use crate::io;
pub use crate::labels::{
    class_name, instances_to_bboxes, BBox, InstanceMap, LabelMap, CLASS_NAMES, FREQUENT_CLASSES, NUM_CLASSES, SKY,
    VOID,
};
use crate::params::PipelineParams;
use crate::seed::{derive_seed, rng_for, stream_id};

/// True iff the atmospheric light was taken from a sky pixel.
pub fn sky_criterion(light: &AtmosphericLight, labels: &LabelMap) -> Result<bool> {
    let [u, v] = light.pixel;
    if u >= labels.width() || v >= labels.height() {
        return Err(Error::invalid(format!(
            "atmospheric light pixel ({u}, {v}) outside a {}x{} label map",
            labels.width(),
            labels.height()
        )));
    }
    Ok(labels.get(u, v) == SKY)
}

/// Per-class pixel and instance counts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DatasetStats {
    pub images: usize,
    pub class_pixels: [u64; NUM_CLASSES],
    pub void_pixels: u64,
    pub instances: [u64; NUM_CLASSES],
}

#[derive(Serialize)]
struct ClassStats {
    id: u8,
    name: &'static str,
    pixels: u64,
    instances: u64,
}

#[derive(Serialize)]
struct StatsFile {
    images: usize,
    void_pixels: u64,
    classes: Vec<ClassStats>,
}

impl DatasetStats {
    pub fn add_labels(&mut self, labels: &LabelMap) {
        self.images += 1;
        for &c in labels.ids() {
            if c == VOID {
                self.void_pixels += 1;
            } else {
                self.class_pixels[c as usize] += 1;
            }
        }
    }

    pub fn add_instances(&mut self, instances: &InstanceMap) {
        let present: BTreeSet<u32> = instances.ids().iter().copied().filter(|&id| id != 0).collect();
        for id in present {
            self.instances[instances.classes()[&id] as usize] += 1;
        }
    }

    pub fn merge(&mut self, other: &DatasetStats) {
        self.images += other.images;
        self.void_pixels += other.void_pixels;
        for c in 0..NUM_CLASSES {
            self.class_pixels[c] += other.class_pixels[c];
            self.instances[c] += other.instances[c];
        }
    }

    pub fn total_pixels(&self) -> u64 {
        self.class_pixels.iter().sum::<u64>() + self.void_pixels
    }

    pub fn to_json(&self) -> serde_json::Value {
        let file = StatsFile {
            images: self.images,
            void_pixels: self.void_pixels,
            classes: (0..NUM_CLASSES)
                .map(|c| ClassStats {
                    id: c as u8,
                    name: CLASS_NAMES[c],
                    pixels: self.class_pixels[c],
                    instances: self.instances[c],
                })
                .collect(),
        };
        serde_json::to_value(file).expect("stats serialize")
    }
}

pub fn dataset_stats(labels: &[LabelMap], instances: &[InstanceMap]) -> DatasetStats {
    let mut stats = DatasetStats::default();
    labels.iter().for_each(|l| stats.add_labels(l));
    instances.iter().for_each(|i| stats.add_instances(i));
    stats
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntrySource {
    Human,
    Transferred,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub foggy_image_path: String,
    pub label_path: String,
    pub source: EntrySource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestHeader {
    /// Human-labeled images.
    pub l: usize,
    /// Images with transferred labels available.
    pub u: usize,
    pub w: f64,
    /// Loss balance `(l / u) * w`.
    pub lambda: f64,
    pub seed: u64,
    pub entries: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SslManifest {
    pub header: ManifestHeader,
    pub entries: Vec<ManifestEntry>,
}

impl SslManifest {
    pub fn count(&self, source: EntrySource) -> usize {
        self.entries.iter().filter(|e| e.source == source).count()
    }

    /// Header line followed by one JSON record per entry.
    pub fn to_ndjson(&self) -> String {
        let mut out = serde_json::to_string(&self.header).expect("header serializes");
        out.push('\n');
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("entry serializes"));
            out.push('\n');
        }
        out
    }
}

fn check_unique(pairs: &[(String, String)], what: &str) -> Result<()> {
    let mut seen = BTreeSet::new();
    for (image, _) in pairs {
        if !seen.insert(image) {
            return Err(Error::invalid(format!("duplicate {what} image {image}")));
        }
    }
    Ok(())
}

/// Interleaves every labeled pair with about `w` transferred pairs each.
///
/// Labeled pairs appear once in shuffled order. Transferred pairs are drawn
/// without replacement from a shuffled pool that is reshuffled, with a fresh
/// seed per pass, whenever it runs dry. The stream holds `round(l * w)`
/// transferred entries; the `i`-th labeled entry is followed by
/// `floor((i+1) P / l) - floor(i P / l)` of them.
pub fn build_ssl_manifest(
    labeled: &[(String, String)],
    pseudo: &[(String, String)],
    w: f64,
    seed: u64,
) -> Result<SslManifest> {
    if labeled.is_empty() {
        return Err(Error::invalid("labeled list is empty"));
    }
    if pseudo.is_empty() {
        return Err(Error::invalid("pseudo-labeled list is empty"));
    }
    if !(w.is_finite() && w > 0.0) {
        return Err(Error::invalid(format!("weight w must be positive, got {w}")));
    }
    check_unique(labeled, "labeled")?;
    check_unique(pseudo, "pseudo-labeled")?;

    let (l, u) = (labeled.len(), pseudo.len());
    let total_pseudo = (l as f64 * w).round() as usize;

    let mut order: Vec<usize> = (0..l).collect();
    order.shuffle(&mut rng_for(seed, 0));

    let mut pool: Vec<usize> = Vec::new();
    let mut epoch = 0u64;
    let mut next_pseudo = || {
        if pool.is_empty() {
            epoch += 1;
            pool = (0..u).rev().collect();
            pool.shuffle(&mut rng_for(seed, epoch));
        }
        pool.pop().expect("pool refilled")
    };

    let entry = |(image, label): &(String, String), source| ManifestEntry {
        foggy_image_path: image.clone(),
        label_path: label.clone(),
        source,
    };
    let mut entries = Vec::with_capacity(l + total_pseudo);
    for (i, &k) in order.iter().enumerate() {
        entries.push(entry(&labeled[k], EntrySource::Human));
        let chunk = (i + 1) * total_pseudo / l - i * total_pseudo / l;
        for _ in 0..chunk {
            entries.push(entry(&pseudo[next_pseudo()], EntrySource::Transferred));
        }
    }
    Ok(SslManifest {
        header: ManifestHeader {
            l,
            u,
            w,
            lambda: l as f64 * w / u as f64,
            seed,
            entries: entries.len(),
        },
        entries,
    })
}

/// One input image and its companion files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputImage {
    /// `<dir>/<name>` with `/` separators; used for seeding and output paths.
    pub key: String,
    pub left: PathBuf,
    pub right: Option<PathBuf>,
    pub disparity: Option<PathBuf>,
    pub camera: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub instances: Option<PathBuf>,
}

fn first_existing(dir: &Path, names: &[String]) -> Option<PathBuf> {
    names.iter().map(|n| dir.join(n)).find(|p| p.is_file())
}

/// Finds all left images under `<root>/leftImg` and pairs them with their
/// companions. Missing companions are left as `None`.
pub fn discover_inputs(root: &Path) -> Result<Vec<InputImage>> {
    let left_root = root.join("leftImg");
    if !left_root.is_dir() {
        return Err(Error::io(
            &left_root,
            std::io::Error::new(std::io::ErrorKind::NotFound, "missing leftImg directory"),
        ));
    }
    let mut found = Vec::new();
    for entry in WalkDir::new(&left_root).sort_by_file_name() {
        let entry = entry.map_err(|e| Error::io(&left_root, e.into()))?;
        let path = entry.path();
        if !entry.file_type().is_file() || path.extension().is_none_or(|e| e != "png") {
            continue;
        }
        let rel_dir = path
            .parent()
            .and_then(|p| p.strip_prefix(&left_root).ok())
            .unwrap_or(Path::new(""))
            .to_path_buf();
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
        let name = stem.strip_suffix("_leftImg8bit").unwrap_or(stem).to_string();
        let key = rel_dir
            .components()
            .map(|c| c.as_os_str().to_string_lossy().into_owned())
            .chain(std::iter::once(name.clone()))
            .collect::<Vec<_>>()
            .join("/");
        let sub = |d: &str| root.join(d).join(&rel_dir);
        let names = |suffixes: &[&str], ext: &str| -> Vec<String> {
            suffixes.iter().map(|s| format!("{name}{s}.{ext}")).collect()
        };
        found.push(InputImage {
            key,
            left: path.to_path_buf(),
            right: first_existing(&sub("rightImg"), &names(&["_rightImg8bit", ""], "png")),
            disparity: first_existing(&sub("disparity"), &names(&["_disparity", ""], "png")),
            camera: first_existing(&sub("camera"), &names(&["_camera", ""], "json")),
            labels: first_existing(&sub("gtFine"), &names(&["_gtFine_labelTrainIds", "_labelTrainIds"], "png")),
            instances: first_existing(&sub("gtFine"), &names(&["_gtFine_instanceIds", "_instanceIds"], "png")),
        });
    }
    found.sort_by(|a, b| a.key.cmp(&b.key));
    Ok(found)
}

/// Per-image sidecar written next to each foggy image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub beta: f64,
    /// `None` for `beta = 0`.
    pub mor_m: Option<f64>,
    pub atmospheric_light: AtmosphericLight,
    /// Seed of this image's pipeline run.
    pub seed: u64,
    pub params_sha256: String,
}

#[derive(Debug, Clone)]
pub struct DatasetConfig {
    pub input_root: PathBuf,
    pub output_root: PathBuf,
    pub betas: Vec<f64>,
    pub params: PipelineParams,
    pub seed: u64,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
    /// Keys of images judged to have an overcast sky. Images outside the
    /// list are flagged as rejects.
    pub overcast_allowlist: Option<BTreeSet<String>>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DatasetReport {
    pub images: usize,
    /// Foggy images written, over all betas.
    pub written: usize,
    /// `(key, reason)` of images failing a selection criterion.
    pub rejects: Vec<(String, String)>,
    /// `(key, message)` of images that could not be processed.
    pub errors: Vec<(String, String)>,
    pub stats: Option<DatasetStats>,
}

pub fn image_seed(seed: u64, key: &str) -> u64 {
    derive_seed(seed, stream_id(key))
}

pub fn beta_dir_name(beta: f64) -> String {
    format!("beta_{beta}")
}

struct ImageOutcome {
    written: usize,
    rejects: Vec<String>,
    stats: Option<DatasetStats>,
}

fn require<'a>(path: &'a Option<PathBuf>, what: &str, key: &str) -> Result<&'a PathBuf> {
    path.as_ref()
        .ok_or_else(|| Error::invalid(format!("{key}: missing required {what} file")))
}

fn split_key(key: &str) -> (&str, &str) {
    key.rsplit_once('/').unwrap_or(("", key))
}

fn process_image(job: &InputImage, cfg: &DatasetConfig, params_sha: &str) -> Result<ImageOutcome> {
    let clear = io::read_rgb_png(&job.left)?;
    let right = io::read_rgb_png(require(&job.right, "right image", &job.key)?)?;
    let disparity = io::read_disparity_png(require(&job.disparity, "disparity", &job.key)?)?;
    let rig = io::read_camera_json(require(&job.camera, "camera", &job.key)?)?;
    let labels = job.labels.as_deref().map(io::read_label_png).transpose()?;
    let instances = job.instances.as_deref().map(io::read_instance_png).transpose()?;

    let seed = image_seed(cfg.seed, &job.key);
    let scene = prepare_scene(&clear, &right, &disparity, &rig, &cfg.params, seed)?;
    let gf = cfg.params.guided();
    let (dir, name) = split_key(&job.key);
    let boxes = instances.as_ref().map(instances_to_bboxes);

    for &beta in &cfg.betas {
        let render = scene.render(&clear, beta, &gf)?;
        let root = cfg.output_root.join(beta_dir_name(beta));
        let foggy_dir = root.join("foggy").join(dir);
        let stem = format!("{name}_foggy_beta_{beta}");
        io::write_rgb_png(&foggy_dir.join(format!("{stem}.png")), &render.foggy)?;
        let sidecar = Sidecar {
            beta,
            mor_m: mor_from_beta(beta).ok(),
            atmospheric_light: scene.light,
            seed,
            params_sha256: params_sha.to_string(),
        };
        io::write_json(&foggy_dir.join(format!("{stem}.json")), &sidecar)?;

        for src in [&job.labels, &job.instances].into_iter().flatten() {
            let bytes = fs::read(src).map_err(|e| Error::io(src, e))?;
            let file = src.file_name().expect("annotation path has a file name");
            io::write_atomic(&root.join("gtFine").join(dir).join(file), &bytes)?;
        }
        if let Some(boxes) = &boxes {
            io::write_json(&root.join("bboxes").join(dir).join(format!("{name}_bboxes.json")), boxes)?;
        }
    }

    let mut rejects = Vec::new();
    let mut stats = None;
    if let Some(labels) = &labels {
        if !sky_criterion(&scene.light, labels)? {
            let [u, v] = scene.light.pixel;
            rejects.push(format!(
                "atmospheric light pixel ({u}, {v}) is labeled {}, not sky",
                class_name(labels.get(u, v))
            ));
        }
        let mut s = DatasetStats::default();
        s.add_labels(labels);
        if let Some(inst) = &instances {
            s.add_instances(inst);
        }
        stats = Some(s);
    }
    if let Some(allow) = &cfg.overcast_allowlist {
        if !allow.contains(&job.key) {
            rejects.push("not in the overcast allowlist".to_string());
        }
    }
    Ok(ImageOutcome {
        written: cfg.betas.len(),
        rejects,
        stats,
    })
}

fn write_report_lines(path: &Path, rows: &[(String, String)]) -> Result<()> {
    let text: String = rows.iter().map(|(k, m)| format!("{k}\t{m}\n")).collect();
    io::write_atomic(path, text.as_bytes())
}

/// Renders every input image at every beta. Per-image failures are recorded
/// in the report and in `errors.txt`; the batch carries on.
pub fn build_dataset(cfg: &DatasetConfig) -> Result<DatasetReport> {
    if cfg.betas.is_empty() {
        return Err(Error::invalid("no beta values given"));
    }
    for &b in &cfg.betas {
        FogParams::new(b)?;
    }
    cfg.params.validate()?;
    let jobs = discover_inputs(&cfg.input_root)?;
    let params_sha = cfg.params.sha256();

    let run = || -> Vec<Result<ImageOutcome>> {
        jobs.par_iter()
            .map(|job| {
                log::info!("processing {}", job.key);
                let out = process_image(job, cfg, &params_sha);
                if let Err(e) = &out {
                    log::error!("{}: {e}", job.key);
                }
                out
            })
            .collect()
    };
    let outcomes = match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::invalid(format!("cannot build a pool of {n} threads: {e}")))?
            .install(run),
        None => run(),
    };

    let mut report = DatasetReport {
        images: jobs.len(),
        ..Default::default()
    };
    let mut stats: Option<DatasetStats> = None;
    for (job, outcome) in jobs.iter().zip(outcomes) {
        match outcome {
            Ok(o) => {
                report.written += o.written;
                report
                    .rejects
                    .extend(o.rejects.into_iter().map(|r| (job.key.clone(), r)));
                if let Some(s) = o.stats {
                    stats.get_or_insert_with(Default::default).merge(&s);
                }
            }
            Err(e) => report.errors.push((job.key.clone(), e.to_string())),
        }
    }
    write_report_lines(&cfg.output_root.join("rejects.txt"), &report.rejects)?;
    write_report_lines(&cfg.output_root.join("errors.txt"), &report.errors)?;
    if let Some(s) = &stats {
        io::write_json(&cfg.output_root.join("stats.json"), &s.to_json())?;
    }
    report.stats = stats;
    Ok(report)
}

/// Reads an allowlist: one key per line, `#` comments and blank lines
/// ignored.
pub fn read_allowlist(path: &Path) -> Result<BTreeSet<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect())
}
