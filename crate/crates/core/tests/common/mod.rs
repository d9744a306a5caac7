#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use foggen::io;
use foggen::labels::{InstanceMap, LabelMap, CAR, ROAD, SKY};
use foggen::synthetic::{SceneSpec, StereoScene};

pub const BUILDING: u8 = 2;

/// Ground is road, the left wall a building and the back wall sky; a
/// rectangle on the ground is a car instance.
pub fn scene_labels(spec: &SceneSpec) -> (LabelMap, InstanceMap) {
    let (w, h) = (spec.width, spec.height);
    let class = [ROAD, BUILDING, SKY];
    let car = |u: usize, v: usize| u >= w / 2 && u < w / 2 + w / 8 && v >= h * 3 / 4 && v < h * 3 / 4 + h / 10;
    let ids: Vec<u8> = (0..w * h)
        .map(|i| {
            let (u, v) = (i % w, i / w);
            if car(u, v) {
                CAR
            } else {
                class[spec.region_at(u, v).min(2)]
            }
        })
        .collect();
    let inst: Vec<u32> = (0..w * h)
        .map(|i| if car(i % w, i / w) { CAR as u32 * 1000 } else { 0 })
        .collect();
    let mut classes = BTreeMap::new();
    classes.insert(CAR as u32 * 1000, CAR);
    (
        LabelMap::new(w, h, ids).unwrap(),
        InstanceMap::new(w, h, inst, classes).unwrap(),
    )
}

pub struct Written {
    pub left: PathBuf,
    pub right: PathBuf,
    pub disparity: PathBuf,
    pub camera: PathBuf,
    pub labels: PathBuf,
    pub instances: PathBuf,
}

/// Writes a synthetic scene into the dataset input layout under `root`.
pub fn write_scene(root: &Path, dir: &str, name: &str, spec: &SceneSpec) -> Written {
    let scene = StereoScene::generate(spec);
    let sub = |d: &str| {
        let p = root.join(d).join(dir);
        fs::create_dir_all(&p).unwrap();
        p
    };
    let out = Written {
        left: sub("leftImg").join(format!("{name}_leftImg8bit.png")),
        right: sub("rightImg").join(format!("{name}_rightImg8bit.png")),
        disparity: sub("disparity").join(format!("{name}_disparity.png")),
        camera: sub("camera").join(format!("{name}_camera.json")),
        labels: sub("gtFine").join(format!("{name}_gtFine_labelTrainIds.png")),
        instances: sub("gtFine").join(format!("{name}_gtFine_instanceIds.png")),
    };
    io::write_rgb_png(&out.left, &scene.left).unwrap();
    io::write_rgb_png(&out.right, &scene.right).unwrap();
    io::write_disparity_png(&out.disparity, &scene.disparity).unwrap();
    io::write_json(&out.camera, &scene.rig).unwrap();
    let (labels, instances) = scene_labels(spec);
    io::write_label_png(&out.labels, &labels).unwrap();
    io::write_instance_png(&out.instances, &instances).unwrap();
    out
}

/// Every file below `root`, relative path to contents.
pub fn snapshot(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    walkdir::WalkDir::new(root)
        .into_iter()
        .map(|e| e.unwrap())
        .filter(|e| e.file_type().is_file())
        .map(|e| (e.path().strip_prefix(root).unwrap().to_path_buf(), fs::read(e.path()).unwrap()))
        .collect()
}

/// Small three-plane scene with cheap pipeline settings.
pub fn small_spec(seed: u64) -> SceneSpec {
    SceneSpec {
        seed,
        ..SceneSpec::three_planes().with_size(160, 96)
    }
}
