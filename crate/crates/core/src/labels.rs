//! Semantic and instance annotations in the 19-class trainId convention.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};

pub const NUM_CLASSES: usize = 19;
pub const VOID: u8 = 255;

pub const CLASS_NAMES: [&str; NUM_CLASSES] = [
    "road",
    "sidewalk",
    "building",
    "wall",
    "fence",
    "pole",
    "traffic light",
    "traffic sign",
    "vegetation",
    "terrain",
    "sky",
    "person",
    "rider",
    "car",
    "truck",
    "bus",
    "train",
    "motorcycle",
    "bicycle",
];

pub const ROAD: u8 = 0;
pub const SKY: u8 = 10;
pub const PERSON: u8 = 11;
pub const CAR: u8 = 13;

/// Classes with enough support in real foggy road scenes.
pub const FREQUENT_CLASSES: [u8; 10] = [0, 1, 2, 5, 6, 7, 8, 10, 11, 13];

/// Classes that carry instance annotations: person through bicycle.
pub const INSTANCE_CLASSES: [u8; 8] = [11, 12, 13, 14, 15, 16, 17, 18];

/// Encoded instance ids are `class * INSTANCE_ID_FACTOR + k`.
pub const INSTANCE_ID_FACTOR: u32 = 1000;

pub fn all_classes() -> Vec<u8> {
    (0..NUM_CLASSES as u8).collect()
}

pub fn class_name(id: u8) -> &'static str {
    CLASS_NAMES.get(id as usize).copied().unwrap_or("void")
}

/// Per-pixel class ids: `0..19` or [`VOID`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    width: usize,
    height: usize,
    ids: Vec<u8>,
}

impl LabelMap {
    pub fn new(width: usize, height: usize, ids: Vec<u8>) -> Result<Self> {
        if ids.len() != width * height {
            return Err(Error::invalid(format!(
                "label map of {width}x{height} needs {} ids, got {}",
                width * height,
                ids.len()
            )));
        }
        if let Some(bad) = ids.iter().find(|&&c| c as usize >= NUM_CLASSES && c != VOID) {
            return Err(Error::invalid(format!("label id {bad} is neither a class nor void")));
        }
        Ok(LabelMap { width, height, ids })
    }

    pub fn filled(width: usize, height: usize, id: u8) -> Result<Self> {
        Self::new(width, height, vec![id; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn ids(&self) -> &[u8] {
        &self.ids
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> u8 {
        self.ids[v * self.width + u]
    }
}

/// Per-pixel instance ids with their classes. Id 0 is background.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceMap {
    width: usize,
    height: usize,
    ids: Vec<u32>,
    classes: BTreeMap<u32, u8>,
}

impl InstanceMap {
    pub fn new(width: usize, height: usize, ids: Vec<u32>, classes: BTreeMap<u32, u8>) -> Result<Self> {
        if ids.len() != width * height {
            return Err(Error::invalid("instance map size mismatch"));
        }
        for (&id, &class) in &classes {
            if id == 0 {
                return Err(Error::invalid("instance id 0 is reserved for background"));
            }
            if !INSTANCE_CLASSES.contains(&class) {
                return Err(Error::invalid(format!(
                    "instance {id} has class {class}, which carries no instances"
                )));
            }
        }
        if let Some(id) = ids.iter().find(|&&id| id != 0 && !classes.contains_key(&id)) {
            return Err(Error::invalid(format!("instance id {id} has no class")));
        }
        Ok(InstanceMap {
            width,
            height,
            ids,
            classes,
        })
    }

    /// Decodes `class * 1000 + k` ids; values below 1000 are background.
    pub fn from_encoded(width: usize, height: usize, raw: &[u32]) -> Result<Self> {
        let mut classes = BTreeMap::new();
        let ids: Vec<u32> = raw
            .iter()
            .map(|&v| {
                if v < INSTANCE_ID_FACTOR {
                    0
                } else {
                    classes.insert(v, (v / INSTANCE_ID_FACTOR) as u8);
                    v
                }
            })
            .collect();
        Self::new(width, height, ids, classes)
    }

    pub fn empty(width: usize, height: usize) -> Self {
        InstanceMap {
            width,
            height,
            ids: vec![0; width * height],
            classes: BTreeMap::new(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    pub fn classes(&self) -> &BTreeMap<u32, u8> {
        &self.classes
    }
}

/// Tight, inclusive, axis-aligned box around one instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BBox {
    pub instance_id: u32,
    pub class_id: u8,
    pub x_min: usize,
    pub y_min: usize,
    pub x_max: usize,
    pub y_max: usize,
}

/// One box per instance present in the map, ordered by instance id.
pub fn instances_to_bboxes(instances: &InstanceMap) -> Vec<BBox> {
    let mut boxes: BTreeMap<u32, BBox> = BTreeMap::new();
    let w = instances.width;
    for (i, &id) in instances.ids.iter().enumerate() {
        if id == 0 {
            continue;
        }
        let (u, v) = (i % w, i / w);
        boxes
            .entry(id)
            .and_modify(|b| {
                b.x_min = b.x_min.min(u);
                b.x_max = b.x_max.max(u);
                b.y_min = b.y_min.min(v);
                b.y_max = b.y_max.max(v);
            })
            .or_insert(BBox {
                instance_id: id,
                class_id: instances.classes[&id],
                x_min: u,
                y_min: v,
                x_max: u,
                y_max: v,
            });
    }
    boxes.into_values().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn label_map_rejects_unknown_ids() {
        assert!(LabelMap::new(2, 1, vec![0, 19]).is_err());
        assert!(LabelMap::new(2, 1, vec![18, VOID]).is_ok());
    }

    #[test]
    fn encoded_instances_decode() {
        let raw = [0, 7, 13001, 13001, 11002];
        let m = InstanceMap::from_encoded(5, 1, &raw).unwrap();
        assert_eq!(m.ids(), &[0, 0, 13001, 13001, 11002]);
        assert_eq!(m.classes()[&13001], CAR);
        assert_eq!(m.classes()[&11002], PERSON);
        assert!(InstanceMap::from_encoded(1, 1, &[2001]).is_err());
    }

    #[test]
    fn single_blob_box() {
        let (w, h) = (30, 30);
        let raw: Vec<u32> = (0..w * h)
            .map(|i| {
                let (u, v) = (i % w, i / w);
                if (5..15).contains(&u) && (5..15).contains(&v) {
                    13000
                } else {
                    0
                }
            })
            .collect();
        let boxes = instances_to_bboxes(&InstanceMap::from_encoded(w, h, &raw).unwrap());
        assert_eq!(
            boxes,
            vec![BBox { instance_id: 13000, class_id: CAR, x_min: 5, y_min: 5, x_max: 14, y_max: 14 }]
        );
    }

    #[test]
    fn empty_map_has_no_boxes() {
        assert!(instances_to_bboxes(&InstanceMap::empty(8, 8)).is_empty());
    }

    #[test]
    fn boxes_match_pixel_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let (w, h) = (40, 25);
        let ids = [11001u32, 13002, 13007, 18003];
        let raw: Vec<u32> = (0..w * h)
            .map(|_| if rng.gen_bool(0.2) { ids[rng.gen_range(0..ids.len())] } else { 0 })
            .collect();
        let map = InstanceMap::from_encoded(w, h, &raw).unwrap();
        let boxes = instances_to_bboxes(&map);
        let present: Vec<u32> = ids.iter().copied().filter(|id| raw.contains(id)).collect();
        assert_eq!(boxes.iter().map(|b| b.instance_id).collect::<Vec<_>>(), present);
        for b in &boxes {
            let pts: Vec<(usize, usize)> = (0..w * h).filter(|&i| raw[i] == b.instance_id).map(|i| (i % w, i / w)).collect();
            assert_eq!(b.x_min, pts.iter().map(|p| p.0).min().unwrap());
            assert_eq!(b.x_max, pts.iter().map(|p| p.0).max().unwrap());
            assert_eq!(b.y_min, pts.iter().map(|p| p.1).min().unwrap());
            assert_eq!(b.y_max, pts.iter().map(|p| p.1).max().unwrap());
            // Every border of the box touches the instance.
            assert!(pts.iter().any(|p| p.0 == b.x_min) && pts.iter().any(|p| p.1 == b.y_max));
        }
    }
}
