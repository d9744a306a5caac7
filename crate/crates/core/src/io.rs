//! File formats: PNG rasters, camera JSON and atomic writes.
//!
//! Disparity PNGs are 16-bit grayscale with `p = 0` marking a missing
//! measurement and `D = (p - 1) / 256` otherwise. Depth and distance outputs
//! use `round(meters * 256)`, transmission `round(t * 65535)`, both 16-bit.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageBuffer, Luma, Rgb as PxRgb};
use serde::{Deserialize, Serialize};

use crate::camera::CameraRig;
use crate::error::{Error, Result};
use crate::labels::{InstanceMap, LabelMap};
use crate::raster::{Image, ScalarField};

pub const DISPARITY_SCALE: f64 = 256.0;
pub const METRIC_SCALE: f64 = 256.0;

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    let write = || -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    };
    write().map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

fn open(path: &Path) -> Result<DynamicImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    image::load_from_memory_with_format(&bytes, image::ImageFormat::Png).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

fn encode(path: &Path, img: DynamicImage) -> Result<()> {
    let mut buf = std::io::Cursor::new(Vec::new());
    img.write_to(&mut buf, image::ImageFormat::Png).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })?;
    write_atomic(path, buf.get_ref())
}

fn is_16bit(img: &DynamicImage) -> bool {
    matches!(
        img,
        DynamicImage::ImageLuma16(_)
            | DynamicImage::ImageLumaA16(_)
            | DynamicImage::ImageRgb16(_)
            | DynamicImage::ImageRgba16(_)
    )
}

/// Reads an 8- or 16-bit PNG as RGB in `[0, 1]`. Alpha is dropped.
pub fn read_rgb_png(path: &Path) -> Result<Image> {
    let img = open(path)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data: Vec<f64> = if is_16bit(&img) {
        img.to_rgb16().into_raw().into_iter().map(|x| x as f64 / 65535.0).collect()
    } else {
        img.to_rgb8().into_raw().into_iter().map(|x| x as f64 / 255.0).collect()
    };
    Image::from_raw(w, h, data)
}

pub fn write_rgb_png(path: &Path, image: &Image) -> Result<()> {
    let raw: Vec<u8> = image.data().iter().map(|&x| (x * 255.0).round() as u8).collect();
    let buf: ImageBuffer<PxRgb<u8>, _> = ImageBuffer::from_raw(image.width() as u32, image.height() as u32, raw)
        .expect("buffer length matches dimensions");
    encode(path, DynamicImage::ImageRgb8(buf))
}

fn read_gray16(path: &Path) -> Result<(usize, usize, Vec<u16>)> {
    match open(path)? {
        DynamicImage::ImageLuma16(buf) => Ok((buf.width() as usize, buf.height() as usize, buf.into_raw())),
        other => Err(Error::format(
            path,
            format!("expected a 16-bit grayscale PNG, found {:?}", other.color()),
        )),
    }
}

pub fn write_gray16_png(path: &Path, width: usize, height: usize, values: Vec<u16>) -> Result<()> {
    let buf: ImageBuffer<Luma<u16>, _> =
        ImageBuffer::from_raw(width as u32, height as u32, values).expect("buffer length matches dimensions");
    encode(path, DynamicImage::ImageLuma16(buf))
}

pub fn read_disparity_png(path: &Path) -> Result<ScalarField> {
    let (w, h, raw) = read_gray16(path)?;
    let valid: Vec<bool> = raw.iter().map(|&p| p > 0).collect();
    let values = raw
        .iter()
        .map(|&p| if p > 0 { (p as f64 - 1.0) / DISPARITY_SCALE } else { 0.0 })
        .collect();
    ScalarField::with_mask(w, h, values, valid)
}

/// Inverse of [`read_disparity_png`] up to quantization.
pub fn write_disparity_png(path: &Path, disparity: &ScalarField) -> Result<()> {
    let raw = (0..disparity.len())
        .map(|i| {
            if disparity.valid()[i] {
                (disparity.values()[i] * DISPARITY_SCALE + 1.0).round().clamp(1.0, 65535.0) as u16
            } else {
                0
            }
        })
        .collect();
    write_gray16_png(path, disparity.width(), disparity.height(), raw)
}

/// Meters as `round(m * 256)`, saturating. Invalid pixels are written as 0.
pub fn write_metric_png(path: &Path, field: &ScalarField) -> Result<()> {
    let raw = (0..field.len())
        .map(|i| {
            if field.valid()[i] {
                (field.values()[i] * METRIC_SCALE).round().clamp(0.0, 65535.0) as u16
            } else {
                0
            }
        })
        .collect();
    write_gray16_png(path, field.width(), field.height(), raw)
}

pub fn read_metric_png(path: &Path) -> Result<ScalarField> {
    let (w, h, raw) = read_gray16(path)?;
    ScalarField::from_values(w, h, raw.iter().map(|&p| p as f64 / METRIC_SCALE).collect())
}

pub fn write_transmission_png(path: &Path, t: &ScalarField) -> Result<()> {
    let raw = t
        .values()
        .iter()
        .map(|&x| (x * 65535.0).round().clamp(0.0, 65535.0) as u16)
        .collect();
    write_gray16_png(path, t.width(), t.height(), raw)
}

/// 8-bit trainId label map.
pub fn read_label_png(path: &Path) -> Result<LabelMap> {
    match open(path)? {
        DynamicImage::ImageLuma8(buf) => {
            let (w, h) = (buf.width() as usize, buf.height() as usize);
            LabelMap::new(w, h, buf.into_raw()).map_err(|e| Error::format(path, e.to_string()))
        }
        other => Err(Error::format(
            path,
            format!("expected an 8-bit grayscale label PNG, found {:?}", other.color()),
        )),
    }
}

pub fn write_label_png(path: &Path, labels: &LabelMap) -> Result<()> {
    let buf: ImageBuffer<Luma<u8>, _> =
        ImageBuffer::from_raw(labels.width() as u32, labels.height() as u32, labels.ids().to_vec())
            .expect("buffer length matches dimensions");
    encode(path, DynamicImage::ImageLuma8(buf))
}

/// 16-bit instance map with `class * 1000 + k` encoding.
pub fn read_instance_png(path: &Path) -> Result<InstanceMap> {
    let (w, h, raw) = read_gray16(path)?;
    let raw: Vec<u32> = raw.into_iter().map(u32::from).collect();
    InstanceMap::from_encoded(w, h, &raw).map_err(|e| Error::format(path, e.to_string()))
}

pub fn write_instance_png(path: &Path, instances: &InstanceMap) -> Result<()> {
    let raw = instances
        .ids()
        .iter()
        .map(|&id| u16::try_from(id).map_err(|_| Error::invalid(format!("instance id {id} exceeds 16 bits"))))
        .collect::<Result<Vec<u16>>>()?;
    write_gray16_png(path, instances.width(), instances.height(), raw)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CameraFile {
    Flat(CameraRig),
    Nested { extrinsic: Extrinsic, intrinsic: Intrinsic },
}

#[derive(Deserialize)]
struct Extrinsic {
    baseline: f64,
}

#[derive(Deserialize)]
struct Intrinsic {
    fx: f64,
    fy: f64,
    u0: f64,
    v0: f64,
}

/// Reads either the flat `{fx, fy, cx, cy, baseline}` layout or the nested
/// `{extrinsic: {baseline}, intrinsic: {fx, fy, u0, v0}}` layout.
pub fn read_camera_json(path: &Path) -> Result<CameraRig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parsed: CameraFile = serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(match parsed {
        CameraFile::Flat(rig) => rig,
        CameraFile::Nested { extrinsic, intrinsic } => CameraRig {
            fx: intrinsic.fx,
            fy: intrinsic.fy,
            cx: intrinsic.u0,
            cy: intrinsic.v0,
            baseline: extrinsic.baseline,
        },
    })
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_vec_pretty(value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push(b'\n');
    write_atomic(path, &text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rgb_round_trip_is_exact_on_the_8bit_grid() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.png");
        let img = Image::from_fn(7, 5, |u, v| [u as f64 / 255.0, v as f64 * 3.0 / 255.0, 1.0]);
        write_rgb_png(&path, &img).unwrap();
        assert_eq!(read_rgb_png(&path).unwrap(), img);
    }

    #[test]
    fn disparity_encoding() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.png");
        write_gray16_png(&path, 3, 1, vec![0, 1, 257 + 256 * 9]).unwrap();
        let d = read_disparity_png(&path).unwrap();
        assert_eq!(d.valid(), &[false, true, true]);
        assert_eq!(d.values()[1], 0.0);
        assert_eq!(d.values()[2], 10.0);
        write_disparity_png(&path, &d).unwrap();
        assert_eq!(read_disparity_png(&path).unwrap(), d);
    }

    #[test]
    fn eight_bit_disparity_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.png");
        write_label_png(&path, &LabelMap::filled(2, 2, 0).unwrap()).unwrap();
        assert!(matches!(read_disparity_png(&path), Err(Error::Format { .. })));
    }

    #[test]
    fn camera_layouts() {
        let dir = tempfile::tempdir().unwrap();
        let flat = dir.path().join("flat.json");
        fs::write(&flat, r#"{"fx": 2262.52, "fy": 2265.3, "cx": 1096.98, "cy": 513.137, "baseline": 0.209313}"#).unwrap();
        let nested = dir.path().join("nested.json");
        fs::write(
            &nested,
            r#"{"extrinsic": {"baseline": 0.209313, "pitch": 0.038}, "intrinsic": {"fx": 2262.52, "fy": 2265.3, "u0": 1096.98, "v0": 513.137}}"#,
        )
        .unwrap();
        let a = read_camera_json(&flat).unwrap();
        assert_eq!(a, read_camera_json(&nested).unwrap());
        assert_eq!(a.baseline, 0.209313);
        assert!(read_camera_json(&dir.path().join("missing.json")).is_err());
    }

    #[test]
    fn label_and_instance_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let labels = LabelMap::new(3, 2, vec![0, 10, 255, 13, 13, 18]).unwrap();
        write_label_png(&dir.path().join("l.png"), &labels).unwrap();
        assert_eq!(read_label_png(&dir.path().join("l.png")).unwrap(), labels);

        let inst = InstanceMap::from_encoded(3, 1, &[0, 13001, 18000]).unwrap();
        write_instance_png(&dir.path().join("i.png"), &inst).unwrap();
        assert_eq!(read_instance_png(&dir.path().join("i.png")).unwrap(), inst);
    }

    #[test]
    fn metric_output_saturates() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.png");
        let f = ScalarField::from_values(3, 1, vec![1.5, 200.0, 1000.0]).unwrap();
        write_metric_png(&path, &f).unwrap();
        let back = read_metric_png(&path).unwrap();
        assert_eq!(back.values(), &[1.5, 200.0, 65535.0 / 256.0]);
    }

    #[test]
    fn atomic_write_leaves_no_temp_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub/x.json");
        write_json(&path, &[1, 2, 3]).unwrap();
        let names: Vec<_> = fs::read_dir(dir.path().join("sub")).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(names, vec![std::ffi::OsString::from("x.json")]);
    }
}
