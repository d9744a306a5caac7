//! C ABI for foggen.
//!
//! Images and scalar fields cross the boundary as opaque handles owned by the
//! caller once returned; release them with the matching `_free` function.
//! Every fallible function returns a [`FoggenStatus`]. On failure, a message
//! describing the last error on the calling thread is available from
//! [`foggen_last_error`] until the next failing call on that thread.
//!
//! Images hold RGB values in `[0, 1]` as stored in the file, interleaved
//! row-major.
//! Fields hold one `f64` per pixel plus a validity mask.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use foggen::camera::CameraRig;
use foggen::eval::{agreement_coefficient, kendall_tau, PairwiseCounts};
use foggen::fog::{mor_from_beta, simulate_fog};
use foggen::io;
use foggen::params::PipelineParams;
use foggen::raster::{Image, ScalarField};
use foggen::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FoggenStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    Io = 4,
    Format = 5,
    /// Depth completion could not produce a complete map.
    Depth = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// Opaque RGB image.
pub struct FoggenImage(Image);

/// Opaque scalar field with validity mask.
pub struct FoggenField(ScalarField);

/// Pinhole intrinsics of the left camera, pixels, and the baseline, meters.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoggenCameraRig {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub baseline: f64,
}

/// Pipeline parameters. Start from [`foggen_params_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoggenParams {
    pub epsilon: f64,
    pub k_hat: usize,
    pub m: f64,
    pub min_valid: usize,
    pub valid_fraction: f64,
    pub ransac_max_iters: usize,
    pub ransac_p: f64,
    pub theta_factor: f64,
    pub theta_hat: f64,
    pub depth_floor: f64,
    pub gf_radius: usize,
    pub gf_mu: f64,
}

/// Outputs of [`foggen_simulate`]. Handles are owned by the caller.
#[repr(C)]
#[derive(Debug)]
pub struct FoggenSimulation {
    pub foggy: *mut FoggenImage,
    pub transmission: *mut FoggenField,
    pub depth: *mut FoggenField,
    pub distance: *mut FoggenField,
    pub light: [f64; 3],
    /// Pixel `[u, v]` the atmospheric light was read from.
    pub light_pixel: [usize; 2],
}

struct Failure {
    status: FoggenStatus,
    message: String,
}

impl Failure {
    fn new(status: FoggenStatus, message: impl Into<String>) -> Self {
        Failure {
            status,
            message: message.into(),
        }
    }

    fn null(name: &str) -> Self {
        Failure::new(FoggenStatus::NullPointer, format!("{name} is null"))
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let status = match &err {
            Error::DimensionMismatch { .. } => FoggenStatus::DimensionMismatch,
            Error::InvalidArgument(_) | Error::ImageTooSmall { .. } | Error::NothingToEvaluate => {
                FoggenStatus::InvalidArgument
            }
            Error::IncompleteDepth(_) | Error::Unfittable(_) | Error::NoDepthAnchors | Error::MissingPlane(_) => {
                FoggenStatus::Depth
            }
            Error::Io { .. } => FoggenStatus::Io,
            Error::Image { .. } | Error::Json { .. } | Error::Format { .. } => FoggenStatus::Format,
        };
        Failure::new(status, err.to_string())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(text));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> FoggenStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FoggenStatus::Ok,
        Ok(Err(failure)) => {
            set_last_error(&failure.message);
            failure.status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            set_last_error(&format!("panic: {message}"));
            FoggenStatus::Panic
        }
    }
}

unsafe fn path_arg(path: *const c_char, name: &str) -> Result<PathBuf, Failure> {
    if path.is_null() {
        return Err(Failure::null(name));
    }
    let s = CStr::from_ptr(path)
        .to_str()
        .map_err(|_| Failure::new(FoggenStatus::InvalidArgument, format!("{name} is not UTF-8")))?;
    Ok(PathBuf::from(s))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure::null(name))
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| Failure::null(name))
}

fn pixel_count(width: usize, height: usize, channels: usize) -> Result<usize, Failure> {
    width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::new(FoggenStatus::InvalidArgument, "image size is zero or overflows"))
}

impl From<FoggenCameraRig> for CameraRig {
    fn from(r: FoggenCameraRig) -> Self {
        CameraRig {
            fx: r.fx,
            fy: r.fy,
            cx: r.cx,
            cy: r.cy,
            baseline: r.baseline,
        }
    }
}

impl From<CameraRig> for FoggenCameraRig {
    fn from(r: CameraRig) -> Self {
        FoggenCameraRig {
            fx: r.fx,
            fy: r.fy,
            cx: r.cx,
            cy: r.cy,
            baseline: r.baseline,
        }
    }
}

impl From<FoggenParams> for PipelineParams {
    fn from(p: FoggenParams) -> Self {
        PipelineParams {
            epsilon: p.epsilon,
            k_hat: p.k_hat,
            m: p.m,
            min_valid: p.min_valid,
            valid_fraction: p.valid_fraction,
            ransac_max_iters: p.ransac_max_iters,
            ransac_p: p.ransac_p,
            theta_factor: p.theta_factor,
            theta_hat: p.theta_hat,
            depth_floor: p.depth_floor,
            gf_radius: p.gf_radius,
            gf_mu: p.gf_mu,
        }
    }
}

impl From<PipelineParams> for FoggenParams {
    fn from(p: PipelineParams) -> Self {
        FoggenParams {
            epsilon: p.epsilon,
            k_hat: p.k_hat,
            m: p.m,
            min_valid: p.min_valid,
            valid_fraction: p.valid_fraction,
            ransac_max_iters: p.ransac_max_iters,
            ransac_p: p.ransac_p,
            theta_factor: p.theta_factor,
            theta_hat: p.theta_hat,
            depth_floor: p.depth_floor,
            gf_radius: p.gf_radius,
            gf_mu: p.gf_mu,
        }
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn foggen_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread, or null if none. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn foggen_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Short static name of a status code; unknown codes get a generic name.
#[no_mangle]
pub extern "C" fn foggen_status_name(status: i32) -> *const c_char {
    let name: &'static str = match status {
        0 => "ok\0",
        1 => "null pointer\0",
        2 => "invalid argument\0",
        3 => "dimension mismatch\0",
        4 => "io error\0",
        5 => "format error\0",
        6 => "depth completion failed\0",
        7 => "buffer too small\0",
        8 => "internal panic\0",
        _ => "unknown status\0",
    };
    name.as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn foggen_params_default() -> FoggenParams {
    PipelineParams::default().into()
}

/// Checks every parameter against its admissible range.
///
/// # Safety
/// `params` must be null or point to a valid `FoggenParams`.
#[no_mangle]
pub unsafe extern "C" fn foggen_params_validate(params: *const FoggenParams) -> FoggenStatus {
    guard(|| {
        let p = ref_arg(params, "params")?;
        PipelineParams::from(*p).validate()?;
        Ok(())
    })
}

/// Reads a camera JSON file.
///
/// # Safety
/// `path` must be a NUL-terminated string, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn foggen_camera_load(path: *const c_char, out: *mut FoggenCameraRig) -> FoggenStatus {
    guard(|| {
        let path = path_arg(path, "path")?;
        let out = out_arg(out, "out")?;
        *out = io::read_camera_json(&path)?.into();
        Ok(())
    })
}

/// Creates an image from `3 * width * height` interleaved RGB values.
///
/// # Safety
/// `data` must point to that many readable doubles, `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn foggen_image_new(
    width: usize,
    height: usize,
    data: *const f64,
    out: *mut *mut FoggenImage,
) -> FoggenStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        if data.is_null() {
            return Err(Failure::null("data"));
        }
        let n = pixel_count(width, height, 3)?;
        let values = std::slice::from_raw_parts(data, n).to_vec();
        let image = Image::from_raw(width, height, values)?;
        *out = Box::into_raw(Box::new(FoggenImage(image)));
        Ok(())
    })
}

/// Reads an 8- or 16-bit RGB PNG.
///
/// # Safety
/// `path` must be a NUL-terminated string, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn foggen_image_load_png(path: *const c_char, out: *mut *mut FoggenImage) -> FoggenStatus {
    guard(|| {
        let path = path_arg(path, "path")?;
        let out = out_arg(out, "out")?;
        let image = io::read_rgb_png(&path)?;
        *out = Box::into_raw(Box::new(FoggenImage(image)));
        Ok(())
    })
}

/// Writes an 8-bit RGB PNG.
///
/// # Safety
/// `image` must be a live handle, `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn foggen_image_save_png(image: *const FoggenImage, path: *const c_char) -> FoggenStatus {
    guard(|| {
        let image = ref_arg(image, "image")?;
        let path = path_arg(path, "path")?;
        io::write_rgb_png(&path, &image.0)?;
        Ok(())
    })
}

/// Width in pixels, 0 for a null handle.
///
/// # Safety
/// `image` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn foggen_image_width(image: *const FoggenImage) -> usize {
    image.as_ref().map_or(0, |i| i.0.width())
}

/// Height in pixels, 0 for a null handle.
///
/// # Safety
/// `image` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn foggen_image_height(image: *const FoggenImage) -> usize {
    image.as_ref().map_or(0, |i| i.0.height())
}

/// Copies the `3 * width * height` interleaved values into `buf`.
///
/// # Safety
/// `image` must be a live handle and `buf` writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn foggen_image_copy_data(image: *const FoggenImage, buf: *mut f64, len: usize) -> FoggenStatus {
    guard(|| {
        let image = ref_arg(image, "image")?;
        copy_out(image.0.data(), buf, len)
    })
}

/// Releases an image. Null is ignored.
///
/// # Safety
/// `image` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn foggen_image_free(image: *mut FoggenImage) {
    if !image.is_null() {
        drop(Box::from_raw(image));
    }
}

/// Creates a field from `width * height` values. `valid` may be null, in
/// which case every pixel is valid; otherwise a nonzero byte marks a valid
/// pixel.
///
/// # Safety
/// `values` (and `valid` if not null) must point to `width * height`
/// readable elements, `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn foggen_field_new(
    width: usize,
    height: usize,
    values: *const f64,
    valid: *const u8,
    out: *mut *mut FoggenField,
) -> FoggenStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        if values.is_null() {
            return Err(Failure::null("values"));
        }
        let n = pixel_count(width, height, 1)?;
        let values = std::slice::from_raw_parts(values, n).to_vec();
        let field = if valid.is_null() {
            ScalarField::from_values(width, height, values)?
        } else {
            let mask = std::slice::from_raw_parts(valid, n).iter().map(|&b| b != 0).collect();
            ScalarField::with_mask(width, height, values, mask)?
        };
        *out = Box::into_raw(Box::new(FoggenField(field)));
        Ok(())
    })
}

/// Reads a 16-bit disparity PNG; zero pixels become invalid.
///
/// # Safety
/// `path` must be a NUL-terminated string, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn foggen_field_load_disparity_png(
    path: *const c_char,
    out: *mut *mut FoggenField,
) -> FoggenStatus {
    guard(|| {
        let path = path_arg(path, "path")?;
        let out = out_arg(out, "out")?;
        let field = io::read_disparity_png(&path)?;
        *out = Box::into_raw(Box::new(FoggenField(field)));
        Ok(())
    })
}

/// Writes a field as a 16-bit PNG scaled by 65535, for transmission maps.
///
/// # Safety
/// `field` must be a live handle, `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn foggen_field_save_transmission_png(
    field: *const FoggenField,
    path: *const c_char,
) -> FoggenStatus {
    guard(|| {
        let field = ref_arg(field, "field")?;
        let path = path_arg(path, "path")?;
        io::write_transmission_png(&path, &field.0)?;
        Ok(())
    })
}

/// Writes a field in meters as a 16-bit PNG scaled by 256.
///
/// # Safety
/// `field` must be a live handle, `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn foggen_field_save_metric_png(field: *const FoggenField, path: *const c_char) -> FoggenStatus {
    guard(|| {
        let field = ref_arg(field, "field")?;
        let path = path_arg(path, "path")?;
        io::write_metric_png(&path, &field.0)?;
        Ok(())
    })
}

/// # Safety
/// `field` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn foggen_field_width(field: *const FoggenField) -> usize {
    field.as_ref().map_or(0, |f| f.0.width())
}

/// # Safety
/// `field` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn foggen_field_height(field: *const FoggenField) -> usize {
    field.as_ref().map_or(0, |f| f.0.height())
}

/// Copies the `width * height` values into `buf`. Invalid pixels carry
/// whatever value is stored; check the mask.
///
/// # Safety
/// `field` must be a live handle and `buf` writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn foggen_field_copy_values(field: *const FoggenField, buf: *mut f64, len: usize) -> FoggenStatus {
    guard(|| {
        let field = ref_arg(field, "field")?;
        copy_out(field.0.values(), buf, len)
    })
}

/// Copies the validity mask, one byte per pixel, 1 for valid.
///
/// # Safety
/// `field` must be a live handle and `buf` writable for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn foggen_field_copy_valid(field: *const FoggenField, buf: *mut u8, len: usize) -> FoggenStatus {
    guard(|| {
        let field = ref_arg(field, "field")?;
        let mask: Vec<u8> = field.0.valid().iter().map(|&b| u8::from(b)).collect();
        copy_out(&mask, buf, len)
    })
}

/// Releases a field. Null is ignored.
///
/// # Safety
/// `field` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn foggen_field_free(field: *mut FoggenField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

unsafe fn copy_out<T: Copy>(src: &[T], buf: *mut T, len: usize) -> Result<(), Failure> {
    if buf.is_null() {
        return Err(Failure::null("buf"));
    }
    if len < src.len() {
        return Err(Failure::new(
            FoggenStatus::BufferTooSmall,
            format!("buffer holds {len} elements, {} needed", src.len()),
        ));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

/// Runs the full pipeline on a rectified stereo pair. `params` may be null
/// for the defaults. On success every handle in `out` is set and owned by
/// the caller; on failure `out` is left untouched.
///
/// # Safety
/// Handles must be live, `rig` readable, `params` null or readable, `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn foggen_simulate(
    left: *const FoggenImage,
    right: *const FoggenImage,
    disparity: *const FoggenField,
    rig: *const FoggenCameraRig,
    beta: f64,
    params: *const FoggenParams,
    seed: u64,
    out: *mut FoggenSimulation,
) -> FoggenStatus {
    guard(|| {
        let left = ref_arg(left, "left")?;
        let right = ref_arg(right, "right")?;
        let disparity = ref_arg(disparity, "disparity")?;
        let rig = CameraRig::from(*ref_arg(rig, "rig")?);
        let out = out_arg(out, "out")?;
        let params = params.as_ref().map_or_else(PipelineParams::default, |p| (*p).into());
        params.validate()?;
        let sim = simulate_fog(&left.0, &right.0, &disparity.0, &rig, beta, &params, seed)?;
        *out = FoggenSimulation {
            foggy: Box::into_raw(Box::new(FoggenImage(sim.foggy))),
            transmission: Box::into_raw(Box::new(FoggenField(sim.transmission))),
            depth: Box::into_raw(Box::new(FoggenField(sim.depth))),
            distance: Box::into_raw(Box::new(FoggenField(sim.distance))),
            light: sim.light.rgb,
            light_pixel: sim.light.pixel,
        };
        Ok(())
    })
}

/// Releases every handle in a simulation result and nulls them.
///
/// # Safety
/// `sim` must be null or point to a result whose handles are not yet freed.
#[no_mangle]
pub unsafe extern "C" fn foggen_simulation_free(sim: *mut FoggenSimulation) {
    if let Some(sim) = sim.as_mut() {
        foggen_image_free(sim.foggy);
        foggen_field_free(sim.transmission);
        foggen_field_free(sim.depth);
        foggen_field_free(sim.distance);
        sim.foggy = ptr::null_mut();
        sim.transmission = ptr::null_mut();
        sim.depth = ptr::null_mut();
        sim.distance = ptr::null_mut();
    }
}

/// Meteorological optical range, meters, for attenuation `beta` in 1/m.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn foggen_mor_from_beta(beta: f64, out: *mut f64) -> FoggenStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = mor_from_beta(beta)?;
        Ok(())
    })
}

/// Agreement coefficient of `m` raters over `t` items, from the row-major
/// `t * t` matrix of pairwise preference counts.
///
/// # Safety
/// `counts` must point to `t * t` readable values, `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn foggen_agreement(m: u64, t: usize, counts: *const u64, out: *mut f64) -> FoggenStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        if counts.is_null() {
            return Err(Failure::null("counts"));
        }
        let n = pixel_count(t, t, 1)?;
        let flat = std::slice::from_raw_parts(counts, n);
        let rows = flat.chunks(t).map(|r| r.to_vec()).collect();
        *out = agreement_coefficient(&PairwiseCounts::new(m, rows)?);
        Ok(())
    })
}

/// Kendall rank correlation, tau-b, of two length-`n` sequences.
///
/// # Safety
/// `a` and `b` must point to `n` readable doubles, `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn foggen_kendall_tau(a: *const f64, b: *const f64, n: usize, out: *mut f64) -> FoggenStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        if a.is_null() || b.is_null() {
            return Err(Failure::null("a or b"));
        }
        let (a, b) = (std::slice::from_raw_parts(a, n), std::slice::from_raw_parts(b, n));
        *out = kendall_tau(a, b)?;
        Ok(())
    })
}
