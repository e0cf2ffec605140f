//! C ABI over `mvs-core`.
//!
//! Every entry point returns an [`MvsStatus`]; on failure a description is
//! kept per thread and read with [`mvs_last_error`]. Objects cross the
//! boundary as opaque handles that the caller frees with the matching
//! `*_free` function. Array arguments are flat, row-major buffers whose
//! lengths follow from the dimensions passed alongside them.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use mvs_core::fusion::{evaluate, PointCloud};
use mvs_core::geometry::HypothesisVolume;
use mvs_core::io::{pfm, ply};
use mvs_core::loss::{ufl, ufl_grad, DedicatedFn, UflParams};
use mvs_core::unity::{generate_unity, regress_unity};
use mvs_core::{DepthMap, Error, UnityRole, UnityVolume};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MvsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ShapeMismatch = 3,
    Format = 4,
    Io = 5,
    Numeric = 6,
    Panic = 7,
}

/// Accuracy, completeness and their mean.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MvsMetrics {
    pub accuracy: f64,
    pub completeness: f64,
    pub overall: f64,
}

pub struct MvsUflParams(UflParams);
pub struct MvsDepthMap(DepthMap);
pub struct MvsPointCloud(PointCloud);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(MvsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::InvalidArgument { .. } | Error::InvalidCamera(_) | Error::Config(_) => MvsStatus::InvalidArgument,
            Error::ShapeMismatch { .. } => MvsStatus::ShapeMismatch,
            Error::Format { .. } => MvsStatus::Format,
            Error::Io { .. } => MvsStatus::Io,
            Error::NonFiniteLoss { .. } => MvsStatus::Numeric,
        };
        Failure(status, e.to_string())
    }
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MvsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MvsStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            MvsStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(MvsStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write<T>(p: *mut T, what: &str, v: T) -> Result<(), Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(v);
    Ok(())
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn path(p: *const c_char, what: &str) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(MvsStatus::InvalidArgument, format!("`{what}` is not UTF-8")))?;
    Ok(PathBuf::from(s))
}

fn shape(expected: usize, got: usize) -> Failure {
    Failure(
        MvsStatus::ShapeMismatch,
        format!("shape mismatch: expected {expected}, got {got}"),
    )
}

fn checked_len(dims: &[usize]) -> Result<usize, Failure> {
    dims.iter()
        .try_fold(1usize, |acc, d| acc.checked_mul(*d))
        .ok_or_else(|| Failure(MvsStatus::InvalidArgument, "dimensions overflow".into()))
}

/// Description of the last failure on this thread, or null if none. The
/// string stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mvs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Loss parameters with the default values.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mvs_ufl_params_default(out: *mut *mut MvsUflParams) -> MvsStatus {
    guard(|| write(out, "out", Box::into_raw(Box::new(MvsUflParams(UflParams::default())))))
}

/// Loss parameters parsed from a TOML `[loss]`-style table (keys at top
/// level); missing keys take their defaults.
///
/// # Safety
/// `toml` must be a nul-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mvs_ufl_params_from_toml(toml: *const c_char, out: *mut *mut MvsUflParams) -> MvsStatus {
    guard(|| {
        if toml.is_null() {
            return Err(null("toml"));
        }
        let text = CStr::from_ptr(toml)
            .to_str()
            .map_err(|_| Failure(MvsStatus::InvalidArgument, "`toml` is not UTF-8".into()))?;
        let cfg = mvs_core::io::config::Config::parse(&format!("[loss]\n{text}"))?;
        write(out, "out", Box::into_raw(Box::new(MvsUflParams(cfg.loss))))
    })
}

/// # Safety
/// `params` must come from an `mvs_ufl_params_*` constructor or be null.
#[no_mangle]
pub unsafe extern "C" fn mvs_ufl_params_free(params: *mut MvsUflParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// Pointwise unified focal loss at one cascade stage.
///
/// # Safety
/// `params` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mvs_ufl(
    params: *const MvsUflParams,
    u: f64,
    q: f64,
    q_pos: f64,
    stage: usize,
    out: *mut f64,
) -> MvsStatus {
    guard(|| {
        let p = deref(params, "params")?;
        write(out, "out", ufl(u, q, q_pos, &p.0, stage)?)
    })
}

/// Derivative of [`mvs_ufl`] with respect to `u`.
///
/// # Safety
/// `params` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mvs_ufl_grad(
    params: *const MvsUflParams,
    u: f64,
    q: f64,
    q_pos: f64,
    stage: usize,
    out: *mut f64,
) -> MvsStatus {
    guard(|| {
        let p = deref(params, "params")?;
        write(out, "out", ufl_grad(u, q, q_pos, &p.0, stage)?)
    })
}

/// Range-limiting function with base `base` onto `[lo, hi)`, at `x >= 0`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mvs_dedicated_s(base: f64, lo: f64, hi: f64, x: f64, out: *mut f64) -> MvsStatus {
    guard(|| write(out, "out", DedicatedFn::new(base, lo, hi)?.try_eval(x)?))
}

fn hypotheses(depths: &[f64], planes: usize, height: usize, width: usize) -> Result<HypothesisVolume, Failure> {
    Ok(HypothesisVolume::new(planes, height, width, depths.to_vec(), 0)?)
}

/// Unity labels for a ground-truth depth map.
///
/// `gt` holds `height·width` depths (non-positive means invalid),
/// `hypotheses` holds `planes·height·width` depths plane-major. Writes
/// `planes·height·width` values to `out_values` and one 0/1 byte per pixel
/// to `out_mask`.
///
/// # Safety
/// Buffers must have the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn mvs_generate_unity(
    gt: *const f32,
    height: usize,
    width: usize,
    hypotheses_ptr: *const f64,
    planes: usize,
    out_values: *mut f64,
    out_mask: *mut u8,
) -> MvsStatus {
    guard(|| {
        let hw = checked_len(&[height, width])?;
        let n = checked_len(&[planes, hw])?;
        let gt = DepthMap::from_values(height, width, slice(gt, hw, "gt")?.to_vec())?;
        let hyp = hypotheses(slice(hypotheses_ptr, n, "hypotheses")?, planes, height, width)?;
        let labels = generate_unity(&gt, &hyp)?;
        slice_mut(out_values, n, "out_values")?.copy_from_slice(&labels.values);
        for (m, v) in slice_mut(out_mask, hw, "out_mask")?.iter_mut().zip(&labels.mask) {
            *m = *v as u8;
        }
        Ok(())
    })
}

/// Depth and confidence from a unity volume (same layout as
/// [`mvs_generate_unity`]); invalid pixels get depth 0 and mask 0.
///
/// # Safety
/// Buffers must have the stated lengths.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn mvs_regress_unity(
    values: *const f64,
    mask: *const u8,
    planes: usize,
    height: usize,
    width: usize,
    hypotheses_ptr: *const f64,
    out_depth: *mut f32,
    out_confidence: *mut f32,
    out_mask: *mut u8,
) -> MvsStatus {
    guard(|| {
        let hw = checked_len(&[height, width])?;
        let n = checked_len(&[planes, hw])?;
        let vol = UnityVolume::new(
            planes,
            height,
            width,
            slice(values, n, "values")?.to_vec(),
            slice(mask, hw, "mask")?.iter().map(|m| *m != 0).collect(),
            UnityRole::Estimate,
        )?;
        let hyp = hypotheses(slice(hypotheses_ptr, n, "hypotheses")?, planes, height, width)?;
        let depth = regress_unity(&vol, &hyp)?;
        slice_mut(out_depth, hw, "out_depth")?.copy_from_slice(&depth.values);
        let conf = depth.confidence.as_deref().unwrap_or(&[]);
        let out_c = slice_mut(out_confidence, hw, "out_confidence")?;
        for (o, c) in out_c.iter_mut().zip(conf.iter().chain(std::iter::repeat(&0.0))) {
            *o = *c;
        }
        for (m, v) in slice_mut(out_mask, hw, "out_mask")?.iter_mut().zip(&depth.mask) {
            *m = *v as u8;
        }
        Ok(())
    })
}

/// Depth map from `height·width` values; non-positive entries are invalid.
///
/// # Safety
/// `values` must hold `height·width` floats and `out` be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mvs_depth_map_new(
    values: *const f32,
    height: usize,
    width: usize,
    out: *mut *mut MvsDepthMap,
) -> MvsStatus {
    guard(|| {
        let hw = checked_len(&[height, width])?;
        let d = DepthMap::from_values(height, width, slice(values, hw, "values")?.to_vec())?;
        write(out, "out", Box::into_raw(Box::new(MvsDepthMap(d))))
    })
}

/// # Safety
/// `path` must be a nul-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mvs_depth_map_read_pfm(path_ptr: *const c_char, out: *mut *mut MvsDepthMap) -> MvsStatus {
    guard(|| {
        let d = pfm::read_depth(&path(path_ptr, "path")?)?;
        write(out, "out", Box::into_raw(Box::new(MvsDepthMap(d))))
    })
}

/// # Safety
/// `map` must be a live handle and `path` a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn mvs_depth_map_write_pfm(map: *const MvsDepthMap, path_ptr: *const c_char) -> MvsStatus {
    guard(|| {
        let m = deref(map, "map")?;
        Ok(pfm::write_depth(&path(path_ptr, "path")?, &m.0)?)
    })
}

/// # Safety
/// `map` must be a live handle; `height` and `width` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mvs_depth_map_dims(
    map: *const MvsDepthMap,
    height: *mut usize,
    width: *mut usize,
) -> MvsStatus {
    guard(|| {
        let m = deref(map, "map")?;
        write(height, "height", m.0.height)?;
        write(width, "width", m.0.width)
    })
}

/// Copy the `height·width` depth values (0 where invalid) into `out`.
///
/// # Safety
/// `map` must be a live handle and `out` hold `len` floats.
#[no_mangle]
pub unsafe extern "C" fn mvs_depth_map_values(map: *const MvsDepthMap, out: *mut f32, len: usize) -> MvsStatus {
    guard(|| {
        let m = deref(map, "map")?;
        if len != m.0.len() {
            return Err(shape(m.0.len(), len));
        }
        slice_mut(out, len, "out")?.copy_from_slice(&m.0.values);
        Ok(())
    })
}

/// # Safety
/// `map` must come from an `mvs_depth_map_*` constructor or be null.
#[no_mangle]
pub unsafe extern "C" fn mvs_depth_map_free(map: *mut MvsDepthMap) {
    if !map.is_null() {
        drop(Box::from_raw(map));
    }
}

/// Cloud from `len` points (`3·len` coordinates); colours default to white.
///
/// # Safety
/// `xyz` must hold `3·len` doubles and `out` be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mvs_point_cloud_new(xyz: *const f64, len: usize, out: *mut *mut MvsPointCloud) -> MvsStatus {
    guard(|| {
        let coords = slice(xyz, checked_len(&[len, 3])?, "xyz")?;
        let mut cloud = PointCloud::default();
        for p in coords.chunks_exact(3) {
            cloud.push([p[0], p[1], p[2]], [255; 3]);
        }
        write(out, "out", Box::into_raw(Box::new(MvsPointCloud(cloud))))
    })
}

/// # Safety
/// `path` must be a nul-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mvs_point_cloud_read_ply(path_ptr: *const c_char, out: *mut *mut MvsPointCloud) -> MvsStatus {
    guard(|| {
        let c = ply::read(&path(path_ptr, "path")?)?;
        write(out, "out", Box::into_raw(Box::new(MvsPointCloud(c))))
    })
}

/// # Safety
/// `cloud` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mvs_point_cloud_len(cloud: *const MvsPointCloud, out: *mut usize) -> MvsStatus {
    guard(|| write(out, "out", deref(cloud, "cloud")?.0.len()))
}

/// Copy `3·len` coordinates into `out`.
///
/// # Safety
/// `cloud` must be a live handle and `out` hold `3·len` doubles where `len`
/// is the cloud size.
#[no_mangle]
pub unsafe extern "C" fn mvs_point_cloud_points(cloud: *const MvsPointCloud, out: *mut f64, len: usize) -> MvsStatus {
    guard(|| {
        let c = &deref(cloud, "cloud")?.0;
        if len != c.len() {
            return Err(shape(c.len(), len));
        }
        let dst = slice_mut(out, checked_len(&[len, 3])?, "out")?;
        for (d, p) in dst.chunks_exact_mut(3).zip(&c.points) {
            d.copy_from_slice(p);
        }
        Ok(())
    })
}

/// # Safety
/// `cloud` must come from an `mvs_point_cloud_*` constructor or be null.
#[no_mangle]
pub unsafe extern "C" fn mvs_point_cloud_free(cloud: *mut MvsPointCloud) {
    if !cloud.is_null() {
        drop(Box::from_raw(cloud));
    }
}

/// Capped nearest-neighbour accuracy and completeness.
///
/// # Safety
/// Both clouds must be live handles and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mvs_evaluate(
    recon: *const MvsPointCloud,
    gt: *const MvsPointCloud,
    dist_cap: f64,
    out: *mut MvsMetrics,
) -> MvsStatus {
    guard(|| {
        let m = evaluate(&deref(recon, "recon")?.0, &deref(gt, "gt")?.0, dist_cap)?;
        write(
            out,
            "out",
            MvsMetrics {
                accuracy: m.accuracy,
                completeness: m.completeness,
                overall: m.overall,
            },
        )
    })
}
