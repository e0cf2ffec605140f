//! MVSNet-style camera files.
//!
//! ```text
//! extrinsic
//! r00 r01 r02 t0
//! ...
//! 0 0 0 1
//!
//! intrinsic
//! fx 0 cx
//! 0 fy cy
//! 0 0 1
//!
//! d_min interval
//! ```
//!
//! The image size is not part of the format and is supplied by the caller.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Matrix3, Matrix4};

use crate::error::{Error, Result};
use crate::geometry::Camera;

#[derive(Debug, Clone, PartialEq)]
pub struct CameraFile {
    pub camera: Camera,
    pub d_min: f64,
    pub interval: f64,
}

/// Values are printed in shortest round-trip form, so parsing the output
/// reproduces every matrix entry exactly.
pub fn encode(cam: &CameraFile) -> String {
    let mut s = String::from("extrinsic\n");
    let e = cam.camera.extrinsics();
    for r in 0..4 {
        let row: Vec<String> = (0..4).map(|c| e[(r, c)].to_string()).collect();
        let _ = writeln!(s, "{}", row.join(" "));
    }
    s.push_str("\nintrinsic\n");
    let k = cam.camera.intrinsics();
    for r in 0..3 {
        let row: Vec<String> = (0..3).map(|c| k[(r, c)].to_string()).collect();
        let _ = writeln!(s, "{}", row.join(" "));
    }
    let _ = writeln!(s, "\n{} {}", cam.d_min, cam.interval);
    s
}

pub fn decode(text: &str, height: usize, width: usize) -> Result<CameraFile> {
    let bad = |r: String| Error::format("camera", r);
    let mut tokens = text.split_whitespace();
    let mut expect = |word: &str| match tokens.next() {
        Some(t) if t == word => Ok(()),
        other => Err(bad(format!("expected `{word}`, found {other:?}"))),
    };
    expect("extrinsic")?;
    let rest: Vec<&str> = text.split_whitespace().collect();
    let num = |i: usize| -> Result<f64> {
        rest.get(i)
            .ok_or_else(|| bad("truncated file".into()))?
            .parse::<f64>()
            .map_err(|_| bad(format!("bad number `{}`", rest[i])))
    };
    let mut e = Matrix4::zeros();
    for i in 0..16 {
        e[(i / 4, i % 4)] = num(1 + i)?;
    }
    if rest.get(17) != Some(&"intrinsic") {
        return Err(bad("expected `intrinsic` after 16 extrinsic values".into()));
    }
    let mut k = Matrix3::zeros();
    for i in 0..9 {
        k[(i / 3, i % 3)] = num(18 + i)?;
    }
    let d_min = num(27)?;
    let interval = num(28)?;
    if rest.len() > 29 {
        return Err(bad("trailing tokens".into()));
    }
    if !(d_min > 0.0 && interval > 0.0) {
        return Err(bad(format!("need positive d_min and interval, got {d_min} {interval}")));
    }
    Ok(CameraFile {
        camera: Camera::new(k, e, height, width)?,
        d_min,
        interval,
    })
}

pub fn read(path: &Path, height: usize, width: usize) -> Result<CameraFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    decode(&text, height, width)
}

pub fn write(path: &Path, cam: &CameraFile) -> Result<()> {
    std::fs::write(path, encode(cam)).map_err(|e| Error::io(path, e))
}
