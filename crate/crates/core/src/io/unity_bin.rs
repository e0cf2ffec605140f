//! Unity volume fixtures: a text header line `UNITY M H W role` followed by
//! `M·H·W` little-endian `f32` values, plane-major. Masked-out pixels store
//! NaN in every plane.

use std::path::Path;

use crate::error::{Error, Result};
use crate::unity::{UnityRole, UnityVolume};

pub fn encode(vol: &UnityVolume) -> Vec<u8> {
    let hw = vol.pixels();
    let mut out = format!(
        "UNITY {} {} {} {}\n",
        vol.planes,
        vol.height,
        vol.width,
        vol.role.as_str()
    )
    .into_bytes();
    out.reserve(vol.values.len() * 4);
    for (i, v) in vol.values.iter().enumerate() {
        let v = if vol.mask[i % hw] { *v as f32 } else { f32::NAN };
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<UnityVolume> {
    let bad = |r: String| Error::format("unity", r);
    let nl = bytes
        .iter()
        .position(|b| *b == b'\n')
        .ok_or_else(|| bad("missing header".into()))?;
    let header = std::str::from_utf8(&bytes[..nl]).map_err(|_| bad("non-ASCII header".into()))?;
    let words: Vec<&str> = header.split_whitespace().collect();
    let [magic, m, h, w, role] = words.as_slice() else {
        return Err(bad(format!("bad header `{header}`")));
    };
    if *magic != "UNITY" {
        return Err(bad(format!("bad magic `{magic}`")));
    }
    let dim = |s: &str| s.parse::<usize>().map_err(|_| bad(format!("bad dimension `{s}`")));
    let (planes, height, width) = (dim(m)?, dim(h)?, dim(w)?);
    let role = UnityRole::parse(role).ok_or_else(|| bad(format!("unknown role `{role}`")))?;
    let hw = height * width;
    let body = &bytes[nl + 1..];
    if body.len() != planes * hw * 4 {
        return Err(bad(format!(
            "expected {} value bytes, found {}",
            planes * hw * 4,
            body.len()
        )));
    }
    let raw: Vec<f32> = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    let mask: Vec<bool> = (0..hw).map(|p| planes == 0 || !raw[p].is_nan()).collect();
    let values = raw
        .iter()
        .enumerate()
        .map(|(i, v)| if mask[i % hw] { *v as f64 } else { 0.0 })
        .collect();
    UnityVolume::new(planes, height, width, values, mask, role)
}

pub fn read(path: &Path) -> Result<UnityVolume> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

pub fn write(path: &Path, vol: &UnityVolume) -> Result<()> {
    std::fs::write(path, encode(vol)).map_err(|e| Error::io(path, e))
}
