//! Portable float map: `Pf` (one channel) or `PF` (three, interleaved).

use std::path::Path;

use crate::depth::{DepthMap, Image};
use crate::error::{Error, Result};

/// Decoded PFM payload, top row first.
#[derive(Debug, Clone, PartialEq)]
pub struct Pfm {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    /// Row-major, channels interleaved per pixel.
    pub data: Vec<f32>,
}

/// Encode little-endian with a negative scale; rows are stored bottom first.
pub fn encode(pfm: &Pfm) -> Result<Vec<u8>> {
    let tag = match pfm.channels {
        1 => "Pf",
        3 => "PF",
        c => {
            return Err(Error::invalid(
                "channels",
                format!("PFM holds 1 or 3 channels, got {c}"),
            ))
        }
    };
    let row = pfm.width * pfm.channels;
    if pfm.data.len() != row * pfm.height {
        return Err(Error::shape(row * pfm.height, pfm.data.len()));
    }
    let mut out = format!("{tag}\n{} {}\n-1.0\n", pfm.width, pfm.height).into_bytes();
    out.reserve(pfm.data.len() * 4);
    for y in (0..pfm.height).rev() {
        for v in &pfm.data[y * row..(y + 1) * row] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> Result<Pfm> {
    let bad = |r: &str| Error::format("PFM", r);
    let mut pos = 0;
    let mut token = || -> Result<String> {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        let t = std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("non-ASCII header"))?;
        Ok(t.to_string())
    };
    let channels = match token()?.as_str() {
        "Pf" => 1,
        "PF" => 3,
        t => return Err(bad(&format!("unknown magic `{t}`"))),
    };
    let width: usize = token()?.parse().map_err(|_| bad("bad width"))?;
    let height: usize = token()?.parse().map_err(|_| bad("bad height"))?;
    let scale: f32 = token()?.parse().map_err(|_| bad("bad scale"))?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(bad("scale must be finite and non-zero"));
    }
    // Exactly one whitespace byte separates the header from the payload.
    pos += 1;
    let row = width * channels;
    let need = row * height * 4;
    let payload = bytes.get(pos..).ok_or_else(|| bad("missing payload"))?;
    if payload.len() != need {
        return Err(bad(&format!("expected {need} payload bytes, found {}", payload.len())));
    }
    let little = scale < 0.0;
    let mut data = vec![0.0f32; row * height];
    for (i, chunk) in payload.chunks_exact(4).enumerate() {
        let b = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little {
            f32::from_le_bytes(b)
        } else {
            f32::from_be_bytes(b)
        };
        let (file_row, col) = (i / row, i % row);
        data[(height - 1 - file_row) * row + col] = v;
    }
    Ok(Pfm {
        channels,
        height,
        width,
        data,
    })
}

pub fn read(path: &Path) -> Result<Pfm> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

pub fn write(path: &Path, pfm: &Pfm) -> Result<()> {
    std::fs::write(path, encode(pfm)?).map_err(|e| Error::io(path, e))
}

impl Pfm {
    pub fn from_depth(depth: &DepthMap) -> Self {
        Pfm {
            channels: 1,
            height: depth.height,
            width: depth.width,
            data: depth.values.clone(),
        }
    }

    /// Confidence as its own map; `None` if the depth map carries none.
    pub fn from_confidence(depth: &DepthMap) -> Option<Self> {
        depth.confidence.as_ref().map(|c| Pfm {
            channels: 1,
            height: depth.height,
            width: depth.width,
            data: c.clone(),
        })
    }

    /// Non-positive or non-finite entries become invalid pixels.
    pub fn to_depth(&self) -> Result<DepthMap> {
        if self.channels != 1 {
            return Err(Error::invalid("channels", "a depth map needs a single-channel PFM"));
        }
        DepthMap::from_values(self.height, self.width, self.data.clone())
    }

    pub fn from_image(image: &Image) -> Result<Self> {
        if image.channels != 1 && image.channels != 3 {
            return Err(Error::invalid(
                "channels",
                format!("PFM holds 1 or 3 channels, got {}", image.channels),
            ));
        }
        let n = image.height * image.width;
        let mut data = vec![0.0f32; n * image.channels];
        for c in 0..image.channels {
            for i in 0..n {
                data[i * image.channels + c] = image.data[c * n + i] as f32;
            }
        }
        Ok(Pfm {
            channels: image.channels,
            height: image.height,
            width: image.width,
            data,
        })
    }

    pub fn to_image(&self) -> Result<Image> {
        let n = self.height * self.width;
        let mut data = vec![0.0f64; n * self.channels];
        for c in 0..self.channels {
            for i in 0..n {
                data[c * n + i] = self.data[i * self.channels + c] as f64;
            }
        }
        Image::new(self.channels, self.height, self.width, data)
    }
}

pub fn read_depth(path: &Path) -> Result<DepthMap> {
    read(path)?.to_depth()
}

pub fn write_depth(path: &Path, depth: &DepthMap) -> Result<()> {
    write(path, &Pfm::from_depth(depth))
}
