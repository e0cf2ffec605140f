//! Binary little-endian PLY with `float x,y,z` and `uchar red,green,blue`.

use std::path::Path;

use crate::error::{Error, Result};
use crate::fusion::PointCloud;

pub fn encode(cloud: &PointCloud) -> Vec<u8> {
    let n = cloud.len();
    let mut out = format!(
        "ply\nformat binary_little_endian 1.0\nelement vertex {n}\n\
         property float x\nproperty float y\nproperty float z\n\
         property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n"
    )
    .into_bytes();
    out.reserve(n * 15);
    for (p, c) in cloud.points.iter().zip(&cloud.colors) {
        for v in p {
            out.extend_from_slice(&(*v as f32).to_le_bytes());
        }
        out.extend_from_slice(c);
    }
    out
}

/// Reads only the layout written by [`encode`].
pub fn decode(bytes: &[u8]) -> Result<PointCloud> {
    let bad = |r: &str| Error::format("PLY", r);
    let marker = b"end_header\n";
    let end = bytes
        .windows(marker.len())
        .position(|w| w == marker)
        .ok_or_else(|| bad("missing end_header"))?;
    let header = std::str::from_utf8(&bytes[..end]).map_err(|_| bad("non-ASCII header"))?;
    let mut lines = header.lines();
    if lines.next() != Some("ply") {
        return Err(bad("missing magic"));
    }
    let mut count = None;
    let mut props = Vec::new();
    for line in lines {
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.as_slice() {
            ["format", "binary_little_endian", "1.0"] => {}
            ["format", f, ..] => return Err(bad(&format!("unsupported format `{f}`"))),
            ["element", "vertex", n] => count = Some(n.parse::<usize>().map_err(|_| bad("bad vertex count"))?),
            ["element", e, ..] => return Err(bad(&format!("unsupported element `{e}`"))),
            ["property", ty, name] => props.push(format!("{ty} {name}")),
            ["comment", ..] | [] => {}
            _ => return Err(bad(&format!("unexpected header line `{line}`"))),
        }
    }
    let expected = [
        "float x",
        "float y",
        "float z",
        "uchar red",
        "uchar green",
        "uchar blue",
    ];
    if props != expected {
        return Err(bad("expected float x,y,z and uchar red,green,blue"));
    }
    let n = count.ok_or_else(|| bad("missing vertex element"))?;
    let body = &bytes[end + marker.len()..];
    if body.len() != n * 15 {
        return Err(bad(&format!("expected {} vertex bytes, found {}", n * 15, body.len())));
    }
    let mut cloud = PointCloud::default();
    for rec in body.chunks_exact(15) {
        let f = |i: usize| f32::from_le_bytes([rec[i], rec[i + 1], rec[i + 2], rec[i + 3]]) as f64;
        cloud.push([f(0), f(4), f(8)], [rec[12], rec[13], rec[14]]);
    }
    Ok(cloud)
}

pub fn read(path: &Path) -> Result<PointCloud> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

pub fn write(path: &Path, cloud: &PointCloud) -> Result<()> {
    std::fs::write(path, encode(cloud)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut cloud = PointCloud::default();
        cloud.push([1.0, -2.5, 10.125], [255, 0, 7]);
        cloud.push([0.0, 0.0, 3.0], [1, 2, 3]);
        let bytes = encode(&cloud);
        assert!(bytes.starts_with(b"ply\nformat binary_little_endian 1.0\nelement vertex 2\n"));
        assert_eq!(decode(&bytes).unwrap(), cloud);
    }

    #[test]
    fn empty_cloud() {
        let cloud = PointCloud::default();
        assert_eq!(decode(&encode(&cloud)).unwrap(), cloud);
    }

    #[test]
    fn rejects_truncated() {
        let mut cloud = PointCloud::default();
        cloud.push([1.0, 2.0, 3.0], [0, 0, 0]);
        let bytes = encode(&cloud);
        assert!(decode(&bytes[..bytes.len() - 1]).is_err());
        assert!(decode(b"ply\nformat ascii 1.0\nend_header\n").is_err());
    }
}
