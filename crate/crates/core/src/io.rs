//! Grid codecs: 8-bit PGM (P5/P2) masks and label grids, 32-bit float PFM
//! maps, and the JSON spacing sidecar.
//!
//! PFM payloads are grayscale ("Pf"), scale -1.0 (little-endian), with rows
//! stored bottom-to-top. Parse failures report the byte offset that broke.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{BinaryMask, BoundaryLabel, BoundaryLabels, GridGeometry, DEFAULT_SPACING_MM};
use crate::streamline::{Assigned, ThicknessMap};

fn parse_err(offset: usize, msg: impl Into<String>) -> Error {
    Error::Parse { offset, msg: msg.into() }
}

/// Cursor over a PGM/PFM byte stream that remembers its offset for errors.
struct ByteCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteCursor<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        ByteCursor { bytes, pos: 0 }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let b = self.peek();
        if b.is_some() {
            self.pos += 1;
        }
        b
    }

    /// Skip whitespace and `#` comments (comments run to end of line).
    fn skip_separators(&mut self) {
        while let Some(b) = self.peek() {
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while let Some(c) = self.bump() {
                    if c == b'\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn token(&mut self, what: &str) -> Result<&'a [u8]> {
        self.skip_separators();
        let start = self.pos;
        while let Some(b) = self.peek() {
            if b.is_ascii_whitespace() {
                break;
            }
            self.pos += 1;
        }
        if start == self.pos {
            return Err(parse_err(start, format!("expected {what}, found end of data")));
        }
        Ok(&self.bytes[start..self.pos])
    }

    fn ascii_usize(&mut self, what: &str) -> Result<usize> {
        let start_of_token = {
            self.skip_separators();
            self.pos
        };
        let tok = self.token(what)?;
        let s = std::str::from_utf8(tok)
            .map_err(|_| parse_err(start_of_token, format!("{what} is not ASCII")))?;
        s.parse::<usize>()
            .map_err(|_| parse_err(start_of_token, format!("{what} is not a non-negative integer: {s:?}")))
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(parse_err(
                self.bytes.len(),
                format!("truncated {what}: wanted {n} bytes, had {}", self.bytes.len() - self.pos),
            ));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }
}

enum PgmKind {
    Binary, // P5
    Ascii,  // P2
}

fn parse_pgm(bytes: &[u8]) -> Result<(GridGeometry, Vec<u8>)> {
    let mut cur = ByteCursor::new(bytes);
    let magic = cur.take(2, "magic number")?;
    let kind = match magic {
        b"P5" => PgmKind::Binary,
        b"P2" => PgmKind::Ascii,
        _ => return Err(parse_err(0, "not a PGM stream (expected P5 or P2)")),
    };
    let width = cur.ascii_usize("width")?;
    let height = cur.ascii_usize("height")?;
    let maxval_at = {
        cur.skip_separators();
        cur.pos
    };
    let maxval = cur.ascii_usize("maxval")?;
    if maxval == 0 {
        return Err(parse_err(maxval_at, "maxval 0 is not allowed"));
    }
    if maxval > 255 {
        return Err(parse_err(maxval_at, format!("maxval {maxval} unsupported (8-bit only)")));
    }
    if width == 0 || height == 0 {
        return Err(parse_err(2, format!("degenerate dimensions {width}x{height}")));
    }
    let n = width
        .checked_mul(height)
        .ok_or_else(|| parse_err(2, "dimensions overflow"))?;

    let data = match kind {
        PgmKind::Binary => {
            // Exactly one separator byte between maxval and the raster.
            match cur.bump() {
                Some(b) if b.is_ascii_whitespace() => {}
                Some(_) => return Err(parse_err(cur.pos - 1, "expected whitespace before raster")),
                None => return Err(parse_err(cur.pos, "truncated before raster")),
            }
            cur.take(n, "raster")?.to_vec()
        }
        PgmKind::Ascii => {
            let mut data = Vec::with_capacity(n);
            for _ in 0..n {
                let at = {
                    cur.skip_separators();
                    cur.pos
                };
                let v = cur.ascii_usize("sample")?;
                if v > maxval {
                    return Err(parse_err(at, format!("sample {v} exceeds maxval {maxval}")));
                }
                data.push(v as u8);
            }
            data
        }
    };
    let geometry = GridGeometry::new(width, height, DEFAULT_SPACING_MM)
        .map_err(|e| parse_err(2, e.to_string()))?;
    Ok((geometry, data))
}

/// Decode a PGM byte stream into a mask: nonzero samples are wall.
pub fn load_mask(bytes: &[u8], spacing_mm: Option<f64>) -> Result<BinaryMask> {
    let (mut geometry, data) = parse_pgm(bytes)?;
    geometry.spacing_mm = spacing_mm.unwrap_or(DEFAULT_SPACING_MM);
    if !(geometry.spacing_mm > 0.0) {
        return Err(Error::Config(format!("spacing must be positive, got {}", geometry.spacing_mm)));
    }
    let wall = data.iter().map(|&v| v > 0).collect();
    BinaryMask::new(geometry, wall)
}

pub fn read_mask_file(path: &Path, spacing_mm: Option<f64>) -> Result<BinaryMask> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    load_mask(&bytes, spacing_mm)
}

/// Encode a mask as binary PGM (wall = 255, background = 0).
pub fn mask_to_pgm(mask: &BinaryMask) -> Vec<u8> {
    let g = mask.geometry;
    let mut out = format!("P5\n{} {}\n255\n", g.width, g.height).into_bytes();
    out.extend(mask.pixels().iter().map(|&w| if w { 255u8 } else { 0 }));
    out
}

pub fn write_mask_file(path: &Path, mask: &BinaryMask) -> Result<()> {
    fs::write(path, mask_to_pgm(mask)).map_err(|e| Error::io(path, e))
}

const LABEL_INNER: u8 = 128;
const LABEL_OUTER: u8 = 255;

/// Decode manual boundary labels from PGM: 0 none, 128 inner, 255 outer.
pub fn load_boundary_labels(bytes: &[u8]) -> Result<BoundaryLabels> {
    let (geometry, data) = parse_pgm(bytes)?;
    let mut labels = Vec::with_capacity(data.len());
    for (i, &v) in data.iter().enumerate() {
        labels.push(match v {
            0 => BoundaryLabel::None,
            LABEL_INNER => BoundaryLabel::Inner,
            LABEL_OUTER => BoundaryLabel::Outer,
            other => {
                return Err(Error::BoundarySpec(format!(
                    "label sample {other} at pixel {i} (expected 0, 128, or 255)"
                )))
            }
        });
    }
    BoundaryLabels::new(geometry, labels)
}

pub fn read_boundary_labels_file(path: &Path) -> Result<BoundaryLabels> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    load_boundary_labels(&bytes)
}

pub fn boundary_labels_to_pgm(labels: &BoundaryLabels) -> Vec<u8> {
    let g = labels.geometry;
    let mut out = format!("P5\n{} {}\n255\n", g.width, g.height).into_bytes();
    out.extend(labels.labels().iter().map(|l| match l {
        BoundaryLabel::None => 0u8,
        BoundaryLabel::Inner => LABEL_INNER,
        BoundaryLabel::Outer => LABEL_OUTER,
    }));
    out
}

pub fn write_boundary_labels_file(path: &Path, labels: &BoundaryLabels) -> Result<()> {
    fs::write(path, boundary_labels_to_pgm(labels)).map_err(|e| Error::io(path, e))
}

/// Encode a float grid as grayscale PFM (rows bottom-to-top, little-endian).
pub fn floats_to_pfm(geometry: GridGeometry, values: &[f64]) -> Vec<u8> {
    assert_eq!(values.len(), geometry.len());
    let mut out = format!("Pf\n{} {}\n-1.0\n", geometry.width, geometry.height).into_bytes();
    for y in (0..geometry.height).rev() {
        for x in 0..geometry.width {
            let v = values[geometry.index(x, y)] as f32;
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

/// Decode a grayscale PFM stream. The scale's sign picks the endianness;
/// its magnitude is ignored. Spacing comes from the caller.
pub fn load_pfm(bytes: &[u8], spacing_mm: Option<f64>) -> Result<(GridGeometry, Vec<f64>)> {
    let mut cur = ByteCursor::new(bytes);
    let magic = cur.take(2, "magic number")?;
    match magic {
        b"Pf" => {}
        b"PF" => return Err(parse_err(0, "color PFM (PF) unsupported, expected grayscale Pf")),
        _ => return Err(parse_err(0, "not a PFM stream (expected Pf)")),
    }
    let width = cur.ascii_usize("width")?;
    let height = cur.ascii_usize("height")?;
    let scale_at = {
        cur.skip_separators();
        cur.pos
    };
    let scale_tok = cur.token("scale")?;
    let scale: f64 = std::str::from_utf8(scale_tok)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| parse_err(scale_at, "scale is not a number"))?;
    if scale == 0.0 {
        return Err(parse_err(scale_at, "scale 0 is not allowed"));
    }
    if width == 0 || height == 0 {
        return Err(parse_err(2, format!("degenerate dimensions {width}x{height}")));
    }
    match cur.bump() {
        Some(b) if b.is_ascii_whitespace() => {}
        Some(_) => return Err(parse_err(cur.pos - 1, "expected whitespace before raster")),
        None => return Err(parse_err(cur.pos, "truncated before raster")),
    }
    let n = width
        .checked_mul(height)
        .ok_or_else(|| parse_err(2, "dimensions overflow"))?;
    let raster = cur.take(n * 4, "raster")?;
    let little_endian = scale < 0.0;
    let geometry = GridGeometry::new(width, height, spacing_mm.unwrap_or(DEFAULT_SPACING_MM))
        .map_err(|e| parse_err(2, e.to_string()))?;
    let mut values = vec![0.0f64; n];
    for row in 0..height {
        let y = height - 1 - row; // stored bottom-to-top
        for x in 0..width {
            let at = (row * width + x) * 4;
            let chunk: [u8; 4] = raster[at..at + 4].try_into().unwrap();
            let v = if little_endian {
                f32::from_le_bytes(chunk)
            } else {
                f32::from_be_bytes(chunk)
            };
            values[geometry.index(x, y)] = v as f64;
        }
    }
    Ok((geometry, values))
}

/// Read a PFM file as a thickness map. Assignment provenance is not stored
/// in the format; nonzero values are marked splatted.
pub fn read_thickness_file(path: &Path, spacing_mm: Option<f64>) -> Result<ThicknessMap> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let (geometry, values) = load_pfm(&bytes, spacing_mm)?;
    let assigned = values
        .iter()
        .map(|&v| if v != 0.0 { Assigned::Splatted } else { Assigned::Zero })
        .collect();
    ThicknessMap::new(geometry, values, assigned)
}

pub fn write_thickness_file(path: &Path, map: &ThicknessMap) -> Result<()> {
    fs::write(path, floats_to_pfm(map.geometry, map.values())).map_err(|e| Error::io(path, e))
}

/// Read `{"spacing_mm": …}` sitting next to an image file, if present.
pub fn sidecar_spacing(image_path: &Path) -> Result<Option<f64>> {
    let sidecar = image_path.with_extension("json");
    if !sidecar.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
    #[derive(serde::Deserialize)]
    struct Sidecar {
        spacing_mm: f64,
    }
    let parsed: Sidecar = serde_json::from_str(&text)
        .map_err(|e| Error::Parse { offset: e.column(), msg: format!("{}: {e}", sidecar.display()) })?;
    if !(parsed.spacing_mm > 0.0) {
        return Err(Error::Config(format!("sidecar spacing must be positive, got {}", parsed.spacing_mm)));
    }
    Ok(Some(parsed.spacing_mm))
}

pub fn write_sidecar_spacing(image_path: &Path, spacing_mm: f64) -> Result<()> {
    let sidecar = image_path.with_extension("json");
    let body = format!("{{\"spacing_mm\": {spacing_mm}}}\n");
    fs::write(&sidecar, body).map_err(|e| Error::io(&sidecar, e))
}
