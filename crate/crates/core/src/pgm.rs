//! Portable graymap (PGM) reader and writer, ASCII `P2` and binary `P5`.
//!
//! Masks are stored as 0 (background) / 255 (foreground). On read, a sample
//! is foreground when it reaches 128 on the 0..=255 scale.

use std::path::Path;

use crate::error::{Error, Result};
use crate::mask::BinaryMask;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PgmFormat {
    Ascii,
    #[default]
    Binary,
}

/// Decoded graymap; samples lie in `0..=maxval`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: u32,
    pub height: u32,
    pub maxval: u16,
    pub data: Vec<u16>,
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Header<'a> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b if b.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::format("pgm", format!("expected {what} at byte {start}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::format("pgm", format!("{what} out of range")))
    }
}

pub fn decode(bytes: &[u8]) -> Result<GrayImage> {
    let binary = match bytes.get(..2) {
        Some(b"P5") => true,
        Some(b"P2") => false,
        _ => return Err(Error::format("pgm", "missing P2/P5 magic number")),
    };
    let mut h = Header { bytes, pos: 2 };
    let width = h.number("width")?;
    let height = h.number("height")?;
    let maxval = h.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::format("pgm", format!("zero dimension {width}x{height}")));
    }
    if maxval == 0 || maxval > u16::MAX as u32 {
        return Err(Error::format("pgm", format!("maxval {maxval} outside 1..=65535")));
    }
    let maxval = maxval as u16;
    let count = width as usize * height as usize;

    let data = if binary {
        // exactly one whitespace byte separates the header from the raster
        match bytes.get(h.pos) {
            Some(b) if b.is_ascii_whitespace() => h.pos += 1,
            _ => return Err(Error::format("pgm", "missing whitespace before raster")),
        }
        let raster = &bytes[h.pos..];
        let wide = maxval > 255;
        let need = if wide { count * 2 } else { count };
        if raster.len() < need {
            return Err(Error::format(
                "pgm",
                format!("raster truncated: need {need} bytes, have {}", raster.len()),
            ));
        }
        if wide {
            raster[..need].chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()
        } else {
            raster[..need].iter().map(|&b| b as u16).collect()
        }
    } else {
        let mut data = Vec::with_capacity(count);
        for i in 0..count {
            let v = h.number("sample").map_err(|_| {
                Error::format("pgm", format!("raster truncated after {i} of {count} samples"))
            })?;
            if v > maxval as u32 {
                return Err(Error::format("pgm", format!("sample {v} exceeds maxval {maxval}")));
            }
            data.push(v as u16);
        }
        data
    };
    if let Some(&v) = data.iter().find(|&&v| v > maxval) {
        return Err(Error::format("pgm", format!("sample {v} exceeds maxval {maxval}")));
    }
    Ok(GrayImage { width, height, maxval, data })
}

/// Canonical header `P5\n<w> <h>\n<maxval>\n` followed by the raster.
pub fn encode_p5(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n{}\n", img.width, img.height, img.maxval).into_bytes();
    if img.maxval > 255 {
        out.extend(img.data.iter().flat_map(|v| v.to_be_bytes()));
    } else {
        out.extend(img.data.iter().map(|&v| v as u8));
    }
    out
}

/// ASCII raster, each image row starting a new line, lines wrapped at 70 columns.
pub fn encode_p2(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P2\n{} {}\n{}\n", img.width, img.height, img.maxval);
    for row in img.data.chunks(img.width as usize) {
        let mut line_len = 0;
        for v in row {
            let s = v.to_string();
            if line_len > 0 && line_len + 1 + s.len() > 70 {
                out.push('\n');
                line_len = 0;
            } else if line_len > 0 {
                out.push(' ');
                line_len += 1;
            }
            out.push_str(&s);
            line_len += s.len();
        }
        out.push('\n');
    }
    out.into_bytes()
}

pub fn encode(img: &GrayImage, format: PgmFormat) -> Vec<u8> {
    match format {
        PgmFormat::Ascii => encode_p2(img),
        PgmFormat::Binary => encode_p5(img),
    }
}

/// Thresholds at half scale: foreground when `v * 255 >= 128 * maxval`.
pub fn gray_to_mask(img: &GrayImage) -> Result<BinaryMask> {
    let max = img.maxval as u32;
    let cells = img.data.iter().map(|&v| (v as u32 * 255 >= 128 * max) as u8).collect();
    BinaryMask::from_cells(img.width, img.height, cells)
}

pub fn mask_to_gray(mask: &BinaryMask) -> GrayImage {
    GrayImage {
        width: mask.width(),
        height: mask.height(),
        maxval: 255,
        data: mask.cells().iter().map(|&c| c as u16 * 255).collect(),
    }
}

pub fn decode_mask(bytes: &[u8]) -> Result<BinaryMask> {
    gray_to_mask(&decode(bytes)?)
}

pub fn encode_mask(mask: &BinaryMask, format: PgmFormat) -> Vec<u8> {
    encode(&mask_to_gray(mask), format)
}

pub fn read_mask(path: impl AsRef<Path>) -> Result<BinaryMask> {
    decode_mask(&std::fs::read(path)?)
}

pub fn write_mask(path: impl AsRef<Path>, mask: &BinaryMask, format: PgmFormat) -> Result<()> {
    std::fs::write(path, encode_mask(mask, format))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ascii_with_comments_and_threshold() {
        let text = b"P2\n# made by hand\n3 2\n# maxval next\n255\n0 127 128\n255 10\n200\n";
        let mask = decode_mask(text).unwrap();
        assert_eq!(mask.cells(), &[0, 0, 1, 1, 0, 1]);
    }

    #[test]
    fn threshold_scales_with_maxval() {
        let img = decode(b"P2 2 1 15 7 8").unwrap();
        assert_eq!(gray_to_mask(&img).unwrap().cells(), &[0, 1]);
    }

    #[test]
    fn binary_mask_is_bit_exact() {
        let mask = BinaryMask::from_cells(3, 2, vec![1, 0, 1, 0, 0, 1]).unwrap();
        let bytes = encode_mask(&mask, PgmFormat::Binary);
        assert_eq!(&bytes[..11], b"P5\n3 2\n255\n");
        assert_eq!(&bytes[11..], &[255, 0, 255, 0, 0, 255]);
        let back = decode_mask(&bytes).unwrap();
        assert_eq!(back, mask);
        assert_eq!(encode_mask(&back, PgmFormat::Binary), bytes);
    }

    #[test]
    fn sixteen_bit_binary() {
        let img = GrayImage { width: 2, height: 1, maxval: 1000, data: vec![999, 3] };
        let bytes = encode_p5(&img);
        assert_eq!(decode(&bytes).unwrap(), img);
    }

    #[test]
    fn p2_wraps_long_rows() {
        let img = GrayImage { width: 40, height: 1, maxval: 255, data: vec![255; 40] };
        let text = String::from_utf8(encode_p2(&img)).unwrap();
        assert!(text.lines().all(|l| l.len() <= 70));
        assert_eq!(decode(text.as_bytes()).unwrap(), img);
    }

    #[test]
    fn rejects_malformed() {
        assert!(decode(b"P6 1 1 255 x").is_err());
        assert!(decode(b"P5 2 2 255\n\x00").is_err());
        assert!(decode(b"P2 2 1 255 0").is_err());
        assert!(decode(b"P2 1 1 10 11").is_err());
        assert!(decode(b"P2 0 1 255").is_err());
        assert!(decode(b"P5 1 1 255").is_err());
    }
}
