//! Binary PGM (P5) reading and writing, 8-bit only.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::patching::ImageBuffer;

pub fn load_pgm(path: impl AsRef<Path>) -> Result<ImageBuffer> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&bytes)
}

pub fn save_pgm(path: impl AsRef<Path>, img: &ImageBuffer) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pgm(img)).map_err(|e| Error::io(path, e))
}

pub fn encode_pgm(img: &ImageBuffer) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.data());
    out
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn field(&mut self, name: &str) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::format(format!(
                "malformed PGM header: missing {name}"
            )));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::format(format!("malformed PGM header: bad {name}")))
    }
}

pub fn decode_pgm(bytes: &[u8]) -> Result<ImageBuffer> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(Error::format("unsupported magic (expected binary PGM P5)"));
    }
    let mut header = Header { bytes, pos: 2 };
    if header.pos < bytes.len()
        && !bytes[header.pos].is_ascii_whitespace()
        && bytes[header.pos] != b'#'
    {
        return Err(Error::format("unsupported magic (expected binary PGM P5)"));
    }
    let width = header.field("width")?;
    let height = header.field("height")?;
    let maxval = header.field("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::format(format!(
            "malformed PGM header: zero dimension {width}x{height}"
        )));
    }
    if maxval == 0 || maxval > 255 {
        return Err(Error::format(format!("unsupported maxval {maxval}")));
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(header.pos) {
        Some(c) if c.is_ascii_whitespace() => header.pos += 1,
        _ => {
            return Err(Error::format(
                "malformed PGM header: missing raster separator",
            ))
        }
    }
    let expected = width
        .checked_mul(height)
        .ok_or_else(|| Error::format("malformed PGM header: dimensions overflow"))?;
    let payload = &bytes[header.pos..];
    if payload.len() < expected {
        return Err(Error::format(format!(
            "truncated payload: {} of {expected} bytes",
            payload.len()
        )));
    }
    let data = payload[..expected].to_vec();
    if let Some(i) = data.iter().position(|&v| v as usize > maxval) {
        return Err(Error::format(format!(
            "pixel {i} value {} exceeds maxval {maxval}",
            data[i]
        )));
    }
    ImageBuffer::new(width, height, data)
}
