//! Frame image files: binary PGM (P5) and 8-bit grayscale PNG.

use std::fs;
use std::io::BufWriter;
use std::path::Path;

use crate::corpus::roi::RoiFrame;
use crate::error::{Error, Result};

pub fn read_frame(path: &Path) -> Result<RoiFrame> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(b"P5") {
        read_pgm(path, &bytes)
    } else if bytes.starts_with(&[0x89, b'P', b'N', b'G']) {
        read_png(path, &bytes)
    } else {
        Err(Error::BadFrameImage {
            path: path.into(),
            reason: "unsupported format (expected P5 PGM or PNG)".into(),
        })
    }
}

pub fn write_pgm(path: &Path, frame: &RoiFrame) -> Result<()> {
    let grid = frame.grid();
    let mut out = format!("P5\n{} {}\n255\n", grid.width(), grid.height()).into_bytes();
    out.extend_from_slice(&frame.to_u8());
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn write_png(path: &Path, frame: &RoiFrame) -> Result<()> {
    let grid = frame.grid();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut encoder = png::Encoder::new(
        BufWriter::new(file),
        grid.width() as u32,
        grid.height() as u32,
    );
    encoder.set_color(png::ColorType::Grayscale);
    encoder.set_depth(png::BitDepth::Eight);
    let mut writer = encoder.write_header().map_err(|e| Error::BadFrameImage {
        path: path.into(),
        reason: e.to_string(),
    })?;
    writer
        .write_image_data(&frame.to_u8())
        .map_err(|e| Error::BadFrameImage {
            path: path.into(),
            reason: e.to_string(),
        })
}

fn read_pgm(path: &Path, bytes: &[u8]) -> Result<RoiFrame> {
    let bad = |reason: &str| Error::BadFrameImage {
        path: path.into(),
        reason: reason.into(),
    };
    let mut pos = 2usize; // past "P5"
    let mut fields = [0usize; 3]; // width, height, maxval
    for field in fields.iter_mut() {
        // skip whitespace and comment lines
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                break;
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .map_err(|_| bad("non-ascii header"))?
            .parse()
            .map_err(|_| bad("bad header number"))?;
    }
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(bad("only 8-bit PGM is supported"));
    }
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(bad("missing pixel data separator"));
    }
    pos += 1;
    let expected = width * height;
    let pixels = &bytes[pos..];
    if pixels.len() < expected {
        return Err(bad("truncated pixel data"));
    }
    RoiFrame::from_u8(height, width, &pixels[..expected]).map_err(|e| Error::BadFrameImage {
        path: path.into(),
        reason: e.to_string(),
    })
}

fn read_png(path: &Path, bytes: &[u8]) -> Result<RoiFrame> {
    let bad = |reason: String| Error::BadFrameImage {
        path: path.into(),
        reason,
    };
    let decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    let mut reader = decoder.read_info().map_err(|e| bad(e.to_string()))?;
    let buf_size = reader
        .output_buffer_size()
        .ok_or_else(|| bad("image dimensions overflow".into()))?;
    let mut buf = vec![0u8; buf_size];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| bad(e.to_string()))?;
    if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Eight {
        return Err(bad("only 8-bit grayscale PNG is supported".into()));
    }
    buf.truncate(info.buffer_size());
    RoiFrame::from_u8(info.height as usize, info.width as usize, &buf)
        .map_err(|e| bad(e.to_string()))
}
