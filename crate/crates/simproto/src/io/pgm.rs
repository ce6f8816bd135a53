//! PGM (portable graymap) reader and writer for label maps.
//!
//! Both the ASCII (`P2`) and binary (`P5`) variants are supported. Pixel
//! values are semantic labels; the maxval must cover the dataset's label
//! count and samples wider than one byte are big-endian, per the format.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::stats::LabelMap;

/// A decoded PGM image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pgm {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub samples: Vec<u16>,
}

enum Format {
    Ascii,
    Binary,
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Cursor { bytes, pos: 0 }
    }

    /// Next whitespace-delimited token, skipping `#` comments.
    fn token(&mut self) -> Option<&'a [u8]> {
        loop {
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            if self.pos < self.bytes.len() && self.bytes[self.pos] == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
                continue;
            }
            break;
        }
        if self.pos >= self.bytes.len() {
            return None;
        }
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        Some(&self.bytes[start..self.pos])
    }
}

fn parse_usize(token: &[u8], what: &str, path: &Path) -> Result<usize> {
    std::str::from_utf8(token)
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .ok_or_else(|| Error::ingestion(path, format!("invalid {what} field")))
}

/// Read a PGM file.
pub fn read(path: &Path) -> Result<Pgm> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut cur = Cursor::new(&bytes);
    let magic = cur
        .token()
        .ok_or_else(|| Error::ingestion(path, "missing magic number"))?;
    let format = match magic {
        b"P2" => Format::Ascii,
        b"P5" => Format::Binary,
        other => {
            return Err(Error::ingestion(
                path,
                format!("unsupported magic {:?}", String::from_utf8_lossy(other)),
            ))
        }
    };
    let width = parse_usize(
        cur.token()
            .ok_or_else(|| Error::ingestion(path, "missing width"))?,
        "width",
        path,
    )?;
    let height = parse_usize(
        cur.token()
            .ok_or_else(|| Error::ingestion(path, "missing height"))?,
        "height",
        path,
    )?;
    let maxval = parse_usize(
        cur.token()
            .ok_or_else(|| Error::ingestion(path, "missing maxval"))?,
        "maxval",
        path,
    )?;
    if width == 0 || height == 0 {
        return Err(Error::ingestion(path, "zero width or height"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::ingestion(
            path,
            format!("maxval {maxval} outside [1, 65535]"),
        ));
    }
    let count = width * height;
    let mut samples = Vec::with_capacity(count);
    match format {
        Format::Ascii => {
            for _ in 0..count {
                let t = cur
                    .token()
                    .ok_or_else(|| Error::ingestion(path, "truncated sample data"))?;
                let v = parse_usize(t, "sample", path)?;
                if v > maxval {
                    return Err(Error::ingestion(
                        path,
                        format!("sample {v} exceeds maxval {maxval}"),
                    ));
                }
                samples.push(v as u16);
            }
        }
        Format::Binary => {
            // Exactly one whitespace byte separates the maxval from the data.
            let data = &bytes[cur.pos + 1..];
            let wide = maxval > 255;
            let needed = count * if wide { 2 } else { 1 };
            if data.len() < needed {
                return Err(Error::ingestion(
                    path,
                    format!("expected {needed} data bytes, found {}", data.len()),
                ));
            }
            if wide {
                for chunk in data[..needed].chunks_exact(2) {
                    samples.push(u16::from_be_bytes([chunk[0], chunk[1]]));
                }
            } else {
                samples.extend(data[..needed].iter().map(|&b| u16::from(b)));
            }
            for &v in &samples {
                if usize::from(v) > maxval {
                    return Err(Error::ingestion(
                        path,
                        format!("sample {v} exceeds maxval {maxval}"),
                    ));
                }
            }
        }
    }
    Ok(Pgm {
        width,
        height,
        maxval: maxval as u16,
        samples,
    })
}

/// Read a PGM file as a label map for a dataset with `l` semantic labels.
///
/// The layout contract requires `maxval >= l`; pixel range is validated by
/// the statistics layer, but zero labels are rejected here with the file
/// named.
pub fn read_label_map(path: &Path, l: usize) -> Result<LabelMap> {
    let img = read(path)?;
    if usize::from(img.maxval) < l {
        return Err(Error::ingestion(
            path,
            format!(
                "maxval {} is below the declared label count {l}",
                img.maxval
            ),
        ));
    }
    LabelMap::new(img.width, img.height, img.samples)
        .map_err(|e| Error::ingestion(path, e.to_string()))
}

/// Write a binary (`P5`) PGM.
pub fn write_p5(
    path: &Path,
    width: usize,
    height: usize,
    maxval: u16,
    samples: &[u16],
) -> Result<()> {
    debug_assert_eq!(samples.len(), width * height);
    let mut out = Vec::with_capacity(32 + samples.len() * 2);
    write!(out, "P5\n{width} {height}\n{maxval}\n").expect("vec write");
    if maxval > 255 {
        for &v in samples {
            out.extend_from_slice(&v.to_be_bytes());
        }
    } else {
        out.extend(samples.iter().map(|&v| v as u8));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Write an ASCII (`P2`) PGM, one image row per text line.
pub fn write_p2(
    path: &Path,
    width: usize,
    height: usize,
    maxval: u16,
    samples: &[u16],
) -> Result<()> {
    debug_assert_eq!(samples.len(), width * height);
    let mut out = String::new();
    out.push_str(&format!("P2\n{width} {height}\n{maxval}\n"));
    for row in samples.chunks(width) {
        let line: Vec<String> = row.iter().map(u16::to_string).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Write a label map as a binary PGM whose maxval is the label count.
pub fn write_label_map(path: &Path, map: &LabelMap, l: usize) -> Result<()> {
    let maxval = u16::try_from(l.max(map.labels().iter().copied().max().map_or(1, usize::from)))
        .map_err(|_| Error::InvalidConfig {
            reason: format!("label count {l} exceeds the 16-bit PGM maxval limit"),
        })?;
    write_p5(path, map.width(), map.height(), maxval, map.labels())
}
