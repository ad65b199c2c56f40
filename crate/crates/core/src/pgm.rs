//! Binary 8-bit PGM (P5) frames and directories of numbered frames.

use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::frame::Frame;

pub fn write_pgm<W: Write>(frame: &Frame, mut w: W) -> std::io::Result<()> {
    write!(w, "P5\n{} {}\n255\n", frame.width(), frame.height())?;
    w.write_all(frame.values())
}

fn format_err(reason: impl Into<String>) -> Error {
    Error::Format {
        what: "PGM",
        reason: reason.into(),
    }
}

/// Reads the next whitespace-delimited header token, skipping `#` comments.
fn header_token(data: &[u8], pos: &mut usize) -> Result<u64> {
    loop {
        match data.get(*pos) {
            Some(b'#') => {
                while data.get(*pos).is_some_and(|&c| c != b'\n') {
                    *pos += 1;
                }
            }
            Some(c) if c.is_ascii_whitespace() => *pos += 1,
            Some(_) => break,
            None => return Err(format_err("truncated header")),
        }
    }
    let start = *pos;
    while data.get(*pos).is_some_and(|c| c.is_ascii_digit()) {
        *pos += 1;
    }
    std::str::from_utf8(&data[start..*pos])
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| format_err(format!("bad header field at byte {start}")))
}

pub fn read_pgm<R: Read>(mut r: R) -> Result<Frame> {
    let mut data = Vec::new();
    r.read_to_end(&mut data)
        .map_err(|e| format_err(format!("read failed: {e}")))?;
    if !data.starts_with(b"P5") {
        return Err(format_err("not a binary PGM (P5)"));
    }
    let mut pos = 2;
    let width = header_token(&data, &mut pos)? as usize;
    let height = header_token(&data, &mut pos)? as usize;
    let maxval = header_token(&data, &mut pos)?;
    if maxval != 255 {
        return Err(format_err(format!(
            "only 8-bit data supported, maxval {maxval}"
        )));
    }
    // Exactly one whitespace byte separates the header from the raster.
    if !data.get(pos).is_some_and(|c| c.is_ascii_whitespace()) {
        return Err(format_err("missing separator after header"));
    }
    pos += 1;
    let raster = &data[pos..];
    if raster.len() < width * height {
        return Err(format_err(format!(
            "expected {} raster bytes, found {}",
            width * height,
            raster.len()
        )));
    }
    Frame::new(width, height, raster[..width * height].to_vec())
}

pub fn write_pgm_file(path: &Path, frame: &Frame) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_pgm(frame, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn read_pgm_file(path: &Path) -> Result<Frame> {
    if !path.exists() {
        return Err(Error::MissingInput(path.to_path_buf()));
    }
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_pgm(BufReader::new(file))
}

pub fn frame_file_name(index: usize) -> String {
    format!("frame_{index:05}.pgm")
}

/// Trailing decimal digits of a file stem, e.g. `frame_00012` -> 12.
fn numeric_suffix(stem: &str) -> Option<u64> {
    let digits = stem.len() - stem.trim_end_matches(|c: char| c.is_ascii_digit()).len();
    stem[stem.len() - digits..].parse().ok()
}

/// `.pgm` files of `dir`, ordered by numeric suffix (then name).
pub fn list_sequence(dir: &Path) -> Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Err(Error::MissingInput(dir.to_path_buf()));
    }
    let mut files: Vec<(Option<u64>, PathBuf)> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm")))
        .map(|p| {
            let n = p
                .file_stem()
                .and_then(|s| s.to_str())
                .and_then(numeric_suffix);
            (n, p)
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::MissingInput(dir.join("*.pgm")));
    }
    Ok(files.into_iter().map(|(_, p)| p).collect())
}

/// Reads a frame sequence; all frames must share dimensions.
pub fn read_sequence(dir: &Path) -> Result<Vec<Frame>> {
    let frames = list_sequence(dir)?
        .iter()
        .map(|p| read_pgm_file(p))
        .collect::<Result<Vec<_>>>()?;
    if let Some(bad) = frames.iter().find(|f| f.dims() != frames[0].dims()) {
        return Err(Error::dims(frames[0].dims(), bad.dims()));
    }
    Ok(frames)
}

pub fn write_sequence(dir: &Path, frames: &[Frame]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    frames
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let path = dir.join(frame_file_name(i));
            write_pgm_file(&path, f)?;
            Ok(path)
        })
        .collect()
}
