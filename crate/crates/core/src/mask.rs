//! Non-regular sampling masks and sensor simulation.
//!
//! Every low-resolution pixel `(u, v)` covers the 2x2 high-resolution cell
//! `(2u..2u+2, 2v..2v+2)`; exactly one of its four quadrants is left open.

use std::io::{BufRead, Write};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::frame::Frame;

const MASK_MAGIC: &str = "NRSMASK";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplingMask {
    width: usize,
    height: usize,
    seed: u64,
    open: Vec<bool>,
}

impl SamplingMask {
    /// Draws one open quadrant per 2x2 cell, uniformly and independently.
    pub fn generate(width_lr: usize, height_lr: usize, seed: u64) -> Result<Self> {
        if width_lr == 0 || height_lr == 0 {
            return Err(Error::InvalidArgument(format!(
                "LR sensor dimensions must be non-zero, got {width_lr}x{height_lr}"
            )));
        }
        let (width, height) = (2 * width_lr, 2 * height_lr);
        let mut open = vec![false; width * height];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for u in 0..height_lr {
            for v in 0..width_lr {
                let q: u8 = rng.gen_range(0..4);
                let m = 2 * u + (q >> 1) as usize;
                let n = 2 * v + (q & 1) as usize;
                open[m * width + n] = true;
            }
        }
        Ok(Self {
            width,
            height,
            seed,
            open,
        })
    }

    /// Wraps an explicit open grid, checking the one-per-cell law.
    pub fn from_open(width: usize, height: usize, seed: u64, open: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 || !width.is_multiple_of(2) || !height.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "mask dimensions must be even and non-zero, got {width}x{height}"
            )));
        }
        if open.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "{} mask entries for a {width}x{height} grid",
                open.len()
            )));
        }
        let mask = Self {
            width,
            height,
            seed,
            open,
        };
        for u in 0..height / 2 {
            for v in 0..width / 2 {
                if mask.cell_open_count(u, v) != 1 {
                    return Err(Error::Format {
                        what: "sampling mask",
                        reason: format!("cell ({u}, {v}) does not have exactly one open quadrant"),
                    });
                }
            }
        }
        Ok(mask)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[inline]
    pub fn is_open(&self, m: usize, n: usize) -> bool {
        self.open[m * self.width + n]
    }

    /// Like [`is_open`](Self::is_open) but false outside the grid.
    #[inline]
    pub fn is_open_at(&self, m: isize, n: isize) -> bool {
        m >= 0
            && n >= 0
            && (m as usize) < self.height
            && (n as usize) < self.width
            && self.is_open(m as usize, n as usize)
    }

    pub fn open_grid(&self) -> &[bool] {
        &self.open
    }

    pub fn open_count(&self) -> usize {
        self.open.iter().filter(|&&o| o).count()
    }

    /// Open positions in row-major order.
    pub fn open_positions(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let w = self.width;
        self.open
            .iter()
            .enumerate()
            .filter(|(_, &o)| o)
            .map(move |(i, _)| (i / w, i % w))
    }

    pub fn cell_open_count(&self, u: usize, v: usize) -> usize {
        let (m, n) = (2 * u, 2 * v);
        [(m, n), (m, n + 1), (m + 1, n), (m + 1, n + 1)]
            .iter()
            .filter(|&&(a, b)| self.is_open(a, b))
            .count()
    }

    /// Writes the interchange format: a single header line
    /// `NRSMASK <width> <height> <seed>` followed by one byte (0 or 1) per
    /// HR position in row-major order.
    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "{MASK_MAGIC} {} {} {}",
            self.width, self.height, self.seed
        )?;
        let bytes: Vec<u8> = self.open.iter().map(|&o| o as u8).collect();
        w.write_all(&bytes)
    }

    pub fn read_from<R: BufRead>(mut r: R) -> Result<Self> {
        let bad = |reason: String| Error::Format {
            what: "mask file",
            reason,
        };
        let mut header = String::new();
        r.read_line(&mut header)
            .map_err(|e| bad(format!("cannot read header: {e}")))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 4 || fields[0] != MASK_MAGIC {
            return Err(bad(format!("bad header line {:?}", header.trim_end())));
        }
        let parse = |s: &str| {
            s.parse::<u64>()
                .map_err(|_| bad(format!("bad header field {s:?}")))
        };
        let width = parse(fields[1])? as usize;
        let height = parse(fields[2])? as usize;
        let seed = parse(fields[3])?;
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)
            .map_err(|e| bad(format!("cannot read body: {e}")))?;
        if bytes.len() != width * height {
            return Err(bad(format!(
                "expected {} mask bytes, found {}",
                width * height,
                bytes.len()
            )));
        }
        let open = bytes
            .iter()
            .map(|&b| match b {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(bad(format!("mask byte {other} is not 0 or 1"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_open(width, height, seed, open)
    }
}

/// HR frame where only some positions carry values.
///
/// `filled` starts out equal to the mask; multi-frame projection may add
/// further positions.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFrame {
    values: Vec<u8>,
    filled: Vec<bool>,
    mask: Arc<SamplingMask>,
}

impl SampledFrame {
    /// Rebuilds a sampled frame from stored values (e.g. a PGM where missing
    /// positions hold arbitrary bytes). Only mask positions are kept.
    pub fn from_values(values: Vec<u8>, mask: Arc<SamplingMask>) -> Result<Self> {
        if values.len() != mask.width() * mask.height() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} values", mask.width() * mask.height()),
                actual: format!("{} values", values.len()),
            });
        }
        let filled = mask.open_grid().to_vec();
        let values = values
            .into_iter()
            .zip(&filled)
            .map(|(v, &f)| if f { v } else { 0 })
            .collect();
        Ok(Self {
            values,
            filled,
            mask,
        })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.mask.width()
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.mask.height()
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        self.mask.dims()
    }

    pub fn mask(&self) -> &Arc<SamplingMask> {
        &self.mask
    }

    #[inline]
    pub fn is_filled(&self, m: usize, n: usize) -> bool {
        self.filled[m * self.width() + n]
    }

    /// Value at `(m, n)`, or `None` where nothing was captured.
    #[inline]
    pub fn get(&self, m: usize, n: usize) -> Option<u8> {
        let i = m * self.width() + n;
        self.filled[i].then_some(self.values[i])
    }

    /// Raw value storage; unfilled positions hold 0.
    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn filled_grid(&self) -> &[bool] {
        &self.filled
    }

    pub fn filled_count(&self) -> usize {
        self.filled.iter().filter(|&&f| f).count()
    }

    pub fn fill_fraction(&self) -> f64 {
        self.filled_count() as f64 / self.filled.len() as f64
    }

    /// Fills a currently missing position. Returns false (and leaves the
    /// frame unchanged) if the position already carries a value.
    pub fn fill(&mut self, m: usize, n: usize, v: u8) -> bool {
        let i = m * self.width() + n;
        if self.filled[i] {
            return false;
        }
        self.filled[i] = true;
        self.values[i] = v;
        true
    }
}

pub fn apply_mask(frame: &Frame, mask: &Arc<SamplingMask>) -> Result<SampledFrame> {
    if frame.dims() != mask.dims() {
        return Err(Error::dims(mask.dims(), frame.dims()));
    }
    SampledFrame::from_values(frame.values().to_vec(), Arc::clone(mask))
}

/// Captures every frame through the same mask.
pub fn simulate_sensor(video: &[Frame], mask: &Arc<SamplingMask>) -> Result<Vec<SampledFrame>> {
    if video.is_empty() {
        return Err(Error::InvalidArgument("empty video sequence".into()));
    }
    video.par_iter().map(|f| apply_mask(f, mask)).collect()
}
