use std::cmp::Reverse;

use super::area::{SampleStatus, SupportArea};
use super::model::ModelBuilder;
use super::FseParams;
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::mask::SampledFrame;

/// Gray level used for blocks whose support never contains a sample.
const FALLBACK_VALUE: u8 = 128;

/// One block of the frame tiling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BlockCoord {
    /// Block row/column in the tiling.
    pub row: usize,
    pub col: usize,
    /// Top-left pixel of the block.
    pub m0: usize,
    pub n0: usize,
    pub height: usize,
    pub width: usize,
}

/// Block starts along one axis. Lengths that are not a multiple of the
/// block size get a final block flush with the edge, overlapping its
/// predecessor.
fn block_starts(len: usize, block: usize) -> Vec<(usize, usize)> {
    if len <= block {
        return vec![(0, len)];
    }
    let mut starts: Vec<_> = (0..len / block).map(|i| (i * block, block)).collect();
    if !len.is_multiple_of(block) {
        starts.push((len - block, block));
    }
    starts
}

fn tiling(width: usize, height: usize, block: usize) -> Vec<BlockCoord> {
    let rows = block_starts(height, block);
    let cols = block_starts(width, block);
    let mut out = Vec::with_capacity(rows.len() * cols.len());
    for (row, &(m0, h)) in rows.iter().enumerate() {
        for (col, &(n0, w)) in cols.iter().enumerate() {
            out.push(BlockCoord {
                row,
                col,
                m0,
                n0,
                height: h,
                width: w,
            });
        }
    }
    out
}

/// Summed-area table over a boolean grid, `(w+1) x (h+1)`.
struct Integral {
    stride: usize,
    sums: Vec<u32>,
}

impl Integral {
    fn new(grid: &[bool], width: usize, height: usize) -> Self {
        let stride = width + 1;
        let mut sums = vec![0u32; stride * (height + 1)];
        for m in 0..height {
            let mut row = 0u32;
            for n in 0..width {
                row += grid[m * width + n] as u32;
                sums[(m + 1) * stride + n + 1] = sums[m * stride + n + 1] + row;
            }
        }
        Self { stride, sums }
    }

    /// Count over rows `m0..m1`, columns `n0..n1` (clamped by the caller).
    fn count(&self, m0: usize, m1: usize, n0: usize, n1: usize) -> u32 {
        let s = self.stride;
        self.sums[m1 * s + n1] + self.sums[m0 * s + n0]
            - self.sums[m0 * s + n1]
            - self.sums[m1 * s + n0]
    }
}

/// Clipped pixel range of the support area around a block along one axis.
fn area_span(start: usize, border: usize, size: usize, len: usize) -> (usize, usize) {
    let lo = start.saturating_sub(border);
    let hi = (start as isize - border as isize + size as isize).clamp(0, len as isize) as usize;
    (lo, hi)
}

/// Static visiting order: blocks whose support area holds the most
/// original samples first, ties in row-major block order.
pub fn processing_order(frame: &SampledFrame, params: &FseParams) -> Vec<BlockCoord> {
    let (width, height) = frame.dims();
    order_for(frame.filled_grid(), width, height, params)
}

fn order_for(filled: &[bool], width: usize, height: usize, params: &FseParams) -> Vec<BlockCoord> {
    let integral = Integral::new(filled, width, height);
    let mut blocks: Vec<(u32, BlockCoord)> = tiling(width, height, params.block_size)
        .into_iter()
        .map(|b| {
            let (m0, m1) = area_span(b.m0, params.border_width, params.dft_size, height);
            let (n0, n1) = area_span(b.n0, params.border_width, params.dft_size, width);
            (integral.count(m0, m1, n0, n1), b)
        })
        .collect();
    // `tiling` is row-major and the sort is stable.
    blocks.sort_by_key(|&(count, _)| Reverse(count));
    blocks.into_iter().map(|(_, b)| b).collect()
}

struct Canvas {
    width: usize,
    height: usize,
    values: Vec<u8>,
    status: Vec<SampleStatus>,
}

impl Canvas {
    fn block_has_missing(&self, b: &BlockCoord) -> bool {
        (b.m0..b.m0 + b.height).any(|m| {
            self.status[m * self.width + b.n0..m * self.width + b.n0 + b.width]
                .contains(&SampleStatus::Missing)
        })
    }

    fn support_area(&self, b: &BlockCoord, params: &FseParams) -> SupportArea {
        let size = params.dft_size;
        let top = b.m0 as isize - params.border_width as isize;
        let left = b.n0 as isize - params.border_width as isize;
        let mut values = vec![0.0; size * size];
        let mut status = vec![SampleStatus::Missing; size * size];
        for a in 0..size {
            let m = top + a as isize;
            if m < 0 || m as usize >= self.height {
                continue;
            }
            for c in 0..size {
                let n = left + c as isize;
                if n < 0 || n as usize >= self.width {
                    continue;
                }
                let i = m as usize * self.width + n as usize;
                values[a * size + c] = self.values[i] as f64;
                status[a * size + c] = self.status[i];
            }
        }
        SupportArea::new(size, values, status).expect("area buffers sized from params")
    }

    fn fill_block(&mut self, b: &BlockCoord, mut value_at: impl FnMut(usize, usize) -> u8) {
        for m in b.m0..b.m0 + b.height {
            for n in b.n0..b.n0 + b.width {
                let i = m * self.width + n;
                if self.status[i] == SampleStatus::Missing {
                    self.values[i] = value_at(m, n);
                    self.status[i] = SampleStatus::Reconstructed;
                }
            }
        }
    }

    /// Returns false if the support was empty and nothing was written.
    fn extrapolate(&mut self, b: &BlockCoord, builder: &mut ModelBuilder) -> Result<bool> {
        let params = *builder.params();
        let area = self.support_area(b, &params);
        let model = match builder.build(&area) {
            Ok(model) => model,
            Err(Error::EmptySupport) => return Ok(false),
            Err(e) => return Err(e),
        };
        let border = params.border_width;
        self.fill_block(b, |m, n| {
            quantize(model.evaluate(m + border - b.m0, n + border - b.n0))
        });
        Ok(true)
    }
}

fn quantize(v: f64) -> u8 {
    // f64::round is half-away-from-zero.
    v.round().clamp(0.0, 255.0) as u8
}

/// Fills every missing pixel of `frame` block by block. Filled positions
/// (sensor samples and projected samples) are never modified.
pub fn reconstruct_frame(frame: &SampledFrame, params: &FseParams) -> Result<Frame> {
    let (width, height) = frame.dims();
    let values = reconstruct_grid(frame.values(), frame.filled_grid(), width, height, params)?;
    Frame::new(width, height, values)
}

pub(crate) fn reconstruct_grid(
    values: &[u8],
    filled: &[bool],
    width: usize,
    height: usize,
    params: &FseParams,
) -> Result<Vec<u8>> {
    let mut builder = ModelBuilder::new(params)?;
    let mut canvas = Canvas {
        width,
        height,
        values: values.to_vec(),
        status: filled
            .iter()
            .map(|&f| {
                if f {
                    SampleStatus::Original
                } else {
                    SampleStatus::Missing
                }
            })
            .collect(),
    };

    let mut deferred = Vec::new();
    for b in order_for(filled, width, height, params) {
        if !canvas.block_has_missing(&b) {
            continue;
        }
        if !canvas.extrapolate(&b, &mut builder)? {
            deferred.push(b);
        }
    }
    // Second chance: neighbours may have been reconstructed meanwhile.
    for b in deferred {
        if !canvas.extrapolate(&b, &mut builder)? {
            canvas.fill_block(&b, |_, _| FALLBACK_VALUE);
        }
    }
    Ok(canvas.values)
}
