//! Integer motion estimation anchored at original samples, plus the
//! projection/back-projection consistency check that prunes vectors.
//!
//! Vectors point from a position `p` of the support frame to the position
//! `p + v` in the current frame showing the same content.

use std::io::Write;

use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::mask::SamplingMask;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MotionParams {
    /// Side of the square matching window; odd.
    pub window_size: usize,
    /// Maximum displacement per axis.
    pub search_range: usize,
}

impl Default for MotionParams {
    fn default() -> Self {
        Self {
            window_size: 9,
            search_range: 16,
        }
    }
}

impl MotionParams {
    pub fn validate(&self) -> Result<()> {
        if self.window_size < 3 || self.window_size.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "window_size must be odd and >= 3, got {}",
                self.window_size
            )));
        }
        if self.search_range == 0 {
            return Err(Error::InvalidArgument("search_range must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MotionVector {
    /// Anchor `(m, n)` in the support frame.
    pub source: (usize, usize),
    /// `(dm, dn)` into the current frame.
    pub displacement: (isize, isize),
    /// SAD of the best match.
    pub cost: u64,
}

impl MotionVector {
    pub fn target(&self) -> (isize, isize) {
        (
            self.source.0 as isize + self.displacement.0,
            self.source.1 as isize + self.displacement.1,
        )
    }
}

/// Sparse vector field, entries sorted row-major by source position.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MotionVectorField {
    pub width: usize,
    pub height: usize,
    pub entries: Vec<MotionVector>,
}

impl MotionVectorField {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// CSV rows `frame_pair,m,n,dm,dn,cost`; no header.
    pub fn write_csv_rows<W: Write>(&self, frame_pair: &str, mut w: W) -> std::io::Result<()> {
        for e in &self.entries {
            writeln!(
                w,
                "{frame_pair},{},{},{},{},{}",
                e.source.0, e.source.1, e.displacement.0, e.displacement.1, e.cost
            )?;
        }
        Ok(())
    }
}

pub const MV_CSV_HEADER: &str = "frame_pair,m,n,dm,dn,cost";

/// All displacements within the search range in tie-break order: smaller
/// magnitude first, then row-major.
fn search_order(range: usize) -> Vec<(isize, isize)> {
    let r = range as isize;
    let mut d: Vec<_> = (-r..=r)
        .flat_map(|dm| (-r..=r).map(move |dn| (dm, dn)))
        .collect();
    d.sort_by_key(|&(dm, dn)| (dm * dm + dn * dn, dm, dn));
    d
}

/// Exhaustive SAD block matching for every original sample of the support
/// frame whose window lies inside the frame.
///
/// For each displacement the absolute-difference image is summed once into
/// an integral image, so every anchor's window SAD is four lookups. Sums are
/// exact integers, so the result is the same as direct per-window search.
pub fn block_match(
    support_recon: &Frame,
    current_recon: &Frame,
    support_mask: &SamplingMask,
    params: &MotionParams,
) -> Result<MotionVectorField> {
    params.validate()?;
    if support_recon.dims() != current_recon.dims() {
        return Err(Error::dims(support_recon.dims(), current_recon.dims()));
    }
    if support_mask.dims() != support_recon.dims() {
        return Err(Error::dims(support_recon.dims(), support_mask.dims()));
    }
    let (w, h) = support_recon.dims();
    let half = params.window_size / 2;
    let mut field = MotionVectorField {
        width: w,
        height: h,
        entries: Vec::new(),
    };
    if w < params.window_size || h < params.window_size {
        return Ok(field);
    }

    let anchors: Vec<(usize, usize)> = support_mask
        .open_positions()
        .filter(|&(m, n)| m >= half && m + half < h && n >= half && n + half < w)
        .collect();
    let mut best: Vec<Option<(u64, (isize, isize))>> = vec![None; anchors.len()];

    let s = support_recon.values();
    let c = current_recon.values();
    let stride = w + 1;
    let mut integral = vec![0u64; stride * (h + 1)];
    let (hw, hh) = (half as isize, half as isize);

    for (dm, dn) in search_order(params.search_range) {
        // Anchor centers whose shifted window stays in frame.
        let m_lo = hh.max(hh - dm);
        let m_hi = (h as isize - 1 - hh).min(h as isize - 1 - hh - dm);
        let n_lo = hw.max(hw - dn);
        let n_hi = (w as isize - 1 - hw).min(w as isize - 1 - hw - dn);
        if m_lo > m_hi || n_lo > n_hi {
            continue;
        }
        // Pixels covered by those windows.
        let (pm0, pm1) = ((m_lo - hh) as usize, (m_hi + hh) as usize + 1);
        let (pn0, pn1) = ((n_lo - hw) as usize, (n_hi + hw) as usize + 1);
        for n in pn0..=pn1 {
            integral[pm0 * stride + n] = 0;
        }
        for m in pm0..pm1 {
            integral[(m + 1) * stride + pn0] = 0;
            let mut row = 0u64;
            let src = &s[m * w..(m + 1) * w];
            let cm = (m as isize + dm) as usize;
            let dst = &c[cm * w..(cm + 1) * w];
            for n in pn0..pn1 {
                let cn = (n as isize + dn) as usize;
                row += src[n].abs_diff(dst[cn]) as u64;
                integral[(m + 1) * stride + n + 1] = integral[m * stride + n + 1] + row;
            }
        }

        for (i, &(am, an)) in anchors.iter().enumerate() {
            let (am, an) = (am as isize, an as isize);
            if am < m_lo || am > m_hi || an < n_lo || an > n_hi {
                continue;
            }
            let (r0, r1) = ((am - hh) as usize, (am + hh) as usize + 1);
            let (c0, c1) = ((an - hw) as usize, (an + hw) as usize + 1);
            let sad = integral[r1 * stride + c1] + integral[r0 * stride + c0]
                - integral[r0 * stride + c1]
                - integral[r1 * stride + c0];
            match best[i] {
                Some((cost, _)) if cost <= sad => {}
                _ => best[i] = Some((sad, (dm, dn))),
            }
        }
    }

    field.entries = anchors
        .into_iter()
        .zip(best)
        .filter_map(|(source, b)| {
            b.map(|(cost, displacement)| MotionVector {
                source,
                displacement,
                cost,
            })
        })
        .collect();
    Ok(field)
}

fn lower_median(values: &mut [isize]) -> isize {
    values.sort_unstable();
    values[(values.len() - 1) / 2]
}

/// Keeps only vectors that (a) land between the current frame's original
/// samples and (b) agree with the component-wise median of all raw vectors
/// landing in the 3x3 neighbourhood of their landing position.
///
/// The neighbourhood census uses every input entry, including ones that
/// rule (a) removes. Kept entries are returned unchanged.
pub fn consistency_check(
    field: &MotionVectorField,
    support_mask: &SamplingMask,
    current_mask: &SamplingMask,
) -> MotionVectorField {
    debug_assert_eq!(support_mask.dims(), current_mask.dims());
    let (w, h) = (field.width, field.height);
    let mut landing: Vec<Vec<usize>> = vec![Vec::new(); w * h];
    for (i, e) in field.entries.iter().enumerate() {
        let (qm, qn) = e.target();
        if qm >= 0 && qn >= 0 && (qm as usize) < h && (qn as usize) < w {
            landing[qm as usize * w + qn as usize].push(i);
        }
    }

    let mut dms = Vec::with_capacity(16);
    let mut dns = Vec::with_capacity(16);
    let entries = field
        .entries
        .iter()
        .filter(|e| {
            let (qm, qn) = e.target();
            if current_mask.is_open_at(qm, qn) {
                return false;
            }
            dms.clear();
            dns.clear();
            for nm in qm - 1..=qm + 1 {
                for nn in qn - 1..=qn + 1 {
                    if nm < 0 || nn < 0 || nm as usize >= h || nn as usize >= w {
                        continue;
                    }
                    for &j in &landing[nm as usize * w + nn as usize] {
                        dms.push(field.entries[j].displacement.0);
                        dns.push(field.entries[j].displacement.1);
                    }
                }
            }
            if dms.is_empty() {
                // Landing outside the frame: nothing to back-project with.
                return false;
            }
            let median = (lower_median(&mut dms), lower_median(&mut dns));
            // Back-projection q - median returns to the source iff the
            // median equals the entry's own vector.
            median == e.displacement
        })
        .copied()
        .collect();

    MotionVectorField {
        width: w,
        height: h,
        entries,
    }
}

/// Block matching followed by the consistency check.
pub fn estimate_motion(
    current_recon: &Frame,
    support_recon: &Frame,
    support_mask: &SamplingMask,
    current_mask: &SamplingMask,
    params: &MotionParams,
) -> Result<MotionVectorField> {
    if current_mask.dims() != current_recon.dims() {
        return Err(Error::dims(current_recon.dims(), current_mask.dims()));
    }
    let raw = block_match(support_recon, current_recon, support_mask, params)?;
    Ok(consistency_check(&raw, support_mask, current_mask))
}
