//! PSNR with border exclusion and single- vs multi-frame gain sweeps.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::fse::FseParams;
use crate::mask::{SampledFrame, SamplingMask};
use crate::motion::MotionParams;
use crate::multiframe::{MultiFrame, RunReport};

const PEAK: f64 = 255.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsnrResult {
    /// dB; `f64::INFINITY` when the frames agree on the whole interior.
    pub value: f64,
    pub mse: f64,
    pub pixels_counted: usize,
    pub margin: usize,
}

/// PSNR over the interior left after dropping `margin` pixels on every side.
pub fn psnr(reference: &Frame, test: &Frame, margin: usize) -> Result<PsnrResult> {
    if reference.dims() != test.dims() {
        return Err(Error::dims(reference.dims(), test.dims()));
    }
    let (w, h) = reference.dims();
    if 2 * margin >= w.min(h) {
        return Err(Error::InvalidArgument(format!(
            "margin {margin} leaves no interior in a {w}x{h} frame"
        )));
    }
    let mut sse: u64 = 0;
    for m in margin..h - margin {
        let a = &reference.values()[m * w + margin..m * w + w - margin];
        let b = &test.values()[m * w + margin..m * w + w - margin];
        sse += a
            .iter()
            .zip(b)
            .map(|(&x, &y)| {
                let d = x as i64 - y as i64;
                (d * d) as u64
            })
            .sum::<u64>();
    }
    let pixels_counted = (w - 2 * margin) * (h - 2 * margin);
    let mse = sse as f64 / pixels_counted as f64;
    let value = if sse == 0 {
        f64::INFINITY
    } else {
        10.0 * (PEAK * PEAK / mse).log10()
    };
    Ok(PsnrResult {
        value,
        mse,
        pixels_counted,
        margin,
    })
}

/// CSV rendering of a dB value; infinity is written as `inf`.
pub fn format_db(v: f64) -> String {
    if v.is_infinite() && v > 0.0 {
        "inf".to_string()
    } else {
        format!("{v:.6}")
    }
}

pub fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = values
        .into_iter()
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Difference of two PSNR values; two perfect reconstructions gain nothing.
pub fn gain(sf: f64, mf: f64) -> f64 {
    if sf == mf {
        0.0
    } else {
        mf - sf
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameGain {
    pub n: usize,
    /// Zero-based frame index.
    pub t: usize,
    pub psnr_sf: f64,
    pub psnr_mf: f64,
    pub gain: f64,
    pub n_support_used: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub n: usize,
    pub mean_psnr_sf: f64,
    pub mean_psnr_mf: f64,
    pub mean_gain: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GainTable {
    pub summary: Vec<SweepSummary>,
    pub frames: Vec<FrameGain>,
}

impl GainTable {
    pub fn summary_for(&self, n: usize) -> Option<&SweepSummary> {
        self.summary.iter().find(|s| s.n == n)
    }

    pub fn frames_for(&self, n: usize) -> impl Iterator<Item = &FrameGain> {
        self.frames.iter().filter(move |f| f.n == n)
    }

    pub fn write_summary_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "n,mean_psnr_sf,mean_psnr_mf,mean_gain")?;
        for s in &self.summary {
            writeln!(
                w,
                "{},{},{},{}",
                s.n,
                format_db(s.mean_psnr_sf),
                format_db(s.mean_psnr_mf),
                format_db(s.mean_gain)
            )?;
        }
        Ok(())
    }

    pub fn write_frames_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "n,t,psnr_sf,psnr_mf,gain,n_support_used")?;
        for f in &self.frames {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                f.n,
                f.t,
                format_db(f.psnr_sf),
                format_db(f.psnr_mf),
                format_db(f.gain),
                f.n_support_used
            )?;
        }
        Ok(())
    }

    /// Two-column series: `n mean_gain` (gain over support-frame count).
    pub fn write_gain_vs_n<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for s in &self.summary {
            writeln!(w, "{} {}", s.n, format_db(s.mean_gain))?;
        }
        Ok(())
    }

    /// Two-column series for one `n`: `frame gain`, frames numbered from 1.
    pub fn write_gain_per_frame<W: Write>(&self, n: usize, mut w: W) -> std::io::Result<()> {
        for f in self.frames_for(n) {
            writeln!(w, "{} {}", f.t + 1, format_db(f.gain))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub table: GainTable,
    /// Run report per entry of `n_values`, in the same order.
    pub reports: Vec<(usize, RunReport)>,
}

/// Compares single-frame reconstruction against multi-frame reconstruction
/// for every support count in `n_values`.
///
/// The single-frame pass is computed once; it is both the baseline and the
/// motion estimation input. Motion for each frame is estimated once for the
/// largest `n` and reused for smaller ones.
pub fn gain_sweep(
    reference: &[Frame],
    sampled: &[SampledFrame],
    mask: &SamplingMask,
    n_values: &[usize],
    fse: &FseParams,
    motion: &MotionParams,
    margin: usize,
) -> Result<SweepResult> {
    if n_values.is_empty() {
        return Err(Error::InvalidArgument(
            "no support-frame counts to sweep".into(),
        ));
    }
    if reference.len() != sampled.len() {
        return Err(Error::InvalidArgument(format!(
            "{} reference frames for {} sampled frames",
            reference.len(),
            sampled.len()
        )));
    }
    if sampled.iter().any(|s| s.mask().as_ref() != mask) {
        return Err(Error::InvalidArgument(
            "sampled frames were not captured with the given mask".into(),
        ));
    }
    let mf = MultiFrame::new(sampled, *fse, *motion)?;
    let psnr_sf = reference
        .iter()
        .zip(mf.initial())
        .map(|(r, f)| psnr(r, f, margin).map(|p| p.value))
        .collect::<Result<Vec<_>>>()?;
    let max_n = n_values.iter().copied().max().unwrap_or(0);

    // per_frame[t][i] = (psnr_mf, report) for n_values[i]
    let per_frame = (0..mf.len())
        .into_par_iter()
        .map(|t| {
            let schedule = mf.schedule(t, max_n)?;
            let pairs = mf.pair_motion(&schedule)?;
            n_values
                .iter()
                .map(|&n| {
                    // Every smaller schedule is a subset of the largest one.
                    let subset: Vec<_> = mf
                        .schedule(t, n)?
                        .supports
                        .iter()
                        .filter_map(|s| pairs.iter().find(|p| p.support == *s).cloned())
                        .collect();
                    let (frame, report) = mf.reconstruct_with(t, &subset)?;
                    Ok((psnr(&reference[t], &frame, margin)?.value, report))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut table = GainTable::default();
    let mut reports = Vec::with_capacity(n_values.len());
    for (i, &n) in n_values.iter().enumerate() {
        let mut report = RunReport::default();
        for (t, results) in per_frame.iter().enumerate() {
            let (psnr_mf, ref r) = results[i];
            table.frames.push(FrameGain {
                n,
                t,
                psnr_sf: psnr_sf[t],
                psnr_mf,
                gain: gain(psnr_sf[t], psnr_mf),
                n_support_used: r.n_support_used,
            });
            report.frames.push(r.clone());
        }
        let rows: Vec<_> = table.frames_for(n).collect();
        table.summary.push(SweepSummary {
            n,
            mean_psnr_sf: mean(rows.iter().map(|f| f.psnr_sf)),
            mean_psnr_mf: mean(rows.iter().map(|f| f.psnr_mf)),
            mean_gain: mean(rows.iter().map(|f| f.gain)),
        });
        reports.push((n, report));
    }
    Ok(SweepResult { table, reports })
}
