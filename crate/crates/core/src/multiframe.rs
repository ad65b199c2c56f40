//! Multi-frame reconstruction: an initial single-frame pass, motion
//! estimation against temporal neighbours, projection of their original
//! samples into the current frame and a final extrapolation of the
//! densified frame.

use std::io::Write;
use std::time::{Duration, Instant};

use log::warn;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::fse::{reconstruct_frame, FseParams};
use crate::mask::{SampledFrame, SamplingMask};
use crate::motion::{block_match, consistency_check, MotionParams, MotionVectorField};

/// Support frames for frame `current`, nearest first, previous before next.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportSchedule {
    pub current: usize,
    pub supports: Vec<usize>,
}

/// The first `n_support` entries of `t-1, t+1, t-2, t+2, ...`, minus those
/// outside `first..=last`. Frames near either end therefore use fewer
/// supports instead of reaching further out.
pub fn build_schedule(
    t: usize,
    n_support: usize,
    first: usize,
    last: usize,
) -> Result<SupportSchedule> {
    if first > last || t < first || t > last {
        return Err(Error::InvalidArgument(format!(
            "frame {t} outside sequence range [{first}, {last}]"
        )));
    }
    let supports = (0..n_support)
        .filter_map(|i| {
            let dist = i / 2 + 1;
            if i % 2 == 0 {
                t.checked_sub(dist).filter(|&s| s >= first)
            } else {
                Some(t + dist).filter(|&s| s <= last)
            }
        })
        .collect();
    Ok(SupportSchedule {
        current: t,
        supports,
    })
}

/// Origin of one projected pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Provenance {
    pub target: (usize, usize),
    pub source_frame: usize,
    pub source: (usize, usize),
    pub match_cost: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensifiedFrame {
    pub frame: SampledFrame,
    pub provenance: Vec<Provenance>,
}

/// One support frame's contribution to a projection.
#[derive(Debug, Clone, Copy)]
pub struct SupportInput<'a> {
    pub index: usize,
    pub sampled: &'a SampledFrame,
    /// Refined vectors from `sampled` into the current frame.
    pub field: &'a MotionVectorField,
}

/// Copies original samples of each support into missing positions of
/// `current`. Earlier supports take precedence; within a support, the
/// vector with the lower match cost wins, then the row-major earlier source.
pub fn project_samples(current: &SampledFrame, supports: &[SupportInput<'_>]) -> DensifiedFrame {
    let mut frame = current.clone();
    let mut provenance = Vec::new();
    let (w, h) = frame.dims();
    for s in supports {
        let mut order: Vec<_> = s.field.entries.iter().collect();
        order.sort_by_key(|e| (e.cost, e.source));
        for e in order {
            let (qm, qn) = e.target();
            if qm < 0 || qn < 0 || qm as usize >= h || qn as usize >= w {
                continue;
            }
            let Some(value) = s.sampled.get(e.source.0, e.source.1) else {
                // Vectors are anchored on original samples only.
                continue;
            };
            let target = (qm as usize, qn as usize);
            if frame.fill(target.0, target.1, value) {
                provenance.push(Provenance {
                    target,
                    source_frame: s.index,
                    source: e.source,
                    match_cost: e.cost,
                });
            }
        }
    }
    DensifiedFrame { frame, provenance }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameReport {
    pub t: usize,
    pub n_support_used: usize,
    pub mv_raw: usize,
    pub mv_kept: usize,
    pub pixels_projected: usize,
    pub fill_fraction: f64,
    pub motion_time: Duration,
    pub fse_time: Duration,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunReport {
    pub frames: Vec<FrameReport>,
    pub warnings: Vec<String>,
}

impl RunReport {
    /// Writes `t,n_support_used,mv_raw,mv_kept,pixels_projected,fill_fraction`.
    /// Timings are left out so reports stay reproducible.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "t,n_support_used,mv_raw,mv_kept,pixels_projected,fill_fraction"
        )?;
        for f in &self.frames {
            writeln!(
                w,
                "{},{},{},{},{},{:.6}",
                f.t, f.n_support_used, f.mv_raw, f.mv_kept, f.pixels_projected, f.fill_fraction
            )?;
        }
        Ok(())
    }
}

/// Motion data of one (support -> current) pair.
#[derive(Debug, Clone)]
pub struct PairMotion {
    pub support: usize,
    pub raw_count: usize,
    pub refined: MotionVectorField,
}

/// Holds the sampled sequence and its single-frame reconstruction, which
/// serves as the motion estimation input for every frame's schedule.
pub struct MultiFrame<'a> {
    sampled: &'a [SampledFrame],
    initial: Vec<Frame>,
    fse: FseParams,
    motion: MotionParams,
}

impl<'a> MultiFrame<'a> {
    pub fn new(sampled: &'a [SampledFrame], fse: FseParams, motion: MotionParams) -> Result<Self> {
        let initial = sampled
            .par_iter()
            .map(|s| reconstruct_frame(s, &fse))
            .collect::<Result<Vec<_>>>()?;
        Self::with_initial(sampled, initial, fse, motion)
    }

    /// Reuses an existing single-frame reconstruction.
    pub fn with_initial(
        sampled: &'a [SampledFrame],
        initial: Vec<Frame>,
        fse: FseParams,
        motion: MotionParams,
    ) -> Result<Self> {
        fse.validate()?;
        motion.validate()?;
        if sampled.is_empty() {
            return Err(Error::InvalidArgument("empty video sequence".into()));
        }
        if initial.len() != sampled.len() {
            return Err(Error::InvalidArgument(format!(
                "{} initial reconstructions for {} frames",
                initial.len(),
                sampled.len()
            )));
        }
        let dims = sampled[0].dims();
        for (s, f) in sampled.iter().zip(&initial) {
            if s.dims() != dims {
                return Err(Error::dims(dims, s.dims()));
            }
            if f.dims() != dims {
                return Err(Error::dims(dims, f.dims()));
            }
        }
        Ok(Self {
            sampled,
            initial,
            fse,
            motion,
        })
    }

    pub fn initial(&self) -> &[Frame] {
        &self.initial
    }

    pub fn into_initial(self) -> Vec<Frame> {
        self.initial
    }

    pub fn len(&self) -> usize {
        self.sampled.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sampled.is_empty()
    }

    pub fn schedule(&self, t: usize, n_support: usize) -> Result<SupportSchedule> {
        build_schedule(t, n_support, 0, self.sampled.len() - 1)
    }

    /// Motion from each scheduled support into frame `schedule.current`.
    pub fn pair_motion(&self, schedule: &SupportSchedule) -> Result<Vec<PairMotion>> {
        let t = schedule.current;
        let current_mask: &SamplingMask = self.sampled[t].mask();
        schedule
            .supports
            .iter()
            .map(|&s| {
                let support_mask: &SamplingMask = self.sampled[s].mask();
                let raw = block_match(
                    &self.initial[s],
                    &self.initial[t],
                    support_mask,
                    &self.motion,
                )?;
                let refined = consistency_check(&raw, support_mask, current_mask);
                Ok(PairMotion {
                    support: s,
                    raw_count: raw.len(),
                    refined,
                })
            })
            .collect()
    }

    /// Projects the given supports into frame `t` and extrapolates the result.
    pub fn reconstruct_with(&self, t: usize, pairs: &[PairMotion]) -> Result<(Frame, FrameReport)> {
        let inputs: Vec<SupportInput<'_>> = pairs
            .iter()
            .map(|p| SupportInput {
                index: p.support,
                sampled: &self.sampled[p.support],
                field: &p.refined,
            })
            .collect();
        let dense = project_samples(&self.sampled[t], &inputs);
        let started = Instant::now();
        // No projected pixel means the final pass would repeat the initial one.
        let frame = if dense.provenance.is_empty() {
            self.initial[t].clone()
        } else {
            reconstruct_frame(&dense.frame, &self.fse)?
        };
        let report = FrameReport {
            t,
            n_support_used: pairs.len(),
            mv_raw: pairs.iter().map(|p| p.raw_count).sum(),
            mv_kept: pairs.iter().map(|p| p.refined.len()).sum(),
            pixels_projected: dense.provenance.len(),
            fill_fraction: dense.frame.fill_fraction(),
            motion_time: Duration::ZERO,
            fse_time: started.elapsed(),
        };
        Ok((frame, report))
    }

    pub fn reconstruct_frame_mf(&self, t: usize, n_support: usize) -> Result<(Frame, FrameReport)> {
        self.reconstruct_frame_traced(t, n_support)
            .map(|(frame, report, _)| (frame, report))
    }

    /// Like [`MultiFrame::reconstruct_frame_mf`], also returning the refined motion.
    pub fn reconstruct_frame_traced(
        &self,
        t: usize,
        n_support: usize,
    ) -> Result<(Frame, FrameReport, Vec<PairMotion>)> {
        let schedule = self.schedule(t, n_support)?;
        let started = Instant::now();
        let pairs = self.pair_motion(&schedule)?;
        let motion_time = started.elapsed();
        let (frame, mut report) = self.reconstruct_with(t, &pairs)?;
        report.motion_time = motion_time;
        Ok((frame, report, pairs))
    }

    pub fn reconstruct_all(&self, n_support: usize) -> Result<(Vec<Frame>, RunReport)> {
        self.reconstruct_all_traced(n_support)
            .map(|(frames, report, _)| (frames, report))
    }

    /// Whole-sequence reconstruction plus the motion used for every frame.
    pub fn reconstruct_all_traced(
        &self,
        n_support: usize,
    ) -> Result<(Vec<Frame>, RunReport, Vec<Vec<PairMotion>>)> {
        let results = (0..self.len())
            .into_par_iter()
            .map(|t| self.reconstruct_frame_traced(t, n_support))
            .collect::<Result<Vec<_>>>()?;
        let mut report = RunReport::default();
        let mut motion = Vec::with_capacity(results.len());
        let frames = results
            .into_iter()
            .map(|(f, r, pairs)| {
                report.frames.push(r);
                motion.push(pairs);
                f
            })
            .collect();
        if self.len() == 1 && n_support > 0 {
            let msg = "single-frame input: no support frames available, result equals single-frame reconstruction";
            warn!("{msg}");
            report.warnings.push(msg.to_string());
        }
        Ok((frames, report, motion))
    }
}

/// Full multi-frame reconstruction with `n_support` support frames per frame.
pub fn reconstruct_video_mf(
    sampled: &[SampledFrame],
    mask: &SamplingMask,
    n_support: usize,
    fse: &FseParams,
    motion: &MotionParams,
) -> Result<(Vec<Frame>, RunReport)> {
    if let Some(s) = sampled.iter().find(|s| s.mask().as_ref() != mask) {
        return Err(Error::InvalidArgument(format!(
            "sampled frame of size {}x{} was not captured with the given mask",
            s.width(),
            s.height()
        )));
    }
    MultiFrame::new(sampled, *fse, *motion)?.reconstruct_all(n_support)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mask::{apply_mask, simulate_sensor};
    use crate::motion::MotionVector;
    use std::sync::Arc;

    #[test]
    fn schedule_examples() {
        assert_eq!(build_schedule(5, 2, 1, 100).unwrap().supports, vec![4, 6]);
        assert_eq!(build_schedule(1, 2, 1, 100).unwrap().supports, vec![2]);
        assert_eq!(build_schedule(100, 2, 1, 100).unwrap().supports, vec![99]);
        assert_eq!(
            build_schedule(50, 8, 1, 100).unwrap().supports,
            vec![49, 51, 48, 52, 47, 53, 46, 54]
        );
        assert_eq!(
            build_schedule(2, 4, 1, 100).unwrap().supports,
            vec![1, 3, 4]
        );
        assert_eq!(
            build_schedule(0, 3, 0, 0).unwrap().supports,
            Vec::<usize>::new()
        );
        assert_eq!(build_schedule(0, 3, 0, 2).unwrap().supports, vec![1]);
        assert!(build_schedule(0, 2, 1, 100).is_err());
        assert!(build_schedule(101, 2, 1, 100).is_err());
        assert!(build_schedule(3, 0, 1, 100).unwrap().supports.is_empty());
    }

    fn setup() -> (Arc<SamplingMask>, SampledFrame, SampledFrame, SampledFrame) {
        let mask = Arc::new(SamplingMask::generate(8, 8, 21).unwrap());
        let cur = apply_mask(&Frame::filled(16, 16, 10).unwrap(), &mask).unwrap();
        let a = apply_mask(&Frame::filled(16, 16, 50).unwrap(), &mask).unwrap();
        let b = apply_mask(&Frame::filled(16, 16, 90).unwrap(), &mask).unwrap();
        (mask, cur, a, b)
    }

    fn first_missing(mask: &SamplingMask) -> (usize, usize) {
        (0..mask.height())
            .flat_map(|m| (0..mask.width()).map(move |n| (m, n)))
            .find(|&(m, n)| !mask.is_open(m, n))
            .unwrap()
    }

    fn vector_to(source: (usize, usize), target: (usize, usize), cost: u64) -> MotionVector {
        MotionVector {
            source,
            displacement: (
                target.0 as isize - source.0 as isize,
                target.1 as isize - source.1 as isize,
            ),
            cost,
        }
    }

    #[test]
    fn empty_fields_leave_frame_unchanged() {
        let (_, cur, a, _) = setup();
        let field = MotionVectorField::default();
        let dense = project_samples(
            &cur,
            &[SupportInput {
                index: 1,
                sampled: &a,
                field: &field,
            }],
        );
        assert_eq!(dense.frame, cur);
        assert!(dense.provenance.is_empty());
    }

    #[test]
    fn single_entry_adds_one_pixel() {
        let (mask, cur, a, _) = setup();
        let target = first_missing(&mask);
        let src = mask.open_positions().nth(5).unwrap();
        let field = MotionVectorField {
            width: 16,
            height: 16,
            entries: vec![vector_to(src, target, 3)],
        };
        let dense = project_samples(
            &cur,
            &[SupportInput {
                index: 4,
                sampled: &a,
                field: &field,
            }],
        );
        assert_eq!(dense.frame.filled_count(), cur.filled_count() + 1);
        assert_eq!(dense.frame.get(target.0, target.1), Some(50));
        assert_eq!(
            dense.provenance,
            vec![Provenance {
                target,
                source_frame: 4,
                source: src,
                match_cost: 3
            }]
        );
    }

    #[test]
    fn earlier_support_wins() {
        let (mask, cur, a, b) = setup();
        let target = first_missing(&mask);
        let src = mask.open_positions().nth(2).unwrap();
        let fa = MotionVectorField {
            width: 16,
            height: 16,
            entries: vec![vector_to(src, target, 100)],
        };
        let fb = MotionVectorField {
            width: 16,
            height: 16,
            entries: vec![vector_to(src, target, 0)],
        };
        let dense = project_samples(
            &cur,
            &[
                SupportInput {
                    index: 1,
                    sampled: &a,
                    field: &fa,
                },
                SupportInput {
                    index: 2,
                    sampled: &b,
                    field: &fb,
                },
            ],
        );
        assert_eq!(dense.frame.get(target.0, target.1), Some(50));
        assert_eq!(dense.provenance.len(), 1);
    }

    #[test]
    fn within_support_lower_cost_wins() {
        let (mask, cur, _, _) = setup();
        let support = apply_mask(
            &Frame::from_fn(16, 16, |m, n| (m * 16 + n) as u8).unwrap(),
            &mask,
        )
        .unwrap();
        let target = first_missing(&mask);
        let mut open = mask.open_positions();
        let s1 = open.next().unwrap();
        let s2 = open.next().unwrap();
        let s3 = open.next().unwrap();
        let field = MotionVectorField {
            width: 16,
            height: 16,
            entries: vec![
                vector_to(s1, target, 9),
                vector_to(s2, target, 4),
                vector_to(s3, target, 4),
            ],
        };
        let dense = project_samples(
            &cur,
            &[SupportInput {
                index: 0,
                sampled: &support,
                field: &field,
            }],
        );
        assert_eq!(dense.provenance[0].source, s2);
        assert_eq!(dense.frame.get(target.0, target.1), support.get(s2.0, s2.1));
    }

    #[test]
    fn projections_never_overwrite_originals() {
        let (mask, cur, a, _) = setup();
        let src = mask.open_positions().next().unwrap();
        let target = mask.open_positions().nth(3).unwrap();
        let field = MotionVectorField {
            width: 16,
            height: 16,
            entries: vec![vector_to(src, target, 0)],
        };
        let dense = project_samples(
            &cur,
            &[SupportInput {
                index: 0,
                sampled: &a,
                field: &field,
            }],
        );
        assert_eq!(dense.frame, cur);
    }

    #[test]
    fn zero_support_and_static_scene_match_single_frame() {
        let mask = Arc::new(SamplingMask::generate(16, 16, 2).unwrap());
        let frame = Frame::from_fn(32, 32, |m, n| ((m * 9 + n * 5) % 200) as u8).unwrap();
        let video = vec![frame; 3];
        let sampled = simulate_sensor(&video, &mask).unwrap();
        let p = FseParams::default();
        let sf: Vec<_> = sampled
            .iter()
            .map(|s| reconstruct_frame(s, &p).unwrap())
            .collect();
        let (mf0, _) =
            reconstruct_video_mf(&sampled, &mask, 0, &p, &MotionParams::default()).unwrap();
        assert_eq!(mf0, sf);
        let (mf2, report) =
            reconstruct_video_mf(&sampled, &mask, 2, &p, &MotionParams::default()).unwrap();
        assert_eq!(mf2, sf);
        assert!(report
            .frames
            .iter()
            .all(|r| r.mv_kept == 0 && r.pixels_projected == 0));
        assert!(report.frames.iter().all(|r| r.fill_fraction == 0.25));
    }

    #[test]
    fn single_frame_degrades_with_warning() {
        let mask = Arc::new(SamplingMask::generate(8, 8, 2).unwrap());
        let sampled = simulate_sensor(&[Frame::filled(16, 16, 60).unwrap()], &mask).unwrap();
        let (out, report) = reconstruct_video_mf(
            &sampled,
            &mask,
            2,
            &FseParams::default(),
            &MotionParams::default(),
        )
        .unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(report.warnings.len(), 1);
        assert_eq!(report.frames[0].n_support_used, 0);
    }

    #[test]
    fn report_csv_shape() {
        let report = RunReport {
            frames: vec![FrameReport {
                t: 0,
                n_support_used: 1,
                mv_raw: 10,
                mv_kept: 4,
                pixels_projected: 3,
                fill_fraction: 0.3,
                motion_time: Duration::from_millis(5),
                fse_time: Duration::ZERO,
            }],
            warnings: vec![],
        };
        let mut out = Vec::new();
        report.write_csv(&mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "t,n_support_used,mv_raw,mv_kept,pixels_projected,fill_fraction\n0,1,10,4,3,0.300000\n"
        );
    }
}
