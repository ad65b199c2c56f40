//! File-level commands: each reads PGM sequences from explicit paths,
//! writes its outputs into an output directory and records a manifest
//! (`manifest.txt`) describing how they were produced.
//!
//! Outputs do not depend on the thread count, so it is not recorded.

use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use log::info;
use rayon::prelude::*;

use crate::config::{Manifest, RunConfig};
use crate::error::{Error, Result};
use crate::eval::{format_db, gain_sweep, mean, psnr, PsnrResult, SweepResult};
use crate::frame::Frame;
use crate::fse::reconstruct_frame;
use crate::mask::{simulate_sensor, SampledFrame, SamplingMask};
use crate::motion::MV_CSV_HEADER;
use crate::multiframe::{MultiFrame, RunReport};
use crate::pgm::{read_sequence, write_sequence};
use crate::synth::{synthesize, SynthSpec};

pub const MANIFEST_FILE: &str = "manifest.txt";
pub const MASK_FILE: &str = "mask.txt";

/// Runs `f` on a dedicated pool of `threads` workers (0 = one per core).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| {
            Error::InvalidArgument(format!("cannot start {threads} worker threads: {e}"))
        })?;
    pool.install(f)
}

/// Parses support counts given as `3`, `1,2,4` or an inclusive range `1..8`.
pub fn parse_n_values(text: &str) -> Result<Vec<usize>> {
    let bad = || Error::InvalidArgument(format!("invalid support-frame list {text:?}"));
    let num = |s: &str| s.trim().parse::<usize>().map_err(|_| bad());
    let values = if let Some((a, b)) = text.split_once("..") {
        let (a, b) = (num(a)?, num(b.trim_start_matches('='))?);
        if a > b {
            return Err(bad());
        }
        (a..=b).collect()
    } else {
        text.split(',').map(num).collect::<Result<Vec<_>>>()?
    };
    if values.is_empty() {
        return Err(bad());
    }
    Ok(values)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_with(
    path: &Path,
    f: impl FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>,
) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn read_mask(path: &Path) -> Result<SamplingMask> {
    if !path.exists() {
        return Err(Error::MissingInput(path.to_path_buf()));
    }
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    SamplingMask::read_from(BufReader::new(file))
}

/// Sampled frames as written by [`simulate`], paired with their mask.
pub fn load_sampled(
    dir: &Path,
    mask_path: &Path,
) -> Result<(Arc<SamplingMask>, Vec<SampledFrame>)> {
    let mask = Arc::new(read_mask(mask_path)?);
    let sampled = read_sequence(dir)?
        .into_iter()
        .map(|f| {
            if f.dims() != mask.dims() {
                return Err(Error::dims(mask.dims(), f.dims()));
            }
            SampledFrame::from_values(f.into_values(), Arc::clone(&mask))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((mask, sampled))
}

fn sampled_to_frame(s: &SampledFrame) -> Result<Frame> {
    Frame::new(s.width(), s.height(), s.values().to_vec())
}

pub fn synthesize_to(spec: &SynthSpec, out: &Path) -> Result<Vec<PathBuf>> {
    let frames = synthesize(spec)?;
    let paths = write_sequence(out, &frames)?;
    let mut m = Manifest::new("synthesize");
    m.push("kind", spec.kind.name())
        .push("rate", spec.kind.rate_string())
        .push("frames", spec.frames)
        .push("width", spec.width)
        .push("height", spec.height)
        .push("seed", spec.seed);
    m.write_file(&out.join(MANIFEST_FILE))?;
    info!(
        "wrote {} synthetic frames to {}",
        frames.len(),
        out.display()
    );
    Ok(paths)
}

/// Samples every frame of `input` through one random mask.
///
/// Writes the sampled frames (unexposed pixels stored as 0) and the mask
/// to `out`, returning the mask path.
pub fn simulate(input: &Path, out: &Path, seed: u64) -> Result<PathBuf> {
    let frames = read_sequence(input)?;
    let (w, h) = frames[0].dims();
    if w % 2 != 0 || h % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "frame size {w}x{h} must be even in both directions"
        )));
    }
    let mask = Arc::new(SamplingMask::generate(w / 2, h / 2, seed)?);
    let sampled = simulate_sensor(&frames, &mask)?;
    let stored = sampled
        .iter()
        .map(sampled_to_frame)
        .collect::<Result<Vec<_>>>()?;
    create_dir(out)?;
    write_sequence(out, &stored)?;
    let mask_path = out.join(MASK_FILE);
    write_with(&mask_path, |w| mask.write_to(w))?;
    let mut m = Manifest::new("simulate");
    m.push("input", input.display()).push("seed", seed);
    m.write_file(&out.join(MANIFEST_FILE))?;
    info!(
        "sampled {} frames of {w}x{h} into {}",
        frames.len(),
        out.display()
    );
    Ok(mask_path)
}

pub fn reconstruct_sf(
    input: &Path,
    mask_path: &Path,
    out: &Path,
    cfg: &RunConfig,
) -> Result<Vec<Frame>> {
    cfg.validate()?;
    let (_, sampled) = load_sampled(input, mask_path)?;
    let frames = sampled
        .par_iter()
        .map(|s| reconstruct_frame(s, &cfg.fse))
        .collect::<Result<Vec<_>>>()?;
    write_sequence(out, &frames)?;
    let mut m = Manifest::new("reconstruct-sf");
    m.push("input", input.display())
        .push("mask", mask_path.display())
        .with_config(cfg);
    m.write_file(&out.join(MANIFEST_FILE))?;
    Ok(frames)
}

/// Multi-frame reconstruction with `cfg.n_support` support frames.
///
/// Writes frames, `report.csv` and, if `mv_dump` is given, the refined
/// motion vectors of every frame pair as CSV.
pub fn reconstruct_mf(
    input: &Path,
    mask_path: &Path,
    out: &Path,
    cfg: &RunConfig,
    mv_dump: Option<&Path>,
) -> Result<(Vec<Frame>, RunReport)> {
    cfg.validate()?;
    let (_, sampled) = load_sampled(input, mask_path)?;
    let mf = MultiFrame::new(&sampled, cfg.fse, cfg.motion)?;
    let (frames, report, motion) = mf.reconstruct_all_traced(cfg.n_support)?;
    write_sequence(out, &frames)?;
    write_with(&out.join("report.csv"), |w| report.write_csv(w))?;
    if let Some(path) = mv_dump {
        write_with(path, |w| {
            writeln!(w, "{MV_CSV_HEADER}")?;
            for (t, pairs) in motion.iter().enumerate() {
                for p in pairs {
                    p.refined
                        .write_csv_rows(&format!("{}->{t}", p.support), &mut *w)?;
                }
            }
            Ok(())
        })?;
    }
    let mut m = Manifest::new("reconstruct-mf");
    m.push("input", input.display())
        .push("mask", mask_path.display())
        .with_config(cfg);
    if let Some(path) = mv_dump {
        m.push("mv_dump", path.display());
    }
    m.write_file(&out.join(MANIFEST_FILE))?;
    Ok((frames, report))
}

/// Per-frame PSNR of `test` against `reference`, written to `psnr.csv`.
pub fn evaluate(
    reference: &Path,
    test: &Path,
    out: &Path,
    margin: usize,
) -> Result<Vec<PsnrResult>> {
    let refs = read_sequence(reference)?;
    let tests = read_sequence(test)?;
    if refs.len() != tests.len() {
        return Err(Error::InvalidArgument(format!(
            "{} reference frames but {} test frames",
            refs.len(),
            tests.len()
        )));
    }
    let results = refs
        .par_iter()
        .zip(&tests)
        .map(|(r, t)| psnr(r, t, margin))
        .collect::<Result<Vec<_>>>()?;
    create_dir(out)?;
    write_with(&out.join("psnr.csv"), |w| {
        writeln!(w, "t,psnr,mse")?;
        for (t, r) in results.iter().enumerate() {
            writeln!(w, "{t},{},{:.6}", format_db(r.value), r.mse)?;
        }
        Ok(())
    })?;
    let mut m = Manifest::new("evaluate");
    m.push("reference", reference.display())
        .push("test", test.display())
        .push("margin", margin);
    m.write_file(&out.join(MANIFEST_FILE))?;
    info!(
        "mean PSNR {} dB over {} frames",
        format_db(mean(results.iter().map(|r| r.value))),
        results.len()
    );
    Ok(results)
}

/// Gain of multi-frame over single-frame reconstruction for each support
/// count in `n_values`.
///
/// Writes `summary.csv`, `frames.csv` and `report_n<N>.csv`; with
/// `plot_data` also `gain_vs_n.dat` and `gain_per_frame_n<N>.dat`.
pub fn sweep(
    reference: &Path,
    input: &Path,
    mask_path: &Path,
    out: &Path,
    n_values: &[usize],
    cfg: &RunConfig,
    plot_data: bool,
) -> Result<SweepResult> {
    cfg.validate()?;
    let refs = read_sequence(reference)?;
    let (mask, sampled) = load_sampled(input, mask_path)?;
    if let Some(f) = refs.first().filter(|f| f.dims() != mask.dims()) {
        return Err(Error::dims(mask.dims(), f.dims()));
    }
    let result = gain_sweep(
        &refs,
        &sampled,
        &mask,
        n_values,
        &cfg.fse,
        &cfg.motion,
        cfg.margin,
    )?;
    create_dir(out)?;
    write_with(&out.join("summary.csv"), |w| {
        result.table.write_summary_csv(w)
    })?;
    write_with(&out.join("frames.csv"), |w| {
        result.table.write_frames_csv(w)
    })?;
    for (n, report) in &result.reports {
        write_with(&out.join(format!("report_n{n}.csv")), |w| {
            report.write_csv(w)
        })?;
    }
    if plot_data {
        write_with(&out.join("gain_vs_n.dat"), |w| {
            result.table.write_gain_vs_n(w)
        })?;
        for &n in n_values {
            write_with(&out.join(format!("gain_per_frame_n{n}.dat")), |w| {
                result.table.write_gain_per_frame(n, w)
            })?;
        }
    }
    let list: Vec<String> = n_values.iter().map(|n| n.to_string()).collect();
    let mut m = Manifest::new("sweep");
    m.push("reference", reference.display())
        .push("input", input.display())
        .push("mask", mask_path.display())
        .push("n_values", list.join(","))
        .push("plot_data", plot_data)
        .with_config(cfg);
    m.write_file(&out.join(MANIFEST_FILE))?;
    Ok(result)
}
