//! Deterministic synthetic test sequences.
//!
//! A seeded continuous texture (band-limited cosine noise plus a few
//! hard-edged shapes) is sampled on the pixel grid under a per-frame
//! translation, zoom or rotation about the frame center.

use std::f64::consts::PI;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::frame::Frame;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MotionKind {
    /// Whole-pixel shift per frame, `(dm, dn)`.
    Translate {
        dm: i64,
        dn: i64,
    },
    /// Scale factor `1 + rate` per frame.
    Zoom {
        rate: f64,
    },
    /// Degrees per frame, counter-clockwise.
    Rotate {
        degrees: f64,
    },
    Static,
}

impl MotionKind {
    pub fn name(&self) -> &'static str {
        match self {
            MotionKind::Translate { .. } => "translate",
            MotionKind::Zoom { .. } => "zoom",
            MotionKind::Rotate { .. } => "rotate",
            MotionKind::Static => "static",
        }
    }

    /// Rate in the textual form accepted by [`MotionKind::parse`].
    pub fn rate_string(&self) -> String {
        match *self {
            MotionKind::Translate { dm, dn } => format!("{dm},{dn}"),
            MotionKind::Zoom { rate } => format!("{rate}"),
            MotionKind::Rotate { degrees } => format!("{degrees}"),
            MotionKind::Static => "0".into(),
        }
    }

    /// `kind` is one of `translate`, `zoom`, `rotate`, `static`; `rate` is
    /// `dm,dn` for translations and a single number otherwise.
    pub fn parse(kind: &str, rate: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("bad rate {rate:?} for motion kind {kind:?}"));
        let num = |s: &str| {
            f64::from_str(s.trim())
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(bad)
        };
        match kind {
            "translate" => {
                let (a, b) = rate.split_once(',').ok_or_else(bad)?;
                let dm = i64::from_str(a.trim()).map_err(|_| bad())?;
                let dn = i64::from_str(b.trim()).map_err(|_| bad())?;
                Ok(MotionKind::Translate { dm, dn })
            }
            "zoom" => {
                let rate = num(rate)?;
                if rate <= -1.0 {
                    return Err(bad());
                }
                Ok(MotionKind::Zoom { rate })
            }
            "rotate" => Ok(MotionKind::Rotate {
                degrees: num(rate)?,
            }),
            "static" => Ok(MotionKind::Static),
            other => Err(Error::InvalidArgument(format!(
                "unknown motion kind {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthSpec {
    pub kind: MotionKind,
    pub frames: usize,
    pub width: usize,
    pub height: usize,
    pub seed: u64,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.frames == 0 || self.width == 0 || self.height == 0 {
            return Err(Error::InvalidArgument(format!(
                "synthetic sequence needs frames, width and height >= 1 (got {}, {}, {})",
                self.frames, self.width, self.height
            )));
        }
        Ok(())
    }
}

struct Wave {
    fm: f64,
    fn_: f64,
    amp: f64,
    phase: f64,
}

enum Shape {
    Disc {
        cm: f64,
        cn: f64,
        r2: f64,
        level: f64,
    },
    Rect {
        m0: f64,
        m1: f64,
        n0: f64,
        n1: f64,
        level: f64,
    },
}

const NOISE_STD: f64 = 30.0;

/// Continuous luminance field.
pub struct Texture {
    waves: Vec<Wave>,
    shapes: Vec<Shape>,
}

impl Texture {
    /// Texture for a `width x height` canvas; features extend well beyond
    /// it so moving content keeps entering the frame.
    pub fn new(seed: u64, width: usize, height: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut waves: Vec<Wave> = (0..48)
            .map(|_| {
                let f: f64 = rng.gen_range(0.01..0.25);
                let theta: f64 = rng.gen_range(0.0..PI);
                Wave {
                    fm: f * theta.cos(),
                    fn_: f * theta.sin(),
                    amp: 1.0 / f,
                    phase: rng.gen_range(0.0..2.0 * PI),
                }
            })
            .collect();
        // Scale the noise to a standard deviation of NOISE_STD gray levels.
        let power: f64 = waves.iter().map(|w| w.amp * w.amp / 2.0).sum();
        let scale = NOISE_STD / power.sqrt();
        for w in &mut waves {
            w.amp *= scale;
        }
        let extent = 2.0 * width.max(height) as f64;
        let shapes = (0..(width * height / 400).clamp(8, 400))
            .map(|_| {
                let cm = rng.gen_range(-extent..extent);
                let cn = rng.gen_range(-extent..extent);
                let size = rng.gen_range(3.0..14.0);
                let level = rng.gen_range(-40.0..40.0);
                if rng.gen_bool(0.5) {
                    Shape::Disc {
                        cm,
                        cn,
                        r2: size * size,
                        level,
                    }
                } else {
                    let aspect = rng.gen_range(0.3..1.0);
                    Shape::Rect {
                        m0: cm - size,
                        m1: cm + size,
                        n0: cn - size * aspect,
                        n1: cn + size * aspect,
                        level,
                    }
                }
            })
            .collect();
        Self { waves, shapes }
    }

    pub fn sample(&self, m: f64, n: f64) -> f64 {
        let mut v = 128.0;
        for w in &self.waves {
            v += w.amp * (2.0 * PI * (w.fm * m + w.fn_ * n) + w.phase).cos();
        }
        for s in &self.shapes {
            match *s {
                Shape::Disc { cm, cn, r2, level } => {
                    if (m - cm).powi(2) + (n - cn).powi(2) <= r2 {
                        v += level;
                    }
                }
                Shape::Rect {
                    m0,
                    m1,
                    n0,
                    n1,
                    level,
                } => {
                    if m >= m0 && m < m1 && n >= n0 && n < n1 {
                        v += level;
                    }
                }
            }
        }
        v
    }
}

fn to_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Frame `k` of the sequence described by `spec`.
pub fn synth_frame(texture: &Texture, spec: &SynthSpec, k: usize) -> Result<Frame> {
    let (cm, cn) = (
        (spec.height as f64 - 1.0) / 2.0,
        (spec.width as f64 - 1.0) / 2.0,
    );
    let kf = k as f64;
    match spec.kind {
        MotionKind::Translate { dm, dn } => {
            let (sm, sn) = (k as i64 * dm, k as i64 * dn);
            Frame::from_fn(spec.width, spec.height, |m, n| {
                // Integer source coordinates keep shifted frames bit-exact.
                to_u8(texture.sample((m as i64 - sm) as f64, (n as i64 - sn) as f64))
            })
        }
        MotionKind::Static => Frame::from_fn(spec.width, spec.height, |m, n| {
            to_u8(texture.sample(m as f64, n as f64))
        }),
        MotionKind::Zoom { rate } => {
            let scale = (1.0 + rate).powf(kf);
            Frame::from_fn(spec.width, spec.height, |m, n| {
                to_u8(texture.sample(cm + (m as f64 - cm) / scale, cn + (n as f64 - cn) / scale))
            })
        }
        MotionKind::Rotate { degrees } => {
            let (s, c) = (-(degrees * kf).to_radians()).sin_cos();
            Frame::from_fn(spec.width, spec.height, |m, n| {
                let (y, x) = (m as f64 - cm, n as f64 - cn);
                to_u8(texture.sample(cm + c * y - s * x, cn + s * y + c * x))
            })
        }
    }
}

pub fn synthesize(spec: &SynthSpec) -> Result<Vec<Frame>> {
    spec.validate()?;
    let texture = Texture::new(spec.seed, spec.width, spec.height);
    (0..spec.frames)
        .into_par_iter()
        .map(|k| synth_frame(&texture, spec, k))
        .collect()
}
