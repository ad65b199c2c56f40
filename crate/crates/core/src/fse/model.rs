use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::area::{decay_table, weights_from_decay, SupportArea};
use super::FseParams;
use crate::error::{Error, Result};

/// Sparse Fourier model of one support area.
///
/// `coefficients` is a dense `size x size` grid indexed `[k * size + l]`;
/// only the entries listed in `selected` are non-zero. Every selected
/// frequency appears together with its conjugate partner, so the model
/// evaluates to a real signal.
#[derive(Debug, Clone)]
pub struct SparseModel {
    size: usize,
    coefficients: Vec<Complex64>,
    selected: Vec<(usize, usize)>,
    twiddles: Arc<[Complex64]>,
}

impl SparseModel {
    pub fn size(&self) -> usize {
        self.size
    }

    /// Frequencies in the order they first entered the model.
    pub fn selected(&self) -> &[(usize, usize)] {
        &self.selected
    }

    pub fn coefficient(&self, k: usize, l: usize) -> Complex64 {
        self.coefficients[k * self.size + l]
    }

    pub fn evaluate_complex(&self, m: usize, n: usize) -> Complex64 {
        let s = self.size;
        self.selected
            .iter()
            .map(|&(k, l)| self.coefficients[k * s + l] * self.twiddles[(k * m + l * n) % s])
            .sum()
    }

    /// Real part of the model at area position `(m, n)`.
    pub fn evaluate(&self, m: usize, n: usize) -> f64 {
        self.evaluate_complex(m, n).re
    }
}

/// Reusable FSE model generator; holds FFT plans and scratch buffers so
/// that consecutive blocks do not re-plan or re-allocate.
pub struct ModelBuilder {
    params: FseParams,
    size: usize,
    fft: Arc<dyn Fft<f64>>,
    decay: Vec<f64>,
    twiddles: Arc<[Complex64]>,
    /// Representatives of the conjugate classes, row-major.
    candidates: Vec<(usize, usize)>,
    weights: Vec<f64>,
    weight_spec: Vec<Complex64>,
    residual_spec: Vec<Complex64>,
    transpose: Vec<Complex64>,
}

impl ModelBuilder {
    pub fn new(params: &FseParams) -> Result<Self> {
        params.validate()?;
        let size = params.dft_size;
        let fft = FftPlanner::new().plan_fft_forward(size);
        let twiddles: Arc<[Complex64]> = (0..size)
            .map(|t| Complex64::from_polar(1.0, 2.0 * PI * t as f64 / size as f64))
            .collect();
        let mut candidates = Vec::with_capacity(size * size / 2 + 2);
        for k in 0..size {
            for l in 0..size {
                if (k, l) <= conjugate(size, k, l) {
                    candidates.push((k, l));
                }
            }
        }
        Ok(Self {
            params: *params,
            size,
            fft,
            decay: decay_table(size, params.decay_rho),
            twiddles,
            candidates,
            weights: vec![0.0; size * size],
            weight_spec: vec![Complex64::default(); size * size],
            residual_spec: vec![Complex64::default(); size * size],
            transpose: vec![Complex64::default(); size * size],
        })
    }

    pub fn params(&self) -> &FseParams {
        &self.params
    }

    pub fn build(&mut self, area: &SupportArea) -> Result<SparseModel> {
        self.run(area, None)
    }

    /// Like [`build`](Self::build), additionally returning the weighted
    /// residual energy `sum(w * r^2)` before the first and after every
    /// iteration.
    pub fn build_traced(&mut self, area: &SupportArea) -> Result<(SparseModel, Vec<f64>)> {
        let mut trace = Vec::with_capacity(self.params.iterations + 1);
        let model = self.run(area, Some(&mut trace))?;
        Ok((model, trace))
    }

    fn run(&mut self, area: &SupportArea, mut trace: Option<&mut Vec<f64>>) -> Result<SparseModel> {
        let size = self.size;
        if area.size() != size {
            return Err(Error::InvalidArgument(format!(
                "support area size {} differs from dft_size {size}",
                area.size()
            )));
        }
        weights_from_decay(
            area,
            &self.decay,
            self.params.recon_weight_delta,
            &mut self.weights,
        );
        let w0: f64 = self.weights.iter().sum();
        if w0 <= 0.0 {
            return Err(Error::EmptySupport);
        }

        for (dst, &w) in self.weight_spec.iter_mut().zip(&self.weights) {
            *dst = Complex64::new(w, 0.0);
        }
        self.fft2(Spectrum::Weights);
        // Missing positions carry weight zero, so their values never matter.
        for ((dst, &w), &v) in self
            .residual_spec
            .iter_mut()
            .zip(&self.weights)
            .zip(area.values())
        {
            *dst = Complex64::new(w * v, 0.0);
        }
        self.fft2(Spectrum::Residual);

        // Spatial residual is only tracked when tracing energies.
        let mut residual: Vec<f64> = match trace {
            Some(_) => area
                .values()
                .iter()
                .zip(&self.weights)
                .map(|(&v, &w)| if w > 0.0 { v } else { 0.0 })
                .collect(),
            None => Vec::new(),
        };
        if let Some(t) = trace.as_deref_mut() {
            t.push(weighted_energy(&self.weights, &residual));
        }

        let mut coefficients = vec![Complex64::default(); size * size];
        let mut selected = Vec::new();
        let mut in_model = vec![false; size * size];
        let gamma = self.params.odc_gamma;

        for _ in 0..self.params.iterations {
            let (k, l) = match self.select() {
                Some(kl) => kl,
                None => {
                    // Residual already orthogonal to every basis function.
                    if let Some(t) = trace.as_deref_mut() {
                        let e = *t.last().unwrap();
                        t.push(e);
                    }
                    continue;
                }
            };
            let (ck, cl) = conjugate(size, k, l);
            let self_conjugate = (ck, cl) == (k, l);
            let r = self.residual_spec[k * size + l];
            let delta = if self_conjugate {
                Complex64::new(gamma * r.re / w0, 0.0)
            } else {
                r * (gamma / w0)
            };

            self.subtract_basis(k, l, delta, self_conjugate);

            if !in_model[k * size + l] {
                in_model[k * size + l] = true;
                in_model[ck * size + cl] = true;
                selected.push((k, l));
                if !self_conjugate {
                    selected.push((ck, cl));
                }
            }
            coefficients[k * size + l] += delta;
            if !self_conjugate {
                coefficients[ck * size + cl] += delta.conj();
            }

            if let Some(t) = trace.as_deref_mut() {
                for m in 0..size {
                    for n in 0..size {
                        let phase = self.twiddles[(k * m + l * n) % size];
                        let term = if self_conjugate {
                            (delta * phase).re
                        } else {
                            2.0 * (delta * phase).re
                        };
                        residual[m * size + n] -= term;
                    }
                }
                t.push(weighted_energy(&self.weights, &residual));
            }
        }

        Ok(SparseModel {
            size,
            coefficients,
            selected,
            twiddles: Arc::clone(&self.twiddles),
        })
    }

    /// Candidate with the largest weighted projection energy; the first one
    /// in row-major order wins ties. `None` if every projection is zero.
    fn select(&self) -> Option<(usize, usize)> {
        let size = self.size;
        let mut best = None;
        let mut best_energy = 0.0;
        for &(k, l) in &self.candidates {
            let e = self.residual_spec[k * size + l].norm_sqr();
            if e > best_energy {
                best_energy = e;
                best = Some((k, l));
            }
        }
        best
    }

    /// Removes `delta * phi(k,l)` (plus its conjugate partner) from the
    /// weighted residual spectrum. Multiplying by `w` in space turns each
    /// basis function into a shifted copy of the weight spectrum.
    fn subtract_basis(&mut self, k: usize, l: usize, delta: Complex64, self_conjugate: bool) {
        let size = self.size;
        let ws = &self.weight_spec;
        let partner = delta.conj();
        for p in 0..size {
            let row_minus = ((p + size - k) % size) * size;
            let row_plus = ((p + k) % size) * size;
            let out = &mut self.residual_spec[p * size..(p + 1) * size];
            for (q, o) in out.iter_mut().enumerate() {
                let mut d = delta * ws[row_minus + (q + size - l) % size];
                if !self_conjugate {
                    d += partner * ws[row_plus + (q + l) % size];
                }
                *o -= d;
            }
        }
    }

    fn fft2(&mut self, which: Spectrum) {
        let size = self.size;
        let buf = match which {
            Spectrum::Weights => &mut self.weight_spec,
            Spectrum::Residual => &mut self.residual_spec,
        };
        self.fft.process(buf);
        transpose(buf, &mut self.transpose, size);
        self.fft.process(&mut self.transpose);
        transpose(&self.transpose, buf, size);
    }
}

#[derive(Clone, Copy)]
enum Spectrum {
    Weights,
    Residual,
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], size: usize) {
    for r in 0..size {
        for c in 0..size {
            dst[c * size + r] = src[r * size + c];
        }
    }
}

#[inline]
fn conjugate(size: usize, k: usize, l: usize) -> (usize, usize) {
    ((size - k) % size, (size - l) % size)
}

fn weighted_energy(w: &[f64], r: &[f64]) -> f64 {
    w.iter().zip(r).map(|(&w, &r)| w * r * r).sum()
}

/// One-shot convenience wrapper around [`ModelBuilder`].
pub fn generate_model(area: &SupportArea, params: &FseParams) -> Result<SparseModel> {
    ModelBuilder::new(params)?.build(area)
}

pub fn generate_model_traced(
    area: &SupportArea,
    params: &FseParams,
) -> Result<(SparseModel, Vec<f64>)> {
    ModelBuilder::new(params)?.build_traced(area)
}

#[cfg(test)]
mod tests {
    use super::super::SampleStatus;
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const M: usize = 32;

    fn quarter_sampled(seed: u64, f: impl Fn(usize, usize) -> f64) -> (SupportArea, Vec<bool>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut open = vec![false; M * M];
        for u in 0..M / 2 {
            for v in 0..M / 2 {
                let q = rng.gen_range(0..4usize);
                open[(2 * u + q / 2) * M + 2 * v + q % 2] = true;
            }
        }
        let mut values = Vec::new();
        let mut status = Vec::new();
        for m in 0..M {
            for n in 0..M {
                let o = open[m * M + n];
                values.push(if o { f(m, n) } else { 0.0 });
                status.push(if o {
                    SampleStatus::Original
                } else {
                    SampleStatus::Missing
                });
            }
        }
        (SupportArea::new(M, values, status).unwrap(), open)
    }

    /// Straightforward per-iteration formulation: recompute the DFT of
    /// `w * r` by direct summation, update the residual in space.
    fn reference_model(area: &SupportArea, p: &FseParams) -> Vec<Complex64> {
        let w = super::super::compute_weights(area, p).unwrap();
        let w0: f64 = w.iter().sum();
        let mut r: Vec<f64> = area
            .values()
            .iter()
            .zip(&w)
            .map(|(&v, &w)| if w > 0.0 { v } else { 0.0 })
            .collect();
        let mut coeffs = vec![Complex64::default(); M * M];
        let phase = |t: usize| Complex64::from_polar(1.0, 2.0 * PI * (t % M) as f64 / M as f64);
        for _ in 0..p.iterations {
            let mut best = (0.0, 0, 0, Complex64::default());
            for k in 0..M {
                for l in 0..M {
                    if (k, l) > conjugate(M, k, l) {
                        continue;
                    }
                    let mut acc = Complex64::default();
                    for m in 0..M {
                        for n in 0..M {
                            acc += w[m * M + n] * r[m * M + n] * phase(k * m + l * n).conj();
                        }
                    }
                    if acc.norm_sqr() > best.0 {
                        best = (acc.norm_sqr(), k, l, acc);
                    }
                }
            }
            let (_, k, l, rw) = best;
            let sc = conjugate(M, k, l) == (k, l);
            let d = if sc {
                Complex64::new(p.odc_gamma * rw.re / w0, 0.0)
            } else {
                rw * (p.odc_gamma / w0)
            };
            coeffs[k * M + l] += d;
            let (ck, cl) = conjugate(M, k, l);
            if !sc {
                coeffs[ck * M + cl] += d.conj();
            }
            for m in 0..M {
                for n in 0..M {
                    let t = (d * phase(k * m + l * n)).re;
                    r[m * M + n] -= if sc { t } else { 2.0 * t };
                }
            }
        }
        coeffs
    }

    #[test]
    fn single_tone_is_recovered() {
        let tone = |m: usize, n: usize| 2.0 * (2.0 * PI * (3 * m + 5 * n) as f64 / M as f64).cos();
        let (area, open) = quarter_sampled(1, tone);
        let p = FseParams::default();
        let model = generate_model(&area, &p).unwrap();
        let c = model.coefficient(3, 5);
        assert!((c - Complex64::new(1.0, 0.0)).norm() < 1e-3, "{c}");
        assert!((model.coefficient(29, 27) - c.conj()).norm() < 1e-12);
        for m in 0..M {
            for n in 0..M {
                if !open[m * M + n] {
                    let err = (model.evaluate(m, n) - tone(m, n)).abs();
                    assert!(err < 1e-3, "({m},{n}) err {err}");
                }
            }
        }
    }

    #[test]
    fn constant_area_is_dc_only() {
        let (area, _) = quarter_sampled(2, |_, _| 173.0);
        let model = generate_model(&area, &FseParams::default()).unwrap();
        assert_eq!(model.selected()[0], (0, 0));
        for m in 0..M {
            for n in 0..M {
                assert!((model.evaluate(m, n) - 173.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn zero_residual_stops_changing() {
        let (area, _) = quarter_sampled(3, |_, _| 0.0);
        let (model, trace) = generate_model_traced(&area, &FseParams::default()).unwrap();
        assert!(model.selected().is_empty());
        assert!(trace.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn empty_support_is_reported() {
        let area =
            SupportArea::new(M, vec![1.0; M * M], vec![SampleStatus::Missing; M * M]).unwrap();
        assert!(matches!(
            generate_model(&area, &FseParams::default()),
            Err(Error::EmptySupport)
        ));
    }

    #[test]
    fn model_is_real_and_conjugate_paired() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let noise: Vec<f64> = (0..M * M).map(|_| rng.gen_range(0.0..255.0)).collect();
        let (area, _) = quarter_sampled(4, |m, n| noise[m * M + n]);
        let model = generate_model(&area, &FseParams::default()).unwrap();
        assert!(model.selected().len() <= 200);
        for &(k, l) in model.selected() {
            let (ck, cl) = conjugate(M, k, l);
            assert!(model.selected().contains(&(ck, cl)));
        }
        let energy: f64 = (0..M * M)
            .map(|i| model.evaluate(i / M, i % M).powi(2))
            .sum::<f64>()
            .sqrt();
        for m in 0..M {
            for n in 0..M {
                assert!(model.evaluate_complex(m, n).im.abs() < 1e-9 * energy.max(1.0));
            }
        }
    }

    #[test]
    fn spectral_update_matches_direct_formulation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let noise: Vec<f64> = (0..M * M).map(|_| rng.gen_range(0.0..255.0)).collect();
        let (area, _) = quarter_sampled(5, |m, n| noise[m * M + n]);
        let p = FseParams {
            iterations: 12,
            ..FseParams::default()
        };
        let fast = generate_model(&area, &p).unwrap();
        let slow = reference_model(&area, &p);
        for k in 0..M {
            for l in 0..M {
                let d = (fast.coefficient(k, l) - slow[k * M + l]).norm();
                assert!(d < 1e-9, "({k},{l}) differs by {d}");
            }
        }
    }

    #[test]
    fn deterministic() {
        let (area, _) = quarter_sampled(6, |m, n| ((m * 7 + n * 3) % 17) as f64 * 9.0);
        let p = FseParams::default();
        let a = generate_model(&area, &p).unwrap();
        let b = generate_model(&area, &p).unwrap();
        assert_eq!(a.selected(), b.selected());
        for (x, y) in a.coefficients.iter().zip(&b.coefficients) {
            assert_eq!(x.re.to_bits(), y.re.to_bits());
            assert_eq!(x.im.to_bits(), y.im.to_bits());
        }
    }
}
