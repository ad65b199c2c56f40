use super::FseParams;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleStatus {
    /// Measured by the sensor or projected from a support frame.
    Original,
    /// Filled by an earlier block of the same frame.
    Reconstructed,
    Missing,
}

/// Square window (`dft_size` wide) around one block.
#[derive(Debug, Clone)]
pub struct SupportArea {
    size: usize,
    values: Vec<f64>,
    status: Vec<SampleStatus>,
}

impl SupportArea {
    pub fn new(size: usize, values: Vec<f64>, status: Vec<SampleStatus>) -> Result<Self> {
        if size == 0 || values.len() != size * size || status.len() != size * size {
            return Err(Error::InvalidArgument(format!(
                "support area of size {size} needs {} values and statuses, got {} and {}",
                size * size,
                values.len(),
                status.len()
            )));
        }
        Ok(Self {
            size,
            values,
            status,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn status(&self) -> &[SampleStatus] {
        &self.status
    }
}

/// Distance-decay table `rho^d`, where `d` is the Euclidean distance from
/// the area's center pixel `(size/2, size/2)`.
pub(crate) fn decay_table(size: usize, rho: f64) -> Vec<f64> {
    let c = (size / 2) as f64;
    let mut out = Vec::with_capacity(size * size);
    for a in 0..size {
        for b in 0..size {
            let d = ((a as f64 - c).powi(2) + (b as f64 - c).powi(2)).sqrt();
            out.push(rho.powf(d));
        }
    }
    out
}

pub(crate) fn weights_from_decay(area: &SupportArea, decay: &[f64], delta: f64, out: &mut [f64]) {
    for ((w, &s), &dk) in out.iter_mut().zip(&area.status).zip(decay) {
        *w = match s {
            SampleStatus::Original => dk,
            SampleStatus::Reconstructed => delta * dk,
            SampleStatus::Missing => 0.0,
        };
    }
}

/// Per-position model weights: `rho^d` for original samples,
/// `delta * rho^d` for reconstructed ones and zero where nothing is known.
pub fn compute_weights(area: &SupportArea, params: &FseParams) -> Result<Vec<f64>> {
    if area.size != params.dft_size {
        return Err(Error::InvalidArgument(format!(
            "support area size {} differs from dft_size {}",
            area.size, params.dft_size
        )));
    }
    let decay = decay_table(area.size, params.decay_rho);
    let mut w = vec![0.0; area.size * area.size];
    weights_from_decay(area, &decay, params.recon_weight_delta, &mut w);
    Ok(w)
}
