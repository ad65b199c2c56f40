//! Block-wise frequency selective extrapolation (FSE).
//!
//! Each block of missing pixels is filled from a sparse model
//! `g[m, n] = sum over K of c(k,l) * phi(k,l)[m, n]` of 2-D Fourier basis
//! functions, fitted by weighted matching pursuit over the block's support
//! area. Blocks are visited in an order that favours well-sampled areas first.

mod area;
mod model;
mod reconstruct;

pub use area::{compute_weights, SampleStatus, SupportArea};
pub use model::{generate_model, generate_model_traced, ModelBuilder, SparseModel};
pub use reconstruct::{processing_order, reconstruct_frame, BlockCoord};

use crate::error::{Error, Result};

/// FSE tuning values. Defaults are the reference configuration
/// (4x4 blocks, 14 px border, 32x32 DFT, 100 iterations,
/// rho = 0.7, gamma = 0.5, delta = 0.5).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FseParams {
    pub block_size: usize,
    pub border_width: usize,
    pub dft_size: usize,
    pub iterations: usize,
    /// Base of the exponential distance decay of the weighting function.
    pub decay_rho: f64,
    /// Orthogonality deficiency compensation applied to each coefficient update.
    pub odc_gamma: f64,
    /// Relative weight of pixels reconstructed by earlier blocks.
    pub recon_weight_delta: f64,
}

impl Default for FseParams {
    fn default() -> Self {
        Self {
            block_size: 4,
            border_width: 14,
            dft_size: 32,
            iterations: 100,
            decay_rho: 0.7,
            odc_gamma: 0.5,
            recon_weight_delta: 0.5,
        }
    }
}

impl FseParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.block_size == 0 {
            return bad("block_size must be at least 1".into());
        }
        if self.dft_size != self.block_size + 2 * self.border_width {
            return bad(format!(
                "dft_size {} must equal block_size + 2*border_width = {}",
                self.dft_size,
                self.block_size + 2 * self.border_width
            ));
        }
        if self.iterations == 0 {
            return bad("iterations must be at least 1".into());
        }
        if !(self.decay_rho > 0.0 && self.decay_rho < 1.0) {
            return bad(format!("decay_rho {} not in (0, 1)", self.decay_rho));
        }
        if !(self.odc_gamma > 0.0 && self.odc_gamma <= 1.0) {
            return bad(format!("odc_gamma {} not in (0, 1]", self.odc_gamma));
        }
        if !(0.0..=1.0).contains(&self.recon_weight_delta) {
            return bad(format!(
                "recon_weight_delta {} not in [0, 1]",
                self.recon_weight_delta
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_consistent() {
        let p = FseParams::default();
        p.validate().unwrap();
        assert_eq!(p.dft_size, p.block_size + 2 * p.border_width);
    }

    #[test]
    fn rejects_out_of_range() {
        let ok = FseParams::default();
        for p in [
            FseParams { dft_size: 30, ..ok },
            FseParams {
                iterations: 0,
                ..ok
            },
            FseParams {
                decay_rho: 1.0,
                ..ok
            },
            FseParams {
                decay_rho: 0.0,
                ..ok
            },
            FseParams {
                odc_gamma: 0.0,
                ..ok
            },
            FseParams {
                odc_gamma: 1.5,
                ..ok
            },
            FseParams {
                recon_weight_delta: -0.1,
                ..ok
            },
        ] {
            assert!(p.validate().is_err(), "{p:?}");
        }
        FseParams {
            odc_gamma: 1.0,
            recon_weight_delta: 0.0,
            ..ok
        }
        .validate()
        .unwrap();
    }
}
