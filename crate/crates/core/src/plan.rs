//! Sampling parameters shared by the forward transform and the spectral
//! pipelines.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ray::{forward, Sinogram};
use crate::tensor::TensorField2D;

/// Sinogram and frequency sampling.
///
/// `pmax = None` uses the field's grid radius.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub np: usize,
    pub ntheta: usize,
    pub pmax: Option<f64>,
    pub nq: usize,
    pub qmax: f64,
}

impl Default for SamplingPlan {
    fn default() -> Self {
        Self { np: 257, ntheta: 128, pmax: None, nq: 512, qmax: 8.0 }
    }
}

impl SamplingPlan {
    pub fn validate(&self) -> Result<()> {
        if self.np < 2 {
            return Err(Error::InvalidParameter(format!("np must be at least 2, got {}", self.np)));
        }
        if self.ntheta == 0 || !self.ntheta.is_multiple_of(2) {
            return Err(Error::AngularCount(self.ntheta));
        }
        if self.nq == 0 || !(self.qmax.is_finite() && self.qmax > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "frequency sampling needs nq > 0 and qmax > 0, got nq = {}, qmax = {}",
                self.nq, self.qmax
            )));
        }
        Ok(())
    }

    /// Angular harmonics resolved by `ntheta` samples.
    pub fn lmax(&self) -> usize {
        self.ntheta / 2 - 1
    }

    pub fn pmax_for(&self, f: &TensorField2D) -> f64 {
        self.pmax.unwrap_or_else(|| f.grid().radius())
    }

    /// [`forward`] with this plan's sinogram sampling.
    pub fn forward(&self, f: &TensorField2D) -> Result<Sinogram> {
        self.validate()?;
        forward(f, self.np, self.ntheta, self.pmax_for(f))
    }
}
