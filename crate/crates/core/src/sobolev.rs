//! Weighted Sobolev norms of sinograms and solenoidal fields, and the
//! isometry check between them.
//!
//! Sinogram side:
//! `‖ψ‖² = (1/4π) Σ_l (1+l²)^r ∫_ℝ |q|^{2t}(1+q²)^{s-t} |(ψ̃)̂_l(q)|² dq`
//! with `ψ̃ = sin^mθ·ψ`. Field side:
//! `‖f‖² = (1/2π) Σ_l (1+l²)^r ∫_0^∞ q^{2t+1}(1+q²)^{s-t} |(f̂_m)_l(q)|² dq`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{angular_series_rows, polar_resample, AngularSeries, PolarFrequencyGrid};
use crate::plan::SamplingPlan;
use crate::ray::Sinogram;
use crate::slice::{component_spectrum, require_solenoidal, transform_sinogram, Convention, QGrid};
use crate::tensor::TensorField2D;

/// Smoothness indices `r` (angular), `s` (spatial) and weight index `t`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SobolevParams {
    pub r: f64,
    pub s: f64,
    pub t: f64,
}

impl SobolevParams {
    pub fn new(r: f64, s: f64, t: f64) -> Self {
        Self { r, s, t }
    }

    fn check_finite(&self) -> Result<()> {
        if [self.r, self.s, self.t].iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("non-finite Sobolev indices {self:?}")))
        }
    }

    /// Sinogram spaces need `t > -1/2`.
    pub fn check_sinogram(&self) -> Result<()> {
        self.check_finite()?;
        if self.t > -0.5 {
            Ok(())
        } else {
            Err(Error::Admissibility { t: self.t, bound: -0.5 })
        }
    }

    /// Field spaces need `t > -1`.
    pub fn check_field(&self) -> Result<()> {
        self.check_finite()?;
        if self.t > -1.0 {
            Ok(())
        } else {
            Err(Error::Admissibility { t: self.t, bound: -1.0 })
        }
    }

    /// Indices `(r, s + 1/2, t + 1/2)` used on the sinogram side of the
    /// isometry.
    pub fn shifted(&self) -> Self {
        Self { r: self.r, s: self.s + 0.5, t: self.t + 0.5 }
    }

    pub fn angular_weight(&self, l: i64) -> f64 {
        (1.0 + (l * l) as f64).powf(self.r)
    }

    /// `|q|^{2t} (1+q²)^{s-t}`.
    pub fn radial_weight(&self, q: f64) -> f64 {
        q.abs().powf(2.0 * self.t) * (1.0 + q * q).powf(self.s - self.t)
    }
}

/// A squared norm split by frequency sign, with the share of weighted energy
/// in the top quarter of the retained harmonics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub norm_sq: f64,
    pub positive_half: f64,
    pub negative_half: f64,
    pub tail_fraction: f64,
}

impl NormEstimate {
    pub fn norm(&self) -> f64 {
        self.norm_sq.sqrt()
    }
}

/// Weighted harmonic energy `Σ_l (1+l²)^r |c_l|²` and its top-quarter part.
fn harmonic_energy(series: &AngularSeries, params: &SobolevParams) -> (f64, f64) {
    let cut = (3 * series.lmax()) / 4;
    series.iter().fold((0.0, 0.0), |(all, top), (l, c)| {
        let e = params.angular_weight(l) * c.norm_sqr();
        (all + e, if l.unsigned_abs() as usize > cut { top + e } else { top })
    })
}

fn warn_tail(what: &str, tail: f64) {
    if tail > 1e-6 {
        log::warn!("{what} norm: {tail:.3e} of the weighted energy sits in the top quarter of harmonics");
    }
}

/// Sinogram norm on the plan's symmetric midpoint q grid.
pub fn sinogram_norm(
    psi: &Sinogram,
    params: &SobolevParams,
    convention: Convention,
    plan: &SamplingPlan,
) -> Result<NormEstimate> {
    params.check_sinogram()?;
    let qgrid = QGrid::from_plan(plan)?;
    let tilde = transform_sinogram(psi, &qgrid, convention)?.tilde()?;
    let dq = qgrid.dq();
    let (mut pos, mut neg, mut top) = (0.0, 0.0, 0.0);
    for idx in 0..qgrid.len() {
        let q = qgrid.node(idx);
        let (e, t) = harmonic_energy(tilde.series(idx), params);
        let w = params.radial_weight(q) * dq / (4.0 * PI);
        if q > 0.0 {
            pos += w * e;
        } else {
            neg += w * e;
        }
        top += w * t;
    }
    let norm_sq = pos + neg;
    let tail_fraction = if norm_sq > 0.0 { top / norm_sq } else { 0.0 };
    warn_tail("sinogram", tail_fraction);
    Ok(NormEstimate { norm_sq, positive_half: pos, negative_half: neg, tail_fraction })
}

/// Field norm from the polar resampling of `f̂_m`; `f` must be solenoidal.
pub fn field_norm(f: &TensorField2D, params: &SobolevParams, plan: &SamplingPlan) -> Result<NormEstimate> {
    params.check_field()?;
    plan.validate()?;
    require_solenoidal(f)?;
    let m = f.rank();
    let spectrum = component_spectrum(f, m, plan.qmax)?;
    let pgrid = PolarFrequencyGrid::new(plan.nq, plan.qmax, plan.ntheta)?;
    let polar = polar_resample(&spectrum, &pgrid)?;
    let series = angular_series_rows(&polar, plan.ntheta, plan.lmax())?;
    let dq = pgrid.dq();
    let (mut total, mut top) = (0.0, 0.0);
    for (k, s) in series.iter().enumerate() {
        let q = pgrid.q(k);
        let (e, t) = harmonic_energy(s, params);
        let w = q * params.radial_weight(q) * dq / (2.0 * PI);
        total += w * e;
        top += w * t;
    }
    let tail_fraction = if total > 0.0 { top / total } else { 0.0 };
    warn_tail("field", tail_fraction);
    Ok(NormEstimate { norm_sq: total, positive_half: total, negative_half: 0.0, tail_fraction })
}

/// Outcome of the isometry check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReshetnyakReport {
    /// `‖I_m f‖ / ‖f‖` with shifted indices on the sinogram side.
    pub ratio: f64,
    pub sinogram: NormEstimate,
    pub field: NormEstimate,
}

/// Compares `‖I_m f‖` in the `(r, s+1/2, t+1/2)` sinogram norm with `‖f‖`
/// in the `(r, s, t)` field norm. The ratio is 1 under
/// [`Convention::Lemma`] and `√(2π)` under [`Convention::Fst`].
pub fn reshetnyak_check(
    f: &TensorField2D,
    params: &SobolevParams,
    convention: Convention,
    plan: &SamplingPlan,
) -> Result<ReshetnyakReport> {
    let psi = plan.forward(f)?;
    reshetnyak_with_sinogram(f, &psi, params, convention, plan)
}

/// As [`reshetnyak_check`] with a precomputed sinogram of `f` (or of any
/// field with the same solenoidal part).
pub fn reshetnyak_with_sinogram(
    f: &TensorField2D,
    psi: &Sinogram,
    params: &SobolevParams,
    convention: Convention,
    plan: &SamplingPlan,
) -> Result<ReshetnyakReport> {
    params.check_field()?;
    let field = field_norm(f, params, plan)?;
    if field.norm_sq == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let sinogram = sinogram_norm(psi, &params.shifted(), convention, plan)?;
    Ok(ReshetnyakReport { ratio: (sinogram.norm_sq / field.norm_sq).sqrt(), sinogram, field })
}
