//! Fourier analysis of sinograms and the slice identities linking them to
//! field spectra.
//!
//! The sinogram transform is `ψ̂(q, θ) = c ∫ e^{-iqp} ψ(p, θ) dp` with
//! `c = (2π)^{-1/2}` ([`Convention::Fst`]) or `c = (2π)^{-1}`
//! ([`Convention::Lemma`]). With the lemma normalisation a solenoidal field
//! satisfies `sin^mθ · ψ̂(q, θ) = f̂_m(q, θ + π/2)` for `q > 0`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{
    angular_series_rows, fourier_transform_2d_oversampled, interpolate_spectrum, polar_resample,
    AngularSeries, PolarFrequencyGrid, Spectrum2D,
};
use crate::plan::SamplingPlan;
use crate::ray::Sinogram;
use crate::tensor::{binomial, relative_divergence, TensorField2D};

/// Zero-padding factor for field spectra that get interpolated.
pub(crate) const SPECTRUM_OVERSAMPLE: usize = 4;

/// Normalisation of the sinogram transform in `p`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    #[default]
    Lemma,
    Fst,
}

impl Convention {
    /// Constant in front of `∫ e^{-iqp} ψ dp`.
    pub fn transform_scale(self) -> f64 {
        match self {
            Convention::Lemma => 1.0 / (2.0 * PI),
            Convention::Fst => 1.0 / (2.0 * PI).sqrt(),
        }
    }

    /// `κ` in `sin^mθ · ψ̂(q, θ) = κ · f̂_m(q, θ + π/2)`.
    pub fn slice_constant(self) -> f64 {
        match self {
            Convention::Lemma => 1.0,
            Convention::Fst => (2.0 * PI).sqrt(),
        }
    }
}

impl fmt::Display for Convention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Convention::Lemma => "lemma",
            Convention::Fst => "fst",
        })
    }
}

impl FromStr for Convention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lemma" => Ok(Convention::Lemma),
            "fst" => Ok(Convention::Fst),
            other => Err(Error::InvalidParameter(format!("unknown convention {other:?}"))),
        }
    }
}

/// Symmetric midpoint nodes `±(k + 1/2)·qmax/nq`, `k = 0..nq`, ordered from
/// `-qmax` to `qmax`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QGrid {
    nq: usize,
    qmax: f64,
}

impl QGrid {
    pub fn new(nq: usize, qmax: f64) -> Result<Self> {
        if nq == 0 || !(qmax.is_finite() && qmax > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "q grid needs nq > 0 and qmax > 0, got nq = {nq}, qmax = {qmax}"
            )));
        }
        Ok(Self { nq, qmax })
    }

    pub fn from_plan(plan: &SamplingPlan) -> Result<Self> {
        Self::new(plan.nq, plan.qmax)
    }

    /// Nodes on each side of zero.
    pub fn nq(&self) -> usize {
        self.nq
    }

    pub fn qmax(&self) -> f64 {
        self.qmax
    }

    pub fn dq(&self) -> f64 {
        self.qmax / self.nq as f64
    }

    pub fn len(&self) -> usize {
        2 * self.nq
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn node(&self, idx: usize) -> f64 {
        (idx as f64 - self.nq as f64 + 0.5) * self.dq()
    }

    /// Index of the node at `-node(idx)`.
    pub fn mirror(&self, idx: usize) -> usize {
        2 * self.nq - 1 - idx
    }

    /// Index of the `k`-th positive node.
    pub fn positive(&self, k: usize) -> usize {
        self.nq + k
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.node(i)).collect()
    }
}

/// `ψ̂(q_k, θ_j)` together with its angular coefficients `ψ̂_l(q_k)`.
#[derive(Clone, Debug)]
pub struct SpectralSinogram {
    m: usize,
    convention: Convention,
    qgrid: QGrid,
    ntheta: usize,
    values: Vec<Complex64>,
    series: Vec<AngularSeries>,
}

impl SpectralSinogram {
    pub fn rank(&self) -> usize {
        self.m
    }

    pub fn convention(&self) -> Convention {
        self.convention
    }

    pub fn qgrid(&self) -> &QGrid {
        &self.qgrid
    }

    pub fn ntheta(&self) -> usize {
        self.ntheta
    }

    pub fn lmax(&self) -> usize {
        self.series[0].lmax()
    }

    /// Samples at q node `idx`, one per angle.
    pub fn row(&self, idx: usize) -> &[Complex64] {
        &self.values[idx * self.ntheta..(idx + 1) * self.ntheta]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn series(&self, idx: usize) -> &AngularSeries {
        &self.series[idx]
    }

    pub fn coefficient(&self, l: i64, idx: usize) -> Complex64 {
        self.series[idx].get(l)
    }

    /// Spectral form of `sin^mθ · ψ`; harmonics are truncated to
    /// `lmax - m` so that every retained coefficient is exact.
    pub fn tilde(&self) -> Result<Self> {
        let m = self.m;
        let lmax = self.lmax();
        if lmax < m {
            return Err(Error::InsufficientHarmonics { have: lmax, need: m });
        }
        let weights: Vec<f64> = (0..self.ntheta)
            .map(|j| (2.0 * PI * j as f64 / self.ntheta as f64).sin().powi(m as i32))
            .collect();
        let mut values = self.values.clone();
        values.par_chunks_mut(self.ntheta).for_each(|row| {
            for (v, w) in row.iter_mut().zip(&weights) {
                *v *= w;
            }
        });
        let series = self
            .series
            .par_iter()
            .map(|s| tilde_coefficients(s, m, lmax - m))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { values, series, ..self.clone() })
    }

    /// `max |ψ̂_l(-q) - (-1)^{m+l} ψ̂_l(q)| / max |ψ̂_l|`.
    pub fn coefficient_parity_residual(&self) -> f64 {
        let scale = self
            .series
            .iter()
            .flat_map(|s| s.coefficients().iter())
            .fold(0.0_f64, |a, c| a.max(c.norm()));
        if scale == 0.0 {
            return 0.0;
        }
        let worst = (0..self.qgrid.nq())
            .map(|k| {
                let pos = &self.series[self.qgrid.positive(k)];
                let neg = &self.series[self.qgrid.mirror(self.qgrid.positive(k))];
                pos.iter()
                    .map(|(l, c)| {
                        let sign = if (self.m as i64 + l).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                        (neg.get(l) - c * sign).norm()
                    })
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        worst / scale
    }
}

/// Trapezoid transform in `p` at the given frequencies, indexed
/// `k·ntheta + j`.
pub(crate) fn p_transform(psi: &Sinogram, qs: &[f64], scale: f64) -> Vec<Complex64> {
    let (np, nth) = (psi.np(), psi.ntheta());
    let dp = psi.dp();
    let ps: Vec<f64> = (0..np).map(|i| psi.p(i)).collect();
    let wts: Vec<f64> = (0..np)
        .map(|i| if i == 0 || i == np - 1 { 0.5 * dp * scale } else { dp * scale })
        .collect();
    let samples = psi.samples();
    let mut out = vec![Complex64::new(0.0, 0.0); qs.len() * nth];
    out.par_chunks_mut(nth).zip(qs.par_iter()).for_each(|(row, &q)| {
        for i in 0..np {
            let w = Complex64::from_polar(wts[i], -reduced_product(q, ps[i]));
            let src = &samples[i * nth..(i + 1) * nth];
            for (o, s) in row.iter_mut().zip(src) {
                *o += w * *s;
            }
        }
    });
    out
}

/// `q·p` reduced to `[-π, π]`, accurate to a few ulps of π even when the
/// product is large.
pub(crate) fn reduced_product(q: f64, p: f64) -> f64 {
    const TWO_PI_HI: f64 = std::f64::consts::TAU;
    const TWO_PI_LO: f64 = 2.449_293_598_294_706_4e-16;
    let hi = q * p;
    let lo = q.mul_add(p, -hi);
    let n = (hi / TWO_PI_HI).round();
    (-n).mul_add(TWO_PI_HI, hi) - n * TWO_PI_LO + lo
}

/// Decay warning for sinograms that do not vanish at `|p| = pmax`.
pub(crate) fn warn_if_truncated(psi: &Sinogram) {
    let scale = psi.max_abs();
    if scale == 0.0 {
        return;
    }
    let nth = psi.ntheta();
    let s = psi.samples();
    let edge = s[..nth].iter().chain(&s[s.len() - nth..]).fold(0.0_f64, |a, v| a.max(v.abs()));
    if edge > 1e-6 * scale {
        log::warn!(
            "sinogram does not decay at |p| = pmax (edge/peak = {:.3e}); transform is truncated",
            edge / scale
        );
    }
}

/// Transform in `p` on the symmetric q grid followed by angular series with
/// `lmax = ntheta/2 - 1`.
pub fn transform_sinogram(psi: &Sinogram, qgrid: &QGrid, convention: Convention) -> Result<SpectralSinogram> {
    warn_if_truncated(psi);
    let nth = psi.ntheta();
    let values = p_transform(psi, &qgrid.nodes(), convention.transform_scale());
    let series = angular_series_rows(&values, nth, nth / 2 - 1)?;
    Ok(SpectralSinogram { m: psi.rank(), convention, qgrid: *qgrid, ntheta: nth, values, series })
}

/// Coefficients of `sin^mθ · g(θ)` for `|l| ≤ lmax_out`:
/// `(2i)^{-m} Σ_k (-1)^k C(m,k) g_{l-m+2k}`.
pub fn tilde_coefficients(coeffs: &AngularSeries, m: usize, lmax_out: usize) -> Result<AngularSeries> {
    if coeffs.lmax() < lmax_out + m {
        return Err(Error::InsufficientHarmonics { have: coeffs.lmax(), need: lmax_out + m });
    }
    let factor = (Complex64::new(0.0, 2.0)).powi(-(m as i32));
    let mut out = AngularSeries::zeros(lmax_out);
    for l in -(lmax_out as i64)..=lmax_out as i64 {
        let sum: Complex64 = (0..=m)
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                coeffs.get(l - m as i64 + 2 * k as i64) * (sign * binomial(m, k))
            })
            .sum();
        out.set(l, factor * sum);
    }
    Ok(out)
}

/// Two sides of a slice identity sampled ring by ring (one ring per
/// positive q node).
#[derive(Clone, Debug)]
pub struct SliceComparison {
    lhs: Vec<Complex64>,
    rhs: Vec<Complex64>,
    ring: usize,
}

impl SliceComparison {
    pub fn new(lhs: Vec<Complex64>, rhs: Vec<Complex64>, ring: usize) -> Result<Self> {
        if lhs.len() != rhs.len() || ring == 0 || !lhs.len().is_multiple_of(ring) {
            return Err(Error::Shape { expected: lhs.len(), got: rhs.len() });
        }
        Ok(Self { lhs, rhs, ring })
    }

    pub fn lhs(&self) -> &[Complex64] {
        &self.lhs
    }

    pub fn rhs(&self) -> &[Complex64] {
        &self.rhs
    }

    pub fn rings(&self) -> usize {
        self.lhs.len() / self.ring
    }

    fn global(&self) -> f64 {
        self.lhs.iter().chain(&self.rhs).fold(0.0_f64, |a, c| a.max(c.norm()))
    }

    /// Per ring: `(level, residual)` where `level` is the ring's largest
    /// magnitude over the global maximum and `residual` is
    /// `max |L - R| / max(max |L|, max |R|, 1e-12·global)`.
    pub fn ring_profile(&self) -> Vec<(f64, f64)> {
        let global = self.global();
        if global == 0.0 {
            return vec![(0.0, 0.0); self.rings()];
        }
        let floor = 1e-12 * global;
        self.lhs
            .chunks(self.ring)
            .zip(self.rhs.chunks(self.ring))
            .map(|(l, r)| {
                let big = l.iter().chain(r).fold(0.0_f64, |a, c| a.max(c.norm()));
                let err = l.iter().zip(r).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
                (big / global, err / big.max(floor))
            })
            .collect()
    }

    /// Worst ring residual; 0 when both sides vanish.
    pub fn residual(&self) -> f64 {
        self.ring_profile().iter().map(|&(_, r)| r).fold(0.0, f64::max)
    }

    /// Worst residual over rings whose level is at least `level`.
    pub fn residual_above(&self, level: f64) -> f64 {
        self.ring_profile()
            .iter()
            .filter(|&&(l, _)| l >= level)
            .map(|&(_, r)| r)
            .fold(0.0, f64::max)
    }

    /// Least-squares `c` minimising `Σ |L - c·R|²`.
    pub fn fitted_constant(&self) -> Result<f64> {
        let num: f64 = self.lhs.iter().zip(&self.rhs).map(|(l, r)| (r.conj() * l).re).sum();
        let den: f64 = self.rhs.iter().map(|r| r.norm_sqr()).sum();
        if den == 0.0 {
            return Err(Error::ZeroNorm);
        }
        Ok(num / den)
    }

    fn scale_rhs(mut self, kappa: f64) -> Self {
        self.rhs.iter_mut().for_each(|v| *v *= kappa);
        self
    }
}

pub(crate) fn require_solenoidal(f: &TensorField2D) -> Result<()> {
    if f.rank() == 0 {
        return Ok(());
    }
    let rd = relative_divergence(f)?;
    if rd > 1e-6 {
        return Err(Error::NotSolenoidal(rd));
    }
    Ok(())
}

/// Oversampled spectrum of component `j`, checked against the q range.
pub(crate) fn component_spectrum(f: &TensorField2D, j: usize, qmax: f64) -> Result<Spectrum2D> {
    let grid = f.grid();
    if qmax > grid.nyquist() {
        return Err(Error::OutOfBand { requested: qmax, nyquist: grid.nyquist() });
    }
    fourier_transform_2d_oversampled(f.component(j), grid, SPECTRUM_OVERSAMPLE)
}

/// Both sides of the pointwise slice identity on the positive q nodes,
/// without the convention constant: `sin^mθ·ψ̂(q, θ)` and `f̂_m(q, θ + π/2)`.
fn slice_sides(
    f: &TensorField2D,
    convention: Convention,
    plan: &SamplingPlan,
) -> Result<SliceComparison> {
    let m = f.rank();
    let qgrid = QGrid::from_plan(plan)?;
    let spectrum = component_spectrum(f, m, qgrid.qmax())?;
    let psi = plan.forward(f)?;
    let spec = transform_sinogram(&psi, &qgrid, convention)?;
    let nth = spec.ntheta();
    let sin_m: Vec<f64> = (0..nth).map(|j| psi.theta(j).sin().powi(m as i32)).collect();
    let mut lhs = Vec::with_capacity(qgrid.nq() * nth);
    for k in 0..qgrid.nq() {
        let row = spec.row(qgrid.positive(k));
        lhs.extend(row.iter().zip(&sin_m).map(|(v, w)| v * w));
    }
    let rhs: Vec<Complex64> = (0..qgrid.nq() * nth)
        .into_par_iter()
        .map(|idx| {
            let q = qgrid.node(qgrid.positive(idx / nth));
            let (s, c) = psi.theta(idx % nth).sin_cos();
            interpolate_spectrum(&spectrum, -q * s, q * c)
        })
        .collect();
    SliceComparison::new(lhs, rhs, nth)
}

/// Scalar slice identity `ψ̂(q, θ) = √(2π) f̂(q, θ + π/2)` (transform in
/// the `fst` normalisation).
pub fn scalar_slice_comparison(f: &TensorField2D, plan: &SamplingPlan) -> Result<SliceComparison> {
    if f.rank() != 0 {
        return Err(Error::NotScalar(f.rank()));
    }
    Ok(slice_sides(f, Convention::Fst, plan)?.scale_rhs(Convention::Fst.slice_constant()))
}

/// Relative mismatch of the scalar slice identity.
pub fn fst_scalar_residual(f: &TensorField2D, plan: &SamplingPlan) -> Result<f64> {
    Ok(scalar_slice_comparison(f, plan)?.residual())
}

/// `sin^mθ·ψ̂(q, θ)` against `κ f̂_m(q, θ + π/2)` over `q > 0`.
pub fn solenoidal_slice_comparison(
    f: &TensorField2D,
    convention: Convention,
    plan: &SamplingPlan,
) -> Result<SliceComparison> {
    require_solenoidal(f)?;
    Ok(slice_sides(f, convention, plan)?.scale_rhs(convention.slice_constant()))
}

/// Relative mismatch of `sin^mθ·ψ̂(q, θ) = κ f̂_m(q, θ + π/2)`.
pub fn fst_solenoidal_residual(f: &TensorField2D, convention: Convention, plan: &SamplingPlan) -> Result<f64> {
    Ok(solenoidal_slice_comparison(f, convention, plan)?.residual())
}

/// Least-squares constant `c` in `sin^mθ·ψ̂(q, θ) ≈ c·f̂_m(q, θ + π/2)` with
/// the `fst` transform; the slice theorem predicts `√(2π)`.
pub fn measured_slice_constant(f: &TensorField2D, plan: &SamplingPlan) -> Result<f64> {
    require_solenoidal(f)?;
    slice_sides(f, Convention::Fst, plan)?.fitted_constant()
}

/// `(ψ̃)̂_l(q)` against `κ i^l (f̂_m)_l(q)` over `q > 0` and `|l| ≤ lmax - m`;
/// one ring per q node, harmonics along the ring.
pub fn coefficient_slice_comparison(
    f: &TensorField2D,
    convention: Convention,
    plan: &SamplingPlan,
) -> Result<SliceComparison> {
    require_solenoidal(f)?;
    let m = f.rank();
    let qgrid = QGrid::from_plan(plan)?;
    let spectrum = component_spectrum(f, m, qgrid.qmax())?;
    let psi = plan.forward(f)?;
    let tilde = transform_sinogram(&psi, &qgrid, convention)?.tilde()?;
    let lmax = tilde.lmax();
    let pgrid = PolarFrequencyGrid::new(qgrid.nq(), qgrid.qmax(), plan.ntheta)?;
    let polar = polar_resample(&spectrum, &pgrid)?;
    let field_series = angular_series_rows(&polar, plan.ntheta, lmax)?;
    let kappa = convention.slice_constant();
    let width = 2 * lmax + 1;
    let mut lhs = Vec::with_capacity(qgrid.nq() * width);
    let mut rhs = Vec::with_capacity(qgrid.nq() * width);
    for (k, fs) in field_series.iter().enumerate() {
        let ts = tilde.series(qgrid.positive(k));
        for l in -(lmax as i64)..=lmax as i64 {
            lhs.push(ts.get(l));
            rhs.push(Complex64::i().powi(l as i32) * fs.get(l) * kappa);
        }
    }
    SliceComparison::new(lhs, rhs, width)
}

/// Relative mismatch of the coefficient form of the slice identity.
pub fn fst_coefficient_residual(f: &TensorField2D, convention: Convention, plan: &SamplingPlan) -> Result<f64> {
    Ok(coefficient_slice_comparison(f, convention, plan)?.residual())
}
