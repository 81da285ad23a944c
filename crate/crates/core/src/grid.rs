//! Cartesian and polar grids, continuous-convention Fourier transforms,
//! angular Fourier series and Cartesian-to-polar spectral resampling.
//!
//! The 2D transform approximates `f̂(y) = (2π)⁻¹ ∫ e^{-i⟨y,x⟩} f(x) dx` by the
//! trapezoid rule on the grid `x_i = -R + i·h`, so every value returned here is
//! directly comparable with closed-form continuous transforms.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Square sampling grid on `[-R, R)²` with `n` points per axis.
///
/// Point `(i, j)` sits at `(-R + i·h, -R + j·h)` and is stored at flat index
/// `i·n + j` (x index outermost).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CartesianGrid {
    n: usize,
    radius: f64,
}

impl CartesianGrid {
    pub fn new(n: usize, radius: f64) -> Result<Self> {
        if n < 16 || !n.is_multiple_of(2) {
            return Err(Error::GridSize(n));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::GridRadius(radius));
        }
        Ok(Self { n, radius })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.radius / self.n as f64
    }

    /// Number of samples in one scalar grid function.
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.radius + i as f64 * self.spacing()
    }

    /// Spacing `2π / 2R` of the dual frequency grid.
    pub fn dual_spacing(&self) -> f64 {
        PI / self.radius
    }

    /// Nyquist limit `π / h`.
    pub fn nyquist(&self) -> f64 {
        PI / self.spacing()
    }

    /// Samples `f(x, y)` at every grid point.
    pub fn sample<F>(&self, f: F) -> Vec<f64>
    where
        F: Fn(f64, f64) -> f64 + Sync,
    {
        let n = self.n;
        (0..n * n)
            .into_par_iter()
            .map(|idx| f(self.coord(idx / n), self.coord(idx % n)))
            .collect()
    }

    /// Trapezoid quadrature of `|f|²` over the grid.
    pub fn l2_norm_sq(&self, values: &[f64]) -> f64 {
        let h = self.spacing();
        h * h * values.iter().map(|v| v * v).sum::<f64>()
    }
}

/// Polar sampling of frequency space: midpoint radial nodes and equispaced
/// angles.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolarFrequencyGrid {
    nq: usize,
    qmax: f64,
    ntheta: usize,
}

impl PolarFrequencyGrid {
    pub fn new(nq: usize, qmax: f64, ntheta: usize) -> Result<Self> {
        if nq == 0 {
            return Err(Error::InvalidParameter("nq must be positive".into()));
        }
        if !(qmax.is_finite() && qmax > 0.0) {
            return Err(Error::InvalidParameter(format!("qmax must be positive, got {qmax}")));
        }
        if ntheta == 0 || !ntheta.is_multiple_of(2) {
            return Err(Error::AngularCount(ntheta));
        }
        Ok(Self { nq, qmax, ntheta })
    }

    pub fn nq(&self) -> usize {
        self.nq
    }

    pub fn qmax(&self) -> f64 {
        self.qmax
    }

    pub fn ntheta(&self) -> usize {
        self.ntheta
    }

    pub fn dq(&self) -> f64 {
        self.qmax / self.nq as f64
    }

    /// Radial node `q_k = (k + 1/2)·qmax/nq`.
    pub fn q(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.dq()
    }

    pub fn phi(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.ntheta as f64
    }

    pub fn len(&self) -> usize {
        self.nq * self.ntheta
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Truncated Fourier series `Σ_{|l|≤lmax} c_l e^{ilθ}`.
#[derive(Clone, Debug, PartialEq)]
pub struct AngularSeries {
    lmax: usize,
    coeffs: Vec<Complex64>,
}

impl AngularSeries {
    pub fn zeros(lmax: usize) -> Self {
        Self { lmax, coeffs: vec![Complex64::new(0.0, 0.0); 2 * lmax + 1] }
    }

    /// Builds a series from `c_{-lmax}, …, c_{lmax}`.
    pub fn from_coefficients(lmax: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != 2 * lmax + 1 {
            return Err(Error::Shape { expected: 2 * lmax + 1, got: coeffs.len() });
        }
        Ok(Self { lmax, coeffs })
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    /// `c_l`, or zero outside the stored range.
    pub fn get(&self, l: i64) -> Complex64 {
        if l.unsigned_abs() as usize > self.lmax {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[(l + self.lmax as i64) as usize]
        }
    }

    pub fn set(&mut self, l: i64, value: Complex64) {
        assert!(l.unsigned_abs() as usize <= self.lmax, "harmonic {l} out of range");
        self.coeffs[(l + self.lmax as i64) as usize] = value;
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Iterates `(l, c_l)` from `-lmax` to `lmax`.
    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let lmax = self.lmax as i64;
        self.coeffs.iter().enumerate().map(move |(idx, &c)| (idx as i64 - lmax, c))
    }

    pub fn evaluate(&self, theta: f64) -> Complex64 {
        self.iter().map(|(l, c)| c * Complex64::from_polar(1.0, l as f64 * theta)).sum()
    }

    /// Series of `θ ↦ g(θ + α)`.
    pub fn rotated(&self, alpha: f64) -> Self {
        let coeffs = self
            .iter()
            .map(|(l, c)| c * Complex64::from_polar(1.0, l as f64 * alpha))
            .collect();
        Self { lmax: self.lmax, coeffs }
    }

    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Energy carried by harmonics with `|l| > 3·lmax/4`.
    pub fn top_quarter_energy(&self) -> f64 {
        let cut = (3 * self.lmax) / 4;
        self.iter()
            .filter(|(l, _)| l.unsigned_abs() as usize > cut)
            .map(|(_, c)| c.norm_sqr())
            .sum()
    }

    /// True when the top quarter of harmonics carries more than `1e-8` of the
    /// total energy, i.e. the angular sampling is probably too coarse.
    pub fn aliasing_suspected(&self) -> bool {
        let total = self.energy();
        total > 0.0 && self.top_quarter_energy() > 1e-8 * total
    }
}

/// Coefficients `c_l ≈ (2π)⁻¹ ∫ g(θ) e^{-ilθ} dθ` from equispaced samples
/// `g(2πj/N)`, `j = 0..N`.
pub fn angular_coefficients(samples: &[Complex64], lmax: usize) -> Result<AngularSeries> {
    let ntheta = samples.len();
    if ntheta < 2 * lmax + 2 {
        return Err(Error::InsufficientHarmonics { have: ntheta.saturating_sub(2) / 2, need: lmax });
    }
    if samples.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
        return Err(Error::NonFinite("angular samples"));
    }
    let fft = FftPlanner::new().plan_fft_forward(ntheta);
    let mut buf = samples.to_vec();
    fft.process(&mut buf);
    let series = series_from_dft(&buf, lmax);
    if series.aliasing_suspected() {
        log::warn!(
            "angular series with lmax = {lmax} carries {:.3e} of its energy in the top quarter; \
             sampling may alias",
            series.top_quarter_energy() / series.energy()
        );
    }
    Ok(series)
}

/// Unnormalised DFT output → series (divides by the sample count).
pub(crate) fn series_from_dft(dft: &[Complex64], lmax: usize) -> AngularSeries {
    let ntheta = dft.len();
    let scale = 1.0 / ntheta as f64;
    let coeffs = (-(lmax as i64)..=lmax as i64)
        .map(|l| dft[l.rem_euclid(ntheta as i64) as usize] * scale)
        .collect();
    AngularSeries { lmax, coeffs }
}

/// Evaluates a series at the `ntheta` equispaced angles.
pub fn evaluate_on_angles(series: &AngularSeries, ntheta: usize) -> Vec<Complex64> {
    let mut buf = vec![Complex64::new(0.0, 0.0); ntheta];
    for (l, c) in series.iter() {
        buf[l.rem_euclid(ntheta as i64) as usize] += c;
    }
    FftPlanner::new().plan_fft_inverse(ntheta).process(&mut buf);
    buf
}

/// Samples of a continuous 2D Fourier transform on a square frequency
/// lattice `y = (k₁, k₂)·Δ`, stored in FFT order (`k ≥ size/2` means `k - size`).
#[derive(Clone, Debug)]
pub struct Spectrum2D {
    grid: CartesianGrid,
    oversample: usize,
    values: Vec<Complex64>,
}

impl Spectrum2D {
    /// Builds a spectrum on the plain dual grid of `grid` from a function of
    /// the frequency `(y₁, y₂)`.
    pub fn from_fn<F>(grid: CartesianGrid, f: F) -> Self
    where
        F: Fn(f64, f64) -> Complex64 + Sync,
    {
        let size = grid.n();
        let delta = grid.dual_spacing();
        let values = (0..size * size)
            .into_par_iter()
            .map(|idx| {
                let k1 = signed_index(idx / size, size) as f64;
                let k2 = signed_index(idx % size, size) as f64;
                f(k1 * delta, k2 * delta)
            })
            .collect();
        Self { grid, oversample: 1, values }
    }

    pub fn grid(&self) -> CartesianGrid {
        self.grid
    }

    /// Samples per axis.
    pub fn size(&self) -> usize {
        self.grid.n() * self.oversample
    }

    pub fn oversample(&self) -> usize {
        self.oversample
    }

    /// Frequency spacing `2π / (oversample·2R)`.
    pub fn spacing(&self) -> f64 {
        self.grid.dual_spacing() / self.oversample as f64
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    /// Frequency vector of flat index `idx`.
    pub fn frequency(&self, idx: usize) -> (f64, f64) {
        let size = self.size();
        let d = self.spacing();
        (
            signed_index(idx / size, size) as f64 * d,
            signed_index(idx % size, size) as f64 * d,
        )
    }

    /// Quadrature of `|f̂|²` over the frequency lattice.
    pub fn l2_norm_sq(&self) -> f64 {
        let d = self.spacing();
        d * d * self.values.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }
}

pub(crate) fn signed_index(k: usize, size: usize) -> i64 {
    if k >= size / 2 {
        k as i64 - size as i64
    } else {
        k as i64
    }
}

fn check_input(values: &[f64], grid: &CartesianGrid) -> Result<()> {
    if values.len() != grid.len() {
        return Err(Error::Shape { expected: grid.len(), got: values.len() });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("grid function"));
    }
    Ok(())
}

/// Continuous-convention 2D Fourier transform on the dual grid.
pub fn fourier_transform_2d(values: &[f64], grid: &CartesianGrid) -> Result<Spectrum2D> {
    fourier_transform_2d_oversampled(values, grid, 1)
}

/// As [`fourier_transform_2d`], zero-padding the input to `oversample·n`
/// points per axis so the spectrum is sampled `oversample` times more finely.
pub fn fourier_transform_2d_oversampled(
    values: &[f64],
    grid: &CartesianGrid,
    oversample: usize,
) -> Result<Spectrum2D> {
    check_input(values, grid)?;
    if oversample == 0 {
        return Err(Error::InvalidParameter("oversample factor must be positive".into()));
    }
    let n = grid.n();
    let size = n * oversample;
    let mut data = vec![Complex64::new(0.0, 0.0); size * size];
    for i in 0..n {
        for j in 0..n {
            data[i * size + j] = Complex64::new(values[i * n + j], 0.0);
        }
    }
    fft2(&mut data, size, false);

    let h = grid.spacing();
    let r = grid.radius();
    let mut spectrum = Spectrum2D { grid: *grid, oversample, values: data };
    let scale = h * h / (2.0 * PI);
    let d = spectrum.spacing();
    spectrum.values.par_chunks_mut(size).enumerate().for_each(|(k1, row)| {
        let y1 = signed_index(k1, size) as f64 * d;
        for (k2, v) in row.iter_mut().enumerate() {
            let y2 = signed_index(k2, size) as f64 * d;
            *v *= Complex64::from_polar(scale, (y1 + y2) * r);
        }
    });
    Ok(spectrum)
}

/// Inverse of [`fourier_transform_2d`] for spectra on the plain dual grid.
pub fn inverse_fourier_transform_2d(spectrum: &Spectrum2D) -> Result<Vec<Complex64>> {
    if spectrum.oversample != 1 {
        return Err(Error::InvalidParameter(
            "inverse transform needs a spectrum on the plain dual grid".into(),
        ));
    }
    if spectrum.values.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
        return Err(Error::NonFinite("spectrum"));
    }
    let grid = spectrum.grid;
    let n = grid.n();
    let r = grid.radius();
    let d = spectrum.spacing();
    let scale = d * d / (2.0 * PI);
    let mut data = spectrum.values.clone();
    data.par_chunks_mut(n).enumerate().for_each(|(k1, row)| {
        let y1 = signed_index(k1, n) as f64 * d;
        for (k2, v) in row.iter_mut().enumerate() {
            let y2 = signed_index(k2, n) as f64 * d;
            *v *= Complex64::from_polar(scale, -(y1 + y2) * r);
        }
    });
    fft2(&mut data, n, true);
    Ok(data)
}

/// Real part of the inverse transform.
pub fn inverse_fourier_transform_2d_real(spectrum: &Spectrum2D) -> Result<Vec<f64>> {
    Ok(inverse_fourier_transform_2d(spectrum)?.into_iter().map(|c| c.re).collect())
}

/// Resamples a spectrum at the polar nodes `(q_k cos φ_j, q_k sin φ_j)`.
///
/// Uses separable 8-point Lagrange interpolation on the (periodic) frequency
/// lattice, which reproduces polynomials of degree ≤ 7 exactly. Output is
/// indexed `k·ntheta + j`.
pub fn polar_resample(spectrum: &Spectrum2D, pgrid: &PolarFrequencyGrid) -> Result<Vec<Complex64>> {
    let nyquist = spectrum.grid.nyquist();
    if pgrid.qmax() > nyquist {
        return Err(Error::OutOfBand { requested: pgrid.qmax(), nyquist });
    }
    let ntheta = pgrid.ntheta();
    let out = (0..pgrid.len())
        .into_par_iter()
        .map(|idx| {
            let q = pgrid.q(idx / ntheta);
            let phi = pgrid.phi(idx % ntheta);
            interpolate_spectrum(spectrum, q * phi.cos(), q * phi.sin())
        })
        .collect();
    Ok(out)
}

const SPECTRAL_STENCIL: usize = 8;

/// Lagrange interpolation of the spectrum at an arbitrary frequency.
pub fn interpolate_spectrum(spectrum: &Spectrum2D, y1: f64, y2: f64) -> Complex64 {
    let size = spectrum.size() as i64;
    let d = spectrum.spacing();
    let (base1, w1) = lagrange_stencil(y1 / d, SPECTRAL_STENCIL);
    let (base2, w2) = lagrange_stencil(y2 / d, SPECTRAL_STENCIL);
    let mut acc = Complex64::new(0.0, 0.0);
    for (a, wa) in w1.iter().enumerate() {
        let row = (base1 + a as i64).rem_euclid(size) as usize * size as usize;
        let mut inner = Complex64::new(0.0, 0.0);
        for (b, wb) in w2.iter().enumerate() {
            let col = (base2 + b as i64).rem_euclid(size) as usize;
            inner += spectrum.values[row + col] * *wb;
        }
        acc += inner * *wa;
    }
    acc
}

/// Lagrange weights for interpolating at fractional index `u` from the
/// `npts` integer nodes `floor(u) - npts/2 + 1 ..= floor(u) + npts/2`.
/// Returns the first node and the weights.
pub(crate) fn lagrange_stencil(u: f64, npts: usize) -> (i64, Vec<f64>) {
    let fl = u.floor();
    let t = u - fl;
    let first = fl as i64 - (npts as i64 / 2 - 1);
    let nodes: Vec<f64> = (0..npts).map(|k| k as f64 - (npts as f64 / 2.0 - 1.0)).collect();
    let weights = nodes
        .iter()
        .enumerate()
        .map(|(a, &xa)| {
            nodes
                .iter()
                .enumerate()
                .filter(|&(b, _)| b != a)
                .map(|(_, &xb)| (t - xb) / (xa - xb))
                .product()
        })
        .collect();
    (first, weights)
}

/// Band-limited (trigonometric) upsampling of a grid function by an integer
/// factor. The result lives on the grid with `factor·n` points and the same
/// radius.
pub(crate) fn upsample(values: &[f64], grid: &CartesianGrid, factor: usize) -> Result<Vec<f64>> {
    check_input(values, grid)?;
    let n = grid.n();
    if factor == 1 {
        return Ok(values.to_vec());
    }
    let big = n * factor;
    let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft2(&mut data, n, false);
    let mut padded = vec![Complex64::new(0.0, 0.0); big * big];
    let half = (n / 2) as i64;
    for k1 in 0..n {
        let s1 = signed_index(k1, n);
        if s1 == -half {
            continue;
        }
        let d1 = s1.rem_euclid(big as i64) as usize;
        for k2 in 0..n {
            let s2 = signed_index(k2, n);
            if s2 == -half {
                continue;
            }
            let d2 = s2.rem_euclid(big as i64) as usize;
            padded[d1 * big + d2] = data[k1 * n + k2];
        }
    }
    fft2(&mut padded, big, true);
    let scale = 1.0 / (n * n) as f64;
    Ok(padded.into_iter().map(|c| c.re * scale).collect())
}

fn plan(size: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut planner = FftPlanner::new();
    if inverse {
        planner.plan_fft_inverse(size)
    } else {
        planner.plan_fft_forward(size)
    }
}

/// Unnormalised in-place 2D FFT of a square row-major array.
pub(crate) fn fft2(data: &mut [Complex64], size: usize, inverse: bool) {
    let fft = plan(size, inverse);
    data.par_chunks_mut(size).for_each(|row| fft.process(row));
    let mut t = transpose(data, size);
    t.par_chunks_mut(size).for_each(|row| fft.process(row));
    let back = transpose(&t, size);
    data.copy_from_slice(&back);
}

fn transpose(data: &[Complex64], size: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); size * size];
    out.par_chunks_mut(size).enumerate().for_each(|(i, row)| {
        for (j, v) in row.iter_mut().enumerate() {
            *v = data[j * size + i];
        }
    });
    out
}

/// Angular series of each row of `values` (rows of `ntheta` samples).
/// Aliasing is reported once for the whole batch.
pub(crate) fn angular_series_rows(
    values: &[Complex64],
    ntheta: usize,
    lmax: usize,
) -> Result<Vec<AngularSeries>> {
    if ntheta < 2 * lmax + 2 {
        return Err(Error::InsufficientHarmonics { have: ntheta.saturating_sub(2) / 2, need: lmax });
    }
    if !values.len().is_multiple_of(ntheta) {
        return Err(Error::Shape { expected: ntheta * (values.len() / ntheta + 1), got: values.len() });
    }
    let fft = plan(ntheta, false);
    let rows: Vec<AngularSeries> = values
        .par_chunks(ntheta)
        .map(|row| {
            let mut buf = row.to_vec();
            fft.process(&mut buf);
            series_from_dft(&buf, lmax)
        })
        .collect();
    let total: f64 = rows.iter().map(AngularSeries::energy).sum();
    let top: f64 = rows.iter().map(AngularSeries::top_quarter_energy).sum();
    if total > 0.0 && top > 1e-8 * total {
        log::warn!(
            "angular series with lmax = {lmax} carry {:.3e} of their energy in the top quarter; \
             sampling may alias",
            top / total
        );
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(grid: &CartesianGrid) -> Vec<f64> {
        grid.sample(|x, y| (-(x * x + y * y) / 2.0).exp())
    }

    /// Direct 2D trapezoid quadrature of the continuous transform.
    fn direct_transform(values: &[f64], grid: &CartesianGrid, y1: f64, y2: f64) -> Complex64 {
        let n = grid.n();
        let h = grid.spacing();
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                let phase = -(y1 * grid.coord(i) + y2 * grid.coord(j));
                acc += Complex64::from_polar(values[i * n + j], phase);
            }
        }
        acc * h * h / (2.0 * PI)
    }

    #[test]
    fn grid_validation() {
        assert_eq!(CartesianGrid::new(8, 1.0), Err(Error::GridSize(8)));
        assert_eq!(CartesianGrid::new(17, 1.0), Err(Error::GridSize(17)));
        assert!(CartesianGrid::new(16, 0.0).is_err());
        let g = CartesianGrid::new(256, 8.0).unwrap();
        assert_eq!(g.spacing(), 1.0 / 16.0);
        assert!((g.nyquist() - 16.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn gaussian_transform_matches_closed_form() {
        let grid = CartesianGrid::new(128, 8.0).unwrap();
        let f = gaussian(&grid);
        let spec = fourier_transform_2d(&f, &grid).unwrap();
        let mut worst: f64 = 0.0;
        for (idx, v) in spec.values().iter().enumerate() {
            let (y1, y2) = spec.frequency(idx);
            let exact = (-(y1 * y1 + y2 * y2) / 2.0).exp();
            worst = worst.max((v - exact).norm());
        }
        assert!(worst < 1e-12, "worst {worst}");
        // Independent cross-check by direct quadrature at a few frequencies.
        for &(y1, y2) in &[(0.0, 0.0), (0.5, -0.25), (1.3, 0.7), (-2.0, 1.1), (3.0, 3.0)] {
            let direct = direct_transform(&f, &grid, y1, y2);
            let exact = (-(y1 * y1 + y2 * y2) / 2.0_f64).exp();
            assert!((direct - exact).norm() < 1e-12);
        }
    }

    #[test]
    fn derivative_gaussian_transform() {
        let grid = CartesianGrid::new(128, 8.0).unwrap();
        let f = grid.sample(|x, y| x * (-(x * x + y * y) / 2.0).exp());
        let spec = fourier_transform_2d(&f, &grid).unwrap();
        for (idx, v) in spec.values().iter().enumerate().step_by(97) {
            let (y1, y2) = spec.frequency(idx);
            let exact = Complex64::new(0.0, -y1) * (-(y1 * y1 + y2 * y2) / 2.0).exp();
            assert!((v - exact).norm() < 1e-12);
            let direct = direct_transform(&f, &grid, y1, y2);
            assert!((direct - exact).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_field_and_rejections() {
        let grid = CartesianGrid::new(32, 4.0).unwrap();
        let spec = fourier_transform_2d(&vec![0.0; grid.len()], &grid).unwrap();
        assert!(spec.values().iter().all(|c| c.norm() == 0.0));
        let mut bad = vec![0.0; grid.len()];
        bad[5] = f64::NAN;
        assert_eq!(fourier_transform_2d(&bad, &grid).unwrap_err(), Error::NonFinite("grid function"));
    }

    #[test]
    fn parseval_and_inverse() {
        let grid = CartesianGrid::new(64, 6.0).unwrap();
        let f = grid.sample(|x, y| ((x - 0.3).powi(2) + 2.0 * y * x) * (-(x * x + y * y)).exp());
        let spec = fourier_transform_2d(&f, &grid).unwrap();
        let lhs = grid.l2_norm_sq(&f);
        assert!((lhs - spec.l2_norm_sq()).abs() < 1e-6 * lhs);
        let back = inverse_fourier_transform_2d_real(&spec).unwrap();
        for (a, b) in f.iter().zip(&back) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn even_function_has_real_transform() {
        let grid = CartesianGrid::new(64, 6.0).unwrap();
        let f = grid.sample(|x, y| (1.0 + x * x * y * y) * (-(x * x + 2.0 * y * y) / 2.0).exp());
        let spec = fourier_transform_2d(&f, &grid).unwrap();
        let max = spec.values().iter().map(|c| c.norm()).fold(0.0, f64::max);
        // The Nyquist row has no mirror partner on the grid; skip it.
        let n = grid.n();
        for (idx, c) in spec.values().iter().enumerate() {
            if idx / n == n / 2 || idx % n == n / 2 {
                continue;
            }
            assert!(c.im.abs() <= 1e-10 * max);
        }
    }

    #[test]
    fn angular_examples() {
        let n = 64;
        let nodes: Vec<f64> = (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect();
        let ones: Vec<Complex64> = nodes.iter().map(|_| Complex64::new(1.0, 0.0)).collect();
        let s = angular_coefficients(&ones, 10).unwrap();
        assert!((s.get(0) - 1.0).norm() < 1e-15);
        assert!(s.iter().filter(|(l, _)| *l != 0).all(|(_, c)| c.norm() < 1e-15));

        let e2: Vec<Complex64> = nodes.iter().map(|&t| Complex64::from_polar(1.0, 2.0 * t)).collect();
        let s = angular_coefficients(&e2, 10).unwrap();
        assert!((s.get(2) - 1.0).norm() < 1e-14);
        assert!(s.iter().filter(|(l, _)| *l != 2).all(|(_, c)| c.norm() < 1e-14));

        let sin: Vec<Complex64> = nodes.iter().map(|&t| Complex64::new(t.sin(), 0.0)).collect();
        let s = angular_coefficients(&sin, 10).unwrap();
        // Oracle: direct 64-point quadrature of (2π)⁻¹∫ sinθ e^{∓iθ} dθ.
        for l in [-1i64, 1] {
            let direct: Complex64 = nodes
                .iter()
                .map(|&t| t.sin() * Complex64::from_polar(1.0, -(l as f64) * t))
                .sum::<Complex64>()
                / n as f64;
            assert!((s.get(l) - direct).norm() < 1e-15);
        }
        let half_i = Complex64::new(0.0, 2.0).inv();
        assert!((s.get(1) - half_i).norm() < 1e-15);
        assert!((s.get(-1) + half_i).norm() < 1e-15);
    }

    #[test]
    fn angular_needs_enough_samples() {
        let samples = vec![Complex64::new(1.0, 0.0); 16];
        assert!(angular_coefficients(&samples, 7).is_ok());
        assert!(matches!(
            angular_coefficients(&samples, 8),
            Err(Error::InsufficientHarmonics { .. })
        ));
    }

    #[test]
    fn angular_round_trip() {
        let n = 32;
        let samples: Vec<Complex64> = (0..n)
            .map(|j| Complex64::new((j as f64 * 0.37).sin() + 0.1 * j as f64, (j as f64).cos()))
            .collect();
        let s = angular_coefficients(&samples, n / 2 - 1).unwrap();
        let back = evaluate_on_angles(&s, n);
        // lmax = N/2 - 1 drops the Nyquist harmonic; restore it for the check.
        let nyq: Complex64 = samples
            .iter()
            .enumerate()
            .map(|(j, c)| if j % 2 == 0 { *c } else { -*c })
            .sum::<Complex64>()
            / n as f64;
        for (j, (a, b)) in samples.iter().zip(&back).enumerate() {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            assert!((a - b - nyq * sign).norm() < 1e-12);
        }
    }

    #[test]
    fn polar_resample_examples() {
        let grid = CartesianGrid::new(256, 8.0).unwrap();
        let f = gaussian(&grid);
        let spec = fourier_transform_2d_oversampled(&f, &grid, 4).unwrap();
        let pgrid = PolarFrequencyGrid::new(128, 8.0, 64).unwrap();
        let polar = polar_resample(&spec, &pgrid).unwrap();
        let mut worst: f64 = 0.0;
        for k in 0..pgrid.nq() {
            let exact = (-pgrid.q(k).powi(2) / 2.0).exp();
            for j in 0..pgrid.ntheta() {
                let v = polar[k * pgrid.ntheta() + j];
                worst = worst.max((v - exact).norm() / exact.max(1e-12));
            }
        }
        assert!(worst < 1e-3, "worst relative error {worst}");

        // Linear spectra are reproduced exactly.
        let lin = Spectrum2D::from_fn(CartesianGrid::new(32, 4.0).unwrap(), |y1, _| Complex64::new(y1, 0.0));
        let pg = PolarFrequencyGrid::new(8, 2.0, 16).unwrap();
        let out = polar_resample(&lin, &pg).unwrap();
        for k in 0..pg.nq() {
            for j in 0..pg.ntheta() {
                let exact = pg.q(k) * pg.phi(j).cos();
                assert!((out[k * 16 + j].re - exact).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn polar_resample_radial_symmetry() {
        let grid = CartesianGrid::new(64, 8.0).unwrap();
        let spec = fourier_transform_2d_oversampled(&gaussian(&grid), &grid, 4).unwrap();
        let pg = PolarFrequencyGrid::new(16, 4.0, 32).unwrap();
        let out = polar_resample(&spec, &pg).unwrap();
        for k in 0..pg.nq() {
            let row = &out[k * 32..(k + 1) * 32];
            for v in row {
                assert!((v - row[0]).norm() < 1e-6);
            }
        }
    }

    #[test]
    fn polar_resample_rejects_out_of_band() {
        let grid = CartesianGrid::new(16, 1.0).unwrap();
        let spec = fourier_transform_2d(&vec![0.0; 256], &grid).unwrap();
        let pg = PolarFrequencyGrid::new(4, 100.0, 8).unwrap();
        match polar_resample(&spec, &pg) {
            Err(Error::OutOfBand { nyquist, .. }) => assert!((nyquist - 8.0 * PI).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn upsample_is_band_limited_interpolation() {
        let grid = CartesianGrid::new(64, 8.0).unwrap();
        let f = gaussian(&grid);
        let up = upsample(&f, &grid, 2).unwrap();
        let fine = CartesianGrid::new(128, 8.0).unwrap();
        let exact = gaussian(&fine);
        for (a, b) in up.iter().zip(&exact) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn lagrange_reproduces_cubics() {
        let (first, w) = lagrange_stencil(3.3, 4);
        assert_eq!(first, 2);
        let p = |x: f64| 1.0 - 2.0 * x + 0.5 * x * x * x;
        let interp: f64 = w.iter().enumerate().map(|(k, wk)| wk * p((first + k as i64) as f64)).sum();
        assert!((interp - p(3.3)).abs() < 1e-12);
        let (_, w8) = lagrange_stencil(3.3, 8);
        assert!((w8.iter().sum::<f64>() - 1.0).abs() < 1e-13);
    }
}
