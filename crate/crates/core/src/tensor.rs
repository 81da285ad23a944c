//! Rank-m symmetric tensor fields in the plane.
//!
//! A field is stored as its `m + 1` distinct components: `f_j` is the
//! component with `m - j` indices equal to 1 and `j` indices equal to 2.
//! In the Fourier domain a solenoidal field has exactly one scalar degree of
//! freedom per frequency, `f̂(y) = a(y)·η^{⊗m}` with `η = (-sin φ, cos φ)`
//! orthogonal to `y = q(cos φ, sin φ)`.

use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{
    fourier_transform_2d, inverse_fourier_transform_2d, inverse_fourier_transform_2d_real, signed_index, CartesianGrid,
    PolarFrequencyGrid, Spectrum2D,
};

pub(crate) fn binomial(m: usize, j: usize) -> f64 {
    (0..j).fold(1.0, |acc, k| acc * (m - k) as f64 / (k + 1) as f64)
}

/// `η₁^{m-j} η₂^j` for `η = (-sin φ, cos φ)`.
pub fn eta_component(m: usize, j: usize, phi: f64) -> f64 {
    (-phi.sin()).powi((m - j) as i32) * phi.cos().powi(j as i32)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TensorField2D {
    m: usize,
    grid: CartesianGrid,
    components: Vec<Vec<f64>>,
}

impl TensorField2D {
    pub fn new(m: usize, grid: CartesianGrid, components: Vec<Vec<f64>>) -> Result<Self> {
        if components.len() != m + 1 {
            return Err(Error::Shape { expected: m + 1, got: components.len() });
        }
        for c in &components {
            if c.len() != grid.len() {
                return Err(Error::Shape { expected: grid.len(), got: c.len() });
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("tensor field component"));
            }
        }
        Ok(Self { m, grid, components })
    }

    pub fn zeros(m: usize, grid: CartesianGrid) -> Self {
        Self { m, grid, components: vec![vec![0.0; grid.len()]; m + 1] }
    }

    pub fn scalar(grid: CartesianGrid, values: Vec<f64>) -> Result<Self> {
        Self::new(0, grid, vec![values])
    }

    pub fn rank(&self) -> usize {
        self.m
    }

    pub fn grid(&self) -> &CartesianGrid {
        &self.grid
    }

    pub fn component(&self, j: usize) -> &[f64] {
        &self.components[j]
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    pub fn into_components(self) -> Vec<Vec<f64>> {
        self.components
    }

    /// Grid L² norm with symmetric-tensor weights, `(h² Σ_j C(m,j) Σ |f_j|²)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        self.components
            .iter()
            .enumerate()
            .map(|(j, c)| binomial(self.m, j) * self.grid.l2_norm_sq(c))
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.components.iter().flatten().fold(0.0, |a, v| a.max(v.abs()))
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.m != other.m {
            return Err(Error::InvalidParameter(format!(
                "rank mismatch: {} vs {}",
                self.m, other.m
            )));
        }
        if self.grid != other.grid {
            return Err(Error::InvalidParameter("fields live on different grids".into()));
        }
        Ok(())
    }

    /// `alpha·self + beta·other`.
    pub fn combine(&self, alpha: f64, other: &Self, beta: f64) -> Result<Self> {
        self.check_compatible(other)?;
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| alpha * x + beta * y).collect())
            .collect();
        Ok(Self { m: self.m, grid: self.grid, components })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(1.0, other, -1.0)
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let components = self
            .components
            .iter()
            .map(|c| c.iter().map(|v| alpha * v).collect())
            .collect();
        Self { m: self.m, grid: self.grid, components }
    }

    /// Relative L² distance `‖self - other‖ / ‖other‖`.
    pub fn relative_l2_error(&self, reference: &Self) -> Result<f64> {
        let diff = self.sub(reference)?.l2_norm();
        let base = reference.l2_norm();
        Ok(if base == 0.0 { diff } else { diff / base })
    }

    fn spectra(&self) -> Result<Vec<Spectrum2D>> {
        self.components.iter().map(|c| fourier_transform_2d(c, &self.grid)).collect()
    }
}

/// Solenoidal spectrum sampled on a polar grid: one complex amplitude per
/// node, components `a·(-sin φ)^{m-j}(cos φ)^j`.
#[derive(Clone, Debug)]
pub struct SolenoidalSpectrum {
    m: usize,
    pgrid: PolarFrequencyGrid,
    amplitude: Vec<Complex64>,
}

impl SolenoidalSpectrum {
    pub fn from_fn<F>(m: usize, pgrid: PolarFrequencyGrid, amplitude: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> Complex64,
    {
        let nt = pgrid.ntheta();
        let amplitude: Vec<Complex64> = (0..pgrid.len())
            .map(|idx| amplitude(pgrid.q(idx / nt), pgrid.phi(idx % nt)))
            .collect();
        if amplitude.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::NonFinite("solenoidal amplitude"));
        }
        Ok(Self { m, pgrid, amplitude })
    }

    pub fn rank(&self) -> usize {
        self.m
    }

    pub fn pgrid(&self) -> &PolarFrequencyGrid {
        &self.pgrid
    }

    pub fn amplitude(&self) -> &[Complex64] {
        &self.amplitude
    }

    /// Polar samples of `f̂_j`, indexed `k·ntheta + j`.
    pub fn component(&self, j: usize) -> Vec<Complex64> {
        let nt = self.pgrid.ntheta();
        self.amplitude
            .iter()
            .enumerate()
            .map(|(idx, a)| a * eta_component(self.m, j, self.pgrid.phi(idx % nt)))
            .collect()
    }
}

/// Spectral evaluation of `∂f_j/∂x + ∂f_{j+1}/∂y` for `j = 0..m`.
pub fn divergence_residual(f: &TensorField2D) -> Result<Vec<Vec<f64>>> {
    if f.rank() == 0 {
        return Err(Error::ScalarField);
    }
    let grid = *f.grid();
    let n = grid.n();
    let spectra = f.spectra()?;
    (0..f.rank())
        .map(|j| {
            let mut out = spectra[j].clone();
            let next = spectra[j + 1].values();
            out.values_mut().par_iter_mut().enumerate().for_each(|(idx, v)| {
                let (k1, k2) = (idx / n, idx % n);
                let nyq = k1 == n / 2 || k2 == n / 2;
                let d = grid.dual_spacing();
                let y1 = signed_index(k1, n) as f64 * d;
                let y2 = signed_index(k2, n) as f64 * d;
                *v = if nyq {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::i() * (*v * y1 + next[idx] * y2)
                };
            });
            inverse_fourier_transform_2d_real(&out)
        })
        .collect()
}

/// `max_j ‖residual_j‖₂ / ‖f‖₂`, zero for the zero field.
pub fn relative_divergence(f: &TensorField2D) -> Result<f64> {
    let res = divergence_residual(f)?;
    let norm = f.l2_norm();
    if norm == 0.0 {
        return Ok(0.0);
    }
    let grid = f.grid();
    Ok(res.iter().map(|r| grid.l2_norm_sq(r).sqrt()).fold(0.0, f64::max) / norm)
}

/// Builds a solenoidal field from a scalar amplitude `a(q, φ)` given in polar
/// frequency coordinates.
///
/// The amplitude must decay across the dual grid; for `m ≥ 1` the zero
/// frequency is set to zero since `η` is undefined there.
pub fn synthesize_solenoidal<F>(amplitude: F, m: usize, grid: &CartesianGrid) -> Result<TensorField2D>
where
    F: Fn(f64, f64) -> Complex64 + Sync,
{
    let spectrum = Spectrum2D::from_fn(*grid, |y1, y2| amplitude(y1.hypot(y2), y2.atan2(y1)));
    check_amplitude_decay(&spectrum)?;
    synthesize_from_amplitude(&spectrum, m)
}

fn check_amplitude_decay(spectrum: &Spectrum2D) -> Result<()> {
    let values = spectrum.values();
    if values.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
        return Err(Error::NonFinite("amplitude"));
    }
    let size = spectrum.size();
    let peak = values.iter().fold(0.0_f64, |a, c| a.max(c.norm()));
    if peak == 0.0 {
        return Ok(());
    }
    let edge = values
        .iter()
        .enumerate()
        .filter(|(idx, _)| idx / size == size / 2 || idx % size == size / 2)
        .fold(0.0_f64, |a, (_, c)| a.max(c.norm()));
    if edge > 1e-8 * peak {
        return Err(Error::NonDecayingAmplitude(edge / peak));
    }
    Ok(())
}

/// Components `f̂_j = a·η_j` on the dual grid followed by inverse transforms.
pub(crate) fn synthesize_from_amplitude(amplitude: &Spectrum2D, m: usize) -> Result<TensorField2D> {
    synthesize_with_dc(amplitude, m, None)
}

/// As [`synthesize_from_amplitude`]; `dc` overrides the zero-frequency value
/// of each component.
fn synthesize_with_dc(
    amplitude: &Spectrum2D,
    m: usize,
    dc: Option<&[Complex64]>,
) -> Result<TensorField2D> {
    let grid = amplitude.grid();
    let components = (0..=m)
        .map(|j| {
            let mut spec = amplitude.clone();
            spec.values_mut().par_iter_mut().enumerate().for_each(|(idx, v)| {
                let (y1, y2) = amplitude.frequency(idx);
                if y1 == 0.0 && y2 == 0.0 {
                    if let Some(dc) = dc {
                        *v = dc[j];
                    } else if m > 0 {
                        *v = Complex64::new(0.0, 0.0);
                    }
                } else {
                    *v *= eta_component(m, j, y2.atan2(y1));
                }
            });
            let values = inverse_fourier_transform_2d(&spec)?;
            let (re, im) = values
                .iter()
                .fold((0.0_f64, 0.0_f64), |(r, i), c| (r.max(c.re.abs()), i.max(c.im.abs())));
            if im > 1e-8 * re.max(f64::MIN_POSITIVE) {
                log::warn!(
                    "component {j} has imaginary part {im:.3e} (real {re:.3e}); amplitude is not \
                     Hermitian, keeping the real part"
                );
            }
            Ok(values.into_iter().map(|c| c.re).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    TensorField2D::new(m, grid, components)
}

/// Frequency-wise orthogonal projection `f̂ ↦ ⟨f̂, η^{⊗m}⟩ η^{⊗m}` onto
/// solenoidal fields, orthogonal for `⟨u, v⟩ = Σ_j C(m,j) u_j v̄_j`.
/// The zero frequency is left untouched.
pub fn solenoidal_project(f: &TensorField2D) -> Result<TensorField2D> {
    let m = f.rank();
    if m == 0 {
        return Ok(f.clone());
    }
    let spectra = f.spectra()?;
    let dc: Vec<Complex64> = spectra.iter().map(|s| s.values()[0]).collect();
    let amplitude = amplitude_of(&spectra, m);
    synthesize_with_dc(&amplitude, m, Some(&dc))
}

fn amplitude_of(spectra: &[Spectrum2D], m: usize) -> Spectrum2D {
    let mut out = spectra[0].clone();
    let weights: Vec<f64> = (0..=m).map(|j| binomial(m, j)).collect();
    out.values_mut().par_iter_mut().enumerate().for_each(|(idx, v)| {
        let (y1, y2) = spectra[0].frequency(idx);
        let phi = y2.atan2(y1);
        *v = (0..=m)
            .map(|j| spectra[j].values()[idx] * (weights[j] * eta_component(m, j, phi)))
            .sum();
    });
    out
}

/// Amplitude `⟨f̂, η^{⊗m}⟩` of a field on its dual grid.
pub fn solenoidal_amplitude(f: &TensorField2D) -> Result<Spectrum2D> {
    Ok(amplitude_of(&f.spectra()?, f.rank()))
}

/// Kinds of Gaussian test fields.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldKind {
    Solenoidal,
    Potential,
    Generic,
}

impl FromStr for FieldKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "solenoidal" => Ok(Self::Solenoidal),
            "potential" => Ok(Self::Potential),
            "generic" => Ok(Self::Generic),
            other => Err(Error::InvalidParameter(format!("unknown field kind {other:?}"))),
        }
    }
}

/// Offset of the potential part of a generic field from its centre.
pub const GENERIC_POTENTIAL_SHIFT: (f64, f64) = (0.5, -0.25);

/// Probabilists' Hermite polynomial `He_n`.
fn hermite(n: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, x);
    if n == 0 {
        return prev;
    }
    for k in 1..n {
        let next = x * cur - k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `∂_x^a ∂_y^b` of the unit Gaussian centred at `c`.
fn gaussian_derivative(a: usize, b: usize, c: (f64, f64)) -> impl Fn(f64, f64) -> f64 + Sync {
    let sign = if (a + b).is_multiple_of(2) { 1.0 } else { -1.0 };
    move |x, y| {
        let (u, v) = (x - c.0, y - c.1);
        sign * hermite(a, u) * hermite(b, v) * (-(u * u + v * v) / 2.0).exp()
    }
}

fn solenoidal_components(m: usize, grid: &CartesianGrid, c: (f64, f64)) -> Vec<Vec<f64>> {
    // f_j = (-1)^{m-j} ∂_x^j ∂_y^{m-j} g, amplitude a = i^m q^m ĝ.
    (0..=m)
        .map(|j| {
            let d = gaussian_derivative(j, m - j, c);
            let sign = if (m - j).is_multiple_of(2) { 1.0 } else { -1.0 };
            grid.sample(|x, y| sign * d(x, y))
        })
        .collect()
}

fn potential_components(m: usize, grid: &CartesianGrid, c: (f64, f64)) -> Vec<Vec<f64>> {
    // Symmetrised gradient of v_k = ∂_y^k g (k < m):
    // f_j = ((m-j)/m) ∂_x ∂_y^j g + (j/m) ∂_y^j g.
    (0..=m)
        .map(|j| {
            let dx = gaussian_derivative(1, j, c);
            let dy = gaussian_derivative(0, j, c);
            let (a, b) = ((m - j) as f64 / m as f64, j as f64 / m as f64);
            grid.sample(|x, y| a * dx(x, y) + b * dy(x, y))
        })
        .collect()
}

/// Deterministic Gaussian test field of unit width centred at the origin.
///
/// * `Solenoidal`: `f_j = (-1)^{m-j} ∂_x^j ∂_y^{m-j} g`, i.e. amplitude
///   `a(q, φ) = i^m q^m e^{-q²/2}`; for `m = 0` this is `g = e^{-|x|²/2}` and
///   for `m = 1` it is `(-∂_y g, ∂_x g)`.
/// * `Potential` (`m ≥ 1`): the symmetrised gradient `dv` of
///   `v_k = ∂_y^k g`, `k = 0..m`, i.e.
///   `f_j = ((m-j)/m)·∂_x∂_y^j g + (j/m)·∂_y^j g`; `m = 1` gives `(∂_x g, ∂_y g)`.
/// * `Generic`: the solenoidal field plus a potential field centred at
///   [`GENERIC_POTENTIAL_SHIFT`]; for `m = 0` it is `g`.
pub fn gaussian_test_field(m: usize, kind: FieldKind, grid: &CartesianGrid) -> Result<TensorField2D> {
    gaussian_test_field_at(m, kind, grid, (0.0, 0.0))
}

/// [`gaussian_test_field`] with every Gaussian translated by `center`.
pub fn gaussian_test_field_at(
    m: usize,
    kind: FieldKind,
    grid: &CartesianGrid,
    center: (f64, f64),
) -> Result<TensorField2D> {
    let shifted = (center.0 + GENERIC_POTENTIAL_SHIFT.0, center.1 + GENERIC_POTENTIAL_SHIFT.1);
    let reach = |c: (f64, f64)| c.0.abs().max(c.1.abs());
    let extent = match kind {
        FieldKind::Generic if m > 0 => reach(center).max(reach(shifted)),
        _ => reach(center),
    };
    let required = 6.0 + extent;
    if grid.radius() < required {
        return Err(Error::DecayPrecondition { radius: grid.radius(), required });
    }
    let components = match (kind, m) {
        (FieldKind::Potential, 0) => {
            return Err(Error::InvalidParameter("potential fields need rank m ≥ 1".into()))
        }
        (FieldKind::Solenoidal, _) | (FieldKind::Generic, 0) => solenoidal_components(m, grid, center),
        (FieldKind::Potential, _) => potential_components(m, grid, center),
        (FieldKind::Generic, _) => solenoidal_components(m, grid, center)
            .into_iter()
            .zip(potential_components(m, grid, shifted))
            .map(|(a, b)| a.iter().zip(&b).map(|(x, y)| x + y).collect())
            .collect(),
    };
    TensorField2D::new(m, *grid, components)
}

/// Amplitude `a(q, φ)` of the centred solenoidal Gaussian test field.
pub fn solenoidal_test_amplitude(m: usize) -> impl Fn(f64, f64) -> Complex64 + Sync {
    let phase = Complex64::i().powu(m as u32);
    move |q, _| phase * q.powi(m as i32) * (-q * q / 2.0).exp()
}
