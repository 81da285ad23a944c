//! Range description and inversion of the ray transform on solenoidal
//! fields.
//!
//! Inversion goes through the amplitude of the solenoidal spectrum:
//! `a(q, φ) = (-1)^m ψ̂(q, φ - π/2)` under `Convention::Lemma`, followed by
//! synthesis of every component. The coefficient route rebuilds only `f̂_m`
//! from `(f̂_m)_l = (-i)^l (ψ̃)̂_l`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{
    angular_series_rows, inverse_fourier_transform_2d_real, lagrange_stencil, AngularSeries,
    CartesianGrid, Spectrum2D,
};
use crate::plan::SamplingPlan;
use crate::ray::{parity_residual, Sinogram};
use crate::slice::{p_transform, tilde_coefficients, warn_if_truncated, Convention};
use crate::sobolev::{reshetnyak_with_sinogram, SobolevParams};
use crate::tensor::{synthesize_from_amplitude, solenoidal_project, TensorField2D};

/// Harmonic content of one p-moment `μ_r(θ) = ∫ ψ(p, θ) p^r dp`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentOrder {
    pub r: usize,
    /// `(l, |(μ_r)_l|)` for every retained harmonic.
    pub coefficients: Vec<(i64, f64)>,
    pub admissible_energy: f64,
    pub forbidden_energy: f64,
    pub forbidden_fraction: f64,
    pub pass: bool,
}

/// Moment conditions for orders `0..=rmax`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub m: usize,
    pub rmax: usize,
    pub tol: f64,
    pub orders: Vec<MomentOrder>,
}

impl MomentReport {
    pub fn pass(&self) -> bool {
        self.orders.iter().all(|o| o.pass)
    }

    pub fn worst_fraction(&self) -> f64 {
        self.orders.iter().map(|o| o.forbidden_fraction).fold(0.0, f64::max)
    }
}

/// True when harmonic `l` may appear in the `r`-th moment of rank-`m` data:
/// `|l| ≤ r + m` and `l ≡ r + m (mod 2)`.
pub fn admissible_harmonic(l: i64, r: usize, m: usize) -> bool {
    let d = (r + m) as i64;
    l.abs() <= d && (l - d).rem_euclid(2) == 0
}

/// Relative accuracy of the moment quadrature: edge tails and moment
/// energies are measured against `M_r` at this level.
pub const MOMENT_RESOLUTION: f64 = 1e-8;

/// Checks that every p-moment of order `r ≤ rmax` is a trigonometric
/// polynomial of degree `≤ r + m` with parity `r + m`.
///
/// The forbidden fraction is `‖forbidden‖² / max(‖total‖², floor)` with
/// `floor = max(1e-24, (1e-8·M_r)²)` and `M_r = max_θ ∫ |p|^r |ψ| dp`.
/// A moment whose edge integrand `|p|^r |ψ|` at `|p| = pmax` exceeds
/// `MOMENT_RESOLUTION·M_r` is rejected as insufficiently decayed.
pub fn check_moment_conditions(psi: &Sinogram, rmax: usize, tol: f64) -> Result<MomentReport> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let (np, nth, m) = (psi.np(), psi.ntheta(), psi.rank());
    let dp = psi.dp();
    let lmax = nth / 2 - 1;
    let samples = psi.samples();
    let weight = |i: usize| if i == 0 || i == np - 1 { 0.5 * dp } else { dp };

    let mut orders = Vec::with_capacity(rmax + 1);
    for r in 0..=rmax {
        let mut moment = vec![Complex64::new(0.0, 0.0); nth];
        let mut absolute = vec![0.0_f64; nth];
        for i in 0..np {
            let pr = psi.p(i).powi(r as i32);
            let w = weight(i) * pr;
            for j in 0..nth {
                let v = samples[i * nth + j];
                moment[j] += w * v;
                absolute[j] += (w * v).abs();
            }
        }
        let big = absolute.iter().fold(0.0_f64, |a, &v| a.max(v));
        let edge = (0..nth)
            .map(|j| {
                (psi.p(0).abs().powi(r as i32) * samples[j].abs())
                    .max(psi.p(np - 1).abs().powi(r as i32) * samples[(np - 1) * nth + j].abs())
            })
            .fold(0.0_f64, f64::max);
        if big > 0.0 && edge > MOMENT_RESOLUTION * big {
            return Err(Error::InsufficientDecay { order: r });
        }
        let series = &angular_series_rows(&moment, nth, lmax)?[0];
        let (mut good, mut bad) = (0.0, 0.0);
        let coefficients = series
            .iter()
            .map(|(l, c)| {
                if admissible_harmonic(l, r, m) {
                    good += c.norm_sqr();
                } else {
                    bad += c.norm_sqr();
                }
                (l, c.norm())
            })
            .collect();
        let floor = 1e-24_f64.max((MOMENT_RESOLUTION * big).powi(2));
        let fraction = bad / (good + bad).max(floor);
        orders.push(MomentOrder {
            r,
            coefficients,
            admissible_energy: good,
            forbidden_energy: bad,
            forbidden_fraction: fraction,
            pass: fraction < tol,
        });
    }
    Ok(MomentReport { m, rmax, tol, orders })
}

/// Options for [`invert`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InvertOptions {
    /// Smooth even cutoff vanishing for `q ≤ q_lo` and equal to 1 for
    /// `q ≥ 2·q_lo`.
    pub low_frequency_cutoff: Option<f64>,
}

impl InvertOptions {
    /// Cutoff at two dual-grid spacings, `q_lo = 2·(2π/2R)`.
    pub fn with_grid_cutoff(grid: &CartesianGrid) -> Self {
        Self { low_frequency_cutoff: Some(2.0 * grid.dual_spacing()) }
    }

    fn weight(&self, q: f64) -> f64 {
        match self.low_frequency_cutoff {
            None => 1.0,
            Some(lo) if q <= lo => 0.0,
            Some(lo) if q >= 2.0 * lo => 1.0,
            Some(lo) => {
                let u = (q - lo) / lo;
                smooth_step(u)
            }
        }
    }
}

/// C^∞ transition from 0 at `u = 0` to 1 at `u = 1`.
fn smooth_step(u: f64) -> f64 {
    let g = |x: f64| if x <= 0.0 { 0.0 } else { (-1.0 / x).exp() };
    g(u) / (g(u) + g(1.0 - u))
}

/// Extra q nodes below zero so interpolation stencils near the origin stay
/// inside the table.
const NEGATIVE_NODES: usize = 4;
const Q_STENCIL: usize = 8;

/// Angular series of `ψ̂(q, ·)` on a fine uniform q table
/// `q_k = (k - NEGATIVE_NODES)·dq`.
struct FineSpectrum {
    dq: f64,
    qtop: f64,
    series: Vec<AngularSeries>,
}

impl FineSpectrum {
    /// Tabulates up to the smaller of the sinogram Nyquist frequency and the
    /// largest frequency on the target grid.
    fn new(psi: &Sinogram, grid: &CartesianGrid, convention: Convention) -> Result<Self> {
        let pext = psi.pmin().abs().max(psi.pmax().abs());
        let dq = PI / (16.0 * pext);
        let qtop = (PI / psi.dp()).min(std::f64::consts::SQRT_2 * grid.nyquist());
        let count = (qtop / dq).ceil() as usize + Q_STENCIL + NEGATIVE_NODES;
        let qs: Vec<f64> = (0..count).map(|k| (k as f64 - NEGATIVE_NODES as f64) * dq).collect();
        let values = p_transform(psi, &qs, convention.transform_scale());
        let nth = psi.ntheta();
        let series = angular_series_rows(&values, nth, nth / 2 - 1)?;
        Ok(Self { dq, qtop, series })
    }

    fn lmax(&self) -> usize {
        self.series[0].lmax()
    }

    fn map_series(&self, f: impl Fn(&AngularSeries) -> Result<AngularSeries> + Send + Sync) -> Result<Self> {
        let series = self.series.par_iter().map(f).collect::<Result<Vec<_>>>()?;
        Ok(Self { dq: self.dq, qtop: self.qtop, series })
    }

    /// Series interpolated to radius `q` and evaluated at `angle`.
    fn eval(&self, q: f64, angle: f64) -> Complex64 {
        let (first, w) = lagrange_stencil(q / self.dq + NEGATIVE_NODES as f64, Q_STENCIL);
        let lmax = self.lmax() as i64;
        let rot = Complex64::from_polar(1.0, angle);
        let mut phase = Complex64::from_polar(1.0, -(lmax as f64) * angle);
        let mut acc = Complex64::new(0.0, 0.0);
        for l in -lmax..=lmax {
            let c: Complex64 = w
                .iter()
                .enumerate()
                .map(|(a, wa)| self.series[(first + a as i64) as usize].get(l) * *wa)
                .sum();
            acc += c * phase;
            phase *= rot;
        }
        acc
    }
}

fn check_range(psi: &Sinogram) {
    warn_if_truncated(psi);
    match parity_residual(psi) {
        Ok(res) if res > 1e-6 => log::warn!(
            "sinogram parity residual {res:.3e}; data are not in the range, inverting the \
             nearest range element"
        ),
        Err(e) => log::warn!("parity not checked: {e}"),
        _ => {}
    }
}

/// Spectrum on the dual grid of `grid` from a function of `(q, φ)`;
/// Nyquist row and column are zeroed.
fn spectrum_on_grid<F>(grid: &CartesianGrid, qtop: f64, f: F) -> Spectrum2D
where
    F: Fn(f64, f64) -> Complex64 + Sync,
{
    let n = grid.n();
    Spectrum2D::from_fn(*grid, |y1, y2| {
        let half = n as f64 / 2.0 * grid.dual_spacing();
        let q = y1.hypot(y2);
        if y1 <= -half + 1e-9 || y2 <= -half + 1e-9 || q > qtop {
            Complex64::new(0.0, 0.0)
        } else {
            f(q, y2.atan2(y1))
        }
    })
}

/// Solenoidal field whose ray transform is `ψ`.
///
/// Out-of-range data are inverted on a best-effort basis with a warning.
pub fn invert(
    psi: &Sinogram,
    grid: &CartesianGrid,
    convention: Convention,
    options: &InvertOptions,
) -> Result<TensorField2D> {
    check_range(psi);
    let m = psi.rank();
    let table = FineSpectrum::new(psi, grid, convention)?;
    let sign = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
    let c = sign / convention.slice_constant();
    let amplitude = spectrum_on_grid(grid, table.qtop, |q, phi| {
        if q == 0.0 {
            // Zero frequency is kept for m = 0 only.
            return if m == 0 { table.series[NEGATIVE_NODES].get(0) * c } else { Complex64::new(0.0, 0.0) };
        }
        table.eval(q, phi - PI / 2.0) * (c * options.weight(q))
    });
    synthesize_from_amplitude(&amplitude, m)
}

/// Component `f_m` rebuilt from `(f̂_m)_l(q) = (-i)^l (ψ̃)̂_l(q)`.
pub fn invert_coefficient_route(
    psi: &Sinogram,
    grid: &CartesianGrid,
    convention: Convention,
) -> Result<Vec<f64>> {
    check_range(psi);
    let m = psi.rank();
    let table = FineSpectrum::new(psi, grid, convention)?;
    let lmax = table.lmax();
    if lmax < m {
        return Err(Error::InsufficientHarmonics { have: lmax, need: m });
    }
    let c = 1.0 / convention.slice_constant();
    let tilde = table.map_series(|s| {
        let mut t = tilde_coefficients(s, m, lmax - m)?;
        for l in -((lmax - m) as i64)..=(lmax - m) as i64 {
            t.set(l, t.get(l) * Complex64::new(0.0, -1.0).powi(l as i32) * c);
        }
        Ok(t)
    })?;
    let spectrum = spectrum_on_grid(grid, tilde.qtop, |q, phi| {
        if q == 0.0 {
            return if m == 0 { tilde.series[NEGATIVE_NODES].get(0) } else { Complex64::new(0.0, 0.0) };
        }
        tilde.eval(q, phi)
    });
    inverse_fourier_transform_2d_real(&spectrum)
}

/// Moment entry of a [`RoundtripReport`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    pub r: usize,
    pub forbidden_fraction: f64,
    pub pass: bool,
}

/// Forward-inverse error, isometry ratio and moment verdict for one field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundtripReport {
    pub roundtrip_l2_rel: f64,
    pub reshetnyak_ratio: f64,
    pub convention: Convention,
    pub params: SobolevParams,
    pub moments: Vec<MomentSummary>,
}

impl RoundtripReport {
    pub fn moments_pass(&self) -> bool {
        self.moments.iter().all(|m| m.pass)
    }
}

/// Highest moment order and tolerance used by [`roundtrip_report`].
pub const REPORT_RMAX: usize = 4;
pub const REPORT_MOMENT_TOL: f64 = 1e-5;

/// Runs forward, inversion, isometry and moment checks on `f`. The
/// reconstruction is compared with the solenoidal part of `f`.
pub fn roundtrip_report(
    f: &TensorField2D,
    params: &SobolevParams,
    convention: Convention,
    plan: &SamplingPlan,
) -> Result<RoundtripReport> {
    let reference = solenoidal_project(f)?;
    if reference.max_abs() == 0.0 {
        return Err(Error::Degenerate("zero field: the isometry ratio is undefined".into()));
    }
    let psi = plan.forward(f)?;
    let reconstruction = invert(&psi, f.grid(), convention, &InvertOptions::default())?;
    let roundtrip_l2_rel = reconstruction.relative_l2_error(&reference)?;
    let iso = match reshetnyak_with_sinogram(&reference, &psi, params, convention, plan) {
        Err(Error::ZeroNorm) => {
            return Err(Error::Degenerate("field norm is zero: the isometry ratio is undefined".into()))
        }
        other => other?,
    };
    let moments = check_moment_conditions(&psi, REPORT_RMAX, REPORT_MOMENT_TOL)?
        .orders
        .iter()
        .map(|o| MomentSummary { r: o.r, forbidden_fraction: o.forbidden_fraction, pass: o.pass })
        .collect();
    Ok(RoundtripReport {
        roundtrip_l2_rel,
        reshetnyak_ratio: iso.ratio,
        convention,
        params: *params,
        moments,
    })
}
