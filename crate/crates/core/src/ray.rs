//! Forward ray transform of symmetric tensor fields.
//!
//! Lines are parameterised by `(p, θ)`: the line through `p·(-sin θ, cos θ)`
//! with direction `ξ = (cos θ, sin θ)`, so
//! `I_m f(p, θ) = ∫ Σ_j C(m,j) f_j(x(t)) cos^{m-j}θ sin^jθ dt`.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{upsample, CartesianGrid};
use crate::tensor::{binomial, TensorField2D};

/// Band-limited upsampling factor applied before local interpolation.
const UPSAMPLE: usize = 4;

/// Interpolation nodes per axis.
const STENCIL: usize = 8;

/// Ray-transform samples `ψ(p_i, θ_j)` stored p-major (`i·ntheta + j`).
///
/// `p_i` is equispaced on `[pmin, pmax]` (symmetric for data produced by
/// [`forward`]), `θ_j = 2πj/ntheta`.
#[derive(Clone, Debug, PartialEq)]
pub struct Sinogram {
    m: usize,
    np: usize,
    ntheta: usize,
    pmin: f64,
    pmax: f64,
    samples: Vec<f64>,
}

impl Sinogram {
    /// Sinogram on the symmetric range `[-pmax, pmax]`.
    pub fn new(m: usize, np: usize, ntheta: usize, pmax: f64, samples: Vec<f64>) -> Result<Self> {
        Self::with_range(m, np, ntheta, -pmax, pmax, samples)
    }

    pub fn with_range(
        m: usize,
        np: usize,
        ntheta: usize,
        pmin: f64,
        pmax: f64,
        samples: Vec<f64>,
    ) -> Result<Self> {
        if np < 2 {
            return Err(Error::InvalidParameter(format!("np must be at least 2, got {np}")));
        }
        if ntheta == 0 || !ntheta.is_multiple_of(2) {
            return Err(Error::AngularCount(ntheta));
        }
        if !(pmin.is_finite() && pmax.is_finite() && pmax > pmin) {
            return Err(Error::InvalidParameter(format!("invalid p range [{pmin}, {pmax}]")));
        }
        if samples.len() != np * ntheta {
            return Err(Error::Shape { expected: np * ntheta, got: samples.len() });
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("sinogram"));
        }
        Ok(Self { m, np, ntheta, pmin, pmax, samples })
    }

    pub fn zeros(m: usize, np: usize, ntheta: usize, pmax: f64) -> Result<Self> {
        Self::new(m, np, ntheta, pmax, vec![0.0; np * ntheta])
    }

    /// Samples `g(p, θ)` on the symmetric grid.
    pub fn from_fn<F>(m: usize, np: usize, ntheta: usize, pmax: f64, g: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> f64 + Sync,
    {
        let mut s = Self::zeros(m, np, ntheta, pmax)?;
        let (pv, tv): (Vec<f64>, Vec<f64>) =
            ((0..np).map(|i| s.p(i)).collect(), (0..ntheta).map(|j| s.theta(j)).collect());
        s.samples.par_chunks_mut(ntheta).enumerate().for_each(|(i, row)| {
            for (j, v) in row.iter_mut().enumerate() {
                *v = g(pv[i], tv[j]);
            }
        });
        if s.samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("sinogram"));
        }
        Ok(s)
    }

    pub fn rank(&self) -> usize {
        self.m
    }

    pub fn np(&self) -> usize {
        self.np
    }

    pub fn ntheta(&self) -> usize {
        self.ntheta
    }

    pub fn pmin(&self) -> f64 {
        self.pmin
    }

    pub fn pmax(&self) -> f64 {
        self.pmax
    }

    pub fn dp(&self) -> f64 {
        (self.pmax - self.pmin) / (self.np - 1) as f64
    }

    /// `p_i`; on a symmetric range `p(np-1-i) == -p(i)` exactly.
    pub fn p(&self, i: usize) -> f64 {
        let last = (self.np - 1) as f64;
        let u = (2 * i) as f64 - last;
        0.5 * (self.pmin + self.pmax) + 0.5 * (self.pmax - self.pmin) * u / last
    }

    pub fn theta(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.ntheta as f64
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.samples[i * self.ntheta + j]
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn is_symmetric(&self) -> bool {
        (self.pmin + self.pmax).abs() <= 1e-12 * self.pmax.abs().max(1.0)
    }

    pub(crate) fn require_symmetric(&self) -> Result<()> {
        if self.is_symmetric() {
            Ok(())
        } else {
            Err(Error::AsymmetricPGrid { min: self.pmin, max: self.pmax })
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// `α·self + β·other` on identical sampling.
    pub fn combine(&self, alpha: f64, other: &Self, beta: f64) -> Result<Self> {
        if (self.m, self.np, self.ntheta) != (other.m, other.np, other.ntheta)
            || self.pmin != other.pmin
            || self.pmax != other.pmax
        {
            return Err(Error::InvalidParameter("sinograms have different sampling".into()));
        }
        let samples =
            self.samples.iter().zip(&other.samples).map(|(a, b)| alpha * a + beta * b).collect();
        Ok(Self { samples, ..self.clone() })
    }

    /// Pointwise product with `sin^k θ`.
    pub fn times_sin_power(&self, k: usize) -> Self {
        let weights: Vec<f64> =
            (0..self.ntheta).map(|j| self.theta(j).sin().powi(k as i32)).collect();
        let mut out = self.clone();
        out.samples.par_chunks_mut(self.ntheta).for_each(|row| {
            for (v, w) in row.iter_mut().zip(&weights) {
                *v *= w;
            }
        });
        out
    }
}

/// Components resampled onto a finer grid for cheap local interpolation.
struct FineField {
    size: usize,
    radius: f64,
    spacing: f64,
    components: Vec<Vec<f64>>,
}

impl FineField {
    fn new(f: &TensorField2D) -> Result<Self> {
        let grid = f.grid();
        let components = f
            .components()
            .iter()
            .map(|c| upsample(c, grid, UPSAMPLE))
            .collect::<Result<Vec<_>>>()?;
        let size = grid.n() * UPSAMPLE;
        Ok(Self { size, radius: grid.radius(), spacing: grid.spacing() / UPSAMPLE as f64, components })
    }

    /// `Σ_j w_j f_j(x, y)` by tensor-product Lagrange interpolation on
    /// `STENCIL` nodes per axis; nodes outside the grid read as zero.
    #[inline]
    fn contract(&self, x: f64, y: f64, w: &[f64]) -> f64 {
        const HALF: i64 = STENCIL as i64 / 2;
        let ux = (x + self.radius) / self.spacing;
        let uy = (y + self.radius) / self.spacing;
        let fx = ux.floor();
        let fy = uy.floor();
        let (ix, iy) = (fx as i64 - HALF + 1, fy as i64 - HALF + 1);
        let size = self.size as i64;
        if ix + STENCIL as i64 <= 0 || iy + STENCIL as i64 <= 0 || ix >= size || iy >= size {
            return 0.0;
        }
        let wx = lagrange_weights::<STENCIL>(ux - fx);
        let wy = lagrange_weights::<STENCIL>(uy - fy);
        let j0 = iy.max(0);
        let j1 = (iy + STENCIL as i64).min(size);
        let mut acc = 0.0;
        for (a, wa) in wx.iter().enumerate() {
            let i = ix + a as i64;
            if i < 0 || i >= size {
                continue;
            }
            let row = i as usize * self.size;
            for (c, wc) in self.components.iter().zip(w) {
                let line = &c[row + j0 as usize..row + j1 as usize];
                let ws = &wy[(j0 - iy) as usize..(j1 - iy) as usize];
                let v: f64 = line.iter().zip(ws).map(|(a, b)| a * b).sum();
                acc += wa * wc * v;
            }
        }
        acc
    }
}

/// Lagrange weights on nodes `1 - N/2, …, N/2` at offset `t ∈ [0, 1)`.
#[inline]
fn lagrange_weights<const N: usize>(t: f64) -> [f64; N] {
    let shift = (N / 2) as f64 - 1.0;
    let mut out = [0.0; N];
    for (a, o) in out.iter_mut().enumerate() {
        let xa = a as f64 - shift;
        let mut num = 1.0;
        let mut den = 1.0;
        for b in 0..N {
            if b != a {
                let xb = b as f64 - shift;
                num *= t - xb;
                den *= xa - xb;
            }
        }
        *o = num / den;
    }
    out
}

/// Ray transform of `f` on `np` offsets in `[-pmax, pmax]` and `ntheta`
/// equispaced directions.
///
/// Trapezoid rule in `t` with step `h/2` over `|t| ≤ √2·R` (symmetric nodes),
/// components sampled by band-limited upsampling followed by cubic
/// interpolation.
pub fn forward(f: &TensorField2D, np: usize, ntheta: usize, pmax: f64) -> Result<Sinogram> {
    let grid: CartesianGrid = *f.grid();
    if !(pmax.is_finite() && pmax >= grid.radius() * (1.0 - 1e-12)) {
        return Err(Error::PmaxTooSmall { pmax, radius: grid.radius() });
    }
    let mut out = Sinogram::zeros(f.rank(), np, ntheta, pmax)?;
    let m = f.rank();
    let fine = FineField::new(f)?;

    let dt = grid.spacing() / 2.0;
    let nt = (std::f64::consts::SQRT_2 * grid.radius() / dt).ceil() as i64;
    let thetas: Vec<(f64, f64, Vec<f64>)> = (0..ntheta)
        .map(|j| {
            let (s, c) = out.theta(j).sin_cos();
            let w = (0..=m)
                .map(|k| binomial(m, k) * c.powi((m - k) as i32) * s.powi(k as i32))
                .collect();
            (c, s, w)
        })
        .collect();
    let ps: Vec<f64> = (0..np).map(|i| out.p(i)).collect();

    out.samples.par_chunks_mut(ntheta).enumerate().for_each(|(i, row)| {
        let p = ps[i];
        for (v, (c, s, w)) in row.iter_mut().zip(&thetas) {
            let (x0, y0) = (-p * s, p * c);
            // Neumaier-compensated sum over the line.
            let (mut acc, mut comp) = (0.0_f64, 0.0_f64);
            for k in -nt..=nt {
                let t = k as f64 * dt;
                let term = fine.contract(x0 + t * c, y0 + t * s, w);
                let sum = acc + term;
                comp += if acc.abs() >= term.abs() { (acc - sum) + term } else { (term - sum) + acc };
                acc = sum;
            }
            acc += comp;
            // Endpoint nodes sit outside the square, so the trapezoid end
            // corrections vanish.
            *v = acc * dt;
        }
    });
    Ok(out)
}

/// `max |ψ(-p, θ+π) - (-1)^m ψ(p, θ)| / max |ψ|` (0 for ψ ≡ 0).
pub fn parity_residual(psi: &Sinogram) -> Result<f64> {
    psi.require_symmetric()?;
    let (np, nth) = (psi.np, psi.ntheta);
    let sign = if psi.m.is_multiple_of(2) { 1.0 } else { -1.0 };
    let scale = psi.max_abs();
    if scale == 0.0 {
        return Ok(0.0);
    }
    let worst = (0..np)
        .into_par_iter()
        .map(|i| {
            (0..nth)
                .map(|j| {
                    let mirrored = psi.get(np - 1 - i, (j + nth / 2) % nth);
                    (mirrored - sign * psi.get(i, j)).abs()
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    Ok(worst / scale)
}
