//! Acceptance suite at the default desk scale (n = 256, R = 8, np = 257,
//! ntheta = 128, nq = 512, qmax = 8). Prints one line per criterion and
//! exits non-zero if any criterion fails.
//!
//! Pass a substring as argument to run matching criteria only.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tensoray::grid::{angular_coefficients, evaluate_on_angles, AngularSeries, CartesianGrid};
use tensoray::plan::SamplingPlan;
use tensoray::range::{check_moment_conditions, invert, invert_coefficient_route, InvertOptions};
use tensoray::ray::{parity_residual, Sinogram};
use tensoray::slice::{
    coefficient_slice_comparison, measured_slice_constant, scalar_slice_comparison,
    solenoidal_slice_comparison, tilde_coefficients, transform_sinogram, Convention, QGrid,
    SliceComparison,
};
use tensoray::sobolev::{field_norm, reshetnyak_with_sinogram, SobolevParams};
use tensoray::tensor::{
    gaussian_test_field, gaussian_test_field_at, solenoidal_project, FieldKind, TensorField2D,
};

const N: usize = 256;
const RADIUS: f64 = 8.0;
const SLICE_TOL: f64 = 1e-3;
/// Shift of the off-centre Gaussian in criterion 1.
const SHIFT: (f64, f64) = (0.5, -0.25);
/// Ring level above which the slice diagnostic is reported.
const DIAGNOSTIC_LEVEL: f64 = 1e-9;

struct Suite {
    grid: CartesianGrid,
    plan: SamplingPlan,
    lines: Vec<(String, bool)>,
}

impl Suite {
    fn record(&mut self, name: &str, pass: bool, detail: String) {
        let tag = if pass { "PASS" } else { "FAIL" };
        println!("[{tag}] {name}: {detail}");
        self.lines.push((name.to_string(), pass));
    }

    fn field(&self, m: usize, kind: FieldKind) -> TensorField2D {
        gaussian_test_field(m, kind, &self.grid).unwrap()
    }
}

fn slice_detail(label: &str, c: &SliceComparison, tol: f64) -> (bool, String) {
    let r = c.residual();
    (
        r < tol,
        format!("{label} residual {r:.3e} (rings above {DIAGNOSTIC_LEVEL:.0e}: {:.3e})", c.residual_above(DIAGNOSTIC_LEVEL)),
    )
}

fn criterion_1(s: &mut Suite) {
    let centred = s.field(0, FieldKind::Solenoidal);
    let shifted = gaussian_test_field_at(0, FieldKind::Solenoidal, &s.grid, SHIFT).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for (label, f) in [("centred", &centred), ("shifted", &shifted)] {
        let c = scalar_slice_comparison(f, &s.plan).unwrap();
        let (pass, d) = slice_detail(label, &c, SLICE_TOL);
        ok &= pass;
        parts.push(d);
    }
    s.record("1 scalar slice < 1e-3", ok, parts.join("; "));
}

fn criterion_2(s: &mut Suite) {
    let mut ok = true;
    let mut parts = Vec::new();
    for m in 1..=2 {
        let f = s.field(m, FieldKind::Solenoidal);
        let c = solenoidal_slice_comparison(&f, Convention::Lemma, &s.plan).unwrap();
        let (pass, d) = slice_detail(&format!("m={m}"), &c, SLICE_TOL);
        ok &= pass;
        parts.push(d);
    }
    s.record("2a solenoidal slice < 1e-3 (lemma)", ok, parts.join("; "));

    let target = (2.0 * PI).sqrt();
    let mut ok = true;
    let mut parts = Vec::new();
    for m in 1..=2 {
        let k = measured_slice_constant(&s.field(m, FieldKind::Solenoidal), &s.plan).unwrap();
        ok &= ((k - target) / target).abs() < 0.01;
        parts.push(format!("m={m} constant {k:.7}"));
    }
    s.record("2b fst constant within 1% of sqrt(2 pi)", ok, parts.join("; "));
}

fn criterion_3(s: &mut Suite) {
    let mut ok = true;
    let mut parts = Vec::new();
    for m in 0..=2 {
        let f = s.field(m, FieldKind::Solenoidal);
        let c = coefficient_slice_comparison(&f, Convention::Lemma, &s.plan).unwrap();
        let (pass, d) = slice_detail(&format!("m={m}"), &c, SLICE_TOL);
        ok &= pass;
        parts.push(d);
    }
    s.record("3 coefficient slice < 1e-3", ok, parts.join("; "));
}

fn criterion_4(s: &mut Suite) {
    let params = [
        SobolevParams::new(0.0, 0.0, 0.0),
        SobolevParams::new(1.0, 0.0, 0.0),
        SobolevParams::new(0.0, 1.0, 0.0),
        SobolevParams::new(1.0, 0.5, -0.25),
    ];
    let mut ratios = Vec::new();
    for m in 0..=2 {
        let f = s.field(m, FieldKind::Solenoidal);
        let psi = s.plan.forward(&f).unwrap();
        for p in &params {
            ratios.push(reshetnyak_with_sinogram(&f, &psi, p, Convention::Lemma, &s.plan).unwrap().ratio);
        }
    }
    let n = ratios.len() as f64;
    let mean = ratios.iter().sum::<f64>() / n;
    let sd = (ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let (lo, hi) = ratios.iter().fold((f64::MAX, f64::MIN), |(a, b), &r| (a.min(r), b.max(r)));
    let ok = lo >= 0.99 && hi <= 1.01 && sd <= 5e-3;
    s.record(
        "4 Reshetnyak ratio in [0.99, 1.01], sd <= 5e-3",
        ok,
        format!("{} ratios in [{lo:.6}, {hi:.6}], sd {sd:.3e}", ratios.len()),
    );
}

/// Composite Simpson rule on `[a, b]` with `n` (even) intervals.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n).map(|k| f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 }).sum();
    h / 3.0 * (f(a) + f(b) + inner)
}

fn criterion_5(s: &mut Suite) {
    let f = s.field(0, FieldKind::Solenoidal);
    // Radial oracle: (1/2π) ∫ q (1+q²)^s e^{-q²} dq for the unit Gaussian.
    let oracle = |sp: f64| simpson(|q| q * (1.0 + q * q).powf(sp) * (-q * q).exp(), 0.0, 12.0, 20_000) / (2.0 * PI);

    let a = field_norm(&f, &SobolevParams::new(0.0, 0.0, 0.0), &s.plan).unwrap().norm_sq;
    let target = 1.0 / (4.0 * PI);
    s.record(
        "5a norm^2 at (0,0,0) = 1/(4 pi) +- 1e-3",
        (a - target).abs() <= 1e-3,
        format!("measured {a:.9}, expected {target:.9}, oracle {:.9}", oracle(0.0)),
    );

    let b = field_norm(&f, &SobolevParams::new(0.0, 1.0, 0.0), &s.plan).unwrap().norm_sq;
    let target = 3.0 / (8.0 * PI);
    s.record(
        "5b norm^2 at (0,1,0) = 3/(8 pi) +- 1e-3",
        (b - target).abs() <= 1e-3,
        format!("measured {b:.9}, expected {target:.9}, oracle {:.9}", oracle(1.0)),
    );
}

fn relative_l2(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let norm: f64 = b.iter().map(|y| y * y).sum();
    (diff / norm).sqrt()
}

fn criterion_6(s: &mut Suite) {
    let mut round_ok = true;
    let mut route_ok = true;
    let mut parts = Vec::new();
    for m in 0..=2 {
        let f = s.field(m, FieldKind::Generic);
        let reference = solenoidal_project(&f).unwrap();
        let psi = s.plan.forward(&f).unwrap();
        let rec = invert(&psi, &s.grid, Convention::Lemma, &InvertOptions::default()).unwrap();
        let err = rec.relative_l2_error(&reference).unwrap();
        let fm = invert_coefficient_route(&psi, &s.grid, Convention::Lemma).unwrap();
        let routes = relative_l2(&fm, rec.component(m));
        round_ok &= err < 2e-2;
        route_ok &= routes < 1e-3;
        parts.push(format!("m={m} round trip {err:.3e}, routes {routes:.3e}"));
    }
    s.record("6 inversion < 2e-2, routes agree to 1e-3", round_ok && route_ok, parts.join("; "));
}

fn criterion_7(s: &mut Suite) {
    let mut ok = true;
    let mut parts = Vec::new();
    for m in 1..=2 {
        let f = s.field(m, FieldKind::Generic);
        let potential = f.sub(&solenoidal_project(&f).unwrap()).unwrap();
        let full = s.plan.forward(&f).unwrap().max_abs();
        let rest = s.plan.forward(&potential).unwrap().max_abs();
        let ratio = rest / full;
        ok &= ratio < 1e-3;
        parts.push(format!("m={m} ratio {ratio:.3e}"));
    }
    s.record("7 potential parts annihilated < 1e-3", ok, parts.join("; "));
}

/// Forward outputs of every generated test field with a non-trivial
/// sinogram.
fn forward_outputs(s: &Suite) -> Vec<(String, Sinogram)> {
    let mut out = Vec::new();
    for m in 0..=2 {
        for kind in [FieldKind::Solenoidal, FieldKind::Generic] {
            if m == 0 && kind == FieldKind::Generic {
                continue;
            }
            out.push((format!("m={m} {kind:?}"), s.plan.forward(&s.field(m, kind)).unwrap()));
        }
    }
    let shifted = gaussian_test_field_at(0, FieldKind::Solenoidal, &s.grid, SHIFT).unwrap();
    out.push(("m=0 shifted".into(), s.plan.forward(&shifted).unwrap()));
    out
}

fn criteria_8_9(s: &mut Suite) {
    let outputs = forward_outputs(s);
    let qgrid = QGrid::from_plan(&s.plan).unwrap();
    let (mut worst_p, mut worst_c) = (0.0_f64, 0.0_f64);
    let mut worst_moment = 0.0_f64;
    let mut moments_ok = true;
    for (_, psi) in &outputs {
        worst_p = worst_p.max(parity_residual(psi).unwrap());
        let spec = transform_sinogram(psi, &qgrid, Convention::Lemma).unwrap();
        worst_c = worst_c.max(spec.coefficient_parity_residual());
        let report = check_moment_conditions(psi, 4, 1e-5).unwrap();
        moments_ok &= report.pass();
        worst_moment = worst_moment.max(report.worst_fraction());
    }
    s.record(
        "8 parity and coefficient parity < 1e-8",
        worst_p < 1e-8 && worst_c < 1e-8,
        format!("{} outputs, parity {worst_p:.3e}, coefficient parity {worst_c:.3e}", outputs.len()),
    );

    let violator = Sinogram::from_fn(0, s.plan.np, s.plan.ntheta, RADIUS, |p, th| (-p * p).exp() * th.cos()).unwrap();
    let v = check_moment_conditions(&violator, 4, 1e-5).unwrap();
    let v0 = v.orders[0].forbidden_fraction;
    s.record(
        "9 moments: forward outputs < 1e-5, violator > 0.9 at r=0",
        moments_ok && !v.orders[0].pass && v0 > 0.9,
        format!("worst forward fraction {worst_moment:.3e}, violator r=0 fraction {v0:.6}"),
    );
}

fn criterion_10(s: &mut Suite) {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let (np, ntheta, band) = (33, s.plan.ntheta, 40_i64);
    let lmax = ntheta / 2 - 1;
    let mut worst = 0.0_f64;
    for m in 0..=4 {
        let mut rows = Vec::with_capacity(np * ntheta);
        for _ in 0..np {
            // Real band-limited row: Hermitian coefficients up to |l| = band.
            let mut series = AngularSeries::zeros(lmax);
            series.set(0, Complex64::new(rng.gen_range(-1.0..1.0), 0.0));
            for l in 1..=band {
                let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                series.set(l, c);
                series.set(-l, c.conj());
            }
            rows.extend(evaluate_on_angles(&series, ntheta).into_iter().map(|c| c.re));
        }
        let psi = Sinogram::new(m, np, ntheta, 1.0, rows).unwrap();
        let pointwise = psi.times_sin_power(m);
        for i in 0..np {
            let row: Vec<Complex64> = (0..ntheta).map(|j| Complex64::new(psi.get(i, j), 0.0)).collect();
            let coeffs = angular_coefficients(&row, lmax).unwrap();
            let tilde = evaluate_on_angles(&tilde_coefficients(&coeffs, m, lmax - m).unwrap(), ntheta);
            let scale = row.iter().fold(0.0_f64, |a, c| a.max(c.norm()));
            for (j, t) in tilde.iter().enumerate() {
                worst = worst.max((t - pointwise.get(i, j)).norm() / scale);
            }
        }
    }
    s.record("10 tilde vs pointwise sin^m < 1e-10 (m <= 4)", worst < 1e-10, format!("max deviation {worst:.3e}"));
}

type Criterion = (&'static str, fn(&mut Suite));

fn main() -> ExitCode {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let criteria: [Criterion; 9] = [
        ("scalar_slice", criterion_1),
        ("solenoidal_slice", criterion_2),
        ("coefficient_slice", criterion_3),
        ("reshetnyak", criterion_4),
        ("norm_anchors", criterion_5),
        ("inversion", criterion_6),
        ("kernel", criterion_7),
        ("parity_moments", criteria_8_9),
        ("tilde", criterion_10),
    ];
    let mut suite = Suite {
        grid: CartesianGrid::new(N, RADIUS).unwrap(),
        plan: SamplingPlan::default(),
        lines: Vec::new(),
    };
    for (name, run) in criteria {
        if !filters.is_empty() && !filters.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        run(&mut suite);
        println!("    ({name}: {:.1} s)", start.elapsed().as_secs_f64());
    }
    let failed: Vec<&str> = suite.lines.iter().filter(|(_, p)| !p).map(|(n, _)| n.as_str()).collect();
    println!("acceptance: {} passed, {} failed", suite.lines.len() - failed.len(), failed.len());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        for name in failed {
            println!("failed: {name}");
        }
        ExitCode::FAILURE
    }
}
