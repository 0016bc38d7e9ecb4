//! Mean oscillation and sampled BMO lower bounds, doubling and reverse Hölder
//! checks for powers of negative subharmonic functions, and the Green
//! function and Riesz decomposition on a disc.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, LabError, Result};
use crate::funcspace::{subharmonic_certificate, ScalarField, SingularPoint, Tags, Verdict};
use crate::ineqlab::{digest, verdict_for, InequalityReport, RatioReport};
use crate::quadcore::{
    integrate_ball, integrate_interval, integrate_radial_with_breaks, mc_values, sample_balls, sample_balls_avoiding,
    sphere_mean, BallSpec, DimensionConstants, MeasuredValue, Opts1d, QuadMode, QuadratureSpec,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanOscillationResult {
    pub ball: BallSpec,
    /// `f_B`.
    pub mean: MeasuredValue,
    /// `|B|^{-1} ∫_B |f - f_B|`.
    pub oscillation: MeasuredValue,
}

/// Mean and mean oscillation of `f` over `ball`. Deterministic quadrature
/// splits the radial profile at its crossings of `f_B`; Monte Carlo uses one
/// sample stream for both passes.
pub fn mean_oscillation(f: &ScalarField, ball: &BallSpec, spec: &QuadratureSpec) -> Result<MeanOscillationResult> {
    spec.validate()?;
    ensure(f.dim() == ball.dim(), || "field and ball dimensions differ".into())?;
    let vol = ball.volume();
    if spec.mode == QuadMode::MonteCarlo {
        let vals = mc_values(|x| f.eval(x), ball, spec.max_samples, spec.seed);
        return two_pass(ball, &vals, spec.poison_fraction);
    }
    if f.is_radial_about(&ball.center) {
        let dims = DimensionConstants::new(ball.dim())?;
        let c = ball.center.clone();
        let profile = |t: f64| {
            let mut x = c.clone();
            x[0] += t;
            f.eval(&x)
        };
        let mean = integrate_radial_with_breaks(profile, &dims, 0.0, ball.radius, &[], spec)?.scale(1.0 / vol);
        let m = mean.value;
        let crossings = level_crossings(&profile, m, ball.radius);
        let osc = integrate_radial_with_breaks(|t| (profile(t) - m).abs(), &dims, 0.0, ball.radius, &crossings, spec)?
            .scale(1.0 / vol);
        return Ok(MeanOscillationResult {
            ball: ball.clone(),
            mean,
            oscillation: MeasuredValue::new(osc.value, osc.err + mean.err),
        });
    }
    let mean = integrate_ball(f, ball, spec)?.scale(1.0 / vol);
    let m = mean.value;
    let g = f.eval_fn();
    let mut dev = ScalarField::new(f.dim(), "osc", move |x| (g(x) - m).abs()).with_singulars(f.singular_points());
    if let Some(s) = f.support() {
        if s.contains_ball(ball) {
            dev = dev.with_support(s.clone());
        }
    }
    let osc = integrate_ball(&dev, ball, spec)?.scale(1.0 / vol);
    Ok(MeanOscillationResult { ball: ball.clone(), mean, oscillation: MeasuredValue::new(osc.value, osc.err + mean.err) })
}

fn two_pass(ball: &BallSpec, vals: &[f64], poison: f64) -> Result<MeanOscillationResult> {
    let good: Vec<f64> = vals.iter().copied().filter(|v| v.is_finite()).collect();
    let bad = vals.len() - good.len();
    if bad > 0 && bad as f64 > poison * vals.len() as f64 {
        return Err(LabError::PoisonedIntegrand { fraction: bad as f64 / vals.len() as f64 });
    }
    ensure(good.len() >= 2, || "need at least two finite samples".into())?;
    let n = good.len() as f64;
    let mean = good.iter().sum::<f64>() / n;
    let var = good.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let devs: Vec<f64> = good.iter().map(|v| (v - mean).abs()).collect();
    let osc = devs.iter().sum::<f64>() / n;
    let var_d = devs.iter().map(|d| (d - osc).powi(2)).sum::<f64>() / (n - 1.0);
    let below = good.iter().filter(|v| **v < mean).count() as f64 / n;
    let err_mean = (var / n).sqrt();
    Ok(MeanOscillationResult {
        ball: ball.clone(),
        mean: MeasuredValue::new(mean, err_mean),
        oscillation: MeasuredValue::new(osc, (var_d / n).sqrt() + (2.0 * below - 1.0).abs() * err_mean),
    })
}

/// Radii in `(0, r)` where `profile` crosses `level`, refined by bisection.
fn level_crossings(profile: &dyn Fn(f64) -> f64, level: f64, r: f64) -> Vec<f64> {
    const GRID: usize = 512;
    let mut out = Vec::new();
    let t = |i: usize| r * (i as f64 + 0.5) / GRID as f64;
    let mut prev = profile(t(0)) - level;
    for i in 1..GRID {
        let cur = profile(t(i)) - level;
        if prev.is_finite() && cur.is_finite() && (prev < 0.0) != (cur < 0.0) {
            let (mut a, mut b, mut fa) = (t(i - 1), t(i), prev);
            for _ in 0..100 {
                let m = 0.5 * (a + b);
                if !(m > a && m < b) {
                    break;
                }
                let fm = profile(m) - level;
                if (fm < 0.0) == (fa < 0.0) {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                }
            }
            out.push(0.5 * (a + b));
        }
        prev = cur;
    }
    out
}

// ---------------------------------------------------------------------------
// BMO lower bounds

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BmoOptions {
    pub samples_per_ball: usize,
    /// Radius range as fractions of the domain radius.
    pub radius_fraction: (f64, f64),
    /// Number of points on the running-maximum curve.
    pub curve_points: usize,
}

impl Default for BmoOptions {
    fn default() -> Self {
        Self { samples_per_ball: 2048, radius_fraction: (1e-3, 1.0), curve_points: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BmoEstimate {
    /// Largest sampled oscillation. Never an upper bound for the norm.
    pub lower_bound: f64,
    /// Largest `oscillation - 3 err`, a lower bound that survives sampling noise.
    pub certified_lower_bound: f64,
    pub witness: BallSpec,
    pub balls_tried: usize,
    pub seed: u64,
    /// `(balls_tried, running max)` pairs.
    pub curve: Vec<(usize, f64)>,
}

fn ball_seed(seed: u64, i: u64) -> u64 {
    // splitmix64 step so neighbouring balls get unrelated streams
    let mut z = seed ^ i.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn bmo_lower_bound(f: &ScalarField, domain: &BallSpec, ball_count: usize, seed: u64) -> Result<BmoEstimate> {
    bmo_lower_bound_with(f, domain, ball_count, seed, &BmoOptions::default())
}

pub fn bmo_lower_bound_with(
    f: &ScalarField,
    domain: &BallSpec,
    ball_count: usize,
    seed: u64,
    opts: &BmoOptions,
) -> Result<BmoEstimate> {
    let oscs = sampled_oscillations(f, domain, ball_count, seed, opts)?;
    summarize(&oscs, seed, opts.curve_points)
}

fn sampled_oscillations(
    f: &ScalarField,
    domain: &BallSpec,
    ball_count: usize,
    seed: u64,
    opts: &BmoOptions,
) -> Result<Vec<MeanOscillationResult>> {
    ensure(ball_count > 0, || "ball_count must be positive".into())?;
    ensure(f.dim() == domain.dim(), || "field and domain dimensions differ".into())?;
    let (lo, hi) = opts.radius_fraction;
    let balls = sample_balls(domain, ball_count, seed, (lo * domain.radius, hi * domain.radius))?;
    balls
        .par_iter()
        .enumerate()
        .map(|(i, b)| {
            let vals = mc_values(|x| f.eval(x), b, opts.samples_per_ball, ball_seed(seed, i as u64));
            two_pass(b, &vals, 1e-3)
        })
        .collect()
}

fn summarize(oscs: &[MeanOscillationResult], seed: u64, curve_points: usize) -> Result<BmoEstimate> {
    let mut best = 0usize;
    let mut best_cert = f64::NEG_INFINITY;
    let mut running = Vec::with_capacity(oscs.len());
    for (i, o) in oscs.iter().enumerate() {
        if o.oscillation.value > oscs[best].oscillation.value {
            best = i;
        }
        best_cert = best_cert.max(o.oscillation.value - 3.0 * o.oscillation.err);
        running.push(oscs[best].oscillation.value);
    }
    let k = curve_points.max(1).min(oscs.len());
    let curve = (1..=k)
        .map(|j| {
            let m = (oscs.len() * j).div_ceil(k);
            (m, running[m - 1])
        })
        .collect();
    Ok(BmoEstimate {
        lower_bound: oscs[best].oscillation.value,
        certified_lower_bound: best_cert.max(0.0),
        witness: oscs[best].ball.clone(),
        balls_tried: oscs.len(),
        seed,
        curve,
    })
}

/// Sampled BMO evidence for a psh function on a ball of `C^m ≅ R^{2m}`,
/// with the oscillation of a sum compared to the sum of oscillations on the
/// same samples when `parts` are given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PshProbe {
    pub estimate: BmoEstimate,
    pub part_estimates: Vec<BmoEstimate>,
    /// `osc(Σ f_k) ≤ Σ osc(f_k)` on every sampled ball.
    pub subadditive: bool,
}

pub fn bmo_psh_probe(
    psi: &ScalarField,
    parts: &[ScalarField],
    region: &BallSpec,
    ball_count: usize,
    seed: u64,
) -> Result<PshProbe> {
    ensure(psi.dim().is_multiple_of(2), || "psh probe needs an even real dimension".into())?;
    let opts = BmoOptions::default();
    let whole = sampled_oscillations(psi, region, ball_count, seed, &opts)?;
    let split: Vec<Vec<MeanOscillationResult>> =
        parts.iter().map(|p| sampled_oscillations(p, region, ball_count, seed, &opts)).collect::<Result<_>>()?;
    let subadditive = parts.is_empty()
        || (0..whole.len()).all(|i| {
            let s: f64 = split.iter().map(|v| v[i].oscillation.value).sum();
            whole[i].oscillation.value <= s * (1.0 + 1e-12) + 1e-12
        });
    Ok(PshProbe {
        estimate: summarize(&whole, seed, opts.curve_points)?,
        part_estimates: split.iter().map(|v| summarize(v, seed, opts.curve_points)).collect::<Result<_>>()?,
        subadditive,
    })
}

// ---------------------------------------------------------------------------
// Doubling and reverse Hölder

/// `|ψ|^γ`, keeping the radial center and singular points of `ψ`.
pub fn abs_power(psi: &ScalarField, gamma: f64) -> ScalarField {
    let g = psi.eval_fn();
    let mut f = ScalarField::new(psi.dim(), format!("|{}|^{gamma}", psi.label()), move |x| g(x).abs().powf(gamma))
        .with_singulars(psi.singular_points());
    if let Some(c) = psi.radial_center() {
        f = f.radial(c.to_vec());
    }
    f
}

/// `-(-ψ)^γ`, subharmonic when `ψ` is negative subharmonic and `0 < γ ≤ 1`.
pub fn negative_power(psi: &ScalarField, gamma: f64) -> ScalarField {
    let tags = Tags { subharmonic: psi.tags.subharmonic, negative: psi.tags.negative, ..Tags::default() };
    let g = psi.eval_fn();
    let mut f = ScalarField::new(psi.dim(), format!("-(-{})^{gamma}", psi.label()), move |x| -(-g(x)).powf(gamma))
        .with_singulars(
            &psi.singular_points()
                .iter()
                .map(|s| SingularPoint { laplacian_mass: 0.0, ..s.clone() })
                .collect::<Vec<_>>(),
        )
        .with_tags(tags);
    if let Some(c) = psi.radial_center() {
        f = f.radial(c.to_vec());
    }
    f
}

fn certified_on(psi: &ScalarField, region: &BallSpec, seed: u64) -> Result<bool> {
    let c = subharmonic_certificate(psi, region, 512, seed)?;
    Ok(c.verdict == Verdict::Holds && !(c.max_value >= 0.0))
}

/// `∫_{2B}|ψ|^γ ≤ 2^n ∫_B |ψ|^γ`.
pub fn check_doubling(psi: &ScalarField, gamma: f64, ball: &BallSpec, spec: &QuadratureSpec) -> Result<InequalityReport> {
    ensure(gamma > 0.0 && gamma <= 1.0, || format!("gamma {gamma} outside (0, 1]"))?;
    ensure(psi.dim() == ball.dim(), || "field and ball dimensions differ".into())?;
    let labels = ["doubling", psi.label(), &gamma.to_string(), &format!("{ball:?}")];
    let big = ball.scaled(2.0);
    if !certified_on(psi, &big, spec.seed)? {
        return Ok(InequalityReport::inconclusive("doubling", &labels));
    }
    let f = abs_power(psi, gamma);
    let lhs = integrate_ball(&f, &big, spec)?;
    let rhs = integrate_ball(&f, ball, spec)?.scale(2f64.powi(ball.dim() as i32));
    Ok(InequalityReport::new("doubling", lhs, rhs, &labels))
}

/// Doubling checks on `count` seeded balls in `domain` whose doubles keep a
/// clearance from the singular points of `ψ`.
pub fn doubling_sweep(
    psi: &ScalarField,
    gamma: f64,
    domain: &BallSpec,
    count: usize,
    seed: u64,
    spec: &QuadratureSpec,
) -> Result<Vec<InequalityReport>> {
    let avoid: Vec<Vec<f64>> = psi.singular_points().iter().map(|s| s.at.clone()).collect();
    let balls = sample_balls_avoiding(domain, count, seed, (0.05 * domain.radius, 0.25 * domain.radius), &avoid, 3.0, 1e-3)?;
    balls.par_iter().map(|b| check_doubling(psi, gamma, b, spec)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReverseHolderReport {
    pub gamma: f64,
    pub ball: BallSpec,
    /// `[avg_B |ψ|^{γn/(n-2)}]^{(n-2)/n} / avg_B |ψ|^γ`.
    pub rho: MeasuredValue,
    /// `(1-γ)² ρ`.
    pub normalized: MeasuredValue,
    /// As `rho` with the denominator averaged over `2B`.
    pub weak_rho: MeasuredValue,
    pub inputs_digest: String,
}

pub fn check_reverse_holder(psi: &ScalarField, gamma: f64, ball: &BallSpec, spec: &QuadratureSpec) -> Result<ReverseHolderReport> {
    ensure(gamma > 0.0 && gamma < 1.0, || format!("gamma {gamma} outside (0, 1)"))?;
    let n = ball.dim();
    ensure(n > 2, || "reverse Hölder needs n > 2".into())?;
    ensure(psi.dim() == n, || "field and ball dimensions differ".into())?;
    let nf = n as f64;
    let q = gamma * nf / (nf - 2.0);
    let vol = ball.volume();
    let top = integrate_ball(&abs_power(psi, q), ball, spec)?.scale(1.0 / vol).powf((nf - 2.0) / nf);
    let f = abs_power(psi, gamma);
    let bottom = integrate_ball(&f, ball, spec)?.scale(1.0 / vol);
    let big = ball.scaled(2.0);
    let bottom2 = integrate_ball(&f, &big, spec)?.scale(1.0 / big.volume());
    let rho = top.div(bottom);
    Ok(ReverseHolderReport {
        gamma,
        ball: ball.clone(),
        rho,
        normalized: rho.scale((1.0 - gamma).powi(2)),
        weak_rho: top.div(bottom2),
        inputs_digest: digest(&["reverse-holder", psi.label(), &gamma.to_string(), &format!("{ball:?}")]),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReverseHolderSweep {
    pub reports: Vec<ReverseHolderReport>,
    /// Normalized ratio at the smallest `γ`.
    pub fitted_constant: f64,
    /// Every normalized ratio is at most twice the fitted constant.
    pub within_band: bool,
}

pub fn reverse_holder_sweep(psi: &ScalarField, gammas: &[f64], ball: &BallSpec, spec: &QuadratureSpec) -> Result<ReverseHolderSweep> {
    ensure(!gammas.is_empty(), || "empty gamma grid".into())?;
    let mut g = gammas.to_vec();
    g.sort_by(f64::total_cmp);
    let reports: Vec<ReverseHolderReport> = g.iter().map(|&x| check_reverse_holder(psi, x, ball, spec)).collect::<Result<_>>()?;
    let c = reports[0].normalized.value;
    let within_band = reports.iter().all(|r| r.normalized.value <= 2.0 * c + 3.0 * (r.normalized.err + reports[0].normalized.err));
    Ok(ReverseHolderSweep { reports, fitted_constant: c, within_band })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneReport {
    pub radii: Vec<f64>,
    pub means: Vec<MeasuredValue>,
    pub verdict: Verdict,
}

/// Sphere means `M(center, r)` on an increasing grid are nondecreasing.
pub fn spherical_mean_monotone(psi: &ScalarField, center: &[f64], radii: &[f64], spec: &QuadratureSpec) -> Result<MonotoneReport> {
    ensure(radii.windows(2).all(|w| w[0] < w[1]), || "radii must increase".into())?;
    let means: Vec<MeasuredValue> = radii.iter().map(|&r| sphere_mean(psi, center, r, spec)).collect::<Result<_>>()?;
    let mut verdict = Verdict::Holds;
    for w in means.windows(2) {
        let tol = 3.0 * (w[0].err + w[1].err) + 1e-13 * w[0].value.abs().max(w[1].value.abs());
        if !(w[1].value >= w[0].value - tol) {
            verdict = if w[1].value.is_nan() { Verdict::Inconclusive } else { Verdict::Violated };
            break;
        }
    }
    Ok(MonotoneReport { radii: radii.to_vec(), means, verdict })
}

// ---------------------------------------------------------------------------
// Disc potential theory

/// `g_R(z, w) = log|z - w| + log(2R / |4R² - z w̄|)`, the negative Green
/// function of the disc of radius `2R`.
pub fn green_disc(r: f64, z: Complex64, w: Complex64) -> Result<f64> {
    ensure(r > 0.0, || "R must be positive".into())?;
    ensure(z != w, || "Green function has a logarithmic pole at z = w".into())?;
    let rim = 2.0 * r * (1.0 + 1e-12);
    ensure(z.norm() <= rim && w.norm() <= rim, || "points must lie in the closed disc of radius 2R".into())?;
    Ok((z - w).norm().ln() + (2.0 * r / (4.0 * r * r - z * w.conj()).norm()).ln())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RieszGrid {
    /// Lattice points per axis.
    pub points_per_axis: usize,
    /// Lattice covers `|z| ≤ frac · 2R`.
    pub frac: f64,
    pub rel_tol: f64,
}

impl Default for RieszGrid {
    fn default() -> Self {
        Self { points_per_axis: 15, frac: 0.85, rel_tol: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RieszSample {
    pub z: [f64; 2],
    pub psi: f64,
    pub u: f64,
    pub v: f64,
    /// Poisson integral of the boundary values of `ψ`.
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RieszPieces {
    pub r: f64,
    /// `∫_{B_{2R}} Δψ`.
    pub laplacian_mass: f64,
    /// `∮_{|ζ|=2R} ∂ψ/∂n`.
    pub boundary_flux: f64,
    pub samples: Vec<RieszSample>,
    /// `max |ψ - (u + v + h)|`.
    pub max_residual: f64,
    /// Largest 5-point Laplacian of `ψ - u - v` on the lattice.
    pub max_discrete_laplacian: f64,
    /// `min (h - ψ)`.
    pub min_h_minus_psi: f64,
    pub max_h: f64,
    /// `sup_{B_R} |v|`.
    pub v_sup_inner: f64,
    /// `sup_{B_R} |v| / (|log R| ∫Δψ)`, the empirical constant.
    pub v_bound_ratio: f64,
    pub tolerance: f64,
    pub invariants_hold: bool,
}

struct DiscQuad {
    two_r: f64,
    opts: Opts1d,
}

impl DiscQuad {
    /// `∫_0^{2π} g(θ) dθ` with the `θ`-range split at `split`, singular-lo on both halves.
    fn angle(&self, g: &dyn Fn(f64) -> f64, split: Option<f64>) -> Result<f64> {
        match split {
            Some(a) => {
                let o = self.opts.clone().singular_lo(true);
                let s = integrate_interval(|s| g(a + s) + g(a - s), 0.0, PI, &o)?;
                Ok(s.value)
            }
            None => Ok(integrate_interval(g, 0.0, 2.0 * PI, &self.opts)?.value),
        }
    }

    /// `∫_{|ζ|<2R} k(ζ) Δψ(ζ) dA` in polar coordinates about the origin,
    /// split at `|ζ| = |z|` and `arg ζ = arg z` when `z` is given.
    fn area(&self, lap: &(dyn Fn(&[f64]) -> f64 + Sync), kernel: &dyn Fn(f64, f64) -> f64, z: Option<[f64; 2]>) -> Result<f64> {
        let (rz, az) = match z {
            Some(p) => (p[0].hypot(p[1]), Some(p[1].atan2(p[0]))),
            None => (0.0, None),
        };
        let breaks = if rz > 0.0 && rz < self.two_r { vec![rz] } else { Vec::new() };
        let first_err = std::cell::RefCell::new(None);
        let radial = |r: f64| {
            let g = |th: f64| {
                let (x, y) = (r * th.cos(), r * th.sin());
                kernel(x, y) * lap(&[x, y])
            };
            let split = if (r - rz).abs() < 1e-3 * self.two_r { az } else { None };
            match self.angle(&g, split) {
                Ok(v) => v * r,
                Err(e) => {
                    first_err.borrow_mut().get_or_insert(e);
                    0.0
                }
            }
        };
        let o = integrate_interval(radial, 0.0, self.two_r, &self.opts.clone().breakpoints(breaks))?;
        match first_err.into_inner() {
            Some(e) => Err(e),
            None => Ok(o.value),
        }
    }
}

/// Riesz decomposition `ψ = u + v + h` on the disc of radius `2R`, sampled on a lattice.
pub fn riesz_decompose_disc(psi: &ScalarField, r: f64, grid: &RieszGrid) -> Result<RieszPieces> {
    ensure(psi.dim() == 2, || "Riesz decomposition runs on C ≅ R^2".into())?;
    ensure(r > 0.0 && grid.points_per_axis >= 3 && grid.frac > 0.0 && grid.frac < 1.0, || "bad Riesz grid".into())?;
    let two_r = 2.0 * r;
    let cert = subharmonic_certificate(psi, &BallSpec::origin(2, two_r), 2000, 0)?;
    if cert.verdict != Verdict::Holds {
        return Err(LabError::Inconclusive(format!("{} not certified subharmonic on the disc", psi.label())));
    }
    let q = DiscQuad { two_r, opts: Opts1d::new(grid.rel_tol, 1e-12, 400_000) };
    let lap = |x: &[f64]| psi.laplacian_at(x);
    let mass = q.area(&lap, &|_, _| 1.0, None)?;
    let flux = integrate_interval(
        |th: f64| {
            let (c, s) = (th.cos(), th.sin());
            let mut g = [0.0; 2];
            psi.gradient_into(&[two_r * c, two_r * s], &mut g);
            (g[0] * c + g[1] * s) * two_r
        },
        0.0,
        2.0 * PI,
        &q.opts,
    )?
    .value;

    let m = grid.points_per_axis;
    let step = 2.0 * grid.frac * two_r / (m - 1) as f64;
    let coord = |i: usize| -grid.frac * two_r + step * i as f64;
    let lattice: Vec<(usize, usize)> = (0..m)
        .flat_map(|i| (0..m).map(move |j| (i, j)))
        .filter(|&(i, j)| coord(i).hypot(coord(j)) <= grid.frac * two_r + 1e-12)
        .collect();
    let samples: Vec<RieszSample> = lattice
        .par_iter()
        .map(|&(i, j)| {
            let z = [coord(i), coord(j)];
            let zc = Complex64::new(z[0], z[1]);
            let u = q.area(&lap, &|x, y| (zc - Complex64::new(x, y)).norm().ln(), Some(z))? / (2.0 * PI);
            let v = q.area(
                &lap,
                &|x, y| (two_r / (4.0 * r * r - zc * Complex64::new(x, -y)).norm()).ln(),
                None,
            )? / (2.0 * PI);
            let h = integrate_interval(
                |th: f64| {
                    let b = Complex64::from_polar(two_r, th);
                    psi.eval(&[b.re, b.im]) * (two_r * two_r - zc.norm_sqr()) / (b - zc).norm_sqr()
                },
                0.0,
                2.0 * PI,
                &q.opts,
            )?
            .value
                / (2.0 * PI);
            Ok(RieszSample { z, psi: psi.eval(&z), u, v, h })
        })
        .collect::<Result<_>>()?;

    let scale = samples.iter().map(|s| s.psi.abs()).fold(1.0, f64::max);
    let tol = 1e-6 * scale;
    let max_residual = samples.iter().map(|s| (s.psi - s.u - s.v - s.h).abs()).fold(0.0, f64::max);
    let min_h_minus_psi = samples.iter().map(|s| s.h - s.psi).fold(f64::INFINITY, f64::min);
    let max_h = samples.iter().map(|s| s.h).fold(f64::NEG_INFINITY, f64::max);
    let mut index = std::collections::HashMap::new();
    for (k, &(i, j)) in lattice.iter().enumerate() {
        index.insert((i, j), k);
    }
    let hh = |k: usize| samples[k].psi - samples[k].u - samples[k].v;
    let mut max_dl: f64 = 0.0;
    for (k, &(i, j)) in lattice.iter().enumerate() {
        if i == 0 || j == 0 {
            continue;
        }
        let nb = [(i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)];
        if let Some(ks) = nb.iter().map(|p| index.get(p).copied()).collect::<Option<Vec<_>>>() {
            let d = (ks.iter().map(|&q| hh(q)).sum::<f64>() - 4.0 * hh(k)) / (step * step);
            max_dl = max_dl.max(d.abs());
        }
    }
    let v_sup_inner = samples
        .iter()
        .filter(|s| s.z[0].hypot(s.z[1]) < r)
        .map(|s| s.v.abs())
        .fold(0.0, f64::max);
    let denom = r.ln().abs() * mass;
    let v_bound_ratio = if denom > 0.0 { v_sup_inner / denom } else { 0.0 };
    let lap_tol = 1e-4;
    let invariants_hold = max_residual <= tol
        && max_dl <= lap_tol
        && min_h_minus_psi >= -tol
        && max_h <= tol
        && (mass - flux).abs() <= 1e-6 * mass.abs().max(1.0);
    Ok(RieszPieces {
        r,
        laplacian_mass: mass,
        boundary_flux: flux,
        samples,
        max_residual,
        max_discrete_laplacian: max_dl,
        min_h_minus_psi,
        max_h,
        v_sup_inner,
        v_bound_ratio,
        tolerance: tol,
        invariants_hold,
    })
}

/// `log(|z - a| / 4)` on `C`, negative subharmonic near the closed unit disc for `|a| ≤ 1/4`.
pub fn log_family_member(a: [f64; 2]) -> ScalarField {
    ScalarField::new(2, format!("log(|z-{a:?}|/4)"), move |x| (((x[0] - a[0]).powi(2) + (x[1] - a[1]).powi(2)).sqrt() / 4.0).ln())
        .radial(a.to_vec())
        .with_singular(SingularPoint { at: a.to_vec(), excise: 1e-3, laplacian_mass: 2.0 * PI })
        .with_tags(Tags { subharmonic: true, negative: true, ..Tags::default() })
}

/// Points `a` with `|a| ∈ {1/16, 1/8, 3/16, 1/4}` at eight angles.
pub fn log_family_grid() -> Vec<[f64; 2]> {
    let mut out = Vec::new();
    for k in 1..=4 {
        let m = k as f64 / 16.0;
        for j in 0..8 {
            let t = j as f64 * PI / 4.0;
            out.push([m * t.cos(), m * t.sin()]);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmeanSweep {
    pub alpha: f64,
    pub ratios: Vec<RatioReport>,
    pub max_ratio: f64,
}

/// `∫_{|z|<1/2} |u|^α / |u(0)|^α` across a family.
pub fn check_submean_ratio(family: &[ScalarField], alpha: f64, spec: &QuadratureSpec) -> Result<SubmeanSweep> {
    ensure(alpha > 0.0, || "alpha must be positive".into())?;
    let disc = BallSpec::origin(2, 0.5);
    let ratios: Vec<RatioReport> = family
        .iter()
        .map(|u| {
            ensure(u.dim() == 2, || "submean ratio runs on C ≅ R^2".into())?;
            let u0 = u.eval(&[0.0, 0.0]);
            ensure(u0.is_finite() && u0 != 0.0, || format!("u(0) = {u0} must be finite and nonzero"))?;
            let num = integrate_ball(&abs_power(u, alpha), &disc, spec)?;
            let den = MeasuredValue::exact(u0.abs().powf(alpha));
            Ok(RatioReport {
                name: "submean".into(),
                numerator: num,
                denominator: den,
                ratio: num.div(den),
                inputs_digest: digest(&["submean", u.label(), &alpha.to_string()]),
            })
        })
        .collect::<Result<_>>()?;
    let max_ratio = ratios.iter().map(|r| r.ratio.value).fold(0.0, f64::max);
    Ok(SubmeanSweep { alpha, ratios, max_ratio })
}

/// `MO_W(f) ≤ (2|V|/|W|) MO_V(f)` for `W ⊂ V`.
pub fn check_subdomain_oscillation(f: &ScalarField, w: &BallSpec, v: &BallSpec, spec: &QuadratureSpec) -> Result<InequalityReport> {
    ensure(v.contains_ball(w), || "W must lie inside V".into())?;
    let mw = mean_oscillation(f, w, spec)?;
    let mv = mean_oscillation(f, v, spec)?;
    let lhs = mw.oscillation;
    let rhs = mv.oscillation.scale(2.0 * v.volume() / w.volume());
    let verdict = verdict_for(lhs, rhs);
    let mut rep = InequalityReport::new("subdomain-oscillation", lhs, rhs, &["subdomain", f.label(), &format!("{w:?}{v:?}")]);
    rep.verdict = verdict;
    Ok(rep)
}

/// Closed-form mean `1/n` and oscillation `2/(en)` of `log 1/|x|` on the unit ball.
pub fn log_inverse_reference(n: usize) -> (f64, f64) {
    let nf = n as f64;
    (1.0 / nf, 2.0 / (std::f64::consts::E * nf))
}

/// `log 1/|x|` on `R^n`.
pub fn log_inverse_norm(n: usize) -> ScalarField {
    let o = vec![0.0; n];
    ScalarField::new(n, format!("log1/|x|:{n}"), |x| -0.5 * x.iter().map(|v| v * v).sum::<f64>().ln())
        .radial(o.clone())
        .with_singular(SingularPoint { at: o, excise: 1e-3, laplacian_mass: 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspace::{model_subharmonic, ModelParams};

    #[test]
    fn log_inverse_sandwich_values() {
        for n in 3..=8 {
            let f = log_inverse_norm(n);
            let r = mean_oscillation(&f, &BallSpec::origin(n, 1.0), &QuadratureSpec::default()).unwrap();
            let (m, o) = log_inverse_reference(n);
            assert!((r.mean.value - m).abs() < 1e-8, "n={n} {:?}", r.mean);
            assert!((r.oscillation.value - o).abs() < 1e-6, "n={n} {:?}", r.oscillation);
        }
    }

    #[test]
    fn constant_has_zero_oscillation() {
        let c = ScalarField::constant(3, 2.5);
        let r = mean_oscillation(&c, &BallSpec::origin(3, 1.0), &QuadratureSpec::default()).unwrap();
        assert!(r.oscillation.value.abs() < 1e-12);
        let r = mean_oscillation(&c, &BallSpec::origin(3, 1.0), &QuadratureSpec::monte_carlo(1000, 3)).unwrap();
        assert_eq!(r.oscillation.value, 0.0);
        let e = bmo_lower_bound(&c, &BallSpec::origin(3, 1.0), 20, 1).unwrap();
        assert_eq!(e.lower_bound, 0.0);
    }

    #[test]
    fn green_function_properties() {
        let r = 1.0;
        let z = Complex64::from_polar(2.0, 0.7);
        let w = Complex64::new(0.3, -0.4);
        assert!(green_disc(r, z, w).unwrap().abs() < 1e-12);
        assert!(green_disc(r, w, w).is_err());
        let a = Complex64::new(0.3, 0.0);
        let b = Complex64::new(0.0, 0.5);
        let g = green_disc(r, a, b).unwrap();
        assert!(g < 0.0);
        assert!((g - green_disc(r, b, a).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn doubling_constant_is_equality() {
        let c = ScalarField::constant(3, -1.0);
        let b = BallSpec::new(vec![0.5, 0.0, 0.0], 0.4).unwrap();
        let r = check_doubling(&c, 1.0, &b, &QuadratureSpec::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Holds);
        assert!((r.lhs.value - r.rhs.value).abs() < 1e-10 * r.rhs.value);
        assert!(check_doubling(&c, 1.5, &b, &QuadratureSpec::default()).is_err());
        assert!(check_doubling(&c, 0.0, &b, &QuadratureSpec::default()).is_err());
    }

    #[test]
    fn reverse_holder_constant_and_newtonian() {
        let c = ScalarField::constant(4, -3.0);
        let b = BallSpec::origin(4, 1.0);
        let r = check_reverse_holder(&c, 0.5, &b, &QuadratureSpec::default()).unwrap();
        assert!((r.rho.value - 1.0).abs() < 1e-12);
        assert!((r.normalized.value - 0.25).abs() < 1e-12);
        let nw = model_subharmonic("newtonian", 4, ModelParams::default()).unwrap();
        let s = reverse_holder_sweep(&nw, &[0.5, 0.9, 0.99], &b, &QuadratureSpec::default()).unwrap();
        for rep in &s.reports {
            let g = rep.gamma;
            let exact = (2.0 - g) / (2.0 * (1.0 - g).sqrt());
            assert!((rep.rho.value - exact).abs() < 1e-6 * exact, "{g}: {:?} vs {exact}", rep.rho);
        }
        assert!(s.within_band);
        assert!(check_reverse_holder(&nw, 1.0, &b, &QuadratureSpec::default()).is_err());
    }

    #[test]
    fn sphere_means_increase() {
        let nw = model_subharmonic("newtonian", 3, ModelParams::default()).unwrap();
        let radii = [0.5, 1.0, 1.5, 2.0];
        let r = spherical_mean_monotone(&nw, &[0.0; 3], &radii, &QuadratureSpec::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Holds);
        assert!((r.means[1].value + 1.0).abs() < 1e-15);
        let off = spherical_mean_monotone(&nw, &[0.3, 0.0, 0.0], &radii, &QuadratureSpec::default()).unwrap();
        assert_eq!(off.verdict, Verdict::Holds);
    }

    #[test]
    fn submean_constant() {
        let u = ScalarField::constant(2, -1.0);
        let s = check_submean_ratio(&[u], 2.0, &QuadratureSpec::default()).unwrap();
        assert!((s.max_ratio - PI / 4.0).abs() < 1e-12);
        let bad = log_family_member([0.0, 0.0]);
        assert!(check_submean_ratio(&[bad], 2.0, &QuadratureSpec::default()).is_err());
    }

    #[test]
    fn riesz_harmonic_input() {
        let psi = ScalarField::new(2, "Re z - 3", |x| x[0] - 3.0)
            .with_gradient(|_, g| {
                g[0] = 1.0;
                g[1] = 0.0;
            })
            .with_laplacian(|_| 0.0);
        let p = riesz_decompose_disc(&psi, 0.5, &RieszGrid { points_per_axis: 7, ..RieszGrid::default() }).unwrap();
        assert!(p.samples.iter().all(|s| s.u == 0.0 && s.v == 0.0));
        assert!(p.max_residual < 1e-9);
        assert!(p.invariants_hold);
    }
}
