//! Deterministic integration over balls, spheres and radial intervals in `R^n`,
//! plus seeded Monte Carlo and ball sampling.
//!
//! Three integration paths exist:
//!
//! * radial: a field radial about the ball center reduces to
//!   `σ_n ∫ f(t) t^{n-1} dt`;
//! * polar: a product rule on the sphere of directions around a pole, with an
//!   adaptive Gauss–Kronrod integral along every ray out to the region boundary;
//! * Monte Carlo: uniform samples in the ball, split into fixed-size chunks that
//!   each draw from their own ChaCha stream so the result does not depend on
//!   thread scheduling.

mod gauss;
mod gk;

pub use gauss::{gauss_legendre, gauss_symmetric, SphereRule};
pub use gk::{integrate_interval, Opts1d, Outcome};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{contract, ensure, LabError, Result};
use crate::funcspace::ScalarField;
use crate::specfun::gamma;

/// `σ_n` (area of `S^{n-1}`) and `ω_n = σ_n / n` (volume of the unit ball).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionConstants {
    pub n: usize,
    pub sigma_n: f64,
    pub omega_n: f64,
}

impl DimensionConstants {
    pub fn new(n: usize) -> Result<Self> {
        ensure(n >= 1, || "dimension must be positive".into())?;
        let half = n as f64 / 2.0;
        let sigma_n = 2.0 * std::f64::consts::PI.powf(half) / gamma(half);
        Ok(Self { n, sigma_n, omega_n: sigma_n / n as f64 })
    }

    pub fn ball_volume(&self, r: f64) -> f64 {
        self.omega_n * r.powi(self.n as i32)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallSpec {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl BallSpec {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        ensure(radius > 0.0 && radius.is_finite(), || format!("radius {radius} must be positive"))?;
        ensure(center.iter().all(|c| c.is_finite()), || "center must be finite".into())?;
        Ok(Self { center, radius })
    }

    pub fn origin(dim: usize, radius: f64) -> Self {
        Self { center: vec![0.0; dim], radius }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// `cB`: same center, radius scaled by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self { center: self.center.clone(), radius: self.radius * c }
    }

    pub fn volume(&self) -> f64 {
        DimensionConstants::new(self.dim()).map(|d| d.ball_volume(self.radius)).unwrap_or(f64::NAN)
    }

    pub fn dist_to_center(&self, x: &[f64]) -> f64 {
        dist(&self.center, x)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.dist_to_center(x) < self.radius
    }

    pub fn contains_ball(&self, other: &BallSpec) -> bool {
        self.dist_to_center(&other.center) + other.radius <= self.radius * (1.0 + 1e-12)
    }
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadMode {
    AdaptiveRadial,
    MonteCarlo,
}

/// Integration controls. For the deterministic mode `max_samples` caps the
/// integrand evaluations of each one-dimensional integral; for Monte Carlo it
/// is the sample count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub mode: QuadMode,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_samples: usize,
    pub seed: u64,
    /// Gauss order `k` of the product sphere rule (`2k` points on circles).
    pub angular_order: usize,
    /// Largest tolerated fraction of non-finite integrand samples.
    pub poison_fraction: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            mode: QuadMode::AdaptiveRadial,
            rel_tol: 1e-10,
            abs_tol: 1e-13,
            max_samples: 200_000,
            seed: 0,
            angular_order: 12,
            poison_fraction: 1e-3,
        }
    }
}

impl QuadratureSpec {
    pub fn adaptive(rel_tol: f64, abs_tol: f64) -> Self {
        Self { rel_tol, abs_tol, ..Self::default() }
    }

    pub fn monte_carlo(samples: usize, seed: u64) -> Self {
        Self { mode: QuadMode::MonteCarlo, max_samples: samples, seed, ..Self::default() }
    }

    pub fn with_angular_order(mut self, k: usize) -> Self {
        self.angular_order = k;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.rel_tol > 0.0 && self.abs_tol > 0.0, || "tolerances must be positive".into())?;
        ensure(self.max_samples > 0, || "max_samples must be positive".into())?;
        ensure(self.angular_order >= 1, || "angular_order must be >= 1".into())
    }

    pub(crate) fn opts1d(&self) -> Opts1d {
        Opts1d::new(self.rel_tol, self.abs_tol, self.max_samples.max(1000))
    }
}

/// A value with a nonnegative error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct MeasuredValue {
    pub value: f64,
    pub err: f64,
}

impl MeasuredValue {
    pub fn new(value: f64, err: f64) -> Self {
        Self { value, err: err.abs() }
    }

    pub fn exact(value: f64) -> Self {
        Self { value, err: 0.0 }
    }

    pub fn scale(self, c: f64) -> Self {
        Self { value: self.value * c, err: self.err * c.abs() }
    }

    pub fn add(self, o: Self) -> Self {
        Self { value: self.value + o.value, err: self.err + o.err }
    }

    pub fn sub(self, o: Self) -> Self {
        Self { value: self.value - o.value, err: self.err + o.err }
    }

    /// Quotient with first-order error propagation.
    pub fn div(self, o: Self) -> Self {
        let v = self.value / o.value;
        let e = (self.err / o.value).abs() + (v * o.err / o.value).abs();
        Self { value: v, err: e }
    }

    /// `self^p` with first-order error propagation.
    pub fn powf(self, p: f64) -> Self {
        let v = self.value.powf(p);
        let e = if self.value != 0.0 { (p * v / self.value * self.err).abs() } else { self.err.powf(p) };
        Self { value: v, err: e }
    }
}

fn check_poison(nonfinite: usize, evals: usize, spec: &QuadratureSpec) -> Result<()> {
    if evals == 0 || nonfinite == 0 {
        return Ok(());
    }
    let fraction = nonfinite as f64 / evals as f64;
    if fraction > spec.poison_fraction {
        return Err(LabError::PoisonedIntegrand { fraction });
    }
    Ok(())
}

/// `σ_n ∫_{r_lo}^{r_hi} profile(t) t^{n-1} dt`; `r_hi` may be `+∞`.
pub fn integrate_radial<F: Fn(f64) -> f64>(
    profile: F,
    dims: &DimensionConstants,
    r_lo: f64,
    r_hi: f64,
    spec: &QuadratureSpec,
) -> Result<MeasuredValue> {
    integrate_radial_with_breaks(profile, dims, r_lo, r_hi, &[], spec)
}

/// As [`integrate_radial`] with interior kinks of the profile passed as breakpoints.
pub fn integrate_radial_with_breaks<F: Fn(f64) -> f64>(
    profile: F,
    dims: &DimensionConstants,
    r_lo: f64,
    r_hi: f64,
    breaks: &[f64],
    spec: &QuadratureSpec,
) -> Result<MeasuredValue> {
    spec.validate()?;
    ensure(r_lo >= 0.0 && r_lo < r_hi, || format!("need 0 <= r_lo < r_hi, got ({r_lo}, {r_hi})"))?;
    let n = dims.n as i32;
    let sigma = dims.sigma_n;
    let opts = Opts1d {
        abs_tol: spec.abs_tol / sigma,
        singular_lo: r_lo == 0.0,
        breakpoints: breaks.to_vec(),
        ..spec.opts1d()
    };
    let o = integrate_interval(|t| profile(t) * t.powi(n - 1), r_lo, r_hi, &opts)?;
    check_poison(o.nonfinite, o.evals, spec)?;
    Ok(MeasuredValue::new(sigma * o.value, sigma * o.err))
}

/// Distance from `p` (inside the ball) to the sphere along unit direction `d`.
pub(crate) fn ray_exit(ball: &BallSpec, p: &[f64], d: &[f64]) -> f64 {
    let mut b = 0.0;
    let mut c = -ball.radius * ball.radius;
    for i in 0..p.len() {
        let q = p[i] - ball.center[i];
        b += d[i] * q;
        c += q * q;
    }
    let disc = (b * b - c).max(0.0);
    (-b + disc.sqrt()).max(0.0)
}

/// Where the polar path places its pole and whether the field is singular there.
fn choose_pole(field: &ScalarField, ball: &BallSpec) -> (Vec<f64>, bool) {
    let support = field.support();
    let inside = |x: &[f64]| ball.contains(x) && support.is_none_or(|s| s.contains(x));
    for sp in field.singular_points() {
        if inside(&sp.at) {
            return (sp.at.clone(), true);
        }
    }
    if let Some(s) = support {
        if ball.contains(&s.center) {
            return (s.center.clone(), false);
        }
    }
    // An off-centre pole near the sphere makes ray lengths vary sharply with direction.
    if let Some(s) = field.extent() {
        if dist(&s.center, &ball.center) <= 0.5 * ball.radius {
            return (s.center.clone(), false);
        }
    }
    (ball.center.clone(), false)
}

fn polar_sum(
    field: &ScalarField,
    ball: &BallSpec,
    pole: &[f64],
    singular: bool,
    k: usize,
    spec: &QuadratureSpec,
) -> Result<(f64, f64, usize, usize)> {
    let n = ball.dim();
    let rule = SphereRule::product(n, k);
    let clip = field.support().filter(|s| s.contains(pole)).cloned();
    let opts = Opts1d {
        abs_tol: spec.abs_tol / (rule.len() as f64).max(1.0),
        singular_lo: singular,
        ..spec.opts1d()
    };
    let rays: Vec<Result<Outcome>> = (0..rule.len())
        .into_par_iter()
        .map(|i| {
            let d = rule.dir(i);
            let mut t_end = ray_exit(ball, pole, d);
            if let Some(s) = &clip {
                t_end = t_end.min(ray_exit(s, pole, d));
            }
            if t_end <= 0.0 {
                return Ok(Outcome::default());
            }
            let x = std::cell::RefCell::new(vec![0.0; n]);
            let f = |t: f64| {
                let mut x = x.borrow_mut();
                for j in 0..n {
                    x[j] = pole[j] + t * d[j];
                }
                field.eval(&x) * t.powi(n as i32 - 1)
            };
            integrate_interval(f, 0.0, t_end, &opts)
        })
        .collect();
    let (mut val, mut err, mut evals, mut bad) = (0.0, 0.0, 0, 0);
    for (i, r) in rays.into_iter().enumerate() {
        let o = r?;
        val += rule.weights[i] * o.value;
        err += rule.weights[i] * o.err;
        evals += o.evals;
        bad += o.nonfinite;
    }
    Ok((val, err, evals, bad))
}

/// Integral of `field` over `ball` by the polar path around an automatically chosen pole.
pub fn integrate_ball_polar(field: &ScalarField, ball: &BallSpec, spec: &QuadratureSpec) -> Result<MeasuredValue> {
    let (pole, singular) = choose_pole(field, ball);
    integrate_ball_polar_at(field, ball, &pole, singular, spec)
}

/// Polar path with an explicit pole, which must lie inside `ball`.
pub fn integrate_ball_polar_at(
    field: &ScalarField,
    ball: &BallSpec,
    pole: &[f64],
    singular: bool,
    spec: &QuadratureSpec,
) -> Result<MeasuredValue> {
    spec.validate()?;
    ensure(ball.dist_to_center(pole) <= ball.radius, || "pole must lie in the ball".into())?;
    let k = spec.angular_order;
    let (fine, ferr, e1, b1) = polar_sum(field, ball, pole, singular, k, spec)?;
    let (coarse, _, e2, b2) = polar_sum(field, ball, pole, singular, (k / 2).max(1), spec)?;
    check_poison(b1 + b2, e1 + e2, spec)?;
    Ok(MeasuredValue::new(fine, ferr + (fine - coarse).abs()))
}

/// Uniform point in `ball`: normalized Gaussian direction times `R U^{1/n}`.
pub(crate) fn uniform_in_ball<R: Rng>(rng: &mut R, ball: &BallSpec, out: &mut [f64]) {
    let n = ball.dim();
    let mut norm2 = 0.0;
    loop {
        for o in out.iter_mut() {
            let g: f64 = rng.sample(StandardNormal);
            *o = g;
            norm2 += g * g;
        }
        if norm2 > 0.0 {
            break;
        }
    }
    let u: f64 = rng.random();
    let r = ball.radius * u.powf(1.0 / n as f64) / norm2.sqrt();
    for (o, c) in out.iter_mut().zip(&ball.center) {
        *o = c + *o * r;
    }
}

pub(crate) const MC_CHUNK: usize = 1024;

pub(crate) fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

/// Values of `f` at `count` seeded uniform points of `ball`, in a fixed order.
pub fn mc_values<F>(f: F, ball: &BallSpec, count: usize, seed: u64) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let chunks = count.div_ceil(MC_CHUNK);
    let parts: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = chunk_rng(seed, c as u64);
            let len = MC_CHUNK.min(count - c * MC_CHUNK);
            let mut x = vec![0.0; ball.dim()];
            (0..len)
                .map(|_| {
                    uniform_in_ball(&mut rng, ball, &mut x);
                    f(&x)
                })
                .collect()
        })
        .collect();
    parts.concat()
}

/// Sample mean with standard error, treating non-finite samples as poison.
pub(crate) fn mc_mean(values: &[f64], spec: &QuadratureSpec) -> Result<MeasuredValue> {
    let bad = values.iter().filter(|v| !v.is_finite()).count();
    check_poison(bad, values.len(), spec)?;
    let good: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    ensure(!good.is_empty(), || "no finite samples".into())?;
    let n = good.len() as f64;
    let mean = good.iter().sum::<f64>() / n;
    let var = good.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    Ok(MeasuredValue::new(mean, (var / n).sqrt()))
}

/// `∫_ball field`, choosing the radial, polar or Monte Carlo path.
pub fn integrate_ball(field: &ScalarField, ball: &BallSpec, spec: &QuadratureSpec) -> Result<MeasuredValue> {
    spec.validate()?;
    ensure(field.dim() == ball.dim(), || {
        format!("field dimension {} does not match ball dimension {}", field.dim(), ball.dim())
    })?;
    match spec.mode {
        QuadMode::MonteCarlo => {
            let vals = mc_values(|x| field.eval(x), ball, spec.max_samples, spec.seed);
            Ok(mc_mean(&vals, spec)?.scale(ball.volume()))
        }
        QuadMode::AdaptiveRadial => {
            if field.is_radial_about(&ball.center) {
                let dims = DimensionConstants::new(ball.dim())?;
                let c = ball.center.clone();
                let x = std::cell::RefCell::new(vec![0.0; ball.dim()]);
                integrate_radial(
                    |t| {
                        let mut x = x.borrow_mut();
                        x.copy_from_slice(&c);
                        x[0] += t;
                        field.eval(&x)
                    },
                    &dims,
                    0.0,
                    ball.radius,
                    spec,
                )
            } else {
                integrate_ball_polar(field, ball, spec)
            }
        }
    }
}

/// Integral over all of `R^n` for a field with bounded support or a declared
/// effective extent; radial fields centered anywhere use the half-line.
pub fn integrate_whole(field: &ScalarField, spec: &QuadratureSpec) -> Result<MeasuredValue> {
    if let Some(s) = field.support() {
        return integrate_ball(field, s, spec);
    }
    if let (Some(c), QuadMode::AdaptiveRadial) = (field.radial_center(), spec.mode) {
        let dims = DimensionConstants::new(field.dim())?;
        let c = c.to_vec();
        let x = std::cell::RefCell::new(vec![0.0; field.dim()]);
        return integrate_radial(
            |t| {
                let mut x = x.borrow_mut();
                x.copy_from_slice(&c);
                x[0] += t;
                field.eval(&x)
            },
            &dims,
            0.0,
            f64::INFINITY,
            spec,
        );
    }
    match field.extent() {
        Some(e) => integrate_ball(field, e, spec),
        None => Err(contract("field has neither support nor extent; cannot integrate over R^n")),
    }
}

/// `(1/σ_n) ∫_{S^{n-1}} field(center + r y) dσ(y)`.
pub fn sphere_mean(field: &ScalarField, center: &[f64], r: f64, spec: &QuadratureSpec) -> Result<MeasuredValue> {
    spec.validate()?;
    let n = field.dim();
    ensure(center.len() == n, || "center dimension mismatch".into())?;
    ensure(r > 0.0, || format!("radius {r} must be positive"))?;
    let mut x = center.to_vec();
    if field.is_radial_about(center) {
        x[0] += r;
        let v = field.eval(&x);
        check_poison(usize::from(!v.is_finite()), 1, spec)?;
        return Ok(MeasuredValue::exact(v));
    }
    let dims = DimensionConstants::new(n)?;
    if n <= 5 && spec.mode == QuadMode::AdaptiveRadial {
        let eval_rule = |k: usize| -> (f64, usize) {
            let rule = SphereRule::product(n, k);
            let mut y = vec![0.0; n];
            let mut s = 0.0;
            let mut bad = 0;
            for i in 0..rule.len() {
                for (j, yj) in y.iter_mut().enumerate() {
                    *yj = center[j] + r * rule.dir(i)[j];
                }
                let v = field.eval(&y);
                if v.is_finite() {
                    s += rule.weights[i] * v;
                } else {
                    bad += 1;
                }
            }
            (s / dims.sigma_n, bad)
        };
        let k = spec.angular_order;
        let (fine, b1) = eval_rule(k);
        let (coarse, b2) = eval_rule((k / 2).max(1));
        let total = SphereRule::product(n, k).len() + SphereRule::product(n, (k / 2).max(1)).len();
        check_poison(b1 + b2, total, spec)?;
        return Ok(MeasuredValue::new(fine, (fine - coarse).abs()));
    }
    let count = spec.max_samples;
    let chunks = count.div_ceil(MC_CHUNK);
    let parts: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = chunk_rng(spec.seed, c as u64);
            let len = MC_CHUNK.min(count - c * MC_CHUNK);
            let mut y = vec![0.0; n];
            (0..len)
                .map(|_| {
                    let mut norm2 = 0.0;
                    for yj in y.iter_mut() {
                        let g: f64 = rng.sample(StandardNormal);
                        *yj = g;
                        norm2 += g * g;
                    }
                    let s = r / norm2.sqrt();
                    for (j, yj) in y.iter_mut().enumerate() {
                        *yj = center[j] + *yj * s;
                    }
                    field.eval(&y)
                })
                .collect()
        })
        .collect();
    mc_mean(&parts.concat(), spec)
}

/// `count` balls inside `domain`, radii log-uniform in `radius_range` and
/// centers uniform in the shrunken ball `B(c, R - r)`.
pub fn sample_balls(domain: &BallSpec, count: usize, seed: u64, radius_range: (f64, f64)) -> Result<Vec<BallSpec>> {
    sample_balls_avoiding(domain, count, seed, radius_range, &[], 0.0, 0.0)
}

/// As [`sample_balls`], rejecting balls whose center lies within
/// `clearance * r + eps0` of any point of `avoid`.
pub fn sample_balls_avoiding(
    domain: &BallSpec,
    count: usize,
    seed: u64,
    radius_range: (f64, f64),
    avoid: &[Vec<f64>],
    clearance: f64,
    eps0: f64,
) -> Result<Vec<BallSpec>> {
    let (lo, hi) = radius_range;
    ensure(lo > 0.0 && lo <= hi, || format!("radius range ({lo}, {hi}) must be positive and ordered"))?;
    ensure(hi <= domain.radius, || {
        format!("radius range upper end {hi} exceeds domain radius {}", domain.radius)
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut x = vec![0.0; domain.dim()];
    let mut attempts = 0usize;
    while out.len() < count {
        attempts += 1;
        if attempts > 1000 * count.max(1) {
            return Err(contract("ball sampler could not satisfy the avoidance constraint"));
        }
        let u: f64 = rng.random();
        let r = if hi > lo { (lo.ln() + u * (hi.ln() - lo.ln())).exp() } else { lo };
        let inner = BallSpec { center: domain.center.clone(), radius: domain.radius - r };
        if inner.radius > 0.0 {
            uniform_in_ball(&mut rng, &inner, &mut x);
        } else {
            x.copy_from_slice(&domain.center);
        }
        if avoid.iter().any(|p| dist(p, &x) <= clearance * r + eps0) {
            continue;
        }
        out.push(BallSpec { center: x.clone(), radius: r });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn dimension_constants() {
        let d3 = DimensionConstants::new(3).unwrap();
        assert!((d3.sigma_n - 4.0 * PI).abs() < 1e-14);
        assert!((d3.omega_n - 4.0 * PI / 3.0).abs() < 1e-14);
        let d2 = DimensionConstants::new(2).unwrap();
        assert!((d2.sigma_n - 2.0 * PI).abs() < 1e-14);
        let d4 = DimensionConstants::new(4).unwrap();
        assert!((d4.sigma_n - 2.0 * PI * PI).abs() < 1e-13);
    }

    #[test]
    fn radial_examples() {
        let d3 = DimensionConstants::new(3).unwrap();
        let s = QuadratureSpec::default();
        let v = integrate_radial(|_| 1.0, &d3, 0.0, 1.0, &s).unwrap();
        assert!((v.value - 4.0 * PI / 3.0).abs() < 1e-12);
        let v = integrate_radial(|t| t.powi(-2), &d3, 0.0, 1.0, &s).unwrap();
        assert!((v.value - 4.0 * PI).abs() < 1e-10);
        let v = integrate_radial(|t: f64| (-t * t).exp(), &d3, 0.0, f64::INFINITY, &s).unwrap();
        assert!((v.value - PI.powf(1.5)).abs() < 1e-10);
        assert!(v.err <= s.rel_tol * v.value.abs() + s.abs_tol + 1e-12);
    }

    #[test]
    fn radial_rejects_bad_interval() {
        let d3 = DimensionConstants::new(3).unwrap();
        let s = QuadratureSpec::default();
        assert!(integrate_radial(|_| 1.0, &d3, 1.0, 0.5, &s).is_err());
    }

    #[test]
    fn radial_divergence_signal() {
        let d3 = DimensionConstants::new(3).unwrap();
        let s = QuadratureSpec::default();
        let r = integrate_radial(|t| t.powi(-3), &d3, 0.0, 1.0, &s);
        assert!(matches!(r, Err(LabError::DivergedIntegral(_))), "{r:?}");
    }

    #[test]
    fn sample_balls_contract() {
        let dom = BallSpec::origin(3, 1.0);
        assert!(sample_balls(&dom, 0, 1, (0.1, 0.5)).unwrap().is_empty());
        assert!(sample_balls(&dom, 3, 1, (0.1, 1.5)).is_err());
        let a = sample_balls(&dom, 1000, 7, (0.01, 0.9)).unwrap();
        let b = sample_balls(&dom, 1000, 7, (0.01, 0.9)).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|bb| dom.contains_ball(bb)));
    }

    #[test]
    fn mc_values_deterministic() {
        let ball = BallSpec::origin(4, 2.0);
        let a = mc_values(|x| x[0] + x[3], &ball, 5000, 3);
        let b = mc_values(|x| x[0] + x[3], &ball, 5000, 3);
        assert_eq!(a, b);
        assert_eq!(a.len(), 5000);
    }
}
