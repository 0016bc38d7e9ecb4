//! Liouville-type criteria on radial model manifolds: ball capacity, the
//! volume-adapted cutoff with its energy bound, and a numerical classifier
//! for the divergence of slowly varying radial integrals.

use std::f64::consts::E;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{contract, ensure, Result};
use crate::funcspace::{ScalarField, Verdict};
use crate::hartogs::least_squares;
use crate::ineqlab::InequalityReport;
use crate::quadcore::{gauss_legendre, integrate_interval, integrate_radial, DimensionConstants, MeasuredValue, Opts1d, QuadratureSpec};

/// Real function of one variable shared across threads.
pub type Profile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Default cutoff of the classifier's radius grid.
pub const DEFAULT_T_MAX: f64 = 1e12;
/// Grid points per decade of radius.
pub const PER_DECADE: usize = 8;
/// A log-scale exponent within this distance of −1 defers to the next scale.
pub const SCALE_BAND: f64 = 0.25;
/// Highest iterated-logarithm scale tried by the classifier.
pub const MAX_SCALE: usize = 3;

/// `e^e`, where every iterated logarithm up to `log_2` is at least 1.
pub fn tail_start() -> f64 {
    E.powf(E)
}

/// `log_k t` with every intermediate argument clamped to at least `e`;
/// `log_0 t = t`.
pub fn iter_log(k: usize, t: f64) -> f64 {
    let mut x = t;
    for _ in 0..k {
        x = x.max(E).ln();
    }
    x
}

// ---------------------------------------------------------------------------
// Model manifolds

/// Rotationally symmetric manifold known through its ball volumes `V_r`
/// and sphere areas `s(r) = V'(r)`.
#[derive(Clone)]
pub struct ModelManifold {
    pub n: usize,
    pub label: String,
    volume: Profile,
    area: Profile,
}

impl fmt::Debug for ModelManifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelManifold").field("n", &self.n).field("label", &self.label).finish()
    }
}

impl ModelManifold {
    pub fn new(n: usize, label: impl Into<String>, volume: Profile, area: Profile) -> Result<Self> {
        let m = Self { n, label: label.into(), volume, area };
        m.validate()?;
        Ok(m)
    }

    /// `R^n` with its flat metric.
    pub fn euclidean(n: usize) -> Result<Self> {
        let d = DimensionConstants::new(n)?;
        let (w, s) = (d.omega_n, d.sigma_n);
        let nf = n as f64;
        Self::new(
            n,
            format!("euclidean-{n}"),
            Arc::new(move |r: f64| w * r.powf(nf)),
            Arc::new(move |r: f64| s * r.powf(nf - 1.0)),
        )
    }

    /// `V_r = V∞ rⁿ / (1 + rⁿ)`: Euclidean near the pole, total volume `V∞`.
    pub fn finite_volume(n: usize, v_inf: f64) -> Result<Self> {
        ensure(v_inf > 0.0 && v_inf.is_finite(), || format!("total volume must be positive, got {v_inf}"))?;
        let nf = n as f64;
        Self::new(
            n,
            format!("finite-volume-{n}"),
            Arc::new(move |r: f64| {
                let p = r.powf(nf);
                v_inf * p / (1.0 + p)
            }),
            Arc::new(move |r: f64| {
                let p = r.powf(nf);
                v_inf * nf * r.powf(nf - 1.0) / ((1.0 + p) * (1.0 + p))
            }),
        )
    }

    /// `V_r = c r²`.
    pub fn quadratic(c: f64) -> Result<Self> {
        ensure(c > 0.0 && c.is_finite(), || format!("coefficient must be positive, got {c}"))?;
        Self::new(2, format!("quadratic-{c}"), Arc::new(move |r: f64| c * r * r), Arc::new(move |r: f64| 2.0 * c * r))
    }

    pub fn volume(&self, r: f64) -> f64 {
        (self.volume)(r)
    }

    pub fn area(&self, r: f64) -> f64 {
        (self.area)(r)
    }

    /// `s > 0`, `V` increasing, `V(0⁺) = 0` and `s ≈ V'`, sampled on a log grid.
    pub fn validate(&self) -> Result<()> {
        ensure(self.n >= 1, || "dimension must be positive".into())?;
        let mut prev = 0.0;
        for j in 0..=224 {
            let r = 10f64.powf(-6.0 + j as f64 / 16.0);
            let (v, s) = (self.volume(r), self.area(r));
            ensure(s.is_finite() && s > 0.0, || format!("{}: area {s} at r = {r}", self.label))?;
            ensure(v.is_finite() && v >= prev, || format!("{}: volume decreasing at r = {r}", self.label))?;
            prev = v;
        }
        let v1 = self.volume(1.0);
        ensure(self.volume(1e-9) <= 1e-6 * v1, || format!("{}: volume does not vanish at the pole", self.label))?;
        for r in [0.5, 1.0, 2.0] {
            let h = 1e-5 * r;
            let fd = (self.volume(r + h) - self.volume(r - h)) / (2.0 * h);
            let s = self.area(r);
            ensure((fd - s).abs() <= 1e-6 * s.max(1.0), || format!("{}: area {s} differs from dV/dr {fd} at r = {r}", self.label))?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Capacity

/// `Cap(B_r) = (n − 2) σ_n r^{n−2}` in `R^n`.
pub fn capacity_ball(n: usize, r: f64) -> Result<f64> {
    ensure(n > 2, || format!("ball capacity degenerates for n = {n}"))?;
    ensure(r > 0.0 && r.is_finite(), || format!("radius must be positive, got {r}"))?;
    let d = DimensionConstants::new(n)?;
    Ok((n as f64 - 2.0) * d.sigma_n * r.powi(n as i32 - 2))
}

/// Dirichlet energy of `min(1, (r/|x|)^{n−2})` by radial quadrature.
pub fn extremal_energy(n: usize, r: f64, spec: &QuadratureSpec) -> Result<MeasuredValue> {
    ensure(n > 2, || format!("ball capacity degenerates for n = {n}"))?;
    ensure(r > 0.0 && r.is_finite(), || format!("radius must be positive, got {r}"))?;
    let d = DimensionConstants::new(n)?;
    let nf = n as f64;
    let amp = (nf - 2.0) * r.powf(nf - 2.0);
    integrate_radial(
        |t| {
            let g = amp / t.powf(nf - 1.0);
            g * g
        },
        &d,
        r,
        f64::INFINITY,
        spec,
    )
}

// ---------------------------------------------------------------------------
// Cutoff

/// `χ(t) = c ∫_t^R (s − r)/(g(s) − g(r) + ε) ds` on `[r, R]`, 1 below and 0 above.
#[derive(Clone)]
pub struct CutoffFunction {
    pub r: f64,
    pub big_r: f64,
    pub epsilon: f64,
    /// Reciprocal of `∫_r^R (s − r)/(g(s) − g(r) + ε) ds`.
    pub c: f64,
    /// Quadrature error of `c`.
    pub c_err: f64,
    pub bound: f64,
    g: Profile,
    g_r: f64,
}

impl fmt::Debug for CutoffFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CutoffFunction")
            .field("r", &self.r)
            .field("R", &self.big_r)
            .field("epsilon", &self.epsilon)
            .field("c", &self.c)
            .field("bound", &self.bound)
            .finish()
    }
}

fn cutoff_opts() -> Opts1d {
    Opts1d::new(1e-12, 1e-15, 400_000)
}

impl CutoffFunction {
    fn density(&self, s: f64) -> f64 {
        let num = s - self.r;
        if num <= 0.0 {
            return 0.0;
        }
        let den = self.g(s) - self.g_r + self.epsilon;
        if den <= 0.0 {
            // Only reachable with ε = 0 where (s − r)/(g(s) − g(r)) is 0/0.
            return 0.0;
        }
        num / den
    }

    pub fn g(&self, t: f64) -> f64 {
        (self.g)(t)
    }

    pub fn chi(&self, t: f64) -> f64 {
        if t <= self.r {
            return 1.0;
        }
        if t >= self.big_r {
            return 0.0;
        }
        let tail = integrate_interval(|s| self.density(s), t, self.big_r, &cutoff_opts()).map(|o| o.value).unwrap_or(f64::NAN);
        (self.c * tail).clamp(0.0, 1.0)
    }

    /// `χ'(t) = −c (t − r)/(g(t) − g(r) + ε)` inside `(r, R)`.
    pub fn chi_prime(&self, t: f64) -> f64 {
        if t <= self.r || t >= self.big_r {
            return 0.0;
        }
        -self.c * self.density(t)
    }

    /// `(t, χ(t), χ'(t))` at `count` equispaced radii of `[0, R + (R − r)/4]`.
    pub fn sample(&self, count: usize) -> Vec<(f64, f64, f64)> {
        let top = self.big_r + 0.25 * (self.big_r - self.r);
        (0..count)
            .map(|i| {
                let t = top * i as f64 / (count.max(2) - 1) as f64;
                (t, self.chi(t), self.chi_prime(t))
            })
            .collect()
    }
}

pub fn cutoff_build(g: Profile, r: f64, big_r: f64, epsilon: f64) -> Result<CutoffFunction> {
    ensure(r > 0.0 && r < big_r && big_r.is_finite(), || format!("need 0 < r < R, got ({r}, {big_r})"))?;
    ensure(epsilon >= 0.0 && epsilon.is_finite(), || format!("epsilon must be nonnegative, got {epsilon}"))?;
    let g_r = g(r);
    let g_big = g(big_r);
    ensure(g_r.is_finite() && g_big.is_finite(), || "g is not finite on [r, R]".into())?;
    if epsilon == 0.0 {
        ensure(g_big > g_r, || "g(R) = g(r) with epsilon = 0".into())?;
    }
    let mut prev = g_r;
    for i in 1..=64 {
        let t = r + (big_r - r) * i as f64 / 64.0;
        let v = g(t);
        ensure(v.is_finite() && v >= prev - 1e-12 * prev.abs().max(1.0), || format!("g decreases near t = {t}"))?;
        if epsilon == 0.0 {
            ensure(v > g_r, || format!("g is flat at t = {t} with epsilon = 0"))?;
        }
        prev = v;
    }
    let mut cut = CutoffFunction { r, big_r, epsilon, c: f64::NAN, c_err: 0.0, bound: f64::NAN, g, g_r };
    let total = integrate_interval(|s| cut.density(s), r, big_r, &cutoff_opts())?;
    ensure(total.value > 0.0 && total.value.is_finite(), || format!("normalization integral is {}", total.value))?;
    cut.c = 1.0 / total.value;
    cut.c_err = total.err * cut.c * cut.c;
    cut.bound = 2.0 * cut.c;
    Ok(cut)
}

/// `t ↦ ∫_0^t |f| s` for a radial profile `f`.
pub fn mass_function(manifold: &ModelManifold, f: Profile) -> Profile {
    let m = manifold.clone();
    Arc::new(move |t: f64| {
        if t <= 0.0 {
            return 0.0;
        }
        integrate_interval(|s| f(s).abs() * m.area(s), 0.0, t, &Opts1d::new(1e-13, 1e-300, 400_000))
            .map(|o| o.value)
            .unwrap_or(f64::NAN)
    })
}

fn ray_profile(f: &ScalarField) -> Result<Profile> {
    let center = f.radial_center().ok_or_else(|| contract(format!("{} is not radial", f.label())))?.to_vec();
    let field = f.clone();
    Ok(Arc::new(move |t: f64| {
        let mut x = center.clone();
        x[0] += t;
        field.eval(&x)
    }))
}

/// Both sides of `∫ |f| |∇(χ∘ρ)|² dμ ≤ 2c` on `manifold`.
pub fn check_cutoff_bound(
    f: &ScalarField,
    manifold: &ModelManifold,
    cut: &CutoffFunction,
    spec: &QuadratureSpec,
) -> Result<InequalityReport> {
    spec.validate()?;
    ensure(f.dim() == manifold.n, || format!("field dimension {} on a {}-manifold", f.dim(), manifold.n))?;
    let prof = ray_profile(f)?;
    let g = mass_function(manifold, prof.clone());
    for i in 0..=8 {
        let t = cut.r + (cut.big_r - cut.r) * i as f64 / 8.0;
        let (mine, theirs) = (g(t), cut.g(t));
        ensure((mine - theirs).abs() <= 1e-7 * mine.abs().max(1.0), || {
            format!("cutoff was built from a different mass function: g({t}) = {theirs}, expected {mine}")
        })?;
    }
    let opts = spec.opts1d();
    let energy = integrate_interval(
        |t| {
            let d = cut.chi_prime(t);
            d * d * prof(t).abs() * manifold.area(t)
        },
        cut.r,
        cut.big_r,
        &opts,
    )?;
    let lhs = MeasuredValue::new(energy.value, energy.err);
    let rhs = MeasuredValue::new(cut.bound, 2.0 * cut.c_err);
    let nums = format!("{} {} {}", cut.r, cut.big_r, cut.epsilon);
    Ok(InequalityReport::new("cutoff-energy", lhs, rhs, &[f.label(), &manifold.label, &nums]))
}

/// One seeded cutoff configuration.
#[derive(Clone)]
pub struct CutoffCase {
    pub manifold: ModelManifold,
    pub field: ScalarField,
    pub r: f64,
    pub big_r: f64,
    pub epsilon: f64,
}

/// Radial nonnegative test densities indexed by `kind`.
fn corpus_field(n: usize, kind: usize, a: f64, b: f64) -> ScalarField {
    let o = vec![0.0; n];
    let rho = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>().sqrt();
    match kind {
        0 => ScalarField::constant(n, a),
        1 => ScalarField::new(n, format!("{a}exp(-{b}r^2)"), move |x| a * (-b * rho(x).powi(2)).exp()).radial(o),
        2 => ScalarField::new(n, format!("{a}(1+r^2)^-{b}"), move |x| a * (1.0 + rho(x).powi(2)).powf(-b)).radial(o),
        3 => ScalarField::new(n, format!("{a}(1+{b}r)"), move |x| a * (1.0 + b * rho(x))).radial(o),
        _ => ScalarField::constant(n, 0.0),
    }
}

/// `count` configurations on `R³` and `R⁴`, each from its own seed.
pub fn cutoff_corpus(seed: u64, count: usize) -> Result<Vec<CutoffCase>> {
    (0..count)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i as u64));
            let n = 3 + (i % 2);
            let kind = if i % 10 == 9 { 4 } else { rng.random_range(0..4) };
            let a = 10f64.powf(rng.random_range(-1.0..1.0));
            let b = rng.random_range(0.2..2.0);
            let r = rng.random_range(0.2..2.0);
            let big_r = r + rng.random_range(0.1..3.0);
            let epsilon = 10f64.powf(rng.random_range(-3.0..2.0));
            Ok(CutoffCase { manifold: ModelManifold::euclidean(n)?, field: corpus_field(n, kind, a, b), r, big_r, epsilon })
        })
        .collect()
}

/// Builds each case's cutoff from its own mass function and checks the bound.
pub fn run_cutoff_corpus(cases: &[CutoffCase], spec: &QuadratureSpec) -> Result<Vec<InequalityReport>> {
    cases
        .par_iter()
        .map(|c| {
            let g = mass_function(&c.manifold, ray_profile(&c.field)?);
            let cut = cutoff_build(g, c.r, c.big_r, c.epsilon)?;
            check_cutoff_bound(&c.field, &c.manifold, &cut, spec)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Growth data and divergence classification

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Divergent,
    Convergent,
    Inconclusive,
}

/// Outcome of classifying `∫_{r0}^∞ h(r) dr`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceVerdict {
    pub integral_name: String,
    pub t_grid: Vec<f64>,
    pub partial_values: Vec<f64>,
    pub classification: Classification,
    /// Exponent `p` of `G_k ~ (log_k r)^p` at the deciding scale.
    pub tail_exponent_fit: f64,
    /// Deciding scale `k`; exponents at every tried scale are in `fits`.
    pub scale: usize,
    pub fits: Vec<f64>,
    /// Extrapolated `∫_{T_max}^∞` for convergent integrals.
    pub tail_estimate: Option<f64>,
    pub note: Option<String>,
}

impl DivergenceVerdict {
    fn inconclusive(name: &str, t_grid: Vec<f64>, partial_values: Vec<f64>, fits: Vec<f64>, note: String) -> Self {
        Self {
            integral_name: name.to_string(),
            t_grid,
            partial_values,
            classification: Classification::Inconclusive,
            tail_exponent_fit: f64::NAN,
            scale: fits.len().saturating_sub(1),
            fits,
            tail_estimate: None,
            note: Some(note),
        }
    }
}

/// `r0 · 10^{j/PER_DECADE}` up to and including `t_max`.
pub fn t_grid(r0: f64, t_max: f64) -> Vec<f64> {
    let mut g = Vec::new();
    let mut j = 1;
    loop {
        let t = r0 * 10f64.powf(j as f64 / PER_DECADE as f64);
        if t >= t_max * (1.0 - 1e-12) {
            break;
        }
        g.push(t);
        j += 1;
    }
    g.push(t_max);
    g
}

/// Weight turning `h` into the integrand in `u = log_k r`.
fn scale_weight(k: usize, r: f64) -> f64 {
    (0..k).map(|j| iter_log(j, r)).product()
}

/// Classifies `∫_{r0}^∞ h(r) dr` for positive `h` from partial integrals on
/// [`t_grid`] and log-log slope fits of `G_k = h · Π_{j<k} log_j r` against
/// `log_k r` over `[√T_max, T_max]`. The first scale whose exponent leaves
/// the band `|p + 1| ≤ SCALE_BAND` decides; exponents above −1 with
/// increasing partials mean divergent, below −1 with shrinking decade
/// increments mean convergent. Anything else is inconclusive.
pub fn classify_integral<H: Fn(f64) -> f64>(name: &str, h: H, r0: f64, t_max: f64) -> Result<DivergenceVerdict> {
    ensure(r0 > 0.0 && r0.is_finite(), || format!("start radius must be positive, got {r0}"))?;
    ensure(t_max >= 100.0 * r0 && t_max.is_finite(), || format!("T_max {t_max} must exceed 100 r0"))?;
    let grid = t_grid(r0, t_max);
    let mut partials = Vec::with_capacity(grid.len());
    let mut acc = 0.0;
    let mut lo = r0;
    for &hi in &grid {
        for (u, w) in gauss_legendre(16, lo.ln(), hi.ln()) {
            let r = u.exp();
            let v = h(r);
            if !v.is_finite() || v <= 0.0 {
                let note = format!("integrand is {v} at r = {r:.6e}");
                return Ok(DivergenceVerdict::inconclusive(name, grid, partials, vec![], note));
            }
            acc += w * v * r;
        }
        partials.push(acc);
        lo = hi;
    }

    let window_lo = t_max.sqrt().max(r0);
    let mut fits = Vec::new();
    for k in 0..=MAX_SCALE {
        let pts: Vec<f64> = grid.iter().copied().filter(|&r| r >= window_lo && (k == 0 || iter_log(k - 1, r) > E)).collect();
        if pts.len() < PER_DECADE {
            let note = format!("scale {k} has only {} grid points in its regular range", pts.len());
            return Ok(DivergenceVerdict::inconclusive(name, grid, partials, fits, note));
        }
        let xs: Vec<f64> = pts.iter().map(|&r| iter_log(k, r).ln()).collect();
        let ys: Vec<f64> = pts.iter().map(|&r| (h(r) * scale_weight(k, r)).ln()).collect();
        let (p, _) = least_squares(&xs, &ys);
        fits.push(p);
        if !p.is_finite() {
            return Ok(DivergenceVerdict::inconclusive(name, grid, partials, fits, "non-finite slope".into()));
        }
        if (p + 1.0).abs() <= SCALE_BAND {
            continue;
        }
        let verdict = |classification, tail_estimate, note| DivergenceVerdict {
            integral_name: name.to_string(),
            t_grid: grid.clone(),
            partial_values: partials.clone(),
            classification,
            tail_exponent_fit: p,
            scale: k,
            fits: fits.clone(),
            tail_estimate,
            note,
        };
        let n = partials.len();
        let decade_back = n.saturating_sub(PER_DECADE + 1);
        if p > -1.0 {
            let growing = partials.windows(2).all(|w| w[1] >= w[0]) && partials[n - 1] > partials[decade_back];
            return Ok(if growing {
                verdict(Classification::Divergent, None, None)
            } else {
                verdict(Classification::Inconclusive, None, Some("partials stall despite a slow tail".into()))
            });
        }
        let increments: Vec<f64> = partials
            .iter()
            .enumerate()
            .filter(|&(i, _)| grid[i] >= window_lo && i >= PER_DECADE)
            .map(|(i, v)| v - partials[i - PER_DECADE])
            .collect();
        let shrinking = increments.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9));
        let w_end = iter_log(k, t_max);
        let g_end = h(t_max) * scale_weight(k, t_max);
        let tail = g_end * w_end / (-p - 1.0);
        return Ok(if shrinking && tail.is_finite() {
            verdict(Classification::Convergent, Some(tail), None)
        } else {
            verdict(Classification::Inconclusive, None, Some("decade increments do not shrink".into()))
        });
    }
    let note = format!("all scales up to {MAX_SCALE} are borderline");
    Ok(DivergenceVerdict::inconclusive(name, grid, partials, fits, note))
}

/// Growth functions `λ`, `κ` with the verdict on `∫ ds/λ(s) < ∞`.
#[derive(Clone)]
pub struct GrowthPair {
    pub label: String,
    lambda: Profile,
    kappa: Profile,
    pub t0: f64,
    pub lambda_tail_integrable: bool,
    pub lambda_tail: DivergenceVerdict,
}

impl fmt::Debug for GrowthPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GrowthPair")
            .field("label", &self.label)
            .field("t0", &self.t0)
            .field("lambda_tail_integrable", &self.lambda_tail_integrable)
            .finish()
    }
}

fn check_increasing(name: &str, f: &Profile, t0: f64, t_max: f64) -> Result<()> {
    let mut prev = f64::NEG_INFINITY;
    for t in std::iter::once(t0).chain(t_grid(t0, t_max)) {
        let v = f(t);
        ensure(v.is_finite() && v > 0.0, || format!("{name}({t}) = {v} is not positive"))?;
        ensure(v >= prev * (1.0 - 1e-12), || format!("{name} decreases near t = {t}"))?;
        prev = v;
    }
    Ok(())
}

impl GrowthPair {
    /// Checks monotonicity and positivity on a log grid from `t0` and classifies
    /// `∫_{t0}^∞ ds/λ(s)`.
    pub fn new(label: impl Into<String>, lambda: Profile, kappa: Profile, t0: f64) -> Result<Self> {
        check_increasing("lambda", &lambda, t0, 10.0 * DEFAULT_T_MAX)?;
        check_increasing("kappa", &kappa, t0, 10.0 * DEFAULT_T_MAX)?;
        let l = lambda.clone();
        let tail = classify_integral("∫ ds/λ(s)", |s| 1.0 / l(s), t0, DEFAULT_T_MAX)?;
        Ok(Self {
            label: label.into(),
            lambda,
            kappa,
            t0,
            lambda_tail_integrable: tail.classification == Classification::Convergent,
            lambda_tail: tail,
        })
    }

    pub fn lambda(&self, t: f64) -> f64 {
        (self.lambda)(t)
    }

    pub fn kappa(&self, t: f64) -> f64 {
        (self.kappa)(t)
    }
}

/// `λ(t) = t (log_k t)^{1+ε/2} Π_{j<k} log_j t` with `log_0` omitted.
fn family_lambda(k: usize, eps: f64) -> Profile {
    Arc::new(move |t: f64| t * iter_log(k, t).powf(1.0 + 0.5 * eps) * (1..k).map(|j| iter_log(j, t)).product::<f64>())
}

/// First family: the above `λ` with `κ(t) = t² (log_k t)^{−ε}`.
pub fn growth_family_power(k: usize, eps: f64) -> Result<GrowthPair> {
    ensure(k >= 1 && eps > 0.0, || format!("need k >= 1 and eps > 0, got ({k}, {eps})"))?;
    let kappa: Profile = Arc::new(move |t: f64| t * t * iter_log(k, t).powf(-eps));
    GrowthPair::new(format!("power-k{k}-eps{eps}"), family_lambda(k, eps), kappa, tail_start())
}

/// Second family: the same `λ` with `κ(t) = log t (log_{k+1} t)^{−ε}`.
pub fn growth_family_log(k: usize, eps: f64) -> Result<GrowthPair> {
    ensure(k >= 1 && eps > 0.0, || format!("need k >= 1 and eps > 0, got ({k}, {eps})"))?;
    let kappa: Profile = Arc::new(move |t: f64| iter_log(1, t) * iter_log(k + 1, t).powf(-eps));
    GrowthPair::new(format!("log-k{k}-eps{eps}"), family_lambda(k, eps), kappa, tail_start())
}

/// `∫_{r0}^∞ r dr / (λ(κ(r)) V_r)`, classified only once `∫ ds/λ` is known to converge.
pub fn criterion_divergence(manifold: &ModelManifold, growth: &GrowthPair, r0: f64, t_max: f64) -> Result<DivergenceVerdict> {
    let name = "∫ r dr / (λ(κ(r)) V_r)";
    let h = |r: f64| r / (growth.lambda(growth.kappa(r)) * manifold.volume(r));
    let mut v = classify_integral(name, h, r0, t_max)?;
    if !growth.lambda_tail_integrable {
        v.note = Some(format!("∫ ds/λ(s) is {:?}; verdict withheld", growth.lambda_tail.classification));
        v.classification = Classification::Inconclusive;
    }
    Ok(v)
}

/// Named manifold and growth data used by the command line and the tests.
pub const FAMILIES: [&str; 3] = ["finite-volume", "quadratic-log", "euclidean-control"];

pub fn family(name: &str) -> Result<(ModelManifold, GrowthPair)> {
    match name {
        "finite-volume" => Ok((ModelManifold::finite_volume(3, 1.0)?, growth_family_power(1, 1.0)?)),
        "quadratic-log" => Ok((ModelManifold::quadratic(std::f64::consts::PI)?, growth_family_log(1, 1.0)?)),
        "euclidean-control" => {
            let lambda: Profile = Arc::new(|t: f64| t * t);
            let kappa: Profile = Arc::new(|t: f64| 2.0 - 1.0 / (1.0 + t));
            Ok((ModelManifold::euclidean(3)?, GrowthPair::new("square-bounded", lambda, kappa, tail_start())?))
        }
        other => Err(contract(format!("unknown family {other:?}; expected one of {FAMILIES:?}"))),
    }
}

// ---------------------------------------------------------------------------
// v_λ

/// `v_λ(r) = ∫_0^r λ(|ψ(t)|) s(t) dt`.
pub fn v_lambda<L, P>(manifold: &ModelManifold, lam: L, psi: P, r: f64, spec: &QuadratureSpec) -> Result<MeasuredValue>
where
    L: Fn(f64) -> f64,
    P: Fn(f64) -> f64,
{
    spec.validate()?;
    ensure(r > 0.0 && r.is_finite(), || format!("radius must be positive, got {r}"))?;
    let o = integrate_interval(|t| lam(psi(t).abs()) * manifold.area(t), 0.0, r, &spec.opts1d())?;
    Ok(MeasuredValue::new(o.value, o.err))
}

/// Tabulates `v_λ` at `PER_DECADE · 8` points per decade on `[r0, t_max]` and
/// interpolates `log v` linearly in `log r`.
fn v_lambda_table<L, P>(manifold: &ModelManifold, lam: &L, psi: &P, r0: f64, t_max: f64, spec: &QuadratureSpec) -> Result<impl Fn(f64) -> f64>
where
    L: Fn(f64) -> f64,
    P: Fn(f64) -> f64,
{
    let per = (PER_DECADE * 8) as f64;
    let (a, b) = (r0.ln(), t_max.ln());
    let steps = ((b - a) / std::f64::consts::LN_10 * per).ceil() as usize;
    let du = (b - a) / steps as f64;
    let mut logs = Vec::with_capacity(steps + 1);
    let mut v = v_lambda(manifold, lam, psi, r0, spec)?.value;
    logs.push(v.ln());
    for i in 0..steps {
        let (lo, hi) = (a + du * i as f64, a + du * (i + 1) as f64);
        for (u, w) in gauss_legendre(10, lo, hi) {
            let t = u.exp();
            v += w * lam(psi(t).abs()) * manifold.area(t) * t;
        }
        logs.push(v.ln());
    }
    Ok(move |r: f64| {
        let x = ((r.ln() - a) / du).clamp(0.0, steps as f64);
        let i = (x.floor() as usize).min(steps.saturating_sub(1));
        let f = x - i as f64;
        (logs[i] + f * (logs[i + 1] - logs[i])).exp()
    })
}

/// `∫_{r0}^∞ r dr / v_λ(r)`.
pub fn criterion_v_lambda<L, P>(
    manifold: &ModelManifold,
    lam: L,
    psi: P,
    r0: f64,
    t_max: f64,
    spec: &QuadratureSpec,
) -> Result<DivergenceVerdict>
where
    L: Fn(f64) -> f64,
    P: Fn(f64) -> f64,
{
    let v = v_lambda_table(manifold, &lam, &psi, r0, t_max, spec)?;
    classify_integral("∫ r dr / v_λ(r)", |r| r / v(r), r0, t_max)
}

/// The chain `∫ λ(|ψ|)/(1+ρ²) < ∞ ⇒ v_λ(r)/(1+r²) bounded ⇒ ∫ r dr/v_λ = ∞`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NadirashviliReport {
    /// Classification of `∫_1^∞ λ(|ψ|) s/(1+t²)`.
    pub weighted_tail: DivergenceVerdict,
    pub weighted_integral: Option<MeasuredValue>,
    pub applicable: bool,
    /// `(r, v_λ(r)/(1+r²))` on the grid.
    pub ratios: Vec<(f64, f64)>,
    pub max_ratio: f64,
    /// `v_λ(r)/(1+r²) ≤ ∫ λ(|ψ|)/(1+ρ²)` at every grid radius.
    pub chain: Verdict,
    pub criterion: DivergenceVerdict,
}

pub fn nadirashvili_reduction<L, P>(
    manifold: &ModelManifold,
    lam: L,
    psi: P,
    r_grid: &[f64],
    spec: &QuadratureSpec,
) -> Result<NadirashviliReport>
where
    L: Fn(f64) -> f64 + Sync,
    P: Fn(f64) -> f64 + Sync,
{
    ensure(!r_grid.is_empty(), || "empty radius grid".into())?;
    let weight = |t: f64| lam(psi(t).abs()) * manifold.area(t) / (1.0 + t * t);
    let weighted_tail = classify_integral("∫ λ(|ψ|) dμ / (1 + ρ²)", weight, 1.0, DEFAULT_T_MAX)?;
    let applicable = weighted_tail.classification == Classification::Convergent;
    let weighted_integral = if applicable {
        let o = integrate_interval(weight, 0.0, f64::INFINITY, &spec.opts1d())?;
        Some(MeasuredValue::new(o.value, o.err))
    } else {
        None
    };
    let values: Vec<MeasuredValue> =
        r_grid.par_iter().map(|&r| v_lambda(manifold, &lam, &psi, r, spec)).collect::<Result<_>>()?;
    let ratios: Vec<(f64, f64)> = r_grid.iter().zip(&values).map(|(&r, v)| (r, v.value / (1.0 + r * r))).collect();
    let max_ratio = ratios.iter().map(|p| p.1).fold(0.0, f64::max);
    let chain = match weighted_integral {
        Some(w) => {
            let all = r_grid.iter().zip(&values).all(|(&r, v)| {
                let ratio = v.scale(1.0 / (1.0 + r * r));
                crate::ineqlab::verdict_for(ratio, w) == Verdict::Holds
            });
            if all {
                Verdict::Holds
            } else {
                Verdict::Violated
            }
        }
        None => Verdict::Inconclusive,
    };
    let criterion = criterion_v_lambda(manifold, &lam, &psi, 1.0, DEFAULT_T_MAX, spec)?;
    Ok(NadirashviliReport { weighted_tail, weighted_integral, applicable, ratios, max_ratio, chain, criterion })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn spec() -> QuadratureSpec {
        QuadratureSpec::adaptive(1e-11, 1e-14)
    }

    #[test]
    fn capacity_matches_extremal_energy() {
        for n in 3..=8 {
            for r in [0.5, 1.0, 2.0] {
                let cap = capacity_ball(n, r).unwrap();
                let e = extremal_energy(n, r, &spec()).unwrap();
                assert!((e.value - cap).abs() <= 1e-6 * cap, "n={n} r={r}: {} vs {cap}", e.value);
            }
        }
        assert!((capacity_ball(3, 1.0).unwrap() - 4.0 * PI).abs() < 1e-12);
        assert!(capacity_ball(2, 1.0).is_err());
    }

    #[test]
    fn manifolds_validate() {
        assert!(ModelManifold::finite_volume(3, 2.0).is_ok());
        assert!(ModelManifold::quadratic(PI).is_ok());
        let bad = ModelManifold::new(3, "shrinking", Arc::new(|r: f64| 1.0 / (1.0 + r)), Arc::new(|r: f64| 1.0 / (1.0 + r).powi(2)));
        assert!(bad.is_err());
    }

    #[test]
    fn cutoff_endpoints_and_monotone() {
        let m = ModelManifold::euclidean(3).unwrap();
        let g: Profile = Arc::new(move |t| m.volume(t));
        let cut = cutoff_build(g, 1.0, 2.0, 1.0).unwrap();
        assert_eq!(cut.chi(1.0), 1.0);
        assert_eq!(cut.chi(2.0), 0.0);
        assert!((cut.chi(1.0 + 1e-9) - 1.0).abs() < 1e-8);
        let s = cut.sample(101);
        assert!(s.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-14));
        assert_eq!(cut.bound, 2.0 * cut.c);
    }

    #[test]
    fn cutoff_energy_constant_density() {
        let m = ModelManifold::euclidean(3).unwrap();
        let f = ScalarField::constant(3, 1.0);
        let g = mass_function(&m, ray_profile(&f).unwrap());
        let cut = cutoff_build(g, 1.0, 2.0, 1.0).unwrap();
        let rep = check_cutoff_bound(&f, &m, &cut, &spec()).unwrap();
        assert_eq!(rep.verdict, Verdict::Holds);
        // Exact energy is 2c − c²(R − r)²/(g(R) − g(r) + ε).
        let gap = m.volume(2.0) - m.volume(1.0) + 1.0;
        let exact = 2.0 * cut.c - cut.c * cut.c / gap;
        assert!((rep.lhs.value - exact).abs() < 1e-9 * exact, "{} vs {exact}", rep.lhs.value);
    }

    #[test]
    fn cutoff_mismatched_mass_rejected() {
        let m = ModelManifold::euclidean(3).unwrap();
        let f = ScalarField::constant(3, 1.0);
        let g: Profile = Arc::new(|t: f64| 2.0 * t);
        let cut = cutoff_build(g, 1.0, 2.0, 1.0).unwrap();
        assert!(check_cutoff_bound(&f, &m, &cut, &spec()).is_err());
    }

    #[test]
    fn cutoff_degenerate_mass_rejected() {
        let g: Profile = Arc::new(|_| 3.0);
        assert!(cutoff_build(g.clone(), 1.0, 2.0, 0.0).is_err());
        assert!(cutoff_build(g.clone(), 1.0, 2.0, -1.0).is_err());
        assert!(cutoff_build(g, 2.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn cutoff_large_epsilon_growth() {
        let m = ModelManifold::euclidean(3).unwrap();
        for eps in [1e4, 1e5, 1e6] {
            let mm = m.clone();
            let cut = cutoff_build(Arc::new(move |t| mm.volume(t)), 1.0, 2.0, eps).unwrap();
            let ratio = cut.bound / (4.0 * eps);
            assert!((ratio - 1.0).abs() < 30.0 / eps, "eps={eps}: {ratio}");
        }
    }

    #[test]
    fn cutoff_corpus_holds() {
        let cases = cutoff_corpus(7, 50).unwrap();
        let reps = run_cutoff_corpus(&cases, &QuadratureSpec::adaptive(1e-9, 1e-13)).unwrap();
        assert_eq!(reps.len(), 50);
        for r in &reps {
            assert_eq!(r.verdict, Verdict::Holds, "{r:?}");
        }
    }

    #[test]
    fn v_lambda_oracles() {
        let m = ModelManifold::euclidean(3).unwrap();
        let v = v_lambda(&m, |t| t, |_| -1.0, 1.5, &spec()).unwrap();
        assert!((v.value - m.volume(1.5)).abs() < 1e-10);
        let v = v_lambda(&m, |t| t * t, |r: f64| -(1.0 + r * r).powf(-0.5), 2.0, &spec()).unwrap();
        let exact = 4.0 * PI * (2.0 - 2f64.atan());
        assert!((v.value - exact).abs() < 1e-10, "{} vs {exact}", v.value);
    }

    #[test]
    fn growth_tails_integrable() {
        for g in [growth_family_power(1, 1.0).unwrap(), growth_family_log(1, 1.0).unwrap()] {
            assert!(g.lambda_tail_integrable, "{g:?}");
            assert_eq!(g.lambda_tail.scale, 1);
            assert!((g.lambda_tail.tail_exponent_fit + 1.5).abs() < 0.05);
        }
    }

    #[test]
    fn families_classify_and_are_stable() {
        let expected = [Classification::Divergent, Classification::Divergent, Classification::Convergent];
        for (name, want) in FAMILIES.iter().zip(expected) {
            let (m, g) = family(name).unwrap();
            let a = criterion_divergence(&m, &g, tail_start(), DEFAULT_T_MAX).unwrap();
            let b = criterion_divergence(&m, &g, tail_start(), 10.0 * DEFAULT_T_MAX).unwrap();
            assert_eq!(a.classification, want, "{name}: {a:?}");
            assert_eq!(b.classification, want, "{name} at 10x: {:?}", b.fits);
        }
    }

    #[test]
    fn non_integrable_lambda_withholds() {
        let lambda: Profile = Arc::new(|t: f64| t);
        let kappa: Profile = Arc::new(|t: f64| t);
        let g = GrowthPair::new("linear", lambda, kappa, tail_start()).unwrap();
        assert!(!g.lambda_tail_integrable);
        let v = criterion_divergence(&ModelManifold::quadratic(1.0).unwrap(), &g, tail_start(), DEFAULT_T_MAX).unwrap();
        assert_eq!(v.classification, Classification::Inconclusive);
    }

    #[test]
    fn weighted_reduction_examples() {
        let grid: Vec<f64> = (1..=20).map(|i| 0.5 * i as f64).collect();
        let fv = ModelManifold::finite_volume(3, 1.0).unwrap();
        let rep = nadirashvili_reduction(&fv, |t| t, |_| -1.0, &grid, &spec()).unwrap();
        assert!(rep.applicable);
        assert_eq!(rep.chain, Verdict::Holds);
        assert_eq!(rep.criterion.classification, Classification::Divergent);

        let r3 = ModelManifold::euclidean(3).unwrap();
        let rep = nadirashvili_reduction(&r3, |t| t, |r: f64| -(1.0 + r * r).powf(-0.5), &grid, &spec()).unwrap();
        assert!(!rep.applicable);
        assert_eq!(rep.chain, Verdict::Inconclusive);

        let q = ModelManifold::quadratic(1.0).unwrap();
        let rep = nadirashvili_reduction(&q, |t| t, |_| -1.0, &grid, &spec()).unwrap();
        assert!(rep.max_ratio <= 1.0 + 1e-12);
        assert_eq!(rep.criterion.classification, Classification::Divergent);
    }

    #[test]
    fn bounded_psi_in_three_dimensions_is_convergent() {
        let m = ModelManifold::euclidean(3).unwrap();
        let v = criterion_v_lambda(&m, |t| t * t, |_| -1.0, 1.0, DEFAULT_T_MAX, &spec()).unwrap();
        assert_eq!(v.classification, Classification::Convergent);
        assert!((v.tail_exponent_fit + 2.0).abs() < 1e-6);
    }
}
