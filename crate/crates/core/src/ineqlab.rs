//! Both sides of the Hardy, Sobolev, η-weighted Poincaré, Caccioppoli and
//! Carleman inequalities, evaluated by quadrature with error budgets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{contract, ensure, Result};
use crate::funcspace::{
    gaussian, make_annulus_bump, make_bump, model_family, positive_quadratic, shifted_inverse_sqrt, subharmonic_certificate,
    BumpSpec, DomainSign, EtaFunction, EtaKind, ModelFamily, ModelParams, ScalarField, SingularPoint, Verdict, WeightPair,
};
use crate::quadcore::{dist, integrate_interval, integrate_whole, uniform_in_ball, BallSpec, MeasuredValue, Opts1d, QuadratureSpec};

/// Both sides of one inequality `lhs ≤ rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub name: String,
    pub lhs: MeasuredValue,
    pub rhs: MeasuredValue,
    pub verdict: Verdict,
    pub inputs_digest: String,
}

impl InequalityReport {
    pub fn new(name: impl Into<String>, lhs: MeasuredValue, rhs: MeasuredValue, inputs: &[&str]) -> Self {
        let verdict = verdict_for(lhs, rhs);
        Self { name: name.into(), lhs, rhs, verdict, inputs_digest: digest(inputs) }
    }

    pub fn inconclusive(name: impl Into<String>, inputs: &[&str]) -> Self {
        let nan = MeasuredValue::new(f64::NAN, f64::NAN);
        Self { name: name.into(), lhs: nan, rhs: nan, verdict: Verdict::Inconclusive, inputs_digest: digest(inputs) }
    }

    /// `rhs - lhs`.
    pub fn margin(&self) -> f64 {
        self.rhs.value - self.lhs.value
    }
}

/// `holds` iff `lhs ≤ rhs + 3(err_l + err_r)`, `violated` iff strictly above,
/// `inconclusive` when either side is not a number.
pub fn verdict_for(lhs: MeasuredValue, rhs: MeasuredValue) -> Verdict {
    let slack = rhs.value + 3.0 * (lhs.err + rhs.err);
    if lhs.value <= slack {
        Verdict::Holds
    } else if lhs.value > slack {
        Verdict::Violated
    } else {
        Verdict::Inconclusive
    }
}

pub fn digest(parts: &[&str]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.as_bytes());
        h.update([0u8]);
    }
    hex::encode(&h.finalize()[..12])
}

/// A ratio whose supremum over a family is the quantity of interest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub name: String,
    pub numerator: MeasuredValue,
    pub denominator: MeasuredValue,
    pub ratio: MeasuredValue,
    pub inputs_digest: String,
}

// ---------------------------------------------------------------------------
// Integration helper

/// `∫ f` over the domain of `phi`, where `f` vanishes wherever `phi` and its
/// gradient do. Radial structure and singular points of `psi` and of an
/// optional weight pole are passed to the integrator.
fn integrate_with<F>(
    label: &str,
    phi: &ScalarField,
    psi: Option<&ScalarField>,
    weight_pole: Option<&[f64]>,
    spec: &QuadratureSpec,
    f: F,
) -> Result<MeasuredValue>
where
    F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
{
    let n = phi.dim();
    let mut field = ScalarField::new(n, label, f);
    if let Some(s) = phi.support() {
        field = field.with_support(s.clone());
    } else if let Some(e) = phi.extent() {
        field = field.with_extent(e.clone());
    } else {
        return Err(contract(format!("{} has neither compact support nor a decay extent", phi.label())));
    }
    if let Some(c) = phi.radial_center() {
        let psi_ok = psi.is_none_or(|p| p.is_radial_about(c));
        let pole_ok = weight_pole.is_none_or(|w| dist(w, c) <= 1e-14);
        if psi_ok && pole_ok {
            field = field.radial(c.to_vec());
        }
    }
    if let Some(p) = psi {
        field = field.with_singulars(p.singular_points());
    }
    if let Some(w) = weight_pole {
        field = field.with_singular(SingularPoint { at: w.to_vec(), excise: 0.0, laplacian_mass: 0.0 });
    }
    integrate_whole(&field, spec)
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// Seeded points of the domain of `phi` where `phi` or its gradient is nonzero.
fn active_samples(phi: &ScalarField, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let Some(dom) = phi.domain() else { return Vec::new() };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; phi.dim()];
    let mut out = Vec::new();
    for _ in 0..count {
        uniform_in_ball(&mut rng, dom, &mut x);
        if phi.eval(&x) != 0.0 || phi.grad_norm2(&x) != 0.0 {
            out.push(x.clone());
        }
    }
    out
}

const PRECHECK_SAMPLES: usize = 2048;

fn point_mass_term(psi: &ScalarField, phi: &ScalarField, weight_at_infinity: f64) -> f64 {
    psi.singular_points()
        .iter()
        .filter(|s| s.laplacian_mass != 0.0)
        .map(|s| {
            let p = phi.eval(&s.at);
            p * p * s.laplacian_mass * weight_at_infinity
        })
        .sum()
}

// ---------------------------------------------------------------------------
// Hardy and Sobolev

/// `(n-2)²/4 ∫ φ² |x|^{-2} ≤ ∫ |∇φ|²`.
pub fn check_hardy(phi: &ScalarField, n: usize, spec: &QuadratureSpec) -> Result<InequalityReport> {
    ensure(n > 2, || format!("Hardy needs n > 2, got {n}"))?;
    ensure(phi.dim() == n, || "phi dimension mismatch".into())?;
    let c = (n as f64 - 2.0).powi(2) / 4.0;
    let origin = vec![0.0; n];
    let p = phi.clone();
    let lhs = integrate_with("hardy-lhs", phi, None, Some(&origin), spec, move |x| {
        let v = p.eval(x);
        if v == 0.0 {
            0.0
        } else {
            v * v / norm2(x)
        }
    })?
    .scale(c);
    let p = phi.clone();
    let rhs = integrate_with("hardy-rhs", phi, None, None, spec, move |x| p.grad_norm2(x))?;
    Ok(InequalityReport::new("hardy", lhs, rhs, &["hardy", phi.label(), &n.to_string()]))
}

/// `[∫|φ|^α ω]^{1/α} ≤ [∫|∇φ|² ω′]^{1/2}` for a user-supplied weight pair.
pub fn check_weighted(pair: &WeightPair, phi: &ScalarField, spec: &QuadratureSpec) -> Result<InequalityReport> {
    ensure(pair.omega.dim() == phi.dim(), || "weight dimension mismatch".into())?;
    let alpha = pair.alpha;
    let (p, w) = (phi.clone(), pair.omega.clone());
    let pole = pair.omega.singular_points().first().map(|s| s.at.clone());
    let a = integrate_with("weighted-lhs", phi, Some(&pair.omega), pole.as_deref(), spec, move |x| {
        let v = p.eval(x);
        if v == 0.0 {
            0.0
        } else {
            v.abs().powf(alpha) * w.eval(x)
        }
    })?;
    let (p, w) = (phi.clone(), pair.omega_prime.clone());
    let b = integrate_with("weighted-rhs", phi, Some(&pair.omega_prime), None, spec, move |x| {
        let g = p.grad_norm2(x);
        if g == 0.0 {
            0.0
        } else {
            g * w.eval(x)
        }
    })?;
    let lhs = if a.value > 0.0 { a.powf(1.0 / alpha) } else { MeasuredValue::new(0.0, a.err.powf(1.0 / alpha)) };
    let rhs = if b.value > 0.0 { b.powf(0.5) } else { MeasuredValue::new(0.0, b.err.sqrt()) };
    Ok(InequalityReport::new(
        "weighted",
        lhs,
        rhs,
        &["weighted", phi.label(), pair.omega.label(), pair.omega_prime.label(), &alpha.to_string()],
    ))
}

/// `[∫|φ|^{2n/(n-2)}]^{(n-2)/n} / ∫|∇φ|²`.
pub fn check_sobolev(phi: &ScalarField, n: usize, spec: &QuadratureSpec) -> Result<RatioReport> {
    ensure(n > 2, || format!("Sobolev needs n > 2, got {n}"))?;
    ensure(phi.dim() == n, || "phi dimension mismatch".into())?;
    let nf = n as f64;
    let q = 2.0 * nf / (nf - 2.0);
    let p = phi.clone();
    let a = integrate_with("sobolev-num", phi, None, None, spec, move |x| p.eval(x).abs().powf(q))?;
    let p = phi.clone();
    let den = integrate_with("sobolev-den", phi, None, None, spec, move |x| p.grad_norm2(x))?;
    let num = if a.value > 0.0 { a.powf((nf - 2.0) / nf) } else { MeasuredValue::exact(0.0) };
    let ratio = if num.value == 0.0 {
        MeasuredValue::exact(0.0)
    } else if den.value <= 0.0 {
        return Err(contract("Dirichlet energy vanishes for a nonzero function"));
    } else {
        num.div(den)
    };
    Ok(RatioReport {
        name: "sobolev".into(),
        numerator: num,
        denominator: den,
        ratio,
        inputs_digest: digest(&["sobolev", phi.label(), &n.to_string()]),
    })
}

// ---------------------------------------------------------------------------
// η-weighted inequalities

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// `η` evaluated at `-ψ`.
    Minus,
    /// `η` evaluated at `ψ`.
    Plus,
}

impl Variant {
    fn arg(self, psi: f64) -> f64 {
        match self {
            Variant::Minus => -psi,
            Variant::Plus => psi,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            Variant::Minus => "minus",
            Variant::Plus => "plus",
        }
    }
}

/// Rejects inputs where `η`'s argument leaves its domain or `η′ ≤ 0`.
fn eta_precheck(psi: &ScalarField, eta: &EtaFunction, phi: &ScalarField, variant: Variant, seed: u64) -> Result<()> {
    for x in active_samples(phi, PRECHECK_SAMPLES, seed) {
        if psi.singular_points().iter().any(|s| dist(&s.at, &x) < 1e-12) {
            continue;
        }
        let t = variant.arg(psi.eval(&x));
        if !eta.accepts(t) {
            return Err(contract(format!("argument {t} of {} outside its domain at {x:?}", eta.name)));
        }
        let d = eta.eta_prime(t);
        if !(d > 0.0) || !(eta.eta(t) > 0.0) {
            return Err(contract(format!("{} not positive increasing at {t}", eta.name)));
        }
    }
    Ok(())
}

/// Large argument standing in for `|ψ| → ∞` at a Newtonian pole.
const FAR: f64 = 1e300;

fn eta_labels<'a>(name: &'a str, psi: &'a ScalarField, eta: &'a EtaFunction, phi: &'a ScalarField, v: Variant) -> [&'a str; 5] {
    [name, psi.label(), &eta.name, phi.label(), v.as_str()]
}

/// Minus: `∫φ²[2Δψ/η(-ψ) + η′(-ψ)|∇ψ|²/η²(-ψ)] ≤ 4∫|∇φ|²/η′(-ψ)`.
/// Plus: `∫φ²[2η(ψ)Δψ + η′(ψ)|∇ψ|²] ≤ 4∫η²(ψ)/η′(ψ) |∇φ|²`.
/// Point masses of `Δψ` enter the left side with `η` at its limit.
pub fn check_prop14(
    psi: &ScalarField,
    eta: &EtaFunction,
    phi: &ScalarField,
    variant: Variant,
    spec: &QuadratureSpec,
) -> Result<InequalityReport> {
    eta_weighted(psi, eta, phi, variant, true, spec)
}

/// As [`check_prop14`] with the `Δψ` term dropped, for subharmonic `ψ`.
pub fn check_poincare_subharmonic(
    psi: &ScalarField,
    eta: &EtaFunction,
    phi: &ScalarField,
    variant: Variant,
    spec: &QuadratureSpec,
) -> Result<InequalityReport> {
    let name = "poincare-subharmonic";
    if let Some(region) = phi.domain() {
        let cert = subharmonic_certificate(psi, region, 512, spec.seed)?;
        if cert.verdict != Verdict::Holds {
            let labels = eta_labels(name, psi, eta, phi, variant);
            return Ok(InequalityReport::inconclusive(name, &labels));
        }
    }
    eta_weighted(psi, eta, phi, variant, false, spec)
}

fn eta_weighted(
    psi: &ScalarField,
    eta: &EtaFunction,
    phi: &ScalarField,
    variant: Variant,
    with_laplacian: bool,
    spec: &QuadratureSpec,
) -> Result<InequalityReport> {
    ensure(psi.dim() == phi.dim(), || "psi and phi dimensions differ".into())?;
    let name = if with_laplacian { "prop14" } else { "poincare-subharmonic" };
    eta_precheck(psi, eta, phi, variant, spec.seed)?;
    let (p, s, e) = (phi.clone(), psi.clone(), eta.clone());
    let lhs = integrate_with(name, phi, Some(psi), None, spec, move |x| {
        let v = p.eval(x);
        if v == 0.0 {
            return 0.0;
        }
        let t = variant.arg(s.eval(x));
        let (h, dh) = (e.eta(t), e.eta_prime(t));
        let g = s.grad_norm2(x);
        let lap = if with_laplacian { s.laplacian_at(x) } else { 0.0 };
        let inner = match variant {
            Variant::Minus => 2.0 * lap / h + dh * g / (h * h),
            Variant::Plus => 2.0 * h * lap + dh * g,
        };
        v * v * inner
    })?;
    let (p, s, e) = (phi.clone(), psi.clone(), eta.clone());
    let rhs = integrate_with(name, phi, Some(psi), None, spec, move |x| {
        let g = p.grad_norm2(x);
        if g == 0.0 {
            return 0.0;
        }
        let t = variant.arg(s.eval(x));
        let w = match variant {
            Variant::Minus => 1.0 / e.eta_prime(t),
            Variant::Plus => e.eta(t).powi(2) / e.eta_prime(t),
        };
        4.0 * g * w
    })?;
    let mut lhs = lhs;
    if with_laplacian {
        // At a Newtonian pole ψ → -∞.
        let w = match variant {
            Variant::Minus => 2.0 / eta.eta(FAR),
            Variant::Plus => 2.0 * eta.eta(-FAR),
        };
        let pm = point_mass_term(psi, phi, w);
        if pm != 0.0 {
            ensure(pm.is_finite(), || format!("{} has no finite limit at the pole", eta.name))?;
            lhs = lhs.add(MeasuredValue::exact(pm));
        }
    }
    let labels = eta_labels(name, psi, eta, phi, variant);
    Ok(InequalityReport::new(name, lhs, rhs, &labels))
}

/// `κ_η(t) = ∫_γ^t √η′(s)/η(s) ds`.
pub fn kappa_eta(eta: &EtaFunction, t: f64) -> Result<f64> {
    let gamma = eta.gamma.unwrap_or(1.0);
    ensure(gamma > 0.0 && t >= gamma, || format!("need t >= gamma > 0, got t={t}, gamma={gamma}"))?;
    ensure(eta.accepts(gamma), || format!("gamma {gamma} outside the domain of {}", eta.name))?;
    if t == gamma {
        return Ok(0.0);
    }
    // η′ must be nonincreasing on [γ, t].
    let mut prev = f64::INFINITY;
    for i in 0..=64 {
        let s = gamma + (t - gamma) * i as f64 / 64.0;
        let d = eta.eta_prime(s);
        ensure(d > 0.0, || format!("eta' not positive at {s}"))?;
        ensure(d <= prev * (1.0 + 1e-12), || format!("eta' increasing near {s}"))?;
        prev = d;
    }
    let o = integrate_interval(
        |s| eta.eta_prime(s).sqrt() / eta.eta(s),
        gamma,
        t,
        &Opts1d::new(1e-13, 1e-15, 100_000),
    )?;
    Ok(o.value)
}

/// Cauchy–Schwarz value `(t-γ)(1/η(γ) - 1/η(t))` bounding `κ_η(t)²`.
pub fn kappa_schwarz_bound(eta: &EtaFunction, t: f64) -> f64 {
    let gamma = eta.gamma.unwrap_or(1.0);
    (t - gamma) * (1.0 / eta.eta(gamma) - 1.0 / eta.eta(t))
}

/// `κ_η(t)² ≤ t/η(γ)` at each grid point.
pub fn bound_check(eta: &EtaFunction, t_grid: &[f64]) -> Result<Vec<InequalityReport>> {
    let gamma = eta.gamma.unwrap_or(1.0);
    t_grid
        .iter()
        .map(|&t| {
            let k = kappa_eta(eta, t)?;
            let lhs = MeasuredValue::new(k * k, 1e-12 * k * k);
            let rhs = MeasuredValue::exact(t / eta.eta(gamma));
            Ok(InequalityReport::new("kappa-eta", lhs, rhs, &["kappa-eta", &eta.name, &t.to_string()]))
        })
        .collect()
}

/// `∫φ²Δψ ≤ 3π ∫(1+ψ²)|∇φ|²` for negative subharmonic `ψ`.
pub fn check_laplace_3pi(psi: &ScalarField, phi: &ScalarField, spec: &QuadratureSpec) -> Result<InequalityReport> {
    ensure(psi.dim() == phi.dim(), || "psi and phi dimensions differ".into())?;
    let labels = ["laplace-3pi", psi.label(), phi.label()];
    if let Some(region) = phi.domain() {
        let cert = subharmonic_certificate(psi, region, 512, spec.seed)?;
        let negative = cert.max_value < 0.0 || cert.samples_used == 0;
        if cert.verdict != Verdict::Holds || !negative {
            return Ok(InequalityReport::inconclusive("laplace-3pi", &labels));
        }
    }
    let (p, s) = (phi.clone(), psi.clone());
    let lhs = integrate_with("laplace-3pi", phi, Some(psi), None, spec, move |x| {
        let v = p.eval(x);
        if v == 0.0 {
            0.0
        } else {
            v * v * s.laplacian_at(x)
        }
    })?
    .add(MeasuredValue::exact(point_mass_term(psi, phi, 1.0)));
    let (p, s) = (phi.clone(), psi.clone());
    let rhs = integrate_with("laplace-3pi", phi, Some(psi), None, spec, move |x| {
        let g = p.grad_norm2(x);
        if g == 0.0 {
            0.0
        } else {
            let v = s.eval(x);
            (1.0 + v * v) * g
        }
    })?
    .scale(3.0 * std::f64::consts::PI);
    Ok(InequalityReport::new("laplace-3pi", lhs, rhs, &labels))
}

/// `∫φ²|∇ψ|² ≤ 4∫ψ²|∇φ|² - 2∫φ²ψΔψ` for positive `ψ`.
pub fn check_caccioppoli(psi: &ScalarField, phi: &ScalarField, spec: &QuadratureSpec) -> Result<InequalityReport> {
    ensure(psi.dim() == phi.dim(), || "psi and phi dimensions differ".into())?;
    for x in active_samples(phi, PRECHECK_SAMPLES, spec.seed) {
        let v = psi.eval(&x);
        ensure(v > 0.0, || format!("psi = {v} is not positive at {x:?}"))?;
    }
    let (p, s) = (phi.clone(), psi.clone());
    let lhs = integrate_with("caccioppoli", phi, Some(psi), None, spec, move |x| {
        let v = p.eval(x);
        if v == 0.0 {
            0.0
        } else {
            v * v * s.grad_norm2(x)
        }
    })?;
    let (p, s) = (phi.clone(), psi.clone());
    let a = integrate_with("caccioppoli", phi, Some(psi), None, spec, move |x| {
        let g = p.grad_norm2(x);
        if g == 0.0 {
            0.0
        } else {
            s.eval(x).powi(2) * g
        }
    })?;
    let (p, s) = (phi.clone(), psi.clone());
    let b = integrate_with("caccioppoli", phi, Some(psi), None, spec, move |x| {
        let v = p.eval(x);
        if v == 0.0 {
            0.0
        } else {
            v * v * s.eval(x) * s.laplacian_at(x)
        }
    })?;
    let rhs = a.scale(4.0).sub(b.scale(2.0));
    Ok(InequalityReport::new("caccioppoli", lhs, rhs, &["caccioppoli", psi.label(), phi.label()]))
}

// ---------------------------------------------------------------------------
// Carleman

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarlemanSpec {
    pub tau: f64,
    pub n: usize,
    pub dist_to_halfint: f64,
}

impl CarlemanSpec {
    pub fn new(tau: f64, n: usize) -> Result<Self> {
        let s = tau - n as f64 / 2.0;
        let c = Self { tau, n, dist_to_halfint: (s - s.round()).abs() };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.tau >= self.n as f64, || format!("need tau >= n, got tau={}, n={}", self.tau, self.n))?;
        ensure(self.dist_to_halfint > 0.0, || format!("tau - n/2 = {} is an integer", self.tau - self.n as f64 / 2.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CarlemanWhich {
    WeightOnly,
    GradientWeight,
    GradientChain,
}

/// Weighted norms `A = ‖|x|^{-τ}φ‖`, `G = ‖|x|^{1-τ}∇φ‖`, `D = ‖|x|^{2-τ}Δφ‖`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarlemanNorms {
    pub a: MeasuredValue,
    pub g: MeasuredValue,
    pub d: MeasuredValue,
    /// `∫|x|^{2-2τ} φ Δφ`.
    pub cross: MeasuredValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarlemanReport {
    pub tau: f64,
    pub n: usize,
    pub which: CarlemanWhich,
    pub ratio: MeasuredValue,
    pub norms: CarlemanNorms,
    /// `4(τ-1)²A² + 2AD - G²`, for the gradient chain.
    pub chain_slack: Option<f64>,
    /// `4(τ-1)²A² - 2∫|x|^{2-2τ}φΔφ - G²`, the Caccioppoli step alone.
    pub caccioppoli_slack: Option<f64>,
    pub inputs_digest: String,
}

fn ensure_origin_excluded(phi: &ScalarField) -> Result<()> {
    let dom = phi
        .domain()
        .ok_or_else(|| contract("Carleman test function needs compact support"))?;
    let n = phi.dim();
    let origin = vec![0.0; n];
    if !dom.contains(&origin) {
        return Ok(());
    }
    let probe = BallSpec::origin(n, 1e-3 * dom.radius);
    let mut rng = ChaCha8Rng::seed_from_u64(0x0c4e);
    let mut x = vec![0.0; n];
    let touches = |x: &[f64]| phi.eval(x) != 0.0 || phi.grad_norm2(x) != 0.0;
    if touches(&origin) {
        return Err(contract("support of phi contains the origin"));
    }
    for _ in 0..256 {
        uniform_in_ball(&mut rng, &probe, &mut x);
        if touches(&x) {
            return Err(contract("support of phi touches the origin"));
        }
    }
    Ok(())
}

pub fn carleman_norms(phi: &ScalarField, tau: f64, spec: &QuadratureSpec) -> Result<CarlemanNorms> {
    ensure_origin_excluded(phi)?;
    let origin = vec![0.0; phi.dim()];
    let p = phi.clone();
    let a2 = integrate_with("carleman-a", phi, None, Some(&origin), spec, move |x| {
        let v = p.eval(x);
        if v == 0.0 {
            0.0
        } else {
            v * v * norm2(x).powf(-tau)
        }
    })?;
    let p = phi.clone();
    let g2 = integrate_with("carleman-g", phi, None, Some(&origin), spec, move |x| {
        let g = p.grad_norm2(x);
        if g == 0.0 {
            0.0
        } else {
            g * norm2(x).powf(1.0 - tau)
        }
    })?;
    let p = phi.clone();
    let d2 = integrate_with("carleman-d", phi, None, Some(&origin), spec, move |x| {
        let l = p.laplacian_at(x);
        if l == 0.0 {
            0.0
        } else {
            l * l * norm2(x).powf(2.0 - tau)
        }
    })?;
    let p = phi.clone();
    let cross = integrate_with("carleman-c", phi, None, Some(&origin), spec, move |x| {
        let v = p.eval(x);
        if v == 0.0 {
            0.0
        } else {
            v * p.laplacian_at(x) * norm2(x).powf(1.0 - tau)
        }
    })?;
    Ok(CarlemanNorms { a: a2.powf(0.5), g: g2.powf(0.5), d: d2.powf(0.5), cross })
}

/// Weight-only: `‖|x|^{-τ}φ‖ / (τ^{-1}‖|x|^{2-τ}Δφ‖)`. Gradient-weight:
/// `‖|x|^{1-τ}∇φ‖ / ‖|x|^{2-τ}Δφ‖`. Gradient-chain: `G / √(4(τ-1)²A² + 2AD)`,
/// the bound obtained from Caccioppoli with weight `|x|^{1-τ}` and Cauchy–Schwarz.
pub fn carleman_ratio(
    phi: &ScalarField,
    spec_c: &CarlemanSpec,
    which: CarlemanWhich,
    spec: &QuadratureSpec,
) -> Result<CarlemanReport> {
    spec_c.validate()?;
    ensure(phi.dim() == spec_c.n, || "phi dimension does not match the Carleman spec".into())?;
    let tau = spec_c.tau;
    let nm = carleman_norms(phi, tau, spec)?;
    let (a, g, d) = (nm.a, nm.g, nm.d);
    let k = 4.0 * (tau - 1.0) * (tau - 1.0);
    let (ratio, chain, cacc) = match which {
        CarlemanWhich::WeightOnly => (a.scale(tau).div(d), None, None),
        CarlemanWhich::GradientWeight => (g.div(d), None, None),
        CarlemanWhich::GradientChain => {
            let bound = k * a.value * a.value + 2.0 * a.value * d.value;
            let bound_err = 2.0 * k * a.value * a.err + 2.0 * (a.err * d.value + a.value * d.err);
            let r = g.div(MeasuredValue::new(bound, bound_err).powf(0.5));
            let g2 = g.value * g.value;
            (r, Some(bound - g2), Some(k * a.value * a.value - 2.0 * nm.cross.value - g2))
        }
    };
    Ok(CarlemanReport {
        tau,
        n: spec_c.n,
        which,
        ratio,
        norms: nm,
        chain_slack: chain,
        caccioppoli_slack: cacc,
        inputs_digest: digest(&["carleman", phi.label(), &tau.to_string(), &format!("{which:?}")]),
    })
}

/// Annulus bumps around the origin plus off-center bumps avoiding it.
pub fn carleman_corpus(n: usize, count: usize, seed: u64) -> Result<Vec<ScalarField>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        if i % 2 == 0 {
            let r1 = rng.random_range(0.5..1.5);
            let w = rng.random_range(0.6..1.5);
            out.push(make_annulus_bump(vec![0.0; n], [r1, r1 + 0.3 * w, r1 + 0.7 * w, r1 + w])?);
        } else {
            let ri = rng.random_range(0.2..0.6);
            let ro = ri + rng.random_range(0.2..0.6);
            let mut c = vec![0.0; n];
            c[i % n] = ro + rng.random_range(0.5..1.5);
            out.push(make_bump(&BumpSpec { center: c, r_inner: ri, r_outer: ro }, n)?);
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Seeded corpus

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "family")]
pub enum PhiSpec {
    Bump { center: Vec<f64>, r_inner: f64, r_outer: f64 },
    Gaussian { center: Vec<f64>, sigma: f64 },
    Zero,
}

impl PhiSpec {
    pub fn build(&self, n: usize) -> Result<ScalarField> {
        match self {
            PhiSpec::Bump { center, r_inner, r_outer } => {
                make_bump(&BumpSpec { center: center.clone(), r_inner: *r_inner, r_outer: *r_outer }, n)
            }
            PhiSpec::Gaussian { center, sigma } => gaussian(n, center.clone(), *sigma),
            PhiSpec::Zero => Ok(ScalarField::zero(n)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "family")]
pub enum PsiSpec {
    Model { model: ModelFamily, eps: f64 },
    PositiveQuadratic { a: f64 },
    ShiftedInverseSqrt { c: f64 },
    Constant { c: f64 },
}

impl PsiSpec {
    pub fn build(&self, n: usize) -> Result<ScalarField> {
        match self {
            PsiSpec::Model { model, eps } => model_family(*model, n, ModelParams { eps: *eps, shift: 3.0 }),
            PsiSpec::PositiveQuadratic { a } => Ok(positive_quadratic(n, *a)),
            PsiSpec::ShiftedInverseSqrt { c } => shifted_inverse_sqrt(n, *c),
            PsiSpec::Constant { c } => Ok(ScalarField::constant(n, *c)),
        }
    }
}

/// One corpus input: a test function with a negative and a positive weight function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub n: usize,
    pub phi: PhiSpec,
    pub psi_negative: PsiSpec,
    pub psi_positive: PsiSpec,
}

/// `count` seeded entries in dimensions 3 and 4. The Newtonian family is
/// drawn only in dimension 3, where `(1 + ψ²)|∇φ|²` stays integrable.
pub fn seeded_corpus(count: usize, seed: u64) -> Vec<CorpusEntry> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = if rng.random_bool(0.5) { 3 } else { 4 };
            let mut center = vec![0.0; n];
            if rng.random_bool(0.5) {
                for c in center.iter_mut() {
                    *c = rng.random_range(-0.6..0.6);
                }
            }
            let phi = if rng.random_bool(0.5) {
                let r_inner = rng.random_range(0.3..1.0);
                PhiSpec::Bump { center, r_inner, r_outer: r_inner + rng.random_range(0.3..1.5) }
            } else {
                PhiSpec::Gaussian { center, sigma: rng.random_range(0.3..1.2) }
            };
            let k = rng.random_range(0..if n == 3 { 3 } else { 2 });
            let eps = rng.random_range(0.2..1.0);
            let psi_negative = match k {
                0 => PsiSpec::Model { model: ModelFamily::SmoothedNewtonian, eps },
                1 => PsiSpec::Model { model: ModelFamily::InverseSqrt, eps },
                _ => PsiSpec::Model { model: ModelFamily::Newtonian, eps },
            };
            let psi_positive = if rng.random_bool(0.5) {
                PsiSpec::PositiveQuadratic { a: rng.random_range(0.1..2.0) }
            } else {
                PsiSpec::ShiftedInverseSqrt { c: rng.random_range(1.5..3.0) }
            };
            CorpusEntry { n, phi, psi_negative, psi_positive }
        })
        .collect()
}

/// Reports for one entry, and whether a holding arctan-weighted verdict implies
/// the 3π verdict.
#[derive(Debug, Clone, Serialize)]
pub struct EntryOutcome {
    pub reports: Vec<InequalityReport>,
    pub implication_ok: bool,
}

pub fn eta_families() -> Vec<EtaFunction> {
    vec![
        EtaFunction::identity(),
        EtaFunction::from_kind(EtaKind::Power { alpha: 0.5 }).expect("valid"),
        EtaFunction::arctan(),
    ]
}

pub fn run_entry(entry: &CorpusEntry, spec: &QuadratureSpec) -> Result<EntryOutcome> {
    let n = entry.n;
    let phi = entry.phi.build(n)?;
    let neg = entry.psi_negative.build(n)?;
    let pos = entry.psi_positive.build(n)?;
    let mut reports = vec![check_hardy(&phi, n, spec)?];
    let mut arctan_minus = None;
    for eta in eta_families() {
        let r = check_prop14(&neg, &eta, &phi, Variant::Minus, spec)?;
        if eta.domain_sign == DomainSign::AnyArg {
            arctan_minus = Some(r.verdict);
        }
        reports.push(r);
        reports.push(check_prop14(&pos, &eta, &phi, Variant::Plus, spec)?);
    }
    reports.push(check_poincare_subharmonic(&neg, &EtaFunction::identity(), &phi, Variant::Minus, spec)?);
    let l3 = check_laplace_3pi(&neg, &phi, spec)?;
    let implication_ok = arctan_minus != Some(Verdict::Holds) || l3.verdict == Verdict::Holds;
    reports.push(l3);
    reports.push(check_caccioppoli(&pos, &phi, spec)?);
    Ok(EntryOutcome { reports, implication_ok })
}

#[derive(Debug, Clone, Serialize)]
pub struct CorpusSummary {
    pub entries: usize,
    pub reports: Vec<InequalityReport>,
    pub violated: usize,
    pub inconclusive: usize,
    pub implication_failures: usize,
}

/// Runs [`run_entry`] over the corpus in parallel, keeping input order.
pub fn run_corpus(entries: &[CorpusEntry], spec: &QuadratureSpec) -> Result<CorpusSummary> {
    let outs: Vec<Result<EntryOutcome>> = entries.par_iter().map(|e| run_entry(e, spec)).collect();
    let mut reports = Vec::new();
    let mut implication_failures = 0;
    for o in outs {
        let o = o?;
        implication_failures += usize::from(!o.implication_ok);
        reports.extend(o.reports);
    }
    let count = |v: Verdict| reports.iter().filter(|r| r.verdict == v).count();
    Ok(CorpusSummary {
        entries: entries.len(),
        violated: count(Verdict::Violated),
        inconclusive: count(Verdict::Inconclusive),
        implication_failures,
        reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::LabError;
    use crate::funcspace::model_subharmonic;
    use std::f64::consts::PI;

    fn spec() -> QuadratureSpec {
        QuadratureSpec::adaptive(1e-10, 1e-13)
    }

    #[test]
    fn hardy_gaussian_closed_form() {
        let g = gaussian(3, vec![0.0; 3], 1.0).unwrap();
        let r = check_hardy(&g, 3, &spec()).unwrap();
        assert!((r.lhs.value - PI.powf(1.5) / 2.0).abs() < 1e-8, "{:?}", r.lhs);
        assert!((r.rhs.value - 1.5 * PI.powf(1.5)).abs() < 1e-8, "{:?}", r.rhs);
        assert_eq!(r.verdict, Verdict::Holds);
    }

    #[test]
    fn zero_function_holds() {
        let z = ScalarField::zero(3);
        let r = check_hardy(&z, 3, &spec()).unwrap();
        assert_eq!((r.lhs.value, r.rhs.value, r.verdict), (0.0, 0.0, Verdict::Holds));
        let psi = model_subharmonic("inverse-sqrt", 3, ModelParams::default()).unwrap();
        let r = check_prop14(&psi, &EtaFunction::identity(), &z, Variant::Minus, &spec()).unwrap();
        assert_eq!(r.verdict, Verdict::Holds);
        let s = check_sobolev(&z, 3, &spec()).unwrap();
        assert_eq!(s.ratio.value, 0.0);
    }

    #[test]
    fn verdict_rule() {
        let m = |v, e| MeasuredValue::new(v, e);
        assert_eq!(verdict_for(m(1.0, 0.0), m(1.0, 0.0)), Verdict::Holds);
        assert_eq!(verdict_for(m(1.3, 0.05), m(1.0, 0.05)), Verdict::Holds);
        assert_eq!(verdict_for(m(1.31, 0.05), m(1.0, 0.0)), Verdict::Violated);
        assert_eq!(verdict_for(m(f64::NAN, 0.0), m(1.0, 0.0)), Verdict::Inconclusive);
    }

    #[test]
    fn kappa_identity() {
        let eta = EtaFunction::identity().with_gamma(1.0);
        let e = std::f64::consts::E;
        assert!((kappa_eta(&eta, e).unwrap() - 1.0).abs() < 1e-12);
        assert!((kappa_schwarz_bound(&eta, e) - (e - 1.0).powi(2) / e).abs() < 1e-15);
        assert_eq!(kappa_eta(&eta, 1.0).unwrap(), 0.0);
        let inc = EtaFunction::custom("t^2", |t| t * t, |t| 2.0 * t, DomainSign::PositiveArg);
        assert!(kappa_eta(&inc, 3.0).is_err());
    }

    #[test]
    fn weighted_poincare_rejects_decreasing_eta() {
        let psi = model_subharmonic("inverse-sqrt", 3, ModelParams::default()).unwrap();
        let phi = make_bump(&BumpSpec { center: vec![0.0; 3], r_inner: 0.5, r_outer: 1.0 }, 3).unwrap();
        let bad = EtaFunction::custom("1/t", |t| 1.0 / t, |t| -1.0 / (t * t), DomainSign::PositiveArg);
        let r = check_prop14(&psi, &bad, &phi, Variant::Minus, &spec());
        assert!(matches!(r, Err(LabError::ContractViolation(_))));
        // η(t) = t at -ψ needs ψ < 0; a positive ψ leaves the domain.
        let pos = positive_quadratic(3, 1.0);
        let r = check_prop14(&pos, &EtaFunction::identity(), &phi, Variant::Minus, &spec());
        assert!(matches!(r, Err(LabError::ContractViolation(_))));
    }

    #[test]
    fn newtonian_point_mass() {
        let psi = model_subharmonic("newtonian", 3, ModelParams::default()).unwrap();
        let phi = make_bump(&BumpSpec { center: vec![0.0; 3], r_inner: 1.0, r_outer: 2.0 }, 3).unwrap();
        let r = check_laplace_3pi(&psi, &phi, &spec()).unwrap();
        assert!((r.lhs.value - 4.0 * PI).abs() < 1e-9, "{:?}", r.lhs);
        assert_eq!(r.verdict, Verdict::Holds, "{r:?}");
    }

    #[test]
    fn caccioppoli_requires_positive_psi() {
        let phi = make_bump(&BumpSpec { center: vec![0.0; 3], r_inner: 1.0, r_outer: 2.0 }, 3).unwrap();
        let neg = ScalarField::constant(3, -1.0);
        assert!(check_caccioppoli(&neg, &phi, &spec()).is_err());
        let c = ScalarField::constant(3, 2.0);
        let r = check_caccioppoli(&c, &phi, &spec()).unwrap();
        assert_eq!(r.lhs.value, 0.0);
        assert_eq!(r.verdict, Verdict::Holds);
    }

    #[test]
    fn carleman_spec_admissibility() {
        assert!(CarlemanSpec::new(3.0, 3).is_ok());
        assert!(CarlemanSpec::new(2.0, 3).is_err());
        assert!(CarlemanSpec::new(3.5, 3).is_err());
    }

    #[test]
    fn carleman_rejects_origin() {
        let phi = make_bump(&BumpSpec { center: vec![0.0; 3], r_inner: 1.0, r_outer: 2.0 }, 3).unwrap();
        let c = CarlemanSpec::new(3.0, 3).unwrap();
        assert!(carleman_ratio(&phi, &c, CarlemanWhich::WeightOnly, &spec()).is_err());
    }
}
