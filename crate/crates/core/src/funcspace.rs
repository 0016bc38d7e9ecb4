//! Test functions and weights: bumps, Gaussians, the model subharmonic
//! families, differentiation, and sampled subharmonicity certificates.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{contract, ensure, LabError, Result};
use crate::quadcore::{dist, uniform_in_ball, BallSpec, DimensionConstants, MeasuredValue};

pub type EvalFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type GradFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
pub type ComplexFn = Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tags {
    pub subharmonic: bool,
    pub negative: bool,
    pub harmonic: bool,
    pub holomorphic: bool,
    pub pluriharmonic: bool,
}

/// A point where the field blows up. Certificates skip `B(at, excise)`;
/// `laplacian_mass` is the weight of the point mass in the distributional
/// Laplacian (zero when there is none).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularPoint {
    pub at: Vec<f64>,
    pub excise: f64,
    pub laplacian_mass: f64,
}

/// Real-valued function on `R^n` with optional analytic derivatives and
/// metadata used by the integrators.
#[derive(Clone)]
pub struct ScalarField {
    dim: usize,
    label: String,
    eval: EvalFn,
    grad: Option<GradFn>,
    lap: Option<EvalFn>,
    radial_about: Option<Vec<f64>>,
    support: Option<BallSpec>,
    extent: Option<BallSpec>,
    singular: Vec<SingularPoint>,
    pub tags: Tags,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("dim", &self.dim)
            .field("label", &self.label)
            .field("analytic_gradient", &self.grad.is_some())
            .field("analytic_laplacian", &self.lap.is_some())
            .field("radial_about", &self.radial_about)
            .field("support", &self.support)
            .field("singular", &self.singular)
            .field("tags", &self.tags)
            .finish()
    }
}

impl ScalarField {
    pub fn new<F>(dim: usize, label: impl Into<String>, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            dim,
            label: label.into(),
            eval: Arc::new(f),
            grad: None,
            lap: None,
            radial_about: None,
            support: None,
            extent: None,
            singular: Vec::new(),
            tags: Tags::default(),
        }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        let mut f = Self::new(dim, format!("const({c})"), move |_| c)
            .with_gradient(|_, g| g.iter_mut().for_each(|v| *v = 0.0))
            .with_laplacian(|_| 0.0)
            .radial(vec![0.0; dim]);
        f.tags = Tags { subharmonic: true, harmonic: true, negative: c < 0.0, ..Tags::default() };
        f
    }

    pub fn zero(dim: usize) -> Self {
        Self::constant(dim, 0.0).with_support(BallSpec::origin(dim, 1.0))
    }

    pub fn with_gradient<G>(mut self, g: G) -> Self
    where
        G: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        self.grad = Some(Arc::new(g));
        self
    }

    pub fn with_laplacian<L>(mut self, l: L) -> Self
    where
        L: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        self.lap = Some(Arc::new(l));
        self
    }

    pub fn without_derivatives(mut self) -> Self {
        self.grad = None;
        self.lap = None;
        self
    }

    pub fn radial(mut self, center: Vec<f64>) -> Self {
        self.radial_about = Some(center);
        self
    }

    pub fn not_radial(mut self) -> Self {
        self.radial_about = None;
        self
    }

    pub fn with_support(mut self, b: BallSpec) -> Self {
        self.support = Some(b);
        self
    }

    pub fn with_extent(mut self, b: BallSpec) -> Self {
        self.extent = Some(b);
        self
    }

    pub fn with_singular(mut self, s: SingularPoint) -> Self {
        self.singular.push(s);
        self
    }

    pub fn with_singulars(mut self, s: &[SingularPoint]) -> Self {
        self.singular.extend_from_slice(s);
        self
    }

    pub fn with_tags(mut self, t: Tags) -> Self {
        self.tags = t;
        self
    }

    pub fn with_label(mut self, l: impl Into<String>) -> Self {
        self.label = l.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    pub fn eval_fn(&self) -> EvalFn {
        self.eval.clone()
    }

    pub fn support(&self) -> Option<&BallSpec> {
        self.support.as_ref()
    }

    pub fn extent(&self) -> Option<&BallSpec> {
        self.extent.as_ref()
    }

    /// Support if declared, otherwise the effective extent.
    pub fn domain(&self) -> Option<&BallSpec> {
        self.support.as_ref().or(self.extent.as_ref())
    }

    pub fn singular_points(&self) -> &[SingularPoint] {
        &self.singular
    }

    pub fn radial_center(&self) -> Option<&[f64]> {
        self.radial_about.as_deref()
    }

    pub fn is_radial_about(&self, c: &[f64]) -> bool {
        self.radial_about.as_ref().is_some_and(|r| dist(r, c) <= 1e-14)
    }

    pub fn has_analytic_gradient(&self) -> bool {
        self.grad.is_some()
    }

    pub fn has_analytic_laplacian(&self) -> bool {
        self.lap.is_some()
    }

    /// Gradient into `out`, analytic when available, otherwise finite differences.
    pub fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        match &self.grad {
            Some(g) => g(x, out),
            None => {
                let (g, _) = fd_gradient(&*self.eval, x);
                out.copy_from_slice(&g);
            }
        }
    }

    pub fn grad_norm2(&self, x: &[f64]) -> f64 {
        let mut g = [0.0; 16];
        let g = &mut g[..self.dim];
        self.gradient_into(x, g);
        g.iter().map(|v| v * v).sum()
    }

    pub fn laplacian_at(&self, x: &[f64]) -> f64 {
        match &self.lap {
            Some(l) => l(x),
            None => fd_laplacian(&*self.eval, x).value,
        }
    }

    fn near_singular(&self, x: &[f64]) -> bool {
        let scale = x.iter().map(|v| v.abs()).fold(1.0, f64::max);
        self.singular.iter().any(|s| dist(&s.at, x) <= 1e-12 * scale)
    }
}

/// Complex-valued function on `C^m ≅ R^{2m}`, coordinates ordered
/// `(Re z_1, Im z_1, Re z_2, Im z_2, ...)`.
#[derive(Clone)]
pub struct ComplexField {
    pub dim: usize,
    pub label: String,
    eval: ComplexFn,
    pub support: Option<BallSpec>,
    pub tags: Tags,
}

impl fmt::Debug for ComplexField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ComplexField").field("dim", &self.dim).field("label", &self.label).finish()
    }
}

impl ComplexField {
    pub fn new<F>(dim: usize, label: impl Into<String>, f: F) -> Self
    where
        F: Fn(&[f64]) -> Complex64 + Send + Sync + 'static,
    {
        Self { dim, label: label.into(), eval: Arc::new(f), support: None, tags: Tags::default() }
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> Complex64 {
        (self.eval)(x)
    }

    pub fn with_tags(mut self, t: Tags) -> Self {
        self.tags = t;
        self
    }

    pub fn with_support(mut self, b: BallSpec) -> Self {
        self.support = Some(b);
        self
    }

    pub fn real_part(&self) -> ScalarField {
        let f = self.eval.clone();
        ScalarField::new(self.dim, format!("Re[{}]", self.label), move |x| f(x).re)
    }
}

// ---------------------------------------------------------------------------
// Finite differences

fn fd_step(x: f64, power: f64) -> f64 {
    f64::EPSILON.powf(power) * x.abs().max(1.0)
}

/// Central differences with one Richardson step; step `ε^{1/3}` scaled by `|x_i|`.
pub fn fd_gradient(f: &(dyn Fn(&[f64]) -> f64 + Send + Sync), x: &[f64]) -> (Vec<f64>, f64) {
    let mut y = x.to_vec();
    let mut g = vec![0.0; x.len()];
    let mut err: f64 = 0.0;
    for i in 0..x.len() {
        let h = fd_step(x[i], 1.0 / 3.0);
        let d = |h: f64, y: &mut Vec<f64>| {
            y[i] = x[i] + h;
            let a = f(y);
            y[i] = x[i] - h;
            let b = f(y);
            y[i] = x[i];
            (a - b) / (2.0 * h)
        };
        let d1 = d(h, &mut y);
        let d2 = d(0.5 * h, &mut y);
        let r = (4.0 * d2 - d1) / 3.0;
        g[i] = r;
        err = err.max((r - d2).abs());
    }
    (g, err)
}

/// Second differences with one Richardson step. The step is `ε^{1/6}` scaled
/// by `|x_i|`, which balances rounding against the fourth-order truncation.
pub fn fd_laplacian(f: &(dyn Fn(&[f64]) -> f64 + Send + Sync), x: &[f64]) -> MeasuredValue {
    let mut y = x.to_vec();
    let f0 = f(x);
    let mut total = 0.0;
    let mut err = 0.0;
    for i in 0..x.len() {
        let h = fd_step(x[i], 1.0 / 6.0);
        let d = |h: f64, y: &mut Vec<f64>| {
            y[i] = x[i] + h;
            let a = f(y);
            y[i] = x[i] - h;
            let b = f(y);
            y[i] = x[i];
            (a - 2.0 * f0 + b) / (h * h)
        };
        let d1 = d(h, &mut y);
        let d2 = d(0.5 * h, &mut y);
        let r = (4.0 * d2 - d1) / 3.0;
        total += r;
        err += (r - d2).abs();
    }
    MeasuredValue::new(total, err)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiffOrder {
    Gradient,
    Laplacian,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Derivative {
    Gradient { value: Vec<f64>, err: f64, analytic: bool },
    Laplacian { value: MeasuredValue, analytic: bool },
}

pub fn differentiate(field: &ScalarField, x: &[f64], order: DiffOrder) -> Result<Derivative> {
    ensure(x.len() == field.dim(), || "point dimension mismatch".into())?;
    if field.near_singular(x) {
        return Err(contract(format!("{} is singular at {x:?}", field.label())));
    }
    Ok(match order {
        DiffOrder::Gradient => match &field.grad {
            Some(g) => {
                let mut out = vec![0.0; x.len()];
                g(x, &mut out);
                Derivative::Gradient { value: out, err: 0.0, analytic: true }
            }
            None => {
                let (value, err) = fd_gradient(&*field.eval, x);
                Derivative::Gradient { value, err, analytic: false }
            }
        },
        DiffOrder::Laplacian => match &field.lap {
            Some(l) => Derivative::Laplacian { value: MeasuredValue::exact(l(x)), analytic: true },
            None => Derivative::Laplacian { value: fd_laplacian(&*field.eval, x), analytic: false },
        },
    })
}

// ---------------------------------------------------------------------------
// Radial constructions

/// Build a field `p(|x - c|)` from a profile returning `(p, p', p'')`.
pub fn radial_field<P>(dim: usize, center: Vec<f64>, label: impl Into<String>, p: P) -> ScalarField
where
    P: Fn(f64) -> (f64, f64, f64) + Send + Sync + 'static,
{
    let p = Arc::new(p);
    let (c1, c2, c3) = (center.clone(), center.clone(), center.clone());
    let (p1, p2, p3) = (p.clone(), p.clone(), p);
    let rho = |x: &[f64], c: &[f64]| dist(x, c);
    ScalarField::new(dim, label, move |x| p1(rho(x, &c1)).0)
        .with_gradient(move |x, g| {
            let r = rho(x, &c2);
            let d = p2(r).1;
            for i in 0..x.len() {
                g[i] = if r > 0.0 { d * (x[i] - c2[i]) / r } else { 0.0 };
            }
        })
        .with_laplacian(move |x| {
            let r = rho(x, &c3);
            let (_, d1, d2) = p3(r);
            if r > 0.0 {
                d2 + (x.len() as f64 - 1.0) * d1 / r
            } else {
                x.len() as f64 * d2
            }
        })
        .radial(center)
}

/// Quintic smoothstep `S(t) = 6t^5 - 15t^4 + 10t^3` clamped to `[0, 1]`,
/// returned with its first two derivatives.
pub fn smoothstep(t: f64) -> (f64, f64, f64) {
    if t <= 0.0 {
        (0.0, 0.0, 0.0)
    } else if t >= 1.0 {
        (1.0, 0.0, 0.0)
    } else {
        let s = t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
        let d = 30.0 * t * t * (1.0 - t) * (1.0 - t);
        let dd = 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t);
        (s, d, dd)
    }
}

/// `max |S'| = S'(1/2)`.
pub const BUMP_GRADIENT_CONSTANT: f64 = 1.875;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpSpec {
    pub center: Vec<f64>,
    pub r_inner: f64,
    pub r_outer: f64,
}

/// `1` on `B(c, r_inner)`, `0` outside `B(c, r_outer)`, quintic transition.
/// `|∇χ| ≤ BUMP_GRADIENT_CONSTANT / (r_outer - r_inner)`.
pub fn make_bump(spec: &BumpSpec, dim: usize) -> Result<ScalarField> {
    ensure(spec.center.len() == dim, || "bump center dimension mismatch".into())?;
    ensure(spec.r_inner > 0.0 && spec.r_inner < spec.r_outer, || {
        format!("need 0 < r_inner < r_outer, got ({}, {})", spec.r_inner, spec.r_outer)
    })?;
    let (a, w) = (spec.r_inner, spec.r_outer - spec.r_inner);
    let f = radial_field(dim, spec.center.clone(), format!("bump{:?}:{a}:{}", spec.center, spec.r_outer), move |r| {
        let (s, d, dd) = smoothstep((r - a) / w);
        (1.0 - s, -d / w, -dd / (w * w))
    });
    Ok(f.with_support(BallSpec::new(spec.center.clone(), spec.r_outer)?))
}

/// Radial bump supported in the annulus `r1 ≤ |x - c| ≤ r4`, equal to one on `[r2, r3]`.
pub fn make_annulus_bump(center: Vec<f64>, r: [f64; 4]) -> Result<ScalarField> {
    let [r1, r2, r3, r4] = r;
    ensure(0.0 < r1 && r1 < r2 && r2 <= r3 && r3 < r4, || format!("annulus radii {r:?} not increasing"))?;
    let dim = center.len();
    let f = radial_field(dim, center.clone(), format!("annulus{center:?}:{r:?}"), move |t| {
        let (u, du, ddu) = smoothstep((t - r1) / (r2 - r1));
        let (v, dv, ddv) = smoothstep((t - r3) / (r4 - r3));
        let (du, ddu) = (du / (r2 - r1), ddu / ((r2 - r1) * (r2 - r1)));
        let (dv, ddv) = (dv / (r4 - r3), ddv / ((r4 - r3) * (r4 - r3)));
        let w = 1.0 - v;
        (u * w, du * w - u * dv, ddu * w - 2.0 * du * dv - u * ddv)
    });
    Ok(f.with_support(BallSpec::new(center, r4)?))
}

/// `exp(-|x - c|^2 / (2σ^2))` with an effective extent of `9σ`.
pub fn gaussian(dim: usize, center: Vec<f64>, sigma: f64) -> Result<ScalarField> {
    ensure(sigma > 0.0, || "sigma must be positive".into())?;
    let s2 = sigma * sigma;
    let f = radial_field(dim, center.clone(), format!("gauss{center:?}:{sigma}"), move |r| {
        let e = (-r * r / (2.0 * s2)).exp();
        (e, -r / s2 * e, (r * r / (s2 * s2) - 1.0 / s2) * e)
    });
    let reach = 9.0 * sigma;
    Ok(f.with_extent(BallSpec::new(center, reach)?))
}

/// `|x|^2` around the origin.
pub fn norm_squared(dim: usize) -> ScalarField {
    radial_field(dim, vec![0.0; dim], "|x|^2", |r| (r * r, 2.0 * r, 2.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelFamily {
    Newtonian,
    SmoothedNewtonian,
    LogModulus,
    InverseSqrt,
}

impl std::str::FromStr for ModelFamily {
    type Err = LabError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "newtonian" => Ok(Self::Newtonian),
            "smoothed-newtonian" => Ok(Self::SmoothedNewtonian),
            "log-modulus" => Ok(Self::LogModulus),
            "inverse-sqrt" => Ok(Self::InverseSqrt),
            other => Err(contract(format!("unknown model family `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Smoothing radius for smoothed-newtonian and log-modulus.
    pub eps: f64,
    /// Constant subtracted by log-modulus.
    pub shift: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self { eps: 0.1, shift: 3.0 }
    }
}

/// The model negative subharmonic functions:
///
/// | name | formula |
/// |---|---|
/// | newtonian | `-|x|^{2-n}` |
/// | smoothed-newtonian | `-(|x|^2 + ε^2)^{(2-n)/2}` |
/// | inverse-sqrt | `-(1 + |x|^2)^{-1/2}` |
/// | log-modulus | `log(|z|^2 + ε^2) - C` on `C ≅ R^2` |
pub fn model_subharmonic(name: &str, dim: usize, params: ModelParams) -> Result<ScalarField> {
    let fam: ModelFamily = name.parse()?;
    model_family(fam, dim, params)
}

pub fn model_family(fam: ModelFamily, dim: usize, params: ModelParams) -> Result<ScalarField> {
    let tags = Tags { subharmonic: true, negative: true, ..Tags::default() };
    let o = vec![0.0; dim];
    let nf = dim as f64;
    let f = match fam {
        ModelFamily::Newtonian => {
            ensure(dim > 2, || "newtonian family needs dimension > 2".into())?;
            let sigma = DimensionConstants::new(dim)?.sigma_n;
            let p = 2.0 - nf;
            radial_field(dim, o.clone(), format!("newtonian{dim}"), move |r| {
                (-r.powf(p), -p * r.powf(p - 1.0), -p * (p - 1.0) * r.powf(p - 2.0))
            })
            .with_laplacian(|_| 0.0)
            .with_singular(SingularPoint { at: o, excise: 1e-2, laplacian_mass: (nf - 2.0) * sigma })
        }
        ModelFamily::SmoothedNewtonian => {
            ensure(dim > 2, || "smoothed-newtonian family needs dimension > 2".into())?;
            let e2 = params.eps * params.eps;
            ensure(e2 > 0.0, || "eps must be positive".into())?;
            let mut f = radial_field(dim, o, format!("smoothed{dim}:{}", params.eps), move |r| {
                let s = r * r + e2;
                let v = -s.powf((2.0 - nf) / 2.0);
                let d = (nf - 2.0) * s.powf(-nf / 2.0) * r;
                let dd = (nf - 2.0) * (s.powf(-nf / 2.0) - nf * r * r * s.powf(-nf / 2.0 - 1.0));
                (v, d, dd)
            });
            f = f.with_laplacian(move |x| {
                let s = x.iter().map(|v| v * v).sum::<f64>() + e2;
                nf * (nf - 2.0) * e2 * s.powf(-(nf + 2.0) / 2.0)
            });
            f
        }
        ModelFamily::InverseSqrt => {
            ensure(dim >= 3, || "inverse-sqrt family needs dimension >= 3".into())?;
            radial_field(dim, o, format!("invsqrt{dim}"), |r| {
                let s = 1.0 + r * r;
                (-s.powf(-0.5), r * s.powf(-1.5), s.powf(-1.5) - 3.0 * r * r * s.powf(-2.5))
            })
            .with_laplacian(move |x| {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                (1.0 + r2).powf(-2.5) * (nf + (nf - 3.0) * r2)
            })
        }
        ModelFamily::LogModulus => {
            ensure(dim == 2, || "log-modulus family lives on C (dimension 2)".into())?;
            let e2 = params.eps * params.eps;
            ensure(e2 > 0.0, || "eps must be positive".into())?;
            let c = params.shift;
            radial_field(2, o, format!("logmod:{}:{c}", params.eps), move |r| {
                let s = r * r + e2;
                ((s).ln() - c, 2.0 * r / s, 2.0 / s - 4.0 * r * r / (s * s))
            })
            .with_laplacian(move |x| {
                let s = x[0] * x[0] + x[1] * x[1] + e2;
                4.0 * e2 / (s * s)
            })
        }
    };
    Ok(f.with_tags(tags))
}

/// Positive subharmonic `1 + a|x|^2`.
pub fn positive_quadratic(dim: usize, a: f64) -> ScalarField {
    let f = radial_field(dim, vec![0.0; dim], format!("1+{a}|x|^2"), move |r| (1.0 + a * r * r, 2.0 * a * r, 2.0 * a));
    f.with_tags(Tags { subharmonic: a >= 0.0, ..Tags::default() })
}

/// Positive subharmonic `c - (1 + |x|^2)^{-1/2}` for `c > 1`.
pub fn shifted_inverse_sqrt(dim: usize, c: f64) -> Result<ScalarField> {
    let base = model_family(ModelFamily::InverseSqrt, dim, ModelParams::default())?;
    let (ev, lap) = (base.eval_fn(), base.clone());
    let g = base.clone();
    Ok(ScalarField::new(dim, format!("{c}+invsqrt{dim}"), move |x| c + ev(x))
        .with_gradient(move |x, out| g.gradient_into(x, out))
        .with_laplacian(move |x| lap.laplacian_at(x))
        .radial(vec![0.0; dim])
        .with_tags(Tags { subharmonic: true, negative: c < 0.0, ..Tags::default() }))
}

/// `log|x - a|`, singular at `a`.
pub fn log_distance(dim: usize, a: Vec<f64>) -> ScalarField {
    let at = a.clone();
    radial_field(dim, a.clone(), format!("log|x-{a:?}|"), |r| (r.ln(), 1.0 / r, -1.0 / (r * r)))
        .with_singular(SingularPoint { at, excise: 1e-3, laplacian_mass: 0.0 })
}

/// Field catalog addressable by name (used by config files).
pub fn field_by_name(name: &str, dim: usize, params: ModelParams) -> Result<ScalarField> {
    match name {
        "zero" => Ok(ScalarField::zero(dim)),
        "log-abs" => Ok(log_distance(dim, vec![0.0; dim])),
        "norm-squared" => Ok(norm_squared(dim)),
        "gaussian" => gaussian(dim, vec![0.0; dim], 1.0),
        "unit-bump" => make_bump(&BumpSpec { center: vec![0.0; dim], r_inner: 1.0, r_outer: 2.0 }, dim),
        "positive-quadratic" => Ok(positive_quadratic(dim, 1.0)),
        other => model_subharmonic(other, dim, params),
    }
}

impl ScalarField {
    /// `x ↦ φ(s x)`, derivatives and support carried along.
    pub fn rescaled(&self, s: f64) -> Result<ScalarField> {
        ensure(s > 0.0 && s.is_finite(), || format!("scale {s} must be positive"))?;
        let n = self.dim;
        let base = self.clone();
        let (b1, b2, b3) = (base.clone(), base.clone(), base.clone());
        let mut f = ScalarField::new(n, format!("{}∘{s}x", self.label), move |x| {
            let y: Vec<f64> = x.iter().map(|v| v * s).collect();
            b1.eval(&y)
        })
        .with_gradient(move |x, g| {
            let y: Vec<f64> = x.iter().map(|v| v * s).collect();
            b2.gradient_into(&y, g);
            g.iter_mut().for_each(|v| *v *= s);
        })
        .with_laplacian(move |x| {
            let y: Vec<f64> = x.iter().map(|v| v * s).collect();
            s * s * b3.laplacian_at(&y)
        })
        .with_tags(self.tags);
        let shrink = |b: &BallSpec| BallSpec { center: b.center.iter().map(|c| c / s).collect(), radius: b.radius / s };
        f.radial_about = self.radial_about.as_ref().map(|c| c.iter().map(|v| v / s).collect());
        f.support = self.support.as_ref().map(shrink);
        f.extent = self.extent.as_ref().map(shrink);
        f.singular = self
            .singular
            .iter()
            .map(|p| SingularPoint {
                at: p.at.iter().map(|v| v / s).collect(),
                excise: p.excise / s,
                laplacian_mass: p.laplacian_mass * s.powf(2.0 - n as f64),
            })
            .collect();
        Ok(f)
    }
}

/// Radial cutoff `χ(d(x, E)/r)` where `E = B(c, ρ)`: zero on `E_{r/2}`, one outside `E_r`.
pub fn distance_cutoff(center: Vec<f64>, rho: f64, r: f64) -> Result<ScalarField> {
    ensure(rho >= 0.0 && r > 0.0, || format!("need rho >= 0 and r > 0, got ({rho}, {r})"))?;
    let dim = center.len();
    Ok(radial_field(dim, center, format!("cutoff:{rho}:{r}"), move |t| {
        let d = (t - rho).max(0.0);
        let (s, ds, dds) = smoothstep(2.0 * d / r - 1.0);
        if t <= rho {
            (s, 0.0, 0.0)
        } else {
            (s, 2.0 * ds / r, 4.0 * dds / (r * r))
        }
    }))
}

// ---------------------------------------------------------------------------
// Weight functions

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum EtaKind {
    /// `η(t) = t^α`, `0 < α ≤ 1`, defined for `t > 0`.
    Power { alpha: f64 },
    /// `η(t) = π + arctan t`, defined on all of `R`, bounded by `3π/2`.
    Arctan,
}

/// Which sign of argument `η` accepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainSign {
    PositiveArg,
    AnyArg,
}

/// A positive increasing weight `η` with its derivative.
#[derive(Clone)]
pub struct EtaFunction {
    pub name: String,
    eta: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    eta_prime: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub domain_sign: DomainSign,
    /// Lower end of the `κ_η` integral.
    pub gamma: Option<f64>,
}

impl fmt::Debug for EtaFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EtaFunction")
            .field("name", &self.name)
            .field("domain_sign", &self.domain_sign)
            .field("gamma", &self.gamma)
            .finish()
    }
}

impl EtaFunction {
    pub fn custom<E, D>(name: impl Into<String>, eta: E, eta_prime: D, domain_sign: DomainSign) -> Self
    where
        E: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self { name: name.into(), eta: Arc::new(eta), eta_prime: Arc::new(eta_prime), domain_sign, gamma: None }
    }

    pub fn from_kind(kind: EtaKind) -> Result<Self> {
        Ok(match kind {
            EtaKind::Power { alpha } => {
                ensure(alpha > 0.0 && alpha <= 1.0, || format!("power eta needs 0 < alpha <= 1, got {alpha}"))?;
                if alpha == 1.0 {
                    Self::custom("t", |t| t, |_| 1.0, DomainSign::PositiveArg)
                } else {
                    Self::custom(
                        format!("t^{alpha}"),
                        move |t: f64| t.powf(alpha),
                        move |t: f64| alpha * t.powf(alpha - 1.0),
                        DomainSign::PositiveArg,
                    )
                }
            }
            EtaKind::Arctan => Self::custom(
                "pi+arctan",
                |t: f64| std::f64::consts::PI + t.atan(),
                |t: f64| 1.0 / (1.0 + t * t),
                DomainSign::AnyArg,
            ),
        })
    }

    pub fn identity() -> Self {
        Self::custom("t", |t| t, |_| 1.0, DomainSign::PositiveArg)
    }

    pub fn power(alpha: f64) -> Result<Self> {
        Self::from_kind(EtaKind::Power { alpha })
    }

    pub fn arctan() -> Self {
        Self::from_kind(EtaKind::Arctan).expect("arctan eta is always valid")
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = Some(gamma);
        self
    }

    #[inline]
    pub fn eta(&self, t: f64) -> f64 {
        (self.eta)(t)
    }

    #[inline]
    pub fn eta_prime(&self, t: f64) -> f64 {
        (self.eta_prime)(t)
    }

    pub fn accepts(&self, t: f64) -> bool {
        t.is_finite() && (self.domain_sign == DomainSign::AnyArg || t > 0.0)
    }
}

/// Weights `(ω, ω′)` and exponent `α ≥ 1` of a Hardy–Sobolev type inequality
/// `[∫|φ|^α ω]^{1/α} ≤ [∫|∇φ|² ω′]^{1/2}`.
#[derive(Debug, Clone)]
pub struct WeightPair {
    pub omega: ScalarField,
    pub omega_prime: ScalarField,
    pub alpha: f64,
    pub alpha_dual: f64,
}

impl WeightPair {
    pub fn new(omega: ScalarField, omega_prime: ScalarField, alpha: f64) -> Result<Self> {
        ensure(alpha >= 1.0, || format!("alpha {alpha} must be at least 1"))?;
        ensure(omega.dim() == omega_prime.dim(), || "weight dimensions differ".into())?;
        let alpha_dual = if alpha == 1.0 { f64::INFINITY } else { alpha / (alpha - 1.0) };
        Ok(Self { omega, omega_prime, alpha, alpha_dual })
    }

    /// `α = 2`, `ω = (n-2)²/4 |x|^{-2}`, `ω′ = 1`.
    pub fn hardy(n: usize) -> Result<Self> {
        ensure(n > 2, || "Hardy weights need n > 2".into())?;
        let c = (n as f64 - 2.0).powi(2) / 4.0;
        let o = vec![0.0; n];
        let omega = ScalarField::new(n, "hardy-weight", move |x| c / x.iter().map(|v| v * v).sum::<f64>())
            .radial(o.clone())
            .with_singular(SingularPoint { at: o, excise: 0.0, laplacian_mass: 0.0 });
        Self::new(omega, ScalarField::constant(n, 1.0), 2.0)
    }

    pub fn validate(&self, region: &BallSpec, samples: usize, seed: u64) -> Result<()> {
        ensure((1.0 / self.alpha + 1.0 / self.alpha_dual - 1.0).abs() < 1e-12, || "inconsistent dual exponent".into())?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = vec![0.0; self.omega.dim()];
        for _ in 0..samples {
            uniform_in_ball(&mut rng, region, &mut x);
            let (a, b) = (self.omega.eval(&x), self.omega_prime.eval(&x));
            ensure(!(a <= 0.0) && !(b <= 0.0), || format!("weights not positive at {x:?}"))?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Certificates

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Violated,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub verdict: Verdict,
    pub min_laplacian: f64,
    pub samples_used: usize,
    pub samples_excised: usize,
    /// Largest field value seen; below zero when a negative-claimed field is honest.
    pub max_value: f64,
}

/// Sampled check that `Δψ ≥ -tol` on `region` minus the excised singular balls.
/// A field tagged negative must also be negative at every sample.
pub fn subharmonic_certificate(field: &ScalarField, region: &BallSpec, samples: usize, seed: u64) -> Result<Certificate> {
    ensure(region.dim() == field.dim(), || "region dimension mismatch".into())?;
    let covered = field
        .singular_points()
        .iter()
        .any(|s| dist(&s.at, &region.center) + region.radius <= s.excise);
    if covered || samples == 0 {
        return Ok(Certificate {
            verdict: Verdict::Inconclusive,
            min_laplacian: f64::NAN,
            samples_used: 0,
            samples_excised: samples,
            max_value: f64::NAN,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; field.dim()];
    let mut min_lap = f64::INFINITY;
    let mut max_val = f64::NEG_INFINITY;
    let (mut used, mut excised) = (0, 0);
    let mut ok = true;
    for _ in 0..samples {
        uniform_in_ball(&mut rng, region, &mut x);
        if field.singular_points().iter().any(|s| dist(&s.at, &x) < s.excise) {
            excised += 1;
            continue;
        }
        used += 1;
        let v = field.eval(&x);
        let lap = field.laplacian_at(&x);
        let tol = if field.has_analytic_laplacian() { 1e-12 } else { 1e-6 } * v.abs().max(1.0);
        if !(lap >= -tol) {
            ok = false;
        }
        if field.tags.negative && !(v < 0.0) {
            ok = false;
        }
        min_lap = min_lap.min(lap);
        max_val = max_val.max(v);
    }
    let verdict = if used == 0 {
        Verdict::Inconclusive
    } else if ok {
        Verdict::Holds
    } else {
        Verdict::Violated
    };
    Ok(Certificate { verdict, min_laplacian: min_lap, samples_used: used, samples_excised: excised, max_value: max_val })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_values_and_gradient_bound() {
        let spec = BumpSpec { center: vec![0.0; 3], r_inner: 0.5, r_outer: 1.5 };
        let b = make_bump(&spec, 3).unwrap();
        assert_eq!(b.eval(&[0.0, 0.0, 0.0]), 1.0);
        assert_eq!(b.eval(&[1.6, 0.0, 0.0]), 0.0);
        let mut max_g: f64 = 0.0;
        for i in 0..1000 {
            let r = 1.6 * i as f64 / 999.0;
            max_g = max_g.max(b.grad_norm2(&[r, 0.0, 0.0]).sqrt());
        }
        assert!(max_g <= BUMP_GRADIENT_CONSTANT / 1.0 + 1e-12);
        assert!(max_g > 0.99 * BUMP_GRADIENT_CONSTANT);
        let bad = BumpSpec { center: vec![0.0; 3], r_inner: 1.0, r_outer: 1.0 };
        assert!(make_bump(&bad, 3).is_err());
    }

    #[test]
    fn model_values() {
        let n = model_subharmonic("newtonian", 3, ModelParams::default()).unwrap();
        assert_eq!(n.eval(&[2.0, 0.0, 0.0]), -0.5);
        let s = model_subharmonic("inverse-sqrt", 3, ModelParams::default()).unwrap();
        let r: f64 = 1.3;
        let want = 3.0 * (1.0 + r * r).powf(-2.5);
        assert!((s.laplacian_at(&[0.0, r, 0.0]) - want).abs() < 1e-15);
        assert!(model_subharmonic("bogus", 3, ModelParams::default()).is_err());
        assert!(model_subharmonic("newtonian", 2, ModelParams::default()).is_err());
        let sm = model_subharmonic("smoothed-newtonian", 3, ModelParams { eps: 1e-9, shift: 0.0 }).unwrap();
        assert!((sm.eval(&[0.7, 0.0, 0.0]) - n.eval(&[0.7, 0.0, 0.0])).abs() < 1e-12);
    }

    #[test]
    fn differentiate_examples() {
        let q = norm_squared(4).without_derivatives();
        let x = [0.3, -1.2, 0.5, 2.0];
        match differentiate(&q, &x, DiffOrder::Gradient).unwrap() {
            Derivative::Gradient { value, .. } => {
                for i in 0..4 {
                    assert!((value[i] - 2.0 * x[i]).abs() < 1e-9);
                }
            }
            _ => unreachable!(),
        }
        match differentiate(&q, &x, DiffOrder::Laplacian).unwrap() {
            Derivative::Laplacian { value, .. } => assert!((value.value - 8.0).abs() < 1e-6),
            _ => unreachable!(),
        }
        let s = model_subharmonic("inverse-sqrt", 3, ModelParams::default()).unwrap().without_derivatives();
        match differentiate(&s, &[1.0, 0.0, 0.0], DiffOrder::Laplacian).unwrap() {
            Derivative::Laplacian { value, analytic } => {
                assert!(!analytic);
                assert!((value.value - 3.0 * 2f64.powf(-2.5)).abs() < 1e-6);
            }
            _ => unreachable!(),
        }
        let n = model_subharmonic("newtonian", 3, ModelParams::default()).unwrap();
        assert!(differentiate(&n, &[0.0, 0.0, 0.0], DiffOrder::Gradient).is_err());
    }

    #[test]
    fn certificates() {
        let n = model_subharmonic("newtonian", 3, ModelParams::default()).unwrap();
        let c = subharmonic_certificate(&n, &BallSpec::origin(3, 1.0), 2000, 1).unwrap();
        assert_eq!(c.verdict, Verdict::Holds);
        assert!(c.samples_used > 0);
        let g = ScalarField::new(3, "-exp(-|x|^2)", |x| -(-x.iter().map(|v| v * v).sum::<f64>()).exp())
            .with_tags(Tags { subharmonic: true, negative: true, ..Tags::default() });
        let c = subharmonic_certificate(&g, &BallSpec::origin(3, 2.0), 2000, 1).unwrap();
        assert_eq!(c.verdict, Verdict::Violated);
        assert!(c.min_laplacian < 0.0);
        let m1 = ScalarField::constant(3, -1.0);
        let c = subharmonic_certificate(&m1, &BallSpec::origin(3, 1.0), 100, 1).unwrap();
        assert_eq!(c.verdict, Verdict::Holds);
        let tiny = BallSpec::new(vec![0.0, 0.0, 0.001], 0.001).unwrap();
        let c = subharmonic_certificate(&n, &tiny, 100, 1).unwrap();
        assert_eq!(c.verdict, Verdict::Inconclusive);
    }
}
