//! Extension problems in `C² ≅ R⁴`: free-space Poisson solves, a
//! compact-support `∂̄` solver, extension of holomorphic and pluriharmonic data
//! across a ball, and the hyperbolic distance of the unit disc.
//!
//! Points of `C²` are stored as `[Re z₁, Im z₁, Re z₂, Im z₂]`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{contract, ensure, Result};
use crate::funcspace::{fd_laplacian, radial_field, ComplexField, ScalarField, Tags, Verdict};
use crate::ineqlab::digest;
use crate::quadcore::{chunk_rng, dist, gauss_legendre, uniform_in_ball, BallSpec, DimensionConstants, SphereRule};

/// Step of the finite-difference Wirtinger probes.
pub const PROBE_STEP: f64 = 1e-4;
/// Absolute tolerance for sup errors and residuals at desk scale.
pub const DESK_TOLERANCE: f64 = 1e-2;

// ---------------------------------------------------------------------------
// Smooth cutoff

/// Septic smoothstep `S(t) = 35t⁴ - 84t⁵ + 70t⁶ - 20t⁷`, clamped to `[0, 1]`,
/// with its first two derivatives. `S ∈ C³`; it is a polynomial on each side
/// of the transition edges, which the quadratures split at.
pub fn smooth_step(t: f64) -> (f64, f64, f64) {
    if t <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if t >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    let u = 1.0 - t;
    let t2 = t * t;
    let s = t2 * t2 * (35.0 - 84.0 * t + 70.0 * t2 - 20.0 * t2 * t);
    let d = 140.0 * t2 * t * u * u * u;
    let dd = 420.0 * t2 * u * u * (1.0 - 2.0 * t);
    (s, d, dd)
}

/// `χ(z) = S((|z - c| - r0) / (r1 - r0))`: zero on `B(c, r0)`, one outside `B(c, r1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cutoff {
    pub center: [f64; 4],
    pub r0: f64,
    pub r1: f64,
}

impl Cutoff {
    pub fn new(center: [f64; 4], r0: f64, r1: f64) -> Result<Self> {
        ensure(0.0 < r0 && r0 < r1, || format!("cutoff radii need 0 < r0 < r1, got ({r0}, {r1})"))?;
        Ok(Self { center, r0, r1 })
    }

    fn offset(&self, x: &[f64]) -> ([C; 2], f64) {
        let w = [
            C::new(x[0] - self.center[0], x[1] - self.center[1]),
            C::new(x[2] - self.center[2], x[3] - self.center[3]),
        ];
        let rho = (w[0].norm_sqr() + w[1].norm_sqr()).sqrt();
        (w, rho)
    }

    /// Radial profile `(χ, χ', χ'')` at distance `rho` from the center.
    pub fn profile(&self, rho: f64) -> (f64, f64, f64) {
        let w = self.r1 - self.r0;
        let (s, d, dd) = smooth_step((rho - self.r0) / w);
        (s, d / w, dd / (w * w))
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.profile(self.offset(x).1).0
    }

    /// `∂χ/∂z̄_k = χ' w_k / (2ρ)`.
    pub fn dbar(&self, x: &[f64]) -> [C; 2] {
        let (w, rho) = self.offset(x);
        let d = self.profile(rho).1;
        if d == 0.0 {
            return [C::new(0.0, 0.0); 2];
        }
        let s = d / (2.0 * rho);
        [w[0] * s, w[1] * s]
    }

    /// Levi matrix `∂²χ/∂z_j∂z̄_k`.
    pub fn levi(&self, x: &[f64]) -> [[C; 2]; 2] {
        let (w, rho) = self.offset(x);
        let (_, d, dd) = self.profile(rho);
        let mut out = [[C::new(0.0, 0.0); 2]; 2];
        if d == 0.0 && dd == 0.0 {
            return out;
        }
        for j in 0..2 {
            for k in 0..2 {
                let wk_wj = w[k] * w[j].conj();
                let delta = if j == k { d / (2.0 * rho) } else { 0.0 };
                out[j][k] = wk_wj * (dd / (4.0 * rho * rho) - d / (4.0 * rho * rho * rho)) + delta;
            }
        }
        out
    }

    /// Euclidean Laplacian and gradient of `χ` in `R⁴`.
    fn lap_grad(&self, x: &[f64]) -> (f64, [f64; 4]) {
        let (_, rho) = self.offset(x);
        let (_, d, dd) = self.profile(rho);
        if d == 0.0 && dd == 0.0 {
            return (0.0, [0.0; 4]);
        }
        let mut g = [0.0; 4];
        for i in 0..4 {
            g[i] = d * (x[i] - self.center[i]) / rho;
        }
        (dd + 3.0 * d / rho, g)
    }
}

// ---------------------------------------------------------------------------
// Finite-difference Wirtinger calculus

fn partials<F: Fn(&[f64]) -> C>(f: &F, x: &[f64], h: f64) -> [C; 4] {
    let mut y = [x[0], x[1], x[2], x[3]];
    let mut out = [C::new(0.0, 0.0); 4];
    for (i, o) in out.iter_mut().enumerate() {
        let mut central = |h: f64| {
            y[i] = x[i] + h;
            let a = f(&y);
            y[i] = x[i] - h;
            let b = f(&y);
            y[i] = x[i];
            (a - b) / (2.0 * h)
        };
        let d1 = central(h);
        let d2 = central(0.5 * h);
        *o = (d2 * 4.0 - d1) / 3.0;
    }
    out
}

/// `(∂f/∂z̄₁, ∂f/∂z̄₂)` by Richardson-extrapolated central differences.
pub fn dbar_fd<F: Fn(&[f64]) -> C>(f: &F, x: &[f64], h: f64) -> [C; 2] {
    let p = partials(f, x, h);
    let i = C::i();
    [(p[0] + i * p[1]) * 0.5, (p[2] + i * p[3]) * 0.5]
}

/// `(∂f/∂z₁, ∂f/∂z₂)`.
pub fn dz_fd<F: Fn(&[f64]) -> C>(f: &F, x: &[f64], h: f64) -> [C; 2] {
    let p = partials(f, x, h);
    let i = C::i();
    [(p[0] - i * p[1]) * 0.5, (p[2] - i * p[3]) * 0.5]
}

fn hessian<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], h: f64) -> [[f64; 4]; 4] {
    let mut y = [x[0], x[1], x[2], x[3]];
    let f0 = f(&y);
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        y[i] = x[i] + h;
        let a = f(&y);
        y[i] = x[i] - h;
        let b = f(&y);
        y[i] = x[i];
        out[i][i] = (a - 2.0 * f0 + b) / (h * h);
        for j in 0..i {
            let mut corner = |si: f64, sj: f64| {
                y[i] = x[i] + si * h;
                y[j] = x[j] + sj * h;
                let v = f(&y);
                y[i] = x[i];
                y[j] = x[j];
                v
            };
            let v = (corner(1.0, 1.0) - corner(1.0, -1.0) - corner(-1.0, 1.0) + corner(-1.0, -1.0)) / (4.0 * h * h);
            out[i][j] = v;
            out[j][i] = v;
        }
    }
    out
}

/// Levi matrix `∂²φ/∂z_j∂z̄_k` of a real function, from a Richardson-extrapolated
/// real Hessian.
pub fn levi_fd<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], h: f64) -> [[C; 2]; 2] {
    let h1 = hessian(f, x, h);
    let h2 = hessian(f, x, 0.5 * h);
    let mut hs = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            hs[i][j] = (4.0 * h2[i][j] - h1[i][j]) / 3.0;
        }
    }
    let mut out = [[C::new(0.0, 0.0); 2]; 2];
    for j in 0..2 {
        for k in 0..2 {
            let (xj, yj, xk, yk) = (2 * j, 2 * j + 1, 2 * k, 2 * k + 1);
            out[j][k] = C::new(hs[xj][xk] + hs[yj][yk], hs[xj][yk] - hs[yj][xk]) * 0.25;
        }
    }
    out
}

/// Smallest eigenvalue of a 2×2 Hermitian matrix.
pub fn min_eigenvalue(m: &[[C; 2]; 2]) -> f64 {
    let (a, d) = (m[0][0].re, m[1][1].re);
    let b = 0.5 * (m[0][1] + m[1][0].conj());
    0.5 * (a + d) - (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt()
}

fn max_entry(m: &[[C; 2]; 2]) -> f64 {
    m.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// Budgets and sampling

/// Approximate quadrature nodes per evaluated point, separately for the
/// two-dimensional Cauchy transform and the four-dimensional Newtonian kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub cauchy_nodes: usize,
    pub newton_nodes: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Self { cauchy_nodes: 2 * 48 * 48, newton_nodes: 6 * 10usize.pow(4) }
    }
}

impl Budget {
    pub fn scaled(self, factor: f64) -> Self {
        let s = |n: usize| ((n as f64 * factor).round() as usize).max(1);
        Self { cauchy_nodes: s(self.cauchy_nodes), newton_nodes: s(self.newton_nodes) }
    }

    pub fn quadrupled(self) -> Self {
        self.scaled(4.0)
    }

    /// `2s` angles times an `s`-point rule per radial piece.
    pub fn cauchy_order(&self) -> usize {
        ((self.cauchy_nodes as f64 / 2.0).sqrt().round() as usize).max(4)
    }

    /// Order `k` of the Newtonian rules: `k` polar-angle nodes per angular
    /// piece, a product rule of order `k/2 + 1` on the orthogonal sphere and
    /// [`Budget::newton_radial`] nodes per radial piece. The node count grows
    /// like `k⁴`.
    pub fn newton_order(&self) -> usize {
        ((self.newton_nodes as f64 / 6.0).powf(0.25).round() as usize).max(3)
    }

    pub fn newton_radial(&self) -> usize {
        2 * self.newton_order() + 4
    }
}

fn seeded_points(ball: &BallSpec, count: usize, seed: u64, keep: impl Fn(&[f64]) -> bool) -> Vec<[f64; 4]> {
    let mut rng = chunk_rng(seed, 0x4841);
    let mut out = Vec::with_capacity(count);
    let mut p = [0.0; 4];
    let mut tries = 0usize;
    while out.len() < count && tries < 1000 * count.max(1) {
        uniform_in_ball(&mut rng, ball, &mut p);
        tries += 1;
        if keep(&p) {
            out.push(p);
        }
    }
    // Touch the generator once more so callers sharing a seed diverge.
    let _: f64 = rng.random();
    out
}

fn ray_ball(p: &[f64], d: &[f64], c: &[f64], a: f64) -> Option<(f64, f64)> {
    let mut b = 0.0;
    let mut q2 = 0.0;
    for i in 0..p.len() {
        let q = p[i] - c[i];
        b += q * d[i];
        q2 += q * q;
    }
    let disc = b * b - (q2 - a * a);
    if disc <= 0.0 {
        return None;
    }
    let s = disc.sqrt();
    Some((-b - s, -b + s))
}

/// Breakpoints along the ray `p + t d`, `t ≥ 0`, inside the ball `(c, radius)`,
/// split at the crossings of the spheres `shells` about `c`.
fn ray_pieces(p: &[f64], d: &[f64], c: &[f64], radius: f64, shells: &[f64], out: &mut Vec<f64>) {
    out.clear();
    let Some((t0, t1)) = ray_ball(p, d, c, radius) else { return };
    let t0 = t0.max(0.0);
    if t1 <= t0 {
        return;
    }
    out.push(t0);
    out.push(t1);
    for &s in shells {
        if let Some((a, b)) = ray_ball(p, d, c, s) {
            for t in [a, b] {
                if t > t0 && t < t1 {
                    out.push(t);
                }
            }
        }
    }
    out.sort_by(f64::total_cmp);
}

// ---------------------------------------------------------------------------
// Newtonian potential

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
}

/// `u = Φ_m * g` together with the checks made on it.
#[derive(Debug, Clone)]
pub struct PotentialSolution {
    pub u: ScalarField,
    pub rhs_digest: String,
    /// `None` when `u` vanishes on the whole far-field grid.
    pub decay: Option<DecayFit>,
    /// `max |Δu - g|` on interior sample points, by finite differences.
    pub residual: f64,
    /// `max |g|` on the same points.
    pub residual_scale: f64,
    pub support: BallSpec,
}

struct NewtonKernel {
    g: crate::funcspace::EvalFn,
    dim: usize,
    center: Vec<f64>,
    radius: f64,
    shells: Vec<f64>,
    rule: Arc<SphereRule>,
    cap: Arc<SphereRule>,
    theta_nodes: usize,
    gl: Vec<(f64, f64)>,
    coef: f64,
}

/// Reflection exchanging `e₁` and a unit vector `a`.
struct Householder {
    v: Vec<f64>,
    scale: f64,
}

impl Householder {
    fn new(a: &[f64]) -> Self {
        let mut v: Vec<f64> = a.iter().map(|c| -c).collect();
        v[0] += 1.0;
        let n2: f64 = v.iter().map(|c| c * c).sum();
        let scale = if n2 > 1e-30 { 2.0 / n2 } else { 0.0 };
        Self { v, scale }
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let dot: f64 = self.v.iter().zip(x).map(|(a, b)| a * b).sum();
        for i in 0..x.len() {
            out[i] = x[i] - self.scale * dot * self.v[i];
        }
    }
}

impl NewtonKernel {
    fn eval(&self, x: &[f64]) -> f64 {
        if dist(x, &self.center) >= 4.0 * self.radius {
            self.far(x)
        } else {
            self.near(x)
        }
    }

    /// Polar coordinates about `x`: `Φ(ρ) ρ^{m-1} = -coef · ρ`.
    fn near(&self, x: &[f64]) -> f64 {
        let d = dist(x, &self.center);
        let m = self.dim;
        let mut axis = vec![0.0; m];
        if d > 0.0 {
            for i in 0..m {
                axis[i] = (self.center[i] - x[i]) / d;
            }
        } else {
            axis[0] = 1.0;
        }
        // Split θ where rays graze a shell or the support boundary.
        let mut cuts = vec![0.0];
        for &s in self.shells.iter().chain(std::iter::once(&self.radius)) {
            if s < d {
                cuts.push((s / d).asin());
            }
        }
        if d <= self.radius {
            // Exit distances to spheres around x have a near-kink at θ = π/2.
            cuts.push(0.5 * PI);
            cuts.push(PI);
        }
        cuts.sort_by(f64::total_cmp);
        let thetas: Vec<(f64, f64)> = cuts.windows(2).flat_map(|w| gauss_legendre(self.theta_nodes, w[0], w[1])).collect();
        let reflect = Householder::new(&axis);
        let mut y = vec![0.0; m];
        let mut local = vec![0.0; m];
        let mut dir = vec![0.0; m];
        let mut breaks = Vec::with_capacity(2 * self.shells.len() + 2);
        let mut total = 0.0;
        for &(th, wt) in &thetas {
            let (s, c) = th.sin_cos();
            let wt = wt * s.powi(m as i32 - 2);
            for j in 0..self.cap.len() {
                local[0] = c;
                for (l, e) in local[1..].iter_mut().zip(self.cap.dir(j)) {
                    *l = s * e;
                }
                reflect.apply(&local, &mut dir);
                ray_pieces(x, &dir, &self.center, self.radius, &self.shells, &mut breaks);
                let mut ray = 0.0;
                for w in breaks.windows(2) {
                    let (mid, half) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
                    for &(q, qw) in &self.gl {
                        let t = mid + half * q;
                        for k in 0..m {
                            y[k] = x[k] + t * dir[k];
                        }
                        ray += qw * half * t * (self.g)(&y);
                    }
                }
                total += wt * self.cap.weights[j] * ray;
            }
        }
        -self.coef * total
    }

    /// Polar coordinates about the support center; the kernel is smooth there.
    fn far(&self, x: &[f64]) -> f64 {
        let mut breaks: Vec<f64> = std::iter::once(0.0)
            .chain(self.shells.iter().copied().filter(|&s| s > 0.0 && s < self.radius))
            .chain(std::iter::once(self.radius))
            .collect();
        breaks.sort_by(f64::total_cmp);
        let m = self.dim as i32;
        let mut y = vec![0.0; self.dim];
        let mut total = 0.0;
        for i in 0..self.rule.len() {
            let dir = self.rule.dir(i);
            let mut ray = 0.0;
            for w in breaks.windows(2) {
                let (mid, half) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
                for &(s, wt) in &self.gl {
                    let t = mid + half * s;
                    let mut r2 = 0.0;
                    for k in 0..self.dim {
                        y[k] = self.center[k] + t * dir[k];
                        r2 += (x[k] - y[k]) * (x[k] - y[k]);
                    }
                    let phi = -self.coef / r2.sqrt().powi(m - 2);
                    ray += wt * half * t.powi(m - 1) * phi * (self.g)(&y);
                }
            }
            total += self.rule.weights[i] * ray;
        }
        total
    }
}

/// Free-space Newtonian potential of a compactly supported source, with
/// radial breakpoints at `shells` (radii about the support center) where `g`
/// is known to change character.
pub fn newtonian_solve_with_shells(g: &ScalarField, shells: &[f64], budget: Budget) -> Result<PotentialSolution> {
    let m = g.dim();
    ensure(m >= 3, || format!("Newtonian kernel needs dimension >= 3, got {m}"))?;
    let support = g.support().cloned().ok_or_else(|| contract("source must have compact support"))?;
    let k = budget.newton_order();
    let consts = DimensionConstants::new(m)?;
    let kernel = Arc::new(NewtonKernel {
        g: g.eval_fn(),
        dim: m,
        center: support.center.clone(),
        radius: support.radius,
        shells: shells.to_vec(),
        rule: SphereRule::product(m, k),
        cap: SphereRule::product(m - 1, k / 2 + 1),
        theta_nodes: k,
        gl: gauss_legendre(budget.newton_radial(), -1.0, 1.0),
        coef: 1.0 / ((m as f64 - 2.0) * consts.sigma_n),
    });
    let kk = kernel.clone();
    let u = ScalarField::new(m, format!("newton[{}]", g.label()), move |x| kk.eval(x)).not_radial();

    // Source fingerprint on a fixed probe set.
    let probes = seeded_points_nd(&support, 16, 0x5eed);
    let values: Vec<String> = probes.iter().map(|p| format!("{:.12e}", g.eval(p))).collect();
    let mut parts: Vec<&str> = vec![g.label()];
    parts.extend(values.iter().map(String::as_str));
    let rhs_digest = digest(&parts);

    // Residual Δu - g at interior points.
    let inner = support.scaled(0.9);
    let pts = seeded_points_nd(&inner, 6, 0x7e51);
    let (mut residual, mut scale) = (0.0f64, 0.0f64);
    for p in &pts {
        let ku = kernel.clone();
        let f = move |y: &[f64]| ku.eval(y);
        let lap = fd_laplacian(&f, p).value;
        let gv = g.eval(p);
        residual = residual.max((lap - gv).abs());
        scale = scale.max(gv.abs());
    }

    let decay = fit_decay(&kernel, &support);
    Ok(PotentialSolution { u, rhs_digest, decay, residual, residual_scale: scale, support })
}

/// Newtonian potential without interior breakpoints.
pub fn newtonian_solve(g: &ScalarField, budget: Budget) -> Result<PotentialSolution> {
    newtonian_solve_with_shells(g, &[], budget)
}

fn seeded_points_nd(ball: &BallSpec, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = chunk_rng(seed, 0x4e44);
    (0..count)
        .map(|_| {
            let mut p = vec![0.0; ball.dim()];
            uniform_in_ball(&mut rng, ball, &mut p);
            p
        })
        .collect()
}

/// Far-field grid `|x| - c` from `3R` to `30R` along a fixed oblique direction.
fn fit_decay(kernel: &NewtonKernel, support: &BallSpec) -> Option<DecayFit> {
    let m = kernel.dim;
    let dir: Vec<f64> = (0..m).map(|i| (1.0 + i as f64).sqrt()).collect();
    let norm = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
    let count = 8;
    let radii: Vec<f64> = (0..count).map(|i| support.radius * 3.0 * 10f64.powf(i as f64 / (count - 1) as f64)).collect();
    let values: Vec<f64> = radii
        .iter()
        .map(|&r| {
            let x: Vec<f64> = (0..m).map(|i| support.center[i] + r * dir[i] / norm).collect();
            kernel.eval(&x).abs()
        })
        .collect();
    if values.iter().any(|&v| v == 0.0 || !v.is_finite()) {
        return None;
    }
    let lx: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let ly: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let (slope, intercept) = least_squares(&lx, &ly);
    Some(DecayFit { slope, intercept, radii, values })
}

pub(crate) fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub verdict: Verdict,
    /// `u` vanished on the grid; nothing to fit.
    pub trivial: bool,
    /// `C` in `|u| ≤ C (|z| - R)^{1-n}`, fitted at the innermost radius.
    pub constant: f64,
    pub slope: Option<f64>,
    /// `|u|` decreases along the grid.
    pub vanishing: bool,
}

/// Checks `|u(z)| ≤ C (|z| - R)^{1-n}` on the far-field grid with `C` fitted at
/// the innermost radius, and that `|u|` decreases outwards.
pub fn decay_check(sol: &PotentialSolution, r_support: f64, n_complex: usize) -> Result<DecayReport> {
    ensure(n_complex >= 1, || "complex dimension must be positive".into())?;
    let Some(fit) = &sol.decay else {
        return Ok(DecayReport { verdict: Verdict::Holds, trivial: true, constant: 0.0, slope: None, vanishing: true });
    };
    let p = n_complex as f64 - 1.0;
    let base = |r: f64| (r - r_support).powf(-p);
    ensure(fit.radii[0] > r_support, || "decay grid starts inside the support".into())?;
    let constant = fit.values[0] / base(fit.radii[0]);
    let holds = fit.radii.iter().zip(&fit.values).all(|(&r, &v)| v <= constant * base(r) * (1.0 + 1e-9));
    let vanishing = fit.values.windows(2).all(|w| w[1] < w[0]);
    let verdict = if holds && vanishing { Verdict::Holds } else { Verdict::Violated };
    Ok(DecayReport { verdict, trivial: false, constant, slope: Some(fit.slope), vanishing })
}

/// Radial `C^∞` bump about `center` with support `B(center, radius)`, flat on
/// `B(center, radius / 2)` and scaled to unit integral.
pub fn unit_mass_bump(dim: usize, center: Vec<f64>, radius: f64) -> Result<ScalarField> {
    ensure(dim >= 2 && center.len() == dim && radius > 0.0, || "bad bump geometry".into())?;
    let a = 0.5 * radius;
    let raw = move |r: f64| {
        let (s, d, dd) = smooth_step((r - a) / a);
        (1.0 - s, -d / a, -dd / (a * a))
    };
    let sigma = DimensionConstants::new(dim)?.sigma_n;
    let mut mass = a.powi(dim as i32) / dim as f64;
    for (r, w) in gauss_legendre(64, a, radius) {
        mass += w * raw(r).0 * r.powi(dim as i32 - 1);
    }
    let mass = mass * sigma;
    let f = radial_field(dim, center.clone(), format!("unit-bump{center:?}:{radius}"), move |r| {
        let (p, d, dd) = raw(r);
        (p / mass, d / mass, dd / mass)
    });
    Ok(f.with_support(BallSpec::new(center, radius)?))
}

/// Two opposite unit-mass bumps at `±offset e₁`: total mass zero.
pub fn dipole_source(dim: usize, offset: f64, radius: f64) -> Result<ScalarField> {
    let mut c = vec![0.0; dim];
    c[0] = offset;
    let plus = unit_mass_bump(dim, c.clone(), radius)?;
    c[0] = -offset;
    let minus = unit_mass_bump(dim, c, radius)?;
    let f = ScalarField::new(dim, format!("dipole:{offset}:{radius}"), move |x| plus.eval(x) - minus.eval(x));
    Ok(f.with_support(BallSpec::origin(dim, offset + radius)))
}

// ---------------------------------------------------------------------------
// Compact forms and the Cauchy transform

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FormDegree {
    #[serde(rename = "(0,1)")]
    ZeroOne,
    #[serde(rename = "(1,1)")]
    OneOne,
}

/// A compactly supported form on `C²`. A `(0,1)` form stores `[v₁, v₂]`
/// (coefficients of `dz̄₁, dz̄₂`); a `(1,1)` form stores `v_{jk̄}` row-major.
#[derive(Debug, Clone)]
pub struct CompactForm {
    pub degree: FormDegree,
    pub coefficients: Vec<ComplexField>,
    pub support: BallSpec,
    /// Radii about the support center where the coefficients change character.
    pub shells: Vec<f64>,
    pub closedness_residual: f64,
    /// `max |v|` on the probe points; tolerances are relative to `max(1, scale)`.
    pub scale: f64,
}

const CLOSEDNESS_SAMPLES: usize = 48;

impl CompactForm {
    /// `(0,1)` form; measures `|∂v₁/∂z̄₂ - ∂v₂/∂z̄₁|` on seeded points.
    pub fn zero_one(v1: ComplexField, v2: ComplexField, support: BallSpec, shells: Vec<f64>) -> Result<Self> {
        ensure(support.dim() == 4 && v1.dim == 4 && v2.dim == 4, || "forms live on C^2".into())?;
        let pts = seeded_points(&support, CLOSEDNESS_SAMPLES, 0xdba5, |_| true);
        let (mut res, mut scale) = (0.0f64, 0.0f64);
        for p in &pts {
            let a = dbar_fd(&|y: &[f64]| v1.eval(y), p, PROBE_STEP)[1];
            let b = dbar_fd(&|y: &[f64]| v2.eval(y), p, PROBE_STEP)[0];
            res = res.max((a - b).norm());
            scale = scale.max(v1.eval(p).norm()).max(v2.eval(p).norm());
        }
        Ok(Self { degree: FormDegree::ZeroOne, coefficients: vec![v1, v2], support, shells, closedness_residual: res, scale })
    }

    /// `(1,1)` form; measures the `∂`-closedness defect
    /// `|∂v_{1k̄}/∂z₂ - ∂v_{2k̄}/∂z₁|` and the Hermitian defect.
    pub fn one_one(v: [ComplexField; 4], support: BallSpec, shells: Vec<f64>) -> Result<Self> {
        ensure(support.dim() == 4 && v.iter().all(|c| c.dim == 4), || "forms live on C^2".into())?;
        let pts = seeded_points(&support, CLOSEDNESS_SAMPLES, 0xdd11, |_| true);
        let (mut res, mut scale) = (0.0f64, 0.0f64);
        for p in &pts {
            for k in 0..2 {
                let a = dz_fd(&|y: &[f64]| v[k].eval(y), p, PROBE_STEP)[1];
                let b = dz_fd(&|y: &[f64]| v[2 + k].eval(y), p, PROBE_STEP)[0];
                res = res.max((a - b).norm());
            }
            res = res.max((v[1].eval(p) - v[2].eval(p).conj()).norm());
            for c in &v {
                scale = scale.max(c.eval(p).norm());
            }
        }
        Ok(Self { degree: FormDegree::OneOne, coefficients: v.to_vec(), support, shells, closedness_residual: res, scale })
    }

    pub fn tolerance(&self) -> f64 {
        1e-5 * self.scale.max(1.0)
    }

    pub fn is_closed(&self) -> bool {
        self.closedness_residual <= self.tolerance()
    }

    /// Pointwise Euclidean norm of the coefficient vector.
    pub fn norm_at(&self, x: &[f64]) -> f64 {
        self.coefficients.iter().map(|c| c.eval(x).norm_sqr()).sum::<f64>().sqrt()
    }
}

/// `v = f ∂̄χ` for a holomorphic `f`, supported in the transition shell of `χ`.
pub fn cutoff_form(cut: Cutoff, f: ComplexField) -> Result<CompactForm> {
    let coef = |k: usize| {
        let f = f.clone();
        ComplexField::new(4, format!("{}·dbar_{}χ", f.label, k + 1), move |x| {
            let d = cut.dbar(x)[k];
            if d == C::new(0.0, 0.0) {
                d
            } else {
                d * f.eval(x)
            }
        })
    };
    let support = BallSpec::new(cut.center.to_vec(), cut.r1)?;
    CompactForm::zero_one(coef(0), coef(1), support, vec![cut.r0])
}

struct CauchyKernel {
    v1: ComplexField,
    center: Vec<f64>,
    radius: f64,
    shells: Vec<f64>,
    order: usize,
    gl: Vec<(f64, f64)>,
}

impl CauchyKernel {
    /// `u(z) = (1/π) ∫ v₁(ζ, z₂) / (z₁ - ζ) dA(ζ)` in polar coordinates about `z₁`.
    fn eval(&self, x: &[f64]) -> C {
        let c = &self.center;
        let h2 = (x[2] - c[2]).powi(2) + (x[3] - c[3]).powi(2);
        let r2 = self.radius * self.radius - h2;
        if r2 <= 0.0 {
            return C::new(0.0, 0.0);
        }
        let slice_r = r2.sqrt();
        let slice_shells: Vec<f64> = self.shells.iter().filter(|&&s| s * s > h2).map(|&s| (s * s - h2).sqrt()).collect();
        // Full circle by the trapezoid rule from inside the slice disc; from
        // outside, Gauss nodes on the arc of directions that meet it.
        let m = 2 * self.order;
        let (dx, dy) = (c[0] - x[0], c[1] - x[1]);
        let d = dx.hypot(dy);
        let angles: Vec<(f64, f64)> = if d > slice_r {
            let (phi, alpha) = (dy.atan2(dx), (slice_r / d).asin());
            gauss_legendre(m, phi - alpha, phi + alpha)
        } else {
            let step = 2.0 * PI / m as f64;
            (0..m).map(|i| ((i as f64 + 0.5) * step, step)).collect()
        };
        let mut breaks = Vec::with_capacity(2 * slice_shells.len() + 2);
        let mut y = [0.0, 0.0, x[2], x[3]];
        let mut acc = C::new(0.0, 0.0);
        for (th, tw) in angles {
            let d = [th.cos(), th.sin()];
            ray_pieces(&x[..2], &d, &c[..2], slice_r, &slice_shells, &mut breaks);
            let mut ray = C::new(0.0, 0.0);
            for w in breaks.windows(2) {
                let (mid, half) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
                for &(s, wt) in &self.gl {
                    let t = mid + half * s;
                    y[0] = x[0] + t * d[0];
                    y[1] = x[1] + t * d[1];
                    ray += self.v1.eval(&y) * (wt * half);
                }
            }
            acc += ray * C::new(th.cos(), -th.sin()) * tw;
        }
        -acc / PI
    }
}

/// Decaying solution of `∂̄u = v` for a closed compactly supported `(0,1)`
/// form, as the Cauchy transform of `v₁` in the first variable.
pub fn dbar_solve_compact(v: &CompactForm, budget: Budget) -> Result<ComplexField> {
    ensure(v.degree == FormDegree::ZeroOne, || "dbar solve needs a (0,1) form".into())?;
    if !v.is_closed() {
        return Err(contract(format!(
            "form is not dbar-closed: residual {:.3e} > {:.3e}",
            v.closedness_residual,
            v.tolerance()
        )));
    }
    let order = budget.cauchy_order();
    let kernel = CauchyKernel {
        v1: v.coefficients[0].clone(),
        center: v.support.center.clone(),
        radius: v.support.radius,
        shells: v.shells.clone(),
        order,
        gl: gauss_legendre(order, -1.0, 1.0),
    };
    let label = format!("cauchy[{}]", v.coefficients[0].label);
    Ok(ComplexField::new(4, label, move |x| kernel.eval(x)).with_support(v.support.clone()))
}

/// `max |∂̄u - v|` over `points`.
pub fn dbar_residual(u: &ComplexField, v: &CompactForm, points: &[[f64; 4]]) -> f64 {
    points
        .par_iter()
        .map(|p| {
            let d = dbar_fd(&|y: &[f64]| u.eval(y), p, PROBE_STEP);
            (0..2).map(|k| (d[k] - v.coefficients[k].eval(p)).norm()).fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

// ---------------------------------------------------------------------------
// Extension problems

#[derive(Debug, Clone)]
pub enum ExtensionData {
    Holomorphic(ComplexField),
    Pluriharmonic(ScalarField),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtensionKind {
    Holomorphic,
    Pluriharmonic,
}

/// Data `f` on `Ω \ E` for balls `E ⊂ Ω` in `C²`, with `E_r ⊂ Ω`.
#[derive(Debug, Clone)]
pub struct ExtensionProblem {
    pub name: String,
    pub omega: BallSpec,
    pub e: BallSpec,
    pub margin: f64,
    pub f: ExtensionData,
    /// Entire reference field; compared through its real part for pluriharmonic data.
    pub truth: Option<ComplexField>,
}

impl ExtensionProblem {
    pub fn new(name: impl Into<String>, omega: BallSpec, e: BallSpec, margin: f64, f: ExtensionData) -> Result<Self> {
        ensure(omega.dim() == 4 && e.dim() == 4, || "extension problems live in C^2".into())?;
        ensure(margin > 0.0, || "margin must be positive".into())?;
        let reach = dist(&omega.center, &e.center) + e.radius + margin;
        ensure(reach < omega.radius * (1.0 - 1e-9), || format!("E_r reaches {reach}, outside Omega of radius {}", omega.radius))?;
        let tags = match &f {
            ExtensionData::Holomorphic(g) => g.tags,
            ExtensionData::Pluriharmonic(g) => g.tags,
        };
        let claimed = match &f {
            ExtensionData::Holomorphic(_) => tags.holomorphic,
            ExtensionData::Pluriharmonic(_) => tags.pluriharmonic,
        };
        ensure(claimed, || "data must be tagged holomorphic or pluriharmonic".into())?;
        Ok(Self { name: name.into(), omega, e, margin, f, truth: None })
    }

    pub fn with_truth(mut self, t: ComplexField) -> Self {
        self.truth = Some(t);
        self
    }

    pub fn kind(&self) -> ExtensionKind {
        match self.f {
            ExtensionData::Holomorphic(_) => ExtensionKind::Holomorphic,
            ExtensionData::Pluriharmonic(_) => ExtensionKind::Pluriharmonic,
        }
    }

    /// `χ(d(·, E) / r)` with the step between `d = r/2` and `d = r`.
    pub fn cutoff(&self) -> Cutoff {
        let c = [self.e.center[0], self.e.center[1], self.e.center[2], self.e.center[3]];
        Cutoff { center: c, r0: self.e.radius + 0.5 * self.margin, r1: self.e.radius + self.margin }
    }

    fn e_r(&self) -> BallSpec {
        BallSpec { center: self.e.center.clone(), radius: self.e.radius + self.margin }
    }

    fn outside_e(&self, x: &[f64], pad: f64) -> bool {
        self.e.dist_to_center(x) > self.e.radius + pad
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtensionOptions {
    pub budget: Budget,
    pub seed: u64,
    /// Points in `Ω` for the sup error.
    pub samples: usize,
    /// Points for the residual of the extended field.
    pub residual_points: usize,
    /// Skip residuals; only the sup error against the truth is computed.
    pub error_only: bool,
}

impl Default for ExtensionOptions {
    fn default() -> Self {
        Self { budget: Budget::default(), seed: 0, samples: 96, residual_points: 8, error_only: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtensionReport {
    pub case: String,
    pub kind: ExtensionKind,
    pub budget: Budget,
    /// Holomorphy (`|∂̄f|`) or pluriharmonicity (`|∂∂̄f|`) defect of the data.
    pub input_probe: f64,
    pub closedness_residual: f64,
    /// `sup |F - truth|` over the sample grid.
    pub sup_error: Option<f64>,
    /// `sup |F - f|` over samples of `Ω \ E_r`.
    pub outer_agreement: f64,
    /// `|∂̄u - v|`, or `|Δu - g| / max(1, |g|)`, at sample points; `None` when skipped.
    pub equation_residual: Option<f64>,
    /// `|∂̄F|` or `|∂∂̄F|` at sample points of `Ω`; `None` when skipped.
    pub extension_residual: Option<f64>,
    /// `‖u‖₂ / ‖max(|z|, 1) v‖₂` over `E_r`, reported only.
    pub l2_ratio: f64,
    pub tolerance: f64,
    pub samples: usize,
    pub within_tolerance: bool,
}

/// The extended field together with its report.
#[derive(Debug, Clone)]
pub struct Extension {
    pub field: ComplexField,
    pub report: ExtensionReport,
}

fn probe_points(p: &ExtensionProblem, count: usize, seed: u64) -> Vec<[f64; 4]> {
    seeded_points(&p.omega.scaled(1.0 - 1e-3), count, seed ^ 0x9e37, |x| p.outside_e(x, 1e-3))
}

/// `F = χ f - u` with `∂̄u = f ∂̄χ`, so `F` is holomorphic on `Ω` and equals `f`
/// outside `E_r`.
pub fn hartogs_extend(problem: &ExtensionProblem, opts: &ExtensionOptions) -> Result<Extension> {
    let ExtensionData::Holomorphic(f) = &problem.f else {
        return Err(contract("hartogs_extend needs holomorphic data"));
    };
    let pts = probe_points(problem, 32, opts.seed);
    let (mut probe, mut fscale) = (0.0f64, 0.0f64);
    for p in &pts {
        let d = dbar_fd(&|y: &[f64]| f.eval(y), p, PROBE_STEP);
        probe = probe.max(d[0].norm()).max(d[1].norm());
        fscale = fscale.max(f.eval(p).norm());
    }
    if probe > 1e-5 * fscale.max(1.0) {
        return Err(contract(format!("data fails the holomorphy probe: |dbar f| = {probe:.3e}")));
    }
    let cut = problem.cutoff();
    let v = cutoff_form(cut, f.clone())?;
    let u = dbar_solve_compact(&v, opts.budget)?;
    let (fe, ue) = (f.clone(), u.clone());
    let big_f = ComplexField::new(4, format!("ext[{}]", f.label), move |x| {
        let chi = cut.eval(x);
        let head = if chi == 0.0 { C::new(0.0, 0.0) } else { fe.eval(x) * chi };
        head - ue.eval(x)
    })
    .with_tags(Tags { holomorphic: true, ..Tags::default() });

    let report = assess(problem, opts, &big_f, &|x| u.eval(x), &v, probe, |pts| dbar_residual(&u, &v, pts))?;
    Ok(Extension { field: big_f, report })
}

/// `F = χ f - u` with `Δu = Δ(χ f)` solved by the Newtonian potential in `R⁴`.
pub fn pluriharmonic_extend(problem: &ExtensionProblem, opts: &ExtensionOptions) -> Result<Extension> {
    let ExtensionData::Pluriharmonic(f) = &problem.f else {
        return Err(contract("pluriharmonic_extend needs pluriharmonic data"));
    };
    let pts = probe_points(problem, 32, opts.seed);
    let (mut probe, mut fscale) = (0.0f64, 0.0f64);
    for p in &pts {
        let l = levi_fd(&|y: &[f64]| f.eval(y), p, PROBE_STEP);
        probe = probe.max(max_entry(&l));
        fscale = fscale.max(f.eval(p).abs());
    }
    if probe > 1e-5 * fscale.max(1.0) {
        return Err(contract(format!("data fails the pluriharmonicity probe: |ddbar f| = {probe:.3e}")));
    }
    let cut = problem.cutoff();
    let form = levi_form(cut, f.clone())?;
    if !form.is_closed() {
        return Err(contract(format!("(1,1) form not closed: residual {:.3e}", form.closedness_residual)));
    }
    let fg = f.clone();
    let g = ScalarField::new(4, format!("lap[χ·{}]", f.label()), move |x| {
        let (lap, gx) = cut.lap_grad(x);
        if lap == 0.0 && gx.iter().all(|&c| c == 0.0) {
            return 0.0;
        }
        let mut df = [0.0; 4];
        fg.gradient_into(x, &mut df);
        fg.eval(x) * lap + 2.0 * (0..4).map(|i| gx[i] * df[i]).sum::<f64>()
    })
    .with_support(BallSpec::new(cut.center.to_vec(), cut.r1)?);
    let sol = newtonian_solve_with_shells(&g, &[cut.r0], opts.budget)?;
    let (fe, ue) = (f.clone(), sol.u.clone());
    let big_f = ComplexField::new(4, format!("ext[{}]", f.label()), move |x| {
        let chi = cut.eval(x);
        let head = if chi == 0.0 { 0.0 } else { chi * fe.eval(x) };
        C::new(head - ue.eval(x), 0.0)
    })
    .with_tags(Tags { pluriharmonic: true, harmonic: true, ..Tags::default() });
    let uu = sol.u.clone();
    let residual = sol.residual / sol.residual_scale.max(1.0);
    let report = assess(problem, opts, &big_f, &|x| C::new(uu.eval(x), 0.0), &form, probe, |_| residual)?;
    Ok(Extension { field: big_f, report })
}

/// `∂∂̄(χ f)` for a pluriharmonic `f`: `χ_{jk̄} f + χ_j f_{k̄} + χ_{k̄} f_j`.
fn levi_form(cut: Cutoff, f: ScalarField) -> Result<CompactForm> {
    let coef = |j: usize, k: usize| {
        let f = f.clone();
        ComplexField::new(4, format!("ddbar[{}]_{}{}", f.label(), j + 1, k + 1), move |x| {
            let db = cut.dbar(x);
            if db[0] == C::new(0.0, 0.0) && db[1] == C::new(0.0, 0.0) {
                return C::new(0.0, 0.0);
            }
            let l = cut.levi(x);
            let mut g = [0.0; 4];
            f.gradient_into(x, &mut g);
            let fz = [C::new(g[0], -g[1]) * 0.5, C::new(g[2], -g[3]) * 0.5];
            // χ_j = conj(χ_{j̄}) and f_{k̄} = conj(f_k) for real χ, f.
            l[j][k] * f.eval(x) + db[j].conj() * fz[k].conj() + db[k] * fz[j]
        })
    };
    let support = BallSpec::new(cut.center.to_vec(), cut.r1)?;
    CompactForm::one_one([coef(0, 0), coef(0, 1), coef(1, 0), coef(1, 1)], support, vec![cut.r0])
}

fn assess<R>(
    problem: &ExtensionProblem,
    opts: &ExtensionOptions,
    big_f: &ComplexField,
    u: &(dyn Fn(&[f64]) -> C + Sync),
    form: &CompactForm,
    input_probe: f64,
    equation_residual: R,
) -> Result<ExtensionReport>
where
    R: FnOnce(&[[f64; 4]]) -> f64,
{
    let kind = problem.kind();
    let omega = problem.omega.scaled(1.0 - 1e-3);
    let e_r = problem.e_r();
    let mut pts = seeded_points(&omega, opts.samples, opts.seed, |_| true);
    let inner = seeded_points(&e_r, opts.samples / 3, opts.seed ^ 0x3a3a, |_| true);
    pts.extend_from_slice(&inner);
    let truth = problem.truth.clone();
    let errs: Vec<(f64, f64)> = pts
        .par_iter()
        .map(|p| {
            let fv = big_f.eval(p);
            let err = truth
                .as_ref()
                .map(|t| match kind {
                    ExtensionKind::Holomorphic => (fv - t.eval(p)).norm(),
                    ExtensionKind::Pluriharmonic => (fv.re - t.eval(p).re).abs(),
                })
                .unwrap_or(0.0);
            let outer = if e_r.dist_to_center(p) > e_r.radius + 1e-9 {
                let data = match &problem.f {
                    ExtensionData::Holomorphic(g) => g.eval(p),
                    ExtensionData::Pluriharmonic(g) => C::new(g.eval(p), 0.0),
                };
                (fv - data).norm()
            } else {
                0.0
            };
            (err, outer)
        })
        .collect();
    let sup_error = truth.as_ref().map(|_| errs.iter().map(|e| e.0).fold(0.0, f64::max));
    let outer_agreement = errs.iter().map(|e| e.1).fold(0.0, f64::max);

    // Uniform samples of E_r carry the L² norms.
    let (mut nu, mut nv) = (0.0, 0.0);
    for p in &inner {
        let z = p.iter().map(|c| c * c).sum::<f64>().sqrt().max(1.0);
        nu += u(p).norm_sqr();
        nv += (z * form.norm_at(p)).powi(2);
    }
    let l2_ratio = if nv > 0.0 { (nu / nv).sqrt() } else { 0.0 };

    let (equation_residual, extension_residual) = if opts.error_only {
        (None, None)
    } else {
        let shell = BallSpec { center: e_r.center.clone(), radius: e_r.radius };
        let rp = seeded_points(&shell, opts.residual_points, opts.seed ^ 0x7777, |x| problem.outside_e(x, 0.25 * problem.margin));
        let eq = equation_residual(&rp);
        let all = seeded_points(&omega.scaled(0.98), opts.residual_points, opts.seed ^ 0x5151, |_| true);
        let ext = all
            .par_iter()
            .map(|p| match kind {
                ExtensionKind::Holomorphic => {
                    let d = dbar_fd(&|y: &[f64]| big_f.eval(y), p, PROBE_STEP);
                    d[0].norm().max(d[1].norm())
                }
                ExtensionKind::Pluriharmonic => max_entry(&levi_fd(&|y: &[f64]| big_f.eval(y).re, p, 1e-3)),
            })
            .reduce(|| 0.0, f64::max);
        (Some(eq), Some(ext))
    };
    let tolerance = DESK_TOLERANCE;
    let ok = |v: Option<f64>| v.is_none_or(|v| v <= tolerance);
    let within_tolerance = ok(sup_error) && outer_agreement <= tolerance && ok(equation_residual) && ok(extension_residual);
    Ok(ExtensionReport {
        case: problem.name.clone(),
        kind,
        budget: opts.budget,
        input_probe,
        closedness_residual: form.closedness_residual,
        sup_error,
        outer_agreement,
        equation_residual,
        extension_residual,
        l2_ratio,
        tolerance,
        samples: pts.len(),
        within_tolerance,
    })
}

// ---------------------------------------------------------------------------
// Hyperbolic distance

/// A point of the open unit disc.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperbolicPoint {
    pub z: C,
}

impl HyperbolicPoint {
    pub fn new(z: C) -> Result<Self> {
        ensure(z.norm() < 1.0, || format!("|z| = {} is not inside the unit disc", z.norm()))?;
        Ok(Self { z })
    }
}

/// Poincaré distance `log((1 + m) / (1 - m))`, `m = |a - b| / |1 - ā b|`.
pub fn hyperbolic_distance(a: HyperbolicPoint, b: HyperbolicPoint) -> f64 {
    pseudo_distance(a.z, b.z)
}

fn pseudo_distance(a: C, b: C) -> f64 {
    let m = (a - b).norm() / (C::new(1.0, 0.0) - a.conj() * b).norm();
    2.0 * m.atanh()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PshProbe {
    pub verdict: Verdict,
    pub min_eigenvalue: f64,
    pub worst_point: [f64; 4],
    pub points: usize,
    pub tolerance: f64,
}

/// Smallest Levi eigenvalue of `log d_hyp` at the off-diagonal pairs of a
/// `grid × grid` set of disc points.
pub fn log_psh_probe(grid: usize) -> Result<PshProbe> {
    ensure(grid >= 2, || "probe grid needs at least two points".into())?;
    let golden = PI * (3.0 - 5f64.sqrt());
    let zs: Vec<C> = (0..grid)
        .map(|k| C::from_polar(0.85 * ((k as f64 + 0.5) / grid as f64).sqrt(), golden * k as f64))
        .collect();
    let pairs: Vec<(C, C)> =
        zs.iter().enumerate().flat_map(|(i, &a)| zs.iter().enumerate().filter(move |(j, _)| *j != i).map(move |(_, &b)| (a, b))).collect();
    let tolerance = 1e-6;
    let evals: Vec<(f64, [f64; 4])> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let x = [a.re, a.im, b.re, b.im];
            let h = 1e-3 * (a - b).norm().min(1.0 - a.norm()).min(1.0 - b.norm());
            let f = |y: &[f64]| pseudo_distance(C::new(y[0], y[1]), C::new(y[2], y[3])).ln();
            (min_eigenvalue(&levi_fd(&f, &x, h)), x)
        })
        .collect();
    let (min_eigenvalue, worst_point) = evals.into_iter().fold((f64::INFINITY, [0.0; 4]), |acc, e| if e.0 < acc.0 { e } else { acc });
    let verdict = if min_eigenvalue >= -tolerance { Verdict::Holds } else { Verdict::Violated };
    Ok(PshProbe { verdict, min_eigenvalue, worst_point, points: pairs.len(), tolerance })
}

// ---------------------------------------------------------------------------
// Standard cases

/// Names accepted by [`standard_problem`].
pub const CASES: [&str; 6] = ["holo-one", "holo-z1", "holo-z1sq-exp", "plh-const", "plh-re-z1", "plh-re-z1sq-exp"];

type Holo = fn(C, C) -> (C, [C; 2]);

fn holo_one(_: C, _: C) -> (C, [C; 2]) {
    (C::new(1.0, 0.0), [C::new(0.0, 0.0); 2])
}

fn holo_z1(z1: C, _: C) -> (C, [C; 2]) {
    (z1, [C::new(1.0, 0.0), C::new(0.0, 0.0)])
}

fn holo_z1sq_exp(z1: C, z2: C) -> (C, [C; 2]) {
    let e = z2.exp();
    (z1 * z1 * e, [z1 * e * 2.0, z1 * z1 * e])
}

fn holo_const2(_: C, _: C) -> (C, [C; 2]) {
    (C::new(2.0, 0.0), [C::new(0.0, 0.0); 2])
}

fn entire(label: &str, h: Holo) -> ComplexField {
    ComplexField::new(4, label, move |x| h(C::new(x[0], x[1]), C::new(x[2], x[3])).0)
        .with_tags(Tags { holomorphic: true, pluriharmonic: true, harmonic: true, ..Tags::default() })
}

/// `Re H` with its gradient: `∂/∂x_j = Re H_j`, `∂/∂y_j = -Im H_j`.
fn real_part_of(label: &str, h: Holo) -> ScalarField {
    ScalarField::new(4, label, move |x| h(C::new(x[0], x[1]), C::new(x[2], x[3])).0.re)
        .with_gradient(move |x, g| {
            let d = h(C::new(x[0], x[1]), C::new(x[2], x[3])).1;
            for j in 0..2 {
                g[2 * j] = d[j].re;
                g[2 * j + 1] = -d[j].im;
            }
        })
        .not_radial()
        .with_tags(Tags { pluriharmonic: true, harmonic: true, ..Tags::default() })
}

/// `Ω = B(0, 1.5)`, `E = B(0, 0.5)`, margin `0.5`, so `E_r = B(0, 1)`.
pub fn standard_problem(name: &str) -> Result<ExtensionProblem> {
    let (h, label): (Holo, &str) = match name {
        "holo-one" | "plh-const" => (if name == "holo-one" { holo_one } else { holo_const2 }, if name == "holo-one" { "1" } else { "2" }),
        "holo-z1" => (holo_z1, "z1"),
        "plh-re-z1" => (holo_z1, "Re z1"),
        "holo-z1sq-exp" => (holo_z1sq_exp, "z1^2 e^z2"),
        "plh-re-z1sq-exp" => (holo_z1sq_exp, "Re(z1^2 e^z2)"),
        other => return Err(contract(format!("unknown extension case {other:?}; known: {CASES:?}"))),
    };
    let data = if name.starts_with("holo") {
        ExtensionData::Holomorphic(entire(label, h))
    } else {
        ExtensionData::Pluriharmonic(real_part_of(label, h))
    };
    let p = ExtensionProblem::new(name, BallSpec::origin(4, 1.5), BallSpec::origin(4, 0.5), 0.5, data)?;
    Ok(p.with_truth(entire(label, h)))
}

/// Runs the extension matching the data of `problem`.
pub fn extend(problem: &ExtensionProblem, opts: &ExtensionOptions) -> Result<Extension> {
    match problem.kind() {
        ExtensionKind::Holomorphic => hartogs_extend(problem, opts),
        ExtensionKind::Pluriharmonic => pluriharmonic_extend(problem, opts),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_step_derivatives_match_differences() {
        for &t in &[0.1, 0.3, 0.5, 0.77, 0.95] {
            let (_, d, dd) = smooth_step(t);
            let h = 1e-5;
            let fd = (smooth_step(t + h).0 - smooth_step(t - h).0) / (2.0 * h);
            let fdd = (smooth_step(t + h).1 - smooth_step(t - h).1) / (2.0 * h);
            assert!((d - fd).abs() < 1e-7 * (1.0 + d.abs()), "t={t}");
            assert!((dd - fdd).abs() < 1e-5 * (1.0 + dd.abs()), "t={t}");
        }
        assert_eq!(smooth_step(0.5).0, 0.5);
    }

    #[test]
    fn cutoff_wirtinger_matches_fd() {
        let cut = Cutoff::new([0.1, 0.0, -0.2, 0.05], 0.5, 1.0).unwrap();
        let x = [0.4, 0.3, 0.2, -0.5];
        let db = cut.dbar(&x);
        let fd = dbar_fd(&|y: &[f64]| C::new(cut.eval(y), 0.0), &x, 1e-4);
        for k in 0..2 {
            assert!((db[k] - fd[k]).norm() < 1e-7);
        }
        let l = cut.levi(&x);
        let lf = levi_fd(&|y: &[f64]| cut.eval(y), &x, 1e-3);
        for j in 0..2 {
            for k in 0..2 {
                assert!((l[j][k] - lf[j][k]).norm() < 1e-6, "{j}{k}: {} vs {}", l[j][k], lf[j][k]);
            }
        }
    }

    #[test]
    fn hyperbolic_distance_values() {
        let z = HyperbolicPoint::new(C::new(0.3, -0.2)).unwrap();
        assert_eq!(hyperbolic_distance(z, z), 0.0);
        let o = HyperbolicPoint::new(C::new(0.0, 0.0)).unwrap();
        let h = HyperbolicPoint::new(C::new(0.5, 0.0)).unwrap();
        assert!((hyperbolic_distance(o, h) - 3f64.ln()).abs() < 1e-14);
        assert!(HyperbolicPoint::new(C::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn zero_form_gives_zero_solution() {
        let zero = || ComplexField::new(4, "0", |_| C::new(0.0, 0.0));
        let v = CompactForm::zero_one(zero(), zero(), BallSpec::origin(4, 1.0), vec![]).unwrap();
        let u = dbar_solve_compact(&v, Budget::default()).unwrap();
        assert_eq!(u.eval(&[0.1, 0.2, 0.3, 0.1]), C::new(0.0, 0.0));
    }

    #[test]
    fn cauchy_transform_recovers_cutoff_solutions() {
        let cut = Cutoff::new([0.0; 4], 0.5, 1.0).unwrap();
        let v = cutoff_form(cut, ComplexField::new(4, "1", |_| C::new(1.0, 0.0))).unwrap();
        let u = dbar_solve_compact(&v, Budget::default()).unwrap();
        let vz = cutoff_form(cut, ComplexField::new(4, "z1", |x| C::new(x[0], x[1]))).unwrap();
        let uz = dbar_solve_compact(&vz, Budget::default()).unwrap();
        let pts = seeded_points(&BallSpec::origin(4, 1.3), 24, 3, |_| true);
        for p in &pts {
            let chi = cut.eval(p);
            assert!((u.eval(p) - (chi - 1.0)).norm() < 1e-4, "{p:?}");
            let z1 = C::new(p[0], p[1]);
            assert!((uz.eval(p) - z1 * (chi - 1.0)).norm() < 1e-4, "{p:?}");
        }
        assert!(dbar_residual(&uz, &vz, &pts[..6]) < 1e-3);
    }

    #[test]
    fn open_form_is_rejected() {
        let v1 = ComplexField::new(4, "x2", |x| C::new(x[2], 0.0));
        let v2 = ComplexField::new(4, "0", |_| C::new(0.0, 0.0));
        let v = CompactForm::zero_one(v1, v2, BallSpec::origin(4, 1.0), vec![]).unwrap();
        assert!(!v.is_closed());
        assert!(dbar_solve_compact(&v, Budget::default()).is_err());
    }

    #[test]
    fn newtonian_far_field_of_unit_bump() {
        let g = unit_mass_bump(4, vec![0.0; 4], 1.0).unwrap();
        let sol = newtonian_solve_with_shells(&g, &[0.5], Budget::default()).unwrap();
        let fit = sol.decay.clone().unwrap();
        assert!((fit.slope + 2.0).abs() < 1e-6, "slope {}", fit.slope);
        for (r, v) in fit.radii.iter().zip(&fit.values) {
            let exact = 1.0 / (4.0 * PI * PI * r * r);
            assert!((v - exact).abs() < 1e-6 * exact, "r={r}");
        }
        // Inside the flat part the potential is explicit as well.
        let x = [0.1, 0.0, 0.2, 0.0];
        let near = sol.u.eval(&x);
        let far = sol.u.eval(&[3.0, 0.0, 0.0, 0.0]);
        assert!(near < far && far < 0.0);
        assert!(sol.residual < 5e-2 * sol.residual_scale, "residual {}", sol.residual);
        let rep = decay_check(&sol, 1.0, 2).unwrap();
        assert_eq!(rep.verdict, Verdict::Holds);
    }

    #[test]
    fn newtonian_slope_in_six_dimensions() {
        let g = unit_mass_bump(6, vec![0.0; 6], 1.0).unwrap();
        let budget = Budget { newton_nodes: 6 * 6usize.pow(4), ..Budget::default() };
        let sol = newtonian_solve_with_shells(&g, &[0.5], budget).unwrap();
        let slope = sol.decay.unwrap().slope;
        assert!((slope + 4.0).abs() < 0.2, "slope {slope}");
    }

    #[test]
    fn newtonian_zero_source_is_trivial() {
        let g = ScalarField::zero(4).with_support(BallSpec::origin(4, 1.0));
        let sol = newtonian_solve(&g, Budget::default()).unwrap();
        assert_eq!(sol.u.eval(&[0.3, 0.0, 0.0, 0.0]), 0.0);
        let rep = decay_check(&sol, 1.0, 2).unwrap();
        assert!(rep.trivial && rep.verdict == Verdict::Holds);
    }

    #[test]
    fn newtonian_is_linear_and_dipole_decays_faster() {
        let d = dipole_source(4, 0.3, 0.5).unwrap();
        let sol = newtonian_solve(&d, Budget::default()).unwrap();
        let slope = sol.decay.as_ref().unwrap().slope;
        assert!(slope < -2.5, "dipole slope {slope}");
        assert_eq!(decay_check(&sol, 0.8, 2).unwrap().verdict, Verdict::Holds);
    }

    #[test]
    fn newtonian_is_linear() {
        let ball = BallSpec::origin(4, 1.0);
        let g1 = unit_mass_bump(4, vec![0.0; 4], 1.0).unwrap();
        let g2 = unit_mass_bump(4, vec![0.0; 4], 0.6).unwrap().with_support(ball.clone());
        let (a, b) = (g1.clone(), g2.clone());
        let sum = ScalarField::new(4, "g1+2g2", move |x| a.eval(x) + 2.0 * b.eval(x)).with_support(ball);
        let shells = [0.3, 0.5, 0.6];
        let solve = |g: &ScalarField| newtonian_solve_with_shells(g, &shells, Budget::default()).unwrap().u;
        let (u1, u2, us) = (solve(&g1), solve(&g2), solve(&sum));
        for x in [[0.2, 0.1, 0.0, 0.3], [0.9, -0.4, 0.2, 0.0], [1.5, 0.3, -0.2, 0.1], [5.0, 0.0, 0.0, 1.0]] {
            let lhs = us.eval(&x);
            let rhs = u1.eval(&x) + 2.0 * u2.eval(&x);
            assert!((lhs - rhs).abs() < 1e-12 * rhs.abs().max(1.0), "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn log_hyperbolic_distance_is_psh() {
        let p = log_psh_probe(8).unwrap();
        assert_eq!(p.verdict, Verdict::Holds, "{p:?}");
    }
}
