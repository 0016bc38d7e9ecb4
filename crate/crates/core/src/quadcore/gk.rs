//! Globally adaptive Gauss–Kronrod (7/15) integration on an interval, with
//! variable changes for infinite upper limits and singular lower endpoints.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{LabError, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Options for [`integrate_interval`].
#[derive(Debug, Clone)]
pub struct Opts1d {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_evals: usize,
    /// Substitute `t = a + (b - a) e^{-w}` to resolve an integrable singularity at `a`.
    pub singular_lo: bool,
    /// Interior points where the integrand may have a kink.
    pub breakpoints: Vec<f64>,
}

impl Opts1d {
    pub fn new(rel_tol: f64, abs_tol: f64, max_evals: usize) -> Self {
        Self { rel_tol, abs_tol, max_evals, singular_lo: false, breakpoints: Vec::new() }
    }

    pub fn singular_lo(mut self, on: bool) -> Self {
        self.singular_lo = on;
        self
    }

    pub fn breakpoints(mut self, b: Vec<f64>) -> Self {
        self.breakpoints = b;
        self
    }
}

/// Result of a one-dimensional integration.
#[derive(Debug, Clone, Copy, Default)]
pub struct Outcome {
    pub value: f64,
    pub err: f64,
    pub evals: usize,
    pub nonfinite: usize,
}

struct Segment {
    a: f64,
    b: f64,
    val: f64,
    err: f64,
    resabs: f64,
}

impl PartialEq for Segment {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Segment {
    fn cmp(&self, o: &Self) -> Ordering {
        self.err.total_cmp(&o.err)
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, nonfinite: &mut usize) -> Segment {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut eval = |x: f64| {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            *nonfinite += 1;
            0.0
        }
    };
    let fc = eval(c);
    let mut rk = fc * WGK[7];
    let mut rg = fc * WG[3];
    let mut resabs = fc.abs() * WGK[7];
    let mut fv = [0.0; 14];
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = eval(c - dx);
        let f2 = eval(c + dx);
        fv[2 * j] = f1;
        fv[2 * j + 1] = f2;
        rk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            rg += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = rk * 0.5;
    let mut resasc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv[2 * j] - mean).abs() + (fv[2 * j + 1] - mean).abs());
    }
    let val = rk * h;
    let resabs = resabs * h.abs();
    let resasc = resasc * h.abs();
    let mut err = ((rk - rg) * h).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    let floor = 50.0 * f64::EPSILON * resabs;
    if floor > err {
        err = floor;
    }
    Segment { a, b, val, err, resabs }
}

fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, opts: &Opts1d) -> Result<Outcome> {
    let mut nonfinite = 0usize;
    let first = gk15(f, a, b, &mut nonfinite);
    let mut evals = 15;
    let mut total = first.val;
    let mut total_err = first.err;
    let mut total_abs = first.resabs;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    loop {
        let tol = (opts.abs_tol + opts.rel_tol * total.abs()).max(50.0 * f64::EPSILON * total_abs);
        if total_err <= tol {
            break;
        }
        if evals + 30 > opts.max_evals {
            return Err(LabError::DivergedIntegral(format!(
                "error {total_err:.3e} above budget {tol:.3e} after {evals} evaluations on [{a}, {b}]"
            )));
        }
        let seg = heap.pop().expect("heap never empty");
        let m = 0.5 * (seg.a + seg.b);
        if !(m > seg.a && m < seg.b) {
            // Interval can no longer be split in floating point; accept it.
            total_err -= seg.err;
            heap.push(Segment { err: 0.0, ..seg });
            continue;
        }
        let l = gk15(f, seg.a, m, &mut nonfinite);
        let r = gk15(f, m, seg.b, &mut nonfinite);
        evals += 30;
        total += l.val + r.val - seg.val;
        total_err += l.err + r.err - seg.err;
        total_abs += l.resabs + r.resabs - seg.resabs;
        heap.push(l);
        heap.push(r);
    }
    // Re-sum from the segments to shed accumulated cancellation.
    let (mut v, mut e) = (0.0, 0.0);
    for s in heap.iter() {
        v += s.val;
        e += s.err;
    }
    Ok(Outcome { value: v, err: e, evals, nonfinite })
}

/// `∫_lo^hi f` for `f` singular at `lo`, written as `∫_0^∞ g(w) dw` with
/// `t = lo + (hi - lo) e^{-w}`. The window `[0, W]` stops where `g` can no
/// longer be evaluated; beyond it `g` is extrapolated as `g(W) e^{-κ(w-W)}`,
/// which is exact for power-law singularities, and the tail enters the error.
fn singular_piece<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, opts: &Opts1d) -> Result<Outcome> {
    let len = hi - lo;
    let g = |w: f64| {
        let e = len * (-w).exp();
        if lo + e == lo || e == 0.0 {
            return f64::NAN;
        }
        f(lo + e) * e
    };
    const STEP: f64 = 20.0;
    let mut w_end = 0.0;
    while w_end < 700.0 && g(w_end + STEP).is_finite() {
        w_end += STEP;
    }
    let diverged = || LabError::DivergedIntegral(format!("integrand does not decay at the singular endpoint {lo}"));
    if w_end < 2.0 * STEP {
        return Err(diverged());
    }
    let (g0, g1, g2) = (g(w_end - 2.0 * STEP).abs(), g(w_end - STEP).abs(), g(w_end).abs());
    let rate = |a: f64, b: f64| if b == 0.0 { f64::INFINITY } else { (a / b).ln() / STEP };
    let (k_far, k_near) = (rate(g1, g2), rate(g0, g1));
    if !(k_far > 0.015) && g1 > 0.0 {
        return Err(diverged());
    }
    // Geometric panels keep the first GK rule from stepping over features at w < 1.
    let mut o = Outcome::default();
    let mut edges = vec![0.0];
    let mut w = 0.5;
    while w < w_end {
        edges.push(w);
        w *= 2.0;
    }
    edges.push(w_end);
    let sub = Opts1d { abs_tol: opts.abs_tol / edges.len() as f64, ..opts.clone() };
    for e in edges.windows(2) {
        let p = adapt(&g, e[0], e[1], &sub)?;
        o.value += p.value;
        o.err += p.err;
        o.evals += p.evals;
        o.nonfinite += p.nonfinite;
    }
    if g2 > 0.0 && k_far.is_finite() {
        let tail = g(w_end) / k_far;
        let alt = if k_near.is_finite() && k_near > 0.0 { g(w_end) / k_near } else { 2.0 * tail };
        o.value += tail;
        o.err += (tail - alt).abs() + 1e-3 * tail.abs();
    }
    Ok(o)
}

/// `∫_a^b f(t) dt` with `b` possibly `+∞`.
pub fn integrate_interval<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: &Opts1d) -> Result<Outcome> {
    if !(a.is_finite()) || b.is_nan() {
        return Err(LabError::ContractViolation(format!("bad interval [{a}, {b}]")));
    }
    if b <= a {
        return Ok(Outcome::default());
    }
    let mut cuts: Vec<f64> = opts
        .breakpoints
        .iter()
        .copied()
        .filter(|&p| p > a && p < b && p.is_finite())
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut pts = vec![a];
    pts.extend(cuts);
    if b.is_infinite() && opts.singular_lo && pts.len() == 1 {
        pts.push(a + 1.0);
    }
    pts.push(b);
    let n = pts.len() - 1;
    let mut acc = Outcome::default();
    for i in 0..n {
        let (lo, hi) = (pts[i], pts[i + 1]);
        let sub = Opts1d {
            rel_tol: opts.rel_tol,
            abs_tol: opts.abs_tol / n as f64,
            max_evals: opts.max_evals,
            singular_lo: false,
            breakpoints: Vec::new(),
        };
        let o = if hi.is_infinite() {
            adapt(
                &|s: f64| {
                    let d = 1.0 - s;
                    let t = lo + s / d;
                    if d <= 0.0 || !t.is_finite() {
                        0.0
                    } else {
                        f(t) / (d * d)
                    }
                },
                0.0,
                1.0,
                &sub,
            )?
        } else if i == 0 && opts.singular_lo {
            singular_piece(&f, lo, hi, &sub)?
        } else {
            adapt(&f, lo, hi, &sub)?
        };
        acc.value += o.value;
        acc.err += o.err;
        acc.evals += o.evals;
        acc.nonfinite += o.nonfinite;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> Opts1d {
        Opts1d::new(1e-12, 1e-14, 200_000)
    }

    #[test]
    fn polynomial_exact() {
        let o = integrate_interval(|x| x * x, 0.0, 3.0, &opts()).unwrap();
        assert!((o.value - 9.0).abs() < 1e-13);
    }

    #[test]
    fn gaussian_half_line() {
        let o = integrate_interval(|x: f64| (-x * x).exp(), 0.0, f64::INFINITY, &opts()).unwrap();
        assert!((o.value - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn strong_endpoint_singularity() {
        let o = integrate_interval(|x: f64| x.powf(-0.96), 0.0, 1.0, &Opts1d::new(1e-9, 0.0, 400_000).singular_lo(true))
            .unwrap();
        assert!((o.value - 25.0).abs() < 1e-6, "{}", o.value);
    }

    #[test]
    fn log_singularity() {
        let o = integrate_interval(|x: f64| x.ln(), 0.0, 1.0, &opts().singular_lo(true)).unwrap();
        assert!((o.value + 1.0).abs() < 1e-11);
    }

    #[test]
    fn kink_with_breakpoint() {
        let o = integrate_interval(|x: f64| (x - 0.3).abs(), 0.0, 1.0, &opts().breakpoints(vec![0.3])).unwrap();
        assert!((o.value - (0.045 + 0.245)).abs() < 1e-13);
    }

    #[test]
    fn non_integrable_reports_divergence() {
        let r = integrate_interval(|x: f64| 1.0 / x, 0.0, 1.0, &Opts1d::new(1e-8, 1e-10, 20_000).singular_lo(true));
        assert!(matches!(r, Err(LabError::DivergedIntegral(_))));
    }
}
