//! Bessel functions of the first kind by certified power series, lowest-root
//! bracketing, and the first nonzero Neumann eigenvalue of the unit ball.

use serde::Serialize;

use crate::error::{contract, ensure, LabError, Result};
use crate::quadcore::MeasuredValue;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function. Positive integers and half-integers use exact recursion
/// from `Γ(1) = 1` and `Γ(1/2) = √π`; everything else goes through Lanczos.
pub fn gamma(x: f64) -> f64 {
    let twice = 2.0 * x;
    if x > 0.0 && twice == twice.round() && x <= 171.0 {
        let (mut acc, mut t) = if twice as i64 % 2 == 0 {
            (1.0, 1.0)
        } else {
            (std::f64::consts::PI.sqrt(), 0.5)
        };
        while t < x {
            acc *= t;
            t += 1.0;
        }
        return acc;
    }
    lanczos_gamma(x)
}

fn lanczos_gamma(x: f64) -> f64 {
    use std::f64::consts::PI;
    if x < 0.5 {
        return PI / ((PI * x).sin() * lanczos_gamma(1.0 - x));
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
}

/// Truncated series for `J_ν` together with its first two derivatives.
///
/// At construction the truncation index is chosen so that, at `x_max`, the
/// series terms from `trunc_terms` onwards decrease in magnitude and
/// alternate, so the first omitted term bounds the remainder on `[0, x_max]`.
#[derive(Debug, Clone, Serialize)]
pub struct BesselEval {
    pub nu: f64,
    pub trunc_terms: usize,
    pub x_max: f64,
    /// Remainder bounds for `J`, `J'`, `J''` in that order.
    pub remainder_bound: [f64; 3],
    #[serde(skip)]
    inv_gamma: f64,
}

const TRUNC_TARGET: f64 = 1e-17;
const MAX_TERMS: usize = 400;

fn falling(a: f64, m: usize) -> f64 {
    (0..m).fold(1.0, |acc, j| acc * (a - j as f64))
}

impl BesselEval {
    pub fn new(nu: f64, x_max: f64) -> Result<Self> {
        ensure(nu >= 0.0 && nu.is_finite(), || format!("order {nu} must be >= 0"))?;
        ensure(x_max > 0.0 && x_max.is_finite(), || format!("x_max {x_max} must be positive"))?;
        let inv_gamma = 1.0 / gamma(nu + 1.0);
        let h = 0.5 * x_max;
        let q = h * h;
        // |a_k| (x_max/2)^{2k}, tracked in log space to avoid overflow for large x_max.
        let mut log_a = -gamma(nu + 1.0).ln();
        let mut k = 0usize;
        loop {
            if k > MAX_TERMS {
                return Err(contract(format!(
                    "series for J_{nu} cannot be certified up to x = {x_max}"
                )));
            }
            let kf = k as f64;
            let mut ok = true;
            let mut bounds = [0.0; 3];
            for (m, b) in bounds.iter_mut().enumerate() {
                let ratio = q / ((kf + 1.0) * (kf + 1.0 + nu))
                    * (falling(2.0 * kf + 2.0 + nu, m) / falling(2.0 * kf + nu, m)).abs();
                let c = falling(2.0 * kf + nu, m).abs() / 2f64.powi(m as i32);
                let term = (log_a + (nu - m as f64) * h.ln()).exp() * c;
                if !(ratio < 1.0 && falling(2.0 * kf + nu, m) > 0.0 && term <= TRUNC_TARGET) {
                    ok = false;
                }
                *b = term;
            }
            if ok {
                return Ok(Self { nu, trunc_terms: k, x_max, remainder_bound: bounds, inv_gamma });
            }
            log_a += q.ln() - ((kf + 1.0) * (kf + 1.0 + nu)).ln();
            k += 1;
        }
    }

    fn check_arg(&self, x: f64) -> Result<()> {
        ensure(x >= 0.0 && x <= self.x_max, || {
            format!("x = {x} outside certified range [0, {}]", self.x_max)
        })
    }

    /// m-th derivative of the truncated series with a rounding + truncation bound.
    pub fn derivative_with_err(&self, x: f64, m: usize) -> Result<MeasuredValue> {
        self.check_arg(x)?;
        ensure(m <= 2, || format!("derivative order {m} not supported"))?;
        let nu = self.nu;
        let mut sum = 0.0;
        let mut abs_sum = 0.0;
        if x == 0.0 {
            // Only the term with exponent exactly zero survives; negative exponents blow up.
            for k in 0..self.trunc_terms {
                let e = 2.0 * k as f64 + nu - m as f64;
                let c = falling(2.0 * k as f64 + nu, m);
                if c == 0.0 {
                    continue;
                }
                if e < 0.0 {
                    return Ok(MeasuredValue::new(f64::INFINITY, 0.0));
                }
                if e == 0.0 {
                    let a = self.inv_gamma
                        * (1..=k).fold(1.0, |acc, j| -acc / (j as f64 * (j as f64 + nu)));
                    sum += a * c / 2f64.powi(m as i32);
                }
            }
            return Ok(MeasuredValue::new(sum, 0.0));
        }
        let h = 0.5 * x;
        let base = h.powf(nu - m as f64) / 2f64.powi(m as i32);
        let q = -h * h;
        let mut a = self.inv_gamma;
        for k in 0..self.trunc_terms {
            let kf = k as f64;
            let t = a * falling(2.0 * kf + nu, m) * base;
            sum += t;
            abs_sum += t.abs();
            a *= q / ((kf + 1.0) * (kf + 1.0 + nu));
        }
        let rounding = 2.0 * (self.trunc_terms as f64 + 2.0) * f64::EPSILON * abs_sum;
        Ok(MeasuredValue::new(sum, self.remainder_bound[m] + rounding))
    }

    pub fn j(&self, x: f64) -> Result<f64> {
        self.derivative_with_err(x, 0).map(|v| v.value)
    }

    pub fn jp(&self, x: f64) -> Result<f64> {
        self.derivative_with_err(x, 1).map(|v| v.value)
    }

    pub fn jpp(&self, x: f64) -> Result<f64> {
        self.derivative_with_err(x, 2).map(|v| v.value)
    }
}

pub fn bessel_j(eval: &BesselEval, x: f64) -> Result<f64> {
    eval.j(x)
}

pub fn bessel_j_prime(eval: &BesselEval, x: f64) -> Result<f64> {
    eval.jp(x)
}

const DEFAULT_X_MAX: f64 = 20.0;

fn eval_for(nu: f64, x: f64) -> Result<BesselEval> {
    BesselEval::new(nu, DEFAULT_X_MAX.max(x * 1.05))
}

/// Residuals of the two identities expressing `J'_{ν+2}` and `J_{ν+2}` through
/// `J_ν` and `J'_ν`. Returns `(res_A, res_B)`.
pub fn functional_equation_residual(nu: f64, x: f64) -> Result<(f64, f64)> {
    let (a, b, _) = functional_equation_residual_with_bound(nu, x)?;
    Ok((a, b))
}

/// As [`functional_equation_residual`] plus the combined series error bound
/// that both residuals are expected to stay under.
pub fn functional_equation_residual_with_bound(nu: f64, x: f64) -> Result<(f64, f64, f64)> {
    ensure(x > 0.0, || format!("x = {x} must be positive"))?;
    let e0 = eval_for(nu, x)?;
    let e2 = eval_for(nu + 2.0, x)?;
    let j = e0.derivative_with_err(x, 0)?;
    let jp = e0.derivative_with_err(x, 1)?;
    let j2 = e2.derivative_with_err(x, 0)?;
    let jp2 = e2.derivative_with_err(x, 1)?;
    let x2 = x * x;
    let ca = 2.0 * (nu + 1.0) / x * (1.0 - nu * (nu + 2.0) / x2);
    let cb = 1.0 - 2.0 * (nu + 1.0) * (nu + 2.0) / x2;
    let res_a = (jp2.value - (ca * j.value - cb * jp.value)).abs();
    let cc = 1.0 - 2.0 * nu * (nu + 1.0) / x2;
    let cd = 2.0 * (nu + 1.0) / x;
    let res_b = (j2.value - (-cc * j.value - cd * jp.value)).abs();
    let bound = jp2.err.max(j2.err)
        + (ca.abs() + cc.abs()) * j.err
        + (cb.abs() + cd.abs()) * jp.err
        + 8.0 * f64::EPSILON * (1.0 + ca.abs() + cb.abs() + cc.abs() + cd.abs());
    Ok((res_a, res_b, bound))
}

/// Sign-change certificate for a root search.
#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct RootBracket {
    pub lo: f64,
    pub hi: f64,
    pub f_lo: f64,
    pub f_hi: f64,
}

impl RootBracket {
    pub fn new(lo: f64, hi: f64, f_lo: f64, f_hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(LabError::BracketFailure(format!("empty interval [{lo}, {hi}]")));
        }
        if !(f_lo * f_hi < 0.0) {
            return Err(LabError::BracketFailure(format!(
                "f({lo}) = {f_lo:e} and f({hi}) = {f_hi:e} have the same sign"
            )));
        }
        Ok(Self { lo, hi, f_lo, f_hi })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum RootKind {
    /// Lowest positive zero `j_ν` of `J_ν`.
    J(f64),
    /// Lowest positive zero `j'_ν` of `J'_ν`.
    JPrime(f64),
    /// Lowest positive zero of `x J'_{n/2}(x) - (n/2 - 1) J_{n/2}(x)`.
    Neumann(usize),
}

impl RootKind {
    /// Interval known to contain the root; the search starts here.
    pub fn reference_bracket(&self) -> (f64, f64) {
        match *self {
            RootKind::J(nu) => ((nu * (nu + 2.0)).sqrt(), (2.0 * (nu + 1.0) * (nu + 3.0)).sqrt()),
            RootKind::JPrime(nu) => ((nu * (nu + 2.0)).sqrt(), (2.0 * nu * (nu + 1.0)).sqrt()),
            RootKind::Neumann(n) => {
                let (lo, hi) = neumann_bracket(n);
                (lo.sqrt(), hi.sqrt())
            }
        }
    }

    fn order(&self) -> f64 {
        match *self {
            RootKind::J(nu) | RootKind::JPrime(nu) => nu,
            RootKind::Neumann(n) => n as f64 / 2.0,
        }
    }
}

/// `((n+2)(n+4)/(n+6), n+2)`.
pub fn neumann_bracket(n: usize) -> (f64, f64) {
    let n = n as f64;
    ((n + 2.0) * (n + 4.0) / (n + 6.0), n + 2.0)
}

struct RootFn {
    kind: RootKind,
    eval: BesselEval,
}

impl RootFn {
    fn new(kind: RootKind, x_hi: f64) -> Result<Self> {
        let eval = eval_for(kind.order(), x_hi)?;
        Ok(Self { kind, eval })
    }

    fn f(&self, x: f64) -> Result<f64> {
        match self.kind {
            RootKind::J(_) => self.eval.j(x),
            RootKind::JPrime(_) => self.eval.jp(x),
            RootKind::Neumann(n) => {
                let nu = n as f64 / 2.0;
                Ok(x * self.eval.jp(x)? - (nu - 1.0) * self.eval.j(x)?)
            }
        }
    }
}

/// Root with its certificates.
#[derive(Debug, Clone, Serialize)]
pub struct RootCertificate {
    pub root: f64,
    pub bracket: RootBracket,
    /// Number of scan points below the root that kept the sign of `f` near 0.
    pub scan_points: usize,
}

const BISECT_TOL: f64 = 1e-12;
const SCAN_STEP: f64 = 1e-3;

fn bisect(rf: &RootFn, br: RootBracket) -> Result<f64> {
    let (mut lo, mut hi, mut f_lo) = (br.lo, br.hi, br.f_lo);
    while hi - lo > BISECT_TOL {
        let mid = 0.5 * (lo + hi);
        let fm = rf.f(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

pub fn lowest_root(kind: RootKind, hint: Option<RootBracket>) -> Result<f64> {
    lowest_root_certified(kind, hint).map(|c| c.root)
}

/// Bisection inside the reference (or hinted) bracket followed by a sign scan
/// from `1e-3` up to the root proving that no smaller positive root exists.
pub fn lowest_root_certified(kind: RootKind, hint: Option<RootBracket>) -> Result<RootCertificate> {
    let (lo, hi) = match hint {
        Some(b) => (b.lo, b.hi),
        None => kind.reference_bracket(),
    };
    let rf = RootFn::new(kind, hi)?;
    let bracket = RootBracket::new(lo, hi, rf.f(lo)?, rf.f(hi)?)?;
    let root = bisect(&rf, bracket)?;

    let f0 = rf.f(SCAN_STEP)?;
    if f0 == 0.0 || !f0.is_finite() {
        return Err(LabError::BracketFailure(format!("scan start value {f0} unusable")));
    }
    let steps = ((root - SCAN_STEP) / SCAN_STEP).floor().max(0.0) as usize;
    let mut count = 0;
    for i in 1..=steps {
        let x = SCAN_STEP * (1 + i) as f64;
        if x >= root - 0.5 * SCAN_STEP {
            break;
        }
        let fx = rf.f(x)?;
        if fx == 0.0 || (fx < 0.0) != (f0 < 0.0) {
            return Err(LabError::BracketFailure(format!(
                "{kind:?}: sign change near {x} below bracketed root {root}"
            )));
        }
        count += 1;
    }
    Ok(RootCertificate { root, bracket, scan_points: count })
}

/// First nonzero Neumann eigenvalue `μ_n` of the unit ball in `R^n` with its
/// checks: residual of the defining equation, strict bracket, and comparison
/// with the first Dirichlet eigenvalue `j_{n/2-1}^2`.
#[derive(Debug, Clone, Serialize)]
pub struct EigenResult {
    pub n: usize,
    pub mu_n: f64,
    pub root: f64,
    pub residual: f64,
    pub bracket_lo: f64,
    pub bracket_hi: f64,
    pub in_bracket: bool,
    pub dirichlet: f64,
    pub below_dirichlet: bool,
    pub scan_points: usize,
}

impl EigenResult {
    pub fn invariants_hold(&self) -> bool {
        self.in_bracket && self.below_dirichlet && self.residual < 1e-10
    }
}

pub fn neumann_eigenvalue(n: usize) -> Result<EigenResult> {
    ensure(n >= 2, || format!("dimension {n} must be >= 2"))?;
    let cert = lowest_root_certified(RootKind::Neumann(n), None)?;
    let rf = RootFn::new(RootKind::Neumann(n), cert.root)?;
    let residual = rf.f(cert.root)?.abs();
    let mu = cert.root * cert.root;
    let (lo, hi) = neumann_bracket(n);
    let dir_root = lowest_root(RootKind::J(n as f64 / 2.0 - 1.0), None)?;
    let dirichlet = dir_root * dir_root;
    Ok(EigenResult {
        n,
        mu_n: mu,
        root: cert.root,
        residual,
        bracket_lo: lo,
        bracket_hi: hi,
        in_bracket: lo < mu && mu < hi,
        dirichlet,
        below_dirichlet: mu < dirichlet,
        scan_points: cert.scan_points,
    })
}

/// Plug-in residual of `y'' + (n-1)/x y' + (1 - (n-1)/x^2) y = 0` for
/// `y = x^{1-n/2} J_{n/2}(x)`.
pub fn bessel_ode_residual(n: usize, x: f64) -> Result<f64> {
    ensure(x > 0.0, || format!("x = {x} must be positive"))?;
    let nu = n as f64 / 2.0;
    let mu = nu - 1.0;
    let e = eval_for(nu, x)?;
    let (j, jp, jpp) = (e.j(x)?, e.jp(x)?, e.jpp(x)?);
    let p = x.powf(-mu);
    let y = p * j;
    let yp = -mu * p / x * j + p * jp;
    let ypp = mu * (mu + 1.0) * p / (x * x) * j - 2.0 * mu * p / x * jp + p * jpp;
    let nm1 = n as f64 - 1.0;
    Ok((ypp + nm1 / x * yp + (1.0 - nm1 / (x * x)) * y).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gamma_half_integers_and_lanczos_agree() {
        assert_eq!(gamma(1.0), 1.0);
        assert_eq!(gamma(5.0), 24.0);
        assert!((gamma(0.5) - PI.sqrt()).abs() < 1e-15);
        assert!((gamma(2.5) - 0.75 * PI.sqrt()).abs() < 1e-15);
        for x in [0.7, 1.3, 2.5, 3.0, 6.5, 10.0] {
            let rel = (lanczos_gamma(x) - gamma(x)).abs() / gamma(x);
            assert!(rel < 1e-13, "x={x} rel={rel}");
        }
    }

    #[test]
    fn j0_at_zero_is_one() {
        let e = BesselEval::new(0.0, 20.0).unwrap();
        assert_eq!(e.j(0.0).unwrap(), 1.0);
        assert_eq!(e.jp(0.0).unwrap(), 0.0);
        assert!((e.jpp(0.0).unwrap() + 0.5).abs() < 1e-15);
        assert!(e.trunc_terms <= 60);
    }

    #[test]
    fn half_order_matches_closed_form() {
        let e = BesselEval::new(0.5, 20.0).unwrap();
        assert!(e.j(PI).unwrap().abs() < 1e-12);
        for i in 1..=100 {
            let x = 0.1 * i as f64;
            let closed = (2.0 / (PI * x)).sqrt() * x.sin();
            assert!((e.j(x).unwrap() - closed).abs() < 1e-10, "x={x}");
        }
        let x = PI / 2.0;
        let d = (2.0 / PI).sqrt() * (x.cos() / x.sqrt() - 0.5 * x.sin() * x.powf(-1.5));
        assert!((e.jp(x).unwrap() - d).abs() < 1e-10);
    }

    #[test]
    fn j1_at_one() {
        let e = BesselEval::new(1.0, 20.0).unwrap();
        assert!((e.j(1.0).unwrap() - 0.440_050_585_744_933_5).abs() < 1e-9);
    }

    #[test]
    fn j0_prime_at_first_zero() {
        let e = BesselEval::new(0.0, 20.0).unwrap();
        assert!((e.jp(2.404_825_557_695_773).unwrap() + 0.519_147_497_289_466).abs() < 1e-6);
    }

    #[test]
    fn out_of_range_is_contract_violation() {
        let e = BesselEval::new(1.0, 5.0).unwrap();
        assert!(matches!(e.j(5.5), Err(LabError::ContractViolation(_))));
        assert!(matches!(e.j(-0.1), Err(LabError::ContractViolation(_))));
    }

    #[test]
    fn functional_equations_small() {
        for (nu, x) in [(0.5, 1.0), (1.0, 2.5)] {
            let (a, b) = functional_equation_residual(nu, x).unwrap();
            assert!(a <= 1e-10 && b <= 1e-10, "{nu} {x}: {a} {b}");
        }
        let j1 = lowest_root(RootKind::J(1.0), None).unwrap();
        let e1 = BesselEval::new(1.0, 20.0).unwrap();
        let e3 = BesselEval::new(3.0, 20.0).unwrap();
        let reduced = e3.j(j1).unwrap() + 4.0 / j1 * e1.jp(j1).unwrap();
        assert!(reduced.abs() <= 1e-9);
    }

    #[test]
    fn roots_known_values() {
        assert!((lowest_root(RootKind::J(0.5), None).unwrap() - PI).abs() < 1e-10);
        assert!((lowest_root(RootKind::J(0.0), None).unwrap() - 2.404_825_557_695_773).abs() < 1e-9);
        let j1 = lowest_root(RootKind::J(1.0), None).unwrap();
        assert!(j1 > 3f64.sqrt() && j1 < 4.0);
        assert!((j1 - 3.831_705_970_207_512).abs() < 1e-9);
    }

    #[test]
    fn empty_bracket_fails() {
        assert!(matches!(
            lowest_root(RootKind::JPrime(0.0), None),
            Err(LabError::BracketFailure(_))
        ));
    }

    #[test]
    fn bad_hint_fails() {
        let b = RootBracket { lo: 0.1, hi: 0.2, f_lo: 1.0, f_hi: -1.0 };
        assert!(matches!(
            lowest_root(RootKind::J(0.0), Some(b)),
            Err(LabError::BracketFailure(_))
        ));
    }

    #[test]
    fn neumann_low_dimensions() {
        let r2 = neumann_eigenvalue(2).unwrap();
        assert!((r2.mu_n - 3.389_957_716_671_889).abs() < 1e-6, "{}", r2.mu_n);
        assert!(r2.invariants_hold());
        let r3 = neumann_eigenvalue(3).unwrap();
        assert!((r3.mu_n - 4.332_958_551_429_382).abs() < 1e-6, "{}", r3.mu_n);
        assert!(r3.mu_n < PI * PI);
        assert!(matches!(neumann_eigenvalue(1), Err(LabError::ContractViolation(_))));
    }

    #[test]
    fn ode_residual_small() {
        for n in [2, 3, 6, 12] {
            for i in 0..=20 {
                let x = 0.1 + i as f64 * 0.495;
                let r = bessel_ode_residual(n, x).unwrap();
                assert!(r < 1e-8, "n={n} x={x} r={r}");
            }
        }
    }
}
