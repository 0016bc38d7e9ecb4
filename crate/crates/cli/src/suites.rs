//! The checks behind each subcommand.

use std::f64::consts::{E, PI};
use std::sync::Arc;

use anyhow::{bail, Context};
use hslab::bmolab::{
    bmo_lower_bound_with, doubling_sweep, log_inverse_norm, log_inverse_reference, mean_oscillation, reverse_holder_sweep,
    riesz_decompose_disc, BmoOptions, RieszGrid,
};
use hslab::funcspace::{gaussian, log_distance, model_subharmonic, ModelParams, Verdict};
use hslab::hartogs::{
    decay_check, extend, log_psh_probe, newtonian_solve, standard_problem, unit_mass_bump, Budget, ExtensionData, ExtensionOptions,
    CASES,
};
use hslab::ineqlab::{carleman_corpus, carleman_ratio, check_hardy, run_corpus, seeded_corpus, CarlemanSpec, CarlemanWhich};
use hslab::liouville::{
    capacity_ball, criterion_divergence, cutoff_build, cutoff_corpus, extremal_energy, family, mass_function, nadirashvili_reduction,
    run_cutoff_corpus, tail_start, v_lambda, Classification, ModelManifold, Profile, FAMILIES,
};
use hslab::quadcore::{BallSpec, MeasuredValue, QuadratureSpec};
use hslab::specfun::{functional_equation_residual, lowest_root, neumann_eigenvalue, RootKind};
use num_complex::Complex64;
use serde_json::json;

use crate::config::{Budgets, RunConfig};
use crate::report::{Collector, Record};

/// High-precision references for `μ₂` and `μ₃` (30-digit bisection).
pub const MU_REFERENCE: [(usize, f64); 2] = [(2, 3.389_957_716_671_889), (3, 4.332_958_551_429_382)];

/// Models of the negative subharmonic corpus available in dimensions 3 to 5.
pub const MODELS: [&str; 3] = ["newtonian", "smoothed-newtonian", "inverse-sqrt"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum BmoPart {
    LowerBound,
    Doubling,
    ReverseHolder,
    Riesz,
}

/// Narrowing of a suite to part of its checks.
#[derive(Debug, Clone, Default)]
pub struct Selection {
    pub bmo_part: Option<BmoPart>,
    /// Keep only inequality reports with this name.
    pub ineq_name: Option<String>,
    pub hartogs_case: Option<String>,
    pub liouville_family: Option<String>,
}

/// Derives an independent seed for one step.
fn sub_seed(seed: u64, tag: u64) -> u64 {
    seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

pub fn run_suite(cfg: &RunConfig, sel: &Selection, c: &mut Collector) -> anyhow::Result<()> {
    match cfg.suite.as_str() {
        "eigen" => eigen(c),
        "bmo" => bmo(cfg, sel, c),
        "ineq" => ineq(cfg, sel, c),
        "hartogs" => hartogs(cfg, sel, c)?,
        "liouville" => liouville(cfg, sel, c)?,
        "all" => {
            eigen(c);
            bmo(cfg, sel, c);
            ineq(cfg, sel, c);
            hartogs(cfg, sel, c)?;
            liouville(cfg, sel, c)?;
        }
        other => bail!("unknown suite {other:?}"),
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// eigen

const NEUMANN: &str = "(n+2)(n+4)/(n+6) < mu_n < n+2 with |x J'_{n/2}(x) - (n/2-1) J_{n/2}(x)| < 1e-10 at x = sqrt(mu_n)";
const BESSEL: &str = "sqrt(nu(nu+2)) < j'_nu < sqrt(2nu(nu+1)), sqrt(nu(nu+2)) < j_nu < sqrt(2(nu+1)(nu+3)), \
                      j'_nu < j_nu < j_{nu+1} < j_{nu+2}, recurrence residuals <= 1e-9";

fn eigen(c: &mut Collector) {
    const S: &str = "eigen";
    c.step(S, "neumann", NEUMANN, || {
        (2..=12)
            .map(|n| {
                let r = neumann_eigenvalue(n)?;
                let err = 2.0 * r.root * 1e-12;
                Ok(Record::pass(S, format!("neumann/n={n}"), NEUMANN, r.invariants_hold()).value(MeasuredValue::new(r.mu_n, err)).details(&r))
            })
            .collect()
    });
    let anchor = "mu_n matches a 30-digit reference within 1e-6";
    c.step(S, "neumann-reference", anchor, || {
        MU_REFERENCE
            .iter()
            .map(|&(n, mu)| {
                let r = neumann_eigenvalue(n)?;
                let ok = (r.mu_n - mu).abs() < 1e-6;
                Ok(Record::pass(S, format!("neumann-reference/n={n}"), anchor, ok)
                    .sides(MeasuredValue::exact(r.mu_n), MeasuredValue::exact(mu))
                    .details(&json!({ "difference": r.mu_n - mu })))
            })
            .collect()
    });
    c.step(S, "bessel", BESSEL, || {
        let half = lowest_root(RootKind::J(0.5), None)?;
        let mut out = vec![Record::pass(S, "bessel/j-half", "j_{1/2} = pi within 1e-10", (half - PI).abs() < 1e-10)
            .sides(MeasuredValue::exact(half), MeasuredValue::exact(PI))];
        for i in 1..=20 {
            let nu = 0.5 * i as f64;
            out.push(bessel_record(nu)?);
        }
        Ok(out)
    });
}

fn bessel_record(nu: f64) -> anyhow::Result<Record> {
    let jp = lowest_root(RootKind::JPrime(nu), None)?;
    let j0 = lowest_root(RootKind::J(nu), None)?;
    let j1 = lowest_root(RootKind::J(nu + 1.0), None)?;
    let j2 = lowest_root(RootKind::J(nu + 2.0), None)?;
    let inside = |k: RootKind, x: f64| {
        let (lo, hi) = k.reference_bracket();
        lo < x && x < hi
    };
    let brackets = inside(RootKind::J(nu), j0) && inside(RootKind::JPrime(nu), jp);
    let chain = jp < j0 && j0 < j1 && j1 < j2;
    let (mut ra, mut rb) = (0.0f64, 0.0f64);
    for k in 1..=50 {
        let (a, b) = functional_equation_residual(nu, 0.2 * k as f64)?;
        ra = ra.max(a);
        rb = rb.max(b);
    }
    let ok = brackets && chain && ra <= 1e-9 && rb <= 1e-9;
    Ok(Record::pass("eigen", format!("bessel/nu={nu}"), BESSEL, ok).details(&json!({
        "j_prime": jp, "j": j0, "j_next": j1, "j_next2": j2,
        "brackets": brackets, "interlacing": chain,
        "max_residual_a": ra, "max_residual_b": rb,
    })))
}

// ---------------------------------------------------------------------------
// bmo

fn bmo(cfg: &RunConfig, sel: &Selection, c: &mut Collector) {
    let want = |p: BmoPart| sel.bmo_part.is_none_or(|q| q == p);
    let b = &cfg.budgets;
    if want(BmoPart::LowerBound) {
        bmo_lower(b, cfg.seed, c);
    }
    if want(BmoPart::Doubling) {
        bmo_doubling(b, cfg.seed, c);
    }
    if want(BmoPart::ReverseHolder) {
        bmo_reverse_holder(c);
    }
    if want(BmoPart::Riesz) {
        bmo_riesz(c);
    }
}

fn bmo_lower(b: &Budgets, seed: u64, c: &mut Collector) {
    const S: &str = "bmo";
    let closed = "log 1/|x| on B(0,1): mean 1/n within 1e-8, mean oscillation 2/(en) within 1e-6";
    c.step(S, "log-inverse", closed, || {
        (3..=8)
            .map(|n| {
                let r = mean_oscillation(&log_inverse_norm(n), &BallSpec::origin(n, 1.0), &QuadratureSpec::default())?;
                let (m, o) = log_inverse_reference(n);
                let ok = (r.mean.value - m).abs() < 1e-8 && (r.oscillation.value - o).abs() < 1e-6;
                Ok(Record::pass(S, format!("log-inverse/n={n}"), closed, ok)
                    .sides(r.oscillation, MeasuredValue::exact(o))
                    .details(&json!({ "mean": r.mean, "mean_reference": m })))
            })
            .collect()
    });
    let anchor = "sampled BMO lower bound of log|x| lies in [2/(en) - 0.01, 2/sqrt(n-2) + 0.01]";
    for n in 3..=8 {
        c.step(S, &format!("lower-bound/n={n}"), anchor, || {
            let opts = BmoOptions { samples_per_ball: b.bmo_samples_per_ball, ..BmoOptions::default() };
            let f = log_distance(n, vec![0.0; n]);
            let est = bmo_lower_bound_with(&f, &BallSpec::origin(n, 1.0), b.bmo_balls, sub_seed(seed, n as u64), &opts)?;
            let nf = n as f64;
            let (lo, hi) = (2.0 / (E * nf) - 0.01, 2.0 / (nf - 2.0).sqrt() + 0.01);
            let ok = lo <= est.lower_bound && est.lower_bound <= hi;
            Ok(vec![Record::pass(S, format!("lower-bound/n={n}"), anchor, ok)
                .value(MeasuredValue::exact(est.lower_bound))
                .details(&json!({ "interval": [lo, hi], "estimate": est }))])
        });
    }
}

fn corpus_spec(b: &Budgets) -> QuadratureSpec {
    QuadratureSpec::adaptive(b.rel_tol, 1e-12).with_angular_order(8)
}

fn bmo_doubling(b: &Budgets, seed: u64, c: &mut Collector) {
    const S: &str = "bmo";
    let anchor = "∫_{2B} |psi|^gamma ≤ 2^n ∫_B |psi|^gamma for negative subharmonic psi";
    for n in 3..=5 {
        for (mi, model) in MODELS.iter().enumerate() {
            c.step(S, &format!("doubling/n={n}/{model}"), anchor, || {
                let psi = model_subharmonic(model, n, ModelParams::default())?;
                [0.25, 0.5, 1.0]
                    .iter()
                    .map(|&gamma| {
                        let s = sub_seed(seed, 100 + 10 * n as u64 + mi as u64);
                        let reps = doubling_sweep(&psi, gamma, &BallSpec::origin(n, 1.0), b.doubling_balls, s, &corpus_spec(b))?;
                        let count = |v: Verdict| reps.iter().filter(|r| r.verdict == v).count();
                        let (h, v, i) = (count(Verdict::Holds), count(Verdict::Violated), count(Verdict::Inconclusive));
                        let verdict = if v > 0 {
                            Verdict::Violated
                        } else if i > 0 {
                            Verdict::Inconclusive
                        } else {
                            Verdict::Holds
                        };
                        let worst = reps.iter().map(|r| r.lhs.value / r.rhs.value).filter(|x| x.is_finite()).fold(0.0, f64::max);
                        Ok(Record::new(S, format!("doubling/n={n}/{model}/gamma={gamma}"), anchor, verdict)
                            .details(&json!({ "balls": reps.len(), "holds": h, "violated": v, "inconclusive": i, "max_lhs_over_rhs": worst })))
                    })
                    .collect()
            });
        }
    }
}

fn bmo_reverse_holder(c: &mut Collector) {
    const S: &str = "bmo";
    let anchor = "(1-gamma)^2 rho stays within one factor-2 band for gamma in {0.5, 0.9, 0.99}";
    c.step(S, "reverse-holder", anchor, || {
        let mut out = Vec::new();
        for n in 3..=5 {
            for model in MODELS {
                let psi = model_subharmonic(model, n, ModelParams::default())?;
                let s = reverse_holder_sweep(&psi, &[0.5, 0.9, 0.99], &BallSpec::origin(n, 1.0), &QuadratureSpec::default())?;
                let normalized: Vec<MeasuredValue> = s.reports.iter().map(|r| r.normalized).collect();
                out.push(
                    Record::pass(S, format!("reverse-holder/n={n}/{model}"), anchor, s.within_band)
                        .value(MeasuredValue::exact(s.fitted_constant))
                        .details(&json!({ "normalized": normalized })),
                );
            }
        }
        Ok(out)
    });
}

fn bmo_riesz(c: &mut Collector) {
    const S: &str = "bmo";
    let anchor = "psi = u + v + h on the disc of radius 2R with the decomposition invariants";
    c.step(S, "riesz", anchor, || {
        let psi = model_subharmonic("log-modulus", 2, ModelParams::default())?;
        let p = riesz_decompose_disc(&psi, 0.25, &RieszGrid::default())?;
        let mut d = serde_json::to_value(&p)?;
        if let Some(o) = d.as_object_mut() {
            o.remove("samples");
        }
        Ok(vec![Record::pass(S, "riesz/log-modulus", anchor, p.invariants_hold)
            .value(MeasuredValue::exact(p.max_residual))
            .details(&d)])
    });
}

// ---------------------------------------------------------------------------
// ineq

fn ineq_anchor(name: &str) -> &'static str {
    match name {
        "hardy" => "((n-2)/2)^2 ∫ phi^2/|x|^2 ≤ ∫ |grad phi|^2",
        "prop14" => "eta-weighted Poincaré inequality for phi against a subharmonic weight psi",
        "poincare-subharmonic" => "eta-weighted Poincaré inequality without the Laplacian term",
        "laplace-3pi" => "∫ phi^2 Δpsi ≤ 3 pi ∫ (1+psi^2) |grad phi|^2 for negative subharmonic psi",
        "caccioppoli" => "∫ phi^2 |grad psi|^2 ≤ 4 ∫ psi^2 |grad phi|^2 - 2 ∫ phi^2 psi Δpsi for positive psi",
        _ => "inequality lhs ≤ rhs",
    }
}

fn ineq(cfg: &RunConfig, sel: &Selection, c: &mut Collector) {
    const S: &str = "ineq";
    let b = &cfg.budgets;
    let keep = |name: &str| sel.ineq_name.as_deref().is_none_or(|n| n == name);
    if keep("hardy") {
        let anchor = "Gaussian in R^3: lhs = pi^{3/2}/2, rhs = 3 pi^{3/2}/2 within 1e-8";
        c.step(S, "hardy-gaussian", anchor, || {
            let g = gaussian(3, vec![0.0; 3], 1.0)?;
            let r = check_hardy(&g, 3, &QuadratureSpec::adaptive(1e-11, 1e-14))?;
            let ok = (r.lhs.value - PI.powf(1.5) / 2.0).abs() < 1e-8 && (r.rhs.value - 1.5 * PI.powf(1.5)).abs() < 1e-8;
            Ok(vec![Record::pass(S, "hardy-gaussian", anchor, ok && r.verdict == Verdict::Holds).sides(r.lhs, r.rhs)])
        });
    }
    let corpus_anchor = "seeded corpus: every inequality holds";
    c.step(S, "corpus", corpus_anchor, || {
        let entries = seeded_corpus(b.ineq_corpus, sub_seed(cfg.seed, 200));
        let s = run_corpus(&entries, &corpus_spec(b))?;
        let mut out: Vec<Record> = s
            .reports
            .iter()
            .enumerate()
            .filter(|(_, r)| keep(&r.name))
            .map(|(k, r)| Record::from_inequality(S, format!("corpus/{k:04}/{}", r.name), ineq_anchor(&r.name), r))
            .collect();
        if sel.ineq_name.is_none() {
            let anchor = "a holding arctan-weighted Poincaré verdict implies the 3 pi verdict";
            out.push(
                Record::pass(S, "corpus/implication", anchor, s.implication_failures == 0)
                    .details(&json!({ "entries": s.entries, "failures": s.implication_failures })),
            );
        }
        Ok(out)
    });
    if keep("carleman") {
        let anchor = "Carleman gradient-chain ratios finite and slack 4(tau-1)^2 A^2 + 2AD - G^2 ≥ 0";
        c.step(S, "carleman", anchor, || {
            let fns = carleman_corpus(3, b.carleman_functions, sub_seed(cfg.seed, 300))?;
            (3..=8)
                .map(|tau| {
                    let spec_c = CarlemanSpec::new(tau as f64, 3)?;
                    let reps = fns
                        .iter()
                        .map(|phi| carleman_ratio(phi, &spec_c, CarlemanWhich::GradientChain, &corpus_spec(b)))
                        .collect::<hslab::Result<Vec<_>>>()?;
                    let finite = reps.iter().all(|r| r.ratio.value.is_finite());
                    let min_slack = reps.iter().filter_map(|r| r.chain_slack).fold(f64::INFINITY, f64::min);
                    let max_ratio = reps.iter().map(|r| r.ratio.value).fold(0.0, f64::max);
                    Ok(Record::pass(S, format!("carleman/tau={tau}"), anchor, finite && min_slack >= 0.0)
                        .value(MeasuredValue::exact(max_ratio))
                        .details(&json!({ "functions": reps.len(), "min_chain_slack": min_slack })))
                })
                .collect()
        });
    }
}

// ---------------------------------------------------------------------------
// hartogs

fn hartogs_budget(b: &Budgets) -> Budget {
    Budget::default().scaled(b.hartogs_scale)
}

fn hartogs(cfg: &RunConfig, sel: &Selection, c: &mut Collector) -> anyhow::Result<()> {
    const S: &str = "hartogs";
    let cases: Vec<&str> = match &sel.hartogs_case {
        Some(name) => {
            if !CASES.contains(&name.as_str()) {
                bail!("unknown case {name:?}; expected one of {CASES:?}");
            }
            vec![CASES.iter().copied().find(|c| c == name).expect("checked")]
        }
        None => CASES.to_vec(),
    };
    let budget = hartogs_budget(&cfg.budgets);
    let anchor = "sup |F - truth| ≤ 1e-2 on Omega and smaller when the budget quadruples";
    for case in cases {
        c.step(S, case, anchor, || {
            let p = standard_problem(case)?;
            let opts = ExtensionOptions { budget, seed: sub_seed(cfg.seed, 400), ..ExtensionOptions::default() };
            let base = extend(&p, &opts)?.report;
            let fine = extend(&p, &ExtensionOptions { budget: budget.quadrupled(), error_only: true, ..opts })?.report;
            let (e0, e1) = (base.sup_error.unwrap_or(f64::NAN), fine.sup_error.unwrap_or(f64::NAN));
            Ok(vec![
                Record::pass(S, format!("{case}/desk"), "sup |F - truth| ≤ 1e-2 at the given budget", base.within_tolerance)
                    .sides(MeasuredValue::exact(e0), MeasuredValue::exact(base.tolerance))
                    .details(&base),
                Record::pass(S, format!("{case}/refinement"), "sup error decreases when the budget quadruples", e1 < e0)
                    .sides(MeasuredValue::exact(e1), MeasuredValue::exact(e0))
                    .details(&fine),
            ])
        });
    }
    if sel.hartogs_case.is_none() {
        let anchor = "unit-mass bump in R^4: far-field slope -2 ± 5% and |u| ≤ C (|z| - R)^{1-n}";
        c.step(S, "newtonian", anchor, || {
            let g = unit_mass_bump(4, vec![0.0; 4], 1.0)?;
            let sol = newtonian_solve(&g, budget)?;
            let d = decay_check(&sol, 1.0, 2)?;
            let slope = sol.decay.as_ref().map(|f| f.slope).context("bump potential vanished")?;
            Ok(vec![
                Record::pass(S, "newtonian/slope", "far-field log-log slope = -2 ± 5%", (slope + 2.0).abs() <= 0.1)
                    .value(MeasuredValue::exact(slope))
                    .details(&sol.decay),
                Record::new(S, "newtonian/decay-bound", "|u| ≤ C (|z| - R)^{1-n} at every sampled radius", d.verdict).details(&d),
            ])
        });
        let anchor = "log of the Poincaré distance is plurisubharmonic on the bidisc";
        c.step(S, "log-psh", anchor, || {
            let p = log_psh_probe(8)?;
            Ok(vec![Record::new(S, "log-psh", anchor, p.verdict).value(MeasuredValue::exact(p.min_eigenvalue)).details(&p)])
        });
    }
    Ok(())
}

/// `(|z|, max |F - truth|, max |u|)` on `points` radii of `Ω`, with
/// `u = χ f - F` and maxima over 16 fixed directions.
pub fn hartogs_profile(case: &str, budgets: &Budgets, seed: u64, points: usize) -> anyhow::Result<Vec<[f64; 3]>> {
    let p = standard_problem(case)?;
    let opts = ExtensionOptions { budget: hartogs_budget(budgets), seed: sub_seed(seed, 400), error_only: true, ..ExtensionOptions::default() };
    let ext = extend(&p, &opts)?;
    let cut = p.cutoff();
    let dirs: Vec<[f64; 4]> = (0..16)
        .map(|k| {
            let t = k as f64 * 0.618_033_988_749_895 * 2.0 * PI;
            let s = (k as f64 + 0.5) / 16.0;
            let (a, b) = (s.sqrt(), (1.0 - s).sqrt());
            [a * t.cos(), a * t.sin(), b * (1.7 * t).cos(), b * (1.7 * t).sin()]
        })
        .collect();
    let top = p.omega.radius * 0.999;
    Ok((0..points)
        .map(|i| {
            let r = top * i as f64 / (points.max(2) - 1) as f64;
            let (mut err, mut u) = (0.0f64, 0.0f64);
            for d in &dirs {
                let x = [r * d[0], r * d[1], r * d[2], r * d[3]];
                let big_f = ext.field.eval(&x);
                let f = match &p.f {
                    ExtensionData::Holomorphic(g) => g.eval(&x),
                    ExtensionData::Pluriharmonic(g) => Complex64::new(g.eval(&x), 0.0),
                };
                u = u.max((f * cut.eval(&x) - big_f).norm());
                if let Some(t) = &p.truth {
                    let tv = t.eval(&x);
                    let e = match &p.f {
                        ExtensionData::Holomorphic(_) => (big_f - tv).norm(),
                        ExtensionData::Pluriharmonic(_) => (big_f.re - tv.re).abs(),
                    };
                    err = err.max(e);
                }
            }
            [r, err, u]
        })
        .collect())
}

// ---------------------------------------------------------------------------
// liouville

/// Expected outcome of each named family.
pub fn expected_classification(name: &str) -> Classification {
    if name == "euclidean-control" {
        Classification::Convergent
    } else {
        Classification::Divergent
    }
}

fn liouville(cfg: &RunConfig, sel: &Selection, c: &mut Collector) -> anyhow::Result<()> {
    const S: &str = "liouville";
    let b = &cfg.budgets;
    let families: Vec<&str> = match &sel.liouville_family {
        Some(f) => {
            if !FAMILIES.contains(&f.as_str()) {
                bail!("unknown family {f:?}; expected one of {FAMILIES:?}");
            }
            vec![FAMILIES.iter().copied().find(|x| x == f).expect("checked")]
        }
        None => FAMILIES.to_vec(),
    };
    let only_classify = sel.liouville_family.is_some();
    if !only_classify {
        let anchor = "∫ |grad min(1, (r/|x|)^{n-2})|^2 = (n-2) sigma_n r^{n-2} within 1e-6 relative";
        c.step(S, "capacity", anchor, || {
            let mut out = Vec::new();
            for n in 3..=8 {
                for r in [0.5, 1.0, 2.0] {
                    let cap = capacity_ball(n, r)?;
                    let e = extremal_energy(n, r, &QuadratureSpec::default())?;
                    let ok = (e.value - cap).abs() <= 1e-6 * cap;
                    out.push(Record::pass(S, format!("capacity/n={n}/r={r}"), anchor, ok).sides(e, MeasuredValue::exact(cap)));
                }
            }
            Ok(out)
        });
        let anchor = "∫ |f| |grad chi|^2 ≤ 2c for the cutoff built from g(t) = ∫_{B_t} |f|";
        c.step(S, "cutoff-corpus", anchor, || {
            let cases = cutoff_corpus(sub_seed(cfg.seed, 500), b.cutoff_configs)?;
            let reps = run_cutoff_corpus(&cases, &QuadratureSpec::adaptive(1e-9, 1e-13))?;
            Ok(reps
                .iter()
                .zip(&cases)
                .enumerate()
                .map(|(i, (r, cs))| {
                    Record::from_inequality(S, format!("cutoff/{i:03}"), anchor, r).details(&json!({
                        "manifold": cs.manifold.label, "field": cs.field.label(), "r": cs.r, "R": cs.big_r, "epsilon": cs.epsilon,
                    }))
                })
                .collect())
        });
        let anchor = "v_lambda(2) = 4 pi (2 - atan 2) for lambda(t) = t^2, psi = -(1+r^2)^{-1/2} on R^3";
        c.step(S, "v-lambda", anchor, || {
            let m = ModelManifold::euclidean(3)?;
            let v = v_lambda(&m, |t| t * t, |r: f64| -(1.0 + r * r).powf(-0.5), 2.0, &QuadratureSpec::default())?;
            let exact = 4.0 * PI * (2.0 - 2f64.atan());
            Ok(vec![Record::pass(S, "v-lambda/oracle", anchor, (v.value - exact).abs() < 1e-9).sides(v, MeasuredValue::exact(exact))])
        });
    }
    let anchor = "∫ ds/lambda(s) < ∞ verified, then ∫ r dr/(lambda(kappa(r)) V_r) classified as expected at T_max and 10 T_max";
    for name in families {
        c.step(S, &format!("classify/{name}"), anchor, || {
            let (m, g) = family(name)?;
            let a = criterion_divergence(&m, &g, tail_start(), b.t_max)?;
            let z = criterion_divergence(&m, &g, tail_start(), 10.0 * b.t_max)?;
            let want = expected_classification(name);
            let ok = g.lambda_tail_integrable && a.classification == want && z.classification == want;
            Ok(vec![Record::pass(S, format!("classify/{name}"), anchor, ok).value(MeasuredValue::exact(a.tail_exponent_fit)).details(&json!({
                "expected": want,
                "lambda_tail": g.lambda_tail,
                "verdict": a,
                "extended": z,
            }))])
        });
    }
    if !only_classify {
        let anchor = "v_lambda(r)/(1+r^2) ≤ ∫ lambda(|psi|)/(1+rho^2) where the weighted integral converges";
        c.step(S, "weighted-reduction", anchor, || {
            let grid: Vec<f64> = (1..=20).map(|i| 0.5 * i as f64).collect();
            let spec = QuadratureSpec::adaptive(1e-11, 1e-14);
            let cases: [(&str, ModelManifold, fn(f64) -> f64); 3] = [
                ("finite-volume/constant", ModelManifold::finite_volume(3, 1.0)?, |_| -1.0),
                ("euclidean-3/decaying", ModelManifold::euclidean(3)?, |r| -(1.0 + r * r).powf(-0.5)),
                ("quadratic/constant", ModelManifold::quadratic(1.0)?, |_| -1.0),
            ];
            cases
                .iter()
                .map(|(label, m, psi)| {
                    let rep = nadirashvili_reduction(m, |t| t, psi, &grid, &spec)?;
                    let verdict = if rep.applicable { rep.chain } else { Verdict::Inconclusive };
                    Ok(Record::new(S, format!("weighted-reduction/{label}"), anchor, verdict).details(&json!({
                        "applicable": rep.applicable,
                        "weighted_integral": rep.weighted_integral,
                        "weighted_tail": rep.weighted_tail.classification,
                        "max_ratio": rep.max_ratio,
                        "criterion": rep.criterion.classification,
                    })))
                })
                .collect()
        });
    }
    Ok(())
}

/// `(t, χ(t), χ'(t))` for `f ≡ 1` on `R^n`.
pub fn cutoff_profile(n: usize, r: f64, big_r: f64, epsilon: f64, points: usize) -> anyhow::Result<Vec<(f64, f64, f64)>> {
    let m = ModelManifold::euclidean(n)?;
    let one: Profile = Arc::new(|_| 1.0);
    let cut = cutoff_build(mass_function(&m, one), r, big_r, epsilon)?;
    Ok(cut.sample(points))
}
