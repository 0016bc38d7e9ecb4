//! Closed forms and high-precision reference values (mpmath, 30 digits).

use std::f64::consts::{E, PI};

use hslab::bmolab::{log_inverse_norm, log_inverse_reference, mean_oscillation};
use hslab::funcspace::{gaussian, Verdict};
use hslab::ineqlab::check_hardy;
use hslab::liouville::{capacity_ball, extremal_energy};
use hslab::quadcore::{BallSpec, QuadratureSpec};
use hslab::specfun::{functional_equation_residual, lowest_root, neumann_eigenvalue, RootKind};

const MU_2: f64 = 3.389_957_716_671_889;
const MU_3: f64 = 4.332_958_551_429_382;

/// `(ν, j_ν, j'_ν)`.
const BESSEL_ZEROS: [(f64, f64, f64); 4] = [
    (0.5, 3.141_592_653_589_793, 1.165_561_185_207_211_3),
    (3.0, 6.380_161_895_923_983, 4.201_188_941_210_528),
    (7.5, 11.657_032_192_516_372, 9.113_402_008_928_716),
    (10.0, 14.475_500_686_554_541, 11.770_876_674_955_582),
];

#[test]
fn neumann_low_dimensions_match_reference() {
    for (n, mu) in [(2, MU_2), (3, MU_3)] {
        let r = neumann_eigenvalue(n).unwrap();
        assert!((r.mu_n - mu).abs() < 1e-9, "n={n}: {} vs {mu}", r.mu_n);
    }
}

#[test]
fn neumann_eigenvalues_in_bracket() {
    for n in 2..=12 {
        let r = neumann_eigenvalue(n).unwrap();
        assert!(r.residual < 1e-10, "n={n}: residual {}", r.residual);
        assert!(r.in_bracket && r.bracket_lo < r.mu_n && r.mu_n < r.bracket_hi, "{r:?}");
        assert!(r.below_dirichlet);
    }
}

#[test]
fn bessel_zeros_match_reference() {
    for (nu, j, jp) in BESSEL_ZEROS {
        let a = lowest_root(RootKind::J(nu), None).unwrap();
        let b = lowest_root(RootKind::JPrime(nu), None).unwrap();
        assert!((a - j).abs() < 1e-10, "j_{nu}: {a} vs {j}");
        assert!((b - jp).abs() < 1e-10, "j'_{nu}: {b} vs {jp}");
    }
}

#[test]
fn bessel_interlacing_and_functional_equations() {
    for i in 1..=20 {
        let nu = 0.5 * i as f64;
        let jp = lowest_root(RootKind::JPrime(nu), None).unwrap();
        let j0 = lowest_root(RootKind::J(nu), None).unwrap();
        let j1 = lowest_root(RootKind::J(nu + 1.0), None).unwrap();
        let j2 = lowest_root(RootKind::J(nu + 2.0), None).unwrap();
        assert!(jp < j0 && j0 < j1 && j1 < j2, "nu={nu}");
        for (kind, root) in [(RootKind::J(nu), j0), (RootKind::JPrime(nu), jp)] {
            let (lo, hi) = kind.reference_bracket();
            assert!(lo < root && root < hi, "{kind:?}: {root} outside ({lo}, {hi})");
        }
        for k in 0..50 {
            let x = 0.2 * (k + 1) as f64;
            let (a, b) = functional_equation_residual(nu, x).unwrap();
            assert!(a <= 1e-9 && b <= 1e-9, "nu={nu} x={x}: {a} {b}");
        }
    }
}

#[test]
fn log_inverse_mean_and_oscillation() {
    for n in 3..=8 {
        let r = mean_oscillation(&log_inverse_norm(n), &BallSpec::origin(n, 1.0), &QuadratureSpec::default()).unwrap();
        let (m, o) = log_inverse_reference(n);
        assert!((m - 1.0 / n as f64).abs() < 1e-15 && (o - 2.0 / (E * n as f64)).abs() < 1e-15);
        assert!((r.mean.value - m).abs() < 1e-8);
        assert!((r.oscillation.value - o).abs() < 1e-6);
    }
}

#[test]
fn hardy_gaussian() {
    let g = gaussian(3, vec![0.0; 3], 1.0).unwrap();
    let r = check_hardy(&g, 3, &QuadratureSpec::adaptive(1e-11, 1e-14)).unwrap();
    assert!((r.lhs.value - PI.powf(1.5) / 2.0).abs() < 1e-8);
    assert!((r.rhs.value - 1.5 * PI.powf(1.5)).abs() < 1e-8);
    assert_eq!(r.verdict, Verdict::Holds);
}

#[test]
fn capacity_closed_form() {
    assert!((capacity_ball(3, 1.0).unwrap() - 4.0 * PI).abs() < 1e-12);
    // σ_4 = 2π², so Cap(B_1) = 4π² in R⁴.
    assert!((capacity_ball(4, 1.0).unwrap() - 4.0 * PI * PI).abs() < 1e-12);
    let e = extremal_energy(3, 1.0, &QuadratureSpec::default()).unwrap();
    assert!((e.value - 4.0 * PI).abs() < 1e-6);
}
