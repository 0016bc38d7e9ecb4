use std::time::Instant;

use hslab::bmolab::{doubling_sweep, reverse_holder_sweep};
use hslab::funcspace::{model_subharmonic, ModelParams, Verdict};
use hslab::quadcore::{BallSpec, QuadratureSpec};

const MODELS: [&str; 3] = ["newtonian", "smoothed-newtonian", "inverse-sqrt"];

#[test]
fn doubling_has_no_violations() {
    let t = Instant::now();
    let spec = QuadratureSpec::adaptive(1e-8, 1e-12).with_angular_order(8);
    let mut inconclusive = 0;
    for n in 3..=5 {
        for name in MODELS {
            let psi = model_subharmonic(name, n, ModelParams::default()).unwrap();
            for gamma in [0.25, 0.5, 1.0] {
                let reps = doubling_sweep(&psi, gamma, &BallSpec::origin(n, 1.0), 100, 11, &spec).unwrap();
                assert_eq!(reps.len(), 100);
                for r in &reps {
                    assert_ne!(r.verdict, Verdict::Violated, "{name} n={n} gamma={gamma}: {r:?}");
                }
                inconclusive += reps.iter().filter(|r| r.verdict == Verdict::Inconclusive).count();
            }
        }
    }
    eprintln!("doubling: {inconclusive} inconclusive, {:?}", t.elapsed());
}

#[test]
fn reverse_holder_single_band() {
    let spec = QuadratureSpec::default();
    for n in 3..=5 {
        for name in MODELS {
            let psi = model_subharmonic(name, n, ModelParams::default()).unwrap();
            let s = reverse_holder_sweep(&psi, &[0.5, 0.9, 0.99], &BallSpec::origin(n, 1.0), &spec).unwrap();
            assert!(s.within_band, "{name} n={n}: {:?}", s.reports.iter().map(|r| r.normalized.value).collect::<Vec<_>>());
        }
    }
}
