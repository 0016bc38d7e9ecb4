use std::time::Instant;

use hslab::funcspace::Verdict;
use hslab::ineqlab::{run_corpus, seeded_corpus};
use hslab::quadcore::QuadratureSpec;

#[test]
fn corpus_has_no_violations() {
    let t = Instant::now();
    let entries = seeded_corpus(100, 7);
    let spec = QuadratureSpec::adaptive(1e-8, 1e-12).with_angular_order(8);
    let s = run_corpus(&entries, &spec).unwrap();
    eprintln!("{} reports, {} inconclusive, {:?}", s.reports.len(), s.inconclusive, t.elapsed());
    for r in &s.reports {
        if r.verdict != Verdict::Holds {
            eprintln!("{r:?}");
        }
    }
    assert_eq!(s.violated, 0);
    assert_eq!(s.implication_failures, 0);
}
