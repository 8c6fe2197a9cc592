use mhdlab::verify::{parse_claim, reevaluate, run_all, run_claim, Budget, Verdict};
use mhdlab::Error;

#[test]
fn scans_are_bitwise_reproducible() {
    let b = Budget::uniform(4000);
    for id in ["elem1", "sin-ratio", "kernel:2", "nash"] {
        let c = parse_claim(id).unwrap();
        let small = Budget { nash: 8, ..b };
        let r1 = run_claim(&c, &small, 11).unwrap();
        let r2 = run_claim(&c, &small, 11).unwrap();
        assert_eq!(serde_json::to_string(&r1).unwrap(), serde_json::to_string(&r2).unwrap(), "{id}");
    }
}

#[test]
fn worst_points_reevaluate() {
    let b = Budget::uniform(4000);
    for id in ["elem1", "sin-ratio", "kernel:1", "kernel:4", "kernel:7"] {
        let r = run_claim(&parse_claim(id).unwrap(), &b, 3).unwrap();
        let again = reevaluate(&r).expect("re-evaluable claim");
        assert!((again - r.max_ratio).abs() <= 1e-10 * r.max_ratio.max(1e-300), "{id}: {again} vs {}", r.max_ratio);
    }
}

#[test]
fn thread_count_does_not_change_results() {
    let b = Budget::uniform(4000);
    let c = parse_claim("elem1").unwrap();
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let r1 = one.install(|| run_claim(&c, &b, 5).unwrap());
    let r2 = run_claim(&c, &b, 5).unwrap();
    assert_eq!(r1, r2);
}

#[test]
fn empty_budget_rejected() {
    let b = Budget { elem1: 0, ..Budget::default() };
    assert!(matches!(run_all(&b, 0), Err(Error::InvalidBudget(_))));
}

#[test]
fn oracle_suite_passes() {
    let r = run_claim(&parse_claim("oracle").unwrap(), &Budget::default(), 1).unwrap();
    assert_eq!(r.verdict, Verdict::Pass);
    assert!(r.max_ratio <= 1e-8);
}
