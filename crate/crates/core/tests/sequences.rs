use chainscope::fixtures::{generate, FixtureName, FixtureParams, FixtureSpec};
use chainscope::sequences::{
    bourbaki_qc_test, cauchy_test, extract_bqc_subsequence, pseudo_cauchy_test, quasi_cauchy_test,
    splice_to_quasi_cauchy, ComponentRule, Status, ToleranceSchedule,
};
use chainscope::{Error, MetricSpace};

fn schedule(pairs: &[(f64, usize)]) -> ToleranceSchedule {
    ToleranceSchedule::new(pairs.to_vec()).unwrap()
}

fn naturals(n: usize) -> MetricSpace {
    MetricSpace::line(&(1..=n).map(|k| k as f64).collect::<Vec<_>>()).unwrap()
}

fn grid(lo: f64, hi: f64, steps: usize) -> MetricSpace {
    MetricSpace::line(&(0..=steps).map(|k| lo + (hi - lo) * k as f64 / steps as f64).collect::<Vec<_>>()).unwrap()
}

#[test]
fn harmonic_sums_are_quasi_cauchy_but_not_cauchy() {
    let out = generate(&FixtureSpec::new(FixtureName::HarmonicSums, 500)).unwrap();
    for k in 0..499 {
        let gap = out.space.d(k, k + 1);
        assert!((gap - 1.0 / (k + 2) as f64).abs() < 1e-13);
    }
    let qc = quasi_cauchy_test(&out.space, &out.prefix, &schedule(&[(0.1, 10), (0.01, 100)])).unwrap();
    assert!(qc.is_consistent());
    let c = cauchy_test(&out.space, &out.prefix, &schedule(&[(0.5, 10)])).unwrap();
    assert_eq!(c.status, Status::Falsified);
    let w = c.witness.unwrap();
    assert!(w.gap >= 0.5);
}

#[test]
fn unit_gaps_fail_at_one_half() {
    let s = naturals(100);
    let prefix: Vec<usize> = (0..100).collect();
    let v = quasi_cauchy_test(&s, &prefix, &schedule(&[(0.5, 1)])).unwrap();
    let w = v.witness.unwrap();
    assert_eq!((w.stage, w.index, w.gap), (0, 1, 1.0));
    assert!(!pseudo_cauchy_test(&s, &prefix, &schedule(&[(0.5, 1)])).unwrap().is_consistent());
    let constant = vec![3; 20];
    for test in [quasi_cauchy_test, cauchy_test, pseudo_cauchy_test] {
        assert!(test(&s, &constant, &schedule(&[(1e-9, 0)])).unwrap().is_consistent());
    }
}

#[test]
fn reciprocal_tail_is_cauchy() {
    let xs: Vec<f64> = (1..=1000).map(|n| 1.0 / n as f64).collect();
    let s = MetricSpace::line(&xs).unwrap();
    let prefix: Vec<usize> = (0..1000).collect();
    assert!(cauchy_test(&s, &prefix, &schedule(&[(0.1, 20)])).unwrap().is_consistent());
}

#[test]
fn interleaved_pairs_are_pseudo_cauchy() {
    // x_n = 10 n, y_n = 10 n + 1/n
    let mut xs = Vec::new();
    for n in 1..=60 {
        xs.push(10.0 * n as f64);
        xs.push(10.0 * n as f64 + 1.0 / n as f64);
    }
    let s = MetricSpace::line(&xs).unwrap();
    let prefix: Vec<usize> = (0..xs.len()).collect();
    let sched = schedule(&[(0.1, 20)]);
    assert!(pseudo_cauchy_test(&s, &prefix, &sched).unwrap().is_consistent());
    assert!(!quasi_cauchy_test(&s, &prefix, &sched).unwrap().is_consistent());
    let repeated = [0, 5, 9, 9];
    assert!(pseudo_cauchy_test(&s, &repeated, &schedule(&[(1e-6, 2)])).unwrap().is_consistent());
}

#[test]
fn unit_vectors_share_a_component() {
    let params = FixtureParams { step: Some(0.05), ..Default::default() };
    let out = generate(&FixtureSpec::new(FixtureName::ScaledUnitVectors, 10).with_params(params)).unwrap();
    let v = bourbaki_qc_test(&out.space, &out.prefix, 0.07).unwrap();
    assert_eq!((v.status, v.n0), (Status::Consistent, Some(0)));

    let ints = naturals(50);
    let prefix: Vec<usize> = (0..50).collect();
    assert_eq!(bourbaki_qc_test(&ints, &prefix, 0.5).unwrap().status, Status::Falsified);

    let ambient = grid(1.0, 50.0, 490);
    let integers: Vec<usize> = (0..50).map(|k| k * 10).collect();
    let v = bourbaki_qc_test(&ambient, &integers, 0.2).unwrap();
    assert_eq!(v.n0, Some(0));
}

#[test]
fn splice_walks_the_grid() {
    let s = grid(0.0, 2.0, 20);
    let out = splice_to_quasi_cauchy(&s, &[10, 20], &schedule(&[(0.15, 0)])).unwrap();
    assert_eq!(out.prefix, (10..=20).collect::<Vec<_>>());
    assert_eq!(out.embedding, vec![0, 10]);
    assert!(quasi_cauchy_test(&s, &out.prefix, &out.schedule).unwrap().is_consistent());

    let fine = [10, 11, 12, 13];
    let same = splice_to_quasi_cauchy(&s, &fine, &schedule(&[(0.15, 0)])).unwrap();
    assert_eq!(same.prefix, fine);
    assert_eq!(same.embedding, vec![0, 1, 2, 3]);

    let split = MetricSpace::line(&[0.0, 0.1, 5.0, 5.1]).unwrap();
    let err = splice_to_quasi_cauchy(&split, &[0, 2], &schedule(&[(1.0, 0)])).unwrap_err();
    assert_eq!(err, Error::NoChainAtScale { stage: 0, pair: 0 });
}

#[test]
fn extraction_keeps_the_majority_cluster() {
    // cluster A near 0, cluster B near 100, both 0.05-dense
    let mut xs: Vec<f64> = (0..20).map(|k| 0.05 * k as f64).collect();
    xs.extend((0..20).map(|k| 100.0 + 0.05 * k as f64));
    let s = MetricSpace::line(&xs).unwrap();
    // A, B, A, B, ... then one extra A
    let mut prefix: Vec<usize> = (0..20).flat_map(|k| [k, 20 + k]).collect();
    prefix.push(3);
    let out = extract_bqc_subsequence(&s, &prefix, &schedule(&[(0.1, 0)]), ComponentRule::Majority).unwrap();
    // census oracle: A holds 21 of 41 positions
    let in_a = |p: usize| prefix[p] < 20;
    assert_eq!(prefix.iter().filter(|&&x| x < 20).count(), 21);
    assert!(out.survivors.iter().all(|&p| in_a(p)));
    assert!(out.positions.iter().all(|&p| in_a(p)));

    let single: Vec<usize> = (0..20).collect();
    let sched = schedule(&[(0.1, 0), (0.08, 5), (0.07, 10)]);
    let out = extract_bqc_subsequence(&s, &single, &sched, ComponentRule::Majority).unwrap();
    assert_eq!(out.positions, vec![0, 5, 10]);
    assert!(out.components.iter().all(|c| c.discarded == 0));

    let err = extract_bqc_subsequence(&s, &[0, 1], &sched, ComponentRule::Majority).unwrap_err();
    assert_eq!(err, Error::Exhausted { completed_stages: 1 });
}

#[test]
fn schedules_round_trip_through_json() {
    let s = schedule(&[(0.5, 0), (0.25, 4)]);
    let text = serde_json::to_string(&s).unwrap();
    assert_eq!(text, "[[0.5,0],[0.25,4]]");
    let back: ToleranceSchedule = serde_json::from_str(&text).unwrap();
    assert_eq!(back, s);
    assert!(serde_json::from_str::<ToleranceSchedule>("[[0.5,3],[0.6,4]]").is_err());
}
