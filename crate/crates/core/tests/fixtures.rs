use chainscope::fixtures::{
    canonical_claims, check_claims, generate, verification_specs, FixtureName, FixtureParams, FixtureSpec,
};
use chainscope::{Error, Provider};

#[test]
fn canonical_shapes() {
    let seg = generate(&FixtureSpec::new(FixtureName::SegmentChain, 12)).unwrap();
    assert_eq!(seg.space.provider(), Provider::SupNormSparse);
    assert_eq!(seg.blocks.len(), 12);

    let tents = generate(&FixtureSpec::new(FixtureName::TentFamily, 10)).unwrap();
    let domain = tents.domain.as_ref().unwrap();
    assert_eq!(domain.len(), 12);
    // every member is supported on {1/n, 1/(n+1)} with values summing to 1
    for f in tents.family().unwrap() {
        let support = f.values.iter().filter(|&&v| v != 0.0).count();
        assert!((1..=2).contains(&support));
        assert!((f.values.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    let harmonic = generate(&FixtureSpec::new(FixtureName::HarmonicSums, 500)).unwrap();
    let f = harmonic.function.as_ref().unwrap();
    assert_eq!(f.values[99], 10.0);
    assert_eq!(harmonic.prefix, (0..500).collect::<Vec<_>>());
}

#[test]
fn midpoints_of_separated_segments() {
    let seg = generate(&FixtureSpec::new(FixtureName::SegmentChain, 4)).unwrap();
    // midpoint of X_1 (k = 1 of 2 steps) and of X_3 (k = 2 of 4 steps)
    let m1 = seg.blocks[0][1];
    let m3 = seg.blocks[2][2];
    assert_eq!(seg.space.d(m1, m3), 0.5);
}

#[test]
fn claims_by_fixture() {
    let ids = |spec: FixtureSpec| canonical_claims(&spec).unwrap().into_iter().map(|c| c.id).collect::<Vec<_>>();
    assert_eq!(ids(FixtureSpec::new(FixtureName::SegmentChain, 12)), ["distance-half", "chain-length-bound"]);
    assert!(
        ids(FixtureSpec::new(FixtureName::TentFamily, 30).with_variant("ramps")).contains(&"oscillation-one-at-zero")
    );
    assert!(ids(FixtureSpec::new(FixtureName::GridInterval, 30)).is_empty());
}

#[test]
fn all_verification_claims_pass_and_mutation_is_caught() {
    for spec in verification_specs() {
        for r in check_claims(&spec, 1.0).unwrap() {
            assert!(r.passed, "{} {}: {}", r.fixture, r.id, r.detail);
        }
    }
    let mutated = check_claims(&FixtureSpec::new(FixtureName::SegmentChain, 12), 1.1).unwrap();
    assert!(!mutated.iter().find(|r| r.id == "distance-half").unwrap().passed);
}

#[test]
fn bad_parameters() {
    assert!(matches!("mystery".parse::<FixtureName>(), Err(Error::UnknownFixture(_))));
    let bad_step = FixtureParams { step: Some(-1.0), ..Default::default() };
    assert!(generate(&FixtureSpec::new(FixtureName::BoundedLine, 3).with_params(bad_step)).is_err());
    let backwards = FixtureParams { lo: Some(2.0), hi: Some(1.0), ..Default::default() };
    assert!(generate(&FixtureSpec::new(FixtureName::GridInterval, 3).with_params(backwards)).is_err());
}

#[test]
fn specs_round_trip_through_json() {
    let spec = FixtureSpec::new(FixtureName::ScaledUnitVectors, 5).with_variant("shifted");
    let text = serde_json::to_string(&spec).unwrap();
    assert_eq!(serde_json::from_str::<FixtureSpec>(&text).unwrap(), spec);
}
