use chainscope::chain_graph::{
    chain_discreteness, covering_profile, is_chainable, is_uniformly_chain_discrete_at, u_placed_gap, ChainGraph,
    DiscretenessMode, ThresholdGrid,
};
use chainscope::fixtures::{generate, FixtureName, FixtureParams, FixtureSpec};
use chainscope::harness::oracle_components;
use chainscope::MetricSpace;

fn grid(lo: f64, hi: f64, steps: usize) -> MetricSpace {
    let xs: Vec<f64> = (0..=steps).map(|k| lo + (hi - lo) * k as f64 / steps as f64).collect();
    MetricSpace::line(&xs).unwrap()
}

fn rays(n: usize, step: f64) -> chainscope::fixtures::FixtureOutput {
    let params = FixtureParams { step: Some(step), ..Default::default() };
    generate(&FixtureSpec::new(FixtureName::ScaledUnitVectors, n).with_params(params)).unwrap()
}

/// All-pairs hop counts of the strict eps-graph by Floyd-Warshall.
fn hop_matrix(space: &MetricSpace, eps: f64) -> Vec<Vec<usize>> {
    let n = space.len();
    let far = usize::MAX / 4;
    let mut h: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        0
                    } else if space.d(i, j) < eps {
                        1
                    } else {
                        far
                    }
                })
                .collect()
        })
        .collect();
    for k in 0..n {
        for i in 0..n {
            let hik = h[i][k];
            if hik == far {
                continue;
            }
            for j in 0..n {
                let via = hik + h[k][j];
                if via < h[i][j] {
                    h[i][j] = via;
                }
            }
        }
    }
    h
}

#[test]
fn strictness_at_the_boundary() {
    let s = MetricSpace::line(&[0.0, 1.0, 2.0]).unwrap();
    assert_eq!(ChainGraph::build(&s, 1.5).unwrap().component_count(), 1);
    assert_eq!(ChainGraph::build(&s, 1.0).unwrap().component_count(), 3);
}

#[test]
fn short_segments_shatter() {
    let out = generate(&FixtureSpec::new(FixtureName::SegmentChain, 6)).unwrap();
    let g = ChainGraph::build(&out.space, 0.25).unwrap();
    assert_eq!(g.components(), oracle_components(&out.space, 0.25).unwrap());
    for (i, block) in out.blocks.iter().enumerate() {
        let n = i + 1;
        // interior points only; endpoints are shared with neighbouring segments
        let interior = &block[1..block.len() - 1];
        for &x in interior {
            let comp = g.chain_component(x).unwrap();
            if n <= 3 {
                assert_eq!(comp, vec![x], "X_{n} point {x}");
            } else {
                assert!(block.iter().all(|y| comp.contains(y)), "X_{n} connected");
            }
        }
    }
}

#[test]
fn ball_layers_on_a_path() {
    let s = MetricSpace::line(&[0.0, 1.0, 2.0, 3.0]).unwrap();
    let g = ChainGraph::build(&s, 1.1).unwrap();
    assert_eq!(g.ball_layers(0, 2).unwrap(), vec![0, 1, 2]);
    assert_eq!(g.ball_layers(0, 1).unwrap(), vec![0, 1]);
}

#[test]
fn rays_are_chainable() {
    let coarse = rays(8, 0.1);
    let g = ChainGraph::build(&coarse.space, 0.15).unwrap();
    assert_eq!(g.component_count(), 1);
    assert!(is_chainable(&rays(8, 0.05).space, 0.07).unwrap());
    assert!(!is_chainable(&rays(8, 0.05).space, 0.05).unwrap());
}

#[test]
fn witnesses_and_their_absence() {
    let s = MetricSpace::line(&[0.0, 1.0, 5.0]).unwrap();
    let g = ChainGraph::build(&s, 1.5).unwrap();
    let w = g.find_chain(1, 1).unwrap().unwrap();
    assert_eq!(w.indices, vec![1]);
    assert!(g.find_chain(0, 2).unwrap().is_none());
}

#[test]
fn long_chain_between_far_unit_vectors() {
    let out = generate(&FixtureSpec::new(FixtureName::SegmentChain, 16).with_subdiv(4)).unwrap();
    let g = ChainGraph::build(&out.space, 0.25).unwrap();
    let w = g.find_chain(out.landmark("e8").unwrap(), out.landmark("e14").unwrap()).unwrap().unwrap();
    assert!(w.is_valid_in(&out.space));
    assert_eq!(w.len(), hop_matrix(&out.space, 0.25)[w.indices[0]][*w.indices.last().unwrap()]);
    assert_eq!(w.len(), 25);
}

#[test]
fn covering_profiles() {
    let s = MetricSpace::line(&[0.0, 1.0, 2.0]).unwrap();
    let p = covering_profile(&s, 10.0).unwrap();
    assert_eq!((p.k, p.m_star), (1, 1));
    let far = MetricSpace::line(&[0.0, 100.0]).unwrap();
    let p = covering_profile(&far, 1.0).unwrap();
    assert_eq!((p.k, p.m_star), (2, 0));

    let stars: Vec<usize> = [8, 12, 16]
        .into_iter()
        .map(|n| {
            let out = generate(&FixtureSpec::new(FixtureName::SegmentChain, n).with_subdiv(4)).unwrap();
            let m_star = covering_profile(&out.space, 0.25).unwrap().m_star;
            let hops = hop_matrix(&out.space, 0.25);
            let radius = hops.iter().map(|row| *row.iter().max().unwrap()).min().unwrap();
            assert_eq!(m_star, radius);
            m_star
        })
        .collect();
    assert_eq!(stars, vec![19, 27, 35]);
}

#[test]
fn integers_discrete_in_themselves_not_in_a_grid() {
    let ints: Vec<f64> = (1..=50).map(f64::from).collect();
    let n = MetricSpace::line(&ints).unwrap();
    let all: Vec<usize> = (0..50).collect();
    assert!(is_uniformly_chain_discrete_at(&n, &all, DiscretenessMode::InItself, 0.5).unwrap());
    let r = chain_discreteness(&n, &all, DiscretenessMode::InItself, ThresholdGrid::ExactBreakpoints).unwrap();
    assert!(r.exact.iter().all(|&t| t >= 1.0));

    let ambient = grid(1.0, 50.0, 490);
    let integers: Vec<usize> = (0..50).map(|k| k * 10).collect();
    assert!(!is_uniformly_chain_discrete_at(&ambient, &integers, DiscretenessMode::InAmbient, 0.2).unwrap());
    assert!(is_uniformly_chain_discrete_at(&ambient, &[7], DiscretenessMode::InAmbient, 0.2).unwrap());
}

#[test]
fn u_placed_gap_on_a_grid() {
    let s = grid(0.0, 2.0, 40);
    let plus: Vec<usize> = (0..=20).collect();
    let minus: Vec<usize> = (20..=40).collect();
    // brute-force oracle over the two trimmed sets
    let meet = 20;
    let trimmed = |side: &[usize]| side.iter().copied().filter(|&x| s.d(x, meet) >= 0.25).collect::<Vec<_>>();
    let (a, b) = (trimmed(&plus), trimmed(&minus));
    let oracle =
        a.iter().flat_map(|&x| b.iter().map(move |&y| (x, y))).map(|(x, y)| s.d(x, y)).fold(f64::INFINITY, f64::min);
    let gap = u_placed_gap(&s, &plus, &minus, 0.25).unwrap();
    assert_eq!(gap, oracle);
    assert!((gap - 0.5).abs() < 1e-12);
    let all: Vec<usize> = (0..=40).collect();
    assert_eq!(u_placed_gap(&s, &all, &all, 0.25).unwrap(), f64::INFINITY);
}
