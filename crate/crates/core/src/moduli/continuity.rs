//! Continuity-class checks: ward falsification, equi-chain continuity of
//! function families, and the `l^p` tail criterion.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chain_graph::ChainGraph;
use crate::error::{check_eps, Error, Result};
use crate::exec::Execution;
use crate::metric::{MetricSpace, SparseVector};
use crate::sequences::{quasi_cauchy_test, ToleranceSchedule};

use super::ScalarFunction;

const WALK_STEPS: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum WardOutcome {
    /// A prefix consistent with the schedule whose image has a large step.
    Witness {
        prefix: Vec<usize>,
        /// The image step sits between positions `position` and `position + 1`.
        position: usize,
        image_gap: f64,
        domain_gap: f64,
        evaluations: usize,
    },
    /// Budget spent without a witness. This is not evidence of ward continuity.
    Exhausted { evaluations: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WardSearch {
    pub schedule: ToleranceSchedule,
    pub outcome: WardOutcome,
}

/// Halve the diameter while the scale still exceeds the smallest positive
/// distance, with stage `j` starting at position `j`.
fn ward_default_schedule(space: &MetricSpace) -> Result<ToleranceSchedule> {
    let diam = space.diameter();
    let Some(floor) = space.min_positive_distance() else {
        return Err(Error::DegenerateSpace(1));
    };
    let mut pairs = Vec::new();
    let mut eps = diam;
    while eps > floor {
        pairs.push((eps, pairs.len()));
        eps *= 0.5;
    }
    if pairs.is_empty() {
        pairs.push((2.0 * diam, 0));
    }
    ToleranceSchedule::new(pairs)
}

/// Searches for a prefix consistent with `schedule` that `f` maps to a prefix
/// with some consecutive image gap `>= eps_img`.
///
/// Candidates are walks in the chain graph at the last stage's scale, placed
/// after a constant run so that every stage boundary is respected. The first
/// walk starts where the single steepest step begins and follows the steepest
/// unvisited step; later walks start at seeded random points and step randomly.
/// Each walk costs one evaluation.
pub fn ward_falsifier(
    space: &MetricSpace,
    f: &ScalarFunction,
    eps_img: f64,
    schedule: Option<&ToleranceSchedule>,
    budget: usize,
    seed: u64,
) -> Result<WardSearch> {
    f.check_against(space)?;
    check_eps(eps_img)?;
    if budget == 0 {
        return Err(Error::BadParam("search budget must be at least 1".into()));
    }
    let schedule = match schedule {
        Some(s) => s.clone(),
        None => ward_default_schedule(space)?,
    };
    let last = *schedule.stages().last().expect("schedules are nonempty");
    let graph = ChainGraph::build(space, last.eps)?;
    let img = |a: usize, b: usize| (f.values[a] - f.values[b]).abs();
    let steepest = |x: usize, visited: &[usize]| {
        graph.neighbors(x).iter().copied().filter(|y| !visited.contains(y)).fold(None, |best: Option<usize>, y| {
            match best {
                Some(b) if img(x, b) >= img(x, y) => Some(b),
                _ => Some(y),
            }
        })
    };

    let n = space.len();
    let start_gain = Execution::default().map_range(n, |x| steepest(x, &[]).map_or(-1.0, |y| img(x, y)));
    let greedy_start = (0..n).fold(0, |b, x| if start_gain[x] > start_gain[b] { x } else { b });

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut evaluations = 0;
    while evaluations < budget {
        let walk = if evaluations == 0 {
            let mut walk = vec![greedy_start];
            while walk.len() <= WALK_STEPS {
                match steepest(*walk.last().unwrap_or(&greedy_start), &walk) {
                    Some(y) => walk.push(y),
                    None => break,
                }
            }
            walk
        } else {
            let mut walk = vec![rng.gen_range(0..n)];
            let steps = rng.gen_range(1..=WALK_STEPS);
            for _ in 0..steps {
                let here = *walk.last().unwrap_or(&0);
                match graph.neighbors(here).choose(&mut rng) {
                    Some(&y) => walk.push(y),
                    None => break,
                }
            }
            walk
        };
        evaluations += 1;
        if walk.len() < 2 {
            continue;
        }
        let mut prefix = vec![walk[0]; last.start];
        prefix.extend_from_slice(&walk);
        if !quasi_cauchy_test(space, &prefix, &schedule)?.is_consistent() {
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for k in 0..prefix.len() - 1 {
            let g = img(prefix[k], prefix[k + 1]);
            if best.is_none_or(|(_, b)| g > b) {
                best = Some((k, g));
            }
        }
        if let Some((position, image_gap)) = best.filter(|&(_, g)| g >= eps_img) {
            let domain_gap = space.d(prefix[position], prefix[position + 1]);
            return Ok(WardSearch {
                schedule,
                outcome: WardOutcome::Witness { prefix, position, image_gap, domain_gap, evaluations },
            });
        }
    }
    Ok(WardSearch { schedule, outcome: WardOutcome::Exhausted { evaluations } })
}

/// `sup { delta : d(x, y) < delta => |g(x) - g(y)| < eps }`, which is the
/// distance from `x` to the nearest `y` with `|g(x) - g(y)| >= eps`.
fn continuity_radius(domain: &MetricSpace, g: &[f64], x: usize, eps: f64) -> f64 {
    (0..domain.len()).filter(|&y| (g[x] - g[y]).abs() >= eps).map(|y| domain.d(x, y)).fold(f64::INFINITY, f64::min)
}

fn family_space(domain: &MetricSpace, family: &[ScalarFunction]) -> Result<MetricSpace> {
    if family.is_empty() {
        return Err(Error::EmptyFamily);
    }
    for f in family {
        f.check_against(domain)?;
    }
    MetricSpace::function_sup(family.iter().map(|f| f.values.clone()).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub function: usize,
    /// The surrogate `g_f`, fixed per function and scale.
    pub surrogate: usize,
    /// An eps-chain in the family from `function` to `surrogate`.
    pub chain: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquiChainReport {
    pub eps: f64,
    pub holds: bool,
    /// Per domain point, the common radius `delta_x` that serves every surrogate.
    #[serde(with = "crate::json::vec")]
    pub deltas: Vec<f64>,
    /// Chain components of the family under the sup distance.
    pub components: Vec<Vec<usize>>,
    pub certificates: Vec<Certificate>,
    /// `(x, f)` where no positive radius exists.
    pub falsifier: Option<(usize, usize)>,
}

/// Equi-chain continuity of a finite family over a finite domain.
///
/// Within each eps-chain component of the family, the surrogate is the member
/// whose smallest continuity radius over the domain is largest (ties to the
/// smallest index). `delta_x` is the least continuity radius at `x` among the
/// surrogates.
pub fn equi_chain_continuity_check(
    domain: &MetricSpace,
    family: &[ScalarFunction],
    eps: f64,
) -> Result<EquiChainReport> {
    check_eps(eps)?;
    let fam = family_space(domain, family)?;
    let graph = ChainGraph::build(&fam, eps)?;
    let n = domain.len();
    let radii: Vec<Vec<f64>> = Execution::default()
        .map_range(family.len(), |g| (0..n).map(|x| continuity_radius(domain, &family[g].values, x, eps)).collect());
    let worst: Vec<f64> = radii.iter().map(|r| r.iter().copied().fold(f64::INFINITY, f64::min)).collect();

    let components = graph.components();
    let mut surrogate_of = vec![0; family.len()];
    let mut surrogates = Vec::with_capacity(components.len());
    for comp in &components {
        let g = comp.iter().copied().fold(comp[0], |b, g| if worst[g] > worst[b] { g } else { b });
        surrogates.push(g);
        for &f in comp {
            surrogate_of[f] = g;
        }
    }
    let deltas: Vec<f64> =
        (0..n).map(|x| surrogates.iter().map(|&g| radii[g][x]).fold(f64::INFINITY, f64::min)).collect();
    let falsifier = deltas.iter().position(|&d| d <= 0.0).map(|x| {
        let g = surrogates.iter().position(|&g| radii[g][x] <= 0.0).unwrap_or(0);
        (x, components[g][0])
    });
    let mut certificates = Vec::with_capacity(family.len());
    for (f, &g) in surrogate_of.iter().enumerate() {
        let chain = graph.find_chain(f, g)?.map(|w| w.indices).unwrap_or_default();
        certificates.push(Certificate { function: f, surrogate: g, chain });
    }
    Ok(EquiChainReport { eps, holds: falsifier.is_none(), deltas, components, certificates, falsifier })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlainWitness {
    pub function: usize,
    pub point: usize,
    pub oscillation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlainEquicontinuity {
    pub x: usize,
    pub eps: f64,
    /// Largest radius that works for every member at `x`.
    #[serde(with = "crate::json")]
    pub largest_delta: f64,
    #[serde(with = "crate::json")]
    pub checked_delta: f64,
    pub holds: bool,
    /// Largest `|f(y) - f(x)|` over members `f` and `d(x, y) < checked_delta`.
    pub witness: Option<PlainWitness>,
}

/// Plain equicontinuity of the family at `x`, checked at radius `delta`
/// (defaults to the largest radius that works).
pub fn equicontinuity_at(
    domain: &MetricSpace,
    family: &[ScalarFunction],
    x: usize,
    eps: f64,
    delta: Option<f64>,
) -> Result<PlainEquicontinuity> {
    check_eps(eps)?;
    if family.is_empty() {
        return Err(Error::EmptyFamily);
    }
    for f in family {
        f.check_against(domain)?;
    }
    domain.check_index(x)?;
    if let Some(d) = delta {
        check_eps(d)?;
    }
    let largest_delta =
        family.iter().map(|f| continuity_radius(domain, &f.values, x, eps)).fold(f64::INFINITY, f64::min);
    let checked_delta = delta.unwrap_or(largest_delta);
    let mut witness: Option<PlainWitness> = None;
    for (fi, f) in family.iter().enumerate() {
        for y in 0..domain.len() {
            if domain.d(x, y) >= checked_delta {
                continue;
            }
            let osc = (f.values[y] - f.values[x]).abs();
            if witness.as_ref().is_none_or(|w| osc > w.oscillation) {
                witness = Some(PlainWitness { function: fi, point: y, oscillation: osc });
            }
        }
    }
    let holds = witness.as_ref().is_none_or(|w| w.oscillation < eps);
    Ok(PlainEquicontinuity { x, eps, largest_delta, checked_delta, holds, witness })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpTailReport {
    pub p: f64,
    pub eps: f64,
    pub n0: usize,
    pub holds: bool,
    /// Per member, a chain-reachable member with tail mass below `eps^p`.
    pub certificates: Vec<Option<usize>>,
    pub tail_masses: Vec<f64>,
    pub failing: Option<usize>,
}

/// For each member `x`, looks in its eps-chain component (`l^p` distance) for
/// `y` with `sum_{i > n0} |y_i|^p < eps^p`, preferring `y = x`, then the
/// smallest tail mass.
pub fn lp_tail_criterion(family: &[SparseVector], p: f64, eps: f64, n0: usize) -> Result<LpTailReport> {
    check_eps(eps)?;
    if family.is_empty() {
        return Err(Error::EmptyFamily);
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::BadParam(format!("p = {p} must be >= 1")));
    }
    let space = MetricSpace::p_norm(family.to_vec(), p)?;
    let graph = ChainGraph::build(&space, eps)?;
    let tail_masses: Vec<f64> = family.iter().map(|v| v.tail_mass(n0, p)).collect();
    let bound = eps.powf(p);
    let mut best_in: Vec<Option<usize>> = vec![None; family.len()];
    for comp in graph.components() {
        let best = comp.iter().copied().filter(|&y| tail_masses[y] < bound).fold(None, |b: Option<usize>, y| match b {
            Some(b) if tail_masses[b] <= tail_masses[y] => Some(b),
            _ => Some(y),
        });
        for &x in &comp {
            best_in[x] = best;
        }
    }
    let certificates: Vec<Option<usize>> =
        (0..family.len()).map(|x| if tail_masses[x] < bound { Some(x) } else { best_in[x] }).collect();
    let failing = certificates.iter().position(Option::is_none);
    Ok(LpTailReport { p, eps, n0, holds: failing.is_none(), certificates, tail_masses, failing })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> MetricSpace {
        MetricSpace::line(&(0..=n).map(|k| k as f64 / n as f64).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn identity_is_not_falsified() {
        let s = grid(100);
        let f = ScalarFunction::new(&s, (0..=100).map(|k| k as f64 / 100.0).collect()).unwrap();
        let r = ward_falsifier(&s, &f, 0.015, None, 50, 1).unwrap();
        assert_eq!(r.outcome, WardOutcome::Exhausted { evaluations: 50 });
    }

    #[test]
    fn jump_is_found_with_one_evaluation() {
        let s = MetricSpace::line(&[0.0, 1.0, 1.001, 2.0]).unwrap();
        let f = ScalarFunction::new(&s, vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        let r = ward_falsifier(&s, &f, 0.5, None, 10, 1).unwrap();
        match r.outcome {
            WardOutcome::Witness { prefix, position, image_gap, evaluations, .. } => {
                assert_eq!(evaluations, 1);
                assert_eq!(image_gap, 1.0);
                let pair = (prefix[position], prefix[position + 1]);
                assert!(pair == (1, 2) || pair == (2, 1));
                assert!(quasi_cauchy_test(&s, &prefix, &r.schedule).unwrap().is_consistent());
            }
            other => panic!("expected witness, got {other:?}"),
        }
        assert!(ward_falsifier(&s, &f, 0.5, None, 0, 1).is_err());
    }

    #[test]
    fn singleton_family_certifies_itself() {
        let s = grid(10);
        let fam = vec![ScalarFunction::constant(&s, 1.0).unwrap()];
        let r = equi_chain_continuity_check(&s, &fam, 0.3).unwrap();
        assert!(r.holds);
        assert_eq!(r.certificates[0], Certificate { function: 0, surrogate: 0, chain: vec![0] });
        assert!(r.deltas.iter().all(|d| d.is_infinite()));
        assert_eq!(equi_chain_continuity_check(&s, &[], 0.3).unwrap_err(), Error::EmptyFamily);
    }

    #[test]
    fn chain_check_matches_plain_check_on_isolated_families() {
        let s = grid(50);
        let fam: Vec<ScalarFunction> = [1.0, 3.0, 7.0]
            .iter()
            .map(|&a| ScalarFunction::new(&s, (0..=50).map(|k| a * k as f64 / 50.0).collect()).unwrap())
            .collect();
        let r = equi_chain_continuity_check(&s, &fam, 0.1).unwrap();
        assert_eq!(r.components.len(), 3);
        for x in 0..=50 {
            let plain = equicontinuity_at(&s, &fam, x, 0.1, None).unwrap();
            assert_eq!(plain.largest_delta, r.deltas[x]);
            assert!(plain.holds);
        }
    }

    #[test]
    fn plain_check_with_given_radius() {
        let s = grid(10);
        let f = ScalarFunction::new(&s, (0..=10).map(|k| if k >= 2 { 1.0 } else { 0.0 }).collect()).unwrap();
        let r = equicontinuity_at(&s, &[f], 0, 0.5, Some(0.25)).unwrap();
        assert!(!r.holds);
        assert_eq!(r.witness, Some(PlainWitness { function: 0, point: 2, oscillation: 1.0 }));
        assert!((r.largest_delta - 0.2).abs() < 1e-15);
    }

    #[test]
    fn lp_tails() {
        let units: Vec<SparseVector> = (1..=20).map(SparseVector::unit).collect();
        let r = lp_tail_criterion(&units, 2.0, 0.5, 3).unwrap();
        assert!(!r.holds);
        assert_eq!(r.failing, Some(3));
        assert_eq!(r.certificates[..3], [Some(0), Some(1), Some(2)]);

        let short: Vec<SparseVector> = (1..=5).map(|i| SparseVector::new([(i, 0.3)])).collect();
        let r = lp_tail_criterion(&short, 1.0, 0.1, 5).unwrap();
        assert!(r.holds);
        assert_eq!(r.certificates, (0..5).map(Some).collect::<Vec<_>>());

        // e_k joined to 0 through t e_k, then over to e_1
        let mut fam = vec![SparseVector::zero()];
        for k in 1..=10 {
            for s in 1..=10 {
                fam.push(SparseVector::new([(k, s as f64 / 10.0)]));
            }
        }
        let r = lp_tail_criterion(&fam, 2.0, 0.15, 1).unwrap();
        assert!(r.holds);
        assert_eq!(r.certificates[fam.len() - 1], Some(0));
        assert!(lp_tail_criterion(&[], 2.0, 0.15, 1).is_err());
    }
}
