//! Random metric spaces, brute-force oracles and a randomized check of the
//! finite-scale implications between the sequence tests and the moduli.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chain_graph::ChainGraph;
use crate::error::{check_eps, Error, Result};
use crate::exec::Execution;
use crate::metric::MetricSpace;
use crate::moduli::{lipschitz_constant, lits_modulus, seq_lipschitz_constant, ScalarFunction, SeqMode};
use crate::sequences::{cauchy_test, pseudo_cauchy_test, quasi_cauchy_test, splice_to_quasi_cauchy, ToleranceSchedule};

pub const ORACLE_LIMIT: usize = 64;
pub const ENUMERATION_LIMIT: usize = 8;
pub const ENUMERATION_MAX_LENGTH: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Generator {
    /// Uniform points in `[0, scale]^dim` under the Euclidean norm.
    EuclideanCloud { dim: usize, scale: f64 },
    /// Random symmetric weights on a fraction `density` of the pairs, closed
    /// under shortest paths. Missing pairs weigh the largest drawn weight times `n`.
    RepairedMatrix { density: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomSpaceSpec {
    pub n: usize,
    pub generator: Generator,
    pub seed: u64,
}

pub fn random_space(spec: &RandomSpaceSpec) -> Result<MetricSpace> {
    if spec.n < 2 {
        return Err(Error::BadSpec(format!("need at least 2 points, got {}", spec.n)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    match spec.generator {
        Generator::EuclideanCloud { dim, scale } => {
            if dim == 0 || !(scale > 0.0 && scale.is_finite()) {
                return Err(Error::BadSpec(format!("bad cloud dim {dim} / scale {scale}")));
            }
            let points = (0..spec.n).map(|_| (0..dim).map(|_| rng.gen::<f64>() * scale).collect()).collect();
            MetricSpace::euclidean(points)
        }
        Generator::RepairedMatrix { density } => {
            if !(density > 0.0 && density <= 1.0) {
                return Err(Error::BadSpec(format!("density {density} outside (0, 1]")));
            }
            MetricSpace::from_matrix(repaired_matrix(spec.n, density, &mut rng))
        }
    }
}

fn repaired_matrix(n: usize, density: f64, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut m = vec![vec![f64::INFINITY; n]; n];
    let mut largest: f64 = 0.0;
    for i in 0..n {
        m[i][i] = 0.0;
        for j in i + 1..n {
            if rng.gen::<f64>() < density {
                let w = rng.gen_range(0.05..1.0);
                m[i][j] = w;
                m[j][i] = w;
                largest = largest.max(w);
            }
        }
    }
    let fill = largest.max(1.0) * n as f64;
    for (i, row) in m.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            if i != j && x.is_infinite() {
                *x = fill;
            }
        }
    }
    // Floyd-Warshall closure
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = m[i][k] + m[k][j];
                if via < m[i][j] {
                    m[i][j] = via;
                }
            }
        }
    }
    m
}

/// Components of the strict `d < eps` relation by depth-first closure.
/// Blocks are sorted and ordered by smallest member.
pub fn oracle_components(space: &MetricSpace, eps: f64) -> Result<Vec<Vec<usize>>> {
    check_eps(eps)?;
    let n = space.len();
    if n > ORACLE_LIMIT {
        return Err(Error::TooLarge { n, limit: ORACLE_LIMIT });
    }
    let mut seen = vec![false; n];
    let mut blocks = Vec::new();
    for root in 0..n {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        let mut block = vec![root];
        let mut stack = vec![root];
        while let Some(u) = stack.pop() {
            for v in 0..n {
                if !seen[v] && space.d(u, v) < eps {
                    seen[v] = true;
                    block.push(v);
                    stack.push(v);
                }
            }
        }
        block.sort_unstable();
        blocks.push(block);
    }
    Ok(blocks)
}

/// Endpoints of every eps-chain from `x` with at most `m` steps, found by
/// listing all such chains.
pub fn enumerate_chain_reach(space: &MetricSpace, eps: f64, x: usize, m: usize) -> Result<Vec<usize>> {
    check_eps(eps)?;
    space.check_index(x)?;
    let n = space.len();
    if n > ENUMERATION_LIMIT {
        return Err(Error::TooLarge { n, limit: ENUMERATION_LIMIT });
    }
    if m > ENUMERATION_MAX_LENGTH {
        return Err(Error::TooLarge { n: m, limit: ENUMERATION_MAX_LENGTH });
    }
    if m == 0 {
        return Err(Error::NonPositiveLength);
    }
    fn walk(space: &MetricSpace, eps: f64, at: usize, left: usize, reached: &mut BTreeSet<usize>) {
        reached.insert(at);
        if left == 0 {
            return;
        }
        for v in 0..space.len() {
            if space.d(at, v) < eps {
                walk(space, eps, v, left - 1, reached);
            }
        }
    }
    let mut reached = BTreeSet::new();
    walk(space, eps, x, m, &mut reached);
    Ok(reached.into_iter().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mutation {
    #[default]
    None,
    /// Replaces the quasi-Cauchy gap check `d < eps` by `d >= eps`.
    FlipComparator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Property {
    CauchyImpliesQuasiCauchy,
    QuasiCauchyImpliesPseudoCauchy,
    ModulusChain,
    ComponentMonotonicity,
    ComponentOracle,
    BallEnumeration,
    SpliceRoundTrip,
}

/// One randomized input: retained points of a generated space, a function on
/// them, a prefix and a schedule. Indices refer to the generated space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Case {
    pub points: Vec<usize>,
    pub values: Vec<f64>,
    pub prefix: Vec<usize>,
    pub schedule: Vec<(f64, usize)>,
    /// Two scales `eps_lo < eps_hi` for the component checks.
    pub scales: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub trial: usize,
    pub property: Property,
    pub detail: String,
    pub original_points: usize,
    pub original_prefix: usize,
    pub shrunk: Case,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub space: RandomSpaceSpec,
    pub prefix_len: usize,
    pub checks: usize,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub trials: usize,
    pub seed: u64,
    pub mutation: Mutation,
    pub records: Vec<TrialRecord>,
    pub violations: Vec<Violation>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn implication_suite(trials: usize, seed: u64) -> Result<SuiteReport> {
    implication_suite_with(trials, seed, Mutation::None, Execution::default())
}

pub fn implication_suite_with(trials: usize, seed: u64, mutation: Mutation, exec: Execution) -> Result<SuiteReport> {
    if trials == 0 {
        return Err(Error::BadParam("need at least one trial".into()));
    }
    let outcomes = exec.map_range(trials, |t| run_trial(t, seed, mutation));
    let mut records = Vec::with_capacity(trials);
    let mut violations = Vec::new();
    for outcome in outcomes {
        let (record, found) = outcome?;
        records.push(record);
        violations.extend(found);
    }
    Ok(SuiteReport { trials, seed, mutation, records, violations })
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

fn run_trial(trial: usize, seed: u64, mutation: Mutation) -> Result<(TrialRecord, Vec<Violation>)> {
    let mut rng = trial_rng(seed, trial);
    let n = rng.gen_range(3..=10);
    let generator = if rng.gen_bool(0.5) {
        Generator::EuclideanCloud { dim: rng.gen_range(1..=3), scale: 1.0 }
    } else {
        Generator::RepairedMatrix { density: rng.gen_range(0.3..1.0) }
    };
    let spec = RandomSpaceSpec { n, generator, seed: rng.gen() };
    let space = random_space(&spec)?;
    let case = random_case(&space, &mut rng);
    let failures = check_case(&space, &case, mutation)?;
    let checks = failures.checks;
    let mut violations = Vec::new();
    for (property, detail) in failures.failed {
        let shrunk = shrink(&space, case.clone(), property, mutation)?;
        violations.push(Violation {
            trial,
            property,
            detail,
            original_points: case.points.len(),
            original_prefix: case.prefix.len(),
            shrunk,
        });
    }
    let record =
        TrialRecord { trial, space: spec, prefix_len: case.prefix.len(), checks, violations: violations.len() };
    Ok((record, violations))
}

fn random_case(space: &MetricSpace, rng: &mut ChaCha8Rng) -> Case {
    let n = space.len();
    let values: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let len = rng.gen_range(4..=14);
    // a lazy random walk, biased toward near neighbours
    let mut prefix = vec![rng.gen_range(0..n)];
    while prefix.len() < len {
        let at = *prefix.last().unwrap();
        let next = if rng.gen_bool(0.3) {
            at
        } else {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| space.d(at, a).total_cmp(&space.d(at, b)));
            order[rng.gen_range(0..n.min(3))]
        };
        prefix.push(next);
    }
    let stages = rng.gen_range(1..=3);
    let step = len / (stages + 1);
    let mut schedule = Vec::new();
    let mut eps = space.diameter().max(1e-9) * rng.gen_range(0.3..1.2);
    for j in 0..stages {
        schedule.push((eps, j * step.max(1)));
        eps *= rng.gen_range(0.3..0.9);
    }
    let mut breaks = space.breakpoints();
    breaks.push(space.diameter() * 1.5 + 1e-9);
    let a = breaks[rng.gen_range(0..breaks.len())];
    let b = breaks[rng.gen_range(0..breaks.len())];
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let lo = if lo > 0.0 { lo } else { hi.max(1e-9) };
    Case { points: (0..n).collect(), values, prefix, schedule, scales: (lo, hi.max(lo)) }
}

struct Checked {
    checks: usize,
    failed: Vec<(Property, String)>,
}

fn qc_consistent(
    space: &MetricSpace,
    prefix: &[usize],
    schedule: &ToleranceSchedule,
    mutation: Mutation,
) -> Result<bool> {
    match mutation {
        Mutation::None => Ok(quasi_cauchy_test(space, prefix, schedule)?.is_consistent()),
        Mutation::FlipComparator => Ok(schedule
            .stages()
            .iter()
            .all(|st| (st.start..prefix.len().saturating_sub(1)).all(|k| space.d(prefix[k], prefix[k + 1]) >= st.eps))),
    }
}

fn check_case(full: &MetricSpace, case: &Case, mutation: Mutation) -> Result<Checked> {
    let space = full.subspace(&case.points)?;
    let local = |i: usize| case.points.binary_search(&i).expect("prefix points are retained");
    let prefix: Vec<usize> = case.prefix.iter().map(|&i| local(i)).collect();
    let f = ScalarFunction::new(&space, case.values.clone())?;
    let schedule = ToleranceSchedule::new(case.schedule.clone())?;
    let mut out = Checked { checks: 0, failed: Vec::new() };
    let mut check = |property: Property, ok: bool, detail: String| {
        out.checks += 1;
        if !ok {
            out.failed.push((property, detail));
        }
    };

    if prefix.len() >= 2 && schedule.stages()[0].start < prefix.len() {
        let cauchy = cauchy_test(&space, &prefix, &schedule)?.is_consistent();
        let qc = qc_consistent(&space, &prefix, &schedule, mutation)?;
        let pseudo = pseudo_cauchy_test(&space, &prefix, &schedule)?.is_consistent();
        check(Property::CauchyImpliesQuasiCauchy, !cauchy || qc, format!("cauchy {cauchy}, quasi-cauchy {qc}"));
        check(
            Property::QuasiCauchyImpliesPseudoCauchy,
            !qc || pseudo,
            format!("quasi-cauchy {qc}, pseudo-cauchy {pseudo}"),
        );

        if space.len() >= 2 {
            let lip = lipschitz_constant(&space, &f)?.constant;
            let lits = lits_modulus(&space, &f, case.scales.1)?.constant;
            let consecutive = seq_lipschitz_constant(&space, &f, &prefix, SeqMode::Consecutive)?.constant;
            let all_pairs = seq_lipschitz_constant(&space, &f, &prefix, SeqMode::AllPairs)?.constant;
            let ok = lits <= lip
                && (!qc || consecutive <= all_pairs)
                && (!cauchy || all_pairs <= lip)
                && (lip.is_infinite() || (lits.is_finite() && consecutive.is_finite() && all_pairs.is_finite()));
            check(
                Property::ModulusChain,
                ok,
                format!("lipschitz {lip}, lits {lits}, consecutive {consecutive}, all-pairs {all_pairs}"),
            );
        }

        match splice_to_quasi_cauchy(&space, &prefix, &schedule) {
            Ok(s) => {
                let placed = s.embedding.windows(2).all(|w| w[0] < w[1])
                    && prefix.iter().enumerate().all(|(k, &x)| s.prefix[s.embedding[k]] == x);
                let qc = quasi_cauchy_test(&space, &s.prefix, &s.schedule)?.is_consistent();
                check(
                    Property::SpliceRoundTrip,
                    placed && qc,
                    format!("embedding ok {placed}, spliced quasi-cauchy {qc}"),
                );
            }
            Err(Error::NoChainAtScale { .. }) => {}
            Err(e) => return Err(e),
        }
    }

    let (lo, hi) = case.scales;
    let fine = ChainGraph::build(&space, lo)?;
    let coarse = ChainGraph::build(&space, hi)?;
    let refines = fine.components().iter().all(|block| block.iter().all(|&x| coarse.same_component(x, block[0])));
    check(Property::ComponentMonotonicity, refines, format!("components at {lo} do not refine those at {hi}"));
    for graph in [&fine, &coarse] {
        let oracle = oracle_components(&space, graph.eps())?;
        check(Property::ComponentOracle, oracle == graph.components(), format!("at eps {}", graph.eps()));
    }
    if space.len() <= ENUMERATION_LIMIT {
        let m = 1 + case.prefix.len() % ENUMERATION_MAX_LENGTH;
        for x in 0..space.len() {
            let brute = enumerate_chain_reach(&space, lo, x, m)?;
            let bfs = fine.ball_layers(x, m)?;
            check(Property::BallEnumeration, brute == bfs, format!("point {x}, m {m}"));
        }
    }
    Ok(out)
}

fn still_fails(full: &MetricSpace, case: &Case, property: Property, mutation: Mutation) -> bool {
    if case.points.len() < 2 || ToleranceSchedule::new(case.schedule.clone()).is_err() {
        return false;
    }
    match check_case(full, case, mutation) {
        Ok(c) => c.failed.iter().any(|(p, _)| *p == property),
        Err(_) => false,
    }
}

fn without_position(case: &Case, p: usize) -> Case {
    let mut c = case.clone();
    c.prefix.remove(p);
    for stage in &mut c.schedule {
        if stage.1 > p {
            stage.1 -= 1;
        }
    }
    c
}

fn without_point(case: &Case, k: usize) -> Case {
    let x = case.points[k];
    let mut c = case.clone();
    c.points.remove(k);
    c.values.remove(k);
    let removed: Vec<usize> = c.prefix.iter().enumerate().filter(|(_, &y)| y == x).map(|(p, _)| p).collect();
    for &p in removed.iter().rev() {
        c = without_position(&c, p);
    }
    c
}

/// Greedy shrinking: repeatedly drop the first prefix position, then the
/// first point, whose removal keeps `property` failing.
fn shrink(full: &MetricSpace, mut case: Case, property: Property, mutation: Mutation) -> Result<Case> {
    'outer: loop {
        for p in 0..case.prefix.len() {
            let c = without_position(&case, p);
            if still_fails(full, &c, property, mutation) {
                case = c;
                continue 'outer;
            }
        }
        for k in 0..case.points.len() {
            let c = without_point(&case, k);
            if still_fails(full, &c, property, mutation) {
                case = c;
                continue 'outer;
            }
        }
        return Ok(case);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_space_is_deterministic() {
        let spec = RandomSpaceSpec { n: 10, generator: Generator::EuclideanCloud { dim: 2, scale: 1.0 }, seed: 42 };
        let a = random_space(&spec).unwrap();
        let b = random_space(&spec).unwrap();
        assert_eq!(a.distance_matrix(), b.distance_matrix());
        assert_eq!(a.len(), 10);
        let bad = RandomSpaceSpec { n: 1, ..spec };
        assert!(matches!(random_space(&bad), Err(Error::BadSpec(_))));
    }

    #[test]
    fn repaired_matrix_validates() {
        for seed in 0..20 {
            let spec = RandomSpaceSpec { n: 12, generator: Generator::RepairedMatrix { density: 0.4 }, seed };
            random_space(&spec).unwrap();
        }
    }

    #[test]
    fn oracle_extremes() {
        let s = MetricSpace::line(&[0.0, 1.0, 3.0, 3.5]).unwrap();
        assert_eq!(oracle_components(&s, 0.1).unwrap().len(), 4);
        assert_eq!(oracle_components(&s, 10.0).unwrap(), vec![vec![0, 1, 2, 3]]);
        let big = MetricSpace::line(&(0..65).map(f64::from).collect::<Vec<_>>()).unwrap();
        assert_eq!(oracle_components(&big, 1.0).unwrap_err(), Error::TooLarge { n: 65, limit: 64 });
    }

    #[test]
    fn enumeration_matches_path() {
        let s = MetricSpace::line(&[0.0, 1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(enumerate_chain_reach(&s, 1.5, 0, 2).unwrap(), vec![0, 1, 2]);
        assert!(enumerate_chain_reach(&s, 1.5, 0, 5).is_err());
    }

    #[test]
    fn single_trial_record() {
        let r = implication_suite(1, 3).unwrap();
        assert_eq!(r.records.len(), 1);
        assert!(implication_suite(0, 3).is_err());
    }

    #[test]
    fn flipped_comparator_is_caught_and_shrunk() {
        let r = implication_suite_with(40, 11, Mutation::FlipComparator, Execution::Sequential).unwrap();
        assert!(!r.passed());
        for v in &r.violations {
            assert!(v.shrunk.prefix.len() <= v.original_prefix);
            assert!(v.shrunk.points.len() <= v.original_points);
        }
        assert!(r.violations.iter().any(|v| v.shrunk.prefix.len() < v.original_prefix));
    }
}
