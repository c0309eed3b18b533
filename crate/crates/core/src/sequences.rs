//! Finite-prefix sequence classification and the two chain constructions.
//!
//! A limit statement such as "for every eps there is n0 with ..." is checked
//! against a [`ToleranceSchedule`] of `(eps_j, n_j)` stages. A prefix can only
//! be *consistent* with a schedule or *falsified* by it; consistency is never a
//! proof about the infinite sequence.
//!
//! A stage whose tail holds fewer than two positions has nothing to check and
//! counts as consistent for every test.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::chain_graph::ChainGraph;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::metric::MetricSpace;

/// Ordered point indices standing in for a sequence `(x_n)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SequencePrefix {
    pub indices: Vec<usize>,
}

impl SequencePrefix {
    pub fn new(space: &MetricSpace, indices: Vec<usize>) -> Result<Self> {
        check_prefix(space, &indices)?;
        Ok(SequencePrefix { indices })
    }
}

fn check_prefix(space: &MetricSpace, prefix: &[usize]) -> Result<()> {
    prefix.iter().try_for_each(|&i| space.check_index(i))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stage {
    pub eps: f64,
    pub start: usize,
}

/// Stages `(eps_j, n_j)` with `eps` strictly decreasing and `n` strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct ToleranceSchedule {
    stages: Vec<Stage>,
}

impl ToleranceSchedule {
    pub fn new(pairs: Vec<(f64, usize)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::BadSchedule("schedule has no stages".into()));
        }
        for (j, &(eps, _)) in pairs.iter().enumerate() {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(Error::BadSchedule(format!("stage {j}: eps {eps} is not positive")));
            }
        }
        for (j, w) in pairs.windows(2).enumerate() {
            if w[1].0 >= w[0].0 {
                return Err(Error::BadSchedule(format!("stage {}: eps must strictly decrease", j + 1)));
            }
            if w[1].1 <= w[0].1 {
                return Err(Error::BadSchedule(format!("stage {}: start must strictly increase", j + 1)));
            }
        }
        Ok(ToleranceSchedule { stages: pairs.into_iter().map(|(eps, start)| Stage { eps, start }).collect() })
    }

    /// `eps_j = diameter * 2^-j`, `n_j = j * (len / (stages + 1))`.
    pub fn default_for(space: &MetricSpace, len: usize, stages: usize) -> Result<Self> {
        if stages == 0 {
            return Err(Error::BadSchedule("need at least one stage".into()));
        }
        let step = len / (stages + 1);
        if step == 0 && stages > 1 {
            return Err(Error::BadSchedule(format!("prefix of length {len} is too short for {stages} stages")));
        }
        let diam = space.diameter();
        if diam <= 0.0 {
            return Err(Error::BadSchedule("space has zero diameter".into()));
        }
        Self::new((0..stages).map(|j| (diam * 0.5f64.powi(j as i32), j * step)).collect())
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    pub fn pairs(&self) -> Vec<(f64, usize)> {
        self.stages.iter().map(|s| (s.eps, s.start)).collect()
    }

    /// Index of the last stage with `n_j <= k`.
    pub fn stage_at(&self, k: usize) -> Option<usize> {
        self.stages.iter().rposition(|s| s.start <= k)
    }

    /// The schedule seen by the subrange starting at position `offset`.
    /// Stages already in force at `offset` collapse onto the tightest one.
    pub fn restricted_from(&self, offset: usize) -> Self {
        let first = self.stage_at(offset).unwrap_or(0);
        let stages =
            self.stages[first..].iter().map(|s| Stage { eps: s.eps, start: s.start.saturating_sub(offset) }).collect();
        ToleranceSchedule { stages }
    }

    fn check_against(&self, len: usize) -> Result<()> {
        if len < 2 {
            return Err(Error::ShortPrefix(len));
        }
        if self.stages[0].start >= len {
            return Err(Error::BadSchedule(format!(
                "first stage starts at {} beyond prefix length {len}",
                self.stages[0].start
            )));
        }
        Ok(())
    }
}

impl Serialize for ToleranceSchedule {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.pairs().serialize(s)
    }
}

impl<'de> Deserialize<'de> for ToleranceSchedule {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let pairs = Vec::<(f64, usize)>::deserialize(d)?;
        ToleranceSchedule::new(pairs).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Consistent,
    Falsified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub stage: usize,
    /// Prefix position of the offending point.
    pub index: usize,
    pub partner: Option<usize>,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: Status,
    pub witness: Option<Witness>,
}

impl Verdict {
    fn consistent() -> Self {
        Verdict { status: Status::Consistent, witness: None }
    }

    fn falsified(w: Witness) -> Self {
        Verdict { status: Status::Falsified, witness: Some(w) }
    }

    pub fn is_consistent(&self) -> bool {
        self.status == Status::Consistent
    }
}

/// Stage `j` requires `d(x_k, x_{k+1}) < eps_j` for every `k >= n_j`.
pub fn quasi_cauchy_test(space: &MetricSpace, prefix: &[usize], schedule: &ToleranceSchedule) -> Result<Verdict> {
    check_prefix(space, prefix)?;
    schedule.check_against(prefix.len())?;
    for (j, st) in schedule.stages().iter().enumerate() {
        for k in st.start..prefix.len().saturating_sub(1) {
            let gap = space.d(prefix[k], prefix[k + 1]);
            if gap >= st.eps {
                return Ok(Verdict::falsified(Witness { stage: j, index: k, partner: Some(k + 1), gap }));
            }
        }
    }
    Ok(Verdict::consistent())
}

/// Stage `j` requires `d(x_k, x_l) < eps_j` for every `k, l >= n_j`.
pub fn cauchy_test(space: &MetricSpace, prefix: &[usize], schedule: &ToleranceSchedule) -> Result<Verdict> {
    check_prefix(space, prefix)?;
    schedule.check_against(prefix.len())?;
    let len = prefix.len();
    for (j, st) in schedule.stages().iter().enumerate() {
        let start = st.start.min(len);
        let hits = Execution::default().map_range(len - start, |a| {
            let k = start + a;
            (k + 1..len)
                .map(|l| (l, space.d(prefix[k], prefix[l])))
                .find(|&(_, gap)| gap >= st.eps)
                .map(|(l, gap)| (k, l, gap))
        });
        if let Some((k, l, gap)) = hits.into_iter().flatten().next() {
            return Ok(Verdict::falsified(Witness { stage: j, index: k, partner: Some(l), gap }));
        }
    }
    Ok(Verdict::consistent())
}

/// Stage `j` requires two distinct positions `k, l >= n_j` with `d(x_k, x_l) < eps_j`.
pub fn pseudo_cauchy_test(space: &MetricSpace, prefix: &[usize], schedule: &ToleranceSchedule) -> Result<Verdict> {
    check_prefix(space, prefix)?;
    schedule.check_against(prefix.len())?;
    let len = prefix.len();
    for (j, st) in schedule.stages().iter().enumerate() {
        if st.start + 2 > len {
            continue;
        }
        let mut best = (f64::INFINITY, st.start, st.start + 1);
        'scan: for k in st.start..len {
            for l in k + 1..len {
                let gap = space.d(prefix[k], prefix[l]);
                if gap < best.0 {
                    best = (gap, k, l);
                    if gap < st.eps {
                        break 'scan;
                    }
                }
            }
        }
        if best.0 >= st.eps {
            return Ok(Verdict::falsified(Witness { stage: j, index: best.1, partner: Some(best.2), gap: best.0 }));
        }
    }
    Ok(Verdict::consistent())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BqcVerdict {
    pub status: Status,
    /// Smallest position from which the prefix stays in one chain component.
    pub n0: Option<usize>,
    /// Smallest point index of that component.
    pub center: Option<usize>,
}

/// Tail test at one scale using chains through the whole space.
pub fn bourbaki_qc_test(space: &MetricSpace, prefix: &[usize], eps: f64) -> Result<BqcVerdict> {
    check_prefix(space, prefix)?;
    let graph = ChainGraph::build(space, eps)?;
    bourbaki_qc_in_graph(&graph, prefix)
}

pub fn bourbaki_qc_in_graph(graph: &ChainGraph<'_>, prefix: &[usize]) -> Result<BqcVerdict> {
    check_prefix(graph.space(), prefix)?;
    let Some(&last) = prefix.last() else {
        return Err(Error::ShortPrefix(0));
    };
    let label = graph.component_label(last);
    let n0 = prefix.iter().rposition(|&x| graph.component_label(x) != label).map_or(0, |p| p + 1);
    if prefix.len() >= 2 && n0 == prefix.len() - 1 {
        return Ok(BqcVerdict { status: Status::Falsified, n0: None, center: None });
    }
    Ok(BqcVerdict { status: Status::Consistent, n0: Some(n0), center: Some(label) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Splice {
    pub prefix: Vec<usize>,
    /// `embedding[k]` is the output position of input position `k`.
    pub embedding: Vec<usize>,
    pub schedule: ToleranceSchedule,
}

/// Inserts shortest chains between consecutive prefix points so that, from
/// each stage boundary on, every hop is below that stage's scale.
///
/// The pair at positions `(k, k+1)` is held to the scale of the last stage
/// with `n_j <= k`; pairs before the first stage are copied unchanged.
pub fn splice_to_quasi_cauchy(space: &MetricSpace, prefix: &[usize], schedule: &ToleranceSchedule) -> Result<Splice> {
    check_prefix(space, prefix)?;
    let Some(&first) = prefix.first() else {
        return Err(Error::ShortPrefix(0));
    };
    let mut graphs: BTreeMap<usize, ChainGraph<'_>> = BTreeMap::new();
    let mut out = vec![first];
    let mut embedding = vec![0];
    for k in 0..prefix.len() - 1 {
        let (a, b) = (prefix[k], prefix[k + 1]);
        if let Some(j) = schedule.stage_at(k) {
            let eps = schedule.stages()[j].eps;
            if space.d(a, b) >= eps {
                let graph = match graphs.entry(j) {
                    Entry::Occupied(e) => e.into_mut(),
                    Entry::Vacant(e) => e.insert(ChainGraph::build(space, eps)?),
                };
                let chain = graph.find_chain(a, b)?.ok_or(Error::NoChainAtScale { stage: j, pair: k })?;
                out.extend_from_slice(&chain.indices[1..chain.indices.len() - 1]);
            }
        }
        out.push(b);
        embedding.push(out.len() - 1);
    }
    let len = prefix.len();
    let shifted = schedule
        .stages()
        .iter()
        .map(|s| {
            let start = if s.start < len { embedding[s.start] } else { out.len() + (s.start - len) };
            (s.eps, start)
        })
        .collect();
    Ok(Splice { prefix: out, embedding, schedule: ToleranceSchedule::new(shifted)? })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComponentRule {
    /// Keep the component holding the most survivors; ties go to the
    /// component with the smallest representative index.
    #[default]
    Majority,
    /// Keep the component of the earliest surviving position.
    FirstNonempty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageComponent {
    pub stage: usize,
    pub eps: f64,
    /// Smallest point index of the kept component.
    pub component: usize,
    pub survivors: usize,
    pub discarded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extraction {
    /// Emitted prefix positions, strictly increasing, one per stage.
    pub positions: Vec<usize>,
    pub components: Vec<StageComponent>,
    /// Positions surviving every stage; all emitted positions come from here.
    pub survivors: Vec<usize>,
}

/// Finite analogue of the nested-index-set diagonal argument.
///
/// Pass one narrows the surviving positions stage by stage to a single chain
/// component at that stage's scale. Pass two emits, for each stage, the first
/// surviving position at or past `n_j` and past the previous emission.
pub fn extract_bqc_subsequence(
    space: &MetricSpace,
    prefix: &[usize],
    schedule: &ToleranceSchedule,
    rule: ComponentRule,
) -> Result<Extraction> {
    check_prefix(space, prefix)?;
    if prefix.len() < 2 {
        return Err(Error::ShortPrefix(prefix.len()));
    }
    let mut survivors: Vec<usize> = (0..prefix.len()).collect();
    let mut components = Vec::with_capacity(schedule.len());
    for (j, st) in schedule.stages().iter().enumerate() {
        let graph = ChainGraph::build(space, st.eps)?;
        let keep = match rule {
            ComponentRule::Majority => {
                let mut census: BTreeMap<usize, usize> = BTreeMap::new();
                for &p in &survivors {
                    *census.entry(graph.component_label(prefix[p])).or_default() += 1;
                }
                census.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))).map(|(&l, _)| l).unwrap_or(0)
            }
            ComponentRule::FirstNonempty => graph.component_label(prefix[survivors[0]]),
        };
        let before = survivors.len();
        survivors.retain(|&p| graph.component_label(prefix[p]) == keep);
        components.push(StageComponent {
            stage: j,
            eps: st.eps,
            component: keep,
            survivors: survivors.len(),
            discarded: before - survivors.len(),
        });
    }
    let mut positions = Vec::with_capacity(schedule.len());
    let mut next = 0;
    for (j, st) in schedule.stages().iter().enumerate() {
        let from = st.start.max(next);
        match survivors.iter().find(|&&p| p >= from) {
            Some(&p) => {
                positions.push(p);
                next = p + 1;
            }
            None => return Err(Error::Exhausted { completed_stages: j }),
        }
    }
    Ok(Extraction { positions, components, survivors })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> MetricSpace {
        MetricSpace::line(xs).unwrap()
    }

    fn sched(pairs: &[(f64, usize)]) -> ToleranceSchedule {
        ToleranceSchedule::new(pairs.to_vec()).unwrap()
    }

    fn harmonic(n: usize) -> Vec<f64> {
        let mut acc = 0.0;
        (1..=n)
            .map(|k| {
                acc += 1.0 / k as f64;
                acc
            })
            .collect()
    }

    #[test]
    fn schedule_validation() {
        assert!(ToleranceSchedule::new(vec![]).is_err());
        assert!(ToleranceSchedule::new(vec![(0.1, 0), (0.2, 1)]).is_err());
        assert!(ToleranceSchedule::new(vec![(0.2, 1), (0.1, 1)]).is_err());
        assert!(ToleranceSchedule::new(vec![(-0.2, 1)]).is_err());
        let s: ToleranceSchedule = serde_json::from_str("[[0.5, 1], [0.25, 4]]").unwrap();
        assert_eq!(s.pairs(), vec![(0.5, 1), (0.25, 4)]);
        assert_eq!(serde_json::to_string(&s).unwrap(), "[[0.5,1],[0.25,4]]");
        assert!(serde_json::from_str::<ToleranceSchedule>("[[0.5, 1], [0.5, 4]]").is_err());
        assert_eq!(s.stage_at(0), None);
        assert_eq!(s.stage_at(3), Some(0));
        assert_eq!(s.stage_at(9), Some(1));
    }

    #[test]
    fn default_schedule() {
        let s = line(&[0.0, 4.0]);
        let sch = ToleranceSchedule::default_for(&s, 10, 3).unwrap();
        assert_eq!(sch.pairs(), vec![(4.0, 0), (2.0, 2), (1.0, 4)]);
        assert!(ToleranceSchedule::default_for(&s, 2, 3).is_err());
    }

    #[test]
    fn harmonic_is_qc_not_cauchy() {
        let h = harmonic(500);
        let s = line(&h);
        let p: Vec<usize> = (0..500).collect();
        let v = quasi_cauchy_test(&s, &p, &sched(&[(0.1, 10), (0.01, 100)])).unwrap();
        assert!(v.is_consistent());
        let v = cauchy_test(&s, &p, &sched(&[(0.5, 10)])).unwrap();
        assert_eq!(v.status, Status::Falsified);
        let w = v.witness.unwrap();
        assert!(w.gap >= 0.5);
        assert_eq!(w.index, 10);
    }

    #[test]
    fn naturals_fail_qc_and_pseudo() {
        let ints: Vec<f64> = (1..=100).map(f64::from).collect();
        let s = line(&ints);
        let p: Vec<usize> = (0..100).collect();
        let v = quasi_cauchy_test(&s, &p, &sched(&[(0.5, 1)])).unwrap();
        assert_eq!(v.witness, Some(Witness { stage: 0, index: 1, partner: Some(2), gap: 1.0 }));
        let v = pseudo_cauchy_test(&s, &p, &sched(&[(0.5, 1)])).unwrap();
        assert_eq!(v.status, Status::Falsified);
        assert_eq!(v.witness.unwrap().gap, 1.0);
        assert_eq!(quasi_cauchy_test(&s, &[0], &sched(&[(0.5, 0)])).unwrap_err(), Error::ShortPrefix(1));
    }

    #[test]
    fn constant_prefix_is_consistent_everywhere() {
        let s = line(&[0.0, 3.0]);
        let p = vec![1; 20];
        let sch = sched(&[(1.0, 0), (1e-9, 5)]);
        assert!(quasi_cauchy_test(&s, &p, &sch).unwrap().is_consistent());
        assert!(cauchy_test(&s, &p, &sch).unwrap().is_consistent());
        assert!(pseudo_cauchy_test(&s, &p, &sch).unwrap().is_consistent());
    }

    #[test]
    fn reciprocal_prefix_is_cauchy() {
        let xs: Vec<f64> = (1..=1000).map(|n| 1.0 / n as f64).collect();
        let s = line(&xs);
        let p: Vec<usize> = (0..1000).collect();
        assert!(cauchy_test(&s, &p, &sched(&[(0.1, 20)])).unwrap().is_consistent());
    }

    #[test]
    fn interleaved_pairs_are_pseudo_cauchy() {
        // x_n = n, y_n = n + 1/n
        let mut xs = Vec::new();
        for n in 1..=40 {
            xs.push(n as f64);
            xs.push(n as f64 + 1.0 / n as f64);
        }
        let s = line(&xs);
        let p: Vec<usize> = (0..xs.len()).collect();
        assert!(pseudo_cauchy_test(&s, &p, &sched(&[(0.1, 20)])).unwrap().is_consistent());
        assert!(!quasi_cauchy_test(&s, &p, &sched(&[(0.1, 20)])).unwrap().is_consistent());
    }

    #[test]
    fn bqc_cases() {
        let ints: Vec<f64> = (1..=50).map(f64::from).collect();
        let s = line(&ints);
        let p: Vec<usize> = (0..50).collect();
        assert_eq!(bourbaki_qc_test(&s, &p, 0.5).unwrap().status, Status::Falsified);

        let grid: Vec<f64> = (0..=490).map(|k| 1.0 + 49.0 * k as f64 / 490.0).collect();
        let g = line(&grid);
        let ints_in_grid: Vec<usize> = (0..50).map(|i| 10 * i).collect();
        let v = bourbaki_qc_test(&g, &ints_in_grid, 0.2).unwrap();
        assert_eq!((v.status, v.n0, v.center), (Status::Consistent, Some(0), Some(0)));

        // tail eventually settles in the right cluster
        let s = line(&[0.0, 0.1, 10.0, 10.1]);
        let v = bourbaki_qc_test(&s, &[0, 2, 1, 2, 3, 2], 0.5).unwrap();
        assert_eq!(v.n0, Some(3));
        assert_eq!(v.center, Some(2));
    }

    #[test]
    fn splice_walks_the_grid() {
        let grid: Vec<f64> = (0..=20).map(|k| 2.0 * k as f64 / 20.0).collect();
        let s = line(&grid);
        let out = splice_to_quasi_cauchy(&s, &[10, 20], &sched(&[(0.15, 0)])).unwrap();
        assert_eq!(out.prefix, (10..=20).collect::<Vec<_>>());
        assert_eq!(out.embedding, vec![0, 10]);
        assert!(quasi_cauchy_test(&s, &out.prefix, &out.schedule).unwrap().is_consistent());
    }

    #[test]
    fn splice_identity_and_failure() {
        let s = line(&[0.0, 0.1, 0.2, 5.0]);
        let out = splice_to_quasi_cauchy(&s, &[0, 1, 2], &sched(&[(0.5, 0)])).unwrap();
        assert_eq!(out.prefix, vec![0, 1, 2]);
        assert_eq!(out.embedding, vec![0, 1, 2]);
        assert_eq!(out.schedule, sched(&[(0.5, 0)]));
        let err = splice_to_quasi_cauchy(&s, &[0, 3], &sched(&[(0.5, 0)])).unwrap_err();
        assert_eq!(err, Error::NoChainAtScale { stage: 0, pair: 0 });
    }

    #[test]
    fn extraction_keeps_majority_cluster() {
        let mut xs: Vec<f64> = (0..20).map(|i| 0.05 * i as f64).collect();
        xs.extend((0..20).map(|i| 100.0 + 0.05 * i as f64));
        let s = line(&xs);
        // 25 positions in B, 15 in A, interleaved
        let mut p = Vec::new();
        for i in 0..20 {
            p.push(20 + i);
            if i < 15 {
                p.push(i);
            }
        }
        p.extend(20..25);
        let out = extract_bqc_subsequence(&s, &p, &sched(&[(0.1, 0)]), ComponentRule::Majority).unwrap();
        assert!(out.survivors.iter().all(|&pos| p[pos] >= 20));
        assert_eq!(out.components[0].component, 20);
        assert_eq!(out.components[0].discarded, 15);
        let first =
            extract_bqc_subsequence(&s, &[0, 20, 21], &sched(&[(0.1, 0)]), ComponentRule::FirstNonempty).unwrap();
        assert_eq!(first.survivors, vec![0]);
    }

    #[test]
    fn extraction_single_cluster_and_exhaustion() {
        let xs: Vec<f64> = (0..10).map(|i| 0.01 * i as f64).collect();
        let s = line(&xs);
        let p: Vec<usize> = (0..10).collect();
        let out =
            extract_bqc_subsequence(&s, &p, &sched(&[(1.0, 0), (0.5, 3), (0.25, 6)]), ComponentRule::Majority).unwrap();
        assert_eq!(out.positions, vec![0, 3, 6]);
        assert!(out.components.iter().all(|c| c.discarded == 0));
        let err =
            extract_bqc_subsequence(&s, &[0, 1], &sched(&[(1.0, 0), (0.5, 1), (0.25, 2)]), ComponentRule::Majority)
                .unwrap_err();
        assert_eq!(err, Error::Exhausted { completed_stages: 2 });
    }

    #[test]
    fn restricted_schedule() {
        let s = sched(&[(1.0, 0), (0.5, 3), (0.25, 6)]);
        assert_eq!(s.restricted_from(4).pairs(), vec![(0.5, 0), (0.25, 2)]);
        assert_eq!(s.restricted_from(0).pairs(), s.pairs());
    }
}
