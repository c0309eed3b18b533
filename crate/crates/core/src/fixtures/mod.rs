//! Deterministic example spaces, sequences and functions.
//!
//! Each fixture is addressed by name and size, and generation is a pure
//! function of the [`FixtureSpec`]. Points within a fixture are listed in the
//! fixture's natural enumeration, which is also its canonical prefix.

mod claims;

pub use claims::{canonical_claims, check_claims, verification_specs, Claim, ClaimResult};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{MetricSpace, SparseVector};
use crate::moduli::{spike_function, ScalarFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FixtureName {
    BoundedLine,
    SegmentChain,
    TentFamily,
    HarmonicSums,
    SqrtSpace,
    NaturalsPlus,
    ScaledUnitVectors,
    GridInterval,
    SlowSpikeGrid,
}

impl FixtureName {
    pub const ALL: [FixtureName; 9] = [
        FixtureName::BoundedLine,
        FixtureName::SegmentChain,
        FixtureName::TentFamily,
        FixtureName::HarmonicSums,
        FixtureName::SqrtSpace,
        FixtureName::NaturalsPlus,
        FixtureName::ScaledUnitVectors,
        FixtureName::GridInterval,
        FixtureName::SlowSpikeGrid,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FixtureName::BoundedLine => "bounded-line",
            FixtureName::SegmentChain => "segment-chain",
            FixtureName::TentFamily => "tent-family",
            FixtureName::HarmonicSums => "harmonic-sums",
            FixtureName::SqrtSpace => "sqrt-space",
            FixtureName::NaturalsPlus => "naturals-plus",
            FixtureName::ScaledUnitVectors => "scaled-unit-vectors",
            FixtureName::GridInterval => "grid-interval",
            FixtureName::SlowSpikeGrid => "slow-spike-grid",
        }
    }

    pub fn default_size(self) -> usize {
        match self {
            FixtureName::BoundedLine => 10,
            FixtureName::SegmentChain => 12,
            FixtureName::TentFamily => 10,
            FixtureName::HarmonicSums => 500,
            FixtureName::SqrtSpace => 50,
            FixtureName::NaturalsPlus => 50,
            FixtureName::ScaledUnitVectors => 12,
            FixtureName::GridInterval => 100,
            FixtureName::SlowSpikeGrid => 200,
        }
    }

    fn variants(self) -> &'static [&'static str] {
        match self {
            FixtureName::TentFamily => &["steps", "ramps"],
            FixtureName::ScaledUnitVectors => &["unit-rays", "shifted", "sqrt-shifted"],
            _ => &[],
        }
    }
}

impl fmt::Display for FixtureName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FixtureName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FixtureName::ALL.into_iter().find(|n| n.as_str() == s).ok_or_else(|| Error::UnknownFixture(s.to_string()))
    }
}

/// Optional per-fixture parameters; unset fields take fixture defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FixtureParams {
    /// `tent-family`: `steps` (default) or `ramps`;
    /// `scaled-unit-vectors`: `unit-rays` (default), `shifted` or `sqrt-shifted`.
    pub variant: Option<String>,
    /// `bounded-line` metric cap (default 1).
    pub cap: Option<f64>,
    /// `bounded-line` point spacing (default 0.1); `unit-rays` radius step (default 0.05).
    pub step: Option<f64>,
    /// `shifted` / `sqrt-shifted`: largest `k` (default `n`).
    pub k_max: Option<usize>,
    /// `ramps` domain size (default 300).
    pub grid: Option<usize>,
    /// `grid-interval` endpoints (default 0 and 1).
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    /// `slow-spike-grid` spike count (default `n / 10`).
    pub spikes: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureSpec {
    pub name: FixtureName,
    pub n: usize,
    pub subdiv: usize,
    #[serde(default)]
    pub params: FixtureParams,
}

impl FixtureSpec {
    pub fn new(name: FixtureName, n: usize) -> Self {
        FixtureSpec { name, n, subdiv: 1, params: FixtureParams::default() }
    }

    pub fn with_subdiv(mut self, subdiv: usize) -> Self {
        self.subdiv = subdiv;
        self
    }

    pub fn with_variant(mut self, variant: &str) -> Self {
        self.params.variant = Some(variant.to_string());
        self
    }

    pub fn with_params(mut self, params: FixtureParams) -> Self {
        self.params = params;
        self
    }

    fn variant(&self) -> Result<&str> {
        let allowed = self.name.variants();
        match self.params.variant.as_deref() {
            None => Ok(allowed.first().copied().unwrap_or("")),
            Some(v) if allowed.contains(&v) => Ok(v),
            Some(v) => Err(Error::BadParam(format!("{} has no variant {v:?}", self.name))),
        }
    }
}

/// A generated fixture.
#[derive(Debug, Clone, PartialEq)]
pub struct FixtureOutput {
    pub spec: FixtureSpec,
    pub space: MetricSpace,
    /// The natural enumeration, as point indices.
    pub prefix: Vec<usize>,
    pub function: Option<ScalarFunction>,
    /// For function-family fixtures, the common domain of the family members.
    pub domain: Option<MetricSpace>,
    /// Named points such as `e8`.
    pub landmarks: BTreeMap<String, usize>,
    /// Fixture-specific point groups (segments, blocks, rays).
    pub blocks: Vec<Vec<usize>>,
}

impl FixtureOutput {
    fn plain(spec: &FixtureSpec, space: MetricSpace) -> Self {
        let prefix = (0..space.len()).collect();
        FixtureOutput {
            spec: spec.clone(),
            space,
            prefix,
            function: None,
            domain: None,
            landmarks: BTreeMap::new(),
            blocks: Vec::new(),
        }
    }

    fn with_function(mut self, values: Vec<f64>) -> Result<Self> {
        self.function = Some(ScalarFunction::new(&self.space, values)?);
        Ok(self)
    }

    /// Domain functions of a family fixture, one per family member.
    pub fn family(&self) -> Option<Vec<ScalarFunction>> {
        self.domain.as_ref()?;
        let rows = self.space.dense_points()?;
        Some(rows.iter().map(|r| ScalarFunction { values: r.clone() }).collect())
    }

    pub fn landmark(&self, name: &str) -> Option<usize> {
        self.landmarks.get(name).copied()
    }
}

pub fn generate(spec: &FixtureSpec) -> Result<FixtureOutput> {
    if spec.n == 0 {
        return Err(Error::BadParam("fixture size must be positive".into()));
    }
    if spec.subdiv == 0 {
        return Err(Error::BadParam("subdiv must be positive".into()));
    }
    if spec.subdiv != 1 && spec.name != FixtureName::SegmentChain {
        return Err(Error::BadParam(format!("subdiv applies only to segment-chain, not {}", spec.name)));
    }
    let variant = spec.variant()?;
    match spec.name {
        FixtureName::BoundedLine => bounded_line(spec),
        FixtureName::SegmentChain => segment_chain(spec),
        FixtureName::TentFamily if variant == "ramps" => ramps(spec),
        FixtureName::TentFamily => tent_steps(spec),
        FixtureName::HarmonicSums => harmonic_sums(spec),
        FixtureName::SqrtSpace => sqrt_space(spec),
        FixtureName::NaturalsPlus => naturals_plus(spec),
        FixtureName::ScaledUnitVectors => match variant {
            "shifted" => shifted_vectors(spec, |n| n as f64),
            "sqrt-shifted" => shifted_vectors(spec, |n| (n as f64).sqrt()),
            _ => unit_rays(spec),
        },
        FixtureName::GridInterval => grid_interval(spec),
        FixtureName::SlowSpikeGrid => slow_spike_grid(spec),
    }
}

fn positive(name: &str, x: f64) -> Result<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(Error::BadParam(format!("{name} must be positive, got {x}")))
    }
}

/// Reals `0, step, 2 step, ..., n` under `min(cap, |x - y|)`.
fn bounded_line(spec: &FixtureSpec) -> Result<FixtureOutput> {
    let cap = positive("cap", spec.params.cap.unwrap_or(1.0))?;
    let step = positive("step", spec.params.step.unwrap_or(0.1))?;
    let per_unit = (1.0 / step).round().max(1.0) as usize;
    let count = spec.n * per_unit;
    let xs: Vec<f64> = (0..=count).map(|k| k as f64 / per_unit as f64).collect();
    Ok(FixtureOutput::plain(spec, MetricSpace::bounded_line(&xs, cap)?))
}

/// Points `(1 - t) e_a + t e_b` with `t = k / steps`, `k = 0..=steps`, skipping
/// `k = 0` when `skip_first` is set.
fn segment_points(a: usize, b: usize, steps: usize, skip_first: bool) -> Vec<SparseVector> {
    let from = usize::from(skip_first);
    (from..=steps)
        .map(|k| {
            let t = k as f64 / steps as f64;
            SparseVector::new([(a, 1.0 - t), (b, t)])
        })
        .collect()
}

/// Segments `X_n` from `e_n` to `e_{n+1}` in `l^inf`, `n = 1..=N`, each cut into
/// `subdiv * (n + 1)` equal steps. Shared endpoints appear once, and segments
/// are listed in order so that consecutive points are one step apart.
fn segment_chain(spec: &FixtureSpec) -> Result<FixtureOutput> {
    let mut points = Vec::new();
    let mut blocks = Vec::new();
    let mut landmarks = BTreeMap::new();
    for n in 1..=spec.n {
        let steps = spec.subdiv * (n + 1);
        let start = points.len().saturating_sub(1);
        if n == 1 {
            landmarks.insert("e1".to_string(), 0);
        }
        points.extend(segment_points(n, n + 1, steps, n > 1));
        blocks.push((start..points.len()).collect());
        landmarks.insert(format!("e{}", n + 1), points.len() - 1);
    }
    let space = MetricSpace::sup_norm(points)?;
    let mut out = FixtureOutput::plain(spec, space);
    out.blocks = blocks;
    out.landmarks = landmarks;
    Ok(out)
}

/// The family `f^n_k` on `X = {1/m} ∪ {0}`: `f^n_k(1/n) = 1 - k/(n+1)`,
/// `f^n_k(1/(n+1)) = k/(n+1)`, zero elsewhere, for `n = 1..=N`, `k = 0..=n+1`.
/// `f^n_{n+1} = f^{n+1}_0` is listed once.
fn tent_steps(spec: &FixtureSpec) -> Result<FixtureOutput> {
    let big = spec.n;
    // domain: 1/1, 1/2, ..., 1/(N+1), 0
    let mut xs: Vec<f64> = (1..=big + 1).map(|m| 1.0 / m as f64).collect();
    xs.push(0.0);
    let domain = MetricSpace::line(&xs)?;
    let width = xs.len();
    let mut rows = Vec::new();
    let mut blocks = Vec::new();
    for n in 1..=big {
        let steps = n + 1;
        let start = rows.len().saturating_sub(1);
        for k in usize::from(n > 1)..=steps {
            let mut row = vec![0.0; width];
            let t = k as f64 / steps as f64;
            row[n - 1] = 1.0 - t;
            row[n] = t;
            rows.push(row);
        }
        blocks.push((start..rows.len()).collect());
    }
    let space = MetricSpace::function_sup(rows)?;
    let mut out = FixtureOutput::plain(spec, space);
    out.domain = Some(domain);
    out.blocks = blocks;
    Ok(out)
}

/// Grid of `[0, 1]` holding `0`, every `1/k` for `k <= kinks`, and a uniform
/// grid, sized to `target` points when possible.
fn ramp_domain(kinks: usize, target: usize) -> Vec<f64> {
    let build = |m: usize| {
        let mut xs: Vec<f64> = (0..m).map(|k| k as f64 / (m - 1) as f64).collect();
        xs.extend((1..=kinks).map(|k| 1.0 / k as f64));
        xs.push(0.0);
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        xs
    };
    let mut m = target.saturating_sub(kinks + 1).max(2);
    loop {
        let xs = build(m);
        if xs.len() >= target {
            return xs;
        }
        m += 1;
    }
}

/// `f_n(x) = min(n x, 1)` for `n = 1..=N` on a grid of `[0, 1]`, as points of
/// the sup-distance space of functions on that grid.
fn ramps(spec: &FixtureSpec) -> Result<FixtureOutput> {
    let target = spec.params.grid.unwrap_or(300);
    if target < spec.n + 2 {
        return Err(Error::BadParam(format!("grid of {target} points is too small for {} ramps", spec.n)));
    }
    let xs = ramp_domain(spec.n + 1, target);
    let domain = MetricSpace::line(&xs)?;
    let rows: Vec<Vec<f64>> = (1..=spec.n).map(|n| xs.iter().map(|&x| (n as f64 * x).min(1.0)).collect()).collect();
    let space = MetricSpace::function_sup(rows)?;
    let mut out = FixtureOutput::plain(spec, space);
    for k in 1..=spec.n + 1 {
        if let Some(i) = xs.iter().position(|&x| x == 1.0 / k as f64) {
            out.landmarks.insert(format!("x1/{k}"), i);
        }
    }
    out.landmarks.insert("x0".into(), 0);
    out.domain = Some(domain);
    Ok(out)
}

/// Partial sums `H_1, ..., H_N` with `f(H_n) = sqrt(n)`.
fn harmonic_sums(spec: &FixtureSpec) -> Result<FixtureOutput> {
    let mut acc = 0.0;
    let xs: Vec<f64> = (1..=spec.n)
        .map(|k| {
            acc += 1.0 / k as f64;
            acc
        })
        .collect();
    FixtureOutput::plain(spec, MetricSpace::line(&xs)?).with_function((1..=spec.n).map(|k| (k as f64).sqrt()).collect())
}

/// `{sqrt(n) : n = 1..=N}` with the indicator of even `n`.
fn sqrt_space(spec: &FixtureSpec) -> Result<FixtureOutput> {
    let xs: Vec<f64> = (1..=spec.n).map(|k| (k as f64).sqrt()).collect();
    FixtureOutput::plain(spec, MetricSpace::line(&xs)?)
        .with_function((1..=spec.n).map(|k| if k % 2 == 0 { 1.0 } else { 0.0 }).collect())
}

/// `{1..=N} ∪ {n + 1/n : 2 <= n <= N}` with the indicator of the integers.
/// `1 + 1/1 = 2` is already an integer and is not repeated.
fn naturals_plus(spec: &FixtureSpec) -> Result<FixtureOutput> {
    let mut xs = Vec::new();
    let mut chi = Vec::new();
    let mut landmarks = BTreeMap::new();
    for n in 1..=spec.n {
        landmarks.insert(format!("{n}"), xs.len());
        xs.push(n as f64);
        chi.push(1.0);
        if n > 1 {
            landmarks.insert(format!("{n}+1/{n}"), xs.len());
            xs.push(n as f64 + 1.0 / n as f64);
            chi.push(0.0);
        }
    }
    let mut out = FixtureOutput::plain(spec, MetricSpace::line(&xs)?).with_function(chi)?;
    out.landmarks = landmarks;
    Ok(out)
}

/// `{r e_n : n = 1..=N, r in {0, step, ..., 1}}` with the origin listed once.
fn unit_rays(spec: &FixtureSpec) -> Result<FixtureOutput> {
    let step = positive("step", spec.params.step.unwrap_or(0.05))?;
    let per_ray = (1.0 / step).round().max(1.0) as usize;
    let mut points = vec![SparseVector::zero()];
    let mut blocks = Vec::new();
    let mut landmarks = BTreeMap::new();
    landmarks.insert("0".to_string(), 0);
    for n in 1..=spec.n {
        let start = points.len();
        for k in 1..=per_ray {
            points.push(SparseVector::new([(n, k as f64 / per_ray as f64)]));
        }
        landmarks.insert(format!("e{n}"), points.len() - 1);
        blocks.push((start..points.len()).collect());
    }
    let mut out = FixtureOutput::plain(spec, MetricSpace::sup_norm(points)?);
    out.blocks = blocks;
    // canonical prefix: the unit vectors e_1, e_2, ...
    out.prefix = (1..=spec.n).map(|n| landmarks[&format!("e{n}")]).collect();
    out.landmarks = landmarks;
    Ok(out)
}

/// `{a(n) e_1 + (1/n) e_k : n, k = 1..=N}` with `f = n^k`, blocked by `n`.
fn shifted_vectors(spec: &FixtureSpec, a: fn(usize) -> f64) -> Result<FixtureOutput> {
    let k_max = spec.params.k_max.unwrap_or(spec.n);
    if k_max == 0 {
        return Err(Error::BadParam("k_max must be positive".into()));
    }
    let mut points = Vec::new();
    let mut values = Vec::new();
    let mut blocks = Vec::new();
    for n in 1..=spec.n {
        let start = points.len();
        for k in 1..=k_max {
            let mut v = SparseVector::new([(1, a(n))]);
            v.set(k, v.get(k) + 1.0 / n as f64);
            points.push(v);
            values.push((n as f64).powi(k as i32));
        }
        blocks.push((start..points.len()).collect());
    }
    let mut out = FixtureOutput::plain(spec, MetricSpace::sup_norm(points)?).with_function(values)?;
    // canonical prefix runs along k = 2, where f = n^2
    let k = k_max.min(2) - 1;
    out.prefix = blocks.iter().map(|b: &Vec<usize>| b[k]).collect();
    out.blocks = blocks;
    Ok(out)
}

/// `N` equal steps on `[lo, hi]` with the identity function.
fn grid_interval(spec: &FixtureSpec) -> Result<FixtureOutput> {
    let lo = spec.params.lo.unwrap_or(0.0);
    let hi = spec.params.hi.unwrap_or(1.0);
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::BadParam(format!("need lo < hi, got [{lo}, {hi}]")));
    }
    let xs: Vec<f64> = (0..=spec.n).map(|k| lo + (hi - lo) * k as f64 / spec.n as f64).collect();
    FixtureOutput::plain(spec, MetricSpace::line(&xs)?).with_function(xs)
}

/// Grid of `[0, 1]` with `N` steps carrying spikes of height `k` at evenly
/// spaced centers; each spike's radius is a quarter of the center spacing.
fn slow_spike_grid(spec: &FixtureSpec) -> Result<FixtureOutput> {
    let spikes = spec.params.spikes.unwrap_or((spec.n / 10).max(1));
    if spikes == 0 || spikes + 1 > spec.n {
        return Err(Error::BadParam(format!("{spikes} spikes do not fit a grid of {} steps", spec.n)));
    }
    let xs: Vec<f64> = (0..=spec.n).map(|k| k as f64 / spec.n as f64).collect();
    let space = MetricSpace::line(&xs)?;
    let spacing = spec.n / (spikes + 1);
    let centers: Vec<usize> = (1..=spikes).map(|k| k * spacing).collect();
    let radius = 0.25 * spacing as f64 / spec.n as f64;
    let heights: Vec<f64> = (1..=spikes).map(|k| k as f64).collect();
    let f = spike_function(&space, &centers, &vec![radius; spikes], &heights)?;
    let mut out = FixtureOutput::plain(spec, space);
    out.function = Some(f);
    for (k, &c) in centers.iter().enumerate() {
        out.landmarks.insert(format!("c{}", k + 1), c);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for name in FixtureName::ALL {
            assert_eq!(name.as_str().parse::<FixtureName>().unwrap(), name);
        }
        assert_eq!("nope".parse::<FixtureName>().unwrap_err(), Error::UnknownFixture("nope".into()));
    }

    #[test]
    fn every_fixture_generates_deterministically() {
        for name in FixtureName::ALL {
            let spec = FixtureSpec::new(name, name.default_size().min(30));
            let a = generate(&spec).unwrap();
            let b = generate(&spec).unwrap();
            assert_eq!(a.space.distance_matrix(), b.space.distance_matrix(), "{name}");
            assert!(a.prefix.iter().all(|&i| i < a.space.len()));
        }
    }

    #[test]
    fn segment_spacing_matches_coordinates() {
        for subdiv in [1, 2, 4] {
            let out = generate(&FixtureSpec::new(FixtureName::SegmentChain, 6).with_subdiv(subdiv)).unwrap();
            for (n, block) in out.blocks.iter().enumerate() {
                let expected = 1.0 / (subdiv * (n + 2)) as f64;
                for w in block.windows(2) {
                    assert!((out.space.d(w[0], w[1]) - expected).abs() < 1e-15);
                }
            }
            assert_eq!(out.space.len(), 1 + (1..=6).map(|n| subdiv * (n + 1)).sum::<usize>());
            assert_eq!(out.landmark("e7"), Some(out.space.len() - 1));
        }
    }

    #[test]
    fn tent_steps_dedupes_shared_members() {
        let out = generate(&FixtureSpec::new(FixtureName::TentFamily, 10)).unwrap();
        // sum over n of (n + 2) members, minus the N - 1 shared ones
        let expected: usize = (1..=10).map(|n| n + 2).sum::<usize>() - 9;
        assert_eq!(out.space.len(), expected);
        assert_eq!(out.domain.as_ref().unwrap().len(), 12);
    }

    #[test]
    fn ramp_domain_hits_target() {
        let out = generate(&FixtureSpec::new(FixtureName::TentFamily, 30).with_variant("ramps")).unwrap();
        let domain = out.domain.as_ref().unwrap();
        assert_eq!(domain.len(), 300);
        assert_eq!(out.space.len(), 30);
        for k in 1..=31 {
            assert!(out.landmark(&format!("x1/{k}")).is_some());
        }
        assert!(generate(&FixtureSpec::new(FixtureName::TentFamily, 3).with_variant("bogus")).is_err());
    }

    #[test]
    fn naturals_plus_layout() {
        let out = generate(&FixtureSpec::new(FixtureName::NaturalsPlus, 50)).unwrap();
        assert_eq!(out.space.len(), 99);
        let (a, b) = (out.landmark("50").unwrap(), out.landmark("50+1/50").unwrap());
        assert!((out.space.d(a, b) - 0.02).abs() < 1e-12);
    }

    #[test]
    fn shifted_blocks_have_diameter_one_over_n() {
        let out = generate(&FixtureSpec::new(FixtureName::ScaledUnitVectors, 6).with_variant("shifted")).unwrap();
        for (i, block) in out.blocks.iter().enumerate() {
            let n = (i + 1) as f64;
            let diam = block
                .iter()
                .flat_map(|&a| block.iter().map(move |&b| (a, b)))
                .map(|(a, b)| out.space.d(a, b))
                .fold(0.0, f64::max);
            assert!((diam - 1.0 / n).abs() < 1e-12);
        }
    }

    #[test]
    fn subdiv_only_for_segments() {
        assert!(generate(&FixtureSpec::new(FixtureName::SqrtSpace, 5).with_subdiv(2)).is_err());
        assert!(generate(&FixtureSpec::new(FixtureName::SqrtSpace, 0)).is_err());
    }
}
