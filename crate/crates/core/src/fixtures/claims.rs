//! Checkable statements about fixtures.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{generate, FixtureName, FixtureOutput, FixtureSpec};
use crate::approximation::approximate;
use crate::chain_graph::{covering_profile, is_chainable, ChainGraph};
use crate::error::{Error, Result};
use crate::json::real;
use crate::metric::MetricSpace;
use crate::moduli::{
    equi_chain_continuity_check, equicontinuity_at, lits_modulus, local_lipschitz_profile, seq_lipschitz_constant,
    SeqMode,
};
use crate::sequences::{bourbaki_qc_test, cauchy_test, quasi_cauchy_test, Status, ToleranceSchedule};

const EXACT: f64 = 1e-12;
const RELATIVE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Claim {
    pub fixture: FixtureName,
    pub id: &'static str,
    /// The statement being checked, as a formula.
    pub anchor: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimResult {
    pub fixture: FixtureName,
    pub id: String,
    pub anchor: String,
    pub spec: FixtureSpec,
    pub passed: bool,
    pub detail: Value,
}

const fn claim(fixture: FixtureName, id: &'static str, anchor: &'static str) -> Claim {
    Claim { fixture, id, anchor }
}

/// Claims attached to the fixture and variant named by `spec`.
pub fn canonical_claims(spec: &FixtureSpec) -> Result<Vec<Claim>> {
    use FixtureName::*;
    let variant = spec.variant()?;
    let name = spec.name;
    Ok(match (name, variant) {
        (BoundedLine, _) => vec![
            claim(name, "bounded-by-cap", "d(x, y) <= cap"),
            claim(name, "hop-radius-grows", "m*(1.5 step) on [0, 2N] > m*(1.5 step) on [0, N]"),
        ],
        (SegmentChain, _) => vec![
            claim(name, "distance-half", "min over |i - j| >= 2 of d(X_i, X_j) = 1/2"),
            claim(name, "chain-length-bound", "every 1/4-chain from e_2n to e_2m has >= 2(m - n) - 1 steps"),
        ],
        (TentFamily, "ramps") => vec![
            claim(name, "oscillation-one-at-zero", "|f_n(1/n) - f_n(0)| = 1"),
            claim(name, "consecutive-gap", "d(f_n, f_n+1) = 1/(n + 1)"),
            claim(name, "equi-chain-continuous", "equi-chain continuous at eps = 0.2"),
            claim(name, "not-equicontinuous-at-zero", "some f_n oscillates by >= 1/2 within delta_0 of 0"),
        ],
        (TentFamily, _) => vec![
            claim(name, "distance-half", "min over |i - j| >= 2 of d(A_i, A_j) = 1/2"),
            claim(name, "quasi-cauchy-arrangement", "consecutive members of A_n are 1/(n + 1) apart"),
        ],
        (HarmonicSums, _) => vec![
            claim(name, "quasi-cauchy-not-cauchy", "H_n - H_n-1 -> 0 while H_n diverges"),
            claim(name, "qc-ratio-formula", "sup |Δf| / |ΔH| over consecutive terms = N / (sqrt N + sqrt(N - 1))"),
            claim(name, "approximation-within-eps", "sup |eps h - f| < eps at eps = 1/2"),
        ],
        (SqrtSpace, _) => vec![
            claim(name, "cauchy-lipschitz-on-evens", "f is constant along the even terms"),
            claim(name, "qc-constant-unbounded", "consecutive ratio at N = sqrt N + sqrt(N - 1)"),
        ],
        (NaturalsPlus, _) => vec![
            claim(name, "lits-grows-as-n", "sup over d < 1/4 of |Δf| / d = N, at (N, N + 1/N)"),
            claim(name, "local-constants-bounded-by-n", "Lip(f on B_1/4(n)) <= n and Lip(f on B_1/4(n + 1/n)) <= n"),
        ],
        (ScaledUnitVectors, "shifted") => vec![
            claim(name, "block-diameter", "diam {n e_1 + e_k / n : k} = 1/n"),
            claim(name, "local-constant-growth", "sup_x Lip(f on B_1/2(x)) grows with k_max"),
        ],
        (ScaledUnitVectors, "sqrt-shifted") => vec![
            claim(name, "block-diameter", "diam {sqrt(n) e_1 + e_k / n : k} = 1/n"),
            claim(name, "qc-constant-growth", "consecutive ratio along k = 2 grows with N"),
        ],
        (ScaledUnitVectors, _) => vec![
            claim(name, "chainable", "one chain component at eps = 1.5 step"),
            claim(name, "unit-vectors-bourbaki-quasi-cauchy", "all e_n share one chain component at eps = 1.5 step"),
        ],
        (GridInterval, _) => vec![],
        (SlowSpikeGrid, _) => vec![claim(name, "spike-peaks", "f(c_k) = k and f = 0 off the balls")],
    })
}

/// Specs covering every claim, at sizes where each claim is meaningful.
pub fn verification_specs() -> Vec<FixtureSpec> {
    use FixtureName::*;
    vec![
        FixtureSpec::new(BoundedLine, 10),
        FixtureSpec::new(SegmentChain, 12),
        FixtureSpec::new(SegmentChain, 16).with_subdiv(4),
        FixtureSpec::new(TentFamily, 10),
        FixtureSpec::new(TentFamily, 30).with_variant("ramps"),
        FixtureSpec::new(HarmonicSums, 500),
        FixtureSpec::new(SqrtSpace, 50),
        FixtureSpec::new(NaturalsPlus, 50),
        FixtureSpec::new(ScaledUnitVectors, 12),
        FixtureSpec::new(ScaledUnitVectors, 6).with_variant("shifted"),
        FixtureSpec::new(ScaledUnitVectors, 12).with_variant("sqrt-shifted"),
        FixtureSpec::new(SlowSpikeGrid, 200),
    ]
}

/// Evaluates every claim of `spec`. With `distance_scale != 1` all distances
/// are multiplied by that factor first, which most claims should detect.
pub fn check_claims(spec: &FixtureSpec, distance_scale: f64) -> Result<Vec<ClaimResult>> {
    let claims = canonical_claims(spec)?;
    let load = |spec: &FixtureSpec| -> Result<FixtureOutput> {
        let mut out = generate(spec)?;
        if distance_scale != 1.0 {
            out.space = out.space.with_distance_scale(distance_scale)?;
        }
        Ok(out)
    };
    let out = load(spec)?;
    claims
        .into_iter()
        .map(|c| {
            let (passed, detail) = evaluate(c.id, &out, &load)?;
            Ok(ClaimResult {
                fixture: c.fixture,
                id: c.id.to_string(),
                anchor: c.anchor.to_string(),
                spec: spec.clone(),
                passed,
                detail,
            })
        })
        .collect()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

fn need(n: usize, at_least: usize, what: &str) -> Result<()> {
    if n < at_least {
        return Err(Error::BadParam(format!("{what} needs n >= {at_least}, got {n}")));
    }
    Ok(())
}

/// `min d(a, b)` over `a in x`, `b in y`.
fn set_distance(space: &MetricSpace, x: &[usize], y: &[usize]) -> f64 {
    x.iter().flat_map(|&a| y.iter().map(move |&b| (a, b))).map(|(a, b)| space.d(a, b)).fold(f64::INFINITY, f64::min)
}

fn set_diameter(space: &MetricSpace, x: &[usize]) -> f64 {
    x.iter().flat_map(|&a| x.iter().map(move |&b| (a, b))).map(|(a, b)| space.d(a, b)).fold(0.0, f64::max)
}

fn distance_half(out: &FixtureOutput) -> Result<(bool, Value)> {
    need(out.blocks.len(), 3, "distance-half")?;
    let mut min = (f64::INFINITY, 0, 0);
    let mut max = 0.0f64;
    for i in 0..out.blocks.len() {
        for j in i + 2..out.blocks.len() {
            let d = set_distance(&out.space, &out.blocks[i], &out.blocks[j]);
            if d < min.0 {
                min = (d, i + 1, j + 1);
            }
            max = max.max(d);
        }
    }
    Ok((close(min.0, 0.5, EXACT), json!({ "min": min.0, "attained_at": [min.1, min.2], "max": max })))
}

type Loader<'a> = dyn Fn(&FixtureSpec) -> Result<FixtureOutput> + 'a;

fn evaluate(id: &str, out: &FixtureOutput, load: &Loader<'_>) -> Result<(bool, Value)> {
    let spec = &out.spec;
    let space = &out.space;
    let n = spec.n;
    match id {
        "bounded-by-cap" => {
            let cap = spec.params.cap.unwrap_or(1.0);
            let diam = space.diameter();
            Ok((diam <= cap + space.tol(), json!({ "diameter": diam, "cap": cap })))
        }
        "hop-radius-grows" => {
            let eps = 1.5 * spec.params.step.unwrap_or(0.1);
            let mut doubled = spec.clone();
            doubled.n = 2 * n;
            let small = covering_profile(space, eps)?;
            let large = covering_profile(&load(&doubled)?.space, eps)?;
            Ok((
                small.k == 1 && large.k == 1 && large.m_star > small.m_star,
                json!({ "eps": eps, "m_star": small.m_star, "m_star_doubled": large.m_star, "k": [small.k, large.k] }),
            ))
        }
        "distance-half" => distance_half(out),
        "chain-length-bound" => {
            let graph = ChainGraph::build(space, 0.25)?;
            let (mut checked, mut found) = (0, 0);
            let mut worst: Option<(i64, usize, usize)> = None;
            for a in 1..=n.div_ceil(2) {
                for b in a + 1..=n.div_ceil(2) {
                    let (x, y) = (out.landmarks[&format!("e{}", 2 * a)], out.landmarks[&format!("e{}", 2 * b)]);
                    checked += 1;
                    if let Some(chain) = graph.find_chain(x, y)? {
                        found += 1;
                        let slack = chain.len() as i64 - (2 * (b - a) as i64 - 1);
                        if worst.is_none_or(|w| slack < w.0) {
                            worst = Some((slack, 2 * a, 2 * b));
                        }
                    }
                }
            }
            Ok((
                worst.is_none_or(|w| w.0 >= 0),
                json!({ "pairs": checked, "connected": found, "min_slack": worst.map(|w| json!({"slack": w.0, "from": format!("e{}", w.1), "to": format!("e{}", w.2)})) }),
            ))
        }
        "quasi-cauchy-arrangement" => {
            // stage j starts at block 2^j with scale 1.5 / (2^j + 1)
            let mut pairs = Vec::new();
            let mut m = 1;
            while m <= out.blocks.len() {
                pairs.push((1.5 / (m + 1) as f64, out.blocks[m - 1][0]));
                m *= 2;
            }
            let schedule = ToleranceSchedule::new(pairs)?;
            let verdict = quasi_cauchy_test(space, &out.prefix, &schedule)?;
            Ok((verdict.is_consistent(), json!({ "schedule": schedule, "verdict": verdict })))
        }
        "oscillation-one-at-zero" => {
            let family = out.family().ok_or_else(|| Error::BadParam("not a family fixture".into()))?;
            let zero = out.landmarks["x0"];
            let worst = (1..=n)
                .map(|k| {
                    let x = out.landmarks[&format!("x1/{k}")];
                    (family[k - 1].values[x] - family[k - 1].values[zero]).abs()
                })
                .map(|osc| (osc - 1.0).abs())
                .fold(0.0, f64::max);
            Ok((worst <= EXACT, json!({ "max_deviation": worst })))
        }
        "consecutive-gap" => {
            let worst = (1..n).map(|k| (space.d(k - 1, k) - 1.0 / (k + 1) as f64).abs()).fold(0.0, f64::max);
            Ok((worst <= EXACT, json!({ "max_deviation": worst })))
        }
        "equi-chain-continuous" | "not-equicontinuous-at-zero" => {
            let family = out.family().ok_or_else(|| Error::BadParam("not a family fixture".into()))?;
            let domain = out.domain.as_ref().expect("family fixtures carry a domain");
            let report = equi_chain_continuity_check(domain, &family, 0.2)?;
            let zero = out.landmarks["x0"];
            if id == "equi-chain-continuous" {
                return Ok((
                    report.holds,
                    json!({ "eps": 0.2, "components": report.components.len(), "delta_0": real(report.deltas[zero]) }),
                ));
            }
            let plain = equicontinuity_at(domain, &family, zero, 0.5, Some(report.deltas[zero]))?;
            Ok((!plain.holds, json!({ "delta": real(report.deltas[zero]), "plain": plain })))
        }
        "quasi-cauchy-not-cauchy" => {
            need(n, 102, id)?;
            let qc = ToleranceSchedule::new(vec![(0.1, 10), (0.01, 100)])?;
            let cauchy = ToleranceSchedule::new(vec![(0.5, 10)])?;
            let a = quasi_cauchy_test(space, &out.prefix, &qc)?;
            let b = cauchy_test(space, &out.prefix, &cauchy)?;
            Ok((a.is_consistent() && !b.is_consistent(), json!({ "quasi_cauchy": a, "cauchy": b })))
        }
        "qc-ratio-formula" | "qc-constant-unbounded" => {
            need(n, 4, id)?;
            let f = out.function.as_ref().expect("fixture carries a function");
            let nf = n as f64;
            let expected = if id == "qc-ratio-formula" {
                nf / (nf.sqrt() + (nf - 1.0).sqrt())
            } else {
                nf.sqrt() + (nf - 1.0).sqrt()
            };
            let full = seq_lipschitz_constant(space, f, &out.prefix, SeqMode::Consecutive)?;
            let half = seq_lipschitz_constant(space, f, &out.prefix[..n / 2], SeqMode::Consecutive)?;
            Ok((
                close(full.constant, expected, RELATIVE) && full.constant > half.constant,
                json!({ "constant": real(full.constant), "expected": expected, "half_prefix": real(half.constant), "witness": full.witness }),
            ))
        }
        "approximation-within-eps" => {
            let f = out.function.as_ref().expect("fixture carries a function");
            let decomp = approximate(space, f, 0.5)?;
            Ok((decomp.sup_error < 0.5, json!({ "eps": 0.5, "sup_error": decomp.sup_error })))
        }
        "cauchy-lipschitz-on-evens" => {
            need(n, 4, id)?;
            let f = out.function.as_ref().expect("fixture carries a function");
            let evens: Vec<usize> = (1..n).step_by(2).collect();
            let r = seq_lipschitz_constant(space, f, &evens, SeqMode::AllPairs)?;
            Ok((r.constant == 0.0, json!({ "constant": real(r.constant), "terms": evens.len() })))
        }
        "lits-grows-as-n" => {
            need(n, 5, id)?;
            let f = out.function.as_ref().expect("fixture carries a function");
            let r = lits_modulus(space, f, 0.25)?;
            let top = (out.landmarks[&format!("{n}")], out.landmarks[&format!("{n}+1/{n}")]);
            let at_top = r.witness.is_some_and(|(a, b)| (a.min(b), a.max(b)) == top);
            Ok((
                close(r.constant, n as f64, RELATIVE) && at_top,
                json!({ "constant": real(r.constant), "expected": n, "witness": r.witness }),
            ))
        }
        "local-constants-bounded-by-n" => {
            let f = out.function.as_ref().expect("fixture carries a function");
            let profile = local_lipschitz_profile(space, f, 0.25)?;
            let mut worst: Option<(f64, usize)> = None;
            for k in 1..=n {
                let mut at = vec![out.landmarks[&format!("{k}")]];
                at.extend(out.landmarks.get(&format!("{k}+1/{k}")));
                for x in at {
                    let excess = profile.constants[x] - k as f64 * (1.0 + RELATIVE);
                    if worst.is_none_or(|w| excess > w.0) {
                        worst = Some((excess, x));
                    }
                }
            }
            let (excess, x) = worst.expect("n >= 1");
            Ok((
                excess <= 0.0,
                json!({ "delta": 0.25, "max_excess": real(excess), "at": x, "max": real(profile.max()) }),
            ))
        }
        "chainable" | "unit-vectors-bourbaki-quasi-cauchy" => {
            let per_ray = (1.0 / spec.params.step.unwrap_or(0.05)).round().max(1.0);
            let eps = 1.5 / per_ray;
            if id == "chainable" {
                let ok = is_chainable(space, eps)?;
                return Ok((ok, json!({ "eps": eps })));
            }
            let v = bourbaki_qc_test(space, &out.prefix, eps)?;
            Ok((v.status == Status::Consistent && v.n0 == Some(0), json!({ "eps": eps, "verdict": v })))
        }
        "block-diameter" => {
            let worst = out
                .blocks
                .iter()
                .enumerate()
                .map(|(i, b)| (set_diameter(space, b) - 1.0 / (i + 1) as f64).abs())
                .fold(0.0, f64::max);
            Ok((worst <= EXACT, json!({ "max_deviation": worst })))
        }
        "local-constant-growth" => {
            let k_max = spec.params.k_max.unwrap_or(n);
            need(k_max, 2, id)?;
            let mut smaller = spec.clone();
            smaller.params.k_max = Some(k_max - 1);
            let f = out.function.as_ref().expect("fixture carries a function");
            let big = local_lipschitz_profile(space, f, 0.5)?;
            let small_out = load(&smaller)?;
            let small = local_lipschitz_profile(&small_out.space, small_out.function.as_ref().unwrap(), 0.5)?;
            Ok((
                big.max() > small.max(),
                json!({
                    "delta": 0.5,
                    "k_max": k_max,
                    "max": real(big.max()),
                    "max_previous": real(small.max()),
                    "infinite_count": big.infinite_count(),
                }),
            ))
        }
        "qc-constant-growth" => {
            need(n, 4, id)?;
            let f = out.function.as_ref().expect("fixture carries a function");
            let full = seq_lipschitz_constant(space, f, &out.prefix, SeqMode::Consecutive)?;
            let half = seq_lipschitz_constant(space, f, &out.prefix[..n / 2], SeqMode::Consecutive)?;
            let tail_gap = space.d(out.prefix[n - 2], out.prefix[n - 1]);
            Ok((
                full.constant > half.constant,
                json!({ "constant": real(full.constant), "half_prefix": real(half.constant), "last_gap": tail_gap }),
            ))
        }
        "spike-peaks" => {
            let f = out.function.as_ref().expect("fixture carries a function");
            let spikes = out.landmarks.len();
            let spacing = n / (spikes + 1);
            let radius = 0.25 * spacing as f64 / n as f64;
            let mut ok = true;
            for k in 1..=spikes {
                let c = out.landmarks[&format!("c{k}")];
                ok &= f.values[c] == k as f64;
            }
            let off_ball = (0..space.len())
                .filter(|&x| (1..=spikes).all(|k| space.d(x, out.landmarks[&format!("c{k}")]) >= radius))
                .filter(|&x| f.values[x] != 0.0)
                .count();
            Ok((ok && off_ball == 0, json!({ "spikes": spikes, "radius": radius, "nonzero_off_ball": off_ball })))
        }
        other => Err(Error::BadParam(format!("no claim named {other}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_interval_has_no_claims() {
        assert!(canonical_claims(&FixtureSpec::new(FixtureName::GridInterval, 10)).unwrap().is_empty());
    }

    #[test]
    fn segment_claim_ids() {
        let ids: Vec<_> = canonical_claims(&FixtureSpec::new(FixtureName::SegmentChain, 12))
            .unwrap()
            .into_iter()
            .map(|c| c.id)
            .collect();
        assert_eq!(ids, ["distance-half", "chain-length-bound"]);
    }

    #[test]
    fn every_verification_claim_passes() {
        for spec in verification_specs() {
            for r in check_claims(&spec, 1.0).unwrap() {
                assert!(r.passed, "{} {}: {}", r.fixture, r.id, r.detail);
            }
        }
    }

    #[test]
    fn scaled_distances_break_distance_half() {
        let spec = FixtureSpec::new(FixtureName::SegmentChain, 12);
        let results = check_claims(&spec, 1.1).unwrap();
        let half = results.iter().find(|r| r.id == "distance-half").unwrap();
        assert!(!half.passed);
    }
}
