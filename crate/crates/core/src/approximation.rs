//! Uniform approximation of a real function by a function that is Lipschitz
//! along quasi-Cauchy sequences, built from overlapping level windows.
//!
//! With `C_n = {x : (n-1) eps < f(x) < (n+1) eps}`, `g_n(x) = min(1, d(x, X \ C_n))`
//! and `g = sum g_n`, the weighted level `h = (sum n g_n) / g` satisfies
//! `|eps h - f| < eps` everywhere.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{check_eps, Error, Result};
use crate::exec::Execution;
use crate::metric::MetricSpace;
use crate::moduli::ScalarFunction;
use crate::sequences::{quasi_cauchy_test, ToleranceSchedule};

/// Window indices `n` with `(n-1) eps < v < (n+1) eps`; one or two of them.
fn windows_of(v: f64, eps: f64) -> impl Iterator<Item = i64> {
    let base = (v / eps).floor() as i64;
    (base - 1..=base + 1).filter(move |&n| (n - 1) as f64 * eps < v && v < (n + 1) as f64 * eps)
}

/// Nonempty level windows `C_n`, each a sorted list of point indices.
pub fn level_sets(f: &ScalarFunction, eps: f64) -> Result<BTreeMap<i64, Vec<usize>>> {
    check_eps(eps)?;
    let mut levels: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (x, &v) in f.values.iter().enumerate() {
        for n in windows_of(v, eps) {
            levels.entry(n).or_default().push(x);
        }
    }
    Ok(levels)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub g_parts: BTreeMap<i64, Vec<f64>>,
    pub g: Vec<f64>,
}

/// `g_n(x) = min(1, d(x, X \ C_n))` with `d(x, ∅) = +inf`, and `g = sum g_n`.
pub fn partition_functions(space: &MetricSpace, levels: &BTreeMap<i64, Vec<usize>>) -> Result<Partition> {
    let n = space.len();
    let mut member_count = vec![0usize; n];
    for members in levels.values() {
        for &x in members {
            space.check_index(x)?;
            member_count[x] += 1;
        }
    }
    if let Some(x) = member_count.iter().position(|&c| c == 0 || c > 2) {
        return Err(Error::InconsistentLevels(x));
    }
    let mut g_parts = BTreeMap::new();
    let mut g = vec![0.0; n];
    for (&level, members) in levels {
        let mut inside = vec![false; n];
        for &x in members {
            inside[x] = true;
        }
        let outside: Vec<usize> = (0..n).filter(|&y| !inside[y]).collect();
        let part = Execution::default().map_range(n, |x| {
            if !inside[x] {
                return 0.0;
            }
            outside.iter().map(|&y| space.d(x, y)).fold(f64::INFINITY, f64::min).min(1.0)
        });
        for (gx, px) in g.iter_mut().zip(&part) {
            *gx += px;
        }
        g_parts.insert(level, part);
    }
    if let Some(x) = g.iter().position(|&v| !(v > 0.0 && v <= 2.0)) {
        return Err(Error::InconsistentLevels(x));
    }
    Ok(Partition { g_parts, g })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelDecomposition {
    pub eps: f64,
    pub levels: BTreeMap<i64, Vec<usize>>,
    pub g_parts: BTreeMap<i64, Vec<f64>>,
    pub g: Vec<f64>,
    pub h: Vec<f64>,
    /// `eps * h`.
    pub approx: Vec<f64>,
    pub sup_error: f64,
}

impl LevelDecomposition {
    /// The export shape `{"eps", "levels", "g", "h", "sup_error"}`.
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "eps": self.eps,
            "levels": self.levels,
            "g": self.g,
            "h": self.h,
            "sup_error": self.sup_error,
        })
    }
}

/// Runs the full construction.
///
/// Panics if the result misses `f` by `eps` or more anywhere.
pub fn approximate(space: &MetricSpace, f: &ScalarFunction, eps: f64) -> Result<LevelDecomposition> {
    if f.values.len() != space.len() {
        return Err(Error::LengthMismatch { expected: space.len(), found: f.values.len() });
    }
    let levels = level_sets(f, eps)?;
    let Partition { g_parts, g } = partition_functions(space, &levels)?;
    let n = space.len();
    let mut lowest = vec![i64::MAX; n];
    for (&level, members) in &levels {
        for &x in members {
            lowest[x] = lowest[x].min(level);
        }
    }
    // h = lowest + sum (n - lowest) g_n / g keeps full precision for large n.
    let mut excess = vec![0.0; n];
    for (&level, part) in &g_parts {
        for x in 0..n {
            if part[x] > 0.0 {
                excess[x] += (level - lowest[x]) as f64 * part[x];
            }
        }
    }
    let h: Vec<f64> = (0..n).map(|x| lowest[x] as f64 + excess[x] / g[x]).collect();
    let approx: Vec<f64> = h.iter().map(|v| eps * v).collect();
    let sup_error = approx.iter().zip(&f.values).map(|(a, v)| (a - v).abs()).fold(0.0, f64::max);
    assert!(sup_error < eps, "level-window approximation missed by {sup_error} at eps = {eps}");
    Ok(LevelDecomposition { eps, levels, g_parts, g, h, approx, sup_error })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundViolation {
    pub position: usize,
    /// `"g"`, `"h"` or `"g-lower"`.
    pub bound: String,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundsWarning {
    /// Some prefix point has a coincident point whose value differs by at
    /// least `eps / 4`, so no positive radius exists.
    NoValidDelta,
    /// A radius exists but no checked pair is closer than it.
    NoCoveredPairs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub eps: f64,
    /// Largest radius with `f(B_delta(x_n))` inside `(f(x_n) - eps/4, f(x_n) + eps/4)`
    /// for every prefix point.
    pub delta: f64,
    pub warning: Option<BoundsWarning>,
    /// First tail position (start of the first schedule stage).
    pub tail_start: usize,
    pub pairs_checked: usize,
    /// Tail pairs with `d(x_n, x_{n+1}) < delta`.
    pub covered_pairs: usize,
    pub g_bound_holds: bool,
    /// `None` when no radius exists.
    pub h_bound_holds: Option<bool>,
    /// `g(x_n) >= min(1, delta)` at every prefix point.
    pub g_lower_holds: bool,
    /// Largest `|g(x_n) - g(x_{n+1})| / d` over the tail.
    pub sharpest_g: f64,
    pub sharpest_h: f64,
    /// `10 / delta^2`.
    #[serde(with = "crate::json")]
    pub h_constant: f64,
    #[serde(with = "crate::json")]
    pub margin_g: f64,
    #[serde(with = "crate::json::option")]
    pub margin_h: Option<f64>,
    pub violations: Vec<BoundViolation>,
}

impl BoundsReport {
    pub fn all_hold(&self) -> bool {
        self.g_bound_holds && self.h_bound_holds.unwrap_or(false) && self.g_lower_holds
    }
}

const MAX_VIOLATIONS: usize = 32;

/// Checks the estimates `|Δg| <= 3 d` and `|Δh| <= (10 / delta^2) d` along the
/// tail of a prefix that is quasi-Cauchy consistent with `schedule`.
pub fn proof_bounds_report(
    space: &MetricSpace,
    f: &ScalarFunction,
    decomp: &LevelDecomposition,
    prefix: &[usize],
    schedule: &ToleranceSchedule,
) -> Result<BoundsReport> {
    if !quasi_cauchy_test(space, prefix, schedule)?.is_consistent() {
        return Err(Error::PrefixNotQuasiCauchy);
    }
    if f.values.len() != space.len() || decomp.g.len() != space.len() {
        return Err(Error::LengthMismatch { expected: space.len(), found: f.values.len() });
    }
    let eps = decomp.eps;
    let quarter = eps / 4.0;
    let radius_at = |x: usize| {
        (0..space.len())
            .filter(|&y| (f.values[y] - f.values[x]).abs() >= quarter)
            .map(|y| space.d(x, y))
            .fold(f64::INFINITY, f64::min)
    };
    let mut distinct = prefix.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let radii = Execution::default().map_range(distinct.len(), |a| radius_at(distinct[a]));
    let mut delta = radii.iter().copied().fold(f64::INFINITY, f64::min);
    if delta.is_infinite() {
        delta = space.diameter();
    }
    let no_delta = delta <= 0.0;
    let h_constant = if no_delta { f64::INFINITY } else { 10.0 / (delta * delta) };

    let tol = space.tol();
    let tail_start = schedule.stages()[0].start;
    let mut violations = Vec::new();
    let mut push = |v: BoundViolation| {
        if violations.len() < MAX_VIOLATIONS {
            violations.push(v);
        }
    };
    let (mut g_ok, mut h_ok, mut lower_ok) = (true, true, true);
    let (mut sharpest_g, mut sharpest_h) = (0.0f64, 0.0f64);
    let (mut checked, mut covered) = (0, 0);
    for k in tail_start..prefix.len() - 1 {
        let (a, b) = (prefix[k], prefix[k + 1]);
        let d = space.d(a, b);
        let dg = (decomp.g[a] - decomp.g[b]).abs();
        let dh = (decomp.h[a] - decomp.h[b]).abs();
        checked += 1;
        if d < delta {
            covered += 1;
        }
        if d > 0.0 {
            sharpest_g = sharpest_g.max(dg / d);
            sharpest_h = sharpest_h.max(dh / d);
        }
        if dg > 3.0 * d + tol {
            g_ok = false;
            push(BoundViolation { position: k, bound: "g".into(), lhs: dg, rhs: 3.0 * d });
        }
        if !no_delta && dh > h_constant * d + tol {
            h_ok = false;
            push(BoundViolation { position: k, bound: "h".into(), lhs: dh, rhs: h_constant * d });
        }
    }
    let floor = delta.min(1.0);
    for (k, &x) in prefix.iter().enumerate() {
        if !no_delta && decomp.g[x] + tol < floor {
            lower_ok = false;
            push(BoundViolation { position: k, bound: "g-lower".into(), lhs: decomp.g[x], rhs: floor });
        }
    }
    let margin = |bound: f64, measured: f64| if measured > 0.0 { bound / measured } else { f64::INFINITY };
    let warning = if no_delta {
        Some(BoundsWarning::NoValidDelta)
    } else if covered == 0 {
        Some(BoundsWarning::NoCoveredPairs)
    } else {
        None
    };
    Ok(BoundsReport {
        eps,
        delta,
        warning,
        tail_start,
        pairs_checked: checked,
        covered_pairs: covered,
        g_bound_holds: g_ok,
        h_bound_holds: (!no_delta).then_some(h_ok),
        g_lower_holds: lower_ok,
        sharpest_g,
        sharpest_h,
        h_constant,
        margin_g: margin(3.0, sharpest_g),
        margin_h: (!no_delta).then(|| margin(h_constant, sharpest_h)),
        violations,
    })
}
