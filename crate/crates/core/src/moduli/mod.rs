//! Lipschitz-type moduli of real functions on finite metric spaces.
//!
//! Every modulus is a supremum of `|f(x) - f(y)| / d(x, y)` over some pair
//! set. An empty pair set gives `0`; a pair at distance zero with different
//! values gives `+inf`; a pair at distance zero with equal values is skipped.
//! Ties keep the first pair in scan order, so witnesses are deterministic.

mod continuity;
mod spike;

pub use continuity::{
    equi_chain_continuity_check, equicontinuity_at, lp_tail_criterion, ward_falsifier, EquiChainReport, LpTailReport,
    PlainEquicontinuity, WardOutcome, WardSearch,
};
pub use spike::spike_function;

use serde::{Deserialize, Serialize};

use crate::error::{check_eps, Error, Result};
use crate::exec::Execution;
use crate::metric::MetricSpace;

/// Real values indexed like the points of a space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarFunction {
    pub values: Vec<f64>,
}

impl ScalarFunction {
    pub fn new(space: &MetricSpace, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::LengthMismatch { expected: space.len(), found: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::MalformedInput(format!("function value at {i} is not finite")));
        }
        Ok(ScalarFunction { values })
    }

    pub fn constant(space: &MetricSpace, c: f64) -> Result<Self> {
        Self::new(space, vec![c; space.len()])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn check_against(&self, space: &MetricSpace) -> Result<()> {
        if self.values.len() == space.len() {
            Ok(())
        } else {
            Err(Error::LengthMismatch { expected: space.len(), found: self.values.len() })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModulusKind {
    Lipschitz,
    Lits,
    Local,
    CauchySeq,
    QcSeq,
}

/// A modulus value with the pair that realizes it.
///
/// For `cauchy-seq` and `qc-seq` the witness holds prefix positions; for the
/// other kinds it holds point indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusReport {
    pub kind: ModulusKind,
    #[serde(with = "crate::json")]
    pub constant: f64,
    #[serde(with = "crate::json::option")]
    pub scale: Option<f64>,
    pub witness: Option<(usize, usize)>,
}

/// Ratio of a pair, or `None` when it does not count.
#[inline]
fn ratio(d: f64, df: f64) -> Option<f64> {
    if d > 0.0 {
        Some(df / d)
    } else if df != 0.0 {
        Some(f64::INFINITY)
    } else {
        None
    }
}

#[derive(Clone, Copy)]
struct Best {
    value: f64,
    pair: Option<(usize, usize)>,
}

impl Best {
    const EMPTY: Best = Best { value: 0.0, pair: None };

    fn offer(&mut self, r: f64, pair: (usize, usize)) {
        if self.pair.is_none() || r > self.value {
            self.value = r;
            self.pair = Some(pair);
        }
    }

    fn merge(mut self, other: Best) -> Best {
        if let Some(p) = other.pair {
            self.offer(other.value, p);
        }
        self
    }
}

fn pair_sup<P>(space: &MetricSpace, f: &ScalarFunction, exec: Execution, keep: P) -> Best
where
    P: Fn(f64) -> bool + Sync + Send,
{
    let n = space.len();
    exec.map_range(n, |i| {
        let mut best = Best::EMPTY;
        for j in i + 1..n {
            let d = space.d(i, j);
            if !keep(d) {
                continue;
            }
            if let Some(r) = ratio(d, (f.values[i] - f.values[j]).abs()) {
                best.offer(r, (i, j));
            }
        }
        best
    })
    .into_iter()
    .fold(Best::EMPTY, Best::merge)
}

pub fn lipschitz_constant(space: &MetricSpace, f: &ScalarFunction) -> Result<ModulusReport> {
    lipschitz_constant_with(space, f, Execution::default())
}

pub fn lipschitz_constant_with(space: &MetricSpace, f: &ScalarFunction, exec: Execution) -> Result<ModulusReport> {
    f.check_against(space)?;
    if space.len() < 2 {
        return Err(Error::DegenerateSpace(space.len()));
    }
    let best = pair_sup(space, f, exec, |_| true);
    Ok(ModulusReport { kind: ModulusKind::Lipschitz, constant: best.value, scale: None, witness: best.pair })
}

/// Supremum over pairs with `d(x, y) < delta`.
pub fn lits_modulus(space: &MetricSpace, f: &ScalarFunction, delta: f64) -> Result<ModulusReport> {
    f.check_against(space)?;
    check_eps(delta)?;
    if space.len() < 2 {
        return Err(Error::DegenerateSpace(space.len()));
    }
    let best = pair_sup(space, f, Execution::default(), |d| d < delta);
    Ok(ModulusReport { kind: ModulusKind::Lits, constant: best.value, scale: Some(delta), witness: best.pair })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeqMode {
    Consecutive,
    AllPairs,
}

pub fn seq_lipschitz_constant(
    space: &MetricSpace,
    f: &ScalarFunction,
    prefix: &[usize],
    mode: SeqMode,
) -> Result<ModulusReport> {
    f.check_against(space)?;
    prefix.iter().try_for_each(|&i| space.check_index(i))?;
    if prefix.len() < 2 {
        return Err(Error::ShortPrefix(prefix.len()));
    }
    let at = |k: usize, l: usize| {
        let (a, b) = (prefix[k], prefix[l]);
        ratio(space.d(a, b), (f.values[a] - f.values[b]).abs())
    };
    let best = match mode {
        SeqMode::Consecutive => {
            let mut best = Best::EMPTY;
            for k in 0..prefix.len() - 1 {
                if let Some(r) = at(k, k + 1) {
                    best.offer(r, (k, k + 1));
                }
            }
            best
        }
        SeqMode::AllPairs => {
            let len = prefix.len();
            Execution::default()
                .map_range(len, |k| {
                    let mut best = Best::EMPTY;
                    for l in k + 1..len {
                        if let Some(r) = at(k, l) {
                            best.offer(r, (k, l));
                        }
                    }
                    best
                })
                .into_iter()
                .fold(Best::EMPTY, Best::merge)
        }
    };
    Ok(ModulusReport {
        kind: match mode {
            SeqMode::Consecutive => ModulusKind::QcSeq,
            SeqMode::AllPairs => ModulusKind::CauchySeq,
        },
        constant: best.value,
        scale: None,
        witness: best.pair,
    })
}

/// Per point `x`, the Lipschitz constant of `f` on the open ball `B_delta(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalProfile {
    pub delta: f64,
    #[serde(with = "crate::json::vec")]
    pub constants: Vec<f64>,
    pub witnesses: Vec<Option<(usize, usize)>>,
}

impl LocalProfile {
    pub fn max(&self) -> f64 {
        self.constants.iter().copied().fold(0.0, f64::max)
    }

    pub fn infinite_count(&self) -> usize {
        self.constants.iter().filter(|c| c.is_infinite()).count()
    }
}

pub fn local_lipschitz_profile(space: &MetricSpace, f: &ScalarFunction, delta: f64) -> Result<LocalProfile> {
    local_lipschitz_profile_with(space, f, delta, Execution::default())
}

pub fn local_lipschitz_profile_with(
    space: &MetricSpace,
    f: &ScalarFunction,
    delta: f64,
    exec: Execution,
) -> Result<LocalProfile> {
    f.check_against(space)?;
    check_eps(delta)?;
    let n = space.len();
    let per_point = exec.map_range(n, |x| {
        let ball: Vec<usize> = (0..n).filter(|&y| space.d(x, y) < delta).collect();
        let mut best = Best::EMPTY;
        for (a, &i) in ball.iter().enumerate() {
            for &j in &ball[a + 1..] {
                if let Some(r) = ratio(space.d(i, j), (f.values[i] - f.values[j]).abs()) {
                    best.offer(r, (i, j));
                }
            }
        }
        best
    });
    Ok(LocalProfile {
        delta,
        constants: per_point.iter().map(|b| b.value).collect(),
        witnesses: per_point.iter().map(|b| b.pair).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> MetricSpace {
        MetricSpace::line(xs).unwrap()
    }

    fn naturals_plus(n_max: usize) -> (MetricSpace, ScalarFunction) {
        let mut xs = Vec::new();
        let mut chi = Vec::new();
        for n in 1..=n_max {
            xs.push(n as f64);
            chi.push(1.0);
            if n > 1 {
                xs.push(n as f64 + 1.0 / n as f64);
                chi.push(0.0);
            }
        }
        let s = line(&xs);
        let f = ScalarFunction::new(&s, chi).unwrap();
        (s, f)
    }

    #[test]
    fn linear_and_constant() {
        let xs: Vec<f64> = (0..=100).map(|k| k as f64 / 100.0).collect();
        let s = line(&xs);
        let f = ScalarFunction::new(&s, xs.iter().map(|x| 2.0 * x).collect()).unwrap();
        let r = lipschitz_constant(&s, &f).unwrap();
        assert!((r.constant - 2.0).abs() < 1e-12);
        assert!((lits_modulus(&s, &f, 0.05).unwrap().constant - 2.0).abs() < 1e-12);
        let c = ScalarFunction::constant(&s, 3.0).unwrap();
        let r = lipschitz_constant(&s, &c).unwrap();
        assert_eq!((r.constant, r.witness), (0.0, Some((0, 1))));
        assert_eq!(
            lipschitz_constant(&line(&[1.0]), &ScalarFunction { values: vec![0.0] }).unwrap_err(),
            Error::DegenerateSpace(1)
        );
    }

    #[test]
    fn characteristic_of_naturals() {
        let (s, f) = naturals_plus(50);
        let r = lipschitz_constant(&s, &f).unwrap();
        assert!((r.constant - 50.0).abs() < 1e-9);
        let (i, j) = r.witness.unwrap();
        assert_eq!((s.dense_points().unwrap()[i][0], s.dense_points().unwrap()[j][0]), (50.0, 50.02));
        let lits = lits_modulus(&s, &f, 0.25).unwrap();
        assert!((lits.constant - 50.0).abs() < 1e-9);
        let prof = local_lipschitz_profile(&s, &f, 0.25).unwrap();
        // the ball of radius 1/4 around n holds n + 1/n only once 1/n < 1/4
        for n in 2..=50usize {
            let at_n = 2 * n - 3;
            let expected = if n >= 5 { n as f64 } else { 0.0 };
            assert!((prof.constants[at_n] - expected).abs() < 1e-9);
            assert!((prof.constants[at_n + 1] - expected).abs() < 1e-9);
        }
        assert_eq!(prof.constants[0], 0.0);
        assert_eq!(prof.infinite_count(), 0);
    }

    #[test]
    fn empty_sup_and_duplicates() {
        let s = line(&[0.0, 1.0, 2.0]);
        let f = ScalarFunction::new(&s, vec![0.0, 5.0, 0.0]).unwrap();
        let r = lits_modulus(&s, &f, 0.5).unwrap();
        assert_eq!((r.constant, r.witness), (0.0, None));
        let dup = line(&[0.0, 0.0, 1.0]);
        let f = ScalarFunction::new(&dup, vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(lipschitz_constant(&dup, &f).unwrap().constant, f64::INFINITY);
        let same = ScalarFunction::new(&dup, vec![1.0, 1.0, 0.0]).unwrap();
        assert_eq!(lipschitz_constant(&dup, &same).unwrap().constant, 1.0);
        assert!(ScalarFunction::new(&dup, vec![0.0]).is_err());
        assert!(ScalarFunction::new(&dup, vec![0.0, f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn sequence_modes() {
        let s = line(&[0.0, 1.0, 3.0]);
        let f = ScalarFunction::new(&s, vec![0.0, 1.0, 0.0]).unwrap();
        let c = seq_lipschitz_constant(&s, &f, &[0, 1, 2], SeqMode::Consecutive).unwrap();
        assert_eq!((c.constant, c.witness), (1.0, Some((0, 1))));
        let a = seq_lipschitz_constant(&s, &f, &[0, 2, 1], SeqMode::AllPairs).unwrap();
        assert_eq!((a.constant, a.witness, a.kind), (1.0, Some((0, 2)), ModulusKind::CauchySeq));
        assert_eq!(seq_lipschitz_constant(&s, &f, &[0], SeqMode::Consecutive).unwrap_err(), Error::ShortPrefix(1));
    }

    #[test]
    fn harmonic_consecutive_ratio() {
        let n = 300;
        let mut h = Vec::new();
        let mut acc = 0.0;
        for k in 1..=n + 1 {
            acc += 1.0 / k as f64;
            h.push(acc);
        }
        let s = line(&h);
        let f = ScalarFunction::new(&s, (1..=n + 1).map(|k| (k as f64).sqrt()).collect()).unwrap();
        let p: Vec<usize> = (0..=n).collect();
        let r = seq_lipschitz_constant(&s, &f, &p, SeqMode::Consecutive).unwrap();
        let nf = n as f64;
        let formula = (nf + 1.0) / ((nf + 1.0).sqrt() + nf.sqrt());
        assert!((r.constant - formula).abs() / formula < 1e-9);
        assert_eq!(r.witness, Some((n - 1, n)));
    }
}
