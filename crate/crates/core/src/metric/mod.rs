//! Finite metric spaces.
//!
//! A [`MetricSpace`] is an indexed point set together with a distance
//! provider. Construction validates the metric axioms: exhaustively for
//! explicit matrices, and on a deterministic sample of triples for the
//! coordinate providers once `n^3` exceeds [`EXHAUSTIVE_TRIPLE_LIMIT`].

mod io;

pub use io::{parse_matrix_csv, parse_points_jsonl, write_matrix_csv, write_points_jsonl};

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Axiom, Error, Result};
use crate::exec::Execution;

pub const DEFAULT_TOL: f64 = 1e-12;
pub const EXHAUSTIVE_TRIPLE_LIMIT: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Provider {
    ExplicitMatrix,
    Euclidean { dim: usize },
    SupNormSparse,
    PNormSparse { p: f64 },
    BoundedUsual { cap: f64 },
    FunctionSup { domain_size: usize },
}

impl Provider {
    pub fn name(&self) -> &'static str {
        match self {
            Provider::ExplicitMatrix => "explicit-matrix",
            Provider::Euclidean { .. } => "euclidean",
            Provider::SupNormSparse => "sup-norm-sparse",
            Provider::PNormSparse { .. } => "p-norm-sparse",
            Provider::BoundedUsual { .. } => "bounded-usual",
            Provider::FunctionSup { .. } => "function-sup",
        }
    }
}

/// A finitely supported point of `l^inf` or `l^p`; absent coordinates are zero.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    entries: BTreeMap<usize, f64>,
}

impl SparseVector {
    pub fn new<I: IntoIterator<Item = (usize, f64)>>(entries: I) -> Self {
        let mut v = SparseVector::default();
        for (i, x) in entries {
            v.set(i, x);
        }
        v
    }

    /// The unit vector `e_i`.
    pub fn unit(i: usize) -> Self {
        Self::new([(i, 1.0)])
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.entries.get(&i).copied().unwrap_or(0.0)
    }

    pub fn set(&mut self, i: usize, x: f64) {
        if x == 0.0 {
            self.entries.remove(&i);
        } else {
            self.entries.insert(i, x);
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries.iter().map(|(&i, &x)| (i, x))
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    fn zip_diffs<'a>(&'a self, other: &'a SparseVector) -> impl Iterator<Item = f64> + 'a {
        MergeDiff { a: self.entries.iter().peekable(), b: other.entries.iter().peekable() }
    }

    pub fn sup_distance(&self, other: &SparseVector) -> f64 {
        self.zip_diffs(other).fold(0.0, f64::max)
    }

    pub fn p_distance(&self, other: &SparseVector, p: f64) -> f64 {
        if p == 1.0 {
            self.zip_diffs(other).sum()
        } else if p == 2.0 {
            self.zip_diffs(other).map(|x| x * x).sum::<f64>().sqrt()
        } else {
            self.zip_diffs(other).map(|x| x.powf(p)).sum::<f64>().powf(1.0 / p)
        }
    }

    /// `sum_{i > n0} |x_i|^p`.
    pub fn tail_mass(&self, n0: usize, p: f64) -> f64 {
        self.entries.range(n0 + 1..).map(|(_, x)| x.abs().powf(p)).sum()
    }
}

struct MergeDiff<'a, I: Iterator<Item = (&'a usize, &'a f64)>> {
    a: std::iter::Peekable<I>,
    b: std::iter::Peekable<I>,
}

impl<'a, I: Iterator<Item = (&'a usize, &'a f64)>> Iterator for MergeDiff<'a, I> {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        match (self.a.peek(), self.b.peek()) {
            (None, None) => None,
            (Some(_), None) => self.a.next().map(|(_, x)| x.abs()),
            (None, Some(_)) => self.b.next().map(|(_, y)| y.abs()),
            (Some((i, _)), Some((j, _))) => {
                if i < j {
                    self.a.next().map(|(_, x)| x.abs())
                } else if j < i {
                    self.b.next().map(|(_, y)| y.abs())
                } else {
                    let x = self.a.next().unwrap().1;
                    let y = self.b.next().unwrap().1;
                    Some((x - y).abs())
                }
            }
        }
    }
}

/// Provider-specific coordinates.
#[derive(Debug, Clone, PartialEq)]
pub enum PointData {
    /// Row-major `n x n` distance matrix.
    Matrix(Vec<f64>),
    Dense(Vec<Vec<f64>>),
    Sparse(Vec<SparseVector>),
}

impl PointData {
    fn len(&self) -> usize {
        match self {
            PointData::Matrix(m) => (m.len() as f64).sqrt().round() as usize,
            PointData::Dense(rows) => rows.len(),
            PointData::Sparse(vs) => vs.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSpace {
    n: usize,
    provider: Provider,
    data: PointData,
    tol: f64,
    scale: f64,
}

impl MetricSpace {
    /// Validates `data` against `provider` and the metric axioms.
    pub fn build(data: PointData, provider: Provider) -> Result<Self> {
        Self::build_with_tol(data, provider, DEFAULT_TOL)
    }

    pub fn build_with_tol(data: PointData, provider: Provider, tol: f64) -> Result<Self> {
        if !(tol >= 0.0 && tol.is_finite()) {
            return Err(Error::MalformedInput(format!("tolerance {tol} must be finite and >= 0")));
        }
        let n = data.len();
        if n == 0 {
            return Err(Error::MalformedInput("space needs at least one point".into()));
        }
        check_shape(&data, &provider, n)?;
        let space = MetricSpace { n, provider, data, tol, scale: 1.0 };
        match space.provider {
            Provider::ExplicitMatrix => space.validate_exhaustive()?,
            _ if n.saturating_pow(3) <= EXHAUSTIVE_TRIPLE_LIMIT => space.validate_exhaustive()?,
            _ => space.validate_sampled()?,
        }
        Ok(space)
    }

    pub fn from_matrix(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::MalformedInput("distance matrix is not square".into()));
        }
        Self::build(PointData::Matrix(rows.concat()), Provider::ExplicitMatrix)
    }

    pub fn euclidean(points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = points.first().map_or(0, Vec::len);
        Self::build(PointData::Dense(points), Provider::Euclidean { dim })
    }

    /// Reals with the usual metric.
    pub fn line(values: &[f64]) -> Result<Self> {
        Self::build(PointData::Dense(values.iter().map(|&x| vec![x]).collect()), Provider::Euclidean { dim: 1 })
    }

    /// Reals with `min{cap, |x - y|}`.
    pub fn bounded_line(values: &[f64], cap: f64) -> Result<Self> {
        Self::build(PointData::Dense(values.iter().map(|&x| vec![x]).collect()), Provider::BoundedUsual { cap })
    }

    pub fn sup_norm(points: Vec<SparseVector>) -> Result<Self> {
        Self::build(PointData::Sparse(points), Provider::SupNormSparse)
    }

    pub fn p_norm(points: Vec<SparseVector>, p: f64) -> Result<Self> {
        Self::build(PointData::Sparse(points), Provider::PNormSparse { p })
    }

    /// Functions sampled on a common finite domain, with the sup distance.
    pub fn function_sup(rows: Vec<Vec<f64>>) -> Result<Self> {
        let domain_size = rows.first().map_or(0, Vec::len);
        Self::build(PointData::Dense(rows), Provider::FunctionSup { domain_size })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn provider(&self) -> Provider {
        self.provider
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn data(&self) -> &PointData {
        &self.data
    }

    /// Dense coordinates (euclidean, bounded-usual, function-sup providers).
    pub fn dense_points(&self) -> Option<&[Vec<f64>]> {
        match &self.data {
            PointData::Dense(rows) => Some(rows),
            _ => None,
        }
    }

    pub fn sparse_points(&self) -> Option<&[SparseVector]> {
        match &self.data {
            PointData::Sparse(vs) => Some(vs),
            _ => None,
        }
    }

    /// Multiplies every distance by `factor`. Any positive multiple of a
    /// metric is a metric, so no revalidation happens.
    pub fn with_distance_scale(mut self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::BadParam(format!("distance scale {factor} must be positive")));
        }
        self.scale *= factor;
        Ok(self)
    }

    pub fn distance(&self, i: usize, j: usize) -> Result<f64> {
        self.check_index(i)?;
        self.check_index(j)?;
        Ok(self.d(i, j))
    }

    pub fn check_index(&self, i: usize) -> Result<()> {
        if i < self.n {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange { index: i, len: self.n })
        }
    }

    /// Unchecked distance; panics on out-of-range indices.
    #[inline]
    pub fn d(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        self.raw(i, j) * self.scale
    }

    fn raw(&self, i: usize, j: usize) -> f64 {
        match (&self.data, self.provider) {
            (PointData::Matrix(m), _) => m[i * self.n + j],
            (PointData::Dense(rows), Provider::Euclidean { .. }) => {
                let (a, b) = (&rows[i], &rows[j]);
                if a.len() == 1 {
                    (a[0] - b[0]).abs()
                } else {
                    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
                }
            }
            (PointData::Dense(rows), Provider::BoundedUsual { cap }) => (rows[i][0] - rows[j][0]).abs().min(cap),
            (PointData::Dense(rows), _) => rows[i].iter().zip(&rows[j]).fold(0.0, |acc, (x, y)| acc.max((x - y).abs())),
            (PointData::Sparse(vs), Provider::PNormSparse { p }) => vs[i].p_distance(&vs[j], p),
            (PointData::Sparse(vs), _) => vs[i].sup_distance(&vs[j]),
        }
    }

    /// Degree of isolation `d(x, X \ {x})`; `+inf` for a singleton space.
    pub fn isolation(&self, i: usize) -> Result<f64> {
        self.check_index(i)?;
        Ok((0..self.n).filter(|&j| j != i).map(|j| self.d(i, j)).fold(f64::INFINITY, f64::min))
    }

    pub fn isolation_profile(&self) -> Vec<f64> {
        Execution::default()
            .map_range(self.n, |i| (0..self.n).filter(|&j| j != i).map(|j| self.d(i, j)).fold(f64::INFINITY, f64::min))
    }

    pub fn distance_matrix(&self) -> Vec<Vec<f64>> {
        self.distance_matrix_with(Execution::default())
    }

    pub fn distance_matrix_with(&self, exec: Execution) -> Vec<Vec<f64>> {
        exec.map_range(self.n, |i| (0..self.n).map(|j| self.d(i, j)).collect())
    }

    pub fn diameter(&self) -> f64 {
        Execution::default()
            .map_range(self.n, |i| (i + 1..self.n).map(|j| self.d(i, j)).fold(0.0, f64::max))
            .into_iter()
            .fold(0.0, f64::max)
    }

    /// Smallest nonzero distance, or `None` when every pair coincides.
    pub fn min_positive_distance(&self) -> Option<f64> {
        let m = Execution::default()
            .map_range(self.n, |i| {
                (i + 1..self.n).map(|j| self.d(i, j)).filter(|&x| x > 0.0).fold(f64::INFINITY, f64::min)
            })
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        m.is_finite().then_some(m)
    }

    /// Sorted distinct positive pairwise distances.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut all: Vec<f64> = Execution::default()
            .map_range(self.n, |i| (i + 1..self.n).map(|j| self.d(i, j)).filter(|&x| x > 0.0).collect::<Vec<_>>())
            .concat();
        all.sort_by(f64::total_cmp);
        all.dedup();
        all
    }

    /// Restriction of the space to `indices` (in that order).
    pub fn subspace(&self, indices: &[usize]) -> Result<MetricSpace> {
        if indices.is_empty() {
            return Err(Error::EmptySubset);
        }
        for &i in indices {
            self.check_index(i)?;
        }
        let data = match &self.data {
            PointData::Matrix(m) => {
                let k = indices.len();
                let mut sub = Vec::with_capacity(k * k);
                for &i in indices {
                    for &j in indices {
                        sub.push(m[i * self.n + j]);
                    }
                }
                PointData::Matrix(sub)
            }
            PointData::Dense(rows) => PointData::Dense(indices.iter().map(|&i| rows[i].clone()).collect()),
            PointData::Sparse(vs) => PointData::Sparse(indices.iter().map(|&i| vs[i].clone()).collect()),
        };
        Ok(MetricSpace { n: indices.len(), provider: self.provider, data, tol: self.tol, scale: self.scale })
    }

    fn check_triple(&self, i: usize, j: usize, k: usize) -> Result<()> {
        let (dik, dij, djk) = (self.d(i, k), self.d(i, j), self.d(j, k));
        if dik > dij + djk + self.tol {
            return Err(Error::MetricViolation { axiom: Axiom::Triangle, witness: (i, k, j) });
        }
        Ok(())
    }

    fn check_pair(&self, i: usize, j: usize) -> Result<()> {
        let dij = self.raw(i, j);
        let dji = self.raw(j, i);
        let witness = (i, j, j);
        if !dij.is_finite() {
            return Err(Error::MetricViolation { axiom: Axiom::Finite, witness });
        }
        if dij < 0.0 {
            return Err(Error::MetricViolation { axiom: Axiom::Nonnegative, witness });
        }
        if i == j && dij > self.tol {
            return Err(Error::MetricViolation { axiom: Axiom::Identity, witness: (i, i, i) });
        }
        if (dij - dji).abs() > self.tol {
            return Err(Error::MetricViolation { axiom: Axiom::Symmetry, witness });
        }
        Ok(())
    }

    fn validate_exhaustive(&self) -> Result<()> {
        let n = self.n;
        let first = |results: Vec<Result<()>>| results.into_iter().find(|r| r.is_err());
        let pair_checks = Execution::default().map_range(n, |i| (0..n).try_for_each(|j| self.check_pair(i, j)));
        if let Some(err) = first(pair_checks) {
            return err;
        }
        let triangle = Execution::default().map_range(n, |i| {
            for k in 0..n {
                for j in 0..n {
                    self.check_triple(i, j, k)?;
                }
            }
            Ok(())
        });
        first(triangle).unwrap_or(Ok(()))
    }

    fn validate_sampled(&self) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 ^ self.n as u64);
        for _ in 0..EXHAUSTIVE_TRIPLE_LIMIT {
            let i = rng.gen_range(0..self.n);
            let j = rng.gen_range(0..self.n);
            let k = rng.gen_range(0..self.n);
            self.check_pair(i, j)?;
            self.check_pair(i, i)?;
            self.check_triple(i, j, k)?;
        }
        Ok(())
    }
}

fn check_shape(data: &PointData, provider: &Provider, n: usize) -> Result<()> {
    let finite_rows = |rows: &[Vec<f64>], width: usize| -> Result<()> {
        for (i, r) in rows.iter().enumerate() {
            if r.len() != width {
                return Err(Error::MalformedInput(format!("point {i} has {} coordinates, expected {width}", r.len())));
            }
            if r.iter().any(|x| !x.is_finite()) {
                return Err(Error::MalformedInput(format!("point {i} has a non-finite coordinate")));
            }
        }
        Ok(())
    };
    match (data, provider) {
        (PointData::Matrix(m), Provider::ExplicitMatrix) => {
            if m.len() != n * n {
                return Err(Error::MalformedInput(format!("matrix with {} entries is not square", m.len())));
            }
            Ok(())
        }
        (PointData::Dense(rows), Provider::Euclidean { dim }) => {
            if *dim == 0 {
                return Err(Error::MalformedInput("euclidean dimension must be >= 1".into()));
            }
            finite_rows(rows, *dim)
        }
        (PointData::Dense(rows), Provider::BoundedUsual { cap }) => {
            if !(*cap > 0.0 && cap.is_finite()) {
                return Err(Error::MalformedInput(format!("cap {cap} must be positive")));
            }
            finite_rows(rows, 1)
        }
        (PointData::Dense(rows), Provider::FunctionSup { domain_size }) => {
            if *domain_size == 0 {
                return Err(Error::MalformedInput("function domain must be nonempty".into()));
            }
            finite_rows(rows, *domain_size)
        }
        (PointData::Sparse(vs), Provider::SupNormSparse | Provider::PNormSparse { .. }) => {
            if let Provider::PNormSparse { p } = provider {
                if !(*p >= 1.0 && p.is_finite()) {
                    return Err(Error::MalformedInput(format!("p = {p} must be >= 1")));
                }
            }
            for (i, v) in vs.iter().enumerate() {
                if v.entries().any(|(_, x)| !x.is_finite()) {
                    return Err(Error::MalformedInput(format!("point {i} has a non-finite coordinate")));
                }
            }
            Ok(())
        }
        _ => Err(Error::MalformedInput(format!("point data does not match provider {}", provider.name()))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_matrix_is_valid() {
        let s = MetricSpace::from_matrix(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.distance(0, 1).unwrap(), 1.0);
    }

    #[test]
    fn triangle_violation_reports_witness() {
        let err =
            MetricSpace::from_matrix(vec![vec![0.0, 1.0, 3.0], vec![1.0, 0.0, 1.0], vec![3.0, 1.0, 0.0]]).unwrap_err();
        assert_eq!(err, Error::MetricViolation { axiom: Axiom::Triangle, witness: (0, 2, 1) });
    }

    #[test]
    fn asymmetric_and_negative_matrices_are_rejected() {
        let asym = MetricSpace::from_matrix(vec![vec![0.0, 1.0], vec![2.0, 0.0]]).unwrap_err();
        assert!(matches!(asym, Error::MetricViolation { axiom: Axiom::Symmetry, .. }));
        let neg = MetricSpace::from_matrix(vec![vec![0.0, -1.0], vec![-1.0, 0.0]]).unwrap_err();
        assert!(matches!(neg, Error::MetricViolation { axiom: Axiom::Nonnegative, .. }));
        let diag = MetricSpace::from_matrix(vec![vec![0.5, 1.0], vec![1.0, 0.0]]).unwrap_err();
        assert!(matches!(diag, Error::MetricViolation { axiom: Axiom::Identity, .. }));
        let ragged = MetricSpace::from_matrix(vec![vec![0.0, 1.0], vec![1.0]]).unwrap_err();
        assert!(matches!(ragged, Error::MalformedInput(_)));
    }

    #[test]
    fn bounded_usual_caps_distances() {
        let s = MetricSpace::bounded_line(&[0.0, 0.5, 7.0], 1.0).unwrap();
        assert_eq!(s.d(0, 2), 1.0);
        assert_eq!(s.d(0, 1), 0.5);
        assert!(MetricSpace::bounded_line(&[0.0], 0.0).is_err());
    }

    #[test]
    fn sparse_distances() {
        let s = MetricSpace::sup_norm(vec![SparseVector::unit(1), SparseVector::unit(3)]).unwrap();
        assert_eq!(s.d(0, 1), 1.0);
        // midpoints of the first and third segments of the segment chain
        let m1 = SparseVector::new([(1, 0.5), (2, 0.5)]);
        let m3 = SparseVector::new([(3, 0.5), (4, 0.5)]);
        let s = MetricSpace::sup_norm(vec![m1.clone(), m3.clone()]).unwrap();
        assert_eq!(s.d(0, 1), 0.5);
        let p = MetricSpace::p_norm(vec![m1, m3], 2.0).unwrap();
        assert!((p.d(0, 1) - 1.0).abs() < 1e-15);
        let l1 = MetricSpace::p_norm(vec![SparseVector::unit(1), SparseVector::unit(2)], 1.0).unwrap();
        assert_eq!(l1.d(0, 1), 2.0);
        assert!(MetricSpace::p_norm(vec![SparseVector::unit(1)], 0.5).is_err());
    }

    #[test]
    fn sparse_vector_drops_zeros_and_measures_tails() {
        let v = SparseVector::new([(1, 1.0), (2, 0.0), (5, -2.0)]);
        assert_eq!(v.support_len(), 2);
        assert_eq!(v.tail_mass(1, 2.0), 4.0);
        assert_eq!(v.tail_mass(5, 1.0), 0.0);
    }

    #[test]
    fn euclidean_one_dim() {
        let s = MetricSpace::line(&[1.0, 2.5]).unwrap();
        assert_eq!(s.d(0, 1), 1.5);
        assert_eq!(s.distance(0, 2), Err(Error::IndexOutOfRange { index: 2, len: 2 }));
    }

    #[test]
    fn isolation_degree() {
        let naturals: Vec<f64> = (1..=10).map(f64::from).collect();
        let s = MetricSpace::line(&naturals).unwrap();
        assert_eq!(s.isolation(4).unwrap(), 1.0);

        let roots: Vec<f64> = (1..=100).map(|n| f64::from(n).sqrt()).collect();
        let s = MetricSpace::line(&roots).unwrap();
        // brute-force nearest neighbour of sqrt(4) is sqrt(5), not sqrt(3)
        let oracle = (0..100).filter(|&j| j != 3).map(|j| (roots[j] - 2.0).abs()).fold(f64::INFINITY, f64::min);
        assert_eq!(s.isolation(3).unwrap(), oracle);
        assert!((oracle - (5f64.sqrt() - 2.0)).abs() < 1e-15);
        assert!(oracle < 2.0 - 3f64.sqrt());

        let single = MetricSpace::line(&[3.0]).unwrap();
        assert_eq!(single.isolation(0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn subspace_and_scale() {
        let s = MetricSpace::line(&[0.0, 1.0, 3.0, 6.0]).unwrap();
        let sub = s.subspace(&[3, 1]).unwrap();
        assert_eq!(sub.d(0, 1), 5.0);
        let scaled = s.with_distance_scale(2.0).unwrap();
        assert_eq!(scaled.d(0, 3), 12.0);
        assert_eq!(scaled.diameter(), 12.0);
    }

    #[test]
    fn breakpoints_are_sorted_unique() {
        let s = MetricSpace::line(&[0.0, 1.0, 2.0, 4.0]).unwrap();
        assert_eq!(s.breakpoints(), vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.min_positive_distance(), Some(1.0));
        let dup = MetricSpace::line(&[1.0, 1.0]).unwrap();
        assert_eq!(dup.min_positive_distance(), None);
        assert_eq!(dup.d(0, 1), 0.0);
    }

    #[test]
    fn sampled_validation_catches_nothing_on_valid_large_space() {
        let pts: Vec<f64> = (0..200).map(|i| f64::from(i) * 0.37).collect();
        let s = MetricSpace::line(&pts).unwrap();
        assert_eq!(s.len(), 200);
    }
}
