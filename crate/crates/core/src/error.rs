use serde::Serialize;
use thiserror::Error;

/// Metric axiom that a candidate distance failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axiom {
    Finite,
    Nonnegative,
    Identity,
    Symmetry,
    Triangle,
}

impl std::fmt::Display for Axiom {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Axiom::Finite => "finite",
            Axiom::Nonnegative => "nonnegative",
            Axiom::Identity => "identity",
            Axiom::Symmetry => "symmetry",
            Axiom::Triangle => "triangle",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Witness is `(i, k, j)`: for the triangle axiom `d(i,k) > d(i,j) + d(j,k)`.
    #[error("metric violation ({axiom}) at witness {witness:?}")]
    MetricViolation { axiom: Axiom, witness: (usize, usize, usize) },
    #[error("malformed input: {0}")]
    MalformedInput(String),
    #[error("index {index} out of range for {len} points")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("epsilon must be positive and finite, got {0}")]
    NonPositiveEpsilon(f64),
    #[error("chain length must be at least 1")]
    NonPositiveLength,
    #[error("subset is empty")]
    EmptySubset,
    #[error("point {0} is covered by neither set")]
    NotACover(usize),
    #[error("prefix of length {0} is too short")]
    ShortPrefix(usize),
    #[error("bad schedule: {0}")]
    BadSchedule(String),
    #[error("no chain at the scale of stage {stage} joins prefix positions {pair} and {}", pair + 1)]
    NoChainAtScale { stage: usize, pair: usize },
    #[error("survivors exhausted after {completed_stages} completed stages")]
    Exhausted { completed_stages: usize },
    #[error("degenerate space with {0} point(s)")]
    DegenerateSpace(usize),
    #[error("function family is empty")]
    EmptyFamily,
    #[error("balls {first} and {second} overlap at point {witness}")]
    OverlappingBalls { first: usize, second: usize, witness: usize },
    #[error("point {0} lies in no level window")]
    InconsistentLevels(usize),
    #[error("prefix is not quasi-Cauchy consistent at the supplied schedule")]
    PrefixNotQuasiCauchy,
    #[error("unknown fixture {0:?}")]
    UnknownFixture(String),
    #[error("bad parameter: {0}")]
    BadParam(String),
    #[error("bad random space spec: {0}")]
    BadSpec(String),
    #[error("oracle input of {n} points exceeds the limit of {limit}")]
    TooLarge { n: usize, limit: usize },
    #[error("expected {expected} values, found {found}")]
    LengthMismatch { expected: usize, found: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveEpsilon(eps))
    }
}
