use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use chainscope::fixtures::{generate, FixtureName, FixtureOutput, FixtureParams, FixtureSpec};
use chainscope::metric::{parse_matrix_csv, parse_points_jsonl};
use chainscope::moduli::ScalarFunction;
use chainscope::sequences::ToleranceSchedule;
use chainscope::MetricSpace;
use clap::{ArgGroup, Args};
use serde_json::{json, Value};

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["matrix", "points", "fixture"])))]
pub struct SpaceArgs {
    /// Header-free CSV distance matrix.
    #[arg(long, value_name = "FILE")]
    pub matrix: Option<PathBuf>,
    /// JSONL point file.
    #[arg(long, value_name = "FILE")]
    pub points: Option<PathBuf>,
    /// Built-in fixture name.
    #[arg(long, value_name = "NAME")]
    pub fixture: Option<FixtureName>,
    /// Fixture size (defaults per fixture).
    #[arg(long, requires = "fixture")]
    pub n: Option<usize>,
    /// Segment-chain subdivision.
    #[arg(long, default_value_t = 1, requires = "fixture")]
    pub subdiv: usize,
    #[arg(long, requires = "fixture")]
    pub variant: Option<String>,
    /// Extra fixture parameters as a JSON object, e.g. '{"k_max": 8}'.
    #[arg(long, value_name = "JSON", requires = "fixture")]
    pub params: Option<String>,
}

/// A loaded space plus whatever a fixture brings along.
pub struct Loaded {
    pub space: MetricSpace,
    pub fixture: Option<FixtureOutput>,
}

impl SpaceArgs {
    pub fn load(&self) -> Result<Loaded> {
        if let Some(path) = &self.matrix {
            let space = parse_matrix_csv(&read(path)?).with_context(|| format!("loading {}", path.display()))?;
            return Ok(Loaded { space, fixture: None });
        }
        if let Some(path) = &self.points {
            let space = parse_points_jsonl(&read(path)?).with_context(|| format!("loading {}", path.display()))?;
            return Ok(Loaded { space, fixture: None });
        }
        let spec = self.fixture_spec()?.expect("clap enforces a source");
        let out = generate(&spec)?;
        Ok(Loaded { space: out.space.clone(), fixture: Some(out) })
    }

    fn fixture_spec(&self) -> Result<Option<FixtureSpec>> {
        let Some(name) = self.fixture else {
            return Ok(None);
        };
        let mut params: FixtureParams = match &self.params {
            Some(text) => serde_json::from_str(text).context("parsing --params")?,
            None => FixtureParams::default(),
        };
        if self.variant.is_some() {
            params.variant = self.variant.clone();
        }
        let n = self.n.unwrap_or(name.default_size());
        Ok(Some(FixtureSpec::new(name, n).with_subdiv(self.subdiv).with_params(params)))
    }

    pub fn echo(&self) -> Value {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        match self.fixture_spec() {
            Ok(Some(spec)) => json!({ "fixture": spec }),
            _ => json!({ "matrix": path(&self.matrix), "points": path(&self.points) }),
        }
    }
}

impl Loaded {
    fn landmarks(&self) -> Option<&BTreeMap<String, usize>> {
        self.fixture.as_ref().map(|f| &f.landmarks)
    }

    /// A point given as an index or as a fixture landmark name.
    pub fn point(&self, token: &str) -> Result<usize> {
        let index = match token.parse::<usize>() {
            Ok(i) => i,
            Err(_) => *self.landmarks().and_then(|l| l.get(token)).ok_or_else(|| anyhow!("unknown point {token:?}"))?,
        };
        self.space.check_index(index)?;
        Ok(index)
    }

    /// A prefix from a JSON array of indices or landmark names; without a file,
    /// the fixture's canonical prefix.
    pub fn prefix(&self, file: Option<&Path>) -> Result<Vec<usize>> {
        let Some(path) = file else {
            return self
                .fixture
                .as_ref()
                .map(|f| f.prefix.clone())
                .ok_or_else(|| anyhow!("--prefix is required for spaces loaded from files"));
        };
        let items: Vec<Value> =
            serde_json::from_str(&read(path)?).with_context(|| format!("parsing prefix {}", path.display()))?;
        items
            .iter()
            .map(|v| match v {
                Value::Number(n) => n
                    .as_u64()
                    .ok_or_else(|| anyhow!("prefix entry {n} is not an index"))
                    .and_then(|i| self.point(&i.to_string())),
                Value::String(s) => self.point(s),
                other => bail!("prefix entry {other} is neither an index nor a name"),
            })
            .collect()
    }

    /// Function values from a JSON array, or the fixture's own function.
    pub fn function(&self, file: Option<&Path>) -> Result<ScalarFunction> {
        match file {
            Some(path) => {
                let values: Vec<f64> = serde_json::from_str(&read(path)?)
                    .with_context(|| format!("parsing function {}", path.display()))?;
                Ok(ScalarFunction::new(&self.space, values)?)
            }
            None => self
                .fixture
                .as_ref()
                .and_then(|f| f.function.clone())
                .ok_or_else(|| anyhow!("this space has no canonical function; pass --function")),
        }
    }
}

/// A schedule given inline as `[[eps, n], ...]` or as a path to such a file.
pub fn schedule(arg: &str) -> Result<ToleranceSchedule> {
    let text = if arg.trim_start().starts_with('[') { arg.to_string() } else { read(Path::new(arg))? };
    serde_json::from_str(&text).context("parsing schedule")
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}
