use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use chainscope::approximation::{approximate, proof_bounds_report};
use chainscope::chain_graph::{chain_discreteness, ChainGraph, DiscretenessMode, ThresholdGrid};
use chainscope::fixtures::{check_claims, verification_specs, FixtureName};
use chainscope::harness::{implication_suite_with, Mutation};
use chainscope::json::real;
use chainscope::metric::write_matrix_csv;
use chainscope::moduli::{
    equi_chain_continuity_check, equicontinuity_at, lipschitz_constant, lits_modulus, local_lipschitz_profile,
    seq_lipschitz_constant, ward_falsifier, SeqMode,
};
use chainscope::sequences::{
    bourbaki_qc_test, cauchy_test, extract_bqc_subsequence, pseudo_cauchy_test, quasi_cauchy_test,
    splice_to_quasi_cauchy, ComponentRule, ToleranceSchedule, Verdict,
};
use chainscope::Execution;
use clap::{ArgGroup, Args, ValueEnum};
use serde_json::{json, Value};

use crate::input::{self, Loaded, SpaceArgs};

/// Stages used when no schedule is given.
const DEFAULT_STAGES: usize = 3;

fn value_name<T: ValueEnum>(v: &T) -> String {
    v.to_possible_value().expect("no skipped variants").get_name().to_string()
}

pub struct Outcome {
    pub inputs: Value,
    pub results: Value,
    /// A test or claim came out negative.
    pub failed: bool,
}

#[derive(Debug, Args)]
pub struct SpaceCmd {
    #[command(flatten)]
    space: SpaceArgs,
    /// Also write the distance matrix as CSV.
    #[arg(long, value_name = "FILE")]
    export_matrix: Option<PathBuf>,
}

pub fn space(args: &SpaceCmd) -> Result<Outcome> {
    let loaded = args.space.load()?;
    let s = &loaded.space;
    let iso = s.isolation_profile();
    let finite: Vec<f64> = iso.iter().copied().filter(|x| x.is_finite()).collect();
    let mean = if finite.is_empty() { f64::NAN } else { finite.iter().sum::<f64>() / finite.len() as f64 };
    let mut results = json!({
        "n": s.len(),
        "provider": s.provider().name(),
        "provider_params": s.provider(),
        "diameter": s.diameter(),
        "min_positive_distance": s.min_positive_distance(),
        "isolation": {
            "min": real(iso.iter().copied().fold(f64::INFINITY, f64::min)),
            "max": real(iso.iter().copied().fold(0.0, f64::max)),
            "mean": real(mean),
            "zero_count": iso.iter().filter(|&&x| x == 0.0).count(),
        },
    });
    if let Some(f) = &loaded.fixture {
        results["landmarks"] = json!(f.landmarks);
        results["blocks"] = json!(f.blocks.len());
        results["prefix_len"] = json!(f.prefix.len());
        results["has_function"] = json!(f.function.is_some());
    }
    if let Some(path) = &args.export_matrix {
        std::fs::write(path, write_matrix_csv(s)).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(Outcome { inputs: json!({ "space": args.space.echo() }), results, failed: false })
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    InAmbient,
    InItself,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("scales").args(["eps", "eps_geom"])))]
pub struct ChainsArgs {
    #[command(flatten)]
    space: SpaceArgs,
    /// Comma-separated chain scales.
    #[arg(long, value_delimiter = ',')]
    eps: Vec<f64>,
    /// Geometric scales: START RATIO COUNT.
    #[arg(long, num_args = 3, value_names = ["START", "RATIO", "COUNT"])]
    eps_geom: Option<Vec<f64>>,
    /// Report the m-step ball around X at every scale.
    #[arg(long, num_args = 2, value_names = ["X", "M"])]
    ball: Option<Vec<String>>,
    /// Report a shortest chain from X to Y at every scale.
    #[arg(long, num_args = 2, value_names = ["X", "Y"])]
    witness: Option<Vec<String>>,
    /// Report the covering profile (k, m_star) at every scale.
    #[arg(long)]
    profile: bool,
    /// JSON array of points for the discreteness thresholds.
    #[arg(long, value_name = "FILE", requires = "discreteness")]
    subset: Option<PathBuf>,
    /// Compute chain-discreteness thresholds of the subset.
    #[arg(long, value_enum, requires = "subset")]
    discreteness: Option<ModeArg>,
    /// Use exact breakpoints instead of the geometric threshold grid.
    #[arg(long, requires = "discreteness")]
    exact: bool,
}

fn scales(args: &ChainsArgs) -> Result<Vec<f64>> {
    let eps = match &args.eps_geom {
        Some(g) => {
            let (start, ratio, count) = (g[0], g[1], g[2]);
            if count < 1.0 || count.fract() != 0.0 {
                bail!("--eps-geom COUNT must be a positive integer, got {count}");
            }
            if ratio.is_nan() || ratio <= 0.0 {
                bail!("--eps-geom RATIO must be positive, got {ratio}");
            }
            (0..count as usize).map(|j| start * ratio.powi(j as i32)).collect()
        }
        None => args.eps.clone(),
    };
    if let Some(bad) = eps.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
        bail!("scales must be positive and finite, got {bad}");
    }
    Ok(eps)
}

pub fn chains(args: &ChainsArgs) -> Result<Outcome> {
    let loaded = args.space.load()?;
    let s = &loaded.space;
    let eps_list = scales(args)?;
    if eps_list.is_empty() && args.discreteness.is_none() {
        bail!("give --eps, --eps-geom or --discreteness");
    }
    let ball = match &args.ball {
        Some(v) => Some((loaded.point(&v[0])?, v[1].parse::<usize>().context("--ball M")?)),
        None => None,
    };
    let witness = match &args.witness {
        Some(v) => Some((loaded.point(&v[0])?, loaded.point(&v[1])?)),
        None => None,
    };
    let mut rows = Vec::with_capacity(eps_list.len());
    for &eps in &eps_list {
        let g = ChainGraph::build(s, eps)?;
        let mut row = json!({
            "eps": eps,
            "components": g.component_count(),
            "edges": g.edge_count(),
            "chainable": g.component_count() == 1,
        });
        if args.profile {
            let p = g.covering_profile();
            row["k"] = json!(p.k);
            row["m_star"] = json!(p.m_star);
            row["centers"] = json!(p.centers);
        }
        if let Some((x, m)) = ball {
            let members = g.ball_layers(x, m)?;
            row["ball"] = json!({ "x": x, "m": m, "size": members.len(), "members": members });
        }
        if let Some((x, y)) = witness {
            row["witness"] = match g.find_chain(x, y)? {
                Some(w) => json!({ "from": x, "to": y, "hops": w.len(), "indices": w.indices }),
                None => json!({ "from": x, "to": y, "hops": null, "indices": null }),
            };
        }
        rows.push(row);
    }
    let mut results = json!({ "n": s.len(), "scales": rows });
    if let (Some(path), Some(mode)) = (&args.subset, args.discreteness) {
        let subset = loaded.prefix(Some(path))?;
        let mode = match mode {
            ModeArg::InAmbient => DiscretenessMode::InAmbient,
            ModeArg::InItself => DiscretenessMode::InItself,
        };
        let grid = if args.exact { ThresholdGrid::ExactBreakpoints } else { ThresholdGrid::default() };
        results["discreteness"] = json!(chain_discreteness(s, &subset, mode, grid)?);
    }
    let inputs = json!({
        "space": args.space.echo(),
        "eps": eps_list,
        "ball": args.ball,
        "witness": args.witness,
        "profile": args.profile,
        "subset": args.subset.as_ref().map(|p| p.display().to_string()),
        "discreteness": args.discreteness.as_ref().map(value_name),
    });
    Ok(Outcome { inputs, results, failed: false })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TestArg {
    Qc,
    Cauchy,
    Pseudo,
    Bqc,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RuleArg {
    Majority,
    FirstNonempty,
}

#[derive(Debug, Args)]
pub struct SeqArgs {
    #[command(flatten)]
    space: SpaceArgs,
    /// JSON array of point indices or landmark names (default: the fixture's enumeration).
    #[arg(long, value_name = "FILE")]
    prefix: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "qc")]
    test: TestArg,
    /// Schedule file or inline literal `[[eps, n], ...]`.
    #[arg(long, value_name = "FILE|JSON")]
    schedule: Option<String>,
    /// Also splice chains into the prefix to make it quasi-Cauchy.
    #[arg(long)]
    splice: bool,
    /// Also extract a subsequence that stays in one chain component per stage.
    #[arg(long)]
    extract: bool,
    #[arg(long, value_enum, default_value = "majority", requires = "extract")]
    rule: RuleArg,
}

fn schedule_or_default(arg: Option<&str>, loaded: &Loaded, len: usize) -> Result<ToleranceSchedule> {
    match arg {
        Some(text) => input::schedule(text),
        None => Ok(ToleranceSchedule::default_for(&loaded.space, len, DEFAULT_STAGES)?),
    }
}

pub fn seq(args: &SeqArgs) -> Result<Outcome> {
    let loaded = args.space.load()?;
    let s = &loaded.space;
    let prefix = loaded.prefix(args.prefix.as_deref())?;
    let schedule = schedule_or_default(args.schedule.as_deref(), &loaded, prefix.len())?;
    let (verdict, consistent) = match args.test {
        TestArg::Bqc => {
            let stages = schedule
                .stages()
                .iter()
                .map(|st| bourbaki_qc_test(s, &prefix[st.start.min(prefix.len() - 1)..], st.eps).map(|v| (st, v)))
                .collect::<chainscope::Result<Vec<_>>>()?;
            let ok = stages.iter().all(|(_, v)| v.status == chainscope::sequences::Status::Consistent);
            let rows: Vec<Value> =
                stages.iter().map(|(st, v)| json!({ "eps": st.eps, "start": st.start, "verdict": v })).collect();
            (json!({ "status": if ok { "consistent" } else { "falsified" }, "stages": rows }), ok)
        }
        test => {
            let v: Verdict = match test {
                TestArg::Qc => quasi_cauchy_test(s, &prefix, &schedule)?,
                TestArg::Cauchy => cauchy_test(s, &prefix, &schedule)?,
                _ => pseudo_cauchy_test(s, &prefix, &schedule)?,
            };
            let ok = v.is_consistent();
            (json!(v), ok)
        }
    };
    let mut results = json!({ "prefix_len": prefix.len(), "schedule": schedule, "verdict": verdict });
    if args.splice {
        let out = splice_to_quasi_cauchy(s, &prefix, &schedule)?;
        results["splice"] = json!({ "length": out.prefix.len(), "prefix": out.prefix, "embedding": out.embedding, "schedule": out.schedule });
    }
    if args.extract {
        let rule = match args.rule {
            RuleArg::Majority => ComponentRule::Majority,
            RuleArg::FirstNonempty => ComponentRule::FirstNonempty,
        };
        results["extract"] = json!(extract_bqc_subsequence(s, &prefix, &schedule, rule)?);
    }
    let inputs = json!({
        "space": args.space.echo(),
        "prefix": args.prefix.as_ref().map(|p| p.display().to_string()),
        "test": value_name(&args.test),
        "schedule": schedule,
        "splice": args.splice,
        "extract": args.extract,
    });
    Ok(Outcome { inputs, results, failed: !consistent })
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SeqModeArg {
    Consecutive,
    AllPairs,
}

#[derive(Debug, Args)]
pub struct ModuliArgs {
    #[command(flatten)]
    space: SpaceArgs,
    /// JSON array of function values (default: the fixture's function).
    #[arg(long, value_name = "FILE")]
    function: Option<PathBuf>,
    /// Prefix for --seq and --ward schedules (default: the fixture's enumeration).
    #[arg(long, value_name = "FILE")]
    prefix: Option<PathBuf>,
    /// Lipschitz constant on pairs closer than DELTA.
    #[arg(long, value_name = "DELTA")]
    lits: Option<f64>,
    /// Per-point Lipschitz constants on balls of radius DELTA.
    #[arg(long, value_name = "DELTA")]
    local: Option<f64>,
    /// Lipschitz constant along the prefix.
    #[arg(long, value_enum)]
    seq: Option<SeqModeArg>,
    /// Search for a quasi-Cauchy prefix whose image has a step of at least EPS.
    #[arg(long, value_name = "EPS")]
    ward: Option<f64>,
    /// Schedule for --ward, as a file or inline literal.
    #[arg(long, value_name = "FILE|JSON", requires = "ward")]
    schedule: Option<String>,
    #[arg(long, default_value_t = 64, requires = "ward")]
    budget: usize,
    /// Seed for randomized parts.
    #[arg(long, env = "CHAINSCOPE_SEED", default_value_t = 0)]
    seed: u64,
    /// Family fixtures: equi-chain-continuity at EPS.
    #[arg(long, value_name = "EPS")]
    equi_chain: Option<f64>,
    /// Family fixtures: plain equicontinuity at point X, scale --equi-eps.
    #[arg(long, value_name = "X", requires = "equi_eps")]
    equicontinuity_at: Option<String>,
    #[arg(long, value_name = "EPS")]
    equi_eps: Option<f64>,
    /// Radius for --equicontinuity-at (default: the largest radius that works).
    #[arg(long, value_name = "DELTA", requires = "equicontinuity_at")]
    equi_delta: Option<f64>,
}

pub fn moduli(args: &ModuliArgs) -> Result<Outcome> {
    let loaded = args.space.load()?;
    let s = &loaded.space;
    let mut results = json!({});
    let family_mode = args.equi_chain.is_some() || args.equicontinuity_at.is_some();
    if family_mode {
        let fixture = loaded.fixture.as_ref().filter(|f| f.domain.is_some());
        let Some(fixture) = fixture else {
            bail!("--equi-chain and --equicontinuity-at need a function-family fixture");
        };
        let domain = fixture.domain.as_ref().expect("checked above");
        let family = fixture.family().expect("family fixtures carry their rows");
        if let Some(eps) = args.equi_chain {
            results["equi_chain"] = json!(equi_chain_continuity_check(domain, &family, eps)?);
        }
        if let (Some(x), Some(eps)) = (&args.equicontinuity_at, args.equi_eps) {
            let x = match fixture.landmark(x) {
                Some(i) => i,
                None => x.parse::<usize>().with_context(|| format!("unknown domain point {x:?}"))?,
            };
            results["equicontinuity"] = json!(equicontinuity_at(domain, &family, x, eps, args.equi_delta)?);
        }
    } else {
        let f = loaded.function(args.function.as_deref())?;
        results["lipschitz"] = json!(lipschitz_constant(s, &f)?);
        if let Some(delta) = args.lits {
            results["lits"] = json!(lits_modulus(s, &f, delta)?);
        }
        if let Some(delta) = args.local {
            let p = local_lipschitz_profile(s, &f, delta)?;
            results["local"] = json!({ "max": real(p.max()), "infinite_count": p.infinite_count(), "profile": p });
        }
        if let Some(mode) = args.seq {
            let prefix = loaded.prefix(args.prefix.as_deref())?;
            let mode = match mode {
                SeqModeArg::Consecutive => SeqMode::Consecutive,
                SeqModeArg::AllPairs => SeqMode::AllPairs,
            };
            results["seq"] = json!(seq_lipschitz_constant(s, &f, &prefix, mode)?);
        }
        if let Some(eps_img) = args.ward {
            let schedule = args.schedule.as_deref().map(input::schedule).transpose()?;
            results["ward"] = json!(ward_falsifier(s, &f, eps_img, schedule.as_ref(), args.budget, args.seed)?);
        }
    }
    let inputs = json!({
        "space": args.space.echo(),
        "function": args.function.as_ref().map(|p| p.display().to_string()),
        "prefix": args.prefix.as_ref().map(|p| p.display().to_string()),
        "lits": args.lits,
        "local": args.local,
        "seq": args.seq.as_ref().map(value_name),
        "ward": args.ward,
        "budget": args.budget,
        "seed": args.seed,
        "equi_chain": args.equi_chain,
        "equicontinuity_at": args.equicontinuity_at,
        "equi_eps": args.equi_eps,
        "equi_delta": args.equi_delta,
    });
    Ok(Outcome { inputs, results, failed: false })
}

#[derive(Debug, Args)]
pub struct ApproxArgs {
    #[command(flatten)]
    space: SpaceArgs,
    /// JSON array of function values.
    #[arg(long, value_name = "FILE", conflicts_with = "canonical")]
    function: Option<PathBuf>,
    /// Use the fixture's own function (the default when no file is given).
    #[arg(long)]
    canonical: bool,
    #[arg(long)]
    eps: f64,
    /// Check the derivative-type bounds along this prefix.
    #[arg(long, value_name = "FILE")]
    bounds_prefix: Option<PathBuf>,
    /// Check the bounds along the fixture's enumeration.
    #[arg(long, conflicts_with = "bounds_prefix")]
    bounds: bool,
    /// Schedule for the bounds check, as a file or inline literal.
    #[arg(long, value_name = "FILE|JSON")]
    schedule: Option<String>,
    /// Include the per-window partition functions.
    #[arg(long)]
    full: bool,
}

pub fn approx(args: &ApproxArgs) -> Result<Outcome> {
    let loaded = args.space.load()?;
    let s = &loaded.space;
    let f = loaded.function(args.function.as_deref())?;
    let d = approximate(s, &f, args.eps)?;
    let mut results = json!({ "decomposition": d.summary_json() });
    if args.full {
        results["decomposition"]["g_parts"] = json!(d.g_parts);
    }
    let mut failed = false;
    if args.bounds || args.bounds_prefix.is_some() {
        let prefix = loaded.prefix(args.bounds_prefix.as_deref())?;
        let schedule = schedule_or_default(args.schedule.as_deref(), &loaded, prefix.len())?;
        let r = proof_bounds_report(s, &f, &d, &prefix, &schedule)?;
        failed = !r.g_bound_holds || r.h_bound_holds == Some(false) || !r.g_lower_holds;
        results["bounds"] = json!(r);
        results["schedule"] = json!(schedule);
    }
    let inputs = json!({
        "space": args.space.echo(),
        "function": args.function.as_ref().map(|p| p.display().to_string()),
        "eps": args.eps,
        "bounds_prefix": args.bounds_prefix.as_ref().map(|p| p.display().to_string()),
        "bounds": args.bounds,
        "schedule": args.schedule,
    });
    Ok(Outcome { inputs, results, failed })
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("which").required(true).args(["all", "fixture"])))]
pub struct VerifyArgs {
    /// Every fixture claim plus the implication suite.
    #[arg(long)]
    all: bool,
    /// Only the claims of one fixture.
    #[arg(long, value_name = "NAME")]
    fixture: Option<FixtureName>,
    /// Seed for randomized parts.
    #[arg(long, env = "CHAINSCOPE_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Multiply every fixture distance by this factor before checking claims.
    #[arg(long, default_value_t = 1.0, hide = true)]
    mutate_distance: f64,
    /// Run the implication suite with the quasi-Cauchy comparator flipped.
    #[arg(long, hide = true)]
    mutate_comparator: bool,
}

pub fn verify(args: &VerifyArgs) -> Result<Outcome> {
    let specs: Vec<_> =
        verification_specs().into_iter().filter(|spec| args.fixture.is_none_or(|f| f == spec.name)).collect();
    let mut claims = Vec::new();
    for spec in &specs {
        claims.extend(check_claims(spec, args.mutate_distance)?);
    }
    let claims_failed = claims.iter().filter(|c| !c.passed).count();
    let lines: Vec<Value> = claims
        .iter()
        .map(|c| {
            json!({
                "status": if c.passed { "pass" } else { "fail" },
                "fixture": c.fixture,
                "id": c.id,
                "anchor": c.anchor,
                "spec": c.spec,
                "detail": c.detail,
            })
        })
        .collect();
    let mut results = json!({
        "claims": lines,
        "claims_total": claims.len(),
        "claims_failed": claims_failed,
    });
    let mut suite_failed = false;
    if args.all {
        let mutation = if args.mutate_comparator { Mutation::FlipComparator } else { Mutation::None };
        let report = implication_suite_with(args.trials, args.seed, mutation, Execution::default())?;
        suite_failed = !report.passed();
        results["suite"] = json!({
            "trials": report.trials,
            "seed": report.seed,
            "mutation": report.mutation,
            "checks": report.records.iter().map(|r| r.checks).sum::<usize>(),
            "violations": report.violations,
            "passed": report.passed(),
        });
    }
    let failed = claims_failed > 0 || suite_failed;
    results["passed"] = json!(!failed);
    let inputs = json!({
        "all": args.all,
        "fixture": args.fixture,
        "seed": args.seed,
        "trials": args.trials,
        "mutate_distance": args.mutate_distance,
        "mutate_comparator": args.mutate_comparator,
    });
    Ok(Outcome { inputs, results, failed })
}
