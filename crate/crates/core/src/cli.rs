//! Run configuration and the `solve`, `compare`, `simulate` and `report` commands.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use simplex::{LpError, LpSolution, LpStatus};
use thiserror::Error;

use crate::benchmarks::{self, ExpGrowthParams};
use crate::discretize::{build_grid, discretize, DiscreteModel};
use crate::export::{canonical_json, content_hash};
use crate::lp_aggregated::{
    aggregate, aggregated_cost, build_aggregated_lp, dimension_report, verify_aggregation_feasibility,
    AggregatedVector, DimensionReport,
};
use crate::lp_occupation::{build_occupation_lp, characteristic_residual, extract_stationary_strategy, occupation_cost};
use crate::model::{Flow, GradualCostFn, ImpulseCostFn, ModelSpec};
use crate::oracle::{bellman_residual, default_lambda_grid, dp_value, lagrangian_sweep};
use crate::simulate::{estimate_to_csv, simulate_many, summarize, trajectories_to_jsonl};
use crate::strategy::{
    check_domination, induce_markov_strategy, strategy_occupation, MarkovStrategy, Policy, StationaryStrategy,
    DEFAULT_MAX_STEPS,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{lp} LP is infeasible")]
    Infeasible { lp: &'static str },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 1,
            CliError::Infeasible { .. } => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<LpError> for CliError {
    fn from(e: LpError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum LpChoice {
    Occupation,
    Aggregated,
    #[default]
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintConfig {
    pub objective: usize,
    pub bound: f64,
}

/// Overrides applied on top of a preset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,
    #[serde(default, rename = "K", skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FlowConfig {
    /// `x·e^{rate·u}`.
    Exponential { rate: f64 },
    /// `x + velocity·u`.
    Linear { velocity: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum JumpConfig {
    /// `x + a`.
    Additive,
}

/// Gradual cost rates vanish for `x ≥ below` and are taken to be positive below it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GradualCostConfig {
    /// `Σ coeffs[i]·xⁱ` for `x < below`.
    PiecewisePolynomial { coeffs: Vec<f64>, below: f64 },
    /// `scale·e^{rate·x}` for `x < below`.
    Exponential { scale: f64, rate: f64, below: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ImpulseCostConfig {
    /// `Σ coeffs[i]·aⁱ`.
    ActionPolynomial { coeffs: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineModel {
    pub x0: f64,
    pub flow: FlowConfig,
    pub jump: JumpConfig,
    pub action_min: f64,
    pub action_max: f64,
    pub impulse_floor: f64,
    /// One entry per objective; index 0 is minimized.
    pub gradual_costs: Vec<GradualCostConfig>,
    pub impulse_costs: Vec<ImpulseCostConfig>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<ParamOverrides>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inline: Option<InlineModel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub dt: f64,
    #[serde(default = "default_n_actions")]
    pub n_actions: usize,
    #[serde(default)]
    pub constraints: Vec<ConstraintConfig>,
    #[serde(default)]
    pub lp: LpChoice,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_n_runs")]
    pub n_runs: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_n_actions() -> usize {
    76
}

fn default_n_runs() -> usize {
    1000
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn poly(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

impl RunConfig {
    pub fn for_preset(name: &str) -> Self {
        Self {
            model: ModelConfig {
                preset: Some(name.to_string()),
                ..ModelConfig::default()
            },
            dt: 0.02,
            n_actions: default_n_actions(),
            constraints: Vec::new(),
            lp: LpChoice::Both,
            seed: 0,
            n_runs: default_n_runs(),
            output_dir: default_output_dir(),
        }
    }

    /// Parses TOML; errors carry the line and column of the offending key.
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(CliError::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if self.n_actions == 0 {
            return Err(CliError::Config("n_actions must be at least 1".into()));
        }
        for c in &self.constraints {
            if c.bound.is_nan() || c.bound < 0.0 {
                return Err(CliError::Config(format!("constraint bound {} must be ≥ 0", c.bound)));
            }
            if c.objective == 0 {
                return Err(CliError::Config("objective 0 is minimized and cannot be constrained".into()));
            }
        }
        match (&self.model.preset, &self.model.inline) {
            (Some(_), Some(_)) => Err(CliError::Config("model.preset and model.inline are exclusive".into())),
            (None, None) => Err(CliError::Config("model needs a preset or an inline table".into())),
            (None, Some(_)) if self.model.params.is_some() => {
                Err(CliError::Config("model.params only applies to presets".into()))
            }
            _ => Ok(()),
        }
    }

    /// Provenance hash of everything except the output directory.
    pub fn hash(&self) -> String {
        let mut cfg = self.clone();
        cfg.output_dir = PathBuf::new();
        content_hash(&cfg).expect("configuration serializes")
    }

    /// Preset parameters after overrides, if the model is a preset.
    pub fn preset_params(&self) -> Result<Option<ExpGrowthParams>, CliError> {
        let Some(name) = &self.model.preset else {
            return Ok(None);
        };
        let mut p = benchmarks::preset(name).ok_or_else(|| {
            CliError::Config(format!(
                "unknown model '{name}'; available: {}",
                benchmarks::PRESET_NAMES.join(", ")
            ))
        })?;
        if let Some(o) = &self.model.params {
            p.x0 = o.x0.unwrap_or(p.x0);
            p.k = o.k.unwrap_or(p.k);
            p.c = o.c.unwrap_or(p.c);
            p.a_min = o.a_min.unwrap_or(p.a_min);
            p.a_max = o.a_max.unwrap_or(p.a_max);
            p.budget_rate = o.budget_rate.unwrap_or(p.budget_rate);
        }
        Ok(Some(p))
    }

    pub fn build_model(&self) -> Result<ModelSpec, CliError> {
        self.validate()?;
        let mut spec = match (self.preset_params()?, &self.model.inline) {
            (Some(p), _) => benchmarks::build_expgrowth(&p).map_err(|e| CliError::Config(e.to_string()))?,
            (None, Some(m)) => build_inline(m)?,
            (None, None) => unreachable!("validated"),
        };
        for c in &self.constraints {
            let n = spec.n_objectives();
            let slot = spec.constraint_bounds.get_mut(c.objective - 1).ok_or_else(|| {
                CliError::Config(format!("objective {} does not exist; the model has {n}", c.objective))
            })?;
            *slot = c.bound;
        }
        spec.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(spec)
    }

    pub fn discrete_model(&self) -> Result<DiscreteModel, CliError> {
        let spec = self.build_model()?;
        let grid = build_grid(&spec, self.dt, self.n_actions).map_err(|e| CliError::Config(e.to_string()))?;
        discretize(&spec, &grid).map_err(|e| CliError::Config(e.to_string()))
    }
}

fn build_inline(m: &InlineModel) -> Result<ModelSpec, CliError> {
    if m.gradual_costs.is_empty() || m.gradual_costs.len() != m.impulse_costs.len() {
        return Err(CliError::Config("need one gradual and one impulse cost per objective".into()));
    }
    let (flow, speed): (Flow, f64) = match m.flow {
        FlowConfig::Exponential { rate } if rate > 0.0 && m.x0 > 0.0 && m.action_min >= 0.0 => {
            (Flow::Analytic(Arc::new(move |x, u| x * (rate * u).exp())), rate * m.x0)
        }
        FlowConfig::Linear { velocity } if velocity > 0.0 && m.action_min >= 0.0 => {
            (Flow::Analytic(Arc::new(move |x, u| x + velocity * u)), velocity)
        }
        _ => {
            return Err(CliError::Config(
                "flows need a positive rate, a positive x0 for exponential growth, and a_min ≥ 0".into(),
            ))
        }
    };
    let cutoff = m
        .gradual_costs
        .iter()
        .map(|g| match g {
            GradualCostConfig::PiecewisePolynomial { below, .. } | GradualCostConfig::Exponential { below, .. } => *below,
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let flow_cfg = m.flow.clone();
    let hitting = move |x: f64| -> f64 {
        if x >= cutoff {
            return 0.0;
        }
        match &flow_cfg {
            FlowConfig::Exponential { rate } => (cutoff / x).ln() / rate,
            FlowConfig::Linear { velocity } => (cutoff - x) / velocity,
        }
    };
    let gradual_costs: Vec<GradualCostFn> = m
        .gradual_costs
        .iter()
        .cloned()
        .map(|g| -> GradualCostFn {
            match g {
                GradualCostConfig::PiecewisePolynomial { coeffs, below } => {
                    Arc::new(move |x, _| if x < below { poly(&coeffs, x) } else { 0.0 })
                }
                GradualCostConfig::Exponential { scale, rate, below } => {
                    Arc::new(move |x, _| if x < below { scale * (rate * x).exp() } else { 0.0 })
                }
            }
        })
        .collect();
    let impulse_costs: Vec<ImpulseCostFn> = m
        .impulse_costs
        .iter()
        .cloned()
        .map(|c| -> ImpulseCostFn {
            match c {
                ImpulseCostConfig::ActionPolynomial { coeffs } => Arc::new(move |_, _, a| poly(&coeffs, a)),
            }
        })
        .collect();
    let JumpConfig::Additive = m.jump;
    let j = gradual_costs.len();
    Ok(ModelSpec {
        flow,
        jump: Arc::new(|x, a| x + a),
        gradual_costs,
        impulse_costs,
        action_min: m.action_min,
        action_max: m.action_max,
        impulse_floor: m.impulse_floor,
        x0: m.x0,
        constraint_bounds: vec![f64::INFINITY; j - 1],
        horizon_hint: None,
        speed_floor: speed,
        hitting_time: Some(Arc::new(hitting)),
    })
}

#[derive(Debug, Parser)]
#[command(name = "impulse-lp", version, about = "Occupation-measure LPs for impulse control of deterministic flows")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the LPs and write solution.json, strategy.json and summary.csv.
    Solve(CommonArgs),
    /// Run both LPs, the oracle, strategy induction, simulation and identity checks.
    Compare(CommonArgs),
    /// Simulate a strategy and write trajectories.jsonl and summary.csv.
    Simulate(CommonArgs),
    /// Print grid and LP dimensions and any results already in the output directory.
    Report(CommonArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Preset model name.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub n_actions: Option<usize>,
    #[arg(long, value_enum)]
    pub lp: Option<LpChoice>,
    /// `j=bound`, repeatable.
    #[arg(long = "constraint", value_parser = parse_constraint)]
    pub constraints: Vec<ConstraintConfig>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Include LP variables and balance residuals in solution.json.
    #[arg(long)]
    pub emit_balance: bool,
    /// Strategy file for `simulate`; defaults to solving first.
    #[arg(long)]
    pub strategy: Option<PathBuf>,
}

fn parse_constraint(s: &str) -> Result<ConstraintConfig, String> {
    let (j, b) = s.split_once('=').ok_or_else(|| format!("expected j=bound, got '{s}'"))?;
    Ok(ConstraintConfig {
        objective: j.trim().parse().map_err(|e| format!("bad objective index: {e}"))?,
        bound: b.trim().parse().map_err(|e| format!("bad bound: {e}"))?,
    })
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

impl CommonArgs {
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match (&self.config, &self.model) {
            (Some(path), _) => RunConfig::from_toml(&read(path)?)?,
            (None, Some(name)) => RunConfig::for_preset(name),
            (None, None) => return Err(CliError::Config("pass --config or --model".into())),
        };
        if let (Some(_), Some(name)) = (&self.config, &self.model) {
            cfg.model = ModelConfig {
                preset: Some(name.clone()),
                ..ModelConfig::default()
            };
        }
        if let Some(v) = self.dt {
            cfg.dt = v;
        }
        if let Some(v) = self.n_actions {
            cfg.n_actions = v;
        }
        if let Some(v) = self.lp {
            cfg.lp = v;
        }
        for c in &self.constraints {
            cfg.constraints.retain(|d| d.objective != c.objective);
            cfg.constraints.push(c.clone());
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.runs {
            cfg.n_runs = v;
        }
        if let Some(v) = &self.out {
            cfg.output_dir = v.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Solution of one LP with its objective values per index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpResult {
    pub lp: String,
    pub status: String,
    pub objectives: Vec<f64>,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_infeasibility: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variables: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub balance_residuals: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionDoc {
    pub config_hash: String,
    pub cells: usize,
    pub origins: usize,
    pub actions: usize,
    pub dimensions: DimensionReport,
    pub results: Vec<LpResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value_gap: Option<f64>,
}

/// Serialized as `{"markov": …}` or `{"stationary": …}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyDoc {
    Markov(MarkovStrategy),
    Stationary(StationaryStrategy),
}

impl StrategyDoc {
    pub fn policy(&self) -> &dyn Policy {
        match self {
            StrategyDoc::Markov(m) => m,
            StrategyDoc::Stationary(s) => s,
        }
    }

    pub fn validate(&self, dm: &DiscreteModel) -> Result<(), String> {
        match self {
            StrategyDoc::Markov(m) => m.validate(dm),
            StrategyDoc::Stationary(s) => MarkovStrategy {
                steps: vec![s.kernels.clone()],
            }
            .validate(dm),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyFile {
    pub config_hash: String,
    pub strategy: StrategyDoc,
}

/// Both LP solutions, when requested.
pub struct Solved {
    pub dm: DiscreteModel,
    pub occupation: Option<LpSolution>,
    pub aggregated: Option<LpSolution>,
}

impl Solved {
    pub fn eta(&self) -> Option<AggregatedVector> {
        self.aggregated
            .as_ref()
            .map(|s| AggregatedVector::from_columns(&s.primal, &self.dm))
    }

    /// The induced Markov strategy when the aggregated LP ran, otherwise the
    /// stationary strategy read off the occupation solution.
    pub fn strategy(&self) -> Result<StrategyDoc, CliError> {
        if let Some(eta) = self.eta() {
            let (pi, _) = induce_markov_strategy(&eta, &self.dm, DEFAULT_MAX_STEPS)
                .map_err(|e| CliError::Numerical(e.to_string()))?;
            return Ok(StrategyDoc::Markov(pi));
        }
        let sol = self.occupation.as_ref().expect("at least one LP ran");
        let lp = build_occupation_lp(&self.dm);
        Ok(StrategyDoc::Stationary(extract_stationary_strategy(&lp.vector(&sol.primal), &self.dm)))
    }
}

fn check_status(sol: &LpSolution, lp: &'static str) -> Result<(), CliError> {
    match sol.status {
        LpStatus::Optimal => Ok(()),
        LpStatus::Infeasible => Err(CliError::Infeasible { lp }),
        LpStatus::Unbounded => Err(CliError::Numerical(format!("{lp} LP reported unbounded"))),
    }
}

pub fn solve_config(cfg: &RunConfig) -> Result<Solved, CliError> {
    let dm = cfg.discrete_model()?;
    let mut out = Solved {
        occupation: None,
        aggregated: None,
        dm,
    };
    if matches!(cfg.lp, LpChoice::Aggregated | LpChoice::Both) {
        let sol = simplex::solve(&build_aggregated_lp(&out.dm).lp)?;
        check_status(&sol, "aggregated")?;
        out.aggregated = Some(sol);
    }
    if matches!(cfg.lp, LpChoice::Occupation | LpChoice::Both) {
        let sol = simplex::solve(&build_occupation_lp(&out.dm).lp)?;
        check_status(&sol, "occupation")?;
        out.occupation = Some(sol);
    }
    Ok(out)
}

fn lp_results(solved: &Solved, emit_balance: bool) -> Vec<LpResult> {
    let dm = &solved.dm;
    let mut results = Vec::new();
    let status = |s: &LpSolution| format!("{:?}", s.status).to_lowercase();
    if let Some(sol) = &solved.occupation {
        let mu = build_occupation_lp(dm).vector(&sol.primal);
        results.push(LpResult {
            lp: "occupation".into(),
            status: status(sol),
            objectives: (0..dm.n_objectives).map(|j| occupation_cost(&mu, dm, j)).collect(),
            iterations: sol.diagnostics.iterations,
            primal_residual: sol.diagnostics.primal_residual,
            dual_infeasibility: sol.diagnostics.dual_infeasibility,
            variables: emit_balance.then(|| sol.primal.clone()),
            balance_residuals: emit_balance.then(|| vec![characteristic_residual(&mu, dm)]),
        });
    }
    if let (Some(sol), Some(eta)) = (&solved.aggregated, solved.eta()) {
        results.push(LpResult {
            lp: "aggregated".into(),
            status: status(sol),
            objectives: (0..dm.n_objectives).map(|j| aggregated_cost(&eta, dm, j)).collect(),
            iterations: sol.diagnostics.iterations,
            primal_residual: sol.diagnostics.primal_residual,
            dual_infeasibility: sol.diagnostics.dual_infeasibility,
            variables: emit_balance.then(|| sol.primal.clone()),
            balance_residuals: emit_balance.then(|| verify_aggregation_feasibility(&eta, dm).residuals),
        });
    }
    results
}

fn summary_csv(results: &[LpResult], hash: &str) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["lp", "status", "objective_index", "value", "iterations", "config_hash"])
        .expect("in-memory write");
    for r in results {
        for (j, v) in r.objectives.iter().enumerate() {
            w.write_record([
                r.lp.clone(),
                r.status.clone(),
                j.to_string(),
                format!("{v:.17e}"),
                r.iterations.to_string(),
                hash.to_string(),
            ])
            .expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

/// Exit code when a `compare` check fails.
pub const EXIT_CHECK_FAILED: i32 = 4;

/// Text written to stdout, the files produced and the process exit code.
#[derive(Debug, Default)]
pub struct Outcome {
    pub lines: Vec<String>,
    pub files: Vec<PathBuf>,
    pub exit_code: i32,
}

pub fn cmd_solve(cfg: &RunConfig, emit_balance: bool) -> Result<Outcome, CliError> {
    let hash = cfg.hash();
    let solved = solve_config(cfg)?;
    let dm = &solved.dm;
    let results = lp_results(&solved, emit_balance);
    let value_gap = match results.as_slice() {
        [a, b] => Some((a.objectives[0] - b.objectives[0]).abs()),
        _ => None,
    };
    let doc = SolutionDoc {
        config_hash: hash.clone(),
        cells: dm.n_cells(),
        origins: dm.grid.n_origins(),
        actions: dm.n_actions(),
        dimensions: dimension_report(dm),
        results: results.clone(),
        value_gap,
    };
    let strategy = StrategyFile {
        config_hash: hash.clone(),
        strategy: solved.strategy()?,
    };
    let mut out = Outcome::default();
    let dir = &cfg.output_dir;
    out.files.push(write(dir, "solution.json", &to_json(&doc))?);
    out.files.push(write(dir, "strategy.json", &to_json(&strategy))?);
    out.files.push(write(dir, "summary.csv", &summary_csv(&results, &hash))?);
    for r in &results {
        out.lines.push(format!("{:<11} {:<10} value {:.12}", r.lp, r.status, r.objectives[0]));
    }
    if let Some(g) = value_gap {
        out.lines.push(format!("gap {g:.3e}"));
    }
    Ok(out)
}

fn to_json<T: Serialize>(v: &T) -> String {
    canonical_json(v).expect("output serializes")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChecksDoc {
    pub config_hash: String,
    pub all_passed: bool,
    pub checks: Vec<Check>,
}

fn check(name: &str, value: f64, tolerance: f64, detail: String) -> Check {
    Check {
        name: name.into(),
        passed: value <= tolerance,
        value,
        tolerance,
        detail,
    }
}

/// Runs every cross-check on one configuration; both LPs are always solved.
pub fn run_checks(cfg: &RunConfig) -> Result<ChecksDoc, CliError> {
    let mut cfg = cfg.clone();
    cfg.lp = LpChoice::Both;
    let solved = solve_config(&cfg)?;
    let dm = &solved.dm;
    let occ_lp = build_occupation_lp(dm);
    let mu = occ_lp.vector(&solved.occupation.as_ref().expect("both ran").primal);
    let eta = solved.eta().expect("both ran");
    let v_occ = occupation_cost(&mu, dm, 0);
    let v_agg = aggregated_cost(&eta, dm, 0);
    let mut checks = vec![check(
        "lp_equivalence",
        (v_occ - v_agg).abs(),
        1e-6,
        format!("occupation {v_occ:.12}, aggregated {v_agg:.12}"),
    )];

    let active = dm.active_constraints();
    match active.len() {
        0 => {
            let table = dp_value(dm).map_err(|e| CliError::Numerical(e.to_string()))?;
            let v = table.initial_value(dm);
            checks.push(check("dp_oracle", (v - v_occ).abs(), 1e-6, format!("dp {v:.12}")));
            let mut w = vec![0.0; dm.n_objectives];
            w[0] = 1.0;
            checks.push(check(
                "bellman_residual",
                bellman_residual(dm, &w, &table.v),
                1e-12,
                format!("{} sweeps", table.sweeps),
            ));
        }
        1 if dm.n_objectives == 2 => {
            let r = lagrangian_sweep(dm, &default_lambda_grid()).map_err(|e| CliError::Numerical(e.to_string()))?;
            let violation = (r.lower_bound - v_agg).max(v_agg - r.upper_bound).max(0.0);
            checks.push(check(
                "lagrangian_bracket",
                violation,
                1e-9,
                format!("[{:.9}, {:.9}] around {v_agg:.9}", r.lower_bound, r.upper_bound),
            ));
        }
        _ => {}
    }

    let image = aggregate(&mu, dm);
    let bal = verify_aggregation_feasibility(&image, dm);
    let cost_gap = (0..dm.n_objectives)
        .map(|j| (aggregated_cost(&image, dm, j) - occupation_cost(&mu, dm, j)).abs())
        .fold(0.0, f64::max);
    checks.push(check(
        "aggregation_feasibility",
        bal.max_residual.max(cost_gap),
        1e-9,
        format!("balance {:.2e}, cost {:.2e}", bal.max_residual, cost_gap),
    ));

    let (pi, _) = induce_markov_strategy(&eta, dm, DEFAULT_MAX_STEPS).map_err(|e| CliError::Numerical(e.to_string()))?;
    let prop = strategy_occupation(&pi, dm, DEFAULT_MAX_STEPS);
    let eta_tilde = aggregate(&prop.occupation, dm);
    let dom = check_domination(&eta_tilde, &eta);
    checks.push(check(
        "induced_domination",
        dom.max_violation,
        1e-8,
        format!("{} steps", pi.steps.len()),
    ));
    let exact: Vec<f64> = (0..dm.n_objectives).map(|j| occupation_cost(&prop.occupation, dm, j)).collect();
    checks.push(check(
        "induced_value",
        (exact[0] - v_agg).abs(),
        1e-6,
        format!("strategy {:.12}", exact[0]),
    ));

    let trajectories = simulate_many(dm, &pi, cfg.n_runs, cfg.seed);
    let est = summarize(&trajectories, dm.n_objectives);
    let sim_gap = (0..dm.n_objectives)
        .map(|j| (est.mean[j] - exact[j]).abs() - 3.0 * est.stderr[j])
        .fold(0.0, f64::max);
    checks.push(check(
        "simulation",
        sim_gap,
        1e-6,
        format!("n = {}, mean {:.6} ± {:.2e}", est.n, est.mean[0], est.stderr[0]),
    ));

    if cfg.preset_params()?.is_some() {
        let rep = benchmarks::verify_objective_equality(&eta, dm);
        checks.push(check(
            "objective_forms",
            rep.max_gap,
            1e-9,
            format!("{:.12}", rep.aggregated_form),
        ));
    }

    let dims = dimension_report(dm);
    let smaller = dims.cells == 0 || dims.aggregated_columns < dims.occupation_columns;
    checks.push(Check {
        name: "dimension".into(),
        passed: smaller,
        value: dims.aggregated_columns as f64,
        tolerance: dims.occupation_columns as f64,
        detail: format!(
            "{} vs {} columns (product {} vs {})",
            dims.aggregated_columns,
            dims.occupation_columns,
            dims.aggregated_product_dimension,
            dims.occupation_product_dimension
        ),
    });

    Ok(ChecksDoc {
        config_hash: cfg.hash(),
        all_passed: checks.iter().all(|c| c.passed),
        checks,
    })
}

pub fn cmd_compare(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let doc = run_checks(cfg)?;
    let mut out = Outcome::default();
    out.files.push(write(&cfg.output_dir, "checks.json", &to_json(&doc))?);
    for c in &doc.checks {
        out.lines.push(format!(
            "{:<4} {:<24} {:>12.3e} ≤ {:<9.1e} {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.tolerance,
            c.detail
        ));
    }
    if !doc.all_passed {
        out.exit_code = EXIT_CHECK_FAILED;
    }
    Ok(out)
}

pub fn cmd_simulate(cfg: &RunConfig, strategy_path: Option<&Path>) -> Result<Outcome, CliError> {
    let hash = cfg.hash();
    let (dm, strategy) = match strategy_path {
        Some(path) => {
            let file: StrategyFile = serde_json::from_str(&read(path)?)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            (cfg.discrete_model()?, file.strategy)
        }
        None => {
            let solved = solve_config(cfg)?;
            let s = solved.strategy()?;
            (solved.dm, s)
        }
    };
    strategy
        .validate(&dm)
        .map_err(|e| CliError::Config(format!("strategy does not fit the model: {e}")))?;
    let trajectories = simulate_many(&dm, strategy.policy(), cfg.n_runs, cfg.seed);
    let est = summarize(&trajectories, dm.n_objectives);
    let mut out = Outcome::default();
    out.files.push(write(
        &cfg.output_dir,
        "trajectories.jsonl",
        &trajectories_to_jsonl(&trajectories, &hash),
    )?);
    out.files.push(write(&cfg.output_dir, "summary.csv", &estimate_to_csv(&est, &hash))?);
    for j in 0..est.mean.len() {
        out.lines
            .push(format!("objective {j}: {:.9} ± {:.3e} (n = {})", est.mean[j], est.stderr[j], est.n));
    }
    if est.non_absorbed > 0 {
        out.lines.push(format!("{} runs hit the event cap", est.non_absorbed));
    }
    Ok(out)
}

pub fn cmd_report(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let dm = cfg.discrete_model()?;
    let d = dimension_report(&dm);
    let mut out = Outcome::default();
    out.lines.push(format!("config hash       {}", cfg.hash()));
    out.lines.push(format!(
        "grid              {} cells, {} origins, {} actions, dt = {}",
        d.cells,
        dm.grid.n_origins(),
        d.actions,
        dm.dt()
    ));
    out.lines.push(format!("max snap distance {:.3e}", dm.diagnostics.max_snap_distance));
    out.lines.push(format!(
        "occupation LP     {} columns (product {})",
        d.occupation_columns, d.occupation_product_dimension
    ));
    out.lines.push(format!(
        "aggregated LP     {} columns (product {})",
        d.aggregated_columns, d.aggregated_product_dimension
    ));
    let sol = cfg.output_dir.join("solution.json");
    if let Ok(text) = fs::read_to_string(&sol) {
        let doc: SolutionDoc =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", sol.display())))?;
        for r in &doc.results {
            out.lines.push(format!("{:<17} {} {:.12}", r.lp, r.status, r.objectives[0]));
        }
    }
    let checks = cfg.output_dir.join("checks.json");
    if let Ok(text) = fs::read_to_string(&checks) {
        let doc: ChecksDoc =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", checks.display())))?;
        for c in &doc.checks {
            out.lines.push(format!("{:<17} {}", c.name, if c.passed { "pass" } else { "FAIL" }));
        }
    }
    Ok(out)
}

/// Dispatches a parsed command line.
pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Solve(a) => cmd_solve(&a.resolve()?, a.emit_balance),
        Command::Compare(a) => cmd_compare(&a.resolve()?),
        Command::Simulate(a) => cmd_simulate(&a.resolve()?, a.strategy.as_deref()),
        Command::Report(a) => cmd_report(&a.resolve()?),
    }
}
