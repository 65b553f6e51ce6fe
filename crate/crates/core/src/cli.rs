//! Command implementations behind the `isect` binary.
//!
//! Each command takes parsed inputs and returns its whole text output with an
//! exit code, so the binary only dispatches and tests can call commands
//! directly. Output is tab-separated and byte-deterministic.
//!
//! Scenario files express every time in ticks. Internally a tick is one time
//! unit; `delta` is echoed but does not rescale anything (it would multiply
//! every cost by the same factor).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::equilibrium::{
    classify, closed_form_equilibria, nash_oracle, verify_soundness, CaseLabel,
};
use crate::fcfs::{
    fcfs_allocate, lottery_is_feasible, Agent, Allocation, AllocationLottery, ReportPair, Scenario,
};
use crate::mechanism::{
    compare_table1, run_direct_mechanism, verify_strategy_proofness, MechanismCache,
    MechanismSource, SPReport,
};
use crate::payoff::{expected_agent_cost, social_cost, CostModel};
use crate::report::{DiscrepancyKind, DiscrepancyReport, DiscrepancyRow};
use crate::social::{
    closed_form_social_cases, crosscheck_with, select_social_equilibrium,
    socially_optimal_allocation, theorem1_formula, theorem1_premise, SeparationMode,
};
use crate::time::GridTime;

/// Sweeps larger than this are refused unless the limit is raised.
pub const DEFAULT_MAX_SWEEP: usize = 50_000;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("missing required key `{0}`")]
    MissingKey(&'static str),
    #[error(transparent)]
    Model(#[from] crate::Error),
    #[error("sweep of {size} scenario evaluations exceeds the limit of {limit}")]
    SweepTooLarge { size: usize, limit: usize },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

fn parse_err(line: usize, message: impl Into<String>) -> CliError {
    CliError::Parse {
        line,
        message: message.into(),
    }
}

/// `key = value` lines; blank lines and `#` comments are skipped.
fn key_values<'a>(
    text: &'a str,
    allowed: &[&str],
) -> Result<BTreeMap<&'a str, (usize, &'a str)>, CliError> {
    let mut out = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| parse_err(line, format!("expected `key = value`, got `{content}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if !allowed.contains(&key) {
            return Err(parse_err(line, format!("unknown key `{key}`")));
        }
        if out.insert(key, (line, value)).is_some() {
            return Err(parse_err(line, format!("duplicate key `{key}`")));
        }
    }
    Ok(out)
}

fn parse_value<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| parse_err(line, format!("bad value for `{key}`: {e}")))
}

fn required_int(map: &BTreeMap<&str, (usize, &str)>, key: &'static str) -> Result<i64, CliError> {
    let (line, value) = map.get(key).ok_or(CliError::MissingKey(key))?;
    parse_value(*line, key, value)
}

fn optional<T: FromStr>(
    map: &BTreeMap<&str, (usize, &str)>,
    key: &str,
) -> Result<Option<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    map.get(key)
        .map(|(line, value)| parse_value(*line, key, value))
        .transpose()
}

const SCENARIO_KEYS: [&str; 11] = [
    "delta",
    "theta_min",
    "theta_max",
    "dt",
    "e1",
    "d1",
    "e2",
    "d2",
    "cost",
    "separation",
    "source",
];

/// A parsed scenario file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioFile {
    pub delta: i64,
    pub scenario: Scenario,
    pub cost: Option<CostModel>,
    pub separation: Option<SeparationMode>,
    pub source: Option<MechanismSource>,
}

impl FromStr for ScenarioFile {
    type Err = CliError;

    fn from_str(text: &str) -> Result<Self, CliError> {
        let map = key_values(text, &SCENARIO_KEYS)?;
        let delta = required_int(&map, "delta")?;
        if delta <= 0 {
            return Err(parse_err(map["delta"].0, "`delta` must be positive"));
        }
        let int = |k| required_int(&map, k);
        let scenario = Scenario::from_units(
            1,
            (int("theta_min")?, int("theta_max")?),
            int("dt")?,
            (int("e1")?, int("d1")?),
            (int("e2")?, int("d2")?),
        )?;
        Ok(ScenarioFile {
            delta,
            scenario,
            cost: optional(&map, "cost")?,
            separation: optional(&map, "separation")?,
            source: optional(&map, "source")?,
        })
    }
}

impl ScenarioFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        read(path)?.parse()
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

/// Global flags. Flags win over file keys, which win over defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Settings {
    pub cost: Option<CostModel>,
    pub separation: Option<SeparationMode>,
    pub source: Option<MechanismSource>,
    /// Evaluate the truthful FCFS baseline instead of the mechanism.
    pub baseline: bool,
    pub max_sweep: Option<usize>,
}

impl Settings {
    fn cost(&self, file: &ScenarioFile) -> CostModel {
        self.cost.or(file.cost).unwrap_or_default()
    }

    fn separation(&self, file: &ScenarioFile) -> SeparationMode {
        self.separation.or(file.separation).unwrap_or_default()
    }

    fn source(&self, fallback: Option<MechanismSource>) -> MechanismSource {
        if self.baseline {
            return MechanismSource::TruthfulFcfs;
        }
        self.source.or(fallback).unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandOutput {
    pub text: String,
    pub exit_code: i32,
}

impl CommandOutput {
    fn ok(text: String) -> Self {
        CommandOutput { text, exit_code: 0 }
    }
}

fn first_passer(lottery: &AllocationLottery) -> String {
    match lottery.as_certain().and_then(|a| a.first_passer()) {
        Some(agent) => format!("{agent} first"),
        None => "coin".into(),
    }
}

fn signed(t: Option<GridTime>) -> String {
    match t {
        None => "-".into(),
        Some(t) if t > GridTime::ZERO => format!("+{t}"),
        Some(t) => t.to_string(),
    }
}

fn header(out: &mut String, command: &str, file: &ScenarioFile, extra: &[(&str, String)]) {
    let s = &file.scenario;
    let [p1, p2] = s.profiles();
    write!(
        out,
        "# {command}\tdelta={}\ttheta=[{},{}]\tdt={}\te=({},{})\td=({},{})",
        file.delta,
        s.grid().lower(),
        s.grid().upper(),
        s.crossing(),
        p1.earliest,
        p2.earliest,
        p1.desired,
        p2.desired
    )
    .unwrap();
    for (k, v) in extra {
        write!(out, "\t{k}={v}").unwrap();
    }
    out.push('\n');
}

pub fn cmd_classify(file: &ScenarioFile) -> CommandOutput {
    let c = classify(&file.scenario);
    let mut out = String::new();
    header(&mut out, "classify", file, &[]);
    writeln!(out, "label\t{}", c.label).unwrap();
    writeln!(out, "lead\t{}", c.roles.lead).unwrap();
    writeln!(out, "trail\t{}", c.roles.trail).unwrap();
    for p in c.predicates {
        writeln!(out, "predicate\t{p}").unwrap();
    }
    CommandOutput::ok(out)
}

/// Which equilibrium route(s) `equilibria` reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EquilibriumMethod {
    Closed,
    Oracle,
    #[default]
    Both,
}

impl FromStr for EquilibriumMethod {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "closed" => Ok(EquilibriumMethod::Closed),
            "oracle" => Ok(EquilibriumMethod::Oracle),
            "both" => Ok(EquilibriumMethod::Both),
            other => Err(format!(
                "unknown method `{other}` (expected closed, oracle or both)"
            )),
        }
    }
}

fn equilibrium_row(
    out: &mut String,
    source: &str,
    scenario: &Scenario,
    model: CostModel,
    reports: &ReportPair,
) {
    let lottery = match fcfs_allocate(scenario, *reports) {
        Ok(l) => l,
        Err(_) => {
            writeln!(out, "{source}\t{reports}\toff-grid\t-\t-\t-\t-").unwrap();
            return;
        }
    };
    writeln!(
        out,
        "{source}\t{reports}\t{lottery}\t{}\t{}\t{}\t{}",
        first_passer(&lottery),
        expected_agent_cost(model, &lottery, scenario, Agent::One),
        expected_agent_cost(model, &lottery, scenario, Agent::Two),
        social_cost(model, &lottery, scenario)
    )
    .unwrap();
}

pub fn cmd_equilibria(
    file: &ScenarioFile,
    settings: &Settings,
    method: EquilibriumMethod,
) -> CommandOutput {
    let scenario = &file.scenario;
    let model = settings.cost(file);
    let mut out = String::new();
    let method_name = match method {
        EquilibriumMethod::Closed => "closed",
        EquilibriumMethod::Oracle => "oracle",
        EquilibriumMethod::Both => "both",
    };
    header(
        &mut out,
        "equilibria",
        file,
        &[("method", method_name.into()), ("cost", model.to_string())],
    );
    let closed = closed_form_equilibria(scenario);
    writeln!(out, "label\t{}", closed.classification.label).unwrap();
    writeln!(
        out,
        "source\treports\tallocation\tfirst\tcost1\tcost2\tsocial"
    )
    .unwrap();
    if method != EquilibriumMethod::Oracle {
        for r in closed.set.iter() {
            equilibrium_row(&mut out, "closed_form", scenario, model, r);
        }
        for r in &closed.off_grid {
            writeln!(out, "closed_form\t{r}\toff-grid\t-\t-\t-\t-").unwrap();
        }
    }
    if method != EquilibriumMethod::Closed {
        for r in nash_oracle(scenario, model).iter() {
            equilibrium_row(&mut out, "oracle", scenario, model, r);
        }
    }
    if method == EquilibriumMethod::Both {
        let report = verify_soundness(scenario, model);
        writeln!(out, "# diff").unwrap();
        for r in &report.violations {
            writeln!(out, "closed_only\t{r}").unwrap();
        }
        for r in &report.completeness_gaps {
            writeln!(out, "oracle_only\t{r}").unwrap();
        }
        for r in &report.off_grid_claims {
            writeln!(out, "off_grid\t{r}").unwrap();
        }
        writeln!(
            out,
            "summary\tviolations={}\tgaps={}\toff_grid={}",
            report.violations.len(),
            report.completeness_gaps.len(),
            report.off_grid_claims.len()
        )
        .unwrap();
    }
    CommandOutput::ok(out)
}

fn discrepancy_section(out: &mut String, report: &DiscrepancyReport) {
    writeln!(out, "# discrepancies\t{}", report.rows.len()).unwrap();
    if report.is_empty() {
        return;
    }
    writeln!(out, "{}", DiscrepancyRow::TSV_HEADER).unwrap();
    for row in &report.rows {
        writeln!(out, "{}", row.tsv()).unwrap();
    }
}

pub fn cmd_social(file: &ScenarioFile, settings: &Settings) -> Result<CommandOutput, CliError> {
    let scenario = &file.scenario;
    let model = settings.cost(file);
    let separation = settings.separation(file);
    let mut out = String::new();
    header(
        &mut out,
        "social",
        file,
        &[
            ("cost", model.to_string()),
            ("separation", separation.to_string()),
        ],
    );
    let optimum = socially_optimal_allocation(scenario, model, separation)?;
    writeln!(out, "optimum_cost\t{}", optimum.cost).unwrap();
    for a in &optimum.argmin_set {
        writeln!(out, "argmin\t{a}").unwrap();
    }
    writeln!(out, "canonical\t{}", optimum.lottery).unwrap();
    match closed_form_social_cases(scenario) {
        Ok(formula) => writeln!(
            out,
            "case_formula\t{}\t{}\tin_argmin={}",
            formula.case.name(),
            formula.lottery,
            optimum.attained_by(&formula.lottery)
        )
        .unwrap(),
        Err(_) => writeln!(out, "case_formula\tnone\tno conflict").unwrap(),
    }

    let oracle = nash_oracle(scenario, model);
    let selected = select_social_equilibrium(scenario, model, &oracle)?;
    let d = &selected.diagnostics;
    writeln!(out, "selected_reports\t{}", selected.reports).unwrap();
    writeln!(out, "selected_allocation\t{}", selected.lottery).unwrap();
    writeln!(out, "selected_cost\t{}", d.selected_cost).unwrap();
    writeln!(out, "epsilon\t{}", signed(d.epsilon)).unwrap();
    writeln!(out, "sigma\t{}", signed(d.sigma)).unwrap();
    writeln!(out, "achieved_optimal\t{}", d.achieved_optimal).unwrap();
    if classify(scenario).label != CaseLabel::NoConflict {
        let premise = theorem1_premise(scenario, model, &oracle)?;
        let formula = theorem1_formula(scenario);
        writeln!(
            out,
            "theorem1\trow={}\tformula={}\tmultiple={}\tunattained={}",
            formula.row, formula.allocation, premise.multiple, premise.unattained
        )
        .unwrap();
    }
    discrepancy_section(&mut out, &crosscheck_with(scenario, model, &oracle)?);
    Ok(CommandOutput::ok(out))
}

pub fn cmd_mechanism(file: &ScenarioFile, settings: &Settings) -> Result<CommandOutput, CliError> {
    let model = settings.cost(file);
    let source = settings.source(file.source);
    let outcome = run_direct_mechanism(&file.scenario, model, source)?;
    let mut out = String::new();
    header(
        &mut out,
        "mechanism",
        file,
        &[("source", source.to_string()), ("cost", model.to_string())],
    );
    writeln!(out, "case\t{}", outcome.case).unwrap();
    if let Some(rung) = outcome.rung {
        writeln!(out, "rung\t{rung}").unwrap();
    }
    writeln!(out, "reports\t{}", outcome.assigned).unwrap();
    writeln!(out, "allocation\t{}", outcome.allocation).unwrap();
    writeln!(out, "first\t{}", first_passer(&outcome.allocation)).unwrap();
    for agent in Agent::BOTH {
        writeln!(
            out,
            "cost{}\t{}",
            agent.number(),
            expected_agent_cost(model, &outcome.allocation, &file.scenario, agent)
        )
        .unwrap();
    }
    Ok(CommandOutput::ok(out))
}

pub const SP_HEADER: &str =
    "agent\ttrue_e\ttrue_d\tmis_e\tmis_d\ttruthful_cost\tdeviating_cost\ttruthful_allocation\tdeviating_allocation";

fn sp_rows(report: &SPReport) -> impl Iterator<Item = String> + '_ {
    report.violations.iter().map(|v| {
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            v.agent.number(),
            v.true_profile.earliest,
            v.true_profile.desired,
            v.misreport.earliest,
            v.misreport.desired,
            v.truthful_cost,
            v.deviating_cost,
            v.truthful_allocation,
            v.deviating_allocation
        )
    })
}

/// Exit code 0 iff no profitable misreport exists.
pub fn cmd_verify_sp(file: &ScenarioFile, settings: &Settings) -> Result<CommandOutput, CliError> {
    let model = settings.cost(file);
    let source = settings.source(file.source);
    let report = verify_strategy_proofness(&file.scenario, model, source)?;
    let mut out = String::new();
    header(
        &mut out,
        "verify-sp",
        file,
        &[("source", source.to_string()), ("cost", model.to_string())],
    );
    writeln!(out, "{SP_HEADER}").unwrap();
    for row in sp_rows(&report) {
        writeln!(out, "{row}").unwrap();
    }
    writeln!(out, "violations\t{}", report.violation_count()).unwrap();
    let infeasible: Vec<String> = report
        .truthful_infeasible
        .iter()
        .map(|a| a.number().to_string())
        .collect();
    writeln!(
        out,
        "truthful_infeasible\t{}",
        if infeasible.is_empty() {
            "-".into()
        } else {
            infeasible.join(",")
        }
    )
    .unwrap();
    writeln!(out, "failed_runs\t{}", report.failed_runs).unwrap();
    Ok(CommandOutput {
        text: out,
        exit_code: i32::from(report.violation_count() > 0),
    })
}

/// Tags attached to a point of the allocation region.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RegionTags {
    pub feasible: bool,
    pub equilibrium: bool,
    pub optimal: bool,
    pub selected: bool,
}

impl RegionTags {
    pub fn names(&self) -> Vec<&'static str> {
        [
            (self.feasible, "feasible"),
            (self.equilibrium, "equilibrium"),
            (self.optimal, "optimal"),
            (self.selected, "selected"),
        ]
        .into_iter()
        .filter_map(|(on, name)| on.then_some(name))
        .collect()
    }
}

/// Every FCFS image of a report pair admissible for both agents, plus the
/// equilibrium, optimal and selected points (optimal points may be
/// unreachable).
pub fn region(
    scenario: &Scenario,
    model: CostModel,
    separation: SeparationMode,
) -> Result<BTreeMap<Allocation, RegionTags>, CliError> {
    let mut points: BTreeMap<Allocation, RegionTags> = BTreeMap::new();
    let grid = scenario.grid();
    for r1 in grid.iter() {
        for r2 in grid.iter() {
            let lottery = fcfs_allocate(scenario, ReportPair::new(r1, r2))?;
            if lottery_is_feasible(scenario, &lottery) {
                for a in lottery.outcomes() {
                    points.entry(*a).or_default().feasible = true;
                }
            }
        }
    }
    let oracle = nash_oracle(scenario, model);
    for r in oracle.iter() {
        for a in fcfs_allocate(scenario, *r)?.outcomes() {
            points.entry(*a).or_default().equilibrium = true;
        }
    }
    for a in &socially_optimal_allocation(scenario, model, separation)?.argmin_set {
        points.entry(*a).or_default().optimal = true;
    }
    for a in select_social_equilibrium(scenario, model, &oracle)?
        .lottery
        .outcomes()
    {
        points.entry(*a).or_default().selected = true;
    }
    Ok(points)
}

pub fn cmd_region(file: &ScenarioFile, settings: &Settings) -> Result<CommandOutput, CliError> {
    let model = settings.cost(file);
    let separation = settings.separation(file);
    let mut out = String::new();
    header(
        &mut out,
        "region",
        file,
        &[
            ("cost", model.to_string()),
            ("separation", separation.to_string()),
        ],
    );
    writeln!(out, "t1\tt2\ttags").unwrap();
    for (a, tags) in region(&file.scenario, model, separation)? {
        writeln!(out, "{}\t{}\t{}", a.t1, a.t2, tags.names().join("+")).unwrap();
    }
    Ok(CommandOutput::ok(out))
}

const SWEEP_KEYS: [&str; 11] = [
    "delta",
    "theta_min",
    "theta_max",
    "dt",
    "e1",
    "d1",
    "e2",
    "d2",
    "cost",
    "source",
    "separation",
];

/// Which scenarios a sweep covers. Values are in ticks; every profile with
/// `e <= d` inside the given ranges is enumerated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepSpec {
    pub delta: i64,
    pub bounds: (i64, i64),
    pub crossings: Vec<i64>,
    pub e1: Vec<i64>,
    pub d1: Vec<i64>,
    pub e2: Vec<i64>,
    pub d2: Vec<i64>,
    pub costs: Vec<CostModel>,
    pub source: Option<MechanismSource>,
}

/// `a..b` (inclusive), `a..=b`, a single value, or a comma list of those.
fn parse_int_set(line: usize, key: &str, value: &str) -> Result<Vec<i64>, CliError> {
    let mut out = BTreeSet::new();
    for part in value.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((lo, hi)) = part.split_once("..") {
            let hi = hi.trim_start_matches('=');
            let lo: i64 = parse_value(line, key, lo.trim())?;
            let hi: i64 = parse_value(line, key, hi.trim())?;
            if lo > hi {
                return Err(parse_err(line, format!("empty range `{part}` for `{key}`")));
            }
            out.extend(lo..=hi);
        } else {
            out.insert(parse_value::<i64>(line, key, part)?);
        }
    }
    if out.is_empty() {
        return Err(parse_err(line, format!("`{key}` lists no values")));
    }
    Ok(out.into_iter().collect())
}

impl FromStr for SweepSpec {
    type Err = CliError;

    fn from_str(text: &str) -> Result<Self, CliError> {
        let map = key_values(text, &SWEEP_KEYS)?;
        let delta = required_int(&map, "delta")?;
        if delta <= 0 {
            return Err(parse_err(map["delta"].0, "`delta` must be positive"));
        }
        let bounds = (
            required_int(&map, "theta_min")?,
            required_int(&map, "theta_max")?,
        );
        if bounds.0 > bounds.1 {
            return Err(parse_err(
                map["theta_max"].0,
                "`theta_max` below `theta_min`",
            ));
        }
        let (dt_line, dt_value) = map.get("dt").ok_or(CliError::MissingKey("dt"))?;
        let crossings = parse_int_set(*dt_line, "dt", dt_value)?;
        let whole: Vec<i64> = (bounds.0..=bounds.1).collect();
        let range = |key: &str| match map.get(key) {
            Some((line, value)) => parse_int_set(*line, key, value),
            None => Ok(whole.clone()),
        };
        let costs = match map.get("cost") {
            Some((line, value)) => value
                .split(',')
                .map(|c| parse_value::<CostModel>(*line, "cost", c.trim()))
                .collect::<Result<Vec<_>, _>>()?,
            None => vec![CostModel::Quadratic],
        };
        Ok(SweepSpec {
            delta,
            bounds,
            crossings,
            e1: range("e1")?,
            d1: range("d1")?,
            e2: range("e2")?,
            d2: range("d2")?,
            costs,
            source: optional(&map, "source")?,
        })
    }
}

impl SweepSpec {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        read(path)?.parse()
    }

    /// Distinct scenarios in enumeration order (crossing, e1, d1, e2, d2).
    pub fn scenarios(&self) -> Result<Vec<Scenario>, CliError> {
        let profiles = |es: &[i64], ds: &[i64]| -> Vec<(i64, i64)> {
            es.iter()
                .flat_map(|&e| ds.iter().filter(move |&&d| d >= e).map(move |&d| (e, d)))
                .collect()
        };
        let (p1, p2) = (profiles(&self.e1, &self.d1), profiles(&self.e2, &self.d2));
        let mut out = Vec::with_capacity(self.crossings.len() * p1.len() * p2.len());
        for &dt in &self.crossings {
            for &a in &p1 {
                for &b in &p2 {
                    out.push(Scenario::from_units(1, self.bounds, dt, a, b)?);
                }
            }
        }
        Ok(out)
    }

    /// Scenario evaluations: scenarios times cost models.
    pub fn cardinality(&self) -> Result<usize, CliError> {
        Ok(self.scenarios()?.len() * self.costs.len())
    }
}

/// Counters written to the summary. Only `prop1_failures`,
/// `soundness_violations` and `unknown_discrepancies` decide the exit code.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SweepSummary {
    pub scenarios: usize,
    pub evaluations: usize,
    pub prop1_failures: usize,
    pub soundness_violations: usize,
    pub off_grid_claims: usize,
    pub completeness_gaps: usize,
    /// Scenarios whose oracle set differs between the first cost model and another.
    pub cost_model_set_differences: usize,
    pub discrepancies: BTreeMap<String, usize>,
    pub unknown_discrepancies: usize,
    pub sp_violations: usize,
    pub sp_truthful_infeasible: usize,
    /// Misreports the mechanism could not process.
    pub sp_failed_runs: usize,
    /// Scenarios whose truthful mechanism run itself failed (no SP check).
    pub sp_unrunnable: usize,
}

impl SweepSummary {
    pub fn passed(&self) -> bool {
        self.prop1_failures == 0
            && self.soundness_violations == 0
            && self.unknown_discrepancies == 0
    }

    pub fn discrepancies_of(&self, prefix: &str) -> usize {
        self.discrepancies
            .iter()
            .filter(|(k, _)| k.starts_with(prefix))
            .map(|(_, v)| v)
            .sum()
    }

    pub fn tsv(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| writeln!(out, "{k}\t{v}").unwrap();
        put("scenarios", self.scenarios.to_string());
        put("evaluations", self.evaluations.to_string());
        put("prop1_failures", self.prop1_failures.to_string());
        put(
            "soundness_violations",
            self.soundness_violations.to_string(),
        );
        put("off_grid_claims", self.off_grid_claims.to_string());
        put("completeness_gaps", self.completeness_gaps.to_string());
        put(
            "cost_model_set_differences",
            self.cost_model_set_differences.to_string(),
        );
        put(
            "theorem1_discrepancies",
            self.discrepancies_of("theorem1").to_string(),
        );
        put(
            "case_iii_discrepancies",
            self.discrepancies_of("social-case-iii").to_string(),
        );
        for (k, v) in &self.discrepancies {
            put(&format!("discrepancy:{k}"), v.to_string());
        }
        put(
            "unknown_discrepancies",
            self.unknown_discrepancies.to_string(),
        );
        put("sp_violations", self.sp_violations.to_string());
        put(
            "sp_truthful_infeasible",
            self.sp_truthful_infeasible.to_string(),
        );
        put("sp_failed_runs", self.sp_failed_runs.to_string());
        put("sp_unrunnable", self.sp_unrunnable.to_string());
        put("status", if self.passed() { "pass" } else { "fail" }.into());
        out
    }
}

pub const SCENARIO_HEADER: &str = "tick\tlower\tupper\tdt\te1\td1\te2\td2\tcost\tlabel\toracle_count\tclosed_count\tviolations\tgaps\tselected_reports\tselected_allocation\tselected_cost\toptimal_cost\tachieved_optimal\tsp_violations";

/// Everything a sweep produces; `archive` writes it to disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepResult {
    pub summary: SweepSummary,
    pub scenario_rows: Vec<String>,
    pub discrepancies: DiscrepancyReport,
    pub sp_rows: Vec<String>,
}

impl SweepResult {
    pub fn files(&self) -> Vec<(&'static str, String)> {
        let join = |header: &str, rows: &mut dyn Iterator<Item = String>| {
            let mut s = format!("{header}\n");
            for r in rows {
                s.push_str(&r);
                s.push('\n');
            }
            s
        };
        vec![
            ("summary.tsv", self.summary.tsv()),
            (
                "scenarios.tsv",
                join(SCENARIO_HEADER, &mut self.scenario_rows.iter().cloned()),
            ),
            (
                "discrepancies.tsv",
                join(
                    DiscrepancyRow::TSV_HEADER,
                    &mut self.discrepancies.rows.iter().map(|r| r.tsv()),
                ),
            ),
            (
                "sp_violations.tsv",
                join(
                    &format!("{SCENARIO_PREFIX}\tsource\t{SP_HEADER}"),
                    &mut self.sp_rows.iter().cloned(),
                ),
            ),
        ]
    }

    pub fn archive(&self, dir: &Path) -> Result<(), CliError> {
        let io = |source| CliError::Io {
            path: dir.to_owned(),
            source,
        };
        fs::create_dir_all(dir).map_err(io)?;
        for (name, body) in self.files() {
            let path = dir.join(name);
            fs::write(&path, body).map_err(|source| CliError::Io { path, source })?;
        }
        Ok(())
    }
}

const SCENARIO_PREFIX: &str = "tick\tlower\tupper\tdt\te1\td1\te2\td2\tcost";

fn scenario_prefix(s: &Scenario, model: CostModel) -> String {
    let [p1, p2] = s.profiles();
    format!(
        "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{model}",
        s.grid().tick(),
        s.grid().lower(),
        s.grid().upper(),
        s.crossing(),
        p1.earliest,
        p1.desired,
        p2.earliest,
        p2.desired
    )
}

struct Evaluation {
    row: String,
    discrepancies: DiscrepancyReport,
    sp_rows: Vec<String>,
    prop1_failure: bool,
    violations: usize,
    off_grid: usize,
    gaps: usize,
    sp_violations: usize,
    sp_infeasible: usize,
    sp_failed: usize,
    sp_unrunnable: bool,
}

fn evaluate(
    scenario: &Scenario,
    model: CostModel,
    cache: &MechanismCache,
    source: MechanismSource,
) -> Result<Evaluation, CliError> {
    let soundness = verify_soundness(scenario, model);
    let oracle = &soundness.oracle;
    let label = soundness.label;
    let mut discrepancies = DiscrepancyReport::default();
    let row = |kind, closed_form: String, oracle: String| DiscrepancyRow {
        scenario: *scenario,
        model,
        label,
        kind,
        closed_form,
        oracle,
        closed_form_cost: None,
        oracle_cost: None,
    };
    for v in &soundness.violations {
        discrepancies.push(row(
            DiscrepancyKind::LemmaSoundness,
            v.to_string(),
            "rejected".into(),
        ));
    }
    let prefix = scenario_prefix(scenario, model);
    if soundness.oracle_empty {
        discrepancies.push(row(
            DiscrepancyKind::NoEquilibrium,
            soundness.closed_form.len().to_string(),
            "empty".into(),
        ));
        let row = format!(
            "{prefix}\t{label}\t0\t{}\t{}\t{}\t-\t-\t-\t-\t-\t-",
            soundness.closed_form.len(),
            soundness.violations.len(),
            soundness.completeness_gaps.len()
        );
        return Ok(Evaluation {
            row,
            discrepancies,
            sp_rows: Vec::new(),
            prop1_failure: true,
            violations: soundness.violations.len(),
            off_grid: soundness.off_grid_claims.len(),
            gaps: soundness.completeness_gaps.len(),
            sp_violations: 0,
            sp_infeasible: 0,
            sp_failed: 0,
            sp_unrunnable: false,
        });
    }
    discrepancies.extend(crosscheck_with(scenario, model, oracle)?);
    if let Some(r) = compare_table1(scenario, model, oracle)? {
        discrepancies.push(r);
    }
    let selected = select_social_equilibrium(scenario, model, oracle)?;
    // the truthful run fails when the assignment leaves the grid
    let (sp, sp_unrunnable) = match cache.verify(scenario) {
        Ok(sp) => (Some(sp), false),
        Err(crate::Error::OffGridReport { .. }) => (None, true),
        Err(e) => return Err(e.into()),
    };
    let sp_rows = sp
        .iter()
        .flat_map(|sp| sp_rows(sp).map(|r| format!("{prefix}\t{source}\t{r}")))
        .collect();
    let sp_count = sp.as_ref().map(|s| s.violation_count());
    let d = &selected.diagnostics;
    let row = format!(
        "{prefix}\t{label}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
        oracle.len(),
        soundness.closed_form.len(),
        soundness.violations.len(),
        soundness.completeness_gaps.len(),
        selected.reports,
        selected.lottery,
        d.selected_cost,
        d.optimal_cost,
        d.achieved_optimal,
        sp_count.map_or("-".into(), |c| c.to_string())
    );
    Ok(Evaluation {
        row,
        discrepancies,
        sp_rows,
        prop1_failure: false,
        violations: soundness.violations.len(),
        off_grid: soundness.off_grid_claims.len(),
        gaps: soundness.completeness_gaps.len(),
        sp_violations: sp_count.unwrap_or(0),
        sp_infeasible: sp.as_ref().map_or(0, |s| s.truthful_infeasible.len()),
        sp_failed: sp.as_ref().map_or(0, |s| s.failed_runs),
        sp_unrunnable,
    })
}

/// Runs every check over the spec. Scenarios are evaluated in parallel and
/// collected in enumeration order, so the result is deterministic.
pub fn run_sweep(spec: &SweepSpec, settings: &Settings) -> Result<SweepResult, CliError> {
    let scenarios = spec.scenarios()?;
    let size = scenarios.len() * spec.costs.len();
    let limit = settings.max_sweep.unwrap_or(DEFAULT_MAX_SWEEP);
    if size > limit {
        return Err(CliError::SweepTooLarge { size, limit });
    }
    let source = settings.source(spec.source);
    let models: Vec<CostModel> = match settings.cost {
        Some(c) => vec![c],
        None => spec.costs.clone(),
    };
    let mut summary = SweepSummary {
        scenarios: scenarios.len(),
        evaluations: scenarios.len() * models.len(),
        ..SweepSummary::default()
    };
    let mut scenario_rows = Vec::new();
    let mut discrepancies = DiscrepancyReport::default();
    let mut sp_rows = Vec::new();
    let mut oracle_sets = Vec::new();
    for (k, &model) in models.iter().enumerate() {
        let cache = MechanismCache::new(model, source);
        let evaluations: Vec<Evaluation> = scenarios
            .par_iter()
            .map(|s| evaluate(s, model, &cache, source))
            .collect::<Result<_, _>>()?;
        for ev in evaluations {
            summary.prop1_failures += usize::from(ev.prop1_failure);
            summary.soundness_violations += ev.violations;
            summary.off_grid_claims += ev.off_grid;
            summary.completeness_gaps += ev.gaps;
            summary.sp_violations += ev.sp_violations;
            summary.sp_truthful_infeasible += ev.sp_infeasible;
            summary.sp_failed_runs += ev.sp_failed;
            summary.sp_unrunnable += usize::from(ev.sp_unrunnable);
            scenario_rows.push(ev.row);
            sp_rows.extend(ev.sp_rows);
            discrepancies.extend(ev.discrepancies);
        }
        let sets: Vec<_> = scenarios
            .par_iter()
            .map(|s| nash_oracle(s, model))
            .collect();
        if k == 0 {
            oracle_sets = sets;
        } else {
            summary.cost_model_set_differences += oracle_sets
                .iter()
                .zip(&sets)
                .filter(|(a, b)| a != b)
                .count();
        }
    }
    for r in &discrepancies.rows {
        *summary.discrepancies.entry(r.kind.name()).or_default() += 1;
    }
    summary.unknown_discrepancies = discrepancies.unexpected().count();
    Ok(SweepResult {
        summary,
        scenario_rows,
        discrepancies,
        sp_rows,
    })
}

/// Runs the sweep, optionally archives it, and reports the summary. Exit
/// code 0 iff every expected-zero counter is zero.
pub fn cmd_sweep(
    spec: &SweepSpec,
    settings: &Settings,
    archive: Option<&Path>,
) -> Result<CommandOutput, CliError> {
    let result = run_sweep(spec, settings)?;
    if let Some(dir) = archive {
        result.archive(dir)?;
    }
    Ok(CommandOutput {
        text: result.summary.tsv(),
        exit_code: i32::from(!result.summary.passed()),
    })
}
