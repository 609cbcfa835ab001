//! Suite runner: scenarios x planners (x publish rates) x trials, each trial
//! planned, refined and flown, then aggregated per cell.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Scenario;
use crate::llm::{self, default_shot, ChatBackend, HttpBackend, MockBackend, ModelEndpoint, PromptMode, PromptSpec, ShotExample};
use crate::metrics::{aggregate, render_table, report_cells, BenchmarkReport, TableFormat, TABLE_HEADER};
use crate::planners::{plan_scenario, GridConfig, GridPlanner, PlannerConfig};
use crate::refine::{refine, RefineConfig};
use crate::sim::{run_trial, speed_for_rate, write_trajectory_csv, SimConfig, SpeedTable, TrialOutcome};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LlmEntry {
    pub label: String,
    /// Canned-response fixture; takes precedence over `endpoint`.
    #[serde(default)]
    pub fixture: Option<PathBuf>,
    /// Live endpoint; when both are absent the `FM_*` environment is used.
    #[serde(default)]
    pub endpoint: Option<ModelEndpoint>,
    #[serde(default = "default_mode")]
    pub mode: PromptMode,
    #[serde(default)]
    pub shots: Option<Vec<ShotExample>>,
    /// Overrides the suite interpolation step (e.g. 0.1 for vision models).
    #[serde(default)]
    pub interp_step: Option<f64>,
}

fn default_mode() -> PromptMode {
    PromptMode::FewShot
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlannerEntry {
    Astar {
        #[serde(default)]
        label: Option<String>,
    },
    Rrt {
        #[serde(default)]
        label: Option<String>,
    },
    #[serde(alias = "qlearning")]
    Greedy {
        #[serde(default)]
        label: Option<String>,
    },
    Llm(LlmEntry),
}

impl PlannerEntry {
    pub fn grid(kind: GridPlanner) -> Self {
        match kind {
            GridPlanner::Astar => PlannerEntry::Astar { label: None },
            GridPlanner::Rrt => PlannerEntry::Rrt { label: None },
            GridPlanner::Greedy => PlannerEntry::Greedy { label: None },
        }
    }

    pub fn grid_kind(&self) -> Option<GridPlanner> {
        match self {
            PlannerEntry::Astar { .. } => Some(GridPlanner::Astar),
            PlannerEntry::Rrt { .. } => Some(GridPlanner::Rrt),
            PlannerEntry::Greedy { .. } => Some(GridPlanner::Greedy),
            PlannerEntry::Llm(_) => None,
        }
    }

    pub fn label(&self) -> String {
        match self {
            PlannerEntry::Astar { label } | PlannerEntry::Rrt { label } | PlannerEntry::Greedy { label } => label
                .clone()
                .unwrap_or_else(|| self.grid_kind().expect("grid entry").label().to_string()),
            PlannerEntry::Llm(e) => e.label.clone(),
        }
    }
}

fn default_trials() -> usize {
    10
}

/// Suite file layout. Paths are relative to the suite file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteFile {
    pub name: String,
    pub scenarios: Vec<PathBuf>,
    pub planners: Vec<PlannerEntry>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub planner: PlannerConfig,
    #[serde(default)]
    pub refine: RefineConfig,
    #[serde(default)]
    pub sim: SimConfig,
    /// Publish-rate sweep; each rate takes its speed from the calibration
    /// table matching the scenario's obstacle count.
    #[serde(default)]
    pub rates: Vec<u32>,
}

#[derive(Clone, Debug)]
pub struct Suite {
    pub name: String,
    pub scenarios: Vec<Scenario>,
    pub planners: Vec<PlannerEntry>,
    pub trials: usize,
    pub seed: u64,
    pub grid: GridConfig,
    pub planner: PlannerConfig,
    pub refine: RefineConfig,
    pub sim: SimConfig,
    pub rates: Vec<u32>,
}

impl Suite {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: SuiteFile = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_file(file, base)
    }

    pub fn from_file(mut file: SuiteFile, base: &Path) -> Result<Self> {
        let scenarios = file
            .scenarios
            .iter()
            .map(|p| Scenario::load(&base.join(p)))
            .collect::<Result<Vec<_>>>()?;
        for entry in &mut file.planners {
            if let PlannerEntry::Llm(e) = entry {
                if let Some(f) = &e.fixture {
                    e.fixture = Some(base.join(f));
                }
            }
        }
        let suite = Self {
            name: file.name,
            scenarios,
            planners: file.planners,
            trials: file.trials,
            seed: file.seed,
            grid: file.grid,
            planner: file.planner,
            refine: file.refine,
            sim: file.sim,
            rates: file.rates,
        };
        suite.validate()?;
        Ok(suite)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Contract("suite needs at least one trial".into()));
        }
        if self.scenarios.is_empty() || self.planners.is_empty() {
            return Err(Error::Contract("suite needs scenarios and planners".into()));
        }
        self.planner.validate()?;
        self.sim.validate()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CellResult {
    pub scenario: String,
    pub planner: String,
    pub rate_hz: Option<u32>,
    pub max_speed: f64,
    pub report: Option<BenchmarkReport>,
    /// Why the whole cell could not run.
    pub error: Option<String>,
    /// Per-trial planning/refinement failures, by trial index.
    pub trial_errors: BTreeMap<usize, String>,
    /// Mean reported model latency, for language-model cells.
    pub mean_latency_s: Option<f64>,
    #[serde(skip)]
    pub outcomes: Vec<TrialOutcome>,
}

struct Trial {
    outcome: TrialOutcome,
    error: Option<String>,
    latency: Option<f64>,
}

fn make_backend(e: &LlmEntry) -> Result<Box<dyn ChatBackend>> {
    if let Some(f) = &e.fixture {
        return Ok(Box::new(MockBackend::load(f)?));
    }
    let endpoint = match &e.endpoint {
        Some(ep) => ep.clone(),
        None => ModelEndpoint::from_env().ok_or_else(|| {
            Error::Contract(format!(
                "planner {:?} has no fixture or endpoint and {} / {} are unset",
                e.label,
                llm::ENV_ENDPOINT_URL,
                llm::ENV_MODEL_ID
            ))
        })?,
    };
    Ok(Box::new(HttpBackend::new(endpoint)?))
}

/// Plans, refines and flies one trial. `seed` drives the stochastic planners.
pub fn run_single(
    scenario: &Scenario,
    entry: &PlannerEntry,
    backend: Option<&dyn ChatBackend>,
    suite: &Suite,
    sim: &SimConfig,
    trial: usize,
) -> Result<(TrialOutcome, Option<f64>)> {
    let mut refine_cfg = suite.refine;
    let (raw, latency) = match (entry, backend) {
        (PlannerEntry::Llm(e), Some(b)) => {
            if let Some(step) = e.interp_step {
                refine_cfg.interp_step = step;
            }
            let shots = e.shots.clone().unwrap_or_else(|| vec![default_shot()]);
            let spec = PromptSpec::for_mode(e.mode, scenario.clone(), shots)?;
            let out = llm::plan(scenario, b, &spec, trial)?;
            (out.plan, Some(out.response.latency_s))
        }
        (PlannerEntry::Llm(_), None) => return Err(Error::Contract("language-model planner without a backend".into())),
        (grid, _) => {
            let kind = grid.grid_kind().expect("grid entry");
            let cfg = suite.planner.with_seed(suite.seed.wrapping_add(trial as u64));
            (plan_scenario(kind, scenario, &suite.grid, &cfg)?, None)
        }
    };
    let refined = refine(&raw, &scenario.obstacles, &refine_cfg, Some(scenario.workspace))?;
    let sim_cfg = SimConfig {
        max_setpoint_spacing: refine_cfg.interp_step,
        ..*sim
    };
    Ok((run_trial(scenario, &refined.plan, &sim_cfg)?, latency))
}

fn run_cell(
    scenario: &Scenario,
    entry: &PlannerEntry,
    backend: Option<&dyn ChatBackend>,
    suite: &Suite,
    rate: Option<u32>,
) -> CellResult {
    let mut cell = CellResult {
        scenario: scenario.name.clone(),
        planner: entry.label(),
        rate_hz: rate,
        max_speed: suite.sim.max_speed,
        report: None,
        error: None,
        trial_errors: BTreeMap::new(),
        mean_latency_s: None,
        outcomes: Vec::new(),
    };
    let mut sim = suite.sim;
    if let Some(hz) = rate {
        match speed_for_rate(SpeedTable::for_obstacle_count(scenario.obstacles.len()), hz) {
            Ok(v) => {
                sim.publish_rate_hz = hz as f64;
                sim.max_speed = v;
                cell.max_speed = v;
            }
            Err(e) => {
                cell.error = Some(e.to_string());
                return cell;
            }
        }
    }
    let trials: Vec<Trial> = (0..suite.trials)
        .into_par_iter()
        .map(|t| match run_single(scenario, entry, backend, suite, &sim, t) {
            Ok((outcome, latency)) => Trial {
                outcome,
                error: None,
                latency,
            },
            Err(e) => Trial {
                outcome: TrialOutcome::failed(),
                error: Some(e.to_string()),
                latency: None,
            },
        })
        .collect();
    let latencies: Vec<f64> = trials.iter().filter_map(|t| t.latency).collect();
    if !latencies.is_empty() {
        cell.mean_latency_s = Some(latencies.iter().sum::<f64>() / latencies.len() as f64);
    }
    for (k, t) in trials.iter().enumerate() {
        if let Some(e) = &t.error {
            cell.trial_errors.insert(k, e.clone());
        }
    }
    cell.outcomes = trials.into_iter().map(|t| t.outcome).collect();
    match aggregate(&cell.planner, &cell.scenario, &cell.outcomes) {
        Ok(r) => cell.report = Some(r),
        Err(e) => cell.error = Some(e.to_string()),
    }
    cell
}

/// Runs every cell in suite order: scenario, then planner, then rate.
pub fn run_suite(suite: &Suite) -> Vec<CellResult> {
    let backends: Vec<std::result::Result<Option<Box<dyn ChatBackend>>, String>> = suite
        .planners
        .iter()
        .map(|p| match p {
            PlannerEntry::Llm(e) => make_backend(e).map(Some).map_err(|e| e.to_string()),
            _ => Ok(None),
        })
        .collect();
    let rates: Vec<Option<u32>> = if suite.rates.is_empty() {
        vec![None]
    } else {
        suite.rates.iter().copied().map(Some).collect()
    };
    let mut cells = Vec::new();
    for scenario in &suite.scenarios {
        for (entry, backend) in suite.planners.iter().zip(&backends) {
            for &rate in &rates {
                match backend {
                    Ok(b) => cells.push(run_cell(scenario, entry, b.as_deref(), suite, rate)),
                    Err(msg) => cells.push(CellResult {
                        scenario: scenario.name.clone(),
                        planner: entry.label(),
                        rate_hz: rate,
                        max_speed: suite.sim.max_speed,
                        report: None,
                        error: Some(msg.clone()),
                        trial_errors: BTreeMap::new(),
                        mean_latency_s: None,
                        outcomes: Vec::new(),
                    }),
                }
            }
        }
    }
    cells
}

fn group_title(cell: &CellResult) -> String {
    match cell.rate_hz {
        Some(hz) => format!("{} @ {hz} Hz", cell.scenario),
        None => cell.scenario.clone(),
    }
}

/// Markdown: one table per scenario (and rate), cell errors listed below.
pub fn render_suite_markdown(name: &str, cells: &[CellResult]) -> String {
    let mut out = format!("# {name}\n");
    let mut groups: Vec<(String, Vec<&CellResult>)> = Vec::new();
    for c in cells {
        let title = group_title(c);
        match groups.iter_mut().find(|(t, _)| *t == title) {
            Some((_, v)) => v.push(c),
            None => groups.push((title, vec![c])),
        }
    }
    for (title, group) in groups {
        let reports: Vec<BenchmarkReport> = group.iter().filter_map(|c| c.report.clone()).collect();
        let _ = write!(out, "\n## {title}\n\n{}", render_table(&reports, TableFormat::Markdown));
        let errors: Vec<String> = group
            .iter()
            .filter_map(|c| c.error.as_ref().map(|e| format!("- {}: {e}", c.planner)))
            .collect();
        if !errors.is_empty() {
            let _ = write!(out, "\n{}\n", errors.join("\n"));
        }
    }
    out
}

/// Plot-ready CSV: scenario and rate columns ahead of the table columns.
pub fn render_suite_csv(cells: &[CellResult]) -> String {
    let mut out = format!("Scenario,Rate(Hz),{}\n", TABLE_HEADER.join(","));
    for c in cells {
        let rate = c.rate_hz.map(|r| r.to_string()).unwrap_or_default();
        let cols = match &c.report {
            Some(r) => report_cells(r, false).to_vec(),
            None => vec![c.planner.clone(), "–".into(), "–".into(), "–".into(), "–".into()],
        };
        let row: Vec<String> = [c.scenario.clone(), rate].into_iter().chain(cols).map(|s| csv_field(&s)).collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Writes `cells.json` and `table.md` or `table.csv` into `dir`.
pub fn write_results(dir: &Path, name: &str, cells: &[CellResult], format: TableFormat) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let json = serde_json::to_string_pretty(cells)?;
    let cells_path = dir.join("cells.json");
    std::fs::write(&cells_path, json).map_err(|e| Error::io(&cells_path, e))?;
    let (file, body) = match format {
        TableFormat::Csv => ("table.csv", render_suite_csv(cells)),
        _ => ("table.md", render_suite_markdown(name, cells)),
    };
    let table_path = dir.join(file);
    std::fs::write(&table_path, body).map_err(|e| Error::io(&table_path, e))?;
    Ok(table_path)
}

/// One `t,x,y,z` CSV per flown trial.
pub fn dump_trajectories(dir: &Path, cells: &[CellResult]) -> Result<usize> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut n = 0;
    for c in cells {
        let planner: String = c
            .planner
            .chars()
            .map(|ch| if ch.is_ascii_alphanumeric() { ch } else { '_' })
            .collect();
        let rate = c.rate_hz.map(|r| format!("_{r}hz")).unwrap_or_default();
        for (k, o) in c.outcomes.iter().enumerate() {
            if o.trajectory.is_empty() {
                continue;
            }
            let path = dir.join(format!("{}_{planner}{rate}_t{k}.csv", c.scenario));
            write_trajectory_csv(o, &path)?;
            n += 1;
        }
    }
    Ok(n)
}
