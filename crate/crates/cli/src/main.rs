use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use fmbench_core::bench::{dump_trajectories, render_suite_csv, render_suite_markdown, run_suite, write_results, Suite};
use fmbench_core::dataset::{self, DatasetConfig};
use fmbench_core::geometry::{min_clearance, path_length, PathPlan, Scenario};
use fmbench_core::llm::{self, default_shot, HttpBackend, MockBackend, ModelEndpoint, PromptMode, PromptSpec};
use fmbench_core::metrics::TableFormat;
use fmbench_core::perception::{back_project, load_detections, scenario_from_detections, CameraModel};
use fmbench_core::planners::{plan_scenario, GridConfig, GridPlanner, PlannerConfig};
use fmbench_core::refine::{refine, EndpointPolicy, RefineConfig};
use fmbench_core::Error;

const EXIT_PLANNING: u8 = 2;
const EXIT_INPUT: u8 = 3;

#[derive(Parser)]
#[command(name = "fmbench", version, about = "Drone path-planning benchmark: grid baselines, language-model planners, point-mass simulation")]
struct Cli {
    /// Worker threads for parallel trials (default: logical cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Seed for every stochastic component.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Table format for reports.
    #[arg(long, global = true, value_enum, default_value_t = Report::Md)]
    report: Report,
    /// Increase log verbosity (-v, -vv).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Report {
    Md,
    Csv,
}

impl From<Report> for TableFormat {
    fn from(r: Report) -> Self {
        match r {
            Report::Md => TableFormat::Markdown,
            Report::Csv => TableFormat::Csv,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Plan and refine one scenario.
    Plan(PlanArgs),
    /// Run a benchmark suite and write its report.
    Bench(BenchArgs),
    /// Generate a synthetic instruction-tuning dataset.
    Dataset(DatasetArgs),
    /// Turn detector output into a scenario file.
    Ingest(IngestArgs),
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// astar, rrt, greedy (alias qlearning) or llm.
    #[arg(long)]
    planner: String,
    #[arg(long, default_value_t = fmbench_core::refine::LLM_INTERP_STEP)]
    interp_step: f64,
    #[arg(long, default_value_t = fmbench_core::refine::DEFAULT_MARGIN)]
    margin: f64,
    /// What to do when the start or goal sits inside an inflated obstacle.
    #[arg(long, value_enum, default_value_t = Endpoints::Relax)]
    endpoints: Endpoints,
    /// Also split segments that cut through the margin and push them out.
    #[arg(long)]
    split_chords: bool,
    /// Grid footprint half-extent in meters (default: half the obstacle edge).
    #[arg(long)]
    footprint: Option<f64>,
    /// Extra grid inflation in meters.
    #[arg(long, default_value_t = 0.0)]
    inflation: f64,
    /// Canned-response fixture for the llm planner; without it the FM_* environment is used.
    #[arg(long)]
    fixture: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Mode::FewShot)]
    mode: Mode,
    /// Trial index passed to the llm backend.
    #[arg(long, default_value_t = 0)]
    trial: usize,
    /// Write the refined path as CSV `x,y,z`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Endpoints {
    Strict,
    Relax,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    FewShot,
    Instruction,
    ZeroShotVision,
}

impl From<Mode> for PromptMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::FewShot => PromptMode::FewShot,
            Mode::Instruction => PromptMode::Instruction,
            Mode::ZeroShotVision => PromptMode::ZeroShotVision,
        }
    }
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    suite: PathBuf,
    /// Publish-rate sweep: `20..50` (10 Hz steps) or `20,30,60`.
    #[arg(long)]
    rate: Option<String>,
    /// Override the suite's trial count.
    #[arg(long)]
    trials: Option<usize>,
    /// Results root; a `<suite>/<timestamp>/` directory is created inside.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Write one `t,x,y,z` CSV per trial into this directory.
    #[arg(long)]
    dump_traj: Option<PathBuf>,
}

#[derive(Args)]
struct DatasetArgs {
    #[arg(long)]
    count: usize,
    #[arg(long)]
    out: PathBuf,
    /// JSON generation config; unspecified fields keep their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    detections: PathBuf,
    #[arg(long)]
    camera: PathBuf,
    /// Scenario supplying start, goal, workspace, obstacle edge and margin.
    #[arg(long)]
    scenario_template: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Place every obstacle at the template's flight altitude.
    #[arg(long)]
    fixed_altitude: bool,
    #[arg(long, default_value_t = fmbench_core::perception::DEFAULT_CONFIDENCE)]
    min_confidence: f64,
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: if e.is_input_error() { EXIT_INPUT } else { EXIT_PLANNING },
            message: e.to_string(),
        }
    }
}

fn input(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_INPUT,
        message: message.into(),
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Error::io(path, e).into()
}

fn main() -> ExitCode {
    // clap exits with 2 on usage errors, which here means a planning failure.
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot size thread pool: {e}");
            return ExitCode::from(EXIT_INPUT);
        }
    }
    let result = match &cli.cmd {
        Command::Plan(a) => cmd_plan(&cli, a),
        Command::Bench(a) => cmd_bench(&cli, a),
        Command::Dataset(a) => cmd_dataset(&cli, a),
        Command::Ingest(a) => cmd_ingest(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn cmd_plan(cli: &Cli, a: &PlanArgs) -> Result<(), Failure> {
    let scenario = Scenario::load(&a.scenario)?;
    let raw: PathPlan = if a.planner.eq_ignore_ascii_case("llm") {
        let spec = PromptSpec::for_mode(a.mode.into(), scenario.clone(), vec![default_shot()])?;
        let out = match &a.fixture {
            Some(f) => llm::plan(&scenario, &MockBackend::load(f)?, &spec, a.trial)?,
            None => {
                let ep = ModelEndpoint::from_env().ok_or_else(|| {
                    input(format!(
                        "llm planner needs --fixture or {} and {}",
                        llm::ENV_ENDPOINT_URL,
                        llm::ENV_MODEL_ID
                    ))
                })?;
                llm::plan(&scenario, &HttpBackend::new(ep)?, &spec, a.trial)?
            }
        };
        println!("model latency: {:.2} s", out.response.latency_s);
        out.plan
    } else {
        let kind: GridPlanner = a.planner.parse()?;
        let grid = GridConfig {
            footprint_half_extent: a.footprint,
            inflation: a.inflation,
            ..Default::default()
        };
        plan_scenario(kind, &scenario, &grid, &PlannerConfig::default().with_seed(cli.seed))?
    };
    let cfg = RefineConfig {
        interp_step: a.interp_step,
        margin: a.margin,
        endpoints: match a.endpoints {
            Endpoints::Strict => EndpointPolicy::Strict,
            Endpoints::Relax => EndpointPolicy::Relax,
        },
        split_chords: a.split_chords,
    };
    let refined = refine(&raw, &scenario.obstacles, &cfg, Some(scenario.workspace))?;
    println!("scenario {} planner {}", scenario.name, a.planner);
    println!("raw PL: {:.2} m ({} waypoints)", path_length(&raw), raw.len());
    println!(
        "refined PL: {:.2} m ({} waypoints), min clearance {:.3} m",
        path_length(&refined.plan),
        refined.plan.len(),
        min_clearance(&refined.plan, &scenario.obstacles)
    );
    if refined.unresolved > 0 {
        println!("warning: {} waypoint(s) still inside the margin", refined.unresolved);
    }
    if let Some(path) = &a.out {
        let mut w = BufWriter::new(File::create(path).map_err(|e| io_failure(path, e))?);
        let mut body = String::from("x,y,z\n");
        for p in refined.plan.waypoints() {
            body.push_str(&format!("{:.4},{:.4},{:.4}\n", p.x, p.y, p.z));
        }
        w.write_all(body.as_bytes()).map_err(|e| io_failure(path, e))?;
    }
    Ok(())
}

fn parse_rates(s: &str) -> Result<Vec<u32>, Failure> {
    let bad = || input(format!("bad --rate {s:?}; use 20..50 or 20,30,40"));
    if let Some((lo, hi)) = s.split_once("..") {
        let lo: u32 = lo.trim().parse().map_err(|_| bad())?;
        let hi: u32 = hi.trim().parse().map_err(|_| bad())?;
        if lo == 0 || lo > hi {
            return Err(bad());
        }
        return Ok((lo..=hi).step_by(10).collect());
    }
    s.split(',')
        .map(|t| t.trim().parse::<u32>().ok().filter(|&v| v > 0).ok_or_else(bad))
        .collect()
}

fn cmd_bench(cli: &Cli, a: &BenchArgs) -> Result<(), Failure> {
    let mut suite = Suite::load(&a.suite)?;
    if cli.seed != 0 {
        suite.seed = cli.seed;
    }
    if let Some(t) = a.trials {
        suite.trials = t;
        suite.validate()?;
    }
    if let Some(r) = &a.rate {
        suite.rates = parse_rates(r)?;
    }
    let cells = run_suite(&suite);
    let stamp = chrono::Local::now().format("%Y%m%d-%H%M%S").to_string();
    let dir = a.out.join(&suite.name).join(stamp);
    let table = write_results(&dir, &suite.name, &cells, cli.report.into())?;
    if let Some(d) = &a.dump_traj {
        let n = dump_trajectories(d, &cells)?;
        println!("wrote {n} trajectories to {}", d.display());
    }
    match cli.report {
        Report::Md => print!("{}", render_suite_markdown(&suite.name, &cells)),
        Report::Csv => print!("{}", render_suite_csv(&cells)),
    }
    println!("\nreport: {}", table.display());
    for c in &cells {
        for (t, e) in &c.trial_errors {
            log::info!("{} / {} trial {t}: {e}", c.scenario, c.planner);
        }
    }
    Ok(())
}

fn cmd_dataset(cli: &Cli, a: &DatasetArgs) -> Result<(), Failure> {
    let cfg: DatasetConfig = match &a.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| io_failure(p, e))?;
            serde_json::from_str(&text).map_err(|e| input(format!("{}: {e}", p.display())))?
        }
        None => DatasetConfig::default(),
    };
    if a.count == 0 {
        return Err(input("--count must be >= 1"));
    }
    let entries = dataset::generate(a.count, cli.seed, &cfg)?;
    let file = File::create(&a.out).map_err(|e| io_failure(&a.out, e))?;
    dataset::serialize(&entries, BufWriter::new(file)).map_err(|e| io_failure(&a.out, e))?;
    let worst = entries.iter().map(|e| e.clearance).fold(f64::INFINITY, f64::min);
    println!(
        "wrote {} entries to {} (min clearance {worst:.3} m)",
        entries.len(),
        a.out.display()
    );
    Ok(())
}

fn cmd_ingest(a: &IngestArgs) -> Result<(), Failure> {
    let template = Scenario::load(&a.scenario_template)?;
    let cam = CameraModel::load(&a.camera)?;
    let loaded = load_detections(&a.detections, a.min_confidence)?;
    let altitude = a.fixed_altitude.then_some(template.start.z);
    let summaries = loaded
        .records
        .iter()
        .map(|d| back_project(d, &cam, altitude))
        .collect::<Result<Vec<_>, _>>()?;
    let mut scenario = scenario_from_detections(&template, &summaries)?;
    if let Some(stem) = a.out.file_stem().and_then(|s| s.to_str()) {
        scenario.name = stem.to_string();
    }
    scenario.save(&a.out)?;
    println!(
        "{} obstacle(s) from {} detection(s), {} skipped below confidence {}",
        scenario.obstacles.len(),
        loaded.records.len(),
        loaded.skipped,
        a.min_confidence
    );
    for s in &summaries {
        println!("  {} at {}", s.class_label, s.position);
    }
    Ok(())
}
