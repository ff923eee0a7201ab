use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use dirac_ssm::edge::SweepOptions;
use dirac_ssm::harness::{
    self, BoxSpec, EdgeSweepSpec, FloorSweepSpec, Lengths, Outcome, Scenario, ScenarioFile, Task,
};
use dirac_ssm::models::{BoxModel, Model};
use dirac_ssm::par::Execution;

const WORKERS_ENV: &str = "DIRAC_SSM_WORKERS";

const EXIT_CONFIG: u8 = 2;
const EXIT_BLOW_UP: u8 = 3;
const EXIT_CHECK_FAILED: u8 = 4;

#[derive(Parser)]
#[command(name = "dirac-ssm", version, about = "Split-step runs and instability predictions for nonlinear Dirac solitons")]
struct Cli {
    /// Directory receiving CSVs, spectra and manifest.json.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Worker threads; capped by DIRAC_SSM_WORKERS.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation scenario and fit growth rates of its bands.
    Simulate {
        #[command(flatten)]
        source: Source,
        /// Override the noise seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Exit with status 4 when a declared expectation fails.
        #[arg(long)]
        check: bool,
    },
    /// Edge eigenvalue rates over a set of domain lengths.
    PredictEdge {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        param: Param,
        #[command(flatten)]
        lengths: LengthArgs,
        /// Grid size (default scales with L).
        #[arg(long)]
        points: Option<usize>,
        /// Harmonic count M (default from dk).
        #[arg(long)]
        harmonics: Option<usize>,
        /// Double M until the rate settles.
        #[arg(long)]
        converge: bool,
        /// Also write the leading eigenvector at the first length.
        #[arg(long)]
        eigenvector: bool,
    },
    /// Noise-floor rates from the monodromy matrix.
    PredictFloor {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        param: Param,
        #[command(flatten)]
        lengths: LengthArgs,
        /// RK4 steps per period (default from L).
        #[arg(long)]
        steps: Option<usize>,
        /// Also evaluate the fitted box model (GN only).
        #[arg(long = "box")]
        with_box: bool,
    },
    /// Box-model monodromy with closed-form eigenvalues.
    BoxModel {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        omega: Option<f64>,
        #[command(flatten)]
        lengths: LengthArgs,
        /// Box amplitudes and support `A B L_sol`; fitted to the soliton when omitted.
        #[arg(long, num_args = 3, value_names = ["A", "B", "L_SOL"])]
        params: Option<Vec<f64>>,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Compare predicted rates against simulations.
    Crossval {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the built-in scenario library.
    ListScenarios {
        /// Include extended (full-scale) scenarios.
        #[arg(long)]
        all: bool,
    },
}

#[derive(Args)]
struct Source {
    /// Scenario JSON file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scenario name, from the file or from the built-in library.
    #[arg(long)]
    scenario: Option<String>,
}

#[derive(Args)]
struct Param {
    #[arg(long, value_enum, default_value = "gn")]
    model: ModelArg,
    /// Soliton frequency (GN).
    #[arg(long, conflicts_with = "q")]
    omega: Option<f64>,
    /// Soliton parameter (Thirring).
    #[arg(long)]
    q: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Gn,
    Thirring,
}

#[derive(Args)]
struct LengthArgs {
    /// Lengths as multiples of π.
    #[arg(long, value_delimiter = ',')]
    lengths_pi: Vec<f64>,
    /// Range start, in multiples of π.
    #[arg(long, requires = "l_to_pi")]
    l_from_pi: Option<f64>,
    /// Range end (inclusive), in multiples of π.
    #[arg(long, requires = "l_from_pi")]
    l_to_pi: Option<f64>,
    /// Range step in absolute length units.
    #[arg(long, default_value_t = 0.1)]
    l_step: f64,
}

impl LengthArgs {
    fn to_lengths(&self) -> Lengths {
        let mut l = Lengths { multiples_pi: self.lengths_pi.clone(), ..Lengths::default() };
        if let (Some(a), Some(b)) = (self.l_from_pi, self.l_to_pi) {
            l.base_pi = a;
            l.range = Some([0.0, (b - a) * std::f64::consts::PI, self.l_step]);
        }
        l
    }
}

impl Param {
    fn resolve(&self) -> anyhow::Result<(Model, f64)> {
        match (self.model, self.omega, self.q) {
            (ModelArg::Gn, Some(w), None) => Ok((Model::Gn, w)),
            (ModelArg::Thirring, None, Some(q)) => Ok((Model::Thirring, q)),
            (ModelArg::Gn, _, _) => Err(config_error("gn needs --omega")),
            (ModelArg::Thirring, _, _) => Err(config_error("thirring needs --q")),
        }
    }
}

fn config_error(msg: impl Into<String>) -> anyhow::Error {
    dirac_ssm::Error::Config(msg.into()).into()
}

/// Loads a scenario from `--config` and/or `--scenario`.
fn load(source: &Source) -> anyhow::Result<Option<Scenario>> {
    match (&source.config, &source.scenario) {
        (None, None) => Ok(None),
        (None, Some(name)) => Ok(Some(harness::find_scenario(name)?)),
        (Some(path), name) => {
            let file = ScenarioFile::load(path).with_context(|| format!("reading {}", path.display()))?;
            let found = match name {
                Some(n) => file.scenarios.into_iter().find(|s| &s.name == n),
                None if file.scenarios.len() == 1 => file.scenarios.into_iter().next(),
                None => return Err(config_error("file holds several scenarios; pick one with --scenario")),
            };
            Ok(Some(found.ok_or_else(|| config_error(format!("no scenario `{}` in file", name.as_deref().unwrap_or(""))))?))
        }
    }
}

fn expect_kind(s: &Scenario, kinds: &[&str], verb: &str) -> anyhow::Result<()> {
    if kinds.contains(&s.task.kind()) {
        Ok(())
    } else {
        Err(config_error(format!("scenario `{}` is a {} scenario, not usable with {verb}", s.name, s.task.kind())))
    }
}

fn workers(requested: Option<usize>) -> anyhow::Result<usize> {
    let available = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mut n = requested.unwrap_or(available);
    if let Ok(cap) = std::env::var(WORKERS_ENV) {
        let cap: usize = cap.trim().parse().map_err(|_| config_error(format!("{WORKERS_ENV} must be a positive integer")))?;
        n = n.min(cap);
    }
    if n == 0 {
        return Err(config_error("--workers must be at least 1"));
    }
    Ok(n)
}

fn build_scenario(cli: &Cli) -> anyhow::Result<(&'static str, Scenario, bool)> {
    let mut check = false;
    let (verb, scenario) = match &cli.command {
        Command::Simulate { source, seed, check: c } => {
            check = *c;
            let s = load(source)?.ok_or_else(|| config_error("simulate needs --config or --scenario"))?;
            expect_kind(&s, &["simulate"], "simulate")?;
            ("simulate", if let Some(seed) = seed { s.with_seed(*seed) } else { s })
        }
        Command::PredictEdge { source, param, lengths, points, harmonics, converge, eigenvector } => {
            let s = match load(source)? {
                Some(s) => s,
                None => {
                    let (model, parameter) = param.resolve()?;
                    let mut options = SweepOptions { points: *points, harmonics: *harmonics, converge: *converge, ..SweepOptions::default() };
                    if let Some(m) = harmonics {
                        options.max_harmonics = options.max_harmonics.max(*m);
                    }
                    Scenario {
                        name: "predict-edge".into(),
                        description: String::new(),
                        extended: false,
                        task: Task::EdgeSweep(EdgeSweepSpec {
                            model,
                            parameter,
                            lengths: lengths.to_lengths(),
                            options,
                            eigenvector: *eigenvector,
                        }),
                    }
                }
            };
            expect_kind(&s, &["edge_sweep"], "predict-edge")?;
            ("predict-edge", s)
        }
        Command::PredictFloor { source, param, lengths, steps, with_box } => {
            let s = match load(source)? {
                Some(s) => s,
                None => {
                    let (model, parameter) = param.resolve()?;
                    Scenario {
                        name: "predict-floor".into(),
                        description: String::new(),
                        extended: false,
                        task: Task::FloorSweep(FloorSweepSpec { model, parameter, lengths: lengths.to_lengths(), steps: *steps }),
                    }
                }
            };
            expect_kind(&s, &["floor_sweep"], "predict-floor")?;
            if *with_box {
                if let Task::FloorSweep(f) = &s.task {
                    if f.model != Model::Gn {
                        return Err(config_error("--box applies to the gn model only"));
                    }
                }
            }
            ("predict-floor", s)
        }
        Command::BoxModel { source, omega, lengths, params, steps } => {
            let s = match load(source)? {
                Some(s) => s,
                None => {
                    let omega = omega.ok_or_else(|| config_error("box-model needs --omega"))?;
                    let params = match params.as_deref() {
                        Some([a, b, l]) => Some(BoxModel::new(*a, *b, *l)?),
                        _ => None,
                    };
                    Scenario {
                        name: "box-model".into(),
                        description: String::new(),
                        extended: false,
                        task: Task::BoxModel(BoxSpec { omega, lengths: lengths.to_lengths(), params, steps: *steps }),
                    }
                }
            };
            expect_kind(&s, &["box_model"], "box-model")?;
            ("box-model", s)
        }
        Command::Crossval { source, seed } => {
            let s = load(source)?.ok_or_else(|| config_error("crossval needs --config or --scenario"))?;
            expect_kind(&s, &["crossval"], "crossval")?;
            ("crossval", if let Some(seed) = seed { s.with_seed(*seed) } else { s })
        }
        Command::ListScenarios { .. } => unreachable!("handled before dispatch"),
    };
    scenario.validate()?;
    Ok((verb, scenario, check))
}

fn write(dir: &Path, verb: &str, s: &Scenario, a: &harness::Artifacts) -> anyhow::Result<()> {
    let paths = harness::write_artifacts(dir, verb, s, a).with_context(|| format!("writing to {}", dir.display()))?;
    for p in paths {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

fn run(cli: &Cli) -> anyhow::Result<u8> {
    if let Command::ListScenarios { all } = &cli.command {
        for s in harness::builtin_scenarios()? {
            if *all || !s.extended {
                let tag = if s.extended { " [extended]" } else { "" };
                println!("{:<22} {:<12} {}{tag}", s.name, s.task.kind(), s.description);
            }
        }
        return Ok(0);
    }
    let (verb, scenario, check) = build_scenario(cli)?;
    let n = workers(cli.workers)?;
    let exec = if n == 1 { Execution::Sequential } else { Execution::Parallel };
    let pool = build_pool(n)?;
    let artifacts = install(pool.as_ref(), || harness::run_scenario(&scenario, exec))?;
    write(&cli.out_dir, verb, &scenario, &artifacts)?;

    if let Command::PredictFloor { with_box: true, .. } = &cli.command {
        if let Task::FloorSweep(f) = &scenario.task {
            let spec = BoxSpec { omega: f.parameter, lengths: f.lengths.clone(), params: None, steps: f.steps };
            let box_scenario = Scenario {
                name: format!("{}-box", scenario.name),
                description: String::new(),
                extended: false,
                task: Task::BoxModel(spec.clone()),
            };
            let a = install(pool.as_ref(), || harness::box_model(&spec, exec))?;
            write(&cli.out_dir.join("box"), "box-model", &box_scenario, &a)?;
        }
    }

    if verb == "crossval" {
        if let Some(csv) = artifacts.get("crossval.csv") {
            print!("{}", String::from_utf8_lossy(csv));
        }
    }
    Ok(match &artifacts.outcome {
        Outcome::Completed => 0,
        Outcome::BlowUp { t } => {
            eprintln!("blow-up at t = {t}");
            EXIT_BLOW_UP
        }
        Outcome::ExpectationsFailed { failures } => {
            for f in failures {
                eprintln!("expectation failed: {f}");
            }
            if check {
                EXIT_CHECK_FAILED
            } else {
                0
            }
        }
        Outcome::CrossvalFailed { failed } => {
            eprintln!("{failed} cross-validation pair(s) outside tolerance");
            EXIT_CHECK_FAILED
        }
    })
}

#[cfg(feature = "parallel")]
type Pool = rayon::ThreadPool;
#[cfg(not(feature = "parallel"))]
type Pool = ();

#[cfg(feature = "parallel")]
fn build_pool(n: usize) -> anyhow::Result<Option<Pool>> {
    Ok(Some(rayon::ThreadPoolBuilder::new().num_threads(n).build()?))
}

#[cfg(not(feature = "parallel"))]
fn build_pool(_: usize) -> anyhow::Result<Option<Pool>> {
    Ok(None)
}

fn install<R: Send>(pool: Option<&Pool>, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    if let Some(p) = pool {
        return p.install(f);
    }
    let _ = pool;
    f()
}

fn exit_code(e: &anyhow::Error) -> u8 {
    use dirac_ssm::Error as E;
    match e.downcast_ref::<E>() {
        Some(E::Config(_) | E::InvalidParameter { .. } | E::InvalidGrid(_) | E::EmptyBand { .. } | E::Json(_)) => EXIT_CONFIG,
        Some(_) => 1,
        None if e.downcast_ref::<clap::Error>().is_some() => EXIT_CONFIG,
        None => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
