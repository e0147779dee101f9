// SPDX-License-Identifier: Apache-2.0

//! Command-line front end.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use axomap_core::apps::AppKind;
use axomap_core::charac::Metric;
use axomap_core::dataset::{Dataset, PatternFamily, SamplingPlan};
use axomap_core::dse::{GaSettings, Method};
use axomap_core::estimate::EstimatorKind;
use axomap_core::map::Solver;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::formats::{dataset_config_len, read_dataset, read_json, read_netlist, write_dataset, write_netlist};
use crate::parallel::{self, with_threads};
use crate::pipeline::{self, invalid, FitnessKind, Invalid, MapSection, NetlistSource, RunConfigFile, SamplingSection};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "axomap", version, about = "Approximate operator design-space exploration by selective LUT removal")]
pub struct Cli {
    /// Global seed for sampling, splits, solvers and search.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Directory for outputs.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Print a machine-readable status line on stderr.
    #[arg(long, global = true)]
    pub json: bool,
    /// Increase log verbosity.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate an accurate operator netlist.
    Gen(GenArgs),
    /// Sample and characterise configurations into a dataset CSV.
    Characterize(CharacterizeArgs),
    /// Correlation tables and heatmaps of LUT usage against metrics.
    Analyze(AnalyzeArgs),
    /// Fit surrogate models.
    Fit(FitArgs),
    /// Build MaP solution pools.
    Map(MapArgs),
    /// Run the GA / MaP / MaP+GA comparison on an operator.
    Dse(DseArgs),
    /// Application-specific search with a bundled kernel.
    App(AppArgs),
    /// Execute the whole flow from a run configuration file.
    RunAll(RunAllArgs),
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false, id = "operator")]
pub struct OperatorChoice {
    /// Multiplier operand width.
    #[arg(long, value_name = "WIDTH")]
    pub mul: Option<u32>,
    /// Adder operand width.
    #[arg(long, value_name = "WIDTH")]
    pub add: Option<u32>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub operator: OperatorChoice,
    /// Two's-complement multiplier.
    #[arg(long)]
    pub signed: bool,
    /// Output file; defaults to `<out-dir>/netlist.json`.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SamplingArgs {
    /// Random configurations on top of the patterns; defaults to the standard top-up.
    #[arg(long)]
    pub n_random: Option<usize>,
    /// Pattern families: `all`, `none` or a comma list.
    #[arg(long, default_value = "all")]
    pub patterns: String,
    /// Window sizes for the pattern families; defaults to every size.
    #[arg(long, value_delimiter = ',')]
    pub windows: Vec<usize>,
}

impl SamplingArgs {
    fn section(&self) -> Result<SamplingSection> {
        let families = match self.patterns.as_str() {
            "all" => PatternFamily::ALL.to_vec(),
            "none" => Vec::new(),
            list => list.split(',').map(|f| f.trim().parse()).collect::<axomap_core::Result<Vec<_>>>()?,
        };
        Ok(SamplingSection { n_random: self.n_random, pattern_families: families, window_sizes: self.windows.clone() })
    }
}

#[derive(Debug, Args)]
pub struct CharacterizeArgs {
    #[arg(long)]
    pub netlist: PathBuf,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    /// Sampling plan JSON; replaces the sampling flags.
    #[arg(long, conflicts_with_all = ["n_random", "windows"])]
    pub plan: Option<PathBuf>,
    /// Output file; defaults to `<out-dir>/dataset.csv`.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "pdplut,avg_abs_rel_err")]
    pub metrics: Vec<Metric>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KindArg {
    Poly,
    TreeEnsemble,
}

impl From<KindArg> for EstimatorKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Poly => EstimatorKind::Poly,
            KindArg::TreeEnsemble => EstimatorKind::TreeEnsemble,
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "pdplut,avg_abs_rel_err")]
    pub metrics: Vec<Metric>,
    #[arg(long, value_delimiter = ',', default_value = "poly")]
    pub kinds: Vec<KindArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SolverArg {
    Auto,
    Exact,
    Heuristic,
}

impl From<SolverArg> for Solver {
    fn from(s: SolverArg) -> Self {
        match s {
            SolverArg::Auto => Solver::Auto,
            SolverArg::Exact => Solver::Exact,
            SolverArg::Heuristic => Solver::Heuristic,
        }
    }
}

#[derive(Debug, Args)]
pub struct MapOptions {
    #[arg(long, default_value_t = 0.05)]
    pub wt_step: f64,
    /// Quadratic-term counts; defaults to `0,L/2,L,2L,C(L,2)`.
    #[arg(long, value_delimiter = ',')]
    pub schedule: Vec<usize>,
    #[arg(long, value_enum, default_value = "auto")]
    pub solver: SolverArg,
}

impl MapOptions {
    fn section(&self) -> MapSection {
        MapSection {
            wt_step: self.wt_step,
            n_quad_schedule: (!self.schedule.is_empty()).then(|| self.schedule.clone()),
            solver: self.solver.into(),
            ..MapSection::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct MetricOptions {
    #[arg(long, default_value = "pdplut")]
    pub ppa_metric: Metric,
    #[arg(long, default_value = "avg_abs_rel_err")]
    pub behav_metric: Metric,
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.8,1.0")]
    pub const_sf: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct MapArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[command(flatten)]
    pub metrics: MetricOptions,
    #[command(flatten)]
    pub map: MapOptions,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FitnessArg {
    Model,
    GroundTruth,
}

#[derive(Debug, Args)]
pub struct SearchOptions {
    #[arg(long, value_delimiter = ',', default_value = "ga,map,map_ga")]
    pub methods: Vec<Method>,
    #[arg(long, default_value_t = 10)]
    pub n_seeds: usize,
    #[arg(long, default_value_t = 64)]
    pub pop_size: usize,
    #[arg(long, default_value_t = 250)]
    pub max_generations: usize,
    /// Fitness-evaluation budget per run, initial population included.
    #[arg(long)]
    pub max_evals: Option<usize>,
    #[arg(long, value_enum, default_value = "model")]
    pub fitness: FitnessArg,
    /// Estimators to fit; the first drives model fitness.
    #[arg(long, value_delimiter = ',', default_value = "poly")]
    pub estimators: Vec<KindArg>,
}

#[derive(Debug, Args)]
pub struct DseArgs {
    #[arg(long)]
    pub netlist: PathBuf,
    /// Existing dataset CSV; sampled and characterised when absent.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[command(flatten)]
    pub metrics: MetricOptions,
    #[command(flatten)]
    pub map: MapOptions,
    #[command(flatten)]
    pub search: SearchOptions,
}

#[derive(Debug, Args)]
pub struct AppArgs {
    #[arg(long)]
    pub kernel: AppKind,
    /// Signed 8x8 multiplier netlist; generated when absent.
    #[arg(long)]
    pub netlist: Option<PathBuf>,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[arg(long, default_value = "pdplut")]
    pub ppa_metric: Metric,
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.8,1.0")]
    pub const_sf: Vec<f64>,
    #[command(flatten)]
    pub map: MapOptions,
    #[command(flatten)]
    pub search: SearchOptions,
}

#[derive(Debug, Args)]
pub struct RunAllArgs {
    /// Run configuration JSON.
    #[arg(long)]
    pub config: PathBuf,
}

fn out_dir(cli: &Cli) -> PathBuf {
    cli.out_dir.clone().unwrap_or_else(|| PathBuf::from("."))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn load_dataset(path: &Path) -> Result<Dataset> {
    let l = dataset_config_len(path)?;
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    read_dataset(path, &name, l)
}

fn flow_config(
    cli: &Cli,
    netlist: NetlistSource,
    sampling: SamplingSection,
    metrics: (Metric, Metric),
    const_sf: Vec<f64>,
    map: &MapOptions,
    search: &SearchOptions,
) -> RunConfigFile {
    RunConfigFile {
        netlist,
        sampling,
        ppa_metric: metrics.0,
        behav_metric: metrics.1,
        estimators: search.estimators.iter().map(|&k| k.into()).collect(),
        map: map.section(),
        ga: GaSettings {
            pop_size: search.pop_size,
            max_generations: search.max_generations,
            max_evaluations: search.max_evals,
            ..GaSettings::default()
        },
        const_sf,
        methods: search.methods.clone(),
        n_seeds: search.n_seeds,
        fitness: match search.fitness {
            FitnessArg::Model => FitnessKind::Model,
            FitnessArg::GroundTruth => FitnessKind::GroundTruth,
        },
        app: None,
        out_dir: out_dir(cli),
        seed: cli.seed,
    }
}

/// Executes one parsed command and returns the written paths.
pub fn execute(cli: &Cli) -> Result<Vec<PathBuf>> {
    let dir = out_dir(cli);
    let mut out = Vec::new();
    match &cli.command {
        Command::Gen(a) => {
            let nl = match (a.operator.mul, a.operator.add) {
                (Some(w), _) => axomap_core::netlist::build_multiplier(w, a.signed)?,
                (_, Some(w)) => {
                    if a.signed {
                        invalid!("--signed applies to multipliers only");
                    }
                    axomap_core::netlist::build_adder(w)?
                }
                _ => invalid!("one of --mul or --add is required"),
            };
            let path = a.output.clone().unwrap_or_else(|| dir.join("netlist.json"));
            if let Some(p) = path.parent() {
                ensure_dir(p)?;
            }
            write_netlist(&path, &nl)?;
            log::info!("{}: L = {}", nl.name(), nl.removable_count());
            out.push(path);
        }
        Command::Characterize(a) => {
            let nl = read_netlist(&a.netlist)?;
            let plan: SamplingPlan = match &a.plan {
                Some(p) => {
                    let mut plan: SamplingPlan = read_json(p)?;
                    plan.seed = cli.seed;
                    plan
                }
                None => a.sampling.section()?.plan(nl.removable_count(), cli.seed),
            };
            let ds = parallel::build_dataset(&nl, &plan)?;
            let path = a.output.clone().unwrap_or_else(|| dir.join("dataset.csv"));
            if let Some(p) = path.parent() {
                ensure_dir(p)?;
            }
            write_dataset(&path, &ds)?;
            log::info!("{} records", ds.len());
            out.push(path);
        }
        Command::Analyze(a) => {
            ensure_dir(&dir)?;
            let ds = load_dataset(&a.dataset)?;
            pipeline::stage_analyze(&ds, &a.metrics, &dir, &mut out)?;
        }
        Command::Fit(a) => {
            ensure_dir(&dir)?;
            let ds = load_dataset(&a.dataset)?;
            let kinds: Vec<EstimatorKind> = a.kinds.iter().map(|&k| k.into()).collect();
            pipeline::stage_fit(&ds, &a.metrics, &kinds, cli.seed, &dir, &mut out)?;
        }
        Command::Map(a) => {
            ensure_dir(&dir)?;
            let ds = load_dataset(&a.dataset)?;
            let (pm, bm) = (a.metrics.ppa_metric, a.metrics.behav_metric);
            let reports = pipeline::stage_analyze(&ds, &[pm, bm], &dir, &mut out)?;
            let maxima = (ds.max_of(pm), ds.max_of(bm));
            for &sf in &a.metrics.const_sf {
                let rankings = (reports[0].ranking.clone(), reports[1].ranking.clone());
                pipeline::stage_pool(&ds, (pm, bm), rankings, maxima, sf, &a.map.section(), cli.seed, &dir, &mut out)?;
            }
        }
        Command::Dse(a) => {
            let metrics = (a.metrics.ppa_metric, a.metrics.behav_metric);
            let cfg = flow_config(
                cli,
                NetlistSource::File { path: a.netlist.clone() },
                a.sampling.section()?,
                metrics,
                a.metrics.const_sf.clone(),
                &a.map,
                &a.search,
            );
            let dataset = a.dataset.as_deref().map(load_dataset).transpose()?;
            out = pipeline::run_flow(&cfg, dataset)?.outputs;
        }
        Command::App(a) => {
            let netlist = match &a.netlist {
                Some(p) => NetlistSource::File { path: p.clone() },
                None => NetlistSource::Multiplier { width: 8, signed: true },
            };
            let mut cfg = flow_config(
                cli,
                netlist,
                a.sampling.section()?,
                (a.ppa_metric, Metric::AvgAbsRelErr),
                a.const_sf.clone(),
                &a.map,
                &a.search,
            );
            cfg.app = Some(a.kernel);
            out = pipeline::run_flow(&cfg, None)?.outputs;
        }
        Command::RunAll(a) => {
            let mut cfg = RunConfigFile::load(&a.config)?;
            cfg.seed = if cli.seed != 0 { cli.seed } else { cfg.seed };
            if let Some(d) = &cli.out_dir {
                cfg.out_dir = d.clone();
            }
            out = pipeline::run_all(&cfg)?.outputs;
        }
    }
    Ok(out)
}

/// Exit code for an error: input problems are validation failures,
/// everything else is a runtime failure.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    let input =
        err.chain().any(|e| e.is::<Invalid>() || e.is::<axomap_core::Error>() || e.is::<serde_json::Error>() || e.is::<csv::Error>());
    if input {
        EXIT_VALIDATION
    } else {
        EXIT_RUNTIME
    }
}

fn report_status(json: bool, code: i32, message: &str, outputs: &[PathBuf]) {
    if json {
        let status = json!({
            "status": if code == EXIT_OK { "ok" } else { "error" },
            "code": code,
            "message": message,
            "outputs": outputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        });
        eprintln!("{status}");
    } else if code != EXIT_OK {
        eprintln!("error: {message}");
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let json = args.iter().any(|a| a == "--json");
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand)
            {
                let _ = e.print();
                return EXIT_OK;
            }
            if json {
                report_status(true, EXIT_VALIDATION, e.to_string().trim(), &[]);
            } else {
                let _ = e.print();
            }
            return EXIT_VALIDATION;
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    let result = with_threads(cli.threads, || execute(&cli)).and_then(|r| r);
    match result {
        Ok(outputs) => {
            report_status(cli.json, EXIT_OK, "ok", &outputs);
            EXIT_OK
        }
        Err(e) => {
            let code = exit_code(&e);
            report_status(cli.json, code, &format!("{e:#}"), &[]);
            code
        }
    }
}
