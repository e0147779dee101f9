// SPDX-License-Identifier: Apache-2.0

//! Pipeline stages shared by the subcommands, and the `run-all` driver.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use axomap_core::apps::{app_dataset, AppFitness, AppKernel, AppKind, APP_METRIC};
use axomap_core::charac::Metric;
use axomap_core::dataset::{sample_patterns, Dataset, PatternFamily, SamplingPlan, STANDARD_DATASET_SIZE};
use axomap_core::dse::{Constraints, ExperimentReport, ExperimentSettings, Fitness, GaSettings, GroundTruthFitness, Method, ModelFitness};
use axomap_core::estimate::{fit_estimator, Estimator, EstimatorKind, FitReport};
use axomap_core::map::{
    build_pool, default_schedule, pair_count, pool_bitstrings, PoolSettings, RefitModels, SolutionPool, Solver, DEFAULT_BUDGET,
    DEFAULT_RESTARTS,
};
use axomap_core::netlist::{build_adder, build_multiplier, Netlist};
use axomap_core::stats::{correlation_report, CorrelationReport};
use serde::{Deserialize, Serialize};

use crate::formats::{fmt_f64, read_netlist, write_dataset, write_json, write_netlist};
use crate::parallel;
use crate::report::{write_correlation_csv, write_experiment, write_heatmap};

/// Marks errors caused by invalid user input.
#[derive(Debug)]
pub struct Invalid(pub String);

impl std::fmt::Display for Invalid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

macro_rules! invalid {
    ($($arg:tt)*) => {
        return Err(anyhow::Error::new($crate::pipeline::Invalid(format!($($arg)*))))
    };
}
pub(crate) use invalid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NetlistSource {
    Multiplier { width: u32, signed: bool },
    Adder { width: u32 },
    File { path: PathBuf },
}

impl NetlistSource {
    pub fn load(&self) -> Result<Netlist> {
        match self {
            NetlistSource::Multiplier { width, signed } => Ok(build_multiplier(*width, *signed)?),
            NetlistSource::Adder { width } => Ok(build_adder(*width)?),
            NetlistSource::File { path } => read_netlist(path),
        }
    }
}

/// Sampling knobs; the seed comes from the run's global seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingSection {
    /// Random draws on top of the patterns; `None` tops up to the standard size.
    pub n_random: Option<usize>,
    pub pattern_families: Vec<PatternFamily>,
    pub window_sizes: Vec<usize>,
}

impl Default for SamplingSection {
    fn default() -> Self {
        Self { n_random: None, pattern_families: PatternFamily::ALL.to_vec(), window_sizes: Vec::new() }
    }
}

impl SamplingSection {
    pub fn plan(&self, len: usize, seed: u64) -> SamplingPlan {
        let mut plan =
            SamplingPlan { n_random: 0, seed, pattern_families: self.pattern_families.clone(), window_sizes: self.window_sizes.clone() };
        plan.n_random = self.n_random.unwrap_or_else(|| {
            let patterns = sample_patterns(len, &plan).map_or(0, |v| v.len());
            let space = if len >= 63 { usize::MAX } else { 1usize << len };
            STANDARD_DATASET_SIZE.min(space).saturating_sub(patterns)
        });
        plan
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MapSection {
    pub wt_step: f64,
    /// Quadratic-term counts; `None` means `{0, L/2, L, 2L, C(L,2)}`.
    pub n_quad_schedule: Option<Vec<usize>>,
    pub solver: Solver,
    pub restarts: usize,
    pub budget: usize,
}

impl Default for MapSection {
    fn default() -> Self {
        Self { wt_step: 0.05, n_quad_schedule: None, solver: Solver::Auto, restarts: DEFAULT_RESTARTS, budget: DEFAULT_BUDGET }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitnessKind {
    /// Search on estimator predictions, re-evaluate fronts exhaustively.
    #[default]
    Model,
    /// Search on exhaustive characterisation.
    GroundTruth,
}

fn default_ppa() -> Metric {
    Metric::Pdplut
}
fn default_behav() -> Metric {
    Metric::AvgAbsRelErr
}
fn default_estimators() -> Vec<EstimatorKind> {
    vec![EstimatorKind::Poly, EstimatorKind::TreeEnsemble]
}
fn default_const_sf() -> Vec<f64> {
    vec![0.5, 0.8, 1.0]
}
fn default_methods() -> Vec<Method> {
    vec![Method::Ga, Method::Map, Method::MapGa]
}
fn default_seeds() -> usize {
    10
}
fn default_out() -> PathBuf {
    PathBuf::from("axomap-out")
}

/// One-command description of the whole flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    pub netlist: NetlistSource,
    #[serde(default)]
    pub sampling: SamplingSection,
    #[serde(default = "default_ppa")]
    pub ppa_metric: Metric,
    /// Ignored when `app` is set; the application error is used instead.
    #[serde(default = "default_behav")]
    pub behav_metric: Metric,
    /// Estimators fitted and reported; the first one drives model fitness.
    #[serde(default = "default_estimators")]
    pub estimators: Vec<EstimatorKind>,
    #[serde(default)]
    pub map: MapSection,
    /// `ga.seed` is added to the global seed.
    #[serde(default)]
    pub ga: GaSettings,
    #[serde(default = "default_const_sf")]
    pub const_sf: Vec<f64>,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_seeds")]
    pub n_seeds: usize,
    #[serde(default)]
    pub fitness: FitnessKind,
    #[serde(default)]
    pub app: Option<AppKind>,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

impl RunConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: RunConfigFile = match serde_json::from_str(&text) {
            Ok(c) => c,
            Err(e) => invalid!("{}: {e}", path.display()),
        };
        let mut cfg = cfg;
        if let NetlistSource::File { path: p } = &mut cfg.netlist {
            if p.is_relative() {
                *p = path.parent().unwrap_or(Path::new(".")).join(&*p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if let NetlistSource::File { path } = &self.netlist {
            if !path.is_file() {
                invalid!("netlist file {} does not exist", path.display());
            }
        }
        if self.const_sf.is_empty() || self.const_sf.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            invalid!("const_sf must be a non-empty list of positive values");
        }
        if self.methods.is_empty() || self.n_seeds == 0 {
            invalid!("at least one method and one seed are required");
        }
        if self.estimators.is_empty() {
            invalid!("at least one estimator kind is required");
        }
        if self.ppa_metric.is_behav() || (self.app.is_none() && !self.behav_metric.is_behav()) {
            invalid!("ppa_metric must be a PPA metric and behav_metric a BEHAV metric");
        }
        if let Err(e) = self.ga.validate() {
            invalid!("{e}");
        }
        Ok(())
    }

    pub fn behav(&self) -> Metric {
        if self.app.is_some() {
            APP_METRIC
        } else {
            self.behav_metric
        }
    }
}

/// Characterises the sampled plan; with `app`, BEHAV becomes the
/// application error.
pub fn stage_dataset(nl: &Netlist, plan: &SamplingPlan, app: Option<AppKind>) -> Result<(Dataset, Option<AppKernel>)> {
    let ds = parallel::build_dataset(nl, plan)?;
    match app {
        None => Ok((ds, None)),
        Some(kind) => {
            let kernel = AppKernel::load(kind)?;
            let configs: Vec<_> = ds.configs().collect();
            let errors = parallel::app_errors(&kernel, nl, &configs)?;
            Ok((app_dataset(&ds, kind, &errors)?, Some(kernel)))
        }
    }
}

/// Correlation report per metric, with CSV and heatmap outputs in `dir`.
pub fn stage_analyze(ds: &Dataset, metrics: &[Metric], dir: &Path, out: &mut Vec<PathBuf>) -> Result<Vec<CorrelationReport>> {
    let mut reports = Vec::new();
    for &m in metrics {
        let rep = correlation_report(ds, m)?;
        for w in &rep.warnings {
            log::warn!("{m}: {w}");
        }
        let csv = dir.join(format!("correlation_{}.csv", m.name()));
        write_correlation_csv(&csv, &rep)?;
        let svg = dir.join(format!("heatmap_{}.svg", m.name()));
        write_heatmap(&svg, &rep)?;
        out.extend([csv, svg]);
        reports.push(rep);
    }
    Ok(reports)
}

/// Fits every `(metric, kind)` estimator; writes `model_{metric}_{kind}.json`
/// and one `fit_report.csv` row each.
pub fn stage_fit(
    ds: &Dataset,
    metrics: &[Metric],
    kinds: &[EstimatorKind],
    seed: u64,
    dir: &Path,
    out: &mut Vec<PathBuf>,
) -> Result<Vec<(Metric, EstimatorKind, Estimator, FitReport)>> {
    let jobs: Vec<(Metric, EstimatorKind)> = kinds.iter().flat_map(|&k| metrics.iter().map(move |&m| (m, k))).collect();
    use rayon::prelude::*;
    let fitted =
        jobs.par_iter().map(|&(m, k)| fit_estimator(ds, m, k, seed).map(|(e, r)| (m, k, e, r))).collect::<axomap_core::Result<Vec<_>>>()?;
    let report_path = dir.join("fit_report.csv");
    let mut w = csv::Writer::from_path(&report_path)?;
    w.write_record([
        "metric",
        "kind",
        "r2_train",
        "r2_test",
        "mae_train",
        "mae_test",
        "mse_train",
        "mse_test",
        "n_quad",
        "n_train",
        "n_test",
    ])?;
    for (m, k, e, r) in &fitted {
        let path = dir.join(format!("model_{}_{}.json", m.name(), kind_name(*k)));
        write_json(&path, e)?;
        out.push(path);
        w.write_record([
            m.name().to_string(),
            kind_name(*k).to_string(),
            fmt_f64(r.r2_train),
            fmt_f64(r.r2_test),
            fmt_f64(r.mae_train),
            fmt_f64(r.mae_test),
            fmt_f64(r.mse_train),
            fmt_f64(r.mse_test),
            r.n_quad.to_string(),
            r.n_train.to_string(),
            r.n_test.to_string(),
        ])?;
    }
    w.flush()?;
    out.push(report_path);
    Ok(fitted)
}

pub fn kind_name(k: EstimatorKind) -> &'static str {
    match k {
        EstimatorKind::Poly => "poly",
        EstimatorKind::TreeEnsemble => "tree_ensemble",
    }
}

pub fn schedule_for(l: usize, section: &MapSection) -> Result<Vec<usize>> {
    match &section.n_quad_schedule {
        None => Ok(default_schedule(l)),
        Some(s) => {
            if let Some(&n) = s.iter().find(|&&n| n > pair_count(l)) {
                invalid!("n_quad {n} exceeds C({l}, 2) = {}", pair_count(l));
            }
            Ok(s.clone())
        }
    }
}

type Pair = (usize, usize);

/// Solution pool for one `const_sf`, written as JSON and bitstring list.
#[allow(clippy::too_many_arguments)]
pub fn stage_pool(
    ds: &Dataset,
    metrics: (Metric, Metric),
    rankings: (Vec<Pair>, Vec<Pair>),
    maxima: (f64, f64),
    const_sf: f64,
    section: &MapSection,
    seed: u64,
    dir: &Path,
    out: &mut Vec<PathBuf>,
) -> Result<SolutionPool> {
    let support = RefitModels {
        dataset: ds,
        ppa_metric: metrics.0,
        behav_metric: metrics.1,
        ppa_ranking: rankings.0,
        behav_ranking: rankings.1,
        split_seed: seed,
    };
    let settings = PoolSettings {
        wt_step: section.wt_step,
        solver: section.solver,
        seed,
        restarts: section.restarts,
        budget: section.budget,
        ..PoolSettings::new(const_sf, maxima, schedule_for(ds.removable_count, section)?)
    };
    let pool = build_pool(&support, &settings)?;
    let json = dir.join(format!("pool_sf{const_sf}.json"));
    write_json(&json, &pool)?;
    let txt = dir.join(format!("pool_sf{const_sf}.txt"));
    fs::write(&txt, pool_bitstrings(&pool))?;
    out.extend([json, txt]);
    Ok(pool)
}

/// Runs the experiment for one `const_sf` and writes its report directory.
#[allow(clippy::too_many_arguments)]
pub fn stage_dse(
    nl: &Netlist,
    metrics: (Metric, Metric),
    models: Option<(&Estimator, &Estimator)>,
    kernel: Option<&AppKernel>,
    pool: &SolutionPool,
    settings: &ExperimentSettings,
    dir: &Path,
    out: &mut Vec<PathBuf>,
) -> Result<ExperimentReport> {
    let constraints: Constraints = settings.constraints();
    let truth: Box<dyn Fitness + Sync> = match kernel {
        Some(k) => Box::new(AppFitness::new(k, nl, metrics.0, constraints)?),
        None => Box::new(GroundTruthFitness::new(nl, metrics.0, metrics.1, constraints)?),
    };
    let model;
    let search: &(dyn Fitness + Sync) = match models {
        Some((p, b)) => {
            model = ModelFitness { ppa: p, behav: b, constraints };
            &model
        }
        None => truth.as_ref(),
    };
    let report = parallel::run_experiment(search, truth.as_ref(), pool, nl.removable_count(), settings)?;
    out.extend(write_experiment(dir, &report, (metrics.0.name(), metrics.1.name()))?);
    Ok(report)
}

/// Outputs of a `run-all` invocation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub outputs: Vec<PathBuf>,
    /// `(const_sf, method, mean PPF hypervolume, mean VPF hypervolume)`.
    pub hypervolumes: Vec<(f64, Method, f64, f64)>,
}

/// Executes the full flow described by `cfg` into `cfg.out_dir`.
pub fn run_all(cfg: &RunConfigFile) -> Result<RunSummary> {
    run_flow(cfg, None)
}

/// Like [`run_all`], but starts from `dataset` instead of sampling one when
/// given.
pub fn run_flow(cfg: &RunConfigFile, dataset: Option<Dataset>) -> Result<RunSummary> {
    cfg.validate()?;
    let dir = &cfg.out_dir;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut out = Vec::new();

    let nl = cfg.netlist.load()?;
    if cfg.app.is_some() && (nl.widths() != (8, 8) || !nl.signed()) {
        invalid!("application kernels need a signed 8x8 multiplier");
    }
    let l = nl.removable_count();
    let path = dir.join("netlist.json");
    write_netlist(&path, &nl)?;
    out.push(path);

    let (ds, kernel) = match dataset {
        None => {
            let plan = cfg.sampling.plan(l, cfg.seed);
            let path = dir.join("sampling_plan.json");
            write_json(&path, &plan)?;
            out.push(path);
            stage_dataset(&nl, &plan, cfg.app)?
        }
        Some(ds) => {
            if ds.removable_count != l {
                invalid!("dataset configurations have length {}, netlist has {l} removable LUTs", ds.removable_count);
            }
            match cfg.app {
                None => (ds, None),
                Some(kind) => {
                    let kernel = AppKernel::load(kind)?;
                    let configs: Vec<_> = ds.configs().collect();
                    let errors = parallel::app_errors(&kernel, &nl, &configs)?;
                    (app_dataset(&ds, kind, &errors)?, Some(kernel))
                }
            }
        }
    };
    let path = dir.join(if cfg.app.is_some() { "app_dataset.csv" } else { "dataset.csv" });
    write_dataset(&path, &ds)?;
    out.push(path);
    log::info!("dataset: {} records over L = {l}", ds.len());

    let (pm, bm) = (cfg.ppa_metric, cfg.behav());
    let maxima = (ds.max_of(pm), ds.max_of(bm));
    if !(maxima.0 > 0.0 && maxima.1 > 0.0) {
        invalid!("dataset maxima {maxima:?} must be positive");
    }
    let reports = stage_analyze(&ds, &[pm, bm], dir, &mut out)?;
    let fitted = stage_fit(&ds, &[pm, bm], &cfg.estimators, cfg.seed, dir, &mut out)?;
    let search_kind = cfg.estimators[0];
    let pick = |m: Metric| fitted.iter().find(|f| f.0 == m && f.1 == search_kind).map(|f| &f.2).expect("fitted above");
    let models = match cfg.fitness {
        FitnessKind::Model => Some((pick(pm), pick(bm))),
        FitnessKind::GroundTruth => None,
    };

    let ga = GaSettings { seed: cfg.seed.wrapping_add(cfg.ga.seed), ..cfg.ga.clone() };
    let mut hypervolumes = Vec::new();
    for &sf in &cfg.const_sf {
        let rankings = (reports[0].ranking.clone(), reports[1].ranking.clone());
        let pool = stage_pool(&ds, (pm, bm), rankings, maxima, sf, &cfg.map, cfg.seed, dir, &mut out)?;
        log::info!("const_sf {sf}: pool of {} configurations, {} infeasible problems", pool.len(), pool.infeasible.len());
        let settings = ExperimentSettings { const_sf: sf, maxima, methods: cfg.methods.clone(), n_seeds: cfg.n_seeds, ga: ga.clone() };
        let sub = dir.join(format!("dse_sf{sf}"));
        let report = stage_dse(&nl, (pm, bm), models, kernel.as_ref(), &pool, &settings, &sub, &mut out)?;
        for &m in &cfg.methods {
            let runs: Vec<_> = report.runs.iter().filter(|r| r.method == m).collect();
            let n = runs.len() as f64;
            let ppf = runs.iter().map(|r| r.ppf_hv).sum::<f64>() / n;
            let vpf = runs.iter().map(|r| r.vpf_hv).sum::<f64>() / n;
            hypervolumes.push((sf, m, ppf, vpf));
        }
    }
    let path = dir.join("summary.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["const_sf", "method", "mean_ppf_hv", "mean_vpf_hv"])?;
    for (sf, m, p, v) in &hypervolumes {
        w.write_record([fmt_f64(*sf), m.as_str().to_string(), fmt_f64(*p), fmt_f64(*v)])?;
    }
    w.flush()?;
    out.push(path);
    Ok(RunSummary { out_dir: dir.clone(), outputs: out, hypervolumes })
}
