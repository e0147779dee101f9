// SPDX-License-Identifier: Apache-2.0

//! Order-preserving parallel drivers over the core algorithms.

use anyhow::Result;
use axomap_core::apps::{app_behav, AppKernel};
use axomap_core::charac::{check_distinct, Characterizer, MetricsRecord};
use axomap_core::dataset::{provenance_of, sample_plan, Dataset, SamplingPlan};
use axomap_core::dse::{run_method, Evaluation, ExperimentReport, ExperimentSettings, Fitness};
use axomap_core::map::SolutionPool;
use axomap_core::netlist::{product_table, Netlist};
use axomap_core::Config;
use rayon::prelude::*;

/// Runs `f` on a pool of `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        Some(n) => Ok(rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build()?.install(f)),
        None => Ok(f()),
    }
}

/// Batch characterisation, records in input order.
pub fn characterize(netlist: &Netlist, configs: &[Config]) -> axomap_core::Result<Vec<MetricsRecord>> {
    check_distinct(netlist, configs)?;
    if configs.is_empty() {
        return Ok(Vec::new());
    }
    let ch = Characterizer::new(netlist)?;
    configs.par_iter().map(|c| ch.record(c)).collect()
}

/// Samples `plan` serially and characterises in parallel.
pub fn build_dataset(netlist: &Netlist, plan: &SamplingPlan) -> axomap_core::Result<Dataset> {
    let sampled = sample_plan(netlist.removable_count(), plan)?;
    let configs: Vec<Config> = sampled.iter().map(|p| p.0).collect();
    let records = characterize(netlist, &configs)?;
    Dataset::new(netlist.name(), netlist.removable_count(), provenance_of(&sampled), records)
}

/// Application error of each configuration, in input order.
pub fn app_errors(kernel: &AppKernel, netlist: &Netlist, configs: &[Config]) -> axomap_core::Result<Vec<f64>> {
    configs.par_iter().map(|c| app_behav(kernel, &product_table(netlist, c)?)).collect()
}

/// Evaluates batches in parallel; results keep input order.
pub struct ParFitness<'a>(pub &'a (dyn Fitness + Sync));

impl Fitness for ParFitness<'_> {
    fn evaluate(&self, config: &Config) -> Evaluation {
        self.0.evaluate(config)
    }

    fn evaluate_batch(&self, configs: &[Config]) -> Vec<Evaluation> {
        configs.par_iter().map(|c| self.0.evaluate(c)).collect()
    }
}

/// Every run of the experiment, runs in parallel, report in run order.
pub fn run_experiment(
    search: &(dyn Fitness + Sync),
    truth: &(dyn Fitness + Sync),
    pool: &SolutionPool,
    l: usize,
    settings: &ExperimentSettings,
) -> axomap_core::Result<ExperimentReport> {
    let (search, truth) = (ParFitness(search), ParFitness(truth));
    let runs = settings
        .runs()
        .into_par_iter()
        .map(|(m, s)| run_method(&search, &truth, pool, l, settings, m, s))
        .collect::<axomap_core::Result<Vec<_>>>()?;
    Ok(ExperimentReport { settings: settings.clone(), runs })
}
