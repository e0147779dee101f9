// SPDX-License-Identifier: Apache-2.0

//! Bi-objective search over configurations (minimising PPA and BEHAV),
//! Pareto filtering, and 2-D hypervolume.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::charac::{Characterizer, Metric};
use crate::config::{mask, Config};
use crate::error::{bail, Result};
use crate::estimate::Estimator;
use crate::map::SolutionPool;
use crate::netlist::Netlist;

/// Objective offset per unit of violation in [`ConstraintMode::Penalty`].
pub const PENALTY_WEIGHT: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Evaluation {
    pub ppa: f64,
    pub behav: f64,
    /// Normalised constraint excess, 0 when feasible.
    pub violation: f64,
}

impl Evaluation {
    pub fn feasible(&self) -> bool {
        self.violation == 0.0
    }
}

/// Upper bounds on both objectives.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Constraints {
    pub max_ppa: f64,
    pub max_behav: f64,
}

impl Constraints {
    pub fn scaled(maxima: (f64, f64), const_sf: f64) -> Self {
        Self { max_ppa: const_sf * maxima.0, max_behav: const_sf * maxima.1 }
    }

    pub fn none() -> Self {
        Self { max_ppa: f64::INFINITY, max_behav: f64::INFINITY }
    }

    pub fn admits(&self, ppa: f64, behav: f64) -> bool {
        ppa <= self.max_ppa && behav <= self.max_behav
    }

    /// Sum of relative excesses over the bounds.
    pub fn violation(&self, ppa: f64, behav: f64) -> f64 {
        let rel = |v: f64, max: f64| {
            if v <= max {
                0.0
            } else if max > 0.0 {
                (v - max) / max
            } else {
                v - max
            }
        };
        rel(ppa, self.max_ppa) + rel(behav, self.max_behav)
    }

    pub fn evaluation(&self, ppa: f64, behav: f64) -> Evaluation {
        Evaluation { ppa, behav, violation: self.violation(ppa, behav) }
    }
}

pub trait Fitness {
    fn evaluate(&self, config: &Config) -> Evaluation;

    fn evaluate_batch(&self, configs: &[Config]) -> Vec<Evaluation> {
        configs.iter().map(|c| self.evaluate(c)).collect()
    }
}

/// Objectives predicted by two estimators. Every metric is nonnegative, so
/// predictions are clamped at zero.
#[derive(Debug, Clone, Copy)]
pub struct ModelFitness<'a> {
    pub ppa: &'a Estimator,
    pub behav: &'a Estimator,
    pub constraints: Constraints,
}

impl Fitness for ModelFitness<'_> {
    fn evaluate(&self, config: &Config) -> Evaluation {
        self.constraints.evaluation(self.ppa.predict(config).max(0.0), self.behav.predict(config).max(0.0))
    }
}

/// Objectives from exhaustive characterisation.
#[derive(Debug, Clone)]
pub struct GroundTruthFitness<'a> {
    pub characterizer: Characterizer<'a>,
    pub ppa_metric: Metric,
    pub behav_metric: Metric,
    pub constraints: Constraints,
}

impl<'a> GroundTruthFitness<'a> {
    pub fn new(netlist: &'a Netlist, ppa_metric: Metric, behav_metric: Metric, constraints: Constraints) -> Result<Self> {
        Ok(Self { characterizer: Characterizer::new(netlist)?, ppa_metric, behav_metric, constraints })
    }
}

impl Fitness for GroundTruthFitness<'_> {
    fn evaluate(&self, config: &Config) -> Evaluation {
        let r = self.characterizer.record(config).expect("configuration length checked by caller");
        self.constraints.evaluation(self.ppa_metric.of(&r), self.behav_metric.of(&r))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ConstraintMode {
    /// Feasible beats infeasible; infeasible ordered by violation.
    #[default]
    ConstraintDomination,
    /// Both objectives offset by [`PENALTY_WEIGHT`] times the violation.
    Penalty,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct GaSettings {
    pub pop_size: usize,
    pub max_generations: usize,
    pub tournament_size: usize,
    pub crossover_rate: f64,
    /// Per-bit flip probability; `None` means `1/L`.
    pub mutation_rate: Option<f64>,
    pub seed: u64,
    pub constraint_mode: ConstraintMode,
    /// Cap on fitness evaluations, initial population included.
    pub max_evaluations: Option<usize>,
}

impl Default for GaSettings {
    fn default() -> Self {
        Self {
            pop_size: 64,
            max_generations: 250,
            tournament_size: 2,
            crossover_rate: 0.9,
            mutation_rate: None,
            seed: 0,
            constraint_mode: ConstraintMode::ConstraintDomination,
            max_evaluations: None,
        }
    }
}

impl GaSettings {
    pub fn validate(&self) -> Result<()> {
        if self.pop_size < 2 || !self.pop_size.is_multiple_of(2) {
            bail!(Validation, "pop_size must be even and >= 2, got {}", self.pop_size);
        }
        if self.max_generations == 0 {
            bail!(Validation, "max_generations must be >= 1");
        }
        if self.tournament_size == 0 {
            bail!(Validation, "tournament_size must be >= 1");
        }
        let rate_ok = |r: f64| (0.0..=1.0).contains(&r);
        if !rate_ok(self.crossover_rate) || !self.mutation_rate.is_none_or(rate_ok) {
            bail!(Validation, "rates must lie in [0, 1]");
        }
        Ok(())
    }

    /// Generations run for a population of this size.
    pub fn generations(&self) -> usize {
        match self.max_evaluations {
            Some(budget) => self.max_generations.min(budget.saturating_sub(self.pop_size) / self.pop_size),
            None => self.max_generations,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Individual {
    pub config: Config,
    pub eval: Evaluation,
    /// Non-domination rank, 0 is the best front.
    pub rank: usize,
    pub crowding: f64,
}

/// State handed to the observer after initialisation and each generation.
#[derive(Debug)]
pub struct GenerationReport<'a> {
    pub generation: usize,
    pub evaluations: usize,
    pub population: &'a [Individual],
}

fn objectives(e: &Evaluation, mode: ConstraintMode) -> (f64, f64) {
    match mode {
        ConstraintMode::ConstraintDomination => (e.ppa, e.behav),
        ConstraintMode::Penalty => (e.ppa + PENALTY_WEIGHT * e.violation, e.behav + PENALTY_WEIGHT * e.violation),
    }
}

fn pareto_dominates(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 <= b.0 && a.1 <= b.1 && (a.0 < b.0 || a.1 < b.1)
}

fn dominates(a: &Evaluation, b: &Evaluation, mode: ConstraintMode) -> bool {
    match mode {
        ConstraintMode::ConstraintDomination => match (a.feasible(), b.feasible()) {
            (true, false) => true,
            (false, true) => false,
            (false, false) => a.violation < b.violation,
            (true, true) => pareto_dominates((a.ppa, a.behav), (b.ppa, b.behav)),
        },
        ConstraintMode::Penalty => pareto_dominates(objectives(a, mode), objectives(b, mode)),
    }
}

/// Fronts of indices into `evals`, best first, each in index order.
fn non_dominated_sort(evals: &[Evaluation], mode: ConstraintMode) -> Vec<Vec<usize>> {
    let n = evals.len();
    let mut dominated_by = vec![0usize; n];
    let mut dominates_list = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            if dominates(&evals[i], &evals[j], mode) {
                dominates_list[i].push(j);
                dominated_by[j] += 1;
            } else if dominates(&evals[j], &evals[i], mode) {
                dominates_list[j].push(i);
                dominated_by[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominates_list[i] {
                dominated_by[j] -= 1;
                if dominated_by[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// Crowding distance of each member of `front` (same order).
fn crowding(front: &[usize], evals: &[Evaluation], mode: ConstraintMode) -> Vec<f64> {
    let n = front.len();
    let mut dist = vec![0.0; n];
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    for axis in 0..2 {
        let value = |k: usize| {
            let o = objectives(&evals[front[k]], mode);
            if axis == 0 {
                o.0
            } else {
                o.1
            }
        };
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| value(a).total_cmp(&value(b)).then(a.cmp(&b)));
        let (lo, hi) = (value(order[0]), value(order[n - 1]));
        dist[order[0]] = f64::INFINITY;
        dist[order[n - 1]] = f64::INFINITY;
        let range = hi - lo;
        if range > 0.0 && range.is_finite() {
            for k in 1..n - 1 {
                dist[order[k]] += (value(order[k + 1]) - value(order[k - 1])) / range;
            }
        }
    }
    dist
}

/// Picks `keep` of `pool` by rank, then crowding (descending), then position.
fn environmental_selection(pool: &[(Config, Evaluation)], keep: usize, mode: ConstraintMode) -> Vec<Individual> {
    let evals: Vec<Evaluation> = pool.iter().map(|p| p.1).collect();
    let fronts = non_dominated_sort(&evals, mode);
    let mut out = Vec::with_capacity(keep);
    for (rank, front) in fronts.iter().enumerate() {
        if out.len() >= keep {
            break;
        }
        let dist = crowding(front, &evals, mode);
        let mut members: Vec<(usize, f64)> = front.iter().copied().zip(dist).collect();
        if out.len() + members.len() > keep {
            members.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            members.truncate(keep - out.len());
        }
        for (i, d) in members {
            out.push(Individual { config: pool[i].0, eval: pool[i].1, rank, crowding: d });
        }
    }
    out
}

fn tournament(pop: &[Individual], size: usize, rng: &mut ChaCha8Rng) -> usize {
    let mut best = rng.random_range(0..pop.len());
    for _ in 1..size {
        let c = rng.random_range(0..pop.len());
        let (a, b) = (&pop[c], &pop[best]);
        if a.rank < b.rank || (a.rank == b.rank && a.crowding > b.crowding) {
            best = c;
        }
    }
    best
}

fn random_config(l: usize, rng: &mut ChaCha8Rng) -> Config {
    Config::from_bits(rng.random::<u64>() & mask(l), l).expect("masked")
}

/// NSGA-II over length-`l` configurations. The initial population holds the
/// distinct seeds, topped up with random configurations.
pub fn nsga2(fitness: &dyn Fitness, l: usize, settings: &GaSettings, seed_pop: &[Config]) -> Result<Vec<Individual>> {
    nsga2_observed(fitness, l, settings, seed_pop, &mut |_| {})
}

/// [`nsga2`] with a callback after initialisation and every generation.
pub fn nsga2_observed(
    fitness: &dyn Fitness,
    l: usize,
    settings: &GaSettings,
    seed_pop: &[Config],
    observer: &mut dyn FnMut(&GenerationReport<'_>),
) -> Result<Vec<Individual>> {
    settings.validate()?;
    if l == 0 || l > crate::config::MAX_LUTS {
        bail!(Config, "config length {l} outside 1..={}", crate::config::MAX_LUTS);
    }
    if let Some(c) = seed_pop.iter().find(|c| c.len() != l) {
        bail!(Validation, "seed {c} has length {}, expected {l}", c.len());
    }
    let mode = settings.constraint_mode;
    let n = settings.pop_size;
    let mutation = settings.mutation_rate.unwrap_or(1.0 / l as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let space = if l >= 63 { usize::MAX } else { 1usize << l };

    let mut seen = BTreeSet::new();
    let mut initial: Vec<Config> = seed_pop.iter().copied().filter(|c| seen.insert(*c)).collect();
    while initial.len() < n {
        let c = random_config(l, &mut rng);
        if seen.insert(c) || seen.len() >= space {
            initial.push(c);
        }
    }
    let mut evaluations = initial.len();
    let evals = fitness.evaluate_batch(&initial);
    if initial.len() > n {
        log::info!("{} seeds exceed the population of {n}; keeping the best by rank and crowding", initial.len());
    }
    let pool: Vec<(Config, Evaluation)> = initial.into_iter().zip(evals).collect();
    let mut pop = environmental_selection(&pool, n, mode);
    observer(&GenerationReport { generation: 0, evaluations, population: &pop });

    for generation in 1..=settings.generations() {
        let mut members: BTreeSet<Config> = pop.iter().map(|i| i.config).collect();
        let mut children = Vec::with_capacity(n);
        while children.len() < n {
            let a = pop[tournament(&pop, settings.tournament_size, &mut rng)].config;
            let b = pop[tournament(&pop, settings.tournament_size, &mut rng)].config;
            let (mut c1, mut c2) = if l > 1 && rng.random::<f64>() < settings.crossover_rate {
                let cut = rng.random_range(1..l);
                (a.splice(&b, cut), b.splice(&a, cut))
            } else {
                (a, b)
            };
            for child in [&mut c1, &mut c2] {
                for i in 0..l {
                    if rng.random::<f64>() < mutation {
                        *child = child.flipped(i);
                    }
                }
                let mut tries = 0;
                while members.contains(child) && tries < 8 && members.len() < space {
                    *child = child.flipped(rng.random_range(0..l));
                    tries += 1;
                }
                members.insert(*child);
            }
            children.push(c1);
            children.push(c2);
        }
        let evals = fitness.evaluate_batch(&children);
        evaluations += children.len();
        let mut pool: Vec<(Config, Evaluation)> = pop.iter().map(|i| (i.config, i.eval)).collect();
        pool.extend(children.into_iter().zip(evals));
        pop = environmental_selection(&pool, n, mode);
        observer(&GenerationReport { generation, evaluations, population: &pop });
    }
    Ok(pop)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum FrontKind {
    Ppf,
    Vpf,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FrontPoint {
    pub config: Config,
    pub ppa: f64,
    pub behav: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ParetoFront {
    pub kind: FrontKind,
    pub points: Vec<FrontPoint>,
}

/// Drops points outside `constraints`, then dominated points. The survivors
/// are ordered by `(ppa, behav)`, ties kept in input order. Points with equal
/// objectives do not dominate each other and are all kept.
pub fn pareto_filter(points: &[FrontPoint], constraints: &Constraints, kind: FrontKind) -> ParetoFront {
    let mut admitted: Vec<&FrontPoint> = points.iter().filter(|p| constraints.admits(p.ppa, p.behav)).collect();
    admitted.sort_by(|a, b| a.ppa.total_cmp(&b.ppa).then(a.behav.total_cmp(&b.behav)));
    let mut out = Vec::new();
    let mut best_before = f64::INFINITY;
    let mut k = 0;
    while k < admitted.len() {
        let head = admitted[k];
        let mut end = k;
        while end < admitted.len() && admitted[end].ppa == head.ppa && admitted[end].behav == head.behav {
            end += 1;
        }
        if head.behav < best_before {
            out.extend(admitted[k..end].iter().map(|p| **p));
        }
        best_before = best_before.min(head.behav);
        k = end;
    }
    ParetoFront { kind, points: out }
}

/// Area dominated by `points` and bounded by `reference` (minimisation).
/// Points that do not dominate the reference are ignored.
pub fn hypervolume2d(points: &[(f64, f64)], reference: (f64, f64)) -> f64 {
    let mut inside: Vec<(f64, f64)> = Vec::with_capacity(points.len());
    for &(x, y) in points {
        if x < reference.0 && y < reference.1 {
            inside.push((x, y));
        } else if x > reference.0 || y > reference.1 {
            log::warn!("point ({x}, {y}) outside reference ({}, {}) ignored", reference.0, reference.1);
        }
    }
    inside.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut stairs: Vec<(f64, f64)> = Vec::with_capacity(inside.len());
    for p in inside {
        if stairs.last().is_none_or(|s| p.1 < s.1) {
            stairs.push(p);
        }
    }
    let mut area = 0.0;
    for (k, &(x, y)) in stairs.iter().enumerate() {
        let next_x = stairs.get(k + 1).map_or(reference.0, |p| p.0);
        area += (next_x - x) * (reference.1 - y);
    }
    area
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HvReport {
    pub hypervolume: f64,
    pub reference_point: (f64, f64),
    /// `(P_MAX, B_MAX, const_sf)`.
    pub normalization: (f64, f64, f64),
}

/// Hypervolume with objectives divided by `const_sf * maxima` and reference
/// point `(1, 1)`.
pub fn normalized_hypervolume(points: &[FrontPoint], maxima: (f64, f64), const_sf: f64) -> HvReport {
    let (sp, sb) = (const_sf * maxima.0, const_sf * maxima.1);
    let scaled: Vec<(f64, f64)> = points.iter().map(|p| (p.ppa / sp, p.behav / sb)).collect();
    HvReport { hypervolume: hypervolume2d(&scaled, (1.0, 1.0)), reference_point: (1.0, 1.0), normalization: (maxima.0, maxima.1, const_sf) }
}

/// Re-evaluates every front configuration with `truth` and filters again.
pub fn vpf_with(front: &ParetoFront, truth: &dyn Fitness, constraints: &Constraints) -> ParetoFront {
    let mut seen = BTreeSet::new();
    let configs: Vec<Config> = front.points.iter().map(|p| p.config).filter(|c| seen.insert(*c)).collect();
    let evals = truth.evaluate_batch(&configs);
    let points: Vec<FrontPoint> = configs.iter().zip(evals).map(|(&config, e)| FrontPoint { config, ppa: e.ppa, behav: e.behav }).collect();
    pareto_filter(&points, constraints, FrontKind::Vpf)
}

/// [`vpf_with`] using exhaustive characterisation of `netlist`.
pub fn vpf(front: &ParetoFront, netlist: &Netlist, metrics: (Metric, Metric), constraints: &Constraints) -> Result<ParetoFront> {
    if let Some(p) = front.points.first() {
        netlist.config_len_check(&p.config)?;
    }
    let truth = GroundTruthFitness::new(netlist, metrics.0, metrics.1, *constraints)?;
    Ok(vpf_with(front, &truth, constraints))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Method {
    Ga,
    Map,
    MapGa,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Ga => "ga",
            Method::Map => "map",
            Method::MapGa => "map_ga",
        }
    }
}

impl core::str::FromStr for Method {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['+', '-'], "_").as_str() {
            "ga" => Ok(Method::Ga),
            "map" => Ok(Method::Map),
            "map_ga" => Ok(Method::MapGa),
            other => bail!(Validation, "unknown method {other:?}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExperimentSettings {
    pub const_sf: f64,
    pub maxima: (f64, f64),
    pub methods: Vec<Method>,
    pub n_seeds: usize,
    /// Template; run `s` uses `ga.seed + s`.
    pub ga: GaSettings,
}

impl ExperimentSettings {
    pub fn constraints(&self) -> Constraints {
        Constraints::scaled(self.maxima, self.const_sf)
    }

    /// `(method, seed)` pairs of the experiment, in report order. The pool
    /// method is deterministic and runs once.
    pub fn runs(&self) -> Vec<(Method, u64)> {
        let mut out = Vec::new();
        for &m in &self.methods {
            let seeds = if m == Method::Map { 1 } else { self.n_seeds };
            out.extend((0..seeds as u64).map(|s| (m, s)));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RunRecord {
    pub method: Method,
    pub seed: u64,
    /// `(fitness evaluations, normalised PPF hypervolume)`.
    pub trajectory: Vec<(usize, f64)>,
    pub ppf: ParetoFront,
    pub vpf: ParetoFront,
    pub ppf_hv: f64,
    pub vpf_hv: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExperimentReport {
    pub settings: ExperimentSettings,
    pub runs: Vec<RunRecord>,
}

impl ExperimentReport {
    /// Mean final PPF hypervolume of `method`, `None` without runs.
    pub fn mean_ppf_hv(&self, method: Method) -> Option<f64> {
        let v: Vec<f64> = self.runs.iter().filter(|r| r.method == method).map(|r| r.ppf_hv).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }
}

fn points_of(pop: &[Individual]) -> Vec<FrontPoint> {
    pop.iter().map(|i| FrontPoint { config: i.config, ppa: i.eval.ppa, behav: i.eval.behav }).collect()
}

/// Up to `n` pool configurations, chosen by rank and crowding on the
/// model-predicted objectives so no fitness evaluation is spent.
pub fn select_seeds(pool: &SolutionPool, n: usize) -> Vec<Config> {
    let cand: Vec<(Config, Evaluation)> = pool
        .entries
        .iter()
        .map(|e| (e.solution.config, Evaluation { ppa: e.solution.v_ppa, behav: e.solution.v_behav, violation: 0.0 }))
        .collect();
    if cand.len() <= n {
        return cand.into_iter().map(|c| c.0).collect();
    }
    environmental_selection(&cand, n, ConstraintMode::ConstraintDomination).into_iter().map(|i| i.config).collect()
}

/// One run of `method`. `search` drives the search and yields the PPF;
/// `truth` re-evaluates the PPF into the VPF.
pub fn run_method(
    search: &dyn Fitness,
    truth: &dyn Fitness,
    pool: &SolutionPool,
    l: usize,
    settings: &ExperimentSettings,
    method: Method,
    seed: u64,
) -> Result<RunRecord> {
    let constraints = settings.constraints();
    let hv = |points: &[FrontPoint]| normalized_hypervolume(points, settings.maxima, settings.const_sf).hypervolume;
    let (candidates, trajectory) = match method {
        Method::Map => {
            let configs = pool.configs();
            let evals = search.evaluate_batch(&configs);
            let points: Vec<FrontPoint> =
                configs.iter().zip(&evals).map(|(&config, e)| FrontPoint { config, ppa: e.ppa, behav: e.behav }).collect();
            let front = pareto_filter(&points, &constraints, FrontKind::Ppf);
            let t = alloc::vec![(configs.len(), hv(&front.points))];
            (points, t)
        }
        Method::Ga | Method::MapGa => {
            let seeds = if method == Method::MapGa { select_seeds(pool, settings.ga.pop_size) } else { Vec::new() };
            let ga = GaSettings { seed: settings.ga.seed.wrapping_add(seed), ..settings.ga.clone() };
            let mut trajectory = Vec::new();
            let pop = nsga2_observed(search, l, &ga, &seeds, &mut |g| {
                let front = pareto_filter(&points_of(g.population), &constraints, FrontKind::Ppf);
                trajectory.push((g.evaluations, hv(&front.points)));
            })?;
            (points_of(&pop), trajectory)
        }
    };
    let ppf = pareto_filter(&candidates, &constraints, FrontKind::Ppf);
    let vpf = vpf_with(&ppf, truth, &constraints);
    Ok(RunRecord { method, seed, trajectory, ppf_hv: hv(&ppf.points), vpf_hv: hv(&vpf.points), ppf, vpf })
}

/// Every run of [`ExperimentSettings::runs`], serially.
pub fn run_experiment(
    search: &dyn Fitness,
    truth: &dyn Fitness,
    pool: &SolutionPool,
    l: usize,
    settings: &ExperimentSettings,
) -> Result<ExperimentReport> {
    let runs = settings.runs().into_iter().map(|(m, s)| run_method(search, truth, pool, l, settings, m, s)).collect::<Result<Vec<_>>>()?;
    Ok(ExperimentReport { settings: settings.clone(), runs })
}

/// Orders front points by `(ppa, behav, config)`.
pub fn cmp_points(a: &FrontPoint, b: &FrontPoint) -> Ordering {
    a.ppa.total_cmp(&b.ppa).then(a.behav.total_cmp(&b.behav)).then(a.config.cmp(&b.config))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(ppa: f64, behav: f64) -> FrontPoint {
        FrontPoint { config: Config::zeros(1), ppa, behav }
    }

    #[test]
    fn model_predictions_are_clamped_at_zero() {
        use crate::estimate::{Estimator, MinMax, PolyModel};
        let negative = Estimator::Poly(PolyModel {
            metric_name: "x".into(),
            intercept: -5.0,
            linear_coeffs: alloc::vec![1.0],
            quad_terms: Vec::new(),
            scaler: MinMax { min: 0.0, max: 1.0 },
            rank_deficient: false,
        });
        let fit = ModelFitness { ppa: &negative, behav: &negative, constraints: Constraints::none() };
        let e = fit.evaluate(&Config::ones(1));
        assert_eq!((e.ppa, e.behav), (0.0, 0.0));
    }

    #[test]
    fn hypervolume_analytic_cases() {
        assert_eq!(hypervolume2d(&[(0.0, 0.0)], (1.0, 1.0)), 1.0);
        assert!((hypervolume2d(&[(0.0, 0.5), (0.5, 0.0)], (1.0, 1.0)) - 0.75).abs() < 1e-12);
        assert_eq!(hypervolume2d(&[(0.0, 0.5), (0.0, 0.5), (0.5, 0.0)], (1.0, 1.0)), 0.75);
        assert_eq!(hypervolume2d(&[(2.0, 0.0)], (1.0, 1.0)), 0.0);
        assert_eq!(hypervolume2d(&[], (1.0, 1.0)), 0.0);
    }

    #[test]
    fn filter_examples() {
        let f = pareto_filter(&[pt(2.0, 2.0), pt(1.0, 1.0)], &Constraints::none(), FrontKind::Ppf);
        assert_eq!(f.points.len(), 1);
        assert_eq!((f.points[0].ppa, f.points[0].behav), (1.0, 1.0));
        let g = pareto_filter(&[pt(3.0, 1.0), pt(1.0, 3.0), pt(2.0, 2.0)], &Constraints::none(), FrontKind::Ppf);
        assert_eq!(g.points.iter().map(|p| p.ppa).collect::<Vec<_>>(), [1.0, 2.0, 3.0]);
        let h = pareto_filter(&[pt(1.0, 1.0), pt(1.0, 2.0), pt(2.0, 1.0)], &Constraints::none(), FrontKind::Ppf);
        assert_eq!(h.points.len(), 1);
        assert!(pareto_filter(&[], &Constraints::none(), FrontKind::Ppf).points.is_empty());
        let c = Constraints { max_ppa: 1.5, max_behav: 10.0 };
        assert_eq!(pareto_filter(&[pt(2.0, 0.0), pt(1.0, 5.0)], &c, FrontKind::Ppf).points.len(), 1);
    }

    #[test]
    fn settings_validation() {
        assert!(GaSettings { pop_size: 3, ..Default::default() }.validate().is_err());
        assert!(GaSettings { crossover_rate: 1.5, ..Default::default() }.validate().is_err());
        let s = GaSettings { max_evaluations: Some(64), ..Default::default() };
        assert_eq!(s.generations(), 0);
    }

    #[test]
    fn constraint_domination_order() {
        let feas = Evaluation { ppa: 9.0, behav: 9.0, violation: 0.0 };
        let bad = Evaluation { ppa: 0.0, behav: 0.0, violation: 0.1 };
        let worse = Evaluation { ppa: 0.0, behav: 0.0, violation: 0.2 };
        assert!(dominates(&feas, &bad, ConstraintMode::ConstraintDomination));
        assert!(dominates(&bad, &worse, ConstraintMode::ConstraintDomination));
        assert!(!dominates(&bad, &feas, ConstraintMode::Penalty));
    }

    #[test]
    fn method_names() {
        assert_eq!("MaP+GA".parse::<Method>().unwrap(), Method::MapGa);
        assert_eq!("map".parse::<Method>().unwrap(), Method::Map);
    }
}
