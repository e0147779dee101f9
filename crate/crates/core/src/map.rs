// SPDX-License-Identifier: Apache-2.0

//! Constrained pseudo-boolean problems built from two polynomial models.
//!
//! Each problem minimises `wt_b * v_behav / B_MAX + (1 - wt_b) * v_ppa / P_MAX`
//! subject to `v_ppa <= const_sf * P_MAX` and `v_behav <= const_sf * B_MAX`,
//! where `v_*` are model predictions over the binary LUT-usage variables.
//! Dividing by the dataset maxima puts both terms on the same scale, so the
//! weight sweep spreads solutions across the trade-off.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::charac::Metric;
use crate::config::{mask, Config};
use crate::dataset::Dataset;
use crate::error::{bail, Result};
use crate::estimate::{fit_poly, PolyModel};

/// Largest variable count accepted by [`solve_exact`].
pub const MAX_EXACT_VARS: usize = 24;
pub const DEFAULT_RESTARTS: usize = 16;
/// Local-search moves per start.
pub const DEFAULT_BUDGET: usize = 200;
/// Constraint scaling factors of the experimental protocol.
pub const CONST_SF_GRID: [f64; 6] = [0.2, 0.5, 0.8, 1.0, 1.2, 1.5];

pub fn pair_count(l: usize) -> usize {
    l * l.saturating_sub(1) / 2
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MapProblem {
    pub removable_count: usize,
    pub ppa_model: PolyModel,
    pub behav_model: PolyModel,
    pub wt_b: f64,
    pub const_sf: f64,
    pub max_ppa: f64,
    pub max_behav: f64,
    pub n_quad: usize,
    /// Dataset maxima `(P_MAX, B_MAX)` used for bounds and normalisation.
    pub maxima: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Optimality {
    Proven,
    Heuristic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MapSolution {
    pub config: Config,
    pub v_ppa: f64,
    pub v_behav: f64,
    pub objective: f64,
    pub feasible: bool,
    pub optimality: Optimality,
}

impl MapSolution {
    /// Normalised constraint excess, 0 when feasible.
    pub fn violation(&self, problem: &MapProblem) -> f64 {
        problem.violation(self.v_ppa, self.v_behav)
    }
}

/// Outcome of [`solve_exact`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExactOutcome {
    Optimal(MapSolution),
    Infeasible,
}

impl ExactOutcome {
    pub fn solution(&self) -> Option<&MapSolution> {
        match self {
            ExactOutcome::Optimal(s) => Some(s),
            ExactOutcome::Infeasible => None,
        }
    }
}

/// Builds one problem; both models keep their first `n_quad` quadratic terms.
pub fn formulate(
    ppa_model: &PolyModel,
    behav_model: &PolyModel,
    wt_b: f64,
    const_sf: f64,
    n_quad: usize,
    maxima: (f64, f64),
) -> Result<MapProblem> {
    let l = ppa_model.removable_count();
    if behav_model.removable_count() != l {
        bail!(Validation, "models disagree on L: {l} vs {}", behav_model.removable_count());
    }
    if !(0.0..=1.0).contains(&wt_b) {
        bail!(Validation, "wt_b = {wt_b} outside [0, 1]");
    }
    if !(const_sf > 0.0 && maxima.0 > 0.0 && maxima.1 > 0.0) || !(const_sf * maxima.0).is_finite() || !(const_sf * maxima.1).is_finite() {
        bail!(Validation, "constraint bounds must be positive and finite (const_sf {const_sf}, maxima {maxima:?})");
    }
    if n_quad > pair_count(l) {
        bail!(Validation, "n_quad = {n_quad} exceeds C({l}, 2) = {}", pair_count(l));
    }
    for m in [ppa_model, behav_model] {
        if m.quad_terms.len() < n_quad {
            bail!(Validation, "{} model has {} quadratic terms, {n_quad} requested", m.metric_name, m.quad_terms.len());
        }
    }
    Ok(MapProblem {
        removable_count: l,
        ppa_model: ppa_model.truncated(n_quad),
        behav_model: behav_model.truncated(n_quad),
        wt_b,
        const_sf,
        max_ppa: const_sf * maxima.0,
        max_behav: const_sf * maxima.1,
        n_quad,
        maxima,
    })
}

impl MapProblem {
    pub fn objective_of(&self, v_ppa: f64, v_behav: f64) -> f64 {
        self.wt_b * (v_behav / self.maxima.1) + (1.0 - self.wt_b) * (v_ppa / self.maxima.0)
    }

    pub fn violation(&self, v_ppa: f64, v_behav: f64) -> f64 {
        (v_ppa - self.max_ppa).max(0.0) / self.maxima.0 + (v_behav - self.max_behav).max(0.0) / self.maxima.1
    }

    /// Canonical evaluation of `config`; every solver reports these values.
    pub fn evaluate(&self, config: &Config, optimality: Optimality) -> MapSolution {
        let v_ppa = self.ppa_model.predict(config);
        let v_behav = self.behav_model.predict(config);
        MapSolution {
            config: *config,
            v_ppa,
            v_behav,
            objective: self.objective_of(v_ppa, v_behav),
            feasible: v_ppa <= self.max_ppa && v_behav <= self.max_behav,
            optimality,
        }
    }
}

/// Quadratic pseudo-boolean function with a dense symmetric pair matrix.
#[derive(Debug, Clone)]
struct Dense {
    c0: f64,
    lin: Vec<f64>,
    q: Vec<f64>,
}

impl Dense {
    fn from_model(m: &PolyModel) -> Self {
        let l = m.removable_count();
        let mut lin = m.linear_coeffs.clone();
        let mut q = vec![0.0; l * l];
        for &(i, j, c) in &m.quad_terms {
            if i == j {
                lin[i] += c;
            } else {
                q[i * l + j] += c;
                q[j * l + i] += c;
            }
        }
        Self { c0: m.intercept, lin, q }
    }

    fn combine(a: &Dense, wa: f64, b: &Dense, wb: f64) -> Self {
        Self {
            c0: wa * a.c0 + wb * b.c0,
            lin: a.lin.iter().zip(&b.lin).map(|(x, y)| wa * x + wb * y).collect(),
            q: a.q.iter().zip(&b.q).map(|(x, y)| wa * x + wb * y).collect(),
        }
    }

    /// `sum_{k <= i < j} min(0, q_ij)` for every `k`, plus a trailing 0.
    fn negative_pair_suffix(&self, l: usize) -> Vec<f64> {
        let mut out = vec![0.0; l + 1];
        for k in (0..l).rev() {
            let row: f64 = (k + 1..l).map(|j| self.q[k * l + j].min(0.0)).sum();
            out[k] = out[k + 1] + row;
        }
        out
    }

    /// Value and per-variable gradient `lin_i + sum_j q_ij x_j` at `x`.
    fn value_and_gradient(&self, x: u64, l: usize, grad: &mut [f64]) -> f64 {
        let mut v = self.c0;
        for i in 0..l {
            let mut g = self.lin[i];
            let row = &self.q[i * l..(i + 1) * l];
            for (j, &qij) in row.iter().enumerate() {
                if x >> j & 1 == 1 {
                    g += qij;
                }
            }
            grad[i] = g;
            if x >> i & 1 == 1 {
                v += self.lin[i];
                for (j, &qij) in row.iter().enumerate().skip(i + 1) {
                    if x >> j & 1 == 1 {
                        v += qij;
                    }
                }
            }
        }
        v
    }
}

struct BranchAndBound<'a> {
    problem: &'a MapProblem,
    l: usize,
    polys: [Dense; 3],
    suffix: [Vec<f64>; 3],
    limits: [f64; 2],
    tol: [f64; 3],
    eff: Vec<f64>,
    fixed: Vec<[f64; 3]>,
    best: Option<MapSolution>,
}

impl BranchAndBound<'_> {
    fn level(&mut self, k: usize) -> &mut [f64] {
        let w = 3 * self.l;
        &mut self.eff[k * w..(k + 1) * w]
    }

    fn bound(&self, k: usize, p: usize) -> f64 {
        let l = self.l;
        let eff = &self.eff[k * 3 * l + p * l..k * 3 * l + (p + 1) * l];
        let free: f64 = eff[k..].iter().map(|&e| e.min(0.0)).sum();
        self.fixed[k][p] + free + self.suffix[p][k]
    }

    fn search(&mut self, k: usize, x: u64) {
        for p in 0..2 {
            if self.bound(k, p) > self.limits[p] + self.tol[p] {
                return;
            }
        }
        if let Some(best) = &self.best {
            if self.bound(k, 2) > best.objective + self.tol[2] {
                return;
            }
        }
        if k == self.l {
            let c = Config::from_bits(x, self.l).expect("masked");
            let s = self.problem.evaluate(&c, Optimality::Proven);
            if s.feasible && self.best.is_none_or(|b| s.objective < b.objective) {
                self.best = Some(s);
            }
            return;
        }
        let l = self.l;
        let w = 3 * l;
        self.eff.copy_within(k * w..(k + 1) * w, (k + 1) * w);
        self.fixed[k + 1] = self.fixed[k];
        self.search(k + 1, x);

        self.eff.copy_within(k * w..(k + 1) * w, (k + 1) * w);
        let mut fixed = self.fixed[k];
        for p in 0..3 {
            fixed[p] += self.eff[k * w + p * l + k];
        }
        self.fixed[k + 1] = fixed;
        for p in 0..3 {
            let row: Vec<f64> = self.polys[p].q[k * l..(k + 1) * l].to_vec();
            let next = self.level(k + 1);
            for j in k + 1..l {
                next[p * l + j] += row[j];
            }
        }
        self.search(k + 1, x | 1 << k);
    }
}

/// Branch-and-bound over the binary variables in index order, 0-branch
/// first, pruning with the sum of negative contributions still available to
/// the unfixed variables. Among equal objectives the lexicographically
/// smallest configuration is returned.
pub fn solve_exact(problem: &MapProblem) -> Result<ExactOutcome> {
    let l = problem.removable_count;
    if l > MAX_EXACT_VARS {
        bail!(Capacity, "exact solver supports L <= {MAX_EXACT_VARS}, got {l}");
    }
    let ppa = Dense::from_model(&problem.ppa_model);
    let behav = Dense::from_model(&problem.behav_model);
    let obj = Dense::combine(&behav, problem.wt_b / problem.maxima.1, &ppa, (1.0 - problem.wt_b) / problem.maxima.0);
    let polys = [ppa, behav, obj];
    let suffix = [polys[0].negative_pair_suffix(l), polys[1].negative_pair_suffix(l), polys[2].negative_pair_suffix(l)];
    let mut eff = vec![0.0; (l + 1) * 3 * l];
    for p in 0..3 {
        eff[p * l..(p + 1) * l].copy_from_slice(&polys[p].lin);
    }
    let scale = |p: &Dense| 1.0 + p.c0.abs() + p.lin.iter().map(|c| c.abs()).sum::<f64>() + p.q.iter().map(|c| c.abs()).sum::<f64>() / 2.0;
    let tol = [1e-9 * scale(&polys[0]), 1e-9 * scale(&polys[1]), 1e-9 * scale(&polys[2])];
    let mut fixed = vec![[0.0; 3]; l + 1];
    fixed[0] = [polys[0].c0, polys[1].c0, polys[2].c0];
    let mut bb = BranchAndBound { problem, l, polys, suffix, limits: [problem.max_ppa, problem.max_behav], tol, eff, fixed, best: None };
    bb.search(0, 0);
    Ok(match bb.best {
        Some(s) => ExactOutcome::Optimal(s),
        None => ExactOutcome::Infeasible,
    })
}

/// Total order used to keep the best solution found: feasible first, then
/// objective (or violation when infeasible), then configuration.
fn better(problem: &MapProblem, a: &MapSolution, b: &MapSolution) -> bool {
    let key = |s: &MapSolution| if s.feasible { (0, s.objective) } else { (1, s.violation(problem)) };
    let (ka, kb) = (key(a), key(b));
    match ka.0.cmp(&kb.0).then(ka.1.total_cmp(&kb.1)) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => a.config < b.config,
    }
}

struct LocalSearch<'a> {
    problem: &'a MapProblem,
    l: usize,
    ppa: Dense,
    behav: Dense,
    gp: Vec<f64>,
    gb: Vec<f64>,
}

impl LocalSearch<'_> {
    fn penalised(&self, vp: f64, vb: f64, mu: f64) -> f64 {
        self.problem.objective_of(vp, vb) + mu * self.problem.violation(vp, vb)
    }

    /// Best strictly improving 1- or 2-flip neighbour of `x` under penalty `mu`.
    fn best_move(&mut self, x: u64, mu: f64) -> Option<u64> {
        let l = self.l;
        let vp = self.ppa.value_and_gradient(x, l, &mut self.gp);
        let vb = self.behav.value_and_gradient(x, l, &mut self.gb);
        let here = self.penalised(vp, vb, mu);
        let s = |i: usize| if x >> i & 1 == 1 { -1.0 } else { 1.0 };
        let mut best = (here - 1e-12 * (1.0 + here.abs()), None);
        for i in 0..l {
            let (dp, db) = (s(i) * self.gp[i], s(i) * self.gb[i]);
            let f = self.penalised(vp + dp, vb + db, mu);
            if f < best.0 {
                best = (f, Some(x ^ 1 << i));
            }
        }
        for i in 0..l {
            for j in i + 1..l {
                let ss = s(i) * s(j);
                let dp = s(i) * self.gp[i] + s(j) * self.gp[j] + self.ppa.q[i * l + j] * ss;
                let db = s(i) * self.gb[i] + s(j) * self.gb[j] + self.behav.q[i * l + j] * ss;
                let f = self.penalised(vp + dp, vb + db, mu);
                if f < best.0 {
                    best = (f, Some(x ^ 1 << i ^ 1 << j));
                }
            }
        }
        best.1
    }
}

/// Multi-start steepest descent over 1- and 2-flip moves on the penalised
/// objective. Starts are the all-ones and all-zeros configurations followed
/// by `restarts` random ones, each the least-penalised of four draws. The
/// penalty weight grows tenfold whenever descent stalls at an infeasible
/// point. `budget` caps the moves per start; with 0 the best start wins.
pub fn solve_heuristic(problem: &MapProblem, seed: u64, restarts: usize, budget: usize) -> MapSolution {
    const MU_START: f64 = 1.0;
    const MU_MAX: f64 = 1e8;
    let l = problem.removable_count;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ls = LocalSearch {
        problem,
        l,
        ppa: Dense::from_model(&problem.ppa_model),
        behav: Dense::from_model(&problem.behav_model),
        gp: vec![0.0; l],
        gb: vec![0.0; l],
    };
    let mut starts = vec![mask(l), 0u64];
    for _ in 0..restarts {
        let pick = (0..4)
            .map(|_| {
                let density: f64 = rng.random();
                (0..l).filter(|_| rng.random::<f64>() < density).fold(0u64, |acc, i| acc | 1 << i)
            })
            .map(|x| {
                let s = problem.evaluate(&Config::from_bits(x, l).expect("masked"), Optimality::Heuristic);
                (ls.penalised(s.v_ppa, s.v_behav, MU_START), x)
            })
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .expect("four draws");
        starts.push(pick.1);
    }
    let eval = |x: u64| problem.evaluate(&Config::from_bits(x, l).expect("masked"), Optimality::Heuristic);
    let mut best = eval(starts[0]);
    for &start in &starts {
        let mut x = start;
        let mut mu = MU_START;
        let mut moves = 0;
        let s = eval(x);
        if better(problem, &s, &best) {
            best = s;
        }
        while moves < budget {
            match ls.best_move(x, mu) {
                Some(next) => {
                    x = next;
                    moves += 1;
                    let s = eval(x);
                    if better(problem, &s, &best) {
                        best = s;
                    }
                }
                None => {
                    if eval(x).feasible || mu >= MU_MAX {
                        break;
                    }
                    mu *= 10.0;
                }
            }
        }
    }
    best
}

/// Supplies the model pair for a given quadratic-term count.
pub trait SupportModels {
    fn removable_count(&self) -> usize;
    /// Largest quadratic-term count the provider can serve.
    fn max_quad(&self) -> usize;
    fn models(&self, n_quad: usize) -> Result<(PolyModel, PolyModel)>;
}

/// Fixed models; smaller term counts use prefixes of their term lists.
#[derive(Debug, Clone)]
pub struct FixedModels {
    pub ppa: PolyModel,
    pub behav: PolyModel,
}

impl SupportModels for FixedModels {
    fn removable_count(&self) -> usize {
        self.ppa.removable_count()
    }

    fn max_quad(&self) -> usize {
        self.ppa.quad_terms.len().min(self.behav.quad_terms.len())
    }

    fn models(&self, n_quad: usize) -> Result<(PolyModel, PolyModel)> {
        Ok((self.ppa.truncated(n_quad), self.behav.truncated(n_quad)))
    }
}

/// Refits both models for each term count from ranked pair lists.
#[derive(Debug, Clone)]
pub struct RefitModels<'a> {
    pub dataset: &'a Dataset,
    pub ppa_metric: Metric,
    pub behav_metric: Metric,
    pub ppa_ranking: Vec<(usize, usize)>,
    pub behav_ranking: Vec<(usize, usize)>,
    pub split_seed: u64,
}

impl SupportModels for RefitModels<'_> {
    fn removable_count(&self) -> usize {
        self.dataset.removable_count
    }

    fn max_quad(&self) -> usize {
        self.ppa_ranking.len().min(self.behav_ranking.len())
    }

    fn models(&self, n_quad: usize) -> Result<(PolyModel, PolyModel)> {
        if n_quad > self.max_quad() {
            bail!(Validation, "n_quad = {n_quad} exceeds the ranked pair count {}", self.max_quad());
        }
        let (ppa, _) = fit_poly(self.dataset, self.ppa_metric, &self.ppa_ranking[..n_quad], self.split_seed)?;
        let (behav, _) = fit_poly(self.dataset, self.behav_metric, &self.behav_ranking[..n_quad], self.split_seed)?;
        Ok((ppa, behav))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Solver {
    /// Exact up to 16 variables, heuristic beyond.
    Auto,
    Exact,
    Heuristic,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PoolSettings {
    pub const_sf: f64,
    pub wt_step: f64,
    pub n_quad_schedule: Vec<usize>,
    pub maxima: (f64, f64),
    pub solver: Solver,
    pub seed: u64,
    pub restarts: usize,
    pub budget: usize,
}

impl PoolSettings {
    pub fn new(const_sf: f64, maxima: (f64, f64), n_quad_schedule: Vec<usize>) -> Self {
        Self {
            const_sf,
            wt_step: 0.05,
            n_quad_schedule,
            maxima,
            solver: Solver::Auto,
            seed: 0,
            restarts: DEFAULT_RESTARTS,
            budget: DEFAULT_BUDGET,
        }
    }
}

/// One pooled configuration and every `(wt_b, n_quad)` that produced it.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PoolEntry {
    pub solution: MapSolution,
    pub origins: Vec<(f64, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolutionPool {
    pub const_sf: f64,
    pub entries: Vec<PoolEntry>,
    /// Problems without a feasible solution.
    pub infeasible: Vec<(f64, usize)>,
}

impl SolutionPool {
    pub fn configs(&self) -> Vec<Config> {
        self.entries.iter().map(|e| e.solution.config).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Weights `0, step, .., 1`; `step` must divide 1.
pub fn weight_grid(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step <= 1.0) {
        bail!(Validation, "weight step {step} outside (0, 1]");
    }
    let n = libm::round(1.0 / step);
    if (n * step - 1.0).abs() > 1e-9 {
        bail!(Validation, "weight step {step} does not divide 1");
    }
    let n = n as usize;
    Ok((0..=n).map(|k| k as f64 / n as f64).collect())
}

/// `{0, L/2, L, 2L, C(L,2)}` clipped to `C(L,2)`, ascending and distinct.
pub fn default_schedule(l: usize) -> Vec<usize> {
    let cap = pair_count(l);
    let mut v: Vec<usize> = [0, l / 2, l, 2 * l, cap].into_iter().map(|n| n.min(cap)).collect();
    v.sort_unstable();
    v.dedup();
    v
}

/// Solves one problem with the configured solver; `None` when infeasible.
pub fn solve(problem: &MapProblem, solver: Solver, seed: u64, restarts: usize, budget: usize) -> Result<Option<MapSolution>> {
    let exact = match solver {
        Solver::Exact => true,
        Solver::Heuristic => false,
        Solver::Auto => problem.removable_count <= 16,
    };
    if exact {
        Ok(solve_exact(problem)?.solution().copied())
    } else {
        let s = solve_heuristic(problem, seed, restarts, budget);
        Ok(s.feasible.then_some(s))
    }
}

/// Solves the weight grid for every scheduled term count at one `const_sf`
/// and pools distinct configurations in discovery order.
pub fn build_pool(models: &dyn SupportModels, settings: &PoolSettings) -> Result<SolutionPool> {
    let weights = weight_grid(settings.wt_step)?;
    let mut pool = SolutionPool { const_sf: settings.const_sf, entries: Vec::new(), infeasible: Vec::new() };
    let mut index = alloc::collections::BTreeMap::new();
    for (q, &n_quad) in settings.n_quad_schedule.iter().enumerate() {
        let (ppa, behav) = models.models(n_quad)?;
        for (w, &wt) in weights.iter().enumerate() {
            let problem = formulate(&ppa, &behav, wt, settings.const_sf, n_quad, settings.maxima)?;
            let seed = settings.seed ^ ((q as u64) << 32 | w as u64);
            match solve(&problem, settings.solver, seed, settings.restarts, settings.budget)? {
                Some(s) => {
                    let slot = *index.entry(s.config).or_insert_with(|| {
                        pool.entries.push(PoolEntry { solution: s, origins: Vec::new() });
                        pool.entries.len() - 1
                    });
                    pool.entries[slot].origins.push((wt, n_quad));
                }
                None => {
                    log::info!("no feasible solution for wt_b = {wt}, n_quad = {n_quad}, const_sf = {}", settings.const_sf);
                    pool.infeasible.push((wt, n_quad));
                }
            }
        }
    }
    Ok(pool)
}

/// Canonical text listing of pooled configurations, one bitstring per line.
pub fn pool_bitstrings(pool: &SolutionPool) -> String {
    let mut s = String::new();
    for e in &pool.entries {
        s.push_str(&e.solution.config.to_bitstring());
        s.push('\n');
    }
    s
}
