// SPDX-License-Identifier: Apache-2.0

mod common;

use axomap_core::charac::{characterize, Metric};
use axomap_core::dse::{
    hypervolume2d, normalized_hypervolume, nsga2, nsga2_observed, pareto_filter, run_experiment, vpf, ConstraintMode, Constraints,
    ExperimentSettings, FrontKind, FrontPoint, GaSettings, GroundTruthFitness, Method, ModelFitness,
};
use axomap_core::estimate::{fit_estimator, EstimatorKind};
use axomap_core::map::{build_pool, default_schedule, FixedModels, PoolSettings};
use axomap_core::stats::rank_quadratic_features;
use axomap_core::Config;
use common::{all_configs, full_4x4, TestRng};

fn dominates(a: &FrontPoint, b: &FrontPoint) -> bool {
    a.ppa <= b.ppa && a.behav <= b.behav && (a.ppa < b.ppa || a.behav < b.behav)
}

/// Quadratic-time non-dominated subset.
fn brute_front(points: &[FrontPoint], c: &Constraints) -> Vec<FrontPoint> {
    let inside: Vec<FrontPoint> = points.iter().copied().filter(|p| p.ppa <= c.max_ppa && p.behav <= c.max_behav).collect();
    inside.iter().copied().filter(|p| !inside.iter().any(|q| dominates(q, p))).collect()
}

fn random_points(rng: &mut TestRng, n: usize, grid: u64) -> Vec<FrontPoint> {
    (0..n)
        .map(|k| FrontPoint {
            config: Config::from_bits(k as u64, 16).unwrap(),
            ppa: rng.below(grid) as f64 / grid as f64,
            behav: rng.below(grid) as f64 / grid as f64,
        })
        .collect()
}

#[test]
fn hypervolume_analytic() {
    assert!((hypervolume2d(&[(0.0, 0.0)], (1.0, 1.0)) - 1.0).abs() <= 1e-12);
    assert!((hypervolume2d(&[(0.0, 0.5), (0.5, 0.0)], (1.0, 1.0)) - 0.75).abs() <= 1e-12);
}

/// Union-of-rectangles area on the coordinate grid.
fn grid_area(points: &[(f64, f64)]) -> f64 {
    let mut xs: Vec<f64> = points.iter().map(|p| p.0).chain([1.0]).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let mut area = 0.0;
    for w in xs.windows(2) {
        let low = points.iter().filter(|p| p.0 <= w[0]).map(|p| p.1).fold(1.0, f64::min);
        area += (w[1] - w[0]) * (1.0 - low);
    }
    area
}

#[test]
fn hypervolume_matches_grid_area_and_is_monotone() {
    let mut rng = TestRng(11);
    for _ in 0..10_000 {
        let n = 1 + rng.below(12) as usize;
        let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.unit(), rng.unit())).collect();
        let hv = hypervolume2d(&pts, (1.0, 1.0));
        assert!((hv - grid_area(&pts)).abs() <= 1e-12);
        let extra = (rng.unit(), rng.unit());
        let dominated = pts.iter().any(|p| p.0 <= extra.0 && p.1 <= extra.1);
        let mut more = pts.clone();
        more.push(extra);
        let hv2 = hypervolume2d(&more, (1.0, 1.0));
        if dominated {
            assert_eq!(hv2, hv);
        } else {
            assert!(hv2 > hv);
        }
    }
}

#[test]
fn filter_matches_pairwise_oracle() {
    let mut rng = TestRng(5);
    for round in 0..500 {
        let pts = random_points(&mut rng, 1 + round % 40, 8);
        let c = if round % 3 == 0 { Constraints::none() } else { Constraints { max_ppa: 0.7, max_behav: 0.6 } };
        let mut want = brute_front(&pts, &c);
        let got = pareto_filter(&pts, &c, FrontKind::Ppf).points;
        let key = |p: &FrontPoint| (p.ppa.to_bits(), p.behav.to_bits(), p.config);
        want.sort_by_key(key);
        let mut sorted = got.clone();
        sorted.sort_by_key(key);
        assert_eq!(sorted, want);
        assert!(got.windows(2).all(|w| w[0].ppa <= w[1].ppa));
        assert_eq!(pareto_filter(&got, &c, FrontKind::Ppf).points, got);
    }
}

#[test]
fn nsga2_is_deterministic_and_respects_budget() {
    let (nl, _) = full_4x4();
    let fit = GroundTruthFitness::new(&nl, Metric::Pdplut, Metric::AvgAbsRelErr, Constraints::none()).unwrap();
    let s = GaSettings { pop_size: 16, max_generations: 50, max_evaluations: Some(100), seed: 3, ..GaSettings::default() };
    let mut evals = Vec::new();
    let a = nsga2_observed(&fit, 10, &s, &[], &mut |g| evals.push(g.evaluations)).unwrap();
    assert_eq!(a, nsga2(&fit, 10, &s, &[]).unwrap());
    assert_eq!(evals, [16, 32, 48, 64, 80, 96]);
    assert_eq!(a.len(), 16);
    let seeds = [Config::zeros(10), Config::zeros(10), Config::ones(10)];
    let p = nsga2(&fit, 10, &GaSettings { constraint_mode: ConstraintMode::Penalty, ..s }, &seeds).unwrap();
    assert_eq!(p.len(), 16);
}

#[test]
fn ground_truth_ppf_is_a_vpf_fixed_point() {
    let (nl, ds) = full_4x4();
    let maxima = (ds.max_of(Metric::Pdplut), ds.max_of(Metric::AvgAbsRelErr));
    let c = Constraints::scaled(maxima, 0.5);
    let fit = GroundTruthFitness::new(&nl, Metric::Pdplut, Metric::AvgAbsRelErr, c).unwrap();
    let pop = nsga2(&fit, 10, &GaSettings { max_generations: 20, ..GaSettings::default() }, &[]).unwrap();
    let pts: Vec<FrontPoint> = pop.iter().map(|i| FrontPoint { config: i.config, ppa: i.eval.ppa, behav: i.eval.behav }).collect();
    let ppf = pareto_filter(&pts, &c, FrontKind::Ppf);
    let v = vpf(&ppf, &nl, (Metric::Pdplut, Metric::AvgAbsRelErr), &c).unwrap();
    let strip = |f: &[FrontPoint]| f.iter().map(|p| (p.config, p.ppa, p.behav)).collect::<Vec<_>>();
    let mut ppf_unique = strip(&ppf.points);
    ppf_unique.dedup_by_key(|p| p.0);
    assert_eq!(strip(&v.points), ppf_unique);
}

#[test]
fn model_vpf_is_sound() {
    let (nl, ds) = full_4x4();
    let maxima = (ds.max_of(Metric::Pdplut), ds.max_of(Metric::AvgAbsRelErr));
    let c = Constraints::scaled(maxima, 0.8);
    let (p, _) = fit_estimator(&ds, Metric::Pdplut, EstimatorKind::Poly, 0).unwrap();
    let (b, _) = fit_estimator(&ds, Metric::AvgAbsRelErr, EstimatorKind::Poly, 0).unwrap();
    let fit = ModelFitness { ppa: &p, behav: &b, constraints: c };
    let pop = nsga2(&fit, 10, &GaSettings { max_generations: 20, ..GaSettings::default() }, &[]).unwrap();
    let pts: Vec<FrontPoint> = pop.iter().map(|i| FrontPoint { config: i.config, ppa: i.eval.ppa, behav: i.eval.behav }).collect();
    let ppf = pareto_filter(&pts, &c, FrontKind::Ppf);
    let v = vpf(&ppf, &nl, (Metric::Pdplut, Metric::AvgAbsRelErr), &c).unwrap();
    assert!(!v.points.is_empty());
    let records = characterize(&nl, &v.points.iter().map(|p| p.config).collect::<Vec<_>>()).unwrap();
    for (pt, r) in v.points.iter().zip(&records) {
        assert_eq!((pt.ppa, pt.behav), (r.ppa.pdplut, r.behav.avg_abs_rel_err));
        assert!(c.admits(pt.ppa, pt.behav));
        assert!(v.points.iter().all(|q| !dominates(q, pt)));
        assert!(ppf.points.iter().any(|q| q.config == pt.config));
    }
}

#[test]
fn seeded_search_beats_unseeded() {
    let (nl, ds) = full_4x4();
    let (pm, bm) = (Metric::Pdplut, Metric::AvgAbsRelErr);
    let maxima = (ds.max_of(pm), ds.max_of(bm));
    let all = characterize(&nl, &all_configs(10)).unwrap();
    let rp = rank_quadratic_features(&ds, pm).unwrap();
    let rb = rank_quadratic_features(&ds, bm).unwrap();
    let (ppa, _) = axomap_core::estimate::fit_poly(&ds, pm, &rp, 0).unwrap();
    let (behav, _) = axomap_core::estimate::fit_poly(&ds, bm, &rb, 0).unwrap();
    let models = FixedModels { ppa, behav };
    for sf in [0.5, 0.8, 1.0] {
        let c = Constraints::scaled(maxima, sf);
        let truth_pts: Vec<FrontPoint> = all.iter().map(|r| FrontPoint { config: r.config, ppa: pm.of(r), behav: bm.of(r) }).collect();
        let truth = pareto_filter(&truth_pts, &c, FrontKind::Ppf);
        let fit = GroundTruthFitness::new(&nl, pm, bm, c).unwrap();
        let pool = build_pool(&models, &PoolSettings::new(sf, maxima, default_schedule(10))).unwrap();
        let settings = ExperimentSettings {
            const_sf: sf,
            maxima,
            methods: vec![Method::Ga, Method::MapGa],
            n_seeds: 10,
            ga: GaSettings { max_evaluations: Some(64 * 16), ..GaSettings::default() },
        };
        let report = run_experiment(&fit, &fit, &pool, 10, &settings).unwrap();
        let (ga, mg) = (report.mean_ppf_hv(Method::Ga).unwrap(), report.mean_ppf_hv(Method::MapGa).unwrap());
        let subset = report
            .runs
            .iter()
            .filter(|r| r.method == Method::MapGa)
            .filter(|r| r.ppf.points.iter().all(|p| truth.points.iter().any(|t| t.config == p.config)))
            .count();
        let best = normalized_hypervolume(&truth.points, maxima, sf).hypervolume;
        println!("sf {sf}: pool {} ga {ga:.6} map+ga {mg:.6} optimum {best:.6} subset {subset}/10", pool.len());
        assert!(mg >= ga, "sf {sf}: {mg} < {ga}");
        assert!(subset >= 9, "sf {sf}: {subset}/10");
    }
}
