// SPDX-License-Identifier: Apache-2.0

mod common;

use axomap_core::charac::{behav_metrics, characterize, ppa_metrics, BehavMetrics, Characterizer, ToggleModel};
use axomap_core::netlist::{build_adder, build_multiplier, product_table};
use axomap_core::Config;
use common::{naive_eval, TestRng};

#[test]
fn accurate_configs_have_zero_error() {
    for nl in [build_multiplier(4, true).unwrap(), build_multiplier(8, true).unwrap(), build_adder(3).unwrap()] {
        let b = behav_metrics(&nl, &Config::ones(nl.removable_count())).unwrap();
        assert_eq!(b, BehavMetrics::default(), "{}", nl.name());
    }
}

#[test]
fn all_zeros_8x8_error_is_mean_abs_product() {
    let nl = build_multiplier(8, true).unwrap();
    let b = behav_metrics(&nl, &Config::zeros(36)).unwrap();
    // Sum of |a| over -128..=127 is 16384, so the mean of |a*b| is 64 * 64.
    assert_eq!(b.avg_abs_err, 4096.0);
    assert_eq!(b.max_abs_err, 16384.0);
    assert_eq!(b.prob_err, 100.0 * 255.0 * 255.0 / 65536.0);
    assert_eq!(b.avg_abs_rel_err, 1.0);
}

#[test]
fn behav_matches_scalar_recount() {
    let nl = build_multiplier(4, true).unwrap();
    let mut rng = TestRng(21);
    for _ in 0..20 {
        let c = rng.config(10);
        let b = behav_metrics(&nl, &c).unwrap();
        let (mut sum, mut max, mut wrong, mut rel, mut nz) = (0i64, 0i64, 0, 0.0, 0);
        for a in -8..8i64 {
            for x in -8..8i64 {
                let e = (a * x - naive_eval(&nl, &c, a, x)).abs();
                sum += e;
                max = max.max(e);
                wrong += (e != 0) as usize;
                if a * x != 0 {
                    rel += e as f64 / (a * x).abs() as f64;
                    nz += 1;
                }
            }
        }
        assert_eq!(b.avg_abs_err, sum as f64 / 256.0);
        assert_eq!(b.max_abs_err, max as f64);
        assert_eq!(b.prob_err, 100.0 * wrong as f64 / 256.0);
        assert!((b.avg_abs_rel_err - rel / nz as f64).abs() < 1e-12);
    }
}

#[test]
fn prob_err_matches_table_recount_8x8() {
    let nl = build_multiplier(8, true).unwrap();
    let mut rng = TestRng(3);
    for _ in 0..5 {
        let c = rng.config(36);
        let t = product_table(&nl, &c).unwrap();
        let mut wrong = 0;
        for a in -128..128i64 {
            for b in -128..128i64 {
                wrong += (t.get(a, b).unwrap() != a * b) as usize;
            }
        }
        assert_eq!(behav_metrics(&nl, &c).unwrap().prob_err, wrong as f64 / 65536.0 * 100.0);
    }
}

#[test]
fn ppa_examples() {
    let nl = build_multiplier(4, true).unwrap();
    let full = ppa_metrics(&nl, &Config::ones(10), ToggleModel::Gray).unwrap();
    assert_eq!(full.luts, 10.0);
    let zero = ppa_metrics(&nl, &Config::zeros(10), ToggleModel::Gray).unwrap();
    assert_eq!((zero.luts, zero.power, zero.pdplut), (0.0, 0.0, 0.0));
    let mut rng = TestRng(8);
    for _ in 0..50 {
        let c = rng.config(10);
        let p = ppa_metrics(&nl, &c, ToggleModel::Gray).unwrap();
        assert_eq!(p.pdp, p.power * p.cpd);
        assert_eq!(p.pdplut, p.power * p.cpd * p.luts);
        for i in (0..10).filter(|&i| c.get(i)) {
            assert!(ppa_metrics(&nl, &c.with(i, false), ToggleModel::Gray).unwrap().luts <= p.luts);
        }
    }
}

#[test]
fn batch_matches_single_calls() {
    let nl = build_multiplier(8, true).unwrap();
    let mut rng = TestRng(99);
    let mut configs = Vec::new();
    while configs.len() < 100 {
        let c = rng.config(36);
        if !configs.contains(&c) {
            configs.push(c);
        }
    }
    let batch = characterize(&nl, &configs).unwrap();
    let ch = Characterizer::new(&nl).unwrap();
    for (c, r) in configs.iter().zip(&batch) {
        assert_eq!(r.config, *c);
        assert_eq!(r.behav, ch.behav(c).unwrap());
        assert_eq!(r.ppa, ch.ppa(c).unwrap());
    }
    assert!(characterize(&nl, &[]).unwrap().is_empty());
    assert!(characterize(&nl, &[configs[0], configs[0]]).is_err());
}

#[test]
fn full_4x4_space_characterised() {
    let nl = build_multiplier(4, true).unwrap();
    assert_eq!(characterize(&nl, &common::all_configs(10)).unwrap().len(), 1024);
}
