// SPDX-License-Identifier: Apache-2.0

mod common;

use axomap_core::apps::{app_behav, app_behav_direct, app_ppa, argmax, AppKernel, AppKind};
use axomap_core::charac::{ppa_metrics, ToggleModel};
use axomap_core::netlist::{build_multiplier, product_table, ProductTable};
use axomap_core::Config;
use common::TestRng;

fn exact_table() -> ProductTable {
    let v = (-128..128i64).flat_map(|a| (-128..128i64).map(move |b| (a, b)));
    let mut values = vec![0; 65536];
    for (a, b) in v {
        values[(a as u8 as usize) | (b as u8 as usize) << 8] = a * b;
    }
    ProductTable::from_values((8, 8), true, values).unwrap()
}

#[test]
fn exact_table_gives_zero_error() {
    let t = exact_table();
    let nl = build_multiplier(8, true).unwrap();
    assert_eq!(product_table(&nl, &Config::ones(36)).unwrap(), t);
    for kind in AppKind::ALL {
        assert_eq!(app_behav(&AppKernel::load(kind).unwrap(), &t).unwrap(), 0.0);
    }
}

#[test]
fn zero_table_gemv_by_recount() {
    let k = AppKernel::load(AppKind::GemvClassify).unwrap();
    let AppKernel::GemvClassify(g) = &k else { unreachable!() };
    let zero = ProductTable::from_values((8, 8), true, vec![0; 65536]).unwrap();
    // Every score is zero, so every sample is assigned class 0.
    let want = g.reference.iter().filter(|&&c| c != argmax(&[0; 10])).count() as f64 / 200.0;
    assert_eq!(app_behav(&k, &zero).unwrap(), want);
}

#[test]
fn table_and_direct_paths_agree() {
    let nl = build_multiplier(8, true).unwrap();
    let kernels: Vec<AppKernel> = AppKind::ALL.iter().map(|&k| AppKernel::load(k).unwrap()).collect();
    let mut rng = TestRng(77);
    for n in 0..100 {
        let c = rng.config(36);
        let t = product_table(&nl, &c).unwrap();
        // Direct evaluation is slow for the large kernels, so rotate them.
        let k = &kernels[n % 3];
        assert_eq!(app_behav(k, &t).unwrap().to_bits(), app_behav_direct(k, &nl, &c).unwrap().to_bits());
    }
}

#[test]
fn approximation_is_visible() {
    let nl = build_multiplier(8, true).unwrap();
    let t = product_table(&nl, &Config::zeros(36)).unwrap();
    for kind in AppKind::ALL {
        assert!(app_behav(&AppKernel::load(kind).unwrap(), &t).unwrap() > 0.0, "{}", kind.as_str());
    }
}

#[test]
fn range_mismatch_rejected() {
    let small = product_table(&build_multiplier(4, true).unwrap(), &Config::ones(10)).unwrap();
    assert!(app_behav(&AppKernel::load(AppKind::FirPeak).unwrap(), &small).is_err());
}

#[test]
fn ppa_delegates() {
    let nl = build_multiplier(8, true).unwrap();
    let mut rng = TestRng(1);
    for c in [Config::ones(36), Config::zeros(36), rng.config(36)] {
        assert_eq!(app_ppa(&c, &nl).unwrap(), ppa_metrics(&nl, &c, ToggleModel::Gray).unwrap());
    }
    assert_eq!(app_ppa(&Config::zeros(36), &nl).unwrap().pdplut, 0.0);
}
