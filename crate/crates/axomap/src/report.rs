// SPDX-License-Identifier: Apache-2.0

//! Report directories, correlation tables and plots.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use axomap_core::dse::{ExperimentReport, FrontPoint, Method};
use axomap_core::stats::CorrelationReport;

use crate::formats::{fmt_f64, write_json};
use crate::svg::{self, Series, PALETTE};

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))
}

/// Long-form table `metric,i,j,r` over every `(i, j)` of the multivariate
/// matrix.
pub fn write_correlation_csv(path: &Path, rep: &CorrelationReport) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["metric", "i", "j", "r"])?;
    let n = rep.len();
    for i in 0..n {
        for j in 0..n {
            w.write_record([rep.metric_name.clone(), i.to_string(), j.to_string(), fmt_f64(rep.get(i, j))])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_heatmap(path: &Path, rep: &CorrelationReport) -> Result<()> {
    let title = format!("multivariate correlation, {}", rep.metric_name);
    fs::write(path, svg::heatmap(&title, &rep.multivariate, rep.len())).with_context(|| format!("writing {}", path.display()))
}

fn write_front_rows(w: &mut csv::Writer<fs::File>, kind: &str, points: &[FrontPoint]) -> Result<()> {
    for p in points {
        w.write_record([kind.to_string(), p.config.to_bitstring(), fmt_f64(p.ppa), fmt_f64(p.behav)])?;
    }
    Ok(())
}

/// Writes `fronts_{method}_{seed}.csv`, `hv_trajectory.csv`, `runs.csv`,
/// `report.json` and front scatter plots into `dir`. Returns the paths.
pub fn write_experiment(dir: &Path, report: &ExperimentReport, labels: (&str, &str)) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut written = Vec::new();
    for r in &report.runs {
        let path = dir.join(format!("fronts_{}_{}.csv", r.method.as_str(), r.seed));
        let mut w = csv_writer(&path)?;
        w.write_record(["front", "config", "ppa", "behav"])?;
        write_front_rows(&mut w, "ppf", &r.ppf.points)?;
        write_front_rows(&mut w, "vpf", &r.vpf.points)?;
        w.flush()?;
        written.push(path);
    }
    let path = dir.join("hv_trajectory.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["method", "seed", "evals", "hv"])?;
    for r in &report.runs {
        for &(evals, hv) in &r.trajectory {
            w.write_record([r.method.as_str().to_string(), r.seed.to_string(), evals.to_string(), fmt_f64(hv)])?;
        }
    }
    w.flush()?;
    written.push(path);

    let path = dir.join("runs.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["method", "seed", "ppf_points", "vpf_points", "ppf_hv", "vpf_hv"])?;
    for r in &report.runs {
        w.write_record([
            r.method.as_str().to_string(),
            r.seed.to_string(),
            r.ppf.points.len().to_string(),
            r.vpf.points.len().to_string(),
            fmt_f64(r.ppf_hv),
            fmt_f64(r.vpf_hv),
        ])?;
    }
    w.flush()?;
    written.push(path);

    let path = dir.join("report.json");
    write_json(&path, report)?;
    written.push(path);

    for (name, vpf) in [("ppf", false), ("vpf", true)] {
        let methods: Vec<Method> = report.settings.methods.clone();
        let series: Vec<Series<'_>> = methods
            .iter()
            .enumerate()
            .map(|(k, m)| Series {
                label: m.as_str(),
                color: PALETTE[k % PALETTE.len()],
                points: report
                    .runs
                    .iter()
                    .filter(|r| r.method == *m)
                    .flat_map(|r| if vpf { &r.vpf.points } else { &r.ppf.points })
                    .map(|p| (p.ppa, p.behav))
                    .collect(),
            })
            .collect();
        let title = format!("{} fronts, const_sf = {}", name.to_uppercase(), report.settings.const_sf);
        let path = dir.join(format!("fronts_{name}.svg"));
        fs::write(&path, svg::scatter(&title, labels.0, labels.1, &series)).with_context(|| format!("writing {}", path.display()))?;
        written.push(path);
    }
    Ok(written)
}
