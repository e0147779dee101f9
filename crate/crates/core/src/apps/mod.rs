// SPDX-License-Identifier: Apache-2.0

//! Application kernels driven by an 8-bit signed multiplier.
//!
//! Every multiplication takes the data operand (sample, feature, pixel) as
//! `a` and the coefficient or weight as `b`. Products accumulate in `i32`.
//!
//! * `fir_peak`: 9-tap low-pass FIR over an ECG-like trace followed by peak
//!   detection. Error is `(missed + spurious) / reference peaks`.
//! * `gemv_classify`: 10x64 linear layer over 200 feature vectors. Error is
//!   the fraction of samples whose argmax (ties to the lowest class) differs
//!   from the exact one.
//! * `conv2d_psnr`: 5x5 binomial smoothing of a noisy 64x64 image with
//!   `(acc + 128) >> 8` rounding and edge clamping. Error is the PSNR of the
//!   exact result against the clean image minus that of the approximate one.

pub mod assets;

use alloc::vec;
use alloc::vec::Vec;

pub use assets::AppKind;

use crate::charac::{ppa_metrics, BehavMetrics, Characterizer, Metric, PpaMetrics, ToggleModel};
use crate::config::Config;
use crate::dataset::Dataset;
use crate::dse::{Constraints, Evaluation, Fitness};
use crate::error::{bail, Result};
use crate::netlist::{product_table, Evaluator, Netlist, ProductTable};

/// Samples skipped after an accepted peak.
pub const REFRACTORY: usize = 50;
/// Largest distance between matched reference and detected peaks.
pub const PEAK_TOLERANCE: usize = 3;
/// PSNR reported for identical images.
pub const PSNR_CAP: f64 = 100.0;
const PIXEL_PEAK: f64 = 127.0;

/// Signed 8-bit multiplication.
pub trait Multiplier {
    fn mul(&self, a: i8, b: i8) -> i32;
}

/// Exact arithmetic.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactMultiplier;

impl Multiplier for ExactMultiplier {
    fn mul(&self, a: i8, b: i8) -> i32 {
        a as i32 * b as i32
    }
}

impl Multiplier for ProductTable {
    fn mul(&self, a: i8, b: i8) -> i32 {
        self.mul_i8(a, b) as i32
    }
}

/// Evaluates the netlist for every product instead of using a table.
#[derive(Debug)]
pub struct DirectMultiplier<'a> {
    evaluator: Evaluator<'a>,
}

impl<'a> DirectMultiplier<'a> {
    pub fn new(netlist: &'a Netlist, config: &Config) -> Result<Self> {
        check_operator(netlist.widths(), netlist.signed())?;
        Ok(Self { evaluator: Evaluator::new(netlist, config)? })
    }
}

impl Multiplier for DirectMultiplier<'_> {
    fn mul(&self, a: i8, b: i8) -> i32 {
        self.evaluator.evaluate(a as i64, b as i64).expect("8-bit operands are in range") as i32
    }
}

fn check_operator(widths: (u32, u32), signed: bool) -> Result<()> {
    if widths != (8, 8) || !signed {
        bail!(Domain, "kernels need a signed 8x8 multiplier, got {}x{} {}", widths.0, widths.1, if signed { "signed" } else { "unsigned" });
    }
    Ok(())
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.at + n > self.bytes.len() {
            bail!(Validation, "asset payload truncated");
        }
        let s = &self.bytes[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        let b = self.take(2)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn i8s(&mut self, n: usize) -> Result<Vec<i8>> {
        Ok(self.take(n)?.iter().map(|&b| b as i8).collect())
    }

    fn finish(&self) -> Result<()> {
        if self.at != self.bytes.len() {
            bail!(Validation, "trailing bytes in asset payload");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FirPeak {
    pub taps: Vec<i8>,
    pub signal: Vec<i8>,
    /// Half the maximum of the exact filter output.
    pub threshold: i32,
    /// Peaks found on the exact filter output.
    pub reference: Vec<usize>,
}

impl FirPeak {
    pub fn filter(&self, m: &dyn Multiplier) -> Vec<i32> {
        (0..self.signal.len())
            .map(|n| {
                let mut acc = 0i32;
                for (k, &h) in self.taps.iter().enumerate().take(n + 1) {
                    acc = acc.wrapping_add(m.mul(self.signal[n - k], h));
                }
                acc
            })
            .collect()
    }

    pub fn detect(&self, y: &[i32]) -> Vec<usize> {
        let mut peaks = Vec::new();
        let mut i = 1;
        while i + 1 < y.len() {
            if y[i] >= self.threshold && y[i] > y[i - 1] && y[i] >= y[i + 1] {
                peaks.push(i);
                i += REFRACTORY;
            } else {
                i += 1;
            }
        }
        peaks
    }

    pub fn error(&self, m: &dyn Multiplier) -> f64 {
        let found = self.detect(&self.filter(m));
        let mut used = vec![false; found.len()];
        let mut matched = 0;
        for &r in &self.reference {
            if let Some(k) = (0..found.len()).find(|&k| !used[k] && found[k].abs_diff(r) <= PEAK_TOLERANCE) {
                used[k] = true;
                matched += 1;
            }
        }
        let missed = self.reference.len() - matched;
        let spurious = found.len() - matched;
        (missed + spurious) as f64 / self.reference.len().max(1) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GemvClassify {
    pub classes: usize,
    pub features: usize,
    /// Row-major `classes x features`.
    pub weights: Vec<i8>,
    /// Row-major `samples x features`.
    pub inputs: Vec<i8>,
    /// Exact argmax per sample.
    pub reference: Vec<usize>,
}

impl GemvClassify {
    pub fn samples(&self) -> usize {
        self.inputs.len() / self.features
    }

    pub fn scores(&self, sample: usize, m: &dyn Multiplier) -> Vec<i32> {
        let x = &self.inputs[sample * self.features..(sample + 1) * self.features];
        (0..self.classes)
            .map(|c| {
                let w = &self.weights[c * self.features..(c + 1) * self.features];
                x.iter().zip(w).fold(0i32, |acc, (&a, &b)| acc.wrapping_add(m.mul(a, b)))
            })
            .collect()
    }

    pub fn classify(&self, m: &dyn Multiplier) -> Vec<usize> {
        (0..self.samples()).map(|s| argmax(&self.scores(s, m))).collect()
    }

    pub fn error(&self, m: &dyn Multiplier) -> f64 {
        let got = self.classify(m);
        let wrong = got.iter().zip(&self.reference).filter(|(a, b)| a != b).count();
        wrong as f64 / self.samples() as f64
    }
}

/// Index of the largest value, lowest index on ties.
pub fn argmax(values: &[i32]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct Conv2dPsnr {
    pub side: usize,
    pub kernel_size: usize,
    pub kernel: Vec<i8>,
    pub clean: Vec<u8>,
    pub noisy: Vec<u8>,
    /// PSNR of the exactly smoothed image against the clean one.
    pub reference_psnr: f64,
}

impl Conv2dPsnr {
    pub fn smooth(&self, m: &dyn Multiplier) -> Vec<u8> {
        let side = self.side as i64;
        let k = self.kernel_size as i64;
        let half = k / 2;
        let mut out = Vec::with_capacity(self.noisy.len());
        for y in 0..side {
            for x in 0..side {
                let mut acc = 0i32;
                for ky in 0..k {
                    for kx in 0..k {
                        let sy = (y + ky - half).clamp(0, side - 1);
                        let sx = (x + kx - half).clamp(0, side - 1);
                        let p = self.noisy[(sy * side + sx) as usize] as i8;
                        acc = acc.wrapping_add(m.mul(p, self.kernel[(ky * k + kx) as usize]));
                    }
                }
                out.push((acc.wrapping_add(128) >> 8).clamp(0, 127) as u8);
            }
        }
        out
    }

    pub fn error(&self, m: &dyn Multiplier) -> f64 {
        self.reference_psnr - psnr(&self.clean, &self.smooth(m))
    }
}

/// PSNR with peak 127, capped at [`PSNR_CAP`].
pub fn psnr(a: &[u8], b: &[u8]) -> f64 {
    let se: u64 = a.iter().zip(b).map(|(&x, &y)| (x as i64 - y as i64).pow(2) as u64).sum();
    if se == 0 {
        return PSNR_CAP;
    }
    let mse = se as f64 / a.len() as f64;
    (10.0 * libm::log10(PIXEL_PEAK * PIXEL_PEAK / mse)).min(PSNR_CAP)
}

#[derive(Debug, Clone, PartialEq)]
pub enum AppKernel {
    FirPeak(FirPeak),
    GemvClassify(GemvClassify),
    Conv2dPsnr(Conv2dPsnr),
}

impl AppKernel {
    /// Kernel backed by the bundled asset.
    pub fn load(kind: AppKind) -> Result<Self> {
        Self::from_asset(kind, assets::bundled(kind))
    }

    pub fn from_asset(kind: AppKind, bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes: assets::unwrap(kind, bytes)?, at: 0 };
        let kernel = match kind {
            AppKind::FirPeak => {
                let n = r.u32()? as usize;
                let t = r.u8()? as usize;
                let taps = r.i8s(t)?;
                let signal = r.i8s(n)?;
                let mut k = FirPeak { taps, signal, threshold: 0, reference: Vec::new() };
                let y = k.filter(&ExactMultiplier);
                k.threshold = y.iter().copied().max().unwrap_or(0) / 2;
                k.reference = k.detect(&y);
                if k.reference.is_empty() {
                    bail!(Validation, "signal has no reference peaks");
                }
                AppKernel::FirPeak(k)
            }
            AppKind::GemvClassify => {
                let classes = r.u8()? as usize;
                let features = r.u8()? as usize;
                let samples = r.u16()? as usize;
                let weights = r.i8s(classes * features)?;
                let inputs = r.i8s(samples * features)?;
                let mut k = GemvClassify { classes, features, weights, inputs, reference: Vec::new() };
                k.reference = k.classify(&ExactMultiplier);
                AppKernel::GemvClassify(k)
            }
            AppKind::Conv2dPsnr => {
                let w = r.u16()? as usize;
                let h = r.u16()? as usize;
                if w != h {
                    bail!(Validation, "image must be square");
                }
                let ks = r.u8()? as usize;
                let kernel = r.i8s(ks * ks)?;
                let clean = r.take(w * h)?.to_vec();
                let noisy = r.take(w * h)?.to_vec();
                let mut k = Conv2dPsnr { side: w, kernel_size: ks, kernel, clean, noisy, reference_psnr: 0.0 };
                k.reference_psnr = psnr(&k.clean, &k.smooth(&ExactMultiplier));
                AppKernel::Conv2dPsnr(k)
            }
        };
        r.finish()?;
        Ok(kernel)
    }

    pub fn kind(&self) -> AppKind {
        match self {
            AppKernel::FirPeak(_) => AppKind::FirPeak,
            AppKernel::GemvClassify(_) => AppKind::GemvClassify,
            AppKernel::Conv2dPsnr(_) => AppKind::Conv2dPsnr,
        }
    }

    /// Application error of `m` against the exact reference.
    pub fn behav(&self, m: &dyn Multiplier) -> f64 {
        match self {
            AppKernel::FirPeak(k) => k.error(m),
            AppKernel::GemvClassify(k) => k.error(m),
            AppKernel::Conv2dPsnr(k) => k.error(m),
        }
    }
}

/// Application error with products looked up in `table`.
pub fn app_behav(kernel: &AppKernel, table: &ProductTable) -> Result<f64> {
    check_operator(table.widths(), table.signed())?;
    Ok(kernel.behav(table))
}

/// Application error with every product evaluated on the netlist.
pub fn app_behav_direct(kernel: &AppKernel, netlist: &Netlist, config: &Config) -> Result<f64> {
    Ok(kernel.behav(&DirectMultiplier::new(netlist, config)?))
}

/// Operator-level PPA of the configuration.
pub fn app_ppa(config: &Config, netlist: &Netlist) -> Result<PpaMetrics> {
    ppa_metrics(netlist, config, ToggleModel::Gray)
}

/// Metric column carrying the application error in an application dataset.
pub const APP_METRIC: Metric = Metric::AvgAbsErr;

/// Application error of each configuration.
pub fn app_errors(kernel: &AppKernel, netlist: &Netlist, configs: &[Config]) -> Result<Vec<f64>> {
    configs.iter().map(|c| app_behav(kernel, &product_table(netlist, c)?)).collect()
}

/// Copy of `base` whose BEHAV columns are replaced by `errors[i]` in
/// [`APP_METRIC`] and zero elsewhere. PPA columns are kept.
pub fn app_dataset(base: &Dataset, kind: AppKind, errors: &[f64]) -> Result<Dataset> {
    if errors.len() != base.len() {
        bail!(Validation, "{} application errors for {} records", errors.len(), base.len());
    }
    let mut ds = base.clone();
    ds.netlist_name = alloc::format!("{}@{}", base.netlist_name, kind.as_str());
    for (r, &e) in ds.records.iter_mut().zip(errors) {
        r.behav = BehavMetrics { avg_abs_err: e, ..BehavMetrics::default() };
    }
    Ok(ds)
}

/// Fitness pairing operator PPA with application error.
#[derive(Debug, Clone)]
pub struct AppFitness<'a> {
    pub kernel: &'a AppKernel,
    pub netlist: &'a Netlist,
    pub characterizer: Characterizer<'a>,
    pub ppa_metric: Metric,
    pub constraints: Constraints,
}

impl<'a> AppFitness<'a> {
    pub fn new(kernel: &'a AppKernel, netlist: &'a Netlist, ppa_metric: Metric, constraints: Constraints) -> Result<Self> {
        check_operator(netlist.widths(), netlist.signed())?;
        Ok(Self { kernel, netlist, characterizer: Characterizer::new(netlist)?, ppa_metric, constraints })
    }

    /// Operator PPA and application error of one configuration.
    pub fn measure(&self, config: &Config) -> Result<(PpaMetrics, f64)> {
        let table = product_table(self.netlist, config)?;
        Ok((self.characterizer.ppa(config)?, self.kernel.behav(&table)))
    }
}

impl Fitness for AppFitness<'_> {
    fn evaluate(&self, config: &Config) -> Evaluation {
        let (ppa, behav) = self.measure(config).expect("configuration length checked by caller");
        let record =
            crate::charac::MetricsRecord { config: *config, behav: BehavMetrics::default(), ppa, source: crate::charac::Source::Simulated };
        self.constraints.evaluation(self.ppa_metric.of(&record), behav)
    }
}
