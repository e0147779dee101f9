// SPDX-License-Identifier: Apache-2.0

//! Binary kernel assets and their deterministic generators.
//!
//! Layout: magic `AXOA`, format version (u8), kind (u8), payload length
//! (u32 LE), payload, then the SHA-256 digest of every preceding byte.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{bail, Result};

pub const MAGIC: &[u8; 4] = b"AXOA";
pub const FORMAT_VERSION: u8 = 1;

pub const FIR_SAMPLES: usize = 2048;
pub const FIR_TAPS: [i8; 9] = [3, 8, 15, 21, 24, 21, 15, 8, 3];
pub const GEMV_CLASSES: usize = 10;
pub const GEMV_FEATURES: usize = 64;
pub const GEMV_SAMPLES: usize = 200;
pub const IMAGE_SIDE: usize = 64;
/// 5x5 binomial kernel, entries sum to 256.
pub const GAUSS_ROW: [i8; 5] = [1, 4, 6, 4, 1];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum AppKind {
    FirPeak,
    GemvClassify,
    Conv2dPsnr,
}

impl AppKind {
    pub const ALL: [AppKind; 3] = [AppKind::FirPeak, AppKind::GemvClassify, AppKind::Conv2dPsnr];

    pub fn as_str(&self) -> &'static str {
        match self {
            AppKind::FirPeak => "fir_peak",
            AppKind::GemvClassify => "gemv_classify",
            AppKind::Conv2dPsnr => "conv2d_psnr",
        }
    }

    fn code(&self) -> u8 {
        match self {
            AppKind::FirPeak => 1,
            AppKind::GemvClassify => 2,
            AppKind::Conv2dPsnr => 3,
        }
    }

    fn seed(&self) -> u64 {
        0xA70A_0000 + self.code() as u64
    }
}

impl core::str::FromStr for AppKind {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        AppKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| crate::Error::Validation(alloc::format!("unknown application kernel {s:?}")))
    }
}

/// Bundled asset bytes.
pub fn bundled(kind: AppKind) -> &'static [u8] {
    match kind {
        AppKind::FirPeak => include_bytes!("../../assets/fir_peak.axa"),
        AppKind::GemvClassify => include_bytes!("../../assets/gemv_classify.axa"),
        AppKind::Conv2dPsnr => include_bytes!("../../assets/conv2d_psnr.axa"),
    }
}

fn wrap(kind: AppKind, payload: Vec<u8>) -> Vec<u8> {
    let mut out = Vec::with_capacity(payload.len() + 42);
    out.extend_from_slice(MAGIC);
    out.push(FORMAT_VERSION);
    out.push(kind.code());
    out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
    out.extend_from_slice(&payload);
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    out
}

/// Checks framing and checksum, returning the payload.
pub fn unwrap(kind: AppKind, bytes: &[u8]) -> Result<&[u8]> {
    if bytes.len() < 42 || &bytes[..4] != MAGIC {
        bail!(Validation, "not a kernel asset");
    }
    if bytes[4] != FORMAT_VERSION {
        bail!(Validation, "asset format version {} unsupported", bytes[4]);
    }
    if bytes[5] != kind.code() {
        bail!(Validation, "asset holds kernel {} not {}", bytes[5], kind.as_str());
    }
    let len = u32::from_le_bytes([bytes[6], bytes[7], bytes[8], bytes[9]]) as usize;
    if bytes.len() != 10 + len + 32 {
        bail!(Validation, "asset length mismatch");
    }
    let digest = Sha256::digest(&bytes[..10 + len]);
    if digest.as_slice() != &bytes[10 + len..] {
        bail!(Validation, "asset checksum mismatch");
    }
    Ok(&bytes[10..10 + len])
}

fn clamp_i8(v: i32) -> u8 {
    v.clamp(-128, 127) as i8 as u8
}

/// Quasi-periodic ECG-like trace: beats every 140..200 samples, each a sharp
/// QRS spike flanked by small P and T bumps, on a slow baseline wander with
/// uniform noise.
fn fir_payload(rng: &mut ChaCha8Rng) -> Vec<u8> {
    let n = FIR_SAMPLES;
    let mut signal = alloc::vec![0.0f64; n];
    let bump = |sig: &mut [f64], centre: i64, half: i64, amp: f64| {
        for k in -half..=half {
            let i = centre + k;
            if (0..n as i64).contains(&i) {
                sig[i as usize] += amp * (1.0 - libm::fabs(k as f64) / (half as f64 + 1.0));
            }
        }
    };
    let mut t = 60 + rng.random_range(0..40) as i64;
    while t < n as i64 - 20 {
        let amp = 90.0 + rng.random_range(0..21) as f64;
        bump(&mut signal, t - 30, 8, 12.0);
        bump(&mut signal, t, 4, amp);
        bump(&mut signal, t + 45, 12, 18.0);
        t += 140 + rng.random_range(0..61) as i64;
    }
    let mut payload = Vec::with_capacity(n + 16);
    payload.extend_from_slice(&(n as u32).to_le_bytes());
    payload.push(FIR_TAPS.len() as u8);
    payload.extend(FIR_TAPS.iter().map(|&c| c as u8));
    for (i, s) in signal.iter().enumerate() {
        let wander = 6.0 * libm::sin(i as f64 * 0.011);
        let noise = rng.random_range(-6..=6) as f64;
        payload.push(clamp_i8(libm::round(s + wander + noise - 10.0) as i32));
    }
    payload
}

/// Ten class prototypes used as the weight rows; inputs are half-scale
/// prototypes plus uniform noise, classes assigned round-robin.
fn gemv_payload(rng: &mut ChaCha8Rng) -> Vec<u8> {
    let weights: Vec<i8> = (0..GEMV_CLASSES * GEMV_FEATURES).map(|_| rng.random_range(-64..=63)).collect();
    let mut payload = Vec::new();
    payload.push(GEMV_CLASSES as u8);
    payload.push(GEMV_FEATURES as u8);
    payload.extend_from_slice(&(GEMV_SAMPLES as u16).to_le_bytes());
    payload.extend(weights.iter().map(|&w| w as u8));
    for s in 0..GEMV_SAMPLES {
        let class = s % GEMV_CLASSES;
        for f in 0..GEMV_FEATURES {
            let v = weights[class * GEMV_FEATURES + f] as i32 / 2 + rng.random_range(-48..=48);
            payload.push(clamp_i8(v));
        }
    }
    payload
}

/// Clean synthetic scene (gradient, discs, a bar) and a noisy copy, pixels
/// in 0..=127.
fn conv_payload(rng: &mut ChaCha8Rng) -> Vec<u8> {
    let side = IMAGE_SIDE;
    let mut clean = Vec::with_capacity(side * side);
    for y in 0..side {
        for x in 0..side {
            let (fx, fy) = (x as f64, y as f64);
            let mut v = 20.0 + 0.6 * fx + 0.3 * fy;
            if (fx - 20.0) * (fx - 20.0) + (fy - 22.0) * (fy - 22.0) < 144.0 {
                v += 50.0;
            }
            if (fx - 46.0) * (fx - 46.0) + (fy - 44.0) * (fy - 44.0) < 64.0 {
                v -= 15.0;
            }
            if (30..36).contains(&x) {
                v += 25.0;
            }
            clean.push(libm::round(v).clamp(0.0, 127.0) as u8);
        }
    }
    let noisy: Vec<u8> = clean.iter().map(|&p| (p as i32 + rng.random_range(-20..=20)).clamp(0, 127) as u8).collect();
    let mut payload = Vec::new();
    payload.extend_from_slice(&(side as u16).to_le_bytes());
    payload.extend_from_slice(&(side as u16).to_le_bytes());
    payload.push(GAUSS_ROW.len() as u8);
    for &a in &GAUSS_ROW {
        for &b in &GAUSS_ROW {
            payload.push((a * b) as u8);
        }
    }
    payload.extend_from_slice(&clean);
    payload.extend_from_slice(&noisy);
    payload
}

/// Regenerates the asset bytes of `kind`.
pub fn generate(kind: AppKind) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(kind.seed());
    let payload = match kind {
        AppKind::FirPeak => fir_payload(&mut rng),
        AppKind::GemvClassify => gemv_payload(&mut rng),
        AppKind::Conv2dPsnr => conv_payload(&mut rng),
    };
    wrap(kind, payload)
}
