// SPDX-License-Identifier: Apache-2.0

//! Netlist JSON, dataset CSV and generic JSON documents.

use std::collections::HashMap;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use anyhow::{Context, Result};
use axomap_core::charac::{BehavMetrics, MetricsRecord, PpaMetrics, Source};
use axomap_core::dataset::{validate_record, Dataset, Provenance, RecordWarning};
use axomap_core::netlist::{CarryCell, LutCell, Net, Netlist};
use axomap_core::{Config, Error};
use serde::{de::DeserializeOwned, Deserialize, Serialize};

pub const DATASET_HEADER: [&str; 11] =
    ["config", "avg_abs_err", "avg_abs_rel_err", "prob_err", "max_abs_err", "power", "cpd", "luts", "pdp", "pdplut", "source"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetlistDoc {
    pub name: String,
    pub widths: [u32; 2],
    pub signed: bool,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub luts: Vec<LutDoc>,
    pub carries: Vec<CarryDoc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LutDoc {
    pub id: usize,
    pub inputs: Vec<String>,
    pub init: String,
    pub init5: Option<String>,
    pub removable: bool,
}

/// `sum` and `cout` name the cell's outputs for use elsewhere in the file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CarryDoc {
    pub sel: String,
    pub din: String,
    pub cin: String,
    pub sum: String,
    pub cout: String,
}

/// LUT outputs are `lut{position}.o6` and `lut{position}.o5`; constants are
/// `const0` and `const1`.
fn net_name(nl: &Netlist, net: Net) -> String {
    match net {
        Net::Const(b) => format!("const{}", b as u8),
        Net::Input(i) => nl.inputs()[i].clone(),
        Net::Lut(i) => format!("lut{i}.o6"),
        Net::Lut5(i) => format!("lut{i}.o5"),
        Net::Sum(i) => format!("carry{i}.sum"),
        Net::CarryOut(i) => format!("carry{i}.cout"),
    }
}

fn hex(v: u64) -> String {
    format!("0x{v:016x}")
}

pub fn netlist_to_doc(nl: &Netlist) -> NetlistDoc {
    let (m, n) = nl.widths();
    NetlistDoc {
        name: nl.name().to_string(),
        widths: [m, n],
        signed: nl.signed(),
        inputs: nl.inputs().to_vec(),
        outputs: nl.outputs().iter().map(|&o| net_name(nl, o)).collect(),
        luts: nl
            .luts()
            .iter()
            .map(|l| LutDoc {
                id: l.id,
                inputs: l.inputs.iter().map(|&i| net_name(nl, i)).collect(),
                init: hex(l.init),
                init5: l.init5.map(hex),
                removable: l.removable,
            })
            .collect(),
        carries: nl
            .carries()
            .iter()
            .enumerate()
            .map(|(i, c)| CarryDoc {
                sel: net_name(nl, c.sel),
                din: net_name(nl, c.din),
                cin: net_name(nl, c.cin),
                sum: net_name(nl, Net::Sum(i)),
                cout: net_name(nl, Net::CarryOut(i)),
            })
            .collect(),
    }
}

fn parse_hex(s: &str) -> Result<u64, Error> {
    let digits = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")).unwrap_or(s);
    u64::from_str_radix(digits, 16).map_err(|e| Error::Config(format!("bad truth table {s:?}: {e}")))
}

pub fn netlist_from_doc(doc: &NetlistDoc) -> Result<Netlist, Error> {
    let mut names: HashMap<String, Net> = HashMap::new();
    let mut declare = |name: &str, net: Net| -> Result<(), Error> {
        if names.insert(name.to_string(), net).is_some() {
            return Err(Error::Config(format!("net name {name:?} declared twice")));
        }
        Ok(())
    };
    declare("const0", Net::Const(false))?;
    declare("const1", Net::Const(true))?;
    for (i, n) in doc.inputs.iter().enumerate() {
        declare(n, Net::Input(i))?;
    }
    for i in 0..doc.luts.len() {
        declare(&format!("lut{i}.o6"), Net::Lut(i))?;
        declare(&format!("lut{i}.o5"), Net::Lut5(i))?;
    }
    for (i, c) in doc.carries.iter().enumerate() {
        declare(&c.sum, Net::Sum(i))?;
        declare(&c.cout, Net::CarryOut(i))?;
    }
    let net = |name: &str| names.get(name).copied().ok_or_else(|| Error::Config(format!("unknown net {name:?}")));
    let luts = doc
        .luts
        .iter()
        .map(|l| {
            Ok(LutCell {
                id: l.id,
                inputs: l.inputs.iter().map(|n| net(n)).collect::<Result<_, Error>>()?,
                init: parse_hex(&l.init)?,
                init5: l.init5.as_deref().map(parse_hex).transpose()?,
                removable: l.removable,
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let carries = doc
        .carries
        .iter()
        .map(|c| Ok(CarryCell { sel: net(&c.sel)?, din: net(&c.din)?, cin: net(&c.cin)? }))
        .collect::<Result<Vec<_>, Error>>()?;
    let outputs = doc.outputs.iter().map(|n| net(n)).collect::<Result<Vec<_>, Error>>()?;
    Netlist::new(doc.name.clone(), (doc.widths[0], doc.widths[1]), doc.signed, doc.inputs.clone(), outputs, luts, carries)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn write_netlist(path: &Path, nl: &Netlist) -> Result<()> {
    write_json(path, &netlist_to_doc(nl))
}

pub fn read_netlist(path: &Path) -> Result<Netlist> {
    let doc: NetlistDoc = read_json(path)?;
    netlist_from_doc(&doc).with_context(|| format!("loading {}", path.display()))
}

/// Shortest text that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

pub fn write_dataset_csv<W: Write>(out: W, ds: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(DATASET_HEADER)?;
    for r in &ds.records {
        let b = &r.behav;
        let p = &r.ppa;
        let mut row = vec![r.config.to_bitstring()];
        row.extend([b.avg_abs_err, b.avg_abs_rel_err, b.prob_err, b.max_abs_err, p.power, p.cpd, p.luts, p.pdp, p.pdplut].map(fmt_f64));
        row.push(r.source.as_str().to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_dataset(path: &Path, ds: &Dataset) -> Result<()> {
    let f = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_dataset_csv(std::io::BufWriter::new(f), ds)
}

/// Reads a dataset CSV for a netlist with `removable_count` removable LUTs.
/// Hard record violations fail with the offending line; product mismatches
/// become warnings.
pub fn ingest_csv<R: Read>(input: R, netlist_name: &str, removable_count: usize) -> Result<Dataset, Error> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = rd.headers().map_err(|e| Error::Parse { line: 1, message: e.to_string() })?.clone();
    if header.iter().ne(DATASET_HEADER) {
        return Err(Error::Parse { line: 1, message: format!("expected header {}", DATASET_HEADER.join(",")) });
    }
    let mut records = Vec::new();
    let mut warnings = Vec::new();
    for row in rd.records() {
        let row = row.map_err(|e| Error::Parse { line: e.position().map_or(0, |p| p.line() as usize), message: e.to_string() })?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let fail = |message: String| Error::Parse { line, message };
        let config: Config = row[0].parse().map_err(|e: Error| fail(e.to_string()))?;
        let mut v = [0.0; 9];
        for (k, slot) in v.iter_mut().enumerate() {
            *slot = row[k + 1].trim().parse().map_err(|_| fail(format!("{}: not a number: {:?}", DATASET_HEADER[k + 1], &row[k + 1])))?;
        }
        let source: Source = row[10].parse().map_err(|e: Error| fail(e.to_string()))?;
        let record = MetricsRecord {
            config,
            behav: BehavMetrics { avg_abs_err: v[0], avg_abs_rel_err: v[1], prob_err: v[2], max_abs_err: v[3] },
            ppa: PpaMetrics { power: v[4], cpd: v[5], luts: v[6], pdp: v[7], pdplut: v[8] },
            source,
        };
        if let Some(message) = validate_record(&record, removable_count).map_err(|e| fail(e.to_string()))? {
            warnings.push(RecordWarning { record: records.len(), line, message });
        }
        records.push(record);
    }
    let mut ds = Dataset::new(netlist_name, removable_count, Provenance::Ingested, records)?;
    ds.warnings = warnings;
    Ok(ds)
}

pub fn read_dataset(path: &Path, netlist_name: &str, removable_count: usize) -> Result<Dataset> {
    let f = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let ds =
        ingest_csv(std::io::BufReader::new(f), netlist_name, removable_count).with_context(|| format!("ingesting {}", path.display()))?;
    for w in &ds.warnings {
        log::warn!("{}:{}: {}", path.display(), w.line, w.message);
    }
    Ok(ds)
}

/// Length of the configurations in a dataset CSV, from its first record.
pub fn dataset_config_len(path: &Path) -> Result<usize> {
    let mut rd = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let row = rd.records().next().with_context(|| format!("{} has no records", path.display()))??;
    Ok(row[0].len())
}
