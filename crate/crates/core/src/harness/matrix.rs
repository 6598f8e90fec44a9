use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use super::run::{run, CsvRow};
use super::scenario::{ProtocolKind, Scenario};
use crate::mobility::Area;

/// Built-in desk-scale sweeps. Areas shrink with the node count so density
/// stays at 50 nodes per km².
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    Mobility,
    Scalability,
    Traffic,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Mobility, Preset::Scalability, Preset::Traffic];

    pub fn as_str(self) -> &'static str {
        match self {
            Preset::Mobility => "mobility",
            Preset::Scalability => "scalability",
            Preset::Traffic => "traffic",
        }
    }

    /// One scenario per cell, seed left at 0.
    pub fn cells(self) -> Vec<Scenario> {
        let mut out = Vec::new();
        for protocol in ProtocolKind::ALL {
            match self {
                Preset::Mobility => {
                    for speed in [2.0, 30.0] {
                        for pause in [0.0, 75.0, 150.0, 300.0] {
                            out.push(Scenario {
                                speed_mps: speed,
                                pause_s: pause,
                                ..desk(protocol, 25)
                            });
                        }
                    }
                }
                Preset::Scalability => {
                    for nodes in [10, 25, 40] {
                        out.push(desk(protocol, nodes));
                    }
                }
                Preset::Traffic => {
                    for pps in [2.0, 8.0, 32.0] {
                        out.push(Scenario {
                            traffic_pps: pps,
                            ..desk(protocol, 25)
                        });
                    }
                }
            }
        }
        out
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| format!("unknown preset `{s}`"))
    }
}

pub fn density_area(nodes: usize) -> Area {
    let side = (nodes as f64 / 50.0).sqrt() * 1000.0;
    Area::new(side.round(), side.round())
}

fn desk(protocol: ProtocolKind, nodes: usize) -> Scenario {
    Scenario {
        protocol,
        nodes,
        area: density_area(nodes),
        speed_mps: 15.0,
        pause_s: 2.0,
        traffic_pps: 4.0,
        flows: 10.min(nodes / 2),
        duration_s: 300.0,
        seed: 0,
        ..Scenario::default()
    }
}

/// A set of cells sharing a label that prefixes every `scenario_id`.
#[derive(Clone, Debug)]
pub struct Sweep {
    pub label: String,
    pub cells: Vec<Scenario>,
}

impl Sweep {
    pub fn preset(p: Preset) -> Self {
        Sweep {
            label: p.as_str().to_string(),
            cells: p.cells(),
        }
    }

    /// Every protocol on the given scenario.
    pub fn from_scenario(label: &str, base: &Scenario) -> Self {
        Sweep {
            label: label.to_string(),
            cells: ProtocolKind::ALL
                .into_iter()
                .map(|protocol| Scenario {
                    protocol,
                    ..base.clone()
                })
                .collect(),
        }
    }

    /// Cell × seed runs, seeds `1..=seeds`.
    pub fn runs(&self, seeds: u64) -> Vec<Scenario> {
        self.cells
            .iter()
            .flat_map(|c| (1..=seeds).map(move |seed| Scenario { seed, ..c.clone() }))
            .collect()
    }
}

/// Runs every scenario in parallel; rows come back in input order.
pub fn run_all(label: &str, runs: &[Scenario]) -> io::Result<Vec<CsvRow>> {
    runs.par_iter()
        .map(|sc| {
            let mut row = run(sc)?.row;
            row.scenario_id = format!("{label}/{}", row.scenario_id);
            Ok(row)
        })
        .collect()
}

pub fn run_sweep(sweep: &Sweep, seeds: u64) -> io::Result<Vec<CsvRow>> {
    run_all(&sweep.label, &sweep.runs(seeds))
}

/// Everything in a `scenario_id` before the first `/`.
pub fn preset_of(row: &CsvRow) -> &str {
    row.scenario_id.split_once('/').map_or("", |(p, _)| p)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (0 for fewer than two values).
    pub sd: f64,
}

impl Summary {
    pub fn of<I: IntoIterator<Item = f64>>(values: I) -> Self {
        let v: Vec<f64> = values.into_iter().collect();
        let n = v.len();
        if n == 0 {
            return Summary::default();
        }
        let mean = v.iter().sum::<f64>() / n as f64;
        let sd = if n < 2 {
            0.0
        } else {
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        Summary { n, mean, sd }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Metric {
    Throughput,
    E2ed,
    Nrl,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Throughput => "throughput",
            Metric::E2ed => "E2ED",
            Metric::Nrl => "NRL",
        }
    }

    pub fn of(self, row: &CsvRow) -> Option<f64> {
        match self {
            Metric::Throughput => Some(row.throughput_bps),
            Metric::E2ed => row.avg_e2ed_s,
            Metric::Nrl => row.nrl,
        }
    }
}

/// Per-cell mean and standard deviation of the headline metrics.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellRow {
    pub cell_id: String,
    pub protocol: String,
    pub nodes: usize,
    pub speed_mps: f64,
    pub pause_s: f64,
    pub traffic_pps: f64,
    pub runs: usize,
    pub throughput_mean: f64,
    pub throughput_sd: f64,
    pub e2ed_mean: Option<f64>,
    pub e2ed_sd: Option<f64>,
    pub nrl_mean: Option<f64>,
    pub nrl_sd: Option<f64>,
    pub data_recv_mean: f64,
}

pub fn cell_id(row: &CsvRow) -> String {
    format!(
        "{}/{}-n{}-v{}-p{}-r{}",
        preset_of(row),
        row.protocol,
        row.nodes,
        row.speed_mps,
        row.pause_s,
        row.traffic_pps
    )
}

/// Groups rows by cell. Output order follows cell ids.
pub fn aggregate(rows: &[CsvRow]) -> Vec<CellRow> {
    let mut cells: BTreeMap<String, Vec<&CsvRow>> = BTreeMap::new();
    for r in rows {
        cells.entry(cell_id(r)).or_default().push(r);
    }
    cells
        .into_iter()
        .map(|(id, rs)| {
            let first = rs[0];
            let summary = |m: Metric| Summary::of(rs.iter().filter_map(|r| m.of(r)));
            let opt = |s: Summary| (s.n > 0).then_some(s);
            let thr = summary(Metric::Throughput);
            let e2ed = opt(summary(Metric::E2ed));
            let nrl = opt(summary(Metric::Nrl));
            CellRow {
                cell_id: id,
                protocol: first.protocol.clone(),
                nodes: first.nodes,
                speed_mps: first.speed_mps,
                pause_s: first.pause_s,
                traffic_pps: first.traffic_pps,
                runs: rs.len(),
                throughput_mean: thr.mean,
                throughput_sd: thr.sd,
                e2ed_mean: e2ed.map(|s| s.mean),
                e2ed_sd: e2ed.map(|s| s.sd),
                nrl_mean: nrl.map(|s| s.mean),
                nrl_sd: nrl.map(|s| s.sd),
                data_recv_mean: Summary::of(rs.iter().map(|r| r.data_recv as f64)).mean,
            }
        })
        .collect()
}

pub fn write_cells<W: Write>(out: W, cells: &[CellRow]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for c in cells {
        w.serialize(c)?;
    }
    w.flush()?;
    Ok(())
}
