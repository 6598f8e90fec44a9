//! Standalone evaluation of the cost model over the expanding-ring schedule.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::scenario::{parse_pairs, parse_value, ConfigError};
use crate::analytics::{ce_rd, ce_rm_aodv, ce_rm_aodv_ll, ce_rm_dsr, ce_rm_dymo, ce_total, CostParams};
use crate::routing::ErsSchedule;

pub const PARAM_KEYS: [&str; 10] = [
    "d_avg",
    "rings",
    "n_llr",
    "n_rerr",
    "n_ps",
    "n_rn",
    "tau_route_in_use",
    "tau_h_interval",
    "lb_indicator",
    "pus_llr_indicator",
];

fn parse_flag(line: usize, key: &str, v: &str) -> Result<bool, ConfigError> {
    match v {
        "0" | "false" => Ok(false),
        "1" | "true" => Ok(true),
        _ => Err(ConfigError::BadValue {
            line,
            key: key.into(),
            value: v.into(),
            reason: "indicator must be 0 or 1".into(),
        }),
    }
}

/// Ring sizes assumed when none are given: `d_avg · ttl` nodes per ring.
pub fn default_rings(d_avg: f64, ers: &ErsSchedule) -> Vec<u64> {
    (0..ers.max_rings())
        .filter_map(|a| ers.next(a))
        .map(|(ttl, _)| (d_avg * f64::from(ttl)).round() as u64)
        .collect()
}

pub fn parse_params(text: &str) -> Result<CostParams, ConfigError> {
    let mut p = CostParams {
        d_avg: 4.0,
        ..CostParams::default()
    };
    let mut rings = None;
    for (line, key, value) in parse_pairs(text)? {
        let v = value.as_str();
        match key.as_str() {
            "d_avg" => p.d_avg = parse_value(line, &key, v)?,
            "rings" => {
                rings = Some(
                    v.split(',')
                        .map(|s| parse_value(line, &key, s.trim()))
                        .collect::<Result<Vec<u64>, _>>()?,
                )
            }
            "n_llr" => p.n_llr = parse_value(line, &key, v)?,
            "n_rerr" => p.n_rerr = parse_value(line, &key, v)?,
            "n_ps" => p.n_ps = parse_value(line, &key, v)?,
            "n_rn" => p.n_rn = parse_value(line, &key, v)?,
            "tau_route_in_use" => p.tau_route_in_use = parse_value(line, &key, v)?,
            "tau_h_interval" => p.tau_h_interval = parse_value(line, &key, v)?,
            "lb_indicator" => p.lb_indicator = parse_flag(line, &key, v)?,
            "pus_llr_indicator" => p.pus_llr_indicator = parse_flag(line, &key, v)?,
            _ => return Err(ConfigError::UnknownKey { line, key }),
        }
    }
    p.rings = rings.unwrap_or_else(|| default_rings(p.d_avg, &ErsSchedule::default()));
    if p.rings.is_empty() {
        return Err(ConfigError::Invalid {
            field: "rings",
            reason: "must list at least one ring".into(),
        });
    }
    p.validate().map_err(|e| ConfigError::Invalid {
        field: "params",
        reason: e.to_string(),
    })?;
    Ok(p)
}

pub fn load_params(path: &Path) -> Result<CostParams, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_params(&text)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    /// Rings tried so far.
    pub m: usize,
    pub ttl: u32,
    pub ring_nodes: u64,
    pub d_avg: f64,
    pub ce_rd: f64,
    /// Time spent waiting on the first `m` rings.
    pub waiting_time_s: f64,
    pub ce_rm_aodv: f64,
    pub ce_rm_aodv_ll: f64,
    pub ce_rm_dsr: f64,
    pub ce_rm_dymo: f64,
    pub ce_total_aodv: f64,
}

/// One row per prefix of the ring list. TTLs past the schedule repeat the last one.
pub fn sweep(p: &CostParams, ers: &ErsSchedule) -> Vec<SweepRow> {
    let rm_aodv = ce_rm_aodv(p).expect("validated params");
    let rm_dymo = ce_rm_dymo(p).expect("validated params");
    let mut waited = 0.0;
    let mut last_ttl = ers.ttl_start;
    (1..=p.m())
        .map(|m| {
            let ttl = ers.next(m as u32 - 1).map_or(last_ttl, |(t, _)| t);
            last_ttl = ttl;
            waited += ers.wait_for(ttl).as_secs_f64();
            let rd = ce_rd(p.d_avg, &p.rings[..m]).expect("nonempty prefix");
            SweepRow {
                m,
                ttl,
                ring_nodes: p.rings[m - 1],
                d_avg: p.d_avg,
                ce_rd: rd,
                waiting_time_s: waited,
                ce_rm_aodv: rm_aodv,
                ce_rm_aodv_ll: ce_rm_aodv_ll(p),
                ce_rm_dsr: ce_rm_dsr(p.n_ps),
                ce_rm_dymo: rm_dymo,
                ce_total_aodv: ce_total(rd, rm_aodv),
            }
        })
        .collect()
}

pub fn write_sweep<W: Write>(out: W, rows: &[SweepRow]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
