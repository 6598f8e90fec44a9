use std::fmt;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::mobility::Area;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ProtocolKind {
    Aodv,
    AodvLl,
    Dsr,
    DsrM,
    Dymo,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 5] = [
        ProtocolKind::Aodv,
        ProtocolKind::AodvLl,
        ProtocolKind::Dsr,
        ProtocolKind::DsrM,
        ProtocolKind::Dymo,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ProtocolKind::Aodv => "aodv",
            ProtocolKind::AodvLl => "aodv-ll",
            ProtocolKind::Dsr => "dsr",
            ProtocolKind::DsrM => "dsr-m",
            ProtocolKind::Dymo => "dymo",
        }
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProtocolKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ProtocolKind::ALL
            .into_iter()
            .find(|p| p.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown protocol `{s}` (expected aodv, aodv-ll, dsr, dsr-m or dymo)"))
    }
}

/// One experiment: topology, motion, traffic and protocol.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub protocol: ProtocolKind,
    pub nodes: usize,
    pub area: Area,
    pub speed_mps: f64,
    pub pause_s: f64,
    pub traffic_pps: f64,
    pub flows: usize,
    pub packet_bytes: u32,
    pub duration_s: f64,
    pub seed: u64,
    pub bandwidth_bps: u64,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            protocol: ProtocolKind::Aodv,
            nodes: 50,
            area: Area::new(1000.0, 1000.0),
            speed_mps: 30.0,
            pause_s: 0.0,
            traffic_pps: 4.0,
            flows: 10,
            packet_bytes: 512,
            duration_s: 300.0,
            seed: 1,
            bandwidth_bps: 2_000_000,
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, found `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: bad value `{value}` for `{key}`: {reason}")]
    BadValue {
        line: usize,
        key: String,
        value: String,
        reason: String,
    },
    #[error("invalid scenario: {field} {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub const SCENARIO_KEYS: [&str; 11] = [
    "protocol",
    "nodes",
    "area",
    "speed_mps",
    "pause_s",
    "traffic_pps",
    "flows",
    "packet_bytes",
    "duration_s",
    "seed",
    "bandwidth_bps",
];

/// Splits `key = value` lines, skipping blanks and `#` comments.
pub fn parse_pairs(text: &str) -> Result<Vec<(usize, String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let Some((k, v)) = body.split_once('=') else {
            return Err(ConfigError::Syntax {
                line,
                text: raw.trim().to_string(),
            });
        };
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || v.is_empty() {
            return Err(ConfigError::Syntax {
                line,
                text: raw.trim().to_string(),
            });
        }
        if out.iter().any(|(_, seen, _): &(usize, String, String)| seen == k) {
            return Err(ConfigError::DuplicateKey {
                line,
                key: k.to_string(),
            });
        }
        out.push((line, k.to_string(), v.to_string()));
    }
    Ok(out)
}

pub(crate) fn parse_value<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::BadValue {
        line,
        key: key.to_string(),
        value: value.to_string(),
        reason: e.to_string(),
    })
}

fn parse_area(line: usize, value: &str) -> Result<Area, ConfigError> {
    let bad = |reason: &str| ConfigError::BadValue {
        line,
        key: "area".into(),
        value: value.into(),
        reason: reason.into(),
    };
    let (w, h) = value
        .split_once(',')
        .or_else(|| value.split_once(['x', 'X']))
        .ok_or_else(|| bad("expected `width,height` or `WIDTHxHEIGHT`"))?;
    let w: f64 = w.trim().parse().map_err(|_| bad("width is not a number"))?;
    let h: f64 = h.trim().parse().map_err(|_| bad("height is not a number"))?;
    Ok(Area::new(w, h))
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut s = Scenario::default();
        for (line, key, value) in parse_pairs(text)? {
            let v = value.as_str();
            match key.as_str() {
                "protocol" => {
                    s.protocol = v.parse().map_err(|reason| ConfigError::BadValue {
                        line,
                        key: key.clone(),
                        value: value.clone(),
                        reason,
                    })?
                }
                "nodes" => s.nodes = parse_value(line, &key, v)?,
                "area" => s.area = parse_area(line, v)?,
                "speed_mps" => s.speed_mps = parse_value(line, &key, v)?,
                "pause_s" => s.pause_s = parse_value(line, &key, v)?,
                "traffic_pps" => s.traffic_pps = parse_value(line, &key, v)?,
                "flows" => s.flows = parse_value(line, &key, v)?,
                "packet_bytes" => s.packet_bytes = parse_value(line, &key, v)?,
                "duration_s" => s.duration_s = parse_value(line, &key, v)?,
                "seed" => s.seed = parse_value(line, &key, v)?,
                "bandwidth_bps" => s.bandwidth_bps = parse_value(line, &key, v)?,
                _ => return Err(ConfigError::UnknownKey { line, key }),
            }
        }
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |field, reason: &str| {
            Err(ConfigError::Invalid {
                field,
                reason: reason.to_string(),
            })
        };
        if self.nodes < 2 {
            return invalid("nodes", "must be at least 2");
        }
        if self.flows > self.nodes / 2 {
            return invalid("flows", "must not exceed nodes / 2");
        }
        if !(self.area.width > 0.0 && self.area.height > 0.0)
            || !self.area.width.is_finite()
            || !self.area.height.is_finite()
        {
            return invalid("area", "dimensions must be positive");
        }
        if !(self.speed_mps.is_finite() && self.speed_mps >= 0.0) {
            return invalid("speed_mps", "must be a non-negative number");
        }
        if !(self.pause_s.is_finite() && self.pause_s >= 0.0) {
            return invalid("pause_s", "must be a non-negative number");
        }
        if !(self.traffic_pps.is_finite() && self.traffic_pps > 0.0) {
            return invalid("traffic_pps", "must be positive");
        }
        if self.packet_bytes == 0 {
            return invalid("packet_bytes", "must be positive");
        }
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return invalid("duration_s", "must be positive");
        }
        if self.bandwidth_bps == 0 {
            return invalid("bandwidth_bps", "must be positive");
        }
        Ok(())
    }

    /// Stable identifier of the cell this run belongs to, seed included.
    pub fn id(&self) -> String {
        format!(
            "{}-n{}-v{}-p{}-r{}-s{}",
            self.protocol, self.nodes, self.speed_mps, self.pause_s, self.traffic_pps, self.seed
        )
    }

    pub fn to_config(&self) -> String {
        format!(
            "protocol = {}\nnodes = {}\narea = {},{}\nspeed_mps = {}\npause_s = {}\ntraffic_pps = {}\nflows = {}\npacket_bytes = {}\nduration_s = {}\nseed = {}\nbandwidth_bps = {}\n",
            self.protocol,
            self.nodes,
            self.area.width,
            self.area.height,
            self.speed_mps,
            self.pause_s,
            self.traffic_pps,
            self.flows,
            self.packet_bytes,
            self.duration_s,
            self.seed,
            self.bandwidth_bps
        )
    }
}
