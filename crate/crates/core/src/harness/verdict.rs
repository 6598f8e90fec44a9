use std::fmt;

use super::matrix::{preset_of, Metric, Summary};
use super::run::CsvRow;
use super::scenario::ProtocolKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Outcome {
    Pass,
    Inconclusive,
    Fail,
    /// No rows for one side of the comparison.
    NoData,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Pass => "PASS",
            Outcome::Inconclusive => "INCONCLUSIVE",
            Outcome::Fail => "FAIL",
            Outcome::NoData => "NO-DATA",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    AtLeast,
    AtMost,
}

/// Which rows a claim looks at.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Slice {
    /// Mobility preset rows at one speed and pause.
    Mobility { speed_mps: f64, pause_s: f64 },
    /// All rows of a preset pooled per protocol.
    Preset(&'static str),
}

impl Slice {
    fn matches(&self, row: &CsvRow) -> bool {
        match *self {
            Slice::Mobility { speed_mps, pause_s } => {
                preset_of(row) == "mobility" && row.speed_mps == speed_mps && row.pause_s == pause_s
            }
            Slice::Preset(p) => preset_of(row) == p,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Claim {
    pub id: u8,
    pub text: &'static str,
    pub metric: Metric,
    pub subject: ProtocolKind,
    pub direction: Direction,
    pub others: Vec<ProtocolKind>,
    pub slice: Slice,
}

pub fn claims() -> Vec<Claim> {
    use ProtocolKind::*;
    let fast = Slice::Mobility {
        speed_mps: 30.0,
        pause_s: 0.0,
    };
    let slow = Slice::Mobility {
        speed_mps: 2.0,
        pause_s: 0.0,
    };
    vec![
        Claim {
            id: 1,
            text: "AODV-LL throughput >= AODV at 30 m/s, pause 0",
            metric: Metric::Throughput,
            subject: AodvLl,
            direction: Direction::AtLeast,
            others: vec![Aodv],
            slice: fast,
        },
        Claim {
            id: 2,
            text: "DYMO NRL >= AODV and DSR at 30 m/s",
            metric: Metric::Nrl,
            subject: Dymo,
            direction: Direction::AtLeast,
            others: vec![Aodv, Dsr],
            slice: fast,
        },
        Claim {
            id: 3,
            text: "DSR NRL <= AODV and DYMO at 2 m/s",
            metric: Metric::Nrl,
            subject: Dsr,
            direction: Direction::AtMost,
            others: vec![Aodv, Dymo],
            slice: slow,
        },
        Claim {
            id: 4,
            text: "DSR-M NRL <= DSR at 30 m/s",
            metric: Metric::Nrl,
            subject: DsrM,
            direction: Direction::AtMost,
            others: vec![Dsr],
            slice: fast,
        },
        Claim {
            id: 5,
            text: "AODV E2ED >= DSR and DYMO across the scalability preset",
            metric: Metric::E2ed,
            subject: Aodv,
            direction: Direction::AtLeast,
            others: vec![Dsr, Dymo],
            slice: Slice::Preset("scalability"),
        },
    ]
}

#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub other: ProtocolKind,
    pub subject: Summary,
    pub against: Summary,
    /// Positive when the claimed ordering holds.
    pub margin: f64,
    pub pooled_sd: f64,
    pub outcome: Outcome,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClaimResult {
    pub claim: Claim,
    pub comparisons: Vec<Comparison>,
    pub outcome: Outcome,
}

impl fmt::Display for ClaimResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "claim {}: {} ->", self.claim.id, self.claim.text)?;
        for c in &self.comparisons {
            write!(
                f,
                " vs {}: {:.4} vs {:.4} margin {:+.4} (pooled sd {:.4});",
                c.other, c.subject.mean, c.against.mean, c.margin, c.pooled_sd
            )?;
        }
        write!(f, " {}", self.outcome.as_str())
    }
}

fn summarize(rows: &[CsvRow], claim: &Claim, proto: ProtocolKind) -> Summary {
    let name = proto.as_str();
    Summary::of(
        rows.iter()
            .filter(|r| r.protocol == name && claim.slice.matches(r))
            .filter_map(|r| claim.metric.of(r)),
    )
}

fn compare(subject: Summary, against: Summary, direction: Direction) -> (f64, f64, Outcome) {
    if subject.n == 0 || against.n == 0 {
        return (0.0, 0.0, Outcome::NoData);
    }
    let margin = match direction {
        Direction::AtLeast => subject.mean - against.mean,
        Direction::AtMost => against.mean - subject.mean,
    };
    let pooled = ((subject.sd.powi(2) + against.sd.powi(2)) / 2.0).sqrt();
    let outcome = if margin >= 0.0 {
        Outcome::Pass
    } else if -margin <= pooled {
        Outcome::Inconclusive
    } else {
        Outcome::Fail
    };
    (margin, pooled, outcome)
}

pub fn evaluate(claim: &Claim, rows: &[CsvRow]) -> ClaimResult {
    let subject = summarize(rows, claim, claim.subject);
    let comparisons: Vec<Comparison> = claim
        .others
        .iter()
        .map(|&other| {
            let against = summarize(rows, claim, other);
            let (margin, pooled_sd, outcome) = compare(subject, against, claim.direction);
            Comparison {
                other,
                subject,
                against,
                margin,
                pooled_sd,
                outcome,
            }
        })
        .collect();
    let outcome = comparisons.iter().map(|c| c.outcome).max().unwrap_or(Outcome::NoData);
    ClaimResult {
        claim: claim.clone(),
        comparisons,
        outcome,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteVerdict {
    pub results: Vec<ClaimResult>,
    pub applicable: usize,
    pub passed: usize,
    pub failed: usize,
}

impl SuiteVerdict {
    /// All but at most one applicable claim hold, and none is inverted beyond its noise.
    pub fn passes(&self) -> bool {
        self.applicable > 0 && self.failed == 0 && self.passed + 1 >= self.applicable
    }
}

pub fn verdict(rows: &[CsvRow]) -> SuiteVerdict {
    let results: Vec<ClaimResult> = claims().iter().map(|c| evaluate(c, rows)).collect();
    let count = |o: Outcome| results.iter().filter(|r| r.outcome == o).count();
    SuiteVerdict {
        applicable: results.len() - count(Outcome::NoData),
        passed: count(Outcome::Pass),
        failed: count(Outcome::Fail),
        results,
    }
}
