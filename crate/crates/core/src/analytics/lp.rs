//! Throughput, delay and overhead objectives with their constraint checks,
//! evaluated over a finished trace in one-second units.

use std::fmt;

use super::AnalyticsError;
use crate::metrics::TraceStats;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ConstraintId {
    C1a,
    C1b,
    C1c,
    C1d,
    C1e,
    C2a,
    C2b,
    C3a,
    C3b,
}

impl ConstraintId {
    pub const ALL: [ConstraintId; 9] = [
        ConstraintId::C1a,
        ConstraintId::C1b,
        ConstraintId::C1c,
        ConstraintId::C1d,
        ConstraintId::C1e,
        ConstraintId::C2a,
        ConstraintId::C2b,
        ConstraintId::C3a,
        ConstraintId::C3b,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ConstraintId::C1a => "1.a",
            ConstraintId::C1b => "1.b",
            ConstraintId::C1c => "1.c",
            ConstraintId::C1d => "1.d",
            ConstraintId::C1e => "1.e",
            ConstraintId::C2a => "2.a",
            ConstraintId::C2b => "2.b",
            ConstraintId::C3a => "3.a",
            ConstraintId::C3b => "3.b",
        }
    }
}

impl fmt::Display for ConstraintId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Thresholds the constraints are checked against.
#[derive(Clone, Debug, PartialEq)]
pub struct LpParams {
    /// Critical delay in seconds.
    pub tau_cri: f64,
    /// Available channel bandwidth per node, bits/s.
    pub beta_avail: f64,
    /// Critical control bandwidth, bits/s.
    pub beta_cri: f64,
    /// Link-repair responses allowed per second; `None` uses the trace's peak link-change rate.
    pub lc_max: Option<u64>,
}

impl LpParams {
    pub fn for_bandwidth(bandwidth_bps: u64) -> Self {
        let beta_avail = bandwidth_bps as f64;
        LpParams {
            tau_cri: 30.0,
            beta_avail,
            beta_cri: beta_avail / 2.0,
            lc_max: None,
        }
    }
}

impl Default for LpParams {
    fn default() -> Self {
        Self::for_bandwidth(2_000_000)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Violation {
    pub id: ConstraintId,
    pub count: u64,
    /// Largest amount by which a sample exceeded its bound (0 without violations).
    pub worst_margin: f64,
}

/// Per-second event rates measured from a trace.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Rates {
    /// Data requests (originated packets) per second.
    pub alpha_tra: f64,
    /// Received data packets per second.
    pub alpha_rec: f64,
    /// Route discoveries per second.
    pub alpha_rd: f64,
    /// Data transmissions (all hops) per second.
    pub alpha_dt: f64,
    /// Local repairs per second.
    pub alpha_lr: f64,
    /// Discovery control packets per second.
    pub alpha_rd_ctrl: f64,
    /// Maintenance control packets per second.
    pub alpha_rm_ctrl: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpReport {
    /// Throughput objective with the `(1 − p_nr)` factor applied to received packets.
    pub t_avg: f64,
    /// Delivered bits over duration.
    pub t_avg_plain: f64,
    pub p_nr: f64,
    /// Mean discovery and repair durations, seconds.
    pub ct_rd: f64,
    pub ct_rm: f64,
    /// Discovery and maintenance control packet counts.
    pub ce_rd: u64,
    pub ce_rm: u64,
    pub violations: Vec<Violation>,
    pub params: LpParams,
    pub lc_max_used: u64,
    pub rates: Rates,
    pub p_s_rd: f64,
    pub p_s_rm: f64,
    /// Received packets per data request stream.
    pub rec_dr: Vec<u64>,
}

impl LpReport {
    pub fn violation(&self, id: ConstraintId) -> &Violation {
        self.violations
            .iter()
            .find(|v| v.id == id)
            .expect("every constraint is reported")
    }

    pub fn count(&self, id: ConstraintId) -> u64 {
        self.violation(id).count
    }
}

/// `Σ_dr (1 − p_nr) · Rec_dr · bits / T`.
pub fn throughput_objective(ts: &TraceStats, duration_s: f64) -> Result<f64, AnalyticsError> {
    if duration_s.is_nan() || duration_s <= 0.0 {
        return Err(AnalyticsError::Domain("duration must be positive"));
    }
    Ok((1.0 - ts.p_nr()) * ts.delivered_bits as f64 / duration_s)
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn mean_secs(us: &[u64]) -> f64 {
    if us.is_empty() {
        0.0
    } else {
        us.iter().sum::<u64>() as f64 / us.len() as f64 / 1e6
    }
}

fn check<I: IntoIterator<Item = f64>>(id: ConstraintId, samples: I, bound: f64, strict: bool) -> Violation {
    let mut v = Violation {
        id,
        count: 0,
        worst_margin: 0.0,
    };
    for x in samples {
        let over = if strict { x >= bound } else { x > bound };
        if over {
            v.count += 1;
            v.worst_margin = v.worst_margin.max(x - bound);
        }
    }
    v
}

/// Evaluates every constraint over the trace. Never aborts; violations are listed.
pub fn check_constraints(ts: &TraceStats, params: &LpParams) -> LpReport {
    let t = ts.duration_secs();
    let per_s = |n: u64| if t > 0.0 { n as f64 / t } else { 0.0 };
    let lc_max = params
        .lc_max
        .unwrap_or_else(|| ts.link_changes_per_second.iter().copied().max().unwrap_or(0));
    let p_s_rd = ratio(ts.discoveries_succeeded, ts.discoveries_started);
    let p_s_rm = ratio(ts.repairs_succeeded, ts.repairs_attempted);
    let node_bits = ts
        .per_node_per_second_bits
        .iter()
        .flat_map(|bins| bins.iter().map(|&b| b as f64));
    let secs = |us: &[u64]| us.iter().map(|&u| u as f64 / 1e6).collect::<Vec<_>>();
    let violations = vec![
        check(ConstraintId::C1a, node_bits, params.beta_avail, false),
        check(
            ConstraintId::C1b,
            ts.repairs_per_second.iter().map(|&r| r as f64),
            lc_max as f64,
            false,
        ),
        // Links exist exactly when the range predicate holds; there is nothing to violate.
        check(ConstraintId::C1c, std::iter::empty(), 0.0, false),
        check(ConstraintId::C1d, [p_s_rd], 1.0, false),
        check(ConstraintId::C1e, [p_s_rm], 1.0, false),
        check(
            ConstraintId::C2a,
            secs(&ts.discovery_durations_us),
            params.tau_cri,
            true,
        ),
        check(ConstraintId::C2b, secs(&ts.repair_durations_us), params.tau_cri, true),
        check(
            ConstraintId::C3a,
            ts.rd_ctrl_bits_per_second.iter().map(|&b| b as f64),
            params.beta_cri,
            true,
        ),
        check(
            ConstraintId::C3b,
            ts.rm_ctrl_bits_per_second.iter().map(|&b| b as f64),
            params.beta_cri,
            true,
        ),
    ];
    let c = &ts.ctrl_counts;
    LpReport {
        t_avg: if t > 0.0 {
            (1.0 - ts.p_nr()) * ts.delivered_bits as f64 / t
        } else {
            0.0
        },
        t_avg_plain: crate::metrics::throughput(ts, t),
        p_nr: ts.p_nr(),
        ct_rd: mean_secs(&ts.discovery_durations_us),
        ct_rm: mean_secs(&ts.repair_durations_us),
        ce_rd: c.discovery(),
        ce_rm: c.maintenance(),
        violations,
        params: params.clone(),
        lc_max_used: lc_max,
        rates: Rates {
            alpha_tra: per_s(ts.data_originated),
            alpha_rec: per_s(ts.data_delivered),
            alpha_rd: per_s(ts.discoveries_started),
            alpha_dt: per_s(ts.data_transmissions),
            alpha_lr: per_s(ts.repairs_attempted),
            alpha_rd_ctrl: per_s(c.discovery()),
            alpha_rm_ctrl: per_s(c.maintenance()),
        },
        p_s_rd,
        p_s_rm,
        rec_dr: ts.flow_delivered.clone(),
    }
}
