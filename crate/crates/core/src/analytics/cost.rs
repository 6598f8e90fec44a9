//! Control-packet energy cost model (CE) for reactive protocols.

use super::AnalyticsError;

/// `n(n+1)/2`.
pub fn tri(n: u64) -> u64 {
    n * (n + 1) / 2
}

/// Symbol set of the cost formulas.
#[derive(Clone, Debug, PartialEq)]
pub struct CostParams {
    /// Average node degree.
    pub d_avg: f64,
    /// Nodes per ring, one entry per ring tried (M = `rings.len()`).
    pub rings: Vec<u64>,
    /// Nodes taking part in a local-repair flood.
    pub n_llr: u64,
    /// Nodes receiving RERR.
    pub n_rerr: u64,
    /// Index of the salvaging node.
    pub n_ps: u64,
    /// Nodes on active routes.
    pub n_rn: u64,
    pub tau_route_in_use: f64,
    pub tau_h_interval: f64,
    /// A link break occurred.
    pub lb_indicator: bool,
    /// Local repair failed.
    pub pus_llr_indicator: bool,
}

impl Default for CostParams {
    fn default() -> Self {
        CostParams {
            d_avg: 0.0,
            rings: vec![0],
            n_llr: 0,
            n_rerr: 0,
            n_ps: 0,
            n_rn: 0,
            tau_route_in_use: 0.0,
            tau_h_interval: 1.0,
            lb_indicator: false,
            pus_llr_indicator: false,
        }
    }
}

impl CostParams {
    pub fn m(&self) -> usize {
        self.rings.len()
    }

    pub fn validate(&self) -> Result<(), AnalyticsError> {
        if !(self.d_avg.is_finite() && self.d_avg >= 0.0) {
            return Err(AnalyticsError::Domain("d_avg must be a non-negative number"));
        }
        if !(self.tau_route_in_use.is_finite() && self.tau_route_in_use >= 0.0) {
            return Err(AnalyticsError::Domain("tau_route_in_use must be non-negative"));
        }
        if !(self.tau_h_interval.is_finite() && self.tau_h_interval > 0.0) {
            return Err(AnalyticsError::NonPositiveInterval);
        }
        Ok(())
    }
}

/// Cost of one ring of `n_k` nodes: `d_avg + d_avg · Σ_{i=1}^{n_k} i`.
pub fn ce_ring(d_avg: f64, n_k: u64) -> f64 {
    d_avg + d_avg * tri(n_k) as f64
}

/// Route discovery cost over all rings.
pub fn ce_rd(d_avg: f64, rings: &[u64]) -> Result<f64, AnalyticsError> {
    if rings.is_empty() {
        return Err(AnalyticsError::EmptyRings);
    }
    Ok(rings.iter().map(|&n| ce_ring(d_avg, n)).sum())
}

/// HELLO packets sent while routes are in use.
pub fn ce_hello(tau_route_in_use: f64, tau_h_interval: f64, n_rn: u64) -> Result<f64, AnalyticsError> {
    if tau_h_interval.is_nan() || tau_h_interval <= 0.0 {
        return Err(AnalyticsError::NonPositiveInterval);
    }
    Ok(tau_route_in_use / tau_h_interval * n_rn as f64)
}

fn gated(flag: bool, n: u64) -> f64 {
    if flag {
        tri(n) as f64
    } else {
        0.0
    }
}

/// AODV maintenance: HELLO, the local-repair flood after a break, and the
/// RERR spread after a failed repair.
pub fn ce_rm_aodv(p: &CostParams) -> Result<f64, AnalyticsError> {
    Ok(ce_hello(p.tau_route_in_use, p.tau_h_interval, p.n_rn)? + ce_rm_aodv_ll(p))
}

/// AODV-LL maintenance: the AODV terms without HELLO.
pub fn ce_rm_aodv_ll(p: &CostParams) -> f64 {
    gated(p.lb_indicator, p.n_llr) + gated(p.pus_llr_indicator, p.n_rerr)
}

/// DSR maintenance from packet salvaging.
pub fn ce_rm_dsr(n_ps: u64) -> f64 {
    tri(n_ps) as f64
}

/// DYMO maintenance: HELLO plus the RERR flood after a break.
pub fn ce_rm_dymo(p: &CostParams) -> Result<f64, AnalyticsError> {
    Ok(ce_hello(p.tau_route_in_use, p.tau_h_interval, p.n_rn)? + gated(p.lb_indicator, p.n_rerr))
}

pub fn ce_total(rd: f64, rm: f64) -> f64 {
    rd + rm
}
