//! Cost formulas, LP objectives and the bridge from simulation traces to
//! their parameters.

pub mod cost;
pub mod lp;

use thiserror::Error;

use crate::metrics::TraceStats;
use crate::routing::HelloConfig;

pub use self::cost::{
    ce_hello, ce_rd, ce_ring, ce_rm_aodv, ce_rm_aodv_ll, ce_rm_dsr, ce_rm_dymo, ce_total, tri, CostParams,
};
pub use self::lp::{check_constraints, throughput_objective, ConstraintId, LpParams, LpReport, Rates, Violation};

#[derive(Debug, Error, PartialEq)]
pub enum AnalyticsError {
    #[error("ring list is empty")]
    EmptyRings,
    #[error("hello interval must be positive")]
    NonPositiveInterval,
    #[error("{0}")]
    Domain(&'static str),
}

/// Which maintenance formula applies to a protocol.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CostModel {
    Aodv,
    AodvLl,
    Dsr,
    Dymo,
}

impl CostModel {
    pub fn ce_rm(self, p: &CostParams) -> Result<f64, AnalyticsError> {
        match self {
            CostModel::Aodv => ce_rm_aodv(p),
            CostModel::AodvLl => Ok(ce_rm_aodv_ll(p)),
            CostModel::Dsr => Ok(ce_rm_dsr(p.n_ps)),
            CostModel::Dymo => ce_rm_dymo(p),
        }
    }

    pub fn uses_hello(self) -> bool {
        matches!(self, CostModel::Aodv | CostModel::Dymo)
    }
}

/// Cost-model parameters measured from a finished run.
///
/// `n_llr` stays 0: repair floods are already counted in `rings`, because
/// every originated request records its reach there.
pub fn params_from_trace(ts: &TraceStats, d_avg: f64, hello: &HelloConfig) -> CostParams {
    let n_rn = ts.hello_nodes.len() as u64;
    let interval = hello.interval.as_secs_f64();
    let tau_route_in_use = if n_rn == 0 {
        0.0
    } else {
        ts.hello_active_ticks as f64 * interval / n_rn as f64
    };
    CostParams {
        d_avg,
        rings: if ts.ring_sizes.is_empty() {
            vec![0]
        } else {
            ts.ring_sizes.clone()
        },
        n_llr: 0,
        n_rerr: ts.rerr_receivers,
        n_ps: ts.salvages,
        n_rn,
        tau_route_in_use,
        tau_h_interval: interval,
        lb_indicator: ts.link_breaks_detected > 0,
        pus_llr_indicator: ts.repairs_failed > 0,
    }
}

/// Model output next to the simulator's own counters.
#[derive(Clone, Debug, PartialEq)]
pub struct Validation {
    pub params: CostParams,
    pub hello_model: f64,
    /// HELLO rounds issued; transmissions still queued at the horizon are included.
    pub hello_issued: u64,
    pub hello_sent: u64,
    pub rd_model: f64,
    pub rd_measured: u64,
    pub rm_model: f64,
    pub rm_measured: u64,
}

impl Validation {
    pub fn hello_matches(&self) -> bool {
        (self.hello_model - self.hello_issued as f64).abs() < 1e-6
    }
}

pub fn validate_trace(
    ts: &TraceStats,
    model: CostModel,
    d_avg: f64,
    hello: &HelloConfig,
) -> Result<Validation, AnalyticsError> {
    let params = params_from_trace(ts, d_avg, hello);
    params.validate()?;
    let hello_model = if model.uses_hello() {
        ce_hello(params.tau_route_in_use, params.tau_h_interval, params.n_rn)?
    } else {
        0.0
    };
    Ok(Validation {
        hello_model,
        hello_issued: ts.hello_active_ticks,
        hello_sent: ts.ctrl_counts.hello,
        rd_model: ce_rd(params.d_avg, &params.rings)?,
        rd_measured: ts.ctrl_counts.discovery(),
        rm_model: model.ce_rm(&params)?,
        rm_measured: ts.ctrl_counts.maintenance(),
        params,
    })
}
