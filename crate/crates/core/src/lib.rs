//! Deterministic discrete-event simulator for reactive MANET routing
//! (AODV, AODV-LL, DSR, DSR-M, DYMO) with an analytical cost model and a
//! batch harness.

pub mod analytics;
pub mod aodv;
pub mod dsr;
pub mod dymo;
pub mod engine;
pub mod harness;
pub mod metrics;
pub mod mobility;
pub mod routing;
