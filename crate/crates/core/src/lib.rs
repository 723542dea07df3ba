//! PV-battery systems on building load profiles: optimal dispatch,
//! self-consumption metrics, profitability, regression on building features
//! and the parameter sweep that ties them together.

pub mod dispatch;
pub mod economics;
pub mod metrics;
pub mod profiles;
pub mod stats;
pub mod sweep;
