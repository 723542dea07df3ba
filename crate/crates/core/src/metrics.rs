//! Self-consumption, self-sufficiency, peak feed-in and curtailment.

use thiserror::Error;

use crate::dispatch::{DispatchParams, DispatchResult};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("total PV generation is zero; self-consumption rate undefined")]
    NoGeneration,
    #[error("total demand is zero; self-sufficiency rate undefined")]
    NoDemand,
    #[error("cap fraction must lie in (0, 1], got {0}")]
    CapFraction(f64),
}

/// Annual energy totals that feed the cash-flow model, in kWh.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnergyFlows {
    pub self_consumed_kwh: f64,
    pub feed_in_kwh: f64,
    /// Feed-in above the power cap, earning no remuneration.
    pub curtailed_kwh: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricSet {
    pub scr: f64,
    pub ssr: f64,
    /// Peak feed-in power over nominal PV power.
    pub peak_feed_in_pct_of_pv: f64,
    /// Curtailed energy over annual PV generation.
    pub curtailment_loss_frac: f64,
    pub self_consumed_kwh: f64,
    pub flows: EnergyFlows,
}

/// Self-consumed energy, `Σ(demand - supply)`.
pub fn self_consumed(d: &DispatchResult, load: &[f64]) -> f64 {
    load.iter().zip(&d.supply).map(|(l, s)| l - s).sum()
}

/// The same numerator assembled from the PV side: generation minus feed-in
/// minus charging and discharging losses, minus energy still stored at the
/// end of the horizon. Equals [`self_consumed`] for any balanced schedule.
pub fn self_consumed_from_losses(d: &DispatchResult, pv: &[f64], params: &DispatchParams) -> f64 {
    let mut total = 0.0;
    for t in 0..pv.len() {
        total += pv[t]
            - d.feed_in[t]
            - (1.0 - params.eta_ch) * d.charge[t]
            - (1.0 / params.eta_dch - 1.0) * d.discharge[t];
    }
    let stored = d.soc.last().map_or(0.0, |s| s - d.soc_start);
    total - stored
}

/// Energy fed in above `cap_fraction` of nominal PV power, in kWh.
pub fn curtailed_energy(d: &DispatchResult, pv_peak_kw: f64, cap_fraction: f64) -> f64 {
    let dt = d.step_hours;
    let cap_kw = cap_fraction * pv_peak_kw;
    d.feed_in.iter().map(|f| (f / dt - cap_kw).max(0.0) * dt).sum()
}

/// Curtailed energy as a fraction of annual PV generation (0 without PV).
pub fn curtailment_losses(d: &DispatchResult, pv: &[f64], pv_peak_kw: f64, cap_fraction: f64) -> Result<f64, MetricsError> {
    if !(cap_fraction > 0.0 && cap_fraction <= 1.0) {
        return Err(MetricsError::CapFraction(cap_fraction));
    }
    let generation: f64 = pv.iter().sum();
    if generation <= 0.0 {
        return Ok(0.0);
    }
    Ok(curtailed_energy(d, pv_peak_kw, cap_fraction) / generation)
}

/// Peak feed-in power as a fraction of nominal PV power (0 without PV).
pub fn peak_feed_in_pct(d: &DispatchResult, pv_peak_kw: f64) -> f64 {
    if pv_peak_kw > 0.0 {
        d.peak_feed_in_kw / pv_peak_kw
    } else {
        0.0
    }
}

/// All metrics of one dispatch result.
pub fn compute_metrics(
    d: &DispatchResult,
    load: &[f64],
    pv: &[f64],
    params: &DispatchParams,
    cap_fraction: f64,
) -> Result<MetricSet, MetricsError> {
    let generation: f64 = pv.iter().sum();
    let demand: f64 = load.iter().sum();
    if generation <= 0.0 {
        return Err(MetricsError::NoGeneration);
    }
    if demand <= 0.0 {
        return Err(MetricsError::NoDemand);
    }
    let self_consumed_kwh = self_consumed(d, load);
    let curtailed_kwh = curtailed_energy(d, params.pv_peak_kw, cap_fraction);
    Ok(MetricSet {
        scr: self_consumed_kwh / generation,
        ssr: self_consumed_kwh / demand,
        peak_feed_in_pct_of_pv: peak_feed_in_pct(d, params.pv_peak_kw),
        curtailment_loss_frac: curtailment_losses(d, pv, params.pv_peak_kw, cap_fraction)?,
        self_consumed_kwh,
        flows: EnergyFlows {
            self_consumed_kwh,
            feed_in_kwh: d.total_feed_in(),
            curtailed_kwh,
        },
    })
}
