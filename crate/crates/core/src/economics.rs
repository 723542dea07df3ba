//! Annual cash flows, internal rates of return and break-even battery prices.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::metrics::EnergyFlows;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    /// Feed-in tariff by plant size.
    Fit,
    /// Average market revenue for fed-in energy.
    Market,
    /// Feed-in earns nothing.
    None,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::Fit, Scenario::Market, Scenario::None];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Fit => "fit",
            Scenario::Market => "market",
            Scenario::None => "none",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scenario::ALL
            .iter()
            .copied()
            .find(|x| x.name() == s)
            .ok_or_else(|| format!("unknown scenario {s:?} (expected fit, market or none)"))
    }
}

/// Which scenarios pay the surcharge on self-consumed PV energy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurchargeScope {
    AllScenarios,
    FitOnly,
}

/// Feed-in tariff tiers and the other per-MWh rates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TariffSchedule {
    /// `(upper plant size bound in kW_p, EUR/MWh)`, sorted by bound. The
    /// whole plant earns the rate of the first tier its size fits in.
    pub tiers: Vec<(f64, f64)>,
    /// EUR/MWh for fed-in energy in the market scenario.
    pub market_revenue: f64,
    /// EUR/MWh due on self-consumed PV energy.
    pub surcharge_self_consumption: f64,
    pub surcharge_scope: SurchargeScope,
}

impl Default for TariffSchedule {
    fn default() -> Self {
        TariffSchedule {
            tiers: vec![(10.0, 101.8), (40.0, 99.0), (f64::INFINITY, 77.8)],
            market_revenue: 40.0,
            surcharge_self_consumption: 27.5,
            surcharge_scope: SurchargeScope::AllScenarios,
        }
    }
}

impl TariffSchedule {
    pub fn validate(&self) -> Result<(), String> {
        if self.tiers.is_empty() {
            return Err("at least one feed-in tier is required".into());
        }
        if self.tiers.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err("feed-in tiers must be sorted by strictly increasing bound".into());
        }
        if self.tiers.iter().any(|t| t.1 < 0.0 || t.1.is_nan() || t.0.is_nan()) {
            return Err("feed-in rates must be nonnegative".into());
        }
        if self.market_revenue < 0.0 || self.surcharge_self_consumption < 0.0 {
            return Err("market revenue and surcharge must be nonnegative".into());
        }
        Ok(())
    }

    /// Feed-in tariff for a plant of `pv_peak_kw`; plants beyond the last
    /// bound get the last rate.
    pub fn rate_for(&self, pv_peak_kw: f64) -> f64 {
        self.tiers
            .iter()
            .find(|(bound, _)| pv_peak_kw <= *bound)
            .or(self.tiers.last())
            .map_or(0.0, |t| t.1)
    }

    /// Remuneration per MWh of fed-in energy.
    pub fn remuneration(&self, scenario: Scenario, pv_peak_kw: f64) -> f64 {
        match scenario {
            Scenario::Fit => self.rate_for(pv_peak_kw),
            Scenario::Market => self.market_revenue,
            Scenario::None => 0.0,
        }
    }

    pub fn surcharge(&self, scenario: Scenario) -> f64 {
        match (self.surcharge_scope, scenario) {
            (SurchargeScope::AllScenarios, _) | (SurchargeScope::FitOnly, Scenario::Fit) => {
                self.surcharge_self_consumption
            }
            _ => 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostModel {
    /// EUR/kW_p.
    pub pv_capex: f64,
    /// EUR/kWh, inverter included.
    pub batt_capex: f64,
    /// Share of the investment spent each year.
    pub maintenance_rate: f64,
    pub lifetime_years: u32,
    /// Year-on-year factor applied to the net cash flow (1 = constant).
    pub cashflow_decay: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            pv_capex: 1150.0,
            batt_capex: 800.0,
            maintenance_rate: 0.01,
            lifetime_years: 20,
            cashflow_decay: 1.0,
        }
    }
}

impl CostModel {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.pv_capex > 0.0 && self.batt_capex > 0.0) {
            return Err("capital costs must be positive".into());
        }
        if !(self.maintenance_rate >= 0.0) {
            return Err("maintenance rate must be nonnegative".into());
        }
        if self.lifetime_years == 0 {
            return Err("lifetime must be at least one year".into());
        }
        if !(self.cashflow_decay > 0.0) {
            return Err("cash-flow decay factor must be positive".into());
        }
        Ok(())
    }

    /// `(I0 of the PV plant, I0 of the battery)` in EUR.
    pub fn investment(&self, pv_peak_kw: f64, capacity_kwh: f64) -> (f64, f64) {
        (self.pv_capex * pv_peak_kw, self.batt_capex * capacity_kwh)
    }

    /// Present-value factor of the cash-flow profile at a zero rate,
    /// `Σ decay^(t-1)` over the lifetime.
    pub fn annuity_at_zero(&self) -> f64 {
        (0..self.lifetime_years).map(|t| self.cashflow_decay.powi(t as i32)).sum()
    }
}

/// Net annual cash flow in EUR: avoided purchases minus the surcharge on
/// self-consumption, plus remuneration for non-curtailed feed-in, minus
/// maintenance on `i0`.
pub fn annual_cashflow(
    flows: &EnergyFlows,
    pv_peak_kw: f64,
    i0: f64,
    p_supply: f64,
    tariffs: &TariffSchedule,
    maintenance_rate: f64,
    scenario: Scenario,
) -> f64 {
    gross_savings(flows, pv_peak_kw, p_supply, tariffs, scenario) - maintenance_rate * i0
}

/// Annual cash flow before maintenance.
pub fn gross_savings(flows: &EnergyFlows, pv_peak_kw: f64, p_supply: f64, tariffs: &TariffSchedule, scenario: Scenario) -> f64 {
    let self_consumed_mwh = flows.self_consumed_kwh / 1000.0;
    let remunerated_mwh = (flows.feed_in_kwh - flows.curtailed_kwh) / 1000.0;
    (p_supply - tariffs.surcharge(scenario)) * self_consumed_mwh
        + tariffs.remuneration(scenario, pv_peak_kw) * remunerated_mwh
}

/// Net present value at rate `r` of `-i0` followed by `years` flows of
/// `cashflow·decay^(t-1)`.
pub fn npv(rate: f64, i0: f64, cashflow: f64, years: u32, decay: f64) -> f64 {
    let growth = decay / (1.0 + rate);
    let mut pv = 0.0;
    let mut factor = 1.0 / (1.0 + rate);
    for _ in 0..years {
        pv += cashflow * factor;
        factor *= growth;
    }
    pv - i0
}

/// Internal rate of return of investing `i0` for `years` annual flows of
/// `cashflow` (scaled by `decay` each year). `None` when no root above -1
/// exists: no investment, or flows that never turn positive.
pub fn irr(i0: f64, cashflow: f64, years: u32, decay: f64) -> Option<f64> {
    if !(i0 > 0.0) || !(cashflow > 0.0) || years == 0 || !(decay > 0.0) {
        return None;
    }
    // NPV falls strictly from +inf near r = -1 to -i0 as r grows.
    let f = |r: f64| npv(r, i0, cashflow, years, decay);
    let (mut lo, mut hi) = if f(0.0) >= 0.0 {
        let mut hi = 1.0;
        while f(hi) > 0.0 {
            hi *= 2.0;
            if hi > 1e12 {
                return None;
            }
        }
        (0.0, hi)
    } else {
        (-1.0, 0.0)
    };
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid);
        if v == 0.0 {
            return Some(mid);
        }
        if v > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// IRR of the cash flow the battery adds, measured against the battery
/// investment alone. Each cash flow carries maintenance on its own
/// investment.
pub fn irr_battery_constituent(cf_with: f64, cf_without: f64, i0_batt: f64, years: u32, decay: f64) -> Option<f64> {
    irr(i0_batt, cf_with - cf_without, years, decay)
}

/// Specific battery price (EUR/kWh) at which the battery's IRR is zero, given
/// its gross annual savings `delta_savings` before maintenance. Zero when
/// the battery saves nothing.
pub fn breakeven_batt_price(delta_savings: f64, capacity_kwh: f64, costs: &CostModel) -> f64 {
    if !(delta_savings > 0.0) || !(capacity_kwh > 0.0) {
        return 0.0;
    }
    // IRR = 0 means the undiscounted flows repay the investment:
    // A·(ΔS - m·I_b) = I_b.
    let a = costs.annuity_at_zero();
    a * delta_savings / (1.0 + costs.maintenance_rate * a) / capacity_kwh
}

/// Profitability of one system under one remuneration scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioEconomics {
    pub scenario: Scenario,
    pub annual_cashflow: f64,
    pub i0_total: f64,
    pub i0_pv: f64,
    pub i0_batt: f64,
    pub irr_system: Option<f64>,
    pub irr_battery: Option<f64>,
    pub breakeven_batt_price: Option<f64>,
}

/// Evaluates a PV-battery system against the same PV plant without storage.
pub fn evaluate_scenario(
    scenario: Scenario,
    pv_peak_kw: f64,
    capacity_kwh: f64,
    with_battery: &EnergyFlows,
    without_battery: &EnergyFlows,
    p_supply: f64,
    tariffs: &TariffSchedule,
    costs: &CostModel,
) -> ScenarioEconomics {
    let (i0_pv, i0_batt) = costs.investment(pv_peak_kw, capacity_kwh);
    let i0_total = i0_pv + i0_batt;
    let m = costs.maintenance_rate;
    let gross_with = gross_savings(with_battery, pv_peak_kw, p_supply, tariffs, scenario);
    let gross_without = gross_savings(without_battery, pv_peak_kw, p_supply, tariffs, scenario);
    let cf_with = gross_with - m * i0_total;
    let cf_without = gross_without - m * i0_pv;
    let years = costs.lifetime_years;
    let decay = costs.cashflow_decay;
    let has_battery = capacity_kwh > 0.0;
    ScenarioEconomics {
        scenario,
        annual_cashflow: cf_with,
        i0_total,
        i0_pv,
        i0_batt,
        irr_system: irr(i0_total, cf_with, years, decay),
        irr_battery: if has_battery {
            irr_battery_constituent(cf_with, cf_without, i0_batt, years, decay)
        } else {
            None
        },
        breakeven_batt_price: has_battery.then(|| breakeven_batt_price(gross_with - gross_without, capacity_kwh, costs)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tier_lookup_is_flat() {
        let t = TariffSchedule::default();
        assert_eq!(t.rate_for(5.0), 101.8);
        assert_eq!(t.rate_for(10.0), 101.8);
        assert_eq!(t.rate_for(10.5), 99.0);
        assert_eq!(t.rate_for(500.0), 77.8);
    }

    #[test]
    fn cashflow_arithmetic() {
        let flows = EnergyFlows {
            self_consumed_kwh: 100_000.0,
            feed_in_kwh: 0.0,
            curtailed_kwh: 0.0,
        };
        let t = TariffSchedule {
            surcharge_scope: SurchargeScope::FitOnly,
            ..TariffSchedule::default()
        };
        let cf = annual_cashflow(&flows, 50.0, 100_000.0, 240.0, &t, 0.01, Scenario::None);
        assert!((cf - 23_000.0).abs() < 1e-9);
        let zero = EnergyFlows::default();
        assert_eq!(annual_cashflow(&zero, 0.0, 0.0, 240.0, &t, 0.01, Scenario::Fit), 0.0);
    }

    #[test]
    fn irr_edge_cases() {
        assert_eq!(irr(1000.0, 0.0, 20, 1.0), None);
        assert_eq!(irr(1000.0, -5.0, 20, 1.0), None);
        assert_eq!(irr(0.0, 5.0, 20, 1.0), None);
        let r = irr(1000.0, 50.0, 20, 1.0).unwrap();
        assert!(r.abs() < 1e-12, "{r}");
        // One year: 1000 -> 1100 is 10 %.
        assert!((irr(1000.0, 1100.0, 1, 1.0).unwrap() - 0.1).abs() < 1e-12);
        // Losing money still has a root between -1 and 0.
        let r = irr(1000.0, 40.0, 20, 1.0).unwrap();
        assert!(r < 0.0 && npv(r, 1000.0, 40.0, 20, 1.0).abs() < 1e-6);
    }

    #[test]
    fn breakeven_examples() {
        let c = CostModel::default();
        assert_eq!(breakeven_batt_price(0.0, 1.0, &c), 0.0);
        assert_eq!(breakeven_batt_price(-3.0, 1.0, &c), 0.0);
        assert!((breakeven_batt_price(60.0, 1.0, &c) - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn surcharge_scope() {
        let mut t = TariffSchedule::default();
        assert_eq!(t.surcharge(Scenario::None), 27.5);
        t.surcharge_scope = SurchargeScope::FitOnly;
        assert_eq!(t.surcharge(Scenario::None), 0.0);
        assert_eq!(t.surcharge(Scenario::Fit), 27.5);
    }
}
