//! Battery dispatch under the cost objective and the cost-plus-peak
//! ("grid-friendly") objective.

mod capped;

use std::io::{self, Write};

use lpcore::{LinearProgram, LpError, LpStatus, RowSense, SolverOptions};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::economics::TariffSchedule;
use crate::profiles::TimeSeries;

#[derive(Debug, Error)]
pub enum DispatchError {
    #[error("load has {load} intervals of {load_step} min, PV has {pv} of {pv_step} min")]
    Misaligned {
        load: usize,
        pv: usize,
        load_step: u32,
        pv_step: u32,
    },
    #[error("invalid dispatch parameters: {0}")]
    InvalidParams(String),
    #[error(
        "greedy dispatch needs p_supply·η_ch·η_dch ({stored:.3} EUR/MWh) above the feed-in tariff \
         ({fit} EUR/MWh); solve the LP instead"
    )]
    PriceCondition { stored: f64, fit: f64 },
    #[error("LP solver: {0}")]
    Solver(#[from] LpError),
    #[error("dispatch LP ended {0:?}")]
    Status(LpStatus),
}

/// Relative system sizing plus battery and price parameters. Defaults are
/// the case-study values.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemConfig {
    /// kW_p of PV per MWh of annual consumption.
    pub pv_size_rel: f64,
    /// kWh of storage per MWh of annual consumption.
    pub batt_size_rel: f64,
    pub eta_ch: f64,
    pub eta_dch: f64,
    /// Power limits in kW per kWh of capacity.
    pub r_ch_max: f64,
    pub r_dch_max: f64,
    /// EUR/MWh.
    pub p_supply: f64,
    pub tariffs: TariffSchedule,
    pub lambda: f64,
    pub soc_initial_kwh: f64,
    /// Requires the final state of charge to equal the initial one.
    pub cyclic_soc: bool,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            pv_size_rel: 1.0,
            batt_size_rel: 0.0,
            eta_ch: 0.94,
            eta_dch: 0.94,
            r_ch_max: 0.6,
            r_dch_max: 0.6,
            p_supply: 240.0,
            tariffs: TariffSchedule::default(),
            lambda: 0.01,
            soc_initial_kwh: 0.0,
            cyclic_soc: false,
        }
    }
}

impl SystemConfig {
    /// Absolute parameters for a property consuming `annual_mwh` per year.
    pub fn resolve(&self, annual_mwh: f64) -> DispatchParams {
        let pv_peak_kw = self.pv_size_rel * annual_mwh;
        DispatchParams {
            capacity_kwh: self.batt_size_rel * annual_mwh,
            pv_peak_kw,
            eta_ch: self.eta_ch,
            eta_dch: self.eta_dch,
            r_ch_max: self.r_ch_max,
            r_dch_max: self.r_dch_max,
            p_supply: self.p_supply,
            feed_in_tariff: self.tariffs.rate_for(pv_peak_kw),
            lambda: self.lambda,
            soc_initial_kwh: self.soc_initial_kwh,
            cyclic_soc: self.cyclic_soc,
        }
    }
}

/// Absolute dispatch parameters for one property and system size.
#[derive(Clone, Debug, PartialEq)]
pub struct DispatchParams {
    pub capacity_kwh: f64,
    pub pv_peak_kw: f64,
    pub eta_ch: f64,
    pub eta_dch: f64,
    pub r_ch_max: f64,
    pub r_dch_max: f64,
    /// EUR/MWh.
    pub p_supply: f64,
    /// EUR/MWh earned by feed-in during dispatch.
    pub feed_in_tariff: f64,
    pub lambda: f64,
    pub soc_initial_kwh: f64,
    pub cyclic_soc: bool,
}

impl DispatchParams {
    pub fn validate(&self) -> Result<(), DispatchError> {
        let bad = |msg: String| Err(DispatchError::InvalidParams(msg));
        let finite = [
            self.capacity_kwh,
            self.pv_peak_kw,
            self.eta_ch,
            self.eta_dch,
            self.r_ch_max,
            self.r_dch_max,
            self.p_supply,
            self.feed_in_tariff,
            self.lambda,
            self.soc_initial_kwh,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return bad(format!("non-finite value in {self:?}"));
        }
        if self.capacity_kwh < 0.0 || self.pv_peak_kw < 0.0 {
            return bad("sizes must be nonnegative".into());
        }
        if !(self.eta_ch > 0.0 && self.eta_ch <= 1.0 && self.eta_dch > 0.0 && self.eta_dch <= 1.0) {
            return bad(format!("efficiencies must lie in (0, 1], got {} and {}", self.eta_ch, self.eta_dch));
        }
        if self.r_ch_max <= 0.0 || self.r_dch_max <= 0.0 {
            return bad("power ratios must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return bad(format!("weighting factor {} outside [0, 1]", self.lambda));
        }
        if self.soc_initial_kwh < 0.0 || self.soc_initial_kwh > self.capacity_kwh {
            return bad(format!(
                "initial state of charge {} outside [0, {}]",
                self.soc_initial_kwh, self.capacity_kwh
            ));
        }
        Ok(())
    }

    pub fn max_charge_kwh(&self, dt: f64) -> f64 {
        self.r_ch_max * self.capacity_kwh * dt
    }

    pub fn max_discharge_kwh(&self, dt: f64) -> f64 {
        self.r_dch_max * self.capacity_kwh * dt
    }

    /// Cost of buying all of `demand_kwh` from the grid, in EUR (the cost
    /// normaliser of the weighted objective).
    pub fn cost_normalizer(&self, demand_kwh: f64) -> f64 {
        self.p_supply * demand_kwh / 1000.0
    }

    /// Procurement cost minus feed-in revenue in EUR.
    pub fn cost_eur(&self, supply_kwh: f64, feed_in_kwh: f64) -> f64 {
        (self.p_supply * supply_kwh - self.feed_in_tariff * feed_in_kwh) / 1000.0
    }
}

/// Per-interval energies in kWh; `soc[t]` is the state of charge at the end
/// of interval `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct DispatchResult {
    pub step_hours: f64,
    pub supply: Vec<f64>,
    pub feed_in: Vec<f64>,
    pub charge: Vec<f64>,
    pub discharge: Vec<f64>,
    pub soc: Vec<f64>,
    /// State of charge before the first interval.
    pub soc_start: f64,
    pub peak_feed_in_kw: f64,
    pub cost_eur: f64,
}

impl DispatchResult {
    pub fn len(&self) -> usize {
        self.supply.len()
    }

    pub fn is_empty(&self) -> bool {
        self.supply.is_empty()
    }

    pub fn total_supply(&self) -> f64 {
        self.supply.iter().sum()
    }

    pub fn total_feed_in(&self) -> f64 {
        self.feed_in.iter().sum()
    }

    /// Checks every per-interval invariant with absolute tolerance `tol` (kWh).
    pub fn check(&self, load: &[f64], pv: &[f64], params: &DispatchParams, tol: f64) -> Result<(), String> {
        let dt = self.step_hours;
        let n = load.len();
        for (name, series) in [
            ("supply", &self.supply),
            ("feed_in", &self.feed_in),
            ("charge", &self.charge),
            ("discharge", &self.discharge),
            ("soc", &self.soc),
        ] {
            if series.len() != n {
                return Err(format!("{name} has {} intervals, expected {n}", series.len()));
            }
            if let Some(t) = series.iter().position(|v| *v < -tol) {
                return Err(format!("{name}[{t}] = {} is negative", series[t]));
            }
        }
        let mut prev = self.soc_start;
        for t in 0..n {
            let balance = load[t] - pv[t] - (self.supply[t] - self.feed_in[t] + self.discharge[t] - self.charge[t]);
            if balance.abs() > tol {
                return Err(format!("energy balance off by {balance} at {t}"));
            }
            let soc = prev + params.eta_ch * self.charge[t] - self.discharge[t] / params.eta_dch;
            if (soc - self.soc[t]).abs() > tol {
                return Err(format!("state of charge recursion off by {} at {t}", soc - self.soc[t]));
            }
            if self.soc[t] > params.capacity_kwh + tol {
                return Err(format!("state of charge {} above capacity at {t}", self.soc[t]));
            }
            if self.charge[t] > params.max_charge_kwh(dt) + tol || self.discharge[t] > params.max_discharge_kwh(dt) + tol {
                return Err(format!("power limit exceeded at {t}"));
            }
            if self.feed_in[t] / dt > self.peak_feed_in_kw + tol / dt {
                return Err(format!("feed-in above reported peak at {t}"));
            }
            prev = self.soc[t];
        }
        if params.cyclic_soc && n > 0 && (self.soc[n - 1] - self.soc_start).abs() > tol {
            return Err("final state of charge differs from the initial one".into());
        }
        Ok(())
    }

    /// Writes the per-interval trace CSV.
    pub fn write_trace<W: Write>(&self, out: W) -> io::Result<()> {
        let mut out = io::BufWriter::new(out);
        writeln!(out, "t,supply_kwh,feed_in_kwh,charge_kwh,discharge_kwh,soc_kwh")?;
        for t in 0..self.len() {
            writeln!(
                out,
                "{t},{},{},{},{},{}",
                self.supply[t], self.feed_in[t], self.charge[t], self.discharge[t], self.soc[t]
            )?;
        }
        out.flush()
    }
}

fn check_inputs(load: &TimeSeries, pv: &TimeSeries, params: &DispatchParams) -> Result<(), DispatchError> {
    if load.len() != pv.len() || load.step_minutes() != pv.step_minutes() {
        return Err(DispatchError::Misaligned {
            load: load.len(),
            pv: pv.len(),
            load_step: load.step_minutes(),
            pv_step: pv.step_minutes(),
        });
    }
    params.validate()
}

/// Builds the result from charge/discharge decisions: clips them to their
/// limits, runs the state-of-charge recursion (clipping round-off at the
/// capacity bounds) and nets the rest against the grid.
fn settle(
    load: &[f64],
    pv: &[f64],
    params: &DispatchParams,
    dt: f64,
    soc_start: f64,
    mut charge: Vec<f64>,
    mut discharge: Vec<f64>,
) -> DispatchResult {
    let n = load.len();
    let cap = params.capacity_kwh;
    let ch_max = params.max_charge_kwh(dt);
    let dch_max = params.max_discharge_kwh(dt);
    let mut soc = Vec::with_capacity(n);
    let mut supply = Vec::with_capacity(n);
    let mut feed_in = Vec::with_capacity(n);
    let mut level = soc_start;
    for t in 0..n {
        let mut ch = charge[t].clamp(0.0, ch_max);
        let mut dch = discharge[t].clamp(0.0, dch_max);
        let mut next = level + params.eta_ch * ch - dch / params.eta_dch;
        if next < 0.0 {
            dch = ((level + params.eta_ch * ch) * params.eta_dch).max(0.0);
            next = (level + params.eta_ch * ch - dch / params.eta_dch).max(0.0);
        }
        if next > cap {
            ch = ((cap - level + dch / params.eta_dch) / params.eta_ch).max(0.0);
            next = (level + params.eta_ch * ch - dch / params.eta_dch).min(cap);
        }
        charge[t] = ch;
        discharge[t] = dch;
        let net = load[t] - pv[t] + ch - dch;
        supply.push(net.max(0.0));
        feed_in.push((-net).max(0.0));
        soc.push(next);
        level = next;
    }
    let peak_feed_in_kw = feed_in.iter().fold(0.0_f64, |m, v| m.max(*v)) / dt;
    let cost_eur = params.cost_eur(supply.iter().sum(), feed_in.iter().sum());
    DispatchResult {
        step_hours: dt,
        supply,
        feed_in,
        charge,
        discharge,
        soc,
        soc_start,
        peak_feed_in_kw,
        cost_eur,
    }
}

/// Cost-minimal dispatch.
///
/// With no initial charge and an open-ended horizon this is the greedy rule
/// (store surplus as early as possible, discharge into deficits as early as
/// possible) followed by a backward pass that drops charging whose energy is
/// never discharged. Other settings fall back to the LP.
pub fn dispatch_cost_min(load: &TimeSeries, pv: &TimeSeries, params: &DispatchParams) -> Result<DispatchResult, DispatchError> {
    check_inputs(load, pv, params)?;
    let stored_value = params.p_supply * params.eta_ch * params.eta_dch;
    if params.capacity_kwh > 0.0 && stored_value <= params.feed_in_tariff {
        return Err(DispatchError::PriceCondition {
            stored: stored_value,
            fit: params.feed_in_tariff,
        });
    }
    if params.capacity_kwh > 0.0 && (params.cyclic_soc || params.soc_initial_kwh > 0.0) {
        return solve_dispatch_lp(load, pv, params, Objective::Cost, &SolverOptions::default());
    }
    Ok(greedy(load.values(), pv.values(), params, load.step_hours()))
}

fn greedy(load: &[f64], pv: &[f64], params: &DispatchParams, dt: f64) -> DispatchResult {
    let n = load.len();
    let cap = params.capacity_kwh;
    let ch_max = params.max_charge_kwh(dt);
    let dch_max = params.max_discharge_kwh(dt);
    let (eta_ch, eta_dch) = (params.eta_ch, params.eta_dch);
    let mut charge = vec![0.0; n];
    let mut discharge = vec![0.0; n];
    let mut soc = vec![0.0; n];
    let mut level = 0.0;
    if cap > 0.0 {
        for t in 0..n {
            let surplus = pv[t] - load[t];
            if surplus > 0.0 {
                let headroom = (cap - level) / eta_ch;
                let ch = surplus.min(ch_max).min(headroom);
                charge[t] = ch;
                level = if ch == headroom { cap } else { (level + eta_ch * ch).min(cap) };
            } else if surplus < 0.0 {
                let available = level * eta_dch;
                let dch = (-surplus).min(dch_max).min(available);
                discharge[t] = dch;
                level = if dch == available { 0.0 } else { (level - dch / eta_dch).max(0.0) };
            }
            soc[t] = level;
        }
        // Walk backwards keeping `floor`, the lowest state of charge from t to
        // the end after the cuts made so far; charging at t can be cut by up to
        // that much stored energy without starving any later discharge.
        let mut floor = f64::INFINITY;
        for t in (0..n).rev() {
            floor = floor.min(soc[t]);
            if charge[t] > 0.0 && floor > 0.0 {
                let cut = (eta_ch * charge[t]).min(floor);
                floor -= cut;
                charge[t] = if cut == eta_ch * charge[t] { 0.0 } else { charge[t] - cut / eta_ch };
            }
        }
    }
    settle(load, pv, params, dt, 0.0, charge, discharge)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Objective {
    /// Procurement cost minus feed-in revenue.
    Cost,
    /// Weighted normalised cost plus normalised peak feed-in.
    Weighted,
}

/// Variable and row layout of a dispatch LP.
#[derive(Clone, Debug)]
pub struct DispatchLp {
    pub lp: LinearProgram,
    pub intervals: usize,
    pub objective: Objective,
}

impl DispatchLp {
    pub const VARS_PER_INTERVAL: usize = 5;

    pub fn supply(t: usize) -> usize {
        5 * t
    }
    pub fn feed_in(t: usize) -> usize {
        5 * t + 1
    }
    pub fn charge(t: usize) -> usize {
        5 * t + 2
    }
    pub fn discharge(t: usize) -> usize {
        5 * t + 3
    }
    pub fn soc(t: usize) -> usize {
        5 * t + 4
    }
    /// Peak feed-in power variable (weighted objective only).
    pub fn peak(&self) -> Option<usize> {
        (self.objective == Objective::Weighted).then_some(5 * self.intervals)
    }
}

/// Assembles the dispatch LP. Rows: `T` energy balances, `T` state-of-charge
/// recursions and, for the weighted objective, `T` peak rows. In weighted
/// mode charging is fixed to zero on net-demand intervals and discharging on
/// net-surplus intervals.
pub fn build_dispatch_lp(
    load: &TimeSeries,
    pv: &TimeSeries,
    params: &DispatchParams,
    objective: Objective,
) -> Result<DispatchLp, DispatchError> {
    check_inputs(load, pv, params)?;
    let (d, g) = (load.values(), pv.values());
    let n = d.len();
    let dt = load.step_hours();
    let weighted = objective == Objective::Weighted;
    if params.p_supply < params.feed_in_tariff {
        return Err(DispatchError::InvalidParams(format!(
            "supply price {} below the feed-in tariff {} makes buying to resell profitable",
            params.p_supply, params.feed_in_tariff
        )));
    }
    if weighted && params.pv_peak_kw <= 0.0 {
        return Err(DispatchError::InvalidParams("weighted objective needs a positive PV size".into()));
    }
    let num_vars = 5 * n + usize::from(weighted);
    let mut lp = LinearProgram::new(num_vars);
    let (supply_coef, feed_coef) = if weighted {
        let omega = params.cost_normalizer(load.total());
        if omega <= 0.0 {
            return Err(DispatchError::InvalidParams("weighted objective needs positive demand".into()));
        }
        let w = params.lambda / (1000.0 * omega);
        (w * params.p_supply, -w * params.feed_in_tariff)
    } else {
        (params.p_supply / 1000.0, -params.feed_in_tariff / 1000.0)
    };
    let ch_max = params.max_charge_kwh(dt);
    let dch_max = params.max_discharge_kwh(dt);
    for t in 0..n {
        lp.set_objective(DispatchLp::supply(t), supply_coef)?;
        lp.set_objective(DispatchLp::feed_in(t), feed_coef)?;
        let (ch_hi, dch_hi) = if weighted {
            (
                if d[t] > g[t] { 0.0 } else { ch_max },
                if g[t] > d[t] { 0.0 } else { dch_max },
            )
        } else {
            (ch_max, dch_max)
        };
        lp.set_bounds(DispatchLp::charge(t), 0.0, ch_hi)?;
        lp.set_bounds(DispatchLp::discharge(t), 0.0, dch_hi)?;
        lp.set_bounds(DispatchLp::soc(t), 0.0, params.capacity_kwh)?;
    }
    for t in 0..n {
        lp.add_row(
            &[
                (DispatchLp::supply(t), 1.0),
                (DispatchLp::feed_in(t), -1.0),
                (DispatchLp::charge(t), -1.0),
                (DispatchLp::discharge(t), 1.0),
            ],
            RowSense::Eq,
            d[t] - g[t],
        )?;
    }
    for t in 0..n {
        let mut row = vec![
            (DispatchLp::soc(t), 1.0),
            (DispatchLp::charge(t), -params.eta_ch),
            (DispatchLp::discharge(t), 1.0 / params.eta_dch),
        ];
        let mut rhs = 0.0;
        if t > 0 {
            row.push((DispatchLp::soc(t - 1), -1.0));
        } else if params.cyclic_soc {
            if n > 1 {
                row.push((DispatchLp::soc(n - 1), -1.0));
            } else {
                row.remove(0);
            }
        } else {
            rhs = params.soc_initial_kwh;
        }
        lp.add_row(&row, RowSense::Eq, rhs)?;
    }
    if weighted {
        let peak = 5 * n;
        lp.set_objective(peak, (1.0 - params.lambda) / params.pv_peak_kw)?;
        for t in 0..n {
            lp.add_row(&[(DispatchLp::feed_in(t), 1.0), (peak, -dt)], RowSense::Le, 0.0)?;
        }
    }
    Ok(DispatchLp {
        lp,
        intervals: n,
        objective,
    })
}

/// Builds and solves the dispatch LP and settles its charge/discharge
/// decisions into a result.
pub fn solve_dispatch_lp(
    load: &TimeSeries,
    pv: &TimeSeries,
    params: &DispatchParams,
    objective: Objective,
    opts: &SolverOptions,
) -> Result<DispatchResult, DispatchError> {
    let model = build_dispatch_lp(load, pv, params, objective)?;
    let sol = lpcore::solve(&model.lp, opts)?;
    if sol.status != LpStatus::Optimal {
        return Err(DispatchError::Status(sol.status));
    }
    Ok(settle_lp(load, pv, params, &sol.x, model.intervals))
}

/// What "grid-friendly" optimises.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridMode {
    /// Among cost-optimal schedules, the one minimising the weighted
    /// objective (and so the peak feed-in).
    #[default]
    CostPreserving,
    /// The plain weighted objective, which may give up cost for peak.
    Weighted,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridSolver {
    Lp,
    /// Bisection on a feed-in cap with a lazy cost-optimal schedule per cap.
    /// Cost-preserving mode only.
    FastPath,
    /// LP up to [`LP_MAX_INTERVALS`], fast path beyond where it applies.
    #[default]
    Auto,
}

/// Longest horizon the automatic solver choice sends to the LP (four weeks).
pub const LP_MAX_INTERVALS: usize = 2688;

#[derive(Clone, Debug, Default)]
pub struct GridOptions {
    pub mode: GridMode,
    pub solver: GridSolver,
    pub lp: SolverOptions,
}

/// Grid-friendly dispatch with default options.
pub fn dispatch_grid_friendly(load: &TimeSeries, pv: &TimeSeries, params: &DispatchParams) -> Result<DispatchResult, DispatchError> {
    dispatch_grid_friendly_with(load, pv, params, &GridOptions::default())
}

pub fn dispatch_grid_friendly_with(
    load: &TimeSeries,
    pv: &TimeSeries,
    params: &DispatchParams,
    opts: &GridOptions,
) -> Result<DispatchResult, DispatchError> {
    check_inputs(load, pv, params)?;
    if opts.mode == GridMode::Weighted {
        if opts.solver == GridSolver::FastPath {
            return Err(DispatchError::InvalidParams("the fast path only serves the cost-preserving mode".into()));
        }
        return solve_dispatch_lp(load, pv, params, Objective::Weighted, &opts.lp);
    }
    let cost_min = dispatch_cost_min(load, pv, params)?;
    if params.capacity_kwh == 0.0 || cost_min.peak_feed_in_kw == 0.0 {
        return Ok(cost_min);
    }
    let fast_ok = params.soc_initial_kwh == 0.0 && !params.cyclic_soc;
    let use_fast = match opts.solver {
        GridSolver::Lp => false,
        GridSolver::FastPath => {
            if !fast_ok {
                return Err(DispatchError::InvalidParams(
                    "the fast path needs an initially empty, non-cyclic battery".into(),
                ));
            }
            true
        }
        GridSolver::Auto => fast_ok && load.len() > LP_MAX_INTERVALS,
    };
    let tol = cost_tolerance(params, load.total());
    if use_fast {
        let dt = load.step_hours();
        return Ok(capped::min_cap_dispatch(
            load.values(),
            pv.values(),
            params,
            dt,
            cost_min.peak_feed_in_kw,
            cost_min.cost_eur,
            tol,
        )
        .unwrap_or(cost_min));
    }
    let mut model = build_dispatch_lp(load, pv, params, Objective::Weighted)?;
    let n = model.intervals;
    let mut row = Vec::with_capacity(2 * n);
    for t in 0..n {
        row.push((DispatchLp::supply(t), params.p_supply / 1000.0));
        row.push((DispatchLp::feed_in(t), -params.feed_in_tariff / 1000.0));
    }
    model.lp.add_row(&row, RowSense::Le, cost_min.cost_eur + tol)?;
    let sol = lpcore::solve(&model.lp, &opts.lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(DispatchError::Status(sol.status));
    }
    let result = settle_lp(load, pv, params, &sol.x, n);
    // Round-off in the LP can leave the settled schedule marginally worse
    // than the greedy optimum; keep whichever honours the cost bound.
    if result.cost_eur <= cost_min.cost_eur + 2.0 * tol && result.peak_feed_in_kw <= cost_min.peak_feed_in_kw {
        Ok(result)
    } else {
        Ok(cost_min)
    }
}

/// Cost slack (EUR) tolerated when pinning the cost optimum.
fn cost_tolerance(params: &DispatchParams, demand_kwh: f64) -> f64 {
    1e-9 * params.cost_normalizer(demand_kwh).max(1.0)
}

fn settle_lp(load: &TimeSeries, pv: &TimeSeries, params: &DispatchParams, x: &[f64], n: usize) -> DispatchResult {
    let charge = (0..n).map(|t| x[DispatchLp::charge(t)]).collect();
    let discharge = (0..n).map(|t| x[DispatchLp::discharge(t)]).collect();
    let soc_start = if params.cyclic_soc && n > 0 {
        x[DispatchLp::soc(n - 1)].clamp(0.0, params.capacity_kwh)
    } else {
        params.soc_initial_kwh
    };
    settle(load.values(), pv.values(), params, load.step_hours(), soc_start, charge, discharge)
}
