//! The study grid: every property under every PV and battery size, both
//! dispatch objectives and all remuneration scenarios, plus the appendix-style
//! mean tables and the per-size regression datasets.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Read, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dispatch::{
    dispatch_cost_min, dispatch_grid_friendly_with, DispatchError, DispatchParams, DispatchResult, GridMode,
    GridOptions, GridSolver, SystemConfig, LP_MAX_INTERVALS,
};
use crate::economics::{evaluate_scenario, CostModel, Scenario, ScenarioEconomics, TariffSchedule};
use crate::metrics::{compute_metrics, curtailment_losses, MetricSet, MetricsError};
use crate::profiles::{BuildingProfile, BuildingType, ProfileError, TimeSeries};
use crate::stats::{fit_ols, DesignMatrix, FeatureRow, RegressionFit, StatsError};

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("profile {id}: {source}")]
    Profile {
        id: String,
        #[source]
        source: ProfileError,
    },
    #[error("cell {cell}: {source}")]
    Dispatch {
        cell: String,
        #[source]
        source: DispatchError,
    },
    #[error("cell {cell}: {source}")]
    Metrics {
        cell: String,
        #[source]
        source: MetricsError,
    },
    #[error("cell {cell}: fast path and LP disagree on a {intervals}-interval window ({detail})")]
    Verification {
        cell: String,
        intervals: usize,
        detail: String,
    },
    #[error("no cell for {0}")]
    MissingCell(String),
    #[error("regression: {0}")]
    Stats(#[from] StatsError),
    #[error("cells file line {line}: {message}")]
    CellsFormat { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectiveKind {
    Cost,
    #[serde(alias = "grid_friendly")]
    Grid,
}

impl ObjectiveKind {
    pub fn name(self) -> &'static str {
        match self {
            ObjectiveKind::Cost => "cost",
            ObjectiveKind::Grid => "grid",
        }
    }
}

impl fmt::Display for ObjectiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ObjectiveKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cost" => Ok(ObjectiveKind::Cost),
            "grid" | "grid_friendly" => Ok(ObjectiveKind::Grid),
            _ => Err(format!("unknown objective {s:?} (expected cost or grid)")),
        }
    }
}

/// The size grid and the objective, scenario and cap subsets to run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    /// kW_p per MWh of annual consumption.
    pub pv_sizes: Vec<f64>,
    /// kWh per MWh of annual consumption.
    pub batt_sizes: Vec<f64>,
    pub objectives: Vec<ObjectiveKind>,
    pub scenarios: Vec<Scenario>,
    /// Feed-in caps as fractions of PV power. The first one applies to the
    /// cash flows; all are reported as curtailment losses.
    pub cap_fractions: Vec<f64>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            pv_sizes: vec![0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.4, 1.6, 1.8, 2.0],
            batt_sizes: vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.4, 1.6, 1.8, 2.0],
            objectives: vec![ObjectiveKind::Cost, ObjectiveKind::Grid],
            scenarios: Scenario::ALL.to_vec(),
            cap_fractions: vec![0.7],
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), SweepError> {
        let bad = |m: &str| Err(SweepError::Config(m.to_string()));
        if self.pv_sizes.is_empty()
            || self.batt_sizes.is_empty()
            || self.objectives.is_empty()
            || self.scenarios.is_empty()
            || self.cap_fractions.is_empty()
        {
            return bad("sweep lists must not be empty");
        }
        if self.pv_sizes.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return bad("PV sizes must be positive");
        }
        if self.batt_sizes.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return bad("battery sizes must be nonnegative");
        }
        if self.cap_fractions.iter().any(|c| !(*c > 0.0 && *c <= 1.0)) {
            return bad("cap fractions must lie in (0, 1]");
        }
        for list in [&self.pv_sizes, &self.batt_sizes] {
            if list.windows(2).any(|w| w[0] >= w[1]) {
                return bad("size lists must be strictly increasing");
            }
        }
        Ok(())
    }
}

/// Battery and price parameters shared by every cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatteryConfig {
    pub eta_ch: f64,
    pub eta_dch: f64,
    pub r_ch_max: f64,
    pub r_dch_max: f64,
    /// EUR/MWh.
    pub p_supply: f64,
    pub lambda: f64,
    /// Initial state of charge as a fraction of capacity.
    pub soc_initial_fraction: f64,
    pub cyclic_soc: bool,
}

impl Default for BatteryConfig {
    fn default() -> Self {
        let d = SystemConfig::default();
        BatteryConfig {
            eta_ch: d.eta_ch,
            eta_dch: d.eta_dch,
            r_ch_max: d.r_ch_max,
            r_dch_max: d.r_dch_max,
            p_supply: d.p_supply,
            lambda: d.lambda,
            soc_initial_fraction: 0.0,
            cyclic_soc: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub mode: GridMode,
    pub solver: GridSolver,
    /// Share of fast-path cells re-solved by the LP on a four-week window.
    pub verify_fraction: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            mode: GridMode::CostPreserving,
            solver: GridSolver::Auto,
            verify_fraction: 0.01,
        }
    }
}

/// Everything a sweep run reads from its configuration file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub battery: BatteryConfig,
    pub tariffs: TariffSchedule,
    pub costs: CostModel,
    pub sweep: SweepSpec,
    pub grid: GridConfig,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, SweepError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| SweepError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        self.sweep.validate()?;
        self.tariffs.validate().map_err(SweepError::Config)?;
        self.costs.validate().map_err(SweepError::Config)?;
        if !(0.0..=1.0).contains(&self.battery.soc_initial_fraction) {
            return Err(SweepError::Config("initial state-of-charge fraction must lie in [0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.grid.verify_fraction) {
            return Err(SweepError::Config("verify fraction must lie in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn system_config(&self, pv_size_rel: f64, batt_size_rel: f64) -> SystemConfig {
        let b = &self.battery;
        SystemConfig {
            pv_size_rel,
            batt_size_rel,
            eta_ch: b.eta_ch,
            eta_dch: b.eta_dch,
            r_ch_max: b.r_ch_max,
            r_dch_max: b.r_dch_max,
            p_supply: b.p_supply,
            tariffs: self.tariffs.clone(),
            lambda: b.lambda,
            soc_initial_kwh: 0.0,
            cyclic_soc: b.cyclic_soc,
        }
    }

    /// Absolute dispatch parameters of one property and size.
    pub fn dispatch_params(&self, annual_mwh: f64, pv_size_rel: f64, batt_size_rel: f64) -> DispatchParams {
        let mut params = self.system_config(pv_size_rel, batt_size_rel).resolve(annual_mwh);
        params.soc_initial_kwh = self.battery.soc_initial_fraction * params.capacity_kwh;
        params
    }
}

/// One property under one system size, objective and scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepCell {
    pub property_id: String,
    pub building_type: BuildingType,
    pub annual_mwh: f64,
    pub summer_share: f64,
    pub daytime_share: f64,
    pub pv_size_rel: f64,
    pub batt_size_rel: f64,
    pub objective: ObjectiveKind,
    pub scenario: Scenario,
    pub metrics: MetricSet,
    /// Curtailment loss fraction for each configured cap.
    pub curtailment: Vec<f64>,
    pub dispatch_cost_eur: f64,
    pub peak_feed_in_kw: f64,
    pub economics: ScenarioEconomics,
}

impl SweepCell {
    fn label(&self) -> String {
        cell_label(&self.property_id, self.pv_size_rel, self.batt_size_rel, self.objective)
    }
}

fn cell_label(id: &str, pv: f64, batt: f64, objective: ObjectiveKind) -> String {
    format!("{id} pv={pv} batt={batt} objective={objective}")
}

#[derive(Clone, Debug)]
pub struct SweepOutput {
    pub cells: Vec<SweepCell>,
    /// Fast-path dispatches re-checked against the LP.
    pub lp_checks: usize,
}

struct Unit {
    property: usize,
    pv: f64,
    batt: f64,
    objective: ObjectiveKind,
    verify: bool,
}

/// Runs the full grid. Cells come back sorted by property id, objective,
/// PV size, battery size and scenario, whatever the thread count.
pub fn run_sweep(profiles: &[BuildingProfile], pv_profile: &TimeSeries, config: &RunConfig) -> Result<SweepOutput, SweepError> {
    config.validate()?;
    let spec = &config.sweep;
    let mut order: Vec<usize> = (0..profiles.len()).collect();
    order.sort_by(|&a, &b| profiles[a].id.cmp(&profiles[b].id));
    if order.windows(2).any(|w| profiles[w[0]].id == profiles[w[1]].id) {
        return Err(SweepError::Config("property ids must be unique".into()));
    }
    for p in profiles {
        if !p.load.aligned_with(pv_profile) {
            return Err(SweepError::Config(format!(
                "PV profile does not share the calendar of property {}",
                p.id
            )));
        }
    }
    let stride = if config.grid.verify_fraction > 0.0 {
        (1.0 / config.grid.verify_fraction).round().max(1.0) as usize
    } else {
        usize::MAX
    };
    let mut objectives = spec.objectives.clone();
    objectives.sort();
    objectives.dedup();
    let mut scenarios = spec.scenarios.clone();
    scenarios.sort();
    scenarios.dedup();
    let mut units = Vec::new();
    let mut grid_units = 0usize;
    for &property in &order {
        for &objective in &objectives {
            for &pv in &spec.pv_sizes {
                for &batt in &spec.batt_sizes {
                    let mut verify = false;
                    if objective == ObjectiveKind::Grid && batt > 0.0 {
                        verify = grid_units % stride == 0;
                        grid_units += 1;
                    }
                    units.push(Unit {
                        property,
                        pv,
                        batt,
                        objective,
                        verify,
                    });
                }
            }
        }
    }
    let results: Vec<(Vec<SweepCell>, bool)> = units
        .par_iter()
        .map(|u| run_unit(&profiles[u.property], pv_profile, config, u, &scenarios))
        .collect::<Result<_, _>>()?;
    let lp_checks = results.iter().filter(|r| r.1).count();
    Ok(SweepOutput {
        cells: results.into_iter().flat_map(|r| r.0).collect(),
        lp_checks,
    })
}

fn run_unit(
    profile: &BuildingProfile,
    pv_norm: &TimeSeries,
    config: &RunConfig,
    unit: &Unit,
    scenarios: &[Scenario],
) -> Result<(Vec<SweepCell>, bool), SweepError> {
    let label = cell_label(&profile.id, unit.pv, unit.batt, unit.objective);
    let dispatch_err = |source| SweepError::Dispatch {
        cell: label.clone(),
        source,
    };
    let metrics_err = |source| SweepError::Metrics {
        cell: label.clone(),
        source,
    };
    let annual = profile.annual_consumption_mwh;
    let pv = pv_norm.scaled(unit.pv * annual).map_err(|source| SweepError::Profile {
        id: profile.id.clone(),
        source,
    })?;
    let load = &profile.load;
    let params = config.dispatch_params(annual, unit.pv, unit.batt);
    let mut netting_params = params.clone();
    netting_params.capacity_kwh = 0.0;
    netting_params.soc_initial_kwh = 0.0;
    netting_params.cyclic_soc = false;
    let netting = dispatch_cost_min(load, &pv, &netting_params).map_err(dispatch_err)?;
    let grid_opts = GridOptions {
        mode: config.grid.mode,
        solver: config.grid.solver,
        ..GridOptions::default()
    };
    let result = if unit.batt == 0.0 {
        netting.clone()
    } else {
        match unit.objective {
            ObjectiveKind::Cost => dispatch_cost_min(load, &pv, &params).map_err(dispatch_err)?,
            ObjectiveKind::Grid => dispatch_grid_friendly_with(load, &pv, &params, &grid_opts).map_err(dispatch_err)?,
        }
    };
    let uses_fast_path = unit.objective == ObjectiveKind::Grid
        && config.grid.mode == GridMode::CostPreserving
        && match config.grid.solver {
            GridSolver::FastPath => true,
            GridSolver::Auto => load.len() > LP_MAX_INTERVALS && params.soc_initial_kwh == 0.0 && !params.cyclic_soc,
            GridSolver::Lp => false,
        };
    let verified = unit.verify && uses_fast_path;
    if verified {
        verify_window(load, &pv, &params, &label)?;
    }
    let caps = &config.sweep.cap_fractions;
    let metrics = compute_metrics(&result, load.values(), pv.values(), &params, caps[0]).map_err(metrics_err)?;
    let netting_metrics =
        compute_metrics(&netting, load.values(), pv.values(), &netting_params, caps[0]).map_err(metrics_err)?;
    let curtailment = caps
        .iter()
        .map(|c| curtailment_losses(&result, pv.values(), params.pv_peak_kw, *c))
        .collect::<Result<Vec<_>, _>>()
        .map_err(metrics_err)?;
    let cells = scenarios
        .iter()
        .map(|&scenario| SweepCell {
            property_id: profile.id.clone(),
            building_type: profile.building_type,
            annual_mwh: annual,
            summer_share: profile.summer_share,
            daytime_share: profile.daytime_share,
            pv_size_rel: unit.pv,
            batt_size_rel: unit.batt,
            objective: unit.objective,
            scenario,
            metrics,
            curtailment: curtailment.clone(),
            dispatch_cost_eur: result.cost_eur,
            peak_feed_in_kw: result.peak_feed_in_kw,
            economics: evaluate_scenario(
                scenario,
                params.pv_peak_kw,
                params.capacity_kwh,
                &metrics.flows,
                &netting_metrics.flows,
                params.p_supply,
                &config.tariffs,
                &config.costs,
            ),
        })
        .collect();
    Ok((cells, verified))
}

/// Re-solves a four-week summer window with both the fast path and the LP
/// and requires agreement on peak and cost to 1e-4 relative.
pub fn verify_window(load: &TimeSeries, pv: &TimeSeries, params: &DispatchParams, label: &str) -> Result<(), SweepError> {
    let n = load.len().min(LP_MAX_INTERVALS);
    // June 1 in a 15-minute year, or as late as the series allows.
    let start = (151 * 96).min(load.len() - n);
    let window = |s: &TimeSeries| {
        TimeSeries::new(s.timestamp(start), s.step_minutes(), s.values()[start..start + n].to_vec())
            .expect("window of a valid series")
    };
    let (wl, wp) = (window(load), window(pv));
    let solve = |solver| {
        dispatch_grid_friendly_with(
            &wl,
            &wp,
            params,
            &GridOptions {
                solver,
                ..GridOptions::default()
            },
        )
        .map_err(|source| SweepError::Dispatch {
            cell: label.to_string(),
            source,
        })
    };
    let fast = solve(GridSolver::FastPath)?;
    let lp = solve(GridSolver::Lp)?;
    let omega = params.cost_normalizer(wl.total());
    let peak_scale = lp.peak_feed_in_kw.max(1e-3 * params.pv_peak_kw);
    let peak_gap = (fast.peak_feed_in_kw - lp.peak_feed_in_kw).abs() / peak_scale;
    let cost_gap = (fast.cost_eur - lp.cost_eur).abs() / lp.cost_eur.abs().max(omega);
    if peak_gap > 1e-4 || cost_gap > 1e-4 {
        return Err(SweepError::Verification {
            cell: label.to_string(),
            intervals: n,
            detail: format!(
                "peak {} vs {}, cost {} vs {}",
                fast.peak_feed_in_kw, lp.peak_feed_in_kw, fast.cost_eur, lp.cost_eur
            ),
        });
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TableMetric {
    Scr,
    Ssr,
    Irr,
    IrrBattery,
    Breakeven,
    MaxGridInput,
}

impl TableMetric {
    pub const ALL: [TableMetric; 6] = [
        TableMetric::Scr,
        TableMetric::Ssr,
        TableMetric::Irr,
        TableMetric::IrrBattery,
        TableMetric::Breakeven,
        TableMetric::MaxGridInput,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TableMetric::Scr => "scr",
            TableMetric::Ssr => "ssr",
            TableMetric::Irr => "irr",
            TableMetric::IrrBattery => "irr_battery",
            TableMetric::Breakeven => "breakeven",
            TableMetric::MaxGridInput => "max_grid_input",
        }
    }

    /// Cell value in table units (percent, or EUR/kWh for break-even prices).
    fn value(self, cell: &SweepCell) -> Option<f64> {
        match self {
            TableMetric::Scr => Some(100.0 * cell.metrics.scr),
            TableMetric::Ssr => Some(100.0 * cell.metrics.ssr),
            TableMetric::Irr => cell.economics.irr_system.map(|r| 100.0 * r),
            TableMetric::IrrBattery => cell.economics.irr_battery.map(|r| 100.0 * r),
            TableMetric::Breakeven => cell.economics.breakeven_batt_price,
            TableMetric::MaxGridInput => Some(100.0 * cell.metrics.peak_feed_in_pct_of_pv),
        }
    }
}

/// Mean over properties per size, rows = battery sizes, columns = PV sizes.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub metric: TableMetric,
    pub scenario: Scenario,
    pub objective: ObjectiveKind,
    pub batt_sizes: Vec<f64>,
    pub pv_sizes: Vec<f64>,
    /// `values[batt][pv]`; `None` where no property has a defined value.
    pub values: Vec<Vec<Option<f64>>>,
}

impl Table {
    /// `table_<metric>_<scenario>.csv`, with a `_grid` suffix for the
    /// grid-friendly objective.
    pub fn file_name(&self) -> String {
        match self.objective {
            ObjectiveKind::Cost => format!("table_{}_{}.csv", self.metric.name(), self.scenario),
            ObjectiveKind::Grid => format!("table_{}_{}_grid.csv", self.metric.name(), self.scenario),
        }
    }

    pub fn get(&self, batt: usize, pv: usize) -> Option<f64> {
        self.values[batt][pv]
    }

    pub fn write_csv<W: Write>(&self, out: W) -> io::Result<()> {
        let mut out = io::BufWriter::new(out);
        write!(out, "batt_kwh_per_mwh")?;
        for pv in &self.pv_sizes {
            write!(out, ",{pv:.1}")?;
        }
        writeln!(out)?;
        for (b, batt) in self.batt_sizes.iter().enumerate() {
            write!(out, "{batt:.1}")?;
            for v in &self.values[b] {
                match v {
                    Some(v) => write!(out, ",{v:.4}")?,
                    None => write!(out, ",")?,
                }
            }
            writeln!(out)?;
        }
        out.flush()
    }
}

fn size_index(list: &[f64], v: f64) -> Option<usize> {
    list.iter().position(|x| (x - v).abs() <= 1e-9)
}

/// Mean tables for every metric, scenario and objective in the spec.
pub fn aggregate_tables(cells: &[SweepCell], spec: &SweepSpec) -> Result<Vec<Table>, SweepError> {
    let mut ids: Vec<&str> = cells.iter().map(|c| c.property_id.as_str()).collect();
    ids.sort_unstable();
    ids.dedup();
    if ids.is_empty() {
        return Err(SweepError::MissingCell("any property".into()));
    }
    let mut objectives = spec.objectives.clone();
    objectives.sort();
    objectives.dedup();
    let mut scenarios = spec.scenarios.clone();
    scenarios.sort();
    scenarios.dedup();
    type Key = (ObjectiveKind, Scenario, usize, usize);
    let mut groups: BTreeMap<Key, Vec<&SweepCell>> = BTreeMap::new();
    for c in cells {
        let (Some(p), Some(b)) = (size_index(&spec.pv_sizes, c.pv_size_rel), size_index(&spec.batt_sizes, c.batt_size_rel))
        else {
            continue;
        };
        groups.entry((c.objective, c.scenario, b, p)).or_default().push(c);
    }
    let mut tables = Vec::new();
    for &objective in &objectives {
        for &scenario in &scenarios {
            for metric in TableMetric::ALL {
                let mut values = vec![vec![None; spec.pv_sizes.len()]; spec.batt_sizes.len()];
                for (b, row) in values.iter_mut().enumerate() {
                    for (p, slot) in row.iter_mut().enumerate() {
                        let group = groups.get(&(objective, scenario, b, p)).map(Vec::as_slice).unwrap_or(&[]);
                        if group.len() != ids.len() {
                            return Err(SweepError::MissingCell(format!(
                                "objective={objective} scenario={scenario} pv={} batt={} ({} of {} properties)",
                                spec.pv_sizes[p],
                                spec.batt_sizes[b],
                                group.len(),
                                ids.len()
                            )));
                        }
                        let defined: Vec<f64> = group.iter().filter_map(|c| metric.value(c)).collect();
                        if !defined.is_empty() {
                            *slot = Some(defined.iter().sum::<f64>() / defined.len() as f64);
                        }
                    }
                }
                tables.push(Table {
                    metric,
                    scenario,
                    objective,
                    batt_sizes: spec.batt_sizes.clone(),
                    pv_sizes: spec.pv_sizes.clone(),
                    values,
                });
            }
        }
    }
    Ok(tables)
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Long-format cell table, one row per cell. Numbers are written in their
/// shortest round-trip form.
pub fn write_cells_csv<W: Write>(cells: &[SweepCell], cap_fractions: &[f64], out: W) -> io::Result<()> {
    let mut out = io::BufWriter::new(out);
    write!(
        out,
        "property_id,building_type,annual_mwh,summer_share,daytime_share,pv_size_rel,batt_size_rel,objective,scenario,\
         scr,ssr,peak_feed_in_pct_of_pv"
    )?;
    for c in cap_fractions {
        write!(out, ",curtailment_{c}")?;
    }
    writeln!(
        out,
        ",self_consumed_kwh,feed_in_kwh,curtailed_kwh,dispatch_cost_eur,peak_feed_in_kw,annual_cashflow_eur,\
         i0_total_eur,i0_pv_eur,i0_batt_eur,irr_system,irr_battery,breakeven_batt_price_eur_per_kwh"
    )?;
    for c in cells {
        let m = &c.metrics;
        let e = &c.economics;
        write!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            c.property_id,
            c.building_type,
            c.annual_mwh,
            c.summer_share,
            c.daytime_share,
            c.pv_size_rel,
            c.batt_size_rel,
            c.objective,
            c.scenario,
            m.scr,
            m.ssr,
            m.peak_feed_in_pct_of_pv
        )?;
        for l in &c.curtailment {
            write!(out, ",{l}")?;
        }
        writeln!(
            out,
            ",{},{},{},{},{},{},{},{},{},{},{},{}",
            m.flows.self_consumed_kwh,
            m.flows.feed_in_kwh,
            m.flows.curtailed_kwh,
            c.dispatch_cost_eur,
            c.peak_feed_in_kw,
            e.annual_cashflow,
            e.i0_total,
            e.i0_pv,
            e.i0_batt,
            opt(e.irr_system),
            opt(e.irr_battery),
            opt(e.breakeven_batt_price)
        )?;
    }
    out.flush()
}

/// The columns of a cell needed for regression.
#[derive(Clone, Debug, PartialEq)]
pub struct CellSummary {
    pub property_id: String,
    pub features: FeatureRow,
    pub pv_size_rel: f64,
    pub batt_size_rel: f64,
    pub objective: ObjectiveKind,
    pub scenario: Scenario,
    pub scr: f64,
    pub ssr: f64,
    pub irr_system: Option<f64>,
}

impl From<&SweepCell> for CellSummary {
    fn from(c: &SweepCell) -> Self {
        CellSummary {
            property_id: c.property_id.clone(),
            features: FeatureRow {
                building_type: c.building_type,
                annual_consumption_mwh: c.annual_mwh,
                summer_share: c.summer_share,
                daytime_share: c.daytime_share,
            },
            pv_size_rel: c.pv_size_rel,
            batt_size_rel: c.batt_size_rel,
            objective: c.objective,
            scenario: c.scenario,
            scr: c.metrics.scr,
            ssr: c.metrics.ssr,
            irr_system: c.economics.irr_system,
        }
    }
}

/// Reads the regression columns back from a cells file.
pub fn read_cell_summaries<R: Read>(reader: R) -> Result<Vec<CellSummary>, SweepError> {
    let mut csv = csv::Reader::from_reader(reader);
    let headers = csv
        .headers()
        .map_err(|e| SweepError::CellsFormat {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| SweepError::CellsFormat {
            line: 1,
            message: format!("missing column {name}"),
        })
    };
    let idx = [
        col("property_id")?,
        col("building_type")?,
        col("annual_mwh")?,
        col("summer_share")?,
        col("daytime_share")?,
        col("pv_size_rel")?,
        col("batt_size_rel")?,
        col("objective")?,
        col("scenario")?,
        col("scr")?,
        col("ssr")?,
        col("irr_system")?,
    ];
    let mut out = Vec::new();
    for (k, record) in csv.records().enumerate() {
        let line = k + 2;
        let fail = |message: String| SweepError::CellsFormat { line, message };
        let record = record.map_err(|e| fail(e.to_string()))?;
        let field = |i: usize| record.get(idx[i]).unwrap_or("");
        let num = |i: usize| field(i).parse::<f64>().map_err(|_| fail(format!("bad number {:?}", field(i))));
        out.push(CellSummary {
            property_id: field(0).to_string(),
            features: FeatureRow {
                building_type: field(1).parse().map_err(|e: ProfileError| fail(e.to_string()))?,
                annual_consumption_mwh: num(2)?,
                summer_share: num(3)?,
                daytime_share: num(4)?,
            },
            pv_size_rel: num(5)?,
            batt_size_rel: num(6)?,
            objective: field(7).parse().map_err(fail)?,
            scenario: field(8).parse().map_err(fail)?,
            scr: num(9)?,
            ssr: num(10)?,
            irr_system: if field(11).is_empty() { None } else { Some(num(11)?) },
        });
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Response {
    Scr,
    Ssr,
    Irr,
}

impl Response {
    pub fn name(self) -> &'static str {
        match self {
            Response::Scr => "scr",
            Response::Ssr => "ssr",
            Response::Irr => "irr",
        }
    }

    /// Response in percent; `None` for an undefined IRR.
    fn value(self, c: &CellSummary) -> Option<f64> {
        match self {
            Response::Scr => Some(100.0 * c.scr),
            Response::Ssr => Some(100.0 * c.ssr),
            Response::Irr => c.irr_system.map(|r| 100.0 * r),
        }
    }
}

impl FromStr for Response {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "scr" => Ok(Response::Scr),
            "ssr" => Ok(Response::Ssr),
            "irr" => Ok(Response::Irr),
            _ => Err(format!("unknown response {s:?} (expected scr, ssr or irr)")),
        }
    }
}

/// Which cells a regression dataset is drawn from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SizeSelection {
    pub pv_size_rel: f64,
    pub batt_size_rel: f64,
    pub objective: ObjectiveKind,
    pub scenario: Scenario,
}

/// One row per property at the selected size: its features and the response.
/// Properties with an undefined response are left out.
pub fn feature_table(cells: &[CellSummary], sel: &SizeSelection, response: Response) -> (Vec<FeatureRow>, Vec<f64>) {
    let mut picked: Vec<&CellSummary> = cells
        .iter()
        .filter(|c| {
            (c.pv_size_rel - sel.pv_size_rel).abs() <= 1e-9
                && (c.batt_size_rel - sel.batt_size_rel).abs() <= 1e-9
                && c.objective == sel.objective
                && c.scenario == sel.scenario
        })
        .collect();
    picked.sort_by(|a, b| a.property_id.cmp(&b.property_id));
    picked
        .into_iter()
        .filter_map(|c| response.value(c).map(|y| (c.features, y)))
        .unzip()
}

/// Regression of `response` on building features at one system size.
pub fn regress(cells: &[CellSummary], sel: &SizeSelection, response: Response) -> Result<RegressionFit, SweepError> {
    let (rows, y) = feature_table(cells, sel, response);
    if rows.is_empty() {
        return Err(SweepError::MissingCell(format!(
            "pv={} batt={} objective={} scenario={}",
            sel.pv_size_rel, sel.batt_size_rel, sel.objective, sel.scenario
        )));
    }
    let design = DesignMatrix::from_features(&rows, y)?;
    Ok(fit_ols(&design)?)
}

pub fn regression_file_name(response: Response, sel: &SizeSelection) -> String {
    format!("regression_{}_pv{:.1}_batt{:.1}.csv", response.name(), sel.pv_size_rel, sel.batt_size_rel)
}

/// Coefficient rows followed by one summary row.
pub fn write_regression_csv<W: Write>(fit: &RegressionFit, out: W) -> io::Result<()> {
    let mut out = io::BufWriter::new(out);
    writeln!(out, "term,estimate,std_error,t_stat,p_value,r_squared,f_statistic,f_p_value,aic,n")?;
    for j in 0..fit.k {
        writeln!(
            out,
            "{},{},{},{},{},,,,,",
            fit.names[j], fit.coefficients[j], fit.std_errors[j], fit.t_stats[j], fit.p_values[j]
        )?;
    }
    writeln!(
        out,
        "summary,,,,,{},{},{},{},{}",
        fit.r_squared, fit.f_statistic, fit.f_p_value, fit.aic, fit.n
    )?;
    out.flush()
}

/// Writes `cells.csv` and every table into `dir`.
pub fn write_outputs(output: &SweepOutput, spec: &SweepSpec, dir: &std::path::Path) -> Result<Vec<String>, SweepError> {
    std::fs::create_dir_all(dir)?;
    let mut written = vec!["cells.csv".to_string()];
    write_cells_csv(&output.cells, &spec.cap_fractions, std::fs::File::create(dir.join("cells.csv"))?)?;
    for table in aggregate_tables(&output.cells, spec)? {
        let name = table.file_name();
        table.write_csv(std::fs::File::create(dir.join(&name))?)?;
        written.push(name);
    }
    Ok(written)
}

/// The dispatch a sweep cell is built from, for tracing single cells.
pub fn dispatch_cell(
    profile: &BuildingProfile,
    pv_norm: &TimeSeries,
    config: &RunConfig,
    pv_size_rel: f64,
    batt_size_rel: f64,
    objective: ObjectiveKind,
) -> Result<DispatchResult, SweepError> {
    let label = cell_label(&profile.id, pv_size_rel, batt_size_rel, objective);
    let pv = pv_norm
        .scaled(pv_size_rel * profile.annual_consumption_mwh)
        .map_err(|source| SweepError::Profile {
            id: profile.id.clone(),
            source,
        })?;
    let params = config.dispatch_params(profile.annual_consumption_mwh, pv_size_rel, batt_size_rel);
    let opts = GridOptions {
        mode: config.grid.mode,
        solver: config.grid.solver,
        ..GridOptions::default()
    };
    match objective {
        ObjectiveKind::Cost => dispatch_cost_min(&profile.load, &pv, &params),
        ObjectiveKind::Grid => dispatch_grid_friendly_with(&profile.load, &pv, &params, &opts),
    }
    .map_err(|source| SweepError::Dispatch { cell: label, source })
}

impl fmt::Display for SweepCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} scenario={}", self.label(), self.scenario)
    }
}
