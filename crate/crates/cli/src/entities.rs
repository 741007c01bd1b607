//! Entity configuration: a versioned JSON document describing either a
//! residential community or a microgrid, plus scenario and solver controls.

use std::path::{Path, PathBuf};

use gridsched_core::devices::{BatterySpec, ConventionalUnit, HvacSpec, SolarSpec, WindSpec};
use gridsched_core::scenario::{ForecastSeries, UncertaintySpec};
use gridsched_core::sched_evhvac::{CommunityProblem, EvAssignment, Household};
use gridsched_core::sched_mgbid::{Building, MarketParams, MicrogridConfig};
use gridsched_core::thermal::{BuildingThermalParams, ThermalState};
use gridsched_optmodel::SolverOptions;
use serde::Deserialize;

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    EvHvac,
    MgBid,
}

/// One value for every slot or a per-slot list.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Series {
    Scalar(f64),
    Slots(Vec<f64>),
}

impl Series {
    fn expand(&self, nh: usize) -> Result<Vec<f64>, String> {
        match self {
            Series::Scalar(v) => Ok(vec![*v; nh]),
            Series::Slots(v) if v.len() == nh => Ok(v.clone()),
            Series::Slots(v) => Err(format!("has {} entries, the forecast has {nh} slots", v.len())),
        }
    }

    fn scale(&mut self, k: f64) {
        match self {
            Series::Scalar(v) => *v *= k,
            Series::Slots(v) => v.iter_mut().for_each(|x| *x *= k),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum InitialTemp {
    Uniform(f64),
    State(ThermalState),
}

impl InitialTemp {
    fn state(&self) -> ThermalState {
        match self {
            InitialTemp::Uniform(t) => ThermalState::uniform(*t),
            InitialTemp::State(s) => *s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HvacConfig {
    pub rated_power_kw: f64,
    #[serde(default)]
    pub thermal: BuildingThermalParams,
    pub desired_temp_c: Series,
    pub max_deviation_c: Series,
    #[serde(default = "zero_series")]
    pub discomfort_weight: Series,
    /// Defaults to occupied in every slot.
    #[serde(default)]
    pub occupancy: Option<Vec<bool>>,
}

fn zero_series() -> Series {
    Series::Scalar(0.0)
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HouseholdConfig {
    pub id: String,
    pub hvac: HvacConfig,
    #[serde(default)]
    pub evs: Vec<EvAssignment>,
    pub initial_temp_c: InitialTemp,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommunityConfig {
    #[serde(default = "one_hour")]
    pub dt_h: f64,
    pub grid_limit_kw: Series,
    #[serde(default)]
    pub v2g_allowed: bool,
    pub households: Vec<HouseholdConfig>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildingConfig {
    pub hvac: HvacConfig,
    pub initial_temp_c: InitialTemp,
    #[serde(default = "one_building")]
    pub count: u32,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketConfig {
    pub bid_deviation_penalty: Series,
    pub value_of_lost_load: Series,
    #[serde(default = "zero_series")]
    pub wind_curtail_cost: Series,
    #[serde(default = "zero_series")]
    pub solar_curtail_cost: Series,
    #[serde(default)]
    pub line_capacity_kw: Option<Series>,
    #[serde(default = "zero_series")]
    pub max_shed_kw: Series,
    #[serde(default = "zero_series")]
    pub max_loss_of_load_ratio: Series,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MicrogridEntities {
    #[serde(default = "one_hour")]
    pub dt_h: f64,
    #[serde(default)]
    pub units: Vec<ConventionalUnit>,
    #[serde(default)]
    pub wind: Vec<WindSpec>,
    #[serde(default)]
    pub solar: Vec<SolarSpec>,
    #[serde(default)]
    pub batteries: Vec<BatterySpec>,
    #[serde(default)]
    pub buildings: Vec<BuildingConfig>,
    pub market: MarketConfig,
    /// Rescales the forecast non-HVAC load so its energy is this multiple of
    /// the forecast wind and solar energy.
    #[serde(default)]
    pub load_scaling: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UncertaintyOverrides {
    pub wind_speed: Option<f64>,
    pub nonhvac_load: Option<f64>,
    pub irradiance: Option<f64>,
    pub ambient: Option<f64>,
    pub price_da: Option<f64>,
    pub price_rt: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioControls {
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_keep")]
    pub keep: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub uncertainty: UncertaintyOverrides,
    #[serde(default = "unit_scale")]
    pub uncertainty_scaling: f64,
    /// Per-series weights in the scenario distance, in the order
    /// price_da, price_rt, ambient, irradiance, wind, load.
    #[serde(default = "unit_weights")]
    pub distance_weights: [f64; 6],
}

impl Default for ScenarioControls {
    fn default() -> Self {
        ScenarioControls {
            samples: default_samples(),
            keep: default_keep(),
            seed: 0,
            uncertainty: UncertaintyOverrides::default(),
            uncertainty_scaling: 1.0,
            distance_weights: unit_weights(),
        }
    }
}

impl ScenarioControls {
    pub fn uncertainty(&self) -> UncertaintySpec {
        let d = UncertaintySpec::default();
        let o = &self.uncertainty;
        UncertaintySpec {
            wind_speed: o.wind_speed.unwrap_or(d.wind_speed),
            nonhvac_load: o.nonhvac_load.unwrap_or(d.nonhvac_load),
            irradiance: o.irradiance.unwrap_or(d.irradiance),
            ambient: o.ambient.unwrap_or(d.ambient),
            price_da: o.price_da.unwrap_or(d.price_da),
            price_rt: o.price_rt.unwrap_or(d.price_rt),
        }
        .scaled(self.uncertainty_scaling)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub feas_tol: Option<f64>,
    pub opt_tol: Option<f64>,
    pub int_tol: Option<f64>,
    pub gap_tol: Option<f64>,
    pub node_limit: Option<usize>,
    pub iteration_limit: Option<usize>,
}

impl SolverConfig {
    pub fn options(&self) -> SolverOptions {
        let d = SolverOptions::default();
        SolverOptions {
            feas_tol: self.feas_tol.unwrap_or(d.feas_tol),
            opt_tol: self.opt_tol.unwrap_or(d.opt_tol),
            int_tol: self.int_tol.unwrap_or(d.int_tol),
            gap_tol: self.gap_tol.unwrap_or(d.gap_tol),
            node_limit: self.node_limit.unwrap_or(d.node_limit),
            iteration_limit: self.iteration_limit.unwrap_or(d.iteration_limit),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntityFile {
    pub schema_version: u32,
    pub problem: ProblemKind,
    #[serde(default)]
    pub community: Option<CommunityConfig>,
    #[serde(default)]
    pub microgrid: Option<MicrogridEntities>,
    #[serde(default)]
    pub scenarios: ScenarioControls,
    #[serde(default)]
    pub solver: SolverConfig,
}

fn one_hour() -> f64 {
    1.0
}

fn one_building() -> u32 {
    1
}

fn unit_scale() -> f64 {
    1.0
}

fn unit_weights() -> [f64; 6] {
    [1.0; 6]
}

fn default_samples() -> usize {
    3000
}

fn default_keep() -> usize {
    15
}

/// Parsed entity file remembering where it came from, for error paths.
#[derive(Debug, Clone)]
pub struct Entities {
    pub file: PathBuf,
    pub doc: EntityFile,
}

pub fn load_entities(path: &Path) -> Result<Entities, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_entities(&text, path)
}

pub fn parse_entities(text: &str, path: &Path) -> Result<Entities, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: EntityFile = serde_path_to_error::deserialize(de).map_err(|e| CliError::Config {
        file: path.to_path_buf(),
        path: display_path(&e.path().to_string()),
        message: e.inner().to_string(),
    })?;
    let ents = Entities { file: path.to_path_buf(), doc };
    if ents.doc.schema_version != SCHEMA_VERSION {
        return Err(ents.err(
            "schema_version",
            format!("unsupported schema version {}, expected {SCHEMA_VERSION}", ents.doc.schema_version),
        ));
    }
    let section = match ents.doc.problem {
        ProblemKind::EvHvac => ents.doc.community.is_some().then_some(()).ok_or("community"),
        ProblemKind::MgBid => ents.doc.microgrid.is_some().then_some(()).ok_or("microgrid"),
    };
    if let Err(name) = section {
        return Err(ents.err(name, format!("section `{name}` is required for this problem kind")));
    }
    let sc = &ents.doc.scenarios;
    if sc.samples == 0 || sc.keep == 0 || sc.keep > sc.samples {
        return Err(ents.err("scenarios", format!("need 1 ≤ keep ≤ samples, got keep {} of {}", sc.keep, sc.samples)));
    }
    if let Err(e) = sc.uncertainty().validate() {
        return Err(ents.err("scenarios.uncertainty", e.to_string()));
    }
    if sc.distance_weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(ents.err("scenarios.distance_weights", "weights must be non-negative"));
    }
    Ok(ents)
}

fn display_path(p: &str) -> String {
    if p == "." {
        "$".into()
    } else {
        p.to_string()
    }
}

fn hvac_spec(h: &HvacConfig, nh: usize, at: &str) -> Result<HvacSpec, (String, String)> {
    let series = |s: &Series, name: &str| s.expand(nh).map_err(|e| (format!("{at}.{name}"), e));
    let occupancy = match &h.occupancy {
        Some(o) if o.len() != nh => {
            return Err((format!("{at}.occupancy"), format!("has {} entries, the forecast has {nh} slots", o.len())))
        }
        Some(o) => o.clone(),
        None => vec![true; nh],
    };
    let spec = HvacSpec {
        rated_power: h.rated_power_kw,
        thermal: h.thermal,
        desired_temp: series(&h.desired_temp_c, "desired_temp_c")?,
        max_deviation: series(&h.max_deviation_c, "max_deviation_c")?,
        occupancy,
        discomfort_weight: series(&h.discomfort_weight, "discomfort_weight")?,
    };
    spec.validate(nh).map_err(|e| (at.to_string(), e.to_string()))?;
    Ok(spec)
}

impl Entities {
    pub fn kind(&self) -> ProblemKind {
        self.doc.problem
    }

    pub fn solver(&self) -> SolverOptions {
        self.doc.solver.options()
    }

    pub fn err(&self, path: impl Into<String>, message: impl Into<String>) -> CliError {
        CliError::Config { file: self.file.clone(), path: path.into(), message: message.into() }
    }

    fn located(&self, r: Result<HvacSpec, (String, String)>) -> Result<HvacSpec, CliError> {
        r.map_err(|(p, m)| self.err(p, m))
    }

    /// Community problem over the forecast horizon, validated entity by entity.
    pub fn community(&self, forecast: &ForecastSeries) -> Result<CommunityProblem, CliError> {
        let c = self.doc.community.as_ref().ok_or_else(|| self.err("community", "section is missing"))?;
        let nh = forecast.slots();
        if !(c.dt_h > 0.0 && c.dt_h.is_finite()) {
            return Err(self.err("community.dt_h", "slot length must be positive"));
        }
        let grid_limit = c.grid_limit_kw.expand(nh).map_err(|e| self.err("community.grid_limit_kw", e))?;
        if grid_limit.iter().any(|g| !(*g >= 0.0)) {
            return Err(self.err("community.grid_limit_kw", "grid limit must be non-negative"));
        }
        if c.households.is_empty() {
            return Err(self.err("community.households", "at least one household is required"));
        }
        let mut households = Vec::with_capacity(c.households.len());
        for (j, h) in c.households.iter().enumerate() {
            let at = format!("community.households[{j}]");
            let hvac = self.located(hvac_spec(&h.hvac, nh, &format!("{at}.hvac")))?;
            for (k, ev) in h.evs.iter().enumerate() {
                ev.spec.validate().map_err(|e| self.err(format!("{at}.evs[{k}].spec"), e.to_string()))?;
                ev.trips.validate(nh).map_err(|e| self.err(format!("{at}.evs[{k}].trips"), e.to_string()))?;
            }
            households.push(Household {
                id: h.id.clone(),
                hvac,
                evs: h.evs.clone(),
                initial_thermal: h.initial_temp_c.state(),
            });
        }
        let problem = CommunityProblem {
            households,
            prices: forecast.price_da.clone(),
            ambient: forecast.ambient.clone(),
            irradiance: forecast.irradiance.clone(),
            dt: c.dt_h,
            grid_limit,
            v2g_allowed: c.v2g_allowed,
        };
        problem.validate().map_err(|e| self.err("community", e.to_string()))?;
        Ok(problem)
    }

    pub fn microgrid_section(&self) -> Result<&MicrogridEntities, CliError> {
        self.doc.microgrid.as_ref().ok_or_else(|| self.err("microgrid", "section is missing"))
    }

    /// Microgrid over the forecast horizon, validated entity by entity.
    pub fn microgrid(&self, nh: usize) -> Result<MicrogridConfig, CliError> {
        let m = self.microgrid_section()?;
        microgrid_from(self, m, nh)
    }

    pub fn with_microgrid(&self, m: MicrogridEntities) -> Entities {
        let mut out = self.clone();
        out.doc.microgrid = Some(m);
        out
    }
}

fn microgrid_from(ents: &Entities, m: &MicrogridEntities, nh: usize) -> Result<MicrogridConfig, CliError> {
    let e = |p: String, msg: String| ents.err(p, msg);
    if !(m.dt_h > 0.0 && m.dt_h.is_finite()) {
        return Err(e("microgrid.dt_h".into(), "slot length must be positive".into()));
    }
    for (i, u) in m.units.iter().enumerate() {
        u.validate().map_err(|x| e(format!("microgrid.units[{i}]"), x.to_string()))?;
    }
    for (i, w) in m.wind.iter().enumerate() {
        w.validate().map_err(|x| e(format!("microgrid.wind[{i}]"), x.to_string()))?;
    }
    for (i, s) in m.solar.iter().enumerate() {
        s.validate().map_err(|x| e(format!("microgrid.solar[{i}]"), x.to_string()))?;
    }
    for (i, b) in m.batteries.iter().enumerate() {
        b.validate().map_err(|x| e(format!("microgrid.batteries[{i}]"), x.to_string()))?;
    }
    let mut buildings = Vec::with_capacity(m.buildings.len());
    for (i, b) in m.buildings.iter().enumerate() {
        let at = format!("microgrid.buildings[{i}]");
        if b.count == 0 {
            return Err(e(format!("{at}.count"), "building count must be at least one".into()));
        }
        let hvac = ents.located(hvac_spec(&b.hvac, nh, &format!("{at}.hvac")))?;
        buildings.push(Building { hvac, initial: b.initial_temp_c.state(), count: b.count });
    }
    let mk = &m.market;
    let series = |s: &Series, name: &str| s.expand(nh).map_err(|x| e(format!("microgrid.market.{name}"), x));
    let market = MarketParams {
        bid_deviation_penalty: series(&mk.bid_deviation_penalty, "bid_deviation_penalty")?,
        value_of_lost_load: series(&mk.value_of_lost_load, "value_of_lost_load")?,
        wind_curtail_cost: series(&mk.wind_curtail_cost, "wind_curtail_cost")?,
        solar_curtail_cost: series(&mk.solar_curtail_cost, "solar_curtail_cost")?,
        line_capacity: mk.line_capacity_kw.as_ref().map(|s| series(s, "line_capacity_kw")).transpose()?,
        max_shed: series(&mk.max_shed_kw, "max_shed_kw")?,
        max_loss_of_load_ratio: series(&mk.max_loss_of_load_ratio, "max_loss_of_load_ratio")?,
    };
    let mg = MicrogridConfig {
        units: m.units.clone(),
        wind: m.wind.clone(),
        solar: m.solar.clone(),
        batteries: m.batteries.clone(),
        buildings,
        market,
        dt: m.dt_h,
        horizon: nh,
    };
    mg.validate().map_err(|x| e("microgrid.market".into(), x.to_string()))?;
    Ok(mg)
}

/// Scales the market's shed limit together with the load when the load
/// scaling factor changes it, so the limit stays a share of demand.
pub fn scale_shed_limit(m: &mut MicrogridEntities, k: f64) {
    m.market.max_shed_kw.scale(k);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Entities, CliError> {
        parse_entities(text, Path::new("cfg.json"))
    }

    fn path_of(err: CliError) -> String {
        match err {
            CliError::Config { path, .. } => path,
            other => panic!("expected a config error, got {other}"),
        }
    }

    const HOUSE: &str = r#"{
        "schema_version": 1,
        "problem": "ev-hvac",
        "community": {
            "grid_limit_kw": 25,
            "households": [{
                "id": "h1",
                "hvac": { "rated_power_kw": 4, "desired_temp_c": 23, "max_deviation_c": 2, "discomfort_weight": 0.01 },
                "initial_temp_c": 23,
                "evs": [{
                    "spec": { "capacity": 24, "eta_c": 0.9, "eta_d": 0.9, "p_charge_max": 6, "p_discharge_max": 6,
                              "soc_min": 0.2, "soc_max": 0.9, "travel_efficiency": 0.316,
                              "distance_unit": "miles", "soc_initial": 0.5 },
                    "trips": { "trips": [{ "depart_slot": 2, "return_slot": 3, "distance": 10 }] }
                }]
            }]
        }
    }"#;

    fn flat_forecast(nh: usize) -> ForecastSeries {
        ForecastSeries {
            price_da: vec![0.1; nh],
            price_rt: vec![0.1; nh],
            ambient: vec![30.0; nh],
            irradiance: vec![0.2; nh],
            wind_speed: vec![5.0; nh],
            nonhvac_load: vec![100.0; nh],
        }
    }

    #[test]
    fn community_round_trip() {
        let e = parse(HOUSE).unwrap();
        assert_eq!(e.kind(), ProblemKind::EvHvac);
        let p = e.community(&flat_forecast(6)).unwrap();
        assert_eq!(p.households[0].hvac.desired_temp, vec![23.0; 6]);
        assert_eq!(p.grid_limit, vec![25.0; 6]);
        assert_eq!(p.households[0].hvac.thermal, BuildingThermalParams::default());
    }

    #[test]
    fn inverted_soc_window_points_at_the_ev() {
        let text = HOUSE.replace("\"soc_min\": 0.2", "\"soc_min\": 0.95");
        let err = parse(&text).unwrap().community(&flat_forecast(6)).unwrap_err();
        assert_eq!(path_of(err), "community.households[0].evs[0].spec");
    }

    #[test]
    fn type_errors_carry_the_document_path() {
        let text = HOUSE.replace("\"rated_power_kw\": 4", "\"rated_power_kw\": \"four\"");
        assert_eq!(path_of(parse(&text).unwrap_err()), "community.households[0].hvac.rated_power_kw");
    }

    #[test]
    fn wrong_series_length_is_located() {
        let text = HOUSE.replace("\"desired_temp_c\": 23", "\"desired_temp_c\": [23, 23]");
        let err = parse(&text).unwrap().community(&flat_forecast(6)).unwrap_err();
        assert_eq!(path_of(err), "community.households[0].hvac.desired_temp_c");
    }

    #[test]
    fn unknown_schema_version_is_refused() {
        let text = HOUSE.replace("\"schema_version\": 1", "\"schema_version\": 9");
        assert_eq!(path_of(parse(&text).unwrap_err()), "schema_version");
    }

    #[test]
    fn missing_section_is_named() {
        let text = HOUSE.replace("\"problem\": \"ev-hvac\"", "\"problem\": \"mg-bid\"");
        assert_eq!(path_of(parse(&text).unwrap_err()), "microgrid");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = HOUSE.replace("\"v2g\": 1,", "").replace("\"grid_limit_kw\": 25", "\"grid_limit_kw\": 25, \"grid\": 1");
        assert_eq!(path_of(parse(&text).unwrap_err()), "community.grid");
    }

    #[test]
    fn shipped_microgrid_carries_the_reference_devices() {
        let ents = parse(include_str!("../tests/data/microgrid.json")).unwrap();
        let mg = ents.microgrid(24).unwrap();
        let fixed: Vec<f64> = mg.units.iter().map(|u| u.fixed_cost).collect();
        let marginal: Vec<f64> = mg.units.iter().map(|u| u.segments[0].marginal_cost).collect();
        let status: Vec<i64> = mg.units.iter().map(|u| u.initial_status).collect();
        assert_eq!(fixed, [30.0, 50.0, 80.0]);
        assert_eq!(marginal, [0.13, 0.35, 0.5]);
        assert_eq!(status, [-2, -1, -1]);
        let b = &mg.batteries[0];
        assert_eq!(
            (b.capacity, b.e_min, b.e_max, b.p_charge_max, b.p_discharge_max, b.degradation_cost),
            (200.0, 40.0, 180.0, 100.0, 100.0, 0.00027)
        );
        assert_eq!(mg.buildings[0].count, 100);
    }
}
