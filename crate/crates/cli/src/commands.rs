//! Subcommand implementations. Each writes its result files into the output
//! directory and returns their names; the manifest is written by the caller.

use std::path::{Path, PathBuf};

use gridsched_core::devices::{solar_available_power, wind_available_power};
use gridsched_core::scenario::{
    fast_forward_select, kantorovich_distance, read_scenarios_csv, reduce_fast_forward, sample_scenarios,
    write_scenarios_csv, DistanceMetric, ForecastSeries, ScenarioSet, SeriesKind,
};
use gridsched_core::sched_evhvac::{
    build_joint_model, cost_saving, solve_schedule, uncontrolled_baseline, CommunityProblem, EvHvacSchedule,
};
use gridsched_core::sched_mgbid::{
    build_two_stage_model, check_feasibility, run_scheme, solve_bidding, BiddingSolution, MicrogridConfig,
    ProfitReport, Scheme,
};
use gridsched_optmodel::{export_lp_text, SolverOptions};
use serde::Serialize;

use crate::entities::{load_entities, scale_shed_limit, Entities, MicrogridEntities, ProblemKind};
use crate::error::CliError;
use crate::forecast::load_forecasts;
use crate::output::{sha256_file, InputDigest, Manifest, OutDir, Table, Tolerances};

/// Overrides from the command line for the scenario controls in the config.
#[derive(Debug, Clone, Copy, Default)]
pub struct ScenarioFlags {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub keep: Option<usize>,
}

/// Effective scenario settings after applying flags over the config.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioPlan {
    pub seed: u64,
    pub samples: usize,
    pub keep: usize,
    pub uncertainty_scaling: f64,
}

/// Bookkeeping shared by every command: inputs, outputs and the manifest.
pub struct Run {
    pub out: OutDir,
    command: &'static str,
    inputs: Vec<InputDigest>,
    outputs: Vec<String>,
    plan: Option<ScenarioPlan>,
    solver: SolverOptions,
}

impl Run {
    pub fn new(command: &'static str, out: &Path) -> Result<Self, CliError> {
        Ok(Run {
            out: OutDir::create(out)?,
            command,
            inputs: Vec::new(),
            outputs: Vec::new(),
            plan: None,
            solver: SolverOptions::default(),
        })
    }

    pub fn input(&mut self, role: &'static str, path: &Path) -> Result<(), CliError> {
        self.inputs.push(InputDigest { role, path: path.to_path_buf(), sha256: sha256_file(path)? });
        Ok(())
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        self.out.write(name, bytes)?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        self.write(name, &crate::output::to_json_bytes(value))
    }

    pub fn set_plan(&mut self, p: ScenarioPlan) {
        self.plan = Some(p);
    }

    pub fn record_output(&mut self, name: String) {
        self.outputs.push(name);
    }

    /// Writes the manifest last and returns its path.
    pub fn finish(mut self) -> Result<PathBuf, CliError> {
        self.outputs.sort();
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: self.command.to_string(),
            seed: self.plan.map(|p| p.seed),
            scenarios_sampled: self.plan.map(|p| p.samples),
            scenarios_kept: self.plan.map(|p| p.keep),
            tolerances: Tolerances::from(&self.solver),
            inputs: self.inputs,
            outputs: self.outputs,
        };
        self.out.write_json("manifest.json", &manifest)?;
        Ok(self.out.path("manifest.json"))
    }
}

/// Config, forecast and derived settings of one run.
pub struct Inputs {
    pub entities: Entities,
    pub forecast: ForecastSeries,
}

pub fn read_inputs(run: &mut Run, config: &Path, forecasts: &Path) -> Result<Inputs, CliError> {
    let entities = load_entities(config)?;
    let forecast = load_forecasts(forecasts)?;
    run.input("config", config)?;
    run.input("forecasts", forecasts)?;
    run.solver = entities.solver();
    Ok(Inputs { entities, forecast })
}

fn require(ents: &Entities, kind: ProblemKind, command: &str) -> Result<(), CliError> {
    if ents.kind() == kind {
        return Ok(());
    }
    let want = match kind {
        ProblemKind::EvHvac => "ev-hvac",
        ProblemKind::MgBid => "mg-bid",
    };
    Err(CliError::Usage(format!("`{command}` needs a configuration with problem `{want}`")))
}

pub fn plan(ents: Option<&Entities>, flags: ScenarioFlags) -> Result<ScenarioPlan, CliError> {
    let base = ents.map(|e| e.doc.scenarios.clone()).unwrap_or_default();
    let p = ScenarioPlan {
        seed: flags.seed.unwrap_or(base.seed),
        samples: flags.samples.unwrap_or(base.samples),
        keep: flags.keep.unwrap_or(base.keep),
        uncertainty_scaling: base.uncertainty_scaling,
    };
    if p.samples == 0 || p.keep == 0 || p.keep > p.samples {
        return Err(CliError::Usage(format!("need 1 ≤ K ≤ N scenarios, got K = {} and N = {}", p.keep, p.samples)));
    }
    Ok(p)
}

// ------------------------------------------------------------------ ev-hvac

#[derive(Debug, Serialize)]
pub struct ScheduleSummary {
    pub electricity_cost: f64,
    pub discomfort_cost: f64,
    pub total_cost: f64,
    pub baseline_electricity_cost: f64,
    pub cost_saving_pct: Option<f64>,
    pub max_deviation_c: f64,
    pub warnings: Vec<String>,
}

/// Largest |T_in − T_desired| over occupied slots of every household.
pub fn max_comfort_deviation(p: &CommunityProblem, s: &EvHvacSchedule) -> f64 {
    let mut worst: f64 = 0.0;
    for (h, hs) in p.households.iter().zip(&s.households) {
        for t in 0..p.horizon() {
            if h.hvac.occupancy[t] {
                worst = worst.max((hs.indoor_temp[t + 1] - h.hvac.desired_temp[t]).abs());
            }
        }
    }
    worst
}

pub fn schedule(config: &Path, forecasts: &Path, out: &Path) -> Result<PathBuf, CliError> {
    let mut run = Run::new("schedule", out)?;
    let inp = read_inputs(&mut run, config, forecasts)?;
    require(&inp.entities, ProblemKind::EvHvac, "schedule")?;
    let problem = inp.entities.community(&inp.forecast)?;
    let opt = solve_schedule(&problem)?;
    let base = uncontrolled_baseline(&problem, &opt.terminal_soc())?;
    let mut warnings = opt.warnings.clone();
    warnings.extend(base.warnings.iter().map(|w| format!("baseline: {w}")));
    let saving = match cost_saving(&opt, &base) {
        Ok(v) => Some(v),
        Err(e) => {
            warnings.push(e.to_string());
            None
        }
    };

    let nh = problem.horizon();
    let mut grid = Table::new(&["slot", "price", "grid_kw", "baseline_grid_kw"]);
    for t in 0..nh {
        grid.row(vec![(t + 1).into(), problem.prices[t].into(), opt.grid_import[t].into(), base.grid_import[t].into()]);
    }
    let mut houses = Table::new(&["household", "slot", "hvac_kw", "indoor_c", "baseline_hvac_kw", "baseline_indoor_c"]);
    let mut evs = Table::new(&["household", "ev", "slot", "charge_kw", "discharge_kw", "soc"]);
    for (h, b) in opt.households.iter().zip(&base.households) {
        for t in 0..nh {
            houses.row(vec![
                h.id.as_str().into(),
                (t + 1).into(),
                h.hvac_power[t].into(),
                h.indoor_temp[t + 1].into(),
                b.hvac_power[t].into(),
                b.indoor_temp[t + 1].into(),
            ]);
        }
        for (k, ev) in h.evs.iter().enumerate() {
            for t in 0..nh {
                evs.row(vec![
                    h.id.as_str().into(),
                    k.into(),
                    (t + 1).into(),
                    ev.charge[t].into(),
                    ev.discharge[t].into(),
                    ev.soc[t + 1].into(),
                ]);
            }
        }
    }
    run.write("grid.csv", &grid.into_bytes())?;
    run.write("households.csv", &houses.into_bytes())?;
    run.write("evs.csv", &evs.into_bytes())?;
    run.write_json(
        "summary.json",
        &ScheduleSummary {
            electricity_cost: opt.electricity_cost,
            discomfort_cost: opt.discomfort_cost,
            total_cost: opt.total_cost,
            baseline_electricity_cost: base.electricity_cost,
            cost_saving_pct: saving,
            max_deviation_c: max_comfort_deviation(&problem, &opt),
            warnings,
        },
    )?;
    run.finish()
}

// ------------------------------------------------------------------ microgrid

/// Forecast wind and solar energy of the microgrid's plants.
fn renewable_energy(m: &MicrogridEntities, f: &ForecastSeries) -> f64 {
    (0..f.slots())
        .map(|t| {
            m.wind.iter().map(|w| wind_available_power(w, f.wind_speed[t])).sum::<f64>()
                + m.solar.iter().map(|s| solar_available_power(s, f.irradiance[t], f.ambient[t])).sum::<f64>()
        })
        .sum::<f64>()
        * m.dt_h
}

/// Applies a load scaling factor: the forecast non-HVAC load and the shed
/// limit are rescaled so load energy equals `lsf` times renewable energy.
pub fn apply_load_scaling(
    ents: &Entities,
    forecast: &ForecastSeries,
    lsf: f64,
) -> Result<(Entities, ForecastSeries), CliError> {
    let m = ents.microgrid_section()?;
    if !(lsf > 0.0 && lsf.is_finite()) {
        return Err(ents.err("microgrid.load_scaling", format!("load scaling must be positive, got {lsf}")));
    }
    let renewable = renewable_energy(m, forecast);
    let load: f64 = forecast.nonhvac_load.iter().sum::<f64>() * m.dt_h;
    if !(renewable > 0.0 && load > 0.0) {
        return Err(ents.err(
            "microgrid.load_scaling",
            "load scaling needs positive forecast load and renewable energy",
        ));
    }
    let k = lsf * renewable / load;
    let mut f = forecast.clone();
    f.nonhvac_load.iter_mut().for_each(|v| *v *= k);
    let mut m = m.clone();
    m.load_scaling = None;
    scale_shed_limit(&mut m, k);
    Ok((ents.with_microgrid(m), f))
}

/// Samples and reduces scenarios around the forecast.
pub fn scenarios_for(ents: Option<&Entities>, forecast: &ForecastSeries, plan: &ScenarioPlan) -> Result<ScenarioSet, CliError> {
    let controls = ents.map(|e| e.doc.scenarios.clone()).unwrap_or_default();
    let spec = {
        let mut c = controls.clone();
        c.uncertainty_scaling = plan.uncertainty_scaling;
        c.uncertainty()
    };
    let full = sample_scenarios(forecast, &spec, plan.samples, plan.seed)?;
    if plan.keep == plan.samples {
        return Ok(full);
    }
    let metric = DistanceMetric::from_forecast(forecast, controls.distance_weights)?;
    Ok(reduce_fast_forward(&full, plan.keep, &metric)?)
}

/// Microgrid and reduced scenario set for a run, with the configured load
/// scaling applied first.
pub fn prepare_microgrid(
    ents: &Entities,
    forecast: &ForecastSeries,
    plan: &ScenarioPlan,
) -> Result<(MicrogridConfig, ScenarioSet), CliError> {
    let (ents, forecast) = match ents.microgrid_section()?.load_scaling {
        Some(lsf) => apply_load_scaling(ents, forecast, lsf)?,
        None => (ents.clone(), forecast.clone()),
    };
    let mg = ents.microgrid(forecast.slots())?;
    let sc = scenarios_for(Some(&ents), &forecast, plan)?;
    Ok((mg, sc))
}

fn write_bidding(run: &mut Run, mg: &MicrogridConfig, sc: &ScenarioSet, sol: &BiddingSolution, prefix: &str) -> Result<(), CliError> {
    let nh = mg.horizon;
    let mut bids = Table::new(&["slot", "bid_kw"]);
    for t in 0..nh {
        bids.row(vec![(t + 1).into(), sol.first.bid[t].into()]);
    }
    let mut units = Table::new(&["unit", "slot", "commit", "startup", "shutdown"]);
    for (i, u) in sol.first.units.iter().enumerate() {
        for t in 0..nh {
            units.row(vec![(i + 1).into(), (t + 1).into(), u.commit[t].into(), u.startup[t].into(), u.shutdown[t].into()]);
        }
    }
    let mut dispatch = Table::new(&[
        "scenario",
        "slot",
        "probability",
        "delivery_kw",
        "generation_kw",
        "hvac_kw",
        "battery_charge_kw",
        "battery_discharge_kw",
        "shed_kw",
        "wind_curtailed_kw",
        "solar_curtailed_kw",
    ]);
    for (s, d) in sol.second.iter().enumerate() {
        let sum = |rows: &[Vec<f64>], t: usize| rows.iter().map(|r| r[t]).sum::<f64>();
        for t in 0..nh {
            dispatch.row(vec![
                s.into(),
                (t + 1).into(),
                d.probability.into(),
                d.delivery[t].into(),
                sum(&d.unit_power, t).into(),
                sum(&d.hvac_power, t).into(),
                sum(&d.charge, t).into(),
                sum(&d.discharge, t).into(),
                d.shed[t].into(),
                sum(&d.wind_curtailment, t).into(),
                sum(&d.solar_curtailment, t).into(),
            ]);
        }
    }
    run.write(&format!("{prefix}bids.csv"), &bids.into_bytes())?;
    run.write(&format!("{prefix}units.csv"), &units.into_bytes())?;
    run.write(&format!("{prefix}dispatch.csv"), &dispatch.into_bytes())?;
    run.write_json(&format!("{prefix}profit.json"), &sol.profit)?;
    run.write_json(&format!("{prefix}checks.json"), &check_feasibility(mg, sc, sol)?)?;
    Ok(())
}

fn write_scenarios(run: &mut Run, name: &str, sc: &ScenarioSet) -> Result<(), CliError> {
    let mut buf = Vec::new();
    write_scenarios_csv(sc, &mut buf)?;
    run.write(name, &buf)
}

pub fn bid(config: &Path, forecasts: &Path, out: &Path, flags: ScenarioFlags) -> Result<PathBuf, CliError> {
    let mut run = Run::new("bid", out)?;
    let inp = read_inputs(&mut run, config, forecasts)?;
    require(&inp.entities, ProblemKind::MgBid, "bid")?;
    let p = plan(Some(&inp.entities), flags)?;
    run.plan = Some(p);
    let (mg, sc) = prepare_microgrid(&inp.entities, &inp.forecast, &p)?;
    let sol = solve_bidding(&mg, &sc, &run.solver)?;
    write_scenarios(&mut run, "scenarios.csv", &sc)?;
    write_bidding(&mut run, &mg, &sc, &sol, "")?;
    run.finish()
}

fn scheme_name(s: Scheme) -> &'static str {
    match s {
        Scheme::Coordinated => "coordinated",
        Scheme::FixedComfort => "fixed-comfort",
        Scheme::Separate => "separate",
    }
}

#[derive(Debug, Serialize)]
struct SchemeRow {
    scheme: Scheme,
    profit: ProfitReport,
}

pub fn compare_schemes(config: &Path, forecasts: &Path, out: &Path, flags: ScenarioFlags) -> Result<PathBuf, CliError> {
    let mut run = Run::new("compare-schemes", out)?;
    let inp = read_inputs(&mut run, config, forecasts)?;
    require(&inp.entities, ProblemKind::MgBid, "compare-schemes")?;
    let p = plan(Some(&inp.entities), flags)?;
    run.plan = Some(p);
    let (mg, sc) = prepare_microgrid(&inp.entities, &inp.forecast, &p)?;
    let mut table = Table::new(&[
        "scheme",
        "total_expected_profit",
        "expected_revenue",
        "total_costs",
        "expected_discomfort_penalty",
        "expected_bid_deviation_charge",
    ]);
    let mut rows = Vec::new();
    for scheme in [Scheme::Coordinated, Scheme::FixedComfort, Scheme::Separate] {
        let outcome = run_scheme(&mg, &sc, scheme, &run.solver)?;
        let pr = &outcome.profit;
        table.row(vec![
            scheme_name(scheme).into(),
            pr.total_expected_profit.into(),
            pr.expected_revenue.into(),
            pr.total_costs().into(),
            pr.expected_discomfort_penalty.into(),
            pr.expected_bid_deviation_charge.into(),
        ]);
        rows.push(SchemeRow { scheme, profit: outcome.profit });
    }
    write_scenarios(&mut run, "scenarios.csv", &sc)?;
    run.write("schemes.csv", &table.into_bytes())?;
    run.write_json("schemes.json", &rows)?;
    run.finish()
}

// ------------------------------------------------------------------ scenarios

pub fn gen_scenarios(config: Option<&Path>, forecasts: &Path, out: &Path, flags: ScenarioFlags) -> Result<PathBuf, CliError> {
    let mut run = Run::new("gen-scenarios", out)?;
    let ents = config.map(load_entities).transpose()?;
    if let Some(c) = config {
        run.input("config", c)?;
    }
    let forecast = load_forecasts(forecasts)?;
    run.input("forecasts", forecasts)?;
    let mut p = plan(ents.as_ref(), ScenarioFlags { keep: Some(1), ..flags })?;
    p.keep = p.samples;
    run.plan = Some(p);
    let set = scenarios_for(ents.as_ref(), &forecast, &p)?;
    write_scenarios(&mut run, "scenarios.csv", &set)?;
    run.finish()
}

#[derive(Debug, Serialize)]
struct ReductionSummary {
    selection_order: Vec<usize>,
    kantorovich_distance: f64,
}

pub fn reduce_scenarios(
    input: &Path,
    config: Option<&Path>,
    forecasts: Option<&Path>,
    out: &Path,
    keep: Option<usize>,
) -> Result<PathBuf, CliError> {
    let mut run = Run::new("reduce-scenarios", out)?;
    let ents = config.map(load_entities).transpose()?;
    if let Some(c) = config {
        run.input("config", c)?;
    }
    run.input("scenarios", input)?;
    let file = std::fs::File::open(input).map_err(|e| CliError::io(input, e))?;
    let full = read_scenarios_csv(file, 0)?;
    let reference = match forecasts {
        Some(f) => {
            run.input("forecasts", f)?;
            load_forecasts(f)?
        }
        None => {
            let mut f = full.scenarios()[0].profile.clone();
            for kind in SeriesKind::ALL {
                *f.series_mut(kind) = full.expected(kind);
            }
            f
        }
    };
    let controls = ents.as_ref().map(|e| e.doc.scenarios.clone()).unwrap_or_default();
    let k = keep.unwrap_or(controls.keep).min(full.len());
    let metric = DistanceMetric::from_forecast(&reference, controls.distance_weights)?;
    let order = fast_forward_select(&full, k, &metric)?;
    let reduced = reduce_fast_forward(&full, k, &metric)?;
    let distance = kantorovich_distance(&full, &reduced, &metric)?;
    run.plan = Some(ScenarioPlan { seed: full.seed(), samples: full.len(), keep: k, uncertainty_scaling: 1.0 });
    write_scenarios(&mut run, "reduced.csv", &reduced)?;
    run.write_json("reduction.json", &ReductionSummary { selection_order: order, kantorovich_distance: distance })?;
    run.finish()
}

// ------------------------------------------------------------------ export

pub fn export_model(config: &Path, forecasts: &Path, out: &Path, flags: ScenarioFlags) -> Result<PathBuf, CliError> {
    let mut run = Run::new("export-model", out)?;
    let inp = read_inputs(&mut run, config, forecasts)?;
    let model = match inp.entities.kind() {
        ProblemKind::EvHvac => build_joint_model(&inp.entities.community(&inp.forecast)?)?.0,
        ProblemKind::MgBid => {
            let p = plan(Some(&inp.entities), flags)?;
            run.plan = Some(p);
            let (mg, sc) = prepare_microgrid(&inp.entities, &inp.forecast, &p)?;
            write_scenarios(&mut run, "scenarios.csv", &sc)?;
            build_two_stage_model(&mg, &sc)?.0
        }
    };
    run.write("model.lp", export_lp_text(&model)?.as_bytes())?;
    run.finish()
}
