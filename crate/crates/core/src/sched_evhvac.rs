//! Joint EV charging and HVAC scheduling for a residential community, solved
//! as a single LP, plus the uncontrolled baseline used for cost comparisons.

use gridsched_optmodel::{solve_lp, LinExpr, ModelError, OptModel, Relation, Sense, SolverOptions, Status, VarId};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::devices::{ev_apply_trip, DeviceError, EvSpec, HvacSpec, TripPlan};
use crate::thermal::{DiscreteThermalModel, ThermalError, ThermalState};

#[derive(Debug, Error)]
pub enum SchedError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("household {household}, EV {ev}: {source}")]
    TripDepletion {
        household: String,
        ev: usize,
        #[source]
        source: DeviceError,
    },
    #[error("schedule is infeasible; binding requirement groups: {groups:?}")]
    Infeasible { groups: Vec<RequirementGroup> },
    #[error("solver stopped with status {0:?}")]
    Solver(Status),
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Thermal(#[from] ThermalError),
    #[error(transparent)]
    Device(#[from] DeviceError),
}

/// Requirement families used to explain an infeasible instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RequirementGroup {
    Comfort,
    Soc,
    Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvAssignment {
    pub spec: EvSpec,
    pub trips: TripPlan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Household {
    pub id: String,
    pub hvac: HvacSpec,
    #[serde(default)]
    pub evs: Vec<EvAssignment>,
    pub initial_thermal: ThermalState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityProblem {
    pub households: Vec<Household>,
    /// $/kWh per slot
    pub prices: Vec<f64>,
    /// °C per slot
    pub ambient: Vec<f64>,
    /// kW/m² per slot
    pub irradiance: Vec<f64>,
    /// h
    pub dt: f64,
    /// kW per slot
    pub grid_limit: Vec<f64>,
    pub v2g_allowed: bool,
}

impl CommunityProblem {
    pub fn horizon(&self) -> usize {
        self.prices.len()
    }

    pub fn validate(&self) -> Result<(), SchedError> {
        let nh = self.horizon();
        if nh == 0 {
            return Err(SchedError::InvalidProblem("horizon is empty".into()));
        }
        if self.households.is_empty() {
            return Err(SchedError::InvalidProblem("no households".into()));
        }
        for (name, len) in [("ambient", self.ambient.len()), ("irradiance", self.irradiance.len()), ("grid_limit", self.grid_limit.len())] {
            if len != nh {
                return Err(SchedError::InvalidProblem(format!("{name} has {len} slots, expected {nh}")));
            }
        }
        if !(self.dt > 0.0) {
            return Err(SchedError::InvalidProblem("slot length must be positive".into()));
        }
        if self.grid_limit.iter().any(|g| !(*g >= 0.0)) {
            return Err(SchedError::InvalidProblem("grid limit must be non-negative".into()));
        }
        for h in &self.households {
            h.hvac.validate(nh).map_err(|e| SchedError::InvalidProblem(format!("household {}: {e}", h.id)))?;
            for (k, ev) in h.evs.iter().enumerate() {
                ev.spec.validate().map_err(|e| SchedError::InvalidProblem(format!("household {} EV {k}: {e}", h.id)))?;
                ev.trips.validate(nh).map_err(|e| SchedError::InvalidProblem(format!("household {} EV {k}: {e}", h.id)))?;
            }
        }
        Ok(())
    }

    /// Sub-problem containing only household `j`.
    pub fn single(&self, j: usize) -> CommunityProblem {
        CommunityProblem { households: vec![self.households[j].clone()], ..self.clone_without_households() }
    }

    fn clone_without_households(&self) -> CommunityProblem {
        CommunityProblem {
            households: Vec::new(),
            prices: self.prices.clone(),
            ambient: self.ambient.clone(),
            irradiance: self.irradiance.clone(),
            dt: self.dt,
            grid_limit: self.grid_limit.clone(),
            v2g_allowed: self.v2g_allowed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvIndex {
    pub charge: Vec<VarId>,
    pub discharge: Vec<VarId>,
    /// State of charge at the end of each slot.
    pub soc: Vec<VarId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HouseholdIndex {
    pub hvac: Vec<VarId>,
    /// Thermal state at the end of each slot.
    pub state: Vec<[VarId; 3]>,
    pub discomfort: Vec<Option<VarId>>,
    pub evs: Vec<EvIndex>,
}

/// Resolves (entity, slot) to model variables.
#[derive(Debug, Clone, PartialEq)]
pub struct JointIndex {
    pub grid: Vec<VarId>,
    pub households: Vec<HouseholdIndex>,
}

#[derive(Debug, Clone, Copy, Default)]
struct Relaxation {
    comfort: bool,
    soc: bool,
    grid: bool,
}

pub fn build_joint_model(problem: &CommunityProblem) -> Result<(OptModel, JointIndex), SchedError> {
    build_with(problem, Relaxation::default())
}

fn build_with(problem: &CommunityProblem, relax: Relaxation) -> Result<(OptModel, JointIndex), SchedError> {
    problem.validate()?;
    let nh = problem.horizon();
    let dt = problem.dt;
    let mut m = OptModel::new(Sense::Minimize);
    let inf = f64::INFINITY;

    let mut grid = Vec::with_capacity(nh);
    for t in 0..nh {
        let cap = if relax.grid { inf } else { problem.grid_limit[t] };
        let lo = if problem.v2g_allowed { -cap } else { 0.0 };
        let g = m.add_continuous(format!("grid_{t}"), lo, cap)?;
        m.set_objective_coef(g, problem.prices[t] * dt);
        grid.push(g);
    }
    let mut balance: Vec<LinExpr> = grid.iter().map(|&g| LinExpr::new().term(g, 1.0)).collect();

    let mut households = Vec::with_capacity(problem.households.len());
    for (j, h) in problem.households.iter().enumerate() {
        let params = &h.hvac.thermal;
        let model = DiscreteThermalModel::from_params(params, dt)?;
        let gain = params.mode.sign() * params.cop;
        let mut hvac = Vec::with_capacity(nh);
        let mut state: Vec<[VarId; 3]> = Vec::with_capacity(nh);
        let mut discomfort = Vec::with_capacity(nh);
        for t in 0..nh {
            let p = m.add_continuous(format!("hvac_{j}_{t}"), 0.0, h.hvac.rated_power)?;
            balance[t].add_term(p, -1.0);
            hvac.push(p);
            let x = [
                m.add_continuous(format!("tin_{j}_{}", t + 1), -inf, inf)?,
                m.add_continuous(format!("tm_{j}_{}", t + 1), -inf, inf)?,
                m.add_continuous(format!("te_{j}_{}", t + 1), -inf, inf)?,
            ];
            // x_{t+1} = A x_t + B [Ta, Φ, σ·η·P]
            for r in 0..3 {
                let mut e = LinExpr::new().term(x[r], 1.0).term(p, -model.b_d[(r, 2)] * gain);
                let mut rhs = model.b_d[(r, 0)] * problem.ambient[t] + model.b_d[(r, 1)] * problem.irradiance[t];
                if t == 0 {
                    let x0 = h.initial_thermal.to_vector();
                    rhs += (0..3).map(|c| model.a_d[(r, c)] * x0[c]).sum::<f64>();
                } else {
                    for c in 0..3 {
                        e.add_term(state[t - 1][c], -model.a_d[(r, c)]);
                    }
                }
                m.add_constraint(format!("thermal_{j}_{}_{r}", t + 1), e, Relation::Eq, rhs)?;
            }
            state.push(x);
            let occupied = h.hvac.occupancy[t];
            if occupied && !relax.comfort {
                let (td, dev) = (h.hvac.desired_temp[t], h.hvac.max_deviation[t]);
                m.set_bounds(x[0], td - dev, td + dev)?;
            }
            let w = h.hvac.discomfort_weight[t];
            let aux = if occupied && w > 0.0 {
                let e = LinExpr::new().term(x[0], 1.0).plus(-h.hvac.desired_temp[t]);
                Some(m.add_abs_term(format!("dev_{j}_{}", t + 1), e, w)?)
            } else {
                None
            };
            discomfort.push(aux);
        }

        let mut evs = Vec::with_capacity(h.evs.len());
        for (e_idx, ev) in h.evs.iter().enumerate() {
            let spec = &ev.spec;
            for trip in &ev.trips.trips {
                let back = ev_apply_trip(spec, spec.soc_max, trip.distance)
                    .map_err(|source| SchedError::TripDepletion { household: h.id.clone(), ev: e_idx, source })?;
                if back < spec.soc_min && !relax.soc {
                    return Err(SchedError::TripDepletion {
                        household: h.id.clone(),
                        ev: e_idx,
                        source: DeviceError::InfeasibleTrip { soc: back },
                    });
                }
            }
            let avail = ev.trips.availability(nh);
            let (smin, smax) = if relax.soc { (0.0, 1.0) } else { (spec.soc_min, spec.soc_max) };
            let mut charge = Vec::with_capacity(nh);
            let mut discharge = Vec::with_capacity(nh);
            let mut soc = Vec::with_capacity(nh);
            for t in 0..nh {
                let b = if avail[t] { 1.0 } else { 0.0 };
                let pc = m.add_continuous(format!("evc_{j}_{e_idx}_{t}"), 0.0, b * spec.p_charge_max)?;
                let pd = m.add_continuous(format!("evd_{j}_{e_idx}_{t}"), 0.0, b * spec.p_discharge_max)?;
                balance[t].add_term(pc, -1.0);
                balance[t].add_term(pd, 1.0);
                charge.push(pc);
                discharge.push(pd);
                soc.push(m.add_continuous(format!("soc_{j}_{e_idx}_{}", t + 1), smin, smax)?);
            }
            // soc_at(k) is the SOC at the start of slot k: a constant for k = 0.
            let soc_term = |e: &mut LinExpr, k: usize, coef: f64| {
                if k == 0 {
                    e.add_constant(coef * spec.soc_initial);
                } else {
                    e.add_term(soc[k - 1], coef);
                }
            };
            for t in 0..nh {
                if !avail[t] {
                    continue;
                }
                let mut e = LinExpr::new().term(soc[t], 1.0);
                soc_term(&mut e, t, -1.0);
                e.add_term(charge[t], -spec.eta_c * dt / spec.capacity);
                e.add_term(discharge[t], dt / (spec.eta_d * spec.capacity));
                m.add_constraint(format!("soc_{j}_{e_idx}_{}", t + 1), e, Relation::Eq, 0.0)?;
            }
            for (l, trip) in ev.trips.trips.iter().enumerate() {
                let drop = trip.distance * spec.travel_efficiency / spec.capacity;
                let span = (trip.return_slot - trip.depart_slot) as f64;
                // SOC falls linearly while away and reaches the post-trip level on return.
                for k in trip.depart_slot + 1..=trip.return_slot {
                    let frac = (k - trip.depart_slot) as f64 / span;
                    let mut e = LinExpr::new().term(soc[k - 1], 1.0);
                    soc_term(&mut e, trip.depart_slot, -1.0);
                    m.add_constraint(format!("trip_{j}_{e_idx}_{l}_{k}"), e, Relation::Eq, -frac * drop)?;
                }
            }
            evs.push(EvIndex { charge, discharge, soc });
        }
        households.push(HouseholdIndex { hvac, state, discomfort, evs });
    }
    for (t, e) in balance.into_iter().enumerate() {
        m.add_constraint(format!("balance_{t}"), e, Relation::Eq, 0.0)?;
    }
    Ok((m, JointIndex { grid, households }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvSchedule {
    pub charge: Vec<f64>,
    pub discharge: Vec<f64>,
    /// NH + 1 entries including the initial SOC.
    pub soc: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HouseholdSchedule {
    pub id: String,
    pub hvac_power: Vec<f64>,
    /// NH + 1 entries including the initial indoor temperature.
    pub indoor_temp: Vec<f64>,
    pub evs: Vec<EvSchedule>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvHvacSchedule {
    pub grid_import: Vec<f64>,
    pub households: Vec<HouseholdSchedule>,
    pub electricity_cost: f64,
    pub discomfort_cost: f64,
    pub total_cost: f64,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl EvHvacSchedule {
    /// Terminal SOC per household per EV.
    pub fn terminal_soc(&self) -> Vec<Vec<f64>> {
        self.households
            .iter()
            .map(|h| h.evs.iter().map(|e| *e.soc.last().expect("non-empty trajectory")).collect())
            .collect()
    }
}

/// Grid import per slot from the component powers.
pub fn aggregate_grid(problem: &CommunityProblem, households: &[HouseholdSchedule]) -> Vec<f64> {
    (0..problem.horizon())
        .map(|t| {
            households
                .iter()
                .map(|h| h.hvac_power[t] + h.evs.iter().map(|e| e.charge[t] - e.discharge[t]).sum::<f64>())
                .sum()
        })
        .collect()
}

fn costs(problem: &CommunityProblem, grid: &[f64], households: &[HouseholdSchedule]) -> (f64, f64) {
    let elec: f64 = grid.iter().zip(&problem.prices).map(|(g, e)| g * e * problem.dt).sum();
    let mut discomfort = 0.0;
    for (h, spec) in households.iter().zip(&problem.households) {
        for t in 0..problem.horizon() {
            if spec.hvac.occupancy[t] {
                discomfort += spec.hvac.discomfort_weight[t] * (h.indoor_temp[t + 1] - spec.hvac.desired_temp[t]).abs();
            }
        }
    }
    (elec, discomfort)
}

pub fn solve_schedule(problem: &CommunityProblem) -> Result<EvHvacSchedule, SchedError> {
    let (model, index) = build_joint_model(problem)?;
    let opts = SolverOptions::default();
    let sol = solve_lp(&model, &opts)?;
    match sol.status {
        Status::Optimal => {}
        Status::Infeasible => return Err(SchedError::Infeasible { groups: diagnose_infeasibility(problem, &opts)? }),
        other => return Err(SchedError::Solver(other)),
    }
    let v = |id: VarId| sol.value(id);
    let mut warnings = Vec::new();
    let mut households = Vec::with_capacity(problem.households.len());
    for (j, (hi, h)) in index.households.iter().zip(&problem.households).enumerate() {
        let hvac_power: Vec<f64> = hi.hvac.iter().map(|&p| v(p)).collect();
        let mut indoor_temp = vec![h.initial_thermal.t_in];
        indoor_temp.extend(hi.state.iter().map(|x| v(x[0])));
        let mut evs = Vec::with_capacity(hi.evs.len());
        for (k, (ei, ev)) in hi.evs.iter().zip(&h.evs).enumerate() {
            let mut charge: Vec<f64> = ei.charge.iter().map(|&p| v(p).max(0.0)).collect();
            let mut discharge: Vec<f64> = ei.discharge.iter().map(|&p| v(p).max(0.0)).collect();
            let mut soc = vec![ev.spec.soc_initial];
            soc.extend(ei.soc.iter().map(|&s| v(s)));
            for t in 0..charge.len() {
                if charge[t] > 0.0 && discharge[t] > 0.0 {
                    cancel_simultaneous(&ev.spec, &mut charge[t], &mut discharge[t]);
                    warnings.push(format!("household {j} EV {k} slot {t}: cancelled simultaneous charge and discharge"));
                }
            }
            evs.push(EvSchedule { charge, discharge, soc });
        }
        households.push(HouseholdSchedule { id: h.id.clone(), hvac_power, indoor_temp, evs });
    }
    let grid_import = aggregate_grid(problem, &households);
    for (t, g) in grid_import.iter().enumerate() {
        let cap = problem.grid_limit[t];
        let lo = if problem.v2g_allowed { -cap } else { 0.0 };
        if *g < lo - 1e-6 || *g > cap + 1e-6 {
            warnings.push(format!("slot {t}: grid import {g:.6} kW outside limits after post-pass"));
        }
    }
    let (electricity_cost, discomfort_cost) = costs(problem, &grid_import, &households);
    Ok(EvHvacSchedule {
        grid_import,
        households,
        electricity_cost,
        discomfort_cost,
        total_cost: electricity_cost + discomfort_cost,
        warnings,
    })
}

/// Replaces a simultaneous charge/discharge pair by the single flow with the
/// same net effect on stored energy.
fn cancel_simultaneous(spec: &EvSpec, charge: &mut f64, discharge: &mut f64) {
    let net = spec.eta_c * *charge - *discharge / spec.eta_d;
    if net >= 0.0 {
        *charge = net / spec.eta_c;
        *discharge = 0.0;
    } else {
        *charge = 0.0;
        *discharge = -net * spec.eta_d;
    }
}

fn diagnose_infeasibility(problem: &CommunityProblem, opts: &SolverOptions) -> Result<Vec<RequirementGroup>, SchedError> {
    let feasible = |r: Relaxation| -> Result<bool, SchedError> {
        match build_with(problem, r) {
            Ok((m, _)) => Ok(solve_lp(&m, opts)?.status == Status::Optimal),
            Err(SchedError::TripDepletion { .. }) => Ok(false),
            Err(e) => Err(e),
        }
    };
    let singles = [
        (RequirementGroup::Comfort, Relaxation { comfort: true, ..Default::default() }),
        (RequirementGroup::Soc, Relaxation { soc: true, ..Default::default() }),
        (RequirementGroup::Grid, Relaxation { grid: true, ..Default::default() }),
    ];
    let mut groups = Vec::new();
    for (g, r) in singles {
        if feasible(r)? {
            groups.push(g);
        }
    }
    if groups.is_empty() {
        let prefixes = [
            (vec![RequirementGroup::Comfort, RequirementGroup::Soc], Relaxation { comfort: true, soc: true, grid: false }),
            (
                vec![RequirementGroup::Comfort, RequirementGroup::Soc, RequirementGroup::Grid],
                Relaxation { comfort: true, soc: true, grid: true },
            ),
        ];
        for (g, r) in prefixes {
            if feasible(r)? {
                return Ok(g);
            }
        }
    }
    Ok(groups)
}

/// Thermostat holding the desired temperature and EVs charging at full rate
/// from the start of the horizon until they can finish at `target_final_soc`.
pub fn uncontrolled_baseline(problem: &CommunityProblem, target_final_soc: &[Vec<f64>]) -> Result<EvHvacSchedule, SchedError> {
    problem.validate()?;
    if target_final_soc.len() != problem.households.len() {
        return Err(SchedError::InvalidProblem("one target list per household is required".into()));
    }
    let nh = problem.horizon();
    let dt = problem.dt;
    let mut warnings = Vec::new();
    let mut households = Vec::with_capacity(problem.households.len());
    for (j, (h, targets)) in problem.households.iter().zip(target_final_soc).enumerate() {
        if targets.len() != h.evs.len() {
            return Err(SchedError::InvalidProblem(format!("household {}: one target per EV is required", h.id)));
        }
        let params = &h.hvac.thermal;
        let model = DiscreteThermalModel::from_params(params, dt)?;
        let gain = params.mode.sign() * params.cop * model.b_d[(0, 2)];
        let mut x = h.initial_thermal.to_vector();
        let mut hvac_power = Vec::with_capacity(nh);
        let mut indoor_temp = vec![h.initial_thermal.t_in];
        for t in 0..nh {
            let drift = model.a_d * x + model.b_d.column(0) * problem.ambient[t] + model.b_d.column(1) * problem.irradiance[t];
            let wanted = (h.hvac.desired_temp[t] - drift[0]) / gain;
            let p = wanted.clamp(0.0, h.hvac.rated_power);
            if (p - wanted).abs() > 1e-9 {
                warnings.push(format!("household {j} slot {t}: thermostat cannot reach the desired temperature"));
            }
            x = drift + model.b_d.column(2) * (params.mode.sign() * params.cop * p);
            hvac_power.push(p);
            indoor_temp.push(x[0]);
        }
        let mut evs = Vec::with_capacity(h.evs.len());
        for (k, (ev, &target)) in h.evs.iter().zip(targets).enumerate() {
            let spec = &ev.spec;
            let avail = ev.trips.availability(nh);
            let mut soc = vec![spec.soc_initial];
            let mut charge = vec![0.0; nh];
            let mut s = spec.soc_initial;
            for t in 0..nh {
                let pending: f64 = ev
                    .trips
                    .trips
                    .iter()
                    .filter(|tr| tr.depart_slot >= t)
                    .map(|tr| tr.distance * spec.travel_efficiency / spec.capacity)
                    .sum();
                if avail[t] {
                    let need = (target + pending).min(spec.soc_max) - s;
                    if need > 1e-12 {
                        let p = (need * spec.capacity / (spec.eta_c * dt)).min(spec.p_charge_max);
                        charge[t] = p;
                        s += spec.eta_c * p * dt / spec.capacity;
                    }
                }
                if let Some(tr) = ev.trips.trips.iter().find(|tr| tr.depart_slot <= t && t < tr.return_slot) {
                    let drop = tr.distance * spec.travel_efficiency / spec.capacity;
                    s -= drop / (tr.return_slot - tr.depart_slot) as f64;
                }
                if s < spec.soc_min - 1e-9 {
                    warnings.push(format!("household {j} EV {k} slot {t}: SOC {s:.4} below minimum"));
                }
                soc.push(s);
            }
            if (s - target).abs() > 1e-9 {
                warnings.push(format!("household {j} EV {k}: terminal SOC {s:.6} misses target {target:.6}"));
            }
            evs.push(EvSchedule { charge, discharge: vec![0.0; nh], soc });
        }
        households.push(HouseholdSchedule { id: h.id.clone(), hvac_power, indoor_temp, evs });
    }
    let grid_import = aggregate_grid(problem, &households);
    for (t, g) in grid_import.iter().enumerate() {
        if *g > problem.grid_limit[t] + 1e-6 {
            warnings.push(format!("slot {t}: baseline import {g:.3} kW exceeds the grid limit"));
        }
    }
    let (electricity_cost, discomfort_cost) = costs(problem, &grid_import, &households);
    Ok(EvHvacSchedule {
        grid_import,
        households,
        electricity_cost,
        discomfort_cost,
        total_cost: electricity_cost + discomfort_cost,
        warnings,
    })
}

/// Relative electricity cost saving of `optimal` over `baseline`, in percent.
pub fn cost_saving(optimal: &EvHvacSchedule, baseline: &EvHvacSchedule) -> Result<f64, SchedError> {
    if !(baseline.electricity_cost > 0.0) {
        return Err(SchedError::UndefinedMetric(format!(
            "baseline electricity cost is {}",
            baseline.electricity_cost
        )));
    }
    Ok(100.0 * (baseline.electricity_cost - optimal.electricity_cost) / baseline.electricity_cost)
}

/// Solves every household on its own, each with the full community grid limit.
pub fn solve_individual(problem: &CommunityProblem) -> Result<(Vec<EvHvacSchedule>, f64), SchedError> {
    problem.validate()?;
    let schedules = (0..problem.households.len())
        .into_par_iter()
        .map(|j| solve_schedule(&problem.single(j)))
        .collect::<Result<Vec<_>, _>>()?;
    let total = schedules.iter().map(|s| s.total_cost).sum();
    Ok((schedules, total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::devices::Trip;
    use crate::presets;
    use crate::thermal::BuildingThermalParams;

    fn house(id: &str, evs: Vec<EvAssignment>, nh: usize, w: f64, delta: f64) -> Household {
        Household {
            id: id.into(),
            hvac: HvacSpec::uniform(4.0, BuildingThermalParams::default(), 23.0, delta, w, nh),
            evs,
            initial_thermal: ThermalState::uniform(23.0),
        }
    }

    fn problem(households: Vec<Household>, prices: Vec<f64>, ambient: f64) -> CommunityProblem {
        let nh = prices.len();
        CommunityProblem {
            households,
            prices,
            ambient: vec![ambient; nh],
            irradiance: vec![0.0; nh],
            dt: 1.0,
            grid_limit: vec![25.0; nh],
            v2g_allowed: false,
        }
    }

    #[test]
    fn tiny_model_census() {
        let p = problem(vec![house("a", vec![], 2, 0.1, 2.0)], vec![0.1, 0.2], 30.0);
        let (m, idx) = build_joint_model(&p).unwrap();
        // 2 grid + 2 HVAC + 6 states + 2 abs auxiliaries
        assert_eq!(m.num_vars(), 12);
        // 6 thermal rows + 2·2 abs rows + 2 balance rows
        assert_eq!(m.num_constraints(), 12);
        assert_eq!(m.num_integers(), 0);
        assert!(idx.households[0].discomfort.iter().all(Option::is_some));
        for &g in &idx.grid {
            assert_eq!(m.var(g).lower, 0.0);
        }
    }

    #[test]
    fn unoccupied_has_no_comfort_terms() {
        let mut h = house("a", vec![], 3, 0.5, 1.0);
        h.hvac.occupancy = vec![false; 3];
        let p = problem(vec![h], vec![0.1, 0.3, 0.2], 30.0);
        let (m, idx) = build_joint_model(&p).unwrap();
        assert!(idx.households[0].discomfort.iter().all(Option::is_none));
        let s = solve_schedule(&p).unwrap();
        assert_eq!(s.discomfort_cost, 0.0);
        assert!(s.households[0].hvac_power.iter().all(|p| p.abs() < 1e-9));
        assert!(m.variables().iter().all(|v| v.lower.is_infinite() || v.lower == 0.0));
    }

    #[test]
    fn equilibrium_hold() {
        let mut h = house("a", vec![], 4, 0.2, 1.0);
        h.hvac.thermal.window_area = 0.0;
        let p = problem(vec![h], vec![0.1; 4], 23.0);
        let s = solve_schedule(&p).unwrap();
        assert!(s.discomfort_cost < 1e-7);
        for t in &s.households[0].indoor_temp {
            assert!((t - 23.0).abs() < 1e-7);
        }
        let base = uncontrolled_baseline(&p, &[vec![]]).unwrap();
        assert!(base.households[0].hvac_power.iter().all(|p| p.abs() < 1e-9));
        assert!(base.warnings.is_empty());
    }

    #[test]
    fn baseline_charging_slots() {
        let mut ev = presets::leaf_ev();
        ev.soc_initial = 0.3;
        let trips = TripPlan { trips: vec![Trip { depart_slot: 8, return_slot: 17, distance: 32.0 }] };
        let p = problem(vec![house("a", vec![EvAssignment { spec: ev.clone(), trips }], 24, 0.1, 2.0)], vec![0.1; 24], 28.0);
        let base = uncontrolled_baseline(&p, &[vec![0.3]]).unwrap();
        let c = &base.households[0].evs[0].charge;
        assert_eq!(c[0], 6.0);
        assert!(c[1] > 0.0 && c[1] < 6.0);
        assert!(c[2..].iter().all(|x| *x == 0.0));
        let soc = &base.households[0].evs[0].soc;
        assert!((soc[24] - 0.3).abs() < 1e-12);

        let idle = TripPlan::default();
        let p = problem(vec![house("a", vec![EvAssignment { spec: ev, trips: idle }], 24, 0.1, 2.0)], vec![0.1; 24], 28.0);
        let base = uncontrolled_baseline(&p, &[vec![0.3]]).unwrap();
        assert!(base.households[0].evs[0].charge.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn saving_arithmetic() {
        let mk = |c: f64| EvHvacSchedule {
            grid_import: vec![],
            households: vec![],
            electricity_cost: c,
            discomfort_cost: 0.0,
            total_cost: c,
            warnings: vec![],
        };
        assert_eq!(cost_saving(&mk(7.5), &mk(10.0)).unwrap(), 25.0);
        assert_eq!(cost_saving(&mk(10.0), &mk(10.0)).unwrap(), 0.0);
        assert!(cost_saving(&mk(1.0), &mk(0.0)).is_err());
    }

    #[test]
    fn impossible_trip_is_rejected_at_build() {
        let mut ev = presets::leaf_ev();
        ev.capacity = 5.0;
        ev.soc_initial = 0.5;
        let trips = TripPlan { trips: vec![Trip { depart_slot: 2, return_slot: 5, distance: 32.0 }] };
        let p = problem(vec![house("x", vec![EvAssignment { spec: ev, trips }], 8, 0.1, 2.0)], vec![0.1; 8], 28.0);
        match build_joint_model(&p) {
            Err(SchedError::TripDepletion { household, ev, .. }) => assert_eq!((household.as_str(), ev), ("x", 0)),
            other => panic!("expected trip depletion, got {other:?}"),
        }
    }

    #[test]
    fn infeasible_comfort_is_diagnosed() {
        let mut h = house("a", vec![], 4, 0.1, 0.1);
        h.hvac.rated_power = 0.01;
        let p = problem(vec![h], vec![0.1; 4], 38.0);
        match solve_schedule(&p) {
            Err(SchedError::Infeasible { groups }) => assert_eq!(groups, vec![RequirementGroup::Comfort]),
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn trip_soc_is_linear_and_jumps_by_trip_energy() {
        let ev = presets::leaf_ev();
        let trips = presets::commuter_trip();
        let prices: Vec<f64> = (0..24).map(|t| 0.05 + 0.1 * ((t as f64 - 4.0) / 24.0 * 6.28).sin().abs()).collect();
        let p = problem(vec![house("a", vec![EvAssignment { spec: ev.clone(), trips }], 24, 0.05, 2.0)], prices, 30.0);
        let s = solve_schedule(&p).unwrap();
        let soc = &s.households[0].evs[0].soc;
        assert!((soc[8] - soc[17] - 32.0 * 0.316 / 24.0).abs() < 1e-9);
        for t in 8..17 {
            assert!(soc[t + 1] < soc[t]);
        }
        for x in soc {
            assert!(*x >= ev.soc_min - 1e-8 && *x <= ev.soc_max + 1e-8);
        }
    }
}
