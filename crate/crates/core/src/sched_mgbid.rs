//! Day-ahead bidding of a grid-connected microgrid under uncertainty. Unit
//! commitments and hourly bids are shared by every scenario; dispatch, HVAC,
//! storage, shedding and curtailment adapt per scenario. The deterministic
//! equivalent is one MILP.

use gridsched_optmodel::{solve_lp, solve_milp, LinExpr, ModelError, OptModel, Relation, Sense, SolverOptions, Status, VarId};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::devices::{
    solar_available_power, unit_production_cost, validate_unit_schedule, wind_available_power, BatterySpec,
    ConventionalUnit, DeviceError, HvacSpec, SolarSpec, WindSpec,
};
use crate::scenario::{ScenarioSet, SeriesKind};
use crate::thermal::{DiscreteThermalModel, ThermalError, ThermalState};

#[derive(Debug, Error)]
pub enum BidError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("bidding problem is infeasible; first relaxed family restoring feasibility: {family:?}")]
    Infeasible { family: Option<ConstraintFamily> },
    #[error("solver stopped with status {0:?}")]
    Solver(Status),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("recomputed profit {recomputed} disagrees with solver objective {objective}")]
    ObjectiveMismatch { objective: f64, recomputed: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Thermal(#[from] ThermalError),
    #[error(transparent)]
    Device(#[from] DeviceError),
}

fn invalid(msg: impl Into<String>) -> BidError {
    BidError::InvalidConfig(msg.into())
}

/// Constraint families relaxed, in this order, to explain infeasibility.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintFamily {
    Shed,
    Comfort,
    Line,
}

/// Market and reliability parameters. Prices in $/kWh, powers in kW.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketParams {
    pub bid_deviation_penalty: Vec<f64>,
    pub value_of_lost_load: Vec<f64>,
    pub wind_curtail_cost: Vec<f64>,
    pub solar_curtail_cost: Vec<f64>,
    /// `None` leaves the exchange with the main grid unbounded.
    #[serde(default)]
    pub line_capacity: Option<Vec<f64>>,
    pub max_shed: Vec<f64>,
    pub max_loss_of_load_ratio: Vec<f64>,
}

impl MarketParams {
    pub fn uniform(
        horizon: usize,
        deviation_penalty: f64,
        lost_load: f64,
        curtail_cost: f64,
        line_capacity: Option<f64>,
        max_shed: f64,
        lol_ratio: f64,
    ) -> Self {
        Self {
            bid_deviation_penalty: vec![deviation_penalty; horizon],
            value_of_lost_load: vec![lost_load; horizon],
            wind_curtail_cost: vec![curtail_cost; horizon],
            solar_curtail_cost: vec![curtail_cost; horizon],
            line_capacity: line_capacity.map(|c| vec![c; horizon]),
            max_shed: vec![max_shed; horizon],
            max_loss_of_load_ratio: vec![lol_ratio; horizon],
        }
    }

    fn validate(&self, nh: usize) -> Result<(), BidError> {
        let series = [
            ("bid_deviation_penalty", &self.bid_deviation_penalty),
            ("value_of_lost_load", &self.value_of_lost_load),
            ("wind_curtail_cost", &self.wind_curtail_cost),
            ("solar_curtail_cost", &self.solar_curtail_cost),
            ("max_shed", &self.max_shed),
            ("max_loss_of_load_ratio", &self.max_loss_of_load_ratio),
        ];
        for (name, v) in series {
            if v.len() != nh {
                return Err(invalid(format!("{name} has {} entries, horizon is {nh}", v.len())));
            }
            if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(invalid(format!("{name} must be finite and non-negative")));
            }
        }
        if self.max_loss_of_load_ratio.iter().any(|&r| r > 1.0) {
            return Err(invalid("max_loss_of_load_ratio must lie in [0, 1]"));
        }
        match &self.line_capacity {
            Some(cap) => {
                if cap.len() != nh {
                    return Err(invalid(format!("line_capacity has {} entries, horizon is {nh}", cap.len())));
                }
                if cap.iter().any(|c| c.is_nan() || *c < 0.0) {
                    return Err(invalid("line_capacity must be non-negative"));
                }
            }
            None => {
                if self.bid_deviation_penalty.iter().any(|&p| p <= 0.0) {
                    return Err(invalid("without a line capacity the bid deviation penalty must be positive"));
                }
            }
        }
        Ok(())
    }
}

fn one() -> u32 {
    1
}

/// `count` identical buildings controlled as one lumped zone. Rated power
/// and discomfort weights in `hvac` are per building.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Building {
    pub hvac: HvacSpec,
    pub initial: ThermalState,
    #[serde(default = "one")]
    pub count: u32,
}

impl Building {
    fn model(&self, dt: f64) -> Result<DiscreteThermalModel, BidError> {
        let lumped = self.hvac.thermal.aggregate(self.count as f64);
        Ok(DiscreteThermalModel::from_params(&lumped, dt)?)
    }

    fn rated_power(&self) -> f64 {
        self.hvac.rated_power * self.count as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MicrogridConfig {
    #[serde(default)]
    pub units: Vec<ConventionalUnit>,
    #[serde(default)]
    pub wind: Vec<WindSpec>,
    #[serde(default)]
    pub solar: Vec<SolarSpec>,
    #[serde(default)]
    pub batteries: Vec<BatterySpec>,
    #[serde(default)]
    pub buildings: Vec<Building>,
    pub market: MarketParams,
    pub dt: f64,
    pub horizon: usize,
}

impl MicrogridConfig {
    pub fn validate(&self) -> Result<(), BidError> {
        let nh = self.horizon;
        if nh == 0 {
            return Err(invalid("horizon must be at least one slot"));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(invalid("dt must be positive"));
        }
        self.market.validate(nh)?;
        for u in &self.units {
            u.validate()?;
        }
        for w in &self.wind {
            w.validate()?;
        }
        for p in &self.solar {
            p.validate()?;
        }
        for b in &self.batteries {
            b.validate()?;
        }
        for b in &self.buildings {
            if b.count == 0 {
                return Err(invalid("building count must be at least one"));
            }
            b.hvac.validate(nh)?;
        }
        Ok(())
    }

    /// Same configuration with every comfort band collapsed to the set point.
    pub fn without_temperature_deviation(&self) -> Self {
        let mut out = self.clone();
        for b in &mut out.buildings {
            b.hvac.max_deviation.iter_mut().for_each(|d| *d = 0.0);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnitIndex {
    pub commit: Vec<VarId>,
    pub startup: Vec<VarId>,
    pub shutdown: Vec<VarId>,
    pub startup_cost: Vec<VarId>,
    pub shutdown_cost: Vec<VarId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioIndex {
    pub delivery: Vec<VarId>,
    pub deviation: Vec<Option<VarId>>,
    /// `[unit][slot][segment]`
    pub segments: Vec<Vec<Vec<VarId>>>,
    pub hvac: Vec<Vec<VarId>>,
    pub state: Vec<Vec<[VarId; 3]>>,
    pub discomfort: Vec<Vec<Option<VarId>>>,
    pub charge: Vec<Vec<VarId>>,
    pub discharge: Vec<Vec<VarId>>,
    pub mode_charge: Vec<Vec<VarId>>,
    pub mode_discharge: Vec<Vec<VarId>>,
    /// Stored energy at the end of each slot.
    pub energy: Vec<Vec<VarId>>,
    pub shed: Vec<VarId>,
    pub wind_curtail: Vec<Vec<VarId>>,
    pub solar_curtail: Vec<Vec<VarId>>,
    pub wind_available: Vec<Vec<f64>>,
    pub solar_available: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BidIndex {
    pub bid: Vec<VarId>,
    pub units: Vec<UnitIndex>,
    pub scenarios: Vec<ScenarioIndex>,
}

#[derive(Debug, Clone, Copy, Default)]
struct Relaxation {
    shed: bool,
    comfort: bool,
    line: bool,
}

fn check_scenarios(mg: &MicrogridConfig, scenarios: &ScenarioSet) -> Result<(), BidError> {
    if scenarios.is_empty() {
        return Err(invalid("scenario set is empty"));
    }
    if scenarios.slots() != mg.horizon {
        return Err(invalid(format!(
            "scenarios cover {} slots, horizon is {}",
            scenarios.slots(),
            mg.horizon
        )));
    }
    Ok(())
}

pub fn build_two_stage_model(mg: &MicrogridConfig, scenarios: &ScenarioSet) -> Result<(OptModel, BidIndex), BidError> {
    build_with(mg, scenarios, Relaxation::default())
}

fn build_with(mg: &MicrogridConfig, scenarios: &ScenarioSet, relax: Relaxation) -> Result<(OptModel, BidIndex), BidError> {
    mg.validate()?;
    check_scenarios(mg, scenarios)?;
    let nh = mg.horizon;
    let dt = mg.dt;
    let mk = &mg.market;
    let inf = f64::INFINITY;
    let total_prob = scenarios.total_probability();
    let mut m = OptModel::new(Sense::Maximize);

    let cap = |t: usize| match (&mk.line_capacity, relax.line) {
        (Some(c), false) => c[t],
        _ => inf,
    };
    let mut bid = Vec::with_capacity(nh);
    for t in 0..nh {
        bid.push(m.add_continuous(format!("bid_{t}"), -cap(t), cap(t))?);
    }

    let mut units = Vec::with_capacity(mg.units.len());
    for (i, u) in mg.units.iter().enumerate() {
        let (on_first, off_first) = u.carry_in();
        let prev_on = if u.initially_on() { 1.0 } else { 0.0 };
        let mut ix = UnitIndex {
            commit: Vec::with_capacity(nh),
            startup: Vec::with_capacity(nh),
            shutdown: Vec::with_capacity(nh),
            startup_cost: Vec::with_capacity(nh),
            shutdown_cost: Vec::with_capacity(nh),
        };
        for t in 0..nh {
            let c = m.add_binary(format!("on_{i}_{t}"))?;
            if t < on_first {
                m.set_bounds(c, 1.0, 1.0)?;
            } else if t < off_first {
                m.set_bounds(c, 0.0, 0.0)?;
            }
            m.set_objective_coef(c, -u.fixed_cost * total_prob);
            let y = m.add_binary(format!("start_{i}_{t}"))?;
            let z = m.add_binary(format!("stop_{i}_{t}"))?;
            let su = m.add_continuous(format!("su_{i}_{t}"), 0.0, inf)?;
            let sd = m.add_continuous(format!("sd_{i}_{t}"), 0.0, inf)?;
            m.set_objective_coef(su, -1.0);
            m.set_objective_coef(sd, -1.0);
            ix.commit.push(c);
            ix.startup.push(y);
            ix.shutdown.push(z);
            ix.startup_cost.push(su);
            ix.shutdown_cost.push(sd);
        }
        for t in 0..nh {
            let (c, y, z) = (ix.commit[t], ix.startup[t], ix.shutdown[t]);
            // I_t − I_{t−1} as an expression plus the constant carried in at t = 0.
            let mut change = LinExpr::new().term(c, 1.0);
            if t == 0 {
                change.add_constant(-prev_on);
            } else {
                change.add_term(ix.commit[t - 1], -1.0);
            }
            let neg = |e: &LinExpr, k: f64| LinExpr {
                terms: e.terms.iter().map(|&(v, a)| (v, -k * a)).collect(),
                constant: -k * e.constant,
            };
            let mut e = neg(&change, 1.0).term(y, 1.0).term(z, -1.0);
            m.add_constraint(format!("transition_{i}_{t}"), e, Relation::Eq, 0.0)?;
            m.add_constraint(format!("exclusive_{i}_{t}"), LinExpr::new().term(y, 1.0).term(z, 1.0), Relation::Le, 1.0)?;
            e = neg(&change, u.startup_cost).term(ix.startup_cost[t], 1.0);
            m.add_constraint(format!("su_cost_{i}_{t}"), e, Relation::Ge, 0.0)?;
            e = neg(&change, -u.shutdown_cost).term(ix.shutdown_cost[t], 1.0);
            m.add_constraint(format!("sd_cost_{i}_{t}"), e, Relation::Ge, 0.0)?;

            if u.min_up > 0 {
                let end = (t + u.min_up).min(nh);
                let mut e = LinExpr::new().term(y, -((end - t) as f64));
                for h in t..end {
                    e.add_term(ix.commit[h], 1.0);
                }
                m.add_constraint(format!("min_up_{i}_{t}"), e, Relation::Ge, 0.0)?;
            }
            if u.min_down > 0 {
                let end = (t + u.min_down).min(nh);
                let n = (end - t) as f64;
                let mut e = LinExpr::new().term(z, -n);
                for h in t..end {
                    e.add_term(ix.commit[h], -1.0);
                }
                m.add_constraint(format!("min_down_{i}_{t}"), e, Relation::Ge, -n)?;
            }
        }
        units.push(ix);
    }

    let models = mg
        .buildings
        .iter()
        .map(|b| b.model(dt))
        .collect::<Result<Vec<_>, _>>()?;

    let mut expected_shed: Vec<LinExpr> = (0..nh).map(|_| LinExpr::new()).collect();
    let mut out = Vec::with_capacity(scenarios.len());
    for (s, sc) in scenarios.scenarios().iter().enumerate() {
        let rho = sc.probability;
        let pr = &sc.profile;
        let mut balance: Vec<LinExpr> = (0..nh).map(|_| LinExpr::new()).collect();
        let mut rhs: Vec<f64> = pr.nonhvac_load.clone();

        let mut delivery = Vec::with_capacity(nh);
        let mut deviation = Vec::with_capacity(nh);
        for t in 0..nh {
            let d = m.add_continuous(format!("deliver_{s}_{t}"), -cap(t), cap(t))?;
            m.set_objective_coef(d, rho * dt * pr.price_rt[t]);
            m.add_objective_coef(bid[t], rho * dt * (pr.price_da[t] - pr.price_rt[t]));
            balance[t].add_term(d, -1.0);
            let psi = mk.bid_deviation_penalty[t];
            deviation.push(if psi > 0.0 {
                let e = LinExpr::new().term(d, 1.0).term(bid[t], -1.0);
                Some(m.add_abs_term(format!("bid_dev_{s}_{t}"), e, rho * psi * dt)?)
            } else {
                None
            });
            delivery.push(d);
        }

        let mut segments = Vec::with_capacity(mg.units.len());
        for (i, u) in mg.units.iter().enumerate() {
            let ix = &units[i];
            let mut per_slot = Vec::with_capacity(nh);
            let mut power: Vec<LinExpr> = Vec::with_capacity(nh);
            for t in 0..nh {
                let mut p = LinExpr::new().term(ix.commit[t], u.p_min);
                let mut cap_row = LinExpr::new().term(ix.commit[t], -(u.p_max - u.p_min));
                let mut segs = Vec::with_capacity(u.segments.len());
                for (k, seg) in u.segments.iter().enumerate() {
                    let v = m.add_continuous(format!("seg_{s}_{i}_{t}_{k}"), 0.0, seg.width)?;
                    m.set_objective_coef(v, -rho * dt * seg.marginal_cost);
                    p.add_term(v, 1.0);
                    cap_row.add_term(v, 1.0);
                    segs.push(v);
                }
                m.add_constraint(format!("gen_max_{s}_{i}_{t}"), cap_row, Relation::Le, 0.0)?;
                for &(v, a) in &p.terms {
                    balance[t].add_term(v, a);
                }
                per_slot.push(segs);
                power.push(p);
            }
            for t in 0..nh {
                // P_t − P_{t−1}, with the pre-horizon output as a constant.
                let mut delta = power[t].clone();
                if t == 0 {
                    delta.add_constant(-u.initial_power());
                } else {
                    for &(v, a) in &power[t - 1].terms {
                        delta.add_term(v, -a);
                    }
                }
                if let Some(ur) = u.ramp_up {
                    let e = delta.clone().term(ix.startup[t], ur - u.p_min);
                    m.add_constraint(format!("ramp_up_{s}_{i}_{t}"), e, Relation::Le, ur)?;
                }
                if let Some(dr) = u.ramp_down {
                    let e = LinExpr {
                        terms: delta.terms.iter().map(|&(v, a)| (v, -a)).collect(),
                        constant: -delta.constant,
                    }
                    .term(ix.shutdown[t], dr - u.p_min);
                    m.add_constraint(format!("ramp_down_{s}_{i}_{t}"), e, Relation::Le, dr)?;
                }
            }
            segments.push(per_slot);
        }

        let mut wind_curtail = Vec::with_capacity(mg.wind.len());
        let mut wind_available = Vec::with_capacity(mg.wind.len());
        for (w, spec) in mg.wind.iter().enumerate() {
            let avail: Vec<f64> = pr.wind_speed.iter().map(|&v| wind_available_power(spec, v)).collect();
            let mut vars = Vec::with_capacity(nh);
            for t in 0..nh {
                let c = m.add_continuous(format!("wind_curt_{s}_{w}_{t}"), 0.0, avail[t])?;
                m.set_objective_coef(c, -rho * dt * mk.wind_curtail_cost[t]);
                balance[t].add_term(c, -1.0);
                rhs[t] -= avail[t];
                vars.push(c);
            }
            wind_curtail.push(vars);
            wind_available.push(avail);
        }
        let mut solar_curtail = Vec::with_capacity(mg.solar.len());
        let mut solar_available = Vec::with_capacity(mg.solar.len());
        for (p, spec) in mg.solar.iter().enumerate() {
            let avail: Vec<f64> = (0..nh)
                .map(|t| solar_available_power(spec, pr.irradiance[t], pr.ambient[t]))
                .collect();
            let mut vars = Vec::with_capacity(nh);
            for t in 0..nh {
                let c = m.add_continuous(format!("pv_curt_{s}_{p}_{t}"), 0.0, avail[t])?;
                m.set_objective_coef(c, -rho * dt * mk.solar_curtail_cost[t]);
                balance[t].add_term(c, -1.0);
                rhs[t] -= avail[t];
                vars.push(c);
            }
            solar_curtail.push(vars);
            solar_available.push(avail);
        }

        let mut shed = Vec::with_capacity(nh);
        for t in 0..nh {
            let hi = if relax.shed { inf } else { mk.max_shed[t] };
            let v = m.add_continuous(format!("shed_{s}_{t}"), 0.0, hi)?;
            m.set_objective_coef(v, -rho * dt * mk.value_of_lost_load[t]);
            balance[t].add_term(v, 1.0);
            expected_shed[t].add_term(v, rho);
            shed.push(v);
        }

        let nk = mg.batteries.len();
        let (mut charge, mut discharge, mut mode_charge, mut mode_discharge, mut energy) =
            (Vec::with_capacity(nk), Vec::with_capacity(nk), Vec::with_capacity(nk), Vec::with_capacity(nk), Vec::with_capacity(nk));
        for (k, b) in mg.batteries.iter().enumerate() {
            let (mut pc, mut pd, mut bc, mut bd, mut en) = (vec![], vec![], vec![], vec![], vec![]);
            for t in 0..nh {
                let c = m.add_continuous(format!("bat_c_{s}_{k}_{t}"), 0.0, inf)?;
                let d = m.add_continuous(format!("bat_d_{s}_{k}_{t}"), 0.0, inf)?;
                let fc = m.add_binary(format!("bat_bc_{s}_{k}_{t}"))?;
                let fd = m.add_binary(format!("bat_bd_{s}_{k}_{t}"))?;
                let e = m.add_continuous(format!("bat_e_{s}_{k}_{}", t + 1), b.e_min, b.e_max)?;
                m.set_objective_coef(c, -rho * dt * b.degradation_cost * b.eta_c);
                m.set_objective_coef(d, -rho * dt * b.degradation_cost / b.eta_d);
                balance[t].add_term(c, -1.0);
                balance[t].add_term(d, 1.0);
                m.add_constraint(
                    format!("bat_cmax_{s}_{k}_{t}"),
                    LinExpr::new().term(c, 1.0).term(fc, -b.p_charge_max),
                    Relation::Le,
                    0.0,
                )?;
                m.add_constraint(
                    format!("bat_dmax_{s}_{k}_{t}"),
                    LinExpr::new().term(d, 1.0).term(fd, -b.p_discharge_max),
                    Relation::Le,
                    0.0,
                )?;
                m.add_constraint(format!("bat_mode_{s}_{k}_{t}"), LinExpr::new().term(fc, 1.0).term(fd, 1.0), Relation::Eq, 1.0)?;
                let mut dyn_row = LinExpr::new().term(e, 1.0).term(c, -b.eta_c * dt).term(d, dt / b.eta_d);
                let r = if t == 0 {
                    b.e_initial
                } else {
                    dyn_row.add_term(en[t - 1], -1.0);
                    0.0
                };
                m.add_constraint(format!("bat_energy_{s}_{k}_{}", t + 1), dyn_row, Relation::Eq, r)?;
                pc.push(c);
                pd.push(d);
                bc.push(fc);
                bd.push(fd);
                en.push(e);
            }
            m.set_bounds(en[nh - 1], b.e_initial, b.e_initial)?;
            charge.push(pc);
            discharge.push(pd);
            mode_charge.push(bc);
            mode_discharge.push(bd);
            energy.push(en);
        }

        let nb = mg.buildings.len();
        let (mut hvac, mut state, mut discomfort) = (Vec::with_capacity(nb), Vec::with_capacity(nb), Vec::with_capacity(nb));
        for (j, b) in mg.buildings.iter().enumerate() {
            let (p_j, x_j, d_j) = add_building(&mut m, j, s, b, &models[j], pr, rho, relax.comfort)?;
            for t in 0..nh {
                balance[t].add_term(p_j[t], -1.0);
            }
            hvac.push(p_j);
            state.push(x_j);
            discomfort.push(d_j);
        }

        for (t, e) in balance.into_iter().enumerate() {
            m.add_constraint(format!("balance_{s}_{t}"), e, Relation::Eq, rhs[t])?;
        }
        out.push(ScenarioIndex {
            delivery,
            deviation,
            segments,
            hvac,
            state,
            discomfort,
            charge,
            discharge,
            mode_charge,
            mode_discharge,
            energy,
            shed,
            wind_curtail,
            solar_curtail,
            wind_available,
            solar_available,
        });
    }

    if !relax.shed {
        let expected_load = scenarios.expected(SeriesKind::NonhvacLoad);
        for (t, e) in expected_shed.into_iter().enumerate() {
            if expected_load[t] <= 0.0 {
                return Err(invalid(format!("expected non-HVAC load at slot {t} must be positive")));
            }
            let limit = mk.max_loss_of_load_ratio[t] * expected_load[t];
            m.add_constraint(format!("lol_{t}"), e, Relation::Le, limit)?;
        }
    }
    Ok((m, BidIndex { bid, units, scenarios: out }))
}

type BuildingVars = (Vec<VarId>, Vec<[VarId; 3]>, Vec<Option<VarId>>);

/// HVAC power, thermal state and discomfort terms of one building in one scenario.
#[allow(clippy::too_many_arguments)]
fn add_building(
    m: &mut OptModel,
    j: usize,
    s: usize,
    b: &Building,
    model: &DiscreteThermalModel,
    pr: &crate::scenario::HourlyProfile,
    rho: f64,
    relax_comfort: bool,
) -> Result<BuildingVars, BidError> {
    let nh = pr.slots();
    let inf = f64::INFINITY;
    let gain = b.hvac.thermal.mode.sign() * b.hvac.thermal.cop;
    let count = b.count as f64;
    let mut hvac = Vec::with_capacity(nh);
    let mut state: Vec<[VarId; 3]> = Vec::with_capacity(nh);
    let mut discomfort = Vec::with_capacity(nh);
    for t in 0..nh {
        let p = m.add_continuous(format!("hvac_{s}_{j}_{t}"), 0.0, b.rated_power())?;
        let x = [
            m.add_continuous(format!("tin_{s}_{j}_{}", t + 1), -inf, inf)?,
            m.add_continuous(format!("tm_{s}_{j}_{}", t + 1), -inf, inf)?,
            m.add_continuous(format!("te_{s}_{j}_{}", t + 1), -inf, inf)?,
        ];
        for r in 0..3 {
            let mut e = LinExpr::new().term(x[r], 1.0).term(p, -model.b_d[(r, 2)] * gain);
            let mut rhs = model.b_d[(r, 0)] * pr.ambient[t] + model.b_d[(r, 1)] * pr.irradiance[t];
            if t == 0 {
                let x0 = b.initial.to_vector();
                rhs += (0..3).map(|c| model.a_d[(r, c)] * x0[c]).sum::<f64>();
            } else {
                for c in 0..3 {
                    e.add_term(state[t - 1][c], -model.a_d[(r, c)]);
                }
            }
            m.add_constraint(format!("thermal_{s}_{j}_{}_{r}", t + 1), e, Relation::Eq, rhs)?;
        }
        let occupied = b.hvac.occupancy[t];
        let td = b.hvac.desired_temp[t];
        if occupied && !relax_comfort {
            let dev = b.hvac.max_deviation[t];
            m.set_bounds(x[0], td - dev, td + dev)?;
        }
        let w = b.hvac.discomfort_weight[t];
        discomfort.push(if occupied && w > 0.0 {
            let e = LinExpr::new().term(x[0], 1.0).plus(-td);
            Some(m.add_abs_term(format!("discomfort_{s}_{j}_{}", t + 1), e, rho * w * count)?)
        } else {
            None
        });
        hvac.push(p);
        state.push(x);
    }
    Ok((hvac, state, discomfort))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitCommitment {
    pub commit: Vec<bool>,
    pub startup: Vec<bool>,
    pub shutdown: Vec<bool>,
    pub startup_cost: Vec<f64>,
    pub shutdown_cost: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstStageDecision {
    pub units: Vec<UnitCommitment>,
    /// Positive values sell to the grid.
    pub bid: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondStageDecision {
    pub probability: f64,
    pub delivery: Vec<f64>,
    /// `[unit][slot]`
    pub unit_power: Vec<Vec<f64>>,
    /// `[unit][slot][segment]`
    pub segment_fill: Vec<Vec<Vec<f64>>>,
    pub hvac_power: Vec<Vec<f64>>,
    /// NH + 1 entries per building including the initial temperature.
    pub indoor_temp: Vec<Vec<f64>>,
    pub charge: Vec<Vec<f64>>,
    pub discharge: Vec<Vec<f64>>,
    pub charging_mode: Vec<Vec<bool>>,
    /// NH + 1 entries per battery including the initial energy.
    pub energy: Vec<Vec<f64>>,
    pub shed: Vec<f64>,
    pub wind_curtailment: Vec<Vec<f64>>,
    pub solar_curtailment: Vec<Vec<f64>>,
    pub wind_available: Vec<Vec<f64>>,
    pub solar_available: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfitReport {
    pub expected_revenue: f64,
    pub startup_shutdown_cost: f64,
    pub expected_generation_cost: f64,
    pub expected_discomfort_penalty: f64,
    pub expected_battery_degradation: f64,
    pub expected_shed_penalty: f64,
    pub expected_wind_curtailment_penalty: f64,
    pub expected_solar_curtailment_penalty: f64,
    pub expected_bid_deviation_charge: f64,
    pub total_expected_profit: f64,
    pub expected_renewable_curtailment_kwh: f64,
}

impl ProfitReport {
    pub fn total_costs(&self) -> f64 {
        self.startup_shutdown_cost
            + self.expected_generation_cost
            + self.expected_discomfort_penalty
            + self.expected_battery_degradation
            + self.expected_shed_penalty
            + self.expected_wind_curtailment_penalty
            + self.expected_solar_curtailment_penalty
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiddingSolution {
    pub first: FirstStageDecision,
    pub second: Vec<SecondStageDecision>,
    pub profit: ProfitReport,
    pub objective: f64,
    pub nodes: usize,
}

fn solve_model(m: &OptModel, opts: &SolverOptions) -> Result<gridsched_optmodel::Solution, BidError> {
    Ok(if m.num_integers() > 0 { solve_milp(m, opts)? } else { solve_lp(m, opts)? })
}

/// Solves the two-stage problem and cross-checks the profit recomputed from
/// raw decisions against the solver objective.
pub fn solve_bidding(mg: &MicrogridConfig, scenarios: &ScenarioSet, opts: &SolverOptions) -> Result<BiddingSolution, BidError> {
    let (model, index) = build_two_stage_model(mg, scenarios)?;
    let sol = solve_model(&model, opts)?;
    match sol.status {
        Status::Optimal => {}
        Status::Infeasible => return Err(BidError::Infeasible { family: diagnose(mg, scenarios, opts)? }),
        other => return Err(BidError::Solver(other)),
    }
    let first = extract_first(&index, &sol.values);
    let second = index
        .scenarios
        .iter()
        .zip(scenarios.scenarios())
        .map(|(ix, sc)| extract_second(mg, &first, ix, sc, &sol.values))
        .collect::<Vec<_>>();
    let profit = profit_from_decisions(mg, scenarios, &first, &second)?;
    let tol = 1e-6 * (1.0 + sol.objective.abs());
    if (profit.total_expected_profit - sol.objective).abs() > tol {
        return Err(BidError::ObjectiveMismatch { objective: sol.objective, recomputed: profit.total_expected_profit });
    }
    Ok(BiddingSolution { first, second, profit, objective: sol.objective, nodes: sol.nodes })
}

fn diagnose(mg: &MicrogridConfig, scenarios: &ScenarioSet, opts: &SolverOptions) -> Result<Option<ConstraintFamily>, BidError> {
    let steps = [
        (ConstraintFamily::Shed, Relaxation { shed: true, ..Default::default() }),
        (ConstraintFamily::Comfort, Relaxation { shed: true, comfort: true, line: false }),
        (ConstraintFamily::Line, Relaxation { shed: true, comfort: true, line: true }),
    ];
    for (family, relax) in steps {
        let (model, _) = build_with(mg, scenarios, relax)?;
        let sol = solve_model(&model, opts)?;
        if sol.status != Status::Infeasible {
            return Ok(Some(family));
        }
    }
    Ok(None)
}

fn bit(x: f64) -> bool {
    x > 0.5
}

fn extract_first(index: &BidIndex, x: &[f64]) -> FirstStageDecision {
    let get = |v: &[VarId]| v.iter().map(|id| x[id.0]).collect::<Vec<f64>>();
    let flags = |v: &[VarId]| v.iter().map(|id| bit(x[id.0])).collect::<Vec<bool>>();
    FirstStageDecision {
        units: index
            .units
            .iter()
            .map(|u| UnitCommitment {
                commit: flags(&u.commit),
                startup: flags(&u.startup),
                shutdown: flags(&u.shutdown),
                startup_cost: get(&u.startup_cost),
                shutdown_cost: get(&u.shutdown_cost),
            })
            .collect(),
        bid: get(&index.bid),
    }
}

fn extract_second(
    mg: &MicrogridConfig,
    first: &FirstStageDecision,
    ix: &ScenarioIndex,
    sc: &crate::scenario::Scenario,
    x: &[f64],
) -> SecondStageDecision {
    let get = |v: &[VarId]| v.iter().map(|id| x[id.0]).collect::<Vec<f64>>();
    let nested = |v: &[Vec<VarId>]| v.iter().map(|r| get(r)).collect::<Vec<_>>();
    let segment_fill: Vec<Vec<Vec<f64>>> = ix.segments.iter().map(|u| u.iter().map(|s| get(s)).collect()).collect();
    let unit_power = segment_fill
        .iter()
        .zip(&mg.units)
        .zip(&first.units)
        .map(|((per_slot, u), uc)| {
            per_slot
                .iter()
                .zip(&uc.commit)
                .map(|(fill, &on)| if on { u.p_min + fill.iter().sum::<f64>() } else { 0.0 })
                .collect()
        })
        .collect();
    let indoor_temp = mg
        .buildings
        .iter()
        .zip(&ix.state)
        .map(|(b, st)| {
            let mut v = Vec::with_capacity(st.len() + 1);
            v.push(b.initial.t_in);
            v.extend(st.iter().map(|s| x[s[0].0]));
            v
        })
        .collect();
    let energy = mg
        .batteries
        .iter()
        .zip(&ix.energy)
        .map(|(b, en)| {
            let mut v = Vec::with_capacity(en.len() + 1);
            v.push(b.e_initial);
            v.extend(get(en));
            v
        })
        .collect();
    SecondStageDecision {
        probability: sc.probability,
        delivery: get(&ix.delivery),
        unit_power,
        segment_fill,
        hvac_power: nested(&ix.hvac),
        indoor_temp,
        charge: nested(&ix.charge),
        discharge: nested(&ix.discharge),
        charging_mode: ix.mode_charge.iter().map(|r| r.iter().map(|id| bit(x[id.0])).collect()).collect(),
        energy,
        shed: get(&ix.shed),
        wind_curtailment: nested(&ix.wind_curtail),
        solar_curtailment: nested(&ix.solar_curtail),
        wind_available: ix.wind_available.clone(),
        solar_available: ix.solar_available.clone(),
    }
}

fn check_dimensions(mg: &MicrogridConfig, scenarios: &ScenarioSet, first: &FirstStageDecision, second: &[SecondStageDecision]) -> Result<(), BidError> {
    let nh = mg.horizon;
    let bad = |what: &str| Err(BidError::InvalidState(format!("{what} does not match the configuration")));
    if first.bid.len() != nh || first.units.len() != mg.units.len() || first.units.iter().any(|u| u.commit.len() != nh) {
        return bad("first-stage decision");
    }
    if second.len() != scenarios.len() {
        return bad("scenario decision count");
    }
    for d in second {
        let sized = d.delivery.len() == nh
            && d.shed.len() == nh
            && d.unit_power.len() == mg.units.len()
            && d.hvac_power.len() == mg.buildings.len()
            && d.indoor_temp.len() == mg.buildings.len()
            && d.charge.len() == mg.batteries.len()
            && d.discharge.len() == mg.batteries.len()
            && d.wind_curtailment.len() == mg.wind.len()
            && d.solar_curtailment.len() == mg.solar.len()
            && d.indoor_temp.iter().all(|v| v.len() == nh + 1);
        if !sized {
            return bad("second-stage decision");
        }
    }
    Ok(())
}

/// Expected profit terms recomputed from the decisions alone.
pub fn profit_from_decisions(
    mg: &MicrogridConfig,
    scenarios: &ScenarioSet,
    first: &FirstStageDecision,
    second: &[SecondStageDecision],
) -> Result<ProfitReport, BidError> {
    check_dimensions(mg, scenarios, first, second)?;
    let nh = mg.horizon;
    let dt = mg.dt;
    let mk = &mg.market;
    let mut startup_shutdown_cost = 0.0;
    for (u, uc) in mg.units.iter().zip(&first.units) {
        let mut prev = u.initially_on();
        for &on in &uc.commit {
            if on && !prev {
                startup_shutdown_cost += u.startup_cost;
            }
            if !on && prev {
                startup_shutdown_cost += u.shutdown_cost;
            }
            prev = on;
        }
    }
    let mut r = ProfitReport {
        expected_revenue: 0.0,
        startup_shutdown_cost,
        expected_generation_cost: 0.0,
        expected_discomfort_penalty: 0.0,
        expected_battery_degradation: 0.0,
        expected_shed_penalty: 0.0,
        expected_wind_curtailment_penalty: 0.0,
        expected_solar_curtailment_penalty: 0.0,
        expected_bid_deviation_charge: 0.0,
        total_expected_profit: 0.0,
        expected_renewable_curtailment_kwh: 0.0,
    };
    for (sc, d) in scenarios.scenarios().iter().zip(second) {
        let rho = sc.probability;
        let pr = &sc.profile;
        for t in 0..nh {
            let dev = d.delivery[t] - first.bid[t];
            let charge = mk.bid_deviation_penalty[t] * dt * dev.abs();
            r.expected_revenue += rho * (dt * (first.bid[t] * pr.price_da[t] + dev * pr.price_rt[t]) - charge);
            r.expected_bid_deviation_charge += rho * charge;
            r.expected_shed_penalty += rho * dt * mk.value_of_lost_load[t] * d.shed[t];
            let ws: f64 = d.wind_curtailment.iter().map(|w| w[t]).sum();
            let pvs: f64 = d.solar_curtailment.iter().map(|p| p[t]).sum();
            r.expected_wind_curtailment_penalty += rho * dt * mk.wind_curtail_cost[t] * ws;
            r.expected_solar_curtailment_penalty += rho * dt * mk.solar_curtail_cost[t] * pvs;
            r.expected_renewable_curtailment_kwh += rho * dt * (ws + pvs);
        }
        for ((u, uc), power) in mg.units.iter().zip(&first.units).zip(&d.unit_power) {
            for t in 0..nh {
                r.expected_generation_cost += rho * unit_production_cost(u, uc.commit[t], power[t], dt)?;
            }
        }
        for (k, b) in mg.batteries.iter().enumerate() {
            for t in 0..nh {
                let wear = d.discharge[k][t] / b.eta_d + b.eta_c * d.charge[k][t];
                r.expected_battery_degradation += rho * dt * b.degradation_cost * wear;
            }
        }
        for (j, b) in mg.buildings.iter().enumerate() {
            for t in 0..nh {
                let w = b.hvac.discomfort_weight[t];
                if b.hvac.occupancy[t] && w > 0.0 {
                    let gap = (d.indoor_temp[j][t + 1] - b.hvac.desired_temp[t]).abs();
                    r.expected_discomfort_penalty += rho * w * b.count as f64 * gap;
                }
            }
        }
    }
    r.total_expected_profit = r.expected_revenue - r.total_costs();
    Ok(r)
}

pub fn profit_breakdown(mg: &MicrogridConfig, scenarios: &ScenarioSet, solution: &BiddingSolution) -> Result<ProfitReport, BidError> {
    profit_from_decisions(mg, scenarios, &solution.first, &solution.second)
}

/// Worst constraint residuals of a solved instance, measured on raw decisions.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub max_balance_residual: f64,
    pub max_line_violation: f64,
    pub max_comfort_violation: f64,
    pub max_thermal_residual: f64,
    pub max_energy_violation: f64,
    pub max_terminal_energy_error: f64,
    pub max_energy_dynamics_residual: f64,
    pub simultaneous_battery_slots: usize,
    pub unit_violations: usize,
    pub max_curtailment_violation: f64,
    pub max_shed_violation: f64,
    pub loss_of_load_excess: f64,
}

pub fn check_feasibility(mg: &MicrogridConfig, scenarios: &ScenarioSet, sol: &BiddingSolution) -> Result<FeasibilityReport, BidError> {
    check_dimensions(mg, scenarios, &sol.first, &sol.second)?;
    let nh = mg.horizon;
    let dt = mg.dt;
    let mk = &mg.market;
    let mut r = FeasibilityReport::default();
    let up = |acc: &mut f64, v: f64| *acc = acc.max(v);
    let models = mg.buildings.iter().map(|b| b.model(dt)).collect::<Result<Vec<_>, _>>()?;
    if let Some(cap) = &mk.line_capacity {
        for t in 0..nh {
            up(&mut r.max_line_violation, sol.first.bid[t].abs() - cap[t]);
            for d in &sol.second {
                up(&mut r.max_line_violation, d.delivery[t].abs() - cap[t]);
            }
        }
    }
    let mut expected_shed = vec![0.0; nh];
    for (sc, d) in scenarios.scenarios().iter().zip(&sol.second) {
        let pr = &sc.profile;
        for t in 0..nh {
            let mut supply: f64 = d.unit_power.iter().map(|p| p[t]).sum::<f64>() + d.shed[t];
            for (w, ws) in d.wind_curtailment.iter().enumerate() {
                supply += d.wind_available[w][t] - ws[t];
                up(&mut r.max_curtailment_violation, (-ws[t]).max(ws[t] - d.wind_available[w][t]));
            }
            for (p, pvs) in d.solar_curtailment.iter().enumerate() {
                supply += d.solar_available[p][t] - pvs[t];
                up(&mut r.max_curtailment_violation, (-pvs[t]).max(pvs[t] - d.solar_available[p][t]));
            }
            for k in 0..mg.batteries.len() {
                supply += d.discharge[k][t] - d.charge[k][t];
            }
            let demand = d.delivery[t] + d.hvac_power.iter().map(|h| h[t]).sum::<f64>() + pr.nonhvac_load[t];
            up(&mut r.max_balance_residual, (supply - demand).abs());
            up(&mut r.max_shed_violation, (-d.shed[t]).max(d.shed[t] - mk.max_shed[t]));
            expected_shed[t] += sc.probability * d.shed[t];
        }
        for (i, u) in mg.units.iter().enumerate() {
            r.unit_violations += validate_unit_schedule(u, &sol.first.units[i].commit, &d.unit_power[i], 1e-6)?.len();
        }
        for (k, b) in mg.batteries.iter().enumerate() {
            let e = &d.energy[k];
            for t in 0..nh {
                up(&mut r.max_energy_violation, (b.e_min - e[t + 1]).max(e[t + 1] - b.e_max));
                let next = e[t] + b.eta_c * d.charge[k][t] * dt - d.discharge[k][t] * dt / b.eta_d;
                up(&mut r.max_energy_dynamics_residual, (next - e[t + 1]).abs());
                if d.charge[k][t] > 1e-9 && d.discharge[k][t] > 1e-9 {
                    r.simultaneous_battery_slots += 1;
                }
            }
            up(&mut r.max_terminal_energy_error, (e[nh] - b.e_initial).abs());
        }
        for (j, b) in mg.buildings.iter().enumerate() {
            let inputs: Vec<crate::thermal::ThermalInput> = (0..nh)
                .map(|t| crate::thermal::ThermalInput {
                    ambient: pr.ambient[t],
                    irradiance: pr.irradiance[t],
                    hvac_power: d.hvac_power[j][t],
                })
                .collect();
            let traj = crate::thermal::simulate(&models[j], b.hvac.thermal.mode, b.hvac.thermal.cop, b.initial, &inputs)?;
            for t in 0..nh {
                let tin = d.indoor_temp[j][t + 1];
                up(&mut r.max_thermal_residual, (models[j].indoor(&traj[t + 1]) - tin).abs());
                if b.hvac.occupancy[t] {
                    let (td, dev) = (b.hvac.desired_temp[t], b.hvac.max_deviation[t]);
                    up(&mut r.max_comfort_violation, (td - dev - tin).max(tin - td - dev));
                }
            }
        }
    }
    let expected_load = scenarios.expected(SeriesKind::NonhvacLoad);
    for t in 0..nh {
        up(&mut r.loss_of_load_excess, expected_shed[t] - mk.max_loss_of_load_ratio[t] * expected_load[t]);
    }
    Ok(r)
}

impl FeasibilityReport {
    pub fn is_feasible(&self, tol: f64) -> bool {
        [
            self.max_balance_residual,
            self.max_line_violation,
            self.max_comfort_violation,
            self.max_thermal_residual,
            self.max_energy_violation,
            self.max_terminal_energy_error,
            self.max_energy_dynamics_residual,
            self.max_curtailment_violation,
            self.max_shed_violation,
            self.loss_of_load_excess,
        ]
        .iter()
        .all(|&v| v <= tol)
            && self.simultaneous_battery_slots == 0
            && self.unit_violations == 0
    }
}

/// HVAC-only trading plan of the separate scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HvacBidSolution {
    pub bid: Vec<f64>,
    /// `[scenario][building][slot]`
    pub hvac_power: Vec<Vec<Vec<f64>>>,
    pub indoor_temp: Vec<Vec<Vec<f64>>>,
    pub expected_trading_cost: f64,
    pub expected_deviation_charge: f64,
    pub expected_discomfort_penalty: f64,
    pub expected_cost: f64,
}

/// Buildings bid for their own HVAC energy, minimizing expected trading
/// cost, deviation charges and discomfort.
pub fn solve_hvac_bidding(mg: &MicrogridConfig, scenarios: &ScenarioSet, opts: &SolverOptions) -> Result<HvacBidSolution, BidError> {
    mg.validate()?;
    check_scenarios(mg, scenarios)?;
    let nh = mg.horizon;
    let dt = mg.dt;
    let mk = &mg.market;
    let models = mg.buildings.iter().map(|b| b.model(dt)).collect::<Result<Vec<_>, _>>()?;
    let mut m = OptModel::new(Sense::Minimize);
    let cap = |t: usize| mk.line_capacity.as_ref().map_or(f64::INFINITY, |c| c[t]);
    let mut bid = Vec::with_capacity(nh);
    for t in 0..nh {
        bid.push(m.add_continuous(format!("hvac_bid_{t}"), 0.0, cap(t))?);
    }
    let mut vars = Vec::with_capacity(scenarios.len());
    for (s, sc) in scenarios.scenarios().iter().enumerate() {
        let rho = sc.probability;
        let pr = &sc.profile;
        let mut per_building = Vec::with_capacity(mg.buildings.len());
        for (j, b) in mg.buildings.iter().enumerate() {
            per_building.push(add_building(&mut m, j, s, b, &models[j], pr, rho, false)?);
        }
        for t in 0..nh {
            let mut total = LinExpr::new();
            for (p, _, _) in &per_building {
                total.add_term(p[t], 1.0);
                m.add_objective_coef(p[t], rho * dt * pr.price_rt[t]);
            }
            m.add_objective_coef(bid[t], rho * dt * (pr.price_da[t] - pr.price_rt[t]));
            let psi = mk.bid_deviation_penalty[t];
            if psi > 0.0 {
                m.add_abs_term(format!("hvac_dev_{s}_{t}"), total.term(bid[t], -1.0), rho * psi * dt)?;
            }
        }
        vars.push(per_building);
    }
    let sol = solve_lp(&m, opts)?;
    match sol.status {
        Status::Optimal => {}
        Status::Infeasible => return Err(BidError::Infeasible { family: Some(ConstraintFamily::Comfort) }),
        other => return Err(BidError::Solver(other)),
    }
    let x = &sol.values;
    let bids: Vec<f64> = bid.iter().map(|v| x[v.0]).collect();
    let mut out = HvacBidSolution {
        bid: bids.clone(),
        hvac_power: Vec::with_capacity(scenarios.len()),
        indoor_temp: Vec::with_capacity(scenarios.len()),
        expected_trading_cost: 0.0,
        expected_deviation_charge: 0.0,
        expected_discomfort_penalty: 0.0,
        expected_cost: 0.0,
    };
    for (sc, per_building) in scenarios.scenarios().iter().zip(&vars) {
        let rho = sc.probability;
        let pr = &sc.profile;
        let powers: Vec<Vec<f64>> = per_building.iter().map(|(p, _, _)| p.iter().map(|v| x[v.0]).collect()).collect();
        let temps: Vec<Vec<f64>> = mg
            .buildings
            .iter()
            .zip(per_building)
            .map(|(b, (_, st, _))| std::iter::once(b.initial.t_in).chain(st.iter().map(|s| x[s[0].0])).collect())
            .collect();
        for t in 0..nh {
            let total: f64 = powers.iter().map(|p| p[t]).sum();
            let dev = total - bids[t];
            out.expected_trading_cost += rho * dt * (bids[t] * pr.price_da[t] + dev * pr.price_rt[t]);
            out.expected_deviation_charge += rho * dt * mk.bid_deviation_penalty[t] * dev.abs();
            for (j, b) in mg.buildings.iter().enumerate() {
                let w = b.hvac.discomfort_weight[t];
                if b.hvac.occupancy[t] && w > 0.0 {
                    let gap = (temps[j][t + 1] - b.hvac.desired_temp[t]).abs();
                    out.expected_discomfort_penalty += rho * w * b.count as f64 * gap;
                }
            }
        }
        out.hvac_power.push(powers);
        out.indoor_temp.push(temps);
    }
    out.expected_cost = out.expected_trading_cost + out.expected_deviation_charge + out.expected_discomfort_penalty;
    let tol = 1e-6 * (1.0 + sol.objective.abs());
    if (out.expected_cost - sol.objective).abs() > tol {
        return Err(BidError::ObjectiveMismatch { objective: sol.objective, recomputed: out.expected_cost });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Buildings and generation co-optimized.
    Coordinated,
    /// As coordinated, with indoor temperatures held at their set points.
    FixedComfort,
    /// Buildings bid on their own; the rest of the microgrid bids without them.
    Separate,
}

impl Scheme {
    pub fn from_number(n: u8) -> Option<Scheme> {
        match n {
            1 => Some(Scheme::Coordinated),
            2 => Some(Scheme::FixedComfort),
            3 => Some(Scheme::Separate),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeOutcome {
    pub scheme: Scheme,
    /// For the separate scheme this is the microgrid without buildings.
    pub bidding: BiddingSolution,
    pub hvac: Option<HvacBidSolution>,
    pub profit: ProfitReport,
}

pub fn run_scheme(mg: &MicrogridConfig, scenarios: &ScenarioSet, scheme: Scheme, opts: &SolverOptions) -> Result<SchemeOutcome, BidError> {
    match scheme {
        Scheme::Coordinated => {
            let bidding = solve_bidding(mg, scenarios, opts)?;
            Ok(SchemeOutcome { scheme, profit: bidding.profit.clone(), bidding, hvac: None })
        }
        Scheme::FixedComfort => {
            let bidding = solve_bidding(&mg.without_temperature_deviation(), scenarios, opts)?;
            Ok(SchemeOutcome { scheme, profit: bidding.profit.clone(), bidding, hvac: None })
        }
        Scheme::Separate => {
            let rest = MicrogridConfig { buildings: Vec::new(), ..mg.clone() };
            let (bidding, hvac) = rayon::join(|| solve_bidding(&rest, scenarios, opts), || solve_hvac_bidding(mg, scenarios, opts));
            let (bidding, hvac) = (bidding?, hvac?);
            let mut profit = bidding.profit.clone();
            profit.expected_revenue -= hvac.expected_trading_cost + hvac.expected_deviation_charge;
            profit.expected_bid_deviation_charge += hvac.expected_deviation_charge;
            profit.expected_discomfort_penalty += hvac.expected_discomfort_penalty;
            profit.total_expected_profit = bidding.profit.total_expected_profit - hvac.expected_cost;
            Ok(SchemeOutcome { scheme, bidding, hvac: Some(hvac), profit })
        }
    }
}
