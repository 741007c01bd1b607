//! Device models: EVs and trips, HVAC comfort envelopes, stationary batteries,
//! dispatchable units and renewable power curves.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::thermal::BuildingThermalParams;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DeviceError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("trip needs more energy than stored: state of charge would reach {soc:.5}")]
    InfeasibleTrip { soc: f64 },
    #[error("invalid dispatch: {0}")]
    InvalidDispatch(String),
}

fn invalid(msg: impl Into<String>) -> DeviceError {
    DeviceError::InvalidParameter(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceUnit {
    Km,
    Miles,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvSpec {
    /// kWh
    pub capacity: f64,
    pub eta_c: f64,
    pub eta_d: f64,
    /// kW
    pub p_charge_max: f64,
    /// kW
    pub p_discharge_max: f64,
    pub soc_min: f64,
    pub soc_max: f64,
    /// kWh per distance unit
    pub travel_efficiency: f64,
    pub distance_unit: DistanceUnit,
    pub soc_initial: f64,
}

impl EvSpec {
    pub fn validate(&self) -> Result<(), DeviceError> {
        if !(self.capacity > 0.0 && self.p_charge_max > 0.0) {
            return Err(invalid("EV capacity and charger rating must be positive"));
        }
        if !(self.p_discharge_max >= 0.0) {
            return Err(invalid("EV discharge limit must be non-negative"));
        }
        for (name, eta) in [("eta_c", self.eta_c), ("eta_d", self.eta_d)] {
            if !(eta > 0.0 && eta <= 1.0) {
                return Err(invalid(format!("EV {name} must lie in (0, 1], got {eta}")));
            }
        }
        if !(0.0 <= self.soc_min && self.soc_min < self.soc_max && self.soc_max <= 1.0) {
            return Err(invalid(format!("EV SOC range [{}, {}] is invalid", self.soc_min, self.soc_max)));
        }
        if !(self.soc_min <= self.soc_initial && self.soc_initial <= self.soc_max) {
            return Err(invalid(format!("EV initial SOC {} is outside its range", self.soc_initial)));
        }
        if !(self.travel_efficiency >= 0.0) {
            return Err(invalid("EV travel efficiency must be non-negative"));
        }
        Ok(())
    }
}

pub fn ev_soc_step(spec: &EvSpec, soc: f64, p_charge: f64, p_discharge: f64, dt: f64) -> Result<f64, DeviceError> {
    if p_charge < 0.0 || p_discharge < 0.0 {
        return Err(invalid(format!("EV powers must be non-negative, got {p_charge} and {p_discharge}")));
    }
    Ok(soc + spec.eta_c * p_charge * dt / spec.capacity - p_discharge * dt / (spec.eta_d * spec.capacity))
}

/// SOC on return from a trip of `distance` (in the spec's distance unit).
pub fn ev_apply_trip(spec: &EvSpec, soc_at_departure: f64, distance: f64) -> Result<f64, DeviceError> {
    if distance < 0.0 {
        return Err(invalid(format!("trip distance must be non-negative, got {distance}")));
    }
    let soc = soc_at_departure - distance * spec.travel_efficiency / spec.capacity;
    if soc < 0.0 {
        return Err(DeviceError::InfeasibleTrip { soc });
    }
    Ok(soc)
}

/// One trip away from home, occupying slots `depart_slot..return_slot` (0-based, half-open).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trip {
    pub depart_slot: usize,
    pub return_slot: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TripPlan {
    pub trips: Vec<Trip>,
}

impl TripPlan {
    pub fn validate(&self, horizon: usize) -> Result<(), DeviceError> {
        let mut free_from = 0usize;
        for (k, t) in self.trips.iter().enumerate() {
            if t.depart_slot >= t.return_slot {
                return Err(invalid(format!("trip {k} departs at {} but returns at {}", t.depart_slot, t.return_slot)));
            }
            if t.depart_slot < free_from {
                return Err(invalid(format!("trip {k} overlaps or precedes the previous trip")));
            }
            if t.return_slot > horizon {
                return Err(invalid(format!("trip {k} returns at slot {} beyond the horizon {horizon}", t.return_slot)));
            }
            if !(t.distance >= 0.0) {
                return Err(invalid(format!("trip {k} has negative distance")));
            }
            free_from = t.return_slot;
        }
        Ok(())
    }

    /// Per-slot flag, true when the vehicle is parked at home.
    pub fn availability(&self, horizon: usize) -> Vec<bool> {
        let mut avail = vec![true; horizon];
        for t in &self.trips {
            for a in avail.iter_mut().take(t.return_slot.min(horizon)).skip(t.depart_slot) {
                *a = false;
            }
        }
        avail
    }
}

/// HVAC unit with its building and per-slot comfort envelope. Entry `k` of the
/// per-slot vectors refers to the indoor temperature at the end of slot `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HvacSpec {
    /// kW
    pub rated_power: f64,
    pub thermal: BuildingThermalParams,
    pub desired_temp: Vec<f64>,
    pub max_deviation: Vec<f64>,
    pub occupancy: Vec<bool>,
    pub discomfort_weight: Vec<f64>,
}

impl HvacSpec {
    pub fn validate(&self, horizon: usize) -> Result<(), DeviceError> {
        if !(self.rated_power > 0.0) {
            return Err(invalid(format!("HVAC rated power must be positive, got {}", self.rated_power)));
        }
        self.thermal.validate().map_err(|e| invalid(e.to_string()))?;
        for (name, len) in [
            ("desired_temp", self.desired_temp.len()),
            ("max_deviation", self.max_deviation.len()),
            ("occupancy", self.occupancy.len()),
            ("discomfort_weight", self.discomfort_weight.len()),
        ] {
            if len != horizon {
                return Err(invalid(format!("HVAC {name} has {len} entries, expected {horizon}")));
            }
        }
        if self.max_deviation.iter().any(|d| !(*d >= 0.0)) {
            return Err(invalid("HVAC max deviation must be non-negative"));
        }
        if self.discomfort_weight.iter().any(|w| !(*w >= 0.0)) {
            return Err(invalid("HVAC discomfort weight must be non-negative"));
        }
        Ok(())
    }

    /// Uniform envelope over `horizon` slots.
    pub fn uniform(rated_power: f64, thermal: BuildingThermalParams, desired: f64, deviation: f64, weight: f64, horizon: usize) -> Self {
        Self {
            rated_power,
            thermal,
            desired_temp: vec![desired; horizon],
            max_deviation: vec![deviation; horizon],
            occupancy: vec![true; horizon],
            discomfort_weight: vec![weight; horizon],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatterySpec {
    /// kWh
    pub capacity: f64,
    pub e_min: f64,
    pub e_max: f64,
    /// kW
    pub p_charge_max: f64,
    pub p_discharge_max: f64,
    #[serde(default = "default_battery_eta")]
    pub eta_c: f64,
    #[serde(default = "default_battery_eta")]
    pub eta_d: f64,
    /// $/kWh
    pub degradation_cost: f64,
    pub e_initial: f64,
}

pub const DEFAULT_BATTERY_EFFICIENCY: f64 = 0.95;

fn default_battery_eta() -> f64 {
    DEFAULT_BATTERY_EFFICIENCY
}

impl BatterySpec {
    pub fn validate(&self) -> Result<(), DeviceError> {
        if !(0.0 <= self.e_min && self.e_min <= self.e_initial && self.e_initial <= self.e_max && self.e_max <= self.capacity) {
            return Err(invalid(format!(
                "battery energies must satisfy 0 ≤ e_min ≤ e_initial ≤ e_max ≤ capacity, got {} {} {} {}",
                self.e_min, self.e_initial, self.e_max, self.capacity
            )));
        }
        for (name, eta) in [("eta_c", self.eta_c), ("eta_d", self.eta_d)] {
            if !(eta > 0.0 && eta <= 1.0) {
                return Err(invalid(format!("battery {name} must lie in (0, 1], got {eta}")));
            }
        }
        if !(self.p_charge_max >= 0.0 && self.p_discharge_max >= 0.0 && self.degradation_cost >= 0.0) {
            return Err(invalid("battery power limits and degradation cost must be non-negative"));
        }
        Ok(())
    }
}

pub fn battery_energy_step(spec: &BatterySpec, energy: f64, p_charge: f64, p_discharge: f64, dt: f64) -> Result<f64, DeviceError> {
    if p_charge < 0.0 || p_discharge < 0.0 {
        return Err(invalid(format!("battery powers must be non-negative, got {p_charge} and {p_discharge}")));
    }
    Ok(energy + spec.eta_c * p_charge * dt - p_discharge * dt / spec.eta_d)
}

/// Piece of a convex production cost curve above minimum output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostSegment {
    /// $/kWh
    pub marginal_cost: f64,
    /// kW
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConventionalUnit {
    pub p_min: f64,
    pub p_max: f64,
    pub segments: Vec<CostSegment>,
    /// $ per committed slot
    pub fixed_cost: f64,
    pub startup_cost: f64,
    pub shutdown_cost: f64,
    /// kW per slot; `None` leaves ramping unconstrained
    #[serde(default)]
    pub ramp_up: Option<f64>,
    #[serde(default)]
    pub ramp_down: Option<f64>,
    pub min_up: usize,
    pub min_down: usize,
    /// Slots already ON (positive) or OFF (negative) before the horizon.
    pub initial_status: i64,
}

impl ConventionalUnit {
    pub fn validate(&self) -> Result<(), DeviceError> {
        if !(0.0 < self.p_min && self.p_min <= self.p_max) {
            return Err(invalid(format!("unit limits must satisfy 0 < p_min ≤ p_max, got {} and {}", self.p_min, self.p_max)));
        }
        let width: f64 = self.segments.iter().map(|s| s.width).sum();
        if self.segments.iter().any(|s| s.width < 0.0) {
            return Err(invalid("segment widths must be non-negative"));
        }
        if (width - (self.p_max - self.p_min)).abs() > 1e-9 * (1.0 + self.p_max) {
            return Err(invalid(format!("segment widths sum to {width}, expected {}", self.p_max - self.p_min)));
        }
        if self.segments.windows(2).any(|w| w[1].marginal_cost < w[0].marginal_cost) {
            return Err(invalid("segment marginal costs must be non-decreasing"));
        }
        if self.initial_status == 0 {
            return Err(invalid("initial status must be non-zero (signed slot count)"));
        }
        for r in [self.ramp_up, self.ramp_down].into_iter().flatten() {
            if !(r >= 0.0) {
                return Err(invalid("ramp limits must be non-negative"));
            }
        }
        Ok(())
    }

    pub fn initially_on(&self) -> bool {
        self.initial_status > 0
    }

    /// Output assumed for the slot before the horizon.
    pub fn initial_power(&self) -> f64 {
        if self.initially_on() {
            self.p_min
        } else {
            0.0
        }
    }

    /// Number of leading slots forced ON (positive) or OFF (negative) by the carry-in.
    pub fn carry_in(&self) -> (usize, usize) {
        let k = self.initial_status.unsigned_abs() as usize;
        if self.initially_on() {
            (self.min_up.saturating_sub(k), 0)
        } else {
            (0, self.min_down.saturating_sub(k))
        }
    }

    /// Greedy in-order fill of the cost segments above `p_min`.
    pub fn segment_fill(&self, power: f64) -> Vec<f64> {
        let mut rest = (power - self.p_min).max(0.0);
        self.segments
            .iter()
            .map(|s| {
                let take = rest.min(s.width);
                rest -= take;
                take
            })
            .collect()
    }
}

pub fn unit_production_cost(unit: &ConventionalUnit, committed: bool, power: f64, dt: f64) -> Result<f64, DeviceError> {
    let tol = 1e-9 * (1.0 + unit.p_max);
    if !committed {
        if power.abs() > tol {
            return Err(DeviceError::InvalidDispatch(format!("uncommitted unit produces {power} kW")));
        }
        return Ok(0.0);
    }
    if power < unit.p_min - tol || power > unit.p_max + tol {
        return Err(DeviceError::InvalidDispatch(format!(
            "power {power} kW outside [{}, {}]",
            unit.p_min, unit.p_max
        )));
    }
    let fill = unit.segment_fill(power);
    let variable: f64 = unit.segments.iter().zip(&fill).map(|(s, p)| s.marginal_cost * p).sum();
    Ok(unit.fixed_cost + dt * variable)
}

/// Constraint breaches found by [`validate_unit_schedule`]; slots are 0-based.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum UnitViolation {
    GenerationBounds { slot: usize, power: f64 },
    RampUp { slot: usize, change: f64 },
    RampDown { slot: usize, change: f64 },
    MinUp { slot: usize },
    MinDown { slot: usize },
    InitialStatus { slot: usize },
}

pub fn validate_unit_schedule(
    unit: &ConventionalUnit,
    commitments: &[bool],
    powers: &[f64],
    tol: f64,
) -> Result<Vec<UnitViolation>, DeviceError> {
    if commitments.len() != powers.len() {
        return Err(invalid(format!(
            "{} commitments but {} powers",
            commitments.len(),
            powers.len()
        )));
    }
    let nh = commitments.len();
    let mut out = Vec::new();
    for t in 0..nh {
        let p = powers[t];
        let ok = if commitments[t] {
            p >= unit.p_min - tol && p <= unit.p_max + tol
        } else {
            p.abs() <= tol
        };
        if !ok {
            out.push(UnitViolation::GenerationBounds { slot: t, power: p });
        }
    }
    let prev_on = |t: usize| if t == 0 { unit.initially_on() } else { commitments[t - 1] };
    let prev_p = |t: usize| if t == 0 { unit.initial_power() } else { powers[t - 1] };
    for t in 0..nh {
        let start = commitments[t] && !prev_on(t);
        let stop = !commitments[t] && prev_on(t);
        let delta = powers[t] - prev_p(t);
        if let Some(ur) = unit.ramp_up {
            let limit = if start { unit.p_min } else { ur };
            if delta > limit + tol {
                out.push(UnitViolation::RampUp { slot: t, change: delta });
            }
        }
        if let Some(dr) = unit.ramp_down {
            let limit = if stop { unit.p_min } else { dr };
            if -delta > limit + tol {
                out.push(UnitViolation::RampDown { slot: t, change: -delta });
            }
        }
        if start && (t..(t + unit.min_up).min(nh)).any(|h| !commitments[h]) {
            out.push(UnitViolation::MinUp { slot: t });
        }
        if stop && (t..(t + unit.min_down).min(nh)).any(|h| commitments[h]) {
            out.push(UnitViolation::MinDown { slot: t });
        }
    }
    let (on_first, off_first) = unit.carry_in();
    for t in 0..on_first.min(nh) {
        if !commitments[t] {
            out.push(UnitViolation::InitialStatus { slot: t });
        }
    }
    for t in 0..off_first.min(nh) {
        if commitments[t] {
            out.push(UnitViolation::InitialStatus { slot: t });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindSpec {
    /// kW
    pub rated_power: f64,
    /// m/s
    pub v_cut_in: f64,
    pub v_rated: f64,
    pub v_cut_out: f64,
}

impl WindSpec {
    pub fn validate(&self) -> Result<(), DeviceError> {
        if !(0.0 <= self.v_cut_in && self.v_cut_in < self.v_rated && self.v_rated < self.v_cut_out) {
            return Err(invalid("wind speeds must satisfy 0 ≤ cut-in < rated < cut-out"));
        }
        if !(self.rated_power >= 0.0) {
            return Err(invalid("wind rated power must be non-negative"));
        }
        Ok(())
    }
}

pub fn wind_available_power(spec: &WindSpec, wind_speed: f64) -> f64 {
    let v = wind_speed;
    if v <= spec.v_cut_in || v >= spec.v_cut_out {
        0.0
    } else if v <= spec.v_rated {
        spec.rated_power * (v - spec.v_cut_in) / (spec.v_rated - spec.v_cut_in)
    } else {
        spec.rated_power
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolarSpec {
    pub efficiency: f64,
    /// m²
    pub area: f64,
}

impl SolarSpec {
    pub fn validate(&self) -> Result<(), DeviceError> {
        if !(self.efficiency > 0.0 && self.efficiency < 1.0 && self.area > 0.0) {
            return Err(invalid("solar efficiency must lie in (0, 1) and area must be positive"));
        }
        Ok(())
    }
}

/// Irradiance in kW/m², ambient in °C.
pub fn solar_available_power(spec: &SolarSpec, irradiance: f64, ambient: f64) -> f64 {
    (spec.efficiency * spec.area * irradiance * (1.0 - 0.005 * (ambient - 25.0))).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use proptest::prelude::*;

    #[test]
    fn soc_step_examples() {
        let ev = presets::leaf_ev();
        let up = ev_soc_step(&ev, 0.5, 6.0, 0.0, 1.0).unwrap();
        assert!((up - 0.725).abs() < 1e-12);
        let down = ev_soc_step(&ev, 0.725, 0.0, 6.0, 1.0).unwrap();
        assert!((down - (0.725 - 6.0 / (0.9 * 24.0))).abs() < 1e-12);
        assert!((down - 0.44722).abs() < 1e-5);
        assert_eq!(ev_soc_step(&ev, 0.31, 0.0, 0.0, 1.0).unwrap(), 0.31);
        assert!(ev_soc_step(&ev, 0.5, -1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn trip_examples() {
        let ev = presets::leaf_ev();
        let back = ev_apply_trip(&ev, 0.9, 32.0).unwrap();
        assert!((back - (0.9 - 10.112 / 24.0)).abs() < 1e-12);
        assert!((back - 0.47867).abs() < 1e-5);
        assert_eq!(ev_apply_trip(&ev, 0.6, 0.0).unwrap(), 0.6);
        match ev_apply_trip(&ev, 0.2, 32.0) {
            Err(DeviceError::InfeasibleTrip { soc }) => assert!((soc + 0.2213333).abs() < 1e-6),
            other => panic!("expected infeasible trip, got {other:?}"),
        }
    }

    #[test]
    fn availability_excludes_trip_slots() {
        let plan = TripPlan { trips: vec![Trip { depart_slot: 8, return_slot: 17, distance: 32.0 }] };
        plan.validate(24).unwrap();
        let a = plan.availability(24);
        assert!(a[7] && !a[8] && !a[16] && a[17]);
        assert_eq!(a.iter().filter(|x| !**x).count(), 9);
        let bad = TripPlan {
            trips: vec![
                Trip { depart_slot: 2, return_slot: 6, distance: 1.0 },
                Trip { depart_slot: 5, return_slot: 9, distance: 1.0 },
            ],
        };
        assert!(bad.validate(24).is_err());
        let late = TripPlan { trips: vec![Trip { depart_slot: 20, return_slot: 25, distance: 1.0 }] };
        assert!(late.validate(24).is_err());
    }

    #[test]
    fn wind_curve_examples() {
        let w = presets::reference_wind();
        assert_eq!(wind_available_power(&w, 2.0), 0.0);
        assert!((wind_available_power(&w, 7.5) - 500.0).abs() < 1e-9);
        assert_eq!(wind_available_power(&w, 20.0), 1000.0);
        assert_eq!(wind_available_power(&w, 31.0), 0.0);
        assert_eq!(wind_available_power(&w, 30.0), 0.0);
        assert_eq!(wind_available_power(&w, 12.0), 1000.0);
        assert_eq!(wind_available_power(&w, 3.0), 0.0);
    }

    #[test]
    fn solar_examples() {
        let s = presets::reference_solar();
        assert!((solar_available_power(&s, 1.0, 25.0) - 1099.0).abs() < 1e-9);
        assert!((solar_available_power(&s, 1.0, 25.0) - 1100.0).abs() <= 0.002 * 1100.0);
        assert_eq!(solar_available_power(&s, 0.0, 30.0), 0.0);
        assert!((solar_available_power(&s, 1.0, 35.0) - 1044.05).abs() < 1e-9);
        assert_eq!(solar_available_power(&s, 1.0, 250.0), 0.0);
    }

    #[test]
    fn battery_examples() {
        let b = presets::reference_battery();
        assert!((battery_energy_step(&b, 100.0, 100.0, 0.0, 1.0).unwrap() - 195.0).abs() < 1e-12);
        assert_eq!(battery_energy_step(&b, 77.0, 0.0, 0.0, 1.0).unwrap(), 77.0);
        let mid = battery_energy_step(&b, 100.0, 40.0, 0.0, 1.0).unwrap();
        let back = battery_energy_step(&b, mid, 0.0, 40.0, 1.0).unwrap();
        assert!(back < 100.0);
        assert!(battery_energy_step(&b, 100.0, 0.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn production_cost_examples() {
        let u = &presets::reference_units()[0];
        assert!((unit_production_cost(u, true, 2000.0, 1.0).unwrap() - 277.0).abs() < 1e-9);
        assert!((unit_production_cost(u, true, 100.0, 1.0).unwrap() - 30.0).abs() < 1e-12);
        assert_eq!(unit_production_cost(u, false, 0.0, 1.0).unwrap(), 0.0);
        assert!(unit_production_cost(u, true, 50.0, 1.0).is_err());
        assert!(unit_production_cost(u, false, 10.0, 1.0).is_err());
    }

    #[test]
    fn schedule_validation_examples() {
        let mut u = presets::reference_units()[0].clone();
        assert_eq!(u.initial_status, -2);
        assert_eq!(u.min_down, 2);
        let off = validate_unit_schedule(&u, &[false; 6], &[0.0; 6], 1e-6).unwrap();
        assert!(off.is_empty());

        let v = validate_unit_schedule(&u, &[true, false, false], &[100.0, 0.0, 0.0], 1e-6).unwrap();
        assert!(v.contains(&UnitViolation::MinUp { slot: 0 }), "{v:?}");

        u.ramp_up = Some(500.0);
        let v = validate_unit_schedule(&u, &[true, true], &[100.0, 2000.0], 1e-6).unwrap();
        assert!(v.iter().any(|x| matches!(x, UnitViolation::RampUp { slot: 1, .. })), "{v:?}");

        assert!(validate_unit_schedule(&u, &[true], &[1.0, 2.0], 1e-6).is_err());
    }

    #[test]
    fn carry_in_forces_leading_slots() {
        let mut u = presets::reference_units()[0].clone();
        u.initial_status = 1;
        u.min_up = 3;
        assert_eq!(u.carry_in(), (2, 0));
        let v = validate_unit_schedule(&u, &[true, false, false, false], &[100.0, 0.0, 0.0, 0.0], 1e-6).unwrap();
        assert!(v.contains(&UnitViolation::InitialStatus { slot: 1 }));
        u.initial_status = -1;
        u.min_down = 4;
        assert_eq!(u.carry_in(), (0, 3));
    }

    #[test]
    fn min_up_truncates_at_horizon() {
        let mut u = presets::reference_units()[1].clone();
        u.min_up = 5;
        let v = validate_unit_schedule(&u, &[false, false, true, true], &[0.0, 0.0, 100.0, 100.0], 1e-6).unwrap();
        assert!(v.is_empty(), "{v:?}");
    }

    fn arb_unit() -> impl Strategy<Value = ConventionalUnit> {
        (10.0f64..200.0, prop::collection::vec((0.01f64..0.3, 10.0f64..500.0), 1..5)).prop_map(|(p_min, raw)| {
            let mut costs: Vec<f64> = raw.iter().map(|r| r.0).collect();
            costs.sort_by(f64::total_cmp);
            let segments: Vec<CostSegment> =
                costs.iter().zip(&raw).map(|(&c, r)| CostSegment { marginal_cost: c, width: r.1 }).collect();
            let p_max = p_min + segments.iter().map(|s| s.width).sum::<f64>();
            ConventionalUnit {
                p_min,
                p_max,
                segments,
                fixed_cost: 20.0,
                startup_cost: 10.0,
                shutdown_cost: 1.0,
                ramp_up: None,
                ramp_down: None,
                min_up: 1,
                min_down: 1,
                initial_status: -1,
            }
        })
    }

    proptest! {
        #[test]
        fn wind_curve_is_monotone_below_rated(a in 0.0f64..12.0, b in 0.0f64..12.0) {
            let w = presets::reference_wind();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(wind_available_power(&w, lo) <= wind_available_power(&w, hi) + 1e-12);
        }

        #[test]
        fn wind_curve_is_continuous_on_ramp(v in 3.0f64..12.0) {
            let w = presets::reference_wind();
            let h = 1e-7;
            prop_assert!((wind_available_power(&w, (v + h).min(12.0)) - wind_available_power(&w, v)).abs() < 1e-3);
        }

        #[test]
        fn production_cost_is_convex_nondecreasing(u in arb_unit(), s in 0.0f64..1.0, t in 0.0f64..1.0, lam in 0.0f64..1.0) {
            u.validate().unwrap();
            let p = |x: f64| u.p_min + x * (u.p_max - u.p_min);
            let c = |x: f64| unit_production_cost(&u, true, p(x), 1.0).unwrap();
            let (lo, hi) = if s <= t { (s, t) } else { (t, s) };
            prop_assert!(c(lo) <= c(hi) + 1e-9);
            let mid = lam * s + (1.0 - lam) * t;
            prop_assert!(c(mid) <= lam * c(s) + (1.0 - lam) * c(t) + 1e-7);
        }

        #[test]
        fn soc_step_is_affine(p1 in 0.0f64..6.0, p2 in 0.0f64..6.0, soc in 0.2f64..0.9) {
            let ev = presets::leaf_ev();
            let whole = ev_soc_step(&ev, soc, p1 + p2, 0.0, 0.5).unwrap();
            let first = ev_soc_step(&ev, soc, p1, 0.0, 0.5).unwrap();
            let split = ev_soc_step(&ev, first, p2, 0.0, 0.5).unwrap();
            prop_assert!((whole - split).abs() < 1e-12);
        }
    }
}
