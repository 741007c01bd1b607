//! Reference device parameters used by fixtures, tests and the CLI defaults.

use crate::devices::{
    BatterySpec, ConventionalUnit, CostSegment, DistanceUnit, EvSpec, SolarSpec, Trip, TripPlan, WindSpec,
    DEFAULT_BATTERY_EFFICIENCY,
};

/// 24 kWh compact EV, 6 kW charger, distances in miles.
pub fn leaf_ev() -> EvSpec {
    EvSpec {
        capacity: 24.0,
        eta_c: 0.9,
        eta_d: 0.9,
        p_charge_max: 6.0,
        p_discharge_max: 6.0,
        soc_min: 0.2,
        soc_max: 0.9,
        travel_efficiency: 0.316,
        distance_unit: DistanceUnit::Miles,
        soc_initial: 0.5,
    }
}

/// Commuter pattern on an hourly grid: away from 08:00 to 17:00, 32 miles.
pub fn commuter_trip() -> TripPlan {
    TripPlan { trips: vec![Trip { depart_slot: 8, return_slot: 17, distance: 32.0 }] }
}

fn single_segment_unit(a: f64, lambda: f64, p_min: f64, p_max: f64, cu: f64, ut: usize, dt: usize, ic: i64) -> ConventionalUnit {
    ConventionalUnit {
        p_min,
        p_max,
        segments: vec![CostSegment { marginal_cost: lambda, width: p_max - p_min }],
        fixed_cost: a,
        startup_cost: cu,
        shutdown_cost: 0.1 * cu,
        ramp_up: None,
        ramp_down: None,
        min_up: ut,
        min_down: dt,
        initial_status: ic,
    }
}

/// Two microturbines and a fuel cell.
pub fn reference_units() -> Vec<ConventionalUnit> {
    vec![
        single_segment_unit(30.0, 0.13, 100.0, 2000.0, 150.0, 2, 2, -2),
        single_segment_unit(50.0, 0.35, 100.0, 1000.0, 30.0, 0, 0, -1),
        single_segment_unit(80.0, 0.5, 100.0, 1000.0, 30.0, 0, 0, -1),
    ]
}

pub fn reference_battery() -> BatterySpec {
    BatterySpec {
        capacity: 200.0,
        e_min: 40.0,
        e_max: 180.0,
        p_charge_max: 100.0,
        p_discharge_max: 100.0,
        eta_c: DEFAULT_BATTERY_EFFICIENCY,
        eta_d: DEFAULT_BATTERY_EFFICIENCY,
        degradation_cost: 0.00027,
        e_initial: 110.0,
    }
}

pub fn reference_wind() -> WindSpec {
    WindSpec { rated_power: 1000.0, v_cut_in: 3.0, v_rated: 12.0, v_cut_out: 30.0 }
}

pub fn reference_solar() -> SolarSpec {
    SolarSpec { efficiency: 0.157, area: 7000.0 }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_valid() {
        leaf_ev().validate().unwrap();
        commuter_trip().validate(24).unwrap();
        reference_battery().validate().unwrap();
        reference_wind().validate().unwrap();
        reference_solar().validate().unwrap();
        for u in reference_units() {
            u.validate().unwrap();
        }
    }

    #[test]
    fn unit_table_values() {
        let u = reference_units();
        let fixed: Vec<f64> = u.iter().map(|x| x.fixed_cost).collect();
        let marginal: Vec<f64> = u.iter().map(|x| x.segments[0].marginal_cost).collect();
        let ic: Vec<i64> = u.iter().map(|x| x.initial_status).collect();
        assert_eq!(fixed, [30.0, 50.0, 80.0]);
        assert_eq!(marginal, [0.13, 0.35, 0.5]);
        assert_eq!(ic, [-2, -1, -1]);
        let cd: Vec<f64> = u.iter().map(|x| x.shutdown_cost).collect();
        assert_eq!(cd, [15.0, 3.0, 3.0]);
    }
}
