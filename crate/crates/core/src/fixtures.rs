//! Synthetic, seeded instances for tests, acceptance runs and CLI demos.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::devices::{solar_available_power, wind_available_power, HvacSpec, Trip, TripPlan};
use crate::presets;
use crate::scenario::{
    reduce_fast_forward, sample_scenarios, standard_normal_quantile, DistanceMetric, HourlyProfile, ScenarioSet,
    UncertaintySpec,
};
use crate::sched_evhvac::{CommunityProblem, EvAssignment, Household};
use crate::sched_mgbid::{Building, MarketParams, MicrogridConfig};
use crate::thermal::{BuildingThermalParams, ThermalState};

pub const DAY_SLOTS: usize = 24;

/// Hourly weather and day-ahead prices of a hot summer day.
#[derive(Debug, Clone, PartialEq)]
pub struct DayProfile {
    pub prices: Vec<f64>,
    pub ambient: Vec<f64>,
    pub irradiance: Vec<f64>,
}

pub fn summer_day() -> DayProfile {
    let hours = 0..DAY_SLOTS;
    let prices = hours
        .clone()
        .map(|t| match t {
            0..=5 => 0.028,
            6..=11 => 0.045,
            12..=13 => 0.07,
            14..=20 => 0.13,
            _ => 0.05,
        })
        .collect();
    let ambient = hours
        .clone()
        .map(|t| 29.0 + 5.0 * ((t as f64 - 9.0) * std::f64::consts::PI / 12.0).sin())
        .collect();
    let irradiance = hours
        .map(|t| {
            let x = (t as f64 - 6.0) / 13.0;
            if (0.0..=1.0).contains(&x) {
                0.8 * (x * std::f64::consts::PI).sin()
            } else {
                0.0
            }
        })
        .collect();
    DayProfile { prices, ambient, irradiance }
}

/// One house with one commuter EV on the summer day.
pub fn single_house(w: f64, delta: f64, v2g: bool, allow_discharge: bool) -> CommunityProblem {
    let day = summer_day();
    let mut ev = presets::leaf_ev();
    if !allow_discharge {
        ev.p_discharge_max = 0.0;
    }
    let house = Household {
        id: "house-1".into(),
        hvac: HvacSpec::uniform(4.0, BuildingThermalParams::default(), 23.0, delta, w, DAY_SLOTS),
        evs: vec![EvAssignment { spec: ev, trips: presets::commuter_trip() }],
        initial_thermal: ThermalState::uniform(23.0),
    };
    CommunityProblem {
        households: vec![house],
        prices: day.prices,
        ambient: day.ambient,
        irradiance: day.irradiance,
        dt: 1.0,
        grid_limit: vec![25.0; DAY_SLOTS],
        v2g_allowed: v2g,
    }
}

/// House A is empty with a parked, nearly full EV; house B has no EV and
/// needs afternoon cooling. Only joint scheduling lets A's EV serve B.
pub fn exchange_pair() -> CommunityProblem {
    let day = summer_day();
    let mut ev = presets::leaf_ev();
    ev.soc_initial = 0.9;
    let mut hvac_a = HvacSpec::uniform(4.0, BuildingThermalParams::default(), 23.0, 2.0, 0.05, DAY_SLOTS);
    hvac_a.occupancy = vec![false; DAY_SLOTS];
    let a = Household {
        id: "house-a".into(),
        hvac: hvac_a,
        evs: vec![EvAssignment { spec: ev, trips: TripPlan::default() }],
        initial_thermal: ThermalState::uniform(23.0),
    };
    let b = Household {
        id: "house-b".into(),
        hvac: HvacSpec::uniform(4.0, BuildingThermalParams::default(), 23.0, 2.0, 0.05, DAY_SLOTS),
        evs: vec![],
        initial_thermal: ThermalState::uniform(23.0),
    };
    CommunityProblem {
        households: vec![a, b],
        prices: day.prices,
        ambient: day.ambient,
        irradiance: day.irradiance,
        dt: 1.0,
        grid_limit: vec![50.0; DAY_SLOTS],
        v2g_allowed: false,
    }
}

fn spread(rng: &mut ChaCha8Rng, mean: f64, rel: f64) -> f64 {
    mean * rng.random_range(1.0 - rel..=1.0 + rel)
}

fn normal(rng: &mut ChaCha8Rng, mean: f64, sd: f64) -> f64 {
    mean + sd * standard_normal_quantile(rng.random::<f64>())
}

/// Diverse community: thermal parameters within ±20 % of the reference house,
/// 4–6 kW HVAC with COP 2.5–3.5, zero to two commuter EVs per house.
pub fn random_community(seed: u64, houses: usize, w: f64, delta: f64) -> CommunityProblem {
    let day = summer_day();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = BuildingThermalParams::default();
    let mut households = Vec::with_capacity(houses);
    for j in 0..houses {
        let thermal = BuildingThermalParams {
            r_a: spread(&mut rng, base.r_a, 0.2),
            r_m: spread(&mut rng, base.r_m, 0.2),
            r_e: spread(&mut rng, base.r_e, 0.2),
            r_ea: spread(&mut rng, base.r_ea, 0.2),
            c_air: spread(&mut rng, base.c_air, 0.2),
            c_m: spread(&mut rng, base.c_m, 0.2),
            c_e: spread(&mut rng, base.c_e, 0.2),
            cop: rng.random_range(2.5..=3.5),
            ..base
        };
        let rated = rng.random_range(4.0..=6.0);
        let ev_count = rng.random_range(0..=2usize);
        let mut evs = Vec::with_capacity(ev_count);
        for _ in 0..ev_count {
            let mut spec = presets::leaf_ev();
            spec.soc_initial = rng.random_range(spec.soc_min..=spec.soc_max);
            let depart = normal(&mut rng, 7.0, 2.0).round().clamp(4.0, 11.0) as usize;
            let back = normal(&mut rng, 18.0, 2.0).round().clamp(14.0, 22.0) as usize;
            let miles = (32.0 * normal(&mut rng, 0.0, 0.65).exp()).clamp(2.0, 45.0);
            evs.push(EvAssignment { spec, trips: TripPlan { trips: vec![Trip { depart_slot: depart, return_slot: back, distance: miles }] } });
        }
        households.push(Household {
            id: format!("house-{}", j + 1),
            hvac: HvacSpec::uniform(rated, thermal, 23.0, delta, w, DAY_SLOTS),
            evs,
            initial_thermal: ThermalState::uniform(rng.random_range(22.0..=24.0)),
        });
    }
    CommunityProblem {
        households,
        prices: day.prices,
        ambient: day.ambient,
        irradiance: day.irradiance,
        dt: 1.0,
        grid_limit: vec![1000.0; DAY_SLOTS],
        v2g_allowed: false,
    }
}

/// Day-ahead forecast for the microgrid: prices in $/kWh, load in kW.
/// Non-HVAC load is scaled so its daily energy is `load_scaling` times the
/// forecast wind and solar energy.
pub fn microgrid_forecast(load_scaling: f64) -> HourlyProfile {
    let pi = std::f64::consts::PI;
    let hours: Vec<f64> = (0..DAY_SLOTS).map(|t| t as f64).collect();
    let price_da: Vec<f64> = hours
        .iter()
        .map(|&t| match t as usize {
            0..=5 => 0.03,
            6..=9 => 0.05,
            10..=12 => 0.09,
            13..=19 => 0.18,
            20..=21 => 0.1,
            _ => 0.05,
        })
        .collect();
    let price_rt = price_da
        .iter()
        .zip(&hours)
        .map(|(p, &t)| p * (1.0 + 0.1 * (t * pi / 6.0).sin()))
        .collect();
    let ambient = hours.iter().map(|&t| 31.0 + 4.0 * ((t - 9.0) * pi / 12.0).sin()).collect();
    let irradiance = hours
        .iter()
        .map(|&t| {
            let x = (t - 6.0) / 13.0;
            if (0.0..=1.0).contains(&x) {
                0.9 * (x * pi).sin()
            } else {
                0.0
            }
        })
        .collect();
    let wind_speed = hours.iter().map(|&t| 7.0 + 3.0 * ((t - 3.0) * pi / 12.0).cos()).collect();
    let shape: Vec<f64> = hours
        .iter()
        .map(|&t| 0.6 + 0.25 * ((t - 8.0) * pi / 12.0).sin().max(0.0) + 0.35 * (-(t - 19.0).powi(2) / 8.0).exp())
        .collect();
    let mut profile = HourlyProfile {
        price_da,
        price_rt,
        ambient,
        irradiance,
        wind_speed,
        nonhvac_load: shape,
    };
    let wind = presets::reference_wind();
    let solar = presets::reference_solar();
    let renewable: f64 = (0..DAY_SLOTS)
        .map(|t| {
            wind_available_power(&wind, profile.wind_speed[t])
                + solar_available_power(&solar, profile.irradiance[t], profile.ambient[t])
        })
        .sum();
    let total: f64 = profile.nonhvac_load.iter().sum();
    let k = load_scaling * renewable / total;
    profile.nonhvac_load.iter_mut().for_each(|v| *v *= k);
    profile
}

/// Reference microgrid: three conventional units, one wind turbine, one PV
/// array and 100 buildings with 10 kW HVAC split into `groups` lumped
/// classes of slightly different construction. No battery, no line limit.
pub fn microgrid_base_case(groups: usize) -> MicrogridConfig {
    let forecast = microgrid_forecast(0.5);
    let base = BuildingThermalParams::default();
    let groups = groups.clamp(1, 100);
    let buildings = (0..groups)
        .map(|g| {
            let f = if groups == 1 { 1.0 } else { 0.85 + 0.3 * g as f64 / (groups - 1) as f64 };
            let thermal = BuildingThermalParams { r_a: base.r_a * f, c_m: base.c_m / f, ..base };
            let count = (100 * (g + 1) / groups - 100 * g / groups) as u32;
            Building {
                hvac: HvacSpec::uniform(10.0, thermal, 23.0, 2.0, 0.0, DAY_SLOTS),
                initial: ThermalState::uniform(23.0),
                count,
            }
        })
        .collect();
    let max_shed: Vec<f64> = forecast.nonhvac_load.iter().map(|l| 0.05 * l).collect();
    MicrogridConfig {
        units: presets::reference_units(),
        wind: vec![presets::reference_wind()],
        solar: vec![presets::reference_solar()],
        batteries: Vec::new(),
        buildings,
        market: MarketParams { max_shed, ..MarketParams::uniform(DAY_SLOTS, 0.08, 1.0, 0.0, None, 0.0, 0.05) },
        dt: 1.0,
        horizon: DAY_SLOTS,
    }
}

/// Samples `n` scenarios around the base forecast and reduces them to `k`.
pub fn microgrid_scenarios(n: usize, k: usize, seed: u64) -> ScenarioSet {
    microgrid_scenarios_scaled(n, k, seed, 1.0)
}

pub fn microgrid_scenarios_scaled(n: usize, k: usize, seed: u64, uncertainty_scaling: f64) -> ScenarioSet {
    let forecast = microgrid_forecast(0.5);
    let spec = UncertaintySpec::default().scaled(uncertainty_scaling);
    let full = sample_scenarios(&forecast, &spec, n, seed).expect("valid forecast");
    let metric = DistanceMetric::from_forecast(&forecast, [1.0; 6]).expect("valid weights");
    reduce_fast_forward(&full, k, &metric).expect("k within range")
}
