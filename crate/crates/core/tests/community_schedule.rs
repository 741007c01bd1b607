use gridsched_core::devices::HvacSpec;
use gridsched_core::fixtures::{random_community, single_house};
use gridsched_core::sched_evhvac::{aggregate_grid, solve_individual, solve_schedule, CommunityProblem, EvHvacSchedule};
use gridsched_core::thermal::{simulate, DiscreteThermalModel, ThermalInput};
use proptest::prelude::*;

const TOL: f64 = 1e-6;

fn check_schedule(p: &CommunityProblem, s: &EvHvacSchedule) -> Result<(), TestCaseError> {
    let nh = p.horizon();
    let grid = aggregate_grid(p, &s.households);
    for t in 0..nh {
        prop_assert!((grid[t] - s.grid_import[t]).abs() < TOL, "balance at {t}");
        prop_assert!(s.grid_import[t] <= p.grid_limit[t] + TOL);
        if !p.v2g_allowed {
            prop_assert!(s.grid_import[t] >= -TOL);
        }
    }
    let elec: f64 = (0..nh).map(|t| p.prices[t] * p.dt * s.grid_import[t]).sum();
    prop_assert!((elec - s.electricity_cost).abs() < 1e-6 * (1.0 + elec.abs()));
    prop_assert!((s.electricity_cost + s.discomfort_cost - s.total_cost).abs() < 1e-9);
    for (h, hs) in p.households.iter().zip(&s.households) {
        let hv: &HvacSpec = &h.hvac;
        let model = DiscreteThermalModel::from_params(&hv.thermal, p.dt).unwrap();
        let u: Vec<ThermalInput> = (0..nh)
            .map(|t| ThermalInput { ambient: p.ambient[t], irradiance: p.irradiance[t], hvac_power: hs.hvac_power[t] })
            .collect();
        let traj = simulate(&model, hv.thermal.mode, hv.thermal.cop, h.initial_thermal, &u).unwrap();
        for t in 0..nh {
            prop_assert!(hs.hvac_power[t] >= -TOL && hs.hvac_power[t] <= hv.rated_power + TOL);
            prop_assert!((model.indoor(&traj[t + 1]) - hs.indoor_temp[t + 1]).abs() < TOL);
            if hv.occupancy[t] {
                prop_assert!((hs.indoor_temp[t + 1] - hv.desired_temp[t]).abs() <= hv.max_deviation[t] + TOL);
            }
        }
        for (ev, es) in h.evs.iter().zip(&hs.evs) {
            let avail = ev.trips.availability(nh);
            for t in 0..nh {
                prop_assert!(es.soc[t + 1] >= ev.spec.soc_min - TOL && es.soc[t + 1] <= ev.spec.soc_max + TOL);
                if !avail[t] {
                    prop_assert!(es.charge[t].abs() < TOL && es.discharge[t].abs() < TOL);
                }
            }
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn random_communities_are_feasible_and_beat_individual_plans(seed in 0u64..10_000, houses in 1usize..5, w in 0.0f64..0.1) {
        let p = random_community(seed, houses, w, 2.0);
        let joint = solve_schedule(&p).unwrap();
        check_schedule(&p, &joint)?;
        let (alone, total) = solve_individual(&p).unwrap();
        prop_assert_eq!(alone.len(), houses);
        prop_assert!(joint.total_cost <= total + 1e-6 * (1.0 + total.abs()));
    }

    #[test]
    fn single_house_schedules_are_feasible(w in 0.0f64..0.5, delta in 1.0f64..3.0, v2g in any::<bool>()) {
        let p = single_house(w, delta, v2g, true);
        let s = solve_schedule(&p).unwrap();
        check_schedule(&p, &s)?;
    }
}

#[test]
fn wider_band_never_costs_more() {
    let mut prev = f64::INFINITY;
    for delta in [0.5, 1.0, 1.5, 2.0, 3.0] {
        let s = solve_schedule(&single_house(0.02, delta, false, true)).unwrap();
        assert!(s.total_cost <= prev + 1e-7, "delta {delta}: {} after {prev}", s.total_cost);
        prev = s.total_cost;
    }
}
