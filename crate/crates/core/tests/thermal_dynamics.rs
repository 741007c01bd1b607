use gridsched_core::thermal::{
    build_continuous_model, simulate, BuildingThermalParams, DiscreteThermalModel, HvacMode, ThermalInput,
    ThermalState,
};
use nalgebra::Vector3;
use proptest::prelude::*;

fn params() -> impl Strategy<Value = BuildingThermalParams> {
    (
        (2.0f64..12.0, 0.2f64..1.5, 0.5f64..3.0, 1.0f64..6.0),
        (0.5f64..3.0, 4.0f64..20.0, 2.0f64..10.0),
        (0.0f64..10.0, 0.0f64..1.0, 2.0f64..4.0, any::<bool>()),
    )
        .prop_map(|((r_a, r_m, r_e, r_ea), (c_air, c_m, c_e), (window_area, solar_fraction_walls, cop, cool))| {
            BuildingThermalParams {
                r_a,
                r_m,
                r_e,
                r_ea,
                c_air,
                c_m,
                c_e,
                window_area,
                solar_fraction_walls,
                cop,
                mode: if cool { HvacMode::Cooling } else { HvacMode::Heating },
            }
        })
}

fn inputs(n: usize) -> impl Strategy<Value = Vec<ThermalInput>> {
    prop::collection::vec(
        (-5.0f64..38.0, 0.0f64..1.0, 0.0f64..6.0)
            .prop_map(|(ambient, irradiance, hvac_power)| ThermalInput { ambient, irradiance, hvac_power }),
        n,
    )
}

fn rk4(p: &BuildingThermalParams, x0: ThermalState, u: &[ThermalInput], dt: f64, substeps: usize) -> Vec<Vector3<f64>> {
    let m = build_continuous_model(p).unwrap();
    let h = dt / substeps as f64;
    let mut x = x0.to_vector();
    let mut out = vec![x];
    for ui in u {
        let bu = m.b * Vector3::new(ui.ambient, ui.irradiance, p.mode.sign() * p.cop * ui.hvac_power);
        let f = |x: &Vector3<f64>| m.a * x + bu;
        for _ in 0..substeps {
            let k1 = f(&x);
            let k2 = f(&(x + k1 * (h / 2.0)));
            let k3 = f(&(x + k2 * (h / 2.0)));
            let k4 = f(&(x + k3 * h));
            x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
        out.push(x);
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn zoh_matches_fine_rk4_for_every_state(p in params(), u in inputs(12), t0 in 18.0f64..28.0, dt in prop::sample::select(vec![0.25, 0.5, 1.0])) {
        let model = DiscreteThermalModel::from_params(&p, dt).unwrap();
        let x0 = ThermalState::uniform(t0);
        let traj = simulate(&model, p.mode, p.cop, x0, &u).unwrap();
        let reference = rk4(&p, x0, &u, dt, 400);
        for (s, r) in traj.iter().zip(&reference) {
            prop_assert!((s.to_vector() - r).amax() < 1e-7);
        }
    }

    #[test]
    fn lumped_buildings_follow_one_building(p in params(), u in inputs(24), count in 2u32..60) {
        let n = count as f64;
        let lumped = p.aggregate(n);
        let one = DiscreteThermalModel::from_params(&p, 1.0).unwrap();
        let many = DiscreteThermalModel::from_params(&lumped, 1.0).unwrap();
        let scaled: Vec<ThermalInput> = u.iter().map(|x| ThermalInput { hvac_power: n * x.hvac_power, ..*x }).collect();
        let a = simulate(&one, p.mode, p.cop, ThermalState::uniform(24.0), &u).unwrap();
        let b = simulate(&many, lumped.mode, lumped.cop, ThermalState::uniform(24.0), &scaled).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x.to_vector() - y.to_vector()).amax() < 1e-8);
        }
    }

    #[test]
    fn response_is_affine_in_hvac_power(p in params(), u in inputs(10), extra in 0.5f64..3.0) {
        let model = DiscreteThermalModel::from_params(&p, 1.0).unwrap();
        let x0 = ThermalState::uniform(22.0);
        let more: Vec<ThermalInput> = u.iter().map(|x| ThermalInput { hvac_power: x.hvac_power + extra, ..*x }).collect();
        let twice: Vec<ThermalInput> = u.iter().map(|x| ThermalInput { hvac_power: x.hvac_power + 2.0 * extra, ..*x }).collect();
        let a = simulate(&model, p.mode, p.cop, x0, &u).unwrap();
        let b = simulate(&model, p.mode, p.cop, x0, &more).unwrap();
        let c = simulate(&model, p.mode, p.cop, x0, &twice).unwrap();
        for ((x, y), z) in a.iter().zip(&b).zip(&c) {
            let d1 = y.to_vector() - x.to_vector();
            let d2 = z.to_vector() - y.to_vector();
            prop_assert!((d1 - d2).amax() < 1e-9);
            // cooling lowers and heating raises indoor temperature
            prop_assert!(p.mode.sign() * d1[0] >= -1e-12);
        }
    }
}

#[test]
fn constant_inputs_settle_at_the_continuous_equilibrium() {
    let p = BuildingThermalParams::default();
    let cont = build_continuous_model(&p).unwrap();
    let u = ThermalInput { ambient: 32.0, irradiance: 0.4, hvac_power: 2.0 };
    let uv = Vector3::new(u.ambient, u.irradiance, p.mode.sign() * p.cop * u.hvac_power);
    let eq = -cont.a.try_inverse().unwrap() * cont.b * uv;
    let model = DiscreteThermalModel::from_params(&p, 1.0).unwrap();
    let traj = simulate(&model, p.mode, p.cop, ThermalState::uniform(20.0), &vec![u; 2000]).unwrap();
    let last = traj.last().unwrap().to_vector();
    assert!((last - eq).amax() < 1e-8, "{last} vs {eq}");
}
