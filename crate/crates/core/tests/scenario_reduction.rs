use gridsched_core::scenario::{
    fast_forward_select, kantorovich_distance, read_scenarios_csv, reduce_fast_forward, sample_scenarios,
    DistanceMetric, HourlyProfile, UncertaintySpec,
};
use proptest::prelude::*;

fn forecast(nh: usize) -> HourlyProfile {
    let wave = |a: f64, b: f64| (0..nh).map(|t| a + b * (t as f64 * 0.7).sin().abs()).collect::<Vec<_>>();
    HourlyProfile {
        price_da: wave(0.04, 0.08),
        price_rt: wave(0.05, 0.09),
        ambient: wave(24.0, 8.0),
        irradiance: wave(0.0, 0.9),
        wind_speed: wave(4.0, 6.0),
        nonhvac_load: wave(300.0, 150.0),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn more_kept_scenarios_never_move_further_away(seed in 0u64..10_000, n in 3usize..16, nh in 1usize..8) {
        let f = forecast(nh);
        let set = sample_scenarios(&f, &UncertaintySpec::default(), n, seed).unwrap();
        let metric = DistanceMetric::from_forecast(&f, [1.0; 6]).unwrap();
        let mut prev = f64::INFINITY;
        for k in 1..=n {
            let r = reduce_fast_forward(&set, k, &metric).unwrap();
            prop_assert_eq!(r.len(), k);
            prop_assert!((r.total_probability() - 1.0).abs() <= 1e-12);
            let d = kantorovich_distance(&set, &r, &metric).unwrap();
            prop_assert!(d <= prev + 1e-12);
            prev = d;
        }
        prop_assert_eq!(prev, 0.0);
    }

    #[test]
    fn greedy_order_is_prefix_stable(seed in 0u64..10_000, n in 2usize..14) {
        let f = forecast(4);
        let set = sample_scenarios(&f, &UncertaintySpec::default().scaled(2.0), n, seed).unwrap();
        let metric = DistanceMetric::from_forecast(&f, [1.0, 1.0, 2.0, 1.0, 0.5, 1.0]).unwrap();
        let full = fast_forward_select(&set, n, &metric).unwrap();
        for k in 1..n {
            prop_assert_eq!(&fast_forward_select(&set, k, &metric).unwrap()[..], &full[..k]);
        }
    }

    #[test]
    fn dropped_mass_goes_to_the_nearest_kept_scenario(seed in 0u64..10_000, n in 3usize..12) {
        let f = forecast(3);
        let set = sample_scenarios(&f, &UncertaintySpec::default(), n, seed).unwrap();
        let metric = DistanceMetric::from_forecast(&f, [1.0; 6]).unwrap();
        let k = n / 2;
        let r = reduce_fast_forward(&set, k, &metric).unwrap();
        let mut expect = vec![0.0; k];
        for s in set.scenarios() {
            let nearest = (0..k)
                .min_by(|&a, &b| {
                    let da = metric.distance(s, &r.scenarios()[a]).unwrap();
                    let db = metric.distance(s, &r.scenarios()[b]).unwrap();
                    da.partial_cmp(&db).unwrap()
                })
                .unwrap();
            expect[nearest] += s.probability;
        }
        for (e, s) in expect.iter().zip(r.scenarios()) {
            prop_assert!((e - s.probability).abs() < 1e-12);
        }
    }
}

#[test]
fn reduced_set_survives_a_csv_round_trip() {
    let f = forecast(24);
    let set = sample_scenarios(&f, &UncertaintySpec::default(), 40, 3).unwrap();
    let metric = DistanceMetric::from_forecast(&f, [1.0; 6]).unwrap();
    let r = reduce_fast_forward(&set, 5, &metric).unwrap();
    let mut buf = Vec::new();
    gridsched_core::scenario::write_scenarios_csv(&r, &mut buf).unwrap();
    let back = read_scenarios_csv(buf.as_slice(), r.seed()).unwrap();
    assert_eq!(back.len(), 5);
    for (a, b) in back.scenarios().iter().zip(r.scenarios()) {
        assert!((a.probability - b.probability).abs() <= 1e-11 * b.probability);
        for (x, y) in a.profile.nonhvac_load.iter().zip(&b.profile.nonhvac_load) {
            assert!((x - y).abs() <= 1e-11 * y.abs());
        }
    }
}
