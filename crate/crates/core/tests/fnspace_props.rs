mod common;

use common::{map_strategy, rel_close};
use proptest::prelude::*;
use stopgame::{MonotoneMap, StateDistribution};

fn sorted_pair() -> impl Strategy<Value = (f64, f64)> {
    (0.0f64..=1.0, 0.0f64..=1.0).prop_map(|(a, b)| if a <= b { (a, b) } else { (b, a) })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn eval_integrate_inverse_match_reference(m in map_strategy(), x in 0.0f64..=1.0, (a, b) in sorted_pair()) {
        let map = m.to_map();
        prop_assert!(rel_close(map.eval(x).unwrap(), m.eval(x), 1e-13));
        prop_assert!(rel_close(map.integrate(a, b).unwrap(), m.integral(a, b), 1e-11));
        let y = m.eval(x);
        prop_assert!((map.inverse(y).unwrap() - x).abs() < 1e-9);
    }

    #[test]
    fn reversed_or_outside_arguments_fail(m in map_strategy(), x in 1.01f64..5.0) {
        let map = m.to_map();
        prop_assert!(map.eval(x).is_err());
        prop_assert!(map.eval(-x).is_err());
        prop_assert!(map.integrate(0.9, 0.1).is_err());
        prop_assert!(map.inverse(map.eval(1.0).unwrap() * x).is_err());
    }

    #[test]
    fn sampled_table_is_monotone_and_close(m in map_strategy(), x in 0.0f64..=1.0, y in 0.0f64..=1.0) {
        let map = m.to_map();
        let table = map.sampled(1024).unwrap();
        let (lo, hi) = if x < y { (x, y) } else { (y, x) };
        prop_assert!(table.eval(lo).unwrap() <= table.eval(hi).unwrap());
        // Smooth maps are reproduced closely away from a possible cusp at 0.
        if x > 0.05 {
            prop_assert!(rel_close(table.eval(x).unwrap(), m.eval(x), 1e-5));
        }
    }

    #[test]
    fn json_round_trip(m in map_strategy()) {
        let map = m.to_map();
        let back: MonotoneMap = serde_json::from_str(&serde_json::to_string(&map).unwrap()).unwrap();
        prop_assert_eq!(back, map);
    }

    #[test]
    fn composed_map_is_pointwise_composition(m in map_strategy(), k in prop::sample::select(vec![0.5, 2.0, 3.0]), x in 0.0f64..=1.0) {
        let cdf = MonotoneMap::power(1.0, k).unwrap();
        let c = MonotoneMap::composed(m.to_map(), cdf).unwrap();
        let want = m.eval(x.powf(1.0 / k));
        prop_assert!(rel_close(c.eval(x).unwrap(), want, 1e-12));
        prop_assert!(rel_close(c.integrate(0.0, x).unwrap(), common::simpson(|u| m.eval(u.powf(1.0 / k)), 0.0, x), 1e-8));
    }

    #[test]
    fn quantile_inverts_cdf(k in 0.3f64..4.0, u in 0.0f64..=1.0) {
        let d = StateDistribution::power(k).unwrap();
        prop_assert!((d.cdf(d.quantile(u).unwrap()).unwrap() - u).abs() < 1e-12);
    }
}

#[test]
fn invalid_maps_are_rejected() {
    assert!(MonotoneMap::power(-1.0, 2.0).is_err());
    assert!(MonotoneMap::power(1.0, 0.0).is_err());
    assert!(MonotoneMap::poly(vec![0.1, 1.0]).is_err());
    assert!(MonotoneMap::poly(vec![0.0, 1.0, -3.0]).is_err());
    assert!(MonotoneMap::table(vec![[0.0, 0.0], [0.5, 0.7], [1.0, 0.6]]).is_err());
    assert!(StateDistribution::from_cdf(MonotoneMap::power(2.0, 1.0).unwrap()).is_err());
}
