use feegame::pool::{InventoryGrid, PoolSpec};
use proptest::prelude::*;

fn spec(depth_sq: f64, n: usize, step: f64) -> PoolSpec {
    PoolSpec {
        rate_step: step,
        ..PoolSpec::constant_product(depth_sq, n)
    }
}

// reserve at signed index j, straight from the rate ladder
fn reserve(s: &PoolSpec, j: i32) -> f64 {
    (s.depth_sq / (s.center_rate - s.rate_step * f64::from(j))).sqrt()
}

#[test]
fn centre_rates_for_the_quarter_depth_pool() {
    let g = InventoryGrid::build(&PoolSpec::constant_product(2.5e7, 20)).unwrap();
    let r = g.exchange_rates(0).unwrap();
    assert_eq!(r.z, 100.0);
    let y_lo = (2.5e7f64 / 100.1).sqrt();
    let expected = 2.5e7 / (500.0 * y_lo);
    assert!((r.z_buy.unwrap() - expected).abs() <= 1e-12 * expected);
    assert!((r.z_buy.unwrap() - 100.05).abs() < 1e-3);
    // difference quotient of the level function over the same step
    let y0 = (2.5e7f64 / 100.0).sqrt();
    let quotient = (2.5e7 / y_lo - 2.5e7 / y0) / (y0 - y_lo);
    assert!((r.z_buy.unwrap() - quotient).abs() < 1e-9);
    assert!(g.exchange_rates(-20).unwrap().z_buy.is_none());
    assert!(g.exchange_rates(20).unwrap().z_sell.is_none());
    assert!(g.exchange_rates(21).is_err());
}

#[test]
fn fee_adjusted_quote_scales_rates() {
    let g = InventoryGrid::build(&PoolSpec::constant_product(2.5e7, 20)).unwrap();
    let r = g.exchange_rates(0).unwrap();
    let q = g.fee_adjusted_quote(0, 0.01, 0.0).unwrap();
    assert_eq!(q.buy_rate, 1.01 * r.z_buy.unwrap());
    assert!((q.buy_rate - 101.0505).abs() < 1e-3);
    assert_eq!(q.sell_rate, r.z_sell.unwrap());
    let q = g.fee_adjusted_quote(0, 0.0, 0.01).unwrap();
    assert_eq!(q.sell_rate, 0.99 * r.z_sell.unwrap());
    assert!(g.fee_adjusted_quote(-20, 0.0, 0.0).is_err());
}

#[test]
fn refinement_shrinks_the_half_spread() {
    let mut last = f64::INFINITY;
    for step in [0.4, 0.2, 0.1, 0.05, 0.025, 0.0125] {
        let n = (2.0 / step) as usize;
        let g = InventoryGrid::build(&spec(1e8, n, step)).unwrap();
        let gap = g.max_half_spread();
        assert!(gap < last, "step {step}: {gap} >= {last}");
        last = gap;
    }
    assert!(last < 0.01);
}

proptest! {
    #[test]
    fn ladder_invariants(depth in 1e4f64..1e10, n in 1usize..40, step in 0.01f64..1.0) {
        prop_assume!(100.0 - step * n as f64 > 1.0);
        let s = spec(depth, n, step);
        let g = InventoryGrid::build(&s).unwrap();
        let n = n as i32;
        for j in -n..=n {
            let y = g.y(j).unwrap();
            prop_assert!((y - reserve(&s, j)).abs() <= 1e-12 * y);
            prop_assert!((g.x(j).unwrap() * y - depth).abs() <= 1e-10 * depth);
            let r = g.exchange_rates(j).unwrap();
            if j > -n {
                let zb = r.z_buy.unwrap();
                // same stored value as the sell rate one step below
                prop_assert_eq!(zb.to_bits(), g.exchange_rates(j - 1).unwrap().z_sell.unwrap().to_bits());
                let closed = depth / (y * g.y(j - 1).unwrap());
                prop_assert!((zb - closed).abs() <= 1e-12 * zb);
                prop_assert!(zb > r.z);
                let (_, d) = g.buy_step(j).unwrap().unwrap();
                prop_assert!((d - (y - g.y(j - 1).unwrap())).abs() <= 1e-12 * y);
            }
            if j < n {
                prop_assert!(r.z_sell.unwrap() < r.z);
            }
        }
    }

    #[test]
    fn spec_round_trips_through_json(depth in 1e4f64..1e10, n in 1usize..40) {
        let s = PoolSpec::constant_product(depth, n);
        let text = serde_json::to_string(&s).unwrap();
        let back: PoolSpec = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(s, back);
    }
}
