use feegame::market::{intensity, sample_oracle, FlowParams, OracleMode, OracleSpec, Side};
use feegame::pool::{InventoryGrid, PoolSpec, SideQuote};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn grid() -> InventoryGrid {
    InventoryGrid::build(&PoolSpec::constant_product(2.5e7, 20)).unwrap()
}

#[test]
fn zero_fee_centre_buy_intensity() {
    let g = grid();
    let flow = FlowParams::symmetric(2, 50.0, 2.0, 2.0);
    let q = g.buy_quote(0, 0.0).unwrap();
    let rival = g.rival_buy_rate(0).unwrap();
    let got = intensity(Side::Buy, 0, Some(q), &[rival], 100.0, &flow).unwrap();
    // hand evaluation from the reserves
    let y0 = (2.5e7f64 / 100.0).sqrt();
    let y1 = (2.5e7f64 / 100.1).sqrt();
    let rate = 2.5e7 / (y0 * y1);
    let expected = 50.0 * (2.0 * (100.0 - rate) * (y0 - y1)).exp();
    assert!((got - expected).abs() < 1e-10);
    assert!((got - 48.77).abs() < 0.01);
}

#[test]
fn monopoly_ignores_cross_terms() {
    let g = grid();
    let q = g.sell_quote(3, 0.002).unwrap();
    let mono = FlowParams::symmetric(1, 80.0, 3.0, 0.0);
    let duo = FlowParams::symmetric(2, 80.0, 3.0, 0.0);
    let a = intensity(Side::Sell, 0, Some(q), &[], 99.0, &mono).unwrap();
    let b = intensity(Side::Sell, 0, Some(q), &[123.0], 99.0, &duo).unwrap();
    assert_eq!(a, b);
}

#[test]
fn boundary_quote_has_no_flow() {
    let flow = FlowParams::symmetric(2, 50.0, 2.0, 2.0);
    assert_eq!(intensity(Side::Buy, 0, None, &[100.0], 100.0, &flow).unwrap(), 0.0);
    assert!(intensity(Side::Buy, 0, None, &[], 100.0, &flow).is_err());
    assert!(intensity(Side::Buy, 2, None, &[100.0], 100.0, &flow).is_err());
}

#[test]
fn constant_oracle_stays_put() {
    let times: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let path = sample_oracle(&OracleSpec::constant(101.5), &times, &mut rng).unwrap();
    assert!(path.iter().all(|&s| s == 101.5));
    assert!(sample_oracle(&OracleSpec::constant(100.0), &[0.5, 1.0], &mut rng).is_err());
}

#[test]
fn brownian_oracle_terminal_variance() {
    let spec = OracleSpec {
        s0: 100.0,
        sigma: 2.0,
        mode: OracleMode::ArithmeticBrownian,
    };
    let times: Vec<f64> = (0..=50).map(|i| i as f64 / 50.0).collect();
    let n = 20_000;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let ends: Vec<f64> = (0..n)
        .map(|_| *sample_oracle(&spec, &times, &mut rng).unwrap().last().unwrap() - 100.0)
        .collect();
    let mean = ends.iter().sum::<f64>() / n as f64;
    let var = ends.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    // sd of the sample mean is 2/sqrt(n); sd of the sample variance about 4*sqrt(2/n)
    assert!(mean.abs() < 4.0 * 2.0 / (n as f64).sqrt());
    assert!((var - 4.0).abs() < 4.0 * 4.0 * (2.0 / n as f64).sqrt());
}

proptest! {
    #[test]
    fn intensity_is_finite_and_falls_with_the_fee(
        j in -19i32..=19,
        r in -20i32..=20,
        s in 95.0f64..105.0,
        lambda in 1.0f64..500.0,
        k0 in 0.1f64..4.0,
        kc in 0.0f64..4.0,
        fee in 0.0f64..0.02,
        bump in 1e-4f64..0.01,
    ) {
        let g = grid();
        let flow = FlowParams::symmetric(2, lambda, k0, kc);
        for side in Side::BOTH {
            let (quote, more, rival) = match side {
                Side::Buy => (g.buy_quote(j, fee).unwrap(), g.buy_quote(j, fee + bump).unwrap(), g.rival_sell_rate(r).unwrap()),
                Side::Sell => (g.sell_quote(j, fee).unwrap(), g.sell_quote(j, fee + bump).unwrap(), g.rival_buy_rate(r).unwrap()),
            };
            let a = intensity(side, 0, Some(quote), &[rival], s, &flow).unwrap();
            let b = intensity(side, 0, Some(more), &[rival], s, &flow).unwrap();
            prop_assert!(a.is_finite() && a >= 0.0);
            prop_assert!(b < a);
        }
    }

    #[test]
    fn intensity_matches_the_exponential_form(
        rate in 95.0f64..105.0,
        size in 0.01f64..1.0,
        rival in 95.0f64..105.0,
        s in 95.0f64..105.0,
        zeta in 0.0f64..0.5,
    ) {
        let mut flow = FlowParams::symmetric(2, 40.0, 1.5, 0.5);
        flow.zeta = zeta;
        let q = SideQuote { rate, size };
        let buy = intensity(Side::Buy, 1, Some(q), &[rival], s, &flow).unwrap();
        let sell = intensity(Side::Sell, 1, Some(q), &[rival], s, &flow).unwrap();
        let eb = 40.0 * ((1.5 * (s - zeta - rate) + 0.5 * (rival - rate)) * size).exp();
        let es = 40.0 * ((1.5 * (rate - s - zeta) + 0.5 * (rate - rival)) * size).exp();
        prop_assert!((buy - eb).abs() <= 1e-12 * eb);
        prop_assert!((sell - es).abs() <= 1e-12 * es);
    }
}
