use feegame::equilibrium::{
    build_generator, column_fee, column_residual, constant_policy, fit_linear_policy, linear_fit_residual,
    solve_duopoly, solve_game, solve_w, value_function, Equilibrium, FeePolicy, GameInputs, GeneratorMode,
    TimeGrid,
};
use feegame::experiment::presets;
use feegame::market::{FlowParams, Side};
use feegame::pool::{InventoryGrid, PoolSpec};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn duopoly_inputs() -> GameInputs {
    presets::table1_k2().game().unwrap()
}

fn duopoly() -> Equilibrium {
    solve_game(duopoly_inputs()).unwrap()
}

fn pool(depth: f64, n: usize) -> InventoryGrid {
    InventoryGrid::build(&PoolSpec::constant_product(depth, n)).unwrap()
}

// exp(A tau) 1 by summing the Taylor series until the terms vanish
fn taylor_w(a: &DMatrix<f64>, tau: f64) -> DVector<f64> {
    let n = a.nrows();
    let mut term = DVector::from_element(n, 1.0);
    let mut sum = term.clone();
    for i in 1..400 {
        term = a * &term * (tau / i as f64);
        sum += &term;
        if term.amax() < 1e-18 * sum.amax() {
            break;
        }
    }
    sum
}

// classical RK4 on dw/dtau = A w, w(0) = 1
fn rk4_w(a: &DMatrix<f64>, tau: f64, steps: usize) -> DVector<f64> {
    let h = tau / steps as f64;
    let mut w = DVector::from_element(a.nrows(), 1.0);
    for _ in 0..steps {
        let k1 = a * &w;
        let k2 = a * (&w + &k1 * (h / 2.0));
        let k3 = a * (&w + &k2 * (h / 2.0));
        let k4 = a * (&w + &k3 * h);
        w += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    w
}

fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| ((x - y) / y).abs()).fold(0.0, f64::max)
}

#[test]
fn empty_grid_has_no_trades() {
    let grids = vec![pool(1e8, 0)];
    let flow = FlowParams::symmetric(1, 100.0, 2.0, 0.0);
    let gen = build_generator(0, &[], 100.0, &grids, &flow, GeneratorMode::Pde).unwrap();
    assert_eq!(gen.dim(), 1);
    let w = solve_w(&gen, &TimeGrid::new(1.0, 10).unwrap()).unwrap();
    assert!(w.iter().all(|col| col == &[1.0]));
}

#[test]
fn three_state_matches_series() {
    let grids = vec![pool(1e8, 1)];
    let flow = FlowParams::symmetric(1, 100.0, 2.0, 0.0);
    let gen = build_generator(0, &[], 100.0, &grids, &flow, GeneratorMode::Pde).unwrap();
    let time = TimeGrid::new(1.0, 100).unwrap();
    let w = solve_w(&gen, &time).unwrap();
    let a = gen.to_dense();
    for k in [0, 25, 50, 99] {
        let oracle = taylor_w(&a, time.horizon - time.time(k));
        assert!(max_rel(&w[k], oracle.as_slice()) < 1e-12, "k = {k}");
    }
}

#[test]
fn duopoly_columns_match_runge_kutta() {
    let inputs = duopoly_inputs();
    for rival in [-20, -7, 0, 13, 20] {
        let gen = build_generator(0, &[rival], inputs.s, &inputs.grids, &inputs.flow, inputs.mode).unwrap();
        let w = solve_w(&gen, &inputs.time).unwrap();
        let a = gen.to_dense();
        // RK4 over [t, T] with 50 substeps per solver step
        for k in [0, 500] {
            let tau = inputs.time.horizon - inputs.time.time(k);
            let steps = 50 * (inputs.time.steps - k);
            let oracle = rk4_w(&a, tau, steps);
            let dev = max_rel(&w[k], oracle.as_slice());
            assert!(dev < 1e-8, "rival {rival}, k {k}: {dev}");
        }
    }
}

#[test]
fn generator_rows_match_hand_evaluation() {
    let inputs = duopoly_inputs();
    let gen = build_generator(0, &[0], 100.0, &inputs.grids, &inputs.flow, GeneratorMode::Pde).unwrap();
    let depth = inputs.grids[0].spec().depth_sq;
    let y = |j: i32| (depth / (100.0 - 0.1 * j as f64)).sqrt();
    let (k0, kc, lam) = (2.0, 2.0, 100.0);
    // buy rung 0 -> -1 and sell rung 0 -> 1, for own and rival alike
    let (zb, db) = (depth / (y(0) * y(-1)), y(0) - y(-1));
    let (zs, ds) = (depth / (y(0) * y(1)), y(1) - y(0));
    let down = lam * ((k0 * (100.0 - zb) + kc * (zb - zb)) * db - 1.0).exp();
    let up = lam * ((k0 * (zs - 100.0) + kc * (zs - zs)) * ds - 1.0).exp();
    let got_down = gen.down(0).unwrap();
    let got_up = gen.up(0).unwrap();
    assert!((got_down - down).abs() <= 1e-13 * down);
    assert!((got_up - up).abs() <= 1e-13 * up);
    assert!(((got_up / got_down) - up / down).abs() < 1e-12);
    assert!(got_up != got_down);
    assert!(gen.down(-20).is_none());
    assert!(gen.up(20).is_none());
}

#[test]
fn no_cross_sensitivity_recovers_the_monopoly_generator() {
    let g = pool(2.5e7, 20);
    let duo = FlowParams::symmetric(2, 100.0, 2.0, 0.0);
    let mono = FlowParams::symmetric(1, 100.0, 2.0, 0.0);
    let single = build_generator(0, &[], 100.0, std::slice::from_ref(&g), &mono, GeneratorMode::Pde).unwrap();
    for rival in [-20, 0, 17] {
        let pair = build_generator(0, &[rival], 100.0, &[g.clone(), g.clone()], &duo, GeneratorMode::Pde).unwrap();
        assert_eq!(pair.to_dense(), single.to_dense());
    }
}

#[test]
fn two_player_game_is_bitwise_the_duopoly() {
    let a = solve_game(duopoly_inputs()).unwrap();
    let b = solve_duopoly(duopoly_inputs()).unwrap();
    for h in 0..2 {
        let (sa, sb) = (&a.surfaces[h], &b.surfaces[h]);
        for tuple in 0..sa.tuples() {
            for t in [0, 400, 1000] {
                let (ca, cb) = (sa.column(tuple, t), sb.column(tuple, t));
                assert!(ca.iter().zip(cb).all(|(x, y)| x.to_bits() == y.to_bits()));
            }
        }
    }
}

#[test]
fn terminal_fees_and_w_shape() {
    let eq = duopoly();
    let fees = eq.fees(0);
    let grid = &eq.inputs.grids[0];
    let k = eq.inputs.flow.k_total(0);
    let last = eq.inputs.time.steps;
    let surface = &eq.surfaces[0];
    for tuple in 0..surface.tuples() {
        assert!(surface.column(tuple, last).iter().all(|&w| w == 1.0));
        // w >= 1 and nonincreasing in t
        for t in (0..last).step_by(50) {
            let (now, later) = (surface.column(tuple, t), surface.column(tuple, t + 50));
            assert!(now.iter().zip(later).all(|(a, b)| *a >= *b && *b >= 1.0));
        }
    }
    for j in -20..=20 {
        for r in [-20, 0, 20] {
            if let Some((rate, size)) = grid.buy_step(j).unwrap() {
                let m = fees.fee(Side::Buy, last, j, &[r]).unwrap().unwrap();
                assert!((m * k * rate * size - 1.0).abs() < 1e-14);
            }
            if let Some((rate, size)) = grid.sell_step(j).unwrap() {
                let p = fees.fee(Side::Sell, last, j, &[r]).unwrap().unwrap();
                assert!((p * k * rate * size - 1.0).abs() < 1e-14);
            }
        }
    }
    let m = fees.fee(Side::Buy, last, 0, &[0]).unwrap().unwrap();
    let y0 = 500.0;
    let y1 = (2.5e7f64 / 100.1).sqrt();
    assert!((m - 1.0 / (4.0 * (2.5e7 / (y0 * y1)) * (y0 - y1))).abs() < 1e-15);
    assert!((m - 0.01).abs() < 5e-6);
    assert!(fees.fee(Side::Buy, last, -20, &[0]).unwrap().is_none());
    assert!(fees.fee(Side::Sell, last, 20, &[0]).unwrap().is_none());
}

#[test]
fn scaling_sensitivities_scales_terminal_fees() {
    let base = duopoly_inputs();
    let mut doubled = base.clone();
    doubled.flow = FlowParams::symmetric(2, 100.0, 4.0, 4.0);
    doubled.time = TimeGrid::new(1.0, 10).unwrap();
    let mut small = base.clone();
    small.time = doubled.time;
    let a = solve_game(small).unwrap().fees(0);
    let b = solve_game(doubled).unwrap().fees(0);
    for j in -19..=19 {
        for side in Side::BOTH {
            let fa = a.fee(side, 10, j, &[3]).unwrap().unwrap();
            let fb = b.fee(side, 10, j, &[3]).unwrap().unwrap();
            assert!((fb - fa / 2.0).abs() <= 1e-15 * fa);
        }
    }
}

#[test]
fn centre_fee_rises_towards_maturity() {
    let eq = duopoly();
    let fees = eq.fees(0);
    let time = eq.inputs.time;
    let top = |t: f64| {
        let k = time.index_at(t);
        let m = fees.fee(Side::Buy, k, 0, &[0]).unwrap().unwrap();
        let p = fees.fee(Side::Sell, k, 0, &[0]).unwrap().unwrap();
        m.max(p)
    };
    assert!(top(0.75) >= top(0.25));
}

// More flow stretches the fee profile: the largest fee grows and the
// smallest (a rebate near the edge) falls. The centre fee itself barely moves.
#[test]
fn more_flow_widens_the_fee_range() {
    let range = |lambda: f64| {
        let inputs = presets::table1_k2().game_for(2, lambda).unwrap();
        let t = inputs.time.index_at(0.5);
        let fees = solve_game(inputs).unwrap().fees(0);
        let mut hi = f64::NEG_INFINITY;
        let mut lo = f64::INFINITY;
        for j in -20..=20 {
            for side in Side::BOTH {
                if let Some(f) = fees.fee(side, t, j, &[0]).unwrap() {
                    hi = hi.max(f);
                    lo = lo.min(f);
                }
            }
        }
        let centre = fees.fee(Side::Buy, t, 0, &[0]).unwrap().unwrap();
        (lo, centre, hi)
    };
    let mut last = range(50.0);
    for lambda in [100.0, 200.0] {
        let next = range(lambda);
        assert!(next.2 > last.2 && next.0 < last.0, "lambda {lambda}: {next:?} vs {last:?}");
        assert!((next.1 / last.1 - 1.0).abs() < 0.01);
        last = next;
    }
}

#[test]
fn column_fees_move_with_the_oracle() {
    let inputs = duopoly_inputs();
    let time = TimeGrid::new(1.0, 100).unwrap();
    let grid = &inputs.grids[0];
    let k = inputs.flow.k_total(0);
    for rival in [-12, 0, 12] {
        let cols: Vec<Vec<f64>> = (95..=105)
            .map(|s| {
                let gen = build_generator(0, &[rival], s as f64, &inputs.grids, &inputs.flow, inputs.mode).unwrap();
                solve_w(&gen, &time).unwrap().swap_remove(50)
            })
            .collect();
        for p in 0..grid.len() {
            for pair in cols.windows(2) {
                if let (Some(a), Some(b)) = (
                    column_fee(grid, k, Side::Buy, &pair[0], p),
                    column_fee(grid, k, Side::Buy, &pair[1], p),
                ) {
                    assert!(b >= a - 1e-12, "buy fee fell with s at p {p}, rival {rival}");
                }
                if let (Some(a), Some(b)) = (
                    column_fee(grid, k, Side::Sell, &pair[0], p),
                    column_fee(grid, k, Side::Sell, &pair[1], p),
                ) {
                    assert!(b <= a + 1e-12, "sell fee rose with s at p {p}, rival {rival}");
                }
            }
        }
    }
}

#[test]
fn residual_vanishes_for_a_silent_market() {
    let grids = vec![pool(1e8, 5)];
    let flow = FlowParams::symmetric(1, 0.0, 2.0, 0.0);
    let gen = build_generator(0, &[], 100.0, &grids, &flow, GeneratorMode::Pde).unwrap();
    let time = TimeGrid::new(1.0, 100).unwrap();
    let mut w = solve_w(&gen, &time).unwrap();
    assert!(w.iter().flatten().all(|&v| v == 1.0));
    assert_eq!(column_residual(&gen, &w, &time), 0.0);
    w[50][5] += 1e-3;
    assert!(column_residual(&gen, &w, &time) > 1e-4);
}

#[test]
fn residual_is_second_order_in_time() {
    let inputs = duopoly_inputs();
    let gen = build_generator(0, &[0], inputs.s, &inputs.grids, &inputs.flow, inputs.mode).unwrap();
    let coarse = TimeGrid::new(1.0, 1000).unwrap();
    let fine = TimeGrid::new(1.0, 2000).unwrap();
    let r1 = column_residual(&gen, &solve_w(&gen, &coarse).unwrap(), &coarse);
    let r2 = column_residual(&gen, &solve_w(&gen, &fine).unwrap(), &fine);
    let order = (r1 / r2).log2();
    assert!((1.8..=2.2).contains(&order), "order {order}: {r1} -> {r2}");
}

#[test]
fn linear_policy_tracks_the_centre() {
    let eq = duopoly();
    let fees = eq.fees(0);
    let lin = fit_linear_policy(&fees, 2).unwrap();
    let t = eq.inputs.time.index_at(0.5);
    let centre = fees.fee(Side::Buy, t, 0, &[0]).unwrap().unwrap();
    assert!(linear_fit_residual(&fees, &lin, t) < 0.05 * centre);
    assert!(fit_linear_policy(&fees, 0).is_err());
    assert!(fit_linear_policy(&fees, 20).is_err());
}

#[test]
fn symmetric_venues_share_a_constant_fee() {
    let eq = duopoly();
    let a = constant_policy(&eq.fees(0)).unwrap();
    let b = constant_policy(&eq.fees(1)).unwrap();
    match (a, b) {
        (FeePolicy::Constant(x), FeePolicy::Constant(y)) => {
            assert_eq!(x, y);
            let t = eq.inputs.time.index_at(0.5);
            let m = eq.fees(0).fee(Side::Buy, t, 0, &[0]).unwrap().unwrap();
            let p = eq.fees(0).fee(Side::Sell, t, 0, &[0]).unwrap().unwrap();
            assert_eq!(x, (m + p) / 2.0);
        }
        _ => panic!("expected constant policies"),
    }
}

proptest! {
    #[test]
    fn value_function_is_affine_in_cash(w in 1.0f64..1e6, cash in -1e3f64..1e3, shift in -10.0f64..10.0, k in 0.1f64..10.0) {
        let v = value_function(w, cash, k);
        prop_assert!(((value_function(w, cash + shift, k) - v) - shift).abs() < 1e-9);
        prop_assert!(((value_function(w, cash, 2.0 * k) - cash) - (v - cash) / 2.0).abs() < 1e-12 * (1.0 + v.abs()));
        prop_assert_eq!(value_function(1.0, cash, k), cash);
    }
}
