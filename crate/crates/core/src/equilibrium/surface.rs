use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::expm::expm;
use super::generator::{build_duopoly_generator, build_generator, Generator, GeneratorMode};
use super::policy::{EquilibriumFees, FeePolicy};
use super::{lattice, TimeGrid};
use crate::error::{Error, Result};
use crate::market::FlowParams;
use crate::pool::InventoryGrid;

/// Everything the solver needs for one game.
#[derive(Debug, Clone)]
pub struct GameInputs {
    pub grids: Vec<InventoryGrid>,
    pub flow: FlowParams,
    /// Oracle price the generators are frozen at.
    pub s: f64,
    pub time: TimeGrid,
    pub mode: GeneratorMode,
}

impl GameInputs {
    pub fn venues(&self) -> usize {
        self.grids.len()
    }

    pub fn validate(&self) -> Result<()> {
        self.flow.validate()?;
        self.time.validate()?;
        if self.grids.len() != self.flow.venues() {
            return Err(Error::Config(format!(
                "{} pools but flow parameters for {} venues",
                self.grids.len(),
                self.flow.venues()
            )));
        }
        if !self.s.is_finite() {
            return Err(Error::Config("oracle price must be finite".into()));
        }
        Ok(())
    }

    /// Grid lengths of every venue except `player`, in venue order.
    pub fn rival_dims(&self, player: usize) -> Vec<usize> {
        self.grids
            .iter()
            .enumerate()
            .filter(|(v, _)| *v != player)
            .map(|(_, g)| g.len())
            .collect()
    }

    // Players whose problems are identical up to a relabelling of rivals:
    // same pool, same baselines and k0, and every cross weight equal.
    fn fully_symmetric(&self) -> bool {
        let m = self.venues();
        let f = &self.flow;
        let cross: Vec<f64> = (0..m).flat_map(|i| f.rival_weights(i).collect::<Vec<_>>()).collect();
        (1..m).all(|i| {
            self.grids[i].spec() == self.grids[0].spec()
                && f.lambda_buy[i] == f.lambda_buy[0]
                && f.lambda_sell[i] == f.lambda_sell[0]
                && f.k0[i] == f.k0[0]
        }) && cross.windows(2).all(|w| w[0] == w[1])
    }
}

/// Transformed value `w` of one player on the lattice
/// (rival-state tuple × time × own index).
#[derive(Debug, Clone)]
pub struct WSurface {
    pub player: usize,
    pub k_total: f64,
    pub time: TimeGrid,
    own_len: usize,
    rival_dims: Vec<usize>,
    // [tuple][time][own]
    data: Arc<Vec<f64>>,
}

impl WSurface {
    pub fn own_len(&self) -> usize {
        self.own_len
    }

    pub fn rival_dims(&self) -> &[usize] {
        &self.rival_dims
    }

    pub fn tuples(&self) -> usize {
        self.rival_dims.iter().product()
    }

    /// True when both surfaces share the same storage.
    pub fn shares_storage(&self, other: &WSurface) -> bool {
        Arc::ptr_eq(&self.data, &other.data)
    }

    /// Flat tuple index of rival grid positions (each `j + N`).
    #[inline]
    pub fn tuple_index(&self, rival_pos: &[usize]) -> usize {
        debug_assert_eq!(rival_pos.len(), self.rival_dims.len());
        rival_pos
            .iter()
            .zip(&self.rival_dims)
            .fold(0, |acc, (&q, &n)| acc * n + q)
    }

    /// `w` over own positions at time index `t` and rival tuple `tuple`.
    #[inline]
    pub fn column(&self, tuple: usize, t: usize) -> &[f64] {
        let stride = self.time.points() * self.own_len;
        let start = tuple * stride + t * self.own_len;
        &self.data[start..start + self.own_len]
    }

    #[inline]
    pub fn w_at(&self, t: usize, own_pos: usize, rival_pos: &[usize]) -> f64 {
        self.column(self.tuple_index(rival_pos), t)[own_pos]
    }

    /// Value at signed indices.
    pub fn w(&self, t: usize, own: i32, rivals: &[i32]) -> Result<f64> {
        if t > self.time.steps {
            return Err(Error::InvalidInput(format!("time index {t} out of range")));
        }
        if rivals.len() != self.rival_dims.len() {
            return Err(Error::InvalidInput("wrong number of rival indices".into()));
        }
        let own_pos = signed_pos(own, self.own_len)?;
        let rival_pos = rivals
            .iter()
            .zip(&self.rival_dims)
            .map(|(&j, &n)| signed_pos(j, n))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.w_at(t, own_pos, &rival_pos))
    }

    /// `v = cash + log(w) / k` at signed indices.
    pub fn value(&self, t: usize, own: i32, rivals: &[i32], cash: f64) -> Result<f64> {
        Ok(value_function(self.w(t, own, rivals)?, cash, self.k_total))
    }

    /// Same surface viewed as another player's (symmetric games only).
    fn relabelled(&self, player: usize, k_total: f64) -> Self {
        Self {
            player,
            k_total,
            ..self.clone()
        }
    }
}

fn signed_pos(j: i32, len: usize) -> Result<usize> {
    let half = (len / 2) as i32;
    if j.abs() > half {
        return Err(Error::IndexOutOfRange {
            index: j,
            halfwidth: half as usize,
        });
    }
    Ok((j + half) as usize)
}

/// `v = cash + log(w) / k`.
pub fn value_function(w: f64, cash: f64, k_total: f64) -> f64 {
    cash + w.ln() / k_total
}

/// `w(t_k) = exp(A (T - t_k)) 1`, from one matrix exponential of `A Δt`
/// and the recursion `w(t_k) = E w(t_{k+1})`. Indexed by time point.
pub fn solve_w(gen: &Generator, time: &TimeGrid) -> Result<Vec<Vec<f64>>> {
    let n = gen.dim();
    let mut flat = vec![0.0; time.points() * n];
    fill_w(gen, time, &mut flat)?;
    Ok(flat.chunks(n).map(<[f64]>::to_vec).collect())
}

fn step_matrix(gen: &Generator, dt: f64) -> Result<DMatrix<f64>> {
    let a = gen.to_dense() * dt;
    expm(&a).ok_or_else(|| {
        Error::NonFinite(format!(
            "matrix exponential for player {} at rival state {:?}",
            gen.player, gen.rival_state
        ))
    })
}

// out: [time][own]
fn fill_w(gen: &Generator, time: &TimeGrid, out: &mut [f64]) -> Result<()> {
    let n = gen.dim();
    let e = step_matrix(gen, time.dt())?;
    // row-major copy for the matrix-vector products
    let rows: Vec<f64> = e.transpose().as_slice().to_vec();
    let last = time.steps;
    out[last * n..].fill(1.0);
    for k in (0..last).rev() {
        let (head, tail) = out.split_at_mut((k + 1) * n);
        let next = &tail[..n];
        let cur = &mut head[k * n..];
        for (i, slot) in cur.iter_mut().enumerate() {
            let row = &rows[i * n..(i + 1) * n];
            *slot = row.iter().zip(next).map(|(a, b)| a * b).sum();
        }
    }
    if out.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(format!(
            "w for player {} at rival state {:?}",
            gen.player, gen.rival_state
        )))
    }
}

fn signed_tuple(pos: &[usize], dims: &[usize]) -> Vec<i32> {
    pos.iter()
        .zip(dims)
        .map(|(&q, &n)| q as i32 - (n / 2) as i32)
        .collect()
}

fn solve_player<F>(inputs: &GameInputs, player: usize, build: F) -> Result<WSurface>
where
    F: Fn(&[i32]) -> Result<Generator> + Sync,
{
    let own_len = inputs.grids[player].len();
    let rival_dims = inputs.rival_dims(player);
    let stride = inputs.time.points() * own_len;
    let tuples: Vec<Vec<usize>> = lattice(&rival_dims).collect();
    let mut data = vec![0.0; tuples.len() * stride];
    data.par_chunks_mut(stride)
        .zip(tuples.par_iter())
        .try_for_each(|(chunk, pos)| {
            let gen = build(&signed_tuple(pos, &rival_dims))?;
            fill_w(&gen, &inputs.time, chunk)
        })?;
    Ok(WSurface {
        player,
        k_total: inputs.flow.k_total(player),
        time: inputs.time,
        own_len,
        rival_dims,
        data: Arc::new(data),
    })
}

/// Solved game: one `w` surface per player.
#[derive(Debug, Clone)]
pub struct Equilibrium {
    pub inputs: Arc<GameInputs>,
    pub surfaces: Vec<WSurface>,
}

impl Equilibrium {
    pub fn venues(&self) -> usize {
        self.surfaces.len()
    }

    /// Equilibrium fee policy of `player`.
    pub fn policy(&self, player: usize) -> FeePolicy {
        FeePolicy::Equilibrium(self.fees(player))
    }

    pub fn fees(&self, player: usize) -> EquilibriumFees {
        EquilibriumFees::new(
            self.surfaces[player].clone(),
            self.inputs.grids[player].clone(),
        )
    }

    pub fn policies(&self) -> Vec<FeePolicy> {
        (0..self.venues()).map(|h| self.policy(h)).collect()
    }

    /// Generator behind the surface of `player` at the given rival state.
    pub fn generator(&self, player: usize, rival_state: &[i32]) -> Result<Generator> {
        let i = &self.inputs;
        build_generator(player, rival_state, i.s, &i.grids, &i.flow, i.mode)
    }
}

/// Solves every player's surface with the M-player generator. Players with
/// identical problems share one surface.
pub fn solve_game(inputs: GameInputs) -> Result<Equilibrium> {
    inputs.validate()?;
    let m = inputs.venues();
    let mut surfaces: Vec<WSurface> = Vec::with_capacity(m);
    let shared = inputs.fully_symmetric();
    for h in 0..m {
        if shared && h > 0 {
            surfaces.push(surfaces[0].relabelled(h, inputs.flow.k_total(h)));
            continue;
        }
        let surface = solve_player(&inputs, h, |rivals| {
            build_generator(h, rivals, inputs.s, &inputs.grids, &inputs.flow, inputs.mode)
        })?;
        surfaces.push(surface);
    }
    Ok(Equilibrium {
        inputs: Arc::new(inputs),
        surfaces,
    })
}

/// Two-player solve through the dedicated duopoly generator, every player
/// solved on its own.
pub fn solve_duopoly(inputs: GameInputs) -> Result<Equilibrium> {
    inputs.validate()?;
    if inputs.venues() != 2 {
        return Err(Error::Config("duopoly solver needs exactly two venues".into()));
    }
    let surfaces = (0..2)
        .map(|h| {
            solve_player(&inputs, h, |rivals| {
                build_duopoly_generator(
                    h,
                    rivals[0],
                    inputs.s,
                    &inputs.grids,
                    &inputs.flow,
                    inputs.mode,
                )
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Equilibrium {
        inputs: Arc::new(inputs),
        surfaces,
    })
}

/// Largest residual of `∂t w + A w = 0` over one generator's solution,
/// using centred differences at interior time points and scaled by
/// `max(1, |∂t w|)`.
pub fn column_residual(gen: &Generator, w: &[Vec<f64>], time: &TimeGrid) -> f64 {
    let n = gen.dim();
    let dt = time.dt();
    let mut aw = vec![0.0; n];
    let mut worst: f64 = 0.0;
    for k in 1..time.steps {
        gen.apply(&w[k], &mut aw);
        for p in 0..n {
            let dw = (w[k + 1][p] - w[k - 1][p]) / (2.0 * dt);
            let r = (dw + aw[p]).abs() / dw.abs().max(1.0);
            worst = worst.max(r);
        }
    }
    worst
}

/// [`column_residual`] maximised over every rival state of a surface.
/// `gens` holds one generator per tuple, in lattice order.
pub fn hjb_residual(surface: &WSurface, gens: &[Generator]) -> Result<f64> {
    if gens.len() != surface.tuples() {
        return Err(Error::InvalidInput(format!(
            "{} generators for {} rival states",
            gens.len(),
            surface.tuples()
        )));
    }
    let worst = gens
        .par_iter()
        .enumerate()
        .map(|(tuple, gen)| {
            let w: Vec<Vec<f64>> = (0..surface.time.points())
                .map(|t| surface.column(tuple, t).to_vec())
                .collect();
            column_residual(gen, &w, &surface.time)
        })
        .reduce(|| 0.0, f64::max);
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pool::PoolSpec;

    fn inputs(m: usize, n: usize, steps: usize) -> GameInputs {
        let g = InventoryGrid::build(&PoolSpec::constant_product(2.5e7, n)).unwrap();
        GameInputs {
            grids: vec![g; m],
            flow: FlowParams::symmetric(m, 50.0, 2.0, 2.0),
            s: 100.0,
            time: TimeGrid::new(1.0, steps).unwrap(),
            mode: GeneratorMode::Pde,
        }
    }

    #[test]
    fn terminal_and_monotone() {
        let eq = solve_game(inputs(2, 5, 50)).unwrap();
        let s = &eq.surfaces[0];
        for tuple in 0..s.tuples() {
            assert!(s.column(tuple, 50).iter().all(|&v| v == 1.0));
            for t in 0..50 {
                for (a, b) in s.column(tuple, t).iter().zip(s.column(tuple, t + 1)) {
                    assert!(*a >= *b && *b >= 1.0);
                }
            }
        }
    }

    #[test]
    fn zero_generator_gives_unit_w() {
        let g = InventoryGrid::build(&PoolSpec::constant_product(2.5e7, 0)).unwrap();
        let flow = FlowParams::symmetric(1, 50.0, 2.0, 0.0);
        let gen = build_generator(0, &[], 100.0, &[g], &flow, GeneratorMode::Pde).unwrap();
        let w = solve_w(&gen, &TimeGrid::new(1.0, 10).unwrap()).unwrap();
        assert!(w.iter().all(|c| c == &vec![1.0]));
        assert_eq!(column_residual(&gen, &w, &TimeGrid::new(1.0, 10).unwrap()), 0.0);
    }

    #[test]
    fn symmetric_players_share_storage() {
        let eq = solve_game(inputs(3, 3, 20)).unwrap();
        assert!(eq.surfaces[1].shares_storage(&eq.surfaces[0]));
        assert!(eq.surfaces[2].shares_storage(&eq.surfaces[0]));
        assert_eq!(eq.surfaces[2].player, 2);
    }

    #[test]
    fn shared_surface_matches_direct_solve() {
        let mut inp = inputs(3, 3, 20);
        let eq = solve_game(inp.clone()).unwrap();
        // break the symmetry check without changing player 2's own problem
        inp.flow.lambda_buy[0] = 49.0;
        let direct = solve_game(inp).unwrap();
        assert!(!direct.surfaces[2].shares_storage(&direct.surfaces[0]));
        for t in [0, 7, 20] {
            for own in -3..=3 {
                for a in -3..=3 {
                    for b in -3..=3 {
                        let x = eq.surfaces[2].w(t, own, &[a, b]).unwrap();
                        let y = direct.surfaces[2].w(t, own, &[a, b]).unwrap();
                        assert_eq!(x, y);
                    }
                }
            }
        }
    }

    #[test]
    fn duopoly_path_is_bitwise_equal() {
        let a = solve_game(inputs(2, 6, 40)).unwrap();
        let b = solve_duopoly(inputs(2, 6, 40)).unwrap();
        for h in 0..2 {
            assert_eq!(a.surfaces[h].data, b.surfaces[h].data);
        }
    }

    #[test]
    fn value_function_terminal_and_shift() {
        let eq = solve_game(inputs(2, 4, 20)).unwrap();
        let s = &eq.surfaces[0];
        assert_eq!(s.value(20, 1, &[0], 3.5).unwrap(), 3.5);
        let v0 = s.value(0, 1, &[0], 0.0).unwrap();
        let v1 = s.value(0, 1, &[0], 2.0).unwrap();
        assert!((v1 - v0 - 2.0).abs() < 1e-15);
        let w = s.w(0, 1, &[0]).unwrap();
        let halved = value_function(w, 0.0, 2.0 * s.k_total);
        assert!((2.0 * halved - v0).abs() <= 1e-15 * v0.abs());
    }

    #[test]
    fn index_errors() {
        let eq = solve_game(inputs(2, 4, 20)).unwrap();
        assert!(eq.surfaces[0].w(0, 5, &[0]).is_err());
        assert!(eq.surfaces[0].w(21, 0, &[0]).is_err());
        assert!(eq.surfaces[0].w(0, 0, &[0, 0]).is_err());
    }
}
