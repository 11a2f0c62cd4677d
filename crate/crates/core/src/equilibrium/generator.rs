use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{mispricing, FlowParams, Side};
use crate::pool::{InventoryGrid, SideQuote};

// exp() of anything larger overflows f64
const MAX_EXPONENT: f64 = 700.0;

/// Which states the rate and size arguments of a coefficient are taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorMode {
    /// Coefficients of row `j` use the rates and sizes at `j` itself, as in
    /// the reduced PDE.
    #[default]
    Pde,
    /// Coefficients use the column state: the down move of row `j` is priced
    /// at `j - 1` and the up move at `j + 1`. Edge rows read the ghost rungs.
    Shifted,
}

impl fmt::Display for GeneratorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GeneratorMode::Pde => "pde",
            GeneratorMode::Shifted => "shifted",
        })
    }
}

/// Tridiagonal generator of one player's transformed value, conditioned on
/// the rivals' inventory indices and the oracle price. The diagonal is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub player: usize,
    pub rival_state: Vec<i32>,
    pub s: f64,
    pub mode: GeneratorMode,
    halfwidth: usize,
    // up[p]: row p -> p + 1, for p in 0..n-1
    up: Vec<f64>,
    // down[p - 1]: row p -> p - 1, for p in 1..n
    down: Vec<f64>,
}

impl Generator {
    /// Matrix size, `2N + 1`.
    pub fn dim(&self) -> usize {
        self.up.len() + 1
    }

    pub fn halfwidth(&self) -> usize {
        self.halfwidth
    }

    fn pos(&self, j: i32) -> Option<usize> {
        let p = j + self.halfwidth as i32;
        (p >= 0 && (p as usize) < self.dim()).then_some(p as usize)
    }

    /// Coefficient of the move `j -> j + 1`; absent at the upper edge.
    pub fn up(&self, j: i32) -> Option<f64> {
        self.pos(j).and_then(|p| self.up.get(p).copied())
    }

    /// Coefficient of the move `j -> j - 1`; absent at the lower edge.
    pub fn down(&self, j: i32) -> Option<f64> {
        self.pos(j).filter(|&p| p >= 1).map(|p| self.down[p - 1])
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut a = DMatrix::zeros(n, n);
        for p in 0..n - 1 {
            a[(p, p + 1)] = self.up[p];
            a[(p + 1, p)] = self.down[p];
        }
        a
    }

    /// `out = A w`.
    pub fn apply(&self, w: &[f64], out: &mut [f64]) {
        let n = self.dim();
        assert!(w.len() == n && out.len() == n, "dimension mismatch");
        for p in 0..n {
            let mut acc = 0.0;
            if p + 1 < n {
                acc += self.up[p] * w[p + 1];
            }
            if p >= 1 {
                acc += self.down[p - 1] * w[p - 1];
            }
            out[p] = acc;
        }
    }
}

fn coefficient(lambda: f64, exponent: f64, player: usize, row: i32) -> Result<f64> {
    if !exponent.is_finite() || exponent > MAX_EXPONENT {
        return Err(Error::GeneratorOverflow {
            player,
            row,
            exponent,
        });
    }
    Ok(lambda * exponent.exp())
}

fn check_inputs(player: usize, grids: &[InventoryGrid], flow: &FlowParams, s: f64) -> Result<()> {
    if grids.len() != flow.venues() {
        return Err(Error::InvalidInput(format!(
            "{} grids for {} venues",
            grids.len(),
            flow.venues()
        )));
    }
    if player >= grids.len() {
        return Err(Error::InvalidInput(format!("player {player} out of range")));
    }
    if !s.is_finite() {
        return Err(Error::InvalidInput("non-finite oracle price".into()));
    }
    Ok(())
}

// rung priced into the down move out of row p (p >= 1)
fn down_rung(mode: GeneratorMode, p: usize) -> usize {
    match mode {
        GeneratorMode::Pde => p,
        GeneratorMode::Shifted => p - 1,
    }
}

// rung priced into the up move out of row p
fn up_rung(mode: GeneratorMode, p: usize) -> usize {
    match mode {
        GeneratorMode::Pde => p + 1,
        GeneratorMode::Shifted => p + 2,
    }
}

/// Generator for `player` with the rivals frozen at `rival_state` (signed
/// indices, venue order, `player` skipped).
///
/// Row `j` carries the down coefficient
/// `λ⁻ exp([k0 (s - ζ - Z₋) + Σ k_cross (Z₋^rival - Z₋)] Δ₋ - 1)` and the up
/// coefficient `λ⁺ exp([k0 (Z₊ - s - ζ) + Σ k_cross (Z₊ - Z₊^rival)] Δ₊ - 1)`,
/// i.e. the zero-fee intensity divided by `e`. Rival rates are fee-free.
pub fn build_generator(
    player: usize,
    rival_state: &[i32],
    s: f64,
    grids: &[InventoryGrid],
    flow: &FlowParams,
    mode: GeneratorMode,
) -> Result<Generator> {
    check_inputs(player, grids, flow, s)?;
    if rival_state.len() + 1 != grids.len() {
        return Err(Error::InvalidInput(format!(
            "expected {} rival indices, got {}",
            grids.len() - 1,
            rival_state.len()
        )));
    }
    let rivals: Vec<(&InventoryGrid, usize)> = grids
        .iter()
        .enumerate()
        .filter(|(v, _)| *v != player)
        .zip(rival_state)
        .map(|((_, g), &j)| {
            if g.contains(j) {
                Ok((g, (j + g.halfwidth() as i32) as usize))
            } else {
                Err(Error::IndexOutOfRange {
                    index: j,
                    halfwidth: g.halfwidth(),
                })
            }
        })
        .collect::<Result<_>>()?;
    let rival_buy: Vec<f64> = rivals.iter().map(|(g, q)| g.rival_buy_rate_at(*q)).collect();
    let rival_sell: Vec<f64> = rivals.iter().map(|(g, q)| g.rival_sell_rate_at(*q)).collect();

    let grid = &grids[player];
    let n = grid.len();
    let half = grid.halfwidth() as i32;
    let k0 = flow.k0[player];
    let zeta = flow.zeta;
    let mut up = Vec::with_capacity(n.saturating_sub(1));
    let mut down = Vec::with_capacity(n.saturating_sub(1));

    for p in 0..n {
        let row = p as i32 - half;
        if p >= 1 {
            let (rate, size) = grid.rung_at(down_rung(mode, p));
            let x = mispricing(
                Side::Buy,
                SideQuote { rate, size },
                rival_buy.iter().copied(),
                flow.rival_weights(player),
                k0,
                s,
                zeta,
            );
            down.push(coefficient(flow.lambda_buy[player], x - 1.0, player, row)?);
        }
        if p + 1 < n {
            let (rate, size) = grid.rung_at(up_rung(mode, p));
            let x = mispricing(
                Side::Sell,
                SideQuote { rate, size },
                rival_sell.iter().copied(),
                flow.rival_weights(player),
                k0,
                s,
                zeta,
            );
            up.push(coefficient(flow.lambda_sell[player], x - 1.0, player, row)?);
        }
    }

    Ok(Generator {
        player,
        rival_state: rival_state.to_vec(),
        s,
        mode,
        halfwidth: grid.halfwidth(),
        up,
        down,
    })
}

/// Two-venue generator written out term by term, without the rival loops of
/// [`build_generator`]. Both must agree bit for bit.
pub fn build_duopoly_generator(
    player: usize,
    rival_index: i32,
    s: f64,
    grids: &[InventoryGrid],
    flow: &FlowParams,
    mode: GeneratorMode,
) -> Result<Generator> {
    check_inputs(player, grids, flow, s)?;
    if grids.len() != 2 {
        return Err(Error::InvalidInput("duopoly generator needs two venues".into()));
    }
    let other = 1 - player;
    let rival = &grids[other];
    if !rival.contains(rival_index) {
        return Err(Error::IndexOutOfRange {
            index: rival_index,
            halfwidth: rival.halfwidth(),
        });
    }
    let q = (rival_index + rival.halfwidth() as i32) as usize;
    let z_rival_buy = rival.rival_buy_rate_at(q);
    let z_rival_sell = rival.rival_sell_rate_at(q);

    let grid = &grids[player];
    let n = grid.len();
    let half = grid.halfwidth() as i32;
    let k0 = flow.k0[player];
    let kc = flow.k_cross[player][other];
    let zeta = flow.zeta;
    let mut up = Vec::new();
    let mut down = Vec::new();

    for p in 0..n {
        let row = p as i32 - half;
        if p >= 1 {
            let (z, d) = grid.rung_at(down_rung(mode, p));
            let x = (k0 * ((s - zeta) - z) + kc * (z_rival_buy - z)) * d;
            down.push(coefficient(flow.lambda_buy[player], x - 1.0, player, row)?);
        }
        if p + 1 < n {
            let (z, d) = grid.rung_at(up_rung(mode, p));
            let x = (k0 * (z - (s + zeta)) + kc * (z - z_rival_sell)) * d;
            up.push(coefficient(flow.lambda_sell[player], x - 1.0, player, row)?);
        }
    }

    Ok(Generator {
        player,
        rival_state: vec![rival_index],
        s,
        mode,
        halfwidth: grid.halfwidth(),
        up,
        down,
    })
}
