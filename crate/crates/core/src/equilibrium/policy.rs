use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::surface::WSurface;
use super::TimeGrid;
use crate::error::{Error, Result};
use crate::market::Side;
use crate::pool::InventoryGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    Equilibrium,
    Linear,
    Constant,
    Zero,
}

impl PolicyKind {
    /// Row label used in result tables.
    pub fn label(&self) -> &'static str {
        match self {
            PolicyKind::Equilibrium => "Optimal",
            PolicyKind::Linear => "Linear",
            PolicyKind::Constant => "Constant",
            PolicyKind::Zero => "Zero",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PolicyKind::Equilibrium => "equilibrium",
            PolicyKind::Linear => "linear",
            PolicyKind::Constant => "constant",
            PolicyKind::Zero => "zero",
        })
    }
}

/// Equilibrium fees of one player, read off its `w` surface:
/// `m* = (1 + log(w_j / w_{j-1})) / (k Z₋ Δ₋)`,
/// `p* = (1 + log(w_j / w_{j+1})) / (k Z₊ Δ₊)`.
#[derive(Debug, Clone)]
pub struct EquilibriumFees {
    surface: WSurface,
    grid: InventoryGrid,
}

impl EquilibriumFees {
    pub fn new(surface: WSurface, grid: InventoryGrid) -> Self {
        assert_eq!(surface.own_len(), grid.len(), "surface and grid disagree");
        Self { surface, grid }
    }

    pub fn surface(&self) -> &WSurface {
        &self.surface
    }

    pub fn grid(&self) -> &InventoryGrid {
        &self.grid
    }

    pub fn time(&self) -> &TimeGrid {
        &self.surface.time
    }

    /// Fee at grid positions; `None` on the side's boundary.
    #[inline]
    pub fn fee_at(&self, side: Side, t: usize, own_pos: usize, rival_pos: &[usize]) -> Option<f64> {
        let col = self.surface.column(self.surface.tuple_index(rival_pos), t);
        self.fee_in_column(side, col, own_pos)
    }

    #[inline]
    pub(crate) fn fee_in_column(&self, side: Side, col: &[f64], p: usize) -> Option<f64> {
        column_fee(&self.grid, self.surface.k_total, side, col, p)
    }

    /// Fee at signed indices.
    pub fn fee(&self, side: Side, t: usize, own: i32, rivals: &[i32]) -> Result<Option<f64>> {
        // validates everything
        self.surface.w(t, own, rivals)?;
        let own_pos = (own + self.grid.halfwidth() as i32) as usize;
        let rival_pos: Vec<usize> = rivals
            .iter()
            .zip(self.surface.rival_dims())
            .map(|(&j, &n)| (j + (n / 2) as i32) as usize)
            .collect();
        Ok(self.fee_at(side, t, own_pos, &rival_pos))
    }
}

/// Equilibrium fee at position `p` of a single `w` column (one time, one
/// rival state); `None` on the side's boundary.
#[inline]
pub fn column_fee(grid: &InventoryGrid, k_total: f64, side: Side, col: &[f64], p: usize) -> Option<f64> {
    match side {
        Side::Buy => {
            let rate = grid.buy_rate_at(p)?;
            let size = grid.buy_size_at(p);
            Some((1.0 + (col[p] / col[p - 1]).ln()) / (k_total * rate * size))
        }
        Side::Sell => {
            let rate = grid.sell_rate_at(p)?;
            let size = grid.sell_size_at(p);
            Some((1.0 + (col[p] / col[p + 1]).ln()) / (k_total * rate * size))
        }
    }
}

/// Build the equilibrium fee lookup of one player.
pub fn equilibrium_fees(surface: WSurface, grid: InventoryGrid) -> EquilibriumFees {
    EquilibriumFees::new(surface, grid)
}

/// Per-time affine fees `a + b·j + Σ c_r·j_r` in signed inventory indices.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFees {
    pub window: usize,
    pub time: TimeGrid,
    own_half: i32,
    rival_half: Vec<i32>,
    // [side][t][intercept, own slope, rival slopes...]
    coeffs: Vec<f64>,
}

impl LinearFees {
    fn stride(&self) -> usize {
        self.rival_half.len() + 2
    }

    fn offset(&self, side: Side, t: usize) -> usize {
        let per_side = self.time.points() * self.stride();
        let s = match side {
            Side::Buy => 0,
            Side::Sell => 1,
        };
        s * per_side + t * self.stride()
    }

    /// `[intercept, own slope, rival slopes...]` at time index `t`.
    pub fn coefficients(&self, side: Side, t: usize) -> &[f64] {
        let o = self.offset(side, t);
        &self.coeffs[o..o + self.stride()]
    }

    #[inline]
    pub fn fee_at(&self, side: Side, t: usize, own_pos: usize, rival_pos: &[usize]) -> f64 {
        let c = self.coefficients(side, t);
        let mut fee = c[0] + c[1] * (own_pos as i32 - self.own_half) as f64;
        for ((&q, &h), &slope) in rival_pos.iter().zip(&self.rival_half).zip(&c[2..]) {
            fee += slope * (q as i32 - h) as f64;
        }
        fee
    }

    /// Fee at signed indices.
    pub fn fee(&self, side: Side, t: usize, own: i32, rivals: &[i32]) -> f64 {
        let c = self.coefficients(side, t);
        c[0] + c[1] * own as f64 + rivals.iter().zip(&c[2..]).map(|(&j, s)| s * j as f64).sum::<f64>()
    }
}

// every state of the window around the centre, as signed offsets
fn window_states(window: usize, dims: usize) -> Vec<Vec<i32>> {
    let w = window as i32;
    super::lattice(&vec![2 * window + 1; dims])
        .map(|d| d.into_iter().map(|q| q as i32 - w).collect())
        .collect()
}

// Least-squares plane through `values` sampled at the window `states`.
fn fit_plane(window: usize, states: &[Vec<i32>], values: &[f64]) -> Vec<f64> {
    let dims = states.first().map_or(0, Vec::len);
    let count = states.len() as f64;
    let w = window as i32;
    let sq: f64 = (-w..=w).map(|j| (j * j) as f64).sum::<f64>() * count / (2 * window + 1) as f64;
    let mut sums = vec![0.0; dims + 1];
    for (st, &f) in states.iter().zip(values) {
        sums[0] += f;
        for (d, &j) in st.iter().enumerate() {
            sums[d + 1] += j as f64 * f;
        }
    }
    sums[0] /= count;
    for s in &mut sums[1..] {
        *s /= sq;
    }
    sums
}

/// Least-squares plane of the equilibrium fees over the `(2w+1)^M` states
/// around the centre, fitted separately at every time point and side.
///
/// The window is a full symmetric box, so the regressors (constant, own
/// index, each rival index) are orthogonal and the normal equations are
/// diagonal.
pub fn fit_linear_policy(eq: &EquilibriumFees, window: usize) -> Result<LinearFees> {
    let surface = eq.surface();
    let own_half = eq.grid().halfwidth();
    let rival_half: Vec<usize> = surface.rival_dims().iter().map(|n| n / 2).collect();
    if window == 0 {
        return Err(Error::Config("linear fit window must be at least 1".into()));
    }
    if window >= own_half || rival_half.iter().any(|&h| window > h) {
        return Err(Error::Config(format!(
            "linear fit window {window} does not fit inside the grid"
        )));
    }
    let dims = rival_half.len() + 1;
    let states = window_states(window, dims);
    let positions: Vec<(usize, Vec<usize>)> = states
        .iter()
        .map(|st| {
            let own = (st[0] + own_half as i32) as usize;
            let rivals = st[1..]
                .iter()
                .zip(&rival_half)
                .map(|(&j, &h)| (j + h as i32) as usize)
                .collect();
            (own, rivals)
        })
        .collect();

    let time = *eq.time();
    let fit_side = |side: Side| -> Vec<f64> {
        (0..time.points())
            .into_par_iter()
            .flat_map_iter(|t| {
                let values: Vec<f64> = positions
                    .iter()
                    .map(|(own, rivals)| {
                        eq.fee_at(side, t, *own, rivals)
                            .expect("window lies inside the grid")
                    })
                    .collect();
                fit_plane(window, &states, &values)
            })
            .collect()
    };
    let mut coeffs = fit_side(Side::Buy);
    coeffs.extend(fit_side(Side::Sell));
    Ok(LinearFees {
        window,
        time,
        own_half: own_half as i32,
        rival_half: rival_half.iter().map(|&h| h as i32).collect(),
        coeffs,
    })
}

/// Largest absolute gap between the plane and the equilibrium fee over the
/// fitting window at time index `t`, both sides.
pub fn linear_fit_residual(eq: &EquilibriumFees, lin: &LinearFees, t: usize) -> f64 {
    let dims = lin.rival_half.len() + 1;
    let mut worst: f64 = 0.0;
    for st in window_states(lin.window, dims) {
        let own_pos = (st[0] + lin.own_half) as usize;
        let rival_pos: Vec<usize> = st[1..]
            .iter()
            .zip(&lin.rival_half)
            .map(|(&j, &h)| (j + h) as usize)
            .collect();
        for side in Side::BOTH {
            let f = eq.fee_at(side, t, own_pos, &rival_pos).expect("inside grid");
            worst = worst.max((f - lin.fee_at(side, t, own_pos, &rival_pos)).abs());
        }
    }
    worst
}

/// One fee for both sides at every time and state: the average of the
/// equilibrium buy and sell fees at `t = 0.5` with every pool at its centre.
pub fn constant_policy(eq: &EquilibriumFees) -> Result<FeePolicy> {
    let time = eq.time();
    if time.horizon < 0.5 {
        return Err(Error::Config("horizon must reach t = 0.5 for the constant policy".into()));
    }
    let t = time.index_at(0.5);
    let centre: Vec<i32> = vec![0; eq.surface().rival_dims().len()];
    let m = eq.fee(Side::Buy, t, 0, &centre)?;
    let p = eq.fee(Side::Sell, t, 0, &centre)?;
    match (m, p) {
        (Some(m), Some(p)) => Ok(FeePolicy::Constant((p + m) / 2.0)),
        _ => Err(Error::Config("constant policy needs a grid with N >= 1".into())),
    }
}

/// Fee schedule of one venue.
#[derive(Debug, Clone)]
pub enum FeePolicy {
    Equilibrium(EquilibriumFees),
    Linear(LinearFees),
    Constant(f64),
    Zero,
}

impl FeePolicy {
    pub fn kind(&self) -> PolicyKind {
        match self {
            FeePolicy::Equilibrium(_) => PolicyKind::Equilibrium,
            FeePolicy::Linear(_) => PolicyKind::Linear,
            FeePolicy::Constant(_) => PolicyKind::Constant,
            FeePolicy::Zero => PolicyKind::Zero,
        }
    }

    /// Time grid the policy is tabulated on, if any.
    pub fn time(&self) -> Option<&TimeGrid> {
        match self {
            FeePolicy::Equilibrium(e) => Some(e.time()),
            FeePolicy::Linear(l) => Some(&l.time),
            _ => None,
        }
    }

    /// Fee at grid positions. Only meaningful where the side can trade; the
    /// equilibrium policy returns 0 on the side's boundary.
    #[inline]
    pub fn fee_at(&self, side: Side, t: usize, own_pos: usize, rival_pos: &[usize]) -> f64 {
        match self {
            FeePolicy::Equilibrium(e) => e.fee_at(side, t, own_pos, rival_pos).unwrap_or(0.0),
            FeePolicy::Linear(l) => l.fee_at(side, t, own_pos, rival_pos),
            FeePolicy::Constant(c) => *c,
            FeePolicy::Zero => 0.0,
        }
    }
}
