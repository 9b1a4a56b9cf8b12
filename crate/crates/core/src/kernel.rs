//! The exponential look-ahead operator
//!
//! ```text
//! W[ρ](x) = (1/η) ∫ₓ^∞ exp((x − y)/η) ρ(y) dy
//! ```
//!
//! evaluated exactly on piecewise-constant `ρ = v·q` at the left cell edges.
//! Splitting the integral at the next edge gives the backward recurrence
//! `W_i = a W_{i+1} + (1 − a) ρ_i` with `a = exp(−dx/η)`, so the whole
//! field costs O(N). The integrand is taken as zero beyond the right
//! boundary, i.e. `W_N = 0`.

use crate::error::{Error, Result};
use crate::grid::CellField;

/// Look-ahead horizon `η > 0` of the nonlocal operator.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct NonlocalHorizon(f64);

impl NonlocalHorizon {
    pub fn new(eta: f64) -> Result<Self> {
        if eta > 0.0 && eta.is_finite() {
            Ok(Self(eta))
        } else {
            Err(Error::InvalidHorizon(eta))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// Recurrence weights `(a, 1 − a)` for cell width `dx`. `1 − a` goes
/// through `expm1` so it stays accurate when `dx ≪ η`.
#[inline]
pub(crate) fn decay_weights(dx: f64, eta: f64) -> (f64, f64) {
    let s = dx / eta;
    ((-s).exp(), -(-s).exp_m1())
}

/// Writes `W` at all `n + 1` edges of the grid into `out`; `out[n] = 0`.
pub(crate) fn eval_w_edges_into(rho: &[f64], dx: f64, eta: f64, out: &mut [f64]) {
    debug_assert_eq!(out.len(), rho.len() + 1);
    let (a, b) = decay_weights(dx, eta);
    let n = rho.len();
    out[n] = 0.0;
    for i in (0..n).rev() {
        out[i] = a * out[i + 1] + b * rho[i];
    }
}

/// `W_η[v·q]` at the left edge of every cell.
pub fn eval_w(v: &CellField, q: &CellField, eta: NonlocalHorizon) -> Result<CellField> {
    let rho = v.product(q)?;
    Ok(eval_w_density(&rho, eta))
}

/// `W_η[ρ]` at the left edge of every cell, for a precomputed density `ρ`.
pub fn eval_w_density(rho: &CellField, eta: NonlocalHorizon) -> CellField {
    let grid = *rho.grid();
    let mut edges = vec![0.0; grid.n_cells() + 1];
    eval_w_edges_into(rho.values(), grid.dx(), eta.get(), &mut edges);
    edges.pop();
    CellField::from_parts(grid, edges)
}

/// Largest violation over cells `0..n-1` of the discrete identity
/// `∂ₓW = (W − v·q)/η`, with `∂ₓW` approximated by the forward difference
/// between consecutive edges. Shrinks like `dx/η²` times the jumps of `v·q`.
pub fn check_w_identity(
    v: &CellField,
    q: &CellField,
    w: &CellField,
    eta: NonlocalHorizon,
) -> Result<f64> {
    let rho = v.product(q)?;
    if w.grid() != rho.grid() {
        return Err(Error::GridMismatch);
    }
    let dx = w.grid().dx();
    let eta = eta.get();
    let w = w.values();
    let rho = rho.values();
    Ok(w.windows(2)
        .zip(rho)
        .map(|(pair, r)| ((pair[1] - pair[0]) / dx - (pair[0] - r) / eta).abs())
        .fold(0.0, f64::max))
}
