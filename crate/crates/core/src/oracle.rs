//! Brute-force equilibrium finder, kept deliberately independent of the
//! polynomial route in [`crate::equilibria`].
//!
//! The box is covered by a uniform grid. Each cell whose corners show a sign
//! change in both first-order residuals seeds a damped Newton iteration on
//! the pair of residuals; converged points are deduplicated.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{EntangledGame, QuantityPair};

/// Residual level at which a Newton run counts as converged.
pub const CONVERGED: f64 = 1e-10;

/// Converged points closer than this are the same equilibrium.
pub const DEDUP: f64 = 1e-6;

const MAX_ITERATIONS: usize = 100;
const MAX_HALVINGS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    /// Cells per axis.
    pub cells: usize,
}

impl GridSpec {
    pub fn new(lo: f64, hi: f64, cells: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
            return Err(Error::InvalidGrid(format!("need lo < hi, got [{lo}, {hi}]")));
        }
        if cells < 100 {
            return Err(Error::InvalidGrid(format!("need at least 100 cells, got {cells}")));
        }
        Ok(Self { lo, hi, cells })
    }

    /// `[a - 3, a + 3]` on each axis with 400 cells.
    pub fn default_for(game: &EntangledGame) -> Self {
        let a = game.params().a();
        Self {
            lo: a - 3.0,
            hi: a + 3.0,
            cells: 400,
        }
    }

    pub fn cell_width(&self) -> f64 {
        (self.hi - self.lo) / self.cells as f64
    }

    fn node(&self, i: usize) -> f64 {
        self.lo + self.cell_width() * i as f64
    }

    /// Whether `q` lies within `margin` cells of the box edge (or outside).
    pub fn near_boundary(&self, q: QuantityPair, margin: f64) -> bool {
        let m = margin * self.cell_width();
        [q.q1, q.q2]
            .iter()
            .any(|&v| v < self.lo + m || v > self.hi - m)
    }
}

/// Both first-order residuals, each divided by `cosh(gamma)`.
fn residuals(game: &EntangledGame, q1: f64, q2: f64) -> (f64, f64) {
    let a = game.params().a();
    let g = game.gamma();
    let weight = g.exp() / g.cosh();
    let r = |own: f64, other: f64| a + own - other - (own - a).powi(3) - weight * own;
    (r(q1, q2), r(q2, q1))
}

fn norm(r: (f64, f64)) -> f64 {
    r.0.abs().max(r.1.abs())
}

fn straddles(values: [f64; 4]) -> bool {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    lo <= 0.0 && hi >= 0.0
}

/// Damped Newton on the residual pair; `None` if it fails to converge.
fn newton(game: &EntangledGame, mut q1: f64, mut q2: f64) -> Option<QuantityPair> {
    let a = game.params().a();
    let g = game.gamma();
    let weight = g.exp() / g.cosh();
    let mut r = residuals(game, q1, q2);
    // Runs until the residual stops dropping; CONVERGED only gates
    // acceptance.
    for _ in 0..MAX_ITERATIONS {
        if norm(r) == 0.0 {
            break;
        }
        let j11 = 1.0 - 3.0 * (q1 - a).powi(2) - weight;
        let j22 = 1.0 - 3.0 * (q2 - a).powi(2) - weight;
        let (j12, j21) = (-1.0, -1.0);
        let det = j11 * j22 - j12 * j21;
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let d1 = (r.0 * j22 - r.1 * j12) / det;
        let d2 = (j11 * r.1 - j21 * r.0) / det;

        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            let (n1, n2) = (q1 - step * d1, q2 - step * d2);
            let nr = residuals(game, n1, n2);
            if norm(nr) < norm(r) {
                q1 = n1;
                q2 = n2;
                r = nr;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (norm(r) < CONVERGED).then(|| QuantityPair::new(q1, q2))
}

/// All equilibria inside the grid box, sorted by `(q1, q2)`.
pub fn grid_equilibria(game: &EntangledGame, grid: &GridSpec) -> Result<Vec<QuantityPair>> {
    let grid = GridSpec::new(grid.lo, grid.hi, grid.cells)?;
    let n = grid.cells;
    let nodes: Vec<f64> = (0..=n).map(|i| grid.node(i)).collect();
    let values: Vec<Vec<(f64, f64)>> = nodes
        .par_iter()
        .map(|&q1| nodes.iter().map(|&q2| residuals(game, q1, q2)).collect())
        .collect();

    let mut found: Vec<QuantityPair> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let values = &values;
            let nodes = &nodes;
            (0..n).filter_map(move |j| {
                let corners = [values[i][j], values[i + 1][j], values[i][j + 1], values[i + 1][j + 1]];
                let first = corners.map(|c| c.0);
                let second = corners.map(|c| c.1);
                if !(straddles(first) && straddles(second)) {
                    return None;
                }
                let c1 = 0.5 * (nodes[i] + nodes[i + 1]);
                let c2 = 0.5 * (nodes[j] + nodes[j + 1]);
                newton(game, c1, c2)
            })
        })
        .collect();

    found.sort_by(|x, y| x.q1.total_cmp(&y.q1).then(x.q2.total_cmp(&y.q2)));
    let mut unique: Vec<QuantityPair> = Vec::new();
    for q in found {
        if !unique
            .iter()
            .any(|u| (u.q1 - q.q1).abs() <= DEDUP && (u.q2 - q.q2).abs() <= DEDUP)
        {
            unique.push(q);
        }
    }
    Ok(unique)
}
