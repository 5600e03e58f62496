//! Economic primitives: inverse demand, quartic cost, profits and the
//! entanglement-induced map from strategies `x` to market quantities `q`.
//!
//! Quantities and prices are never clamped at zero. Every function is total
//! over the reals; callers that care about sign restrictions inspect the
//! results (see `Equilibrium::negative_quantity`).

use crate::error::{Error, Result};

/// Largest admissible entanglement strength. Past this point `e^gamma`
/// swamps every other gamma-dependent term in double precision.
pub const GAMMA_MAX: f64 = 50.0;

/// Demand and cost constants. `P(Q) = a + b - Q`,
/// `C(q) = (q - a)^4 / 4 - q^2 + b q - d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    a: f64,
    b: f64,
    d: f64,
}

impl ModelParams {
    pub fn new(a: f64, b: f64, d: f64) -> Result<Self> {
        for (name, v) in [("a", a), ("b", b), ("d", d)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidParams(format!(
                    "{name} must be a positive finite number, got {v}"
                )));
            }
        }
        Ok(Self { a, b, d })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn inverse_demand(&self, total_quantity: f64) -> f64 {
        self.a + self.b - total_quantity
    }

    pub fn cost(&self, q: f64) -> f64 {
        let s = q - self.a;
        0.25 * s.powi(4) - q * q + self.b * q - self.d
    }

    pub fn profit_classical(&self, q: QuantityPair) -> ProfitPair {
        let price = self.inverse_demand(q.q1 + q.q2);
        ProfitPair {
            u1: price * q.q1 - self.cost(q.q1),
            u2: price * q.q2 - self.cost(q.q2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategyPair {
    pub x1: f64,
    pub x2: f64,
}

impl StrategyPair {
    pub fn new(x1: f64, x2: f64) -> Self {
        Self { x1, x2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantityPair {
    pub q1: f64,
    pub q2: f64,
}

impl QuantityPair {
    pub fn new(q1: f64, q2: f64) -> Self {
        Self { q1, q2 }
    }

    pub fn swapped(self) -> Self {
        Self { q1: self.q2, q2: self.q1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfitPair {
    pub u1: f64,
    pub u2: f64,
}

/// The duopoly together with an entanglement strength `gamma`.
///
/// Firm strategies `x` become quantities through
/// `q1 = x1 cosh g + x2 sinh g`, `q2 = x2 cosh g + x1 sinh g`; at `gamma = 0`
/// the map is the identity and the classical game is recovered.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntangledGame {
    params: ModelParams,
    gamma: f64,
}

impl EntangledGame {
    pub fn new(params: ModelParams, gamma: f64) -> Result<Self> {
        if !gamma.is_finite() || !(0.0..=GAMMA_MAX).contains(&gamma) {
            return Err(Error::GammaOutOfRange(gamma));
        }
        Ok(Self { params, gamma })
    }

    pub fn classical(params: ModelParams) -> Self {
        Self { params, gamma: 0.0 }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `e^gamma * sech(gamma) = 2 / (1 + e^{-2 gamma})`, running from 1 at
    /// `gamma = 0` up to 2. This is the weight on own quantity in the
    /// normalised best-response condition.
    pub fn exp_sech(&self) -> f64 {
        2.0 / (1.0 + (-2.0 * self.gamma).exp())
    }

    /// `sech(gamma) / e^gamma = 2 / (e^{2 gamma} + 1)`.
    pub fn sech_over_exp(&self) -> f64 {
        2.0 / ((2.0 * self.gamma).exp() + 1.0)
    }

    pub fn quantity_map(&self, x: StrategyPair) -> QuantityPair {
        let (s, c) = (self.gamma.sinh(), self.gamma.cosh());
        QuantityPair {
            q1: x.x1 * c + x.x2 * s,
            q2: x.x2 * c + x.x1 * s,
        }
    }

    /// Inverse of [`quantity_map`](Self::quantity_map); the mixing matrix has
    /// determinant `cosh^2 - sinh^2 = 1`.
    pub fn quantity_map_inverse(&self, q: QuantityPair) -> StrategyPair {
        let (s, c) = (self.gamma.sinh(), self.gamma.cosh());
        StrategyPair {
            x1: q.q1 * c - q.q2 * s,
            x2: q.q2 * c - q.q1 * s,
        }
    }

    pub fn profit_quantum(&self, x: StrategyPair) -> ProfitPair {
        self.params.profit_classical(self.quantity_map(x))
    }

    /// Derivative of firm `firm`'s quantum profit with respect to its own
    /// strategy, written in strategy coordinates:
    ///
    /// `-x_j sinh 2g - x_i cosh 2g - (x_j cosh g + x_i sinh g - a)^3 cosh g + a cosh g`.
    ///
    /// `firm` is 1 or 2.
    pub fn strategy_foc(&self, x: StrategyPair, firm: u8) -> f64 {
        let (own, other) = match firm {
            1 => (x.x1, x.x2),
            2 => (x.x2, x.x1),
            _ => panic!("firm index must be 1 or 2, got {firm}"),
        };
        let g = self.gamma;
        let a = self.params.a;
        let (s, c) = (g.sinh(), g.cosh());
        let shifted = own * c + other * s - a;
        -own * (2.0 * g).sinh() - other * (2.0 * g).cosh() - shifted.powi(3) * c + a * c
    }
}
