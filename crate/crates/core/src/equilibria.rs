//! Best responses and the complete set of pure Nash equilibria.
//!
//! Firm `j`'s first-order condition, written in quantities and divided by
//! `cosh(gamma)`, reads
//!
//! ```text
//! a + q_j - q_i - (q_j - a)^3 - k q_j = 0,      k = e^gamma sech(gamma)
//! ```
//!
//! Solved for `q_i` this is a cubic map `q_i = phi(q_j)`. A pair is an
//! equilibrium iff `q2 = phi(q1)` and `q1 = phi(q2)`, so the equilibria are
//! exactly the real roots of the degree-9 polynomial `phi(phi(q1)) - q1`.
//! Solved for `q_j` the condition is a strictly decreasing cubic, which gives
//! the unique best response.

use crate::error::{Error, Result};
use crate::model::{EntangledGame, ModelParams, ProfitPair, QuantityPair, StrategyPair};
use crate::realroots::{real_roots, real_roots_cubic, Polynomial};

/// Quantities closer than this are a symmetric equilibrium.
pub const SYMMETRY_TOL: f64 = 1e-7;

/// Bound on the normalised first-order residual, scaled by `1 + |a|^3`.
pub const RESIDUAL_TOL: f64 = 1e-8;

const POLISH_STEPS: usize = 3;

/// Polynomial roots this close to the symmetric fixed point are replaced by
/// it.
const SYMMETRIC_SNAP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibrium {
    pub quantities: QuantityPair,
    pub strategies: StrategyPair,
    pub profits: ProfitPair,
    pub symmetric: bool,
    /// Either firm produces a negative quantity. Such points are kept.
    pub negative_quantity: bool,
    /// Largest normalised first-order residual over both firms.
    pub residual: f64,
    /// The root came from a (near) multiple root of the equilibrium
    /// polynomial: two best-response loci touch here.
    pub tangency: bool,
}

impl Equilibrium {
    fn new(game: &EntangledGame, quantities: QuantityPair, tangency: bool) -> Self {
        let residual = best_response_residual(game, quantities, 1)
            .abs()
            .max(best_response_residual(game, quantities, 2).abs());
        Self {
            quantities,
            strategies: game.quantity_map_inverse(quantities),
            profits: game.params().profit_classical(quantities),
            symmetric: (quantities.q1 - quantities.q2).abs() <= SYMMETRY_TOL,
            negative_quantity: quantities.q1 < 0.0 || quantities.q2 < 0.0,
            residual,
            tangency,
        }
    }
}

/// Joint-profit maximiser `(q*, q*)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParetoOptimum {
    pub q_star: f64,
    pub alpha: f64,
    pub beta: f64,
    pub profit_each: f64,
    a: f64,
}

impl ParetoOptimum {
    /// `s^3 + 2 s + a` at `s = q* - a`; zero at the joint optimum.
    pub fn foc_residual(&self) -> f64 {
        let s = self.q_star - self.a;
        s.powi(3) + 2.0 * s + self.a
    }
}

/// Closed-form symmetric equilibrium in strategy space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetricSolution {
    pub x_star: f64,
    pub eta: f64,
    /// Quantity each firm produces, `e^gamma * x_star`.
    pub q_star_gamma: f64,
}

/// First-order residual of firm `firm` (1 or 2) at quantities `q`,
/// divided through by `cosh(gamma)`.
pub fn best_response_residual(game: &EntangledGame, q: QuantityPair, firm: u8) -> f64 {
    let (own, other) = match firm {
        1 => (q.q1, q.q2),
        2 => (q.q2, q.q1),
        _ => panic!("firm index must be 1 or 2, got {firm}"),
    };
    let a = game.params().a();
    a + own - other - (own - a).powi(3) - game.exp_sech() * own
}

/// The quantity `q_i` of the opponent for which `q_j` is a best response,
/// i.e. the point `(q_j, q_i)` on firm `j`'s best-response locus.
pub fn br_conjugate(game: &EntangledGame, q_j: f64) -> f64 {
    let a = game.params().a();
    a + q_j - (q_j - a).powi(3) - game.exp_sech() * q_j
}

/// Firm `j`'s best-response quantity against an opponent producing `q_i`.
pub fn best_response(game: &EntangledGame, q_i: f64) -> f64 {
    let a = game.params().a();
    let k = game.exp_sech();
    // With t = q_j - a: -t^3 + (1 - k) t + (2a - q_i - k a) = 0, strictly
    // decreasing in t because k >= 1.
    let cubic = Polynomial::new(vec![2.0 * a - q_i - k * a, 1.0 - k, 0.0, -1.0])
        .expect("finite cubic coefficients");
    let roots = real_roots_cubic(&cubic).expect("cubic with unit leading coefficient");
    let residual = |t: f64| cubic.eval(t).abs();
    let t = roots
        .roots
        .iter()
        .copied()
        .min_by(|x, y| residual(*x).total_cmp(&residual(*y)))
        .expect("odd-degree polynomial has a real root");
    a + t
}

/// `phi(q) - a` as a polynomial in `t = q - a`:
/// `-t^3 + (1 - k) t + a (1 - k)`.
pub(crate) fn centered_conjugate(a: f64, k: f64) -> Polynomial {
    Polynomial::new(vec![a * (1.0 - k), 1.0 - k, 0.0, -1.0]).expect("finite coefficients")
}

/// Centered equilibrium polynomial for an explicit weight `k = e^g sech g`.
pub(crate) fn centered_polynomial_for(a: f64, k: f64) -> Polynomial {
    let psi = centered_conjugate(a, k);
    let composed = psi.compose(&psi).expect("degree 9 is within limits");
    &composed - &Polynomial::new(vec![0.0, 1.0]).unwrap()
}

/// `phi(phi(q1)) - q1` in the shifted variable `t = q1 - a`. Same roots as
/// [`equilibrium_polynomial`] moved by `-a`, with much smaller coefficients
/// since every equilibrium sits within a unit or two of `a`.
pub fn centered_equilibrium_polynomial(game: &EntangledGame) -> Polynomial {
    centered_polynomial_for(game.params().a(), game.exp_sech())
}

/// `phi(phi(q1)) - q1` expanded in powers of `q1`.
pub fn equilibrium_polynomial(game: &EntangledGame) -> Polynomial {
    let a = game.params().a();
    let shift = Polynomial::new(vec![-a, 1.0]).unwrap();
    centered_equilibrium_polynomial(game)
        .compose(&shift)
        .expect("degree 9 is within limits")
}

/// A couple of Newton steps on the two first-order conditions, kept only
/// while the residual drops.
fn polish(game: &EntangledGame, mut q: QuantityPair) -> QuantityPair {
    let a = game.params().a();
    let k = game.exp_sech();
    let norm = |q: QuantityPair| {
        best_response_residual(game, q, 1)
            .abs()
            .max(best_response_residual(game, q, 2).abs())
    };
    let mut current = norm(q);
    for _ in 0..POLISH_STEPS {
        if current == 0.0 {
            break;
        }
        let r1 = best_response_residual(game, q, 1);
        let r2 = best_response_residual(game, q, 2);
        let j11 = 1.0 - 3.0 * (q.q1 - a).powi(2) - k;
        let j22 = 1.0 - 3.0 * (q.q2 - a).powi(2) - k;
        // Off-diagonal entries are both -1.
        let det = j11 * j22 - 1.0;
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let d1 = (r1 * j22 + r2) / det;
        let d2 = (j11 * r2 + r1) / det;
        let next = QuantityPair::new(q.q1 - d1, q.q2 - d2);
        let next_norm = norm(next);
        if !(next_norm < current) {
            break;
        }
        q = next;
        current = next_norm;
    }
    q
}

/// Every pure Nash equilibrium at this entanglement, sorted by `q1`.
pub fn enumerate_equilibria(game: &EntangledGame) -> Result<Vec<Equilibrium>> {
    let a = game.params().a();
    let psi = centered_conjugate(a, game.exp_sech());
    let roots = real_roots(&centered_equilibrium_polynomial(game))?;
    let limit = RESIDUAL_TOL * (1.0 + a.abs().powi(3));

    // The symmetric equilibrium solves psi(t) = t, a strictly decreasing
    // cubic whose root stays simple where the degree-9 root degenerates.
    let k = game.exp_sech();
    let fixed = Polynomial::new(vec![a * (1.0 - k), -k, 0.0, -1.0]).expect("finite coefficients");
    let t_sym = real_roots_cubic(&fixed)?.roots[0];

    let mut out = Vec::with_capacity(roots.len());
    for (t, tangency) in roots.iter() {
        let q = if (t - t_sym).abs() <= SYMMETRIC_SNAP * t_sym.abs().max(1.0) {
            QuantityPair::new(a + t_sym, a + t_sym)
        } else {
            let raw = QuantityPair::new(a + t, a + psi.eval(t));
            if tangency {
                raw
            } else {
                polish(game, raw)
            }
        };
        let eq = Equilibrium::new(game, q, tangency);
        if !(eq.residual <= limit) {
            return Err(Error::Solver(format!(
                "equilibrium at q = ({}, {}) has residual {:e} above {:e}",
                q.q1, q.q2, eq.residual, limit
            )));
        }
        out.push(eq);
    }
    out.sort_by(|x, y| x.quantities.q1.total_cmp(&y.quantities.q1));
    Ok(out)
}

/// `(2/3)^{1/3}`.
fn alpha() -> f64 {
    (2.0f64 / 3.0).cbrt()
}

/// The symmetric equilibrium from its closed form:
///
/// `x* = a e^-g + sech(g) alpha / eta - alpha^2 eta e^-g / 2`, with
/// `eta = (9 a tanh g + sqrt(12 e^{3g} sech^3 g + 81 a^2 tanh^2 g))^{1/3}`.
pub fn symmetric_closed_form(game: &EntangledGame) -> SymmetricSolution {
    let a = game.params().a();
    let g = game.gamma();
    let alpha = alpha();
    let tanh = g.tanh();
    // e^{3g} sech^3 g, formed from the bounded factor e^g sech g.
    let k3 = game.exp_sech().powi(3);
    let eta = (9.0 * a * tanh + (12.0 * k3 + 81.0 * a * a * tanh * tanh).sqrt()).cbrt();
    let decay = (-g).exp();
    let x_star = a * decay + alpha / (g.cosh() * eta) - 0.5 * alpha * alpha * eta * decay;
    SymmetricSolution {
        x_star,
        eta,
        q_star_gamma: g.exp() * x_star,
    }
}

/// Joint-profit maximiser: `q* = a + 2 alpha / beta - alpha^2 beta / 2`
/// with `beta = (9a + sqrt(96 + 81 a^2))^{1/3}`.
pub fn pareto_optimum(params: &ModelParams) -> ParetoOptimum {
    let a = params.a();
    let alpha = alpha();
    let beta = (9.0 * a + (96.0 + 81.0 * a * a).sqrt()).cbrt();
    let q_star = a + 2.0 * alpha / beta - 0.5 * alpha * alpha * beta;
    let profit_each = params.profit_classical(QuantityPair::new(q_star, q_star)).u1;
    ParetoOptimum {
        q_star,
        alpha,
        beta,
        profit_each,
        a,
    }
}

/// Residual of `delta^2 + 3 A delta + 3 A^2 - sech(g)/e^g` with
/// `A = q1 - a`, `delta = q2 - q1`. Subtracting the two first-order
/// conditions and dividing by `delta` shows this vanishes at every
/// asymmetric equilibrium.
pub fn asymmetry_identity(game: &EntangledGame, eq: &Equilibrium) -> Result<f64> {
    let q = eq.quantities;
    let delta = q.q2 - q.q1;
    if delta.abs() <= SYMMETRY_TOL {
        return Err(Error::SymmetricInput(delta.abs()));
    }
    let shift = q.q1 - game.params().a();
    Ok(delta * delta + 3.0 * shift * delta + 3.0 * shift * shift - game.sech_over_exp())
}

/// `sqrt(4/3 * sech(g)/e^g)`: an asymmetric equilibrium needs
/// `|q1 - a|` at most this for the quadratic in `delta` to have a real root.
pub fn asymmetry_bound(game: &EntangledGame) -> f64 {
    (4.0 / 3.0 * game.sech_over_exp()).sqrt()
}
