//! Equilibrium branches as a function of the entanglement strength, and the
//! strengths at which the number of equilibria changes.
//!
//! For `a = 3` the count runs 3 → 5 → 1: a pair of asymmetric equilibria
//! splits off the symmetric one at `gamma1`, then at `gamma2` each new
//! asymmetric equilibrium collides with an old one and both pairs vanish.

use rayon::prelude::*;

use crate::equilibria::{centered_polynomial_for, enumerate_equilibria, pareto_optimum, Equilibrium};
use crate::error::{Error, Result};
use crate::model::{EntangledGame, ModelParams, QuantityPair, GAMMA_MAX};
use crate::realroots::real_roots;

/// Uniform scan points on `[0, 1]` used to bracket the thresholds.
pub const COARSE_POINTS: usize = 512;

/// Final bisection bracket width for each threshold.
pub const BRACKET_WIDTH: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub gamma: f64,
    /// Sorted by `q1`.
    pub equilibria: Vec<Equilibrium>,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub gamma1: f64,
    pub gamma2: f64,
    pub bracket_width: f64,
}

/// A point where two best-response loci are tangent: a double root of the
/// equilibrium polynomial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoldPoint {
    pub gamma: f64,
    pub quantities: QuantityPair,
}

/// One row of the profit-branch table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchRow {
    pub gamma: f64,
    pub branch_id: usize,
    pub q1: f64,
    pub q2: f64,
    pub u1: f64,
    pub u2: f64,
    pub symmetric: bool,
    pub u_pareto: f64,
    pub u_classical_sym: f64,
}

/// `steps` uniformly spaced values from `lo` to `hi` inclusive.
pub fn gamma_grid(lo: f64, hi: f64, steps: usize) -> Result<Vec<f64>> {
    if !(lo.is_finite() && hi.is_finite()) || lo < 0.0 || hi > GAMMA_MAX || lo >= hi {
        return Err(Error::InvalidRange(format!(
            "need 0 <= from < to <= {GAMMA_MAX}, got [{lo}, {hi}]"
        )));
    }
    if steps < 2 {
        return Err(Error::InvalidRange(format!("need steps >= 2, got {steps}")));
    }
    let span = hi - lo;
    let last = (steps - 1) as f64;
    Ok((0..steps)
        .map(|k| if k + 1 == steps { hi } else { lo + span * k as f64 / last })
        .collect())
}

fn record_at(params: &ModelParams, gamma: f64) -> Result<SweepRecord> {
    let equilibria = enumerate_equilibria(&EntangledGame::new(*params, gamma)?)?;
    Ok(SweepRecord {
        gamma,
        count: equilibria.len(),
        equilibria,
    })
}

fn count_at(params: &ModelParams, gamma: f64) -> Result<usize> {
    Ok(enumerate_equilibria(&EntangledGame::new(*params, gamma)?)?.len())
}

/// Enumerates the equilibria at every point of a uniform `gamma` grid.
/// Grid points are solved in parallel; the output is in grid order.
pub fn sweep(params: &ModelParams, gamma_lo: f64, gamma_hi: f64, steps: usize) -> Result<Vec<SweepRecord>> {
    gamma_grid(gamma_lo, gamma_hi, steps)?
        .into_par_iter()
        .map(|g| record_at(params, g))
        .collect()
}

/// Run-length compression of a count sequence.
fn distinct_runs(counts: &[usize]) -> Vec<usize> {
    let mut runs: Vec<usize> = Vec::new();
    for &c in counts {
        if runs.last() != Some(&c) {
            runs.push(c);
        }
    }
    runs
}

/// Shrinks `[lo, hi]` while `holds(lo) && !holds(hi)`.
fn bisect<F>(mut lo: f64, mut hi: f64, holds: F) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<bool>,
{
    while hi - lo > BRACKET_WIDTH {
        let mid = 0.5 * (lo + hi);
        if holds(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo, hi))
}

/// Locates `gamma1` (3 → 5) and `gamma2` (→ 1) by bisection on the
/// equilibrium count, after a coarse scan of `[0, 1]`.
pub fn find_thresholds(params: &ModelParams) -> Result<Thresholds> {
    let grid = gamma_grid(0.0, 1.0, COARSE_POINTS)?;
    let counts: Vec<usize> = grid
        .par_iter()
        .map(|&g| count_at(params, g))
        .collect::<Result<_>>()?;

    // A coarse point could land on the 5 -> 3 tangency itself.
    let runs = distinct_runs(&counts);
    if runs != [3, 5, 1] && runs != [3, 5, 3, 1] {
        return Err(Error::PatternNotFound { observed: runs });
    }

    let first_five = counts.iter().position(|&c| c == 5).unwrap();
    let first_one = counts.iter().position(|&c| c == 1).unwrap();

    let (lo1, hi1) = bisect(grid[first_five - 1], grid[first_five], |g| {
        Ok(count_at(params, g)? == 3)
    })?;
    let (lo2, hi2) = bisect(grid[first_one - 1], grid[first_one], |g| {
        Ok(count_at(params, g)? > 1)
    })?;

    Ok(Thresholds {
        gamma1: 0.5 * (lo1 + hi1),
        gamma2: 0.5 * (lo2 + hi2),
        bracket_width: (hi1 - lo1).max(hi2 - lo2),
    })
}

/// Refines the tangency that ends the asymmetric equilibria.
///
/// Starting from the closest pair of asymmetric roots just below `gamma2`,
/// Newton's method is run on `p(t; k) = 0, p'(t; k) = 0` in the unknowns
/// `t = q1 - a` and `k = e^g sech g = 1 + tanh g`. The returned point has
/// the lower of the two mirror-image `q1` values.
pub fn fold_point(params: &ModelParams, thresholds: &Thresholds) -> Result<FoldPoint> {
    let a = params.a();
    let below = (thresholds.gamma2 - 10.0 * thresholds.bracket_width).max(0.0);
    let game = EntangledGame::new(*params, below)?;
    let eqs = enumerate_equilibria(&game)?;
    if eqs.len() < 3 {
        return Err(Error::Solver(format!(
            "expected several equilibria just below gamma2 = {}, found {}",
            thresholds.gamma2,
            eqs.len()
        )));
    }
    // Roots are sorted; the lowest two are the colliding pair.
    let mut t = 0.5 * (eqs[0].quantities.q1 + eqs[1].quantities.q1) - a;
    let mut k = game.exp_sech();

    let residual = |t: f64, k: f64| {
        let p = centered_polynomial_for(a, k);
        (p.eval(t), p.derivative().eval(t))
    };
    let h = 1e-7;
    for _ in 0..50 {
        let p = centered_polynomial_for(a, k);
        let dp = p.derivative();
        let (f1, f2) = (p.eval(t), dp.eval(t));
        let (plus, minus) = (residual(t, k + h), residual(t, k - h));
        let j11 = dp.eval(t);
        let j12 = (plus.0 - minus.0) / (2.0 * h);
        let j21 = dp.derivative().eval(t);
        let j22 = (plus.1 - minus.1) / (2.0 * h);
        let det = j11 * j22 - j12 * j21;
        if det == 0.0 || !det.is_finite() {
            return Err(Error::Solver("singular Jacobian refining fold point".into()));
        }
        let dt = (f1 * j22 - f2 * j12) / det;
        let dk = (j11 * f2 - j21 * f1) / det;
        t -= dt;
        k -= dk;
        if dt.abs() <= 1e-15 * t.abs().max(1.0) && dk.abs() <= 1e-16 {
            break;
        }
    }
    if !(1.0..2.0).contains(&k) {
        return Err(Error::Solver(format!("fold refinement left the admissible range (k = {k})")));
    }
    let gamma = (k - 1.0).atanh();
    let psi = crate::equilibria::centered_conjugate(a, k);
    Ok(FoldPoint {
        gamma,
        quantities: QuantityPair::new(a + t, a + psi.eval(t)),
    })
}

/// Tangency-aware count at a given strength: distinct real roots of the
/// equilibrium polynomial, with flags on the tangent ones.
pub fn root_count_with_flags(params: &ModelParams, gamma: f64) -> Result<(usize, usize)> {
    let game = EntangledGame::new(*params, gamma)?;
    let roots = real_roots(&crate::equilibria::centered_equilibrium_polynomial(&game))?;
    let flagged = roots.multiplicity_flags.iter().filter(|&&f| f).count();
    Ok((roots.len(), flagged))
}

/// Assigns persistent branch ids across adjacent grid points by greedy
/// nearest-neighbour matching in `(q1, q2)`.
fn label_branches(records: &[SweepRecord]) -> Vec<Vec<usize>> {
    let mut labels = Vec::with_capacity(records.len());
    let mut previous: Vec<(usize, QuantityPair)> = Vec::new();
    let mut next_id = 0;
    for record in records {
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for (i, eq) in record.equilibria.iter().enumerate() {
            for (j, (_, q)) in previous.iter().enumerate() {
                let d = (eq.quantities.q1 - q.q1).hypot(eq.quantities.q2 - q.q2);
                pairs.push((d, i, j));
            }
        }
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));

        let mut ids: Vec<Option<usize>> = vec![None; record.equilibria.len()];
        let mut taken = vec![false; previous.len()];
        for (_, i, j) in pairs {
            if ids[i].is_none() && !taken[j] {
                ids[i] = Some(previous[j].0);
                taken[j] = true;
            }
        }
        let ids: Vec<usize> = ids
            .into_iter()
            .map(|id| {
                id.unwrap_or_else(|| {
                    next_id += 1;
                    next_id - 1
                })
            })
            .collect();
        previous = ids
            .iter()
            .zip(&record.equilibria)
            .map(|(&id, eq)| (id, eq.quantities))
            .collect();
        labels.push(ids);
    }
    labels
}

/// Profits along every equilibrium branch over a `gamma` grid, with the
/// joint-optimum and classical-symmetric profit levels as constant columns.
pub fn profit_branches(params: &ModelParams, gamma_lo: f64, gamma_hi: f64, steps: usize) -> Result<Vec<BranchRow>> {
    let records = sweep(params, gamma_lo, gamma_hi, steps)?;
    let labels = label_branches(&records);
    let u_pareto = pareto_optimum(params).profit_each;
    let u_classical_sym = params.d();
    Ok(records
        .iter()
        .zip(labels)
        .flat_map(|(record, ids)| {
            record.equilibria.iter().zip(ids).map(move |(eq, branch_id)| BranchRow {
                gamma: record.gamma,
                branch_id,
                q1: eq.quantities.q1,
                q2: eq.quantities.q2,
                u1: eq.profits.u1,
                u2: eq.profits.u2,
                symmetric: eq.symmetric,
                u_pareto,
                u_classical_sym,
            })
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn params() -> ModelParams {
        ModelParams::new(3.0, 5.0, 10.0).unwrap()
    }

    #[test]
    fn grid_is_inclusive_and_validated() {
        assert_eq!(gamma_grid(0.0, 1.0, 3).unwrap(), vec![0.0, 0.5, 1.0]);
        assert!(gamma_grid(0.0, 1.0, 1).is_err());
        assert!(gamma_grid(0.5, 0.5, 4).is_err());
        assert!(gamma_grid(-0.1, 1.0, 4).is_err());
        assert!(gamma_grid(0.0, GAMMA_MAX + 1.0, 4).is_err());
    }

    #[test]
    fn sweep_plateaus() {
        for (lo, hi, steps, want) in [(0.0, 0.2, 3, 3), (0.27, 0.29, 3, 5), (0.4, 1.0, 4, 1)] {
            let records = sweep(&params(), lo, hi, steps).unwrap();
            assert_eq!(records.len(), steps);
            for r in &records {
                assert_eq!(r.count, want, "gamma = {}", r.gamma);
                assert_eq!(r.count, r.equilibria.len());
            }
        }
    }

    #[test]
    fn runs_compress() {
        assert_eq!(distinct_runs(&[3, 3, 5, 5, 5, 1]), vec![3, 5, 1]);
        assert!(distinct_runs(&[]).is_empty());
    }

    #[test]
    fn thresholds_for_a3() {
        let t = find_thresholds(&params()).unwrap();
        assert!((0.250..=0.260).contains(&t.gamma1), "{t:?}");
        assert!((0.291..=0.301).contains(&t.gamma2), "{t:?}");
        assert!(t.bracket_width <= BRACKET_WIDTH);
        assert_eq!(count_at(&params(), t.gamma2 + 1e-3).unwrap(), 1);
        assert!(count_at(&params(), t.gamma2 - 1e-3).unwrap() > 1);
    }

    #[test]
    fn tangency_at_fold() {
        let t = find_thresholds(&params()).unwrap();
        let fold = fold_point(&params(), &t).unwrap();
        assert!((fold.gamma - t.gamma2).abs() <= t.bracket_width, "{fold:?} vs {t:?}");
        let (count, flagged) = root_count_with_flags(&params(), fold.gamma).unwrap();
        assert_eq!((count, flagged), (3, 2));
    }

    #[test]
    fn small_a_has_no_pattern() {
        let p = ModelParams::new(0.1, 5.0, 10.0).unwrap();
        assert!(matches!(find_thresholds(&p), Err(Error::PatternNotFound { .. })));
    }

    #[test]
    fn branch_profits() {
        let rows = profit_branches(&params(), 0.0, 5.0, 11).unwrap();
        let first: Vec<_> = rows.iter().filter(|r| r.gamma == 0.0).collect();
        assert_eq!(first.len(), 3);
        assert_abs_diff_eq!(first[0].u1, 7.75, epsilon = 1e-9);
        assert_abs_diff_eq!(first[0].u2, 13.75, epsilon = 1e-9);
        assert_abs_diff_eq!(first[1].u1, 10.0, epsilon = 1e-9);
        let last = rows.last().unwrap();
        assert_eq!(last.gamma, 5.0);
        assert!(last.symmetric);
        assert!((last.u1 - 11.75).abs() < 0.01);
        assert_abs_diff_eq!(last.u_pareto, 11.75, epsilon = 1e-10);
        assert_eq!(last.u_classical_sym, 10.0);
        // The symmetric branch keeps its id across the whole sweep.
        let sym_ids: Vec<_> = rows.iter().filter(|r| r.symmetric).map(|r| r.branch_id).collect();
        assert!(sym_ids.iter().all(|&id| id == sym_ids[0]));
    }
}
