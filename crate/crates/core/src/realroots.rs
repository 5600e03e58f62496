//! Real roots of univariate polynomials with `f64` coefficients.
//!
//! Two routes are provided: [`real_roots_cubic`] evaluates the closed form
//! for degree ≤ 3, and [`real_roots`] isolates every distinct real root of a
//! polynomial of degree ≤ [`MAX_DEGREE`] with a Sturm chain, then refines by
//! bisection and a few guarded Newton steps.
//!
//! Multiple roots are handled through the square-free part `p / gcd(p, p')`,
//! where the gcd is computed by a Euclidean chain that truncates coefficients
//! lost in rounding noise. Roots that come from a nontrivial gcd, or that sit
//! closer than [`MERGE_TOL`] to a neighbour, are returned once and flagged.

use std::f64::consts::PI;
use std::ops::{Add, Neg, Sub};

use crate::error::{Error, Result};

pub const MAX_DEGREE: usize = 16;

/// Relative residual tolerance, see [`Polynomial::residual_scale`].
pub const RES_TOL: f64 = 1e-10;

/// Roots closer than this (relative to `max(1, |r|)`) are merged and flagged.
pub const MERGE_TOL: f64 = 1e-7;

/// Coefficients of a Euclidean remainder below this fraction of the working
/// magnitude are treated as rounding noise.
const TRUNCATION: f64 = 1e-13;

/// A gcd candidate is accepted only if it leaves remainders below this
/// fraction of the working magnitude in both `p` and `p'`.
const GCD_ACCEPT: f64 = 1e-6;

/// Width (relative to `max(1, |r|)`) at which bisection stops.
const BISECTION_WIDTH: f64 = 1e-12;

const MAX_NEWTON_STEPS: usize = 5;

/// Dense polynomial, coefficients in ascending degree order.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    /// Builds a polynomial, stripping trailing zero coefficients.
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if let Some(c) = coeffs.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidParams(format!("non-finite coefficient {c}")));
        }
        let p = Self::from_raw(coeffs);
        match p.degree() {
            Some(degree) if degree > MAX_DEGREE => Err(Error::DegreeTooHigh {
                degree,
                max: MAX_DEGREE,
            }),
            _ => Ok(p),
        }
    }

    fn from_raw(mut coeffs: Vec<f64>) -> Self {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Self::from_raw(vec![c])
    }

    /// Monic polynomial with the given roots (repeated entries give
    /// repeated roots).
    pub fn from_roots(roots: &[f64]) -> Result<Self> {
        let mut p = Self::constant(1.0);
        for &r in roots {
            p = p.mul(&Self::from_raw(vec![-r, 1.0]))?;
        }
        Ok(p)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn leading(&self) -> f64 {
        self.coeffs.last().copied().unwrap_or(0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Self {
        Self::from_raw(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| k as f64 * c)
                .collect(),
        )
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self::from_raw(self.coeffs.iter().map(|c| c * factor).collect())
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// `max|coeff| * max(1, |x|)^deg`, the yardstick for root residuals.
    pub fn residual_scale(&self, x: f64) -> f64 {
        let deg = self.degree().unwrap_or(0) as i32;
        self.max_abs_coeff() * x.abs().max(1.0).powi(deg)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.is_zero() || other.is_zero() {
            return Ok(Self::zero());
        }
        let degree = self.coeffs.len() + other.coeffs.len() - 2;
        if degree > MAX_DEGREE {
            return Err(Error::DegreeTooHigh {
                degree,
                max: MAX_DEGREE,
            });
        }
        let mut out = vec![0.0; degree + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Ok(Self::from_raw(out))
    }

    /// `self(inner(x))`, by Horner's scheme over polynomials.
    pub fn compose(&self, inner: &Self) -> Result<Self> {
        let mut acc = Self::zero();
        for &c in self.coeffs.iter().rev() {
            acc = &acc.mul(inner)? + &Self::constant(c);
        }
        Ok(acc)
    }

    /// Long division. Returns `(quotient, remainder)`; the remainder is not
    /// truncated.
    pub fn div_rem(&self, divisor: &Self) -> Result<(Self, Self)> {
        let (quotient, remainder, _) = self.div_rem_with_magnitude(divisor)?;
        Ok((quotient, remainder))
    }

    /// Long division that also reports the largest magnitude touched while
    /// forming the remainder, which bounds its rounding error.
    fn div_rem_with_magnitude(&self, divisor: &Self) -> Result<(Self, Self, f64)> {
        let dd = divisor.degree().ok_or(Error::ZeroPolynomial)?;
        let lead = divisor.leading();
        let mut rem = self.coeffs.clone();
        let mut magnitude = self.max_abs_coeff();
        let Some(nd) = self.degree() else {
            return Ok((Self::zero(), Self::zero(), 0.0));
        };
        if nd < dd {
            return Ok((Self::zero(), self.clone(), magnitude));
        }
        let mut quot = vec![0.0; nd - dd + 1];
        let dmax = divisor.max_abs_coeff();
        for k in (0..=nd - dd).rev() {
            let factor = rem[k + dd] / lead;
            quot[k] = factor;
            magnitude = magnitude.max(factor.abs() * dmax);
            for (j, &c) in divisor.coeffs.iter().enumerate() {
                rem[k + j] -= factor * c;
            }
            rem[k + dd] = 0.0;
        }
        rem.truncate(dd);
        Ok((Self::from_raw(quot), Self::from_raw(rem), magnitude))
    }

    /// Remainder with coefficients at rounding-noise level zeroed.
    fn truncated_rem(&self, divisor: &Self) -> Result<Self> {
        let (_, rem, magnitude) = self.div_rem_with_magnitude(divisor)?;
        let cutoff = TRUNCATION * magnitude;
        Ok(Self::from_raw(
            rem.coeffs
                .into_iter()
                .map(|c| if c.abs() <= cutoff { 0.0 } else { c })
                .collect(),
        ))
    }

    /// Positive rescaling so the largest coefficient has magnitude 1. Signs,
    /// and therefore Sturm sign patterns, are unchanged.
    fn normalized(&self) -> Self {
        let m = self.max_abs_coeff();
        if m == 0.0 {
            self.clone()
        } else {
            self.scale(1.0 / m)
        }
    }

    /// Cauchy's bound: every root satisfies `|r| < 1 + max |c_k / c_n|`.
    pub fn cauchy_bound(&self) -> Result<f64> {
        let lead = self.leading();
        if self.is_zero() {
            return Err(Error::ZeroPolynomial);
        }
        let n = self.coeffs.len() - 1;
        Ok(1.0
            + self.coeffs[..n]
                .iter()
                .fold(0.0f64, |m, c| m.max((c / lead).abs())))
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;

    fn add(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::from_raw(
            (0..n)
                .map(|k| {
                    self.coeffs.get(k).copied().unwrap_or(0.0)
                        + rhs.coeffs.get(k).copied().unwrap_or(0.0)
                })
                .collect(),
        )
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;

    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self + &(-rhs)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;

    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

/// Distinct real roots in ascending order. `multiplicity_flags[i]` marks a
/// root suspected to have multiplicity > 1 (a tangency).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RootSet {
    pub roots: Vec<f64>,
    pub multiplicity_flags: Vec<bool>,
}

impl RootSet {
    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, bool)> + '_ {
        self.roots
            .iter()
            .copied()
            .zip(self.multiplicity_flags.iter().copied())
    }

    pub fn any_flagged(&self) -> bool {
        self.multiplicity_flags.iter().any(|&f| f)
    }

    /// Sorts, then collapses neighbours closer than [`MERGE_TOL`].
    fn from_candidates(mut candidates: Vec<(f64, bool)>) -> Self {
        candidates.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut out = RootSet::default();
        for (r, flag) in candidates {
            if let Some(last) = out.roots.last_mut() {
                if (r - *last).abs() <= MERGE_TOL * last.abs().max(1.0) {
                    *last = 0.5 * (*last + r);
                    *out.multiplicity_flags.last_mut().unwrap() = true;
                    continue;
                }
            }
            out.roots.push(r);
            out.multiplicity_flags.push(flag);
        }
        out
    }
}

/// Newton step from `x` on `p`, kept only if it stays inside `[lo, hi]` and
/// lowers `|p|`.
fn polish(p: &Polynomial, dp: &Polynomial, mut x: f64, lo: f64, hi: f64, steps: usize) -> f64 {
    let mut fx = p.eval(x);
    for _ in 0..steps {
        if fx == 0.0 {
            break;
        }
        let slope = dp.eval(x);
        if slope == 0.0 || !slope.is_finite() {
            break;
        }
        let next = x - fx / slope;
        if !(lo..=hi).contains(&next) {
            break;
        }
        let fnext = p.eval(next);
        if fnext.abs() >= fx.abs() {
            break;
        }
        x = next;
        fx = fnext;
    }
    x
}

/// All real roots of a polynomial of degree 1..=3 by closed form, each
/// followed by one guarded Newton step.
pub fn real_roots_cubic(p: &Polynomial) -> Result<RootSet> {
    let degree = p.degree().ok_or(Error::ZeroPolynomial)?;
    if degree > 3 {
        return Err(Error::DegreeTooHigh { degree, max: 3 });
    }
    let c = p.coeffs();
    let raw: Vec<(f64, bool)> = match degree {
        0 => Vec::new(),
        1 => vec![(-c[0] / c[1], false)],
        2 => quadratic(c[0], c[1], c[2]),
        _ => cubic(c[0] / c[3], c[1] / c[3], c[2] / c[3]),
    };
    let dp = p.derivative();
    let polished = raw
        .into_iter()
        .map(|(r, flag)| {
            let span = r.abs().max(1.0);
            (polish(p, &dp, r, r - span, r + span, 1), flag)
        })
        .collect();
    Ok(RootSet::from_candidates(polished))
}

fn quadratic(c: f64, b: f64, a: f64) -> Vec<(f64, bool)> {
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    if disc == 0.0 {
        return vec![(-b / (2.0 * a), true)];
    }
    // Avoids cancellation between -b and the square root.
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    if q == 0.0 {
        return vec![(0.0, true)];
    }
    vec![(q / a, false), (c / q, false)]
}

/// Monic cubic `x^3 + a2 x^2 + a1 x + a0`.
fn cubic(a0: f64, a1: f64, a2: f64) -> Vec<(f64, bool)> {
    let shift = -a2 / 3.0;
    // Depressed form t^3 + p t + q with x = t + shift.
    let p = a1 - a2 * a2 / 3.0;
    let q = 2.0 * a2.powi(3) / 27.0 - a2 * a1 / 3.0 + a0;
    let half_q = 0.5 * q;
    let third_p = p / 3.0;
    let disc = half_q * half_q + third_p.powi(3);

    if disc > 0.0 {
        // One real root. Choose the cube-root argument whose two terms add
        // with the same sign.
        let u = (-half_q - q.signum() * disc.sqrt()).cbrt();
        let t = if u == 0.0 { 0.0 } else { u - third_p / u };
        vec![(t + shift, false)]
    } else if p < 0.0 {
        let r = (-third_p).sqrt();
        let cos_arg = (-half_q / r.powi(3)).clamp(-1.0, 1.0);
        let phi = cos_arg.acos();
        let tangent = disc == 0.0;
        (0..3)
            .map(|k| {
                let t = 2.0 * r * ((phi - 2.0 * PI * k as f64) / 3.0).cos();
                (t + shift, tangent)
            })
            .collect()
    } else {
        // p == 0 and q == 0: triple root.
        vec![(shift, true)]
    }
}

/// Sturm chain of a square-free polynomial.
#[derive(Debug, Clone)]
struct SturmChain {
    members: Vec<Polynomial>,
}

impl SturmChain {
    fn new(p: &Polynomial) -> Result<Self> {
        if p.is_zero() {
            return Err(Error::ZeroPolynomial);
        }
        let mut members = vec![p.normalized()];
        let dp = p.derivative();
        if !dp.is_zero() {
            members.push(dp.normalized());
        }
        while members.len() >= 2 {
            let n = members.len();
            if members[n - 1].degree() == Some(0) {
                break;
            }
            let mut rem = members[n - 2].truncated_rem(&members[n - 1])?;
            if rem.is_zero() {
                // The input is square-free, so the exact chain ends in a
                // nonzero constant; a tiny remainder still carries its sign.
                rem = members[n - 2].div_rem(&members[n - 1])?.1;
                if rem.is_zero() {
                    break;
                }
            }
            members.push((-&rem).normalized());
        }
        Ok(Self { members })
    }

    fn variations(&self, x: f64) -> usize {
        let mut count = 0;
        let mut last = 0.0f64;
        for m in &self.members {
            let v = m.eval(x);
            if v == 0.0 {
                continue;
            }
            if last != 0.0 && (v > 0.0) != (last > 0.0) {
                count += 1;
            }
            last = v;
        }
        count
    }

    /// Distinct roots in `(lo, hi]`.
    fn count(&self, lo: f64, hi: f64) -> usize {
        self.variations(lo).saturating_sub(self.variations(hi))
    }
}

/// Numerical gcd by the Euclidean algorithm with noise truncation. The
/// result is normalised to unit max coefficient.
fn approximate_gcd(p: &Polynomial, q: &Polynomial) -> Result<Polynomial> {
    let mut a = p.normalized();
    let mut b = q.normalized();
    if b.is_zero() {
        return Ok(a);
    }
    loop {
        if b.degree() == Some(0) {
            return Ok(Polynomial::constant(1.0));
        }
        let r = a.truncated_rem(&b)?;
        if r.is_zero() {
            return Ok(b);
        }
        a = b;
        b = r.normalized();
    }
}

/// Whether `g` divides `p` up to [`GCD_ACCEPT`].
fn divides(g: &Polynomial, p: &Polynomial) -> Result<bool> {
    let (_, rem, magnitude) = p.normalized().div_rem_with_magnitude(g)?;
    Ok(rem.max_abs_coeff() <= GCD_ACCEPT * magnitude)
}

/// Square-free part `p / gcd(p, p')` and the gcd itself.
fn square_free_part(p: &Polynomial) -> Result<(Polynomial, Polynomial)> {
    let dp = p.derivative();
    let mut g = approximate_gcd(p, &dp)?;
    // The Euclidean sequence can collapse early after a near-degenerate
    // step; such a candidate does not divide `p`.
    if g.degree().unwrap_or(0) > 0 && !(divides(&g, p)? && divides(&g, &dp)?) {
        g = Polynomial::constant(1.0);
    }
    if g.degree().unwrap_or(0) == 0 {
        return Ok((p.clone(), Polynomial::constant(1.0)));
    }
    let (sf, _) = p.div_rem(&g)?;
    Ok((sf, g))
}

/// Nudges an endpoint off a root of `p`.
fn off_root(p: &Polynomial, x: f64, direction: f64) -> f64 {
    let mut x = x;
    let mut step = RES_TOL * x.abs().max(1.0);
    while p.eval(x) == 0.0 {
        x += direction * step;
        step *= 2.0;
    }
    x
}

/// Number of distinct real roots of `p` in `(lo, hi]`, from the sign
/// variations of the Sturm chain of its square-free part.
pub fn sturm_count(p: &Polynomial, lo: f64, hi: f64) -> Result<usize> {
    if p.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    if !(lo < hi) {
        return Err(Error::InvalidRange(format!("need lo < hi, got ({lo}, {hi})")));
    }
    let (sf, _) = square_free_part(p)?;
    let chain = SturmChain::new(&sf)?;
    let lo = off_root(&sf, lo, -1.0);
    let hi = off_root(&sf, hi, 1.0);
    Ok(chain.count(lo, hi))
}

/// All distinct real roots of `p`.
pub fn real_roots(p: &Polynomial) -> Result<RootSet> {
    let degree = p.degree().ok_or(Error::ZeroPolynomial)?;
    if degree == 0 {
        return Ok(RootSet::default());
    }
    let (sf, gcd) = square_free_part(p)?;
    let chain = SturmChain::new(&sf)?;
    let bound = sf.cauchy_bound()?;
    let dsf = sf.derivative();

    let mut candidates: Vec<(f64, bool)> = Vec::new();
    let mut stack = vec![(-bound, bound, chain.count(-bound, bound))];
    while let Some((lo, hi, n)) = stack.pop() {
        match n {
            0 => {}
            1 => candidates.push((refine(&chain, &sf, &dsf, lo, hi), false)),
            _ => {
                let mid = 0.5 * (lo + hi);
                if hi - lo <= MERGE_TOL * mid.abs().max(1.0) {
                    candidates.push((mid, true));
                    continue;
                }
                let left = chain.count(lo, mid);
                stack.push((mid, hi, n.saturating_sub(left)));
                stack.push((lo, mid, left));
            }
        }
    }

    // Roots shared with the gcd are the multiple roots of `p`.
    if gcd.degree().unwrap_or(0) > 0 {
        let multiple = real_roots(&gcd)?;
        for (r, flag) in candidates.iter_mut() {
            if multiple
                .roots
                .iter()
                .any(|m| (m - *r).abs() <= 1e-6 * r.abs().max(1.0))
            {
                *flag = true;
            }
        }
    }
    Ok(RootSet::from_candidates(candidates))
}

/// Narrows `(lo, hi]`, known to hold exactly one root of `sf`, down to
/// [`BISECTION_WIDTH`] and finishes with Newton.
fn refine(chain: &SturmChain, sf: &Polynomial, dsf: &Polynomial, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = sf.eval(lo);
    let fhi = sf.eval(hi);
    if fhi == 0.0 {
        return hi;
    }
    let by_sign = flo != 0.0 && (flo > 0.0) != (fhi > 0.0);
    while hi - lo > BISECTION_WIDTH * lo.abs().max(hi.abs()).max(1.0) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if by_sign {
            let fm = sf.eval(mid);
            if fm == 0.0 {
                return mid;
            }
            if (fm > 0.0) == (flo > 0.0) {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        } else if chain.count(lo, mid) == 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mid = 0.5 * (lo + hi);
    let span = (hi - lo).max(BISECTION_WIDTH * mid.abs().max(1.0));
    polish(sf, dsf, mid, mid - span, mid + span, MAX_NEWTON_STEPS)
}
