//! Brute-force oracle for `max s_m(u2, u3)` subject to `min(alpha1, alpha2) = alpha`.
//!
//! The oracle never consults the closed-form case analysis. For each `u2` it
//! solves the active dimension constraint for `u3` exactly, filters by the
//! parameter restrictions and keeps the best exponent. Optional vertex
//! insertion adds the `u2` values where a branch line meets the edges of the
//! feasible box, which makes the answer exact.

use crate::exponents::{
    alpha1_raw, alpha2_raw, check_params, degenerate_dim, s_from_params, s_of_alpha, ExponentError,
    ParamVector, ProblemDims,
};
use crate::rational::{rat, ExactRational};

/// Which dimension constraint is active at the oracle's optimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SliceBranch {
    Alpha1,
    /// `alpha2` on `u2 <= 3/4`.
    Alpha2Low,
    /// `alpha2` on `u2 >= 3/4`.
    Alpha2High,
    /// `m = n-1`, one-parameter family `1 + 2(n-1)u3`.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleResult {
    pub s_star: ExactRational,
    pub u2: ExactRational,
    pub u3: ExactRational,
    pub branch: SliceBranch,
    pub step: ExactRational,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("no feasible (u2, u3) with min(alpha1, alpha2) = {0}")]
    EmptySlice(ExactRational),
    #[error("grid step must be positive with denominator <= 10^6, got {0}")]
    BadStep(ExactRational),
    #[error(transparent)]
    Exponent(#[from] ExponentError),
}

pub type Result<T> = std::result::Result<T, OracleError>;

fn q(v: i64) -> ExactRational {
    ExactRational::from_integer(v)
}

/// How candidate `u2` values are generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridMode {
    /// Grid points plus exact vertices of the feasible segment: exact optimum.
    WithVertices,
    /// Grid points only: optimum within `(n/2) * step`.
    GridOnly,
}

struct Candidate {
    s: ExactRational,
    u2: ExactRational,
    u3: ExactRational,
    branch: SliceBranch,
}

fn better(cur: &Option<Candidate>, s: &ExactRational) -> bool {
    match cur {
        None => true,
        Some(c) => *s > c.s,
    }
}

/// Checks a candidate against the box, the branch range, min-consistency and
/// the existence of a feasible `u1`.
fn admissible(
    dims: &ProblemDims,
    alpha: &ExactRational,
    u2: &ExactRational,
    u3: &ExactRational,
    branch: SliceBranch,
) -> bool {
    let half = rat(1, 2);
    let three_q = rat(3, 4);
    if *u2 < half || *u2 > dims.u2_max() || u3.is_negative() || *u3 > half {
        return false;
    }
    match branch {
        SliceBranch::Alpha2Low if *u2 > three_q => return false,
        SliceBranch::Alpha2High if *u2 < three_q => return false,
        _ => {}
    }
    let a1 = alpha1_raw(dims, u2, u3);
    let a2 = alpha2_raw(dims, u2, u3);
    if a1.clone().min(a2) != *alpha {
        return false;
    }
    let u = ParamVector::with_default_u1(u2.clone(), u3.clone());
    check_params(dims, &u).is_boundary_feasible()
}

/// Solves the branch equation for `u3` at fixed `u2` (`m > 0`).
fn solve_u3(
    dims: &ProblemDims,
    alpha: &ExactRational,
    u2: &ExactRational,
    branch: SliceBranch,
) -> ExactRational {
    let (n, m) = (dims.n() as i64, dims.m() as i64);
    match branch {
        SliceBranch::Alpha1 => {
            &(&(alpha - &rat(m - 1, 2)) - &(u2 * (n - m + 1))) / &q(m)
        }
        SliceBranch::Alpha2Low => &(&(alpha - &q(n - m - 3)) - &(u2 * 4)) / &q(2 * m),
        SliceBranch::Alpha2High => &(alpha - &q(n - m)) / &q(2 * m),
        SliceBranch::Degenerate => unreachable!(),
    }
}

/// `u2` values where a branch line crosses `u3 = 0`, `u3 = 1/2`, or the other
/// dimension constraint (`m > 0`).
fn vertex_u2s(dims: &ProblemDims, alpha: &ExactRational) -> Vec<ExactRational> {
    let (n, m) = (dims.n() as i64, dims.m() as i64);
    let mut out = vec![rat(1, 2), rat(3, 4), dims.u2_max()];
    for u3 in [q(0), rat(1, 2)] {
        // alpha1 = alpha
        out.push(&(&(alpha - &rat(m - 1, 2)) - &(&u3 * m)) / &q(n - m + 1));
        // alpha2 low = alpha
        out.push(&(&(alpha - &q(n - m - 3)) - &(&u3 * (2 * m))) / &q(4));
    }
    if m > 0 {
        // alpha1 = alpha2 = alpha on either alpha2 branch. Substituting u3 from
        // the alpha2 equation into alpha1 = alpha gives a linear equation in u2.
        // Low: u3 = (alpha - (n-m-3) - 4u2)/(2m)
        //   (m-1)/2 + (n-m+1)u2 + (alpha - (n-m-3) - 4u2)/2 = alpha
        let coef = q(n - m + 1 - 2);
        if !coef.is_zero() {
            let rhs = &(&(alpha - &rat(m - 1, 2)) - &(&(alpha - &q(n - m - 3)) / &q(2))) / &coef;
            out.push(rhs);
        }
        // High: u3 = (alpha - (n-m))/(2m)
        let u3 = &(alpha - &q(n - m)) / &q(2 * m);
        out.push(&(&(alpha - &rat(m - 1, 2)) - &(&u3 * m)) / &q(n - m + 1));
    }
    out
}

/// Maximum of `s_m(u2, u3)` over the slice `min(alpha1, alpha2) = alpha`.
pub fn exact_max_on_slice(
    dims: &ProblemDims,
    alpha: &ExactRational,
    step: &ExactRational,
) -> Result<OracleResult> {
    max_on_slice(dims, alpha, step, GridMode::WithVertices)
}

pub fn max_on_slice(
    dims: &ProblemDims,
    alpha: &ExactRational,
    step: &ExactRational,
    mode: GridMode,
) -> Result<OracleResult> {
    match step.as_i64_pair() {
        Some((num, den)) if num > 0 && den <= 1_000_000 => {}
        _ => return Err(OracleError::BadStep(step.clone())),
    }
    let (n, m) = (dims.n() as i64, dims.m() as i64);
    if m == n - 1 {
        // alpha = 1 + 2(n-1)u3; u2 plays no role.
        let u3 = &(alpha - 1) / &q(2 * (n - 1));
        if u3.is_negative() || u3 > rat(1, 2) {
            return Err(OracleError::EmptySlice(alpha.clone()));
        }
        debug_assert_eq!(degenerate_dim(dims.n(), &u3), *alpha);
        let u2 = rat(1, 2);
        return Ok(OracleResult {
            s_star: s_from_params(dims, &u2, &u3),
            u2,
            u3,
            branch: SliceBranch::Degenerate,
            step: step.clone(),
        });
    }

    let mut best: Option<Candidate> = None;
    let mut consider = |u2: ExactRational, u3: ExactRational, branch: SliceBranch| {
        let s = s_from_params(dims, &u2, &u3);
        if better(&best, &s) && admissible(dims, alpha, &u2, &u3, branch) {
            best = Some(Candidate { s, u2, u3, branch });
        }
    };

    let branches = [
        SliceBranch::Alpha1,
        SliceBranch::Alpha2Low,
        SliceBranch::Alpha2High,
    ];
    if m == 0 {
        // u3 does not enter; each branch pins u2 (or alpha) exactly.
        let u3 = q(0);
        consider(
            &(alpha + &rat(1, 2)) / &q(n + 1),
            u3.clone(),
            SliceBranch::Alpha1,
        );
        consider(&(alpha - &q(n - 3)) / &q(4), u3.clone(), SliceBranch::Alpha2Low);
        if *alpha == q(n) {
            let mut u2 = rat(3, 4);
            while u2 <= dims.u2_max() {
                consider(u2.clone(), u3.clone(), SliceBranch::Alpha2High);
                u2 = &u2 + step;
            }
            consider(rat(3, 4), u3.clone(), SliceBranch::Alpha2High);
        }
    } else {
        let mut u2s = Vec::new();
        let mut u2 = rat(1, 2);
        let top = dims.u2_max();
        while u2 <= top {
            u2s.push(u2.clone());
            u2 = &u2 + step;
        }
        if mode == GridMode::WithVertices {
            u2s.extend(vertex_u2s(dims, alpha));
        }
        for u2 in u2s {
            for &b in &branches {
                let u3 = solve_u3(dims, alpha, &u2, b);
                consider(u2.clone(), u3, b);
            }
        }
    }
    let c = best.ok_or_else(|| OracleError::EmptySlice(alpha.clone()))?;
    Ok(OracleResult {
        s_star: c.s,
        u2: c.u2,
        u3: c.u3,
        branch: c.branch,
        step: step.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PiecewiseReport {
    pub checked: usize,
    pub max_deviation: ExactRational,
    pub worst_alpha: Option<ExactRational>,
    /// Number of grid points where the oracle exceeded the closed form.
    pub soundness_violations: usize,
}

/// Compares the oracle with the closed-form `s_m` on every grid point.
pub fn verify_piecewise(
    dims: &ProblemDims,
    alphas: &[ExactRational],
    step: &ExactRational,
    mode: GridMode,
) -> Result<PiecewiseReport> {
    let mut rep = PiecewiseReport {
        checked: 0,
        max_deviation: q(0),
        worst_alpha: None,
        soundness_violations: 0,
    };
    for alpha in alphas {
        let closed = crate::exponents::s_m_of_alpha(dims, alpha)?;
        let oracle = max_on_slice(dims, alpha, step, mode)?;
        if oracle.s_star > closed {
            rep.soundness_violations += 1;
        }
        let dev = (&oracle.s_star - &closed).abs();
        if rep.worst_alpha.is_none() || dev > rep.max_deviation {
            rep.max_deviation = dev;
            rep.worst_alpha = Some(alpha.clone());
        }
        rep.checked += 1;
    }
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrandOracle {
    pub s: ExactRational,
    /// All maximizing `m`, ascending.
    pub winners: Vec<u32>,
    /// Per-`m` slice maxima (`None` where the slice is empty).
    pub per_m: Vec<Option<ExactRational>>,
}

/// `max_m` of the slice oracle, independent of the closed-form case analysis.
pub fn grand_max_oracle(n: u32, alpha: &ExactRational, step: &ExactRational) -> Result<GrandOracle> {
    let mut per_m = Vec::with_capacity(n as usize);
    for m in 0..n {
        let dims = ProblemDims::new(n, m)?;
        match exact_max_on_slice(&dims, alpha, step) {
            Ok(r) => per_m.push(Some(r.s_star)),
            Err(OracleError::EmptySlice(_)) => per_m.push(None),
            Err(e) => return Err(e),
        }
    }
    let s = per_m
        .iter()
        .flatten()
        .max()
        .cloned()
        .ok_or_else(|| OracleError::EmptySlice(alpha.clone()))?;
    let winners = per_m
        .iter()
        .enumerate()
        .filter(|(_, v)| v.as_ref() == Some(&s))
        .map(|(m, _)| m as u32)
        .collect();
    Ok(GrandOracle { s, winners, per_m })
}

/// Convenience: oracle maximum and closed-form maximum side by side.
pub fn grand_max_agrees(n: u32, alpha: &ExactRational, step: &ExactRational) -> Result<bool> {
    let o = grand_max_oracle(n, alpha, step)?;
    let c = s_of_alpha(n, alpha)?;
    Ok(o.s == c.value && o.winners == c.winners)
}

/// The default grid step `1/1000`.
pub fn default_step() -> ExactRational {
    rat(1, 1000)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponents::{s4, s_m_of_alpha};

    fn d(n: u32, m: u32) -> ProblemDims {
        ProblemDims::new(n, m).unwrap()
    }

    #[test]
    fn slice_examples() {
        let step = default_step();
        // alpha = 10 lies below n-m = 11, so the s3 branch is active for m = 4.
        let r = exact_max_on_slice(&d(15, 4), &q(10), &step).unwrap();
        assert_eq!(r.s_star, rat(65, 24));
        assert_eq!(r.s_star, s_m_of_alpha(&d(15, 4), &q(10)).unwrap());
        assert!(r.s_star < s4(&d(15, 4), &q(10)));

        let r = exact_max_on_slice(&d(4, 1), &q(2), &step).unwrap();
        assert_eq!(r.s_star, q(1));
        assert_eq!((r.u2, r.u3), (rat(1, 2), q(0)));

        for n in 2..9u32 {
            let dd = d(n, n - 1);
            let a = rat(2 * n as i64 + 1, 3);
            let r = exact_max_on_slice(&dd, &a, &step).unwrap();
            assert_eq!(r.s_star, &(&q(1 + n as i64) - &a) / &q(4));
            assert_eq!(r.branch, SliceBranch::Degenerate);
        }
    }

    #[test]
    fn bad_step_rejected() {
        assert!(exact_max_on_slice(&d(4, 1), &q(2), &q(0)).is_err());
        assert!(exact_max_on_slice(&d(4, 1), &q(2), &rat(1, 2_000_000)).is_err());
    }

    #[test]
    fn empty_slice() {
        let e = exact_max_on_slice(&d(15, 2), &q(3), &default_step());
        assert!(matches!(e, Err(OracleError::EmptySlice(_))));
    }

    #[test]
    fn grand_examples() {
        let step = default_step();
        let g = grand_max_oracle(15, &q(14), &step).unwrap();
        assert_eq!(g.s, rat(14, 15));
        assert_eq!(g.winners, vec![1]);
        let g = grand_max_oracle(6, &q(3), &step).unwrap();
        assert_eq!(g.s, rat(3, 2));
        assert!(g.winners.contains(&1));
        assert!(grand_max_agrees(13, &rat(17, 2), &step).unwrap());
    }
}
