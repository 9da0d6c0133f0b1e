//! Closed-form regularity exponents, dimension formulas and the case analysis
//! that assembles them into the curve `alpha -> s(alpha)`.
//!
//! Everything here is exact: inputs and outputs are [`ExactRational`].

use std::fmt;

use crate::rational::{rat, ExactRational};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExponentError {
    #[error("invalid dimensions n={n}, m={m} (need n >= 2, 0 <= m <= n-1)")]
    InvalidDims { n: u32, m: u32 },
    #[error("degenerate denominator in {0}")]
    DegenerateDenominator(&'static str),
    #[error("{what}: {value} outside [{lo}, {hi}]")]
    OutOfRange {
        what: &'static str,
        value: ExactRational,
        lo: ExactRational,
        hi: ExactRational,
    },
    #[error("infeasible parameters: {0:?}")]
    Infeasible(Vec<Constraint>),
    #[error("malformed input: {0}")]
    Malformed(String),
}

pub type Result<T> = std::result::Result<T, ExponentError>;

fn q(v: i64) -> ExactRational {
    ExactRational::from_integer(v)
}

/// Ambient dimension `n` and intermediate-space dimension `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ProblemDims {
    n: u32,
    m: u32,
}

impl ProblemDims {
    pub fn new(n: u32, m: u32) -> Result<Self> {
        if n < 2 || m >= n {
            return Err(ExponentError::InvalidDims { n, m });
        }
        Ok(ProblemDims { n, m })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn m0(&self) -> u32 {
        m0(self.n)
    }

    pub fn m1(&self) -> u32 {
        m1(self.n)
    }

    fn ni(&self) -> i64 {
        self.n as i64
    }

    fn mi(&self) -> i64 {
        self.m as i64
    }

    /// Upper end of the admissible `u2` interval, `1 - 1/(2(n-m+1))`.
    pub fn u2_max(&self) -> ExactRational {
        q(1) - rat(1, 2 * (self.ni() - self.mi() + 1))
    }
}

/// `floor((n-1)/3)`.
pub fn m0(n: u32) -> u32 {
    (n - 1) / 3
}

/// `floor(n/2 - 1)`.
pub fn m1(n: u32) -> u32 {
    (n / 2).saturating_sub(1)
}

/// An affine function `slope * alpha + intercept`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Affine {
    pub slope: ExactRational,
    pub intercept: ExactRational,
}

impl Affine {
    pub fn eval(&self, alpha: &ExactRational) -> ExactRational {
        &(&self.slope * alpha) + &self.intercept
    }

    /// `c + k * (n - alpha)`.
    fn from_tail(c: ExactRational, k: ExactRational, n: i64) -> Self {
        Affine {
            slope: -&k,
            intercept: &c + &(&k * n),
        }
    }

    /// Point where two affine maps agree, if they are not parallel.
    pub fn crossing(&self, other: &Affine) -> Option<ExactRational> {
        let ds = &self.slope - &other.slope;
        if ds.is_zero() {
            return None;
        }
        Some(&(&other.intercept - &self.intercept) / &ds)
    }
}

/// Identifies one closed-form branch of `s_m(alpha)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Formula {
    S3(u32),
    S4(u32),
    S5(u32),
    /// `(n-m-1)/4 + (n-alpha)/4`, the `u2 = 1/2` branch used below `alpha = m+1`
    /// when `n/2 - 1 < m <= n-3`.
    Lower(u32),
    /// `(n+1)/8 + (n-alpha)/8` for `m = n-2`, `1 <= alpha <= 2`.
    NearLow,
    /// `3/8 + (n-alpha)/4` for `m = n-2`, `2 <= alpha <= n-1/2`.
    NearMid,
    /// `1/3 + (n-alpha)/3` for `m = n-2`, `n-1/2 <= alpha <= n`.
    NearHigh,
    /// `(1+n-alpha)/4` for `m = n-1`.
    Degenerate,
}

impl Formula {
    pub fn affine(&self, n: u32) -> Result<Affine> {
        let ni = n as i64;
        let dims_for = |m: u32| ProblemDims::new(n, m);
        Ok(match *self {
            Formula::S3(m) => s3_affine(&dims_for(m)?),
            Formula::S4(m) => s4_affine(&dims_for(m)?),
            Formula::S5(m) => s5_affine(&dims_for(m)?)?,
            Formula::Lower(m) => {
                let d = dims_for(m)?;
                Affine::from_tail(rat(d.ni() - d.mi() - 1, 4), rat(1, 4), ni)
            }
            Formula::NearLow => Affine::from_tail(rat(ni + 1, 8), rat(1, 8), ni),
            Formula::NearMid => Affine::from_tail(rat(3, 8), rat(1, 4), ni),
            Formula::NearHigh => Affine::from_tail(rat(1, 3), rat(1, 3), ni),
            Formula::Degenerate => Affine::from_tail(rat(1, 4), rat(1, 4), ni),
        })
    }

    pub fn eval(&self, n: u32, alpha: &ExactRational) -> Result<ExactRational> {
        Ok(self.affine(n)?.eval(alpha))
    }

    /// The `m` this branch belongs to, when it is tied to one.
    pub fn m(&self) -> Option<u32> {
        match *self {
            Formula::S3(m) | Formula::S4(m) | Formula::S5(m) | Formula::Lower(m) => Some(m),
            _ => None,
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::S3(m) => write!(f, "s3,{m}"),
            Formula::S4(m) => write!(f, "s4,{m}"),
            Formula::S5(m) => write!(f, "s5,{m}"),
            Formula::Lower(m) => write!(f, "low,{m}"),
            Formula::NearLow => write!(f, "n-2:low"),
            Formula::NearMid => write!(f, "n-2:mid"),
            Formula::NearHigh => write!(f, "n-2:high"),
            Formula::Degenerate => write!(f, "n-1"),
        }
    }
}

fn s3_affine(d: &ProblemDims) -> Affine {
    let (n, m) = (d.ni(), d.mi());
    Affine::from_tail(rat(n, 2 * (n - m + 1)), rat(n - m - 1, 2 * (n - m + 1)), n)
}

fn s4_affine(d: &ProblemDims) -> Affine {
    let (n, m) = (d.ni(), d.mi());
    let k = rat(n - m, 2 * (n - m + 1));
    Affine::from_tail(k.clone(), k, n)
}

fn s5_affine(d: &ProblemDims) -> Result<Affine> {
    let (n, m) = (d.ni(), d.mi());
    if n - m - 1 == 0 {
        return Err(ExponentError::DegenerateDenominator("s5: n-m-1 = 0"));
    }
    Ok(Affine::from_tail(rat(1, 2), rat(n - m - 2, 2 * (n - m - 1)), n))
}

pub fn s3(dims: &ProblemDims, alpha: &ExactRational) -> ExactRational {
    s3_affine(dims).eval(alpha)
}

pub fn s4(dims: &ProblemDims, alpha: &ExactRational) -> ExactRational {
    s4_affine(dims).eval(alpha)
}

pub fn s5(dims: &ProblemDims, alpha: &ExactRational) -> Result<ExactRational> {
    Ok(s5_affine(dims)?.eval(alpha))
}

/// `n - (m-1)(n-m-1)/(n-m-3)`, defined for `m < n-3`.
pub fn beta1(dims: &ProblemDims) -> Result<ExactRational> {
    let (n, m) = (dims.ni(), dims.mi());
    if n - m - 3 <= 0 {
        return Err(ExponentError::DegenerateDenominator("beta1: n-m-3 <= 0"));
    }
    Ok(q(n) - rat((m - 1) * (n - m - 1), n - m - 3))
}

/// `(n+m+1)/2`.
pub fn beta2(dims: &ProblemDims) -> ExactRational {
    rat(dims.ni() + dims.mi() + 1, 2)
}

fn check_box(dims: &ProblemDims, u2: &ExactRational, u3: &ExactRational) -> Result<()> {
    let (lo2, hi2) = (rat(1, 2), dims.u2_max());
    if *u2 < lo2 || *u2 > hi2 {
        return Err(ExponentError::OutOfRange {
            what: "u2",
            value: u2.clone(),
            lo: lo2,
            hi: hi2,
        });
    }
    if u3.is_negative() || *u3 > rat(1, 2) {
        return Err(ExponentError::OutOfRange {
            what: "u3",
            value: u3.clone(),
            lo: q(0),
            hi: rat(1, 2),
        });
    }
    Ok(())
}

/// `alpha1` only, without the box check. Used by the oracle's inner loop.
pub fn alpha1_raw(dims: &ProblemDims, u2: &ExactRational, u3: &ExactRational) -> ExactRational {
    let (n, m) = (dims.ni(), dims.mi());
    &(&rat(m - 1, 2) + &(u2 * (n - m + 1))) + &(u3 * m)
}

/// `alpha2` only, without the box check.
pub fn alpha2_raw(dims: &ProblemDims, u2: &ExactRational, u3: &ExactRational) -> ExactRational {
    let (n, m) = (dims.ni(), dims.mi());
    if *u2 <= rat(3, 4) {
        &(&q(n - m - 3) + &(u2 * 4)) + &(u3 * (2 * m))
    } else {
        &q(n - m) + &(u3 * (2 * m))
    }
}

/// Upper-bound exponents `(alpha1, alpha2)` whose minimum is the dimension of
/// the divergence set built from `(u2, u3)`.
pub fn alpha_dims(
    dims: &ProblemDims,
    u2: &ExactRational,
    u3: &ExactRational,
) -> Result<(ExactRational, ExactRational)> {
    check_box(dims, u2, u3)?;
    let a1 = alpha1_raw(dims, u2, u3);
    let a2 = alpha2_raw(dims, u2, u3);
    if *u2 == rat(3, 4) {
        let (n, m) = (dims.ni(), dims.mi());
        let high = &q(n - m) + &(u3 * (2 * m));
        debug_assert_eq!(a2, high);
    }
    Ok((a1, a2))
}

/// Dimension of the `m = n-1` family, `1 + 2(n-1)u3`.
pub fn degenerate_dim(n: u32, u3: &ExactRational) -> ExactRational {
    &q(1) + &(u3 * (2 * (n as i64 - 1)))
}

/// Sobolev exponent `s_m(u2, u3)`.
pub fn s_from_params(dims: &ProblemDims, u2: &ExactRational, u3: &ExactRational) -> ExactRational {
    let (n, m) = (dims.ni(), dims.mi());
    let base = rat(2 * n - m - 1, 4);
    &(&base - &(u2 * rat(n - m - 1, 2))) - &(u3 * rat(m, 2))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamVector {
    pub u1: ExactRational,
    pub u2: ExactRational,
    pub u3: ExactRational,
}

impl ParamVector {
    pub fn new(u1: ExactRational, u2: ExactRational, u3: ExactRational) -> Self {
        ParamVector { u1, u2, u3 }
    }

    /// `(u2, u3)` completed with the largest admissible `u1 = min(1/2, 2u2-1)`.
    pub fn with_default_u1(u2: ExactRational, u3: ExactRational) -> Self {
        let u1 = rat(1, 2).min(&(&u2 * 2) - 1);
        ParamVector { u1, u2, u3 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DilationVector {
    pub a1: ExactRational,
    pub a2: ExactRational,
    pub a3: ExactRational,
}

/// The individual parameter restrictions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Constraint {
    U1Positive,
    U1AtMostHalf,
    U2Positive,
    U2AtMostOne,
    U3Positive,
    U3AtMostHalf,
    /// `2u2 - u1 >= 1`, i.e. `Q >= 1`.
    QAtLeastOne,
    /// `u2 - u1 < 1/2`.
    Shrinking,
    /// `(n-m+1) u2 <= n-m+1/2`.
    LatticeFit,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeasibilityReport {
    /// Violated restrictions; empty iff the vector is (boundary-)feasible.
    pub violations: Vec<Constraint>,
    /// Strict inequalities met with equality (`u1 = 0`, `u3 = 0` or
    /// `u2 - u1 = 1/2`); these closure points are where the exponent is optimized.
    pub boundary: Vec<Constraint>,
    pub dilation_exists: bool,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty() && self.boundary.is_empty()
    }

    pub fn is_boundary_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn check_params(dims: &ProblemDims, u: &ParamVector) -> FeasibilityReport {
    let (n, m) = (dims.ni(), dims.mi());
    let half = rat(1, 2);
    let mut violations = Vec::new();
    let mut boundary = Vec::new();
    let mut positive = |v: &ExactRational, c: Constraint, v_out: &mut Vec<Constraint>| {
        if v.is_zero() {
            boundary.push(c);
        } else if v.is_negative() {
            v_out.push(c);
        }
    };
    positive(&u.u1, Constraint::U1Positive, &mut violations);
    positive(&u.u3, Constraint::U3Positive, &mut violations);
    if u.u1 > half {
        violations.push(Constraint::U1AtMostHalf);
    }
    if u.u3 > half {
        violations.push(Constraint::U3AtMostHalf);
    }
    if !u.u2.is_positive() {
        violations.push(Constraint::U2Positive);
    }
    if u.u2 > q(1) {
        violations.push(Constraint::U2AtMostOne);
    }
    if &(&u.u2 * 2) - &u.u1 < q(1) {
        violations.push(Constraint::QAtLeastOne);
    }
    let gap = &u.u2 - &u.u1;
    if gap == half {
        boundary.push(Constraint::Shrinking);
    } else if gap > half {
        violations.push(Constraint::Shrinking);
    }
    if &u.u2 * (n - m + 1) > &q(n - m) + &half {
        violations.push(Constraint::LatticeFit);
    }
    let dilation_exists = violations.is_empty()
        && dilation_formula(dims, u)
            .map(|a| dilation_invariants_hold(dims, u, &a))
            .unwrap_or(false);
    FeasibilityReport {
        violations,
        boundary,
        dilation_exists,
    }
}

fn dilation_formula(dims: &ProblemDims, u: &ParamVector) -> Option<DilationVector> {
    let (n, m) = (dims.ni(), dims.mi());
    let k = n - m - 1;
    let (a1, a2) = if k == 0 {
        (&(&u.u2 * 2) - 1, u.u2.clone())
    } else if u.u2 >= rat(3, 4) {
        let a2 = &(&(&u.u2 * (n - m + 1)) - &rat(3, 2)) / &q(k);
        (rat(1, 2), a2)
    } else {
        (&(&u.u2 * 2) - 1, u.u2.clone())
    };
    Some(DilationVector {
        a1,
        a2,
        a3: u.u3.clone(),
    })
}

fn dilation_invariants_hold(dims: &ProblemDims, u: &ParamVector, a: &DilationVector) -> bool {
    let (n, m) = (dims.ni(), dims.mi());
    let k = n - m - 1;
    let sum_ok = &a.a1 + &(&a.a2 * k) == &(&u.u2 * (n - m + 1)) - 1;
    let a1_ok = u.u1 <= a.a1 && a.a1 <= rat(1, 2);
    let a2_ok = k == 0 || (u.u2 <= a.a2 && a.a2 <= q(1));
    sum_ok && a1_ok && a2_ok && a.a3 == u.u3
}

/// Dilation exponents making the enlarged slabs locally ubiquitous.
pub fn dilation_from_params(dims: &ProblemDims, u: &ParamVector) -> Result<DilationVector> {
    let rep = check_params(dims, u);
    if !rep.is_boundary_feasible() {
        return Err(ExponentError::Infeasible(rep.violations));
    }
    let a = dilation_formula(dims, u).expect("formula is total on feasible input");
    if !dilation_invariants_hold(dims, u, &a) {
        return Err(ExponentError::Infeasible(vec![]));
    }
    Ok(a)
}

/// Hausdorff-dimension lower bound for a limsup of rectangles with side
/// exponents `b` dilated to `a`.
pub fn mtp_lower_bound(b: &[ExactRational], a: &[ExactRational]) -> Result<ExactRational> {
    if a.len() != b.len() || a.is_empty() {
        return Err(ExponentError::Malformed(format!(
            "length mismatch: |a|={}, |b|={}",
            a.len(),
            b.len()
        )));
    }
    for (ai, bi) in a.iter().zip(b) {
        if !ai.is_positive() || *bi > q(1) || ai > bi {
            return Err(ExponentError::Malformed(format!(
                "need 0 < a_i <= b_i <= 1, got a_i={ai}, b_i={bi}"
            )));
        }
    }
    let mut best: Option<ExactRational> = None;
    let mut levels: Vec<&ExactRational> = b.iter().collect();
    levels.sort();
    levels.dedup();
    for big_b in levels {
        let mut total = q(0);
        for (aj, bj) in a.iter().zip(b) {
            if aj >= big_b {
                total = total + 1;
            } else if bj <= big_b {
                total = &total + &(&q(1) - &(&(bj - aj) / big_b));
            } else {
                total = &total + &(aj / big_b);
            }
        }
        best = Some(match best {
            None => total,
            Some(cur) => cur.min(total),
        });
    }
    Ok(best.expect("nonempty"))
}

/// Which family of Prop-style case analysis a given `m` falls into.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `0 <= m <= (n-1)/3`.
    Small,
    /// `(n-1)/3 < m <= n/2 - 1`.
    Middle,
    /// `n/2 - 1 < m <= n-3`.
    Large,
    /// `m = n-2 >= 1`.
    NearTop,
    /// `m = n-1`.
    Degenerate,
}

pub fn regime(dims: &ProblemDims) -> Regime {
    let (n, m) = (dims.ni(), dims.mi());
    if m == n - 1 {
        Regime::Degenerate
    } else if m == n - 2 && m >= 1 {
        Regime::NearTop
    } else if 3 * m < n {
        Regime::Small
    } else if 2 * m <= n - 2 {
        Regime::Middle
    } else {
        Regime::Large
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub lo: ExactRational,
    pub hi: ExactRational,
    pub slope: ExactRational,
    pub intercept: ExactRational,
    pub label: Option<String>,
}

impl Segment {
    pub fn eval(&self, alpha: &ExactRational) -> ExactRational {
        &(&self.slope * alpha) + &self.intercept
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CurveError {
    #[error("empty curve")]
    Empty,
    #[error("segment {0} has lo > hi")]
    Reversed(usize),
    #[error("gap or overlap between segments {0} and {1}")]
    NotContiguous(usize, usize),
    #[error("discontinuity at {0}")]
    Discontinuous(ExactRational),
    #[error("segment {0} is increasing")]
    Increasing(usize),
}

/// A continuous, nonincreasing piecewise-linear map on a closed interval.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PiecewiseLinearCurve {
    segments: Vec<Segment>,
}

impl PiecewiseLinearCurve {
    pub fn new(segments: Vec<Segment>) -> std::result::Result<Self, CurveError> {
        if segments.is_empty() {
            return Err(CurveError::Empty);
        }
        for (i, s) in segments.iter().enumerate() {
            if s.lo > s.hi {
                return Err(CurveError::Reversed(i));
            }
            if s.slope.is_positive() {
                return Err(CurveError::Increasing(i));
            }
        }
        for i in 1..segments.len() {
            let (a, b) = (&segments[i - 1], &segments[i]);
            if a.hi != b.lo {
                return Err(CurveError::NotContiguous(i - 1, i));
            }
            if a.eval(&a.hi) != b.eval(&b.lo) {
                return Err(CurveError::Discontinuous(a.hi.clone()));
            }
        }
        Ok(PiecewiseLinearCurve { segments })
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn domain(&self) -> (ExactRational, ExactRational) {
        (
            self.segments[0].lo.clone(),
            self.segments.last().expect("nonempty").hi.clone(),
        )
    }

    /// Interior breakpoints in ascending order.
    pub fn breakpoints(&self) -> Vec<ExactRational> {
        self.segments[1..].iter().map(|s| s.lo.clone()).collect()
    }

    /// Segment owning `alpha`; a shared breakpoint belongs to the left segment.
    pub fn segment_at(&self, alpha: &ExactRational) -> Option<&Segment> {
        self.segments.iter().find(|s| s.lo <= *alpha && *alpha <= s.hi)
    }

    pub fn eval(&self, alpha: &ExactRational) -> Option<ExactRational> {
        self.segment_at(alpha).map(|s| s.eval(alpha))
    }
}

/// Branch list `(lo, hi, formula)` of `s_m` before empty pieces are dropped.
fn raw_pieces(dims: &ProblemDims) -> Result<Vec<(ExactRational, ExactRational, Formula)>> {
    let (n, m) = (dims.ni(), dims.mi());
    let mu = dims.m;
    let half_n = rat(n, 2);
    Ok(match regime(dims) {
        Regime::Degenerate => vec![(q(1), q(n), Formula::Degenerate)],
        Regime::NearTop => vec![
            (q(1), q(2), Formula::NearLow),
            (q(2), &q(n) - &rat(1, 2), Formula::NearMid),
            (&q(n) - &rat(1, 2), q(n), Formula::NearHigh),
        ],
        Regime::Small => vec![
            (half_n, q(n - m), Formula::S3(mu)),
            (q(n - m), q(n), Formula::S4(mu)),
        ],
        Regime::Middle => {
            let b1 = beta1(dims)?;
            let b2 = beta2(dims);
            vec![
                (half_n, b1.clone(), Formula::S3(mu)),
                (b1, b2.clone(), Formula::S5(mu)),
                (b2, q(n), Formula::S4(mu)),
            ]
        }
        Regime::Large => {
            let b2 = beta2(dims);
            vec![
                (q(n - m - 1), q(m + 1), Formula::Lower(mu)),
                (q(m + 1), b2.clone(), Formula::S5(mu)),
                (b2, q(n), Formula::S4(mu)),
            ]
        }
    })
}

/// The piecewise curve `alpha -> s_m(alpha)` on its full domain.
pub fn curve_m(dims: &ProblemDims) -> Result<PiecewiseLinearCurve> {
    let mut segs = Vec::new();
    for (lo, hi, f) in raw_pieces(dims)? {
        if lo == hi {
            continue;
        }
        let aff = f.affine(dims.n)?;
        segs.push(Segment {
            lo,
            hi,
            slope: aff.slope,
            intercept: aff.intercept,
            label: Some(f.to_string()),
        });
    }
    PiecewiseLinearCurve::new(segs)
        .map_err(|e| ExponentError::Malformed(format!("curve for {dims:?}: {e}")))
}

/// Closed domain `[lo, n]` on which `s_m` is defined.
pub fn domain_m(dims: &ProblemDims) -> (ExactRational, ExactRational) {
    let (n, m) = (dims.ni(), dims.mi());
    let lo = match regime(dims) {
        Regime::Degenerate | Regime::NearTop => q(1),
        Regime::Large => q(n - m - 1),
        Regime::Small | Regime::Middle => rat(n, 2),
    };
    (lo, q(n))
}

/// The branch of `s_m` active at `alpha` (left segment at breakpoints).
pub fn s_m_formula_at(dims: &ProblemDims, alpha: &ExactRational) -> Result<Formula> {
    let (lo, hi) = domain_m(dims);
    if *alpha < lo || *alpha > hi {
        return Err(ExponentError::OutOfRange {
            what: "alpha",
            value: alpha.clone(),
            lo,
            hi,
        });
    }
    for (a, b, f) in raw_pieces(dims)? {
        if a < b && a <= *alpha && *alpha <= b {
            return Ok(f);
        }
    }
    unreachable!("pieces cover the domain")
}

pub fn s_m_of_alpha(dims: &ProblemDims, alpha: &ExactRational) -> Result<ExactRational> {
    s_m_formula_at(dims, alpha)?.eval(dims.n, alpha)
}

/// Maximum of `s_m(alpha)` over all `m` whose domain contains `alpha`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrandMax {
    pub value: ExactRational,
    /// All maximizing `m`, ascending. The first is the canonical one.
    pub winners: Vec<u32>,
}

pub fn s_of_alpha(n: u32, alpha: &ExactRational) -> Result<GrandMax> {
    ProblemDims::new(n, 0)?;
    let mut best: Option<GrandMax> = None;
    for m in 0..n {
        let dims = ProblemDims::new(n, m)?;
        let (lo, hi) = domain_m(&dims);
        if *alpha < lo || *alpha > hi {
            continue;
        }
        let v = s_m_of_alpha(&dims, alpha)?;
        match &mut best {
            None => {
                best = Some(GrandMax {
                    value: v,
                    winners: vec![m],
                })
            }
            Some(g) if v > g.value => {
                g.value = v;
                g.winners = vec![m];
            }
            Some(g) if v == g.value => g.winners.push(m),
            _ => {}
        }
    }
    best.ok_or(ExponentError::OutOfRange {
        what: "alpha",
        value: alpha.clone(),
        lo: q(1),
        hi: q(n as i64),
    })
}

/// One interval of the explicit main-theorem description of `s(alpha)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Theorem1Branch {
    pub label: String,
    pub lo: ExactRational,
    pub hi: ExactRational,
    /// Formulas whose maximum gives `s` on this interval.
    pub formulas: Vec<Formula>,
    pub ms: Vec<u32>,
}

impl Theorem1Branch {
    fn new(label: String, lo: ExactRational, hi: ExactRational, formulas: Vec<Formula>) -> Self {
        let mut ms: Vec<u32> = formulas.iter().filter_map(|f| f.m()).collect();
        ms.sort_unstable();
        ms.dedup();
        Theorem1Branch {
            label,
            lo,
            hi,
            formulas,
            ms,
        }
    }

    pub fn value(&self, n: u32, alpha: &ExactRational) -> Result<ExactRational> {
        let mut best: Option<ExactRational> = None;
        for f in &self.formulas {
            let v = f.eval(n, alpha)?;
            best = Some(match best {
                None => v,
                Some(b) => b.max(v),
            });
        }
        Ok(best.expect("at least one formula"))
    }

    /// Points strictly inside the interval where the active formula switches.
    pub fn internal_breakpoints(&self, n: u32) -> Result<Vec<ExactRational>> {
        let mut out = Vec::new();
        for i in 0..self.formulas.len() {
            for j in i + 1..self.formulas.len() {
                let (a, b) = (self.formulas[i].affine(n)?, self.formulas[j].affine(n)?);
                if let Some(x) = a.crossing(&b) {
                    if self.lo < x && x < self.hi {
                        out.push(x);
                    }
                }
            }
        }
        out.sort();
        out.dedup();
        Ok(out)
    }
}

fn beta_m(n: u32, m: u32) -> Result<ExactRational> {
    beta1(&ProblemDims::new(n, m)?)
}

/// The intervals of the explicit description for dimension `n`, ascending.
pub fn theorem1_regions(n: u32) -> Result<Vec<Theorem1Branch>> {
    ProblemDims::new(n, 0)?;
    let ni = n as i64;
    let half_n = rat(ni, 2);
    let mm0 = m0(n);
    let mm1 = m1(n);
    let mut regions = Vec::new();
    if n <= 3 {
        regions.push(Theorem1Branch::new(
            "n in {2,3}".into(),
            half_n,
            q(ni),
            vec![Formula::S3(0)],
        ));
        return Ok(regions);
    }
    let stairs = |regions: &mut Vec<Theorem1Branch>| {
        for m in (1..=mm0).rev() {
            let mi = m as i64;
            regions.push(Theorem1Branch::new(
                format!("[n-{m}, n-{m}+1]"),
                q(ni - mi),
                q(ni - mi + 1),
                vec![Formula::S3(m - 1), Formula::S4(m)],
            ));
        }
    };
    let low_top = |regions: &mut Vec<Theorem1Branch>| -> Result<()> {
        let b = beta_m(n, mm0 + 1)?;
        regions.push(Theorem1Branch::new(
            format!("[beta_{}, n-m0]", mm0 + 1),
            b,
            q(ni - mm0 as i64),
            vec![Formula::S3(mm0), Formula::S5(mm0 + 1)],
        ));
        Ok(())
    };
    if n <= 7 {
        regions.push(Theorem1Branch::new(
            "[n/2, n-m0]".into(),
            half_n,
            q(ni - mm0 as i64),
            vec![Formula::S3(mm0)],
        ));
        stairs(&mut regions);
    } else if matches!(n, 8 | 9 | 10 | 11 | 13) {
        regions.push(Theorem1Branch::new(
            format!("[n/2, beta_{}]", mm0 + 1),
            half_n,
            beta_m(n, mm0 + 1)?,
            vec![Formula::S3(mm0 + 1)],
        ));
        low_top(&mut regions)?;
        stairs(&mut regions);
    } else {
        if n % 2 == 1 {
            regions.push(Theorem1Branch::new(
                format!("[n/2, beta_{mm1}]"),
                half_n,
                beta_m(n, mm1)?,
                vec![Formula::S3(mm1)],
            ));
        }
        for m in (mm0 + 2..=mm1).rev() {
            regions.push(Theorem1Branch::new(
                format!("[beta_{m}, beta_{}]", m - 1),
                beta_m(n, m)?,
                beta_m(n, m - 1)?,
                vec![Formula::S3(m - 1), Formula::S5(m)],
            ));
        }
        low_top(&mut regions)?;
        stairs(&mut regions);
    }
    regions.retain(|r| r.lo < r.hi);
    Ok(regions)
}

/// The main-theorem interval containing `alpha` (left interval at shared ends).
pub fn theorem1_case(n: u32, alpha: &ExactRational) -> Result<Theorem1Branch> {
    let regions = theorem1_regions(n)?;
    let (lo, hi) = (rat(n as i64, 2), q(n as i64));
    if *alpha < lo || *alpha > hi {
        return Err(ExponentError::OutOfRange {
            what: "alpha",
            value: alpha.clone(),
            lo,
            hi,
        });
    }
    regions
        .into_iter()
        .find(|r| r.lo <= *alpha && *alpha <= r.hi)
        .ok_or_else(|| ExponentError::Malformed(format!("no region covers {alpha} for n={n}")))
}

/// Evaluates `(n - alpha + 1)/2 - kappa_i(m+1; alpha, n+1)` from the
/// `kappa` dictionary; it must agree with `s_i`.
pub fn kappa_cross_check(i: u8, dims: &ProblemDims, alpha: &ExactRational) -> Result<ExactRational> {
    let d = q(dims.ni() + 1);
    let j = q(dims.mi() + 1);
    let kappa = match i {
        3 => {
            let den = &(&d - &j) + 1;
            if den.is_zero() {
                return Err(ExponentError::DegenerateDenominator("kappa3"));
            }
            &(&(&d - &(&j / 2)) - alpha) / &den
        }
        4 => {
            let den = &(&(&d - &j) + 1) * 2;
            if den.is_zero() {
                return Err(ExponentError::DegenerateDenominator("kappa4"));
            }
            &(&d - alpha) / &den
        }
        5 => {
            let den = &(&(&d - &j) - 1) * 2;
            if den.is_zero() {
                return Err(ExponentError::DegenerateDenominator("kappa5"));
            }
            &(&(&d - alpha) - 1) / &den
        }
        _ => return Err(ExponentError::Malformed(format!("kappa index {i}"))),
    };
    Ok(&(&(&q(dims.ni()) - alpha) + 1) / 2 - kappa)
}

/// One row of a sampled curve.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CurveSample {
    pub alpha: ExactRational,
    pub s: ExactRational,
    pub branch: String,
    pub winners: Vec<u32>,
}

/// Every breakpoint of the explicit description of `s` for dimension `n`,
/// including the switches inside two-formula intervals.
pub fn theorem1_breakpoints(n: u32) -> Result<Vec<ExactRational>> {
    let mut pts = Vec::new();
    for r in theorem1_regions(n)? {
        pts.push(r.lo.clone());
        pts.push(r.hi.clone());
        pts.extend(r.internal_breakpoints(n)?);
    }
    pts.sort();
    pts.dedup();
    Ok(pts)
}

/// Samples `s` on `[lo, hi]` with spacing `step`, plus every breakpoint.
pub fn emit_curve(
    n: u32,
    lo: &ExactRational,
    hi: &ExactRational,
    step: &ExactRational,
) -> Result<Vec<CurveSample>> {
    if !step.is_positive() {
        return Err(ExponentError::Malformed("step must be positive".into()));
    }
    let (dlo, dhi) = (rat(n as i64, 2), q(n as i64));
    if *lo < dlo || *hi > dhi || lo > hi {
        return Err(ExponentError::OutOfRange {
            what: "alpha range",
            value: lo.clone(),
            lo: dlo,
            hi: dhi,
        });
    }
    let mut alphas = Vec::new();
    let mut a = lo.clone();
    while a <= *hi {
        alphas.push(a.clone());
        a = &a + step;
    }
    alphas.push(hi.clone());
    alphas.extend(
        theorem1_breakpoints(n)?
            .into_iter()
            .filter(|b| lo <= b && b <= hi),
    );
    alphas.sort();
    alphas.dedup();
    alphas
        .into_iter()
        .map(|alpha| {
            let g = s_of_alpha(n, &alpha)?;
            let branch = theorem1_case(n, &alpha)?;
            let active = active_formula(n, &branch, &alpha)?;
            Ok(CurveSample {
                s: g.value,
                branch: active.to_string(),
                winners: g.winners,
                alpha,
            })
        })
        .collect()
}

/// Formula attaining the region maximum at `alpha` (first one on ties).
pub fn active_formula(n: u32, region: &Theorem1Branch, alpha: &ExactRational) -> Result<Formula> {
    let target = region.value(n, alpha)?;
    for f in &region.formulas {
        if f.eval(n, alpha)? == target {
            return Ok(*f);
        }
    }
    unreachable!("maximum is attained")
}
