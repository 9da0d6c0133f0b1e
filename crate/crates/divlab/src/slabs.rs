//! Slab geometry of the approximants `F_R`: enumeration, membership, box
//! counting, the measure of the unit cell `Ω_R` and local ubiquity.

use std::collections::HashMap;

use num_integer::Integer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::evolution::{CounterexampleScale, EvolutionError};
use crate::exponents::{
    alpha_dims, degenerate_dim, dilation_from_params, DilationVector, ExponentError, ParamVector,
    ProblemDims,
};
use crate::fit::linear_fit;
use crate::rational::ExactRational;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SlabError {
    #[error("degenerate scale: {0}")]
    DegenerateScale(String),
    #[error("cost guard: {0}")]
    CostGuard(String),
    #[error("invalid window: {0}")]
    BadWindow(String),
    #[error("infeasible dilation: {0}")]
    InfeasibleDilation(String),
    #[error("ball too small: radius {radius} below 10 x cell period {period}")]
    BallTooSmall { radius: f64, period: f64 },
    #[error("insufficient data: {0}")]
    Insufficient(String),
    #[error(transparent)]
    Exponent(#[from] ExponentError),
    #[error(transparent)]
    Evolution(#[from] EvolutionError),
}

pub type Result<T> = std::result::Result<T, SlabError>;

/// Default Monte Carlo seed.
pub const DEFAULT_SEED: u64 = 0x5EED;
/// Default Monte Carlo sample count.
pub const DEFAULT_SAMPLES: usize = 1_000_000;
const SLAB_GUARD: f64 = 1e7;
const BOX_GUARD: f64 = 1e8;
const MC_BLOCK: usize = 1 << 16;

/// Axis-aligned box `[lo, hi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Window {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(SlabError::BadWindow("dimension mismatch".into()));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(SlabError::BadWindow("empty side".into()));
        }
        Ok(Window { lo, hi })
    }

    pub fn unit_cube(n: usize) -> Self {
        Window {
            lo: vec![0.0; n],
            hi: vec![1.0; n],
        }
    }

    /// `[1/10, 1] x [0, 1]^{n-1}`, away from the `x1 = 0` hyperplane.
    pub fn annulus_adjacent(n: usize) -> Self {
        let mut w = Self::unit_cube(n);
        w.lo[0] = 0.1;
        w
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    fn inside_unit_box(&self) -> bool {
        self.lo.iter().all(|&a| a >= -1.0) && self.hi.iter().all(|&b| b <= 1.0)
    }
}

/// `(p1, p', p'')` together with the modulus `q`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SlabIndex {
    pub q: u64,
    pub p1: i64,
    pub p_prime: Vec<i64>,
    pub p_dprime: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Slab {
    pub index: SlabIndex,
    pub center: Vec<f64>,
    pub half_widths: Vec<f64>,
}

impl Slab {
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(&self.center)
            .zip(&self.half_widths)
            .all(|((x, c), h)| (x - c).abs() <= *h)
    }

    pub fn meets(&self, w: &Window) -> bool {
        self.center
            .iter()
            .zip(&self.half_widths)
            .enumerate()
            .all(|(i, (c, h))| c + h >= w.lo[i] && c - h < w.hi[i])
    }
}

/// A slab with the same centre and half-widths `R^{-a}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DilatedSlab {
    pub index: SlabIndex,
    pub center: Vec<f64>,
    pub half_widths: Vec<f64>,
}

impl DilatedSlab {
    pub fn new(slab: &Slab, scale: &CounterexampleScale, a: &DilationVector) -> Self {
        let r = scale.r();
        let (k1, k2) = (scale.k1(), scale.k2());
        let mut hw = vec![r.powf(-a.a1.to_f64())];
        hw.extend(std::iter::repeat_n(r.powf(-a.a2.to_f64()), k1));
        hw.extend(std::iter::repeat_n(r.powf(-a.a3.to_f64()), k2));
        DilatedSlab {
            index: slab.index.clone(),
            center: slab.center.clone(),
            half_widths: hw,
        }
    }

    pub fn contains_slab(&self, slab: &Slab) -> bool {
        self.half_widths
            .iter()
            .zip(&slab.half_widths)
            .all(|(a, b)| a >= b)
    }
}

/// Slab geometry of one scale: centre spacings and half-widths per axis.
struct Geometry {
    r: f64,
    d1: f64,
    d2: f64,
    k1: usize,
    k2: usize,
    moduli: Vec<u64>,
    h1: f64,
    hp: f64,
    hpp: f64,
}

impl Geometry {
    fn new(scale: &CounterexampleScale) -> Self {
        let r = scale.r();
        Geometry {
            r,
            d1: scale.d1(),
            d2: scale.d2(),
            k1: scale.k1(),
            k2: scale.k2(),
            moduli: scale.moduli(),
            h1: r.powf(-0.5),
            hp: 1.0 / r,
            hpp: r.powf(-0.5),
        }
    }

    fn x1_spacing(&self, q: u64) -> f64 {
        self.r / (self.d1 * self.d1 * q as f64)
    }

    fn xp_spacing(&self, q: u64) -> f64 {
        1.0 / (self.d1 * q as f64)
    }

    fn xpp_spacing(&self) -> f64 {
        1.0 / self.d2
    }

    fn half_widths(&self) -> Vec<f64> {
        let mut hw = vec![self.h1];
        hw.extend(std::iter::repeat_n(self.hp, self.k1));
        hw.extend(std::iter::repeat_n(self.hpp, self.k2));
        hw
    }
}

/// Integers `p` with `|p·spacing - [lo, hi)| <= h`.
fn index_range(spacing: f64, h: f64, lo: f64, hi: f64) -> (i64, i64) {
    (
        ((lo - h) / spacing).ceil() as i64,
        ((hi + h) / spacing).floor() as i64,
    )
}

fn cartesian(ranges: &[(i64, i64)]) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for &(a, b) in ranges {
        let mut next = Vec::with_capacity(out.len() * (b - a + 1).max(0) as usize);
        for prefix in &out {
            for p in a..=b {
                let mut v = prefix.clone();
                v.push(p);
                next.push(v);
            }
        }
        out = next;
    }
    out
}

/// All slabs meeting `window`, ordered by `q`, then `p` lexicographically.
pub fn enumerate_slabs(scale: &CounterexampleScale, window: &Window) -> Result<Vec<Slab>> {
    let n = scale.dims().n() as usize;
    if window.dim() != n || !window.inside_unit_box() {
        return Err(SlabError::BadWindow(format!("need a box in [-1,1]^{n}")));
    }
    if scale.q_scale() < 3.0 {
        return Err(SlabError::DegenerateScale(format!(
            "Q = {} < 3",
            scale.q_scale()
        )));
    }
    let g = Geometry::new(scale);
    let hw = g.half_widths();
    let span = |sp: f64, h: f64, i: usize| {
        let (a, b) = index_range(sp, h, window.lo[i], window.hi[i]);
        (a, b, (b - a + 1).max(0) as f64)
    };
    let mut expected = 0.0;
    for &q in &g.moduli {
        let mut c = span(g.x1_spacing(q), g.h1, 0).2;
        for i in 0..g.k1 {
            c *= span(g.xp_spacing(q), g.hp, 1 + i).2;
        }
        for i in 0..g.k2 {
            c *= span(g.xpp_spacing(), g.hpp, 1 + g.k1 + i).2;
        }
        expected += c;
    }
    if expected > SLAB_GUARD {
        return Err(SlabError::CostGuard(format!("~{expected:.3e} slabs")));
    }
    let pp_ranges: Vec<(i64, i64)> = (0..g.k2)
        .map(|i| {
            let (a, b, _) = span(g.xpp_spacing(), g.hpp, 1 + g.k1 + i);
            (a, b)
        })
        .collect();
    let pps = cartesian(&pp_ranges);
    let mut out = Vec::new();
    for &q in &g.moduli {
        let (a1, b1, _) = span(g.x1_spacing(q), g.h1, 0);
        let p_ranges: Vec<(i64, i64)> = (0..g.k1)
            .map(|i| {
                let (a, b, _) = span(g.xp_spacing(q), g.hp, 1 + i);
                (a, b)
            })
            .collect();
        let ps = cartesian(&p_ranges);
        for p1 in a1..=b1 {
            if (p1.rem_euclid(q as i64) as u64).gcd(&q) != 1 {
                continue;
            }
            for p in &ps {
                for pp in &pps {
                    let mut center = vec![p1 as f64 * g.x1_spacing(q)];
                    center.extend(p.iter().map(|&v| v as f64 * g.xp_spacing(q)));
                    center.extend(pp.iter().map(|&v| v as f64 * g.xpp_spacing()));
                    let slab = Slab {
                        index: SlabIndex {
                            q,
                            p1,
                            p_prime: p.clone(),
                            p_dprime: pp.clone(),
                        },
                        center,
                        half_widths: hw.clone(),
                    };
                    if slab.meets(window) {
                        out.push(slab);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Index of a slab containing `x`, found by rounding each coordinate to the
/// nearest admissible centre for every modulus.
pub fn membership(x: &[f64], scale: &CounterexampleScale) -> Option<SlabIndex> {
    let g = Geometry::new(scale);
    if x.len() != 1 + g.k1 + g.k2 {
        return None;
    }
    let mut p_dprime = Vec::with_capacity(g.k2);
    for &v in &x[1 + g.k1..] {
        let p = (v * g.d2).round();
        if (v - p / g.d2).abs() > g.hpp {
            return None;
        }
        p_dprime.push(p as i64);
    }
    'q: for &q in &g.moduli {
        let s1 = g.x1_spacing(q);
        let p1 = (x[0] / s1).round();
        if (x[0] - p1 * s1).abs() > g.h1 || ((p1 as i64).rem_euclid(q as i64) as u64).gcd(&q) != 1
        {
            continue;
        }
        let sp = g.xp_spacing(q);
        let mut p_prime = Vec::with_capacity(g.k1);
        for &v in &x[1..1 + g.k1] {
            let p = (v / sp).round();
            if (v - p * sp).abs() > g.hp {
                continue 'q;
            }
            p_prime.push(p as i64);
        }
        return Some(SlabIndex {
            q,
            p1: p1 as i64,
            p_prime,
            p_dprime: p_dprime.clone(),
        });
    }
    None
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowBoxCount {
    pub window: Window,
    pub delta: f64,
    pub count: u128,
}

/// Boxes `[iδ, (i+1)δ)` meeting the closed interval `[a, b]` clipped to the
/// window side `[lo, hi)`, relative to the first window box.
fn box_span(a: f64, b: f64, lo: f64, hi: f64, delta: f64) -> Option<(usize, usize)> {
    let base = (lo / delta).floor() as i64;
    let last = (hi / delta).ceil() as i64 - 1;
    let a = a.max(lo);
    let b = b.min(hi);
    if a > b {
        return None;
    }
    let i0 = (a / delta).floor() as i64;
    let i1 = ((b / delta).floor() as i64).min(last);
    if i1 < i0 {
        return None;
    }
    Some(((i0 - base) as usize, (i1 - base) as usize))
}

fn axis_boxes(lo: f64, hi: f64, delta: f64) -> usize {
    ((hi / delta).ceil() as i64 - (lo / delta).floor() as i64) as usize
}

#[derive(Clone)]
struct Bits(Vec<u64>);

impl Bits {
    fn new(len: usize) -> Self {
        Bits(vec![0; len.div_ceil(64)])
    }

    fn set_range(&mut self, a: usize, b: usize) {
        for i in a..=b {
            self.0[i / 64] |= 1 << (i % 64);
        }
    }

    fn count(&self) -> u64 {
        self.0.iter().map(|w| w.count_ones() as u64).sum()
    }
}

/// Boxes on one axis meeting a periodic family of closed intervals
/// `[p·spacing - h, p·spacing + h]`.
fn periodic_bits(spacing: f64, h: f64, lo: f64, hi: f64, delta: f64) -> Bits {
    let mut bits = Bits::new(axis_boxes(lo, hi, delta));
    let (a, b) = index_range(spacing, h, lo, hi);
    for p in a..=b {
        let c = p as f64 * spacing;
        if let Some((i, j)) = box_span(c - h, c + h, lo, hi, delta) {
            bits.set_range(i, j);
        }
    }
    bits
}

fn overflow() -> SlabError {
    SlabError::CostGuard("box count exceeds 128-bit range".into())
}

/// `|∪_{q∈S} Π_j T_{q,j}|` by inclusion-exclusion over `S`.
fn union_of_products(sets: &[&Vec<Bits>]) -> Result<u128> {
    if sets.len() == 1 {
        return sets[0]
            .iter()
            .try_fold(1u128, |acc, b| acc.checked_mul(b.count() as u128))
            .ok_or_else(overflow);
    }
    if sets[0].len() == 1 {
        let mut acc = sets[0][0].clone();
        for s in &sets[1..] {
            for (w, v) in acc.0.iter_mut().zip(&s[0].0) {
                *w |= v;
            }
        }
        return Ok(acc.count() as u128);
    }
    if sets.len() > 16 {
        return Err(SlabError::CostGuard(format!(
            "{} overlapping moduli in one box column",
            sets.len()
        )));
    }
    let k = sets[0].len();
    let mut total: i128 = 0;
    for mask in 1u32..(1 << sets.len()) {
        let members: Vec<usize> = (0..sets.len()).filter(|i| mask >> i & 1 == 1).collect();
        let mut prod: i128 = 1;
        for j in 0..k {
            let mut inter = sets[members[0]][j].clone();
            for &i in &members[1..] {
                for (w, v) in inter.0.iter_mut().zip(&sets[i][j].0) {
                    *w &= v;
                }
            }
            prod = prod.checked_mul(inter.count() as i128).ok_or_else(overflow)?;
            if prod == 0 {
                break;
            }
        }
        total = if members.len() % 2 == 1 {
            total.checked_add(prod)
        } else {
            total.checked_sub(prod)
        }
        .ok_or_else(overflow)?;
    }
    Ok(total as u128)
}

/// Number of `δ`-grid boxes (anchored at the origin) meeting `F_R ∩ window`.
///
/// `F_R = ∪_q A_q × B_q^{n-m-1} × C^m`, so the count factors into the `x''`
/// part times the number of `(x1, x')` boxes met by `∪_q A_q × B_q^{n-m-1}`.
pub fn box_count(scale: &CounterexampleScale, window: &Window, delta: f64) -> Result<WindowBoxCount> {
    let g = Geometry::new(scale);
    let n = 1 + g.k1 + g.k2;
    if window.dim() != n {
        return Err(SlabError::BadWindow(format!("need dimension {n}")));
    }
    if !(delta > 0.0) {
        return Err(SlabError::BadWindow(format!("delta = {delta}")));
    }
    if g.moduli.is_empty() {
        return Err(SlabError::DegenerateScale(format!(
            "no odd q in [Q/2, Q) for Q = {}",
            scale.q_scale()
        )));
    }
    for i in 0..n {
        if axis_boxes(window.lo[i], window.hi[i], delta) as f64 > BOX_GUARD {
            return Err(SlabError::CostGuard(format!("axis {i} has too many boxes")));
        }
    }
    let mut count: u128 = 1;
    for i in 0..g.k2 {
        let ax = 1 + g.k1 + i;
        let bits = periodic_bits(g.xpp_spacing(), g.hpp, window.lo[ax], window.hi[ax], delta);
        count = count.checked_mul(bits.count() as u128).ok_or_else(overflow)?;
    }
    if count == 0 {
        return Ok(WindowBoxCount {
            window: window.clone(),
            delta,
            count,
        });
    }

    let tq: Vec<Vec<Bits>> = g
        .moduli
        .iter()
        .map(|&q| {
            (0..g.k1)
                .map(|j| {
                    periodic_bits(g.xp_spacing(q), g.hp, window.lo[1 + j], window.hi[1 + j], delta)
                })
                .collect()
        })
        .collect();

    // (x1 box, modulus index) incidences.
    let mut pairs: Vec<(usize, u32)> = Vec::new();
    for (qi, &q) in g.moduli.iter().enumerate() {
        let s1 = g.x1_spacing(q);
        let (a, b) = index_range(s1, g.h1, window.lo[0], window.hi[0]);
        for p1 in a..=b {
            if (p1.rem_euclid(q as i64) as u64).gcd(&q) != 1 {
                continue;
            }
            let c = p1 as f64 * s1;
            if let Some((i, j)) = box_span(c - g.h1, c + g.h1, window.lo[0], window.hi[0], delta) {
                for b in i..=j {
                    pairs.push((b, qi as u32));
                }
            }
            if pairs.len() as f64 > BOX_GUARD {
                return Err(SlabError::CostGuard("too many x1 incidences".into()));
            }
        }
    }
    pairs.sort_unstable();
    pairs.dedup();

    let mut xcount: u128 = 0;
    let mut cache: Option<(Vec<u32>, u128)> = None;
    let mut i = 0;
    while i < pairs.len() {
        let b = pairs[i].0;
        let mut group = Vec::new();
        while i < pairs.len() && pairs[i].0 == b {
            group.push(pairs[i].1);
            i += 1;
        }
        let v = match &cache {
            Some((s, v)) if *s == group => *v,
            _ => {
                let v = if g.k1 == 0 {
                    1
                } else {
                    let sets: Vec<&Vec<Bits>> = group.iter().map(|&qi| &tq[qi as usize]).collect();
                    union_of_products(&sets)?
                };
                cache = Some((group, v));
                v
            }
        };
        xcount = xcount.checked_add(v).ok_or_else(overflow)?;
    }
    Ok(WindowBoxCount {
        window: window.clone(),
        delta,
        count: count.checked_mul(xcount).ok_or_else(overflow)?,
    })
}

/// Covering scale used by [`dim_fit`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeltaRule {
    /// `δ = R^{-1}`, compared against `alpha1`.
    RInverse,
    /// `δ = R^{-1/2}`, compared against `alpha2`.
    RInverseHalf,
}

impl DeltaRule {
    pub fn delta(&self, r: f64) -> f64 {
        match self {
            DeltaRule::RInverse => 1.0 / r,
            DeltaRule::RInverseHalf => r.powf(-0.5),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DimFit {
    pub fitted: f64,
    /// Standard error of the fitted slope.
    pub stderr: f64,
    pub predicted: f64,
    /// `(R, δ, count)` per scale.
    pub samples: Vec<(f64, f64, u128)>,
}

impl DimFit {
    pub fn deviation(&self) -> f64 {
        (self.fitted - self.predicted).abs()
    }
}

fn slope_with_stderr(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let (slope, intercept) = linear_fit(xs, ys)?;
    let n = xs.len() as f64;
    if xs.len() < 3 {
        return Some((slope, f64::NAN));
    }
    let mx = xs.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sse: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    Some((slope, (sse / (n - 2.0) / sxx).sqrt()))
}

/// Slope of `log count` against `log(1/δ)` across the scales `rs`.
pub fn dim_fit(
    dims: ProblemDims,
    u: &ParamVector,
    rs: &[f64],
    rule: DeltaRule,
    window: &Window,
) -> Result<DimFit> {
    if rs.len() < 4 {
        return Err(SlabError::Insufficient(format!(
            "{} scales, need at least 4",
            rs.len()
        )));
    }
    let (a1, a2) = alpha_dims(&dims, &u.u2, &u.u3)?;
    let predicted = match rule {
        DeltaRule::RInverse => a1.to_f64(),
        DeltaRule::RInverseHalf => a2.to_f64(),
    };
    let mut samples = Vec::with_capacity(rs.len());
    for &r in rs {
        let scale = CounterexampleScale::new(dims, r, u.clone())?;
        let delta = rule.delta(r);
        let c = box_count(&scale, window, delta)?;
        samples.push((r, delta, c.count));
    }
    let xs: Vec<f64> = samples.iter().map(|s| (1.0 / s.1).ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|s| (s.2 as f64).ln()).collect();
    let (fitted, stderr) = slope_with_stderr(&xs, &ys)
        .ok_or_else(|| SlabError::Insufficient("degenerate fit".into()))?;
    Ok(DimFit {
        fitted,
        stderr,
        predicted,
        samples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OmegaMethod {
    /// Exact interval-union sweep; 1-D and 2-D only.
    Sweep,
    /// Fixed-seed Monte Carlo on the torus.
    MonteCarlo { seed: u64, samples: usize },
}

impl OmegaMethod {
    pub fn monte_carlo() -> Self {
        OmegaMethod::MonteCarlo {
            seed: DEFAULT_SEED,
            samples: DEFAULT_SAMPLES,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureEstimate {
    pub value: f64,
    /// Zero for the exact sweep.
    pub std_error: f64,
}

/// Nearest numerator `p mod q` to `x` and the distance `|x - p/q|`.
fn nearest(x: f64, q: u64) -> (i64, f64) {
    let p = (x * q as f64).round();
    let d = (x - p / q as f64).abs();
    ((p as i64).rem_euclid(q as i64), d)
}

/// The unit cell `Ω ⊂ [0,1)^N` as a union over odd `q` in `moduli` of
/// `B(p1/q, r1) × B(p'/q, r2)^{N-1}` with `gcd(p1, q) = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitCell {
    pub moduli: Vec<u64>,
    pub r1: f64,
    pub r2: f64,
    pub dim: usize,
}

impl UnitCell {
    /// The cell of Lemma-type `(Q, t1, t2)`: radii `Q^{-t1}` and `Q^{-t2}`.
    pub fn from_exponents(q_scale: f64, t1: f64, t2: f64, dim: usize) -> Self {
        let lo = (q_scale / 2.0).ceil() as u64;
        let hi = q_scale.ceil() as u64;
        UnitCell {
            moduli: (lo..hi)
                .filter(|q| q % 2 == 1 && (*q as f64) < q_scale)
                .collect(),
            r1: q_scale.powf(-t1),
            r2: q_scale.powf(-t2),
            dim,
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.moduli.iter().any(|&q| {
            let qf = q as f64;
            let lo = ((x[0] - self.r1) * qf).ceil() as i64;
            let hi = ((x[0] + self.r1) * qf).floor() as i64;
            (lo..=hi).any(|p| (p.rem_euclid(q as i64) as u64).gcd(&q) == 1)
                && x[1..].iter().all(|&v| nearest(v, q).1 <= self.r2)
        })
    }

    /// Measure of `Ω` on the torus.
    pub fn measure(&self, method: OmegaMethod) -> Result<MeasureEstimate> {
        if self.moduli.is_empty() {
            return Ok(MeasureEstimate {
                value: 0.0,
                std_error: 0.0,
            });
        }
        match method {
            OmegaMethod::Sweep => match self.dim {
                1 => Ok(MeasureEstimate {
                    value: union_on_circle(self.x1_intervals(None)),
                    std_error: 0.0,
                }),
                2 => self.sweep_2d(),
                d => Err(SlabError::CostGuard(format!("sweep needs N <= 2, got {d}"))),
            },
            OmegaMethod::MonteCarlo { seed, samples } => Ok(self.monte_carlo(seed, samples)),
        }
    }

    fn x1_intervals(&self, only: Option<u64>) -> Vec<(f64, f64, u64)> {
        let mut out = Vec::new();
        for &q in &self.moduli {
            if only.is_some_and(|o| o != q) {
                continue;
            }
            for p in 0..q {
                if p.gcd(&q) == 1 {
                    let c = p as f64 / q as f64;
                    out.push((c - self.r1, c + self.r1, q));
                }
            }
        }
        out
    }

    fn sweep_2d(&self) -> Result<MeasureEstimate> {
        let total: u64 = self.moduli.iter().map(|q| q - 1).sum();
        if total as f64 > SLAB_GUARD {
            return Err(SlabError::CostGuard(format!("{total} intervals")));
        }
        // Fold every interval onto the circle and record (position, +-q) events.
        let mut events: Vec<(f64, i64)> = Vec::new();
        for (a, b, q) in self.x1_intervals(None) {
            if b - a >= 1.0 {
                events.push((0.0, q as i64));
                events.push((1.0, -(q as i64)));
                continue;
            }
            let a = a.rem_euclid(1.0);
            let b = a + (b - a).min(1.0);
            if b <= 1.0 {
                events.push((a, q as i64));
                events.push((b, -(q as i64)));
            } else {
                events.push((a, q as i64));
                events.push((1.0, -(q as i64)));
                events.push((0.0, q as i64));
                events.push((b - 1.0, -(q as i64)));
            }
        }
        events.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        let mut active: HashMap<u64, u32> = HashMap::new();
        let mut cache: HashMap<Vec<u64>, f64> = HashMap::new();
        let mut value = 0.0;
        let mut prev = 0.0;
        for (x, ev) in events {
            if x > prev && !active.is_empty() {
                let mut set: Vec<u64> = active.keys().copied().collect();
                set.sort_unstable();
                let fiber = match cache.get(&set) {
                    Some(v) => *v,
                    None => {
                        let v = self.fiber_measure(&set);
                        cache.insert(set, v);
                        v
                    }
                };
                value += (x - prev) * fiber;
            }
            prev = x;
            let q = ev.unsigned_abs();
            if ev > 0 {
                *active.entry(q).or_insert(0) += 1;
            } else if let Some(c) = active.get_mut(&q) {
                *c -= 1;
                if *c == 0 {
                    active.remove(&q);
                }
            }
        }
        Ok(MeasureEstimate {
            value,
            std_error: 0.0,
        })
    }

    /// Measure of `∪_{q∈set} ∪_p B(p/q, r2)` on the circle.
    fn fiber_measure(&self, set: &[u64]) -> f64 {
        if set.len() == 1 {
            return (2.0 * self.r2 * set[0] as f64).min(1.0);
        }
        let mut iv = Vec::new();
        for &q in set {
            for p in 0..q {
                let c = p as f64 / q as f64;
                iv.push((c - self.r2, c + self.r2, q));
            }
        }
        union_on_circle(iv)
    }

    fn monte_carlo(&self, seed: u64, samples: usize) -> MeasureEstimate {
        let mut hits = 0usize;
        let blocks = samples.div_ceil(MC_BLOCK);
        let mut x = vec![0.0; self.dim];
        for b in 0..blocks {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(b as u64));
            let len = MC_BLOCK.min(samples - b * MC_BLOCK);
            for _ in 0..len {
                for v in x.iter_mut() {
                    *v = rng.gen::<f64>();
                }
                if self.contains(&x) {
                    hits += 1;
                }
            }
        }
        let p = hits as f64 / samples as f64;
        MeasureEstimate {
            value: p,
            std_error: (p * (1.0 - p) / samples as f64).sqrt(),
        }
    }
}

/// Measure of a union of intervals folded onto the unit circle.
fn union_on_circle(iv: Vec<(f64, f64, u64)>) -> f64 {
    let mut segs: Vec<(f64, f64)> = Vec::with_capacity(iv.len() + 4);
    for (a, b, _) in iv {
        if b - a >= 1.0 {
            return 1.0;
        }
        let a0 = a.rem_euclid(1.0);
        let b0 = a0 + (b - a);
        if b0 <= 1.0 {
            segs.push((a0, b0));
        } else {
            segs.push((a0, 1.0));
            segs.push((0.0, b0 - 1.0));
        }
    }
    segs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut total = 0.0;
    let mut cur: Option<(f64, f64)> = None;
    for (a, b) in segs {
        match cur {
            Some((c0, c1)) if a <= c1 => cur = Some((c0, c1.max(b))),
            Some((c0, c1)) => {
                total += c1 - c0;
                cur = Some((a, b));
            }
            None => cur = Some((a, b)),
        }
    }
    if let Some((c0, c1)) = cur {
        total += c1 - c0;
    }
    total.min(1.0)
}

/// Measure of `Ω_R^{a1,a2}`, the rescaled unit cell of the dilated slabs in
/// the `(x1, x')` variables.
pub fn omega_measure(
    dims: ProblemDims,
    r: f64,
    u: &ParamVector,
    a: &DilationVector,
    method: OmegaMethod,
) -> Result<MeasureEstimate> {
    let k = (dims.n() - dims.m() - 1) as i64;
    let lhs = &a.a1 + &(&a.a2 * k);
    let rhs = &(&u.u2 * (k + 2)) - 1;
    if a.a1 < u.u1 || (k > 0 && a.a2 < u.u2) || lhs != rhs {
        return Err(SlabError::InfeasibleDilation(format!(
            "a = ({}, {}) for u = ({}, {})",
            a.a1, a.a2, u.u1, u.u2
        )));
    }
    let scale = CounterexampleScale::new(dims, r, u.clone())?;
    let cell = omega_cell(&scale, a);
    if cell.moduli == [1] {
        // Single rectangle centred at the origin.
        let v = (2.0 * cell.r1).min(1.0) * (2.0 * cell.r2).min(1.0).powi(k as i32);
        return Ok(MeasureEstimate {
            value: v,
            std_error: 0.0,
        });
    }
    cell.measure(method)
}

/// `Ω_R^{a1,a2}` as a [`UnitCell`]: radii `D1²/R^{1+a1}` and `D1/R^{a2}`.
pub fn omega_cell(scale: &CounterexampleScale, a: &DilationVector) -> UnitCell {
    let r = scale.r();
    let d1 = scale.d1();
    UnitCell {
        moduli: scale.moduli(),
        r1: d1 * d1 / r.powf(1.0 + a.a1.to_f64()),
        r2: d1 / r.powf(a.a2.to_f64()),
        dim: scale.k1() + 1,
    }
}

/// A cube `center ± radius`, standing in for a ball of comparable measure.
#[derive(Debug, Clone, PartialEq)]
pub struct BallSpec {
    pub center: Vec<f64>,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UbiquityReport {
    pub ratio: f64,
    pub std_error: f64,
    pub dilation: DilationVector,
}

/// Membership in the dilated approximant `F_R^a`.
fn in_dilated(x: &[f64], g: &Geometry, h: &[f64; 3]) -> bool {
    for &v in &x[1 + g.k1..] {
        let s = g.xpp_spacing();
        if (v - (v / s).round() * s).abs() > h[2] {
            return false;
        }
    }
    g.moduli.iter().any(|&q| {
        let s1 = g.x1_spacing(q);
        let lo = ((x[0] - h[0]) / s1).ceil() as i64;
        let hi = ((x[0] + h[0]) / s1).floor() as i64;
        if hi < lo || !(lo..=hi).any(|p| (p.rem_euclid(q as i64) as u64).gcd(&q) == 1) {
            return false;
        }
        let sp = g.xp_spacing(q);
        x[1..1 + g.k1]
            .iter()
            .all(|&v| (v - (v / sp).round() * sp).abs() <= h[1])
    })
}

/// `|B ∩ F_R^a| / |B|` by Monte Carlo, with `a` from the dilation rule.
pub fn ubiquity_check(
    dims: ProblemDims,
    r: f64,
    u: &ParamVector,
    ball: &BallSpec,
    seed: u64,
    samples: usize,
) -> Result<UbiquityReport> {
    let scale = CounterexampleScale::new(dims, r, u.clone())?;
    let a = dilation_from_params(&dims, u)?;
    let g = Geometry::new(&scale);
    let n = 1 + g.k1 + g.k2;
    if ball.center.len() != n {
        return Err(SlabError::BadWindow(format!("ball needs dimension {n}")));
    }
    let mut period = r / (g.d1 * g.d1);
    if g.k1 > 0 {
        period = period.max(1.0 / g.d1);
    }
    if g.k2 > 0 {
        period = period.max(g.xpp_spacing());
    }
    if ball.radius < 10.0 * period {
        return Err(SlabError::BallTooSmall {
            radius: ball.radius,
            period,
        });
    }
    let h = [
        r.powf(-a.a1.to_f64()),
        r.powf(-a.a2.to_f64()),
        r.powf(-a.a3.to_f64()),
    ];
    let blocks = samples.div_ceil(MC_BLOCK);
    let mut hits = 0usize;
    let mut x = vec![0.0; n];
    for b in 0..blocks {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(b as u64));
        for _ in 0..MC_BLOCK.min(samples - b * MC_BLOCK) {
            for (v, c) in x.iter_mut().zip(&ball.center) {
                *v = c + ball.radius * (2.0 * rng.gen::<f64>() - 1.0);
            }
            if in_dilated(&x, &g, &h) {
                hits += 1;
            }
        }
    }
    let p = hits as f64 / samples as f64;
    Ok(UbiquityReport {
        ratio: p,
        std_error: (p * (1.0 - p) / samples as f64).sqrt(),
        dilation: a,
    })
}

/// Box count of the `m = n-1` family `[-1,0] × ∪_p B(p/D2, R^{-1/2})` at
/// `δ = R^{-1/2}` on `[-1,0] × [0,1]^{n-1}`.
pub fn degenerate_box_count(n: u32, u3: &ExactRational, r: f64) -> Result<u128> {
    if n < 2 {
        return Err(SlabError::BadWindow("n >= 2".into()));
    }
    let delta = r.powf(-0.5);
    let d2 = r.powf(u3.to_f64());
    let per_axis = periodic_bits(1.0 / d2, delta, 0.0, 1.0, delta).count() as u128;
    let x1 = axis_boxes(-1.0, 0.0, delta) as u128;
    per_axis
        .checked_pow(n - 1)
        .and_then(|v| v.checked_mul(x1))
        .ok_or_else(overflow)
}

/// Fitted box dimension of the `m = n-1` family against `1 + 2(n-1)u3`.
pub fn degenerate_dim_check(n: u32, u3: &ExactRational, rs: &[f64]) -> Result<DimFit> {
    if rs.len() < 4 {
        return Err(SlabError::Insufficient(format!(
            "{} scales, need at least 4",
            rs.len()
        )));
    }
    let mut samples = Vec::new();
    for &r in rs {
        samples.push((r, r.powf(-0.5), degenerate_box_count(n, u3, r)?));
    }
    let xs: Vec<f64> = samples.iter().map(|s| (1.0 / s.1).ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|s| (s.2 as f64).ln()).collect();
    let (fitted, stderr) = slope_with_stderr(&xs, &ys)
        .ok_or_else(|| SlabError::Insufficient("degenerate fit".into()))?;
    Ok(DimFit {
        fitted,
        stderr,
        predicted: degenerate_dim(n, u3).to_f64(),
        samples,
    })
}
