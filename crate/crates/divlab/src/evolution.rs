//! Finite-scale evaluation of the free Schrödinger evolution of the
//! counterexample datum `f_R = g(x1) h1(x') h2(x'')`.
//!
//! Convention: `e^{itΔ} f(x) = ∫ f̂(ξ) e(x·ξ + t|ξ|²) dξ` with `e(z) = exp(2πiz)`.
//! The three factors evolve independently:
//!
//! * `ĝ(ξ1) = w((ξ1 + R/2)/R^{1/2})`, a bump of width `R^{1/2}` at `-R/2`;
//! * `ĥ1(ξ') = Σ_ℓ ψ(ℓ/(R/D1)) w(ξ' - D1 ℓ)` (per coordinate);
//! * `ĥ2(ξ'') = Σ_{|ℓ| <= c_lat R^{1/2}/D2} w(ξ'' - D2 ℓ)` (per coordinate).
//!
//! With `ĝ` centred at `-R/2` the stationary point of the `g` factor is
//! `x1 = tR`, which is exactly the slab centre `R p1/(D1² q)` at time
//! `t = p1/(D1² q)`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use num_integer::Integer;

use crate::exponents::{check_params, s_from_params, ParamVector, ProblemDims};
use crate::fit::loglog_slope;
use crate::rational::ExactRational;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvolutionError {
    #[error("bump radius must lie in (0, 1/10], got {0}")]
    BadBump(f64),
    #[error("infeasible parameters for the datum: {0}")]
    Infeasible(String),
    #[error("degenerate scale: {0}")]
    DegenerateScale(String),
    #[error("quadrature did not converge ({0} nodes)")]
    NonConvergent(usize),
    #[error("cost guard: {0}")]
    CostGuard(String),
    #[error("invalid slab point: {0}")]
    BadPoint(String),
    #[error("insufficient data: {0}")]
    Insufficient(String),
}

pub type Result<T> = std::result::Result<T, EvolutionError>;

const TERM_GUARD: usize = 100_000_000;

fn e(z: f64) -> Complex64 {
    let f = z - z.floor();
    Complex64::from_polar(1.0, TAU * f)
}

fn frac(z: f64) -> f64 {
    z - z.floor()
}

/// Standard compactly supported profile `w(ξ) = exp(1 - 1/(1 - (ξ/c)²))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpSpec {
    c: f64,
    min_nodes: usize,
    tol: f64,
}

impl BumpSpec {
    pub fn new(c: f64) -> Result<Self> {
        if !(c > 0.0 && c <= 0.1) {
            return Err(EvolutionError::BadBump(c));
        }
        Ok(BumpSpec {
            c,
            min_nodes: 512,
            tol: 1e-8,
        })
    }

    /// Radius `1/10`, the default used for finite-scale checks.
    pub fn standard() -> Self {
        Self::new(0.1).expect("valid radius")
    }

    /// Sets the initial node count (at least 512) for the composite rule.
    pub fn with_min_nodes(mut self, n: usize) -> Self {
        self.min_nodes = n.max(512);
        self
    }

    /// Sets the tolerance of the node-doubling test, relative to `∫w`.
    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn min_nodes(&self) -> usize {
        self.min_nodes
    }

    pub fn eval(&self, x: f64) -> f64 {
        let y = x / self.c;
        if y.abs() >= 1.0 {
            0.0
        } else {
            (1.0 - 1.0 / (1.0 - y * y)).exp()
        }
    }

    /// Composite trapezoid nodes `(ξ_k, h w(ξ_k))` on `[-c, c]`. The profile
    /// vanishes to all orders at the ends, so the rule converges spectrally.
    fn nodes(&self, n: usize) -> Vec<(f64, f64)> {
        let h = 2.0 * self.c / n as f64;
        (1..n)
            .map(|k| {
                let z = -self.c + k as f64 * h;
                (z, h * self.eval(z))
            })
            .collect()
    }

    pub fn integral(&self) -> f64 {
        self.nodes(4096).iter().map(|(_, w)| w).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        let h = 2.0 * self.c / 4096.0;
        self.nodes(4096)
            .iter()
            .map(|(_, w)| w * w / h)
            .sum::<f64>()
            .sqrt()
    }

    /// Runs `f(nodes)` with doubling node counts until successive values
    /// differ by less than `tol * ∫w * scale`.
    fn converge<F>(&self, scale: f64, mut f: F) -> Result<Complex64>
    where
        F: FnMut(&[(f64, f64)]) -> Complex64,
    {
        let floor = self.tol * self.integral() * scale.max(f64::MIN_POSITIVE);
        let mut n = self.min_nodes;
        let mut prev = f(&self.nodes(n));
        while n < (1 << 20) {
            n *= 2;
            let cur = f(&self.nodes(n));
            if (cur - prev).norm() <= floor {
                return Ok(cur);
            }
            prev = cur;
        }
        Err(EvolutionError::NonConvergent(n))
    }

    /// `∫ w(η) e(aη + bη²) dη`.
    pub fn oscillatory(&self, a: f64, b: f64) -> Result<Complex64> {
        self.converge(1.0, |nodes| {
            nodes
                .iter()
                .map(|&(z, wz)| e(a * z + b * z * z) * wz)
                .sum()
        })
    }
}

/// A concrete realization of the construction at one scale `R`.
#[derive(Debug, Clone, PartialEq)]
pub struct CounterexampleScale {
    dims: ProblemDims,
    r: f64,
    u: ParamVector,
    d1: f64,
    d2: f64,
    q_scale: f64,
    q_is_one: bool,
    lattice_c: f64,
}

impl CounterexampleScale {
    /// Builds the scale with the default lattice cutoff radius `1`.
    pub fn new(dims: ProblemDims, r: f64, u: ParamVector) -> Result<Self> {
        Self::with_lattice_radius(dims, r, u, 1.0)
    }

    pub fn with_lattice_radius(
        dims: ProblemDims,
        r: f64,
        u: ParamVector,
        lattice_c: f64,
    ) -> Result<Self> {
        if !(r >= 2.0) {
            return Err(EvolutionError::DegenerateScale(format!("R = {r}")));
        }
        if !(lattice_c > 0.0) {
            return Err(EvolutionError::DegenerateScale(format!(
                "lattice radius {lattice_c}"
            )));
        }
        let rep = check_params(&dims, &u);
        if !rep.is_boundary_feasible() {
            return Err(EvolutionError::Infeasible(format!("{:?}", rep.violations)));
        }
        let one = ExactRational::one();
        let e1 = &(&one + &u.u1) - &u.u2;
        let eq = &(&(&u.u2 * 2) - &u.u1) - &one;
        let d1 = r.powf(e1.to_f64());
        let d2 = r.powf(u.u3.to_f64());
        let q_scale = r.powf(eq.to_f64());
        Ok(CounterexampleScale {
            dims,
            r,
            u,
            d1,
            d2,
            q_scale,
            q_is_one: eq.is_zero(),
            lattice_c,
        })
    }

    pub fn dims(&self) -> ProblemDims {
        self.dims
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn u(&self) -> &ParamVector {
        &self.u
    }

    pub fn d1(&self) -> f64 {
        self.d1
    }

    pub fn d2(&self) -> f64 {
        self.d2
    }

    pub fn q_scale(&self) -> f64 {
        self.q_scale
    }

    pub fn lattice_radius(&self) -> f64 {
        self.lattice_c
    }

    /// Number of `x'` coordinates, `n - m - 1`.
    pub fn k1(&self) -> usize {
        (self.dims.n() - self.dims.m() - 1) as usize
    }

    /// Number of `x''` coordinates, `m`.
    pub fn k2(&self) -> usize {
        self.dims.m() as usize
    }

    /// Odd moduli `q` with `Q/2 <= q < Q`, or `{1}` when `Q = 1` exactly.
    pub fn moduli(&self) -> Vec<u64> {
        if self.q_is_one {
            return vec![1];
        }
        let lo = (self.q_scale / 2.0).ceil() as u64;
        let hi = self.q_scale.ceil() as u64;
        (lo..hi)
            .filter(|q| q % 2 == 1 && (*q as f64) < self.q_scale)
            .collect()
    }

    /// Lattice extent `R/D1` of the `h1` frequencies.
    pub fn h1_extent(&self) -> f64 {
        self.r / self.d1
    }

    /// Largest `|ℓ''|` in the `h2` lattice.
    pub fn h2_max(&self) -> i64 {
        (self.lattice_c * self.r.sqrt() / self.d2).floor() as i64
    }

    fn psi(&self, y: f64) -> f64 {
        let z = y / self.lattice_c;
        if z.abs() >= 1.0 {
            0.0
        } else {
            (1.0 - 1.0 / (1.0 - z * z)).exp()
        }
    }

    /// `(ℓ, ψ(ℓ/(R/D1)))` over the support of `ψ`.
    fn h1_weights(&self) -> Result<(i64, Vec<f64>)> {
        let ext = self.h1_extent();
        let lmax = (self.lattice_c * ext).ceil() as i64;
        if (2 * lmax + 1) as usize > TERM_GUARD {
            return Err(EvolutionError::CostGuard(format!("{} h1 terms", 2 * lmax + 1)));
        }
        let w = (-lmax..=lmax).map(|l| self.psi(l as f64 / ext)).collect();
        Ok((-lmax, w))
    }

    /// `R^{s_m}` with `s_m` from the parameters.
    pub fn predicted_growth(&self) -> f64 {
        let s = s_from_params(&self.dims, &self.u.u2, &self.u.u3).to_f64();
        self.r.powf(s)
    }
}

/// Plancherel norms of the three factors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatumNorm {
    pub g: f64,
    pub h1: f64,
    pub h2: f64,
}

impl DatumNorm {
    pub fn total(&self) -> f64 {
        self.g * self.h1 * self.h2
    }
}

/// `‖f_R‖₂` through Plancherel; the translated bumps have disjoint supports.
pub fn datum_norm(scale: &CounterexampleScale, bump: &BumpSpec) -> Result<DatumNorm> {
    let wn = bump.l2_norm();
    let g = scale.r.powf(0.25) * wn;
    let h1 = if scale.k1() == 0 {
        1.0
    } else {
        let (_, w) = scale.h1_weights()?;
        let per: f64 = w.iter().map(|v| v * v).sum::<f64>().sqrt() * wn;
        per.powi(scale.k1() as i32)
    };
    let h2 = if scale.k2() == 0 {
        1.0
    } else {
        let count = (2 * scale.h2_max() + 1) as f64;
        (count.sqrt() * wn).powi(scale.k2() as i32)
    };
    Ok(DatumNorm { g, h1, h2 })
}

/// Value of the `g` factor at `(x1, t)`.
pub fn evolve_g(scale: &CounterexampleScale, x1: f64, t: f64, bump: &BumpSpec) -> Result<Complex64> {
    let r = scale.r;
    let a = r.sqrt() * (x1 - t * r);
    let integral = bump.oscillatory(a, t * r)?;
    let phase0 = frac(-x1 * r / 2.0) + frac(t * r * r / 4.0);
    Ok(e(phase0) * integral * r.sqrt())
}

/// Phase data for one coordinate of a lattice factor: term `ℓ` carries
/// `weight_ℓ e(phase_ℓ)` and the inner integral is evaluated at
/// `y_ℓ = x + 2 t D ℓ`.
struct LatticeCoordinate<'a> {
    first: i64,
    weights: &'a [f64],
    phases: Vec<f64>,
    x: f64,
    dy: f64,
    tau: f64,
}

fn lattice_sum(coord: &LatticeCoordinate<'_>, bump: &BumpSpec) -> Result<Complex64> {
    let coeffs: Vec<Complex64> = coord
        .weights
        .iter()
        .zip(&coord.phases)
        .map(|(&w, &p)| e(p) * w)
        .collect();
    let scale: f64 = coord.weights.iter().map(|w| w.abs()).sum();
    bump.converge(scale, |nodes| {
        let mut total = Complex64::new(0.0, 0.0);
        for &(z, wz) in nodes {
            // Σ_ℓ c_ℓ r^ℓ by Horner in r = e(z dy), then shift by r^{first}.
            let rot = e(frac(z * coord.dy));
            let mut acc = Complex64::new(0.0, 0.0);
            for c in coeffs.iter().rev() {
                acc = acc * rot + c;
            }
            let shift = e(frac(z * coord.dy * coord.first as f64));
            total += acc * shift * e(z * coord.x + coord.tau * z * z) * wz;
        }
        total
    })
}

/// `h1` factor at a general point: product over the `n-m-1` coordinates.
pub fn evolve_h1(
    scale: &CounterexampleScale,
    x_prime: &[f64],
    t: f64,
    bump: &BumpSpec,
) -> Result<Complex64> {
    if x_prime.len() != scale.k1() {
        return Err(EvolutionError::BadPoint(format!(
            "x' has {} coordinates, expected {}",
            x_prime.len(),
            scale.k1()
        )));
    }
    let (first, w) = scale.h1_weights()?;
    let d1 = scale.d1;
    let quad = frac(t * d1 * d1);
    let mut prod = Complex64::new(1.0, 0.0);
    for &x in x_prime {
        let a = frac(d1 * x);
        let phases = (0..w.len() as i64)
            .map(|i| {
                let l = (first + i) as f64;
                frac(a * l) + frac(quad * l * l)
            })
            .collect();
        let coord = LatticeCoordinate {
            first,
            weights: &w,
            phases,
            x,
            dy: 2.0 * t * d1,
            tau: t,
        };
        prod *= lattice_sum(&coord, bump)?;
    }
    Ok(prod)
}

fn h2_coordinate(
    scale: &CounterexampleScale,
    x: f64,
    lin_frac: f64,
    t: f64,
    bump: &BumpSpec,
    ones: &[f64],
) -> Result<Complex64> {
    let d2 = scale.d2;
    let kmax = scale.h2_max();
    let quad = frac(t * d2 * d2);
    let phases = (-kmax..=kmax)
        .map(|l| {
            let lf = l as f64;
            frac(lin_frac * lf) + frac(quad * lf * lf)
        })
        .collect();
    let coord = LatticeCoordinate {
        first: -kmax,
        weights: ones,
        phases,
        x,
        dy: 2.0 * t * d2,
        tau: t,
    };
    lattice_sum(&coord, bump)
}

/// `h2` factor at a general point: product over the `m` coordinates.
pub fn evolve_h2(
    scale: &CounterexampleScale,
    x_dprime: &[f64],
    t: f64,
    bump: &BumpSpec,
) -> Result<Complex64> {
    if x_dprime.len() != scale.k2() {
        return Err(EvolutionError::BadPoint(format!(
            "x'' has {} coordinates, expected {}",
            x_dprime.len(),
            scale.k2()
        )));
    }
    let kmax = scale.h2_max();
    if (2 * kmax + 1) as usize > TERM_GUARD {
        return Err(EvolutionError::CostGuard(format!("{} h2 terms", 2 * kmax + 1)));
    }
    let ones = vec![1.0; (2 * kmax + 1) as usize];
    let mut prod = Complex64::new(1.0, 0.0);
    for &x in x_dprime {
        prod *= h2_coordinate(scale, x, frac(scale.d2 * x), t, bump, &ones)?;
    }
    Ok(prod)
}

/// A point of the slab `E_R(p, q)` together with its time `t = p1/(D1² q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlabPoint {
    pub q: u64,
    pub p1: i64,
    pub p_prime: Vec<i64>,
    pub p_dprime: Vec<i64>,
    /// Displacement from the slab centre, one entry per coordinate.
    pub offset: Vec<f64>,
    pub x: Vec<f64>,
    pub t: f64,
}

impl SlabPoint {
    pub fn new(
        scale: &CounterexampleScale,
        q: u64,
        p1: i64,
        p_prime: Vec<i64>,
        p_dprime: Vec<i64>,
        offset: Vec<f64>,
    ) -> Result<Self> {
        let n = scale.dims.n() as usize;
        if p_prime.len() != scale.k1() || p_dprime.len() != scale.k2() || offset.len() != n {
            return Err(EvolutionError::BadPoint("coordinate counts".into()));
        }
        if q.is_multiple_of(2) || (p1.rem_euclid(q as i64) as u64).gcd(&q) != 1 {
            return Err(EvolutionError::BadPoint(format!("q={q}, p1={p1}")));
        }
        let r = scale.r;
        let (d1, d2) = (scale.d1, scale.d2);
        let qf = q as f64;
        let t = p1 as f64 / (d1 * d1 * qf);
        let half = r.powf(-0.5);
        let mut x = Vec::with_capacity(n);
        x.push(t * r + offset[0]);
        if offset[0].abs() > half {
            return Err(EvolutionError::BadPoint("x1 outside its slab".into()));
        }
        for (i, &p) in p_prime.iter().enumerate() {
            let o = offset[1 + i];
            if o.abs() > 1.0 / r {
                return Err(EvolutionError::BadPoint("x' outside its slab".into()));
            }
            x.push(p as f64 / (d1 * qf) + o);
        }
        for (i, &p) in p_dprime.iter().enumerate() {
            let o = offset[1 + scale.k1() + i];
            if o.abs() > half {
                return Err(EvolutionError::BadPoint("x'' outside its slab".into()));
            }
            x.push(p as f64 / d2 + o);
        }
        Ok(SlabPoint {
            q,
            p1,
            p_prime,
            p_dprime,
            offset,
            x,
            t,
        })
    }

    pub fn x1(&self) -> f64 {
        self.x[0]
    }
}

/// How to pick a representative slab point at a given scale.
#[derive(Debug, Clone, PartialEq)]
pub struct SlabSelector {
    /// Desired `x1`; the slab centre closest to it is used.
    pub target_x1: f64,
    /// Index `p'` used in every `x'` coordinate.
    pub p_prime: i64,
    /// Index `p''` used in every `x''` coordinate.
    pub p_dprime: i64,
    /// Relative offset inside the slab, in units of the half-widths.
    pub relative_offset: f64,
}

impl Default for SlabSelector {
    fn default() -> Self {
        SlabSelector {
            target_x1: 0.5,
            p_prime: 1,
            p_dprime: 0,
            relative_offset: 0.0,
        }
    }
}

/// The slab point described by `sel`, using the median admissible modulus.
pub fn select_slab_point(scale: &CounterexampleScale, sel: &SlabSelector) -> Result<SlabPoint> {
    let qs = scale.moduli();
    if qs.is_empty() {
        return Err(EvolutionError::DegenerateScale(format!(
            "no odd q in [Q/2, Q) for Q = {}",
            scale.q_scale
        )));
    }
    let q = qs[qs.len() / 2];
    let spacing = scale.r / (scale.d1 * scale.d1 * q as f64);
    let guess = (sel.target_x1 / spacing).round() as i64;
    let mut best: Option<(f64, i64)> = None;
    for p1 in (guess - 2 * q as i64 - 2)..=(guess + 2 * q as i64 + 2) {
        if p1 <= 0 || (p1 as u64).gcd(&q) != 1 {
            continue;
        }
        let dist = (p1 as f64 * spacing - sel.target_x1).abs();
        if best.is_none_or(|(d, _)| dist < d) {
            best = Some((dist, p1));
        }
    }
    let (_, p1) = best.ok_or_else(|| EvolutionError::DegenerateScale("no p1".into()))?;
    let n = scale.dims.n() as usize;
    let half = scale.r.powf(-0.5);
    let mut offset = vec![sel.relative_offset * half];
    offset.extend(std::iter::repeat_n(sel.relative_offset / scale.r, scale.k1()));
    offset.extend(std::iter::repeat_n(sel.relative_offset * half, scale.k2()));
    debug_assert_eq!(offset.len(), n);
    SlabPoint::new(
        scale,
        q,
        p1,
        vec![sel.p_prime; scale.k1()],
        vec![sel.p_dprime; scale.k2()],
        offset,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionValue {
    pub g_part: Complex64,
    pub h1_part: Complex64,
    pub h2_part: Complex64,
    pub product: Complex64,
    pub norm: f64,
    pub normalized_magnitude: f64,
}

/// Evolution at a slab point, with the lattice phases reduced exactly mod `q`.
pub fn solution_at(
    scale: &CounterexampleScale,
    point: &SlabPoint,
    bump: &BumpSpec,
) -> Result<EvolutionValue> {
    let t = point.t;
    let g_part = evolve_g(scale, point.x1(), t, bump)?;

    let mut h1_part = Complex64::new(1.0, 0.0);
    if scale.k1() > 0 {
        let (first, w) = scale.h1_weights()?;
        let q = point.q as i64;
        let d1 = scale.d1;
        for (i, &p) in point.p_prime.iter().enumerate() {
            let eps = point.offset[1 + i];
            let phases = (0..w.len() as i64)
                .map(|k| {
                    let l = first + k;
                    let lq = l.rem_euclid(q);
                    let num = (p.rem_euclid(q) * lq + point.p1.rem_euclid(q) * (lq * lq % q)) % q;
                    num as f64 / q as f64 + frac(d1 * eps * l as f64)
                })
                .collect();
            let coord = LatticeCoordinate {
                first,
                weights: &w,
                phases,
                x: point.x[1 + i],
                dy: 2.0 * t * d1,
                tau: t,
            };
            h1_part *= lattice_sum(&coord, bump)?;
        }
    }

    let mut h2_part = Complex64::new(1.0, 0.0);
    if scale.k2() > 0 {
        let ones = vec![1.0; (2 * scale.h2_max() + 1) as usize];
        for i in 0..scale.k2() {
            let idx = 1 + scale.k1() + i;
            let lin = frac(scale.d2 * point.offset[idx]);
            h2_part *= h2_coordinate(scale, point.x[idx], lin, t, bump, &ones)?;
        }
    }

    let product = g_part * h1_part * h2_part;
    let norm = datum_norm(scale, bump)?.total();
    Ok(EvolutionValue {
        g_part,
        h1_part,
        h2_part,
        product,
        norm,
        normalized_magnitude: product.norm() / norm,
    })
}

/// Evolution of `f_R` at an arbitrary `(x, t)`.
pub fn solution_at_point(
    scale: &CounterexampleScale,
    x: &[f64],
    t: f64,
    bump: &BumpSpec,
) -> Result<EvolutionValue> {
    let n = scale.dims.n() as usize;
    if x.len() != n {
        return Err(EvolutionError::BadPoint(format!("{} coordinates", x.len())));
    }
    let k1 = scale.k1();
    let g_part = evolve_g(scale, x[0], t, bump)?;
    let h1_part = if k1 > 0 {
        evolve_h1(scale, &x[1..1 + k1], t, bump)?
    } else {
        Complex64::new(1.0, 0.0)
    };
    let h2_part = if scale.k2() > 0 {
        evolve_h2(scale, &x[1 + k1..], t, bump)?
    } else {
        Complex64::new(1.0, 0.0)
    };
    let product = g_part * h1_part * h2_part;
    let norm = datum_norm(scale, bump)?.total();
    Ok(EvolutionValue {
        g_part,
        h1_part,
        h2_part,
        product,
        norm,
        normalized_magnitude: product.norm() / norm,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub predicted: f64,
    /// `(R, normalized magnitude)` per scale.
    pub samples: Vec<(f64, f64)>,
}

impl SlopeFit {
    pub fn deviation(&self) -> f64 {
        (self.slope - self.predicted).abs()
    }
}

/// Log-log slope of the normalized slab-point magnitude against `R`.
pub fn slope_fit(
    dims: ProblemDims,
    u: &ParamVector,
    rs: &[f64],
    selector: &SlabSelector,
    bump: &BumpSpec,
) -> Result<SlopeFit> {
    if rs.len() < 4 {
        return Err(EvolutionError::Insufficient(format!(
            "{} scales, need at least 4",
            rs.len()
        )));
    }
    let mut samples = Vec::with_capacity(rs.len());
    for &r in rs {
        let scale = CounterexampleScale::new(dims, r, u.clone())?;
        let pt = select_slab_point(&scale, selector)?;
        samples.push((r, solution_at(&scale, &pt, bump)?.normalized_magnitude));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = samples.iter().cloned().unzip();
    let slope = loglog_slope(&xs, &ys)
        .ok_or_else(|| EvolutionError::Insufficient("degenerate fit".into()))?;
    Ok(SlopeFit {
        slope,
        predicted: s_from_params(&dims, &u.u2, &u.u3).to_f64(),
        samples,
    })
}

/// `|e^{itΔ} f_{R_j}(x)| / (R_j^{s_m} ‖f_{R_j}‖₂)` at a slab point of another scale.
pub fn off_scale_decay(
    scale_j: &CounterexampleScale,
    point_k: &SlabPoint,
    bump: &BumpSpec,
) -> Result<f64> {
    let v = solution_at_point(scale_j, &point_k.x, point_k.t, bump)?;
    Ok(v.normalized_magnitude / scale_j.predicted_growth())
}

/// Partial sum `Σ_{j=K0}^{Kmax} j e^{itΔ} f_{R_j}(x) / (R_j^{s_m} ‖f_{R_j}‖₂)`
/// with `R_j = 2^j`.
pub fn dyadic_partial(
    x: &[f64],
    t: f64,
    k0: u32,
    kmax: u32,
    dims: ProblemDims,
    u: &ParamVector,
    bump: &BumpSpec,
) -> Result<Complex64> {
    if kmax < k0 || kmax > k0 + 8 {
        return Err(EvolutionError::CostGuard(format!(
            "K0={k0}, Kmax={kmax}: need K0 <= Kmax <= K0+8"
        )));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for j in k0..=kmax {
        let scale = CounterexampleScale::new(dims, 2f64.powi(j as i32), u.clone())?;
        let v = solution_at_point(&scale, x, t, bump)?;
        acc += v.product / v.norm / scale.predicted_growth() * j as f64;
    }
    Ok(acc)
}

/// `‖f_R‖_{H^s} / (R^s ‖f_R‖₂)` in the frequency representation.
///
/// The `ξ1` direction is integrated by quadrature across the bump of width
/// `R^{1/2}`; the lattice bumps (width `c`, spacing `D >= 1`) are sampled at
/// their centres.
pub fn hs_norm_ratio(scale: &CounterexampleScale, s: f64, bump: &BumpSpec) -> Result<f64> {
    if s == 0.0 {
        return Ok(1.0);
    }
    let r = scale.r;
    let k1 = scale.k1();
    let k2 = scale.k2();
    let (first, w1) = if k1 > 0 {
        scale.h1_weights()?
    } else {
        (0, vec![1.0])
    };
    let kmax = scale.h2_max();
    // Squared radii and weights of the lattice part, accumulated coordinate by coordinate.
    let mut lattice: Vec<(f64, f64)> = vec![(0.0, 1.0)];
    for _ in 0..k1 {
        let mut next = Vec::new();
        for &(rad, wt) in &lattice {
            for (i, &p) in w1.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                let xi = scale.d1 * (first + i as i64) as f64;
                next.push((rad + xi * xi, wt * p * p));
            }
        }
        lattice = next;
        if lattice.len() > 10_000_000 {
            return Err(EvolutionError::CostGuard("H^s lattice too large".into()));
        }
    }
    for _ in 0..k2 {
        let mut next = Vec::new();
        for &(rad, wt) in &lattice {
            for l in -kmax..=kmax {
                let xi = scale.d2 * l as f64;
                next.push((rad + xi * xi, wt));
            }
        }
        lattice = next;
        if lattice.len() > 10_000_000 {
            return Err(EvolutionError::CostGuard("H^s lattice too large".into()));
        }
    }
    let nodes = bump.nodes(2048);
    let h = 2.0 * bump.c() / 2048.0;
    let mut num = 0.0;
    let mut den = 0.0;
    for &(z, wz) in &nodes {
        let w2 = wz * wz / h;
        let xi1 = -r / 2.0 + r.sqrt() * z;
        for &(rad, wt) in &lattice {
            let weight = (1.0 + xi1 * xi1 + rad).powf(s) / r.powf(2.0 * s);
            num += w2 * wt * weight;
            den += w2 * wt;
        }
    }
    Ok((num / den).sqrt())
}
