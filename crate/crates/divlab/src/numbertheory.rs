//! Arithmetic functions, quadratic Gauss sums, index-set counting and a
//! numerical check of the perturbed Gauss-sum estimate.
//!
//! Phases are always reduced modulo `q` in integer arithmetic before any
//! trigonometric evaluation.

use std::f64::consts::TAU;

use num_bigint::{BigInt, BigUint};
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};

use crate::fit::loglog_slope;
use crate::rational::ExactRational;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NumberTheoryError {
    #[error("q must be odd and positive, got {0}")]
    EvenModulus(u64),
    #[error("gcd(a, q) must be 1, got a={a}, q={q}")]
    NotCoprime { a: i64, q: u64 },
    #[error("cost guard: {0}")]
    CostGuard(String),
    #[error("invalid parameters: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, NumberTheoryError>;

/// Tables of least prime factor, Euler's totient and the Möbius function.
#[derive(Debug, Clone)]
pub struct Sieve {
    lpf: Vec<u32>,
    phi: Vec<u64>,
    mu: Vec<i8>,
    primes: Vec<u32>,
}

impl Sieve {
    /// Linear sieve on `0..=limit`.
    pub fn new(limit: usize) -> Self {
        let mut lpf = vec![0u32; limit + 1];
        let mut phi = vec![0u64; limit + 1];
        let mut mu = vec![0i8; limit + 1];
        let mut primes = Vec::new();
        if limit >= 1 {
            phi[1] = 1;
            mu[1] = 1;
        }
        for i in 2..=limit {
            if lpf[i] == 0 {
                lpf[i] = i as u32;
                phi[i] = i as u64 - 1;
                mu[i] = -1;
                primes.push(i as u32);
            }
            for &p in &primes {
                let j = i * p as usize;
                if p > lpf[i] || j > limit {
                    break;
                }
                lpf[j] = p;
                if p == lpf[i] {
                    phi[j] = phi[i] * p as u64;
                    mu[j] = 0;
                } else {
                    phi[j] = phi[i] * (p as u64 - 1);
                    mu[j] = -mu[i];
                }
            }
        }
        Sieve {
            lpf,
            phi,
            mu,
            primes,
        }
    }

    pub fn limit(&self) -> usize {
        self.phi.len() - 1
    }

    pub fn phi(&self, q: usize) -> u64 {
        self.phi[q]
    }

    pub fn mu(&self, d: usize) -> i8 {
        self.mu[d]
    }

    pub fn least_prime_factor(&self, q: usize) -> u32 {
        self.lpf[q]
    }

    pub fn primes(&self) -> &[u32] {
        &self.primes
    }
}

pub fn sieve(limit: usize) -> Sieve {
    Sieve::new(limit)
}

/// Euler's totient by trial division.
pub fn totient(q: u64) -> u64 {
    assert!(q >= 1, "totient of 0");
    let mut n = q;
    let mut out = q;
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            while n.is_multiple_of(p) {
                n /= p;
            }
            out -= out / p;
        }
        p += 1;
    }
    if n > 1 {
        out -= out / n;
    }
    out
}

/// Möbius function by trial division.
pub fn mobius(d: u64) -> i8 {
    assert!(d >= 1, "mobius of 0");
    let mut n = d;
    let mut sign = 1i8;
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            n /= p;
            if n.is_multiple_of(p) {
                return 0;
            }
            sign = -sign;
        }
        p += 1;
    }
    if n > 1 {
        sign = -sign;
    }
    sign
}

fn modq(v: i64, q: u64) -> u64 {
    v.rem_euclid(q as i64) as u64
}

/// `e(k/q)` for a reduced residue `k`.
fn unit(k: u64, q: u64) -> Complex64 {
    Complex64::from_polar(1.0, TAU * k as f64 / q as f64)
}

/// `sum_{n mod q} e((a n^2 + b n)/q)`.
pub fn gauss_sum_1d(a: i64, b: i64, q: u64) -> Complex64 {
    assert!(q >= 1, "modulus must be positive");
    let (a, b) = (modq(a, q) as u128, modq(b, q) as u128);
    let qq = q as u128;
    let mut acc = Complex64::new(0.0, 0.0);
    for n in 0..qq {
        let k = (a * (n * n % qq) + b * n) % qq;
        acc += unit(k as u64, q);
    }
    acc
}

/// Repeated Gauss sums for one modulus, using a table of roots of unity and
/// an incremental phase update.
#[derive(Debug, Clone)]
pub struct GaussTable {
    q: u64,
    roots: Vec<Complex64>,
}

impl GaussTable {
    pub fn new(q: u64) -> Self {
        assert!(q >= 1, "modulus must be positive");
        GaussTable {
            q,
            roots: (0..q).map(|k| unit(k, q)).collect(),
        }
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn sum(&self, a: i64, b: i64) -> Complex64 {
        let q = self.q;
        let (a, b) = (modq(a, q), modq(b, q));
        // f(n) = a n^2 + b n; f(n+1) - f(n) = a(2n+1) + b.
        let mut f = 0u64;
        let mut diff = (a + b) % q;
        let two_a = (2 * a) % q;
        let mut acc = Complex64::new(0.0, 0.0);
        for _ in 0..q {
            acc += self.roots[f as usize];
            f += diff;
            if f >= q {
                f -= q;
            }
            diff += two_a;
            if diff >= q {
                diff -= q;
            }
        }
        acc
    }
}

/// Parameters of a `d`-dimensional quadratic Gauss sum modulo odd `q`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GaussSumSpec {
    q: u64,
    a: i64,
    b: Vec<i64>,
}

impl GaussSumSpec {
    pub fn new(q: u64, a: i64, b: Vec<i64>) -> Result<Self> {
        if q == 0 || q.is_multiple_of(2) {
            return Err(NumberTheoryError::EvenModulus(q));
        }
        if modq(a, q).gcd(&q) != 1 {
            return Err(NumberTheoryError::NotCoprime { a, q });
        }
        if b.is_empty() {
            return Err(NumberTheoryError::Invalid("dimension must be >= 1".into()));
        }
        Ok(GaussSumSpec { q, a, b })
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn a(&self) -> i64 {
        self.a
    }

    pub fn b(&self) -> &[i64] {
        &self.b
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }
}

/// Product of the 1-D sums; the `d`-dimensional sum factorizes exactly.
pub fn gauss_sum_multi(spec: &GaussSumSpec) -> Complex64 {
    let table = GaussTable::new(spec.q);
    spec.b
        .iter()
        .map(|&b| table.sum(spec.a, b))
        .fold(Complex64::new(1.0, 0.0), |acc, g| acc * g)
}

/// Direct enumeration over `Z_q^d`, for cross-checking the product form.
pub fn gauss_sum_direct(spec: &GaussSumSpec) -> Result<Complex64> {
    let (q, d) = (spec.q, spec.dim());
    let terms = (q as f64).powi(d as i32);
    if terms > 1e8 {
        return Err(NumberTheoryError::CostGuard(format!("q^d = {terms:.3e}")));
    }
    let a = modq(spec.a, q);
    let b: Vec<u64> = spec.b.iter().map(|&v| modq(v, q)).collect();
    let mut idx = vec![0u64; d];
    let mut acc = Complex64::new(0.0, 0.0);
    loop {
        let mut k = 0u64;
        for (i, &n) in idx.iter().enumerate() {
            k = (k + a * (n * n % q) + b[i] * n) % q;
        }
        acc += unit(k, q);
        let mut pos = 0;
        loop {
            if pos == d {
                return Ok(acc);
            }
            idx[pos] += 1;
            if idx[pos] < q {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

/// Exact count with its normalization by `Q^{N+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CountReport {
    pub q_scale: u64,
    pub dim: u32,
    pub count: BigUint,
    pub normalized: f64,
}

impl CountReport {
    fn new(q_scale: u64, dim: u32, count: BigUint) -> Self {
        let denom = BigUint::from(q_scale).pow(dim + 1);
        let normalized = ratio_f64(&count, &denom);
        CountReport {
            q_scale,
            dim,
            count,
            normalized,
        }
    }
}

fn ratio_f64(a: &BigUint, b: &BigUint) -> f64 {
    let r = num_rational::BigRational::new(BigInt::from(a.clone()), BigInt::from(b.clone()));
    r.to_f64().unwrap_or(f64::NAN)
}

/// Odd moduli `q` with `Q/2 <= q < Q`.
pub fn odd_moduli(q_scale: u64) -> impl Iterator<Item = u64> {
    let start = q_scale.div_ceil(2);
    (start..q_scale).filter(|q| q % 2 == 1)
}

/// `|J| = sum_{q odd, Q/2 <= q < Q} phi(q) q^{N-1}`.
pub fn count_index_set(q_scale: u64, dim: u32) -> Result<CountReport> {
    if q_scale < 4 || dim < 1 {
        return Err(NumberTheoryError::Invalid(format!(
            "need Q >= 4 and N >= 1, got Q={q_scale}, N={dim}"
        )));
    }
    let sv = Sieve::new(q_scale as usize);
    let mut total = BigUint::zero();
    for q in odd_moduli(q_scale) {
        total += BigUint::from(sv.phi(q as usize)) * BigUint::from(q).pow(dim - 1);
    }
    Ok(CountReport::new(q_scale, dim, total))
}

/// Largest `D >= 0` with `D / (q q~) <= 2 Q^{-t}`, decided exactly.
fn max_numerator_gap(q: u64, qt: u64, q_scale: u64, t: &ExactRational) -> Option<u64> {
    // D^b Q^a <= (2 q q~)^b with t = a/b.
    let (a, b) = match (t.numer().to_i64(), t.denom().to_u32()) {
        (Some(a), Some(b)) if a >= 0 => (a as u32, b),
        _ => return None,
    };
    let rhs = BigUint::from(2 * q * qt).pow(b);
    let qa = BigUint::from(q_scale).pow(a);
    let fits = |d: u64| BigUint::from(d).pow(b) * &qa <= rhs;
    let (mut lo, mut hi) = (0u64, 2 * q * qt + 1);
    if !fits(0) {
        return None;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if fits(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo)
}

/// Pairs `(p, p~) in [0,q) x [0,q~)` with `|p q~ - p~ q| <= gap`, optionally
/// requiring both to be units.
fn coordinate_pairs(q: u64, qt: u64, gap: u64, units_only: bool) -> u64 {
    let mut count = 0u64;
    for p in 0..q {
        if units_only && p.gcd(&q) != 1 {
            continue;
        }
        let center = (p * qt) as i64;
        let lo = Integer::div_ceil(&(center - gap as i64), &(q as i64)).max(0);
        let hi = Integer::div_floor(&(center + gap as i64), &(q as i64)).min(qt as i64 - 1);
        if hi < lo {
            continue;
        }
        if units_only {
            count += (lo..=hi).filter(|&pt| (pt as u64).gcd(&qt) == 1).count() as u64;
        } else {
            count += (hi - lo + 1) as u64;
        }
    }
    count
}

/// Number of ordered index pairs whose rectangles
/// `B(p1/q, Q^{-t1}) x B(p'/q, Q^{-t2})^{N-1}` intersect (diagonal included).
///
/// The intersection condition is a product over coordinates, so for each pair
/// of moduli the count factorizes into exact per-coordinate counts.
pub fn count_intersecting_pairs(
    q_scale: u64,
    t1: &ExactRational,
    t2: &ExactRational,
    dim: u32,
) -> Result<CountReport> {
    if !(4..=512).contains(&q_scale) || !(1..=3).contains(&dim) {
        return Err(NumberTheoryError::CostGuard(format!(
            "pair counting limited to 4 <= Q <= 512, N <= 3 (Q={q_scale}, N={dim})"
        )));
    }
    let one = ExactRational::one();
    if *t1 < one || *t2 < one {
        return Err(NumberTheoryError::Invalid("need t1, t2 >= 1".into()));
    }
    let qs: Vec<u64> = odd_moduli(q_scale).collect();
    let mut total = BigUint::zero();
    for &q in &qs {
        for &qt in &qs {
            let g1 = max_numerator_gap(q, qt, q_scale, t1)
                .ok_or_else(|| NumberTheoryError::Invalid(format!("t1 = {t1}")))?;
            let c1 = coordinate_pairs(q, qt, g1, true);
            if c1 == 0 {
                continue;
            }
            let mut term = BigUint::from(c1);
            if dim > 1 {
                let g2 = max_numerator_gap(q, qt, q_scale, t2)
                    .ok_or_else(|| NumberTheoryError::Invalid(format!("t2 = {t2}")))?;
                term *= BigUint::from(coordinate_pairs(q, qt, g2, false)).pow(dim - 1);
            }
            total += term;
        }
    }
    Ok(CountReport::new(q_scale, dim, total))
}

/// One-dimensional profile of the lattice cutoff, scaled to support `[-L, L]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cutoff {
    /// `exp(1 - 1/(1 - (x/L)^2))`.
    SmoothBump,
    /// Cardinal B-spline of the given order (`order`-fold box convolution).
    /// Its Fourier transform decays exactly like `|xi|^{-order}`.
    BSpline(u32),
    /// Indicator of `[-k q, k q)`: a whole number of periods.
    Periods(u32),
}

fn bspline(order: u32, x: f64) -> f64 {
    // M_k(x) = 1/(k-1)! sum_i (-1)^i C(k,i) (x + k/2 - i)_+^{k-1}
    let k = order as i32;
    let half = k as f64 / 2.0;
    if x.abs() >= half {
        return 0.0;
    }
    let mut fact = 1.0;
    for i in 1..k {
        fact *= i as f64;
    }
    let mut acc = 0.0;
    let mut binom = 1.0;
    for i in 0..=k {
        let y = x + half - i as f64;
        if y > 0.0 {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * binom * y.powi(k - 1);
        }
        binom = binom * (k - i) as f64 / (i + 1) as f64;
    }
    (acc / fact).max(0.0)
}

impl Cutoff {
    /// Weight at integer `m` for a cutoff of radius `l` (and modulus `q` for
    /// [`Cutoff::Periods`]).
    pub fn weight(&self, m: i64, l: f64, q: u64) -> f64 {
        match *self {
            Cutoff::SmoothBump => {
                let y = m as f64 / l;
                if y.abs() >= 1.0 {
                    0.0
                } else {
                    (1.0 - 1.0 / (1.0 - y * y)).exp()
                }
            }
            Cutoff::BSpline(k) => bspline(k, m as f64 * k as f64 / (2.0 * l)),
            Cutoff::Periods(k) => {
                let r = k as i64 * q as i64;
                if -r <= m && m < r {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    fn reach(&self, l: f64, q: u64) -> i64 {
        match *self {
            Cutoff::Periods(k) => k as i64 * q as i64,
            _ => l.ceil() as i64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationReport {
    pub lhs: Complex64,
    pub main_term: Complex64,
    pub error: f64,
    /// `q^{d/2} (L/q)^{d-2N}`.
    pub error_bound: f64,
}

/// Compares `sum_m zeta(m) e((p1|m|^2 + p'.m)/q)` with its main term
/// `(q^{-d} sum zeta) G`, where `zeta` is the tensor-product cutoff.
pub fn perturbation_check(
    q: u64,
    p1: i64,
    p_prime: &[i64],
    l: f64,
    big_n: u32,
    cutoff: Cutoff,
) -> Result<PerturbationReport> {
    let spec = GaussSumSpec::new(q, p1, p_prime.to_vec())?;
    let d = p_prime.len();
    let reach = cutoff.reach(l, q);
    let width = (2 * reach + 1) as f64;
    if width.powi(d as i32) > 1e8 {
        return Err(NumberTheoryError::CostGuard(format!(
            "L^d = {:.3e} terms",
            width.powi(d as i32)
        )));
    }
    if d > 3 {
        return Err(NumberTheoryError::CostGuard("d <= 3".into()));
    }
    let a = modq(p1, q);
    let ms: Vec<i64> = (-reach..=reach).collect();
    let w: Vec<f64> = ms.iter().map(|&m| cutoff.weight(m, l, q)).collect();
    // Per-coordinate factors zeta_1(m) e((p1 m^2 + p'_i m)/q).
    let rows: Vec<Vec<Complex64>> = p_prime
        .iter()
        .map(|&b| {
            let b = modq(b, q);
            ms.iter()
                .zip(&w)
                .map(|(&m, &wt)| {
                    let r = modq(m, q);
                    let k = (a * (r * r % q) + b * r) % q;
                    unit(k, q) * wt
                })
                .collect()
        })
        .collect();
    let lhs = match d {
        1 => rows[0].iter().sum(),
        2 => {
            let mut acc = Complex64::new(0.0, 0.0);
            for x in &rows[0] {
                for y in &rows[1] {
                    acc += x * y;
                }
            }
            acc
        }
        _ => {
            let mut acc = Complex64::new(0.0, 0.0);
            for x in &rows[0] {
                for y in &rows[1] {
                    let xy = x * y;
                    for z in &rows[2] {
                        acc += xy * z;
                    }
                }
            }
            acc
        }
    };
    let zsum_1d: f64 = w.iter().sum();
    let zsum = zsum_1d.powi(d as i32);
    let main_term = gauss_sum_multi(&spec) * (zsum / (q as f64).powi(d as i32));
    let df = d as f64;
    let error_bound = (q as f64).powf(df / 2.0) * (l / q as f64).powf(df - 2.0 * big_n as f64);
    Ok(PerturbationReport {
        error: (lhs - main_term).norm(),
        lhs,
        main_term,
        error_bound,
    })
}

/// Runs [`perturbation_check`] over several `L`, calibrates the constant at
/// the first one and fits the log-log decay exponent of the error.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationDecay {
    pub reports: Vec<PerturbationReport>,
    pub constant: f64,
    pub fitted_exponent: f64,
    /// Whether every error stays below `constant * bound * (1 + slack)`.
    pub bound_holds: bool,
}

pub fn perturbation_decay(
    q: u64,
    p1: i64,
    p_prime: &[i64],
    ls: &[f64],
    big_n: u32,
    cutoff: Cutoff,
    slack: f64,
) -> Result<PerturbationDecay> {
    if ls.len() < 2 {
        return Err(NumberTheoryError::Invalid("need at least two L".into()));
    }
    let reports = ls
        .iter()
        .map(|&l| perturbation_check(q, p1, p_prime, l, big_n, cutoff))
        .collect::<Result<Vec<_>>>()?;
    let constant = reports[0].error / reports[0].error_bound;
    let bound_holds = reports
        .iter()
        .all(|r| r.error <= constant * r.error_bound * (1.0 + slack));
    let errs: Vec<f64> = reports.iter().map(|r| r.error).collect();
    let fitted_exponent = loglog_slope(ls, &errs).unwrap_or(f64::NAN);
    Ok(PerturbationDecay {
        reports,
        constant,
        fitted_exponent,
        bound_holds,
    })
}

/// `q * sum_{d | q} mu(d)/d`, evaluated exactly.
pub fn totient_via_mobius(q: u64) -> u64 {
    let mut acc = num_rational::Ratio::<i64>::zero();
    for d in 1..=q {
        if q.is_multiple_of(d) {
            acc += num_rational::Ratio::new(mobius(d) as i64, d as i64);
        }
    }
    let v = acc * num_rational::Ratio::from_integer(q as i64);
    assert!(v.is_integer());
    *v.numer() as u64
}
