//! End-to-end acceptance run: one line per criterion, nonzero exit on failure.
//!
//! Runs without the libtest harness so the criteria execute in order and
//! their timings are not distorted by parallel tests.

use std::time::{Duration, Instant};

use divlab::evolution::{
    dyadic_partial, off_scale_decay, select_slab_point, slope_fit, BumpSpec, CounterexampleScale,
    SlabSelector,
};
use divlab::exponents::{
    alpha_dims, beta1, beta2, check_params, curve_m, dilation_from_params, mtp_lower_bound, s3,
    s4, s5, s_of_alpha, theorem1_breakpoints, theorem1_case, DilationVector, ParamVector,
    ProblemDims,
};
use divlab::numbertheory::{
    count_index_set, count_intersecting_pairs, gauss_sum_direct, gauss_sum_multi,
    perturbation_decay, Cutoff, GaussSumSpec, GaussTable,
};
use divlab::optimizer::{default_step, grand_max_oracle, verify_piecewise, GridMode};
use divlab::slabs::{degenerate_dim_check, dim_fit, omega_measure, DeltaRule, OmegaMethod, UnitCell, Window};
use divlab::{rat, ExactRational};

type Outcome = Result<String, String>;

fn q(v: i64) -> ExactRational {
    ExactRational::from_integer(v)
}

fn dyadic_r(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|k| 2f64.powi(k)).collect()
}

fn spread(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)))
}

fn grid(lo: &ExactRational, hi: &ExactRational, step: &ExactRational) -> Vec<ExactRational> {
    let mut out = Vec::new();
    let mut a = lo.clone();
    while &a <= hi {
        out.push(a.clone());
        a = &a + step;
    }
    out
}

fn c1_exponent_identities() -> Outcome {
    let mut checked = 0;
    for n in 2..=30u32 {
        for m in 0..n - 1 {
            let d = ProblemDims::new(n, m).map_err(|e| e.to_string())?;
            let a = q((n - m) as i64);
            checked += 1;
            if s3(&d, &a) != s4(&d, &a) {
                return Err(format!("s3 != s4 at n={n} m={m}"));
            }
            if m + 3 < n {
                let b1 = beta1(&d).map_err(|e| e.to_string())?;
                let b2 = beta2(&d);
                checked += 2;
                if s3(&d, &b1) != s5(&d, &b1).map_err(|e| e.to_string())? {
                    return Err(format!("s3 != s5 at beta1, n={n} m={m}"));
                }
                if s5(&d, &b2).map_err(|e| e.to_string())? != s4(&d, &b2) {
                    return Err(format!("s5 != s4 at beta2, n={n} m={m}"));
                }
            }
        }
    }
    Ok(format!("{checked} identities exact"))
}

fn c2_oracle_equivalence() -> Outcome {
    let step = default_step();
    let mut checked = 0;
    let mut worst_off_grid = 0.0f64;
    for n in 2..=16u32 {
        let tol = rat(n as i64, 2000);
        for m in 0..=divlab::exponents::m1(n) {
            let d = ProblemDims::new(n, m).map_err(|e| e.to_string())?;
            let curve = curve_m(&d).map_err(|e| e.to_string())?;
            let (lo, hi) = curve.domain();
            let mut alphas = grid(&lo, &hi, &rat(1, 8));
            alphas.extend(curve.breakpoints());
            alphas.sort();
            alphas.dedup();
            let exact = verify_piecewise(&d, &alphas, &step, GridMode::WithVertices).map_err(|e| e.to_string())?;
            if !exact.max_deviation.is_zero() || exact.soundness_violations > 0 {
                return Err(format!("n={n} m={m}: deviation {} at {:?}", exact.max_deviation, exact.worst_alpha));
            }
            // Off-breakpoint points strictly inside the domain.
            let interior: Vec<ExactRational> = grid(&(&lo + &rat(1, 7)), &hi, &rat(1, 7))
                .into_iter()
                .filter(|a| a < &hi)
                .collect();
            let coarse = verify_piecewise(&d, &interior, &step, GridMode::GridOnly).map_err(|e| e.to_string())?;
            if coarse.max_deviation > tol || coarse.soundness_violations > 0 {
                return Err(format!("n={n} m={m}: grid-only deviation {}", coarse.max_deviation));
            }
            worst_off_grid = worst_off_grid.max(coarse.max_deviation.to_f64() / tol.to_f64());
            checked += exact.checked;
        }
    }
    Ok(format!("{checked} slices exact; grid-only worst {worst_off_grid:.3} of tolerance"))
}

fn c3_theorem_reproduction() -> Outcome {
    let step = default_step();
    let mut checked = 0;
    for n in 2..=16u32 {
        let ni = n as i64;
        let mut alphas = grid(&rat(ni, 2), &q(ni), &rat(1, 16));
        alphas.extend(theorem1_breakpoints(n).map_err(|e| e.to_string())?);
        alphas.sort();
        alphas.dedup();
        for a in &alphas {
            let closed = s_of_alpha(n, a).map_err(|e| e.to_string())?;
            let oracle = grand_max_oracle(n, a, &step).map_err(|e| e.to_string())?;
            let case = theorem1_case(n, a).and_then(|c| c.value(n, a)).map_err(|e| e.to_string())?;
            if closed.value != oracle.s || closed.value != case {
                return Err(format!("n={n} alpha={a}: closed {} oracle {} case {case}", closed.value, oracle.s));
            }
            checked += 1;
        }
        if s_of_alpha(n, &q(ni)).map_err(|e| e.to_string())?.value != rat(ni, 2 * (ni + 1)) {
            return Err(format!("s(n) wrong at n={n}"));
        }
        if s_of_alpha(n, &rat(ni, 2)).map_err(|e| e.to_string())?.value != rat(ni, 4) {
            return Err(format!("s(n/2) wrong at n={n}"));
        }
    }
    Ok(format!("{checked} grid points, endpoints exact"))
}

fn mtp_vectors(d: &ProblemDims, a: &DilationVector) -> (Vec<ExactRational>, Vec<ExactRational>) {
    let (k1, k2) = ((d.n() - d.m() - 1) as usize, d.m() as usize);
    let mut b = vec![rat(1, 2)];
    b.extend(std::iter::repeat_n(q(1), k1));
    b.extend(std::iter::repeat_n(rat(1, 2), k2));
    let mut av = vec![a.a1.clone()];
    av.extend(std::iter::repeat_n(a.a2.clone(), k1));
    av.extend(std::iter::repeat_n(a.a3.clone(), k2));
    (b, av)
}

fn c4_mtp() -> Outcome {
    let g: Vec<ExactRational> = (0..=20).map(|k| rat(k, 20)).collect();
    let half = rat(1, 2);
    let mut checked = 0;
    for n in 2..=12u32 {
        for m in 0..n {
            let d = ProblemDims::new(n, m).map_err(|e| e.to_string())?;
            for u1 in g.iter().filter(|v| **v <= half) {
                for u2 in g.iter().filter(|v| **v >= half) {
                    for u3 in g.iter().filter(|v| **v <= half) {
                        let u = ParamVector::new(u1.clone(), u2.clone(), u3.clone());
                        if !check_params(&d, &u).is_feasible() {
                            continue;
                        }
                        let Ok(a) = dilation_from_params(&d, &u) else { continue };
                        let (b, av) = mtp_vectors(&d, &a);
                        if av.iter().any(|x| !x.is_positive()) {
                            continue;
                        }
                        let (a1, a2) = alpha_dims(&d, u2, u3).map_err(|e| e.to_string())?;
                        let lb = mtp_lower_bound(&b, &av).map_err(|e| e.to_string())?;
                        if lb != a1.clone().min(a2.clone()) {
                            return Err(format!("n={n} m={m} u=({u1},{u2},{u3}): {lb} vs ({a1},{a2})"));
                        }
                        checked += 1;
                    }
                }
            }
        }
    }
    if checked == 0 {
        return Err("no feasible grid point".into());
    }
    Ok(format!("{checked} feasible vectors exact"))
}

fn c5_gauss() -> Outcome {
    let bs: [i64; 8] = [0, 1, 2, 3, 5, 7, 11, 13];
    let mut worst = 0.0f64;
    let mut sums = 0usize;
    for qq in (3..=999u64).step_by(2) {
        let table = GaussTable::new(qq);
        let root = (qq as f64).sqrt();
        for a in 1..qq as i64 {
            if num_integer::gcd(a as u64, qq) != 1 {
                continue;
            }
            for &b in &bs {
                worst = worst.max((table.sum(a, b).norm() - root).abs() / root);
                sums += 1;
            }
        }
    }
    if worst > 1e-9 {
        return Err(format!("modulus relative error {worst:.2e}"));
    }
    let mut worst_multi = 0.0f64;
    for qq in (3..=31u64).step_by(2) {
        for d in 1..=3i64 {
            for a in [1i64, 2, qq as i64 - 1] {
                if num_integer::gcd(a as u64, qq) != 1 {
                    continue;
                }
                let spec = GaussSumSpec::new(qq, a, (0..d).map(|i| 3 * i + 1).collect()).map_err(|e| e.to_string())?;
                let direct = gauss_sum_direct(&spec).map_err(|e| e.to_string())?;
                worst_multi = worst_multi.max((gauss_sum_multi(&spec) - direct).norm() / direct.norm());
            }
        }
    }
    if worst_multi > 1e-10 {
        return Err(format!("product vs direct {worst_multi:.2e}"));
    }
    Ok(format!("{sums} sums, modulus err {worst:.1e}, product err {worst_multi:.1e}"))
}

fn c6_counting() -> Outcome {
    let mut notes = Vec::new();
    for dim in 1..=3u32 {
        let v = [256u64, 512, 1024, 2048]
            .iter()
            .map(|&qs| count_index_set(qs, dim).map(|r| r.normalized))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?;
        let (lo, hi) = spread(&v);
        if hi / lo > 1.1 {
            return Err(format!("|J| N={dim} spread {:.4}", hi / lo));
        }
        notes.push(format!("J{dim}:{:.3}", hi / lo));
    }
    for dim in 1..=2u32 {
        let t = rat(dim as i64 + 1, dim as i64);
        let v = [16u64, 32, 64]
            .iter()
            .map(|&qs| count_intersecting_pairs(qs, &t, &t, dim).map(|r| r.normalized))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?;
        let (lo, hi) = spread(&v);
        if !(lo > 0.0 && hi / lo <= 2.0) {
            return Err(format!("pairs N={dim} spread {:.4}", hi / lo));
        }
        notes.push(format!("pairs{dim}:{:.3}", hi / lo));
    }
    Ok(notes.join(" "))
}

/// Two parameter vectors for each of the tested dimension pairs.
fn finite_scale_configs() -> Vec<(ProblemDims, ParamVector)> {
    let mk = |n, m, u: (i64, i64, i64, i64, i64, i64)| {
        (
            ProblemDims::new(n, m).unwrap(),
            ParamVector::new(rat(u.0, u.1), rat(u.2, u.3), rat(u.4, u.5)),
        )
    };
    vec![
        mk(2, 0, (1, 4, 3, 4, 0, 1)),
        mk(2, 0, (7, 16, 13, 16, 0, 1)),
        mk(2, 1, (1, 4, 3, 4, 1, 4)),
        mk(2, 1, (1, 4, 5, 8, 1, 8)),
        mk(3, 1, (1, 4, 5, 8, 1, 8)),
        mk(3, 1, (1, 4, 3, 4, 1, 4)),
    ]
}

fn label(d: &ProblemDims, u: &ParamVector) -> String {
    format!("({},{})u=({},{},{})", d.n(), d.m(), u.u1, u.u2, u.u3)
}

fn c7_evolution_slopes() -> Outcome {
    let bump = BumpSpec::standard();
    let rs = dyadic_r(10, 16);
    let mut worst = 0.0f64;
    for (d, u) in finite_scale_configs() {
        let f = slope_fit(d, &u, &rs, &SlabSelector::default(), &bump).map_err(|e| e.to_string())?;
        if f.deviation() > 0.07 {
            return Err(format!("{}: slope {:.4} vs {:.4}", label(&d, &u), f.slope, f.predicted));
        }
        worst = worst.max(f.deviation());
    }
    Ok(format!("max deviation {worst:.4}"))
}

fn c8_off_scale() -> Outcome {
    let bump = BumpSpec::standard();
    let d = ProblemDims::new(2, 1).unwrap();
    let u = ParamVector::new(rat(1, 2), rat(3, 4), rat(1, 4));
    let sel = SlabSelector {
        target_x1: 0.95,
        ..SlabSelector::default()
    };
    let k = 16;
    let sk = CounterexampleScale::new(d, 2f64.powi(k), u.clone()).map_err(|e| e.to_string())?;
    let pt = select_slab_point(&sk, &sel).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for j in (k - 3)..=(k + 3) {
        if j == k {
            continue;
        }
        let sj = CounterexampleScale::new(d, 2f64.powi(j), u.clone()).map_err(|e| e.to_string())?;
        let ratio = off_scale_decay(&sj, &pt, &bump).map_err(|e| e.to_string())? * sj.r();
        if ratio > 1.0 {
            return Err(format!("j={j}: R_j * contribution = {ratio:.3}"));
        }
        worst = worst.max(ratio);
    }
    let mut mags = Vec::new();
    for kk in [11u32, 12, 13] {
        let s = CounterexampleScale::new(d, 2f64.powi(kk as i32), u.clone()).map_err(|e| e.to_string())?;
        let p = select_slab_point(&s, &sel).map_err(|e| e.to_string())?;
        mags.push(dyadic_partial(&p.x, p.t, 10, 14, d, &u, &bump).map_err(|e| e.to_string())?.norm());
    }
    let unit = mags[0] / 11.0;
    let linear = mags
        .iter()
        .zip([11.0, 12.0, 13.0])
        .all(|(m, k)| *m >= 0.5 * k * unit && *m <= 2.0 * k * unit)
        && mags[2] > mags[0];
    if !linear {
        return Err(format!("partial sums {mags:?} not linear in k"));
    }
    Ok(format!(
        "max R_j*ratio {worst:.3}; partial sums {:.3} {:.3} {:.3}",
        mags[0], mags[1], mags[2]
    ))
}

fn c9_dimensions() -> Outcome {
    let rs = dyadic_r(10, 16);
    let mut worst = 0.0f64;
    for (d, u) in finite_scale_configs() {
        let w = Window::unit_cube(d.n() as usize);
        for rule in [DeltaRule::RInverse, DeltaRule::RInverseHalf] {
            let f = dim_fit(d, &u, &rs, rule, &w).map_err(|e| e.to_string())?;
            if f.deviation() > 0.15 {
                return Err(format!("{} {rule:?}: {:.4} vs {:.4}", label(&d, &u), f.fitted, f.predicted));
            }
            worst = worst.max(f.deviation());
        }
    }
    let mut worst_deg = 0.0f64;
    for (n, u3) in [(2u32, rat(1, 4)), (3, rat(1, 3)), (3, rat(1, 8))] {
        let f = degenerate_dim_check(n, &u3, &rs).map_err(|e| e.to_string())?;
        if f.deviation() > 0.1 {
            return Err(format!("degenerate n={n} u3={u3}: {:.4} vs {:.4}", f.fitted, f.predicted));
        }
        worst_deg = worst_deg.max(f.deviation());
    }
    Ok(format!("max deviation {worst:.4}, degenerate {worst_deg:.4}"))
}

fn c10_ubiquity() -> Outcome {
    let mut balanced = Vec::new();
    for e in 6..=9 {
        let cell = UnitCell::from_exponents(2f64.powi(e), 1.5, 1.5, 2);
        balanced.push(cell.measure(OmegaMethod::Sweep).map_err(|e| e.to_string())?.value);
    }
    let (lo, hi) = spread(&balanced);
    if !(lo > 0.0 && hi / lo <= 2.0) {
        return Err(format!("balanced cell measures {balanced:?}"));
    }
    let d = ProblemDims::new(2, 0).unwrap();
    let u = ParamVector::new(rat(7, 16), rat(13, 16), q(0));
    let a = dilation_from_params(&d, &u).map_err(|e| e.to_string())?;
    let mut along = Vec::new();
    for k in [22, 24, 26, 28] {
        along.push(omega_measure(d, 2f64.powi(k), &u, &a, OmegaMethod::Sweep).map_err(|e| e.to_string())?.value);
    }
    let (plo, phi) = spread(&along);
    if !(plo > 0.0 && phi / plo <= 2.0) {
        return Err(format!("omega along R {along:?}"));
    }
    let qq = 31u64;
    let ls: Vec<f64> = (1..4).map(|k| (qq * qq) as f64 / 3.0 * 2f64.powi(k)).collect();
    let mut fits = Vec::new();
    for (p_prime, big_n) in [(vec![3i64], 1u32), (vec![3], 2), (vec![3, 4], 1), (vec![3, 4], 2)] {
        let dim = p_prime.len() as f64;
        let dec = perturbation_decay(qq, 5, &p_prime, &ls, big_n, Cutoff::BSpline(2 * big_n), 0.25)
            .map_err(|e| e.to_string())?;
        let target = dim - 2.0 * big_n as f64;
        if (dec.fitted_exponent - target).abs() > 0.5 {
            return Err(format!("d={dim} N={big_n}: exponent {:.3} vs {target}", dec.fitted_exponent));
        }
        fits.push(format!("{:.2}", dec.fitted_exponent));
    }
    Ok(format!(
        "c={lo:.3} (max {hi:.3}); along R {plo:.3}..{phi:.3}; perturbation exponents {}",
        fits.join(" ")
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, Duration); 10] = [
        ("exponent algebra exactness", c1_exponent_identities, Duration::from_secs(5)),
        ("oracle equivalence", c2_oracle_equivalence, Duration::from_secs(60)),
        ("main theorem reproduction", c3_theorem_reproduction, Duration::from_secs(60)),
        ("mass transference formula", c4_mtp, Duration::from_secs(10)),
        ("gauss sums", c5_gauss, Duration::from_secs(60)),
        ("counting laws", c6_counting, Duration::from_secs(120)),
        ("evolution exponent", c7_evolution_slopes, Duration::from_secs(600)),
        ("off-scale decay", c8_off_scale, Duration::from_secs(600)),
        ("dimension fits", c9_dimensions, Duration::from_secs(600)),
        ("ubiquity", c10_ubiquity, Duration::from_secs(300)),
    ];
    let mut failed = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let out = run();
        let took = t.elapsed();
        let (tag, detail) = match (&out, took <= *budget) {
            (Ok(s), true) => ("PASS", s.clone()),
            (Ok(s), false) => ("FAIL", format!("{s}; over budget {budget:?}")),
            (Err(e), _) => ("FAIL", e.clone()),
        };
        if tag == "FAIL" {
            failed += 1;
        }
        println!("{tag} criterion {:>2} {name} [{:.2} s] {detail}", i + 1, took.as_secs_f64());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
