//! Subcommand bodies.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use divlab::evolution::{
    dyadic_partial, off_scale_decay, select_slab_point, slope_fit, solution_at, BumpSpec,
    CounterexampleScale, SlabSelector,
};
use divlab::exponents::{
    alpha_dims, beta1, beta2, check_params, dilation_from_params, emit_curve, m1,
    mtp_lower_bound, s3, s4, s5, s_of_alpha, theorem1_breakpoints, CurveSample, ParamVector,
    ProblemDims,
};
use divlab::numbertheory::{
    count_index_set, count_intersecting_pairs, gauss_sum_direct, gauss_sum_multi,
    perturbation_decay, Cutoff, GaussSumSpec, GaussTable,
};
use divlab::optimizer::{default_step, grand_max_agrees, verify_piecewise, GridMode};
use divlab::slabs::{
    degenerate_dim_check, dim_fit, omega_measure, BallSpec, DeltaRule, OmegaMethod, UnitCell,
    Window,
};
use divlab::{rat, ExactRational};
use num_integer::Integer;
use sha2::{Digest, Sha256};

use crate::config::{Format, RunConfig};
use crate::failure::Failure;
use crate::report::{Check, Report, Status};
use crate::svg::{render, Plot};

type Res<T> = Result<T, Failure>;

fn q(v: i64) -> ExactRational {
    ExactRational::from_integer(v)
}

fn ensure_out(cfg: &RunConfig) -> Res<&Path> {
    fs::create_dir_all(&cfg.out)?;
    Ok(cfg.out.as_path())
}

/// 17 significant digits, the float format for measured CSV columns.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn split_rat(r: &ExactRational) -> (String, String) {
    (r.numer().to_string(), r.denom().to_string())
}

// ---------------------------------------------------------------- exponents

pub const CURVE_HEADER: [&str; 6] = ["alpha_num", "alpha_den", "s_num", "s_den", "branch", "winning_m"];

pub fn write_curve_csv(path: &Path, samples: &[CurveSample]) -> Res<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?;
    w.write_record(CURVE_HEADER)?;
    for s in samples {
        let (an, ad) = split_rat(&s.alpha);
        let (sn, sd) = split_rat(&s.s);
        let winners: Vec<String> = s.winners.iter().map(|m| m.to_string()).collect();
        w.write_record([an, ad, sn, sd, s.branch.clone(), winners.join(";")])?;
    }
    w.flush()?;
    Ok(())
}

/// `(alpha, s)` pairs read back from a curve CSV.
pub fn read_curve_csv(path: &Path) -> Res<Vec<(ExactRational, ExactRational)>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let parse = |i: usize| -> Res<i64> {
            rec.get(i)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Failure::Runtime(format!("bad CSV field {i}")))
        };
        out.push((rat(parse(0)?, parse(1)?), rat(parse(2)?, parse(3)?)));
    }
    Ok(out)
}

pub fn cmd_exponents(cfg: &RunConfig, report: &mut Report) -> Res<Vec<PathBuf>> {
    let (lo, hi) = cfg.alpha_range();
    let samples = emit_curve(cfg.n, &lo, &hi, &cfg.step)?;
    let dir = ensure_out(cfg)?;
    let mut files = Vec::new();
    let stem = format!("exponents_n{}", cfg.n);
    if cfg.wants(Format::Csv) {
        let path = dir.join(format!("{stem}.csv"));
        write_curve_csv(&path, &samples)?;
        let back = read_curve_csv(&path)?;
        let same = back.len() == samples.len()
            && back.iter().zip(&samples).all(|((a, s), x)| *a == x.alpha && *s == x.s);
        report.push(Check::assert("csv_round_trip", same).with("rows", samples.len()));
        files.push(path);
    }
    if cfg.wants(Format::Svg) {
        let pts: Vec<(f64, f64)> = samples.iter().map(|s| (s.alpha.to_f64(), s.s.to_f64())).collect();
        let marks: Vec<(f64, f64)> = theorem1_breakpoints(cfg.n)?
            .into_iter()
            .filter(|b| lo <= *b && *b <= hi)
            .map(|b| -> Res<(f64, f64)> { Ok((b.to_f64(), s_of_alpha(cfg.n, &b)?.value.to_f64())) })
            .collect::<Res<_>>()?;
        let title = format!("lower bound for s(alpha), n = {}", cfg.n);
        let svg = render(&Plot {
            title: &title,
            x_label: "alpha",
            y_label: "s",
            points: &pts,
            markers: &marks,
        });
        let path = dir.join(format!("{stem}.svg"));
        fs::write(&path, svg)?;
        files.push(path);
    }
    let branches: Vec<String> = {
        let mut b: Vec<String> = Vec::new();
        for s in &samples {
            if b.last() != Some(&s.branch) {
                b.push(s.branch.clone());
            }
        }
        b
    };
    report.push(
        Check::new("curve", Status::Measured)
            .with("n", cfg.n)
            .with("alpha_min", lo.to_string())
            .with("alpha_max", hi.to_string())
            .with("samples", samples.len())
            .with("branches", branches.join(" ")),
    );
    Ok(files)
}

// ------------------------------------------------------------------- verify

pub const SUITES: [&str; 7] = [
    "exponents",
    "optimizer",
    "gauss",
    "counting",
    "evolution",
    "slabs",
    "ubiquity",
];

pub fn cmd_verify(cfg: &RunConfig, suite: &str, report: &mut Report) -> Res<()> {
    let suites: Vec<&str> = if suite == "all" {
        SUITES.to_vec()
    } else if SUITES.contains(&suite) {
        vec![suite]
    } else {
        return Err(Failure::Config(format!("unknown suite '{suite}'")));
    };
    for s in suites {
        match s {
            "exponents" => verify_exponents(cfg, report)?,
            "optimizer" => verify_optimizer(cfg, report)?,
            "gauss" => verify_gauss(cfg, report)?,
            "counting" => verify_counting(cfg, report)?,
            "evolution" => verify_evolution(cfg, report)?,
            "slabs" => verify_slabs(cfg, report)?,
            "ubiquity" => verify_ubiquity(cfg, report)?,
            _ => unreachable!(),
        }
    }
    Ok(())
}

fn verify_exponents(cfg: &RunConfig, report: &mut Report) -> Res<()> {
    let mut identities = 0usize;
    let mut broken = Vec::new();
    for n in 2..=cfg.n_max.max(2) {
        for m in 0..n - 1 {
            let d = ProblemDims::new(n, m)?;
            let a = q((n - m) as i64);
            identities += 1;
            if s3(&d, &a) != s4(&d, &a) {
                broken.push(format!("s3=s4 n={n} m={m}"));
            }
            if m + 3 < n {
                let b1 = beta1(&d)?;
                let b2 = beta2(&d);
                identities += 2;
                if s3(&d, &b1) != s5(&d, &b1)? {
                    broken.push(format!("s3=s5 n={n} m={m}"));
                }
                if s5(&d, &b2)? != s4(&d, &b2) {
                    broken.push(format!("s5=s4 n={n} m={m}"));
                }
            }
        }
        let top = s_of_alpha(n, &q(n as i64))?.value;
        let mid = s_of_alpha(n, &rat(n as i64, 2))?.value;
        identities += 2;
        if top != rat(n as i64, 2 * (n as i64 + 1)) {
            broken.push(format!("s(n) n={n}"));
        }
        if mid != rat(n as i64, 4) {
            broken.push(format!("s(n/2) n={n}"));
        }
    }
    report.push(
        Check::assert("continuity_identities", broken.is_empty())
            .with("n_max", cfg.n_max)
            .with("checked", identities)
            .with("broken", broken.join(", ")),
    );

    // Dimension of the limsup set versus min(alpha1, alpha2).
    let grid: Vec<ExactRational> = (0..=20).map(|k| rat(k, 20)).collect();
    let mut checked = 0usize;
    let mut mismatches = 0usize;
    for n in 2..=cfg.n_max.min(12) {
        for m in 0..n {
            let d = ProblemDims::new(n, m)?;
            for u2 in grid.iter().filter(|v| **v >= rat(1, 2)) {
                for u3 in grid.iter().filter(|v| **v <= rat(1, 2)) {
                    for u1 in grid.iter().filter(|v| **v <= rat(1, 2)) {
                        let u = ParamVector::new(u1.clone(), u2.clone(), u3.clone());
                        if !check_params(&d, &u).is_feasible() {
                            continue;
                        }
                        let Ok(a) = dilation_from_params(&d, &u) else { continue };
                        let Ok((a1, a2)) = alpha_dims(&d, u2, u3) else { continue };
                        let (b, av) = mtp_vectors(&d, &a);
                        if av.iter().any(|x| !x.is_positive()) {
                            continue;
                        }
                        checked += 1;
                        if mtp_lower_bound(&b, &av)? != a1.min(a2) {
                            mismatches += 1;
                        }
                    }
                }
            }
        }
    }
    report.push(
        Check::assert("mtp_matches_alpha_dims", mismatches == 0)
            .with("checked", checked)
            .with("mismatches", mismatches),
    );
    Ok(())
}

/// Side exponents `b` of the slabs and dilations `a`, one per coordinate.
pub fn mtp_vectors(
    d: &ProblemDims,
    a: &divlab::exponents::DilationVector,
) -> (Vec<ExactRational>, Vec<ExactRational>) {
    let (k1, k2) = ((d.n() - d.m() - 1) as usize, d.m() as usize);
    let mut b = vec![rat(1, 2)];
    b.extend(std::iter::repeat_n(q(1), k1));
    b.extend(std::iter::repeat_n(rat(1, 2), k2));
    let mut av = vec![a.a1.clone()];
    av.extend(std::iter::repeat_n(a.a2.clone(), k1));
    av.extend(std::iter::repeat_n(a.a3.clone(), k2));
    (b, av)
}

fn verify_optimizer(cfg: &RunConfig, report: &mut Report) -> Res<()> {
    let n = cfg.n;
    let step = default_step();
    let ms: Vec<u32> = match cfg.m {
        Some(m) => vec![m],
        None => (0..=m1(n)).collect(),
    };
    for m in ms {
        let d = ProblemDims::new(n, m)?;
        let curve = divlab::exponents::curve_m(&d)?;
        let (lo, hi) = curve.domain();
        let mut alphas = curve.breakpoints();
        let mut a = lo.clone();
        while a <= hi {
            alphas.push(a.clone());
            a = &a + &cfg.step;
        }
        alphas.sort();
        alphas.dedup();
        let rep = verify_piecewise(&d, &alphas, &step, GridMode::WithVertices)?;
        report.push(
            Check::assert(format!("piecewise_m{m}"), rep.max_deviation.is_zero())
                .with("n", n)
                .with("checked", rep.checked)
                .with("max_deviation", rep.max_deviation.to_string())
                .with("soundness_violations", rep.soundness_violations),
        );
    }
    let mut alphas = Vec::new();
    let mut a = rat(n as i64, 2);
    while a <= q(n as i64) {
        alphas.push(a.clone());
        a = &a + &cfg.step;
    }
    let mut bad = Vec::new();
    for a in &alphas {
        if !grand_max_agrees(n, a, &step)? {
            bad.push(a.to_string());
        }
    }
    report.push(
        Check::assert("grand_max_matches_theorem", bad.is_empty())
            .with("n", n)
            .with("checked", alphas.len())
            .with("mismatches", bad.join(" ")),
    );
    Ok(())
}

fn verify_gauss(cfg: &RunConfig, report: &mut Report) -> Res<()> {
    let mut worst = 0.0f64;
    let mut count = 0usize;
    let bs: [i64; 8] = [0, 1, 2, 3, 5, 7, 11, 13];
    let mut qq = 1u64;
    while qq <= cfg.q_max {
        let table = GaussTable::new(qq);
        let root = (qq as f64).sqrt();
        for a in 1..qq.max(2) as i64 {
            if (a as u64).gcd(&qq) != 1 && qq > 1 {
                continue;
            }
            for &b in &bs {
                let g = table.sum(a, b);
                worst = worst.max((g.norm() - root).abs() / root);
                count += 1;
            }
        }
        qq += 2;
    }
    report.push(
        Check::assert("gauss_modulus", worst <= 1e-9)
            .with("q_max", cfg.q_max)
            .with("sums", count)
            .num("max_relative_error", worst),
    );
    let mut worst = 0.0f64;
    for qq in (3..=31u64).step_by(2) {
        for d in 1..=3usize {
            let b: Vec<i64> = (0..d as i64).map(|i| 2 * i + 1).collect();
            let spec = GaussSumSpec::new(qq, 2, b)?;
            let (p, dir) = (gauss_sum_multi(&spec), gauss_sum_direct(&spec)?);
            worst = worst.max((p - dir).norm() / dir.norm().max(1.0));
        }
    }
    report.push(Check::assert("gauss_product_vs_direct", worst <= 1e-10).num("max_relative_error", worst));
    Ok(())
}

fn verify_counting(_cfg: &RunConfig, report: &mut Report) -> Res<()> {
    for dim in 1..=3u32 {
        let vals: Vec<f64> = [256u64, 512, 1024, 2048]
            .iter()
            .map(|&qs| count_index_set(qs, dim).map(|r| r.normalized))
            .collect::<Result<_, _>>()?;
        let (lo, hi) = min_max(&vals);
        report.push(
            Check::assert(format!("index_set_N{dim}"), hi / lo <= 1.1)
                .num("min_normalized", lo)
                .num("max_normalized", hi),
        );
    }
    for dim in 1..=2u32 {
        let t = rat(dim as i64 + 1, dim as i64);
        let vals: Vec<f64> = [16u64, 32, 64]
            .iter()
            .map(|&qs| count_intersecting_pairs(qs, &t, &t, dim).map(|r| r.normalized))
            .collect::<Result<_, _>>()?;
        let (lo, hi) = min_max(&vals);
        report.push(
            Check::assert(format!("intersecting_pairs_N{dim}"), hi / lo <= 2.0)
                .num("min_normalized", lo)
                .num("max_normalized", hi),
        );
    }
    Ok(())
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)))
}

/// `(n, m, u)` configurations for the finite-scale suites.
fn configs(cfg: &RunConfig) -> Res<Vec<(ProblemDims, ParamVector)>> {
    let build = |n: u32, m: u32, u1: Option<ExactRational>, u2: ExactRational, u3: ExactRational| -> Res<_> {
        let d = ProblemDims::new(n, m)?;
        let u = match u1 {
            Some(u1) => ParamVector::new(u1, u2, u3),
            None => ParamVector::with_default_u1(u2, u3),
        };
        Ok((d, u))
    };
    if let Some(m) = cfg.m {
        let u2 = cfg.u2.clone().unwrap_or_else(|| rat(3, 4));
        let u3 = if m == 0 { q(0) } else { cfg.u3.clone().unwrap_or_else(|| rat(1, 4)) };
        return Ok(vec![build(cfg.n, m, cfg.u1.clone(), u2, u3)?]);
    }
    Ok(vec![
        build(2, 0, Some(rat(1, 4)), rat(3, 4), q(0))?,
        build(2, 1, Some(rat(1, 4)), rat(3, 4), rat(1, 4))?,
        build(3, 1, Some(rat(1, 4)), rat(5, 8), rat(1, 8))?,
    ])
}

fn verify_evolution(cfg: &RunConfig, report: &mut Report) -> Res<()> {
    let bump = BumpSpec::new(cfg.bump_c)?;
    for (d, u) in configs(cfg)? {
        let f = slope_fit(d, &u, &cfg.r_list, &SlabSelector::default(), &bump)?;
        report.push(
            Check::assert(format!("slope_n{}_m{}", d.n(), d.m()), f.deviation() <= cfg.tol_slope)
                .with("u", format!("({}, {}, {})", u.u1, u.u2, u.u3))
                .num("slope", f.slope)
                .num("predicted", f.predicted),
        );
    }
    // Off-scale pieces at the largest scale of the list.
    let d = ProblemDims::new(2, 1)?;
    let u = ParamVector::new(rat(1, 2), rat(3, 4), rat(1, 4));
    let rmax = cfg.r_list.iter().cloned().fold(2.0, f64::max);
    let k = rmax.log2().round() as i32;
    let sk = CounterexampleScale::new(d, 2f64.powi(k), u.clone())?;
    let sel = SlabSelector {
        target_x1: 0.95,
        ..SlabSelector::default()
    };
    let pt = select_slab_point(&sk, &sel)?;
    let at_scale = solution_at(&sk, &pt, &bump)?.normalized_magnitude / sk.predicted_growth();
    let mut worst = 0.0f64;
    for j in (k - 3)..=(k + 3) {
        if j == k || j < 2 {
            continue;
        }
        let sj = CounterexampleScale::new(d, 2f64.powi(j), u.clone())?;
        let v = off_scale_decay(&sj, &pt, &bump)?;
        worst = worst.max(v * sj.r());
    }
    report.push(
        Check::assert("off_scale_decay", worst <= 1.0)
            .with("k", k)
            .num("max_ratio_times_Rj", worst)
            .num("at_scale_ratio", at_scale),
    );
    let mut mags = Vec::new();
    for kk in [11u32, 12, 13] {
        let s = CounterexampleScale::new(d, 2f64.powi(kk as i32), u.clone())?;
        let p = select_slab_point(&s, &sel)?;
        mags.push(dyadic_partial(&p.x, p.t, 10, 14, d, &u, &bump)?.norm());
    }
    let unit = mags[0] / 11.0;
    let linear = mags
        .iter()
        .zip([11.0, 12.0, 13.0])
        .all(|(m, k)| *m >= 0.5 * k * unit && *m <= 2.0 * k * unit)
        && mags[2] > mags[0];
    report.push(
        Check::assert("dyadic_partial_growth", linear)
            .num("k11", mags[0])
            .num("k12", mags[1])
            .num("k13", mags[2]),
    );
    Ok(())
}

fn verify_slabs(cfg: &RunConfig, report: &mut Report) -> Res<()> {
    for (d, u) in configs(cfg)? {
        let w = Window::unit_cube(d.n() as usize);
        for (rule, tag) in [(DeltaRule::RInverse, "alpha1"), (DeltaRule::RInverseHalf, "alpha2")] {
            let f = dim_fit(d, &u, &cfg.r_list, rule, &w)?;
            report.push(
                Check::assert(format!("dim_{tag}_n{}_m{}", d.n(), d.m()), f.deviation() <= cfg.tol_dim)
                    .with("u", format!("({}, {}, {})", u.u1, u.u2, u.u3))
                    .num("fitted", f.fitted)
                    .num("stderr", f.stderr)
                    .num("predicted", f.predicted),
            );
        }
    }
    for (n, u3) in [(2u32, rat(1, 4)), (3, rat(1, 3))] {
        let f = degenerate_dim_check(n, &u3, &cfg.r_list)?;
        report.push(
            Check::assert(format!("degenerate_n{n}"), f.deviation() <= cfg.tol_degenerate)
                .with("u3", u3.to_string())
                .num("fitted", f.fitted)
                .num("predicted", f.predicted),
        );
    }
    Ok(())
}

fn verify_ubiquity(cfg: &RunConfig, report: &mut Report) -> Res<()> {
    let mut vals = Vec::new();
    for e in 6..=9 {
        let cell = UnitCell::from_exponents(2f64.powi(e), 1.5, 1.5, 2);
        vals.push(cell.measure(OmegaMethod::Sweep)?.value);
    }
    let (lo, hi) = min_max(&vals);
    report.push(
        Check::assert("omega_balanced_stable", lo > 0.0 && hi / lo <= 2.0)
            .num("calibrated_c", lo)
            .num("max", hi),
    );
    let d = ProblemDims::new(2, 1)?;
    let u = ParamVector::new(rat(1, 2), rat(3, 4), rat(1, 4));
    let a = dilation_from_params(&d, &u)?;
    let om = omega_measure(d, 4096.0, &u, &a, OmegaMethod::Sweep)?;
    report.push(Check::assert("omega_single_cell", (om.value - 1.0).abs() < 1e-12).num("measure", om.value));
    let ball = BallSpec {
        center: vec![0.5, 0.5],
        radius: 0.45,
    };
    let d0 = ProblemDims::new(2, 0)?;
    let u0 = ParamVector::new(rat(7, 16), rat(13, 16), q(0));
    let a0 = dilation_from_params(&d0, &u0)?;
    let mut ratios = Vec::new();
    let mut worst_gap: f64 = 0.0;
    for k in [22, 24, 26, 28] {
        let r = 2f64.powi(k);
        let rep = divlab::slabs::ubiquity_check(d0, r, &u0, &ball, cfg.seed, cfg.samples.min(200_000))?;
        // the ball should see the cell's proportion up to sampling noise and boundary cells
        let cell = omega_measure(d0, r, &u0, &a0, OmegaMethod::Sweep)?.value;
        worst_gap = worst_gap.max((rep.ratio - cell).abs() - 5.0 * rep.std_error);
        ratios.push(rep.ratio);
    }
    let (lo, hi) = min_max(&ratios);
    report.push(
        Check::assert("ubiquity_stable", lo > 0.0 && hi / lo <= 2.0)
            .num("calibrated_c", lo)
            .num("max", hi),
    );
    report.push(Check::assert("ubiquity_matches_cell", worst_gap <= 0.02).num("excess_gap", worst_gap));
    let decay = perturbation_decay(31, 5, &[3], &[320.33, 640.67, 1281.33], 1, Cutoff::BSpline(2), 0.25)?;
    report.push(
        Check::assert("perturbation_rate_d1_N1", (decay.fitted_exponent + 1.0).abs() <= 0.5)
            .num("fitted_exponent", decay.fitted_exponent),
    );
    Ok(())
}

// -------------------------------------------------------------------- sweep

pub const COMPONENTS: [&str; 3] = ["slope", "dim", "omega"];

fn input_hash(parts: &[String]) -> String {
    let mut h = Sha256::new();
    h.update(parts.join("|").as_bytes());
    hex::encode(&h.finalize()[..8])
}

/// Rows of an existing sweep CSV keyed by their `input_hash` column.
fn existing_rows(path: &Path, header: &[String]) -> Res<BTreeMap<String, Vec<String>>> {
    let mut out = BTreeMap::new();
    if !path.exists() {
        return Ok(out);
    }
    let mut r = csv::Reader::from_path(path)?;
    let found: Vec<String> = r.headers()?.iter().map(String::from).collect();
    if found != header {
        return Ok(out);
    }
    for rec in r.records() {
        let rec = rec?;
        let row: Vec<String> = rec.iter().map(String::from).collect();
        out.insert(row[0].clone(), row);
    }
    Ok(out)
}

fn r_key(cfg: &RunConfig) -> String {
    cfg.r_list.iter().map(|r| fmt_f64(*r)).collect::<Vec<_>>().join(",")
}

pub fn cmd_sweep(cfg: &RunConfig, component: &str, report: &mut Report) -> Res<PathBuf> {
    if !COMPONENTS.contains(&component) {
        return Err(Failure::Config(format!("unknown sweep component '{component}'")));
    }
    let dir = ensure_out(cfg)?;
    let path = dir.join(format!("sweep_{component}.csv"));
    let n = cfg.n;
    let m = cfg.m.unwrap_or(1.min(n - 1));
    let d = ProblemDims::new(n, m)?;
    let header: Vec<String> = match component {
        "slope" => vec!["input_hash", "n", "m", "u1_num", "u1_den", "u2_num", "u2_den", "u3_num", "u3_den", "slope", "predicted", "deviation"],
        "dim" => vec!["input_hash", "n", "m", "u1_num", "u1_den", "u2_num", "u2_den", "u3_num", "u3_den", "fitted_alpha1", "fitted_alpha2", "fitted_min", "predicted_alpha1", "predicted_alpha2", "predicted_min"],
        _ => vec!["input_hash", "n", "m", "u1_num", "u1_den", "u2_num", "u2_den", "u3_num", "u3_den", "R", "measure", "std_error"],
    }
    .into_iter()
    .map(String::from)
    .collect();
    let old = existing_rows(&path, &header)?;
    let bump = BumpSpec::new(cfg.bump_c)?;
    let mut rows: Vec<Vec<String>> = Vec::new();
    let (mut reused, mut computed) = (0usize, 0usize);
    let u3s: Vec<ExactRational> = if m == 0 { vec![q(0)] } else { cfg.sweep_u3.clone() };
    // Rows finished before an error are still written, so a rerun resumes.
    let outcome = (|| -> Res<()> {
        for u2 in &cfg.sweep_u2 {
            for u3 in &u3s {
                let u = match &cfg.u1 {
                    Some(u1) => ParamVector::new(u1.clone(), u2.clone(), u3.clone()),
                    None => ParamVector::with_default_u1(u2.clone(), u3.clone()),
                };
                let mut prefix = vec![n.to_string(), m.to_string()];
                for r in [&u.u1, &u.u2, &u.u3] {
                    let (a, b) = split_rat(r);
                    prefix.push(a);
                    prefix.push(b);
                }
                let rs: Vec<f64> = if component == "omega" { cfg.r_list.clone() } else { vec![0.0] };
                for r in rs {
                    let mut key = vec![component.to_string(), r_key(cfg), fmt_f64(cfg.bump_c), cfg.seed.to_string(), cfg.samples.to_string()];
                    key.extend(prefix.iter().cloned());
                    if component == "omega" {
                        key.push(fmt_f64(r));
                    }
                    let h = input_hash(&key);
                    if let Some(row) = old.get(&h) {
                        rows.push(row.clone());
                        reused += 1;
                        continue;
                    }
                    let mut row = vec![h];
                    row.extend(prefix.iter().cloned());
                    match component {
                        "slope" => {
                            let f = slope_fit(d, &u, &cfg.r_list, &SlabSelector::default(), &bump)?;
                            row.extend([fmt_f64(f.slope), fmt_f64(f.predicted), fmt_f64(f.deviation())]);
                        }
                        "dim" => {
                            let w = Window::unit_cube(n as usize);
                            let f1 = dim_fit(d, &u, &cfg.r_list, DeltaRule::RInverse, &w)?;
                            let f2 = dim_fit(d, &u, &cfg.r_list, DeltaRule::RInverseHalf, &w)?;
                            row.extend([
                                fmt_f64(f1.fitted),
                                fmt_f64(f2.fitted),
                                fmt_f64(f1.fitted.min(f2.fitted)),
                                fmt_f64(f1.predicted),
                                fmt_f64(f2.predicted),
                                fmt_f64(f1.predicted.min(f2.predicted)),
                            ]);
                        }
                        _ => {
                            let a = dilation_from_params(&d, &u)?;
                            let method = if d.n() - d.m() <= 2 {
                                OmegaMethod::Sweep
                            } else {
                                OmegaMethod::MonteCarlo { seed: cfg.seed, samples: cfg.samples }
                            };
                            let e = omega_measure(d, r, &u, &a, method)?;
                            row.extend([fmt_f64(r), fmt_f64(e.value), fmt_f64(e.std_error)]);
                        }
                    }
                    computed += 1;
                    rows.push(row);
                }
            }
        }
        Ok(())
    })();
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(&path)?;
    w.write_record(&header)?;
    for r in &rows {
        w.write_record(r)?;
    }
    w.flush()?;
    outcome?;
    report.push(
        Check::new(format!("sweep_{component}"), Status::Measured)
            .with("rows", rows.len())
            .with("reused", reused)
            .with("computed", computed)
            .with("file", path.display().to_string()),
    );
    Ok(path)
}
