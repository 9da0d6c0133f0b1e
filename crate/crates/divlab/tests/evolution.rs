use divlab::evolution::{
    datum_norm, dyadic_partial, evolve_g, evolve_h2, hs_norm_ratio, off_scale_decay,
    select_slab_point, slope_fit, solution_at, solution_at_point, BumpSpec, CounterexampleScale,
    SlabPoint, SlabSelector,
};
use divlab::exponents::{ParamVector, ProblemDims};
use divlab::rat;
use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::TAU;

fn e(x: f64) -> Complex64 {
    Complex64::from_polar(1.0, TAU * x)
}

fn bump_profile(c: f64, x: f64) -> f64 {
    let y = x / c;
    if y.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - y * y)).exp()
    }
}

/// Midpoint rule for `∫ w((ξ - centre)/width) e(xξ + tξ²) dξ`.
fn brute_integral(c: f64, centre: f64, width: f64, x: f64, t: f64, n: usize) -> Complex64 {
    let (lo, hi) = (centre - c * width, centre + c * width);
    let h = (hi - lo) / n as f64;
    (0..n)
        .map(|k| {
            let xi = lo + (k as f64 + 0.5) * h;
            e(x * xi + t * xi * xi) * bump_profile(c, (xi - centre) / width) * h
        })
        .sum()
}

fn scale(n: u32, m: u32, r: f64, u: (i64, i64, i64, i64, i64, i64)) -> CounterexampleScale {
    let u = ParamVector::new(rat(u.0, u.1), rat(u.2, u.3), rat(u.4, u.5));
    CounterexampleScale::new(ProblemDims::new(n, m).unwrap(), r, u).unwrap()
}

#[test]
fn bump_integral_matches_simpson() {
    let b = BumpSpec::standard();
    let n = 20_000;
    let h = 2.0 * b.c() / n as f64;
    let simpson: f64 = (0..=n)
        .map(|k| {
            let w = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
            w * bump_profile(b.c(), -b.c() + k as f64 * h)
        })
        .sum::<f64>()
        * h
        / 3.0;
    assert!((b.integral() - simpson).abs() < 1e-12);
    let osc0 = b.oscillatory(0.0, 0.0).unwrap();
    assert!((osc0.re - simpson).abs() < 1e-10 && osc0.im.abs() < 1e-14);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn oscillatory_matches_brute_force(a in -200.0f64..200.0, b in -300.0f64..300.0) {
        let bump = BumpSpec::standard();
        let got = bump.oscillatory(a, b).unwrap();
        let want = brute_integral(bump.c(), 0.0, 1.0, a, b, 200_000);
        prop_assert!((got - want).norm() < 1e-8, "{got} vs {want}");
        let conj = bump.oscillatory(-a, -b).unwrap();
        prop_assert!((conj - got.conj()).norm() < 1e-10);
    }

    /// The g factor against direct integration of its Fourier profile,
    /// a bump of width `R^{1/2}` centred at `-R/2`.
    #[test]
    fn g_factor_matches_direct_integral(x1 in -0.5f64..0.5, t in 0.0f64..0.02) {
        let s = scale(2, 0, 256.0, (1, 4, 3, 4, 0, 1));
        let bump = BumpSpec::standard();
        let got = evolve_g(&s, x1, t, &bump).unwrap();
        let want = brute_integral(bump.c(), -128.0, 16.0, x1, t, 400_000);
        prop_assert!((got - want).norm() < 1e-7 * want.norm().max(1.0), "{got} vs {want}");
    }

    /// The h2 factor against a sum of translated bumps at spacing `D2`.
    #[test]
    fn h2_factor_matches_direct_sum(x in -0.5f64..0.5, t in 0.0f64..0.01) {
        let s = scale(2, 1, 1024.0, (1, 4, 3, 4, 1, 4));
        let bump = BumpSpec::standard();
        let got = evolve_h2(&s, &[x], t, &bump).unwrap();
        let k = s.h2_max();
        let want: Complex64 = (-k..=k)
            .map(|l| brute_integral(bump.c(), s.d2() * l as f64, 1.0, x, t, 20_000))
            .sum();
        prop_assert!((got - want).norm() < 1e-7 * want.norm().max(1.0), "{got} vs {want}");
    }
}

#[test]
fn exact_phases_agree_with_general_point() {
    let bump = BumpSpec::standard();
    for (n, m, u) in [(2u32, 0u32, (1, 4, 3, 4, 0, 1)), (3, 1, (1, 4, 5, 8, 1, 8)), (3, 0, (1, 4, 5, 8, 0, 1))] {
        let s = scale(n, m, 2f64.powi(12), u);
        for target in [0.2, 0.5, 0.8] {
            let sel = SlabSelector { target_x1: target, relative_offset: 0.3, ..SlabSelector::default() };
            let pt = select_slab_point(&s, &sel).unwrap();
            let exact = solution_at(&s, &pt, &bump).unwrap();
            let general = solution_at_point(&s, &pt.x, pt.t, &bump).unwrap();
            let rel = (exact.product - general.product).norm() / exact.product.norm();
            assert!(rel < 1e-6, "n={n} m={m} x1={target}: {rel:e}");
        }
    }
}

#[test]
fn slab_points_validate_invariants() {
    let s = scale(3, 1, 4096.0, (1, 4, 3, 4, 1, 4));
    let q = s.moduli()[0];
    assert!(q > 1);
    assert!(SlabPoint::new(&s, q, 1, vec![0], vec![0], vec![0.0; 3]).is_ok());
    assert!(SlabPoint::new(&s, q + 1, 1, vec![0], vec![0], vec![0.0; 3]).is_err());
    assert!(SlabPoint::new(&s, q, q as i64, vec![0], vec![0], vec![0.0; 3]).is_err());
    assert!(SlabPoint::new(&s, q, 1, vec![0], vec![0], vec![0.5, 0.0, 0.0]).is_err());
    assert!(SlabPoint::new(&s, q, 1, vec![], vec![0], vec![0.0; 3]).is_err());
}

#[test]
fn norm_is_plancherel() {
    // ‖g‖² = R^{1/2} ∫w²; the lattice factors add disjoint bumps.
    let bump = BumpSpec::standard();
    let s = scale(2, 1, 4096.0, (1, 4, 3, 4, 1, 4));
    let d = datum_norm(&s, &bump).unwrap();
    assert!((d.g - 8.0 * bump.l2_norm()).abs() < 1e-12);
    let count = (2 * s.h2_max() + 1) as f64;
    assert!((d.h2 - count.sqrt() * bump.l2_norm()).abs() < 1e-12);
    assert_eq!(d.h1, 1.0);
}

#[test]
fn slope_tracks_prediction() {
    let bump = BumpSpec::standard();
    let rs: Vec<f64> = (10..=16).map(|k| 2f64.powi(k)).collect();
    let u = ParamVector::new(rat(1, 2), rat(3, 4), rat(1, 4));
    let f = slope_fit(ProblemDims::new(2, 1).unwrap(), &u, &rs, &SlabSelector::default(), &bump).unwrap();
    assert!((f.predicted - 0.375).abs() < 1e-15);
    assert!(f.deviation() <= 0.05, "slope {}", f.slope);
    assert!(slope_fit(ProblemDims::new(2, 1).unwrap(), &u, &rs[..3], &SlabSelector::default(), &bump).is_err());
}

#[test]
fn off_scale_is_small_next_to_on_scale() {
    let bump = BumpSpec::standard();
    let d = ProblemDims::new(2, 1).unwrap();
    let u = ParamVector::new(rat(1, 2), rat(3, 4), rat(1, 4));
    let sel = SlabSelector { target_x1: 0.95, ..SlabSelector::default() };
    let sk = CounterexampleScale::new(d, 2f64.powi(16), u.clone()).unwrap();
    let pt = select_slab_point(&sk, &sel).unwrap();
    let on = off_scale_decay(&sk, &pt, &bump).unwrap();
    for j in [13, 14, 15, 17, 18, 19] {
        let sj = CounterexampleScale::new(d, 2f64.powi(j), u.clone()).unwrap();
        let off = off_scale_decay(&sj, &pt, &bump).unwrap();
        assert!(off * sj.r() <= 1.0, "j={j}");
        assert!(off < 1e-2 * on, "j={j}: {off} vs {on}");
    }
}

#[test]
fn dyadic_window_guarded() {
    let bump = BumpSpec::standard();
    let d = ProblemDims::new(2, 1).unwrap();
    let u = ParamVector::new(rat(1, 2), rat(3, 4), rat(1, 4));
    assert!(dyadic_partial(&[0.5, 0.0], 0.001, 10, 19, d, &u, &bump).is_err());
    assert!(dyadic_partial(&[0.5, 0.0], 0.001, 10, 9, d, &u, &bump).is_err());
}

#[test]
fn sobolev_ratio_near_one_at_frequency_r() {
    let bump = BumpSpec::standard();
    let s = scale(2, 1, 4096.0, (1, 2, 3, 4, 1, 4));
    assert_eq!(hs_norm_ratio(&s, 0.0, &bump).unwrap(), 1.0);
    let v = hs_norm_ratio(&s, 0.5, &bump).unwrap();
    assert!((0.5..=2.0).contains(&v), "{v}");
}

#[test]
fn bump_width_bounds() {
    assert!(BumpSpec::new(0.0).is_err());
    assert!(BumpSpec::new(0.2).is_err());
    assert!(BumpSpec::new(0.01).is_ok());
}
