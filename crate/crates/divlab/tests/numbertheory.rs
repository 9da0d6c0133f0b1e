use divlab::numbertheory::{
    count_index_set, count_intersecting_pairs, gauss_sum_1d, gauss_sum_direct, gauss_sum_multi,
    mobius, perturbation_check, sieve, totient, totient_via_mobius, Cutoff, GaussSumSpec,
    GaussTable,
};
use divlab::rat;
use num_complex::Complex64;
use num_integer::Integer;
use proptest::prelude::*;

fn naive_phi(q: u64) -> u64 {
    (1..=q).filter(|k| k.gcd(&q) == 1).count() as u64
}

fn naive_mu(mut d: u64) -> i8 {
    let mut sign = 1i8;
    let mut p = 2;
    while p * p <= d {
        if d.is_multiple_of(p) {
            d /= p;
            if d.is_multiple_of(p) {
                return 0;
            }
            sign = -sign;
        }
        p += 1;
    }
    if d > 1 {
        sign = -sign;
    }
    sign
}

fn naive_gauss(a: i64, b: i64, q: u64) -> Complex64 {
    (0..q as i64)
        .map(|n| {
            let ph = (a as f64 * (n * n) as f64 + b as f64 * n as f64) / q as f64;
            Complex64::from_polar(1.0, std::f64::consts::TAU * ph.fract())
        })
        .sum()
}

#[test]
fn sieve_matches_trial_division() {
    let sv = sieve(2000);
    for q in 1..=2000u64 {
        assert_eq!(sv.phi(q as usize), naive_phi(q), "phi({q})");
        assert_eq!(sv.mu(q as usize), naive_mu(q), "mu({q})");
        assert_eq!(totient(q), naive_phi(q));
        assert_eq!(mobius(q), naive_mu(q));
    }
    assert_eq!(sv.primes().len(), 303);
}

proptest! {
    #[test]
    fn totient_mobius_inversion(q in 1u64..3000) {
        prop_assert_eq!(totient_via_mobius(q), totient(q));
    }

    #[test]
    fn gauss_sums_agree_with_naive(q in (1u64..200).prop_map(|k| 2 * k + 1), a in -500i64..500, b in -500i64..500) {
        prop_assume!(!(a.rem_euclid(q as i64) as u64).is_multiple_of(q) && (a.rem_euclid(q as i64) as u64).gcd(&q) == 1);
        let naive = naive_gauss(a, b, q);
        let fast = GaussTable::new(q).sum(a, b);
        let plain = gauss_sum_1d(a, b, q);
        prop_assert!((fast - naive).norm() < 1e-8);
        prop_assert!((plain - naive).norm() < 1e-8);
        prop_assert!((fast.norm() - (q as f64).sqrt()).abs() < 1e-9 * (q as f64).sqrt());
    }

    #[test]
    fn multi_sum_factorizes(q in (1u64..12).prop_map(|k| 2 * k + 1), a in 1i64..100, b in prop::collection::vec(-50i64..50, 1..=3)) {
        prop_assume!((a as u64).gcd(&q) == 1);
        let spec = GaussSumSpec::new(q, a, b.clone()).unwrap();
        let direct = gauss_sum_direct(&spec).unwrap();
        let product: Complex64 = b.iter().map(|&bi| naive_gauss(a, bi, q)).product();
        prop_assert!((gauss_sum_multi(&spec) - direct).norm() < 1e-9 * direct.norm().max(1.0));
        prop_assert!((product - direct).norm() < 1e-8 * direct.norm().max(1.0));
    }
}

#[test]
fn bad_specs_rejected() {
    assert!(GaussSumSpec::new(10, 1, vec![0]).is_err());
    assert!(GaussSumSpec::new(9, 3, vec![0]).is_err());
}

#[test]
fn index_set_by_enumeration() {
    for qs in [4u64, 8, 13, 32, 50] {
        for dim in 1..=3u32 {
            let mut brute = 0u64;
            for q in 1..qs {
                if q % 2 == 0 || 2 * q < qs {
                    continue;
                }
                let units = (0..q).filter(|p| p.gcd(&q) == 1).count() as u64;
                brute += units * q.pow(dim - 1);
            }
            let rep = count_index_set(qs, dim).unwrap();
            assert_eq!(rep.count, brute.into(), "Q={qs} N={dim}");
            let norm = brute as f64 / (qs as f64).powi(dim as i32 + 1);
            assert!((rep.normalized - norm).abs() < 1e-12);
        }
    }
}

/// Tuple-by-tuple count of intersecting rectangle pairs, exact in integers.
fn brute_pairs(qs: u64, t1: (u32, u32), t2: (u32, u32), dim: u32) -> u64 {
    let qs_list: Vec<u64> = (1..qs).filter(|q| q % 2 == 1 && 2 * q >= qs).collect();
    // |p/q - r/s| <= 2 Q^{-a/b}  <=>  |p s - r q|^b Q^a <= (2 q s)^b
    let close = |p: u64, q: u64, r: u64, s: u64, (a, b): (u32, u32)| {
        let diff = (p as i128 * s as i128 - r as i128 * q as i128).unsigned_abs();
        diff.pow(b) * (qs as u128).pow(a) <= (2 * q as u128 * s as u128).pow(b)
    };
    let mut tuples = Vec::new();
    for &q in &qs_list {
        let rest = (dim - 1) as usize;
        let total = q.pow(rest as u32);
        for p1 in (0..q).filter(|p| p.gcd(&q) == 1) {
            for code in 0..total {
                let mut c = code;
                let ps: Vec<u64> = (0..rest).map(|_| { let v = c % q; c /= q; v }).collect();
                tuples.push((q, p1, ps));
            }
        }
    }
    let mut count = 0;
    for (q, p1, ps) in &tuples {
        for (s, r1, rs) in &tuples {
            if close(*p1, *q, *r1, *s, t1) && ps.iter().zip(rs).all(|(p, r)| close(*p, *q, *r, *s, t2)) {
                count += 1;
            }
        }
    }
    count
}

#[test]
fn intersecting_pairs_by_enumeration() {
    for (qs, dim, t1, t2) in [(8u64, 1u32, (2, 1), (2, 1)), (16, 1, (3, 2), (3, 2)), (12, 2, (2, 1), (3, 2)), (16, 2, (3, 2), (1, 1)), (8, 3, (2, 1), (2, 1))] {
        let rep = count_intersecting_pairs(qs, &rat(t1.0 as i64, t1.1 as i64), &rat(t2.0 as i64, t2.1 as i64), dim).unwrap();
        assert_eq!(rep.count, brute_pairs(qs, t1, t2, dim).into(), "Q={qs} N={dim}");
    }
}

#[test]
fn whole_periods_are_exact() {
    for (q, p1, pp) in [(31u64, 5i64, vec![3i64]), (15, 2, vec![1, 7]), (9, 4, vec![2, 0, 5])] {
        let rep = perturbation_check(q, p1, &pp, 0.0, 1, Cutoff::Periods(2)).unwrap();
        assert!(rep.error <= 1e-9 * rep.main_term.norm().max(1.0), "q={q}: {}", rep.error);
    }
}

#[test]
fn smooth_cutoff_error_small_at_q_squared() {
    let rep = perturbation_check(31, 5, &[3], 961.0, 1, Cutoff::SmoothBump).unwrap();
    assert!(rep.error <= 0.1 * rep.main_term.norm());
}
