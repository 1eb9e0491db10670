//! Randomised invariants of the arithmetic, analytic and combinatorial
//! kernels.

use std::sync::OnceLock;

use divmoment::arith::{is_square_free, kernel_decompose, sieve_divisors, DivisorTable};
use divmoment::quadruples::{exact_sqrt_relation, gap_lower_bound, Verdict};
use divmoment::trig_kernel::{si_co_closed, si_co_definitional, si_co_join, TrigArgs};
use divmoment::voronoi::delta_exact;
use divmoment::zeta_line::{abs_zeta_half_sq, atkinson_h, rs_z, zeta_em, CriticalLineConfig, IntegralCache};
use divmoment::Exec;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn table() -> &'static DivisorTable {
    static TABLE: OnceLock<DivisorTable> = OnceLock::new();
    TABLE.get_or_init(|| sieve_divisors(1_000_000).unwrap())
}

fn cache() -> &'static IntegralCache {
    static CACHE: OnceLock<IntegralCache> = OnceLock::new();
    CACHE.get_or_init(|| {
        let mut c = IntegralCache::new(CriticalLineConfig::default()).unwrap();
        c.extend_to(2000.0, Exec::Parallel).unwrap();
        c
    })
}

/// `sqrt(n)` as an unevaluated sum `hi + lo` accurate to about 1e-32
/// relative.
fn sqrt_dd(n: u64) -> (f64, f64) {
    let x = n as f64;
    let s = x.sqrt();
    let e = (-s).mul_add(s, x);
    (s, e / (2.0 * s))
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// `sqrt a + sqrt b - sqrt c - sqrt d` in double-double arithmetic.
fn alpha_dd(a: u64, b: u64, c: u64, d: u64) -> f64 {
    let terms = [sqrt_dd(a), sqrt_dd(b), sqrt_dd(c), sqrt_dd(d)];
    let signs = [1.0, 1.0, -1.0, -1.0];
    let (mut hi, mut lo) = (0.0, 0.0);
    for ((h, l), s) in terms.into_iter().zip(signs) {
        let (t, err) = two_sum(hi, s * h);
        hi = t;
        lo += err + s * l;
    }
    hi + lo
}

#[test]
fn exact_oracle_matches_extended_precision() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut equal = 0;
    for i in 0..100_000 {
        let q: [u64; 4] = if i % 10 == 0 {
            // planted solution: common kernel, m1 + m2 = m3 + m4
            let l = loop {
                let l = rng.gen_range(1..50u64);
                if is_square_free(l) {
                    break l;
                }
            };
            let (m1, m2) = (rng.gen_range(1..100u64), rng.gen_range(1..100u64));
            let m3 = rng.gen_range(1..m1 + m2);
            [l * m1 * m1, l * m2 * m2, l * m3 * m3, l * (m1 + m2 - m3).pow(2)]
        } else {
            std::array::from_fn(|_| rng.gen_range(1..=1_000_000))
        };
        let verdict = exact_sqrt_relation(q[0], q[1], q[2], q[3]);
        let alpha = alpha_dd(q[0], q[1], q[2], q[3]).abs();
        let threshold = gap_lower_bound(q) / 10.0;
        match verdict {
            Verdict::Equal => {
                equal += 1;
                assert!(alpha < threshold, "{q:?}: alpha {alpha:e}");
            }
            Verdict::NotEqual => assert!(alpha >= threshold, "{q:?}: alpha {alpha:e} below {threshold:e}"),
        }
    }
    assert!(equal >= 10_000);
}

#[test]
fn riemann_siegel_matches_euler_maclaurin_on_random_heights() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let u: f64 = rng.gen_range(50.0..1e5);
        let em = zeta_em(Complex64::new(0.5, u)).norm_sqr();
        let z = rs_z(u, 4);
        let rel = (z * z - em).abs() / em.max(1e-3);
        assert!(rel <= 1e-5, "u = {u}: {rel:e}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn kernel_times_square_is_n(n in 1u64..=1_000_000) {
        let k = kernel_decompose(n, None).unwrap();
        prop_assert_eq!(k.l * k.m * k.m, n);
        prop_assert!((2..).take_while(|p| p * p <= k.l).all(|p| !k.l.is_multiple_of(p * p)));
    }

    #[test]
    fn hyperbola_identity(x in 1u64..=1_000_000) {
        let by_floor: u64 = (1..=x).map(|q| x / q).sum();
        prop_assert_eq!(table().prefix(x), by_floor as i64);
    }

    #[test]
    fn delta_jumps_by_d_at_integers(n in 2u64..999_999) {
        let t = table();
        let jump = delta_exact(n as f64 + 1e-9, t).unwrap() - delta_exact(n as f64 - 1e-9, t).unwrap();
        prop_assert!((jump - t.d(n) as f64).abs() < 1e-3);
    }

    #[test]
    fn zeta_square_nonnegative(u in 0.0f64..2e4) {
        prop_assert!(abs_zeta_half_sq(u, &CriticalLineConfig::default()) >= 0.0);
    }

    #[test]
    fn cached_integral_strictly_increasing(a in 0.0f64..1999.0, gap in 1e-3f64..1.0) {
        let c = cache();
        prop_assert!(c.integral(a + gap).unwrap() > c.integral(a).unwrap());
    }

    #[test]
    fn atkinson_weight_sign_and_size(t in 10.0f64..1e5, n in 1u64..1000) {
        prop_assume!(n as f64 <= t);
        let d = table().d(n);
        let h = atkinson_h(t, n, d);
        prop_assert_eq!(h < 0.0, n % 2 == 1);
        let bound = 4.0 * d as f64 * (n as f64).powf(-0.75) * t.powf(0.25);
        prop_assert!(h.abs() <= bound);
    }

    #[test]
    fn relation_symmetries(a in 1u64..10_000, b in 1u64..10_000, c in 1u64..10_000, d in 1u64..10_000) {
        let v = exact_sqrt_relation(a, b, c, d);
        prop_assert_eq!(v, exact_sqrt_relation(b, a, c, d));
        prop_assert_eq!(v, exact_sqrt_relation(a, b, d, c));
        prop_assert_eq!(v, exact_sqrt_relation(c, d, a, b));
    }

    #[test]
    fn scaled_relations_hold(l in 1u64..100, m1 in 1u64..200, m2 in 1u64..200, cut in 0.0f64..1.0) {
        let m3 = 1 + ((m1 + m2 - 2) as f64 * cut) as u64;
        let m4 = m1 + m2 - m3;
        let sq = |m: u64| l * m * m;
        prop_assert_eq!(exact_sqrt_relation(sq(m1), sq(m2), sq(m3), sq(m4)), Verdict::Equal);
        prop_assert_eq!(exact_sqrt_relation(sq(m1), sq(m2), sq(m3), sq(m4) + 1), Verdict::NotEqual);
    }

    #[test]
    fn closed_form_matches_definition(alphas in prop::collection::vec(-10.0f64..10.0, 1..=10)) {
        let k = alphas.len();
        let args = TrigArgs::new(alphas).unwrap();
        let (si, co) = si_co_definitional(&args).unwrap();
        let (si_c, co_c) = si_co_closed(&args);
        let tol = (k as f64).exp2() * 1e-12;
        prop_assert!((si - si_c).abs() <= tol && (co - co_c).abs() <= tol);
    }

    #[test]
    fn split_recurrence(alphas in prop::collection::vec(-10.0f64..10.0, 2..=10), cut in 1usize..10) {
        let m = cut.min(alphas.len() - 1);
        let whole = si_co_definitional(&TrigArgs::new(alphas.clone()).unwrap()).unwrap();
        let left = si_co_definitional(&TrigArgs::new(alphas[..m].to_vec()).unwrap()).unwrap();
        let right = si_co_definitional(&TrigArgs::new(alphas[m..].to_vec()).unwrap()).unwrap();
        let joined = si_co_join(left, right);
        prop_assert!((whole.0 - joined.0).abs() <= 1e-12 && (whole.1 - joined.1).abs() <= 1e-12);
    }

    #[test]
    fn four_term_sine_vanishes_on_balanced_angles(a in -10.0f64..10.0, b in -10.0f64..10.0, c in -10.0f64..10.0) {
        let (si, _) = si_co_definitional(&TrigArgs::new(vec![a, b, c, -(a + b + c)]).unwrap()).unwrap();
        prop_assert!(si.abs() <= 16e-12);
    }
}
