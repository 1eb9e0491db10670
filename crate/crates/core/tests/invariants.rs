//! Order-of-magnitude and monotonicity checks on fixed grids.

use divmoment::arith::{d2_partial_sums, sieve_divisors, SumRange};
use divmoment::moments::{moment_integral, Family, MomentOptions, MomentSpec, Resources};
use divmoment::special_sums::{compute_c1, compute_c2, SumKind};
use divmoment::voronoi::voronoi_rms_error;
use divmoment::Exec;

#[test]
fn head_sum_band() {
    let table = sieve_divisors(1_000_000).unwrap();
    let scaled: Vec<f64> = [1e3, 1e4, 1e5, 1e6]
        .iter()
        .map(|&z: &f64| {
            let head = d2_partial_sums(z as u64, &table, SumRange::Head).unwrap().value;
            head / (z.sqrt() * z.ln().powi(3))
        })
        .collect();
    let (lo, hi) = scaled
        .iter()
        .fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
    assert!(lo > 0.0);
    assert!(hi / lo < 2.0, "{scaled:?}");
}

#[test]
fn special_sums_monotone_in_z() {
    let table = sieve_divisors(2000).unwrap();
    let mut last = [0.0; 3];
    for z in [10u64, 50, 100, 500, 1000, 2000] {
        let now = [
            compute_c1(z, &table, Exec::Parallel).unwrap().value,
            compute_c2(z, &table, SumKind::C21, Exec::Parallel).unwrap().value,
            compute_c2(z, &table, SumKind::C22, Exec::Parallel).unwrap().value,
        ];
        for i in 0..3 {
            assert!(now[i] >= last[i], "sum {i} decreased at z = {z}");
        }
        last = now;
    }
}

/// The three-one sum is bounded, but its partial sums still climb at desk
/// scale: families with two small and one large root leave a tail of order
/// `(log M)^8 / M`, `M = sqrt z`, which only turns down near `z = 10^7`.
/// Measured steps `c1(2z) - c1(z)` are 647, 917 and 852 at `z = 10^3, 10^4,
/// 10^5`, so the halving per decade does not hold yet.
#[test]
#[ignore = "pre-asymptotic: steps 647, 917, 852 do not halve per decade below z = 10^7"]
fn three_one_sum_settles() {
    let table = sieve_divisors(200_000).unwrap();
    let c1 = |z| compute_c1(z, &table, Exec::Parallel).unwrap().value;
    let steps: Vec<f64> = [1000u64, 10_000, 100_000].iter().map(|&z| c1(2 * z) - c1(z)).collect();
    assert!(steps.windows(2).all(|w| w[1] <= w[0] / 2.0), "{steps:?}");
}

#[test]
fn diagonal_product_has_log_fourth_order() {
    let table = sieve_divisors(1_000_000).unwrap();
    let scaled: Vec<f64> = [1_000u64, 10_000, 100_000, 1_000_000]
        .iter()
        .map(|&z| compute_c2(z, &table, SumKind::C21, Exec::Parallel).unwrap().normalized())
        .collect();
    let (lo, hi) = scaled
        .iter()
        .fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
    assert!(lo > 0.0 && hi / lo < 4.0, "{scaled:?}");
}

#[test]
fn voronoi_error_shrinks_with_truncation() {
    let x = 1e5;
    let table = sieve_divisors(200_001).unwrap();
    let rms: Vec<f64> = [316u64, 5623, 100_000]
        .iter()
        .map(|&n| voronoi_rms_error(x, n, 200, 1, &table, Exec::Parallel).unwrap())
        .collect();
    assert!(rms.windows(2).all(|w| w[1] <= w[0]), "{rms:?}");
}

#[test]
fn even_moments_nonnegative_and_additive_in_length() {
    let table = sieve_divisors(600_000).unwrap();
    let opts = MomentOptions::default();
    for family in [Family::Delta, Family::DeltaStar] {
        for p in [2, 4] {
            let run = |h| {
                let spec = MomentSpec::new(family, p, 1e5, h, 50.0).unwrap();
                moment_integral(&spec, &Resources::with_table(&table), &opts).unwrap().direct_value
            };
            let (short, long) = (run(2e4), run(4e4));
            assert!(short >= 0.0);
            let r = long / short;
            assert!((1.5..=2.5).contains(&r), "{family} p = {p}: {r}");
        }
    }
}
