//! The divisor error term `Delta(x)`, its alternating analogue, and their
//! truncated Voronoi series.

use std::f64::consts::{FRAC_PI_4, PI, SQRT_2};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arith::{DivisorTable, EULER_GAMMA};
use crate::error::{Error, Result};
use crate::par::{map_blocks, Exec};
use crate::sum::{DoubleDouble, Neumaier};

/// Phases above this many radians are reduced in double-double.
pub const DD_PHASE_THRESHOLD: f64 = 65536.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoronoiParams {
    pub x: f64,
    pub trunc: u64,
}

impl VoronoiParams {
    pub fn new(x: f64, trunc: u64) -> Result<Self> {
        let p = Self { x, trunc };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x.is_finite() && self.x > 0.0) {
            return Err(Error::InvalidArgument(format!("x = {} must be positive", self.x)));
        }
        if self.trunc as f64 > self.x {
            return Err(Error::InvalidArgument(format!(
                "truncation {} exceeds x = {}",
                self.trunc, self.x
            )));
        }
        Ok(())
    }
}

/// `x (ln x + 2 gamma - 1)`, the smooth part of the divisor sum.
#[inline]
pub fn smooth_part(x: f64) -> f64 {
    x * (x.ln() + 2.0 * EULER_GAMMA - 1.0)
}

fn check_point(x: f64, min: f64) -> Result<()> {
    if !x.is_finite() || x < min {
        return Err(Error::InvalidArgument(format!("evaluation point {x} below {min}")));
    }
    Ok(())
}

/// `D(floor x) - x (ln x + 2 gamma - 1)`; integers take the right limit.
pub fn delta_exact(x: f64, table: &DivisorTable) -> Result<f64> {
    check_point(x, 1.0)?;
    let m = x.floor() as u64;
    table.require(m, "delta")?;
    Ok(table.prefix(m) as f64 - smooth_part(x))
}

/// `alt(floor 4t) / 2 - t (ln t + 2 gamma - 1)`.
pub fn delta_star_exact(t: f64, table: &DivisorTable) -> Result<f64> {
    check_point(t, 0.25)?;
    let m = (4.0 * t).floor() as u64;
    table.require(m, "alternating delta")?;
    Ok(0.5 * table.alt_prefix(m) as f64 - smooth_part(t))
}

/// `cos(4 pi sqrt(n x) - pi/4)`, reducing large phases exactly enough to
/// keep full double accuracy.
#[inline]
pub fn voronoi_phase_cos(n: u64, x: f64) -> f64 {
    let s = (n as f64 * x).sqrt();
    if 4.0 * PI * s <= DD_PHASE_THRESHOLD {
        return (4.0 * PI * s - FRAC_PI_4).cos();
    }
    let nx = DoubleDouble::from_u64(n) * DoubleDouble::from_f64(x);
    let two_s = nx.sqrt().mul_f64(2.0);
    let frac = (two_s - two_s.floor()).to_f64();
    (2.0 * PI * frac - FRAC_PI_4).cos()
}

fn voronoi_sum(x: f64, trunc: u64, table: &DivisorTable, alternating: bool) -> f64 {
    let mut acc = Neumaier::new();
    for n in 1..=trunc {
        let mut term = table.d(n) as f64 * (n as f64).powf(-0.75) * voronoi_phase_cos(n, x);
        if alternating && n % 2 == 1 {
            term = -term;
        }
        acc.add(term);
    }
    x.powf(0.25) / (PI * SQRT_2) * acc.value()
}

/// Truncated Voronoi series for `Delta(x)` without its remainder term.
pub fn delta_voronoi(params: VoronoiParams, table: &DivisorTable) -> Result<f64> {
    params.validate()?;
    table.require(params.trunc, "Voronoi truncation")?;
    Ok(voronoi_sum(params.x, params.trunc, table, false))
}

/// Truncated Voronoi series for the alternating error term.
pub fn delta_star_voronoi(t: f64, trunc: u64, table: &DivisorTable) -> Result<f64> {
    VoronoiParams::new(t, trunc)?;
    table.require(trunc, "Voronoi truncation")?;
    Ok(voronoi_sum(t, trunc, table, true))
}

/// Root mean square of `Delta - Voronoi(trunc)` over `samples` uniform
/// points in `[x_lo, 2 x_lo]`, drawn from a seeded generator.
pub fn voronoi_rms_error(
    x_lo: f64,
    trunc: u64,
    samples: usize,
    seed: u64,
    table: &DivisorTable,
    exec: Exec,
) -> Result<f64> {
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    table.require((2.0 * x_lo).floor() as u64, "Voronoi sampling")?;
    table.require(trunc, "Voronoi truncation")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<f64> = (0..samples).map(|_| rng.gen_range(x_lo..2.0 * x_lo)).collect();
    for &x in &xs {
        VoronoiParams::new(x, trunc)?;
    }
    let sq = map_blocks(exec, xs.len(), 4, |r| {
        r.map(|i| {
            let x = xs[i];
            let e = delta_exact(x, table).expect("checked") - voronoi_sum(x, trunc, table, false);
            e * e
        })
        .collect::<Neumaier>()
    });
    let total: Neumaier = sq.into_iter().sum();
    Ok((total.value() / samples as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::sieve_divisors;
    use approx::assert_relative_eq;

    #[test]
    fn exact_values() {
        let t = sieve_divisors(100).unwrap();
        assert_relative_eq!(delta_exact(10.0, &t).unwrap(), 2.42984, epsilon = 1e-5);
        assert_relative_eq!(delta_exact(1.0, &t).unwrap(), 0.845569, epsilon = 1e-6);
        // prefix(2) = 3 and 2.5 (ln 2.5 + 2 gamma - 1) = 2.676805
        assert_relative_eq!(delta_exact(2.5, &t).unwrap(), 0.323195, epsilon = 1e-6);
        assert_relative_eq!(delta_star_exact(5.0, &t).unwrap(), 2.18065, epsilon = 1e-5);
        assert_relative_eq!(delta_star_exact(1.0, &t).unwrap(), 0.845569, epsilon = 1e-6);
        assert_relative_eq!(delta_star_exact(0.25, &t).unwrap(), -0.192034, epsilon = 1e-6);
        assert!(matches!(delta_exact(101.0, &t), Err(Error::OutOfRange(_))));
        assert!(matches!(delta_star_exact(26.0, &t), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn jumps_at_integers() {
        let t = sieve_divisors(1000).unwrap();
        for n in [12u64, 97, 360, 999] {
            let x = n as f64;
            let jump = delta_exact(x + 1e-9, &t).unwrap() - delta_exact(x - 1e-9, &t).unwrap();
            assert_relative_eq!(jump, t.d(n) as f64, epsilon = 1e-5);
        }
    }

    #[test]
    fn single_term_series() {
        let t = sieve_divisors(10_000).unwrap();
        let p = VoronoiParams::new(1e4, 1).unwrap();
        assert_relative_eq!(delta_voronoi(p, &t).unwrap(), 1.59155, epsilon = 1e-5);
        assert_relative_eq!(delta_star_voronoi(1e4, 1, &t).unwrap(), -1.59155, epsilon = 1e-5);
        assert_eq!(delta_star_voronoi(123.4, 0, &t).unwrap(), 0.0);
        assert!(VoronoiParams::new(10.0, 11).is_err());
    }

    #[test]
    fn full_series_close_to_exact() {
        // At a jump the series converges to the midpoint, so integer points
        // are compared against the average of the one-sided limits.
        let t = sieve_divisors(40_004).unwrap();
        let p = VoronoiParams::new(1e4, 10_000).unwrap();
        let v = delta_voronoi(p, &t).unwrap();
        let mid = delta_exact(1e4, &t).unwrap() - 0.5 * t.d(10_000) as f64;
        assert!((v - mid).abs() < 3.0);
        let s = delta_star_voronoi(1e4, 10_000, &t).unwrap();
        let mid_star = delta_star_exact(1e4, &t).unwrap() - 0.25 * t.d(40_000) as f64;
        assert!((s - mid_star).abs() < 3.0);
        for x in [10_000.5, 10_000.3] {
            let p = VoronoiParams::new(x, 10_000).unwrap();
            assert!((delta_voronoi(p, &t).unwrap() - delta_exact(x, &t).unwrap()).abs() < 3.0);
            let s = delta_star_voronoi(x, 10_000, &t).unwrap();
            assert!((s - delta_star_exact(x, &t).unwrap()).abs() < 3.0);
        }
    }

    #[test]
    fn extended_phase_reduction_agrees() {
        for (n, x) in [(1u64, 1e6), (977, 123_456.5), (99_991, 1.5e6)] {
            let s = (n as f64 * x).sqrt();
            let direct = (4.0 * PI * s - FRAC_PI_4).cos();
            assert!((voronoi_phase_cos(n, x) - direct).abs() < 1e-8);
        }
    }
}
