//! Weighted sums over root relations and their diagonal pieces.

use serde::{Deserialize, Serialize};

use crate::arith::DivisorTable;
use crate::error::{Error, Result};
use crate::par::Exec;
use crate::quadruples::{fold_families, FamilyKind, QuadrupleFamily};
use crate::sum::Neumaier;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SumKind {
    /// Three-one relations, weight `d d d d / ((n1 n2 n3)^{3/4} n4^{1/4})`.
    C1,
    /// Two-two relations, weight `d d d d (sum sqrt n) / (n1 n2 n3 n4)^{3/4}`.
    C2,
    /// Two-two relations, weight `d d d d / ((n1 n2 n3)^{3/4} n4^{1/4})`.
    C2Prime,
    /// `sum d(n)^2 / n^{3/2} * sum d(m)^2 / m`.
    C21,
    /// The `C2Prime` weight restricted to `{n1, n2} != {n3, n4}`.
    C22,
    /// Unweighted off-diagonal sum with a `min(sqrt(n / z), 1)` taper.
    CZu,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumReport {
    pub which: SumKind,
    pub z: u64,
    pub u: Option<u64>,
    pub value: f64,
    /// Families visited (for `C21`, the number of `(n, m)` index pairs).
    pub family_count: u64,
    /// The size the sum is compared against: `1`, `ln^4 z` or `z^{-3/2}`.
    pub bound_form: f64,
}

impl SumReport {
    /// `value / bound_form`.
    pub fn normalized(&self) -> f64 {
        self.value / self.bound_form
    }
}

#[derive(Default)]
struct Acc {
    sum: Neumaier,
    families: u64,
}

fn merge(mut a: Acc, b: Acc) -> Acc {
    a.sum.merge(&b.sum);
    a.families += b.families;
    a
}

fn fold_weight<W>(z: u64, kind: FamilyKind, exec: Exec, weight: W) -> Result<(f64, u64)>
where
    W: Fn(&QuadrupleFamily) -> f64 + Sync + Send,
{
    let acc = fold_families(
        z,
        kind,
        exec,
        |acc: &mut Acc, f| {
            acc.sum.add(weight(f));
            acc.families += 1;
        },
        merge,
    )?
    .unwrap_or_default();
    Ok((acc.sum.value(), acc.families))
}

fn check_table(z: u64, table: &DivisorTable) -> Result<()> {
    if z == 0 {
        return Err(Error::InvalidArgument("z must be at least 1".into()));
    }
    table.require(z, "special sum")
}

/// Weight shared by the three-one sum and the primed two-two sum; the last
/// slot is singled out.
fn slot4_weight(q: [u64; 4], table: &DivisorTable) -> f64 {
    let d: f64 = q.iter().map(|&n| table.d(n) as f64).product();
    let head = (q[0] * q[1] * q[2]) as f64;
    d / (head.powf(0.75) * (q[3] as f64).powf(0.25))
}

fn ordered_sum(f: &QuadrupleFamily, w: impl Fn([u64; 4]) -> f64) -> f64 {
    f.ordered().into_iter().map(w).collect::<Neumaier>().value()
}

pub fn compute_c1(z: u64, table: &DivisorTable, exec: Exec) -> Result<SumReport> {
    check_table(z, table)?;
    let (value, families) = fold_weight(z, FamilyKind::ThreeOne, exec, |f| {
        f.multiplicity as f64 * slot4_weight(f.ns(), table)
    })?;
    Ok(SumReport {
        which: SumKind::C1,
        z,
        u: None,
        value,
        family_count: families,
        bound_form: 1.0,
    })
}

/// `sum_{n<=z} d(n)^2 / n^{3/2} * sum_{m<=z} d(m)^2 / m`.
fn c21_value(z: u64, table: &DivisorTable) -> f64 {
    let mut a = Neumaier::new();
    let mut b = Neumaier::new();
    for n in 1..=z {
        let d2 = (table.d(n) as f64).powi(2);
        let x = n as f64;
        a.add(d2 / (x * x.sqrt()));
        b.add(d2 / x);
    }
    a.value() * b.value()
}

/// The two-two sums; `C21` is the closed diagonal product.
pub fn compute_c2(z: u64, table: &DivisorTable, which: SumKind, exec: Exec) -> Result<SumReport> {
    check_table(z, table)?;
    let log4 = (z as f64).ln().powi(4);
    let (value, families, bound_form) = match which {
        SumKind::C21 => (c21_value(z, table), z * z, log4),
        SumKind::C2 => {
            let w = |f: &QuadrupleFamily| {
                let q = f.ns();
                let d: f64 = q.iter().map(|&n| table.d(n) as f64).product();
                let roots: f64 = q.iter().map(|&n| (n as f64).sqrt()).sum();
                let prod = q.iter().map(|&n| n as f64).product::<f64>();
                f.multiplicity as f64 * d * roots / prod.powf(0.75)
            };
            let (a, na) = fold_weight(z, FamilyKind::OffDiagonal, exec, w)?;
            let (b, nb) = fold_weight(z, FamilyKind::Diagonal, exec, w)?;
            (a + b, na + nb, log4)
        }
        SumKind::C2Prime => {
            let w = |f: &QuadrupleFamily| ordered_sum(f, |q| slot4_weight(q, table));
            let (a, na) = fold_weight(z, FamilyKind::OffDiagonal, exec, w)?;
            let (b, nb) = fold_weight(z, FamilyKind::Diagonal, exec, w)?;
            (a + b, na + nb, log4)
        }
        SumKind::C22 => {
            let w = |f: &QuadrupleFamily| ordered_sum(f, |q| slot4_weight(q, table));
            let (a, na) = fold_weight(z, FamilyKind::OffDiagonal, exec, w)?;
            (a, na, 1.0)
        }
        other => {
            return Err(Error::InvalidArgument(format!("{other:?} is not a two-two sum")));
        }
    };
    Ok(SumReport {
        which,
        z,
        u: None,
        value,
        family_count: families,
        bound_form,
    })
}

/// Off-diagonal sum of `prod min(sqrt(n_j / z), 1) / (n1 n2 n3 n4)^{3/4}`
/// over `n_j <= u`.
pub fn compute_c_zu(z: u64, u: u64, exec: Exec) -> Result<SumReport> {
    if z < 10 || u <= z {
        return Err(Error::InvalidArgument(format!("need u > z >= 10, got z = {z}, u = {u}")));
    }
    let zf = z as f64;
    let (value, families) = fold_weight(u, FamilyKind::OffDiagonal, exec, |f| {
        let q = f.ns();
        let taper: f64 = q.iter().map(|&n| ((n as f64) / zf).sqrt().min(1.0)).product();
        let prod = q.iter().map(|&n| n as f64).product::<f64>();
        f.multiplicity as f64 * taper / prod.powf(0.75)
    })?;
    Ok(SumReport {
        which: SumKind::CZu,
        z,
        u: Some(u),
        value,
        family_count: families,
        bound_form: zf.powf(-1.5),
    })
}

/// `sum_{n<=z} d(n)^4 / n^{5/2}`: the all-equal diagonal, which the split
/// `2 C21 + C22` counts twice.
pub fn fully_diagonal_overlap(z: u64, table: &DivisorTable) -> Result<f64> {
    check_table(z, table)?;
    Ok((1..=z)
        .map(|n| (table.d(n) as f64).powi(4) / (n as f64).powf(2.5))
        .collect::<Neumaier>()
        .value())
}

/// Inner convolutions `r(n) = sum_{a+b=n} d(a^2) d(b^2) / (ab)^{3/2}` and
/// `R(n) = sum_{a+b=n} d(a^2) d(b^2) / (a^{3/2} b^{1/2})`.
pub fn convolution_diagnostics(n: u64, table: &DivisorTable) -> Result<(f64, f64)> {
    if n < 2 {
        return Err(Error::InvalidArgument("convolutions need n >= 2".into()));
    }
    table.require((n - 1) * (n - 1), "convolution diagnostics")?;
    let (mut r, mut big_r) = (Neumaier::new(), Neumaier::new());
    for a in 1..n {
        let b = n - a;
        let dd = table.d(a * a) as f64 * table.d(b * b) as f64;
        let (af, bf) = (a as f64, b as f64);
        r.add(dd / (af * bf).powf(1.5));
        big_r.add(dd / (af.powf(1.5) * bf.sqrt()));
    }
    Ok((r.value(), big_r.value()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::sieve_divisors;
    use approx::assert_relative_eq;

    #[test]
    fn c1_small() {
        let t = sieve_divisors(100).unwrap();
        let r = compute_c1(10, &t, Exec::Sequential).unwrap();
        assert_relative_eq!(r.value, 3f64.sqrt(), epsilon = 1e-12);
        assert_eq!(r.family_count, 1);
        assert_eq!(compute_c1(8, &t, Exec::Sequential).unwrap().value, 0.0);
    }

    #[test]
    fn c21_two_terms() {
        let t = sieve_divisors(10).unwrap();
        let r = compute_c2(2, &t, SumKind::C21, Exec::Sequential).unwrap();
        assert_relative_eq!(r.value, (1.0 + 4.0 / 2f64.powf(1.5)) * 3.0, epsilon = 1e-12);
        assert_relative_eq!(r.value, 7.24264, epsilon = 1e-5);
    }

    #[test]
    fn first_off_diagonal_family_is_one_nine_four_four() {
        let t = sieve_divisors(20).unwrap();
        assert_eq!(compute_c2(8, &t, SumKind::C22, Exec::Sequential).unwrap().value, 0.0);
        let r = compute_c2(9, &t, SumKind::C22, Exec::Sequential).unwrap();
        // (1, 9, 4, 4) in its four orderings: two with n4 = 4, two with n4 = 9
        // on the other side.
        let w = |q: [u64; 4]| slot4_weight(q, &t);
        let expect = w([1, 9, 4, 4]) + w([9, 1, 4, 4]) + w([4, 4, 1, 9]) + w([4, 4, 9, 1]);
        assert_relative_eq!(r.value, expect, max_relative = 1e-14);
        assert!(compute_c2(15, &t, SumKind::C22, Exec::Sequential).unwrap().value > 0.0);
    }

    #[test]
    fn primed_split_up_to_overlap() {
        let t = sieve_divisors(1000).unwrap();
        for z in [10, 100, 1000] {
            let get = |k| compute_c2(z, &t, k, Exec::Parallel).unwrap().value;
            let lhs = get(SumKind::C2Prime);
            let rhs = 2.0 * get(SumKind::C21) + get(SumKind::C22) - fully_diagonal_overlap(z, &t).unwrap();
            assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
        }
    }

    #[test]
    fn c_zu_rejects_bad_ranges() {
        assert!(compute_c_zu(9, 20, Exec::Sequential).is_err());
        assert!(compute_c_zu(10, 10, Exec::Sequential).is_err());
        let r = compute_c_zu(10, 15, Exec::Sequential).unwrap();
        assert!(r.value > 0.0);
    }

    #[test]
    fn convolutions_positive() {
        let t = sieve_divisors(10_000).unwrap();
        let (r, big_r) = convolution_diagnostics(50, &t).unwrap();
        assert!(r > 0.0 && big_r > r);
    }
}
