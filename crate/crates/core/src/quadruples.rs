//! Square-root relations between four integers.
//!
//! Covers an exact integer test for `sqrt a + sqrt b = sqrt c + sqrt d`,
//! enumeration of every solution family below a bound through square-free
//! kernels, certificates for how far a non-vanishing signed root sum stays
//! from zero, and counters for the near-solutions
//! `|sqrt n1 + sqrt n2 - sqrt n3 - sqrt n4| < delta`.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::arith::kernel_table;
use crate::error::{Error, Result};
use crate::par::{map_blocks, map_indexed, Exec};
use crate::sum::DoubleDouble;

/// Largest input accepted by the exact relation tests.
pub const EXACT_INPUT_MAX: u64 = 1 << 48;

/// Default memory budget for the pair-sum table.
pub const DEFAULT_COUNT_BUDGET: u64 = 2 << 30;

/// Unsigned 256-bit product of two `u128` values as `(hi, lo)`.
fn mul_wide(a: u128, b: u128) -> (u128, u128) {
    const MASK: u128 = u64::MAX as u128;
    let (a0, a1) = (a & MASK, a >> 64);
    let (b0, b1) = (b & MASK, b >> 64);
    let p00 = a0 * b0;
    let p01 = a0 * b1;
    let p10 = a1 * b0;
    let p11 = a1 * b1;
    let mid = (p00 >> 64) + (p01 & MASK) + (p10 & MASK);
    let lo = (p00 & MASK) | (mid << 64);
    let hi = p11 + (p01 >> 64) + (p10 >> 64) + (mid >> 64);
    (hi, lo)
}

fn shl6(x: (u128, u128)) -> (u128, u128) {
    ((x.0 << 6) | (x.1 >> 122), x.1 << 6)
}

fn check_exact_domain(vals: &[u64]) {
    assert!(
        vals.iter().all(|&v| (1..=EXACT_INPUT_MAX).contains(&v)),
        "exact root relations need inputs in 1..=2^48, got {vals:?}"
    );
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Equal,
    NotEqual,
}

/// Decides `sqrt a + sqrt b = sqrt c + sqrt d` exactly.
///
/// Squaring twice, with `q = c + d - a - b` and `r = 4ab + 4cd - q^2`,
/// equality holds iff `r >= 0`, `r^2 = 64abcd` and `q` has the sign of
/// `ab - cd`.
pub fn exact_sqrt_relation(a: u64, b: u64, c: u64, d: u64) -> Verdict {
    check_exact_domain(&[a, b, c, d]);
    let (a, b, c, d) = (a as i128, b as i128, c as i128, d as i128);
    let q = c + d - a - b;
    let ab = a * b;
    let cd = c * d;
    let r = 4 * ab + 4 * cd - q * q;
    if r < 0 || q.signum() != (ab - cd).signum() {
        return Verdict::NotEqual;
    }
    let lhs = mul_wide(r as u128, r as u128);
    let rhs = shl6(mul_wide(ab as u128, cd as u128));
    if lhs == rhs {
        Verdict::Equal
    } else {
        Verdict::NotEqual
    }
}

/// Decides `sqrt a + sqrt b + sqrt c = sqrt d` exactly.
///
/// With `q = c + d - a - b` and `r = q^2 - 4ab - 4cd`, equality holds iff
/// `q >= 0`, `r >= 0`, `r^2 = 64abcd` and `d > c`.
pub fn exact_three_one_relation(a: u64, b: u64, c: u64, d: u64) -> Verdict {
    check_exact_domain(&[a, b, c, d]);
    if d <= c {
        return Verdict::NotEqual;
    }
    let (a, b, c, d) = (a as i128, b as i128, c as i128, d as i128);
    let q = c + d - a - b;
    if q < 0 {
        return Verdict::NotEqual;
    }
    let ab = a * b;
    let cd = c * d;
    let r = q * q - 4 * ab - 4 * cd;
    if r < 0 {
        return Verdict::NotEqual;
    }
    let lhs = mul_wide(r as u128, r as u128);
    let rhs = shl6(mul_wide(ab as u128, cd as u128));
    if lhs == rhs {
        Verdict::Equal
    } else {
        Verdict::NotEqual
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `sqrt n1 + sqrt n2 = sqrt n3 + sqrt n4`.
    TwoTwo,
    /// `sqrt n1 + sqrt n2 + sqrt n3 = sqrt n4`.
    ThreeOne,
}

/// One solution of a root relation, up to the orderings that preserve it.
///
/// Two-two families are stored with each side sorted and the smaller side
/// first; three-one families keep the first three slots sorted. Solutions
/// that mix kernels only arise on the diagonal `{n1, n2} = {n3, n4}`, which
/// is why kernels are stored per slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QuadrupleFamily {
    pub kernels: [u32; 4],
    pub ms: [u32; 4],
    pub relation: Relation,
    /// Number of ordered quadruples the family stands for.
    pub multiplicity: u32,
}

impl QuadrupleFamily {
    pub fn ns(&self) -> [u64; 4] {
        std::array::from_fn(|i| self.kernels[i] as u64 * (self.ms[i] as u64).pow(2))
    }

    /// The shared kernel, if all four slots have the same one.
    pub fn kernel(&self) -> Option<u64> {
        let k = self.kernels[0];
        self.kernels.iter().all(|&x| x == k).then_some(k as u64)
    }

    /// `{n1, n2} = {n3, n4}` for two-two families.
    pub fn is_diagonal(&self) -> bool {
        self.relation == Relation::TwoTwo && self.ns()[..2] == self.ns()[2..]
    }

    /// Every ordered quadruple represented by the family.
    pub fn ordered(&self) -> Vec<[u64; 4]> {
        let n = self.ns();
        let mut out = Vec::with_capacity(self.multiplicity as usize);
        match self.relation {
            Relation::TwoTwo => {
                let sides = if n[..2] == n[2..] {
                    vec![([n[0], n[1]], [n[2], n[3]])]
                } else {
                    vec![([n[0], n[1]], [n[2], n[3]]), ([n[2], n[3]], [n[0], n[1]])]
                };
                for (l, r) in sides {
                    for lp in pair_perms(l) {
                        for rp in pair_perms(r) {
                            out.push([lp[0], lp[1], rp[0], rp[1]]);
                        }
                    }
                }
            }
            Relation::ThreeOne => {
                let mut seen = Vec::with_capacity(6);
                for p in [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
                    let q = [n[p[0]], n[p[1]], n[p[2]], n[3]];
                    if !seen.contains(&q) {
                        seen.push(q);
                    }
                }
                out = seen;
            }
        }
        debug_assert_eq!(out.len(), self.multiplicity as usize);
        out
    }
}

fn pair_perms(p: [u64; 2]) -> Vec<[u64; 2]> {
    if p[0] == p[1] {
        vec![p]
    } else {
        vec![p, [p[1], p[0]]]
    }
}

fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

fn square_free_upto(y: u64, kernels: &[u32]) -> Vec<u32> {
    (1..=y as usize)
        .filter(|&n| kernels[n] as usize == n)
        .map(|n| n as u32)
        .collect()
}

/// Families of kernel `l` with `m1 + m2 = m3 + m4`, sides distinct, all
/// `m <= mmax`, in ascending `(m1 + m2, m1, m3)` order.
fn off_diagonal_for_kernel<F: FnMut(&QuadrupleFamily)>(l: u32, mmax: u32, visit: &mut F) {
    for s in 3..=2 * mmax {
        let lo = s.saturating_sub(mmax).max(1);
        let hi = s / 2;
        for m1 in lo..=hi {
            for m3 in (m1 + 1)..=hi {
                let (m2, m4) = (s - m1, s - m3);
                let perms = |a: u32, b: u32| if a == b { 1 } else { 2 };
                visit(&QuadrupleFamily {
                    kernels: [l; 4],
                    ms: [m1, m2, m3, m4],
                    relation: Relation::TwoTwo,
                    multiplicity: 2 * perms(m1, m2) * perms(m3, m4),
                });
            }
        }
    }
}

fn three_one_for_kernel<F: FnMut(&QuadrupleFamily)>(l: u32, mmax: u32, visit: &mut F) {
    for m4 in 3..=mmax {
        for m1 in 1..=m4 / 3 {
            for m2 in m1..=(m4 - m1) / 2 {
                let m3 = m4 - m1 - m2;
                let multiplicity = match (m1 == m2, m2 == m3) {
                    (true, true) => 1,
                    (false, false) => 6,
                    _ => 3,
                };
                visit(&QuadrupleFamily {
                    kernels: [l; 4],
                    ms: [m1, m2, m3, m4],
                    relation: Relation::ThreeOne,
                    multiplicity,
                });
            }
        }
    }
}

fn check_bound(y: u64) -> Result<()> {
    if y == 0 {
        return Err(Error::InvalidArgument("enumeration bound must be at least 1".into()));
    }
    if y > u32::MAX as u64 {
        return Err(Error::OutOfRange(format!("enumeration bound {y} exceeds 2^32")));
    }
    Ok(())
}

/// Which solutions a fold runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    /// Two-two with `{n1, n2} != {n3, n4}`.
    OffDiagonal,
    /// Two-two with `{n1, n2} = {n3, n4}`.
    Diagonal,
    ThreeOne,
}

/// Work unit of a fold: a kernel for single-kernel kinds, a first entry
/// `n1` for the diagonal.
fn fold_units(y: u64, kind: FamilyKind, kernels: &[u32]) -> Vec<u32> {
    match kind {
        FamilyKind::Diagonal => (1..=y as u32).collect(),
        _ => square_free_upto(y, kernels),
    }
}

fn visit_unit<F: FnMut(&QuadrupleFamily)>(
    y: u64,
    kind: FamilyKind,
    kernels: &[u32],
    unit: u32,
    visit: &mut F,
) {
    let mmax = |l: u32| isqrt(y / l as u64) as u32;
    match kind {
        FamilyKind::OffDiagonal => off_diagonal_for_kernel(unit, mmax(unit), visit),
        FamilyKind::ThreeOne => three_one_for_kernel(unit, mmax(unit), visit),
        FamilyKind::Diagonal => {
            let split = |n: u32| {
                let l = kernels[n as usize];
                (l, isqrt((n / l) as u64) as u32)
            };
            let (l1, m1) = split(unit);
            for n2 in unit..=y as u32 {
                let (l2, m2) = split(n2);
                visit(&QuadrupleFamily {
                    kernels: [l1, l2, l1, l2],
                    ms: [m1, m2, m1, m2],
                    relation: Relation::TwoTwo,
                    multiplicity: if unit == n2 { 1 } else { 4 },
                });
            }
        }
    }
}

/// Maps every family of `kind` below `y` through `fold`, grouped per work
/// unit (ascending kernel, or ascending `n1` on the diagonal), and merges
/// the per-unit results in that order.
pub fn fold_families<T, F, M>(y: u64, kind: FamilyKind, exec: Exec, fold: F, merge: M) -> Result<Option<T>>
where
    T: Send + Default,
    F: Fn(&mut T, &QuadrupleFamily) + Sync + Send,
    M: Fn(T, T) -> T,
{
    check_bound(y)?;
    let kernels = kernel_table(y)?;
    let units = fold_units(y, kind, &kernels);
    let parts = map_indexed(exec, units.len(), |i| {
        let mut acc = T::default();
        visit_unit(y, kind, &kernels, units[i], &mut |f: &QuadrupleFamily| fold(&mut acc, f));
        acc
    });
    Ok(parts.into_iter().reduce(merge))
}

/// Calls `visit` on every family of `kind` below `y`, in the order of
/// [`fold_families`].
pub fn for_each_family<F: FnMut(&QuadrupleFamily)>(y: u64, kind: FamilyKind, mut visit: F) -> Result<()> {
    check_bound(y)?;
    let kernels = kernel_table(y)?;
    for unit in fold_units(y, kind, &kernels) {
        visit_unit(y, kind, &kernels, unit, &mut visit);
    }
    Ok(())
}

fn collect_kind(y: u64, kind: FamilyKind, exec: Exec) -> Result<Vec<QuadrupleFamily>> {
    let parts = fold_families(
        y,
        kind,
        exec,
        |v: &mut Vec<QuadrupleFamily>, f| v.push(*f),
        |mut a, mut b| {
            a.append(&mut b);
            a
        },
    )?;
    Ok(parts.unwrap_or_default())
}

/// Two-two families with all `n <= y` and `{n1, n2} != {n3, n4}`, grouped
/// by ascending kernel.
pub fn enumerate_off_diagonal(y: u64, exec: Exec) -> Result<Vec<QuadrupleFamily>> {
    collect_kind(y, FamilyKind::OffDiagonal, exec)
}

/// Every two-two family with all `n <= y`: off-diagonal families by
/// ascending kernel, then the diagonal in ascending `(n1, n2)`.
pub fn enumerate_two_two(y: u64, exec: Exec) -> Result<Vec<QuadrupleFamily>> {
    let mut out = collect_kind(y, FamilyKind::OffDiagonal, exec)?;
    out.append(&mut collect_kind(y, FamilyKind::Diagonal, exec)?);
    Ok(out)
}

/// Every three-one family with all `n <= y`, by ascending kernel.
pub fn enumerate_three_one(y: u64, exec: Exec) -> Result<Vec<QuadrupleFamily>> {
    collect_kind(y, FamilyKind::ThreeOne, exec)
}

/// Sign of one root in a signed sum.
pub type SignPattern = [i8; 4];

/// Evidence on how far `sum sign_j sqrt n_j` is from zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapCertificate {
    pub ns: [u64; 4],
    pub signs: SignPattern,
    pub alpha_star: f64,
    /// `max(n)^{-3/2} (n1 n2 n3 n4)^{-1/2}`.
    pub lower_bound: f64,
    /// Set by the exact relation tests, never by a floating comparison.
    pub exact_zero: bool,
}

impl GapCertificate {
    /// `|alpha_star| / lower_bound`.
    pub fn ratio(&self) -> f64 {
        self.alpha_star.abs() / self.lower_bound
    }
}

pub fn gap_lower_bound(ns: [u64; 4]) -> f64 {
    let max = *ns.iter().max().unwrap() as f64;
    let prod: f64 = ns.iter().map(|&n| (n as f64).sqrt()).product();
    1.0 / (max * max.sqrt() * prod)
}

fn dd_sqrt(n: u64) -> DoubleDouble {
    DoubleDouble::from_u64(n).sqrt()
}

/// Exact vanishing test for an arbitrary sign pattern.
pub fn signed_sum_is_zero(ns: [u64; 4], signs: SignPattern) -> bool {
    let pos: Vec<u64> = (0..4).filter(|&i| signs[i] > 0).map(|i| ns[i]).collect();
    let neg: Vec<u64> = (0..4).filter(|&i| signs[i] < 0).map(|i| ns[i]).collect();
    let (one, three) = match (pos.len(), neg.len()) {
        (2, 2) => {
            return exact_sqrt_relation(pos[0], pos[1], neg[0], neg[1]) == Verdict::Equal;
        }
        (3, 1) => (neg[0], pos),
        (1, 3) => (pos[0], neg),
        _ => return false,
    };
    exact_three_one_relation(three[0], three[1], three[2], one) == Verdict::Equal
}

/// Signed root sum in double-double with its lower bound.
pub fn alpha_star_gap(ns: [u64; 4], signs: SignPattern) -> Result<GapCertificate> {
    if ns.contains(&0) {
        return Err(Error::InvalidArgument("root arguments must be positive".into()));
    }
    if signs.iter().any(|&s| s != 1 && s != -1) {
        return Err(Error::InvalidArgument(format!("signs must be +1 or -1, got {signs:?}")));
    }
    let exact_zero = signed_sum_is_zero(ns, signs);
    let alpha = if exact_zero {
        0.0
    } else {
        (0..4)
            .map(|i| {
                let r = dd_sqrt(ns[i]);
                if signs[i] > 0 {
                    r
                } else {
                    -r
                }
            })
            .fold(DoubleDouble::ZERO, |a, b| a + b)
            .to_f64()
    };
    Ok(GapCertificate {
        ns,
        signs,
        alpha_star: alpha,
        lower_bound: gap_lower_bound(ns),
        exact_zero,
    })
}

/// Smallest `|alpha_star| / lower_bound` found by [`scan_gap`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapScan {
    pub n_max: u64,
    pub min_ratio: f64,
    pub argmin: GapCertificate,
    pub exact_zeros: u64,
    /// The few smallest certificates, ascending by ratio.
    pub smallest: Vec<GapCertificate>,
}

const GAP_KEEP: usize = 16;

#[derive(Default)]
struct GapAcc {
    best: Vec<(f64, [u64; 4], SignPattern)>,
    zeros: u64,
}

impl GapAcc {
    fn offer(&mut self, ratio: f64, ns: [u64; 4], signs: SignPattern) {
        if self.best.len() == GAP_KEEP && ratio >= self.best[GAP_KEEP - 1].0 {
            return;
        }
        let pos = self
            .best
            .partition_point(|(r, n, s)| (*r, *n, *s) <= (ratio, ns, signs));
        self.best.insert(pos, (ratio, ns, signs));
        self.best.truncate(GAP_KEEP);
    }

    fn merge(mut self, other: GapAcc) -> GapAcc {
        for (r, n, s) in other.best {
            self.offer(r, n, s);
        }
        self.zeros += other.zeros;
        self
    }
}

/// Minimum of `|alpha_star| / lower_bound` over all `n_j <= n_max` and all
/// sign patterns with `alpha_star != 0`.
///
/// Patterns with a single sign never vanish and are dominated by the mixed
/// ones, and negating every sign leaves the ratio unchanged, so it suffices
/// to scan `sqrt a + sqrt b - sqrt c - sqrt d` and
/// `sqrt a + sqrt b + sqrt c - sqrt d` up to slot symmetries. Zero
/// candidates go to the exact tests; small ratios are recomputed in
/// double-double.
pub fn scan_gap(n_max: u64, exec: Exec) -> Result<GapScan> {
    if n_max == 0 || n_max > 1 << 20 {
        return Err(Error::InvalidArgument(format!("gap scan bound {n_max} out of range")));
    }
    let roots: Vec<f64> = (0..=n_max).map(|n| (n as f64).sqrt()).collect();
    let lb = |ns: [u64; 4]| gap_lower_bound(ns);
    let refine = |acc: &mut GapAcc, ns: [u64; 4], signs: SignPattern, approx: f64| {
        if approx.abs() < 1e-9 && signed_sum_is_zero(ns, signs) {
            acc.zeros += 1;
            return;
        }
        let mut ratio = approx.abs() / lb(ns);
        if acc.best.len() < GAP_KEEP || ratio < 2.0 * acc.best[GAP_KEEP - 1].0 || approx.abs() < 1e-6 {
            ratio = alpha_star_gap(ns, signs).expect("valid").ratio();
        }
        acc.offer(ratio, ns, signs);
    };
    let parts = map_indexed(exec, n_max as usize, |i| {
        let a = i as u64 + 1;
        let mut acc = GapAcc::default();
        let ra = roots[a as usize];
        for b in a..=n_max {
            let rb = roots[b as usize];
            // two-two: (a, b) <= (c, d) lexicographically, c <= d
            for c in a..=n_max {
                let rc = roots[c as usize];
                let d0 = if c == a { b } else { c };
                for d in d0..=n_max {
                    let v = ra + rb - rc - roots[d as usize];
                    refine(&mut acc, [a, b, c, d], [1, 1, -1, -1], v);
                }
            }
            // three-one: a <= b <= c, any d
            for c in b..=n_max {
                let s = ra + rb + roots[c as usize];
                for d in 1..=n_max {
                    let v = s - roots[d as usize];
                    refine(&mut acc, [a, b, c, d], [1, 1, 1, -1], v);
                }
            }
        }
        acc
    });
    let acc = parts.into_iter().fold(GapAcc::default(), GapAcc::merge);
    let smallest: Vec<GapCertificate> = acc
        .best
        .iter()
        .map(|&(_, ns, s)| alpha_star_gap(ns, s).expect("valid"))
        .collect();
    let argmin = smallest
        .first()
        .cloned()
        .ok_or_else(|| Error::InvalidState("no nonzero signed sums found".into()))?;
    Ok(GapScan {
        n_max,
        min_ratio: argmin.ratio(),
        argmin,
        exact_zeros: acc.zeros,
        smallest,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CountStrategy {
    /// Table when it fits the budget, streaming otherwise.
    #[default]
    Auto,
    /// Materialise and sort every pair sum.
    Table,
    /// Merge sorted rows through a heap, keeping one cursor per row.
    Streaming,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountOptions {
    pub strategy: CountStrategy,
    pub budget_bytes: u64,
    pub exec: Exec,
}

impl Default for CountOptions {
    fn default() -> Self {
        Self {
            strategy: CountStrategy::Auto,
            budget_bytes: DEFAULT_COUNT_BUDGET,
            exec: Exec::Parallel,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThirdSign {
    Plus,
    Minus,
}

/// `sqrt a + sqrt b`, or `sqrt a - sqrt b` on a difference side; `w`
/// counts how many ordered pairs share the entry.
#[derive(Debug, Clone, Copy)]
struct PairSum {
    s: f64,
    a: u32,
    b: u32,
    w: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SideKind {
    /// Unordered `a <= b` in one range, weight 2 off the diagonal.
    SymmetricSum,
    /// Ordered `a` in the first range, `b` in the second.
    Sum,
    /// Ordered `sqrt a - sqrt b`.
    Difference,
}

#[derive(Debug, Clone, Copy)]
struct Side {
    kind: SideKind,
    /// Half-open ranges `(lo, hi]`.
    ra: (u64, u64),
    rb: (u64, u64),
}

impl Side {
    fn len(&self) -> u64 {
        let na = self.ra.1 - self.ra.0;
        let nb = self.rb.1 - self.rb.0;
        match self.kind {
            SideKind::SymmetricSum => na * (na + 1) / 2,
            _ => na * nb,
        }
    }

    fn value(&self, a: u64, b: u64, roots: &[f64]) -> f64 {
        match self.kind {
            SideKind::Difference => roots[a as usize] - roots[b as usize],
            _ => roots[a as usize] + roots[b as usize],
        }
    }

    fn exact(&self, p: &PairSum) -> DoubleDouble {
        let (ra, rb) = (dd_sqrt(p.a as u64), dd_sqrt(p.b as u64));
        match self.kind {
            SideKind::Difference => ra - rb,
            _ => ra + rb,
        }
    }

    fn entry(&self, a: u64, b: u64, roots: &[f64]) -> PairSum {
        let w = if self.kind == SideKind::SymmetricSum && a != b { 2 } else { 1 };
        PairSum {
            s: self.value(a, b, roots),
            a: a as u32,
            b: b as u32,
            w,
        }
    }

    fn b_start(&self, a: u64) -> u64 {
        if self.kind == SideKind::SymmetricSum {
            a
        } else {
            self.rb.0 + 1
        }
    }

    fn table(&self, roots: &[f64]) -> Vec<PairSum> {
        let mut v = Vec::with_capacity(self.len() as usize);
        for a in (self.ra.0 + 1)..=self.ra.1 {
            for b in self.b_start(a)..=self.rb.1 {
                v.push(self.entry(a, b, roots));
            }
        }
        v.sort_by(|x, y| x.s.total_cmp(&y.s).then((x.a, x.b).cmp(&(y.a, y.b))));
        v
    }
}

#[derive(Debug, Clone, Copy)]
struct HeapItem {
    p: PairSum,
}

impl PartialEq for HeapItem {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapItem {}
impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed: BinaryHeap is a max-heap
        other
            .p
            .s
            .total_cmp(&self.p.s)
            .then((other.p.a, other.p.b).cmp(&(self.p.a, self.p.b)))
    }
}

/// Ascending stream of a side's pair sums with one heap slot per row.
struct RowMerge<'a> {
    side: Side,
    roots: &'a [f64],
    heap: BinaryHeap<HeapItem>,
}

impl<'a> RowMerge<'a> {
    fn new(side: Side, roots: &'a [f64]) -> Self {
        let mut heap = BinaryHeap::with_capacity((side.ra.1 - side.ra.0) as usize);
        for a in (side.ra.0 + 1)..=side.ra.1 {
            let b = match side.kind {
                SideKind::Difference => side.rb.1,
                _ => side.b_start(a),
            };
            if b > side.rb.0 && b <= side.rb.1 {
                heap.push(HeapItem {
                    p: side.entry(a, b, roots),
                });
            }
        }
        Self { side, roots, heap }
    }
}

impl Iterator for RowMerge<'_> {
    type Item = PairSum;

    fn next(&mut self) -> Option<PairSum> {
        let top = self.heap.pop()?.p;
        let (a, b) = (top.a as u64, top.b as u64);
        let next_b = match self.side.kind {
            SideKind::Difference => b.checked_sub(1).filter(|&nb| nb > self.side.rb.0),
            _ => Some(b + 1).filter(|&nb| nb <= self.side.rb.1),
        };
        if let Some(nb) = next_b {
            self.heap.push(HeapItem {
                p: self.side.entry(a, nb, self.roots),
            });
        }
        Some(top)
    }
}

/// Pairs within this distance of a window edge are decided in
/// double-double.
const EDGE_EPS: f64 = 1e-9;

/// Differences that double-double cannot separate from `delta` count as
/// equal, and therefore fall outside the strict inequality.
const TIE_EPS: f64 = 1e-26;

/// Window counter: for each left entry `x`, counts right entries `y` with
/// `|x - y| < delta`, weighted. `upper` and `lower` are ascending streams
/// over the right side.
struct Window<I: Iterator<Item = PairSum>> {
    upper: I,
    upper_buf: VecDeque<PairSum>,
    upper_total: u64,
    lower: I,
    lower_buf: VecDeque<PairSum>,
    lower_total: u64,
}

impl<I: Iterator<Item = PairSum>> Window<I> {
    fn new(upper: I, lower: I) -> Self {
        Self {
            upper,
            upper_buf: VecDeque::new(),
            upper_total: 0,
            lower,
            lower_buf: VecDeque::new(),
            lower_total: 0,
        }
    }

    fn fill(src: &mut I, buf: &mut VecDeque<PairSum>, limit: f64) {
        while buf.back().is_none_or(|p| p.s < limit) {
            match src.next() {
                Some(p) => buf.push_back(p),
                None => break,
            }
        }
    }

    /// Weighted count of right entries `y` with `|x - y| < delta`, as the
    /// number with `y - x < delta` minus the number with `x - y >= delta`.
    fn count(&mut self, x: &PairSum, xv: DoubleDouble, right: &Side, delta: f64) -> u64 {
        let dd_delta = DoubleDouble::from_f64(delta);
        let hi_sure = x.s + delta - EDGE_EPS;
        let hi_band = x.s + delta + EDGE_EPS;
        Self::fill(&mut self.upper, &mut self.upper_buf, hi_band);
        while let Some(p) = self.upper_buf.front() {
            if p.s < hi_sure {
                self.upper_total += p.w as u64;
                self.upper_buf.pop_front();
            } else {
                break;
            }
        }
        let mut below_hi = self.upper_total;
        for p in self.upper_buf.iter().take_while(|p| p.s < hi_band) {
            if (right.exact(p) - xv - dd_delta).to_f64() < -TIE_EPS {
                below_hi += p.w as u64;
            }
        }
        let lo_sure = x.s - delta - EDGE_EPS;
        let lo_band = x.s - delta + EDGE_EPS;
        Self::fill(&mut self.lower, &mut self.lower_buf, lo_band);
        while let Some(p) = self.lower_buf.front() {
            if p.s < lo_sure {
                self.lower_total += p.w as u64;
                self.lower_buf.pop_front();
            } else {
                break;
            }
        }
        let mut excluded_lo = self.lower_total;
        for p in self.lower_buf.iter().take_while(|p| p.s < lo_band) {
            if (xv - right.exact(p) - dd_delta).to_f64() >= -TIE_EPS {
                excluded_lo += p.w as u64;
            }
        }
        below_hi - excluded_lo
    }
}

fn count_table(left: &Side, right: &Side, delta: f64, roots: &[f64], exec: Exec) -> u64 {
    let lt = left.table(roots);
    let same = std::ptr::eq(left, right);
    let rt_owned;
    let rt: &[PairSum] = if same {
        &lt
    } else {
        rt_owned = right.table(roots);
        &rt_owned
    };
    let block = 4096;
    let parts = map_blocks(exec, lt.len(), block, |range| {
        let first = &lt[range.start];
        let start_hi = rt.partition_point(|p| p.s < first.s + delta - 2.0 * EDGE_EPS);
        let start_lo = rt.partition_point(|p| p.s < first.s - delta - 2.0 * EDGE_EPS);
        let w_before = |k: usize| rt[..k].iter().map(|p| p.w as u64).sum::<u64>();
        let mut win = Window::new(rt[start_hi..].iter().copied(), rt[start_lo..].iter().copied());
        win.upper_total = w_before(start_hi);
        win.lower_total = w_before(start_lo);
        let mut total = 0u64;
        for x in &lt[range] {
            total += x.w as u64 * win.count(x, left.exact(x), right, delta);
        }
        total
    });
    parts.into_iter().sum()
}

fn count_streaming(left: &Side, right: &Side, delta: f64, roots: &[f64]) -> u64 {
    let mut win = Window::new(RowMerge::new(*right, roots), RowMerge::new(*right, roots));
    let mut total = 0u64;
    for x in RowMerge::new(*left, roots) {
        total += x.w as u64 * win.count(&x, left.exact(&x), right, delta);
    }
    total
}

fn run_count(left: Side, right: Option<Side>, delta: f64, opts: &CountOptions) -> Result<u64> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidArgument(format!("delta = {delta} must be positive")));
    }
    let entries = left.len() + right.map_or(0, |r| r.len());
    let bytes = entries.saturating_mul(std::mem::size_of::<PairSum>() as u64);
    let use_table = match opts.strategy {
        CountStrategy::Table => {
            if bytes > opts.budget_bytes {
                return Err(Error::Resource(format!(
                    "pair table needs {bytes} bytes, budget is {} bytes",
                    opts.budget_bytes
                )));
            }
            true
        }
        CountStrategy::Streaming => false,
        CountStrategy::Auto => bytes <= opts.budget_bytes,
    };
    let top = [left.ra.1, left.rb.1]
        .into_iter()
        .chain(right.iter().flat_map(|r| [r.ra.1, r.rb.1]))
        .max()
        .unwrap_or(0);
    let roots: Vec<f64> = (0..=top).map(|n| (n as f64).sqrt()).collect();
    let right_ref = right.as_ref().unwrap_or(&left);
    Ok(if use_table {
        count_table(&left, right_ref, delta, &roots, opts.exec)
    } else {
        count_streaming(&left, right_ref, delta, &roots)
    })
}

fn check_range(n: u64) -> Result<(u64, u64)> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("range parameter {n} must be at least 2")));
    }
    if 2 * n > u32::MAX as u64 {
        return Err(Error::OutOfRange(format!("range parameter {n} too large")));
    }
    Ok((n, 2 * n))
}

/// Ordered quadruples in `(n, 2n]^4` with
/// `|sqrt n1 + sqrt n2 - sqrt n3 - sqrt n4| < delta`.
pub fn count_inequality(n: u64, delta: f64, opts: &CountOptions) -> Result<u64> {
    let r = check_range(n)?;
    let side = Side {
        kind: SideKind::SymmetricSum,
        ra: r,
        rb: r,
    };
    run_count(side, None, delta, opts)
}

/// As [`count_inequality`] over `n_j in (N_j, 2N_j]` for
/// `|sqrt n1 + sqrt n2 +- sqrt n3 - sqrt n4| < delta`.
pub fn count_inequality_signed(
    ranges: [u64; 4],
    delta: f64,
    sign: ThirdSign,
    opts: &CountOptions,
) -> Result<u64> {
    let r: Vec<(u64, u64)> = ranges.iter().map(|&n| check_range(n)).collect::<Result<_>>()?;
    let left = Side {
        kind: SideKind::Sum,
        ra: r[0],
        rb: r[1],
    };
    let right = match sign {
        ThirdSign::Minus => Side {
            kind: SideKind::Sum,
            ra: r[2],
            rb: r[3],
        },
        ThirdSign::Plus => Side {
            kind: SideKind::Difference,
            ra: r[3],
            rb: r[2],
        },
    };
    run_count(left, Some(right), delta, opts)
}

/// `count / (delta N^{7/2} + N^2)`.
pub fn count_bound_ratio(n: u64, delta: f64, count: u64) -> f64 {
    let nf = n as f64;
    count as f64 / (delta * nf.powf(3.5) + nf * nf)
}

/// One row of a counting experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    #[serde(rename = "N")]
    pub n: u64,
    pub delta: f64,
    pub count: u64,
    pub bound_ratio: f64,
}

impl CountRecord {
    pub fn run(n: u64, delta: f64, opts: &CountOptions) -> Result<Self> {
        let count = count_inequality(n, delta, opts)?;
        Ok(Self {
            n,
            delta,
            count,
            bound_ratio: count_bound_ratio(n, delta, count),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wide_multiply() {
        let a = u128::MAX;
        assert_eq!(mul_wide(a, a), (u128::MAX - 1, 1));
        assert_eq!(mul_wide(1 << 100, 1 << 100), (1 << 72, 0));
    }

    #[test]
    fn oracle_examples() {
        assert_eq!(exact_sqrt_relation(1, 16, 4, 9), Verdict::Equal);
        assert_eq!(exact_sqrt_relation(3, 3, 3, 4), Verdict::NotEqual);
        assert_eq!(exact_sqrt_relation(2, 8, 2, 8), Verdict::Equal);
        assert_eq!(exact_sqrt_relation(2, 8, 18, 2), Verdict::NotEqual);
        assert_eq!(exact_sqrt_relation(8, 2, 18, 2), Verdict::NotEqual);
        // 2 sqrt 2 + sqrt 2 = 3 sqrt 2
        assert_eq!(exact_sqrt_relation(8, 2, 18, 18), Verdict::NotEqual);
        assert_eq!(exact_three_one_relation(8, 2, 2, 32), Verdict::Equal);
        assert_eq!(exact_three_one_relation(1, 1, 1, 9), Verdict::Equal);
        assert_eq!(exact_three_one_relation(1, 1, 9, 1), Verdict::NotEqual);
        let big = EXACT_INPUT_MAX;
        assert_eq!(exact_sqrt_relation(big, big / 4, big / 4, big), Verdict::Equal);
    }

    #[test]
    fn smallest_bounds() {
        let one = enumerate_two_two(1, Exec::Sequential).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].ms, [1, 1, 1, 1]);
        assert_eq!(one[0].kernel(), Some(1));
        assert!(enumerate_two_two(3, Exec::Sequential)
            .unwrap()
            .iter()
            .all(|f| f.is_diagonal()));
        let ten = enumerate_three_one(10, Exec::Sequential).unwrap();
        assert_eq!(ten.len(), 1);
        assert_eq!(ten[0].ns(), [1, 1, 1, 9]);
        assert!(enumerate_three_one(8, Exec::Sequential).unwrap().is_empty());
        let t36 = enumerate_three_one(36, Exec::Sequential).unwrap();
        let f = t36.iter().find(|f| f.ms == [1, 1, 2, 4]).unwrap();
        assert_eq!(f.ordered().len(), 3);
    }

    #[test]
    fn expansion_matches_multiplicity() {
        for f in enumerate_two_two(60, Exec::Sequential).unwrap() {
            let o = f.ordered();
            assert_eq!(o.len(), f.multiplicity as usize);
            for q in o {
                assert_eq!(exact_sqrt_relation(q[0], q[1], q[2], q[3]), Verdict::Equal);
            }
        }
    }

    #[test]
    fn gap_examples() {
        let c = alpha_star_gap([1, 1, 1, 2], [1, 1, -1, -1]).unwrap();
        assert!((c.alpha_star + 0.41421356).abs() < 1e-8);
        assert!((c.ratio() - 0.41421356 * 2f64.powf(1.5) * 2f64.sqrt()).abs() < 1e-7);
        let z = alpha_star_gap([1, 16, 4, 9], [1, 1, -1, -1]).unwrap();
        assert!(z.exact_zero);
        assert_eq!(z.alpha_star, 0.0);
        let p = alpha_star_gap([2, 3, 5, 7], [1, 1, 1, -1]).unwrap();
        let direct = 2f64.sqrt() + 3f64.sqrt() + 5f64.sqrt() - 7f64.sqrt();
        assert!((p.alpha_star - direct).abs() < 1e-15);
        assert!((p.alpha_star - 2.7365810).abs() < 1e-6);
        assert!(p.ratio() > 1.0);
    }

    #[test]
    fn small_counts() {
        let o = CountOptions::default();
        assert_eq!(count_inequality(2, 0.01, &o).unwrap(), 6);
        assert_eq!(count_inequality(2, 10.0, &o).unwrap(), 16);
        assert_eq!(count_inequality_signed([2; 4], 0.01, ThirdSign::Minus, &o).unwrap(), 6);
        assert_eq!(count_inequality_signed([2; 4], 0.01, ThirdSign::Plus, &o).unwrap(), 0);
        assert!(count_inequality(1, 0.1, &o).is_err());
        assert!(count_inequality(4, 0.0, &o).is_err());
    }

    #[test]
    fn table_budget_is_enforced() {
        let o = CountOptions {
            strategy: CountStrategy::Table,
            budget_bytes: 1000,
            exec: Exec::Sequential,
        };
        match count_inequality(64, 0.1, &o) {
            Err(Error::Resource(msg)) => assert!(msg.contains("1000")),
            other => panic!("expected resource error, got {other:?}"),
        }
    }
}
