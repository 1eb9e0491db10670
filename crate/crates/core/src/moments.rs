//! Short-interval power moments of `Delta`, its alternating analogue and
//! `E`, together with the main terms they are compared against and the
//! parameter ranges in which those comparisons are meaningful.
//!
//! Direct moments integrate `(F(x + U) - F(x))^p` piece by piece: for the
//! divisor families the prefix sums are constant between consecutive
//! breakpoints, so each piece has an elementary integrand. For `E` the
//! integrand is sampled with an evaluator on a fixed panel grid.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::arith::{kernel_table, DivisorTable, MathConstants, EULER_GAMMA};
use crate::error::{Error, Result};
use crate::par::{map_blocks, map_indexed, Exec};
use crate::quad::{gl16, rule, GaussLegendre};
use crate::quadruples::{enumerate_two_two, QuadrupleFamily};
use crate::sum::Neumaier;
use crate::voronoi::smooth_part;
use crate::zeta_line::{atkinson_window, big_e_atkinson, IntegralCache};

/// Default truncation constant `c` in `y = c (T / U)^{1/4}`.
pub const DEFAULT_Y_CONST: f64 = 0.1;

/// Upper bound on `|E - (Sigma_1 + Sigma_2)| / ln^2 t`, calibrated against the
/// quadrature evaluator on 50 seeded points in `[10^3, 10^4]` (largest
/// observed ratio 0.072) and frozen.
pub const ATKINSON_ERROR_CONST: f64 = 0.1;

/// Panels used by the smooth main-term integrals.
pub const MAIN_TERM_PANELS: usize = 1000;

/// Width of the sampling panels for `E`. The fastest phase in the expansion
/// moves by at most `2 arsinh(sqrt(pi / 2)) < 2.1` per unit, so an 8-point
/// panel of this width spans under nine radians of the weakest terms and
/// far less of the dominant ones.
pub const ZETA_PANEL_WIDTH: f64 = 4.0;

/// Breakpoint-delimited pieces handled per work block.
const PIECE_BLOCK: f64 = 4096.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Delta,
    DeltaStar,
    ZetaE,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Delta, Family::DeltaStar, Family::ZetaE];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Delta => "delta",
            Family::DeltaStar => "delta_star",
            Family::ZetaE => "zeta_e",
        }
    }

    /// Prefix-sum resolution: breakpoints sit on multiples of `1 / scale`.
    fn scale(self) -> f64 {
        if self == Family::DeltaStar {
            4.0
        } else {
            1.0
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown family '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSpec {
    pub family: Family,
    pub p: u32,
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "H")]
    pub h: f64,
    #[serde(rename = "U")]
    pub u: f64,
    pub y_const: f64,
}

impl MomentSpec {
    pub fn new(family: Family, p: u32, t: f64, h: f64, u: f64) -> Result<Self> {
        let spec = Self {
            family,
            p,
            t,
            h,
            u,
            y_const: DEFAULT_Y_CONST,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_y_const(self, c: f64) -> Result<Self> {
        let spec = Self { y_const: c, ..self };
        spec.validate()?;
        Ok(spec)
    }

    /// `p` in `{1, 2, 4}`, `T >= 2`, `0 < H <= T`, `U >= 0`, `c > 0`. A zero
    /// shift is allowed for direct moments, which then vanish.
    pub fn validate(&self) -> Result<()> {
        if ![1, 2, 4].contains(&self.p) {
            return Err(Error::InvalidArgument(format!("power {} not in {{1, 2, 4}}", self.p)));
        }
        if !(self.t.is_finite() && self.t >= 2.0) {
            return Err(Error::InvalidArgument(format!("T = {} must be at least 2", self.t)));
        }
        if !(self.h > 0.0 && self.h <= self.t) {
            return Err(Error::InvalidArgument(format!(
                "H = {} must lie in (0, T = {}]",
                self.h, self.t
            )));
        }
        if !(self.u.is_finite() && self.u >= 0.0) {
            return Err(Error::InvalidArgument(format!("U = {} must be non-negative", self.u)));
        }
        if !(self.y_const.is_finite() && self.y_const > 0.0) {
            return Err(Error::InvalidArgument(format!("c = {} must be positive", self.y_const)));
        }
        Ok(())
    }

    /// `c (T / U)^{1/4}`.
    pub fn y(&self) -> f64 {
        self.y_const * (self.t / self.u).powf(0.25)
    }

    /// `floor(y)`, rejecting `y < 1` (empty main-term sums).
    pub fn y_bound(&self) -> Result<u64> {
        let y = self.y();
        if !(y.is_finite() && y >= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "main terms need y = c (T/U)^(1/4) >= 1, got {y:.4} (raise c or T/U)"
            )));
        }
        Ok(y.floor() as u64)
    }

    /// Right end of the region the integrand reads, `T + H + U`.
    pub fn reach(&self) -> f64 {
        self.t + self.h + self.u
    }

    /// `H U^2 ln^6(T / U^2)` for `p = 4`, `H U ln^3(sqrt(T) / U)` for `p = 2`,
    /// `H` for `p = 1`; `None` when the form is not positive.
    pub fn normalizer(&self) -> Option<f64> {
        let v = match self.p {
            4 => self.h * self.u.powi(2) * (self.t / self.u.powi(2)).ln().powi(6),
            2 => self.h * self.u * (self.t.sqrt() / self.u).ln().powi(3),
            _ => self.h,
        };
        (v.is_finite() && v > 0.0).then_some(v)
    }
}

/// How `E(t)` is sampled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EEvaluator {
    /// The arsinh-phase expansion truncated at `N = ceil(ratio t)`, clamped
    /// to the admissible window `[t/2, 2t]`.
    Atkinson { n_cap_ratio: f64 },
    /// Cumulative-integral grid; the cache must already cover `T + H + U`.
    Quadrature,
}

impl Default for EEvaluator {
    /// `N = t/2`: the cheapest admissible truncation, with the same
    /// calibrated accuracy as `N = t`.
    fn default() -> Self {
        EEvaluator::Atkinson { n_cap_ratio: 0.5 }
    }
}

impl EEvaluator {
    fn n_cap(ratio: f64, t: f64) -> u64 {
        let (lo, hi) = atkinson_window(t);
        ((ratio * t).ceil() as u64).clamp(lo, hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentOptions {
    pub exec: Exec,
    /// Gauss-Legendre order per piece or panel.
    pub gl_order: usize,
    pub evaluator: EEvaluator,
    pub zeta_panel_width: f64,
}

impl Default for MomentOptions {
    fn default() -> Self {
        Self {
            exec: Exec::Parallel,
            gl_order: 8,
            evaluator: EEvaluator::default(),
            zeta_panel_width: ZETA_PANEL_WIDTH,
        }
    }
}

/// Precomputed inputs a computation may read.
#[derive(Debug, Clone, Copy, Default)]
pub struct Resources<'a> {
    pub table: Option<&'a DivisorTable>,
    pub cache: Option<&'a IntegralCache>,
}

impl<'a> Resources<'a> {
    pub fn with_table(table: &'a DivisorTable) -> Self {
        Self {
            table: Some(table),
            cache: None,
        }
    }

    fn table(&self, need: u64, what: &str) -> Result<&'a DivisorTable> {
        let table = self
            .table
            .ok_or_else(|| Error::Resource(format!("{what} needs a divisor table up to {need}")))?;
        table.require(need, what)?;
        Ok(table)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub spec: MomentSpec,
    pub direct_value: f64,
    pub main_quadruple: Option<f64>,
    pub main_diagonal: Option<f64>,
    pub normalizer: Option<f64>,
    /// Bound on the change of `direct_value` caused by evaluator error; zero
    /// for the divisor families, which are integrated exactly piecewise.
    pub evaluator_error_budget: f64,
    pub panel_count: u64,
}

/// Ratios derived from a [`MomentReport`]; never stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentRatios {
    pub direct_over_normalizer: Option<f64>,
    pub direct_over_diagonal: Option<f64>,
    pub direct_over_quadruple: Option<f64>,
    /// `|main_quadruple - main_diagonal| / main_diagonal`.
    pub main_term_gap: Option<f64>,
}

impl MomentReport {
    pub fn ratios(&self) -> MomentRatios {
        let d = self.direct_value;
        MomentRatios {
            direct_over_normalizer: self.normalizer.map(|n| d / n),
            direct_over_diagonal: self.main_diagonal.map(|m| d / m),
            direct_over_quadruple: self.main_quadruple.map(|m| d / m),
            main_term_gap: self
                .main_quadruple
                .zip(self.main_diagonal)
                .map(|(q, m)| (q - m).abs() / m),
        }
    }
}

/// Which main terms to attach to a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MainTerms {
    None,
    Quadruple,
    Diagonal,
    Both,
}

/// `smooth_part(x + u) - smooth_part(x)` without cancellation.
#[inline]
fn smooth_shift(x: f64, u: f64) -> f64 {
    u * ((x + u).ln() + 2.0 * EULER_GAMMA - 1.0) + x * (u / x).ln_1p()
}

/// Step part of the divisor-type families at index `m`.
#[inline]
fn step_value(family: Family, table: &DivisorTable, m: u64) -> f64 {
    match family {
        Family::DeltaStar => 0.5 * table.alt_prefix(m) as f64,
        _ => table.prefix(m) as f64,
    }
}

/// Sorted breakpoints in `(lo, hi)`: multiples of `1 / scale` and, with a
/// shift, the same points moved left by it.
fn breakpoints(lo: f64, hi: f64, scale: f64, shift: Option<f64>) -> Vec<f64> {
    let grid = |offset: f64| {
        let first = ((lo + offset) * scale).floor() as u64 + 1;
        (first..)
            .map(move |k| k as f64 / scale - offset)
            .take_while(move |&x| x < hi)
    };
    let mut pts: Vec<f64> = grid(0.0).collect();
    if let Some(u) = shift {
        let other: Vec<f64> = grid(u).collect();
        let mut merged = Vec::with_capacity(pts.len() + other.len());
        let (mut i, mut j) = (0, 0);
        while i < pts.len() || j < other.len() {
            if j == other.len() || (i < pts.len() && pts[i] <= other[j]) {
                merged.push(pts[i]);
                i += 1;
            } else {
                merged.push(other[j]);
                j += 1;
            }
        }
        pts = merged;
    }
    pts
}

/// Integrates `piece(a, b)` over the breakpoint pieces of `[lo, hi]`, in
/// fixed blocks reduced in order. Returns the sum and the piece count.
fn piecewise<F>(lo: f64, hi: f64, scale: f64, shift: Option<f64>, exec: Exec, piece: F) -> (f64, u64)
where
    F: Fn(f64, f64) -> f64 + Sync + Send,
{
    let span = PIECE_BLOCK / scale;
    let blocks = ((hi - lo) / span).ceil().max(1.0) as usize;
    let parts = map_indexed(exec, blocks, |b| {
        let a = lo + b as f64 * span;
        let z = if b + 1 == blocks { hi } else { lo + (b + 1) as f64 * span };
        let mut acc = Neumaier::new();
        let mut count = 0u64;
        let mut left = a;
        for right in breakpoints(a, z, scale, shift).into_iter().chain(std::iter::once(z)) {
            if right > left {
                acc.add(piece(left, right));
                count += 1;
            }
            left = left.max(right);
        }
        (acc, count)
    });
    let mut total = Neumaier::new();
    let mut count = 0;
    for (acc, c) in parts {
        total.merge(&acc);
        count += c;
    }
    (total.value(), count)
}

/// Divisor table size the direct moment needs, and the main terms when
/// `with_main` is set.
pub fn table_requirement(spec: &MomentSpec, opts: &MomentOptions, with_main: bool) -> u64 {
    let direct = match (spec.family, opts.evaluator) {
        (Family::ZetaE, EEvaluator::Atkinson { n_cap_ratio }) => EEvaluator::n_cap(n_cap_ratio.clamp(0.5, 2.0), spec.reach()),
        (Family::ZetaE, EEvaluator::Quadrature) => 1,
        (family, _) => (family.scale() * spec.reach()).floor() as u64,
    };
    let main = if !with_main {
        1
    } else if spec.p == 2 {
        (spec.t / (2.0 * spec.u.max(1e-300))).floor().min(1e12) as u64
    } else {
        spec.y().floor().min(1e12) as u64
    };
    direct.max(main).max(1)
}

fn divisor_moment(spec: &MomentSpec, res: &Resources, opts: &MomentOptions) -> Result<(f64, u64)> {
    let scale = spec.family.scale();
    let table = res.table((scale * spec.reach()).floor() as u64, "direct moment")?;
    let gl = rule(opts.gl_order);
    let (u, p) = (spec.u, spec.p as i32);
    Ok(piecewise(spec.t, spec.t + spec.h, scale, Some(u), opts.exec, |a, b| {
        let mid = 0.5 * (a + b);
        let jump = step_value(spec.family, table, ((mid + u) * scale).floor() as u64)
            - step_value(spec.family, table, (mid * scale).floor() as u64);
        gl.integrate(a, b, |x| (jump - smooth_shift(x, u)).powi(p))
    }))
}

/// A prepared `E` evaluator and its per-point error bound.
struct ESampler<'a> {
    eval: Box<dyn Fn(f64) -> f64 + Sync + 'a>,
    per_point_error: f64,
}

fn e_sampler<'a>(reach: f64, res: &Resources<'a>, evaluator: EEvaluator) -> Result<ESampler<'a>> {
    match evaluator {
        EEvaluator::Atkinson { n_cap_ratio } => {
            if !(0.5..=2.0).contains(&n_cap_ratio) {
                return Err(Error::InvalidArgument(format!(
                    "truncation ratio {n_cap_ratio} outside [0.5, 2]"
                )));
            }
            let table = res.table(EEvaluator::n_cap(n_cap_ratio, reach), "E evaluator")?;
            Ok(ESampler {
                eval: Box::new(move |t| {
                    big_e_atkinson(t, EEvaluator::n_cap(n_cap_ratio, t), table)
                        .expect("window and table checked")
                }),
                per_point_error: ATKINSON_ERROR_CONST * reach.ln().powi(2),
            })
        }
        EEvaluator::Quadrature => {
            let cache = res
                .cache
                .ok_or_else(|| Error::Resource("quadrature evaluator needs an integral cache".into()))?;
            if cache.covered() < reach {
                return Err(Error::OutOfRange(format!(
                    "integral cache covers [0, {}], need {reach}",
                    cache.covered()
                )));
            }
            Ok(ESampler {
                eval: Box::new(move |t| cache.big_e(t).expect("coverage checked")),
                per_point_error: 1e-4 * reach.powf(0.25),
            })
        }
    }
}

/// Mapped nodes and weights of `panels` panels of width `w` starting at `a`.
fn panel_nodes(gl: &GaussLegendre, a: f64, w: f64, panels: usize) -> Vec<(f64, f64)> {
    (0..panels)
        .flat_map(|k| {
            let lo = a + k as f64 * w;
            gl.mapped(lo, lo + w).collect::<Vec<_>>()
        })
        .collect()
}

fn sample(exec: Exec, nodes: &[(f64, f64)], f: &(dyn Fn(f64) -> f64 + Sync)) -> Vec<f64> {
    map_indexed(exec, nodes.len(), |i| f(nodes[i].0))
}

/// `(value, sensitivity, panels)` for the `E` family. Panel width divides
/// `U`, so samples at `x + U` coincide with samples of later panels.
fn zeta_moment(spec: &MomentSpec, sampler: &ESampler, opts: &MomentOptions) -> (f64, f64, u64) {
    let gl = rule(opts.gl_order);
    let p = spec.p as i32;
    let shift_panels = (spec.u / opts.zeta_panel_width).ceil().max(1.0) as usize;
    let w = spec.u / shift_panels as f64;
    let full = (spec.h / w).floor() as usize;
    let nodes = panel_nodes(&gl, spec.t, w, full + shift_panels);
    let values = sample(opts.exec, &nodes, sampler.eval.as_ref());
    let g = gl.order();
    let (mut val, mut sens) = (Neumaier::new(), Neumaier::new());
    let mut fold = |wt: f64, diff: f64| {
        val.add(wt * diff.powi(p));
        sens.add(wt * p as f64 * diff.abs().powi(p - 1));
    };
    for i in 0..full * g {
        fold(nodes[i].1, values[i + shift_panels * g] - values[i]);
    }
    let start = spec.t + full as f64 * w;
    let mut panels = full as u64;
    if spec.t + spec.h - start > 1e-12 * spec.h {
        for (x, wt) in gl.mapped(start, spec.t + spec.h) {
            fold(wt, (sampler.eval)(x + spec.u) - (sampler.eval)(x));
        }
        panels += 1;
    }
    (val.value(), sens.value(), panels)
}

/// `int_T^{T+H} (F(x + U) - F(x))^p dx`.
pub fn moment_integral(spec: &MomentSpec, res: &Resources, opts: &MomentOptions) -> Result<MomentReport> {
    spec.validate()?;
    let mut report = MomentReport {
        spec: *spec,
        direct_value: 0.0,
        main_quadruple: None,
        main_diagonal: None,
        normalizer: spec.normalizer(),
        evaluator_error_budget: 0.0,
        panel_count: 0,
    };
    if spec.u == 0.0 {
        return Ok(report);
    }
    match spec.family {
        Family::Delta | Family::DeltaStar => {
            let (v, n) = divisor_moment(spec, res, opts)?;
            report.direct_value = v;
            report.panel_count = n;
        }
        Family::ZetaE => {
            let sampler = e_sampler(spec.reach(), res, opts.evaluator)?;
            let (v, sens, n) = zeta_moment(spec, &sampler, opts);
            report.direct_value = v;
            // each difference carries two evaluator errors
            report.evaluator_error_budget = 2.0 * sampler.per_point_error * sens;
            report.panel_count = n;
        }
    }
    Ok(report)
}

/// Attaches the requested main terms to `report`.
pub fn attach_main_terms(
    report: &mut MomentReport,
    which: MainTerms,
    table: &DivisorTable,
    exec: Exec,
) -> Result<()> {
    if matches!(which, MainTerms::Quadruple | MainTerms::Both) {
        report.main_quadruple = Some(main_quadruple(&report.spec, table, exec)?);
    }
    if matches!(which, MainTerms::Diagonal | MainTerms::Both) {
        report.main_diagonal = Some(main_diagonal(&report.spec, table, exec)?);
    }
    Ok(())
}

/// Per-family phase scale and constants of the fourth-moment main terms:
/// the angle is `scale U sqrt(n / x)`.
struct MainShape {
    phase_scale: f64,
    quadruple_const: f64,
    diagonal_const: f64,
}

fn main_shape(spec: &MomentSpec) -> Result<MainShape> {
    if spec.p != 4 {
        return Err(Error::InvalidArgument("fourth-moment main terms need p = 4".into()));
    }
    match spec.family {
        Family::Delta => Ok(MainShape {
            phase_scale: PI,
            quadruple_const: 3.0 / (2.0 * PI.powi(4)),
            diagonal_const: 3.0 / PI.powi(4),
        }),
        Family::ZetaE => Ok(MainShape {
            phase_scale: (PI / 2.0).sqrt(),
            quadruple_const: 12.0 / PI,
            diagonal_const: 24.0 / PI,
        }),
        Family::DeltaStar => Err(Error::InvalidArgument(
            "main terms are defined for delta and zeta_e only".into(),
        )),
    }
}

fn main_nodes(spec: &MomentSpec) -> Vec<(f64, f64)> {
    let w = spec.h / MAIN_TERM_PANELS as f64;
    panel_nodes(gl16(), spec.t, w, MAIN_TERM_PANELS)
}

/// `sum_node weight * f(node)` over the main-term grid, reduced in order.
fn integrate_nodes<F>(nodes: &[(f64, f64)], exec: Exec, f: F) -> f64
where
    F: Fn(f64) -> f64 + Sync + Send,
{
    map_blocks(exec, nodes.len(), 256, |r| {
        r.map(|i| nodes[i].1 * f(nodes[i].0)).collect::<Neumaier>()
    })
    .into_iter()
    .sum::<Neumaier>()
    .value()
}

/// `d(n)^2 / n^{3/2}` for `n = 1..=y` (index 0 unused).
fn squared_weights(y: u64, table: &DivisorTable) -> Vec<f64> {
    (0..=y)
        .map(|n| {
            if n == 0 {
                0.0
            } else {
                (table.d(n) as f64).powi(2) / (n as f64).powf(1.5)
            }
        })
        .collect()
}

/// Ordered solutions of `sqrt n1 + sqrt n2 = sqrt n3 + sqrt n4` with
/// `n <= y`, grouped by square-free kernel: `kernel_members[l]` lists the
/// `l m^2 <= y` in increasing `m` (empty unless `l` is square-free).
fn kernel_members(y: u64) -> Result<Vec<Vec<usize>>> {
    let kernels = kernel_table(y)?;
    let mut members = vec![Vec::new(); y as usize + 1];
    for n in 1..=y as usize {
        members[kernels[n] as usize].push(n);
    }
    Ok(members)
}

/// `sum prod_j b(n_j)` over ordered solutions with every `n <= y`. Solutions
/// sharing a kernel `l` are `m1 + m2 = m3 + m4`, a squared self-convolution;
/// the only mixed-kernel solutions are the diagonal ones `{n1, n2} = {n3, n4}`.
fn quadruple_form(b: &[f64], members: &[Vec<usize>], conv: &mut Vec<f64>) -> f64 {
    let mut same = Neumaier::new();
    let mut total_sq = Neumaier::new();
    let mut per_kernel_sq = Neumaier::new();
    for group in members.iter().filter(|g| !g.is_empty()) {
        let v: Vec<f64> = group.iter().map(|&n| b[n]).collect();
        conv.clear();
        conv.resize(2 * v.len(), 0.0);
        for (i, vi) in v.iter().enumerate() {
            for (j, vj) in v.iter().enumerate() {
                conv[i + j] += vi * vj;
            }
        }
        same.add(conv.iter().map(|c| c * c).sum::<f64>());
        let sq: f64 = v.iter().map(|x| x * x).sum();
        total_sq.add(sq);
        per_kernel_sq.add(sq * sq);
    }
    let mixed = 2.0 * (total_sq.value().powi(2) - per_kernel_sq.value());
    same.value() + mixed
}

/// Fourth-moment main term summed over ordered solutions of
/// `sqrt n1 + sqrt n2 = sqrt n3 + sqrt n4` with every `n <= y`, each weighted
/// by `prod d(n_j) n_j^{-3/4} sin(angle_j)`.
pub fn main_quadruple(spec: &MomentSpec, table: &DivisorTable, exec: Exec) -> Result<f64> {
    spec.validate()?;
    let shape = main_shape(spec)?;
    let y = spec.y_bound()?;
    table.require(y, "main term")?;
    let members = kernel_members(y)?;
    let coef: Vec<f64> = (0..=y)
        .map(|n| if n == 0 { 0.0 } else { table.d(n) as f64 / (n as f64).powf(0.75) })
        .collect();
    let amp = shape.phase_scale * spec.u;
    let value = integrate_nodes(&main_nodes(spec), exec, |x| {
        let b: Vec<f64> = (0..=y as usize)
            .map(|n| coef[n] * (amp * (n as f64 / x).sqrt()).sin())
            .collect();
        x * quadruple_form(&b, &members, &mut Vec::new())
    });
    Ok(shape.quadruple_const * value)
}

/// [`main_quadruple`] evaluated family by family from the enumerator; slower,
/// kept as an independent cross-check.
pub fn main_quadruple_by_families(spec: &MomentSpec, table: &DivisorTable, exec: Exec) -> Result<f64> {
    spec.validate()?;
    let shape = main_shape(spec)?;
    let y = spec.y_bound()?;
    table.require(y, "main term")?;
    let families = enumerate_two_two(y, exec)?;
    let weighted: Vec<(f64, [usize; 4])> = families
        .iter()
        .map(|f: &QuadrupleFamily| {
            let ns = f.ns();
            let d: f64 = ns.iter().map(|&n| table.d(n) as f64).product();
            let prod: f64 = ns.iter().map(|&n| n as f64).product();
            (f.multiplicity as f64 * d / prod.powf(0.75), ns.map(|n| n as usize))
        })
        .collect();
    let amp = shape.phase_scale * spec.u;
    let value = integrate_nodes(&main_nodes(spec), exec, |x| {
        let sines: Vec<f64> = (0..=y).map(|n| (amp * (n as f64 / x).sqrt()).sin()).collect();
        let inner: Neumaier = weighted
            .iter()
            .map(|(w, idx)| w * idx.iter().map(|&i| sines[i]).product::<f64>())
            .collect();
        x * inner.value()
    });
    Ok(shape.quadruple_const * value)
}

/// Diagonal form of the main term:
/// `const * int x (sum_{n<=y} d(n)^2 n^{-3/2} sin^2(angle_n))^2`.
pub fn main_diagonal(spec: &MomentSpec, table: &DivisorTable, exec: Exec) -> Result<f64> {
    spec.validate()?;
    let shape = main_shape(spec)?;
    let y = spec.y_bound()?;
    table.require(y, "main term")?;
    let a = squared_weights(y, table);
    let amp = shape.phase_scale * spec.u;
    let value = integrate_nodes(&main_nodes(spec), exec, |x| {
        let s: Neumaier = (1..=y as usize)
            .map(|n| a[n] * (amp * (n as f64 / x).sqrt()).sin().powi(2))
            .collect();
        x * s.value().powi(2)
    });
    Ok(shape.diagonal_const * value)
}

/// Mean-square main term for `p = 2`:
/// `K sum_{n <= T/2U} d(n)^2 n^{-3/2} int x^{1/2} |e^{2 i angle_n} - 1|^2 dx`
/// with `K = 1 / 4 pi^2` for `Delta` and `1 / sqrt(2 pi)` for `E`.
pub fn jutila_ms_main(spec: &MomentSpec, table: &DivisorTable, exec: Exec) -> Result<f64> {
    spec.validate()?;
    if spec.p != 2 {
        return Err(Error::InvalidArgument("mean-square main term needs p = 2".into()));
    }
    let (scale, k) = match spec.family {
        Family::Delta => (PI, 1.0 / (4.0 * PI * PI)),
        Family::ZetaE => ((PI / 2.0).sqrt(), 1.0 / (2.0 * PI).sqrt()),
        Family::DeltaStar => {
            return Err(Error::InvalidArgument(
                "mean-square main term is defined for delta and zeta_e only".into(),
            ))
        }
    };
    if spec.u == 0.0 {
        return Ok(0.0);
    }
    let n_max = (spec.t / (2.0 * spec.u)).floor() as u64;
    table.require(n_max.max(1), "mean-square main term")?;
    let a = squared_weights(n_max, table);
    let amp = scale * spec.u;
    let value = integrate_nodes(&main_nodes(spec), exec, |x| {
        let s: Neumaier = (1..=n_max as usize)
            .map(|n| a[n] * 4.0 * (amp * (n as f64 / x).sqrt()).sin().powi(2))
            .collect();
        x.sqrt() * s.value()
    });
    Ok(k * value)
}

/// `main_diagonal` for each `c`, with `None` where `y < 1`.
pub fn main_diagonal_c_scan(
    spec: &MomentSpec,
    cs: &[f64],
    table: &DivisorTable,
    exec: Exec,
) -> Result<Vec<(f64, f64, Option<f64>)>> {
    cs.iter()
        .map(|&c| {
            let s = spec.with_y_const(c)?;
            let value = if s.y() >= 1.0 {
                Some(main_diagonal(&s, table, exec)?)
            } else {
                None
            };
            Ok((c, s.y(), value))
        })
        .collect()
}

/// Whole-range mean square against its leading constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalRatio {
    pub family: Family,
    #[serde(rename = "T")]
    pub t: f64,
    pub integral: f64,
    pub constant: f64,
    /// `integral / (constant T^{3/2})`.
    pub ratio: f64,
    pub evaluator_error_budget: f64,
    pub panel_count: u64,
}

/// `int F^2` over `[1, T]` (`Delta`) or `[2, T]` (`E`), divided by
/// `constant T^{3/2}`.
pub fn classical_ms_ratio(
    family: Family,
    t: f64,
    res: &Resources,
    opts: &MomentOptions,
) -> Result<ClassicalRatio> {
    let consts = MathConstants::default();
    let (integral, constant, budget, panels) = match family {
        Family::Delta => {
            if !(t.is_finite() && t > 1.0) {
                return Err(Error::InvalidArgument(format!("T = {t} must exceed 1")));
            }
            let table = res.table(t.floor() as u64, "mean square")?;
            let gl = rule(opts.gl_order);
            let (v, n) = piecewise(1.0, t, 1.0, None, opts.exec, |a, b| {
                let step = table.prefix((0.5 * (a + b)).floor() as u64) as f64;
                gl.integrate(a, b, |x| (step - smooth_part(x)).powi(2))
            });
            (v, consts.tong_const(), 0.0, n)
        }
        Family::ZetaE => {
            if !(t.is_finite() && t > 2.0) {
                return Err(Error::InvalidArgument(format!("T = {t} must exceed 2")));
            }
            let sampler = e_sampler(t, res, opts.evaluator)?;
            let gl = rule(opts.gl_order);
            let panels = ((t - 2.0) / opts.zeta_panel_width).ceil().max(1.0) as usize;
            let nodes = panel_nodes(&gl, 2.0, (t - 2.0) / panels as f64, panels);
            let values = sample(opts.exec, &nodes, sampler.eval.as_ref());
            let (mut v, mut sens) = (Neumaier::new(), Neumaier::new());
            for ((_, w), e) in nodes.iter().zip(&values) {
                v.add(w * e * e);
                sens.add(w * 2.0 * e.abs());
            }
            let budget = sampler.per_point_error * sens.value();
            (v.value(), consts.meurman_const(), budget, panels as u64)
        }
        Family::DeltaStar => {
            return Err(Error::InvalidArgument(
                "whole-range mean square is defined for delta and zeta_e only".into(),
            ))
        }
    };
    Ok(ClassicalRatio {
        family,
        t,
        integral,
        constant,
        ratio: integral / (constant * t.powf(1.5)),
        evaluator_error_budget: budget,
        panel_count: panels,
    })
}

/// Parameter regimes whose hypotheses can be checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeId {
    /// Fourth moment of `Delta` differences: `T^{3/7} << U << T^{1/2}`,
    /// `H <= T`, `H^8 U^21 >> T^17`.
    FourthMoment,
    /// As `FourthMoment` plus `T^{5/6} << H`.
    FourthMomentLong,
    /// As `FourthMoment` with `H^16 U^36 >> T^31` in place of the last
    /// condition.
    FourthMomentBalanced,
    /// Order of magnitude: `U << T^{1/2 - eps}`, `H^8 U^21 >> T^{17 + eps}`.
    OrderOfMagnitude,
    /// Fourth moment of `E` differences: `FourthMoment` plus
    /// `T^{205/227} << H`.
    ZetaFourthMoment,
    /// `OrderOfMagnitude` plus `T^{205/227} << H`.
    ZetaOrderOfMagnitude,
}

impl RegimeId {
    pub const ALL: [RegimeId; 6] = [
        RegimeId::FourthMoment,
        RegimeId::FourthMomentLong,
        RegimeId::FourthMomentBalanced,
        RegimeId::OrderOfMagnitude,
        RegimeId::ZetaFourthMoment,
        RegimeId::ZetaOrderOfMagnitude,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RegimeId::FourthMoment => "fourth_moment",
            RegimeId::FourthMomentLong => "fourth_moment_long",
            RegimeId::FourthMomentBalanced => "fourth_moment_balanced",
            RegimeId::OrderOfMagnitude => "order_of_magnitude",
            RegimeId::ZetaFourthMoment => "zeta_fourth_moment",
            RegimeId::ZetaOrderOfMagnitude => "zeta_order_of_magnitude",
        }
    }
}

impl FromStr for RegimeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RegimeId::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown regime '{s}'")))
    }
}

/// `eps` in the `T^{+-eps}` conditions.
pub const ADMISSIBILITY_EPS: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Margin {
    pub condition: String,
    /// `log10(B) - log10(A)` for a condition `A << B`.
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityCase {
    pub case_id: RegimeId,
    pub margins: Vec<Margin>,
}

impl AdmissibilityCase {
    pub fn passes(&self) -> bool {
        self.margins.iter().all(|m| m.slack >= 0.0)
    }
}

/// Each `A << B` becomes `log10 B - log10 A` with unit implicit constants.
pub fn check_admissibility(spec: &MomentSpec, case_id: RegimeId) -> AdmissibilityCase {
    let (lt, lh, lu) = (spec.t.log10(), spec.h.log10(), spec.u.log10());
    let eps = ADMISSIBILITY_EPS;
    let mut margins = Vec::new();
    let mut push = |condition: &str, slack: f64| {
        margins.push(Margin {
            condition: condition.to_string(),
            slack,
        })
    };
    let order = matches!(case_id, RegimeId::OrderOfMagnitude | RegimeId::ZetaOrderOfMagnitude);
    push("T^(3/7) << U", lu - 3.0 / 7.0 * lt);
    if order {
        push("U << T^(1/2-eps)", (0.5 - eps) * lt - lu);
    } else {
        push("U << T^(1/2)", 0.5 * lt - lu);
    }
    push("H <= T", lt - lh);
    match case_id {
        RegimeId::FourthMomentBalanced => push("H^16 U^36 >> T^31", 16.0 * lh + 36.0 * lu - 31.0 * lt),
        _ if order => push("H^8 U^21 >> T^(17+eps)", 8.0 * lh + 21.0 * lu - (17.0 + eps) * lt),
        _ => push("H^8 U^21 >> T^17", 8.0 * lh + 21.0 * lu - 17.0 * lt),
    }
    match case_id {
        RegimeId::FourthMomentLong => push("T^(5/6) << H", lh - 5.0 / 6.0 * lt),
        RegimeId::ZetaFourthMoment | RegimeId::ZetaOrderOfMagnitude => {
            push("T^(205/227) << H", lh - 205.0 / 227.0 * lt)
        }
        _ => {}
    }
    AdmissibilityCase { case_id, margins }
}

/// Resolves `U` given as a real or as `autoNN`, meaning `T^{0.NN}`; auto
/// values are floored to an integer.
pub fn resolve_shift(text: &str, t: f64) -> Result<f64> {
    if let Some(digits) = text.strip_prefix("auto") {
        if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
            return Err(Error::InvalidArgument(format!("bad auto exponent '{text}'")));
        }
        let exponent: f64 = format!("0.{digits}").parse().expect("digits");
        return Ok(t.powf(exponent).floor());
    }
    text.parse::<f64>()
        .map_err(|_| Error::InvalidArgument(format!("'{text}' is neither a number nor autoNN")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::sieve_divisors;
    use crate::voronoi::delta_exact;
    use approx::assert_relative_eq;

    fn spec(family: Family, p: u32, t: f64, h: f64, u: f64) -> MomentSpec {
        MomentSpec::new(family, p, t, h, u).unwrap()
    }

    #[test]
    fn validation() {
        assert!(MomentSpec::new(Family::Delta, 3, 100.0, 10.0, 1.0).is_err());
        assert!(MomentSpec::new(Family::Delta, 2, 1.0, 1.0, 1.0).is_err());
        assert!(MomentSpec::new(Family::Delta, 2, 100.0, 200.0, 1.0).is_err());
        assert!(MomentSpec::new(Family::Delta, 2, 100.0, 0.0, 1.0).is_err());
        assert!(MomentSpec::new(Family::Delta, 2, 100.0, 10.0, -1.0).is_err());
        assert!(spec(Family::Delta, 4, 1e4, 1e4, 10.0).y_bound().is_err());
        assert_eq!("delta_star".parse::<Family>().unwrap(), Family::DeltaStar);
    }

    #[test]
    fn zero_shift_vanishes() {
        let t = sieve_divisors(1000).unwrap();
        for f in [Family::Delta, Family::DeltaStar, Family::ZetaE] {
            let r = moment_integral(&spec(f, 4, 100.0, 10.0, 0.0), &Resources::with_table(&t), &MomentOptions::default())
                .unwrap();
            assert_eq!(r.direct_value, 0.0);
        }
    }

    #[test]
    fn breakpoints_merge_and_skip_duplicates() {
        assert_eq!(breakpoints(1.5, 4.0, 1.0, None), vec![2.0, 3.0]);
        assert_eq!(breakpoints(1.5, 4.0, 1.0, Some(0.5)), vec![2.0, 2.5, 3.0, 3.5]);
        assert_eq!(breakpoints(1.5, 4.0, 1.0, Some(1.0)), vec![2.0, 2.0, 3.0, 3.0]);
        assert_eq!(breakpoints(0.0, 1.0, 4.0, None), vec![0.25, 0.5, 0.75]);
    }

    #[test]
    fn matches_midpoint_oracle() {
        let table = sieve_divisors(200).unwrap();
        let s = spec(Family::Delta, 2, 100.0, 10.0, 1.0);
        let r = moment_integral(&s, &Resources::with_table(&table), &MomentOptions::default()).unwrap();
        let step = 1e-4;
        let n = (10.0 / step) as usize;
        let oracle: Neumaier = (0..n)
            .map(|i| {
                let x = 100.0 + (i as f64 + 0.5) * step;
                let d = delta_exact(x + 1.0, &table).unwrap() - delta_exact(x, &table).unwrap();
                d * d * step
            })
            .collect();
        assert_relative_eq!(r.direct_value, oracle.value(), max_relative = 1e-6);
        assert_eq!(r.evaluator_error_budget, 0.0);
    }

    #[test]
    fn gauss_order_invariance() {
        let table = sieve_divisors(20_000).unwrap();
        let res = Resources::with_table(&table);
        for family in [Family::Delta, Family::DeltaStar] {
            let s = spec(family, 4, 1000.0, 1000.0, 7.5);
            let a = moment_integral(&s, &res, &MomentOptions::default()).unwrap().direct_value;
            let opts = MomentOptions {
                gl_order: 16,
                ..Default::default()
            };
            let b = moment_integral(&s, &res, &opts).unwrap().direct_value;
            assert!((a - b).abs() < 1e-6 * b, "{family}: {a} vs {b}");
        }
    }

    #[test]
    fn single_family_reductions() {
        let table = sieve_divisors(100).unwrap();
        // y in [1, 2): only (1, 1, 1, 1), multiplicity 1
        let s = spec(Family::Delta, 4, 1e4, 1e4, 100.0).with_y_const(0.5).unwrap();
        assert_eq!(s.y_bound().unwrap(), 1);
        let q = main_quadruple(&s, &table, Exec::Sequential).unwrap();
        let d = main_diagonal(&s, &table, Exec::Sequential).unwrap();
        let direct = 3.0 / (2.0 * PI.powi(4))
            * crate::quad::composite(gl16(), 1e4, 2e4, 1000, |x| x * (PI * 100.0 / x.sqrt()).sin().powi(4));
        assert_relative_eq!(q, direct, max_relative = 1e-12);
        assert_relative_eq!(d, 2.0 * q, max_relative = 1e-12);
    }

    #[test]
    fn quadruple_and_diagonal_differ_only_by_equal_index_terms_below_nine() {
        let table = sieve_divisors(100).unwrap();
        // y = 8: diagonal families only
        let s = spec(Family::Delta, 4, 1e6, 1e6, 1000.0).with_y_const(8.0 / 1000f64.powf(0.25)).unwrap();
        assert_eq!(s.y_bound().unwrap(), 8);
        let q = main_quadruple(&s, &table, Exec::Sequential).unwrap();
        let d = main_diagonal(&s, &table, Exec::Sequential).unwrap();
        let a = squared_weights(8, &table);
        let nodes = main_nodes(&s);
        let equal = 3.0 / (2.0 * PI.powi(4))
            * integrate_nodes(&nodes, Exec::Sequential, |x| {
                x * (1..=8)
                    .map(|n| a[n].powi(2) * (PI * 1000.0 * (n as f64 / x).sqrt()).sin().powi(4))
                    .sum::<f64>()
            });
        assert_relative_eq!(d - q, equal, max_relative = 1e-10);
    }

    #[test]
    fn kernel_convolution_matches_family_sum() {
        let table = sieve_divisors(2000).unwrap();
        for (family, y) in [(Family::Delta, 9u64), (Family::Delta, 60), (Family::ZetaE, 400)] {
            let base = spec(family, 4, 1e6, 1e5, 800.0);
            let s = base.with_y_const((y as f64 + 0.5) / (1e6f64 / 800.0).powf(0.25)).unwrap();
            assert_eq!(s.y_bound().unwrap(), y);
            let fast = main_quadruple(&s, &table, Exec::Parallel).unwrap();
            let slow = main_quadruple_by_families(&s, &table, Exec::Parallel).unwrap();
            assert_relative_eq!(fast, slow, max_relative = 1e-10);
        }
    }

    #[test]
    fn jutila_single_term() {
        let table = sieve_divisors(10).unwrap();
        // T / 2U = 1 keeps only n = 1
        let s = spec(Family::Delta, 2, 200.0, 100.0, 100.0);
        let v = jutila_ms_main(&s, &table, Exec::Sequential).unwrap();
        let direct = 4.0 / (4.0 * PI * PI)
            * crate::quad::composite(gl16(), 200.0, 300.0, 200, |x| x.sqrt() * (PI * 100.0 / x.sqrt()).sin().powi(2));
        assert_relative_eq!(v, direct, max_relative = 1e-10);
        // small shifts: the value decays roughly like U^{3/2}
        let big = sieve_divisors(10_000).unwrap();
        let at = |u| jutila_ms_main(&spec(Family::Delta, 2, 200.0, 100.0, u), &big, Exec::Sequential).unwrap();
        assert!(at(0.01) < 0.1 * at(0.1));
        assert_eq!(at(0.0), 0.0);
    }

    #[test]
    fn admissibility_examples() {
        let t = 1e6;
        let s = spec(Family::Delta, 4, t, t, t.powf(0.45));
        let case = check_admissibility(&s, RegimeId::FourthMoment);
        assert!(case.passes());
        assert_relative_eq!(case.margins[3].slack, 2.7, epsilon = 1e-9);
        let low = spec(Family::Delta, 4, t, t, t.powf(0.40));
        assert!(!check_admissibility(&low, RegimeId::FourthMoment).passes());
        let z = spec(Family::ZetaE, 4, t, t.powf(0.9), t.powf(0.48));
        assert!(!check_admissibility(&z, RegimeId::ZetaFourthMoment).passes());
        assert_eq!(resolve_shift("auto45", 1e6).unwrap(), 501.0);
        assert_eq!(resolve_shift("12.5", 1e6).unwrap(), 12.5);
        assert!(resolve_shift("auto4x", 1e6).is_err());
    }

    #[test]
    fn zeta_panels_share_shifted_samples() {
        let table = sieve_divisors(3000).unwrap();
        let s = spec(Family::ZetaE, 2, 1000.0, 101.0, 10.0);
        let opts = MomentOptions::default();
        let r = moment_integral(&s, &Resources::with_table(&table), &opts).unwrap();
        let sampler = e_sampler(s.reach(), &Resources::with_table(&table), opts.evaluator).unwrap();
        let direct = crate::quad::composite(gl16(), 1000.0, 1101.0, 200, |x| {
            ((sampler.eval)(x + 10.0) - (sampler.eval)(x)).powi(2)
        });
        assert_relative_eq!(r.direct_value, direct, max_relative = 1e-3);
        assert!(r.evaluator_error_budget > 0.0);
    }
}
