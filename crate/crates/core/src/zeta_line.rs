//! `|zeta(1/2 + iu)|^2`, the mean-square error term `E(t)` and its
//! oscillatory expansion.
//!
//! Small heights use Euler-Maclaurin summation of `zeta(s)` directly;
//! larger ones use the Riemann-Siegel `Z` function with up to five
//! correction terms. `E(t)` is available two ways: from a persistent grid of
//! cumulative integrals ([`IntegralCache`]), and from the arsinh-phase
//! expansion in [`atkinson_terms`].

use std::f64::consts::{FRAC_PI_4, FRAC_PI_8, PI, SQRT_2};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::arith::{DivisorTable, EULER_GAMMA};
use crate::error::{Error, Result};
use crate::par::{map_blocks, map_indexed, Exec};
use crate::quad::gl16;
use crate::sum::Neumaier;

/// `|zeta|^2` never switches to Riemann-Siegel below this height.
pub const RS_CROSSOVER: f64 = 50.0;

/// Euler-Maclaurin is never used above this height, whatever the target.
pub const EM_CEILING: f64 = 10_000.0;

/// Highest supported Riemann-Siegel correction index.
pub const MAX_RS_ORDER: u8 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalLineConfig {
    /// Riemann-Siegel corrections `C_0 ..= C_order` are applied.
    pub rs_correction_order: u8,
    /// Relative accuracy the evaluator aims for once `u >= 50`.
    pub target_rel_err: f64,
}

impl Default for CriticalLineConfig {
    fn default() -> Self {
        Self {
            rs_correction_order: MAX_RS_ORDER,
            target_rel_err: 1e-8,
        }
    }
}

impl CriticalLineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rs_correction_order > MAX_RS_ORDER {
            return Err(Error::InvalidArgument(format!(
                "correction order {} above {MAX_RS_ORDER}",
                self.rs_correction_order
            )));
        }
        if self.target_rel_err.is_nan() || self.target_rel_err <= 0.0 {
            return Err(Error::InvalidArgument("target error must be positive".into()));
        }
        Ok(())
    }

    /// Height from which the Riemann-Siegel remainder, estimated as
    /// `5e-3 tau^{-(order + 3/2)}` with `tau = sqrt(u / 2 pi)`, is below
    /// the target; clamped to `[RS_CROSSOVER, EM_CEILING]`.
    pub fn crossover(&self) -> f64 {
        let exponent = self.rs_correction_order as f64 + 1.5;
        let tau = (5e-3 / self.target_rel_err).powf(1.0 / exponent);
        (2.0 * PI * tau * tau).clamp(RS_CROSSOVER, EM_CEILING)
    }

    /// FNV-1a over the fields that change computed values.
    pub fn hash(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |bytes: &[u8]| {
            for &b in bytes {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        };
        eat(&[self.rs_correction_order]);
        eat(&self.target_rel_err.to_le_bytes());
        eat(&self.crossover().to_le_bytes());
        h
    }
}

/// `B_{2k} / (2k)!` for `k = 1..=MAX_EM_TERMS`.
const MAX_EM_TERMS: usize = 30;

fn bernoulli_ratios() -> &'static [f64; MAX_EM_TERMS + 1] {
    static TABLE: OnceLock<[f64; MAX_EM_TERMS + 1]> = OnceLock::new();
    TABLE.get_or_init(|| {
        // B_{2k}/(2k)! = (-1)^{k+1} 2 zeta(2k) / (2 pi)^{2k}
        let mut out = [0.0; MAX_EM_TERMS + 1];
        out[1] = 1.0 / 12.0;
        for (k, slot) in out.iter_mut().enumerate().skip(2) {
            let e = 2 * k as i32;
            let cut = 1000.0f64;
            let mut z = Neumaier::new();
            for n in 1..1000 {
                z.add((n as f64).powi(-e));
            }
            // tail from 1000 by Euler-Maclaurin: N^{1-e}/(e-1) + N^{-e}/2 + e N^{-e-1}/12
            z.add(cut.powi(1 - e) / (e - 1) as f64);
            z.add(0.5 * cut.powi(-e));
            z.add(e as f64 * cut.powi(-e - 1) / 12.0);
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            *slot = sign * 2.0 * z.value() / (2.0 * PI).powi(e);
        }
        out
    })
}

#[derive(Default)]
struct ComplexAcc {
    re: Neumaier,
    im: Neumaier,
}

impl ComplexAcc {
    fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

/// `zeta(s)` by Euler-Maclaurin summation with `ceil(|Im s| / pi) + 10`
/// direct terms. Intended for `Re s > 0`, `s != 1`.
pub fn zeta_em(s: Complex64) -> Complex64 {
    let n = (s.im.abs() / PI).ceil() as u64 + 10;
    let mut acc = ComplexAcc::default();
    for k in 1..n {
        acc.add((-s * (k as f64).ln()).exp());
    }
    let nf = n as f64;
    let n_pow = (-s * nf.ln()).exp();
    acc.add(n_pow * nf / (s - 1.0));
    acc.add(0.5 * n_pow);
    let bern = bernoulli_ratios();
    let mut rising = s;
    let mut power = n_pow / nf;
    for (k, b) in bern.iter().enumerate().skip(1) {
        let term = *b * rising * power;
        acc.add(term);
        if term.norm() < 1e-18 * acc.value().norm() {
            break;
        }
        let kf = k as f64;
        rising *= (s + (2.0 * kf - 1.0)) * (s + 2.0 * kf);
        power /= nf * nf;
    }
    acc.value()
}

/// Riemann-Siegel theta from the Stirling series with five corrections.
pub fn rs_theta(u: f64) -> f64 {
    let inv = 1.0 / u;
    let inv2 = inv * inv;
    let series = inv
        * (1.0 / 48.0
            + inv2
                * (7.0 / 5760.0
                    + inv2 * (31.0 / 80640.0 + inv2 * (127.0 / 430080.0 + inv2 * 511.0 / 1216512.0))));
    0.5 * u * (u / (2.0 * PI)).ln() - 0.5 * u - FRAC_PI_8 + series
}

/// Taylor coefficients about `p = 1/2` of
/// `cos(2 pi (p^2 - p - 1/16)) / cos(2 pi p)`, from a discrete Cauchy
/// integral on the unit circle. The function is even about `1/2`, so odd
/// coefficients are dropped.
fn psi_taylor() -> Vec<f64> {
    const POINTS: usize = 128;
    const DEGREE: usize = 80;
    let psi = |x: Complex64| {
        let p = x + 0.5;
        let num = (2.0 * PI * (p * p - p - 1.0 / 16.0)).cos();
        num / (2.0 * PI * p).cos()
    };
    let samples: Vec<Complex64> = (0..POINTS)
        .map(|j| psi(Complex64::from_polar(1.0, 2.0 * PI * j as f64 / POINTS as f64)))
        .collect();
    (0..=DEGREE)
        .map(|k| {
            if k % 2 == 1 {
                return 0.0;
            }
            let mut acc = Neumaier::new();
            for (j, v) in samples.iter().enumerate() {
                let phase = -2.0 * PI * (k * j % POINTS) as f64 / POINTS as f64;
                acc.add((v * Complex64::from_polar(1.0, phase)).re);
            }
            acc.value() / POINTS as f64
        })
        .collect()
}

/// Polynomials in `x = p - 1/2` for the correction terms `C_0 .. C_4`.
fn correction_polys() -> &'static Vec<Vec<f64>> {
    static POLYS: OnceLock<Vec<Vec<f64>>> = OnceLock::new();
    POLYS.get_or_init(|| {
        let a = psi_taylor();
        let deriv = |d: usize| -> Vec<f64> {
            (d..a.len())
                .map(|k| a[k] * ((k - d + 1)..=k).map(|j| j as f64).product::<f64>())
                .collect()
        };
        let pi2 = PI * PI;
        let combine = |terms: &[(f64, usize)]| -> Vec<f64> {
            let mut out = vec![0.0; a.len()];
            for &(c, d) in terms {
                for (i, v) in deriv(d).into_iter().enumerate() {
                    out[i] += c * v;
                }
            }
            out
        };
        vec![
            combine(&[(1.0, 0)]),
            combine(&[(-1.0 / (96.0 * pi2), 3)]),
            combine(&[(1.0 / (64.0 * pi2), 2), (1.0 / (18432.0 * pi2 * pi2), 6)]),
            combine(&[
                (-1.0 / (64.0 * pi2), 1),
                (-1.0 / (3840.0 * pi2 * pi2), 5),
                (-1.0 / (5308416.0 * pi2.powi(3)), 9),
            ]),
            combine(&[
                (1.0 / (128.0 * pi2), 0),
                (19.0 / (24576.0 * pi2 * pi2), 4),
                (11.0 / (5898240.0 * pi2.powi(3)), 8),
                (1.0 / (2038431744.0 * pi2.powi(4)), 12),
            ]),
        ]
    })
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Riemann-Siegel `Z(u)` for `u >= 2 pi`, with corrections `C_0..=C_order`.
pub fn rs_z(u: f64, order: u8) -> f64 {
    let tau = (u / (2.0 * PI)).sqrt();
    let n = tau.floor() as u64;
    let theta = rs_theta(u);
    let mut main = Neumaier::new();
    for k in 1..=n {
        let kf = k as f64;
        main.add((theta - u * kf.ln()).cos() / kf.sqrt());
    }
    let p = tau - n as f64;
    let x = p - 0.5;
    let polys = correction_polys();
    let mut rem = 0.0;
    let mut scale = 1.0;
    for poly in polys.iter().take(order as usize + 1) {
        rem += horner(poly, x) * scale;
        scale /= tau;
    }
    let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
    2.0 * main.value() + sign * rem / tau.sqrt()
}

/// `|zeta(1/2 + iu)|^2`.
pub fn abs_zeta_half_sq(u: f64, cfg: &CriticalLineConfig) -> f64 {
    let u = u.abs();
    if u < cfg.crossover() {
        zeta_em(Complex64::new(0.5, u)).norm_sqr()
    } else {
        rs_z(u, cfg.rs_correction_order).powi(2)
    }
}

/// `t log(t / 2 pi) + (2 gamma - 1) t`.
pub fn zeta_smooth_part(t: f64) -> f64 {
    t * (t / (2.0 * PI)).ln() + (2.0 * EULER_GAMMA - 1.0) * t
}

const CACHE_MAGIC: &[u8; 4] = b"EINT";
const CACHE_VERSION: u32 = 1;

/// Cumulative integrals `int_0^{k h} |zeta(1/2 + iu)|^2 du` on a grid of
/// step `h`, each panel integrated by 16-point Gauss-Legendre. The
/// quadrature error per unit panel is far below `1e-10`, so the absolute
/// error of `E(t)` stays under `1e-4 t^{1/4}` across the supported range.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralCache {
    cfg: CriticalLineConfig,
    cfg_hash: u64,
    step: f64,
    cum: Vec<f64>,
}

impl IntegralCache {
    pub const DEFAULT_STEP: f64 = 1.0;

    pub fn new(cfg: CriticalLineConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            cfg_hash: cfg.hash(),
            step: Self::DEFAULT_STEP,
            cum: vec![0.0],
        })
    }

    pub fn config(&self) -> &CriticalLineConfig {
        &self.cfg
    }

    pub fn cfg_hash(&self) -> u64 {
        self.cfg_hash
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Upper end of the covered grid.
    pub fn covered(&self) -> f64 {
        (self.cum.len() - 1) as f64 * self.step
    }

    /// Errors with `InvalidState` when `cfg` differs from the cache's own.
    pub fn check_config(&self, cfg: &CriticalLineConfig) -> Result<()> {
        if cfg.hash() != self.cfg_hash {
            return Err(Error::InvalidState(format!(
                "integral cache built for config hash {:016x}, requested {:016x}",
                self.cfg_hash,
                cfg.hash()
            )));
        }
        Ok(())
    }

    fn panel(&self, k: usize) -> f64 {
        let a = k as f64 * self.step;
        gl16().integrate(a, a + self.step, |u| abs_zeta_half_sq(u, &self.cfg))
    }

    /// Appends grid panels until `t` is covered.
    pub fn extend_to(&mut self, t: f64, exec: Exec) -> Result<()> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::InvalidArgument(format!("cannot extend cache to {t}")));
        }
        let have = self.cum.len() - 1;
        let need = (t / self.step).ceil() as usize;
        if need <= have {
            return Ok(());
        }
        let panels = map_indexed(exec, need - have, |i| self.panel(have + i));
        self.cum.try_reserve(panels.len()).map_err(|_| {
            Error::Resource(format!("cannot grow integral cache to {need} panels"))
        })?;
        let mut acc = Neumaier::new();
        acc.add(*self.cum.last().unwrap());
        for p in panels {
            acc.add(p);
            self.cum.push(acc.value());
        }
        Ok(())
    }

    /// `int_0^t |zeta|^2` from the grid plus one partial panel; `t` must be
    /// covered.
    pub fn integral(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0 && t <= self.covered()) {
            return Err(Error::OutOfRange(format!(
                "integral cache covers [0, {}], asked for {t}",
                self.covered()
            )));
        }
        let k = ((t / self.step).floor() as usize).min(self.cum.len() - 1);
        let a = k as f64 * self.step;
        let tail = if t > a {
            gl16().integrate(a, t, |u| abs_zeta_half_sq(u, &self.cfg))
        } else {
            0.0
        };
        Ok(self.cum[k] + tail)
    }

    /// `E(t)` from the frozen grid.
    pub fn big_e(&self, t: f64) -> Result<f64> {
        Ok(self.integral(t)? - zeta_smooth_part(t))
    }

    /// Writes the `EINT` cache: magic, `u32` version, `u64` config hash,
    /// `f64` step, then `(t, cumulative)` pairs, all little-endian.
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let mut put = |b: &[u8]| w.write_all(b).map_err(|e| Error::io(path, e));
        put(CACHE_MAGIC)?;
        put(&CACHE_VERSION.to_le_bytes())?;
        put(&self.cfg_hash.to_le_bytes())?;
        put(&self.step.to_le_bytes())?;
        for (k, c) in self.cum.iter().enumerate() {
            put(&(k as f64 * self.step).to_le_bytes())?;
            put(&c.to_le_bytes())?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Reads a cache written for `cfg`; a different config hash is an
    /// `InvalidState` error.
    pub fn load(path: &Path, cfg: CriticalLineConfig) -> Result<Self> {
        cfg.validate()?;
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut bytes = Vec::new();
        BufReader::new(file)
            .read_to_end(&mut bytes)
            .map_err(|e| Error::io(path, e))?;
        let bad = |reason: String| Error::Format {
            path: path.to_path_buf(),
            reason,
        };
        if bytes.len() < 24 || &bytes[..4] != CACHE_MAGIC {
            return Err(bad("missing EINT header".into()));
        }
        let word = |at: usize| -> [u8; 8] { bytes[at..at + 8].try_into().unwrap() };
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != CACHE_VERSION {
            return Err(bad(format!("unsupported cache version {version}")));
        }
        let hash = u64::from_le_bytes(word(8));
        if hash != cfg.hash() {
            return Err(Error::InvalidState(format!(
                "cache {} was built for config hash {hash:016x}, requested {:016x}",
                path.display(),
                cfg.hash()
            )));
        }
        let step = f64::from_le_bytes(word(16));
        if step.is_nan() || step <= 0.0 {
            return Err(bad(format!("bad grid step {step}")));
        }
        let body = &bytes[24..];
        if body.len() % 16 != 0 || body.is_empty() {
            return Err(bad("truncated (t, integral) pairs".into()));
        }
        let mut cum = Vec::with_capacity(body.len() / 16);
        for (k, rec) in body.chunks_exact(16).enumerate() {
            let t = f64::from_le_bytes(rec[..8].try_into().unwrap());
            let c = f64::from_le_bytes(rec[8..].try_into().unwrap());
            if t != k as f64 * step || cum.last().is_some_and(|&prev| c < prev) {
                return Err(bad(format!("grid record {k} inconsistent")));
            }
            cum.push(c);
        }
        Ok(Self {
            cfg,
            cfg_hash: hash,
            step,
            cum,
        })
    }
}

/// `E(t)` by quadrature, extending `cache` as needed.
pub fn big_e_exact(
    t: f64,
    cfg: &CriticalLineConfig,
    cache: &mut IntegralCache,
    exec: Exec,
) -> Result<f64> {
    if t.is_nan() || t < 2.0 {
        return Err(Error::InvalidArgument(format!("E(t) needs t >= 2, got {t}")));
    }
    cache.check_config(cfg)?;
    cache.extend_to(t, exec)?;
    cache.big_e(t)
}

/// Terms of the arsinh-phase expansion of `E(t)` truncated at `n_cap`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtkinsonEval {
    pub t: f64,
    pub n_cap: u64,
    /// `t / 2 pi + N / 2 - sqrt(N^2 / 4 + N t / 2 pi)`.
    pub n_prime: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub approx_e: f64,
}

/// `arsinh(sqrt(pi n / 2t))`.
#[inline]
pub fn atkinson_g(t: f64, n: f64) -> f64 {
    (PI * n / (2.0 * t)).sqrt().asinh()
}

/// `2 t g + sqrt(2 pi n t + pi^2 n^2) - pi / 4`.
#[inline]
pub fn atkinson_f(t: f64, n: f64) -> f64 {
    2.0 * t * atkinson_g(t, n) + (2.0 * PI * n * t + PI * PI * n * n).sqrt() - FRAC_PI_4
}

/// `(-1)^n d(n) n^{-1/2} (t / 2 pi n + 1/4)^{-1/4} / g`.
#[inline]
pub fn atkinson_h(t: f64, n: u64, d: u32) -> f64 {
    let nf = n as f64;
    let base = t / (2.0 * PI * nf) + 0.25;
    let v = d as f64 / (nf.sqrt() * base.sqrt().sqrt() * atkinson_g(t, nf));
    if n % 2 == 1 {
        -v
    } else {
        v
    }
}

/// `h(t, n) cos f(t, n)` with the square roots shared: writing
/// `x = pi n / 2t`, `g = arsinh sqrt x`, `f = 2t (g + sqrt(x (1 + x))) - pi/4`
/// and `(t / 2 pi n + 1/4)^{-1/4} = sqrt(2 sqrt(x) / sqrt(1 + x))`.
#[inline]
fn sigma1_term(t: f64, n: u64, d: u32) -> f64 {
    let nf = n as f64;
    let x = PI * nf / (2.0 * t);
    let s = x.sqrt();
    let r = (1.0 + x).sqrt();
    let g = (s + x / (1.0 + r)).ln_1p();
    let f = 2.0 * t * (g + s * r) - FRAC_PI_4;
    let v = d as f64 * (2.0 * s / r).sqrt() / (nf.sqrt() * g) * f.cos();
    if n % 2 == 1 {
        -v
    } else {
        v
    }
}

pub fn atkinson_n_prime(t: f64, n_cap: u64) -> f64 {
    let n = n_cap as f64;
    t / (2.0 * PI) + 0.5 * n - (0.25 * n * n + n * t / (2.0 * PI)).sqrt()
}

/// Admissible truncations for `t`: `t / 2 <= N <= 2t`.
pub fn atkinson_window(t: f64) -> (u64, u64) {
    ((0.5 * t).ceil() as u64, (2.0 * t).floor() as u64)
}

pub fn atkinson_terms(t: f64, n_cap: u64, table: &DivisorTable) -> Result<AtkinsonEval> {
    if !(t >= 2.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("expansion needs t >= 2, got {t}")));
    }
    let (lo, hi) = atkinson_window(t);
    if n_cap < lo || n_cap > hi {
        return Err(Error::InvalidArgument(format!(
            "truncation {n_cap} outside [{lo}, {hi}] for t = {t}"
        )));
    }
    table.require(n_cap, "E(t) expansion")?;
    let mut s1 = Neumaier::new();
    for n in 1..=n_cap {
        s1.add(sigma1_term(t, n, table.d(n)));
    }
    let sigma1 = s1.value() / SQRT_2;
    let n_prime = atkinson_n_prime(t, n_cap);
    let mut s2 = Neumaier::new();
    for n in 1..=(n_prime.floor() as u64) {
        let nf = n as f64;
        let l = (t / (2.0 * PI * nf)).ln();
        s2.add(table.d(n) as f64 / (nf.sqrt() * l) * (t * l - t + FRAC_PI_4).cos());
    }
    let sigma2 = -2.0 * s2.value();
    Ok(AtkinsonEval {
        t,
        n_cap,
        n_prime,
        sigma1,
        sigma2,
        approx_e: sigma1 + sigma2,
    })
}

/// `Sigma_1 + Sigma_2` with truncation `N`.
pub fn big_e_atkinson(t: f64, n_cap: u64, table: &DivisorTable) -> Result<f64> {
    Ok(atkinson_terms(t, n_cap, table)?.approx_e)
}

/// Default truncation `N = floor(t)`.
pub fn default_n_cap(t: f64) -> u64 {
    t.floor() as u64
}

/// `E` at many points in parallel with the default truncation; the output
/// follows the input order.
pub fn big_e_atkinson_batch(ts: &[f64], table: &DivisorTable, exec: Exec) -> Result<Vec<f64>> {
    let parts = map_blocks(exec, ts.len(), 1, |r| {
        r.map(|i| big_e_atkinson(ts[i], default_n_cap(ts[i]), table))
            .collect::<Result<Vec<f64>>>()
    });
    let mut out = Vec::with_capacity(ts.len());
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}
