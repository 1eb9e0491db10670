//! Divisor counts, square-free kernels and partial sums of `d(n)^2`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sum::Neumaier;

/// Largest sieve we agree to build. `d(n)` is stored as `u32` and indices
/// must fit comfortably in memory on a desktop machine.
pub const MAX_SIEVE_LIMIT: u64 = 1 << 31;

const CACHE_MAGIC: &[u8; 8] = b"DIVT\0\0\0\0";
const CACHE_VERSION: u64 = 1;

/// `d(n)` for `1 <= n <= limit` with plain and alternating prefix sums.
///
/// Index 0 of every array is a zero sentinel so that `d(n)` lives at `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct DivisorTable {
    limit: u64,
    d: Vec<u32>,
    prefix: Vec<i64>,
    alt_prefix: Vec<i64>,
}

fn alloc<T: Clone>(len: usize, fill: T, what: &str) -> Result<Vec<T>> {
    let mut v = Vec::new();
    v.try_reserve_exact(len).map_err(|_| {
        Error::Resource(format!(
            "cannot allocate {} bytes for {what}",
            len.saturating_mul(std::mem::size_of::<T>())
        ))
    })?;
    v.resize(len, fill);
    Ok(v)
}

fn check_limit(limit: u64) -> Result<usize> {
    if limit == 0 {
        return Err(Error::InvalidArgument("sieve limit must be at least 1".into()));
    }
    if limit >= MAX_SIEVE_LIMIT {
        return Err(Error::Resource(format!(
            "sieve limit {limit} exceeds supported maximum {MAX_SIEVE_LIMIT}"
        )));
    }
    usize::try_from(limit)
        .map_err(|_| Error::Resource(format!("sieve limit {limit} exceeds address space")))
}

/// Sieves `d(n)` up to `limit`.
///
/// Each pair `i < j` with `i * j <= limit` contributes two divisors of
/// `i * j`, and `i * i` contributes one.
pub fn sieve_divisors(limit: u64) -> Result<DivisorTable> {
    let n = check_limit(limit)?;
    let mut d = alloc(n + 1, 0u32, "divisor counts")?;
    let mut i = 1usize;
    while i * i <= n {
        d[i * i] += 1;
        let mut k = i * (i + 1);
        while k <= n {
            d[k] += 2;
            k += i;
        }
        i += 1;
    }
    DivisorTable::from_counts(limit, d)
}

impl DivisorTable {
    fn from_counts(limit: u64, d: Vec<u32>) -> Result<Self> {
        let n = d.len();
        let mut prefix = alloc(n, 0i64, "divisor prefix sums")?;
        let mut alt_prefix = alloc(n, 0i64, "alternating prefix sums")?;
        let (mut acc, mut alt) = (0i64, 0i64);
        for k in 1..n {
            let v = d[k] as i64;
            acc += v;
            alt += if k % 2 == 0 { v } else { -v };
            prefix[k] = acc;
            alt_prefix[k] = alt;
        }
        Ok(Self {
            limit,
            d,
            prefix,
            alt_prefix,
        })
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// `d(n)`; panics outside `1..=limit`.
    #[inline]
    pub fn d(&self, n: u64) -> u32 {
        assert!(n >= 1 && n <= self.limit, "d({n}) outside table");
        self.d[n as usize]
    }

    /// Raw counts with a leading zero at index 0.
    pub fn counts(&self) -> &[u32] {
        &self.d
    }

    /// `D(m) = sum_{n <= m} d(n)`, with `D(0) = 0`.
    #[inline]
    pub fn prefix(&self, m: u64) -> i64 {
        self.prefix[m as usize]
    }

    /// `sum_{n <= m} (-1)^n d(n)`.
    #[inline]
    pub fn alt_prefix(&self, m: u64) -> i64 {
        self.alt_prefix[m as usize]
    }

    /// Fails with `OutOfRange` unless `m <= limit`.
    pub fn require(&self, m: u64, what: &str) -> Result<()> {
        if m > self.limit {
            Err(Error::OutOfRange(format!(
                "{what} needs the sieve up to {m}, table stops at {}",
                self.limit
            )))
        } else {
            Ok(())
        }
    }

    /// Writes the binary cache: three little-endian `u64` header words
    /// (magic, version, limit) followed by `d(1..=limit)` as `u32`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let mut write = |bytes: &[u8]| w.write_all(bytes).map_err(|e| Error::io(path, e));
        write(CACHE_MAGIC)?;
        write(&CACHE_VERSION.to_le_bytes())?;
        write(&self.limit.to_le_bytes())?;
        for &v in &self.d[1..] {
            write(&v.to_le_bytes())?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut r = BufReader::new(file);
        let mut word = [0u8; 8];
        let mut read_word = |r: &mut BufReader<File>| -> Result<[u8; 8]> {
            r.read_exact(&mut word).map_err(|e| Error::io(path, e))?;
            Ok(word)
        };
        let bad = |reason: &str| Error::Format {
            path: path.to_path_buf(),
            reason: reason.to_string(),
        };
        if &read_word(&mut r)? != CACHE_MAGIC {
            return Err(bad("missing DIVT magic"));
        }
        let version = u64::from_le_bytes(read_word(&mut r)?);
        if version != CACHE_VERSION {
            return Err(bad(&format!("unsupported cache version {version}")));
        }
        let limit = u64::from_le_bytes(read_word(&mut r)?);
        let n = check_limit(limit)?;
        let mut raw = alloc(n * 4, 0u8, "divisor cache")?;
        r.read_exact(&mut raw).map_err(|_| bad("truncated divisor array"))?;
        let mut d = alloc(n + 1, 0u32, "divisor counts")?;
        for (slot, chunk) in d[1..].iter_mut().zip(raw.chunks_exact(4)) {
            *slot = u32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
        }
        if d[1] != 1 {
            return Err(bad("d(1) != 1"));
        }
        DivisorTable::from_counts(limit, d)
    }

    /// Loads `path` if it holds a table of at least `limit`, otherwise
    /// sieves and (best effort) refreshes the file.
    pub fn load_or_build(path: &Path, limit: u64) -> Result<Self> {
        if let Ok(table) = Self::load(path) {
            if table.limit >= limit {
                return Ok(table);
            }
        }
        let table = sieve_divisors(limit)?;
        if let Some(parent) = path.parent() {
            let _ = std::fs::create_dir_all(parent);
        }
        let _ = table.save(path);
        Ok(table)
    }
}

/// `n = kernel * m^2` with `kernel` square-free.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KernelDecomp {
    pub n: u64,
    pub l: u64,
    pub m: u64,
}

/// Smallest-prime-factor table for fast factorisation below a bound.
#[derive(Debug, Clone)]
pub struct SpfTable {
    spf: Vec<u32>,
}

impl SpfTable {
    pub fn new(limit: u64) -> Result<Self> {
        let n = check_limit(limit)?;
        let mut spf = alloc(n + 1, 0u32, "smallest prime factors")?;
        for i in 2..=n {
            if spf[i] == 0 {
                let mut k = i;
                while k <= n {
                    if spf[k] == 0 {
                        spf[k] = i as u32;
                    }
                    k += i;
                }
            }
        }
        Ok(Self { spf })
    }

    pub fn limit(&self) -> u64 {
        (self.spf.len() - 1) as u64
    }

    fn decompose(&self, n: u64) -> KernelDecomp {
        let (mut l, mut m, mut rest) = (1u64, 1u64, n as usize);
        while rest > 1 {
            let p = self.spf[rest] as usize;
            let mut e = 0;
            while rest % p == 0 {
                rest /= p;
                e += 1;
            }
            m *= (p as u64).pow(e / 2);
            if e % 2 == 1 {
                l *= p as u64;
            }
        }
        KernelDecomp { n, l, m }
    }
}

fn decompose_trial(n: u64) -> KernelDecomp {
    let (mut l, mut m, mut rest) = (1u64, 1u64, n);
    let mut p = 2u64;
    while p * p <= rest {
        let mut e = 0;
        while rest % p == 0 {
            rest /= p;
            e += 1;
        }
        m *= p.pow(e / 2);
        if e % 2 == 1 {
            l *= p;
        }
        p += if p == 2 { 1 } else { 2 };
    }
    l *= rest;
    KernelDecomp { n, l, m }
}

/// Splits `n` into its square-free kernel and square part. Uses `spf`
/// when it covers `n`, trial division otherwise.
pub fn kernel_decompose(n: u64, spf: Option<&SpfTable>) -> Result<KernelDecomp> {
    if n == 0 {
        return Err(Error::InvalidArgument("cannot decompose 0".into()));
    }
    Ok(match spf {
        Some(t) if n <= t.limit() => t.decompose(n),
        _ => decompose_trial(n),
    })
}

/// Square-free kernel of every `n <= limit` (index 0 unused).
pub fn kernel_table(limit: u64) -> Result<Vec<u32>> {
    let n = check_limit(limit)?;
    let mut kernel: Vec<u32> = alloc(n + 1, 0u32, "kernel table")?;
    for (i, k) in kernel.iter_mut().enumerate() {
        *k = i as u32;
    }
    let mut q = 2usize;
    while q * q <= n {
        let sq = q * q;
        let mut k = sq;
        while k <= n {
            while (kernel[k] as usize).is_multiple_of(sq) {
                kernel[k] /= sq as u32;
            }
            k += sq;
        }
        q += 1;
    }
    Ok(kernel)
}

/// True when no prime square divides `n`.
pub fn is_square_free(n: u64) -> bool {
    n >= 1 && decompose_trial(n).m == 1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SumRange {
    /// `n <= z`, weight `n^{-1/2}`.
    Head,
    /// `z < n <= limit`, weight `n^{-3/2}`.
    Tail,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartialSum {
    pub value: f64,
    /// Last index included in the sum.
    pub upper: u64,
}

/// Head `sum_{n<=z} d(n)^2 / sqrt(n)` or tail `sum_{z<n<=limit} d(n)^2 / n^{3/2}`.
pub fn d2_partial_sums(z: u64, table: &DivisorTable, range: SumRange) -> Result<PartialSum> {
    if z == 0 {
        return Err(Error::InvalidArgument("z must be at least 1".into()));
    }
    let mut acc = Neumaier::new();
    match range {
        SumRange::Head => {
            table.require(z, "head sum")?;
            for n in 1..=z {
                let d = table.d(n) as f64;
                acc.add(d * d / (n as f64).sqrt());
            }
            Ok(PartialSum {
                value: acc.value(),
                upper: z,
            })
        }
        SumRange::Tail => {
            for n in (z + 1)..=table.limit() {
                let d = table.d(n) as f64;
                let x = n as f64;
                acc.add(d * d / (x * x.sqrt()));
            }
            Ok(PartialSum {
                value: acc.value(),
                upper: table.limit().max(z),
            })
        }
    }
}

/// Constants that enter the classical mean-square asymptotics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MathConstants {
    pub euler_gamma: f64,
    pub zeta_3_2: f64,
    pub zeta_3: f64,
}

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

impl Default for MathConstants {
    fn default() -> Self {
        Self {
            euler_gamma: EULER_GAMMA,
            zeta_3_2: 2.612_375_348_685_488,
            zeta_3: 1.202_056_903_159_594_3,
        }
    }
}

impl MathConstants {
    /// Leading coefficient of the mean square of the divisor error term.
    pub fn tong_const(&self) -> f64 {
        self.zeta_3_2.powi(4) / (6.0 * std::f64::consts::PI.powi(2) * self.zeta_3)
    }

    /// Leading coefficient of the mean square of the zeta error term.
    pub fn meurman_const(&self) -> f64 {
        2.0 * self.zeta_3_2.powi(4)
            / (3.0 * self.zeta_3 * (2.0 * std::f64::consts::PI).sqrt())
    }
}
