//! `divmoment`: command line front end for the moment laboratory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use divmoment::acceptance::{parse_suite, run_suite, AcceptanceConfig, CriterionOutcome};
use divmoment::arith::{sieve_divisors, DivisorTable};
use divmoment::moments::{
    attach_main_terms, check_admissibility, jutila_ms_main, main_diagonal, main_diagonal_c_scan, main_quadruple,
    moment_integral, resolve_shift, table_requirement, AdmissibilityCase, EEvaluator, Family, MainTerms,
    MomentOptions, MomentRatios, MomentReport, MomentSpec, RegimeId, Resources, ATKINSON_ERROR_CONST,
};
use divmoment::par::configure_threads;
use divmoment::quadruples::{
    enumerate_off_diagonal, enumerate_three_one, enumerate_two_two, scan_gap, CountOptions, CountRecord, GapScan,
};
use divmoment::report::{emit_report, write_csv, write_json, OutputFormat, RunManifest, Table, CACHE_DIR_ENV};
use divmoment::special_sums::{compute_c1, compute_c2, compute_c_zu, SumKind};
use divmoment::trig_kernel::{si_co_closed, si_co_definitional, si_co_join, TrigArgs};
use divmoment::voronoi::{delta_exact, delta_star_exact, delta_star_voronoi, delta_voronoi, VoronoiParams};
use divmoment::zeta_line::{atkinson_window, big_e_atkinson, big_e_exact, default_n_cap, CriticalLineConfig, IntegralCache};
use divmoment::{Error, Exec, Result};

#[derive(Parser)]
#[command(name = "divmoment", version, about = "Short-interval moments of divisor and zeta error terms")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Worker threads; 1 runs everything sequentially.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,
    /// Output file; standard output when absent. For `sieve`, the cache file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for sampled checks.
    #[arg(long, global = true, default_value_t = 20_240_601)]
    seed: u64,
    /// Directory for the divisor and integral caches.
    #[arg(long, global = true, env = CACHE_DIR_ENV)]
    cache_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Json => OutputFormat::Json,
            Format::Csv => OutputFormat::Csv,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Sieve d(n) up to a limit and store the table.
    Sieve {
        #[arg(long)]
        limit: u64,
    },
    /// Divisor error term, exact and by the truncated Voronoi series.
    Delta {
        #[arg(long)]
        x: f64,
        /// Voronoi truncation.
        #[arg(long = "N")]
        trunc: Option<u64>,
        /// The alternating variant.
        #[arg(long)]
        star: bool,
    },
    /// Zeta mean-square error term E(t).
    Ezeta {
        #[arg(long)]
        t: f64,
        #[arg(long, value_enum, default_value = "both")]
        evaluator: EzetaEvaluator,
        /// Truncation of the arsinh expansion; defaults to floor(t).
        #[arg(long)]
        n_cap: Option<u64>,
        /// Riemann-Siegel correction order, 0 to 4.
        #[arg(long, default_value_t = 4)]
        rs_order: u8,
    },
    /// Direct power moment over [T, T+H] of a difference with shift U.
    Moment {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, value_enum, default_value = "none")]
        main: MainArg,
        #[command(flatten)]
        eval: EvalArgs,
    },
    /// Main-term sums alone.
    MainTerm {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, value_enum, default_value = "both")]
        which: MainArg,
        /// Truncation constants to scan for the diagonal term.
        #[arg(long, value_delimiter = ',')]
        c_scan: Vec<f64>,
    },
    /// Count near-solutions of the four-root inequality.
    Count {
        #[arg(long = "N", value_delimiter = ',', required = true)]
        n: Vec<u64>,
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        delta: Vec<f64>,
        /// Read each delta as an exponent of N.
        #[arg(long)]
        delta_exponent: bool,
    },
    /// Enumerate root-relation families or scan the root-sum gap.
    Enumerate {
        #[arg(long)]
        y: u64,
        #[arg(long, value_enum, default_value = "two-two")]
        kind: EnumKind,
    },
    /// Weighted sums over root relations.
    Sums {
        #[arg(long, value_enum)]
        which: SumArg,
        #[arg(long)]
        z: u64,
        /// Upper range for the tapered sum.
        #[arg(long)]
        u: Option<u64>,
    },
    /// Check the closed trigonometric forms on random angles.
    TrigCheck {
        #[arg(long, default_value_t = 10)]
        k_max: usize,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        /// Angles are drawn from [-range, range].
        #[arg(long, default_value_t = 10.0)]
        range: f64,
    },
    /// Report the margins of each parameter regime.
    Admissible {
        #[command(flatten)]
        spec: SpecArgs,
        /// One regime id; all when absent.
        #[arg(long)]
        case: Option<RegimeId>,
    },
    /// Run the acceptance criteria.
    Verify {
        /// `all` or a comma-separated list of criterion numbers.
        #[arg(long, default_value = "all")]
        suite: String,
    },
}

#[derive(Args)]
struct SpecArgs {
    #[arg(long)]
    family: Family,
    #[arg(long, default_value_t = 4)]
    p: u32,
    #[arg(long = "T")]
    t: f64,
    /// Defaults to T.
    #[arg(long = "H")]
    h: Option<f64>,
    /// A real or `autoNN` for floor(T^0.NN).
    #[arg(long = "U")]
    u: String,
    #[arg(long)]
    y_const: Option<f64>,
}

impl SpecArgs {
    fn resolve(&self) -> Result<MomentSpec> {
        let u = resolve_shift(&self.u, self.t)?;
        let spec = MomentSpec::new(self.family, self.p, self.t, self.h.unwrap_or(self.t), u)?;
        match self.y_const {
            Some(c) => spec.with_y_const(c),
            None => Ok(spec),
        }
    }
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long, value_enum, default_value = "atkinson")]
    evaluator: EvalKind,
    /// Arsinh truncation as a multiple of t, within [0.5, 2].
    #[arg(long, default_value_t = 0.5)]
    n_cap_ratio: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum EvalKind {
    Atkinson,
    Quadrature,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum EzetaEvaluator {
    Atkinson,
    Quadrature,
    Both,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum MainArg {
    None,
    Quadruple,
    Diagonal,
    Both,
    /// The mean-square main term (p = 2).
    MeanSquare,
}

#[derive(Clone, Copy, ValueEnum)]
enum EnumKind {
    TwoTwo,
    ThreeOne,
    OffDiagonal,
    Gap,
}

#[derive(Clone, Copy, ValueEnum)]
enum SumArg {
    C1,
    C2,
    C2Prime,
    C21,
    C22,
    Czu,
}

/// Shared state for one invocation.
struct Ctx {
    exec: Exec,
    format: OutputFormat,
    out: Option<PathBuf>,
    seed: u64,
    cache_dir: Option<PathBuf>,
    caches: Vec<String>,
}

impl Ctx {
    fn table(&mut self, limit: u64) -> Result<DivisorTable> {
        let limit = limit.max(1);
        let table = match &self.cache_dir {
            Some(dir) => {
                let path = dir.join("divisors.divt");
                let table = DivisorTable::load_or_build(&path, limit)?;
                self.caches.push(format!("DIVT limit={} {}", table.limit(), path.display()));
                table
            }
            None => sieve_divisors(limit)?,
        };
        Ok(table)
    }

    fn integral_cache(&mut self, cfg: CriticalLineConfig, reach: f64) -> Result<IntegralCache> {
        let path = self
            .cache_dir
            .as_ref()
            .map(|d| d.join(format!("integral-{:016x}.eint", cfg.hash())));
        let mut cache = match &path {
            Some(p) if p.exists() => IntegralCache::load(p, cfg)?,
            _ => IntegralCache::new(cfg)?,
        };
        let before = cache.covered();
        cache.extend_to(reach, self.exec)?;
        if let Some(p) = &path {
            if cache.covered() > before || !p.exists() {
                std::fs::create_dir_all(self.cache_dir.as_ref().expect("dir")).map_err(|e| Error::Io {
                    path: p.clone(),
                    source: e,
                })?;
                cache.save(p)?;
            }
            self.caches.push(format!("EINT cfg={:016x} {}", cfg.hash(), p.display()));
        }
        Ok(cache)
    }

    fn out(&self) -> Option<&Path> {
        self.out.as_deref()
    }
}

/// Key/value pairs from the command line, without the flags that only steer
/// output or threading.
fn params_from_argv(argv: &[String]) -> BTreeMap<String, String> {
    let mut params = BTreeMap::new();
    let mut i = 0;
    while i < argv.len() {
        if let Some(flag) = argv[i].strip_prefix("--") {
            let (key, inline) = match flag.split_once('=') {
                Some((k, v)) => (k.to_string(), Some(v.to_string())),
                None => (flag.to_string(), None),
            };
            let value = inline.unwrap_or_else(|| match argv.get(i + 1) {
                Some(v) if !v.starts_with("--") => {
                    i += 1;
                    v.clone()
                }
                _ => "true".into(),
            });
            if !matches!(key.as_str(), "threads" | "format" | "out") {
                params.insert(key, value);
            }
        }
        i += 1;
    }
    params
}

fn emit<T: Serialize>(ctx: &Ctx, manifest: &mut RunManifest, report: &T, table: Option<Table>) -> Result<()> {
    manifest.finish();
    match (ctx.format, table) {
        (OutputFormat::Csv, Some(t)) => write_csv(&t, manifest, ctx.out()),
        (OutputFormat::Json, _) => write_json(report, manifest, ctx.out()),
        (format, None) => emit_report(report, manifest, format, ctx.out()),
    }
}

#[derive(Serialize)]
struct SieveReport {
    limit: u64,
    prefix: i64,
    cache: Option<String>,
}

#[derive(Serialize)]
struct DeltaReport {
    x: f64,
    star: bool,
    exact: f64,
    trunc: Option<u64>,
    voronoi: Option<f64>,
}

#[derive(Serialize)]
struct EzetaReport {
    t: f64,
    quadrature: Option<f64>,
    atkinson: Option<f64>,
    n_cap: Option<u64>,
    /// Calibrated bound on `|atkinson - quadrature|`.
    atkinson_error_bound: f64,
    rs_order: u8,
}

#[derive(Serialize)]
struct MomentOutput {
    moment: MomentReport,
    ratios: MomentRatios,
}

#[derive(Serialize)]
struct ScanRow {
    y_const: f64,
    y: f64,
    main_diagonal: Option<f64>,
}

#[derive(Serialize)]
struct MainTermReport {
    spec: MomentSpec,
    main_quadruple: Option<f64>,
    main_diagonal: Option<f64>,
    mean_square: Option<f64>,
    c_scan: Vec<ScanRow>,
}

#[derive(Serialize)]
struct CountReport {
    records: Vec<CountRecord>,
}

#[derive(Serialize)]
struct FamiliesReport {
    y: u64,
    count: usize,
    families: Vec<divmoment::quadruples::QuadrupleFamily>,
}

#[derive(Serialize)]
struct TrigRow {
    k: usize,
    samples: usize,
    tolerance: f64,
    max_closed_error: f64,
    max_split_error: f64,
    passed: bool,
}

#[derive(Serialize)]
struct TrigReport {
    seed: u64,
    rows: Vec<TrigRow>,
}

#[derive(Serialize)]
struct AdmissibleReport {
    spec: MomentSpec,
    cases: Vec<AdmissibleRow>,
}

#[derive(Serialize)]
struct AdmissibleRow {
    #[serde(flatten)]
    case: AdmissibilityCase,
    passes: bool,
}

#[derive(Serialize)]
struct VerifyReport {
    outcomes: Vec<CriterionOutcome>,
    passed: usize,
    failed: usize,
}

fn run(cli: Cli, argv: &[String]) -> Result<ExitCode> {
    let g = cli.global;
    let exec = match g.threads {
        Some(0) => return Err(Error::InvalidArgument("--threads must be at least 1".into())),
        Some(1) => Exec::Sequential,
        Some(n) => {
            configure_threads(n);
            Exec::Parallel
        }
        None => Exec::Parallel,
    };
    let mut ctx = Ctx {
        exec,
        format: g.format.into(),
        out: g.out,
        seed: g.seed,
        cache_dir: g.cache_dir,
        caches: Vec::new(),
    };
    let name = argv
        .iter()
        .skip(1)
        .find(|a| !a.starts_with('-') && COMMANDS.contains(&a.as_str()))
        .cloned()
        .unwrap_or_default();
    let params = params_from_argv(argv);
    let mut status = ExitCode::SUCCESS;

    // Caches are resolved first so the manifest can name them.
    let manifest_for = |ctx: &Ctx| RunManifest::start(&name, params.clone(), ctx.caches.clone(), Some(ctx.seed));

    match cli.command {
        Command::Sieve { limit } => {
            let table = sieve_divisors(limit)?;
            let cache = ctx.out.clone().or_else(|| ctx.cache_dir.as_ref().map(|d| d.join("divisors.divt")));
            if let Some(p) = &cache {
                table.save(p)?;
            }
            let report = SieveReport {
                limit,
                prefix: table.prefix(limit),
                cache: cache.map(|p| p.display().to_string()),
            };
            let mut m = manifest_for(&ctx);
            m.finish();
            // the cache took --out, so the report goes to standard output
            match ctx.format {
                OutputFormat::Json => write_json(&report, &m, None)?,
                OutputFormat::Csv => write_csv(&Table::flatten(&report)?, &m, None)?,
            }
        }
        Command::Delta { x, trunc, star } => {
            let reach = if star { 4.0 * x } else { x };
            let table = ctx.table((reach.floor() as u64).max(trunc.unwrap_or(0)))?;
            let (exact, voronoi) = if star {
                (
                    delta_star_exact(x, &table)?,
                    trunc.map(|n| delta_star_voronoi(x, n, &table)).transpose()?,
                )
            } else {
                (
                    delta_exact(x, &table)?,
                    trunc
                        .map(|n| VoronoiParams::new(x, n).and_then(|p| delta_voronoi(p, &table)))
                        .transpose()?,
                )
            };
            let report = DeltaReport { x, star, exact, trunc, voronoi };
            emit(&ctx, &mut manifest_for(&ctx), &report, None)?;
        }
        Command::Ezeta { t, evaluator, n_cap, rs_order } => {
            let cfg = CriticalLineConfig {
                rs_correction_order: rs_order,
                ..Default::default()
            };
            cfg.validate()?;
            if t < 2.0 {
                return Err(Error::InvalidArgument(format!("t = {t} must be at least 2")));
            }
            let quadrature = if evaluator != EzetaEvaluator::Atkinson {
                let mut cache = ctx.integral_cache(cfg, t)?;
                Some(big_e_exact(t, &cfg, &mut cache, ctx.exec)?)
            } else {
                None
            };
            let (atkinson, n_cap) = if evaluator != EzetaEvaluator::Quadrature {
                let n = n_cap.unwrap_or_else(|| default_n_cap(t));
                let (lo, hi) = atkinson_window(t);
                let table = ctx.table(hi.max(n).max(lo))?;
                (Some(big_e_atkinson(t, n, &table)?), Some(n))
            } else {
                (None, None)
            };
            let report = EzetaReport {
                t,
                quadrature,
                atkinson,
                n_cap,
                atkinson_error_bound: ATKINSON_ERROR_CONST * t.ln().powi(2),
                rs_order,
            };
            emit(&ctx, &mut manifest_for(&ctx), &report, None)?;
        }
        Command::Moment { spec, main, eval } => {
            let spec = spec.resolve()?;
            let opts = MomentOptions {
                exec: ctx.exec,
                evaluator: match eval.evaluator {
                    EvalKind::Atkinson => EEvaluator::Atkinson {
                        n_cap_ratio: eval.n_cap_ratio,
                    },
                    EvalKind::Quadrature => EEvaluator::Quadrature,
                },
                ..Default::default()
            };
            let which = match main {
                MainArg::None => MainTerms::None,
                MainArg::Quadruple => MainTerms::Quadruple,
                MainArg::Diagonal => MainTerms::Diagonal,
                MainArg::Both => MainTerms::Both,
                MainArg::MeanSquare => {
                    return Err(Error::InvalidArgument("use main-term --which mean-square".into()));
                }
            };
            let table = ctx.table(table_requirement(&spec, &opts, which != MainTerms::None))?;
            let cache = match (spec.family, opts.evaluator) {
                (Family::ZetaE, EEvaluator::Quadrature) => {
                    Some(ctx.integral_cache(CriticalLineConfig::default(), spec.reach())?)
                }
                _ => None,
            };
            let res = Resources {
                table: Some(&table),
                cache: cache.as_ref(),
            };
            let mut report = moment_integral(&spec, &res, &opts)?;
            attach_main_terms(&mut report, which, &table, ctx.exec)?;
            let out = MomentOutput {
                ratios: report.ratios(),
                moment: report,
            };
            emit(&ctx, &mut manifest_for(&ctx), &out, None)?;
        }
        Command::MainTerm { spec, which, c_scan } => {
            let spec = spec.resolve()?;
            let mut need = if which == MainArg::MeanSquare {
                (spec.t / (2.0 * spec.u.max(1.0))).floor() as u64
            } else {
                spec.y().floor() as u64
            };
            for &c in &c_scan {
                need = need.max(spec.with_y_const(c)?.y().floor() as u64);
            }
            let table = ctx.table(need)?;
            let quad = matches!(which, MainArg::Quadruple | MainArg::Both);
            let diag = matches!(which, MainArg::Diagonal | MainArg::Both);
            let report = MainTermReport {
                spec,
                main_quadruple: quad.then(|| main_quadruple(&spec, &table, ctx.exec)).transpose()?,
                main_diagonal: diag.then(|| main_diagonal(&spec, &table, ctx.exec)).transpose()?,
                mean_square: (which == MainArg::MeanSquare)
                    .then(|| jutila_ms_main(&spec, &table, ctx.exec))
                    .transpose()?,
                c_scan: main_diagonal_c_scan(&spec, &c_scan, &table, ctx.exec)?
                    .into_iter()
                    .map(|(y_const, y, main_diagonal)| ScanRow { y_const, y, main_diagonal })
                    .collect(),
            };
            emit(&ctx, &mut manifest_for(&ctx), &report, None)?;
        }
        Command::Count { n, delta, delta_exponent } => {
            let opts = CountOptions {
                exec: ctx.exec,
                ..Default::default()
            };
            let mut records = Vec::new();
            for &level in &n {
                for &d in &delta {
                    let d = if delta_exponent { (level as f64).powf(d) } else { d };
                    records.push(CountRecord::run(level, d, &opts)?);
                }
            }
            let table = Table::counts(&records);
            emit(&ctx, &mut manifest_for(&ctx), &CountReport { records }, Some(table))?;
        }
        Command::Enumerate { y, kind } => match kind {
            EnumKind::Gap => {
                let scan: GapScan = scan_gap(y, ctx.exec)?;
                let table = Table::certificates(&scan.smallest);
                emit(&ctx, &mut manifest_for(&ctx), &scan, Some(table))?;
            }
            other => {
                let families = match other {
                    EnumKind::TwoTwo => enumerate_two_two(y, ctx.exec)?,
                    EnumKind::ThreeOne => enumerate_three_one(y, ctx.exec)?,
                    _ => enumerate_off_diagonal(y, ctx.exec)?,
                };
                let table = Table::families(&families);
                let report = FamiliesReport {
                    y,
                    count: families.len(),
                    families,
                };
                emit(&ctx, &mut manifest_for(&ctx), &report, Some(table))?;
            }
        },
        Command::Sums { which, z, u } => {
            let report = match which {
                SumArg::Czu => {
                    let u = u.ok_or_else(|| Error::InvalidArgument("czu needs --u".into()))?;
                    compute_c_zu(z, u, ctx.exec)?
                }
                SumArg::C1 => {
                    let table = ctx.table(z)?;
                    compute_c1(z, &table, ctx.exec)?
                }
                two_two => {
                    let kind = match two_two {
                        SumArg::C2 => SumKind::C2,
                        SumArg::C2Prime => SumKind::C2Prime,
                        SumArg::C21 => SumKind::C21,
                        _ => SumKind::C22,
                    };
                    let table = ctx.table(z)?;
                    compute_c2(z, &table, kind, ctx.exec)?
                }
            };
            emit(&ctx, &mut manifest_for(&ctx), &report, None)?;
        }
        Command::TrigCheck { k_max, samples, range } => {
            let report = trig_check(k_max, samples, range, ctx.seed)?;
            if report.rows.iter().any(|r| !r.passed) {
                status = ExitCode::from(1);
            }
            let mut table = Table::default();
            for row in &report.rows {
                table.append(Table::flatten(row)?)?;
            }
            emit(&ctx, &mut manifest_for(&ctx), &report, Some(table))?;
        }
        Command::Admissible { spec, case } => {
            let spec = spec.resolve()?;
            let ids = case.map(|c| vec![c]).unwrap_or_else(|| RegimeId::ALL.to_vec());
            let cases: Vec<AdmissibleRow> = ids
                .into_iter()
                .map(|id| {
                    let case = check_admissibility(&spec, id);
                    AdmissibleRow {
                        passes: case.passes(),
                        case,
                    }
                })
                .collect();
            let mut table = Table {
                header: ["case_id", "condition", "slack", "passes"].map(String::from).to_vec(),
                rows: Vec::new(),
            };
            for row in &cases {
                for m in &row.case.margins {
                    table.rows.push(vec![
                        row.case.case_id.as_str().to_string(),
                        m.condition.clone(),
                        m.slack.to_string(),
                        (m.slack >= 0.0).to_string(),
                    ]);
                }
            }
            emit(&ctx, &mut manifest_for(&ctx), &AdmissibleReport { spec, cases }, Some(table))?;
        }
        Command::Verify { suite } => {
            let ids = parse_suite(&suite)?;
            let cfg = AcceptanceConfig {
                exec: ctx.exec,
                seed: ctx.seed,
            };
            let outcomes = run_suite(&ids, &cfg)?;
            for o in &outcomes {
                eprintln!("{}", o.line());
            }
            let passed = outcomes.iter().filter(|o| o.passed()).count();
            let failed = outcomes.len() - passed;
            if failed > 0 {
                status = ExitCode::from(1);
            }
            let mut table = Table::default();
            for o in &outcomes {
                table.append(Table::flatten(o)?)?;
            }
            let report = VerifyReport { outcomes, passed, failed };
            emit(&ctx, &mut manifest_for(&ctx), &report, Some(table))?;
        }
    }
    Ok(status)
}

const COMMANDS: [&str; 11] = [
    "sieve",
    "delta",
    "ezeta",
    "moment",
    "main-term",
    "count",
    "enumerate",
    "sums",
    "trig-check",
    "admissible",
    "verify",
];

fn trig_check(k_max: usize, samples: usize, range: f64, seed: u64) -> Result<TrigReport> {
    use rand::{Rng, SeedableRng};
    if !(1..=16).contains(&k_max) || samples == 0 || range.is_nan() || range <= 0.0 {
        return Err(Error::InvalidArgument("need 1 <= k-max <= 16, samples > 0, range > 0".into()));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    for k in 1..=k_max {
        let tolerance = (k as f64).exp2() * 1e-12;
        let (mut closed, mut split): (f64, f64) = (0.0, 0.0);
        for _ in 0..samples {
            let alphas: Vec<f64> = (0..k).map(|_| rng.gen_range(-range..=range)).collect();
            let args = TrigArgs::new(alphas.clone())?;
            let (si, co) = si_co_definitional(&args)?;
            let (si_c, co_c) = si_co_closed(&args);
            closed = closed.max((si - si_c).abs().max((co - co_c).abs()));
            if k > 1 {
                let m = k / 2;
                let left = si_co_definitional(&TrigArgs::new(alphas[..m].to_vec())?)?;
                let right = si_co_definitional(&TrigArgs::new(alphas[m..].to_vec())?)?;
                let (si_j, co_j) = si_co_join(left, right);
                split = split.max((si - si_j).abs().max((co - co_j).abs()));
            }
        }
        rows.push(TrigRow {
            k,
            samples,
            tolerance,
            max_closed_error: closed,
            max_split_error: split,
            passed: closed <= tolerance && split <= tolerance,
        });
    }
    Ok(TrigReport { seed, rows })
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    ExitCode::SUCCESS
                }
                _ => {
                    // clap writes usage to standard error
                    let _ = e.print();
                    ExitCode::from(1)
                }
            };
        }
    };
    match run(cli, &argv) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
