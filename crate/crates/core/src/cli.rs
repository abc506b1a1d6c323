//! Command-line front end: argument parsing, dispatch, rendering and exit codes.
//!
//! Exit codes: 0 success, 1 failed tolerance check or numerical failure,
//! 2 configuration error, 3 invalid fan, 4 tropical wall, 5 incomplete
//! critical set.

use crate::builtins::{with_param, ModelError};
use crate::config::{
    check_k_list, parse_class_expr, rational, ConfigError, JobConfig, OutputFormat, DEFAULT_PRECISION_BITS,
    MIN_PRECISION_BITS,
};
use crate::critical::{all_critical_points, label_points, scan_walls, CriticalError};
use crate::mirror::MirrorError;
use crate::num::{fmt_rational, q_to_f64, set_precision};
use crate::report::{describe, family_records, pairing_report, point_record, CriticalReport, Report, ScanReport};
use crate::stability::{
    df_mirror, futaki_mirror_ratio, pairing_matrix, quotient_slope_mirror, tropical, FutakiFixedDivisor, SlopeReport,
    StabilityError, StabilityReport,
};
use crate::surface::GeometryError;
use clap::{Args, Parser, Subcommand};
use std::fmt::Write as _;
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_TOLERANCE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_FAN: i32 = 3;
pub const EXIT_WALL: i32 = 4;
pub const EXIT_INCOMPLETE: i32 = 5;

const DEFAULT_KS: [f64; 3] = [3.0, 5.0, 8.0];

#[derive(Debug, Parser)]
#[command(
    name = "lgstab",
    version,
    about = "Slope stability and Donaldson-Futaki invariants of polarised surfaces, by intersection theory and by mirror residue sums"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct CommonArgs {
    /// Built-in surface name (p2, blp_p2, blpq_p2, p1xp1_blowup, iterated_blowup, dp5, dp4).
    #[arg(long, global = true)]
    pub surface: Option<String>,
    /// TOML job configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Comma-separated list of scales `k`.
    #[arg(long, global = true, value_delimiter = ',')]
    pub k: Option<Vec<f64>>,
    /// Slope parameter `s` (rational string).
    #[arg(long, global = true)]
    pub s: Option<String>,
    /// Kähler parameter `q`.
    #[arg(long, global = true)]
    pub q: Option<String>,
    /// Kähler parameter `r`.
    #[arg(long, global = true)]
    pub r: Option<String>,
    /// Any named Kähler parameter, as `name=value`.
    #[arg(long = "param", global = true)]
    pub params: Vec<String>,
    /// Output format: table, json or csv.
    #[arg(long, global = true)]
    pub format: Option<String>,
    /// Working precision in bits.
    #[arg(long, global = true, env = "LGSTAB_PRECISION")]
    pub precision: Option<u32>,
    /// Tolerance for the command's consistency check.
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Subcommand, Clone)]
pub enum Command {
    /// Fan, intersection matrix, -K, Kähler check and slope of the surface.
    Describe,
    /// Tropical critical families, chamber margins and refined critical points.
    Critical,
    /// Residue pairing matrix of the boundary thetas against intersection numbers.
    Pairing,
    /// Donaldson-Futaki invariant of the configured test configuration.
    Df,
    /// Quotient slope of a divisor, both ways, with the destabilization verdict.
    Slope {
        /// Divisor class expression, e.g. `E` or `H - E - F`.
        #[arg(long)]
        z: Option<String>,
    },
    /// Localized Futaki ratio for two fixed divisors.
    Futaki,
    /// Walls of the tropical chamber structure along one Kähler parameter.
    Scan {
        #[arg(long = "scan-param")]
        param: Option<String>,
        #[arg(long)]
        lo: Option<String>,
        #[arg(long)]
        hi: Option<String>,
        #[arg(long)]
        step: Option<String>,
    },
}

/// Rendered output with its exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Failure { code, message: message.into() }
    }
}

fn geometry_code(e: &GeometryError) -> i32 {
    match e {
        GeometryError::DegenerateFan(_)
        | GeometryError::NonPrimitiveRay { .. }
        | GeometryError::NonSmoothFan { .. }
        | GeometryError::NotCounterclockwise
        | GeometryError::DuplicateRay(_)
        | GeometryError::NameCountMismatch { .. } => EXIT_FAN,
        _ => EXIT_CONFIG,
    }
}

fn mirror_code(e: &MirrorError) -> i32 {
    match e {
        MirrorError::Geometry(g) => geometry_code(g),
        _ => EXIT_CONFIG,
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        let code = match &e {
            ConfigError::Geometry(g) => geometry_code(g),
            ConfigError::Model(ModelError::Geometry(g)) => geometry_code(g),
            ConfigError::Model(ModelError::Mirror(m)) => mirror_code(m),
            _ => EXIT_CONFIG,
        };
        Failure::new(code, e.to_string())
    }
}

fn critical_code(e: &CriticalError) -> i32 {
    match e {
        CriticalError::WallDetected { .. } => EXIT_WALL,
        _ => EXIT_TOLERANCE,
    }
}

impl From<CriticalError> for Failure {
    fn from(e: CriticalError) -> Self {
        Failure::new(critical_code(&e), e.to_string())
    }
}

impl From<StabilityError> for Failure {
    fn from(e: StabilityError) -> Self {
        let code = match &e {
            StabilityError::Critical(c) => critical_code(c),
            StabilityError::IncompleteCriticalSet { .. } => EXIT_INCOMPLETE,
            StabilityError::Geometry(g) => geometry_code(g),
            StabilityError::Mirror(m) => mirror_code(m),
            StabilityError::BadKList | StabilityError::UnknownBranch(_) | StabilityError::ZeroWeight => EXIT_CONFIG,
            _ => EXIT_TOLERANCE,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<GeometryError> for Failure {
    fn from(e: GeometryError) -> Self {
        Failure::new(geometry_code(&e), e.to_string())
    }
}

/// Merges command-line flags into the job configuration; flags win.
fn job(common: &CommonArgs) -> Result<JobConfig, Failure> {
    let mut cfg = match &common.config {
        Some(p) => JobConfig::load(p)?,
        None => JobConfig::default(),
    };
    if let Some(name) = &common.surface {
        cfg.surface = crate::config::SurfaceSpec { builtin: Some(name.clone()), ..Default::default() };
    }
    if let Some(q) = &common.q {
        cfg.kahler.insert("q".into(), q.clone());
    }
    if let Some(r) = &common.r {
        cfg.kahler.insert("r".into(), r.clone());
    }
    for p in &common.params {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| Failure::new(EXIT_CONFIG, format!("--param expects name=value, got `{p}`")))?;
        cfg.kahler.insert(k.trim().into(), v.trim().into());
    }
    if let Some(ks) = &common.k {
        cfg.k_list = Some(ks.clone());
    }
    if let Some(s) = &common.s {
        cfg.s = Some(s.clone());
    }
    if let Some(f) = &common.format {
        cfg.format = Some(f.clone());
    }
    if let Some(p) = common.precision {
        cfg.precision_bits = Some(p);
    }
    if let Some(t) = common.tolerance {
        cfg.tolerance = Some(t);
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn run_args<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let text = e.to_string();
            if code == EXIT_OK {
                Outcome { stdout: text, stderr: String::new(), code }
            } else {
                Outcome { stdout: String::new(), stderr: text, code }
            }
        }
    }
}

pub fn run(cli: &Cli) -> Outcome {
    match execute(cli) {
        Ok((report, format, pass)) => Outcome {
            stdout: render(&report, format),
            stderr: String::new(),
            code: if pass { EXIT_OK } else { EXIT_TOLERANCE },
        },
        Err(f) => Outcome { stdout: String::new(), stderr: format!("error: {}\n", f.message), code: f.code },
    }
}

fn execute(cli: &Cli) -> Result<(Report, OutputFormat, bool), Failure> {
    let cfg = job(&cli.common)?;
    let bits = cfg.precision_bits.unwrap_or(DEFAULT_PRECISION_BITS);
    if bits < MIN_PRECISION_BITS {
        return Err(ConfigError::LowPrecision(bits).into());
    }
    set_precision(bits);
    let format: OutputFormat = cfg.format.as_deref().unwrap_or("table").parse()?;
    let model = cfg.model()?;
    let tol = cfg.tolerance;
    match &cli.command {
        Command::Describe => {
            let r = describe(&model)?;
            Ok((Report::Describe(r), format, true))
        }
        Command::Critical => {
            let ks = cfg.k_list_or(&[3.0]);
            let families = tropical(&model)?;
            let (recs, wall) = family_records(&model, &families)?;
            let mut points = Vec::new();
            let limit = tol.unwrap_or(1e-20);
            let mut pass = true;
            for &k in &ks {
                let mut pts = all_critical_points(&model.chart.potential, k)?;
                label_points(&mut pts, &families);
                for p in &pts {
                    pass &= p.grad_residual <= limit;
                    points.push(point_record(p));
                }
            }
            let r = CriticalReport {
                surface: model.name.clone(),
                params: crate::report::params_of(&model),
                tie_mode: model.tie_mode,
                wall,
                families: recs,
                points,
            };
            Ok((Report::Critical(r), format, pass))
        }
        Command::Pairing => {
            let k = cfg.k_list_or(&[4.0])[0];
            let (mirror, exact) = pairing_matrix(&model, k)?;
            let r = pairing_report(&model, k, &mirror, &exact, tol.unwrap_or(1e-6));
            let pass = r.pass;
            Ok((Report::Pairing(r), format, pass))
        }
        Command::Df => {
            let ks = cfg.k_list_or(&DEFAULT_KS);
            let tc = cfg.quadratic(&model)?.ok_or_else(|| Failure::from(ConfigError::Missing("testconfig")))?;
            let r = df_mirror(&model, &tc, &ks)?;
            let pass = agreement(&r, tol);
            Ok((Report::Df(r), format, pass))
        }
        Command::Slope { z } => {
            let ks = cfg.k_list_or(&DEFAULT_KS);
            let z_expr =
                z.clone().or(cfg.z_divisor.clone()).ok_or_else(|| Failure::from(ConfigError::Missing("z_divisor")))?;
            let s = rational(cfg.s.as_deref().ok_or_else(|| Failure::from(ConfigError::Missing("s")))?)?;
            let zc = parse_class_expr(&z_expr, &model)?;
            let r = quotient_slope_mirror(&model, &z_expr, &zc, &s, &ks)?;
            let pass = slope_agreement(&r, tol);
            Ok((Report::Slope(r), format, pass))
        }
        Command::Futaki => {
            let ks = cfg.k_list_or(&DEFAULT_KS);
            let spec = cfg.futaki.clone().ok_or_else(|| Failure::from(ConfigError::Missing("futaki")))?;
            let mk = |d: &crate::config::FutakiDivisorSpec| -> Result<FutakiFixedDivisor, Failure> {
                Ok(FutakiFixedDivisor {
                    name: d.class.clone(),
                    cls: parse_class_expr(&d.class, &model)?,
                    moment: d.moment,
                    weight: d.weight,
                })
            };
            let d = mk(&spec.d)?;
            let dp = mk(&spec.d_prime)?;
            let at: Vec<(usize, usize)> = spec.d.at.iter().map(|l| (l[0], l[1])).collect();
            let at_p = spec
                .d_prime
                .at
                .first()
                .map(|l| (l[0], l[1]))
                .ok_or_else(|| Failure::new(EXIT_CONFIG, "futaki.d_prime.at needs one label"))?;
            let r = futaki_mirror_ratio(&model, &d, &at, &dp, at_p, &ks)?;
            Ok((Report::Futaki(r), format, true))
        }
        Command::Scan { param, lo, hi, step } => {
            let spec = cfg.scan.clone();
            let pick = |flag: &Option<String>, field: Option<String>, name: &'static str| -> Result<String, Failure> {
                flag.clone().or(field).ok_or_else(|| Failure::from(ConfigError::Missing(name)))
            };
            let param = pick(param, spec.as_ref().map(|s| s.param.clone()), "scan.param")?;
            let lo = rational(&pick(lo, spec.as_ref().map(|s| s.lo.clone()), "scan.lo")?)?;
            let hi = rational(&pick(hi, spec.as_ref().map(|s| s.hi.clone()), "scan.hi")?)?;
            let step = rational(&pick(step, spec.as_ref().map(|s| s.step.clone()), "scan.step")?)?;
            if !model.params.contains_key(&param) {
                return Err(ModelError::UnknownParameter { surface: model.name.clone(), param }.into_failure());
            }
            let name = model.name.clone();
            let walls = scan_walls(|t| with_param(&name, &param, t).ok().map(|m| m.chart.potential), &lo, &hi, &step);
            let r = ScanReport {
                surface: model.name.clone(),
                param,
                lo: fmt_rational(&lo),
                hi: fmt_rational(&hi),
                step: fmt_rational(&step),
                walls_decimal: walls.iter().map(q_to_f64).collect(),
                walls: walls.iter().map(fmt_rational).collect(),
            };
            Ok((Report::Scan(r), format, true))
        }
    }
}

trait IntoFailure {
    fn into_failure(self) -> Failure;
}

impl IntoFailure for ModelError {
    fn into_failure(self) -> Failure {
        ConfigError::Model(self).into()
    }
}

/// Intersection value against the extrapolated mirror limit, when concentrated.
fn agreement(r: &StabilityReport, tol: Option<f64>) -> bool {
    match r.intersection_f64() {
        Some(exact) if r.concentrated => {
            let allowed = tol.unwrap_or_else(|| 1e-3f64.max(1e-2 * exact.abs()));
            (r.limit.re - exact).abs() <= allowed && r.limit.im.abs() <= allowed
        }
        _ => true,
    }
}

fn slope_agreement(r: &SlopeReport, tol: Option<f64>) -> bool {
    let exact = r.ratio.intersection_f64().unwrap_or(f64::NAN);
    let rel = tol.unwrap_or(1e-3);
    (r.ratio.limit.re - exact).abs() <= rel * exact.abs().max(1.0)
}

fn render(report: &Report, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => json_lines(report),
        OutputFormat::Csv => csv(report),
        OutputFormat::Table => table(report),
    }
}

fn json_lines(report: &Report) -> String {
    let mut out = report.to_json();
    out.push('\n');
    out
}

fn pad_table(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let mut widths = vec![0; cols];
    for r in rows {
        for (i, c) in r.iter().enumerate() {
            widths[i] = widths[i].max(c.chars().count());
        }
    }
    let mut out = String::new();
    for r in rows {
        let line: Vec<String> = r.iter().enumerate().map(|(i, c)| format!("{c:>w$}", w = widths[i])).collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
    }
    out
}

fn params_line(p: &std::collections::BTreeMap<String, String>) -> String {
    if p.is_empty() {
        String::new()
    } else {
        format!(" ({})", p.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(", "))
    }
}

fn stability_table(out: &mut String, r: &StabilityReport) {
    let _ = writeln!(out, "{} on {}{}", r.quantity, r.surface, params_line(&r.params));
    if let Some(i) = &r.intersection {
        let _ = writeln!(out, "intersection: {i}");
    }
    let mut rows = vec![vec!["k".to_string(), "mirror".to_string()]];
    for m in &r.mirror {
        rows.push(vec![format!("{}", m.k), m.value.to_string()]);
    }
    out.push_str(&pad_table(&rows));
    let _ = writeln!(out, "mirror limit: {}", r.limit);
    let _ = writeln!(out, "concentrated: {}", r.concentrated);
    if !r.families.is_empty() {
        let mut rows = vec![["family", "beta", "alpha", "c", "gamma", "limit", "carries"].map(String::from).to_vec()];
        for f in &r.families {
            rows.push(vec![
                format!("{}.{}", f.family, f.branch),
                format!("({}, {})", f.beta[0], f.beta[1]),
                format!("({}, {})", short(f.alpha[0]), short(f.alpha[1])),
                f.c.map(|c| c.to_string()).unwrap_or_else(|| "-".into()),
                f.gamma.clone().unwrap_or_else(|| "-".into()),
                f.limit.to_string(),
                f.carries.to_string(),
            ]);
        }
        out.push_str(&pad_table(&rows));
    }
    for n in &r.notes {
        let _ = writeln!(out, "note: {n}");
    }
}

fn short(c: crate::stability::CValue) -> String {
    if c.im == 0.0 {
        format!("{:.6}", c.re)
    } else {
        format!("{:.6}{:+.6}i", c.re, c.im)
    }
}

fn table(report: &Report) -> String {
    let mut out = String::new();
    match report {
        Report::Describe(d) => {
            let _ = writeln!(out, "surface {}{}", d.surface, params_line(&d.params));
            if let Some(rays) = &d.rays {
                let list: Vec<String> =
                    rays.iter().zip(&d.boundary).map(|(r, n)| format!("{n}=({},{})", r[0], r[1])).collect();
                let _ = writeln!(out, "rays: {}", list.join(" "));
            } else {
                let _ = writeln!(out, "basis: {}", d.basis.join(" "));
            }
            let mut rows = vec![std::iter::once(String::new()).chain(d.boundary.iter().cloned()).collect::<Vec<_>>()];
            for (n, row) in d.boundary.iter().zip(&d.intersection) {
                rows.push(std::iter::once(n.clone()).chain(row.iter().cloned()).collect());
            }
            out.push_str(&pad_table(&rows));
            let _ = writeln!(out, "-K = [{}]", d.anticanonical.join(", "));
            let _ = writeln!(out, "omega = [{}]", d.omega.join(", "));
            let _ = writeln!(out, "omega^2 = {}", d.omega_squared);
            let _ = writeln!(out, "kahler: {} (min degree {} on {})", d.kahler, d.min_degree.1, d.min_degree.0);
            let _ = writeln!(out, "fano: {}", d.fano);
            let _ = writeln!(out, "mu = {}", d.mu);
            let _ = writeln!(out, "W = {}", d.potential);
        }
        Report::Critical(c) => {
            let _ = writeln!(out, "critical families on {}{}", c.surface, params_line(&c.params));
            let mut rows = vec![["family", "beta", "mult", "margins", "wall", "alpha"].map(String::from).to_vec()];
            for f in &c.families {
                for (i, a) in f.alphas.iter().enumerate() {
                    rows.push(vec![
                        if i == 0 { f.id.to_string() } else { String::new() },
                        if i == 0 { format!("({}, {})", f.beta[0], f.beta[1]) } else { String::new() },
                        if i == 0 { f.alphas.len().to_string() } else { String::new() },
                        if i == 0 { f.margins.join(",") } else { String::new() },
                        if i == 0 { f.on_wall.to_string() } else { String::new() },
                        format!("({}, {})", short(a[0]), short(a[1])),
                    ]);
                }
            }
            out.push_str(&pad_table(&rows));
            let mut rows = vec![["k", "label", "log|x|", "arg x", "log|y|", "arg y", "residual", "hessian"]
                .map(String::from)
                .to_vec()];
            for p in &c.points {
                rows.push(vec![
                    format!("{}", p.k),
                    p.label.map(|l| format!("{}.{}", l[0], l[1])).unwrap_or_else(|| "-".into()),
                    format!("{:.6}", p.log_abs[0]),
                    format!("{:.6}", p.arg[0]),
                    format!("{:.6}", p.log_abs[1]),
                    format!("{:.6}", p.arg[1]),
                    format!("{:.2e}", p.residual),
                    format!("{:.6e}", p.hessian.re),
                ]);
            }
            out.push_str(&pad_table(&rows));
        }
        Report::Pairing(p) => {
            let _ = writeln!(out, "residue pairing on {}{} at k = {}", p.surface, params_line(&p.params), p.k);
            for (title, cells) in [
                (
                    "mirror",
                    p.mirror
                        .iter()
                        .map(|r| r.iter().map(|c| format!("{:.9}", c.re)).collect::<Vec<_>>())
                        .collect::<Vec<_>>(),
                ),
                ("intersection", p.exact.clone()),
            ] {
                let _ = writeln!(out, "{title}:");
                let mut rows = vec![std::iter::once(String::new()).chain(p.names.iter().cloned()).collect::<Vec<_>>()];
                for (n, r) in p.names.iter().zip(cells) {
                    rows.push(std::iter::once(n.clone()).chain(r).collect());
                }
                out.push_str(&pad_table(&rows));
            }
            let _ = writeln!(
                out,
                "max deviation: {:.3e} (tolerance {:.1e}) {}",
                p.max_deviation,
                p.tolerance,
                if p.pass { "PASS" } else { "FAIL" }
            );
        }
        Report::Df(r) | Report::Futaki(r) => stability_table(&mut out, r),
        Report::Slope(s) => {
            let _ = writeln!(out, "slope of Z = {} at s = {}", s.z, s.s);
            let _ = writeln!(out, "mu(X) = {}", s.mu_x);
            let _ = writeln!(out, "mu_c intersection = {}", s.mu_c);
            let _ = writeln!(out, "mu_c mirror = {}", s.ratio.limit);
            stability_table(&mut out, &s.ratio);
            let _ = writeln!(out, "{}", s.verdict);
        }
        Report::Scan(s) => {
            let _ = writeln!(out, "walls of {} in {} over [{}, {}] (step {})", s.surface, s.param, s.lo, s.hi, s.step);
            if s.walls.is_empty() {
                let _ = writeln!(out, "none");
            }
            for (w, d) in s.walls.iter().zip(&s.walls_decimal) {
                let _ = writeln!(out, "{w}  ~ {d:.6}");
            }
        }
    }
    out
}

fn csv(report: &Report) -> String {
    let mut out = String::new();
    match report {
        Report::Scan(s) => {
            out.push_str("surface,param,wall,decimal\n");
            for (w, d) in s.walls.iter().zip(&s.walls_decimal) {
                let _ = writeln!(out, "{},{},{},{}", s.surface, s.param, w, num(*d));
            }
        }
        Report::Df(r) | Report::Futaki(r) => stability_csv(&mut out, r),
        Report::Slope(s) => stability_csv(&mut out, &s.ratio),
        Report::Critical(c) => {
            out.push_str("k,family,branch,log_abs_x,arg_x,log_abs_y,arg_y,residual\n");
            for p in &c.points {
                let (f, b) = p.label.map(|l| (l[0].to_string(), l[1].to_string())).unwrap_or_default();
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    p.k,
                    f,
                    b,
                    num(p.log_abs[0]),
                    num(p.arg[0]),
                    num(p.log_abs[1]),
                    num(p.arg[1]),
                    num(p.residual)
                );
            }
        }
        Report::Pairing(p) => {
            out.push_str("row,col,mirror,intersection\n");
            for (i, r) in p.mirror.iter().enumerate() {
                for (j, c) in r.iter().enumerate() {
                    let _ = writeln!(out, "{},{},{},{}", p.names[i], p.names[j], num(c.re), p.exact[i][j]);
                }
            }
        }
        Report::Describe(d) => {
            out.push_str("row,col,intersection\n");
            for (i, r) in d.intersection.iter().enumerate() {
                for (j, v) in r.iter().enumerate() {
                    let _ = writeln!(out, "{},{},{}", d.boundary[i], d.boundary[j], v);
                }
            }
        }
    }
    out
}

fn stability_csv(out: &mut String, r: &StabilityReport) {
    out.push_str("k,mirror_re,mirror_im\n");
    for m in &r.mirror {
        let _ = writeln!(out, "{},{},{}", m.k, num(m.value.re), num(m.value.im));
    }
}

/// Shortest round-trip form, in scientific notation away from unit scale.
fn num(x: f64) -> String {
    if x != 0.0 && x.is_finite() && !(1e-4..1e15).contains(&x.abs()) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

/// Validates a `k` list supplied outside a configuration file.
pub fn validate_ks(ks: &[f64]) -> Result<(), ConfigError> {
    check_k_list(ks)
}
