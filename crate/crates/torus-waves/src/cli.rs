//! Command-line interface: one binary, seven subcommands
//! (`lattice`, `curve`, `zeros`, `kacrice`, `diagnose`, `simulate`, `compare`).
//!
//! Exit codes: 0 success, 1 domain error (structured JSON on stderr),
//! 2 usage error (clap). JSON is the canonical output; `--format pretty`
//! renders the same data for humans.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

use torus_waves_core::diagnostics::{self, DiagnosticsOptions, GapSpec};
use torus_waves_core::geometry::{
    self, validate_curve_regularity, BallScale, Curve, CurveSampler, CurveSpec,
};
use torus_waves_core::kacrice;
use torus_waves_core::lattice::{Dim, LatticeSet};
use torus_waves_core::wave::{sample_coefficients, trial_seed, CoefficientKind, CoefficientModel};
use torus_waves_core::zeros::count_zeros;

use crate::harness::{self, RunConfig};
use crate::manifest;

#[derive(Debug)]
pub struct CliError {
    pub kind: String,
    pub message: String,
}

impl CliError {
    fn new(kind: &str, message: impl ToString) -> Self {
        CliError {
            kind: kind.into(),
            message: message.to_string(),
        }
    }
}

macro_rules! cli_error_from {
    ($ty:ty, $kind:expr) => {
        impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::new($kind, e)
            }
        }
    };
}

cli_error_from!(torus_waves_core::lattice::LatticeError, "lattice");
cli_error_from!(torus_waves_core::geometry::CurveError, "curve");
cli_error_from!(torus_waves_core::zeros::ZeroError, "zeros");
cli_error_from!(torus_waves_core::kacrice::KacRiceError, "kacrice");
cli_error_from!(
    torus_waves_core::diagnostics::DiagnosticsError,
    "diagnostics"
);
cli_error_from!(harness::HarnessError, "harness");
cli_error_from!(manifest::ManifestError, "manifest");

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Pretty,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DistArg {
    Gaussian,
    Bernoulli,
    Uniform,
    Mixed,
}

impl From<DistArg> for CoefficientKind {
    fn from(d: DistArg) -> Self {
        match d {
            DistArg::Gaussian => CoefficientKind::Gaussian,
            DistArg::Bernoulli => CoefficientKind::Bernoulli,
            DistArg::Uniform => CoefficientKind::Uniform,
            DistArg::Mixed => CoefficientKind::Mixed,
        }
    }
}

/// Shared curve selection flags.
#[derive(Args, Clone, Debug, Default)]
pub struct CurveArgs {
    /// curve family: circle | helix | product | segment
    #[arg(long, global = false)]
    pub family: Option<String>,
    /// family parameters as comma-separated key=value pairs
    #[arg(long, default_value = "")]
    pub params: String,
    /// reparametrize the curve by arc length before use
    #[arg(long)]
    pub reparametrize: bool,
}

#[derive(Parser, Debug)]
#[command(
    name = "torus-waves",
    about = "Random eigenfunctions on flat tori: nodal intersection experiments",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Cmd,
    /// output format on stdout
    #[arg(long, value_enum, default_value_t = OutputFormat::Json, global = true)]
    pub format: OutputFormat,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Enumerate the frequency set E = {mu : |mu|^2 = m} and its statistics
    Lattice {
        #[arg(long)]
        d: u8,
        #[arg(long)]
        m: u64,
        /// include separation / arc / Fourier / discrepancy statistics
        #[arg(long)]
        stats: bool,
        /// write the lattice cache file {d, m, points, N}
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Curve tooling
    Curve {
        #[command(subcommand)]
        action: CurveCmd,
    },
    /// Count nodal intersections for freshly sampled waves
    Zeros {
        #[arg(long)]
        d: u8,
        #[arg(long)]
        m: u64,
        #[arg(long, value_enum, default_value_t = DistArg::Gaussian)]
        dist: DistArg,
        #[arg(long, default_value_t = 1)]
        trials: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 32.0)]
        grid_factor: f64,
        #[command(flatten)]
        curve: CurveArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closed-form Gaussian predictions (and the literal variance integral)
    Kacrice {
        #[arg(long)]
        d: u8,
        #[arg(long)]
        m: u64,
        /// also evaluate the two-point variance integral (d = 2)
        #[arg(long)]
        variance: bool,
        #[arg(long, default_value_t = 64)]
        quad_nodes: usize,
        #[command(flatten)]
        curve: CurveArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Arithmetic-structure diagnostics of the frequency set
    Diagnose {
        #[arg(long)]
        d: u8,
        #[arg(long, required_unless_present = "scan_max")]
        m: Option<u64>,
        /// include the curve-dependent ratios and the bad-set measure
        #[arg(long)]
        all: bool,
        #[arg(long, default_value_t = 360)]
        directions: usize,
        #[arg(long, default_value_t = 0.1)]
        eps0: f64,
        /// batch mode: CSV rows for every level m <= scan-max
        #[arg(long)]
        scan_max: Option<u64>,
        /// GAP probe: center as re,im
        #[arg(long)]
        gap_g0: Option<String>,
        /// GAP probe: generators as re,im;re,im;...
        #[arg(long)]
        gap_gens: Option<String>,
        /// GAP probe: dimension lengths as n1,n2,...
        #[arg(long)]
        gap_dims: Option<String>,
        #[arg(long, default_value_t = 0.05)]
        gap_delta: f64,
        #[arg(long, default_value_t = 0.01)]
        gap_eps: f64,
        #[command(flatten)]
        curve: CurveArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo run: trials, moments, manifest
    Simulate {
        /// run configuration JSON; explicit flags override its fields
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        d: Option<u8>,
        #[arg(long)]
        m: Option<u64>,
        #[arg(long, value_enum)]
        dist: Option<DistArg>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        grid_factor: Option<f64>,
        #[arg(long)]
        kmax: Option<u8>,
        /// worker threads (capped by TORUS_WAVES_THREADS)
        #[arg(long)]
        threads: Option<usize>,
        #[command(flatten)]
        curve: CurveArgs,
        /// write the run manifest here
        #[arg(long)]
        out: Option<PathBuf>,
        /// also export per-trial rows as CSV
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Compare the Z^k moments of two persisted runs
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, default_value_t = 2)]
        k: u8,
    },
}

#[derive(Subcommand, Debug)]
pub enum CurveCmd {
    /// Check unit speed, curvature, torsion and ball non-confinement
    Validate {
        #[command(flatten)]
        curve: CurveArgs,
        /// lattice level for the ball-nonconfinement scale (optional)
        #[arg(long)]
        m: Option<u64>,
        #[arg(long)]
        d: Option<u8>,
        #[arg(long, default_value_t = 0.5)]
        ball_alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        ball_c0: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_params(params: &str) -> Result<Vec<(String, f64)>, CliError> {
    let mut out = Vec::new();
    for chunk in params.split(',').filter(|c| !c.trim().is_empty()) {
        let (k, v) = chunk.split_once('=').ok_or_else(|| {
            CliError::new(
                "usage",
                format!("bad parameter '{chunk}', expected key=value"),
            )
        })?;
        let value: f64 = v
            .trim()
            .parse()
            .map_err(|_| CliError::new("usage", format!("parameter '{k}' is not a number")))?;
        out.push((k.trim().to_string(), value));
    }
    Ok(out)
}

fn get(params: &[(String, f64)], key: &str) -> Option<f64> {
    params.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
}

/// Builds a curve spec from CLI flags; defaults to the length-1 circle on
/// T^2 and the unit-speed helix on T^3.
pub fn parse_curve(args: &CurveArgs, d: Dim) -> Result<CurveSpec, CliError> {
    let params = parse_params(&args.params)?;
    let family = args.family.as_deref().unwrap_or(match d {
        Dim::Two => "circle",
        Dim::Three => "helix",
    });
    let mut spec = match family {
        "circle" => {
            let radius = get(&params, "radius").unwrap_or(geometry::UNIT_CIRCLE_RADIUS);
            let warp = get(&params, "warp").unwrap_or(1.0);
            if warp == 1.0 {
                geometry::make_circle_curve(radius)?
            } else {
                CurveSpec {
                    family: geometry::CurveFamily::Circle { radius, warp },
                    arc_length: false,
                }
            }
        }
        "helix" => {
            let alpha = get(&params, "alpha").unwrap_or(std::f64::consts::TAU);
            let b = get(&params, "b").unwrap_or(std::f64::consts::FRAC_1_SQRT_2);
            let a = get(&params, "a").unwrap_or((1.0 - b * b).max(0.0).sqrt() / alpha);
            geometry::make_helix_curve(a, alpha, b)?
        }
        "product" => {
            let radius = get(&params, "radius").unwrap_or(geometry::UNIT_CIRCLE_RADIUS);
            geometry::make_product_curve(radius)?
        }
        "segment" => {
            let start = [
                get(&params, "sx").unwrap_or(0.0),
                get(&params, "sy").unwrap_or(0.0),
                get(&params, "sz").unwrap_or(0.0),
            ];
            let dir = [
                get(&params, "dx").unwrap_or(1.0),
                get(&params, "dy").unwrap_or(0.0),
                get(&params, "dz").unwrap_or(0.0),
            ];
            geometry::make_segment_curve(d, start, dir)
        }
        other => {
            return Err(CliError::new(
                "usage",
                format!("unknown curve family '{other}'"),
            ))
        }
    };
    if args.reparametrize {
        spec = geometry::reparametrize_arclength(&spec)?;
    }
    Ok(spec)
}

fn dim_of(d: u8) -> Result<Dim, CliError> {
    Dim::try_from(d).map_err(CliError::from)
}

fn emit<T: Serialize>(value: &T, format: OutputFormat, out: Option<&Path>) -> Result<(), CliError> {
    let json = serde_json::to_value(value).map_err(|e| CliError::new("encode", e))?;
    if let Some(path) = out {
        let mut text =
            serde_json::to_string_pretty(&json).map_err(|e| CliError::new("encode", e))?;
        text.push('\n');
        std::fs::write(path, text)
            .map_err(|e| CliError::new("io", format!("writing {}: {e}", path.display())))?;
    }
    match format {
        OutputFormat::Json => {
            println!(
                "{}",
                serde_json::to_string_pretty(&json).map_err(|e| CliError::new("encode", e))?
            );
        }
        OutputFormat::Pretty => {
            let mut buf = String::new();
            render_pretty(&json, 0, &mut buf);
            print!("{buf}");
        }
        OutputFormat::Csv => {
            return Err(CliError::new(
                "usage",
                "csv output is only available for `simulate` and `diagnose --scan-max`",
            ));
        }
    }
    Ok(())
}

fn render_pretty(v: &Value, indent: usize, buf: &mut String) {
    let pad = "  ".repeat(indent);
    match v {
        Value::Object(map) => {
            for (k, val) in map {
                match val {
                    Value::Object(_) | Value::Array(_) => {
                        buf.push_str(&format!("{pad}{k}:\n"));
                        render_pretty(val, indent + 1, buf);
                    }
                    _ => buf.push_str(&format!("{pad}{k}: {val}\n")),
                }
            }
        }
        Value::Array(items) => {
            if items.len() > 8 {
                buf.push_str(&format!("{pad}[{} items]\n", items.len()));
            } else {
                for item in items {
                    render_pretty(item, indent, buf);
                }
            }
        }
        other => buf.push_str(&format!("{pad}{other}\n")),
    }
}

#[derive(Serialize)]
struct LatticeStats {
    d: u8,
    m: u64,
    #[serde(rename = "N")]
    n: usize,
    lambda: f64,
    empty: bool,
    min_sep: Option<f64>,
    b_arc: Option<usize>,
    tau4: Option<f64>,
    discrepancy: Option<f64>,
}

#[derive(Serialize)]
struct ZerosOutput {
    d: u8,
    m: u64,
    dist: String,
    seed: u64,
    counts: Vec<torus_waves_core::zeros::ZeroCount>,
}

#[derive(Serialize)]
struct KacriceOutput {
    prediction: kacrice::KacRicePrediction,
    variance_integral: Option<kacrice::VarianceIntegral>,
}

#[derive(Serialize)]
struct DiagnoseOutput {
    report: diagnostics::DiagnosticsReport,
    gap_probe: Option<GapProbeOutput>,
}

#[derive(Serialize)]
struct GapProbeOutput {
    rank: usize,
    volume: u64,
    delta: f64,
    eps: f64,
    separated_size: usize,
}

#[derive(Serialize)]
struct CompareRow {
    k: u8,
    gap: f64,
    combined_se: f64,
    within_3se: bool,
}

#[derive(Serialize)]
struct CompareOutput {
    a: String,
    b: String,
    rows: Vec<CompareRow>,
}

fn worker_count(requested: Option<usize>) -> usize {
    let available = std::thread::available_parallelism().map_or(1, |n| n.get());
    let wanted = requested.unwrap_or(available);
    match std::env::var("TORUS_WAVES_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        Some(cap) if cap >= 1 => wanted.min(cap),
        _ => wanted,
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Lattice { d, m, stats, out } => {
            let dim = dim_of(d)?;
            let lattice = LatticeSet::enumerate(dim, m)?;
            if let Some(path) = &out {
                manifest::save_lattice_cache(path, &lattice)?;
            }
            if stats {
                let d2 = dim == Dim::Two && !lattice.is_empty();
                let value = LatticeStats {
                    d,
                    m,
                    n: lattice.len(),
                    lambda: lattice.lambda(),
                    empty: lattice.is_empty(),
                    min_sep: lattice.min_separation().ok(),
                    b_arc: d2.then(|| lattice.arc_concentration(None).expect("d=2")),
                    tau4: d2.then(|| lattice.fourth_fourier().expect("d=2")),
                    discrepancy: d2
                        .then(|| diagnostics::discrepancy(&lattice.angles().expect("d=2"))),
                };
                emit(&value, cli.format, None)
            } else {
                let cache: Value = serde_json::from_str(&manifest::lattice_cache_json(&lattice))
                    .expect("cache is valid json");
                emit(&cache, cli.format, None)
            }
        }

        Cmd::Curve { action } => match action {
            CurveCmd::Validate {
                curve,
                m,
                d,
                ball_alpha,
                ball_c0,
                out,
            } => {
                let dim = dim_of(d.unwrap_or(2))?;
                let spec = parse_curve(&curve, dim)?;
                let ball = match m {
                    Some(m) => {
                        let lattice = LatticeSet::enumerate(spec.family.dim(), m)?;
                        Some(BallScale {
                            lambda: lattice.lambda(),
                            n_points: lattice.len().max(1),
                            alpha: ball_alpha,
                            c0: ball_c0,
                        })
                    }
                    None => None,
                };
                let report = validate_curve_regularity(&spec, ball);
                emit(&report, cli.format, out.as_deref())
            }
        },

        Cmd::Zeros {
            d,
            m,
            dist,
            trials,
            seed,
            grid_factor,
            curve,
            out,
        } => {
            let dim = dim_of(d)?;
            let spec = parse_curve(&curve, dim)?;
            let lattice = Arc::new(LatticeSet::enumerate(dim, m)?);
            if lattice.len() < 2 {
                return Err(CliError::new(
                    "lattice",
                    format!("no lattice points for m={m}"),
                ));
            }
            let compiled = Arc::new(Curve::compile(&spec));
            let cells = ((grid_factor * lattice.lambda()).ceil() as usize).max(64);
            let sampler = Arc::new(CurveSampler::from_curve(compiled, cells));
            let table = torus_waves_core::wave::PhaseTable::new(&lattice, &sampler);
            let model = CoefficientModel::by_kind(dist.into());
            let mut counts = Vec::with_capacity(trials as usize);
            for trial in 0..trials {
                let sample = sample_coefficients(&model, &lattice, trial_seed(seed, trial));
                counts.push(count_zeros(&sample, &table, (0.0, 1.0))?);
            }
            let value = ZerosOutput {
                d,
                m,
                dist: CoefficientKind::from(dist).to_string(),
                seed,
                counts,
            };
            emit(&value, cli.format, out.as_deref())
        }

        Cmd::Kacrice {
            d,
            m,
            variance,
            quad_nodes,
            curve,
            out,
        } => {
            let dim = dim_of(d)?;
            let lattice = LatticeSet::enumerate(dim, m)?;
            if lattice.is_empty() {
                return Err(CliError::new(
                    "lattice",
                    format!("no lattice points for m={m}"),
                ));
            }
            let mut output = KacriceOutput {
                prediction: kacrice::predict(&lattice),
                variance_integral: None,
            };
            if variance {
                let spec = parse_curve(&curve, dim)?;
                let compiled = Curve::compile(&spec);
                let vi = kacrice::variance_integral(&lattice, &compiled, quad_nodes)?;
                output.prediction.variance_leading = Some(vi.value);
                output.variance_integral = Some(vi);
            }
            emit(&output, cli.format, out.as_deref())
        }

        Cmd::Diagnose {
            d,
            m,
            all,
            directions,
            eps0,
            scan_max,
            gap_g0,
            gap_gens,
            gap_dims,
            gap_delta,
            gap_eps,
            curve,
            out,
        } => {
            let dim = dim_of(d)?;
            if let Some(max) = scan_max {
                return diagnose_scan(dim, max, cli.format, out.as_deref());
            }
            let m = m.expect("clap enforces m without scan-max");
            let lattice = LatticeSet::enumerate(dim, m)?;
            let opts = DiagnosticsOptions {
                directions,
                eps0,
                with_bad_set: all,
                ..Default::default()
            };
            let compiled = if all {
                Some(Curve::compile(&parse_curve(&curve, dim)?))
            } else {
                None
            };
            let report = diagnostics::report(&lattice, compiled.as_ref(), &opts);
            let gap_probe = match (&gap_g0, &gap_gens, &gap_dims) {
                (None, None, None) => None,
                _ => {
                    let spec =
                        parse_gap(gap_g0.as_deref(), gap_gens.as_deref(), gap_dims.as_deref())?;
                    let size = diagnostics::gap_circle_probe(&spec, gap_delta, gap_eps)?;
                    Some(GapProbeOutput {
                        rank: spec.rank(),
                        volume: spec.volume() as u64,
                        delta: gap_delta,
                        eps: gap_eps,
                        separated_size: size,
                    })
                }
            };
            let value = DiagnoseOutput { report, gap_probe };
            emit(&value, cli.format, out.as_deref())
        }

        Cmd::Simulate {
            config,
            d,
            m,
            dist,
            trials,
            seed,
            grid_factor,
            kmax,
            threads,
            curve,
            out,
            csv,
        } => {
            let base: Option<RunConfig> = match &config {
                Some(path) => Some(manifest::load_manifest(path).map(|a| a.config).or_else(
                    |_| -> Result<RunConfig, CliError> {
                        // a bare RunConfig JSON is accepted too
                        let text = std::fs::read_to_string(path).map_err(|e| {
                            CliError::new("io", format!("reading {}: {e}", path.display()))
                        })?;
                        serde_json::from_str(&text)
                            .map_err(|e| CliError::new("manifest", e.to_string()))
                    },
                )?),
                None => None,
            };
            let dim = match (d, &base) {
                (Some(d), _) => dim_of(d)?,
                (None, Some(b)) => b.d,
                (None, None) => {
                    return Err(CliError::new("usage", "--d is required without --config"))
                }
            };
            let m = m
                .or(base.as_ref().map(|b| b.m))
                .ok_or_else(|| CliError::new("usage", "--m is required without --config"))?;
            let model = match (dist, &base) {
                (Some(dist), _) => CoefficientModel::by_kind(dist.into()),
                (None, Some(b)) => b.model,
                (None, None) => CoefficientModel::gaussian(),
            };
            let curve_spec = if curve.family.is_some() || !curve.params.is_empty() {
                parse_curve(&curve, dim)?
            } else if let Some(b) = &base {
                b.curve.clone()
            } else {
                parse_curve(&curve, dim)?
            };
            let cfg = RunConfig {
                d: dim,
                m,
                curve: curve_spec,
                model,
                trials: trials.or(base.as_ref().map(|b| b.trials)).unwrap_or(100),
                master_seed: seed.or(base.as_ref().map(|b| b.master_seed)).unwrap_or(0),
                grid_factor: grid_factor
                    .or(base.as_ref().map(|b| b.grid_factor))
                    .unwrap_or(32.0),
                k_max: kmax.or(base.as_ref().map(|b| b.k_max)).unwrap_or(4),
            };
            let workers = worker_count(threads);
            let report = harness::run_trials(&cfg, workers)?;
            if let Some(secs) = report.wall_time_secs {
                eprintln!(
                    "# {} trials in {secs:.2}s on {workers} workers ({} uncertified)",
                    cfg.trials, report.uncertified
                );
            }
            if let Some(path) = &out {
                manifest::save_manifest(path, &cfg, &report)?;
            }
            if let Some(path) = &csv {
                manifest::save_trials_csv(path, &report)?;
            }
            if cli.format == OutputFormat::Csv {
                print!("{}", manifest::trials_csv(&report));
                return Ok(());
            }
            let value: Value = serde_json::from_str(&manifest::manifest_json(&cfg, &report))
                .expect("manifest is valid json");
            emit(&value, cli.format, None)
        }

        Cmd::Compare { a, b, k } => {
            let ra = manifest::load_manifest(&a)?;
            let rb = manifest::load_manifest(&b)?;
            let mut rows = Vec::new();
            for order in 1..=k.max(1) {
                let (gap, combined_se) = harness::universality_gap(&ra, &rb, order)?;
                rows.push(CompareRow {
                    k: order,
                    gap,
                    combined_se,
                    within_3se: gap <= 3.0 * combined_se,
                });
            }
            let value = CompareOutput {
                a: a.display().to_string(),
                b: b.display().to_string(),
                rows,
            };
            emit(&value, cli.format, None)
        }
    }
}

fn diagnose_scan(
    dim: Dim,
    max: u64,
    format: OutputFormat,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let mut csv = String::from("m,N,min_sep,sep_ratio,b_arc,tau4,discrepancy\n");
    for m in 1..=max {
        if dim == Dim::Three && matches!(m % 8, 0 | 4 | 7) {
            continue;
        }
        let lattice = LatticeSet::enumerate(dim, m)?;
        if lattice.is_empty() {
            continue;
        }
        let min_sep = lattice.min_separation().ok();
        let sep_ratio = min_sep.map(|s| {
            let log_m = if m > 1 { (m as f64).ln() } else { 0.0 };
            s * log_m.powf(1.5) / (m as f64).sqrt()
        });
        let (b_arc, tau4, disc) = if dim == Dim::Two {
            (
                Some(lattice.arc_concentration(None).expect("d=2")),
                Some(lattice.fourth_fourier().expect("d=2")),
                Some(diagnostics::discrepancy(&lattice.angles().expect("d=2"))),
            )
        } else {
            (None, None, None)
        };
        let fmt_opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x}"));
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            m,
            lattice.len(),
            fmt_opt(min_sep),
            fmt_opt(sep_ratio),
            b_arc.map_or(String::new(), |x| x.to_string()),
            fmt_opt(tau4),
            fmt_opt(disc),
        ));
    }
    if let Some(path) = out {
        std::fs::write(path, &csv)
            .map_err(|e| CliError::new("io", format!("writing {}: {e}", path.display())))?;
    }
    match format {
        OutputFormat::Csv | OutputFormat::Json | OutputFormat::Pretty => print!("{csv}"),
    }
    Ok(())
}

fn parse_complex(text: &str) -> Result<[f64; 2], CliError> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(CliError::new(
            "usage",
            format!("expected re,im pair, got '{text}'"),
        ));
    }
    let re = parts[0]
        .trim()
        .parse()
        .map_err(|_| CliError::new("usage", format!("bad real part '{}'", parts[0])))?;
    let im = parts[1]
        .trim()
        .parse()
        .map_err(|_| CliError::new("usage", format!("bad imaginary part '{}'", parts[1])))?;
    Ok([re, im])
}

fn parse_gap(
    g0: Option<&str>,
    gens: Option<&str>,
    dims: Option<&str>,
) -> Result<GapSpec, CliError> {
    let gens = gens.ok_or_else(|| CliError::new("usage", "--gap-gens is required"))?;
    let dims = dims.ok_or_else(|| CliError::new("usage", "--gap-dims is required"))?;
    let generators: Vec<[f64; 2]> = gens
        .split(';')
        .filter(|c| !c.trim().is_empty())
        .map(parse_complex)
        .collect::<Result<_, _>>()?;
    let dims: Vec<u64> = dims
        .split(',')
        .filter(|c| !c.trim().is_empty())
        .map(|c| {
            c.trim()
                .parse()
                .map_err(|_| CliError::new("usage", format!("bad dimension '{c}'")))
        })
        .collect::<Result<_, _>>()?;
    if generators.len() != dims.len() || generators.is_empty() || generators.len() > 3 {
        return Err(CliError::new(
            "usage",
            "need 1..=3 generators with matching dimension lengths",
        ));
    }
    Ok(GapSpec {
        g0: g0.map(parse_complex).transpose()?.unwrap_or([0.0, 0.0]),
        generators,
        dims,
    })
}
