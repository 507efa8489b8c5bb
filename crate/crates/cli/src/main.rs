//! `cartan`: flag curvature of the rotating Kepler Cartan metrics from the
//! command line.
//!
//! Exit status is 0 on success, 1 when the inputs fall outside the domain of
//! the computation (or a verifier reports a failure), and 2 on malformed
//! arguments.

// `!(x >= 0.0)` is used on purpose so that NaN lands on the error path.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod range;

use std::path::PathBuf;
use std::process::ExitCode;

use cartan_core::convexity::verify_convexity;
use cartan_core::curvature::{flag_curvature, flag_curvature_closed_form, flag_curvature_value};
use cartan_core::identities::{run_identities, DEFAULT_SEED};
use cartan_core::scan::{
    emit, fmt_f64, grid_scan, render_json, slice_scan, summarize, write_output, Destination, Format, GridSpec, ScanRow,
    SliceSpec, DEFAULT_EXCLUDE_BAND,
};
use cartan_core::{Error, MetricParams, PhasePoint};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use range::Range;

#[derive(Parser, Debug)]
#[command(
    name = "cartan",
    version,
    about = "Flag curvature of the rotating Kepler problem as a Cartan surface"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Flag curvature at a single phase point (x, y, r, t).
    Point(PointArgs),
    /// K along the covector (r, t) = (0, x) over a range of x.
    Slice(SliceArgs),
    /// K on an (x, φ) lattice with unit covector (r, t) = (sin φ, cos φ).
    Grid(GridArgs),
    /// Sample the level curve Σ_p and check the convexity form is positive.
    VerifyConvexity(ConvexityArgs),
    /// Run the seeded structural-identity suite and print a pass/fail table.
    VerifyIdentities(IdentityArgs),
    /// Evaluate the closed-form curvature along (0, x) at rotation rate 1.
    ClosedForm(ClosedFormArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum OutputFormat {
    Csv,
    Json,
}

impl From<OutputFormat> for Format {
    fn from(f: OutputFormat) -> Self {
        match f {
            OutputFormat::Csv => Format::Csv,
            OutputFormat::Json => Format::Json,
        }
    }
}

#[derive(Args, Debug)]
struct Output {
    #[arg(long, value_enum, default_value = "csv")]
    format: OutputFormat,
    /// Write to this file instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Output {
    fn destination(&self) -> Destination {
        self.out.clone().map_or(Destination::Stdout, Destination::File)
    }
}

#[derive(Args, Debug)]
struct Energy {
    /// Rotation rate of the frame.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    a: f64,
    /// Energy level, H = -c.
    #[arg(long, allow_hyphen_values = true)]
    c: f64,
}

impl Energy {
    fn params(&self) -> MetricParams {
        MetricParams::new(self.a, self.c)
    }
}

#[derive(Args, Debug)]
struct PointArgs {
    #[command(flatten)]
    energy: Energy,
    #[arg(long, allow_hyphen_values = true)]
    x: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    y: f64,
    #[arg(long, allow_hyphen_values = true)]
    r: f64,
    #[arg(long, allow_hyphen_values = true)]
    t: f64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct SliceArgs {
    #[command(flatten)]
    energy: Energy,
    /// Range of x as `lo:hi`.
    #[arg(long, default_value = "-10:10", allow_hyphen_values = true)]
    x_range: Range,
    /// Number of x samples, endpoints included.
    #[arg(long, default_value_t = 2048)]
    n: usize,
    /// Skip points with |x| below this.
    #[arg(long, default_value_t = DEFAULT_EXCLUDE_BAND)]
    exclude_band: f64,
    /// Include every sample in JSON output, not just the summary.
    #[arg(long)]
    samples: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct GridArgs {
    #[command(flatten)]
    energy: Energy,
    /// Range of x as `lo:hi`.
    #[arg(long, default_value = "-3:3", allow_hyphen_values = true)]
    x_range: Range,
    /// Range of φ as `lo:hi`; multiples of pi may be written as `2pi`.
    #[arg(long, default_value = "0:2pi", allow_hyphen_values = true)]
    phi_range: Range,
    #[arg(long, default_value_t = 256)]
    nx: usize,
    #[arg(long, default_value_t = 256)]
    nphi: usize,
    /// Skip points with |x| below this.
    #[arg(long, default_value_t = DEFAULT_EXCLUDE_BAND)]
    exclude_band: f64,
    /// Include every sample in JSON output, not just the summary.
    #[arg(long)]
    samples: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct ConvexityArgs {
    #[command(flatten)]
    energy: Energy,
    /// Momentum norm |p|.
    #[arg(long, allow_hyphen_values = true)]
    x: f64,
    /// Momentum angle.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    y: f64,
    /// Number of sampled directions.
    #[arg(long, default_value_t = 720)]
    n: usize,
    #[arg(long, value_enum, default_value = "json")]
    format: OutputFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct IdentityArgs {
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct ClosedFormArgs {
    #[arg(long, allow_hyphen_values = true)]
    c: f64,
    #[arg(long, allow_hyphen_values = true)]
    x: f64,
    #[command(flatten)]
    output: Output,
}

/// Ran to completion, but a verifier found a violation.
struct Failed;

type Outcome = Result<Result<(), Failed>, Error>;

fn point(args: &PointArgs) -> Outcome {
    let params = args.energy.params();
    let pt = PhasePoint::new(args.x, args.y, args.r, args.t);
    let sample = flag_curvature(&params, &pt);
    if !sample.is_ok() {
        // surface the typed error rather than a skipped row
        flag_curvature_value(&params, &pt)?;
    }
    let row = ScanRow { phi: None, sample };
    let spec = json!({ "a": args.energy.a, "c": args.energy.c, "x": args.x, "y": args.y, "r": args.r, "t": args.t });
    emit(
        std::slice::from_ref(&row),
        summarize(std::slice::from_ref(&row)).as_ref(),
        &spec,
        args.output.format.into(),
        true,
        &args.output.destination(),
    )?;
    Ok(Ok(()))
}

fn slice(args: &SliceArgs) -> Outcome {
    let spec = SliceSpec {
        x_min: args.x_range.lo,
        x_max: args.x_range.hi,
        n: args.n,
        c: args.energy.c,
        a: args.energy.a,
        exclude_band: args.exclude_band,
    };
    let rows = slice_scan(&spec)?;
    let summary = summarize(&rows);
    emit(
        &rows,
        summary.as_ref(),
        &spec,
        args.output.format.into(),
        args.samples,
        &args.output.destination(),
    )?;
    Ok(Ok(()))
}

fn grid(args: &GridArgs) -> Outcome {
    let spec = GridSpec {
        x_min: args.x_range.lo,
        x_max: args.x_range.hi,
        nx: args.nx,
        phi_min: args.phi_range.lo,
        phi_max: args.phi_range.hi,
        nphi: args.nphi,
        c: args.energy.c,
        a: args.energy.a,
        exclude_band: args.exclude_band,
    };
    let (rows, summary) = grid_scan(&spec)?;
    emit(
        &rows,
        Some(&summary),
        &spec,
        args.output.format.into(),
        args.samples,
        &args.output.destination(),
    )?;
    Ok(Ok(()))
}

fn convexity(args: &ConvexityArgs) -> Outcome {
    let params = args.energy.params();
    params.validate()?;
    if !(args.x >= 0.0) {
        return Err(Error::Argument(format!("|p| must be non-negative, got {}", args.x)));
    }
    let p = [args.x * args.y.cos(), args.x * args.y.sin()];
    let half_offset = 0.5 * (0.5 * args.x * args.x + params.c);
    let report = verify_convexity(p, half_offset, params.a, args.n)?;
    let text = match args.format {
        OutputFormat::Json => render_json(&serde_json::to_value(&report).expect("report serializes")),
        OutputFormat::Csv => {
            let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
            let verdict = match report.verdict {
                Some(v) => serde_json::to_value(v)
                    .expect("verdict serializes")
                    .as_str()
                    .unwrap_or("")
                    .to_owned(),
                None => String::new(),
            };
            format!(
                "n,min_form,argmin_direction,verdict\n{},{},{},{}\n",
                report.n,
                opt(report.min_form),
                opt(report.argmin_direction),
                verdict
            )
        }
    };
    write_output(&text, &args.out.clone().map_or(Destination::Stdout, Destination::File))?;
    Ok(if report.failure.is_some() { Err(Failed) } else { Ok(()) })
}

fn identities(args: &IdentityArgs) -> Outcome {
    let outcomes = run_identities(args.seed);
    let all = outcomes.iter().all(|o| o.passed);
    let text = match args.output.format {
        OutputFormat::Json => render_json(&json!({
            "seed": args.seed,
            "passed": all,
            "checks": serde_json::to_value(&outcomes).expect("outcomes serialize"),
        })),
        OutputFormat::Csv => {
            let mut out = String::from("check,result,samples,worst,tolerance\n");
            for o in &outcomes {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    o.name,
                    if o.passed { "pass" } else { "FAIL" },
                    o.samples,
                    fmt_f64(o.worst),
                    fmt_f64(o.tolerance)
                ));
            }
            out
        }
    };
    write_output(&text, &args.output.destination())?;
    Ok(if all { Ok(()) } else { Err(Failed) })
}

fn closed_form(args: &ClosedFormArgs) -> Outcome {
    let params = MetricParams::new(1.0, args.c);
    params.validate()?;
    let k = flag_curvature_closed_form(args.c, args.x)?;
    let text = match args.output.format {
        OutputFormat::Json => render_json(&json!({ "c": args.c, "x": args.x, "K": k })),
        OutputFormat::Csv => format!("c,x,K\n{},{},{}\n", fmt_f64(args.c), fmt_f64(args.x), fmt_f64(k)),
    };
    write_output(&text, &args.output.destination())?;
    Ok(Ok(()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        // help and version exit 0, usage errors exit 2
        Err(err) => err.exit(),
    };
    let outcome = match &cli.command {
        Command::Point(args) => point(args),
        Command::Slice(args) => slice(args),
        Command::Grid(args) => grid(args),
        Command::VerifyConvexity(args) => convexity(args),
        Command::VerifyIdentities(args) => identities(args),
        Command::ClosedForm(args) => closed_form(args),
    };
    match outcome {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(Failed)) => ExitCode::from(1),
        Err(err @ Error::Argument(_)) => {
            eprintln!("cartan: {err}");
            ExitCode::from(2)
        }
        Err(err) => {
            eprintln!("cartan: {err}");
            ExitCode::from(1)
        }
    }
}
