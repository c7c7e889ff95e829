//! Command-line front end for `dsi-hurst`: simulation, breakpoint detection,
//! drift removal, Hurst estimation and the MSE benchmark.

pub mod config;
pub mod input;

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dsi_hurst::baselines::{analyse, default_scales, FluctuationMethod};
use dsi_hurst::bench::{run_benchmark, MseTable};
use dsi_hurst::detrend::{eliminate_drift, fit_global_drift, fit_piecewise_drift};
use dsi_hurst::dsi::{dsi_pipeline, Boundary, DriftMode, DsiConfig, PartitionSource};
use dsi_hurst::hsssi::{estimate_hsssi_with, HsssiOptions, Reference};
use dsi_hurst::scalegrid::{estimate_scale, segment_quadratic, IntervalCount, Orientation};
use dsi_hurst::sim::{
    cumulative_sum, generate_simple_bm_dsi, replication_rng, FgnGenerator, SimpleBmDsiSpec,
    Synthesis,
};
use dsi_hurst::{DiffOrder, PiecewiseLinearDrift, ScalePartition, TimeSeries};

use input::{parse_series_csv, Column, CsvOptions, Header, TimeColumn};

#[derive(Debug)]
pub struct CliError {
    pub stage: String,
    pub message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} stage: {}", self.stage, self.message)
    }
}

impl std::error::Error for CliError {}

fn fail(stage: &str, message: impl fmt::Display) -> CliError {
    CliError {
        stage: stage.to_string(),
        message: message.to_string(),
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "dsi-hurst",
    version,
    about = "Hurst and scale estimation for DSI and self-similar series"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic series.
    Simulate {
        #[command(subcommand)]
        what: SimulateCommand,
    },
    /// Detect scale-interval breakpoints by piecewise-quadratic segmentation.
    Detect(DetectArgs),
    /// Fit and remove a global or piecewise linear drift.
    Detrend(DetrendArgs),
    /// Estimate the Hurst index.
    Estimate {
        #[command(subcommand)]
        what: EstimateCommand,
    },
    /// Run the Monte Carlo MSE comparison from a key=value config file.
    Benchmark(BenchmarkArgs),
}

#[derive(Debug, Subcommand)]
pub enum SimulateCommand {
    /// Fractional Brownian motion sampled at t = 1..n.
    Fbm(FbmArgs),
    /// Simple Brownian DSI process on [1, lambda^M).
    Dsi(DsiSimArgs),
}

#[derive(Debug, Subcommand)]
pub enum EstimateCommand {
    /// Time-dependent Hurst indices of a DSI series.
    Dsi(EstimateDsiArgs),
    /// Strided variance-ratio estimator for self-similar series.
    Hsssi(HsssiArgs),
    /// Fluctuation analysis.
    Fa(FluctuationArgs),
    /// Detrended fluctuation analysis (order 1).
    Dfa(FluctuationArgs),
    /// Detrending moving average (backward).
    Dma(FluctuationArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Input CSV file.
    pub input: PathBuf,
    /// Time column: index (0-based), header name, `none` for row numbers, or `auto`.
    #[arg(long, default_value = "auto")]
    pub time_col: TimeColumn,
    /// Value column: index (0-based) or header name [default: last column].
    #[arg(long)]
    pub value_col: Option<Column>,
    #[arg(long, value_enum, default_value_t = Header::Auto)]
    pub header: Header,
}

impl InputArgs {
    fn load(&self) -> CliResult<TimeSeries> {
        let opts = CsvOptions {
            time_col: self.time_col.clone(),
            value_col: self.value_col.clone(),
            header: self.header,
        };
        let parsed = parse_series_csv(&self.input, &opts).map_err(|e| fail("input", e))?;
        if parsed.skipped > 0 {
            eprintln!(
                "note: skipped {} row(s) without a valid time and value",
                parsed.skipped
            );
        }
        Ok(parsed.series)
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SynthesisArg {
    Auto,
    Circulant,
    Cholesky,
}

#[derive(Debug, Args)]
pub struct FbmArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub hurst: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = SynthesisArg::Auto)]
    pub synthesis: SynthesisArg,
    /// Output CSV (`t,value`) [default: stdout].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DsiSimArgs {
    #[arg(long)]
    pub hurst: f64,
    #[arg(long, default_value_t = 2.0)]
    pub lambda: f64,
    /// Number of scale intervals M.
    #[arg(long, default_value_t = 4)]
    pub intervals: usize,
    /// Samples per unit time.
    #[arg(long, default_value_t = 64)]
    pub mesh: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Planted drift line `intercept,slope`, one per interval (repeat the flag).
    #[arg(long = "drift", allow_hyphen_values = true)]
    pub drift: Vec<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    /// Interval count M, or `auto` for the penalised choice.
    #[arg(long, default_value = "auto")]
    pub intervals: String,
    /// Penalty weight for `--intervals auto`.
    #[arg(long, default_value_t = 1.0)]
    pub penalty: f64,
    /// Largest M considered by `--intervals auto`.
    #[arg(long, default_value_t = 20)]
    pub max_intervals: usize,
    /// Minimum samples per interval.
    #[arg(long, default_value_t = 4)]
    pub min_len: usize,
}

impl SegmentArgs {
    fn count(&self) -> CliResult<IntervalCount> {
        if self.intervals.eq_ignore_ascii_case("auto") {
            return Ok(IntervalCount::Auto {
                penalty: self.penalty,
                max: self.max_intervals,
            });
        }
        self.intervals
            .parse()
            .map(IntervalCount::Fixed)
            .map_err(|_| {
                fail(
                    "detect",
                    format!(
                        "--intervals expects a count or `auto`, got `{}`",
                        self.intervals
                    ),
                )
            })
    }
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub segment: SegmentArgs,
    /// Breakpoints CSV (`index,a_i`) [default: stdout].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DetrendArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Scale-interval breakpoints for a piecewise drift.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["detect", "global"])]
    pub breakpoints: Option<Vec<f64>>,
    /// Detect breakpoints first, then fit a piecewise drift.
    #[arg(long, conflicts_with = "global")]
    pub detect: bool,
    /// Fit one line over the whole series (the default without breakpoints).
    #[arg(long)]
    pub global: bool,
    #[command(flatten)]
    pub segment: SegmentArgs,
    /// Residual series CSV (`t,value`) [default: stdout].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Drift segments CSV (`start,end,alpha,beta`).
    #[arg(long)]
    pub drift_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DriftModeArg {
    None,
    Global,
    Piecewise,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BoundaryArg {
    Within,
    Cross,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OrientationArg {
    Forward,
    Backward,
}

#[derive(Debug, Args)]
pub struct EstimateDsiArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Scale-interval breakpoints a_0,...,a_M.
    #[arg(
        long,
        value_delimiter = ',',
        conflicts_with = "detect",
        required_unless_present = "detect"
    )]
    pub breakpoints: Option<Vec<f64>>,
    /// Detect breakpoints instead of supplying them.
    #[arg(long)]
    pub detect: bool,
    #[command(flatten)]
    pub segment: SegmentArgs,
    /// Grid points per scale interval.
    #[arg(long, default_value_t = 64)]
    pub q: usize,
    /// Difference order r (1 or 2).
    #[arg(long, default_value_t = 1)]
    pub order: usize,
    #[arg(long, value_enum, default_value_t = DriftModeArg::Piecewise)]
    pub drift_mode: DriftModeArg,
    #[arg(long, value_enum, default_value_t = BoundaryArg::Within)]
    pub boundary: BoundaryArg,
    #[arg(long, value_enum, default_value_t = OrientationArg::Forward)]
    pub orientation: OrientationArg,
    /// Use each pair's own scale ratio instead of their mean.
    #[arg(long)]
    pub per_pair_lambda: bool,
    /// Per-interval CSV (`k,S2,mu_hat,H`) [default: stdout].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ReferenceArg {
    Matched,
    All,
}

#[derive(Debug, Args)]
pub struct HsssiArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Difference order r (1 or 2).
    #[arg(long, default_value_t = 2)]
    pub order: usize,
    /// Skip global least-squares detrending.
    #[arg(long)]
    pub no_detrend: bool,
    /// Unit-lag terms in the reference variance.
    #[arg(long, value_enum, default_value_t = ReferenceArg::Matched)]
    pub reference: ReferenceArg,
    /// Per-stride CSV (`k,ratio,H_k`) [default: stdout].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum InputKind {
    /// Input is a level series (e.g. a price or fBm path); its differences are analysed.
    Levels,
    /// Input already holds increments.
    Increments,
}

#[derive(Debug, Args)]
pub struct FluctuationArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Scales [default: 12 geometric points from 8 to N/4].
    #[arg(long, value_delimiter = ',')]
    pub scales: Option<Vec<usize>>,
    #[arg(long, value_enum, default_value_t = InputKind::Levels)]
    pub kind: InputKind,
    /// Curve CSV (`scale,F`) [default: stdout].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// Flat key=value config file.
    #[arg(long)]
    pub config: PathBuf,
    /// MSE table CSV (`method,H,mse,bias,variance,reps`) [default: stdout].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Gnuplot-ready file: one `H mse` block per method.
    #[arg(long)]
    pub plot_out: Option<PathBuf>,
}

/// CSV text built in memory, written to a file or stdout.
struct Table(String);

impl Table {
    fn new(header: &str) -> Self {
        Table(format!("{header}\n"))
    }

    fn row(&mut self, fields: &[String]) {
        self.0.push_str(&fields.join(","));
        self.0.push('\n');
    }

    fn emit(&self, out: Option<&Path>) -> CliResult<()> {
        write_text(out, &self.0)
    }
}

fn write_text(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| fail("output", format!("cannot write {}: {e}", path.display()))),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| fail("output", e)),
    }
}

/// Shortest decimal that parses back to the same `f64`.
fn num(v: f64) -> String {
    format!("{v}")
}

fn series_table(x: &TimeSeries) -> Table {
    let mut t = Table::new("t,value");
    for (time, v) in x.times().iter().zip(x.values()) {
        t.row(&[num(*time), num(*v)]);
    }
    t
}

fn order_of(r: usize, stage: &str) -> CliResult<DiffOrder> {
    DiffOrder::new(r).map_err(|e| fail(stage, e))
}

fn partition_of(breakpoints: &[f64], stage: &str) -> CliResult<ScalePartition> {
    ScalePartition::new(breakpoints.to_vec()).map_err(|e| fail(stage, e))
}

fn simulate_fbm(args: &FbmArgs) -> CliResult<()> {
    let synthesis = match args.synthesis {
        SynthesisArg::Auto => Synthesis::Auto,
        SynthesisArg::Circulant => Synthesis::Circulant,
        SynthesisArg::Cholesky => Synthesis::Cholesky,
    };
    let generator = FgnGenerator::with_synthesis(args.n, args.hurst, args.sigma, synthesis)
        .map_err(|e| fail("simulate", e))?;
    let path = cumulative_sum(&generator.sample(&mut replication_rng(args.seed, 0)));
    let x = TimeSeries::from_values(path).map_err(|e| fail("simulate", e))?;
    series_table(&x).emit(args.out.as_deref())
}

fn parse_line(s: &str) -> CliResult<(f64, f64)> {
    let bad = || {
        fail(
            "simulate",
            format!("--drift expects `intercept,slope`, got `{s}`"),
        )
    };
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    Ok((
        a.trim().parse().map_err(|_| bad())?,
        b.trim().parse().map_err(|_| bad())?,
    ))
}

fn simulate_dsi(args: &DsiSimArgs) -> CliResult<()> {
    let mut spec = SimpleBmDsiSpec {
        hurst: args.hurst,
        lambda: args.lambda,
        intervals: args.intervals,
        mesh: args.mesh,
        drift: None,
        seed: args.seed,
    };
    if !args.drift.is_empty() {
        let lines = args
            .drift
            .iter()
            .map(|s| parse_line(s))
            .collect::<CliResult<Vec<_>>>()?;
        let partition = spec.partition().map_err(|e| fail("simulate", e))?;
        spec.drift = Some(
            PiecewiseLinearDrift::on_partition(&partition, &lines)
                .map_err(|e| fail("simulate", e))?,
        );
    }
    let x = generate_simple_bm_dsi(&spec).map_err(|e| fail("simulate", e))?;
    series_table(&x).emit(args.out.as_deref())
}

fn breakpoint_table(p: &ScalePartition) -> Table {
    let mut t = Table::new("index,a_i");
    for (i, a) in p.breakpoints().iter().enumerate() {
        t.row(&[i.to_string(), num(*a)]);
    }
    t
}

fn fmt4(xs: &[f64]) -> String {
    xs.iter()
        .map(|v| format!("{v:.4}"))
        .collect::<Vec<_>>()
        .join(", ")
}

fn detect(args: &DetectArgs) -> CliResult<()> {
    let x = args.input.load()?;
    let seg = segment_quadratic(&x, args.segment.count()?, args.segment.min_len)
        .map_err(|e| fail("detect", e))?;
    breakpoint_table(&seg.partition).emit(args.out.as_deref())?;
    let mut summary = format!("# intervals: {}\n", seg.partition.num_intervals());
    if seg.partition.num_intervals() >= 2 {
        for (name, o) in [
            ("forward", Orientation::Forward),
            ("backward", Orientation::Backward),
        ] {
            let s = estimate_scale(&seg.partition, o).map_err(|e| fail("scale", e))?;
            summary += &format!(
                "# lambda ({name}): {:.4}  ratios: {}\n",
                s.mean_ratio,
                fmt4(&s.per_pair_ratios)
            );
        }
    }
    write_text(None, &summary)
}

fn drift_table(d: &PiecewiseLinearDrift) -> Table {
    let mut t = Table::new("start,end,alpha,beta");
    for s in d.segments() {
        t.row(&[num(s.start), num(s.end), num(s.intercept), num(s.slope)]);
    }
    t
}

fn detrend(args: &DetrendArgs) -> CliResult<()> {
    let x = args.input.load()?;
    let drift = if let Some(bp) = &args.breakpoints {
        let p = partition_of(bp, "detrend")?;
        fit_piecewise_drift(&x, &p)
    } else if args.detect {
        let p = segment_quadratic(&x, args.segment.count()?, args.segment.min_len)
            .map_err(|e| fail("detect", e))?
            .partition;
        fit_piecewise_drift(&x, &p)
    } else {
        fit_global_drift(&x)
    }
    .map_err(|e| fail("detrend", e))?;
    let span = drift.segments();
    let covered = x.restrict(span[0].start, span[span.len() - 1].end);
    let residual = eliminate_drift(&covered, &drift).map_err(|e| fail("detrend", e))?;
    series_table(&residual).emit(args.out.as_deref())?;
    if let Some(path) = &args.drift_out {
        drift_table(&drift).emit(Some(path))?;
    }
    Ok(())
}

fn estimate_dsi(args: &EstimateDsiArgs) -> CliResult<()> {
    let x = args.input.load()?;
    let partition = match &args.breakpoints {
        Some(bp) => PartitionSource::Supplied(partition_of(bp, "partition")?),
        None => PartitionSource::Detect {
            count: args.segment.count()?,
            min_len: args.segment.min_len,
        },
    };
    let cfg = DsiConfig {
        order: order_of(args.order, "estimate")?,
        drift_mode: match args.drift_mode {
            DriftModeArg::None => DriftMode::None,
            DriftModeArg::Global => DriftMode::Global,
            DriftModeArg::Piecewise => DriftMode::Piecewise,
        },
        boundary: match args.boundary {
            BoundaryArg::Within => Boundary::Within,
            BoundaryArg::Cross => Boundary::Cross,
        },
        orientation: match args.orientation {
            OrientationArg::Forward => Orientation::Forward,
            OrientationArg::Backward => Orientation::Backward,
        },
        per_pair_lambda: args.per_pair_lambda,
        ..DsiConfig::new(partition, args.q)
    };
    let report = dsi_pipeline(&x, &cfg).map_err(|e| fail(&e.stage.to_string(), e.source))?;
    let est = &report.estimate;

    let mut t = Table::new("k,S2,mu_hat,H");
    for (k, s2) in est.interval_variances.iter().enumerate() {
        let (mu, h) = if k == 0 {
            (String::new(), String::new())
        } else {
            (num(est.mu_hats[k - 1]), num(est.hurst_per_interval[k - 1]))
        };
        t.row(&[(k + 1).to_string(), num(*s2), mu, h]);
    }
    t.emit(args.out.as_deref())?;

    let summary = format!(
        "# breakpoints: {}\n# lambda forward: {:.4}  backward: {:.4}  used: {:.4}\n# H_i: {}\n# mean H: {:.4}  H from mean mu: {:.4}\n",
        report.partition.breakpoints().iter().map(|a| num(*a)).collect::<Vec<_>>().join(", "),
        report.scale_forward.mean_ratio,
        report.scale_backward.mean_ratio,
        est.lambda_used,
        fmt4(&est.hurst_per_interval),
        est.hurst_mean,
        est.hurst_from_mu_mean,
    );
    write_text(None, &summary)
}

fn estimate_hsssi(args: &HsssiArgs) -> CliResult<()> {
    let x = args.input.load()?;
    let opts = HsssiOptions {
        order: order_of(args.order, "estimate")?,
        detrend: !args.no_detrend,
        reference: match args.reference {
            ReferenceArg::Matched => Reference::Matched,
            ReferenceArg::All => Reference::AllTerms,
        },
    };
    let est = estimate_hsssi_with(&x, opts).map_err(|e| fail("estimate", e))?;
    let mut t = Table::new("k,ratio,H_k");
    for ((k, ratio), h) in est.strides().zip(&est.ratios).zip(&est.per_k_hurst) {
        t.row(&[k.to_string(), num(*ratio), num(*h)]);
    }
    t.emit(args.out.as_deref())?;
    write_text(
        None,
        &format!("# K*: {}  H': {:.4}\n", est.k_star, est.hurst),
    )
}

fn estimate_fluctuation(method: FluctuationMethod, args: &FluctuationArgs) -> CliResult<()> {
    let x = args.input.load()?;
    let increments: Vec<f64> = match args.kind {
        InputKind::Levels => x.values().windows(2).map(|w| w[1] - w[0]).collect(),
        InputKind::Increments => x.values().to_vec(),
    };
    let scales = args
        .scales
        .clone()
        .unwrap_or_else(|| default_scales(increments.len()));
    let curve = analyse(method, &increments, &scales).map_err(|e| fail("estimate", e))?;
    let mut t = Table::new("scale,F");
    for (s, f) in curve.scales.iter().zip(&curve.fluctuations) {
        t.row(&[s.to_string(), num(*f)]);
    }
    t.emit(args.out.as_deref())?;
    write_text(
        None,
        &format!(
            "# {method} slope: {}  ({:.4})\n",
            num(curve.hurst),
            curve.hurst
        ),
    )
}

fn mse_table(table: &MseTable) -> Table {
    let mut t = Table::new("method,H,mse,bias,variance,reps");
    for r in &table.rows {
        t.row(&[
            r.method.to_string(),
            num(r.hurst),
            num(r.mse),
            num(r.bias),
            num(r.variance),
            r.reps.to_string(),
        ]);
    }
    t
}

fn plot_text(table: &MseTable) -> String {
    let mut out = String::from("# method H mse\n");
    let mut methods: Vec<_> = Vec::new();
    for r in &table.rows {
        if !methods.contains(&r.method) {
            methods.push(r.method);
        }
    }
    for m in methods {
        out += &format!("\n\n# {m}\n");
        for r in table.rows.iter().filter(|r| r.method == m) {
            out += &format!("{m} {} {}\n", num(r.hurst), num(r.mse));
        }
    }
    out
}

fn benchmark(args: &BenchmarkArgs) -> CliResult<()> {
    let text = fs::read_to_string(&args.config).map_err(|e| {
        fail(
            "config",
            format!("cannot read {}: {e}", args.config.display()),
        )
    })?;
    let cfg = config::parse_bench_config(&text).map_err(|e| fail("config", e))?;
    let table = run_benchmark(&cfg).map_err(|e| fail("benchmark", e))?;
    mse_table(&table).emit(args.out.as_deref())?;
    if let Some(path) = &args.plot_out {
        write_text(Some(path), &plot_text(&table))?;
    }
    Ok(())
}

pub fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Simulate { what } => match what {
            SimulateCommand::Fbm(a) => simulate_fbm(a),
            SimulateCommand::Dsi(a) => simulate_dsi(a),
        },
        Command::Detect(a) => detect(a),
        Command::Detrend(a) => detrend(a),
        Command::Estimate { what } => match what {
            EstimateCommand::Dsi(a) => estimate_dsi(a),
            EstimateCommand::Hsssi(a) => estimate_hsssi(a),
            EstimateCommand::Fa(a) => estimate_fluctuation(FluctuationMethod::Fa, a),
            EstimateCommand::Dfa(a) => estimate_fluctuation(FluctuationMethod::Dfa, a),
            EstimateCommand::Dma(a) => estimate_fluctuation(FluctuationMethod::Dma, a),
        },
        Command::Benchmark(a) => benchmark(a),
    }
}

/// Parse `args` (program name first), run the command and map the outcome to
/// an exit code: 0 success, 1 runtime or data error, 2 usage error.
pub fn run_pipeline<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
