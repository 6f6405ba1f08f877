//! Command-line front end: `estimate`, `synth`, `score` and `bench`.
//!
//! Exit codes: 0 success, 1 usage or parameter error, 2 data error (unreadable
//! or malformed input), 3 numerical failure.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::betaprime::GenBetaPrime;
use crate::error::{Error, Result};
use crate::io::{
    format_sig, read_counts, read_kernel_matrix, read_results, read_truth, write_counts, write_results, write_truth,
    CountTable, QoiColumns, ResultRow, TruthRow,
};
use crate::kernel::{wendland_kernel, BinGrid, KernelMatrix};
use crate::permanental::PermanentalOptions;
use crate::ratio::{
    qoi_posterior, ratio_estimation_permproc, zbetaprime, ConjugatePriors, GammaPrior, QoiModel, QoiPosterior,
    RatioOptions, RatioPosterior,
};
use crate::synthetic::{toy_qoi_problem, toy_ratio_problem};
use crate::uq::{crps_beta_prime, hpd_beta_prime};

/// Grid points used for per-bin HPD sets.
pub const HPD_GRID_POINTS: usize = 2001;
/// Grid points used for per-bin CRPS.
pub const CRPS_GRID_POINTS: usize = 20001;

#[derive(Debug, Parser)]
#[command(name = "poisratio", version, about = "Posterior estimation for ratios of binned Poisson intensities")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate per-bin ratio posteriors from numerator and denominator counts.
    #[command(after_help = RESULTS_HELP)]
    Estimate(Box<EstimateArgs>),
    /// Write toy count data and ground truth.
    Synth(SynthArgs),
    /// Score a results table against ground truth.
    Score(ScoreArgs),
    /// Time the ratio pipeline on toy data of increasing size.
    Bench(BenchArgs),
}

const RESULTS_HELP: &str = "\
Count files: CSV with header bin_center,real_1,...,real_R; one row per bin; NaN marks a missing count.

Results columns, in order:
  bin, bin_center, map_ratio, alpha_num, alpha_denom, p, q, hpd_lower, hpd_upper, status
and, with a forward model (--m, --z0, --p):
  qoi_shift, qoi_p, qoi_scale, qoi_map, qoi_hpd_lower, qoi_hpd_upper
The ratio law is BP(alpha_num, alpha_denom, p, q); the quantity of interest is
qoi_shift + BP(alpha_num, alpha_denom, qoi_p, qoi_scale). status is ok, not_converged or invalid.

A --config file holds key=value lines using the long flag names (e.g. support-width=0.5);
flags given on the command line win.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Estimator {
    Permanental,
    Pointwise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelKind {
    Wendland,
    Matrix,
}

/// Run parameters that may come from flags or from a config file.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    #[arg(long, value_enum)]
    pub estimator: Option<Estimator>,
    #[arg(long, value_enum)]
    pub kernel: Option<KernelKind>,
    /// Wendland support width ρ.
    #[arg(long)]
    pub support_width: Option<f64>,
    /// Wendland marginal variance σ².
    #[arg(long)]
    pub variance: Option<f64>,
    /// Headerless d×d kernel matrix for `--kernel matrix`.
    #[arg(long)]
    pub kernel_file: Option<PathBuf>,
    /// Separate kernel for the denominator process.
    #[arg(long)]
    pub kernel_file_denom: Option<PathBuf>,
    #[arg(long)]
    pub c1: Option<f64>,
    #[arg(long)]
    pub c2: Option<f64>,
    #[arg(long)]
    pub g1: Option<f64>,
    #[arg(long)]
    pub g2: Option<f64>,
    /// Gamma prior shape for the numerator (pointwise estimator).
    #[arg(long)]
    pub a1: Option<f64>,
    #[arg(long)]
    pub b1: Option<f64>,
    #[arg(long)]
    pub a2: Option<f64>,
    #[arg(long)]
    pub b2: Option<f64>,
    #[arg(long)]
    pub maxiter: Option<usize>,
    /// Forward model Z = (mT + z0)^p; all three are needed.
    #[arg(long)]
    pub m: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub z0: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub hpd_alpha: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

macro_rules! merge_fields {
    ($base:expr, $over:expr, $($f:ident),*) => {
        ConfigArgs { $($f: $over.$f.or($base.$f)),* }
    };
}

impl ConfigArgs {
    /// Fields set in `over` replace those in `self`.
    pub fn merge(self, over: ConfigArgs) -> ConfigArgs {
        merge_fields!(
            self,
            over,
            estimator,
            kernel,
            support_width,
            variance,
            kernel_file,
            kernel_file_denom,
            c1,
            c2,
            g1,
            g2,
            a1,
            b1,
            a2,
            b2,
            maxiter,
            m,
            z0,
            p,
            hpd_alpha,
            seed
        )
    }
}

#[derive(Debug, Parser)]
#[command(no_binary_name = true)]
struct ConfigLine {
    #[command(flatten)]
    args: ConfigArgs,
}

/// Parses `key=value` lines; `#` starts a comment. Keys are long flag names,
/// with `_` accepted for `-`.
pub fn parse_config(text: &str) -> Result<ConfigArgs> {
    let mut out = ConfigArgs::default();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse { line: n + 1, msg: format!("expected key=value, got {line:?}") })?;
        let flag = format!("--{}={}", key.trim().replace('_', "-"), value.trim());
        let parsed = ConfigLine::try_parse_from([flag])
            .map_err(|e| Error::Parse { line: n + 1, msg: e.kind().to_string() + ": " + line })?;
        out = out.merge(parsed.args);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    Wendland { support_width: f64, variance: f64 },
    Matrix { file: PathBuf, denom_file: Option<PathBuf> },
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub estimator: Estimator,
    pub kernel: KernelSpec,
    pub c1: f64,
    pub c2: f64,
    pub g1: f64,
    pub g2: f64,
    pub priors: ConjugatePriors,
    pub maxiter: usize,
    pub qoi: Option<QoiModel>,
    pub hpd_alpha: f64,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            estimator: Estimator::Permanental,
            kernel: KernelSpec::Wendland { support_width: 0.75, variance: 1.0 },
            c1: 1.0,
            c2: 1.0,
            g1: 1.0,
            g2: 1.0,
            priors: ConjugatePriors::default(),
            maxiter: 300,
            qoi: None,
            hpd_alpha: 0.95,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn from_args(args: &ConfigArgs) -> Result<Self> {
        let d = Self::default();
        let kernel = match args.kernel.unwrap_or(if args.kernel_file.is_some() {
            KernelKind::Matrix
        } else {
            KernelKind::Wendland
        }) {
            KernelKind::Wendland => KernelSpec::Wendland {
                support_width: args.support_width.unwrap_or(0.75),
                variance: args.variance.unwrap_or(1.0),
            },
            KernelKind::Matrix => KernelSpec::Matrix {
                file: args
                    .kernel_file
                    .clone()
                    .ok_or_else(|| Error::Parameter("--kernel matrix needs --kernel-file".into()))?,
                denom_file: args.kernel_file_denom.clone(),
            },
        };
        let qoi = match (args.m, args.z0, args.p) {
            (None, None, None) => None,
            (Some(m), Some(z0), Some(p)) => {
                let model = QoiModel { m, z0, p };
                model.validate()?;
                Some(model)
            }
            _ => return Err(Error::Parameter("a forward model needs all of --m, --z0 and --p".into())),
        };
        let prior = |a: Option<f64>, b: Option<f64>, base: GammaPrior| GammaPrior {
            shape: a.unwrap_or(base.shape),
            rate: b.unwrap_or(base.rate),
        };
        Ok(Self {
            estimator: args.estimator.unwrap_or(d.estimator),
            kernel,
            c1: args.c1.unwrap_or(d.c1),
            c2: args.c2.unwrap_or(d.c2),
            g1: args.g1.unwrap_or(d.g1),
            g2: args.g2.unwrap_or(d.g2),
            priors: ConjugatePriors {
                numerator: prior(args.a1, args.b1, d.priors.numerator),
                denominator: prior(args.a2, args.b2, d.priors.denominator),
            },
            maxiter: args.maxiter.unwrap_or(d.maxiter),
            qoi,
            hpd_alpha: args.hpd_alpha.unwrap_or(d.hpd_alpha),
            seed: args.seed.unwrap_or(d.seed),
        })
    }

    fn ratio_options(&self) -> RatioOptions {
        RatioOptions {
            numerator: PermanentalOptions { gamma: self.g1, c: self.c1, maxiter: self.maxiter, ..Default::default() },
            denominator: PermanentalOptions { gamma: self.g2, c: self.c2, maxiter: self.maxiter, ..Default::default() },
        }
    }
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Numerator count file.
    pub num: PathBuf,
    /// Denominator count file.
    pub denom: PathBuf,
    /// key=value file; flags win over it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Results CSV (stdout when omitted).
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub params: ConfigArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Problem {
    Ratio,
    Qoi,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value = "ratio")]
    pub problem: Problem,
    #[arg(long, default_value_t = 50)]
    pub bins: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Writes `<prefix>_num.csv`, `<prefix>_denom.csv` and `<prefix>_truth.csv`.
    #[arg(long)]
    pub out_prefix: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    pub results: PathBuf,
    pub truth: PathBuf,
    /// Score the ratio or the quantity of interest.
    #[arg(long, value_enum, default_value = "ratio")]
    pub target: Problem,
    /// Per-bin scores CSV.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Comma-separated bin counts.
    #[arg(long, value_delimiter = ',', default_values_t = [10, 22, 46, 100, 215, 464, 1000])]
    pub bins: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.75)]
    pub support_width: f64,
    #[arg(long, default_value_t = 1.0)]
    pub variance: f64,
    /// Timing table CSV (stdout when omitted).
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

/// An error tagged with its process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub error: Error,
}

impl From<Error> for Failure {
    fn from(error: Error) -> Self {
        let code = match error {
            Error::Parameter(_) | Error::UnsupportedModel(_) | Error::Domain(_) => 1,
            Error::Shape(_) | Error::Parse { .. } | Error::Io(_) => 2,
            Error::Numerical(_) | Error::DegenerateKernel(_) => 3,
        };
        Self { code, error }
    }
}

fn data_error(path: &Path) -> impl FnOnce(Error) -> Failure + '_ {
    move |e| Failure {
        code: match e {
            Error::Numerical(_) | Error::DegenerateKernel(_) => 3,
            _ => 2,
        },
        error: match e {
            Error::Io(io) => Error::Io(io::Error::new(io.kind(), format!("{}: {io}", path.display()))),
            Error::Parse { line, msg } => Error::Parse { line, msg: format!("{}: {msg}", path.display()) },
            Error::DegenerateKernel(m) => Error::DegenerateKernel(format!("{}: {m}", path.display())),
            Error::Numerical(m) => Error::Numerical(format!("{}: {m}", path.display())),
            other => Error::Parameter(format!("{}: {other}", path.display())),
        },
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let outcome = match cli.command {
        Command::Estimate(a) => cmd_estimate(&a),
        Command::Synth(a) => cmd_synth(&a),
        Command::Score(a) => cmd_score(&a),
        Command::Bench(a) => cmd_bench(&a),
    };
    match outcome {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.error);
            f.code
        }
    }
}

fn output(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| Failure::from(Error::from(e)))?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn resolve_config(a: &EstimateArgs) -> CliResult<RunConfig> {
    let mut params = ConfigArgs::default();
    if let Some(path) = &a.config {
        let text = fs::read_to_string(path).map_err(|e| data_error(path)(e.into()))?;
        params = parse_config(&text).map_err(|e| Failure { code: 1, error: e })?;
    }
    Ok(RunConfig::from_args(&params.merge(a.params.clone()))?)
}

fn cmd_estimate(a: &EstimateArgs) -> CliResult<()> {
    let cfg = resolve_config(a)?;
    let num = read_counts(&a.num).map_err(data_error(&a.num))?;
    let den = read_counts(&a.denom).map_err(data_error(&a.denom))?;
    let rows = estimate(&cfg, &num, &den)?;
    if rows.iter().any(|r| r.status == "not_converged") {
        eprintln!("warning: optimizer did not converge; see the status column");
    }
    if rows.iter().any(|r| r.status == "invalid") {
        eprintln!("warning: some bins have no valid posterior; see the status column");
    }
    write_results(output(a.out.as_deref())?, &rows)?;
    Ok(())
}

fn check_centers(num: &[f64], den: &[f64]) -> Result<()> {
    if num.len() != den.len() {
        return Err(Error::Shape(format!("numerator has {} bins, denominator {}", num.len(), den.len())));
    }
    for (i, (a, b)) in num.iter().zip(den).enumerate() {
        if (a - b).abs() > 1e-9 * (1.0 + a.abs()) {
            return Err(Error::Shape(format!("bin {i}: centers differ ({a} vs {b})")));
        }
    }
    Ok(())
}

fn load_kernels(cfg: &RunConfig, centers: &[f64]) -> CliResult<(KernelMatrix, Option<KernelMatrix>)> {
    match &cfg.kernel {
        KernelSpec::Wendland { support_width, variance } => {
            let span = centers.iter().copied().fold(f64::NEG_INFINITY, f64::max)
                - centers.iter().copied().fold(f64::INFINITY, f64::min);
            let width = if centers.len() > 1 && span > 0.0 { span / (centers.len() - 1) as f64 } else { 1.0 };
            let grid = BinGrid::from_centers_1d(centers, width)?;
            Ok((wendland_kernel(&grid, *support_width, *variance)?, None))
        }
        KernelSpec::Matrix { file, denom_file } => {
            let k = read_kernel_matrix(file).map_err(data_error(file))?;
            let kd = match denom_file {
                Some(f) => Some(read_kernel_matrix(f).map_err(data_error(f))?),
                None => None,
            };
            Ok((k, kd))
        }
    }
}

/// Runs the configured estimator and tabulates per-bin results.
pub fn estimate(cfg: &RunConfig, num: &CountTable, den: &CountTable) -> CliResult<Vec<ResultRow>> {
    check_centers(&num.centers, &den.centers)?;
    let ratio: RatioPosterior = match cfg.estimator {
        Estimator::Permanental => {
            let (k, kd) = load_kernels(cfg, &num.centers)?;
            ratio_estimation_permproc(&num.counts, &den.counts, &k, kd.as_ref(), &cfg.ratio_options())?
        }
        Estimator::Pointwise => zbetaprime(&num.counts, &den.counts, &cfg.priors)?,
    };
    let converged = ratio.converged();
    let qoi: Option<QoiPosterior> = match cfg.qoi {
        Some(model) => Some(qoi_posterior(ratio.clone(), &[model])?),
        None => None,
    };
    let mut rows = Vec::with_capacity(ratio.len());
    for (i, law) in ratio.laws.iter().enumerate() {
        let center = num.centers[i];
        let Some(law) = law else {
            rows.push(invalid_row(i, center, qoi.is_some()));
            continue;
        };
        let hpd = hpd_beta_prime(law, 0.0, cfg.hpd_alpha, HPD_GRID_POINTS)?;
        let qoi_cols = match &qoi {
            Some(post) => {
                let tlaw = post.laws[i].as_ref().expect("valid ratio law gives a valid QoI law");
                let thpd = hpd_beta_prime(tlaw, post.shift[i], cfg.hpd_alpha, HPD_GRID_POINTS)?;
                Some(QoiColumns {
                    shift: post.shift[i],
                    p: tlaw.p(),
                    scale: tlaw.q(),
                    map: post.map_estimate[i],
                    hpd_lower: thpd.lower(),
                    hpd_upper: thpd.upper(),
                })
            }
            None => None,
        };
        rows.push(ResultRow {
            bin: i,
            bin_center: center,
            map_ratio: ratio.map_estimate[i],
            alpha_num: law.alpha(),
            alpha_denom: law.beta(),
            p: law.p(),
            q: law.q(),
            hpd_lower: hpd.lower(),
            hpd_upper: hpd.upper(),
            status: if converged { "ok" } else { "not_converged" }.into(),
            qoi: qoi_cols,
        });
    }
    Ok(rows)
}

fn invalid_row(bin: usize, center: f64, with_qoi: bool) -> ResultRow {
    let nan = f64::NAN;
    ResultRow {
        bin,
        bin_center: center,
        map_ratio: nan,
        alpha_num: nan,
        alpha_denom: nan,
        p: nan,
        q: nan,
        hpd_lower: nan,
        hpd_upper: nan,
        status: "invalid".into(),
        qoi: with_qoi.then_some(QoiColumns { shift: nan, p: nan, scale: nan, map: nan, hpd_lower: nan, hpd_upper: nan }),
    }
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Failure::from(Error::from(e)))?))
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn cmd_synth(a: &SynthArgs) -> CliResult<()> {
    let (data, true_t) = match a.problem {
        Problem::Ratio => (toy_ratio_problem(a.bins, a.seed)?, None),
        Problem::Qoi => {
            let q = toy_qoi_problem(a.bins, a.seed)?;
            (q.ratio, Some(q.truth))
        }
    };
    let centers = data.grid.centers_1d();
    write_counts(create(&with_suffix(&a.out_prefix, "_num.csv"))?, &centers, &data.numerator)?;
    write_counts(create(&with_suffix(&a.out_prefix, "_denom.csv"))?, &centers, &data.denominator)?;
    let truth: Vec<TruthRow> = centers
        .iter()
        .enumerate()
        .map(|(i, &c)| TruthRow { bin_center: c, true_z: data.truth[i], true_t: true_t.as_ref().map(|t| t[i]) })
        .collect();
    write_truth(create(&with_suffix(&a.out_prefix, "_truth.csv"))?, &truth)?;
    Ok(())
}

/// Per-bin score of a results row against the truth.
#[derive(Debug, Clone, PartialEq)]
pub struct BinScore {
    pub bin: usize,
    pub truth: f64,
    pub map: f64,
    pub crps: f64,
    pub covered: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSummary {
    pub bins: Vec<BinScore>,
    pub mean_crps: f64,
    /// `Σ|map − truth| / Σ|truth|`.
    pub rel_mae: f64,
    pub hpd_coverage: f64,
    /// Rows skipped because their posterior is invalid.
    pub skipped: usize,
}

pub fn score(results: &[ResultRow], truth: &[TruthRow], target: Problem) -> Result<ScoreSummary> {
    if results.len() != truth.len() {
        return Err(Error::Shape(format!("{} result rows for {} truth rows", results.len(), truth.len())));
    }
    let mut bins = Vec::new();
    let mut skipped = 0;
    for (r, t) in results.iter().zip(truth) {
        if r.status == "invalid" {
            skipped += 1;
            continue;
        }
        let law = GenBetaPrime::new(r.alpha_num, r.alpha_denom, r.p, r.q)?;
        let (law, shift, truth_value, map, lo, hi) = match target {
            Problem::Ratio => (law, 0.0, t.true_z, r.map_ratio, r.hpd_lower, r.hpd_upper),
            Problem::Qoi => {
                let q = r.qoi.ok_or_else(|| Error::Shape("results have no quantity-of-interest columns".into()))?;
                let tv = t.true_t.ok_or_else(|| Error::Shape("truth has no true_t column".into()))?;
                (law.with_power_scale(q.p, q.scale)?, q.shift, tv, q.map, q.hpd_lower, q.hpd_upper)
            }
        };
        let crps = crps_beta_prime(&law, shift, truth_value, CRPS_GRID_POINTS)?.value;
        bins.push(BinScore { bin: r.bin, truth: truth_value, map, crps, covered: lo <= truth_value && truth_value <= hi });
    }
    if bins.is_empty() {
        return Err(Error::Domain("no valid bins to score".into()));
    }
    let n = bins.len() as f64;
    let mean_crps = bins.iter().map(|b| b.crps).sum::<f64>() / n;
    let rel_mae = bins.iter().map(|b| (b.map - b.truth).abs()).sum::<f64>() / bins.iter().map(|b| b.truth.abs()).sum::<f64>();
    let hpd_coverage = bins.iter().filter(|b| b.covered).count() as f64 / n;
    Ok(ScoreSummary { bins, mean_crps, rel_mae, hpd_coverage, skipped })
}

fn cmd_score(a: &ScoreArgs) -> CliResult<()> {
    let results = read_results(&a.results).map_err(data_error(&a.results))?;
    let truth = read_truth(&a.truth).map_err(data_error(&a.truth))?;
    let s = score(&results, &truth, a.target)?;
    if let Some(path) = &a.out {
        let mut w = create(path)?;
        let write = |w: &mut BufWriter<File>| -> io::Result<()> {
            writeln!(w, "bin,truth,map,crps,covered")?;
            for b in &s.bins {
                writeln!(w, "{},{},{},{},{}", b.bin, format_sig(b.truth), format_sig(b.map), format_sig(b.crps), b.covered)?;
            }
            w.flush()
        };
        write(&mut w).map_err(|e| Failure::from(Error::from(e)))?;
    }
    println!("bins_scored={}", s.bins.len());
    println!("bins_skipped={}", s.skipped);
    println!("mean_crps={}", format_sig(s.mean_crps));
    println!("rel_mae={}", format_sig(s.rel_mae));
    println!("hpd_coverage={}", format_sig(s.hpd_coverage));
    Ok(())
}

/// One row of the timing table.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub bins: usize,
    pub seconds: Vec<f64>,
}

impl BenchRow {
    pub fn mean(&self) -> f64 {
        self.seconds.iter().sum::<f64>() / self.seconds.len() as f64
    }
}

/// Times kernel construction plus both permanental fits on fresh toy data,
/// one trial at a time.
pub fn bench(bin_counts: &[usize], trials: usize, seed: u64, support_width: f64, variance: f64) -> Result<Vec<BenchRow>> {
    if trials == 0 {
        return Err(Error::Parameter("need at least one trial".into()));
    }
    let mut rows = Vec::with_capacity(bin_counts.len());
    for &n in bin_counts {
        let mut seconds = Vec::with_capacity(trials);
        for t in 0..trials {
            let data = toy_ratio_problem(n, seed.wrapping_add(t as u64))?;
            let start = Instant::now();
            let km = wendland_kernel(&data.grid, support_width, variance)?;
            let post = ratio_estimation_permproc(&data.numerator, &data.denominator, &km, None, &RatioOptions::default())?;
            seconds.push(start.elapsed().as_secs_f64());
            drop(post);
        }
        rows.push(BenchRow { bins: n, seconds });
    }
    Ok(rows)
}

fn cmd_bench(a: &BenchArgs) -> CliResult<()> {
    let rows = bench(&a.bins, a.trials, a.seed, a.support_width, a.variance)?;
    let mut w = output(a.out.as_deref())?;
    let write = |w: &mut Box<dyn Write>| -> io::Result<()> {
        writeln!(w, "bins,trials,mean_seconds,min_seconds,max_seconds")?;
        for r in &rows {
            let min = r.seconds.iter().copied().fold(f64::INFINITY, f64::min);
            let max = r.seconds.iter().copied().fold(0.0, f64::max);
            writeln!(w, "{},{},{},{},{}", r.bins, r.seconds.len(), format_sig(r.mean()), format_sig(min), format_sig(max))?;
        }
        w.flush()
    };
    write(&mut w).map_err(|e| Failure::from(Error::from(e)))?;
    Ok(())
}
