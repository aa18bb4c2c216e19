mod verify;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mto_core::capacity::{self, CapacityOptions, OptimizerOptions};
use mto_core::channels::spec::{AuxFileSpec, ChannelSpec, DistSpec};
use mto_core::channels::{AuxSpec, Carrier, Channel, DiscreteMto, GaussianMto, ProductDist};
use mto_core::infotheory::Pmf;
use mto_core::regimes::{self, RegimeReport, Witness};
use mto_core::regions::{self, Polytope, REGION_TOL};
use mto_core::simulate::{self, TrialConfig};
use mto_core::Error;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "mto", version, about = "Noisy-interference regime, sum-capacity and region tools for many-to-one interference channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether the channel is in the noisy-interference regime.
    Regime(RegimeArgs),
    /// Compute the sum capacity (or a TIN lower bound).
    Capacity(CapacityArgs),
    /// Build inner/outer rate regions of a deterministic channel.
    Region(RegionArgs),
    /// Run the built-in consistency checks.
    Verify(VerifyArgs),
    /// Simulate random coding with TIN decoding.
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Args)]
struct Common {
    /// Channel description (JSON).
    #[arg(long)]
    channel: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Numerical tolerance; its meaning depends on the command.
    #[arg(long)]
    tol: Option<f64>,
    /// Simplex grid resolution for the certificate search.
    #[arg(long)]
    grid: Option<usize>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Shorthand for `--format csv`.
    #[arg(long, conflicts_with = "format")]
    csv: bool,
}

impl Common {
    fn format(&self) -> Format {
        if self.csv {
            Format::Csv
        } else {
            self.format
        }
    }
}

#[derive(Args)]
struct RegimeArgs {
    #[command(flatten)]
    common: Common,
    /// Exit with status 1 when the channel is outside the regime.
    #[arg(long)]
    require_noisy: bool,
    /// For violating scalar Gaussian channels, compute a non-degradedness witness.
    #[arg(long)]
    witness: bool,
    /// Noise correlations E[Z_1 Z_i] for the witness, one per interferer.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    rho: Option<Vec<f64>>,
}

#[derive(Args)]
struct CapacityArgs {
    #[command(flatten)]
    common: Common,
    /// Report the TIN rate as a lower bound outside the regime.
    #[arg(long)]
    lower_bound: bool,
    /// Use the deterministic-channel formula.
    #[arg(long)]
    deterministic: bool,
    #[arg(long, default_value_t = 8)]
    restarts: usize,
    /// Power-grid points per user for scalar Gaussian channels (0 disables).
    #[arg(long, default_value_t = 0)]
    power_grid: usize,
}

#[derive(Args)]
struct RegionArgs {
    #[command(flatten)]
    common: Common,
    /// Input laws (JSON `{"pmfs": [...]}`); uniform when omitted.
    #[arg(long)]
    dist: Option<PathBuf>,
    /// Auxiliary maps (JSON `{"maps": .., "sizes": ..}`); `U_i = X_i` when omitted.
    #[arg(long)]
    aux: Option<PathBuf>,
    /// Alignment gain for a set of interferers given by rate labels, e.g. `2,3`.
    #[arg(long, value_delimiter = ',')]
    delta: Option<Vec<usize>>,
    /// Check resolvability over a grid with this many points per binary user.
    #[arg(long)]
    resolvable: Option<usize>,
    /// Write vertex CSV files `<stem>_outer.csv` and `<stem>_inner.csv`.
    #[arg(long)]
    vertices: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// Random draws for the extremal-inequality check.
    #[arg(long, default_value_t = 100)]
    lemma1: usize,
    /// Random channels for the regime-equivalence sweep.
    #[arg(long, default_value_t = 200)]
    equivalence: usize,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// Rate per user in bits per channel use.
    #[arg(long, value_delimiter = ',', required = true)]
    rates: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "6,10,14")]
    blocklengths: Vec<usize>,
    #[arg(long, default_value_t = 2000)]
    trials: usize,
    #[arg(long, default_value_t = simulate::DEFAULT_EPSILON)]
    epsilon: f64,
    #[arg(long)]
    dist: Option<PathBuf>,
    #[arg(long, default_value_t = simulate::DEFAULT_MAX_CODEWORDS)]
    max_codewords: usize,
}

/// Failure carrying the process exit status.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::RegimeViolated(_) | Error::RegimeNotViolated(_) | Error::CarrierRegime { .. } | Error::NotResolvable(_) => 1,
            _ => 2,
        };
        Failure { code, message: e.to_string() }
    }
}

fn input_error(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| input_error(format!("cannot read {what} {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| input_error(format!("invalid {what} {}: {e}", path.display())))
}

fn load_channel(common: &Common) -> CliResult<Channel> {
    let path = common.channel.as_deref().ok_or_else(|| input_error("--channel is required"))?;
    let spec: ChannelSpec = read_json(path, "channel")?;
    let ch = spec.build()?;
    ch.validate().into_result()?;
    Ok(ch)
}

fn discrete(ch: Channel) -> CliResult<DiscreteMto> {
    match ch {
        Channel::Discrete(d) => Ok(d),
        other => Err(input_error(format!("this command needs a discrete channel, got {}", other.family()))),
    }
}

fn emit(common: &Common, content: String) -> CliResult<()> {
    match &common.out {
        Some(p) => fs::write(p, content).map_err(|e| input_error(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

fn require_json(common: &Common, what: &str) -> CliResult<()> {
    if common.format() != Format::Json {
        return Err(input_error(format!("{what} reports are JSON only")));
    }
    Ok(())
}

#[derive(Serialize)]
struct RegimeOutput {
    family: &'static str,
    verdict: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<RegimeReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    carriers: Vec<RegimeReport>,
    /// General matrix test alongside a family-specific one.
    #[serde(skip_serializing_if = "Option::is_none")]
    general: Option<RegimeReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<Witness>,
}

fn rejudge(mut r: RegimeReport, tol: Option<f64>) -> RegimeReport {
    if let Some(t) = tol {
        let structural = r.notes.iter().any(|n| n.contains("row space"));
        r.verdict = r.margin >= -t && !structural;
        r.boundary = r.margin.abs() <= t && !structural;
    }
    r
}

fn gaussian_regime(g: &GaussianMto) -> mto_core::Result<(RegimeReport, Option<RegimeReport>)> {
    let general = regimes::check_corollary1_auto(g)?;
    let k = g.num_users();
    if g.is_scalar() {
        let (cross, direct) = regimes::siso_gains(g)?;
        return Ok((regimes::check_eq1_siso(&cross, &direct)?, Some(general)));
    }
    let interferers = 1..k;
    let columns = interferers.clone().all(|i| g.cross(i).ncols() == 1 && g.direct(i).ncols() == 1);
    if columns {
        let cross: Vec<_> = interferers.clone().map(|i| g.cross(i).clone()).collect();
        let direct: Vec<_> = interferers.map(|i| g.direct(i).clone()).collect();
        return Ok((regimes::check_simo(&cross, &direct)?, Some(general)));
    }
    let diagonal = g.direct(0).nrows() == 1
        && (1..k).all(|i| {
            let d = g.direct(i);
            d.is_square() && (0..d.nrows()).all(|r| (0..d.ncols()).all(|c| r == c || d[(r, c)].norm() == 0.0))
        });
    if diagonal {
        let direct: Vec<Vec<_>> = (1..k).map(|i| g.direct(i).diagonal().iter().copied().collect()).collect();
        let cross: Vec<Vec<_>> = (1..k).map(|i| g.cross(i).iter().copied().collect()).collect();
        return Ok((regimes::check_mimo_diag(&direct, &cross)?, Some(general)));
    }
    Ok((general, None))
}

fn cmd_regime(args: &RegimeArgs) -> CliResult<()> {
    require_json(&args.common, "regime")?;
    let ch = load_channel(&args.common)?;
    let tol = args.common.tol;
    let mut out = RegimeOutput { family: ch.family(), verdict: false, report: None, carriers: Vec::new(), general: None, witness: None };
    match &ch {
        Channel::Discrete(d) => out.report = Some(rejudge(regimes::degraded_lp(d)?, tol)),
        Channel::Gaussian(g) => {
            let (primary, general) = gaussian_regime(g)?;
            out.report = Some(rejudge(primary, tol));
            out.general = general.map(|r| rejudge(r, tol));
        }
        Channel::Fading(f) => out.report = Some(rejudge(regimes::check_fading_channel(f)?, tol)),
        Channel::Parallel(p) => {
            for c in p.carriers() {
                let r = match c {
                    Carrier::Discrete(d) => regimes::degraded_lp(d)?,
                    Carrier::Gaussian(g) => gaussian_regime(g)?.0,
                };
                out.carriers.push(rejudge(r, tol));
            }
        }
    }
    out.verdict = match &out.report {
        Some(r) => r.verdict,
        None => out.carriers.iter().all(|r| r.verdict),
    };
    if args.witness {
        let Channel::Gaussian(g) = &ch else {
            return Err(input_error("--witness needs a scalar Gaussian channel"));
        };
        let (cross, direct) = regimes::siso_gains(g)?;
        let rho = args.rho.clone().unwrap_or_else(|| vec![0.0; cross.len()]);
        out.witness = Some(regimes::nondegraded_witness(&cross, &direct, &rho)?);
    }
    emit(&args.common, to_json(&out))?;
    if args.require_noisy && !out.verdict {
        return Err(Failure { code: 1, message: "channel is outside the noisy-interference regime".into() });
    }
    Ok(())
}

fn optimizer_options(common: &Common, restarts: usize) -> OptimizerOptions {
    let mut o = OptimizerOptions { restarts, seed: common.seed, ..OptimizerOptions::default() };
    if let Some(t) = common.tol {
        o.tol = t;
    }
    if let Some(g) = common.grid {
        o.grid = g;
    }
    o
}

fn cmd_capacity(args: &CapacityArgs) -> CliResult<()> {
    require_json(&args.common, "capacity")?;
    let ch = load_channel(&args.common)?;
    let opts = CapacityOptions {
        optimizer: optimizer_options(&args.common, args.restarts),
        lower_bound: args.lower_bound,
        power_grid: args.power_grid,
        ..CapacityOptions::default()
    };
    let json = match &ch {
        Channel::Discrete(d) if args.deterministic => to_json(&capacity::sum_capacity_deterministic(d, &opts)?),
        Channel::Discrete(d) => to_json(&capacity::sum_capacity_discrete(d, &opts)?),
        Channel::Gaussian(g) if g.constellations().is_some() => to_json(&capacity::sum_capacity_constellation(g, &opts)?),
        Channel::Gaussian(g) => to_json(&capacity::sum_capacity_gaussian(g, &opts)?),
        Channel::Parallel(p) => to_json(&capacity::sum_capacity_parallel(p, &opts)?),
        Channel::Fading(_) => return Err(input_error("fading channels support the regime command only")),
    };
    emit(&args.common, json)
}

fn load_pmfs(path: Option<&Path>, ch: &DiscreteMto) -> CliResult<Vec<Pmf>> {
    match path {
        None => Ok(ch.inputs().iter().map(|&n| Pmf::uniform(n)).collect()),
        Some(p) => match read_json::<DistSpec>(p, "input law")?.build()? {
            ProductDist::Discrete(d) => Ok(d),
            ProductDist::Gaussian(_) => Err(input_error("expected probability vectors, got covariances")),
        },
    }
}

#[derive(Serialize)]
struct RegionOutput {
    outer: Polytope,
    inner: Polytope,
    inner_parametric: Polytope,
    parametric_matches_inner: bool,
    outer_sum_rate: Option<f64>,
    inner_sum_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alignment_gain: Option<AlignmentOutput>,
    #[serde(skip_serializing_if = "Option::is_none")]
    resolvable: Option<ResolvableOutput>,
}

#[derive(Serialize)]
struct AlignmentOutput {
    set: Vec<usize>,
    bits: f64,
}

#[derive(Serialize)]
struct ResolvableOutput {
    grid_points: usize,
    inner_equals_outer: bool,
}

fn cmd_region(args: &RegionArgs) -> CliResult<()> {
    let ch = discrete(load_channel(&args.common)?)?;
    let dist = load_pmfs(args.dist.as_deref(), &ch)?;
    let aux = match &args.aux {
        None => AuxSpec::trivial(&ch),
        Some(p) => read_json::<AuxFileSpec>(p, "auxiliary maps")?.build()?,
    };
    let tol = args.common.tol.unwrap_or(REGION_TOL);
    let outer = regions::outer_region(&ch, &dist, &aux)?;
    let inner = regions::inner_region(&ch, &dist, &aux)?;
    let inner_parametric = regions::inner_region_parametric(&ch, &dist, &aux)?;
    let ones = vec![1.0; ch.num_users()];
    let mut out = RegionOutput {
        parametric_matches_inner: inner.equivalent(&inner_parametric, tol)?,
        outer_sum_rate: outer.max_linear(&ones)?,
        inner_sum_rate: inner.max_linear(&ones)?,
        outer,
        inner,
        inner_parametric,
        alignment_gain: None,
        resolvable: None,
    };
    if let Some(set) = &args.delta {
        if set.iter().any(|&i| i < 2 || i > ch.num_users()) {
            return Err(input_error(format!("--delta takes interferer labels 2..{}", ch.num_users())));
        }
        let code: Vec<usize> = set.iter().map(|i| i - 1).collect();
        out.alignment_gain = Some(AlignmentOutput { set: set.clone(), bits: regions::alignment_gain(&ch, &dist, &aux, &code)? });
    }
    if let Some(points) = args.resolvable {
        let grid = regions::distribution_grid(ch.inputs(), points)?;
        let pts = regions::resolvable_capacity(&ch, &grid, &aux)?;
        out.resolvable = Some(ResolvableOutput { grid_points: pts.len(), inner_equals_outer: true });
    }
    if let Some(stem) = &args.vertices {
        if ch.num_users() > 3 {
            return Err(input_error("vertex output is limited to K <= 3"));
        }
        for (name, p) in [("outer", &out.outer), ("inner", &out.inner)] {
            let path = stem.with_file_name(format!(
                "{}_{name}.csv",
                stem.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
            ));
            fs::write(&path, p.reduce(tol)?.vertices_csv(1e-9))
                .map_err(|e| input_error(format!("cannot write {}: {e}", path.display())))?;
        }
    }
    let content = match args.common.format() {
        Format::Json => to_json(&out),
        Format::Text => {
            let mut s = format!("# outer region\n{}\n# inner region\n{}", out.outer.to_text(), out.inner.to_text());
            if let Some(a) = &out.alignment_gain {
                let labels: Vec<String> = a.set.iter().map(|i| i.to_string()).collect();
                s.push_str(&format!("\n# alignment gain S={{{}}}: {} bits\n", labels.join(","), a.bits));
            }
            s
        }
        Format::Csv => {
            if ch.num_users() > 3 {
                return Err(input_error("vertex output is limited to K <= 3"));
            }
            let mut s = String::from("# outer\n");
            s.push_str(&out.outer.reduce(tol)?.vertices_csv(1e-9));
            s.push_str("# inner\n");
            s.push_str(&out.inner.reduce(tol)?.vertices_csv(1e-9));
            s
        }
    };
    emit(&args.common, content)
}

fn cmd_simulate(args: &SimulateArgs) -> CliResult<()> {
    if args.common.format() == Format::Text {
        return Err(input_error("simulate writes JSON or CSV"));
    }
    let ch = discrete(load_channel(&args.common)?)?;
    let mut cfg = TrialConfig::new(args.rates.clone(), args.blocklengths.clone(), args.trials);
    cfg.epsilon = args.epsilon;
    cfg.seed = args.common.seed;
    cfg.max_codewords = args.max_codewords;
    if args.dist.is_some() {
        cfg.dist = Some(load_pmfs(args.dist.as_deref(), &ch)?);
    }
    let points = simulate::sweep_blocklength(&ch, &cfg)?;
    let content = match args.common.format() {
        Format::Csv => simulate::to_csv(&points, ch.num_users()),
        _ => to_json(&points),
    };
    emit(&args.common, content)
}

fn cmd_verify(args: &VerifyArgs) -> CliResult<()> {
    require_json(&args.common, "verify")?;
    let channel = match &args.common.channel {
        Some(_) => Some(load_channel(&args.common)?),
        None => None,
    };
    let report = verify::run(&verify::Suite {
        seed: args.common.seed,
        lemma1_trials: args.lemma1,
        equivalence_trials: args.equivalence,
        channel,
    })?;
    emit(&args.common, to_json(&report))?;
    if !report.passed {
        return Err(Failure { code: 1, message: "some checks failed".into() });
    }
    Ok(())
}

fn configure_threads() -> CliResult<()> {
    if let Ok(v) = std::env::var("MTO_THREADS") {
        let n: usize = v.parse().map_err(|_| input_error(format!("MTO_THREADS must be a positive integer, got `{v}`")))?;
        if n == 0 {
            return Err(input_error("MTO_THREADS must be positive"));
        }
        // Fails only if a pool already exists, which cannot happen this early.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    match &cli.command {
        Command::Regime(a) => cmd_regime(a),
        Command::Capacity(a) => cmd_capacity(a),
        Command::Region(a) => cmd_region(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Simulate(a) => cmd_simulate(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
