//! Command-line interface: threshold schedules, moment-bound certificates,
//! game simulation, oracle verification and figure-data emission.
//!
//! Exit codes: 0 success, 1 validation/usage problem (diagnostic on
//! stderr naming the violated condition), 2 verification failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use robust_stopping::ambiguity::witness_distribution;
use robust_stopping::game::{
    monte_carlo, static_threshold_rule, NatureStrategy, SimulationReport, StoppingRule,
};
use robust_stopping::momentbound::{mad_upper_bound, mad_worst_case, mvs_upper_bound, mvs_worst_case};
use robust_stopping::oracle::{enumerate_extremal, verify_certificate};
use robust_stopping::thresholds::{
    closed_form_bound, closed_form_thresholds, robust_thresholds_generic,
    thresholds_two_point_large_l,
};
use robust_stopping::{
    AmbiguitySpec, DiscreteDistribution, MomentBoundCertificate, SpecKind, ThresholdSchedule,
    TurningPointReport, ValidatedSpec,
};

mod format;
use format::{fmt_sig, json_num};

// ---------------------------------------------------------------------------
// CLI surface
// ---------------------------------------------------------------------------

#[derive(Parser)]
#[command(
    name = "robust-stopping",
    about = "Robust stopping thresholds for a seller under moment ambiguity",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a robust threshold schedule T(0..n)
    Thresholds(ThresholdsArgs),
    /// Tight bound on E[min(xi, X)] with primal/dual certificate (JSON)
    Momentbound(MomentboundArgs),
    /// Monte Carlo simulation of the seller-vs-nature game (JSON report)
    Simulate(SimulateArgs),
    /// Check closed-form bounds and certificates against the enumeration
    /// oracle; exits 2 on any discrepancy beyond tolerance
    Verify(VerifyArgs),
    /// Emit figure data series (1: two-point candidate recursions,
    /// 5: worst-case three-point masses per step)
    Figure(FigureArgs),
}

/// Ambiguity-set description, inline or from a JSON file.
#[derive(Args, Debug)]
struct SpecArgs {
    /// JSON file {"kind", "mu", "sigma2"?, "mad"?, "L"?} (replaces flags)
    #[arg(long, value_name = "FILE")]
    spec: Option<PathBuf>,
    /// mean-only | mean-variance | two-point | mean-var-support |
    /// mean-mad | mean-mad-support (inferred from flags when omitted)
    #[arg(long)]
    kind: Option<String>,
    /// Common mean of the offer-value distributions
    #[arg(long)]
    mu: Option<f64>,
    /// Common variance
    #[arg(long)]
    sigma2: Option<f64>,
    /// Common mean absolute deviation
    #[arg(long)]
    mad: Option<f64>,
    /// Support upper bound
    #[arg(long = "L", value_name = "L")]
    support_upper: Option<f64>,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Method {
    ClosedForm,
    Generic,
    Both,
}

#[derive(Args)]
struct ThresholdsArgs {
    #[command(flatten)]
    spec: SpecArgs,
    /// Number of offers
    #[arg(long)]
    n: usize,
    #[arg(long, value_enum, default_value_t = Method::ClosedForm)]
    method: Method,
    #[arg(long, value_enum, default_value_t = OutFormat::Csv)]
    out: OutFormat,
    #[arg(long, value_name = "FILE")]
    output_file: Option<PathBuf>,
}

#[derive(Args)]
struct MomentboundArgs {
    #[command(flatten)]
    spec: SpecArgs,
    /// Bound argument xi in [0, L]
    #[arg(long)]
    xi: f64,
    #[arg(long, value_enum, default_value_t = OutFormat::Json)]
    out: OutFormat,
    #[arg(long, value_name = "FILE")]
    output_file: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    spec: SpecArgs,
    /// Number of offers per episode
    #[arg(long)]
    n: usize,
    /// optimal | static:<T> | first
    #[arg(long, default_value = "optimal")]
    rule: String,
    /// worst | fixed:<dist.json> | correlated:<dist.json>
    #[arg(long, default_value = "worst")]
    nature: String,
    #[arg(long, default_value_t = 100_000)]
    episodes: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Worker threads (the report is identical for any value)
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long, value_enum, default_value_t = OutFormat::Json)]
    out: OutFormat,
    #[arg(long, value_name = "FILE")]
    output_file: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    spec: SpecArgs,
    /// Number of xi values swept over [0, L]
    #[arg(long, default_value_t = 25)]
    xi_sweep: usize,
    /// Enumeration grid points (exact candidate points are always added)
    #[arg(long, default_value_t = 60)]
    grid: usize,
    /// Discrepancy tolerance
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Args)]
struct FigureArgs {
    /// 1: candidate recursions of the two-point family;
    /// 5: worst-case three-point masses of the general variance family
    #[arg(long)]
    figure: u8,
    #[arg(long)]
    mu: f64,
    #[arg(long)]
    sigma2: f64,
    #[arg(long = "L", value_name = "L")]
    support_upper: f64,
    #[arg(long)]
    n: usize,
    #[arg(long, value_enum, default_value_t = OutFormat::Csv)]
    out: OutFormat,
    #[arg(long, value_name = "FILE")]
    output_file: Option<PathBuf>,
}

// ---------------------------------------------------------------------------
// Error plumbing
// ---------------------------------------------------------------------------

enum CliError {
    /// Bad input or an infeasible request: exit 1.
    Validation(String),
    /// A numerical check failed: exit 2.
    Verification(String),
}

impl From<robust_stopping::Error> for CliError {
    fn from(e: robust_stopping::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Verification(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Thresholds(args) => cmd_thresholds(args),
        Command::Momentbound(args) => cmd_momentbound(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Figure(args) => cmd_figure(args),
    }
}

// ---------------------------------------------------------------------------
// Spec resolution
// ---------------------------------------------------------------------------

fn parse_kind(s: &str) -> CliResult<SpecKind> {
    Ok(match s.to_ascii_lowercase().as_str() {
        "mean" | "mean-only" => SpecKind::MeanOnly,
        "mean-variance" | "mv" => SpecKind::MeanVariance,
        "two-point" | "two-point-mean-var-support" => SpecKind::TwoPointMeanVarSupport,
        "mean-var-support" | "mvs" => SpecKind::MeanVarSupport,
        "mean-mad" => SpecKind::MeanMad,
        "mean-mad-support" => SpecKind::MeanMadSupport,
        other => {
            return Err(CliError::Validation(format!(
                "unknown kind '{other}' (expected mean-only, mean-variance, two-point, \
                 mean-var-support, mean-mad or mean-mad-support)"
            )))
        }
    })
}

impl SpecArgs {
    fn resolve(&self) -> CliResult<ValidatedSpec> {
        if let Some(path) = &self.spec {
            if self.kind.is_some()
                || self.mu.is_some()
                || self.sigma2.is_some()
                || self.mad.is_some()
                || self.support_upper.is_some()
            {
                return Err(CliError::Validation(
                    "--spec replaces the inline spec flags; pass one or the other".into(),
                ));
            }
            let text = fs::read_to_string(path).map_err(|e| {
                CliError::Validation(format!("cannot read {}: {e}", path.display()))
            })?;
            let spec: AmbiguitySpec = serde_json::from_str(&text).map_err(|e| {
                CliError::Validation(format!("cannot parse {}: {e}", path.display()))
            })?;
            return Ok(spec.validate()?);
        }

        let mu = self
            .mu
            .ok_or_else(|| CliError::Validation("--mu is required (or use --spec)".into()))?;
        let kind = match &self.kind {
            Some(k) => parse_kind(k)?,
            None => match (self.sigma2, self.mad, self.support_upper) {
                (Some(_), Some(_), _) => {
                    return Err(CliError::Validation(
                        "pass either --sigma2 or --mad, not both".into(),
                    ))
                }
                (Some(_), None, Some(_)) => SpecKind::MeanVarSupport,
                (Some(_), None, None) => SpecKind::MeanVariance,
                (None, Some(_), Some(_)) => SpecKind::MeanMadSupport,
                (None, Some(_), None) => SpecKind::MeanMad,
                (None, None, _) => SpecKind::MeanOnly,
            },
        };
        let need = |v: Option<f64>, flag: &str| {
            v.ok_or_else(|| {
                CliError::Validation(format!("kind {} requires {flag}", kind.name()))
            })
        };
        let spec = match kind {
            SpecKind::MeanOnly => AmbiguitySpec::mean_only(mu),
            SpecKind::MeanVariance => {
                AmbiguitySpec::mean_variance(mu, need(self.sigma2, "--sigma2")?)
            }
            SpecKind::TwoPointMeanVarSupport => AmbiguitySpec::two_point(
                mu,
                need(self.sigma2, "--sigma2")?,
                need(self.support_upper, "--L")?,
            ),
            SpecKind::MeanVarSupport => AmbiguitySpec::mean_var_support(
                mu,
                need(self.sigma2, "--sigma2")?,
                need(self.support_upper, "--L")?,
            ),
            SpecKind::MeanMad => AmbiguitySpec::mean_mad(mu, need(self.mad, "--mad")?),
            SpecKind::MeanMadSupport => AmbiguitySpec::mean_mad_support(
                mu,
                need(self.mad, "--mad")?,
                need(self.support_upper, "--L")?,
            ),
        };
        Ok(spec.validate()?)
    }
}

fn emit(text: String, path: Option<&Path>) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text)
            .map_err(|e| CliError::Validation(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json_pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json serializes");
    s.push('\n');
    s
}

// ---------------------------------------------------------------------------
// thresholds
// ---------------------------------------------------------------------------

fn cmd_thresholds(args: ThresholdsArgs) -> CliResult<()> {
    let spec = args.spec.resolve()?;
    let closed = match args.method {
        Method::Generic => None,
        _ => Some(closed_form_thresholds(&spec, args.n)?),
    };
    let generic = match args.method {
        Method::ClosedForm => None,
        _ => Some(robust_thresholds_generic(&spec, args.n, closed_form_bound(&spec))?),
    };

    let text = match args.out {
        OutFormat::Csv => thresholds_csv(args.method, &closed, &generic),
        OutFormat::Json => {
            let mut obj = serde_json::Map::new();
            obj.insert("kind".into(), json!(spec.kind.name()));
            obj.insert("mu".into(), json_num(spec.mu));
            obj.insert("n".into(), json!(args.n));
            match (&closed, &generic) {
                (Some((schedule, report)), None) => {
                    obj.insert("method".into(), json!("closed-form"));
                    obj.insert("values".into(), values_json(schedule));
                    if let Some(report) = report {
                        insert_report_json(&mut obj, report);
                    }
                }
                (None, Some(schedule)) => {
                    obj.insert("method".into(), json!("generic"));
                    obj.insert("values".into(), values_json(schedule));
                }
                (Some((schedule, report)), Some(generic)) => {
                    obj.insert("method".into(), json!("both"));
                    obj.insert("values_closed_form".into(), values_json(schedule));
                    obj.insert("values_generic".into(), values_json(generic));
                    if let Some(report) = report {
                        insert_report_json(&mut obj, report);
                    }
                }
                (None, None) => unreachable!("one method always computed"),
            }
            json_pretty(&Value::Object(obj))
        }
    };
    emit(text, args.output_file.as_deref())
}

fn values_json(schedule: &ThresholdSchedule) -> Value {
    Value::Array(schedule.values().iter().map(|&v| json_num(v)).collect())
}

fn insert_report_json(obj: &mut serde_json::Map<String, Value>, report: &TurningPointReport) {
    obj.insert(
        "f_star".into(),
        Value::Array(report.left_values.iter().map(|&v| json_num(v)).collect()),
    );
    obj.insert(
        "g_star".into(),
        Value::Array(report.right_values.iter().map(|&v| json_num(v)).collect()),
    );
    obj.insert("switch_index".into(), json!(report.switch_index));
    obj.insert("n0".into(), json!(report.n0));
}

fn thresholds_csv(
    method: Method,
    closed: &Option<(ThresholdSchedule, Option<TurningPointReport>)>,
    generic: &Option<ThresholdSchedule>,
) -> String {
    let mut out = String::new();
    match (method, closed, generic) {
        (Method::Both, Some((schedule, _)), Some(generic)) => {
            out.push_str("i,T_closed_form,T_generic\n");
            for i in 0..=schedule.n() {
                out.push_str(&format!(
                    "{i},{},{}\n",
                    fmt_sig(schedule.value(i)),
                    fmt_sig(generic.value(i))
                ));
            }
        }
        (_, Some((schedule, Some(report))), _) => {
            out.push_str("i,T_i,f_star_value,g_star_value,is_switch\n");
            for i in 0..=schedule.n() {
                out.push_str(&format!(
                    "{i},{},{},{},{}\n",
                    fmt_sig(schedule.value(i)),
                    fmt_sig(report.left_values[i]),
                    fmt_sig(report.right_values[i]),
                    report.switch_index == Some(i)
                ));
            }
        }
        (_, Some((schedule, None)), _) => {
            out.push_str("i,T_i\n");
            for i in 0..=schedule.n() {
                out.push_str(&format!("{i},{}\n", fmt_sig(schedule.value(i))));
            }
        }
        (_, None, Some(schedule)) => {
            out.push_str("i,T_i\n");
            for i in 0..=schedule.n() {
                out.push_str(&format!("{i},{}\n", fmt_sig(schedule.value(i))));
            }
        }
        _ => unreachable!("one method always computed"),
    }
    out
}

// ---------------------------------------------------------------------------
// momentbound
// ---------------------------------------------------------------------------

fn certificate_for(spec: &ValidatedSpec, xi: f64) -> CliResult<MomentBoundCertificate> {
    match spec.kind {
        SpecKind::MeanVarSupport => {
            Ok(mvs_worst_case(spec.mu, spec.sigma2.unwrap(), spec.support_upper.unwrap(), xi)?)
        }
        SpecKind::MeanMad | SpecKind::MeanMadSupport => Ok(mad_worst_case(
            spec.mu,
            spec.mad.unwrap(),
            spec.effective_support_upper(),
            xi,
        )?),
        other => Err(CliError::Validation(format!(
            "momentbound certificates exist for mean-var-support and mean-mad(-support) \
             sets; kind {} has none",
            other.name()
        ))),
    }
}

fn certificate_json(cert: &MomentBoundCertificate) -> Value {
    json!({
        "value": json_num(cert.value),
        "regime": cert.regime,
        "regime_name": cert.regime_name(),
        "xi": json_num(cert.xi),
        "atoms": cert.primal.atoms().iter()
            .map(|&(x, p)| json!([json_num(x), json_num(p)]))
            .collect::<Vec<_>>(),
        "dual": {
            "basis": cert.dual.basis.name(),
            "lambdas": cert.dual.lambdas().iter().map(|&l| json_num(l)).collect::<Vec<_>>(),
        },
    })
}

fn cmd_momentbound(args: MomentboundArgs) -> CliResult<()> {
    if args.out == OutFormat::Csv {
        return Err(CliError::Validation("momentbound emits JSON; use --out json".into()));
    }
    let spec = args.spec.resolve()?;
    let cert = certificate_for(&spec, args.xi)?;
    emit(json_pretty(&certificate_json(&cert)), args.output_file.as_deref())
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

fn load_distribution(path: &str) -> CliResult<DiscreteDistribution> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {path}: {e}")))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("cannot parse {path}: {e}")))
}

fn cmd_simulate(args: SimulateArgs) -> CliResult<()> {
    if args.out == OutFormat::Csv {
        return Err(CliError::Validation("simulate emits JSON; use --out json".into()));
    }
    let spec = args.spec.resolve()?;
    let (schedule, _) = closed_form_thresholds(&spec, args.n)?;

    let rule = match args.rule.as_str() {
        "optimal" => StoppingRule::Schedule(schedule.clone()),
        "first" => StoppingRule::FirstOffer,
        other => match other.split_once(':') {
            Some(("static", t)) => {
                let t: f64 = t.parse().map_err(|_| {
                    CliError::Validation(format!("bad static threshold '{t}'"))
                })?;
                static_threshold_rule(t)?
            }
            _ => {
                return Err(CliError::Validation(format!(
                    "unknown rule '{other}' (expected optimal, static:<T> or first)"
                )))
            }
        },
    };

    let nature = match args.nature.as_str() {
        "worst" => NatureStrategy::per_step_worst_case(&spec, &schedule)?,
        other => match other.split_once(':') {
            Some(("fixed", path)) => NatureStrategy::FixedIid(load_distribution(path)?),
            Some(("correlated", path)) => {
                NatureStrategy::FullyCorrelated(load_distribution(path)?)
            }
            Some(("witness", "correlated")) => {
                NatureStrategy::FullyCorrelated(witness_distribution(&spec))
            }
            _ => {
                return Err(CliError::Validation(format!(
                    "unknown nature '{other}' (expected worst, fixed:<dist.json>, \
                     correlated:<dist.json> or witness:correlated)"
                )))
            }
        },
    };

    let report = monte_carlo(&rule, &nature, args.n, args.episodes, args.seed, args.threads)?;
    let text = json_pretty(&report_json(&args, &report));
    emit(text, args.output_file.as_deref())
}

fn report_json(args: &SimulateArgs, report: &SimulationReport) -> Value {
    json!({
        "n": args.n,
        "rule": args.rule,
        "nature": args.nature,
        "episodes": report.episodes,
        "seed": report.seed,
        "mean_payoff": json_num(report.mean_payoff),
        "std_error": json_num(report.std_error),
        "selection_histogram": report.selection_histogram,
        "no_acceptance_frequency": json_num(report.no_acceptance_frequency),
        "mean_realized_max": json_num(report.mean_realized_max),
    })
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

fn cmd_verify(args: VerifyArgs) -> CliResult<()> {
    let spec = args.spec.resolve()?;
    let upper = spec.effective_support_upper();
    if !upper.is_finite()
        || !matches!(spec.kind, SpecKind::MeanVarSupport | SpecKind::MeanMadSupport)
    {
        return Err(CliError::Validation(format!(
            "verify sweeps the enumeration oracle, which needs a mean-var-support or \
             mean-mad-support set; got kind {}",
            spec.kind.name()
        )));
    }

    let mut xis: Vec<f64> = Vec::new();
    let count = args.xi_sweep.max(2);
    for k in 0..count {
        xis.push(upper * k as f64 / (count - 1) as f64);
    }
    match spec.kind {
        SpecKind::MeanVarSupport => {
            let s2 = spec.sigma2.unwrap();
            xis.push((spec.mu - s2 / (upper - spec.mu)).clamp(0.0, upper));
            xis.push((spec.mu + s2 / spec.mu).clamp(0.0, upper));
        }
        _ => {
            let bp = robust_stopping::momentbound::mad_breakpoints(
                spec.mu,
                spec.mad.unwrap(),
                upper,
            );
            xis.push(bp.xi1.clamp(0.0, upper));
            xis.push(bp.xi2.clamp(0.0, upper));
            xis.push(bp.xi1_variant.clamp(0.0, upper));
        }
    }
    xis.sort_by(f64::total_cmp);
    xis.dedup();

    let bound = |xi: f64| match spec.kind {
        SpecKind::MeanVarSupport => {
            mvs_upper_bound(spec.mu, spec.sigma2.unwrap(), upper, xi)
        }
        _ => mad_upper_bound(spec.mu, spec.mad.unwrap(), upper, xi),
    };

    println!(
        "{:>14} {:>16} {:>16} {:>12} {:>12} {:>8}",
        "xi", "closed_form", "enumerated", "diff", "cert_err", "status"
    );
    let mut failures = 0usize;
    for &xi in &xis {
        let closed = bound(xi).map_err(CliError::from)?;
        let enumerated = enumerate_extremal(&spec, xi, args.grid).map_err(CliError::from)?;
        let cert = certificate_for(&spec, xi)?;
        let check = verify_certificate(&cert, &spec, 10_000);
        let diff = (closed - enumerated.value).abs();
        let cert_err = check.max_discrepancy();
        let ok = diff <= args.tol && cert_err <= args.tol;
        if !ok {
            failures += 1;
        }
        println!(
            "{:>14} {:>16} {:>16} {:>12.2e} {:>12.2e} {:>8}",
            fmt_sig(xi),
            fmt_sig(closed),
            fmt_sig(enumerated.value),
            diff,
            cert_err,
            if ok { "ok" } else { "FAIL" }
        );
    }
    println!("checked {} xi values, {} failures, tol {:.1e}", xis.len(), failures, args.tol);
    if failures > 0 {
        return Err(CliError::Verification(format!(
            "{failures} of {} checks exceeded tolerance {:.1e}",
            xis.len(),
            args.tol
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// figure
// ---------------------------------------------------------------------------

fn cmd_figure(args: FigureArgs) -> CliResult<()> {
    match args.figure {
        1 => figure_candidates(&args),
        5 => figure_masses(&args),
        other => Err(CliError::Validation(format!(
            "unknown figure {other} (available: 1, 5)"
        ))),
    }
}

/// Both candidate recursions (f*, g*) and their minimum for the two-point
/// family, rows i = 1..n-1.
fn figure_candidates(args: &FigureArgs) -> CliResult<()> {
    let (schedule, report) =
        thresholds_two_point_large_l(args.mu, args.sigma2, args.support_upper, args.n)?;
    let rows: Vec<usize> = (1..args.n).collect();
    let text = match args.out {
        OutFormat::Csv => {
            let mut out = String::from("i,f_star,g_star,t_min,is_switch\n");
            for &i in &rows {
                out.push_str(&format!(
                    "{i},{},{},{},{}\n",
                    fmt_sig(report.left_values[i]),
                    fmt_sig(report.right_values[i]),
                    fmt_sig(schedule.value(i)),
                    report.switch_index == Some(i)
                ));
            }
            out
        }
        OutFormat::Json => json_pretty(&json!({
            "figure": 1,
            "mu": json_num(args.mu),
            "sigma2": json_num(args.sigma2),
            "L": json_num(args.support_upper),
            "n": args.n,
            "switch_index": report.switch_index,
            "n0": report.n0,
            "rows": rows.iter().map(|&i| json!({
                "i": i,
                "f_star": json_num(report.left_values[i]),
                "g_star": json_num(report.right_values[i]),
                "t_min": json_num(schedule.value(i)),
            })).collect::<Vec<_>>(),
        })),
    };
    emit(text, args.output_file.as_deref())
}

/// Per-offer masses of the worst-case three-point distribution on
/// `{0, T(i), L}` for the general variance family, rows i = 1..n-1
/// (offer i's distribution is certified at xi = T(i)).
fn figure_masses(args: &FigureArgs) -> CliResult<()> {
    let schedule = robust_stopping::thresholds::thresholds_mvs_general(
        args.mu,
        args.sigma2,
        args.support_upper,
        args.n,
    )?;
    let upper = args.support_upper;
    let tol = 1e-9 * upper.max(1.0);
    let mut rows = Vec::new();
    for i in 1..args.n {
        let xi = schedule.value(i);
        let cert = mvs_worst_case(args.mu, args.sigma2, upper, xi)?;
        let mut mass = [0.0f64; 3];
        for &(x, p) in cert.primal.atoms() {
            if x.abs() <= tol {
                mass[0] += p;
            } else if (x - xi).abs() <= tol {
                mass[1] += p;
            } else if (x - upper).abs() <= tol {
                mass[2] += p;
            } else {
                return Err(CliError::Verification(format!(
                    "unexpected support point {x} at step {i} (xi = {xi})"
                )));
            }
        }
        rows.push((i, xi, mass));
    }
    let text = match args.out {
        OutFormat::Csv => {
            let mut out = String::from("i,xi,mass_0,mass_xi,mass_L\n");
            for &(i, xi, mass) in &rows {
                out.push_str(&format!(
                    "{i},{},{},{},{}\n",
                    fmt_sig(xi),
                    fmt_sig(mass[0]),
                    fmt_sig(mass[1]),
                    fmt_sig(mass[2])
                ));
            }
            out
        }
        OutFormat::Json => json_pretty(&json!({
            "figure": 5,
            "mu": json_num(args.mu),
            "sigma2": json_num(args.sigma2),
            "L": json_num(args.support_upper),
            "n": args.n,
            "rows": rows.iter().map(|&(i, xi, mass)| json!({
                "i": i,
                "xi": json_num(xi),
                "mass_0": json_num(mass[0]),
                "mass_xi": json_num(mass[1]),
                "mass_L": json_num(mass[2]),
            })).collect::<Vec<_>>(),
        })),
    };
    emit(text, args.output_file.as_deref())
}
