use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde_json::json;
use twistlab::config::{parse_n_list, Config};
use twistlab::emit::{render, Format};
use twistlab::suites::SuiteOptions;
use twistlab::{check_suite, run_sweep, Budget, Quantity, Suite, SweepOptions, SCHEMA_VERSION};
use twistlab_core::asymmetry::{asym_mc, GroupKind, GroupSpec};
use twistlab_core::opnorm::{opnorm_lower, opnorm_upper};
use twistlab_core::oracles::{fixtures, Fixture};
use twistlab_core::{kp_norm, SplitOperator, TwistedVector};

#[derive(Parser, Debug)]
#[command(name = "twistlab", version, about = "Numerics for the finite-dimensional Kalton–Peck space")]
struct Cli {
    #[command(flatten)]
    common: Common,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// csv, json or svg (sweep only; other commands write json).
    #[arg(long, global = true)]
    format: Option<String>,

    /// `key = value` file whose entries override the flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Quasi-norm of a vector, or operator-norm bounds of a split operator.
    Norm(NormArgs),
    /// Sweep one quantity over n.
    Sweep(SweepArgs),
    /// Run property suites; exit status 0 iff all pass.
    Check(CheckArgs),
    /// Regenerate or verify the oracle fixtures.
    Oracle(OracleArgs),
    /// Monte-Carlo mean of ‖g‖ over a group.
    Asym(AsymArgs),
}

#[derive(Args, Debug)]
struct NormArgs {
    /// Comma-separated a-part.
    #[arg(long, allow_hyphen_values = true)]
    a: Option<String>,
    /// Comma-separated b-part.
    #[arg(long, allow_hyphen_values = true)]
    b: Option<String>,
    /// JSON file {"a": [...], "b": [...]}.
    #[arg(long)]
    input: Option<PathBuf>,
    /// JSON file {"blocks": [[α,β,γ,δ], ...]}; reports operator-norm bounds.
    #[arg(long)]
    op: Option<PathBuf>,
    #[arg(long, default_value_t = 16)]
    restarts: u32,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long)]
    quantity: String,
    /// `4,8,16` or an exponent range `2..12` for powers of two.
    #[arg(long)]
    n: String,
    #[arg(long, default_value = "signed_permutations")]
    group: String,
    #[arg(long, default_value_t = 20)]
    samples: usize,
    #[arg(long, default_value_t = 8)]
    restarts: u32,
    #[arg(long, default_value_t = 10_000)]
    pairs: usize,
    #[arg(long)]
    per_point_ms: Option<u64>,
    #[arg(long)]
    total_ms: Option<u64>,
}

#[derive(Args, Debug)]
struct CheckArgs {
    /// Comma-separated suite names, or `all`.
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 2000)]
    mc_samples: usize,
}

#[derive(Args, Debug)]
struct OracleArgs {
    /// Compare against a fixtures file instead of writing one.
    #[arg(long)]
    verify: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AsymArgs {
    #[arg(long, default_value = "signed_permutations")]
    group: String,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 30)]
    restarts: u32,
}

fn parse_floats(s: &str) -> anyhow::Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().with_context(|| format!("bad number {t:?}")))
        .collect()
}

fn write_out(out: Option<&Path>, body: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => fs::write(p, body).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(body.as_bytes())?;
            Ok(())
        }
    }
}

fn pretty(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

fn run_norm(args: &NormArgs, common: &Common) -> anyhow::Result<bool> {
    if let Some(op_path) = &args.op {
        let op: SplitOperator = serde_json::from_str(&fs::read_to_string(op_path)?)
            .with_context(|| format!("parsing {}", op_path.display()))?;
        let lower = opnorm_lower(&op, args.restarts, common.seed);
        let upper = opnorm_upper(&op);
        let doc = json!({
            "schema": SCHEMA_VERSION,
            "n": op.n(),
            "entry_lower_bound": op.entry_lower_bound(),
            "lower": lower,
            "upper": upper,
        });
        write_out(common.out.as_deref(), &pretty(&doc))?;
        return Ok(true);
    }
    let x: TwistedVector = match (&args.input, &args.a, &args.b) {
        (Some(p), _, _) => serde_json::from_str(&fs::read_to_string(p)?).with_context(|| format!("parsing {}", p.display()))?,
        (None, Some(a), Some(b)) => TwistedVector::new(parse_floats(a)?, parse_floats(b)?)?,
        _ => bail!("give --input, --op, or both --a and --b"),
    };
    let doc = json!({"schema": SCHEMA_VERSION, "vector": x, "kp_norm": kp_norm(&x)});
    write_out(common.out.as_deref(), &pretty(&doc))?;
    Ok(true)
}

fn run_sweep_cmd(args: &mut SweepArgs, common: &Common, cfg: &Config) -> anyhow::Result<bool> {
    if let Some(v) = cfg.get("quantity") {
        args.quantity = v.to_string();
    }
    if let Some(v) = cfg.get("n") {
        args.n = v.to_string();
    }
    if let Some(v) = cfg.get("group") {
        args.group = v.to_string();
    }
    cfg.apply("samples", &mut args.samples)?;
    cfg.apply("restarts", &mut args.restarts)?;
    cfg.apply("pairs", &mut args.pairs)?;
    if let Some(v) = cfg.get("per_point_ms") {
        args.per_point_ms = Some(v.parse()?);
    }
    if let Some(v) = cfg.get("total_ms") {
        args.total_ms = Some(v.parse()?);
    }
    let quantity: Quantity = args.quantity.parse()?;
    let n_list = parse_n_list(&args.n)?;
    let format: Format = common.format.as_deref().unwrap_or("csv").parse()?;
    let opts = SweepOptions {
        group: args.group.parse::<GroupKind>()?,
        samples: args.samples,
        restarts: args.restarts,
        qlc_pairs: args.pairs,
        ..SweepOptions::default()
    };
    let budget = Budget {
        per_point_ms: args.per_point_ms,
        total_ms: args.total_ms,
    };
    let outcome = run_sweep(quantity, &n_list, common.seed, &opts, &budget)?;
    if outcome.partial {
        eprintln!("warning: budget exceeded, sweep is partial");
    }
    let body = render(&outcome.records, format, outcome.partial)?;
    write_out(common.out.as_deref(), &body)?;
    Ok(!outcome.partial)
}

fn run_check(args: &mut CheckArgs, common: &Common, cfg: &Config) -> anyhow::Result<bool> {
    if let Some(v) = cfg.get("suite") {
        args.suite = v.to_string();
    }
    cfg.apply("trials", &mut args.trials)?;
    cfg.apply("mc_samples", &mut args.mc_samples)?;
    if args.trials == 0 {
        bail!("--trials must be >= 1");
    }
    let suites: Vec<Suite> = if args.suite == "all" {
        Suite::ALL.to_vec()
    } else {
        args.suite.split(',').map(|s| s.trim().parse()).collect::<Result<_, _>>()?
    };
    let opts = SuiteOptions {
        mc_samples: args.mc_samples,
        ..SuiteOptions::default()
    };
    let reports: Vec<_> = suites.iter().map(|&s| check_suite(s, args.trials, common.seed, &opts)).collect();
    let all_pass = reports.iter().all(|r| r.passed());
    for r in &reports {
        eprintln!(
            "{} {}: {} trials, {} failures",
            if r.passed() { "PASS" } else { "FAIL" },
            r.suite,
            r.trials,
            r.failures
        );
    }
    let doc = json!({"schema": SCHEMA_VERSION, "seed": common.seed, "passed": all_pass, "suites": reports});
    write_out(common.out.as_deref(), &pretty(&doc))?;
    Ok(all_pass)
}

fn run_oracle(args: &OracleArgs, common: &Common) -> anyhow::Result<bool> {
    let fresh = fixtures()?;
    if let Some(path) = &args.verify {
        let stored: Vec<Fixture> = serde_json::from_str(&fs::read_to_string(path)?)?;
        let mut ok = stored.len() == fresh.len();
        for (s, f) in stored.iter().zip(&fresh) {
            let same = s.operation == f.operation && s.params == f.params && (s.value - f.value).abs() <= 1e-12 * s.value.abs().max(1.0);
            if !same {
                eprintln!("mismatch: {} {} stored {} fresh {}", s.operation, s.params, s.value, f.value);
                ok = false;
            }
        }
        eprintln!("{} fixtures {}", fresh.len(), if ok { "match" } else { "differ" });
        return Ok(ok);
    }
    let body = serde_json::to_string_pretty(&fresh)? + "\n";
    write_out(common.out.as_deref(), &body)?;
    Ok(true)
}

fn run_asym(args: &mut AsymArgs, common: &Common, cfg: &Config) -> anyhow::Result<bool> {
    if let Some(v) = cfg.get("group") {
        args.group = v.to_string();
    }
    cfg.apply("n", &mut args.n)?;
    cfg.apply("samples", &mut args.samples)?;
    cfg.apply("restarts", &mut args.restarts)?;
    let kind: GroupKind = args.group.parse()?;
    let spec = GroupSpec::new(kind, 2 * args.n)?;
    let est = asym_mc(&spec, args.n, args.samples, args.restarts, common.seed)?;
    let doc = json!({
        "schema": SCHEMA_VERSION,
        "group": kind.tag(),
        "n": est.n,
        "samples": est.samples,
        "mean_norm": est.mean_norm,
        "std_error": est.std_error,
        "upper_envelope": est.upper_envelope,
        "rich": est.rich,
        "commutant_dim": est.commutant_dim,
    });
    write_out(common.out.as_deref(), &pretty(&doc))?;
    Ok(true)
}

fn apply_common(common: &mut Common, cfg: &Config) -> anyhow::Result<()> {
    cfg.apply("seed", &mut common.seed)?;
    if let Some(v) = cfg.get("out") {
        common.out = Some(PathBuf::from(v));
    }
    if let Some(v) = cfg.get("format") {
        common.format = Some(v.to_string());
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let Cli { mut common, mut command } = cli;
    let cfg = match &common.config {
        Some(p) => Config::load(p).with_context(|| format!("reading {}", p.display()))?,
        None => Config::default(),
    };
    apply_common(&mut common, &cfg)?;
    match &mut command {
        Command::Norm(a) => run_norm(a, &common),
        Command::Sweep(a) => run_sweep_cmd(a, &common, &cfg),
        Command::Check(a) => run_check(a, &common, &cfg),
        Command::Oracle(a) => run_oracle(a, &common),
        Command::Asym(a) => run_asym(a, &common, &cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
