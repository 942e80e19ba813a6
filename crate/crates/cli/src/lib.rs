//! The `alloc-sim` command line.
//!
//! [`run`] parses arguments, dispatches to a subcommand and returns the exit
//! code; the binary only forwards it. Output goes to the given writer so the
//! commands can be exercised without spawning processes.

pub mod config;
pub mod error;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use alloc_core::engine;
use alloc_core::equilibrium::{
    best_response, ratio_report, verify_ne, CertificateJson, DeviationJson, Search, Verdict, DEFAULT_BUDGET,
};
use alloc_core::instances::{generate, GeneratorSpec};
use alloc_core::lottery::{opt, MechanismResult};
use alloc_core::mechanism::{Mechanism, MechanismRegistry, Sampling, Settings};
use alloc_core::model::io::{instance_from_json, instance_to_json, profile_from_json, profile_to_json};
use alloc_core::model::{display_decimal, format_rational, parse_rational, Instance, Rational, Strategy, ZeroPolicy};
use alloc_core::strategies::{default_grid_resolution, truthful, StrategyFamily};
use clap::{Args, Parser, Subcommand};

pub use config::ExperimentConfig;
pub use error::{exit, CliError};

/// Environment variable overriding the engine-run budget of searches.
pub const BUDGET_ENV: &str = "ALLOC_BUDGET";

/// Column order of `poa` output.
pub const POA_HEADER: [&str; 9] =
    ["n", "m", "mechanism", "welfare", "welfare_decimal", "opt", "opt_decimal", "ratio", "ratio_decimal"];

#[derive(Debug, Parser)]
#[command(name = "alloc-sim", version, about = "Exact simulation of eating allocation mechanisms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an eating mechanism and print depletion events, shares and payoffs.
    Simulate(Common),
    /// Print the welfare optimum and an optimal assignment.
    Opt(Common),
    /// CSV rows of welfare, optimum and their ratio.
    Poa(Common),
    /// Search one agent's deviations within finite strategy families.
    BestResponse(Common),
    /// Check a profile for profitable deviations within strategy families.
    VerifyNe(Common),
    /// Random Priority: exact enumeration, or Monte Carlo with --samples.
    Rp(Common),
    /// Repeated Random Priority by Monte Carlo.
    Rrp(Common),
    /// Write a generated instance (and its designated profile) as JSON.
    Generate(GenerateArgs),
    /// Draw allocations from the lottery of an eating mechanism.
    Sample(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// Load settings from a JSON experiment config; flags override it.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Write the effective settings as a JSON experiment config.
    #[arg(long, value_name = "PATH")]
    save_config: Option<PathBuf>,
    /// Instance JSON file.
    #[arg(long, value_name = "PATH")]
    instance: Option<PathBuf>,
    /// Named instance generator.
    #[arg(long, value_name = "NAME")]
    generator: Option<String>,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    m: Option<u64>,
    #[arg(long)]
    k: Option<u64>,
    #[arg(long)]
    q: Option<u64>,
    #[arg(long)]
    x: Option<u64>,
    /// Generator epsilon parameter, e.g. 1/4096.
    #[arg(long, value_name = "RATIONAL")]
    eps: Option<String>,
    /// Weight cap of the random generator.
    #[arg(long)]
    w: Option<u64>,
    /// Seed for the random generator and Monte Carlo sampling.
    #[arg(long)]
    seed: Option<u64>,
    /// `truthful`, `bad` (the generator's designated profile) or a profile JSON path.
    #[arg(long, value_name = "PROFILE")]
    profile: Option<String>,
    /// cps, ps, rp or rrp; `poa` also accepts `both` (cps and ps).
    #[arg(long)]
    mechanism: Option<String>,
    /// uniform, lowest-index or fixed:<1-based permutation>.
    #[arg(long, value_name = "POLICY")]
    zero_policy: Option<String>,
    /// Comma-separated families: truthful, single-minded, sequential-greedy,
    /// uniform-greedy, grid:<d>, sequential:<a-b-..>, uniform:<a-b-..>.
    #[arg(long)]
    families: Option<String>,
    /// Tolerance of verify-ne.
    #[arg(long, value_name = "RATIONAL")]
    epsilon: Option<String>,
    /// Monte Carlo sample count.
    #[arg(long)]
    samples: Option<u64>,
    /// Number of allocations drawn by `sample`.
    #[arg(long)]
    repetitions: Option<u64>,
    /// Deviating agent of best-response (1-based).
    #[arg(long)]
    agent: Option<usize>,
    /// Output file (trace, CSV, certificate or instance JSON).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Include every candidate's payoff in search output.
    #[arg(long)]
    dump_candidates: bool,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[command(flatten)]
    common: Common,
    /// Also write the designated profile as JSON.
    #[arg(long, value_name = "PATH")]
    profile_out: Option<PathBuf>,
}

impl Common {
    fn generator_flags(&self) -> Vec<(&'static str, String)> {
        let mut params = Vec::new();
        let ints = [("n", self.n), ("m", self.m), ("k", self.k), ("q", self.q), ("x", self.x), ("w", self.w)];
        for (key, value) in ints {
            if let Some(v) = value {
                params.push((key, v.to_string()));
            }
        }
        if let Some(eps) = &self.eps {
            params.push(("eps", eps.clone()));
        }
        params
    }

    /// Flags merged over the config file, if any.
    fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let base = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        let params = self.generator_flags();
        let generator = match (&self.generator, &base.generator) {
            (Some(name), prior) => {
                let mut spec = match prior {
                    Some(p) if &p.name == name => p.clone(),
                    _ => GeneratorSpec::new(name),
                };
                for (k, v) in params {
                    spec.params.insert(k.into(), v);
                }
                Some(spec)
            }
            (None, Some(prior)) if !params.is_empty() => {
                let mut spec = prior.clone();
                for (k, v) in params {
                    spec.params.insert(k.into(), v);
                }
                Some(spec)
            }
            (None, _) if !params.is_empty() => {
                return Err(CliError::Usage("generator parameters need --generator".into()));
            }
            _ => None,
        };
        let generator = generator.map(|mut g| {
            if let Some(seed) = self.seed {
                g.seed = seed;
            }
            g
        });
        let flags = ExperimentConfig {
            generator,
            instance: self.instance.clone(),
            profile: self.profile.clone(),
            mechanism: self.mechanism.clone(),
            zero_policy: self.zero_policy.clone(),
            families: self.families.clone(),
            epsilon: self.epsilon.clone(),
            seed: self.seed,
            samples: self.samples,
            repetitions: self.repetitions,
            agent: self.agent,
            out: self.out.clone(),
            dump_candidates: self.dump_candidates,
        };
        let mut merged = flags.over(base);
        if self.instance.is_some() && self.generator.is_some() {
            return Err(CliError::Usage("give either --instance or --generator, not both".into()));
        }
        // an explicit source on the command line replaces the other kind from the file
        if self.instance.is_some() {
            merged.generator = None;
        } else if self.generator.is_some() {
            merged.instance = None;
        }
        if let Some(path) = &self.save_config {
            merged.save(path)?;
        }
        Ok(merged)
    }
}

/// Parsed inputs shared by the subcommands.
struct Context {
    config: ExperimentConfig,
    instance: Instance,
    designated: Option<Vec<Strategy>>,
    source: String,
    policy: ZeroPolicy,
    registry: MechanismRegistry,
}

impl Context {
    fn new(config: ExperimentConfig) -> Result<Self, CliError> {
        let (instance, designated, source) = match (&config.instance, &config.generator) {
            (Some(path), None) => (instance_from_json(&read(path)?)?, None, path.display().to_string()),
            (None, Some(spec)) => {
                let g = generate(spec)?;
                (g.instance, g.bad_profile, spec.name.clone())
            }
            (Some(_), Some(_)) => return Err(CliError::Usage("give either --instance or --generator, not both".into())),
            (None, None) => return Err(CliError::Usage("an instance is required: --instance PATH or --generator NAME".into())),
        };
        let policy = match &config.zero_policy {
            Some(text) => ZeroPolicy::parse(text)?,
            None => ZeroPolicy::default(),
        };
        policy.check(instance.m())?;
        Ok(Context { config, instance, designated, source, policy, registry: MechanismRegistry::builtin() })
    }

    /// The designated profile when the generator has one, else truthful reports.
    fn profile(&self) -> Result<Vec<Strategy>, CliError> {
        self.profile_or(if self.designated.is_some() { "bad" } else { "truthful" })
    }

    fn profile_or(&self, default: &str) -> Result<Vec<Strategy>, CliError> {
        let choice = self.config.profile.as_deref().unwrap_or(default);
        match choice {
            "truthful" => Ok(self.instance.true_valuations().iter().map(truthful).collect()),
            "bad" => self
                .designated
                .clone()
                .ok_or_else(|| CliError::Usage(format!("{} has no designated profile", self.source))),
            path => {
                let profile = profile_from_json(&read(Path::new(path))?, self.instance.n(), self.instance.m())?;
                Ok(profile)
            }
        }
    }

    fn mechanism(&self, default: &str) -> Result<&dyn Mechanism, CliError> {
        let name = self.config.mechanism.as_deref().unwrap_or(default);
        Ok(self.registry.get(name)?)
    }

    fn eating_mechanism(&self) -> Result<&dyn Mechanism, CliError> {
        let m = self.mechanism("cps")?;
        if !matches!(m.name(), "cps" | "ps") {
            return Err(CliError::Usage(format!("this command needs an eating mechanism (cps or ps), got {}", m.name())));
        }
        Ok(m)
    }

    fn seed(&self) -> u64 {
        self.config.seed.unwrap_or(0)
    }

    /// Exact where possible; Monte Carlo when --samples is given. RRP always samples.
    fn settings_for(&self, mechanism: &str) -> Settings {
        let sampling = match (mechanism, self.config.samples) {
            (_, Some(samples)) => Some(Sampling { samples, seed: self.seed() }),
            ("rrp", None) => Some(Sampling { seed: self.seed(), ..Sampling::default() }),
            _ => None,
        };
        Settings { policy: self.policy.clone(), sampling }
    }

    fn families(&self) -> Result<Vec<StrategyFamily>, CliError> {
        match &self.config.families {
            Some(text) => StrategyFamily::parse_list(text).map_err(CliError::Usage),
            None => {
                let mut f = vec![
                    StrategyFamily::Truthful,
                    StrategyFamily::SingleMinded,
                    StrategyFamily::SequentialGreedy,
                    StrategyFamily::UniformGreedy,
                ];
                if let Some(d) = default_grid_resolution(self.instance.m()) {
                    f.push(StrategyFamily::GridProportional(d));
                }
                Ok(f)
            }
        }
    }

    fn search(&self) -> Result<Search, CliError> {
        Ok(Search::new(self.families()?).with_budget(budget()?).keep_candidates(self.config.dump_candidates))
    }

    fn label(&self, agent: usize) -> String {
        let name = self.instance.labels().and_then(|l| l.agents.as_ref()).and_then(|a| a.get(agent));
        match name {
            Some(name) => format!("agent {} ({name})", agent + 1),
            None => format!("agent {}", agent + 1),
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn budget() -> Result<u64, CliError> {
    match std::env::var(BUDGET_ENV) {
        Ok(text) => text
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{BUDGET_ENV} must be a non-negative integer, got {text:?}"))),
        Err(_) => Ok(DEFAULT_BUDGET),
    }
}

fn both(value: &Rational) -> String {
    format!("{} ({})", format_rational(value), display_decimal(value))
}

fn io(e: std::io::Error) -> CliError {
    CliError::Io(e.to_string())
}

/// Parses `args` (including the program name), runs the command and
/// returns its exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    if args.len() <= 1 {
        let mut cmd = <Cli as clap::CommandFactory>::command();
        let _ = writeln!(err, "{}", cmd.render_usage());
        let _ = writeln!(err, "run `alloc-sim --help` for the list of subcommands");
        return exit::USAGE;
    }
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    exit::OK
                }
                ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    let _ = write!(err, "{e}");
                    exit::USAGE
                }
                _ => {
                    let _ = write!(err, "{e}");
                    exit::USAGE
                }
            };
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.code()
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<i32, CliError> {
    match command {
        Command::Generate(args) => cmd_generate(&args, out),
        Command::Simulate(c) => cmd_simulate(&Context::new(c.resolve()?)?, out),
        Command::Opt(c) => cmd_opt(&Context::new(c.resolve()?)?, out),
        Command::Poa(c) => cmd_poa(&Context::new(c.resolve()?)?, out),
        Command::BestResponse(c) => cmd_best_response(&Context::new(c.resolve()?)?, out),
        Command::VerifyNe(c) => cmd_verify(&Context::new(c.resolve()?)?, out),
        Command::Rp(c) => cmd_lottery(&Context::new(c.resolve()?)?, "rp", out),
        Command::Rrp(c) => cmd_lottery(&Context::new(c.resolve()?)?, "rrp", out),
        Command::Sample(c) => cmd_sample(&Context::new(c.resolve()?)?, out),
    }
}

fn header(ctx: &Context, mechanism: &str, out: &mut dyn Write) -> Result<(), CliError> {
    writeln!(
        out,
        "instance: {} ({} agents, {} items), mechanism: {mechanism}, zero policy: {}",
        ctx.source,
        ctx.instance.n(),
        ctx.instance.m(),
        ctx.policy
    )
    .map_err(io)
}

fn print_payoffs(ctx: &Context, result: &MechanismResult, out: &mut dyn Write) -> Result<(), CliError> {
    writeln!(out, "payoffs:").map_err(io)?;
    for (i, p) in result.payoffs.iter().enumerate() {
        writeln!(out, "  {}: {}", ctx.label(i), both(p)).map_err(io)?;
    }
    writeln!(out, "welfare: {}", both(&result.welfare)).map_err(io)?;
    Ok(())
}

fn cmd_simulate(ctx: &Context, out: &mut dyn Write) -> Result<i32, CliError> {
    let mech = ctx.eating_mechanism()?;
    let profile = ctx.profile_or("truthful")?;
    let result = mech.evaluate(&ctx.instance, &profile, &ctx.settings_for(mech.name()))?;
    let trace = result.trace.as_ref().expect("eating mechanisms return a trace");
    header(ctx, mech.name(), out)?;
    writeln!(out, "depletion events:").map_err(io)?;
    for (k, e) in trace.depletion_events().iter().enumerate() {
        writeln!(out, "  t{} = {}  item {}", k + 1, both(&e.time), e.item + 1).map_err(io)?;
    }
    writeln!(out, "shares:").map_err(io)?;
    for (i, row) in trace.shares().iter().enumerate() {
        let cells: Vec<String> = row.iter().map(both).collect();
        writeln!(out, "  {}: {}", ctx.label(i), cells.join(", ")).map_err(io)?;
    }
    print_payoffs(ctx, &result, out)?;
    if let Some(path) = &ctx.config.out {
        let json = serde_json::to_string_pretty(&trace.to_json()).expect("trace serializes");
        write_file(path, &(json + "\n"))?;
    }
    Ok(exit::OK)
}

fn cmd_opt(ctx: &Context, out: &mut dyn Write) -> Result<i32, CliError> {
    let (value, assignment) = opt(&ctx.instance);
    writeln!(out, "opt: {}", both(&value)).map_err(io)?;
    for (j, i) in assignment.iter().enumerate() {
        writeln!(out, "  item {} -> {}", j + 1, ctx.label(*i)).map_err(io)?;
    }
    Ok(exit::OK)
}

fn cmd_poa(ctx: &Context, out: &mut dyn Write) -> Result<i32, CliError> {
    let names: Vec<&str> = match ctx.config.mechanism.as_deref().unwrap_or("cps") {
        "both" => vec!["cps", "ps"],
        other => vec![other],
    };
    let profile = ctx.profile()?;
    let mut rows = Vec::new();
    for name in names {
        let mech = ctx.registry.get(name)?;
        let r = ratio_report(&ctx.instance, &profile, mech, &ctx.settings_for(name))?;
        let (ratio, ratio_decimal) = match &r.ratio {
            Some(x) => (format_rational(x), display_decimal(x)),
            None => ("inf".to_string(), "inf".to_string()),
        };
        rows.push([
            ctx.instance.n().to_string(),
            ctx.instance.m().to_string(),
            name.to_string(),
            format_rational(&r.welfare),
            display_decimal(&r.welfare),
            format_rational(&r.opt),
            display_decimal(&r.opt),
            ratio,
            ratio_decimal,
        ]);
    }
    let mut buffer = csv::Writer::from_writer(Vec::new());
    buffer.write_record(POA_HEADER).map_err(|e| CliError::Io(e.to_string()))?;
    for row in &rows {
        buffer.write_record(row).map_err(|e| CliError::Io(e.to_string()))?;
    }
    let bytes = buffer.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    match &ctx.config.out {
        Some(path) => write_file(path, std::str::from_utf8(&bytes).expect("csv is utf-8"))?,
        None => out.write_all(&bytes).map_err(io)?,
    }
    Ok(exit::OK)
}

fn cmd_best_response(ctx: &Context, out: &mut dyn Write) -> Result<i32, CliError> {
    let agent = ctx.config.agent.ok_or_else(|| CliError::Usage("best-response needs --agent (1-based)".into()))?;
    if agent == 0 || agent > ctx.instance.n() {
        return Err(CliError::Usage(format!("--agent must lie in 1..={}", ctx.instance.n())));
    }
    let mech = ctx.mechanism("cps")?;
    let profile = ctx.profile()?;
    let settings = ctx.settings_for(mech.name());
    let report = best_response(&ctx.instance, &profile, agent - 1, &ctx.search()?, mech, &settings)?;
    header(ctx, mech.name(), out)?;
    writeln!(out, "families: {}", report.families.join(", ")).map_err(io)?;
    writeln!(out, "{}: baseline {} playing {}", ctx.label(agent - 1), both(&report.baseline_payoff), report.baseline)
        .map_err(io)?;
    writeln!(out, "best: {} playing {}", both(&report.best_payoff), report.best_strategy).map_err(io)?;
    writeln!(out, "gain: {}", both(&report.gain)).map_err(io)?;
    writeln!(out, "candidates evaluated: {}", report.evaluated).map_err(io)?;
    if let Some(path) = &ctx.config.out {
        let json = serde_json::to_string_pretty(&DeviationJson::from_report(&report)).expect("report serializes");
        write_file(path, &(json + "\n"))?;
    }
    Ok(exit::OK)
}

fn cmd_verify(ctx: &Context, out: &mut dyn Write) -> Result<i32, CliError> {
    let mech = ctx.mechanism("cps")?;
    let profile = ctx.profile()?;
    let epsilon = match &ctx.config.epsilon {
        Some(text) => parse_rational(text)?,
        None => Rational::from_integer(0.into()),
    };
    if epsilon < Rational::from_integer(0.into()) {
        return Err(CliError::Usage("--epsilon must be non-negative".into()));
    }
    let settings = ctx.settings_for(mech.name());
    let cert = verify_ne(&ctx.instance, &profile, &epsilon, &ctx.search()?, mech, &settings)?;
    header(ctx, mech.name(), out)?;
    writeln!(out, "families: {}", cert.families.join(", ")).map_err(io)?;
    writeln!(out, "epsilon: {}", both(&cert.epsilon)).map_err(io)?;
    for r in &cert.reports {
        writeln!(
            out,
            "  {}: baseline {}, best {} via {}, gain {}",
            ctx.label(r.agent),
            format_rational(&r.baseline_payoff),
            format_rational(&r.best_payoff),
            r.best_strategy,
            both(&r.gain)
        )
        .map_err(io)?;
    }
    if let Some(path) = &ctx.config.out {
        let json = serde_json::to_string_pretty(&CertificateJson::from_certificate(&cert)).expect("certificate serializes");
        write_file(path, &(json + "\n"))?;
    }
    match &cert.verdict {
        Verdict::Certified => {
            writeln!(out, "certified: epsilon-Nash within the listed families").map_err(io)?;
            Ok(exit::OK)
        }
        Verdict::Refuted { agent, deviation, gain } => {
            writeln!(out, "refuted: {} gains {} by playing {}", ctx.label(*agent), both(gain), deviation).map_err(io)?;
            Ok(exit::REFUTED)
        }
    }
}

fn cmd_lottery(ctx: &Context, name: &str, out: &mut dyn Write) -> Result<i32, CliError> {
    let mech = ctx.registry.get(name)?;
    let profile = ctx.profile_or("truthful")?;
    let result = mech.evaluate(&ctx.instance, &profile, &ctx.settings_for(name))?;
    header(ctx, name, out)?;
    writeln!(out, "method: {}", result.method.tag()).map_err(io)?;
    print_payoffs(ctx, &result, out)?;
    if let Some(se) = result.standard_error {
        writeln!(out, "standard error of welfare: {se:.6e}").map_err(io)?;
    }
    Ok(exit::OK)
}

fn cmd_sample(ctx: &Context, out: &mut dyn Write) -> Result<i32, CliError> {
    let mech = ctx.eating_mechanism()?;
    let profile = ctx.profile_or("truthful")?;
    let result = mech.evaluate(&ctx.instance, &profile, &ctx.settings_for(mech.name()))?;
    let trace = result.trace.as_ref().expect("eating mechanisms return a trace");
    let lottery = trace.lottery();
    header(ctx, mech.name(), out)?;
    writeln!(out, "agent receiving each item (items 1..={}):", ctx.instance.m()).map_err(io)?;
    for r in 0..ctx.config.repetitions.unwrap_or(1) {
        let seed = ctx.seed().wrapping_add(r);
        let owners: Vec<String> =
            engine::sample_allocation(&lottery, seed).iter().map(|i| (i + 1).to_string()).collect();
        writeln!(out, "  seed {seed}: {}", owners.join(" ")).map_err(io)?;
    }
    Ok(exit::OK)
}

fn cmd_generate(args: &GenerateArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let config = args.common.resolve()?;
    let spec = config.generator.clone().ok_or_else(|| CliError::Usage("generate needs --generator NAME".into()))?;
    let g = generate(&spec)?;
    let json = instance_to_json(&g.instance) + "\n";
    match &config.out {
        Some(path) => write_file(path, &json)?,
        None => out.write_all(json.as_bytes()).map_err(io)?,
    }
    if let Some(path) = &args.profile_out {
        let profile = g.bad_profile.ok_or_else(|| CliError::Usage(format!("{} has no designated profile", spec.name)))?;
        write_file(path, &(profile_to_json(&profile) + "\n"))?;
    }
    Ok(exit::OK)
}
