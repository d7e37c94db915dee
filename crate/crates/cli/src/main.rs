//! Command-line front end for the slitsim crate.
//!
//! Four subcommands: `afshar` runs bench scenarios and exports profiles
//! and summaries, `spin` analyzes a pre/post-selected measurement chain,
//! `ledger` runs determinacy analysis on a timeline, and `sweep` scans
//! one config key. All artifacts are deterministic for a given command
//! line: rerunning reproduces them byte for byte.
//!
//! Exit codes: 0 on success, 2 for configuration or usage errors, 3 when
//! the numerics refuse the requested run, 1 for filesystem failures.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgAction, Parser, Subcommand};
use serde::Serialize;

use slitsim::apparatus::{
    apply_override, parse_config, profile_csv, run_scenario, sample_photons, summary_json,
    AfsharConfig, PhotonTallies, ScenarioResult, SlitState, ARTIFACT_SCHEMA,
};
use slitsim::ledger::{
    analyze, builtin_scenario, format_timeline, parse_timeline, render, IntervalReport,
    BUILTIN_SCENARIOS,
};
use slitsim::twostate::{born_probability, parse_chain, run_chain, MeasurementChain};
use slitsim::Error;

#[derive(Parser)]
#[command(
    name = "slitsim",
    version,
    about = "Two-slit bench scenarios, pre/post-selected spin chains, and timeline determinacy"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Config file of `key = value` lines; missing keys keep defaults.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Config override, repeatable; applied after the file.
    #[arg(long = "override", global = true, value_name = "KEY=VALUE", action = ArgAction::Append)]
    overrides: Vec<String>,

    /// Seed for every stochastic draw.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,

    /// Output directory for artifacts; created on success.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run bench scenarios; writes per-scenario JSON + CSV profiles and
    /// a comparison table.
    Afshar {
        /// Slit selection: both, upper, lower, or all.
        #[arg(long, default_value = "all")]
        slits: String,

        /// Wire grid selection: on, off, or both.
        #[arg(long, default_value = "both")]
        grid: String,

        /// Also draw this many photons per scenario.
        #[arg(long, value_name = "N")]
        photons: Option<u64>,
    },

    /// Analyze a measurement chain, e.g. "pre=x+ steps=Jz post=z+";
    /// writes spin.json.
    Spin {
        /// Chain in the `pre=<state> steps=<basis,...> post=<state>`
        /// grammar.
        chain: String,

        /// Monte Carlo trials.
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
    },

    /// Analyze a timeline's offer/confirmation determinacy; writes
    /// ledger_<name>.json.
    Ledger {
        /// Builtin scenario name or a timeline like
        /// "E; prep S @t0; meas O=U @t1; D".
        timeline: String,
    },

    /// Run one slit/grid scenario across several values of a config key;
    /// writes sweep.csv.
    Sweep {
        /// Config key to vary.
        #[arg(long)]
        key: String,

        /// Comma-separated values for the key.
        #[arg(long, value_name = "V1,V2,...")]
        values: String,

        /// Slit selection: both, upper, or lower.
        #[arg(long, default_value = "both")]
        slits: String,

        /// Wire grid selection: on or off.
        #[arg(long, default_value = "off")]
        grid: String,
    },
}

/// Failure classes mapped to process exit codes.
enum Failure {
    /// Bad command line, config file, override, or grammar input.
    Usage(String),
    /// The configured run is numerically untrustworthy and was refused.
    Numerical(String),
    /// Filesystem trouble.
    Io(String),
}

impl Failure {
    fn exit(&self) -> (u8, &'static str, &str) {
        match self {
            Failure::Usage(m) => (2, "config", m),
            Failure::Numerical(m) => (3, "numerical", m),
            Failure::Io(m) => (1, "io", m),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        match e {
            Error::InvalidConfig(_)
            | Error::Parse { .. }
            | Error::UnknownLabel(_)
            | Error::UnknownScenario(_)
            | Error::InvalidState(_)
            | Error::IncompleteTimeline(_) => Failure::Usage(e.to_string()),
            Error::WindowTooSmall { .. }
            | Error::InsufficientFringes(_)
            | Error::UndefinedConditional(_)
            | Error::InvalidField(_)
            | Error::GridMismatch(_) => Failure::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Failure {
        Failure::Io(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            let (code, label, msg) = failure.exit();
            eprintln!("slitsim: {label} error: {msg}");
            ExitCode::from(code)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let config = resolve_config(&cli)?;
    match &cli.command {
        Command::Afshar {
            slits,
            grid,
            photons,
        } => cmd_afshar(&cli, &config, slits, grid, *photons),
        Command::Spin { chain, trials } => cmd_spin(&cli, chain, *trials),
        Command::Ledger { timeline } => cmd_ledger(&cli, timeline),
        Command::Sweep {
            key,
            values,
            slits,
            grid,
        } => cmd_sweep(&cli, &config, key, values, slits, grid),
    }
}

/// Config file, then overrides in order; not yet validated (the
/// simulation entry points validate, so sweeps can pass through
/// transiently incomplete states).
fn resolve_config(cli: &Cli) -> Result<AfsharConfig, Failure> {
    let mut config = match &cli.config {
        None => AfsharConfig::default(),
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Io(format!("cannot read config {}: {e}", path.display())))?;
            parse_config(&text)?
        }
    };
    for (i, pair) in cli.overrides.iter().enumerate() {
        apply_override(&mut config, pair, i + 1)?;
    }
    Ok(config)
}

/// Writes via a temp file and rename, so a crash never leaves a torn
/// artifact behind.
fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<(), Failure> {
    let tmp = dir.join(format!(".{name}.tmp"));
    let path = dir.join(name);
    fs::write(&tmp, contents)
        .map_err(|e| Failure::Io(format!("cannot write {}: {e}", tmp.display())))?;
    fs::rename(&tmp, &path)
        .map_err(|e| Failure::Io(format!("cannot finalize {}: {e}", path.display())))?;
    Ok(())
}

fn parse_slit_filter(s: &str) -> Result<Vec<SlitState>, Failure> {
    if s == "all" {
        return Ok(SlitState::ALL.to_vec());
    }
    let one: SlitState = s
        .parse()
        .map_err(|_| Failure::Usage(format!("--slits expects both|upper|lower|all, got {s:?}")))?;
    Ok(vec![one])
}

fn parse_grid_filter(s: &str, allow_both: bool) -> Result<Vec<bool>, Failure> {
    match s {
        "off" => Ok(vec![false]),
        "on" => Ok(vec![true]),
        "both" if allow_both => Ok(vec![false, true]),
        _ => {
            let forms = if allow_both { "on|off|both" } else { "on|off" };
            Err(Failure::Usage(format!("--grid expects {forms}, got {s:?}")))
        }
    }
}

fn scenario_stem(slits: SlitState, grid_on: bool) -> String {
    format!(
        "{}_{}",
        slits.name(),
        if grid_on { "gridon" } else { "gridoff" }
    )
}

/// Stable per-scenario seed offset, independent of which scenarios were
/// selected, so filtered and full runs agree on shared artifacts.
fn scenario_seed(base: u64, slits: SlitState, grid_on: bool) -> u64 {
    let slit_index = SlitState::ALL
        .iter()
        .position(|s| *s == slits)
        .expect("every slit state is enumerated") as u64;
    base.wrapping_add(slit_index * 2 + u64::from(grid_on))
}

fn cmd_afshar(
    cli: &Cli,
    config: &AfsharConfig,
    slits: &str,
    grid: &str,
    photons: Option<u64>,
) -> Result<(), Failure> {
    let slit_states = parse_slit_filter(slits)?;
    let grids = parse_grid_filter(grid, true)?;

    // Compute everything before touching the filesystem: a refused run
    // leaves no partial artifacts.
    let mut runs: Vec<(ScenarioResult, Option<(PhotonTallies, u64)>)> = Vec::new();
    for &slit_state in &slit_states {
        for &grid_on in &grids {
            let result = run_scenario(config, slit_state, grid_on)?;
            let tallies = photons.map(|n| {
                let seed = scenario_seed(cli.seed, slit_state, grid_on);
                (sample_photons(&result, n, seed), seed)
            });
            runs.push((result, tallies));
        }
    }

    let table = comparison_table(config, &runs);
    fs::create_dir_all(&cli.out)
        .map_err(|e| Failure::Io(format!("cannot create {}: {e}", cli.out.display())))?;
    for (result, tallies) in &runs {
        let stem = scenario_stem(result.slits, result.grid_on);
        let summary = summary_json(config, result, tallies.as_ref().map(|(t, s)| (t, *s)));
        write_atomic(&cli.out, &format!("{stem}.json"), &summary)?;
        write_atomic(
            &cli.out,
            &format!("{stem}_sigma1.csv"),
            &profile_csv(config, &result.sigma1_profile),
        )?;
        write_atomic(
            &cli.out,
            &format!("{stem}_sigma2.csv"),
            &profile_csv(config, &result.image_profile),
        )?;
    }
    write_atomic(&cli.out, "comparison.txt", &table)?;

    print!("{table}");
    println!("wrote {} scenario(s) to {}", runs.len(), cli.out.display());
    Ok(())
}

fn comparison_table(
    config: &AfsharConfig,
    runs: &[(ScenarioResult, Option<(PhotonTallies, u64)>)],
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# schema: {ARTIFACT_SCHEMA}");
    let _ = writeln!(out, "# config: {}", config.summary_line());
    let _ = writeln!(
        out,
        "{:<6} {:<5} {:>11} {:>11} {:>11} {:>11} {:>11} {:>10}",
        "slits", "grid", "visibility", "blocked", "flux_U'", "flux_L'", "spill", "residual"
    );
    for (r, _) in runs {
        let _ = writeln!(
            out,
            "{:<6} {:<5} {:>11.6} {:>11.4e} {:>11.6} {:>11.6} {:>11.4e} {:>10.1e}",
            r.slits.name(),
            if r.grid_on { "on" } else { "off" },
            r.visibility,
            r.blocked_fraction,
            r.flux_u_prime,
            r.flux_l_prime,
            r.spill,
            r.conservation_residual()
        );
    }
    out
}

#[derive(Serialize)]
struct SequenceRow {
    outcomes: Vec<String>,
    probability: f64,
    count: u64,
    frequency: f64,
}

#[derive(Serialize)]
struct StepRow {
    basis: String,
    outcomes: [String; 2],
    probability: [f64; 2],
    frequency: [f64; 2],
}

#[derive(Serialize)]
struct SpinReport {
    schema: u32,
    chain: String,
    seed: u64,
    trials: u64,
    accepted: u64,
    acceptance_probability: f64,
    acceptance_rate: f64,
    sequences: Vec<SequenceRow>,
    steps: Vec<StepRow>,
}

/// Exact distribution of a chain's outcome sequences: cascade the Born
/// rule through the steps, weight by the post-selection probability, and
/// normalize over the accepted weight.
fn exact_sequences(chain: &MeasurementChain) -> Result<(Vec<(Vec<u8>, f64)>, f64), Error> {
    let steps = chain.steps();
    let mut weighted: Vec<(Vec<u8>, f64)> = Vec::with_capacity(1 << steps.len());
    let mut acceptance = 0.0;
    for index in 0u64..(1 << steps.len()) {
        let mut state = chain.pre().clone();
        let mut seq = Vec::with_capacity(steps.len());
        let mut weight = 1.0;
        for (s, basis) in steps.iter().enumerate() {
            let k = ((index >> s) & 1) as u8;
            weight *= born_probability(&state, basis, k as usize)?;
            state = basis.state(k as usize).clone();
            seq.push(k);
        }
        if let Some((basis, idx)) = chain.post() {
            weight *= born_probability(&state, basis, *idx)?;
        }
        acceptance += weight;
        weighted.push((seq, weight));
    }
    weighted.sort_by(|a, b| a.0.cmp(&b.0));
    if acceptance > 0.0 {
        for (_, w) in &mut weighted {
            *w /= acceptance;
        }
    }
    Ok((weighted, acceptance))
}

fn cmd_spin(cli: &Cli, chain_text: &str, trials: u64) -> Result<(), Failure> {
    let chain = parse_chain(chain_text)?;
    if chain.steps().len() > 20 {
        return Err(Failure::Usage(format!(
            "chains beyond 20 steps are not enumerable, got {}",
            chain.steps().len()
        )));
    }
    let (exact, acceptance) = exact_sequences(&chain).map_err(Failure::from)?;
    let tallies = run_chain(&chain, trials, cli.seed)?;

    let sequences: Vec<SequenceRow> = exact
        .iter()
        .map(|(seq, p)| SequenceRow {
            outcomes: seq
                .iter()
                .zip(chain.steps())
                .map(|(&k, basis)| basis.label(k as usize).to_string())
                .collect(),
            probability: *p,
            count: tallies.sequences().get(seq).copied().unwrap_or(0),
            frequency: tallies
                .sequences()
                .get(seq)
                .map(|&c| c as f64 / tallies.accepted().max(1) as f64)
                .unwrap_or(0.0),
        })
        .collect();

    let steps: Vec<StepRow> = chain
        .steps()
        .iter()
        .enumerate()
        .map(|(s, basis)| {
            let marginal = |outcome: u8| -> f64 {
                exact
                    .iter()
                    .filter(|(seq, _)| seq[s] == outcome)
                    .map(|(_, p)| p)
                    .sum()
            };
            StepRow {
                basis: basis.name().to_string(),
                outcomes: [basis.label(0).to_string(), basis.label(1).to_string()],
                probability: [marginal(0), marginal(1)],
                frequency: [tallies.step_frequency(s, 0), tallies.step_frequency(s, 1)],
            }
        })
        .collect();

    let report = SpinReport {
        schema: ARTIFACT_SCHEMA,
        chain: chain_text.to_string(),
        seed: cli.seed,
        trials,
        accepted: tallies.accepted(),
        acceptance_probability: acceptance,
        acceptance_rate: tallies.acceptance_rate(),
        sequences,
        steps,
    };

    let mut text = String::new();
    let _ = writeln!(text, "chain     {chain_text}");
    let _ = writeln!(
        text,
        "accepted  {} / {} trials (rate {:.4}, exact {:.4})",
        report.accepted, report.trials, report.acceptance_rate, report.acceptance_probability
    );
    for step in &report.steps {
        let _ = writeln!(
            text,
            "step {:<3} P({})={:.6} P({})={:.6}   sampled {:.6} / {:.6}",
            step.basis,
            step.outcomes[0],
            step.probability[0],
            step.outcomes[1],
            step.probability[1],
            step.frequency[0],
            step.frequency[1]
        );
    }
    if report.steps.is_empty() {
        let _ = writeln!(text, "no intermediate measurements");
    }

    let json = to_json_line(&report);
    fs::create_dir_all(&cli.out)
        .map_err(|e| Failure::Io(format!("cannot create {}: {e}", cli.out.display())))?;
    write_atomic(&cli.out, "spin.json", &json)?;
    print!("{text}");
    println!("wrote spin.json to {}", cli.out.display());
    Ok(())
}

#[derive(Serialize)]
struct LedgerArtifact<'a> {
    schema: u32,
    scenario: &'a str,
    timeline: String,
    reports: &'a [IntervalReport],
}

fn cmd_ledger(cli: &Cli, spec: &str) -> Result<(), Failure> {
    let (name, timeline) = if BUILTIN_SCENARIOS.contains(&spec) {
        (spec, builtin_scenario(spec)?)
    } else {
        ("custom", parse_timeline(spec)?)
    };
    let reports = analyze(&timeline)?;
    let artifact = LedgerArtifact {
        schema: ARTIFACT_SCHEMA,
        scenario: name,
        timeline: format_timeline(&timeline),
        reports: &reports,
    };
    let json = to_json_line(&artifact);

    fs::create_dir_all(&cli.out)
        .map_err(|e| Failure::Io(format!("cannot create {}: {e}", cli.out.display())))?;
    let file = format!("ledger_{name}.json");
    write_atomic(&cli.out, &file, &json)?;

    println!("scenario  {name}");
    println!("events    {}", artifact.timeline);
    print!("{}", render(&reports));
    println!("wrote {file} to {}", cli.out.display());
    Ok(())
}

fn cmd_sweep(
    cli: &Cli,
    base: &AfsharConfig,
    key: &str,
    values: &str,
    slits: &str,
    grid: &str,
) -> Result<(), Failure> {
    let slit_state: SlitState = slits
        .parse()
        .map_err(|_| Failure::Usage(format!("--slits expects both|upper|lower, got {slits:?}")))?;
    let grid_on = parse_grid_filter(grid, false)?[0];
    let entries: Vec<&str> = values.split(',').filter(|v| !v.is_empty()).collect();
    if entries.is_empty() {
        return Err(Failure::Usage("--values lists no values".into()));
    }

    let mut rows: Vec<(String, ScenarioResult)> = Vec::with_capacity(entries.len());
    for (i, value) in entries.iter().enumerate() {
        let mut config = base.clone();
        config.set(key, value, i + 1)?;
        let result = run_scenario(&config, slit_state, grid_on)?;
        rows.push((value.to_string(), result));
    }

    let mut csv = String::new();
    let _ = writeln!(csv, "# schema: {ARTIFACT_SCHEMA}");
    let _ = writeln!(csv, "# base config: {}", base.summary_line());
    let _ = writeln!(
        csv,
        "{key},visibility,blocked_fraction,flux_u_prime,flux_l_prime,spill,conservation_residual"
    );
    for (value, r) in &rows {
        let _ = writeln!(
            csv,
            "{value},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e}",
            r.visibility,
            r.blocked_fraction,
            r.flux_u_prime,
            r.flux_l_prime,
            r.spill,
            r.conservation_residual()
        );
    }

    fs::create_dir_all(&cli.out)
        .map_err(|e| Failure::Io(format!("cannot create {}: {e}", cli.out.display())))?;
    write_atomic(&cli.out, "sweep.csv", &csv)?;
    print!("{csv}");
    println!("wrote sweep.csv to {}", cli.out.display());
    Ok(())
}

fn to_json_line<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize infallibly");
    text.push('\n');
    text
}
