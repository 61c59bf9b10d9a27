//! `par1` — simulate, estimate and replicate explosive PAR(1) experiments.
//!
//! Exit codes: 0 success, 2 configuration error, 3 path overflow,
//! 4 theory check failed.

mod manifest;
mod pathcsv;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use par1_core::montecarlo::{thread_count_from_env, TheoryCheckReport};
use par1_core::{
    estimate_series, generate, run_experiment_with_threads, sample_limit_a, sample_limit_hat_phi,
    sample_limit_tilde_phi, scaled_error_histogram, simulate_path, theory_check, ExperimentConfig,
    InnovationSpec, LimitLawSample, MCSummary, PARModel, SimulateError, X0Law,
};

#[derive(Parser)]
#[command(name = "par1", version, about = "Explosive PAR(1) time series toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a path and write it as CSV (columns k, x, u)
    Simulate(SimulateArgs),
    /// Estimate PAR(1) coefficients from a path CSV
    Estimate(EstimateArgs),
    /// Run a replicated Monte Carlo experiment
    Mc(McArgs),
    /// Sample a limiting distribution by truncated series
    Limit(LimitArgs),
    /// Merge experiment summaries into one comparison report
    Report(ReportArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Experiment config JSON (model, innovation, x0, n_cycles, master_seed)
    #[arg(long, conflicts_with_all = ["period", "coeffs", "law"])]
    config: Option<PathBuf>,
    /// Period P (inline model)
    #[arg(long)]
    period: Option<usize>,
    /// Comma-separated coefficients a_1..a_P (inline model)
    #[arg(long, allow_hyphen_values = true)]
    coeffs: Option<String>,
    /// Initial value X_0
    #[arg(long)]
    x0: Option<f64>,
    /// Number of cycles n (path length nP)
    #[arg(long, short = 'n')]
    n: Option<usize>,
    /// Innovation law: gaussian | uniform | zero
    #[arg(long)]
    law: Option<String>,
    /// Gaussian sd
    #[arg(long)]
    sd: Option<f64>,
    /// Uniform lower bound
    #[arg(long, allow_hyphen_values = true)]
    lo: Option<f64>,
    /// Uniform upper bound
    #[arg(long, allow_hyphen_values = true)]
    hi: Option<f64>,
    /// Moving-average window minus one
    #[arg(long, short = 'm')]
    m: Option<usize>,
    /// Apply the cos(πk/3)-style modulation
    #[arg(long)]
    modulated: Option<bool>,
    /// Master seed (overrides the config's)
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    /// Path CSV produced by `par1 simulate` (or with the same layout)
    #[arg(long)]
    input: PathBuf,
    /// Period P of the model
    #[arg(long)]
    period: usize,
    /// Include the diagnostic C sums (needs the u column)
    #[arg(long)]
    diagnostics: bool,
    /// Output JSON; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct McArgs {
    /// Experiment config JSON
    #[arg(long)]
    config: PathBuf,
    /// Master seed (overrides the config's)
    #[arg(long)]
    seed: Option<u64>,
    /// Summary JSON output; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// Scaled-error histogram CSV (columns estimator, bin_lo, bin_hi, count)
    #[arg(long)]
    hist_out: Option<PathBuf>,
    /// Histogram bin count
    #[arg(long, default_value_t = 30)]
    bins: usize,
    /// Compare every scaled-error sample against its limit law (KS, 1%)
    #[arg(long)]
    check_theory: bool,
    /// Limit-law draws for --check-theory
    #[arg(long, default_value_t = 2000)]
    draws: usize,
    /// Truncation tolerance for the limit samplers
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Write a run manifest (config digest, seed, outputs) to this file
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum LimitKindArg {
    /// Scaled-error law of â_r (select the phase with --r)
    #[value(name = "a_r")]
    AR,
    /// Scaled-error law of the product estimator φ̃
    Tilde,
    /// Scaled-error law of the lag-P estimator φ̂
    Hat,
}

#[derive(Args)]
struct LimitArgs {
    /// Config JSON providing model, innovation and x0
    #[arg(long)]
    config: PathBuf,
    /// Which limiting law to sample
    #[arg(long, value_enum)]
    kind: LimitKindArg,
    /// Phase r for --kind a_r
    #[arg(long)]
    r: Option<usize>,
    /// Number of draws
    #[arg(long, default_value_t = 10_000)]
    draws: usize,
    /// Geometric tail tolerance choosing the truncation depth
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Master seed (overrides the config's)
    #[arg(long)]
    seed: Option<u64>,
    /// Draws CSV (single `value` column); stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the JSON header (depth, tail bound, rejections) here
    #[arg(long)]
    meta: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Summary JSON files from `par1 mc`
    #[arg(long, num_args = 1.., required = true)]
    inputs: Vec<PathBuf>,
    /// Merged JSON output; stdout shows the text table either way
    #[arg(long)]
    out: Option<PathBuf>,
}

enum CliError {
    Config(String),
    Overflow(usize),
    TheoryFailed,
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Overflow(_) => 3,
            CliError::TheoryFailed => 4,
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Config(msg) => format!("config error: {msg}"),
            CliError::Overflow(step) => format!("path overflow at step {step}"),
            CliError::TheoryFailed => "theory check failed (KS above the 1% critical value)".into(),
            CliError::Io(msg) => format!("io error: {msg}"),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Estimate(args) => cmd_estimate(args),
        Command::Mc(args) => cmd_mc(args),
        Command::Limit(args) => cmd_limit(args),
        Command::Report(args) => cmd_report(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("par1: {}", err.message());
            ExitCode::from(err.code())
        }
    }
}

fn read_to_string(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn load_config(path: &Path) -> Result<(ExperimentConfig, String), CliError> {
    let raw = read_to_string(path)?;
    let config: ExperimentConfig = serde_json::from_str(&raw)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok((config, raw))
}

fn write_or_stdout(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| CliError::Io(e.to_string())),
    }
}

fn inline_config(args: &SimulateArgs) -> Result<ExperimentConfig, CliError> {
    let coeff_text = args
        .coeffs
        .as_deref()
        .ok_or_else(|| CliError::Config("provide --config or --coeffs".into()))?;
    let coeffs: Vec<f64> = coeff_text
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Config(format!("--coeffs: {e}")))?;
    if let Some(p) = args.period {
        if p != coeffs.len() {
            return Err(CliError::Config(format!(
                "--period {p} does not match {} coefficients",
                coeffs.len()
            )));
        }
    }
    let model = PARModel::new(coeffs).map_err(|e| CliError::Config(e.to_string()))?;
    let law = args.law.as_deref().unwrap_or("gaussian");
    let mut json = serde_json::json!({ "law": law, "m": args.m.unwrap_or(0) });
    match law {
        "gaussian" => {
            json["sd"] = args.sd.unwrap_or(1.0).into();
        }
        "uniform" => {
            json["lo"] = args
                .lo
                .ok_or_else(|| CliError::Config("uniform law needs --lo".into()))?
                .into();
            json["hi"] = args
                .hi
                .ok_or_else(|| CliError::Config("uniform law needs --hi".into()))?
                .into();
        }
        "zero" => {}
        other => return Err(CliError::Config(format!("unknown law `{other}`"))),
    }
    if let Some(m) = args.modulated {
        json["modulated"] = m.into();
    }
    let innovation: InnovationSpec =
        serde_json::from_value(json).map_err(|e| CliError::Config(e.to_string()))?;
    Ok(ExperimentConfig {
        model,
        innovation,
        x0: args.x0.unwrap_or(1.0),
        n_cycles: args.n.unwrap_or(20),
        replications: 2,
        master_seed: args.seed,
        scale_rule: Default::default(),
    })
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let mut config = match &args.config {
        Some(path) => load_config(path)?.0,
        None => inline_config(&args)?,
    };
    if let Some(n) = args.n {
        config.n_cycles = n;
    }
    if let Some(x0) = args.x0 {
        config.x0 = x0;
    }
    if let Some(seed) = args.seed {
        config.master_seed = Some(seed);
    }
    let model = &config.model;
    let stream = generate(
        &config.innovation,
        config.n_cycles * model.period(),
        config.seed(),
    )
    .map_err(|e| CliError::Config(e.to_string()))?;
    let path = simulate_path(model, &stream, config.x0, config.n_cycles).map_err(|e| match e {
        SimulateError::OverflowAtStep(k) => CliError::Overflow(k),
        other => CliError::Config(other.to_string()),
    })?;
    println!("phi={} regime={}", model.phi(), model.regime());
    let mut buf = Vec::new();
    pathcsv::write_path(&mut buf, path.x(), stream.values())
        .map_err(|e| CliError::Io(e.to_string()))?;
    write_or_stdout(args.out.as_deref(), &buf)
}

fn cmd_estimate(args: EstimateArgs) -> Result<(), CliError> {
    let raw = read_to_string(&args.input)?;
    let data = pathcsv::read_path(raw.as_bytes()).map_err(CliError::Config)?;
    let innovation = if args.diagnostics {
        match &data.u {
            Some(u) => Some(&u[..]),
            None => {
                return Err(CliError::Config(
                    "--diagnostics needs a complete u column".into(),
                ))
            }
        }
    } else {
        None
    };
    let report = estimate_series(&data.x, args.period, innovation)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let mut json = serde_json::to_vec_pretty(&report).expect("report serializes");
    json.push(b'\n');
    write_or_stdout(args.out.as_deref(), &json)
}

fn resolve_seed(
    config: &mut ExperimentConfig,
    cli_seed: Option<u64>,
    require_explicit: bool,
) -> Result<(), CliError> {
    if let Some(seed) = cli_seed {
        config.master_seed = Some(seed);
    }
    if require_explicit && config.master_seed.is_none() {
        return Err(CliError::Config(
            "--check-theory needs an explicit seed (--seed or master_seed in the config)".into(),
        ));
    }
    Ok(())
}

fn cmd_mc(args: McArgs) -> Result<(), CliError> {
    let (mut config, raw) = load_config(&args.config)?;
    resolve_seed(&mut config, args.seed, args.check_theory)?;

    let summary = run_experiment_with_threads(&config, thread_count_from_env())
        .map_err(|e| CliError::Config(e.to_string()))?;
    let mut summary_json = serde_json::to_vec_pretty(&summary).expect("summary serializes");
    summary_json.push(b'\n');
    write_or_stdout(args.out.as_deref(), &summary_json)?;

    if let Some(hist_path) = &args.hist_out {
        let mut hist_csv = String::from("estimator,bin_lo,bin_hi,count\n");
        for label in config.estimator_labels() {
            let hist = scaled_error_histogram(&summary, &label, args.bins)
                .map_err(|e| CliError::Config(e.to_string()))?;
            for (i, count) in hist.counts.iter().enumerate() {
                hist_csv.push_str(&format!(
                    "{label},{},{},{count}\n",
                    hist.edges[i],
                    hist.edges[i + 1]
                ));
            }
        }
        fs::write(hist_path, hist_csv)
            .map_err(|e| CliError::Io(format!("{}: {e}", hist_path.display())))?;
    }

    if let Some(manifest_path) = &args.manifest {
        let digest = manifest::config_digest(&raw).map_err(|e| CliError::Config(e.to_string()))?;
        let mut outputs = Vec::new();
        if let Some(out) = &args.out {
            outputs.push(out.display().to_string());
        }
        if let Some(hist) = &args.hist_out {
            outputs.push(hist.display().to_string());
        }
        let manifest = manifest::RunManifest::new(digest, config.seed(), outputs);
        let json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
        fs::write(manifest_path, json)
            .map_err(|e| CliError::Io(format!("{}: {e}", manifest_path.display())))?;
    }

    if args.check_theory {
        let report: TheoryCheckReport = theory_check(&config, args.draws, args.tol)
            .map_err(|e| CliError::Config(e.to_string()))?;
        let json = serde_json::to_string_pretty(&report).expect("report serializes");
        println!("{json}");
        if !report.all_pass {
            return Err(CliError::TheoryFailed);
        }
    }
    Ok(())
}

fn cmd_limit(args: LimitArgs) -> Result<(), CliError> {
    let (mut config, _) = load_config(&args.config)?;
    resolve_seed(&mut config, args.seed, false)?;
    let x0_law = X0Law::Fixed(config.x0);
    let seed = config.seed();
    let sample: LimitLawSample = match args.kind {
        LimitKindArg::AR => {
            let r = args
                .r
                .ok_or_else(|| CliError::Config("--kind a_r needs --r".into()))?;
            sample_limit_a(
                &config.model,
                &config.innovation,
                r,
                &x0_law,
                args.tol,
                args.draws,
                seed,
            )
        }
        LimitKindArg::Tilde => sample_limit_tilde_phi(
            &config.model,
            &config.innovation,
            &x0_law,
            args.tol,
            args.draws,
            seed,
        ),
        LimitKindArg::Hat => sample_limit_hat_phi(
            &config.model,
            &config.innovation,
            &x0_law,
            args.tol,
            args.draws,
            seed,
        ),
    }
    .map_err(|e| CliError::Config(e.to_string()))?;

    let header = serde_json::json!({
        "kind": match sample.kind {
            par1_core::LimitKind::ScaledErrorA(r) => format!("a_{r}"),
            par1_core::LimitKind::TildePhi => "phi_tilde".to_string(),
            par1_core::LimitKind::HatPhi => "phi_hat".to_string(),
        },
        "draws": sample.values.len(),
        "truncation_depth": sample.truncation_depth,
        "tail_bound": sample.tail_bound,
        "rejection_count": sample.rejection_count,
    });
    println!("{header}");
    if let Some(meta) = &args.meta {
        fs::write(meta, format!("{header:#}\n"))
            .map_err(|e| CliError::Io(format!("{}: {e}", meta.display())))?;
    }
    let mut csv = String::from("value\n");
    for v in &sample.values {
        csv.push_str(&format!("{v}\n"));
    }
    write_or_stdout(args.out.as_deref(), csv.as_bytes())
}

fn cmd_report(args: ReportArgs) -> Result<(), CliError> {
    let mut blocks = Vec::new();
    for path in &args.inputs {
        let raw = read_to_string(path)?;
        let summary: MCSummary = serde_json::from_str(&raw)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let label = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        blocks.push((label, summary));
    }
    for (label, summary) in &blocks {
        print_table_block(label, summary);
    }
    let merged = serde_json::json!({
        "blocks": blocks
            .iter()
            .map(|(label, summary)| serde_json::json!({"label": label, "summary": summary}))
            .collect::<Vec<_>>(),
    });
    if let Some(out) = &args.out {
        let mut bytes = serde_json::to_vec_pretty(&merged).expect("merged serializes");
        bytes.push(b'\n');
        fs::write(out, bytes).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    }
    Ok(())
}

fn print_table_block(label: &str, summary: &MCSummary) {
    println!(
        "== {label}: phi={} regime={} n={} replications={} scale={:e} ==",
        summary.phi,
        summary.regime,
        summary.n_cycles,
        summary.replications,
        summary.scale_factor_used
    );
    let head: Vec<String> = summary
        .estimators
        .iter()
        .map(|e| e.estimator.clone())
        .collect();
    println!("{:<12}{}", "estimate", pad_row(&head));
    type Selector = fn(&par1_core::EstimatorStats) -> f64;
    let rows: [(&str, Selector); 10] = [
        ("parameter", |e| e.parameter),
        ("mean", |e| e.mean),
        ("median", |e| e.median),
        ("err mean", |e| e.error_mean),
        ("err sigma", |e| e.error_sigma),
        ("u. whisker", |e| e.upper_whisker),
        ("u. hinge", |e| e.upper_hinge),
        ("l. hinge", |e| e.lower_hinge),
        ("l. whisker", |e| e.lower_whisker),
        ("abs 0.95", |e| e.abs_p95),
    ];
    for (name, selector) in rows {
        let cells: Vec<String> = summary
            .estimators
            .iter()
            .map(|e| format!("{:.3e}", selector(e)))
            .collect();
        println!("{name:<12}{}", pad_row(&cells));
    }
    println!(
        "failures={} (overflow {}, zero denominator {}), near-degenerate={}",
        summary.failure_count,
        summary.failures.overflow,
        summary.failures.zero_denominator,
        summary.degenerate_count
    );
    println!();
}

fn pad_row(cells: &[String]) -> String {
    cells
        .iter()
        .map(|c| format!("{c:>12}"))
        .collect::<Vec<_>>()
        .join(" ")
}
