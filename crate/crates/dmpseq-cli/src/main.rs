//! Command-line entry point. Exit codes: 0 success, 2 validation error,
//! 3 backend error, 4 pipeline-stage error.

use clap::{Args, Parser, Subcommand};
use dmpseq::demos::DemoStyle;
use dmpseq::dmp::DmpGains;
use dmpseq::geometry::HeightMode;
use dmpseq_cli::pipeline::{ErrorClass, PipelineError};
use dmpseq_cli::{
    evaluate, learn_primitive, run_pipeline, BackendChoice, DemoSource, EvaluateOptions,
    LearnOptions, PipelineConfig,
};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "dmpseq",
    about = "Vision-language guided motion generation by sequencing dynamic movement primitives"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline: image + instruction -> one-shot trajectory.
    Run(RunArgs),
    /// Run detection and keypoint generation only, emitting the overlay for
    /// visual verification; no motion is generated.
    Verify(RunArgs),
    /// Learn a primitive from a demonstration and store it in a dictionary.
    Learn(LearnArgs),
    /// Batch-evaluate scenarios against their ground truth.
    Evaluate(EvaluateArgs),
    /// Render a scenario's procedural fixture image.
    Fixture(FixtureArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML config file; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    image: Option<PathBuf>,
    #[arg(long)]
    instruction: Option<String>,
    #[arg(long)]
    dict: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Object height in meters.
    #[arg(long)]
    height: Option<f64>,
    /// Safety margin above the object in meters.
    #[arg(long)]
    margin: Option<f64>,
    /// Height integration mode: start_at_height | end_at_height | both_at_height.
    #[arg(long)]
    mode: Option<String>,
    /// Backend: mock | http.
    #[arg(long)]
    backend: Option<String>,
    #[arg(long)]
    mock_rules: Option<PathBuf>,
    #[arg(long)]
    dt: Option<f64>,
    /// Object name hint forwarded to the backend.
    #[arg(long)]
    object_label: Option<String>,
    /// Stop after the keypoint overlay (implied by the verify subcommand).
    #[arg(long)]
    verify_only: bool,
    /// Query the two components in separate backend calls.
    #[arg(long)]
    separate_calls: bool,
    /// Send no image to the backend.
    #[arg(long)]
    text_only: bool,
    /// Clamp out-of-crop keypoints instead of rejecting them.
    #[arg(long)]
    clamp_keypoints: bool,
    /// Record wall-clock stage timings in run.json (nondeterministic).
    #[arg(long)]
    timings: bool,
}

#[derive(Args)]
struct LearnArgs {
    /// Demonstration CSV with header t,x,y,z (seconds, meters).
    #[arg(long, conflicts_with = "builtin")]
    demo_csv: Option<PathBuf>,
    /// Built-in demo style: straight | sawing | downward | forward | line.
    #[arg(long)]
    builtin: Option<String>,
    #[arg(long)]
    keyword: String,
    #[arg(long)]
    dict: PathBuf,
    /// Overwrite an existing entry with the same keyword.
    #[arg(long)]
    force: bool,
    #[arg(long, default_value_t = 50)]
    basis_count: usize,
    #[arg(long, default_value_t = 25.0)]
    alpha_z: f64,
    /// Defaults to alpha_z / 4 (critical damping).
    #[arg(long)]
    beta_z: Option<f64>,
    #[arg(long, default_value_t = 3.0)]
    alpha_s: f64,
    /// Task name stamped on a newly created dictionary.
    #[arg(long, default_value = "object cutting")]
    task: String,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    dict: PathBuf,
    /// Scenario catalog JSON; defaults to the built-in trained cases.
    #[arg(long)]
    catalog: Option<PathBuf>,
    #[arg(long, default_value = "eval")]
    out: PathBuf,
    #[arg(long, default_value_t = 10)]
    runs: usize,
    #[arg(long, default_value_t = 0.002)]
    dt: f64,
    /// Ground-truth downsample count for the discrepancy metric.
    #[arg(long, default_value_t = 100)]
    n_gt: usize,
    /// Backend: mock | http.
    #[arg(long, default_value = "mock")]
    backend: String,
    #[arg(long)]
    http_endpoint: Option<String>,
    #[arg(long)]
    http_model: Option<String>,
    #[arg(long)]
    mock_rules: Option<PathBuf>,
}

#[derive(Args)]
struct FixtureArgs {
    /// Scenario id, e.g. case7.
    #[arg(long)]
    case: Option<String>,
    /// Catalog JSON; defaults to the built-in catalog.
    #[arg(long)]
    catalog: Option<PathBuf>,
    /// Output PNG path.
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Write the built-in catalog JSON here (for editing/extending).
    #[arg(long)]
    export_catalog: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(args, false),
        Command::Verify(args) => cmd_run(args, true),
        Command::Learn(args) => cmd_learn(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Fixture(args) => cmd_fixture(args),
    };
    if let Err(e) = outcome {
        eprintln!("error: {e}");
        std::process::exit(e.class.exit_code());
    }
}

fn validation(detail: impl Into<String>) -> PipelineError {
    PipelineError { stage: "config", detail: detail.into(), class: ErrorClass::Validation }
}

fn cmd_run(args: RunArgs, force_verify: bool) -> Result<(), PipelineError> {
    let mut cfg = match &args.config {
        Some(path) => PipelineConfig::from_toml_file(path).map_err(validation)?,
        None => PipelineConfig::default(),
    };
    if let Some(v) = args.image {
        cfg.image_path = v;
    }
    if let Some(v) = args.instruction {
        cfg.instruction = v;
    }
    if let Some(v) = args.dict {
        cfg.dictionary_path = v;
    }
    if let Some(v) = args.out {
        cfg.output_dir = v;
    }
    if let Some(v) = args.height {
        cfg.object_height_m = v;
    }
    if let Some(v) = args.margin {
        cfg.margin_m = v;
    }
    if let Some(v) = &args.mode {
        cfg.height_mode =
            HeightMode::parse(v).ok_or_else(|| validation(format!("unknown height mode '{v}'")))?;
    }
    if let Some(v) = &args.backend {
        cfg.backend = match v.to_ascii_lowercase().as_str() {
            "mock" => BackendChoice::Mock,
            "http" => BackendChoice::Http,
            other => return Err(validation(format!("unknown backend '{other}'"))),
        };
    }
    if let Some(v) = args.mock_rules {
        cfg.mock_rules_path = Some(v);
    }
    if let Some(v) = args.dt {
        cfg.dt = v;
    }
    if let Some(v) = args.object_label {
        cfg.object_label = Some(v);
    }
    cfg.verify_only = cfg.verify_only || args.verify_only || force_verify;
    cfg.separate_calls = cfg.separate_calls || args.separate_calls;
    cfg.text_only = cfg.text_only || args.text_only;
    cfg.clamp_keypoints = cfg.clamp_keypoints || args.clamp_keypoints;
    cfg.emit_timings = cfg.emit_timings || args.timings;

    let report = run_pipeline(&cfg)?;
    println!("keyword: {}", report.keyword);
    println!("keypoint pairs: {}", report.pairs_px.len());
    if let Some(traj) = &report.trajectory {
        println!("trajectory: {} samples over {:.3} s", traj.len(), traj.duration());
    } else {
        println!("verify-only: no trajectory generated");
    }
    for path in &report.outputs {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_learn(args: LearnArgs) -> Result<(), PipelineError> {
    let source = match (&args.demo_csv, &args.builtin) {
        (Some(path), None) => DemoSource::Csv(path.clone()),
        (None, Some(style)) => DemoSource::Builtin(
            DemoStyle::parse(style)
                .ok_or_else(|| validation(format!("unknown builtin style '{style}'")))?,
        ),
        _ => return Err(validation("provide exactly one of --demo-csv or --builtin")),
    };
    let beta_z = args.beta_z.unwrap_or(args.alpha_z / 4.0);
    let gains = DmpGains::new(args.alpha_z, beta_z, args.alpha_s, 1.0)
        .map_err(|e| validation(e.to_string()))?;
    let outcome = learn_primitive(&LearnOptions {
        source,
        keyword: args.keyword,
        dictionary_path: args.dict.clone(),
        force: args.force,
        basis_count: args.basis_count,
        gains,
        task: args.task,
        demo_dt: 1e-3,
    })?;
    println!(
        "learned '{}' (round-trip RMSE {:.3}% of amplitude; per-axis m: {:.2e} {:.2e} {:.2e})",
        outcome.keyword,
        outcome.rmse_fraction * 100.0,
        outcome.rmse_per_axis[0],
        outcome.rmse_per_axis[1],
        outcome.rmse_per_axis[2]
    );
    println!(
        "dictionary {} now holds {} primitive(s)",
        args.dict.display(),
        outcome.dictionary_len
    );
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<(), PipelineError> {
    let catalog = match &args.catalog {
        Some(path) => dmpseq::metrics::load_catalog(path).map_err(|e| validation(e.to_string()))?,
        None => dmpseq::metrics::builtin_catalog(),
    };
    let backend = match args.backend.to_ascii_lowercase().as_str() {
        "mock" => BackendChoice::Mock,
        "http" => BackendChoice::Http,
        other => return Err(validation(format!("unknown backend '{other}'"))),
    };
    let mut http = dmpseq_cli::HttpSettings::default();
    if let Some(v) = args.http_endpoint {
        http.endpoint = v;
    }
    if let Some(v) = args.http_model {
        http.model = v;
    }
    let report = evaluate(
        &catalog,
        &EvaluateOptions {
            dictionary_path: args.dict,
            output_dir: args.out,
            n_runs: args.runs,
            dt: args.dt,
            n_gt: args.n_gt,
            backend,
            http,
            mock_rules_path: args.mock_rules,
            ..EvaluateOptions::default()
        },
    )?;
    for s in &report.summaries {
        match (s.mean_m, s.std_m) {
            (Some(mean), Some(std)) => println!(
                "{}: ok {}/{}  D = {:.4} m (std {:.2e})",
                s.case_id, s.ok_runs, s.total_runs, mean, std
            ),
            _ => println!("{}: ok {}/{}  (no successful runs)", s.case_id, s.ok_runs, s.total_runs),
        }
    }
    println!("report: {}", report.report_path.display());
    Ok(())
}

fn cmd_fixture(args: FixtureArgs) -> Result<(), PipelineError> {
    let catalog = match &args.catalog {
        Some(path) => dmpseq::metrics::load_catalog(path).map_err(|e| validation(e.to_string()))?,
        None => dmpseq::metrics::extended_catalog(),
    };
    if let Some(path) = &args.export_catalog {
        std::fs::write(path, dmpseq::metrics::catalog_to_json(&catalog))
            .map_err(|e| validation(format!("{}: {e}", path.display())))?;
        println!("wrote {}", path.display());
    }
    match (&args.case, &args.out) {
        (Some(case), Some(out)) => {
            let scenario = catalog
                .iter()
                .find(|s| s.id == *case)
                .ok_or_else(|| validation(format!("no scenario '{case}' in catalog")))?;
            let env = dmpseq::Vec2::new(0.30, 0.18);
            let img = dmpseq_cli::fixture::scenario_image(scenario, env);
            dmpseq_cli::fixture::save_png(&img, out).map_err(validation)?;
            println!("wrote {} ({}x{})", out.display(), img.width(), img.height());
        }
        (None, None) if args.export_catalog.is_some() => {}
        _ => {
            return Err(validation("provide --case and --out (or --export-catalog)"));
        }
    }
    Ok(())
}
