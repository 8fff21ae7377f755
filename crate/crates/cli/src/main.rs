use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use ptladder_cli::config::{preset, ConfigBuilder, ConfigError, Experiment, ExperimentConfig, OutputFormat};
use ptladder_cli::experiments::run_experiment;
use ptladder_cli::output::{csv_bytes, json_bytes, manifest_path, sha256_hex, write_file, RunManifest};

const EXIT_CONFIG: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;
const EXIT_IO: u8 = 3;

/// Spectra, exceptional points and transmission of PT-symmetric ladders.
#[derive(Debug, Parser)]
#[command(name = "ptladder", version)]
struct Args {
    /// Experiment name or preset (fig2-cll, fig2-mll, fig3, fig4, fig6-ladder, fig6-twisted, default).
    target: Option<String>,
    /// Configuration document.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override a key, e.g. `--set lattice.gamma=1.5` or `--set n_cells=40`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output file; defaults to `<experiment>.<format>`.
    #[arg(long, short)]
    out: Option<String>,
    #[arg(long)]
    format: Option<String>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    workers: Option<usize>,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    echo: bool,
}

fn resolve(args: &Args) -> Result<ExperimentConfig, (u8, String)> {
    let config_err = |e: ConfigError| (EXIT_CONFIG, e.to_string());
    let mut b = ConfigBuilder::new();
    let mut experiment = None;
    if let Some(target) = &args.target {
        if preset(target).is_some() {
            b.set("preset", target, None).map_err(config_err)?;
        } else {
            let exp: Experiment = target
                .parse()
                .map_err(|_| (EXIT_CONFIG, format!("unknown experiment or preset `{target}`")))?;
            experiment = Some(exp);
        }
    }
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path).map_err(|e| (EXIT_IO, format!("{}: {e}", path.display())))?;
        b.apply_document(&text)
            .map_err(|e| (EXIT_CONFIG, format!("{}: {e}", path.display())))?;
    }
    if let Some(exp) = experiment {
        b.set("experiment", exp.name(), None).map_err(config_err)?;
    }
    for o in &args.overrides {
        b.set_override(o).map_err(config_err)?;
    }
    if let Some(out) = &args.out {
        b.set("output.path", out, None).map_err(config_err)?;
    }
    if let Some(format) = &args.format {
        b.set("output.format", format, None).map_err(config_err)?;
    }
    if args.workers == Some(0) {
        return Err((EXIT_CONFIG, "--workers: must be at least 1".into()));
    }
    b.build().map_err(config_err)
}

fn execute(args: &Args) -> Result<(), (u8, String)> {
    let config = resolve(args)?;
    if args.echo {
        print!("{}", config.echo());
        return Ok(());
    }
    let workers = args
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| (EXIT_IO, e.to_string()))?;
    let start = Instant::now();
    let table = pool
        .install(|| run_experiment(&config))
        .map_err(|e| (EXIT_NUMERICAL, e.to_string()))?;
    let duration = start.elapsed().as_secs_f64();

    let bytes = match config.format {
        OutputFormat::Csv => csv_bytes(&table).map_err(|e| (EXIT_IO, e.to_string()))?,
        OutputFormat::Json => json_bytes(&table),
    };
    let out = PathBuf::from(config.resolved_path());
    let io_err = |e: std::io::Error| (EXIT_IO, format!("{}: {e}", out.display()));
    write_file(&out, &bytes).map_err(io_err)?;

    let manifest = RunManifest {
        artifact: "ptladder",
        version: env!("CARGO_PKG_VERSION"),
        experiment: config.experiment.name().into(),
        output: out.display().to_string(),
        rows: table.rows.len(),
        failures: table.failures,
        sha256: sha256_hex(&bytes),
        duration_seconds: duration,
        workers,
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        config: config.echo(),
    };
    let mpath = manifest_path(&out);
    let mut mbytes = serde_json::to_vec_pretty(&manifest).expect("in-memory JSON");
    mbytes.push(b'\n');
    write_file(&mpath, &mbytes).map_err(io_err)?;

    eprintln!(
        "{}: {} rows, {} failed cells, {:.2} s -> {}",
        manifest.experiment,
        manifest.rows,
        manifest.failures,
        duration,
        out.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
