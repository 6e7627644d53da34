use clap::{Args, Parser, Subcommand};
use nmpinv_core::config::{RunConfig, ServiceConfig};
use nmpinv_core::experiment::{
    build_registry, build_system, export_results, train_generators, ArtifactBundle,
    ExperimentContext,
};
use nmpinv_core::polylti::DiscreteTransferFunction;
use nmpinv_core::Error;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_OTHER: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_TRAINING: u8 = 3;
const EXIT_SCENARIO: u8 = 4;
const EXIT_DEGENERATE: u8 = 5;
const EXIT_PORT: u8 = 6;

#[derive(Parser)]
#[command(
    name = "nmpinv",
    version,
    about = "Learned approximate inverses for non-minimum phase tracking"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Collect baseline data and train every configured generator.
    Train(Common),
    /// Run the configured scenarios with a trained artifact and export results.
    Eval(Common),
    /// Print the ZOS and naive approximate inverses of a transfer function JSON file.
    Zos(Common),
    /// Start the tracking service.
    Serve(ServeArgs),
}

#[derive(Args)]
struct Common {
    /// Run config (JSON, optional `extends` preset); for `zos`, a `{"num", "den", "dt"}` file.
    #[arg(long)]
    config: PathBuf,
    /// Artifact bundle path, defaults to `<out>/artifact.json`.
    #[arg(long)]
    artifact: Option<PathBuf>,
    /// Output directory, overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ServeArgs {
    /// Run config whose `service` section is used; defaults apply without one.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Extra artifact bundle to load.
    #[arg(long)]
    artifact: Option<PathBuf>,
    /// Unused by `serve`, accepted for a uniform interface.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8) -> impl Fn(Error) -> Failure {
    move |e| Failure {
        code: match e {
            Error::Config { .. } => EXIT_CONFIG,
            Error::DegenerateApproximation { .. } => EXIT_DEGENERATE,
            _ => code,
        },
        message: e.to_string(),
    }
}

fn io_fail(code: u8) -> impl Fn(std::io::Error) -> Failure {
    move |e| Failure {
        code,
        message: e.to_string(),
    }
}

fn load_config(args: &Common) -> Result<(RunConfig, PathBuf), Failure> {
    let mut cfg = RunConfig::load(&args.config).map_err(fail(EXIT_CONFIG))?;
    if let Some(seed) = args.seed {
        cfg = cfg.with_seed(seed);
    }
    let out = args.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    Ok((cfg, out))
}

fn artifact_path(args: &Common, out: &Path) -> PathBuf {
    args.artifact
        .clone()
        .unwrap_or_else(|| out.join("artifact.json"))
}

fn cmd_train(args: &Common) -> Result<(), Failure> {
    let (cfg, out) = load_config(args)?;
    let (bundle, reports) = train_generators(&cfg).map_err(fail(EXIT_TRAINING))?;
    let path = artifact_path(args, &out);
    bundle.save(&path).map_err(fail(EXIT_TRAINING))?;
    std::fs::create_dir_all(&out).map_err(io_fail(EXIT_TRAINING))?;
    let report =
        serde_json::to_string_pretty(&reports).map_err(|e| fail(EXIT_TRAINING)(e.into()))?;
    std::fs::write(out.join("training_report.json"), report + "\n")
        .map_err(io_fail(EXIT_TRAINING))?;
    for r in &reports {
        log::info!(
            "{}: best val mse {:.3e} at epoch {}",
            r.name,
            r.report.best_val_loss,
            r.report.best_epoch
        );
    }
    log::info!("artifact written to {}", path.display());
    Ok(())
}

fn cmd_eval(args: &Common) -> Result<(), Failure> {
    let (cfg, out) = load_config(args)?;
    if cfg.scenarios.is_empty() {
        log::info!("no scenarios configured");
        return Ok(());
    }
    let path = artifact_path(args, &out);
    let bundle = ArtifactBundle::load(&path).map_err(fail(EXIT_SCENARIO))?;
    if bundle.system != cfg.system {
        log::warn!("artifact system differs from the config; using the artifact's");
    }
    let system = build_system(&bundle.system).map_err(fail(EXIT_SCENARIO))?;
    let registry = build_registry(system.as_ref(), Some(&bundle));
    let ctx = ExperimentContext {
        system,
        registry,
        seed: cfg.seed,
        skip_s: cfg.evaluation.skip_s,
    };
    let mut results = Vec::new();
    for s in &cfg.scenarios {
        log::info!("running scenario {}", s.kind());
        results.extend(ctx.run_scenario(s).map_err(fail(EXIT_SCENARIO))?);
    }
    for r in results.iter().filter(|r| r.diverged) {
        log::warn!("{} diverged on {}", r.strategy, r.scenario);
    }
    export_results(&results, &out).map_err(fail(EXIT_SCENARIO))?;
    log::info!("{} results written to {}", results.len(), out.display());
    Ok(())
}

fn cmd_zos(args: &Common) -> Result<(), Failure> {
    let text = std::fs::read_to_string(&args.config).map_err(io_fail(EXIT_CONFIG))?;
    let tf: DiscreteTransferFunction = serde_json::from_str(&text).map_err(|e| Failure {
        code: EXIT_CONFIG,
        message: format!("{}: {e}", args.config.display()),
    })?;
    let zeros = tf.classify_zeros().map_err(fail(EXIT_OTHER))?;
    let zos = tf.zos_inverse().map_err(fail(EXIT_OTHER))?;
    let naive = tf.naive_approx_inverse().map_err(fail(EXIT_OTHER))?;
    let body = serde_json::json!({
        "zeros": {
            "stable": zeros.stable_zeros.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
            "unstable": zeros.unstable_zeros.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
            "gain": zeros.gain,
        },
        "zos": zos,
        "naive": naive,
    });
    let text = serde_json::to_string_pretty(&body).map_err(|e| fail(EXIT_OTHER)(e.into()))? + "\n";
    match &args.out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(io_fail(EXIT_OTHER))?;
            std::fs::write(dir.join("zos.json"), text).map_err(io_fail(EXIT_OTHER))?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_serve(args: &ServeArgs) -> Result<(), Failure> {
    let mut service = match &args.config {
        Some(p) => RunConfig::load(p).map_err(fail(EXIT_CONFIG))?.service,
        None => ServiceConfig::default(),
    };
    service.artifacts.extend(args.artifact.clone());
    let state = nmpinv_service::AppState::load(service.clone()).map_err(fail(EXIT_CONFIG))?;
    let rt = tokio::runtime::Runtime::new().map_err(io_fail(EXIT_OTHER))?;
    rt.block_on(async move {
        let addr = format!("{}:{}", service.bind, service.port);
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .map_err(|e| Failure {
                code: EXIT_PORT,
                message: format!("cannot bind {addr}: {e}"),
            })?;
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
            log::info!("shutting down");
        };
        nmpinv_service::serve(listener, state, shutdown)
            .await
            .map_err(io_fail(EXIT_OTHER))
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("NMPINV_LOG", "info")).init();
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Zos(a) => cmd_zos(a),
        Command::Serve(a) => cmd_serve(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            log::error!("{}", f.message);
            ExitCode::from(f.code)
        }
    }
}
