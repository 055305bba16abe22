use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use synapse_core::synthetic::{build_suite, SuiteConfig};
use synapse_core::{ArbitratorConfig, WeightingMode};
use synapse_harness::eval::{
    horizon_curves, parse_methods, run_evaluation, run_pool_scaling, run_win_loss,
    selection_accuracy, switching_rows, Aggregation, EvalConfig, Method,
};
use synapse_harness::panel_file::{load_panels, write_panels};
use synapse_harness::report::{emit_report, Format};
use synapse_harness::{HarnessError, Result};

const EXIT_VALIDATION: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Args, Debug)]
struct Common {
    /// Root seed for all sampling.
    #[arg(long, env = "SYNAPSE_SEED", default_value_t = 0, global = true)]
    seed: u64,

    /// Rolling window length (default: min(horizon, 16)).
    #[arg(long, env = "SYNAPSE_WINDOW", global = true)]
    window: Option<usize>,

    /// Samples drawn per timestep across all models.
    #[arg(
        long = "n-total",
        env = "SYNAPSE_N_TOTAL",
        default_value_t = 1500,
        global = true
    )]
    n_total: usize,

    /// Softmax temperature for the zero-score fallback.
    #[arg(
        long,
        env = "SYNAPSE_TEMPERATURE",
        default_value_t = 1.0,
        global = true
    )]
    temperature: f64,

    /// Weighting used by the `synapse` method: dynamic or static-uniform.
    #[arg(long, env = "SYNAPSE_WEIGHTING", default_value = "dynamic", value_parser = parse_weighting, global = true)]
    weighting: WeightingMode,

    /// Worker threads (default: one per core).
    #[arg(long, env = "SYNAPSE_WORKERS", global = true)]
    workers: Option<usize>,

    /// Reject unknown fields in panel files.
    #[arg(long, env = "SYNAPSE_STRICT", global = true)]
    strict: bool,

    /// Aggregation scheme: per-config or per-series.
    #[arg(long, env = "SYNAPSE_AGGREGATION", default_value = "per-config", value_parser = parse_aggregation, global = true)]
    aggregation: Aggregation,

    /// Output format: table, csv or json.
    #[arg(long, env = "SYNAPSE_FORMAT", default_value = "table", value_parser = parse_format, global = true)]
    format: Format,

    /// Write the report here instead of stdout.
    #[arg(long, env = "SYNAPSE_OUT", global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate panel files and report how many panels they hold.
    Validate { input: PathBuf },
    /// Score methods over panels and print aggregated rows.
    Eval {
        input: PathBuf,
        /// Comma-separated methods.
        #[arg(
            long,
            env = "SYNAPSE_METHODS",
            default_value = "synapse,synapse-static,median,mean,per-model,oracle"
        )]
        methods: String,
        /// Also write long-format per-step CRPS here.
        #[arg(long)]
        curves: Option<PathBuf>,
    },
    /// Arbitrate growing model pools and compare with the best single model.
    Scale {
        input: PathBuf,
        /// Comma-separated model order (default: the first panel's order).
        #[arg(long)]
        models: Option<String>,
    },
    /// Per-panel wins, losses and ties of one method against another.
    Winloss {
        input: PathBuf,
        #[arg(long, default_value = "synapse")]
        a: String,
        #[arg(long, default_value = "median")]
        b: String,
    },
    /// Oracle switching frequency per domain and horizon class.
    Oracle { input: PathBuf },
    /// Top-k selection accuracy of the arbitrator and the median ensemble.
    Topk { input: PathBuf },
    /// Write a seeded synthetic regime-switching suite.
    Synth {
        /// Number of panels.
        #[arg(long, default_value_t = 200)]
        panels: usize,
        #[arg(long, default_value_t = 2)]
        min_experts: usize,
        #[arg(long, default_value_t = 6)]
        max_experts: usize,
        /// Destination panel file.
        output: PathBuf,
    },
}

fn parse_weighting(s: &str) -> std::result::Result<WeightingMode, String> {
    match s {
        "dynamic" => Ok(WeightingMode::Dynamic),
        "static-uniform" => Ok(WeightingMode::StaticUniform),
        other => Err(format!("unknown weighting `{other}`")),
    }
}

fn parse_aggregation(s: &str) -> std::result::Result<Aggregation, String> {
    s.parse().map_err(|e: HarnessError| e.to_string())
}

fn parse_format(s: &str) -> std::result::Result<Format, String> {
    s.parse().map_err(|e: HarnessError| e.to_string())
}

#[derive(Parser, Debug)]
#[command(
    name = "synapse",
    version,
    about = "Evaluate dynamic forecast arbitration against baselines and the oracle."
)]
struct Root {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

impl Common {
    fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            arbitrator: ArbitratorConfig {
                n_total: self.n_total,
                window_capacity: self.window,
                softmax_temperature: self.temperature,
                weighting: self.weighting,
                ..ArbitratorConfig::default()
            },
            seed: self.seed,
            workers: self.workers,
            aggregation: self.aggregation,
        }
    }

    fn out(&self) -> Option<&Path> {
        self.out.as_deref()
    }
}

fn run(root: Root) -> Result<()> {
    let c = &root.common;
    let config = c.eval_config();
    match &root.command {
        Command::Validate { input } => {
            let panels = load_panels(input, c.strict)?;
            println!("{}: {} valid panels", input.display(), panels.len());
        }
        Command::Eval {
            input,
            methods,
            curves,
        } => {
            let methods = parse_methods(methods)?;
            let panels = load_panels(input, c.strict)?;
            let eval = run_evaluation(&panels, &methods, &config)?;
            emit_report(&eval.rows, c.format, c.out())?;
            if let Some(path) = curves {
                emit_report(&horizon_curves(&eval.outcomes), c.format, Some(path))?;
            }
        }
        Command::Scale { input, models } => {
            let panels = load_panels(input, c.strict)?;
            let order: Vec<String> = match models {
                Some(list) => list.split(',').map(|s| s.trim().to_string()).collect(),
                None => panels
                    .first()
                    .map(|p| p.model_names().into_iter().map(String::from).collect())
                    .unwrap_or_default(),
            };
            emit_report(
                &run_pool_scaling(&panels, &order, &config)?,
                c.format,
                c.out(),
            )?;
        }
        Command::Winloss { input, a, b } => {
            let panels = load_panels(input, c.strict)?;
            emit_report(&run_win_loss(&panels, a, b, &config)?, c.format, c.out())?;
        }
        Command::Oracle { input } => {
            let panels = load_panels(input, c.strict)?;
            let eval = run_evaluation(&panels, &[Method::Oracle], &config)?;
            emit_report(&switching_rows(&eval.outcomes)?, c.format, c.out())?;
        }
        Command::Topk { input } => {
            let panels = load_panels(input, c.strict)?;
            let eval = run_evaluation(&panels, &[Method::Synapse, Method::Median], &config)?;
            emit_report(
                &selection_accuracy(&eval.outcomes)?.rows(),
                c.format,
                c.out(),
            )?;
        }
        Command::Synth {
            panels,
            min_experts,
            max_experts,
            output,
        } => {
            let suite = SuiteConfig::new(*panels, c.seed).with_experts(*min_experts, *max_experts);
            let generated = build_suite(&suite)?;
            let panels: Vec<_> = generated.into_iter().map(|g| g.panel).collect();
            write_panels(output, &panels)?;
            eprintln!("wrote {} panels to {}", panels.len(), output.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let root = Root::parse();
    match run(root) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() {
                EXIT_VALIDATION
            } else {
                EXIT_RUNTIME
            })
        }
    }
}
