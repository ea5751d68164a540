mod commands;
mod config;
mod draw;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::*;

#[derive(Parser, Debug)]
#[command(name = "graspbench", version, about = "Grasp dataset preparation, metrics and loss checks")]
struct Cli {
    /// JSON file whose keys override the command-line flags.
    #[arg(long, global = true)]
    config: Option<std::path::PathBuf>,
    /// Worker threads (defaults to one per core). Outputs do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Load a Cornell or Jacquard directory (or a canonical file) and write
    /// the canonical dataset.
    Convert(ConvertArgs),
    /// Split a dataset 4:1 into train and test.
    Split(SplitArgs),
    /// Expand a dataset with rotations, translations and brightness changes.
    Augment(AugmentArgs),
    /// Replace background pixels with white using each sample's mask.
    Maskify(MaskifyArgs),
    /// Replace the blue channel with normalized depth.
    Rgd(RgdArgs),
    /// Score predictions with the rectangle metric.
    Evaluate(EvaluateArgs),
    /// Compare analytic loss gradients with finite differences.
    Gradcheck(GradcheckArgs),
    /// Draw ground truth and predictions over the images.
    Visualize(VisualizeArgs),
    /// Predict one grasp per sample from the principal axes of its mask.
    Baseline(BaselineArgs),
    /// Generate seeded synthetic bar scenes.
    Synth(SynthArgs),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (kind, message) = describe(&e);
            let body = serde_json::json!({ "error": { "kind": kind, "message": message } });
            eprintln!("{body}");
            ExitCode::FAILURE
        }
    }
}

fn describe(e: &anyhow::Error) -> (&'static str, String) {
    let message = format!("{e:#}");
    for cause in e.chain() {
        if let Some(g) = cause.downcast_ref::<graspbench::Error>() {
            return (g.kind(), message);
        }
        if let Some(c) = cause.downcast_ref::<CheckFailed>() {
            return (c.kind(), message);
        }
    }
    ("cli", message)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let global = config::Global { seed: cli.seed, workers: cli.workers };
    let file = cli.config.as_deref();
    macro_rules! dispatch {
        ($name:literal, $args:expr, $f:path) => {{
            let (args, global) = config::resolve($args, global, file)?;
            config::init_workers(global.workers)?;
            $f(&args, &global, &config::Recorder::new($name, &args, &global))
        }};
    }
    match cli.command {
        Command::Convert(a) => dispatch!("convert", a, cmd_convert),
        Command::Split(a) => dispatch!("split", a, cmd_split),
        Command::Augment(a) => dispatch!("augment", a, cmd_augment),
        Command::Maskify(a) => dispatch!("maskify", a, cmd_maskify),
        Command::Rgd(a) => dispatch!("rgd", a, cmd_rgd),
        Command::Evaluate(a) => dispatch!("evaluate", a, cmd_evaluate),
        Command::Gradcheck(a) => dispatch!("gradcheck", a, cmd_gradcheck),
        Command::Visualize(a) => dispatch!("visualize", a, cmd_visualize),
        Command::Baseline(a) => dispatch!("baseline", a, cmd_baseline),
        Command::Synth(a) => dispatch!("synth", a, cmd_synth),
    }
}
