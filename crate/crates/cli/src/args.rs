use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "eeg-inception", version, about = "Train and evaluate EEG-Inception networks on motor-imagery trials")]
pub struct Cli {
    /// TOML run configuration; flags override its values
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads (1 gives bitwise-reproducible runs)
    #[arg(long, global = true, env = "EEGI_THREADS", value_name = "N")]
    pub threads: Option<usize>,

    /// Seed for every random component
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,

    /// More log output (-v info, -vv debug)
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic trial set
    Synth(SynthArgs),
    /// Write a noise-swap augmented copy of a trial set with provenance
    Augment(AugmentArgs),
    /// Train a model and save it with its history
    Train(TrainArgs),
    /// Evaluate a saved model
    Eval(EvalArgs),
    /// Sweep the branch width
    Ablate(AblateArgs),
    /// Leave-one-subject-out evaluation
    Loso(LosoArgs),
    /// Print the parameter count of a configuration
    Params(ParamsArgs),
    /// Print the high-pass filter's second-order sections
    FilterExport(FilterArgs),
    /// Time single-sample inference
    Bench(BenchArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Binary,
    FourClass,
}

#[derive(Args, Debug, Default)]
pub struct ModelFlags {
    /// Architecture preset, replacing the [model] section
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Per-branch width M
    #[arg(long, value_name = "M")]
    pub depth: Option<usize>,
    /// Samples per trial fed to the network
    #[arg(long, value_name = "T")]
    pub time_len: Option<usize>,
}

#[derive(Args, Debug, Default)]
pub struct TrainFlags {
    /// Passes over the training set
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Trials per optimizer step
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Adam learning rate
    #[arg(long = "lr", value_name = "RATE")]
    pub learning_rate: Option<f64>,
    /// Augment the training set to this many times its size (1 = off)
    #[arg(long, value_name = "N")]
    pub augment_factor: Option<usize>,
}

#[derive(Args, Debug, Default)]
pub struct DataFlags {
    /// Trial manifest
    #[arg(long, value_name = "MANIFEST")]
    pub data: Option<PathBuf>,
    /// Held-out manifest; without it `--data` is split
    #[arg(long, value_name = "MANIFEST")]
    pub test: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Run directory
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Trials per class and subject
    #[arg(long)]
    pub n_per_class: Option<usize>,
    /// Number of synthetic subjects
    #[arg(long)]
    pub n_subjects: Option<usize>,
    /// Samples per channel
    #[arg(long, value_name = "T")]
    pub time_len: Option<usize>,
    /// Amplitude of the class rhythm (0 gives a task with no class signal)
    #[arg(long)]
    pub rhythm_amplitude: Option<f64>,
    /// Broadband noise std
    #[arg(long)]
    pub noise_std: Option<f64>,
    /// Std of the noise above the high-band cutoff
    #[arg(long)]
    pub high_noise_std: Option<f64>,
}

#[derive(Args, Debug)]
pub struct AugmentArgs {
    /// Trial manifest
    #[arg(long, value_name = "MANIFEST")]
    pub data: Option<PathBuf>,
    /// Run directory
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Output size as a multiple of the input
    #[arg(long, value_name = "N")]
    pub factor: Option<usize>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataFlags,
    #[command(flatten)]
    pub model: ModelFlags,
    #[command(flatten)]
    pub train: TrainFlags,
    /// Run directory
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[command(flatten)]
    pub data: DataFlags,
    /// Saved model file
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,
    /// Evaluate every trial of `--data` instead of its test part
    #[arg(long)]
    pub all: bool,
    /// Class treated as positive for ROC output
    #[arg(long, value_name = "CLASS")]
    pub positive_class: Option<usize>,
    /// Run directory
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AblateArgs {
    #[command(flatten)]
    pub data: DataFlags,
    #[command(flatten)]
    pub model: ModelFlags,
    #[command(flatten)]
    pub train: TrainFlags,
    /// Comma-separated branch widths
    #[arg(long, value_delimiter = ',', value_name = "M,...")]
    pub depths: Option<Vec<usize>>,
    /// Report sizes only
    #[arg(long)]
    pub no_train: bool,
    /// Run directory
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct LosoArgs {
    /// Trial manifest with at least two subjects
    #[arg(long, value_name = "MANIFEST")]
    pub data: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelFlags,
    #[command(flatten)]
    pub train: TrainFlags,
    /// Class treated as positive for ROC output
    #[arg(long, value_name = "CLASS")]
    pub positive_class: Option<usize>,
    /// Run directory
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ParamsArgs {
    #[command(flatten)]
    pub model: ModelFlags,
    /// Also list per-block totals
    #[arg(long)]
    pub blocks: bool,
}

#[derive(Args, Debug)]
pub struct FilterArgs {
    /// Filter order (even)
    #[arg(long)]
    pub order: Option<usize>,
    /// Cut-off frequency
    #[arg(long, value_name = "HZ")]
    pub cutoff: Option<f64>,
    /// Sample rate
    #[arg(long = "fs", value_name = "HZ")]
    pub sample_rate: Option<f64>,
    /// Write the table here instead of stdout
    #[arg(long, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Time a saved model instead of freshly initialized ones
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,
    #[command(flatten)]
    pub model_flags: ModelFlags,
    /// Comma-separated branch widths to time
    #[arg(long, value_delimiter = ',', value_name = "M,...")]
    pub depths: Option<Vec<usize>>,
    /// Timed forward passes per model
    #[arg(long, value_name = "N")]
    pub samples: Option<usize>,
    /// Run directory
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}
