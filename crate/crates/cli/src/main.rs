mod commands;
mod manifest;
mod server;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use scatter_crypt::protocol::DecryptMode;
use scatter_crypt::ErrorKind;
use serde::Serialize;

/// Default experiment: a desk-sized scene that runs in seconds.
pub const DESK_CONFIG: &str = include_str!("../../../configs/desk.json");

const THREADS_ENV: &str = "SCATTER_CRYPT_THREADS";

#[derive(Parser)]
#[command(
    name = "scatter-crypt",
    version,
    about = "Optical encryption through a dynamic scattering medium"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the dynamic states of a new medium into a server directory.
    GenMedium(GenMediumArgs),
    /// Compute and store the scattering matrix of every sampled state.
    ComputeSm(StoreArgs),
    /// Register a user credential.
    Register(RegisterArgs),
    /// Encrypt an image for a recipient.
    Encrypt(EncryptArgs),
    /// Decrypt a ciphertext as its recipient.
    Decrypt(DecryptArgs),
    /// Run a key-guessing attack against an issued ciphertext.
    #[command(subcommand)]
    Attack(AttackCommand),
    /// Tile attack reconstructions into a panel and summarize the runs.
    Report(ReportArgs),
    /// Write a synthetic test image.
    SynthImage(SynthArgs),
    /// Convert a CIFAR-10 binary batch into grayscale PGM files.
    CifarToPgm(CifarArgs),
}

#[derive(Args, Serialize)]
pub struct StoreArgs {
    /// Server directory.
    #[arg(long, default_value = "server")]
    pub store: PathBuf,
}

#[derive(Args, Serialize)]
pub struct GenMediumArgs {
    /// Experiment configuration; the built-in desk scene when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 11)]
    pub seed_medium: u64,
    /// Server directory to create.
    #[arg(long, default_value = "server")]
    pub out: PathBuf,
}

#[derive(Args, Serialize)]
pub struct RegisterArgs {
    #[command(flatten)]
    pub store: StoreArgs,
    #[arg(long)]
    pub user: u32,
    #[arg(long)]
    #[serde(skip)]
    pub credential: String,
}

#[derive(Args, Serialize)]
pub struct ServerArgs {
    #[command(flatten)]
    pub store: StoreArgs,
    /// File holding the server seed as decimal text.
    #[arg(long)]
    pub server_seed_file: PathBuf,
}

#[derive(Args, Serialize)]
pub struct EncryptArgs {
    #[command(flatten)]
    pub server: ServerArgs,
    /// Plaintext image (.pgm or .csv) sized like the sensor.
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long)]
    pub sender: u32,
    #[arg(long)]
    pub recipient: u32,
    #[arg(long, default_value_t = 0)]
    pub block: u64,
    /// Override the stored truncation threshold.
    #[arg(long)]
    pub epsilon_rel: Option<f64>,
    /// Ciphertext bundle to write.
    #[arg(long, default_value = "ciphertext.json")]
    pub out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeArg {
    Field,
    Hologram,
}

impl From<ModeArg> for DecryptMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Field => DecryptMode::Field,
            ModeArg::Hologram => DecryptMode::Hologram,
        }
    }
}

#[derive(Args, Serialize)]
pub struct DecryptArgs {
    #[command(flatten)]
    pub server: ServerArgs,
    /// Ciphertext bundle from `encrypt`.
    #[arg(long)]
    pub ciphertext: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    pub credential: String,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Where to write the plaintext (.pgm or .csv).
    #[arg(long, default_value = "decrypted.pgm")]
    pub out: PathBuf,
    /// Original image; when given the SSIM is printed.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[arg(long, default_value_t = 0.4)]
    pub min_ssim: f64,
}

#[derive(Subcommand)]
enum AttackCommand {
    /// Random coefficients over the victim's state subset.
    Random(RandomAttackArgs),
    /// Each user's key tried on every other user's ciphertext.
    Cross(CrossAttackArgs),
}

#[derive(Args, Serialize)]
pub struct RandomAttackArgs {
    #[command(flatten)]
    pub server: ServerArgs,
    #[arg(long)]
    pub ciphertext: PathBuf,
    /// The victim's plaintext, for scoring.
    #[arg(long)]
    pub plaintext: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, default_value_t = 5)]
    pub seed_attack: u64,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Output directory.
    #[arg(long, default_value = "attack-random")]
    pub out: PathBuf,
}

#[derive(Args, Serialize)]
pub struct CrossAttackArgs {
    #[command(flatten)]
    pub server: ServerArgs,
    /// One bundle per user; repeat the flag.
    #[arg(long, required = true)]
    pub ciphertext: Vec<PathBuf>,
    /// Plaintexts in the same order as the ciphertexts.
    #[arg(long, required = true)]
    pub plaintext: Vec<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long, default_value = "attack-cross")]
    pub out: PathBuf,
}

#[derive(Args, Serialize)]
pub struct ReportArgs {
    /// Attack output directories; repeat the flag.
    #[arg(long, required = true)]
    pub attack: Vec<PathBuf>,
    /// Tiles per panel row.
    #[arg(long, default_value_t = 8)]
    pub columns: usize,
    #[arg(long, default_value = "report")]
    pub out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SynthKind {
    Scene,
    BandLimited,
    Blob,
}

#[derive(Args, Serialize)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value = "scene")]
    pub kind: SynthKind,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Width and height in pixels.
    #[arg(long, default_value_t = 32)]
    pub size: usize,
    /// Pass-band radius in cycles/pixel for `band-limited`.
    #[arg(long, default_value_t = 0.08)]
    pub radius: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Serialize)]
pub struct CifarArgs {
    /// CIFAR-10 binary batch, e.g. `data_batch_1.bin`.
    #[arg(long)]
    pub batch: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub limit: usize,
    #[arg(long)]
    pub out: PathBuf,
}

/// Failure with its process exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(scatter_crypt::Error),
}

impl From<scatter_crypt::Error> for CliError {
    fn from(e: scatter_crypt::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(e) => match e.kind() {
                ErrorKind::Validation => 2,
                ErrorKind::Numerical => 3,
                ErrorKind::Io => 4,
                ErrorKind::Auth => 5,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Core(e) => e.fmt(f),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn threads_from_env() -> CliResult<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Usage(format!("{THREADS_ENV}={v:?} is not a thread count"))),
        Err(_) => Ok(None),
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let started_unix = manifest::now();
    let threads = threads_from_env()?;
    if let Some(n) = threads {
        scatter_crypt::set_threads(n);
    }
    let ctx = commands::Context {
        threads,
        started_unix,
    };
    match cli.command {
        Command::GenMedium(a) => commands::gen_medium(&ctx, a),
        Command::ComputeSm(a) => commands::compute_sm(&ctx, a),
        Command::Register(a) => commands::register(&ctx, a),
        Command::Encrypt(a) => commands::encrypt(&ctx, a),
        Command::Decrypt(a) => commands::decrypt(&ctx, a),
        Command::Attack(AttackCommand::Random(a)) => commands::attack_random(&ctx, a),
        Command::Attack(AttackCommand::Cross(a)) => commands::attack_cross(&ctx, a),
        Command::Report(a) => commands::report(&ctx, a),
        Command::SynthImage(a) => commands::synth_image(&ctx, a),
        Command::CifarToPgm(a) => commands::cifar_to_pgm(&ctx, a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
