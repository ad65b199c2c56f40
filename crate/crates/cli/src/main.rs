use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fsevideo::config::RunConfig;
use fsevideo::pipeline;
use fsevideo::synth::{MotionKind, SynthSpec};
use fsevideo::Error;
use log::warn;

/// Simulate and reconstruct video from a non-regular sampling sensor.
#[derive(Parser)]
#[command(name = "fsevideo", version)]
struct Cli {
    /// Worker threads (0 = one per core). Does not change any output.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic ground-truth sequence.
    Synthesize {
        /// translate | zoom | rotate | static
        #[arg(long, default_value = "translate")]
        kind: String,
        /// Per-frame motion: `dm,dn` pixels for translate, scale step for
        /// zoom, degrees for rotate.
        #[arg(long, default_value = "1,0", allow_hyphen_values = true)]
        rate: String,
        #[arg(long, default_value_t = 20)]
        frames: usize,
        #[arg(long, default_value_t = 128)]
        width: usize,
        #[arg(long, default_value_t = 128)]
        height: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample a sequence through a random quarter-sampling mask.
    Simulate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        params: Params,
    },
    /// Reconstruct every frame on its own.
    ReconstructSf {
        #[command(flatten)]
        io: SampledIo,
        #[command(flatten)]
        params: Params,
    },
    /// Reconstruct with samples projected from neighbouring frames.
    ReconstructMf {
        #[command(flatten)]
        io: SampledIo,
        /// Write the refined motion vectors as CSV.
        #[arg(long)]
        mv_dump: Option<PathBuf>,
        #[command(flatten)]
        params: Params,
    },
    /// Per-frame PSNR of a sequence against a reference.
    Evaluate {
        #[arg(long)]
        reference: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        params: Params,
    },
    /// PSNR gain of multi-frame over single-frame reconstruction.
    Sweep {
        #[arg(long)]
        reference: PathBuf,
        #[command(flatten)]
        io: SampledIo,
        /// Support counts: `2`, `1,2,4` or `1..8`.
        #[arg(long = "n", default_value = "0..4")]
        n_values: String,
        /// Also write two-column series for plotting.
        #[arg(long)]
        plot_data: bool,
        #[command(flatten)]
        params: Params,
    },
}

#[derive(Args)]
struct SampledIo {
    /// Directory of sampled frames.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    mask: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

/// Config file plus per-key overrides.
#[derive(Args)]
struct Params {
    /// `key = value` file; flags below take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    block_size: Option<usize>,
    #[arg(long)]
    border_width: Option<usize>,
    #[arg(long)]
    dft_size: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    decay_rho: Option<f64>,
    #[arg(long)]
    odc_gamma: Option<f64>,
    #[arg(long)]
    recon_weight_delta: Option<f64>,
    #[arg(long)]
    window_size: Option<usize>,
    #[arg(long)]
    search_range: Option<usize>,
    #[arg(long)]
    margin: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_support: Option<usize>,
}

impl Params {
    fn resolve(&self) -> fsevideo::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        let overrides = [
            ("block_size", self.block_size.map(|v| v.to_string())),
            ("border_width", self.border_width.map(|v| v.to_string())),
            ("dft_size", self.dft_size.map(|v| v.to_string())),
            ("iterations", self.iterations.map(|v| v.to_string())),
            ("decay_rho", self.decay_rho.map(|v| v.to_string())),
            ("odc_gamma", self.odc_gamma.map(|v| v.to_string())),
            (
                "recon_weight_delta",
                self.recon_weight_delta.map(|v| v.to_string()),
            ),
            ("window_size", self.window_size.map(|v| v.to_string())),
            ("search_range", self.search_range.map(|v| v.to_string())),
            ("margin", self.margin.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
            ("n_support", self.n_support.map(|v| v.to_string())),
        ];
        for (key, value) in overrides {
            if let Some(v) = value {
                cfg.set(key, &v)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_) => 2,
        Error::MissingInput(_) => 3,
        Error::Io { .. } => 4,
        Error::Format { .. } => 5,
        Error::DimensionMismatch { .. } => 6,
        Error::EmptySupport => 7,
    }
}

fn run(command: Command) -> fsevideo::Result<()> {
    match command {
        Command::Synthesize {
            kind,
            rate,
            frames,
            width,
            height,
            seed,
            out,
        } => {
            let spec = SynthSpec {
                kind: MotionKind::parse(&kind, &rate)?,
                frames,
                width,
                height,
                seed,
            };
            pipeline::synthesize_to(&spec, &out)?;
        }
        Command::Simulate { input, out, params } => {
            let cfg = params.resolve()?;
            pipeline::simulate(&input, &out, cfg.seed)?;
        }
        Command::ReconstructSf { io, params } => {
            pipeline::reconstruct_sf(&io.input, &io.mask, &io.out, &params.resolve()?)?;
        }
        Command::ReconstructMf {
            io,
            mv_dump,
            params,
        } => {
            let (_, report) = pipeline::reconstruct_mf(
                &io.input,
                &io.mask,
                &io.out,
                &params.resolve()?,
                mv_dump.as_deref(),
            )?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
        }
        Command::Evaluate {
            reference,
            test,
            out,
            params,
        } => {
            let cfg = params.resolve()?;
            let results = pipeline::evaluate(&reference, &test, &out, cfg.margin)?;
            let mean = fsevideo::eval::mean(results.iter().map(|r| r.value));
            println!("mean_psnr = {}", fsevideo::eval::format_db(mean));
        }
        Command::Sweep {
            reference,
            io,
            n_values,
            plot_data,
            params,
        } => {
            let n_values = pipeline::parse_n_values(&n_values)?;
            let result = pipeline::sweep(
                &reference,
                &io.input,
                &io.mask,
                &io.out,
                &n_values,
                &params.resolve()?,
                plot_data,
            )?;
            let mut stdout = std::io::stdout().lock();
            if let Err(e) = result.table.write_summary_csv(&mut stdout) {
                warn!("could not print summary: {e}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match pipeline::with_threads(cli.threads, || run(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
