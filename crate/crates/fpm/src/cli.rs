//! Argument parsing for the `fpm` binary.

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use fpm_core::geometry::LedOrder;
use fpm_core::metrics::Region;
use fpm_core::{Backend, InitialGuess, PftMode, ReconConfig, Updater};

use crate::commands::{self, EvaluateArgs, ReportJson};
use crate::CliError;

#[derive(Parser, Debug)]
#[command(name = "fpm", version, about = "Fourier ptychographic simulation and recovery")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Simulate a low-resolution image stack from a JSON config
    Simulate {
        config: PathBuf,
        out: PathBuf,
        /// Noise seed (overrides the config)
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Recover amplitude and phase from a simulated or measured stack
    Reconstruct {
        stack: PathBuf,
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = BackendArg::Fft)]
        backend: BackendArg,
        #[arg(long, value_enum, default_value_t = GuessArg::Ones)]
        guess: GuessArg,
        #[arg(long, default_value_t = 30)]
        iters: usize,
        /// Zero the spectrum outside the synthetic aperture afterwards
        #[arg(long)]
        bandpass: bool,
        /// Object grid factor (derived from the geometry by default)
        #[arg(long)]
        upsampling: Option<usize>,
        #[arg(long, value_enum, default_value_t = OrderArg::CenterOut)]
        led_order: OrderArg,
        #[arg(long, default_value_t = 1e-3)]
        gn_regularizer: f64,
        #[arg(long, value_enum, default_value_t = UpdaterArg::GaussNewton)]
        updater: UpdaterArg,
        /// Also refine the pupil
        #[arg(long)]
        pupil_recovery: bool,
        #[arg(long, value_enum, default_value_t = PftModeArg::Synthesis)]
        pft_mode: PftModeArg,
        /// Seed for the random initial guess
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Split an image into periodic and smooth components
    Decompose { image: PathBuf, out: PathBuf },
    /// Score a reconstruction
    Evaluate {
        recon: PathBuf,
        /// Directory holding the ground truth (e.g. the simulated stack)
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Background rectangle `row0,col0,rows,cols`
        #[arg(long, value_parser = parse_rect)]
        background_region: Option<Region>,
        /// Background line `r0,c0,r1,c1`
        #[arg(long, value_parser = parse_line, conflicts_with = "background_region")]
        background_line: Option<Region>,
        /// Reconstruction of a sub-tile, for the block-consistency figure
        #[arg(long, requires = "origin")]
        sub: Option<PathBuf>,
        /// Top-left corner `row,col` of the sub-tile
        #[arg(long, value_parser = parse_pair, requires = "sub")]
        origin: Option<(usize, usize)>,
        /// Output file (default: RECON/evaluation.json)
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum BackendArg {
    Fft,
    Dct,
    Pft,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum GuessArg {
    Ones,
    Bilinear,
    Bicubic,
    Random,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum OrderArg {
    CenterOut,
    Raster,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum UpdaterArg {
    GaussNewton,
    AlternatingProjection,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum PftModeArg {
    Synthesis,
    ExitWave,
}

fn numbers<const N: usize>(s: &str) -> Result<[usize; N], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != N {
        return Err(format!("expected {N} comma-separated integers, got {s:?}"));
    }
    let mut out = [0; N];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.parse().map_err(|_| format!("{p:?} is not a non-negative integer"))?;
    }
    Ok(out)
}

fn parse_rect(s: &str) -> Result<Region, String> {
    let [row0, col0, rows, cols] = numbers::<4>(s)?;
    Ok(Region::Rect { row0, col0, rows, cols })
}

fn parse_line(s: &str) -> Result<Region, String> {
    let [r0, c0, r1, c1] = numbers::<4>(s)?;
    Ok(Region::Line {
        from: (r0, c0),
        to: (r1, c1),
    })
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let [a, b] = numbers::<2>(s)?;
    Ok((a, b))
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { config, out, seed } => {
            let m = commands::simulate(&config, &out, seed)?;
            eprintln!(
                "wrote {} images ({}x{} tile, object grid x{}) to {}",
                m.files.len(),
                m.geometry.lr_size,
                m.geometry.lr_size,
                m.upsampling,
                out.display()
            );
        }
        Command::Reconstruct {
            stack,
            out,
            backend,
            guess,
            iters,
            bandpass,
            upsampling,
            led_order,
            gn_regularizer,
            updater,
            pupil_recovery,
            pft_mode,
            seed,
        } => {
            let cfg = ReconConfig {
                backend: match backend {
                    BackendArg::Fft => Backend::Fft,
                    BackendArg::Dct => Backend::Dct,
                    BackendArg::Pft => Backend::Pft,
                },
                initial_guess: match guess {
                    GuessArg::Ones => InitialGuess::Ones,
                    GuessArg::Bilinear => InitialGuess::Bilinear,
                    GuessArg::Bicubic => InitialGuess::Bicubic,
                    GuessArg::Random => InitialGuess::Random,
                },
                iterations: iters,
                upsampling,
                bandpass,
                led_order: match led_order {
                    OrderArg::CenterOut => LedOrder::CenterOut,
                    OrderArg::Raster => LedOrder::Raster,
                },
                gn_regularizer,
                updater: match updater {
                    UpdaterArg::GaussNewton => Updater::GaussNewton,
                    UpdaterArg::AlternatingProjection => Updater::AlternatingProjection,
                },
                pupil_recovery,
                pft_mode: match pft_mode {
                    PftModeArg::Synthesis => PftMode::Synthesis,
                    PftModeArg::ExitWave => PftMode::ExitWave,
                },
                seed,
                ..ReconConfig::default()
            };
            let r = commands::reconstruct(&stack, &out, &cfg)?;
            eprintln!(
                "{} backend, {} iterations in {:.2} s, final residual {:.3e}",
                r.backend,
                r.iterations,
                r.wall_time,
                r.residuals.last().copied().unwrap_or(0.0)
            );
        }
        Command::Decompose { image, out } => {
            commands::decompose(&image, &out)?;
            eprintln!("wrote g.pfm, e.pfm and spectra to {}", out.display());
        }
        Command::Evaluate {
            recon,
            truth,
            background_region,
            background_line,
            sub,
            origin,
            out,
        } => {
            let args = EvaluateArgs {
                recon,
                truth,
                background: background_region.or(background_line),
                sub: sub.zip(origin),
                out,
            };
            let report = commands::evaluate(&args)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&ReportJson::from(&report)).expect("serialisable")
            );
        }
    }
    Ok(())
}
