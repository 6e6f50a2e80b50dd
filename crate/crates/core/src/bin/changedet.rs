use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use changedet::evaluation::{evaluate_directories, report, to_csv, to_text_table, ReportRow};
use changedet::pipeline::{run_benchmark, DetectOptions};
use changedet::{detect_directory, PipelineConfig, TemporalRoi};

#[derive(Parser)]
#[command(name = "changedet", version, about = "Change detection in video sequences")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Configuration file (TOML key/value table).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured random seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Use a single worker thread.
    #[arg(long)]
    deterministic: bool,
    /// Write per-frame diagnostics as JSON lines.
    #[arg(long)]
    dump_diagnostics: bool,
}

impl RunArgs {
    fn config(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Label every frame of a video and write binary masks.
    Detect {
        /// Frame directory, or a video directory containing `input/`.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Save learned histograms and priors here after the run.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Score masks against ground truth.
    Eval {
        #[arg(long)]
        masks: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        /// Temporal ROI file with the first and last evaluated frame.
        #[arg(long)]
        roi: Option<PathBuf>,
        /// Directory for metrics.csv and metrics.txt.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run and score every video of a benchmark tree.
    RunCdnet {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Restrict to these categories.
        #[arg(long = "category")]
        categories: Vec<String>,
        #[command(flatten)]
        run: RunArgs,
    },
}

fn write_tables(dir: &Path, stem: &str, rows: &[ReportRow]) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let csv = dir.join(format!("{stem}.csv"));
    fs::write(&csv, to_csv(rows)).with_context(|| format!("writing {}", csv.display()))?;
    let txt = dir.join(format!("{stem}.txt"));
    fs::write(&txt, to_text_table(rows)).with_context(|| format!("writing {}", txt.display()))?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Detect {
            input,
            output,
            checkpoint,
            run,
        } => {
            let cfg = run.config()?;
            let options = DetectOptions {
                diagnostics: run.dump_diagnostics,
                checkpoint,
                deterministic: run.deterministic,
            };
            let s = detect_directory(&input, &output, &cfg, &options)?;
            eprintln!(
                "{} frames in {:.1} s ({} reinitializations)",
                s.frames, s.seconds, s.reinits
            );
        }
        Command::Eval {
            masks,
            gt,
            roi,
            output,
        } => {
            let roi = roi.as_deref().map(TemporalRoi::load).transpose()?;
            let (conf, frames) = evaluate_directories(&masks, &gt, roi)?;
            if frames == 0 {
                bail!("no frames to evaluate in {}", gt.display());
            }
            let name = masks
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| "masks".into());
            let rows = [ReportRow {
                name,
                metrics: report(&conf),
            }];
            print!("{}", to_text_table(&rows));
            if let Some(dir) = output {
                write_tables(&dir, "metrics", &rows)?;
            }
        }
        Command::RunCdnet {
            dataset,
            output,
            categories,
            run,
        } => {
            let cfg = run.config()?;
            let options = DetectOptions {
                diagnostics: run.dump_diagnostics,
                checkpoint: None,
                deterministic: run.deterministic,
            };
            let bench = run_benchmark(&dataset, &output, &categories, &cfg, &options, |video, m| {
                eprintln!("{}/{}: F-measure {:.4}", video.category, video.name, m.fmeasure);
            })?;
            let rows = bench.rows();
            if rows.is_empty() {
                bail!("no videos with input/ and groundtruth/ under {}", dataset.display());
            }
            print!("{}", to_text_table(&rows));
            write_tables(&output, "report", &rows)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
