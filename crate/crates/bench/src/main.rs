use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dsa_bench::experiments::{self, SweepAxis};
use dsa_bench::run::default_out_dir;
use dsa_bench::{fetch, plot, presets, records, BenchError, OptimizerId, Overrides, Result, RunConfig, RunOutput};
use dsa_core::data::{default_data_dir, DatasetId};

#[derive(Parser)]
#[command(name = "dsa-bench", version, about = "Benchmarks for detection-based self-adaptive learning rates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug, Default)]
struct Common {
    /// Run configuration (TOML); replaces the preset where one applies.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    epochs: Option<usize>,
    #[arg(long, global = true)]
    batch_size: Option<usize>,
    #[arg(long, global = true)]
    lr: Option<f64>,
    #[arg(long, global = true)]
    beta: Option<f64>,
    #[arg(long, global = true)]
    gamma: Option<f64>,
    /// DSA: one global alpha instead of one per parameter.
    #[arg(long, global = true)]
    no_per_parameter: bool,
    /// DSA: step along the raw gradient instead of its sign.
    #[arg(long, global = true)]
    no_sign_step: bool,
    /// Log per-step miss flags and the cumulative miss rate.
    #[arg(long, global = true)]
    miss_probe: bool,
    /// Directory holding the UCI files.
    #[arg(long, global = true)]
    data_dir: Option<PathBuf>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            epochs: self.epochs,
            batch_size: self.batch_size,
            lr: self.lr,
            beta: self.beta,
            gamma: self.gamma,
            no_per_parameter: self.no_per_parameter,
            no_sign_step: self.no_sign_step,
            miss_probe: self.miss_probe,
            out: None,
        }
    }

    fn data_dir(&self) -> PathBuf {
        self.data_dir.clone().unwrap_or_else(default_data_dir)
    }

    fn out_dir(&self, label: &str) -> PathBuf {
        self.out.clone().unwrap_or_else(|| default_out_dir(label))
    }

    fn loaded_config(&self) -> Result<Option<RunConfig>> {
        self.config.as_deref().map(RunConfig::load).transpose()
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run every configuration of a named preset.
    Case {
        preset: String,
        #[command(flatten)]
        common: Common,
    },
    /// Train the classification MLP on one dataset.
    Train {
        #[arg(long)]
        dataset: Option<String>,
        #[arg(long)]
        optimizer: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Momentum minibatch pre-training, then full-batch DSA.
    Finetune {
        #[arg(long)]
        dataset: String,
        #[arg(long, default_value_t = 180)]
        pretrain_epochs: usize,
        /// Learning-rate and beta flags apply to this phase.
        #[arg(long, default_value_t = 10)]
        finetune_epochs: usize,
        #[command(flatten)]
        common: Common,
    },
    /// DSA, its two ablations and baselines over several seeds.
    Ablate {
        /// A dataset or a case preset.
        target: String,
        #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4")]
        seeds: Vec<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Vary one DSA hyperparameter; one run directory per value.
    Sweep {
        /// lr, alpha0 or beta.
        #[arg(long)]
        axis: String,
        /// Comma-separated values; defaults depend on the axis.
        #[arg(long)]
        values: Option<String>,
        /// Threshold on max|w| (or loss) for iterations-to-tolerance.
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Render SVG charts from a records file.
    Plot {
        records: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Download missing datasets and verify checksums.
    FetchData {
        #[arg(long)]
        verify_only: bool,
        #[arg(long)]
        dataset: Option<String>,
        #[command(flatten)]
        common: Common,
    },
}

fn finish(dir: &Path, outputs: &[RunOutput]) -> Result<()> {
    dsa_bench::write_outputs(dir, outputs)?;
    let rows: Vec<_> = outputs.iter().flat_map(|o| o.records.iter().cloned()).collect();
    plot::write_plots(dir, &rows)?;
    for o in outputs {
        let s = &o.summary;
        println!(
            "run={} optimizer={} iterations={} final_loss={} best_accuracy={} miss_rate={}",
            s.run_id,
            s.optimizer,
            s.iterations,
            s.final_loss.map_or("nan".into(), |l| format!("{l:.6e}")),
            s.best_metrics.map_or("-".into(), |m| format!("{:.2}", m.accuracy)),
            s.miss_rate.map_or("-".into(), |m| format!("{m:.4}")),
        );
    }
    println!("out={}", dir.display());
    Ok(())
}

fn diverged(output: &RunOutput) -> Option<BenchError> {
    let s = &output.summary;
    s.diverged_at.map(|iter| BenchError::Diverged {
        run_id: s.run_id.clone(),
        iter,
        cause: s.failure.clone().unwrap_or_else(|| "non-finite value".into()),
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Case { preset, common } => {
            let outputs = experiments::run_case(&preset, &common.overrides(), &common.data_dir())?;
            finish(&common.out_dir(&preset), &outputs)
        }
        Command::Train {
            dataset,
            optimizer,
            common,
        } => {
            let mut cfg = match common.loaded_config()? {
                Some(cfg) => cfg,
                None => {
                    let dataset: DatasetId = dataset
                        .as_deref()
                        .ok_or_else(|| BenchError::Config("train needs --dataset or --config".into()))?
                        .parse()?;
                    let optimizer: OptimizerId = optimizer
                        .as_deref()
                        .ok_or_else(|| BenchError::Config("train needs --optimizer or --config".into()))?
                        .parse()?;
                    presets::train(dataset, optimizer)
                }
            };
            common.overrides().apply(&mut cfg);
            cfg.validate()?;
            let output = dsa_bench::execute(&cfg, &common.data_dir())?;
            let dir = common
                .out
                .clone()
                .or_else(|| cfg.out.clone().map(PathBuf::from))
                .unwrap_or_else(|| default_out_dir(&cfg.name));
            finish(&dir, std::slice::from_ref(&output))?;
            diverged(&output).map_or(Ok(()), Err)
        }
        Command::Finetune {
            dataset,
            pretrain_epochs,
            finetune_epochs,
            common,
        } => {
            let id: DatasetId = dataset.parse()?;
            let (mut pre, mut fine) = experiments::finetune_plan(id);
            pre.epochs = pretrain_epochs;
            fine.epochs = finetune_epochs;
            if let Some(seed) = common.seed {
                pre.seed = seed;
                fine.seed = seed;
            }
            if let Some(b) = common.batch_size {
                pre.batch_size = Some(b);
            }
            let phase2 = Overrides {
                seed: None,
                epochs: None,
                batch_size: None,
                ..common.overrides()
            };
            phase2.apply(&mut fine);
            let out = experiments::run_finetune(&pre, &fine, &common.data_dir())?;
            let dir = common.out_dir(&pre.name);
            experiments::write_finetune(&dir, &out)?;
            plot::write_plots(&dir, &out.output.records)?;
            finish_line(&dir, &out.output);
            diverged(&out.output).map_or(Ok(()), Err)
        }
        Command::Ablate { target, seeds, common } => {
            let rows = experiments::run_ablation(&target, &seeds, &common.overrides(), &common.data_dir())?;
            let dir = common.out_dir(&format!("ablate-{target}"));
            experiments::write_ablation(&dir, &target, &rows)?;
            print!("{}", std::fs::read_to_string(dir.join("table.md")).unwrap_or_default());
            println!("out={}", dir.display());
            Ok(())
        }
        Command::Sweep {
            axis,
            values,
            tol,
            common,
        } => {
            let axis: SweepAxis = axis.parse()?;
            let values = match values {
                Some(v) => experiments::parse_values(&v)?,
                None => axis.default_values(),
            };
            let mut base = common.loaded_config()?.unwrap_or_else(|| axis.default_base());
            common.overrides().apply(&mut base);
            let points = experiments::run_sweep(axis, &values, &base, tol, &common.data_dir())?;
            let dir = common.out_dir(&format!("sweep-{}", axis.name()));
            experiments::write_sweep(&dir, axis, &points)?;
            let rows: Vec<_> = points
                .iter()
                .flat_map(|(p, o)| {
                    o.records.iter().cloned().map(move |mut r| {
                        r.run_id = p.label.clone();
                        r
                    })
                })
                .collect();
            plot::write_plots(&dir, &rows)?;
            for (p, _) in &points {
                println!(
                    "{} iters_to_tol={}",
                    p.label,
                    p.iters_to_tol.map_or("-".into(), |i| i.to_string())
                );
            }
            println!("out={}", dir.display());
            Ok(())
        }
        Command::Plot { records: path, common } => {
            let rows = records::read_csv(&path)?;
            let dir = common
                .out
                .clone()
                .unwrap_or_else(|| path.parent().map(Path::to_path_buf).unwrap_or_default());
            for p in plot::write_plots(&dir, &rows)? {
                println!("{}", p.display());
            }
            Ok(())
        }
        Command::FetchData {
            verify_only,
            dataset,
            common,
        } => {
            let ids = match dataset {
                Some(d) => vec![d.parse::<DatasetId>()?],
                None => DatasetId::ALL.to_vec(),
            };
            for status in fetch::fetch(&common.data_dir(), &ids, verify_only)? {
                match status {
                    fetch::FetchStatus::Verified(p) => println!("verified {}", p.display()),
                    fetch::FetchStatus::Downloaded(p) => println!("downloaded {}", p.display()),
                }
            }
            Ok(())
        }
    }
}

fn finish_line(dir: &Path, output: &RunOutput) {
    let s = &output.summary;
    println!(
        "run={} optimizer={} iterations={} final_loss={} best_accuracy={}",
        s.run_id,
        s.optimizer,
        s.iterations,
        s.final_loss.map_or("nan".into(), |l| format!("{l:.6e}")),
        s.best_metrics.map_or("-".into(), |m| format!("{:.2}", m.accuracy)),
    );
    println!("out={}", dir.display());
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            eprintln!("{}", BenchError::Config(first.trim_start_matches("error: ").to_string()).report_line());
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.report_line());
            ExitCode::FAILURE
        }
    }
}
