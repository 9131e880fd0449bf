//! Multi-run drivers: preset cases, two-phase fine-tuning, ablation tables
//! and one-axis sensitivity sweeps.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use dsa_core::data::DatasetId;
use dsa_core::optim::Rule;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{OptimizerId, Overrides, RunConfig};
use crate::error::{config, BenchError, Result};
use crate::presets;
use crate::records::{self, Record};
use crate::run::{self, execute, execute_all, run_phase, summarize, Log, RunOutput, Session};

pub fn run_case(name: &str, overrides: &Overrides, data_dir: &Path) -> Result<Vec<RunOutput>> {
    let mut cfgs = presets::case(name)?;
    for c in &mut cfgs {
        overrides.apply(c);
        c.validate()?;
    }
    execute_all(&cfgs, data_dir)
}

/// Momentum minibatch pre-training followed by full-batch DSA.
pub fn finetune_plan(dataset: DatasetId) -> (RunConfig, RunConfig) {
    let mut pre = presets::train(dataset, OptimizerId::Classic(Rule::Momentum));
    pre.name = format!("{}-finetune", dataset.name());
    pre.epochs = 180;
    pre.batch_size = Some(32);
    let mut fine = presets::train(dataset, OptimizerId::Dsa);
    fine.name = pre.name.clone();
    fine.epochs = 10;
    fine.lr = Some(1e-5);
    fine.beta = Some(0.3);
    (pre, fine)
}

pub struct FinetuneOutput {
    pub pretrain: RunConfig,
    pub output: RunOutput,
}

pub fn run_finetune(pre: &RunConfig, fine: &RunConfig, data_dir: &Path) -> Result<FinetuneOutput> {
    pre.validate()?;
    fine.validate()?;
    if pre.optimizer_id()? == OptimizerId::Dsa {
        return Err(config("fine-tuning pre-trains with a non-DSA optimizer"));
    }
    if fine.optimizer_id()? != OptimizerId::Dsa || fine.batch_size.is_some() {
        return Err(config("fine-tuning phase 2 must be full-batch DSA"));
    }
    if (pre.problem, &pre.dataset, pre.seed) != (fine.problem, &fine.dataset, fine.seed) {
        return Err(config(format!(
            "phase 2 data ({:?}, seed {}) differs from phase 1 ({:?}, seed {})",
            fine.dataset, fine.seed, pre.dataset, pre.seed
        )));
    }
    let started = Instant::now();
    let mut session = Session::new(pre, data_dir)?;
    let mut log = Log::start(&pre.name, &session)?;
    run_phase(&mut session, pre, &mut log)?;
    if log.diverged_at().is_none() {
        run_phase(&mut session, fine, &mut log)?;
    }
    let mut summary = summarize(pre, &session, &log, started)?;
    if fine.epochs > 0 {
        summary.optimizer = format!("{}+{}", pre.optimizer, fine.optimizer);
    }
    Ok(FinetuneOutput {
        pretrain: pre.clone(),
        output: RunOutput {
            config: fine.clone(),
            records: log.records,
            summary,
            params: session.params,
        },
    })
}

pub fn write_finetune(dir: &Path, out: &FinetuneOutput) -> Result<()> {
    run::write_outputs(dir, std::slice::from_ref(&out.output))?;
    let path = dir.join("config.toml");
    std::fs::remove_file(&path).map_err(BenchError::io(&path))?;
    for (name, cfg) in [("pretrain.toml", &out.pretrain), ("finetune.toml", &out.output.config)] {
        let path = dir.join(name);
        std::fs::write(&path, cfg.to_toml()?).map_err(BenchError::io(&path))?;
    }
    Ok(())
}

/// One column of an ablation: a label and the config it runs.
#[derive(Clone, Debug)]
pub struct Variant {
    pub label: String,
    pub config: RunConfig,
}

/// DSA, its two ablations (scalar alpha; raw-gradient step) and baselines,
/// all on `target` — a dataset name or a case preset name. On datasets DSA
/// keeps its defaults (beta 0.1, alpha0 -4.6, i.e. rate ~0.001).
pub fn ablation_variants(target: &str) -> Result<Vec<Variant>> {
    let (base, baselines): (RunConfig, Vec<RunConfig>) = match target.parse::<DatasetId>() {
        Ok(id) => {
            let dsa = presets::train(id, OptimizerId::Dsa);
            let others = [OptimizerId::Classic(Rule::Sgd), OptimizerId::Classic(Rule::Adam), OptimizerId::Hd]
                .into_iter()
                .map(|o| presets::train(id, o))
                .collect();
            (dsa, others)
        }
        Err(_) => {
            let runs = presets::case(target)?;
            let dsa = runs
                .iter()
                .find(|c| c.optimizer_id().ok() == Some(OptimizerId::Dsa) && c.batch_size.is_none())
                .cloned()
                .ok_or_else(|| config(format!("preset `{target}` has no full-batch DSA run")))?;
            let others = runs
                .into_iter()
                .filter(|c| c.optimizer_id().ok() != Some(OptimizerId::Dsa))
                .collect();
            (dsa, others)
        }
    };
    let dsa_variant = |label: &str, per_parameter: bool, sign_step: bool| {
        let mut c = base.clone();
        c.name = label.to_string();
        c.per_parameter = per_parameter;
        c.sign_step = sign_step;
        Variant { label: label.to_string(), config: c }
    };
    let mut out = vec![
        dsa_variant("dsa", true, true),
        dsa_variant("dsa-scalar", false, true),
        dsa_variant("dsa-grad-step", true, false),
    ];
    out.extend(baselines.into_iter().map(|mut c| {
        c.name = c.optimizer.clone();
        Variant { label: c.optimizer.clone(), config: c }
    }));
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AblationRow {
    pub label: String,
    pub optimizer: String,
    pub per_parameter: Option<bool>,
    pub sign_step: Option<bool>,
    pub seeds: usize,
    /// Seed-median of the best test accuracy.
    pub accuracy: Option<f64>,
    /// Metrics of the median-accuracy seed.
    pub f1: Option<(f64, f64)>,
    pub recall: Option<(f64, f64)>,
    pub precision: Option<(f64, f64)>,
    pub final_loss: Option<f64>,
    pub diverged: usize,
}

/// Middle element of the sorted values; for an even count, the lower middle.
pub fn median(values: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    Some(v[(v.len() - 1) / 2])
}

pub fn run_ablation(
    target: &str,
    seeds: &[u64],
    overrides: &Overrides,
    data_dir: &Path,
) -> Result<Vec<AblationRow>> {
    if seeds.is_empty() {
        return Err(config("ablation needs at least one seed"));
    }
    let variants = ablation_variants(target)?;
    let jobs: Vec<(usize, RunConfig)> = variants
        .iter()
        .enumerate()
        .flat_map(|(i, v)| {
            seeds.iter().map(move |&s| {
                let mut c = v.config.clone();
                overrides.apply(&mut c);
                c.seed = s;
                (i, c)
            })
        })
        .collect();
    let outputs: Vec<(usize, RunOutput)> = jobs
        .par_iter()
        .map(|(i, c)| execute(c, data_dir).map(|o| (*i, o)))
        .collect::<Result<_>>()?;
    Ok(variants
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let runs: Vec<&RunOutput> = outputs.iter().filter(|(j, _)| *j == i).map(|(_, o)| o).collect();
            let accs: Vec<f64> = runs
                .iter()
                .filter_map(|o| o.summary.best_metrics.map(|m| m.accuracy))
                .collect();
            let accuracy = median(&accs);
            let at_median = accuracy.and_then(|a| {
                runs.iter()
                    .filter_map(|o| o.summary.best_metrics)
                    .find(|m| m.accuracy == a)
            });
            let is_dsa = v.config.optimizer_id().ok() == Some(OptimizerId::Dsa);
            let losses: Vec<f64> = runs.iter().map(|o| o.summary.final_loss.unwrap_or(f64::NAN)).collect();
            AblationRow {
                label: v.label.clone(),
                optimizer: v.config.optimizer.clone(),
                per_parameter: is_dsa.then_some(v.config.per_parameter),
                sign_step: is_dsa.then_some(v.config.sign_step),
                seeds: runs.len(),
                accuracy,
                f1: at_median.map(|m| (m.f1_min, m.f1_max)),
                recall: at_median.map(|m| (m.recall_min, m.recall_max)),
                precision: at_median.map(|m| (m.precision_min, m.precision_max)),
                final_loss: median(&losses),
                diverged: runs.iter().filter(|o| o.summary.diverged_at.is_some()).count(),
            }
        })
        .collect())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.2}")).unwrap_or_default()
}

fn fmt_range(r: Option<(f64, f64)>) -> String {
    r.map(|(a, b)| format!("{a:.2}~{b:.2}")).unwrap_or_default()
}

fn fmt_flag(f: Option<bool>) -> String {
    f.map(|b| if b { "on" } else { "off" }.to_string()).unwrap_or_default()
}

const TABLE_HEADER: [&str; 10] = [
    "variant",
    "optimizer",
    "per_parameter",
    "sign_step",
    "seeds",
    "accuracy",
    "f1",
    "recall",
    "precision",
    "final_loss",
];

fn table_cells(r: &AblationRow) -> [String; 10] {
    [
        r.label.clone(),
        r.optimizer.clone(),
        fmt_flag(r.per_parameter),
        fmt_flag(r.sign_step),
        r.seeds.to_string(),
        fmt_opt(r.accuracy),
        fmt_range(r.f1),
        fmt_range(r.recall),
        fmt_range(r.precision),
        r.final_loss.map(|l| format!("{l:.3e}")).unwrap_or_default(),
    ]
}

pub fn write_ablation(dir: &Path, target: &str, rows: &[AblationRow]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(BenchError::io(dir))?;
    let csv_path = dir.join("table.csv");
    let mut w = csv::Writer::from_path(&csv_path).map_err(|e| BenchError::Records {
        path: csv_path.clone(),
        message: e.to_string(),
    })?;
    let fail = |e: csv::Error| BenchError::Records {
        path: csv_path.clone(),
        message: e.to_string(),
    };
    w.write_record(TABLE_HEADER).map_err(fail)?;
    for r in rows {
        w.write_record(table_cells(r)).map_err(fail)?;
    }
    w.flush().map_err(BenchError::io(&csv_path))?;

    let mut md = format!("# Ablation: {target}\n\n| {} |\n|{}\n", TABLE_HEADER.join(" | "), "---|".repeat(10));
    for r in rows {
        let _ = writeln!(md, "| {} |", table_cells(r).join(" | "));
    }
    let md_path = dir.join("table.md");
    std::fs::write(&md_path, md).map_err(BenchError::io(&md_path))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    /// Values are initial learning rates, converted to `alpha0`.
    Lr,
    /// Values are raw `alpha0`.
    Alpha0,
    Beta,
}

impl std::str::FromStr for SweepAxis {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lr" => Ok(SweepAxis::Lr),
            "alpha0" => Ok(SweepAxis::Alpha0),
            "beta" => Ok(SweepAxis::Beta),
            _ => Err(config(format!("unknown sweep axis `{s}` (lr, alpha0, beta)"))),
        }
    }
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Lr => "lr",
            SweepAxis::Alpha0 => "alpha0",
            SweepAxis::Beta => "beta",
        }
    }

    /// Values from the sensitivity figures.
    pub fn default_values(self) -> Vec<f64> {
        match self {
            SweepAxis::Lr => vec![0.01, 0.001, 0.0001],
            SweepAxis::Alpha0 => vec![-2.2, -4.6, -6.9],
            SweepAxis::Beta => vec![1.0, 0.1, 0.01],
        }
    }

    /// DSA on the stiff quadratic from the trajectory-figure start; beta 0.3
    /// while the rate varies, initial rate 0.001 while beta varies.
    pub fn default_base(self) -> RunConfig {
        let mut c = presets::case("quadratic-1000")
            .expect("preset exists")
            .into_iter()
            .find(|c| c.optimizer == "dsa")
            .expect("dsa run");
        match self {
            SweepAxis::Lr | SweepAxis::Alpha0 => c.beta = Some(0.3),
            SweepAxis::Beta => c.lr = Some(0.001),
        }
        c
    }

    pub fn apply(self, cfg: &mut RunConfig, value: f64) {
        match self {
            SweepAxis::Lr => {
                cfg.lr = Some(value);
                cfg.alpha0 = None;
            }
            SweepAxis::Alpha0 => {
                cfg.alpha0 = Some(value);
                cfg.lr = None;
            }
            SweepAxis::Beta => cfg.beta = Some(value),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub label: String,
    pub value: f64,
    /// First iteration with `max|w| <= tol` (or loss, when parameters are not logged).
    pub iters_to_tol: Option<u64>,
    pub final_loss: Option<f64>,
}

pub fn sweep_label(axis: SweepAxis, value: f64) -> String {
    format!("{}={value}", axis.name())
}

pub fn iters_to_tol(records: &[Record], tol: f64) -> Option<u64> {
    if records.iter().any(|r| r.w1.is_some()) {
        records::first_iter_at_or_below(records, tol, Record::w_inf)
    } else {
        records::first_iter_at_or_below(records, tol, |r| r.loss)
    }
}

pub fn run_sweep(
    axis: SweepAxis,
    values: &[f64],
    base: &RunConfig,
    tol: f64,
    data_dir: &Path,
) -> Result<Vec<(SweepPoint, RunOutput)>> {
    if values.is_empty() {
        return Err(config("sweep needs at least one value"));
    }
    let cfgs: Vec<RunConfig> = values
        .iter()
        .map(|&v| {
            let mut c = base.clone();
            axis.apply(&mut c, v);
            c.validate().map(|_| c)
        })
        .collect::<Result<_>>()?;
    let outputs = execute_all(&cfgs, data_dir)?;
    Ok(values
        .iter()
        .zip(outputs)
        .map(|(&value, o)| {
            let point = SweepPoint {
                label: sweep_label(axis, value),
                value,
                iters_to_tol: iters_to_tol(&o.records, tol),
                final_loss: o.summary.final_loss,
            };
            (point, o)
        })
        .collect())
}

/// One plain run directory per value plus `sweep.csv`.
pub fn write_sweep(dir: &Path, axis: SweepAxis, points: &[(SweepPoint, RunOutput)]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(BenchError::io(dir))?;
    let mut text = String::from("axis,value,iters_to_tol,final_loss\n");
    for (p, o) in points {
        run::write_outputs(&dir.join(&p.label), std::slice::from_ref(o))?;
        let _ = writeln!(
            text,
            "{},{},{},{}",
            axis.name(),
            p.value,
            p.iters_to_tol.map(|i| i.to_string()).unwrap_or_default(),
            p.final_loss.map(|l| l.to_string()).unwrap_or_default()
        );
    }
    let path = dir.join("sweep.csv");
    std::fs::write(&path, text).map_err(BenchError::io(&path))
}

/// Parses `"0.01,0.001"`.
pub fn parse_values(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| config(format!("bad sweep value `{v}`")))
        })
        .collect()
}

