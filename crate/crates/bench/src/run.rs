//! The training loop: fix batch, step, probe, log.

use std::path::{Path, PathBuf};
use std::time::Instant;

use dsa_core::data::{split, BatchMode, Batcher, Batch, DatasetSplit, SplitSize};
use dsa_core::metrics::{classification_report, ClassReport};
use dsa_core::optim::{MissStats, Optimizer};
use dsa_core::problems::{
    loss, MinibatchTrap, Mlp, MlpSpec, Objective, ObjectiveOracle, Quadratic, ScalarSquare, SumRegression,
};
use dsa_core::{ParamSet, Rng, Stream};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ProblemKind, RunConfig};
use crate::error::{BenchError, Result};
use crate::records::{self, Record};

/// Share of each dataset used for training.
pub const TRAIN_FRACTION: f64 = 0.8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub f1_min: f64,
    pub f1_max: f64,
    pub recall_min: f64,
    pub recall_max: f64,
    pub precision_min: f64,
    pub precision_max: f64,
}

impl From<&ClassReport> for Metrics {
    fn from(r: &ClassReport) -> Self {
        let (f, rc, p) = (r.f1_range(), r.recall_range(), r.precision_range());
        Self {
            accuracy: r.accuracy,
            f1_min: f.min,
            f1_max: f.max,
            recall_min: rc.min,
            recall_max: rc.max,
            precision_min: p.min,
            precision_max: p.max,
        }
    }
}

impl Metrics {
    fn fill(&self, r: &mut Record) {
        r.accuracy = Some(self.accuracy);
        r.f1_min = Some(self.f1_min);
        r.f1_max = Some(self.f1_max);
        r.recall_min = Some(self.recall_min);
        r.recall_max = Some(self.recall_max);
        r.precision_min = Some(self.precision_min);
        r.precision_max = Some(self.precision_max);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub run_id: String,
    pub problem: String,
    pub dataset: Option<String>,
    pub optimizer: String,
    pub seed: u64,
    pub iterations: u64,
    pub epochs: u64,
    /// Loss on the full training data at the final parameters.
    pub final_loss: Option<f64>,
    /// Final parameters, for problems with at most two of them.
    pub final_w: Option<Vec<f64>>,
    pub final_metrics: Option<Metrics>,
    /// Best test accuracy over epoch boundaries, with the metrics of that epoch.
    pub best_metrics: Option<Metrics>,
    pub best_epoch: Option<u64>,
    pub miss_rate: Option<f64>,
    pub misses: Option<usize>,
    pub diverged_at: Option<u64>,
    pub failure: Option<String>,
    pub test_class_counts: Option<Vec<usize>>,
    /// Excluded from any determinism comparison.
    pub wall_time_s: f64,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub config: RunConfig,
    pub records: Vec<Record>,
    pub summary: Summary,
    pub params: ParamSet<f64>,
}

// One per session; boxing the split buys nothing.
#[allow(clippy::large_enum_variant)]
enum Data {
    None,
    /// Regression-style problems that carry their own rows.
    Owned(Batch<f64>),
    Split {
        split: DatasetSplit,
        train: Batch<f64>,
        test: Batch<f64>,
        mlp: Mlp,
    },
}

impl Data {
    fn rows(&self) -> usize {
        match self {
            Data::None => 1,
            Data::Owned(b) => b.len(),
            Data::Split { train, .. } => train.len(),
        }
    }

    /// A minibatch, or `None` for "the objective's full data".
    fn batch(&self, indices: &[usize], full: bool) -> Result<Option<Batch<f64>>> {
        Ok(match (self, full) {
            (Data::None, _) | (_, true) => None,
            (Data::Owned(b), false) => Some(b.select(indices)?),
            (Data::Split { train, .. }, false) => Some(train.select(indices)?),
        })
    }

    /// The full training batch for objectives that do not own their data.
    fn full(&self) -> Option<&Batch<f64>> {
        match self {
            Data::Split { train, .. } => Some(train),
            _ => None,
        }
    }

    fn evaluate(&self, params: &ParamSet<f64>) -> Result<Option<Metrics>> {
        let Data::Split { test, mlp, .. } = self else {
            return Ok(None);
        };
        let predictions = mlp.predict(params, &test.inputs)?;
        let labels = test.labels().expect("class targets");
        let report = classification_report(&predictions, labels, mlp.spec().classes)?;
        Ok(Some(Metrics::from(&report)))
    }
}

/// A problem instance with its data and current parameters.
pub struct Session {
    objective: Box<dyn Objective<f64>>,
    data: Data,
    pub params: ParamSet<f64>,
}

impl Session {
    pub fn new(cfg: &RunConfig, data_dir: &Path) -> Result<Self> {
        cfg.validate()?;
        let mut init_rng = Rng::stream(cfg.seed, Stream::Init);
        let (objective, data): (Box<dyn Objective<f64>>, Data) = match cfg.problem {
            ProblemKind::Quadratic => {
                let mut q = Quadratic::new(cfg.quad_a.unwrap_or(1.0), cfg.quad_b.unwrap_or(1.0))?;
                if let (Some(a), Some(b)) = (cfg.start_w1, cfg.start_w2) {
                    q = q.with_start(a, b);
                }
                (Box::new(q), Data::None)
            }
            ProblemKind::ScalarSquare => (
                Box::new(ScalarSquare::with_start(cfg.start_w1.unwrap_or(1.0))),
                Data::None,
            ),
            ProblemKind::SumRegression => {
                let p = SumRegression::standard(cfg.seed)?;
                let full = p.data().clone();
                (Box::new(p), Data::Owned(full))
            }
            ProblemKind::MinibatchTrap => {
                let t = MinibatchTrap::default();
                let full = t.full_batch().clone();
                (Box::new(t), Data::Owned(full))
            }
            ProblemKind::Mlp => {
                let id = cfg.dataset_id()?.expect("validated");
                let data = id.load(data_dir)?;
                let split = split(
                    &data,
                    SplitSize::Fraction(TRAIN_FRACTION),
                    &mut Rng::stream(cfg.seed, Stream::Split),
                )?;
                let mlp = Mlp::new(MlpSpec::new(split.feature_dim(), split.class_count()))?;
                let (train, test) = (split.train.full_batch(), split.test.full_batch());
                (Box::new(mlp.clone()), Data::Split { split, train, test, mlp })
            }
        };
        let params = objective.init_params(&mut init_rng)?;
        Ok(Self { objective, data, params })
    }

    pub fn full_loss(&self) -> Result<f64> {
        Ok(loss(self.objective.as_ref(), &self.params, self.data.full())?)
    }

    pub fn evaluate(&self) -> Result<Option<Metrics>> {
        self.data.evaluate(&self.params)
    }

    pub fn test_class_counts(&self) -> Option<Vec<usize>> {
        match &self.data {
            Data::Split { split, .. } => Some(split.test.class_counts()),
            _ => None,
        }
    }
}

/// `(w1, w2)` for problems with at most two parameters.
fn snapshot(params: &ParamSet<f64>) -> (Option<f64>, Option<f64>) {
    if params.numel() > 2 {
        return (None, None);
    }
    let w = params.to_flat();
    (w.first().copied(), w.get(1).copied())
}

/// Accumulated telemetry of one run id, possibly across phases.
pub struct Log {
    run_id: String,
    pub records: Vec<Record>,
    iter: u64,
    epoch: u64,
    misses: MissStats,
    probed: bool,
    best: Option<(Metrics, u64)>,
    last: Option<Metrics>,
    diverged_at: Option<u64>,
    failure: Option<String>,
}

impl Log {
    /// Starts a log with the row-0 snapshot of `session`.
    pub fn start(run_id: &str, session: &Session) -> Result<Self> {
        let (w1, w2) = snapshot(&session.params);
        let mut row = Record {
            run_id: run_id.to_string(),
            w1,
            w2,
            ..Record::default()
        };
        let metrics = session.evaluate()?;
        if let Some(m) = &metrics {
            m.fill(&mut row);
        }
        Ok(Self {
            run_id: run_id.to_string(),
            records: vec![row],
            iter: 0,
            epoch: 0,
            misses: MissStats::new(),
            probed: false,
            best: metrics.map(|m| (m, 0)),
            last: metrics,
            diverged_at: None,
            failure: None,
        })
    }

    pub fn diverged_at(&self) -> Option<u64> {
        self.diverged_at
    }

    /// The error that stopped the run, if any.
    pub fn failure(&self) -> Option<&str> {
        self.failure.as_deref()
    }
}

/// Trains `session` for `cfg.epochs` epochs with `cfg`'s optimizer, appending to `log`.
/// Stops early, without error, if a step fails; the iteration is kept in the log.
pub fn run_phase(session: &mut Session, cfg: &RunConfig, log: &mut Log) -> Result<()> {
    let mut opt: Optimizer<f64> = cfg.build_optimizer(&session.params)?;
    let adapts = cfg.optimizer_id()?.adapts_rate();
    let rows = session.data.rows();
    let mode = match cfg.batch_size {
        Some(b) if b < rows => BatchMode::Size(b),
        _ => BatchMode::Full,
    };
    let full = mode == BatchMode::Full;
    let mut batcher = Batcher::new(
        rows,
        mode,
        cfg.shuffle,
        Rng::stream(cfg.seed, Stream::Batches),
    )?;
    let Session { objective, data, params } = session;
    for _ in 0..cfg.epochs {
        log.epoch += 1;
        for indices in batcher.next_epoch() {
            let batch = data.batch(&indices, full)?;
            let oracle = ObjectiveOracle::new(objective.as_ref(), batch.as_ref().or(data.full()));
            let probe = (cfg.miss_probe && adapts).then_some(&mut log.misses);
            let outcome = match opt.step(params, &oracle, probe) {
                Ok(o) => o,
                Err(e) => {
                    log.diverged_at = Some(log.iter + 1);
                    log.failure = Some(e.to_string());
                    log.records.push(Record {
                        run_id: log.run_id.clone(),
                        iter: log.iter + 1,
                        epoch: log.epoch,
                        loss: Some(f64::NAN),
                        ..Record::default()
                    });
                    return Ok(());
                }
            };
            log.iter += 1;
            log.probed |= outcome.miss.is_some();
            let (w1, w2) = snapshot(params);
            log.records.push(Record {
                run_id: log.run_id.clone(),
                iter: log.iter,
                epoch: log.epoch,
                loss: Some(outcome.loss),
                lr_min: Some(outcome.lr.min),
                lr_mean: Some(outcome.lr.mean),
                lr_max: Some(outcome.lr.max),
                miss: outcome.miss.map(u8::from),
                cum_miss_rate: outcome.miss.map(|_| log.misses.rate()),
                w1,
                w2,
                ..Record::default()
            });
        }
        if let Some(m) = data.evaluate(params)? {
            m.fill(log.records.last_mut().expect("at least one row"));
            if !log.best.is_some_and(|(b, _)| m.accuracy <= b.accuracy) {
                log.best = Some((m, log.epoch));
            }
            log.last = Some(m);
        }
    }
    Ok(())
}

/// Builds the summary for a finished log.
pub fn summarize(cfg: &RunConfig, session: &Session, log: &Log, started: Instant) -> Result<Summary> {
    let healthy = log.diverged_at.is_none();
    Ok(Summary {
        run_id: log.run_id.clone(),
        problem: cfg.problem.name().to_string(),
        dataset: cfg.dataset.clone(),
        optimizer: cfg.optimizer.clone(),
        seed: cfg.seed,
        iterations: log.iter,
        epochs: log.epoch,
        final_loss: if healthy { Some(session.full_loss()?) } else { None },
        final_w: (session.params.numel() <= 2).then(|| session.params.to_flat()),
        final_metrics: log.last,
        best_metrics: log.best.map(|(m, _)| m),
        best_epoch: log.best.map(|(_, e)| e),
        miss_rate: log.probed.then(|| log.misses.rate()),
        misses: log.probed.then(|| log.misses.misses()),
        diverged_at: log.diverged_at,
        failure: log.failure.clone(),
        test_class_counts: session.test_class_counts(),
        wall_time_s: started.elapsed().as_secs_f64(),
    })
}

/// One complete run; `run_id` is the config's name.
pub fn execute(cfg: &RunConfig, data_dir: &Path) -> Result<RunOutput> {
    let started = Instant::now();
    let mut session = Session::new(cfg, data_dir)?;
    let mut log = Log::start(&cfg.name, &session)?;
    run_phase(&mut session, cfg, &mut log)?;
    let summary = summarize(cfg, &session, &log, started)?;
    Ok(RunOutput {
        config: cfg.clone(),
        records: log.records,
        summary,
        params: session.params,
    })
}

/// Independent runs in parallel, results in input order.
pub fn execute_all(cfgs: &[RunConfig], data_dir: &Path) -> Result<Vec<RunOutput>> {
    cfgs.par_iter().map(|c| execute(c, data_dir)).collect()
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    runs: Vec<&'a Summary>,
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, bytes).map_err(BenchError::io(path))
}

/// Writes `records.csv`, `summary.json` and the resolved configs into `dir`:
/// `config.toml` for a single run, `configs/<run_id>.toml` for several.
pub fn write_outputs(dir: &Path, outputs: &[RunOutput]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(BenchError::io(dir))?;
    let rows: Vec<Record> = outputs.iter().flat_map(|o| o.records.iter().cloned()).collect();
    records::write_csv(&dir.join("records.csv"), &rows)?;
    let summary = SummaryFile {
        runs: outputs.iter().map(|o| &o.summary).collect(),
    };
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    write(&dir.join("summary.json"), json + "\n")?;
    if let [only] = outputs {
        write(&dir.join("config.toml"), only.config.to_toml()?)?;
    } else {
        let cdir = dir.join("configs");
        std::fs::create_dir_all(&cdir).map_err(BenchError::io(&cdir))?;
        for o in outputs {
            write(&cdir.join(format!("{}.toml", o.config.name)), o.config.to_toml()?)?;
        }
    }
    Ok(())
}

pub fn default_out_dir(label: &str) -> PathBuf {
    Path::new("runs").join(label)
}
