//! Named experiment presets. Each `case` preset is a list of runs on one
//! problem, one per optimizer, sharing a seed.

use dsa_core::data::DatasetId;
use dsa_core::optim::Rule;

use crate::config::{OptimizerId, ProblemKind, RunConfig};
use crate::error::{config, Result};

pub const CASES: [&str; 11] = [
    "quadratic-95",
    "quadratic-1000",
    "quadratic-1000-unit",
    "sum-regression",
    "minibatch-trap",
    "scalar-square",
    "mlp-iris-30",
    "mlp-wine-1000",
    "mlp-car-500",
    "mlp-agaricus-100",
    "quadratic-95-dsa",
];

/// Start of the trajectory figure for the stiff quadratic.
pub const FIG11_START: (f64, f64) = (-0.06, 0.001);

/// Capture epoch for each dataset.
pub fn default_epochs(id: DatasetId) -> usize {
    match id {
        DatasetId::Iris => 30,
        DatasetId::Wine => 1000,
        DatasetId::Car => 500,
        DatasetId::Agaricus => 100,
    }
}

fn quadratic(label: &str, opt: OptimizerId, a: f64, b: f64, start: (f64, f64), iters: usize) -> RunConfig {
    let mut c = RunConfig::new(label, ProblemKind::Quadratic, opt, iters);
    c.quad_a = Some(a);
    c.quad_b = Some(b);
    c.start_w1 = Some(start.0);
    c.start_w2 = Some(start.1);
    c.miss_probe = true;
    c
}

/// Every optimizer at one shared learning rate, with HD and DSA given their own `beta`.
fn uniform_lr(
    base: impl Fn(&str, OptimizerId) -> RunConfig,
    lr: f64,
    hd_beta: f64,
    dsa_beta: f64,
) -> Vec<RunConfig> {
    OptimizerId::ALL
        .into_iter()
        .map(|opt| {
            let mut c = base(opt.name(), opt);
            c.lr = Some(lr);
            match opt {
                OptimizerId::Hd => c.beta = Some(hd_beta),
                OptimizerId::Dsa => c.beta = Some(dsa_beta),
                OptimizerId::Classic(_) => {}
            }
            c
        })
        .collect()
}

/// Single-run config for `train`: the dataset's capture epochs, full batch.
pub fn train(dataset: DatasetId, opt: OptimizerId) -> RunConfig {
    let mut c = RunConfig::new(
        format!("{}-{}", dataset.name(), opt.name()),
        ProblemKind::Mlp,
        opt,
        default_epochs(dataset),
    );
    c.dataset = Some(dataset.name().to_string());
    c
}

pub fn case(name: &str) -> Result<Vec<RunConfig>> {
    let runs = match name {
        "quadratic-95" => uniform_lr(|l, o| quadratic(l, o, 1.0, 95.0, (-1.0, 1.0), 1000), 0.01, 1e-7, 0.1),
        "quadratic-95-dsa" => {
            let mut c = quadratic("dsa", OptimizerId::Dsa, 1.0, 95.0, (-1.0, 1.0), 1000);
            c.lr = Some(0.01);
            c.beta = Some(0.1);
            vec![c]
        }
        "quadratic-1000" => uniform_lr(|l, o| quadratic(l, o, 1.0, 1000.0, FIG11_START, 1000), 0.001, 1e-4, 0.3),
        "quadratic-1000-unit" => {
            uniform_lr(|l, o| quadratic(l, o, 1.0, 1000.0, (-1.0, 1.0), 1000), 0.001, 1e-4, 0.3)
        }
        "sum-regression" => {
            let mk = |opt: OptimizerId, lr: f64| {
                let mut c = RunConfig::new(opt.name(), ProblemKind::SumRegression, opt, 300);
                c.lr = Some(lr);
                c
            };
            let mut dsa = mk(OptimizerId::Dsa, 0.05);
            dsa.beta = Some(0.5);
            vec![
                dsa,
                mk(OptimizerId::Classic(Rule::Sgd), 0.01),
                mk(OptimizerId::Classic(Rule::Adam), 0.1),
                mk(OptimizerId::Classic(Rule::AdaGrad), 0.1),
            ]
        }
        "minibatch-trap" => {
            let mk = |label: &str, opt: OptimizerId, alternating: bool| {
                let mut c = RunConfig::new(label, ProblemKind::MinibatchTrap, opt, 1000);
                if alternating {
                    c.batch_size = Some(1);
                    c.shuffle = false;
                }
                c.miss_probe = true;
                c
            };
            vec![
                mk("dsa-full", OptimizerId::Dsa, false),
                mk("hd-alternating", OptimizerId::Hd, true),
                mk("dsa-alternating", OptimizerId::Dsa, true),
                mk("sgd-alternating", OptimizerId::Classic(Rule::Sgd), true),
            ]
        }
        "scalar-square" => {
            let mk = |opt: OptimizerId| {
                let mut c = RunConfig::new(opt.name(), ProblemKind::ScalarSquare, opt, 20);
                c.start_w1 = Some(1.0);
                c.miss_probe = true;
                c
            };
            let mut dsa = mk(OptimizerId::Dsa);
            dsa.alpha0 = Some(0.0);
            vec![mk(OptimizerId::Classic(Rule::Sgd)), mk(OptimizerId::Hd), dsa]
        }
        "mlp-iris-30" | "mlp-wine-1000" | "mlp-car-500" | "mlp-agaricus-100" => {
            let id: DatasetId = name.split('-').nth(1).expect("preset shape").parse()?;
            OptimizerId::ALL
                .into_iter()
                .map(|opt| {
                    let mut c = train(id, opt);
                    c.name = opt.name().to_string();
                    c
                })
                .collect()
        }
        other => {
            return Err(config(format!(
                "unknown preset `{other}` (known: {})",
                CASES.join(", ")
            )))
        }
    };
    Ok(runs)
}
