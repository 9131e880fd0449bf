//! Run configuration: one flat TOML table per run.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use dsa_core::data::DatasetId;
use dsa_core::optim::{ClassicHyper, DsaConfig, HdConfig, Optimizer, Rule};
use dsa_core::ParamSet;
use serde::{Deserialize, Serialize};

use crate::error::{config, BenchError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    Quadratic,
    ScalarSquare,
    SumRegression,
    MinibatchTrap,
    Mlp,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Quadratic => "quadratic",
            ProblemKind::ScalarSquare => "scalar-square",
            ProblemKind::SumRegression => "sum-regression",
            ProblemKind::MinibatchTrap => "minibatch-trap",
            ProblemKind::Mlp => "mlp",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OptimizerId {
    Classic(Rule),
    Hd,
    Dsa,
}

impl OptimizerId {
    pub const ALL: [OptimizerId; 10] = [
        OptimizerId::Classic(Rule::Sgd),
        OptimizerId::Classic(Rule::Momentum),
        OptimizerId::Classic(Rule::AdaGrad),
        OptimizerId::Classic(Rule::AdaDelta),
        OptimizerId::Classic(Rule::RmsProp),
        OptimizerId::Classic(Rule::Adam),
        OptimizerId::Classic(Rule::AdamW),
        OptimizerId::Classic(Rule::Adamax),
        OptimizerId::Hd,
        OptimizerId::Dsa,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OptimizerId::Classic(r) => r.name(),
            OptimizerId::Hd => "hd",
            OptimizerId::Dsa => "dsa",
        }
    }

    pub fn adapts_rate(self) -> bool {
        !matches!(self, OptimizerId::Classic(_))
    }
}

impl fmt::Display for OptimizerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OptimizerId {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hd" => Ok(OptimizerId::Hd),
            "dsa" => Ok(OptimizerId::Dsa),
            other => other
                .parse::<Rule>()
                .map(OptimizerId::Classic)
                .map_err(|_| config(format!("unknown optimizer `{s}`"))),
        }
    }
}

fn yes() -> bool {
    true
}

fn default_gamma() -> f64 {
    0.1
}

/// Everything needed to reproduce one run.
///
/// Optional hyperparameters fall back to the optimizer's defaults. For DSA,
/// `lr` is the initial effective rate and is converted to `alpha0`; give one
/// or the other.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    pub problem: ProblemKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quad_a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quad_b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_w1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_w2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<String>,
    /// Rows per batch; absent means full batch.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    #[serde(default = "yes")]
    pub shuffle: bool,
    pub optimizer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub momentum: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_decay: Option<f64>,
    #[serde(default = "yes")]
    pub per_parameter: bool,
    #[serde(default = "yes")]
    pub sign_step: bool,
    pub epochs: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub miss_probe: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

impl RunConfig {
    /// A run with every optional field unset.
    pub fn new(name: impl Into<String>, problem: ProblemKind, optimizer: OptimizerId, epochs: usize) -> Self {
        Self {
            name: name.into(),
            problem,
            quad_a: None,
            quad_b: None,
            start_w1: None,
            start_w2: None,
            dataset: None,
            batch_size: None,
            shuffle: true,
            optimizer: optimizer.name().to_string(),
            lr: None,
            beta: None,
            gamma: default_gamma(),
            alpha0: None,
            momentum: None,
            weight_decay: None,
            per_parameter: true,
            sign_step: true,
            epochs,
            seed: 0,
            miss_probe: false,
            out: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| config(format!("config: {}", e.message())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| config(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(BenchError::io(path))?;
        Self::from_toml(&text).map_err(|e| config(format!("{}: {e}", path.display())))
    }

    pub fn optimizer_id(&self) -> Result<OptimizerId> {
        self.optimizer.parse()
    }

    pub fn dataset_id(&self) -> Result<Option<DatasetId>> {
        self.dataset
            .as_deref()
            .map(|d| d.parse::<DatasetId>().map_err(|e| config(e.to_string())))
            .transpose()
    }

    pub fn validate(&self) -> Result<()> {
        let opt = self.optimizer_id()?;
        if self.name.trim().is_empty() {
            return Err(config("name must not be empty"));
        }
        if self.seed > i64::MAX as u64 {
            return Err(config("seed must be below 2^63"));
        }
        if self.batch_size == Some(0) {
            return Err(config("batch_size must be positive"));
        }
        let finite_positive = |v: Option<f64>, what: &str| match v {
            Some(x) if !(x.is_finite() && x > 0.0) => Err(config(format!("{what} must be positive, got {x}"))),
            _ => Ok(()),
        };
        finite_positive(self.lr, "lr")?;
        finite_positive(Some(self.gamma), "gamma")?;
        match (opt, self.beta) {
            // HD accepts beta = 0 (plain SGD); DSA needs a positive step for alpha.
            (OptimizerId::Hd, Some(b)) if !(b.is_finite() && b >= 0.0) => {
                return Err(config(format!("beta must be non-negative, got {b}")))
            }
            (OptimizerId::Dsa, b) => finite_positive(b, "beta")?,
            _ => {}
        }
        if opt == OptimizerId::Dsa {
            if self.lr.is_some() && self.alpha0.is_some() {
                return Err(config("give lr or alpha0 for dsa, not both"));
            }
            if let Some(lr) = self.lr {
                if lr >= self.gamma {
                    return Err(config(format!("dsa lr {lr} must be below gamma {}", self.gamma)));
                }
            }
        }
        let needs_dataset = self.problem == ProblemKind::Mlp;
        match (needs_dataset, self.dataset_id()?) {
            (true, None) => return Err(config("problem mlp needs a dataset")),
            (false, Some(_)) => return Err(config(format!("problem {} takes no dataset", self.problem.name()))),
            _ => {}
        }
        if self.problem == ProblemKind::Quadratic {
            for (v, what) in [(self.quad_a, "quad_a"), (self.quad_b, "quad_b")] {
                finite_positive(v, what)?;
            }
        }
        Ok(())
    }

    /// The configured optimizer with fresh state for `params`.
    pub fn build_optimizer(&self, params: &ParamSet<f64>) -> Result<Optimizer<f64>> {
        Ok(match self.optimizer_id()? {
            OptimizerId::Classic(rule) => {
                let d = rule.default_hyper::<f64>();
                let hyper = ClassicHyper {
                    lr: self.lr.unwrap_or(d.lr),
                    momentum: self.momentum.unwrap_or(d.momentum),
                    weight_decay: self.weight_decay.unwrap_or(d.weight_decay),
                    ..d
                };
                Optimizer::classic(rule, hyper, params)
            }
            OptimizerId::Hd => {
                let d = HdConfig::<f64>::default();
                Optimizer::hd(HdConfig {
                    alpha0: self.lr.unwrap_or(d.alpha0),
                    beta: self.beta.unwrap_or(d.beta),
                })
            }
            OptimizerId::Dsa => Optimizer::dsa(self.dsa_config()?, params)?,
        })
    }

    pub fn dsa_config(&self) -> Result<DsaConfig<f64>> {
        let d = DsaConfig::<f64>::default();
        let mut cfg = DsaConfig {
            beta: self.beta.unwrap_or(d.beta),
            gamma: self.gamma,
            alpha0: self.alpha0.unwrap_or(d.alpha0),
            per_parameter: self.per_parameter,
            sign_param_step: self.sign_step,
            ..d
        };
        if let Some(lr) = self.lr {
            cfg = cfg.with_initial_lr(lr)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Command-line overrides applied on top of a config or preset.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub lr: Option<f64>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub no_per_parameter: bool,
    pub no_sign_step: bool,
    pub miss_probe: bool,
    pub out: Option<String>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(e) = self.epochs {
            cfg.epochs = e;
        }
        if let Some(b) = self.batch_size {
            cfg.batch_size = Some(b);
        }
        if let Some(lr) = self.lr {
            cfg.lr = Some(lr);
            cfg.alpha0 = None;
        }
        if let Some(b) = self.beta {
            if cfg.optimizer_id().is_ok_and(OptimizerId::adapts_rate) {
                cfg.beta = Some(b);
            }
        }
        if let Some(g) = self.gamma {
            cfg.gamma = g;
        }
        if self.no_per_parameter {
            cfg.per_parameter = false;
        }
        if self.no_sign_step {
            cfg.sign_step = false;
        }
        if self.miss_probe {
            cfg.miss_probe = true;
        }
        if let Some(o) = &self.out {
            cfg.out = Some(o.clone());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_toml_fills_defaults() {
        let cfg = RunConfig::from_toml(
            "name = \"x\"\nproblem = \"mlp\"\ndataset = \"iris\"\noptimizer = \"dsa\"\nepochs = 3\n",
        )
        .unwrap();
        assert_eq!((cfg.gamma, cfg.per_parameter, cfg.sign_step, cfg.shuffle), (0.1, true, true, true));
        assert_eq!(cfg.dsa_config().unwrap().alpha0, -4.6);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        let base = "name = \"x\"\nproblem = \"scalar-square\"\noptimizer = \"sgd\"\nepochs = 3\n";
        assert!(RunConfig::from_toml(base).is_ok());
        assert!(RunConfig::from_toml(&format!("{base}colour = 1\n")).is_err());
        assert!(RunConfig::from_toml(&format!("{base}lr = -1.0\n")).is_err());
        assert!(RunConfig::from_toml(&format!("{base}dataset = \"iris\"\n")).is_err());
        assert!(RunConfig::from_toml(&base.replace("sgd", "lion")).is_err());
    }

    #[test]
    fn dsa_lr_becomes_alpha0() {
        let mut cfg = RunConfig::new("d", ProblemKind::ScalarSquare, OptimizerId::Dsa, 1);
        cfg.lr = Some(0.01);
        let d = cfg.dsa_config().unwrap();
        assert!((0.1 / (1.0 + (-d.alpha0).exp()) - 0.01).abs() < 1e-15);
        cfg.alpha0 = Some(0.0);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn overrides_leave_beta_off_classic_rules() {
        let mut cfg = RunConfig::new("s", ProblemKind::ScalarSquare, OptimizerId::Classic(Rule::Sgd), 1);
        Overrides { beta: Some(0.5), lr: Some(0.2), ..Overrides::default() }.apply(&mut cfg);
        assert_eq!((cfg.beta, cfg.lr), (None, Some(0.2)));
    }
}
