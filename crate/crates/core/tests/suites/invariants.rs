//! Optimizer and metric invariants as plain checks over explicit inputs, so
//! both the property tests and the acceptance suite can drive them.

use dsa_core::metrics::{classification_report, miss_rate};
use dsa_core::optim::{
    classic_step, dsa_step, hd_step, Alpha, ClassicHyper, ClassicState, DsaConfig, DsaState,
    Evaluation, GradOracle, HdConfig, HdState, MissStats, Optimizer, Rates, Rule,
};
use dsa_core::{ParamSet, Result};

pub type Check = std::result::Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if $cond {
        } else {
            return Err(format!($($msg)+));
        }
    };
}

pub fn quad_oracle(a: f64, b: f64) -> impl Fn(&ParamSet<f64>) -> Result<Evaluation<f64>> {
    move |p: &ParamSet<f64>| {
        let w = p.tensors()[0].data();
        Ok(Evaluation {
            loss: a * w[0] * w[0] + b * w[1] * w[1],
            grads: ParamSet::from_vec("w", vec![2.0 * a * w[0], 2.0 * b * w[1]]),
        })
    }
}

fn square(p: &ParamSet<f64>) -> Result<Evaluation<f64>> {
    let x = p.tensors()[0].data()[0];
    Ok(Evaluation {
        loss: x * x,
        grads: ParamSet::from_vec("x", vec![2.0 * x]),
    })
}

pub fn alphas(state: &DsaState<f64>) -> Vec<f64> {
    match state.alpha() {
        Alpha::Scalar(a) => vec![*a],
        Alpha::PerParameter(a) => a.to_flat(),
    }
}

pub fn lrs(state: &DsaState<f64>, gamma: f64) -> Vec<f64> {
    match state.rates(gamma) {
        Rates::Global(r) => vec![r],
        Rates::PerElement(r) => r.to_flat(),
    }
}

/// DSA's rate stays in `(0, gamma)` after every step, up to divergence.
pub fn dsa_rate_in_open_interval(
    (a, b, w1, w2): (f64, f64, f64, f64),
    cfg: DsaConfig<f64>,
) -> Check {
    let oracle = quad_oracle(a, b);
    let mut w = ParamSet::from_vec("w", vec![w1, w2]);
    let mut state = DsaState::new(&cfg, &w);
    for t in 0..60 {
        match dsa_step(&mut w, &oracle, &mut state, &cfg, None) {
            Ok(_) => {}
            // Raw-gradient steps can diverge on stiff quadratics; the bound must hold up to that point.
            Err(dsa_core::Error::NonFinite { .. }) => break,
            Err(e) => return Err(e.to_string()),
        }
        for r in lrs(&state, cfg.gamma) {
            ensure!(r > 0.0 && r < cfg.gamma, "step {t}: rate {r} outside (0, {})", cfg.gamma);
        }
    }
    Ok(())
}

/// Each `alpha` moves by `+beta`, `-beta` or 0, with the sign of `g~ g`.
pub fn dsa_alpha_moves_by_beta((a, b, w1, w2): (f64, f64, f64, f64), beta: f64, per_parameter: bool) -> Check {
    let cfg = DsaConfig { beta, per_parameter, ..DsaConfig::default() };
    let oracle = quad_oracle(a, b);
    let mut w = ParamSet::from_vec("w", vec![w1, w2]);
    let mut state = DsaState::new(&cfg, &w);
    let eps = cfg.epsilon;
    for _ in 0..40 {
        let before = alphas(&state);
        let rates = lrs(&state, cfg.gamma);
        let g = oracle.evaluate(&w).unwrap().grads.to_flat();
        let w0 = w.to_flat();
        let trial: Vec<f64> = (0..2)
            .map(|i| w0[i] - rates[i.min(rates.len() - 1)] * g[i] / (g[i].abs() + eps))
            .collect();
        let gt = oracle.evaluate(&ParamSet::from_vec("w", trial)).unwrap().grads.to_flat();
        let products: Vec<f64> = if per_parameter {
            vec![gt[0] * g[0], gt[1] * g[1]]
        } else {
            vec![gt[0] * g[0] + gt[1] * g[1]]
        };
        dsa_step(&mut w, &oracle, &mut state, &cfg, None).map_err(|e| e.to_string())?;
        for ((x, y), p) in before.iter().zip(alphas(&state)).zip(products) {
            let d = y - x;
            ensure!(d.abs() <= beta * (1.0 + 1e-12), "delta {d} exceeds beta {beta}");
            if p == 0.0 {
                ensure!(d == 0.0, "delta {d} with zero product");
            }
            // Once |g~ g| >= 1e-3 the guard shrinks the step by less than beta * 1e-9.
            if p.abs() >= 1e-3 {
                let slack = beta * 1e-9 + 8.0 * f64::EPSILON * x.abs().max(1.0);
                ensure!((d.abs() - beta).abs() <= slack, "delta {d} vs beta {beta}");
                ensure!((d > 0.0) == (p > 0.0), "delta {d} against product {p}");
            }
        }
    }
    Ok(())
}

/// With the sign step each coordinate moves exactly its rate.
pub fn sign_step_displacement_equals_rate((a, b, w1, w2): (f64, f64, f64, f64)) -> Check {
    let cfg = DsaConfig::<f64>::default();
    let oracle = quad_oracle(a, b);
    let mut w = ParamSet::from_vec("w", vec![w1, w2]);
    let mut state = DsaState::new(&cfg, &w);
    for _ in 0..30 {
        let old = w.to_flat();
        let g = oracle.evaluate(&w).unwrap().grads.to_flat();
        dsa_step(&mut w, &oracle, &mut state, &cfg, None).map_err(|e| e.to_string())?;
        let rates = lrs(&state, cfg.gamma);
        for i in 0..2 {
            if g[i].abs() > 1e-3 {
                let disp = (w.to_flat()[i] - old[i]).abs();
                let tol = rates[i] * 1e-9 + 4.0 * f64::EPSILON * old[i].abs().max(1.0);
                ensure!((disp - rates[i]).abs() <= tol, "moved {disp}, rate {}", rates[i]);
            }
        }
    }
    Ok(())
}

/// On one scalar, a global `alpha` and a per-parameter one are the same rule.
pub fn dsa_scalar_matches_per_parameter(x0: f64, alpha0: f64, beta: f64, sign_param_step: bool) -> Check {
    let base = DsaConfig { alpha0, beta, sign_param_step, ..DsaConfig::default() };
    let scalar = DsaConfig { per_parameter: false, ..base };
    let mut p = ParamSet::from_vec("x", vec![x0]);
    let mut q = p.clone();
    let (mut sp, mut sq) = (DsaState::new(&base, &p), DsaState::new(&scalar, &q));
    for t in 0..25 {
        let op = dsa_step(&mut p, &square, &mut sp, &base, None).map_err(|e| e.to_string())?;
        let oq = dsa_step(&mut q, &square, &mut sq, &scalar, None).map_err(|e| e.to_string())?;
        ensure!(p.to_flat()[0].to_bits() == q.to_flat()[0].to_bits(), "step {t}: x differs");
        ensure!(op.lr.mean.to_bits() == oq.lr.mean.to_bits(), "step {t}: rate differs");
    }
    Ok(())
}

/// HD with `beta = 0` is SGD, bit for bit.
pub fn hd_without_beta_is_sgd((a, b, w1, w2): (f64, f64, f64, f64), lr: f64) -> Check {
    let oracle = quad_oracle(a, b);
    let cfg = HdConfig { alpha0: lr, beta: 0.0 };
    let mut hd_state = HdState::new(&cfg);
    let hyper = ClassicHyper { lr, ..Rule::Sgd.default_hyper() };
    let mut p = ParamSet::from_vec("w", vec![w1, w2]);
    let mut q = p.clone();
    let mut sgd_state = ClassicState::new(Rule::Sgd, &q);
    let bits = |s: &ParamSet<f64>| s.to_flat().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    for t in 0..50 {
        hd_step(&mut p, &oracle, &mut hd_state, &cfg, None).map_err(|e| e.to_string())?;
        let g = oracle.evaluate(&q).unwrap().grads;
        classic_step(Rule::Sgd, &mut q, &g, &mut sgd_state, &hyper).map_err(|e| e.to_string())?;
        ensure!(bits(&p) == bits(&q), "step {t}: HD and SGD differ");
    }
    Ok(())
}

/// HD's rate rises while consecutive gradients agree.
pub fn hd_alpha_grows_when_gradients_agree(x0: f64, alpha0: f64, beta: f64) -> Check {
    let cfg = HdConfig { alpha0, beta };
    let mut state = HdState::new(&cfg);
    let mut w = ParamSet::from_vec("x", vec![x0]);
    let mut prev: Option<f64> = None;
    for _ in 0..10 {
        let g = 2.0 * w.to_flat()[0];
        let alpha_before = state.alpha();
        // Large beta * x0^2 makes HD diverge; the property concerns the steps before that.
        if hd_step(&mut w, &square, &mut state, &cfg, None).is_err() {
            break;
        }
        if let Some(pg) = prev {
            if g * pg > 0.0 {
                ensure!(state.alpha() >= alpha_before, "rate fell from {alpha_before}");
                // Strictly, unless the increment is below one ulp of alpha.
                if beta * g * pg > 4.0 * f64::EPSILON * alpha_before.abs() {
                    ensure!(state.alpha() > alpha_before, "rate stuck at {alpha_before}");
                }
            }
        }
        prev = Some(g);
    }
    Ok(())
}

/// Relabeling classes permutes per-class metrics and leaves the rest alone.
pub fn class_permutation_permutes_metrics(preds: &[usize], labels: &[usize], perm: [usize; 4]) -> Check {
    let r = classification_report(preds, labels, 4).map_err(|e| e.to_string())?;
    let pp: Vec<usize> = preds.iter().map(|&c| perm[c]).collect();
    let pl: Vec<usize> = labels.iter().map(|&c| perm[c]).collect();
    let s = classification_report(&pp, &pl, 4).map_err(|e| e.to_string())?;
    ensure!(r.accuracy == s.accuracy, "accuracy changed");
    for (c, &pc) in perm.iter().enumerate() {
        ensure!(r.precision[c] == s.precision[pc], "precision of class {c}");
        ensure!(r.recall[c] == s.recall[pc], "recall of class {c}");
        ensure!(r.f1[c] == s.f1[pc], "f1 of class {c}");
    }
    ensure!(r.f1_range() == s.f1_range(), "f1 range changed");
    let correct = preds.iter().zip(labels).filter(|(p, l)| p == l).count();
    ensure!(r.accuracy == 100.0 * correct as f64 / preds.len() as f64, "accuracy {}", r.accuracy);
    for v in r.precision.iter().chain(&r.recall).chain(&r.f1) {
        ensure!((0.0..=100.0).contains(v), "metric {v} outside [0, 100]");
    }
    for c in 0..4 {
        let (p, q) = (r.precision[c], r.recall[c]);
        let h = if p + q == 0.0 { 0.0 } else { 2.0 * p * q / (p + q) };
        ensure!(r.f1[c] == h, "f1 of class {c} is not the harmonic mean");
    }
    Ok(())
}

/// The miss rate lies in [0, 1] and never rises when a miss is removed.
pub fn miss_rate_bounded_and_monotone(flags: &[bool]) -> Check {
    let mut s = MissStats::new();
    flags.iter().for_each(|&f| s.record(f));
    let rate = miss_rate(&s).rate;
    ensure!((0.0..=1.0).contains(&rate), "rate {rate}");
    ensure!(s.misses() <= s.steps(), "more misses than steps");
    if let Some(i) = flags.iter().position(|&f| f) {
        let mut fewer = MissStats::new();
        flags.iter().enumerate().for_each(|(j, &f)| fewer.record(f && j != i));
        ensure!(fewer.rate() <= rate, "removing a miss raised the rate");
    }
    Ok(())
}

/// No optimizer moves, or reports a miss, on a zero gradient.
pub fn zero_gradient_is_a_fixed_point() -> Check {
    let zero = |p: &ParamSet<f64>| -> Result<Evaluation<f64>> {
        Ok(Evaluation { loss: 1.0, grads: p.zeros_like() })
    };
    let start = ParamSet::from_vec("w", vec![0.7, -1.3, 2.0]);
    let mut optimizers: Vec<Optimizer<f64>> = Rule::ALL
        .into_iter()
        .map(|rule| {
            let mut hyper = rule.default_hyper();
            // AdamW's decoupled decay shrinks weights regardless of the gradient.
            hyper.weight_decay = 0.0;
            Optimizer::classic(rule, hyper, &start)
        })
        .collect();
    optimizers.push(Optimizer::hd(HdConfig::default()));
    for per_parameter in [true, false] {
        for sign_param_step in [true, false] {
            let cfg = DsaConfig { per_parameter, sign_param_step, ..DsaConfig::default() };
            optimizers.push(Optimizer::dsa(cfg, &start).map_err(|e| e.to_string())?);
        }
    }
    for mut opt in optimizers {
        let mut w = start.clone();
        let mut stats = MissStats::new();
        for _ in 0..5 {
            opt.step(&mut w, &zero, Some(&mut stats)).map_err(|e| e.to_string())?;
        }
        ensure!(w == start, "{} moved on a zero gradient", opt.name());
        ensure!(stats.misses() == 0, "{} missed on a zero gradient", opt.name());
    }
    Ok(())
}
