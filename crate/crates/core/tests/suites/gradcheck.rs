//! Tape gradients against central finite differences for every objective.
//! Each check returns the largest relative error it saw.

use dsa_core::autodiff::gradcheck::{
    central_differences, central_differences_at, max_relative_error, relative_error,
};
use dsa_core::data::{default_data_dir, split, Batch, DatasetId, SplitSize};
use dsa_core::problems::{
    evaluate, loss, MinibatchTrap, Mlp, MlpSpec, Objective, Quadratic, ScalarSquare, SumRegression,
};
use dsa_core::{ParamSet, Rng, Stream};

pub const STEP: f64 = 1e-6;
pub const TOL: f64 = 1e-5;
pub const SEEDS: u64 = 10;

fn full_check(obj: &dyn Objective<f64>, params: &ParamSet<f64>, batch: Option<&Batch<f64>>) -> f64 {
    let analytic = evaluate(obj, params, batch).unwrap().grads;
    let numeric = central_differences(params, STEP, |p| loss(obj, p, batch)).unwrap();
    max_relative_error(&analytic, &numeric).unwrap()
}

fn init(obj: &dyn Objective<f64>, seed: u64) -> ParamSet<f64> {
    obj.init_params(&mut Rng::stream(seed, Stream::Init)).unwrap()
}

pub fn quadratics_and_scalar_square(seed: u64) -> f64 {
    let objectives: Vec<Box<dyn Objective<f64>>> = vec![
        Box::new(Quadratic::new(1.0, 95.0).unwrap()),
        Box::new(Quadratic::new(1.0, 1000.0).unwrap()),
        Box::new(ScalarSquare::default()),
    ];
    objectives
        .iter()
        .map(|obj| {
            let mut p = init(obj.as_ref(), seed);
            // Move scalar_square off its fixed start so seeds differ.
            let mut rng = Rng::stream(seed, Stream::Perturb);
            p.iter_values_mut().for_each(|v| *v += rng.uniform(-0.5, 0.5));
            full_check(obj.as_ref(), &p, None)
        })
        .fold(0.0, f64::max)
}

pub fn sum_regression(seed: u64) -> f64 {
    let obj = SumRegression::standard(seed).unwrap();
    full_check(&obj, &init(&obj, seed), None)
}

pub fn minibatch_trap(seed: u64) -> f64 {
    let obj = MinibatchTrap::default();
    let p = init(&obj, seed);
    [Some(obj.batch_a()), Some(obj.batch_b()), None]
        .into_iter()
        .map(|batch| full_check(&obj, &p, batch))
        .fold(0.0, f64::max)
}

/// Every coordinate of a narrow MLP on 16 IRIS rows.
pub fn small_mlp(seed: u64) -> f64 {
    let spec = MlpSpec {
        input_dim: 4,
        hidden: vec![5, 6, 4, 3],
        classes: 3,
    };
    let mlp = Mlp::new(spec).unwrap();
    let data = DatasetId::Iris.load(&default_data_dir()).unwrap();
    let s = split(&data, SplitSize::Fraction(0.8), &mut Rng::stream(seed, Stream::Split)).unwrap();
    let batch = s.train.batch(&(0..16).collect::<Vec<_>>());
    full_check(&mlp, &init(&mlp, seed), Some(&batch))
}

/// Up to 12 sampled coordinates per tensor of the full-size IRIS MLP.
pub fn iris_mlp_sampled(seed: u64) -> f64 {
    let mlp = Mlp::new(MlpSpec::new(4, 3)).unwrap();
    let data = DatasetId::Iris.load(&default_data_dir()).unwrap();
    let s = split(&data, SplitSize::Fraction(0.8), &mut Rng::stream(seed, Stream::Split)).unwrap();
    let batch = s.train.full_batch();
    let p = init(&mlp, seed);
    let analytic = evaluate(&mlp, &p, Some(&batch)).unwrap().grads;
    let mut rng = Rng::stream(seed, Stream::Perturb);
    // Every tensor gets sampled, including both PReLU slopes.
    let coords: Vec<(usize, usize)> = (0..p.len())
        .flat_map(|t| {
            let n = p.tensors()[t].len();
            (0..n.min(12)).map(|_| (t, (rng.next_u64() % n as u64) as usize)).collect::<Vec<_>>()
        })
        .collect();
    let numeric = central_differences_at(&p, STEP, &coords, |q| loss(&mlp, q, Some(&batch))).unwrap();
    coords
        .iter()
        .zip(numeric)
        .map(|(&(t, i), n)| relative_error(analytic.tensors()[t].data()[i], n))
        .fold(0.0, f64::max)
}

pub type Check = (&'static str, fn(u64) -> f64);

pub const CHECKS: [Check; 5] = [
    ("quadratics", quadratics_and_scalar_square),
    ("sum_regression", sum_regression),
    ("minibatch_trap", minibatch_trap),
    ("small_mlp", small_mlp),
    ("iris_mlp", iris_mlp_sampled),
];
