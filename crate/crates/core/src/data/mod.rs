//! Tabular datasets: parsing, encoding, deterministic splits and batching.

mod encode;
mod uci;

pub use encode::{ColumnKind, ColumnRule, Encoded, EncodingPlan, RawTable};
pub use uci::{default_data_dir, sha256_hex, verify_file, DatasetId};

use std::path::Path;

use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub enum Targets<S> {
    /// Regression targets, shape `[rows, 1]`.
    Values(Tensor<S>),
    Classes(Vec<usize>),
}

/// Inputs `[rows, dim]` with one target per row.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch<S> {
    pub inputs: Tensor<S>,
    pub targets: Targets<S>,
}

impl<S: Scalar> Batch<S> {
    pub fn len(&self) -> usize {
        self.inputs.shape().first().copied().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn labels(&self) -> Option<&[usize]> {
        match &self.targets {
            Targets::Classes(c) => Some(c),
            Targets::Values(_) => None,
        }
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let (rows, dim) = self
            .inputs
            .dims2()
            .ok_or_else(|| Error::invalid("batch inputs must be 2-D"))?;
        if let Some(&bad) = indices.iter().find(|&&i| i >= rows) {
            return Err(Error::invalid(format!("row {bad} out of range for {rows} rows")));
        }
        let x = self.inputs.data();
        let inputs = indices.iter().flat_map(|&i| x[i * dim..(i + 1) * dim].iter().copied()).collect();
        let targets = match &self.targets {
            Targets::Classes(c) => Targets::Classes(indices.iter().map(|&i| c[i]).collect()),
            Targets::Values(y) => {
                let w = y.len() / rows;
                let y = y.data();
                let v = indices.iter().flat_map(|&i| y[i * w..(i + 1) * w].iter().copied()).collect();
                Targets::Values(Tensor::matrix(indices.len(), w, v)?)
            }
        };
        Ok(Self {
            inputs: Tensor::matrix(indices.len(), dim, inputs)?,
            targets,
        })
    }
}

/// Encoded classification data held in `f64`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    dim: usize,
    labels: Vec<usize>,
    plan: EncodingPlan,
}

impl Dataset {
    pub fn from_table(table: &RawTable, plan: EncodingPlan) -> Result<Self> {
        let Encoded { features, dim, labels } = plan.encode(table)?;
        Ok(Self { features, dim, labels, plan })
    }

    pub fn new(features: Vec<f64>, dim: usize, labels: Vec<usize>, plan: EncodingPlan) -> Result<Self> {
        if dim == 0 || features.len() != dim * labels.len() {
            return Err(Error::Dataset(format!(
                "{} values do not form {} rows of width {dim}",
                features.len(),
                labels.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l >= plan.classes.len()) {
            return Err(Error::Dataset(format!("label {bad} out of range")));
        }
        Ok(Self { features, dim, labels, plan })
    }

    pub fn rows(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn class_count(&self) -> usize {
        self.plan.classes.len()
    }

    pub fn class_names(&self) -> &[String] {
        &self.plan.classes
    }

    pub fn plan(&self) -> &EncodingPlan {
        &self.plan
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            features: indices.iter().flat_map(|&i| self.row(i).iter().copied()).collect(),
            dim: self.dim,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            plan: self.plan.clone(),
        }
    }

    pub fn batch<S: Scalar>(&self, indices: &[usize]) -> Batch<S> {
        let inputs = indices
            .iter()
            .flat_map(|&i| self.row(i).iter().map(|&v| S::lit(v)))
            .collect();
        Batch {
            inputs: Tensor::matrix(indices.len(), self.dim, inputs).expect("rows of width dim"),
            targets: Targets::Classes(indices.iter().map(|&i| self.labels[i]).collect()),
        }
    }

    pub fn full_batch<S: Scalar>(&self) -> Batch<S> {
        self.batch(&(0..self.rows()).collect::<Vec<_>>())
    }

    /// Rows per class.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_count()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }
}

pub fn load_csv(path: &Path, plan: &EncodingPlan) -> Result<Dataset> {
    Dataset::from_table(&RawTable::read(path)?, plan.clone())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SplitSize {
    /// Train share in `(0, 1)`; the train count is `round(fraction * rows)`.
    Fraction(f64),
    /// Exact train and test counts, which must add up to the row count.
    Counts { train: usize, test: usize },
}

/// Disjoint train/test partition of one dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetSplit {
    pub train: Dataset,
    pub test: Dataset,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

impl DatasetSplit {
    pub fn feature_dim(&self) -> usize {
        self.train.dim()
    }

    pub fn class_count(&self) -> usize {
        self.train.class_count()
    }
}

/// Seeded shuffle, then the first rows train and the rest test.
pub fn split(data: &Dataset, size: SplitSize, rng: &mut Rng) -> Result<DatasetSplit> {
    let n = data.rows();
    let train = match size {
        SplitSize::Fraction(f) if f > 0.0 && f < 1.0 => (f * n as f64).round() as usize,
        SplitSize::Fraction(f) => {
            return Err(Error::invalid(format!("train fraction {f} outside (0, 1)")))
        }
        SplitSize::Counts { train, test } if train + test == n => train,
        SplitSize::Counts { train, test } => {
            return Err(Error::invalid(format!("split {train}+{test} does not cover {n} rows")))
        }
    };
    if train < data.class_count() {
        return Err(Error::Dataset(format!(
            "{train} training rows cannot cover {} classes",
            data.class_count()
        )));
    }
    let order = rng.permutation(n);
    let (tr, te) = order.split_at(train);
    Ok(DatasetSplit {
        train: data.select(tr),
        test: data.select(te),
        train_indices: tr.to_vec(),
        test_indices: te.to_vec(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BatchMode {
    Full,
    Size(usize),
}

/// Per-epoch batch index plans over `rows` training rows.
#[derive(Clone, Debug)]
pub struct Batcher {
    rows: usize,
    size: usize,
    shuffle: bool,
    rng: Rng,
}

impl Batcher {
    pub fn new(rows: usize, mode: BatchMode, shuffle: bool, rng: Rng) -> Result<Self> {
        let size = match mode {
            BatchMode::Full => rows,
            BatchMode::Size(0) => return Err(Error::invalid("batch size must be positive")),
            BatchMode::Size(s) => s.min(rows),
        };
        if rows == 0 {
            return Err(Error::invalid("cannot batch zero rows"));
        }
        Ok(Self { rows, size, shuffle, rng })
    }

    pub fn batches_per_epoch(&self) -> usize {
        self.rows.div_ceil(self.size)
    }

    /// Row indices of each batch for the next epoch; every row appears once.
    pub fn next_epoch(&mut self) -> Vec<Vec<usize>> {
        let order = if self.shuffle {
            self.rng.permutation(self.rows)
        } else {
            (0..self.rows).collect()
        };
        order.chunks(self.size).map(<[usize]>::to_vec).collect()
    }
}
