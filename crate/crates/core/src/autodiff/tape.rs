use crate::autodiff::tensor::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
enum Op<S> {
    Leaf,
    MatMul(Var, Var),
    AddBias(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, S),
    Square(Var),
    Sum(Var),
    Dot(Var, Var),
    Sigmoid(Var),
    Prelu(Var, Var),
    LogSoftmax(Var),
    Nll(Var, Vec<usize>),
}

#[derive(Clone, Debug)]
struct Node<S> {
    op: Op<S>,
    value: Tensor<S>,
}

/// Append-only record of one forward evaluation.
///
/// Nodes are stored in creation order, so inputs always precede their
/// consumers. [`Tape::backward`] walks the nodes once in reverse and leaves
/// `d loss / d node` in every node's gradient slot; the tape cannot be
/// differentiated twice. Build a fresh tape per forward pass.
#[derive(Clone, Debug, Default)]
pub struct Tape<S> {
    nodes: Vec<Node<S>>,
    consumed: bool,
}

fn same_shape(primitive: &'static str, a: &[usize], b: &[usize]) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::ShapeMismatch {
            primitive,
            left: a.to_vec(),
            right: b.to_vec(),
        })
    }
}

fn sigmoid<S: Scalar>(x: S) -> S {
    if x >= S::zero() {
        S::one() / (S::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (S::one() + e)
    }
}

impl<S: Scalar> Tape<S> {
    pub fn new() -> Self {
        Self {
            nodes: Vec::new(),
            consumed: false,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn is_consumed(&self) -> bool {
        self.consumed
    }

    pub fn value(&self, v: Var) -> &Tensor<S> {
        &self.nodes[v.0].value
    }

    /// Gradient of the loss with respect to `v`, available after [`Tape::backward`].
    pub fn grad(&self, v: Var) -> Option<&[S]> {
        self.nodes[v.0].value.grad()
    }

    /// Moves the recorded tensor (with its gradient) out of the tape.
    pub fn take(&mut self, v: Var) -> Tensor<S> {
        std::mem::replace(&mut self.nodes[v.0].value, Tensor::zeros(Vec::new()))
    }

    fn push(&mut self, primitive: &'static str, op: Op<S>, value: Tensor<S>) -> Result<Var> {
        if !value.is_finite() {
            return Err(Error::NonFinite { primitive });
        }
        self.nodes.push(Node { op, value });
        Ok(Var(self.nodes.len() - 1))
    }

    fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    fn data(&self, v: Var) -> &[S] {
        self.nodes[v.0].value.data()
    }

    pub fn leaf(&mut self, tensor: Tensor<S>) -> Result<Var> {
        let mut tensor = tensor;
        tensor.clear_grad();
        self.push("leaf", Op::Leaf, tensor)
    }

    /// `[m, k] x [k, n] -> [m, n]`.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        let (m, k, n) = match (sa, sb) {
            ([m, k], [k2, n]) if k == k2 => (*m, *k, *n),
            _ => {
                return Err(Error::ShapeMismatch {
                    primitive: "matmul",
                    left: sa.to_vec(),
                    right: sb.to_vec(),
                })
            }
        };
        let mut out = vec![S::zero(); m * n];
        S::gemm(
            m,
            k,
            n,
            S::one(),
            self.data(a),
            (k as isize, 1),
            self.data(b),
            (n as isize, 1),
            S::zero(),
            &mut out,
            (n as isize, 1),
        );
        let value = Tensor::new(vec![m, n], out)?;
        self.push("matmul", Op::MatMul(a, b), value)
    }

    /// Adds a length-`n` bias to every row of an `[m, n]` matrix.
    pub fn add_bias(&mut self, x: Var, bias: Var) -> Result<Var> {
        let (sx, sb) = (self.shape(x), self.shape(bias));
        let n = match (sx, sb) {
            ([_, n], [nb]) if n == nb => *n,
            _ => {
                return Err(Error::ShapeMismatch {
                    primitive: "add_bias",
                    left: sx.to_vec(),
                    right: sb.to_vec(),
                })
            }
        };
        let b = self.data(bias);
        let out: Vec<S> = self
            .data(x)
            .iter()
            .enumerate()
            .map(|(i, &v)| v + b[i % n])
            .collect();
        let value = Tensor::new(sx.to_vec(), out)?;
        self.push("add_bias", Op::AddBias(x, bias), value)
    }

    fn zip_with(
        &mut self,
        primitive: &'static str,
        a: Var,
        b: Var,
        op: Op<S>,
        f: impl Fn(S, S) -> S,
    ) -> Result<Var> {
        same_shape(primitive, self.shape(a), self.shape(b))?;
        let out = self
            .data(a)
            .iter()
            .zip(self.data(b))
            .map(|(&x, &y)| f(x, y))
            .collect();
        let value = Tensor::new(self.shape(a).to_vec(), out)?;
        self.push(primitive, op, value)
    }

    fn map(&mut self, primitive: &'static str, x: Var, op: Op<S>, f: impl Fn(S) -> S) -> Result<Var> {
        let out = self.data(x).iter().map(|&v| f(v)).collect();
        let value = Tensor::new(self.shape(x).to_vec(), out)?;
        self.push(primitive, op, value)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_with("add", a, b, Op::Add(a, b), |x, y| x + y)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_with("sub", a, b, Op::Sub(a, b), |x, y| x - y)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_with("mul", a, b, Op::Mul(a, b), |x, y| x * y)
    }

    pub fn scale(&mut self, x: Var, factor: S) -> Result<Var> {
        self.map("scale", x, Op::Scale(x, factor), |v| v * factor)
    }

    pub fn square(&mut self, x: Var) -> Result<Var> {
        self.map("square", x, Op::Square(x), |v| v * v)
    }

    pub fn sigmoid(&mut self, x: Var) -> Result<Var> {
        self.map("sigmoid", x, Op::Sigmoid(x), sigmoid)
    }

    /// Sum of all elements, as a scalar.
    pub fn sum(&mut self, x: Var) -> Result<Var> {
        let total = self.data(x).iter().fold(S::zero(), |acc, &v| acc + v);
        self.push("sum", Op::Sum(x), Tensor::scalar(total))
    }

    /// Inner product of two equally shaped tensors, as a scalar.
    pub fn dot(&mut self, a: Var, b: Var) -> Result<Var> {
        same_shape("dot", self.shape(a), self.shape(b))?;
        let total = self
            .data(a)
            .iter()
            .zip(self.data(b))
            .fold(S::zero(), |acc, (&x, &y)| acc + x * y);
        self.push("dot", Op::Dot(a, b), Tensor::scalar(total))
    }

    /// Parametric ReLU with one learnable negative slope (a one-element tensor).
    pub fn prelu(&mut self, x: Var, slope: Var) -> Result<Var> {
        if self.data(slope).len() != 1 {
            return Err(Error::ShapeMismatch {
                primitive: "prelu",
                left: self.shape(x).to_vec(),
                right: self.shape(slope).to_vec(),
            });
        }
        let a = self.data(slope)[0];
        self.map("prelu", x, Op::Prelu(x, slope), move |v| {
            if v >= S::zero() {
                v
            } else {
                a * v
            }
        })
    }

    /// Row-wise log-softmax of an `[m, n]` matrix.
    pub fn log_softmax(&mut self, x: Var) -> Result<Var> {
        let shape = self.shape(x).to_vec();
        let [_, n] = shape[..] else {
            return Err(Error::ShapeMismatch {
                primitive: "log_softmax",
                left: shape,
                right: vec![],
            });
        };
        let mut out = Vec::with_capacity(self.data(x).len());
        for row in self.data(x).chunks(n.max(1)) {
            let max = row.iter().fold(S::neg_infinity(), |m, &v| m.max(v));
            let log_norm = row.iter().map(|&v| (v - max).exp()).sum::<S>().ln() + max;
            out.extend(row.iter().map(|&v| v - log_norm));
        }
        let value = Tensor::new(shape, out)?;
        self.push("log_softmax", Op::LogSoftmax(x), value)
    }

    /// Mean negative log-likelihood of `labels` under row-wise log-probabilities.
    pub fn nll(&mut self, log_probs: Var, labels: &[usize]) -> Result<Var> {
        let shape = self.shape(log_probs).to_vec();
        let (m, n) = match shape[..] {
            [m, n] if m == labels.len() && m > 0 => (m, n),
            _ => {
                return Err(Error::ShapeMismatch {
                    primitive: "nll",
                    left: shape,
                    right: vec![labels.len()],
                })
            }
        };
        if let Some(bad) = labels.iter().find(|&&c| c >= n) {
            return Err(Error::invalid(format!(
                "nll: label {bad} out of range for {n} classes"
            )));
        }
        let lp = self.data(log_probs);
        let total = labels
            .iter()
            .enumerate()
            .fold(S::zero(), |acc, (i, &c)| acc - lp[i * n + c]);
        let loss = total / S::from_usize(m).expect("batch size fits scalar");
        self.push("nll", Op::Nll(log_probs, labels.to_vec()), Tensor::scalar(loss))
    }

    /// Reverse pass from `loss`, which must be the scalar last recorded.
    ///
    /// Afterwards every node holds its gradient (zeros for nodes the loss does
    /// not depend on) and the tape is marked consumed.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if self.consumed {
            return Err(Error::TapeConsumed);
        }
        let Some(last) = self.nodes.len().checked_sub(1) else {
            return Err(Error::BadTape("empty tape".into()));
        };
        if loss.0 != last {
            return Err(Error::BadTape(format!(
                "loss node {} is not the final node {last}",
                loss.0
            )));
        }
        if !self.nodes[last].value.is_scalar() {
            return Err(Error::NonScalarLoss(self.nodes[last].value.shape().to_vec()));
        }
        self.consumed = true;

        let mut adj: Vec<Option<Vec<S>>> = vec![None; self.nodes.len()];
        adj[last] = Some(vec![S::one()]);

        for i in (0..self.nodes.len()).rev() {
            let g = adj[i]
                .take()
                .unwrap_or_else(|| vec![S::zero(); self.nodes[i].value.len()]);
            if g.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    primitive: "backward",
                });
            }
            self.propagate(i, &g, &mut adj)?;
            self.nodes[i].value.set_grad(g)?;
        }
        Ok(())
    }

    fn propagate(&self, i: usize, g: &[S], adj: &mut [Option<Vec<S>>]) -> Result<()> {
        let node = &self.nodes[i];
        match &node.op {
            Op::Leaf => {}
            &Op::MatMul(a, b) => {
                let (m, k) = self.nodes[a.0].value.dims2().expect("matmul lhs is 2-D");
                let n = self.nodes[b.0].value.dims2().expect("matmul rhs is 2-D").1;
                // dA = G B^T
                let mut da = vec![S::zero(); m * k];
                S::gemm(
                    m,
                    n,
                    k,
                    S::one(),
                    g,
                    (n as isize, 1),
                    self.data(b),
                    (1, n as isize),
                    S::zero(),
                    &mut da,
                    (k as isize, 1),
                );
                // dB = A^T G
                let mut db = vec![S::zero(); k * n];
                S::gemm(
                    k,
                    m,
                    n,
                    S::one(),
                    self.data(a),
                    (1, k as isize),
                    g,
                    (n as isize, 1),
                    S::zero(),
                    &mut db,
                    (n as isize, 1),
                );
                accumulate(adj, a, da);
                accumulate(adj, b, db);
            }
            &Op::AddBias(x, bias) => {
                let n = self.nodes[bias.0].value.len();
                let mut db = vec![S::zero(); n];
                for (j, &v) in g.iter().enumerate() {
                    db[j % n] += v;
                }
                accumulate(adj, x, g.to_vec());
                accumulate(adj, bias, db);
            }
            &Op::Add(a, b) => {
                accumulate(adj, a, g.to_vec());
                accumulate(adj, b, g.to_vec());
            }
            &Op::Sub(a, b) => {
                accumulate(adj, a, g.to_vec());
                accumulate(adj, b, g.iter().map(|&v| -v).collect());
            }
            &Op::Mul(a, b) => {
                let (da, db) = (self.data(a), self.data(b));
                accumulate(adj, a, g.iter().zip(db).map(|(&u, &y)| u * y).collect());
                accumulate(adj, b, g.iter().zip(da).map(|(&u, &x)| u * x).collect());
            }
            &Op::Scale(x, factor) => {
                accumulate(adj, x, g.iter().map(|&u| u * factor).collect());
            }
            &Op::Square(x) => {
                let two = S::lit(2.0);
                let dx = g
                    .iter()
                    .zip(self.data(x))
                    .map(|(&u, &v)| u * two * v)
                    .collect();
                accumulate(adj, x, dx);
            }
            &Op::Sum(x) => {
                accumulate(adj, x, vec![g[0]; self.nodes[x.0].value.len()]);
            }
            &Op::Dot(a, b) => {
                let u = g[0];
                accumulate(adj, a, self.data(b).iter().map(|&y| u * y).collect());
                accumulate(adj, b, self.data(a).iter().map(|&x| u * x).collect());
            }
            &Op::Sigmoid(x) => {
                let dx = g
                    .iter()
                    .zip(node.value.data())
                    .map(|(&u, &y)| u * y * (S::one() - y))
                    .collect();
                accumulate(adj, x, dx);
            }
            &Op::Prelu(x, slope) => {
                let a = self.data(slope)[0];
                let mut ds = S::zero();
                let dx = g
                    .iter()
                    .zip(self.data(x))
                    .map(|(&u, &v)| {
                        if v >= S::zero() {
                            u
                        } else {
                            ds += u * v;
                            u * a
                        }
                    })
                    .collect();
                accumulate(adj, x, dx);
                accumulate(adj, slope, vec![ds]);
            }
            &Op::LogSoftmax(x) => {
                let n = node.value.dims2().expect("log_softmax is 2-D").1.max(1);
                let mut dx = Vec::with_capacity(g.len());
                for (gr, yr) in g.chunks(n).zip(node.value.data().chunks(n)) {
                    let total: S = gr.iter().copied().sum();
                    dx.extend(gr.iter().zip(yr).map(|(&u, &y)| u - y.exp() * total));
                }
                accumulate(adj, x, dx);
            }
            Op::Nll(lp, labels) => {
                let (m, n) = self.nodes[lp.0].value.dims2().expect("nll input is 2-D");
                let w = -g[0] / S::from_usize(m).expect("batch size fits scalar");
                let mut dx = vec![S::zero(); m * n];
                for (r, &c) in labels.iter().enumerate() {
                    dx[r * n + c] = w;
                }
                accumulate(adj, *lp, dx);
            }
        }
        Ok(())
    }
}

fn accumulate<S: Scalar>(adj: &mut [Option<Vec<S>>], v: Var, g: Vec<S>) {
    match &mut adj[v.0] {
        Some(existing) => existing.iter_mut().zip(g).for_each(|(e, x)| *e += x),
        slot @ None => *slot = Some(g),
    }
}
