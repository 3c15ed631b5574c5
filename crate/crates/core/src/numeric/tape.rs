//! Reverse-mode automatic differentiation over [`Tensor`] values.
//!
//! A [`Tape`] records primitive applications in creation order, which is a
//! topological order by construction. [`Tape::backward`] walks the nodes in
//! reverse exactly once and returns gradients keyed by [`ParamId`].

use std::collections::HashMap;

use rand::Rng;

use super::tensor::{dot, sigmoid, softmax_unchecked, Tensor, PROB_EPS};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub usize);

/// Named trainable tensors.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    names: Vec<String>,
    values: Vec<Tensor>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, value: Tensor) -> ParamId {
        self.names.push(name.into());
        self.values.push(value);
        ParamId(self.values.len() - 1)
    }

    /// Adds a tensor drawn uniformly from `[-scale, scale]`.
    pub fn add_uniform<R: Rng>(
        &mut self,
        name: impl Into<String>,
        shape: &[usize],
        scale: f64,
        rng: &mut R,
    ) -> ParamId {
        let numel: usize = shape.iter().product();
        let data = (0..numel)
            .map(|_| rng.random_range(-scale..=scale))
            .collect();
        let t = Tensor::new(shape.to_vec(), data).expect("shape and data agree");
        self.add(name, t)
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.values[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.values[id.0]
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.values.len()).map(ParamId)
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.names.iter().position(|n| n == name).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &str, &Tensor)> {
        self.names
            .iter()
            .zip(&self.values)
            .enumerate()
            .map(|(i, (n, v))| (ParamId(i), n.as_str(), v))
    }

    /// Total number of scalar parameters.
    pub fn numel(&self) -> usize {
        self.values.iter().map(Tensor::len).sum()
    }
}

/// Gradients of a scalar loss keyed by parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn zeros_like(store: &ParamStore) -> Self {
        Self {
            grads: vec![None; store.len()],
        }
    }

    pub fn get(&self, id: ParamId) -> Option<&Tensor> {
        self.grads.get(id.0).and_then(Option::as_ref)
    }

    /// Adds `other` into `self` (entry-wise, fixed order).
    pub fn accumulate(&mut self, other: &Gradients) {
        if self.grads.len() < other.grads.len() {
            self.grads.resize(other.grads.len(), None);
        }
        for (mine, theirs) in self.grads.iter_mut().zip(&other.grads) {
            match (mine.as_mut(), theirs) {
                (_, None) => {}
                (None, Some(t)) => *mine = Some(t.clone()),
                (Some(m), Some(t)) => {
                    for (a, b) in m.data_mut().iter_mut().zip(t.data()) {
                        *a += b;
                    }
                }
            }
        }
    }

    pub fn len(&self) -> usize {
        self.grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grads.iter().all(Option::is_none)
    }
}

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug, Clone)]
enum Op {
    Param(ParamId),
    Input,
    MatMul(Var, Var),
    MatVec(Var, Var),
    VecMat(Var, Var),
    Transpose(Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    AddRowBias(Var, Var),
    AddScalar(Var, Var),
    Sigmoid(Var),
    Tanh(Var),
    Exp(Var),
    Ln(Var),
    Square(Var),
    Softmax(Var),
    Sum(Var),
    Dot(Var, Var),
    Concat(Vec<Var>),
    Slice(Var, usize),
    GatherRow(Var, usize),
    Index(Var, usize),
    CrossEntropy(Var, Vec<f64>),
}

struct Node {
    op: Op,
    value: Option<Tensor>,
    needs_grad: bool,
}

/// Single-owner recording of a computation over a borrowed [`ParamStore`].
pub struct Tape<'p> {
    params: &'p ParamStore,
    nodes: Vec<Node>,
    param_vars: HashMap<ParamId, Var>,
}

impl<'p> Tape<'p> {
    pub fn new(params: &'p ParamStore) -> Self {
        Self {
            params,
            nodes: Vec::new(),
            param_vars: HashMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        let node = &self.nodes[v.0];
        match (&node.op, &node.value) {
            (Op::Param(id), _) => self.params.get(*id),
            (_, Some(t)) => t,
            _ => unreachable!("non-parameter nodes always hold a value"),
        }
    }

    fn push(&mut self, op: Op, value: Tensor, needs_grad: bool) -> Var {
        self.nodes.push(Node {
            op,
            value: Some(value),
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    /// Leaf referring to a stored parameter. Repeated calls share one node.
    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(v) = self.param_vars.get(&id) {
            return *v;
        }
        self.nodes.push(Node {
            op: Op::Param(id),
            value: None,
            needs_grad: true,
        });
        let v = Var(self.nodes.len() - 1);
        self.param_vars.insert(id, v);
        v
    }

    /// Constant leaf; no gradient flows into it.
    pub fn input(&mut self, value: Tensor) -> Var {
        self.push(Op::Input, value, false)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).matmul(self.value(b))?;
        let ng = self.needs(a) || self.needs(b);
        Ok(self.push(Op::MatMul(a, b), out, ng))
    }

    pub fn matvec(&mut self, w: Var, x: Var) -> Result<Var> {
        let out = self.value(w).matvec(self.value(x))?;
        let ng = self.needs(w) || self.needs(x);
        Ok(self.push(Op::MatVec(w, x), out, ng))
    }

    /// `xᵀ · m` for a vector `x` of length `rows(m)`.
    pub fn vecmat(&mut self, x: Var, m: Var) -> Result<Var> {
        let xv = self.value(x);
        let mv = self.value(m);
        let len = xv.expect_vector("vecmat vector")?;
        let (r, c) = mv.expect_matrix("vecmat matrix")?;
        if len != r {
            return Err(Error::Dimension(format!(
                "vecmat of {:?} and {:?}: inner extents differ",
                xv.shape(),
                mv.shape()
            )));
        }
        let mut out = vec![0.0; c];
        for (i, &xi) in xv.data().iter().enumerate() {
            for (o, &mij) in out.iter_mut().zip(mv.row(i)) {
                *o += xi * mij;
            }
        }
        let ng = self.needs(x) || self.needs(m);
        Ok(self.push(Op::VecMat(x, m), Tensor::vector(out), ng))
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).transpose()?;
        let ng = self.needs(a);
        Ok(self.push(Op::Transpose(a), out, ng))
    }

    fn same_shape(&self, a: Var, b: Var, what: &str) -> Result<()> {
        let (sa, sb) = (self.value(a).shape(), self.value(b).shape());
        if sa != sb {
            return Err(Error::Dimension(format!(
                "{what} of {sa:?} and {sb:?}: shapes differ"
            )));
        }
        Ok(())
    }

    fn zip_with(&mut self, a: Var, b: Var, op: Op, f: impl Fn(f64, f64) -> f64) -> Var {
        let ta = self.value(a);
        let tb = self.value(b);
        let data = ta
            .data()
            .iter()
            .zip(tb.data())
            .map(|(x, y)| f(*x, *y))
            .collect();
        let out = Tensor::new(ta.shape().to_vec(), data).expect("same shape");
        let ng = self.needs(a) || self.needs(b);
        self.push(op, out, ng)
    }

    fn map(&mut self, a: Var, op: Op, f: impl Fn(f64) -> f64) -> Var {
        let ta = self.value(a);
        let data = ta.data().iter().map(|x| f(*x)).collect();
        let out = Tensor::new(ta.shape().to_vec(), data).expect("same shape");
        let ng = self.needs(a);
        self.push(op, out, ng)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "add")?;
        Ok(self.zip_with(a, b, Op::Add(a, b), |x, y| x + y))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "sub")?;
        Ok(self.zip_with(a, b, Op::Sub(a, b), |x, y| x - y))
    }

    /// Element-wise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "mul")?;
        Ok(self.zip_with(a, b, Op::Mul(a, b), |x, y| x * y))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        self.map(a, Op::Scale(a, c), |x| c * x)
    }

    /// Adds vector `b` to every row of matrix `m`.
    pub fn add_row_bias(&mut self, m: Var, b: Var) -> Result<Var> {
        let tm = self.value(m);
        let tb = self.value(b);
        let (_, c) = tm.expect_matrix("add_row_bias matrix")?;
        let len = tb.expect_vector("add_row_bias bias")?;
        if c != len {
            return Err(Error::Dimension(format!(
                "add_row_bias of {:?} and {:?}: column count differs",
                tm.shape(),
                tb.shape()
            )));
        }
        let data = tm
            .data()
            .chunks(c)
            .flat_map(|row| row.iter().zip(tb.data()).map(|(x, y)| x + y))
            .collect();
        let out = Tensor::new(tm.shape().to_vec(), data)?;
        let ng = self.needs(m) || self.needs(b);
        Ok(self.push(Op::AddRowBias(m, b), out, ng))
    }

    /// Adds a single-element tensor `s` to every entry of `a`.
    pub fn add_scalar(&mut self, a: Var, s: Var) -> Result<Var> {
        let sv = self.value(s).item()?;
        let out = self.map(a, Op::Input, |x| x + sv);
        self.nodes[out.0].op = Op::AddScalar(a, s);
        self.nodes[out.0].needs_grad = self.needs(a) || self.needs(s);
        Ok(out)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.map(a, Op::Sigmoid(a), sigmoid)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.map(a, Op::Tanh(a), f64::tanh)
    }

    pub fn exp(&mut self, a: Var) -> Var {
        self.map(a, Op::Exp(a), f64::exp)
    }

    pub fn ln(&mut self, a: Var) -> Var {
        self.map(a, Op::Ln(a), f64::ln)
    }

    pub fn square(&mut self, a: Var) -> Var {
        self.map(a, Op::Square(a), |x| x * x)
    }

    pub fn softmax(&mut self, a: Var) -> Result<Var> {
        let ta = self.value(a);
        ta.expect_vector("softmax")?;
        let out = super::tensor::softmax(ta.data())?;
        let ng = self.needs(a);
        Ok(self.push(Op::Softmax(a), Tensor::vector(out), ng))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).data().iter().sum();
        let ng = self.needs(a);
        self.push(Op::Sum(a), Tensor::scalar(s), ng)
    }

    pub fn dot(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "dot")?;
        let s = dot(self.value(a).data(), self.value(b).data());
        let ng = self.needs(a) || self.needs(b);
        Ok(self.push(Op::Dot(a, b), Tensor::scalar(s), ng))
    }

    /// Concatenates vectors.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        let mut data = Vec::new();
        let mut ng = false;
        for &p in parts {
            let t = self.value(p);
            t.expect_vector("concat")?;
            data.extend_from_slice(t.data());
            ng |= self.needs(p);
        }
        Ok(self.push(Op::Concat(parts.to_vec()), Tensor::vector(data), ng))
    }

    /// Contiguous sub-vector `a[start..start + len]`.
    pub fn slice(&mut self, a: Var, start: usize, len: usize) -> Result<Var> {
        let t = self.value(a);
        let n = t.expect_vector("slice")?;
        if start + len > n {
            return Err(Error::Dimension(format!(
                "slice [{start}, {}) out of bounds for length {n}",
                start + len
            )));
        }
        let out = Tensor::vector(t.data()[start..start + len].to_vec());
        let ng = self.needs(a);
        Ok(self.push(Op::Slice(a, start), out, ng))
    }

    /// Row `index` of a matrix, as a vector (embedding lookup).
    pub fn gather_row(&mut self, table: Var, index: usize) -> Result<Var> {
        let t = self.value(table);
        let (r, _) = t.expect_matrix("gather_row")?;
        if index >= r {
            return Err(Error::Dimension(format!(
                "row {index} out of bounds for {:?}",
                t.shape()
            )));
        }
        let out = Tensor::vector(t.row(index).to_vec());
        let ng = self.needs(table);
        Ok(self.push(Op::GatherRow(table, index), out, ng))
    }

    /// Single entry `a[index]` of a vector as a scalar.
    pub fn index(&mut self, a: Var, index: usize) -> Result<Var> {
        let t = self.value(a);
        if index >= t.len() {
            return Err(Error::Dimension(format!(
                "index {index} out of bounds for {:?}",
                t.shape()
            )));
        }
        let out = Tensor::scalar(t.data()[index]);
        let ng = self.needs(a);
        Ok(self.push(Op::Index(a, index), out, ng))
    }

    /// Summed binary cross-entropy of probabilities `p` against 0/1 `labels`.
    pub fn cross_entropy(&mut self, p: Var, labels: &[f64]) -> Result<Var> {
        let t = self.value(p);
        if t.len() != labels.len() {
            return Err(Error::Dimension(format!(
                "cross_entropy of {} probabilities and {} labels",
                t.len(),
                labels.len()
            )));
        }
        let mut loss = 0.0;
        for (&pi, &yi) in t.data().iter().zip(labels) {
            loss += super::tensor::cross_entropy(pi, yi)?;
        }
        let ng = self.needs(p);
        Ok(self.push(
            Op::CrossEntropy(p, labels.to_vec()),
            Tensor::scalar(loss),
            ng,
        ))
    }

    /// Reverse accumulation from a single-element `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let lt = self.value(loss);
        if lt.len() != 1 {
            return Err(Error::Argument(format!(
                "backward needs a scalar loss, got shape {:?}",
                lt.shape()
            )));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(vec![1.0]);
        let mut out = Gradients::zeros_like(self.params);

        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            if !node.needs_grad {
                continue;
            }
            match &node.op {
                Op::Param(id) => {
                    let shape = self.params.get(*id).shape().to_vec();
                    out.grads[id.0] = Some(Tensor::new(shape, g)?);
                }
                Op::Input => {}
                Op::MatMul(a, b) => {
                    let (ta, tb) = (self.value(*a), self.value(*b));
                    let (m, k) = (ta.shape()[0], ta.shape()[1]);
                    let n = tb.shape()[1];
                    if self.needs(*a) {
                        let ga = acc(&mut grads, *a, m * k);
                        for r in 0..m {
                            let grow = &g[r * n..(r + 1) * n];
                            for p in 0..k {
                                ga[r * k + p] += dot(grow, tb.row(p));
                            }
                        }
                    }
                    if self.needs(*b) {
                        let gb = acc(&mut grads, *b, k * n);
                        for r in 0..m {
                            let grow = &g[r * n..(r + 1) * n];
                            for p in 0..k {
                                let a_rp = ta.data()[r * k + p];
                                if a_rp == 0.0 {
                                    continue;
                                }
                                for (o, &gv) in gb[p * n..(p + 1) * n].iter_mut().zip(grow) {
                                    *o += a_rp * gv;
                                }
                            }
                        }
                    }
                }
                Op::MatVec(w, x) => {
                    let (tw, tx) = (self.value(*w), self.value(*x));
                    let (m, n) = (tw.shape()[0], tw.shape()[1]);
                    if self.needs(*w) {
                        let gw = acc(&mut grads, *w, m * n);
                        for (r, &gr) in g.iter().enumerate() {
                            if gr == 0.0 {
                                continue;
                            }
                            for (o, &xv) in gw[r * n..(r + 1) * n].iter_mut().zip(tx.data()) {
                                *o += gr * xv;
                            }
                        }
                    }
                    if self.needs(*x) {
                        let gx = acc(&mut grads, *x, n);
                        for (r, &gr) in g.iter().enumerate() {
                            for (o, &wv) in gx.iter_mut().zip(tw.row(r)) {
                                *o += gr * wv;
                            }
                        }
                    }
                }
                Op::VecMat(x, m) => {
                    let (tx, tm) = (self.value(*x), self.value(*m));
                    let (r, c) = (tm.shape()[0], tm.shape()[1]);
                    if self.needs(*x) {
                        let gx = acc(&mut grads, *x, r);
                        for (i, o) in gx.iter_mut().enumerate() {
                            *o += dot(tm.row(i), &g);
                        }
                    }
                    if self.needs(*m) {
                        let gm = acc(&mut grads, *m, r * c);
                        for (i, &xi) in tx.data().iter().enumerate() {
                            for (o, &gv) in gm[i * c..(i + 1) * c].iter_mut().zip(&g) {
                                *o += xi * gv;
                            }
                        }
                    }
                }
                Op::Transpose(a) => {
                    let ta = self.value(*a);
                    let (m, n) = (ta.shape()[0], ta.shape()[1]);
                    let ga = acc(&mut grads, *a, m * n);
                    for r in 0..m {
                        for c in 0..n {
                            ga[r * n + c] += g[c * m + r];
                        }
                    }
                }
                Op::Add(a, b) => {
                    for v in [*a, *b] {
                        if self.needs(v) {
                            add_into(acc(&mut grads, v, g.len()), &g, 1.0);
                        }
                    }
                }
                Op::Sub(a, b) => {
                    if self.needs(*a) {
                        add_into(acc(&mut grads, *a, g.len()), &g, 1.0);
                    }
                    if self.needs(*b) {
                        add_into(acc(&mut grads, *b, g.len()), &g, -1.0);
                    }
                }
                Op::Mul(a, b) => {
                    let (ta, tb) = (self.value(*a), self.value(*b));
                    if self.needs(*a) {
                        let ga = acc(&mut grads, *a, g.len());
                        for ((o, gv), bv) in ga.iter_mut().zip(&g).zip(tb.data()) {
                            *o += gv * bv;
                        }
                    }
                    if self.needs(*b) {
                        let gb = acc(&mut grads, *b, g.len());
                        for ((o, gv), av) in gb.iter_mut().zip(&g).zip(ta.data()) {
                            *o += gv * av;
                        }
                    }
                }
                Op::Scale(a, c) => add_into(acc(&mut grads, *a, g.len()), &g, *c),
                Op::AddRowBias(m, b) => {
                    if self.needs(*m) {
                        add_into(acc(&mut grads, *m, g.len()), &g, 1.0);
                    }
                    if self.needs(*b) {
                        let c = self.value(*b).len();
                        let gb = acc(&mut grads, *b, c);
                        for row in g.chunks(c) {
                            add_into(gb, row, 1.0);
                        }
                    }
                }
                Op::AddScalar(a, s) => {
                    if self.needs(*a) {
                        add_into(acc(&mut grads, *a, g.len()), &g, 1.0);
                    }
                    if self.needs(*s) {
                        acc(&mut grads, *s, 1)[0] += g.iter().sum::<f64>();
                    }
                }
                Op::Sigmoid(a) => {
                    let y = node.value.as_ref().expect("value").data();
                    let ga = acc(&mut grads, *a, g.len());
                    for ((o, gv), yv) in ga.iter_mut().zip(&g).zip(y) {
                        *o += gv * yv * (1.0 - yv);
                    }
                }
                Op::Tanh(a) => {
                    let y = node.value.as_ref().expect("value").data();
                    let ga = acc(&mut grads, *a, g.len());
                    for ((o, gv), yv) in ga.iter_mut().zip(&g).zip(y) {
                        *o += gv * (1.0 - yv * yv);
                    }
                }
                Op::Exp(a) => {
                    let y = node.value.as_ref().expect("value").data();
                    let ga = acc(&mut grads, *a, g.len());
                    for ((o, gv), yv) in ga.iter_mut().zip(&g).zip(y) {
                        *o += gv * yv;
                    }
                }
                Op::Ln(a) => {
                    let x = self.value(*a).data();
                    let ga = acc(&mut grads, *a, g.len());
                    for ((o, gv), xv) in ga.iter_mut().zip(&g).zip(x) {
                        *o += gv / xv;
                    }
                }
                Op::Square(a) => {
                    let x = self.value(*a).data();
                    let ga = acc(&mut grads, *a, g.len());
                    for ((o, gv), xv) in ga.iter_mut().zip(&g).zip(x) {
                        *o += 2.0 * gv * xv;
                    }
                }
                Op::Softmax(a) => {
                    let y = node.value.as_ref().expect("value").data();
                    let gy = dot(&g, y);
                    let ga = acc(&mut grads, *a, g.len());
                    for ((o, gv), yv) in ga.iter_mut().zip(&g).zip(y) {
                        *o += yv * (gv - gy);
                    }
                }
                Op::Sum(a) => {
                    let n = self.value(*a).len();
                    for o in acc(&mut grads, *a, n) {
                        *o += g[0];
                    }
                }
                Op::Dot(a, b) => {
                    let (ta, tb) = (self.value(*a), self.value(*b));
                    if self.needs(*a) {
                        add_into(acc(&mut grads, *a, ta.len()), tb.data(), g[0]);
                    }
                    if self.needs(*b) {
                        add_into(acc(&mut grads, *b, tb.len()), ta.data(), g[0]);
                    }
                }
                Op::Concat(parts) => {
                    let mut offset = 0;
                    for &p in parts {
                        let n = self.value(p).len();
                        if self.needs(p) {
                            add_into(acc(&mut grads, p, n), &g[offset..offset + n], 1.0);
                        }
                        offset += n;
                    }
                }
                Op::Slice(a, start) => {
                    let n = self.value(*a).len();
                    let ga = acc(&mut grads, *a, n);
                    add_into(&mut ga[*start..*start + g.len()], &g, 1.0);
                }
                Op::GatherRow(table, index) => {
                    let t = self.value(*table);
                    let c = t.cols();
                    let gt = acc(&mut grads, *table, t.len());
                    add_into(&mut gt[index * c..(index + 1) * c], &g, 1.0);
                }
                Op::Index(a, index) => {
                    let n = self.value(*a).len();
                    acc(&mut grads, *a, n)[*index] += g[0];
                }
                Op::CrossEntropy(p, labels) => {
                    let tp = self.value(*p).data();
                    let gp = acc(&mut grads, *p, tp.len());
                    for ((o, &pi), &yi) in gp.iter_mut().zip(tp).zip(labels) {
                        if pi > PROB_EPS && pi < 1.0 - PROB_EPS {
                            *o += g[0] * (-yi / pi + (1.0 - yi) / (1.0 - pi));
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

fn acc(grads: &mut [Option<Vec<f64>>], v: Var, len: usize) -> &mut Vec<f64> {
    grads[v.0].get_or_insert_with(|| vec![0.0; len])
}

fn add_into(dst: &mut [f64], src: &[f64], c: f64) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += c * s;
    }
}

/// Softmax of a plain slice without a tape (inference helper).
pub fn softmax_values(r: &[f64]) -> Vec<f64> {
    softmax_unchecked(r)
}
