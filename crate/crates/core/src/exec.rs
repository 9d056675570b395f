//! Graph execution: a [`Workspace`] holds per-node values and gradients for
//! one graph instance. Forward caches every intermediate needed by backward;
//! backward walks nodes in reverse construction order (construction order is
//! topological by design), visiting each node exactly once.

use crate::error::{CoreError, Result};
use crate::graph::{Graph, NodeId, Op};
use crate::ops::attention::{self, AttnAux, AttnDims};
use crate::ops::conv::{self, ConvDims};
use crate::ops::elementwise as ew;
use crate::ops::norm::{self, NormDims};
use crate::params::ParamSet;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

fn ensure_grad_slot<T: Scalar>(grads: &mut [Option<Tensor<T>>], graph: &Graph, id: NodeId) {
    if grads[id.0].is_none() {
        grads[id.0] = Some(Tensor::zeros(&graph.node(id).shape));
    }
}

/// Execution state for one graph. Exclusive to one thread; internal kernels
/// may fan out worker threads when `parallel` is set, with fixed accumulation
/// order so results are bit-identical to serial mode.
pub struct Workspace<'g, T: Scalar> {
    graph: &'g Graph,
    values: Vec<Option<Tensor<T>>>,
    grads: Vec<Option<Tensor<T>>>,
    attn_aux: Vec<Option<AttnAux<T>>>,
    input_requires_grad: Vec<bool>,
    parallel: bool,
}

impl<'g, T: Scalar> Workspace<'g, T> {
    pub fn new(graph: &'g Graph) -> Self {
        let n = graph.len();
        Self {
            graph,
            values: (0..n).map(|_| None).collect(),
            grads: (0..n).map(|_| None).collect(),
            attn_aux: (0..n).map(|_| None).collect(),
            input_requires_grad: vec![false; n],
            parallel: false,
        }
    }

    pub fn with_parallel(mut self, parallel: bool) -> Self {
        self.parallel = parallel;
        self
    }

    pub fn set_parallel(&mut self, parallel: bool) {
        self.parallel = parallel;
    }

    pub fn graph(&self) -> &Graph {
        self.graph
    }

    /// Bind an input tensor; shape must match the declaration.
    pub fn bind(&mut self, id: NodeId, tensor: Tensor<T>) -> Result<()> {
        let node = self.graph.node(id);
        if !matches!(node.op, Op::Input) {
            return Err(CoreError::BuildError {
                node: node.name.clone(),
                reason: "bind target is not an input node".into(),
            });
        }
        if tensor.shape() != node.shape {
            return Err(CoreError::BadBinding {
                name: node.name.clone(),
                expected: node.shape.clone(),
                actual: tensor.shape().to_vec(),
            });
        }
        self.input_requires_grad[id.0] = tensor.requires_grad();
        self.values[id.0] = Some(tensor);
        Ok(())
    }

    pub fn value(&self, id: NodeId) -> Option<&Tensor<T>> {
        self.values[id.0].as_ref()
    }

    /// Gradient of a leaf (parameter or requires-grad input) after backward.
    pub fn grad(&self, id: NodeId) -> Option<&Tensor<T>> {
        self.grads[id.0].as_ref()
    }

    /// Nodes that `out` depends on, as a mask.
    fn ancestors(&self, out: NodeId) -> Vec<bool> {
        let mut mask = vec![false; self.graph.len()];
        let mut stack = vec![out];
        while let Some(id) = stack.pop() {
            if mask[id.0] {
                continue;
            }
            mask[id.0] = true;
            for p in self.graph.node(id).op.parents() {
                stack.push(p);
            }
        }
        mask
    }

    /// Evaluate all nodes `out` depends on and return its value.
    pub fn forward(&mut self, params: &ParamSet<T>, out: NodeId) -> Result<&Tensor<T>> {
        let needed = self.ancestors(out);
        for i in 0..self.graph.len() {
            if !needed[i] {
                continue;
            }
            let node = &self.graph.nodes[i];
            match node.op {
                Op::Input => {
                    if self.values[i].is_none() {
                        return Err(CoreError::UnboundInput {
                            name: node.name.clone(),
                        });
                    }
                }
                Op::Param => {
                    let p = params.get(&node.name).ok_or_else(|| CoreError::MissingParam {
                        name: node.name.clone(),
                    })?;
                    if p.shape() != node.shape {
                        return Err(CoreError::BadBinding {
                            name: node.name.clone(),
                            expected: node.shape.clone(),
                            actual: p.shape().to_vec(),
                        });
                    }
                    self.values[i] = Some(p.clone());
                }
                _ => {
                    let (value, aux) = self.eval(NodeId(i))?;
                    self.values[i] = Some(value);
                    self.attn_aux[i] = aux;
                }
            }
        }
        Ok(self.values[out.0].as_ref().expect("just evaluated"))
    }

    fn val(&self, id: NodeId) -> &Tensor<T> {
        self.values[id.0]
            .as_ref()
            .unwrap_or_else(|| panic!("value of `{}` missing", self.graph.node(id).name))
    }

    fn eval(&self, id: NodeId) -> Result<(Tensor<T>, Option<AttnAux<T>>)> {
        let node = self.graph.node(id);
        let shape = node.shape.clone();
        let out = match node.op {
            Op::Input | Op::Param => unreachable!("handled in forward"),
            Op::Add(a, b) => {
                let (a, b) = (self.val(a), self.val(b));
                Tensor::from_fn(&shape, |i| a.data()[i] + b.data()[i])
            }
            Op::Sub(a, b) => {
                let (a, b) = (self.val(a), self.val(b));
                Tensor::from_fn(&shape, |i| a.data()[i] - b.data()[i])
            }
            Op::Mul(a, b) => {
                let (a, b) = (self.val(a), self.val(b));
                Tensor::from_fn(&shape, |i| a.data()[i] * b.data()[i])
            }
            Op::Square(a) => {
                let a = self.val(a);
                Tensor::from_fn(&shape, |i| a.data()[i] * a.data()[i])
            }
            Op::Exp(a) => {
                let a = self.val(a);
                Tensor::from_fn(&shape, |i| a.data()[i].exp())
            }
            Op::Silu(a) => {
                let a = self.val(a);
                let mut out = Tensor::zeros(&shape);
                ew::silu_forward(a.data(), out.data_mut());
                out
            }
            Op::Affine { x, scale, shift } => {
                let x = self.val(x);
                let (s, b) = (T::cast(scale), T::cast(shift));
                Tensor::from_fn(&shape, |i| x.data()[i] * s + b)
            }
            Op::Concat0(a, b) => {
                let (a, b) = (self.val(a), self.val(b));
                let mut data = Vec::with_capacity(a.numel() + b.numel());
                data.extend_from_slice(a.data());
                data.extend_from_slice(b.data());
                Tensor::new(&shape, data)?
            }
            Op::Slice0 { x, from, to: _ } => {
                let x = self.val(x);
                let stride: usize = x.shape()[1..].iter().product();
                let count: usize = shape.iter().product();
                let data = x.data()[from * stride..from * stride + count].to_vec();
                Tensor::new(&shape, data)?
            }
            Op::Conv { x, w, b, stride, pad } => {
                let (xv, wv) = (self.val(x), self.val(w));
                let dims = ConvDims::from_shapes(xv.shape(), wv.shape(), stride, pad);
                let mut out = Tensor::zeros(&shape);
                let bias = b.map(|bid| self.val(bid));
                conv::forward(
                    &dims,
                    xv.data(),
                    wv.data(),
                    bias.map(|t| t.data()),
                    out.data_mut(),
                    self.parallel,
                );
                out
            }
            Op::GroupNorm { x, gamma, beta, groups, eps } => {
                let xv = self.val(x);
                let dims = NormDims::from_shape(xv.shape(), groups);
                let mut out = Tensor::zeros(&shape);
                norm::forward(
                    &dims,
                    xv.data(),
                    self.val(gamma).data(),
                    self.val(beta).data(),
                    T::cast(eps),
                    out.data_mut(),
                );
                out
            }
            Op::CrossAttn { x, ctx, wq, wk, wv, wo } => {
                let xv = self.val(x);
                let ctxv = self.val(ctx);
                let dims = AttnDims::from_shapes(xv.shape(), ctxv.shape(), self.val(wq).shape());
                let mut out = Tensor::zeros(&shape);
                let aux = attention::forward(
                    &dims,
                    xv.data(),
                    ctxv.data(),
                    self.val(wq).data(),
                    self.val(wk).data(),
                    self.val(wv).data(),
                    self.val(wo).data(),
                    out.data_mut(),
                    self.parallel,
                );
                return Ok((out, Some(aux)));
            }
            Op::Film { x, cond } => {
                let xv = self.val(x);
                let mut out = Tensor::zeros(&shape);
                ew::film_forward(xv.data(), self.val(cond).data(), xv.shape()[0], out.data_mut());
                out
            }
            Op::Linear { x, w, b } => {
                let xv = self.val(x);
                let wv = self.val(w);
                let (m, k) = (wv.shape()[0], wv.shape()[1]);
                let mut out = Tensor::zeros(&shape);
                for i in 0..m {
                    let row = &wv.data()[i * k..(i + 1) * k];
                    let mut acc = b.map_or(T::zero(), |bid| self.val(bid).data()[i]);
                    for (&wv_, &xv_) in row.iter().zip(xv.data()) {
                        acc += wv_ * xv_;
                    }
                    out.data_mut()[i] = acc;
                }
                out
            }
            Op::GlobalMean(x) => {
                let xv = self.val(x);
                let (c, t, h, w) = xv.dims4();
                let inv = T::one() / T::cast((t * h * w) as f64);
                let mut out = Tensor::zeros(&shape);
                for ch in 0..c {
                    let mut acc = T::zero();
                    for &v in &xv.data()[ch * t * h * w..(ch + 1) * t * h * w] {
                        acc += v;
                    }
                    out.data_mut()[ch] = acc * inv;
                }
                out
            }
            Op::Upsample2x(x) => {
                let xv = self.val(x);
                let (c, t, h, w) = xv.dims4();
                let mut out = Tensor::zeros(&shape);
                ew::upsample2x_forward(xv.data(), c, t, h, w, out.data_mut());
                out
            }
            Op::SumAll(x) => {
                let xv = self.val(x);
                let mut acc = T::zero();
                for &v in xv.data() {
                    acc += v;
                }
                Tensor::scalar(acc)
            }
            Op::MeanAll(x) => {
                let xv = self.val(x);
                let mut acc = T::zero();
                for &v in xv.data() {
                    acc += v;
                }
                Tensor::scalar(acc / T::cast(xv.numel() as f64))
            }
        };
        Ok((out, None))
    }

    /// Reverse-mode sweep from a scalar loss. Gradients of parameters and
    /// requires-grad inputs are retained and readable via [`Self::grad`];
    /// interior gradients are freed as soon as they have been consumed.
    pub fn backward(&mut self, loss: NodeId) -> Result<()> {
        let loss_node = self.graph.node(loss);
        if self.values[loss.0].is_none() {
            return Err(CoreError::BackwardBeforeForward {
                node: loss_node.name.clone(),
            });
        }
        if self.values[loss.0].as_ref().unwrap().numel() != 1 {
            return Err(CoreError::NonScalarLoss {
                node: loss_node.name.clone(),
                shape: loss_node.shape.clone(),
            });
        }

        let n = self.graph.len();
        // A node's gradient matters iff a requiring leaf is reachable through
        // its operands; everything else is skipped (e.g. data inputs).
        let mut reaches = vec![false; n];
        for i in 0..n {
            let node = &self.graph.nodes[i];
            reaches[i] = match node.op {
                Op::Param => true,
                Op::Input => self.input_requires_grad[i],
                _ => node.op.parents().iter().any(|p| reaches[p.0]),
            };
        }

        for g in self.grads.iter_mut() {
            *g = None;
        }
        self.grads[loss.0] = Some(Tensor::full(&[1], T::one()));

        for i in (0..=loss.0).rev() {
            if !reaches[i] || self.grads[i].is_none() {
                continue;
            }
            let node = &self.graph.nodes[i];
            if matches!(node.op, Op::Input | Op::Param) {
                continue; // leaf: keep gradient for the caller
            }
            let dy = self.grads[i].take().expect("checked above");
            self.propagate(NodeId(i), &dy, &reaches)?;
        }
        Ok(())
    }

    fn ensure_grad(&mut self, id: NodeId) -> &mut Tensor<T> {
        ensure_grad_slot(&mut self.grads, self.graph, id);
        self.grads[id.0].as_mut().unwrap()
    }

    fn accumulate(&mut self, id: NodeId, data: &[T]) {
        let g = self.ensure_grad(id);
        for (a, &b) in g.data_mut().iter_mut().zip(data) {
            *a += b;
        }
    }

    fn propagate(&mut self, id: NodeId, dy: &Tensor<T>, reaches: &[bool]) -> Result<()> {
        let node = self.graph.node(id).clone();
        match node.op {
            Op::Input | Op::Param => {}
            Op::Add(a, b) => {
                if reaches[a.0] {
                    self.accumulate(a, dy.data());
                }
                if reaches[b.0] {
                    self.accumulate(b, dy.data());
                }
            }
            Op::Sub(a, b) => {
                if reaches[a.0] {
                    self.accumulate(a, dy.data());
                }
                if reaches[b.0] {
                    let neg: Vec<T> = dy.data().iter().map(|&v| -v).collect();
                    self.accumulate(b, &neg);
                }
            }
            Op::Mul(a, b) => {
                if reaches[a.0] {
                    let bv = self.val(b).data().to_vec();
                    let da: Vec<T> = dy.data().iter().zip(&bv).map(|(&d, &v)| d * v).collect();
                    self.accumulate(a, &da);
                }
                if reaches[b.0] {
                    let av = self.val(a).data().to_vec();
                    let db: Vec<T> = dy.data().iter().zip(&av).map(|(&d, &v)| d * v).collect();
                    self.accumulate(b, &db);
                }
            }
            Op::Square(a) => {
                if reaches[a.0] {
                    let two = T::cast(2.0);
                    let av = self.val(a).data().to_vec();
                    let da: Vec<T> = dy.data().iter().zip(&av).map(|(&d, &v)| d * two * v).collect();
                    self.accumulate(a, &da);
                }
            }
            Op::Exp(a) => {
                if reaches[a.0] {
                    let yv = self.val(id).data().to_vec();
                    let da: Vec<T> = dy.data().iter().zip(&yv).map(|(&d, &v)| d * v).collect();
                    self.accumulate(a, &da);
                }
            }
            Op::Silu(a) => {
                if reaches[a.0] {
                    let av = self.val(a).data().to_vec();
                    let mut da = vec![T::zero(); av.len()];
                    ew::silu_backward(&av, dy.data(), &mut da);
                    self.accumulate(a, &da);
                }
            }
            Op::Affine { x, scale, .. } => {
                if reaches[x.0] {
                    let s = T::cast(scale);
                    let dx: Vec<T> = dy.data().iter().map(|&d| d * s).collect();
                    self.accumulate(x, &dx);
                }
            }
            Op::Concat0(a, b) => {
                let na = self.val(a).numel();
                if reaches[a.0] {
                    self.accumulate(a, &dy.data()[..na]);
                }
                if reaches[b.0] {
                    self.accumulate(b, &dy.data()[na..]);
                }
            }
            Op::Slice0 { x, from, .. } => {
                if reaches[x.0] {
                    let stride: usize = self.val(x).shape()[1..].iter().product();
                    let offset = from * stride;
                    let g = self.ensure_grad(x);
                    for (a, &b) in g.data_mut()[offset..offset + dy.numel()]
                        .iter_mut()
                        .zip(dy.data())
                    {
                        *a += b;
                    }
                }
            }
            Op::Conv { x, w, b, stride, pad } => {
                let dims = {
                    let (xv, wv) = (self.val(x), self.val(w));
                    ConvDims::from_shapes(xv.shape(), wv.shape(), stride, pad)
                };
                let parallel = self.parallel;
                // Split borrows: values stay shared while one grad entry is
                // mutated, avoiding clones of the large activations.
                if reaches[x.0] {
                    ensure_grad_slot(&mut self.grads, self.graph, x);
                    let (values, grads) = (&self.values, &mut self.grads);
                    let wv = values[w.0].as_ref().unwrap();
                    let g = grads[x.0].as_mut().unwrap();
                    conv::backward_input(&dims, wv.data(), dy.data(), g.data_mut(), parallel);
                }
                if reaches[w.0] {
                    ensure_grad_slot(&mut self.grads, self.graph, w);
                    let (values, grads) = (&self.values, &mut self.grads);
                    let xv = values[x.0].as_ref().unwrap();
                    let g = grads[w.0].as_mut().unwrap();
                    conv::backward_weight(&dims, xv.data(), dy.data(), g.data_mut(), parallel);
                }
                if let Some(bid) = b {
                    if reaches[bid.0] {
                        let g = self.ensure_grad(bid);
                        conv::backward_bias(&dims, dy.data(), g.data_mut());
                    }
                }
            }
            Op::GroupNorm { x, gamma, beta, groups, eps } => {
                let dims = NormDims::from_shape(self.val(x).shape(), groups);
                let xv = self.val(x).data().to_vec();
                let gv = self.val(gamma).data().to_vec();
                let mut dx = vec![T::zero(); xv.len()];
                let mut dgamma = vec![T::zero(); gv.len()];
                let mut dbeta = vec![T::zero(); gv.len()];
                norm::backward(
                    &dims,
                    &xv,
                    &gv,
                    T::cast(eps),
                    dy.data(),
                    &mut dx,
                    &mut dgamma,
                    &mut dbeta,
                );
                if reaches[x.0] {
                    self.accumulate(x, &dx);
                }
                if reaches[gamma.0] {
                    self.accumulate(gamma, &dgamma);
                }
                if reaches[beta.0] {
                    self.accumulate(beta, &dbeta);
                }
            }
            Op::CrossAttn { x, ctx, wq, wk, wv, wo } => {
                let dims = AttnDims::from_shapes(
                    self.val(x).shape(),
                    self.val(ctx).shape(),
                    self.val(wq).shape(),
                );
                let aux = self.attn_aux[id.0]
                    .as_ref()
                    .expect("attention aux cached in forward");
                let grads = attention::backward(
                    &dims,
                    self.val(x).data(),
                    self.val(ctx).data(),
                    self.val(wq).data(),
                    self.val(wk).data(),
                    self.val(wv).data(),
                    self.val(wo).data(),
                    aux,
                    dy.data(),
                    self.parallel,
                );
                if reaches[x.0] {
                    self.accumulate(x, &grads.dx);
                }
                if reaches[ctx.0] {
                    self.accumulate(ctx, &grads.dctx);
                }
                if reaches[wq.0] {
                    self.accumulate(wq, &grads.dwq);
                }
                if reaches[wk.0] {
                    self.accumulate(wk, &grads.dwk);
                }
                if reaches[wv.0] {
                    self.accumulate(wv, &grads.dwv);
                }
                if reaches[wo.0] {
                    self.accumulate(wo, &grads.dwo);
                }
            }
            Op::Film { x, cond } => {
                let xv = self.val(x).data().to_vec();
                let cv = self.val(cond).data().to_vec();
                let c = self.val(x).shape()[0];
                let mut dx = vec![T::zero(); xv.len()];
                let mut dcond = vec![T::zero(); cv.len()];
                ew::film_backward(&xv, &cv, c, dy.data(), &mut dx, &mut dcond);
                if reaches[x.0] {
                    self.accumulate(x, &dx);
                }
                if reaches[cond.0] {
                    self.accumulate(cond, &dcond);
                }
            }
            Op::Linear { x, w, b } => {
                let xv = self.val(x).data().to_vec();
                let wv = self.val(w).data().to_vec();
                let (m, k) = {
                    let s = self.val(w).shape();
                    (s[0], s[1])
                };
                if reaches[x.0] {
                    let mut dx = vec![T::zero(); k];
                    for i in 0..m {
                        let d = dy.data()[i];
                        for (dxv, &wv_) in dx.iter_mut().zip(&wv[i * k..(i + 1) * k]) {
                            *dxv += d * wv_;
                        }
                    }
                    self.accumulate(x, &dx);
                }
                if reaches[w.0] {
                    let mut dw = vec![T::zero(); m * k];
                    for i in 0..m {
                        let d = dy.data()[i];
                        for (dwv, &xv_) in dw[i * k..(i + 1) * k].iter_mut().zip(&xv) {
                            *dwv += d * xv_;
                        }
                    }
                    self.accumulate(w, &dw);
                }
                if let Some(bid) = b {
                    if reaches[bid.0] {
                        self.accumulate(bid, dy.data());
                    }
                }
            }
            Op::GlobalMean(x) => {
                if reaches[x.0] {
                    let (c, t, h, w) = self.val(x).dims4();
                    let inv = T::one() / T::cast((t * h * w) as f64);
                    let mut dx = vec![T::zero(); c * t * h * w];
                    for ch in 0..c {
                        let d = dy.data()[ch] * inv;
                        for v in &mut dx[ch * t * h * w..(ch + 1) * t * h * w] {
                            *v = d;
                        }
                    }
                    self.accumulate(x, &dx);
                }
            }
            Op::Upsample2x(x) => {
                if reaches[x.0] {
                    let (c, t, h, w) = self.val(x).dims4();
                    let mut dx = vec![T::zero(); c * t * h * w];
                    ew::upsample2x_backward(dy.data(), c, t, h, w, &mut dx);
                    self.accumulate(x, &dx);
                }
            }
            Op::SumAll(x) => {
                if reaches[x.0] {
                    let d = dy.item();
                    let n = self.val(x).numel();
                    let dx = vec![d; n];
                    self.accumulate(x, &dx);
                }
            }
            Op::MeanAll(x) => {
                if reaches[x.0] {
                    let n = self.val(x).numel();
                    let d = dy.item() / T::cast(n as f64);
                    let dx = vec![d; n];
                    self.accumulate(x, &dx);
                }
            }
        }
        Ok(())
    }
}
