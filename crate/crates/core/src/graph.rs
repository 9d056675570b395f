//! Static computation graphs.
//!
//! A graph is built once per architecture and reused every step: nodes are
//! appended in topological order (an operation can only reference nodes that
//! already exist), shapes are inferred and validated at build time, and the
//! same graph executes in f32 or f64 through [`crate::exec::Workspace`].

use crate::error::{CoreError, Result};
use crate::params::Init;
use crate::tensor::validate_shape;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NodeId(pub(crate) usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Operation kinds. Constants are carried as f64 and cast at execution.
#[derive(Clone, Debug)]
pub enum Op {
    Input,
    Param,
    /// Elementwise sum of two same-shape tensors.
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Square(NodeId),
    Exp(NodeId),
    Silu(NodeId),
    /// `scale * x + shift`, elementwise.
    Affine {
        x: NodeId,
        scale: f64,
        shift: f64,
    },
    /// Concatenate along axis 0 (channel axis for rank-4, plain for rank-1).
    Concat0(NodeId, NodeId),
    /// Slice `[from, to)` along axis 0.
    Slice0 {
        x: NodeId,
        from: usize,
        to: usize,
    },
    /// Cross-correlation over `[c, t, h, w]` with weight `[oc, ic, kt, kh, kw]`.
    /// Temporal stride is always 1; spatial stride and (t, h, w) zero padding
    /// are explicit. Covers per-frame 2D convolution (kt = 1), temporal mixing
    /// (kh = kw = 1), and spatio-temporal fusion in one kernel.
    Conv {
        x: NodeId,
        w: NodeId,
        b: Option<NodeId>,
        stride: (usize, usize),
        pad: (usize, usize, usize),
    },
    /// Group normalization over (channel group, h, w) per frame, with learned
    /// per-channel gain and bias.
    GroupNorm {
        x: NodeId,
        gamma: NodeId,
        beta: NodeId,
        groups: usize,
        eps: f64,
    },
    /// Single-head scaled dot-product attention. Queries come from `x`
    /// (per frame, over flattened h*w positions), keys/values from `ctx`.
    CrossAttn {
        x: NodeId,
        ctx: NodeId,
        wq: NodeId,
        wk: NodeId,
        wv: NodeId,
        wo: NodeId,
    },
    /// Feature-wise modulation: `x * (1 + s_c) + b_c` with `cond = [s; b]`.
    Film {
        x: NodeId,
        cond: NodeId,
    },
    /// `w @ x + b` on rank-1 tensors; `w` is `[m, k]`.
    Linear {
        x: NodeId,
        w: NodeId,
        b: Option<NodeId>,
    },
    /// Mean over (t, h, w), producing `[c]`.
    GlobalMean(NodeId),
    /// Nearest-neighbour 2x spatial upsampling.
    Upsample2x(NodeId),
    SumAll(NodeId),
    MeanAll(NodeId),
}

impl Op {
    /// Operand node ids, in a fixed order.
    pub fn parents(&self) -> Vec<NodeId> {
        match *self {
            Op::Input | Op::Param => vec![],
            Op::Add(a, b) | Op::Sub(a, b) | Op::Mul(a, b) | Op::Concat0(a, b) => vec![a, b],
            Op::Square(a)
            | Op::Exp(a)
            | Op::Silu(a)
            | Op::GlobalMean(a)
            | Op::Upsample2x(a)
            | Op::SumAll(a)
            | Op::MeanAll(a) => vec![a],
            Op::Affine { x, .. } | Op::Slice0 { x, .. } => vec![x],
            Op::Conv { x, w, b, .. } => {
                let mut p = vec![x, w];
                if let Some(b) = b {
                    p.push(b);
                }
                p
            }
            Op::GroupNorm { x, gamma, beta, .. } => vec![x, gamma, beta],
            Op::CrossAttn {
                x,
                ctx,
                wq,
                wk,
                wv,
                wo,
            } => vec![x, ctx, wq, wk, wv, wo],
            Op::Film { x, cond } => vec![x, cond],
            Op::Linear { x, w, b } => {
                let mut p = vec![x, w];
                if let Some(b) = b {
                    p.push(b);
                }
                p
            }
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Op::Input => "input",
            Op::Param => "param",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "mul",
            Op::Square(..) => "square",
            Op::Exp(..) => "exp",
            Op::Silu(..) => "silu",
            Op::Affine { .. } => "affine",
            Op::Concat0(..) => "concat0",
            Op::Slice0 { .. } => "slice0",
            Op::Conv { .. } => "conv",
            Op::GroupNorm { .. } => "group_norm",
            Op::CrossAttn { .. } => "cross_attn",
            Op::Film { .. } => "film",
            Op::Linear { .. } => "linear",
            Op::GlobalMean(..) => "global_mean",
            Op::Upsample2x(..) => "upsample2x",
            Op::SumAll(..) => "sum_all",
            Op::MeanAll(..) => "mean_all",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Node {
    pub op: Op,
    pub shape: Vec<usize>,
    pub name: String,
}

/// Immutable graph description; values live in a [`crate::exec::Workspace`].
#[derive(Clone, Debug)]
pub struct Graph {
    pub(crate) nodes: Vec<Node>,
    pub(crate) inputs: Vec<NodeId>,
    /// Parameter nodes with declared initialization, in declaration order.
    pub(crate) params: Vec<(String, NodeId, Init)>,
}

impl Graph {
    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn inputs(&self) -> &[NodeId] {
        &self.inputs
    }

    pub fn params(&self) -> impl Iterator<Item = (&str, NodeId)> {
        self.params.iter().map(|(n, id, _)| (n.as_str(), *id))
    }

    pub fn param_decls(&self) -> &[(String, NodeId, Init)] {
        &self.params
    }

    pub fn shape_of(&self, id: NodeId) -> &[usize] {
        &self.nodes[id.0].shape
    }
}

/// Appends shape-checked nodes and produces a [`Graph`].
#[derive(Default)]
pub struct GraphBuilder {
    nodes: Vec<Node>,
    inputs: Vec<NodeId>,
    params: Vec<(String, NodeId, Init)>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, op: Op, shape: Vec<usize>, name: String) -> NodeId {
        let id = NodeId(self.nodes.len());
        self.nodes.push(Node { op, shape, name });
        id
    }

    fn shape(&self, id: NodeId) -> &[usize] {
        &self.nodes[id.0].shape
    }

    fn auto_name(&self, kind: &str) -> String {
        format!("{}_{}", kind, self.nodes.len())
    }

    fn err(&self, name: &str, reason: impl Into<String>) -> CoreError {
        CoreError::ShapeMismatch {
            node: name.to_string(),
            reason: reason.into(),
        }
    }

    pub fn input(&mut self, name: &str, shape: &[usize]) -> Result<NodeId> {
        validate_shape(shape)?;
        let id = self.push(Op::Input, shape.to_vec(), name.to_string());
        self.inputs.push(id);
        Ok(id)
    }

    pub fn param(&mut self, name: &str, shape: &[usize], init: Init) -> Result<NodeId> {
        validate_shape(shape)?;
        if self.params.iter().any(|(n, _, _)| n == name) {
            return Err(CoreError::BuildError {
                node: name.to_string(),
                reason: "duplicate parameter name".into(),
            });
        }
        let id = self.push(Op::Param, shape.to_vec(), name.to_string());
        self.params.push((name.to_string(), id, init));
        Ok(id)
    }

    fn binary_same_shape(&mut self, kind: &str, a: NodeId, b: NodeId, op: Op) -> Result<NodeId> {
        let name = self.auto_name(kind);
        if self.shape(a) != self.shape(b) {
            return Err(self.err(
                &name,
                format!(
                    "operands {:?} vs {:?} (from `{}`, `{}`)",
                    self.shape(a),
                    self.shape(b),
                    self.nodes[a.0].name,
                    self.nodes[b.0].name
                ),
            ));
        }
        let shape = self.shape(a).to_vec();
        Ok(self.push(op, shape, name))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.binary_same_shape("add", a, b, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.binary_same_shape("sub", a, b, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.binary_same_shape("mul", a, b, Op::Mul(a, b))
    }

    pub fn square(&mut self, a: NodeId) -> NodeId {
        let shape = self.shape(a).to_vec();
        let name = self.auto_name("square");
        self.push(Op::Square(a), shape, name)
    }

    pub fn exp(&mut self, a: NodeId) -> NodeId {
        let shape = self.shape(a).to_vec();
        let name = self.auto_name("exp");
        self.push(Op::Exp(a), shape, name)
    }

    pub fn silu(&mut self, a: NodeId) -> NodeId {
        let shape = self.shape(a).to_vec();
        let name = self.auto_name("silu");
        self.push(Op::Silu(a), shape, name)
    }

    pub fn affine(&mut self, x: NodeId, scale: f64, shift: f64) -> NodeId {
        let shape = self.shape(x).to_vec();
        let name = self.auto_name("affine");
        self.push(Op::Affine { x, scale, shift }, shape, name)
    }

    pub fn concat0(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let name = self.auto_name("concat0");
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa.len() != sb.len() || sa[1..] != sb[1..] {
            return Err(self.err(
                &name,
                format!("trailing dims differ: {:?} vs {:?}", sa, sb),
            ));
        }
        let mut shape = sa.to_vec();
        shape[0] += sb[0];
        Ok(self.push(Op::Concat0(a, b), shape, name))
    }

    pub fn slice0(&mut self, x: NodeId, from: usize, to: usize) -> Result<NodeId> {
        let name = self.auto_name("slice0");
        let s = self.shape(x);
        if from >= to || to > s[0] {
            return Err(self.err(&name, format!("range {}..{} out of axis-0 extent {}", from, to, s[0])));
        }
        let mut shape = s.to_vec();
        shape[0] = to - from;
        Ok(self.push(Op::Slice0 { x, from, to }, shape, name))
    }

    /// See [`Op::Conv`]. Output spatial extents follow
    /// `(h + 2*ph - kh) / sh + 1`; the temporal extent is preserved
    /// (`kt` must be odd and `pt = (kt - 1) / 2`).
    pub fn conv(
        &mut self,
        x: NodeId,
        w: NodeId,
        b: Option<NodeId>,
        stride: (usize, usize),
        pad: (usize, usize, usize),
    ) -> Result<NodeId> {
        let name = self.auto_name("conv");
        let xs = self.shape(x).to_vec();
        let ws = self.shape(w).to_vec();
        if xs.len() != 4 {
            return Err(self.err(&name, format!("input must be rank-4 [c,t,h,w], got {:?}", xs)));
        }
        if ws.len() != 5 {
            return Err(self.err(&name, format!("weight must be rank-5 [oc,ic,kt,kh,kw], got {:?}", ws)));
        }
        let (c, t, h, w_in) = (xs[0], xs[1], xs[2], xs[3]);
        let (oc, ic, kt, kh, kw) = (ws[0], ws[1], ws[2], ws[3], ws[4]);
        if ic != c {
            return Err(self.err(&name, format!("weight expects {} input channels, input has {}", ic, c)));
        }
        if kt % 2 == 0 || pad.0 != (kt - 1) / 2 {
            return Err(self.err(
                &name,
                format!("temporal kernel {} requires odd extent with pad {}", kt, (kt.max(1) - 1) / 2),
            ));
        }
        if stride.0 == 0 || stride.1 == 0 {
            return Err(self.err(&name, "zero stride"));
        }
        if h + 2 * pad.1 < kh || w_in + 2 * pad.2 < kw {
            return Err(self.err(&name, format!("kernel {kh}x{kw} larger than padded input {h}x{w_in}")));
        }
        let ho = (h + 2 * pad.1 - kh) / stride.0 + 1;
        let wo = (w_in + 2 * pad.2 - kw) / stride.1 + 1;
        if let Some(bid) = b {
            let bs = self.shape(bid);
            if bs != [oc] {
                return Err(self.err(&name, format!("bias shape {:?}, expected [{}]", bs, oc)));
            }
        }
        Ok(self.push(
            Op::Conv { x, w, b, stride, pad },
            vec![oc, t, ho, wo],
            name,
        ))
    }

    pub fn group_norm(
        &mut self,
        x: NodeId,
        gamma: NodeId,
        beta: NodeId,
        groups: usize,
        eps: f64,
    ) -> Result<NodeId> {
        let name = self.auto_name("group_norm");
        let xs = self.shape(x).to_vec();
        if xs.len() != 4 {
            return Err(self.err(&name, format!("input must be rank-4, got {:?}", xs)));
        }
        let c = xs[0];
        if groups == 0 || c % groups != 0 {
            return Err(self.err(&name, format!("{} channels not divisible into {} groups", c, groups)));
        }
        if self.shape(gamma) != [c] || self.shape(beta) != [c] {
            return Err(self.err(&name, "gamma/beta must have shape [channels]"));
        }
        Ok(self.push(
            Op::GroupNorm { x, gamma, beta, groups, eps },
            xs,
            name,
        ))
    }

    /// Single-head cross-attention; `x: [c,t,h,w]`, `ctx: [ck,1,hk,wk]`,
    /// `wq: [d,c]`, `wk: [d,ck]`, `wv: [d,ck]`, `wo: [c,d]`. The context is
    /// shared by all frames.
    pub fn cross_attn(
        &mut self,
        x: NodeId,
        ctx: NodeId,
        wq: NodeId,
        wk: NodeId,
        wv: NodeId,
        wo: NodeId,
    ) -> Result<NodeId> {
        let name = self.auto_name("cross_attn");
        let xs = self.shape(x).to_vec();
        let cs = self.shape(ctx).to_vec();
        if xs.len() != 4 || cs.len() != 4 {
            return Err(self.err(&name, "x and ctx must be rank-4"));
        }
        if cs[1] != 1 {
            return Err(self.err(&name, format!("ctx must have a single frame, got {}", cs[1])));
        }
        let (c, ck) = (xs[0], cs[0]);
        let qd = self.shape(wq).to_vec();
        let kd = self.shape(wk).to_vec();
        let vd = self.shape(wv).to_vec();
        let od = self.shape(wo).to_vec();
        if qd.len() != 2 || qd[1] != c {
            return Err(self.err(&name, format!("wq shape {:?} incompatible with {} query channels", qd, c)));
        }
        let d = qd[0];
        if kd != [d, ck] || vd != [d, ck] {
            return Err(self.err(&name, format!("wk/wv must be [{}, {}]", d, ck)));
        }
        if od != [c, d] {
            return Err(self.err(&name, format!("wo must be [{}, {}]", c, d)));
        }
        Ok(self.push(
            Op::CrossAttn { x, ctx, wq, wk, wv, wo },
            xs,
            name,
        ))
    }

    /// `cond` must be `[2c]`: the first half scales (around 1), the second shifts.
    pub fn film(&mut self, x: NodeId, cond: NodeId) -> Result<NodeId> {
        let name = self.auto_name("film");
        let xs = self.shape(x).to_vec();
        let cs = self.shape(cond);
        if xs.len() != 4 || cs.len() != 1 || cs[0] != 2 * xs[0] {
            return Err(self.err(
                &name,
                format!("x {:?} needs cond [2*{}], got {:?}", xs, xs[0], cs),
            ));
        }
        Ok(self.push(Op::Film { x, cond }, xs, name))
    }

    pub fn linear(&mut self, x: NodeId, w: NodeId, b: Option<NodeId>) -> Result<NodeId> {
        let name = self.auto_name("linear");
        let xs = self.shape(x).to_vec();
        let ws = self.shape(w).to_vec();
        if xs.len() != 1 || ws.len() != 2 || ws[1] != xs[0] {
            return Err(self.err(&name, format!("linear needs x [k], w [m,k]; got {:?}, {:?}", xs, ws)));
        }
        if let Some(bid) = b {
            if self.shape(bid) != [ws[0]] {
                return Err(self.err(&name, "bias must be [m]"));
            }
        }
        Ok(self.push(Op::Linear { x, w, b }, vec![ws[0]], name))
    }

    pub fn global_mean(&mut self, x: NodeId) -> Result<NodeId> {
        let name = self.auto_name("global_mean");
        let xs = self.shape(x).to_vec();
        if xs.len() != 4 {
            return Err(self.err(&name, "global_mean expects rank-4"));
        }
        Ok(self.push(Op::GlobalMean(x), vec![xs[0]], name))
    }

    pub fn upsample2x(&mut self, x: NodeId) -> Result<NodeId> {
        let name = self.auto_name("upsample2x");
        let xs = self.shape(x).to_vec();
        if xs.len() != 4 {
            return Err(self.err(&name, "upsample2x expects rank-4"));
        }
        let shape = vec![xs[0], xs[1], xs[2] * 2, xs[3] * 2];
        Ok(self.push(Op::Upsample2x(x), shape, name))
    }

    pub fn sum_all(&mut self, x: NodeId) -> NodeId {
        let name = self.auto_name("sum_all");
        self.push(Op::SumAll(x), vec![1], name)
    }

    pub fn mean_all(&mut self, x: NodeId) -> NodeId {
        let name = self.auto_name("mean_all");
        self.push(Op::MeanAll(x), vec![1], name)
    }

    /// Sum of squared differences, the noise-prediction training objective.
    pub fn sum_sq_diff(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let d = self.sub(a, b)?;
        let sq = self.square(d);
        Ok(self.sum_all(sq))
    }

    pub fn build(self) -> Graph {
        Graph {
            nodes: self.nodes,
            inputs: self.inputs,
            params: self.params,
        }
    }
}
