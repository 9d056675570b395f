//! Named, ordered parameter storage shared by graphs, the optimizer, and
//! checkpoints.

use crate::error::{CoreError, Result};
use crate::graph::Graph;
use crate::rng::seed_stream;
use crate::scalar::Scalar;
use crate::tensor::Tensor;
use std::collections::HashMap;

/// Initialization declared with each parameter at graph-build time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Init {
    Zeros,
    Ones,
    /// Normal with the given standard deviation.
    Normal(f64),
    /// Normal with std `sqrt(2 / fan_in)`; fan-in is inferred from the shape
    /// (product of all dims but the first).
    KaimingFanIn,
}

/// Ordered name -> tensor map. Order is the declaration order and defines the
/// checkpoint layout and the optimizer state alignment.
#[derive(Clone, Debug, Default)]
pub struct ParamSet<T> {
    names: Vec<String>,
    tensors: Vec<Tensor<T>>,
    index: HashMap<String, usize>,
}

impl<T: Scalar> ParamSet<T> {
    pub fn new() -> Self {
        Self {
            names: Vec::new(),
            tensors: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn insert(&mut self, name: &str, tensor: Tensor<T>) -> Result<()> {
        if self.index.contains_key(name) {
            return Err(CoreError::BuildError {
                node: name.to_string(),
                reason: "duplicate parameter".into(),
            });
        }
        self.index.insert(name.to_string(), self.names.len());
        self.names.push(name.to_string());
        self.tensors.push(tensor.with_requires_grad(true));
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Tensor<T>> {
        self.index.get(name).map(|&i| &self.tensors[i])
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor<T>> {
        let i = *self.index.get(name)?;
        Some(&mut self.tensors[i])
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor<T>)> {
        self.names
            .iter()
            .map(|n| n.as_str())
            .zip(self.tensors.iter())
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn tensors(&self) -> &[Tensor<T>] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor<T>] {
        &mut self.tensors
    }

    pub fn numel(&self) -> usize {
        self.tensors.iter().map(|t| t.numel()).sum()
    }

    /// Merge another set into this one; duplicate names are an error.
    pub fn absorb(&mut self, other: ParamSet<T>) -> Result<()> {
        for (name, tensor) in other.names.into_iter().zip(other.tensors) {
            self.insert(&name, tensor)?;
        }
        Ok(())
    }

    pub fn cast<U: Scalar>(&self) -> ParamSet<U> {
        let mut out = ParamSet::new();
        for (name, t) in self.iter() {
            out.insert(name, t.cast()).expect("unique names preserved");
        }
        out
    }

    /// FNV-1a over the little-endian f32 image of all tensors in order.
    /// Used to assert that frozen weights were not touched.
    pub fn content_hash(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        let mut eat = |b: u8| {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        };
        for (name, t) in self.iter() {
            name.bytes().for_each(&mut eat);
            for v in t.data() {
                (v.to_f64_lossy() as f32)
                    .to_le_bytes()
                    .iter()
                    .for_each(|&b| eat(b));
            }
        }
        h
    }
}

/// Materialize a graph's declared parameters. Each parameter gets its own RNG
/// stream derived from `(seed, name)`, so values do not depend on declaration
/// order.
pub fn init_params<T: Scalar>(graph: &Graph, seed: u64) -> ParamSet<T> {
    let mut set = ParamSet::new();
    for (name, id, init) in graph.param_decls() {
        let shape = graph.shape_of(*id);
        let tensor = match *init {
            Init::Zeros => Tensor::zeros(shape),
            Init::Ones => Tensor::full(shape, T::one()),
            Init::Normal(std) => {
                let mut rng = seed_stream(seed, name, 0);
                let mut t = Tensor::randn(shape, &mut rng);
                t.scale(T::cast(std));
                t
            }
            Init::KaimingFanIn => {
                let fan_in: usize = shape[1..].iter().product::<usize>().max(1);
                let std = (2.0 / fan_in as f64).sqrt();
                let mut rng = seed_stream(seed, name, 0);
                let mut t = Tensor::randn(shape, &mut rng);
                t.scale(T::cast(std));
                t
            }
        };
        set.insert(name, tensor).expect("graph enforces unique names");
    }
    set
}
