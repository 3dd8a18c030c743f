use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A named dense array stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

impl Tensor {
    pub fn zeros(name: impl Into<String>, shape: &[usize]) -> Self {
        Self {
            name: name.into(),
            shape: shape.to_vec(),
            values: vec![0.0; shape.iter().product()],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Ordered collection of named parameter tensors. Gradients use the same
/// type, one tensor per parameter.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ParameterSet {
    tensors: Vec<Tensor>,
}

impl ParameterSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a tensor and returns its index.
    pub fn push(&mut self, tensor: Tensor) -> usize {
        debug_assert_eq!(tensor.values.len(), tensor.shape.iter().product::<usize>());
        self.tensors.push(tensor);
        self.tensors.len() - 1
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            tensors: self.tensors.iter().map(|t| Tensor::zeros(t.name.clone(), &t.shape)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn tensor(&self, i: usize) -> &Tensor {
        &self.tensors[i]
    }

    pub fn tensor_mut(&mut self, i: usize) -> &mut Tensor {
        &mut self.tensors[i]
    }

    pub fn values(&self, i: usize) -> &[f64] {
        &self.tensors[i].values
    }

    pub fn values_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.tensors[i].values
    }

    /// Mutable access to two distinct tensors, `a < b`.
    pub fn pair_mut(&mut self, a: usize, b: usize) -> (&mut [f64], &mut [f64]) {
        assert!(a < b, "pair_mut needs a < b");
        let (lo, hi) = self.tensors.split_at_mut(b);
        (&mut lo[a].values, &mut hi[0].values)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Tensor> {
        self.tensors.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Tensor> {
        self.tensors.iter_mut()
    }

    /// Total number of scalar entries.
    pub fn num_values(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    pub fn shapes(&self) -> Vec<(String, Vec<usize>)> {
        self.tensors.iter().map(|t| (t.name.clone(), t.shape.clone())).collect()
    }

    /// Checks that `other` has the same tensor names and shapes.
    pub fn check_compatible(&self, other: &ParameterSet, context: &str) -> Result<()> {
        if self.tensors.len() != other.tensors.len() {
            return Err(Error::shape(
                format!("{context}: tensor count"),
                &[self.tensors.len()],
                &[other.tensors.len()],
            ));
        }
        for (a, b) in self.tensors.iter().zip(&other.tensors) {
            if a.shape != b.shape || a.name != b.name {
                return Err(Error::shape(format!("{context}: {} vs {}", a.name, b.name), &a.shape, &b.shape));
            }
            if b.values.len() != b.shape.iter().product::<usize>() {
                return Err(Error::shape(format!("{context}: {} values", b.name), &b.shape, &[b.values.len()]));
            }
        }
        Ok(())
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, other: &ParameterSet, scale: f64) {
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            for (x, y) in a.values.iter_mut().zip(&b.values) {
                *x += scale * y;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for t in &mut self.tensors {
            t.values.iter_mut().for_each(|v| *v *= factor);
        }
    }

    pub fn fill(&mut self, value: f64) {
        for t in &mut self.tensors {
            t.values.iter_mut().for_each(|v| *v = value);
        }
    }

    /// Name of the first tensor holding a NaN or infinity.
    pub fn first_non_finite(&self) -> Option<&str> {
        self.tensors
            .iter()
            .find(|t| t.values.iter().any(|v| !v.is_finite()))
            .map(|t| t.name.as_str())
    }

    /// Flat view `(tensor index, entry index)` for the `k`-th scalar.
    pub fn locate(&self, mut k: usize) -> Option<(usize, usize)> {
        for (i, t) in self.tensors.iter().enumerate() {
            if k < t.len() {
                return Some((i, k));
            }
            k -= t.len();
        }
        None
    }

    pub fn into_tensors(self) -> Vec<Tensor> {
        self.tensors
    }

    pub fn from_tensors(tensors: Vec<Tensor>) -> Result<Self> {
        for t in &tensors {
            let expected: usize = t.shape.iter().product();
            if expected != t.values.len() {
                return Err(Error::shape(format!("tensor {}", t.name), &[expected], &[t.values.len()]));
            }
        }
        Ok(Self { tensors })
    }
}
