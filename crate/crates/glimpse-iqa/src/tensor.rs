//! Dense row-major `f64` tensors.
//!
//! The invariants are small and load-bearing: `shape` product equals the
//! data length, and values stay finite. Non-finite values are a bug, so
//! constructors assert and the hot primitives recheck under
//! `debug_assertions`.

use rand::Rng;

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    /// Builds a tensor, checking the shape/length contract and finiteness.
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Self {
        let numel: usize = shape.iter().product();
        assert_eq!(
            numel,
            data.len(),
            "shape {:?} does not match data length {}",
            shape,
            data.len()
        );
        assert!(
            data.iter().all(|v| v.is_finite()),
            "tensor contains non-finite values"
        );
        Tensor { shape, data }
    }

    /// Like `new` but skips the finiteness scan; used internally by ops
    /// that debug-assert instead.
    pub(crate) fn from_parts(shape: Vec<usize>, data: Vec<f64>) -> Self {
        let numel: usize = shape.iter().product();
        assert_eq!(numel, data.len());
        debug_assert!(
            data.iter().all(|v| v.is_finite()),
            "tensor contains non-finite values"
        );
        Tensor { shape, data }
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let numel: usize = shape.iter().product();
        Tensor { data: vec![0.0; numel], shape }
    }

    pub fn scalar(v: f64) -> Self {
        Tensor::new(vec![1], vec![v])
    }

    pub fn from_vec(data: Vec<f64>) -> Self {
        Tensor::new(vec![data.len()], data)
    }

    /// Fan-in-scaled uniform init, U(-sqrt(6/fan_in), sqrt(6/fan_in)).
    pub fn he_uniform<R: Rng>(shape: Vec<usize>, fan_in: usize, rng: &mut R) -> Self {
        let limit = (6.0 / fan_in.max(1) as f64).sqrt();
        let numel: usize = shape.iter().product();
        let data = (0..numel)
            .map(|_| (rng.gen::<f64>() * 2.0 - 1.0) * limit)
            .collect();
        Tensor { shape, data }
    }

    /// Uniform init in (-scale, scale); used for the location head, which
    /// wants to start near the image center.
    pub fn small_uniform<R: Rng>(shape: Vec<usize>, scale: f64, rng: &mut R) -> Self {
        let numel: usize = shape.iter().product();
        let data = (0..numel)
            .map(|_| (rng.gen::<f64>() * 2.0 - 1.0) * scale)
            .collect();
        Tensor { shape, data }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    /// The single value of a scalar tensor.
    pub fn item(&self) -> f64 {
        assert_eq!(self.data.len(), 1, "item() on non-scalar tensor");
        self.data[0]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}
