use crate::error::{Error, Result};

/// Dense row-major array with a gradient buffer of the same size.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    values: Vec<f64>,
    grad: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != values.len() {
            return Err(Error::Shape(format!(
                "shape {shape:?} needs {expected} values, got {}",
                values.len()
            )));
        }
        let grad = vec![0.0; values.len()];
        Ok(Tensor {
            shape,
            values,
            grad,
        })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Tensor {
            shape,
            values: vec![0.0; n],
            grad: vec![0.0; n],
        }
    }

    /// Rank-1 tensor.
    pub fn vector(values: Vec<f64>) -> Self {
        let n = values.len();
        Tensor {
            shape: vec![n],
            grad: vec![0.0; n],
            values,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn grad(&self) -> &[f64] {
        &self.grad
    }

    pub fn grad_mut(&mut self) -> &mut [f64] {
        &mut self.grad
    }

    /// Values and gradient borrowed together, for optimizer updates.
    pub fn split_mut(&mut self) -> (&mut [f64], &[f64]) {
        (&mut self.values, &self.grad)
    }

    /// Values read-only with a writable gradient, for backprop.
    pub fn values_and_grad_mut(&mut self) -> (&[f64], &mut [f64]) {
        (&self.values, &mut self.grad)
    }

    pub fn zero_grad(&mut self) {
        self.grad.iter_mut().for_each(|g| *g = 0.0);
    }

    pub fn scale_grad(&mut self, factor: f64) {
        self.grad.iter_mut().for_each(|g| *g *= factor);
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn new_checks_length() {
        assert!(Tensor::new(vec![2, 3], vec![0.0; 6]).is_ok());
        assert!(Tensor::new(vec![2, 3], vec![0.0; 5]).is_err());
    }

    #[test]
    fn grad_buffer_tracks_values() {
        let mut t = Tensor::zeros(vec![4]);
        assert_eq!(t.grad().len(), 4);
        t.grad_mut()[1] = 2.0;
        t.scale_grad(0.5);
        assert_eq!(t.grad()[1], 1.0);
        t.zero_grad();
        assert!(t.grad().iter().all(|&g| g == 0.0));
    }
}
