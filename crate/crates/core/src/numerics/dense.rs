//! Fully-connected affine layer. Activations are applied by callers.

use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::init::glorot_uniform;
use crate::numerics::{Matrix, Real};

/// `y = W x + b` with `W` stored `out x in`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weights: Matrix,
    pub bias: Vec<Real>,
}

/// Gradients returned by [`DenseLayer::backward`].
#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrads {
    pub grad_x: Vec<Real>,
    pub grad_weights: Matrix,
    pub grad_bias: Vec<Real>,
}

impl DenseLayer {
    pub fn new(weights: Matrix, bias: Vec<Real>) -> Result<Self> {
        if weights.rows() != bias.len() {
            return Err(Error::shape(
                "DenseLayer::new",
                weights.shape(),
                format!("bias of length {}", bias.len()),
            ));
        }
        Ok(DenseLayer { weights, bias })
    }

    pub fn zeros(input: usize, output: usize) -> Self {
        DenseLayer {
            weights: Matrix::zeros(output, input),
            bias: vec![0.0; output],
        }
    }

    /// Glorot-uniform weights, zero bias.
    pub fn glorot<R: Rng + ?Sized>(input: usize, output: usize, rng: &mut R) -> Self {
        DenseLayer {
            weights: glorot_uniform(output, input, input, output, rng),
            bias: vec![0.0; output],
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn parameter_count(&self) -> usize {
        self.input_dim() * self.output_dim() + self.output_dim()
    }

    pub fn zeros_like(&self) -> Self {
        DenseLayer::zeros(self.input_dim(), self.output_dim())
    }

    pub fn forward(&self, x: &[Real]) -> Result<Vec<Real>> {
        if x.len() != self.input_dim() {
            return Err(Error::shape(
                "dense_forward",
                self.weights.shape(),
                format!("input of length {}", x.len()),
            ));
        }
        let mut out = vec![0.0; self.output_dim()];
        self.forward_into(x, &mut out);
        Ok(out)
    }

    pub(crate) fn forward_into(&self, x: &[Real], out: &mut [Real]) {
        self.weights.matvec_into(x, out);
        for (o, b) in out.iter_mut().zip(&self.bias) {
            *o += b;
        }
    }

    pub fn backward(&self, x: &[Real], grad_out: &[Real]) -> Result<DenseGrads> {
        if x.len() != self.input_dim() || grad_out.len() != self.output_dim() {
            return Err(Error::shape(
                "dense_backward",
                self.weights.shape(),
                format!("input {} / grad_out {}", x.len(), grad_out.len()),
            ));
        }
        let mut grads = self.zeros_like();
        let mut grad_x = vec![0.0; self.input_dim()];
        self.accumulate_backward(x, grad_out, &mut grads, &mut grad_x);
        Ok(DenseGrads {
            grad_x,
            grad_weights: grads.weights,
            grad_bias: grads.bias,
        })
    }

    /// Adds parameter gradients into `acc` and input gradients into `grad_x`.
    pub(crate) fn accumulate_backward(
        &self,
        x: &[Real],
        grad_out: &[Real],
        acc: &mut DenseLayer,
        grad_x: &mut [Real],
    ) {
        acc.weights.add_outer(grad_out, x);
        for (b, g) in acc.bias.iter_mut().zip(grad_out) {
            *b += g;
        }
        self.weights.tmatvec_acc(grad_out, grad_x);
    }

    /// Parameter-only variant of [`Self::accumulate_backward`].
    pub(crate) fn accumulate_param_grads(&self, x: &[Real], grad_out: &[Real], acc: &mut DenseLayer) {
        acc.weights.add_outer(grad_out, x);
        for (b, g) in acc.bias.iter_mut().zip(grad_out) {
            *b += g;
        }
    }

    pub(crate) fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[Real])) {
        f(&format!("{prefix}.w"), self.weights.data());
        f(&format!("{prefix}.b"), &self.bias);
    }

    pub(crate) fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut [Real])) {
        f(&format!("{prefix}.w"), self.weights.data_mut());
        f(&format!("{prefix}.b"), &mut self.bias);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_weights_return_bias() {
        let mut layer = DenseLayer::zeros(3, 2);
        layer.bias = vec![0.5, -1.5];
        assert_eq!(layer.forward(&[9.0, 8.0, 7.0]).unwrap(), vec![0.5, -1.5]);
    }

    #[test]
    fn identity_weights_pass_through() {
        let layer = DenseLayer::new(Matrix::identity(3), vec![0.0; 3]).unwrap();
        assert_eq!(layer.forward(&[1.0, -2.0, 3.0]).unwrap(), vec![1.0, -2.0, 3.0]);
        let g = layer.backward(&[1.0, -2.0, 3.0], &[0.3, 0.2, 0.1]).unwrap();
        assert_eq!(g.grad_x, vec![0.3, 0.2, 0.1]);
    }

    #[test]
    fn two_by_two_by_hand() {
        // [[1, 2], [3, 4]] * [5, 6] + [0.5, -1] = [17.5, 38]
        let w = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        let layer = DenseLayer::new(w, vec![0.5, -1.0]).unwrap();
        assert_eq!(layer.forward(&[5.0, 6.0]).unwrap(), vec![17.5, 38.0]);
    }

    #[test]
    fn zero_upstream_gives_zero_grads() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let layer = DenseLayer::glorot(2, 3, &mut rng);
        let g = layer.backward(&[0.3, -0.7], &[0.0; 3]).unwrap();
        assert!(g.grad_x.iter().all(|&v| v == 0.0));
        assert!(g.grad_weights.data().iter().all(|&v| v == 0.0));
        assert!(g.grad_bias.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn shape_errors() {
        let layer = DenseLayer::zeros(2, 3);
        assert!(matches!(layer.forward(&[1.0]), Err(Error::Shape { .. })));
        assert!(matches!(layer.backward(&[1.0, 2.0], &[1.0]), Err(Error::Shape { .. })));
        assert!(DenseLayer::new(Matrix::zeros(3, 2), vec![0.0; 2]).is_err());
    }

    #[cfg(not(feature = "single-precision"))]
    #[test]
    fn gradients_match_central_differences() {
        // Scalar objective L = c . (W x + b) with fixed random c.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut layer = DenseLayer::glorot(2, 3, &mut rng);
        layer.bias = vec![0.1, -0.2, 0.3];
        let x = vec![0.7, -1.3];
        let c = vec![0.9, -0.4, 1.7];
        let objective = |l: &DenseLayer, x: &[Real]| -> Real {
            l.forward(x).unwrap().iter().zip(&c).map(|(a, b)| a * b).sum()
        };
        let g = layer.backward(&x, &c).unwrap();
        let h = 1e-5;
        let rel = |a: Real, n: Real| (a - n).abs() / a.abs().max(n.abs()).max(1e-8);

        for i in 0..layer.weights.data().len() {
            let mut plus = layer.clone();
            plus.weights.data_mut()[i] += h;
            let mut minus = layer.clone();
            minus.weights.data_mut()[i] -= h;
            let num = (objective(&plus, &x) - objective(&minus, &x)) / (2.0 * h);
            assert!(rel(g.grad_weights.data()[i], num) < 1e-6);
        }
        for i in 0..3 {
            let mut plus = layer.clone();
            plus.bias[i] += h;
            let mut minus = layer.clone();
            minus.bias[i] -= h;
            let num = (objective(&plus, &x) - objective(&minus, &x)) / (2.0 * h);
            assert!(rel(g.grad_bias[i], num) < 1e-6);
        }
        for i in 0..2 {
            let mut xp = x.clone();
            xp[i] += h;
            let mut xm = x.clone();
            xm[i] -= h;
            let num = (objective(&layer, &xp) - objective(&layer, &xm)) / (2.0 * h);
            assert!(rel(g.grad_x[i], num) < 1e-6);
        }
    }
}
