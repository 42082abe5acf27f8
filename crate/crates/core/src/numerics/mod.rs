//! Dense linear algebra and optimizer substrate.

pub mod adam;
pub mod dense;
pub mod init;
pub mod matrix;

pub use adam::{adam_step, adam_step_params, AdamConfig, AdamState};
pub use dense::{DenseGrads, DenseLayer};
pub use init::{glorot_limit, glorot_uniform};
pub use matrix::{axpy, dot, matmul, norm, Matrix, Shape};

#[cfg(not(feature = "single-precision"))]
pub type Real = f64;
#[cfg(feature = "single-precision")]
pub type Real = f32;

/// Elementwise tanh.
pub fn tanh_vec(x: &[Real]) -> Vec<Real> {
    x.iter().map(|v| v.tanh()).collect()
}

/// A structured set of named parameter blocks that can be viewed flat.
///
/// Gradients use the same type as the parameters they belong to, so the
/// visit order doubles as the flat layout used by the optimizer and by
/// checkpoints.
pub trait ParamSet {
    fn visit(&self, f: &mut dyn FnMut(&str, &[Real]));
    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut [Real]));

    fn parameter_count(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_, b| n += b.len());
        n
    }

    fn flatten(&self) -> Vec<Real> {
        let mut out = Vec::with_capacity(self.parameter_count());
        self.visit(&mut |_, b| out.extend_from_slice(b));
        out
    }

    /// `self += other`, block by block. Both sets must have the same layout.
    fn add_assign(&mut self, other: &Self) {
        let flat = other.flatten();
        let mut offset = 0;
        self.visit_mut(&mut |_, b| {
            let n = b.len();
            for (x, y) in b.iter_mut().zip(&flat[offset..offset + n]) {
                *x += y;
            }
            offset += n;
        });
    }

    fn scale(&mut self, s: Real) {
        self.visit_mut(&mut |_, b| b.iter_mut().for_each(|v| *v *= s));
    }
}
