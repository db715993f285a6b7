//! Dense rank-4 tensors, convolution, sub-pixel shuffling and reverse-mode gradients.

mod conv;
mod dense;
mod graph;
mod shuffle;

pub use conv::{conv2d, conv2d_input_adjoint, conv2d_kernel_grad, conv_output_len, Boundary};
pub use dense::{Shape, Tensor};
pub use graph::{Grads, Graph, Pullback, Var};
pub use shuffle::{pixel_shuffle, pixel_shuffle_index, pixel_shuffle_shape, pixel_unshuffle};

/// Compares an analytic gradient against central differences.
///
/// `f` returns the scalar value and its gradient at the given point. The result is
/// `max_i |analytic_i - fd_i| / max(1, |fd_i|)`.
pub fn grad_check(f: impl Fn(&Tensor) -> (f64, Tensor), x: &Tensor, eps: f64) -> f64 {
    let (_, analytic) = f(x);
    let mut probe = x.clone();
    let mut worst = 0.0f64;
    for i in 0..x.len() {
        let orig = probe.data()[i];
        probe.data_mut()[i] = orig + eps;
        let (fp, _) = f(&probe);
        probe.data_mut()[i] = orig - eps;
        let (fm, _) = f(&probe);
        probe.data_mut()[i] = orig;
        let fd = (fp - fm) / (2.0 * eps);
        let err = (analytic.data()[i] - fd).abs() / fd.abs().max(1.0);
        worst = worst.max(err);
    }
    worst
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;

    use super::*;

    #[test]
    fn sum_of_squares_is_exact() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let x = Tensor::random_uniform([1, 2, 3, 3], -2.0, 2.0, &mut rng);
        let err = grad_check(|x| (x.norm_sq(), x.scale(2.0)), &x, 1e-5);
        assert!(err < 1e-7, "{err}");
    }

    #[test]
    fn constant_function_has_zero_error() {
        let x = Tensor::full([1, 1, 2, 2], 0.3);
        let err = grad_check(|x| (4.2, Tensor::zeros(x.shape())), &x, 1e-5);
        assert_eq!(err, 0.0);
    }

    #[test]
    fn wrong_gradient_is_reported() {
        let x = Tensor::full([1, 1, 1, 3], 1.0);
        let err = grad_check(|x| (x.norm_sq(), x.scale(3.0)), &x, 1e-5);
        assert!(err > 0.4);
    }
}
