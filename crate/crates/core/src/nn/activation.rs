use super::{Layer, Mode, Param, Parameterized};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

pub fn relu<S: Scalar>(input: &Tensor<S>) -> Tensor<S> {
    input.map(|v| if v > S::zero() { v } else { S::zero() })
}

/// Passes the gradient where the forward input was strictly positive.
pub fn relu_backward<S: Scalar>(input: &Tensor<S>, grad_output: &Tensor<S>) -> Result<Tensor<S>> {
    if input.shape() != grad_output.shape() {
        return Err(Error::shape(
            "relu backward",
            format!("{} vs {}", input.shape(), grad_output.shape()),
        ));
    }
    let mut dx = grad_output.clone();
    for (d, &x) in dx.data_mut().iter_mut().zip(input.data()) {
        if x <= S::zero() {
            *d = S::zero();
        }
    }
    Ok(dx)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Relu;

impl<S: Scalar> Parameterized<S> for Relu {
    fn visit_params(&self, _: &str, _: &mut dyn FnMut(&str, &Param<S>)) {}
    fn visit_params_mut(&mut self, _: &str, _: &mut dyn FnMut(&str, &mut Param<S>)) {}
}

impl<S: Scalar> Layer<S> for Relu {
    type Cache = Tensor<S>;

    fn forward(&mut self, input: &Tensor<S>, _mode: Mode) -> Result<(Tensor<S>, Tensor<S>)> {
        Ok((relu(input), input.clone()))
    }

    fn backward(&mut self, cache: &Tensor<S>, grad_output: &Tensor<S>) -> Result<Tensor<S>> {
        relu_backward(cache, grad_output)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::grad_check;
    use crate::tensor::Shape;

    #[test]
    fn clamps_negatives_and_zero_subgradient() {
        let x = Tensor::from_vec(Shape::new(1, 1, 3), vec![-1.0, 0.0, 2.0]).unwrap();
        assert_eq!(relu(&x).data(), &[0.0, 0.0, 2.0]);
        let dy = Tensor::filled(x.shape(), 1.0);
        assert_eq!(relu_backward(&x, &dy).unwrap().data(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn all_negative_input_kills_output_and_gradient() {
        let x = Tensor::filled(Shape::new(2, 2, 3), -0.5f64);
        assert!(relu(&x).data().iter().all(|&v| v == 0.0));
        let dx = relu_backward(&x, &Tensor::filled(x.shape(), 3.0)).unwrap();
        assert!(dx.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gradient_matches_finite_differences_away_from_kink() {
        let x = Tensor::from_fn(Shape::new(2, 2, 6), |b, c, t| {
            let v = ((b * 7 + c * 3 + t * 5) % 9) as f64 - 4.0;
            if v == 0.0 { 0.37 } else { v * 0.25 }
        });
        let report = grad_check(&Relu, &x, Mode::Train, 1e-5, 1).unwrap();
        assert!(report.max_rel_error <= 1e-4, "{report:?}");
    }
}
