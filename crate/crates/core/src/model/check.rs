use super::network::EegInception;
use crate::error::Result;
use crate::nn::{finite_difference_error, softmax_cross_entropy, Layer, Mode, Parameterized};
use crate::tensor::Tensor;

/// Mean cross-entropy of the model on `(input, labels)` and its gradient
/// with respect to every parameter, flattened in visiting order. The model
/// itself is left untouched.
pub fn loss_and_gradient(
    model: &EegInception<f64>,
    input: &Tensor<f64>,
    labels: &[usize],
    mode: Mode,
) -> Result<(f64, Vec<f64>)> {
    let mut probe = model.clone();
    probe.zero_grad();
    let (logits, cache) = probe.forward(input, mode)?;
    let (loss, d_logits) = softmax_cross_entropy(&logits, labels)?;
    probe.backward(&cache, &d_logits)?;
    Ok((loss, probe.flat_grads()))
}

/// Cross-entropy of a copy of `model` whose parameters are `theta`.
pub fn loss_at(model: &EegInception<f64>, theta: &[f64], input: &Tensor<f64>, labels: &[usize], mode: Mode) -> Result<f64> {
    let mut probe = model.clone();
    probe.set_flat_params(theta)?;
    let (logits, _) = probe.forward(input, mode)?;
    Ok(softmax_cross_entropy(&logits, labels)?.0)
}

/// Max relative error between `analytic` and central differences of the
/// total loss over a seeded subset of `coordinates` parameters.
#[allow(clippy::too_many_arguments)]
pub fn check_model_gradient(
    model: &EegInception<f64>,
    input: &Tensor<f64>,
    labels: &[usize],
    mode: Mode,
    analytic: &[f64],
    h: f64,
    coordinates: usize,
    seed: u64,
) -> Result<f64> {
    let theta = model.flat_params();
    // validate once so the closure can unwrap
    loss_at(model, &theta, input, labels, mode)?;
    Ok(finite_difference_error(
        &theta,
        analytic,
        |t| loss_at(model, t, input, labels, mode).expect("forward succeeded at the base point"),
        h,
        coordinates,
        seed,
    ))
}
