use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{Shape, Tensor};

/// Row-wise softmax of a `[batch, classes]` logit matrix.
pub fn softmax<S: Scalar>(logits: &Tensor<S>) -> Tensor<S> {
    let classes = logits.shape().channels;
    let mut out = logits.clone();
    for row in out.data_mut().chunks_mut(classes) {
        let max = row.iter().fold(S::neg_infinity(), |m, &v| m.max(v));
        let mut total = S::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            total += *v;
        }
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    out
}

/// Mean negative log-likelihood of `labels` under the softmax of `logits`,
/// with its gradient `(softmax − onehot) / B`.
///
/// For two classes this is the binary cross-entropy with `p(y)` the softmax
/// probability of class 1.
pub fn softmax_cross_entropy<S: Scalar>(logits: &Tensor<S>, labels: &[usize]) -> Result<(S, Tensor<S>)> {
    let shape = logits.shape();
    if shape.time != 1 {
        return Err(Error::shape("cross entropy", format!("logits must be [B, classes], got {shape}")));
    }
    let (batch, classes) = (shape.batch, shape.channels);
    if labels.is_empty() {
        return Err(Error::InvalidArgument("cross entropy over an empty batch".into()));
    }
    if labels.len() != batch {
        return Err(Error::shape("cross entropy", format!("{} labels for batch of {batch}", labels.len())));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
        return Err(Error::InvalidArgument(format!("label {bad} outside [0, {classes})")));
    }
    let inv_b = 1.0 / batch as f64;
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(batch * classes);
    for (row, &label) in logits.data().chunks(classes).zip(labels) {
        let max = row.iter().fold(f64::NEG_INFINITY, |m, v| m.max(v.as_f64()));
        let sum_exp: f64 = row.iter().map(|v| (v.as_f64() - max).exp()).sum();
        let log_z = max + sum_exp.ln();
        loss -= row[label].as_f64() - log_z;
        for (c, v) in row.iter().enumerate() {
            let p = (v.as_f64() - log_z).exp();
            let target = if c == label { 1.0 } else { 0.0 };
            grad.push(S::of((p - target) * inv_b));
        }
    }
    Ok((
        S::of(loss * inv_b),
        Tensor::from_vec(Shape::new(batch, classes, 1), grad)?,
    ))
}
