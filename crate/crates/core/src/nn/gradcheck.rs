//! Central finite-difference verification of analytic gradients.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Layer, Mode, Param};
use crate::error::Result;
use crate::tensor::Tensor;

/// Coordinates checked per tensor when it has more than this many entries.
pub const DEFAULT_COORDINATES: usize = 50;

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub input_error: f64,
    pub param_errors: Vec<(String, f64)>,
    pub coordinates: usize,
}

/// Rounding in `f(x ± h)` is taken as this many ulps of the larger value.
const ROUNDOFF_ULPS: f64 = 64.0;

/// Relative error of the analytic derivative against the central difference
/// `(up − down) / 2h`. A discrepancy within the difference quotient's own
/// rounding bound counts as zero: where the true gradient vanishes (a bias
/// feeding a train-mode batch norm) the quotient is nothing but rounding.
fn relative_error(analytic: f64, up: f64, down: f64, h: f64) -> f64 {
    let numeric = (up - down) / (2.0 * h);
    let roundoff = ROUNDOFF_ULPS * f64::EPSILON * up.abs().max(down.abs()) / (2.0 * h);
    let diff = (analytic - numeric).abs();
    if diff <= roundoff {
        0.0
    } else {
        diff / analytic.abs().max(numeric.abs()).max(1e-8)
    }
}

fn pick<R: Rng>(rng: &mut R, len: usize, max: usize) -> Vec<usize> {
    if len <= max {
        (0..len).collect()
    } else {
        let mut idx = sample(rng, len, max).into_vec();
        idx.sort_unstable();
        idx
    }
}

/// Max relative error between `analytic` and central differences of `f`
/// around `point`, over a seeded subset of at most `max_coords` coordinates.
pub fn finite_difference_error(
    point: &[f64],
    analytic: &[f64],
    mut f: impl FnMut(&[f64]) -> f64,
    h: f64,
    max_coords: usize,
    seed: u64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = point.to_vec();
    let mut worst: f64 = 0.0;
    for i in pick(&mut rng, point.len(), max_coords) {
        x[i] = point[i] + h;
        let up = f(&x);
        x[i] = point[i] - h;
        let down = f(&x);
        x[i] = point[i];
        worst = worst.max(relative_error(analytic[i], up, down, h));
    }
    worst
}

fn projected_loss<L: Layer<f64> + Clone>(layer: &L, input: &Tensor<f64>, mode: Mode, projection: &Tensor<f64>) -> f64 {
    let mut probe = layer.clone();
    let (y, _) = probe.forward(input, mode).expect("forward succeeded on the unperturbed input");
    y.data().iter().zip(projection.data()).map(|(a, b)| a * b).sum()
}

/// Checks input and parameter gradients of `layer` at `input` against
/// central differences with step `h`, using the scalar loss `Σ r·y` for a
/// seeded random projection `r`.
pub fn grad_check<L: Layer<f64> + Clone>(layer: &L, input: &Tensor<f64>, mode: Mode, h: f64, seed: u64) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut analytic_layer = layer.clone();
    analytic_layer.zero_grad();
    let (y, cache) = analytic_layer.forward(input, mode)?;
    let projection = Tensor::from_fn(y.shape(), |_, _, _| rng.gen_range(-1.0..1.0));
    let grad_input = analytic_layer.backward(&cache, &projection)?;

    let mut coordinates = 0;
    let input_coords = pick(&mut rng, input.data().len(), DEFAULT_COORDINATES);
    let mut input_error: f64 = 0.0;
    let mut x = input.clone();
    for &i in &input_coords {
        let orig = input.data()[i];
        x.data_mut()[i] = orig + h;
        let up = projected_loss(layer, &x, mode, &projection);
        x.data_mut()[i] = orig - h;
        let down = projected_loss(layer, &x, mode, &projection);
        x.data_mut()[i] = orig;
        input_error = input_error.max(relative_error(grad_input.data()[i], up, down, h));
    }
    coordinates += input_coords.len();

    let mut grads: Vec<(String, Vec<f64>)> = Vec::new();
    analytic_layer.visit_params("", &mut |name, p: &Param<f64>| grads.push((name.to_string(), p.grad.clone())));

    let mut param_errors = Vec::with_capacity(grads.len());
    for (index, (name, grad)) in grads.iter().enumerate() {
        let coords = pick(&mut rng, grad.len(), DEFAULT_COORDINATES);
        let mut worst: f64 = 0.0;
        for &i in &coords {
            let perturbed = |delta: f64| {
                let mut probe = layer.clone();
                let mut k = 0;
                probe.visit_params_mut("", &mut |_, p| {
                    if k == index {
                        p.value[i] += delta;
                    }
                    k += 1;
                });
                projected_loss(&probe, input, mode, &projection)
            };
            worst = worst.max(relative_error(grad[i], perturbed(h), perturbed(-h), h));
        }
        coordinates += coords.len();
        param_errors.push((name.clone(), worst));
    }

    let max_rel_error = param_errors.iter().map(|(_, e)| *e).fold(input_error, f64::max);
    Ok(GradCheckReport {
        max_rel_error,
        input_error,
        param_errors,
        coordinates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_noise_on_a_flat_direction_is_not_an_error() {
        // f depends on x[1] only through a shift that cancels in exact
        // arithmetic but not in floating point
        let f = |x: &[f64]| (x[0] * 3.0 + x[1]) - x[1] + 1e6;
        let err = finite_difference_error(&[0.3, 0.7], &[3.0, 0.0], f, 1e-5, 2, 0);
        assert!(err <= 1e-6, "{err}");
    }

    #[test]
    fn wrong_derivatives_are_reported() {
        let f = |x: &[f64]| x[0] * x[0] + x[1];
        assert!(finite_difference_error(&[2.0, 1.0], &[4.0, 1.0], f, 1e-5, 2, 0) < 1e-8);
        assert!(finite_difference_error(&[2.0, 1.0], &[4.0, 0.0], f, 1e-5, 2, 0) > 0.5);
        assert!(finite_difference_error(&[2.0, 1.0], &[4.4, 1.0], f, 1e-5, 2, 0) > 0.05);
    }
}
